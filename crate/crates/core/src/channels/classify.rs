//! Degradation-hierarchy classifier for two-user noisy DM-BCs.
//!
//! Degradation is decided exactly by linear feasibility. Less-noisy and
//! more-capable are quantified over all auxiliary / input distributions,
//! so they are decided by falsification sweeps over parameter grids; a
//! sweep pass is a "not falsified at this grid density" claim, and the
//! report carries the densities used.

use super::degrade::is_stochastically_degraded;
use super::NoisyBC;
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

const MI_MARGIN: f64 = 1e-9;

/// Position of a channel in the special-class hierarchy. Degradation
/// direction: `Degraded1To2` means receiver 1's marginal is a garbled
/// version of receiver 2's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BcClass {
    Degraded1To2,
    Degraded2To1,
    LessNoisy,
    MoreCapable,
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub class: BcClass,
    /// Receiver whose channel dominates, for the noisy classes.
    pub stronger: Option<usize>,
    pub degraded_1_to_2: bool,
    pub degraded_2_to_1: bool,
    /// Sweep verdicts are non-falsification claims at the stated densities.
    pub less_noisy_2_over_1: bool,
    pub less_noisy_1_over_2: bool,
    pub more_capable_2_over_1: bool,
    pub more_capable_1_over_2: bool,
    pub input_grid: usize,
    pub auxiliary_grid: usize,
}

/// Classify a binary-input two-user DM-BC.
pub fn classify(ch: &NoisyBC) -> Result<ClassifyReport> {
    classify_with_grids(ch, 1001, 101)
}

/// Classifier with configurable sweep densities: `input_grid` points over
/// P_X for more-capable, `aux_grid`^3 points over binary-V chains P_{VX}
/// for less-noisy.
pub fn classify_with_grids(ch: &NoisyBC, input_grid: usize, aux_grid: usize) -> Result<ClassifyReport> {
    if ch.x_size() != 2 {
        return Err(Error::Config(
            "classifier supports binary-input channels only".into(),
        ));
    }
    let leg1 = ch.leg(1);
    let leg2 = ch.leg(2);

    let degraded_1_to_2 = is_stochastically_degraded(&leg2, &leg1)?;
    let degraded_2_to_1 = is_stochastically_degraded(&leg1, &leg2)?;

    let mut report = ClassifyReport {
        class: BcClass::None,
        stronger: None,
        degraded_1_to_2,
        degraded_2_to_1,
        less_noisy_2_over_1: false,
        less_noisy_1_over_2: false,
        more_capable_2_over_1: false,
        more_capable_1_over_2: false,
        input_grid,
        auxiliary_grid: aux_grid,
    };

    if degraded_1_to_2 {
        report.class = BcClass::Degraded1To2;
        report.stronger = Some(2);
        return Ok(report);
    }
    if degraded_2_to_1 {
        report.class = BcClass::Degraded2To1;
        report.stronger = Some(1);
        return Ok(report);
    }

    report.less_noisy_2_over_1 = less_noisy_not_falsified(&leg2, &leg1, aux_grid);
    report.less_noisy_1_over_2 = less_noisy_not_falsified(&leg1, &leg2, aux_grid);
    if report.less_noisy_2_over_1 || report.less_noisy_1_over_2 {
        report.class = BcClass::LessNoisy;
        report.stronger = Some(if report.less_noisy_2_over_1 { 2 } else { 1 });
        return Ok(report);
    }

    report.more_capable_2_over_1 = more_capable_not_falsified(&leg2, &leg1, input_grid);
    report.more_capable_1_over_2 = more_capable_not_falsified(&leg1, &leg2, input_grid);
    if report.more_capable_2_over_1 || report.more_capable_1_over_2 {
        report.class = BcClass::MoreCapable;
        report.stronger = Some(if report.more_capable_2_over_1 { 2 } else { 1 });
    }
    Ok(report)
}

fn entropy(row: &[f64]) -> f64 {
    row.iter()
        .map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 })
        .sum()
}

/// I(A; Y) for binary A with P(A=0) = r and output rows per a-value.
fn mi_binary(r: f64, row0: &[f64], h0: f64, row1: &[f64], h1: f64) -> f64 {
    let hy: f64 = row0
        .iter()
        .zip(row1)
        .map(|(&a, &b)| {
            let p = r * a + (1.0 - r) * b;
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        })
        .sum();
    hy - r * h0 - (1.0 - r) * h1
}

/// Checks I(X; Y_a) >= I(X; Y_b) over the input grid; a false result is a
/// witnessed falsification.
fn more_capable_not_falsified(leg_a: &[Vec<f64>], leg_b: &[Vec<f64>], grid: usize) -> bool {
    let ha: Vec<f64> = leg_a.iter().map(|r| entropy(r)).collect();
    let hb: Vec<f64> = leg_b.iter().map(|r| entropy(r)).collect();
    (0..grid).into_par_iter().all(|i| {
        let r = i as f64 / (grid - 1) as f64;
        let ia = mi_binary(r, &leg_a[0], ha[0], &leg_a[1], ha[1]);
        let ib = mi_binary(r, &leg_b[0], hb[0], &leg_b[1], hb[1]);
        ia + MI_MARGIN >= ib
    })
}

/// Checks I(V; Y_a) >= I(V; Y_b) over all binary-V chains on a grid of
/// (P_V(0), P_{X=1|V=0}, P_{X=1|V=1}).
fn less_noisy_not_falsified(leg_a: &[Vec<f64>], leg_b: &[Vec<f64>], grid: usize) -> bool {
    let step = 1.0 / (grid - 1) as f64;
    // Output rows P(y|V=v) for each grid value of P(X=1|V=v).
    let mix = |leg: &[Vec<f64>], x1: f64| -> Vec<f64> {
        leg[0]
            .iter()
            .zip(&leg[1])
            .map(|(&p0, &p1)| (1.0 - x1) * p0 + x1 * p1)
            .collect()
    };
    let rows_a: Vec<Vec<f64>> = (0..grid).map(|i| mix(leg_a, i as f64 * step)).collect();
    let rows_b: Vec<Vec<f64>> = (0..grid).map(|i| mix(leg_b, i as f64 * step)).collect();
    let ents_a: Vec<f64> = rows_a.iter().map(|r| entropy(r)).collect();
    let ents_b: Vec<f64> = rows_b.iter().map(|r| entropy(r)).collect();

    (0..grid).into_par_iter().all(|ri| {
        let r = ri as f64 * step;
        for ia in 0..grid {
            for ib in 0..grid {
                let miv_a = mi_binary(r, &rows_a[ia], ents_a[ia], &rows_a[ib], ents_a[ib]);
                let miv_b = mi_binary(r, &rows_b[ia], ents_b[ia], &rows_b[ib], ents_b[ib]);
                if miv_a + MI_MARGIN < miv_b {
                    return false;
                }
            }
        }
        true
    })
}
