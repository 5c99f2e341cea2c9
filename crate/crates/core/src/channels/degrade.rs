//! Stochastic degradation decided by exact linear feasibility.
//!
//! `k2 = k1 * P~` for some row-stochastic `P~` is a small linear program
//! with nonnegative variables, row-sum constraints, and matching
//! constraints. A phase-one simplex with Bland's rule decides feasibility;
//! ties within 1e-9 count as feasible so round-off cannot produce false
//! negatives on the boundary.

use crate::error::{Error, Result};

pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// True iff there exists a row-stochastic matrix `P~` with `k2 = k1 * P~`,
/// i.e. the channel `k2` equals `k1` followed by some garbling channel.
/// Both kernels are conditional tables with rows indexed by the common
/// conditioning alphabet.
pub fn is_stochastically_degraded(k1: &[Vec<f64>], k2: &[Vec<f64>]) -> Result<bool> {
    if k1.len() != k2.len() || k1.is_empty() {
        return Err(Error::Shape(format!(
            "conditioning alphabets differ: {} vs {}",
            k1.len(),
            k2.len()
        )));
    }
    let na = k1[0].len();
    let nb = k2[0].len();
    if k1.iter().any(|r| r.len() != na) || k2.iter().any(|r| r.len() != nb) {
        return Err(Error::Shape("ragged conditional table".into()));
    }
    let nw = k1.len();

    // Variables p[a][b], flattened a * nb + b.
    let nvars = na * nb;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();

    // Row-stochastic constraints: sum_b p[a][b] = 1.
    for a in 0..na {
        let mut row = vec![0.0; nvars];
        for b in 0..nb {
            row[a * nb + b] = 1.0;
        }
        rows.push(row);
        rhs.push(1.0);
    }
    // Matching constraints: sum_a k1[w][a] p[a][b] = k2[w][b].
    for w in 0..nw {
        for b in 0..nb {
            let mut row = vec![0.0; nvars];
            for a in 0..na {
                row[a * nb + b] = k1[w][a];
            }
            rows.push(row);
            rhs.push(k2[w][b]);
        }
    }
    Ok(phase_one_feasible(&mut rows, &mut rhs, FEASIBILITY_TOLERANCE))
}

/// Phase-one simplex: is {x >= 0 : Ax = b} nonempty? Minimizes the sum of
/// artificial variables with Bland's anti-cycling rule.
fn phase_one_feasible(rows: &mut [Vec<f64>], rhs: &mut [f64], tol: f64) -> bool {
    let m = rows.len();
    let n = rows[0].len();

    for i in 0..m {
        if rhs[i] < 0.0 {
            rhs[i] = -rhs[i];
            for v in rows[i].iter_mut() {
                *v = -*v;
            }
        }
    }

    // Tableau columns: n structural, m artificial, then rhs.
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&rows[i]);
            row[n + i] = 1.0;
            row[width - 1] = rhs[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();

    // Objective row for minimizing the artificial sum, expressed over the
    // current (all-artificial) basis.
    let mut obj = vec![0.0; width];
    for row in &t {
        for (o, v) in obj.iter_mut().zip(row) {
            *o += v;
        }
    }
    for j in n..n + m {
        obj[j] = 0.0;
    }

    let pivot_eps = 1e-12;
    loop {
        // Bland: smallest structural column with positive reduced cost.
        let Some(enter) = (0..n).find(|&j| obj[j] > tol) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > pivot_eps {
                let ratio = t[i][width - 1] / t[i][enter];
                if ratio < best - pivot_eps
                    || (ratio < best + pivot_eps
                        && leave.is_none_or(|l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            // Unbounded descent cannot happen for a phase-one objective;
            // treat defensively as no progress.
            break;
        };

        let piv = t[leave][enter];
        for v in t[leave].iter_mut() {
            *v /= piv;
        }
        for i in 0..m {
            if i != leave && t[i][enter].abs() > 0.0 {
                let f = t[i][enter];
                for j in 0..width {
                    t[i][j] -= f * t[leave][j];
                }
            }
        }
        let f = obj[enter];
        if f != 0.0 {
            for j in 0..width {
                obj[j] -= f * t[leave][j];
            }
        }
        basis[leave] = enter;
    }

    obj[width - 1] <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bec_bsc, bsc_pair};

    fn bsc(p: f64) -> Vec<Vec<f64>> {
        vec![vec![1.0 - p, p], vec![p, 1.0 - p]]
    }

    #[test]
    fn bsc_chain_is_degraded() {
        // Witness: BSC(s) with s = (0.2 - 0.05) / (1 - 0.1) = 1/6.
        assert!(is_stochastically_degraded(&bsc(0.05), &bsc(0.2)).unwrap());
        assert!(!is_stochastically_degraded(&bsc(0.2), &bsc(0.05)).unwrap());
    }

    #[test]
    fn channel_degrades_to_itself() {
        assert!(is_stochastically_degraded(&bsc(0.13), &bsc(0.13)).unwrap());
    }

    #[test]
    fn bec_bsc_example_thresholds() {
        // eps <= 2p: the BSC leg is degraded with respect to the BEC leg.
        let ch = bec_bsc(0.15, 0.1).unwrap();
        assert!(is_stochastically_degraded(&ch.leg(2), &ch.leg(1)).unwrap());
        // 2p < eps: no longer degraded.
        let ch = bec_bsc(0.3, 0.1).unwrap();
        assert!(!is_stochastically_degraded(&ch.leg(2), &ch.leg(1)).unwrap());
        // Boundary eps = 2p is feasible.
        let ch = bec_bsc(0.2, 0.1).unwrap();
        assert!(is_stochastically_degraded(&ch.leg(2), &ch.leg(1)).unwrap());
    }

    #[test]
    fn degradation_within_product_channel() {
        let ch = bsc_pair(0.05, 0.2).unwrap();
        assert!(is_stochastically_degraded(&ch.leg(1), &ch.leg(2)).unwrap());
        assert!(!is_stochastically_degraded(&ch.leg(2), &ch.leg(1)).unwrap());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = bsc(0.1);
        let b = vec![vec![1.0, 0.0]];
        assert!(is_stochastically_degraded(&a, &b).is_err());
    }
}
