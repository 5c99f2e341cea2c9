//! Exact small-n total-variation diagnostic: build the perturbed measure Q
//! (uniform at message indices, true conditionals elsewhere) explicitly,
//! compute TV(P, Q), and compare against the divergence bound
//! sqrt(2 ln2 * sum over perturbed indices of (1 - H)).

use super::{exact_index_stats, ContextBundle, PolarizationSets};
use crate::error::{Error, Result};
use crate::prob::JointTable;
use crate::transform::TransformPlan;

const CHAIN_BIT_GUARD: usize = 20;

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TvDiagnostic {
    pub tv_exact: f64,
    pub kl_bound: f64,
    /// Divergence chain total sum over perturbed indices of (1 - H), bits.
    pub kl_sum_bits: f64,
}

/// Run the diagnostic for a construction at small n. The perturbed index
/// sets follow the scheme's measure: message sets for the deterministic
/// and superposition codes, and (M_1, full H_{V2|V1}) for Marton.
pub fn tv_diagnostic(
    bundle: &ContextBundle,
    sets: &PolarizationSets,
    n: usize,
) -> Result<TvDiagnostic> {
    if sets.n != n {
        return Err(Error::Shape(format!(
            "sets built for n = {}, diagnostic asked for {n}",
            sets.n
        )));
    }
    let (col_joint, uniform, kl_sum) = match bundle {
        ContextBundle::DetBc { channel, px, order } => {
            let joint = channel.output_joint(px)?;
            let col = joint.marginalize(order)?;
            let mut uniform = Vec::new();
            let mut kl_sum = 0.0;
            for (position, _) in order.iter().enumerate() {
                let name = format!("M_{}", position + 1);
                let mask = sets.mask(&name);
                let stats = exact_index_stats(&bundle.contexts()[position], n)?;
                for &j in sets.set(&name) {
                    kl_sum += 1.0 - stats.h[j];
                }
                uniform.push(mask);
            }
            (col, uniform, kl_sum)
        }
        ContextBundle::Superposition { chain } => {
            // Chain order: the cloud row U2 (from V) is built first, then
            // the satellite row U1 (from X) conditioned on it.
            let col = chain.joint().marginalize(&[0, 1])?;
            let contexts = bundle.contexts();
            let cloud_stats = exact_index_stats(&contexts[0], n)?; // sp_cloud
            let sat_stats = exact_index_stats(&contexts[3], n)?; // sp_satellite_v
            let mut kl_sum = 0.0;
            for &j in sets.set("M_2") {
                kl_sum += 1.0 - cloud_stats.h[j];
            }
            for &j in sets.set("M_1") {
                kl_sum += 1.0 - sat_stats.h[j];
            }
            (col, vec![sets.mask("M_2"), sets.mask("M_1")], kl_sum)
        }
        ContextBundle::Marton { config } => {
            let col = config.pv1v2().clone();
            let contexts = bundle.contexts();
            let v1_stats = exact_index_stats(&contexts[0], n)?; // ma_v1
            let v2_stats = exact_index_stats(&contexts[2], n)?; // ma_v2_v1
            let mut kl_sum = 0.0;
            for &j in sets.set("M_1") {
                kl_sum += 1.0 - v1_stats.h[j];
            }
            for &j in sets.set("H_v2_v1") {
                kl_sum += 1.0 - v2_stats.h[j];
            }
            (col, vec![sets.mask("M_1"), sets.mask("H_v2_v1")], kl_sum)
        }
    };
    let tv_exact = chained_tv(&col_joint, n, &uniform)?;
    Ok(TvDiagnostic {
        tv_exact,
        kl_bound: (2.0 * std::f64::consts::LN_2 * kl_sum).sqrt(),
        kl_sum_bits: kl_sum,
    })
}

/// Exact TV between the true joint of the transformed rows and the
/// perturbation that forces uniform bits at each chain's listed indices.
/// `col_joint` is the per-column letter joint over the chains in build
/// order (axis 0 built first); chain i's conditionals see chains < i as
/// full sequences.
pub fn chained_tv(col_joint: &JointTable, n: usize, uniform: &[Vec<bool>]) -> Result<f64> {
    let m = col_joint.axes();
    if col_joint.dims().iter().any(|&d| d != 2) {
        return Err(Error::Shape("chained tv needs binary letters".into()));
    }
    if uniform.len() != m || uniform.iter().any(|u| u.len() != n) {
        return Err(Error::Shape("one uniform mask of length n per chain".into()));
    }
    let total_bits = m * n;
    if total_bits > CHAIN_BIT_GUARD {
        return Err(Error::TooLarge {
            states: 1u128.checked_shl(total_bits as u32).unwrap_or(u128::MAX),
            guard: 1u128 << CHAIN_BIT_GUARD,
        });
    }
    let plan = TransformPlan::new(n)?;

    // P over the concatenated transformed rows, chain 0 in the top bits.
    let mut p = vec![0.0f64; 1usize << total_bits];
    let weights = col_joint.weights();
    let mut letters = vec![0usize; n];
    enumerate_columns(weights, &mut letters, 0, 1.0, &mut |letters, w| {
        let mut code = 0usize;
        let mut row = vec![0u8; n];
        for i in 0..m {
            for (k, r) in row.iter_mut().enumerate() {
                *r = ((letters[k] >> (m - 1 - i)) & 1) as u8;
            }
            plan.apply(&mut row);
            let mut u_code = 0usize;
            for &b in &row {
                u_code = (u_code << 1) | b as usize;
            }
            code = (code << n) | u_code;
        }
        p[code] += w;
    });

    // Prefix-mass tables per chain: levels[i][j] covers (chains < i full,
    // u_i^{1:j}), j = 0..n.
    let mut levels: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m);
    for i in 0..m {
        let keep_bits = (i + 1) * n;
        let drop_bits = total_bits - keep_bits;
        let mut base = vec![0.0f64; 1usize << keep_bits];
        for (code, &w) in p.iter().enumerate() {
            if w != 0.0 {
                base[code >> drop_bits] += w;
            }
        }
        let mut chain_levels = vec![Vec::new(); n + 1];
        chain_levels[n] = base;
        for j in (0..n).rev() {
            let up = &chain_levels[j + 1];
            let mut cur = vec![0.0f64; up.len() / 2];
            for (q, c) in cur.iter_mut().enumerate() {
                *c = up[2 * q] + up[2 * q + 1];
            }
            chain_levels[j] = cur;
        }
        levels.push(chain_levels);
    }

    // Q per tuple: product of per-bit conditionals with uniform overrides.
    let mut tv = 0.0;
    for (code, &pw) in p.iter().enumerate() {
        let mut q = 1.0f64;
        for i in 0..m {
            let top = code >> ((m - 1 - i) * n);
            for j in 1..=n {
                let with_bit = top >> (n - j);
                let cond = if uniform[i][j - 1] {
                    0.5
                } else {
                    let prefix_mass = levels[i][j - 1][with_bit >> 1];
                    if prefix_mass > 0.0 {
                        levels[i][j][with_bit] / prefix_mass
                    } else {
                        // Q's continuation on P-null prefixes is arbitrary;
                        // uniform keeps it a probability measure and the
                        // Pinsker bound intact.
                        0.5
                    }
                };
                q *= cond;
                if q == 0.0 {
                    break;
                }
            }
            if q == 0.0 {
                break;
            }
        }
        tv += (pw - q).abs();
    }
    Ok(tv)
}

fn enumerate_columns<F: FnMut(&[usize], f64)>(
    weights: &[f64],
    letters: &mut [usize],
    k: usize,
    acc: f64,
    emit: &mut F,
) {
    if acc == 0.0 {
        return;
    }
    if k == letters.len() {
        emit(letters, acc);
        return;
    }
    for c in 0..weights.len() {
        letters[k] = c;
        enumerate_columns(weights, letters, k + 1, acc * weights[c], emit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{blackwell, bsc_pair, DeterministicBC, SuperpositionChain};
    use crate::prob::Pmf;
    use crate::synthesis::{build_sets, BuildOptions, ContextBundle};

    #[test]
    fn empty_message_sets_mean_zero_tv() {
        let bundle = ContextBundle::det_bc(blackwell(), Pmf::uniform(3));
        let joint = blackwell().output_joint(&Pmf::uniform(3)).unwrap();
        let tv = chained_tv(&joint, 4, &[vec![false; 4], vec![false; 4]]).unwrap();
        assert!(tv < 1e-9, "tv = {tv}");
        drop(bundle);
    }

    #[test]
    fn uniform_iid_model_is_unperturbed_by_messages() {
        // Independent fair outputs: every conditional is already 1/2.
        let ch = DeterministicBC::new(4, vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1]]).unwrap();
        let joint = ch.output_joint(&Pmf::uniform(4)).unwrap();
        let tv = chained_tv(&joint, 4, &[vec![true; 4], vec![true; 4]]).unwrap();
        assert!(tv < 1e-9, "tv = {tv}");
    }

    #[test]
    fn diagnostic_inequality_holds_on_blackwell() {
        let bundle = ContextBundle::det_bc(blackwell(), Pmf::uniform(3));
        let sets = build_sets(&bundle, 8, &BuildOptions::exact(0.3)).unwrap();
        let d = tv_diagnostic(&bundle, &sets, 8).unwrap();
        assert!(d.tv_exact <= d.kl_bound + 1e-9, "{d:?}");
        assert!(d.tv_exact > 0.0);
    }

    #[test]
    fn diagnostic_inequality_holds_on_superposition() {
        let chain = SuperpositionChain::symmetric(bsc_pair(0.05, 0.2).unwrap(), 0.25).unwrap();
        let bundle = ContextBundle::Superposition { chain };
        let sets = build_sets(&bundle, 8, &BuildOptions::exact(0.3)).unwrap();
        let d = tv_diagnostic(&bundle, &sets, 8).unwrap();
        assert!(d.tv_exact <= d.kl_bound + 1e-9, "{d:?}");
    }

    #[test]
    fn guard_rejects_oversized_blocks() {
        let joint = blackwell().output_joint(&Pmf::uniform(3)).unwrap();
        assert!(chained_tv(&joint, 2048, &[vec![false; 2048], vec![false; 2048]]).is_err());
    }
}
