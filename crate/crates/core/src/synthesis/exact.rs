//! Brute-force oracle for synthesized bit-channels: enumerate every source
//! block, transform it, and accumulate the exact joint of each transformed
//! bit with its prefix and the full side sequence. Independent of the
//! recursive likelihood path, which is checked against it.

use super::{BitLetterModel, IndexStats, PolarContext};
use crate::error::{Error, Result};
use crate::transform::TransformPlan;

/// Enumeration guard: (2 * |W|)^n states at most.
pub const EXACT_STATE_GUARD: u128 = 1 << 24;
pub const EXACT_MAX_N: usize = 16;

/// Exact joint tables over (U^{1:j}, W^{1:n}), walked from j = n down to
/// j = 1 by marginalizing one transformed bit at a time.
pub struct ExactSynthesis {
    n: usize,
    w_size: usize,
    w_total: usize,
    /// Level table: index = u_code * w_total + w_code, with U(1) at the
    /// most significant bit of u_code and w in mixed radix, first letter
    /// most significant.
    buf: Vec<f64>,
    /// Current level j, 1-based; the table covers u^{1:j}.
    level: usize,
}

impl ExactSynthesis {
    pub fn from_context(ctx: &PolarContext, n: usize) -> Result<Self> {
        Self::from_model(&ctx.letter_model()?, n)
    }

    pub fn from_model(model: &BitLetterModel, n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidLength(n));
        }
        let w_size = model.w_size();
        let states = (2u128 * w_size as u128).pow(n as u32);
        if n > EXACT_MAX_N || states > EXACT_STATE_GUARD {
            return Err(Error::TooLarge {
                states,
                guard: EXACT_STATE_GUARD,
            });
        }
        let w_total = w_size.pow(n as u32);
        let mut buf = vec![0.0f64; (1usize << n) * w_total];
        let plan = TransformPlan::new(n)?;

        let mut t_row = vec![0u8; n];
        for t_code in 0..(1usize << n) {
            for (k, t) in t_row.iter_mut().enumerate() {
                *t = ((t_code >> k) & 1) as u8;
            }
            let mut u = t_row.clone();
            plan.apply(&mut u);
            let mut u_code = 0usize;
            for &bit in &u {
                u_code = (u_code << 1) | bit as usize;
            }
            accumulate_w(
                model,
                &t_row,
                &mut buf[u_code * w_total..(u_code + 1) * w_total],
                w_size,
            );
        }
        Ok(Self {
            n,
            w_size,
            w_total,
            buf,
            level: n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w_size(&self) -> usize {
        self.w_size
    }

    pub fn w_total(&self) -> usize {
        self.w_total
    }

    /// Current 0-based transformed index: the table's last bit.
    pub fn index(&self) -> usize {
        self.level - 1
    }

    /// Exact (Z, H) of U(index) given its prefix and the side sequence.
    pub fn stats(&self) -> (f64, f64) {
        let prefixes = 1usize << (self.level - 1);
        let mut z = 0.0;
        let mut h = 0.0;
        for p in 0..prefixes {
            let base0 = (2 * p) * self.w_total;
            let base1 = (2 * p + 1) * self.w_total;
            for w in 0..self.w_total {
                let p0 = self.buf[base0 + w];
                let p1 = self.buf[base1 + w];
                z += (p0 * p1).sqrt();
                let mass = p0 + p1;
                if mass <= 0.0 {
                    continue;
                }
                if p0 > 0.0 {
                    h += p0 * (mass / p0).log2();
                }
                if p1 > 0.0 {
                    h += p1 * (mass / p1).log2();
                }
            }
        }
        ((2.0 * z).clamp(0.0, 1.0), h.clamp(0.0, 1.0))
    }

    /// Conditional P(U(index) = 0 | prefix, w), None when the realization
    /// has zero mass. `prefix_code` packs u^{1:index} with the first bit
    /// most significant.
    pub fn conditional(&self, prefix_code: usize, w_code: usize) -> Option<(f64, f64)> {
        let p0 = self.buf[(2 * prefix_code) * self.w_total + w_code];
        let p1 = self.buf[(2 * prefix_code + 1) * self.w_total + w_code];
        let mass = p0 + p1;
        if mass <= 0.0 {
            None
        } else {
            Some((p0 / mass, p1 / mass))
        }
    }

    /// Mass of (prefix including the current bit, w).
    pub fn mass(&self, u_code: usize, w_code: usize) -> f64 {
        self.buf[u_code * self.w_total + w_code]
    }

    /// Marginalize out the current bit, moving to index - 1.
    pub fn step_down(&mut self) {
        assert!(self.level > 1, "already at the first index");
        let half = 1usize << (self.level - 1);
        for p in 0..half {
            for w in 0..self.w_total {
                self.buf[p * self.w_total + w] = self.buf[(2 * p) * self.w_total + w]
                    + self.buf[(2 * p + 1) * self.w_total + w];
            }
        }
        self.level -= 1;
        self.buf.truncate(half * self.w_total);
    }

    pub fn level(&self) -> usize {
        self.level
    }
}

/// DFS over side sequences for one fixed target row, accumulating the
/// product of single-letter joint masses into `out[w_code]`.
fn accumulate_w(model: &BitLetterModel, t_row: &[u8], out: &mut [f64], w_size: usize) {
    fn walk(
        model: &BitLetterModel,
        t_row: &[u8],
        out: &mut [f64],
        w_size: usize,
        k: usize,
        code: usize,
        weight: f64,
    ) {
        if weight == 0.0 {
            return;
        }
        if k == t_row.len() {
            out[code] += weight;
            return;
        }
        for w in 0..w_size {
            walk(
                model,
                t_row,
                out,
                w_size,
                k + 1,
                code * w_size + w,
                weight * model.prob(t_row[k], w),
            );
        }
    }
    walk(model, t_row, out, w_size, 0, 0, 1.0);
}

/// Exact conditional table for a single transformed index (0-based), plus
/// its exact Z and H.
pub struct ExactBitChannel {
    pub n: usize,
    pub index: usize,
    pub z: f64,
    pub h: f64,
    w_total: usize,
    table: Vec<f64>,
}

impl ExactBitChannel {
    pub fn conditional(&self, prefix_code: usize, w_code: usize) -> Option<(f64, f64)> {
        let p0 = self.table[(2 * prefix_code) * self.w_total + w_code];
        let p1 = self.table[(2 * prefix_code + 1) * self.w_total + w_code];
        let mass = p0 + p1;
        if mass <= 0.0 {
            None
        } else {
            Some((p0 / mass, p1 / mass))
        }
    }

    pub fn w_total(&self) -> usize {
        self.w_total
    }
}

/// Full enumeration of one bit-channel. The guard rejects contexts whose
/// state space exceeds 2^24.
pub fn exact_bit_channel(ctx: &PolarContext, n: usize, index: usize) -> Result<ExactBitChannel> {
    if index >= n {
        return Err(Error::Shape(format!("index {index} out of range for n = {n}")));
    }
    let mut syn = ExactSynthesis::from_context(ctx, n)?;
    while syn.index() > index {
        syn.step_down();
    }
    let (z, h) = syn.stats();
    Ok(ExactBitChannel {
        n,
        index,
        z,
        h,
        w_total: syn.w_total,
        table: syn.buf,
    })
}

/// Exact per-index statistics for every transformed index of a context.
pub fn exact_index_stats(ctx: &PolarContext, n: usize) -> Result<IndexStats> {
    let mut syn = ExactSynthesis::from_context(ctx, n)?;
    let mut z = vec![0.0; n];
    let mut h = vec![0.0; n];
    loop {
        let j = syn.index();
        let (zj, hj) = syn.stats();
        z[j] = zj;
        h[j] = hj;
        if j == 0 {
            break;
        }
        syn.step_down();
    }
    Ok(IndexStats {
        n,
        z,
        h,
        sample_count: 0,
        std_error: vec![0.0; n],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::DeterministicBC;
    use crate::prob::Pmf;
    use crate::synthesis::PolarContext;
    use approx::assert_abs_diff_eq;

    fn fair_copy_row() -> PolarContext {
        let ch = DeterministicBC::new(2, vec![vec![0, 1]]).unwrap();
        PolarContext::DetBcRow {
            channel: ch,
            px: Pmf::uniform(2),
            order: vec![0],
            position: 0,
        }
    }

    #[test]
    fn fair_source_xor_stays_fair() {
        let stats = exact_index_stats(&fair_copy_row(), 2).unwrap();
        assert_abs_diff_eq!(stats.z[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(stats.h[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(stats.z[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(stats.h[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn biased_source_polarizes_toward_extremes() {
        let ch = DeterministicBC::new(2, vec![vec![0, 1]]).unwrap();
        let ctx = PolarContext::DetBcRow {
            channel: ch,
            px: Pmf::new(vec![0.9, 0.1]).unwrap(),
            order: vec![0],
            position: 0,
        };
        let s8 = exact_index_stats(&ctx, 8).unwrap();
        let s2 = exact_index_stats(&ctx, 2).unwrap();
        // Polarization spreads the per-index entropies outward.
        let spread2 = s2.h.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - s2.h.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread8 = s8.h.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - s8.h.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread8 > spread2);
        // The chain rule is preserved: sum of conditional entropies equals
        // n * H(source).
        let total: f64 = s8.h.iter().sum();
        let single = crate::prob::binary_entropy(0.1).unwrap();
        assert_abs_diff_eq!(total, 8.0 * single, epsilon = 1e-10);
    }

    #[test]
    fn deterministic_row_has_zero_z() {
        let ch = DeterministicBC::new(2, vec![vec![0, 0]]).unwrap();
        let ctx = PolarContext::DetBcRow {
            channel: ch,
            px: Pmf::uniform(2),
            order: vec![0],
            position: 0,
        };
        let stats = exact_index_stats(&ctx, 4).unwrap();
        for j in 0..4 {
            assert_eq!(stats.z[j], 0.0);
            assert_eq!(stats.h[j], 0.0);
        }
    }

    #[test]
    fn size_guard_rejects_large_blocks() {
        let err = exact_index_stats(&fair_copy_row(), 1 << 5).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
    }

    #[test]
    fn single_bit_channel_matches_full_stats() {
        let ctx = fair_copy_row();
        let stats = exact_index_stats(&ctx, 4).unwrap();
        for j in 0..4 {
            let bc = exact_bit_channel(&ctx, 4, j).unwrap();
            assert_abs_diff_eq!(bc.z, stats.z[j], epsilon = 1e-14);
            assert_abs_diff_eq!(bc.h, stats.h[j], epsilon = 1e-14);
        }
    }
}
