//! Successive-cancellation sweep: recursive computation of the conditional
//! distribution of each transformed bit given its prefix and the realized
//! side-information sequences.
//!
//! One sweep produces all n conditionals of a block in O(n log n) combine
//! operations. Likelihood ratios are carried as log-ratios with +inf/-inf
//! sentinels for deterministic bits; the odd-index combining rule
//! (L1*L2 + 1) / (L1 + L2) is evaluated through log-sum-exp so blocks of
//! length 2^10 and beyond do not underflow.

use super::BitLetterModel;

/// log(P(T=0|...)/P(T=1|...)); +inf when the bit is certainly 0.
pub type Llr = f64;

/// Combine for an odd transformed index: both sub-blocks still open.
pub fn combine_odd(a: Llr, b: Llr) -> Llr {
    if a.is_infinite() {
        return if a > 0.0 { b } else { -b };
    }
    if b.is_infinite() {
        return if b > 0.0 { a } else { -a };
    }
    softplus(a + b) - log_add_exp(a, b)
}

/// Combine for an even transformed index, after the paired odd bit is known.
pub fn combine_even(a: Llr, b: Llr, odd_bit: u8) -> Llr {
    let s = if odd_bit == 0 { a } else { -a };
    if s.is_infinite() && b.is_infinite() && s.signum() != b.signum() {
        // Contradictory deterministic evidence: only reachable when a
        // caller pushes bits inconsistent with the observations. Treat as
        // uninformative so the sweep stays total.
        return 0.0;
    }
    s + b
}

fn softplus(x: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { x } else { 0.0 };
    }
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m.is_infinite() {
        return m;
    }
    m + (-(a - b).abs()).exp().ln_1p()
}

/// P(T=0) implied by a log-likelihood ratio.
pub fn p_zero(llr: Llr) -> f64 {
    if llr == f64::INFINITY {
        1.0
    } else if llr == f64::NEG_INFINITY {
        0.0
    } else {
        1.0 / (1.0 + (-llr).exp())
    }
}

/// One block's successive conditional computation. Alternate `next_llr`
/// (the conditional of the current index given everything pushed so far)
/// with `push` (the realized bit at that index).
pub struct ScSweep {
    n: usize,
    leaf_llr: Vec<Llr>,
    // Perfect binary tree in heap order; node k has children 2k+1, 2k+2.
    xi1: Vec<Llr>,
    xi2: Vec<Llr>,
    odd_bit: Vec<u8>,
    phase: Vec<u8>,
    pos: usize,
    pending: bool,
}

impl ScSweep {
    /// `side` holds the realized side-information letter codes, one per
    /// position, in the model's side alphabet.
    pub fn new(model: &BitLetterModel, side: &[usize]) -> Self {
        let n = side.len();
        assert!(n.is_power_of_two() && n >= 1, "block length must be a power of two");
        let leaf_llr = side.iter().map(|&w| model.leaf_llr(w)).collect();
        let nodes = 2 * n - 1;
        Self {
            n,
            leaf_llr,
            xi1: vec![0.0; nodes],
            xi2: vec![0.0; nodes],
            odd_bit: vec![0; nodes],
            phase: vec![0; nodes],
            pos: 0,
            pending: false,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn next_llr(&mut self) -> Llr {
        assert!(self.pos < self.n, "sweep already consumed");
        assert!(!self.pending, "push the previous bit before advancing");
        self.pending = true;
        self.node_llr(0, self.n, 0)
    }

    pub fn push(&mut self, bit: u8) {
        assert!(self.pending, "compute the llr before pushing its bit");
        debug_assert!(bit <= 1);
        self.node_push(0, self.n, bit);
        self.pending = false;
        self.pos += 1;
    }

    /// Drive a whole block: `decide(index, llr) -> bit` for every index in
    /// order. Returns the realized block.
    pub fn run<F: FnMut(usize, Llr) -> u8>(mut self, mut decide: F) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let llr = self.next_llr();
            let bit = decide(j, llr);
            self.push(bit);
            out.push(bit);
        }
        out
    }

    fn node_llr(&mut self, node: usize, size: usize, leaf_lo: usize) -> Llr {
        if size == 1 {
            return self.leaf_llr[leaf_lo];
        }
        let half = size / 2;
        if self.phase[node] == 0 {
            let a = self.node_llr(2 * node + 1, half, leaf_lo);
            let b = self.node_llr(2 * node + 2, half, leaf_lo + half);
            self.xi1[node] = a;
            self.xi2[node] = b;
            combine_odd(a, b)
        } else {
            combine_even(self.xi1[node], self.xi2[node], self.odd_bit[node])
        }
    }

    fn node_push(&mut self, node: usize, size: usize, bit: u8) {
        if size == 1 {
            return;
        }
        if self.phase[node] == 0 {
            self.odd_bit[node] = bit;
            self.phase[node] = 1;
        } else {
            let half = size / 2;
            self.node_push(2 * node + 1, half, self.odd_bit[node] ^ bit);
            self.node_push(2 * node + 2, half, bit);
            self.phase[node] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::JointTable;
    use approx::assert_abs_diff_eq;

    fn fair_bit_model() -> BitLetterModel {
        let joint = JointTable::new(vec![2, 1], vec![0.5, 0.5]).unwrap();
        BitLetterModel::from_joint(&joint, 0, &[]).unwrap()
    }

    #[test]
    fn fair_source_stays_fair() {
        let model = fair_bit_model();
        let mut sweep = ScSweep::new(&model, &[0, 0]);
        assert_abs_diff_eq!(sweep.next_llr(), 0.0, epsilon = 1e-15);
        sweep.push(0);
        assert_abs_diff_eq!(sweep.next_llr(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn deterministic_source_gives_infinite_llr() {
        let joint = JointTable::new(vec![2, 1], vec![1.0, 0.0]).unwrap();
        let model = BitLetterModel::from_joint(&joint, 0, &[]).unwrap();
        let mut sweep = ScSweep::new(&model, &[0; 4]);
        for _ in 0..4 {
            let llr = sweep.next_llr();
            assert_eq!(llr, f64::INFINITY);
            sweep.push(0);
        }
    }

    #[test]
    fn biased_pair_matches_hand_calculation() {
        // T ~ Bernoulli(0.3) i.i.d., n = 2: U(1) = T1 xor T2, U(2) = T2.
        let joint = JointTable::new(vec![2, 1], vec![0.7, 0.3]).unwrap();
        let model = BitLetterModel::from_joint(&joint, 0, &[]).unwrap();
        let mut sweep = ScSweep::new(&model, &[0, 0]);
        let p_even = 0.7 * 0.7 + 0.3 * 0.3;
        assert_abs_diff_eq!(
            p_zero(sweep.next_llr()),
            p_even,
            epsilon = 1e-12
        );
        sweep.push(1);
        // Given U(1) = 1: P(U(2)=0) = P(T=(1,0)) / P(odd parity).
        let expect = (0.3 * 0.7) / (1.0 - p_even);
        assert_abs_diff_eq!(p_zero(sweep.next_llr()), expect, epsilon = 1e-12);
    }

    #[test]
    fn combine_edge_cases() {
        assert_eq!(combine_odd(f64::INFINITY, 3.0), 3.0);
        assert_eq!(combine_odd(f64::NEG_INFINITY, 3.0), -3.0);
        assert_eq!(combine_odd(f64::INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert_eq!(combine_odd(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::INFINITY);
        assert_eq!(combine_even(f64::INFINITY, 1.0, 0), f64::INFINITY);
        assert_eq!(combine_even(f64::INFINITY, 1.0, 1), f64::NEG_INFINITY);
        assert_eq!(combine_even(f64::INFINITY, f64::NEG_INFINITY, 0), 0.0);
        assert_abs_diff_eq!(combine_even(2.0, 1.5, 1), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn no_underflow_at_large_block() {
        let joint = JointTable::new(vec![2, 1], vec![0.99, 0.01]).unwrap();
        let model = BitLetterModel::from_joint(&joint, 0, &[]).unwrap();
        let n = 1 << 10;
        let sweep = ScSweep::new(&model, &vec![0; n]);
        let block = sweep.run(|_, llr| {
            assert!(!llr.is_nan());
            u8::from(llr < 0.0)
        });
        assert_eq!(block.len(), n);
    }
}
