//! The binary polar transform and its index arithmetic.
//!
//! The transform maps a length-n binary block `x` to `x * G_n` over GF(2),
//! where `G_n` is the log2(n)-fold Kronecker power of the 2x2 kernel
//! [[1,0],[1,1]] multiplied by the bit-reversal permutation matrix. `G_n` is
//! its own inverse, so the same routine encodes and inverts.

use crate::error::{Error, Result};

/// A length-n binary sequence, n a power of two, every element 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBlock {
    bits: Vec<u8>,
}

impl BitBlock {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        let n = bits.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidLength(n));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Shape("bit block contains non-binary symbol".into()));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }
}

/// Precomputed layout for one block length: levels and bit-reversal permutation.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    n: usize,
    levels: u32,
    bit_reversal: Vec<usize>,
}

impl TransformPlan {
    pub fn new(n: usize) -> Result<Self> {
        let perm = bit_reversal_permutation(n)?;
        Ok(Self {
            n,
            levels: n.trailing_zeros(),
            bit_reversal: perm,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn bit_reversal(&self) -> &[usize] {
        &self.bit_reversal
    }

    /// In-place `x <- x * G_n`: the butterfly passes followed by the
    /// bit-reversal permutation. O(n log n) symbol operations, never a
    /// materialized matrix.
    pub fn apply(&self, bits: &mut [u8]) {
        assert_eq!(bits.len(), self.n, "block length does not match plan");
        let n = self.n;
        let mut step = 1;
        while step < n {
            let mut base = 0;
            while base < n {
                for j in 0..step {
                    bits[base + j] ^= bits[base + j + step];
                }
                base += 2 * step;
            }
            step *= 2;
        }
        // x * B_n: output j takes the butterfly result at the bit-reversed index.
        apply_permutation(bits, &self.bit_reversal);
    }
}

fn apply_permutation(bits: &mut [u8], perm: &[usize]) {
    let tmp: Vec<u8> = perm.iter().map(|&src| bits[src]).collect();
    bits.copy_from_slice(&tmp);
}

/// The permutation sending position j to the index whose log2(n)-bit binary
/// representation is reversed. An involution on [n].
pub fn bit_reversal_permutation(n: usize) -> Result<Vec<usize>> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidLength(n));
    }
    let levels = n.trailing_zeros();
    Ok((0..n)
        .map(|j| (j.reverse_bits() >> (usize::BITS - levels)) & (n - 1))
        .collect())
}

/// `x * G_n` over the binary field. Linear, and an involution since
/// `G_n = G_n^{-1}`.
pub fn polar_transform(x: &BitBlock) -> BitBlock {
    let plan = TransformPlan::new(x.len()).expect("BitBlock guarantees a valid length");
    let mut bits = x.bits().to_vec();
    plan.apply(&mut bits);
    BitBlock { bits }
}

/// Transform a raw 0/1 slice in place. Callers that already hold validated
/// rows (the codecs) use this to avoid re-allocating blocks.
pub fn transform_in_place(bits: &mut [u8]) -> Result<()> {
    let plan = TransformPlan::new(bits.len())?;
    plan.apply(bits);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Dense Kronecker-power construction of G_n, used only as a test oracle.
    fn explicit_matrix(n: usize) -> Vec<Vec<u8>> {
        let mut m = vec![vec![1u8]];
        while m.len() < n {
            let s = m.len();
            let mut next = vec![vec![0u8; 2 * s]; 2 * s];
            for (i, row) in m.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    // kernel [[1,0],[1,1]] (x) m
                    next[i][j] = v;
                    next[i + s][j] = v;
                    next[i + s][j + s] = v;
                }
            }
            m = next;
        }
        // right-multiply by B_n: permute columns
        let perm = bit_reversal_permutation(n).unwrap();
        let mut out = vec![vec![0u8; n]; n];
        for i in 0..n {
            for j in 0..n {
                out[i][j] = m[i][perm[j]];
            }
        }
        out
    }

    fn matrix_apply(m: &[Vec<u8>], x: &[u8]) -> Vec<u8> {
        let n = x.len();
        (0..n)
            .map(|j| (0..n).fold(0u8, |acc, i| acc ^ (x[i] & m[i][j])))
            .collect()
    }

    #[test]
    fn bit_reversal_small_lengths() {
        assert_eq!(bit_reversal_permutation(2).unwrap(), vec![0, 1]);
        assert_eq!(bit_reversal_permutation(4).unwrap(), vec![0, 2, 1, 3]);
        assert_eq!(
            bit_reversal_permutation(8).unwrap(),
            vec![0, 4, 2, 6, 1, 5, 3, 7]
        );
    }

    #[test]
    fn bit_reversal_rejects_bad_lengths() {
        assert!(matches!(
            bit_reversal_permutation(3),
            Err(Error::InvalidLength(3))
        ));
        assert!(matches!(
            bit_reversal_permutation(0),
            Err(Error::InvalidLength(0))
        ));
        assert!(matches!(
            bit_reversal_permutation(1),
            Err(Error::InvalidLength(1))
        ));
    }

    #[test]
    fn bit_reversal_is_involution() {
        for n in [2usize, 4, 8, 64, 1024] {
            let p = bit_reversal_permutation(n).unwrap();
            for j in 0..n {
                assert_eq!(p[p[j]], j);
            }
        }
    }

    #[test]
    fn kernel_pair() {
        let x = BitBlock::new(vec![1, 0]).unwrap();
        assert_eq!(polar_transform(&x).bits(), &[1, 0]);
        let x = BitBlock::new(vec![0, 1]).unwrap();
        // (y1, y2) -> (y1 xor y2, y2)
        assert_eq!(polar_transform(&x).bits(), &[1, 1]);
        let x = BitBlock::new(vec![1, 1]).unwrap();
        assert_eq!(polar_transform(&x).bits(), &[0, 1]);
    }

    #[test]
    fn zeros_map_to_zeros() {
        for n in [2usize, 8, 64] {
            let z = BitBlock::zeros(n).unwrap();
            assert_eq!(polar_transform(&z).bits(), vec![0; n]);
        }
    }

    #[test]
    fn matches_explicit_matrix_exhaustively() {
        for n in [2usize, 4, 8] {
            let m = explicit_matrix(n);
            for code in 0..(1usize << n) {
                let x: Vec<u8> = (0..n).map(|k| ((code >> k) & 1) as u8).collect();
                let expect = matrix_apply(&m, &x);
                let got = polar_transform(&BitBlock::new(x).unwrap());
                assert_eq!(got.bits(), expect.as_slice(), "n={n} code={code}");
            }
        }
    }

    #[test]
    fn matches_explicit_matrix_n16_random() {
        let n = 16;
        let m = explicit_matrix(n);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
            let expect = matrix_apply(&m, &x);
            let got = polar_transform(&BitBlock::new(x).unwrap());
            assert_eq!(got.bits(), expect.as_slice());
        }
    }

    #[test]
    fn involution_n16_random() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = BitBlock::new((0..16).map(|_| rng.gen_range(0..2u8)).collect()).unwrap();
            assert_eq!(polar_transform(&polar_transform(&x)), x);
        }
    }

    #[test]
    fn involution_large() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(13);
        let n = 1 << 12;
        let x = BitBlock::new((0..n).map(|_| rng.gen_range(0..2u8)).collect()).unwrap();
        assert_eq!(polar_transform(&polar_transform(&x)), x);
    }

    proptest! {
        #[test]
        fn linear_over_gf2(seed in any::<u64>(), ln in 1usize..8) {
            let n = 1usize << ln;
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let a: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
            let b: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
            let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ta = polar_transform(&BitBlock::new(a).unwrap());
            let tb = polar_transform(&BitBlock::new(b).unwrap());
            let tsum = polar_transform(&BitBlock::new(sum).unwrap());
            let combined: Vec<u8> = ta.bits().iter().zip(tb.bits()).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(tsum.bits(), combined.as_slice());
        }

        #[test]
        fn involution_random_lengths(seed in any::<u64>(), ln in 1usize..10) {
            let n = 1usize << ln;
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let x = BitBlock::new((0..n).map(|_| rng.gen_range(0..2u8)).collect()).unwrap();
            prop_assert_eq!(polar_transform(&polar_transform(&x)), x);
        }
    }
}
