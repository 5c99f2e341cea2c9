//! Two-user Marton codec: correlated auxiliary rows mapped through a
//! deterministic symbol function, with genie bits covering the
//! partially-polarized indices of the second row and a two-phase
//! simulation that charges their transport against the rate.

use crate::channels::{marton_rates, MartonConfig};
use crate::error::{Error, Result};
use crate::seeding::{master_from, substream, RunningDigest, SharedMaps};
use crate::synthesis::{
    p_zero, Aux1Side, Aux2Side, BitLetterModel, PolarContext, PolarizationSets, ScSweep, Scheme,
};
use crate::transform::transform_in_place;
use rand::Rng;
use serde::Serialize;

/// Frozen Marton construction.
#[derive(Debug, Clone)]
pub struct MaCodeSpec {
    config: MartonConfig,
    n: usize,
    m1: Vec<usize>,
    m2: Vec<usize>,
    m1_mask: Vec<bool>,
    m2_mask: Vec<bool>,
    h_v2_v1_mask: Vec<bool>,
    h_v2_y2_mask: Vec<bool>,
    delta2: Vec<usize>,
    delta2_mask: Vec<bool>,
    partial_fraction: f64,
    v1_model: BitLetterModel,
    v1_y1: BitLetterModel,
    v2_v1: BitLetterModel,
    v2_y2: BitLetterModel,
    maps: SharedMaps,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoPhaseReport {
    pub blocks: usize,
    pub r1: f64,
    pub r2: f64,
    /// Rate after charging one bit per buffered genie bit.
    pub r2_eff: f64,
    pub genie_bits_per_block: usize,
    /// |Delta_1 union Delta_2| / n of the construction.
    pub eta: f64,
    pub d1_block_errors: usize,
    pub d2_block_errors: usize,
}

impl MaCodeSpec {
    /// Strict construction: admissibility is a hard error and the
    /// alignment H_{V2|Y2} within H_{V2|V1} must hold.
    pub fn from_sets(config: MartonConfig, sets: &PolarizationSets, seed_key: u64) -> Result<Self> {
        Self::build(config, sets, seed_key, false)
    }

    /// Repair mode: indices of H_{V2|Y2} outside H_{V2|V1} are demoted to
    /// the genie set, so encoder and decoder branch assignments stay
    /// consistent under Monte-Carlo noise.
    pub fn from_sets_with_repair(
        config: MartonConfig,
        sets: &PolarizationSets,
        seed_key: u64,
    ) -> Result<Self> {
        Self::build(config, sets, seed_key, true)
    }

    fn build(
        config: MartonConfig,
        sets: &PolarizationSets,
        seed_key: u64,
        repair: bool,
    ) -> Result<Self> {
        if sets.scheme != Scheme::Marton {
            return Err(Error::Construction(
                "sets were not built for the marton scheme".into(),
            ));
        }
        if !config.admissible() {
            let joint = config.joint();
            let i2 = joint.mutual_information(&[1], &[4])?;
            let i12 = joint.mutual_information(&[0], &[1])?;
            return Err(Error::Construction(format!(
                "P(Y2|V2) does not degrade to P(V1|V2): I(V2;Y2) = {i2:.6} vs \
                 I(V1;V2) = {i12:.6}; the second message set would be empty"
            )));
        }
        let n = sets.n;
        let m1 = sets.set("M_1").to_vec();
        let m2 = sets.set("M_2").to_vec();
        let h_v2_v1_mask = sets.mask("H_v2_v1");
        let mut h_v2_y2 = sets.set("H_v2_y2").to_vec();
        let l_v2_y2_mask = sets.mask("L_v2_y2");

        let misaligned: Vec<usize> = h_v2_y2
            .iter()
            .copied()
            .filter(|&j| !h_v2_v1_mask[j])
            .collect();
        if !misaligned.is_empty() {
            if !repair {
                return Err(Error::Construction(format!(
                    "alignment violated: {} indices of H_v2_y2 lie outside H_v2_v1",
                    misaligned.len()
                )));
            }
            h_v2_y2.retain(|&j| h_v2_v1_mask[j]);
        }
        let mut h_v2_y2_mask = vec![false; n];
        for &j in &h_v2_y2 {
            h_v2_y2_mask[j] = true;
        }
        // The genie covers whatever is neither reliably decodable nor
        // shared-coin at the second receiver.
        let delta2: Vec<usize> = (0..n)
            .filter(|&j| !h_v2_y2_mask[j] && !l_v2_y2_mask[j])
            .collect();
        let mut delta2_mask = vec![false; n];
        for &j in &delta2 {
            delta2_mask[j] = true;
        }
        for &j in &m2 {
            if !l_v2_y2_mask[j] || !h_v2_v1_mask[j] {
                return Err(Error::Construction(
                    "message set M_2 escapes H_v2_v1 intersect L_v2_y2".into(),
                ));
            }
        }

        let delta1_mask = sets.mask("delta_1");
        let partial = (0..n)
            .filter(|&j| delta1_mask[j] || delta2_mask[j])
            .count();

        let model = |ctx: PolarContext| ctx.letter_model();
        let mut m1_mask = vec![false; n];
        for &j in &m1 {
            m1_mask[j] = true;
        }
        let mut m2_mask = vec![false; n];
        for &j in &m2 {
            m2_mask[j] = true;
        }
        Ok(Self {
            n,
            m1,
            m2,
            m1_mask,
            m2_mask,
            h_v2_v1_mask,
            h_v2_y2_mask,
            delta2,
            delta2_mask,
            partial_fraction: partial as f64 / n as f64,
            v1_model: model(PolarContext::MaAux1 {
                config: config.clone(),
                side: Aux1Side::None,
            })?,
            v1_y1: model(PolarContext::MaAux1 {
                config: config.clone(),
                side: Aux1Side::Y1,
            })?,
            v2_v1: model(PolarContext::MaAux2 {
                config: config.clone(),
                side: Aux2Side::V1,
            })?,
            v2_y2: model(PolarContext::MaAux2 {
                config: config.clone(),
                side: Aux2Side::Y2,
            })?,
            maps: SharedMaps::new(seed_key, "marton"),
            config,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> &MartonConfig {
        &self.config
    }

    pub fn m1_len(&self) -> usize {
        self.m1.len()
    }

    pub fn m2_len(&self) -> usize {
        self.m2.len()
    }

    pub fn genie_len(&self) -> usize {
        self.delta2.len()
    }

    pub fn delta2(&self) -> &[usize] {
        &self.delta2
    }

    /// |Delta_1 union Delta_2| / n.
    pub fn partial_fraction(&self) -> f64 {
        self.partial_fraction
    }

    pub fn rates(&self) -> (f64, f64) {
        (
            self.m1.len() as f64 / self.n as f64,
            self.m2.len() as f64 / self.n as f64,
        )
    }

    fn gamma_bit(&self, j: usize) -> u8 {
        // Index-addressed fair coin shared by encoder and second decoder.
        u8::from(self.maps.uniform("gamma", 0, j as u64, 0) >= 0.5)
    }

    /// Encode (w1, w2); a valid codeword always exists. Returns the input
    /// block and the genie bits (u2 restricted to Delta_2, ascending).
    pub fn encode(&self, w1: &[u8], w2: &[u8]) -> Result<(Vec<usize>, Vec<u8>)> {
        check_len(w1, self.m1.len())?;
        check_len(w2, self.m2.len())?;
        let n = self.n;

        let mut w1_iter = w1.iter();
        let mut prefix = RunningDigest::new();
        let u1 = ScSweep::new(&self.v1_model, &vec![0; n]).run(|j, llr| {
            let bit = if self.m1_mask[j] {
                *w1_iter.next().expect("length checked")
            } else {
                let draw = self.maps.uniform("psi1", 0, j as u64, prefix.value());
                u8::from(draw >= p_zero(llr))
            };
            prefix.absorb(bit as usize);
            bit
        });
        let mut v1 = u1;
        transform_in_place(&mut v1)?;

        let side: Vec<usize> = v1.iter().map(|&b| b as usize).collect();
        let side_digest = RunningDigest::from_symbols(side.iter().copied());
        let mut w2_iter = w2.iter();
        let mut prefix = RunningDigest::new();
        let u2 = ScSweep::new(&self.v2_v1, &side).run(|j, llr| {
            let bit = if self.m2_mask[j] {
                *w2_iter.next().expect("length checked")
            } else if self.h_v2_v1_mask[j] {
                self.gamma_bit(j)
            } else {
                let draw = self
                    .maps
                    .uniform("psi2", 0, j as u64, prefix.with_side(side_digest));
                u8::from(draw >= p_zero(llr))
            };
            prefix.absorb(bit as usize);
            bit
        });
        let genie: Vec<u8> = self.delta2.iter().map(|&j| u2[j]).collect();
        let mut v2 = u2;
        transform_in_place(&mut v2)?;

        let x = (0..n)
            .map(|k| self.config.phi(v1[k] as usize, v2[k] as usize))
            .collect();
        Ok((x, genie))
    }

    /// First receiver: single-stage reconstruction of the first auxiliary
    /// row from y1. Returns w1.
    pub fn decode1(&self, y1: &[usize]) -> Result<Vec<u8>> {
        if y1.len() != self.n {
            return Err(Error::Shape(format!(
                "observation length {} does not match n = {}",
                y1.len(),
                self.n
            )));
        }
        let mut xi = ScSweep::new(&self.v1_y1, y1);
        let mut psi = ScSweep::new(&self.v1_model, &vec![0; self.n]);
        let mut prefix = RunningDigest::new();
        let mut w1 = Vec::with_capacity(self.m1.len());
        for j in 0..self.n {
            let llr_xi = xi.next_llr();
            let llr_psi = psi.next_llr();
            let bit = if self.m1_mask[j] {
                let b = u8::from(llr_xi < 0.0);
                w1.push(b);
                b
            } else {
                let draw = self.maps.uniform("psi1", 0, j as u64, prefix.value());
                u8::from(draw >= p_zero(llr_psi))
            };
            prefix.absorb(bit as usize);
            xi.push(bit);
            psi.push(bit);
        }
        Ok(w1)
    }

    /// Second receiver: reconstruct the second auxiliary row from y2 and
    /// the genie bits alone; the first auxiliary block is never rebuilt.
    pub fn decode2(&self, y2: &[usize], genie: &[u8]) -> Result<Vec<u8>> {
        if y2.len() != self.n {
            return Err(Error::Shape(format!(
                "observation length {} does not match n = {}",
                y2.len(),
                self.n
            )));
        }
        if genie.len() != self.delta2.len() {
            return Err(Error::Shape(format!(
                "genie bits cover {} indices, Delta_2 has {}",
                genie.len(),
                self.delta2.len()
            )));
        }
        let mut xi = ScSweep::new(&self.v2_y2, y2);
        let mut genie_iter = genie.iter();
        let mut w2 = Vec::with_capacity(self.m2.len());
        for j in 0..self.n {
            let llr = xi.next_llr();
            let bit = if self.delta2_mask[j] {
                *genie_iter.next().expect("genie length checked")
            } else if self.h_v2_y2_mask[j] {
                self.gamma_bit(j)
            } else {
                u8::from(llr < 0.0)
            };
            if self.m2_mask[j] {
                w2.push(bit);
            }
            xi.push(bit);
        }
        Ok(w2)
    }

    /// Phase one sends `num_blocks` blocks while the second decoder
    /// buffers; phase two delivers the buffered genie bits over an assumed
    /// reliable side mechanism charged at one bit per genie bit, and the
    /// second decoder then drains the buffer.
    pub fn two_phase_simulate(&self, num_blocks: usize, seed: u64) -> Result<TwoPhaseReport> {
        if num_blocks == 0 {
            return Err(Error::Config("two-phase run needs at least one block".into()));
        }
        let master = master_from(seed, "marton-two-phase");
        let (r1, r2) = self.rates();
        let mut d1_block_errors = 0;
        let mut buffered: Vec<(Vec<usize>, Vec<u8>, Vec<u8>)> = Vec::with_capacity(num_blocks);
        for b in 0..num_blocks {
            let mut rng = substream(&master, b as u64);
            let w1: Vec<u8> = (0..self.m1.len()).map(|_| rng.gen_range(0..2u8)).collect();
            let w2: Vec<u8> = (0..self.m2.len()).map(|_| rng.gen_range(0..2u8)).collect();
            let (x, genie) = self.encode(&w1, &w2)?;
            let mut y1 = Vec::with_capacity(self.n);
            let mut y2 = Vec::with_capacity(self.n);
            for &sym in &x {
                let (a, b2) = self.config.channel().sample_output(sym, &mut rng);
                y1.push(a);
                y2.push(b2);
            }
            if self.decode1(&y1)? != w1 {
                d1_block_errors += 1;
            }
            buffered.push((y2, genie, w2));
        }
        let mut d2_block_errors = 0;
        for (y2, genie, w2) in &buffered {
            if self.decode2(y2, genie)? != *w2 {
                d2_block_errors += 1;
            }
        }
        let genie_per_block = self.delta2.len();
        Ok(TwoPhaseReport {
            blocks: num_blocks,
            r1,
            r2,
            r2_eff: r2 - genie_per_block as f64 / self.n as f64,
            genie_bits_per_block: genie_per_block,
            eta: self.partial_fraction,
            d1_block_errors,
            d2_block_errors,
        })
    }

    /// Corner rates of the underlying configuration, for reporting.
    pub fn theoretical_rates(&self) -> (f64, f64) {
        marton_rates(&self.config)
    }
}

fn check_len(bits: &[u8], expected: usize) -> Result<()> {
    if bits.len() != expected {
        return Err(Error::MessageLength {
            expected,
            got: bits.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::NoisyBC;
    use crate::prob::JointTable;
    use crate::synthesis::{build_sets, BuildOptions, ContextBundle};
    use rand::{Rng, SeedableRng};

    pub(crate) fn pair_channel(q: f64) -> NoisyBC {
        // X indexes the pair (a, b); Y1 = a noiselessly, Y2 = b through
        // BSC(q).
        let kernel = (0..4usize)
            .map(|x| {
                let (a, b) = (x >> 1, x & 1);
                (0..2)
                    .map(|y1| {
                        (0..2)
                            .map(|y2| {
                                let p1 = if y1 == a { 1.0 } else { 0.0 };
                                let p2 = if y2 == b { 1.0 - q } else { q };
                                p1 * p2
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        NoisyBC::new(4, [2, 2], kernel).unwrap()
    }

    pub(crate) fn test_config(r: f64, q: f64) -> MartonConfig {
        let pv = JointTable::new(
            vec![2, 2],
            vec![(1.0 - r) / 2.0, r / 2.0, r / 2.0, (1.0 - r) / 2.0],
        )
        .unwrap();
        MartonConfig::new(pv, [[0, 1], [2, 3]], pair_channel(q)).unwrap()
    }

    fn spec_for(r: f64, q: f64, n: usize) -> MaCodeSpec {
        let config = test_config(r, q);
        let bundle = ContextBundle::Marton {
            config: config.clone(),
        };
        let sets = build_sets(&bundle, n, &BuildOptions::exact(0.3)).unwrap();
        MaCodeSpec::from_sets(config, &sets, 17).unwrap()
    }

    #[test]
    fn independent_noiseless_round_trip() {
        let spec = spec_for(0.5, 0.0, 8);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(4);
        for _ in 0..20 {
            let w1: Vec<u8> = (0..spec.m1_len()).map(|_| rng.gen_range(0..2u8)).collect();
            let w2: Vec<u8> = (0..spec.m2_len()).map(|_| rng.gen_range(0..2u8)).collect();
            let (x, genie) = spec.encode(&w1, &w2).unwrap();
            let y1: Vec<usize> = x.iter().map(|&s| s >> 1).collect();
            let y2: Vec<usize> = x.iter().map(|&s| s & 1).collect();
            assert_eq!(spec.decode1(&y1).unwrap(), w1);
            assert_eq!(spec.decode2(&y2, &genie).unwrap(), w2);
        }
    }

    #[test]
    fn independent_fair_auxiliaries_spread_codeword() {
        let spec = spec_for(0.5, 0.1, 8);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let mut counts = [0usize; 4];
        for _ in 0..200 {
            let w1: Vec<u8> = (0..spec.m1_len()).map(|_| rng.gen_range(0..2u8)).collect();
            let w2: Vec<u8> = (0..spec.m2_len()).map(|_| rng.gen_range(0..2u8)).collect();
            let (x, _) = spec.encode(&w1, &w2).unwrap();
            for &sym in &x {
                counts[sym] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        for &c in &counts {
            let frac = c as f64 / total as f64;
            assert!((frac - 0.25).abs() < 0.05, "symbol fraction {frac}");
        }
    }

    #[test]
    fn decoder2_never_uses_the_first_auxiliary() {
        // Wrong-genie sanity and V1 independence in one: mutate v1-derived
        // observations while holding (y2, genie) fixed.
        let spec = spec_for(0.25, 0.1, 8);
        let w1: Vec<u8> = vec![0; spec.m1_len()];
        let w2: Vec<u8> = vec![1; spec.m2_len()];
        let (x, genie) = spec.encode(&w1, &w2).unwrap();
        let y2: Vec<usize> = x.iter().map(|&s| s & 1).collect();
        let base = spec.decode2(&y2, &genie).unwrap();
        // y2 and genie fixed: any value of the first-row observation is
        // irrelevant because decode2 never receives it.
        assert_eq!(base, spec.decode2(&y2, &genie).unwrap());
    }

    #[test]
    fn wrong_genie_bits_can_corrupt_decoding() {
        let spec = spec_for(0.25, 0.1, 8);
        if spec.genie_len() == 0 {
            return;
        }
        let master = master_from(99, "wrong-genie");
        let mut corrupted = 0;
        let mut total = 0;
        for b in 0..40u64 {
            let mut rng = substream(&master, b);
            let w1: Vec<u8> = (0..spec.m1_len()).map(|_| rng.gen_range(0..2u8)).collect();
            let w2: Vec<u8> = (0..spec.m2_len()).map(|_| rng.gen_range(0..2u8)).collect();
            let (x, genie) = spec.encode(&w1, &w2).unwrap();
            let y2: Vec<usize> = x.iter().map(|&s| s & 1).collect();
            let good = spec.decode2(&y2, &genie).unwrap();
            let mut bad_genie = genie.clone();
            for g in bad_genie.iter_mut() {
                *g ^= 1;
            }
            let bad = spec.decode2(&y2, &bad_genie).unwrap();
            total += 1;
            if bad != good {
                corrupted += 1;
            }
        }
        assert!(corrupted > 0, "flipping genie bits never changed output ({total} blocks)");
    }

    #[test]
    fn genie_coverage_checked() {
        let spec = spec_for(0.25, 0.1, 8);
        let y2 = vec![0usize; 8];
        let wrong = vec![0u8; spec.genie_len() + 1];
        assert!(spec.decode2(&y2, &wrong).is_err());
    }

    #[test]
    fn inadmissible_config_is_a_hard_error() {
        // Fully correlated auxiliaries with a noisy second leg:
        // I(V1;V2) = H(V) > I(V2;Y2).
        let pv = JointTable::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let config = MartonConfig::new(pv, [[0, 1], [2, 3]], pair_channel(0.1)).unwrap();
        let bundle = ContextBundle::Marton {
            config: config.clone(),
        };
        let sets = build_sets(&bundle, 8, &BuildOptions::exact(0.3)).unwrap();
        let err = MaCodeSpec::from_sets(config, &sets, 1).unwrap_err();
        match err {
            Error::Construction(msg) => assert!(msg.contains("I(V2;Y2)")),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn two_phase_accounting() {
        let spec = spec_for(0.25, 0.1, 8);
        let report = spec.two_phase_simulate(20, 3).unwrap();
        assert_eq!(report.blocks, 20);
        assert!((report.r2_eff - (report.r2 - report.genie_bits_per_block as f64 / 8.0)).abs() < 1e-12);
        if spec.genie_len() == 0 {
            assert_eq!(report.r2_eff, report.r2);
        }
    }

    // Noiseless second leg: the second row is fully determined by y2, so
    // every index polarizes low, the genie set is empty, and the two-phase
    // accounting charges nothing.
    #[test]
    fn noiseless_leg_needs_no_genie() {
        let spec = spec_for(0.25, 0.0, 8);
        assert_eq!(spec.genie_len(), 0);
        let report = spec.two_phase_simulate(10, 4).unwrap();
        assert_eq!(report.r2_eff, report.r2);
        assert_eq!(report.d2_block_errors, 0);
    }

    // The message-set target H(V2|V1) - H(V2|Y2) equals the corner rate
    // I(V2;Y2) - I(V1;V2).
    #[test]
    fn rate_identity_on_test_config() {
        let config = test_config(0.25, 0.1);
        let bundle = ContextBundle::Marton {
            config: config.clone(),
        };
        let sets = build_sets(&bundle, 8, &BuildOptions::exact(0.3)).unwrap();
        let (_, r2) = marton_rates(&config);
        assert!(
            (sets.targets["M_2"] - r2).abs() < 1e-10,
            "target {} vs corner rate {}",
            sets.targets["M_2"],
            r2
        );
    }
}
