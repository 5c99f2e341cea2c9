//! Two-user superposition codec: a cloud row carries the coarse message to
//! both receivers, a satellite row superimposes the fine message for the
//! stronger one. The encoder builds the cloud sequence first, transforms it
//! into the auxiliary block, then builds the satellite sequence conditioned
//! on it. Decoder one reconstructs both rows from its observations; decoder
//! two reconstructs only the cloud row.

use crate::channels::{is_stochastically_degraded, SuperpositionChain};
use crate::error::{Error, Result};
use crate::seeding::{RunningDigest, SharedMaps};
use crate::synthesis::{
    encode_side, p_zero, BitLetterModel, CloudSide, PolarContext, PolarizationSets, SatelliteSide,
    ScSweep, Scheme,
};
use crate::transform::transform_in_place;

/// Encoder intermediates: the cloud row, the auxiliary block, the
/// satellite row, and the channel input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpEncodeDetail {
    pub u2: Vec<u8>,
    pub v: Vec<u8>,
    pub u1: Vec<u8>,
    pub x: Vec<u8>,
}

/// Frozen superposition construction.
#[derive(Debug, Clone)]
pub struct SpCodeSpec {
    chain: SuperpositionChain,
    n: usize,
    m1: Vec<usize>,
    m2: Vec<usize>,
    m1v: Vec<usize>,
    m1_mask: Vec<bool>,
    m2_mask: Vec<bool>,
    cloud: BitLetterModel,
    cloud_y1: BitLetterModel,
    cloud_y2: BitLetterModel,
    satellite_v: BitLetterModel,
    satellite_vy1: BitLetterModel,
    maps: SharedMaps,
    /// Rate lost to repair, bits per use; zero for strict construction.
    rate_loss: f64,
}

impl SpCodeSpec {
    /// Strict construction: refuses when M_2 is not nested in M_1v or the
    /// chain violates the degradation requirement.
    pub fn from_sets(
        chain: SuperpositionChain,
        sets: &PolarizationSets,
        seed_key: u64,
    ) -> Result<Self> {
        Self::build(chain, sets, seed_key, false)
    }

    /// Repair mode: shrinks M_2 to M_2 intersect M_1v and reports the rate
    /// loss. Monte-Carlo noise can break the nesting that exact degradation
    /// guarantees.
    pub fn from_sets_with_repair(
        chain: SuperpositionChain,
        sets: &PolarizationSets,
        seed_key: u64,
    ) -> Result<(Self, f64)> {
        let spec = Self::build(chain, sets, seed_key, true)?;
        let loss = spec.rate_loss;
        Ok((spec, loss))
    }

    fn build(
        chain: SuperpositionChain,
        sets: &PolarizationSets,
        seed_key: u64,
        repair: bool,
    ) -> Result<Self> {
        if sets.scheme != Scheme::Superposition {
            return Err(Error::Construction(
                "sets were not built for the superposition scheme".into(),
            ));
        }
        if !is_stochastically_degraded(&chain.leg_given_v(1), &chain.leg_given_v(2))? {
            return Err(Error::Construction(
                "chain violates the required degradation P(Y1|V) over P(Y2|V); \
                 polarization indices would not align"
                    .into(),
            ));
        }
        let n = sets.n;
        let m1 = sets.set("M_1").to_vec();
        let m1v = sets.set("M_1v").to_vec();
        let m1v_mask = sets.mask("M_1v");
        let mut m2 = sets.set("M_2").to_vec();
        let outside: Vec<usize> = m2.iter().copied().filter(|&j| !m1v_mask[j]).collect();
        let mut rate_loss = 0.0;
        if !outside.is_empty() {
            if !repair {
                return Err(Error::Construction(format!(
                    "nesting violated: {} indices of M_2 lie outside M_1v",
                    outside.len()
                )));
            }
            m2.retain(|&j| m1v_mask[j]);
            rate_loss = outside.len() as f64 / n as f64;
        }
        let mut m1_mask = vec![false; n];
        for &j in &m1 {
            m1_mask[j] = true;
        }
        let mut m2_mask = vec![false; n];
        for &j in &m2 {
            m2_mask[j] = true;
        }
        let model = |ctx: PolarContext| ctx.letter_model();
        Ok(Self {
            n,
            m1,
            m2,
            m1v,
            m1_mask,
            m2_mask,
            cloud: model(PolarContext::SpCloud {
                chain: chain.clone(),
                side: CloudSide::None,
            })?,
            cloud_y1: model(PolarContext::SpCloud {
                chain: chain.clone(),
                side: CloudSide::Y1,
            })?,
            cloud_y2: model(PolarContext::SpCloud {
                chain: chain.clone(),
                side: CloudSide::Y2,
            })?,
            satellite_v: model(PolarContext::SpSatellite {
                chain: chain.clone(),
                side: SatelliteSide::V,
            })?,
            satellite_vy1: model(PolarContext::SpSatellite {
                chain: chain.clone(),
                side: SatelliteSide::VY1,
            })?,
            maps: SharedMaps::new(seed_key, "superposition"),
            chain,
            rate_loss,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn chain(&self) -> &SuperpositionChain {
        &self.chain
    }

    pub fn m1_len(&self) -> usize {
        self.m1.len()
    }

    pub fn m2_len(&self) -> usize {
        self.m2.len()
    }

    pub fn m1v(&self) -> &[usize] {
        &self.m1v
    }

    pub fn rates(&self) -> (f64, f64) {
        (
            self.m1.len() as f64 / self.n as f64,
            self.m2.len() as f64 / self.n as f64,
        )
    }

    pub fn rate_loss(&self) -> f64 {
        self.rate_loss
    }

    fn psi2_bit(&self, j: usize, prefix: RunningDigest, llr: f64) -> u8 {
        let draw = self.maps.uniform("psi2", 0, j as u64, prefix.value());
        u8::from(draw >= p_zero(llr))
    }

    fn psi1_bit(&self, j: usize, prefix: RunningDigest, side: RunningDigest, llr: f64) -> u8 {
        let draw = self
            .maps
            .uniform("psi1", 0, j as u64, prefix.with_side(side));
        u8::from(draw >= p_zero(llr))
    }

    /// Encode (w1, w2) into a channel-input block.
    pub fn encode(&self, w1: &[u8], w2: &[u8]) -> Result<Vec<u8>> {
        Ok(self.encode_detail(w1, w2)?.x)
    }

    /// Encode keeping the intermediate rows, for diagnostics.
    pub fn encode_detail(&self, w1: &[u8], w2: &[u8]) -> Result<SpEncodeDetail> {
        check_len(w1, self.m1.len())?;
        check_len(w2, self.m2.len())?;
        let n = self.n;

        // Cloud row first: message bits at M_2, shared map elsewhere.
        let mut w2_iter = w2.iter();
        let mut prefix = RunningDigest::new();
        let u2 = ScSweep::new(&self.cloud, &vec![0; n]).run(|j, llr| {
            let bit = if self.m2_mask[j] {
                *w2_iter.next().expect("length checked")
            } else {
                self.psi2_bit(j, prefix, llr)
            };
            prefix.absorb(bit as usize);
            bit
        });
        let mut v = u2.clone();
        transform_in_place(&mut v)?;

        // Satellite row conditioned on the realized auxiliary block.
        let side: Vec<usize> = v.iter().map(|&b| b as usize).collect();
        let side_digest = RunningDigest::from_symbols(side.iter().copied());
        let mut w1_iter = w1.iter();
        let mut prefix = RunningDigest::new();
        let u1 = ScSweep::new(&self.satellite_v, &side).run(|j, llr| {
            let bit = if self.m1_mask[j] {
                *w1_iter.next().expect("length checked")
            } else {
                self.psi1_bit(j, prefix, side_digest, llr)
            };
            prefix.absorb(bit as usize);
            bit
        });
        let mut x = u1.clone();
        transform_in_place(&mut x)?;
        Ok(SpEncodeDetail { u2, v, u1, x })
    }

    /// First receiver: reconstruct the cloud row from y1, rebuild the
    /// auxiliary block, then reconstruct the satellite row. Returns w1.
    pub fn decode1(&self, y1: &[u8]) -> Result<Vec<u8>> {
        check_len(y1, self.n)?;
        let n = self.n;
        let y1_codes: Vec<usize> = y1.iter().map(|&b| b as usize).collect();

        // Stage 1: decode the cloud row with the channel-conditioned rule
        // at message indices and the shared map elsewhere. The shared map
        // needs the prefix-only conditional, so a second sweep runs in
        // lockstep.
        let mut xi = ScSweep::new(&self.cloud_y1, &y1_codes);
        let mut psi = ScSweep::new(&self.cloud, &vec![0; n]);
        let mut prefix = RunningDigest::new();
        let mut u2 = Vec::with_capacity(n);
        for j in 0..n {
            let llr_xi = xi.next_llr();
            let llr_psi = psi.next_llr();
            let bit = if self.m2_mask[j] {
                u8::from(llr_xi < 0.0)
            } else {
                self.psi2_bit(j, prefix, llr_psi)
            };
            prefix.absorb(bit as usize);
            xi.push(bit);
            psi.push(bit);
            u2.push(bit);
        }
        let mut v_hat = u2;
        transform_in_place(&mut v_hat)?;

        // Stage 2: satellite row given the reconstructed auxiliary block.
        let sat_dims = self.satellite_vy1.side_dims().to_vec();
        let side_vy1: Vec<usize> = (0..n)
            .map(|k| encode_side(&sat_dims, &[v_hat[k] as usize, y1[k] as usize]))
            .collect();
        let side_v: Vec<usize> = v_hat.iter().map(|&b| b as usize).collect();
        let side_digest = RunningDigest::from_symbols(side_v.iter().copied());
        let mut xi = ScSweep::new(&self.satellite_vy1, &side_vy1);
        let mut psi = ScSweep::new(&self.satellite_v, &side_v);
        let mut prefix = RunningDigest::new();
        let mut w1 = Vec::with_capacity(self.m1.len());
        for j in 0..n {
            let llr_xi = xi.next_llr();
            let llr_psi = psi.next_llr();
            let bit = if self.m1_mask[j] {
                let b = u8::from(llr_xi < 0.0);
                w1.push(b);
                b
            } else {
                self.psi1_bit(j, prefix, side_digest, llr_psi)
            };
            prefix.absorb(bit as usize);
            xi.push(bit);
            psi.push(bit);
        }
        Ok(w1)
    }

    /// Second receiver: reconstruct the cloud row from y2. Returns w2.
    pub fn decode2(&self, y2: &[u8]) -> Result<Vec<u8>> {
        if y2.len() != self.n {
            return Err(Error::Shape(format!(
                "observation length {} does not match n = {}",
                y2.len(),
                self.n
            )));
        }
        let n = self.n;
        let y2_codes: Vec<usize> = y2.iter().map(|&c| c as usize).collect();
        let mut xi = ScSweep::new(&self.cloud_y2, &y2_codes);
        let mut psi = ScSweep::new(&self.cloud, &vec![0; n]);
        let mut prefix = RunningDigest::new();
        let mut w2 = Vec::with_capacity(self.m2.len());
        for j in 0..n {
            let llr_xi = xi.next_llr();
            let llr_psi = psi.next_llr();
            let bit = if self.m2_mask[j] {
                let b = u8::from(llr_xi < 0.0);
                w2.push(b);
                b
            } else {
                self.psi2_bit(j, prefix, llr_psi)
            };
            prefix.absorb(bit as usize);
            xi.push(bit);
            psi.push(bit);
        }
        Ok(w2)
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
