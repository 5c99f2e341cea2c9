//! Synthesized bit-channel statistics and polarization-set construction.
//!
//! Every scheme reduces to the same primitive: a binary target letter T
//! observed jointly with a side letter W, repeated i.i.d. across a block,
//! with the polar transform applied to the target row. The modules here
//! compute the per-index conditional statistics of that row three ways:
//! an exact brute-force oracle for small n, the recursive
//! successive-cancellation likelihood, and Monte-Carlo sampling, and then
//! threshold them into the named polarization and message sets.

mod exact;
mod mc;
mod sweep;
mod tv;

pub use exact::{exact_bit_channel, exact_index_stats, ExactBitChannel, ExactSynthesis};
pub use mc::estimate_stats_mc;
pub use sweep::{combine_even, combine_odd, p_zero, Llr, ScSweep};
pub use tv::{tv_diagnostic, TvDiagnostic};

use crate::channels::{DeterministicBC, MartonConfig, SuperpositionChain};
use crate::error::{Error, Result};
use crate::prob::{JointTable, Pmf};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Single-letter joint of a binary target and a finite side letter; the
/// unit the sweep, the oracle, and the sampler all consume.
#[derive(Debug, Clone)]
pub struct BitLetterModel {
    side_dims: Vec<usize>,
    w_size: usize,
    /// joint[t][w] flattened as t * w_size + w
    joint: Vec<f64>,
    leaf: Vec<f64>,
    cumulative: Vec<f64>,
}

impl BitLetterModel {
    /// Project a joint table onto (target axis, side axes); the side axes
    /// are flattened row-major in the order given.
    pub fn from_joint(joint: &JointTable, target: usize, side: &[usize]) -> Result<Self> {
        let mut axes = vec![target];
        axes.extend_from_slice(side);
        let m = joint.marginalize(&axes)?;
        if m.dims()[0] != 2 {
            return Err(Error::Shape("synthesis target letter must be binary".into()));
        }
        let side_dims: Vec<usize> = m.dims()[1..].to_vec();
        let w_size: usize = side_dims.iter().product::<usize>().max(1);
        let weights = m.weights().to_vec();
        let leaf = (0..w_size)
            .map(|w| {
                let p0 = weights[w];
                let p1 = weights[w_size + w];
                if p0 == 0.0 && p1 == 0.0 {
                    // Unreachable side letter: uninformative by convention.
                    0.0
                } else if p1 == 0.0 {
                    f64::INFINITY
                } else if p0 == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    (p0 / p1).ln()
                }
            })
            .collect();
        let mut cumulative = Vec::with_capacity(2 * w_size);
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        Ok(Self {
            side_dims,
            w_size,
            joint: weights,
            leaf,
            cumulative,
        })
    }

    pub fn w_size(&self) -> usize {
        self.w_size
    }

    pub fn side_dims(&self) -> &[usize] {
        &self.side_dims
    }

    pub fn prob(&self, t: u8, w: usize) -> f64 {
        self.joint[t as usize * self.w_size + w]
    }

    /// log(P(T=0|w) / P(T=1|w)).
    pub fn leaf_llr(&self, w: usize) -> Llr {
        self.leaf[w]
    }

    /// Single-letter conditional entropy H(T|W) in bits.
    pub fn conditional_entropy(&self) -> f64 {
        let mut h = 0.0;
        for w in 0..self.w_size {
            let p0 = self.joint[w];
            let p1 = self.joint[self.w_size + w];
            let mass = p0 + p1;
            if mass <= 0.0 {
                continue;
            }
            for p in [p0, p1] {
                if p > 0.0 {
                    h += p * (mass / p).log2();
                }
            }
        }
        h
    }

    /// Draw one (t, w) letter.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (u8, usize) {
        let u: f64 = rng.gen();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        let idx = idx.min(2 * self.w_size - 1);
        ((idx / self.w_size) as u8, idx % self.w_size)
    }
}

/// Row-major code of a side-letter tuple in the model's side alphabet.
pub fn encode_side(dims: &[usize], vals: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), vals.len());
    dims.iter()
        .zip(vals)
        .fold(0usize, |acc, (&d, &v)| acc * d + v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    DetBc,
    Superposition,
    Marton,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::DetBc => "detbc",
            Scheme::Superposition => "sp",
            Scheme::Marton => "marton",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudSide {
    None,
    Y1,
    Y2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatelliteSide {
    V,
    VY1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aux1Side {
    None,
    Y1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aux2Side {
    V1,
    Y2,
}

/// One synthesized-row context: which transformed sequence, conditioned on
/// which realized side sequences.
#[derive(Debug, Clone)]
pub enum PolarContext {
    /// Output row at `position` in the processing order, given all earlier
    /// rows' full blocks.
    DetBcRow {
        channel: DeterministicBC,
        px: Pmf,
        order: Vec<usize>,
        position: usize,
    },
    /// Cloud row U2 (transform of V^n).
    SpCloud {
        chain: SuperpositionChain,
        side: CloudSide,
    },
    /// Satellite row U1 (transform of X^n).
    SpSatellite {
        chain: SuperpositionChain,
        side: SatelliteSide,
    },
    /// First auxiliary row (transform of V1^n).
    MaAux1 {
        config: MartonConfig,
        side: Aux1Side,
    },
    /// Second auxiliary row (transform of V2^n).
    MaAux2 {
        config: MartonConfig,
        side: Aux2Side,
    },
}

impl PolarContext {
    pub fn scheme(&self) -> Scheme {
        match self {
            PolarContext::DetBcRow { .. } => Scheme::DetBc,
            PolarContext::SpCloud { .. } | PolarContext::SpSatellite { .. } => {
                Scheme::Superposition
            }
            PolarContext::MaAux1 { .. } | PolarContext::MaAux2 { .. } => Scheme::Marton,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PolarContext::DetBcRow { position, .. } => format!("det_row_{position}"),
            PolarContext::SpCloud { side, .. } => match side {
                CloudSide::None => "sp_cloud".into(),
                CloudSide::Y1 => "sp_cloud_y1".into(),
                CloudSide::Y2 => "sp_cloud_y2".into(),
            },
            PolarContext::SpSatellite { side, .. } => match side {
                SatelliteSide::V => "sp_satellite_v".into(),
                SatelliteSide::VY1 => "sp_satellite_vy1".into(),
            },
            PolarContext::MaAux1 { side, .. } => match side {
                Aux1Side::None => "ma_v1".into(),
                Aux1Side::Y1 => "ma_v1_y1".into(),
            },
            PolarContext::MaAux2 { side, .. } => match side {
                Aux2Side::V1 => "ma_v2_v1".into(),
                Aux2Side::Y2 => "ma_v2_y2".into(),
            },
        }
    }

    /// The single-letter (target, side) joint this context synthesizes.
    pub fn letter_model(&self) -> Result<BitLetterModel> {
        match self {
            PolarContext::DetBcRow {
                channel,
                px,
                order,
                position,
            } => {
                let joint = channel.output_joint(px)?;
                let target = order[*position];
                let side: Vec<usize> = order[..*position].to_vec();
                BitLetterModel::from_joint(&joint, target, &side)
            }
            PolarContext::SpCloud { chain, side } => {
                // axes: V, X, Y1, Y2
                let joint = chain.joint();
                let axes: &[usize] = match side {
                    CloudSide::None => &[],
                    CloudSide::Y1 => &[2],
                    CloudSide::Y2 => &[3],
                };
                BitLetterModel::from_joint(&joint, 0, axes)
            }
            PolarContext::SpSatellite { chain, side } => {
                let joint = chain.joint();
                let axes: &[usize] = match side {
                    SatelliteSide::V => &[0],
                    SatelliteSide::VY1 => &[0, 2],
                };
                BitLetterModel::from_joint(&joint, 1, axes)
            }
            PolarContext::MaAux1 { config, side } => {
                // axes: V1, V2, X, Y1, Y2
                let joint = config.joint();
                let axes: &[usize] = match side {
                    Aux1Side::None => &[],
                    Aux1Side::Y1 => &[3],
                };
                BitLetterModel::from_joint(&joint, 0, axes)
            }
            PolarContext::MaAux2 { config, side } => {
                let joint = config.joint();
                let axes: &[usize] = match side {
                    Aux2Side::V1 => &[0],
                    Aux2Side::Y2 => &[4],
                };
                BitLetterModel::from_joint(&joint, 1, axes)
            }
        }
    }
}

/// Per-index synthesized-channel statistics for one context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexStats {
    pub n: usize,
    pub z: Vec<f64>,
    pub h: Vec<f64>,
    /// 0 marks exact mode.
    pub sample_count: usize,
    pub std_error: Vec<f64>,
}

impl IndexStats {
    pub fn is_exact(&self) -> bool {
        self.sample_count == 0
    }
}

/// How statistics are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

/// How estimates become sets. `Threshold` is the delta_n = 2^{-n^beta}
/// rule; `Quantile` ranks indices by Z and takes per-set counts derived
/// from the entropy targets backed off by `backoff`. The quantile selector
/// is a finite-n practical device and is reported distinctly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum SelectionRule {
    Threshold,
    Quantile { backoff: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub beta: f64,
    pub estimator: Estimator,
    pub selection: SelectionRule,
}

impl BuildOptions {
    pub fn exact(beta: f64) -> Self {
        Self {
            beta,
            estimator: Estimator::Exact,
            selection: SelectionRule::Threshold,
        }
    }

    pub fn monte_carlo(beta: f64, samples: usize, seed: u64) -> Self {
        Self {
            beta,
            estimator: Estimator::MonteCarlo { samples, seed },
            selection: SelectionRule::Threshold,
        }
    }

    pub fn with_quantile(mut self, backoff: f64) -> Self {
        self.selection = SelectionRule::Quantile { backoff };
        self
    }
}

/// A scheme instance: the models every context of the construction refers
/// to.
#[derive(Debug, Clone)]
pub enum ContextBundle {
    DetBc {
        channel: DeterministicBC,
        px: Pmf,
        order: Vec<usize>,
    },
    Superposition {
        chain: SuperpositionChain,
    },
    Marton {
        config: MartonConfig,
    },
}

impl ContextBundle {
    pub fn det_bc(channel: DeterministicBC, px: Pmf) -> Self {
        let order = (0..channel.receivers()).collect();
        ContextBundle::DetBc { channel, px, order }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            ContextBundle::DetBc { .. } => Scheme::DetBc,
            ContextBundle::Superposition { .. } => Scheme::Superposition,
            ContextBundle::Marton { .. } => Scheme::Marton,
        }
    }

    pub fn contexts(&self) -> Vec<PolarContext> {
        match self {
            ContextBundle::DetBc { channel, px, order } => (0..order.len())
                .map(|position| PolarContext::DetBcRow {
                    channel: channel.clone(),
                    px: px.clone(),
                    order: order.clone(),
                    position,
                })
                .collect(),
            ContextBundle::Superposition { chain } => vec![
                PolarContext::SpCloud {
                    chain: chain.clone(),
                    side: CloudSide::None,
                },
                PolarContext::SpCloud {
                    chain: chain.clone(),
                    side: CloudSide::Y1,
                },
                PolarContext::SpCloud {
                    chain: chain.clone(),
                    side: CloudSide::Y2,
                },
                PolarContext::SpSatellite {
                    chain: chain.clone(),
                    side: SatelliteSide::V,
                },
                PolarContext::SpSatellite {
                    chain: chain.clone(),
                    side: SatelliteSide::VY1,
                },
            ],
            ContextBundle::Marton { config } => vec![
                PolarContext::MaAux1 {
                    config: config.clone(),
                    side: Aux1Side::None,
                },
                PolarContext::MaAux1 {
                    config: config.clone(),
                    side: Aux1Side::Y1,
                },
                PolarContext::MaAux2 {
                    config: config.clone(),
                    side: Aux2Side::V1,
                },
                PolarContext::MaAux2 {
                    config: config.clone(),
                    side: Aux2Side::Y2,
                },
            ],
        }
    }
}

/// Frozen construction artifact: named polarization and message sets plus
/// the statistics and targets they came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolarizationSets {
    pub n: usize,
    pub scheme: Scheme,
    pub beta: f64,
    pub delta: f64,
    pub selection: SelectionRule,
    /// Per-context statistics keyed by context label.
    pub stats: BTreeMap<String, IndexStats>,
    /// Named index sets, sorted ascending.
    pub sets: BTreeMap<String, Vec<usize>>,
    /// Entropy targets for the message sets (bits per use).
    pub targets: BTreeMap<String, f64>,
    /// Achieved |M|/n per message set.
    pub rates: BTreeMap<String, f64>,
    /// |Delta_1 union Delta_2| / n for Marton constructions.
    pub partial_fraction: Option<f64>,
}

impl PolarizationSets {
    pub fn set(&self, name: &str) -> &[usize] {
        self.sets
            .get(name)
            .map(|v| v.as_slice())
            .unwrap_or_else(|| panic!("construction has no set named {name}"))
    }

    pub fn mask(&self, name: &str) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &j in self.set(name) {
            mask[j] = true;
        }
        mask
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sets serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn polarization_delta(n: usize, beta: f64) -> f64 {
    2f64.powf(-(n as f64).powf(beta))
}

/// Likelihood ratio P(U(index)=0 | prefix, side) / P(U(index)=1 | ...),
/// computed by the recursive sweep. `index` is 0-based, `prefix` holds the
/// realized bits before it, and `side` holds one realized side-letter code
/// per position. May be 0 or +inf for deterministic bits.
pub fn sc_likelihood(
    ctx: &PolarContext,
    index: usize,
    prefix: &[u8],
    side: &[usize],
) -> Result<f64> {
    let model = ctx.letter_model()?;
    sc_likelihood_model(&model, index, prefix, side)
}

/// Same, for an already-built letter model.
pub fn sc_likelihood_model(
    model: &BitLetterModel,
    index: usize,
    prefix: &[u8],
    side: &[usize],
) -> Result<f64> {
    let n = side.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidLength(n));
    }
    if index >= n {
        return Err(Error::Shape(format!("index {index} out of range for n = {n}")));
    }
    if prefix.len() != index {
        return Err(Error::Shape(format!(
            "prefix length {} does not match index {index}",
            prefix.len()
        )));
    }
    if let Some(&w) = side.iter().find(|&&w| w >= model.w_size()) {
        return Err(Error::Shape(format!(
            "side letter {w} outside alphabet of size {}",
            model.w_size()
        )));
    }
    let mut sweep = ScSweep::new(model, side);
    for &bit in prefix {
        sweep.next_llr();
        sweep.push(bit);
    }
    Ok(sweep.next_llr().exp())
}

fn stats_for(ctx: &PolarContext, n: usize, estimator: Estimator) -> Result<IndexStats> {
    match estimator {
        Estimator::Exact => exact_index_stats(ctx, n),
        Estimator::MonteCarlo { samples, seed } => estimate_stats_mc(ctx, n, samples, seed),
    }
}

fn high_set(stats: &IndexStats, delta: f64) -> Vec<usize> {
    (0..stats.n).filter(|&j| stats.z[j] >= 1.0 - delta).collect()
}

fn low_set(stats: &IndexStats, delta: f64) -> Vec<usize> {
    (0..stats.n).filter(|&j| stats.z[j] <= delta).collect()
}

fn top_k(stats: &IndexStats, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..stats.n).collect();
    idx.sort_by(|&a, &b| {
        stats.z[b]
            .partial_cmp(&stats.z[a])
            .expect("z estimates are finite")
            .then(a.cmp(&b))
    });
    let mut out: Vec<usize> = idx.into_iter().take(k).collect();
    out.sort_unstable();
    out
}

fn bottom_k(stats: &IndexStats, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..stats.n).collect();
    idx.sort_by(|&a, &b| {
        stats.z[a]
            .partial_cmp(&stats.z[b])
            .expect("z estimates are finite")
            .then(a.cmp(&b))
    });
    let mut out: Vec<usize> = idx.into_iter().take(k).collect();
    out.sort_unstable();
    out
}

fn quantile_count(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction.clamp(0.0, 1.0)).round() as usize
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mask: std::collections::HashSet<usize> = b.iter().copied().collect();
    a.iter().copied().filter(|j| mask.contains(j)).collect()
}

/// The `count` members of `pool` with the smallest combined error
/// exposure: decoder-side Z plus encoder-side entropy deficit, the two
/// per-index terms of the block-error decomposition. When the pool is
/// smaller than the quota, all of it is taken.
fn most_reliable(
    pool: &[usize],
    decoder_stats: &IndexStats,
    encoder_stats: &IndexStats,
    count: usize,
) -> Vec<usize> {
    let cost = |j: usize| decoder_stats.z[j] + (1.0 - encoder_stats.h[j]);
    let mut idx = pool.to_vec();
    idx.sort_by(|&a, &b| {
        cost(a)
            .partial_cmp(&cost(b))
            .expect("estimates are finite")
            .then(a.cmp(&b))
    });
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

fn complement(n: usize, sets: &[&[usize]]) -> Vec<usize> {
    let mut mask = vec![false; n];
    for s in sets {
        for &j in *s {
            mask[j] = true;
        }
    }
    (0..n).filter(|&j| !mask[j]).collect()
}

/// Select one context's H-type set (Z >= 1 - delta, or the top quantile).
fn select_high(
    stats: &IndexStats,
    delta: f64,
    selection: SelectionRule,
    target_h: f64,
) -> Vec<usize> {
    match selection {
        SelectionRule::Threshold => high_set(stats, delta),
        SelectionRule::Quantile { backoff } => {
            top_k(stats, quantile_count(stats.n, target_h - backoff))
        }
    }
}

/// Construct the scheme's polarization and message sets at block length n.
pub fn build_sets(bundle: &ContextBundle, n: usize, opts: &BuildOptions) -> Result<PolarizationSets> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidLength(n));
    }
    if !(0.0 < opts.beta && opts.beta < 0.5) {
        return Err(Error::Domain {
            value: opts.beta,
            domain: "(0, 1/2) polarization exponent",
        });
    }
    let delta = polarization_delta(n, opts.beta);
    let contexts = bundle.contexts();
    let mut stats = BTreeMap::new();
    let mut letter_h = BTreeMap::new();
    for ctx in &contexts {
        let label = ctx.label();
        let estimator = match opts.estimator {
            Estimator::Exact => Estimator::Exact,
            Estimator::MonteCarlo { samples, seed } => Estimator::MonteCarlo {
                samples,
                // Independent stream per context.
                seed: seed
                    ^ crate::seeding::RunningDigest::from_symbols(label.bytes().map(usize::from))
                        .value(),
            },
        };
        letter_h.insert(label.clone(), ctx.letter_model()?.conditional_entropy());
        stats.insert(label, stats_for(ctx, n, estimator)?);
    }

    let mut sets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut targets = BTreeMap::new();
    let mut rates = BTreeMap::new();
    let mut partial_fraction = None;

    match bundle {
        ContextBundle::DetBc { order, .. } => {
            for position in 0..order.len() {
                let label = format!("det_row_{position}");
                let h_tgt = letter_h[&label];
                let m = select_high(&stats[&label], delta, opts.selection, h_tgt);
                let name = format!("M_{}", position + 1);
                targets.insert(name.clone(), h_tgt);
                rates.insert(name.clone(), m.len() as f64 / n as f64);
                sets.insert(name, m);
            }
        }
        ContextBundle::Superposition { .. } => {
            let target_1 = letter_h["sp_satellite_v"] - letter_h["sp_satellite_vy1"];
            let target_2 = letter_h["sp_cloud"] - letter_h["sp_cloud_y2"];
            let (h_v, l_v_y1, l_v_y2, h_x_v, l_x_vy1, m_1, m_2);
            match opts.selection {
                SelectionRule::Threshold => {
                    h_v = high_set(&stats["sp_cloud"], delta);
                    l_v_y1 = low_set(&stats["sp_cloud_y1"], delta);
                    l_v_y2 = low_set(&stats["sp_cloud_y2"], delta);
                    h_x_v = high_set(&stats["sp_satellite_v"], delta);
                    l_x_vy1 = low_set(&stats["sp_satellite_vy1"], delta);
                    m_1 = intersect(&h_x_v, &l_x_vy1);
                    m_2 = intersect(&h_v, &l_v_y2);
                }
                SelectionRule::Quantile { backoff } => {
                    // Rank-selected sets, each fraction backed off by the
                    // slack; message sets take the lowest combined error
                    // exposure inside the defining intersections, up to
                    // the backed-off rate quota.
                    h_v = top_k(
                        &stats["sp_cloud"],
                        quantile_count(n, letter_h["sp_cloud"] - backoff),
                    );
                    l_v_y1 = bottom_k(
                        &stats["sp_cloud_y1"],
                        quantile_count(n, 1.0 - letter_h["sp_cloud_y1"] - backoff),
                    );
                    l_v_y2 = bottom_k(
                        &stats["sp_cloud_y2"],
                        quantile_count(n, 1.0 - letter_h["sp_cloud_y2"] - backoff),
                    );
                    h_x_v = top_k(
                        &stats["sp_satellite_v"],
                        quantile_count(n, letter_h["sp_satellite_v"] - backoff),
                    );
                    l_x_vy1 = bottom_k(
                        &stats["sp_satellite_vy1"],
                        quantile_count(n, 1.0 - letter_h["sp_satellite_vy1"] - backoff),
                    );
                    m_1 = most_reliable(
                        &intersect(&h_x_v, &l_x_vy1),
                        &stats["sp_satellite_vy1"],
                        &stats["sp_satellite_v"],
                        quantile_count(n, target_1 - backoff),
                    );
                    m_2 = most_reliable(
                        &intersect(&h_v, &l_v_y2),
                        &stats["sp_cloud_y2"],
                        &stats["sp_cloud"],
                        quantile_count(n, target_2 - backoff),
                    );
                }
            }
            let m_1v = intersect(&h_v, &l_v_y1);
            targets.insert("M_1".into(), target_1);
            targets.insert("M_2".into(), target_2);
            rates.insert("M_1".into(), m_1.len() as f64 / n as f64);
            rates.insert("M_2".into(), m_2.len() as f64 / n as f64);
            sets.insert("H_v".into(), h_v);
            sets.insert("L_v_y1".into(), l_v_y1);
            sets.insert("L_v_y2".into(), l_v_y2);
            sets.insert("H_x_v".into(), h_x_v);
            sets.insert("L_x_vy1".into(), l_x_vy1);
            sets.insert("M_1v".into(), m_1v);
            sets.insert("M_1".into(), m_1);
            sets.insert("M_2".into(), m_2);
        }
        ContextBundle::Marton { .. } => {
            let target_1 = letter_h["ma_v1"] - letter_h["ma_v1_y1"];
            let target_2 = letter_h["ma_v2_v1"] - letter_h["ma_v2_y2"];
            let (h_v1, l_v1_y1, h_v2_v1, l_v2_v1, h_v2_y2, l_v2_y2, m_1, m_2);
            match opts.selection {
                SelectionRule::Threshold => {
                    h_v1 = high_set(&stats["ma_v1"], delta);
                    l_v1_y1 = low_set(&stats["ma_v1_y1"], delta);
                    h_v2_v1 = high_set(&stats["ma_v2_v1"], delta);
                    l_v2_v1 = low_set(&stats["ma_v2_v1"], delta);
                    h_v2_y2 = high_set(&stats["ma_v2_y2"], delta);
                    l_v2_y2 = low_set(&stats["ma_v2_y2"], delta);
                    m_1 = intersect(&h_v1, &l_v1_y1);
                    m_2 = intersect(&h_v2_v1, &l_v2_y2);
                }
                SelectionRule::Quantile { backoff } => {
                    // The second row's polarization sets drive the shared
                    // coin, the decoding rule, and the genie coverage, so
                    // they are backed off on each side; the middle band
                    // becomes genie bits. Message sets take the most
                    // reliable indices inside the defining intersections.
                    h_v1 = top_k(&stats["ma_v1"], quantile_count(n, letter_h["ma_v1"]));
                    l_v1_y1 = bottom_k(
                        &stats["ma_v1_y1"],
                        quantile_count(n, 1.0 - letter_h["ma_v1_y1"]),
                    );
                    let (h, l) = quantile_high_low_pair(
                        &stats["ma_v2_v1"],
                        letter_h["ma_v2_v1"],
                        backoff,
                    );
                    h_v2_v1 = h;
                    l_v2_v1 = l;
                    let (h, l) = quantile_high_low_pair(
                        &stats["ma_v2_y2"],
                        letter_h["ma_v2_y2"],
                        backoff,
                    );
                    h_v2_y2 = h;
                    l_v2_y2 = l;
                    m_1 = most_reliable(
                        &intersect(&h_v1, &l_v1_y1),
                        &stats["ma_v1_y1"],
                        &stats["ma_v1"],
                        quantile_count(n, target_1 - backoff),
                    );
                    m_2 = most_reliable(
                        &intersect(&h_v2_v1, &l_v2_y2),
                        &stats["ma_v2_y2"],
                        &stats["ma_v2_v1"],
                        quantile_count(n, target_2 - backoff),
                    );
                }
            }
            let delta_1 = complement(n, &[&h_v2_v1, &l_v2_v1]);
            let delta_2 = complement(n, &[&h_v2_y2, &l_v2_y2]);
            let union: Vec<usize> = {
                let mut mask = vec![false; n];
                for &j in delta_1.iter().chain(&delta_2) {
                    mask[j] = true;
                }
                (0..n).filter(|&j| mask[j]).collect()
            };
            partial_fraction = Some(union.len() as f64 / n as f64);
            targets.insert("M_1".into(), target_1);
            targets.insert("M_2".into(), target_2);
            rates.insert("M_1".into(), m_1.len() as f64 / n as f64);
            rates.insert("M_2".into(), m_2.len() as f64 / n as f64);
            sets.insert("H_v1".into(), h_v1);
            sets.insert("L_v1_y1".into(), l_v1_y1);
            sets.insert("H_v2_v1".into(), h_v2_v1);
            sets.insert("L_v2_v1".into(), l_v2_v1);
            sets.insert("H_v2_y2".into(), h_v2_y2);
            sets.insert("L_v2_y2".into(), l_v2_y2);
            sets.insert("M_1".into(), m_1);
            sets.insert("M_2".into(), m_2);
            sets.insert("delta_1".into(), delta_1);
            sets.insert("delta_2".into(), delta_2);
        }
    }

    Ok(PolarizationSets {
        n,
        scheme: bundle.scheme(),
        beta: opts.beta,
        delta,
        selection: opts.selection,
        stats,
        sets,
        targets,
        rates,
        partial_fraction,
    })
}

/// Rank-selected H-set and L-set of the same context, each backed off by
/// `backoff` from its asymptotic fraction and kept disjoint; the middle
/// band is left for the partially-polarized sets.
fn quantile_high_low_pair(
    stats: &IndexStats,
    target_h: f64,
    backoff: f64,
) -> (Vec<usize>, Vec<usize>) {
    let high = top_k(stats, quantile_count(stats.n, target_h - backoff));
    let mut low = bottom_k(stats, quantile_count(stats.n, 1.0 - target_h - backoff));
    let hs: std::collections::HashSet<usize> = high.iter().copied().collect();
    low.retain(|j| !hs.contains(j));
    (high, low)
}

/// One failed subset or index-wise ordering check.
#[derive(Debug, Clone, Serialize)]
pub struct AlignmentViolation {
    pub relation: String,
    pub indices: Vec<usize>,
}

/// Outcome of the alignment checks; violations are data, not errors.
#[derive(Debug, Clone, Serialize)]
pub struct AlignmentReport {
    pub subset_violations: Vec<AlignmentViolation>,
    pub z_order_violations: Vec<AlignmentViolation>,
}

impl AlignmentReport {
    pub fn ok(&self) -> bool {
        self.subset_violations.is_empty() && self.z_order_violations.is_empty()
    }
}

/// Verify the nesting relations that degradation guarantees: for
/// superposition, M_2 inside M_1v; for Marton, L_{V2|V1} inside L_{V2|Y2}
/// and H_{V2|Y2} inside H_{V2|V1}. With exact statistics the index-wise
/// Bhattacharyya ordering (stronger observation never increases Z) is also
/// checked.
pub fn check_alignment(sets: &PolarizationSets) -> AlignmentReport {
    const Z_SLACK: f64 = 1e-12;
    let mut subset_violations = Vec::new();
    let mut z_order_violations = Vec::new();

    let mut subset = |name: &str, inner: &[usize], outer: &[usize]| {
        let mask: std::collections::HashSet<usize> = outer.iter().copied().collect();
        let bad: Vec<usize> = inner.iter().copied().filter(|j| !mask.contains(j)).collect();
        if !bad.is_empty() {
            subset_violations.push(AlignmentViolation {
                relation: name.into(),
                indices: bad,
            });
        }
    };

    match sets.scheme {
        Scheme::Superposition => {
            subset("M_2 within M_1v", sets.set("M_2"), sets.set("M_1v"));
            let strong = &sets.stats["sp_cloud_y1"];
            let weak = &sets.stats["sp_cloud_y2"];
            if strong.is_exact() && weak.is_exact() {
                let bad: Vec<usize> = (0..sets.n)
                    .filter(|&j| strong.z[j] > weak.z[j] + Z_SLACK)
                    .collect();
                if !bad.is_empty() {
                    z_order_violations.push(AlignmentViolation {
                        relation: "Z(U2|.,Y1) <= Z(U2|.,Y2)".into(),
                        indices: bad,
                    });
                }
            }
        }
        Scheme::Marton => {
            subset(
                "L_v2_v1 within L_v2_y2",
                sets.set("L_v2_v1"),
                sets.set("L_v2_y2"),
            );
            subset(
                "H_v2_y2 within H_v2_v1",
                sets.set("H_v2_y2"),
                sets.set("H_v2_v1"),
            );
            let strong = &sets.stats["ma_v2_y2"];
            let weak = &sets.stats["ma_v2_v1"];
            if strong.is_exact() && weak.is_exact() {
                let bad: Vec<usize> = (0..sets.n)
                    .filter(|&j| strong.z[j] > weak.z[j] + Z_SLACK)
                    .collect();
                if !bad.is_empty() {
                    z_order_violations.push(AlignmentViolation {
                        relation: "Z(U2|.,Y2) <= Z(U2|.,V1)".into(),
                        indices: bad,
                    });
                }
            }
        }
        Scheme::DetBc => {}
    }
    AlignmentReport {
        subset_violations,
        z_order_violations,
    }
}
