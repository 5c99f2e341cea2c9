//! Experiment driver: code construction with caching, seeded block-error
//! simulation with per-trial substreams, rate-region boundary emission,
//! and versioned CSV / JSON persistence. Identical configs produce
//! byte-identical outputs regardless of worker count.

use crate::channels::{
    cover_rates, det_region_vertex, marton_doc, ModelDoc, SuperpositionChain,
};
use crate::detbc::{DetCodeSpec, DetMode};
use crate::error::{Error, Result};
use crate::marton::MaCodeSpec;
use crate::prob::Pmf;
use crate::seeding::{derive_seed, master_from, substream};
use crate::superposition::SpCodeSpec;
use crate::synthesis::{
    build_sets, BuildOptions, ContextBundle, Estimator, PolarizationSets, Scheme, SelectionRule,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const CSV_VERSION_LINE: &str = "# polarcast csv v1";
pub const CACHE_ENV: &str = "POLARCAST_CACHE";

/// Scheme-specific part of an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum SchemeConfig {
    Detbc {
        channel: ModelDoc,
        #[serde(default)]
        px: Option<Vec<f64>>,
        #[serde(default)]
        order: Option<Vec<usize>>,
        mode: DetMode,
    },
    Sp {
        chain: ModelDoc,
    },
    Marton {
        config: ModelDoc,
        #[serde(default)]
        eta: Option<f64>,
    },
}

impl SchemeConfig {
    pub fn scheme(&self) -> Scheme {
        match self {
            SchemeConfig::Detbc { .. } => Scheme::DetBc,
            SchemeConfig::Sp { .. } => Scheme::Superposition,
            SchemeConfig::Marton { .. } => Scheme::Marton,
        }
    }

    fn bundle(&self) -> Result<ContextBundle> {
        match self {
            SchemeConfig::Detbc {
                channel, px, order, ..
            } => {
                let ch = channel.as_deterministic()?;
                let px = match px {
                    Some(w) => Pmf::new(w.clone())?,
                    None => Pmf::uniform(ch.x_size()),
                };
                let order = match order {
                    Some(o) => o.clone(),
                    None => (0..ch.receivers()).collect(),
                };
                Ok(ContextBundle::DetBc {
                    channel: ch,
                    px,
                    order,
                })
            }
            SchemeConfig::Sp { chain } => Ok(ContextBundle::Superposition {
                chain: chain.as_chain()?,
            }),
            SchemeConfig::Marton { config, .. } => Ok(ContextBundle::Marton {
                config: config.as_marton()?,
            }),
        }
    }
}

/// One experiment: construction parameters plus the trial plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub scheme: SchemeConfig,
    pub n_list: Vec<usize>,
    pub beta: f64,
    pub samples: usize,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_selection")]
    pub selection: SelectionRule,
}

fn default_selection() -> SelectionRule {
    SelectionRule::Threshold
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list must not be empty".into()));
        }
        for &n in &self.n_list {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::Config(format!("n = {n} is not a power of two >= 2")));
            }
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if !(0.0 < self.beta && self.beta < 0.5) {
            return Err(Error::Config(format!("beta = {} outside (0, 1/2)", self.beta)));
        }
        Ok(())
    }

    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex(&derive_seed(&[canonical.as_bytes()]))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

/// One simulated block.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    /// Substream id the block's randomness came from.
    pub seed_stream: u64,
    pub encoder_ok: bool,
    /// Per-receiver success; ignored when the encoder failed.
    pub decode_ok: Vec<bool>,
    pub rates: Vec<f64>,
    pub genie_count: Option<usize>,
}

impl TrialRecord {
    /// Block error per the average-error criterion: any receiver wrong, or
    /// no codeword formed.
    pub fn block_error(&self) -> bool {
        !self.encoder_ok || self.decode_ok.iter().any(|&ok| !ok)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryPoint {
    pub n: usize,
    pub trials: usize,
    pub encoder_failures: usize,
    pub block_errors: usize,
    pub block_error_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub rates: Vec<f64>,
    pub message_targets: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub genie_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_eff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_budget: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema: &'static str,
    pub scheme: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub points: Vec<SummaryPoint>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: String,
    pub summary: RunSummary,
    pub records: Vec<TrialRecord>,
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, total: usize) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = total as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()) / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Construction cache: the sets file is keyed by everything that
/// determines it.
fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

fn construction_key(
    model_json: &str,
    scheme: Scheme,
    n: usize,
    opts: &BuildOptions,
) -> String {
    let est = match opts.estimator {
        Estimator::Exact => "exact".to_string(),
        Estimator::MonteCarlo { samples, seed } => format!("mc:{samples}:{seed}"),
    };
    let sel = match opts.selection {
        SelectionRule::Threshold => "threshold".to_string(),
        SelectionRule::Quantile { backoff } => format!("quantile:{}", backoff.to_bits()),
    };
    hex(&derive_seed(&[
        model_json.as_bytes(),
        scheme.label().as_bytes(),
        &n.to_le_bytes(),
        &opts.beta.to_bits().to_le_bytes(),
        est.as_bytes(),
        sel.as_bytes(),
    ]))
}

/// Build sets through the optional on-disk cache (POLARCAST_CACHE).
pub fn cached_build_sets(
    bundle: &ContextBundle,
    model_json: &str,
    n: usize,
    opts: &BuildOptions,
) -> Result<PolarizationSets> {
    let key = construction_key(model_json, bundle.scheme(), n, opts);
    let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    if let Some(dir) = &dir {
        let path = cache_path(dir, &key);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(sets) = PolarizationSets::from_json(&text) {
                if sets.n == n {
                    return Ok(sets);
                }
            }
        }
    }
    let sets = build_sets(bundle, n, opts)?;
    if let Some(dir) = &dir {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(cache_path(dir, &key), sets.to_json());
        }
    }
    Ok(sets)
}

enum BuiltCode {
    Det(Box<DetCodeSpec>, DetMode),
    Sp(Box<SpCodeSpec>),
    Marton(Box<MaCodeSpec>),
}

fn construct(config: &ExperimentConfig, n: usize) -> Result<(BuiltCode, PolarizationSets)> {
    let bundle = config.scheme.bundle()?;
    let model_json = match &config.scheme {
        SchemeConfig::Detbc { channel, .. } => channel.to_json(),
        SchemeConfig::Sp { chain } => chain.to_json(),
        SchemeConfig::Marton { config: doc, .. } => doc.to_json(),
    };
    let opts = BuildOptions {
        beta: config.beta,
        estimator: Estimator::MonteCarlo {
            samples: config.samples,
            seed: config.master_seed,
        },
        selection: config.selection,
    };
    let sets = cached_build_sets(&bundle, &model_json, n, &opts)?;
    let code = match (&config.scheme, &bundle) {
        (SchemeConfig::Detbc { mode, .. }, ContextBundle::DetBc { channel, px, order }) => {
            BuiltCode::Det(
                Box::new(DetCodeSpec::from_sets(
                    channel.clone(),
                    px.clone(),
                    order.clone(),
                    &sets,
                    config.master_seed,
                )?),
                *mode,
            )
        }
        (SchemeConfig::Sp { .. }, ContextBundle::Superposition { chain }) => {
            let (spec, _loss) =
                SpCodeSpec::from_sets_with_repair(chain.clone(), &sets, config.master_seed)?;
            BuiltCode::Sp(Box::new(spec))
        }
        (SchemeConfig::Marton { .. }, ContextBundle::Marton { config: cfg }) => BuiltCode::Marton(
            Box::new(MaCodeSpec::from_sets_with_repair(
                cfg.clone(),
                &sets,
                config.master_seed,
            )?),
        ),
        _ => unreachable!("bundle matches scheme"),
    };
    Ok((code, sets))
}

fn det_trial(spec: &DetCodeSpec, mode: DetMode, n: usize, trial: usize, master: &[u8; 32]) -> TrialRecord {
    let mut rng = substream(master, trial as u64);
    let m = spec.receivers();
    let messages: Vec<Vec<u8>> = (0..m)
        .map(|r| (0..spec.message_len(r)).map(|_| rng.gen_range(0..2u8)).collect())
        .collect();
    match spec.encode(&messages, mode) {
        Ok(out) => {
            let decode_ok = (0..m)
                .map(|r| {
                    spec.decode(r, &out.y_rows[r])
                        .map(|w| w == messages[r])
                        .unwrap_or(false)
                })
                .collect();
            TrialRecord {
                n,
                trial,
                seed_stream: trial as u64,
                encoder_ok: true,
                decode_ok,
                rates: spec.rates(),
                genie_count: None,
            }
        }
        Err(_) => TrialRecord {
            n,
            trial,
            seed_stream: trial as u64,
            encoder_ok: false,
            decode_ok: vec![false; m],
            rates: spec.rates(),
            genie_count: None,
        },
    }
}

fn sp_trial(spec: &SpCodeSpec, n: usize, trial: usize, master: &[u8; 32]) -> TrialRecord {
    let mut rng = substream(master, trial as u64);
    let w1: Vec<u8> = (0..spec.m1_len()).map(|_| rng.gen_range(0..2u8)).collect();
    let w2: Vec<u8> = (0..spec.m2_len()).map(|_| rng.gen_range(0..2u8)).collect();
    let x = spec.encode(&w1, &w2).expect("lengths match");
    let mut y1 = Vec::with_capacity(n);
    let mut y2 = Vec::with_capacity(n);
    for &bit in &x {
        let (a, b) = spec.chain().channel().sample_output(bit as usize, &mut rng);
        y1.push(a as u8);
        y2.push(b as u8);
    }
    let ok1 = spec.decode1(&y1).map(|w| w == w1).unwrap_or(false);
    let ok2 = spec.decode2(&y2).map(|w| w == w2).unwrap_or(false);
    let (r1, r2) = spec.rates();
    TrialRecord {
        n,
        trial,
        seed_stream: trial as u64,
        encoder_ok: true,
        decode_ok: vec![ok1, ok2],
        rates: vec![r1, r2],
        genie_count: None,
    }
}

fn marton_trial(spec: &MaCodeSpec, n: usize, trial: usize, master: &[u8; 32]) -> TrialRecord {
    let mut rng = substream(master, trial as u64);
    let w1: Vec<u8> = (0..spec.m1_len()).map(|_| rng.gen_range(0..2u8)).collect();
    let w2: Vec<u8> = (0..spec.m2_len()).map(|_| rng.gen_range(0..2u8)).collect();
    let (x, genie) = spec.encode(&w1, &w2).expect("lengths match");
    let mut y1 = Vec::with_capacity(n);
    let mut y2 = Vec::with_capacity(n);
    for &sym in &x {
        let (a, b) = spec.config().channel().sample_output(sym, &mut rng);
        y1.push(a);
        y2.push(b);
    }
    let ok1 = spec.decode1(&y1).map(|w| w == w1).unwrap_or(false);
    let ok2 = spec.decode2(&y2, &genie).map(|w| w == w2).unwrap_or(false);
    let (r1, r2) = spec.rates();
    TrialRecord {
        n,
        trial,
        seed_stream: trial as u64,
        encoder_ok: true,
        decode_ok: vec![ok1, ok2],
        rates: vec![r1, r2],
        genie_count: Some(spec.genie_len()),
    }
}

/// Run the whole experiment: construct per n (cached), simulate trials on
/// per-trial substreams, and aggregate.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let scheme = config.scheme.scheme();
    let mut records: Vec<TrialRecord> = Vec::with_capacity(config.trials * config.n_list.len());
    let mut points = Vec::new();

    for &n in &config.n_list {
        let (code, sets) = construct(config, n)?;
        let master = master_from(
            config.master_seed,
            &format!("trials-{}-{n}", scheme.label()),
        );
        let batch: Vec<TrialRecord> = match &code {
            BuiltCode::Det(spec, mode) => (0..config.trials)
                .into_par_iter()
                .map(|t| det_trial(spec, *mode, n, t, &master))
                .collect(),
            BuiltCode::Sp(spec) => (0..config.trials)
                .into_par_iter()
                .map(|t| sp_trial(spec, n, t, &master))
                .collect(),
            BuiltCode::Marton(spec) => (0..config.trials)
                .into_par_iter()
                .map(|t| marton_trial(spec, n, t, &master))
                .collect(),
        };

        let block_errors = batch.iter().filter(|r| r.block_error()).count();
        let encoder_failures = batch.iter().filter(|r| !r.encoder_ok).count();
        let (lo, hi) = wilson_interval(block_errors, batch.len());
        let rates = batch.first().map(|r| r.rates.clone()).unwrap_or_default();
        let message_targets: Vec<f64> = sets
            .targets
            .iter()
            .map(|(_, &v)| v)
            .collect();
        let (genie_fraction, r2_eff, eta_budget) = match (&code, &config.scheme) {
            (BuiltCode::Marton(spec), SchemeConfig::Marton { eta, .. }) => {
                let frac = spec.genie_len() as f64 / n as f64;
                (
                    Some(frac),
                    Some(spec.rates().1 - frac),
                    *eta,
                )
            }
            _ => (None, None, None),
        };
        points.push(SummaryPoint {
            n,
            trials: batch.len(),
            encoder_failures,
            block_errors,
            block_error_rate: block_errors as f64 / batch.len() as f64,
            wilson_low: lo,
            wilson_high: hi,
            rates,
            message_targets,
            genie_fraction,
            r2_eff,
            eta_budget,
        });
        records.extend(batch);
    }

    let csv = records_to_csv(scheme, &records);
    let summary = RunSummary {
        schema: "v1",
        scheme: scheme.label().to_string(),
        config_hash: config.config_hash(),
        master_seed: config.master_seed,
        points,
    };
    Ok(RunOutput {
        csv,
        summary,
        records,
    })
}

/// Fixed v1 row schemas, one per scheme.
pub fn records_to_csv(scheme: Scheme, records: &[TrialRecord]) -> String {
    let mut out = String::new();
    out.push_str(CSV_VERSION_LINE);
    out.push('\n');
    match scheme {
        Scheme::DetBc => {
            let m = records.first().map(|r| r.decode_ok.len()).unwrap_or(0);
            out.push_str("n,trial,encoder_ok");
            for i in 1..=m {
                let _ = write!(out, ",decode_ok_{i}");
            }
            for i in 1..=m {
                let _ = write!(out, ",r_{i}");
            }
            out.push('\n');
            for r in records {
                let _ = write!(out, "{},{},{}", r.n, r.trial, u8::from(r.encoder_ok));
                for &ok in &r.decode_ok {
                    let _ = write!(out, ",{}", u8::from(ok));
                }
                for &rate in &r.rates {
                    let _ = write!(out, ",{rate}");
                }
                out.push('\n');
            }
        }
        Scheme::Superposition => {
            out.push_str("n,trial,ok1,ok2,r1,r2\n");
            for r in records {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.n,
                    r.trial,
                    u8::from(r.decode_ok[0]),
                    u8::from(r.decode_ok[1]),
                    r.rates[0],
                    r.rates[1]
                );
            }
        }
        Scheme::Marton => {
            out.push_str("n,trial,ok1,ok2,r1,r2,genie_count,r2_eff\n");
            for r in records {
                let genie = r.genie_count.unwrap_or(0);
                let r2_eff = r.rates[1] - genie as f64 / r.n as f64;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.n,
                    r.trial,
                    u8::from(r.decode_ok[0]),
                    u8::from(r.decode_ok[1]),
                    r.rates[0],
                    r.rates[1],
                    genie,
                    r2_eff
                );
            }
        }
    }
    out
}

/// Grid for region evaluation.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RegionGrid {
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub px_list: Option<Vec<Vec<f64>>>,
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for sub in permutations(m - 1) {
        for slot in 0..=sub.len() {
            let mut perm: Vec<usize> = sub.iter().map(|&x| x + 1).collect();
            perm.insert(slot, 0);
            out.push(perm);
        }
    }
    out.sort();
    out
}

/// Rate-region boundary points as CSV for external plotting.
pub fn region(doc: &ModelDoc, grid: &RegionGrid) -> Result<String> {
    let mut out = String::new();
    out.push_str(CSV_VERSION_LINE);
    out.push('\n');
    match doc {
        ModelDoc::Deterministic { .. } => {
            let ch = doc.as_deterministic()?;
            let m = ch.receivers();
            let px_list = match &grid.px_list {
                Some(list) => list
                    .iter()
                    .map(|w| Pmf::new(w.clone()))
                    .collect::<Result<Vec<_>>>()?,
                None => vec![Pmf::uniform(ch.x_size())],
            };
            out.push_str("px,pi");
            for i in 1..=m {
                let _ = write!(out, ",r_{i}");
            }
            out.push('\n');
            for (pi_idx, px) in px_list.iter().enumerate() {
                for perm in permutations(m) {
                    let vertex = det_region_vertex(&ch, px, &perm)?;
                    let label: Vec<String> = perm.iter().map(|p| p.to_string()).collect();
                    let _ = write!(out, "{},{}", pi_idx, label.join("-"));
                    // Vertex is ordered by position; report per receiver.
                    let mut per_receiver = vec![0.0; m];
                    for (k, &r) in perm.iter().enumerate() {
                        per_receiver[r] = vertex[k];
                    }
                    for r in per_receiver {
                        let _ = write!(out, ",{r}");
                    }
                    out.push('\n');
                }
            }
        }
        ModelDoc::Noisy { .. } => {
            let ch = doc.as_noisy()?;
            if ch.x_size() != 2 {
                return Err(Error::Config(
                    "superposition region sweep needs a binary-input channel".into(),
                ));
            }
            let alphas = grid
                .alphas
                .clone()
                .unwrap_or_else(|| (0..=10).map(|i| i as f64 * 0.05).collect());
            out.push_str("alpha,r1,r2,sum_max\n");
            for alpha in alphas {
                let chain = SuperpositionChain::symmetric(ch.clone(), alpha)?;
                let r = cover_rates(&chain);
                let _ = writeln!(out, "{alpha},{},{},{}", r.r1_max, r.r2_max, r.sum_max);
            }
        }
        ModelDoc::SuperpositionChain { .. } => {
            let chain = doc.as_chain()?;
            let r = cover_rates(&chain);
            out.push_str("label,r1,r2,sum_max\n");
            let _ = writeln!(out, "chain,{},{},{}", r.r1_max, r.r2_max, r.sum_max);
        }
        ModelDoc::Marton { .. } => {
            let cfg = doc.as_marton()?;
            let joint = cfg.joint();
            let i1 = joint.mutual_information(&[0], &[3])?;
            let i2 = joint.mutual_information(&[1], &[4])?;
            let i12 = joint.mutual_information(&[0], &[1])?;
            out.push_str("label,r1,r2\n");
            let _ = writeln!(out, "corner_1,{},{}", i1, i2 - i12);
            let _ = writeln!(out, "corner_2,{},{}", i1 - i12, i2);
        }
    }
    Ok(out)
}

/// Quick library sanity battery for the CLI.
pub fn selftest() -> Vec<(String, bool)> {
    use crate::channels::{blackwell, bsc_pair};
    use crate::prob::binary_entropy;
    let mut results = Vec::new();
    let mut check = |name: &str, ok: bool| results.push((name.to_string(), ok));

    let x = crate::transform::BitBlock::new(vec![1, 0, 1, 1, 0, 0, 1, 0]).unwrap();
    let twice = crate::transform::polar_transform(&crate::transform::polar_transform(&x));
    check("transform involution", twice == x);

    let hb = binary_entropy(1.0 / 3.0).unwrap();
    let vertex = det_region_vertex(&blackwell(), &Pmf::uniform(3), &[0, 1]).unwrap();
    check(
        "blackwell vertex",
        (vertex[0] - hb).abs() < 1e-10 && (vertex[1] - (3f64.log2() - hb)).abs() < 1e-10,
    );

    let bundle = ContextBundle::det_bc(blackwell(), Pmf::uniform(3));
    let sets = build_sets(&bundle, 8, &BuildOptions::exact(0.3));
    check("exact construction", sets.is_ok());

    let chain = SuperpositionChain::symmetric(bsc_pair(0.05, 0.2).unwrap(), 0.25).unwrap();
    let bundle = ContextBundle::Superposition { chain };
    let sets = build_sets(&bundle, 8, &BuildOptions::exact(0.3)).unwrap();
    check(
        "superposition alignment",
        crate::synthesis::check_alignment(&sets).ok(),
    );

    let cfg = {
        let doc = serde_json::json!({
            "type": "marton",
            "pv1v2": [[0.375, 0.125], [0.125, 0.375]],
            "phi": [[0, 1], [2, 3]],
            "channel": {
                "type": "noisy", "m": 2, "x_size": 4, "y_sizes": [2, 2],
                "tables": marton_test_kernel(0.1)
            }
        });
        ModelDoc::from_json(&doc.to_string()).unwrap().as_marton().unwrap()
    };
    check("marton admissibility", cfg.admissible());
    let _ = marton_doc(&cfg);
    results
}

fn marton_test_kernel(q: f64) -> Vec<Vec<Vec<f64>>> {
    (0..4usize)
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
        .collect()
}

/// Write the run outputs under a directory.
pub fn write_outputs(out: &RunOutput, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}_summary.json"));
    std::fs::write(&csv_path, &out.csv)?;
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&out.summary).expect("summary serializes"),
    )?;
    Ok((csv_path, json_path))
}
