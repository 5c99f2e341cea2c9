//! Broadcast-channel models, rate-region evaluators, and the
//! degradation-hierarchy classifier.

mod classify;
mod degrade;

pub use classify::{classify, BcClass, ClassifyReport};
pub use degrade::is_stochastically_degraded;

use crate::error::{Error, Result};
use crate::prob::{JointTable, Pmf, PMF_TOLERANCE};
use serde::{Deserialize, Serialize};

/// Deterministic broadcast channel: m binary-output lookup tables on a
/// common discrete input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicBC {
    x_size: usize,
    functions: Vec<Vec<u8>>,
}

impl DeterministicBC {
    pub fn new(x_size: usize, functions: Vec<Vec<u8>>) -> Result<Self> {
        if x_size == 0 || functions.is_empty() {
            return Err(Error::Shape("deterministic channel needs inputs and receivers".into()));
        }
        for f in &functions {
            if f.len() != x_size {
                return Err(Error::Shape(format!(
                    "lookup table length {} does not match |X| = {x_size}",
                    f.len()
                )));
            }
            if f.iter().any(|&y| y > 1) {
                return Err(Error::Shape("output symbols must be binary".into()));
            }
        }
        Ok(Self { x_size, functions })
    }

    pub fn receivers(&self) -> usize {
        self.functions.len()
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn output(&self, receiver: usize, x: usize) -> u8 {
        self.functions[receiver][x]
    }

    pub fn functions(&self) -> &[Vec<u8>] {
        &self.functions
    }

    /// Joint output distribution P_{Y1..Ym} induced by an input pmf.
    pub fn output_joint(&self, px: &Pmf) -> Result<JointTable> {
        if px.len() != self.x_size {
            return Err(Error::Shape(format!(
                "input pmf over {} symbols, channel expects {}",
                px.len(),
                self.x_size
            )));
        }
        let m = self.receivers();
        let mut weights = vec![0.0; 1 << m];
        for x in 0..self.x_size {
            let mut code = 0usize;
            for i in 0..m {
                code = (code << 1) | self.functions[i][x] as usize;
            }
            weights[code] += px.get(x);
        }
        JointTable::new(vec![2; m], weights)
    }

    /// Input symbols consistent with one output column (y_1..y_m), in
    /// increasing order.
    pub fn preimage(&self, column: &[u8]) -> Vec<usize> {
        (0..self.x_size)
            .filter(|&x| {
                self.functions
                    .iter()
                    .zip(column)
                    .all(|(f, &y)| f[x] == y)
            })
            .collect()
    }
}

/// The Blackwell channel: ternary input, two binary outputs, output pair
/// (1,0) unreachable under any input distribution.
pub fn blackwell() -> DeterministicBC {
    DeterministicBC::new(3, vec![vec![0, 0, 1], vec![0, 1, 1]]).expect("fixed tables are valid")
}

/// Two-receiver noisy broadcast channel P_{Y1,Y2|X} on finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyBC {
    x_size: usize,
    y_sizes: [usize; 2],
    /// kernel[x][y1][y2]
    kernel: Vec<Vec<Vec<f64>>>,
}

impl NoisyBC {
    pub fn new(x_size: usize, y_sizes: [usize; 2], kernel: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if kernel.len() != x_size {
            return Err(Error::Shape("kernel rows do not match |X|".into()));
        }
        for row in &kernel {
            if row.len() != y_sizes[0] || row.iter().any(|r| r.len() != y_sizes[1]) {
                return Err(Error::Shape("kernel output dims mismatch".into()));
            }
            let sum: f64 = row.iter().flatten().sum();
            if (sum - 1.0).abs() > PMF_TOLERANCE {
                return Err(Error::Shape(format!("kernel row sums to {sum}, not 1")));
            }
            if row.iter().flatten().any(|&p| p < 0.0) {
                return Err(Error::Shape("kernel has negative entry".into()));
            }
        }
        Ok(Self {
            x_size,
            y_sizes,
            kernel,
        })
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_sizes(&self) -> [usize; 2] {
        self.y_sizes
    }

    pub fn kernel(&self) -> &[Vec<Vec<f64>>] {
        &self.kernel
    }

    pub fn prob(&self, x: usize, y1: usize, y2: usize) -> f64 {
        self.kernel[x][y1][y2]
    }

    /// Conditional marginal P_{Y_i|X} as rows indexed by x.
    pub fn leg(&self, receiver: usize) -> Vec<Vec<f64>> {
        assert!(receiver == 1 || receiver == 2);
        let (ys, other) = if receiver == 1 {
            (self.y_sizes[0], self.y_sizes[1])
        } else {
            (self.y_sizes[1], self.y_sizes[0])
        };
        (0..self.x_size)
            .map(|x| {
                (0..ys)
                    .map(|y| {
                        (0..other)
                            .map(|o| {
                                if receiver == 1 {
                                    self.kernel[x][y][o]
                                } else {
                                    self.kernel[x][o][y]
                                }
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Draw one output pair for input symbol x.
    pub fn sample_output<R: rand::Rng>(&self, x: usize, rng: &mut R) -> (usize, usize) {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let [ny1, ny2] = self.y_sizes;
        for y1 in 0..ny1 {
            for y2 in 0..ny2 {
                acc += self.kernel[x][y1][y2];
                if u < acc {
                    return (y1, y2);
                }
            }
        }
        (ny1 - 1, ny2 - 1)
    }

    /// Joint P_{X,Y1,Y2} for an input pmf.
    pub fn joint_with_input(&self, px: &Pmf) -> Result<JointTable> {
        if px.len() != self.x_size {
            return Err(Error::Shape("input pmf does not match |X|".into()));
        }
        let [ny1, ny2] = self.y_sizes;
        let mut w = Vec::with_capacity(self.x_size * ny1 * ny2);
        for x in 0..self.x_size {
            for y1 in 0..ny1 {
                for y2 in 0..ny2 {
                    w.push(px.get(x) * self.kernel[x][y1][y2]);
                }
            }
        }
        JointTable::new(vec![self.x_size, ny1, ny2], w)
    }
}

fn check_flip(p: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&p) {
        return Err(Error::Domain {
            value: p,
            domain: "[0, 1/2) BSC flip probability",
        });
    }
    Ok(p)
}

fn bsc_rows(p: f64) -> [[f64; 2]; 2] {
    [[1.0 - p, p], [p, 1.0 - p]]
}

/// Binary symmetric DM-BC: Y1 through BSC(p1), Y2 through BSC(p2),
/// conditionally independent legs.
pub fn bsc_pair(p1: f64, p2: f64) -> Result<NoisyBC> {
    check_flip(p1)?;
    check_flip(p2)?;
    let b1 = bsc_rows(p1);
    let b2 = bsc_rows(p2);
    let kernel = (0..2)
        .map(|x| {
            (0..2)
                .map(|y1| (0..2).map(|y2| b1[x][y1] * b2[x][y2]).collect())
                .collect()
        })
        .collect();
    NoisyBC::new(2, [2, 2], kernel)
}

/// DM-BC with Y1 through BSC(p) and Y2 through BEC(eps); the erasure symbol
/// is output index 2.
pub fn bec_bsc(eps: f64, p: f64) -> Result<NoisyBC> {
    check_flip(p)?;
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::Domain {
            value: eps,
            domain: "(0,1) BEC erasure probability",
        });
    }
    let b1 = bsc_rows(p);
    let kernel = (0..2usize)
        .map(|x| {
            (0..2)
                .map(|y1| {
                    (0..3)
                        .map(|y2| {
                            let bec = if y2 == 2 {
                                eps
                            } else if y2 == x {
                                1.0 - eps
                            } else {
                                0.0
                            };
                            b1[x][y1] * bec
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    NoisyBC::new(2, [2, 3], kernel)
}

/// Superposition scenario: binary cloud auxiliary V, input X through
/// P_{X|V}, then the broadcast channel. V - X - (Y1,Y2) holds by
/// construction.
#[derive(Debug, Clone)]
pub struct SuperpositionChain {
    pv: Pmf,
    /// px_given_v[v][x]
    px_given_v: Vec<Vec<f64>>,
    channel: NoisyBC,
}

impl SuperpositionChain {
    pub fn new(pv: Pmf, px_given_v: Vec<Vec<f64>>, channel: NoisyBC) -> Result<Self> {
        if pv.len() != 2 {
            return Err(Error::Construction(
                "superposition auxiliary V must be binary".into(),
            ));
        }
        if channel.x_size() != 2 {
            return Err(Error::Construction(
                "superposition coding requires binary channel input".into(),
            ));
        }
        if px_given_v.len() != 2 || px_given_v.iter().any(|r| r.len() != channel.x_size()) {
            return Err(Error::Shape("px_given_v must be 2 x |X|".into()));
        }
        for row in &px_given_v {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > PMF_TOLERANCE || row.iter().any(|&p| p < 0.0) {
                return Err(Error::Shape("px_given_v rows must be pmfs".into()));
            }
        }
        Ok(Self {
            pv,
            px_given_v,
            channel,
        })
    }

    /// The Example-2 style chain: V fair, X = V xor Bernoulli(alpha).
    pub fn symmetric(channel: NoisyBC, alpha: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(Error::Domain {
                value: alpha,
                domain: "[0, 1/2] satellite flip probability",
            });
        }
        Self::new(
            Pmf::uniform(2),
            vec![vec![1.0 - alpha, alpha], vec![alpha, 1.0 - alpha]],
            channel,
        )
    }

    pub fn pv(&self) -> &Pmf {
        &self.pv
    }

    pub fn px_given_v(&self) -> &[Vec<f64>] {
        &self.px_given_v
    }

    pub fn channel(&self) -> &NoisyBC {
        &self.channel
    }

    /// Joint P_{V,X,Y1,Y2} with axes (V, X, Y1, Y2).
    pub fn joint(&self) -> JointTable {
        let [ny1, ny2] = self.channel.y_sizes();
        let mut w = Vec::with_capacity(4 * ny1 * ny2);
        for v in 0..2 {
            for x in 0..2 {
                for y1 in 0..ny1 {
                    for y2 in 0..ny2 {
                        w.push(self.pv.get(v) * self.px_given_v[v][x] * self.channel.prob(x, y1, y2));
                    }
                }
            }
        }
        JointTable::new(vec![2, 2, ny1, ny2], w).expect("chain factors are normalized")
    }

    /// Conditional marginal P_{Y_i|V} as rows indexed by v.
    pub fn leg_given_v(&self, receiver: usize) -> Vec<Vec<f64>> {
        let leg = self.channel.leg(receiver);
        let ys = leg[0].len();
        (0..2)
            .map(|v| {
                (0..ys)
                    .map(|y| (0..2).map(|x| self.px_given_v[v][x] * leg[x][y]).sum())
                    .collect()
            })
            .collect()
    }
}

/// Rates of Cover's superposition inner bound at a fixed chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverRates {
    /// I(X; Y1 | V)
    pub r1_max: f64,
    /// I(V; Y2)
    pub r2_max: f64,
    /// I(X; Y1)
    pub sum_max: f64,
}

pub fn cover_rates(chain: &SuperpositionChain) -> CoverRates {
    let joint = chain.joint();
    // axes: 0 = V, 1 = X, 2 = Y1, 3 = Y2
    let r1_max = joint
        .conditional_mutual_information(&[1], &[2], &[0])
        .expect("valid axes");
    let r2_max = joint.mutual_information(&[0], &[3]).expect("valid axes");
    let sum_max = joint.mutual_information(&[1], &[2]).expect("valid axes");
    CoverRates {
        r1_max,
        r2_max,
        sum_max,
    }
}

/// Marton scenario: correlated binary auxiliaries (V1, V2) mapped through a
/// deterministic phi into the channel input.
#[derive(Debug, Clone)]
pub struct MartonConfig {
    pv1v2: JointTable,
    /// phi[v1][v2] -> x
    phi: [[usize; 2]; 2],
    channel: NoisyBC,
}

impl MartonConfig {
    pub fn new(pv1v2: JointTable, phi: [[usize; 2]; 2], channel: NoisyBC) -> Result<Self> {
        if pv1v2.dims() != [2, 2] {
            return Err(Error::Shape("pv1v2 must be a 2x2 joint".into()));
        }
        for row in &phi {
            for &x in row {
                if x >= channel.x_size() {
                    return Err(Error::Shape(format!(
                        "phi output {x} exceeds |X| = {}",
                        channel.x_size()
                    )));
                }
            }
        }
        Ok(Self {
            pv1v2,
            phi,
            channel,
        })
    }

    pub fn pv1v2(&self) -> &JointTable {
        &self.pv1v2
    }

    pub fn phi(&self, v1: usize, v2: usize) -> usize {
        self.phi[v1][v2]
    }

    pub fn phi_table(&self) -> [[usize; 2]; 2] {
        self.phi
    }

    pub fn channel(&self) -> &NoisyBC {
        &self.channel
    }

    /// Joint P_{V1,V2,X,Y1,Y2} with axes (V1, V2, X, Y1, Y2).
    pub fn joint(&self) -> JointTable {
        let [ny1, ny2] = self.channel.y_sizes();
        let nx = self.channel.x_size();
        let mut w = vec![0.0; 4 * nx * ny1 * ny2];
        for v1 in 0..2 {
            for v2 in 0..2 {
                let x = self.phi[v1][v2];
                let mass = self.pv1v2.get(&[v1, v2]);
                for y1 in 0..ny1 {
                    for y2 in 0..ny2 {
                        let off = (((v1 * 2 + v2) * nx + x) * ny1 + y1) * ny2 + y2;
                        w[off] += mass * self.channel.prob(x, y1, y2);
                    }
                }
            }
        }
        JointTable::new(vec![2, 2, nx, ny1, ny2], w).expect("config factors are normalized")
    }

    /// P_{Y2|V2} rows indexed by v2; part of the admissibility check.
    pub fn y2_given_v2(&self) -> Vec<Vec<f64>> {
        let joint = self.joint();
        let m = joint.marginalize(&[1, 4]).expect("axes exist");
        conditional_rows(&m)
    }

    /// P_{V1|V2} rows indexed by v2.
    pub fn v1_given_v2(&self) -> Vec<Vec<f64>> {
        let m = self.pv1v2.marginalize(&[1, 0]).expect("axes exist");
        conditional_rows(&m)
    }

    /// The admissibility requirement: P_{Y2|V2} degrades to P_{V1|V2},
    /// which keeps the second receiver's rate positive.
    pub fn admissible(&self) -> bool {
        is_stochastically_degraded(&self.y2_given_v2(), &self.v1_given_v2())
            .unwrap_or(false)
    }
}

/// Rows P(b|a) of a two-axis joint (a = axis 0). Zero-mass rows become
/// uniform.
fn conditional_rows(joint: &JointTable) -> Vec<Vec<f64>> {
    let na = joint.dims()[0];
    let nb = joint.dims()[1];
    (0..na)
        .map(|a| {
            let mass: f64 = (0..nb).map(|b| joint.get(&[a, b])).sum();
            if mass <= 0.0 {
                vec![1.0 / nb as f64; nb]
            } else {
                (0..nb).map(|b| joint.get(&[a, b]) / mass).collect()
            }
        })
        .collect()
}

/// Marton corner rates (I(V1;Y1), I(V2;Y2) - I(V1;V2)). The second
/// component may be negative when the admissibility property fails; the
/// caller checks.
pub fn marton_rates(cfg: &MartonConfig) -> (f64, f64) {
    let joint = cfg.joint();
    // axes: 0 = V1, 1 = V2, 2 = X, 3 = Y1, 4 = Y2
    let r1 = joint.mutual_information(&[0], &[3]).expect("valid axes");
    let i2 = joint.mutual_information(&[1], &[4]).expect("valid axes");
    let i12 = joint.mutual_information(&[0], &[1]).expect("valid axes");
    (r1, i2 - i12)
}

/// Vertex of the deterministic-BC polyhedron for a receiver ordering pi:
/// component k is H(Y_{pi(k)} | Y_{pi(1..k-1)}). Components sum to the
/// joint output entropy.
pub fn det_region_vertex(ch: &DeterministicBC, px: &Pmf, pi: &[usize]) -> Result<Vec<f64>> {
    let m = ch.receivers();
    let mut seen = vec![false; m];
    if pi.len() != m {
        return Err(Error::Shape(format!(
            "permutation length {} does not match {m} receivers",
            pi.len()
        )));
    }
    for &i in pi {
        if i >= m || seen[i] {
            return Err(Error::Shape("not a permutation of the receivers".into()));
        }
        seen[i] = true;
    }
    let joint = ch.output_joint(px)?;
    let mut vertex = Vec::with_capacity(m);
    for k in 0..m {
        let given: Vec<usize> = pi[..k].to_vec();
        vertex.push(joint.conditional_entropy(pi[k], &given)?);
    }
    Ok(vertex)
}

/// On-disk channel document. Probabilities are decimal numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelDoc {
    Deterministic {
        m: usize,
        x_size: usize,
        tables: Vec<Vec<u8>>,
    },
    Noisy {
        m: usize,
        x_size: usize,
        y_sizes: [usize; 2],
        tables: Vec<Vec<Vec<f64>>>,
    },
    SuperpositionChain {
        pv: Vec<f64>,
        px_given_v: Vec<Vec<f64>>,
        channel: Box<ModelDoc>,
    },
    Marton {
        pv1v2: Vec<Vec<f64>>,
        phi: Vec<Vec<usize>>,
        channel: Box<ModelDoc>,
    },
}

impl ModelDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn as_deterministic(&self) -> Result<DeterministicBC> {
        match self {
            ModelDoc::Deterministic { m, x_size, tables } => {
                if tables.len() != *m {
                    return Err(Error::Config("tables do not match receiver count".into()));
                }
                DeterministicBC::new(*x_size, tables.clone())
            }
            _ => Err(Error::Config("expected a deterministic channel document".into())),
        }
    }

    pub fn as_noisy(&self) -> Result<NoisyBC> {
        match self {
            ModelDoc::Noisy {
                m,
                x_size,
                y_sizes,
                tables,
            } => {
                if *m != 2 {
                    return Err(Error::Config("noisy schemes support exactly 2 receivers".into()));
                }
                NoisyBC::new(*x_size, *y_sizes, tables.clone())
            }
            _ => Err(Error::Config("expected a noisy channel document".into())),
        }
    }

    pub fn as_chain(&self) -> Result<SuperpositionChain> {
        match self {
            ModelDoc::SuperpositionChain {
                pv,
                px_given_v,
                channel,
            } => SuperpositionChain::new(Pmf::new(pv.clone())?, px_given_v.clone(), channel.as_noisy()?),
            _ => Err(Error::Config("expected a superposition chain document".into())),
        }
    }

    pub fn as_marton(&self) -> Result<MartonConfig> {
        match self {
            ModelDoc::Marton {
                pv1v2,
                phi,
                channel,
            } => {
                let flat: Vec<f64> = pv1v2.iter().flatten().copied().collect();
                let joint = JointTable::new(vec![2, 2], flat)?;
                if phi.len() != 2 || phi.iter().any(|r| r.len() != 2) {
                    return Err(Error::Shape("phi must be a 2x2 table".into()));
                }
                let table = [[phi[0][0], phi[0][1]], [phi[1][0], phi[1][1]]];
                MartonConfig::new(joint, table, channel.as_noisy()?)
            }
            _ => Err(Error::Config("expected a marton document".into())),
        }
    }
}

pub fn noisy_doc(ch: &NoisyBC) -> ModelDoc {
    ModelDoc::Noisy {
        m: 2,
        x_size: ch.x_size(),
        y_sizes: ch.y_sizes(),
        tables: ch.kernel().to_vec(),
    }
}

pub fn deterministic_doc(ch: &DeterministicBC) -> ModelDoc {
    ModelDoc::Deterministic {
        m: ch.receivers(),
        x_size: ch.x_size(),
        tables: ch.functions().to_vec(),
    }
}

pub fn chain_doc(chain: &SuperpositionChain) -> ModelDoc {
    ModelDoc::SuperpositionChain {
        pv: chain.pv().weights().to_vec(),
        px_given_v: chain.px_given_v().to_vec(),
        channel: Box::new(noisy_doc(chain.channel())),
    }
}

pub fn marton_doc(cfg: &MartonConfig) -> ModelDoc {
    let phi = cfg.phi_table();
    ModelDoc::Marton {
        pv1v2: vec![
            vec![cfg.pv1v2().get(&[0, 0]), cfg.pv1v2().get(&[0, 1])],
            vec![cfg.pv1v2().get(&[1, 0]), cfg.pv1v2().get(&[1, 1])],
        ],
        phi: vec![vec![phi[0][0], phi[0][1]], vec![phi[1][0], phi[1][1]]],
        channel: Box::new(noisy_doc(cfg.channel())),
    }
}
