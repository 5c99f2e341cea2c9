//! Finite probability kernel: pmfs, joint tables, entropies, the
//! Bhattacharyya parameter, and the divergences the coding bounds rest on.
//!
//! Conventions: log base 2 everywhere, rates in bits per channel use,
//! `0 log 0 = 0`, pmf validity tolerance 1e-12.

use crate::error::{Error, Result};

pub const PMF_TOLERANCE: f64 = 1e-12;

/// Probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    weights: Vec<f64>,
}

impl Pmf {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Shape("pmf over empty alphabet".into()));
        }
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::Domain {
                value: w,
                domain: "[0,1] pmf weight",
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::Shape(format!("pmf weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            weights: vec![1.0 / k as f64; k],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.weights.iter().map(|&w| entropy_term(w)).sum()
    }
}

fn entropy_term(w: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else {
        -w * w.log2()
    }
}

/// Binary entropy function h_b(x) in bits; endpoints return exactly 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            value: x,
            domain: "[0,1]",
        });
    }
    Ok(entropy_term(x) + entropy_term(1.0 - x))
}

/// a * b = (1-a)b + a(1-b), the flip-probability convolution.
pub fn star_convolve(a: f64, b: f64) -> Result<f64> {
    for v in [a, b] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain {
                value: v,
                domain: "[0,1]",
            });
        }
    }
    Ok((1.0 - a) * b + a * (1.0 - b))
}

/// Joint distribution over a product alphabet, stored row-major with the
/// last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    dims: Vec<usize>,
    weights: Vec<f64>,
}

impl JointTable {
    pub fn new(dims: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let size: usize = dims.iter().product();
        if dims.is_empty() || size == 0 {
            return Err(Error::Shape("joint table must have nonempty axes".into()));
        }
        if weights.len() != size {
            return Err(Error::Shape(format!(
                "joint table expects {size} weights, got {}",
                weights.len()
            )));
        }
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::Domain {
                value: w,
                domain: "[0,1] joint weight",
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::Shape(format!("joint weights sum to {sum}, not 1")));
        }
        Ok(Self { dims, weights })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn axes(&self) -> usize {
        self.dims.len()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.weights[self.offset(idx)]
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        for (i, (&v, &d)) in idx.iter().zip(&self.dims).enumerate() {
            assert!(v < d, "index {v} out of range on axis {i}");
            off = off * d + v;
        }
        off
    }

    fn decode(&self, mut off: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (i, &d) in self.dims.iter().enumerate().rev() {
            idx[i] = off % d;
            off /= d;
        }
        idx
    }

    fn check_axes(&self, axes: &[usize]) -> Result<()> {
        for &a in axes {
            if a >= self.dims.len() {
                return Err(Error::Shape(format!(
                    "axis {a} out of range for {} axes",
                    self.dims.len()
                )));
            }
        }
        Ok(())
    }

    /// Marginal joint over the listed axes, in the listed order.
    pub fn marginalize(&self, keep: &[usize]) -> Result<JointTable> {
        self.check_axes(keep)?;
        let mut seen = vec![false; self.dims.len()];
        for &a in keep {
            if seen[a] {
                return Err(Error::Shape(format!("axis {a} repeated")));
            }
            seen[a] = true;
        }
        let out_dims: Vec<usize> = keep.iter().map(|&a| self.dims[a]).collect();
        let out_size: usize = out_dims.iter().product();
        let mut out = vec![0.0; out_size];
        for (off, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let idx = self.decode(off);
            let mut o = 0;
            for (&a, &d) in keep.iter().zip(&out_dims) {
                o = o * d + idx[a];
            }
            out[o] += w;
        }
        Ok(JointTable {
            dims: out_dims,
            weights: out,
        })
    }

    /// Marginal pmf of one axis.
    pub fn marginal(&self, axis: usize) -> Result<Pmf> {
        let m = self.marginalize(&[axis])?;
        Pmf::new(m.weights)
    }

    /// Joint Shannon entropy of the listed axes, in bits.
    pub fn entropy(&self, axes: &[usize]) -> Result<f64> {
        let m = self.marginalize(axes)?;
        Ok(m.weights.iter().map(|&w| entropy_term(w)).sum())
    }

    /// Conditional Shannon entropy H(target | given) in bits; terms with
    /// zero mass contribute 0.
    pub fn conditional_entropy(&self, target: usize, given: &[usize]) -> Result<f64> {
        self.check_axes(&[target])?;
        self.check_axes(given)?;
        if given.contains(&target) {
            return Err(Error::Shape(format!(
                "target axis {target} overlaps conditioning axes"
            )));
        }
        let mut joint_axes = given.to_vec();
        joint_axes.push(target);
        let h_joint = self.entropy(&joint_axes)?;
        let h_given = if given.is_empty() {
            0.0
        } else {
            self.entropy(given)?
        };
        Ok(h_joint - h_given)
    }

    /// Mutual information I(A; B) between two disjoint axis groups, in bits.
    pub fn mutual_information(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        self.check_axes(a)?;
        self.check_axes(b)?;
        if a.iter().any(|x| b.contains(x)) {
            return Err(Error::Shape("mutual information axes overlap".into()));
        }
        let mut ab = a.to_vec();
        ab.extend_from_slice(b);
        Ok((self.entropy(a)? + self.entropy(b)? - self.entropy(&ab)?).max(0.0))
    }

    /// Conditional mutual information I(A; B | C) in bits.
    pub fn conditional_mutual_information(
        &self,
        a: &[usize],
        b: &[usize],
        c: &[usize],
    ) -> Result<f64> {
        let mut ac = a.to_vec();
        ac.extend_from_slice(c);
        let mut bc = b.to_vec();
        bc.extend_from_slice(c);
        let mut abc = a.to_vec();
        abc.extend_from_slice(b);
        abc.extend_from_slice(c);
        let hc = if c.is_empty() { 0.0 } else { self.entropy(c)? };
        Ok((self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - hc).max(0.0))
    }
}

/// Bhattacharyya parameter Z(T|V) for a joint table whose first axis is the
/// binary target T and whose remaining axes form the conditioning V.
/// Z = 2 sum_v sqrt(P(0,v) P(1,v)), clamped to [0,1] against round-off.
pub fn bhattacharyya(joint: &JointTable) -> Result<f64> {
    if joint.dims()[0] != 2 {
        return Err(Error::Shape(format!(
            "bhattacharyya target axis must be binary, got {}",
            joint.dims()[0]
        )));
    }
    let v_size: usize = joint.dims()[1..].iter().product();
    let w = joint.weights();
    let mut z = 0.0;
    for v in 0..v_size {
        z += (w[v] * w[v_size + v]).sqrt();
    }
    Ok((2.0 * z).clamp(0.0, 1.0))
}

/// Kullback-Leibler divergence D(p || q) in bits. Requires
/// support(p) subseteq support(q).
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!(
            "kl alphabets differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let mut d = 0.0;
    for (i, (&pi, &qi)) in p.weights().iter().zip(q.weights()).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::DivergenceUndefined(i));
        }
        d += pi * (pi / qi).log2();
    }
    Ok(d.max(0.0))
}

/// Unnormalized total variation sum_x |p(x) - q(x)|, in [0, 2].
pub fn total_variation(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!(
            "tv alphabets differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(p.weights()
        .iter()
        .zip(q.weights())
        .map(|(&a, &b)| (a - b).abs())
        .sum())
}
