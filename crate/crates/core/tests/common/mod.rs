//! Shared fixtures and checkers for the integration suites.

#![allow(dead_code)]

use polarcast_core::channels::{blackwell, bsc_pair, MartonConfig, NoisyBC, SuperpositionChain};
use polarcast_core::prob::{JointTable, Pmf};
use polarcast_core::synthesis::{p_zero, ContextBundle, ExactSynthesis, PolarContext, ScSweep};

/// Blackwell bundle under the uniform input.
pub fn blackwell_bundle() -> ContextBundle {
    ContextBundle::det_bc(blackwell(), Pmf::uniform(3))
}

/// The binary symmetric pair chain of the worked example:
/// BSC(0.05) / BSC(0.2), V fair, X = V xor Bernoulli(alpha).
pub fn example2_chain(alpha: f64) -> SuperpositionChain {
    SuperpositionChain::symmetric(bsc_pair(0.05, 0.2).unwrap(), alpha).unwrap()
}

pub fn example2_bundle(alpha: f64) -> ContextBundle {
    ContextBundle::Superposition {
        chain: example2_chain(alpha),
    }
}

/// X carries the auxiliary pair; Y1 reads the first coordinate noiselessly
/// and Y2 reads the second through BSC(q).
pub fn pair_readout_channel(q: f64) -> NoisyBC {
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

/// Marton test configuration: P(V1 != V2) = r symmetric, phi the pair map.
pub fn marton_test_config(r: f64, q: f64) -> MartonConfig {
    let pv = JointTable::new(
        vec![2, 2],
        vec![(1.0 - r) / 2.0, r / 2.0, r / 2.0, (1.0 - r) / 2.0],
    )
    .unwrap();
    MartonConfig::new(pv, [[0, 1], [2, 3]], pair_readout_channel(q)).unwrap()
}

pub fn marton_bundle(r: f64, q: f64) -> ContextBundle {
    ContextBundle::Marton {
        config: marton_test_config(r, q),
    }
}

/// Decode a mixed-radix side code (first letter most significant) into
/// per-position letters.
pub fn decode_side(mut code: usize, w_size: usize, n: usize) -> Vec<usize> {
    let mut side = vec![0usize; n];
    for k in (0..n).rev() {
        side[k] = code % w_size;
        code /= w_size;
    }
    side
}

/// Compare the recursive sweep's conditionals against the exact oracle on
/// every reachable (prefix, side) realization of every index. Returns
/// (max abs diff, realizations checked).
pub fn oracle_equivalence(ctx: &PolarContext, n: usize) -> (f64, usize) {
    let model = ctx.letter_model().expect("context has a letter model");
    let w_size = model.w_size();
    let mut syn = ExactSynthesis::from_model(&model, n).expect("within the exact guard");
    let w_total = syn.w_total();
    let mut max_diff = 0.0f64;
    let mut checked = 0usize;
    loop {
        let j = syn.index();
        for w_code in 0..w_total {
            let side = decode_side(w_code, w_size, n);
            for prefix in 0..(1usize << j) {
                let Some((p0_exact, _)) = syn.conditional(prefix, w_code) else {
                    continue;
                };
                let mut sweep = ScSweep::new(&model, &side);
                for t in 0..j {
                    let bit = ((prefix >> (j - 1 - t)) & 1) as u8;
                    sweep.next_llr();
                    sweep.push(bit);
                }
                let p0_sweep = p_zero(sweep.next_llr());
                max_diff = max_diff.max((p0_sweep - p0_exact).abs());
                checked += 1;
            }
        }
        if j == 0 {
            break;
        }
        syn.step_down();
    }
    (max_diff, checked)
}

/// All contexts of the three benchmark configurations.
pub fn all_benchmark_contexts() -> Vec<(String, PolarContext)> {
    let mut out = Vec::new();
    for bundle in [
        blackwell_bundle(),
        example2_bundle(0.25),
        marton_bundle(0.25, 0.1),
    ] {
        for ctx in bundle.contexts() {
            out.push((ctx.label(), ctx));
        }
    }
    out
}
