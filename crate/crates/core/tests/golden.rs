//! Frozen-value tests. Each golden file was produced by the code path it
//! now checks, after that path was verified against the independent
//! enumeration oracle; any drift in numerics, seeding, or protocol order
//! shows up as a diff here. Set POLARCAST_REGEN_GOLDEN=1 to rewrite.

mod common;

use common::{blackwell_bundle, example2_bundle, example2_chain, marton_bundle, marton_test_config};
use polarcast_core::channels::blackwell;
use polarcast_core::detbc::{DetCodeSpec, DetMode};
use polarcast_core::harness::wilson_interval;
use polarcast_core::marton::MaCodeSpec;
use polarcast_core::prob::Pmf;
use polarcast_core::seeding::{master_from, substream};
use polarcast_core::superposition::SpCodeSpec;
use polarcast_core::synthesis::{
    build_sets, exact_index_stats, tv_diagnostic, BuildOptions, PolarizationSets,
};
use rand::Rng;
use serde_json::Value;
use std::path::PathBuf;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compare against the stored value, or rewrite it when regenerating.
fn check_golden(name: &str, value: &Value) {
    let path = golden_path(name);
    if std::env::var_os("POLARCAST_REGEN_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
        return;
    }
    let stored: Value = serde_json::from_str(
        &std::fs::read_to_string(&path)
            .unwrap_or_else(|_| panic!("missing golden file {name}; regenerate first")),
    )
    .unwrap();
    assert!(
        json_close(&stored, value, 1e-11),
        "{name} drifted from its golden value.\nstored: {stored}\nnow: {value}"
    );
}

fn json_close(a: &Value, b: &Value, tol: f64) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs()))
        }
        (Value::Array(xs), Value::Array(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| json_close(x, y, tol))
        }
        (Value::Object(xs), Value::Object(ys)) => {
            xs.len() == ys.len()
                && xs
                    .iter()
                    .all(|(k, x)| ys.get(k).is_some_and(|y| json_close(x, y, tol)))
        }
        _ => a == b,
    }
}

#[test]
fn blackwell_row2_n4_exact_oracle_values() {
    let bundle = blackwell_bundle();
    let ctx = &bundle.contexts()[1];
    let stats = exact_index_stats(ctx, 4).unwrap();
    check_golden(
        "blackwell_row2_n4_exact.json",
        &serde_json::json!({ "z": stats.z, "h": stats.h }),
    );
}

#[test]
fn sp_example2_n8_exact_sets() {
    let sets = build_sets(&example2_bundle(0.25), 8, &BuildOptions::exact(0.3)).unwrap();
    check_golden(
        "sp_example2_n8_exact_sets.json",
        &serde_json::json!({
            "delta": sets.delta,
            "sets": sets.sets,
            "targets": sets.targets,
        }),
    );
}

fn seeded_bits(label: &str, count: usize, seed: u64) -> Vec<u8> {
    let master = master_from(seed, label);
    let mut rng = substream(&master, 0);
    (0..count).map(|_| rng.gen_range(0..2u8)).collect()
}

#[test]
fn detbc_blackwell_n8_codeword() {
    let bundle = blackwell_bundle();
    let sets = build_sets(&bundle, 8, &BuildOptions::exact(0.3)).unwrap();
    let spec = DetCodeSpec::from_sets(blackwell(), Pmf::uniform(3), vec![0, 1], &sets, 2026).unwrap();
    let messages: Vec<Vec<u8>> = (0..2)
        .map(|r| seeded_bits("golden-det", spec.message_len(r), 41 + r as u64))
        .collect();
    let out = spec
        .encode(&messages, DetMode::Random)
        .expect("seed chosen so the block encodes");
    for k in 0..8 {
        assert!(!(out.y_rows[0][k] == 1 && out.y_rows[1][k] == 0));
    }
    check_golden(
        "detbc_blackwell_n8_codeword.json",
        &serde_json::json!({
            "messages": messages,
            "x": out.x,
            "y_rows": out.y_rows,
            "u_rows": out.u_rows,
        }),
    );
}

#[test]
fn sp_example2_n8_codeword() {
    let chain = example2_chain(0.25);
    let sets = build_sets(&example2_bundle(0.25), 8, &BuildOptions::exact(0.3)).unwrap();
    let spec = SpCodeSpec::from_sets(chain, &sets, 2026).unwrap();
    let w1 = seeded_bits("golden-sp-w1", spec.m1_len(), 7);
    let w2 = seeded_bits("golden-sp-w2", spec.m2_len(), 8);
    let detail = spec.encode_detail(&w1, &w2).unwrap();
    check_golden(
        "sp_example2_n8_codeword.json",
        &serde_json::json!({
            "w1": w1,
            "w2": w2,
            "u2": detail.u2,
            "v": detail.v,
            "u1": detail.u1,
            "x": detail.x,
        }),
    );
}

#[test]
fn marton_n8_codeword_and_genie() {
    let config = marton_test_config(0.25, 0.1);
    let sets = build_sets(&marton_bundle(0.25, 0.1), 8, &BuildOptions::exact(0.3)).unwrap();
    let spec = MaCodeSpec::from_sets(config, &sets, 2026).unwrap();
    let w1 = seeded_bits("golden-ma-w1", spec.m1_len(), 9);
    let w2 = seeded_bits("golden-ma-w2", spec.m2_len(), 10);
    let (x, genie) = spec.encode(&w1, &w2).unwrap();
    assert_eq!(genie.len(), spec.genie_len());
    check_golden(
        "marton_n8_codeword.json",
        &serde_json::json!({
            "w1": w1,
            "w2": w2,
            "x": x,
            "genie": genie,
            "delta2": spec.delta2(),
        }),
    );
}

// Message sets thresholded from exact Z at delta = 0.1, diagnostic values
// frozen; the inequality must hold regardless.
#[test]
fn blackwell_n8_tv_diagnostic() {
    let bundle = blackwell_bundle();
    let mut sets = build_sets(&bundle, 8, &BuildOptions::exact(0.3)).unwrap();
    retighten_messages(&mut sets, &["M_1", "M_2"], &["det_row_0", "det_row_1"], 0.1);
    let d = tv_diagnostic(&bundle, &sets, 8).unwrap();
    assert!(d.tv_exact <= d.kl_bound + 1e-9);
    check_golden(
        "blackwell_n8_tv.json",
        &serde_json::json!({
            "m1": sets.sets["M_1"],
            "m2": sets.sets["M_2"],
            "tv_exact": d.tv_exact,
            "kl_bound": d.kl_bound,
            "kl_sum_bits": d.kl_sum_bits,
        }),
    );
}

fn retighten_messages(sets: &mut PolarizationSets, names: &[&str], contexts: &[&str], delta: f64) {
    for (name, ctx) in names.iter().zip(contexts) {
        let z = &sets.stats[*ctx].z;
        let m: Vec<usize> = (0..sets.n).filter(|&j| z[j] >= 1.0 - delta).collect();
        sets.sets.insert((*name).to_string(), m);
    }
}

#[test]
fn marton_two_phase_n1024_accounting() {
    let config = marton_test_config(0.25, 0.1);
    let sets = build_sets(
        &marton_bundle(0.25, 0.1),
        1024,
        &BuildOptions::monte_carlo(0.3, 4000, 31),
    )
    .unwrap();
    let spec = MaCodeSpec::from_sets_with_repair(config, &sets, 31).unwrap();
    let report = spec.two_phase_simulate(50, 31).unwrap();
    let (lo, hi) = wilson_interval(report.d2_block_errors, report.blocks);
    assert!(lo <= hi);
    check_golden(
        "marton_two_phase_n1024.json",
        &serde_json::json!({
            "blocks": report.blocks,
            "r1": report.r1,
            "r2": report.r2,
            "r2_eff": report.r2_eff,
            "genie_bits_per_block": report.genie_bits_per_block,
            "eta": report.eta,
            "d1_block_errors": report.d1_block_errors,
            "d2_block_errors": report.d2_block_errors,
        }),
    );
}
