//! Runner and CLI contract tests: strict parsing, exit codes, artifact
//! determinism, and the ladder cache.

use std::path::Path;
use std::process::Command;

use infinimix::error::Error;
use infinimix::maps::PiecewiseMap;
use infinimix::observables::LocalObservable;
use infinimix::scenario::{
    cache_lattice_ladder, load_scenario, run_scenario, LadderCache, RunOptions, ScenarioConfig,
};

const MINIMAL_CORR: &str = r#"
[map]
id = "rw:-1:2"

[observables]
F = "halfcell:1"
g = "indicator:0:1"

[run]
experiment = "corr"
n = "0..40"
method = "exact"
"#;

#[test]
fn minimal_scenario_parses_with_41_steps() {
    let cfg = ScenarioConfig::parse(MINIMAL_CORR).unwrap();
    assert_eq!(cfg.n_list().unwrap().len(), 41);
    assert_eq!(cfg.map.id, "rw:-1:2");
}

#[test]
fn non_expanding_map_is_rejected_at_parse_time() {
    let text = MINIMAL_CORR.replace("rw:-1:2", "rw:0:1");
    let err = ScenarioConfig::parse(&text).unwrap_err();
    assert!(err.to_string().contains("k2 - k1 >= 2"), "{err}");
}

#[test]
fn unknown_keys_are_rejected_naming_the_field() {
    let text = MINIMAL_CORR.replace("experiment = \"corr\"", "experiment = \"corr\"\ntolrance = 0.1");
    match ScenarioConfig::parse(&text) {
        Err(Error::Scenario(msg)) => {
            assert!(msg.contains("tolrance"), "{msg}");
            assert!(msg.contains("tolerance"), "should name the expected key: {msg}");
        }
        other => panic!("expected strict-mode rejection, got {other:?}"),
    }
}

#[test]
fn unresolved_ids_list_nearest_matches() {
    let text = MINIMAL_CORR.replace("halfcell:1", "halfcel:1");
    match ScenarioConfig::parse(&text) {
        Err(Error::UnknownId { candidates, .. }) => {
            assert!(candidates[0].starts_with("halfcell"), "{candidates:?}");
        }
        other => panic!("expected unknown id, got {other:?}"),
    }
}

#[test]
fn normal_form_is_idempotent() {
    let cfg = ScenarioConfig::parse(MINIMAL_CORR).unwrap();
    let normal = cfg.normal_form();
    let cfg2 = ScenarioConfig::parse(&normal).unwrap();
    assert_eq!(normal, cfg2.normal_form());
}

#[test]
fn bundled_scenarios_all_parse() {
    for (name, text) in infinimix::scenario::bundled_scenarios() {
        ScenarioConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn boole_sign_scenario_passes_with_vanishing_rho() {
    let (name, text) = load_scenario("boole-sign").unwrap();
    let cfg = ScenarioConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let artifact = run_scenario(
        &cfg,
        &name,
        &RunOptions {
            out_dir: dir.path().to_path_buf(),
            cache_dir: None,
        },
    );
    assert_eq!(artifact.status, "pass", "{:?}", artifact.payload);
    assert_eq!(artifact.exit_code, 0);
    let rho = artifact.payload["rho_hat"].as_f64().unwrap();
    assert!(rho.abs() <= 0.05, "rho {rho}");
}

#[test]
fn rw_lin_scenario_series_contract() {
    let (name, text) = load_scenario("rw-lin").unwrap();
    let cfg = ScenarioConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let artifact = run_scenario(
        &cfg,
        &name,
        &RunOptions {
            out_dir: dir.path().to_path_buf(),
            cache_dir: None,
        },
    );
    assert_eq!(artifact.exit_code, 0);
    let values: Vec<f64> = artifact.payload["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((values[1] - 2.0 / 3.0).abs() < 1e-15, "||P g||_1 = {}", values[1]);
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
    assert!(dir.path().join("rw-lin.series.csv").exists());
    assert!(dir.path().join("rw-lin.artifact.json").exists());
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let (name, text) = load_scenario("ac-02").unwrap();
    let cfg = ScenarioConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: dir.path().to_path_buf(),
        cache_dir: None,
    };
    let a = run_scenario(&cfg, &name, &opts);
    let b = run_scenario(&cfg, &name, &opts);
    assert_eq!(
        serde_json::to_string(&a.payload).unwrap(),
        serde_json::to_string(&b.payload).unwrap()
    );
    assert_eq!(a.config_echo, b.config_echo);
}

#[test]
fn cache_results_are_transparent() {
    let (name, text) = load_scenario("ac-02").unwrap();
    let cfg = ScenarioConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache_dir = dir.path().join("cache");
    let cached = RunOptions {
        out_dir: dir.path().to_path_buf(),
        cache_dir: Some(cache_dir.clone()),
    };
    let cold = run_scenario(&cfg, &name, &cached);
    let warm = run_scenario(&cfg, &name, &cached);
    let uncached = run_scenario(
        &cfg,
        &name,
        &RunOptions {
            out_dir: dir.path().to_path_buf(),
            cache_dir: None,
        },
    );
    assert!(warm.cache_hits > cold.cache_hits);
    let p = |a: &infinimix::scenario::RunArtifact| serde_json::to_string(&a.payload).unwrap();
    assert_eq!(p(&cold), p(&warm));
    assert_eq!(p(&cold), p(&uncached));
}

#[test]
fn ladder_cache_build_hit_and_extend() {
    let dir = tempfile::tempdir().unwrap();
    let map = PiecewiseMap::random_walk(-1, 2).unwrap();
    let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();

    let h1 = cache_lattice_ladder(&map, &g, 1000, dir.path()).unwrap();
    assert_eq!(h1.max_step, 1000);
    assert_eq!(h1.entries_loaded, 0);

    // request below nmax: everything is served from the file
    let h2 = cache_lattice_ladder(&map, &g, 500, dir.path()).unwrap();
    assert_eq!(h2.entries_loaded, 1001);
    assert_eq!(h2.max_step, 1000);

    // request beyond nmax: the ladder extends by the difference
    let h3 = cache_lattice_ladder(&map, &g, 1200, dir.path()).unwrap();
    assert_eq!(h3.entries_loaded, 1001);
    assert_eq!(h3.max_step, 1200);

    // the cached rungs hold the hand-computed two-step masses
    let cache = LadderCache::new(dir.path().to_path_buf());
    let ladder = cache
        .load(map.id(), g.id(), map.jump_law().unwrap())
        .unwrap()
        .unwrap();
    match &ladder.entries()[2] {
        infinimix::lattice::LadderEntry::Exact(m) => {
            use num_bigint::BigInt;
            use num_rational::BigRational;
            let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
            for (cell, num) in [(-2i64, 1i64), (-1, 2), (0, 3), (1, 2), (2, 1)] {
                assert_eq!(m.mass(cell), r(num, 9));
            }
        }
        _ => panic!("entry 2 must be exact"),
    }
}

#[test]
fn corrupt_cache_is_detected_and_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let map = PiecewiseMap::random_walk(-1, 2).unwrap();
    let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();
    let h = cache_lattice_ladder(&map, &g, 50, dir.path()).unwrap();

    // flip a digit inside the body
    let text = std::fs::read_to_string(&h.path).unwrap();
    let vandalized = text.replacen("numer 1", "numer 2", 1);
    assert_ne!(text, vandalized);
    std::fs::write(&h.path, vandalized).unwrap();

    let cache = LadderCache::new(dir.path().to_path_buf());
    assert!(cache
        .load(map.id(), g.id(), map.jump_law().unwrap())
        .unwrap()
        .is_none());

    // a fresh build overwrites the bad file and loads cleanly afterwards
    let h2 = cache_lattice_ladder(&map, &g, 50, dir.path()).unwrap();
    assert_eq!(h2.entries_loaded, 0);
    assert!(cache
        .load(map.id(), g.id(), map.jump_law().unwrap())
        .unwrap()
        .is_some());
}

// ------------------------------------------------------------------
// Binary-level contract: exit codes and outputs.
// ------------------------------------------------------------------

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_infinimix"))
}

fn run_in(dir: &Path, args: &[&str]) -> std::process::Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

#[test]
fn cli_pass_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["run", "ac-10", "--out", ".", "--no-cache"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("ac-10.artifact.json").exists());
    assert!(dir.path().join("ac-10.series.csv").exists());
}

#[test]
fn cli_not_uniform_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = r#"
[map]
id = "rw:-1:2"

[observables]
F = "sign"

[family]
kind = "translated"
probes = ["0", "+M", "-M"]
ladder = [10.0, 100.0, 1000.0, 10000.0]

[run]
experiment = "avg"
n = [0]
"#;
    std::fs::write(dir.path().join("nu.toml"), scenario).unwrap();
    let out = run_in(dir.path(), &["run", "nu.toml", "--out", ".", "--no-cache"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn cli_inconclusive_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    // A step with a small one-sided tail: window means at +-M disagree by
    // about 0.02, between tol and 10 tol.
    let scenario = r#"
[map]
id = "rw:-1:2"

[observables]
F = "step:0:0.02:0:0"

[family]
kind = "translated"
probes = ["+M", "-M"]
ladder = [10.0, 100.0, 1000.0, 10000.0]

[run]
experiment = "avg"
n = [0]
tolerance = 5e-3
"#;
    std::fs::write(dir.path().join("inc.toml"), scenario).unwrap();
    let out = run_in(dir.path(), &["run", "inc.toml", "--out", ".", "--no-cache"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn cli_error_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["run", "no-such-scenario", "--out", "."]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cli_module_error_lands_in_artifact() {
    let dir = tempfile::tempdir().unwrap();
    // exact method on a map without a jump law: captured, not crashed
    let scenario = r#"
[map]
id = "boole"

[observables]
F = "sign"
g = "indicator:-1:1:norm"

[run]
experiment = "corr"
n = "0..3"
method = "exact"
"#;
    std::fs::write(dir.path().join("bad.toml"), scenario).unwrap();
    let out = run_in(dir.path(), &["run", "bad.toml", "--out", ".", "--no-cache"]);
    assert_eq!(out.status.code(), Some(1));
    let artifact: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bad.artifact.json")).unwrap())
            .unwrap();
    assert_eq!(artifact["status"], "error");
    assert!(artifact["payload"]["error"]
        .as_str()
        .unwrap()
        .contains("exact-lattice"));
}

#[test]
fn cli_list_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["list", "maps"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("boole"));
    let out = run_in(dir.path(), &["list", "scenarios"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("ac-07"));

    run_in(dir.path(), &["run", "ac-10", "--out", ".", "--no-cache"]);
    let out = run_in(dir.path(), &["report", "ac-10.artifact.json"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("avol") && text.contains("pass"), "{text}");
}

#[test]
fn csv_columns_match_contract() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["run", "ac-02", "--out", ".", "--no-cache"]);
    let csv = std::fs::read_to_string(dir.path().join("ac-02.series.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,estimate,error_bound,method"));
    let first = lines.next().unwrap();
    let cols: Vec<&str> = first.split(',').collect();
    assert_eq!(cols.len(), 4);
    assert_eq!(cols[0], "0");
}
