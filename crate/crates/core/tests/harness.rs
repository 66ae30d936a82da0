use std::fs;
use std::path::Path;

use aggfw::harness::{
    cmd_audit, cmd_bench, cmd_run, cmd_scaling_study, cmd_stepsize_study, oracle_for, Algorithm, CheckStatus,
    ExperimentConfig, GraphKind, ERROR_TIME_HEADER, REPORT_HEADER, TRACE_HEADER,
};
use aggfw::oracles::{BenchStats, OracleId};
use aggfw::{Error, StepRule};
use tempfile::TempDir;

fn config(dir: &Path, rounds: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        rounds,
        ..ExperimentConfig::default()
    };
    c.output.dir = dir.to_path_buf();
    c
}

fn footer_hash(text: &str) -> &str {
    text.lines()
        .last()
        .and_then(|l| l.strip_prefix("# config_sha256 "))
        .expect("footer present")
}

#[test]
fn reference_run_meets_target_and_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let c = config(dir.path(), 5000);
    let summary = cmd_run(&c).unwrap();
    assert!(summary.rel_err < 1e-3, "{}", summary.rel_err);
    assert!(summary.audit.passed(), "{}", summary.audit);
    for name in ["trace.csv", "summary.txt", "objective.svg", "oracle_n16.txt"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some(TRACE_HEADER));
    assert_eq!(footer_hash(&trace), c.hash());
    let summary_text = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(footer_hash(&summary_text), c.hash());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let mut ca = config(a.path(), 400);
    let mut cb = config(b.path(), 400);
    ca.output.plot = false;
    cb.output.plot = false;
    cmd_run(&ca).unwrap();
    cmd_run(&cb).unwrap();
    let ta = fs::read(a.path().join("trace.csv")).unwrap();
    let tb = fs::read(b.path().join("trace.csv")).unwrap();
    // Output dirs differ, so the config hashes differ; compare the bodies.
    let body = |t: &[u8]| {
        let s = String::from_utf8(t.to_vec()).unwrap();
        s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(body(&ta), body(&tb));

    // Same config twice into the same directory: whole files identical.
    let first = fs::read(a.path().join("trace.csv")).unwrap();
    cmd_run(&ca).unwrap();
    assert_eq!(first, fs::read(a.path().join("trace.csv")).unwrap());
}

#[test]
fn timing_column_is_filled_only_on_request() {
    let dir = TempDir::new().unwrap();
    let mut c = config(dir.path(), 50);
    c.record_every = 1;
    c.output.record_timing = true;
    cmd_run(&c).unwrap();
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let nonzero = trace
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .filter(|l| !l.ends_with(",0"))
        .count();
    assert!(nonzero > 0);
}

#[test]
fn run_rejects_zero_rounds() {
    let dir = TempDir::new().unwrap();
    let err = cmd_run(&config(dir.path(), 0)).unwrap_err();
    assert!(matches!(err, Error::Config { ref key, .. } if key == "rounds"));
}

#[test]
fn stale_oracle_cache_is_not_used() {
    let dir = TempDir::new().unwrap();
    let c = config(dir.path(), 10);
    let fresh = oracle_for(&c, 4, Some(dir.path())).unwrap();
    let path = dir.path().join("oracle_n4.txt");
    // Same file, different instance: the key no longer matches.
    let mut other = c.clone();
    other.problem.a = 0.05;
    let recomputed = oracle_for(&other, 4, Some(dir.path())).unwrap();
    assert_ne!(recomputed.f_star, fresh.f_star);
    let cached = fs::read_to_string(&path).unwrap();
    assert!(cached.contains(&other.oracle_key(4)));
    // A tampered value under the right key is served from the cache.
    let tampered = cached.replace(&format!("f_star {}", recomputed.f_star), "f_star 123");
    fs::write(&path, tampered).unwrap();
    assert_eq!(oracle_for(&other, 4, Some(dir.path())).unwrap().f_star, 123.0);
}

#[test]
fn stepsize_study_separates_rules() {
    let dir = TempDir::new().unwrap();
    let c = config(dir.path(), 5000);
    let report = cmd_stepsize_study(&c, &[StepRule::InvK, StepRule::InvKSq]).unwrap();
    let gap_k = report.row(StepRule::InvK).unwrap().final_gap;
    let gap_k2 = report.row(StepRule::InvKSq).unwrap().final_gap;
    assert!(gap_k2 / gap_k > 10.0);
    let cmp = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert_eq!(cmp.lines().next(), Some("k,inv_k,inv_k_sq"));
    assert_eq!(footer_hash(&cmp), c.hash());
    for name in ["trace_inv_k.csv", "trace_inv_k_sq.csv", "study.csv", "stepsize.svg"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn stepsize_study_needs_two_rules() {
    let dir = TempDir::new().unwrap();
    let c = config(dir.path(), 10);
    assert!(cmd_stepsize_study(&c, &[StepRule::InvK]).is_err());
    assert!(cmd_stepsize_study(&c, &[StepRule::InvK, StepRule::InvK]).is_err());
}

#[test]
fn scaling_study_grid_shape_and_errors() {
    let dir = TempDir::new().unwrap();
    let mut c = config(dir.path(), 50);
    c.scaling.bench_trials = 20;
    let report = cmd_scaling_study(&c, &[16], &[Algorithm::Dfwagt, Algorithm::Pga]).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.subproblem_ratio(16).unwrap() > 0.0);
    let csv = fs::read_to_string(dir.path().join("scaling_report.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(REPORT_HEADER));
    let et = fs::read_to_string(dir.path().join("error_time_pga_n16.csv")).unwrap();
    assert_eq!(et.lines().next(), Some(ERROR_TIME_HEADER));
    assert_eq!(footer_hash(&et), c.hash());

    assert!(matches!(
        cmd_scaling_study(&c, &[], &[Algorithm::Dfwagt]),
        Err(Error::Config { ref key, .. }) if key == "scaling.dims"
    ));
    // Non-powers of two only warn.
    assert_eq!(cmd_scaling_study(&c, &[12], &[Algorithm::Dfwagt]).unwrap().rows.len(), 1);
}

#[test]
fn audit_passes_on_reference_config() {
    let dir = TempDir::new().unwrap();
    let report = cmd_audit(&config(dir.path(), 5000)).unwrap();
    assert!(report.passed(), "{report}");
    assert!(dir.path().join("audit.txt").exists());
}

#[test]
fn audit_names_injected_fault() {
    let dir = TempDir::new().unwrap();
    let mut c = config(dir.path(), 200);
    c.audit.fault_row = Some(1);
    let report = cmd_audit(&c).unwrap();
    assert!(!report.passed());
    let failed = report.first_failure().unwrap();
    assert_eq!(failed.name, "lemma2_v_mean");
    let CheckStatus::Fail { round } = failed.status else {
        panic!("expected failure")
    };
    assert!(round <= 5, "first failing round {round}");
    let err = report.into_result().unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn audit_single_agent_has_zero_consensus_error() {
    let dir = TempDir::new().unwrap();
    let text = r#"
rounds = 2000
[problem]
agents = 1
chi = [2.0]
k = [1.0]
radii = [3.0]
[graph]
kind = "complete"
[audit]
decay_from_round = 1000
"#;
    let mut c = ExperimentConfig::from_toml(text).unwrap();
    c.output.dir = dir.path().to_path_buf();
    assert_eq!(c.graph.kind, GraphKind::Complete);
    let report = cmd_audit(&c).unwrap();
    assert!(report.passed(), "{report}");
    let consensus = report.check("consensus_decay").unwrap();
    assert_eq!(consensus.status, CheckStatus::Pass);
    assert_eq!(consensus.worst, 0.0);
}

#[test]
fn bench_writes_documented_schema() {
    let dir = TempDir::new().unwrap();
    let stats = cmd_bench(&[OracleId::LmoL1, OracleId::ProjectL1], &[8, 16], 12, 1, Some(dir.path())).unwrap();
    assert_eq!(stats.len(), 4);
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(BenchStats::CSV_HEADER));
    assert_eq!(csv.lines().count(), 5);
    assert!(cmd_bench(&[], &[8], 12, 1, None).is_err());
}

#[test]
fn schedule_file_is_loaded_relative_to_config() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("sched.txt"),
        "agents 5\nwindow 2\nselector cyclic\ntopology 0-1 1-2\ntopology 2-3 3-4\n",
    )
    .unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "rounds = 20\n[graph]\nkind = \"file\"\nfile = \"sched.txt\"\n").unwrap();
    let c = ExperimentConfig::from_file(&cfg).unwrap();
    let s = c.build_schedule().unwrap();
    assert_eq!(s.library().len(), 2);
    assert_eq!(s.window(), 2);
}
