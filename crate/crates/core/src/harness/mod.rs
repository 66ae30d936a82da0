//! Experiment orchestration: single runs, step-size and dimension-scaling
//! studies, invariant audits and oracle benchmarks. Every command writes CSV
//! plus a summary into the configured output directory; every file written
//! from a config ends with a `# config_sha256 <hex>` footer.

pub mod audit;
pub mod config;
pub mod plot;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::{info, warn};

use crate::baseline::{centralized_solve, load_oracle_cache, pga_run, store_oracle_cache, OracleResult};
use crate::dfwagt::{run, RunTrace, StepCompliance, StepRule};
use crate::error::{Error, Result};
use crate::graph::GraphSchedule;
use crate::oracles::{bench_oracle, BenchStats, OracleId};
use crate::problem::AggregativeProblem;

pub use audit::{AuditCheck, AuditReport, AuditThresholds, CheckStatus};
pub use config::{Algorithm, ExperimentConfig, GraphKind, InitMode, SetKind};
use plot::{line_chart, Series};

pub const TRACE_HEADER: &str = "k,f,fw_gap,C_k,y_cons_err,round_time_ns";
pub const REPORT_HEADER: &str = "algorithm,n,final_rel_err,time_to_target_ns,subproblem_median_ns";
pub const ERROR_TIME_HEADER: &str = "elapsed_ns,rel_err";
pub const STUDY_HEADER: &str = "rule,nonincreasing,nonsummable,square_summable,final_f,final_gap,rel_err";

/// `|f - f*| / (1 + |f*|)`
pub fn rel_err(f: f64, f_star: f64) -> f64 {
    (f - f_star).abs() / (1.0 + f_star.abs())
}

fn footer(hash: &str) -> String {
    format!("# config_sha256 {hash}\n")
}

fn write_output(dir: &Path, name: &str, body: &str, hash: Option<&str>) -> Result<()> {
    let mut text = body.to_string();
    if let Some(h) = hash {
        text.push_str(&footer(h));
    }
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// Trace as CSV. Without `record_timing` the time column is written as 0 so
/// that the file depends only on the config.
pub fn trace_csv(trace: &RunTrace, record_timing: bool) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for r in &trace.records {
        let t = if record_timing { r.round_time_ns } else { 0 };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k, r.objective, r.fw_gap, r.consensus_err, r.tracker_err, t
        );
    }
    out
}

/// Ground truth at dimension `n`, from `<dir>/oracle_n<n>.txt` when its key
/// matches, otherwise recomputed and cached. A stale or unreadable cache is
/// never used.
pub fn oracle_for(config: &ExperimentConfig, n: usize, dir: Option<&Path>) -> Result<OracleResult> {
    let key = config.oracle_key(n);
    let path = dir.map(|d| d.join(format!("oracle_n{n}.txt")));
    if let Some(path) = &path {
        match load_oracle_cache(path, &key) {
            Ok(Some(r)) if r.fw_gap_at_solution <= config.oracle.tol => {
                info!("oracle cache hit: {}", path.display());
                return Ok(r);
            }
            Ok(_) => {}
            Err(e @ (Error::StaleCache { .. } | Error::Parse { .. })) => {
                warn!("ignoring oracle cache: {e}");
            }
            Err(e) => return Err(e),
        }
    }
    let problem = config.build_problem(n)?;
    let result = centralized_solve(&problem, config.oracle.tol, config.oracle.max_iter)?;
    info!(
        "oracle n={n}: f* = {} (gap {:.2e}, {} sweeps)",
        result.f_star, result.fw_gap_at_solution, result.iterations
    );
    if let Some(path) = &path {
        store_oracle_cache(path, &key, &result)?;
    }
    Ok(result)
}

/// One run of `algorithm` as configured.
pub fn execute(
    config: &ExperimentConfig,
    algorithm: Algorithm,
    problem: &AggregativeProblem,
    schedule: &GraphSchedule,
    record_every: u64,
) -> Result<RunTrace> {
    let x0 = config.initial_profile(problem);
    match algorithm {
        Algorithm::Dfwagt => run(problem, schedule, config.step_schedule()?, &x0, config.rounds, record_every),
        Algorithm::Pga => pga_run(problem, schedule, config.pga_options(), &x0, config.rounds, record_every),
    }
}

fn thresholds(config: &ExperimentConfig, problem: &AggregativeProblem) -> AuditThresholds {
    AuditThresholds {
        diameter: problem.max_diameter(),
        consensus_factor: config.audit.consensus_factor,
        tracker_factor: config.audit.tracker_factor,
        decay_from_round: config.audit.decay_from_round,
    }
}

fn prepare_dir(config: &ExperimentConfig) -> Result<&Path> {
    let dir = config.output.dir.as_path();
    fs::create_dir_all(dir)?;
    Ok(dir)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub config_hash: String,
    pub algorithm: Algorithm,
    pub agents: usize,
    pub n: usize,
    pub rounds: u64,
    pub f_final: f64,
    pub f_star: f64,
    pub rel_err: f64,
    pub fw_gap: f64,
    pub consensus_err: f64,
    pub tracker_err: f64,
    pub audit: AuditReport,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "algorithm      {}", self.algorithm.name());
        let _ = writeln!(out, "agents         {}", self.agents);
        let _ = writeln!(out, "n              {}", self.n);
        let _ = writeln!(out, "rounds         {}", self.rounds);
        let _ = writeln!(out, "f_final        {}", self.f_final);
        let _ = writeln!(out, "f_star         {}", self.f_star);
        let _ = writeln!(out, "rel_err        {:e}", self.rel_err);
        let _ = writeln!(out, "fw_gap         {:e}", self.fw_gap);
        let _ = writeln!(out, "C_k            {:e}", self.consensus_err);
        let _ = writeln!(out, "y_cons_err     {:e}", self.tracker_err);
        let verdict = if self.audit.passed() { "pass" } else { "FAIL" };
        let _ = writeln!(out, "invariants     {verdict}");
        out.push_str(&self.audit.to_string());
        out
    }
}

/// Runs the configured experiment and writes `trace.csv`, `summary.txt` and
/// (optionally) `objective.svg`. Invariant failures are reported in the
/// summary, not as an error; see [`AuditReport::into_result`].
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let dir = prepare_dir(config)?;
    let hash = config.hash();
    let n = config.problem.n;
    let problem = config.build_problem(n)?;
    let schedule = config.build_schedule()?;
    let oracle = oracle_for(config, n, Some(dir))?;
    let trace = execute(config, config.algorithm, &problem, &schedule, config.record_every)?;
    let last = trace.last();
    let summary = RunSummary {
        config_hash: hash.clone(),
        algorithm: config.algorithm,
        agents: problem.n_agents(),
        n,
        rounds: config.rounds,
        f_final: last.objective,
        f_star: oracle.f_star,
        rel_err: rel_err(last.objective, oracle.f_star),
        fw_gap: last.fw_gap,
        consensus_err: last.consensus_err,
        tracker_err: last.tracker_err,
        audit: AuditReport::evaluate(&trace, &thresholds(config, &problem)),
    };
    write_output(dir, "trace.csv", &trace_csv(&trace, config.output.record_timing), Some(&hash))?;
    write_output(dir, "summary.txt", &summary.to_text(), Some(&hash))?;
    if config.output.plot {
        let err: Vec<(f64, f64)> = trace
            .records
            .iter()
            .map(|r| (r.k as f64, rel_err(r.objective, oracle.f_star)))
            .collect();
        let gap: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.k as f64, r.fw_gap)).collect();
        let svg = line_chart(
            "objective vs iteration",
            "k",
            "log10",
            &[
                Series { label: "relative error", points: err },
                Series { label: "fw gap", points: gap },
            ],
            true,
        );
        fs::write(dir.join("objective.svg"), svg)?;
    }
    Ok(summary)
}

/// Runs with every round recorded and checks the invariants. Writes
/// `audit.txt`.
pub fn cmd_audit(config: &ExperimentConfig) -> Result<AuditReport> {
    config.validate()?;
    let dir = prepare_dir(config)?;
    let problem = config.build_problem(config.problem.n)?;
    let schedule = config.build_schedule()?;
    let trace = execute(config, config.algorithm, &problem, &schedule, 1)?;
    let report = AuditReport::evaluate(&trace, &thresholds(config, &problem));
    write_output(dir, "audit.txt", &report.to_string(), Some(&config.hash()))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub rule: StepRule,
    pub compliance: StepCompliance,
    pub final_f: f64,
    /// `f(x_K) - f*`
    pub final_gap: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub f_star: f64,
    pub rows: Vec<StudyRow>,
}

impl StudyReport {
    pub fn row(&self, rule: StepRule) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.rule == rule)
    }
}

fn file_stem(rule: StepRule) -> String {
    rule.name()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Runs D-FWAGT once per step rule with identical seeds. Writes
/// `trace_<rule>.csv`, the aligned `comparison.csv` of `f(x_k)` per rule,
/// `study.csv` and `stepsize.svg`.
pub fn cmd_stepsize_study(config: &ExperimentConfig, rules: &[StepRule]) -> Result<StudyReport> {
    config.validate()?;
    let distinct: BTreeSet<String> = rules.iter().map(|r| r.name()).collect();
    if distinct.len() < 2 || distinct.len() != rules.len() {
        return Err(Error::Config {
            key: "study.rules".into(),
            message: format!("need at least 2 distinct rules, got {}", rules.len()),
        });
    }
    if config.algorithm != Algorithm::Dfwagt {
        return Err(Error::Config {
            key: "algorithm".into(),
            message: "the step-size study applies to dfwagt".into(),
        });
    }
    let dir = prepare_dir(config)?;
    let hash = config.hash();
    let n = config.problem.n;
    let problem = config.build_problem(n)?;
    let schedule = config.build_schedule()?;
    let oracle = oracle_for(config, n, Some(dir))?;

    let mut traces = Vec::with_capacity(rules.len());
    let mut rows = Vec::with_capacity(rules.len());
    for &rule in rules {
        let mut c = config.clone();
        c.steps.rule = rule.name();
        let trace = execute(&c, Algorithm::Dfwagt, &problem, &schedule, config.record_every)?;
        write_output(
            dir,
            &format!("trace_{}.csv", file_stem(rule)),
            &trace_csv(&trace, config.output.record_timing),
            Some(&hash),
        )?;
        let last = trace.last();
        rows.push(StudyRow {
            rule,
            compliance: c.step_schedule()?.compliance(),
            final_f: last.objective,
            final_gap: last.objective - oracle.f_star,
            rel_err: rel_err(last.objective, oracle.f_star),
        });
        traces.push(trace);
    }

    let mut cmp = String::from("k");
    for rule in rules {
        let _ = write!(cmp, ",{}", rule.name());
    }
    cmp.push('\n');
    for (idx, r) in traces[0].records.iter().enumerate() {
        let _ = write!(cmp, "{}", r.k);
        for t in &traces {
            let _ = write!(cmp, ",{}", t.records[idx].objective);
        }
        cmp.push('\n');
    }
    write_output(dir, "comparison.csv", &cmp, Some(&hash))?;

    let mut study = format!("{STUDY_HEADER}\n");
    for r in &rows {
        let _ = writeln!(
            study,
            "{},{},{},{},{},{},{}",
            r.rule.name(),
            r.compliance.nonincreasing,
            r.compliance.nonsummable,
            r.compliance.square_summable,
            r.final_f,
            r.final_gap,
            r.rel_err
        );
    }
    write_output(dir, "study.csv", &study, Some(&hash))?;

    if config.output.plot {
        let names: Vec<String> = rules.iter().map(|r| r.name()).collect();
        let series: Vec<Series> = traces
            .iter()
            .zip(&names)
            .map(|(t, name)| Series {
                label: name,
                points: t
                    .records
                    .iter()
                    .map(|r| (r.k as f64, r.objective - oracle.f_star))
                    .collect(),
            })
            .collect();
        let svg = line_chart("f(x_k) - f* per step rule", "k", "log10 gap", &series, true);
        fs::write(dir.join("stepsize.svg"), svg)?;
    }
    Ok(StudyReport {
        f_star: oracle.f_star,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub final_rel_err: f64,
    /// Cumulative round time until the relative error first reached the
    /// target, at record granularity.
    pub time_to_target_ns: Option<u64>,
    pub subproblem_median_ns: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, algorithm: Algorithm, n: usize) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.n == n)
    }

    /// Median PGA subproblem time over median D-FWAGT subproblem time.
    pub fn subproblem_ratio(&self, n: usize) -> Option<f64> {
        let pga = self.row(Algorithm::Pga, n)?;
        let fw = self.row(Algorithm::Dfwagt, n)?;
        Some(pga.subproblem_median_ns / fw.subproblem_median_ns)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for r in &self.rows {
            let t = r.time_to_target_ns.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.algorithm.name(),
                r.n,
                r.final_rel_err,
                t,
                r.subproblem_median_ns
            );
        }
        out
    }
}

/// The oracle each algorithm calls once per agent and round.
pub fn subproblem_oracle(config: &ExperimentConfig, algorithm: Algorithm) -> Result<OracleId> {
    match (algorithm, config.set_kind()) {
        (Algorithm::Dfwagt, SetKind::L1) => Ok(OracleId::LmoL1),
        (Algorithm::Dfwagt, SetKind::Linf) => Ok(OracleId::LmoLinf),
        (Algorithm::Pga, SetKind::L1) if config.pga.slow_projection => Ok(OracleId::ProjectL1ActiveSet),
        (Algorithm::Pga, SetKind::L1) => Ok(OracleId::ProjectL1),
        (Algorithm::Pga, SetKind::Linf) => Err(Error::Config {
            key: "problem.set".into(),
            message: "the scaling study benchmarks ℓ1 projections only".into(),
        }),
    }
}

/// Runs every `(algorithm, n)` cell to `config.rounds` with timing on,
/// benchmarks its subproblem oracle, and writes `scaling_report.csv`,
/// `error_time_<algorithm>_n<n>.csv` and `scaling.svg`. Cells run one at a
/// time so that timings do not interfere.
pub fn cmd_scaling_study(
    config: &ExperimentConfig,
    dims: &[usize],
    algorithms: &[Algorithm],
) -> Result<ComparisonReport> {
    config.validate()?;
    if dims.is_empty() {
        return Err(Error::Config {
            key: "scaling.dims".into(),
            message: "must list at least one dimension".into(),
        });
    }
    if algorithms.is_empty() {
        return Err(Error::Config {
            key: "scaling.algorithms".into(),
            message: "must list at least one algorithm".into(),
        });
    }
    if let Some(&n) = dims.iter().find(|&&n| n == 0) {
        return Err(Error::Config {
            key: "scaling.dims".into(),
            message: format!("dimension {n} is not positive"),
        });
    }
    for &n in dims {
        if !n.is_power_of_two() {
            warn!("dimension {n} is not a power of two");
        }
    }
    for &a in algorithms {
        subproblem_oracle(config, a)?;
    }
    let dir = prepare_dir(config)?;
    let hash = config.hash();
    let schedule = config.build_schedule()?;
    let mut rows = Vec::new();
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for &n in dims {
        let problem = config.build_problem(n)?;
        let oracle = oracle_for(config, n, Some(dir))?;
        for &algorithm in algorithms {
            let trace = execute(config, algorithm, &problem, &schedule, config.record_every)?;
            let points: Vec<(f64, f64)> = trace
                .records
                .iter()
                .map(|r| (r.elapsed_ns as f64, rel_err(r.objective, oracle.f_star)))
                .collect();
            let time_to_target_ns = points
                .iter()
                .find(|(_, e)| *e <= config.scaling.target_rel_err)
                .map(|(t, _)| *t as u64);
            let stats = bench_oracle(
                subproblem_oracle(config, algorithm)?,
                n,
                config.scaling.bench_trials,
                config.seeds.bench,
            )?;
            let mut csv = format!("{ERROR_TIME_HEADER}\n");
            for (t, e) in &points {
                let _ = writeln!(csv, "{},{}", *t as u64, e);
            }
            write_output(dir, &format!("error_time_{}_n{n}.csv", algorithm.name()), &csv, Some(&hash))?;
            let final_rel_err = rel_err(trace.last().objective, oracle.f_star);
            info!(
                "{} n={n}: rel_err {final_rel_err:.3e}, subproblem median {:.0} ns",
                algorithm.name(),
                stats.median_ns
            );
            rows.push(ComparisonRow {
                algorithm,
                n,
                final_rel_err,
                time_to_target_ns,
                subproblem_median_ns: stats.median_ns,
            });
            curves.push((format!("{} n={n}", algorithm.name()), points));
        }
    }
    let report = ComparisonReport { rows };
    write_output(dir, "scaling_report.csv", &report.to_csv(), Some(&hash))?;
    if config.output.plot {
        let series: Vec<Series> = curves
            .iter()
            .map(|(label, pts)| Series {
                label,
                points: pts.iter().map(|&(t, e)| (t * 1e-6, e)).collect(),
            })
            .collect();
        let svg = line_chart("relative error vs wall time", "ms", "log10 rel err", &series, true);
        fs::write(dir.join("scaling.svg"), svg)?;
    }
    Ok(report)
}

/// Benchmarks each oracle at each dimension. Writes `bench.csv` into `out`
/// when given.
pub fn cmd_bench(
    oracles: &[OracleId],
    dims: &[usize],
    trials: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<Vec<BenchStats>> {
    if oracles.is_empty() || dims.is_empty() {
        return Err(Error::Config {
            key: if oracles.is_empty() { "oracles" } else { "dims" }.into(),
            message: "must not be empty".into(),
        });
    }
    let mut stats = Vec::with_capacity(oracles.len() * dims.len());
    for &n in dims {
        for &o in oracles {
            stats.push(bench_oracle(o, n, trials, seed)?);
        }
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut csv = format!("{}\n", BenchStats::CSV_HEADER);
        for s in &stats {
            csv.push_str(&s.csv_row());
            csv.push('\n');
        }
        write_output(dir, "bench.csv", &csv, None)?;
    }
    Ok(stats)
}
