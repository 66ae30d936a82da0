//! Experiment configuration, read from TOML.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baseline::PgaOptions;
use crate::dfwagt::{StepRule, StepSchedule};
use crate::error::{Error, Result};
use crate::graph::{parse_schedule, GraphSchedule, Topology};
use crate::problem::{make_energy_problem, AggregativeProblem, EnergyParams, FeasibleSet, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dfwagt,
    Pga,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dfwagt => "dfwagt",
            Algorithm::Pga => "pga",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim() {
            "dfwagt" => Some(Algorithm::Dfwagt),
            "pga" => Some(Algorithm::Pga),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    L1,
    Linf,
}

/// Energy-pricing instance. Per-agent scalars are broadcast to `1_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub agents: usize,
    pub n: usize,
    pub a: f64,
    pub p0: f64,
    pub chi: Vec<f64>,
    pub k: Vec<f64>,
    pub radii: Vec<f64>,
    pub set: SetKind,
    /// Use the printed `-R sgn(d)` oracle, i.e. ℓ∞ balls instead of ℓ1.
    pub paper_literal_lmo: bool,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            agents: 5,
            n: 16,
            a: 0.04,
            p0: 5.0,
            chi: vec![3.0, 5.0, 6.0, 1.0, 2.0],
            k: vec![1.0; 5],
            radii: vec![5.0, 7.0, 9.0, 3.0, 6.0],
            set: SetKind::L1,
            paper_literal_lmo: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// Seeded Erdős–Rényi base graph split into `groups` topologies.
    RandomPartition,
    Complete,
    Ring,
    Path,
    /// Schedule read from `graph.file`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    pub edge_prob: f64,
    pub groups: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            kind: GraphKind::RandomPartition,
            edge_prob: 0.6,
            groups: 3,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepsConfig {
    /// `inv_k`, `inv_sqrt_k`, `inv_k_sq` or `constant(c)`.
    pub rule: String,
    pub offset: u64,
}

impl Default for StepsConfig {
    fn default() -> Self {
        Self {
            rule: "inv_k".into(),
            offset: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Zero,
    Center,
    /// Seeded uniform sample from each feasible set.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub graph: u64,
    pub init: u64,
    pub bench: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            graph: 42,
            init: 7,
            bench: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PgaConfig {
    pub alpha: f64,
    pub diminishing: bool,
    pub alpha_first_term_only: bool,
    pub slow_projection: bool,
}

impl Default for PgaConfig {
    fn default() -> Self {
        let d = PgaOptions::default();
        Self {
            alpha: d.alpha,
            diminishing: d.diminishing,
            alpha_first_term_only: d.alpha_first_term_only,
            slow_projection: d.slow_projection,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write measured round times to the trace. Off by default so that
    /// repeated runs produce byte-identical files.
    pub record_timing: bool,
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            record_timing: false,
            plot: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// Test hook: scale this row of every mixing matrix by `fault_factor`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault_row: Option<usize>,
    pub fault_factor: f64,
    /// Decay checks run only when the horizon reaches this round.
    pub decay_from_round: u64,
    /// Final `C_k` must be below this fraction of `max_i 2R_i`.
    pub consensus_factor: f64,
    /// Final tracker error must be below this fraction of its value at k = 10.
    pub tracker_factor: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            fault_row: None,
            fault_factor: 0.9,
            decay_from_round: 1000,
            consensus_factor: 1e-3,
            tracker_factor: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub rules: Vec<String>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            rules: vec!["inv_k".into(), "inv_k_sq".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub dims: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub target_rel_err: f64,
    pub bench_trials: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            dims: vec![16, 32, 64, 128, 256],
            algorithms: vec![Algorithm::Dfwagt, Algorithm::Pga],
            target_rel_err: 1e-3,
            bench_trials: 200,
        }
    }
}

/// Full experiment description. Every field has a default reproducing the
/// reference experiment, so an empty file is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub rounds: u64,
    pub record_every: u64,
    pub init: InitMode,
    pub problem: ProblemConfig,
    pub graph: GraphConfig,
    pub steps: StepsConfig,
    pub seeds: Seeds,
    pub pga: PgaConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
    pub audit: AuditConfig,
    pub study: StudyConfig,
    pub scaling: ScalingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Dfwagt,
            rounds: 5000,
            record_every: 10,
            init: InitMode::Zero,
            problem: ProblemConfig::default(),
            graph: GraphConfig::default(),
            steps: StepsConfig::default(),
            seeds: Seeds::default(),
            pga: PgaConfig::default(),
            oracle: OracleConfig::default(),
            output: OutputConfig::default(),
            audit: AuditConfig::default(),
            study: StudyConfig::default(),
            scaling: ScalingConfig::default(),
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl ExperimentConfig {
    /// Parses and validates a TOML document. Syntax errors and unknown keys
    /// report the offending line.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut config = Self::from_toml(&text)?;
        // Relative schedule files are resolved against the config's directory.
        if let (Some(file), Some(parent)) = (&config.graph.file, path.parent()) {
            if file.is_relative() {
                config.graph.file = Some(parent.join(file));
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        sha256_hex(&self.to_toml())
    }

    /// Hash of the inputs that determine the oracle's answer at dimension `n`.
    pub fn oracle_key(&self, n: usize) -> String {
        let mut problem = self.problem.clone();
        problem.n = n;
        let text = format!(
            "{}\n[oracle]\n{}",
            toml::to_string(&problem).expect("problem serializes"),
            toml::to_string(&self.oracle).expect("oracle serializes"),
        );
        sha256_hex(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(config_err("rounds", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(config_err("record_every", "must be at least 1"));
        }
        self.step_schedule()?;
        let p = &self.problem;
        if p.agents == 0 {
            return Err(config_err("problem.agents", "must be at least 1"));
        }
        if p.n == 0 {
            return Err(config_err("problem.n", "must be at least 1"));
        }
        for (key, len) in [
            ("problem.chi", p.chi.len()),
            ("problem.k", p.k.len()),
            ("problem.radii", p.radii.len()),
        ] {
            if len != p.agents {
                return Err(config_err(key, format!("expected {} entries, got {len}", p.agents)));
            }
        }
        if p.set == SetKind::L1 && p.paper_literal_lmo {
            // Allowed: the flag wins. Logged so the override is visible.
            log::info!("problem.paper_literal_lmo overrides problem.set = \"l1\"");
        }
        let g = &self.graph;
        match g.kind {
            GraphKind::RandomPartition => {
                if !(g.edge_prob > 0.0 && g.edge_prob <= 1.0) {
                    return Err(config_err("graph.edge_prob", "must be in (0, 1]"));
                }
                if p.agents < 2 {
                    return Err(config_err("graph.kind", "random_partition needs at least 2 agents"));
                }
                if g.groups == 0 || g.groups > p.agents * (p.agents - 1) / 2 {
                    return Err(config_err("graph.groups", "must be between 1 and the number of possible edges"));
                }
            }
            GraphKind::File if g.file.is_none() => {
                return Err(config_err("graph.file", "required when graph.kind = \"file\""));
            }
            _ => {}
        }
        if !(self.pga.alpha >= 0.0 && self.pga.alpha.is_finite()) {
            return Err(config_err("pga.alpha", "must be a nonnegative number"));
        }
        if !(self.oracle.tol > 0.0) {
            return Err(config_err("oracle.tol", "must be positive"));
        }
        if let Some(row) = self.audit.fault_row {
            if row >= p.agents {
                return Err(config_err("audit.fault_row", format!("must be below {}", p.agents)));
            }
        }
        for (i, rule) in self.study.rules.iter().enumerate() {
            if StepRule::parse(rule).is_none() {
                return Err(config_err(&format!("study.rules[{i}]"), format!("unknown step rule `{rule}`")));
            }
        }
        Ok(())
    }

    pub fn step_schedule(&self) -> Result<StepSchedule> {
        let rule = StepRule::parse(&self.steps.rule).ok_or_else(|| {
            config_err(
                "steps.rule",
                format!(
                    "unknown step rule `{}` (expected inv_k, inv_sqrt_k, inv_k_sq or constant(c))",
                    self.steps.rule
                ),
            )
        })?;
        Ok(StepSchedule::with_offset(rule, self.steps.offset))
    }

    pub fn pga_options(&self) -> PgaOptions {
        PgaOptions {
            alpha: self.pga.alpha,
            diminishing: self.pga.diminishing,
            alpha_first_term_only: self.pga.alpha_first_term_only,
            slow_projection: self.pga.slow_projection,
        }
    }

    pub fn set_kind(&self) -> SetKind {
        if self.problem.paper_literal_lmo {
            SetKind::Linf
        } else {
            self.problem.set
        }
    }

    /// The configured instance at dimension `n` (the scaling study varies
    /// `n`; everything else uses `problem.n`).
    pub fn build_problem(&self, n: usize) -> Result<AggregativeProblem> {
        let p = &self.problem;
        let params = EnergyParams::broadcast(&p.k, &p.chi, p.a, p.p0, &p.radii, n);
        let problem = make_energy_problem(&params, n, p.agents)?;
        match self.set_kind() {
            SetKind::L1 => Ok(problem),
            SetKind::Linf => problem.with_sets(
                p.radii
                    .iter()
                    .map(|&radius| FeasibleSet::LinfBall { radius })
                    .collect(),
            ),
        }
    }

    pub fn build_schedule(&self) -> Result<GraphSchedule> {
        let n = self.problem.agents;
        let g = &self.graph;
        let schedule = match g.kind {
            GraphKind::RandomPartition => {
                GraphSchedule::random_partition(n, g.edge_prob, g.groups, self.seeds.graph)?
            }
            GraphKind::Complete => GraphSchedule::stationary(Topology::complete(n)?)?,
            GraphKind::Ring => GraphSchedule::stationary(Topology::ring(n)?)?,
            GraphKind::Path => GraphSchedule::stationary(Topology::path(n)?)?,
            GraphKind::File => {
                let path = g.file.as_ref().ok_or_else(|| config_err("graph.file", "missing"))?;
                let schedule = parse_schedule(&fs::read_to_string(path)?)?;
                if schedule.n_agents() != n {
                    return Err(config_err(
                        "graph.file",
                        format!("schedule has {} agents, problem has {n}", schedule.n_agents()),
                    ));
                }
                schedule
            }
        };
        Ok(match self.audit.fault_row {
            Some(row) => schedule.with_faulty_row(row, self.audit.fault_factor),
            None => schedule,
        })
    }

    pub fn initial_profile(&self, problem: &AggregativeProblem) -> Profile {
        match self.init {
            InitMode::Zero => problem.dims().iter().map(|&d| DVector::zeros(d)).collect(),
            InitMode::Center => problem.default_start(),
            InitMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seeds.init);
                problem.sample_feasible(&mut rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_reference_experiment() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.rounds, 5000);
        assert_eq!(c.problem.n, 16);
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut c = ExperimentConfig::default();
        c.audit.fault_row = Some(2);
        c.graph.kind = GraphKind::File;
        c.graph.file = Some(PathBuf::from("s.txt"));
        c.steps.rule = "constant(0.25)".into();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn zero_rounds_rejected() {
        let err = ExperimentConfig::from_toml("rounds = 0").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "rounds"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_rule_names_the_key() {
        let err = ExperimentConfig::from_toml("[steps]\nrule = \"inv_cube\"").unwrap_err();
        match err {
            Error::Config { key, message } => {
                assert_eq!(key, "steps.rule");
                assert!(message.contains("inv_cube"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = ExperimentConfig::from_toml("rounds = 10\n\n[problem]\nbogus = 1\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mismatched_lists_rejected() {
        let err = ExperimentConfig::from_toml("[problem]\nradii = [1.0]").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "problem.radii"));
    }

    #[test]
    fn hash_changes_with_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.seeds.graph += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.oracle_key(16), b.oracle_key(16));
        assert_ne!(a.oracle_key(16), a.oracle_key(32));
    }

    #[test]
    fn literal_lmo_switches_to_linf() {
        let c = ExperimentConfig::from_toml("[problem]\npaper_literal_lmo = true").unwrap();
        let p = c.build_problem(4).unwrap();
        assert_eq!(*p.set(0), FeasibleSet::LinfBall { radius: 5.0 });
    }

    #[test]
    fn random_init_is_seeded_and_feasible() {
        let c = ExperimentConfig::from_toml("init = \"random\"").unwrap();
        let p = c.build_problem(8).unwrap();
        let a = c.initial_profile(&p);
        assert_eq!(a, c.initial_profile(&p));
        assert!(p.check_feasible(&a, 1e-12).is_ok());
    }
}
