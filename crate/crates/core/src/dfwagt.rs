//! Distributed Frank-Wolfe with dynamic average tracking.
//!
//! Every agent keeps its decision `x_i`, an estimate `v_i` of the aggregate
//! `δ(x)` and an estimate `y_i` of `(1/N) Σ_j ∇₂g_j`. One synchronous round:
//!
//! 1. consensus: `v̂ = W v`, `ŷ = W y`
//! 2. direction: `s_i = LMO_i(∇₁g_i(x_i, v̂_i) + ∇φ_i(x_i) ŷ_i)`
//! 3. strategy: `x_i ← (1 - γ_k) x_i + γ_k s_i`
//! 4. tracking: `v_i ← v̂_i + φ_i(x_i⁺) - φ_i(x_i)`, then
//!    `y_i ← ŷ_i + ∇₂g_i(x_i⁺, v_i⁺) - ∇₂g_i(x_i, v_i)`
//!
//! Double stochasticity of `W` makes the network means of `v` and `y` equal
//! the true aggregate and the true mean `∇₂g` at every round; [`RunTrace`]
//! records the residuals of both identities.

use std::time::Instant;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::{GraphSchedule, MixingMatrix};
use crate::oracles::LmoResult;
use crate::problem::{AggregativeProblem, Profile};

/// Slack allowed when checking that a starting point is feasible.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `1 / (k + offset)`
    InvK,
    /// `1 / sqrt(k + offset)`
    InvSqrtK,
    /// `1 / (k + offset)²`
    InvKSq,
    Constant(f64),
}

impl StepRule {
    pub fn name(&self) -> String {
        match self {
            StepRule::InvK => "inv_k".into(),
            StepRule::InvSqrtK => "inv_sqrt_k".into(),
            StepRule::InvKSq => "inv_k_sq".into(),
            StepRule::Constant(c) => format!("constant({c})"),
        }
    }

    /// Parses `inv_k`, `inv_sqrt_k`, `inv_k_sq` or `constant(<c>)`.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "inv_k" => Some(StepRule::InvK),
            "inv_sqrt_k" => Some(StepRule::InvSqrtK),
            "inv_k_sq" => Some(StepRule::InvKSq),
            other => other
                .strip_prefix("constant(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|c| c.trim().parse().ok())
                .map(StepRule::Constant),
        }
    }
}

/// Which step-size conditions of the convergence theory a rule satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepCompliance {
    pub nonincreasing: bool,
    pub nonsummable: bool,
    pub square_summable: bool,
}

impl StepCompliance {
    pub fn all(&self) -> bool {
        self.nonincreasing && self.nonsummable && self.square_summable
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub rule: StepRule,
    pub offset: u64,
}

impl StepSchedule {
    pub fn new(rule: StepRule) -> Self {
        Self { rule, offset: 1 }
    }

    pub fn with_offset(rule: StepRule, offset: u64) -> Self {
        Self { rule, offset }
    }

    /// `γ_k`, clamped to `[0, 1]`.
    pub fn gamma(&self, k: u64) -> f64 {
        let t = (k + self.offset) as f64;
        let raw = match self.rule {
            StepRule::InvK => 1.0 / t,
            StepRule::InvSqrtK => 1.0 / t.sqrt(),
            StepRule::InvKSq => 1.0 / (t * t),
            StepRule::Constant(c) => c,
        };
        if raw.is_nan() {
            0.0
        } else {
            raw.clamp(0.0, 1.0)
        }
    }

    pub fn compliance(&self) -> StepCompliance {
        match self.rule {
            StepRule::InvK => StepCompliance {
                nonincreasing: true,
                nonsummable: true,
                square_summable: true,
            },
            StepRule::InvSqrtK => StepCompliance {
                nonincreasing: true,
                nonsummable: true,
                square_summable: false,
            },
            StepRule::InvKSq => StepCompliance {
                nonincreasing: true,
                nonsummable: false,
                square_summable: true,
            },
            StepRule::Constant(c) => {
                let zero = self.gamma(0) == 0.0 || c <= 0.0;
                StepCompliance {
                    nonincreasing: true,
                    nonsummable: !zero,
                    square_summable: zero,
                }
            }
        }
    }
}

/// Decisions and trackers of all agents at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub round: u64,
    pub x: Profile,
    /// Aggregate trackers.
    pub v: Profile,
    /// Gradient trackers.
    pub y: Profile,
}

/// `v_i = φ_i(x_i)`, `y_i = ∇₂g_i(x_i, v_i)`.
pub fn init_state(problem: &AggregativeProblem, x0: &[DVector<f64>]) -> Result<SwarmState> {
    problem.check_feasible(x0, FEASIBILITY_SLACK)?;
    let v: Profile = x0
        .iter()
        .enumerate()
        .map(|(i, xi)| problem.agent(i).phi(xi))
        .collect();
    let y = x0
        .iter()
        .zip(&v)
        .enumerate()
        .map(|(i, (xi, vi))| problem.agent(i).grad_z(xi, vi))
        .collect();
    Ok(SwarmState {
        round: 0,
        x: x0.to_vec(),
        v,
        y,
    })
}

fn mix(w: &MixingMatrix, z: &[DVector<f64>]) -> Profile {
    let w = w.weights();
    (0..z.len())
        .map(|i| {
            let mut acc = DVector::zeros(z[i].len());
            for (j, zj) in z.iter().enumerate() {
                let wij = w[(i, j)];
                if wij != 0.0 {
                    acc.axpy(wij, zj, 1.0);
                }
            }
            acc
        })
        .collect()
}

/// `(v̂, ŷ) = (W v, W y)`.
pub fn consensus_step(state: &SwarmState, w: &MixingMatrix) -> Result<(Profile, Profile)> {
    if w.size() != state.v.len() {
        return Err(Error::DimensionMismatch {
            context: "mixing matrix size",
            expected: state.v.len(),
            got: w.size(),
        });
    }
    Ok((mix(w, &state.v), mix(w, &state.y)))
}

/// Locally tracked gradient `d_i = ∇₁g_i(x_i, v̂_i) + ∇φ_i(x_i) ŷ_i`.
pub fn tracked_gradient(
    problem: &AggregativeProblem,
    x: &[DVector<f64>],
    v_hat: &[DVector<f64>],
    y_hat: &[DVector<f64>],
) -> Profile {
    x.iter()
        .zip(v_hat.iter().zip(y_hat))
        .enumerate()
        .map(|(i, (xi, (vi, yi)))| {
            let agent = problem.agent(i);
            agent.grad_x(xi, vi) + agent.phi_jacobian_apply(xi, yi)
        })
        .collect()
}

/// Frank-Wolfe vertices `s_i` for the tracked gradients.
pub fn fw_direction(
    problem: &AggregativeProblem,
    state: &SwarmState,
    v_hat: &[DVector<f64>],
    y_hat: &[DVector<f64>],
) -> Result<Vec<LmoResult>> {
    let n = problem.n_agents();
    for (context, len) in [("v_hat", v_hat.len()), ("y_hat", y_hat.len()), ("x", state.x.len())] {
        if len != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                got: len,
            });
        }
    }
    tracked_gradient(problem, &state.x, v_hat, y_hat)
        .iter()
        .enumerate()
        .map(|(i, d)| problem.set(i).lmo(d))
        .collect()
}

/// `x_i ← (1 - γ) x_i + γ s_i`.
pub fn strategy_update(state: &SwarmState, s: &[DVector<f64>], gamma: f64) -> Result<Profile> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidStep(gamma));
    }
    if s.len() != state.x.len() {
        return Err(Error::DimensionMismatch {
            context: "vertices",
            expected: state.x.len(),
            got: s.len(),
        });
    }
    Ok(state
        .x
        .iter()
        .zip(s)
        .map(|(xi, si)| xi * (1.0 - gamma) + si * gamma)
        .collect())
}

/// Dynamic average tracking. `v` is updated first; the `y` update uses both
/// the old `(x, v)` and the new `(x⁺, v⁺)`.
pub fn tracking_update(
    problem: &AggregativeProblem,
    state: &SwarmState,
    v_hat: &[DVector<f64>],
    y_hat: &[DVector<f64>],
    new_x: &[DVector<f64>],
) -> Result<(Profile, Profile)> {
    problem.check_profile(new_x)?;
    let mut new_v = Vec::with_capacity(new_x.len());
    let mut new_y = Vec::with_capacity(new_x.len());
    for i in 0..new_x.len() {
        let agent = problem.agent(i);
        // Old term first, so that v̂ = φ(x) (one agent, W = 1) gives v = φ(x⁺)
        // without rounding.
        let vi = (&v_hat[i] - agent.phi(&state.x[i])) + agent.phi(&new_x[i]);
        let yi = (&y_hat[i] - agent.grad_z(&state.x[i], &state.v[i])) + agent.grad_z(&new_x[i], &vi);
        new_v.push(vi);
        new_y.push(yi);
    }
    Ok((new_v, new_y))
}

/// Frank-Wolfe gap `max_{s ∈ X} ⟨∇f(x), x - s⟩`, clamped at zero.
pub fn fw_gap(problem: &AggregativeProblem, x: &[DVector<f64>]) -> Result<f64> {
    let grad = problem.full_gradient(x)?;
    let mut gap = 0.0;
    for (i, (gi, xi)) in grad.iter().zip(x).enumerate() {
        let s = problem.set(i).lmo(gi)?;
        gap += gi.dot(xi) - s.inner_product;
    }
    Ok(gap.max(0.0))
}

/// Metrics of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub k: u64,
    /// `f(x_k)`
    pub objective: f64,
    pub fw_gap: f64,
    /// `C_k = max_i ‖δ(x_k) - v̂_{i,k+1}‖`
    pub consensus_err: f64,
    /// `‖ŷ_{k+1} - 1 ⊗ ȳ_k‖`
    pub tracker_err: f64,
    /// `‖v̄_k - δ(x_k)‖ / (1 + ‖δ(x_k)‖)`
    pub v_mean_residual: f64,
    /// `‖ȳ_k - (1/N) Σ ∇₂g_i(x_i, v_i)‖ / (1 + ‖ȳ_k‖)`
    pub y_mean_residual: f64,
    pub feasibility_violation: f64,
    /// Wall time of round `k` (zero for the terminal record).
    pub round_time_ns: u64,
    /// Cumulative wall time of rounds `0..k`.
    pub elapsed_ns: u64,
    /// Time spent in the per-agent subproblem (LMO or projection) in round `k`.
    pub subproblem_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<RoundRecord>,
    pub final_state: SwarmState,
}

impl RunTrace {
    pub fn last(&self) -> &RoundRecord {
        self.records.last().expect("trace always holds the initial record")
    }

    pub fn at(&self, k: u64) -> Option<&RoundRecord> {
        self.records.iter().find(|r| r.k == k)
    }

    /// Records with timing fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Vec<RoundRecord> {
        self.records
            .iter()
            .map(|r| RoundRecord {
                round_time_ns: 0,
                elapsed_ns: 0,
                subproblem_ns: 0,
                ..*r
            })
            .collect()
    }
}

fn mean(z: &[DVector<f64>]) -> DVector<f64> {
    let mut acc = DVector::zeros(z[0].len());
    for zi in z {
        acc += zi;
    }
    acc / z.len() as f64
}

fn measure(
    problem: &AggregativeProblem,
    state: &SwarmState,
    v_hat: &[DVector<f64>],
    y_hat: &[DVector<f64>],
) -> Result<RoundRecord> {
    let delta = problem.aggregate(&state.x)?;
    let objective = problem.global_objective(&state.x)?;
    let gap = fw_gap(problem, &state.x)?;
    let consensus_err = v_hat
        .iter()
        .map(|v| (&delta - v).norm())
        .fold(0.0, f64::max);
    let y_bar = mean(&state.y);
    let tracker_err = y_hat
        .iter()
        .map(|y| (y - &y_bar).norm_squared())
        .sum::<f64>()
        .sqrt();
    let v_bar = mean(&state.v);
    let v_mean_residual = (&v_bar - &delta).norm() / (1.0 + delta.norm());
    let true_y: Profile = state
        .x
        .iter()
        .zip(&state.v)
        .enumerate()
        .map(|(i, (xi, vi))| problem.agent(i).grad_z(xi, vi))
        .collect();
    let y_mean_residual = (&y_bar - mean(&true_y)).norm() / (1.0 + y_bar.norm());
    Ok(RoundRecord {
        k: state.round,
        objective,
        fw_gap: gap,
        consensus_err,
        tracker_err,
        v_mean_residual,
        y_mean_residual,
        feasibility_violation: problem.feasibility_violation(&state.x),
        round_time_ns: 0,
        elapsed_ns: 0,
        subproblem_ns: 0,
    })
}

/// Strategy step of a tracking method: given the state and the consensus
/// estimates for round `k`, produce the next decisions and the time spent in
/// subproblems.
pub(crate) trait StrategyStep {
    fn step(
        &mut self,
        problem: &AggregativeProblem,
        state: &SwarmState,
        v_hat: &[DVector<f64>],
        y_hat: &[DVector<f64>],
    ) -> Result<(Profile, u64)>;
}

/// Shared synchronous loop: consensus, strategy, tracking.
pub(crate) fn run_tracking<S: StrategyStep>(
    problem: &AggregativeProblem,
    schedule: &GraphSchedule,
    x0: &[DVector<f64>],
    rounds: u64,
    record_every: u64,
    strategy: &mut S,
) -> Result<RunTrace> {
    if rounds == 0 {
        return Err(Error::param("rounds", "must be at least 1"));
    }
    if record_every == 0 {
        return Err(Error::param("record_every", "must be at least 1"));
    }
    if schedule.n_agents() != problem.n_agents() {
        return Err(Error::DimensionMismatch {
            context: "schedule agents",
            expected: problem.n_agents(),
            got: schedule.n_agents(),
        });
    }
    let mut state = init_state(problem, x0)?;
    let mut records = Vec::with_capacity((rounds / record_every + 2) as usize);
    let mut elapsed_ns = 0u64;
    for k in 0..rounds {
        let start = Instant::now();
        let (v_hat, y_hat) = consensus_step(&state, schedule.matrix_at(k))?;
        let consensus_ns = start.elapsed().as_nanos() as u64;

        let record = if k % record_every == 0 {
            Some(measure(problem, &state, &v_hat, &y_hat)?)
        } else {
            None
        };

        let start = Instant::now();
        let (new_x, subproblem_ns) = strategy.step(problem, &state, &v_hat, &y_hat)?;
        let (new_v, new_y) = tracking_update(problem, &state, &v_hat, &y_hat, &new_x)?;
        let round_time_ns = consensus_ns + start.elapsed().as_nanos() as u64;

        if let Some(mut r) = record {
            r.round_time_ns = round_time_ns;
            r.elapsed_ns = elapsed_ns;
            r.subproblem_ns = subproblem_ns;
            records.push(r);
        }
        elapsed_ns += round_time_ns;
        state = SwarmState {
            round: k + 1,
            x: new_x,
            v: new_v,
            y: new_y,
        };
    }
    // Terminal record: peek at the consensus of round K without updating.
    let (v_hat, y_hat) = consensus_step(&state, schedule.matrix_at(rounds))?;
    let mut r = measure(problem, &state, &v_hat, &y_hat)?;
    r.elapsed_ns = elapsed_ns;
    records.push(r);
    Ok(RunTrace {
        records,
        final_state: state,
    })
}

struct FrankWolfeStep {
    steps: StepSchedule,
}

impl StrategyStep for FrankWolfeStep {
    fn step(
        &mut self,
        problem: &AggregativeProblem,
        state: &SwarmState,
        v_hat: &[DVector<f64>],
        y_hat: &[DVector<f64>],
    ) -> Result<(Profile, u64)> {
        let lmo = fw_direction(problem, state, v_hat, y_hat)?;
        let sub_ns = lmo.iter().map(|r| r.elapsed.as_nanos() as u64).sum();
        let s: Profile = lmo.into_iter().map(|r| r.vertex).collect();
        let x = strategy_update(state, &s, self.steps.gamma(state.round))?;
        Ok((x, sub_ns))
    }
}

/// Runs `rounds` synchronous rounds from `x0`, recording metrics every
/// `record_every` rounds and at the final state.
pub fn run(
    problem: &AggregativeProblem,
    schedule: &GraphSchedule,
    steps: StepSchedule,
    x0: &[DVector<f64>],
    rounds: u64,
    record_every: u64,
) -> Result<RunTrace> {
    run_tracking(
        problem,
        schedule,
        x0,
        rounds,
        record_every,
        &mut FrankWolfeStep { steps },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Topology;
    use crate::problem::{make_energy_problem, EnergyParams};
    use nalgebra::DMatrix;

    fn reference(n: usize) -> AggregativeProblem {
        make_energy_problem(&EnergyParams::reference(n), n, 5).unwrap()
    }

    #[test]
    fn gamma_values() {
        let s = StepSchedule::new(StepRule::InvK);
        assert_eq!(s.gamma(0), 1.0);
        assert_eq!(s.gamma(3), 0.25);
        assert_eq!(StepSchedule::new(StepRule::InvKSq).gamma(9), 0.01);
        assert_eq!(StepSchedule::new(StepRule::InvSqrtK).gamma(3), 0.5);
        assert_eq!(StepSchedule::new(StepRule::Constant(3.0)).gamma(5), 1.0);
        assert_eq!(StepSchedule::new(StepRule::Constant(-1.0)).gamma(5), 0.0);
    }

    #[test]
    fn compliance_flags() {
        assert!(StepSchedule::new(StepRule::InvK).compliance().all());
        let c = StepSchedule::new(StepRule::InvSqrtK).compliance();
        assert!(!c.square_summable && c.nonsummable);
        let c = StepSchedule::new(StepRule::InvKSq).compliance();
        assert!(!c.nonsummable && c.square_summable);
        let c = StepSchedule::new(StepRule::Constant(0.1)).compliance();
        assert!(c.nonsummable && !c.square_summable);
    }

    #[test]
    fn step_rule_parse() {
        assert_eq!(StepRule::parse("inv_k"), Some(StepRule::InvK));
        assert_eq!(StepRule::parse("constant(0.5)"), Some(StepRule::Constant(0.5)));
        assert_eq!(StepRule::parse("inv_cube"), None);
        for r in [StepRule::InvK, StepRule::InvSqrtK, StepRule::InvKSq, StepRule::Constant(0.25)] {
            assert_eq!(StepRule::parse(&r.name()), Some(r));
        }
    }

    #[test]
    fn init_state_energy_zero() {
        let p = reference(3);
        let st = init_state(&p, &p.default_start()).unwrap();
        assert!(st.v.iter().chain(&st.y).all(|z| z.amax() == 0.0));
    }

    #[test]
    fn init_state_rejects_infeasible() {
        let p = reference(2);
        let mut x0 = p.default_start();
        x0[3] = DVector::from_element(2, 2.0); // ‖·‖₁ = 4 > 3
        assert!(matches!(init_state(&p, &x0), Err(Error::Infeasible { agent: 3, .. })));
    }

    #[test]
    fn consensus_identity_and_full_average() {
        let p = reference(2);
        let mut x0 = p.default_start();
        x0[1] = DVector::from_vec(vec![1.0, -2.0]);
        x0[4] = DVector::from_vec(vec![0.5, 0.5]);
        let st = init_state(&p, &x0).unwrap();
        let (v, y) = consensus_step(&st, &MixingMatrix::identity(5)).unwrap();
        assert_eq!(v, st.v);
        assert_eq!(y, st.y);
        let avg = MixingMatrix::from_raw(DMatrix::from_element(5, 5, 0.2)).unwrap();
        let (v, _) = consensus_step(&st, &avg).unwrap();
        let vbar = mean(&st.v);
        assert!(v.iter().all(|vi| (vi - &vbar).amax() < 1e-15));
        assert!(consensus_step(&st, &MixingMatrix::identity(4)).is_err());
    }

    #[test]
    fn strategy_update_cases() {
        let st = SwarmState {
            round: 0,
            x: vec![DVector::from_vec(vec![2.0, 0.0])],
            v: vec![],
            y: vec![],
        };
        let s = vec![DVector::from_vec(vec![-5.0, 0.0])];
        assert_eq!(strategy_update(&st, &s, 0.0).unwrap(), st.x);
        assert_eq!(strategy_update(&st, &s, 1.0).unwrap(), s);
        assert_eq!(strategy_update(&st, &s, 0.5).unwrap()[0], DVector::from_vec(vec![-1.5, 0.0]));
        assert!(matches!(strategy_update(&st, &s, 1.5), Err(Error::InvalidStep(_))));
    }

    #[test]
    fn energy_direction_assembly() {
        let p = reference(2);
        let params = EnergyParams::reference(2);
        let mut x0 = p.default_start();
        x0[0] = DVector::from_vec(vec![1.0, -1.0]);
        let st = init_state(&p, &x0).unwrap();
        let v_hat: Profile = (0..5).map(|i| DVector::from_element(2, 0.1 * i as f64)).collect();
        let y_hat: Profile = (0..5).map(|i| DVector::from_element(2, -0.3 * i as f64)).collect();
        let d = tracked_gradient(&p, &st.x, &v_hat, &y_hat);
        for i in 0..5 {
            let expected = (&st.x[i] - &params.chi[i]) * 2.0 + &v_hat[i] * 0.2 + &params.p0 + &y_hat[i];
            assert!((&d[i] - expected).amax() < 1e-14);
        }
    }

    #[test]
    fn tracking_with_no_motion() {
        let p = reference(2);
        let mut x0 = p.default_start();
        x0[2] = DVector::from_vec(vec![1.0, 3.0]);
        let st = init_state(&p, &x0).unwrap();
        let (vh, yh) = consensus_step(&st, &MixingMatrix::identity(5)).unwrap();
        let (v, y) = tracking_update(&p, &st, &vh, &yh, &st.x).unwrap();
        assert_eq!(v, st.v);
        assert_eq!(y, st.y);
    }

    #[test]
    fn single_round_with_zero_step() {
        let p = reference(2);
        let sched = GraphSchedule::random_partition(5, 0.6, 3, 1).unwrap();
        let steps = StepSchedule::new(StepRule::Constant(0.0));
        let x0 = p.default_start();
        let trace = run(&p, &sched, steps, &x0, 1, 1).unwrap();
        assert_eq!(trace.records.len(), 2);
        assert_eq!(trace.final_state.x, x0);
        assert_eq!(trace.records[0].objective, trace.records[1].objective);
        assert!(run(&p, &sched, steps, &x0, 0, 1).is_err());
    }

    #[derive(Debug)]
    struct Linear(DVector<f64>);

    impl crate::problem::AgentCost for Linear {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn agg_dim(&self) -> usize {
            1
        }
        fn cost(&self, x: &DVector<f64>, _z: &DVector<f64>) -> f64 {
            self.0.dot(x)
        }
        fn grad_x(&self, _x: &DVector<f64>, _z: &DVector<f64>) -> DVector<f64> {
            self.0.clone()
        }
        fn grad_z(&self, _x: &DVector<f64>, _z: &DVector<f64>) -> DVector<f64> {
            DVector::zeros(1)
        }
        fn phi(&self, _x: &DVector<f64>) -> DVector<f64> {
            DVector::zeros(1)
        }
        fn phi_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::zeros(x.len(), 1)
        }
    }

    fn linear_problem(c: &[f64], r: f64) -> AggregativeProblem {
        let agent: std::sync::Arc<dyn crate::problem::AgentCost> =
            std::sync::Arc::new(Linear(DVector::from_column_slice(c)));
        AggregativeProblem::new(vec![agent], vec![crate::problem::FeasibleSet::L1Ball { radius: r }])
            .unwrap()
    }

    #[test]
    fn fw_gap_linear_objective() {
        let p = linear_problem(&[1.0, -3.0, 2.0], 2.0);
        let vertex = vec![DVector::from_vec(vec![0.0, 2.0, 0.0])];
        assert_eq!(fw_gap(&p, &vertex).unwrap(), 0.0);
        let x = vec![DVector::from_vec(vec![0.5, 0.2, -0.4])];
        let g1 = fw_gap(&p, &x).unwrap();
        let p2 = linear_problem(&[2.0, -6.0, 4.0], 2.0);
        let g2 = fw_gap(&p2, &x).unwrap();
        assert!((g2 - 2.0 * g1).abs() < 1e-12);
    }

    #[test]
    fn single_agent_direction_matches_full_gradient() {
        let params = EnergyParams::broadcast(&[1.5], &[0.7], 0.1, 1.0, &[2.0], 3);
        let p = make_energy_problem(&params, 3, 1).unwrap();
        let sched = GraphSchedule::stationary(Topology::empty(1).unwrap()).unwrap();
        let x0 = vec![DVector::from_vec(vec![0.3, -0.2, 0.5])];
        let st = init_state(&p, &x0).unwrap();
        let (vh, yh) = consensus_step(&st, sched.matrix_at(0)).unwrap();
        let d = tracked_gradient(&p, &st.x, &vh, &yh);
        let g = p.full_gradient(&x0).unwrap();
        assert!((&d[0] - &g[0]).amax() < 1e-15);
    }
}
