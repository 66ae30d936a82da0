//! Aggregative optimization problems.
//!
//! Each agent `i` owns a decision `x_i ∈ X_i`, a cost `g_i(x_i, z)` and an
//! aggregation map `φ_i`. The global objective is
//! `f(x) = Σ_i g_i(x_i, δ(x))` with `δ(x) = (1/N) Σ_i φ_i(x_i)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::oracles::{self, LmoResult};

/// Stacked decision: one vector per agent.
pub type Profile = Vec<DVector<f64>>;

/// Per-agent cost `g_i(x_i, z)` and aggregation map `φ_i(x_i)`.
pub trait AgentCost: Send + Sync + fmt::Debug {
    /// Decision dimension `n_i`.
    fn dim(&self) -> usize;
    /// Aggregate dimension `d`.
    fn agg_dim(&self) -> usize;
    fn cost(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64;
    /// `∇₁g_i(x, z)`, length `n_i`.
    fn grad_x(&self, x: &DVector<f64>, z: &DVector<f64>) -> DVector<f64>;
    /// `∇₂g_i(x, z)`, length `d`.
    fn grad_z(&self, x: &DVector<f64>, z: &DVector<f64>) -> DVector<f64>;
    fn phi(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `∇φ_i(x)`, an `n_i × d` matrix.
    fn phi_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    /// `∇φ_i(x) · y`.
    fn phi_jacobian_apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.phi_jacobian(x) * y
    }
}

/// Compact convex feasible set of one agent.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    L1Ball { radius: f64 },
    LinfBall { radius: f64 },
    Box { lo: DVector<f64>, hi: DVector<f64> },
}

impl FeasibleSet {
    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleSet::L1Ball { radius } | FeasibleSet::LinfBall { radius } => {
                if *radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidRadius(*radius))
                }
            }
            FeasibleSet::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::DimensionMismatch {
                        context: "box bounds",
                        expected: lo.len(),
                        got: hi.len(),
                    });
                }
                match lo.iter().zip(hi.iter()).position(|(l, h)| !(l <= h)) {
                    Some(index) => Err(Error::InvalidBox {
                        index,
                        lo: lo[index],
                        hi: hi[index],
                    }),
                    None => Ok(()),
                }
            }
        }
    }

    /// Amount by which `x` lies outside the set, in the set's own norm.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        match self {
            FeasibleSet::L1Ball { radius } => (x.lp_norm(1) - radius).max(0.0),
            FeasibleSet::LinfBall { radius } => (x.amax() - radius).max(0.0),
            FeasibleSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .map(|(v, (l, h))| (l - v).max(v - h).max(0.0))
                .fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, slack: f64) -> bool {
        self.violation(x) <= slack
    }

    /// Timed linear minimization oracle.
    pub fn lmo(&self, d: &DVector<f64>) -> Result<LmoResult> {
        match self {
            FeasibleSet::L1Ball { radius } => oracles::lmo_l1(d, *radius),
            FeasibleSet::LinfBall { radius } => oracles::lmo_linf(d, *radius),
            FeasibleSet::Box { lo, hi } => oracles::lmo_box(d, lo, hi),
        }
    }

    /// Euclidean projection. `slow` selects the active-set path for ℓ1 balls.
    pub fn project(&self, x: &DVector<f64>, slow: bool) -> Result<DVector<f64>> {
        match self {
            FeasibleSet::L1Ball { radius } if slow => oracles::project_l1_active_set(x, *radius),
            FeasibleSet::L1Ball { radius } => oracles::project_l1(x, *radius),
            FeasibleSet::LinfBall { radius } => Ok(x.map(|v| v.clamp(-radius, *radius))),
            FeasibleSet::Box { lo, hi } => Ok(DVector::from_fn(x.len(), |j, _| {
                x[j].clamp(lo[j], hi[j])
            })),
        }
    }

    /// Euclidean diameter for decisions of dimension `dim`.
    pub fn diameter(&self, dim: usize) -> f64 {
        match self {
            FeasibleSet::L1Ball { radius } => 2.0 * radius,
            FeasibleSet::LinfBall { radius } => 2.0 * radius * (dim as f64).sqrt(),
            FeasibleSet::Box { lo, hi } => (hi - lo).norm(),
        }
    }

    /// A point of the set used as a default start and for dimension probes.
    pub fn center(&self, dim: usize) -> DVector<f64> {
        match self {
            FeasibleSet::Box { lo, hi } => (lo + hi) * 0.5,
            _ => DVector::zeros(dim),
        }
    }

    /// Random point of the set.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> DVector<f64> {
        match self {
            FeasibleSet::L1Ball { radius } => {
                let raw = DVector::from_fn(dim, |_, _| {
                    let e: f64 = Exp1.sample(rng);
                    if rng.random::<bool>() {
                        e
                    } else {
                        -e
                    }
                });
                let norm = raw.lp_norm(1);
                if norm == 0.0 {
                    return DVector::zeros(dim);
                }
                let scale = radius * rng.random::<f64>().powf(1.0 / dim as f64) / norm;
                raw * scale
            }
            FeasibleSet::LinfBall { radius } => {
                DVector::from_fn(dim, |_, _| radius * (2.0 * rng.random::<f64>() - 1.0))
            }
            FeasibleSet::Box { lo, hi } => {
                DVector::from_fn(dim, |j, _| lo[j] + (hi[j] - lo[j]) * rng.random::<f64>())
            }
        }
    }
}

/// Empirical smoothness constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessReport {
    /// Lipschitz constant of `∇₁g` in `z`.
    pub l1_hat: f64,
    /// Lipschitz constant of `∇₂g` in `(x, z)`.
    pub l2_hat: f64,
    /// Lipschitz constant of `φ_i` on `X_i`.
    pub l3_hat: f64,
    /// Bound on `‖∇φ_i‖`.
    pub c_hat: f64,
}

#[derive(Debug, Clone)]
pub struct AggregativeProblem {
    agents: Vec<Arc<dyn AgentCost>>,
    sets: Vec<FeasibleSet>,
    agg_dim: usize,
    constants: Option<SmoothnessReport>,
}

impl AggregativeProblem {
    pub fn new(agents: Vec<Arc<dyn AgentCost>>, sets: Vec<FeasibleSet>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::param("agents", "need at least one agent"));
        }
        if agents.len() != sets.len() {
            return Err(Error::DimensionMismatch {
                context: "feasible sets",
                expected: agents.len(),
                got: sets.len(),
            });
        }
        let agg_dim = agents[0].agg_dim();
        for (agent, set) in agents.iter().zip(&sets) {
            set.validate()?;
            if let FeasibleSet::Box { lo, .. } = set {
                if lo.len() != agent.dim() {
                    return Err(Error::DimensionMismatch {
                        context: "box dimension",
                        expected: agent.dim(),
                        got: lo.len(),
                    });
                }
            }
            if agent.agg_dim() != agg_dim {
                return Err(Error::DimensionMismatch {
                    context: "aggregate dimension",
                    expected: agg_dim,
                    got: agent.agg_dim(),
                });
            }
            // Probe the evaluators at a feasible point.
            let x = set.center(agent.dim());
            let z = DVector::zeros(agg_dim);
            let checks = [
                ("phi", agent.phi(&x).len(), agg_dim),
                ("grad_x", agent.grad_x(&x, &z).len(), agent.dim()),
                ("grad_z", agent.grad_z(&x, &z).len(), agg_dim),
            ];
            for (context, got, expected) in checks {
                if got != expected {
                    return Err(Error::DimensionMismatch {
                        context,
                        expected,
                        got,
                    });
                }
            }
            let jac = agent.phi_jacobian(&x);
            if jac.shape() != (agent.dim(), agg_dim) {
                return Err(Error::DimensionMismatch {
                    context: "phi jacobian",
                    expected: agent.dim() * agg_dim,
                    got: jac.len(),
                });
            }
        }
        Ok(Self {
            agents,
            sets,
            agg_dim,
            constants: None,
        })
    }

    /// Same costs, different feasible sets.
    pub fn with_sets(&self, sets: Vec<FeasibleSet>) -> Result<Self> {
        Self::new(self.agents.clone(), sets)
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agg_dim(&self) -> usize {
        self.agg_dim
    }

    pub fn dims(&self) -> Vec<usize> {
        self.agents.iter().map(|a| a.dim()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.agents.iter().map(|a| a.dim()).sum()
    }

    pub fn agent(&self, i: usize) -> &dyn AgentCost {
        self.agents[i].as_ref()
    }

    pub fn agents(&self) -> &[Arc<dyn AgentCost>] {
        &self.agents
    }

    pub fn set(&self, i: usize) -> &FeasibleSet {
        &self.sets[i]
    }

    pub fn sets(&self) -> &[FeasibleSet] {
        &self.sets
    }

    pub fn constants(&self) -> Option<SmoothnessReport> {
        self.constants
    }

    /// Largest per-agent diameter.
    pub fn max_diameter(&self) -> f64 {
        self.sets
            .iter()
            .zip(&self.agents)
            .map(|(s, a)| s.diameter(a.dim()))
            .fold(0.0, f64::max)
    }

    pub fn check_profile(&self, x: &[DVector<f64>]) -> Result<()> {
        if x.len() != self.n_agents() {
            return Err(Error::DimensionMismatch {
                context: "number of agents",
                expected: self.n_agents(),
                got: x.len(),
            });
        }
        for (xi, agent) in x.iter().zip(&self.agents) {
            if xi.len() != agent.dim() {
                return Err(Error::DimensionMismatch {
                    context: "agent decision",
                    expected: agent.dim(),
                    got: xi.len(),
                });
            }
        }
        Ok(())
    }

    /// Largest per-agent set violation.
    pub fn feasibility_violation(&self, x: &[DVector<f64>]) -> f64 {
        x.iter()
            .zip(&self.sets)
            .map(|(xi, s)| s.violation(xi))
            .fold(0.0, f64::max)
    }

    /// Errors with the first agent whose decision violates its set by more
    /// than `slack`.
    pub fn check_feasible(&self, x: &[DVector<f64>], slack: f64) -> Result<()> {
        self.check_profile(x)?;
        for (agent, (xi, s)) in x.iter().zip(&self.sets).enumerate() {
            let violation = s.violation(xi);
            if violation > slack {
                return Err(Error::Infeasible { agent, violation });
            }
        }
        Ok(())
    }

    /// Default starting point: each set's center (zero for balls).
    pub fn default_start(&self) -> Profile {
        self.sets
            .iter()
            .zip(&self.agents)
            .map(|(s, a)| s.center(a.dim()))
            .collect()
    }

    /// `δ(x) = (1/N) Σ φ_i(x_i)`.
    pub fn aggregate(&self, x: &[DVector<f64>]) -> Result<DVector<f64>> {
        self.check_profile(x)?;
        Ok(self.aggregate_unchecked(x))
    }

    pub(crate) fn aggregate_unchecked(&self, x: &[DVector<f64>]) -> DVector<f64> {
        let mut sum = DVector::zeros(self.agg_dim);
        for (agent, xi) in self.agents.iter().zip(x) {
            sum += agent.phi(xi);
        }
        sum / self.n_agents() as f64
    }

    /// `f(x) = Σ_i g_i(x_i, δ(x))`.
    pub fn global_objective(&self, x: &[DVector<f64>]) -> Result<f64> {
        let delta = self.aggregate(x)?;
        Ok(self
            .agents
            .iter()
            .zip(x)
            .map(|(agent, xi)| agent.cost(xi, &delta))
            .sum())
    }

    /// Block `i` is `∇₁g_i(x_i, δ) + ∇φ_i(x_i) · (1/N) Σ_j ∇₂g_j(x_j, δ)`.
    pub fn full_gradient(&self, x: &[DVector<f64>]) -> Result<Profile> {
        let delta = self.aggregate(x)?;
        let mut mean_dz = DVector::zeros(self.agg_dim);
        for (agent, xi) in self.agents.iter().zip(x) {
            mean_dz += agent.grad_z(xi, &delta);
        }
        mean_dz /= self.n_agents() as f64;
        Ok(self
            .agents
            .iter()
            .zip(x)
            .map(|(agent, xi)| agent.grad_x(xi, &delta) + agent.phi_jacobian_apply(xi, &mean_dz))
            .collect())
    }

    /// Random feasible profile.
    pub fn sample_feasible<R: Rng + ?Sized>(&self, rng: &mut R) -> Profile {
        self.sets
            .iter()
            .zip(&self.agents)
            .map(|(s, a)| s.sample(a.dim(), rng))
            .collect()
    }

    /// Estimates Lipschitz constants from sampled difference quotients over
    /// feasible points and records them on the problem.
    pub fn validate_smoothness(&mut self, samples: usize, seed: u64) -> Result<SmoothnessReport> {
        if samples < 2 {
            return Err(Error::param("samples", "need at least 2"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.agg_dim;
        let mut report = SmoothnessReport {
            l1_hat: 0.0,
            l2_hat: 0.0,
            l3_hat: 0.0,
            c_hat: 0.0,
        };
        let random_z = |rng: &mut ChaCha8Rng, around: &DVector<f64>| -> DVector<f64> {
            around + DVector::from_fn(d, |_, _| StandardNormal.sample(rng))
        };
        for _ in 0..samples {
            let x1 = self.sample_feasible(&mut rng);
            let x2 = self.sample_feasible(&mut rng);
            let delta = self.aggregate_unchecked(&x1);
            let z1: Vec<_> = (0..self.n_agents()).map(|_| random_z(&mut rng, &delta)).collect();
            let z2: Vec<_> = (0..self.n_agents()).map(|_| random_z(&mut rng, &delta)).collect();

            let mut dg1_z = 0.0;
            let mut dg2_x = 0.0;
            let mut dg2_z = 0.0;
            let mut dz = 0.0;
            let mut dx = 0.0;
            for (i, agent) in self.agents.iter().enumerate() {
                dg1_z += (agent.grad_x(&x1[i], &z1[i]) - agent.grad_x(&x1[i], &z2[i])).norm_squared();
                dg2_z += (agent.grad_z(&x1[i], &z1[i]) - agent.grad_z(&x1[i], &z2[i])).norm_squared();
                dg2_x += (agent.grad_z(&x1[i], &z1[i]) - agent.grad_z(&x2[i], &z1[i])).norm_squared();
                dz += (&z1[i] - &z2[i]).norm_squared();
                dx += (&x1[i] - &x2[i]).norm_squared();

                let step = (&x1[i] - &x2[i]).norm();
                if step > 0.0 {
                    let q = (agent.phi(&x1[i]) - agent.phi(&x2[i])).norm() / step;
                    report.l3_hat = report.l3_hat.max(q);
                }
                let jac = agent.phi_jacobian(&x1[i]);
                report.c_hat = report.c_hat.max(spectral_norm(&jac));
            }
            if dz > 0.0 {
                report.l1_hat = report.l1_hat.max((dg1_z / dz).sqrt());
                report.l2_hat = report.l2_hat.max((dg2_z / dz).sqrt());
            }
            if dx > 0.0 {
                report.l2_hat = report.l2_hat.max((dg2_x / dx).sqrt());
            }
        }
        self.constants = Some(report);
        Ok(report)
    }

    /// Central-difference Hessian of `f` at `x` built from [`Self::full_gradient`],
    /// flattened in agent order and symmetrized.
    pub fn numerical_hessian(&self, x: &[DVector<f64>], h: f64) -> Result<DMatrix<f64>> {
        self.check_profile(x)?;
        let dims = self.dims();
        let n: usize = dims.iter().sum();
        let mut hess = DMatrix::zeros(n, n);
        let mut col = 0;
        for i in 0..x.len() {
            for j in 0..dims[i] {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i][j] += h;
                xm[i][j] -= h;
                let gp = flatten(&self.full_gradient(&xp)?);
                let gm = flatten(&self.full_gradient(&xm)?);
                hess.set_column(col, &((gp - gm) / (2.0 * h)));
                col += 1;
            }
        }
        Ok((&hess + hess.transpose()) * 0.5)
    }

    /// Empirical convexity check: the smallest Hessian eigenvalue at a random
    /// feasible point when `total_dim <= 64`, and the worst violation of the
    /// chord inequality along random feasible segments.
    pub fn convexity_check(&self, segments: usize, seed: u64) -> Result<ConvexityReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let min_hessian_eigenvalue = if self.total_dim() <= 64 {
            let x = self.sample_feasible(&mut rng);
            let hess = self.numerical_hessian(&x, 1e-4)?;
            Some(SymmetricEigen::new(hess).eigenvalues.min())
        } else {
            None
        };
        let mut worst: f64 = f64::NEG_INFINITY;
        for _ in 0..segments {
            let x = self.sample_feasible(&mut rng);
            let y = self.sample_feasible(&mut rng);
            let fx = self.global_objective(&x)?;
            let fy = self.global_objective(&y)?;
            for t in [0.25, 0.5, 0.75] {
                let mid: Profile = x.iter().zip(&y).map(|(a, b)| a * t + b * (1.0 - t)).collect();
                let excess = self.global_objective(&mid)? - (t * fx + (1.0 - t) * fy);
                worst = worst.max(excess);
            }
        }
        Ok(ConvexityReport {
            min_hessian_eigenvalue,
            max_chord_excess: worst,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub min_hessian_eigenvalue: Option<f64>,
    /// `max f(tx + (1-t)y) - (t f(x) + (1-t) f(y))`; nonpositive for convex `f`.
    pub max_chord_excess: f64,
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Concatenates a profile into one vector.
pub fn flatten(x: &[DVector<f64>]) -> DVector<f64> {
    let n = x.iter().map(|v| v.len()).sum();
    let mut out = DVector::zeros(n);
    let mut at = 0;
    for v in x {
        out.rows_mut(at, v.len()).copy_from(v);
        at += v.len();
    }
    out
}

/// Splits a flat vector back into blocks of the given sizes.
pub fn unflatten(flat: &DVector<f64>, dims: &[usize]) -> Profile {
    let mut at = 0;
    dims.iter()
        .map(|&d| {
            let v = flat.rows(at, d).into_owned();
            at += d;
            v
        })
        .collect()
}

/// Parameters of the energy-pricing instance
/// `g_i(x_i, z) = k_i ‖x_i - χ_i‖² + ⟨a N z + p₀, x_i⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyParams {
    pub k: Vec<f64>,
    pub chi: Vec<DVector<f64>>,
    pub a: f64,
    pub p0: DVector<f64>,
    pub radii: Vec<f64>,
}

impl EnergyParams {
    /// Five agents with targets `[3, 5, 6, 1, 2] ⊗ 1_n`, radii `[5, 7, 9, 3, 6]`,
    /// `a = 0.04`, `p₀ = 5·1_n`, and unit `k_i`.
    pub fn reference(n: usize) -> Self {
        Self::broadcast(
            &[1.0; 5],
            &[3.0, 5.0, 6.0, 1.0, 2.0],
            0.04,
            5.0,
            &[5.0, 7.0, 9.0, 3.0, 6.0],
            n,
        )
    }

    /// Builds per-agent vectors from scalar targets and a scalar base price.
    pub fn broadcast(k: &[f64], chi: &[f64], a: f64, p0: f64, radii: &[f64], n: usize) -> Self {
        Self {
            k: k.to_vec(),
            chi: chi.iter().map(|&c| DVector::from_element(n, c)).collect(),
            a,
            p0: DVector::from_element(n, p0),
            radii: radii.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnergyAgent {
    k: f64,
    chi: DVector<f64>,
    a_n: f64,
    p0: DVector<f64>,
}

impl AgentCost for EnergyAgent {
    fn dim(&self) -> usize {
        self.chi.len()
    }

    fn agg_dim(&self) -> usize {
        self.chi.len()
    }

    fn cost(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        self.k * (x - &self.chi).norm_squared() + (z * self.a_n + &self.p0).dot(x)
    }

    fn grad_x(&self, x: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        (x - &self.chi) * (2.0 * self.k) + z * self.a_n + &self.p0
    }

    fn grad_z(&self, x: &DVector<f64>, _z: &DVector<f64>) -> DVector<f64> {
        x * self.a_n
    }

    fn phi(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn phi_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(x.len(), x.len())
    }

    fn phi_jacobian_apply(&self, _x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        y.clone()
    }
}

/// Energy-pricing instance with `n_agents` agents of dimension `n` on ℓ1
/// balls.
pub fn make_energy_problem(
    params: &EnergyParams,
    n: usize,
    n_agents: usize,
) -> Result<AggregativeProblem> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    let lens = [
        ("k", params.k.len()),
        ("chi", params.chi.len()),
        ("radii", params.radii.len()),
    ];
    for (name, len) in lens {
        if len != n_agents {
            return Err(Error::param(name, format!("expected {n_agents} entries, got {len}")));
        }
    }
    if !(params.a > 0.0) {
        return Err(Error::param("a", format!("must be positive, got {}", params.a)));
    }
    if let Some(k) = params.k.iter().find(|k| !(**k > 0.0)) {
        return Err(Error::param("k", format!("must be positive, got {k}")));
    }
    if let Some(r) = params.radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::InvalidRadius(*r));
    }
    if params.p0.len() != n || params.chi.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch {
            context: "energy targets / base price",
            expected: n,
            got: params.p0.len(),
        });
    }
    let a_n = params.a * n_agents as f64;
    let agents: Vec<Arc<dyn AgentCost>> = (0..n_agents)
        .map(|i| {
            Arc::new(EnergyAgent {
                k: params.k[i],
                chi: params.chi[i].clone(),
                a_n,
                p0: params.p0.clone(),
            }) as Arc<dyn AgentCost>
        })
        .collect();
    let sets = params
        .radii
        .iter()
        .map(|&radius| FeasibleSet::L1Ball { radius })
        .collect();
    AggregativeProblem::new(agents, sets)
}
