//! Projected-gradient baseline with the same tracking machinery, and the
//! centralized ground-truth solver.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;

use crate::dfwagt::{fw_gap, run_tracking, tracked_gradient, RunTrace, StrategyStep, SwarmState};
use crate::error::{Error, Result};
use crate::graph::GraphSchedule;
use crate::problem::{AggregativeProblem, Profile};

/// Options of the projected-gradient baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgaOptions {
    pub alpha: f64,
    /// Use `α / sqrt(k + 1)` instead of a constant step.
    pub diminishing: bool,
    /// Scale only `∇₁g_i` by `α`, leaving the tracker term `∇φ_i ŷ_i`
    /// unscaled. The default scales the whole tracked gradient.
    pub alpha_first_term_only: bool,
    /// Use the O(n²) active-set ℓ1 projection instead of sort-and-threshold.
    pub slow_projection: bool,
}

impl Default for PgaOptions {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            diminishing: false,
            alpha_first_term_only: false,
            slow_projection: false,
        }
    }
}

impl PgaOptions {
    pub fn alpha_at(&self, k: u64) -> f64 {
        if self.diminishing {
            self.alpha / ((k + 1) as f64).sqrt()
        } else {
            self.alpha
        }
    }
}

struct ProjectedStep {
    options: PgaOptions,
}

impl StrategyStep for ProjectedStep {
    fn step(
        &mut self,
        problem: &AggregativeProblem,
        state: &SwarmState,
        v_hat: &[DVector<f64>],
        y_hat: &[DVector<f64>],
    ) -> Result<(Profile, u64)> {
        let alpha = self.options.alpha_at(state.round);
        let mut sub_ns = 0;
        let mut next = Vec::with_capacity(state.x.len());
        let directions = if self.options.alpha_first_term_only {
            None
        } else {
            Some(tracked_gradient(problem, &state.x, v_hat, y_hat))
        };
        for (i, xi) in state.x.iter().enumerate() {
            let target = match &directions {
                Some(d) => xi - &d[i] * alpha,
                None => {
                    let agent = problem.agent(i);
                    xi - agent.grad_x(xi, &v_hat[i]) * alpha - agent.phi_jacobian_apply(xi, &y_hat[i])
                }
            };
            let start = Instant::now();
            let p = problem.set(i).project(&target, self.options.slow_projection)?;
            sub_ns += start.elapsed().as_nanos() as u64;
            next.push(p);
        }
        Ok((next, sub_ns))
    }
}

/// Projected gradient with aggregate and gradient tracking: the consensus
/// and tracking steps are those of the Frank-Wolfe engine, the strategy step
/// is `x_i ← Π_{X_i}(x_i - α d_i)`.
pub fn pga_run(
    problem: &AggregativeProblem,
    schedule: &GraphSchedule,
    options: PgaOptions,
    x0: &[DVector<f64>],
    rounds: u64,
    record_every: u64,
) -> Result<RunTrace> {
    if !(options.alpha >= 0.0) || !options.alpha.is_finite() {
        return Err(Error::param("alpha", format!("must be nonnegative, got {}", options.alpha)));
    }
    run_tracking(
        problem,
        schedule,
        x0,
        rounds,
        record_every,
        &mut ProjectedStep { options },
    )
}

/// Ground truth for a problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub x_star: Profile,
    pub f_star: f64,
    pub fw_gap_at_solution: f64,
    pub iterations: usize,
}

/// One atom of a block's convex-combination representation.
struct Atom {
    vertex: DVector<f64>,
    weight: f64,
}

/// Solves the problem centrally to Frank-Wolfe gap `tol`.
///
/// The primary route is block-cyclic pairwise Frank-Wolfe: each block keeps
/// its iterate as a convex combination of LMO vertices and moves weight from
/// the worst active vertex to the LMO vertex, with an exact line search. It
/// converges linearly on polytopes for strongly convex objectives, which
/// plain `2/(k+2)` Frank-Wolfe does not when the optimum sits inside a face.
/// The result is cross-checked against projected gradient from a different
/// start; the two objective values must agree within `10·tol`.
pub fn centralized_solve(
    problem: &AggregativeProblem,
    tol: f64,
    max_iter: usize,
) -> Result<OracleResult> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("must be positive, got {tol}")));
    }
    let primary = pairwise_frank_wolfe(problem, tol, max_iter)?;
    let check = projected_gradient(problem, tol, max_iter)?;
    let f_check = problem.global_objective(&check)?;
    if (primary.f_star - f_check).abs() > 10.0 * tol {
        return Err(Error::OracleMismatch {
            fw: primary.f_star,
            pg: f_check,
        });
    }
    Ok(primary)
}

/// Line search along a descent direction using the directional derivative
/// `slope_at(γ) = ⟨∇f(x + γd), d⟩`, which is nondecreasing for convex `f`.
/// Regula falsi on `[0, gamma_max]`; exact in one step for quadratics.
/// Derivatives stay accurate where objective differences are lost to
/// rounding.
fn line_search(
    slope_at: impl Fn(f64) -> Result<f64>,
    slope0: f64,
    gamma_max: f64,
) -> Result<f64> {
    let slope_max = slope_at(gamma_max)?;
    if slope_max <= 0.0 {
        return Ok(gamma_max);
    }
    let (mut lo, mut s_lo) = (0.0, slope0);
    let (mut hi, mut s_hi) = (gamma_max, slope_max);
    let mut gamma = lo;
    for _ in 0..50 {
        gamma = lo - s_lo * (hi - lo) / (s_hi - s_lo);
        if !(gamma > lo && gamma < hi) {
            gamma = 0.5 * (lo + hi);
        }
        let s = slope_at(gamma)?;
        if s.abs() <= 1e-13 * slope0.abs() {
            break;
        }
        if s < 0.0 {
            lo = gamma;
            s_lo = s;
        } else {
            hi = gamma;
            s_hi = s;
        }
    }
    Ok(gamma)
}

fn pairwise_frank_wolfe(
    problem: &AggregativeProblem,
    tol: f64,
    max_iter: usize,
) -> Result<OracleResult> {
    let n = problem.n_agents();
    let start = problem.default_start();
    let g0 = problem.full_gradient(&start)?;
    let mut atoms: Vec<Vec<Atom>> = Vec::with_capacity(n);
    let mut x: Profile = Vec::with_capacity(n);
    for (i, gi) in g0.iter().enumerate() {
        let s = problem.set(i).lmo(gi)?.vertex;
        x.push(s.clone());
        atoms.push(vec![Atom {
            vertex: s,
            weight: 1.0,
        }]);
    }
    let mut gap = fw_gap(problem, &x)?;
    let mut sweeps = 0;
    while gap > tol && sweeps < max_iter {
        for i in 0..n {
            let grad = problem.full_gradient(&x)?;
            let gi = &grad[i];
            let s = problem.set(i).lmo(gi)?.vertex;
            let (away_idx, _) = atoms[i]
                .iter()
                .enumerate()
                .map(|(idx, a)| (idx, a.vertex.dot(gi)))
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            let d = &s - &atoms[i][away_idx].vertex;
            let slope = gi.dot(&d);
            if slope >= 0.0 || d.norm_squared() == 0.0 {
                continue;
            }
            let gamma_max = atoms[i][away_idx].weight;
            let gamma = line_search(
                |g| {
                    let mut trial = x.clone();
                    trial[i] += &d * g;
                    Ok(problem.full_gradient(&trial)?[i].dot(&d))
                },
                slope,
                gamma_max,
            )?;
            if gamma == 0.0 {
                continue;
            }
            x[i] += &d * gamma;
            let block = &mut atoms[i];
            block[away_idx].weight -= gamma;
            match block.iter_mut().find(|a| a.vertex == s) {
                Some(a) => a.weight += gamma,
                None => block.push(Atom {
                    vertex: s,
                    weight: gamma,
                }),
            }
            if gamma >= gamma_max {
                block.remove(away_idx);
            }
            block.retain(|a| a.weight > 0.0);
        }
        sweeps += 1;
        // Rebuild from the atoms to shed accumulated drift.
        if sweeps % 64 == 0 {
            for (xi, block) in x.iter_mut().zip(&atoms) {
                let mut acc = DVector::zeros(xi.len());
                for a in block {
                    acc.axpy(a.weight, &a.vertex, 1.0);
                }
                *xi = acc;
            }
        }
        gap = fw_gap(problem, &x)?;
    }
    if gap > tol {
        return Err(Error::NonConvergence {
            iterations: sweeps,
            gap,
            tol,
        });
    }
    Ok(OracleResult {
        f_star: problem.global_objective(&x)?,
        x_star: x,
        fw_gap_at_solution: gap,
        iterations: sweeps,
    })
}

/// Projected gradient from the sets' centers. The step `1/L` is
/// backtracked until the local gradient-Lipschitz test
/// `⟨∇f(x⁺) - ∇f(x), x⁺ - x⟩ <= L ‖x⁺ - x‖²` holds.
fn projected_gradient(problem: &AggregativeProblem, tol: f64, max_iter: usize) -> Result<Profile> {
    let mut x = problem.default_start();
    let mut grad = problem.full_gradient(&x)?;
    let mut lipschitz = 1.0;
    for _ in 0..max_iter {
        if fw_gap(problem, &x)? <= tol {
            break;
        }
        lipschitz *= 0.9;
        let mut accepted = None;
        for _ in 0..64 {
            let step = 1.0 / lipschitz;
            let trial = x
                .iter()
                .zip(&grad)
                .enumerate()
                .map(|(i, (xi, gi))| problem.set(i).project(&(xi - gi * step), false))
                .collect::<Result<Profile>>()?;
            let trial_grad = problem.full_gradient(&trial)?;
            let mut curvature = 0.0;
            let mut sq = 0.0;
            for i in 0..x.len() {
                let dx = &trial[i] - &x[i];
                curvature += (&trial_grad[i] - &grad[i]).dot(&dx);
                sq += dx.norm_squared();
            }
            if curvature <= lipschitz * sq {
                accepted = Some((trial, trial_grad, sq));
                break;
            }
            lipschitz *= 2.0;
        }
        match accepted {
            Some((trial, trial_grad, sq)) if sq > 0.0 => {
                x = trial;
                grad = trial_grad;
            }
            _ => break,
        }
    }
    Ok(x)
}

/// Reads a cached oracle result written by [`store_oracle_cache`].
///
/// Returns `Ok(None)` if the file does not exist and
/// [`Error::StaleCache`] if it was written for a different config hash.
pub fn load_oracle_cache(path: &Path, expected_hash: &str) -> Result<Option<OracleResult>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut hash = None;
    let mut f_star = None;
    let mut gap = None;
    let mut iterations = None;
    let mut x_star = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let err = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        let float = |s: &str| s.trim().parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        match key {
            "config_hash" => hash = Some(rest.trim().to_string()),
            "f_star" => f_star = Some(float(rest)?),
            "fw_gap" => gap = Some(float(rest)?),
            "iterations" => {
                iterations = Some(rest.trim().parse().map_err(|_| err("bad iteration count".into()))?)
            }
            "x" => {
                let values = rest
                    .split_whitespace()
                    .map(float)
                    .collect::<Result<Vec<f64>>>()?;
                x_star.push(DVector::from_vec(values));
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    let missing = |what: &str| Error::Parse {
        line: 0,
        message: format!("oracle cache missing `{what}`"),
    };
    let found = hash.ok_or_else(|| missing("config_hash"))?;
    if found != expected_hash {
        return Err(Error::StaleCache {
            path: path.to_path_buf(),
            found,
            expected: expected_hash.to_string(),
        });
    }
    Ok(Some(OracleResult {
        x_star,
        f_star: f_star.ok_or_else(|| missing("f_star"))?,
        fw_gap_at_solution: gap.ok_or_else(|| missing("fw_gap"))?,
        iterations: iterations.ok_or_else(|| missing("iterations"))?,
    }))
}

pub fn store_oracle_cache(path: &Path, hash: &str, result: &OracleResult) -> Result<()> {
    let mut out = String::from("# aggfw oracle cache\n");
    let _ = writeln!(out, "config_hash {hash}");
    let _ = writeln!(out, "f_star {}", result.f_star);
    let _ = writeln!(out, "fw_gap {}", result.fw_gap_at_solution);
    let _ = writeln!(out, "iterations {}", result.iterations);
    for xi in &result.x_star {
        out.push('x');
        for v in xi.iter() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Topology;
    use crate::problem::{make_energy_problem, EnergyParams};

    fn reference(n: usize) -> AggregativeProblem {
        make_energy_problem(&EnergyParams::reference(n), n, 5).unwrap()
    }

    #[test]
    fn pga_zero_step_keeps_x() {
        let p = reference(3);
        let sched = GraphSchedule::random_partition(5, 0.6, 3, 2).unwrap();
        let opts = PgaOptions {
            alpha: 0.0,
            ..Default::default()
        };
        let trace = pga_run(&p, &sched, opts, &p.default_start(), 20, 5).unwrap();
        assert_eq!(trace.final_state.x, p.default_start());
        assert!(pga_run(&p, &sched, PgaOptions { alpha: -1.0, ..opts }, &p.default_start(), 5, 1).is_err());
    }

    #[test]
    fn pga_single_agent_is_projected_gradient() {
        let params = EnergyParams::broadcast(&[1.0], &[2.0], 0.3, 1.0, &[1.5], 4);
        let p = make_energy_problem(&params, 4, 1).unwrap();
        let sched = GraphSchedule::stationary(Topology::empty(1).unwrap()).unwrap();
        let opts = PgaOptions {
            alpha: 0.05,
            ..Default::default()
        };
        let x0 = p.default_start();
        let trace = pga_run(&p, &sched, opts, &x0, 30, 1).unwrap();
        let mut x = x0;
        for r in &trace.records {
            assert!((r.objective - p.global_objective(&x).unwrap()).abs() < 1e-12);
            let g = p.full_gradient(&x).unwrap();
            x = vec![p.set(0).project(&(&x[0] - &g[0] * 0.05), false).unwrap()];
        }
    }

    #[test]
    fn oracle_on_reference_instance() {
        let p = reference(4);
        let r = centralized_solve(&p, 1e-9, 10_000).unwrap();
        assert!(r.fw_gap_at_solution <= 1e-9);
        assert!(p.feasibility_violation(&r.x_star) < 1e-12);
    }

    #[test]
    fn oracle_reports_non_convergence() {
        let p = reference(4);
        assert!(matches!(
            centralized_solve(&p, 1e-9, 1),
            Err(Error::NonConvergence { .. })
        ));
        assert!(centralized_solve(&p, 0.0, 10).is_err());
    }

    #[test]
    fn cache_round_trip_and_staleness() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.txt");
        assert_eq!(load_oracle_cache(&path, "abc").unwrap(), None);
        let p = reference(2);
        let r = centralized_solve(&p, 1e-8, 10_000).unwrap();
        store_oracle_cache(&path, "abc", &r).unwrap();
        assert_eq!(load_oracle_cache(&path, "abc").unwrap(), Some(r));
        assert!(matches!(
            load_oracle_cache(&path, "def"),
            Err(Error::StaleCache { .. })
        ));
    }
}
