//! Linear minimization oracles and Euclidean projections for the supported
//! feasible sets.
//!
//! Tie-breaking is fixed so results are bit-reproducible: the ℓ1 oracle picks
//! the lowest index among maximal `|d_j|`, and `sign(0) = +1` everywhere.

use std::hint::black_box;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Vertex returned by a linear minimization oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct LmoResult {
    pub vertex: DVector<f64>,
    /// `⟨vertex, d⟩`
    pub inner_product: f64,
    pub elapsed: Duration,
}

#[inline]
fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRadius(r))
    }
}

fn check_box(lo: &DVector<f64>, hi: &DVector<f64>) -> Result<()> {
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

fn timed(d: &DVector<f64>, f: impl FnOnce() -> DVector<f64>) -> LmoResult {
    let start = Instant::now();
    let vertex = f();
    let elapsed = start.elapsed();
    let inner_product = vertex.dot(d);
    LmoResult {
        vertex,
        inner_product,
        elapsed,
    }
}

/// Index and value of the lowest-index entry with maximal magnitude.
fn argmax_abs(d: &[f64]) -> (usize, f64) {
    let mut best = (0, d.first().copied().unwrap_or(0.0));
    for (j, &v) in d.iter().enumerate().skip(1) {
        if v.abs() > best.1.abs() {
            best = (j, v);
        }
    }
    best
}

/// Vertex of `{‖s‖₁ ≤ r}` minimizing `⟨s, d⟩`, without timing.
pub fn l1_vertex(d: &DVector<f64>, r: f64) -> DVector<f64> {
    let mut s = DVector::zeros(d.len());
    if !d.is_empty() {
        let (j, v) = argmax_abs(d.as_slice());
        s[j] = -r * sign(v);
    }
    s
}

pub fn linf_vertex(d: &DVector<f64>, r: f64) -> DVector<f64> {
    d.map(|v| -r * sign(v))
}

pub fn box_vertex(d: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(d.len(), |j, _| if d[j] > 0.0 { lo[j] } else { hi[j] })
}

/// `argmin_{‖s‖₁ ≤ r} ⟨s, d⟩ = -r·sign(d_j*)·e_j*` with `j* = argmax |d_j|`.
/// For `d = 0` this is `-r·e_0`.
pub fn lmo_l1(d: &DVector<f64>, r: f64) -> Result<LmoResult> {
    check_radius(r)?;
    Ok(timed(d, || l1_vertex(d, r)))
}

/// `argmin_{‖s‖∞ ≤ r} ⟨s, d⟩ = -r·sign(d)` elementwise.
pub fn lmo_linf(d: &DVector<f64>, r: f64) -> Result<LmoResult> {
    check_radius(r)?;
    Ok(timed(d, || linf_vertex(d, r)))
}

/// Coordinate-wise `lo_j` where `d_j > 0`, otherwise `hi_j`.
pub fn lmo_box(d: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> Result<LmoResult> {
    check_box(lo, hi)?;
    if d.len() != lo.len() {
        return Err(Error::DimensionMismatch {
            context: "box lmo direction",
            expected: lo.len(),
            got: d.len(),
        });
    }
    Ok(timed(d, || box_vertex(d, lo, hi)))
}

/// Euclidean projection onto `{‖s‖₁ ≤ r}` by sorting magnitudes and
/// soft-thresholding. O(n log n).
pub fn project_l1(x: &DVector<f64>, r: f64) -> Result<DVector<f64>> {
    check_radius(r)?;
    let norm: f64 = x.iter().map(|v| v.abs()).sum();
    if norm <= r {
        return Ok(x.clone());
    }
    let mut u: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - r) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    Ok(x.map(|v| sign(v) * (v.abs() - theta).max(0.0)))
}

/// Projection onto `{‖s‖₁ ≤ r}` by a textbook primal active-set QP method.
///
/// The problem is posed on the orthant of `x`: constraints `σ_j s_j ≥ 0` and
/// `Σ σ_j s_j ≤ r` with `σ = sign(x)`. Starting from `s = 0` with every sign
/// constraint in the working set, each iteration solves the equality
/// constrained subproblem, steps to the first blocking constraint or drops
/// the constraint with the most negative multiplier. It releases
/// coordinates one at a time, so it costs O(n) per iteration and O(n²)
/// overall. It exists as a stand-in for a general-purpose QP solve in the
/// scaling study; [`project_l1`] is the fast path.
pub fn project_l1_active_set(x: &DVector<f64>, r: f64) -> Result<DVector<f64>> {
    check_radius(r)?;
    let n = x.len();
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    if abs.iter().sum::<f64>() <= r {
        return Ok(x.clone());
    }
    let sigma: Vec<f64> = x.iter().map(|&v| sign(v)).collect();
    // s is kept in orthant coordinates: t_j = σ_j s_j ≥ 0, Σ t_j ≤ r.
    let mut t = vec![0.0; n];
    let mut fixed = vec![true; n];
    let mut facet = false;
    let max_iter = 20 * n + 20;
    let scale = abs.iter().fold(r, |m, &v| m.max(v));
    let eps = 1e-14 * scale;
    let mut target = vec![0.0; n];

    for _ in 0..max_iter {
        // Equality-constrained subproblem on the free coordinates.
        let free = fixed.iter().filter(|f| !**f).count();
        let lambda = if facet && free > 0 {
            let s: f64 = (0..n).filter(|&j| !fixed[j]).map(|j| abs[j]).sum();
            (s - r) / free as f64
        } else {
            0.0
        };
        for j in 0..n {
            target[j] = if fixed[j] { 0.0 } else { abs[j] - lambda };
        }
        let step_norm = (0..n).map(|j| (target[j] - t[j]).abs()).fold(0.0, f64::max);

        if step_norm <= eps {
            // Multipliers: λ - |x_j| for fixed coordinates, λ for the facet.
            let mut worst: Option<(Option<usize>, f64)> = None;
            for j in (0..n).filter(|&j| fixed[j]) {
                let mu = lambda - abs[j];
                if mu < -eps && worst.is_none_or(|(_, w)| mu < w) {
                    worst = Some((Some(j), mu));
                }
            }
            if facet && lambda < -eps && worst.is_none_or(|(_, w)| lambda < w) {
                worst = Some((None, lambda));
            }
            match worst {
                None => {
                    return Ok(DVector::from_fn(n, |j, _| sigma[j] * t[j]));
                }
                Some((Some(j), _)) => fixed[j] = false,
                Some((None, _)) => facet = false,
            }
            continue;
        }

        // Ratio test against constraints outside the working set.
        let mut alpha = 1.0;
        let mut blocking: Option<Option<usize>> = None;
        for j in (0..n).filter(|&j| !fixed[j]) {
            let p = target[j] - t[j];
            if p < 0.0 {
                let a = -t[j] / p;
                if a < alpha {
                    alpha = a;
                    blocking = Some(Some(j));
                }
            }
        }
        if !facet {
            let slope: f64 = (0..n).map(|j| target[j] - t[j]).sum();
            if slope > 0.0 {
                let slack = r - t.iter().sum::<f64>();
                let a = slack / slope;
                if a < alpha {
                    alpha = a.max(0.0);
                    blocking = Some(None);
                }
            }
        }
        for j in 0..n {
            t[j] += alpha * (target[j] - t[j]);
        }
        match blocking {
            Some(Some(j)) => {
                t[j] = 0.0;
                fixed[j] = true;
            }
            Some(None) => facet = true,
            None => {}
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        gap: f64::NAN,
        tol: eps,
    })
}

/// Oracles covered by [`bench_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleId {
    LmoL1,
    LmoLinf,
    LmoBox,
    ProjectL1,
    ProjectL1ActiveSet,
}

impl OracleId {
    pub const ALL: [OracleId; 5] = [
        OracleId::LmoL1,
        OracleId::LmoLinf,
        OracleId::LmoBox,
        OracleId::ProjectL1,
        OracleId::ProjectL1ActiveSet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleId::LmoL1 => "lmo_l1",
            OracleId::LmoLinf => "lmo_linf",
            OracleId::LmoBox => "lmo_box",
            OracleId::ProjectL1 => "project_l1",
            OracleId::ProjectL1ActiveSet => "project_l1_active_set",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchStats {
    pub oracle: OracleId,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub median_ns: f64,
    pub p10_ns: f64,
    pub p90_ns: f64,
}

impl BenchStats {
    pub const CSV_HEADER: &'static str = "oracle,n,trials,median_ns,p10_ns,p90_ns,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.1},{:.1},{:.1},{}",
            self.oracle.name(),
            self.n,
            self.trials,
            self.median_ns,
            self.p10_ns,
            self.p90_ns,
            self.seed
        )
    }
}

/// Inputs per timed trial; per-call time is the batch time divided by this.
const BENCH_BATCH: usize = 32;
const BENCH_WARMUP: usize = 10;

/// Times one oracle on seeded standard-normal inputs of dimension `n`.
///
/// LMOs use radius 1 (box `[-1, 1]^n`); projections use half the ℓ1 norm of
/// each input so that a sizeable fraction of coordinates stays in the
/// support. Each trial times a batch of calls; the reported figures are
/// per-call nanoseconds.
pub fn bench_oracle(oracle: OracleId, n: usize, trials: usize, seed: u64) -> Result<BenchStats> {
    if trials < 10 {
        return Err(Error::param("trials", format!("need at least 10, got {trials}")));
    }
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = DVector::from_element(n, -1.0);
    let hi = DVector::from_element(n, 1.0);
    let mut batch = || -> Vec<(DVector<f64>, f64)> {
        (0..BENCH_BATCH)
            .map(|_| {
                let v = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                let r = 0.5 * v.iter().map(|x: &f64| x.abs()).sum::<f64>();
                (v, r)
            })
            .collect()
    };
    let run = |(d, r): &(DVector<f64>, f64)| -> Result<DVector<f64>> {
        Ok(match oracle {
            OracleId::LmoL1 => l1_vertex(d, 1.0),
            OracleId::LmoLinf => linf_vertex(d, 1.0),
            OracleId::LmoBox => box_vertex(d, &lo, &hi),
            OracleId::ProjectL1 => project_l1(d, *r)?,
            OracleId::ProjectL1ActiveSet => project_l1_active_set(d, *r)?,
        })
    };

    for input in batch().iter().take(BENCH_WARMUP) {
        black_box(run(black_box(input))?);
    }
    let mut per_call = Vec::with_capacity(trials);
    for _ in 0..trials {
        let inputs = batch();
        let start = Instant::now();
        for input in &inputs {
            black_box(run(black_box(input))?);
        }
        per_call.push(start.elapsed().as_nanos() as f64 / BENCH_BATCH as f64);
    }
    per_call.sort_by(f64::total_cmp);
    Ok(BenchStats {
        oracle,
        n,
        trials,
        seed,
        median_ns: quantile(&per_call, 0.5),
        p10_ns: quantile(&per_call, 0.1),
        p90_ns: quantile(&per_call, 0.9),
    })
}

/// Linear-interpolated quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn l1_lmo_examples() {
        let r = lmo_l1(&v(&[3.0, -1.0]), 5.0).unwrap();
        assert_eq!(r.vertex, v(&[-5.0, 0.0]));
        assert_eq!(r.inner_product, -15.0);
        assert_eq!(lmo_l1(&v(&[0.0, 0.0]), 2.0).unwrap().vertex, v(&[-2.0, 0.0]));
        // tie goes to the lowest index
        assert_eq!(l1_vertex(&v(&[1.0, -1.0, 1.0]), 1.0), v(&[-1.0, 0.0, 0.0]));
        assert!(matches!(lmo_l1(&v(&[1.0]), 0.0), Err(Error::InvalidRadius(_))));
    }

    #[test]
    fn linf_lmo_examples() {
        assert_eq!(lmo_linf(&v(&[3.0, -1.0]), 5.0).unwrap().vertex, v(&[-5.0, 5.0]));
        assert_eq!(lmo_linf(&v(&[0.0, 0.0]), 2.0).unwrap().vertex, v(&[-2.0, -2.0]));
        assert!(lmo_linf(&v(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn box_lmo_examples() {
        let lo = v(&[0.0, 0.0]);
        let hi = v(&[1.0, 1.0]);
        assert_eq!(lmo_box(&v(&[1.0, -1.0]), &lo, &hi).unwrap().vertex, v(&[0.0, 1.0]));
        assert_eq!(lmo_box(&v(&[0.0, 0.0]), &lo, &hi).unwrap().vertex, hi);
        assert!(matches!(
            lmo_box(&v(&[1.0, 1.0]), &v(&[0.0, 2.0]), &hi),
            Err(Error::InvalidBox { index: 1, .. })
        ));
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_l1(&v(&[0.5, 0.5]), 2.0).unwrap(), v(&[0.5, 0.5]));
        assert_eq!(project_l1(&v(&[2.0, 0.0]), 1.0).unwrap(), v(&[1.0, 0.0]));
        assert_eq!(project_l1_active_set(&v(&[2.0, 0.0]), 1.0).unwrap(), v(&[1.0, 0.0]));
        assert!(project_l1(&v(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn projection_beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = DVector::from_fn(6, |_, _| 3.0 * rng.random::<f64>() - 1.5);
            let r = 1.0;
            let p = project_l1(&x, r).unwrap();
            assert!((p.lp_norm(1) - r).abs() < 1e-10 || x.lp_norm(1) <= r);
            let dist = (&p - &x).norm();
            for _ in 0..1000 {
                let s = random_l1_point(&mut rng, 6, r);
                assert!(dist <= (&s - &x).norm() + 1e-12);
            }
        }
    }

    fn random_l1_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> DVector<f64> {
        let raw = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let scale = r * rng.random::<f64>() / raw.lp_norm(1);
        raw * scale
    }

    #[test]
    fn active_set_matches_sort_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [1, 2, 3, 7, 16, 64, 200] {
            for _ in 0..25 {
                let x = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                let norm = x.lp_norm(1);
                for r in [0.05 * norm, 0.5 * norm, 0.95 * norm, 2.0 * norm] {
                    if r <= 0.0 {
                        continue;
                    }
                    let a = project_l1(&x, r).unwrap();
                    let b = project_l1_active_set(&x, r).unwrap();
                    assert!((&a - &b).amax() < 1e-10, "n = {n}, r = {r}");
                }
            }
        }
    }

    #[test]
    fn bench_rejects_few_trials() {
        assert!(bench_oracle(OracleId::LmoL1, 8, 0, 1).is_err());
        assert!(bench_oracle(OracleId::LmoL1, 8, 9, 1).is_err());
        let s = bench_oracle(OracleId::ProjectL1, 8, 10, 1).unwrap();
        assert!(s.p10_ns <= s.median_ns && s.median_ns <= s.p90_ns);
    }

    #[test]
    fn quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 0.25), 2.0);
    }
}
