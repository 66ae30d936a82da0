//! Time-varying communication graphs.
//!
//! A [`GraphSchedule`] holds a small library of undirected topologies with
//! their Metropolis mixing matrices, and a seeded selector that picks one
//! library member per round. Everything here is immutable after
//! construction.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tolerance used for row/column sum checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Undirected simple graph on `n_agents` nodes. Edges are stored once as
/// `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n_agents: usize,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    pub fn new(n_agents: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::param("n_agents", "must be at least 1"));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::param("edges", format!("self-loop at node {i}")));
            }
            if i >= n_agents || j >= n_agents {
                return Err(Error::param(
                    "edges",
                    format!("edge ({i}, {j}) has an endpoint >= {n_agents}"),
                ));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self {
            n_agents,
            edges: set.into_iter().collect(),
        })
    }

    /// Graph with no edges.
    pub fn empty(n_agents: usize) -> Result<Self> {
        Self::new(n_agents, [])
    }

    pub fn complete(n_agents: usize) -> Result<Self> {
        let edges = (0..n_agents).flat_map(|i| (i + 1..n_agents).map(move |j| (i, j)));
        Self::new(n_agents, edges)
    }

    pub fn ring(n_agents: usize) -> Result<Self> {
        let edges = (0..n_agents)
            .map(|i| (i, (i + 1) % n_agents))
            .filter(|(i, j)| i != j);
        Self::new(n_agents, edges)
    }

    pub fn path(n_agents: usize) -> Result<Self> {
        Self::new(n_agents, (1..n_agents).map(|i| (i - 1, i)))
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_agents];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        connected(self.n_agents, &self.edges)
    }
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}

/// Nonnegative mixing weights with the smallest positive entry recorded as `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    weights: DMatrix<f64>,
    eta: f64,
}

impl MixingMatrix {
    /// Wraps an arbitrary square matrix without checking double
    /// stochasticity. Used for fault injection in audits.
    pub fn from_raw(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(Error::DimensionMismatch {
                context: "mixing matrix",
                expected: weights.nrows(),
                got: weights.ncols(),
            });
        }
        let eta = smallest_positive(&weights);
        Ok(Self { weights, eta })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            weights: DMatrix::identity(n, n),
            eta: 1.0,
        }
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn size(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        is_doubly_stochastic(&self.weights, tol)
    }

    /// Copy of this matrix with row `row` multiplied by `factor`.
    pub fn with_scaled_row(&self, row: usize, factor: f64) -> Self {
        let mut w = self.weights.clone();
        w.row_mut(row).scale_mut(factor);
        let eta = smallest_positive(&w);
        Self { weights: w, eta }
    }
}

fn smallest_positive(w: &DMatrix<f64>) -> f64 {
    w.iter()
        .copied()
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min)
}

pub fn is_doubly_stochastic(w: &DMatrix<f64>, tol: f64) -> bool {
    if w.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return false;
    }
    let rows_ok = w.row_iter().all(|r| (r.sum() - 1.0).abs() <= tol);
    let cols_ok = w.column_iter().all(|c| (c.sum() - 1.0).abs() <= tol);
    rows_ok && cols_ok
}

/// Metropolis weights: `w_ij = 1 / max(|N_i|, |N_j|)` on edges, where the
/// neighbourhood `N_i` counts node `i` itself, and the diagonal absorbs the
/// remainder of each row.
pub fn metropolis_weights(topology: &Topology) -> MixingMatrix {
    let n = topology.n_agents();
    let deg = topology.degrees();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in topology.edges() {
        let v = 1.0 / ((deg[i].max(deg[j]) + 1) as f64);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    let eta = smallest_positive(&w);
    MixingMatrix { weights: w, eta }
}

/// Rule mapping a round index to a library member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    /// Uniform draw per round. Round `k` uses ChaCha stream `k` of `seed`, so
    /// any round can be realized without replaying earlier ones.
    Uniform { seed: u64 },
    /// `k mod library_len`.
    Cyclic,
}

impl Selector {
    pub fn index(&self, k: u64, len: usize) -> usize {
        match *self {
            Selector::Uniform { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k);
                rng.random_range(0..len)
            }
            Selector::Cyclic => (k % len as u64) as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSchedule {
    library: Vec<(Topology, MixingMatrix)>,
    selector: Selector,
    window: usize,
}

impl GraphSchedule {
    /// Builds a schedule whose library matrices are the Metropolis weights of
    /// the given topologies.
    pub fn from_topologies(
        topologies: Vec<Topology>,
        selector: Selector,
        window: usize,
    ) -> Result<Self> {
        let library = topologies
            .into_iter()
            .map(|t| {
                let w = metropolis_weights(&t);
                (t, w)
            })
            .collect();
        Self::new(library, selector, window)
    }

    pub fn new(
        library: Vec<(Topology, MixingMatrix)>,
        selector: Selector,
        window: usize,
    ) -> Result<Self> {
        let Some(first) = library.first() else {
            return Err(Error::param("library", "schedule needs at least one graph"));
        };
        if window == 0 {
            return Err(Error::param("window", "must be positive"));
        }
        let n = first.0.n_agents();
        for (t, w) in &library {
            if t.n_agents() != n || w.size() != n {
                return Err(Error::DimensionMismatch {
                    context: "schedule library",
                    expected: n,
                    got: t.n_agents().max(w.size()),
                });
            }
        }
        Ok(Self {
            library,
            selector,
            window,
        })
    }

    /// Same topology every round.
    pub fn stationary(topology: Topology) -> Result<Self> {
        Self::from_topologies(vec![topology], Selector::Cyclic, 1)
    }

    /// Seeded Erdős–Rényi base graph (resampled until connected and holding
    /// at least `groups` edges), with its edges dealt round-robin into
    /// `groups` library topologies. The union is the base graph, hence
    /// connected.
    pub fn random_partition(
        n_agents: usize,
        edge_prob: f64,
        groups: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_agents < 2 {
            return Err(Error::param("n_agents", "random partition needs at least 2 agents"));
        }
        if groups == 0 || groups > n_agents * (n_agents - 1) / 2 {
            return Err(Error::param(
                "groups",
                format!("must be in 1..={}", n_agents * (n_agents - 1) / 2),
            ));
        }
        if !(edge_prob > 0.0 && edge_prob <= 1.0) {
            return Err(Error::param("edge_prob", "must be in (0, 1]"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = loop {
            let edges: Vec<(usize, usize)> = (0..n_agents)
                .flat_map(|i| (i + 1..n_agents).map(move |j| (i, j)))
                .filter(|_| rng.random::<f64>() < edge_prob)
                .collect();
            if edges.len() >= groups && connected(n_agents, &edges) {
                break edges;
            }
        };
        let mut parts = vec![Vec::new(); groups];
        for (idx, e) in base.into_iter().enumerate() {
            parts[idx % groups].push(e);
        }
        let topologies = parts
            .into_iter()
            .map(|edges| Topology::new(n_agents, edges))
            .collect::<Result<Vec<_>>>()?;
        Self::from_topologies(topologies, Selector::Uniform { seed }, groups)
    }

    pub fn n_agents(&self) -> usize {
        self.library[0].0.n_agents()
    }

    pub fn library(&self) -> &[(Topology, MixingMatrix)] {
        &self.library
    }

    pub fn selector(&self) -> Selector {
        self.selector
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn index_at(&self, k: u64) -> usize {
        self.selector.index(k, self.library.len())
    }

    /// Realized `W_k`.
    pub fn matrix_at(&self, k: u64) -> &MixingMatrix {
        &self.library[self.index_at(k)].1
    }

    /// Copy of the schedule with row `row` of every library matrix scaled.
    pub fn with_faulty_row(&self, row: usize, factor: f64) -> Self {
        let library = self
            .library
            .iter()
            .map(|(t, w)| (t.clone(), w.with_scaled_row(row, factor)))
            .collect();
        Self {
            library,
            selector: self.selector,
            window: self.window,
        }
    }

    /// Whether every window of `window` consecutive rounds in `[0, horizon)`
    /// realizes a connected union graph.
    pub fn realized_window_connectivity(&self, horizon: u64) -> bool {
        let n = self.n_agents();
        let b = self.window as u64;
        if horizon < b {
            return true;
        }
        (0..=horizon - b).all(|start| {
            let edges: BTreeSet<(usize, usize)> = (start..start + b)
                .flat_map(|k| self.library[self.index_at(k)].0.edges().iter().copied())
                .collect();
            connected(n, &edges.into_iter().collect::<Vec<_>>())
        })
    }

    /// Plain-text form. See [`parse_schedule`] for the schema.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# aggfw graph schedule\n");
        let _ = writeln!(out, "agents {}", self.n_agents());
        let _ = writeln!(out, "window {}", self.window);
        match self.selector {
            Selector::Uniform { seed } => {
                let _ = writeln!(out, "selector uniform {seed}");
            }
            Selector::Cyclic => out.push_str("selector cyclic\n"),
        }
        for (t, _) in &self.library {
            out.push_str("topology");
            for (i, j) in t.edges() {
                let _ = write!(out, " {i}-{j}");
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the plain-text schedule schema:
///
/// ```text
/// # comment
/// agents 5
/// window 3
/// selector uniform 42      # or: selector cyclic
/// topology 0-1 1-2
/// topology 2-3 3-4
/// topology                 # a graph with no edges
/// ```
///
/// Mixing matrices are rebuilt with [`metropolis_weights`].
pub fn parse_schedule(text: &str) -> Result<GraphSchedule> {
    let mut agents = None;
    let mut window = None;
    let mut selector = None;
    let mut edge_lists: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap_or_default();
        let rest: Vec<&str> = tokens.collect();
        match key {
            "agents" | "window" => {
                let [value] = rest[..] else {
                    return Err(err(format!("`{key}` takes exactly one integer")));
                };
                let v: usize = value
                    .parse()
                    .map_err(|_| err(format!("`{key}` value `{value}` is not an integer")))?;
                if key == "agents" {
                    agents = Some(v);
                } else {
                    window = Some(v);
                }
            }
            "selector" => {
                selector = Some(match rest[..] {
                    ["cyclic"] => Selector::Cyclic,
                    ["uniform", seed] => Selector::Uniform {
                        seed: seed
                            .parse()
                            .map_err(|_| err(format!("seed `{seed}` is not a u64")))?,
                    },
                    _ => return Err(err("expected `selector cyclic` or `selector uniform <seed>`".into())),
                });
            }
            "topology" => {
                let mut edges = Vec::with_capacity(rest.len());
                for tok in rest {
                    let (a, b) = tok
                        .split_once('-')
                        .ok_or_else(|| err(format!("edge `{tok}` is not of the form i-j")))?;
                    let i = a.parse().map_err(|_| err(format!("bad node index in `{tok}`")))?;
                    let j = b.parse().map_err(|_| err(format!("bad node index in `{tok}`")))?;
                    edges.push((i, j));
                }
                edge_lists.push((line_no, edges));
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    let n = agents.ok_or(Error::Parse {
        line: 0,
        message: "missing `agents` line".into(),
    })?;
    let topologies = edge_lists
        .into_iter()
        .map(|(line, edges)| {
            Topology::new(n, edges).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if topologies.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "schedule has no `topology` lines".into(),
        });
    }
    let window = window.unwrap_or(topologies.len());
    GraphSchedule::from_topologies(topologies, selector.unwrap_or(Selector::Cyclic), window)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assumption3Report {
    pub doubly_stochastic: bool,
    pub eta: f64,
    pub union_connected: bool,
}

impl Assumption3Report {
    pub fn holds(&self) -> bool {
        self.doubly_stochastic && self.union_connected && self.eta > 0.0 && self.eta.is_finite()
    }
}

/// Checks double stochasticity, the positivity floor, and union connectivity
/// of the library.
pub fn verify_assumption3(schedule: &GraphSchedule) -> Assumption3Report {
    let doubly_stochastic = schedule
        .library()
        .iter()
        .all(|(_, w)| w.is_doubly_stochastic(STOCHASTIC_TOL));
    let eta = schedule
        .library()
        .iter()
        .map(|(_, w)| w.eta())
        .fold(f64::INFINITY, f64::min);
    let union: BTreeSet<(usize, usize)> = schedule
        .library()
        .iter()
        .flat_map(|(t, _)| t.edges().iter().copied())
        .collect();
    let union_connected = connected(schedule.n_agents(), &union.into_iter().collect::<Vec<_>>());
    Assumption3Report {
        doubly_stochastic,
        eta,
        union_connected,
    }
}

/// `Φ(k, s) = W_k W_{k-1} ⋯ W_s`, with `Φ(s - 1, s) = I`.
pub fn transition_matrix(schedule: &GraphSchedule, k: i64, s: i64) -> Result<DMatrix<f64>> {
    if s < 0 || k < s - 1 {
        return Err(Error::IndexOrder { k, s });
    }
    let n = schedule.n_agents();
    let mut phi = DMatrix::identity(n, n);
    for t in s..=k {
        phi = schedule.matrix_at(t as u64).weights() * phi;
    }
    Ok(phi)
}

/// `(k, max_ij |Φ(k, s)_ij - 1/N|)` for `k = s, …, s + horizon - 1`.
pub fn mixing_decay_profile(schedule: &GraphSchedule, s: u64, horizon: usize) -> Vec<(u64, f64)> {
    let n = schedule.n_agents();
    let avg = 1.0 / n as f64;
    let mut phi = DMatrix::identity(n, n);
    (0..horizon as u64)
        .map(|t| {
            let k = s + t;
            phi = schedule.matrix_at(k).weights() * &phi;
            let dev = phi.iter().map(|x| (x - avg).abs()).fold(0.0, f64::max);
            (k, dev)
        })
        .collect()
}

/// Empirical `(θ̂, β̂)` with `dev ≈ θ̂ β̂^(k-s)`, fitted by least squares on
/// `ln dev` over the last `tail` fraction of the profile. Entries at or below
/// `floor` are ignored. Returns `None` if fewer than two points remain.
pub fn fit_geometric_rate(profile: &[(u64, f64)], tail: f64, floor: f64) -> Option<(f64, f64)> {
    let s = profile.first()?.0;
    let start = ((1.0 - tail.clamp(0.0, 1.0)) * profile.len() as f64) as usize;
    let pts: Vec<(f64, f64)> = profile[start..]
        .iter()
        .filter(|(_, d)| *d > floor)
        .map(|&(k, d)| ((k - s) as f64, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Some((intercept.exp(), slope.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-15
    }

    #[test]
    fn metropolis_single_edge() {
        let w = metropolis_weights(&Topology::new(2, [(0, 1)]).unwrap());
        for v in w.weights().iter() {
            assert!(close(*v, 0.5));
        }
    }

    #[test]
    fn metropolis_path_of_three() {
        // |N_0| = |N_2| = 2, |N_1| = 3 (self included)
        let w = metropolis_weights(&Topology::path(3).unwrap());
        let w = w.weights();
        assert!(close(w[(0, 1)], 1.0 / 3.0));
        assert!(close(w[(1, 2)], 1.0 / 3.0));
        assert!(close(w[(0, 2)], 0.0));
        assert!(close(w[(0, 0)], 2.0 / 3.0));
        assert!(close(w[(2, 2)], 2.0 / 3.0));
        assert!(close(w[(1, 1)], 1.0 / 3.0));
    }

    #[test]
    fn metropolis_isolated_node() {
        let w = metropolis_weights(&Topology::empty(1).unwrap());
        assert_eq!(w.weights(), &DMatrix::from_element(1, 1, 1.0));
        let w = metropolis_weights(&Topology::new(3, [(0, 1)]).unwrap());
        assert_eq!(w.weights()[(2, 2)], 1.0);
    }

    #[test]
    fn topology_rejects_bad_edges() {
        assert!(Topology::new(3, [(1, 1)]).is_err());
        assert!(Topology::new(3, [(0, 3)]).is_err());
        assert!(Topology::new(0, []).is_err());
        let t = Topology::new(3, [(1, 0), (0, 1)]).unwrap();
        assert_eq!(t.edges(), &[(0, 1)]);
    }

    #[test]
    fn complete_graph_report() {
        let s = GraphSchedule::stationary(Topology::complete(4).unwrap()).unwrap();
        let r = verify_assumption3(&s);
        assert!(r.doubly_stochastic && r.union_connected);
        assert!(close(r.eta, 0.25));
    }

    #[test]
    fn two_disjoint_paths_union_connected() {
        let a = Topology::new(4, [(0, 1), (2, 3)]).unwrap();
        let b = Topology::new(4, [(1, 2)]).unwrap();
        let s = GraphSchedule::from_topologies(vec![a.clone()], Selector::Cyclic, 1).unwrap();
        assert!(!verify_assumption3(&s).union_connected);
        let s = GraphSchedule::from_topologies(vec![a, b], Selector::Cyclic, 2).unwrap();
        assert!(verify_assumption3(&s).union_connected);
        assert!(s.realized_window_connectivity(50));
    }

    #[test]
    fn broken_row_sum_detected() {
        let s = GraphSchedule::stationary(Topology::ring(4).unwrap()).unwrap();
        let bad = s.with_faulty_row(0, 0.9);
        assert!(!verify_assumption3(&bad).doubly_stochastic);
    }

    #[test]
    fn transition_matrix_edges() {
        let s = GraphSchedule::random_partition(5, 0.6, 3, 7).unwrap();
        let id = transition_matrix(&s, 2, 3).unwrap();
        assert_eq!(id, DMatrix::identity(5, 5));
        let w3 = transition_matrix(&s, 3, 3).unwrap();
        assert_eq!(&w3, s.matrix_at(3).weights());
        assert!(matches!(
            transition_matrix(&s, 1, 3),
            Err(Error::IndexOrder { k: 1, s: 3 })
        ));
    }

    #[test]
    fn transition_matrix_stationary_power() {
        let s = GraphSchedule::stationary(Topology::ring(5).unwrap()).unwrap();
        let w = s.matrix_at(0).weights().clone();
        // independent route: repeated squaring-free multiplication
        let mut expected = w.clone();
        for _ in 0..6 {
            expected = &expected * &w;
        }
        let phi = transition_matrix(&s, 10, 4).unwrap();
        assert!((phi - expected).amax() < 1e-14);
    }

    #[test]
    fn decay_profile_cases() {
        let s = GraphSchedule::stationary(Topology::complete(2).unwrap()).unwrap();
        assert!(mixing_decay_profile(&s, 3, 5).iter().all(|&(_, d)| d == 0.0));

        let s = GraphSchedule::stationary(Topology::ring(6).unwrap()).unwrap();
        let p = mixing_decay_profile(&s, 0, 60);
        for w in p[5..].windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
        let (_, beta) = fit_geometric_rate(&p, 0.5, 1e-14).unwrap();
        assert!(beta < 1.0);

        let isolated = Topology::new(3, [(0, 1)]).unwrap();
        let s = GraphSchedule::stationary(isolated).unwrap();
        let p = mixing_decay_profile(&s, 0, 100);
        assert!(p.last().unwrap().1 > 0.3);
    }

    #[test]
    fn random_partition_properties() {
        let s = GraphSchedule::random_partition(5, 0.6, 3, 11).unwrap();
        assert_eq!(s.library().len(), 3);
        assert!(s.library().iter().all(|(t, _)| !t.edges().is_empty()));
        assert!(verify_assumption3(&s).holds());
        let again = GraphSchedule::random_partition(5, 0.6, 3, 11).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn schedule_text_round_trip() {
        let s = GraphSchedule::random_partition(6, 0.6, 3, 3).unwrap();
        let parsed = parse_schedule(&s.to_text()).unwrap();
        assert_eq!(parsed, s);
    }

    #[test]
    fn schedule_parse_errors_carry_line() {
        let text = "agents 3\nselector cyclic\ntopology 0-1 1-x\n";
        match parse_schedule(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_schedule("agents 3\nbogus 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
