//! Robust transport planning: bridge-based plans with delta marginals,
//! the independent enumeration oracle, fixed-horizon min-cost paths,
//! the optimal-mass-transport coupling, and plan comparison.

use std::collections::BTreeSet;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::bridge::{
    marginal_flow, path_probability, solve_bridge, transition_schedule, BridgeProblem,
    MarginalFlow, TransitionSchedule,
};
use crate::error::{Error, Result};
use crate::graph::{adjacency_kernel, feasibility, teleport_kernel, weighted_kernel, Graph};
use crate::matrix::{Distribution, Matrix, NonnegativeKernel};

/// Enumeration bounds for exhaustive path listing.
pub const MAX_ENUM_NODES: usize = 12;
pub const MAX_ENUM_STEPS: usize = 8;

/// Which prior kernel a plan is built on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorMode {
    /// 0/1 adjacency prior (Ruelle-Bowen style spreading).
    Adjacency,
    /// exp(-U) weighted prior.
    Weighted,
    /// Strictly positive teleported prior with virtual-edge energy U0.
    Teleport(f64),
}

impl PriorMode {
    pub fn kernel(&self, g: &Graph) -> Result<NonnegativeKernel> {
        match *self {
            PriorMode::Adjacency => Ok(adjacency_kernel(g)),
            PriorMode::Weighted => Ok(weighted_kernel(g)),
            PriorMode::Teleport(u0) => teleport_kernel(g, u0),
        }
    }
}

/// Paths of one fixed length with their probabilities and total costs.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    /// 1-based node sequences of length N+1, lexicographically ordered.
    pub paths: Vec<Vec<usize>>,
    pub probs: Vec<f64>,
    pub costs: Vec<f64>,
}

impl PathEnsemble {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// exp of the Shannon entropy of the path distribution: how many paths
    /// the plan effectively uses.
    pub fn effective_support(&self) -> f64 {
        let h: f64 = self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum();
        h.exp()
    }
}

fn dfs_paths(
    kernel: &NonnegativeKernel,
    prefix: &mut Vec<usize>,
    sink: usize,
    remaining: usize,
    reach: &[Vec<bool>],
    out: &mut Vec<Vec<usize>>,
) {
    let cur = *prefix.last().expect("nonempty prefix");
    if remaining == 0 {
        if cur == sink {
            out.push(prefix.clone());
        }
        return;
    }
    // reach[k][i] = sink reachable from i in exactly k steps.
    for next in 0..kernel.n() {
        if kernel.get(cur, next) > 0.0 && reach[remaining - 1][next] {
            prefix.push(next);
            dfs_paths(kernel, prefix, sink, remaining - 1, reach, out);
            prefix.pop();
        }
    }
}

/// Exact-step reachability-to-sink tables for pruning.
fn reach_tables(kernel: &NonnegativeKernel, sink: usize, steps: usize) -> Vec<Vec<bool>> {
    let n = kernel.n();
    let mut tables = vec![vec![false; n]; steps + 1];
    tables[0][sink] = true;
    for k in 1..=steps {
        for i in 0..n {
            tables[k][i] = (0..n).any(|j| kernel.get(i, j) > 0.0 && tables[k - 1][j]);
        }
    }
    tables
}

/// All support-feasible paths of exactly `steps` steps from `source` to
/// `sink` (0-based), in lexicographic order. Parallelizes over first-step
/// branches when the `parallel` feature is enabled.
pub fn enumerate_feasible_paths(
    kernel: &NonnegativeKernel,
    source: usize,
    sink: usize,
    steps: usize,
) -> Vec<Vec<usize>> {
    let reach = reach_tables(kernel, sink, steps);
    if !reach[steps][source] {
        return Vec::new();
    }
    let first: Vec<usize> = (0..kernel.n())
        .filter(|&j| kernel.get(source, j) > 0.0 && reach[steps - 1][j])
        .collect();
    let branch = |j: usize| {
        let mut out = Vec::new();
        let mut prefix = vec![source, j];
        dfs_paths(kernel, &mut prefix, sink, steps - 1, &reach, &mut out);
        out
    };
    #[cfg(feature = "parallel")]
    let per_branch: Vec<Vec<Vec<usize>>> = first.par_iter().map(|&j| branch(j)).collect();
    #[cfg(not(feature = "parallel"))]
    let per_branch: Vec<Vec<Vec<usize>>> = first.iter().map(|&j| branch(j)).collect();
    per_branch.into_iter().flatten().collect()
}

/// Sequential twin of [`enumerate_feasible_paths`]; kept callable in all
/// configurations so benchmarks can compare the two directly.
pub fn enumerate_feasible_paths_seq(
    kernel: &NonnegativeKernel,
    source: usize,
    sink: usize,
    steps: usize,
) -> Vec<Vec<usize>> {
    let reach = reach_tables(kernel, sink, steps);
    if !reach[steps][source] {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut prefix = vec![source];
    dfs_paths(kernel, &mut prefix, sink, steps, &reach, &mut out);
    out
}

fn path_cost(costs: &Matrix, path: &[usize]) -> f64 {
    path.windows(2).map(|w| costs.get(w[0], w[1])).sum()
}

fn check_enum_bounds(n: usize, steps: usize) -> Result<()> {
    if n > MAX_ENUM_NODES || steps > MAX_ENUM_STEPS {
        return Err(Error::Capacity(format!(
            "path enumeration supports n <= {MAX_ENUM_NODES} and N <= {MAX_ENUM_STEPS}, got n = {n}, N = {steps}"
        )));
    }
    Ok(())
}

/// Ground truth for delta-marginal bridges: enumerate every feasible path
/// and weight it by the product of prior kernel entries, normalized.
///
/// This is deliberately independent of the potential iteration; it is the
/// conditioned-prior oracle the solver is verified against.
pub fn oracle_bridge(
    m: &NonnegativeKernel,
    source: usize,
    sink: usize,
    steps: usize,
) -> Result<PathEnsemble> {
    let n = m.n();
    check_enum_bounds(n, steps)?;
    if source == 0 || source > n || sink == 0 || sink > n {
        return Err(Error::Validation(format!("source/sink must be in 1..{n}")));
    }
    let paths0 = enumerate_feasible_paths(m, source - 1, sink - 1, steps);
    let costs_m = m.costs();
    let weights: Vec<f64> = paths0
        .iter()
        .map(|p| p.windows(2).map(|w| m.get(w[0], w[1])).product())
        .collect();
    let total: f64 = weights.iter().sum();
    let probs = if total > 0.0 {
        weights.iter().map(|w| w / total).collect()
    } else {
        Vec::new()
    };
    let costs = paths0.iter().map(|p| path_cost(&costs_m, p)).collect();
    Ok(PathEnsemble {
        paths: paths0
            .into_iter()
            .map(|p| p.iter().map(|&x| x + 1).collect())
            .collect(),
        probs,
        costs,
    })
}

/// A solved robust plan: the optimal schedule, its marginal flow, and
/// (when the instance is small enough to enumerate) the path ensemble.
#[derive(Debug, Clone)]
pub struct RobustPlan {
    pub kernel: NonnegativeKernel,
    pub schedule: TransitionSchedule,
    pub flow: MarginalFlow,
    pub ensemble: Option<PathEnsemble>,
}

/// Solve the delta-marginal bridge from `source` to `sink` over `steps`
/// steps with the prior selected by `mode`.
pub fn robust_plan(
    g: &Graph,
    source: usize,
    sink: usize,
    steps: usize,
    mode: PriorMode,
    tol: f64,
    max_iter: usize,
) -> Result<RobustPlan> {
    let kernel = mode.kernel(g)?;
    let (ok, count) = feasibility(&kernel, source, sink, steps)?;
    if !ok {
        return Err(Error::Infeasible(format!(
            "(M^{steps})_{{{source},{sink}}} = 0: no feasible path of length {steps}"
        )));
    }
    let _ = count;
    let n = g.n();
    let problem = BridgeProblem::new(
        kernel.clone(),
        steps,
        Distribution::delta(n, source)?,
        Distribution::delta(n, sink)?,
        None,
    )?;
    let sol = solve_bridge(&problem, tol, max_iter)?;
    let schedule = transition_schedule(&sol.potentials, &kernel);
    let flow = marginal_flow(&schedule);
    let ensemble = if n <= MAX_ENUM_NODES && steps <= MAX_ENUM_STEPS {
        Some(ensemble_from_schedule(&schedule, &kernel, source, sink)?)
    } else {
        None
    };
    Ok(RobustPlan {
        kernel,
        schedule,
        flow,
        ensemble,
    })
}

/// Enumerate the schedule's support paths and evaluate each probability
/// with the product formula.
pub fn ensemble_from_schedule(
    ts: &TransitionSchedule,
    kernel: &NonnegativeKernel,
    source: usize,
    sink: usize,
) -> Result<PathEnsemble> {
    check_enum_bounds(ts.n(), ts.horizon())?;
    let paths0 = enumerate_feasible_paths(kernel, source - 1, sink - 1, ts.horizon());
    let costs_m = kernel.costs();
    let mut paths = Vec::with_capacity(paths0.len());
    let mut probs = Vec::with_capacity(paths0.len());
    let mut costs = Vec::with_capacity(paths0.len());
    for p0 in paths0 {
        let path: Vec<usize> = p0.iter().map(|&x| x + 1).collect();
        let prob = path_probability(ts, &path)?;
        costs.push(path_cost(&costs_m, &p0));
        paths.push(path);
        probs.push(prob);
    }
    Ok(PathEnsemble {
        paths,
        probs,
        costs,
    })
}

/// Mass the plan pushes over virtual (non-graph) transitions, summed over
/// all steps: sum_t sum_{(i,j) not an edge} nu_t(i) pi_ij(t).
pub fn virtual_edge_mass(ts: &TransitionSchedule, flow: &MarginalFlow, g: &Graph) -> f64 {
    let n = ts.n();
    let mut mass = 0.0;
    for (t, pi) in ts.steps.iter().enumerate() {
        for i in 0..n {
            let nu = flow.rows[t][i];
            if nu > 0.0 {
                for j in 0..n {
                    if !g.has_edge(i + 1, j + 1) {
                        mass += nu * pi.get(i, j);
                    }
                }
            }
        }
    }
    mass
}

/// End-to-end minimal costs over at most N steps, with the fixed-horizon
/// DP convention that every node has a zero-cost self loop.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    pub entries: Matrix,
    pub horizon: usize,
}

impl CostMatrix {
    pub fn get(&self, source: usize, sink: usize) -> f64 {
        self.entries.get(source - 1, sink - 1)
    }
}

/// Min-plus DP for the cost matrix plus the complete set of minimizing
/// source-to-sink paths, padded to length N+1 with sink self loops.
pub fn min_cost_paths(
    g: &Graph,
    source: usize,
    sink: usize,
    steps: usize,
) -> Result<(CostMatrix, Vec<Vec<usize>>)> {
    let n = g.n();
    if source == 0 || source > n || sink == 0 || sink > n {
        return Err(Error::Validation(format!("source/sink must be in 1..{n}")));
    }
    if steps == 0 {
        return Err(Error::Validation("step count must be >= 1".into()));
    }
    // One-step costs with free self loops everywhere.
    let mut w = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            w.set(i, j, if i == j { 0.0 } else { f64::INFINITY });
        }
    }
    for (i, j, u) in g.edges() {
        let cur = w.get(i - 1, j - 1);
        w.set(i - 1, j - 1, cur.min(u));
    }
    // N-fold min-plus power.
    let mut c = w.clone();
    for _ in 1..steps {
        let mut next = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut best = f64::INFINITY;
                for k in 0..n {
                    let a = c.get(i, k);
                    let b = w.get(k, j);
                    if a.is_finite() && b.is_finite() {
                        best = best.min(a + b);
                    }
                }
                next.set(i, j, best);
            }
        }
        c = next;
    }
    let cm = CostMatrix {
        entries: c,
        horizon: steps,
    };
    let target = cm.get(source, sink);
    if !target.is_finite() {
        return Ok((cm, Vec::new()));
    }

    // Enumerate real-edge paths of length <= N achieving the minimum;
    // pad each with sink self loops and deduplicate.
    // best_to_sink[k][i]: cheapest real-edge route i -> sink in <= k steps.
    let mut best_to_sink = vec![vec![f64::INFINITY; n]; steps + 1];
    best_to_sink[0][sink - 1] = 0.0;
    for k in 1..=steps {
        let prev = best_to_sink[k - 1].clone();
        best_to_sink[k] = prev;
        for (i, j, u) in g.edges() {
            let via = u + best_to_sink[k - 1][j - 1];
            if via < best_to_sink[k][i - 1] {
                best_to_sink[k][i - 1] = via;
            }
        }
    }
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut stack = vec![(vec![source], 0.0)];
    while let Some((path, cost)) = stack.pop() {
        let cur = *path.last().unwrap();
        let used = path.len() - 1;
        if cur == sink && (cost - target).abs() <= 1e-12 {
            let mut padded = path.clone();
            padded.resize(steps + 1, sink);
            found.insert(padded);
        }
        if used == steps {
            continue;
        }
        for (i, j, u) in g.edges() {
            if i != cur {
                continue;
            }
            let next_cost = cost + u;
            let bound = best_to_sink[steps - used - 1][j - 1];
            if bound.is_finite() && next_cost + bound <= target + 1e-12 {
                let mut next_path = path.clone();
                next_path.push(j);
                stack.push((next_path, next_cost));
            }
        }
    }
    Ok((cm, found.into_iter().collect()))
}

/// Pairwise optimal transport coupling with dual potentials.
#[derive(Debug, Clone)]
pub struct OmtCoupling {
    pub q: Matrix,
    pub total_cost: f64,
    /// Dual potentials: alpha on sources, beta on sinks, with
    /// alpha_i + beta_j <= C_ij and equality where q_ij > 0.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Exact transportation LP by successive shortest paths on the bipartite
/// source/sink structure, with Dijkstra over Johnson-reduced costs.
pub fn omt_plan(c: &CostMatrix, nu0: &Distribution, nun: &Distribution) -> Result<OmtCoupling> {
    let n = c.entries.n();
    if nu0.len() != n || nun.len() != n {
        return Err(Error::Validation(
            "marginal length must match cost matrix".into(),
        ));
    }
    check_probability_sum(nu0, "nu0")?;
    check_probability_sum(nun, "nuN")?;

    let mut supply = nu0.weights().to_vec();
    let mut demand = nun.weights().to_vec();
    let mut q = Matrix::zeros(n);
    // Bipartite node layout: 0..n sources, n..2n sinks.
    let mut pot = vec![0.0_f64; 2 * n];
    const EPS: f64 = 1e-15;

    while supply.iter().sum::<f64>() > EPS {
        // Multi-source Dijkstra over the residual bipartite graph.
        let mut dist = vec![f64::INFINITY; 2 * n];
        let mut parent = vec![usize::MAX; 2 * n];
        let mut done = vec![false; 2 * n];
        for i in 0..n {
            if supply[i] > EPS {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..2 * n {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < n {
                // Forward edges source u -> sink j.
                for j in 0..n {
                    let cost = c.entries.get(u, j);
                    if cost.is_finite() {
                        let red = cost + pot[u] - pot[n + j];
                        let nd = dist[u] + red;
                        if nd < dist[n + j] - 1e-15 {
                            dist[n + j] = nd;
                            parent[n + j] = u;
                        }
                    }
                }
            } else {
                // Residual edges sink (u-n) -> source i where q_{i,u-n} > 0.
                let j = u - n;
                for i in 0..n {
                    if q.get(i, j) > EPS {
                        let red = -c.entries.get(i, j) + pot[u] - pot[i];
                        let nd = dist[u] + red;
                        if nd < dist[i] - 1e-15 {
                            dist[i] = nd;
                            parent[i] = u;
                        }
                    }
                }
            }
        }
        // Cheapest sink with unmet demand.
        let mut tgt = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..n {
            if demand[j] > EPS && dist[n + j] < best {
                best = dist[n + j];
                tgt = j;
            }
        }
        if tgt == usize::MAX {
            return Err(Error::Infeasible(
                "remaining supply cannot reach any unmet demand at finite cost".into(),
            ));
        }
        // Bottleneck along the augmenting path.
        let mut path = Vec::new();
        let mut v = n + tgt;
        while parent[v] != usize::MAX {
            path.push((parent[v], v));
            v = parent[v];
        }
        path.reverse();
        let root = v;
        let mut amount = supply[root].min(demand[tgt]);
        for &(a, b) in &path {
            if a < n {
                // forward edge: no capacity bound
                let _ = b;
            } else {
                amount = amount.min(q.get(b, a - n));
            }
        }
        for &(a, b) in &path {
            if a < n {
                let cur = q.get(a, b - n);
                q.set(a, b - n, cur + amount);
            } else {
                let cur = q.get(b, a - n);
                q.set(b, a - n, cur - amount);
            }
        }
        supply[root] -= amount;
        demand[tgt] -= amount;
        // Johnson potential update.
        let dmax = dist[n + tgt];
        for v in 0..2 * n {
            if dist[v].is_finite() {
                pot[v] += dist[v].min(dmax);
            } else {
                pot[v] += dmax;
            }
        }
    }
    let mut total_cost = 0.0;
    for i in 0..n {
        for j in 0..n {
            let f = q.get(i, j);
            if f > 0.0 {
                total_cost += f * c.entries.get(i, j);
            }
        }
    }
    let alpha: Vec<f64> = (0..n).map(|i| -pot[i]).collect();
    let beta: Vec<f64> = (0..n).map(|j| pot[n + j]).collect();
    Ok(OmtCoupling {
        q,
        total_cost,
        alpha,
        beta,
    })
}

fn check_probability_sum(d: &Distribution, name: &str) -> Result<()> {
    let s: f64 = d.weights().iter().sum();
    if (s - 1.0).abs() > 1e-10 {
        return Err(Error::Validation(format!("{name} sums to {s}, expected 1")));
    }
    Ok(())
}

/// Probability mass grouped by total path cost.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CostLevel {
    pub cost: f64,
    pub path_count: usize,
    pub min_prob: f64,
    pub max_prob: f64,
    pub total_mass: f64,
}

/// Comparison of a bridge ensemble against the min-cost path set and the
/// OMT coupling over the same problem.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TransportReport {
    pub cost_levels: Vec<CostLevel>,
    /// Probability is strictly decreasing across increasing cost levels.
    pub decreasing_in_cost: bool,
    /// Total bridge mass on the min-cost path set.
    pub min_cost_mass: f64,
    /// Distinct paths carrying bridge mass.
    pub bridge_path_count: usize,
    /// Distinct source/sink pairs the OMT coupling uses (one minimizing
    /// path each).
    pub omt_path_count: usize,
    /// exp of the bridge path-distribution entropy.
    pub effective_support: f64,
}

/// Cost-equality tolerance for grouping paths into levels.
const COST_TIE_TOL: f64 = 1e-12;

pub fn compare(
    bridge: &PathEnsemble,
    min_paths: &[Vec<usize>],
    coupling: &OmtCoupling,
) -> TransportReport {
    let mut order: Vec<usize> = (0..bridge.paths.len()).collect();
    order.sort_by(|&a, &b| bridge.costs[a].total_cmp(&bridge.costs[b]));
    let mut cost_levels: Vec<CostLevel> = Vec::new();
    for &k in &order {
        let cost = bridge.costs[k];
        let prob = bridge.probs[k];
        match cost_levels.last_mut() {
            Some(level) if (cost - level.cost).abs() <= COST_TIE_TOL => {
                level.path_count += 1;
                level.min_prob = level.min_prob.min(prob);
                level.max_prob = level.max_prob.max(prob);
                level.total_mass += prob;
            }
            _ => cost_levels.push(CostLevel {
                cost,
                path_count: 1,
                min_prob: prob,
                max_prob: prob,
                total_mass: prob,
            }),
        }
    }
    let decreasing_in_cost = cost_levels
        .windows(2)
        .all(|w| w[0].max_prob > w[1].max_prob || w[1].path_count == 0);
    let min_set: BTreeSet<&Vec<usize>> = min_paths.iter().collect();
    let min_cost_mass = bridge
        .paths
        .iter()
        .zip(&bridge.probs)
        .filter(|(p, _)| min_set.contains(p))
        .map(|(_, &pr)| pr)
        .sum();
    let bridge_path_count = bridge.probs.iter().filter(|&&p| p > 0.0).count();
    let n = coupling.q.n();
    let omt_path_count = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| coupling.q.get(i, j) > 1e-12)
        .count();
    TransportReport {
        cost_levels,
        decreasing_in_cost,
        min_cost_mass,
        bridge_path_count,
        omt_path_count,
        effective_support: bridge.effective_support(),
    }
}
