//! Discrete Schrodinger bridge solver.
//!
//! Given a nonnegative prior kernel M, a horizon N and marginal
//! distributions nu0, nuN, find the potentials phi, phihat satisfying
//!
//!   phi(t)    = M phi(t+1)
//!   phihat(t+1) = M^T phihat(t)
//!   phi(0) .* phihat(0) = nu0
//!   phi(N) .* phihat(N) = nuN
//!
//! by iterating the composition map (forward sweep, boundary division at N,
//! backward sweep, boundary division at 0), which is a strict contraction in
//! the Hilbert projective metric. The optimal time-varying transitions are
//! pi_ij(t) = m_ij phi(t+1,j) / phi(t,i) with the 0/0 = 0 convention.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::{Distribution, Matrix, NonnegativeKernel};
use crate::spectral::hilbert_distance;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// A bridge instance: prior kernel, horizon and the two marginals.
///
/// `mu0` is the strictly positive initial weighting of the prior path
/// measure. It does not enter the potential iteration (it is absorbed into
/// phihat(0)) but is kept for relative-entropy evaluations against the prior.
#[derive(Debug, Clone)]
pub struct BridgeProblem {
    pub prior: NonnegativeKernel,
    pub horizon: usize,
    pub nu0: Distribution,
    pub nun: Distribution,
    pub mu0: Distribution,
}

impl BridgeProblem {
    pub fn new(
        prior: NonnegativeKernel,
        horizon: usize,
        nu0: Distribution,
        nun: Distribution,
        mu0: Option<Distribution>,
    ) -> Result<Self> {
        let n = prior.n();
        if horizon == 0 {
            return Err(Error::Validation("horizon must be >= 1".into()));
        }
        if nu0.len() != n || nun.len() != n {
            return Err(Error::Validation(
                "marginal length must equal node count".into(),
            ));
        }
        check_probability(&nu0, "nu0")?;
        check_probability(&nun, "nuN")?;
        let mu0 = mu0.unwrap_or_else(|| Distribution::uniform(n));
        if mu0.len() != n || mu0.weights().iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Validation(
                "mu0 must be strictly positive on every state".into(),
            ));
        }
        let p = BridgeProblem {
            prior,
            horizon,
            nu0,
            nun,
            mu0,
        };
        p.check_support()?;
        Ok(p)
    }

    /// Support compatibility via boolean reachability over exactly N steps:
    /// every source state must reach some sink state and vice versa.
    fn check_support(&self) -> Result<()> {
        let reach = self.prior.matrix().support().power(self.horizon);
        let s0 = self.nu0.support();
        let sn = self.nun.support();
        for &i in &s0 {
            if !sn.iter().any(|&j| reach.get(i, j)) {
                return Err(Error::Infeasible(format!(
                    "state {} carries initial mass but reaches no final-support state in {} steps",
                    i + 1,
                    self.horizon
                )));
            }
        }
        for &j in &sn {
            if !s0.iter().any(|&i| reach.get(i, j)) {
                return Err(Error::Infeasible(format!(
                    "state {} carries final mass but is unreachable from the initial support in {} steps",
                    j + 1,
                    self.horizon
                )));
            }
        }
        Ok(())
    }
}

fn check_probability(d: &Distribution, name: &str) -> Result<()> {
    let s: f64 = d.weights().iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!("{name} sums to {s}, expected 1")));
    }
    Ok(())
}

/// Potentials phi(t,.), phihat(t,.) for t in 0..=N, stored one row per time.
#[derive(Debug, Clone)]
pub struct PotentialSchedule {
    pub phi: Vec<Vec<f64>>,
    pub phihat: Vec<Vec<f64>>,
}

/// Factored bridge measure: initial marginal plus one transition matrix
/// per step. Rows of unreachable states are all zero (0/0 = 0 convention).
#[derive(Debug, Clone)]
pub struct TransitionSchedule {
    pub nu0: Distribution,
    pub steps: Vec<Matrix>,
}

impl TransitionSchedule {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn n(&self) -> usize {
        self.nu0.len()
    }
}

/// One-time marginals nu_t, one row per time step.
#[derive(Debug, Clone)]
pub struct MarginalFlow {
    pub rows: Vec<Vec<f64>>,
}

/// Solver output: the potential schedule plus the Hilbert-gap history of
/// the fixed-point iteration.
#[derive(Debug, Clone)]
pub struct BridgeSolution {
    pub potentials: PotentialSchedule,
    pub iterations: usize,
    pub gap_history: Vec<f64>,
}

/// Restrict a vector to a support index set.
fn restrict(v: &[f64], support: &[usize]) -> Vec<f64> {
    support.iter().map(|&i| v[i]).collect()
}

/// Solve the Schrodinger system for `p` to Hilbert-gap tolerance `tol`.
pub fn solve_bridge(p: &BridgeProblem, tol: f64, max_iter: usize) -> Result<BridgeSolution> {
    let n = p.prior.n();
    let horizon = p.horizon;
    let m = p.prior.matrix();
    let s0 = p.nu0.support();
    let sn = p.nun.support();

    // Deterministic, feasible start: indicator of supp(nu0).
    let mut phihat0 = vec![0.0; n];
    for &i in &s0 {
        phihat0[i] = 1.0;
    }

    let mut gap_history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        // Forward sweep phihat(t+1) = M^T phihat(t), keeping only the final slice.
        let mut phihat_n = phihat0.clone();
        for _ in 0..horizon {
            phihat_n = m.tr_matvec(&phihat_n);
        }
        // Guard against under/overflow of lambda^N.
        let scale = phihat_n.iter().cloned().fold(0.0_f64, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Infeasible(
                "forward propagation annihilated the potential".into(),
            ));
        }
        // Boundary division at N, then backward sweep.
        let mut phi = vec![0.0; n];
        for &j in &sn {
            let h = phihat_n[j] / scale;
            if !(h > 0.0) {
                return Err(Error::Infeasible(format!(
                    "final-support state {} is unreachable under the prior",
                    j + 1
                )));
            }
            phi[j] = p.nun.weights()[j] / h;
        }
        for _ in 0..horizon {
            phi = m.matvec(&phi);
        }
        // Boundary division at 0.
        let mut next = vec![0.0; n];
        for &i in &s0 {
            if !(phi[i] > 0.0) {
                return Err(Error::Infeasible(format!(
                    "initial-support state {} cannot reach the final support",
                    i + 1
                )));
            }
            next[i] = p.nu0.weights()[i] / phi[i];
        }
        let gap = hilbert_distance(&restrict(&next, &s0), &restrict(&phihat0, &s0))?;
        gap_history.push(gap);
        // Rescale for the next round; the Hilbert gap is scale free.
        let mx = next.iter().cloned().fold(0.0_f64, f64::max);
        for x in &mut next {
            *x /= mx;
        }
        phihat0 = next;
        if gap < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations,
            gap: gap_history.last().copied().unwrap_or(f64::INFINITY),
        });
    }

    // Final pass: build the full schedules from the converged phihat(0).
    let mut phihat = Vec::with_capacity(horizon + 1);
    phihat.push(phihat0.clone());
    for t in 0..horizon {
        phihat.push(m.tr_matvec(&phihat[t]));
    }
    let scale = phihat[horizon].iter().cloned().fold(0.0_f64, f64::max);
    for row in &mut phihat {
        for x in row.iter_mut() {
            *x /= scale;
        }
    }
    let mut phi = vec![vec![0.0; n]; horizon + 1];
    for &j in &sn {
        phi[horizon][j] = p.nun.weights()[j] / phihat[horizon][j];
    }
    for t in (0..horizon).rev() {
        phi[t] = m.matvec(&phi[t + 1]);
    }
    // Joint rescale keeps both recursions and both boundary products intact.
    let d = s0.iter().map(|&i| phi[0][i]).fold(0.0_f64, f64::max);
    for row in &mut phi {
        for x in row.iter_mut() {
            *x /= d;
        }
    }
    for row in &mut phihat {
        for x in row.iter_mut() {
            *x *= d;
        }
    }
    Ok(BridgeSolution {
        potentials: PotentialSchedule { phi, phihat },
        iterations,
        gap_history,
    })
}

/// Transitions pi_ij(t) = m_ij phi(t+1,j) / phi(t,i), with 0/0 = 0.
pub fn transition_schedule(s: &PotentialSchedule, m: &NonnegativeKernel) -> TransitionSchedule {
    let n = m.n();
    let horizon = s.phi.len() - 1;
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mut pi = Matrix::zeros(n);
        for i in 0..n {
            let denom = s.phi[t][i];
            if denom > 0.0 {
                for j in 0..n {
                    let mij = m.get(i, j);
                    if mij > 0.0 {
                        pi.set(i, j, mij * s.phi[t + 1][j] / denom);
                    }
                }
            }
        }
        steps.push(pi);
    }
    let nu0 = Distribution::new((0..n).map(|i| s.phi[0][i] * s.phihat[0][i]).collect())
        .expect("boundary product of nonnegative potentials");
    TransitionSchedule { nu0, steps }
}

/// Propagate nu_{t+1} = Pi(t)^T nu_t and collect all rows.
pub fn marginal_flow(ts: &TransitionSchedule) -> MarginalFlow {
    let mut rows = Vec::with_capacity(ts.horizon() + 1);
    rows.push(ts.nu0.weights().to_vec());
    for pi in &ts.steps {
        let next = pi.tr_matvec(rows.last().expect("nonempty"));
        rows.push(next);
    }
    MarginalFlow { rows }
}

/// Probability of a 1-based node sequence of length N+1 under the schedule.
pub fn path_probability(ts: &TransitionSchedule, path: &[usize]) -> Result<f64> {
    let n = ts.n();
    if path.len() != ts.horizon() + 1 {
        return Err(Error::Domain(format!(
            "path length {} does not match horizon {} (+1)",
            path.len(),
            ts.horizon()
        )));
    }
    for &x in path {
        if x == 0 || x > n {
            return Err(Error::Domain(format!("node {x} out of range 1..{n}")));
        }
    }
    let mut p = ts.nu0.weights()[path[0] - 1];
    for (t, w) in path.windows(2).enumerate() {
        p *= ts.steps[t].get(w[0] - 1, w[1] - 1);
        if p == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(p)
}

/// Relative entropy sum p log(p/q) over path maps, with 0 log 0 = 0 and
/// +infinity when p's support escapes q's.
pub fn relative_entropy(
    p_paths: &BTreeMap<Vec<usize>, f64>,
    q_paths: &BTreeMap<Vec<usize>, f64>,
) -> f64 {
    let mut d = 0.0;
    for (path, &p) in p_paths {
        if p == 0.0 {
            continue;
        }
        match q_paths.get(path) {
            Some(&q) if q > 0.0 => d += p * (p / q).ln(),
            _ => return f64::INFINITY,
        }
    }
    d
}
