//! Perron-Frobenius data, the Hilbert projective metric, and the
//! stationary walks built from them (Ruelle-Bowen walk, time-homogeneous
//! bridge) together with entropy/energy rate diagnostics.

use crate::error::{Error, Result};
use crate::graph::is_primitive;
use crate::matrix::{Distribution, Matrix, NonnegativeKernel};

/// Spectral radius with left/right positive eigenvectors.
///
/// Normalization is deterministic: `right` has max component 1 before the
/// joint rescale that makes the inner product of `left` and `right` equal 1.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub lambda: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

/// Hilbert projective distance between strictly positive vectors:
/// d_H(x, y) = log(max_i x_i/y_i / min_i x_i/y_i).
pub fn hilbert_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Domain("empty vectors".into()));
    }
    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_ratio = f64::INFINITY;
    for (&xi, &yi) in x.iter().zip(y) {
        if !(xi > 0.0) || !(yi > 0.0) {
            return Err(Error::Domain(format!(
                "Hilbert distance needs strictly positive components, got {xi} / {yi}"
            )));
        }
        let r = xi / yi;
        max_ratio = max_ratio.max(r);
        min_ratio = min_ratio.min(r);
    }
    Ok((max_ratio / min_ratio).ln())
}

const PERRON_MAX_ITER: usize = 100_000;

fn power_iterate(step: impl Fn(&[f64]) -> Vec<f64>, n: usize, tol: f64) -> Result<Vec<f64>> {
    let mut v = vec![1.0; n];
    let mut last_gap = f64::INFINITY;
    for _ in 0..PERRON_MAX_ITER {
        let mut next = step(&v);
        let max = next.iter().cloned().fold(0.0_f64, f64::max);
        if !(max > 0.0) {
            return Err(Error::Domain(
                "power iteration produced a nonpositive iterate".into(),
            ));
        }
        for x in &mut next {
            *x /= max;
        }
        last_gap = hilbert_distance(&next, &v)?;
        v = next;
        if last_gap < tol {
            return Ok(v);
        }
    }
    Err(Error::Convergence {
        iterations: PERRON_MAX_ITER,
        gap: last_gap,
    })
}

/// Perron eigendata of a primitive nonnegative kernel by power iteration.
///
/// The iteration starts from the all-ones vector and stops when the
/// Hilbert distance between successive iterates drops below `tol`
/// (the metric is scale free, so no other normalization enters the test).
pub fn perron(m: &NonnegativeKernel, tol: f64) -> Result<PerronData> {
    let (primitive, _) = is_primitive(m);
    if !primitive {
        return Err(Error::Domain(
            "kernel is not primitive (reducible or periodic support)".into(),
        ));
    }
    let n = m.n();
    let mut right = power_iterate(|v| m.matrix().matvec(v), n, tol)?;
    let mut left = power_iterate(|u| m.matrix().tr_matvec(u), n, tol)?;

    // Rayleigh-style estimate <u, M v> / <u, v>.
    let mv = m.matrix().matvec(&right);
    let num: f64 = left.iter().zip(&mv).map(|(u, x)| u * x).sum();
    let den: f64 = left.iter().zip(&right).map(|(u, v)| u * v).sum();
    let lambda = num / den;

    let max_r = right.iter().cloned().fold(0.0_f64, f64::max);
    for v in &mut right {
        *v /= max_r;
    }
    let ip: f64 = left.iter().zip(&right).map(|(u, v)| u * v).sum();
    for u in &mut left {
        *u /= ip;
    }
    Ok(PerronData {
        lambda,
        right,
        left,
    })
}

/// Row-stochastic kernel together with its stationary distribution and
/// the spectral radius of the underlying nonnegative kernel.
#[derive(Debug, Clone)]
pub struct StationaryWalk {
    pub kernel: Matrix,
    pub stationary: Distribution,
    pub lambda: f64,
}

/// The walk r_ij = m_ij v_j / (lambda v_i) with stationary measure u_i v_i.
///
/// For a 0/1 adjacency kernel this is the Ruelle-Bowen walk; for a weighted
/// kernel it is the minimum free-energy walk.
pub fn rb_walk(m: &NonnegativeKernel) -> Result<StationaryWalk> {
    let pd = perron(m, 1e-14)?;
    let n = m.n();
    let mut kernel = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            kernel.set(i, j, m.get(i, j) * pd.right[j] / (pd.lambda * pd.right[i]));
        }
    }
    let stationary = Distribution::new((0..n).map(|i| pd.left[i] * pd.right[i]).collect())?;
    Ok(StationaryWalk {
        kernel,
        stationary,
        lambda: pd.lambda,
    })
}

/// Time-invariant bridge kernel diag(phi)^{-1} M diag(phi) / lambda with
/// invariant measure phi .* phihat. Coincides with [`rb_walk`] by
/// construction; kept as a named alias for the equal-marginal semantics.
pub fn homogeneous_bridge(m: &NonnegativeKernel) -> Result<StationaryWalk> {
    rb_walk(m)
}

/// Entropy rate S and mean energy rate Ubar of a stationary walk.
///
/// S = -sum_i nu_i sum_j k_ij log k_ij, Ubar = sum_i nu_i sum_j k_ij U_ij.
/// For walks built from a kernel with costs U = -log m, S - Ubar = log lambda.
pub fn entropy_energy_rates(w: &StationaryWalk, costs: &Matrix) -> Result<(f64, f64)> {
    let n = w.kernel.n();
    if costs.n() != n {
        return Err(Error::Domain("cost matrix size mismatch".into()));
    }
    let mut entropy = 0.0;
    let mut energy = 0.0;
    for i in 0..n {
        let nu = w.stationary.weights()[i];
        for j in 0..n {
            let k = w.kernel.get(i, j);
            if k > 0.0 {
                let u = costs.get(i, j);
                if !u.is_finite() {
                    return Err(Error::Domain(format!(
                        "cost U({},{}) is not finite on the walk's support",
                        i + 1,
                        j + 1
                    )));
                }
                entropy -= nu * k * k.ln();
                energy += nu * k * u;
            }
        }
    }
    Ok((entropy, energy))
}
