//! Shared fixtures for the integration suites: the 9-node example graphs
//! and seeded random-instance generators.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netbridge::graph::{is_primitive, parse_graph, weighted_kernel, Graph};
use netbridge::matrix::{Distribution, Matrix, NonnegativeKernel};

pub fn fig1() -> Graph {
    parse_graph(include_str!("../data/fig1.txt")).unwrap()
}

pub fn fig1_weighted() -> Graph {
    parse_graph(include_str!("../data/fig1w.txt")).unwrap()
}

pub fn fig1_weighted4() -> Graph {
    parse_graph(include_str!("../data/fig1w4.txt")).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random primitive weighted digraph: a directed Hamiltonian cycle for
/// strong connectivity, a self loop at node n for aperiodicity, extra
/// random edges, and multiplicative weights in (0, 1].
pub fn random_primitive_graph(rng: &mut ChaCha8Rng, n: usize, extra_density: f64) -> Graph {
    loop {
        let mut edges = Vec::new();
        for i in 1..=n {
            let j = if i == n { 1 } else { i + 1 };
            edges.push((i, j, -rng.gen_range(0.2..1.0_f64).ln()));
        }
        edges.push((n, n, -rng.gen_range(0.5..1.0_f64).ln()));
        for i in 1..=n {
            for j in 1..=n {
                let cyclic = j == if i == n { 1 } else { i + 1 };
                if !cyclic && !(i == n && j == n) && rng.gen_bool(extra_density) {
                    edges.push((i, j, -rng.gen_range(0.2..1.0_f64).ln()));
                }
            }
        }
        let g = Graph::new(n, edges).unwrap();
        if is_primitive(&weighted_kernel(&g)).0 {
            return g;
        }
    }
}

/// Random strictly positive kernel with entries in [lo, hi].
pub fn random_positive_kernel(
    rng: &mut ChaCha8Rng,
    n: usize,
    lo: f64,
    hi: f64,
) -> NonnegativeKernel {
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, rng.gen_range(lo..hi));
        }
    }
    NonnegativeKernel::new(m).unwrap()
}

/// Random probability distribution with strictly positive entries.
pub fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Distribution {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    Distribution::probability(w.iter().map(|x| x / s).collect()).unwrap()
}

/// Random exact coupling of the two marginals by greedy filling in a
/// shuffled cell order.
pub fn random_coupling(
    rng: &mut ChaCha8Rng,
    nu0: &Distribution,
    nun: &Distribution,
    allowed: impl Fn(usize, usize) -> bool,
) -> Option<Matrix> {
    let n = nu0.len();
    let mut cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| allowed(i, j))
        .collect();
    // Fisher-Yates shuffle.
    for k in (1..cells.len()).rev() {
        let r = rng.gen_range(0..=k);
        cells.swap(k, r);
    }
    let mut supply = nu0.weights().to_vec();
    let mut demand = nun.weights().to_vec();
    let mut q = Matrix::zeros(n);
    for &(i, j) in &cells {
        let amt = supply[i].min(demand[j]);
        if amt > 0.0 {
            q.set(i, j, amt);
            supply[i] -= amt;
            demand[j] -= amt;
        }
    }
    if supply.iter().sum::<f64>() > 1e-12 {
        None
    } else {
        Some(q)
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
