//! Robust transport plans over directed graphs.
//!
//! The library schedules mass transport between prescribed initial and
//! final node distributions by solving a discrete Schrodinger bridge:
//! the path measure closest in relative entropy to a prior, subject to
//! the marginal constraints. Priors built from the adjacency matrix
//! spread mass uniformly over all equal-length routes (the Ruelle-Bowen
//! walk); weighted and teleported priors trade that spreading against
//! edge costs and missing connectivity. The resulting plans put maximum
//! and equal probability on minimum-cost paths, which makes them a
//! robust alternative to classical optimal mass transport couplings.

#![forbid(unsafe_code)]
// `!(x > 0.0)` guards are deliberate: they reject NaN along with
// nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod report;
pub mod spectral;
pub mod transport;

pub use bridge::{
    marginal_flow, path_probability, relative_entropy, solve_bridge, transition_schedule,
    BridgeProblem, BridgeSolution, MarginalFlow, PotentialSchedule, TransitionSchedule,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use error::{Error, Result};
pub use graph::{
    adjacency_kernel, feasibility, is_primitive, parse_graph, teleport_kernel, weighted_kernel,
    Graph, ValueMode,
};
pub use matrix::{Distribution, Matrix, NonnegativeKernel};
pub use spectral::{
    entropy_energy_rates, hilbert_distance, homogeneous_bridge, perron, rb_walk, PerronData,
    StationaryWalk,
};
pub use transport::{
    compare, ensemble_from_schedule, min_cost_paths, omt_plan, oracle_bridge, robust_plan,
    virtual_edge_mass, CostMatrix, OmtCoupling, PathEnsemble, PriorMode, RobustPlan,
    TransportReport,
};
