//! Report documents: JSON payloads (full double precision) and aligned
//! text tables (6 decimal places, ties to even) mirroring the flow-matrix
//! layout used throughout the library.

use serde::Serialize;

use crate::bridge::MarginalFlow;
use crate::matrix::Matrix;
use crate::transport::{OmtCoupling, PathEnsemble, TransportReport};

#[derive(Serialize)]
pub struct PerronReport {
    pub schema: &'static str,
    pub lambda: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub entropy_rate: f64,
}

#[derive(Serialize)]
pub struct WalkReport {
    pub schema: &'static str,
    pub lambda: f64,
    pub kernel: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
    pub entropy_rate: f64,
    pub energy_rate: f64,
}

#[derive(Serialize)]
pub struct BridgeReport {
    pub schema: &'static str,
    pub horizon: usize,
    pub iterations: usize,
    pub flow: Vec<Vec<f64>>,
    pub transitions: Vec<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
pub struct PathRow {
    pub path: Vec<usize>,
    pub probability: f64,
    pub cost: f64,
}

#[derive(Serialize)]
pub struct PlanReport {
    pub schema: &'static str,
    pub source: usize,
    pub sink: usize,
    pub horizon: usize,
    pub prior_mode: String,
    pub flow: Vec<Vec<f64>>,
    pub paths: Option<Vec<PathRow>>,
    pub comparison: Option<TransportReport>,
}

#[derive(Serialize)]
pub struct OmtReport {
    pub schema: &'static str,
    pub horizon: usize,
    pub cost_matrix: Vec<Vec<f64>>,
    pub coupling: Vec<Vec<f64>>,
    pub total_cost: f64,
    pub min_cost_paths: Vec<Vec<usize>>,
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub paths_checked: usize,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.n()).map(|i| m.row(i).to_vec()).collect()
}

/// Round to 6 decimals, ties to even, and render fixed width.
fn fmt_cell(x: f64) -> String {
    if x.is_infinite() {
        return format!("{:>10}", "inf");
    }
    let r = (x * 1e6).round_ties_even() / 1e6;
    // Avoid "-0.000000".
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:>10.6}")
}

pub fn table(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_cell(x)).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn flow_table(flow: &MarginalFlow) -> String {
    let mut out = String::from("mass distribution by time step (rows t = 0..N):\n");
    out.push_str(&table(&flow.rows));
    out
}

pub fn path_table(e: &PathEnsemble) -> String {
    let mut out = String::from("path                          probability       cost\n");
    for ((p, &prob), &cost) in e.paths.iter().zip(&e.probs).zip(&e.costs) {
        let label = p
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join("-");
        out.push_str(&format!(
            "{label:<28} {} {}\n",
            fmt_cell(prob),
            fmt_cell(cost)
        ));
    }
    out
}

pub fn coupling_table(c: &OmtCoupling) -> String {
    let mut out = String::from("coupling q (rows = sources, columns = sinks):\n");
    out.push_str(&table(&matrix_rows(&c.q)));
    out.push_str(&format!("total cost: {}\n", fmt_cell(c.total_cost)));
    out
}
