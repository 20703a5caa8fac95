//! Graph ingestion and kernel construction.
//!
//! Node labels are 1-based in all external formats and reports; indices
//! are 0-based internally.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, NonnegativeKernel};

/// Interpretation of the per-edge value in input documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueMode {
    /// Value is an energy U_ij >= 0; kernel entry is exp(-U_ij).
    Energy,
    /// Value is a raw multiplicative weight b_ij > 0 (the default).
    #[default]
    Weight,
}

/// Directed graph with optional per-edge energies.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    /// Edge -> energy U_ij. Edges without a stated value carry U = 0.
    /// Keys are 1-based (i, j) pairs.
    edges: BTreeMap<(usize, usize), f64>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("node count must be positive".into()));
        }
        let mut map = BTreeMap::new();
        for (i, j, u) in edges {
            if i == 0 || i > n || j == 0 || j > n {
                return Err(Error::Validation(format!(
                    "edge ({i},{j}) endpoint out of range 1..{n}"
                )));
            }
            if !(u >= 0.0) {
                return Err(Error::Validation(format!(
                    "edge ({i},{j}) has negative or NaN energy {u}"
                )));
            }
            if map.insert((i, j), u).is_some() {
                return Err(Error::Validation(format!("duplicate edge ({i},{j})")));
            }
        }
        Ok(Graph { n, edges: map })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains_key(&(i, j))
    }

    /// Iterate edges as 1-based (i, j, energy) triples in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &u)| (i, j, u))
    }

    /// Add a zero-cost self loop at `sink` (1-based) if absent.
    pub fn ensure_sink_loop(&self, sink: usize) -> Result<Graph> {
        if sink == 0 || sink > self.n {
            return Err(Error::Validation(format!(
                "sink {} out of range 1..{}",
                sink, self.n
            )));
        }
        let mut g = self.clone();
        g.edges.entry((sink, sink)).or_insert(0.0);
        Ok(g)
    }
}

#[derive(Deserialize)]
struct JsonGraph {
    n: usize,
    #[serde(default)]
    mode: Option<String>,
    edges: Vec<JsonEdge>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonEdge {
    Bare(usize, usize),
    Valued(usize, usize, f64),
}

/// Parse a graph document: the edge-list text grammar, or the JSON
/// alternative when the document starts with `{`.
pub fn parse_graph(text: &str) -> Result<Graph> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_edge_list(text)
    }
}

fn value_to_energy(mode: ValueMode, value: f64, i: usize, j: usize) -> Result<f64> {
    match mode {
        ValueMode::Energy => {
            if !(value >= 0.0) {
                Err(Error::Validation(format!(
                    "edge ({i},{j}) energy {value} must be >= 0"
                )))
            } else {
                Ok(value)
            }
        }
        ValueMode::Weight => {
            if !(value > 0.0) {
                Err(Error::Validation(format!(
                    "edge ({i},{j}) weight {value} must be > 0"
                )))
            } else {
                Ok(-value.ln())
            }
        }
    }
}

fn parse_json(text: &str) -> Result<Graph> {
    let doc: JsonGraph = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let mode = match doc.mode.as_deref() {
        None | Some("weight") => ValueMode::Weight,
        Some("energy") => ValueMode::Energy,
        Some(other) => {
            return Err(Error::Validation(format!(
                "unknown mode {other:?}, expected \"energy\" or \"weight\""
            )))
        }
    };
    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in doc.edges {
        match e {
            JsonEdge::Bare(i, j) => edges.push((i, j, 0.0)),
            JsonEdge::Valued(i, j, v) => edges.push((i, j, value_to_energy(mode, v, i, j)?)),
        }
    }
    Graph::new(doc.n, edges)
}

fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut mode = ValueMode::default();
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("n=") {
            n = Some(rest.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad node count {rest:?}"),
            })?);
            continue;
        }
        if let Some(rest) = line.strip_prefix("mode=") {
            mode = match rest.trim() {
                "energy" => ValueMode::Energy,
                "weight" => ValueMode::Weight,
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unknown mode {other:?}"),
                    })
                }
            };
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `<i> <j>` or `<i> <j> <value>`, got {line:?}"),
            });
        }
        let i: usize = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad node label {:?}", fields[0]),
        })?;
        let j: usize = fields[1].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad node label {:?}", fields[1]),
        })?;
        let u = if fields.len() == 3 {
            let v: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad edge value {:?}", fields[2]),
            })?;
            value_to_energy(mode, v, i, j)?
        } else {
            0.0
        };
        edges.push((i, j, u));
    }
    let n = n.ok_or(Error::Parse {
        line: 0,
        msg: "missing `n=<int>` header".into(),
    })?;
    Graph::new(n, edges)
}

/// 0/1 adjacency kernel: m_ij = 1 iff (i,j) is an edge.
pub fn adjacency_kernel(g: &Graph) -> NonnegativeKernel {
    let mut m = Matrix::zeros(g.n);
    for (i, j, _) in g.edges() {
        m.set(i - 1, j - 1, 1.0);
    }
    NonnegativeKernel::new(m).expect("0/1 matrix is nonnegative")
}

/// Weighted kernel: m_ij = exp(-U_ij) on edges, 0 elsewhere.
pub fn weighted_kernel(g: &Graph) -> NonnegativeKernel {
    let mut m = Matrix::zeros(g.n);
    for (i, j, u) in g.edges() {
        m.set(i - 1, j - 1, (-u).exp());
    }
    NonnegativeKernel::new(m).expect("exp(-U) is nonnegative")
}

/// Teleported kernel: exp(-U_ij) on edges, exp(-U0) on every non-edge
/// (including absent self loops). The result is strictly positive.
pub fn teleport_kernel(g: &Graph, u0: f64) -> Result<NonnegativeKernel> {
    if !(u0 > 0.0) {
        return Err(Error::Validation(format!(
            "teleport energy U0 = {u0} must be > 0"
        )));
    }
    let virt = (-u0).exp();
    let mut m = Matrix::zeros(g.n);
    for i in 0..g.n {
        for j in 0..g.n {
            m.set(i, j, virt);
        }
    }
    for (i, j, u) in g.edges() {
        m.set(i - 1, j - 1, (-u).exp());
    }
    Ok(NonnegativeKernel::new(m).expect("exponentials are nonnegative"))
}

/// The (source, sink) entry of M^N together with its positivity.
/// For 0/1 kernels this is the exact count of length-N paths.
pub fn feasibility(
    m: &NonnegativeKernel,
    source: usize,
    sink: usize,
    steps: usize,
) -> Result<(bool, f64)> {
    let n = m.n();
    if source == 0 || source > n || sink == 0 || sink > n {
        return Err(Error::Validation(format!("source/sink must be in 1..{n}")));
    }
    if steps == 0 {
        return Err(Error::Validation("step count must be >= 1".into()));
    }
    // e_source^T M^N, read off the sink column.
    let mut row = vec![0.0; n];
    row[source - 1] = 1.0;
    for _ in 0..steps {
        row = m.matrix().tr_matvec(&row);
    }
    let count = row[sink - 1];
    Ok((count > 0.0, count))
}

/// Primitivity check via boolean powers of the support pattern, up to
/// the Wielandt bound n^2 - 2n + 2. Returns the smallest exponent k with
/// all of M^k positive, if one exists.
pub fn is_primitive(m: &NonnegativeKernel) -> (bool, Option<usize>) {
    let n = m.n();
    let support = m.matrix().support();
    let bound = n * n - 2 * n + 2;
    let mut acc = support.clone();
    for k in 1..=bound.max(1) {
        if acc.all_true() {
            return (true, Some(k));
        }
        acc = acc.matmul(&support);
    }
    (false, None)
}
