// `!(x > 0.0)` guards are deliberate: they reject NaN along with
// nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use netbridge::bridge::{
    marginal_flow, solve_bridge, transition_schedule, BridgeProblem, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use netbridge::error::Error;
use netbridge::graph::parse_graph;
use netbridge::matrix::Distribution;
use netbridge::report::{
    self, matrix_rows, BridgeReport, OmtReport, PathRow, PerronReport, PlanReport, VerifyReport,
    WalkReport,
};
use netbridge::spectral::{entropy_energy_rates, perron, rb_walk};
use netbridge::transport::{
    compare, min_cost_paths, omt_plan, oracle_bridge, robust_plan, PriorMode,
};

#[derive(Parser)]
#[command(
    name = "netbridge",
    version,
    about = "Robust transport plans on directed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorModeArg {
    Adjacency,
    Weighted,
    Teleport,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Args)]
struct CommonOpts {
    /// Graph document (edge list or JSON).
    #[arg(long)]
    graph: PathBuf,
    /// Prior kernel construction.
    #[arg(long, value_enum, default_value = "adjacency")]
    prior: PriorModeArg,
    /// Virtual-edge energy U0 for the teleport prior.
    #[arg(long, default_value_t = 8.0)]
    teleport_energy: f64,
    /// Hilbert-gap convergence tolerance (env: NETBRIDGE_TOL).
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap for the bridge solver (env: NETBRIDGE_MAX_ITER).
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl CommonOpts {
    fn mode(&self) -> PriorMode {
        match self.prior {
            PriorModeArg::Adjacency => PriorMode::Adjacency,
            PriorModeArg::Weighted => PriorMode::Weighted,
            PriorModeArg::Teleport => PriorMode::Teleport(self.teleport_energy),
        }
    }

    fn tol(&self) -> f64 {
        resolve(self.tol, "NETBRIDGE_TOL", DEFAULT_TOL)
    }

    fn max_iter(&self) -> usize {
        resolve(self.max_iter, "NETBRIDGE_MAX_ITER", DEFAULT_MAX_ITER)
    }
}

fn resolve<T: std::str::FromStr + Copy>(flag: Option<T>, env: &str, default: T) -> T {
    if let Some(v) = flag {
        return v;
    }
    if let Ok(s) = std::env::var(env) {
        if let Ok(v) = s.parse() {
            return v;
        }
    }
    default
}

#[derive(Args)]
struct MarginalOpts {
    /// File with one nu0 weight per line (normalized to sum 1).
    #[arg(long, conflicts_with = "delta0")]
    nu0: Option<PathBuf>,
    /// Shorthand: nu0 is a delta at this node.
    #[arg(long)]
    delta0: Option<usize>,
    /// File with one nuN weight per line (normalized to sum 1).
    #[arg(long, conflicts_with = "deltan")]
    nun: Option<PathBuf>,
    /// Shorthand: nuN is a delta at this node.
    #[arg(long)]
    deltan: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral radius, positive eigenvectors, and entropy rate.
    Perron {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Maximum entropy rate walk: kernel, stationary measure, rates.
    Rb {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Solve a bridge for arbitrary marginals.
    Bridge {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        marginals: MarginalOpts,
    },
    /// Robust source-to-sink plan with flow matrix and path table.
    Plan {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        source: usize,
        #[arg(long)]
        sink: usize,
        #[arg(long)]
        steps: usize,
        /// Do not add the zero-cost sink self loop before solving.
        #[arg(long)]
        no_sink_loop: bool,
    },
    /// Min-cost path matrix and optimal mass transport coupling.
    Omt {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        source: usize,
        #[arg(long)]
        sink: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        no_sink_loop: bool,
    },
    /// Cross-check the solved plan against the enumeration oracle.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        source: usize,
        #[arg(long)]
        sink: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        no_sink_loop: bool,
        /// Maximum tolerated per-path probability discrepancy.
        #[arg(long, default_value_t = 1e-9)]
        check_tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Infeasible(_) => ExitCode::from(2),
                Error::Convergence { .. } => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_graph(common: &CommonOpts) -> netbridge::Result<netbridge::Graph> {
    let text = fs::read_to_string(&common.graph)?;
    parse_graph(&text)
}

fn load_marginal(
    n: usize,
    file: &Option<PathBuf>,
    delta: Option<usize>,
    name: &str,
) -> netbridge::Result<Distribution> {
    match (file, delta) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)?;
            let mut w = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                w.push(line.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad weight {line:?}"),
                })?);
            }
            if w.len() != n {
                return Err(Error::Validation(format!(
                    "{name}: expected {n} weights, got {}",
                    w.len()
                )));
            }
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(Error::Validation(format!("{name}: weights sum to {total}")));
            }
            Distribution::probability(w.iter().map(|x| x / total).collect())
        }
        (None, Some(node)) => Distribution::delta(n, node),
        _ => Err(Error::Validation(format!(
            "{name}: provide exactly one of a marginal file or a --delta shorthand"
        ))),
    }
}

fn emit(common: &CommonOpts, text: String, json: String) -> netbridge::Result<ExitCode> {
    let doc = match common.format {
        OutputFormat::Text => text,
        OutputFormat::Json => json,
    };
    match &common.output {
        Some(path) => fs::write(path, doc)?,
        None => print!("{doc}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cmd: Command) -> netbridge::Result<ExitCode> {
    match cmd {
        Command::Perron { common } => {
            let g = load_graph(&common)?;
            let kernel = common.mode().kernel(&g)?;
            let pd = perron(&kernel, 1e-14)?;
            let rep = PerronReport {
                schema: "netbridge/perron-report/v1",
                lambda: pd.lambda,
                right: pd.right.clone(),
                left: pd.left.clone(),
                entropy_rate: pd.lambda.ln(),
            };
            let text = format!(
                "lambda: {:.12}\nentropy rate log(lambda): {:.12}\nright eigenvector v: {:?}\nleft eigenvector u: {:?}\n",
                pd.lambda,
                pd.lambda.ln(),
                pd.right,
                pd.left
            );
            emit(&common, text, to_json(&rep))
        }
        Command::Rb { common } => {
            let g = load_graph(&common)?;
            let kernel = common.mode().kernel(&g)?;
            let walk = rb_walk(&kernel)?;
            let (s, ubar) = entropy_energy_rates(&walk, &kernel.costs())?;
            let rep = WalkReport {
                schema: "netbridge/walk-report/v1",
                lambda: walk.lambda,
                kernel: matrix_rows(&walk.kernel),
                stationary: walk.stationary.weights().to_vec(),
                entropy_rate: s,
                energy_rate: ubar,
            };
            let text = format!(
                "lambda: {:.12}\nentropy rate S: {:.12}\nenergy rate Ubar: {:.12}\ntransition kernel:\n{}stationary measure:\n{}",
                walk.lambda,
                s,
                ubar,
                report::table(&matrix_rows(&walk.kernel)),
                report::table(&[walk.stationary.weights().to_vec()])
            );
            emit(&common, text, to_json(&rep))
        }
        Command::Bridge {
            common,
            steps,
            marginals,
        } => {
            let g = load_graph(&common)?;
            let kernel = common.mode().kernel(&g)?;
            let n = g.n();
            let nu0 = load_marginal(n, &marginals.nu0, marginals.delta0, "nu0")?;
            let nun = load_marginal(n, &marginals.nun, marginals.deltan, "nuN")?;
            let problem = BridgeProblem::new(kernel.clone(), steps, nu0, nun, None)?;
            let sol = solve_bridge(&problem, common.tol(), common.max_iter())?;
            let ts = transition_schedule(&sol.potentials, &kernel);
            let flow = marginal_flow(&ts);
            let rep = BridgeReport {
                schema: "netbridge/bridge-report/v1",
                horizon: steps,
                iterations: sol.iterations,
                flow: flow.rows.clone(),
                transitions: ts.steps.iter().map(matrix_rows).collect(),
            };
            emit(&common, report::flow_table(&flow), to_json(&rep))
        }
        Command::Plan {
            common,
            source,
            sink,
            steps,
            no_sink_loop,
        } => {
            let g = load_graph(&common)?;
            let g = if no_sink_loop {
                g
            } else {
                g.ensure_sink_loop(sink)?
            };
            let plan = robust_plan(
                &g,
                source,
                sink,
                steps,
                common.mode(),
                common.tol(),
                common.max_iter(),
            )?;
            let comparison = match &plan.ensemble {
                Some(ens) if !ens.is_empty() => {
                    let (c, minimizers) = min_cost_paths(&g, source, sink, steps)?;
                    let coupling = omt_plan(
                        &c,
                        &Distribution::delta(g.n(), source)?,
                        &Distribution::delta(g.n(), sink)?,
                    )?;
                    Some(compare(ens, &minimizers, &coupling))
                }
                _ => None,
            };
            let rep = PlanReport {
                schema: "netbridge/plan-report/v1",
                source,
                sink,
                horizon: steps,
                prior_mode: format!("{:?}", common.mode()),
                flow: plan.flow.rows.clone(),
                paths: plan.ensemble.as_ref().map(|e| {
                    e.paths
                        .iter()
                        .zip(&e.probs)
                        .zip(&e.costs)
                        .map(|((p, &prob), &cost)| PathRow {
                            path: p.clone(),
                            probability: prob,
                            cost,
                        })
                        .collect()
                }),
                comparison,
            };
            let mut text = report::flow_table(&plan.flow);
            if let Some(e) = &plan.ensemble {
                text.push('\n');
                text.push_str(&report::path_table(e));
            }
            emit(&common, text, to_json(&rep))
        }
        Command::Omt {
            common,
            source,
            sink,
            steps,
            no_sink_loop,
        } => {
            let g = load_graph(&common)?;
            let g = if no_sink_loop {
                g
            } else {
                g.ensure_sink_loop(sink)?
            };
            let (c, minimizers) = min_cost_paths(&g, source, sink, steps)?;
            let coupling = omt_plan(
                &c,
                &Distribution::delta(g.n(), source)?,
                &Distribution::delta(g.n(), sink)?,
            )?;
            let rep = OmtReport {
                schema: "netbridge/omt-report/v1",
                horizon: steps,
                cost_matrix: matrix_rows(&c.entries),
                coupling: matrix_rows(&coupling.q),
                total_cost: coupling.total_cost,
                min_cost_paths: minimizers.clone(),
            };
            let mut text = String::from("min-cost matrix C (<= N steps, free self loops):\n");
            text.push_str(&report::table(&matrix_rows(&c.entries)));
            text.push('\n');
            text.push_str(&report::coupling_table(&coupling));
            text.push_str("minimizing paths:\n");
            for p in &minimizers {
                let label: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                text.push_str(&format!("  {}\n", label.join("-")));
            }
            emit(&common, text, to_json(&rep))
        }
        Command::Verify {
            common,
            source,
            sink,
            steps,
            no_sink_loop,
            check_tol,
        } => {
            let g = load_graph(&common)?;
            let g = if no_sink_loop {
                g
            } else {
                g.ensure_sink_loop(sink)?
            };
            let plan = robust_plan(
                &g,
                source,
                sink,
                steps,
                common.mode(),
                common.tol(),
                common.max_iter(),
            )?;
            let ens = plan.ensemble.as_ref().ok_or_else(|| {
                Error::Capacity("instance exceeds the enumeration bound for verification".into())
            })?;
            let oracle = oracle_bridge(&plan.kernel, source, sink, steps)?;
            if ens.paths != oracle.paths {
                return Err(Error::Validation(
                    "plan and oracle enumerate different path sets".into(),
                ));
            }
            let max_discrepancy = ens
                .probs
                .iter()
                .zip(&oracle.probs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            let passed = max_discrepancy <= check_tol;
            let rep = VerifyReport {
                schema: "netbridge/verify-report/v1",
                paths_checked: ens.paths.len(),
                max_discrepancy,
                tolerance: check_tol,
                passed,
            };
            let text = format!(
                "paths checked: {}\nmax path-probability discrepancy: {:.3e}\ntolerance: {:.3e}\nresult: {}\n",
                ens.paths.len(),
                max_discrepancy,
                check_tol,
                if passed { "PASS" } else { "FAIL" }
            );
            let code = emit(&common, text, to_json(&rep))?;
            if passed {
                Ok(code)
            } else {
                Err(Error::Validation(format!(
                    "verification failed: discrepancy {max_discrepancy:.3e} exceeds {check_tol:.3e}"
                )))
            }
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization");
    s.push('\n');
    s
}
