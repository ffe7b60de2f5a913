//! `plap` — command-line driver for graph p-Laplacian spectral
//! bi-partitioning.
//!
//! Four subcommands cover the whole experiment pipeline:
//!
//! * `gen sbm` / `gen moons` write benchmark instances (edge list, ground
//!   truth labels, point CSV for moons) plus a manifest;
//! * `solve` runs the p-continuation SCF solver on an edge-list graph and
//!   writes the result JSON and the per-iteration trace CSV;
//! * `cluster` additionally threshold-sweeps every stage's eigenvector into
//!   a two-way partition and writes the per-stage cut-metric table.
//!
//! Every command echoes its fully resolved configuration into a
//! `manifest.json` (and into the result JSON), and all outputs are
//! deterministic: the same command line produces byte-identical files.
//!
//! Exit codes: 0 success, 2 invalid input or parameters, 3 disconnected
//! graph, 4 iteration budget exhausted (outputs are still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use plap_core::cluster::{partition_accuracy, threshold_sweep, Partition, SweepResult};
use plap_core::data::{
    knn_similarity_graph_with, moons_generate, sbm_generate, AngleSampling, MoonsParams,
    SbmParams, SigmaRule,
};
use plap_core::graph::Graph;
use plap_core::scf::{solve, ScfConfig, ScfResult};
use plap_core::Error as CoreError;

const EXIT_INPUT: u8 = 2;
const EXIT_DISCONNECTED: u8 = 3;
const EXIT_NO_CONVERGENCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "plap",
    version,
    about = "Graph p-Laplacian second eigenpairs and spectral bi-partitioning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark instance
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run the p-continuation solver on an edge-list graph
    Solve(SolveArgs),
    /// Solve, then threshold-sweep each stage's eigenvector into a partition
    Cluster(ClusterArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Two-block stochastic block model
    Sbm(SbmArgs),
    /// Noisy two-moons point cloud with its k-NN similarity graph
    Moons(MoonsArgs),
}

#[derive(Args)]
struct SbmArgs {
    /// Nodes per block (the graph has 2*nc nodes)
    #[arg(long)]
    nc: usize,
    /// Within-block edge probability
    #[arg(long, default_value_t = 0.8)]
    q_in: f64,
    /// Across-block edge probability
    #[arg(long, default_value_t = 0.3)]
    q_out: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct MoonsArgs {
    /// Points per moon (the cloud has 2*nc points)
    #[arg(long)]
    nc: usize,
    /// Ambient dimension
    #[arg(long, default_value_t = 10)]
    d: usize,
    /// Noise variance on every coordinate
    #[arg(long, default_value_t = 0.02)]
    sigma2: f64,
    /// Neighbor count for the similarity graph
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Place angles on an even grid instead of sampling them
    #[arg(long)]
    equispaced: bool,
    /// Scale similarity weights by the k-th-neighbor distance instead of
    /// the nearest-neighbor distance
    #[arg(long)]
    kth_sigma: bool,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Edge-list graph to solve
    graph: PathBuf,
    #[command(flatten)]
    scf: ScfFlags,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// Edge-list graph to cluster
    graph: PathBuf,
    #[command(flatten)]
    scf: ScfFlags,
    /// Ground-truth labels (one 0/1 per line) for accuracy reporting
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ScfFlags {
    /// Final p of the continuation (1 < p < 2)
    #[arg(long)]
    p_target: f64,
    /// Continuation step size
    #[arg(long, default_value_t = 0.1)]
    delta_p: f64,
    /// Softabs sharpness
    #[arg(long, default_value_t = 1e10)]
    a: f64,
    /// Step-error convergence tolerance
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Iteration budget per continuation stage
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Also record the unregularized relative residual per iteration
    #[arg(long)]
    record_true_residual: bool,
}

impl ScfFlags {
    fn to_config(&self) -> ScfConfig<f64> {
        let mut cfg = ScfConfig::new(self.p_target);
        cfg.delta_p = self.delta_p;
        cfg.a = self.a;
        cfg.tol = self.tol;
        cfg.max_iter_per_p = self.max_iter;
        cfg.record_true_residual = self.record_true_residual;
        cfg
    }
}

/// The fully resolved configuration, echoed into every output file.
#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    params: serde_json::Value,
}

impl Manifest {
    fn new(command: &str, params: serde_json::Value) -> Self {
        Manifest {
            tool: "plap",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            params,
        }
    }
}

struct CmdError {
    code: u8,
    message: String,
}

impl CmdError {
    fn input(message: impl Into<String>) -> Self {
        CmdError { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::Disconnected => EXIT_DISCONNECTED,
            _ => EXIT_INPUT,
        };
        CmdError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(GenCommand::Sbm(args)) => cmd_gen_sbm(&args),
        Command::Gen(GenCommand::Moons(args)) => cmd_gen_moons(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Cluster(args) => cmd_cluster(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn cmd_gen_sbm(args: &SbmArgs) -> Result<u8, CmdError> {
    let params = SbmParams {
        n_c: args.nc,
        q_in: args.q_in,
        q_out: args.q_out,
        seed: args.seed,
    };
    let (graph, truth) = sbm_generate::<f64>(&params)?;
    let manifest = Manifest::new(
        "gen sbm",
        serde_json::json!({
            "nc": args.nc,
            "q_in": args.q_in,
            "q_out": args.q_out,
            "seed": args.seed,
        }),
    );
    std::fs::create_dir_all(&args.out)?;
    graph.write_edge_list(args.out.join("graph.edges"))?;
    write_labels(&args.out.join("labels.txt"), truth.labels())?;
    write_json(&args.out.join("manifest.json"), &manifest)?;
    println!(
        "wrote SBM instance: {} nodes, {} edges -> {}",
        graph.node_count(),
        graph.edge_count(),
        args.out.display()
    );
    Ok(0)
}

fn cmd_gen_moons(args: &MoonsArgs) -> Result<u8, CmdError> {
    let params = MoonsParams {
        n_c: args.nc,
        d: args.d,
        sigma2: args.sigma2,
        seed: args.seed,
        angles: if args.equispaced {
            AngleSampling::Equispaced
        } else {
            AngleSampling::Uniform
        },
    };
    let cloud = moons_generate::<f64>(&params)?;
    let rule = if args.kth_sigma {
        SigmaRule::KthNeighbor
    } else {
        SigmaRule::NearestNeighbor
    };
    let graph = knn_similarity_graph_with(&cloud, args.k, rule)?;
    let manifest = Manifest::new(
        "gen moons",
        serde_json::json!({
            "nc": args.nc,
            "d": args.d,
            "sigma2": args.sigma2,
            "k": args.k,
            "seed": args.seed,
            "equispaced": args.equispaced,
            "kth_sigma": args.kth_sigma,
        }),
    );
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("points.csv"), cloud.to_csv())?;
    graph.write_edge_list(args.out.join("graph.edges"))?;
    write_labels(&args.out.join("labels.txt"), cloud.labels())?;
    write_json(&args.out.join("manifest.json"), &manifest)?;
    println!(
        "wrote two-moons instance: {} points, {} edges -> {}",
        cloud.n_points(),
        graph.edge_count(),
        args.out.display()
    );
    Ok(0)
}

/// Result JSON written by `solve` and `cluster`.
#[derive(Serialize)]
struct ResultDoc<'a> {
    lambda: f64,
    eigenvector: &'a [f64],
    converged: bool,
    stages: Vec<StageDoc>,
    manifest: &'a Manifest,
}

#[derive(Serialize)]
struct StageDoc {
    p_i: f64,
    iters: usize,
    delta_gap: f64,
}

fn run_solver(
    graph_path: &Path,
    flags: &ScfFlags,
) -> Result<(Graph<f64>, ScfResult<f64>), CmdError> {
    let graph = Graph::<f64>::read_edge_list(graph_path)
        .map_err(|e| CmdError::input(format!("{}: {e}", graph_path.display())))?;
    let result = solve(&graph, &flags.to_config())?;
    Ok((graph, result))
}

fn write_solver_outputs(
    out: &Path,
    manifest: &Manifest,
    result: &ScfResult<f64>,
) -> Result<(), CmdError> {
    let doc = ResultDoc {
        lambda: result.lambda,
        eigenvector: result.eigenvector.as_slice(),
        converged: result.converged,
        stages: result
            .trace
            .stages
            .iter()
            .map(|s| StageDoc { p_i: s.p_i, iters: s.iters, delta_gap: s.delta_gap })
            .collect(),
        manifest,
    };
    write_json(&out.join("result.json"), &doc)?;

    let mut csv = String::from("p_i,iter,lambda,step_error,relres_reg,relres_true\n");
    for r in &result.trace.records {
        let true_field = r.relres_true.map_or(String::new(), |v| v.to_string());
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.p_i, r.iter, r.lambda, r.step_error, r.relres_reg, true_field
        ));
    }
    std::fs::write(out.join("trace.csv"), csv)?;
    write_json(&out.join("manifest.json"), manifest)?;
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<u8, CmdError> {
    let manifest = Manifest::new(
        "solve",
        serde_json::json!({
            "graph": args.graph.display().to_string(),
            "scf": serde_json::to_value(&args.scf).expect("flags serialize"),
        }),
    );
    let (_, result) = run_solver(&args.graph, &args.scf)?;
    std::fs::create_dir_all(&args.out)?;
    write_solver_outputs(&args.out, &manifest, &result)?;
    println!(
        "lambda = {:.12e}, converged = {}, {} stages -> {}",
        result.lambda,
        result.converged,
        result.trace.stages.len(),
        args.out.display()
    );
    Ok(if result.converged { 0 } else { EXIT_NO_CONVERGENCE })
}

/// Summary JSON written by `cluster` on top of the solver outputs.
#[derive(Serialize)]
struct ClusterDoc<'a> {
    p_target: f64,
    threshold: f64,
    cut: f64,
    rcut: f64,
    rcc: f64,
    ncut: f64,
    ncc: f64,
    sizes: [usize; 2],
    accuracy: Option<f64>,
    manifest: &'a Manifest,
}

fn cmd_cluster(args: &ClusterArgs) -> Result<u8, CmdError> {
    let manifest = Manifest::new(
        "cluster",
        serde_json::json!({
            "graph": args.graph.display().to_string(),
            "scf": serde_json::to_value(&args.scf).expect("flags serialize"),
            "truth": args.truth.as_ref().map(|p| p.display().to_string()),
        }),
    );
    let truth = args
        .truth
        .as_ref()
        .map(|p| read_labels(p))
        .transpose()?;

    let (graph, result) = run_solver(&args.graph, &args.scf)?;
    std::fs::create_dir_all(&args.out)?;
    write_solver_outputs(&args.out, &manifest, &result)?;

    // Sweep every stage's converged eigenvector; the Table-3 style series.
    let mut csv = String::from("p_i,iters,lambda,delta_gap,threshold,cut,rcut,rcc,ncut,ncc\n");
    let mut last_sweep: Option<SweepResult<f64>> = None;
    for s in &result.trace.stages {
        let sweep = threshold_sweep(&graph, &s.vector)?;
        let m = &sweep.metrics;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.p_i, s.iters, s.lambda, s.delta_gap, sweep.threshold, m.cut, m.rcut, m.rcc,
            m.ncut, m.ncc
        ));
        last_sweep = Some(sweep);
    }
    std::fs::write(args.out.join("stages.csv"), csv)?;

    let sweep = last_sweep.expect("at least one continuation stage");
    let accuracy = truth
        .as_ref()
        .map(|t| partition_accuracy(t, &sweep.partition))
        .transpose()?;
    write_labels(&args.out.join("labels.txt"), sweep.partition.labels())?;
    let doc = ClusterDoc {
        p_target: args.scf.p_target,
        threshold: sweep.threshold,
        cut: sweep.metrics.cut,
        rcut: sweep.metrics.rcut,
        rcc: sweep.metrics.rcc,
        ncut: sweep.metrics.ncut,
        ncc: sweep.metrics.ncc,
        sizes: sweep.metrics.sizes,
        accuracy,
        manifest: &manifest,
    };
    write_json(&args.out.join("cluster.json"), &doc)?;

    match accuracy {
        Some(acc) => println!(
            "rcc = {:.6}, rcut = {:.6}, sizes = {:?}, accuracy = {acc:.4} -> {}",
            sweep.metrics.rcc,
            sweep.metrics.rcut,
            sweep.metrics.sizes,
            args.out.display()
        ),
        None => println!(
            "rcc = {:.6}, rcut = {:.6}, sizes = {:?} -> {}",
            sweep.metrics.rcc,
            sweep.metrics.rcut,
            sweep.metrics.sizes,
            args.out.display()
        ),
    }
    Ok(if result.converged { 0 } else { EXIT_NO_CONVERGENCE })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CmdError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CmdError::input(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_labels(path: &Path, labels: &[u8]) -> Result<(), CmdError> {
    let mut text = String::with_capacity(2 * labels.len());
    for l in labels {
        text.push_str(&format!("{l}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn read_labels(path: &Path) -> Result<Partition, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::input(format!("{}: {e}", path.display())))?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t {
            "0" => labels.push(0),
            "1" => labels.push(1),
            other => {
                return Err(CmdError::input(format!(
                    "{}:{}: expected 0 or 1, got {other:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(Partition::new(labels)?)
}
