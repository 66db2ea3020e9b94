use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nrp_core::eda::{self, EdaConfig, InitMethod, Sampler};
use nrp_core::exact::{self, BranchAndBoundOptions, ExactSolver};
use nrp_core::experiment::{resolve_output_dir, run_experiment, Algorithm, ExperimentPlan};
use nrp_core::generate::{generate_instance, GeneratorConfig, ValueScale};
use nrp_core::instance_file::{front_csv, read_front_rows, read_text, write_atomic, InstanceFile};
use nrp_core::metrics::{coincident_points, hypervolume_of_points, Front};
use nrp_core::{AncestralOrdering, Error, InteractionGraph, NrpInstance, Result, TieBreak};

#[derive(Parser)]
#[command(name = "nrp", version, about = "Bi-objective Next Release Problem solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the transformed interaction graph as DOT and its ancestral ordering.
    Transform(TransformArgs),
    /// Exact Pareto front by brute force or branch and bound.
    SolveExact(ExactArgs),
    /// Approximate Pareto front with the EDA.
    SolveEda(EdaArgs),
    /// Write a random instance document.
    Gen(GenArgs),
    /// Run an experiment plan.
    Bench(BenchArgs),
    /// Compare a front file against a reference front file.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON document.
    instance: PathBuf,
    /// Effort limit as a fraction of the total effort.
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
}

impl InstanceArgs {
    fn load(&self) -> Result<NrpInstance> {
        InstanceFile::load(&self.instance)?.instance(self.ratio)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreakArg {
    LowestId,
    InputOrder,
}

impl From<TieBreakArg> for TieBreak {
    fn from(t: TieBreakArg) -> Self {
        match t {
            TieBreakArg::LowestId => TieBreak::LowestId,
            TieBreakArg::InputOrder => TieBreak::InputOrder,
        }
    }
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "lowest-id")]
    tie_break: TieBreakArg,
    /// Write the DOT graph here instead of stdout.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactAlgo {
    Brute,
    Bnb,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "bnb")]
    algo: ExactAlgo,
    /// JSON array of requirement-id blocks; solves each block and combines.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Keep exploring subtrees whose effort already exceeds the limit.
    #[arg(long)]
    no_effort_prune: bool,
    /// Comma-separated node ids fixing the branching order.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "lowest-id")]
    tie_break: TieBreakArg,
    /// Front CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EdaArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "pls")]
    init: InitMethod,
    #[arg(long, default_value = "pls")]
    sampler: Sampler,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    stall: Option<usize>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    prior: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "lowest-id")]
    tie_break: TieBreakArg,
    /// Front CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    clients: usize,
    #[arg(long, default_value_t = 0.2)]
    density: f64,
    #[arg(long, default_value = "nrp20")]
    scale: ValueScale,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.5, 0.75])]
    ratios: Vec<f64>,
    /// Destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment plan JSON.
    plan: PathBuf,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed_base: Option<u64>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    stall: Option<usize>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    prior: Option<f64>,
    /// Comma-separated algorithm list, e.g. `bnb,eda-pls`.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Output directory, relative to $NRP_OUTPUT_ROOT when that is set.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Zero all timings.
    #[arg(long)]
    canonical: bool,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    front: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    /// Effort limit used as the hypervolume nadir.
    #[arg(long)]
    budget: f64,
}

fn read_partition(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        location: format!("{}: line {}, column {}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    })
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn emit_front(out: Option<&Path>, front: &Front, instance: &NrpInstance) -> Result<()> {
    emit(out, &front_csv(front, instance)?)
}

fn transform(args: TransformArgs) -> Result<()> {
    let instance = args.instance.load()?;
    let graph = InteractionGraph::build(&instance)?;
    let ordering = graph.ancestral_ordering(args.tie_break.into())?;
    let dot = graph.to_dot();
    match &args.dot {
        Some(path) => write_atomic(path, dot.as_bytes())?,
        None => print!("{dot}"),
    }
    println!("ordering: {}", ordering.ids(&graph).join(" "));
    Ok(())
}

fn solve_exact(args: ExactArgs) -> Result<()> {
    let instance = args.instance.load()?;
    let solver = match args.algo {
        ExactAlgo::Brute => ExactSolver::Brute,
        ExactAlgo::Bnb => ExactSolver::Bnb,
    };
    let front = if let Some(path) = &args.partition {
        exact::split_and_combine(&instance, &read_partition(path)?, solver)?
    } else {
        let graph = InteractionGraph::build(&instance)?;
        match solver {
            ExactSolver::Brute => exact::brute_force_front(&instance, &graph)?,
            ExactSolver::Bnb => {
                let ordering = match &args.order {
                    Some(ids) => AncestralOrdering::from_ids(&graph, ids)?,
                    None => graph.ancestral_ordering(args.tie_break.into())?,
                };
                let options = BranchAndBoundOptions { effort_pruning: !args.no_effort_prune };
                let (front, stats) = exact::branch_and_bound_with(&instance, &graph, &ordering, options);
                eprintln!(
                    "tree nodes {}, explored {}, pruned {} ({:.2}%): {} by interactions, {} by effort",
                    stats.tree_nodes,
                    stats.explored,
                    stats.pruned(),
                    100.0 * stats.pruned_fraction(),
                    stats.pruned_interaction,
                    stats.pruned_effort
                );
                front
            }
        }
    };
    emit_front(args.out.as_deref(), &front, &instance)
}

fn solve_eda(args: EdaArgs) -> Result<()> {
    let instance = args.instance.load()?;
    let graph = InteractionGraph::build(&instance)?;
    let ordering = graph.ancestral_ordering(args.tie_break.into())?;
    let mut config = EdaConfig::for_size(instance.len());
    config.init = args.init;
    config.sampler = args.sampler;
    config.seed = args.seed;
    if let Some(v) = args.iters {
        config.max_iterations = v;
        config.stall_iterations = (v / 10).max(1);
    }
    if let Some(v) = args.pop {
        config.population_size = v;
        config.sample_size = v;
    }
    if let Some(v) = args.stall {
        config.stall_iterations = v;
    }
    if let Some(v) = args.m {
        config.m_equivalent_size = v;
    }
    if let Some(v) = args.prior {
        config.prior_p = v;
    }
    let (front, report) = eda::run(&instance, &graph, &ordering, &config)?;
    emit_front(args.out.as_deref(), &front, &instance)?;
    eprintln!("{}", serde_json::to_string(&report).expect("report serializes"));
    Ok(())
}

fn gen(args: GenArgs) -> Result<()> {
    let config = GeneratorConfig {
        requirements: args.n,
        clients: args.clients,
        density: args.density,
        scale: args.scale,
        seed: args.seed,
        effort_ratios: args.ratios,
    };
    emit(args.out.as_deref(), generate_instance(&config)?.to_json().as_bytes())
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut plan = ExperimentPlan::load(&args.plan)?;
    if let Some(v) = args.runs {
        plan.runs = Some(v);
    }
    if let Some(v) = args.workers {
        plan.workers = Some(v);
    }
    if let Some(v) = args.seed_base {
        plan.seed_base = v;
    }
    if let Some(v) = args.ratio {
        plan.effort_ratio = v;
    }
    if let Some(v) = args.iters {
        plan.eda.max_iterations = Some(v);
    }
    if let Some(v) = args.pop {
        plan.eda.population_size = Some(v);
    }
    if let Some(v) = args.stall {
        plan.eda.stall_iterations = Some(v);
    }
    if let Some(v) = args.m {
        plan.eda.m_equivalent_size = Some(v);
    }
    if let Some(v) = args.prior {
        plan.eda.prior_p = Some(v);
    }
    if let Some(v) = args.algorithms {
        plan.algorithms = v;
    }
    if let Some(path) = &args.partition {
        plan.partition = Some(read_partition(path)?);
    }
    if let Some(dir) = args.out_dir {
        plan.output_dir = Some(dir);
    }
    plan.canonical |= args.canonical;

    let result = run_experiment(&plan)?;
    let s = &result.summary;
    println!(
        "{} (B = {}): reference {} with {} solutions, hypervolume {}",
        s.instance, s.effort_limit, s.reference.method, s.reference.size, s.reference.hypervolume
    );
    println!("algorithm     runs  hv mean       hv cv     hv ratio  coincident  stable");
    for a in &s.algorithms {
        println!(
            "{:<12} {:>5}  {:<12.4} {:<9} {:<9.5} {:<11.4} {}",
            a.algorithm.name(),
            a.runs,
            a.hypervolume.mean,
            a.hypervolume.cv.map_or("n/a".to_string(), |c| format!("{c:.5}")),
            a.hypervolume_ratio,
            a.coincident_ratio,
            if a.stable { "yes" } else { "no" }
        );
    }
    if let Some(dir) = &plan.output_dir {
        println!("results in {}", resolve_output_dir(dir).display());
    }
    Ok(())
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let front: Vec<(f64, f64)> = read_front_rows(&args.front)?.iter().map(|r| r.point()).collect();
    let reference: Vec<(f64, f64)> = read_front_rows(&args.reference)?.iter().map(|r| r.point()).collect();
    let hv = hypervolume_of_points(&front, args.budget)?;
    let ref_hv = hypervolume_of_points(&reference, args.budget)?;
    let coincident = coincident_points(&front, &reference);
    let value = serde_json::json!({
        "front_size": front.len(),
        "reference_size": reference.len(),
        "hypervolume": hv,
        "reference_hypervolume": ref_hv,
        "hypervolume_ratio": if ref_hv > 0.0 { hv / ref_hv } else { 1.0 },
        "coincident": coincident,
    });
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Transform(a) => transform(a),
        Command::SolveExact(a) => solve_exact(a),
        Command::SolveEda(a) => solve_eda(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a),
        Command::Metrics(a) => metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}
