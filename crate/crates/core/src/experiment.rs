//! Repeated-run experiments: exact reference front, per-run records, dispersion
//! statistics and result files.
//!
//! Output directory layout:
//!
//! * `reference_front.csv`
//! * `<algorithm>_runs.csv` with one row per run
//! * `<algorithm>_fronts.csv` with every run's front, keyed by run
//! * `summary.json`

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eda::{self, EdaConfig, InitMethod, Sampler};
use crate::error::{Error, Result};
use crate::exact::{self, ExactSolver, BRUTE_FORCE_LIMIT};
use crate::graph::{InteractionGraph, TieBreak};
use crate::instance_file::{front_rows, read_text, write_atomic, InstanceFile};
use crate::metrics::{coincident_solutions, hypervolume, run_statistics, Front, RunStatistics};
use crate::problem::NrpInstance;

/// Environment variable naming the root for relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "NRP_OUTPUT_ROOT";

/// Largest decision-node count for which a reference front is computed
/// without a partition.
pub const EXACT_REFERENCE_LIMIT: usize = BRUTE_FORCE_LIMIT;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "brute")]
    Brute,
    #[serde(rename = "bnb")]
    Bnb,
    #[serde(rename = "eda-random")]
    EdaRandom,
    #[serde(rename = "eda-pls")]
    EdaPls,
    #[serde(rename = "eda-maxprob")]
    EdaMaxprob,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Brute => "brute",
            Algorithm::Bnb => "bnb",
            Algorithm::EdaRandom => "eda-random",
            Algorithm::EdaPls => "eda-pls",
            Algorithm::EdaMaxprob => "eda-maxprob",
        }
    }

    pub fn init(self) -> Option<InitMethod> {
        match self {
            Algorithm::EdaRandom => Some(InitMethod::Random),
            Algorithm::EdaPls => Some(InitMethod::Pls),
            Algorithm::EdaMaxprob => Some(InitMethod::Maxprob),
            _ => None,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "brute" => Algorithm::Brute,
            "bnb" => Algorithm::Bnb,
            "eda-random" => Algorithm::EdaRandom,
            "eda-pls" => Algorithm::EdaPls,
            "eda-maxprob" => Algorithm::EdaMaxprob,
            _ => return Err(Error::Config(format!("unknown algorithm `{s}`"))),
        })
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional replacements for the size-based EDA defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdaOverrides {
    pub population_size: Option<usize>,
    pub max_iterations: Option<usize>,
    pub stall_iterations: Option<usize>,
    pub sampler: Option<Sampler>,
    pub m_equivalent_size: Option<f64>,
    pub prior_p: Option<f64>,
    pub sample_size: Option<usize>,
    pub maxprob_node_limit: Option<usize>,
}

impl EdaOverrides {
    /// Defaults for `n` requirements with the overrides applied. Population,
    /// sample and stall sizes follow an overridden population or iteration
    /// count unless they are overridden too.
    pub fn apply(&self, n: usize) -> EdaConfig {
        let mut c = EdaConfig::for_size(n);
        if let Some(v) = self.max_iterations {
            c.max_iterations = v;
            c.stall_iterations = (v / 10).max(1);
        }
        if let Some(v) = self.population_size {
            c.population_size = v;
            c.sample_size = v;
        }
        if let Some(v) = self.stall_iterations {
            c.stall_iterations = v;
        }
        if let Some(v) = self.sampler {
            c.sampler = v;
        }
        if let Some(v) = self.m_equivalent_size {
            c.m_equivalent_size = v;
        }
        if let Some(v) = self.prior_p {
            c.prior_p = v;
        }
        if let Some(v) = self.sample_size {
            c.sample_size = v;
        }
        if let Some(v) = self.maxprob_node_limit {
            c.maxprob_node_limit = v;
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub instance: PathBuf,
    pub effort_ratio: f64,
    pub algorithms: Vec<Algorithm>,
    /// EDA runs; defaults to a quarter of the iteration budget. Exact
    /// algorithms always run once.
    #[serde(default)]
    pub runs: Option<usize>,
    #[serde(default)]
    pub eda: EdaOverrides,
    /// Requirement blocks for a split-and-combine reference front.
    #[serde(default)]
    pub partition: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed_base: u64,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Zero every timing field so reruns are byte-identical.
    #[serde(default)]
    pub canonical: bool,
}

impl ExperimentPlan {
    pub fn new(instance: impl Into<PathBuf>, effort_ratio: f64, algorithms: Vec<Algorithm>) -> Self {
        ExperimentPlan {
            instance: instance.into(),
            effort_ratio,
            algorithms,
            runs: None,
            eda: EdaOverrides::default(),
            partition: None,
            output_dir: None,
            seed_base: 0,
            workers: None,
            canonical: false,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read_text(path)?;
        let mut plan: ExperimentPlan = serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: format!("{}: line {}, column {}", path.display(), e.line(), e.column()),
            message: e.to_string(),
        })?;
        if plan.instance.is_relative() {
            if let Some(dir) = path.parent() {
                plan.instance = dir.join(&plan.instance);
            }
        }
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("the plan lists no algorithms".into()));
        }
        if self.runs == Some(0) {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.effort_ratio.is_finite() && self.effort_ratio >= 0.0) {
            return Err(Error::Config(format!("invalid effort ratio {}", self.effort_ratio)));
        }
        Ok(())
    }

    pub fn eda_config(&self, n: usize) -> EdaConfig {
        self.eda.apply(n)
    }

    pub fn run_count(&self, n: usize) -> usize {
        self.runs.unwrap_or_else(|| (self.eda_config(n).max_iterations / 4).max(1))
    }
}

/// `dir` itself when absolute, otherwise under `$NRP_OUTPUT_ROOT` if set.
pub fn resolve_output_dir(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() && !root.is_empty() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub hypervolume: f64,
    pub front_size: usize,
    pub coincident: usize,
    pub iterations: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub hypervolume: RunStatistics,
    pub front_size: RunStatistics,
    pub coincident: RunStatistics,
    pub iterations: RunStatistics,
    pub wall_ms: RunStatistics,
    /// Mean hypervolume over the reference hypervolume.
    pub hypervolume_ratio: f64,
    /// Mean coincident count over the number of reference points.
    pub coincident_ratio: f64,
    /// Hypervolume coefficient of variation within the stability bar.
    pub stable: bool,
}

#[derive(Clone, Debug)]
pub struct AlgorithmResult {
    pub summary: AlgorithmSummary,
    pub records: Vec<RunRecord>,
    pub fronts: Vec<Front>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceSummary {
    pub method: String,
    pub size: usize,
    pub points: usize,
    pub hypervolume: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub instance: String,
    pub requirements: usize,
    pub effort_ratio: f64,
    pub effort_limit: f64,
    pub seed_base: u64,
    pub canonical: bool,
    pub eda_config: EdaConfig,
    pub reference: ReferenceSummary,
    pub algorithms: Vec<AlgorithmSummary>,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub instance: NrpInstance,
    pub reference: Front,
    pub summary: ExperimentSummary,
    pub algorithms: Vec<AlgorithmResult>,
}

/// Loads the plan's instance, runs the experiment and writes the results
/// when the plan names an output directory.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let file = InstanceFile::load(&plan.instance)?;
    let instance = file.instance(plan.effort_ratio)?;
    let result = run_experiment_on(&instance, plan)?;
    if let Some(dir) = &plan.output_dir {
        result.write(&resolve_output_dir(dir))?;
    }
    Ok(result)
}

fn elapsed_ms(start: Instant, canonical: bool) -> f64 {
    if canonical {
        0.0
    } else {
        start.elapsed().as_secs_f64() * 1e3
    }
}

/// Runs `plan` on an already built instance; `plan.instance` is not read.
pub fn run_experiment_on(instance: &NrpInstance, plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let graph = InteractionGraph::build(instance)?;
    let ordering = graph.ancestral_ordering(TieBreak::LowestId)?;
    let n = instance.len();
    let base = plan.eda_config(n);
    base.validate()?;
    let runs = plan.run_count(n);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    pool.install(|| {
        let start = Instant::now();
        let (reference, method) = match &plan.partition {
            Some(blocks) => (exact::split_and_combine(instance, blocks, ExactSolver::Bnb)?, "split-and-combine"),
            None => {
                if graph.decision_count() > EXACT_REFERENCE_LIMIT {
                    return Err(Error::SizeGuard {
                        what: format!("reference front for `{}`", instance.name),
                        size: graph.decision_count(),
                        limit: EXACT_REFERENCE_LIMIT,
                    });
                }
                (exact::solve_exact(instance, &graph, ExactSolver::Bnb)?, "bnb")
            }
        };
        let reference_ms = elapsed_ms(start, plan.canonical);
        let reference_hv = hypervolume(&reference, instance.effort_limit)?;
        let reference_points = reference.points().len();

        let mut algorithms = Vec::with_capacity(plan.algorithms.len());
        for &algorithm in &plan.algorithms {
            let outcomes: Vec<Result<(Front, usize, f64, u64)>> = match algorithm.init() {
                None => {
                    let solver = if algorithm == Algorithm::Brute { ExactSolver::Brute } else { ExactSolver::Bnb };
                    let start = Instant::now();
                    let front = exact::solve_exact(instance, &graph, solver);
                    vec![front.map(|f| (f, 0, elapsed_ms(start, plan.canonical), plan.seed_base))]
                }
                Some(init) => (0..runs)
                    .into_par_iter()
                    .map(|r| {
                        let seed = plan.seed_base.wrapping_add(r as u64);
                        let config = EdaConfig { init, seed, ..base.clone() };
                        let (front, report) = eda::run(instance, &graph, &ordering, &config)?;
                        let ms = if plan.canonical { 0.0 } else { report.wall_ms };
                        Ok((front, report.iterations, ms, seed))
                    })
                    .collect(),
            };
            let mut records = Vec::with_capacity(outcomes.len());
            let mut fronts = Vec::with_capacity(outcomes.len());
            for (run, outcome) in outcomes.into_iter().enumerate() {
                let (front, iterations, wall_ms, seed) = outcome?;
                records.push(RunRecord {
                    run,
                    seed,
                    hypervolume: hypervolume(&front, instance.effort_limit)?,
                    front_size: front.len(),
                    coincident: coincident_solutions(&front, &reference),
                    iterations,
                    wall_ms,
                });
                fronts.push(front);
            }
            let column = |f: fn(&RunRecord) -> f64| -> Result<RunStatistics> {
                run_statistics(&records.iter().map(f).collect::<Vec<_>>())
            };
            let hv = column(|r| r.hypervolume)?;
            let coincident = column(|r| r.coincident as f64)?;
            let summary = AlgorithmSummary {
                algorithm,
                runs: records.len(),
                seeds: records.iter().map(|r| r.seed).collect(),
                hypervolume_ratio: ratio(hv.mean, reference_hv),
                coincident_ratio: ratio(coincident.mean, reference_points as f64),
                stable: hv.stable,
                hypervolume: hv,
                front_size: column(|r| r.front_size as f64)?,
                coincident,
                iterations: column(|r| r.iterations as f64)?,
                wall_ms: column(|r| r.wall_ms)?,
            };
            algorithms.push(AlgorithmResult { summary, records, fronts });
        }

        let summary = ExperimentSummary {
            instance: instance.name.clone(),
            requirements: n,
            effort_ratio: plan.effort_ratio,
            effort_limit: instance.effort_limit,
            seed_base: plan.seed_base,
            canonical: plan.canonical,
            eda_config: EdaConfig { seed: plan.seed_base, ..base.clone() },
            reference: ReferenceSummary {
                method: method.to_string(),
                size: reference.len(),
                points: reference_points,
                hypervolume: reference_hv,
                wall_ms: reference_ms,
            },
            algorithms: algorithms.iter().map(|a| a.summary.clone()).collect(),
        };
        Ok(ExperimentResult {
            instance: instance.clone(),
            reference,
            summary,
            algorithms,
        })
    })
}

fn ratio(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if value == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        value / reference
    }
}

#[derive(Serialize)]
struct RunFrontRow<'a> {
    run: usize,
    effort: f64,
    satisfaction: f64,
    requirements: &'a str,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

impl ExperimentResult {
    pub fn algorithm(&self, algorithm: Algorithm) -> Option<&AlgorithmResult> {
        self.algorithms.iter().find(|a| a.summary.algorithm == algorithm)
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes every result file into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_atomic(
            &dir.join("reference_front.csv"),
            &csv_bytes(front_rows(&self.reference, &self.instance))?,
        )?;
        for a in &self.algorithms {
            let name = a.summary.algorithm.name();
            write_atomic(&dir.join(format!("{name}_runs.csv")), &csv_bytes(&a.records)?)?;
            let mut rows = Vec::new();
            for (run, front) in a.fronts.iter().enumerate() {
                rows.extend(front_rows(front, &self.instance).into_iter().map(|r| (run, r)));
            }
            let bytes = csv_bytes(rows.iter().map(|(run, r)| RunFrontRow {
                run: *run,
                effort: r.effort,
                satisfaction: r.satisfaction,
                requirements: &r.requirements,
            }))?;
            write_atomic(&dir.join(format!("{name}_fronts.csv")), &bytes)?;
        }
        write_atomic(&dir.join("summary.json"), self.summary_json().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, GeneratorConfig};

    fn small() -> NrpInstance {
        generate_instance(&GeneratorConfig::new(10, 0.2, 4)).unwrap().instance(0.3).unwrap()
    }

    #[test]
    fn brute_only() {
        let inst = small();
        let plan = ExperimentPlan { runs: Some(1), ..ExperimentPlan::new("-", 0.3, vec![Algorithm::Brute]) };
        let res = run_experiment_on(&inst, &plan).unwrap();
        let brute = res.algorithm(Algorithm::Brute).unwrap();
        assert_eq!(brute.fronts[0], res.reference);
        assert_eq!(brute.records[0].hypervolume, res.summary.reference.hypervolume);
        assert_eq!(brute.summary.coincident_ratio, 1.0);
    }

    #[test]
    fn default_runs_are_a_quarter_of_iterations() {
        let plan = ExperimentPlan::new("-", 0.3, vec![Algorithm::EdaPls]);
        assert_eq!(plan.run_count(20), 25);
        assert_eq!(plan.run_count(100), 125);
    }

    #[test]
    fn size_guard_without_partition() {
        let inst = generate_instance(&GeneratorConfig::new(40, 0.0, 1)).unwrap().instance(0.3).unwrap();
        let plan = ExperimentPlan::new("-", 0.3, vec![Algorithm::EdaPls]);
        let err = run_experiment_on(&inst, &plan).unwrap_err();
        assert_eq!(err.category(), "size_guard");
        let ids: Vec<String> = inst.requirements.iter().map(|r| r.id.clone()).collect();
        let partition = Some(ids.chunks(10).map(|c| c.to_vec()).collect());
        let plan = ExperimentPlan {
            partition,
            runs: Some(1),
            eda: EdaOverrides { max_iterations: Some(5), ..Default::default() },
            ..plan
        };
        let res = run_experiment_on(&inst, &plan).unwrap();
        assert_eq!(res.summary.reference.method, "split-and-combine");
    }

    #[test]
    fn canonical_files_replay() {
        let inst = small();
        let plan = ExperimentPlan {
            runs: Some(3),
            canonical: true,
            seed_base: 7,
            eda: EdaOverrides { max_iterations: Some(20), ..Default::default() },
            ..ExperimentPlan::new("-", 0.3, vec![Algorithm::Bnb, Algorithm::EdaRandom, Algorithm::EdaPls])
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment_on(&inst, &plan).unwrap().write(a.path()).unwrap();
        run_experiment_on(&inst, &ExperimentPlan { workers: Some(1), ..plan }).unwrap().write(b.path()).unwrap();
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names.len(), 2 + 2 * 3);
        for name in names {
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert_eq!(x, y, "{name:?}");
        }
        let runs = std::fs::read_to_string(a.path().join("eda-pls_runs.csv")).unwrap();
        assert!(runs.starts_with("run,seed,hypervolume,front_size,coincident,iterations,wall_ms\n0,7,"));
    }

    #[test]
    fn plan_json() {
        let text = r#"{"instance":"x.json","effort_ratio":0.5,"algorithms":["bnb","eda-pls"],"eda":{"max_iterations":40}}"#;
        let plan: ExperimentPlan = serde_json::from_str(text).unwrap();
        assert_eq!(plan.algorithms, [Algorithm::Bnb, Algorithm::EdaPls]);
        let cfg = plan.eda_config(12);
        assert_eq!((cfg.max_iterations, cfg.stall_iterations, cfg.population_size), (40, 4, 60));
        assert_eq!(plan.run_count(12), 10);
    }
}
