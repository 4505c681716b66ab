//! Command-line front end: structure learning, classification, success-rate
//! sweeps, convergence studies, per-group benchmarks, and data simulation.
//! All heavy lifting lives in the library; this binary parses flags, wires
//! files to harness calls, and maps errors to exit codes (0 success, 2 usage
//! error, 3 data/model validation error).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sgm::classify::Init;
use sgm::error::Error;
use sgm::generate::{
    class_generating_models, sample, sample_synthetic, standard_class_structures, SyntheticSpec,
};
use sgm::harness::{
    self, ClassifierKind, ConvergePlan, ExperimentPlan, GroupsPlan, StructureMode, SweepVariable,
};
use sgm::io::{load_dataset, save_dataset, ModelDocument};
use sgm::learn::{learn_class_models_traced, SearchConfig};
use sgm::score::HyperParams;
use sgm::strata::StratifiedGraph;
use sgm::{classify_marginal, classify_simultaneous, ClassModel, DataMatrix};

#[derive(Parser)]
#[command(
    name = "sgm",
    version,
    about = "Predictive classification with decomposable and stratified graphical models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn per-class structures from a labeled dataset and write one model
    /// file per class plus a search-trace CSV.
    ///
    /// Writes `class_<k>.json` model files and `trace.csv` with columns
    /// class, phase, group, iteration, move, log_score.
    Learn(LearnArgs),
    /// Classify a test dataset against per-class model files.
    ///
    /// `--out` columns: row, assigned, then truth (labeled input) and
    /// log_posterior_<k> per class (marginal mode). `--confusion` columns:
    /// true_class, assigned_1..K, one row per true class.
    Classify(ClassifyArgs),
    /// Replicated success-rate sweeps over synthetic data.
    ///
    /// Output columns: classifier, sweep_variable, sweep_value,
    /// mean_success, std_error, replicates. Label dumps (`--dump-labels`)
    /// have columns row, truth, assigned.
    Sweep(SweepArgs),
    /// Convergence study: per-observation gaps between the simultaneous and
    /// marginal scores and between stratified and plain models, as training
    /// data grows.
    ///
    /// Output columns: m, replicate, sim_marginal_gap, sgm_gm_gap.
    Converge(ConvergeArgs),
    /// Split features into contiguous groups and benchmark the marginal
    /// classifiers per group.
    ///
    /// Output columns: group (1..G then "all"), group_size, sgm, gm,
    /// naive_bayes.
    Groups(GroupsArgs),
    /// Generate synthetic datasets or sample from a model file.
    ///
    /// Datasets are CSV with a `#cardinalities:` comment line, a header
    /// row, and a final 1-based `class` column for labeled data.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct LearnArgs {
    /// Labeled training CSV (requires a `class` column).
    #[arg(long)]
    input: PathBuf,
    /// Output directory for `class_<k>.json` model files and `trace.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Largest clique allowed during graph search.
    #[arg(long, default_value_t = 5)]
    max_clique: usize,
    /// Run the stratum search after the graph search.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    strata: Toggle,
    /// `learn` searches the graph; `empty` fixes the empty graph (naive
    /// Bayes models).
    #[arg(long, value_enum, default_value_t = GraphMode::Learn)]
    graph: GraphMode,
    /// Equivalent sample size of the prior.
    #[arg(long, default_value_t = 1.0)]
    esz: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random chordal restarts for the graph search.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Learn independently within contiguous feature groups of this size.
    #[arg(long)]
    group_size: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphMode {
    Learn,
    Empty,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Directory of `class_<k>.json` model files.
    #[arg(long)]
    models: PathBuf,
    /// Test CSV; a `class` column, when present, adds a confusion matrix.
    #[arg(long)]
    input: PathBuf,
    /// Labeled training CSV supplying the predictive counts. Not needed with
    /// `--loo`.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Marginal)]
    mode: Mode,
    /// Leave-one-out: classify every row of the labeled input with the
    /// remaining rows as training data.
    #[arg(long, default_value_t = false)]
    loo: bool,
    /// Output CSV of per-row labels (and log-posteriors in marginal mode).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output CSV for the confusion matrix (needs true labels).
    #[arg(long)]
    confusion: Option<PathBuf>,
    /// Equivalent sample size; defaults to the value stored in the models.
    #[arg(long)]
    esz: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Marginal,
    Simultaneous,
}

#[derive(Args)]
struct SweepArgs {
    /// Whether class structures are known or learned per replicate.
    #[arg(long, value_enum, default_value_t = ModeArg::Fixed)]
    mode: ModeArg,
    /// Comma-separated classifiers (default: all five).
    #[arg(long, value_delimiter = ',')]
    classifiers: Vec<String>,
    /// Which per-class count the sweep varies.
    #[arg(long, value_enum, default_value_t = SweepVar::Train)]
    sweep: SweepVar,
    /// Comma-separated, strictly increasing per-class counts.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    /// Per-class count for the variable not swept.
    #[arg(long, default_value_t = 20)]
    fixed: usize,
    /// Chain components (5 features each).
    #[arg(long, default_value_t = 4)]
    components: usize,
    #[arg(long, default_value_t = 50)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dirichlet concentration of the generating tables.
    #[arg(long, default_value_t = 1.0)]
    concentration: f64,
    #[arg(long, default_value_t = 1.0)]
    esz: f64,
    /// Directory of component model files replacing the built-in class
    /// structures.
    #[arg(long)]
    structures: Option<PathBuf>,
    /// Dump per-replicate label files into this directory.
    #[arg(long)]
    dump_labels: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    max_clique: usize,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Fixed,
    Learned,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepVar {
    Train,
    Test,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Comma-separated, strictly increasing training rows per class.
    #[arg(long, value_delimiter = ',', required = true)]
    m_values: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    replicates: usize,
    #[arg(long, default_value_t = 4)]
    components: usize,
    /// Test rows per class (fixed).
    #[arg(long, default_value_t = 20)]
    test: usize,
    /// Independent training draws averaged per (seed, m).
    #[arg(long, default_value_t = 5)]
    train_draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    concentration: f64,
    #[arg(long, default_value_t = 1.0)]
    esz: f64,
    #[arg(long)]
    structures: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GroupsArgs {
    /// Labeled dataset CSV.
    #[arg(long)]
    input: PathBuf,
    /// Contiguous feature-group size.
    #[arg(long)]
    group_size: usize,
    #[arg(long, default_value_t = 2)]
    test_per_class: usize,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    max_clique: usize,
    #[arg(long, default_value_t = 1.0)]
    esz: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Sample from an existing model file instead of the synthetic classes.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Rows to sample with `--model`.
    #[arg(long, default_value_t = 100)]
    rows: usize,
    /// Chain components for the synthetic multi-class dataset.
    #[arg(long, default_value_t = 4)]
    components: usize,
    /// Rows per class for the synthetic multi-class dataset.
    #[arg(long, default_value_t = 100)]
    rows_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    concentration: f64,
    /// Write the built-in class component structures (with drawn tables) as
    /// model files into this directory, then exit.
    #[arg(long)]
    emit_class_models: Option<PathBuf>,
    /// Output CSV path for sampled data.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Learn(args) => cmd_learn(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Converge(args) => cmd_converge(args),
        Command::Groups(args) => cmd_groups(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn load_labeled(path: &Path) -> Result<(DataMatrix, Vec<usize>), Error> {
    let (data, labels) = load_dataset(path)?;
    let labels =
        labels.ok_or_else(|| Error::Usage(format!("{} has no class column", path.display())))?;
    Ok((data, labels))
}

fn cmd_learn(args: LearnArgs) -> Result<(), Error> {
    let (data, labels) = load_labeled(&args.input)?;
    std::fs::create_dir_all(&args.out)?;
    let cfg = SearchConfig {
        max_clique_size: args.max_clique,
        restarts: args.restarts,
        seed: args.seed,
        stratum_search_enabled: args.strata == Toggle::On,
        equivalent_sample_size: args.esz,
    };
    let groups: Option<Vec<Vec<usize>>> = match args.group_size {
        Some(size) => Some(harness::contiguous_groups(data.n_cols(), size)?),
        None => None,
    };

    let results = if args.graph == GraphMode::Empty {
        // Naive Bayes models: the empty graph carries no strata either.
        let k = sgm::data::validate_labels(&labels, data.n_rows(), true)?;
        let hp = HyperParams::new(args.esz)?;
        (1..=k)
            .map(|class| {
                let rows: Vec<usize> = (0..data.n_rows()).filter(|&i| labels[i] == class).collect();
                let subset = data.select_rows(&rows)?;
                let g = sgm::UndirectedGraph::new(data.n_cols())?;
                let model = ClassModel::fit(class, StratifiedGraph::plain(g), &subset, hp)?;
                Ok((model, Vec::new()))
            })
            .collect::<Result<Vec<_>, Error>>()?
    } else {
        learn_class_models_traced(&data, &labels, &cfg, groups.as_deref())?
    };

    let mut all_traces = Vec::new();
    for (model, trace) in &results {
        let doc = ModelDocument {
            names: data.names().to_vec(),
            space: data.outcome_space(),
            sg: model.sg().clone(),
            equivalent_sample_size: args.esz,
            generator: None,
        };
        let path = args.out.join(format!("class_{}.json", model.class_id()));
        doc.save(&path)?;
        println!(
            "class {}: {} edges, {} stratified, model written to {}",
            model.class_id(),
            model.sg().graph().edge_count(),
            model.sg().stratified_edges().len(),
            path.display()
        );
        all_traces.extend(trace.iter().cloned());
    }
    let trace_path = args.out.join("trace.csv");
    harness::write_trace_csv(&trace_path, &all_traces)?;
    println!("search trace written to {}", trace_path.display());
    Ok(())
}

/// Read `class_<k>.json` files for k = 1.. and check them against a dataset.
fn load_models_dir(dir: &Path, data: &DataMatrix) -> Result<Vec<(ModelDocument, usize)>, Error> {
    let mut docs = Vec::new();
    loop {
        let path = dir.join(format!("class_{}.json", docs.len() + 1));
        if !path.exists() {
            break;
        }
        docs.push((ModelDocument::load(&path)?, docs.len() + 1));
    }
    if docs.is_empty() {
        return Err(Error::Usage(format!(
            "no class_1.json under {}; expected model files named class_<k>.json",
            dir.display()
        )));
    }
    for (doc, _) in &docs {
        if doc.names != data.names() || doc.space.cards() != data.cards() {
            return Err(Error::Usage(
                "model columns do not match the dataset columns".into(),
            ));
        }
    }
    Ok(docs)
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), Error> {
    let (test, test_labels) = load_dataset(&args.input)?;
    let docs = load_models_dir(&args.models, &test)?;
    let esz = args.esz.unwrap_or(docs[0].0.equivalent_sample_size);
    let hp = HyperParams::new(esz)?;

    let (result, truth): (sgm::ClassificationResult, Option<Vec<usize>>) = if args.loo {
        let labels = test_labels.clone().ok_or_else(|| {
            Error::Usage("leave-one-out needs a class column in the input".into())
        })?;
        let structures: Vec<StratifiedGraph> = docs.iter().map(|(doc, _)| doc.sg.clone()).collect();
        let outcome = harness::leave_one_out(&test, &labels, &structures, hp)?;
        let result = sgm::ClassificationResult {
            labels: outcome.assigned,
            log_score: outcome.log_score,
            per_observation_log_posteriors: None,
            iterations: None,
            score_gains: Vec::new(),
        };
        (result, Some(labels))
    } else {
        let train_path = args
            .train
            .as_ref()
            .ok_or_else(|| Error::Usage("--train is required unless --loo is given".into()))?;
        let (train, train_labels) = load_labeled(train_path)?;
        if train.names() != test.names() || train.cards() != test.cards() {
            return Err(Error::Usage(
                "training and test columns do not match".into(),
            ));
        }
        let models = fit_from_docs(&docs, &train, &train_labels, hp)?;
        let result = match args.mode {
            Mode::Marginal => classify_marginal(&test, &models)?,
            Mode::Simultaneous => classify_simultaneous(&test, &models, Init::Marginal, args.seed)?,
        };
        (result, test_labels)
    };

    println!("total log-score: {}", result.log_score);
    if let Some(iters) = result.iterations {
        println!("sweeps: {iters}");
    }
    if let Some(truth) = &truth {
        let rate = harness::success_rate(truth, &result.labels);
        println!("success rate: {rate:.4}");
    }
    if let Some(out) = &args.out {
        harness::write_labels_csv(out, &result, truth.as_deref(), docs.len())?;
        println!("labels written to {}", out.display());
    }
    if let Some(confusion_path) = &args.confusion {
        let truth = truth.as_ref().ok_or_else(|| {
            Error::Usage("confusion matrix needs a class column in the input".into())
        })?;
        let m = harness::confusion_matrix(truth, &result.labels, docs.len());
        harness::write_confusion_csv(confusion_path, &m)?;
        println!("confusion matrix written to {}", confusion_path.display());
    }
    Ok(())
}

fn fit_from_docs(
    docs: &[(ModelDocument, usize)],
    train: &DataMatrix,
    labels: &[usize],
    hp: HyperParams,
) -> Result<Vec<ClassModel>, Error> {
    let k = sgm::data::validate_labels(labels, train.n_rows(), true)?;
    if docs.len() != k {
        return Err(Error::Usage(format!(
            "{} model files for {k} classes in the training data",
            docs.len()
        )));
    }
    docs.iter()
        .map(|(doc, class)| {
            let rows: Vec<usize> = (0..train.n_rows())
                .filter(|&i| labels[i] == *class)
                .collect();
            let subset = train.select_rows(&rows)?;
            ClassModel::fit(*class, doc.sg.clone(), &subset, hp)
        })
        .collect()
}

/// Component structures from a directory of model files, or the built-ins.
fn load_structures(dir: Option<&Path>) -> Result<Vec<StratifiedGraph>, Error> {
    match dir {
        None => Ok(standard_class_structures()),
        Some(dir) => {
            let mut out = Vec::new();
            loop {
                let path = dir.join(format!("class_{}.json", out.len() + 1));
                if !path.exists() {
                    break;
                }
                out.push(ModelDocument::load(&path)?.sg);
            }
            if out.is_empty() {
                return Err(Error::Usage(format!(
                    "no class_1.json under {}",
                    dir.display()
                )));
            }
            Ok(out)
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let classifiers = if args.classifiers.is_empty() {
        ClassifierKind::all().to_vec()
    } else {
        args.classifiers
            .iter()
            .map(|s| ClassifierKind::parse(s))
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut plan = ExperimentPlan::new(
        match args.mode {
            ModeArg::Fixed => StructureMode::Fixed,
            ModeArg::Learned => StructureMode::Learned,
        },
        match args.sweep {
            SweepVar::Train => SweepVariable::TrainRows,
            SweepVar::Test => SweepVariable::TestRows,
        },
        args.values,
    );
    plan.classifiers = classifiers;
    plan.fixed_rows = args.fixed;
    plan.components = args.components;
    plan.replicates = args.replicates;
    plan.seed = args.seed;
    plan.concentration = args.concentration;
    plan.esz = args.esz;
    plan.class_structures = load_structures(args.structures.as_deref())?;
    plan.search = SearchConfig {
        max_clique_size: args.max_clique,
        restarts: args.restarts,
        ..plan.search
    };
    let report = harness::run_sweep(&plan, args.dump_labels.as_deref())?;
    std::fs::write(&args.out, report.to_csv())?;
    println!("sweep report written to {}", args.out.display());
    Ok(())
}

fn cmd_converge(args: ConvergeArgs) -> Result<(), Error> {
    let mut plan = ConvergePlan::new(args.m_values);
    plan.replicates = args.replicates;
    plan.components = args.components;
    plan.test_rows = args.test;
    plan.train_draws = args.train_draws;
    plan.seed = args.seed;
    plan.concentration = args.concentration;
    plan.esz = args.esz;
    plan.class_structures = load_structures(args.structures.as_deref())?;
    let rows = harness::run_convergence(&plan)?;
    std::fs::write(&args.out, harness::convergence_to_csv(&rows))?;
    println!("convergence data written to {}", args.out.display());
    Ok(())
}

fn cmd_groups(args: GroupsArgs) -> Result<(), Error> {
    let (data, labels) = load_labeled(&args.input)?;
    let mut plan = GroupsPlan::new(args.group_size);
    plan.test_per_class = args.test_per_class;
    plan.replicates = args.replicates;
    plan.seed = args.seed;
    plan.search = SearchConfig {
        max_clique_size: args.max_clique,
        equivalent_sample_size: args.esz,
        ..SearchConfig::default()
    };
    let report = harness::run_groups(&data, &labels, &plan)?;
    std::fs::write(&args.out, report.to_csv())?;
    println!("group report written to {}", args.out.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    if let Some(dir) = &args.emit_class_models {
        std::fs::create_dir_all(dir)?;
        let spec = SyntheticSpec {
            class_structures: standard_class_structures(),
            components: 1,
            seed: args.seed,
            concentration: args.concentration,
        };
        for (idx, gm) in class_generating_models(&spec)?.iter().enumerate() {
            let doc = ModelDocument::from_generator(gm, 1.0);
            let path = dir.join(format!("class_{}.json", idx + 1));
            doc.save(&path)?;
            println!("wrote {}", path.display());
        }
        return Ok(());
    }
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| Error::Usage("--out is required when sampling data".into()))?;
    if let Some(model_path) = &args.model {
        let doc = ModelDocument::load(model_path)?;
        let gm = doc.generator.ok_or_else(|| {
            Error::Usage(format!(
                "{} has no generating tables; draw them with simulate --emit-class-models \
                 or supply a file with a `tables` field",
                model_path.display()
            ))
        })?;
        let data = sample(&gm, args.rows, args.seed);
        let named = DataMatrix::new(
            doc.names.clone(),
            doc.space.cards().to_vec(),
            data.rows_iter().map(|r| r.to_vec()).collect(),
        )?;
        save_dataset(out, &named, None)?;
        println!("{} rows written to {}", args.rows, out.display());
    } else {
        let spec = SyntheticSpec {
            class_structures: standard_class_structures(),
            components: args.components,
            seed: args.seed,
            concentration: args.concentration,
        };
        let models = class_generating_models(&spec)?;
        let (data, labels) = sample_synthetic(
            &spec,
            &models,
            args.rows_per_class,
            sgm::generate::derive_seed(args.seed, &[0xda7a]),
        )?;
        save_dataset(out, &data, Some(&labels))?;
        println!(
            "{} rows x {} features over {} classes written to {}",
            data.n_rows(),
            data.n_cols(),
            spec.class_count(),
            out.display()
        );
    }
    Ok(())
}
