//! Experiment harness: replicated generate/learn/classify pipelines with
//! success-rate aggregation, convergence studies for the asymptotic
//! equivalence of the classifiers, per-feature-group benchmarks, and
//! leave-one-out evaluation. Everything is seeded and emits plain CSV.

use std::path::Path;

use rayon::prelude::*;

use crate::classify::{
    classify_marginal, classify_simultaneous, marginal_score, simultaneous_score, ClassModel,
    ClassificationResult, Init,
};
use crate::data::{validate_labels, DataMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::generate::{
    class_generating_models, derive_seed, replicate_sg, sample_synthetic, SyntheticSpec,
};
use crate::graph::UndirectedGraph;
use crate::learn::{learn_graph, learn_strata, ClassTraceRow, SearchConfig};
use crate::score::HyperParams;
use crate::strata::StratifiedGraph;

/// The classifier variants compared in the benchmark suites. Naive Bayes is
/// the marginal classifier on empty graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ClassifierKind {
    NaiveBayes,
    GmMarginal,
    GmSimultaneous,
    SgmMarginal,
    SgmSimultaneous,
}

impl ClassifierKind {
    pub fn all() -> [ClassifierKind; 5] {
        [
            ClassifierKind::NaiveBayes,
            ClassifierKind::GmMarginal,
            ClassifierKind::GmSimultaneous,
            ClassifierKind::SgmMarginal,
            ClassifierKind::SgmSimultaneous,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "naive-bayes",
            ClassifierKind::GmMarginal => "gm-marginal",
            ClassifierKind::GmSimultaneous => "gm-simultaneous",
            ClassifierKind::SgmMarginal => "sgm-marginal",
            ClassifierKind::SgmSimultaneous => "sgm-simultaneous",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::all()
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Usage(format!("unknown classifier '{name}'")))
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether per-class structures are known to the classifiers or learned
/// from each replicate's training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureMode {
    Fixed,
    Learned,
}

/// Which per-class sample count the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    TrainRows,
    TestRows,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::TrainRows => "train-rows-per-class",
            SweepVariable::TestRows => "test-rows-per-class",
        }
    }
}

/// A replicated success-rate experiment over synthetic multi-class data.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub mode: StructureMode,
    pub classifiers: Vec<ClassifierKind>,
    pub sweep: SweepVariable,
    /// Strictly increasing per-class sample counts for the swept variable.
    pub values: Vec<usize>,
    /// The per-class count of the variable not being swept.
    pub fixed_rows: usize,
    /// Chain components per observation (features = 5 x components with the
    /// standard structures).
    pub components: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Dirichlet concentration for each replicate's generating tables.
    pub concentration: f64,
    /// Equivalent sample size for the classifiers' priors.
    pub esz: f64,
    /// Per-class component structures; five standard ones by default.
    pub class_structures: Vec<StratifiedGraph>,
    /// Search settings for [`StructureMode::Learned`].
    pub search: SearchConfig,
}

impl ExperimentPlan {
    pub fn new(mode: StructureMode, sweep: SweepVariable, values: Vec<usize>) -> Self {
        ExperimentPlan {
            mode,
            classifiers: ClassifierKind::all().to_vec(),
            sweep,
            values,
            fixed_rows: 20,
            components: 4,
            replicates: 50,
            seed: 0,
            concentration: 1.0,
            esz: 1.0,
            class_structures: crate::generate::standard_class_structures(),
            search: SearchConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument(
                "at least one replicate required".into(),
            ));
        }
        if self.values.is_empty() || self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "sweep values must be non-empty and strictly increasing".into(),
            ));
        }
        if self.values[0] == 0 || self.fixed_rows == 0 {
            return Err(Error::InvalidArgument(
                "sample counts must be positive".into(),
            ));
        }
        if self.classifiers.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one classifier required".into(),
            ));
        }
        Ok(())
    }
}

/// Aggregated success rate of one classifier at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub classifier: ClassifierKind,
    pub sweep_value: usize,
    pub mean_success: f64,
    pub std_error: f64,
    pub replicates: usize,
}

/// The full grid of a sweep run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub sweep: SweepVariable,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn mean(&self, classifier: ClassifierKind, sweep_value: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.classifier == classifier && c.sweep_value == sweep_value)
            .map(|c| c.mean_success)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "classifier,sweep_variable,sweep_value,mean_success,std_error,replicates\n",
        );
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.classifier,
                self.sweep.name(),
                c.sweep_value,
                c.mean_success,
                c.std_error,
                c.replicates
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty report".into(),
        })?;
        if header != "classifier,sweep_variable,sweep_value,mean_success,std_error,replicates" {
            return Err(Error::Parse {
                line: 1,
                msg: "unexpected report header".into(),
            });
        }
        let mut sweep = SweepVariable::TrainRows;
        let mut cells = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "expected 6 fields".into(),
                });
            }
            let bad = |msg: &str| Error::Parse {
                line: idx + 1,
                msg: msg.into(),
            };
            sweep = match fields[1] {
                "train-rows-per-class" => SweepVariable::TrainRows,
                "test-rows-per-class" => SweepVariable::TestRows,
                other => return Err(bad(&format!("unknown sweep variable '{other}'"))),
            };
            cells.push(SweepCell {
                classifier: ClassifierKind::parse(fields[0])
                    .map_err(|_| bad("unknown classifier"))?,
                sweep_value: fields[2].parse().map_err(|_| bad("bad sweep value"))?,
                mean_success: fields[3].parse().map_err(|_| bad("bad mean"))?,
                std_error: fields[4].parse().map_err(|_| bad("bad stderr"))?,
                replicates: fields[5].parse().map_err(|_| bad("bad replicate count"))?,
            });
        }
        Ok(SweepReport { sweep, cells })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    NaiveBayes,
    Gm,
    Sgm,
}

impl ClassifierKind {
    fn family(&self) -> Family {
        match self {
            ClassifierKind::NaiveBayes => Family::NaiveBayes,
            ClassifierKind::GmMarginal | ClassifierKind::GmSimultaneous => Family::Gm,
            ClassifierKind::SgmMarginal | ClassifierKind::SgmSimultaneous => Family::Sgm,
        }
    }

    fn simultaneous(&self) -> bool {
        matches!(
            self,
            ClassifierKind::GmSimultaneous | ClassifierKind::SgmSimultaneous
        )
    }
}

/// Per-class models for the three families over the same training data.
struct FamilyModels {
    nb: Option<Vec<ClassModel>>,
    gm: Option<Vec<ClassModel>>,
    sgm: Option<Vec<ClassModel>>,
}

impl FamilyModels {
    fn get(&self, family: Family) -> &[ClassModel] {
        match family {
            Family::NaiveBayes => self.nb.as_deref().expect("family fitted"),
            Family::Gm => self.gm.as_deref().expect("family fitted"),
            Family::Sgm => self.sgm.as_deref().expect("family fitted"),
        }
    }
}

fn per_class_data(train: &DataMatrix, labels: &[usize], k: usize) -> Result<Vec<DataMatrix>> {
    (1..=k)
        .map(|class| {
            let rows: Vec<usize> = (0..train.n_rows())
                .filter(|&i| labels[i] == class)
                .collect();
            if rows.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "class {class} has zero training observations"
                )));
            }
            train.select_rows(&rows)
        })
        .collect()
}

/// Fit the requested families with known full-width structures.
fn fit_fixed_families(
    structures: &[StratifiedGraph],
    components: usize,
    class_data: &[DataMatrix],
    hp: HyperParams,
    need: (bool, bool, bool),
) -> Result<FamilyModels> {
    let fit_all = |make: &dyn Fn(usize) -> Result<StratifiedGraph>| -> Result<Vec<ClassModel>> {
        class_data
            .iter()
            .enumerate()
            .map(|(idx, data)| ClassModel::fit(idx + 1, make(idx)?, data, hp))
            .collect()
    };
    let d = structures
        .first()
        .map(|sg| sg.graph().node_count() * components)
        .unwrap_or_default();
    let (need_nb, need_gm, need_sgm) = need;
    Ok(FamilyModels {
        nb: if need_nb {
            Some(fit_all(&|_| {
                Ok(StratifiedGraph::plain(UndirectedGraph::new(d)?))
            })?)
        } else {
            None
        },
        gm: if need_gm {
            Some(fit_all(&|idx| {
                Ok(replicate_sg(&structures[idx], components)?.without_strata())
            })?)
        } else {
            None
        },
        sgm: if need_sgm {
            Some(fit_all(&|idx| replicate_sg(&structures[idx], components))?)
        } else {
            None
        },
    })
}

/// Learn the requested families from the training data: one graph search per
/// class shared by GM and SGM, plus a stratum search for SGM.
fn fit_learned_families(
    class_data: &[DataMatrix],
    search: &SearchConfig,
    hp: HyperParams,
    need: (bool, bool, bool),
) -> Result<FamilyModels> {
    let (need_nb, need_gm, need_sgm) = need;
    let d = class_data
        .first()
        .map(DataMatrix::n_cols)
        .unwrap_or_default();
    let mut nb = need_nb.then(Vec::new);
    let mut gm = need_gm.then(Vec::new);
    let mut sgm = need_sgm.then(Vec::new);
    for (idx, data) in class_data.iter().enumerate() {
        let class = idx + 1;
        if let Some(nb) = nb.as_mut() {
            let empty = StratifiedGraph::plain(UndirectedGraph::new(d)?);
            nb.push(ClassModel::fit(class, empty, data, hp)?);
        }
        if need_gm || need_sgm {
            let mut cfg = search.clone();
            cfg.seed = derive_seed(search.seed, &[class as u64]);
            let learned = learn_graph(data, &cfg)?;
            let graph = learned.sg.graph().clone();
            if let Some(gm) = gm.as_mut() {
                gm.push(ClassModel::fit(
                    class,
                    StratifiedGraph::plain(graph.clone()),
                    data,
                    hp,
                )?);
            }
            if let Some(sgm) = sgm.as_mut() {
                let with_strata = learn_strata(data, &graph, &cfg)?;
                sgm.push(ClassModel::fit(class, with_strata.sg, data, hp)?);
            }
        }
    }
    Ok(FamilyModels { nb, gm, sgm })
}

fn run_classifier(
    kind: ClassifierKind,
    test: &DataMatrix,
    families: &FamilyModels,
    seed: u64,
) -> Result<ClassificationResult> {
    let models = families.get(kind.family());
    if kind.simultaneous() {
        classify_simultaneous(test, models, Init::Marginal, seed)
    } else {
        classify_marginal(test, models)
    }
}

/// Fraction of observations assigned their true class.
pub fn success_rate(truth: &[usize], assigned: &[usize]) -> f64 {
    assert_eq!(truth.len(), assigned.len());
    if truth.is_empty() {
        return 0.0;
    }
    truth.iter().zip(assigned).filter(|(t, a)| t == a).count() as f64 / truth.len() as f64
}

/// Confusion matrix with true classes as rows and assigned classes as
/// columns.
pub fn confusion_matrix(truth: &[usize], assigned: &[usize], k: usize) -> Vec<Vec<usize>> {
    assert_eq!(truth.len(), assigned.len());
    let mut m = vec![vec![0usize; k]; k];
    for (&t, &a) in truth.iter().zip(assigned) {
        m[t - 1][a - 1] += 1;
    }
    m
}

/// Run a replicated sweep, optionally dumping per-replicate label files
/// (`labels_<classifier>_<value>_<replicate>.csv`) into `dump_dir`.
pub fn run_sweep(plan: &ExperimentPlan, dump_dir: Option<&Path>) -> Result<SweepReport> {
    plan.validate()?;
    if let Some(dir) = dump_dir {
        std::fs::create_dir_all(dir)?;
    }
    let hp = HyperParams::new(plan.esz)?;
    let k = plan.class_structures.len();
    let need = (
        plan.classifiers
            .iter()
            .any(|c| c.family() == Family::NaiveBayes),
        plan.classifiers.iter().any(|c| c.family() == Family::Gm),
        plan.classifiers.iter().any(|c| c.family() == Family::Sgm),
    );
    let mut cells = Vec::new();
    for (pi, &value) in plan.values.iter().enumerate() {
        let (train_rows, test_rows) = match plan.sweep {
            SweepVariable::TrainRows => (value, plan.fixed_rows),
            SweepVariable::TestRows => (plan.fixed_rows, value),
        };
        let per_rep: Vec<Result<Vec<(ClassifierKind, f64, LabelVector, LabelVector)>>> = (0..plan
            .replicates)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(plan.seed, &[pi as u64, rep as u64]);
                let spec = SyntheticSpec {
                    class_structures: plan.class_structures.clone(),
                    components: plan.components,
                    seed: derive_seed(seed, &[1]),
                    concentration: plan.concentration,
                };
                let gen_models = class_generating_models(&spec)?;
                let (train, train_labels) =
                    sample_synthetic(&spec, &gen_models, train_rows, derive_seed(seed, &[2]))?;
                let (test, test_labels) =
                    sample_synthetic(&spec, &gen_models, test_rows, derive_seed(seed, &[3]))?;
                let class_data = per_class_data(&train, &train_labels, k)?;
                let families = match plan.mode {
                    StructureMode::Fixed => fit_fixed_families(
                        &plan.class_structures,
                        plan.components,
                        &class_data,
                        hp,
                        need,
                    )?,
                    StructureMode::Learned => {
                        let mut search = plan.search.clone();
                        search.seed = derive_seed(seed, &[5]);
                        search.equivalent_sample_size = plan.esz;
                        fit_learned_families(&class_data, &search, hp, need)?
                    }
                };
                plan.classifiers
                    .iter()
                    .map(|&kind| {
                        let result =
                            run_classifier(kind, &test, &families, derive_seed(seed, &[4]))?;
                        let success = success_rate(&test_labels, &result.labels);
                        Ok((kind, success, test_labels.clone(), result.labels))
                    })
                    .collect()
            })
            .collect();

        for &kind in &plan.classifiers {
            let mut successes = Vec::with_capacity(plan.replicates);
            for (rep, rep_result) in per_rep.iter().enumerate() {
                let rows = rep_result.as_ref().map_err(|e| clone_error(e))?;
                let (_, success, truth, assigned) = rows
                    .iter()
                    .find(|(rk, ..)| *rk == kind)
                    .expect("classifier ran");
                successes.push(*success);
                if let Some(dir) = dump_dir {
                    let path = dir.join(format!("labels_{kind}_{value}_{rep}.csv"));
                    write_label_pairs(&path, truth, assigned)?;
                }
            }
            let (mean, se) = mean_and_stderr(&successes);
            cells.push(SweepCell {
                classifier: kind,
                sweep_value: value,
                mean_success: mean,
                std_error: se,
                replicates: plan.replicates,
            });
        }
    }
    Ok(SweepReport {
        sweep: plan.sweep,
        cells,
    })
}

// Errors are not Clone; reproduce enough context for the caller.
fn clone_error(e: &Error) -> Error {
    Error::InvalidArgument(format!("replicate failed: {e}"))
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn write_label_pairs(path: &Path, truth: &[usize], assigned: &[usize]) -> Result<()> {
    let mut out = String::from("row,truth,assigned\n");
    for (i, (t, a)) in truth.iter().zip(assigned).enumerate() {
        out.push_str(&format!("{i},{t},{a}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a per-replicate label dump back as (truth, assigned) vectors.
pub fn read_label_pairs(path: &Path) -> Result<(LabelVector, LabelVector)> {
    let text = std::fs::read_to_string(path)?;
    let mut truth = Vec::new();
    let mut assigned = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "expected 3 fields".into(),
            });
        }
        truth.push(fields[1].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: "bad truth label".into(),
        })?);
        assigned.push(fields[2].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: "bad assigned label".into(),
        })?);
    }
    Ok((truth, assigned))
}

/// A study of how fast the classifier variants coincide as training grows.
#[derive(Debug, Clone)]
pub struct ConvergePlan {
    /// Increasing per-class training sizes.
    pub m_values: Vec<usize>,
    pub replicates: usize,
    pub components: usize,
    /// Test rows per class (fixed across the study).
    pub test_rows: usize,
    /// Independent training draws averaged per (seed, m). The gap at large m
    /// is a small zero-mean fluctuation; averaging a few draws estimates its
    /// expected magnitude instead of a single noisy realization.
    pub train_draws: usize,
    pub seed: u64,
    pub concentration: f64,
    pub esz: f64,
    pub class_structures: Vec<StratifiedGraph>,
}

impl ConvergePlan {
    pub fn new(m_values: Vec<usize>) -> Self {
        ConvergePlan {
            m_values,
            replicates: 50,
            components: 4,
            test_rows: 20,
            train_draws: 5,
            seed: 0,
            concentration: 1.0,
            esz: 1.0,
            class_structures: crate::generate::standard_class_structures(),
        }
    }
}

/// Per (training size, replicate): the mean per-observation absolute gap
/// between the simultaneous and marginal log-scores at the true labels, and
/// between the stratified and unstratified models' simultaneous log-scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub m: usize,
    pub replicate: usize,
    pub sim_marginal_gap: f64,
    pub sgm_gm_gap: f64,
}

pub fn run_convergence(plan: &ConvergePlan) -> Result<Vec<ConvergenceRow>> {
    if plan.m_values.is_empty() || plan.m_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "training sizes must be non-empty and strictly increasing".into(),
        ));
    }
    if plan.train_draws == 0 {
        return Err(Error::InvalidArgument(
            "at least one training draw required".into(),
        ));
    }
    let hp = HyperParams::new(plan.esz)?;
    let k = plan.class_structures.len();
    let rows: Vec<Result<Vec<ConvergenceRow>>> = (0..plan.replicates)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(plan.seed, &[rep as u64]);
            let spec = SyntheticSpec {
                class_structures: plan.class_structures.clone(),
                components: plan.components,
                seed: derive_seed(seed, &[1]),
                concentration: plan.concentration,
            };
            let gen_models = class_generating_models(&spec)?;
            let (test, test_labels) =
                sample_synthetic(&spec, &gen_models, plan.test_rows, derive_seed(seed, &[3]))?;
            let n_test = test.n_rows() as f64;
            let mut out = Vec::with_capacity(plan.m_values.len());
            for (mi, &m) in plan.m_values.iter().enumerate() {
                let mut gap1 = 0.0;
                let mut gap2 = 0.0;
                for draw in 0..plan.train_draws {
                    let (train, labels) = sample_synthetic(
                        &spec,
                        &gen_models,
                        m,
                        derive_seed(seed, &[2, mi as u64, draw as u64]),
                    )?;
                    let class_data = per_class_data(&train, &labels, k)?;
                    let families = fit_fixed_families(
                        &plan.class_structures,
                        plan.components,
                        &class_data,
                        hp,
                        (false, true, true),
                    )?;
                    let sgm = families.get(Family::Sgm);
                    let gm = families.get(Family::Gm);
                    let sim_sgm = simultaneous_score(&test_labels, &test, sgm)?;
                    let mar_sgm = marginal_score(&test_labels, &test, sgm)?;
                    let sim_gm = simultaneous_score(&test_labels, &test, gm)?;
                    gap1 += (sim_sgm - mar_sgm).abs() / n_test;
                    gap2 += (sim_sgm - sim_gm).abs() / n_test;
                }
                out.push(ConvergenceRow {
                    m,
                    replicate: rep,
                    sim_marginal_gap: gap1 / plan.train_draws as f64,
                    sgm_gm_gap: gap2 / plan.train_draws as f64,
                });
            }
            Ok(out)
        })
        .collect();
    let mut flat = Vec::new();
    for r in rows {
        flat.extend(r.map_err(|e| clone_error(&e))?);
    }
    Ok(flat)
}

pub fn convergence_to_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("m,replicate,sim_marginal_gap,sgm_gm_gap\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.m, r.replicate, r.sim_marginal_gap, r.sgm_gm_gap
        ));
    }
    out
}

pub fn convergence_from_csv(text: &str) -> Result<Vec<ConvergenceRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "m,replicate,sim_marginal_gap,sgm_gm_gap")) => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "unexpected convergence header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "expected 4 fields".into(),
            });
        }
        let bad = |what: &str| Error::Parse {
            line: idx + 1,
            msg: format!("bad {what}"),
        };
        rows.push(ConvergenceRow {
            m: fields[0].parse().map_err(|_| bad("m"))?,
            replicate: fields[1].parse().map_err(|_| bad("replicate"))?,
            sim_marginal_gap: fields[2].parse().map_err(|_| bad("gap"))?,
            sgm_gm_gap: fields[3].parse().map_err(|_| bad("gap"))?,
        });
    }
    Ok(rows)
}

/// Split features into contiguous groups of `size`; the last group keeps the
/// remainder.
pub fn contiguous_groups(n_features: usize, size: usize) -> Result<Vec<Vec<usize>>> {
    if size == 0 {
        return Err(Error::Usage("group size must be positive".into()));
    }
    if size > n_features {
        return Err(Error::Usage(format!(
            "group size {size} exceeds the {n_features} available features"
        )));
    }
    Ok((0..n_features)
        .collect::<Vec<usize>>()
        .chunks(size)
        .map(|c| c.to_vec())
        .collect())
}

/// Per-feature-group benchmark of the three marginal classifiers.
#[derive(Debug, Clone)]
pub struct GroupsPlan {
    pub group_size: usize,
    /// Test observations drawn from each class per replicate.
    pub test_per_class: usize,
    pub replicates: usize,
    pub seed: u64,
    pub search: SearchConfig,
}

impl GroupsPlan {
    pub fn new(group_size: usize) -> Self {
        GroupsPlan {
            group_size,
            test_per_class: 2,
            replicates: 10,
            seed: 0,
            search: SearchConfig::default(),
        }
    }
}

/// Mean success rates for one feature group ("all" aggregates the groups).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupsRow {
    pub group: String,
    pub sgm: f64,
    pub gm: f64,
    pub naive_bayes: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupsReport {
    pub group_size: usize,
    pub rows: Vec<GroupsRow>,
}

impl GroupsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,group_size,sgm,gm,naive_bayes\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.group, self.group_size, r.sgm, r.gm, r.naive_bayes
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "group,group_size,sgm,gm,naive_bayes")) => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "unexpected groups header".into(),
                })
            }
        }
        let mut group_size = 0;
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "expected 5 fields".into(),
                });
            }
            let bad = |what: &str| Error::Parse {
                line: idx + 1,
                msg: format!("bad {what}"),
            };
            group_size = fields[1].parse().map_err(|_| bad("group size"))?;
            rows.push(GroupsRow {
                group: fields[0].to_string(),
                sgm: fields[2].parse().map_err(|_| bad("sgm rate"))?,
                gm: fields[3].parse().map_err(|_| bad("gm rate"))?,
                naive_bayes: fields[4].parse().map_err(|_| bad("naive-bayes rate"))?,
            });
        }
        Ok(GroupsReport { group_size, rows })
    }
}

/// Repeatedly split a labeled dataset into a small test set and a training
/// remainder, learn per-class structures within each contiguous feature
/// group, and report mean success rates per group for the marginal SGM, GM,
/// and naive Bayes classifiers.
pub fn run_groups(data: &DataMatrix, labels: &[usize], plan: &GroupsPlan) -> Result<GroupsReport> {
    let k = validate_labels(labels, data.n_rows(), true)?;
    if plan.test_per_class == 0 || plan.replicates == 0 {
        return Err(Error::Usage(
            "test size and replicates must be positive".into(),
        ));
    }
    let groups = contiguous_groups(data.n_cols(), plan.group_size)?;
    for class in 1..=k {
        let count = labels.iter().filter(|&&l| l == class).count();
        if count <= plan.test_per_class {
            return Err(Error::Usage(format!(
                "class {class} has {count} observations; needs more than {} for the split",
                plan.test_per_class
            )));
        }
    }
    let hp = HyperParams::new(plan.search.equivalent_sample_size)?;

    let per_rep: Vec<Result<Vec<[f64; 3]>>> = (0..plan.replicates)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(plan.seed, &[rep as u64]);
            let (train_rows, test_rows) = split_rows(labels, k, plan.test_per_class, seed);
            let train = data.select_rows(&train_rows)?;
            let train_labels: Vec<usize> = train_rows.iter().map(|&r| labels[r]).collect();
            let test = data.select_rows(&test_rows)?;
            let test_labels: Vec<usize> = test_rows.iter().map(|&r| labels[r]).collect();
            let mut per_group = Vec::with_capacity(groups.len());
            for (gi, group) in groups.iter().enumerate() {
                let train_g = train.select_columns(group)?;
                let test_g = test.select_columns(group)?;
                let class_data = per_class_data(&train_g, &train_labels, k)?;
                let mut search = plan.search.clone();
                search.seed = derive_seed(seed, &[gi as u64]);
                let families = fit_learned_families(&class_data, &search, hp, (true, true, true))?;
                let sgm = classify_marginal(&test_g, families.get(Family::Sgm))?;
                let gm = classify_marginal(&test_g, families.get(Family::Gm))?;
                let nb = classify_marginal(&test_g, families.get(Family::NaiveBayes))?;
                per_group.push([
                    success_rate(&test_labels, &sgm.labels),
                    success_rate(&test_labels, &gm.labels),
                    success_rate(&test_labels, &nb.labels),
                ]);
            }
            Ok(per_group)
        })
        .collect();

    let mut rows = Vec::with_capacity(groups.len() + 1);
    let mut grand = [0.0f64; 3];
    for gi in 0..groups.len() {
        let mut mean = [0.0f64; 3];
        for rep in &per_rep {
            let rep = rep.as_ref().map_err(|e| clone_error(e))?;
            for (m, v) in mean.iter_mut().zip(rep[gi]) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= plan.replicates as f64;
        }
        for (g, m) in grand.iter_mut().zip(mean) {
            *g += m;
        }
        rows.push(GroupsRow {
            group: (gi + 1).to_string(),
            sgm: mean[0],
            gm: mean[1],
            naive_bayes: mean[2],
        });
    }
    for g in &mut grand {
        *g /= groups.len() as f64;
    }
    rows.push(GroupsRow {
        group: "all".into(),
        sgm: grand[0],
        gm: grand[1],
        naive_bayes: grand[2],
    });
    Ok(GroupsReport {
        group_size: plan.group_size,
        rows,
    })
}

/// Deterministic test/train split: `per_class` test rows drawn from each
/// class without replacement.
fn split_rows(labels: &[usize], k: usize, per_class: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x5717]));
    let mut test = Vec::with_capacity(k * per_class);
    for class in 1..=k {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut rng);
        test.extend_from_slice(&rows[..per_class]);
    }
    test.sort_unstable();
    let train: Vec<usize> = (0..labels.len()).filter(|i| !test.contains(i)).collect();
    (train, test)
}

/// Result of a leave-one-out run: assigned labels, confusion matrix, and
/// the summed log-score of the chosen labels under their held-out models.
#[derive(Debug, Clone)]
pub struct LooOutcome {
    pub assigned: LabelVector,
    pub confusion: Vec<Vec<usize>>,
    pub log_score: f64,
}

/// Leave-one-out evaluation with fixed per-class structures: every row is
/// classified with all remaining rows as training data. Test sets of one
/// make the marginal and simultaneous classifiers identical.
pub fn leave_one_out(
    data: &DataMatrix,
    labels: &[usize],
    structures: &[StratifiedGraph],
    hp: HyperParams,
) -> Result<LooOutcome> {
    let k = validate_labels(labels, data.n_rows(), true)?;
    if structures.len() != k {
        return Err(Error::InvalidArgument(format!(
            "{} structures for {k} classes",
            structures.len()
        )));
    }
    let class_data = per_class_data(data, labels, k)?;
    let mut models: Vec<ClassModel> = structures
        .iter()
        .zip(&class_data)
        .enumerate()
        .map(|(idx, (sg, data))| ClassModel::fit(idx + 1, sg.clone(), data, hp))
        .collect::<Result<_>>()?;
    let mut assigned = Vec::with_capacity(data.n_rows());
    let mut log_score = 0.0;
    for (i, row) in data.rows_iter().enumerate() {
        let own = labels[i] - 1;
        models[own].unlearn_row(row);
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (kk, model) in models.iter().enumerate() {
            let s = model.log_predictive_row(None, row);
            if s > best_score {
                best_score = s;
                best = kk;
            }
        }
        models[own].learn_row(row);
        assigned.push(best + 1);
        log_score += best_score;
    }
    let confusion = confusion_matrix(labels, &assigned, k);
    Ok(LooOutcome {
        assigned,
        confusion,
        log_score,
    })
}

/// Write a classification result as CSV: row, assigned label, and (marginal
/// mode) per-class log-posteriors; the true label when available.
pub fn write_labels_csv(
    path: impl AsRef<Path>,
    result: &ClassificationResult,
    truth: Option<&[usize]>,
    k: usize,
) -> Result<()> {
    let mut out = String::from("row,assigned");
    if truth.is_some() {
        out.push_str(",truth");
    }
    if result.per_observation_log_posteriors.is_some() {
        for class in 1..=k {
            out.push_str(&format!(",log_posterior_{class}"));
        }
    }
    out.push('\n');
    for i in 0..result.labels.len() {
        out.push_str(&format!("{i},{}", result.labels[i]));
        if let Some(truth) = truth {
            out.push_str(&format!(",{}", truth[i]));
        }
        if let Some(posts) = &result.per_observation_log_posteriors {
            for p in &posts[i] {
                out.push_str(&format!(",{p}"));
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read back a labels CSV written by [`write_labels_csv`]: assigned labels,
/// true labels when present, and per-class log-posteriors when present.
#[allow(clippy::type_complexity)]
pub fn read_labels_csv(
    path: impl AsRef<Path>,
) -> Result<(LabelVector, Option<LabelVector>, Option<Vec<Vec<f64>>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty labels file".into(),
    })?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.first() != Some(&"row") || columns.get(1) != Some(&"assigned") {
        return Err(Error::Parse {
            line: 1,
            msg: "unexpected labels header".into(),
        });
    }
    let has_truth = columns.get(2) == Some(&"truth");
    let k = columns
        .iter()
        .filter(|c| c.starts_with("log_posterior_"))
        .count();
    let mut assigned = Vec::new();
    let mut truth = Vec::new();
    let mut posteriors = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("{} fields, expected {}", fields.len(), columns.len()),
            });
        }
        let bad = |what: &str| Error::Parse {
            line: idx + 1,
            msg: format!("bad {what}"),
        };
        assigned.push(fields[1].parse().map_err(|_| bad("assigned label"))?);
        let mut next = 2;
        if has_truth {
            truth.push(fields[next].parse().map_err(|_| bad("true label"))?);
            next += 1;
        }
        if k > 0 {
            let row: Vec<f64> = fields[next..next + k]
                .iter()
                .map(|f| f.parse().map_err(|_| bad("log posterior")))
                .collect::<Result<_>>()?;
            posteriors.push(row);
        }
    }
    Ok((
        assigned,
        has_truth.then_some(truth),
        (k > 0).then_some(posteriors),
    ))
}

/// Write a confusion matrix as CSV: rows are true classes.
pub fn write_confusion_csv(path: impl AsRef<Path>, confusion: &[Vec<usize>]) -> Result<()> {
    let k = confusion.len();
    let mut out = String::from("true_class");
    for class in 1..=k {
        out.push_str(&format!(",assigned_{class}"));
    }
    out.push('\n');
    for (row, counts) in confusion.iter().enumerate() {
        out.push_str(&(row + 1).to_string());
        for c in counts {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write search traces as CSV.
pub fn write_trace_csv(path: impl AsRef<Path>, traces: &[ClassTraceRow]) -> Result<()> {
    let mut out = String::from("class,phase,group,iteration,move,log_score\n");
    for t in traces {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.class_id, t.phase, t.group, t.record.iteration, t.record.accepted, t.record.log_score
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}
