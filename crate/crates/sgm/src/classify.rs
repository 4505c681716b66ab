//! Marginal and simultaneous posterior-predictive classifiers.
//!
//! Both classifiers score a label vector `T` for the test data by the
//! posterior-predictive likelihood of the test observations under per-class
//! models conditioned on training counts, and both apply the maximum a
//! posteriori rule under a uniform prior over labellings. The marginal
//! classifier treats test rows independently; the simultaneous classifier
//! lets rows assigned to the same class inform each other through shared
//! predictive counts and is optimized by coordinate ascent over `T`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::data::{validate_labels, DataMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::score::{
    derive_alpha, posterior_predictive, AlphaTable, CountTable, GraphFactors, HyperParams, LogScore,
};
use crate::strata::{OutcomeSpace, ParentGrouping, StratifiedGraph};

/// One class's stratified graph with its training counts and prior tables,
/// ready to produce posterior-predictive scores.
#[derive(Debug, Clone)]
pub struct ClassModel {
    class_id: usize,
    sg: StratifiedGraph,
    space: OutcomeSpace,
    hp: HyperParams,
    n_train: usize,
    parts: Vec<ModelPart>,
}

#[derive(Debug, Clone)]
struct ModelPart {
    grouping: ParentGrouping,
    alphas: AlphaTable,
    train: CountTable,
    sign: f64,
}

impl ClassModel {
    /// Fit a class model: build the junction-tree factorization of `sg`,
    /// derive prior tables, and count the training data.
    pub fn fit(
        class_id: usize,
        sg: StratifiedGraph,
        train: &DataMatrix,
        hp: HyperParams,
    ) -> Result<Self> {
        if class_id == 0 {
            return Err(Error::InvalidArgument("class ids are 1-based".into()));
        }
        if train.n_cols() != sg.graph().node_count() {
            return Err(Error::InvalidArgument(format!(
                "training data has {} columns but the graph has {} nodes",
                train.n_cols(),
                sg.graph().node_count()
            )));
        }
        let space = train.outcome_space();
        let factors = GraphFactors::new(&sg, &space)?;
        let parts = factors
            .parts
            .into_iter()
            .map(|(grouping, sign)| {
                let alphas = derive_alpha(&hp, &grouping);
                let train = crate::score::count_stats_full(train, &grouping);
                ModelPart {
                    grouping,
                    alphas,
                    train,
                    sign,
                }
            })
            .collect();
        Ok(ClassModel {
            class_id,
            sg,
            space,
            hp,
            n_train: train.n_rows(),
            parts,
        })
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn with_class_id(mut self, class_id: usize) -> Self {
        self.class_id = class_id;
        self
    }

    pub fn sg(&self) -> &StratifiedGraph {
        &self.sg
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn hyper_params(&self) -> HyperParams {
        self.hp
    }

    pub fn node_count(&self) -> usize {
        self.sg.graph().node_count()
    }

    pub fn train_rows(&self) -> usize {
        self.n_train
    }

    /// Remove one full-width observation from the training counts
    /// (leave-one-out support).
    pub fn unlearn_row(&mut self, row: &[u8]) {
        let mut buf = Vec::new();
        for part in &mut self.parts {
            restrict(row, part.grouping.ordering(), &mut buf);
            part.train.remove_row(&part.grouping, &buf);
        }
        self.n_train -= 1;
    }

    /// Add one full-width observation to the training counts.
    pub fn learn_row(&mut self, row: &[u8]) {
        let mut buf = Vec::new();
        for part in &mut self.parts {
            restrict(row, part.grouping.ordering(), &mut buf);
            part.train.add_row(&part.grouping, &buf);
        }
        self.n_train += 1;
    }

    /// Empty per-part count tables for tracking assigned test rows.
    fn empty_counts(&self) -> Vec<CountTable> {
        self.parts
            .iter()
            .map(|p| CountTable::zeros(&p.grouping))
            .collect()
    }

    fn add_assigned(&self, counts: &mut [CountTable], row: &[u8]) {
        let mut buf = Vec::new();
        for (part, table) in self.parts.iter().zip(counts) {
            restrict(row, part.grouping.ordering(), &mut buf);
            table.add_row(&part.grouping, &buf);
        }
    }

    fn remove_assigned(&self, counts: &mut [CountTable], row: &[u8]) {
        let mut buf = Vec::new();
        for (part, table) in self.parts.iter().zip(counts) {
            restrict(row, part.grouping.ordering(), &mut buf);
            table.remove_row(&part.grouping, &buf);
        }
    }

    /// Posterior-predictive log-likelihood of a set of test rows given the
    /// training counts, via the clique/separator factorization.
    pub fn log_predictive_counts(&self, test_counts: &[CountTable]) -> LogScore {
        self.parts
            .iter()
            .zip(test_counts)
            .map(|(part, counts)| {
                part.sign * posterior_predictive(counts, &part.train, &part.alphas)
            })
            .sum()
    }

    /// Count a set of full-width rows into per-part tables.
    pub fn count_rows<'a>(&self, rows: impl Iterator<Item = &'a [u8]>) -> Vec<CountTable> {
        let mut counts = self.empty_counts();
        for row in rows {
            self.add_assigned(&mut counts, row);
        }
        counts
    }

    /// Log posterior-predictive probability of a single row given the
    /// training counts plus, optionally, previously assigned test counts.
    /// Evaluates the telescoped one-observation form of the predictive
    /// likelihood, so no log-gamma calls are needed.
    pub fn log_predictive_row(&self, assigned: Option<&[CountTable]>, row: &[u8]) -> LogScore {
        let mut total = 0.0;
        for (part_idx, part) in self.parts.iter().enumerate() {
            let g = &part.grouping;
            let mut idx = 0usize;
            let mut stride = 1usize;
            let mut part_score = 0.0;
            for pos in 0..g.len() {
                let v = row[g.ordering()[pos]] as usize;
                let group = g.group_of(pos, idx);
                let mut num =
                    part.alphas.value(pos, group, v) + part.train.count(pos, group, v) as f64;
                let mut den = part.alphas.group_total(pos, group)
                    + part.train.parent_count(pos, group) as f64;
                if let Some(extra) = assigned {
                    num += extra[part_idx].count(pos, group, v) as f64;
                    den += extra[part_idx].parent_count(pos, group) as f64;
                }
                part_score += (num / den).ln();
                idx += v * stride;
                stride *= g.card(pos);
            }
            total += part.sign * part_score;
        }
        total
    }
}

fn restrict(row: &[u8], ordering: &[usize], buf: &mut Vec<u8>) {
    buf.clear();
    buf.extend(ordering.iter().map(|&v| row[v]));
}

fn check_models(models: &[ClassModel], test: &DataMatrix) -> Result<()> {
    if models.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one class model is required".into(),
        ));
    }
    for (i, m) in models.iter().enumerate() {
        if m.class_id != i + 1 {
            return Err(Error::InvalidArgument(format!(
                "models must be ordered by class id 1..K; position {i} has id {}",
                m.class_id
            )));
        }
        if m.node_count() != test.n_cols() {
            return Err(Error::InvalidArgument(format!(
                "model for class {} covers {} variables but the test data has {} columns",
                m.class_id,
                m.node_count(),
                test.n_cols()
            )));
        }
    }
    Ok(())
}

/// Predictive score of a label vector under the marginal classifier: each
/// test row scored independently against its assigned class.
pub fn marginal_score(
    labels: &[usize],
    test: &DataMatrix,
    models: &[ClassModel],
) -> Result<LogScore> {
    check_models(models, test)?;
    validate_labels(labels, test.n_rows(), false)?;
    let k = models.len();
    let mut total = 0.0;
    for (i, row) in test.rows_iter().enumerate() {
        let label = labels[i];
        if label > k {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range for {k} classes"
            )));
        }
        let model = &models[label - 1];
        let counts = model.count_rows(std::iter::once(row));
        total += model.log_predictive_counts(&counts);
    }
    Ok(total)
}

/// Predictive score of a label vector under the simultaneous classifier:
/// all rows assigned to a class are scored jointly, so same-class test rows
/// share predictive counts.
pub fn simultaneous_score(
    labels: &[usize],
    test: &DataMatrix,
    models: &[ClassModel],
) -> Result<LogScore> {
    check_models(models, test)?;
    validate_labels(labels, test.n_rows(), false)?;
    let k = models.len();
    if let Some(&bad) = labels.iter().find(|&&l| l > k) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {k} classes"
        )));
    }
    let mut total = 0.0;
    for (class_idx, model) in models.iter().enumerate() {
        let rows = test
            .rows_iter()
            .zip(labels)
            .filter(|(_, &l)| l == class_idx + 1)
            .map(|(row, _)| row);
        let counts = model.count_rows(rows);
        total += model.log_predictive_counts(&counts);
    }
    Ok(total)
}

/// Output of a classification run.
#[derive(Debug, Clone)]
pub struct ClassificationResult {
    /// Assigned class per test row (1-based).
    pub labels: LabelVector,
    /// Value of the relevant score function at `labels`.
    pub log_score: LogScore,
    /// Marginal mode only: per row, log posterior of each class under a
    /// uniform prior (normalized over classes).
    pub per_observation_log_posteriors: Option<Vec<Vec<f64>>>,
    /// Simultaneous mode only: number of full sweeps until no change.
    pub iterations: Option<usize>,
    /// Simultaneous mode only: log-score improvement of every accepted
    /// reassignment, in order. All entries are strictly positive.
    pub score_gains: Vec<f64>,
}

/// Assign every test row independently to the class maximizing its
/// posterior-predictive probability; ties go to the smallest class id.
pub fn classify_marginal(test: &DataMatrix, models: &[ClassModel]) -> Result<ClassificationResult> {
    check_models(models, test)?;
    let k = models.len();
    let mut labels = Vec::with_capacity(test.n_rows());
    let mut posteriors = Vec::with_capacity(test.n_rows());
    let mut log_score = 0.0;
    for row in test.rows_iter() {
        let scores: Vec<f64> = models
            .iter()
            .map(|m| m.log_predictive_row(None, row))
            .collect();
        let mut best = 0usize;
        for kk in 1..k {
            if scores[kk] > scores[best] {
                best = kk;
            }
        }
        log_score += scores[best];
        labels.push(best + 1);
        let lse = log_sum_exp(&scores);
        posteriors.push(scores.iter().map(|s| s - lse).collect());
    }
    Ok(ClassificationResult {
        labels,
        log_score,
        per_observation_log_posteriors: Some(posteriors),
        iterations: None,
        score_gains: Vec::new(),
    })
}

/// Starting point for the simultaneous classifier's coordinate ascent.
#[derive(Debug, Clone)]
pub enum Init {
    /// Start from the marginal classifier's solution (the default choice).
    Marginal,
    /// Start from uniformly random labels drawn with the given seed.
    Random,
    /// Start from an explicit label vector.
    Given(LabelVector),
}

const MAX_SWEEPS: usize = 1000;

/// Coordinate ascent over the label vector: sweep the test rows, moving each
/// to the class that maximizes the simultaneous score with all other labels
/// fixed. Accepts strictly improving moves only (ties keep the current label
/// or go to the smallest improving class id) and stops after the first full
/// sweep without a change.
pub fn classify_simultaneous(
    test: &DataMatrix,
    models: &[ClassModel],
    init: Init,
    seed: u64,
) -> Result<ClassificationResult> {
    check_models(models, test)?;
    let k = models.len();
    let n = test.n_rows();
    let mut labels: LabelVector = match init {
        Init::Marginal => classify_marginal(test, models)?.labels,
        Init::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.random_range(1..=k)).collect()
        }
        Init::Given(labels) => {
            validate_labels(&labels, n, false)?;
            if let Some(&bad) = labels.iter().find(|&&l| l > k) {
                return Err(Error::InvalidArgument(format!(
                    "label {bad} out of range for {k} classes"
                )));
            }
            labels
        }
    };

    let mut assigned: Vec<Vec<CountTable>> = models.iter().map(|m| m.empty_counts()).collect();
    for (i, row) in test.rows_iter().enumerate() {
        models[labels[i] - 1].add_assigned(&mut assigned[labels[i] - 1], row);
    }

    let mut score_gains = Vec::new();
    let mut sweeps = 0usize;
    loop {
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::NoConvergence(format!(
                "coordinate ascent still changing labels after {MAX_SWEEPS} sweeps"
            )));
        }
        let mut changed = false;
        for i in 0..n {
            let row = test.row(i);
            let cur = labels[i] - 1;
            // Score deltas are computed with row i held out of its class.
            models[cur].remove_assigned(&mut assigned[cur], row);
            let mut best = cur;
            let mut best_delta = f64::NEG_INFINITY;
            let mut cur_delta = f64::NEG_INFINITY;
            for (kk, model) in models.iter().enumerate() {
                let delta = model.log_predictive_row(Some(&assigned[kk]), row);
                if kk == cur {
                    cur_delta = delta;
                }
                if delta > best_delta {
                    best_delta = delta;
                    best = kk;
                }
            }
            let target = if best_delta > cur_delta { best } else { cur };
            if target != cur {
                debug_assert!(best_delta > cur_delta);
                score_gains.push(best_delta - cur_delta);
                labels[i] = target + 1;
                changed = true;
            }
            models[target].add_assigned(&mut assigned[target], row);
        }
        if !changed {
            break;
        }
    }

    let log_score = simultaneous_score(&labels, test, models)?;
    Ok(ClassificationResult {
        labels,
        log_score,
        per_observation_log_posteriors: None,
        iterations: Some(sweeps),
        score_gains,
    })
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, UndirectedGraph};
    use crate::strata::Stratum;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn single_feature_data(rows: &[u8]) -> DataMatrix {
        DataMatrix::new(
            vec!["x1".into()],
            vec![2],
            rows.iter().map(|&v| vec![v]).collect(),
        )
        .unwrap()
    }

    fn empty_graph_model(class_id: usize, train: &DataMatrix) -> ClassModel {
        let g = UndirectedGraph::new(train.n_cols()).unwrap();
        ClassModel::fit(
            class_id,
            StratifiedGraph::plain(g),
            train,
            HyperParams::default(),
        )
        .unwrap()
    }

    fn two_class_single_feature() -> Vec<ClassModel> {
        let train1 = single_feature_data(&[0; 10]);
        let train2 = single_feature_data(&[1; 10]);
        vec![empty_graph_model(1, &train1), empty_graph_model(2, &train2)]
    }

    #[test]
    fn marginal_score_hand_computed() {
        let models = two_class_single_feature();
        let test = single_feature_data(&[0]);
        let s1 = marginal_score(&[1], &test, &models).unwrap();
        let s2 = marginal_score(&[2], &test, &models).unwrap();
        assert!((s1 - (10.5f64 / 11.0).ln()).abs() < TOL);
        assert!((s2 - (0.5f64 / 11.0).ln()).abs() < TOL);
        assert!(s1 > s2);
    }

    #[test]
    fn marginal_score_rejects_bad_labels() {
        let models = two_class_single_feature();
        let test = single_feature_data(&[0]);
        assert!(matches!(
            marginal_score(&[3], &test, &models),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            marginal_score(&[1, 1], &test, &models),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn simultaneous_couples_same_class_rows() {
        // Two identical rows, one class, no training data: the joint
        // predictive is exchangeable, not a product of independent terms.
        let train = single_feature_data(&[]);
        let models = vec![empty_graph_model(1, &train)];
        let test = single_feature_data(&[0, 0]);
        let sim = simultaneous_score(&[1, 1], &test, &models).unwrap();
        let mar = marginal_score(&[1, 1], &test, &models).unwrap();
        assert!((sim - 0.375f64.ln()).abs() < TOL);
        assert!((mar - 2.0 * 0.5f64.ln()).abs() < TOL);
        assert!(sim > mar);

        // Empty test data scores zero.
        let empty = single_feature_data(&[]);
        assert_eq!(simultaneous_score(&[], &empty, &models).unwrap(), 0.0);
    }

    #[test]
    fn single_row_scores_coincide() {
        let models = two_class_single_feature();
        let test = single_feature_data(&[1]);
        for label in [1usize, 2] {
            let sim = simultaneous_score(&[label], &test, &models).unwrap();
            let mar = marginal_score(&[label], &test, &models).unwrap();
            assert_eq!(sim, mar);
        }
        let from_marginal = classify_marginal(&test, &models).unwrap();
        let from_sim = classify_simultaneous(&test, &models, Init::Marginal, 0).unwrap();
        assert_eq!(from_marginal.labels, from_sim.labels);
        assert_eq!(from_sim.iterations, Some(1));
    }

    #[test]
    fn classify_marginal_examples() {
        let models = two_class_single_feature();
        let test = single_feature_data(&[0]);
        let result = classify_marginal(&test, &models).unwrap();
        assert_eq!(result.labels, vec![1]);
        let posts = result.per_observation_log_posteriors.as_ref().unwrap();
        // Posteriors normalize to one.
        let total: f64 = posts[0].iter().map(|p| p.exp()).sum();
        assert!((total - 1.0).abs() < TOL);
        // Consistency with the score function at the returned labels.
        let rescored = marginal_score(&result.labels, &test, &models).unwrap();
        assert!((result.log_score - rescored).abs() < TOL);

        // Single class: everything lands in class 1.
        let one = vec![empty_graph_model(1, &single_feature_data(&[0, 1]))];
        let result = classify_marginal(&single_feature_data(&[0, 1, 1]), &one).unwrap();
        assert_eq!(result.labels, vec![1, 1, 1]);

        // Identical training sets for both classes: ties everywhere, broken
        // toward class 1.
        let train = single_feature_data(&[0, 1, 0]);
        let tied = vec![empty_graph_model(1, &train), empty_graph_model(2, &train)];
        let result = classify_marginal(&single_feature_data(&[0, 1]), &tied).unwrap();
        assert_eq!(result.labels, vec![1, 1]);
    }

    #[test]
    fn marginal_is_row_permutation_equivariant() {
        let models = two_class_single_feature();
        let test = single_feature_data(&[0, 1, 1, 0, 1]);
        let result = classify_marginal(&test, &models).unwrap();
        let perm = [4usize, 2, 0, 1, 3];
        let permuted = test.select_rows(&perm).unwrap();
        let presult = classify_marginal(&permuted, &models).unwrap();
        for (new_pos, &old_pos) in perm.iter().enumerate() {
            assert_eq!(presult.labels[new_pos], result.labels[old_pos]);
        }
        let s = marginal_score(&result.labels, &test, &models).unwrap();
        let sp = marginal_score(
            &perm.iter().map(|&p| result.labels[p]).collect::<Vec<_>>(),
            &permuted,
            &models,
        )
        .unwrap();
        assert!((s - sp).abs() < TOL);
    }

    #[test]
    fn class_relabeling_equivariance() {
        let train1 = single_feature_data(&[0, 0, 0, 1]);
        let train2 = single_feature_data(&[1, 1, 1, 0]);
        let models = vec![empty_graph_model(1, &train1), empty_graph_model(2, &train2)];
        let swapped = vec![empty_graph_model(1, &train2), empty_graph_model(2, &train1)];
        let test = single_feature_data(&[0, 1, 0]);
        let a = classify_marginal(&test, &models).unwrap();
        let b = classify_marginal(&test, &swapped).unwrap();
        for (x, y) in a.labels.iter().zip(&b.labels) {
            assert_eq!(*y, 3 - *x);
        }
    }

    fn random_models_and_test(
        rng: &mut ChaCha8Rng,
        k: usize,
        d: usize,
        n_train: usize,
        n_test: usize,
    ) -> (Vec<ClassModel>, DataMatrix) {
        // Slightly different Bernoulli marginals per class; a chordal chain
        // graph with a stratum now and then.
        let names: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        let models = (1..=k)
            .map(|class| {
                let p = 0.2 + 0.6 * (class as f64 - 1.0) / (k as f64);
                let rows: Vec<Vec<u8>> = (0..n_train)
                    .map(|_| (0..d).map(|_| rng.random_bool(p) as u8).collect())
                    .collect();
                let train = DataMatrix::new(names.clone(), vec![2; d], rows).unwrap();
                let mut g = UndirectedGraph::new(d).unwrap();
                for v in 1..d {
                    g.add_edge(v - 1, v).unwrap();
                }
                let sg = if d >= 3 && rng.random_bool(0.5) {
                    let mut g = g.clone();
                    g.add_edge(0, 2).unwrap();
                    StratifiedGraph::new(g, [Stratum::new(Edge::new(0, 2).unwrap(), [vec![0]])])
                        .unwrap()
                } else {
                    StratifiedGraph::plain(g)
                };
                ClassModel::fit(class, sg, &train, HyperParams::default()).unwrap()
            })
            .collect();
        let rows: Vec<Vec<u8>> = (0..n_test)
            .map(|_| (0..d).map(|_| rng.random_bool(0.5) as u8).collect())
            .collect();
        let test = DataMatrix::new(names, vec![2; d], rows).unwrap();
        (models, test)
    }

    #[test]
    fn ascent_improves_and_terminates() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for round in 0..100 {
            let k = rng.random_range(1..=3);
            let d = rng.random_range(1..=4);
            let (models, test) = random_models_and_test(&mut rng, k, d, 12, 10);
            let init: LabelVector = (0..test.n_rows())
                .map(|_| rng.random_range(1..=k))
                .collect();
            let init_score = simultaneous_score(&init, &test, &models).unwrap();
            let result =
                classify_simultaneous(&test, &models, Init::Given(init.clone()), round).unwrap();
            assert!(result.iterations.unwrap() < MAX_SWEEPS);
            assert!(result.score_gains.iter().all(|&g| g > 0.0));
            let gain: f64 = result.score_gains.iter().sum();
            assert!((result.log_score - init_score - gain).abs() < 1e-6);
            if result.labels == init {
                assert!(result.score_gains.is_empty());
            } else {
                assert!(result.log_score > init_score);
            }
            // Self-consistency of the reported score.
            let rescored = simultaneous_score(&result.labels, &test, &models).unwrap();
            assert!((result.log_score - rescored).abs() < TOL);
        }
    }

    #[test]
    fn ascent_from_local_optimum_stops_after_one_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let (models, test) = random_models_and_test(&mut rng, 2, 3, 20, 8);
        let first = classify_simultaneous(&test, &models, Init::Marginal, 0).unwrap();
        let again =
            classify_simultaneous(&test, &models, Init::Given(first.labels.clone()), 0).unwrap();
        assert_eq!(again.labels, first.labels);
        assert_eq!(again.iterations, Some(1));
        assert!(again.score_gains.is_empty());
    }

    #[test]
    fn leave_one_out_roundtrip() {
        let train = single_feature_data(&[0, 0, 1]);
        let mut model = empty_graph_model(1, &train);
        let before = model.log_predictive_row(None, &[0]);
        model.unlearn_row(&[0]);
        assert_eq!(model.train_rows(), 2);
        let during = model.log_predictive_row(None, &[0]);
        assert!(during < before);
        model.learn_row(&[0]);
        let after = model.log_predictive_row(None, &[0]);
        assert_eq!(model.train_rows(), 3);
        assert!((before - after).abs() < TOL);
    }
}
