//! Exact log-domain marginal likelihood of categorical data under a
//! decomposable stratified graph, and the posterior-predictive variant that
//! conditions on previously observed counts.
//!
//! All probability arithmetic stays in the natural-log domain and goes
//! through the log-gamma function; no raw gamma values are ever formed.

use statrs::function::gamma::ln_gamma;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::strata::{OutcomeSpace, ParentGrouping, StratifiedGraph};

/// A natural-log probability. Valid inputs always produce finite values;
/// minus infinity appears only as an explicit sentinel.
pub type LogScore = f64;

/// Prior strength for the Dirichlet hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    /// Total prior weight (equivalent sample size), distributed over each
    /// variable's parent-outcome/value cells.
    pub equivalent_sample_size: f64,
}

impl HyperParams {
    pub fn new(equivalent_sample_size: f64) -> Result<Self> {
        if !(equivalent_sample_size > 0.0) || !equivalent_sample_size.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "equivalent sample size must be positive, got {equivalent_sample_size}"
            )));
        }
        Ok(HyperParams {
            equivalent_sample_size,
        })
    }
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            equivalent_sample_size: 1.0,
        }
    }
}

/// Dirichlet hyperparameters aligned with a [`ParentGrouping`]:
/// `value(pos, group, i)` is the prior weight of outcome `i` for the
/// variable at ordering position `pos` under parent group `group`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaTable {
    table: Vec<Vec<Vec<f64>>>,
}

impl AlphaTable {
    pub fn value(&self, pos: usize, group: usize, i: usize) -> f64 {
        self.table[pos][group][i]
    }

    pub fn group_total(&self, pos: usize, group: usize) -> f64 {
        self.table[pos][group].iter().sum()
    }
}

/// Hyperparameters for one grouping: each cell gets
/// `N * group_size / (parent_outcomes * cardinality)`, so grouped outcomes
/// pool the prior weight of their members.
pub fn derive_alpha(hp: &HyperParams, grouping: &ParentGrouping) -> AlphaTable {
    let n = hp.equivalent_sample_size;
    let mut table = Vec::with_capacity(grouping.len());
    for pos in 0..grouping.len() {
        let k = grouping.card(pos);
        let pi = grouping.parent_space(pos) as f64;
        let per_group: Vec<Vec<f64>> = (0..grouping.group_count(pos))
            .map(|g| {
                let lambda = grouping.group_size(pos, g) as f64;
                vec![n * lambda / (pi * k as f64); k]
            })
            .collect();
        table.push(per_group);
    }
    AlphaTable { table }
}

/// Sufficient statistics aligned with a [`ParentGrouping`]:
/// `count(pos, group, i)` observations had value `i` for the variable at
/// `pos` while their parent outcome fell in `group`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    counts: Vec<Vec<Vec<u64>>>,
}

impl CountTable {
    pub fn zeros(grouping: &ParentGrouping) -> Self {
        let counts = (0..grouping.len())
            .map(|pos| vec![vec![0u64; grouping.card(pos)]; grouping.group_count(pos)])
            .collect();
        CountTable { counts }
    }

    pub fn count(&self, pos: usize, group: usize, i: usize) -> u64 {
        self.counts[pos][group][i]
    }

    /// Observations whose parent outcome fell in `group`.
    pub fn parent_count(&self, pos: usize, group: usize) -> u64 {
        self.counts[pos][group].iter().sum()
    }

    /// Total observations (identical for every variable of the clique).
    pub fn total(&self) -> u64 {
        match self.counts.first() {
            Some(groups) => groups.iter().map(|vals| vals.iter().sum::<u64>()).sum(),
            None => 0,
        }
    }

    pub fn add_row(&mut self, grouping: &ParentGrouping, row: &[u8]) {
        for pos in 0..grouping.len() {
            let group = grouping.group_of(pos, grouping.parent_index(pos, row));
            self.counts[pos][group][row[pos] as usize] += 1;
        }
    }

    pub fn remove_row(&mut self, grouping: &ParentGrouping, row: &[u8]) {
        for pos in 0..grouping.len() {
            let group = grouping.group_of(pos, grouping.parent_index(pos, row));
            let cell = &mut self.counts[pos][group][row[pos] as usize];
            debug_assert!(*cell > 0, "removing an observation that was never counted");
            *cell -= 1;
        }
    }
}

/// Exact counts for data whose columns match the grouping's ordering.
pub fn count_stats(data: &DataMatrix, grouping: &ParentGrouping) -> Result<CountTable> {
    if data.n_cols() != grouping.len() {
        return Err(Error::InvalidArgument(format!(
            "data has {} columns but the grouping covers {} variables",
            data.n_cols(),
            grouping.len()
        )));
    }
    for pos in 0..grouping.len() {
        if data.cards()[pos] > grouping.card(pos) {
            return Err(Error::DataValidation(format!(
                "column {pos} allows {} categories but the grouping expects {}",
                data.cards()[pos],
                grouping.card(pos)
            )));
        }
    }
    let mut table = CountTable::zeros(grouping);
    for row in data.rows_iter() {
        table.add_row(grouping, row);
    }
    Ok(table)
}

/// Counts for a clique taken from a full-width matrix: ordering entries are
/// interpreted as column indices of `data`.
pub(crate) fn count_stats_full(data: &DataMatrix, grouping: &ParentGrouping) -> CountTable {
    let mut table = CountTable::zeros(grouping);
    let mut buf = vec![0u8; grouping.len()];
    for row in data.rows_iter() {
        for (slot, &v) in grouping.ordering().iter().enumerate() {
            buf[slot] = row[v];
        }
        table.add_row(grouping, &buf);
    }
    table
}

/// Log marginal likelihood of one clique (or separator): the product over
/// variables, parent groups, and values of Dirichlet-multinomial terms.
pub fn clique_marginal_likelihood(counts: &CountTable, alphas: &AlphaTable) -> LogScore {
    let mut log_score = 0.0;
    for (pos, groups) in counts.counts.iter().enumerate() {
        for (group, vals) in groups.iter().enumerate() {
            let alpha_total = alphas.group_total(pos, group);
            let n_parent: u64 = vals.iter().sum();
            log_score += ln_gamma(alpha_total) - ln_gamma(n_parent as f64 + alpha_total);
            for (i, &n) in vals.iter().enumerate() {
                let a = alphas.value(pos, group, i);
                log_score += ln_gamma(n as f64 + a) - ln_gamma(a);
            }
        }
    }
    log_score
}

/// Evaluate the clique marginal likelihood of `test` counts with the
/// hyperparameters updated by `train` counts (posterior predictive).
pub fn posterior_predictive(
    test: &CountTable,
    train: &CountTable,
    alphas: &AlphaTable,
) -> LogScore {
    let mut log_score = 0.0;
    for (pos, groups) in test.counts.iter().enumerate() {
        for (group, vals) in groups.iter().enumerate() {
            let mut beta_total = 0.0;
            for i in 0..vals.len() {
                beta_total += alphas.value(pos, group, i) + train.count(pos, group, i) as f64;
            }
            let n_parent: u64 = vals.iter().sum();
            log_score += ln_gamma(beta_total) - ln_gamma(n_parent as f64 + beta_total);
            for (i, &n) in vals.iter().enumerate() {
                let beta = alphas.value(pos, group, i) + train.count(pos, group, i) as f64;
                log_score += ln_gamma(n as f64 + beta) - ln_gamma(beta);
            }
        }
    }
    log_score
}

/// The groupings of every junction-tree clique and separator of a stratified
/// graph, with separators carrying negative sign in the factorization.
#[derive(Debug, Clone)]
pub struct GraphFactors {
    pub parts: Vec<(ParentGrouping, f64)>,
}

impl GraphFactors {
    pub fn new(sg: &StratifiedGraph, space: &OutcomeSpace) -> Result<Self> {
        if !sg.is_decomposable_sg() {
            return Err(Error::UnsupportedModel(
                "marginal likelihood requires a decomposable stratified graph".into(),
            ));
        }
        sg.validate_contexts(space)?;
        let jt = sg.graph().junction_tree()?;
        let mut parts = Vec::new();
        for clique in jt.cliques() {
            parts.push((ParentGrouping::for_clique(sg, clique, space)?, 1.0));
        }
        for sep in jt.separators() {
            if sep.is_empty() {
                continue; // empty separators contribute a factor of one
            }
            parts.push((ParentGrouping::singleton(sep, space), -1.0));
        }
        Ok(GraphFactors { parts })
    }
}

/// Log marginal likelihood of a dataset under a decomposable stratified
/// graph: clique scores summed, separator scores subtracted.
pub fn graph_marginal_likelihood(
    data: &DataMatrix,
    sg: &StratifiedGraph,
    hp: &HyperParams,
) -> Result<LogScore> {
    if data.n_cols() != sg.graph().node_count() {
        return Err(Error::InvalidArgument(format!(
            "data has {} columns but the graph has {} nodes",
            data.n_cols(),
            sg.graph().node_count()
        )));
    }
    let space = data.outcome_space();
    let factors = GraphFactors::new(sg, &space)?;
    let mut total = 0.0;
    for (grouping, sign) in &factors.parts {
        let counts = count_stats_full(data, grouping);
        let alphas = derive_alpha(hp, grouping);
        total += sign * clique_marginal_likelihood(&counts, &alphas);
    }
    Ok(total)
}
