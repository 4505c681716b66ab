//! Score-based structure search: greedy hill climbing over single-edge moves
//! for the graph, then over single-context moves for the strata, maximizing
//! the marginal likelihood of the training data.

use std::collections::HashMap;

use crate::classify::ClassModel;
use crate::data::{validate_labels, DataMatrix};
use crate::error::{Error, Result};
use crate::generate::derive_seed;
use crate::graph::{Edge, JunctionTree, UndirectedGraph};
use crate::score::{
    clique_marginal_likelihood, count_stats_full, derive_alpha, HyperParams, LogScore,
};
use crate::strata::{OutcomeSpace, ParentGrouping, StratifiedGraph, Stratum};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Knobs for the greedy searches.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Largest clique allowed during graph search (at least 2).
    pub max_clique_size: usize,
    /// Extra hill-climbing runs from random chordal starting graphs; the
    /// best-scoring local optimum wins.
    pub restarts: usize,
    pub seed: u64,
    /// Whether class-model learning runs the stratum search after the graph
    /// search.
    pub stratum_search_enabled: bool,
    /// Equivalent sample size forwarded to the scoring prior.
    pub equivalent_sample_size: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_clique_size: 5,
            restarts: 0,
            seed: 0,
            stratum_search_enabled: true,
            equivalent_sample_size: 1.0,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<HyperParams> {
        if self.max_clique_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "max clique size must be at least 2, got {}",
                self.max_clique_size
            )));
        }
        HyperParams::new(self.equivalent_sample_size)
    }
}

/// A single search move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Init,
    AddEdge(usize, usize),
    RemoveEdge(usize, usize),
    AddContext(usize, usize, Vec<u8>),
    RemoveContext(usize, usize, Vec<u8>),
}

impl std::fmt::Display for Move {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn ctx(vals: &[u8]) -> String {
            vals.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("")
        }
        match self {
            Move::Init => write!(f, "init"),
            Move::AddEdge(u, v) => write!(f, "add-edge {u}-{v}"),
            Move::RemoveEdge(u, v) => write!(f, "remove-edge {u}-{v}"),
            Move::AddContext(u, v, c) => write!(f, "add-context {u}-{v}:{}", ctx(c)),
            Move::RemoveContext(u, v, c) => write!(f, "remove-context {u}-{v}:{}", ctx(c)),
        }
    }
}

/// One entry of a search trace: the accepted move and the score after it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub accepted: Move,
    pub log_score: LogScore,
}

/// Result of a structure search.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedModel {
    pub sg: StratifiedGraph,
    pub train_log_score: LogScore,
    pub search_trace: Vec<TraceRecord>,
}

/// Memoizes clique and separator scores across candidate evaluations. The
/// same cliques recur constantly during greedy search, so nearly every
/// candidate move needs only one or two fresh counting passes.
struct ScoreCache<'a> {
    data: &'a DataMatrix,
    space: OutcomeSpace,
    hp: HyperParams,
    memo: HashMap<Vec<u8>, f64>,
}

impl<'a> ScoreCache<'a> {
    fn new(data: &'a DataMatrix, hp: HyperParams) -> Self {
        ScoreCache {
            data,
            space: data.outcome_space(),
            hp,
            memo: HashMap::new(),
        }
    }

    fn part_score(&mut self, grouping: &ParentGrouping) -> f64 {
        let key = grouping.cache_key();
        if let Some(&s) = self.memo.get(&key) {
            return s;
        }
        let counts = count_stats_full(self.data, grouping);
        let alphas = derive_alpha(&self.hp, grouping);
        let s = clique_marginal_likelihood(&counts, &alphas);
        self.memo.insert(key, s);
        s
    }

    /// Score of a plain graph (no strata) given its junction tree.
    fn graph_score(&mut self, jt: &JunctionTree) -> f64 {
        let mut total = 0.0;
        for clique in jt.cliques() {
            total += self.part_score(&ParentGrouping::singleton(clique, &self.space));
        }
        for sep in jt.separators() {
            if !sep.is_empty() {
                total -= self.part_score(&ParentGrouping::singleton(sep, &self.space));
            }
        }
        total
    }

    /// Score of a stratified graph given the junction tree of its underlying
    /// graph.
    fn sg_score(&mut self, sg: &StratifiedGraph, jt: &JunctionTree) -> Result<f64> {
        let mut total = 0.0;
        for clique in jt.cliques() {
            let grouping = ParentGrouping::for_clique(sg, clique, &self.space)?;
            total += self.part_score(&grouping);
        }
        for sep in jt.separators() {
            if !sep.is_empty() {
                total -= self.part_score(&ParentGrouping::singleton(sep, &self.space));
            }
        }
        Ok(total)
    }
}

/// A junction tree legal for search: chordal with all cliques within the cap.
fn capped_junction_tree(g: &UndirectedGraph, cap: usize) -> Option<JunctionTree> {
    let jt = g.junction_tree().ok()?;
    if jt.cliques().iter().any(|c| c.len() > cap) {
        return None;
    }
    Some(jt)
}

/// Greedy hill climbing over single-edge additions and removals, starting
/// from the empty graph (plus optional random chordal restarts). A move is
/// legal when the resulting graph stays chordal and respects the clique cap;
/// the best strictly improving move is taken each iteration.
pub fn learn_graph(data: &DataMatrix, cfg: &SearchConfig) -> Result<LearnedModel> {
    let hp = cfg.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::InvalidArgument(
            "cannot learn structure from empty data".into(),
        ));
    }
    let d = data.n_cols();
    let mut cache = ScoreCache::new(data, hp);
    let mut best: Option<(UndirectedGraph, f64, Vec<TraceRecord>)> = None;
    for restart in 0..=cfg.restarts {
        let start = if restart == 0 {
            UndirectedGraph::new(d)?
        } else {
            random_chordal_graph(d, cfg, restart)
        };
        let (g, score, trace) = climb_edges(start, &mut cache, cfg)?;
        if best.as_ref().map_or(true, |(_, s, _)| score > *s) {
            best = Some((g, score, trace));
        }
    }
    let (g, score, trace) = best.expect("at least one climb ran");
    Ok(LearnedModel {
        sg: StratifiedGraph::plain(g),
        train_log_score: score,
        search_trace: trace,
    })
}

fn climb_edges(
    start: UndirectedGraph,
    cache: &mut ScoreCache,
    cfg: &SearchConfig,
) -> Result<(UndirectedGraph, f64, Vec<TraceRecord>)> {
    let d = start.node_count();
    let jt = capped_junction_tree(&start, cfg.max_clique_size)
        .ok_or_else(|| Error::UnsupportedGraph("starting graph violates the clique cap".into()))?;
    let mut g = start;
    let mut score = cache.graph_score(&jt);
    let mut trace = vec![TraceRecord {
        iteration: 0,
        accepted: Move::Init,
        log_score: score,
    }];
    loop {
        let mut best: Option<(Move, f64, UndirectedGraph)> = None;
        for u in 0..d {
            for v in (u + 1)..d {
                let mut g2 = g.clone();
                let mv = if g.has_edge(u, v) {
                    g2.remove_edge(u, v)?;
                    Move::RemoveEdge(u, v)
                } else {
                    g2.add_edge(u, v)?;
                    Move::AddEdge(u, v)
                };
                let Some(jt2) = capped_junction_tree(&g2, cfg.max_clique_size) else {
                    continue;
                };
                let s = cache.graph_score(&jt2);
                // Strictly-improving moves only; the first of equally good
                // moves wins, so ties resolve to the smallest descriptor.
                if s > score && best.as_ref().map_or(true, |(_, bs, _)| s > *bs) {
                    best = Some((mv, s, g2));
                }
            }
        }
        match best {
            Some((mv, s, g2)) => {
                g = g2;
                score = s;
                trace.push(TraceRecord {
                    iteration: trace.len(),
                    accepted: mv,
                    log_score: s,
                });
            }
            None => break,
        }
    }
    Ok((g, score, trace))
}

/// A random chordal graph within the clique cap: random edge additions,
/// keeping only those that preserve legality.
fn random_chordal_graph(d: usize, cfg: &SearchConfig, restart: usize) -> UndirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x5e37, restart as u64]));
    let mut g = UndirectedGraph::new(d).expect("checked d >= 1");
    if d < 2 {
        return g;
    }
    let attempts = rng.random_range(0..=3 * d);
    for _ in 0..attempts {
        let u = rng.random_range(0..d);
        let v = rng.random_range(0..d);
        if u == v || g.has_edge(u, v) {
            continue;
        }
        g.add_edge(u, v).expect("nodes in range");
        if capped_junction_tree(&g, cfg.max_clique_size).is_none() {
            g.remove_edge(u, v).expect("edge just added");
        }
    }
    g
}

/// Greedy search over stratum contexts with the graph held fixed: candidate
/// moves add or remove a single context on an eligible edge, and a move is
/// legal when the stratified graph stays decomposable and no stratum covers
/// its whole context space.
pub fn learn_strata(
    data: &DataMatrix,
    g: &UndirectedGraph,
    cfg: &SearchConfig,
) -> Result<LearnedModel> {
    let hp = cfg.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::InvalidArgument(
            "cannot learn strata from empty data".into(),
        ));
    }
    if data.n_cols() != g.node_count() {
        return Err(Error::InvalidArgument(format!(
            "data has {} columns but the graph has {} nodes",
            data.n_cols(),
            g.node_count()
        )));
    }
    if !g.is_decomposable() {
        return Err(Error::UnsupportedGraph(
            "stratum search requires a chordal graph".into(),
        ));
    }
    let space = data.outcome_space();
    let jt = g.junction_tree()?;
    let mut cache = ScoreCache::new(data, hp);

    // Eligible edges: common neighbors exist and the edge avoids separators.
    let mut separator_pairs: Vec<Edge> = Vec::new();
    for sep in jt.separators() {
        for (i, &u) in sep.iter().enumerate() {
            for &v in &sep[i + 1..] {
                separator_pairs.push(Edge::new(u, v)?);
            }
        }
    }
    let mut candidates: Vec<(Edge, Vec<usize>)> = Vec::new();
    for edge in g.edges() {
        if separator_pairs.contains(&edge) {
            continue;
        }
        let neighbors = crate::strata::common_neighbors(g, edge)?;
        if !neighbors.is_empty() {
            candidates.push((edge, neighbors));
        }
    }

    let mut sg = StratifiedGraph::plain(g.clone());
    let mut score = cache.sg_score(&sg, &jt)?;
    let mut trace = vec![TraceRecord {
        iteration: 0,
        accepted: Move::Init,
        log_score: score,
    }];
    loop {
        let mut best: Option<(Move, f64, StratifiedGraph)> = None;
        for (edge, neighbors) in &candidates {
            let full = space.joint_size(neighbors);
            let current: Vec<Vec<u8>> = sg
                .stratum(*edge)
                .map(|ctxs| ctxs.iter().cloned().collect())
                .unwrap_or_default();
            for idx in 0..full {
                let ctx = decode_context(idx, neighbors, &space);
                let adding = !current.contains(&ctx);
                if adding && current.len() + 1 >= full {
                    continue; // a stratum must leave some context uncovered
                }
                let mut contexts = current.clone();
                if adding {
                    contexts.push(ctx.clone());
                } else {
                    contexts.retain(|c| c != &ctx);
                }
                let mut strata: Vec<Stratum> = sg
                    .strata()
                    .filter(|(e, _)| e != edge)
                    .map(|(e, ctxs)| Stratum::new(e, ctxs.iter().cloned()))
                    .collect();
                if !contexts.is_empty() {
                    strata.push(Stratum::new(*edge, contexts));
                }
                let cand = StratifiedGraph::new(g.clone(), strata)?;
                if !cand.is_decomposable_sg() {
                    continue;
                }
                let s = cache.sg_score(&cand, &jt)?;
                if s > score && best.as_ref().map_or(true, |(_, bs, _)| s > *bs) {
                    let (u, v) = edge.endpoints();
                    let mv = if adding {
                        Move::AddContext(u, v, ctx)
                    } else {
                        Move::RemoveContext(u, v, ctx)
                    };
                    best = Some((mv, s, cand));
                }
            }
        }
        match best {
            Some((mv, s, cand)) => {
                sg = cand;
                score = s;
                trace.push(TraceRecord {
                    iteration: trace.len(),
                    accepted: mv,
                    log_score: s,
                });
            }
            None => break,
        }
    }
    Ok(LearnedModel {
        sg,
        train_log_score: score,
        search_trace: trace,
    })
}

fn decode_context(mut idx: usize, neighbors: &[usize], space: &OutcomeSpace) -> Vec<u8> {
    let mut ctx = Vec::with_capacity(neighbors.len());
    for &v in neighbors {
        let k = space.card(v);
        ctx.push((idx % k) as u8);
        idx /= k;
    }
    ctx
}

/// Search trace of one class, tagged by phase and feature group.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTraceRow {
    pub class_id: usize,
    pub phase: &'static str,
    pub group: usize,
    pub record: TraceRecord,
}

/// Learn one model per class: graph search, then (when enabled) stratum
/// search, each independently per feature group when a partition is given.
/// Per-class searches use seeds derived from `cfg.seed`, so results are
/// reproducible and classes do not share randomness.
pub fn learn_class_models(
    training: &DataMatrix,
    labels: &[usize],
    cfg: &SearchConfig,
    groups: Option<&[Vec<usize>]>,
) -> Result<Vec<ClassModel>> {
    Ok(learn_class_models_traced(training, labels, cfg, groups)?
        .into_iter()
        .map(|(model, _)| model)
        .collect())
}

/// As [`learn_class_models`], also returning the search trace per class.
pub fn learn_class_models_traced(
    training: &DataMatrix,
    labels: &[usize],
    cfg: &SearchConfig,
    groups: Option<&[Vec<usize>]>,
) -> Result<Vec<(ClassModel, Vec<ClassTraceRow>)>> {
    let hp = cfg.validate()?;
    let k = validate_labels(labels, training.n_rows(), true)?;
    let d = training.n_cols();
    let partition: Vec<Vec<usize>> = match groups {
        Some(gs) => {
            let mut seen = vec![false; d];
            for group in gs {
                for &c in group {
                    if c >= d || seen[c] {
                        return Err(Error::InvalidArgument(
                            "feature groups must partition the columns".into(),
                        ));
                    }
                    seen[c] = true;
                }
            }
            if !seen.iter().all(|&s| s) {
                return Err(Error::InvalidArgument(
                    "feature groups must cover every column".into(),
                ));
            }
            gs.to_vec()
        }
        None => vec![(0..d).collect()],
    };

    let mut out = Vec::with_capacity(k);
    for class in 1..=k {
        let rows: Vec<usize> = (0..training.n_rows())
            .filter(|&i| labels[i] == class)
            .collect();
        let class_data = training.select_rows(&rows)?;
        let mut graph = UndirectedGraph::new(d)?;
        let mut strata: Vec<Stratum> = Vec::new();
        let mut trace = Vec::new();
        for (gi, group) in partition.iter().enumerate() {
            let sub = class_data.select_columns(group)?;
            let mut sub_cfg = cfg.clone();
            sub_cfg.seed = derive_seed(cfg.seed, &[class as u64, gi as u64]);
            let learned = learn_graph(&sub, &sub_cfg)?;
            for r in &learned.search_trace {
                trace.push(ClassTraceRow {
                    class_id: class,
                    phase: "graph",
                    group: gi,
                    record: remap_record(r, group),
                });
            }
            let local_graph = learned.sg.graph().clone();
            let with_strata = if cfg.stratum_search_enabled {
                let learned = learn_strata(&sub, &local_graph, &sub_cfg)?;
                for r in &learned.search_trace {
                    trace.push(ClassTraceRow {
                        class_id: class,
                        phase: "strata",
                        group: gi,
                        record: remap_record(r, group),
                    });
                }
                learned.sg
            } else {
                StratifiedGraph::plain(local_graph)
            };
            merge_into_global(&with_strata, group, &mut graph, &mut strata)?;
        }
        let sg = StratifiedGraph::new(graph, strata)?;
        let model = ClassModel::fit(class, sg, &class_data, hp)?;
        out.push((model, trace));
    }
    Ok(out)
}

fn remap_record(record: &TraceRecord, group: &[usize]) -> TraceRecord {
    let accepted = match &record.accepted {
        Move::Init => Move::Init,
        Move::AddEdge(u, v) => Move::AddEdge(group[*u], group[*v]),
        Move::RemoveEdge(u, v) => Move::RemoveEdge(group[*u], group[*v]),
        Move::AddContext(u, v, c) => Move::AddContext(group[*u], group[*v], c.clone()),
        Move::RemoveContext(u, v, c) => Move::RemoveContext(group[*u], group[*v], c.clone()),
    };
    TraceRecord {
        iteration: record.iteration,
        accepted,
        log_score: record.log_score,
    }
}

/// Translate a group-local stratified graph onto the global node ids.
fn merge_into_global(
    local: &StratifiedGraph,
    group: &[usize],
    graph: &mut UndirectedGraph,
    strata: &mut Vec<Stratum>,
) -> Result<()> {
    for e in local.graph().edges() {
        let (u, v) = e.endpoints();
        graph.add_edge(group[u], group[v])?;
    }
    for (e, contexts) in local.strata() {
        let (u, v) = e.endpoints();
        let global_edge = Edge::new(group[u], group[v])?;
        let local_neighbors = crate::strata::common_neighbors(local.graph(), e)?;
        // Context values follow ascending node order; re-sort them for the
        // global ids in case the group mapping is not monotone.
        let mut order: Vec<usize> = (0..local_neighbors.len()).collect();
        order.sort_by_key(|&slot| group[local_neighbors[slot]]);
        let contexts = contexts
            .iter()
            .map(|ctx| order.iter().map(|&slot| ctx[slot]).collect::<Vec<u8>>());
        strata.push(Stratum::new(global_edge, contexts));
    }
    Ok(())
}
