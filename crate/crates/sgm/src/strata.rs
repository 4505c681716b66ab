//! Stratified graphs: per-edge context sets under which the edge's endpoints
//! become conditionally independent, decomposability checking for stratified
//! graphs, and the conversion of a stratified clique into a variable ordering
//! plus merged parent-outcome groups.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{Edge, UndirectedGraph};

/// Per-variable outcome cardinalities. Every variable has at least two
/// categories; binary data uses cardinality 2 throughout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSpace {
    cards: Vec<usize>,
}

impl OutcomeSpace {
    pub fn new(cards: Vec<usize>) -> Result<Self> {
        if let Some(k) = cards.iter().find(|&&k| k < 2) {
            return Err(Error::InvalidArgument(format!(
                "variable cardinality must be at least 2, got {k}"
            )));
        }
        if cards.iter().any(|&k| k > u8::MAX as usize + 1) {
            return Err(Error::InvalidArgument(
                "cardinalities above 256 are not supported".into(),
            ));
        }
        Ok(OutcomeSpace { cards })
    }

    /// All-binary space on `n` variables.
    pub fn binary(n: usize) -> Self {
        OutcomeSpace { cards: vec![2; n] }
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn card(&self, v: usize) -> usize {
        self.cards[v]
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    /// Number of joint outcomes over the given variables.
    pub fn joint_size(&self, vars: &[usize]) -> usize {
        vars.iter().map(|&v| self.cards[v]).product()
    }
}

/// A context: one full assignment to the common neighbors of a stratified
/// edge, with values listed in ascending node order.
pub type Context = Vec<u8>;

/// The stratum of an edge: the set of common-neighbor outcomes under which
/// the edge's endpoints are conditionally independent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    pub edge: Edge,
    pub contexts: BTreeSet<Context>,
}

impl Stratum {
    pub fn new(edge: Edge, contexts: impl IntoIterator<Item = Context>) -> Self {
        Stratum {
            edge,
            contexts: contexts.into_iter().collect(),
        }
    }
}

/// An undirected graph together with at most one stratum per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratifiedGraph {
    graph: UndirectedGraph,
    strata: BTreeMap<Edge, BTreeSet<Context>>,
}

/// The nodes adjacent to both endpoints of `edge`, in ascending order.
/// Contexts of a stratum on `edge` are assignments to exactly this set.
pub fn common_neighbors(g: &UndirectedGraph, edge: Edge) -> Result<Vec<usize>> {
    let (u, v) = edge.endpoints();
    if !g.has_edge(u, v) {
        return Err(Error::InvalidArgument(format!(
            "edge {edge} is not in the graph"
        )));
    }
    Ok(g.neighbors(u).filter(|&w| g.has_edge(v, w)).collect())
}

impl StratifiedGraph {
    /// A stratified graph with no strata; equivalent to the plain graph.
    pub fn plain(graph: UndirectedGraph) -> Self {
        StratifiedGraph {
            graph,
            strata: BTreeMap::new(),
        }
    }

    pub fn new(graph: UndirectedGraph, strata: impl IntoIterator<Item = Stratum>) -> Result<Self> {
        let mut map: BTreeMap<Edge, BTreeSet<Context>> = BTreeMap::new();
        for stratum in strata {
            if stratum.contexts.is_empty() {
                continue; // an empty stratum is no stratum at all
            }
            let neighbors = common_neighbors(&graph, stratum.edge)?;
            if neighbors.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "edge {} has no common neighbors and cannot carry a stratum",
                    stratum.edge
                )));
            }
            for ctx in &stratum.contexts {
                if ctx.len() != neighbors.len() {
                    return Err(Error::InvalidArgument(format!(
                        "context on edge {} has {} values but the edge has {} common neighbors",
                        stratum.edge,
                        ctx.len(),
                        neighbors.len()
                    )));
                }
            }
            if map.insert(stratum.edge, stratum.contexts).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "edge {} carries more than one stratum",
                    stratum.edge
                )));
            }
        }
        Ok(StratifiedGraph { graph, strata: map })
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn strata(&self) -> impl Iterator<Item = (Edge, &BTreeSet<Context>)> {
        self.strata.iter().map(|(&e, c)| (e, c))
    }

    pub fn stratum(&self, edge: Edge) -> Option<&BTreeSet<Context>> {
        self.strata.get(&edge)
    }

    pub fn stratified_edges(&self) -> Vec<Edge> {
        self.strata.keys().copied().collect()
    }

    pub fn has_strata(&self) -> bool {
        !self.strata.is_empty()
    }

    /// Drop all strata, keeping the underlying graph.
    pub fn without_strata(&self) -> StratifiedGraph {
        StratifiedGraph::plain(self.graph.clone())
    }

    /// Check context values against the outcome space and require every
    /// stratum to leave at least one context uncovered (a stratum covering
    /// every context would make its edge removable).
    pub fn validate_contexts(&self, space: &OutcomeSpace) -> Result<()> {
        if space.len() != self.graph.node_count() {
            return Err(Error::InvalidArgument(format!(
                "outcome space covers {} variables but the graph has {} nodes",
                space.len(),
                self.graph.node_count()
            )));
        }
        for (&edge, contexts) in &self.strata {
            let neighbors = common_neighbors(&self.graph, edge)?;
            for ctx in contexts {
                for (&v, &val) in neighbors.iter().zip(ctx) {
                    if (val as usize) >= space.card(v) {
                        return Err(Error::DataValidation(format!(
                            "context value {val} for variable {v} exceeds cardinality {}",
                            space.card(v)
                        )));
                    }
                }
            }
            if contexts.len() >= space.joint_size(&neighbors) {
                return Err(Error::InvalidArgument(format!(
                    "stratum on edge {edge} covers every common-neighbor outcome"
                )));
            }
        }
        Ok(())
    }

    /// Decomposability for stratified graphs: the underlying graph is
    /// chordal, no stratified edge lies inside a separator, and within each
    /// clique all stratified edges share at least one node.
    pub fn is_decomposable_sg(&self) -> bool {
        if !self.graph.is_decomposable() {
            return false;
        }
        if self.strata.is_empty() {
            return true;
        }
        let jt = self.graph.junction_tree().expect("graph checked chordal");
        let mut separator_edges: BTreeSet<Edge> = BTreeSet::new();
        for sep in jt.separators() {
            for (i, &u) in sep.iter().enumerate() {
                for &v in &sep[i + 1..] {
                    separator_edges.insert(Edge::new(u, v).unwrap());
                }
            }
        }
        if self.strata.keys().any(|e| separator_edges.contains(e)) {
            return false;
        }
        for clique in jt.cliques() {
            let in_clique: Vec<Edge> = self
                .strata
                .keys()
                .copied()
                .filter(|e| {
                    let (u, v) = e.endpoints();
                    clique.contains(&u) && clique.contains(&v)
                })
                .collect();
            if in_clique.is_empty() {
                continue;
            }
            if common_node(&in_clique).is_none() {
                return false;
            }
        }
        true
    }

    /// Stratified edges lying inside the given clique.
    pub fn clique_strata(&self, clique: &[usize]) -> Vec<(Edge, &BTreeSet<Context>)> {
        self.strata
            .iter()
            .filter(|(e, _)| {
                let (u, v) = e.endpoints();
                clique.contains(&u) && clique.contains(&v)
            })
            .map(|(&e, c)| (e, c))
            .collect()
    }
}

/// A node contained in every edge of the list, preferring the largest index.
fn common_node(edges: &[Edge]) -> Option<usize> {
    let (u, v) = edges[0].endpoints();
    [v, u]
        .into_iter()
        .find(|&cand| edges.iter().all(|e| e.contains(cand)))
}

/// Order a clique's variables for scoring: the node shared by all of the
/// clique's stratified edges goes last (largest index when several qualify),
/// the rest in ascending order. Cliques without strata are simply ascending.
pub fn clique_ordering(sg: &StratifiedGraph, clique: &[usize]) -> Vec<usize> {
    let strat = sg.clique_strata(clique);
    let mut ordering: Vec<usize> = clique.to_vec();
    ordering.sort_unstable();
    if strat.is_empty() {
        return ordering;
    }
    let edges: Vec<Edge> = strat.iter().map(|&(e, _)| e).collect();
    let last = common_node(&edges).unwrap_or_else(|| *ordering.last().unwrap());
    ordering.retain(|&v| v != last);
    ordering.push(last);
    ordering
}

/// For one clique: the scoring order of its variables and, per variable, a
/// partition of the variable's parent outcomes into groups that share a
/// conditional distribution. Only the last variable can have non-singleton
/// groups; they arise by merging parent outcomes across stratum contexts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentGrouping {
    clique: Vec<usize>,
    ordering: Vec<usize>,
    cards: Vec<usize>,
    /// Per position: parent-outcome index -> group id (dense, 0-based).
    group_of: Vec<Vec<usize>>,
    /// Per position: group id -> number of parent outcomes in the group.
    group_sizes: Vec<Vec<usize>>,
}

impl ParentGrouping {
    /// Grouping for a clique of a decomposable stratified graph, applying
    /// the merge rule for every stratum context of the clique's edges.
    pub fn for_clique(
        sg: &StratifiedGraph,
        clique: &[usize],
        space: &OutcomeSpace,
    ) -> Result<Self> {
        let ordering = clique_ordering(sg, clique);
        Self::for_ordering(sg, &ordering, space)
    }

    /// Grouping for separators and plain graphical models: every parent
    /// outcome is its own group.
    pub fn singleton(vars: &[usize], space: &OutcomeSpace) -> Self {
        let mut ordering = vars.to_vec();
        ordering.sort_unstable();
        Self::singleton_ordered(ordering, space)
    }

    fn singleton_ordered(ordering: Vec<usize>, space: &OutcomeSpace) -> Self {
        let cards: Vec<usize> = ordering.iter().map(|&v| space.card(v)).collect();
        let mut clique = ordering.clone();
        clique.sort_unstable();
        let mut group_of = Vec::with_capacity(ordering.len());
        let mut group_sizes = Vec::with_capacity(ordering.len());
        let mut parent_space = 1usize;
        for pos in 0..ordering.len() {
            group_of.push((0..parent_space).collect());
            group_sizes.push(vec![1; parent_space]);
            parent_space *= cards[pos];
        }
        ParentGrouping {
            clique,
            ordering,
            cards,
            group_of,
            group_sizes,
        }
    }

    /// Grouping for an explicit ordering. Exposed for tests that verify the
    /// score does not depend on which valid ordering is chosen; production
    /// code goes through [`ParentGrouping::for_clique`].
    pub fn for_ordering(
        sg: &StratifiedGraph,
        ordering: &[usize],
        space: &OutcomeSpace,
    ) -> Result<Self> {
        let mut grouping = ParentGrouping::singleton_ordered(ordering.to_vec(), space);
        let strat = sg.clique_strata(&grouping.clique);
        if strat.is_empty() {
            return Ok(grouping);
        }
        let last = *ordering.last().unwrap();
        let parents = &ordering[..ordering.len() - 1];
        for (edge, _) in &strat {
            if !edge.contains(last) {
                return Err(Error::UnsupportedModel(format!(
                    "stratified edge {edge} does not contain the last variable {last} \
                     of the clique ordering"
                )));
            }
        }
        let strat_owned: Vec<(Edge, Vec<Context>)> = strat
            .into_iter()
            .map(|(e, ctxs)| (e, ctxs.iter().cloned().collect()))
            .collect();
        let (group_of, group_sizes) =
            merge_parent_groups(sg.graph(), &strat_owned, parents, last, space)?;
        let pos = ordering.len() - 1;
        grouping.group_of[pos] = group_of;
        grouping.group_sizes[pos] = group_sizes;
        Ok(grouping)
    }

    pub fn clique(&self) -> &[usize] {
        &self.clique
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    /// Cardinality of the variable at ordering position `pos`.
    pub fn card(&self, pos: usize) -> usize {
        self.cards[pos]
    }

    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    /// Number of parent outcomes of the variable at `pos` (1 for the first).
    pub fn parent_space(&self, pos: usize) -> usize {
        self.group_of[pos].len()
    }

    /// Number of groups for the variable at `pos`.
    pub fn group_count(&self, pos: usize) -> usize {
        self.group_sizes[pos].len()
    }

    /// Group id of a parent-outcome index for the variable at `pos`.
    pub fn group_of(&self, pos: usize, parent_index: usize) -> usize {
        self.group_of[pos][parent_index]
    }

    /// Number of parent outcomes in the given group.
    pub fn group_size(&self, pos: usize, group: usize) -> usize {
        self.group_sizes[pos][group]
    }

    /// Parent-outcome index of a data row for the variable at `pos`. Columns
    /// of `row` correspond to ordering positions.
    pub fn parent_index(&self, pos: usize, row: &[u8]) -> usize {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for t in 0..pos {
            idx += row[t] as usize * stride;
            stride *= self.cards[t];
        }
        idx
    }

    /// Materialize the groups of the variable at `pos` as explicit parent
    /// assignments (values in ordering-position order).
    pub fn group_members(&self, pos: usize) -> Vec<Vec<Vec<u8>>> {
        let mut groups = vec![Vec::new(); self.group_count(pos)];
        for (parent_index, &g) in self.group_of[pos].iter().enumerate() {
            let mut vals = Vec::with_capacity(pos);
            let mut rem = parent_index;
            for t in 0..pos {
                vals.push((rem % self.cards[t]) as u8);
                rem /= self.cards[t];
            }
            groups[g].push(vals);
        }
        groups
    }

    /// A stable fingerprint of the grouping, used as a score-cache key.
    pub(crate) fn cache_key(&self) -> Vec<u8> {
        let mut key = Vec::new();
        for &v in &self.ordering {
            key.extend_from_slice(&(v as u32).to_le_bytes());
        }
        key.push(0xff);
        for per_var in &self.group_of {
            for &g in per_var {
                key.extend_from_slice(&(g as u16).to_le_bytes());
            }
            key.push(0xfe);
        }
        key
    }
}

/// Merge parent outcomes of `last` according to the stratum contexts of the
/// clique's stratified edges. Two parent outcomes fall in one group when a
/// chain of context merges connects them: each context `x_L` on an edge
/// `{c, last}` merges the outcomes that agree with `x_L` on the common
/// neighbors and with each other on every parent except `c`.
///
/// Returns (parent index -> group id, group id -> size), with group ids
/// numbered by each group's smallest parent index.
pub(crate) fn merge_parent_groups(
    g: &UndirectedGraph,
    strata: &[(Edge, Vec<Context>)],
    parents: &[usize],
    last: usize,
    space: &OutcomeSpace,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let parent_cards: Vec<usize> = parents.iter().map(|&v| space.card(v)).collect();
    let total: usize = parent_cards.iter().product();
    let mut uf = UnionFind::new(total);

    let decode = |idx: usize| -> Vec<u8> {
        let mut vals = Vec::with_capacity(parents.len());
        let mut rem = idx;
        for &k in &parent_cards {
            vals.push((rem % k) as u8);
            rem /= k;
        }
        vals
    };

    for &(edge, ref contexts) in strata {
        let c = edge.other(last);
        let cpos = parents.iter().position(|&v| v == c).ok_or_else(|| {
            Error::UnsupportedModel(format!(
                "stratified edge {edge} has endpoint {c} outside the clique parents"
            ))
        })?;
        let neighbors = common_neighbors(g, edge)?;
        // Positions (within the parent list) of common neighbors, paired
        // with the context slot that assigns their value. For decomposable
        // stratified graphs the common neighbors are exactly the parents
        // other than `c`.
        let anchored: Vec<(usize, usize)> = neighbors
            .iter()
            .enumerate()
            .filter_map(|(slot, &v)| parents.iter().position(|&p| p == v).map(|pp| (pp, slot)))
            .collect();
        for ctx in contexts {
            // Within this context, group outcomes by their values on every
            // parent except `c`; each such group collapses to one class.
            let mut rep: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
            for idx in 0..total {
                let vals = decode(idx);
                if anchored.iter().any(|&(pp, slot)| vals[pp] != ctx[slot]) {
                    continue;
                }
                let mut key = vals;
                key.remove(cpos);
                match rep.entry(key) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(idx);
                    }
                    std::collections::btree_map::Entry::Occupied(e) => {
                        uf.union(*e.get(), idx);
                    }
                }
            }
        }
    }

    let mut group_ids: BTreeMap<usize, usize> = BTreeMap::new();
    let mut group_of = vec![0usize; total];
    let mut group_sizes = Vec::new();
    for idx in 0..total {
        let root = uf.find(idx);
        let next = group_ids.len();
        let gid = *group_ids.entry(root).or_insert(next);
        if gid == group_sizes.len() {
            group_sizes.push(0);
        }
        group_of[idx] = gid;
        group_sizes[gid] += 1;
    }
    Ok((group_of, group_sizes))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so group numbering follows smallest members.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}
