//! Undirected graphs with separation queries, decomposability testing,
//! maximal-clique enumeration, and junction-tree construction.
//!
//! Nodes are dense integer indices `0..n`. Display names, when any exist,
//! live with the dataset and model files, not here.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// An undirected edge, stored with the smaller endpoint first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(usize, usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidArgument(format!("self-loop on node {a}")));
        }
        Ok(Edge(a.min(b), a.max(b)))
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.0, self.1)
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0 == v || self.1 == v
    }

    /// The endpoint that is not `v`. Panics if `v` is not an endpoint.
    pub fn other(&self, v: usize) -> usize {
        if self.0 == v {
            self.1
        } else {
            assert_eq!(self.1, v, "node {v} is not an endpoint of {self:?}");
            self.0
        }
    }
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{},{}}}", self.0, self.1)
    }
}

/// A simple undirected graph on nodes `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    adj: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    /// An edgeless graph on `n` nodes (`n >= 1`).
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "graph needs at least one node".into(),
            ));
        }
        Ok(UndirectedGraph {
            n,
            adj: vec![BTreeSet::new(); n],
        })
    }

    pub fn with_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n)?;
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.n {
            return Err(Error::InvalidArgument(format!(
                "node {v} out of range for graph on {} nodes",
                self.n
            )));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(Error::InvalidArgument(format!("self-loop on node {u}")));
        }
        self.adj[u].insert(v);
        self.adj[v].insert(u);
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.check_node(u)?;
        self.check_node(v)?;
        self.adj[u].remove(&v);
        self.adj[v].remove(&u);
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].contains(&v)
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().copied()
    }

    /// All edges, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for &v in self.adj[u].range(u + 1..) {
                out.push(Edge(u, v));
            }
        }
        out
    }

    /// True iff every path from a node in `a` to a node in `b` passes through
    /// `s`, i.e. removing `s` disconnects `a` from `b`.
    ///
    /// The three sets must be pairwise disjoint and `a`, `b` non-empty.
    pub fn separates(&self, a: &[usize], b: &[usize], s: &[usize]) -> Result<bool> {
        for &v in a.iter().chain(b).chain(s) {
            self.check_node(v)?;
        }
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidArgument(
                "separation query with empty node set".into(),
            ));
        }
        let a: BTreeSet<usize> = a.iter().copied().collect();
        let b: BTreeSet<usize> = b.iter().copied().collect();
        let s: BTreeSet<usize> = s.iter().copied().collect();
        if !a.is_disjoint(&b) || !a.is_disjoint(&s) || !b.is_disjoint(&s) {
            return Err(Error::InvalidArgument(
                "separation query requires pairwise disjoint node sets".into(),
            ));
        }
        // BFS from a avoiding s; separated iff b is never reached.
        let mut seen = vec![false; self.n];
        let mut queue: Vec<usize> = a.iter().copied().collect();
        for &v in &queue {
            seen[v] = true;
        }
        while let Some(v) = queue.pop() {
            if b.contains(&v) {
                return Ok(false);
            }
            for &w in &self.adj[v] {
                if !seen[w] && !s.contains(&w) {
                    seen[w] = true;
                    queue.push(w);
                }
            }
        }
        Ok(true)
    }

    /// Maximum cardinality search visit order. Ties go to the smallest index,
    /// so the order is deterministic.
    pub fn mcs_order(&self) -> Vec<usize> {
        let mut weight = vec![0usize; self.n];
        let mut visited = vec![false; self.n];
        let mut order = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let v = (0..self.n)
                .filter(|&v| !visited[v])
                .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
                .expect("unvisited node exists");
            visited[v] = true;
            order.push(v);
            for &w in &self.adj[v] {
                if !visited[w] {
                    weight[w] += 1;
                }
            }
        }
        order
    }

    /// True iff the graph is decomposable (chordal): no chordless cycle on
    /// four or more nodes. Runs maximum cardinality search and verifies that
    /// the reversed visit order is a perfect elimination ordering.
    pub fn is_decomposable(&self) -> bool {
        let order = self.mcs_order();
        let mut pos = vec![0usize; self.n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        for (i, &v) in order.iter().enumerate() {
            // Earlier-visited neighbors of v must form a clique; it suffices
            // to check they are all adjacent to the latest-visited one.
            let prior: Vec<usize> = self.adj[v]
                .iter()
                .copied()
                .filter(|&w| pos[w] < i)
                .collect();
            if let Some(&p) = prior.iter().max_by_key(|&&w| pos[w]) {
                for &w in &prior {
                    if w != p && !self.adj[p].contains(&w) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// The maximal cliques of a decomposable graph, each sorted, in
    /// lexicographic order. Rejects non-chordal graphs.
    pub fn maximal_cliques(&self) -> Result<Vec<Vec<usize>>> {
        if !self.is_decomposable() {
            return Err(Error::UnsupportedGraph(
                "maximal-clique enumeration requires a decomposable graph".into(),
            ));
        }
        let order = self.mcs_order();
        let mut pos = vec![0usize; self.n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        // Candidate cliques: each vertex together with its earlier-visited
        // neighbors. Every maximal clique of a chordal graph appears here.
        let mut cands: Vec<BTreeSet<usize>> = Vec::with_capacity(self.n);
        for (i, &v) in order.iter().enumerate() {
            let mut c: BTreeSet<usize> = self.adj[v]
                .iter()
                .copied()
                .filter(|&w| pos[w] < i)
                .collect();
            c.insert(v);
            cands.push(c);
        }
        let mut maximal: Vec<BTreeSet<usize>> = Vec::new();
        for c in cands {
            if !maximal.iter().any(|m| c.is_subset(m)) {
                maximal.retain(|m| !m.is_subset(&c));
                maximal.push(c);
            }
        }
        let mut out: Vec<Vec<usize>> = maximal
            .into_iter()
            .map(|c| c.into_iter().collect())
            .collect();
        out.sort();
        Ok(out)
    }

    /// Junction tree of a decomposable graph: cliques in an order satisfying
    /// the running intersection property, with one separator per non-root
    /// clique (possibly empty for disconnected graphs).
    pub fn junction_tree(&self) -> Result<JunctionTree> {
        self.junction_tree_from(0)
    }

    /// Junction tree rooted at the clique with the given index into the
    /// lexicographically sorted clique list. Rooting changes which clique
    /// carries no separator; sampling uses this freedom.
    pub(crate) fn junction_tree_from(&self, root: usize) -> Result<JunctionTree> {
        let cliques = self.maximal_cliques()?;
        let p = cliques.len();
        if root >= p {
            return Err(Error::InvalidArgument(format!(
                "clique index {root} out of range"
            )));
        }
        // Grow a maximum-weight spanning tree of the clique graph (weights =
        // intersection sizes) starting from the root clique; the visit order
        // then satisfies running intersection.
        let mut visited = vec![false; p];
        let mut order = Vec::with_capacity(p);
        let mut parents: Vec<Option<usize>> = Vec::with_capacity(p);
        visited[root] = true;
        order.push(root);
        parents.push(None);
        while order.len() < p {
            let mut best: Option<(usize, usize, usize)> = None; // (weight, cand, parent)
            for cand in 0..p {
                if visited[cand] {
                    continue;
                }
                for &prev in &order {
                    let w = intersect_sorted(&cliques[cand], &cliques[prev]).len();
                    let better = match best {
                        None => true,
                        // Highest weight first; ties resolve to the smallest
                        // candidate clique, then its earliest-attached parent.
                        Some((bw, bc, _)) => w > bw || (w == bw && cand < bc),
                    };
                    if better {
                        best = Some((w, cand, prev));
                    }
                }
            }
            let (_, cand, parent) = best.expect("some clique remains");
            visited[cand] = true;
            order.push(cand);
            parents.push(Some(parent));
        }
        let cliques_ordered: Vec<Vec<usize>> = order.iter().map(|&i| cliques[i].clone()).collect();
        let separators: Vec<Vec<usize>> = order
            .iter()
            .zip(&parents)
            .skip(1)
            .map(|(&i, parent)| match *parent {
                Some(pidx) => {
                    let pp = order.iter().position(|&x| x == pidx).unwrap();
                    intersect_sorted(&cliques[i], &cliques_ordered[pp])
                }
                None => Vec::new(),
            })
            .collect();
        Ok(JunctionTree {
            cliques: cliques_ordered,
            separators,
        })
    }
}

/// Cliques ordered to satisfy running intersection, and the separator of each
/// non-root clique (its intersection with the union of its predecessors).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionTree {
    cliques: Vec<Vec<usize>>,
    separators: Vec<Vec<usize>>,
}

impl JunctionTree {
    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    /// Separator of clique `i + 1`; the first clique has none.
    pub fn separators(&self) -> &[Vec<usize>] {
        &self.separators
    }
}

pub(crate) fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// The five-node graph used throughout the module docs:
    /// edges {0,1},{0,2},{1,2},{1,3},{2,3},{3,4}.
    pub(crate) fn five_node_graph() -> UndirectedGraph {
        UndirectedGraph::with_edges(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)]).unwrap()
    }

    // Oracle: a graph is chordal iff no induced subgraph is a cycle on >= 4
    // nodes. Checks every node subset, so only usable for small graphs.
    fn chordal_by_enumeration(g: &UndirectedGraph) -> bool {
        let n = g.node_count();
        assert!(n <= 16);
        for mask in 0u32..(1 << n) {
            let nodes: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            if nodes.len() < 4 {
                continue;
            }
            if induced_is_cycle(g, &nodes) {
                return false;
            }
        }
        true
    }

    fn induced_is_cycle(g: &UndirectedGraph, nodes: &[usize]) -> bool {
        // Cycle = connected and every induced degree exactly 2.
        for &v in nodes {
            let deg = nodes.iter().filter(|&&w| g.has_edge(v, w)).count();
            if deg != 2 {
                return false;
            }
        }
        let mut seen = vec![nodes[0]];
        let mut stack = vec![nodes[0]];
        while let Some(v) = stack.pop() {
            for &w in nodes {
                if g.has_edge(v, w) && !seen.contains(&w) {
                    seen.push(w);
                    stack.push(w);
                }
            }
        }
        seen.len() == nodes.len()
    }

    // Oracle: enumerate all simple paths from a to b and check each hits s.
    fn separates_by_path_enumeration(
        g: &UndirectedGraph,
        a: &[usize],
        b: &[usize],
        s: &[usize],
    ) -> bool {
        fn dfs(
            g: &UndirectedGraph,
            v: usize,
            b: &[usize],
            s: &[usize],
            on_path: &mut Vec<usize>,
        ) -> bool {
            // Returns true if some simple path from v reaches b avoiding s.
            if b.contains(&v) {
                return !on_path.iter().chain([&v]).any(|x| s.contains(x));
            }
            for w in g.neighbors(v).collect::<Vec<_>>() {
                if on_path.contains(&w) || s.contains(&w) {
                    continue;
                }
                on_path.push(v);
                let found = dfs(g, w, b, s, on_path);
                on_path.pop();
                if found {
                    return true;
                }
            }
            false
        }
        for &start in a {
            if s.contains(&start) {
                continue;
            }
            let mut path = Vec::new();
            if dfs(g, start, b, s, &mut path) {
                return false;
            }
        }
        true
    }

    fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> UndirectedGraph {
        let n = rng.random_range(1..=max_nodes);
        let mut g = UndirectedGraph::new(n).unwrap();
        let density: f64 = rng.random_range(0.0..0.8);
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_bool(density) {
                    g.add_edge(u, v).unwrap();
                }
            }
        }
        g
    }

    #[test]
    fn separates_examples() {
        let g = five_node_graph();
        assert!(g.separates(&[0], &[3], &[1, 2]).unwrap());
        assert!(!g.separates(&[0], &[1], &[]).unwrap());
        assert!(g.separates(&[0], &[4], &[3]).unwrap());
    }

    #[test]
    fn separates_rejects_overlap_and_empty() {
        let g = five_node_graph();
        assert!(matches!(
            g.separates(&[0, 1], &[1], &[2]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            g.separates(&[], &[1], &[2]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            g.separates(&[0], &[1], &[9]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn decomposability_examples() {
        let four_cycle = UndirectedGraph::with_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert!(!four_cycle.is_decomposable());
        let complete =
            UndirectedGraph::with_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
                .unwrap();
        assert!(complete.is_decomposable());
        assert!(five_node_graph().is_decomposable());
    }

    #[test]
    fn maximal_cliques_examples() {
        let empty = UndirectedGraph::new(3).unwrap();
        assert_eq!(
            empty.maximal_cliques().unwrap(),
            vec![vec![0], vec![1], vec![2]]
        );

        let g = five_node_graph();
        assert_eq!(
            g.maximal_cliques().unwrap(),
            vec![vec![0, 1, 2], vec![1, 2, 3], vec![3, 4]]
        );

        let complete =
            UndirectedGraph::with_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
                .unwrap();
        assert_eq!(complete.maximal_cliques().unwrap(), vec![vec![0, 1, 2, 3]]);

        let four_cycle = UndirectedGraph::with_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert!(matches!(
            four_cycle.maximal_cliques(),
            Err(Error::UnsupportedGraph(_))
        ));
    }

    #[test]
    fn junction_tree_examples() {
        let g = five_node_graph();
        let jt = g.junction_tree().unwrap();
        assert_eq!(jt.cliques(), &[vec![0, 1, 2], vec![1, 2, 3], vec![3, 4]]);
        assert_eq!(jt.separators(), &[vec![1, 2], vec![3]]);

        let single = UndirectedGraph::with_edges(2, &[(0, 1)]).unwrap();
        let jt = single.junction_tree().unwrap();
        assert_eq!(jt.cliques(), &[vec![0, 1]]);
        assert!(jt.separators().is_empty());

        let empty = UndirectedGraph::new(4).unwrap();
        let jt = empty.junction_tree().unwrap();
        assert_eq!(jt.cliques().len(), 4);
        assert_eq!(
            jt.separators(),
            &[Vec::<usize>::new(), Vec::new(), Vec::new()]
        );
    }

    #[test]
    fn junction_tree_running_intersection_on_random_chordal_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 200 {
            let g = random_graph(&mut rng, 8);
            if !g.is_decomposable() {
                continue;
            }
            checked += 1;
            let jt = g.junction_tree().unwrap();
            let mut union: BTreeSet<usize> = jt.cliques()[0].iter().copied().collect();
            for (i, sep) in jt.separators().iter().enumerate() {
                let clique = &jt.cliques()[i + 1];
                // Separator equals the clique's intersection with everything
                // before it, and sits inside at least one earlier clique.
                let inter: Vec<usize> = clique
                    .iter()
                    .copied()
                    .filter(|v| union.contains(v))
                    .collect();
                assert_eq!(&inter, sep);
                assert!(
                    sep.is_empty()
                        || jt.cliques()[..=i]
                            .iter()
                            .any(|c| sep.iter().all(|v| c.contains(v)))
                );
                // Separators are complete in g.
                for (x, &u) in sep.iter().enumerate() {
                    for &v in &sep[x + 1..] {
                        assert!(g.has_edge(u, v));
                    }
                }
                union.extend(clique.iter().copied());
            }
            // Cliques cover all nodes.
            assert_eq!(union.len(), g.node_count());
        }
    }

    #[test]
    fn decomposability_matches_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let g = random_graph(&mut rng, 8);
            assert_eq!(
                g.is_decomposable(),
                chordal_by_enumeration(&g),
                "graph {:?}",
                g.edges()
            );
        }
    }

    #[test]
    fn separates_matches_path_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let g = random_graph(&mut rng, 7);
            let n = g.node_count();
            let mut nodes: Vec<usize> = (0..n).collect();
            nodes.shuffle(&mut rng);
            let na = rng.random_range(1..=n.max(2) - 1).min(nodes.len());
            let rest = nodes.split_off(na);
            let a = nodes;
            if rest.is_empty() {
                continue;
            }
            let mut rest = rest;
            let nb = rng.random_range(1..=rest.len());
            let s = rest.split_off(nb);
            let b = rest;
            let ns = rng.random_range(0..=s.len());
            let s = &s[..ns];
            assert_eq!(
                g.separates(&a, &b, s).unwrap(),
                separates_by_path_enumeration(&g, &a, &b, s)
            );
        }
    }

    #[test]
    fn deterministic_output() {
        let g = five_node_graph();
        assert_eq!(g.junction_tree().unwrap(), g.junction_tree().unwrap());
        assert_eq!(g.maximal_cliques().unwrap(), g.maximal_cliques().unwrap());
        assert_eq!(g.mcs_order(), g.mcs_order());
    }
}
