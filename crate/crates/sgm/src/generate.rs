//! Seeded generating models for decomposable stratified graphs, forward
//! sampling along the junction tree, and the multi-class synthetic-data
//! builder that replicates a small dependence structure across independent
//! chain components.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::data::{DataMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::graph::{Edge, UndirectedGraph};
use crate::strata::{clique_ordering, OutcomeSpace, StratifiedGraph, Stratum};

/// Derive a child seed from a base seed and a path of stream tags. Every
/// randomized component of the crate obtains its seed this way, so a single
/// top-level seed reproduces an entire experiment: each tag is folded into
/// the state with one splitmix64 round.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = base;
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag.wrapping_add(0x9e3779b97f4a7c15)));
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Conditional probability table of one generated variable: one row per
/// configuration of the variables preceding it in the clique's sampling
/// order (first variable least significant).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cpt {
    pub rows: Vec<Vec<f64>>,
}

/// Sampling recipe for one junction-tree clique: `given` variables were
/// produced by earlier cliques, `order` lists the variables this clique
/// generates, each with a CPT over everything before it.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CliqueSampler {
    pub given: Vec<usize>,
    pub order: Vec<usize>,
    pub cpts: Vec<Cpt>,
}

/// A fully specified distribution over a decomposable stratified graph,
/// factorized clique by clique along a junction tree whose rooting keeps
/// every stratified clique's merged variable out of its separator. Strata
/// are honored by construction: merged parent configurations share one
/// conditional row for the clique's last variable.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingModel {
    sg: StratifiedGraph,
    space: OutcomeSpace,
    pub(crate) cliques: Vec<CliqueSampler>,
}

impl GeneratingModel {
    pub fn sg(&self) -> &StratifiedGraph {
        &self.sg
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub(crate) fn from_parts(
        sg: StratifiedGraph,
        space: OutcomeSpace,
        cliques: Vec<CliqueSampler>,
    ) -> Result<Self> {
        let model = GeneratingModel { sg, space, cliques };
        model.validate()?;
        Ok(model)
    }

    /// Check table shapes, row normalization, and stratum honesty.
    pub fn validate(&self) -> Result<()> {
        self.sg.validate_contexts(&self.space)?;
        if !self.sg.is_decomposable_sg() {
            return Err(Error::UnsupportedModel(
                "generating model requires a decomposable stratified graph".into(),
            ));
        }
        let mut produced = vec![false; self.space.len()];
        for cs in &self.cliques {
            for (t, (&v, cpt)) in cs.order.iter().zip(&cs.cpts).enumerate() {
                if produced[v] {
                    return Err(Error::DataValidation(format!(
                        "variable {v} generated by more than one clique"
                    )));
                }
                produced[v] = true;
                let parents: Vec<usize> = cs.given.iter().chain(&cs.order[..t]).copied().collect();
                let expected_rows = self.space.joint_size(&parents);
                if cpt.rows.len() != expected_rows {
                    return Err(Error::DataValidation(format!(
                        "variable {v} has {} CPT rows, expected {expected_rows}",
                        cpt.rows.len()
                    )));
                }
                for row in &cpt.rows {
                    if row.len() != self.space.card(v) {
                        return Err(Error::DataValidation(format!(
                            "CPT row for variable {v} has {} entries, expected {}",
                            row.len(),
                            self.space.card(v)
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-12 || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                        return Err(Error::DataValidation(format!(
                            "CPT row for variable {v} does not form a distribution"
                        )));
                    }
                }
            }
            // Stratum honesty: merged parent configurations of the last
            // generated variable share identical conditional rows.
            let mut clique: Vec<usize> = cs.given.iter().chain(&cs.order).copied().collect();
            clique.sort_unstable();
            let strata = self.sg.clique_strata(&clique);
            if strata.is_empty() || cs.order.is_empty() {
                continue;
            }
            let last = *cs.order.last().unwrap();
            let parents: Vec<usize> = cs
                .given
                .iter()
                .chain(&cs.order[..cs.order.len() - 1])
                .copied()
                .collect();
            let strata_owned: Vec<(Edge, Vec<Vec<u8>>)> = strata
                .iter()
                .map(|&(e, ctxs)| (e, ctxs.iter().cloned().collect()))
                .collect();
            let (group_of, _) = crate::strata::merge_parent_groups(
                self.sg.graph(),
                &strata_owned,
                &parents,
                last,
                &self.space,
            )?;
            let cpt = cs.cpts.last().unwrap();
            for (cfg, &group) in group_of.iter().enumerate() {
                let rep = group_of.iter().position(|&g| g == group).unwrap();
                if cpt.rows[cfg] != cpt.rows[rep] {
                    return Err(Error::DataValidation(format!(
                        "merged parent configurations of variable {last} have different rows"
                    )));
                }
            }
        }
        if let Some(v) = produced.iter().position(|&p| !p) {
            return Err(Error::DataValidation(format!(
                "variable {v} is never generated"
            )));
        }
        Ok(())
    }

    /// Exact joint distribution by enumeration, indexed mixed-radix with
    /// variable 0 least significant. Refused above 2^20 outcomes.
    pub fn joint_distribution(&self) -> Result<Vec<f64>> {
        let vars: Vec<usize> = (0..self.space.len()).collect();
        let total = self.space.joint_size(&vars);
        if total > 1 << 20 {
            return Err(Error::InvalidArgument(format!(
                "joint distribution over {total} outcomes is too large to enumerate"
            )));
        }
        let mut joint = vec![0.0; total];
        let mut assignment = vec![0u8; self.space.len()];
        for (idx, slot) in joint.iter_mut().enumerate() {
            let mut rem = idx;
            for v in 0..self.space.len() {
                assignment[v] = (rem % self.space.card(v)) as u8;
                rem /= self.space.card(v);
            }
            let mut p = 1.0;
            for cs in &self.cliques {
                let mut preceding: Vec<usize> = cs.given.clone();
                for (t, &v) in cs.order.iter().enumerate() {
                    let cfg = config_index(&preceding, &assignment, &self.space);
                    p *= cs.cpts[t].rows[cfg][assignment[v] as usize];
                    preceding.push(v);
                }
            }
            *slot = p;
        }
        Ok(joint)
    }
}

fn config_index(vars: &[usize], assignment: &[u8], space: &OutcomeSpace) -> usize {
    let mut idx = 0usize;
    let mut stride = 1usize;
    for &v in vars {
        idx += assignment[v] as usize * stride;
        stride *= space.card(v);
    }
    idx
}

/// Draw a generating model for `sg` with conditional rows sampled from a
/// symmetric Dirichlet of the given concentration, then strata enforced by
/// sharing one row per merged parent group.
pub fn random_generating_model(
    sg: &StratifiedGraph,
    space: &OutcomeSpace,
    seed: u64,
    concentration: f64,
) -> Result<GeneratingModel> {
    if !(concentration > 0.0) || !concentration.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Dirichlet concentration must be positive, got {concentration}"
        )));
    }
    if !sg.is_decomposable_sg() {
        return Err(Error::UnsupportedModel(
            "generating model requires a decomposable stratified graph".into(),
        ));
    }
    sg.validate_contexts(space)?;
    let g = sg.graph();
    let n_cliques = g.maximal_cliques()?.len();

    // Find a rooted junction-tree order in which no stratified clique has
    // its merged (last) variable inside its own separator; sampling needs
    // that variable to be generated by the clique carrying the strata.
    let mut chosen = None;
    'roots: for root in 0..n_cliques {
        let jt = g.junction_tree_from(root)?;
        for (i, clique) in jt.cliques().iter().enumerate() {
            if sg.clique_strata(clique).is_empty() || i == 0 {
                continue;
            }
            let last = *clique_ordering(sg, clique).last().unwrap();
            if jt.separators()[i - 1].contains(&last) {
                continue 'roots;
            }
        }
        chosen = Some(jt);
        break;
    }
    let jt = chosen.ok_or_else(|| {
        Error::UnsupportedModel(
            "no junction-tree rooting keeps every stratified clique's merged variable \
             out of its separator; such models cannot be sampled directly"
                .into(),
        )
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::InvalidArgument(format!("bad concentration: {e}")))?;
    let draw_row = |k: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut row: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = row.iter().sum();
        for p in &mut row {
            *p /= sum;
        }
        row
    };

    let mut samplers = Vec::with_capacity(jt.cliques().len());
    for (i, clique) in jt.cliques().iter().enumerate() {
        let given: Vec<usize> = if i == 0 {
            Vec::new()
        } else {
            jt.separators()[i - 1].clone()
        };
        let strata = sg.clique_strata(clique);
        let mut order: Vec<usize> = clique
            .iter()
            .copied()
            .filter(|v| !given.contains(v))
            .collect();
        if !strata.is_empty() {
            let last = *clique_ordering(sg, clique).last().unwrap();
            order.retain(|&v| v != last);
            order.push(last);
        }
        let mut cpts = Vec::with_capacity(order.len());
        for (t, &v) in order.iter().enumerate() {
            let parents: Vec<usize> = given.iter().chain(&order[..t]).copied().collect();
            let n_cfg = space.joint_size(&parents);
            let k = space.card(v);
            let merged = !strata.is_empty() && t == order.len() - 1;
            let rows: Vec<Vec<f64>> = if merged {
                let strata_owned: Vec<(Edge, Vec<Vec<u8>>)> = strata
                    .iter()
                    .map(|&(e, ctxs)| (e, ctxs.iter().cloned().collect()))
                    .collect();
                let (group_of, sizes) = crate::strata::merge_parent_groups(
                    sg.graph(),
                    &strata_owned,
                    &parents,
                    v,
                    space,
                )?;
                let group_rows: Vec<Vec<f64>> =
                    (0..sizes.len()).map(|_| draw_row(k, &mut rng)).collect();
                (0..n_cfg)
                    .map(|cfg| group_rows[group_of[cfg]].clone())
                    .collect()
            } else {
                (0..n_cfg).map(|_| draw_row(k, &mut rng)).collect()
            };
            cpts.push(Cpt { rows });
        }
        samplers.push(CliqueSampler { given, order, cpts });
    }
    GeneratingModel::from_parts(sg.clone(), space.clone(), samplers)
}

/// Draw `n` independent observations by forward sampling along the junction
/// tree: each clique draws its new variables conditional on the separator
/// values produced by earlier cliques.
pub fn sample(gm: &GeneratingModel, n: usize, seed: u64) -> DataMatrix {
    let d = gm.space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DataMatrix::new(
        (1..=d).map(|i| format!("x{i}")).collect(),
        gm.space.cards().to_vec(),
        vec![],
    )
    .expect("valid empty matrix");
    let mut assignment = vec![0u8; d];
    for _ in 0..n {
        for cs in &gm.cliques {
            let mut preceding: Vec<usize> = cs.given.clone();
            for (t, &v) in cs.order.iter().enumerate() {
                let cfg = config_index(&preceding, &assignment, &gm.space);
                let row = &cs.cpts[t].rows[cfg];
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut value = row.len() - 1;
                for (i, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        value = i;
                        break;
                    }
                }
                assignment[v] = value as u8;
                preceding.push(v);
            }
        }
        out.push_row(&assignment)
            .expect("sampled values are in range");
    }
    out
}

/// Recipe for a multi-class synthetic dataset: one small stratified graph
/// per class, replicated over independent chain components so that the
/// feature count is `component size x components`.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    /// Per-class dependence structure of a single chain component.
    pub class_structures: Vec<StratifiedGraph>,
    /// Number of independent copies of the component per observation.
    pub components: usize,
    pub seed: u64,
    /// Symmetric Dirichlet concentration for the conditional tables.
    pub concentration: f64,
}

impl SyntheticSpec {
    /// The five built-in class structures with the given replication.
    pub fn standard(components: usize, seed: u64) -> Self {
        SyntheticSpec {
            class_structures: standard_class_structures(),
            components,
            seed,
            concentration: 1.0,
        }
    }

    pub fn component_size(&self) -> usize {
        self.class_structures
            .first()
            .map_or(0, |sg| sg.graph().node_count())
    }

    pub fn feature_count(&self) -> usize {
        self.component_size() * self.components
    }

    pub fn class_count(&self) -> usize {
        self.class_structures.len()
    }

    fn validate(&self) -> Result<()> {
        if self.class_structures.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one class structure required".into(),
            ));
        }
        if self.components == 0 {
            return Err(Error::InvalidArgument(
                "at least one chain component required".into(),
            ));
        }
        let size = self.component_size();
        if self
            .class_structures
            .iter()
            .any(|sg| sg.graph().node_count() != size)
        {
            return Err(Error::InvalidArgument(
                "all class structures must cover the same number of variables".into(),
            ));
        }
        Ok(())
    }
}

/// One generating model per class over a single chain component; tables are
/// drawn from `spec.seed` and shared by every component of that class.
pub fn class_generating_models(spec: &SyntheticSpec) -> Result<Vec<GeneratingModel>> {
    spec.validate()?;
    let space = OutcomeSpace::binary(spec.component_size());
    spec.class_structures
        .iter()
        .enumerate()
        .map(|(idx, sg)| {
            let class = idx as u64 + 1;
            random_generating_model(
                sg,
                &space,
                derive_seed(spec.seed, &[0x7ab1e5, class]),
                spec.concentration,
            )
        })
        .collect()
}

/// Sample `rows_per_class` observations per class from prepared component
/// models, stacking `spec.components` independent component draws side by
/// side. Rows are grouped by class; the label vector is aligned.
pub fn sample_synthetic(
    spec: &SyntheticSpec,
    models: &[GeneratingModel],
    rows_per_class: usize,
    sample_seed: u64,
) -> Result<(DataMatrix, LabelVector)> {
    spec.validate()?;
    if models.len() != spec.class_count() {
        return Err(Error::InvalidArgument(
            "one generating model per class required".into(),
        ));
    }
    let d = spec.feature_count();
    let size = spec.component_size();
    let mut out = DataMatrix::new(
        (1..=d).map(|i| format!("x{i}")).collect(),
        vec![2; d],
        vec![],
    )?;
    let mut labels = Vec::with_capacity(rows_per_class * spec.class_count());
    let mut row = vec![0u8; d];
    for (idx, model) in models.iter().enumerate() {
        let class = idx + 1;
        let blocks: Vec<DataMatrix> = (0..spec.components)
            .map(|comp| {
                sample(
                    model,
                    rows_per_class,
                    derive_seed(sample_seed, &[class as u64, comp as u64]),
                )
            })
            .collect();
        for r in 0..rows_per_class {
            for (comp, block) in blocks.iter().enumerate() {
                row[comp * size..(comp + 1) * size].copy_from_slice(block.row(r));
            }
            out.push_row(&row)?;
            labels.push(class);
        }
    }
    Ok((out, labels))
}

/// Draw class distributions and sample a labeled dataset in one step.
pub fn build_synthetic(
    spec: &SyntheticSpec,
    rows_per_class: usize,
) -> Result<(DataMatrix, LabelVector)> {
    let models = class_generating_models(spec)?;
    sample_synthetic(
        spec,
        &models,
        rows_per_class,
        derive_seed(spec.seed, &[0xda7a]),
    )
}

/// Replicate a component structure over `copies` disjoint blocks of nodes.
pub fn replicate_sg(sg: &StratifiedGraph, copies: usize) -> Result<StratifiedGraph> {
    let size = sg.graph().node_count();
    let mut g = UndirectedGraph::new(size * copies.max(1))?;
    let mut strata = Vec::new();
    for copy in 0..copies {
        let off = copy * size;
        for e in sg.graph().edges() {
            let (u, v) = e.endpoints();
            g.add_edge(u + off, v + off)?;
        }
        for (e, contexts) in sg.strata() {
            let (u, v) = e.endpoints();
            strata.push(Stratum::new(
                Edge::new(u + off, v + off)?,
                contexts.iter().cloned(),
            ));
        }
    }
    StratifiedGraph::new(g, strata)
}

/// Five binary 5-variable decomposable stratified graphs of increasing
/// stratum density, used as the default per-class structures for synthetic
/// experiments. They are ordinary models: export them with the CLI and edit
/// the files to swap in different structures.
pub fn standard_class_structures() -> Vec<StratifiedGraph> {
    let edge = |u, v| Edge::new(u, v).unwrap();

    // Class 1: a plain chain.
    let c1 = StratifiedGraph::plain(
        UndirectedGraph::with_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap(),
    );

    // Class 2: one triangle with a single stratum.
    let c2 = StratifiedGraph::new(
        UndirectedGraph::with_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)]).unwrap(),
        [Stratum::new(edge(0, 1), [vec![0]])],
    )
    .unwrap();

    // Class 3: two overlapping triangles with strata on three edges.
    let c3 = StratifiedGraph::new(
        UndirectedGraph::with_edges(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)]).unwrap(),
        [
            Stratum::new(edge(0, 2), [vec![1]]),
            Stratum::new(edge(1, 3), [vec![0]]),
            Stratum::new(edge(2, 3), [vec![0]]),
        ],
    )
    .unwrap();

    // Class 4: two disjoint triangles joined at a node, strata in both.
    let c4 = StratifiedGraph::new(
        UndirectedGraph::with_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)]).unwrap(),
        [
            Stratum::new(edge(0, 1), [vec![0]]),
            Stratum::new(edge(0, 2), [vec![1]]),
            Stratum::new(edge(2, 4), [vec![0]]),
            Stratum::new(edge(3, 4), [vec![0]]),
        ],
    )
    .unwrap();

    // Class 5: a four-clique with a tail; strata on all edges into node 3,
    // one of them covering two contexts.
    let c5 = StratifiedGraph::new(
        UndirectedGraph::with_edges(5, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4)])
            .unwrap(),
        [
            Stratum::new(edge(0, 3), [vec![0, 0], vec![0, 1]]),
            Stratum::new(edge(1, 3), [vec![0, 0]]),
            Stratum::new(edge(2, 3), [vec![1, 1]]),
        ],
    )
    .unwrap();

    vec![c1, c2, c3, c4, c5]
}
