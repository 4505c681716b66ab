//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured quantities. Run with `cargo test --test acceptance` (add
//! `-- --nocapture` to see the lines).

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use sgm::classify::{
    classify_marginal, classify_simultaneous, marginal_score, simultaneous_score, Init,
};
use sgm::generate::{random_generating_model, sample};
use sgm::harness::{
    run_convergence, run_sweep, ClassifierKind, ConvergePlan, ConvergenceRow, ExperimentPlan,
    StructureMode, SweepVariable,
};
use sgm::io::ModelDocument;
use sgm::learn::SearchConfig;
use sgm::score::{graph_marginal_likelihood, HyperParams};
use sgm::strata::{OutcomeSpace, ParentGrouping, StratifiedGraph, Stratum};
use sgm::{ClassModel, DataMatrix, Edge, UndirectedGraph};

fn pass(criterion: usize, detail: &str) {
    println!("[PASS] criterion {criterion:02}: {detail}");
}

fn binary_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

/// All stratified graphs on three binary variables with at most one
/// single-edge stratum: every graph on three nodes is chordal, and only the
/// triangle gives an edge a common neighbor.
fn all_three_node_sgs() -> Vec<StratifiedGraph> {
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut out = Vec::new();
    for mask in 0u32..8 {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        let g = UndirectedGraph::with_edges(3, &edges).unwrap();
        out.push(StratifiedGraph::plain(g.clone()));
        if edges.len() == 3 {
            for &(u, v) in &pairs {
                for ctx in [0u8, 1] {
                    let sg = StratifiedGraph::new(
                        g.clone(),
                        [Stratum::new(Edge::new(u, v).unwrap(), [vec![ctx]])],
                    )
                    .unwrap();
                    assert!(sg.is_decomposable_sg());
                    out.push(sg);
                }
            }
        }
    }
    out
}

#[test]
fn criterion_01_normalization_oracle() {
    let sgs = all_three_node_sgs();
    assert_eq!(sgs.len(), 14);
    let hp = HyperParams::default();
    let mut worst = 0.0f64;
    for sg in &sgs {
        let mut total = 0.0;
        for a in 0u8..8 {
            for b in 0u8..8 {
                let rows = vec![
                    vec![a & 1, a >> 1 & 1, a >> 2 & 1],
                    vec![b & 1, b >> 1 & 1, b >> 2 & 1],
                ];
                let data = DataMatrix::new(binary_names(3), vec![2; 3], rows).unwrap();
                total += graph_marginal_likelihood(&data, sg, &hp).unwrap().exp();
            }
        }
        worst = worst.max((total - 1.0).abs());
        assert!(
            (total - 1.0).abs() < 1e-9,
            "dataset probabilities sum to {total} for {:?}",
            sg
        );
    }
    pass(
        1,
        &format!("14 models x 64 datasets normalize to 1 (worst deviation {worst:.2e})"),
    );
}

/// A random decomposable stratified graph with matching outcome space.
fn random_sg(rng: &mut ChaCha8Rng, max_nodes: usize) -> (StratifiedGraph, OutcomeSpace) {
    let d = rng.random_range(1..=max_nodes);
    let cards: Vec<usize> = (0..d)
        .map(|_| if rng.random_bool(0.2) { 3 } else { 2 })
        .collect();
    let space = OutcomeSpace::new(cards).unwrap();
    let mut g = UndirectedGraph::new(d).unwrap();
    for _ in 0..rng.random_range(0..=2 * d) {
        let u = rng.random_range(0..d);
        let v = rng.random_range(0..d);
        if u == v || g.has_edge(u, v) {
            continue;
        }
        g.add_edge(u, v).unwrap();
        if !g.is_decomposable() {
            g.remove_edge(u, v).unwrap();
        }
    }
    let mut sg = StratifiedGraph::plain(g.clone());
    for edge in g.edges() {
        if !rng.random_bool(0.5) {
            continue;
        }
        let neighbors = sgm::strata::common_neighbors(&g, edge).unwrap();
        if neighbors.is_empty() {
            continue;
        }
        let full = space.joint_size(&neighbors);
        let n_ctx = rng.random_range(1..full.max(2)).min(full - 1);
        let mut contexts = BTreeSet::new();
        while contexts.len() < n_ctx {
            let ctx: Vec<u8> = neighbors
                .iter()
                .map(|&w| rng.random_range(0..space.card(w)) as u8)
                .collect();
            contexts.insert(ctx);
        }
        let mut strata: Vec<Stratum> = sg
            .strata()
            .map(|(e, c)| Stratum::new(e, c.iter().cloned()))
            .collect();
        strata.push(Stratum::new(edge, contexts));
        if let Ok(cand) = StratifiedGraph::new(g.clone(), strata) {
            if cand.is_decomposable_sg() && cand.validate_contexts(&space).is_ok() {
                sg = cand;
            }
        }
    }
    (sg, space)
}

fn random_data(rng: &mut ChaCha8Rng, space: &OutcomeSpace, n: usize) -> DataMatrix {
    let d = space.len();
    let rows: Vec<Vec<u8>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|c| rng.random_range(0..space.card(c)) as u8)
                .collect()
        })
        .collect();
    DataMatrix::new(binary_names(d), space.cards().to_vec(), rows).unwrap()
}

#[test]
fn criterion_02_chain_rule_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc2);
    let mut worst = 0.0f64;
    for round in 0..500 {
        let (sg, space) = random_sg(&mut rng, 4);
        let n_train = rng.random_range(0..6);
        let n_test = rng.random_range(0..6);
        let train = random_data(&mut rng, &space, n_train);
        let test = random_data(&mut rng, &space, n_test);
        let hp = HyperParams::new([0.5, 1.0, 2.0][round % 3]).unwrap();
        let joint = graph_marginal_likelihood(&train.concat(&test).unwrap(), &sg, &hp).unwrap();
        let base = graph_marginal_likelihood(&train, &sg, &hp).unwrap();
        let model = ClassModel::fit(1, sg, &train, hp).unwrap();
        let predictive = model.log_predictive_counts(&model.count_rows(test.rows_iter()));
        let gap = (joint - base - predictive).abs();
        worst = worst.max(gap);
        assert!(gap < 1e-9, "chain rule off by {gap} on round {round}");
    }
    pass(
        2,
        &format!("500 random instances satisfy the chain rule (worst gap {worst:.2e})"),
    );
}

/// Classical decomposable-graph score, written directly against the
/// junction tree with per-variable chain factors and no grouping machinery.
/// Term accumulation mirrors the production order so agreement is bitwise.
fn classical_gm_score(data: &DataMatrix, g: &UndirectedGraph, esz: f64) -> f64 {
    let jt = g.junction_tree().unwrap();
    let mut total = 0.0;
    for clique in jt.cliques() {
        total += 1.0 * classical_part_score(data, clique, esz);
    }
    for sep in jt.separators() {
        if !sep.is_empty() {
            total += -1.0 * classical_part_score(data, sep, esz);
        }
    }
    total
}

fn classical_part_score(data: &DataMatrix, vars: &[usize], esz: f64) -> f64 {
    let cards: Vec<usize> = vars.iter().map(|&v| data.cards()[v]).collect();
    let mut score = 0.0;
    let mut parent_space = 1usize;
    for (pos, &v) in vars.iter().enumerate() {
        let k = cards[pos];
        // counts[parent][value], parent index with the first variable least
        // significant.
        let mut counts = vec![vec![0u64; k]; parent_space];
        for row in data.rows_iter() {
            let mut idx = 0usize;
            let mut stride = 1usize;
            for t in 0..pos {
                idx += row[vars[t]] as usize * stride;
                stride *= cards[t];
            }
            counts[idx][row[v] as usize] += 1;
        }
        let alpha = esz * 1.0 / (parent_space as f64 * k as f64);
        let alphas = vec![alpha; k];
        for vals in &counts {
            let alpha_total: f64 = alphas.iter().sum();
            let n_parent: u64 = vals.iter().sum();
            score += ln_gamma(alpha_total) - ln_gamma(n_parent as f64 + alpha_total);
            for (i, &n) in vals.iter().enumerate() {
                score += ln_gamma(n as f64 + alphas[i]) - ln_gamma(alphas[i]);
            }
        }
        parent_space *= k;
    }
    score
}

#[test]
fn criterion_03_gm_equals_sgm_with_empty_strata() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc3);
    for round in 0..100 {
        let d = rng.random_range(1..=5);
        let mut g = UndirectedGraph::new(d).unwrap();
        for _ in 0..rng.random_range(0..=2 * d) {
            let u = rng.random_range(0..d);
            let v = rng.random_range(0..d);
            if u != v && !g.has_edge(u, v) {
                g.add_edge(u, v).unwrap();
                if !g.is_decomposable() {
                    g.remove_edge(u, v).unwrap();
                }
            }
        }
        let space = OutcomeSpace::binary(d);
        let n = rng.random_range(0..12);
        let data = random_data(&mut rng, &space, n);
        let esz = [0.5, 1.0, 2.0][round % 3];
        let hp = HyperParams::new(esz).unwrap();
        let via_sgm =
            graph_marginal_likelihood(&data, &StratifiedGraph::plain(g.clone()), &hp).unwrap();
        let classical = classical_gm_score(&data, &g, esz);
        assert_eq!(
            via_sgm.to_bits(),
            classical.to_bits(),
            "round {round}: {via_sgm} vs {classical}"
        );
    }
    pass(
        3,
        "100 random instances: empty-strata score equals the classical score bit for bit",
    );
}

#[test]
fn criterion_04_parent_outcome_merging() {
    // Clique {1,2,3}, strata X1=0 on {2,3} and X2=0 on {1,3}: the last
    // variable keeps two distinguishable parent groups of sizes 3 and 1.
    let g = UndirectedGraph::with_edges(4, &[(1, 2), (1, 3), (2, 3)]).unwrap();
    let sg = StratifiedGraph::new(
        g,
        [
            Stratum::new(Edge::new(2, 3).unwrap(), [vec![0]]),
            Stratum::new(Edge::new(1, 3).unwrap(), [vec![0]]),
        ],
    )
    .unwrap();
    let grouping = ParentGrouping::for_clique(&sg, &[1, 2, 3], &OutcomeSpace::binary(4)).unwrap();
    let last = grouping.len() - 1;
    assert_eq!(grouping.ordering(), &[1, 2, 3]);
    assert_eq!(grouping.group_count(last), 2);
    let groups: Vec<BTreeSet<Vec<u8>>> = grouping
        .group_members(last)
        .into_iter()
        .map(|g| g.into_iter().collect())
        .collect();
    let merged: BTreeSet<Vec<u8>> = [vec![0u8, 0], vec![0, 1], vec![1, 0]].into_iter().collect();
    let single: BTreeSet<Vec<u8>> = [vec![1u8, 1]].into_iter().collect();
    assert!(
        groups.contains(&merged),
        "missing merged group in {groups:?}"
    );
    assert!(
        groups.contains(&single),
        "missing singleton group in {groups:?}"
    );
    let sizes: Vec<usize> = (0..grouping.group_count(last))
        .map(|g| grouping.group_size(last, g))
        .collect();
    assert_eq!(sizes, vec![3, 1]);
    pass(
        4,
        "merging yields groups {(0,0),(0,1),(1,0)} and {(1,1)} with sizes (3,1)",
    );
}

// Oracle: a chordless cycle exists iff some induced subgraph on >= 4 nodes
// is a cycle.
fn chordal_by_enumeration(g: &UndirectedGraph) -> bool {
    let n = g.node_count();
    for mask in 0u32..(1 << n) {
        let nodes: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        if nodes.len() < 4 {
            continue;
        }
        let degrees_ok = nodes
            .iter()
            .all(|&v| nodes.iter().filter(|&&w| g.has_edge(v, w)).count() == 2);
        if !degrees_ok {
            continue;
        }
        // Connected 2-regular induced subgraph = chordless cycle.
        let mut seen = vec![nodes[0]];
        let mut stack = vec![nodes[0]];
        while let Some(v) = stack.pop() {
            for &w in &nodes {
                if g.has_edge(v, w) && !seen.contains(&w) {
                    seen.push(w);
                    stack.push(w);
                }
            }
        }
        if seen.len() == nodes.len() {
            return false;
        }
    }
    true
}

// Oracle: enumerate all simple paths between the sets and require each one
// to meet the separator.
fn separates_by_paths(g: &UndirectedGraph, a: &[usize], b: &[usize], s: &[usize]) -> bool {
    fn reaches(
        g: &UndirectedGraph,
        v: usize,
        b: &[usize],
        s: &[usize],
        path: &mut Vec<usize>,
    ) -> bool {
        if s.contains(&v) {
            return false;
        }
        if b.contains(&v) {
            return true;
        }
        path.push(v);
        for w in g.neighbors(v).collect::<Vec<_>>() {
            if !path.contains(&w) && reaches(g, w, b, s, path) {
                path.pop();
                return true;
            }
        }
        path.pop();
        false
    }
    a.iter().all(|&start| {
        let mut path = Vec::new();
        !reaches(g, start, b, s, &mut path)
    })
}

#[test]
fn criterion_05_graph_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc5);
    let mut queries = 0usize;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let mut g = UndirectedGraph::new(n).unwrap();
        let density: f64 = rng.random_range(0.0..0.9);
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_bool(density) {
                    g.add_edge(u, v).unwrap();
                }
            }
        }
        assert_eq!(g.is_decomposable(), chordal_by_enumeration(&g));

        let mut nodes: Vec<usize> = (0..n).collect();
        nodes.shuffle(&mut rng);
        for _ in 0..3 {
            if n < 2 {
                break;
            }
            let na = rng.random_range(1..n);
            let nb = rng.random_range(1..=(n - na));
            let a = &nodes[..na];
            let b = &nodes[na..na + nb];
            let rest = &nodes[na + nb..];
            let ns = rng.random_range(0..=rest.len());
            let s = &rest[..ns];
            assert_eq!(
                g.separates(a, b, s).unwrap(),
                separates_by_paths(&g, a, b, s),
                "graph {:?}, a={a:?} b={b:?} s={s:?}",
                g.edges()
            );
            queries += 1;
        }
    }
    pass(
        5,
        &format!("1000 graphs agree with both oracles ({queries} separation queries)"),
    );
}

const CONVERGENCE_SEED: u64 = 0xace6;

fn convergence_rows() -> &'static (ConvergePlan, Vec<ConvergenceRow>) {
    static ROWS: OnceLock<(ConvergePlan, Vec<ConvergenceRow>)> = OnceLock::new();
    ROWS.get_or_init(|| {
        let mut plan = ConvergePlan::new(vec![100, 1000, 10000]);
        plan.replicates = 50;
        plan.components = 4;
        plan.test_rows = 20;
        plan.train_draws = 5;
        plan.seed = CONVERGENCE_SEED;
        let rows = run_convergence(&plan).unwrap();
        (plan, rows)
    })
}

fn check_gap_series(criterion: usize, label: &str, gap: impl Fn(&ConvergenceRow) -> f64) {
    let (plan, rows) = convergence_rows();
    let mut monotone = 0usize;
    let mut first_sum = 0.0;
    let mut last_sum = 0.0;
    for rep in 0..plan.replicates {
        let series: Vec<f64> = plan
            .m_values
            .iter()
            .map(|&m| {
                rows.iter()
                    .find(|r| r.m == m && r.replicate == rep)
                    .map(&gap)
                    .expect("row present")
            })
            .collect();
        if series.windows(2).all(|w| w[1] < w[0]) {
            monotone += 1;
        }
        first_sum += series[0];
        last_sum += series[series.len() - 1];
    }
    let needed = (plan.replicates * 9).div_ceil(10);
    assert!(
        monotone >= needed,
        "{label}: gap decreased monotonically in only {monotone}/{} seeds",
        plan.replicates
    );
    let ratio = last_sum / first_sum;
    assert!(
        ratio < 0.10,
        "{label}: final gap is {:.1}% of the initial gap",
        100.0 * ratio
    );
    pass(
        criterion,
        &format!(
            "{label} gap monotone in {monotone}/{} seeds; final gap at {:.2}% of initial",
            plan.replicates,
            100.0 * ratio
        ),
    );
}

#[test]
fn criterion_06_simultaneous_matches_marginal_asymptotically() {
    check_gap_series(6, "simultaneous-vs-marginal", |r| r.sim_marginal_gap);
}

#[test]
fn criterion_07_stratified_matches_plain_asymptotically() {
    check_gap_series(7, "stratified-vs-plain", |r| r.sgm_gm_gap);
}

#[test]
fn criterion_08_train_sweep_ordering() {
    let mut plan = ExperimentPlan::new(
        StructureMode::Fixed,
        SweepVariable::TrainRows,
        vec![10, 50, 100, 250],
    );
    plan.classifiers = vec![
        ClassifierKind::NaiveBayes,
        ClassifierKind::GmMarginal,
        ClassifierKind::SgmMarginal,
    ];
    plan.fixed_rows = 20;
    plan.components = 4;
    plan.replicates = 50;
    plan.seed = 0xace8;
    let report = run_sweep(&plan, None).unwrap();
    for &value in &plan.values {
        let nb = report.mean(ClassifierKind::NaiveBayes, value).unwrap();
        let gm = report.mean(ClassifierKind::GmMarginal, value).unwrap();
        let sgm = report.mean(ClassifierKind::SgmMarginal, value).unwrap();
        assert!(
            sgm >= gm && gm >= nb,
            "ordering violated at {value} train rows: sgm {sgm:.4}, gm {gm:.4}, nb {nb:.4}"
        );
    }
    let sgm = report.mean(ClassifierKind::SgmMarginal, 250).unwrap();
    let nb = report.mean(ClassifierKind::NaiveBayes, 250).unwrap();
    assert!(
        sgm - nb >= 0.05,
        "stratified advantage at 250 train rows is only {:.1} points",
        100.0 * (sgm - nb)
    );
    pass(
        8,
        &format!(
            "sgm >= gm >= naive-bayes at every point; advantage at 250 rows: {:.1} points",
            100.0 * (sgm - nb)
        ),
    );
}

#[test]
fn criterion_09_test_sweep_ordering() {
    let mut plan = ExperimentPlan::new(
        StructureMode::Fixed,
        SweepVariable::TestRows,
        vec![10, 50, 100],
    );
    plan.classifiers = vec![
        ClassifierKind::GmMarginal,
        ClassifierKind::GmSimultaneous,
        ClassifierKind::SgmMarginal,
        ClassifierKind::SgmSimultaneous,
    ];
    plan.fixed_rows = 20;
    plan.components = 10;
    plan.replicates = 50;
    plan.seed = 0xace9;
    let report = run_sweep(&plan, None).unwrap();
    for &value in &plan.values {
        let gm_m = report.mean(ClassifierKind::GmMarginal, value).unwrap();
        let gm_s = report.mean(ClassifierKind::GmSimultaneous, value).unwrap();
        let sgm_m = report.mean(ClassifierKind::SgmMarginal, value).unwrap();
        let sgm_s = report.mean(ClassifierKind::SgmSimultaneous, value).unwrap();
        assert!(
            gm_s >= gm_m,
            "plain simultaneous below marginal at {value} test rows: {gm_s:.4} vs {gm_m:.4}"
        );
        assert!(
            sgm_s >= sgm_m,
            "stratified simultaneous below marginal at {value} test rows: {sgm_s:.4} vs {sgm_m:.4}"
        );
    }
    pass(
        9,
        "simultaneous means at or above marginal for both model families at every point",
    );
}

#[test]
fn criterion_10_learned_structures_approach_known() {
    let values = vec![50usize, 200, 1000];
    let classifiers = vec![ClassifierKind::GmMarginal, ClassifierKind::SgmMarginal];
    let mut known = ExperimentPlan::new(
        StructureMode::Fixed,
        SweepVariable::TrainRows,
        values.clone(),
    );
    known.classifiers = classifiers.clone();
    known.fixed_rows = 20;
    known.components = 4;
    known.replicates = 30;
    known.seed = 0xace10;
    let mut learned = known.clone();
    learned.mode = StructureMode::Learned;
    let known_report = run_sweep(&known, None).unwrap();
    let learned_report = run_sweep(&learned, None).unwrap();
    let mut details = Vec::new();
    for kind in classifiers {
        let gap =
            |v: usize| known_report.mean(kind, v).unwrap() - learned_report.mean(kind, v).unwrap();
        let (first, last) = (gap(values[0]), gap(*values.last().unwrap()));
        assert!(
            last < first / 2.0,
            "{kind}: learned-structure gap went from {first:.4} to {last:.4}"
        );
        details.push(format!(
            "{kind} gap {:.1}% -> {:.1}%",
            100.0 * first,
            100.0 * last
        ));
    }
    pass(
        10,
        &format!(
            "known/learned success gap more than halves ({})",
            details.join("; ")
        ),
    );
}

fn random_models(rng: &mut ChaCha8Rng, k: usize, d: usize, n_train: usize) -> Vec<ClassModel> {
    let names = binary_names(d);
    (1..=k)
        .map(|class| {
            let p = 0.15 + 0.7 * (class as f64 - 1.0) / k as f64;
            let rows: Vec<Vec<u8>> = (0..n_train)
                .map(|_| (0..d).map(|_| rng.random_bool(p) as u8).collect())
                .collect();
            let train = DataMatrix::new(names.clone(), vec![2; d], rows).unwrap();
            let mut g = UndirectedGraph::new(d).unwrap();
            for v in 1..d {
                if rng.random_bool(0.7) {
                    g.add_edge(v - 1, v).unwrap();
                }
            }
            let sg = if d >= 3 && g.has_edge(0, 1) && g.has_edge(1, 2) && rng.random_bool(0.5) {
                let mut g2 = g.clone();
                g2.add_edge(0, 2).unwrap();
                StratifiedGraph::new(g2, [Stratum::new(Edge::new(0, 2).unwrap(), [vec![0]])])
                    .unwrap()
            } else {
                StratifiedGraph::plain(g)
            };
            ClassModel::fit(class, sg, &train, HyperParams::default()).unwrap()
        })
        .collect()
}

#[test]
fn criterion_11_classifier_mechanics() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc11);
    let mut total_moves = 0usize;
    for round in 0..1000u64 {
        let k = rng.random_range(1..=4);
        let d = rng.random_range(1..=4);
        let n_train = rng.random_range(5..25);
        let models = random_models(&mut rng, k, d, n_train);
        let n_test = rng.random_range(1..12);
        let rows: Vec<Vec<u8>> = (0..n_test)
            .map(|_| (0..d).map(|_| rng.random_bool(0.5) as u8).collect())
            .collect();
        let test = DataMatrix::new(binary_names(d), vec![2; d], rows).unwrap();

        let init: Vec<usize> = (0..n_test).map(|_| rng.random_range(1..=k)).collect();
        let init_score = simultaneous_score(&init, &test, &models).unwrap();
        let result =
            classify_simultaneous(&test, &models, Init::Given(init.clone()), round).unwrap();
        // Strictly increasing score sequence, termination, and agreement
        // between the accumulated gains and the end-to-end improvement.
        assert!(result.iterations.unwrap() < 1000);
        assert!(result.score_gains.iter().all(|&g| g > 0.0));
        let claimed: f64 = result.score_gains.iter().sum();
        assert!((result.log_score - init_score - claimed).abs() < 1e-6);
        let rescored = simultaneous_score(&result.labels, &test, &models).unwrap();
        assert!((result.log_score - rescored).abs() < 1e-9);
        total_moves += result.score_gains.len();

        let marginal = classify_marginal(&test, &models).unwrap();
        let mar_rescored = marginal_score(&marginal.labels, &test, &models).unwrap();
        assert!((marginal.log_score - mar_rescored).abs() < 1e-9);

        // A single-row test set makes the two classifiers identical.
        let one = test.select_rows(&[0]).unwrap();
        let a = classify_marginal(&one, &models).unwrap();
        let b = classify_simultaneous(&one, &models, Init::Marginal, round).unwrap();
        assert_eq!(a.labels, b.labels);
        for label in 1..=k {
            let m = marginal_score(&[label], &one, &models).unwrap();
            let s = simultaneous_score(&[label], &one, &models).unwrap();
            assert_eq!(m.to_bits(), s.to_bits());
        }
    }
    pass(
        11,
        &format!(
            "1000 instances: strict ascent ({total_moves} accepted moves), termination, \
             score self-consistency, single-row equivalence"
        ),
    );
}

/// The merged-CPT triangle with an explicit well-separated distribution,
/// shipped through the ordinary model-file format.
fn hand_built_table_model() -> sgm::generate::GeneratingModel {
    let json = r#"{
  "nodes": [{"name": "x1", "card": 2}, {"name": "x2", "card": 2}, {"name": "x3", "card": 2}],
  "edges": [["x1","x2"],["x1","x3"],["x2","x3"]],
  "strata": [
    {"edge": ["x2","x3"], "contexts": [{"x1": 0}]},
    {"edge": ["x1","x3"], "contexts": [{"x2": 0}]}
  ],
  "N": 1.0,
  "tables": [
    {
      "given": [],
      "order": ["x1", "x2", "x3"],
      "cpts": [
        {"var": "x1", "rows": [[0.6, 0.4]]},
        {"var": "x2", "rows": [[0.7, 0.3], [0.3, 0.7]]},
        {"var": "x3", "rows": [[0.75, 0.25], [0.75, 0.25], [0.75, 0.25], [0.2, 0.8]]}
      ]
    }
  ]
}"#;
    let dir = std::env::temp_dir().join("sgm-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("table_model.json");
    std::fs::write(&path, json).unwrap();
    ModelDocument::load(&path).unwrap().generator.unwrap()
}

#[test]
fn criterion_12_structure_recovery() {
    // Independent data recovers the empty graph.
    let mut empty_hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc12_0000 + seed);
        let rows: Vec<Vec<u8>> = (0..5000)
            .map(|_| (0..4).map(|_| rng.random_bool(0.5) as u8).collect())
            .collect();
        let data = DataMatrix::new(binary_names(4), vec![2; 4], rows).unwrap();
        let learned = sgm::learn_graph(&data, &SearchConfig::default()).unwrap();
        if learned.sg.graph().edge_count() == 0 {
            empty_hits += 1;
        }
    }
    assert!(
        empty_hits >= 95,
        "empty graph recovered in {empty_hits}/100 seeds"
    );

    // A deterministically dependent pair recovers exactly its edge.
    let mut edge_hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc12_1000 + seed);
        let rows: Vec<Vec<u8>> = (0..5000)
            .map(|_| {
                let a = rng.random_bool(0.5) as u8;
                let c = rng.random_bool(0.5) as u8;
                vec![a, a, c]
            })
            .collect();
        let data = DataMatrix::new(binary_names(3), vec![2; 3], rows).unwrap();
        let learned = sgm::learn_graph(&data, &SearchConfig::default()).unwrap();
        let edges = learned.sg.graph().edges();
        if edges.len() == 1 && edges[0] == Edge::new(0, 1).unwrap() {
            edge_hits += 1;
        }
    }
    assert!(
        edge_hits >= 95,
        "single edge recovered in {edge_hits}/100 seeds"
    );

    // Stratum search recovers the merged-CPT strata from honest data.
    let gm = hand_built_table_model();
    let truth = gm.sg().clone();
    let graph = truth.graph().clone();
    let mut strata_hits = 0;
    for seed in 0..100u64 {
        let data = sample(&gm, 10_000, 0xc12_2000 + seed);
        let cfg = SearchConfig {
            seed,
            ..SearchConfig::default()
        };
        let learned = sgm::learn_strata(&data, &graph, &cfg).unwrap();
        if learned.sg == truth {
            strata_hits += 1;
        }
    }
    assert!(
        strata_hits >= 90,
        "strata recovered in {strata_hits}/100 seeds"
    );

    // The same recovery also holds for randomly drawn honest tables, albeit
    // with occasional score-equivalent alternatives.
    let space = OutcomeSpace::binary(3);
    let random_tables = random_generating_model(&truth, &space, 0xc12, 1.0).unwrap();
    let data = sample(&random_tables, 10_000, 0xc12_3000);
    let learned = sgm::learn_strata(&data, &graph, &SearchConfig::default()).unwrap();
    assert!(learned.sg.has_strata());

    pass(
        12,
        &format!(
            "empty graph {empty_hits}/100, dependent edge {edge_hits}/100, \
             strata {strata_hits}/100"
        ),
    );
}
