//! Exact marginal likelihood of data under graphical and stratified
//! graphical models, and the posterior-predictive chain rule.
//!
//! ```bash
//! cargo run --example marginal_likelihood
//! ```

use sgm::generate::{random_generating_model, sample};
use sgm::score::graph_marginal_likelihood;
use sgm::{ClassModel, Edge, HyperParams, OutcomeSpace, StratifiedGraph, Stratum, UndirectedGraph};

fn main() -> sgm::Result<()> {
    let g = UndirectedGraph::with_edges(3, &[(0, 1), (0, 2), (1, 2)])?;
    let sg = StratifiedGraph::new(
        g.clone(),
        [
            Stratum::new(Edge::new(1, 2)?, [vec![0]]),
            Stratum::new(Edge::new(0, 2)?, [vec![0]]),
        ],
    )?;
    let gm = StratifiedGraph::plain(g);
    let space = OutcomeSpace::binary(3);
    let hp = HyperParams::default();

    // Sample from a distribution that honors the strata, then compare the
    // stratified and plain scores: pooling merged parent outcomes pays off.
    let generator = random_generating_model(&sg, &space, 42, 1.0)?;
    for n in [50usize, 500, 5000] {
        let data = sample(&generator, n, 7);
        let s_sgm = graph_marginal_likelihood(&data, &sg, &hp)?;
        let s_gm = graph_marginal_likelihood(&data, &gm, &hp)?;
        println!(
            "n = {n:5}: log P(stratified) = {s_sgm:12.3}  log P(plain) = {s_gm:12.3}  \
             edge = {:+.3}",
            s_sgm - s_gm
        );
    }

    // The scores are real log-probabilities: over every dataset of a fixed
    // size they sum to one.
    let mut total = 0.0;
    for a in 0u8..8 {
        for b in 0u8..8 {
            let rows = vec![
                vec![a & 1, (a >> 1) & 1, (a >> 2) & 1],
                vec![b & 1, (b >> 1) & 1, (b >> 2) & 1],
            ];
            let data = sgm::DataMatrix::new(
                vec!["x1".into(), "x2".into(), "x3".into()],
                vec![2; 3],
                rows,
            )?;
            total += graph_marginal_likelihood(&data, &sg, &hp)?.exp();
        }
    }
    println!("\nsum over all 64 two-row datasets: {total:.12}");

    // Chain rule: scoring everything at once equals scoring a prefix and
    // then the rest predictively.
    let train = sample(&generator, 100, 9);
    let test = sample(&generator, 20, 11);
    let joint = graph_marginal_likelihood(&train.concat(&test)?, &sg, &hp)?;
    let prefix = graph_marginal_likelihood(&train, &sg, &hp)?;
    let model = ClassModel::fit(1, sg, &train, hp)?;
    let predictive = model.log_predictive_counts(&model.count_rows(test.rows_iter()));
    println!("chain rule residual: {:+.2e}", joint - prefix - predictive);
    Ok(())
}
