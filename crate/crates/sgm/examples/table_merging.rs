//! How strata reshape a clique's conditional probability table: contexts on
//! the clique's edges merge parent outcomes of the last variable into groups
//! that share one conditional distribution.
//!
//! ```bash
//! cargo run --example table_merging
//! ```

use sgm::strata::{common_neighbors, ParentGrouping};
use sgm::{Edge, OutcomeSpace, StratifiedGraph, Stratum, UndirectedGraph};

fn main() -> sgm::Result<()> {
    // A triangle {1,2,3} (node 0 stays isolated so the indices echo x1..x3
    // naming). Contexts: x1 = 0 on edge {2,3} and x2 = 0 on edge {1,3}.
    let g = UndirectedGraph::with_edges(4, &[(1, 2), (1, 3), (2, 3)])?;
    let sg = StratifiedGraph::new(
        g,
        [
            Stratum::new(Edge::new(2, 3)?, [vec![0]]),
            Stratum::new(Edge::new(1, 3)?, [vec![0]]),
        ],
    )?;
    println!("decomposable stratified graph: {}", sg.is_decomposable_sg());
    for (edge, contexts) in sg.strata() {
        let neighbors = common_neighbors(sg.graph(), edge)?;
        println!("stratum on {edge}: contexts {contexts:?} over common neighbors {neighbors:?}");
    }

    let space = OutcomeSpace::binary(4);
    let grouping = ParentGrouping::for_clique(&sg, &[1, 2, 3], &space)?;
    println!(
        "\nclique ordering: {:?} (shared stratified node last)",
        grouping.ordering()
    );

    let last = grouping.len() - 1;
    println!("parent groups of the last variable:");
    for (gi, members) in grouping.group_members(last).iter().enumerate() {
        println!(
            "  group {gi} (size {}): {members:?}",
            grouping.group_size(last, gi)
        );
    }
    println!("\nWithout strata the table would keep 4 distinct rows; the two");
    println!(
        "contexts chain-merge three of them, leaving {} groups.",
        grouping.group_count(last)
    );
    Ok(())
}
