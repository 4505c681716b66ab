//! Graph basics: separation queries, decomposability, maximal cliques, and
//! the junction tree with its separators.
//!
//! ```bash
//! cargo run --example junction_tree
//! ```

use sgm::UndirectedGraph;

fn main() -> sgm::Result<()> {
    // Five nodes: a triangle {0,1,2}, a second triangle {1,2,3}, and a
    // pendant edge {3,4}.
    let g = UndirectedGraph::with_edges(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)])?;

    println!("decomposable: {}", g.is_decomposable());
    println!(
        "x0 and x3 separated by {{x1,x2}}: {}",
        g.separates(&[0], &[3], &[1, 2])?
    );
    println!(
        "x0 and x4 separated by {{x3}}:    {}",
        g.separates(&[0], &[4], &[3])?
    );
    println!(
        "x0 and x1 separated by nothing:  {}",
        g.separates(&[0], &[1], &[])?
    );

    println!("\nmaximal cliques:");
    for clique in g.maximal_cliques()? {
        println!("  {clique:?}");
    }

    let jt = g.junction_tree()?;
    println!("\njunction tree (clique <- separator):");
    for (i, clique) in jt.cliques().iter().enumerate() {
        match i {
            0 => println!("  {clique:?}  (root)"),
            _ => println!("  {clique:?}  <- {:?}", jt.separators()[i - 1]),
        }
    }

    // A four-cycle has no chord, so clique enumeration refuses it.
    let cycle = UndirectedGraph::with_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)])?;
    println!("\nfour-cycle decomposable: {}", cycle.is_decomposable());
    println!(
        "four-cycle cliques: {:?}",
        cycle.maximal_cliques().err().map(|e| e.to_string())
    );
    Ok(())
}
