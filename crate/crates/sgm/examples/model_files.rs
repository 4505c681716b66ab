//! The model-file format: named nodes, edges, strata (with `*` wildcard
//! contexts), the prior strength, and optional generating tables.
//!
//! ```bash
//! cargo run --example model_files
//! ```

use sgm::generate::{random_generating_model, standard_class_structures};
use sgm::io::ModelDocument;
use sgm::{Edge, OutcomeSpace};

fn main() -> sgm::Result<()> {
    let dir = std::env::temp_dir().join("sgm-model-files");
    std::fs::create_dir_all(&dir)?;

    // Write one of the built-in structures together with drawn tables.
    let sg = standard_class_structures().remove(4);
    let space = OutcomeSpace::binary(5);
    let generator = random_generating_model(&sg, &space, 8, 1.0)?;
    let doc = ModelDocument::from_generator(&generator, 1.0);
    let path = dir.join("class.json");
    doc.save(&path)?;
    println!("wrote {}", path.display());

    let loaded = ModelDocument::load(&path)?;
    println!(
        "round trip exact: {}",
        loaded.generator.as_ref() == Some(&generator)
    );

    // Wildcards expand over a variable's categories at load time. This
    // hand-written file strata-fies edge x1-x4 for every x3 when x2 = 0.
    let wildcard = dir.join("wildcard.json");
    std::fs::write(
        &wildcard,
        r#"{
  "nodes": [
    {"name": "x1", "card": 2}, {"name": "x2", "card": 2},
    {"name": "x3", "card": 2}, {"name": "x4", "card": 2}
  ],
  "edges": [["x1","x2"],["x1","x3"],["x1","x4"],["x2","x3"],["x2","x4"],["x3","x4"]],
  "strata": [{"edge": ["x1","x4"], "contexts": [{"x2": 0, "x3": "*"}]}],
  "N": 1.0
}"#,
    )?;
    let loaded = ModelDocument::load(&wildcard)?;
    let contexts = loaded.sg.stratum(Edge::new(0, 3)?).unwrap();
    println!(
        "wildcard context expanded to {} explicit contexts: {contexts:?}",
        contexts.len()
    );
    Ok(())
}
