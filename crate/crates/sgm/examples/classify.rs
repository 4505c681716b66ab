//! Marginal and simultaneous classification of synthetic multi-class data,
//! with a confusion matrix.
//!
//! ```bash
//! cargo run --example classify
//! ```

use sgm::classify::{classify_marginal, classify_simultaneous, Init};
use sgm::generate::{class_generating_models, replicate_sg, sample_synthetic, SyntheticSpec};
use sgm::harness::{confusion_matrix, success_rate};
use sgm::{ClassModel, HyperParams};

fn main() -> sgm::Result<()> {
    // Five classes, two chain components each (10 features), known
    // structures; 30 training and 40 test rows per class.
    let spec = SyntheticSpec::standard(2, 99);
    let generators = class_generating_models(&spec)?;
    let (train, train_labels) = sample_synthetic(&spec, &generators, 30, 1)?;
    let (test, test_labels) = sample_synthetic(&spec, &generators, 40, 2)?;

    let hp = HyperParams::default();
    let models: Vec<ClassModel> = spec
        .class_structures
        .iter()
        .enumerate()
        .map(|(idx, component)| {
            let class = idx + 1;
            let rows: Vec<usize> = (0..train.n_rows())
                .filter(|&r| train_labels[r] == class)
                .collect();
            let sg = replicate_sg(component, spec.components)?;
            ClassModel::fit(class, sg, &train.select_rows(&rows)?, hp)
        })
        .collect::<sgm::Result<_>>()?;

    let marginal = classify_marginal(&test, &models)?;
    println!(
        "marginal:      success {:.3}, log-score {:.2}",
        success_rate(&test_labels, &marginal.labels),
        marginal.log_score
    );

    let simultaneous = classify_simultaneous(&test, &models, Init::Marginal, 0)?;
    println!(
        "simultaneous:  success {:.3}, log-score {:.2}, {} sweeps, {} reassignments",
        success_rate(&test_labels, &simultaneous.labels),
        simultaneous.log_score,
        simultaneous.iterations.unwrap(),
        simultaneous.score_gains.len()
    );

    println!("\nconfusion matrix (rows = true class):");
    for row in confusion_matrix(&test_labels, &simultaneous.labels, models.len()) {
        println!("  {row:?}");
    }

    // Per-row posteriors from the marginal classifier.
    let posts = marginal.per_observation_log_posteriors.as_ref().unwrap();
    println!("\nfirst three test rows, posterior over classes:");
    for (i, row_posts) in posts.iter().take(3).enumerate() {
        let probs: Vec<String> = row_posts
            .iter()
            .map(|lp| format!("{:.3}", lp.exp()))
            .collect();
        println!(
            "  row {i}: [{}] -> class {}",
            probs.join(", "),
            marginal.labels[i]
        );
    }
    Ok(())
}
