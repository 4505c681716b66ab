//! A small replicated success-rate sweep comparing the five classifier
//! variants as the training size grows.
//!
//! ```bash
//! cargo run --release --example experiment_sweep
//! ```

use sgm::harness::{run_sweep, ExperimentPlan, StructureMode, SweepVariable};

fn main() -> sgm::Result<()> {
    let mut plan = ExperimentPlan::new(
        StructureMode::Fixed,
        SweepVariable::TrainRows,
        vec![10, 50, 250],
    );
    plan.fixed_rows = 20; // test rows per class
    plan.components = 4; // 20 features
    plan.replicates = 20;
    plan.seed = 31;
    let report = run_sweep(&plan, None)?;
    print!("{}", report.to_csv());
    Ok(())
}
