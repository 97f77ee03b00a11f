//! Depth selection by stratified cross-validation for greedy and exact
//! training at two attack radii, written as a CSV table. Uses the first 30
//! rows so the exact runs stay quick.

use robtree::experiment::{run_experiment, write_results_csv, AttackSetting, ExperimentPlan};
use robtree::{load_csv, scale_features, Method};

fn main() -> robtree::Result<()> {
    let (full, _) = scale_features(&load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/blobs.csv"))?)?;
    let data = full.subset(&(0..30).collect::<Vec<_>>());
    let p = data.n_features();
    let attacks = vec![AttackSetting::epsilon(p, 0.02)?, AttackSetting::epsilon(p, 0.08)?];
    let mut plan = ExperimentPlan::new(attacks, vec![1, 2], vec![Method::Greedy, Method::Exact], 42);
    plan.time_limit = Some(std::time::Duration::from_secs(5));

    let rows = run_experiment(&data, &plan)?;
    write_results_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}
