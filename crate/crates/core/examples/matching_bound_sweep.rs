//! Upper bound on adversarial accuracy over a grid of radii, computed from a
//! maximum matching between boxes of opposite classes.
//!
//! Usage: cargo run --example matching_bound_sweep [CSV]

use robtree::bound::{linear_grid, min_errors, write_sweep_csv};
use robtree::{epsilon_sweep, load_csv, scale_features, AttackModel};

fn main() -> robtree::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/blobs.csv").into());
    let (data, _) = scale_features(&load_csv(&path)?)?;
    println!("{} samples, {} features, majority {:.3}", data.n_samples(), data.n_features(), data.majority_fraction());

    let attack = AttackModel::epsilon(data.n_features(), 0.05)?;
    println!("at radius 0.05 at least {} sample(s) must be misclassified", min_errors(&data, &attack));

    let sweep = epsilon_sweep(&data, &linear_grid(0.3, 12))?;
    write_sweep_csv(&sweep, std::io::stdout().lock())?;
    Ok(())
}
