//! Picks attack radii whose accuracy bound falls a quarter, half and three
//! quarters of the way from the clean bound to the majority fraction.

use robtree::{load_csv, scale_features, select_epsilons};

fn main() -> robtree::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/blobs.csv");
    let (data, _) = scale_features(&load_csv(path)?)?;
    for s in select_epsilons(&data, &[0.25, 0.5, 0.75])? {
        println!("fraction {:.2}: epsilon {:.3} bound {:.4} (target {:.4})", s.fraction, s.epsilon, s.bound, s.target);
    }
    Ok(())
}
