//! Writes the training problem for external solvers: WCNF in both layouts,
//! both LP models, and MILP start files built from the greedy tree.
//!
//! Usage: cargo run --example export_solver_files [OUT_DIR]

use std::fs::File;

use robtree::maxsat::{build_encoding, WcnfFormat};
use robtree::milp::{build_milp, write_warm_start, MilpMode};
use robtree::{fit_greedy, load_csv, maximize_margin, scale_features, AttackModel};

fn main() -> robtree::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "solver_files".into());
    std::fs::create_dir_all(&out)?;
    let (data, _) = scale_features(&load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/blobs.csv"))?)?;
    let attack = AttackModel::epsilon(data.n_features(), 0.05)?;
    let depth = 2;

    let encoding = build_encoding(&data, &attack, depth)?;
    encoding.wcnf.write(File::create(format!("{out}/problem.wcnf"))?, WcnfFormat::Classic)?;
    encoding.wcnf.write(File::create(format!("{out}/problem-2022.wcnf"))?, WcnfFormat::Modern)?;
    println!("problem.wcnf: {} vars, {} clauses", encoding.vars.n_vars(), encoding.wcnf.n_clauses());

    let start = maximize_margin(&fit_greedy(&data, &attack, depth), &data, &attack);
    for (mode, name) in [(MilpMode::Continuous, "continuous"), (MilpMode::Binary, "binary")] {
        let model = build_milp(&data, &attack, depth, mode)?;
        model.write_lp(File::create(format!("{out}/problem-{name}.lp"))?)?;
        let values = write_warm_start(&model, &start, &data, &attack, File::create(format!("{out}/warm-{name}.mst"))?)?;
        println!(
            "problem-{name}.lp: {} vars; warm start objective {}",
            model.n_vars(),
            model.objective_value(&values)
        );
    }
    Ok(())
}
