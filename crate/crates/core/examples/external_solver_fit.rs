//! Trains through an external solver given as a command template, and
//! falls back to the built-in exact search when none is given.
//!
//! Usage:
//!   cargo run --example external_solver_fit -- maxsat "python3 scripts/maxsat_rc2.py {instance}"
//!   cargo run --example external_solver_fit -- milp-continuous "cbc {instance} solve solu {solution}"

use std::time::Duration;

use robtree::bridge::WarmFormat;
use robtree::{adversarial_accuracy, fit, AttackModel, Dataset, FitOptions, Method, SolutionFormat, SolverConfig};

fn main() -> robtree::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let rows = [vec![0.2, 0.2], vec![0.8, 0.8], vec![0.2, 0.8], vec![0.8, 0.2], vec![0.5, 0.45]];
    let data = Dataset::new(&rows, &[0, 0, 1, 1, 0], 2)?;
    let attack = AttackModel::epsilon(2, 0.05)?;

    let options = match args.as_slice() {
        [method, command] => {
            let method: Method = method.parse()?;
            let format = if method == Method::Maxsat { SolutionFormat::MaxSatVLine } else { SolutionFormat::LpSolutionFile };
            let mut solver = SolverConfig::new(command.clone(), Duration::from_secs(60), format)?;
            solver.warm_format = WarmFormat::Cbc;
            FitOptions { warm: true, solver: Some(solver), ..FitOptions::new(method) }
        }
        _ => {
            println!("no solver given; using the built-in exact search");
            FitOptions { time_limit: Some(Duration::from_secs(10)), ..FitOptions::new(Method::Exact) }
        }
    };

    let result = fit(&data, &attack, 2, &options)?;
    println!(
        "{}: status {}, {} error(s), adversarial accuracy {:.3}, {:.2?}",
        options.method,
        result.status.as_str(),
        result.objective,
        adversarial_accuracy(&result.tree, &data, &attack),
        result.elapsed
    );
    println!("{}", result.tree.to_json());
    Ok(())
}
