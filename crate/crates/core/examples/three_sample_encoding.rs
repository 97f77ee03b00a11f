//! Builds the MaxSAT and MILP models of a three-sample, one-feature problem
//! and prints them, then decodes the encoding of the optimal depth-1 tree.

use robtree::maxsat::{assignment_for_tree, build_encoding, decode_tree, WcnfFormat};
use robtree::milp::{build_milp, MilpMode};
use robtree::{solve_exact, AttackModel, Dataset, SearchBudget};

fn main() -> robtree::Result<()> {
    let data = Dataset::new(&[vec![0.3], vec![0.4], vec![0.55]], &[0, 1, 1], 1)?;
    let attack = AttackModel::epsilon(1, 0.1)?;

    let encoding = build_encoding(&data, &attack, 1)?;
    println!("candidates for feature 0: {:?}", encoding.vars.candidates().feature(0));
    println!("--- WCNF ({} vars, {} clauses)", encoding.vars.n_vars(), encoding.wcnf.n_clauses());
    print!("{}", encoding.wcnf.to_string(WcnfFormat::Classic));

    let milp = build_milp(&data, &attack, 1, MilpMode::Continuous)?;
    println!("--- LP ({} vars)", milp.n_vars());
    print!("{}", milp.to_lp_string());

    let best = solve_exact(&data, &attack, 1, SearchBudget::default())?;
    println!("--- optimal tree: {} error(s)\n{}", best.objective, best.tree.to_json());
    let assignment = assignment_for_tree(&encoding, &best.tree, &data, &attack)?;
    println!("encoded cost of that tree: {}", encoding.wcnf.cost(&assignment));
    let decoded = decode_tree(&encoding, &assignment, &data, &attack)?;
    println!("decoded back: {} error(s)", decoded.errors);
    Ok(())
}
