//! Greedy versus provably optimal training on XOR under an L-infinity
//! attack, with and without margin maximization.

use robtree::{
    adversarial_accuracy, fit_greedy, maximize_margin, solve_exact, AttackModel, Dataset, SearchBudget,
};

fn main() -> robtree::Result<()> {
    let rows = [vec![0.2, 0.2], vec![0.8, 0.8], vec![0.2, 0.8], vec![0.8, 0.2]];
    let data = Dataset::new(&rows, &[0, 0, 1, 1], 2)?;
    let attack = AttackModel::epsilon(2, 0.1)?;

    let greedy = fit_greedy(&data, &attack, 2);
    println!("greedy  depth 2: adversarial accuracy {:.3}", adversarial_accuracy(&greedy, &data, &attack));

    let exact = solve_exact(&data, &attack, 2, SearchBudget::default())?;
    println!(
        "optimal depth 2: adversarial accuracy {:.3} ({}, {} nodes)",
        adversarial_accuracy(&exact.tree, &data, &attack),
        exact.status.as_str(),
        exact.nodes_expanded
    );

    let wide = maximize_margin(&exact.tree, &data, &attack);
    println!("thresholds before margin maximization: {:?}", thresholds(&exact.tree));
    println!("thresholds after:                      {:?}", thresholds(&wide));
    println!("{}", wide.to_json());
    Ok(())
}

fn thresholds(tree: &robtree::Tree) -> Vec<(usize, f64)> {
    tree.nodes().iter().map(|s| (s.feature, s.threshold)).collect()
}
