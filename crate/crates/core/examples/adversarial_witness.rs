//! Exact robustness check of a hand-written tree, with a concrete
//! perturbed point for every sample the attacker can flip.

use robtree::adversary::PerturbationBox;
use robtree::{accuracy, adversarial_accuracy, attack_witness, reachable_leaves, AttackModel, Dataset, Split, Tree};

fn main() -> robtree::Result<()> {
    let rows = [vec![0.1, 0.5], vec![0.45, 0.2], vec![0.55, 0.9], vec![0.9, 0.4]];
    let data = Dataset::new(&rows, &[0, 0, 1, 1], 2)?;
    let tree = Tree::new(1, vec![Split { feature: 0, threshold: 0.5 }], vec![0, 1])?;
    let attack = AttackModel::new(vec![0.1, 0.0], vec![0.02, 0.0])?;

    println!("accuracy {:.2}, adversarial accuracy {:.2}", accuracy(&tree, &data), adversarial_accuracy(&tree, &data, &attack));
    for (i, x) in data.rows().enumerate() {
        let label = data.label(i);
        let leaves = reachable_leaves(&tree, x, &attack);
        match attack_witness(&tree, x, label, &attack) {
            Some(z) => {
                assert!(PerturbationBox::around(x, &attack).contains(&z));
                println!("sample {i} {x:?} label {label}: leaves {leaves:?}, flipped at {z:?} -> {}", tree.predict(&z));
            }
            None => println!("sample {i} {x:?} label {label}: leaves {leaves:?}, robust"),
        }
    }
    Ok(())
}
