//! Binary decision trees that are optimally robust against box-shaped
//! adversarial perturbations.
//!
//! Samples are moved within per-feature intervals `[x - dl, x + dr]` on
//! features scaled to `[0, 1]`. The crate evaluates trees exactly under
//! that attack ([`adversary`]), bounds the best achievable accuracy with a
//! bipartite matching ([`bound`]), trains greedy ([`greedy`]) and provably
//! optimal trees ([`exact`]), and exports the training problem as MaxSAT
//! ([`maxsat`]) or MILP ([`milp`]) models for external solvers ([`bridge`]).

pub mod adversary;
pub mod attack;
pub mod bound;
pub mod bridge;
pub mod cli;
pub mod data;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod greedy;
pub mod margin;
pub mod maxsat;
pub mod milp;
pub mod thresholds;
pub mod tree;

pub use adversary::{accuracy, adversarial_accuracy, adversarial_errors, attack_witness, is_robust, reachable_leaves};
pub use attack::AttackModel;
pub use bound::{adversarial_accuracy_bound, epsilon_sweep, select_epsilons};
pub use bridge::{fit, FitOptions, Method, SolutionFormat, SolverConfig};
pub use data::{load_csv, scale_features, Dataset, ScalingInfo};
pub use error::{Error, Result};
pub use exact::{solve_exact, SearchBudget, SolveResult, SolveStatus};
pub use greedy::fit_greedy;
pub use margin::maximize_margin;
pub use tree::{Split, Tree};
