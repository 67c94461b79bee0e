//! Gibbs-objective QAOA and ansatz architecture search on exactly simulable
//! Ising spin glasses.
//!
//! The crate is organised bottom-up:
//!
//! - [`instances`]: grid / complete-graph Ising instances, energy tables, exact ground states
//! - [`simulator`]: statevector simulation of the `p`-level phase/mixer ansatz on an ansatz graph
//! - [`objectives`]: Gibbs objective, `<E>`, `P(E < E0)`, η estimates, cumulants, depolarizing noise
//! - [`optimizer`]: seeded Nelder-Mead
//! - [`analytics`]: closed-form `p = 1` energy and estimated / fixed parameters
//! - [`search`]: ansatz architecture search (greedy and beam) with several scoring rules
//! - [`harness`]: batch experiments, percentile summaries and report files

pub mod analytics;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod instances;
pub mod objectives;
pub mod optimizer;
pub mod search;
pub mod seed;
pub mod simulator;

pub use error::{Error, Result};
pub use evaluation::{Evaluation, InstanceContext, OptimizedAnsatz};
pub use instances::{EdgeMask, GraphKind, ProblemInstance};
pub use simulator::{AnsatzGraph, CircuitParams, StateVector};
