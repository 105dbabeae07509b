//! Robust graph covering with maximin group-fairness constraints.
//!
//! Monitors are placed on `I` nodes of a directed coverage graph; up to `J`
//! of them may fail adversarially. The crate solves the K-adaptability
//! counterpart of the resulting two-stage problem as a mixed-integer
//! program, either monolithically or by delayed block generation, and
//! provides brute-force oracles, heuristics and price-of-fairness tools.

pub mod baselines;
pub mod benders;
pub mod error;
pub mod exact_oracle;
pub mod fairness_search;
pub mod instance;
pub mod kadapt_model;
pub mod netmodel;
pub mod pof_lab;
pub mod solver_kernel;
pub mod uncertainty;

pub use error::{Error, Result};
pub use instance::Instance;
