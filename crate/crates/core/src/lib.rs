//! Train slot allocation on a shared corridor.
//!
//! Operators request paths along a single line; the infrastructure manager
//! may shift departures within a margin, pays for it through a penalty on the
//! access fee, and must keep every pair of scheduled trains a safety headway
//! apart. [`optimizer::run`] searches over departure vectors, and each
//! candidate is scored by [`scheduler::evaluate_proposal`]: validate, detect
//! pairwise conflicts, price, then pick a conflict-free set greedily.
//!
//! ```
//! use slotplan::generate::{generate_instance, GenerateSpec};
//! use slotplan::optimizer::{run, Algorithm, AlgorithmConfig};
//! use slotplan::scheduler::{evaluate_proposal, requested_vector, EvalOptions};
//!
//! let instance = generate_instance(&GenerateSpec::new(6, 2, 1)).unwrap();
//! let baseline = evaluate_proposal(&instance, &requested_vector(&instance), EvalOptions::default()).unwrap();
//! let config = AlgorithmConfig { epochs: 10, population: 8, ..AlgorithmConfig::defaults(Algorithm::Ga) };
//! let trace = run(&instance, &config).unwrap();
//! assert!(trace.best_fitness >= baseline.total);
//! ```

pub mod bench;
pub mod conflict;
pub mod generate;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod penalty;
pub mod plot;
pub mod scheduler;
pub mod stats;

pub use model::{Minutes, ProblemInstance};
