//! # fogshield
//!
//! A deterministic simulator for fog-assisted wireless sensor networks that
//! injects four denial-of-service attack behaviors (flooding, black hole,
//! selective forwarding, gray hole), turns the resulting traffic into a
//! labeled 20-feature dataset, and detects the attacks with a from-scratch
//! machine-learning pipeline: PCA/SVD feature selection, four classifiers
//! (decision tree, logistic regression, gradient-boosted trees, linear SVM),
//! K-fold cross-validation, and a full metric suite.
//!
//! The crate is organized around runnable examples, one per capability:
//!
//! ```bash
//! cargo run --release --example simulate_network
//! cargo run --release --example attack_impact
//! cargo run --release --example generate_dataset
//! cargo run --release --example feature_selection
//! cargo run --release --example train_classifiers
//! cargo run --release --example cross_validation
//! cargo run --release --example full_pipeline
//! ```
//!
//! A thin `fogshield` binary wires the same stages into subcommands
//! (`simulate`, `dataset`, `train-eval`, `report`, `pipeline`) for scripted
//! runs; see the README for the file formats it reads and writes.

pub mod attack;
pub mod classifiers;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod network;
pub mod sim;

pub use error::{Error, Result};
