//! Multi Expression Programming (MEP) for classification and regression.
//!
//! MEP is a linear genetic programming variant in which every gene of a
//! chromosome encodes a complete expression over the preceding genes, so a
//! single evaluation pass scores as many candidate solutions as the
//! chromosome has genes. This crate provides:
//!
//! * the chromosome representation and variation operators ([`genome`]),
//! * single-pass evaluation of all encoded expressions ([`eval`]),
//! * fitness/decoding strategies for binary and multi-class classification
//!   ([`fitness`]),
//! * a steady-state island-model evolutionary engine ([`engine`]),
//! * dataset containers and train/validation/test splitting ([`dataset`]).
//!
//! The crate is `no_std`-compatible (`default-features = false,
//! features = ["libm"]`); everything allocates through `alloc`. File I/O,
//! dataset loaders and the command line live in the companion `mep-cli`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("mep requires either the `std` or the `libm` feature");

pub mod dataset;
pub mod engine;
pub mod eval;
pub mod fitness;
pub mod genome;
mod math;

pub use dataset::{split, Dataset, LabelVector, SplitSpec};
pub use engine::{
    mix_seed, run, run_with_observer, EvolutionConfig, GenerationExecutor, GenerationLog,
    Individual, RunResult, SequentialExecutor, Subpopulation,
};
pub use eval::{evaluate, gene_to_expression, DataMatrix, EvalMatrix};
pub use fitness::{
    AssignmentMode, ClassifierModel, FitnessReport, ModelDecision, Prediction, Strategy,
};
pub use genome::{
    crossover, mutate, validate, Chromosome, CrossoverMode, Gene, Op, PrimitiveSet,
    VariationParams,
};
