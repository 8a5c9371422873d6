//! Oracle-efficient differentially private optimization and synthetic data
//! generation over boolean query classes with small separator sets.
//!
//! The pieces, bottom up:
//!
//! * [`data`], [`query`], [`class`] — the boolean universe, the five query
//!   families (conjunctions, disjunctions, parities, discrete halfspaces,
//!   1-decision lists), separator-set constructions, dual classes, and the
//!   loss-query lift.
//! * [`oracle`] — weighted optimization oracles: exact brute force,
//!   certifiable/non-certifiable heuristics with failure injection, the
//!   coupled runner, and the dual oracle for the data player.
//! * [`mech`] — Laplace and Gaussian separator-perturbed minimization
//!   (single oracle call, noise only on the separator weights), report
//!   noisy max, composition accounting, and the exponential-mechanism
//!   baseline.
//! * [`prsma`] — the robust subsampling reduction: partition, repeat to
//!   detect oracle failures, noisy-count threshold, uniform release.
//! * [`synth`] — the query release game: CONTEXT-FTPL data player, private
//!   best response, and the end-to-end generation loop.
//! * [`audit`] — empirical frequency-ratio audits, TV estimates, regret
//!   experiments, and accuracy-bound tables.
//!
//! Everything random descends from explicit seeds through [`rng`], so runs
//! replay bit-for-bit.

pub mod audit;
pub mod class;
pub mod data;
pub mod error;
pub mod mech;
pub mod oracle;
pub mod prsma;
pub mod query;
pub mod rng;
pub mod synth;

pub use class::{DualView, Family, QueryClass, SeparatorSet};
pub use data::{DataPoint, Dataset, LabeledPoint, WeightedDataset};
pub use error::{Error, Result};
pub use mech::{MechOutcome, MechanismOutput, Perturbation, PrivacyParams};
pub use oracle::{
    CertifiableOracle, CoupledOracle, DualOracle, ExactDualOracle, ExactOracle, FailurePolicy,
    NoncertifiableOracle, OracleAnswer, OracleOutcome, WeightedMinimizer,
};
pub use prsma::{PrsmaConfig, PrsmaOutcome};
pub use query::{eval_on_dataset, eval_weighted, Query, QueryKind};
pub use synth::{SynthParams, SynthPreset, SynthRun, SyntheticDataset};
