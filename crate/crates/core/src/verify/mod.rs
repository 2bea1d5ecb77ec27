//! Verification harness: exponent bookkeeping, lemma-level checks and ensembles.

pub mod boundedness;
pub mod cancellation;
pub mod decay;
pub mod harness;
pub mod indices;
pub mod majorant;

pub use boundedness::{boundedness_ratio, scale_invariance_test, SlotDraw};
pub use cancellation::{check_cancellation, CancellationReport};
pub use decay::{check_decay_lemma, DecayReport, DecayVerdict};
pub use harness::{run_experiment, run_trial, Check, Context, ExperimentConfig, ExperimentReport, TrialRecord};
pub use indices::{index_arithmetic, validate_for_symbol, IndexData};
pub use majorant::{check_fs_inequality, check_local_estimate, check_pointwise_majorant};
