//! Bin-picking episodes: a stand-in planner proposes grasps on a synthetic
//! bin, each attempt approaches, searches, and lifts, and a trial repeats
//! attempts under failure memory until a stop rule fires.

pub mod planner;
pub mod search;
pub mod suite;
pub mod trial;

pub use planner::{FailureMemory, GraspCandidate, Planner, PlannerParams};
pub use search::{
    approach, classify_failure, lift_test, run_attempt, AttemptParams, EndReason, EpisodeLog,
    FailureClass, Outcome, SearchLimits, SearchMode,
};
pub use suite::{default_suite, BinObject, ObjectSpec};
pub use trial::{run_trial, StopReason, TrialResult, TrialSpec};
