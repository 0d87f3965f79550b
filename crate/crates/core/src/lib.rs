//! Outward accessibility of street networks from self-avoiding random walks.
//!
//! The pipeline: load a [`StreetNetwork`], estimate per-step transition
//! probabilities with [`walk`], turn them into diversity entropy and outward
//! accessibility with [`accessibility`], and compare baseline against
//! enhanced networks with [`scenario`]. [`oracle`] enumerates the same walk
//! law exactly on small graphs.

pub mod accessibility;
pub mod engine;
pub mod error;
pub mod export;
pub mod ingest;
pub mod network;
pub mod oracle;
pub mod rng;
pub mod scenario;
pub mod transition;
pub mod walk;

pub use accessibility::{
    accessibility_field, diversity_entropy, outward_accessibility, region_mean_curve,
    AccessibilityField, AccessibilityOptions, ExtinctStepRule, NodeAccessibility,
};
pub use engine::{compute_field, RunOptions};
pub use error::{Error, Result};
pub use network::{generators, NodeId, NodeSet, Point, StreetNetwork};
pub use oracle::{exact_accessibility, exact_transitions, ExactTransition};
pub use scenario::{
    affected_region, apply_scenario, compare, evaluate_scenario, ComparisonReport, EvaluateOptions,
    Scenario, ScenarioDocument,
};
pub use transition::{Distribution, StepTransitions};
pub use walk::{
    estimate_all, estimate_transitions, sample_walk, Sources, Termination, TransitionEstimate,
    WalkConfig, WalkPath,
};
