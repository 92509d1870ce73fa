//! Detection of k polarized groups and a neutral remainder.

pub mod drq;
pub mod elbow;
pub mod objective;
pub mod oracle;
pub mod partition;
pub mod scg;

pub use drq::{drq_quotient, drq_quotient_weighted, drq_solve, leading_eigenpair, DrqOptions, DrqResult, EigenOptions};
pub use elbow::{elbow_curve, elbow_curve_with, suggest_k, ElbowCurve, KneeSuggestion};
pub use objective::{conflict_score, objective_f, objective_terms, ObjectiveTerms, PairSum};
pub use oracle::brute_force_groups;
pub use partition::{Partition, NEUTRAL};
pub use scg::{scg_detect, scg_detect_with, Peeling, ScgOptions, ScgOutcome};
