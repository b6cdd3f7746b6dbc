//! Measure what learning algorithms leak about their training coin flips.
//!
//! The experiment at the center of this crate: draw 2n i.i.d. examples
//! arranged as an n-column array with two rows, flip n fair bits to pick one
//! row entry per column as the training set, run a learner on it, and ask how
//! much information the learner's output (or its loss pattern on the whole
//! array) carries about the bits. That conditional mutual information is a
//! certified generalization budget, and for the concrete learners implemented
//! here it can be measured exactly at desk scale and compared against
//! closed-form bounds.
//!
//! The crate is organized as a pipeline:
//!
//! - [`sample`] / [`class`] / [`dist`]: labeled data, finite hypothesis
//!   classes, and the data sources experiments draw from.
//! - [`combinatorics`]: dimension/width quantities of a class (VC dimension,
//!   star number, growth counts, version spaces, teaching sets).
//! - [`learners`]: the algorithms under study, from max-margin halfspaces to
//!   deliberately leaky empirical risk minimizers.
//! - [`oig`]: one-inclusion graphs, low-out-degree orientations, and the
//!   transductive predictors built from them.
//! - [`info`]: the two-row supersample construction and exact or sampled
//!   conditional-information estimates.
//! - [`bounds`]: every closed-form budget the experiments audit, reported as
//!   measured-vs-bound rows with pass/fail verdicts.
//! - [`harness`]: config-driven experiment runners behind the CLI.
//!
//! All information quantities are in nats unless a name says otherwise.

pub mod bounds;
pub mod class;
pub mod combinatorics;
pub mod dist;
pub mod error;
pub mod harness;
pub mod info;
pub mod learners;
pub mod oig;
pub mod sample;

pub use class::FiniteClass;
pub use dist::{ContinuousSpec, DataSpec, Family, FiniteDistribution, Prob, TargetRule};
pub use error::{Error, Result};
pub use sample::{empirical_risk, Example, Halfspace, Input, Label, LabeledSample};
