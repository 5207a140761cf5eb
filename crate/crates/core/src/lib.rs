//! Monotone calibration of binary classifier scores with the
//! pool-adjacent-violators algorithm.
//!
//! The PAV fit of a label sequence sorted by score is optimal for every
//! regular binary proper scoring rule at once, and its LLR form is the same
//! for every prior. This crate provides the fit ([`pav`]), the scoring rules
//! used to judge it ([`rules`]), brute-force references ([`oracle`]), LLR
//! calibration ([`llr`]), deployable score maps ([`map`]) and a packaged
//! property suite ([`selfcheck`]).

pub mod error;
pub mod llr;
pub mod map;
pub mod oracle;
pub mod pav;
pub mod quad;
pub mod rules;
pub mod selfcheck;
pub mod types;

pub use error::{Error, Result};
pub use llr::{llr_calibrate, logit, posterior_from_llr, sigmoid, weights_from_prior, LlrCalibration};
pub use map::{build_map, CalibrationMap, Knot, Mode, Policy};
pub use oracle::{grid_minimizer, maxmin_oracle, minmax_oracle, GridMinimum};
pub use pav::{pav_fit, pav_fit_grouped, pav_posteriors};
pub use rules::{expected_cost, objective, rule_cost, Cost, ScoringRule};
pub use types::{expand, Block, BlockSolution, ClassCounts, Label, Trial, WeightPair};
