//! Proper scoring rules and evaluation harness for distributional regression.
//!
//! * [`forecasts`]: gridded, ensemble and point forecasts.
//! * [`rules`]: CRPS, CRLS, energy, interval, log, weighted CRPS and
//!   variogram scores.
//! * [`pointscore`]: Bregman families, pinball loss and 1-D elicitation.
//! * [`toygen`] / [`toymodels`]: seeded data generators and the five toy
//!   forecasters.
//! * [`ranking`]: parameter sweeps and rank tables.
//! * [`fit`]: score-minimizing conditional histograms and binned point fits.
//! * [`bench`]: six-metric evaluation and paired baseline comparisons.
//! * [`cli`]: the `scorebench` command line.

// NaN-rejecting `!(x > 0.0)` checks and index loops over matrices are intentional.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::redundant_guards
)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod fit;
pub mod forecasts;
pub mod pointscore;
pub mod ranking;
pub mod rules;
pub mod toygen;
pub mod toymodels;

pub use error::{Result, ScoreError};
pub use forecasts::{EnsembleForecast, GriddedForecast, PointForecast, SupportGrid};
pub use rules::{Rule, ScoreValue, WeightKind};
