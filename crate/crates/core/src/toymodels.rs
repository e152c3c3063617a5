//! The five synthetic point forecasters evaluated against `g(x) = sin(x)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, ScoreError};
use crate::forecasts::PointForecast;

pub const EVAL_GRID_LEN: usize = 1000;
/// Index window (inclusive) of the 50-point pulse of model B.
pub const PULSE_START: usize = 475;
pub const PULSE_END: usize = 524;
pub const PULSE_HEIGHT: f64 = 2.0;

/// 1000 equally spaced points on `[-3, 3]`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    xs: Vec<f64>,
}

impl EvalGrid {
    pub fn standard() -> Self {
        let n = EVAL_GRID_LEN;
        let step = 6.0 / (n - 1) as f64;
        let mut xs: Vec<f64> = (0..n).map(|i| -3.0 + step * i as f64).collect();
        xs[n - 1] = 3.0;
        Self { xs }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

impl Default for EvalGrid {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ToyModel {
    A,
    B,
    C,
    D,
    E,
}

impl ToyModel {
    pub const ALL: [ToyModel; 5] = [
        ToyModel::A,
        ToyModel::B,
        ToyModel::C,
        ToyModel::D,
        ToyModel::E,
    ];

    pub fn description(self) -> &'static str {
        match self {
            ToyModel::A => "bias",
            ToyModel::B => "outlier",
            ToyModel::C => "scale",
            ToyModel::D => "shift",
            ToyModel::E => "zero",
        }
    }

    /// Forecast at grid index `i` (needed for B's index-based pulse).
    pub fn value_at(self, grid: &EvalGrid, i: usize) -> f64 {
        let x = grid.xs()[i];
        match self {
            ToyModel::A => x.sin() + 0.1,
            ToyModel::B => {
                let pulse = if (PULSE_START..=PULSE_END).contains(&i) {
                    PULSE_HEIGHT
                } else {
                    0.0
                };
                x.sin() + pulse
            }
            ToyModel::C => 0.8 * x.sin(),
            ToyModel::D => (x + 0.2).sin(),
            ToyModel::E => 0.0,
        }
    }
}

impl fmt::Display for ToyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ToyModel::A => "A",
            ToyModel::B => "B",
            ToyModel::C => "C",
            ToyModel::D => "D",
            ToyModel::E => "E",
        };
        f.write_str(s)
    }
}

impl FromStr for ToyModel {
    type Err = ScoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(ToyModel::A),
            "B" | "b" => Ok(ToyModel::B),
            "C" | "c" => Ok(ToyModel::C),
            "D" | "d" => Ok(ToyModel::D),
            "E" | "e" => Ok(ToyModel::E),
            other => domain(format!("unknown toy model {other:?}")),
        }
    }
}

/// Dirac forecasts of `model` at every grid point.
pub fn eval_model(model: ToyModel, grid: &EvalGrid) -> Vec<PointForecast> {
    (0..grid.len())
        .map(|i| PointForecast::new(model.value_at(grid, i)).expect("finite"))
        .collect()
}

/// Ground truth `sin(x)` at every grid point.
pub fn truth(grid: &EvalGrid) -> Vec<PointForecast> {
    grid.xs()
        .iter()
        .map(|x| PointForecast::new(x.sin()).expect("finite"))
        .collect()
}
