//! Seeded synthetic data generators.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with `seed_from_u64`.
//! Per observation the stream is consumed in a fixed order: the covariate
//! first, then the noise-component choice (if any), then the noise draw.
//! Normal and exponential variates come from `rand_distr`.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::forecasts::{GriddedForecast, SupportGrid};

/// Generator used for every seeded stream in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: String,
    pub seed: u64,
    pub parameters: serde_json::Value,
}

/// Paired covariates and targets with generation metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Subset by index, keeping the metadata.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: idx.iter().map(|&i| self.x[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Seed-deterministic shuffle split; the first part holds
    /// `round(train_frac * n)` points.
    pub fn split(&self, train_frac: f64, seed: u64) -> (Dataset, Dataset) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = seeded_rng(seed);
        // Fisher-Yates, drawing from the top down.
        for i in (1..idx.len()).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        let cut = ((train_frac * self.len() as f64).round() as usize).min(self.len());
        (self.select(&idx[..cut]), self.select(&idx[cut..]))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "y"])?;
        for (x, y) in self.x.iter().zip(&self.y) {
            wtr.write_record([format!("{x:.17e}"), format!("{y:.17e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, meta: DatasetMeta) -> Result<Dataset> {
        let mut rdr = csv::Reader::from_path(path)?;
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or(crate::error::ScoreError::Parse {
                        line: line + 2,
                        msg: "expected two finite numbers x,y".into(),
                    })
            };
            x.push(parse(0)?);
            y.push(parse(1)?);
        }
        Ok(Dataset { x, y, meta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    Left,
    Right,
}

impl TailSide {
    pub fn sign(self) -> f64 {
        match self {
            TailSide::Left => -1.0,
            TailSide::Right => 1.0,
        }
    }
}

/// Signal shapes for the outlier factory. The formulas are choices of this
/// crate; only the noise process is prescribed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// `3 e^{-|x|/2} sin(3x)`
    DampenedOscillation,
    /// `0.1 x^3 - 0.5 x`
    Polynomial,
    /// `max(0, x)`
    RectifiedTrend,
    /// Sawtooth with period 2 and amplitude 2, ranging over `[-2, 2)`.
    PiecewiseSawtooth,
}

impl SignalKind {
    pub const ALL: [SignalKind; 4] = [
        SignalKind::DampenedOscillation,
        SignalKind::Polynomial,
        SignalKind::RectifiedTrend,
        SignalKind::PiecewiseSawtooth,
    ];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            SignalKind::DampenedOscillation => 3.0 * (-x.abs() / 2.0).exp() * (3.0 * x).sin(),
            SignalKind::Polynomial => 0.1 * x.powi(3) - 0.5 * x,
            SignalKind::RectifiedTrend => x.max(0.0),
            SignalKind::PiecewiseSawtooth => {
                let period = 2.0;
                let frac = (x / period) - (x / period).floor();
                2.0 * (2.0 * frac - 1.0)
            }
        }
    }

    /// Signal used for the `i`-th dataset of a suite, cycling through all kinds.
    pub fn cycle(i: usize) -> SignalKind {
        Self::ALL[i % Self::ALL.len()]
    }
}

/// Outlier-factory configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactoryConfig {
    pub n: usize,
    pub p_out: f64,
    pub clean_sigma: f64,
    /// Magnitude of the outlier mean; the sign comes from `tail_side`.
    pub outlier_mean: f64,
    pub outlier_sigma: f64,
    pub signal_kind: SignalKind,
    pub tail_side: TailSide,
}

impl Default for FactoryConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            p_out: 0.25,
            clean_sigma: 0.2,
            outlier_mean: 7.0,
            outlier_sigma: 1.5,
            signal_kind: SignalKind::DampenedOscillation,
            tail_side: TailSide::Left,
        }
    }
}

fn normal(mean: f64, sd: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sd).or_else(|e| domain(format!("bad normal parameters: {e}")))
}

/// `x ~ U(-4, 4)`, `y = f(x) + eps`, with eps a clean/outlier Gaussian mixture.
pub fn gen_factory(cfg: &FactoryConfig, seed: u64) -> Result<Dataset> {
    if cfg.n == 0 {
        return domain("n must be at least 1");
    }
    if !(0.0..=1.0).contains(&cfg.p_out) {
        return domain(format!("p_out = {} outside [0, 1]", cfg.p_out));
    }
    if !(cfg.clean_sigma > 0.0 && cfg.outlier_sigma > 0.0) {
        return domain("noise scales must be positive");
    }
    let clean = normal(0.0, cfg.clean_sigma)?;
    let outlier = normal(cfg.tail_side.sign() * cfg.outlier_mean, cfg.outlier_sigma)?;
    let mut rng = seeded_rng(seed);
    let mut x = Vec::with_capacity(cfg.n);
    let mut y = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let xi: f64 = rng.random_range(-4.0..4.0);
        let is_out = rng.random::<f64>() < cfg.p_out;
        let eps = if is_out {
            outlier.sample(&mut rng)
        } else {
            clean.sample(&mut rng)
        };
        x.push(xi);
        y.push(cfg.signal_kind.eval(xi) + eps);
    }
    Ok(Dataset {
        x,
        y,
        meta: DatasetMeta {
            generator: "factory".into(),
            seed,
            parameters: serde_json::to_value(cfg)?,
        },
    })
}

/// `x ~ U(-4, 4)`, `y = cos(x) + eps`: Gaussian noise (sd 0.2) for `x < 0`,
/// signed `Exp(rate 0.5)` noise for `x >= 0`.
pub fn gen_cosine_exptail(n: usize, seed: u64, direction: TailSide) -> Result<Dataset> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let clean = normal(0.0, 0.2)?;
    let tail = Exp::new(0.5).or_else(|e| domain(format!("bad rate: {e}")))?;
    let mut rng = seeded_rng(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = rng.random_range(-4.0..4.0);
        let eps = if xi < 0.0 {
            clean.sample(&mut rng)
        } else {
            direction.sign() * tail.sample(&mut rng)
        };
        x.push(xi);
        y.push(xi.cos() + eps);
    }
    Ok(Dataset {
        x,
        y,
        meta: DatasetMeta {
            generator: "cosine_exptail".into(),
            seed,
            parameters: serde_json::json!({ "n": n, "direction": direction, "rate": 0.5, "clean_sigma": 0.2 }),
        },
    })
}

/// Two-mode configuration: `x ~ U(x_lo, x_hi)`, modes at
/// `center(x) -/+ gap/2` with `center(x) = slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BimodalConfig {
    pub n: usize,
    pub gap: f64,
    pub sigma: f64,
    pub slope: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl Default for BimodalConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            gap: 2.0,
            sigma: 0.15,
            slope: 0.2,
            x_lo: -3.0,
            x_hi: 3.0,
        }
    }
}

impl BimodalConfig {
    pub fn mode_low(&self, x: f64) -> f64 {
        self.slope * x - self.gap / 2.0
    }

    pub fn mode_high(&self, x: f64) -> f64 {
        self.slope * x + self.gap / 2.0
    }
}

/// Equal-weight two-Gaussian mixture whose conditional mean falls between the modes.
pub fn gen_bimodal(cfg: &BimodalConfig, seed: u64) -> Result<Dataset> {
    if cfg.n == 0 {
        return domain("n must be at least 1");
    }
    if !(cfg.gap >= 0.0) || !(cfg.sigma > 0.0) || !(cfg.x_lo < cfg.x_hi) {
        return domain("bimodal generator needs gap >= 0, sigma > 0 and x_lo < x_hi");
    }
    let noise = normal(0.0, cfg.sigma)?;
    let mut rng = seeded_rng(seed);
    let mut x = Vec::with_capacity(cfg.n);
    let mut y = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let xi: f64 = rng.random_range(cfg.x_lo..cfg.x_hi);
        let high = rng.random::<f64>() < 0.5;
        let m = if high {
            cfg.mode_high(xi)
        } else {
            cfg.mode_low(xi)
        };
        x.push(xi);
        y.push(m + noise.sample(&mut rng));
    }
    Ok(Dataset {
        x,
        y,
        meta: DatasetMeta {
            generator: "bimodal".into(),
            seed,
            parameters: serde_json::to_value(cfg)?,
        },
    })
}

/// Fair six-sided die as a gridded distribution on centers 1..=6.
pub fn die_distribution() -> GriddedForecast {
    let grid = SupportGrid::from_centers(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).expect("valid centers");
    GriddedForecast::new(Arc::new(grid), vec![1.0 / 6.0; 6]).expect("uniform pmf")
}
