//! Predictive distribution data model.
//!
//! A [`GriddedForecast`] is a probability mass function over the bins of a
//! [`SupportGrid`]. All mass of a bin is treated as located at the bin center,
//! so the CDF is a right-continuous step function jumping at the centers.
//! The scoring rules in [`crate::rules`] share this convention.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, ScoreError};

/// Absolute tolerance accepted on the total mass of a PMF.
pub const PMF_SUM_TOL: f64 = 1e-9;
/// PMFs whose mass is off by at most this much are renormalized on construction.
pub const PMF_RENORM_TOL: f64 = 1e-6;

/// Binned support: strictly increasing edges with derived centers and widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridEdges", into = "GridEdges")]
pub struct SupportGrid {
    edges: Vec<f64>,
    centers: Vec<f64>,
    widths: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridEdges {
    edges: Vec<f64>,
}

impl TryFrom<GridEdges> for SupportGrid {
    type Error = ScoreError;
    fn try_from(g: GridEdges) -> Result<Self> {
        SupportGrid::new(g.edges)
    }
}

impl From<SupportGrid> for GridEdges {
    fn from(g: SupportGrid) -> Self {
        GridEdges { edges: g.edges }
    }
}

impl SupportGrid {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(ScoreError::InvalidForecast(
                "a grid needs at least two edges".into(),
            ));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(ScoreError::InvalidForecast(
                "grid edges must be finite".into(),
            ));
        }
        if let Some(i) = edges.windows(2).position(|w| w[1] <= w[0]) {
            return Err(ScoreError::InvalidForecast(format!(
                "grid edges not strictly increasing at index {}",
                i + 1
            )));
        }
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let widths = edges.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            edges,
            centers,
            widths,
        })
    }

    /// `n` equal-width bins spanning `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || !(lo < hi) {
            return domain("uniform grid needs n >= 1 and lo < hi");
        }
        let step = (hi - lo) / n as f64;
        let mut edges: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
        edges[n] = hi;
        Self::new(edges)
    }

    /// Unit-width bins centered on the given strictly increasing, equally spaced points.
    pub fn from_centers(centers: &[f64]) -> Result<Self> {
        match centers {
            [] => domain("no centers"),
            [c] => Self::new(vec![c - 0.5, c + 0.5]),
            _ => {
                let mut edges = Vec::with_capacity(centers.len() + 1);
                edges.push(centers[0] - 0.5 * (centers[1] - centers[0]));
                for w in centers.windows(2) {
                    edges.push(0.5 * (w[0] + w[1]));
                }
                let n = centers.len();
                edges.push(centers[n - 1] + 0.5 * (centers[n - 1] - centers[n - 2]));
                Self::new(edges)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn lower(&self) -> f64 {
        self.edges[0]
    }

    pub fn upper(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn max_width(&self) -> f64 {
        self.widths.iter().copied().fold(0.0, f64::max)
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.lower() && y <= self.upper()
    }

    /// Index of the bin containing `y`. Bins are half-open `[e_i, e_{i+1})`
    /// except the last, which also holds the upper edge.
    pub fn bin_of(&self, y: f64) -> Option<usize> {
        if !self.contains(y) {
            return None;
        }
        let idx = self.edges.partition_point(|&e| e <= y);
        Some(idx.saturating_sub(1).min(self.len() - 1))
    }
}

/// Probability mass over the bins of a shared [`SupportGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedForecast {
    grid: Arc<SupportGrid>,
    pmf: Vec<f64>,
}

impl GriddedForecast {
    /// Validates the PMF, renormalizing mass drift up to [`PMF_RENORM_TOL`].
    pub fn new(grid: Arc<SupportGrid>, pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() != grid.len() {
            return Err(ScoreError::InvalidForecast(format!(
                "pmf has {} entries but grid has {} bins",
                pmf.len(),
                grid.len()
            )));
        }
        if let Some(i) = pmf.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(ScoreError::InvalidForecast(format!(
                "pmf entry {i} is negative or non-finite"
            )));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_RENORM_TOL {
            return Err(ScoreError::InvalidForecast(format!(
                "pmf sums to {total}, expected 1"
            )));
        }
        let pmf = if (total - 1.0).abs() > PMF_SUM_TOL {
            pmf.into_iter().map(|p| p / total).collect()
        } else {
            pmf
        };
        Ok(Self { grid, pmf })
    }

    /// All mass in the bin containing `y`.
    pub fn point_mass(grid: Arc<SupportGrid>, y: f64) -> Result<Self> {
        let bin = grid
            .bin_of(y)
            .ok_or_else(|| ScoreError::Domain(format!("{y} outside grid support")))?;
        let mut pmf = vec![0.0; grid.len()];
        pmf[bin] = 1.0;
        Self::new(grid, pmf)
    }

    pub fn grid(&self) -> &SupportGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<SupportGrid> {
        &self.grid
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// CDF at every bin center. The last entry is exactly 1.
    pub fn cdf_values(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let n = self.pmf.len();
        let mut out: Vec<f64> = self
            .pmf
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect();
        out[n - 1] = 1.0;
        out
    }

    /// Survival `1 - F(x_i)` at every bin center, accumulated from the right
    /// so small tail masses keep full precision. The last entry is exactly 0.
    pub fn survival_values(&self) -> Vec<f64> {
        let n = self.pmf.len();
        let mut out = vec![0.0; n];
        let mut acc = 0.0;
        for i in (0..n - 1).rev() {
            acc += self.pmf[i + 1];
            out[i] = acc.min(1.0);
        }
        out
    }

    pub fn cdf_at(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return domain("cdf_at requires a finite argument");
        }
        let centers = self.grid.centers();
        let k = centers.partition_point(|&c| c <= x);
        if k == 0 {
            Ok(0.0)
        } else if k == centers.len() {
            Ok(1.0)
        } else {
            Ok(self.pmf[..k].iter().sum::<f64>().min(1.0))
        }
    }

    /// Smallest bin center whose CDF reaches `tau`.
    pub fn quantile(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau < 1.0) {
            return domain(format!("quantile level {tau} not in (0,1)"));
        }
        let cdf = self.cdf_values();
        let idx = cdf.iter().position(|&f| f >= tau).unwrap_or(cdf.len() - 1);
        Ok(self.grid.centers()[idx])
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .zip(self.grid.centers())
            .map(|(p, c)| p * c)
            .sum()
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5).expect("0.5 is a valid level")
    }
}

/// Sample-based forecast. Univariate ensembles are stored as 1-vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleForecast {
    samples: Vec<Vec<f64>>,
    dim: usize,
}

impl EnsembleForecast {
    pub fn univariate(samples: Vec<f64>) -> Result<Self> {
        Self::multivariate(samples.into_iter().map(|s| vec![s]).collect())
    }

    pub fn multivariate(samples: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(ScoreError::InvalidForecast(
                "ensemble needs at least one member".into(),
            ));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(ScoreError::InvalidForecast(
                "ensemble members have dimension 0".into(),
            ));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.len() != dim {
                return domain(format!(
                    "member {i} has dimension {} but member 0 has {dim}",
                    s.len()
                ));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(ScoreError::InvalidForecast(format!(
                    "member {i} is not finite"
                )));
            }
        }
        Ok(Self { samples, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.samples
    }
}

/// Dirac forecast at a single location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointForecast {
    location: f64,
}

impl PointForecast {
    pub fn new(location: f64) -> Result<Self> {
        if !location.is_finite() {
            return Err(ScoreError::InvalidForecast(
                "point forecast must be finite".into(),
            ));
        }
        Ok(Self { location })
    }

    pub fn location(&self) -> f64 {
        self.location
    }
}
