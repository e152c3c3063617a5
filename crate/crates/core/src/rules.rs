//! Scoring rules for distributional forecasts. Every score is negatively
//! oriented: lower is better.
//!
//! Gridded rules evaluate the CDF at bin centers and integrate with a
//! Riemann sum over bin widths. The ensemble energy score uses the plug-in
//! estimator with the biased `1/(2m^2)` double sum; the unbiased variant
//! would divide the spread term by `2m(m-1)` instead.
//!
//! `beta = 2` is accepted for energy scores even though the rule is only
//! proper (not strictly proper) there: a point forecast at the mean attains
//! the same expected score as the true distribution.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, ScoreError};
use crate::forecasts::{EnsembleForecast, GriddedForecast, PointForecast, SupportGrid};

/// Lower clamp applied to the CRLS integrand before taking the log.
pub const CRLS_FLOOR: f64 = 1e-12;

/// Weight function over the outcome axis for the weighted CRPS.
///
/// With `u = (x - x_min) / (x_max - x_min)` and the grid edges as bounds:
/// uniform is `1`, left tail is `(1 - u)^2`, right tail is `u^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Uniform,
    LeftTail,
    RightTail,
}

impl WeightKind {
    pub const ALL: [WeightKind; 3] = [
        WeightKind::Uniform,
        WeightKind::LeftTail,
        WeightKind::RightTail,
    ];

    pub fn weight(self, x: f64, x_min: f64, x_max: f64) -> f64 {
        let u = (x - x_min) / (x_max - x_min);
        match self {
            WeightKind::Uniform => 1.0,
            WeightKind::LeftTail => (1.0 - u) * (1.0 - u),
            WeightKind::RightTail => u * u,
        }
    }

    /// Weights at the bin centers of `grid`, normalized by its outer edges.
    pub fn grid_weights(self, grid: &SupportGrid) -> Vec<f64> {
        let (lo, hi) = (grid.lower(), grid.upper());
        grid.centers()
            .iter()
            .map(|&x| self.weight(x, lo, hi))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightKind::Uniform => "uniform",
            WeightKind::LeftTail => "left",
            WeightKind::RightTail => "right",
        }
    }
}

/// A scoring rule together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    Crps,
    Crls,
    LogScore,
    WeightedCrps { weight: WeightKind },
    Interval { alpha: f64 },
    Energy { beta: f64 },
    Variogram { p: f64 },
}

impl Rule {
    /// Parses CLI-style identifiers such as `crps`, `wcrps-right`, `is:0.05`.
    pub fn parse(s: &str) -> Result<Rule> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |default: Option<f64>| -> Result<f64> {
            match arg {
                Some(a) => a
                    .parse::<f64>()
                    .map_err(|_| ScoreError::Domain(format!("bad rule parameter in {s:?}"))),
                None => default
                    .ok_or_else(|| ScoreError::Domain(format!("rule {s:?} needs a parameter"))),
            }
        };
        let rule = match head {
            "crps" => Rule::Crps,
            "crls" => Rule::Crls,
            "log" | "log_score" => Rule::LogScore,
            "wcrps" | "wcrps-uniform" => Rule::WeightedCrps {
                weight: WeightKind::Uniform,
            },
            "wcrps-left" => Rule::WeightedCrps {
                weight: WeightKind::LeftTail,
            },
            "wcrps-right" => Rule::WeightedCrps {
                weight: WeightKind::RightTail,
            },
            "is" | "interval" => Rule::Interval {
                alpha: num(Some(0.05))?,
            },
            "energy" | "es" => Rule::Energy {
                beta: num(Some(1.0))?,
            },
            "variogram" | "vs" => Rule::Variogram { p: num(Some(0.5))? },
            _ => return domain(format!("unknown rule {s:?}")),
        };
        Ok(rule)
    }

    /// Scores a gridded forecast. Energy scores treat the PMF as a weighted
    /// ensemble on the bin centers; the variogram score is multivariate only.
    pub fn score_gridded(&self, f: &GriddedForecast, y: f64) -> Result<ScoreValue> {
        match *self {
            Rule::Crps => crps(f, y),
            Rule::Crls => crls(f, y),
            Rule::LogScore => log_score(f, y),
            Rule::WeightedCrps { weight } => weighted_crps(f, y, weight),
            Rule::Interval { alpha } => interval_score(f, y, alpha),
            Rule::Energy { beta } => energy_score_gridded(f, y, beta),
            Rule::Variogram { .. } => domain("the variogram score needs multivariate ensembles"),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Crps => write!(f, "crps"),
            Rule::Crls => write!(f, "crls"),
            Rule::LogScore => write!(f, "log"),
            Rule::WeightedCrps { weight } => write!(f, "wcrps-{}", weight.name()),
            Rule::Interval { alpha } => write!(f, "is:{alpha}"),
            Rule::Energy { beta } => write!(f, "energy:{beta}"),
            Rule::Variogram { p } => write!(f, "variogram:{p}"),
        }
    }
}

/// A score together with the rule (and parameters) that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreValue {
    pub value: f64,
    pub rule: Rule,
}

impl ScoreValue {
    fn new(value: f64, rule: Rule) -> Self {
        Self { value, rule }
    }
}

fn check_obs(y: f64) -> Result<()> {
    if y.is_finite() {
        Ok(())
    } else {
        domain("observation must be finite")
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 2.0 {
        Ok(())
    } else {
        domain(format!("beta = {beta} outside (0, 2]"))
    }
}

fn weighted_crps_sum(f: &GriddedForecast, y: f64, weights: Option<&[f64]>) -> f64 {
    let grid = f.grid();
    let cdf = f.cdf_values();
    let mut total = 0.0;
    for (i, (&x, &dx)) in grid.centers().iter().zip(grid.widths()).enumerate() {
        let step = if x >= y { 1.0 } else { 0.0 };
        let d = cdf[i] - step;
        let w = weights.map_or(1.0, |w| w[i]);
        total += w * d * d * dx;
    }
    total
}

/// Discretized CRPS: `sum_i (F(x_i) - 1{x_i >= y})^2 dx_i`.
pub fn crps(f: &GriddedForecast, y: f64) -> Result<ScoreValue> {
    check_obs(y)?;
    Ok(ScoreValue::new(weighted_crps_sum(f, y, None), Rule::Crps))
}

/// CRPS with a tail weight evaluated at bin centers.
pub fn weighted_crps(f: &GriddedForecast, y: f64, weight: WeightKind) -> Result<ScoreValue> {
    check_obs(y)?;
    let rule = Rule::WeightedCrps { weight };
    let value = match weight {
        WeightKind::Uniform => weighted_crps_sum(f, y, None),
        _ => weighted_crps_sum(f, y, Some(&weight.grid_weights(f.grid()))),
    };
    Ok(ScoreValue::new(value, rule))
}

/// Support-truncated CRLS: `-sum_i log|F(x_i) + 1{y <= x_i} - 1| dx_i`.
///
/// The integrand is `-log F` right of the observation and `-log(1 - F)` left
/// of it; both are clamped at [`CRLS_FLOOR`]. Scores are only comparable
/// between forecasts on the same grid.
pub fn crls(f: &GriddedForecast, y: f64) -> Result<ScoreValue> {
    check_obs(y)?;
    let grid = f.grid();
    if !grid.contains(y) {
        return domain(format!(
            "observation {y} outside grid support [{}, {}]",
            grid.lower(),
            grid.upper()
        ));
    }
    let cdf = f.cdf_values();
    let surv = f.survival_values();
    let mut total = 0.0;
    for (i, (&x, &dx)) in grid.centers().iter().zip(grid.widths()).enumerate() {
        let v = if y <= x { cdf[i] } else { surv[i] };
        total -= v.clamp(CRLS_FLOOR, 1.0).ln() * dx;
    }
    Ok(ScoreValue::new(total, Rule::Crls))
}

/// Central-interval score with `l`, `u` the `alpha/2` and `1 - alpha/2` quantiles.
pub fn interval_score(f: &GriddedForecast, y: f64, alpha: f64) -> Result<ScoreValue> {
    check_obs(y)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha = {alpha} outside (0, 1)"));
    }
    let l = f.quantile(alpha / 2.0)?;
    let u = f.quantile(1.0 - alpha / 2.0)?;
    Ok(ScoreValue::new(
        interval_score_bounds(l, u, y, alpha),
        Rule::Interval { alpha },
    ))
}

pub(crate) fn interval_score_bounds(l: f64, u: f64, y: f64, alpha: f64) -> f64 {
    let mut s = u - l;
    if y < l {
        s += 2.0 / alpha * (l - y);
    }
    if y > u {
        s += 2.0 / alpha * (y - u);
    }
    s
}

/// `-log` of the density (mass / width) of the bin holding `y`.
/// A zero-mass bin scores `f64::INFINITY`.
pub fn log_score(f: &GriddedForecast, y: f64) -> Result<ScoreValue> {
    check_obs(y)?;
    let grid = f.grid();
    let bin = grid
        .bin_of(y)
        .ok_or_else(|| ScoreError::Domain(format!("observation {y} outside grid support")))?;
    let mass = f.pmf()[bin];
    let value = if mass > 0.0 {
        -(mass / grid.widths()[bin]).ln()
    } else {
        f64::INFINITY
    };
    Ok(ScoreValue::new(value, Rule::LogScore))
}

#[inline]
fn pow_abs(d: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        d.abs()
    } else if beta == 2.0 {
        d * d
    } else {
        d.abs().powf(beta)
    }
}

/// Univariate ensemble energy score.
pub fn energy_score(f: &EnsembleForecast, y: f64, beta: f64) -> Result<ScoreValue> {
    check_obs(y)?;
    check_beta(beta)?;
    if f.dim() != 1 {
        return domain(format!(
            "univariate energy score on a {}-dimensional ensemble",
            f.dim()
        ));
    }
    let xs: Vec<f64> = f.members().iter().map(|m| m[0]).collect();
    let m = xs.len() as f64;
    let fit: f64 = xs.iter().map(|&x| pow_abs(x - y, beta)).sum::<f64>() / m;
    let mut spread = 0.0;
    for &a in &xs {
        for &b in &xs {
            spread += pow_abs(a - b, beta);
        }
    }
    Ok(ScoreValue::new(
        fit - spread / (2.0 * m * m),
        Rule::Energy { beta },
    ))
}

/// Energy score of a Dirac forecast: `|m - y|^beta`.
pub fn energy_score_point(f: &PointForecast, y: f64, beta: f64) -> Result<ScoreValue> {
    check_obs(y)?;
    check_beta(beta)?;
    Ok(ScoreValue::new(
        pow_abs(f.location() - y, beta),
        Rule::Energy { beta },
    ))
}

/// Energy score of a gridded forecast seen as a weighted ensemble on the
/// bin centers.
pub fn energy_score_gridded(f: &GriddedForecast, y: f64, beta: f64) -> Result<ScoreValue> {
    check_obs(y)?;
    check_beta(beta)?;
    let cs = f.grid().centers();
    let p = f.pmf();
    let mut fit = 0.0;
    let mut spread = 0.0;
    for i in 0..cs.len() {
        if p[i] == 0.0 {
            continue;
        }
        fit += p[i] * pow_abs(cs[i] - y, beta);
        for j in 0..cs.len() {
            spread += p[i] * p[j] * pow_abs(cs[i] - cs[j], beta);
        }
    }
    Ok(ScoreValue::new(fit - 0.5 * spread, Rule::Energy { beta }))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Multivariate energy score with Euclidean norms.
pub fn energy_score_mv(f: &EnsembleForecast, y: &[f64], beta: f64) -> Result<ScoreValue> {
    check_beta(beta)?;
    if y.len() != f.dim() {
        return domain(format!(
            "observation has dimension {} but ensemble has {}",
            y.len(),
            f.dim()
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return domain("observation must be finite");
    }
    let xs = f.members();
    let m = xs.len() as f64;
    let fit: f64 = xs.iter().map(|x| pow_abs(euclid(x, y), beta)).sum::<f64>() / m;
    let mut spread = 0.0;
    for a in xs {
        for b in xs {
            spread += pow_abs(euclid(a, b), beta);
        }
    }
    Ok(ScoreValue::new(
        fit - spread / (2.0 * m * m),
        Rule::Energy { beta },
    ))
}

/// Default variogram weights: 1 off the diagonal, 0 on it.
pub fn default_variogram_weights(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|j| (0..d).map(|k| if j == k { 0.0 } else { 1.0 }).collect())
        .collect()
}

/// Variogram score of order `p` with the expectation replaced by the
/// ensemble average. `weights = None` uses [`default_variogram_weights`].
pub fn variogram_score(
    f: &EnsembleForecast,
    y: &[f64],
    p: f64,
    weights: Option<&[Vec<f64>]>,
) -> Result<ScoreValue> {
    let d = f.dim();
    if d < 2 {
        return domain("the variogram score needs dimension >= 2");
    }
    if !(p > 0.0 && p.is_finite()) {
        return domain(format!("variogram order p = {p} must be positive"));
    }
    if y.len() != d {
        return domain(format!(
            "observation has dimension {} but ensemble has {d}",
            y.len()
        ));
    }
    let default;
    let w = match weights {
        Some(w) => {
            if w.len() != d || w.iter().any(|row| row.len() != d) {
                return domain(format!("weight matrix must be {d}x{d}"));
            }
            for j in 0..d {
                for k in 0..d {
                    if !(w[j][k] >= 0.0) || w[j][k] != w[k][j] {
                        return domain("weight matrix must be symmetric and nonnegative");
                    }
                }
            }
            w
        }
        None => {
            default = default_variogram_weights(d);
            &default[..]
        }
    };
    let m = f.len() as f64;
    let mut total = 0.0;
    for j in 0..d {
        for k in 0..d {
            if w[j][k] == 0.0 {
                continue;
            }
            let obs = (y[j] - y[k]).abs().powf(p);
            let expected: f64 = f
                .members()
                .iter()
                .map(|x| (x[j] - x[k]).abs().powf(p))
                .sum::<f64>()
                / m;
            total += w[j][k] * (obs - expected).powi(2);
        }
    }
    Ok(ScoreValue::new(total, Rule::Variogram { p }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn grid01() -> Arc<SupportGrid> {
        Arc::new(SupportGrid::new(vec![0.0, 1.0, 2.0]).unwrap())
    }

    fn fc(pmf: &[f64]) -> GriddedForecast {
        GriddedForecast::new(grid01(), pmf.to_vec()).unwrap()
    }

    #[test]
    fn crps_examples() {
        let g = Arc::new(SupportGrid::new(vec![0.0, 1.0]).unwrap());
        let perfect = GriddedForecast::new(g, vec![1.0]).unwrap();
        assert_eq!(crps(&perfect, 0.5).unwrap().value, 0.0);
        assert_eq!(crps(&fc(&[1.0, 0.0]), 1.5).unwrap().value, 1.0);
        assert_eq!(crps(&fc(&[0.5, 0.5]), 0.5).unwrap().value, 0.25);
        assert!(crps(&fc(&[0.5, 0.5]), f64::NAN).is_err());
    }

    #[test]
    fn energy_examples() {
        let p = PointForecast::new(2.0).unwrap();
        assert_eq!(energy_score_point(&p, 5.0, 1.0).unwrap().value, 3.0);
        let v = energy_score_point(&p, 4.0, 1.8).unwrap().value;
        assert!((v - 3.482202253184496).abs() < 1e-12);
        let e = EnsembleForecast::univariate(vec![0.0, 2.0]).unwrap();
        assert_eq!(energy_score(&e, 1.0, 1.0).unwrap().value, 0.5);
        assert!(energy_score(&e, 1.0, 0.0).is_err());
        assert!(energy_score(&e, 1.0, 2.5).is_err());
        assert!(energy_score(&e, 1.0, 2.0).is_ok());
    }

    #[test]
    fn energy_mv_examples() {
        let e = EnsembleForecast::univariate(vec![0.0, 2.0]).unwrap();
        assert_eq!(energy_score_mv(&e, &[1.0], 1.0).unwrap().value, 0.5);
        let single = EnsembleForecast::multivariate(vec![vec![1.0, -2.0, 3.0]]).unwrap();
        assert_eq!(
            energy_score_mv(&single, &[1.0, -2.0, 3.0], 1.3)
                .unwrap()
                .value,
            0.0
        );
        let e2 = EnsembleForecast::multivariate(vec![vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(energy_score_mv(&e2, &[1.0, 0.0], 1.0).unwrap().value, 0.5);
        assert!(energy_score_mv(&e2, &[1.0], 1.0).is_err());
    }

    #[test]
    fn crls_examples() {
        let g = Arc::new(SupportGrid::new(vec![0.0, 1.0]).unwrap());
        let perfect = GriddedForecast::new(g, vec![1.0]).unwrap();
        assert_eq!(crls(&perfect, 0.5).unwrap().value, 0.0);
        let v = crls(&fc(&[0.5, 0.5]), 0.5).unwrap().value;
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
        // Left of y the integrand is 1 - F(0.5) = 0.1; at the upper center
        // |F + 1 - 1| = 1 contributes nothing.
        let v = crls(&fc(&[0.9, 0.1]), 1.5).unwrap().value;
        assert!((v - std::f64::consts::LN_10).abs() < 1e-12);
        assert!(crls(&fc(&[0.5, 0.5]), 2.5).is_err());
    }

    #[test]
    fn crls_clamps_zero_integrand() {
        let v = crls(&fc(&[1.0, 0.0]), 1.5).unwrap().value;
        assert!(v.is_finite());
        assert!((v - (-(CRLS_FLOOR).ln())).abs() < 1e-9);
    }

    #[test]
    fn interval_examples() {
        let g = Arc::new(SupportGrid::from_centers(&[-1.96, 0.0, 1.96]).unwrap());
        let f = GriddedForecast::new(g, vec![0.03, 0.94, 0.03]).unwrap();
        assert!((interval_score(&f, 0.0, 0.05).unwrap().value - 3.92).abs() < 1e-12);
        assert!((interval_score(&f, 3.0, 0.05).unwrap().value - 45.52).abs() < 1e-9);
        let one = GriddedForecast::new(
            Arc::new(SupportGrid::new(vec![0.0, 2.0]).unwrap()),
            vec![1.0],
        )
        .unwrap();
        assert_eq!(interval_score(&one, 1.0, 0.1).unwrap().value, 0.0);
        assert!(interval_score(&one, 1.0, 1.0).is_err());
    }

    #[test]
    fn log_score_examples() {
        let g = Arc::new(SupportGrid::new(vec![0.0, 1.0]).unwrap());
        let f = GriddedForecast::new(g, vec![1.0]).unwrap();
        assert_eq!(log_score(&f, 0.3).unwrap().value, 0.0);
        let v = log_score(&fc(&[0.5, 0.5]), 0.2).unwrap().value;
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(
            log_score(&fc(&[1.0, 0.0]), 1.2).unwrap().value,
            f64::INFINITY
        );
        assert!(log_score(&fc(&[1.0, 0.0]), 3.0).is_err());
    }

    #[test]
    fn weighted_crps_uniform_is_crps() {
        let f = fc(&[0.3, 0.7]);
        for y in [0.1, 0.9, 1.5] {
            assert_eq!(
                weighted_crps(&f, y, WeightKind::Uniform)
                    .unwrap()
                    .value
                    .to_bits(),
                crps(&f, y).unwrap().value.to_bits()
            );
        }
    }

    #[test]
    fn weighted_crps_left_tail_against_quadrature() {
        // Midpoint quadrature with the CDF and indicator frozen at each bin's
        // center and the weight varying continuously inside the bin.
        let f = fc(&[1.0, 0.0]);
        let y = 1.5;
        let n = 200_000;
        let h = 2.0 / n as f64;
        let cdf = f.cdf_values();
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                let bin = f.grid().bin_of(x).unwrap();
                let c = f.grid().centers()[bin];
                let step = if c >= y { 1.0 } else { 0.0 };
                (cdf[bin] - step).powi(2) * WeightKind::LeftTail.weight(x, 0.0, 2.0) * h
            })
            .sum();
        let v = weighted_crps(&f, y, WeightKind::LeftTail).unwrap().value;
        // Only bin 0 contributes: (1 - 0)^2 * (1 - 0.25)^2 * 1.
        assert!((v - 0.5625).abs() < 1e-12);
        // Exact value 7/12 of the oracle; gap is the within-bin weight variation.
        assert!((oracle - 7.0 / 12.0).abs() < 1e-9);
        assert!((v - oracle).abs() < 0.025, "{v} vs {oracle}");
    }

    #[test]
    fn right_tail_weight_penalizes_upper_errors_more() {
        let g = Arc::new(SupportGrid::uniform(0.0, 10.0, 10).unwrap());
        let y = 5.5;
        // Forecast mass one bin below y (error below) vs one bin above (error above).
        let mut below = vec![0.0; 10];
        below[3] = 1.0;
        let mut above = vec![0.0; 10];
        above[7] = 1.0;
        let below = GriddedForecast::new(g.clone(), below).unwrap();
        let above = GriddedForecast::new(g, above).unwrap();
        let plain_b = crps(&below, y).unwrap().value;
        let plain_a = crps(&above, y).unwrap().value;
        assert_eq!(plain_b, plain_a);
        let rb = weighted_crps(&below, y, WeightKind::RightTail)
            .unwrap()
            .value;
        let ra = weighted_crps(&above, y, WeightKind::RightTail)
            .unwrap()
            .value;
        assert!(rb < ra);
        let lb = weighted_crps(&below, y, WeightKind::LeftTail)
            .unwrap()
            .value;
        let la = weighted_crps(&above, y, WeightKind::LeftTail)
            .unwrap()
            .value;
        assert!(lb > la);
    }

    #[test]
    fn variogram_examples() {
        let y = [0.3, -1.0, 2.0];
        let e = EnsembleForecast::multivariate(vec![y.to_vec()]).unwrap();
        assert_eq!(variogram_score(&e, &y, 0.5, None).unwrap().value, 0.0);
        let e = EnsembleForecast::multivariate(vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(
            variogram_score(&e, &[0.0, 1.0], 1.0, None).unwrap().value,
            2.0
        );
        let zeros = vec![vec![0.0; 2]; 2];
        assert_eq!(
            variogram_score(&e, &[0.0, 1.0], 1.0, Some(&zeros))
                .unwrap()
                .value,
            0.0
        );
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(variogram_score(&e, &[0.0, 1.0], 1.0, Some(&asym)).is_err());
        let uni = EnsembleForecast::univariate(vec![1.0]).unwrap();
        assert!(variogram_score(&uni, &[1.0], 1.0, None).is_err());
    }

    #[test]
    fn interval_at_least_width() {
        let g = Arc::new(SupportGrid::uniform(-3.0, 3.0, 12).unwrap());
        let pmf: Vec<f64> = (0..12)
            .map(|i| 1.0 + (i as f64 * 0.7).sin().abs())
            .collect();
        let s: f64 = pmf.iter().sum();
        let f = GriddedForecast::new(g, pmf.iter().map(|p| p / s).collect()).unwrap();
        let l = f.quantile(0.05).unwrap();
        let u = f.quantile(0.95).unwrap();
        for i in 0..60 {
            let y = -4.0 + i as f64 * 8.0 / 59.0;
            let v = interval_score(&f, y, 0.1).unwrap().value;
            assert!(v >= u - l);
            assert_eq!(v == u - l, (l..=u).contains(&y));
        }
    }

    #[test]
    fn rule_parse_roundtrip() {
        for s in [
            "crps",
            "crls",
            "log",
            "wcrps-left",
            "wcrps-right",
            "wcrps-uniform",
            "is:0.05",
            "energy:1.8",
        ] {
            let r = Rule::parse(s).unwrap();
            assert_eq!(Rule::parse(&r.to_string()).unwrap(), r);
        }
        assert!(Rule::parse("brier").is_err());
    }
}
