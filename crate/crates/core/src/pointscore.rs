//! Scoring functions for point forecasts.
//!
//! Every Bregman family here is strictly consistent for the mean; pinball
//! loss is strictly consistent for a quantile.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, ScoreError};
use crate::forecasts::GriddedForecast;

/// Generator families `phi` with `D(y, mu) = phi(y) - phi(mu) - phi'(mu)(y - mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BregmanFamily {
    /// Shifted power family on the positive half line. `p = -1` is
    /// Itakura-Saito and `p = 0` is Poisson/KL; other `p` use
    /// `phi(x) = x^(p+2) / ((p+1)(p+2))`. `p = -2` has no generator in this
    /// parameterization and is rejected.
    PowerShifted { p: f64 },
    /// `phi(x) = |x|^p / (p(p-1))`, `p > 1`, on the whole real line.
    PowerAbs { p: f64 },
    /// `phi(x) = exp(k x^2)`, `k > 0`.
    ExpSq { k: f64 },
    /// `phi(x) = x^p + x^2`, `p >= 2`, for nonnegative arguments.
    PolyHeavy { p: f64 },
}

impl BregmanFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BregmanFamily::PowerShifted { p } if !p.is_finite() || p == -2.0 => {
                domain(format!("power_shifted exponent p = {p} unsupported"))
            }
            BregmanFamily::PowerAbs { p } if !(p > 1.0 && p.is_finite()) => {
                domain(format!("power_abs requires p > 1, got {p}"))
            }
            BregmanFamily::ExpSq { k } if !(k > 0.0 && k.is_finite()) => {
                domain(format!("exp_sq requires k > 0, got {k}"))
            }
            BregmanFamily::PolyHeavy { p } if !(p >= 2.0 && p.is_finite()) => {
                domain(format!("poly_heavy requires p >= 2, got {p}"))
            }
            _ => Ok(()),
        }
    }

    /// Whether `(y, mu)` lies in the family's domain.
    pub fn check_args(&self, y: f64, mu: f64) -> Result<()> {
        self.validate()?;
        if !y.is_finite() || !mu.is_finite() {
            return domain("Bregman arguments must be finite");
        }
        match *self {
            BregmanFamily::PowerShifted { p } => {
                let y_ok = if p <= -1.0 { y > 0.0 } else { y >= 0.0 };
                if !y_ok || mu <= 0.0 {
                    return domain(format!(
                        "power_shifted p = {p} needs positive arguments, got y = {y}, mu = {mu}"
                    ));
                }
            }
            BregmanFamily::PolyHeavy { .. } => {
                if y < 0.0 || mu < 0.0 {
                    return domain(format!(
                        "poly_heavy needs nonnegative arguments, got y = {y}, mu = {mu}"
                    ));
                }
            }
            BregmanFamily::PowerAbs { .. } | BregmanFamily::ExpSq { .. } => {}
        }
        Ok(())
    }

    /// Generator value.
    pub fn phi(&self, x: f64) -> f64 {
        match *self {
            BregmanFamily::PowerShifted { p } => {
                if p == -1.0 {
                    -x.ln()
                } else if p == 0.0 {
                    if x == 0.0 {
                        0.0
                    } else {
                        x * x.ln()
                    }
                } else {
                    x.powf(p + 2.0) / ((p + 1.0) * (p + 2.0))
                }
            }
            BregmanFamily::PowerAbs { p } => x.abs().powf(p) / (p * (p - 1.0)),
            BregmanFamily::ExpSq { k } => (k * x * x).exp(),
            BregmanFamily::PolyHeavy { p } => x.powf(p) + x * x,
        }
    }

    /// First derivative of the generator.
    pub fn phi_prime(&self, x: f64) -> f64 {
        match *self {
            BregmanFamily::PowerShifted { p } => {
                if p == -1.0 {
                    -1.0 / x
                } else if p == 0.0 {
                    x.ln() + 1.0
                } else {
                    x.powf(p + 1.0) / (p + 1.0)
                }
            }
            BregmanFamily::PowerAbs { p } => x.signum() * x.abs().powf(p - 1.0) / (p - 1.0),
            BregmanFamily::ExpSq { k } => 2.0 * k * x * (k * x * x).exp(),
            BregmanFamily::PolyHeavy { p } => p * x.powf(p - 1.0) + 2.0 * x,
        }
    }

    /// Second derivative of the generator.
    pub fn phi_second(&self, x: f64) -> f64 {
        match *self {
            BregmanFamily::PowerShifted { p } => {
                if p == -1.0 {
                    1.0 / (x * x)
                } else if p == 0.0 {
                    1.0 / x
                } else {
                    x.powf(p)
                }
            }
            BregmanFamily::PowerAbs { p } => x.abs().powf(p - 2.0),
            BregmanFamily::ExpSq { k } => (2.0 * k + 4.0 * k * k * x * x) * (k * x * x).exp(),
            BregmanFamily::PolyHeavy { p } => p * (p - 1.0) * x.powf(p - 2.0) + 2.0,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            BregmanFamily::PowerShifted { p } => format!("power_shifted:{p}"),
            BregmanFamily::PowerAbs { p } => format!("power_abs:{p}"),
            BregmanFamily::ExpSq { k } => format!("exp_sq:{k}"),
            BregmanFamily::PolyHeavy { p } => format!("poly_heavy:{p}"),
        }
    }

    pub fn from_name(family: &str, param: f64) -> Result<Self> {
        let fam = match family {
            "power_shifted" => BregmanFamily::PowerShifted { p: param },
            "power_abs" => BregmanFamily::PowerAbs { p: param },
            "exp_sq" => BregmanFamily::ExpSq { k: param },
            "poly_heavy" => BregmanFamily::PolyHeavy { p: param },
            _ => return domain(format!("unknown Bregman family {family:?}")),
        };
        fam.validate()?;
        Ok(fam)
    }
}

/// Bregman divergence `D(y, mu)`.
///
/// The power-shifted family uses the closed forms; the other families go
/// through the generator definition.
pub fn bregman(fam: BregmanFamily, y: f64, mu: f64) -> Result<f64> {
    fam.check_args(y, mu)?;
    if y == mu {
        return Ok(0.0);
    }
    let d = match fam {
        BregmanFamily::PowerShifted { p } if p == -1.0 => {
            let r = y / mu;
            r - r.ln() - 1.0
        }
        BregmanFamily::PowerShifted { p } if p == 0.0 => {
            let ylogy = if y == 0.0 { 0.0 } else { y * (y / mu).ln() };
            ylogy - y + mu
        }
        BregmanFamily::PowerShifted { p } => {
            y.powf(p + 2.0) / ((p + 1.0) * (p + 2.0)) - y * mu.powf(p + 1.0) / (p + 1.0)
                + mu.powf(p + 2.0) / (p + 2.0)
        }
        _ => fam.phi(y) - fam.phi(mu) - fam.phi_prime(mu) * (y - mu),
    };
    // Cancellation can leave tiny negative residues near y == mu.
    Ok(d.max(0.0))
}

/// `sum_y q(y) D(y, c)` over the bin centers of a gridded distribution.
pub fn expected_bregman(fam: BregmanFamily, q: &GriddedForecast, c: f64) -> Result<f64> {
    expected_bregman_discrete(fam, q.grid().centers(), q.pmf(), c)
}

/// `sum_i w_i D(y_i, c)` for a finite discrete distribution.
pub fn expected_bregman_discrete(
    fam: BregmanFamily,
    outcomes: &[f64],
    probs: &[f64],
    c: f64,
) -> Result<f64> {
    if outcomes.len() != probs.len() {
        return domain("outcomes and probabilities differ in length");
    }
    let mut total = 0.0;
    for (&y, &w) in outcomes.iter().zip(probs) {
        if w != 0.0 {
            total += w * bregman(fam, y, c)?;
        }
    }
    Ok(total)
}

/// Asymmetric piecewise-linear loss for the `tau`-quantile.
pub fn pinball(tau: f64, y: f64, q: f64) -> f64 {
    if y >= q {
        tau * (y - q)
    } else {
        (1.0 - tau) * (q - y)
    }
}

pub fn squared_error(y: f64, c: f64) -> f64 {
    (y - c) * (y - c)
}

/// Bracket and tolerance for [`elicit_optimum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Search {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl Search {
    pub const DEFAULT_TOL: f64 = 1e-8;

    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            tol: Self::DEFAULT_TOL,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Sample range, widened slightly so the optimum is interior.
    pub fn around(samples: &[f64]) -> Self {
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = 1e-6 * (hi - lo).abs().max(1.0);
        Self::new(lo - pad, hi + pad)
    }
}

/// Golden-section minimization of `c -> mean_i loss(y_i, c)` on `[lo, hi]`.
///
/// Assumes the objective is unimodal on the bracket (true for convex losses
/// and for every Bregman risk). Deterministic.
pub fn elicit_optimum<F>(loss: F, samples: &[f64], search: Search) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    if samples.is_empty() {
        return domain("elicit_optimum needs at least one sample");
    }
    if !(search.lo < search.hi) || !(search.tol > 0.0) {
        return domain(format!(
            "invalid search bracket [{}, {}] with tol {}",
            search.lo, search.hi, search.tol
        ));
    }
    let n = samples.len() as f64;
    let objective = |c: f64| -> Result<f64> {
        let v = samples.iter().map(|&y| loss(y, c)).sum::<f64>() / n;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ScoreError::Numeric(format!(
                "loss is not finite at c = {c}"
            )))
        }
    };
    golden_section(objective, search)
}

pub(crate) fn golden_section<F>(f: F, search: Search) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (search.lo, search.hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > search.tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    // The endpoints are never evaluated inside the loop; compare them so a
    // boundary optimum on a flat or monotone objective is not missed.
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid)?);
    for x in [search.lo, search.hi] {
        let v = f(x)?;
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best.0)
}

/// Exhaustive scan of `c` over `lo, lo + step, ..., hi`, returning the
/// first minimizer and the objective values.
pub fn grid_argmin<F>(f: F, lo: f64, hi: f64, step: f64) -> Result<(f64, Vec<(f64, f64)>)>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo <= hi) || !(step > 0.0) {
        return domain("grid scan needs lo <= hi and step > 0");
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut curve = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let c = lo + step * i as f64;
        curve.push((c, f(c)?));
    }
    let best = curve
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |acc, (c, v)| {
            if v < acc.1 {
                (c, v)
            } else {
                acc
            }
        });
    Ok((best.0, curve))
}
