//! Optimum score estimation at desk scale.
//!
//! [`CondHistModel`] is a conditional histogram: the covariate axis is cut
//! into bins and every covariate bin owns a row of logits whose softmax is a
//! PMF over a shared target grid. Training minimizes the mean score over the
//! data by full-batch gradient descent on the logits, with gradients taken
//! analytically through the CDF (CRPS family, CRLS) or the bin mass (log
//! score).

use std::path::Path;
use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, ScoreError};
use crate::forecasts::{GriddedForecast, SupportGrid};
use crate::pointscore::{bregman, elicit_optimum, pinball, BregmanFamily, Search};
use crate::rules::{Rule, WeightKind, CRLS_FLOOR};
use crate::toygen::{seeded_rng, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondHistModel {
    x_edges: Vec<f64>,
    y_grid: SupportGrid,
    logits: Vec<Vec<f64>>,
}

impl CondHistModel {
    /// All-zero logits, i.e. a uniform PMF in every covariate bin.
    pub fn uniform(x_edges: Vec<f64>, y_grid: SupportGrid) -> Result<Self> {
        if x_edges.len() < 2 || x_edges.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("covariate edges must be strictly increasing with at least two entries");
        }
        let logits = vec![vec![0.0; y_grid.len()]; x_edges.len() - 1];
        Ok(Self {
            x_edges,
            y_grid,
            logits,
        })
    }

    pub fn with_logits(
        x_edges: Vec<f64>,
        y_grid: SupportGrid,
        logits: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut m = Self::uniform(x_edges, y_grid)?;
        if logits.len() != m.logits.len() || logits.iter().any(|r| r.len() != m.y_grid.len()) {
            return domain("logit matrix shape does not match the bins");
        }
        if logits.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ScoreError::Numeric("logits must be finite".into()));
        }
        m.logits = logits;
        Ok(m)
    }

    pub fn x_edges(&self) -> &[f64] {
        &self.x_edges
    }

    pub fn y_grid(&self) -> &SupportGrid {
        &self.y_grid
    }

    pub fn logits(&self) -> &[Vec<f64>] {
        &self.logits
    }

    pub fn n_x_bins(&self) -> usize {
        self.logits.len()
    }

    /// Covariate bin holding `x`; the last bin is closed on the right.
    pub fn x_bin(&self, x: f64) -> Option<usize> {
        let lo = self.x_edges[0];
        let hi = *self.x_edges.last().unwrap();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let idx = self.x_edges.partition_point(|&e| e <= x);
        Some(idx.saturating_sub(1).min(self.n_x_bins() - 1))
    }

    pub fn row_pmf(&self, k: usize) -> Vec<f64> {
        softmax(&self.logits[k])
    }

    pub fn forecast_row(&self, k: usize) -> GriddedForecast {
        GriddedForecast::new(Arc::new(self.y_grid.clone()), self.row_pmf(k))
            .expect("softmax rows are valid PMFs")
    }

    pub fn forecast(&self, x: f64) -> Result<GriddedForecast> {
        let k = self
            .x_bin(x)
            .ok_or_else(|| ScoreError::Domain(format!("covariate {x} outside model range")))?;
        Ok(self.forecast_row(k))
    }

    pub fn save_json(&self, path: &Path, config: Option<&TrainConfig>) -> Result<()> {
        let doc = SavedModel {
            schema_version: 1,
            rule: config.map(|c| c.rule),
            config: config.cloned(),
            model: self.clone(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<(CondHistModel, Option<TrainConfig>)> {
        let doc: SavedModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let m = CondHistModel::with_logits(doc.model.x_edges, doc.model.y_grid, doc.model.logits)?;
        Ok((m, doc.config))
    }
}

#[derive(Serialize, Deserialize)]
struct SavedModel {
    schema_version: u32,
    rule: Option<Rule>,
    config: Option<TrainConfig>,
    model: CondHistModel,
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn check_trainable(rule: &Rule) -> Result<()> {
    match rule {
        Rule::Crps | Rule::Crls | Rule::LogScore | Rule::WeightedCrps { .. } => Ok(()),
        other => domain(format!(
            "rule {other} is not a supported training objective"
        )),
    }
}

/// Per covariate bin, the counts every trainable rule depends on.
#[derive(Debug, Clone)]
struct RowStats {
    n: f64,
    /// Points with `y <= center_i`.
    at_or_below: Vec<f64>,
    /// Points falling in bin `i` of the target grid.
    in_bin: Vec<f64>,
}

/// Data summarized per covariate bin; built once per training run.
#[derive(Debug, Clone)]
pub struct TrainingStats {
    rows: Vec<RowStats>,
    n: usize,
}

impl TrainingStats {
    pub fn new(model: &CondHistModel, data: &Dataset) -> Result<Self> {
        let row_of = check_data(model, data)?;
        let n_y = model.y_grid.len();
        let mut rows = vec![
            RowStats {
                n: 0.0,
                at_or_below: vec![0.0; n_y],
                in_bin: vec![0.0; n_y],
            };
            model.n_x_bins()
        ];
        let centers = model.y_grid.centers();
        for (&k, &y) in row_of.iter().zip(&data.y) {
            let r = &mut rows[k];
            r.n += 1.0;
            r.in_bin[model.y_grid.bin_of(y).expect("checked")] += 1.0;
            // first center >= y; every center from there on has y <= center
            let first = centers.partition_point(|&c| c < y);
            if first < n_y {
                r.at_or_below[first] += 1.0;
            }
        }
        for r in &mut rows {
            let mut acc = 0.0;
            for v in r.at_or_below.iter_mut() {
                acc += *v;
                *v = acc;
            }
        }
        Ok(Self {
            rows,
            n: data.len(),
        })
    }
}

/// Summed score of one row's points and its gradient with respect to the PMF.
fn row_score_and_pmf_grad(
    rule: &Rule,
    grid: &SupportGrid,
    weights: Option<&[f64]>,
    pmf: &[f64],
    stats: &RowStats,
    grad: &mut [f64],
) -> f64 {
    let n = pmf.len();
    let widths = grid.widths();
    grad.iter_mut().for_each(|g| *g = 0.0);
    if stats.n == 0.0 {
        return 0.0;
    }
    match rule {
        Rule::LogScore => {
            let mut loss = 0.0;
            for b in 0..n {
                let c = stats.in_bin[b];
                if c > 0.0 {
                    loss -= c * (pmf[b] / widths[b]).ln();
                    grad[b] = -c / pmf[b];
                }
            }
            loss
        }
        Rule::Crls => {
            // F_i and S_i = 1 - F_i accumulated from opposite ends.
            let mut cdf = vec![0.0; n];
            let mut acc = 0.0;
            for i in 0..n {
                acc += pmf[i];
                cdf[i] = acc.min(1.0);
            }
            cdf[n - 1] = 1.0;
            let mut surv = vec![0.0; n];
            acc = 0.0;
            for i in (0..n - 1).rev() {
                acc += pmf[i + 1];
                surv[i] = acc.min(1.0);
            }
            let mut loss = 0.0;
            let mut d_cdf = vec![0.0; n];
            let mut d_surv = vec![0.0; n];
            for i in 0..n {
                // c points see -log F_i, the rest see -log S_i
                let c = stats.at_or_below[i];
                let rest = stats.n - c;
                if c > 0.0 {
                    loss -= c * cdf[i].clamp(CRLS_FLOOR, 1.0).ln() * widths[i];
                    if cdf[i] > CRLS_FLOOR {
                        d_cdf[i] = -c * widths[i] / cdf[i];
                    }
                }
                if rest > 0.0 {
                    loss -= rest * surv[i].clamp(CRLS_FLOOR, 1.0).ln() * widths[i];
                    if surv[i] > CRLS_FLOOR {
                        d_surv[i] = -rest * widths[i] / surv[i];
                    }
                }
            }
            // dF_i/dp_j = 1{j <= i}, dS_i/dp_j = 1{j > i}
            let mut from_right = 0.0;
            for j in (0..n).rev() {
                from_right += d_cdf[j];
                grad[j] = from_right;
            }
            let mut from_left = 0.0;
            for j in 0..n {
                grad[j] += from_left;
                from_left += d_surv[j];
            }
            loss
        }
        Rule::Crps | Rule::WeightedCrps { .. } => {
            // sum over points of (F - H)^2 = n F^2 - 2 c F + c
            let mut acc = 0.0;
            let mut loss = 0.0;
            let mut from_right = 0.0;
            let mut d_cdf = vec![0.0; n];
            for i in 0..n {
                acc += pmf[i];
                let f = if i == n - 1 { 1.0 } else { acc.min(1.0) };
                let c = stats.at_or_below[i];
                let w = weights.map_or(1.0, |w| w[i]) * widths[i];
                loss += w * (stats.n * f * f - 2.0 * c * f + c);
                d_cdf[i] = 2.0 * w * (stats.n * f - c);
            }
            for j in (0..n).rev() {
                from_right += d_cdf[j];
                grad[j] = from_right;
            }
            loss
        }
        _ => unreachable!("checked by check_trainable"),
    }
}

fn rule_weights(rule: &Rule, grid: &SupportGrid) -> Option<Vec<f64>> {
    match rule {
        Rule::WeightedCrps { weight } if *weight != WeightKind::Uniform => {
            Some(weight.grid_weights(grid))
        }
        _ => None,
    }
}

fn check_data(model: &CondHistModel, data: &Dataset) -> Result<Vec<usize>> {
    if data.is_empty() {
        return domain("empty dataset");
    }
    let mut rows = Vec::with_capacity(data.len());
    for (i, (&x, &y)) in data.x.iter().zip(&data.y).enumerate() {
        let k = model.x_bin(x).ok_or_else(|| {
            ScoreError::Domain(format!("point {i}: covariate {x} outside model range"))
        })?;
        if !y.is_finite() || !model.y_grid.contains(y) {
            return domain(format!(
                "point {i}: target {y} outside grid support [{}, {}]",
                model.y_grid.lower(),
                model.y_grid.upper()
            ));
        }
        rows.push(k);
    }
    Ok(rows)
}

/// Mean score of the model over the data.
pub fn empirical_score(model: &CondHistModel, data: &Dataset, rule: &Rule) -> Result<f64> {
    Ok(empirical_gradient(model, data, rule)?.0)
}

/// Mean score and its gradient with respect to the logits.
pub fn empirical_gradient(
    model: &CondHistModel,
    data: &Dataset,
    rule: &Rule,
) -> Result<(f64, Vec<Vec<f64>>)> {
    check_trainable(rule)?;
    let stats = TrainingStats::new(model, data)?;
    Ok(gradient_from_stats(model, &stats, rule))
}

fn gradient_from_stats(
    model: &CondHistModel,
    stats: &TrainingStats,
    rule: &Rule,
) -> (f64, Vec<Vec<f64>>) {
    let weights = rule_weights(rule, &model.y_grid);
    let n_y = model.y_grid.len();
    let n = stats.n as f64;
    let mut g = vec![0.0; n_y];
    let mut total = 0.0;
    let mut logit_grad = Vec::with_capacity(model.n_x_bins());
    for (k, row) in stats.rows.iter().enumerate() {
        let p = model.row_pmf(k);
        total += row_score_and_pmf_grad(rule, &model.y_grid, weights.as_deref(), &p, row, &mut g);
        // Softmax backward: dL/dz_j = p_j (g_j - sum_k p_k g_k).
        let dot: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
        logit_grad.push(g.iter().zip(&p).map(|(a, pj)| pj * (a - dot) / n).collect());
    }
    (total / n, logit_grad)
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub rule: Rule,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without an improvement larger than `tolerance` before stopping.
    pub patience: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Standard deviation of the Gaussian logit initialization; 0 starts
    /// from the uniform PMF.
    pub init_scale: f64,
}

impl TrainConfig {
    pub fn new(rule: Rule) -> Self {
        Self {
            rule,
            learning_rate: 1.0,
            max_epochs: 500,
            patience: 20,
            seed: 0,
            tolerance: 1e-9,
            init_scale: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        check_trainable(&self.rule)?;
        if !(self.learning_rate > 0.0) {
            return domain("learning rate must be positive");
        }
        if self.max_epochs == 0 {
            return domain("max_epochs must be at least 1");
        }
        if !(self.init_scale >= 0.0) {
            return domain("init_scale must be nonnegative");
        }
        Ok(())
    }
}

/// Trained model with per-epoch diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Logits with the lowest training score seen.
    pub model: CondHistModel,
    /// Training score before each update, then the final score.
    pub loss_trace: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub epochs_run: usize,
    pub best_score: f64,
}

/// Full-batch gradient descent on the empirical score.
pub fn fit_cond_hist(
    data: &Dataset,
    x_edges: Vec<f64>,
    y_grid: SupportGrid,
    cfg: &TrainConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let mut model = CondHistModel::uniform(x_edges, y_grid)?;
    if cfg.init_scale > 0.0 {
        let mut rng = seeded_rng(cfg.seed);
        let normal = Normal::new(0.0, cfg.init_scale).expect("positive scale");
        for row in &mut model.logits {
            for v in row.iter_mut() {
                *v = normal.sample(&mut rng);
            }
        }
    }
    let mut best = model.clone();
    let mut best_score = f64::INFINITY;
    let mut since_best = 0usize;
    let mut trace = Vec::with_capacity(cfg.max_epochs + 1);
    let mut norms = Vec::with_capacity(cfg.max_epochs);
    let mut epochs_run = 0;
    let stats = TrainingStats::new(&model, data)?;
    for epoch in 0..cfg.max_epochs {
        let (loss, grad) = gradient_from_stats(&model, &stats, &cfg.rule);
        let norm = grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
        if !loss.is_finite() || !norm.is_finite() {
            return Err(ScoreError::Numeric(format!(
                "non-finite loss or gradient at epoch {epoch}"
            )));
        }
        trace.push(loss);
        norms.push(norm);
        if loss < best_score - cfg.tolerance {
            best_score = loss;
            best = model.clone();
            since_best = 0;
        } else {
            if loss < best_score {
                best_score = loss;
                best = model.clone();
            }
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
        for (row, grow) in model.logits.iter_mut().zip(&grad) {
            for (z, g) in row.iter_mut().zip(grow) {
                *z -= cfg.learning_rate * g;
            }
        }
        epochs_run = epoch + 1;
    }
    let final_loss = gradient_from_stats(&model, &stats, &cfg.rule).0;
    trace.push(final_loss);
    if final_loss < best_score {
        best_score = final_loss;
        best = model;
    }
    Ok(FitResult {
        model: best,
        loss_trace: trace,
        grad_norms: norms,
        epochs_run,
        best_score,
    })
}

/// Finite-difference step used by [`grad_check`].
pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Largest relative error between the analytic logit gradient and central
/// finite differences, with `|a - fd| / max(|a|, |fd|, 1e-4)` per entry so
/// that round-off on near-zero entries is measured absolutely.
pub fn grad_check(model: &CondHistModel, data: &Dataset, rule: &Rule) -> Result<f64> {
    let (_, analytic) = empirical_gradient(model, data, rule)?;
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for k in 0..model.n_x_bins() {
        for j in 0..model.y_grid.len() {
            let orig = probe.logits[k][j];
            probe.logits[k][j] = orig + GRAD_CHECK_STEP;
            let up = empirical_score(&probe, data, rule)?;
            probe.logits[k][j] = orig - GRAD_CHECK_STEP;
            let down = empirical_score(&probe, data, rule)?;
            probe.logits[k][j] = orig;
            let fd = (up - down) / (2.0 * GRAD_CHECK_STEP);
            let a = analytic[k][j];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-4);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

/// Per-observation loss for point predictors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "objective", rename_all = "snake_case")]
pub enum PointObjective {
    Bregman { family: BregmanFamily },
    Absolute,
    Squared,
    Pinball { tau: f64 },
}

impl PointObjective {
    pub fn loss(&self, y: f64, c: f64) -> f64 {
        match *self {
            PointObjective::Bregman { family } => bregman(family, y, c).unwrap_or(f64::INFINITY),
            PointObjective::Absolute => (y - c).abs(),
            PointObjective::Squared => (y - c) * (y - c),
            PointObjective::Pinball { tau } => pinball(tau, y, c),
        }
    }
}

/// Piecewise-constant predictor; `None` marks covariate bins without data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedPredictor {
    pub x_edges: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

impl BinnedPredictor {
    pub fn predict(&self, x: f64) -> Option<f64> {
        let lo = self.x_edges[0];
        let hi = *self.x_edges.last().unwrap();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let k = self
            .x_edges
            .partition_point(|&e| e <= x)
            .saturating_sub(1)
            .min(self.values.len() - 1);
        self.values[k]
    }
}

/// Per covariate bin, the constant minimizing the empirical risk of `objective`.
pub fn fit_point_binned(
    data: &Dataset,
    x_edges: &[f64],
    objective: PointObjective,
) -> Result<BinnedPredictor> {
    if x_edges.len() < 2 || x_edges.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("covariate edges must be strictly increasing with at least two entries");
    }
    if let PointObjective::Bregman { family } = objective {
        family.validate()?;
        for &y in &data.y {
            // Probe the outcome against itself; this only checks the y side.
            family.check_args(y, y.max(f64::MIN_POSITIVE))?;
        }
    }
    let n_bins = x_edges.len() - 1;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    let (lo, hi) = (x_edges[0], x_edges[n_bins]);
    for (&x, &y) in data.x.iter().zip(&data.y) {
        if x >= lo && x <= hi {
            let k = x_edges
                .partition_point(|&e| e <= x)
                .saturating_sub(1)
                .min(n_bins - 1);
            members[k].push(y);
        }
    }
    let mut values = Vec::with_capacity(n_bins);
    for ys in &members {
        if ys.is_empty() {
            values.push(None);
            continue;
        }
        let mut search = Search::around(ys);
        if matches!(
            objective,
            PointObjective::Bregman {
                family: BregmanFamily::PowerShifted { .. }
            }
        ) {
            search.lo = search.lo.max(f64::MIN_POSITIVE.sqrt());
        }
        if matches!(
            objective,
            PointObjective::Bregman {
                family: BregmanFamily::PolyHeavy { .. }
            }
        ) {
            search.lo = search.lo.max(0.0);
        }
        if !(search.lo < search.hi) {
            values.push(Some(ys[0]));
            continue;
        }
        values.push(Some(elicit_optimum(
            |y, c| objective.loss(y, c),
            ys,
            search,
        )?));
    }
    Ok(BinnedPredictor {
        x_edges: x_edges.to_vec(),
        values,
        counts: members.iter().map(Vec::len).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toygen::{
        gen_bimodal, gen_factory, BimodalConfig, DatasetMeta, FactoryConfig, SignalKind, TailSide,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn meta() -> DatasetMeta {
        DatasetMeta {
            generator: "test".into(),
            seed: 0,
            parameters: serde_json::Value::Null,
        }
    }

    fn random_instance(seed: u64) -> (CondHistModel, Dataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x_edges = vec![-1.0, 0.0, 0.5, 1.0];
        let grid = SupportGrid::uniform(-2.0, 2.0, 8).unwrap();
        let logits = (0..3)
            .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let model = CondHistModel::with_logits(x_edges, grid, logits).unwrap();
        let n = 15;
        let data = Dataset {
            x: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            y: (0..n).map(|_| rng.random_range(-1.95..1.95)).collect(),
            meta: meta(),
        };
        (model, data)
    }

    fn trainable_rules() -> Vec<Rule> {
        vec![
            Rule::Crps,
            Rule::Crls,
            Rule::LogScore,
            Rule::WeightedCrps {
                weight: WeightKind::LeftTail,
            },
            Rule::WeightedCrps {
                weight: WeightKind::RightTail,
            },
        ]
    }

    #[test]
    fn empirical_score_matches_rules_module() {
        let (model, data) = random_instance(1);
        for rule in trainable_rules() {
            let direct: f64 = data
                .x
                .iter()
                .zip(&data.y)
                .map(|(&x, &y)| {
                    rule.score_gridded(&model.forecast(x).unwrap(), y)
                        .unwrap()
                        .value
                })
                .sum::<f64>()
                / data.len() as f64;
            let via = empirical_score(&model, &data, &rule).unwrap();
            assert!((direct - via).abs() < 1e-12, "{rule}: {direct} vs {via}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..3 {
            let (model, data) = random_instance(seed);
            for rule in trainable_rules() {
                let err = grad_check(&model, &data, &rule).unwrap();
                assert!(err < 1e-4, "{rule} seed {seed}: {err}");
            }
        }
    }

    #[test]
    fn symmetric_problem_has_zero_gradient() {
        let grid = SupportGrid::uniform(-2.0, 2.0, 4).unwrap();
        let model = CondHistModel::uniform(vec![-1.0, 1.0], grid).unwrap();
        // Uniform PMF on 4 bins with one observation per bin is the empirical optimum.
        let data = Dataset {
            x: vec![0.0; 4],
            y: vec![-1.5, -0.5, 0.5, 1.5],
            meta: meta(),
        };
        let (_, g) = empirical_gradient(&model, &data, &Rule::LogScore).unwrap();
        let norm = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-8);
        assert!(grad_check(&model, &data, &Rule::LogScore).unwrap() < 1e-4);
    }

    #[test]
    fn unsupported_rules_and_bad_data_rejected() {
        let (model, data) = random_instance(0);
        assert!(empirical_score(&model, &data, &Rule::Interval { alpha: 0.1 }).is_err());
        let outside = Dataset {
            x: vec![0.0],
            y: vec![5.0],
            meta: meta(),
        };
        assert!(empirical_score(&model, &outside, &Rule::Crps).is_err());
        let mut cfg = TrainConfig::new(Rule::Crps);
        cfg.learning_rate = 0.0;
        assert!(fit_cond_hist(
            &data,
            vec![-1.0, 1.0],
            SupportGrid::uniform(-2.0, 2.0, 4).unwrap(),
            &cfg
        )
        .is_err());
    }

    #[test]
    fn log_score_concentrates_on_single_bin() {
        let grid = SupportGrid::uniform(0.0, 10.0, 10).unwrap();
        let data = Dataset {
            x: (0..40).map(|i| -0.975 + i as f64 * 0.05).collect(),
            y: vec![3.4; 40],
            meta: meta(),
        };
        let mut cfg = TrainConfig::new(Rule::LogScore);
        cfg.learning_rate = 5.0;
        cfg.max_epochs = 2000;
        let fit = fit_cond_hist(&data, vec![-1.0, 0.0, 1.0], grid, &cfg).unwrap();
        for k in 0..2 {
            assert!(
                fit.model.row_pmf(k)[3] >= 0.99,
                "row {k}: {:?}",
                fit.model.row_pmf(k)
            );
        }
    }

    #[test]
    fn training_never_worse_than_uniform_start() {
        let (_, data) = random_instance(4);
        for rule in trainable_rules() {
            let grid = SupportGrid::uniform(-2.0, 2.0, 8).unwrap();
            let edges = vec![-1.0, 0.0, 1.0];
            let start = empirical_score(
                &CondHistModel::uniform(edges.clone(), grid.clone()).unwrap(),
                &data,
                &rule,
            )
            .unwrap();
            let mut cfg = TrainConfig::new(rule);
            cfg.max_epochs = 50;
            let fit = fit_cond_hist(&data, edges, grid, &cfg).unwrap();
            assert!(fit.best_score <= start, "{rule}");
            assert_eq!(fit.loss_trace[0], start);
            let trained = empirical_score(&fit.model, &data, &rule).unwrap();
            assert_eq!(trained, fit.best_score);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (_, data) = random_instance(6);
        let grid = SupportGrid::uniform(-2.0, 2.0, 8).unwrap();
        let mut cfg = TrainConfig::new(Rule::Crls);
        cfg.init_scale = 0.3;
        cfg.seed = 17;
        cfg.max_epochs = 30;
        let a = fit_cond_hist(&data, vec![-1.0, 1.0], grid.clone(), &cfg).unwrap();
        let b = fit_cond_hist(&data, vec![-1.0, 1.0], grid, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_rules_give_different_models() {
        let cfg_b = BimodalConfig {
            n: 400,
            ..BimodalConfig::default()
        };
        let data = gen_bimodal(&cfg_b, 3).unwrap();
        let grid = SupportGrid::uniform(-3.0, 3.0, 30).unwrap();
        let edges = vec![-3.0, -1.0, 1.0, 3.0];
        let mut c1 = TrainConfig::new(Rule::Crps);
        c1.max_epochs = 200;
        let mut c2 = TrainConfig::new(Rule::LogScore);
        c2.max_epochs = 200;
        let a = fit_cond_hist(&data, edges.clone(), grid.clone(), &c1).unwrap();
        let b = fit_cond_hist(&data, edges, grid, &c2).unwrap();
        let diff = a
            .model
            .logits()
            .iter()
            .flatten()
            .zip(b.model.logits().iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff > 1e-3);
    }

    #[test]
    fn crps_training_recovers_two_modes() {
        let cfg_b = BimodalConfig {
            n: 3000,
            gap: 2.0,
            sigma: 0.15,
            ..BimodalConfig::default()
        };
        let data = gen_bimodal(&cfg_b, 8).unwrap();
        let grid = SupportGrid::uniform(-2.4, 2.4, 24).unwrap();
        let edges: Vec<f64> = (0..=6).map(|i| -3.0 + i as f64).collect();
        let mut cfg = TrainConfig::new(Rule::Crps);
        cfg.learning_rate = 20.0;
        cfg.max_epochs = 3000;
        cfg.patience = 100;
        let fit = fit_cond_hist(&data, edges.clone(), grid.clone(), &cfg).unwrap();
        let width = grid.widths()[0];
        for k in [2usize, 3] {
            let pmf = fit.model.row_pmf(k);
            let maxima: Vec<usize> = (1..pmf.len() - 1)
                .filter(|&i| pmf[i] > pmf[i - 1] && pmf[i] >= pmf[i + 1] && pmf[i] > 0.05)
                .collect();
            assert_eq!(maxima.len(), 2, "row {k}: {pmf:?}");
            let xc = 0.5 * (edges[k] + edges[k + 1]);
            let lo = grid.centers()[maxima[0]];
            let hi = grid.centers()[maxima[1]];
            assert!(
                (lo - cfg_b.mode_low(xc)).abs() <= 1.5 * width,
                "row {k}: {lo}"
            );
            assert!(
                (hi - cfg_b.mode_high(xc)).abs() <= 1.5 * width,
                "row {k}: {hi}"
            );
        }
    }

    #[test]
    fn binned_point_fits_recover_means_and_medians() {
        let cfg = FactoryConfig {
            n: 2000,
            signal_kind: SignalKind::RectifiedTrend,
            ..FactoryConfig::default()
        };
        let data = gen_factory(&cfg, 12).unwrap();
        let edges: Vec<f64> = (0..=8).map(|i| -4.0 + i as f64).collect();
        let means = fit_point_binned(&data, &edges, PointObjective::Squared).unwrap();
        let l2 = fit_point_binned(
            &data,
            &edges,
            PointObjective::Bregman {
                family: BregmanFamily::PowerAbs { p: 2.0 },
            },
        )
        .unwrap();
        let medians = fit_point_binned(&data, &edges, PointObjective::Absolute).unwrap();
        for k in 0..8 {
            let ys: Vec<f64> = data
                .x
                .iter()
                .zip(&data.y)
                .filter(|(x, _)| **x >= edges[k] && **x < edges[k + 1])
                .map(|(_, y)| *y)
                .collect();
            assert_eq!(ys.len(), means.counts[k]);
            if ys.len() < 5 {
                continue;
            }
            let mean = ys.iter().sum::<f64>() / ys.len() as f64;
            let mut s = ys.clone();
            s.sort_by(f64::total_cmp);
            let m = s.len();
            let (mlo, mhi) = if m % 2 == 1 {
                (s[m / 2], s[m / 2])
            } else {
                (s[m / 2 - 1], s[m / 2])
            };
            assert!((means.values[k].unwrap() - mean).abs() < 1e-6);
            assert!((l2.values[k].unwrap() - mean).abs() < 1e-6);
            let med = medians.values[k].unwrap();
            assert!(med >= mlo - 1e-6 && med <= mhi + 1e-6);
        }
    }

    #[test]
    fn empty_bins_are_flagged() {
        let data = Dataset {
            x: vec![0.1, 0.2, 0.3],
            y: vec![1.0, 2.0, 3.0],
            meta: meta(),
        };
        let p = fit_point_binned(&data, &[0.0, 0.5, 1.0], PointObjective::Squared).unwrap();
        assert_eq!(p.counts, vec![3, 0]);
        assert!(p.values[1].is_none());
        assert!(p.predict(0.7).is_none());
        assert!((p.predict(0.25).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bregman_point_fit_on_shifted_outlier_data_is_the_mean() {
        // Every Bregman risk is minimized by the sample mean, whatever the tails.
        let cfg = FactoryConfig {
            n: 1500,
            tail_side: TailSide::Left,
            ..FactoryConfig::default()
        };
        let mut data = gen_factory(&cfg, 21).unwrap();
        let shift = 20.0 - data.y.iter().copied().fold(f64::INFINITY, f64::min);
        data.y.iter_mut().for_each(|y| *y += shift);
        let edges: Vec<f64> = (0..=4).map(|i| -4.0 + 2.0 * i as f64).collect();
        let breg = fit_point_binned(
            &data,
            &edges,
            PointObjective::Bregman {
                family: BregmanFamily::PowerShifted { p: -0.5 },
            },
        )
        .unwrap();
        let means = fit_point_binned(&data, &edges, PointObjective::Squared).unwrap();
        let medians = fit_point_binned(&data, &edges, PointObjective::Absolute).unwrap();
        for k in 0..4 {
            assert!((breg.values[k].unwrap() - means.values[k].unwrap()).abs() < 1e-5);
            // Left outliers drag the mean below the median.
            assert!(medians.values[k].unwrap() - means.values[k].unwrap() > 0.5);
        }
    }

    #[test]
    fn model_json_round_trip() {
        let (model, _) = random_instance(2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let cfg = TrainConfig::new(Rule::WeightedCrps {
            weight: WeightKind::RightTail,
        });
        model.save_json(&path, Some(&cfg)).unwrap();
        let (back, c) = CondHistModel::load_json(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(c.unwrap(), cfg);
    }
}
