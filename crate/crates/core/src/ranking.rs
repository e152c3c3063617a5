//! Score-and-rank sweeps over model suites.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::forecasts::PointForecast;
use crate::pointscore::{bregman, BregmanFamily};
use crate::rules::energy_score_point;
use crate::toymodels::{eval_model, truth, EvalGrid, ToyModel};

/// Mean scores with one row per model and one column per parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub models: Vec<String>,
    pub param_name: String,
    pub params: Vec<f64>,
    /// `scores[model][param]`
    pub scores: Vec<Vec<f64>>,
}

/// Rank of every model per parameter value; 1 is best. Tied scores share
/// the lower rank and the next rank is skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub models: Vec<String>,
    pub param_name: String,
    pub params: Vec<f64>,
    /// `ranks[model][param]`
    pub ranks: Vec<Vec<usize>>,
}

impl RankTable {
    pub fn column(&self, j: usize) -> Vec<usize> {
        self.ranks.iter().map(|r| r[j]).collect()
    }

    pub fn best(&self, j: usize) -> Vec<&str> {
        self.models
            .iter()
            .zip(&self.ranks)
            .filter(|(_, r)| r[j] == 1)
            .map(|(m, _)| m.as_str())
            .collect()
    }

    /// Model pairs whose relative order differs between columns `a` and `b`.
    pub fn flipped_pairs(&self, a: usize, b: usize) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for i in 0..self.models.len() {
            for k in (i + 1)..self.models.len() {
                let before = self.ranks[i][a].cmp(&self.ranks[k][a]);
                let after = self.ranks[i][b].cmp(&self.ranks[k][b]);
                if before != after && before.is_ne() && after.is_ne() {
                    out.push((self.models[i].clone(), self.models[k].clone()));
                }
            }
        }
        out
    }

    /// Fixed-width text table, one row per model.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<8}", "model");
        for p in &self.params {
            let _ = write!(s, "{:>14}", format!("{}={}", self.param_name, p));
        }
        s.push('\n');
        for (m, row) in self.models.iter().zip(&self.ranks) {
            let _ = write!(s, "{m:<8}");
            for r in row {
                let _ = write!(s, "{r:>14}");
            }
            s.push('\n');
        }
        s
    }
}

/// Ranks every column in ascending score order.
pub fn rank(matrix: &ScoreMatrix) -> Result<RankTable> {
    let n_models = matrix.models.len();
    if matrix.scores.len() != n_models
        || matrix.scores.iter().any(|r| r.len() != matrix.params.len())
    {
        return domain("score matrix shape does not match its labels");
    }
    if matrix.scores.iter().flatten().any(|v| !v.is_finite()) {
        return domain("score matrix has non-finite entries");
    }
    let mut ranks = vec![vec![0usize; matrix.params.len()]; n_models];
    for j in 0..matrix.params.len() {
        // Stable sort keeps model order among exact ties.
        let mut order: Vec<usize> = (0..n_models).collect();
        order.sort_by(|&a, &b| matrix.scores[a][j].total_cmp(&matrix.scores[b][j]));
        for (pos, &m) in order.iter().enumerate() {
            ranks[m][j] = if pos > 0 && matrix.scores[order[pos - 1]][j] == matrix.scores[m][j] {
                ranks[order[pos - 1]][j]
            } else {
                pos + 1
            };
        }
    }
    Ok(RankTable {
        models: matrix.models.clone(),
        param_name: matrix.param_name.clone(),
        params: matrix.params.clone(),
        ranks,
    })
}

/// Mean Dirac-vs-Dirac energy score `|f_i(x) - g(x)|^beta` per model and beta.
pub fn beta_sweep(
    models: &[(String, Vec<PointForecast>)],
    truth: &[PointForecast],
    betas: &[f64],
) -> Result<ScoreMatrix> {
    if betas.is_empty() {
        return domain("beta sweep needs at least one beta");
    }
    sweep(models, truth, "beta", betas, |f, y, beta| {
        Ok(energy_score_point(f, y, beta)?.value)
    })
}

/// Mean power Bregman divergence `D_p(g(x), f_i(x))` per model and `p`.
pub fn bregman_sweep(
    models: &[(String, Vec<PointForecast>)],
    truth: &[PointForecast],
    ps: &[f64],
) -> Result<(ScoreMatrix, RankTable)> {
    if ps.is_empty() {
        return domain("Bregman sweep needs at least one p");
    }
    if let Some(p) = ps.iter().find(|p| !(**p > 1.0)) {
        return domain(format!("power_abs sweep needs p > 1, got {p}"));
    }
    let m = sweep(models, truth, "p", ps, |f, y, p| {
        bregman(BregmanFamily::PowerAbs { p }, y, f.location())
    })?;
    let r = rank(&m)?;
    Ok((m, r))
}

fn sweep<S>(
    models: &[(String, Vec<PointForecast>)],
    truth: &[PointForecast],
    param_name: &str,
    params: &[f64],
    score: S,
) -> Result<ScoreMatrix>
where
    S: Fn(&PointForecast, f64, f64) -> Result<f64>,
{
    if truth.is_empty() {
        return domain("empty evaluation grid");
    }
    let mut scores = Vec::with_capacity(models.len());
    for (name, fc) in models {
        if fc.len() != truth.len() {
            return domain(format!(
                "model {name} has {} forecasts for {} points",
                fc.len(),
                truth.len()
            ));
        }
        let mut row = Vec::with_capacity(params.len());
        for &param in params {
            let mut total = 0.0;
            for (f, t) in fc.iter().zip(truth) {
                total += score(f, t.location(), param)?;
            }
            row.push(total / truth.len() as f64);
        }
        scores.push(row);
    }
    Ok(ScoreMatrix {
        models: models.iter().map(|(n, _)| n.clone()).collect(),
        param_name: param_name.into(),
        params: params.to_vec(),
        scores,
    })
}

/// Models A-E on the standard 1000-point grid with their ground truth.
pub fn toy_suite() -> (Vec<(String, Vec<PointForecast>)>, Vec<PointForecast>) {
    let grid = EvalGrid::standard();
    let models = ToyModel::ALL
        .iter()
        .map(|m| (m.to_string(), eval_model(*m, &grid)))
        .collect();
    (models, truth(&grid))
}
