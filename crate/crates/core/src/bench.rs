//! Six-metric evaluation of gridded forecasts and paired baseline comparisons.
//!
//! Point metrics use the functional each one elicits: MAE is taken on the
//! predictive median, RMSE and R² on the predictive mean.
//!
//! Forecast files come in two formats.
//!
//! JSONL, one object per line. A line is either a grid declaration
//! `{"grid": "<name>", "edges": [...]}` or a record
//! `{"id": "...", "y": <num>, "pmf": [...], "grid_edges": [...]}`, where
//! `"grid_ref": "<name>"` may replace `"grid_edges"` to point at an earlier
//! declaration. Records may carry an optional `"unit"` naming the evaluation
//! unit (dataset or fold) they belong to.
//!
//! CSV for batches on one shared grid: the first line lists the bin edges,
//! every following line is `id,y,p_1,...,p_N`.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, ScoreError};
use crate::forecasts::{GriddedForecast, SupportGrid};
use crate::rules::{crls, crps, interval_score};

pub const SCHEMA_VERSION: u32 = 1;
/// Margin separating wins and losses from ties.
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Miscoverage level of the reported interval score.
pub const IS95_ALPHA: f64 = 0.05;
/// Baselines smaller than this make a relative improvement undefined.
pub const RELATIVE_FLOOR: f64 = 1e-12;

/// One observation with its predictive distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub id: String,
    pub unit: Option<String>,
    pub y: f64,
    pub forecast: GriddedForecast,
}

impl ForecastRecord {
    pub fn new(id: impl Into<String>, y: f64, forecast: GriddedForecast) -> Result<Self> {
        if !y.is_finite() {
            return domain("observation must be finite");
        }
        Ok(Self {
            id: id.into(),
            unit: None,
            y,
            forecast,
        })
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mae,
    Rmse,
    R2,
    Crps,
    Crls,
    Is95,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Mae,
        Metric::Rmse,
        Metric::R2,
        Metric::Crps,
        Metric::Crls,
        Metric::Is95,
    ];

    pub fn lower_is_better(self) -> bool {
        self != Metric::R2
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mae => "mae",
            Metric::Rmse => "rmse",
            Metric::R2 => "r2",
            Metric::Crps => "crps",
            Metric::Crls => "crls",
            Metric::Is95 => "is95",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSuite {
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
    pub crps: f64,
    pub crls: f64,
    pub is95: f64,
}

impl MetricSuite {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Mae => self.mae,
            Metric::Rmse => self.rmse,
            Metric::R2 => self.r2,
            Metric::Crps => self.crps,
            Metric::Crls => self.crls,
            Metric::Is95 => self.is95,
        }
    }
}

/// Sum after sorting, by recursive halving: the result does not depend on
/// the input order and round-off grows like `log n`.
pub fn stable_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    pairwise(&v)
}

fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise(&v[..mid]) + pairwise(&v[mid..])
    }
}

fn stable_mean(values: &[f64]) -> f64 {
    stable_sum(values) / values.len() as f64
}

/// Computes the six metrics over a set of records sharing one grid.
pub fn evaluate(records: &[ForecastRecord]) -> Result<MetricSuite> {
    if records.len() < 2 {
        return domain("evaluation needs at least two records");
    }
    let grid = records[0].forecast.grid();
    if records.iter().any(|r| r.forecast.grid() != grid) {
        return domain(
            "CRLS values are only comparable on a shared grid; records use different grids",
        );
    }
    let n = records.len();
    let mut abs_err = Vec::with_capacity(n);
    let mut sq_err = Vec::with_capacity(n);
    let mut crps_v = Vec::with_capacity(n);
    let mut crls_v = Vec::with_capacity(n);
    let mut is_v = Vec::with_capacity(n);
    let ys: Vec<f64> = records.iter().map(|r| r.y).collect();
    for r in records {
        let f = &r.forecast;
        abs_err.push((f.median() - r.y).abs());
        sq_err.push((f.mean() - r.y).powi(2));
        crps_v.push(crps(f, r.y)?.value);
        crls_v.push(crls(f, r.y)?.value);
        is_v.push(interval_score(f, r.y, IS95_ALPHA)?.value);
    }
    let y_mean = stable_mean(&ys);
    let ss_tot = stable_sum(&ys.iter().map(|y| (y - y_mean).powi(2)).collect::<Vec<_>>());
    if !(ss_tot > 0.0) {
        return domain("R² is undefined when the observations have zero variance");
    }
    let ss_res = stable_sum(&sq_err);
    Ok(MetricSuite {
        mae: stable_mean(&abs_err),
        rmse: (ss_res / n as f64).sqrt(),
        r2: 1.0 - ss_res / ss_tot,
        crps: stable_mean(&crps_v),
        crls: stable_mean(&crls_v),
        is95: stable_mean(&is_v),
    })
}

/// Improvement of `candidate` over `baseline`, positive when better:
/// relative change in percent for lower-is-better metrics and percentage
/// points of R². `None` when the relative baseline is too close to zero.
pub fn improvement(metric: Metric, baseline: f64, candidate: f64) -> Option<f64> {
    if metric.lower_is_better() {
        if baseline.abs() < RELATIVE_FLOOR {
            None
        } else {
            Some((baseline - candidate) / baseline.abs() * 100.0)
        }
    } else {
        Some((candidate - baseline) * 100.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Win,
    Loss,
    Tie,
}

/// Classifies an improvement. The margin applies to the relative change as
/// a fraction, and to the raw ΔR² for R².
pub fn outcome(improvement_pct: Option<f64>, epsilon: f64) -> Outcome {
    match improvement_pct {
        Some(v) if v / 100.0 > epsilon => Outcome::Win,
        Some(v) if v / 100.0 < -epsilon => Outcome::Loss,
        _ => Outcome::Tie,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricImprovement {
    pub metric: Metric,
    /// Percent for lower-is-better metrics, percentage points for R².
    pub per_unit: Vec<Option<f64>>,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// Units whose baseline was too close to zero for a relative change.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedImprovement {
    pub schema_version: u32,
    pub units: Vec<String>,
    pub epsilon: f64,
    pub metrics: Vec<MetricImprovement>,
}

impl PairedImprovement {
    pub fn metric(&self, m: Metric) -> &MetricImprovement {
        self.metrics
            .iter()
            .find(|x| x.metric == m)
            .expect("all metrics present")
    }
}

/// Per-unit improvements first, then mean, std and median across units.
pub fn paired_improvement(
    units: &[String],
    baseline: &[MetricSuite],
    candidate: &[MetricSuite],
    epsilon: f64,
) -> Result<PairedImprovement> {
    if baseline.len() != candidate.len() || baseline.len() != units.len() {
        return domain("baseline and candidate must cover the same units");
    }
    if baseline.is_empty() {
        return domain("no units to compare");
    }
    if !(epsilon > 0.0) {
        return domain("epsilon must be positive");
    }
    let metrics = Metric::ALL
        .iter()
        .map(|&m| {
            let per_unit: Vec<Option<f64>> = baseline
                .iter()
                .zip(candidate)
                .map(|(b, c)| improvement(m, b.get(m), c.get(m)))
                .collect();
            let vals: Vec<f64> = per_unit.iter().flatten().copied().collect();
            let (mean, std, median) = summarize(&vals);
            let mut counts = [0usize; 3];
            for v in &per_unit {
                counts[outcome(*v, epsilon) as usize] += 1;
            }
            MetricImprovement {
                metric: m,
                mean,
                std,
                median,
                wins: counts[0],
                losses: counts[1],
                ties: counts[2],
                excluded: per_unit.len() - vals.len(),
                per_unit,
            }
        })
        .collect();
    Ok(PairedImprovement {
        schema_version: SCHEMA_VERSION,
        units: units.to_vec(),
        epsilon,
        metrics,
    })
}

/// Mean, sample standard deviation (0 for one value) and median.
fn summarize(vals: &[f64]) -> (f64, f64, f64) {
    if vals.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = stable_mean(vals);
    let std = if vals.len() > 1 {
        (stable_sum(&vals.iter().map(|v| (v - mean).powi(2)).collect::<Vec<_>>())
            / (vals.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    let mut s = vals.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    let median = if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    };
    (mean, std, median)
}

/// Groups records by unit (records without one go to `"all"`), keeping the
/// order of first appearance.
pub fn group_by_unit(records: &[ForecastRecord]) -> Vec<(String, Vec<ForecastRecord>)> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<ForecastRecord>> = HashMap::new();
    for r in records {
        let u = r.unit.clone().unwrap_or_else(|| "all".into());
        if !groups.contains_key(&u) {
            order.push(u.clone());
        }
        groups.entry(u).or_default().push(r.clone());
    }
    order
        .into_iter()
        .map(|u| {
            let g = groups.remove(&u).unwrap();
            (u, g)
        })
        .collect()
}

/// Pairs two forecast sets by record id, checks that they score the same
/// observations, and compares them unit by unit.
pub fn compare_records(
    baseline: &[ForecastRecord],
    candidate: &[ForecastRecord],
    epsilon: f64,
) -> Result<PairedImprovement> {
    let cand: HashMap<&str, &ForecastRecord> =
        candidate.iter().map(|r| (r.id.as_str(), r)).collect();
    if cand.len() != baseline.len() || candidate.len() != baseline.len() {
        return domain("baseline and candidate files must contain the same record ids");
    }
    let mut aligned = Vec::with_capacity(baseline.len());
    for b in baseline {
        let c = cand
            .get(b.id.as_str())
            .ok_or_else(|| ScoreError::Domain(format!("record {} missing from candidate", b.id)))?;
        if c.y != b.y {
            return domain(format!(
                "record {} has different observations in the two files",
                b.id
            ));
        }
        let mut c = (*c).clone();
        c.unit = b.unit.clone();
        aligned.push(c);
    }
    let b_groups = group_by_unit(baseline);
    let c_groups = group_by_unit(&aligned);
    let mut units = Vec::new();
    let mut bs = Vec::new();
    let mut cs = Vec::new();
    for ((u, b), (_, c)) in b_groups.iter().zip(&c_groups) {
        units.push(u.clone());
        bs.push(evaluate(b)?);
        cs.push(evaluate(c)?);
    }
    paired_improvement(&units, &bs, &cs, epsilon)
}

#[derive(Serialize, Deserialize)]
struct JsonLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid_edges: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pmf: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Jsonl,
    Csv,
}

impl FileFormat {
    pub fn from_path(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => FileFormat::Csv,
            _ => FileFormat::Jsonl,
        }
    }
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(ScoreError::Parse {
        line,
        msg: msg.into(),
    })
}

/// Reads a forecast file with strict validation; errors cite 1-based lines.
pub fn ingest(path: &Path, format: FileFormat) -> Result<Vec<ForecastRecord>> {
    let file = std::fs::File::open(path)?;
    match format {
        FileFormat::Jsonl => read_jsonl(BufReader::new(file)),
        FileFormat::Csv => read_csv(BufReader::new(file)),
    }
}

/// Reuses one `Arc` per distinct edge vector.
#[derive(Default)]
struct GridCache {
    grids: Vec<Arc<SupportGrid>>,
}

impl GridCache {
    fn get(&mut self, edges: Vec<f64>) -> Result<Arc<SupportGrid>> {
        if let Some(g) = self.grids.iter().find(|g| g.edges() == edges.as_slice()) {
            return Ok(g.clone());
        }
        let g = Arc::new(SupportGrid::new(edges)?);
        self.grids.push(g.clone());
        Ok(g)
    }
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<ForecastRecord>> {
    let mut named: BTreeMap<String, Arc<SupportGrid>> = BTreeMap::new();
    let mut cache = GridCache::default();
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: JsonLine = match serde_json::from_str(&line) {
            Ok(o) => o,
            Err(e) => return parse_err(lineno, format!("malformed JSON: {e}")),
        };
        if let Some(name) = obj.grid {
            let Some(edges) = obj.edges else {
                return parse_err(lineno, "grid declaration without edges");
            };
            let g = cache
                .get(edges)
                .or_else(|e| parse_err(lineno, e.to_string()))?;
            named.insert(name, g);
            continue;
        }
        let Some(id) = obj.id else {
            return parse_err(lineno, "record without id");
        };
        let Some(y) = obj.y.filter(|y| y.is_finite()) else {
            return parse_err(lineno, "record without a finite y");
        };
        let Some(pmf) = obj.pmf else {
            return parse_err(lineno, "record without pmf");
        };
        let grid = match (obj.grid_edges, obj.grid_ref) {
            (Some(edges), None) => cache
                .get(edges)
                .or_else(|e| parse_err(lineno, e.to_string()))?,
            (None, Some(name)) => match named.get(&name) {
                Some(g) => g.clone(),
                None => return parse_err(lineno, format!("unknown grid_ref {name:?}")),
            },
            _ => {
                return parse_err(
                    lineno,
                    "record needs exactly one of grid_edges and grid_ref",
                )
            }
        };
        let forecast =
            GriddedForecast::new(grid, pmf).or_else(|e| parse_err(lineno, e.to_string()))?;
        out.push(ForecastRecord {
            id,
            unit: obj.unit,
            y,
            forecast,
        });
    }
    Ok(out)
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<ForecastRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut grid: Option<Arc<SupportGrid>> = None;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let lineno = i + 1;
        let rec = rec?;
        let parse_num = |s: &str| -> Result<f64> {
            s.parse::<f64>().ok().filter(|v| v.is_finite()).map_or_else(
                || parse_err(lineno, format!("not a finite number: {s:?}")),
                Ok,
            )
        };
        match &grid {
            None => {
                let edges = rec.iter().map(parse_num).collect::<Result<Vec<_>>>()?;
                let g = SupportGrid::new(edges).or_else(|e| parse_err(lineno, e.to_string()))?;
                grid = Some(Arc::new(g));
            }
            Some(g) => {
                if rec.len() != g.len() + 2 {
                    return parse_err(
                        lineno,
                        format!(
                            "expected id, y and {} pmf values, got {} fields",
                            g.len(),
                            rec.len()
                        ),
                    );
                }
                let id = rec[0].to_string();
                let y = parse_num(&rec[1])?;
                let pmf = rec
                    .iter()
                    .skip(2)
                    .map(parse_num)
                    .collect::<Result<Vec<_>>>()?;
                let forecast = GriddedForecast::new(g.clone(), pmf)
                    .or_else(|e| parse_err(lineno, e.to_string()))?;
                out.push(ForecastRecord {
                    id,
                    unit: None,
                    y,
                    forecast,
                });
            }
        }
    }
    if grid.is_none() {
        return parse_err(1, "missing edge line");
    }
    Ok(out)
}

fn shared_grid(records: &[ForecastRecord]) -> Option<&Arc<SupportGrid>> {
    let first = records.first()?.forecast.shared_grid();
    records
        .iter()
        .all(|r| r.forecast.grid() == first.as_ref())
        .then_some(first)
}

/// Writes records as JSONL; a single shared grid is declared once and
/// referenced, otherwise each record carries its own edges. Numbers are
/// written in shortest round-trip form.
pub fn write_jsonl<W: Write>(records: &[ForecastRecord], mut w: W) -> Result<()> {
    let shared = shared_grid(records);
    if let Some(g) = shared {
        let decl = JsonLine {
            grid: Some("g0".into()),
            edges: Some(g.edges().to_vec()),
            id: None,
            unit: None,
            y: None,
            grid_edges: None,
            grid_ref: None,
            pmf: None,
        };
        writeln!(w, "{}", serde_json::to_string(&decl)?)?;
    }
    for r in records {
        let line = JsonLine {
            grid: None,
            edges: None,
            id: Some(r.id.clone()),
            unit: r.unit.clone(),
            y: Some(r.y),
            grid_edges: shared.is_none().then(|| r.forecast.grid().edges().to_vec()),
            grid_ref: shared.is_some().then(|| "g0".to_string()),
            pmf: Some(r.forecast.pmf().to_vec()),
        };
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    Ok(())
}

/// Writes a shared-grid CSV batch. Units are not representable in CSV.
pub fn write_csv<W: Write>(records: &[ForecastRecord], w: W) -> Result<()> {
    let Some(g) = shared_grid(records) else {
        return domain("CSV export needs all records on one grid");
    };
    let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(w);
    wtr.write_record(g.edges().iter().map(|e| e.to_string()))?;
    for r in records {
        let mut row = vec![r.id.clone(), r.y.to_string()];
        row.extend(r.forecast.pmf().iter().map(|p| p.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> Arc<SupportGrid> {
        Arc::new(SupportGrid::new(vec![0.0, 1.0, 2.0]).unwrap())
    }

    fn rec(id: &str, y: f64, pmf: &[f64], grid: &Arc<SupportGrid>) -> ForecastRecord {
        ForecastRecord::new(
            id,
            y,
            GriddedForecast::new(grid.clone(), pmf.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn suite(v: f64) -> MetricSuite {
        MetricSuite {
            mae: v,
            rmse: v,
            r2: 0.5,
            crps: v,
            crls: v,
            is95: v,
        }
    }

    #[test]
    fn perfect_forecasts() {
        let g = Arc::new(SupportGrid::uniform(0.0, 4.0, 4).unwrap());
        let recs: Vec<_> = g
            .centers()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut pmf = vec![0.0; 4];
                pmf[i] = 1.0;
                rec(&format!("r{i}"), c, &pmf, &g)
            })
            .collect();
        let m = evaluate(&recs).unwrap();
        assert_eq!(
            (m.mae, m.rmse, m.crps, m.is95, m.crls),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(m.r2, 1.0);
    }

    #[test]
    fn constant_mean_forecast_has_nonpositive_r2() {
        let g = Arc::new(SupportGrid::uniform(0.0, 4.0, 4).unwrap());
        let recs: Vec<_> = g
            .centers()
            .iter()
            .enumerate()
            .map(|(i, &c)| rec(&format!("r{i}"), c, &[0.25; 4], &g))
            .collect();
        assert!(evaluate(&recs).unwrap().r2 <= 0.0);
    }

    #[test]
    fn two_record_hand_case() {
        let g = g2();
        let recs = vec![
            rec("a", 0.5, &[0.5, 0.5], &g),
            rec("b", 1.5, &[0.5, 0.5], &g),
        ];
        let m = evaluate(&recs).unwrap();
        // median 0.5 and mean 1.0 for both records
        assert_eq!(m.mae, 0.5);
        assert_eq!(m.rmse, 0.5);
        assert_eq!(m.r2, 0.0);
        // crps: y=0.5 -> 0.25 (rules example); y=1.5 -> (0.5-0)^2 + 0 = 0.25
        assert_eq!(m.crps, 0.25);
        // crls: both records -log(0.5)
        assert!((m.crls - std::f64::consts::LN_2).abs() < 1e-12);
        // l = 0.5, u = 1.5, both observations inside
        assert_eq!(m.is95, 1.0);
    }

    #[test]
    fn evaluate_errors() {
        let g = g2();
        assert!(evaluate(&[rec("a", 0.5, &[0.5, 0.5], &g)]).is_err());
        let same_y = vec![
            rec("a", 0.5, &[0.5, 0.5], &g),
            rec("b", 0.5, &[0.5, 0.5], &g),
        ];
        assert!(evaluate(&same_y).is_err());
        let other = Arc::new(SupportGrid::new(vec![0.0, 1.0, 2.5]).unwrap());
        let mixed = vec![
            rec("a", 0.5, &[0.5, 0.5], &g),
            rec("b", 1.5, &[0.5, 0.5], &other),
        ];
        assert!(evaluate(&mixed).is_err());
    }

    #[test]
    fn evaluate_is_permutation_invariant() {
        let g = Arc::new(SupportGrid::uniform(-3.0, 3.0, 9).unwrap());
        let mut recs: Vec<_> = (0..23)
            .map(|i| {
                let raw: Vec<f64> = (0..9).map(|j| 1.0 + ((i * 7 + j * 3) % 5) as f64).collect();
                let s: f64 = raw.iter().sum();
                let pmf: Vec<f64> = raw.iter().map(|r| r / s).collect();
                rec(&format!("r{i}"), -2.9 + 0.25 * i as f64, &pmf, &g)
            })
            .collect();
        let a = evaluate(&recs).unwrap();
        recs.reverse();
        recs.swap(3, 17);
        assert_eq!(a, evaluate(&recs).unwrap());
    }

    #[test]
    fn improvement_conventions() {
        assert!((improvement(Metric::Mae, 2.0, 1.9).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(
            outcome(improvement(Metric::Mae, 2.0, 1.9), DEFAULT_EPSILON),
            Outcome::Win
        );
        assert!((improvement(Metric::R2, 0.50, 0.53).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(improvement(Metric::Crps, 0.0, 1.0), None);
        assert_eq!(outcome(None, DEFAULT_EPSILON), Outcome::Tie);
        assert_eq!(outcome(Some(-0.2), DEFAULT_EPSILON), Outcome::Loss);
        assert_eq!(outcome(Some(0.05), DEFAULT_EPSILON), Outcome::Tie);
    }

    #[test]
    fn identical_suites_tie_everywhere() {
        let units: Vec<String> = (0..4).map(|i| format!("u{i}")).collect();
        let s: Vec<_> = (1..=4).map(|i| suite(i as f64)).collect();
        let p = paired_improvement(&units, &s, &s, DEFAULT_EPSILON).unwrap();
        for m in &p.metrics {
            assert_eq!((m.wins, m.losses, m.ties), (0, 0, 4));
            assert_eq!(m.mean, 0.0);
        }
    }

    #[test]
    fn near_zero_baseline_is_excluded() {
        let units = vec!["a".to_string(), "b".to_string()];
        let b = vec![suite(0.0), suite(2.0)];
        let c = vec![suite(1.0), suite(1.0)];
        let p = paired_improvement(&units, &b, &c, DEFAULT_EPSILON).unwrap();
        let mae = p.metric(Metric::Mae);
        assert_eq!(mae.excluded, 1);
        assert_eq!((mae.wins, mae.losses, mae.ties), (1, 0, 1));
        assert_eq!(mae.mean, 50.0);
    }

    #[test]
    fn per_unit_ratios_are_averaged() {
        // Mean of per-unit ratios: (50% + 0%) / 2 = 25%. A ratio of pooled
        // means would give (11 - 6) / 11 = 45.45%.
        let units = vec!["a".to_string(), "b".to_string()];
        let b = vec![suite(10.0), suite(1.0)];
        let c = vec![suite(5.0), suite(1.0)];
        let p = paired_improvement(&units, &b, &c, DEFAULT_EPSILON).unwrap();
        let mae = p.metric(Metric::Mae);
        assert!((mae.mean - 25.0).abs() < 1e-12);
        assert!((mae.mean - (11.0 - 6.0) / 11.0 * 100.0).abs() > 1.0);
        assert_eq!(mae.median, 25.0);
    }

    proptest::proptest! {
        #[test]
        fn wlt_partition_is_exhaustive(
            pairs in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0), 1..20),
            eps in 1e-6f64..0.5,
        ) {
            let units: Vec<String> = (0..pairs.len()).map(|i| i.to_string()).collect();
            let b: Vec<_> = pairs.iter().map(|p| suite(p.0)).collect();
            let c: Vec<_> = pairs.iter().map(|p| suite(p.1)).collect();
            let p = paired_improvement(&units, &b, &c, eps).unwrap();
            for m in &p.metrics {
                proptest::prop_assert_eq!(m.wins + m.losses + m.ties, pairs.len());
                let w = m.per_unit.iter().filter(|v| outcome(**v, eps) == Outcome::Win).count();
                proptest::prop_assert_eq!(w, m.wins);
            }
        }
    }

    #[test]
    fn jsonl_round_trip_shared_and_inline() {
        let g = g2();
        let other = Arc::new(SupportGrid::new(vec![-1.0, 0.5, 2.0]).unwrap());
        for recs in [
            vec![
                rec("a", 0.5, &[0.3, 0.7], &g),
                rec("b", 1.5, &[0.1, 0.9], &g),
            ],
            vec![
                rec("a", 0.5, &[0.3, 0.7], &g),
                rec("b", 1.5, &[0.1, 0.9], &other).with_unit("u1"),
            ],
        ] {
            let mut buf = Vec::new();
            write_jsonl(&recs, &mut buf).unwrap();
            let back = read_jsonl(buf.as_slice()).unwrap();
            assert_eq!(back, recs);
        }
    }

    #[test]
    fn csv_shared_grid_batch() {
        let text = "0,1,2,3\nr1,0.5,0.2,0.3,0.5\nr2,1.5,1,0,0\nr3,2.5,0,0,1\n";
        let recs = read_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(Arc::ptr_eq(
            recs[0].forecast.shared_grid(),
            recs[2].forecast.shared_grid()
        ));
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn invalid_pmf_cites_line() {
        let text = "{\"grid\":\"g\",\"edges\":[0,1,2]}\n{\"id\":\"a\",\"y\":0.5,\"grid_ref\":\"g\",\"pmf\":[0.5,0.5]}\n{\"id\":\"b\",\"y\":0.5,\"grid_ref\":\"g\",\"pmf\":[0.5,0.4]}\n";
        match read_jsonl(text.as_bytes()) {
            Err(ScoreError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let csv_text = "0,1,2\nr1,0.5,0.6,0.3\n";
        match read_csv(csv_text.as_bytes()) {
            Err(ScoreError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            read_csv("0,2,1\n".as_bytes()),
            Err(ScoreError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_jsonl("{not json\n".as_bytes()),
            Err(ScoreError::Parse { line: 1, .. })
        ));
        let unknown = "{\"id\":\"a\",\"y\":0.5,\"grid_ref\":\"zz\",\"pmf\":[1]}\n";
        assert!(matches!(
            read_jsonl(unknown.as_bytes()),
            Err(ScoreError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn compare_requires_matching_observations() {
        let g = g2();
        let a = vec![
            rec("a", 0.5, &[0.5, 0.5], &g),
            rec("b", 1.5, &[0.5, 0.5], &g),
        ];
        let mut b = a.clone();
        b[1].y = 1.4;
        assert!(compare_records(&a, &b, DEFAULT_EPSILON).is_err());
        let p = compare_records(&a, &a, DEFAULT_EPSILON).unwrap();
        assert_eq!(p.units, vec!["all".to_string()]);
    }
}
