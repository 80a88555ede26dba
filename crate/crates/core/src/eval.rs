//! Scoring against ground truth and the batch experiment harnesses.
//!
//! Scoring is per subsequence: with the truth's anomaly start `s` mapped to
//! the analyzed series, subsequence `i` is truly anomalous iff `i > s`.

use std::fmt;
use std::io::Write;
use std::sync::Mutex;

use crate::detection::{detect, detect_ungated};
use crate::error::{Error, Result};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineOutput, StageTimings};
use crate::series::TimeSeries;

/// Where the anomaly starts, if anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GroundTruth {
    pub anomaly_start: Option<usize>,
}

impl GroundTruth {
    pub fn clean() -> Self {
        Self {
            anomaly_start: None,
        }
    }

    /// An anomaly starting at point `start` of a length-`n` series.
    pub fn anomalous(start: usize, n: usize) -> Result<Self> {
        if start >= n {
            return Err(Error::Config(format!(
                "anomaly start {start} outside series of length {n}"
            )));
        }
        Ok(Self {
            anomaly_start: Some(start),
        })
    }

    /// True when subsequence / point `i` lies in the anomalous region.
    pub fn is_anomalous(&self, i: usize) -> bool {
        self.anomaly_start.is_some_and(|s| i > s)
    }

    /// Re-expresses the truth after `offset` leading samples were dropped.
    pub fn shifted(&self, offset: usize) -> Result<Self> {
        match self.anomaly_start {
            None => Ok(*self),
            Some(s) if s >= offset => Ok(Self {
                anomaly_start: Some(s - offset),
            }),
            Some(s) => Err(Error::Config(format!(
                "anomaly start {s} lies inside the {offset}-sample burn-in"
            ))),
        }
    }
}

/// Confusion counts and the rates derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoreCard {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ScoreCard {
    /// Derives all rates from the counts; undefined ratios are 0.
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp,
            fp,
            tn,
            fn_,
            precision,
            recall,
            f1,
            fpr: ratio(fp, fp + tn),
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Confusion matrix of `predicted` (1 = anomalous) over `l` positions.
pub fn score(predicted: &[u8], truth: &GroundTruth, l: usize) -> Result<ScoreCard> {
    if predicted.len() != l {
        return Err(Error::Dimension {
            expected: l,
            actual: predicted.len(),
        });
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (i, &p) in predicted.iter().enumerate() {
        match (p != 0, truth.is_anomalous(i)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(ScoreCard::from_counts(tp, fp, tn, fn_))
}

/// A named series with its truth in raw-file coordinates.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub series: TimeSeries,
    pub truth: GroundTruth,
}

/// Runs `f` over `items` on up to `workers` threads, keeping input order.
fn map_ordered<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = {
                    let mut n = next.lock().expect("counter poisoned");
                    let k = *n;
                    *n += 1;
                    k
                };
                if k >= items.len() {
                    break;
                }
                let r = f(&items[k]);
                *slots[k].lock().expect("slot poisoned") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| {
            s.into_inner()
                .expect("slot poisoned")
                .expect("unfilled slot")
        })
        .collect()
}

/// Splits the worker budget across datasets; each profile runs single-threaded
/// when several datasets run at once.
fn per_dataset_config(cfg: &PipelineConfig, datasets: usize) -> (usize, PipelineConfig) {
    let outer = cfg.workers.min(datasets.max(1));
    let mut inner = cfg.clone();
    if outer > 1 {
        inner.workers = 1;
    }
    (outer, inner)
}

fn scored_run(ds: &Dataset, cfg: &PipelineConfig) -> Result<(PipelineOutput, GroundTruth)> {
    let out = run_pipeline(&ds.series, cfg)?;
    let truth = ds.truth.shifted(out.offset)?;
    Ok((out, truth))
}

/// One dataset's row in the experiment table.
#[derive(Debug, Clone)]
pub struct ExperimentRow {
    pub name: String,
    pub outcome: std::result::Result<ExperimentResult, String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub score: ScoreCard,
    pub onset_raw: Option<usize>,
    pub min_cad: f64,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    fn successes(&self) -> impl Iterator<Item = &ExperimentResult> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn mean_f1(&self) -> Option<f64> {
        mean(self.successes().map(|r| r.score.f1))
    }

    pub fn mean_fpr(&self) -> Option<f64> {
        mean(self.successes().map(|r| r.score.fpr))
    }

    pub fn mean_runtime_secs(&self) -> Option<f64> {
        mean(self.successes().map(|r| r.timings.total().as_secs_f64()))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "dataset",
            "f1",
            "fpr",
            "precision",
            "recall",
            "onset_raw",
            "min_cad",
            "profile_s",
            "segmentation_s",
            "detection_s",
            "total_s",
            "error",
        ])?;
        for row in &self.rows {
            let record: Vec<String> = match &row.outcome {
                Ok(r) => vec![
                    row.name.clone(),
                    format!("{:.6}", r.score.f1),
                    format!("{:.6}", r.score.fpr),
                    format!("{:.6}", r.score.precision),
                    format!("{:.6}", r.score.recall),
                    r.onset_raw.map(|o| o.to_string()).unwrap_or_default(),
                    format!("{:.6}", r.min_cad),
                    format!("{:.6}", r.timings.profile.as_secs_f64()),
                    format!("{:.6}", r.timings.segmentation.as_secs_f64()),
                    format!("{:.6}", r.timings.detection.as_secs_f64()),
                    format!("{:.6}", r.timings.total().as_secs_f64()),
                    String::new(),
                ],
                Err(e) => {
                    let mut v = vec![row.name.clone()];
                    v.extend(std::iter::repeat_n(String::new(), 10));
                    v.push(e.clone());
                    v
                }
            };
            w.write_record(&record)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl fmt::Display for ExperimentTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20} {:>7} {:>7} {:>10} {:>8} {:>9}",
            "dataset", "F1", "FPR", "onset_raw", "min_cad", "time(s)"
        )?;
        for row in &self.rows {
            match &row.outcome {
                Ok(r) => writeln!(
                    f,
                    "{:<20} {:>7.3} {:>7.3} {:>10} {:>8.3} {:>9.3}",
                    row.name,
                    r.score.f1,
                    r.score.fpr,
                    r.onset_raw.map_or("-".to_string(), |o| o.to_string()),
                    r.min_cad,
                    r.timings.total().as_secs_f64()
                )?,
                Err(e) => writeln!(f, "{:<20} error: {e}", row.name)?,
            }
        }
        if let (Some(f1), Some(fpr), Some(t)) =
            (self.mean_f1(), self.mean_fpr(), self.mean_runtime_secs())
        {
            writeln!(
                f,
                "{:<20} {:>7.3} {:>7.3} {:>10} {:>8} {:>9.3}",
                "average", f1, fpr, "", "", t
            )?;
        }
        Ok(())
    }
}

/// Trim, profile, segment, detect and score every dataset. A failing dataset
/// becomes an error row; the rest of the batch still runs.
pub fn run_detection_experiment(
    datasets: &[Dataset],
    cfg: &PipelineConfig,
) -> Result<ExperimentTable> {
    cfg.validate()?;
    let (outer, inner) = per_dataset_config(cfg, datasets.len());
    let rows = map_ordered(datasets, outer, |ds| {
        let outcome = scored_run(ds, &inner)
            .and_then(|(out, truth)| {
                let score = score(&out.report.labels, &truth, out.density.len())?;
                Ok(ExperimentResult {
                    score,
                    onset_raw: out.onset_raw(),
                    min_cad: out.report.min_cad,
                    timings: out.timings,
                })
            })
            .map_err(|e| e.to_string());
        ExperimentRow {
            name: ds.name.clone(),
            outcome,
        }
    });
    Ok(ExperimentTable { rows })
}

/// False-positive rate on one clean series with and without the threshold gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationResult {
    pub min_cad: f64,
    pub fpr_without: f64,
    pub fpr_with: f64,
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub name: String,
    pub outcome: std::result::Result<AblationResult, String>,
}

#[derive(Debug, Clone, Default)]
pub struct AblationTable {
    pub epsilon: f64,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "dataset",
            "min_cad",
            "fpr_without_eps",
            "fpr_with_eps",
            "error",
        ])?;
        for row in &self.rows {
            let record = match &row.outcome {
                Ok(r) => [
                    row.name.clone(),
                    format!("{:.6}", r.min_cad),
                    format!("{:.6}", r.fpr_without),
                    format!("{:.6}", r.fpr_with),
                    String::new(),
                ],
                Err(e) => [
                    row.name.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.clone(),
                ],
            };
            w.write_record(&record)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

impl fmt::Display for AblationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20} {:>8} {:>12} {:>12}",
            "dataset",
            "min_cad",
            "FPR w/o eps",
            format!("FPR eps={}", self.epsilon)
        )?;
        for row in &self.rows {
            match &row.outcome {
                Ok(r) => writeln!(
                    f,
                    "{:<20} {:>8.3} {:>12.3} {:>12.3}",
                    row.name, r.min_cad, r.fpr_without, r.fpr_with
                )?,
                Err(e) => writeln!(f, "{:<20} error: {e}", row.name)?,
            }
        }
        Ok(())
    }
}

/// Scores each clean series once with the onset always reported and once
/// behind the `cfg.epsilon` gate.
pub fn run_threshold_ablation(clean: &[Dataset], cfg: &PipelineConfig) -> Result<AblationTable> {
    cfg.validate()?;
    let (outer, inner) = per_dataset_config(cfg, clean.len());
    let rows = map_ordered(clean, outer, |ds| {
        let outcome = scored_run(ds, &inner)
            .and_then(|(out, truth)| {
                let cad = &out.density.corrected;
                let l = cad.len();
                let without = score(&detect_ungated(cad)?.labels, &truth, l)?;
                let with = score(&detect(cad, cfg.epsilon)?.labels, &truth, l)?;
                Ok(AblationResult {
                    min_cad: out.report.min_cad,
                    fpr_without: without.fpr,
                    fpr_with: with.fpr,
                })
            })
            .map_err(|e| e.to_string());
        AblationRow {
            name: ds.name.clone(),
            outcome,
        }
    });
    Ok(AblationTable {
        epsilon: cfg.epsilon,
        rows,
    })
}

/// F1 on the anomalous series and FPR on its clean counterpart at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub f1: f64,
    pub fpr: f64,
}

/// Evaluates every threshold in `grid` against one anomalous/clean pair.
/// Each series is profiled once; only the detection step repeats.
pub fn run_epsilon_sweep(
    anomalous: &Dataset,
    clean: &Dataset,
    cfg: &PipelineConfig,
    grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    if let Some(bad) = grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::Config(format!("grid value {bad} outside [0, 1]")));
    }
    let (a_out, a_truth) = scored_run(anomalous, cfg)?;
    let (c_out, c_truth) = scored_run(clean, cfg)?;
    let (a_cad, c_cad) = (&a_out.density.corrected, &c_out.density.corrected);
    grid.iter()
        .map(|&epsilon| {
            let f1 = score(&detect(a_cad, epsilon)?.labels, &a_truth, a_cad.len())?.f1;
            let fpr = score(&detect(c_cad, epsilon)?.labels, &c_truth, c_cad.len())?.fpr;
            Ok(SweepPoint { epsilon, f1, fpr })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(out: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "f1", "fpr"])?;
    for p in points {
        w.write_record([
            p.epsilon.to_string(),
            format!("{:.6}", p.f1),
            format!("{:.6}", p.fpr),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Parses `start:stop:step` (inclusive stop) or a comma-separated list.
pub fn parse_epsilon_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("bad grid value {s:?}")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(Error::Config(format!("bad grid range {spec:?}")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // Round away the accumulated binary error so 0.1:0.8:0.1 yields 0.3, not 0.30000000000000004.
            (0..count)
                .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::Config(format!("bad grid {spec:?}"))),
    };
    if let Some(bad) = grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::Config(format!("grid value {bad} outside [0, 1]")));
    }
    Ok(grid)
}
