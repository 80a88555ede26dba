//! Trim, profile, segment, detect.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::detection::{detect, DetectionReport};
use crate::error::{Error, Result};
use crate::io::{trim_burn_in, ColumnSelector};
use crate::profile::{compute_profile, ConvOptions, Engine, MatrixProfile};
use crate::segmentation::{ArcDensity, CadDenominator};
use crate::series::{TimeSeries, WindowConfig};

/// Analysis parameters. Defaults: window 100, threshold 0.35, 30 samples
/// trimmed from each end.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub m: usize,
    pub epsilon: f64,
    pub burn_in: usize,
    pub column: ColumnSelector,
    pub batch_rows: usize,
    pub workers: usize,
    pub cad_denominator: CadDenominator,
    pub engine: Engine,
    pub output_path: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            m: 100,
            epsilon: 0.35,
            burn_in: 30,
            column: ColumnSelector::default(),
            batch_rows: ConvOptions::DEFAULT_BATCH_ROWS,
            workers: default_workers(),
            cad_denominator: CadDenominator::Corrected,
            engine: Engine::Conv,
            output_path: None,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        WindowConfig::new(self.m)?;
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        ConvOptions::new(self.batch_rows, self.workers)?;
        Ok(())
    }

    pub fn conv_options(&self) -> ConvOptions {
        ConvOptions {
            batch_rows: self.batch_rows,
            workers: self.workers,
        }
    }
}

/// Wall-clock time per stage; ingestion and trimming are not included.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub profile: Duration,
    pub segmentation: Duration,
    pub detection: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.profile + self.segmentation + self.detection
    }
}

/// Everything one pipeline run produced. Indices inside `profile`, `density`
/// and `report` are relative to the trimmed series; add `offset` for
/// raw-file coordinates.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub offset: usize,
    pub profile: MatrixProfile,
    pub density: ArcDensity,
    pub report: DetectionReport,
    pub timings: StageTimings,
}

impl PipelineOutput {
    pub fn onset_raw(&self) -> Option<usize> {
        self.report.onset_index.map(|i| i + self.offset)
    }

    pub fn document(&self, cfg: &PipelineConfig, labels_path: Option<String>) -> ReportDocument {
        ReportDocument {
            anomaly_detected: self.report.anomaly_detected,
            onset_index_raw: self.onset_raw(),
            min_cad: self.report.min_cad,
            epsilon: cfg.epsilon,
            m: cfg.m,
            burn_in: cfg.burn_in,
            labels_path,
        }
    }
}

/// JSON form of a detection result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub anomaly_detected: bool,
    pub onset_index_raw: Option<usize>,
    pub min_cad: f64,
    pub epsilon: f64,
    pub m: usize,
    pub burn_in: usize,
    pub labels_path: Option<String>,
}

/// Runs the full analysis on a raw (untrimmed) series.
pub fn run_pipeline(series: &TimeSeries, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let window = WindowConfig::new(cfg.m)?;
    let trimmed = trim_burn_in(series, cfg.burn_in, cfg.m)?;

    let started = Instant::now();
    let profile = compute_profile(&trimmed, &window, cfg.engine, cfg.conv_options())?;
    let profiled = Instant::now();
    let density = ArcDensity::from_index(&profile.indices, cfg.m, cfg.cad_denominator)?;
    let segmented = Instant::now();
    let report = detect(&density.corrected, cfg.epsilon)?;
    let detected = Instant::now();

    Ok(PipelineOutput {
        offset: cfg.burn_in,
        profile,
        density,
        report,
        timings: StageTimings {
            profile: profiled - started,
            segmentation: segmented - profiled,
            detection: detected - segmented,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SyntheticSpec};

    #[test]
    fn defaults() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.m, 100);
        assert_eq!(cfg.epsilon, 0.35);
        assert_eq!(cfg.burn_in, 30);
        assert_eq!(cfg.batch_rows, 256);
        assert_eq!(cfg.cad_denominator, CadDenominator::Corrected);
        assert!(cfg.workers >= 1);
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            PipelineConfig {
                m: 3,
                ..Default::default()
            },
            PipelineConfig {
                epsilon: 1.01,
                ..Default::default()
            },
            PipelineConfig {
                batch_rows: 0,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().unwrap_err().is_config());
        }
    }

    #[test]
    fn finds_two_regime_boundary() {
        let spec = SyntheticSpec {
            seed: 5,
            ..Default::default()
        };
        let (t, truth) = generate_synthetic(&spec).unwrap();
        let cfg = PipelineConfig {
            m: 50,
            workers: 2,
            ..Default::default()
        };
        let out = run_pipeline(&t, &cfg).unwrap();
        assert!(out.report.anomaly_detected);
        let onset = out.onset_raw().unwrap();
        let boundary = truth.anomaly_start.unwrap();
        assert!(onset.abs_diff(boundary) <= 50, "onset {onset}");
        let doc = out.document(&cfg, None);
        assert_eq!(doc.onset_index_raw, Some(onset));
        assert_eq!(doc.burn_in, 30);
    }

    #[test]
    fn short_series_fails_trim() {
        let t = TimeSeries::new(vec![0.0; 150]).unwrap();
        assert!(matches!(
            run_pipeline(&t, &PipelineConfig::default()),
            Err(Error::InvalidTrim { .. })
        ));
    }
}
