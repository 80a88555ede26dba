//! Matrix-profile based regime-change and anomaly-onset detection for cyclic
//! sensor series.
//!
//! The pipeline trims burn-in samples, computes the z-normalized matrix
//! profile, turns its nearest-neighbor index into a corrected arc density
//! curve, and reports the curve's minimum as the anomaly onset when it is
//! deep enough.
//!
//! ```
//! use mpseg_core::{generate_synthetic, run_pipeline, PipelineConfig, SyntheticSpec};
//!
//! let (series, truth) = generate_synthetic(&SyntheticSpec::default()).unwrap();
//! let out = run_pipeline(&series, &PipelineConfig { m: 50, ..Default::default() }).unwrap();
//! assert!(out.report.anomaly_detected);
//! let onset = out.onset_raw().unwrap();
//! assert!(onset.abs_diff(truth.anomaly_start.unwrap()) <= 50);
//! ```

pub mod detection;
pub mod error;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod profile;
pub mod segmentation;
pub mod series;
pub mod synth;

pub use crate::detection::{
    detect, detect_ungated, recommend_epsilon, DetectionReport, EpsilonRecommendation,
};
pub use crate::error::{Error, Result};
pub use crate::eval::{
    run_detection_experiment, run_epsilon_sweep, run_threshold_ablation, score, Dataset,
    GroundTruth, ScoreCard,
};
pub use crate::io::{load_csv, trim_burn_in, ColumnSelector};
pub use crate::pipeline::{run_pipeline, PipelineConfig, PipelineOutput, ReportDocument};
pub use crate::profile::{
    brute_force_profile, conv_profile, stomp_profile, znorm_distance, ConvOptions, Engine,
    MatrixProfile,
};
pub use crate::segmentation::{ArcDensity, CadDenominator};
pub use crate::series::{rolling_mean_std, sliding_window, RollingStats, TimeSeries, WindowConfig};
pub use crate::synth::{generate_clean, generate_synthetic, Regime, SyntheticSpec, Waveform};
