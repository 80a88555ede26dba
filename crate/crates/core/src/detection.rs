//! Anomaly onset from a corrected arc density curve.

use crate::error::{Error, Result};

/// Lower and upper edge of the threshold band that worked well on print-run data.
pub const RECOMMENDED_EPSILON_BAND: (f64, f64) = (0.3, 0.5);

/// Outcome of thresholding one density curve, in subsequence coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub anomaly_detected: bool,
    pub onset_index: Option<usize>,
    pub min_cad: f64,
    /// `labels[i] == 1` marks subsequence `i` as anomalous.
    pub labels: Vec<u8>,
    /// `None` when the gate was disabled.
    pub epsilon: Option<f64>,
}

impl DetectionReport {
    /// Expands subsequence labels to `n` points: point `p` is anomalous iff
    /// `p > onset`.
    pub fn point_labels(&self, n: usize) -> Vec<u8> {
        match self.onset_index {
            Some(onset) if self.anomaly_detected => (0..n).map(|p| u8::from(p > onset)).collect(),
            _ => vec![0; n],
        }
    }
}

fn argmin(cad: &[f64]) -> (usize, f64) {
    let mut best = (0, cad[0]);
    for (i, &c) in cad.iter().enumerate().skip(1) {
        if c < best.1 {
            best = (i, c);
        }
    }
    best
}

fn check_curve(cad: &[f64]) -> Result<()> {
    if cad.is_empty() {
        return Err(Error::EmptyInput("density curve is empty"));
    }
    if let Some(i) = cad.iter().position(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::Config(format!(
            "density value {} at {i} outside [0, 1]",
            cad[i]
        )));
    }
    Ok(())
}

fn report(cad: &[f64], fire: impl Fn(f64) -> bool, epsilon: Option<f64>) -> DetectionReport {
    let (onset, min_cad) = argmin(cad);
    let detected = fire(min_cad);
    let labels = if detected {
        (0..cad.len()).map(|i| u8::from(i > onset)).collect()
    } else {
        vec![0; cad.len()]
    };
    DetectionReport {
        anomaly_detected: detected,
        onset_index: detected.then_some(onset),
        min_cad,
        labels,
        epsilon,
    }
}

/// Reports an anomaly starting after `argmin(cad)` when `min(cad) < epsilon`.
pub fn detect(cad: &[f64], epsilon: f64) -> Result<DetectionReport> {
    check_curve(cad)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Config(format!("epsilon {epsilon} outside [0, 1]")));
    }
    Ok(report(cad, |min| min < epsilon, Some(epsilon)))
}

/// Always reports the onset at `argmin(cad)`, with no threshold.
pub fn detect_ungated(cad: &[f64]) -> Result<DetectionReport> {
    check_curve(cad)?;
    Ok(report(cad, |_| true, None))
}

/// Largest threshold that raises no alarm on the given clean curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonRecommendation {
    pub epsilon: f64,
    pub band: (f64, f64),
    /// True when `epsilon` lies inside `band`.
    pub within_band: bool,
}

/// Minimum over all clean curves of their minimum density.
pub fn recommend_epsilon<C: AsRef<[f64]>>(clean_curves: &[C]) -> Result<EpsilonRecommendation> {
    if clean_curves.is_empty() {
        return Err(Error::EmptyInput("no clean curves"));
    }
    let mut epsilon = f64::INFINITY;
    for curve in clean_curves {
        let curve = curve.as_ref();
        check_curve(curve)?;
        epsilon = epsilon.min(argmin(curve).1);
    }
    let band = RECOMMENDED_EPSILON_BAND;
    Ok(EpsilonRecommendation {
        epsilon,
        band,
        within_band: (band.0..=band.1).contains(&epsilon),
    })
}
