//! Time-series container, window configuration and rolling statistics.

use crate::error::{Error, Result};

/// An ordered run of finite real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input and non-finite samples.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("time series has no samples"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a series holds at least one sample.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of subsequences of length `m`, `n - m + 1`.
    pub fn subsequence_count(&self, m: usize) -> Result<usize> {
        check_window(m, self.len())?;
        Ok(self.len() - m + 1)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

fn check_window(m: usize, n: usize) -> Result<()> {
    if m < 1 || m > n {
        return Err(Error::InvalidWindowLength { m, n });
    }
    Ok(())
}

/// Default exclusion zone for window length `m`: `ceil(m / 4)`.
pub fn default_exclusion_zone(m: usize) -> usize {
    m.div_ceil(4)
}

/// Subsequence length and trivial-match exclusion zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    m: usize,
    exclusion_zone: usize,
}

impl WindowConfig {
    /// Smallest admissible window; keeps `ceil(m/4) >= 1`.
    pub const MIN_WINDOW: usize = 4;

    pub fn new(m: usize) -> Result<Self> {
        if m < Self::MIN_WINDOW {
            return Err(Error::Config(format!(
                "window length must be at least {}, got {m}",
                Self::MIN_WINDOW
            )));
        }
        Ok(Self {
            m,
            exclusion_zone: default_exclusion_zone(m),
        })
    }

    /// Overrides the exclusion zone. Zero is rejected since it would admit self-matches.
    pub fn with_exclusion_zone(mut self, exclusion_zone: usize) -> Result<Self> {
        if exclusion_zone == 0 {
            return Err(Error::Config("exclusion zone must be at least 1".into()));
        }
        self.exclusion_zone = exclusion_zone;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn exclusion_zone(&self) -> usize {
        self.exclusion_zone
    }

    /// Checks the window against a series of length `n` and returns the
    /// subsequence count `l`.
    pub fn validate_for(&self, n: usize) -> Result<usize> {
        check_window(self.m, n)?;
        Ok(n - self.m + 1)
    }
}

/// Per-subsequence population mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl RollingStats {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// All length-`m` windows of `series` at stride 1, in start order.
pub fn sliding_window(series: &[f64], m: usize) -> Result<std::slice::Windows<'_, f64>> {
    check_window(m, series.len())?;
    Ok(series.windows(m))
}

/// Neumaier-compensated running sum that supports removal.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Rolling population mean and standard deviation of every length-`m` window.
///
/// Samples are accumulated relative to a reference value taken from the
/// series, so large sensor offsets do not eat into the precision of the
/// deviations. The mean uses a compensated add/remove sum and the sum of
/// squared deviations follows the sliding Welford update; both are
/// re-anchored with an exact two-pass evaluation (and a fresh reference)
/// every `m` windows. Windows made of a single repeated value always get
/// exactly zero deviation, and a non-constant window whose rolling variance
/// rounds to zero or below is recomputed directly.
pub fn rolling_mean_std(series: &[f64], m: usize) -> Result<RollingStats> {
    check_window(m, series.len())?;
    let l = series.len() - m + 1;
    let mf = m as f64;
    let mut means = Vec::with_capacity(l);
    let mut stds = Vec::with_capacity(l);

    let mut reference = 0.0;
    let mut sum = CompensatedSum::default();
    // Mean and squared-deviation sum of the current window, shifted by `reference`.
    let mut mean = 0.0;
    let mut m2 = 0.0;

    // Start of the current run of identical samples.
    let mut run_start = 0;
    for (k, pair) in series[..m].windows(2).enumerate() {
        if pair[0] != pair[1] {
            run_start = k + 1;
        }
    }

    for i in 0..l {
        let window = &series[i..i + m];
        if i > 0 {
            let new = series[i + m - 1];
            if series[i + m - 2] != new {
                run_start = i + m - 1;
            }
        }
        if i % m == 0 {
            reference = window[0];
            sum = CompensatedSum::default();
            for &x in window {
                sum.add(x - reference);
            }
            mean = sum.value() / mf;
            m2 = shifted_m2(window, reference, mean);
        } else {
            let old = series[i - 1] - reference;
            let new = series[i + m - 1] - reference;
            sum.add(-old);
            sum.add(new);
            let prev_mean = mean;
            mean = sum.value() / mf;
            m2 += (new - old) * (new - mean + old - prev_mean);
        }
        if run_start <= i {
            means.push(window[0]);
            stds.push(0.0);
            continue;
        }
        if m2 <= 0.0 {
            m2 = shifted_m2(window, reference, mean);
        }
        means.push(reference + mean);
        stds.push((m2.max(0.0) / mf).sqrt());
    }

    Ok(RollingStats { means, stds })
}

fn shifted_m2(window: &[f64], reference: f64, mean: f64) -> f64 {
    window
        .iter()
        .map(|&x| {
            let d = x - reference - mean;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Two-pass statistics on samples shifted by the window's first value.
    fn direct(window: &[f64]) -> (f64, f64) {
        let m = window.len() as f64;
        let shifted: Vec<f64> = window.iter().map(|x| x - window[0]).collect();
        let mean = shifted.iter().sum::<f64>() / m;
        let var = shifted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
        (window[0] + mean, var.sqrt())
    }

    #[test]
    fn windows_enumerate_in_order() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let w: Vec<_> = sliding_window(&t, 2).unwrap().collect();
        assert_eq!(w, vec![&[1.0, 2.0][..], &[2.0, 3.0], &[3.0, 4.0]]);
        let single: Vec<_> = sliding_window(&[5.0], 1).unwrap().collect();
        assert_eq!(single, vec![&[5.0][..]]);
    }

    #[test]
    fn window_count_for_trimmed_print_run() {
        let t = vec![0.0; 1866];
        assert_eq!(sliding_window(&t, 100).unwrap().count(), 1767);
    }

    #[test]
    fn window_length_errors() {
        assert!(matches!(
            sliding_window(&[1.0, 2.0], 3),
            Err(Error::InvalidWindowLength { m: 3, n: 2 })
        ));
        assert!(sliding_window(&[1.0], 0).is_err());
        assert!(rolling_mean_std(&[1.0], 2).is_err());
    }

    #[test]
    fn constant_series_has_zero_std() {
        let s = rolling_mean_std(&[2.0, 2.0, 2.0, 2.0], 2).unwrap();
        assert_eq!(s.means, vec![2.0; 3]);
        assert_eq!(s.stds, vec![0.0; 3]);
    }

    #[test]
    fn alternating_series() {
        let s = rolling_mean_std(&[0.0, 1.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(s.means, vec![0.5; 3]);
        assert_eq!(s.stds, vec![0.5; 3]);
    }

    #[test]
    fn population_divisor() {
        let s = rolling_mean_std(&[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(s.means, vec![2.0]);
        assert!((s.stds[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_stretch_after_noise_is_exactly_zero() {
        let mut t = vec![1e6 + 0.3, 1e6 - 7.1, 1e6 + 2.2];
        t.extend(std::iter::repeat_n(1e6 + 0.5, 10));
        let s = rolling_mean_std(&t, 4).unwrap();
        for i in 3..s.len() {
            assert_eq!(s.stds[i], 0.0, "window {i}");
            assert_eq!(s.means[i], 1e6 + 0.5);
        }
        for i in 0..3 {
            assert!(s.stds[i] > 0.0);
        }
    }

    #[test]
    fn large_offset_small_variance() {
        let t: Vec<f64> = (0..5000)
            .map(|i| 1e8 + ((i as f64) * 0.37).sin() * 1e-3)
            .collect();
        let s = rolling_mean_std(&t, 50).unwrap();
        for (i, w) in t.windows(50).enumerate() {
            let (mu, sd) = direct(w);
            assert!((s.means[i] - mu).abs() <= 1e-9 * mu.abs());
            assert!(
                (s.stds[i] - sd).abs() <= 1e-6 * sd,
                "{i}: {} vs {sd}",
                s.stds[i]
            );
        }
    }

    #[test]
    fn exclusion_zone_rounds_up() {
        assert_eq!(WindowConfig::new(4).unwrap().exclusion_zone(), 1);
        assert_eq!(WindowConfig::new(5).unwrap().exclusion_zone(), 2);
        assert_eq!(WindowConfig::new(100).unwrap().exclusion_zone(), 25);
        assert!(WindowConfig::new(3).is_err());
        assert!(WindowConfig::new(8)
            .unwrap()
            .with_exclusion_zone(0)
            .is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            TimeSeries::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
        assert!(TimeSeries::new(vec![f64::INFINITY]).is_err());
        assert!(TimeSeries::new(vec![]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rolling_matches_direct(
            t in prop::collection::vec(-1e6f64..1e6, 1..2000),
            m_seed in 1usize..200,
        ) {
            let m = 1 + m_seed % t.len();
            let s = rolling_mean_std(&t, m).unwrap();
            prop_assert_eq!(s.len(), t.len() - m + 1);
            for (i, w) in t.windows(m).enumerate() {
                let (mu, sd) = direct(w);
                prop_assert!((s.means[i] - mu).abs() <= 1e-9 * mu.abs().max(1.0));
                prop_assert!(s.stds[i] >= 0.0);
                prop_assert!((s.stds[i] - sd).abs() <= 1e-7 * sd.max(1.0));
            }
        }

        #[test]
        fn windows_match_slices(
            t in prop::collection::vec(-10.0f64..10.0, 1..300),
            m_seed in 0usize..300,
        ) {
            let m = 1 + m_seed % t.len();
            let w: Vec<&[f64]> = sliding_window(&t, m).unwrap().collect();
            prop_assert_eq!(w.len(), t.len() - m + 1);
            for (k, win) in w.iter().enumerate() {
                prop_assert_eq!(*win, &t[k..k + m]);
            }
        }
    }
}
