//! Seeded two-regime periodic series with a known change point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveform {
    Sine,
    Square,
    Sawtooth,
    Triangle,
}

impl std::str::FromStr for Waveform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(Self::Sine),
            "square" => Ok(Self::Square),
            "sawtooth" => Ok(Self::Sawtooth),
            "triangle" => Ok(Self::Triangle),
            other => Err(Error::Config(format!("unknown waveform {other:?}"))),
        }
    }
}

impl Waveform {
    /// Value at phase `p` in `[0, 1)`, in `[-1, 1]`.
    fn at(self, p: f64) -> f64 {
        match self {
            Waveform::Sine => (p * std::f64::consts::TAU).sin(),
            Waveform::Square => {
                if p < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            Waveform::Sawtooth => 2.0 * p - 1.0,
            Waveform::Triangle => 1.0 - 4.0 * (p - 0.5).abs(),
        }
    }
}

/// A repeating pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    /// Samples per cycle.
    pub period: f64,
    pub waveform: Waveform,
    pub amplitude: f64,
}

impl Regime {
    fn sample(&self, t: usize) -> f64 {
        let phase = (t as f64 / self.period).fract();
        self.amplitude * self.waveform.at(phase)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub total_length: usize,
    pub boundary_fraction: f64,
    pub regime_a: Regime,
    pub regime_b: Regime,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            total_length: 1800,
            boundary_fraction: 0.6,
            regime_a: Regime {
                period: 32.0,
                waveform: Waveform::Sine,
                amplitude: 1.0,
            },
            regime_b: Regime {
                period: 48.0,
                waveform: Waveform::Sine,
                amplitude: 1.0,
            },
            noise_std: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// `round(boundary_fraction * total_length)`.
    pub fn boundary_index(&self) -> usize {
        (self.boundary_fraction * self.total_length as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.total_length < 2 {
            return bad(format!("total length {} too short", self.total_length));
        }
        if !(self.boundary_fraction > 0.0 && self.boundary_fraction < 1.0) {
            return bad(format!(
                "boundary fraction {} outside (0, 1)",
                self.boundary_fraction
            ));
        }
        let b = self.boundary_index();
        if b == 0 || b >= self.total_length {
            return bad(format!("boundary index {b} falls outside the series"));
        }
        for r in [&self.regime_a, &self.regime_b] {
            if !(r.period.is_finite() && r.period > 0.0) {
                return bad(format!("period {} must be positive", r.period));
            }
            if !(r.amplitude.is_finite() && r.amplitude > 0.0) {
                return bad(format!("amplitude {} must be positive", r.amplitude));
            }
        }
        if self.regime_a == self.regime_b {
            return bad("regimes are identical".into());
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise std {} must be non-negative", self.noise_std));
        }
        Ok(())
    }

    fn noise(&self, stream: u64) -> Result<impl Iterator<Item = f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let normal = Normal::new(0.0, self.noise_std).map_err(|e| Error::Config(e.to_string()))?;
        Ok(std::iter::repeat_with(move || normal.sample(&mut rng)))
    }
}

/// Regime A up to the boundary, regime B after it, plus Gaussian noise.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(TimeSeries, GroundTruth)> {
    spec.validate()?;
    let boundary = spec.boundary_index();
    let values = (0..spec.total_length)
        .zip(spec.noise(0)?)
        .map(|(t, e)| {
            let clean = if t < boundary {
                spec.regime_a.sample(t)
            } else {
                spec.regime_b.sample(t - boundary)
            };
            clean + e
        })
        .collect();
    let truth = GroundTruth::anomalous(boundary, spec.total_length)?;
    Ok((TimeSeries::new(values)?, truth))
}

/// Regime A throughout, with a noise stream independent of the anomalous variant.
pub fn generate_clean(spec: &SyntheticSpec) -> Result<(TimeSeries, GroundTruth)> {
    spec.validate()?;
    let values = (0..spec.total_length)
        .zip(spec.noise(1)?)
        .map(|(t, e)| spec.regime_a.sample(t) + e)
        .collect();
    Ok((TimeSeries::new(values)?, GroundTruth::clean()))
}
