//! Arc counting and corrected arc density over a matrix profile index.
//!
//! Each subsequence `i` draws an arc to its nearest neighbor `I[i]`. The arc
//! covers the half-open span `[min(i, I[i]), max(i, I[i]))`. Few arcs cross
//! the boundary between two regimes, so the arc count normalized by its
//! expectation under random neighbors dips where the behavior changes.

use crate::error::{Error, Result};

/// Which maximum normalizes the clipped arc ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CadDenominator {
    /// Maximum of the clipped ratios; the curve always peaks at 1.
    #[default]
    Corrected,
    /// Maximum of the raw arc counts.
    Raw,
}

impl std::str::FromStr for CadDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrected" => Ok(Self::Corrected),
            "raw" => Ok(Self::Raw),
            other => Err(Error::Config(format!("unknown CAD denominator {other:?}"))),
        }
    }
}

/// Raw counts, the random-neighbor expectation, and the corrected density.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcDensity {
    pub raw_counts: Vec<u64>,
    pub idealized: Vec<f64>,
    pub corrected: Vec<f64>,
}

impl ArcDensity {
    /// Runs all three stages over a profile index.
    pub fn from_index(indices: &[usize], edge_guard: usize, denom: CadDenominator) -> Result<Self> {
        let l = indices.len();
        let raw_counts = arc_counts(indices, l)?;
        let idealized = idealized_arc_count(l)?;
        let corrected = corrected_arc_density(&raw_counts, &idealized, edge_guard, denom)?;
        Ok(Self {
            raw_counts,
            idealized,
            corrected,
        })
    }

    pub fn len(&self) -> usize {
        self.corrected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corrected.is_empty()
    }
}

/// Number of arcs `(a, b)` covering each position `t` with `min(a,b) <= t < max(a,b)`.
pub fn count_arcs<I>(arcs: I, l: usize) -> Vec<u64>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut delta = vec![0i64; l + 1];
    for (a, b) in arcs {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        delta[lo] += 1;
        delta[hi] -= 1;
    }
    let mut running = 0i64;
    delta[..l]
        .iter()
        .map(|d| {
            running += d;
            running as u64
        })
        .collect()
}

/// Arc count at each subsequence position for profile index `indices`.
pub fn arc_counts(indices: &[usize], l: usize) -> Result<Vec<u64>> {
    if indices.len() != l {
        return Err(Error::Dimension {
            expected: l,
            actual: indices.len(),
        });
    }
    for (position, &index) in indices.iter().enumerate() {
        if index >= l || index == position {
            return Err(Error::MalformedProfile { position, index, l });
        }
    }
    Ok(count_arcs(indices.iter().copied().enumerate(), l))
}

/// Expected arc count under uniformly random neighbors: `2 i (l - i) / l`.
pub fn idealized_arc_count(l: usize) -> Result<Vec<f64>> {
    if l < 2 {
        return Err(Error::Config(format!(
            "idealized arc count needs at least 2 positions, got {l}"
        )));
    }
    let lf = l as f64;
    Ok((0..l)
        .map(|i| {
            let i = i as f64;
            2.0 * i * (lf - i) / lf
        })
        .collect())
}

/// Clips `AC / IAC` at 1 and rescales by the chosen maximum.
///
/// Positions where the expectation is zero or that lie within `edge_guard`
/// of either end carry no usable evidence and are pinned to 1. A curve whose
/// maximum is zero comes back as all ones.
pub fn corrected_arc_density(
    counts: &[u64],
    idealized: &[f64],
    edge_guard: usize,
    denom: CadDenominator,
) -> Result<Vec<f64>> {
    let l = counts.len();
    if idealized.len() != l {
        return Err(Error::Dimension {
            expected: l,
            actual: idealized.len(),
        });
    }
    if edge_guard < 1 {
        return Err(Error::Config("edge guard must be at least 1".into()));
    }
    let clipped: Vec<f64> = counts
        .iter()
        .zip(idealized)
        .enumerate()
        .map(|(i, (&ac, &iac))| {
            let near_edge = i < edge_guard || i + edge_guard >= l;
            if near_edge || iac <= 0.0 {
                1.0
            } else {
                (ac as f64 / iac).min(1.0)
            }
        })
        .collect();
    let scale = match denom {
        CadDenominator::Corrected => clipped.iter().copied().fold(0.0, f64::max),
        CadDenominator::Raw => counts.iter().copied().max().unwrap_or(0) as f64,
    };
    if scale <= 0.0 {
        return Ok(vec![1.0; l]);
    }
    Ok(clipped.into_iter().map(|c| (c / scale).min(1.0)).collect())
}
