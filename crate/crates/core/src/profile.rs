//! Z-normalized self-join matrix profile.
//!
//! Three engines compute the same [`MatrixProfile`]:
//!
//! * [`brute_force_profile`] evaluates every pairwise distance from scratch
//!   and serves as the reference.
//! * [`stomp_profile`] walks the query rows in order and derives each row of
//!   sliding dot products from the previous one along the diagonals.
//! * [`conv_profile`] treats every subsequence as a kernel and computes the
//!   dot products of a whole batch of kernels against the series at once
//!   (a valid-mode cross-correlation), then z-normalizes the rows
//!   independently. Batches are independent, so they can be spread over
//!   worker threads without changing a single output bit.
//!
//! Indices are 0-based. Neighbors inside the closed band
//! `[i - exclusion_zone, i + exclusion_zone]` are trivial matches and are
//! never reported. Ties resolve to the smallest neighbor index.

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::series::{rolling_mean_std, TimeSeries, WindowConfig};

/// Nearest-neighbor distance `distances[i]` and start index `indices[i]`
/// for every subsequence `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProfile {
    pub distances: Vec<f64>,
    pub indices: Vec<usize>,
    pub m: usize,
    pub exclusion_zone: usize,
}

impl MatrixProfile {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }
}

/// Unmasked z-normalized distances from one query subsequence to all others.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRow(Vec<f64>);

impl DistanceRow {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Which engine computes the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    Brute,
    Stomp,
    #[default]
    Conv,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(Engine::Brute),
            "stomp" => Ok(Engine::Stomp),
            "conv" => Ok(Engine::Conv),
            other => Err(Error::Config(format!("unknown engine {other:?}"))),
        }
    }
}

/// Batching and threading for [`conv_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvOptions {
    /// Query rows whose dot products are materialized together.
    pub batch_rows: usize,
    pub workers: usize,
}

impl ConvOptions {
    pub const DEFAULT_BATCH_ROWS: usize = 256;

    pub fn new(batch_rows: usize, workers: usize) -> Result<Self> {
        let opts = Self {
            batch_rows,
            workers,
        };
        opts.validate()?;
        Ok(opts)
    }

    fn validate(&self) -> Result<()> {
        if self.batch_rows < 1 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for ConvOptions {
    fn default() -> Self {
        Self {
            batch_rows: Self::DEFAULT_BATCH_ROWS,
            workers: 1,
        }
    }
}

/// Computes the profile with the chosen engine.
pub fn compute_profile(
    series: &TimeSeries,
    cfg: &WindowConfig,
    engine: Engine,
    opts: ConvOptions,
) -> Result<MatrixProfile> {
    match engine {
        Engine::Brute => brute_force_profile(series, cfg),
        Engine::Stomp => stomp_profile(series, cfg),
        Engine::Conv => conv_profile(series, cfg, opts),
    }
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    (mean, var.sqrt())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Euclidean distance between the z-normalized forms of `a` and `b`.
///
/// A constant subsequence z-normalizes to the zero vector: two constant
/// inputs are at distance 0, one constant input against a varying one is at
/// distance `sqrt(m)`.
pub fn znorm_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let m = a.len();
    if m < 2 {
        return Err(Error::InvalidWindowLength { m, n: m });
    }
    match (is_constant(a), is_constant(b)) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok((m as f64).sqrt()),
        (false, false) => {}
    }
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    let sq: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - ma) / sa - (y - mb) / sb;
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}

/// Distance between subsequences `i` and `j` from their dot product.
///
/// `sqrt(2m (1 - (qt - m mu_i mu_j) / (m sd_i sd_j)))`, with the radicand
/// clamped to `[0, 4m]` and the zero-variance rules of [`znorm_distance`].
#[inline]
pub fn distance_from_dot(qt: f64, m: usize, mu_i: f64, sd_i: f64, mu_j: f64, sd_j: f64) -> f64 {
    let mf = m as f64;
    match (sd_i == 0.0, sd_j == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => mf.sqrt(),
        (false, false) => {
            let corr = (qt - mf * mu_i * mu_j) / (mf * sd_i * sd_j);
            (2.0 * mf * (1.0 - corr)).clamp(0.0, 4.0 * mf).sqrt()
        }
    }
}

/// Fails unless every query row keeps at least one candidate outside its
/// exclusion band, which needs `l >= 2 * exclusion_zone + 2`.
fn check_neighbors(l: usize, exclusion_zone: usize) -> Result<()> {
    if l < 2 * exclusion_zone + 2 {
        return Err(Error::NoValidNeighbor { l, exclusion_zone });
    }
    Ok(())
}

#[inline]
fn excluded(i: usize, j: usize, zone: usize) -> bool {
    i.abs_diff(j) <= zone
}

/// Masked row minimum; strict comparison keeps the first (smallest) index.
#[inline]
fn masked_argmin(row: &[f64], i: usize, zone: usize) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut best_j = usize::MAX;
    let lo = i.saturating_sub(zone);
    let hi = (i + zone + 1).min(row.len());
    for (j, &d) in row[..lo].iter().enumerate() {
        if d < best {
            best = d;
            best_j = j;
        }
    }
    for (j, &d) in row[hi..].iter().enumerate() {
        if d < best {
            best = d;
            best_j = hi + j;
        }
    }
    (best, best_j)
}

/// Reference engine: every pairwise distance via [`znorm_distance`].
pub fn brute_force_profile(series: &TimeSeries, cfg: &WindowConfig) -> Result<MatrixProfile> {
    let t = series.values();
    let m = cfg.m();
    let l = cfg.validate_for(t.len())?;
    let zone = cfg.exclusion_zone();
    check_neighbors(l, zone)?;

    let mut distances = Vec::with_capacity(l);
    let mut indices = Vec::with_capacity(l);
    for i in 0..l {
        let query = &t[i..i + m];
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for j in 0..l {
            if excluded(i, j, zone) {
                continue;
            }
            let d = znorm_distance(query, &t[j..j + m])?;
            if d < best {
                best = d;
                best_j = j;
            }
        }
        distances.push(best);
        indices.push(best_j);
    }
    Ok(MatrixProfile {
        distances,
        indices,
        m,
        exclusion_zone: zone,
    })
}

/// Series shifted to zero global mean plus its rolling statistics.
///
/// Shifting leaves every z-normalized distance unchanged and removes the
/// sensor offset from the `qt - m mu_i mu_j` cancellation.
struct Prepared {
    t: Vec<f64>,
    means: Vec<f64>,
    stds: Vec<f64>,
    m: usize,
    l: usize,
}

impl Prepared {
    fn new(series: &TimeSeries, cfg: &WindowConfig) -> Result<Self> {
        let raw = series.values();
        let m = cfg.m();
        let l = cfg.validate_for(raw.len())?;
        check_neighbors(l, cfg.exclusion_zone())?;
        let offset = raw.iter().sum::<f64>() / raw.len() as f64;
        let t: Vec<f64> = raw.iter().map(|v| v - offset).collect();
        let stats = rolling_mean_std(&t, m)?;
        Ok(Self {
            t,
            means: stats.means,
            stds: stats.stds,
            m,
            l,
        })
    }

    /// Converts a row of dot products for query `i` into distances in place.
    #[inline]
    fn dots_to_distances(&self, i: usize, row: &mut [f64]) {
        let (mu_i, sd_i) = (self.means[i], self.stds[i]);
        for ((d, &mu_j), &sd_j) in row.iter_mut().zip(&self.means).zip(&self.stds) {
            *d = distance_from_dot(*d, self.m, mu_i, sd_i, mu_j, sd_j);
        }
    }
}

/// Rows of sliding dot products `QT[i][j] = T[i..i+m] . T[j..j+m]`, produced
/// in row order. Row 0 is computed directly; every later row is derived
/// from its predecessor along the diagonals,
/// `QT[i][j] = QT[i-1][j-1] - t[i-1] t[j-1] + t[i+m-1] t[j+m-1]`,
/// with the first column taken from row 0 by symmetry.
pub struct StompRows<'a> {
    t: &'a [f64],
    m: usize,
    l: usize,
    first: Vec<f64>,
    current: Vec<f64>,
    next_row: usize,
}

impl<'a> StompRows<'a> {
    pub fn new(t: &'a [f64], m: usize) -> Result<Self> {
        if m < 1 || m > t.len() {
            return Err(Error::InvalidWindowLength { m, n: t.len() });
        }
        let l = t.len() - m + 1;
        let first = sliding_dot_products(&t[..m], t)?;
        Ok(Self {
            t,
            m,
            l,
            current: first.clone(),
            first,
            next_row: 0,
        })
    }

    /// Advances to the next row and returns it.
    pub fn next_row(&mut self) -> Option<&[f64]> {
        let i = self.next_row;
        if i >= self.l {
            return None;
        }
        if i > 0 {
            let (t, m) = (self.t, self.m);
            let drop = t[i - 1];
            let add = t[i + m - 1];
            for j in (1..self.l).rev() {
                self.current[j] = self.current[j - 1] - drop * t[j - 1] + add * t[j + m - 1];
            }
            self.current[0] = self.first[i];
        }
        self.next_row += 1;
        Some(&self.current)
    }
}

/// Direct dot products of `query` against every window of `series`.
pub fn sliding_dot_products(query: &[f64], series: &[f64]) -> Result<Vec<f64>> {
    let m = query.len();
    if m < 1 || m > series.len() {
        return Err(Error::InvalidWindowLength { m, n: series.len() });
    }
    Ok(series
        .windows(m)
        .map(|w| w.iter().zip(query).map(|(a, b)| a * b).sum())
        .collect())
}

/// Sequential engine based on the diagonal dot-product recurrence.
pub fn stomp_profile(series: &TimeSeries, cfg: &WindowConfig) -> Result<MatrixProfile> {
    let prep = Prepared::new(series, cfg)?;
    let zone = cfg.exclusion_zone();
    let mut rows = StompRows::new(&prep.t, prep.m)?;
    let mut row = vec![0.0; prep.l];
    let mut distances = Vec::with_capacity(prep.l);
    let mut indices = Vec::with_capacity(prep.l);
    let mut i = 0;
    while let Some(qt) = rows.next_row() {
        row.copy_from_slice(qt);
        prep.dots_to_distances(i, &mut row);
        let (d, j) = masked_argmin(&row, i, zone);
        distances.push(d);
        indices.push(j);
        i += 1;
    }
    Ok(MatrixProfile {
        distances,
        indices,
        m: prep.m,
        exclusion_zone: zone,
    })
}

/// Dot products of kernels `rows` against every window of `t`, one output
/// row of length `l` per kernel. Each kernel tap sweeps the whole series,
/// so every output cell accumulates its taps in the same order no matter
/// how rows are batched.
fn batched_cross_correlation(t: &[f64], m: usize, rows: std::ops::Range<usize>, out: &mut [f64]) {
    let l = t.len() - m + 1;
    for (r, qt) in rows.zip(out.chunks_exact_mut(l)) {
        let kernel = &t[r..r + m];
        qt.fill(0.0);
        for (k, &s) in kernel.iter().enumerate() {
            let shifted = &t[k..k + l];
            for (acc, &x) in qt.iter_mut().zip(shifted) {
                *acc += s * x;
            }
        }
    }
}

/// Convolution-batched engine.
///
/// All subsequences form a bank of kernels; for each batch of
/// `opts.batch_rows` kernels the block of sliding dot products is computed,
/// converted row-wise to distances, masked and reduced to (min, argmin).
/// Output does not depend on `batch_rows` or `workers`.
pub fn conv_profile(
    series: &TimeSeries,
    cfg: &WindowConfig,
    opts: ConvOptions,
) -> Result<MatrixProfile> {
    opts.validate()?;
    let prep = Prepared::new(series, cfg)?;
    let zone = cfg.exclusion_zone();
    let l = prep.l;
    let batch = opts.batch_rows.min(l);

    let mut distances = vec![0.0; l];
    let mut indices = vec![0usize; l];
    let jobs = Mutex::new(
        distances
            .chunks_mut(batch)
            .zip(indices.chunks_mut(batch))
            .enumerate(),
    );

    let run = || {
        let mut block = vec![0.0; batch * l];
        loop {
            let next = jobs.lock().expect("job queue poisoned").next();
            let Some((b, (p_out, i_out))) = next else {
                break;
            };
            let start = b * batch;
            let rows = start..start + p_out.len();
            let block = &mut block[..p_out.len() * l];
            batched_cross_correlation(&prep.t, prep.m, rows.clone(), block);
            for ((i, row), (p, idx)) in rows
                .zip(block.chunks_exact_mut(l))
                .zip(p_out.iter_mut().zip(i_out.iter_mut()))
            {
                prep.dots_to_distances(i, row);
                (*p, *idx) = masked_argmin(row, i, zone);
            }
        }
    };

    let workers = opts.workers.min(l.div_ceil(batch));
    if workers <= 1 {
        run();
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(run);
            }
        });
    }

    Ok(MatrixProfile {
        distances,
        indices,
        m: prep.m,
        exclusion_zone: zone,
    })
}

/// Unmasked distance row for query subsequence `i`.
pub fn distance_row(series: &TimeSeries, m: usize, i: usize) -> Result<DistanceRow> {
    let t = series.values();
    if m < 2 || m > t.len() {
        return Err(Error::InvalidWindowLength { m, n: t.len() });
    }
    let l = t.len() - m + 1;
    if i >= l {
        return Err(Error::Dimension {
            expected: l,
            actual: i,
        });
    }
    let offset = t.iter().sum::<f64>() / t.len() as f64;
    let centered: Vec<f64> = t.iter().map(|v| v - offset).collect();
    let stats = rolling_mean_std(&centered, m)?;
    let mut row = vec![0.0; l];
    batched_cross_correlation(&centered, m, i..i + 1, &mut row);
    for ((d, &mu_j), &sd_j) in row.iter_mut().zip(&stats.means).zip(&stats.stds) {
        *d = distance_from_dot(*d, m, stats.means[i], stats.stds[i], mu_j, sd_j);
    }
    Ok(DistanceRow(row))
}
