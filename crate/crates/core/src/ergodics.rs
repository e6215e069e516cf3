//! Empirical measures of trajectories and stabilization diagnostics.
//!
//! Histograms are per-dimension marginals over equal-width bins. Windows of a
//! run are binned on one shared layout (the full-run range) so that their
//! proportions can be compared bin by bin.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{StateVector, Trajectory};
use crate::rng::RandomSource;

/// Half-width of the single bin used for a degenerate (constant) range.
pub const DEGENERATE_HALF_WIDTH: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BinRange {
    /// `[min, max]` of the data, per dimension.
    Auto,
    /// Fixed `(lo, hi)` per dimension; values outside are counted in the end bins.
    Explicit(Vec<(f64, f64)>),
}

/// Per-dimension histogram with proportions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    edges: Vec<Vec<f64>>,
    proportions: Vec<Vec<f64>>,
    count: usize,
    /// Samples that fell outside an explicit range, summed over dimensions.
    outside: usize,
}

fn bin_edges(lo: f64, hi: f64, n_bins: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::invalid(format!("invalid bin range [{lo}, {hi}]")));
    }
    if lo == hi {
        // Keep the two edges distinct even where 1e-12 is below one ulp.
        let hw = DEGENERATE_HALF_WIDTH.max(4.0 * f64::EPSILON * lo.abs());
        return Ok(vec![lo - hw, lo + hw]);
    }
    let width = (hi - lo) / n_bins as f64;
    let mut edges: Vec<f64> = (0..n_bins).map(|k| lo + k as f64 * width).collect();
    edges.push(hi);
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "range [{lo}, {hi}] too narrow for {n_bins} distinct bins"
        )));
    }
    Ok(edges)
}

/// Bin of `v`: interior edges belong to the bin on their right; the upper
/// end belongs to the last bin; out-of-range values clamp to the end bins.
fn bin_index(v: f64, edges: &[f64]) -> usize {
    let n = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[n]);
    if v <= lo {
        return 0;
    }
    if v >= hi {
        return n - 1;
    }
    let guess = ((v - lo) / (hi - lo) * n as f64).floor();
    let mut k = (guess.max(0.0) as usize).min(n - 1);
    while k + 1 < n && v >= edges[k + 1] {
        k += 1;
    }
    while k > 0 && v < edges[k] {
        k -= 1;
    }
    k
}

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

impl EmpiricalMeasure {
    /// Histogram of each coordinate of `states`.
    pub fn from_states(states: &[StateVector], n_bins: usize, range: &BinRange) -> Result<Self> {
        let d = states.first().map(StateVector::dim).ok_or_else(|| Error::invalid("no samples"))?;
        let columns: Vec<Vec<f64>> = (0..d).map(|j| states.iter().map(|s| s[j]).collect()).collect();
        Self::from_columns(&columns, n_bins, range)
    }

    /// Histogram from per-dimension sample columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>], n_bins: usize, range: &BinRange) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::invalid("n_bins must be ≥ 1"));
        }
        let count = columns.first().map_or(0, Vec::len);
        if count == 0 || columns.iter().any(|c| c.len() != count) {
            return Err(Error::invalid("histogram needs equal-length, non-empty columns"));
        }
        let ranges: Vec<(f64, f64)> = match range {
            BinRange::Auto => columns.iter().map(|c| value_range(c.iter().copied())).collect(),
            BinRange::Explicit(r) if r.len() == columns.len() => r.clone(),
            BinRange::Explicit(r) => {
                return Err(Error::DimensionMismatch(format!(
                    "{} ranges for {} dimensions",
                    r.len(),
                    columns.len()
                )))
            }
        };
        let mut edges = Vec::with_capacity(columns.len());
        let mut proportions = Vec::with_capacity(columns.len());
        let mut outside = 0;
        for (col, &(lo, hi)) in columns.iter().zip(&ranges) {
            let e = bin_edges(lo, hi, n_bins)?;
            let (p, out) = Self::bin_column(col, &e);
            outside += out;
            edges.push(e);
            proportions.push(p);
        }
        Ok(Self {
            edges,
            proportions,
            count,
            outside,
        })
    }

    /// Histogram on a fixed layout.
    pub fn on_edges(columns: &[Vec<f64>], edges: &[Vec<f64>]) -> Result<Self> {
        let count = columns.first().map_or(0, Vec::len);
        if count == 0 || columns.iter().any(|c| c.len() != count) {
            return Err(Error::invalid("histogram needs equal-length, non-empty columns"));
        }
        if columns.len() != edges.len() {
            return Err(Error::DimensionMismatch("columns vs edge sets".into()));
        }
        let mut outside = 0;
        let proportions = columns
            .iter()
            .zip(edges)
            .map(|(c, e)| {
                let (p, out) = Self::bin_column(c, e);
                outside += out;
                p
            })
            .collect();
        Ok(Self {
            edges: edges.to_vec(),
            proportions,
            count,
            outside,
        })
    }

    /// Rebuild from stored edges and proportions (e.g. a parsed CSV).
    pub fn from_parts(edges: Vec<Vec<f64>>, proportions: Vec<Vec<f64>>, count: usize) -> Result<Self> {
        if edges.len() != proportions.len() || edges.is_empty() {
            return Err(Error::DimensionMismatch("edges vs proportions".into()));
        }
        for (e, p) in edges.iter().zip(&proportions) {
            if e.len() != p.len() + 1 || e.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("edges must be strictly increasing, one more than bins"));
            }
            if p.iter().any(|v| *v < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::invalid("proportions must be non-negative and sum to 1"));
            }
        }
        Ok(Self {
            edges,
            proportions,
            count,
            outside: 0,
        })
    }

    fn bin_column(values: &[f64], edges: &[f64]) -> (Vec<f64>, usize) {
        let n = edges.len() - 1;
        let mut counts = vec![0usize; n];
        let mut outside = 0;
        for &v in values {
            if v < edges[0] || v > edges[n] {
                outside += 1;
            }
            counts[bin_index(v, edges)] += 1;
        }
        let total = values.len() as f64;
        (counts.iter().map(|&c| c as f64 / total).collect(), outside)
    }

    pub fn dims(&self) -> usize {
        self.edges.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn outside(&self) -> usize {
        self.outside
    }

    pub fn edges(&self, dim: usize) -> &[f64] {
        &self.edges[dim]
    }

    pub fn all_edges(&self) -> &[Vec<f64>] {
        &self.edges
    }

    pub fn proportions(&self, dim: usize) -> &[f64] {
        &self.proportions[dim]
    }

    pub fn n_bins(&self, dim: usize) -> usize {
        self.proportions[dim].len()
    }

    pub fn bin_bounds(&self, dim: usize, bin: usize) -> (f64, f64) {
        (self.edges[dim][bin], self.edges[dim][bin + 1])
    }
}

/// Histogram of a whole trajectory.
pub fn build_histogram(traj: &Trajectory, n_bins: usize, range: &BinRange) -> Result<EmpiricalMeasure> {
    if traj.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    EmpiricalMeasure::from_states(&traj.states, n_bins, range)
}

/// Per-dimension `[min, max]` over the full trajectory.
pub fn trajectory_range(traj: &Trajectory) -> Vec<(f64, f64)> {
    (0..traj.dim())
        .map(|j| value_range(traj.states.iter().map(|s| s[j])))
        .collect()
}

/// One histogram per `[start, end)` window, all on the full-run bin layout.
pub fn windowed_measures(traj: &Trajectory, windows: &[(usize, usize)], n_bins: usize) -> Result<Vec<EmpiricalMeasure>> {
    let shared = EmpiricalMeasure::from_states(&traj.states, n_bins, &BinRange::Auto)?;
    windows
        .iter()
        .map(|&(start, end)| {
            if start >= end || end > traj.len() {
                return Err(Error::EmptyWindow { start, end });
            }
            let cols: Vec<Vec<f64>> = (0..traj.dim()).map(|j| traj.coordinate(j, start..end)).collect();
            EmpiricalMeasure::on_edges(&cols, shared.all_edges())
        })
        .collect()
}

/// Total variation `½ Σ |p − q|` per dimension.
pub fn tv_distance(m1: &EmpiricalMeasure, m2: &EmpiricalMeasure) -> Result<Vec<f64>> {
    if m1.edges != m2.edges {
        return Err(Error::IncompatibleMeasures);
    }
    Ok(m1
        .proportions
        .iter()
        .zip(&m2.proportions)
        .map(|(p, q)| {
            let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
            (0.5 * s).min(1.0)
        })
        .collect())
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F̂₁ − F̂₂|`.
pub fn ks_distance(samples1: &[f64], samples2: &[f64]) -> Result<f64> {
    if samples1.is_empty() || samples2.is_empty() {
        return Err(Error::invalid("KS distance needs non-empty samples"));
    }
    let (a, b) = (sorted(samples1), sorted(samples2));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_distance_to_cdf(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("KS distance needs non-empty samples"));
    }
    let a = sorted(samples);
    let n = a.len() as f64;
    Ok(a.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs())
    }))
}

/// Exact 1-D Wasserstein-1 distance between empirical measures. Unequal
/// sample counts are reduced by subsampling the larger set without
/// replacement using `seed`.
pub fn wasserstein1_1d(samples1: &[f64], samples2: &[f64], seed: u64) -> Result<f64> {
    if samples1.is_empty() || samples2.is_empty() {
        return Err(Error::invalid("W1 distance needs non-empty samples"));
    }
    let subsample = |big: &[f64], k: usize| -> Vec<f64> {
        let mut rng = RandomSource::new(seed, 0);
        let mut idx = sample(&mut rng, big.len(), k).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| big[i]).collect()
    };
    let (a, b) = match samples1.len().cmp(&samples2.len()) {
        std::cmp::Ordering::Equal => (sorted(samples1), sorted(samples2)),
        std::cmp::Ordering::Greater => (sorted(&subsample(samples1, samples2.len())), sorted(samples2)),
        std::cmp::Ordering::Less => (sorted(samples1), sorted(&subsample(samples2, samples1.len()))),
    };
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Least-squares slope of `ys` against `0, 1, 2, ...`; zero for fewer than two points.
pub fn least_squares_slope(ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 2 {
        return 0.0;
    }
    let mx = (n - 1) as f64 / 2.0;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationarityVerdict {
    Stabilizing,
    NotStabilizing,
}

impl std::fmt::Display for StationarityVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StationarityVerdict::Stabilizing => "stabilizing",
            StationarityVerdict::NotStabilizing => "not-stabilizing",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionDiagnostic {
    pub dim: usize,
    /// Distances between consecutive windows.
    pub tv: Vec<f64>,
    pub ks: Vec<f64>,
    pub w1: Vec<f64>,
    pub tv_slope: f64,
    /// Bins holding mass in the last window.
    pub occupied_bins: usize,
    pub stabilizing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub n_states: usize,
    pub burn_in: usize,
    /// Window boundaries `b_0 < b_1 < ... < b_n`; window `i` is `[b_i, b_{i+1})`.
    pub boundaries: Vec<usize>,
    pub n_bins: usize,
    pub tolerance: f64,
    pub dimensions: Vec<DimensionDiagnostic>,
    pub verdict: StationarityVerdict,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticOptions {
    pub n_windows: usize,
    pub n_bins: usize,
    pub tolerance: f64,
    /// Leading fraction of the run excluded from the windows.
    pub burn_in_fraction: f64,
    /// Seed for W1 subsampling when window sizes differ.
    pub seed: u64,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self {
            n_windows: 4,
            n_bins: 10,
            tolerance: 0.05,
            burn_in_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Split the post-burn-in run into `n_windows` near-equal windows on the
/// shared layout and compare consecutive windows.
///
/// The run is judged stabilizing when, in every dimension, the last
/// consecutive TV distance is within `tolerance` and the TV sequence has a
/// non-positive least-squares slope.
pub fn stationarity_diagnostic(traj: &Trajectory, options: &DiagnosticOptions) -> Result<DiagnosticReport> {
    if options.n_windows < 2 {
        return Err(Error::invalid("need at least two windows"));
    }
    if traj.len() < 10 * options.n_windows {
        return Err(Error::invalid(format!(
            "trajectory of {} states is too short for {} windows",
            traj.len(),
            options.n_windows
        )));
    }
    if !(0.0..1.0).contains(&options.burn_in_fraction) {
        return Err(Error::invalid("burn-in fraction must be in [0, 1)"));
    }
    let burn_in = (traj.len() as f64 * options.burn_in_fraction).floor() as usize;
    let span = traj.len() - burn_in;
    let boundaries: Vec<usize> = (0..=options.n_windows)
        .map(|i| burn_in + span * i / options.n_windows)
        .collect();
    diagnostic_on_boundaries(traj, &boundaries, burn_in, options)
}

/// Diagnostic over explicit window boundaries. Repeated boundaries are
/// collapsed, so adding a split point on an existing boundary is a no-op.
pub fn stationarity_diagnostic_with_boundaries(
    traj: &Trajectory,
    boundaries: &[usize],
    options: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    let mut b = boundaries.to_vec();
    b.sort_unstable();
    b.dedup();
    if b.len() < 3 {
        return Err(Error::invalid("need at least two windows"));
    }
    let burn_in = b[0];
    diagnostic_on_boundaries(traj, &b, burn_in, options)
}

fn diagnostic_on_boundaries(
    traj: &Trajectory,
    boundaries: &[usize],
    burn_in: usize,
    options: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    let windows: Vec<(usize, usize)> = boundaries.windows(2).map(|w| (w[0], w[1])).collect();
    let measures = windowed_measures(traj, &windows, options.n_bins)?;
    let d = traj.dim();
    let mut tv = vec![Vec::new(); d];
    let mut ks = vec![Vec::new(); d];
    let mut w1 = vec![Vec::new(); d];
    for (k, pair) in windows.windows(2).enumerate() {
        let dist = tv_distance(&measures[k], &measures[k + 1])?;
        for j in 0..d {
            let a = traj.coordinate(j, pair[0].0..pair[0].1);
            let b = traj.coordinate(j, pair[1].0..pair[1].1);
            tv[j].push(dist[j]);
            ks[j].push(ks_distance(&a, &b)?);
            w1[j].push(wasserstein1_1d(&a, &b, options.seed)?);
        }
    }
    let dimensions: Vec<DimensionDiagnostic> = (0..d)
        .map(|j| {
            let slope = least_squares_slope(&tv[j]);
            let last = *tv[j].last().expect("at least one window pair");
            let last_window = measures.last().expect("at least two windows");
            DimensionDiagnostic {
                dim: j,
                occupied_bins: last_window.proportions(j).iter().filter(|&&p| p > 0.0).count(),
                stabilizing: last <= options.tolerance && slope <= 0.0,
                tv_slope: slope,
                tv: std::mem::take(&mut tv[j]),
                ks: std::mem::take(&mut ks[j]),
                w1: std::mem::take(&mut w1[j]),
            }
        })
        .collect();
    let verdict = if dimensions.iter().all(|d| d.stabilizing) {
        StationarityVerdict::Stabilizing
    } else {
        StationarityVerdict::NotStabilizing
    };
    let mut notes: Vec<String> = vec![
        "bin count, tolerance and burn-in are configurable defaults, not calibrated values".into(),
        "bins span the full-run range and are shared by all windows".into(),
    ];
    for dim in dimensions.iter().filter(|d| !d.stabilizing && d.tv.last().is_some_and(|&t| t <= options.tolerance)) {
        notes.push(format!(
            "dimension {}: last TV is within tolerance but the TV slope is positive; \
             over few windows of stationary data the slope sign is sampling noise",
            dim.dim
        ));
    }
    for dim in dimensions.iter().filter(|d| d.occupied_bins == 1) {
        notes.push(format!(
            "dimension {}: the last window sits in a single bin, so TV does not resolve its fluctuations; see ks and w1",
            dim.dim
        ));
    }
    Ok(DiagnosticReport {
        n_states: traj.len(),
        burn_in,
        boundaries: boundaries.to_vec(),
        n_bins: options.n_bins,
        tolerance: options.tolerance,
        dimensions,
        verdict,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj_1d(xs: &[f64]) -> Trajectory {
        Trajectory::from_states(xs.iter().map(|&x| StateVector::scalar(x).unwrap()).collect(), 0).unwrap()
    }

    #[test]
    fn two_bin_manual_example() {
        let m = build_histogram(&traj_1d(&[0.0, 1.0, 2.0, 3.0]), 2, &BinRange::Auto).unwrap();
        assert_eq!(m.edges(0), &[0.0, 1.5, 3.0]);
        assert_eq!(m.proportions(0), &[0.5, 0.5]);
    }

    #[test]
    fn interior_edge_goes_right_and_max_goes_last() {
        let m = build_histogram(&traj_1d(&[0.0, 1.0, 2.0, 4.0]), 4, &BinRange::Auto).unwrap();
        // edges 0,1,2,3,4
        assert_eq!(m.proportions(0), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn constant_trajectory_is_point_mass() {
        let m = build_histogram(&traj_1d(&[2.5; 7]), 10, &BinRange::Auto).unwrap();
        assert_eq!(m.proportions(0), &[1.0]);
        let (lo, hi) = m.bin_bounds(0, 0);
        assert!((hi - lo - 2e-12).abs() < 1e-15);
        assert!((0.5 * (lo + hi) - 2.5).abs() < 1e-15);
        // Large magnitudes still get two distinct edges.
        let m = build_histogram(&traj_1d(&[1e9; 3]), 10, &BinRange::Auto).unwrap();
        assert!(m.edges(0)[0] < m.edges(0)[1]);
    }

    #[test]
    fn explicit_range_clamps_outliers() {
        let t = traj_1d(&[-1.0, 0.5, 2.0]);
        let m = build_histogram(&t, 2, &BinRange::Explicit(vec![(0.0, 1.0)])).unwrap();
        assert_eq!(m.outside(), 2);
        assert_eq!(m.proportions(0).iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn zero_bins_rejected() {
        assert!(build_histogram(&traj_1d(&[1.0]), 0, &BinRange::Auto).is_err());
    }

    #[test]
    fn single_window_equals_full_histogram() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let t = traj_1d(&xs);
        let w = windowed_measures(&t, &[(0, t.len())], 7).unwrap();
        assert_eq!(w[0], build_histogram(&t, 7, &BinRange::Auto).unwrap());
    }

    #[test]
    fn constant_windows_identical() {
        let t = traj_1d(&[1.0; 20]);
        let w = windowed_measures(&t, &[(0, 10), (10, 20)], 5).unwrap();
        assert_eq!(w[0], w[1]);
        assert_eq!(tv_distance(&w[0], &w[1]).unwrap(), vec![0.0]);
    }

    #[test]
    fn empty_window_rejected() {
        let t = traj_1d(&[1.0; 20]);
        assert!(matches!(windowed_measures(&t, &[(5, 5)], 5), Err(Error::EmptyWindow { .. })));
        assert!(matches!(windowed_measures(&t, &[(5, 25)], 5), Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn tv_examples() {
        let edges = vec![vec![0.0, 1.0, 2.0]];
        let a = EmpiricalMeasure::from_parts(edges.clone(), vec![vec![1.0, 0.0]], 1).unwrap();
        let b = EmpiricalMeasure::from_parts(edges.clone(), vec![vec![0.5, 0.5]], 2).unwrap();
        let c = EmpiricalMeasure::from_parts(edges, vec![vec![0.0, 1.0]], 1).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), vec![0.0]);
        assert_eq!(tv_distance(&a, &c).unwrap(), vec![1.0]);
        assert_eq!(tv_distance(&a, &b).unwrap(), vec![0.5]);
        let other = EmpiricalMeasure::from_parts(vec![vec![0.0, 1.0, 3.0]], vec![vec![1.0, 0.0]], 1).unwrap();
        assert!(matches!(tv_distance(&a, &other), Err(Error::IncompatibleMeasures)));
    }

    #[test]
    fn ks_examples() {
        let a = [0.3, 0.1, 0.2];
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_distance(&[0.0; 5], &[1.0; 4]).unwrap(), 1.0);
        assert_eq!(ks_distance(&[0.0, 1.0], &[0.0]).unwrap(), 0.5);
        assert!(ks_distance(&[], &[1.0]).is_err());
    }

    #[test]
    fn ks_to_cdf_of_grid() {
        // Midpoints of n cells: statistic is exactly 1/(2n).
        let n = 10;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance_to_cdf(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.05).abs() < 1e-15);
    }

    #[test]
    fn w1_examples() {
        assert_eq!(wasserstein1_1d(&[1.0, 2.0], &[2.0, 1.0], 0).unwrap(), 0.0);
        assert_eq!(wasserstein1_1d(&[0.0], &[1.0], 0).unwrap(), 1.0);
        assert_eq!(wasserstein1_1d(&[0.0, 1.0], &[0.5, 0.5], 0).unwrap(), 0.5);
        assert!(wasserstein1_1d(&[], &[0.5], 0).is_err());
        // Unequal counts subsample deterministically.
        let a: Vec<f64> = (0..100).map(f64::from).collect();
        let x = wasserstein1_1d(&a, &[10.0; 10], 4).unwrap();
        assert_eq!(x, wasserstein1_1d(&a, &[10.0; 10], 4).unwrap());
    }

    #[test]
    fn slope() {
        assert_eq!(least_squares_slope(&[1.0]), 0.0);
        assert!((least_squares_slope(&[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(least_squares_slope(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn constant_run_is_stabilizing() {
        let t = traj_1d(&[0.7; 200]);
        let r = stationarity_diagnostic(&t, &DiagnosticOptions::default()).unwrap();
        assert_eq!(r.verdict, StationarityVerdict::Stabilizing);
        assert!(r.dimensions[0].tv.iter().all(|&d| d == 0.0));
        assert!(r.dimensions[0].ks.iter().all(|&d| d == 0.0));
        assert!(r.dimensions[0].w1.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn drift_is_not_stabilizing() {
        let xs: Vec<f64> = (0..1000).map(f64::from).collect();
        let r = stationarity_diagnostic(&traj_1d(&xs), &DiagnosticOptions::default()).unwrap();
        assert_eq!(r.verdict, StationarityVerdict::NotStabilizing);
        assert!(r.dimensions[0].tv.iter().all(|&d| d > 0.5));
    }

    #[test]
    fn diagnostic_preconditions() {
        let t = traj_1d(&[0.0; 30]);
        let opts = DiagnosticOptions::default();
        assert!(stationarity_diagnostic(&t, &opts).is_err());
        let one = DiagnosticOptions { n_windows: 1, ..opts };
        assert!(stationarity_diagnostic(&traj_1d(&[0.0; 100]), &one).is_err());
    }

    #[test]
    fn duplicate_boundary_is_noop() {
        let xs: Vec<f64> = (0..400).map(|i| ((i * 7919) % 101) as f64).collect();
        let t = traj_1d(&xs);
        let opts = DiagnosticOptions::default();
        let a = stationarity_diagnostic_with_boundaries(&t, &[40, 130, 220, 310, 400], &opts).unwrap();
        let b = stationarity_diagnostic_with_boundaries(&t, &[40, 130, 220, 310, 400, 400], &opts).unwrap();
        assert_eq!(a, b);
        let c = stationarity_diagnostic_with_boundaries(&t, &[40, 130, 130, 220, 310, 400], &opts).unwrap();
        assert_eq!(a, c);
    }
}
