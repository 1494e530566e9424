//! Least-squares segmentation by segment-neighborhood dynamic programming,
//! and breakpoint extraction from fitted value sequences.
//!
//! For every model size `k` up to `k_max`, the DP finds the piecewise
//! constant fit with exactly `k` segments that globally minimizes the
//! squared error, in `O(k_max * d^2)` time with `O(1)` interval costs from
//! prefix sums. Ties are broken toward the leftmost last-change index at
//! every level, so fits are deterministic.

use serde::Serialize;

use crate::breakpoint::GuessSet;
use crate::error::{Error, Result};
use crate::tv::{SmoothedSignal, FLSA_CHANGE_TOLERANCE};

/// One fitted model: exactly `k` segments over `d` data points.
///
/// `changes` holds the start index of every segment but the first
/// (0-based, so values lie in `1..d`), which equals the 1-based index `j`
/// of each boundary with `x_j != x_{j+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedModel {
    pub k: usize,
    pub changes: Vec<usize>,
    pub means: Vec<f64>,
    pub sse: f64,
}

impl FittedModel {
    /// Expand per-segment means back to a length-`d` fitted value vector.
    pub fn fitted_values(&self, d: usize) -> Vec<f64> {
        let mut values = Vec::with_capacity(d);
        let mut start = 0usize;
        for (i, &mean) in self.means.iter().enumerate() {
            let end = if i < self.changes.len() {
                self.changes[i]
            } else {
                d
            };
            values.extend(std::iter::repeat_n(mean, end - start));
            start = end;
        }
        values
    }
}

/// Globally optimal least-squares fits for every `k in 1..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentationFit {
    d: usize,
    models: Vec<FittedModel>,
}

impl SegmentationFit {
    pub fn k_max(&self) -> usize {
        self.models.len()
    }

    pub fn data_len(&self) -> usize {
        self.d
    }

    pub fn models(&self) -> &[FittedModel] {
        &self.models
    }

    pub fn model(&self, k: usize) -> Result<&FittedModel> {
        if k < 1 || k > self.models.len() {
            return Err(Error::invalid(format!(
                "k must be in 1..={}; got {k}",
                self.models.len()
            )));
        }
        Ok(&self.models[k - 1])
    }

    pub fn sse(&self, k: usize) -> Result<f64> {
        Ok(self.model(k)?.sse)
    }

    /// Mean squared residual of the `k`-segment model.
    pub fn residual_variance(&self, k: usize) -> Result<f64> {
        Ok(self.model(k)?.sse / self.d as f64)
    }

    /// All `sse` values in `k` order.
    pub fn sse_curve(&self) -> Vec<f64> {
        self.models.iter().map(|m| m.sse).collect()
    }
}

/// Prefix sums of `y` and `y^2` for O(1) interval costs.
struct PrefixSums {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl PrefixSums {
    fn new(y: &[f64]) -> Self {
        let mut sum = Vec::with_capacity(y.len() + 1);
        let mut sum_sq = Vec::with_capacity(y.len() + 1);
        sum.push(0.0);
        sum_sq.push(0.0);
        for &v in y {
            sum.push(sum.last().unwrap() + v);
            sum_sq.push(sum_sq.last().unwrap() + v * v);
        }
        PrefixSums { sum, sum_sq }
    }

    /// Squared error of the best constant fit on `a..=b` (0-based,
    /// inclusive). Clamped at zero against rounding.
    fn cost(&self, a: usize, b: usize) -> f64 {
        let n = (b - a + 1) as f64;
        let s = self.sum[b + 1] - self.sum[a];
        let s2 = self.sum_sq[b + 1] - self.sum_sq[a];
        (s2 - s * s / n).max(0.0)
    }

    fn mean(&self, a: usize, b: usize) -> f64 {
        (self.sum[b + 1] - self.sum[a]) / (b - a + 1) as f64
    }
}

/// Fit every model size `1..=k_max` by segment-neighborhood dynamic
/// programming, minimizing squared error over all segmentations with
/// exactly `k` segments.
pub fn segment_least_squares(y: &[f64], k_max: usize) -> Result<SegmentationFit> {
    let d = y.len();
    if d == 0 {
        return Err(Error::invalid("cannot segment an empty sequence"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values must be finite"));
    }
    if k_max < 1 || k_max > d {
        return Err(Error::invalid(format!(
            "k_max must be in 1..=d={d}; got {k_max}"
        )));
    }
    let pre = PrefixSums::new(y);

    // best[k-1][j] = optimal cost of fitting y[0..=j] with k segments;
    // back[k-1][j] = start index of the last segment in that optimum.
    let mut best = vec![vec![f64::INFINITY; d]; k_max];
    let mut back = vec![vec![0usize; d]; k_max];
    for (j, cell) in best[0].iter_mut().enumerate() {
        *cell = pre.cost(0, j);
    }
    for k in 1..k_max {
        let (prev_rows, cur_rows) = best.split_at_mut(k);
        let prev = &prev_rows[k - 1];
        let cur = &mut cur_rows[0];
        let back_cur = &mut back[k];
        // k+1 segments need at least k+1 points.
        for j in k..d {
            let mut best_cost = f64::INFINITY;
            let mut best_start = k;
            for t in k..=j {
                let cost = prev[t - 1] + pre.cost(t, j);
                if cost < best_cost {
                    best_cost = cost;
                    best_start = t;
                }
            }
            cur[j] = best_cost;
            back_cur[j] = best_start;
        }
    }

    let mut models = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut changes = Vec::with_capacity(k - 1);
        let mut j = d - 1;
        for level in (1..k).rev() {
            let start = back[level][j];
            changes.push(start);
            j = start - 1;
        }
        changes.reverse();
        let mut means = Vec::with_capacity(k);
        let mut start = 0usize;
        for &c in &changes {
            means.push(pre.mean(start, c - 1));
            start = c;
        }
        means.push(pre.mean(start, d - 1));
        models.push(FittedModel {
            k,
            changes,
            means,
            sse: best[k - 1][d - 1],
        });
    }
    Ok(SegmentationFit { d, models })
}

/// Estimated breakpoint positions of a fitted value sequence: the floor
/// midpoint of the positions flanking every adjacent pair of distinct
/// values.
pub fn phi_breaks(x: &[f64], positions: &[usize]) -> Result<GuessSet> {
    phi_breaks_with(x, positions, |a, b| a != b)
}

fn phi_breaks_with(
    x: &[f64],
    positions: &[usize],
    changed: impl Fn(f64, f64) -> bool,
) -> Result<GuessSet> {
    if x.len() != positions.len() {
        return Err(Error::invalid(format!(
            "values ({}) and positions ({}) differ in length",
            x.len(),
            positions.len()
        )));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("positions must be strictly increasing"));
    }
    let breaks = (0..x.len().saturating_sub(1))
        .filter(|&j| changed(x[j], x[j + 1]))
        .map(|j| (positions[j] + positions[j + 1]) / 2)
        .collect();
    GuessSet::new(breaks)
}

/// Breakpoint guesses of the `k`-segment model: the break extraction map
/// applied to its fitted values, with exact inequality between adjacent
/// values.
pub fn model_breaks(fit: &SegmentationFit, k: usize, positions: &[usize]) -> Result<GuessSet> {
    let model = fit.model(k)?;
    if positions.len() != fit.data_len() {
        return Err(Error::invalid(format!(
            "positions ({}) and fit ({}) differ in length",
            positions.len(),
            fit.data_len()
        )));
    }
    phi_breaks(&model.fitted_values(fit.data_len()), positions)
}

/// Breakpoint guesses of a smoothed signal. Fused values differ by
/// rounding noise, so adjacent differences below
/// [`FLSA_CHANGE_TOLERANCE`] do not count as changes.
pub fn smoothed_breaks(smoothed: &SmoothedSignal, positions: &[usize]) -> Result<GuessSet> {
    phi_breaks_with(smoothed.values(), positions, |a, b| {
        (a - b).abs() > FLSA_CHANGE_TOLERANCE
    })
}
