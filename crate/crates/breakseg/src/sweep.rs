//! Penalty-exponent sweeps over databases of simulated signals.
//!
//! Each signal contributes a piecewise-constant breakpoint-error curve in
//! the shared penalty multiplier λ; the per-signal penalty coefficient
//! `d^α · l^β` (optionally times the estimated variance) rescales that
//! curve's λ axis. A sweep scores every exponent grid point by the minimal
//! summed training error and by the pairwise train-on-one/test-on-another
//! error, and reports the test-error argmin.

use rayon::prelude::*;
use serde::Serialize;

use crate::breakpoint::breakpoint_error;
use crate::error::{Error, Result};
use crate::segment::{model_breaks, segment_least_squares, smoothed_breaks};
use crate::select::{
    best_lambda, compose_error_curve, selection_path, test_error, train_error, variance_estimate,
    CurvePiece, ErrorCurve, SelectionPath,
};
use crate::sim::{SampleScheme, Signal, TrueModel};
use crate::tv::TvPath;

/// A simulated signal paired with the model that generated it.
#[derive(Debug, Clone)]
pub struct SimulatedSignal {
    pub signal: Signal,
    pub model: TrueModel,
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    /// Minimal summed training error over λ.
    pub train_error: f64,
    /// Sum of pairwise test errors.
    pub test_error: f64,
    /// Standard deviation of the per-pair test errors.
    pub sd_test: f64,
}

/// One piece of a per-signal error curve in plottable form: the model size
/// selected on `[lambda_lo, lambda_hi)` and its breakpoint error. For
/// fused-lasso curves, `k` is the segment count of the smoothed signal
/// (breaks + 1) at the piece's grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveDump {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub k: usize,
    pub error: f64,
}

/// Full result of a sweep: one row per (α, β) plus the per-signal curves
/// at the winning grid point.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Grid point with minimal test error (ties: first in row order).
    pub argmin: SweepRow,
    /// Per-signal error curves at the argmin, for plotting.
    pub argmin_curves: Vec<Vec<CurveDump>>,
    /// Per-signal λ̂ at the argmin.
    pub argmin_lambdas: Vec<f64>,
}

/// Precomputed per-signal state that exponent changes can rescale instead
/// of recompute: the unit-coefficient selection path and the breakpoint
/// error of every model size on it.
struct PreparedSignal {
    d: f64,
    l: f64,
    variance: f64,
    base_path: SelectionPath,
    berr_by_k: Vec<(usize, f64)>,
}

fn prepare_signal(entry: &SimulatedSignal, k_max: usize) -> Result<PreparedSignal> {
    let signal = &entry.signal;
    let k_max = k_max.min(signal.len());
    let fit = segment_least_squares(signal.values(), k_max)?;
    let base_path = selection_path(&fit.sse_curve(), 1.0)?;
    let breaks = entry.model.breakpoints();
    let p = entry.model.position_count();
    let mut berr_by_k = Vec::with_capacity(base_path.segments().len());
    for seg in base_path.segments() {
        let guesses = model_breaks(&fit, seg.k, signal.positions())?;
        let err = breakpoint_error(&breaks, p, &guesses)?.total;
        berr_by_k.push((seg.k, err));
    }
    Ok(PreparedSignal {
        d: signal.len() as f64,
        l: signal.length() as f64,
        variance: variance_estimate(signal.values())?,
        base_path,
        berr_by_k,
    })
}

impl PreparedSignal {
    fn coefficient(&self, alpha: f64, beta: f64, with_variance: bool) -> f64 {
        let mut c = self.d.powf(alpha) * self.l.powf(beta);
        if with_variance {
            c *= self.variance;
        }
        c
    }

    fn error_of(&self, k: usize) -> f64 {
        self.berr_by_k
            .iter()
            .find(|(kk, _)| *kk == k)
            .expect("path model sizes are stable under rescaling")
            .1
    }

    fn curve(&self, alpha: f64, beta: f64, with_variance: bool) -> Result<ErrorCurve> {
        let path = self
            .base_path
            .with_coefficient(self.coefficient(alpha, beta, with_variance))?;
        compose_error_curve(&path, |k| Ok(self.error_of(k)))
    }

    fn dump(&self, alpha: f64, beta: f64, with_variance: bool) -> Result<Vec<CurveDump>> {
        let path = self
            .base_path
            .with_coefficient(self.coefficient(alpha, beta, with_variance))?;
        Ok(path
            .segments()
            .iter()
            .map(|seg| CurveDump {
                lambda_lo: seg.lambda_lo,
                lambda_hi: seg.lambda_hi,
                k: seg.k,
                error: self.error_of(seg.k),
            })
            .collect())
    }
}

fn score_curves(curves: &[ErrorCurve]) -> Result<(f64, f64, f64, Vec<f64>)> {
    let (_, train_min) = train_error(curves)?;
    let lambdas: Vec<f64> = curves.iter().map(best_lambda).collect();
    let total = test_error(curves, &lambdas)?;
    let mut pair_values = Vec::with_capacity(curves.len() * (curves.len() - 1));
    for (i, curve) in curves.iter().enumerate() {
        for (j, &lambda) in lambdas.iter().enumerate() {
            if i != j {
                pair_values.push(curve.eval(lambda));
            }
        }
    }
    let mean = pair_values.iter().sum::<f64>() / pair_values.len() as f64;
    let var = pair_values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (pair_values.len() as f64 - 1.0).max(1.0);
    Ok((train_min, total, var.sqrt(), lambdas))
}

/// Sweep penalty exponents over a database of simulated signals using the
/// least-squares segmentation model.
///
/// For each (α, β) the per-signal coefficient is `d_i^α · l_i^β`, times
/// the difference-based variance estimate when `with_variance` is set.
pub fn sweep_exponents(
    db: &[SimulatedSignal],
    alpha_grid: &[f64],
    beta_grid: &[f64],
    with_variance: bool,
    k_max: usize,
) -> Result<SweepTable> {
    if db.is_empty() {
        return Err(Error::invalid("sweep needs at least one signal"));
    }
    if alpha_grid.is_empty() || beta_grid.is_empty() {
        return Err(Error::invalid("exponent grids must be nonempty"));
    }
    let prepared: Vec<PreparedSignal> = db
        .par_iter()
        .map(|entry| prepare_signal(entry, k_max))
        .collect::<Result<_>>()?;

    let grid: Vec<(f64, f64)> = alpha_grid
        .iter()
        .flat_map(|&a| beta_grid.iter().map(move |&b| (a, b)))
        .collect();
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&(alpha, beta)| {
            let curves: Vec<ErrorCurve> = prepared
                .iter()
                .map(|s| s.curve(alpha, beta, with_variance))
                .collect::<Result<_>>()?;
            let (train_min, total, sd, _) = score_curves(&curves)?;
            Ok(SweepRow {
                alpha,
                beta,
                train_error: train_min,
                test_error: total,
                sd_test: sd,
            })
        })
        .collect::<Result<_>>()?;

    let argmin = *rows
        .iter()
        .min_by(|a, b| a.test_error.total_cmp(&b.test_error))
        .expect("grid is nonempty");
    let curves: Vec<ErrorCurve> = prepared
        .iter()
        .map(|s| s.curve(argmin.alpha, argmin.beta, with_variance))
        .collect::<Result<_>>()?;
    let argmin_lambdas = curves.iter().map(best_lambda).collect();
    let argmin_curves = prepared
        .iter()
        .map(|s| s.dump(argmin.alpha, argmin.beta, with_variance))
        .collect::<Result<_>>()?;
    Ok(SweepTable {
        rows,
        argmin,
        argmin_curves,
        argmin_lambdas,
    })
}

/// Breakpoint error of the smoothed signal along a λ grid, with the
/// smoothing penalty λ₂ = λ·d^α.
///
/// Returns a sampled curve: each grid value holds on the log-scale
/// interval around its grid point, so the curve machinery (λ̂ selection,
/// train/test error) applies unchanged.
pub fn flsa_error_curve(
    signal: &Signal,
    breaks: &[usize],
    p: usize,
    alpha: f64,
    lambda_grid: &[f64],
) -> Result<ErrorCurve> {
    Ok(flsa_curve_and_counts(signal, breaks, p, alpha, lambda_grid)?.0)
}

/// As [`flsa_error_curve`], also reporting the smoothed signal's break
/// count at each grid point.
fn flsa_curve_and_counts(
    signal: &Signal,
    breaks: &[usize],
    p: usize,
    alpha: f64,
    lambda_grid: &[f64],
) -> Result<(ErrorCurve, Vec<usize>)> {
    if lambda_grid.len() < 2 {
        return Err(Error::invalid("λ grid needs at least 2 points"));
    }
    if lambda_grid
        .windows(2)
        .any(|w| !w[0].is_finite() || w[0] <= 0.0 || w[1] <= w[0])
    {
        return Err(Error::invalid("λ grid must be positive and increasing"));
    }
    let d = signal.len() as f64;
    let mut path = TvPath::new(signal.values())?;
    let mut values = Vec::with_capacity(lambda_grid.len());
    let mut counts = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let smoothed = path.solve_at(lambda * d.powf(alpha))?;
        let guesses = smoothed_breaks(&smoothed, signal.positions())?;
        counts.push(guesses.len());
        values.push(breakpoint_error(breaks, p, &guesses)?.total);
    }
    // Pieces span the geometric midpoints between grid neighbors.
    let mut pieces = Vec::with_capacity(lambda_grid.len());
    for (i, &value) in values.iter().enumerate() {
        let lo = if i == 0 {
            lambda_grid[0] * (lambda_grid[0] / lambda_grid[1]).sqrt()
        } else {
            (lambda_grid[i - 1] * lambda_grid[i]).sqrt()
        };
        let hi = if i + 1 == lambda_grid.len() {
            lambda_grid[i] * (lambda_grid[i] / lambda_grid[i - 1]).sqrt()
        } else {
            (lambda_grid[i] * lambda_grid[i + 1]).sqrt()
        };
        pieces.push(CurvePiece {
            lambda_lo: lo,
            lambda_hi: hi,
            value,
        });
    }
    Ok((ErrorCurve::new(pieces), counts))
}

/// Sweep the smoothing-penalty exponent α for the fused-lasso model over a
/// database of simulated signals.
pub fn sweep_flsa(
    db: &[SimulatedSignal],
    alpha_grid: &[f64],
    lambda_grid: &[f64],
) -> Result<SweepTable> {
    if db.is_empty() {
        return Err(Error::invalid("sweep needs at least one signal"));
    }
    if alpha_grid.is_empty() {
        return Err(Error::invalid("exponent grid must be nonempty"));
    }
    let rows_with_curves: Vec<(SweepRow, Vec<ErrorCurve>)> = alpha_grid
        .par_iter()
        .map(|&alpha| {
            let curves: Vec<ErrorCurve> = db
                .iter()
                .map(|entry| {
                    flsa_error_curve(
                        &entry.signal,
                        &entry.model.breakpoints(),
                        entry.model.position_count(),
                        alpha,
                        lambda_grid,
                    )
                })
                .collect::<Result<_>>()?;
            let (train_min, total, sd, _) = score_curves(&curves)?;
            Ok((
                SweepRow {
                    alpha,
                    beta: 0.0,
                    train_error: train_min,
                    test_error: total,
                    sd_test: sd,
                },
                curves,
            ))
        })
        .collect::<Result<_>>()?;

    let (argmin, best_curves) = rows_with_curves
        .iter()
        .min_by(|a, b| a.0.test_error.total_cmp(&b.0.test_error))
        .cloned()
        .expect("grid is nonempty");
    let argmin_lambdas = best_curves.iter().map(best_lambda).collect();
    let argmin_curves = db
        .iter()
        .zip(&best_curves)
        .map(|(entry, curve)| {
            let (_, counts) = flsa_curve_and_counts(
                &entry.signal,
                &entry.model.breakpoints(),
                entry.model.position_count(),
                argmin.alpha,
                lambda_grid,
            )?;
            Ok(curve
                .pieces()
                .iter()
                .zip(counts)
                .map(|(piece, count)| CurveDump {
                    lambda_lo: piece.lambda_lo,
                    lambda_hi: piece.lambda_hi,
                    k: count + 1,
                    error: piece.value,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(SweepTable {
        rows: rows_with_curves.into_iter().map(|(row, _)| row).collect(),
        argmin,
        argmin_curves,
        argmin_lambdas,
    })
}

/// The built-in experiment databases and grids.
pub mod experiments {
    use super::*;

    /// Log-spaced integer grid from `lo` to `hi` inclusive.
    pub fn log_spaced(lo: usize, hi: usize, count: usize) -> Vec<usize> {
        assert!(count >= 2 && hi > lo);
        let (lo_f, hi_f) = (lo as f64, hi as f64);
        (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                (lo_f * (hi_f / lo_f).powf(t)).round() as usize
            })
            .collect()
    }

    /// Arithmetic grid `lo, lo+step, ..., hi` (inclusive within rounding).
    pub fn arange(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        assert!(step > 0.0);
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    /// The master simulation truth: unit-variance noise around a
    /// piecewise-constant signal with unit jumps and a new segment every
    /// `spacing` positions.
    pub fn master_model(p: usize, spacing: usize) -> TrueModel {
        let means = [-1.0, 0.0, 1.0, 0.0];
        TrueModel::evenly_spaced(p, spacing, &means, &[1.0]).expect("valid master model")
    }

    /// Variable sampling density: one truth over 7000 positions with a
    /// break every 1000, sampled at 8 log-spaced densities from 70 to 7000.
    pub fn density_db(seed: u64) -> Vec<SimulatedSignal> {
        let model = master_model(7000, 1000);
        log_spaced(70, 7000, 8)
            .into_iter()
            .enumerate()
            .map(|(i, d)| SimulatedSignal {
                signal: model
                    .sample(d, seed.wrapping_add(i as u64), SampleScheme::UniformSpaced)
                    .expect("valid sample"),
                model: model.clone(),
            })
            .collect()
    }

    /// Variable signal length: crops of the master truth from 700 to 7000
    /// positions, all sampled with 600 points.
    pub fn length_db(seed: u64) -> Vec<SimulatedSignal> {
        let master = master_model(7000, 250);
        log_spaced(700, 7000, 8)
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                let model = master.crop(l).expect("valid crop");
                SimulatedSignal {
                    signal: model
                        .sample(
                            600,
                            seed.wrapping_add(100 + i as u64),
                            SampleScheme::UniformSpaced,
                        )
                        .expect("valid sample"),
                    model,
                }
            })
            .collect()
    }

    /// Variable sampling density for the fused-lasso sweep. Densities stop
    /// at 1400: beyond that, at this noise level, the smoothed signal's
    /// surviving micro-steps keep the error at or above the miss-everything
    /// floor for every λ₂, which leaves no minimum to align across signals.
    /// Two draws per density stabilize the pairwise test error.
    pub fn flsa_db(seed: u64) -> Vec<SimulatedSignal> {
        let model = master_model(7000, 1000);
        let mut db = Vec::with_capacity(16);
        let mut idx = 0u64;
        for d in log_spaced(70, 1400, 8) {
            for _ in 0..2 {
                db.push(SimulatedSignal {
                    signal: model
                        .sample(d, seed.wrapping_add(300 + idx), SampleScheme::UniformSpaced)
                        .expect("valid sample"),
                    model: model.clone(),
                });
                idx += 1;
            }
        }
        db
    }

    /// Factorial density × length grid for the composite penalty.
    pub fn composite_db(seed: u64) -> Vec<SimulatedSignal> {
        let master = master_model(4000, 250);
        let densities = [150usize, 300, 600];
        let lengths = [1000usize, 2000, 4000];
        let mut db = Vec::with_capacity(densities.len() * lengths.len());
        let mut idx = 0u64;
        for &l in &lengths {
            let model = master.crop(l).expect("valid crop");
            for &d in &densities {
                db.push(SimulatedSignal {
                    signal: model
                        .sample(d, seed.wrapping_add(200 + idx), SampleScheme::UniformSpaced)
                        .expect("valid sample"),
                    model: model.clone(),
                });
                idx += 1;
            }
        }
        db
    }

    pub fn density_alpha_grid() -> Vec<f64> {
        arange(-0.5, 1.5, 0.1)
    }

    pub fn length_beta_grid() -> Vec<f64> {
        arange(-1.5, 0.5, 0.1)
    }

    pub fn composite_grid() -> Vec<f64> {
        arange(-1.0, 1.0, 0.25)
    }

    pub fn flsa_alpha_grid() -> Vec<f64> {
        arange(0.0, 2.0, 0.1)
    }

    /// λ grid for the fused-lasso sweep, wide enough that λ₂ = λ·d^α spans
    /// under- to over-smoothing for every density and exponent in range,
    /// and fine enough (8 points per decade) to resolve the narrow error
    /// minima near each signal's fusion threshold.
    pub fn flsa_lambda_grid() -> Vec<f64> {
        (0..=72)
            .map(|i| 10f64.powf(-6.0 + 0.125 * i as f64))
            .collect()
    }

    pub const DENSITY_K_MAX: usize = 15;
    pub const LENGTH_K_MAX: usize = 40;
    pub const COMPOSITE_K_MAX: usize = 25;

    /// Variable density sweep; the test-error argmin recovers a square-root
    /// density term.
    pub fn run_density(seed: u64) -> Result<SweepTable> {
        sweep_exponents(
            &density_db(seed),
            &density_alpha_grid(),
            &[0.0],
            false,
            DENSITY_K_MAX,
        )
    }

    /// Variable length sweep; the argmin recovers an inverse square-root
    /// length term.
    pub fn run_length(seed: u64) -> Result<SweepTable> {
        sweep_exponents(
            &length_db(seed),
            &[0.0],
            &length_beta_grid(),
            false,
            LENGTH_K_MAX,
        )
    }

    /// Joint (α, β) sweep over the factorial database.
    pub fn run_composite(seed: u64) -> Result<SweepTable> {
        let grid = composite_grid();
        sweep_exponents(&composite_db(seed), &grid, &grid, false, COMPOSITE_K_MAX)
    }

    /// Fused-lasso smoothing-penalty sweep over its density database.
    pub fn run_flsa(seed: u64) -> Result<SweepTable> {
        sweep_flsa(&flsa_db(seed), &flsa_alpha_grid(), &flsa_lambda_grid())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_db(seed: u64) -> Vec<SimulatedSignal> {
        let model = experiments::master_model(400, 100);
        [40usize, 100, 200]
            .iter()
            .enumerate()
            .map(|(i, &d)| SimulatedSignal {
                signal: model
                    .sample(d, seed + i as u64, SampleScheme::UniformSpaced)
                    .unwrap(),
                model: model.clone(),
            })
            .collect()
    }

    #[test]
    fn sweep_is_deterministic() {
        let grid = [-0.5, 0.0, 0.5, 1.0];
        let a = sweep_exponents(&tiny_db(9), &grid, &[0.0], false, 8).unwrap();
        let b = sweep_exponents(&tiny_db(9), &grid, &[0.0], false, 8).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.argmin, b.argmin);
        assert_eq!(a.rows.len(), 4);
    }

    #[test]
    fn rescaling_leaves_model_sequence_intact() {
        let db = tiny_db(3);
        let prepared = prepare_signal(&db[0], 8).unwrap();
        let base: Vec<usize> = prepared.base_path.segments().iter().map(|s| s.k).collect();
        for c in [0.01, 1.0, 250.0] {
            let scaled = prepared.base_path.with_coefficient(c).unwrap();
            let ks: Vec<usize> = scaled.segments().iter().map(|s| s.k).collect();
            assert_eq!(ks, base);
        }
    }

    #[test]
    fn variance_flag_changes_coefficients_not_structure() {
        let grid = [0.0, 0.5];
        let plain = sweep_exponents(&tiny_db(5), &grid, &[0.0], false, 8).unwrap();
        let with_var = sweep_exponents(&tiny_db(5), &grid, &[0.0], true, 8).unwrap();
        assert_eq!(plain.rows.len(), with_var.rows.len());
    }

    #[test]
    fn empty_db_rejected() {
        assert!(sweep_exponents(&[], &[0.0], &[0.0], false, 5).is_err());
        assert!(sweep_flsa(&[], &[0.0], &[0.1, 1.0]).is_err());
    }

    #[test]
    fn flsa_curve_limits() {
        let model = experiments::master_model(500, 100);
        let signal = model.sample(250, 21, SampleScheme::UniformSpaced).unwrap();
        let grid: Vec<f64> = (0..25)
            .map(|i| 10f64.powf(-4.0 + 0.35 * i as f64))
            .collect();
        let curve = flsa_error_curve(
            &signal,
            &model.breakpoints(),
            model.position_count(),
            0.0,
            &grid,
        )
        .unwrap();
        // Over-smoothing misses every break.
        let right = curve.pieces().last().unwrap().value;
        assert_eq!(right, model.breakpoints().len() as f64);
        // Under-smoothing keeps noise changes: large false-positive cost.
        let left = curve.pieces().first().unwrap().value;
        assert!(left > right, "left {left} right {right}");
        // Somewhere in between beats both ends.
        assert!(curve.min_value() < right);
    }

    #[test]
    fn flsa_grid_validation() {
        let model = experiments::master_model(100, 25);
        let signal = model.sample(50, 1, SampleScheme::UniformSpaced).unwrap();
        let breaks = model.breakpoints();
        assert!(flsa_error_curve(&signal, &breaks, 100, 0.0, &[1.0]).is_err());
        assert!(flsa_error_curve(&signal, &breaks, 100, 0.0, &[1.0, 0.5]).is_err());
        assert!(flsa_error_curve(&signal, &breaks, 100, 0.0, &[0.0, 1.0]).is_err());
    }
}
