//! Penalized model selection over segmentation fits.
//!
//! The criterion `argmin_k λ·k·c + SSE_k` is piecewise constant in λ, and
//! only model sizes on the lower convex hull of `(k, SSE_k)` are ever
//! selected. [`selection_path`] enumerates the exact λ intervals;
//! composing with a per-k breakpoint error gives a piecewise-constant
//! [`ErrorCurve`] that can be summed, minimized, and evaluated without any
//! λ grid.

use serde::Serialize;

use crate::breakpoint::breakpoint_error;
use crate::error::{Error, Result};
use crate::segment::{model_breaks, SegmentationFit};

/// Values with gap below this are treated as jointly minimal when picking
/// minimizing intervals.
const MIN_VALUE_TOLERANCE: f64 = 1e-12;

/// One piece of a selection path: `k` is optimal for λ in `[lo, hi)`.
///
/// The first piece starts at 0 (λ is strictly positive, so the bound is
/// never attained) and the last extends to infinity. A crossing λ belongs
/// to the piece on its right, which selects the smaller model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSegment {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub k: usize,
}

/// Exact piecewise-constant map from penalty multiplier λ to selected
/// model size, for one penalty coefficient `c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionPath {
    segments: Vec<PathSegment>,
    coefficient: f64,
}

impl SelectionPath {
    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Selected model size at λ (> 0).
    pub fn select(&self, lambda: f64) -> usize {
        let idx = self
            .segments
            .partition_point(|s| s.lambda_hi <= lambda)
            .min(self.segments.len() - 1);
        self.segments[idx].k
    }

    /// The same path under a rescaled coefficient: every interval endpoint
    /// maps by `old_c / new_c`, the k sequence is unchanged.
    pub fn with_coefficient(&self, c: f64) -> Result<SelectionPath> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::invalid(format!("coefficient must be > 0; got {c}")));
        }
        let scale = self.coefficient / c;
        Ok(SelectionPath {
            segments: self
                .segments
                .iter()
                .map(|s| PathSegment {
                    lambda_lo: s.lambda_lo * scale,
                    lambda_hi: if s.lambda_hi.is_finite() {
                        s.lambda_hi * scale
                    } else {
                        f64::INFINITY
                    },
                    k: s.k,
                })
                .collect(),
            coefficient: c,
        })
    }
}

/// Exact λ path of `argmin_k λ·k·c + sse[k-1]` from the lower convex hull
/// of `(k, SSE_k)`. Requires nonincreasing SSE and `c > 0`; crossing ties
/// go to the smaller k.
pub fn selection_path(sse: &[f64], c: f64) -> Result<SelectionPath> {
    if sse.is_empty() {
        return Err(Error::invalid("need at least one SSE value"));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::invalid(format!("coefficient must be > 0; got {c}")));
    }
    if sse.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("SSE values must be finite"));
    }
    // Tolerate rounding-level wobble from the DP, nothing more.
    for (i, w) in sse.windows(2).enumerate() {
        if w[1] > w[0] + 1e-9 * w[0].abs().max(1.0) {
            return Err(Error::invalid(format!(
                "SSE must be nonincreasing; sse[{}]={} < sse[{}]={}",
                i + 1,
                w[1],
                i + 2,
                w[0]
            )));
        }
    }

    // Lower convex hull over (k, SSE_k); edges keep strictly increasing
    // slopes so crossings are strictly decreasing in k.
    let mut hull: Vec<usize> = Vec::new(); // 0-based indices into sse
    for i in 0..sse.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let slope_ab = (sse[b] - sse[a]) / (b - a) as f64;
            let slope_bi = (sse[i] - sse[b]) / (i - b) as f64;
            if slope_bi <= slope_ab {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }

    // Crossing between hull neighbors k1 < k2 at (SSE_k1 - SSE_k2)/(c(k2-k1));
    // zero-width intervals (equal SSE) drop the larger model.
    let mut segments = Vec::with_capacity(hull.len());
    let mut lo = 0.0f64;
    for pair in hull.windows(2).rev() {
        let (small, large) = (pair[0], pair[1]);
        let crossing = (sse[small] - sse[large]) / (c * (large - small) as f64);
        if crossing > lo {
            segments.push(PathSegment {
                lambda_lo: lo,
                lambda_hi: crossing,
                k: large + 1,
            });
            lo = crossing;
        }
    }
    segments.push(PathSegment {
        lambda_lo: lo,
        lambda_hi: f64::INFINITY,
        k: hull[0] + 1,
    });
    Ok(SelectionPath {
        segments,
        coefficient: c,
    })
}

/// One piece of a piecewise-constant error curve over λ, `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePiece {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub value: f64,
}

/// A piecewise-constant map from λ to a model-selection error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorCurve {
    pieces: Vec<CurvePiece>,
}

impl ErrorCurve {
    pub(crate) fn new(pieces: Vec<CurvePiece>) -> Self {
        debug_assert!(!pieces.is_empty());
        ErrorCurve { pieces }
    }

    pub fn pieces(&self) -> &[CurvePiece] {
        &self.pieces
    }

    /// Value at λ; out-of-range λ clamps to the nearest piece (relevant
    /// only for grid-sampled curves, whose domain is bounded).
    pub fn eval(&self, lambda: f64) -> f64 {
        let idx = self
            .pieces
            .partition_point(|p| p.lambda_hi <= lambda)
            .min(self.pieces.len() - 1);
        self.pieces[idx].value
    }

    pub fn min_value(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Compose a selection path with a per-model-size error. `value_of(k)`
/// is invoked once per path segment.
pub fn compose_error_curve(
    path: &SelectionPath,
    mut value_of: impl FnMut(usize) -> Result<f64>,
) -> Result<ErrorCurve> {
    let mut pieces = Vec::with_capacity(path.segments().len());
    for seg in path.segments() {
        pieces.push(CurvePiece {
            lambda_lo: seg.lambda_lo,
            lambda_hi: seg.lambda_hi,
            value: value_of(seg.k)?,
        });
    }
    Ok(ErrorCurve::new(pieces))
}

/// Penalized-model breakpoint error curve of one signal: the λ path over
/// the fit's SSEs composed with the exact breakpoint error of each
/// selected model's extracted breaks.
pub fn error_curve(
    fit: &SegmentationFit,
    positions: &[usize],
    breaks: &[usize],
    p: usize,
    c: f64,
) -> Result<ErrorCurve> {
    let path = selection_path(&fit.sse_curve(), c)?;
    compose_error_curve(&path, |k| {
        let guesses = model_breaks(fit, k, positions)?;
        Ok(breakpoint_error(breaks, p, &guesses)?.total)
    })
}

/// A λ attaining the curve's minimum: the geometric midpoint of the widest
/// (in log scale) run of minimizing pieces. Unbounded ends use one-decade
/// surrogates; a curve whose single piece spans all of (0, ∞) yields 1.
pub fn best_lambda(curve: &ErrorCurve) -> f64 {
    let min = curve.min_value();
    // Merge adjacent minimizing pieces into maximal runs.
    let mut runs: Vec<(f64, f64)> = Vec::new();
    for piece in curve.pieces() {
        if piece.value <= min + MIN_VALUE_TOLERANCE {
            match runs.last_mut() {
                Some(last) if last.1 == piece.lambda_lo => last.1 = piece.lambda_hi,
                _ => runs.push((piece.lambda_lo, piece.lambda_hi)),
            }
        }
    }
    let surrogate = |(lo, hi): (f64, f64)| -> (f64, f64) {
        match (lo > 0.0, hi.is_finite()) {
            (true, true) => (lo, hi),
            (false, true) => (hi / 10.0, hi),
            (true, false) => (lo, lo * 10.0),
            (false, false) => (0.1, 10.0),
        }
    };
    let best = runs
        .into_iter()
        .map(surrogate)
        .max_by(|a, b| {
            let width_a = a.1.ln() - a.0.ln();
            let width_b = b.1.ln() - b.0.ln();
            width_a
                .partial_cmp(&width_b)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("curve has at least one piece");
    (best.0 * best.1).sqrt()
}

/// Pointwise sum of error curves and its minimum value.
pub fn train_error(curves: &[ErrorCurve]) -> Result<(ErrorCurve, f64)> {
    if curves.is_empty() {
        return Err(Error::invalid("need at least one curve"));
    }
    let mut cuts: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.pieces().iter().map(|p| p.lambda_lo))
        .filter(|lo| *lo > 0.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(0.0);
    bounds.extend(cuts);
    bounds.push(f64::INFINITY);

    let mut pieces = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        // Every source curve is constant on [lo, hi); evaluate at an
        // interior point.
        let probe = if lo > 0.0 {
            lo
        } else if hi.is_finite() {
            hi / 2.0
        } else {
            1.0
        };
        let value = curves.iter().map(|c| c.eval(probe)).sum();
        pieces.push(CurvePiece {
            lambda_lo: lo,
            lambda_hi: hi,
            value,
        });
    }
    let curve = ErrorCurve::new(pieces);
    let min = curve.min_value();
    Ok((curve, min))
}

/// Leave-one-out style test error: the sum over all ordered pairs `i != j`
/// of curve `i` evaluated at the λ chosen for curve `j`.
pub fn test_error(curves: &[ErrorCurve], lambdas: &[f64]) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::invalid("test error needs at least two curves"));
    }
    if curves.len() != lambdas.len() {
        return Err(Error::invalid("one λ per curve required"));
    }
    let mut total = 0.0;
    for (i, curve) in curves.iter().enumerate() {
        for (j, &lambda) in lambdas.iter().enumerate() {
            if i != j {
                total += curve.eval(lambda);
            }
        }
    }
    Ok(total)
}

/// Log10 mean squared deviation of the `k`-segment fit from the true means
/// at the sampled positions. The mean square is floored at 1e-300, so a
/// perfect fit reports -300.
pub fn signal_error(
    fit: &SegmentationFit,
    k: usize,
    model: &crate::sim::TrueModel,
    positions: &[usize],
) -> Result<f64> {
    if positions.len() != fit.data_len() {
        return Err(Error::invalid("positions and fit differ in length"));
    }
    let fitted = fit.model(k)?.fitted_values(fit.data_len());
    let mut sum = 0.0;
    for (value, &pos) in fitted.iter().zip(positions) {
        let diff = value - model.mean_at(pos);
        sum += diff * diff;
    }
    Ok((sum / fit.data_len() as f64).max(1e-300).log10())
}

/// Difference-based residual variance estimate: half the mean squared
/// first difference. Unbiased for i.i.d. noise around a piecewise constant
/// signal with few breaks.
pub fn variance_estimate(y: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::invalid("variance estimate needs at least 2 values"));
    }
    let sum: f64 = y.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    Ok(sum / (2.0 * (y.len() - 1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::segment_least_squares;
    use crate::sim::{SampleScheme, TrueModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn segs(path: &SelectionPath) -> Vec<(f64, f64, usize)> {
        path.segments()
            .iter()
            .map(|s| (s.lambda_lo, s.lambda_hi, s.k))
            .collect()
    }

    #[test]
    fn two_model_path() {
        let path = selection_path(&[100.0, 0.0], 1.0).unwrap();
        assert_eq!(
            segs(&path),
            vec![(0.0, 100.0, 2), (100.0, f64::INFINITY, 1)]
        );
        // Tie at the crossing goes to the smaller model.
        assert_eq!(path.select(100.0), 1);
        assert_eq!(path.select(99.999), 2);
    }

    #[test]
    fn coefficient_scales_crossings() {
        let path = selection_path(&[100.0, 0.0], 10.0).unwrap();
        assert_eq!(segs(&path), vec![(0.0, 10.0, 2), (10.0, f64::INFINITY, 1)]);
    }

    #[test]
    fn path_limits() {
        let sse = [50.0, 20.0, 5.0, 4.0, 4.0];
        let path = selection_path(&sse, 1.0).unwrap();
        let first = path.segments().first().unwrap();
        let last = path.segments().last().unwrap();
        // λ→0 selects the largest hull model, λ→∞ a single segment.
        assert_eq!(first.k, 4); // k=5 ties k=4 in SSE, so it never wins
        assert_eq!(last.k, 1);
        assert_eq!(path.select(1e308), 1);
        // k nonincreasing along the path.
        assert!(path.segments().windows(2).all(|w| w[1].k < w[0].k));
    }

    #[test]
    fn path_rejects_bad_input() {
        assert!(selection_path(&[], 1.0).is_err());
        assert!(selection_path(&[1.0, 5.0], 1.0).is_err());
        assert!(selection_path(&[5.0, 1.0], 0.0).is_err());
        assert!(selection_path(&[5.0, 1.0], -2.0).is_err());
    }

    #[test]
    fn rescaled_coefficient_matches_direct_path() {
        let sse = [50.0, 20.0, 5.0, 1.0];
        let direct = selection_path(&sse, 4.0).unwrap();
        let scaled = selection_path(&sse, 1.0)
            .unwrap()
            .with_coefficient(4.0)
            .unwrap();
        assert_eq!(direct, scaled);
    }

    #[test]
    fn path_matches_direct_argmin_at_random_lambdas() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for _ in 0..50 {
            let k_max = rng.gen_range(1..=10);
            let mut sse: Vec<f64> = (0..k_max).map(|_| rng.gen_range(0.0..100.0)).collect();
            sse.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let c = 10f64.powf(rng.gen_range(-2.0..2.0));
            let path = selection_path(&sse, c).unwrap();
            for _ in 0..100 {
                let lambda = 10f64.powf(rng.gen_range(-4.0..4.0));
                let direct = (1..=k_max)
                    .min_by(|&a, &b| {
                        let ca = lambda * a as f64 * c + sse[a - 1];
                        let cb = lambda * b as f64 * c + sse[b - 1];
                        ca.partial_cmp(&cb).unwrap()
                    })
                    .unwrap();
                let by_path = path.select(lambda);
                let cost = |k: usize| lambda * k as f64 * c + sse[k - 1];
                assert!(
                    (cost(by_path) - cost(direct)).abs() <= 1e-9 * cost(direct).max(1.0),
                    "path k={by_path} direct k={direct} at lambda={lambda}"
                );
            }
        }
    }

    #[test]
    fn composed_curve_follows_path() {
        let path = selection_path(&[100.0, 0.0], 1.0).unwrap();
        let berr = [2.0, 0.0];
        let curve = compose_error_curve(&path, |k| Ok(berr[k - 1])).unwrap();
        assert_eq!(curve.eval(1.0), 0.0);
        assert_eq!(curve.eval(100.0), 2.0);
        assert_eq!(curve.eval(1e12), 2.0);
    }

    #[test]
    fn error_curve_hits_zero_on_noiseless_signal() {
        let model = TrueModel::evenly_spaced(40, 10, &[0.0, 5.0], &[1.0]).unwrap();
        let noiseless: Vec<f64> = (1..=40).map(|p| model.mean_at(p)).collect();
        let positions: Vec<usize> = (1..=40).collect();
        let fit = segment_least_squares(&noiseless, 6).unwrap();
        let curve = error_curve(&fit, &positions, &model.breakpoints(), 40, 1.0).unwrap();
        assert_eq!(curve.min_value(), 0.0);
        // Constant k_max=1 fit: curve is flat at the all-false-negative error.
        let flat = error_curve(
            &segment_least_squares(&noiseless, 1).unwrap(),
            &positions,
            &model.breakpoints(),
            40,
            1.0,
        )
        .unwrap();
        assert_eq!(flat.pieces().len(), 1);
        assert_eq!(flat.eval(1.0), model.breakpoints().len() as f64);
    }

    #[test]
    fn best_lambda_conventions() {
        // Minimum on (0, 100): surrogate lo = 10, midpoint sqrt(1000).
        let curve = ErrorCurve::new(vec![
            CurvePiece {
                lambda_lo: 0.0,
                lambda_hi: 100.0,
                value: 0.0,
            },
            CurvePiece {
                lambda_lo: 100.0,
                lambda_hi: f64::INFINITY,
                value: 2.0,
            },
        ]);
        assert!((best_lambda(&curve) - 1000f64.sqrt()).abs() < 1e-9);

        // Constant curve: the whole domain minimizes; convention gives 1.
        let constant = ErrorCurve::new(vec![CurvePiece {
            lambda_lo: 0.0,
            lambda_hi: f64::INFINITY,
            value: 3.0,
        }]);
        assert_eq!(best_lambda(&constant), 1.0);

        // Two minimizing intervals: pick the wider (in decades).
        let two = ErrorCurve::new(vec![
            CurvePiece {
                lambda_lo: 0.0,
                lambda_hi: 1.0,
                value: 5.0,
            },
            CurvePiece {
                lambda_lo: 1.0,
                lambda_hi: 10.0,
                value: 0.0,
            },
            CurvePiece {
                lambda_lo: 10.0,
                lambda_hi: 100.0,
                value: 5.0,
            },
            CurvePiece {
                lambda_lo: 100.0,
                lambda_hi: 100_000.0,
                value: 0.0,
            },
        ]);
        assert!((best_lambda(&two) - (100.0 * 100_000.0f64).sqrt()).abs() < 1e-6);

        // Adjacent minimizing pieces merge into one run.
        let merged = ErrorCurve::new(vec![
            CurvePiece {
                lambda_lo: 0.0,
                lambda_hi: 1.0,
                value: 5.0,
            },
            CurvePiece {
                lambda_lo: 1.0,
                lambda_hi: 10.0,
                value: 0.0,
            },
            CurvePiece {
                lambda_lo: 10.0,
                lambda_hi: 1000.0,
                value: 0.0,
            },
            CurvePiece {
                lambda_lo: 1000.0,
                lambda_hi: f64::INFINITY,
                value: 5.0,
            },
        ]);
        assert!((best_lambda(&merged) - (1.0 * 1000.0f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn train_error_sums_pointwise() {
        let a = ErrorCurve::new(vec![
            CurvePiece {
                lambda_lo: 0.0,
                lambda_hi: 10.0,
                value: 0.0,
            },
            CurvePiece {
                lambda_lo: 10.0,
                lambda_hi: f64::INFINITY,
                value: 2.0,
            },
        ]);
        let b = ErrorCurve::new(vec![
            CurvePiece {
                lambda_lo: 0.0,
                lambda_hi: 20.0,
                value: 1.0,
            },
            CurvePiece {
                lambda_lo: 20.0,
                lambda_hi: f64::INFINITY,
                value: 0.0,
            },
        ]);
        let (sum, min) = train_error(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(sum.eval(5.0), 1.0);
        assert_eq!(sum.eval(15.0), 3.0);
        assert_eq!(sum.eval(25.0), 2.0);
        assert_eq!(min, 1.0);

        // A single curve sums to itself.
        let (solo, solo_min) = train_error(std::slice::from_ref(&a)).unwrap();
        assert_eq!(solo.eval(3.0), a.eval(3.0));
        assert_eq!(solo_min, 0.0);

        // Curves with disjoint zero intervals can never reach zero jointly.
        assert!(min > 0.0);

        // Identical zero-minimum curves reach zero.
        let (_, zmin) = train_error(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(zmin, 0.0);
    }

    #[test]
    fn test_error_over_pairs() {
        let a = ErrorCurve::new(vec![
            CurvePiece {
                lambda_lo: 0.0,
                lambda_hi: 10.0,
                value: 0.0,
            },
            CurvePiece {
                lambda_lo: 10.0,
                lambda_hi: f64::INFINITY,
                value: 2.0,
            },
        ]);
        let b = ErrorCurve::new(vec![
            CurvePiece {
                lambda_lo: 0.0,
                lambda_hi: 5.0,
                value: 3.0,
            },
            CurvePiece {
                lambda_lo: 5.0,
                lambda_hi: f64::INFINITY,
                value: 0.0,
            },
        ]);
        // z = 2: E_1(λ̂_2) + E_2(λ̂_1).
        let total = test_error(&[a.clone(), b.clone()], &[2.0, 20.0]).unwrap();
        assert_eq!(total, a.eval(20.0) + b.eval(2.0));
        assert_eq!(total, 5.0);

        // Identical curves evaluated at their own λ̂ reproduce (z-1)·Σ E_i(λ̂_i).
        let same = test_error(&[a.clone(), a.clone(), a.clone()], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(same, 2.0 * 3.0 * a.eval(1.0));

        // Curves sharing a zero interval with λ̂ inside it give zero.
        let shared = test_error(&[a.clone(), a.clone()], &[5.0, 5.0]).unwrap();
        assert_eq!(shared, 0.0);

        assert!(test_error(std::slice::from_ref(&a), &[1.0]).is_err());
    }

    #[test]
    fn signal_error_examples() {
        let model = TrueModel::evenly_spaced(10, 5, &[0.0, 1.0], &[1.0]).unwrap();
        let truth: Vec<f64> = (1..=10).map(|p| model.mean_at(p)).collect();
        let positions: Vec<usize> = (1..=10).collect();
        let fit = segment_least_squares(&truth, 3).unwrap();
        // Perfect fit reports the floor.
        assert_eq!(signal_error(&fit, 2, &model, &positions).unwrap(), -300.0);
        // Constant offset of 1 gives log10(1) = 0.
        let offset: Vec<f64> = truth.iter().map(|v| v + 1.0).collect();
        let fit_offset = segment_least_squares(&offset, 2).unwrap();
        assert_eq!(
            signal_error(&fit_offset, 2, &model, &positions).unwrap(),
            0.0
        );
        // Wrong model size on noiseless data is strictly worse.
        assert!(signal_error(&fit, 1, &model, &positions).unwrap() > -300.0);
    }

    #[test]
    fn variance_estimate_examples() {
        assert_eq!(variance_estimate(&[3.0; 10]).unwrap(), 0.0);
        let alternating: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        assert_eq!(variance_estimate(&alternating).unwrap(), 2.0);
        assert!(variance_estimate(&[1.0]).is_err());

        let model = TrueModel::evenly_spaced(10_000, 10_000, &[0.0], &[1.0]).unwrap();
        let signal = model
            .sample(10_000, 424, SampleScheme::UniformSpaced)
            .unwrap();
        let est = variance_estimate(signal.values()).unwrap();
        assert!((est - 1.0).abs() < 0.05, "estimate {est}");
    }
}
