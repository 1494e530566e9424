//! Piecewise-constant truth models and noisy signal sampling.
//!
//! A [`TrueModel`] assigns a normal distribution to every position in
//! `1..=P`; a [`Signal`] is a noisy sample of it at a subset of positions.
//! All randomness is driven by ChaCha8 keyed with an explicit `u64` seed,
//! so every sample is reproducible bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One constant-distribution stretch of a [`TrueModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Last position covered by this segment (inclusive, in `1..=P`).
    pub end: usize,
    pub mean: f64,
    pub sd: f64,
}

/// Piecewise-constant distribution over positions `1..=P`.
///
/// Adjacent segments must differ in mean or standard deviation, so the
/// segment boundaries are exactly the true breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    #[serde(rename = "P")]
    p: usize,
    segments: Vec<Segment>,
}

/// How sample positions are chosen within `1..=P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleScheme {
    /// `round(j * P / d)` for `j = 1..=d`, collisions shifted right.
    UniformSpaced,
    /// `d` distinct positions drawn uniformly without replacement.
    UniformRandom,
}

impl TrueModel {
    /// Build a model from explicit segments, validating the invariants:
    /// strictly increasing ends, final end equal to `p`, finite parameters,
    /// `sd >= 0`, and adjacent segments distinct in mean or sd.
    pub fn from_segments(p: usize, segments: Vec<Segment>) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid(format!("P must be >= 2; got {p}")));
        }
        if segments.is_empty() {
            return Err(Error::invalid("model needs at least one segment"));
        }
        let mut prev_end = 0usize;
        for (i, seg) in segments.iter().enumerate() {
            if seg.end <= prev_end {
                return Err(Error::invalid(format!(
                    "segment ends must be strictly increasing; segment {i} ends at {}",
                    seg.end
                )));
            }
            if !seg.mean.is_finite() || !seg.sd.is_finite() || seg.sd < 0.0 {
                return Err(Error::invalid(format!(
                    "segment {i} has invalid parameters (mean={}, sd={})",
                    seg.mean, seg.sd
                )));
            }
            prev_end = seg.end;
        }
        if prev_end != p {
            return Err(Error::invalid(format!(
                "last segment must end at P={p}; got {prev_end}"
            )));
        }
        for w in segments.windows(2) {
            if w[0].mean == w[1].mean && w[0].sd == w[1].sd {
                return Err(Error::invalid(
                    "adjacent segments must differ in mean or sd",
                ));
            }
        }
        Ok(TrueModel { p, segments })
    }

    /// Build a model with a new segment starting every `spacing` positions,
    /// means and sds taken cyclically from the supplied lists.
    ///
    /// The break set is `{spacing, 2*spacing, ...} ∩ {1..P-1}`; the last
    /// segment may be shorter than `spacing`.
    pub fn evenly_spaced(p: usize, spacing: usize, means: &[f64], sds: &[f64]) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid(format!("P must be >= 2; got {p}")));
        }
        if spacing < 1 {
            return Err(Error::invalid("spacing must be >= 1"));
        }
        if means.is_empty() || sds.is_empty() {
            return Err(Error::invalid("means and sds must be nonempty"));
        }
        if let Some(sd) = sds.iter().find(|sd| !sd.is_finite() || **sd <= 0.0) {
            return Err(Error::invalid(format!("sd must be > 0; got {sd}")));
        }
        let mut segments = Vec::new();
        let mut end = spacing.min(p);
        let mut i = 0usize;
        loop {
            segments.push(Segment {
                end: end.min(p),
                mean: means[i % means.len()],
                sd: sds[i % sds.len()],
            });
            if end >= p {
                break;
            }
            i += 1;
            end += spacing;
        }
        Self::from_segments(p, segments).map_err(|e| match e {
            Error::InvalidInput(msg) if msg.contains("adjacent segments") => {
                Error::invalid("mean/sd cycles repeat the same distribution on adjacent segments")
            }
            other => other,
        })
    }

    pub fn position_count(&self) -> usize {
        self.p
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// The true break set: every segment end except the last.
    pub fn breakpoints(&self) -> Vec<usize> {
        self.segments[..self.segments.len() - 1]
            .iter()
            .map(|s| s.end)
            .collect()
    }

    /// Segment containing position `pos` (1-based).
    pub fn segment_at(&self, pos: usize) -> &Segment {
        debug_assert!(pos >= 1 && pos <= self.p);
        let idx = self.segments.partition_point(|s| s.end < pos);
        &self.segments[idx]
    }

    /// True mean at position `pos`.
    pub fn mean_at(&self, pos: usize) -> f64 {
        self.segment_at(pos).mean
    }

    /// Restrict the model to positions `1..=length`.
    pub fn crop(&self, length: usize) -> Result<Self> {
        if length < 2 || length > self.p {
            return Err(Error::invalid(format!(
                "crop length must be in 2..=P; got {length}"
            )));
        }
        let mut segments: Vec<Segment> = self
            .segments
            .iter()
            .copied()
            .filter(|s| s.end < length)
            .collect();
        let last = *self.segment_at(length);
        segments.push(Segment {
            end: length,
            ..last
        });
        Self::from_segments(length, segments)
    }

    /// Draw `d` noisy observations, deterministic for a fixed seed.
    pub fn sample(&self, d: usize, seed: u64, scheme: SampleScheme) -> Result<Signal> {
        if d < 1 || d > self.p {
            return Err(Error::invalid(format!(
                "sample count must be in 1..=P={}; got {d}",
                self.p
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = match scheme {
            SampleScheme::UniformSpaced => spaced_positions(self.p, d),
            SampleScheme::UniformRandom => random_positions(self.p, d, &mut rng),
        };
        let mut values = Vec::with_capacity(d);
        for &pos in &positions {
            let seg = self.segment_at(pos);
            if seg.sd == 0.0 {
                values.push(seg.mean);
            } else {
                let normal = Normal::new(seg.mean, seg.sd)
                    .map_err(|e| Error::invalid(format!("bad normal parameters: {e}")))?;
                values.push(normal.sample(&mut rng));
            }
        }
        Ok(Signal {
            positions,
            values,
            length: self.p,
            seed: Some(seed),
        })
    }
}

/// `round(j * P / d)` in exact integer arithmetic; a final pass shifts any
/// collision right. Increments of `P/d >= 1` make the rounded sequence
/// strictly increasing already.
fn spaced_positions(p: usize, d: usize) -> Vec<usize> {
    let mut positions: Vec<usize> = (1..=d)
        .map(|j| ((2 * j * p + d) / (2 * d)).clamp(1, p))
        .collect();
    for i in 1..positions.len() {
        if positions[i] <= positions[i - 1] {
            positions[i] = positions[i - 1] + 1;
        }
    }
    debug_assert!(positions.last().is_none_or(|&last| last <= p));
    positions
}

/// Floyd's algorithm for a uniform `d`-subset of `1..=P`, then sorted.
fn random_positions(p: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::Rng;
    use std::collections::HashSet;
    let mut chosen = HashSet::with_capacity(d);
    for j in (p - d + 1)..=p {
        let t = rng.gen_range(1..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    let mut positions: Vec<usize> = chosen.into_iter().collect();
    positions.sort_unstable();
    positions
}

/// An ordered noisy sample of a [`TrueModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    positions: Vec<usize>,
    values: Vec<f64>,
    /// Extent of the sampled position range (the model's `P`).
    length: usize,
    /// RNG seed used to draw the sample, when known.
    seed: Option<u64>,
}

impl Signal {
    /// Assemble a signal from parallel position/value vectors.
    pub fn new(positions: Vec<usize>, values: Vec<f64>, length: usize) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("signal must contain at least one sample"));
        }
        if positions.len() != values.len() {
            return Err(Error::invalid(format!(
                "positions ({}) and values ({}) differ in length",
                positions.len(),
                values.len()
            )));
        }
        if positions[0] < 1 || *positions.last().unwrap() > length {
            return Err(Error::invalid(format!(
                "positions must lie in 1..={length}"
            )));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("positions must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values must be finite"));
        }
        Ok(Signal {
            positions,
            values,
            length,
            seed: None,
        })
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of samples (the sampling density `d`).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Extent of the underlying position range.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}
