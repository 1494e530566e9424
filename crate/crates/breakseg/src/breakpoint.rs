//! The exact breakpoint detection error.
//!
//! A guess set is scored against the true break set by partitioning the
//! candidate positions `{1..P-1}` into one region per true breakpoint
//! (midpoints between consecutive breaks as boundaries) and charging each
//! region a false-negative, false-positive, and imprecision term. The merged
//! implementation runs in `O(n + m)` over sorted inputs; a brute-force
//! variant exists purely as an oracle for it.

use serde::Serialize;

use crate::error::{Error, Result};

/// A sorted set of distinct guessed breakpoint positions in `1..P`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GuessSet {
    positions: Vec<usize>,
}

impl GuessSet {
    /// Sorts the input and rejects duplicates.
    pub fn new(mut positions: Vec<usize>) -> Result<Self> {
        positions.sort_unstable();
        if positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("guess set contains duplicate positions"));
        }
        Ok(GuessSet { positions })
    }

    /// Sorts the input and silently drops duplicates, reporting how many
    /// were removed. Intended for forgiving boundaries such as the CLI.
    pub fn new_dedup(mut positions: Vec<usize>) -> (Self, usize) {
        positions.sort_unstable();
        let before = positions.len();
        positions.dedup();
        let dropped = before - positions.len();
        (GuessSet { positions }, dropped)
    }

    pub fn empty() -> Self {
        GuessSet::default()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

impl From<GuessSet> for Vec<usize> {
    fn from(set: GuessSet) -> Self {
        set.positions
    }
}

/// The region of candidate positions whose closest true breakpoint is
/// `breakpoint`; bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub lower: usize,
    pub breakpoint: usize,
    pub upper: usize,
}

impl Region {
    /// Piecewise-affine distance of a guess from the region's breakpoint,
    /// in `[0, 1]`: zero at the breakpoint, rising linearly to 1 at the
    /// region bounds, and 1 everywhere outside the open interior.
    ///
    /// Degenerate regions where the breakpoint sits on a bound simply have
    /// no interior on that side.
    pub fn imprecision(&self, guess: usize) -> f64 {
        let b = self.breakpoint;
        if guess == b {
            0.0
        } else if guess > self.lower && guess < b {
            (b - guess) as f64 / (b - self.lower) as f64
        } else if guess > b && guess < self.upper {
            (guess - b) as f64 / (self.upper - b) as f64
        } else {
            1.0
        }
    }

    pub fn contains(&self, pos: usize) -> bool {
        pos >= self.lower && pos <= self.upper
    }
}

/// Ordered breakpoint regions partitioning `{1..P-1}`.
///
/// Empty exactly when the break set is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPartition {
    regions: Vec<Region>,
}

impl RegionPartition {
    /// Build the partition for a sorted break set over positions `1..=P`.
    ///
    /// Region `i` runs up to the floor midpoint between breaks `i` and
    /// `i+1`; the first region starts at 1 and the last ends at `P-1`.
    pub fn from_breakpoints(breaks: &[usize], p: usize) -> Result<Self> {
        validate_breaks(breaks, p)?;
        let n = breaks.len();
        let mut regions = Vec::with_capacity(n);
        let mut lower = 1usize;
        for i in 0..n {
            let upper = if i + 1 == n {
                p - 1
            } else {
                (breaks[i] + breaks[i + 1]) / 2
            };
            regions.push(Region {
                lower,
                breakpoint: breaks[i],
                upper,
            });
            lower = upper + 1;
        }
        Ok(RegionPartition { regions })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

/// Decomposition of the breakpoint error into its three terms.
///
/// `total` is always `false_positives + false_negatives + imprecision`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBreakdown {
    #[serde(rename = "fp")]
    pub false_positives: u64,
    #[serde(rename = "fn")]
    pub false_negatives: u64,
    pub imprecision: f64,
    pub total: f64,
}

impl ErrorBreakdown {
    fn new(false_positives: u64, false_negatives: u64, imprecision: f64) -> Self {
        ErrorBreakdown {
            false_positives,
            false_negatives,
            imprecision,
            total: false_positives as f64 + false_negatives as f64 + imprecision,
        }
    }
}

fn validate_breaks(breaks: &[usize], p: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::invalid(format!("P must be >= 2; got {p}")));
    }
    for w in breaks.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::invalid("breakpoints must be strictly sorted"));
        }
    }
    if breaks.iter().any(|&b| b < 1 || b > p - 1) {
        return Err(Error::invalid(format!(
            "breakpoints must lie in 1..={}",
            p - 1
        )));
    }
    Ok(())
}

fn validate_guesses(guesses: &GuessSet, p: usize) -> Result<()> {
    if guesses.positions().iter().any(|&g| g < 1 || g > p - 1) {
        return Err(Error::invalid(format!("guesses must lie in 1..={}", p - 1)));
    }
    Ok(())
}

/// Exact breakpoint error of `guesses` against the true `breaks`, computed
/// with one merge pass over the sorted regions and guesses.
///
/// Per region: a false negative if no guess falls inside, `count - 1` false
/// positives otherwise, and the imprecision of the best guess. Guesses
/// outside every region (possible only when `breaks` is empty) each count
/// as a false positive.
pub fn breakpoint_error(breaks: &[usize], p: usize, guesses: &GuessSet) -> Result<ErrorBreakdown> {
    validate_breaks(breaks, p)?;
    validate_guesses(guesses, p)?;
    let partition = RegionPartition::from_breakpoints(breaks, p)?;

    if partition.is_empty() {
        return Ok(ErrorBreakdown::new(guesses.len() as u64, 0, 0.0));
    }

    let mut fp = 0u64;
    let mut fn_count = 0u64;
    let mut imprecision = 0.0f64;
    let mut g = guesses.positions().iter().copied().peekable();
    for region in partition.regions() {
        let mut count = 0u64;
        let mut best = f64::INFINITY;
        while let Some(&pos) = g.peek() {
            if pos > region.upper {
                break;
            }
            // Regions partition {1..P-1}, so pos >= region.lower here.
            count += 1;
            best = best.min(region.imprecision(pos));
            g.next();
        }
        if count == 0 {
            fn_count += 1;
        } else {
            fp += count - 1;
            imprecision += best;
        }
    }
    debug_assert!(g.next().is_none());
    Ok(ErrorBreakdown::new(fp, fn_count, imprecision))
}

/// Brute-force evaluation of the same contract as [`breakpoint_error`]:
/// every region scans every guess. Exists as an independent oracle.
pub fn breakpoint_error_naive(
    breaks: &[usize],
    p: usize,
    guesses: &GuessSet,
) -> Result<ErrorBreakdown> {
    validate_breaks(breaks, p)?;
    validate_guesses(guesses, p)?;
    let partition = RegionPartition::from_breakpoints(breaks, p)?;

    let mut fp = 0u64;
    let mut fn_count = 0u64;
    let mut imprecision = 0.0f64;
    for region in partition.regions() {
        let mut count = 0u64;
        let mut best = f64::INFINITY;
        for &pos in guesses.positions() {
            if region.contains(pos) {
                count += 1;
                best = best.min(region.imprecision(pos));
            }
        }
        if count == 0 {
            fn_count += 1;
        } else {
            fp += count - 1;
            imprecision += best;
        }
    }
    let stray = guesses
        .positions()
        .iter()
        .filter(|&&pos| !partition.regions().iter().any(|r| r.contains(pos)))
        .count() as u64;
    Ok(ErrorBreakdown::new(fp + stray, fn_count, imprecision))
}
