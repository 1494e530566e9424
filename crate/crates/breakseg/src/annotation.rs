//! Annotation error functions: relaxations of the breakpoint error that
//! score a guess set against annotated regions instead of exact breaks.
//!
//! An annotation pairs a closed position interval with an allowed range of
//! breakpoint counts. The incomplete error counts surplus/missing guesses
//! per region; the complete error additionally charges guesses outside a
//! disjoint unit-count region set; the zero-one error thresholds each
//! region's cost to at most 1.

use serde::{Deserialize, Serialize};

use crate::breakpoint::GuessSet;
use crate::error::{Error, Result};

/// A region interval with an allowed breakpoint-count interval.
///
/// `max_breaks = None` means "at least `min_breaks`" with no upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub lower: usize,
    pub upper: usize,
    pub min_breaks: u64,
    pub max_breaks: Option<u64>,
}

impl Annotation {
    pub fn new(
        lower: usize,
        upper: usize,
        min_breaks: u64,
        max_breaks: Option<u64>,
    ) -> Result<Self> {
        if lower < 1 || lower > upper {
            return Err(Error::invalid(format!(
                "annotation region [{lower},{upper}] is not a valid interval in 1.."
            )));
        }
        if let Some(max) = max_breaks {
            if max < min_breaks {
                return Err(Error::invalid(format!(
                    "allowed count interval [{min_breaks},{max}] is empty"
                )));
            }
        }
        Ok(Annotation {
            lower,
            upper,
            min_breaks,
            max_breaks,
        })
    }

    /// Region with exactly one allowed breakpoint.
    pub fn exactly_one(lower: usize, upper: usize) -> Result<Self> {
        Annotation::new(lower, upper, 1, Some(1))
    }

    /// Region with no allowed breakpoints.
    pub fn none_allowed(lower: usize, upper: usize) -> Result<Self> {
        Annotation::new(lower, upper, 0, Some(0))
    }

    fn count_in(&self, guesses: &GuessSet) -> u64 {
        guesses
            .positions()
            .iter()
            .filter(|&&g| g >= self.lower && g <= self.upper)
            .count() as u64
    }

    /// Surplus guesses beyond the allowed maximum.
    pub fn false_positives(&self, guesses: &GuessSet) -> u64 {
        match self.max_breaks {
            Some(max) => self.count_in(guesses).saturating_sub(max),
            None => 0,
        }
    }

    /// Missing guesses below the allowed minimum.
    pub fn false_negatives(&self, guesses: &GuessSet) -> u64 {
        self.min_breaks.saturating_sub(self.count_in(guesses))
    }
}

/// An ordered collection of annotations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    annotations: Vec<Annotation>,
}

impl AnnotationSet {
    pub fn new(annotations: Vec<Annotation>) -> Self {
        AnnotationSet { annotations }
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    /// Concatenate two sets (used to join positive and negative regions).
    pub fn union(&self, other: &AnnotationSet) -> AnnotationSet {
        let mut annotations = self.annotations.clone();
        annotations.extend_from_slice(&other.annotations);
        AnnotationSet::new(annotations)
    }

    /// Whether regions are pairwise disjoint and every count interval is
    /// exactly `{1}`, the precondition of [`complete_error`].
    pub fn is_complete(&self) -> bool {
        self.sorted_disjoint().is_ok()
            && self
                .annotations
                .iter()
                .all(|a| a.min_breaks == 1 && a.max_breaks == Some(1))
    }

    /// Annotations sorted by lower bound, or an error if any two overlap.
    fn sorted_disjoint(&self) -> Result<Vec<Annotation>> {
        let mut sorted = self.annotations.clone();
        sorted.sort_by_key(|a| a.lower);
        for w in sorted.windows(2) {
            if w[1].lower <= w[0].upper {
                return Err(Error::invalid(format!(
                    "annotation regions [{},{}] and [{},{}] overlap",
                    w[0].lower, w[0].upper, w[1].lower, w[1].upper
                )));
            }
        }
        Ok(sorted)
    }
}

/// Counts returned by [`incomplete_error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnnotationErrorCounts {
    #[serde(rename = "fp")]
    pub false_positives: u64,
    #[serde(rename = "fn")]
    pub false_negatives: u64,
    pub total: u64,
}

/// Sum over annotations of surplus and missing guess counts. Guesses
/// outside every region cost nothing; regions may overlap.
pub fn incomplete_error(set: &AnnotationSet, guesses: &GuessSet) -> AnnotationErrorCounts {
    let mut fp = 0u64;
    let mut fn_count = 0u64;
    for a in set.annotations() {
        fp += a.false_positives(guesses);
        fn_count += a.false_negatives(guesses);
    }
    AnnotationErrorCounts {
        false_positives: fp,
        false_negatives: fn_count,
        total: fp + fn_count,
    }
}

/// Zero-count regions filling the gaps that `set` leaves in `{1..P-1}`.
/// Empty gaps between touching regions are dropped.
pub fn negative_regions(set: &AnnotationSet, p: usize) -> Result<AnnotationSet> {
    if p < 2 {
        return Err(Error::invalid(format!("P must be >= 2; got {p}")));
    }
    let sorted = set.sorted_disjoint()?;
    if sorted.iter().any(|a| a.upper > p - 1) {
        return Err(Error::invalid(format!(
            "annotation regions must lie within 1..={}",
            p - 1
        )));
    }
    let mut gaps = Vec::with_capacity(sorted.len() + 1);
    let mut lower = 1usize;
    for a in &sorted {
        if a.lower > lower {
            gaps.push(Annotation::none_allowed(lower, a.lower - 1)?);
        }
        lower = a.upper + 1;
    }
    if lower < p {
        gaps.push(Annotation::none_allowed(lower, p - 1)?);
    }
    Ok(AnnotationSet::new(gaps))
}

/// Error for a complete annotation set: disjoint regions, each allowing
/// exactly one breakpoint and (by the caller's contract) containing exactly
/// one true breakpoint. Counts stray guesses outside all regions plus one
/// unit per region that is empty or over-full; imprecision is identically
/// zero under the zero-one region membership.
pub fn complete_error(set: &AnnotationSet, guesses: &GuessSet) -> Result<u64> {
    let sorted = set.sorted_disjoint()?;
    if let Some(a) = sorted
        .iter()
        .find(|a| !(a.min_breaks == 1 && a.max_breaks == Some(1)))
    {
        return Err(Error::invalid(format!(
            "complete error requires allowed counts of exactly 1; region [{},{}] allows [{},{}]",
            a.lower,
            a.upper,
            a.min_breaks,
            a.max_breaks.map_or("inf".to_string(), |m| m.to_string())
        )));
    }
    let stray = guesses
        .positions()
        .iter()
        .filter(|&&g| !sorted.iter().any(|a| g >= a.lower && g <= a.upper))
        .count() as u64;
    let mut total = stray;
    for a in &sorted {
        let count = a.count_in(guesses);
        if count == 0 {
            total += 1; // missed region
        } else {
            total += count - 1; // surplus guesses
        }
    }
    Ok(total)
}

/// Number of annotated regions whose guess count falls outside the allowed
/// interval. Bounded above by the number of annotations.
pub fn zero_one_error(set: &AnnotationSet, guesses: &GuessSet) -> u64 {
    set.annotations()
        .iter()
        .filter(|a| {
            let count = a.count_in(guesses);
            count < a.min_breaks || a.max_breaks.is_some_and(|max| count > max)
        })
        .count() as u64
}
