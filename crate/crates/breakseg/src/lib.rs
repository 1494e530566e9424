//! Breakpoint detection accuracy for segmentation models.
//!
//! The crate evaluates guessed breakpoint positions against known truth
//! (the exact breakpoint error and its annotation-based relaxations),
//! solves the two segmentation models the evaluation is applied to
//! (least-squares segment-neighborhood dynamic programming and the
//! total-variation fused lasso), and sweeps penalized model-selection
//! criteria over simulated signal databases to locate the penalty
//! exponents with minimal detection error.
//!
//! Modules:
//! - [`sim`]: piecewise-constant truth models and seeded noisy sampling.
//! - [`breakpoint`]: the exact breakpoint error (FP + FN + imprecision).
//! - [`annotation`]: incomplete, complete, and zero-one annotation errors.
//! - [`segment`]: least-squares segmentation and break extraction.
//! - [`tv`]: exact 1-D total-variation smoothing (fused lasso, no
//!   sparsity term).
//! - [`select`]: exact penalty paths, error curves, train/test error.
//! - [`sweep`]: penalty-exponent sweeps and the built-in experiments.
//! - [`io`]: the CSV/JSON interchange formats.

pub mod annotation;
pub mod breakpoint;
mod error;
pub mod io;
pub mod segment;
pub mod select;
pub mod sim;
pub mod sweep;
pub mod tv;

#[cfg(test)]
pub(crate) mod testutil;

pub use breakpoint::{breakpoint_error, ErrorBreakdown, GuessSet, RegionPartition};
pub use error::{Error, Result};
pub use segment::{phi_breaks, segment_least_squares, SegmentationFit};
pub use sim::{SampleScheme, Signal, TrueModel};
pub use tv::{flsa_solve, SmoothedSignal};
