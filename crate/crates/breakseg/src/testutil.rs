//! Helpers shared by unit tests across modules.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `count` distinct values drawn uniformly from `1..=max`, sorted.
pub(crate) fn distinct_sorted(rng: &mut ChaCha8Rng, count: usize, max: usize) -> Vec<usize> {
    let mut out = std::collections::BTreeSet::new();
    while out.len() < count {
        out.insert(rng.gen_range(1..=max));
    }
    out.into_iter().collect()
}
