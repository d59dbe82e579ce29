//! Instance helpers for the benchmarks.

use offsetph_cli::{generate, GenConfig};
use offsetph_core::SiteSet;

/// Seed shared by every benchmark instance.
pub const SEED: u64 = 1;

/// Random instance of `n` polygons with the generator's default shape
/// distribution.
pub fn instance(n: usize) -> SiteSet {
    generate(&GenConfig { n, seed: SEED, ..GenConfig::default() }).expect("benchmark instance")
}
