//! Shared fixtures for the criterion benches.

use strmom_core::market_data::{
    generate_synthetic, SyntheticModel, SyntheticParams, TickStream,
};

/// Seeded random-walk stream with default market parameters.
pub fn walk_stream(seed: u64, n: usize) -> TickStream {
    generate_synthetic(seed, n, SyntheticModel::RandomWalk, &SyntheticParams::default())
        .expect("default generator parameters are valid")
}
