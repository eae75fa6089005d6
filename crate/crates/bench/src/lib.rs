//! Shared fixtures for the criterion benchmarks in `benches/`.

use lerw_core::{build_domain, LatticeDomain};

/// Domain sizes swept by the scaling benchmarks.
pub const SIZES: [u32; 3] = [8, 16, 32];

pub fn domain(n: u32) -> LatticeDomain {
    build_domain(n).expect("benchmark sizes are valid")
}
