//! Shared fixtures for the benchmark suite.

use paramode_core::Region;

/// The region rasterized `factor` times coarser, for runs that compare the
/// cost of classification against its resolution.
pub fn coarsened(region: &Region, factor: f64) -> Region {
    let mut out = region.clone();
    out.resolution = Some(factor * region.resolution());
    out
}
