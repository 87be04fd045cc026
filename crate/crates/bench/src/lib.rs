//! Fixtures shared by the benchmarks in `benches/`.

use transgress_core::geometry::{builtin_geometry, stabilize, GeometryOptions};
use transgress_core::{Builtin, StabilizedGeometry};

pub fn round_sphere() -> StabilizedGeometry {
    stabilize(&builtin_geometry(&Builtin::SphereRound { radius: 1.0 }, &GeometryOptions::default()).expect("round sphere builds"))
}

/// The trivial flat rank-`rank` bundle over an interval, stabilised (fibres `S^rank`).
pub fn trivial(rank: usize) -> StabilizedGeometry {
    let opts = GeometryOptions::default();
    stabilize(&builtin_geometry(&Builtin::Trivial { rank, base_dim: 1 }, &opts).expect("trivial bundle builds"))
}

/// Points spread over `[0,1]^dim`, distinct so the per-point cache never hits.
pub fn spread(count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count).map(|i| (0..dim).map(|k| ((i * (2 * k + 3) + k) % 97) as f64 / 97.0).collect()).collect()
}
