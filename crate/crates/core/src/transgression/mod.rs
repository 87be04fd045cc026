//! The transgression form `Ψ` and the Euler curvature form.
//!
//! Points of the sphere bundle of `E = ν ⊕ ξ` are unit vectors `u` written in
//! a local oriented orthonormal frame with the `ν` component first. With
//! `θ = du + ωu`,
//!
//! ```text
//! Ψ_j = Σ_τ sgn(τ) u_{τ0} θ_{τ1} ∧ … ∧ θ_{τ(n-2j)} ∧ Ω_{..} ∧ … ∧ Ω_{..}
//! Ψ   = 1/((n-1)!! c_n) Σ_j Ψ_j / (2^j j! (n-2j)!!)
//! ```
//!
//! where `c_n` is the volume of the unit `n`-sphere. `Ψ` is only ever built
//! as a pullback onto a chart through a [`SphereBundleMap`].

mod bundle;
mod forms;
mod pointwise;

pub use bundle::{
    fiber_map, normalize_map, section_from_ambient_field, section_from_vector_field, sphere_parametrization,
    BundleSection, SphereBundleMap,
};
pub use forms::{euler_form, psi, psi_assembled, psi_j, pulled_connection, theta};
pub use pointwise::PointForm;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exterior::combinatorics::{double_factorial, factorial};

/// Volume `c_n` of the unit `n`-sphere.
pub fn sphere_volume(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("sphere dimension must be >= 1, got {n}")));
    }
    let m = (n / 2) as i32;
    let denom = double_factorial(n as i64 - 1) as f64;
    Ok(if n.is_multiple_of(2) {
        2.0 * (2.0 * PI).powi(m) / denom
    } else {
        (2.0 * PI).powi(m + 1) / denom
    })
}

/// Weights `w_j` with `Ψ = Σ_j w_j Ψ_j`, for `j = 0..=n/2`.
///
/// Integer parts of the denominators are formed exactly before the single
/// conversion to floating point.
pub fn psi_weights(n: usize) -> Result<Vec<f64>> {
    let outer = double_factorial(n as i64 - 1) as f64 * sphere_volume(n)?;
    Ok((0..=n / 2)
        .map(|j| {
            let inner: u128 = (1u128 << j) * factorial(j as u64) * double_factorial(n as i64 - 2 * j as i64);
            1.0 / (inner as f64 * outer)
        })
        .collect())
}

/// Normalisation of the Euler form of a rank `2m+2` bundle,
/// `1/((4π)^{m+1} (m+1)!)`.
pub fn euler_normalization(rank: usize) -> Result<f64> {
    if rank == 0 || rank % 2 == 1 {
        return Err(Error::OddRank(rank));
    }
    let half = rank / 2;
    Ok(1.0 / ((4.0 * PI).powi(half as i32) * factorial(half as u64) as f64))
}
