//! Secondary Chern-Euler transgression forms on fiberwise-compactified sphere
//! bundles, built numerically on charts and checked by quadrature.
//!
//! The crate is organised bottom-up:
//!
//! * [`exterior`]: lazy differential forms on coordinate boxes (wedge, `d`,
//!   pullback).
//! * [`geometry`]: framed base geometries with `SO(n)` connections and their
//!   stabilisation to `ν ⊕ ξ`.
//! * [`transgression`]: the transgression form `Ψ`, the Euler curvature form,
//!   and sections of the sphere bundle.
//! * [`quadrature`]: tensor Gauss-Legendre / trapezoid integration of top
//!   forms over charts, atlases and cube boundaries.
//! * [`indices`]: Poincaré-Hopf indices of declared zeros.
//! * [`harness`]: JSON scenarios, verifiers and reports.

pub mod error;
pub mod exterior;
pub mod geometry;
pub mod harness;
pub mod indices;
pub mod quadrature;
pub mod transgression;

pub use error::{Error, Result};
pub use exterior::{ChartDomain, Fd, KForm, Scalar, SmoothMap};
pub use geometry::{Builtin, Connection, FramedGeometry, MatrixForm, StabilizedGeometry};
pub use transgression::{BundleSection, SphereBundleMap};
pub use quadrature::{Integral, QuadratureSpec};
