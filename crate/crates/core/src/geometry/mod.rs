//! Framed base geometries: chart atlases carrying a metric, an oriented
//! orthonormal frame and an `SO(n)` connection with its curvature.
//!
//! Frame convention: columns of the frame matrix are the frame vectors in
//! coordinates, and `ω_ab = ⟨∇e_b, e_a⟩`, so that for `v = Σ u_a e_a` the
//! covariant derivative has components `du + ωu`.

mod builtin;
mod connection;
mod levi_civita;

use nalgebra::DMatrix;

pub use builtin::{builtin_geometry, generic_connection, Builtin, GeometryOptions};
pub use connection::{curvature_from_connection, Connection, MatrixField, MatrixForm};
pub use levi_civita::{check_metric_and_frame, coframe, levi_civita_from_metric, torsion_residual};
pub(crate) use levi_civita::sample_grid;

use crate::error::{Error, Result};
use crate::exterior::combinatorics::det_small;
use crate::exterior::{ChartDomain, Fd, SmoothMap};

/// An edge of a polar chart where the coordinate system collapses to a point.
///
/// The chart stops `margin` short of the pole along `axis`; integrals add a
/// correction for the omitted strip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoleCap {
    pub axis: usize,
    pub at_upper: bool,
    pub margin: f64,
}

/// One chart of a framed geometry.
#[derive(Clone, Debug)]
pub struct GeometryChart {
    pub domain: ChartDomain,
    /// Charts sharing a patch id share coordinates, so their ranges must not overlap.
    pub patch: usize,
    pub pole_caps: Vec<PoleCap>,
    /// Embedding into `R^{base_dim + 1}` when the base is a hypersurface.
    pub embedding: Option<SmoothMap>,
    pub metric: Option<MatrixField>,
    /// Oriented orthonormal frame of `ξ` (only for `ξ = TM`).
    pub frame: Option<MatrixField>,
    pub connection: Connection,
}

impl GeometryChart {
    /// Frame vectors pushed into the ambient space, and the unit normal `N`
    /// with `(N, e_1, …, e_n)` positively oriented.
    pub fn ambient_frame(&self, x: &[f64]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        let embedding = self.embedding.as_ref()?;
        let frame = self.frame.as_ref()?;
        let pushed: DMatrix<f64> = embedding.jacobian(x) * frame.eval(x);
        let (rows, n) = (pushed.nrows(), pushed.ncols());
        if rows != n + 1 {
            return None;
        }
        let vectors: Vec<Vec<f64>> = (0..n).map(|c| pushed.column(c).iter().copied().collect()).collect();
        let mut normal: Vec<f64> = (0..rows)
            .map(|skip| {
                let minor: Vec<f64> =
                    (0..rows).filter(|&r| r != skip).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| pushed[(r, c)]).collect();
                let sign = if skip % 2 == 0 { 1.0 } else { -1.0 };
                sign * det_small(minor, n)
            })
            .collect();
        let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        normal.iter_mut().for_each(|v| *v /= norm);
        Some((vectors, normal))
    }

    /// Riemannian area/volume density `sqrt(det g)` at `x`.
    pub fn volume_density(&self, x: &[f64]) -> Option<f64> {
        self.metric.as_ref().map(|g| g.eval(x).determinant().sqrt())
    }
}

/// A rank-`n` oriented bundle `ξ` with connection over a chart atlas.
#[derive(Clone, Debug)]
pub struct FramedGeometry {
    pub name: String,
    pub rank: usize,
    pub base_dim: usize,
    pub charts: Vec<GeometryChart>,
}

impl FramedGeometry {
    /// Checks that charts within one patch have disjoint ranges.
    pub fn validate_atlas(&self) -> Result<()> {
        for (i, a) in self.charts.iter().enumerate() {
            for b in &self.charts[i + 1..] {
                if a.patch == b.patch && a.domain.interiors_overlap(&b.domain) {
                    return Err(Error::OverlappingCharts(a.patch));
                }
            }
        }
        Ok(())
    }

    pub fn is_tangent_bundle(&self) -> bool {
        self.rank == self.base_dim && self.charts.iter().all(|c| c.frame.is_some())
    }
}

/// `E = ν ⊕ ξ` with the trivial line `ν` placed first.
#[derive(Clone, Debug)]
pub struct StabilizedGeometry {
    pub base: FramedGeometry,
    /// Per chart, the `(n+1)×(n+1)` connection with zero first row and column.
    pub connections: Vec<Connection>,
}

impl StabilizedGeometry {
    pub fn rank(&self) -> usize {
        self.base.rank + 1
    }
}

pub fn stabilize(geom: &FramedGeometry) -> StabilizedGeometry {
    StabilizedGeometry { base: geom.clone(), connections: geom.charts.iter().map(|c| c.connection.stabilized()).collect() }
}

/// Checks that `g` is `SO(n)`-valued on a sample grid.
pub fn check_special_orthogonal(g: &MatrixField, domain: &ChartDomain) -> Result<()> {
    let n = g.size();
    for p in levi_civita::sample_grid(domain, 5) {
        let m = g.eval(&p);
        let defect = (m.transpose() * &m - DMatrix::identity(n, n)).amax();
        if defect >= 1e-9 || m.determinant() <= 0.0 {
            return Err(Error::NotSpecialOrthogonal(p));
        }
    }
    Ok(())
}

/// Replace the frame `e` by `e·g` on every chart (`rotations[k]` acts on chart `k`).
pub fn frame_change(geom: &FramedGeometry, rotations: &[MatrixField], fd: Fd) -> Result<FramedGeometry> {
    if rotations.len() != geom.charts.len() {
        return Err(Error::DimensionMismatch(format!("{} frame changes for {} charts", rotations.len(), geom.charts.len())));
    }
    let mut out = geom.clone();
    for (chart, g) in out.charts.iter_mut().zip(rotations) {
        if g.size() != geom.rank {
            return Err(Error::DimensionMismatch(format!("{}x{} frame change on a rank-{} bundle", g.size(), g.size(), geom.rank)));
        }
        check_special_orthogonal(g, &chart.domain)?;
        chart.connection = chart.connection.gauge_transform(g, fd)?;
        if let Some(frame) = chart.frame.take() {
            let g = g.clone();
            chart.frame = Some(MatrixField::new(frame.size(), move |x| frame.eval(x) * g.eval(x)));
        }
    }
    Ok(out)
}
