//! Scenario registry, verifiers and JSON reports.
//!
//! A check passes when `abs_err ≤ tolerance` and, for quadrature values, the
//! error estimate is at most half the tolerance. A check failing only the
//! second condition is reported as inconclusive.

mod scenario;
mod verify;

use std::fmt::Write as _;

use serde::Serialize;

pub use scenario::{Expected, FieldSpec, GeometrySpec, Polynomial, Provenance, Sampling, Scenario, ScenarioKind, ZeroSpec};

use crate::error::{Error, Result};
use crate::exterior::Fd;
use crate::quadrature::QuadratureSpec;
use verify::{Context, Measured};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub check_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_estimate: Option<f64>,
    pub inconclusive: bool,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
}

impl Check {
    pub fn new(
        check_id: String,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
        error_estimate: Option<f64>,
        provenance: Provenance,
        oracle: Option<String>,
    ) -> Self {
        let abs_err = (lhs - rhs).abs();
        let inconclusive = error_estimate.is_some_and(|e| !(e <= 0.5 * tolerance));
        let pass = abs_err <= tolerance && !inconclusive;
        Check { check_id, lhs, rhs, abs_err, tolerance, pass, error_estimate, inconclusive, provenance, oracle }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub checks: Vec<Check>,
    pub quadrature: QuadratureSpec,
    pub fd_step: f64,
    pub passed: bool,
    pub timestamp: String,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }

    /// The report with an empty timestamp, for reproducibility comparisons.
    pub fn without_timestamp(&self) -> Report {
        Report { timestamp: String::new(), ..self.clone() }
    }
}

/// Overrides applied on top of a scenario's own settings.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub order: Option<usize>,
    pub subdivision: Option<usize>,
    pub fd_step: Option<f64>,
}

impl RunConfig {
    fn context(&self, s: &Scenario) -> Result<Context> {
        let spec = QuadratureSpec {
            order: self.order.unwrap_or(s.quadrature.order),
            subdivision: self.subdivision.unwrap_or(s.quadrature.subdivision),
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        let fd = self.fd_step.map_or_else(Fd::default, Fd::new);
        if !(fd.step > 0.0 && fd.step < 0.1) {
            return Err(Error::Config(format!("finite-difference step {} must lie in (0, 0.1)", fd.step)));
        }
        Ok(Context { spec, fd })
    }
}

const SHIPPED: &[(&str, &str)] = &[
    ("ball_saddle_pair", include_str!("../../scenarios/ball_saddle_pair.json")),
    ("ball_shift_axis", include_str!("../../scenarios/ball_shift_axis.json")),
    ("ball_shift_centered", include_str!("../../scenarios/ball_shift_centered.json")),
    ("ball_shift_diagonal", include_str!("../../scenarios/ball_shift_diagonal.json")),
    ("closedness_generic_n3", include_str!("../../scenarios/closedness_generic_n3.json")),
    ("closedness_round_sphere", include_str!("../../scenarios/closedness_round_sphere.json")),
    ("disk_winding_d0", include_str!("../../scenarios/disk_winding_d0.json")),
    ("disk_winding_d1", include_str!("../../scenarios/disk_winding_d1.json")),
    ("disk_winding_d2", include_str!("../../scenarios/disk_winding_d2.json")),
    ("disk_winding_d3", include_str!("../../scenarios/disk_winding_d3.json")),
    ("disk_winding_dm1", include_str!("../../scenarios/disk_winding_dm1.json")),
    ("disk_winding_dm2", include_str!("../../scenarios/disk_winding_dm2.json")),
    ("ellipsoid_gauss_bonnet", include_str!("../../scenarios/ellipsoid_gauss_bonnet.json")),
    ("ellipsoid_sections", include_str!("../../scenarios/ellipsoid_sections.json")),
    ("fiber_n1_circle", include_str!("../../scenarios/fiber_n1_circle.json")),
    ("fiber_n2_round_sphere", include_str!("../../scenarios/fiber_n2_round_sphere.json")),
    ("fiber_n3_point", include_str!("../../scenarios/fiber_n3_point.json")),
    ("frame_equivariance_ellipsoid", include_str!("../../scenarios/frame_equivariance_ellipsoid.json")),
    ("frame_equivariance_sphere", include_str!("../../scenarios/frame_equivariance_sphere.json")),
    ("frame_equivariance_torus", include_str!("../../scenarios/frame_equivariance_torus.json")),
    ("gauss_bonnet_sphere", include_str!("../../scenarios/gauss_bonnet_sphere.json")),
    ("gauss_bonnet_torus", include_str!("../../scenarios/gauss_bonnet_torus.json")),
    ("sections_tangent_sphere", include_str!("../../scenarios/sections_tangent_sphere.json")),
    ("sections_trivial_plane", include_str!("../../scenarios/sections_trivial_plane.json")),
    ("special_cases_circle", include_str!("../../scenarios/special_cases_circle.json")),
    ("special_cases_sphere", include_str!("../../scenarios/special_cases_sphere.json")),
    ("thom_shadow_tangent_sphere", include_str!("../../scenarios/thom_shadow_tangent_sphere.json")),
    ("thom_shadow_trivial_plane", include_str!("../../scenarios/thom_shadow_trivial_plane.json")),
    ("transgression_generic_n1", include_str!("../../scenarios/transgression_generic_n1.json")),
    ("transgression_generic_n3", include_str!("../../scenarios/transgression_generic_n3.json")),
];

/// Shipped scenario names in report order.
pub fn scenario_names() -> Vec<&'static str> {
    SHIPPED.iter().map(|(n, _)| *n).collect()
}

pub fn load_scenario(name: &str) -> Result<Scenario> {
    let (_, text) = SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown scenario {name}; available: {}", scenario_names().join(", "))))?;
    let s = Scenario::from_json(text)?;
    if s.name != name {
        return Err(Error::Config(format!("scenario file {name} declares name {}", s.name)));
    }
    Ok(s)
}

/// Runs a scenario. Configuration problems are errors; numerical failures
/// are failing checks in the report.
pub fn run_scenario(s: &Scenario, config: &RunConfig) -> Result<Report> {
    s.validate()?;
    let ctx = config.context(s)?;
    let outcome = match s.kind {
        ScenarioKind::IndexTheorem => verify::index_theorem(s, &ctx),
        ScenarioKind::FiberNormalization => verify::fiber_normalization(s, &ctx),
        ScenarioKind::Closedness => verify::cubes(s, &ctx, false),
        ScenarioKind::Transgression => verify::cubes(s, &ctx, true),
        ScenarioKind::SectionProperties => verify::section_properties(s, &ctx),
        ScenarioKind::ThomShadow => verify::thom_shadow(s, &ctx),
        ScenarioKind::SpecialCases => verify::special_cases(s, &ctx),
        ScenarioKind::GaussBonnet => verify::gauss_bonnet(s, &ctx),
        ScenarioKind::FrameEquivariance => verify::frame_equivariance(s, &ctx),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e @ (Error::Config(_) | Error::InvalidParameter(_))) => return Err(Error::Config(format!("{}: {e}", s.name))),
        Err(e) => return Ok(failed_report(s, &ctx, e)),
    };
    let mut checks: Vec<Check> = s
        .expected
        .iter()
        .map(|e| {
            let Measured { value, error_estimate } = outcome.measured[&e.id];
            Check::new(e.id.clone(), value, e.value, e.tol, error_estimate, e.provenance, e.oracle.clone())
        })
        .collect();
    checks.extend(outcome.extra);
    Ok(report(s, &ctx, checks))
}

fn report(s: &Scenario, ctx: &Context, checks: Vec<Check>) -> Report {
    Report {
        scenario: s.name.clone(),
        kind: s.kind,
        passed: checks.iter().all(|c| c.pass),
        checks,
        quadrature: ctx.spec,
        fd_step: ctx.fd.step,
        timestamp: chrono::Utc::now().to_rfc3339(),
    }
}

/// A numerical error (vanishing field, unresolved degree, …) becomes one
/// failing check carrying the message.
fn failed_report(s: &Scenario, ctx: &Context, e: Error) -> Report {
    let check = Check {
        check_id: format!("error: {e}"),
        lhs: f64::NAN,
        rhs: f64::NAN,
        abs_err: f64::INFINITY,
        tolerance: 0.0,
        pass: false,
        error_estimate: None,
        inconclusive: false,
        provenance: Provenance::Exact,
        oracle: None,
    };
    report(s, ctx, vec![check])
}

pub fn run_named(name: &str, config: &RunConfig) -> Result<Report> {
    run_scenario(&load_scenario(name)?, config)
}

/// Every shipped scenario, in name order.
pub fn run_all(config: &RunConfig) -> Result<Vec<Report>> {
    scenario_names().into_iter().map(|n| run_named(n, config)).collect()
}

/// Convergence table for the first quadrature-valued check of a scenario,
/// as CSV `order,value,error_estimate`.
pub fn sweep(name: &str, orders: &[usize], config: &RunConfig) -> Result<String> {
    let s = load_scenario(name)?;
    let mut csv = String::from("order,value,error_estimate\n");
    for &order in orders {
        let r = run_scenario(&s, &RunConfig { order: Some(order), ..*config })?;
        let c = r
            .checks
            .iter()
            .find(|c| c.error_estimate.is_some())
            .ok_or_else(|| Error::Config(format!("{name} has no quadrature-valued check to sweep")))?;
        writeln!(csv, "{order},{:e},{:e}", c.lhs, c.error_estimate.unwrap_or(f64::NAN)).expect("writing to a String");
    }
    Ok(csv)
}
