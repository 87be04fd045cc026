//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use transgress_core::harness::{load_scenario, run_named, Report, RunConfig};

struct Criterion {
    pass: bool,
    notes: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Criterion { pass: true, notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, note: String) {
        if !ok {
            self.pass = false;
            self.notes.push(note);
        }
    }

    /// Runs `name` at default settings; the report must pass and each listed
    /// quantity must lie within `tol` of its target.
    fn scenario(&mut self, name: &str, targets: &[(&str, f64, f64)]) -> Option<(Report, Duration)> {
        let started = Instant::now();
        let report = match run_named(name, &RunConfig::default()) {
            Ok(r) => r,
            Err(e) => {
                self.require(false, format!("{name}: {e}"));
                return None;
            }
        };
        let elapsed = started.elapsed();
        self.require(report.passed, format!("{name}: report failed"));
        for &(id, target, tol) in targets {
            match report.checks.iter().find(|c| c.check_id == id) {
                Some(c) => self.require((c.lhs - target).abs() < tol, format!("{name}/{id} = {:.3e}, want {target} ± {tol:e}", c.lhs)),
                None => self.require(false, format!("{name}: no {id} check")),
            }
        }
        Some((report, elapsed))
    }
}

fn fiber_normalization() -> Criterion {
    let mut c = Criterion::new();
    for name in ["fiber_n1_circle", "fiber_n2_round_sphere", "fiber_n3_point"] {
        if let Some((_, t)) = c.scenario(name, &[("fiber_integral", 1.0, 1e-8)]) {
            c.require(t < Duration::from_secs(5), format!("{name} took {t:?}"));
        }
    }
    c
}

fn disk_family() -> Criterion {
    let mut c = Criterion::new();
    for d in [-2i64, -1, 0, 1, 2, 3] {
        let name = if d < 0 { format!("disk_winding_dm{}", -d) } else { format!("disk_winding_d{d}") };
        let Some((r, _)) = c.scenario(&name, &[("boundary_integral", (d - 1) as f64, 1e-6), ("index_sum", d as f64, 0.5)]) else { continue };
        let sum = r.checks.iter().find(|k| k.check_id == "index_sum").map(|k| k.lhs);
        let winding = r.checks.iter().find(|k| k.check_id == "index_sum_vs_winding_number").map(|k| k.rhs);
        c.require(sum.is_some() && sum == winding, format!("{name}: index sum {sum:?} vs winding count {winding:?}"));
    }
    c
}

fn ball_family() -> Criterion {
    let mut c = Criterion::new();
    for (name, sum) in [("ball_shift_centered", 1.0), ("ball_shift_axis", 1.0), ("ball_shift_diagonal", 1.0), ("ball_saddle_pair", 0.0)] {
        c.scenario(name, &[("index_sum", sum, 0.5), ("boundary_integral", sum, 1e-6), ("identity_residual", 0.0, 1e-6)]);
    }
    c
}

fn special_cases() -> Criterion {
    let mut c = Criterion::new();
    c.scenario("special_cases_sphere", &[("outward_deviation", 0.0, 1e-8), ("tangent_deviation", 0.0, 1e-8)]);
    c.scenario("special_cases_circle", &[("tangent_deviation", 0.0, 1e-8)]);
    c
}

fn section_properties() -> Criterion {
    let mut c = Criterion::new();
    c.scenario("sections_tangent_sphere", &[("infinity_section", -1.0, 1e-6), ("zero_section", 1.0, 1e-6)]);
    c.scenario("sections_trivial_plane", &[("infinity_section", 0.0, 1e-6)]);
    c
}

fn thom_shadow() -> Criterion {
    let mut c = Criterion::new();
    for name in ["thom_shadow_tangent_sphere", "thom_shadow_trivial_plane"] {
        c.scenario(name, &[("infinity_combination", 0.0, 1e-6), ("fiber_combination", 1.0, 1e-6)]);
    }
    c
}

fn cubes() -> Criterion {
    let mut c = Criterion::new();
    for name in ["closedness_round_sphere", "closedness_generic_n3", "transgression_generic_n1", "transgression_generic_n3"] {
        match load_scenario(name) {
            Ok(s) => c.require(s.sampling.count >= 100, format!("{name}: only {} cubes", s.sampling.count)),
            Err(e) => c.require(false, format!("{name}: {e}")),
        }
        if let Some((r, _)) = c.scenario(name, &[("max_normalized_residual", 0.0, 1e-5)]) {
            let estimated = r.checks.iter().all(|k| k.error_estimate.is_some() && !k.inconclusive);
            c.require(estimated, format!("{name}: residual not covered by an error estimate"));
        }
    }
    c
}

fn gauss_bonnet() -> Criterion {
    let mut c = Criterion::new();
    c.scenario("gauss_bonnet_sphere", &[("gauss_bonnet", 2.0, 1e-6)]);
    c.scenario("ellipsoid_gauss_bonnet", &[("gauss_bonnet", 2.0, 1e-6)]);
    c.scenario("gauss_bonnet_torus", &[("gauss_bonnet", 0.0, 1e-6)]);
    c
}

fn frame_equivariance() -> Criterion {
    let mut c = Criterion::new();
    for (name, tol) in [("frame_equivariance_torus", 1e-9), ("frame_equivariance_sphere", 1e-6), ("frame_equivariance_ellipsoid", 1e-6)] {
        match load_scenario(name) {
            Ok(s) => c.require(s.sampling.count >= 20, format!("{name}: only {} frame changes", s.sampling.count)),
            Err(e) => c.require(false, format!("{name}: {e}")),
        }
        c.scenario(name, &[("max_deviation", 0.0, tol)]);
    }
    c
}

fn connection_independence() -> Criterion {
    let mut c = Criterion::new();
    c.scenario("ellipsoid_sections", &[("fiber_integral", 1.0, 1e-5), ("infinity_section", -1.0, 1e-5), ("zero_section", 1.0, 1e-5)]);
    c
}

fn full_suite() -> Criterion {
    let mut c = Criterion::new();
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_transgress")).arg("all").env("TRANSGRESS_THREADS", "1").output();
    let elapsed = started.elapsed();
    match out {
        Ok(o) => {
            c.require(o.status.code() == Some(0), format!("exit status {:?}", o.status.code()));
            if let Some(line) = String::from_utf8_lossy(&o.stderr).lines().last() {
                c.notes.push(line.to_string());
            }
        }
        Err(e) => c.require(false, format!("cannot run transgress: {e}")),
    }
    c.require(elapsed < Duration::from_secs(300), format!("took {elapsed:?}"));
    c.notes.push(format!("{:.1} s", elapsed.as_secs_f64()));
    c
}

fn main() -> ExitCode {
    type Run = fn() -> Criterion;
    let criteria: [(&str, Run); 11] = [
        ("fiber integrals equal 1 for n = 1, 2, 3", fiber_normalization),
        ("disk family: index sum = 1 + boundary integral", disk_family),
        ("ball family: index sum = boundary integral", ball_family),
        ("outward and tangent special cases", special_cases),
        ("infinity and zero section integrals", section_properties),
        ("Thom-class shadow", thom_shadow),
        ("closedness and transgression on random cubes", cubes),
        ("Gauss-Bonnet regression", gauss_bonnet),
        ("frame equivariance", frame_equivariance),
        ("connection independence on the ellipsoid", connection_independence),
        ("full suite single-threaded under 5 minutes", full_suite),
    ];
    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let c = run();
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let notes = if c.notes.is_empty() { String::new() } else { format!(" [{}]", c.notes.join("; ")) };
        println!("criterion {:>2} {verdict}: {title} ({:.1} s){notes}", k + 1, started.elapsed().as_secs_f64());
        failed += usize::from(!c.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
