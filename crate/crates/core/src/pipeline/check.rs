//! Invariant suites for continuous integration: curvature symmetries,
//! Einstein and Bochner negative controls, conformal invariance and the
//! combined Gauss–Bonnet/signature formulas.

use std::f64::consts::PI;

use crate::compactify::{compactification_checks, solve_eigenfunction};
use crate::error::{Result, StageContext};
use crate::gb::{combined_formulas, conformal_invariance, integrate_curvature, random_conformal_factors, DomainTag, QuadratureSpec};
use crate::models::{closed_model_functions, instantiate, Model, ModelSpec};
use crate::tensor::{curvature, CurvaturePacket, MetricField};

use super::config::Numerics;
use super::report::{Gate, Report};

pub const BIANCHI_LIMIT: f64 = 1e-10;
pub const CONFORMAL_LIMIT: f64 = 1e-6;
/// Smallest traceless Ricci norm that counts as "not Einstein" for a
/// negative control.
pub const NON_EINSTEIN_FLOOR: f64 = 1e-4;
const SAMPLE_FRACTIONS: [f64; 3] = [0.31, 0.5371, 0.77];

/// Deliberate defects used to confirm that the suites can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Adds a component to `R_0123` that breaks the cyclic identity.
    BianchiSymmetry,
}

impl Fault {
    pub fn from_name(name: &str) -> Option<Fault> {
        match name {
            "bianchi" | "bianchi_symmetry" => Some(Fault::BianchiSymmetry),
            _ => None,
        }
    }
}

/// `R_0123` and the entries tied to it by the pair symmetries, but not the
/// other two terms of the cyclic sum.
fn inject(packet: &mut CurvaturePacket, fault: Fault) {
    match fault {
        Fault::BianchiSymmetry => {
            let delta = 0.1 * packet.riemann.max_abs().max(1.0);
            for (i, j, k, l, s) in [
                (0, 1, 2, 3, 1.0),
                (1, 0, 2, 3, -1.0),
                (0, 1, 3, 2, -1.0),
                (1, 0, 3, 2, 1.0),
                (2, 3, 0, 1, 1.0),
                (3, 2, 0, 1, -1.0),
                (2, 3, 1, 0, -1.0),
                (3, 2, 1, 0, 1.0),
            ] {
                packet.riemann.add(i, j, k, l, s * delta);
            }
        }
    }
}

fn sample_points(metric: &MetricField) -> Vec<Vec<f64>> {
    let d = metric.domain();
    SAMPLE_FRACTIONS
        .iter()
        .map(|t| d.lower.iter().zip(&d.upper).map(|(a, b)| a + (b - a) * t).collect())
        .collect()
}

#[derive(Debug, Default)]
pub struct CheckOutcome {
    pub report: Report,
    pub gates: Vec<Gate>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    fn gate(&mut self, g: Gate) {
        g.record(&mut self.report);
        self.gates.push(g);
    }
}

/// Runs the invariant suites on every model in `models`.
pub fn run_check(models: &[ModelSpec], numerics: &Numerics, fault: Option<Fault>) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::default();
    out.report.push("command", "check");
    out.report.push("models", models.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(";"));
    if fault.is_some() {
        out.report.push("fault_injection", "bianchi_symmetry");
    }
    for spec in models {
        let model = instantiate(spec).stage("models")?;
        pointwise_suite(&model, fault, &mut out)?;
        if model.flags.closed {
            closed_suite(&model, numerics, &mut out)?;
        } else {
            bochner_suite(&model, numerics, &mut out)?;
        }
    }
    let failed = out.gates.iter().filter(|g| !g.passed).count();
    out.report.int("gates.total", out.gates.len() as i64);
    out.report.int("gates.failed", failed as i64);
    out.report.push("status", if failed == 0 { "pass" } else { "fail" });
    Ok(out)
}

fn pointwise_suite(model: &Model, fault: Option<Fault>, out: &mut CheckOutcome) -> Result<()> {
    let name = model.spec.name();
    let mut bianchi = 0.0f64;
    let mut traceless = 0.0f64;
    let mut sigma2 = 0.0f64;
    for p in sample_points(&model.metric) {
        let mut c = curvature(&model.metric, &p, 1.0).stage("tensor_core")?;
        if let Some(f) = fault {
            inject(&mut c, f);
        }
        bianchi = bianchi.max(c.bianchi_defect());
        traceless = traceless.max(c.traceless_ricci_norm2.sqrt());
        sigma2 = sigma2.max(c.sigma2_defect());
    }
    out.gate(Gate::below(&format!("{name}.bianchi"), bianchi, BIANCHI_LIMIT));
    out.gate(Gate::below(&format!("{name}.sigma2_formulas"), sigma2, 1e-10));
    if model.flags.einstein {
        out.gate(Gate::below(&format!("{name}.einstein"), traceless, 1e-6));
    } else {
        // negative control
        out.gate(Gate::above(&format!("{name}.einstein_trips"), traceless, NON_EINSTEIN_FLOOR));
    }
    Ok(())
}

fn bochner_suite(model: &Model, numerics: &Numerics, out: &mut CheckOutcome) -> Result<()> {
    let name = model.spec.name();
    let fg = model.fg().stage("models")?;
    let sol = solve_eigenfunction(fg).stage("compactify")?;
    let c = compactification_checks(&sol, fg, numerics.tol_compactification).stage("compactify")?;
    if model.flags.einstein {
        out.gate(Gate::below(&format!("{name}.bochner"), c.bochner_residual, numerics.tol_compactification));
    } else {
        out.gate(Gate::above(&format!("{name}.bochner_trips"), c.bochner_residual, numerics.tol_compactification));
    }
    Ok(())
}

fn closed_suite(model: &Model, numerics: &Numerics, out: &mut CheckOutcome) -> Result<()> {
    let name = model.spec.name();
    let spec = QuadratureSpec {
        nodes: numerics.quadrature_nodes,
        tolerance: numerics.tol_integrals,
        orientation: 1.0,
    };
    let suite = integrate_curvature(&model.metric, &spec, DomainTag::ClosedModel, None).stage("gb_invariants")?;
    let scale = 8.0 * PI * PI;
    let (a, b) = combined_formulas(&suite).stage("gb_invariants")?;
    out.gate(Gate::below(&format!("{name}.combined_formulas"), a.abs().max(b.abs()) / scale, 1e-6));
    out.gate(Gate::below(
        &format!("{name}.euler"),
        (suite.euler_gb - model.flags.known_chi as f64).abs(),
        1e-6,
    ));
    if let Some(t) = model.flags.known_tau {
        out.gate(Gate::below(&format!("{name}.signature"), (suite.signature - t as f64).abs(), 1e-6));
    }
    // conformal invariance is only informative where W ≠ 0
    if suite.weyl_energy > 1e-6 * scale {
        let fs = closed_model_functions(&model.spec).stage("models")?;
        let factors = random_conformal_factors(&fs, numerics.conformal_factors, numerics.conformal_amplitude, numerics.seed);
        let cspec = QuadratureSpec {
            nodes: numerics.conformal_nodes,
            ..spec
        };
        let c = conformal_invariance(&model.metric, &factors, &cspec).stage("gb_invariants")?;
        out.report.num(format!("{name}.weyl_energy"), c.base);
        out.gate(Gate::below(&format!("{name}.conformal_invariance"), c.max_relative_deviation, CONFORMAL_LIMIT));
    }
    Ok(())
}
