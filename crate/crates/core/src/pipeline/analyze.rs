//! `analyze`, `volume` and `curvature` runs.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::compactify::{
    asymptotic_coefficients, compactification_checks, compactified, solve_eigenfunction, write_solution_csv,
    CompactificationChecks, EigenfunctionSolution,
};
use crate::error::{Error, Result, StageContext};
use crate::fg::{extract_expansion, g2_closed_form, FgMetric};
use crate::gb::{
    anderson_identity_residual, combined_formulas, integrate_curvature, sigma2_volume_bridge, weyl_energy,
    DomainTag, IntegralSuite, QuadratureSpec,
};
use crate::models::{exact_reference, instantiate, Model};
use crate::tensor::{curvature, CurvaturePacket, MetricField};
use crate::topology::{evaluate, TopologyInputs, TopologyOptions, TopologyReport};
use crate::volume::{fit_renormalized_volume, VolumeFit, VolumeOptions};

use super::config::{Outputs, RunConfig};
use super::report::{Gate, Report};

const INTEGRALS_HEADER: &str = "# cce integrals v1";
const CHECKS_HEADER: &str = "# cce topology-checks v1";
const GRID_HEADER: &str = "# cce eigenfunction-grid v1";
const PACKET_HEADER: &str = "# cce curvature-packet v1";
const EINSTEIN_SAMPLES: usize = 16;

/// Everything a run produced; files are written by [`write_outputs`].
#[derive(Debug, Default)]
pub struct Outcome {
    pub report: Report,
    pub gates: Vec<Gate>,
    pub volume: Option<VolumeFit>,
    pub eigenfunction: Option<(EigenfunctionSolution, FgMetric)>,
    pub suites: Vec<IntegralSuite>,
    pub topology: Option<TopologyReport>,
    pub packet: Option<CurvaturePacket>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    fn gate(&mut self, g: Gate) {
        g.record(&mut self.report);
        self.gates.push(g);
    }

    fn finish(&mut self) {
        let failed: Vec<&str> = self.gates.iter().filter(|g| !g.passed).map(|g| g.name.as_str()).collect();
        self.report.int("gates.total", self.gates.len() as i64);
        self.report.int("gates.failed", failed.len() as i64);
        self.report.push("gates.failed_names", failed.join(","));
        self.report.push("status", if failed.is_empty() { "pass" } else { "fail" });
    }
}

fn quadrature_spec(cfg: &RunConfig) -> QuadratureSpec {
    QuadratureSpec {
        nodes: cfg.numerics.quadrature_nodes,
        tolerance: cfg.numerics.tol_integrals,
        orientation: 1.0,
    }
}

fn header(cfg: &RunConfig, model: &Model, command: &str) -> Report {
    let mut r = Report::new();
    r.push("command", command);
    r.push("model", model.spec.to_string());
    r.push("model.family", model.spec.name());
    r.flag("model.einstein", model.flags.einstein);
    r.flag("model.closed", model.flags.closed);
    r.flag("model.yamabe_positive", model.flags.yamabe_positive);
    r.int("model.chi", model.flags.known_chi);
    if let Some(t) = model.flags.known_tau {
        r.int("model.tau", t);
    }
    if let Some(s) = model.boundary_scalar {
        r.num("model.boundary_scalar", s);
    }
    let n = &cfg.numerics;
    r.push(
        "numerics.ladder",
        n.ladder.iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(","),
    );
    r.num("numerics.tol_quadrature", n.tol_quadrature);
    r.num("numerics.tol_fit", n.tol_fit);
    r.num("numerics.tol_integrals", n.tol_integrals);
    r.int("numerics.quadrature_nodes", n.quadrature_nodes as i64);
    r.num("numerics.tol_compactification", n.tol_compactification);
    r
}

fn volume_options(cfg: &RunConfig) -> VolumeOptions {
    VolumeOptions {
        quadrature_tol: cfg.numerics.tol_quadrature,
        fit_tol: cfg.numerics.tol_fit,
        ..VolumeOptions::default()
    }
}

fn record_volume(out: &mut Outcome, model: &Model, fit: &VolumeFit) {
    let r = &mut out.report;
    r.num("volume.v", fit.v);
    r.num("volume.c0", fit.c0);
    r.num("volume.c2", fit.c2);
    for (k, t) in fit.tail.iter().enumerate() {
        r.num(format!("volume.tail{}", k + 1), *t);
    }
    r.num("volume.boundary_volume", fit.boundary_volume);
    r.num("volume.c0_defect", fit.c0_defect());
    r.num("volume.fit_residual", fit.residual);
    r.num("volume.condition", fit.condition);
    r.num("volume.stability", fit.stability);
    r.num("volume.even_leakage", fit.even_leakage);
    r.num("volume.quadrature_error", fit.quadrature_error);
    if let Ok(exact) = exact_reference(&model.spec) {
        if let Some(v) = exact.renormalized_volume {
            r.num("volume.v_exact", v);
            r.num("volume.v_error", (fit.v - v).abs());
        }
    }
}

/// Renormalized volume fit only.
pub fn run_volume(cfg: &RunConfig) -> Result<Outcome> {
    let model = instantiate(&cfg.model).stage("models")?;
    let fg = model.fg().stage("models")?;
    let mut out = Outcome {
        report: header(cfg, &model, "volume"),
        ..Outcome::default()
    };
    let fit = fit_renormalized_volume(fg, &cfg.numerics.ladder, &volume_options(cfg)).stage("volume_renorm")?;
    record_volume(&mut out, &model, &fit);
    out.gate(Gate::below("volume.fit_residual", fit.residual, cfg.numerics.tol_fit));
    out.gate(Gate::below("volume.stability", fit.stability, 10.0 * cfg.numerics.tol_fit));
    out.volume = Some(fit);
    out.finish();
    Ok(out)
}

/// Curvature packet at `point` (default: centre of the chart box).
pub fn run_curvature(cfg: &RunConfig, point: Option<&[f64]>) -> Result<Outcome> {
    let model = instantiate(&cfg.model).stage("models")?;
    let metric = &model.metric;
    let d = metric.domain();
    let p: Vec<f64> = match point {
        Some(p) => {
            if p.len() != metric.dim() {
                return Err(Error::InvalidInput(format!(
                    "point has {} coordinates, the chart needs {}",
                    p.len(),
                    metric.dim()
                )));
            }
            p.to_vec()
        }
        None => d.lower.iter().zip(&d.upper).map(|(a, b)| 0.5 * (a + b)).collect(),
    };
    let c = curvature(metric, &p, 1.0).stage("tensor_core")?;
    let mut out = Outcome {
        report: header(cfg, &model, "curvature"),
        ..Outcome::default()
    };
    let r = &mut out.report;
    r.push("point", p.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","));
    r.num("curvature.volume_density", c.volume_density);
    r.num("curvature.scalar", c.scalar);
    r.num("curvature.sigma2", c.sigma2);
    r.num("curvature.sigma2_from_eigenvalues", c.sigma2_from_eigenvalues);
    r.num("curvature.traceless_ricci_norm2", c.traceless_ricci_norm2);
    r.num("curvature.weyl_norm2", c.weyl_norm2);
    if let (Some(a), Some(b)) = (c.weyl_plus_norm2, c.weyl_minus_norm2) {
        r.num("curvature.weyl_plus_norm2", a);
        r.num("curvature.weyl_minus_norm2", b);
    }
    for i in 0..c.dim {
        for j in i..c.dim {
            r.num(format!("curvature.ricci.{i}{j}"), c.ricci[i][j]);
        }
    }
    for i in 0..c.dim {
        for j in i..c.dim {
            r.num(format!("curvature.schouten.{i}{j}"), c.schouten[i][j]);
        }
    }
    let bianchi = c.bianchi_defect();
    let sigma2 = c.sigma2_defect();
    let split = c.weyl_split_defect() / c.weyl_norm2.abs().max(1.0);
    out.gate(Gate::below("curvature.bianchi_defect", bianchi, 1e-10));
    out.gate(Gate::below("curvature.sigma2_defect", sigma2, 1e-10));
    out.gate(Gate::below("curvature.weyl_split_defect", split, 1e-10));
    out.packet = Some(c);
    out.finish();
    Ok(out)
}

/// The full pipeline for one model.
pub fn run_analyze(cfg: &RunConfig) -> Result<Outcome> {
    let model = instantiate(&cfg.model).stage("models")?;
    let mut out = Outcome {
        report: header(cfg, &model, "analyze"),
        ..Outcome::default()
    };
    if model.flags.closed {
        analyze_closed(cfg, &model, &mut out)?;
    } else {
        analyze_collar(cfg, &model, &mut out)?;
    }
    out.finish();
    Ok(out)
}

fn analyze_closed(cfg: &RunConfig, model: &Model, out: &mut Outcome) -> Result<()> {
    let suite = integrate_curvature(&model.metric, &quadrature_spec(cfg), DomainTag::ClosedModel, None)
        .stage("gb_invariants")?;
    out.report.extend_numbers("closed.", suite.entries(""));
    let scale = 8.0 * PI * PI;
    out.gate(Gate::below(
        "closed.euler_matches_topology",
        (suite.euler_gb - model.flags.known_chi as f64).abs(),
        1e-6,
    ));
    if let Some(t) = model.flags.known_tau {
        out.gate(Gate::below("closed.signature_matches_topology", (suite.signature - t as f64).abs(), 1e-6));
    }
    out.gate(Gate::below("closed.weyl_split_defect", suite.split_defect() / scale, cfg.numerics.tol_integrals));
    let (a, b) = combined_formulas(&suite).stage("gb_invariants")?;
    out.report.num("closed.combined_plus", a);
    out.report.num("closed.combined_minus", b);
    out.gate(Gate::below("closed.combined_formulas", a.abs().max(b.abs()) / scale, 1e-6));
    if let Some(exact) = exact_reference(&model.spec).ok().and_then(|e| e.integrals) {
        out.report.num("closed.sigma2_exact", exact.sigma2);
        out.report.num("closed.weyl_energy_exact", exact.weyl);
        out.gate(Gate::below(
            "closed.sigma2_matches_reference",
            (suite.sigma2_integral - exact.sigma2).abs() / scale,
            1e-6,
        ));
    }
    out.suites.push(suite);
    Ok(())
}

fn restrict_to_collar(metric: MetricField) -> MetricField {
    let mut d = metric.domain().clone();
    d.lower[0] = 0.0;
    metric.with_domain(d)
}

fn analyze_collar(cfg: &RunConfig, model: &Model, out: &mut Outcome) -> Result<()> {
    let fg = model.fg().stage("models")?;
    let tol_c = cfg.numerics.tol_compactification;
    let chi = model.flags.known_chi;
    let einstein = model.flags.einstein;

    // normal form
    let profile = fg.einstein_residual_profile(EINSTEIN_SAMPLES).stage("fg_form")?;
    let einstein_max = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    out.report.num("fg.einstein_residual_max", einstein_max);
    out.report.num("fg.gauge_defect", fg.gauge_defect());
    out.report.num("fg.s_max", fg.s_max());
    if einstein {
        out.gate(Gate::below("fg.einstein_residual", einstein_max, cfg.numerics.tol_einstein));
    }
    let y = fg.representative_point();
    let series = extract_expansion(fg, fg.n(), &y).stage("fg_form")?;
    let g2 = g2_closed_form(fg.boundary(), fg.n(), &y).stage("fg_form")?;
    if let Some(fit) = series.coefficient(2) {
        let mut d = 0.0f64;
        for i in 0..fg.n() {
            for j in 0..fg.n() {
                d = d.max((fit[i][j] - g2[i][j]).abs());
            }
        }
        out.report.num("fg.g2_defect", d);
        if einstein {
            out.gate(Gate::below("fg.g2_matches_closed_form", d, 1e-5));
        }
    }
    out.report.num("fg.expansion_residual", series.residual);
    if let Some(t) = series.trace_defect() {
        out.report.num("fg.g3_trace", t);
    }

    // renormalized volume
    // an unstable fit on a non-Einstein control is a failed gate, not an abort
    let volume = match fit_renormalized_volume(fg, &cfg.numerics.ladder, &volume_options(cfg)) {
        Ok(fit) => {
            record_volume(out, model, &fit);
            out.gate(Gate::below("volume.fit_residual", fit.residual, cfg.numerics.tol_fit));
            let v_uncertainty = fit.uncertainty().max(cfg.numerics.tol_fit);
            out.report.num("volume.uncertainty", v_uncertainty);
            let v = fit.v;
            out.volume = Some(fit);
            Some((v, v_uncertainty))
        }
        Err(e @ Error::UnstableFit { .. }) if !einstein => {
            out.report.push("volume.error", e.to_string());
            out.gate(Gate::flag("volume.fit_stable", false));
            None
        }
        Err(e) => return Err(e).stage("volume_renorm"),
    };

    // eigenfunction and compactification
    let sol = solve_eigenfunction(fg).stage("compactify")?;
    let asym = asymptotic_coefficients(fg.boundary(), fg.n(), &y).stage("compactify")?;
    let r = &mut out.report;
    r.num("eigenfunction.w2", sol.w2);
    r.num("eigenfunction.w2_expected", asym.w2);
    r.num("eigenfunction.pde_residual", sol.pde_residual);
    r.num("eigenfunction.asymptotic_residual", sol.asymptotic_residual);
    r.num("eigenfunction.u_at_s_max", sol.u(sol.s_max));
    r.int("eigenfunction.degree", sol.refinement.last().map_or(0, |x| x.0 as i64));
    let min_u = sol.u_values.iter().skip(1).cloned().fold(f64::INFINITY, f64::min);
    r.num("eigenfunction.min_u", min_u);
    out.gate(Gate::below("eigenfunction.pde_residual", sol.pde_residual, tol_c));
    if einstein {
        out.gate(Gate::below("eigenfunction.w2_matches_boundary", (sol.w2 - asym.w2).abs(), tol_c));
    }
    let checks = compactification_checks(&sol, fg, tol_c).stage("compactify")?;
    record_checks(out, &checks);
    out.gate(Gate::below("compactify.second_fundamental_form", checks.second_fundamental_form, tol_c));
    out.gate(Gate::above("compactify.scalar_margin", checks.scalar_margin, -tol_c));
    out.gate(Gate::below("compactify.bochner_residual", checks.bochner_residual, tol_c));

    // curvature integrals
    let spec = quadrature_spec(cfg);
    let interior = fg.interior_extension().cloned().unwrap_or_else(|| fg.interior_metric());
    let geodesic = (checks.second_fundamental_form_ok, checks.second_fundamental_form);
    let metric = restrict_to_collar(compactified(&sol, fg));
    let integrals = weyl_energy(&interior, &spec).and_then(|w| {
        integrate_curvature(&metric, &spec, DomainTag::WithBoundary, Some(geodesic)).map(|s| (w, s))
    });
    let ((weyl_x, weyl_err), suite_x) = match integrals {
        Ok(x) => x,
        Err(e @ (Error::BoundaryNotGeodesic { .. } | Error::QuadratureTolerance { .. })) if !einstein => {
            out.report.push("integrals.skipped", e.to_string());
            out.report.push("topology.skipped", "metric is not Einstein");
            out.gate(Gate::flag("integrals.converged", false));
            out.eigenfunction = Some((sol, fg.clone()));
            return Ok(());
        }
        Err(e) => return Err(e).stage("gb_invariants"),
    };
    out.report.num("integrals.weyl_energy_einstein", weyl_x);
    out.report.num("integrals.weyl_energy_einstein_error", weyl_err);
    out.report.extend_numbers("integrals.x.", suite_x.entries(""));
    let conformal_gap = (suite_x.weyl_energy - weyl_x).abs() / weyl_x.abs().max(8.0 * PI * PI);
    out.report.num("integrals.weyl_energy_conformal_gap", conformal_gap);
    let suite_y = suite_x.double().stage("gb_invariants")?;
    out.report.extend_numbers("integrals.y.", suite_y.entries(""));
    let (a, b) = combined_formulas(&suite_y).stage("gb_invariants")?;
    out.report.num("integrals.y.combined_plus", a);
    out.report.num("integrals.y.combined_minus", b);

    let Some((v, v_uncertainty)) = volume else {
        out.report.push("identity.skipped", "no renormalized volume");
        out.report.push("topology.skipped", "metric is not Einstein");
        out.suites.push(suite_x);
        out.suites.push(suite_y);
        out.eigenfunction = Some((sol, fg.clone()));
        return Ok(());
    };
    let residual = anderson_identity_residual(chi, weyl_x, v);
    let budget = 8.0 * PI * PI * chi.abs().max(1) as f64;
    out.report.num("identity.residual", residual);
    out.report.num("identity.relative", residual.abs() / budget);
    let bridge = sigma2_volume_bridge(&suite_x, chi, v, v_uncertainty);
    out.report.num("bridge.sigma2_direct", bridge.direct);
    out.report.num("bridge.six_v", bridge.six_v);
    out.report.num("bridge.gauss_bonnet", bridge.gauss_bonnet);
    out.report.num("bridge.defect", bridge.defect);
    out.report.num("bridge.tolerance", bridge.tolerance);
    if einstein {
        out.gate(Gate::below("identity.relative", residual.abs() / budget, cfg.numerics.tol_consistency));
        out.gate(Gate::below("bridge.sigma2_vs_six_v", bridge.defect, bridge.tolerance));
        out.gate(Gate::below("integrals.euler_matches_topology", (suite_x.euler_gb - chi as f64).abs(), 1e-4));
        out.gate(Gate::below("integrals.weyl_energy_conformal_gap", conformal_gap, 1e-6));
    }

    // decision layer
    if einstein {
        let inputs = TopologyInputs {
            chi_x: chi,
            v,
            weyl_energy: weyl_x,
            weyl_plus_y: suite_y.weyl_plus,
            weyl_minus_y: suite_y.weyl_minus,
            sigma2_y: suite_y.sigma2_integral,
            yamabe_positive: model.flags.yamabe_positive,
        };
        let opts = TopologyOptions {
            comparison_tol: cfg.numerics.tol_comparison,
            consistency_tol: cfg.numerics.tol_consistency,
        };
        let t = evaluate(&inputs, &opts);
        record_topology(out, &t);
        out.topology = Some(t);
    } else {
        out.report.push("topology.skipped", "metric is not Einstein");
    }
    out.suites.push(suite_x);
    out.suites.push(suite_y);
    out.eigenfunction = Some((sol, fg.clone()));
    Ok(())
}

fn record_checks(out: &mut Outcome, c: &CompactificationChecks) {
    let r = &mut out.report;
    r.num("compactify.boundary_scalar", c.boundary_scalar);
    r.num("compactify.second_fundamental_form", c.second_fundamental_form);
    r.num("compactify.min_scalar", c.min_scalar);
    r.num("compactify.scalar_margin", c.scalar_margin);
    r.num("compactify.bochner_residual", c.bochner_residual);
    r.num("compactify.energy_min_margin", c.energy_min_margin);
    r.num("compactify.scalar_cross_check", c.scalar_cross_check);
}

fn record_topology(out: &mut Outcome, t: &TopologyReport) {
    let r = &mut out.report;
    r.num("topology.identity_residual", t.identity_residual);
    r.flag("topology.consistent", t.consistent);
    for c in t.checks.iter().chain(t.homology.all()) {
        let k = format!("topology.check.{}", c.name);
        r.push(k.clone(), c.verdict.as_str());
        r.num(format!("{k}.value"), c.value);
        r.num(format!("{k}.threshold"), c.threshold);
        r.num(format!("{k}.margin"), c.margin);
        if let Some(n) = &c.note {
            r.push(format!("{k}.note"), n.as_str());
        }
    }
    r.flag("topology.homology_equivalence", t.homology.equivalent());
    r.int("topology.conclusions", t.conclusions.len() as i64);
    for (i, c) in t.conclusions.iter().enumerate() {
        r.push(format!("topology.conclusion.{i}"), c.statement.as_str());
        r.push(format!("topology.conclusion.{i}.chain"), c.chain.join(","));
    }
    for (i, n) in t.notes.iter().enumerate() {
        r.push(format!("topology.note.{i}"), n.as_str());
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

/// Writes the report and tables selected in `outputs`; returns the paths.
pub fn write_outputs(outcome: &Outcome, outputs: &Outputs, stem: &str) -> Result<Vec<PathBuf>> {
    let dir = &outputs.dir;
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut push = |name: String| written.push(dir.join(name));
    if outputs.report {
        let name = format!("{stem}_report.txt");
        outcome.report.write_to(create(dir, &name)?)?;
        push(name);
    }
    if outputs.csv {
        if let Some(fit) = &outcome.volume {
            let name = format!("{stem}_volume.csv");
            fit.write_csv(create(dir, &name)?)?;
            push(name);
        }
        if let Some((sol, fg)) = &outcome.eigenfunction {
            let name = format!("{stem}_eigenfunction.csv");
            write_solution_csv(create(dir, &name)?, sol, fg)?;
            push(name);
        }
        if !outcome.suites.is_empty() {
            let name = format!("{stem}_integrals.csv");
            write_suites_csv(create(dir, &name)?, &outcome.suites)?;
            push(name);
        }
        if let Some(t) = &outcome.topology {
            let name = format!("{stem}_topology.csv");
            write_topology_csv(create(dir, &name)?, t)?;
            push(name);
        }
        if let Some(c) = &outcome.packet {
            let name = format!("{stem}_riemann.csv");
            write_packet_csv(create(dir, &name)?, c)?;
            push(name);
        }
    }
    if outputs.raw_grids {
        if let Some((sol, _)) = &outcome.eigenfunction {
            let name = format!("{stem}_grid.csv");
            let mut f = create(dir, &name)?;
            writeln!(f, "{GRID_HEADER}")?;
            let mut w = csv::Writer::from_writer(f);
            w.write_record(["s", "u"])?;
            for (s, u) in sol.grid.iter().zip(&sol.u_values) {
                w.write_record([format!("{s:.17e}"), format!("{u:.17e}")])?;
            }
            w.flush()?;
            push(name);
        }
    }
    Ok(written)
}

pub fn write_suites_csv<W: Write>(mut out: W, suites: &[IntegralSuite]) -> Result<()> {
    writeln!(out, "{INTEGRALS_HEADER}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["domain", "quantity", "value"])?;
    for s in suites {
        for (k, v) in s.entries("") {
            w.write_record([s.domain_tag.as_str().to_string(), k, format!("{v:.17e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_topology_csv<W: Write>(mut out: W, t: &TopologyReport) -> Result<()> {
    writeln!(out, "{CHECKS_HEADER}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "value", "threshold", "margin", "verdict"])?;
    for c in t.checks.iter().chain(t.homology.all()) {
        w.write_record([
            c.name.clone(),
            format!("{:.17e}", c.value),
            format!("{:.17e}", c.threshold),
            format!("{:.17e}", c.margin),
            c.verdict.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Nonzero Riemann components `R_ijkl` with `i < j`, `k < l`.
pub fn write_packet_csv<W: Write>(mut out: W, c: &CurvaturePacket) -> Result<()> {
    writeln!(out, "{PACKET_HEADER}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "k", "l", "riemann"])?;
    let d = c.dim;
    for i in 0..d {
        for j in i + 1..d {
            for k in 0..d {
                for l in k + 1..d {
                    let v = c.riemann.get(i, j, k, l);
                    if v != 0.0 {
                        w.write_record([
                            i.to_string(),
                            j.to_string(),
                            k.to_string(),
                            l.to_string(),
                            format!("{v:.17e}"),
                        ])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
