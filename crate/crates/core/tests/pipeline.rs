use std::f64::consts::PI;

use cce_core::models::ModelSpec;
use cce_core::pipeline::*;

fn config(model: ModelSpec) -> RunConfig {
    RunConfig { model, ..RunConfig::default() }
}

#[test]
fn hyperbolic_analysis_passes_every_gate() {
    let out = run_analyze(&config(ModelSpec::Hyperbolic)).unwrap();
    let r = &out.report;
    assert!(out.passed(), "{:?}", r.get("gates.failed_names"));
    let v = r.get_f64("volume.v").unwrap();
    assert!((v - 4.0 * PI * PI / 3.0).abs() < 1e-6);
    assert_eq!(r.get("topology.check.volume_criterion_weak"), Some("pass"));
    assert_eq!(r.get("topology.check.volume_criterion_strong"), Some("pass"));
    assert!(r.get("topology.check.volume_upper_bound.note").unwrap().contains("round 4-sphere"));
}

#[test]
fn ads_analysis_closes_the_identity() {
    let out = run_analyze(&config(ModelSpec::AdsSchwarzschild { m: 1.0 })).unwrap();
    let r = &out.report;
    assert!(out.passed(), "{:?}", r.get("gates.failed_names"));
    assert!(r.get_f64("identity.relative").unwrap() < 1e-3);
}

#[test]
fn check_suite_passes_on_the_library_and_trips_on_a_fault() {
    let models = ModelSpec::library();
    let numerics = Numerics::default();
    let clean = run_check(&models, &numerics, None).unwrap();
    let failed: Vec<_> = clean.gates.iter().filter(|g| !g.passed).map(|g| &g.name).collect();
    assert!(failed.is_empty(), "{failed:?}");
    assert!(clean.report.get("gate.perturbed_hyperbolic.einstein_trips.value").is_some());

    let faulty = run_check(&[ModelSpec::Hyperbolic], &numerics, Some(Fault::BianchiSymmetry)).unwrap();
    assert!(!faulty.passed());
    assert_eq!(faulty.report.get("gate.hyperbolic.bianchi"), Some("fail"));
    assert_eq!(faulty.report.get("status"), Some("fail"));
}

#[test]
fn perturbed_model_fails_its_gates_and_draws_no_conclusions() {
    let spec = ModelSpec::PerturbedHyperbolic { amplitude: 0.1, power: 2 };
    let out = run_analyze(&config(spec)).unwrap();
    let r = &out.report;
    assert!(!out.passed());
    assert_eq!(r.get("gate.compactify.bochner_residual"), Some("fail"));
    assert!(r.get_f64("fg.einstein_residual_max").unwrap() > 1e-4);
    assert!(out.topology.is_none());
    assert_eq!(r.get("topology.skipped"), Some("metric is not Einstein"));
}

#[test]
fn closed_model_analysis_matches_references() {
    let out = run_analyze(&config(ModelSpec::RoundSphereClosed)).unwrap();
    let r = &out.report;
    assert!(out.passed(), "{:?}", r.get("gates.failed_names"));
    assert!((r.get_f64("closed.sigma2_integral").unwrap() - 16.0 * PI * PI).abs() < 1e-6);
    assert!((r.get_f64("closed.euler_gb").unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn outputs_are_bit_identical_across_runs() {
    let cfg = config(ModelSpec::Hyperbolic);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut files = Vec::new();
    for d in &dirs {
        let outputs = Outputs { dir: d.path().to_path_buf(), raw_grids: true, ..Outputs::default() };
        let out = run_analyze(&cfg).unwrap();
        files.push(write_outputs(&out, &outputs, "hyperbolic").unwrap());
    }
    assert_eq!(files[0].len(), 6);
    for (a, b) in files[0].iter().zip(&files[1]) {
        let (ta, tb) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        assert_eq!(ta, tb, "{}", a.display());
        if a.extension().is_some_and(|e| e == "csv") {
            assert!(String::from_utf8(ta).unwrap().starts_with("# cce "), "{}", a.display());
        }
    }
    let text = std::fs::read_to_string(&files[0][0]).unwrap();
    let parsed = Report::parse(&text).unwrap();
    assert_eq!(parsed.get("status"), Some("pass"));
}

#[test]
fn volume_and_curvature_runs() {
    let out = run_volume(&config(ModelSpec::Hyperbolic)).unwrap();
    assert!(out.passed());
    assert!(out.report.get_f64("volume.v_error").unwrap() < 1e-6);
    let cfg = config(ModelSpec::RoundSphereClosed);
    let out = run_curvature(&cfg, None).unwrap();
    assert!(out.passed());
    assert!((out.report.get_f64("curvature.scalar").unwrap() - 12.0).abs() < 1e-6);
    assert!(run_curvature(&cfg, Some(&[0.1, 0.2])).is_err());
}
