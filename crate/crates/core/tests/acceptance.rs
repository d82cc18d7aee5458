//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the test
//! fails if any criterion does.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cce_core::compactify::{
    compactification_checks, compactified_scalar, indicial_roots, solve_eigenfunction, w2_rational,
};
use cce_core::fg::{extract_expansion, g2_closed_form};
use cce_core::gb::{
    anderson_identity_residual, conformal_invariance, integrate_curvature, random_conformal_factors, weyl_energy,
    DomainTag, QuadratureSpec,
};
use cce_core::models::{closed_model_functions, instantiate, ModelSpec};
use cce_core::pipeline::{run_check, Fault, Numerics};
use cce_core::topology::{
    betti_parity_argument, evaluate, strong_volume_criterion, weak_volume_criterion, TopologyInputs,
    TopologyOptions, DEFAULT_COMPARISON_TOL,
};
use cce_core::volume::{default_ladder, fit_renormalized_volume, VolumeOptions};

const PI2: f64 = PI * PI;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

/// `2π² ∫_ε^2 s⁻⁴ (1 − s²/4)³ ds` from the antiderivative
/// `−s⁻³/3 + 3/(4s) + 3s/16 − s³/192`.
fn hyperbolic_volume_oracle() -> (f64, f64, f64) {
    let at_two = -1.0 / 24.0 + 3.0 / 8.0 + 3.0 / 8.0 - 8.0 / 192.0;
    // Vol(ε) = 2π² (at_two + ε⁻³/3 − 3/(4ε) − 3ε/16 + ε³/192)
    (2.0 * PI2 / 3.0, -2.0 * PI2 * 0.75, 2.0 * PI2 * at_two)
}

fn c1_hyperbolic_volume() -> Outcome {
    let start = Instant::now();
    let model = instantiate(&ModelSpec::Hyperbolic).map_err(|e| e.to_string())?;
    let fit = fit_renormalized_volume(model.fg().unwrap(), &default_ladder(), &VolumeOptions::default())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let (c0, c2, v) = hyperbolic_volume_oracle();
    let (dv, dc0, dc2) = ((fit.v - v).abs(), (fit.c0 - c0).abs(), (fit.c2 - c2).abs());
    ensure(dv < 1e-6 && dc0 < 1e-6 && dc2 < 1e-6, format!("|dV| {dv:.2e}, |dc0| {dc0:.2e}, |dc2| {dc2:.2e}"))?;
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("|dV| {dv:.2e}, |dc0| {dc0:.2e}, |dc2| {dc2:.2e}, {elapsed:.2?}"))
}

fn c2_hyperbolic_identity() -> Outcome {
    let model = instantiate(&ModelSpec::Hyperbolic).map_err(|e| e.to_string())?;
    let fit = fit_renormalized_volume(model.fg().unwrap(), &default_ladder(), &VolumeOptions::default())
        .map_err(|e| e.to_string())?;
    let r = anderson_identity_residual(1, 0.0, fit.v).abs();
    ensure(r < 1e-5, format!("residual {r:.2e}"))?;
    Ok(format!("residual {r:.2e}"))
}

fn c3_eigenfunction() -> Outcome {
    let model = instantiate(&ModelSpec::Hyperbolic).map_err(|e| e.to_string())?;
    let fg = model.fg().unwrap();
    let sol = solve_eigenfunction(fg).map_err(|e| e.to_string())?;
    let mut sup = 0.0f64;
    let mut scalar = 0.0f64;
    for k in 1..=400 {
        let s = fg.s_max() * k as f64 / 400.0;
        sup = sup.max((sol.u(s) - (1.0 / s + s / 4.0)).abs());
        let r = compactified_scalar(&sol, fg, s).map_err(|e| e.to_string())?;
        scalar = scalar.max((r - 12.0).abs());
    }
    let c = compactification_checks(&sol, fg, 1e-6).map_err(|e| e.to_string())?;
    let msg = format!(
        "sup|u - exact| {sup:.2e}, |R - 12| {scalar:.2e}, bochner {:.2e}, II {:.2e}",
        c.bochner_residual, c.second_fundamental_form
    );
    ensure(
        sup < 1e-8 && scalar < 1e-5 && c.bochner_residual < 1e-6 && c.second_fundamental_form < 1e-6,
        msg.clone(),
    )?;
    Ok(msg)
}

fn c4_scalar_bound() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let mut specs: Vec<ModelSpec> = ModelSpec::library();
    specs.extend([ModelSpec::AdsSchwarzschild { m: 0.3 }, ModelSpec::AdsSchwarzschild { m: 3.0 }]);
    for spec in specs {
        let model = instantiate(&spec).map_err(|e| e.to_string())?;
        if !model.flags.einstein || model.flags.closed {
            continue;
        }
        let fg = model.fg().unwrap();
        let sol = solve_eigenfunction(fg).map_err(|e| e.to_string())?;
        let c = compactification_checks(&sol, fg, 1e-4).map_err(|e| e.to_string())?;
        ok &= c.scalar_margin >= -1e-4;
        parts.push(format!("{spec}: {:.2e}", c.scalar_margin));
    }
    let msg = format!("min R - 2R^ per model: {}", parts.join("; "));
    ensure(ok && parts.len() >= 3, msg.clone())?;
    Ok(msg)
}

fn c5_ads_cross_pipeline() -> Outcome {
    let start = Instant::now();
    let model = instantiate(&ModelSpec::AdsSchwarzschild { m: 1.0 }).map_err(|e| e.to_string())?;
    let fg = model.fg().unwrap();
    let fit = fit_renormalized_volume(fg, &default_ladder(), &VolumeOptions::default()).map_err(|e| e.to_string())?;
    let interior = fg.interior_extension().cloned().unwrap_or_else(|| fg.interior_metric());
    let (w, _) = weyl_energy(&interior, &QuadratureSpec::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let rel = anderson_identity_residual(2, w, fit.v).abs() / (8.0 * PI2 * 2.0);
    let msg = format!("relative residual {rel:.2e} (V {:.6}, W {:.6}), {elapsed:.2?}", fit.v, w);
    ensure(rel < 1e-3 && elapsed < Duration::from_secs(60), msg.clone())?;
    Ok(msg)
}

fn c6_closed_goldens() -> Outcome {
    let spec = QuadratureSpec::default();
    let s4 = instantiate(&ModelSpec::RoundSphereClosed).map_err(|e| e.to_string())?;
    let a = integrate_curvature(&s4.metric, &spec, DomainTag::ClosedModel, None).map_err(|e| e.to_string())?;
    let torus = instantiate(&ModelSpec::FlatTorusClosed).map_err(|e| e.to_string())?;
    let t = integrate_curvature(&torus.metric, &spec, DomainTag::ClosedModel, None).map_err(|e| e.to_string())?;
    let ds = (a.sigma2_integral - 16.0 * PI2).abs();
    let dchi = (a.euler_gb - 2.0).abs();
    let tau = a.signature.abs();
    let flat = [t.weyl_energy, t.weyl_plus, t.weyl_minus, t.sigma2_integral, t.euler_gb, t.signature]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let msg = format!("S4: |d sigma2| {ds:.2e}, |d chi| {dchi:.2e}, |tau| {tau:.2e}; torus max {flat:.2e}");
    ensure(ds < 1e-6 && dchi < 1e-6 && tau < 1e-8 && flat < 1e-10, msg.clone())?;
    Ok(msg)
}

fn c7_conformal_invariance() -> Outcome {
    let spec = ModelSpec::ProductS2S2 { r1: 1.0, r2: 1.0 };
    let model = instantiate(&spec).map_err(|e| e.to_string())?;
    let fs = closed_model_functions(&spec).map_err(|e| e.to_string())?;
    let factors = random_conformal_factors(&fs, 5, 0.3, 20_240_601);
    let q = QuadratureSpec {
        nodes: 16,
        ..QuadratureSpec::default()
    };
    let c = conformal_invariance(&model.metric, &factors, &q).map_err(|e| e.to_string())?;
    let msg = format!(
        "S2xS2, 5 factors: base {:.6}, max relative deviation {:.2e}",
        c.base, c.max_relative_deviation
    );
    ensure(c.rescaled.len() == 5 && c.base > 1.0 && c.max_relative_deviation < 1e-6, msg.clone())?;
    Ok(msg)
}

fn c8_coefficients() -> Outcome {
    ensure(indicial_roots(3) == (-1, 4), format!("indicial roots {:?}", indicial_roots(3)))?;
    let w2 = w2_rational(6, 1, 3).map_err(|e| e.to_string())?;
    ensure(w2 == (1, 4), format!("w2 = {}/{}", w2.0, w2.1))?;
    let mut parts = Vec::new();
    let mut ok = true;
    for spec in [ModelSpec::Hyperbolic, ModelSpec::AdsSchwarzschild { m: 1.0 }, ModelSpec::TaubNutAds { n: 0.4 }] {
        let model = instantiate(&spec).map_err(|e| e.to_string())?;
        let fg = model.fg().unwrap();
        let y = fg.representative_point();
        let series = extract_expansion(fg, 3, &y).map_err(|e| e.to_string())?;
        let fit = series.coefficient(2).ok_or("no s^2 coefficient")?;
        let exact = g2_closed_form(fg.boundary(), 3, &y).map_err(|e| e.to_string())?;
        let mut d = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((fit[i][j] - exact[i][j]).abs());
            }
        }
        ok &= d < 1e-5;
        parts.push(format!("{}: {d:.2e}", spec.name()));
    }
    let msg = format!("roots (-1, 4), w2 = 1/4, g2 defects {}", parts.join(", "));
    ensure(ok, msg.clone())?;
    Ok(msg)
}

fn c9_betti_parity() -> Outcome {
    let ks = betti_parity_argument(0..=100);
    ensure(ks == vec![0], format!("{ks:?}"))?;
    Ok("k in [0, 100] -> {0}".into())
}

fn c10_decision_layer() -> Outcome {
    let v = 4.0 * PI2 / 3.0;
    let report = evaluate(&TopologyInputs::from_volume(1, v, 0.0, true), &TopologyOptions::default());
    let weak = report.check("volume_criterion_weak").unwrap();
    let strong = report.check("volume_criterion_strong").unwrap();
    let note = report.check("volume_upper_bound").and_then(|c| c.note.clone()).unwrap_or_default();
    ensure(
        weak.passes() && strong.passes() && note.contains("hyperbolic") && note.contains("round 4-sphere"),
        format!("weak {}, strong {}, note '{note}'", weak.verdict, strong.verdict),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut strong_passes = 0;
    for _ in 0..1000 {
        let chi = rng.random_range(1..=6i64);
        let v = rng.random_range(0.0..4.0 * PI2 / 3.0);
        let s = strong_volume_criterion(chi, v, true, DEFAULT_COMPARISON_TOL);
        let w = weak_volume_criterion(chi, v, true, DEFAULT_COMPARISON_TOL);
        if s.passes() {
            strong_passes += 1;
            ensure(w.passes(), format!("strong passes but weak fails at chi {chi}, V {v}"))?;
        }
    }
    ensure(strong_passes > 0, "no sample passed the strong criterion".into())?;
    Ok(format!("hyperbolic passes both with rigidity note; ordering holds on 1000 samples ({strong_passes} strong passes)"))
}

fn c11_negative_controls() -> Outcome {
    let spec = ModelSpec::PerturbedHyperbolic { amplitude: 0.1, power: 2 };
    let model = instantiate(&spec).map_err(|e| e.to_string())?;
    let fg = model.fg().unwrap();
    let einstein = fg.einstein_residual_profile(16).map_err(|e| e.to_string())?;
    let worst = einstein.iter().map(|p| p.1).fold(0.0, f64::max);
    let sol = solve_eigenfunction(fg).map_err(|e| e.to_string())?;
    let c = compactification_checks(&sol, fg, 1e-4).map_err(|e| e.to_string())?;
    let check = run_check(&[ModelSpec::Hyperbolic], &Numerics::default(), Some(Fault::BianchiSymmetry))
        .map_err(|e| e.to_string())?;
    let bianchi = check.gates.iter().find(|g| g.name == "hyperbolic.bianchi").ok_or("no bianchi gate")?;
    let msg = format!(
        "einstein residual {worst:.2e}, bochner {:.2e} (flag {}), injected bianchi defect {:.2e} -> run_check {}",
        c.bochner_residual,
        if c.bochner_ok { "ok" } else { "tripped" },
        bianchi.value,
        if check.passed() { "passed" } else { "failed" }
    );
    ensure(worst > 1e-4 && !c.bochner_ok && !bianchi.passed && !check.passed(), msg.clone())?;
    Ok(msg)
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Criterion); 11] = [
        ("hyperbolic renormalized volume", c1_hyperbolic_volume),
        ("identity on hyperbolic space", c2_hyperbolic_identity),
        ("eigenfunction exactness", c3_eigenfunction),
        ("compactified scalar curvature bound", c4_scalar_bound),
        ("AdS-Schwarzschild cross-pipeline identity", c5_ads_cross_pipeline),
        ("closed-manifold goldens", c6_closed_goldens),
        ("conformal invariance of Weyl energy", c7_conformal_invariance),
        ("indicial and asymptotic coefficients", c8_coefficients),
        ("Betti parity sweep", c9_betti_parity),
        ("decision-layer regressions", c10_decision_layer),
        ("negative controls", c11_negative_controls),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
