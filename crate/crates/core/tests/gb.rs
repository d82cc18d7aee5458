use std::f64::consts::PI;
use std::sync::Arc;

use cce_core::compactify::{compactified, solve_eigenfunction};
use cce_core::gb::*;
use cce_core::models::{ads_horizon_radius, ads_period, ads_schwarzschild_chart, closed_model_functions, exact_reference, instantiate, ModelSpec};
use cce_core::tensor::MetricField;
use cce_core::Error;

const PI2: f64 = PI * PI;

fn closed_suite(spec: &ModelSpec, orientation: f64) -> IntegralSuite {
    let model = instantiate(spec).unwrap();
    let q = QuadratureSpec { orientation, ..QuadratureSpec::default() };
    integrate_curvature(&model.metric, &q, DomainTag::ClosedModel, None).unwrap()
}

/// Restricts a compactified collar metric to `s ∈ [0, s_max]`.
fn on_collar(metric: MetricField) -> MetricField {
    let mut d = metric.domain().clone();
    d.lower[0] = 0.0;
    metric.with_domain(d)
}

#[test]
fn round_sphere_goldens() {
    let s = closed_suite(&ModelSpec::RoundSphereClosed, 1.0);
    assert!((s.sigma2_integral - 16.0 * PI2).abs() < 1e-6, "{s:?}");
    assert!((s.euler_gb - 2.0).abs() < 1e-6);
    assert!(s.signature.abs() < 1e-8);
    assert!(s.weyl_energy.abs() < 1e-8);
    assert!((s.volume - 8.0 * PI2 / 3.0).abs() < 1e-8);
}

#[test]
fn flat_torus_integrals_vanish() {
    let s = closed_suite(&ModelSpec::FlatTorusClosed, 1.0);
    for v in [s.weyl_energy, s.weyl_plus, s.weyl_minus, s.sigma2_integral, s.euler_gb, s.signature] {
        assert!(v.abs() < 1e-10);
    }
}

#[test]
fn closed_models_match_their_references() {
    for spec in [
        ModelSpec::ProductS2S2 { r1: 1.0, r2: 1.0 },
        ModelSpec::ProductS2S2 { r1: 1.0, r2: 1.5 },
        ModelSpec::ComplexProjective,
    ] {
        let s = closed_suite(&spec, 1.0);
        let exact = exact_reference(&spec).unwrap().integrals.unwrap();
        let scale = 8.0 * PI2;
        assert!((s.sigma2_integral - exact.sigma2).abs() < 1e-6 * scale, "{spec}: {s:?}");
        assert!((s.weyl_energy - exact.weyl).abs() < 1e-6 * scale, "{spec}: {s:?}");
        assert!((s.euler_gb - exact.euler).abs() < 1e-6, "{spec}: {s:?}");
        assert!((s.signature - exact.signature).abs() < 1e-6, "{spec}: {s:?}");
        assert!(s.split_defect() < 1e-8 * scale);
        let (a, b) = combined_formulas(&s).unwrap();
        assert!(a.abs() < 1e-6 * scale && b.abs() < 1e-6 * scale, "{spec}: {a} {b}");
    }
}

#[test]
fn orientation_reversal_swaps_chiralities() {
    let a = closed_suite(&ModelSpec::ComplexProjective, 1.0);
    let b = closed_suite(&ModelSpec::ComplexProjective, -1.0);
    assert!((a.weyl_plus - b.weyl_minus).abs() < 1e-8 * a.weyl_energy);
    assert!((a.weyl_minus - b.weyl_plus).abs() < 1e-8 * a.weyl_energy);
    assert!((a.signature + b.signature).abs() < 1e-10);
    assert!((a.euler_gb - b.euler_gb).abs() < 1e-12);
}

#[test]
fn positive_yamabe_models_stay_below_the_sphere_value() {
    let sphere = 16.0 * PI2;
    for spec in ModelSpec::library() {
        let model = instantiate(&spec).unwrap();
        if !model.flags.closed || !model.flags.yamabe_positive {
            continue;
        }
        let s = closed_suite(&spec, 1.0);
        if spec == ModelSpec::RoundSphereClosed {
            assert!((s.sigma2_integral - sphere).abs() < 1e-6);
        } else {
            assert!(s.sigma2_integral < sphere - 1.0, "{spec}: {}", s.sigma2_integral);
        }
    }
}

#[test]
fn weyl_energy_is_conformally_invariant() {
    let spec = ModelSpec::ProductS2S2 { r1: 1.0, r2: 1.0 };
    let model = instantiate(&spec).unwrap();
    let fs = closed_model_functions(&spec).unwrap();
    let factors = random_conformal_factors(&fs, 5, 0.3, 7);
    let q = QuadratureSpec { nodes: 16, ..QuadratureSpec::default() };
    let c = conformal_invariance(&model.metric, &factors, &q).unwrap();
    assert!((c.base - 256.0 * PI2 / 3.0).abs() < 1e-6 * c.base);
    assert!(c.max_relative_deviation < 1e-6, "{c:?}");
}

#[test]
fn hemisphere_has_half_the_sphere_integrals() {
    let model = instantiate(&ModelSpec::Hyperbolic).unwrap();
    let fg = model.fg().unwrap();
    let sol = solve_eigenfunction(fg).unwrap();
    let metric = on_collar(compactified(&sol, fg));
    let q = QuadratureSpec::default();
    let x = integrate_curvature(&metric, &q, DomainTag::WithBoundary, Some((true, 0.0))).unwrap();
    assert!((x.euler_gb - 1.0).abs() < 1e-6, "{x:?}");
    assert!((x.sigma2_integral - 8.0 * PI2).abs() < 1e-6);
    assert!(x.signature.abs() < 1e-8);
    let v = 4.0 * PI2 / 3.0;
    let bridge = sigma2_volume_bridge(&x, 1, v, 1e-6);
    assert!(bridge.passes(), "{bridge:?}");
    assert!(anderson_identity_residual(1, x.weyl_energy, v).abs() < 1e-6);
    let y = x.double().unwrap();
    assert!((y.euler_gb - 2.0).abs() < 1e-6);
    let (a, b) = combined_formulas(&y).unwrap();
    assert!(a.abs() < 1e-5 && b.abs() < 1e-5);
}

#[test]
fn geodesic_flag_is_enforced() {
    let model = instantiate(&ModelSpec::Hyperbolic).unwrap();
    let fg = model.fg().unwrap();
    let metric = on_collar(fg.compactified_metric());
    let r = integrate_curvature(&metric, &QuadratureSpec::default(), DomainTag::WithBoundary, Some((false, 0.5)));
    assert!(matches!(r, Err(Error::BoundaryNotGeodesic { .. })));
}

#[test]
fn ads_weyl_energy_matches_closed_form() {
    // |W|² dv = 48 m² x² sin θ dx dτ dθ dφ in x = 1/r
    for m in [0.5, 1.0, 2.0] {
        let metric = ads_schwarzschild_chart(m);
        let (w, _) = weyl_energy(&metric, &QuadratureSpec::default()).unwrap();
        let xp = 1.0 / ads_horizon_radius(m);
        let exact = ads_period(m) * 4.0 * PI * 16.0 * m * m * xp.powi(3);
        assert!((w - exact).abs() < 1e-8 * exact, "m = {m}: {w} vs {exact}");
        if m == 1.0 {
            assert!((exact - 64.0 * PI2).abs() < 1e-10);
        }
    }
}

#[test]
fn ads_sigma2_integral_matches_gauss_bonnet_budget() {
    let model = instantiate(&ModelSpec::AdsSchwarzschild { m: 1.0 }).unwrap();
    let fg = model.fg().unwrap();
    let sol = solve_eigenfunction(fg).unwrap();
    let metric = on_collar(compactified(&sol, fg));
    let x = integrate_curvature(&metric, &QuadratureSpec::default(), DomainTag::WithBoundary, Some((true, 0.0))).unwrap();
    // χ = 2 and ∫|W|² = 64π² leave ∫σ₂ = 16π² − 16π² = 0
    assert!((x.euler_gb - 2.0).abs() < 1e-6, "{x:?}");
    assert!((x.weyl_energy - 64.0 * PI2).abs() < 1e-6 * 64.0 * PI2);
    assert!(x.sigma2_integral.abs() < 1e-5, "{x:?}");
}

#[test]
fn random_factors_are_reproducible() {
    let fs = closed_model_functions(&ModelSpec::ComplexProjective).unwrap();
    let a = random_conformal_factors(&fs, 2, 0.3, 11);
    let b = random_conformal_factors(&fs, 2, 0.3, 11);
    let p = cce_core::Jet::constants(&[0.3, 1.0, 2.0, 5.0]);
    for (f, g) in a.iter().zip(&b) {
        let (x, y) = (f(&p), g(&p));
        assert_eq!(x.v, y.v);
        assert!(x.v > (-0.6f64).exp() - 1e-15 && x.v < 0.6f64.exp() + 1e-15);
    }
    let _: Vec<Arc<_>> = a;
}
