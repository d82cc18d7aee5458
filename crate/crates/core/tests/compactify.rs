use cce_core::compactify::*;
use cce_core::models::{ads_horizon_radius, instantiate, ModelSpec};

fn solve(spec: &ModelSpec) -> (cce_core::models::Model, EigenfunctionSolution) {
    let model = instantiate(spec).unwrap();
    let sol = solve_eigenfunction(model.fg().unwrap()).unwrap();
    (model, sol)
}

/// `(r²V u')' = 4r²u` with `V = 1 + r² − 2m/r`, shot from the horizon with
/// `u(r₊) = 1`; returns `lim u/r`.
fn ads_growth_rate(m: f64) -> f64 {
    let rp = ads_horizon_radius(m);
    let v = |r: f64| 1.0 + r * r - 2.0 * m / r;
    let dv = |r: f64| (2.0 * r + 4.0 * r.powi(3) - 2.0 * m) / (r * r);
    // y = (u, du/dr) against z = ln(r − r₊)
    let f = |z: f64, y: [f64; 2]| {
        let d = z.exp();
        let r = rp + d;
        let upp = (4.0 * y[0] - dv(r) * y[1]) / v(r);
        [d * y[1], d * upp]
    };
    let slope = 4.0 / dv(rp);
    let d0 = 1e-7;
    let mut y = [1.0 + slope * d0, slope];
    let mut z = d0.ln();
    let sample = |r_target: f64, y: &mut [f64; 2], z: &mut f64| {
        let z_end = (r_target - rp).ln();
        let steps = 40_000;
        let h = (z_end - *z) / steps as f64;
        for _ in 0..steps {
            let k1 = f(*z, *y);
            let k2 = f(*z + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f(*z + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f(*z + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for j in 0..2 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            *z += h;
        }
        y[0] / r_target
    };
    let (r1, r2) = (500.0, 1000.0);
    let a1 = sample(r1, &mut y, &mut z);
    let a2 = sample(r2, &mut y, &mut z);
    // u/r = C + D/r² + O(r⁻⁴)
    (a2 * r2 * r2 - a1 * r1 * r1) / (r2 * r2 - r1 * r1)
}

#[test]
fn hyperbolic_eigenfunction_is_exact() {
    let (model, sol) = solve(&ModelSpec::Hyperbolic);
    assert!((sol.w2 - 0.25).abs() < 1e-12);
    for k in 1..200 {
        let s = 2.0 * k as f64 / 200.0;
        assert!((sol.u(s) - (1.0 / s + s / 4.0)).abs() < 1e-10, "s = {s}");
    }
    let checks = compactification_checks(&sol, model.fg().unwrap(), 1e-6).unwrap();
    assert!(checks.all_pass(), "{checks:?}");
    assert!(checks.scalar_margin.abs() < 1e-8);
    assert!((checks.min_scalar - 12.0).abs() < 1e-8);
}

#[test]
fn ads_horizon_value_matches_radial_shooting() {
    for m in [0.2, 1.0, 3.0] {
        let (_, sol) = solve(&ModelSpec::AdsSchwarzschild { m });
        let expected = 1.0 / ads_growth_rate(m);
        let got = sol.u(sol.s_max);
        assert!((got - expected).abs() < 1e-7 * expected, "m = {m}: {got} vs {expected}");
    }
}

#[test]
fn ads_compactification_passes_the_checks() {
    let (model, sol) = solve(&ModelSpec::AdsSchwarzschild { m: 1.0 });
    let fg = model.fg().unwrap();
    assert!(sol.pde_residual < 1e-7, "{:?}", sol.refinement);
    assert!(sol.u_values[1..].iter().all(|u| *u > 0.0));
    // R̂ = 2 on S¹ × S²
    assert!((sol.w2 - 1.0 / 12.0).abs() < 1e-8);
    let c = compactification_checks(&sol, fg, 1e-4).unwrap();
    assert!(c.second_fundamental_form < 1e-4);
    assert!(c.bochner_residual < 1e-4);
    assert!(c.scalar_margin >= -1e-4);
    assert!(c.scalar_cross_check < 1e-6);
}

#[test]
fn nut_coefficient_follows_boundary_scalar() {
    let n = 0.4;
    let (model, sol) = solve(&ModelSpec::TaubNutAds { n });
    let scalar = 2.0 - 2.0 * n * n;
    assert!((sol.w2 - scalar / 24.0).abs() < 1e-8);
    let c = compactification_checks(&sol, model.fg().unwrap(), 1e-4).unwrap();
    assert!(c.all_pass(), "{c:?}");
}

#[test]
fn perturbed_metric_trips_the_bochner_check() {
    let (model, sol) = solve(&ModelSpec::PerturbedHyperbolic {
        amplitude: 0.1,
        power: 2,
    });
    let fg = model.fg().unwrap();
    let c = compactification_checks(&sol, fg, 1e-4).unwrap();
    assert!(!c.bochner_ok);
    // the scalar formula for non-Einstein interiors agrees with the metric
    assert!(c.scalar_cross_check < 1e-6, "{c:?}");
}

#[test]
fn rescaling_the_boundary_rescales_u() {
    let model = instantiate(&ModelSpec::AdsSchwarzschild { m: 1.0 }).unwrap();
    let fg = model.fg().unwrap();
    let sol = solve_eigenfunction(fg).unwrap();
    for lambda in [0.5, 2.0] {
        let scaled = solve_eigenfunction(&fg.rescaled(lambda).unwrap()).unwrap();
        for k in 1..10 {
            let s = fg.s_max() * k as f64 / 10.0;
            let a = scaled.u(lambda * s) * lambda;
            assert!((a - sol.u(s)).abs() < 1e-8 * sol.u(s), "lambda = {lambda}, s = {s}");
        }
        assert!((scaled.w2 * lambda * lambda - sol.w2).abs() < 1e-9);
    }
}

#[test]
fn solution_csv_has_versioned_header() {
    let (model, sol) = solve(&ModelSpec::Hyperbolic);
    let mut buf = Vec::new();
    write_solution_csv(&mut buf, &sol, model.fg().unwrap()).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# cce eigenfunction v1\ns,u,energy,scalar,bochner_residual\n"));
}

#[test]
fn round_sphere_coefficient_is_a_quarter() {
    assert_eq!(w2_rational(6, 1, 3).unwrap(), (1, 4));
    let model = instantiate(&ModelSpec::Hyperbolic).unwrap();
    let fg = model.fg().unwrap();
    let a = asymptotic_coefficients(fg.boundary(), 3, &fg.representative_point()).unwrap();
    assert!((a.w2 - 0.25).abs() < 1e-9);
    assert!(a.no_s2_term);
}
