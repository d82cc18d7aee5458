//! Global curvature integrals of four-manifolds: Gauss–Bonnet, signature,
//! Weyl energy and the σ₂ integral.
//!
//! ```text
//! 8π² χ = ∫ (¼|W|² + σ₂(A)) dv      12π² τ = ¼ ∫ (|W⁺|² − |W⁻|²) dv
//! ```
//!
//! On a manifold with totally geodesic boundary the first formula holds with
//! no boundary term.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quadrature::try_box_integral;
use crate::tensor::{curvature, MetricField, ScalarFn};

const EIGHT_PI2: f64 = 8.0 * PI * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    /// Compact manifold with totally geodesic boundary.
    WithBoundary,
    /// Mirror double of a [`DomainTag::WithBoundary`] suite.
    ClosedDouble,
    ClosedModel,
}

impl DomainTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            DomainTag::WithBoundary => "with_boundary",
            DomainTag::ClosedDouble => "closed_double",
            DomainTag::ClosedModel => "closed_model",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Nodes per sampled axis; the error estimate reruns with half as many.
    pub nodes: usize,
    /// Relative tolerance on the doubling estimate.
    pub tolerance: f64,
    pub orientation: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes: 24,
            tolerance: 1e-8,
            orientation: 1.0,
        }
    }
}

/// Doubling error estimates, one per integral.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegralErrors {
    pub volume: f64,
    pub weyl_energy: f64,
    pub weyl_plus: f64,
    pub weyl_minus: f64,
    pub sigma2_integral: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralSuite {
    pub domain_tag: DomainTag,
    pub volume: f64,
    pub weyl_energy: f64,
    pub weyl_plus: f64,
    pub weyl_minus: f64,
    pub sigma2_integral: f64,
    pub euler_gb: f64,
    pub signature: f64,
    pub errors: IntegralErrors,
}

fn euler_from(weyl: f64, sigma2: f64) -> f64 {
    (0.25 * weyl + sigma2) / EIGHT_PI2
}

fn signature_from(plus: f64, minus: f64) -> f64 {
    (plus - minus) / (48.0 * PI * PI)
}

impl IntegralSuite {
    /// Builds a suite from raw integrals.
    pub fn from_integrals(
        domain_tag: DomainTag,
        volume: f64,
        weyl_plus: f64,
        weyl_minus: f64,
        sigma2_integral: f64,
    ) -> Self {
        let weyl_energy = weyl_plus + weyl_minus;
        IntegralSuite {
            domain_tag,
            volume,
            weyl_energy,
            weyl_plus,
            weyl_minus,
            sigma2_integral,
            euler_gb: euler_from(weyl_energy, sigma2_integral),
            signature: signature_from(weyl_plus, weyl_minus),
            errors: IntegralErrors::default(),
        }
    }

    /// Integrals over the mirror double `Y = X ∪ X̄`. The reflection reverses
    /// orientation, so each of `∫|W±|²` over `Y` equals `∫|W|²` over `X`.
    pub fn double(&self) -> Result<IntegralSuite> {
        if self.domain_tag != DomainTag::WithBoundary {
            return Err(Error::InvalidInput(format!(
                "only a suite with boundary can be doubled, got {}",
                self.domain_tag.as_str()
            )));
        }
        let e = &self.errors;
        let mut d = IntegralSuite::from_integrals(
            DomainTag::ClosedDouble,
            2.0 * self.volume,
            self.weyl_energy,
            self.weyl_energy,
            2.0 * self.sigma2_integral,
        );
        d.errors = IntegralErrors {
            volume: 2.0 * e.volume,
            weyl_energy: 2.0 * e.weyl_energy,
            weyl_plus: e.weyl_energy,
            weyl_minus: e.weyl_energy,
            sigma2_integral: 2.0 * e.sigma2_integral,
        };
        Ok(d)
    }

    /// `|∫|W|² − ∫|W⁺|² − ∫|W⁻|²|`.
    pub fn split_defect(&self) -> f64 {
        (self.weyl_energy - self.weyl_plus - self.weyl_minus).abs()
    }

    /// `(key, value)` pairs for reports.
    pub fn entries(&self, prefix: &str) -> Vec<(String, f64)> {
        let e = &self.errors;
        [
            ("volume", self.volume),
            ("volume_error", e.volume),
            ("weyl_energy", self.weyl_energy),
            ("weyl_energy_error", e.weyl_energy),
            ("weyl_plus", self.weyl_plus),
            ("weyl_minus", self.weyl_minus),
            ("sigma2_integral", self.sigma2_integral),
            ("sigma2_integral_error", e.sigma2_integral),
            ("euler_gb", self.euler_gb),
            ("signature", self.signature),
        ]
        .into_iter()
        .map(|(k, v)| (format!("{prefix}{k}"), v))
        .collect()
    }
}

fn raw_integrals(metric: &MetricField, nodes: usize, orientation: f64) -> Result<[f64; 5]> {
    let v = try_box_integral(metric.domain(), nodes, 5, |p| {
        let c = curvature(metric, p, orientation)?;
        let (plus, minus) = match (c.weyl_plus_norm2, c.weyl_minus_norm2) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::UnsupportedDimension {
                    n: c.dim,
                    reason: "curvature integrals need a four-manifold",
                })
            }
        };
        let dv = c.volume_density;
        Ok(vec![dv, c.weyl_norm2 * dv, plus * dv, minus * dv, c.sigma2 * dv])
    })?;
    Ok([v[0], v[1], v[2], v[3], v[4]])
}

/// Integrates the curvature invariants of a four-dimensional metric over its
/// chart box. A suite with boundary needs `geodesic_boundary = Some(true)`,
/// the verdict of the compactification checks.
pub fn integrate_curvature(
    metric: &MetricField,
    spec: &QuadratureSpec,
    tag: DomainTag,
    geodesic_boundary: Option<(bool, f64)>,
) -> Result<IntegralSuite> {
    if metric.dim() != 4 {
        return Err(Error::UnsupportedDimension {
            n: metric.dim(),
            reason: "curvature integrals need a four-manifold",
        });
    }
    match (tag, geodesic_boundary) {
        (DomainTag::WithBoundary, Some((true, _))) => {}
        (DomainTag::WithBoundary, Some((false, ii))) => {
            return Err(Error::BoundaryNotGeodesic {
                second_fundamental_form: ii,
            })
        }
        (DomainTag::WithBoundary, None) => {
            return Err(Error::BoundaryNotGeodesic {
                second_fundamental_form: f64::NAN,
            })
        }
        (DomainTag::ClosedDouble, _) => {
            return Err(Error::InvalidInput("doubled suites come from IntegralSuite::double".into()))
        }
        _ => {}
    }
    let fine = raw_integrals(metric, spec.nodes, spec.orientation)?;
    let coarse = raw_integrals(metric, (spec.nodes / 2).max(2), spec.orientation)?;
    let err: Vec<f64> = fine.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).collect();
    // the scale of the curvature integrals is set by the Gauss–Bonnet budget
    let scale = fine[0].abs().max(fine[1].abs()).max(fine[4].abs()).max(1.0);
    let worst = err.iter().fold(0.0f64, |m, e| m.max(*e)) / scale;
    if !(worst <= spec.tolerance) {
        return Err(Error::QuadratureTolerance {
            estimate: worst,
            tolerance: spec.tolerance,
        });
    }
    let mut suite = IntegralSuite::from_integrals(tag, fine[0], fine[2], fine[3], fine[4]);
    suite.weyl_energy = fine[1];
    suite.euler_gb = euler_from(fine[1], fine[4]);
    suite.errors = IntegralErrors {
        volume: err[0],
        weyl_energy: err[1],
        weyl_plus: err[2],
        weyl_minus: err[3],
        sigma2_integral: err[4],
    };
    Ok(suite)
}

/// `∫|W|² dv` alone, with its doubling estimate. Unlike the full suite this
/// stays finite on complete non-compact metrics, where `|W|² dv` is
/// integrable but the volume is not.
pub fn weyl_energy(metric: &MetricField, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let integral = |nodes: usize| {
        try_box_integral(metric.domain(), nodes, 1, |p| {
            let c = curvature(metric, p, spec.orientation)?;
            Ok::<_, Error>(vec![c.weyl_norm2 * c.volume_density])
        })
        .map(|v| v[0])
    };
    let fine = integral(spec.nodes)?;
    let err = (fine - integral((spec.nodes / 2).max(2))?).abs();
    if !(err <= spec.tolerance * fine.abs().max(1.0)) {
        return Err(Error::QuadratureTolerance {
            estimate: err / fine.abs().max(1.0),
            tolerance: spec.tolerance,
        });
    }
    Ok((fine, err))
}

/// `8π²χ − ¼∫|W|² − 6V`.
pub fn anderson_identity_residual(chi: i64, weyl_energy: f64, v: f64) -> f64 {
    EIGHT_PI2 * chi as f64 - 0.25 * weyl_energy - 6.0 * v
}

/// `∫σ₂` of the compactified metric set against `6V` and against the
/// Gauss–Bonnet value `8π²χ − ¼∫|W|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sigma2Bridge {
    pub direct: f64,
    pub six_v: f64,
    pub gauss_bonnet: f64,
    /// `|direct − 6V|`
    pub defect: f64,
    /// Quadrature error of `direct` plus six times the uncertainty of `V`.
    pub tolerance: f64,
}

impl Sigma2Bridge {
    pub fn passes(&self) -> bool {
        self.defect <= self.tolerance
    }
}

pub fn sigma2_volume_bridge(suite: &IntegralSuite, chi: i64, v: f64, v_uncertainty: f64) -> Sigma2Bridge {
    let six_v = 6.0 * v;
    Sigma2Bridge {
        direct: suite.sigma2_integral,
        six_v,
        gauss_bonnet: EIGHT_PI2 * chi as f64 - 0.25 * suite.weyl_energy,
        defect: (suite.sigma2_integral - six_v).abs(),
        tolerance: suite.errors.sigma2_integral + 6.0 * v_uncertainty,
    }
}

/// `4π²(2χ ± 3τ) − ½∫|W±|² − ∫σ₂` with `χ`, `τ` taken from the suite.
pub fn combined_formulas(suite: &IntegralSuite) -> Result<(f64, f64)> {
    if suite.domain_tag == DomainTag::WithBoundary {
        return Err(Error::InvalidInput("the combined formulas need a closed suite".into()));
    }
    let (chi, tau) = (suite.euler_gb, suite.signature);
    let base = 4.0 * PI * PI;
    Ok((
        base * (2.0 * chi + 3.0 * tau) - 0.5 * suite.weyl_plus - suite.sigma2_integral,
        base * (2.0 * chi - 3.0 * tau) - 0.5 * suite.weyl_minus - suite.sigma2_integral,
    ))
}

/// `exp(2w)` factors with `w = a·Σ cᵢ fᵢ + a·Σ c_{ij} fᵢ fⱼ` for uniform
/// random coefficients in `[−1, 1]`, scaled so that `|w| ≤ amplitude`.
pub fn random_conformal_factors(
    functions: &[Arc<ScalarFn>],
    count: usize,
    amplitude: f64,
    seed: u64,
) -> Vec<Arc<ScalarFn>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = functions.len();
    (0..count)
        .map(|_| {
            let linear: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let quadratic: Vec<(usize, usize, f64)> = (0..k)
                .flat_map(|i| (i..k).map(move |j| (i, j)))
                .map(|(i, j)| (i, j, rng.random_range(-1.0..1.0)))
                .collect();
            // the functions are bounded by one in absolute value
            let bound: f64 = linear.iter().map(|c| c.abs()).sum::<f64>()
                + quadratic.iter().map(|c| c.2.abs()).sum::<f64>();
            let a = amplitude / bound.max(1e-300);
            let fs = functions.to_vec();
            Arc::new(move |x: &[Jet]| {
                let vals: Vec<Jet> = fs.iter().map(|f| f(x)).collect();
                let mut w = Jet::constant(0.0);
                for (c, v) in linear.iter().zip(&vals) {
                    w += *v * *c;
                }
                for &(i, j, c) in &quadratic {
                    w += vals[i] * vals[j] * c;
                }
                (w * (2.0 * a)).exp()
            }) as Arc<ScalarFn>
        })
        .collect()
}

/// `∫|W|² dv` for the base metric and each conformal change.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalCheck {
    pub base: f64,
    pub rescaled: Vec<f64>,
    pub max_relative_deviation: f64,
}

pub fn conformal_invariance(
    metric: &MetricField,
    factors: &[Arc<ScalarFn>],
    spec: &QuadratureSpec,
) -> Result<ConformalCheck> {
    let base = weyl_energy(metric, spec)?.0;
    let mut rescaled = Vec::with_capacity(factors.len());
    for f in factors {
        rescaled.push(weyl_energy(&metric.conformal(Arc::clone(f)), spec)?.0);
    }
    let scale = base.abs().max(1e-300);
    let max_relative_deviation = rescaled.iter().map(|w| (w - base).abs() / scale).fold(0.0, f64::max);
    Ok(ConformalCheck {
        base,
        rescaled,
        max_relative_deviation,
    })
}
