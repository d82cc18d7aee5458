//! Model metrics with closed-form data.
//!
//! Conformally compact families carry a normal form; closed families carry
//! a global chart whose coordinate singularities sit on the box faces.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fg::{
    normal_form_from_profile, FgMetric, InnerEnd, ProfilePiece, WarpPiece, WarpedProfile,
};
use crate::jet::Jet;
use crate::tensor::{ChartDomain, ComponentFn, MetricField, ScalarFn};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Hyperbolic,
    AdsSchwarzschild {
        m: f64,
    },
    /// `w(s) = (1 − s²/4)(1 + amplitude · h(s))` with
    /// `h = sinh²ρ / cosh^{2+power}ρ`, `sinh ρ = 1/s − s/4`.
    PerturbedHyperbolic {
        amplitude: f64,
        #[serde(default = "default_power")]
        power: u32,
    },
    RoundSphereClosed,
    FlatTorusClosed,
    /// `S²(r1) × S²(r2)`.
    ProductS2S2 {
        #[serde(default = "one")]
        r1: f64,
        #[serde(default = "one")]
        r2: f64,
    },
    /// Fubini–Study metric with sectional curvature between 1 and 4.
    ComplexProjective,
    /// Self-dual Taub–NUT–AdS with nut parameter `n`; boundary is a Berger sphere.
    TaubNutAds {
        n: f64,
    },
}

fn default_power() -> u32 {
    2
}
fn one() -> f64 {
    1.0
}

impl ModelSpec {
    /// Parses a family name as used on the command line; `param` fills the
    /// family's main parameter.
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase().replace('-', "_");
        let spec = match key.as_str() {
            "hyperbolic" => ModelSpec::Hyperbolic,
            "ads_schwarzschild" => ModelSpec::AdsSchwarzschild { m: param.unwrap_or(1.0) },
            "perturbed_hyperbolic" => ModelSpec::PerturbedHyperbolic {
                amplitude: param.unwrap_or(0.1),
                power: default_power(),
            },
            "round_sphere_closed" | "round_sphere" => ModelSpec::RoundSphereClosed,
            "flat_torus_closed" | "flat_torus" => ModelSpec::FlatTorusClosed,
            "product_s2s2" | "s2xs2" => {
                let r2 = param.unwrap_or(1.0);
                ModelSpec::ProductS2S2 { r1: 1.0, r2 }
            }
            "complex_projective" | "cp2" => ModelSpec::ComplexProjective,
            "taub_nut_ads" => ModelSpec::TaubNutAds { n: param.unwrap_or(0.4) },
            _ => return Err(Error::ModelParameter(format!("unknown model family '{name}'"))),
        };
        Ok(spec)
    }

    /// Replaces the family's main parameter (`m`, amplitude, `r2` or `n`).
    pub fn with_parameter(&self, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match &mut out {
            ModelSpec::AdsSchwarzschild { m } => *m = value,
            ModelSpec::PerturbedHyperbolic { amplitude, .. } => *amplitude = value,
            ModelSpec::ProductS2S2 { r2, .. } => *r2 = value,
            ModelSpec::TaubNutAds { n } => *n = value,
            other => {
                return Err(Error::ModelParameter(format!("{} takes no parameter", other.name())));
            }
        }
        Ok(out)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Hyperbolic => "hyperbolic",
            ModelSpec::AdsSchwarzschild { .. } => "ads_schwarzschild",
            ModelSpec::PerturbedHyperbolic { .. } => "perturbed_hyperbolic",
            ModelSpec::RoundSphereClosed => "round_sphere_closed",
            ModelSpec::FlatTorusClosed => "flat_torus_closed",
            ModelSpec::ProductS2S2 { .. } => "product_s2s2",
            ModelSpec::ComplexProjective => "complex_projective",
            ModelSpec::TaubNutAds { .. } => "taub_nut_ads",
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model spec serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Families of the library with their default parameters.
    pub fn library() -> Vec<ModelSpec> {
        vec![
            ModelSpec::Hyperbolic,
            ModelSpec::AdsSchwarzschild { m: 1.0 },
            ModelSpec::PerturbedHyperbolic { amplitude: 0.1, power: 2 },
            ModelSpec::RoundSphereClosed,
            ModelSpec::FlatTorusClosed,
            ModelSpec::ProductS2S2 { r1: 1.0, r2: 1.0 },
            ModelSpec::ComplexProjective,
            ModelSpec::TaubNutAds { n: 0.4 },
        ]
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::AdsSchwarzschild { m } => write!(f, "ads_schwarzschild(m={m})"),
            ModelSpec::PerturbedHyperbolic { amplitude, power } => {
                write!(f, "perturbed_hyperbolic(amplitude={amplitude},power={power})")
            }
            ModelSpec::ProductS2S2 { r1, r2 } => write!(f, "product_s2s2(r1={r1},r2={r2})"),
            ModelSpec::TaubNutAds { n } => write!(f, "taub_nut_ads(n={n})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelFlags {
    pub einstein: bool,
    pub closed: bool,
    /// Asserted for the shipped boundary representative (never computed).
    pub yamabe_positive: bool,
    /// The shipped boundary representative has constant scalar curvature.
    pub yamabe_representative: bool,
    pub known_chi: i64,
    /// Signature for closed models in the chart orientation.
    pub known_tau: Option<i64>,
}

#[derive(Clone)]
pub struct Model {
    pub spec: ModelSpec,
    /// Global chart (closed models) or an independent interior chart.
    pub metric: MetricField,
    pub fg: Option<FgMetric>,
    pub flags: ModelFlags,
    /// Scalar curvature of the boundary representative.
    pub boundary_scalar: Option<f64>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("spec", &self.spec)
            .field("metric", &self.metric)
            .field("fg", &self.fg)
            .field("flags", &self.flags)
            .finish()
    }
}

impl Model {
    pub fn fg(&self) -> Result<&FgMetric> {
        self.fg
            .as_ref()
            .ok_or_else(|| Error::NotAvailable(format!("{} has no normal form", self.spec)))
    }
}

fn zero() -> Jet {
    Jet::constant(0.0)
}

/// Round unit `S³` in hyperspherical coordinates `(χ, θ, φ)`.
pub fn round_s3_domain() -> ChartDomain {
    ChartDomain::new(vec![0.0; 3], vec![PI, PI, 2.0 * PI]).with_cyclic(&[2])
}

pub fn round_s3_tensor(y: &[Jet]) -> Vec<Jet> {
    let a = y[0].sin().square();
    vec![Jet::constant(1.0), zero(), zero(), a, zero(), a * y[1].sin().square()]
}

/// `(2/(1 − |y|²))² δ` on a cube inside the unit ball.
pub fn hyperbolic_ball() -> MetricField {
    let half = 0.49;
    MetricField::diagonal(
        "hyperbolic-ball",
        4,
        ChartDomain::new(vec![-half; 4], vec![half; 4]),
        |y| {
            let r2: Jet = y.iter().map(|c| c.square()).sum();
            let f = (2.0 / (1.0 - r2)).square();
            vec![f; 4]
        },
    )
}

/// `t = (1 + |y|²)/(1 − |y|²)` on the ball chart.
pub fn hyperbolic_ball_eigenfunction(y: &[Jet]) -> Jet {
    let r2: Jet = y.iter().map(|c| c.square()).sum();
    (1.0 + r2) / (1.0 - r2)
}

fn hyperbolic_fg() -> Result<FgMetric> {
    Ok(FgMetric::warped(
        "hyperbolic",
        round_s3_domain(),
        vec![WarpPiece::new("s3", 3, round_s3_tensor, |s| 1.0 - s.square() * 0.25)],
        2.0,
    )?
    .with_einstein(true))
}

/// `h(s) = 4^p (4 − s²)² s^p / (4 + s²)^{2+p}`, i.e. `sinh²ρ / cosh^{2+p}ρ`.
fn bump(s: Jet, power: u32) -> Jet {
    let p = power as i32;
    let num = (4.0 - s.square()).square() * s.powi(p) * 4f64.powi(p);
    num / (4.0 + s.square()).powi(2 + p)
}

fn perturbed_fg(amplitude: f64, power: u32) -> Result<FgMetric> {
    if power < 2 {
        return Err(Error::ModelParameter(format!("perturbation power must be at least 2, got {power}")));
    }
    let peak = (1..2000)
        .map(|k| bump(Jet::constant(2.0 * k as f64 / 2000.0), power).v)
        .fold(0.0f64, f64::max);
    if !(amplitude.is_finite() && amplitude * peak > -0.5 && amplitude * peak < 0.5) {
        return Err(Error::ModelParameter(format!(
            "perturbation amplitude {amplitude} too large for positivity (peak bump {peak:.4})"
        )));
    }
    FgMetric::warped(
        format!("perturbed_hyperbolic({amplitude})"),
        round_s3_domain(),
        vec![WarpPiece::new("s3", 3, round_s3_tensor, move |s| {
            (1.0 - s.square() * 0.25) * (1.0 + bump(s, power) * amplitude)
        })],
        2.0,
    )
}

/// Positive root of `r³ + r − 2m = 0`.
pub fn ads_horizon_radius(m: f64) -> f64 {
    let mut r = m.cbrt().max(1e-3).min(2.0 * m);
    for _ in 0..200 {
        let f = r * r * r + r - 2.0 * m;
        let d = 3.0 * r * r + 1.0;
        let next = r - f / d;
        if (next - r).abs() <= 1e-16 * r.max(1.0) {
            return next;
        }
        r = next;
    }
    r
}

/// Period of the boundary circle fixed by horizon regularity, `4π/V'(r₊)`.
pub fn ads_period(m: f64) -> f64 {
    let r = ads_horizon_radius(m);
    4.0 * PI * r / (3.0 * r * r + 1.0)
}

/// `(x₊ − x) q(x) = 1 + x² − 2m x³` with `x = 1/r`.
#[derive(Clone, Copy, Debug)]
struct AdsQuartic {
    m: f64,
    xp: f64,
}

impl AdsQuartic {
    fn new(m: f64) -> Self {
        AdsQuartic { m, xp: 1.0 / ads_horizon_radius(m) }
    }
    fn q<T>(&self, x: T) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Mul<T, Output = T> + std::ops::Add<f64, Output = T> + std::ops::Add<T, Output = T>,
    {
        let (m, xp) = (self.m, self.xp);
        x * x * (2.0 * m) + x * (2.0 * m * xp - 1.0) + (2.0 * m * xp * xp - xp)
    }
}

fn s2_tensor(y: &[Jet]) -> Vec<Jet> {
    // coordinates (τ, θ, ϕ): round unit S² in the last two
    vec![zero(), zero(), zero(), Jet::constant(1.0), zero(), y[1].sin().square()]
}

fn circle_tensor(_: &[Jet]) -> Vec<Jet> {
    vec![Jet::constant(1.0), zero(), zero(), zero(), zero(), zero()]
}

fn ads_boundary_domain(m: f64) -> ChartDomain {
    ChartDomain::new(vec![0.0; 3], vec![ads_period(m), PI, 2.0 * PI]).with_cyclic(&[0, 2])
}

/// `dx²/(x²Q) + Q/x² dτ² + x⁻² g_{S²}` on `(0, x₊) × S¹ × S²`.
pub fn ads_schwarzschild_chart(m: f64) -> MetricField {
    let quartic = AdsQuartic::new(m);
    let xp = quartic.xp;
    let bd = ads_boundary_domain(m);
    let mut lower = vec![0.0];
    lower.extend(&bd.lower);
    let mut upper = vec![xp];
    upper.extend(&bd.upper);
    let domain = ChartDomain::new(lower, upper).with_cyclic(&[1, 3]);
    MetricField::diagonal(format!("ads_schwarzschild_chart(m={m})"), 4, domain, move |c| {
        let x = c[0];
        let q = (xp - x) * quartic.q(x);
        let ix2 = x.square().recip();
        vec![ix2 / q, q * ix2, ix2, ix2 * c[2].sin().square()]
    })
}

fn ads_profile(m: f64) -> WarpedProfile {
    let quartic = AdsQuartic::new(m);
    WarpedProfile {
        label: format!("ads_schwarzschild(m={m})"),
        x_inner: quartic.xp,
        inner: InnerEnd::SquareRoot,
        lapse: Arc::new(move |x, gap| 1.0 / (gap * quartic.q(x)).sqrt()),
        pieces: vec![
            ProfilePiece {
                label: "circle".into(),
                rank: 1,
                tensor: Arc::new(circle_tensor) as Arc<ComponentFn>,
                scale: Arc::new(move |x, gap| (gap * quartic.q(x)).sqrt()),
            },
            ProfilePiece {
                label: "s2".into(),
                rank: 2,
                tensor: Arc::new(s2_tensor),
                scale: Arc::new(|_, _| 1.0),
            },
        ],
        reference: 1,
        boundary_domain: ads_boundary_domain(m),
        einstein: true,
    }
}

/// Warped profile of the AdS–Schwarzschild family in `x = 1/r`.
pub fn ads_schwarzschild_profile(m: f64) -> Result<WarpedProfile> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::ModelParameter(format!("mass parameter must be positive, got {m}")));
    }
    Ok(ads_profile(m))
}

/// `P(x) = 1 + 2n x + (1 − 3n²) x²` and `Q = (1 − n x) P / (1 + n x)`.
#[derive(Clone, Copy, Debug)]
struct NutQuartic {
    n: f64,
}

impl NutQuartic {
    fn p(&self, x: Jet) -> Jet {
        let n = self.n;
        1.0 + x * (2.0 * n) + x.square() * (1.0 - 3.0 * n * n)
    }
    fn pf(&self, x: f64) -> f64 {
        let n = self.n;
        1.0 + 2.0 * n * x + (1.0 - 3.0 * n * n) * x * x
    }
}

fn berger_fibre(n: f64) -> impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + Clone {
    // coordinates (ψ, θ, φ); 4n² (dψ + cos θ dφ)²
    move |y: &[Jet]| {
        let c = y[1].cos();
        let k = 4.0 * n * n;
        vec![Jet::constant(k), zero(), c * k, zero(), zero(), c.square() * k]
    }
}

fn berger_base(y: &[Jet]) -> Vec<Jet> {
    vec![zero(), zero(), zero(), Jet::constant(1.0), zero(), y[1].sin().square()]
}

fn nut_boundary_domain() -> ChartDomain {
    ChartDomain::new(vec![0.0; 3], vec![4.0 * PI, PI, 2.0 * PI]).with_cyclic(&[0, 2])
}

/// Taub–NUT–AdS in `x = 1/r` on `(0, 1/n) × S³`.
pub fn taub_nut_chart(n: f64) -> MetricField {
    let nq = NutQuartic { n };
    let bd = nut_boundary_domain();
    let mut lower = vec![0.0];
    lower.extend(&bd.lower);
    let mut upper = vec![1.0 / n];
    upper.extend(&bd.upper);
    let domain = ChartDomain::new(lower, upper).with_cyclic(&[1, 3]);
    let fibre = berger_fibre(n);
    MetricField::new(format!("taub_nut_chart(n={n})"), 4, domain, move |c| {
        let x = c[0];
        let q = (1.0 - x * n) * nq.p(x) / (1.0 + x * n);
        let ix2 = x.square().recip();
        let base_scale = (1.0 - x.square() * (n * n)) * ix2;
        let f = fibre(&c[1..]);
        let b = berger_base(&c[1..]);
        let mut out = vec![zero(); 10];
        out[0] = ix2 / q;
        // boundary block in slots (1..4)
        let idx = [4, 5, 6, 7, 8, 9];
        for k in 0..6 {
            out[idx[k]] = f[k] * q * ix2 + b[k] * base_scale;
        }
        out
    })
}

fn nut_profile(n: f64) -> WarpedProfile {
    let nq = NutQuartic { n };
    WarpedProfile {
        label: format!("taub_nut_ads(n={n})"),
        x_inner: 1.0 / n,
        inner: InnerEnd::SquareRoot,
        // Q = n·gap·P/(1 + n x)
        lapse: Arc::new(move |x, gap| (n * gap * nq.pf(x) / (1.0 + n * x)).sqrt().recip()),
        pieces: vec![
            ProfilePiece {
                label: "fibre".into(),
                rank: 1,
                tensor: Arc::new(berger_fibre(n)),
                scale: Arc::new(move |x, gap| (n * gap * nq.pf(x) / (1.0 + n * x)).sqrt()),
            },
            ProfilePiece {
                label: "base".into(),
                rank: 2,
                tensor: Arc::new(berger_base),
                scale: Arc::new(move |x, gap| (n * gap * (1.0 + n * x)).sqrt()),
            },
        ],
        reference: 1,
        boundary_domain: nut_boundary_domain(),
        einstein: true,
    }
}

pub fn taub_nut_profile(n: f64) -> Result<WarpedProfile> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::ModelParameter(format!("nut parameter must be positive, got {n}")));
    }
    Ok(nut_profile(n))
}

fn round_s4() -> MetricField {
    let domain = ChartDomain::new(vec![0.0; 4], vec![PI, PI, PI, 2.0 * PI]).with_cyclic(&[3]);
    MetricField::diagonal("round_s4", 4, domain, |x| {
        let a = x[0].sin().square();
        let b = a * x[1].sin().square();
        let c = b * x[2].sin().square();
        vec![Jet::constant(1.0), a, b, c]
    })
}

fn flat_torus() -> MetricField {
    let domain = ChartDomain::new(vec![0.0; 4], vec![2.0 * PI; 4]).with_cyclic(&[0, 1, 2, 3]);
    MetricField::diagonal("flat_torus", 4, domain, |_| vec![Jet::constant(1.0); 4])
}

fn product_s2s2(r1: f64, r2: f64) -> MetricField {
    let domain = ChartDomain::new(vec![0.0; 4], vec![PI, 2.0 * PI, PI, 2.0 * PI]).with_cyclic(&[1, 3]);
    let (a, b) = (r1 * r1, r2 * r2);
    MetricField::diagonal(format!("s2xs2({r1},{r2})"), 4, domain, move |x| {
        vec![
            Jet::constant(a),
            x[0].sin().square() * a,
            Jet::constant(b),
            x[2].sin().square() * b,
        ]
    })
}

/// `dr² + (sin²r/4)(dθ² + sin²θ dφ²) + (sin²r cos²r/4)(dψ + cos θ dφ)²`.
fn complex_projective() -> MetricField {
    let domain =
        ChartDomain::new(vec![0.0; 4], vec![PI / 2.0, PI, 2.0 * PI, 4.0 * PI]).with_cyclic(&[2, 3]);
    MetricField::new("fubini_study", 4, domain, |x| {
        let s2 = x[0].sin().square();
        let base = s2 * 0.25;
        let fib = s2 * x[0].cos().square() * 0.25;
        let ct = x[1].cos();
        vec![
            Jet::constant(1.0),
            zero(),
            zero(),
            zero(),
            base,
            zero(),
            zero(),
            base * x[1].sin().square() + fib * ct.square(),
            fib * ct,
            fib,
        ]
    })
}

/// Smooth functions on a closed model, bounded by one in absolute value,
/// written in its global chart: coordinates of a standard embedding (for
/// `CP²`, entries of the projector `z z̄ᵀ` in Hopf coordinates).
pub fn closed_model_functions(spec: &ModelSpec) -> Result<Vec<Arc<ScalarFn>>> {
    let fs: Vec<Arc<ScalarFn>> = match spec {
        ModelSpec::RoundSphereClosed => vec![
            Arc::new(|x: &[Jet]| x[0].cos()),
            Arc::new(|x: &[Jet]| x[0].sin() * x[1].cos()),
            Arc::new(|x: &[Jet]| x[0].sin() * x[1].sin() * x[2].cos()),
            Arc::new(|x: &[Jet]| x[0].sin() * x[1].sin() * x[2].sin() * x[3].cos()),
            Arc::new(|x: &[Jet]| x[0].sin() * x[1].sin() * x[2].sin() * x[3].sin()),
        ],
        ModelSpec::FlatTorusClosed => (0..4)
            .flat_map(|i| {
                [
                    Arc::new(move |x: &[Jet]| x[i].cos()) as Arc<ScalarFn>,
                    Arc::new(move |x: &[Jet]| x[i].sin()) as Arc<ScalarFn>,
                ]
            })
            .collect(),
        ModelSpec::ProductS2S2 { .. } => [0usize, 2]
            .into_iter()
            .flat_map(|i| {
                [
                    Arc::new(move |x: &[Jet]| x[i].cos()) as Arc<ScalarFn>,
                    Arc::new(move |x: &[Jet]| x[i].sin() * x[i + 1].cos()) as Arc<ScalarFn>,
                    Arc::new(move |x: &[Jet]| x[i].sin() * x[i + 1].sin()) as Arc<ScalarFn>,
                ]
            })
            .collect(),
        ModelSpec::ComplexProjective => vec![
            // |z0|², |z1|² − |z2|², z1 z̄2
            Arc::new(|x: &[Jet]| x[0].cos().square()),
            Arc::new(|x: &[Jet]| x[0].sin().square() * x[1].cos()),
            Arc::new(|x: &[Jet]| x[0].sin().square() * x[1].sin() * x[2].cos()),
            Arc::new(|x: &[Jet]| x[0].sin().square() * x[1].sin() * x[2].sin()),
            // 2 Re(z0 z̄1)
            Arc::new(|x: &[Jet]| {
                (x[0] * 2.0).sin() * (x[1] * 0.5).cos() * ((x[3] + x[2]) * 0.5).cos()
            }),
        ],
        other => {
            return Err(Error::NotAvailable(format!("{other} is not a closed model")));
        }
    };
    Ok(fs)
}

/// Builds the metric objects for `spec`.
pub fn instantiate(spec: &ModelSpec) -> Result<Model> {
    let closed = |metric: MetricField, einstein: bool, yamabe: bool, chi: i64, tau: i64| Model {
        spec: spec.clone(),
        metric,
        fg: None,
        flags: ModelFlags {
            einstein,
            closed: true,
            yamabe_positive: yamabe,
            yamabe_representative: true,
            known_chi: chi,
            known_tau: Some(tau),
        },
        boundary_scalar: None,
    };
    let model = match *spec {
        ModelSpec::Hyperbolic => Model {
            spec: spec.clone(),
            metric: hyperbolic_ball(),
            fg: Some(hyperbolic_fg()?),
            flags: cc_flags(true, true, 1),
            boundary_scalar: Some(6.0),
        },
        ModelSpec::AdsSchwarzschild { m } => {
            let profile = ads_schwarzschild_profile(m)?;
            let metric = ads_schwarzschild_chart(m);
            let fg = normal_form_from_profile(&profile)?.with_interior_extension(metric.clone());
            Model {
                spec: spec.clone(),
                metric,
                fg: Some(fg),
                flags: cc_flags(true, true, 2),
                boundary_scalar: Some(2.0),
            }
        }
        ModelSpec::PerturbedHyperbolic { amplitude, power } => {
            let fg = perturbed_fg(amplitude, power)?;
            Model {
                spec: spec.clone(),
                metric: fg.interior_metric(),
                fg: Some(fg),
                flags: cc_flags(false, true, 1),
                boundary_scalar: Some(6.0),
            }
        }
        ModelSpec::TaubNutAds { n } => {
            let profile = taub_nut_profile(n)?;
            let metric = taub_nut_chart(n);
            let fg = normal_form_from_profile(&profile)?.with_interior_extension(metric.clone());
            Model {
                spec: spec.clone(),
                metric,
                fg: Some(fg),
                flags: cc_flags(true, n < 1.0, 1),
                boundary_scalar: Some(2.0 - 2.0 * n * n),
            }
        }
        ModelSpec::RoundSphereClosed => closed(round_s4(), true, true, 2, 0),
        ModelSpec::FlatTorusClosed => closed(flat_torus(), true, false, 0, 0),
        ModelSpec::ProductS2S2 { r1, r2 } => {
            if !(r1 > 0.0 && r2 > 0.0) {
                return Err(Error::ModelParameter(format!("radii must be positive, got {r1}, {r2}")));
            }
            closed(product_s2s2(r1, r2), r1 == r2, true, 4, 0)
        }
        ModelSpec::ComplexProjective => closed(complex_projective(), true, true, 3, -1),
    };
    Ok(model)
}

fn cc_flags(einstein: bool, yamabe: bool, chi: i64) -> ModelFlags {
    ModelFlags {
        einstein,
        closed: false,
        yamabe_positive: yamabe,
        yamabe_representative: true,
        known_chi: chi,
        known_tau: None,
    }
}

/// Closed-form values of curvature integrals over a closed model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedIntegrals {
    pub sigma2: f64,
    pub weyl: f64,
    pub euler: f64,
    pub signature: f64,
}

#[derive(Clone)]
pub struct ExactReference {
    /// `u(s)` solving `Δu = 4u` in normal-form coordinates.
    pub eigenfunction: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub renormalized_volume: Option<f64>,
    /// `(c0, c2)` of `Vol({s > ε}) = c0 ε⁻³ + c2 ε⁻¹ + V + o(1)`.
    pub volume_coefficients: Option<(f64, f64)>,
    /// Warp `w(s)` of `g_s = w² ĝ`.
    pub warp: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub integrals: Option<ClosedIntegrals>,
}

impl fmt::Debug for ExactReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactReference")
            .field("renormalized_volume", &self.renormalized_volume)
            .field("volume_coefficients", &self.volume_coefficients)
            .field("integrals", &self.integrals)
            .finish()
    }
}

impl ExactReference {
    fn empty() -> Self {
        ExactReference {
            eigenfunction: None,
            renormalized_volume: None,
            volume_coefficients: None,
            warp: None,
            integrals: None,
        }
    }

    pub fn volume(&self) -> Result<f64> {
        self.renormalized_volume
            .ok_or_else(|| Error::NotAvailable("renormalized volume has no closed form for this model".into()))
    }
}

/// Closed-form data for `spec`, where the family has any.
pub fn exact_reference(spec: &ModelSpec) -> Result<ExactReference> {
    let pi2 = PI * PI;
    let mut r = ExactReference::empty();
    match *spec {
        ModelSpec::Hyperbolic => {
            r.eigenfunction = Some(Arc::new(|s| 1.0 / s + s / 4.0));
            r.renormalized_volume = Some(4.0 * pi2 / 3.0);
            r.volume_coefficients = Some((2.0 * pi2 / 3.0, -1.5 * pi2));
            r.warp = Some(Arc::new(|s| 1.0 - s * s / 4.0));
        }
        ModelSpec::RoundSphereClosed => {
            r.integrals = Some(ClosedIntegrals { sigma2: 16.0 * pi2, weyl: 0.0, euler: 2.0, signature: 0.0 });
        }
        ModelSpec::FlatTorusClosed => {
            r.integrals = Some(ClosedIntegrals { sigma2: 0.0, weyl: 0.0, euler: 0.0, signature: 0.0 });
        }
        ModelSpec::ProductS2S2 { r1, r2 } => {
            let (k1, k2) = (1.0 / (r1 * r1), 1.0 / (r2 * r2));
            let scalar = 2.0 * (k1 + k2);
            let d = k1 - k2;
            let sigma2 = scalar * scalar / 24.0 - d * d / 2.0;
            let vol = 16.0 * pi2 * r1 * r1 * r2 * r2;
            let s2 = sigma2 * vol;
            r.integrals = Some(ClosedIntegrals {
                sigma2: s2,
                weyl: 4.0 * (32.0 * pi2 - s2),
                euler: 4.0,
                signature: 0.0,
            });
        }
        ModelSpec::ComplexProjective => {
            r.integrals = Some(ClosedIntegrals { sigma2: 12.0 * pi2, weyl: 48.0 * pi2, euler: 3.0, signature: -1.0 });
        }
        ModelSpec::AdsSchwarzschild { .. } | ModelSpec::TaubNutAds { .. } => {}
        ModelSpec::PerturbedHyperbolic { .. } => {
            return Err(Error::NotAvailable(format!("{spec} has no closed-form data")));
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fg::ProfileFn;
    use crate::tensor::{curvature, einstein_residual, laplacian};

    #[test]
    fn horizon_radius_and_period() {
        assert!((ads_horizon_radius(1.0) - 1.0).abs() < 1e-15);
        assert!((ads_period(1.0) - PI).abs() < 1e-14);
        let r = ads_horizon_radius(0.3);
        assert!((r * r * r + r - 0.6).abs() < 1e-15);
    }

    #[test]
    fn spec_round_trips_through_toml() {
        for s in ModelSpec::library() {
            assert_eq!(ModelSpec::from_toml(&s.to_toml()).unwrap(), s);
        }
        assert_eq!(
            ModelSpec::from_name("ads-schwarzschild", Some(0.5)).unwrap(),
            ModelSpec::AdsSchwarzschild { m: 0.5 }
        );
        assert!(ModelSpec::from_name("anti-de-sitter", None).is_err());
    }

    #[test]
    fn ball_chart_is_einstein_with_eigenfunction() {
        let m = hyperbolic_ball();
        for p in [[0.0, 0.0, 0.0, 0.0], [0.1, -0.2, 0.3, 0.05], [0.4, 0.4, -0.4, 0.1]] {
            assert!(einstein_residual(&m, &p, 3).unwrap() < 1e-10);
            let t = hyperbolic_ball_eigenfunction(&Jet::constants(&p)).v;
            let lt = laplacian(&m, &hyperbolic_ball_eigenfunction, &p).unwrap();
            assert!((lt - 4.0 * t).abs() < 1e-10);
        }
    }

    #[test]
    fn ads_chart_is_einstein() {
        let m = ads_schwarzschild_chart(1.0);
        for x in [0.05, 0.3, 0.7, 0.98] {
            let r = einstein_residual(&m, &[x, 0.5, 1.1, 2.0], 3).unwrap();
            assert!(r < 1e-7, "x={x} residual={r}");
        }
    }

    #[test]
    fn nut_chart_is_einstein_with_berger_boundary() {
        let m = taub_nut_chart(0.4);
        for x in [0.1, 1.0, 2.4] {
            assert!(einstein_residual(&m, &[x, 1.0, 1.2, 0.7], 3).unwrap() < 1e-8);
        }
        let nf = normal_form_from_profile(&taub_nut_profile(0.4).unwrap()).unwrap();
        let c = curvature(nf.boundary(), &nf.representative_point(), 1.0).unwrap();
        assert!((c.scalar - (2.0 - 2.0 * 0.16)).abs() < 1e-12);
    }

    #[test]
    fn perturbation_rejects_large_amplitude() {
        assert!(instantiate(&ModelSpec::PerturbedHyperbolic { amplitude: 5.0, power: 2 }).is_err());
        assert!(instantiate(&ModelSpec::AdsSchwarzschild { m: -1.0 }).is_err());
    }
    fn ball_profile(second: bool) -> WarpedProfile {
        let (inner, lapse, scale): (InnerEnd, Arc<ProfileFn>, Arc<ProfileFn>) = if second {
            // x = 1 − ρ²
            (
                InnerEnd::SquareRoot,
                Arc::new(|_, gap: f64| 1.0 / gap.sqrt()),
                Arc::new(|_, gap: f64| 2.0 * gap.sqrt()),
            )
        } else {
            // x = 1 − ρ
            (
                InnerEnd::Linear,
                Arc::new(|x: f64, _| 2.0 / (2.0 - x)),
                Arc::new(|x: f64, _| 2.0 * (1.0 - x) / (2.0 - x)),
            )
        };
        WarpedProfile {
            label: "ball".into(),
            x_inner: 1.0,
            inner,
            lapse,
            pieces: vec![ProfilePiece { label: "s3".into(), rank: 3, tensor: Arc::new(round_s3_tensor), scale }],
            reference: 0,
            boundary_domain: round_s3_domain(),
            einstein: true,
        }
    }

    #[test]
    fn profile_normal_form_is_parametrization_independent() {
        for second in [false, true] {
            let fg = normal_form_from_profile(&ball_profile(second)).unwrap();
            assert!((fg.s_max() - 2.0).abs() < 1e-12, "s_max {}", fg.s_max());
            for s in [0.0, 0.3, 1.0, 1.7, 1.99] {
                let w = fg.pieces()[0].warp_jet(s);
                assert!((w[0] - (1.0 - s * s / 4.0)).abs() < 1e-12);
                assert!((w[1] + s / 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn profile_already_in_normal_form_is_unchanged() {
        let profile = WarpedProfile {
            label: "identity".into(),
            x_inner: 1.5,
            inner: InnerEnd::Linear,
            lapse: Arc::new(|_, _| 1.0),
            pieces: vec![ProfilePiece {
                label: "s3".into(),
                rank: 3,
                tensor: Arc::new(round_s3_tensor),
                scale: Arc::new(|x: f64, _| 1.0 + 0.2 * x * x - 0.1 * x * x * x),
            }],
            reference: 0,
            boundary_domain: round_s3_domain(),
            einstein: false,
        };
        let fg = normal_form_from_profile(&profile).unwrap();
        assert!((fg.s_max() - 1.5).abs() < 1e-13);
        for s in [0.0, 0.4, 1.2] {
            let w = fg.pieces()[0].warp_at(s);
            assert!((w - (1.0 + 0.2 * s * s - 0.1 * s * s * s)).abs() < 1e-12);
        }
    }

    #[test]
    fn ads_collar_is_einstein_with_expected_g2() {
        for m in [0.2, 1.0, 3.0] {
            let model = instantiate(&ModelSpec::AdsSchwarzschild { m }).unwrap();
            let fg = model.fg().unwrap();
            assert!(fg.gauge_defect() < 1e-9, "gauge {}", fg.gauge_defect());
            for (s, r) in fg.einstein_residual_profile(6).unwrap() {
                assert!(r < 1e-6, "m={m} s={s} residual={r}");
            }
            let y = fg.representative_point();
            let g2 = crate::fg::g2_closed_form(fg.boundary(), 3, &y).unwrap();
            let e = crate::fg::extract_expansion(fg, 3, &y).unwrap();
            let c = e.coefficient(2).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((c[i][j] - g2[i][j]).abs() < 1e-5, "m={m} ({i},{j}) {} vs {}", c[i][j], g2[i][j]);
                }
            }
        }
    }

    #[test]
    fn nut_collar_is_einstein() {
        let fg = instantiate(&ModelSpec::TaubNutAds { n: 0.3 }).unwrap().fg.unwrap();
        for (_, r) in fg.einstein_residual_profile(6).unwrap() {
            assert!(r < 1e-6);
        }
    }
}
