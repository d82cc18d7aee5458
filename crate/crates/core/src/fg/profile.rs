//! Normal form of a cohomogeneity-one metric by integrating the
//! normal-geodesic equation.
//!
//! Input metrics have the shape `a(x)² dx² + Σ_a b_a(x)² ĝ_a` on
//! `0 < x < x_in`, written as `a = â/x`, `b_a = b̂_a/x` with `â(0) = 1`
//! and `b̂_a` regular. The geodesic defining function solves `ds/s = a dx`:
//!
//! ```text
//! s(x) = x · exp(∫₀ˣ (â − 1)/x') / b̂_ref(0)
//! ```
//!
//! and the warps are `w_a = exp(∫₀ˣ (â − 1)/x') · b̂_a(x)/b̂_a(0)`.
//! Near the inner end the profile is sampled in `ν` with
//! `x = x_in (1 − ν^p)` (`p = 1` when `â` is regular there, `p = 2`
//! when `â ~ gap^{-1/2}`), which makes every integrand smooth.

use std::sync::Arc;

use super::{FgMetric, WarpPiece};
use crate::chebyshev::{lobatto_points, ChebSeries};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quadrature::GaussLegendre;
use crate::tensor::{ChartDomain, ComponentFn};

/// Profile function of `(x, x_in − x)`; the gap is passed separately so
/// that factors vanishing at the inner end can be evaluated without
/// cancellation.
pub type ProfileFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerEnd {
    /// `â` stays regular at the inner end (centre of a ball chart).
    Linear,
    /// `â ~ gap^{-1/2}` at the inner end (horizons, bolts and nuts of
    /// circle actions).
    SquareRoot,
}

impl InnerEnd {
    fn power(self) -> i32 {
        match self {
            InnerEnd::Linear => 1,
            InnerEnd::SquareRoot => 2,
        }
    }
}

#[derive(Clone)]
pub struct ProfilePiece {
    pub label: String,
    pub rank: usize,
    pub tensor: Arc<ComponentFn>,
    /// `b̂_a(x, gap)`
    pub scale: Arc<ProfileFn>,
}

#[derive(Clone)]
pub struct WarpedProfile {
    pub label: String,
    pub x_inner: f64,
    pub inner: InnerEnd,
    /// `â(x, gap)`
    pub lapse: Arc<ProfileFn>,
    pub pieces: Vec<ProfilePiece>,
    /// Piece whose scale fixes the boundary representative.
    pub reference: usize,
    pub boundary_domain: ChartDomain,
    pub einstein: bool,
}

const SERIES_TOL: f64 = 1e-14;
const MAX_DEGREE: usize = 1024;
const PANEL_NODES: usize = 20;
/// Allowed deviation of `|ds|²` from one in the compactified metric.
pub const GAUGE_TOL: f64 = 1e-7;

struct NuSeries {
    s: ChebSeries,
    /// `∫₀ˣ (â − 1)/x'` in `ν`.
    logs: ChebSeries,
    warps: Vec<ChebSeries>,
}

fn tail_ok(series: &ChebSeries, tol: f64) -> bool {
    let n = series.coeffs.len();
    let scale = series.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-300);
    series.coeffs[n.saturating_sub(3)..]
        .iter()
        .all(|c| c.abs() <= tol * scale)
}

impl WarpedProfile {
    fn x_of(&self, nu: f64) -> (f64, f64) {
        let gap = self.x_inner * nu.powi(self.inner.power());
        (self.x_inner - gap, gap)
    }

    fn dx_dnu(&self, nu: f64) -> f64 {
        let p = self.inner.power();
        -(p as f64) * self.x_inner * nu.powi(p - 1)
    }

    /// `d/dν ∫₀ˣ (â − 1)/x'`, evaluated only at interior points.
    fn log_integrand(&self, nu: f64) -> f64 {
        let (x, gap) = self.x_of(nu);
        ((self.lapse)(x, gap) - 1.0) / x * self.dx_dnu(nu)
    }

    fn build_nu_series(&self) -> Result<NuSeries> {
        let rule = GaussLegendre::new(PANEL_NODES);
        let b_ref = (self.pieces[self.reference].scale)(0.0, self.x_inner);
        let b0: Vec<f64> = self.pieces.iter().map(|p| (p.scale)(0.0, self.x_inner)).collect();
        if b0.iter().any(|v| !(v.abs() > 0.0) || !v.is_finite()) {
            return Err(Error::CharacteristicFailure(format!(
                "{}: warp scales must be finite and nonzero at the boundary",
                self.label
            )));
        }
        let mut n = 32;
        loop {
            let nodes = lobatto_points(0.0, 1.0, n);
            // nodes run from ν = 1 (boundary) down to ν = 0
            let mut logs = vec![0.0; n + 1];
            for j in 1..=n {
                let piece = rule.integrate(nodes[j], nodes[j - 1], |nu| self.log_integrand(nu));
                logs[j] = logs[j - 1] - piece;
            }
            if logs.iter().any(|v| !v.is_finite()) {
                return Err(Error::CharacteristicFailure(format!(
                    "{}: normal-geodesic integral diverged",
                    self.label
                )));
            }
            let s_vals: Vec<f64> = nodes
                .iter()
                .zip(&logs)
                .map(|(&nu, &l)| self.x_of(nu).0 * l.exp() / b_ref)
                .collect();
            let warps: Vec<ChebSeries> = self
                .pieces
                .iter()
                .zip(&b0)
                .map(|(p, &b)| {
                    let vals: Vec<f64> = nodes
                        .iter()
                        .zip(&logs)
                        .map(|(&nu, &l)| {
                            let (x, gap) = self.x_of(nu);
                            l.exp() * (p.scale)(x, gap) / b
                        })
                        .collect();
                    ChebSeries::from_lobatto_values(0.0, 1.0, &vals)
                })
                .collect();
            let s = ChebSeries::from_lobatto_values(0.0, 1.0, &s_vals);
            if tail_ok(&s, SERIES_TOL * 10.0) && warps.iter().all(|w| tail_ok(w, SERIES_TOL * 10.0)) {
                let logs = ChebSeries::from_lobatto_values(0.0, 1.0, &logs);
                return Ok(NuSeries { s, logs, warps });
            }
            if n >= MAX_DEGREE {
                return Err(Error::CharacteristicFailure(format!(
                    "{}: profile not resolved at degree {MAX_DEGREE}",
                    self.label
                )));
            }
            n *= 2;
        }
    }
}

impl WarpedProfile {
    /// `s_max − S(ν) = ∫₀^ν S â/x |dx/dν'| dν'` as a series in `ν`,
    /// computed without the cancellation of the difference.
    fn depth_series(&self, s: &ChebSeries) -> Result<ChebSeries> {
        let rule = GaussLegendre::new(PANEL_NODES);
        let integrand = |nu: f64| {
            let (x, gap) = self.x_of(nu);
            s.eval(nu) * (self.lapse)(x, gap) / x * -self.dx_dnu(nu)
        };
        let (depth, ok) = ChebSeries::adaptive_interior(0.0, 1.0, SERIES_TOL, MAX_DEGREE, |nu| {
            // panels refine toward ν = 0 where the sample may sit very close
            let panels = 4;
            (0..panels)
                .map(|k| {
                    let a = nu * k as f64 / panels as f64;
                    let b = nu * (k + 1) as f64 / panels as f64;
                    rule.integrate(a, b, integrand)
                })
                .sum()
        });
        if !ok {
            return Err(Error::CharacteristicFailure(format!("{}: depth below s_max not resolved", self.label)));
        }
        Ok(depth)
    }
}

/// Solves `S(ν) = s` for decreasing `S` on [0, 1].
fn invert(series: &ChebSeries, deriv: &ChebSeries, s: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut nu = 1.0 - s / series.eval(0.0);
    for _ in 0..100 {
        let f = series.eval(nu) - s;
        if f > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        let d = deriv.eval(nu);
        let mut next = nu - f / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - nu).abs() < 1e-16 {
            return next;
        }
        nu = next;
    }
    nu
}

/// Builds the normal form `s⁻²(ds² + Σ w_a(s)² ĝ_a)` of a warped profile.
pub fn normal_form_from_profile(profile: &WarpedProfile) -> Result<FgMetric> {
    if profile.pieces.is_empty() || profile.reference >= profile.pieces.len() {
        return Err(Error::InvalidInput("profile needs pieces and a valid reference".into()));
    }
    if !(profile.x_inner > 0.0) {
        return Err(Error::InvalidInput(format!("inner coordinate must be positive, got {}", profile.x_inner)));
    }
    let nus = profile.build_nu_series()?;
    let ds = nus.s.derivative();

    // monotonicity of s along the normal geodesic
    let grid = 4000;
    for k in 0..=grid {
        let nu = k as f64 / grid as f64;
        if !(ds.eval(nu) < 0.0) {
            return Err(Error::CharacteristicFailure(format!(
                "{}: defining function is not monotone near nu = {nu}",
                profile.label
            )));
        }
    }

    // |ds|² = 1 for s² g, from ds/dx against s·a
    let mut gauge_defect = 0.0f64;
    for k in 1..40 {
        let nu = k as f64 / 40.0;
        let (x, gap) = profile.x_of(nu);
        let s = nus.s.eval(nu);
        let dsdx = ds.eval(nu) / profile.dx_dnu(nu);
        let a = (profile.lapse)(x, gap) / x;
        let norm2 = (dsdx / (s * a)).powi(2);
        gauge_defect = gauge_defect.max((norm2 - 1.0).abs());
    }
    if !(gauge_defect < GAUGE_TOL) {
        return Err(Error::CharacteristicFailure(format!(
            "{}: gauge condition violated by {gauge_defect:e}",
            profile.label
        )));
    }

    let s_max = nus.s.eval(0.0);
    let b_ref = (profile.pieces[profile.reference].scale)(0.0, profile.x_inner);
    let depth = profile.depth_series(&nus.s)?;
    let mut pieces = Vec::with_capacity(profile.pieces.len());
    for (p, wnu) in profile.pieces.iter().zip(&nus.warps) {
        // warps that close off at the inner end are stored as
        // (s_max − s)·h(s), so that w'/w keeps full relative accuracy
        let collapsing = (p.scale)(profile.x_inner, 0.0) == 0.0;
        let hnu = if collapsing {
            let b0 = (p.scale)(0.0, profile.x_inner);
            let (h, ok) = ChebSeries::adaptive_interior(0.0, 1.0, 10.0 * SERIES_TOL, MAX_DEGREE, |nu| {
                let (x, gap) = profile.x_of(nu);
                nus.logs.eval(nu).exp() * (p.scale)(x, gap) / (b0 * depth.eval(nu))
            });
            if !ok {
                return Err(Error::CharacteristicFailure(format!(
                    "{}: collapsing warp {} not resolved",
                    profile.label, p.label
                )));
            }
            h
        } else {
            wnu.clone()
        };
        let (hs, ok) = ChebSeries::adaptive(0.0, s_max, SERIES_TOL, MAX_DEGREE, |s| {
            hnu.eval(invert(&nus.s, &ds, s))
        });
        if !ok {
            return Err(Error::CharacteristicFailure(format!(
                "{}: warp {} not resolved in s",
                profile.label, p.label
            )));
        }
        let ratio = ((p.scale)(0.0, profile.x_inner) / b_ref).powi(2);
        let tensor = Arc::clone(&p.tensor);
        let warp: Arc<super::WarpFn> = if collapsing {
            Arc::new(move |s: Jet| (s_max - s) * hs.eval(s))
        } else {
            Arc::new(move |s: Jet| hs.eval(s))
        };
        pieces.push(WarpPiece {
            label: p.label.clone(),
            rank: p.rank,
            tensor: Arc::new(move |y: &[Jet]| tensor(y).into_iter().map(|c| c * ratio).collect()),
            warp,
        });
    }
    let fg = FgMetric::warped(profile.label.clone(), profile.boundary_domain.clone(), pieces, s_max)?
        .with_einstein(profile.einstein)
        .with_gauge_defect(gauge_defect);
    Ok(fg)
}
