//! Geodesic normal forms `g = s⁻²(ds² + g_s)` and their expansion data.
//!
//! A normal form here is a warped family `g_s = Σ_a w_a(s)² ĝ_a` where the
//! `ĝ_a` are fixed boundary tensors (rank `k_a`) summing to the boundary
//! metric and `w_a(0) = 1`. Every model in the library has this shape; the
//! volume form is then `s⁻⁴ J(s) dv_ĝ ds` with `J = Π w_a^{k_a}`.

mod expansion;
mod profile;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quadrature::box_integral;
use crate::tensor::{curvature, triangle_index, triangle_len, ChartDomain, ComponentFn, Mat, MetricField};

pub use expansion::{
    default_s_ladder, extract_expansion, extract_from_samples, read_samples_csv, write_samples_csv,
    ExpansionSeries, GsSample,
};
pub use profile::{normal_form_from_profile, InnerEnd, ProfileFn, ProfilePiece, WarpedProfile};

/// Warp factor as a function of `s`, written against jet arithmetic.
pub type WarpFn = dyn Fn(Jet) -> Jet + Send + Sync;

/// One block `w(s)² ĝ_a` of the boundary family.
#[derive(Clone)]
pub struct WarpPiece {
    pub label: String,
    pub rank: usize,
    /// Upper triangle of `ĝ_a` in boundary coordinates.
    pub tensor: Arc<ComponentFn>,
    pub warp: Arc<WarpFn>,
}

impl WarpPiece {
    pub fn new(
        label: impl Into<String>,
        rank: usize,
        tensor: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
        warp: impl Fn(Jet) -> Jet + Send + Sync + 'static,
    ) -> Self {
        WarpPiece {
            label: label.into(),
            rank,
            tensor: Arc::new(tensor),
            warp: Arc::new(warp),
        }
    }

    pub fn warp_at(&self, s: f64) -> f64 {
        (self.warp)(Jet::constant(s)).v
    }

    /// `(w, w', w'')` at `s`.
    pub fn warp_jet(&self, s: f64) -> [f64; 3] {
        let j = (self.warp)(Jet::var(s, 0));
        [j.v, j.g[0], j.h[0][0]]
    }
}

#[derive(Clone)]
pub struct FgMetric {
    n: usize,
    label: String,
    boundary: MetricField,
    pieces: Vec<WarpPiece>,
    s_max: f64,
    einstein: bool,
    interior_extension: Option<MetricField>,
    gauge_defect: f64,
}

impl fmt::Debug for FgMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FgMetric")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("s_max", &self.s_max)
            .field("pieces", &self.pieces.iter().map(|p| (&p.label, p.rank)).collect::<Vec<_>>())
            .field("einstein", &self.einstein)
            .finish()
    }
}

/// Nodes per non-cyclic boundary axis for boundary volume integrals.
const BOUNDARY_NODES: usize = 32;

impl FgMetric {
    /// Builds a warped normal form. The boundary metric is `Σ ĝ_a`.
    pub fn warped(
        label: impl Into<String>,
        boundary_domain: ChartDomain,
        pieces: Vec<WarpPiece>,
        s_max: f64,
    ) -> Result<Self> {
        let n = boundary_domain.lower.len();
        if n != 3 {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "normal forms are implemented for three-dimensional boundaries",
            });
        }
        let rank: usize = pieces.iter().map(|p| p.rank).sum();
        if rank != n {
            return Err(Error::InvalidInput(format!(
                "warp piece ranks sum to {rank}, expected {n}"
            )));
        }
        if !(s_max > 0.0) {
            return Err(Error::InvalidInput(format!("s_max must be positive, got {s_max}")));
        }
        let label = label.into();
        let tensors: Vec<Arc<ComponentFn>> = pieces.iter().map(|p| Arc::clone(&p.tensor)).collect();
        let boundary = MetricField::new(format!("{label}/boundary"), n, boundary_domain, move |y| {
            let mut out = vec![Jet::constant(0.0); triangle_len(n)];
            for t in &tensors {
                for (o, c) in out.iter_mut().zip(t(y)) {
                    *o += c;
                }
            }
            out
        });
        Ok(FgMetric {
            n,
            label,
            boundary,
            pieces,
            s_max,
            einstein: false,
            interior_extension: None,
            gauge_defect: 0.0,
        })
    }

    pub fn with_einstein(mut self, einstein: bool) -> Self {
        self.einstein = einstein;
        self
    }

    pub(crate) fn with_gauge_defect(mut self, d: f64) -> Self {
        self.gauge_defect = d;
        self
    }

    /// Largest `||ds|² − 1|` seen while constructing the normal form
    /// (zero for closed-form families).
    pub fn gauge_defect(&self) -> f64 {
        self.gauge_defect
    }

    pub fn with_interior_extension(mut self, m: MetricField) -> Self {
        self.interior_extension = Some(m);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn boundary(&self) -> &MetricField {
        &self.boundary
    }
    pub fn pieces(&self) -> &[WarpPiece] {
        &self.pieces
    }
    pub fn s_max(&self) -> f64 {
        self.s_max
    }
    pub fn is_einstein(&self) -> bool {
        self.einstein
    }
    pub fn interior_extension(&self) -> Option<&MetricField> {
        self.interior_extension.as_ref()
    }

    /// A point in the middle of the boundary chart, away from coordinate
    /// singularities; the models are homogeneous so it stands for any point.
    pub fn representative_point(&self) -> Vec<f64> {
        let d = self.boundary.domain();
        d.lower
            .iter()
            .zip(&d.upper)
            .enumerate()
            .map(|(i, (lo, hi))| lo + (hi - lo) * (0.5 + 0.0371 * (i as f64 + 1.0)))
            .collect()
    }

    /// Upper triangle of `g_s` on jets.
    pub fn gs_jets(&self, s: Jet, y: &[Jet]) -> Vec<Jet> {
        let mut out = vec![Jet::constant(0.0); triangle_len(self.n)];
        for p in &self.pieces {
            let w2 = (p.warp)(s).square();
            for (o, c) in out.iter_mut().zip((p.tensor)(y)) {
                *o += w2 * c;
            }
        }
        out
    }

    /// `g_s` at boundary point `y`.
    pub fn gs(&self, s: f64, y: &[f64]) -> Mat {
        let comps = self.gs_jets(Jet::constant(s), &Jet::constants(y));
        let mut m = [[0.0; 4]; 4];
        for i in 0..self.n {
            for j in 0..self.n {
                m[i][j] = comps[triangle_index(self.n, i, j)].v;
            }
        }
        m
    }

    /// `J(s) = Π w_a^{k_a}` on a jet in `s`.
    pub fn jacobian_jet(&self, s: Jet) -> Jet {
        let mut j = Jet::constant(1.0);
        for p in &self.pieces {
            j *= (p.warp)(s).powi(p.rank as i32);
        }
        j
    }

    pub fn jacobian(&self, s: f64) -> f64 {
        self.jacobian_jet(Jet::constant(s)).v
    }

    /// `(J, J', J'')` at `s`.
    pub fn jacobian_derivs(&self, s: f64) -> [f64; 3] {
        let j = self.jacobian_jet(Jet::var(s, 0));
        [j.v, j.g[0], j.h[0][0]]
    }

    /// `Σ k_a w_a''(0) / 2`, the `s²` coefficient of `J`.
    pub fn j2(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.rank as f64 * 0.5 * p.warp_jet(0.0)[2])
            .sum()
    }

    /// `Vol(M, ĝ)`.
    pub fn boundary_volume(&self) -> f64 {
        let b = &self.boundary;
        box_integral(b.domain(), BOUNDARY_NODES, |y| b.volume_density(y).unwrap_or(0.0))
    }

    fn chart_domain(&self, s_lower: f64) -> ChartDomain {
        let bd = self.boundary.domain();
        let mut lower = vec![s_lower];
        lower.extend(&bd.lower);
        let mut upper = vec![self.s_max];
        upper.extend(&bd.upper);
        let mut d = ChartDomain::new(lower, upper);
        for i in 0..bd.cyclic.len() {
            d.cyclic[i + 1] = bd.cyclic[i];
            d.periodic[i + 1] = bd.periodic[i];
        }
        d
    }

    /// `conformal(s) · (ds² + g_s)` in coordinates `(s, y)`.
    fn collar_metric(&self, label: String, s_lower: f64, conformal: Arc<dyn Fn(Jet) -> Jet + Send + Sync>) -> MetricField {
        let this = self.clone();
        let n = self.n;
        MetricField::new(label, n + 1, self.chart_domain(s_lower), move |x| {
            let s = x[0];
            let c = conformal(s);
            let gs = this.gs_jets(s, &x[1..]);
            let mut out = vec![Jet::constant(0.0); triangle_len(n + 1)];
            out[triangle_index(n + 1, 0, 0)] = c;
            for i in 0..n {
                for j in i..n {
                    out[triangle_index(n + 1, i + 1, j + 1)] = c * gs[triangle_index(n, i, j)];
                }
            }
            out
        })
    }

    /// The interior metric `s⁻²(ds² + g_s)` on `(0, s_max) × M`.
    pub fn interior_metric(&self) -> MetricField {
        self.collar_metric(format!("{}/interior", self.label), 0.0, Arc::new(|s: Jet| s.square().recip()))
    }

    /// `s² g = ds² + g_s`, extended slightly past `s = 0` so the boundary
    /// itself can be sampled.
    pub fn compactified_metric(&self) -> MetricField {
        self.collar_metric(
            format!("{}/compactified", self.label),
            -1e-3 * self.s_max,
            Arc::new(|_| Jet::constant(1.0)),
        )
    }

    /// `(su(s))⁻² (ds² + g_s)` for a radial function `v(s) = s·u(s)`.
    pub fn conformally_compactified(
        &self,
        label: impl Into<String>,
        v: Arc<dyn Fn(Jet) -> Jet + Send + Sync>,
    ) -> MetricField {
        self.collar_metric(label.into(), -1e-3 * self.s_max, Arc::new(move |s| v(s).square().recip()))
    }

    /// Same geometry with boundary representative `λ² ĝ`; the new defining
    /// function is `λ s`.
    pub fn rescaled(&self, lambda: f64) -> Result<FgMetric> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!("rescaling factor must be positive, got {lambda}")));
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let t = Arc::clone(&p.tensor);
                let w = Arc::clone(&p.warp);
                let l2 = lambda * lambda;
                WarpPiece {
                    label: p.label.clone(),
                    rank: p.rank,
                    tensor: Arc::new(move |y: &[Jet]| t(y).into_iter().map(|c| c * l2).collect()),
                    warp: Arc::new(move |s: Jet| w(s * (1.0 / lambda))),
                }
            })
            .collect();
        let mut out = FgMetric::warped(
            format!("{}*{lambda}", self.label),
            self.boundary.domain().clone(),
            pieces,
            self.s_max * lambda,
        )?;
        out.einstein = self.einstein;
        Ok(out)
    }

    /// Largest `|Ric + n g|` of the interior metric over `samples` points
    /// spread through the collar.
    pub fn einstein_residual_profile(&self, samples: usize) -> Result<Vec<(f64, f64)>> {
        let m = self.interior_metric();
        let y = self.representative_point();
        (1..=samples)
            .map(|k| {
                let s = self.s_max * k as f64 / (samples + 1) as f64;
                let mut p = vec![s];
                p.extend(&y);
                let c = curvature(&m, &p, 1.0)?;
                Ok((s, c.einstein_residual(self.n as f64)))
            })
            .collect()
    }
}

/// `g⁽²⁾ = −(1/(n−2)) (R̂_ij − R̂/(2(n−1)) ĝ_ij)` at boundary point `p`.
pub fn g2_closed_form(boundary: &MetricField, n: usize, p: &[f64]) -> Result<Mat> {
    if n < 3 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "the second-order coefficient formula is singular for n = 2",
        });
    }
    if boundary.dim() != n {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "boundary metric dimension must equal n",
        });
    }
    let c = curvature(boundary, p, 1.0)?;
    let nf = n as f64;
    let mut out = [[0.0; 4]; 4];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = -(c.ricci[i][j] - c.scalar / (2.0 * (nf - 1.0)) * c.metric[i][j]) / (nf - 2.0);
        }
    }
    Ok(out)
}

/// `tr_g h` for symmetric `h` in dimension `dim`.
pub fn trace_with(g: &Mat, h: &Mat, dim: usize) -> f64 {
    let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| g[i][j]);
    let inv = m.try_inverse().expect("boundary metric is invertible");
    let mut t = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            t += inv[(i, j)] * h[j][i];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn round_s3() -> (ChartDomain, impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + Clone) {
        let d = ChartDomain::new(vec![0.0, 0.0, 0.0], vec![PI, PI, 2.0 * PI]).with_cyclic(&[2]);
        let t = |y: &[Jet]| {
            let z = Jet::constant(0.0);
            let a = y[0].sin().square();
            vec![Jet::constant(1.0), z, z, a, z, a * y[1].sin().square()]
        };
        (d, t)
    }

    fn hyperbolic() -> FgMetric {
        let (d, t) = round_s3();
        FgMetric::warped("h", d, vec![WarpPiece::new("s3", 3, t, |s| 1.0 - s.square() * 0.25)], 2.0)
            .unwrap()
            .with_einstein(true)
    }

    #[test]
    fn boundary_volume_of_round_s3() {
        assert!((hyperbolic().boundary_volume() - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_normal_form_is_einstein() {
        for (_, r) in hyperbolic().einstein_residual_profile(7).unwrap() {
            assert!(r < 1e-10, "{r}");
        }
    }

    #[test]
    fn g2_of_round_s3_is_minus_half_metric() {
        let h = hyperbolic();
        let p = h.representative_point();
        let g2 = g2_closed_form(h.boundary(), 3, &p).unwrap();
        let g = h.boundary().matrix(&p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((g2[i][j] + 0.5 * g[i][j]).abs() < 1e-12);
            }
        }
        assert!(matches!(
            g2_closed_form(h.boundary(), 2, &p),
            Err(Error::UnsupportedDimension { n: 2, .. })
        ));
    }

    #[test]
    fn rescaling_preserves_the_interior_metric() {
        let h = hyperbolic();
        let r = h.rescaled(1.7).unwrap();
        assert!((r.s_max() - 3.4).abs() < 1e-15);
        let y = h.representative_point();
        let s = 0.8;
        let a = h.gs(s, &y);
        let b = r.gs(1.7 * s, &y);
        for i in 0..3 {
            for j in 0..3 {
                // s⁻² g_s is invariant
                assert!((a[i][j] / (s * s) - b[i][j] / (1.7 * 1.7 * s * s)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gauge_row_is_structural() {
        let c = hyperbolic().compactified_metric();
        let mut p = vec![0.3];
        p.extend(hyperbolic().representative_point());
        let g = c.matrix(&p).unwrap();
        assert_eq!([g[0][0], g[0][1], g[0][2], g[0][3]], [1.0, 0.0, 0.0, 0.0]);
    }
}
