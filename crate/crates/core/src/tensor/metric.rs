use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_VARS};

pub type Mat = [[f64; MAX_VARS]; MAX_VARS];

/// Metric components as a closure over jets, returning the upper triangle in
/// row-major order: `g00, g01, .., g0d, g11, g12, ..`.
pub type ComponentFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

/// Scalar field over a chart, written against jet arithmetic.
pub type ScalarFn = dyn Fn(&[Jet]) -> Jet + Send + Sync;

/// How first and second metric derivatives are obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeScheme {
    /// Exact derivatives from jet propagation through the component closure.
    Analytic,
    /// Central differences on `levels` step sizes `step, 2·step, 4·step, ..`
    /// combined by Richardson extrapolation; `step` is the finest spacing.
    CentralDifference { step: f64, levels: usize },
}

impl DerivativeScheme {
    pub fn default_finite_difference() -> Self {
        DerivativeScheme::CentralDifference { step: 1e-4, levels: 2 }
    }
}

/// Open coordinate box on which the chart is non-degenerate.
///
/// `cyclic[i]` marks coordinates the metric does not depend on (Killing
/// coordinates); quadrature may integrate them out by their period.
/// `periodic[i]` marks angular coordinates, which quadrature samples
/// uniformly when they are not cyclic.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cyclic: Vec<bool>,
    pub periodic: Vec<bool>,
}

impl ChartDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = lower.len();
        assert_eq!(n, upper.len());
        ChartDomain {
            lower,
            upper,
            cyclic: vec![false; n],
            periodic: vec![false; n],
        }
    }

    /// Marks Killing angles (cyclic and periodic).
    pub fn with_cyclic(mut self, axes: &[usize]) -> Self {
        for &a in axes {
            self.cyclic[a] = true;
            self.periodic[a] = true;
        }
        self
    }

    pub fn with_periodic(mut self, axes: &[usize]) -> Self {
        for &a in axes {
            self.periodic[a] = true;
        }
        self
    }

    /// Same box with every Killing flag dropped (angles stay periodic).
    pub fn without_symmetry(mut self) -> Self {
        self.cyclic.iter_mut().for_each(|c| *c = false);
        self
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.lower.len()
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| x > lo && x < hi)
    }
}

/// Metric value plus first and second coordinate derivatives at one point.
#[derive(Clone, Debug)]
pub struct MetricSample {
    pub dim: usize,
    pub point: Vec<f64>,
    pub g: Mat,
    /// `dg[k][i][j] = ∂_k g_ij`
    pub dg: [Mat; MAX_VARS],
    /// `ddg[k][l][i][j] = ∂_k ∂_l g_ij`
    pub ddg: [[Mat; MAX_VARS]; MAX_VARS],
}

/// A coordinate-chart Riemannian metric with derivative access.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    components: Arc<ComponentFn>,
    domain: ChartDomain,
    scheme: DerivativeScheme,
    label: String,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("scheme", &self.scheme)
            .finish()
    }
}

pub(crate) fn triangle_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

pub(crate) fn triangle_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

impl MetricField {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        domain: ChartDomain,
        components: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        assert!((2..=MAX_VARS).contains(&dim), "metric dimension {dim} unsupported");
        assert_eq!(domain.lower.len(), dim);
        MetricField {
            dim,
            components: Arc::new(components),
            domain,
            scheme: DerivativeScheme::Analytic,
            label: label.into(),
        }
    }

    /// Diagonal metric from a closure returning the diagonal entries.
    pub fn diagonal(
        label: impl Into<String>,
        dim: usize,
        domain: ChartDomain,
        diag: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, dim, domain, move |x| {
            let d = diag(x);
            let mut out = vec![Jet::constant(0.0); triangle_len(dim)];
            for (i, v) in d.into_iter().enumerate() {
                out[triangle_index(dim, i, i)] = v;
            }
            out
        })
    }

    pub fn with_scheme(mut self, scheme: DerivativeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_domain(mut self, domain: ChartDomain) -> Self {
        assert_eq!(domain.lower.len(), self.dim);
        self.domain = domain;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn components(&self) -> Arc<ComponentFn> {
        Arc::clone(&self.components)
    }

    /// Raw component evaluation on jets (no domain check).
    pub fn eval_jets(&self, x: &[Jet]) -> Vec<Jet> {
        (self.components)(x)
    }

    /// Metric matrix at `p` (exactly symmetric by construction).
    pub fn matrix(&self, p: &[f64]) -> Result<Mat> {
        self.check_domain(p)?;
        let comps = (self.components)(&Jet::constants(p));
        Ok(self.fill(|k| comps[k].v))
    }

    fn fill(&self, f: impl Fn(usize) -> f64) -> Mat {
        let mut m = [[0.0; MAX_VARS]; MAX_VARS];
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = f(triangle_index(self.dim, i, j));
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    }

    fn check_domain(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Domain {
                point: p.to_vec(),
                reason: format!("expected {} coordinates", self.dim),
            });
        }
        if !self.domain.contains(p) {
            return Err(Error::Domain {
                point: p.to_vec(),
                reason: format!("outside chart box of {}", self.label),
            });
        }
        Ok(())
    }

    /// `sqrt(det g)` at `p`.
    pub fn volume_density(&self, p: &[f64]) -> Result<f64> {
        let g = self.matrix(p)?;
        Ok(determinant(&g, self.dim).sqrt())
    }

    /// Metric and derivatives at `p` according to the configured scheme.
    pub fn sample(&self, p: &[f64]) -> Result<MetricSample> {
        self.check_domain(p)?;
        let sample = match self.scheme {
            DerivativeScheme::Analytic => self.sample_analytic(p),
            DerivativeScheme::CentralDifference { step, levels } => {
                self.sample_differenced(p, step, levels.max(1))?
            }
        };
        check_positive_definite(&sample.g, self.dim, p)?;
        Ok(sample)
    }

    fn sample_analytic(&self, p: &[f64]) -> MetricSample {
        let comps = (self.components)(&Jet::seed(p));
        let d = self.dim;
        let g = self.fill(|k| comps[k].v);
        let mut dg = [[[0.0; MAX_VARS]; MAX_VARS]; MAX_VARS];
        let mut ddg = [[[[0.0; MAX_VARS]; MAX_VARS]; MAX_VARS]; MAX_VARS];
        for k in 0..d {
            dg[k] = self.fill(|c| comps[c].g[k]);
            for l in 0..d {
                ddg[k][l] = self.fill(|c| comps[c].h[k][l]);
            }
        }
        MetricSample {
            dim: d,
            point: p.to_vec(),
            g,
            dg,
            ddg,
        }
    }

    fn values_at(&self, p: &[f64]) -> Result<Vec<f64>> {
        if !self.domain.contains(p) {
            return Err(Error::Domain {
                point: p.to_vec(),
                reason: format!("finite-difference stencil leaves chart box of {}", self.label),
            });
        }
        Ok((self.components)(&Jet::constants(p)).iter().map(|j| j.v).collect())
    }

    fn sample_differenced(&self, p: &[f64], step: f64, levels: usize) -> Result<MetricSample> {
        let d = self.dim;
        let nc = triangle_len(d);
        let center = self.values_at(p)?;
        // estimates[level] = (first derivs [k][c], second derivs [k][l][c])
        let mut firsts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(levels);
        let mut seconds: Vec<Vec<Vec<Vec<f64>>>> = Vec::with_capacity(levels);
        for level in 0..levels {
            let h = step * f64::powi(2.0, (levels - 1 - level) as i32);
            let shifted = |offs: &[(usize, f64)]| -> Result<Vec<f64>> {
                let mut q = p.to_vec();
                for &(axis, o) in offs {
                    q[axis] += o;
                }
                self.values_at(&q)
            };
            let mut first = vec![vec![0.0; nc]; d];
            let mut second = vec![vec![vec![0.0; nc]; d]; d];
            for k in 0..d {
                let plus = shifted(&[(k, h)])?;
                let minus = shifted(&[(k, -h)])?;
                for c in 0..nc {
                    first[k][c] = (plus[c] - minus[c]) / (2.0 * h);
                    second[k][k][c] = (plus[c] - 2.0 * center[c] + minus[c]) / (h * h);
                }
                for l in (k + 1)..d {
                    let pp = shifted(&[(k, h), (l, h)])?;
                    let pm = shifted(&[(k, h), (l, -h)])?;
                    let mp = shifted(&[(k, -h), (l, h)])?;
                    let mm = shifted(&[(k, -h), (l, -h)])?;
                    for c in 0..nc {
                        let v = (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * h * h);
                        second[k][l][c] = v;
                        second[l][k][c] = v;
                    }
                }
            }
            firsts.push(first);
            seconds.push(second);
        }
        let scale = center.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let (first, disc1) = richardson(&firsts);
        let (second, disc2) = richardson(&seconds);
        let discrepancy = disc1.max(disc2) / scale;
        if levels > 1 && !(discrepancy < 1e-3) {
            return Err(Error::DerivativeTolerance { discrepancy });
        }
        let g = self.fill(|c| center[c]);
        let mut dg = [[[0.0; MAX_VARS]; MAX_VARS]; MAX_VARS];
        let mut ddg = [[[[0.0; MAX_VARS]; MAX_VARS]; MAX_VARS]; MAX_VARS];
        for k in 0..d {
            dg[k] = self.fill(|c| first[k][c]);
            for l in 0..d {
                ddg[k][l] = self.fill(|c| second[k][l][c]);
            }
        }
        Ok(MetricSample {
            dim: d,
            point: p.to_vec(),
            g,
            dg,
            ddg,
        })
    }

    /// Pointwise conformal change `factor · g` (factor must be positive).
    /// The factor may depend on every coordinate, so Killing flags are dropped.
    pub fn conformal(&self, factor: Arc<ScalarFn>) -> MetricField {
        let inner = Arc::clone(&self.components);
        MetricField {
            dim: self.dim,
            components: Arc::new(move |x| {
                let f = factor(x);
                inner(x).into_iter().map(|c| c * f).collect()
            }),
            domain: self.domain.clone().without_symmetry(),
            scheme: self.scheme,
            label: format!("conformal({})", self.label),
        }
    }

    /// `e^{2w} g`.
    pub fn conformal_exp(&self, w: Arc<ScalarFn>) -> MetricField {
        self.conformal(Arc::new(move |x| (w(x) * 2.0).exp()))
    }
}

/// Flattened nested lists with a uniform "leaf" type, used by the
/// finite-difference Richardson table.
trait Nested: Clone {
    fn combine(&self, other: &Self, wa: f64, wb: f64) -> Self;
    fn max_diff(&self, other: &Self) -> f64;
}

impl Nested for f64 {
    fn combine(&self, other: &Self, wa: f64, wb: f64) -> Self {
        wa * self + wb * other
    }
    fn max_diff(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl<T: Nested> Nested for Vec<T> {
    fn combine(&self, other: &Self, wa: f64, wb: f64) -> Self {
        self.iter().zip(other).map(|(a, b)| a.combine(b, wa, wb)).collect()
    }
    fn max_diff(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .fold(0.0f64, |m, (a, b)| m.max(a.max_diff(b)))
    }
}

/// Richardson table for an h² error series; returns the extrapolated value and
/// the change contributed by the final extrapolation column.
fn richardson<T: Nested>(levels: &[T]) -> (T, f64) {
    let mut table: Vec<T> = levels.to_vec();
    let mut last_change = 0.0;
    let mut factor = 4.0;
    while table.len() > 1 {
        let next: Vec<T> = table
            .windows(2)
            .map(|w| w[1].combine(&w[0], factor / (factor - 1.0), -1.0 / (factor - 1.0)))
            .collect();
        last_change = next[next.len() - 1].max_diff(&table[table.len() - 1]);
        table = next;
        factor *= 4.0;
    }
    (table.pop().expect("at least one level"), last_change)
}

pub(crate) fn determinant(g: &Mat, dim: usize) -> f64 {
    let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| g[i][j]);
    m.determinant()
}

/// Positive definiteness via leading principal minors.
pub(crate) fn check_positive_definite(g: &Mat, dim: usize, p: &[f64]) -> Result<()> {
    let diag_scale: f64 = (0..dim).map(|i| g[i][i].abs()).product::<f64>().max(1e-300);
    for k in 1..=dim {
        let minor = determinant(g, k);
        if !(minor > 0.0) {
            return Err(Error::NotPositiveDefinite {
                point: p.to_vec(),
                minor: k,
                value: minor,
            });
        }
    }
    if determinant(g, dim) / diag_scale < 1e-14 {
        return Err(Error::SingularMetric { point: p.to_vec() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar_plane() -> MetricField {
        MetricField::diagonal("polar", 2, ChartDomain::new(vec![0.0, -10.0], vec![10.0, 10.0]), |x| {
            vec![Jet::constant(1.0), x[0] * x[0]]
        })
    }

    #[test]
    fn analytic_and_differenced_samples_agree() {
        let m = polar_plane();
        let p = [1.3, 0.2];
        let a = m.sample(&p).unwrap();
        let f = m
            .clone()
            .with_scheme(DerivativeScheme::default_finite_difference())
            .sample(&p)
            .unwrap();
        assert!((a.dg[0][1][1] - 2.6).abs() < 1e-14);
        assert!((a.ddg[0][0][1][1] - 2.0).abs() < 1e-14);
        assert!((f.dg[0][1][1] - 2.6).abs() < 1e-9);
        assert!((f.ddg[0][0][1][1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_points_outside_domain() {
        let m = polar_plane();
        assert!(matches!(m.sample(&[-1.0, 0.0]), Err(Error::Domain { .. })));
        assert!(matches!(m.sample(&[1.0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn rejects_indefinite_metric() {
        let m = MetricField::diagonal("bad", 2, ChartDomain::new(vec![-1.0; 2], vec![1.0; 2]), |x| {
            vec![Jet::constant(1.0), x[0]]
        });
        assert!(matches!(
            m.sample(&[-0.5, 0.0]),
            Err(Error::NotPositiveDefinite { minor: 2, .. })
        ));
    }

    #[test]
    fn triangle_indexing_is_row_major_upper() {
        let dim = 4;
        let mut seen = vec![];
        for i in 0..dim {
            for j in i..dim {
                seen.push(triangle_index(dim, i, j));
            }
        }
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(triangle_index(dim, 3, 1), triangle_index(dim, 1, 3));
    }
}
