//! Gauss–Legendre rules and composite 1-D integration.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::tensor::ChartDomain;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped affinely onto [a, b].
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre over explicit panel breakpoints.
pub fn composite(rule: &GaussLegendre, breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    breaks
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], &f))
        .sum()
}

/// Geometric panel breakpoints from `a` to `b` (both > 0), denser near `a`.
pub fn geometric_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let ratio = (b / a).powf(1.0 / panels as f64);
    let mut out: Vec<f64> = (0..=panels).map(|k| a * ratio.powi(k as i32)).collect();
    out[panels] = b;
    out
}

/// Integral with a mesh-doubling error estimate: returns (fine value, |fine − coarse|).
pub fn with_doubling(
    nodes: usize,
    panels: usize,
    a: f64,
    b: f64,
    f: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let rule = GaussLegendre::new(nodes);
    let coarse = composite(&rule, &uniform_breaks(a, b, panels), &f);
    let fine = composite(&rule, &uniform_breaks(a, b, 2 * panels), &f);
    (fine, (fine - coarse).abs())
}

pub fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels)
        .map(|k| a + (b - a) * k as f64 / panels as f64)
        .collect()
}

/// Tensor-product Gauss–Legendre integral of `f` over a chart box.
///
/// Cyclic axes are not sampled: `f` is evaluated at their midpoint and the
/// result is multiplied by their length. Periodic axes that are not cyclic
/// use the uniform midpoint rule with the same node count. Node values are
/// computed in parallel and summed in a fixed order.
pub fn box_integral(domain: &ChartDomain, nodes: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    try_box_integral::<std::convert::Infallible>(domain, nodes, 1, |p| Ok(vec![f(p)]))
        .map(|v| v[0])
        .unwrap_or_else(|e| match e {})
}

/// Vector-valued [`box_integral`] whose integrand may fail; the first
/// failure in node order is returned.
pub fn try_box_integral<E: Send>(
    domain: &ChartDomain,
    nodes: usize,
    width: usize,
    f: impl Fn(&[f64]) -> Result<Vec<f64>, E> + Sync,
) -> Result<Vec<f64>, E> {
    let rule = GaussLegendre::new(nodes);
    let dim = domain.lower.len();
    let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let (lo, hi) = (domain.lower[i], domain.upper[i]);
        if domain.cyclic[i] {
            axes.push(vec![(0.5 * (lo + hi), hi - lo)]);
        } else if domain.periodic[i] {
            let h = (hi - lo) / nodes as f64;
            axes.push((0..nodes).map(|k| (lo + (k as f64 + 0.5) * h, h)).collect());
        } else {
            axes.push(rule.on_interval(lo, hi).collect());
        }
    }
    let total: usize = axes.iter().map(Vec::len).product();
    let values: Vec<Result<(f64, Vec<f64>), E>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut point = vec![0.0; dim];
            let mut weight = 1.0;
            for i in (0..dim).rev() {
                let (x, w) = axes[i][rem % axes[i].len()];
                rem /= axes[i].len();
                point[i] = x;
                weight *= w;
            }
            f(&point).map(|v| (weight, v))
        })
        .collect();
    let mut sum = vec![0.0; width];
    for v in values {
        let (w, vals) = v?;
        for (acc, x) in sum.iter_mut().zip(vals) {
            *acc += w * x;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 12, 33] {
            let rule = GaussLegendre::new(n);
            let deg = 2 * n - 1;
            let exact = |k: usize| if k.is_multiple_of(2) { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            for k in 0..=deg {
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                assert!((got - exact(k)).abs() < 1e-13, "n={n} k={k} got={got}");
            }
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn geometric_composite_handles_steep_integrand() {
        let rule = GaussLegendre::new(20);
        let breaks = geometric_breaks(0.01, 2.0, 16);
        let got = composite(&rule, &breaks, |s| s.powi(-4));
        let exact = (0.01f64.powi(-3) - 2.0f64.powi(-3)) / 3.0;
        assert!(((got - exact) / exact).abs() < 1e-14);
    }

    #[test]
    fn box_integral_reduces_cyclic_axes() {
        // area of the unit 2-sphere in (theta, phi)
        let d = ChartDomain::new(vec![0.0, 0.0], vec![PI, 2.0 * PI]).with_cyclic(&[1]);
        let area = box_integral(&d, 20, |p| p[0].sin());
        assert!((area - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn periodic_axes_are_sampled_uniformly() {
        let d = ChartDomain::new(vec![0.0, 0.0], vec![PI, 2.0 * PI]).with_periodic(&[1]);
        let got = box_integral(&d, 16, |p| p[0].sin() * (1.0 + p[1].cos().powi(2)));
        assert!((got - 2.0 * 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn doubling_estimate_is_small_for_smooth_functions() {
        let (v, err) = with_doubling(10, 2, 0.0, PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
        assert!(err < 1e-12);
    }
}
