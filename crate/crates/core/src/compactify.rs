//! The eigenfunction `Δu = (n+1)u` on a warped normal form and the
//! compactified metric `u⁻² g`.
//!
//! For radial `u(s)` on `s⁻²(ds² + g_s)` the equation reads
//! `s²u'' + (s²P − 2s)u' − 4u = 0` with `P = J'/J`. Writing
//! `u = 1/s + sψ` removes the singular part:
//!
//! ```text
//! s²ψ'' + s²Pψ' + (sP − 6)ψ = P/s
//! ```
//!
//! whose exponents at `s = 0` are `3` and `−2`, so a polynomial
//! collocation picks the regular branch and `ψ(0) = −P'(0)/6`. The resonant
//! exponent admits an `s³ log s` term in `ψ`, so the collocation runs in
//! `t = √(s/s_max)` where that term becomes `t⁶ log t`. The equation is
//! multiplied by `s_max − s`; the inner end carries `u'(s_max) = 0`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::chebyshev::{differentiation_matrix, lobatto_points, ChebSeries};
use crate::error::{Error, Result};
use crate::fg::FgMetric;
use crate::jet::Jet;
use crate::quadrature::GaussLegendre;
use crate::tensor::{christoffel, curvature, Mat};

const CSV_HEADER: &str = "# cce eigenfunction v1";
const MIN_DEGREE: usize = 32;
const MAX_DEGREE: usize = 512;
/// Interior check nodes per evaluation grid.
const CHECK_NODES: usize = 64;
const CHOP_TOL: f64 = 1e-15;
const CHANGE_TOL: f64 = 1e-10;
const QUOTIENT_TOL: f64 = 1e-14;

/// Roots `(−1, n + 1)` of `k(k − n) − (n + 1)`.
pub fn indicial_roots(n: u32) -> (i64, i64) {
    let n = n as i64;
    // discriminant n² + 4(n+1) = (n+2)²
    let disc = n + 2;
    ((n - disc) / 2, (n + disc) / 2)
}

/// `w⁽²⁾ = R̂/(4n(n−1))` as a reduced fraction from a rational `R̂`.
pub fn w2_rational(scalar_num: i64, scalar_den: i64, n: i64) -> Result<(i64, i64)> {
    if n < 2 || scalar_den == 0 {
        return Err(Error::InvalidInput(format!("need n >= 2 and nonzero denominator (n = {n})")));
    }
    let mut num = scalar_num;
    let mut den = scalar_den * 4 * n * (n - 1);
    if den < 0 {
        num = -num;
        den = -den;
    }
    let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
    Ok((num / g.max(1), den / g.max(1)))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticCoefficients {
    pub n: usize,
    pub boundary_scalar: f64,
    /// Coefficient of `s` in `u = 1/s + w⁽²⁾ s + ..`.
    pub w2: f64,
    /// Whether the expansion carries no `s²` term (odd `n`).
    pub no_s2_term: bool,
}

/// Boundary-local coefficients of the eigenfunction expansion.
pub fn asymptotic_coefficients(
    boundary: &crate::tensor::MetricField,
    n: usize,
    p: &[f64],
) -> Result<AsymptoticCoefficients> {
    if n < 2 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "the eigenfunction expansion needs n >= 2",
        });
    }
    let c = curvature(boundary, p, 1.0)?;
    let nf = n as f64;
    Ok(AsymptoticCoefficients {
        n,
        boundary_scalar: c.scalar,
        w2: c.scalar / (4.0 * nf * (nf - 1.0)),
        no_s2_term: n % 2 == 1,
    })
}

/// Radial eigenfunction `u = 1/s + s ψ(s)`.
#[derive(Clone, Debug)]
pub struct EigenfunctionSolution {
    pub s_max: f64,
    /// `ψ(0)`, the coefficient of `s` in `u`.
    pub w2: f64,
    /// `ψ` as a series in `t = √(s/s_max)` on [0, 1].
    pub psi: ChebSeries,
    dpsi: ChebSeries,
    d2psi: ChebSeries,
    d3psi: ChebSeries,
    d4psi: ChebSeries,
    /// Collocation nodes in `s`, increasing.
    pub grid: Vec<f64>,
    /// `u` on the grid (`+∞` at `s = 0`).
    pub u_values: Vec<f64>,
    /// `sup s²|ψ − w2|` over grid points with `s ≤ s_max/5`.
    pub asymptotic_residual: f64,
    /// `sup |Δu − 4u|` over interior Gauss nodes.
    pub pde_residual: f64,
    /// `(degree, pde_residual)` for each collocation size tried.
    pub refinement: Vec<(usize, f64)>,
}

impl EigenfunctionSolution {
    fn check_domain(&self, s: f64) -> Result<()> {
        if !(s >= 0.0 && s <= self.s_max) {
            return Err(Error::Domain {
                point: vec![s],
                reason: format!("eigenfunction is defined on [0, {}]", self.s_max),
            });
        }
        Ok(())
    }

    /// `ψ` and its first three derivatives in `s`. At `s = 0` the third
    /// derivative carries the logarithm and is returned as NaN.
    pub fn psi_derivs(&self, s: f64) -> [f64; 4] {
        let sm = self.s_max;
        if s <= 0.0 {
            return [
                self.psi.eval(0.0),
                self.d2psi.eval(0.0) / (2.0 * sm),
                self.d4psi.eval(0.0) / (12.0 * sm * sm),
                f64::NAN,
            ];
        }
        let t = (s / sm).sqrt();
        let (p1, p2, p3) = (self.dpsi.eval(t), self.d2psi.eval(t), self.d3psi.eval(t));
        [
            self.psi.eval(t),
            p1 / (2.0 * sm * t),
            (p2 - p1 / t) / (4.0 * sm * sm * t * t),
            (p3 - 3.0 * p2 / t + 3.0 * p1 / (t * t)) / (8.0 * sm.powi(3) * t.powi(3)),
        ]
    }

    /// `q = u − 1/s = sψ` and its first three derivatives.
    pub fn q_derivs(&self, s: f64) -> [f64; 4] {
        let p = self.psi_derivs(s);
        [s * p[0], p[0] + s * p[1], 2.0 * p[1] + s * p[2], 3.0 * p[2] + s * p[3]]
    }

    pub fn u(&self, s: f64) -> f64 {
        1.0 / s + s * self.psi_derivs(s)[0]
    }

    pub fn du(&self, s: f64) -> f64 {
        -1.0 / (s * s) + self.q_derivs(s)[1]
    }

    /// `v = s u = 1 + s²ψ` with its first two derivatives, the factor with
    /// `u⁻²g = v⁻²(ds² + g_s)`. Negative `s` uses the Taylor extension.
    pub fn v_derivs(&self, s: f64) -> [f64; 3] {
        let [p0, p1, p2, _] = self.psi_derivs(s.max(0.0));
        if s <= 0.0 {
            return [1.0 + s * s * p0, 2.0 * s * p0, 2.0 * p0];
        }
        [1.0 + s * s * p0, 2.0 * s * p0 + s * s * p1, 2.0 * p0 + 4.0 * s * p1 + s * s * p2]
    }

    pub fn v(&self, s: Jet) -> Jet {
        s.lift(self.v_derivs(s.v))
    }

    /// `F = u² − |du|²_g = 2(ψ + q') + q² − s²q'²`.
    pub fn energy(&self, s: f64) -> f64 {
        self.energy_derivs(s)[0]
    }

    /// `(F, F', F'')`.
    pub fn energy_derivs(&self, s: f64) -> [f64; 3] {
        let q = self.q_derivs(s);
        let r = self.psi_derivs(s);
        let f = 2.0 * (r[0] + q[1]) + q[0] * q[0] - s * s * q[1] * q[1];
        let f1 = 2.0 * (r[1] + q[2]) + 2.0 * q[0] * q[1] - 2.0 * s * q[1] * q[1] - 2.0 * s * s * q[1] * q[2];
        let f2 = 2.0 * (r[2] + q[3]) + 2.0 * (q[1] * q[1] + q[0] * q[2])
            - 2.0 * q[1] * q[1]
            - 8.0 * s * q[1] * q[2]
            - 2.0 * s * s * (q[2] * q[2] + q[1] * q[3]);
        [f, f1, f2]
    }
}

/// `P = J'/J = Σ k_a w_a'/w_a`.
fn log_derivative(fg: &FgMetric, s: f64) -> f64 {
    fg.pieces()
        .iter()
        .map(|p| {
            let [w, dw, _] = p.warp_jet(s);
            p.rank as f64 * dw / w
        })
        .sum()
}

/// `P'(0) = Σ k_a (w_a''/w_a − (w_a'/w_a)²)` at `s = 0`.
fn log_derivative_slope(fg: &FgMetric) -> f64 {
    log_derivative_prime(fg, 0.0)
}

/// `P'` from the warp jets; also valid slightly past `s = 0`.
fn log_derivative_prime(fg: &FgMetric, s: f64) -> f64 {
    fg.pieces()
        .iter()
        .map(|p| {
            let [w, dw, d2w] = p.warp_jet(s);
            p.rank as f64 * (d2w / w - (dw / w).powi(2))
        })
        .sum()
}

/// `(s_max − s)P/s` as a polynomial. The warps carry an absolute error, so
/// the quotient by `s` is taken on the coefficients of `(s_max − s)P`.
fn log_derivative_quotient(fg: &FgMetric) -> Result<ChebSeries> {
    let sm = fg.s_max();
    let (series, ok) = ChebSeries::adaptive_interior(0.0, sm, QUOTIENT_TOL, MAX_DEGREE, |s| {
        (sm - s) * log_derivative(fg, s)
    });
    if !ok {
        return Err(Error::SolverFailure(format!(
            "log-derivative of the volume density not resolved at degree {MAX_DEGREE}"
        )));
    }
    Ok(series.divided_at_lower())
}

/// Collocation in `t = √(s/s_max)` of the equation divided by `s`,
///
/// ```text
/// (t²ψ_tt − tψ_t)/4 + (s_max t³P/2)ψ_t + (s_max t²P − 6)ψ = P/s
/// ```
///
/// multiplied by `s_max − s`. At `t = 0` it reduces to
/// `ψ(0) = −P'(0)/6`; the row at `t = 1` carries `u'(s_max) = 0`.
fn collocate(fg: &FgMetric, n: usize) -> Result<ChebSeries> {
    let sm = fg.s_max();
    let nodes = lobatto_points(0.0, 1.0, n);
    let d1 = differentiation_matrix(0.0, 1.0, n);
    let d2 = &d1 * &d1;
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut b = DVector::<f64>::zeros(n + 1);
    let quotient = log_derivative_quotient(fg)?;
    for (i, &t) in nodes.iter().enumerate() {
        if i == 0 {
            // u' = −1/s² + ψ + (t/2)ψ_t = 0
            for k in 0..=n {
                a[(0, k)] = 0.5 * d1[(0, k)];
            }
            a[(0, 0)] += 1.0;
            b[0] = 1.0 / (sm * sm);
            continue;
        }
        if i == n {
            a[(n, n)] = 1.0;
            b[n] = -log_derivative_slope(fg) / 6.0;
            continue;
        }
        let s = sm * t * t;
        let gap = sm - s;
        let p = log_derivative(fg, s);
        for k in 0..=n {
            a[(i, k)] = gap * (0.25 * (t * t * d2[(i, k)] - t * d1[(i, k)]) + 0.5 * sm * t.powi(3) * p * d1[(i, k)]);
        }
        a[(i, i)] += gap * (sm * t * t * p - 6.0);
        b[i] = quotient.eval(s);
    }
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SolverFailure(format!("collocation matrix singular at degree {n}")))?;
    Ok(ChebSeries::from_lobatto_values(0.0, 1.0, sol.as_slice()))
}

fn interior_nodes(s_max: f64) -> Vec<f64> {
    GaussLegendre::new(CHECK_NODES).on_interval(0.0, s_max).map(|(s, _)| s).collect()
}

/// `Δu − 4u = s³ψ'' + s³Pψ' + (s²P − 6s)ψ − P`.
fn pde_residual_at(fg: &FgMetric, psi: [f64; 4], s: f64) -> f64 {
    let p = log_derivative(fg, s);
    s * s * s * (psi[2] + p * psi[1]) + (s * s * p - 6.0 * s) * psi[0] - p
}

fn solution_from_series(s_max: f64, psi: ChebSeries) -> EigenfunctionSolution {
    let dpsi = psi.derivative();
    let d2psi = dpsi.derivative();
    let d3psi = d2psi.derivative();
    let d4psi = d3psi.derivative();
    EigenfunctionSolution {
        s_max,
        w2: psi.eval(0.0),
        psi,
        dpsi,
        d2psi,
        d3psi,
        d4psi,
        grid: Vec::new(),
        u_values: Vec::new(),
        asymptotic_residual: 0.0,
        pde_residual: f64::NAN,
        refinement: Vec::new(),
    }
}

/// Solves for the radial eigenfunction on a warped normal form.
pub fn solve_eigenfunction(fg: &FgMetric) -> Result<EigenfunctionSolution> {
    let s_max = fg.s_max();
    let check = interior_nodes(s_max);

    let mut refinement = Vec::new();
    let mut n = MIN_DEGREE;
    let mut prev: Option<EigenfunctionSolution> = None;
    let mut sol = loop {
        let psi = collocate(fg, n)?;
        let scale = psi.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        // trailing coefficients at the noise floor only spoil derivatives
        let sol = solution_from_series(s_max, psi.chopped(CHOP_TOL * scale));
        let res = check
            .iter()
            .map(|&s| pde_residual_at(fg, sol.psi_derivs(s), s).abs())
            .fold(0.0f64, f64::max);
        refinement.push((n, res));
        if let Some(p) = &prev {
            let scale = check.iter().map(|&s| sol.psi_derivs(s)[0].abs()).fold(1.0f64, f64::max);
            let change = check
                .iter()
                .map(|&s| (sol.psi_derivs(s)[0] - p.psi_derivs(s)[0]).abs())
                .fold(0.0f64, f64::max);
            if change <= CHANGE_TOL * scale {
                break sol;
            }
        }
        if n >= MAX_DEGREE {
            return Err(Error::SolverFailure(format!(
                "eigenfunction not converged at degree {MAX_DEGREE} (residuals {refinement:?})"
            )));
        }
        prev = Some(sol);
        n *= 2;
    };
    sol.pde_residual = refinement.last().map_or(f64::NAN, |r| r.1);
    sol.refinement = refinement;
    sol.grid = lobatto_points(0.0, 1.0, n).into_iter().rev().map(|t| s_max * t * t).collect();
    for &s in &sol.grid[1..] {
        let u = sol.u(s);
        if !(u > 0.0) {
            return Err(Error::PositivityViolation { s, u });
        }
    }
    sol.u_values = sol.grid.iter().map(|&s| if s == 0.0 { f64::INFINITY } else { sol.u(s) }).collect();
    sol.asymptotic_residual = sol
        .grid
        .iter()
        .filter(|&&s| s <= 0.2 * s_max)
        .map(|&s| (s * s * (sol.psi_derivs(s)[0] - sol.w2)).abs())
        .fold(0.0, f64::max);
    Ok(sol)
}

/// `R[u⁻²g]` at radial position `s` and the representative boundary point.
/// For Einstein `g` this is `n(n+1)(u² − |du|²)`, whose boundary limit is
/// `2R̂`; otherwise it is computed from the compactified metric directly.
pub fn compactified_scalar(sol: &EigenfunctionSolution, fg: &FgMetric, s: f64) -> Result<f64> {
    sol.check_domain(s)?;
    if fg.is_einstein() {
        let n = fg.n() as f64;
        return Ok(n * (n + 1.0) * sol.energy(s));
    }
    let metric = compactified(sol, fg);
    let mut p = vec![s];
    p.extend(fg.representative_point());
    Ok(curvature(&metric, &p, 1.0)?.scalar)
}

/// `u⁻²g = v⁻²(ds² + g_s)`.
pub fn compactified(sol: &EigenfunctionSolution, fg: &FgMetric) -> crate::tensor::MetricField {
    let s1 = sol.clone();
    fg.conformally_compactified("compactified", std::sync::Arc::new(move |s| s1.v(s)))
}

/// `|D²u − u g|²_g` for radial `u`.
pub fn hessian_defect(sol: &EigenfunctionSolution, fg: &FgMetric, s: f64) -> f64 {
    let q = sol.q_derivs(s);
    let normal = s * s * q[2] + s * q[1] - q[0];
    let mut total = normal * normal;
    for piece in fg.pieces() {
        let [w, dw, _] = piece.warp_jet(s);
        let r = dw / w;
        let ev = r * (s * s * q[1] - 1.0) - s * q[1] - q[0];
        total += piece.rank as f64 * ev * ev;
    }
    total
}

/// `ΔF + 2|D²u − u g|²` at `s`.
pub fn bochner_residual(sol: &EigenfunctionSolution, fg: &FgMetric, s: f64) -> f64 {
    let [_, f1, f2] = sol.energy_derivs(s);
    let lap = s * s * f2 + (s * s * log_derivative(fg, s) - 2.0 * s) * f1;
    lap + 2.0 * hessian_defect(sol, fg, s)
}

/// Second fundamental form of `{s = 0}` in `u⁻²g` from the Christoffel
/// symbols of the compactified metric; sup norm over the sample points.
pub fn boundary_second_fundamental_form(sol: &EigenfunctionSolution, fg: &FgMetric) -> Result<f64> {
    let metric = compactified(sol, fg);
    let n = fg.n();
    let mut sup = 0.0f64;
    for y in boundary_samples(fg) {
        let mut p = vec![0.0];
        p.extend(&y);
        let gamma = christoffel(&metric, &p)?;
        let g = metric.matrix(&p)?;
        let v = sol.v_derivs(0.0)[0];
        // II_ab = −v⁻¹ Γ^s_ab with unit normal v ∂_s
        let mut ii: Mat = [[0.0; 4]; 4];
        for a in 0..n {
            for b in 0..n {
                ii[a][b] = -gamma.get(0, a + 1, b + 1) / v;
            }
        }
        let h = inverse_block(&g, n);
        let mut norm2 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        norm2 += h[a][c] * h[b][d] * ii[a][b] * ii[c][d];
                    }
                }
            }
        }
        sup = sup.max(norm2.max(0.0).sqrt());
    }
    Ok(sup)
}

fn boundary_samples(fg: &FgMetric) -> Vec<Vec<f64>> {
    let d = fg.boundary().domain();
    [0.31, 0.5371, 0.77]
        .iter()
        .map(|t| d.lower.iter().zip(&d.upper).map(|(lo, hi)| lo + (hi - lo) * t).collect())
        .collect()
}

/// Inverse of the boundary block `g[1..=n][1..=n]`.
fn inverse_block(g: &Mat, n: usize) -> Mat {
    let m = DMatrix::from_fn(n, n, |i, j| g[i + 1][j + 1]);
    let inv = m.try_inverse().unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
    let mut out = [[0.0; 4]; 4];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = inv[(i, j)];
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompactificationChecks {
    pub boundary_scalar: f64,
    pub second_fundamental_form: f64,
    /// `min R[u⁻²g] − 2R̂` over the grid (including `s = 0`).
    pub scalar_margin: f64,
    pub min_scalar: f64,
    pub bochner_residual: f64,
    /// `min F − F(0)` over the grid.
    pub energy_min_margin: f64,
    /// Largest deviation of the Christoffel-based scalar curvature of
    /// `u⁻²g` from `12F` at the sampled points.
    pub scalar_cross_check: f64,
    pub tolerance: f64,
    pub second_fundamental_form_ok: bool,
    pub scalar_bound_ok: bool,
    pub bochner_ok: bool,
}

impl CompactificationChecks {
    pub fn all_pass(&self) -> bool {
        self.second_fundamental_form_ok && self.scalar_bound_ok && self.bochner_ok
    }
}

/// Evaluation grid: `s = 0` plus interior Gauss nodes.
pub fn check_grid(s_max: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(interior_nodes(s_max));
    g
}

/// Boundary geodesy, the scalar curvature bound and the Bochner identity.
pub fn compactification_checks(
    sol: &EigenfunctionSolution,
    fg: &FgMetric,
    tolerance: f64,
) -> Result<CompactificationChecks> {
    let y = fg.representative_point();
    let boundary_scalar = curvature(fg.boundary(), &y, 1.0)?.scalar;
    let second = boundary_second_fundamental_form(sol, fg)?;
    let grid = check_grid(fg.s_max());
    let mut min_scalar = f64::INFINITY;
    let mut min_energy = f64::INFINITY;
    for &s in &grid {
        let r = compactified_scalar(sol, fg, s)?;
        min_scalar = min_scalar.min(r);
        min_energy = min_energy.min(sol.energy(s));
    }
    let bochner = grid[1..]
        .iter()
        .map(|&s| bochner_residual(sol, fg, s).abs())
        .fold(0.0f64, f64::max);
    let cross = scalar_cross_check(sol, fg, &[0.0, 0.25, 0.5, 0.8])?;
    let margin = min_scalar - 2.0 * boundary_scalar;
    Ok(CompactificationChecks {
        boundary_scalar,
        second_fundamental_form: second,
        scalar_margin: margin,
        min_scalar,
        bochner_residual: bochner,
        energy_min_margin: min_energy - sol.energy(0.0),
        scalar_cross_check: cross,
        tolerance,
        second_fundamental_form_ok: second < tolerance,
        scalar_bound_ok: margin >= -tolerance,
        bochner_ok: bochner < tolerance,
    })
}

/// Scalar curvature of the explicit metric `v⁻²(ds² + g_s)` against
/// `u²(R[g] + 2n(n+1)) − n(n+1)|du|²` at fractions of `s_max`; the boundary
/// point is used only when `g` is Einstein.
pub fn scalar_cross_check(sol: &EigenfunctionSolution, fg: &FgMetric, fractions: &[f64]) -> Result<f64> {
    let metric = compactified(sol, fg);
    let interior = fg.interior_metric();
    let y = fg.representative_point();
    let n = fg.n() as f64;
    let mut worst = 0.0f64;
    for &t in fractions {
        let s = t * fg.s_max();
        let mut p = vec![s];
        p.extend(&y);
        let direct = curvature(&metric, &p, 1.0)?.scalar;
        let formula = if fg.is_einstein() {
            n * (n + 1.0) * sol.energy(s)
        } else if s > 0.0 {
            let r = curvature(&interior, &p, 1.0)?.scalar;
            let (u, du) = (sol.u(s), sol.du(s));
            u * u * (r + 2.0 * n * (n + 1.0)) - n * (n + 1.0) * s * s * du * du
        } else {
            continue;
        };
        worst = worst.max((direct - formula).abs());
    }
    Ok(worst)
}

/// Writes `(s, u, F, R, pde residual, bochner residual)` on the check grid.
pub fn write_solution_csv<W: Write>(mut out: W, sol: &EigenfunctionSolution, fg: &FgMetric) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "u", "energy", "scalar", "bochner_residual"])?;
    for s in interior_nodes(fg.s_max()) {
        w.write_record([
            format!("{s:e}"),
            format!("{:.17e}", sol.u(s)),
            format!("{:.17e}", sol.energy(s)),
            format!("{:.17e}", compactified_scalar(sol, fg, s)?),
            format!("{:e}", bochner_residual(sol, fg, s)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
