//! Levi-Civita connection, Riemann tensor and its algebraic decompositions.
//!
//! Sign convention: `R_ijkl` is fully lowered and normalised so that a space
//! of constant sectional curvature `K` has `R_ijkl = K (g_ik g_jl - g_il g_jk)`;
//! the unit sphere therefore has `R_ijij > 0`. Ricci is the contraction
//! `Ric_jl = g^{ik} R_ijkl`.
//!
//! Decompositions are computed in the orthonormal frame `E = L^{-T}` where
//! `g = L L^T` is the Cholesky factorisation, then transformed back.

use nalgebra::{DMatrix, SymmetricEigen};

use super::metric::{Mat, MetricField, MetricSample, ScalarFn};
use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_VARS};

const N: usize = MAX_VARS;

/// Dense rank-3 array with stride `MAX_VARS`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    pub dim: usize,
    data: [f64; N * N * N],
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Tensor3 { dim, data: [0.0; N * N * N] }
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * N + j) * N + k]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * N + j) * N + k] = v;
    }
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Dense rank-4 array with stride `MAX_VARS`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    pub dim: usize,
    data: Box<[f64; N * N * N * N]>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Tensor4 {
            dim,
            data: Box::new([0.0; N * N * N * N]),
        }
    }
    #[inline]
    fn idx(i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * N + j) * N + k) * N + l
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[Self::idx(i, j, k, l)]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[Self::idx(i, j, k, l)] = v;
    }
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[Self::idx(i, j, k, l)] += v;
    }
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Contracts every slot with `m`: `out_abcd = m_ia m_jb m_kc m_ld T_ijkl`.
    fn transform(&self, m: &Mat) -> Tensor4 {
        let d = self.dim;
        let mut cur = self.clone();
        for slot in 0..4 {
            let mut next = Tensor4::zeros(d);
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            let idx = [i, j, k, l];
                            let mut s = 0.0;
                            for r in 0..d {
                                let mut src = idx;
                                src[slot] = r;
                                s += m[r][idx[slot]] * cur.get(src[0], src[1], src[2], src[3]);
                            }
                            next.set(i, j, k, l, s);
                        }
                    }
                }
            }
            cur = next;
        }
        cur
    }
}

/// Pointwise curvature data.
#[derive(Clone, Debug)]
pub struct CurvaturePacket {
    pub dim: usize,
    pub point: Vec<f64>,
    pub metric: Mat,
    pub volume_density: f64,
    pub riemann: Tensor4,
    pub ricci: Mat,
    pub scalar: f64,
    /// `E = Ric - (R/dim) g`
    pub traceless_ricci: Mat,
    /// `A = Ric - R/(2(dim-1)) g`, which is `Ric - (R/6) g` in dimension four.
    pub schouten: Mat,
    /// `R^2/24 - |E|^2/2` (four dimensions); `((tr A)^2 - |A|^2)/2` otherwise.
    pub sigma2: f64,
    /// Second elementary symmetric function of the eigenvalues of `A`.
    pub sigma2_from_eigenvalues: f64,
    pub traceless_ricci_norm2: f64,
    pub weyl: Tensor4,
    pub weyl_plus: Option<Tensor4>,
    pub weyl_minus: Option<Tensor4>,
    pub weyl_norm2: f64,
    pub weyl_plus_norm2: Option<f64>,
    pub weyl_minus_norm2: Option<f64>,
    /// Frame components of Ricci, kept for norm computations.
    frame_ricci: Mat,
}

struct Frame {
    /// `e[i][a]`: coordinate components of orthonormal vector `a`.
    e: Mat,
    /// `theta[i][a]`: coframe, `g_ij = sum_a theta[i][a] theta[j][a]`.
    theta: Mat,
    inverse: Mat,
}

fn frame(g: &Mat, dim: usize, point: &[f64]) -> Result<Frame> {
    let m = DMatrix::from_fn(dim, dim, |i, j| g[i][j]);
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularMetric { point: point.to_vec() })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMetric { point: point.to_vec() })?;
    let inv = chol.inverse();
    let mut e = [[0.0; N]; N];
    let mut theta = [[0.0; N]; N];
    let mut inverse = [[0.0; N]; N];
    for i in 0..dim {
        for a in 0..dim {
            e[i][a] = linv[(a, i)];
            theta[i][a] = l[(i, a)];
            inverse[i][a] = inv[(i, a)];
        }
    }
    Ok(Frame { e, theta, inverse })
}

/// Christoffel symbols of the second kind, `gamma.get(k, i, j) = Γ^k_ij`.
pub fn christoffel_from_sample(s: &MetricSample) -> Result<Tensor3> {
    let f = frame(&s.g, s.dim, &s.point)?;
    let first = christoffel_first(s);
    Ok(raise_first(&first, &f.inverse, s.dim))
}

fn christoffel_first(s: &MetricSample) -> Tensor3 {
    let d = s.dim;
    let mut out = Tensor3::zeros(d);
    for l in 0..d {
        for i in 0..d {
            for j in 0..d {
                out.set(l, i, j, 0.5 * (s.dg[i][j][l] + s.dg[j][i][l] - s.dg[l][i][j]));
            }
        }
    }
    out
}

fn raise_first(first: &Tensor3, inv: &Mat, d: usize) -> Tensor3 {
    let mut out = Tensor3::zeros(d);
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let v: f64 = (0..d).map(|l| inv[k][l] * first.get(l, i, j)).sum();
                out.set(k, i, j, v);
            }
        }
    }
    out
}

/// `Γ^k_ij` of `m` at `p`.
pub fn christoffel(m: &MetricField, p: &[f64]) -> Result<Tensor3> {
    christoffel_from_sample(&m.sample(p)?)
}

fn riemann_from_sample(s: &MetricSample, first: &Tensor3, second: &Tensor3) -> Tensor4 {
    let d = s.dim;
    let mut r = Tensor4::zeros(d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let dd = 0.5
                        * (s.ddg[j][k][i][l] + s.ddg[i][l][j][k]
                            - s.ddg[j][l][i][k]
                            - s.ddg[i][k][j][l]);
                    let mut q = 0.0;
                    for p in 0..d {
                        q += first.get(p, j, k) * second.get(p, i, l)
                            - first.get(p, j, l) * second.get(p, i, k);
                    }
                    r.set(i, j, k, l, dd + q);
                }
            }
        }
    }
    r
}

/// Index pairs spanning 2-forms, ordered so that the Hodge star maps
/// pair `I` to pair `I + 3` for a positively oriented frame.
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)];

fn two_form_operator(w: &Tensor4) -> [[f64; 6]; 6] {
    let mut m = [[0.0; 6]; 6];
    for (ii, &(a, b)) in PAIRS.iter().enumerate() {
        for (jj, &(c, d)) in PAIRS.iter().enumerate() {
            m[ii][jj] = w.get(a, b, c, d);
        }
    }
    m
}

fn from_two_form_operator(m: &[[f64; 6]; 6]) -> Tensor4 {
    let mut t = Tensor4::zeros(4);
    for (ii, &(a, b)) in PAIRS.iter().enumerate() {
        for (jj, &(c, d)) in PAIRS.iter().enumerate() {
            let v = m[ii][jj];
            t.set(a, b, c, d, v);
            t.set(b, a, c, d, -v);
            t.set(a, b, d, c, -v);
            t.set(b, a, d, c, v);
        }
    }
    t
}

/// Projects a frame-component Weyl tensor onto the ±1 eigenspaces of the
/// Hodge star. Returns `(W+, W-)` as frame tensors.
fn hodge_split(w: &Tensor4, orientation: f64) -> (Tensor4, Tensor4) {
    let m = two_form_operator(w);
    let mut star = [[0.0; 6]; 6];
    for i in 0..3 {
        star[i][i + 3] = orientation;
        star[i + 3][i] = orientation;
    }
    let project = |sign: f64| {
        let mut p = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                p[i][j] = 0.5 * ((i == j) as u8 as f64 + sign * star[i][j]);
            }
        }
        let mut pm = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                pm[i][j] = (0..6).map(|k| p[i][k] * m[k][j]).sum();
            }
        }
        let mut pmp = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                pmp[i][j] = (0..6).map(|k| pm[i][k] * p[k][j]).sum();
            }
        }
        from_two_form_operator(&pmp)
    };
    (project(1.0), project(-1.0))
}

fn norm2(t: &Tensor4) -> f64 {
    let d = t.dim;
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let v = t.get(i, j, k, l);
                    s += v * v;
                }
            }
        }
    }
    s
}

fn mat_transform(m: &Mat, t: &Mat, d: usize) -> Mat {
    // out_ab = t_ia t_jb m_ij
    let mut out = [[0.0; N]; N];
    for a in 0..d {
        for b in 0..d {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += t[i][a] * t[j][b] * m[i][j];
                }
            }
            out[a][b] = s;
        }
    }
    out
}

/// Full curvature packet from a metric sample. `orientation` (±1) selects
/// which star eigenspace is called self-dual; only used in dimension four.
pub fn curvature_from_sample(s: &MetricSample, orientation: f64) -> Result<CurvaturePacket> {
    let d = s.dim;
    let fr = frame(&s.g, d, &s.point)?;
    let first = christoffel_first(s);
    let second = raise_first(&first, &fr.inverse, d);
    let riemann = riemann_from_sample(s, &first, &second);
    let rf = riemann.transform(&fr.e);

    let mut ric = [[0.0; N]; N];
    for b in 0..d {
        for c in 0..d {
            ric[b][c] = (0..d).map(|a| rf.get(a, b, a, c)).sum();
        }
    }
    let scalar: f64 = (0..d).map(|a| ric[a][a]).sum();
    let df = d as f64;
    let mut e = [[0.0; N]; N];
    let mut a_frame = [[0.0; N]; N];
    let schouten_shift = scalar / (2.0 * (df - 1.0));
    for a in 0..d {
        for b in 0..d {
            let delta = (a == b) as u8 as f64;
            e[a][b] = ric[a][b] - scalar / df * delta;
            a_frame[a][b] = ric[a][b] - schouten_shift * delta;
        }
    }
    let e_norm2: f64 = (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).map(|(a, b)| e[a][b] * e[a][b]).sum();
    let a_mat = DMatrix::from_fn(d, d, |i, j| a_frame[i][j]);
    let eig = SymmetricEigen::new(a_mat).eigenvalues;
    let mut sigma2_eig = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            sigma2_eig += eig[i] * eig[j];
        }
    }
    let sigma2 = if d == 4 {
        scalar * scalar / 24.0 - 0.5 * e_norm2
    } else {
        let tr: f64 = (0..d).map(|a| a_frame[a][a]).sum();
        let a2: f64 = (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).map(|(a, b)| a_frame[a][b].powi(2)).sum();
        0.5 * (tr * tr - a2)
    };

    // Weyl in the frame
    let mut wf = Tensor4::zeros(d);
    if d >= 3 {
        let c1 = 1.0 / (df - 2.0);
        let c2 = scalar / ((df - 1.0) * (df - 2.0));
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for dd in 0..d {
                        let dl = |x: usize, y: usize| (x == y) as u8 as f64;
                        let v = rf.get(a, b, c, dd)
                            - c1 * (ric[a][c] * dl(b, dd) - ric[a][dd] * dl(b, c)
                                + ric[b][dd] * dl(a, c)
                                - ric[b][c] * dl(a, dd))
                            + c2 * (dl(a, c) * dl(b, dd) - dl(a, dd) * dl(b, c));
                        wf.set(a, b, c, dd, v);
                    }
                }
            }
        }
    }
    let weyl_norm2 = norm2(&wf);
    let (weyl_plus, weyl_minus, wp2, wm2) = if d == 4 {
        let (p, m) = hodge_split(&wf, orientation.signum());
        let (p2, m2) = (norm2(&p), norm2(&m));
        (Some(p.transform(&fr.theta_t())), Some(m.transform(&fr.theta_t())), Some(p2), Some(m2))
    } else {
        (None, None, None, None)
    };
    let theta_t = fr.theta_t();
    let weyl = wf.transform(&theta_t);
    let ricci = mat_transform(&ric, &theta_t, d);
    let traceless_ricci = mat_transform(&e, &theta_t, d);
    let schouten = mat_transform(&a_frame, &theta_t, d);
    let det: f64 = (0..d).map(|i| fr.theta[i][i]).product();

    Ok(CurvaturePacket {
        dim: d,
        point: s.point.clone(),
        metric: s.g,
        volume_density: det.abs(),
        riemann,
        ricci,
        scalar,
        traceless_ricci,
        schouten,
        sigma2,
        sigma2_from_eigenvalues: sigma2_eig,
        traceless_ricci_norm2: e_norm2,
        weyl,
        weyl_plus,
        weyl_minus,
        weyl_norm2,
        weyl_plus_norm2: wp2,
        weyl_minus_norm2: wm2,
        frame_ricci: ric,
    })
}

impl Frame {
    /// Transform matrix taking frame components back to coordinates:
    /// `T_ijkl = sum theta[i][a] .. T_abcd`, i.e. `m[a][i] = theta[i][a]`.
    fn theta_t(&self) -> Mat {
        let mut m = [[0.0; N]; N];
        for i in 0..N {
            for a in 0..N {
                m[a][i] = self.theta[i][a];
            }
        }
        m
    }
}

/// Curvature packet of `m` at `p`.
pub fn curvature(m: &MetricField, p: &[f64], orientation: f64) -> Result<CurvaturePacket> {
    curvature_from_sample(&m.sample(p)?, orientation)
}

/// Laplace–Beltrami operator `g^{ij}(∂_i∂_j f − Γ^k_ij ∂_k f)` applied to
/// a scalar closure at `p`.
pub fn laplacian(m: &MetricField, f: &ScalarFn, p: &[f64]) -> Result<f64> {
    let s = m.sample(p)?;
    let fr = frame(&s.g, s.dim, &s.point)?;
    let gamma = raise_first(&christoffel_first(&s), &fr.inverse, s.dim);
    let v = f(&Jet::seed(p));
    let d = s.dim;
    let mut out = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut h = v.h[i][j];
            for k in 0..d {
                h -= gamma.get(k, i, j) * v.g[k];
            }
            out += fr.inverse[i][j] * h;
        }
    }
    Ok(out)
}

/// `|Ric + n g|_g` at `p`; requires `dim(m) == n + 1`.
pub fn einstein_residual(m: &MetricField, p: &[f64], n: usize) -> Result<f64> {
    if m.dim() != n + 1 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "einstein residual needs a metric of dimension n + 1",
        });
    }
    let packet = curvature(m, p, 1.0)?;
    Ok(packet.einstein_residual(n as f64))
}

impl CurvaturePacket {
    pub fn einstein_residual(&self, n: f64) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for a in 0..d {
            for b in 0..d {
                let v = self.frame_ricci[a][b] + if a == b { n } else { 0.0 };
                s += v * v;
            }
        }
        s.sqrt()
    }

    /// Largest violation of the pair symmetries and the cyclic identity,
    /// relative to the largest component.
    pub fn bianchi_defect(&self) -> f64 {
        let d = self.dim;
        let r = &self.riemann;
        let scale = r.max_abs().max(1.0);
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let v = r.get(i, j, k, l);
                        worst = worst
                            .max((v + r.get(j, i, k, l)).abs())
                            .max((v + r.get(i, j, l, k)).abs())
                            .max((v - r.get(k, l, i, j)).abs())
                            .max((v + r.get(j, k, i, l) + r.get(k, i, j, l)).abs());
                    }
                }
            }
        }
        worst / scale
    }

    /// Largest `g^{ik} W_ijkl` component in the orthonormal frame.
    pub fn weyl_trace_defect(&self) -> Result<f64> {
        let d = self.dim;
        let fr = frame(&self.metric, d, &self.point)?;
        let wf = self.weyl.transform(&fr.e);
        let mut worst = 0.0f64;
        for b in 0..d {
            for c in 0..d {
                let t: f64 = (0..d).map(|a| wf.get(a, b, a, c)).sum();
                worst = worst.max(t.abs());
            }
        }
        Ok(worst)
    }

    /// `| |W|^2 - |W+|^2 - |W-|^2 |` (zero outside dimension four).
    pub fn weyl_split_defect(&self) -> f64 {
        match (self.weyl_plus_norm2, self.weyl_minus_norm2) {
            (Some(p), Some(m)) => (self.weyl_norm2 - p - m).abs(),
            _ => 0.0,
        }
    }

    /// Relative disagreement between the two σ₂ formulas.
    pub fn sigma2_defect(&self) -> f64 {
        (self.sigma2 - self.sigma2_from_eigenvalues).abs() / self.sigma2.abs().max(1.0)
    }

    /// `|Ric|^2` in the metric.
    pub fn ricci_norm2(&self) -> f64 {
        let d = self.dim;
        (0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .map(|(a, b)| self.frame_ricci[a][b].powi(2))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::metric::{ChartDomain, DerivativeScheme};
    use std::f64::consts::PI;

    fn round_sphere(dim: usize) -> MetricField {
        let lower = vec![0.0; dim];
        let mut upper = vec![PI; dim];
        upper[dim - 1] = 2.0 * PI;
        MetricField::diagonal("sphere", dim, ChartDomain::new(lower, upper), move |x| {
            let mut out = Vec::with_capacity(dim);
            let mut f = Jet::constant(1.0);
            for i in 0..dim {
                out.push(f);
                if i + 1 < dim {
                    f *= x[i].sin().square();
                }
            }
            out
        })
    }

    #[test]
    fn two_sphere_has_gaussian_curvature_one() {
        let m = round_sphere(2);
        let c = curvature(&m, &[0.9, 1.0], 1.0).unwrap();
        let g = c.metric;
        let k = c.riemann.get(0, 1, 0, 1) / (g[0][0] * g[1][1] - g[0][1] * g[1][0]);
        assert!((k - 1.0).abs() < 1e-13);
        assert!((c.scalar - 2.0).abs() < 1e-13);
    }

    #[test]
    fn four_sphere_golden_values() {
        let m = round_sphere(4);
        let c = curvature(&m, &[1.1, 0.7, 2.0, 0.3], 1.0).unwrap();
        assert!((c.scalar - 12.0).abs() < 1e-12);
        assert!(c.traceless_ricci_norm2 < 1e-24);
        assert!(c.weyl_norm2 < 1e-24);
        assert!((c.sigma2 - 6.0).abs() < 1e-12);
        assert!(c.sigma2_defect() < 1e-12);
    }

    #[test]
    fn orientation_flip_swaps_self_dual_parts() {
        // non-conformally-flat product S^2(1) x S^2(2)
        let m = MetricField::diagonal(
            "s2xs2",
            4,
            ChartDomain::new(vec![0.0; 4], vec![PI, 2.0 * PI, PI, 2.0 * PI]),
            |x| {
                vec![
                    Jet::constant(1.0),
                    x[0].sin().square(),
                    Jet::constant(4.0),
                    x[2].sin().square() * 4.0,
                ]
            },
        );
        let p = [0.8, 1.0, 1.9, 2.0];
        let a = curvature(&m, &p, 1.0).unwrap();
        let b = curvature(&m, &p, -1.0).unwrap();
        assert!(a.weyl_norm2 > 0.1);
        assert!(a.weyl_split_defect() < 1e-12);
        assert!((a.weyl_plus_norm2.unwrap() - b.weyl_minus_norm2.unwrap()).abs() < 1e-12);
        assert!((a.weyl_minus_norm2.unwrap() - b.weyl_plus_norm2.unwrap()).abs() < 1e-12);
        assert!(a.weyl_trace_defect().unwrap() < 1e-12);
        assert!(a.bianchi_defect() < 1e-14);
    }

    #[test]
    fn finite_difference_scheme_tracks_analytic() {
        let m = round_sphere(4);
        let fd = m.clone().with_scheme(DerivativeScheme::default_finite_difference());
        let p = [1.1, 0.7, 2.0, 0.3];
        let a = curvature(&m, &p, 1.0).unwrap();
        let f = curvature(&fd, &p, 1.0).unwrap();
        let tol = |x: f64| 10.0 * 1e-8 * x.abs().max(1.0);
        assert!((a.scalar - f.scalar).abs() < tol(a.scalar));
        assert!((a.sigma2 - f.sigma2).abs() < tol(a.sigma2));
        assert!((a.weyl_norm2 - f.weyl_norm2).abs() < tol(1.0));
        for i in 0..4 {
            for j in 0..4 {
                assert!((a.ricci[i][j] - f.ricci[i][j]).abs() < tol(a.ricci[i][j]));
            }
        }
    }

    #[test]
    fn einstein_residual_requires_matching_dimension() {
        let m = round_sphere(3);
        assert!(matches!(
            einstein_residual(&m, &[1.0, 1.0, 1.0], 3),
            Err(Error::UnsupportedDimension { .. })
        ));
        // unit S^3 has Ric = 2 g, so Ric + n g vanishes for n = -2 only
        let c = curvature(&m, &[1.0, 1.0, 1.0], 1.0).unwrap();
        assert!(c.einstein_residual(-2.0) < 1e-12);
    }
}
