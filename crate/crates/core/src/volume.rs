//! Sublevel volumes `Vol({s > ε})` and the renormalized volume.
//!
//! For a warped normal form `√det g_s = J(s) √det ĝ`, so the volume factors
//! as `Vol(M, ĝ) · ∫_ε^{s_max} s⁻⁴ J(s) ds`. The fit uses
//!
//! ```text
//! Vol({s > ε}) = c0 ε⁻³ + c2 ε⁻¹ + V + t1 ε + .. + t4 ε⁴
//! ```
//!
//! where the tail columns absorb the `o(1)` remainder.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fg::FgMetric;
use crate::lstsq::{self, LeastSquares};
use crate::quadrature::{composite, geometric_breaks, GaussLegendre};

pub const MAX_CONDITION: f64 = 1e10;
const CSV_HEADER: &str = "# cce volume-ladder v1";
const PANEL_NODES: usize = 16;
const MAX_PANELS: usize = 1024;

pub fn default_ladder() -> Vec<f64> {
    vec![0.4, 0.3, 0.22, 0.16, 0.12, 0.09, 0.065, 0.05]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeOptions {
    /// Relative quadrature tolerance, estimated by panel doubling.
    pub quadrature_tol: f64,
    pub fit_tol: f64,
    /// Number of positive powers `ε, ε², ..` added to the basis.
    pub tail_orders: usize,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        VolumeOptions {
            quadrature_tol: 1e-12,
            fit_tol: 1e-4,
            tail_orders: 4,
        }
    }
}

/// `∫_ε^{s_max} s⁻⁴ J(s) ds` with its doubling estimate.
pub fn radial_volume(fg: &FgMetric, eps: f64, tol: f64) -> Result<(f64, f64)> {
    let s_max = fg.s_max();
    if !(eps > 0.0) || eps > s_max {
        return Err(Error::Domain {
            point: vec![eps],
            reason: format!("epsilon outside (0, {s_max}]"),
        });
    }
    if eps == s_max {
        return Ok((0.0, 0.0));
    }
    let rule = GaussLegendre::new(PANEL_NODES);
    let f = |s: f64| fg.jacobian(s) / s.powi(4);
    let mut panels = 4;
    let mut coarse = composite(&rule, &geometric_breaks(eps, s_max, panels), f);
    loop {
        panels *= 2;
        let fine = composite(&rule, &geometric_breaks(eps, s_max, panels), f);
        let err = (fine - coarse).abs();
        if err <= tol * fine.abs().max(1e-300) {
            return Ok((fine, err));
        }
        if panels >= MAX_PANELS {
            return Err(Error::QuadratureTolerance {
                estimate: err / fine.abs(),
                tolerance: tol,
            });
        }
        coarse = fine;
    }
}

/// `Vol({s > ε})` for the interior metric `s⁻²(ds² + g_s)`.
pub fn sublevel_volume(fg: &FgMetric, eps: f64, tol: f64) -> Result<f64> {
    Ok(fg.boundary_volume() * radial_volume(fg, eps, tol)?.0)
}

/// Ladder precondition: at least five strictly decreasing positive rungs
/// with `ε_max/ε_min ≥ 10^{1/3}` (one decade in `ε⁻³`).
pub fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "epsilon ladder needs at least 5 rungs, got {}",
            ladder.len()
        )));
    }
    if ladder.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("epsilon ladder must be positive".into()));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("epsilon ladder must be strictly decreasing".into()));
    }
    let span = (ladder[0] / ladder[ladder.len() - 1]).powi(3);
    if span < 10.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!(
            "epsilon ladder spans {span:.3} in epsilon^-3, need at least one decade"
        )));
    }
    Ok(())
}

fn basis(tail: usize, even: bool) -> impl Fn(f64) -> Vec<f64> {
    move |e: f64| {
        let mut row = vec![e.powi(-3), e.recip(), 1.0];
        row.extend((1..=tail).map(|k| e.powi(k as i32)));
        if even {
            row.push(e.powi(-2));
        }
        row
    }
}

/// Regression of volumes against `{ε⁻³, ε⁻¹, 1, ε, .., ε^tail}`.
pub fn fit_volume_samples(eps: &[f64], vols: &[f64], tail: usize) -> Result<LeastSquares> {
    lstsq::fit(eps, vols, basis(tail, false), MAX_CONDITION)
}

#[derive(Clone, Debug)]
pub struct VolumeFit {
    pub epsilons: Vec<f64>,
    pub volumes: Vec<f64>,
    pub c0: f64,
    pub c2: f64,
    pub v: f64,
    /// Coefficients of the positive tail powers.
    pub tail: Vec<f64>,
    pub residual: f64,
    pub condition: f64,
    pub boundary_volume: f64,
    /// Change of `V` when the largest rung is dropped.
    pub stability: f64,
    /// `ε⁻²` coefficient of the augmented fit.
    pub even_leakage: f64,
    /// Largest relative quadrature error estimate over the rungs.
    pub quadrature_error: f64,
}

impl VolumeFit {
    /// `|c0 − Vol(M, ĝ)/3|`.
    pub fn c0_defect(&self) -> f64 {
        (self.c0 - self.boundary_volume / 3.0).abs()
    }

    /// Error bar on `V`: twice the stability change plus the fit residual.
    /// On the AdS–Schwarzschild family the true truncation error of the
    /// default ladder sits between one and two stability changes.
    pub fn uncertainty(&self) -> f64 {
        2.0 * self.stability + self.residual
    }

    pub fn fitted(&self, eps: f64) -> f64 {
        let row = basis(self.tail.len(), false)(eps);
        let mut c = vec![self.c0, self.c2, self.v];
        c.extend(&self.tail);
        row.iter().zip(&c).map(|(a, b)| a * b).sum()
    }

    /// `(ε, volume, fitted, residual)` rows under a versioned header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epsilon", "volume", "fitted", "residual"])?;
        for (&e, &vol) in self.epsilons.iter().zip(&self.volumes) {
            let fit = self.fitted(e);
            w.write_record([
                format!("{e:e}"),
                format!("{vol:.17e}"),
                format!("{fit:.17e}"),
                format!("{:e}", vol - fit),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Computes the ladder volumes and fits the renormalized volume.
pub fn fit_renormalized_volume(fg: &FgMetric, ladder: &[f64], opts: &VolumeOptions) -> Result<VolumeFit> {
    if fg.n() != 3 {
        return Err(Error::UnsupportedDimension {
            n: fg.n(),
            reason: "volume renormalization is implemented for n = 3",
        });
    }
    check_ladder(ladder)?;
    if ladder[0] >= fg.s_max() {
        return Err(Error::InvalidInput(format!(
            "largest rung {} must lie below s_max = {}",
            ladder[0],
            fg.s_max()
        )));
    }
    let boundary_volume = fg.boundary_volume();
    let mut volumes = Vec::with_capacity(ladder.len());
    let mut quadrature_error = 0.0f64;
    for &e in ladder {
        let (r, err) = radial_volume(fg, e, opts.quadrature_tol)?;
        volumes.push(boundary_volume * r);
        quadrature_error = quadrature_error.max(err / r.abs());
    }
    fit_ladder(ladder, &volumes, boundary_volume, quadrature_error, opts)
}

/// Fit and gates on precomputed volumes.
pub fn fit_ladder(
    ladder: &[f64],
    volumes: &[f64],
    boundary_volume: f64,
    quadrature_error: f64,
    opts: &VolumeOptions,
) -> Result<VolumeFit> {
    check_ladder(ladder)?;
    // keep one spare rung for the stability refit
    let tail = opts.tail_orders.min(ladder.len() - 4);
    let full = fit_volume_samples(ladder, volumes, tail)?;
    let dropped = fit_volume_samples(&ladder[1..], &volumes[1..], tail)?;
    let stability = (full.coefficients[2] - dropped.coefficients[2]).abs();
    let residual = full.max_abs_residual();
    if residual > opts.fit_tol {
        return Err(Error::UnstableFit {
            change: residual,
            limit: opts.fit_tol,
        });
    }
    if stability > 10.0 * opts.fit_tol {
        return Err(Error::UnstableFit {
            change: stability,
            limit: 10.0 * opts.fit_tol,
        });
    }
    // one tail power is traded for the ε⁻² column
    let even_tail = tail.min(ladder.len() - 5);
    let even_leakage = lstsq::fit(ladder, volumes, basis(even_tail, true), MAX_CONDITION)
        .map(|f| f.coefficients[3 + even_tail].abs())
        .unwrap_or(f64::NAN);
    Ok(VolumeFit {
        epsilons: ladder.to_vec(),
        volumes: volumes.to_vec(),
        c0: full.coefficients[0],
        c2: full.coefficients[1],
        v: full.coefficients[2],
        tail: full.coefficients[3..].to_vec(),
        residual,
        condition: full.condition,
        boundary_volume,
        stability,
        even_leakage,
        quadrature_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_checks() {
        assert!(check_ladder(&default_ladder()).is_ok());
        assert!(check_ladder(&[0.2, 0.1, 0.05]).is_err());
        assert!(check_ladder(&[0.4, 0.39, 0.38, 0.37, 0.36]).is_err());
        assert!(check_ladder(&[0.4, 0.3, 0.3, 0.1, 0.05]).is_err());
    }

    #[test]
    fn exact_synthetic_data_is_recovered() {
        let eps = default_ladder();
        let vols: Vec<f64> = eps.iter().map(|e| 2.5 / e.powi(3) - 1.75 / e + 3.0).collect();
        let f = fit_ladder(&eps, &vols, 7.5, 0.0, &VolumeOptions::default()).unwrap();
        assert!((f.c0 - 2.5).abs() < 1e-12 * 2.5);
        assert!((f.c2 + 1.75).abs() < 1e-11);
        assert!((f.v - 3.0).abs() < 1e-10);
        assert!(f.c0_defect() < 1e-12);
    }
}
