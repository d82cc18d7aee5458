//! Column-scaled linear least squares via SVD.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Residuals `y - A c` in row order.
    pub residuals: Vec<f64>,
    /// Condition number of the column-equilibrated design matrix.
    pub condition: f64,
}

impl LeastSquares {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

/// Solves `min |A c - y|` where row `i` of `A` is `basis(x_i)`.
pub fn fit(
    xs: &[f64],
    ys: &[f64],
    basis: impl Fn(f64) -> Vec<f64>,
    max_condition: f64,
) -> Result<LeastSquares> {
    assert_eq!(xs.len(), ys.len());
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| basis(x)).collect();
    let ncols = rows.first().map_or(0, Vec::len);
    if xs.len() < ncols {
        return Err(Error::FitConditioning {
            condition: f64::INFINITY,
            limit: max_condition,
        });
    }
    let mut a = DMatrix::from_fn(xs.len(), ncols, |i, j| rows[i][j]);
    let scales: Vec<f64> = (0..ncols)
        .map(|j| {
            let n = a.column(j).norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let y = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= max_condition) {
        return Err(Error::FitConditioning {
            condition,
            limit: max_condition,
        });
    }
    let c = svd
        .solve(&y, 0.0)
        .map_err(|_| Error::FitConditioning { condition, limit: max_condition })?;
    let residuals: Vec<f64> = (&y - &a * &c).iter().copied().collect();
    let coefficients = c.iter().zip(&scales).map(|(v, s)| v / s).collect();
    Ok(LeastSquares {
        coefficients,
        residuals,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_polynomial() {
        let xs: Vec<f64> = (0..10).map(|i| 0.1 + 0.2 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - x + 0.5 * x * x).collect();
        let lsq = fit(&xs, &ys, |x| vec![1.0, x, x * x], 1e8).unwrap();
        assert!((lsq.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((lsq.coefficients[1] + 1.0).abs() < 1e-12);
        assert!((lsq.coefficients[2] - 0.5).abs() < 1e-12);
        assert!(lsq.max_abs_residual() < 1e-12);
    }

    #[test]
    fn rejects_collinear_columns() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [1.0, 2.0, 3.0];
        let err = fit(&xs, &ys, |x| vec![x, 2.0 * x], 1e8).unwrap_err();
        assert!(matches!(err, Error::FitConditioning { .. }));
    }
}
