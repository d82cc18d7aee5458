//! Least-squares Taylor extraction of `g_s = ĝ + g⁽²⁾s² + g⁽³⁾s³ + ..`.

use std::io::{Read, Write};

use super::{trace_with, FgMetric};
use crate::error::{Error, Result};
use crate::lstsq;
use crate::tensor::Mat;

/// Condition-number ceiling for the extraction design matrix.
pub const MAX_CONDITION: f64 = 1e8;

/// Extra powers above `max_order` that absorb truncation of the series.
pub const NUISANCE_ORDERS: usize = 3;

const CSV_HEADER: &str = "# cce gs-samples v1";

/// `s_k = 0.2 · 0.7^k`, twelve rungs.
pub fn default_s_ladder() -> Vec<f64> {
    (0..12).map(|k| 0.2 * 0.7f64.powi(k)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GsSample {
    pub s: f64,
    pub g: Mat,
}

#[derive(Clone, Debug)]
pub struct ExpansionSeries {
    pub n: usize,
    pub point: Vec<f64>,
    pub orders: Vec<usize>,
    /// `coefficients[k]` multiplies `s^orders[k]`.
    pub coefficients: Vec<Mat>,
    /// Per order: change of the coefficient when the largest rung is dropped.
    pub fit_residuals: Vec<f64>,
    /// Largest absolute fit residual over components and rungs.
    pub residual: f64,
    pub condition: f64,
}

impl ExpansionSeries {
    pub fn coefficient(&self, order: usize) -> Option<&Mat> {
        self.orders.iter().position(|&o| o == order).map(|i| &self.coefficients[i])
    }

    /// Largest component of any odd-order coefficient below `n`.
    pub fn odd_defect(&self) -> f64 {
        self.orders
            .iter()
            .zip(&self.coefficients)
            .filter(|(&o, _)| o % 2 == 1 && o < self.n)
            .map(|(_, c)| max_abs(c, self.n))
            .fold(0.0, f64::max)
    }

    /// `|tr_ĝ g⁽ⁿ⁾|` for odd `n`, using the order-zero coefficient as `ĝ`.
    pub fn trace_defect(&self) -> Option<f64> {
        if self.n.is_multiple_of(2) {
            return None;
        }
        let g0 = self.coefficient(0)?;
        let gn = self.coefficient(self.n)?;
        Some(trace_with(g0, gn, self.n).abs())
    }
}

fn max_abs(m: &Mat, dim: usize) -> f64 {
    let mut out = 0.0f64;
    for row in m.iter().take(dim) {
        for v in row.iter().take(dim) {
            out = out.max(v.abs());
        }
    }
    out
}

/// Fits the samples against `{1, s, .., s^max_order}` plus nuisance powers.
pub fn extract_from_samples(
    samples: &[GsSample],
    n: usize,
    max_order: usize,
    point: &[f64],
) -> Result<ExpansionSeries> {
    if max_order > n {
        return Err(Error::InvalidInput(format!(
            "expansion order {max_order} exceeds the locally determined range (n = {n})"
        )));
    }
    let top = max_order + NUISANCE_ORDERS;
    let basis = move |s: f64| (0..=top).map(|k| s.powi(k as i32)).collect::<Vec<f64>>();
    let xs: Vec<f64> = samples.iter().map(|p| p.s).collect();
    let largest = xs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidInput("no samples".into()))?;
    let reduced: Vec<usize> = (0..xs.len()).filter(|&i| i != largest).collect();
    let xs_reduced: Vec<f64> = reduced.iter().map(|&i| xs[i]).collect();

    let mut coefficients = vec![[[0.0; 4]; 4]; max_order + 1];
    let mut fit_residuals = vec![0.0f64; max_order + 1];
    let mut residual = 0.0f64;
    let mut condition = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let ys: Vec<f64> = samples.iter().map(|p| p.g[i][j]).collect();
            let full = lstsq::fit(&xs, &ys, basis, MAX_CONDITION)?;
            let ys_reduced: Vec<f64> = reduced.iter().map(|&k| ys[k]).collect();
            let drop = lstsq::fit(&xs_reduced, &ys_reduced, basis, MAX_CONDITION)?;
            residual = residual.max(full.max_abs_residual());
            condition = condition.max(full.condition);
            for k in 0..=max_order {
                coefficients[k][i][j] = full.coefficients[k];
                coefficients[k][j][i] = full.coefficients[k];
                fit_residuals[k] = fit_residuals[k].max((full.coefficients[k] - drop.coefficients[k]).abs());
            }
        }
    }
    Ok(ExpansionSeries {
        n,
        point: point.to_vec(),
        orders: (0..=max_order).collect(),
        coefficients,
        fit_residuals,
        residual,
        condition,
    })
}

/// Samples `g_s(·, p)` on the default ladder and fits it.
pub fn extract_expansion(fg: &FgMetric, max_order: usize, p: &[f64]) -> Result<ExpansionSeries> {
    let ladder: Vec<f64> = default_s_ladder().into_iter().filter(|&s| s < fg.s_max()).collect();
    let samples: Vec<GsSample> = ladder.iter().map(|&s| GsSample { s, g: fg.gs(s, p) }).collect();
    extract_from_samples(&samples, fg.n(), max_order, p)
}

/// Writes `g_s` samples as a versioned table:
/// `s, y0.., g00, g01, ..` (upper triangle, row-major).
pub fn write_samples_csv<W: Write>(
    mut out: W,
    fg: &FgMetric,
    points: &[Vec<f64>],
    ladder: &[f64],
) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let n = fg.n();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["s".to_string()];
    header.extend((0..n).map(|i| format!("y{i}")));
    for i in 0..n {
        for j in i..n {
            header.push(format!("g{i}{j}"));
        }
    }
    w.write_record(&header)?;
    for p in points {
        for &s in ladder {
            let g = fg.gs(s, p);
            let mut row = vec![format!("{s:e}")];
            row.extend(p.iter().map(|v| format!("{v:e}")));
            for i in 0..n {
                for j in i..n {
                    row.push(format!("{:e}", g[i][j]));
                }
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_samples_csv`], grouping rows by
/// boundary point in order of first appearance.
pub fn read_samples_csv<R: Read>(input: R, n: usize) -> Result<Vec<(Vec<f64>, Vec<GsSample>)>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut groups: Vec<(Vec<f64>, Vec<GsSample>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("bad number in g_s table: {e}")))?;
        let expected = 1 + n + n * (n + 1) / 2;
        if vals.len() != expected {
            return Err(Error::InvalidInput(format!(
                "g_s table row has {} fields, expected {expected}",
                vals.len()
            )));
        }
        let point = vals[1..=n].to_vec();
        let mut g = [[0.0; 4]; 4];
        let mut k = n + 1;
        for i in 0..n {
            for j in i..n {
                g[i][j] = vals[k];
                g[j][i] = vals[k];
                k += 1;
            }
        }
        let sample = GsSample { s: vals[0], g };
        match groups.iter_mut().find(|(p, _)| *p == point) {
            Some((_, v)) => v.push(sample),
            None => groups.push((point, vec![sample])),
        }
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c: [f64; 6]) -> Vec<GsSample> {
        default_s_ladder()
            .into_iter()
            .map(|s| {
                let v: f64 = c.iter().enumerate().map(|(k, a)| a * s.powi(k as i32)).sum();
                let mut g = [[0.0; 4]; 4];
                for i in 0..3 {
                    g[i][i] = v;
                }
                GsSample { s, g }
            })
            .collect()
    }

    #[test]
    fn recovers_polynomial_coefficients() {
        let e = extract_from_samples(&synthetic([1.0, 0.0, -0.5, 0.3, 0.1, -0.02]), 3, 3, &[0.0; 3]).unwrap();
        assert!((e.coefficient(2).unwrap()[1][1] + 0.5).abs() < 1e-9);
        assert!((e.coefficient(3).unwrap()[2][2] - 0.3).abs() < 1e-8);
        assert!(e.odd_defect() < 1e-10);
        assert!(e.condition < MAX_CONDITION);
    }

    #[test]
    fn rejects_orders_beyond_n() {
        assert!(extract_from_samples(&synthetic([1.0; 6]), 3, 4, &[0.0; 3]).is_err());
    }
}
