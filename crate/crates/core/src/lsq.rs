//! Small dense least squares via Householder QR.
//!
//! Only used on tiny design matrices (a handful of columns, at most a few
//! hundred rows), so everything is plain `Vec`s.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Residual sum of squares, summed directly from y − Xβ.
    pub sse: f64,
    pub n: usize,
    /// Upper-triangular R factor, row-major, p × p.
    r: Vec<Vec<f64>>,
}

impl LeastSquares {
    pub fn df_residual(&self) -> usize {
        self.n - self.coefficients.len()
    }

    /// (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ.
    #[allow(clippy::needless_range_loop)]
    pub fn unscaled_covariance(&self) -> Vec<Vec<f64>> {
        let p = self.r.len();
        // Invert R by back substitution, column by column.
        let mut rinv = vec![vec![0.0; p]; p];
        for col in 0..p {
            for i in (0..=col).rev() {
                let mut s = if i == col { 1.0 } else { 0.0 };
                for k in i + 1..=col {
                    s -= self.r[i][k] * rinv[k][col];
                }
                rinv[i][col] = s / self.r[i][i];
            }
        }
        let mut cov = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..p {
                cov[i][j] = (i.max(j)..p).map(|k| rinv[i][k] * rinv[j][k]).sum();
            }
        }
        cov
    }
}

/// Solve min ‖y − Xβ‖² for a full-column-rank design given as rows.
pub fn solve(rows: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares> {
    let n = rows.len();
    assert_eq!(n, y.len(), "design and response lengths differ");
    let p = rows.first().map_or(0, Vec::len);
    if n < p || p == 0 {
        return Err(Error::InsufficientData {
            needed: p.max(1),
            got: n,
        });
    }

    // Column-major working copy.
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut qty = y.to_vec();
    let col_norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();

    for k in 0..p {
        let alpha = norm(&a[k][k..]);
        if alpha <= 1e-12 * col_norms[k].max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateRegressor);
        }
        let alpha = if a[k][k] > 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(k) {
            reflect(&mut col[k..], &v, vnorm2);
        }
        reflect(&mut qty[k..], &v, vnorm2);
    }

    let r: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if j >= i { a[j][i] } else { 0.0 }).collect())
        .collect();
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r[i][j] * beta[j]).sum();
        beta[i] = (qty[i] - s) / r[i][i];
    }
    let sse = rows
        .iter()
        .zip(y)
        .map(|(row, yi)| {
            let fit: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
            (yi - fit).powi(2)
        })
        .sum();

    Ok(LeastSquares {
        coefficients: beta,
        sse,
        n,
        r,
    })
}

/// Polynomial fit y ≈ Σ βₖ xᵏ for k = 0..=degree.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<LeastSquares> {
    if x.len() < degree + 1 {
        return Err(Error::InsufficientData {
            needed: degree + 1,
            got: x.len(),
        });
    }
    let rows: Vec<Vec<f64>> = x
        .iter()
        .map(|&xi| (0..=degree).map(|k| xi.powi(k as i32)).collect())
        .collect();
    solve(&rows, y)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn reflect(x: &mut [f64], v: &[f64], vnorm2: f64) {
    let dot: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}
