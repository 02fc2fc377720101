use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let nrows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != nrows) {
            return Err(Error::DimensionMismatch {
                expected: nrows,
                got: bad.len(),
            });
        }
        Ok(Matrix {
            nrows,
            ncols: columns.len(),
            data: columns.concat(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(rows.len(), ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    got: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[j * self.nrows + i] = x;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate().take(self.ncols) {
            for (o, a) in out.iter_mut().zip(self.column(j)) {
                *o += a * xj;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OlsResult {
    pub beta: Vec<f64>,
    pub residual_sum_squares: f64,
    pub n_obs: usize,
    /// Standard errors from the unbiased residual variance.
    pub se: Vec<f64>,
}

impl OlsResult {
    /// `(beta - 1) / se`, the t-ratio against a unit coefficient.
    pub fn t_ratio_vs_one(&self) -> Vec<f64> {
        self.beta.iter().zip(&self.se).map(|(b, s)| (b - 1.0) / s).collect()
    }
}

/// Relative pivot size below which a column counts as linearly dependent.
const RANK_TOLERANCE: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Least squares via Householder QR on the column-equilibrated design.
pub fn ols_fit(design: &Matrix, target: &[f64]) -> Result<OlsResult> {
    let (n, p) = (design.nrows, design.ncols);
    if target.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: target.len(),
        });
    }
    if n <= p {
        return Err(Error::InsufficientData(alloc::format!(
            "{n} observations for {p} coefficients"
        )));
    }
    if design.data.iter().chain(target).any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteObjective);
    }

    let mut a = design.clone();
    let mut scale = vec![0.0; p];
    for (j, s) in scale.iter_mut().enumerate() {
        *s = norm(a.column(j));
        if *s == 0.0 {
            return Err(Error::RankDeficient {
                column: j,
                name: Default::default(),
            });
        }
        a.column_mut(j).iter_mut().for_each(|x| *x /= *s);
    }

    let mut qty = target.to_vec();
    let mut r_diag = vec![0.0; p];
    for k in 0..p {
        let alpha = {
            let col = &a.column(k)[k..];
            let nk = norm(col);
            if col[0] > 0.0 {
                -nk
            } else {
                nk
            }
        };
        r_diag[k] = alpha;
        if alpha == 0.0 {
            continue;
        }
        // v = x - alpha e1, stored in place of the sub-column
        let mut v: Vec<f64> = a.column(k)[k..].to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k + 1..p {
            let col = &mut a.column_mut(j)[k..];
            let f = 2.0 * dot(&v, col) / vnorm2;
            col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
        }
        let f = 2.0 * dot(&v, &qty[k..]) / vnorm2;
        qty[k..].iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
    }

    let max_diag = r_diag.iter().fold(0.0_f64, |m, d| m.max(libm::fabs(*d)));
    if let Some(j) = r_diag.iter().position(|d| libm::fabs(*d) <= RANK_TOLERANCE * max_diag) {
        return Err(Error::RankDeficient {
            column: j,
            name: Default::default(),
        });
    }

    // R is upper triangular: diagonal in r_diag, strict upper part in a[i, j], i < j
    let r = |i: usize, j: usize| if i == j { r_diag[i] } else { a.get(i, j) };
    let mut z = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r(i, j) * z[j]).sum();
        z[i] = (qty[i] - s) / r(i, i);
    }
    let beta: Vec<f64> = z.iter().zip(&scale).map(|(zi, s)| zi / s).collect();

    let fitted = design.mul_vec(&beta);
    let rss: f64 = target.iter().zip(&fitted).map(|(y, f)| (y - f) * (y - f)).sum();
    let sigma2 = rss / (n - p) as f64;

    // rows of R^-1 give diag((R^T R)^-1)
    let mut r_inv = vec![0.0; p * p];
    for col in 0..p {
        for i in (0..=col).rev() {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=col).map(|j| r(i, j) * r_inv[j * p + col]).sum();
            r_inv[i * p + col] = (rhs - s) / r(i, i);
        }
    }
    let se = (0..p)
        .map(|i| {
            let row = &r_inv[i * p..(i + 1) * p];
            libm::sqrt(sigma2 * dot(row, row)) / scale[i]
        })
        .collect();

    Ok(OlsResult {
        beta,
        residual_sum_squares: rss,
        n_obs: n,
        se,
    })
}
