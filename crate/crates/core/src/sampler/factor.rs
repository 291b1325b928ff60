//! Covariance matrices and their lower-triangular factors.

use super::grid::TimeGrid;
use crate::error::{Error, Result};
use crate::models::ProcessModel;
use rayon::prelude::*;

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl CovMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = f(i, j);
            }
        }
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }
}

/// M[i][j] = R(t_i, t_j). Only the lower triangle is evaluated; the matrix
/// is symmetric by construction.
pub fn build_covariance_matrix(model: &ProcessModel, grid: &TimeGrid) -> Result<CovMatrix> {
    let t = grid.times();
    let n = t.len();
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| (0..=i).map(|j| model.covariance(t[i], t[j])).collect())
        .collect();
    let mut data = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row?.into_iter().enumerate() {
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(CovMatrix { n, data })
}

/// Lower-triangular L, rows packed: row i holds L[i][0..=i].
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub n: usize,
    pub data: Vec<f64>,
    /// Diagonal shift that made the factorisation succeed.
    pub jitter: f64,
}

impl CholeskyFactor {
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.row(i)[j]
        }
    }

    /// (L·Lᵀ)[i][j].
    pub fn product(&self, i: usize, j: usize) -> f64 {
        let k = i.min(j) + 1;
        dot(&self.row(i)[..k], &self.row(j)[..k])
    }

    /// out = L·z.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = dot(self.row(i), &z[..=i]);
        }
    }
}

pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-14, 1e-12, 1e-10];

/// Cholesky factor of M + jitter·I, escalating jitter (relative to the
/// largest diagonal entry) along [`JITTER_LADDER`]. Pivots that vanish
/// together with their whole column (e.g. the row of X₀ = 0) give a zero
/// column instead of a failure.
pub fn factor_covariance(m: &CovMatrix) -> Result<CholeskyFactor> {
    let scale = m.max_diagonal().max(f64::MIN_POSITIVE);
    let mut last = None;
    for rel in JITTER_LADDER {
        match cholesky(m, rel * scale, scale) {
            Ok(f) => return Ok(f),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn cholesky(m: &CovMatrix, jitter: f64, scale: f64) -> Result<CholeskyFactor> {
    let n = m.n;
    let zero_tol = 1e-15 * scale;
    let mut data = vec![0.0; n * (n + 1) / 2];
    let off = |i: usize| i * (i + 1) / 2;
    for j in 0..n {
        let rj = off(j);
        let d = m.get(j, j) + jitter - dot(&data[rj..rj + j], &data[rj..rj + j]);
        if d > zero_tol {
            let ljj = d.sqrt();
            data[rj + j] = ljj;
            // L[i][j] for i > j; row j is finished, rows i > j only have
            // columns < j filled so far.
            let (head, tail) = data.split_at_mut(off(j + 1));
            let row_j = &head[rj..rj + j];
            let mut start = 0;
            for i in j + 1..n {
                let len = i + 1;
                let row_i = &mut tail[start..start + len];
                row_i[j] = (m.get(i, j) - dot(&row_i[..j], row_j)) / ljj;
                start += len;
            }
        } else if d >= -zero_tol {
            // zero pivot: acceptable only if the column vanishes too
            for i in j + 1..n {
                let ri = off(i);
                let num = m.get(i, j) - dot(&data[ri..ri + j], &data[rj..rj + j]);
                if num.abs() > 1e-12 * scale {
                    return Err(Error::NotPositiveSemidefinite {
                        pivot: j,
                        value: d,
                        jitter,
                    });
                }
            }
        } else {
            return Err(Error::NotPositiveSemidefinite {
                pivot: j,
                value: d,
                jitter,
            });
        }
    }
    Ok(CholeskyFactor { n, data, jitter })
}

/// Fixed-order dot product with eight interleaved accumulators: the
/// summation order depends only on the length, never on the caller.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// Durbin–Levinson recursion for a stationary sequence with
/// autocovariance r: yields, one order at a time, the prediction
/// coefficients (stored reversed, so that they pair with past values in
/// time order) and the innovation variance. This is the Cholesky factor of
/// the Toeplitz covariance in innovations form.
pub struct Durbin<'a> {
    r: &'a [f64],
    phi: Vec<f64>,
    rev: Vec<f64>,
    scratch: Vec<f64>,
    v: f64,
    m: usize,
    all_zero: bool,
}

impl<'a> Durbin<'a> {
    pub fn new(r: &'a [f64]) -> Self {
        Self {
            r,
            phi: Vec::with_capacity(r.len()),
            rev: Vec::with_capacity(r.len()),
            scratch: Vec::with_capacity(r.len()),
            v: r[0],
            m: 0,
            all_zero: true,
        }
    }

    /// Current order m: coefficients a with Y_m = Σ_i a[i]·Y_i + √v·z.
    pub fn coefficients(&self) -> Option<&[f64]> {
        (!self.all_zero).then_some(&self.rev[..])
    }

    pub fn innovation_variance(&self) -> f64 {
        self.v
    }

    /// Advances from order m to m + 1.
    pub fn advance(&mut self) -> Result<()> {
        let m = self.m + 1;
        if m >= self.r.len() {
            return Err(Error::Numeric("Durbin recursion past the end of the autocovariance".into()));
        }
        // κ = (r(m) − Σ_{j=1}^{m−1} φ_j r(m−j)) / v
        let mut acc = self.r[m];
        for (j, p) in self.phi.iter().enumerate() {
            acc -= p * self.r[m - 1 - j];
        }
        let kappa = acc / self.v;
        if !kappa.is_finite() || kappa.abs() >= 1.0 {
            return Err(Error::NotPositiveSemidefinite {
                pivot: m,
                value: 1.0 - kappa * kappa,
                jitter: 0.0,
            });
        }
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.phi);
        let k = self.phi.len();
        for j in 0..k {
            self.phi[j] = self.scratch[j] - kappa * self.scratch[k - 1 - j];
        }
        self.phi.push(kappa);
        self.rev.clear();
        self.rev.extend(self.phi.iter().rev());
        self.v *= 1.0 - kappa * kappa;
        self.all_zero &= kappa == 0.0;
        self.m = m;
        Ok(())
    }
}
