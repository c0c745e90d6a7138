//! Small dense symmetric linear algebra: sample moments, Jacobi
//! eigendecomposition, symmetric inverse square root, residualization.
//!
//! Dimensions here are tiny (p rarely above 5), so everything is plain
//! row-major `Vec<f64>` with cyclic Jacobi sweeps for the spectral work.

use crate::error::{Error, Result};

/// Relative eigenvalue tolerance below which a matrix is treated as singular.
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-12;

/// A p-by-p real symmetric matrix, stored densely and kept exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareSymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareSymMatrix {
    /// Build from row-major entries, mirroring across the diagonal so the
    /// stored matrix is exactly symmetric (off-diagonal pairs are averaged).
    pub fn from_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be >= 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let mut data = entries.to_vec();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub(crate) fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let p = self.dim;
        let mut out = vec![0.0; p];
        for i in 0..p {
            let row = &self.data[i * p..(i + 1) * p];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Quadratic form xᵀ M x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// An n-by-p data matrix, rows are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl Dataset {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData { need: 1, got: 0 });
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(Error::InvalidParameter("rows must be non-empty".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * p);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Parse(format!(
                    "ragged row {}: expected {} columns, got {}",
                    i + 1,
                    p,
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n: rows.len(), p, data })
    }

    pub fn from_flat(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for {n}x{p}, got {}",
                n * p,
                data.len()
            )));
        }
        Ok(Self { n, p, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    /// Column `j` as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.p + j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Sample mean and covariance with divisor n (not n-1).
pub fn sample_mean_cov(data: &Dataset) -> Result<(Vec<f64>, SquareSymMatrix)> {
    let (n, p) = (data.n(), data.p());
    if n < 2 {
        return Err(Error::InsufficientData { need: 2, got: n });
    }
    let mut mean = vec![0.0; p];
    for row in data.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = SquareSymMatrix::zeros(p);
    for row in data.rows() {
        for i in 0..p {
            let di = row[i] - mean[i];
            for j in i..p {
                let dj = row[j] - mean[j];
                cov.data[i * p + j] += di * dj;
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            let v = cov.data[i * p + j] / n as f64;
            cov.set_sym(i, j, v);
        }
    }
    Ok((mean, cov))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back ascending; eigenvectors are the matching columns of
/// an orthogonal matrix, each with its first nonzero component made positive
/// so the decomposition is reproducible.
pub fn sym_eig(m: &SquareSymMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = m.dim;
    let mut a = m.data.clone();
    // v holds eigenvectors as columns
    let mut v = vec![0.0; p * p];
    for i in 0..p {
        v[i * p + i] = 1.0;
    }

    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let threshold = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..p {
            for j in (i + 1)..p {
                off = off.max(a[i * p + j].abs());
            }
        }
        if off <= threshold {
            break;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let apq = a[i * p + j];
                if apq.abs() <= threshold * 1e-2 {
                    continue;
                }
                let app = a[i * p + i];
                let aqq = a[j * p + j];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // rotate rows/cols i and j
                for k in 0..p {
                    let aik = a[i * p + k];
                    let ajk = a[j * p + k];
                    a[i * p + k] = c * aik - s * ajk;
                    a[j * p + k] = s * aik + c * ajk;
                }
                for k in 0..p {
                    let aki = a[k * p + i];
                    let akj = a[k * p + j];
                    a[k * p + i] = c * aki - s * akj;
                    a[k * p + j] = s * aki + c * akj;
                }
                for k in 0..p {
                    let vki = v[k * p + i];
                    let vkj = v[k * p + j];
                    v[k * p + i] = c * vki - s * vkj;
                    v[k * p + j] = s * vki + c * vkj;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..p)
        .map(|c| (a[c * p + c], (0..p).map(|r| v[r * p + c]).collect()))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    for (_, vec) in pairs.iter_mut() {
        let lead = vec.iter().find(|x| x.abs() > 1e-12);
        if let Some(&lead) = lead {
            if lead < 0.0 {
                for x in vec.iter_mut() {
                    *x = -*x;
                }
            }
        }
    }
    let (eigvals, eigvecs) = pairs.into_iter().unzip();
    (eigvals, eigvecs)
}

/// Symmetric inverse square root H of an SPD matrix: H m H = I.
///
/// `rel_tol` is relative to the largest eigenvalue; any eigenvalue at or
/// below `rel_tol * lambda_max` signals a degenerate matrix.
pub fn inv_sqrt_spd(m: &SquareSymMatrix, rel_tol: f64) -> Result<SquareSymMatrix> {
    let p = m.dim;
    let (eigvals, eigvecs) = sym_eig(m);
    let max_eig = eigvals.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = rel_tol * max_eig.max(f64::MIN_POSITIVE);
    let min_eig = eigvals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min_eig <= tol {
        return Err(Error::SingularMatrix { min_eig, tol });
    }
    // H = V diag(1/sqrt(lambda)) Vᵀ
    let mut h = SquareSymMatrix::zeros(p);
    for i in 0..p {
        for j in i..p {
            let mut sum = 0.0;
            for (k, vk) in eigvecs.iter().enumerate() {
                sum += vk[i] * vk[j] / eigvals[k].sqrt();
            }
            h.set_sym(i, j, sum);
        }
    }
    Ok(h)
}

/// Symmetric square root of an SPD matrix (used to push standard normals
/// through a target covariance).
pub fn sqrt_spd(m: &SquareSymMatrix, rel_tol: f64) -> Result<SquareSymMatrix> {
    let p = m.dim;
    let (eigvals, eigvecs) = sym_eig(m);
    let max_eig = eigvals.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = rel_tol * max_eig.max(f64::MIN_POSITIVE);
    let min_eig = eigvals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min_eig <= tol {
        return Err(Error::SingularMatrix { min_eig, tol });
    }
    let mut s = SquareSymMatrix::zeros(p);
    for i in 0..p {
        for j in i..p {
            let mut sum = 0.0;
            for (k, vk) in eigvecs.iter().enumerate() {
                sum += vk[i] * vk[j] * eigvals[k].sqrt();
            }
            s.set_sym(i, j, sum);
        }
    }
    Ok(s)
}

/// Residualize: center by the sample mean and standardize by the symmetric
/// inverse square root of the sample covariance, so the residual sample has
/// zero mean and identity covariance (divisor n).
pub fn residualize(data: &Dataset, rel_tol: f64) -> Result<Dataset> {
    let (n, p) = (data.n(), data.p());
    if n < p + 1 {
        return Err(Error::InsufficientData { need: p + 1, got: n });
    }
    let (mean, cov) = sample_mean_cov(data)?;
    let h = inv_sqrt_spd(&cov, rel_tol)?;
    let mut out = Vec::with_capacity(n * p);
    let mut centered = vec![0.0; p];
    for row in data.rows() {
        for j in 0..p {
            centered[j] = row[j] - mean[j];
        }
        out.extend_from_slice(&h.mul_vec(&centered));
    }
    Dataset::from_flat(n, p, out)
}
