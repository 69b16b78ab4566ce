//! Gaussian belief algebra.
//!
//! Every filter stage in the crate exchanges [`GaussianBelief`] values. This
//! module holds the operations on them that do not depend on any model:
//! marginalisation, statistical linear regression through the Schur
//! complement, conservative block decorrelation, PSD repair and the
//! normalised (absolute Pearson) covariance used to inspect dependency
//! structure.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{GckfError, Result};

/// Relative cut-off below which eigenvalues are treated as zero by
/// [`pinv_psd`].
pub const PINV_RTOL: f64 = 1e-12;

/// Tolerance used for symmetry checks, relative to the largest absolute entry.
pub const SYMMETRY_RTOL: f64 = 1e-9;

/// Mean vector plus covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    /// Builds a belief, checking dimensions and symmetry of `cov`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() != mean.len() {
            return Err(GckfError::arg(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        check_symmetric(&cov, SYMMETRY_RTOL)?;
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Marginal standard deviations.
    pub fn std_devs(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.cov.diagonal().iter().map(|v| v.max(0.0).sqrt()))
    }

    /// Checks the PSD invariant: min eigenvalue >= -1e-9 * max(1, max diag).
    pub fn is_psd(&self) -> bool {
        let scale = self.cov.diagonal().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        min_eigenvalue(&self.cov) >= -1e-9 * scale
    }
}

/// Output of [`schur_regression`]: `c = alpha * (a - mean_a) + mean_c + zeta`,
/// `zeta ~ N(0, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub alpha: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub mean_a: DVector<f64>,
    pub mean_c: DVector<f64>,
}

/// Normalised covariance together with the indices whose variance was zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCovariance {
    pub matrix: DMatrix<f64>,
    pub zero_variance: Vec<usize>,
}

fn check_indices(idx: &[usize], dim: usize) -> Result<()> {
    let mut seen = vec![false; dim];
    for &i in idx {
        if i >= dim {
            return Err(GckfError::Index { index: i, dim });
        }
        if seen[i] {
            return Err(GckfError::arg(format!("index {i} repeated")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Sub-matrix `m[rows, cols]`, order preserved.
pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Sub-vector `v[idx]`, order preserved.
pub fn select_vec(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// In-place `(m + m^T) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Errors if `m` is not square or is asymmetric beyond `rtol * max|m|`.
pub fn check_symmetric(m: &DMatrix<f64>, rtol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(GckfError::arg(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d > rtol * scale {
                return Err(GckfError::arg(format!("matrix asymmetric at ({i},{j}): |difference| = {d:e}")));
            }
        }
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric matrix (0 for an empty matrix).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    SymmetricEigen::new(s).eigenvalues.min()
}

/// Pseudo-inverse of a symmetric PSD matrix. Eigenvalues below
/// `rtol * max|eigenvalue|` are treated as zero.
pub fn pinv_psd(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = SymmetricEigen::new(s);
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if top == 0.0 {
        return DMatrix::zeros(n, n);
    }
    let cut = rtol * top;
    let inv = eig.eigenvalues.map(|l| if l > cut { 1.0 / l } else { 0.0 });
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&inv);
    let mut out = scaled * eig.eigenvectors.transpose();
    symmetrize(&mut out);
    out
}

/// Projects a symmetric matrix onto the PSD cone by raising negative
/// eigenvalues to zero. PSD inputs are returned unchanged.
pub fn clamp_psd(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    check_symmetric(m, tol)?;
    let mut s = m.clone();
    symmetrize(&mut s);
    if s.is_empty() {
        return Ok(s);
    }
    let eig = SymmetricEigen::new(s.clone());
    if eig.eigenvalues.min() >= 0.0 {
        return Ok(s);
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let mut out = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// Marginal of `b` over the ordered index set `idx`.
pub fn marginalize(b: &GaussianBelief, idx: &[usize]) -> Result<GaussianBelief> {
    check_indices(idx, b.dim())?;
    Ok(GaussianBelief { mean: select_vec(&b.mean, idx), cov: select(&b.cov, idx, idx) })
}

fn check_regression_sets(joint: &GaussianBelief, idx_a: &[usize], idx_c: &[usize]) -> Result<()> {
    if idx_a.is_empty() || idx_c.is_empty() {
        return Err(GckfError::arg("regression requires non-empty anchor and target sets"));
    }
    check_indices(idx_a, joint.dim())?;
    check_indices(idx_c, joint.dim())?;
    if idx_a.iter().any(|i| idx_c.contains(i)) {
        return Err(GckfError::arg("anchor and target index sets overlap"));
    }
    Ok(())
}

/// Linear-Gaussian regression of the states `idx_c` on the states `idx_a`
/// within `joint`: `alpha = C A^+`, `q = B - C A^+ C^T`, where `A = cov(a)`,
/// `B = cov(c)` and `C = cov(c, a)`.
pub fn schur_regression(joint: &GaussianBelief, idx_a: &[usize], idx_c: &[usize]) -> Result<RegressionResult> {
    check_regression_sets(joint, idx_a, idx_c)?;
    let a = select(&joint.cov, idx_a, idx_a);
    let b = select(&joint.cov, idx_c, idx_c);
    let c = select(&joint.cov, idx_c, idx_a);
    let (alpha, q) = regression_from_blocks(&a, &b, &c)?;
    Ok(RegressionResult { alpha, q, mean_a: select_vec(&joint.mean, idx_a), mean_c: select_vec(&joint.mean, idx_c) })
}

/// [`schur_regression`] for targets that are paired one to one with their
/// anchors, in residual form: `alpha = I + (C - A) A^+` and
/// `q = (B - C^T) - (C - A) A^+ C^T`. Agrees with the plain form on the range
/// of `A` and returns the identity map exactly when `B = C = A`.
pub fn paired_regression(joint: &GaussianBelief, idx_a: &[usize], idx_c: &[usize]) -> Result<RegressionResult> {
    if idx_a.len() != idx_c.len() {
        return Err(GckfError::arg(format!(
            "paired regression needs equal set sizes, got {} anchors and {} targets",
            idx_a.len(),
            idx_c.len()
        )));
    }
    check_regression_sets(joint, idx_a, idx_c)?;
    let a = select(&joint.cov, idx_a, idx_a);
    let b = select(&joint.cov, idx_c, idx_c);
    let c = select(&joint.cov, idx_c, idx_a);
    let drift = (&c - &a) * pinv_psd(&a, PINV_RTOL);
    let mut q = (&b - c.transpose()) - &drift * c.transpose();
    symmetrize(&mut q);
    Ok(RegressionResult {
        alpha: DMatrix::identity(a.nrows(), a.nrows()) + drift,
        q: clamp_psd(&q, SYMMETRY_RTOL)?,
        mean_a: select_vec(&joint.mean, idx_a),
        mean_c: select_vec(&joint.mean, idx_c),
    })
}

/// `(C A^+, clamp(B - C A^+ C^T))` for already extracted blocks.
pub(crate) fn regression_from_blocks(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let alpha = c * pinv_psd(a, PINV_RTOL);
    let mut q = b - &alpha * c.transpose();
    symmetrize(&mut q);
    let q = clamp_psd(&q, SYMMETRY_RTOL)?;
    Ok((alpha, q))
}

/// Conservative decorrelation: `P* = blockdiag(V * P[block_i, block_i])`
/// with `V = blocks.len()`. Blocks must partition the index space.
pub fn decorrelate_blocks(cov: &DMatrix<f64>, blocks: &[Vec<usize>]) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if blocks.is_empty() {
        return Err(GckfError::arg("at least one block is required"));
    }
    let mut owner = vec![usize::MAX; n];
    for (k, block) in blocks.iter().enumerate() {
        for &i in block {
            if i >= n {
                return Err(GckfError::Index { index: i, dim: n });
            }
            if owner[i] != usize::MAX {
                return Err(GckfError::arg(format!("index {i} appears in more than one block")));
            }
            owner[i] = k;
        }
    }
    if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(GckfError::arg(format!("index {i} not covered by any block")));
    }
    let v = blocks.len() as f64;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if owner[i] == owner[j] {
                out[(i, j)] = v * cov[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Matrix of absolute Pearson coefficients `|cov(i,j)| / (sigma_i sigma_j)`.
///
/// Zero-variance coordinates get 1 on the diagonal and 0 off it, and are
/// listed in `zero_variance`.
pub fn normalized_covariance(b: &GaussianBelief) -> NormalizedCovariance {
    let n = b.dim();
    let diag: Vec<f64> = b.cov.diagonal().iter().copied().collect();
    let zero_variance: Vec<usize> = (0..n).filter(|&i| diag[i] <= 0.0).collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if diag[i] <= 0.0 || diag[j] <= 0.0 {
            0.0
        } else {
            (b.cov[(i, j)].abs() / (diag[i] * diag[j]).sqrt()).min(1.0)
        }
    });
    NormalizedCovariance { matrix, zero_variance }
}

/// Writes a matrix as CSV, row-major, 17 significant digits.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut w: W) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv<R: BufRead>(r: R) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| GckfError::arg(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(GckfError::arg("ragged CSV matrix"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}
