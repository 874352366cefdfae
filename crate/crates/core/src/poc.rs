//! Covariance eigenanalysis: PCA, projection onto the orthogonal complement
//! of the leading eigenvectors (POC), eigenvalue-decay reports and principal
//! angles between class subspaces.
//!
//! All projections act on mean-centered columns; the covariance divisor is
//! `N - 1`.

use std::io::Write;
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::features::{Domain, FeatureMatrix};
use crate::linalg;

/// Eigendecomposition of a sample covariance.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<f64>,
    mean: Array1<f64>,
}

impl Spectrum {
    /// Non-increasing, non-negative eigenvalues.
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// Orthonormal D×D basis, column `i` paired with eigenvalue `i`.
    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    /// Column mean removed before projecting.
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Coordinates of the centered columns of `m` on eigenvectors `from..to`.
    pub fn project(&self, m: &FeatureMatrix, from: usize, to: usize) -> Result<Array2<f64>> {
        if m.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "matrix has dimension {}, spectrum {}",
                m.dim(),
                self.dim()
            )));
        }
        if from > to || to > self.dim() {
            return Err(Error::Parameter(format!(
                "eigenvector range {from}..{to} outside 0..{}",
                self.dim()
            )));
        }
        let mut centered = m.data().to_owned();
        centered -= &self.mean.view().insert_axis(Axis(1));
        let basis = self.eigenvectors.slice(s![.., from..to]);
        Ok(basis.t().dot(&centered))
    }
}

fn require_samples(m: &FeatureMatrix) -> Result<()> {
    if m.n_samples() < 2 {
        return Err(Error::InsufficientData(format!(
            "covariance needs at least 2 samples, got {}",
            m.n_samples()
        )));
    }
    Ok(())
}

pub fn eigendecompose(m: &FeatureMatrix) -> Result<Spectrum> {
    require_samples(m)?;
    let (mean, centered) = linalg::center_columns(m.data());
    let cov = linalg::covariance(&centered);
    drop(centered);
    let (mut eigenvalues, eigenvectors) = linalg::sym_eigen_desc(&cov)?;
    eigenvalues.mapv_inplace(|v| v.max(0.0));
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        mean,
    })
}

/// Projects onto the leading `target_dim` eigenvectors of an existing spectrum.
pub fn pca_reduce_with(spectrum: &Spectrum, m: &FeatureMatrix, target_dim: usize) -> Result<FeatureMatrix> {
    if target_dim == 0 || target_dim > m.dim() {
        return Err(Error::Parameter(format!(
            "PCA target dimension {target_dim} outside [1, {}]",
            m.dim()
        )));
    }
    FeatureMatrix::new(spectrum.project(m, 0, target_dim)?, Domain::Pca)
}

pub fn pca_reduce(m: &FeatureMatrix, target_dim: usize) -> Result<FeatureMatrix> {
    if target_dim == 0 || target_dim > m.dim() {
        return Err(Error::Parameter(format!(
            "PCA target dimension {target_dim} outside [1, {}]",
            m.dim()
        )));
    }
    pca_reduce_with(&eigendecompose(m)?, m, target_dim)
}

/// Drops the `n` leading eigenvectors of an existing spectrum and keeps the
/// remaining `D - n` coordinates.
pub fn poc_project_with(spectrum: &Spectrum, m: &FeatureMatrix, n: usize) -> Result<FeatureMatrix> {
    if n >= m.dim() {
        return Err(Error::Parameter(format!(
            "cannot remove {n} directions from a {}-dimensional space",
            m.dim()
        )));
    }
    FeatureMatrix::new(spectrum.project(m, n, m.dim())?, Domain::Poc)
}

/// Projection onto the orthogonal complement of the `n` leading covariance
/// eigenvectors.
pub fn poc_project(m: &FeatureMatrix, n: usize) -> Result<FeatureMatrix> {
    if n >= m.dim() {
        return Err(Error::Parameter(format!(
            "cannot remove {n} directions from a {}-dimensional space",
            m.dim()
        )));
    }
    poc_project_with(&eigendecompose(m)?, m, n)
}

/// Divides eigenvalues by their sum.
pub fn normalize_spectrum(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = eigenvalues.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate("covariance has zero total variance".into()));
    }
    Ok(eigenvalues.iter().map(|v| v / total).collect())
}

/// ℓ₁-normalized covariance eigenvalues, largest first.
pub fn spectrum_report(m: &FeatureMatrix) -> Result<Vec<f64>> {
    let spectrum = eigendecompose(m)?;
    normalize_spectrum(spectrum.eigenvalues.as_slice().unwrap())
}

/// Length of the shortest prefix whose sum exceeds `fraction`.
pub fn variance_prefix_len(normalized: &[f64], fraction: f64) -> usize {
    let mut acc = 0.0;
    for (i, v) in normalized.iter().enumerate() {
        acc += v;
        if acc > fraction {
            return i + 1;
        }
    }
    normalized.len()
}

/// Writes `index,normalized_eigenvalue` rows (1-based index) with a header.
pub fn write_spectrum_csv(normalized: &[f64], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "index,normalized_eigenvalue").map_err(io)?;
    for (i, v) in normalized.iter().enumerate() {
        writeln!(w, "{},{:e}", i + 1, v).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Leading `k` covariance eigenvectors (D×k) of the selected samples,
/// centered on their own mean. When there are fewer samples than dimensions
/// the eigenvectors come from the N×N Gram matrix.
pub fn class_subspace(m: &FeatureMatrix, indices: &[usize], k: usize) -> Result<Array2<f64>> {
    if indices.len() < 2 {
        return Err(Error::Degenerate(format!(
            "class subspace needs at least 2 samples, got {}",
            indices.len()
        )));
    }
    let sub = m.select_samples(indices);
    let rank_bound = (sub.n_samples() - 1).min(sub.dim());
    if k == 0 || k > rank_bound {
        return Err(Error::Parameter(format!(
            "{k} eigenvectors requested, at most {rank_bound} available"
        )));
    }
    if sub.n_samples() > sub.dim() {
        let spectrum = eigendecompose(&sub)?;
        return Ok(spectrum.eigenvectors.slice(s![.., ..k]).to_owned());
    }
    let (_, centered) = linalg::center_columns(sub.data());
    let gram = centered.t().dot(&centered);
    let (vals, vecs) = linalg::sym_eigen_desc(&gram)?;
    let mut basis = Array2::zeros((sub.dim(), k));
    for i in 0..k {
        if vals[i].is_nan() || vals[i] <= 1e-12 * vals[0].max(f64::MIN_POSITIVE) {
            return Err(Error::Degenerate(format!("class data has rank below {k}")));
        }
        let mut w = centered.dot(&vecs.column(i));
        w /= vals[i].sqrt();
        let (imax, _) = w
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (j, v)| if v.abs() > best.1 { (j, v.abs()) } else { best });
        if w[imax] < 0.0 {
            w.mapv_inplace(|v| -v);
        }
        basis.column_mut(i).assign(&w);
    }
    Ok(basis)
}

/// First `count` principal angles, in degrees and non-decreasing, between
/// the spans of the columns of `u` and `v`.
///
/// Computed as arccosines of the singular values of `Quᵀ·Qv` for
/// orthonormal bases `Qu`, `Qv`; this yields the same angles as the greedy
/// sequence of constrained minimizations that defines them.
pub fn principal_angles(u: ArrayView2<f64>, v: ArrayView2<f64>, count: usize) -> Result<Vec<f64>> {
    if u.nrows() != v.nrows() {
        return Err(Error::Dimension(format!(
            "subspaces live in R^{} and R^{}",
            u.nrows(),
            v.nrows()
        )));
    }
    if count > u.ncols().min(v.ncols()) {
        return Err(Error::Parameter(format!(
            "{count} angles requested between subspaces of dimension {} and {}",
            u.ncols(),
            v.ncols()
        )));
    }
    let qu = linalg::orthonormalize(u)?;
    let qv = linalg::orthonormalize(v)?;
    let cross = qu.t().dot(&qv);
    let sv = linalg::singular_values(&cross)?;
    Ok(sv
        .iter()
        .take(count)
        .map(|c| c.clamp(0.0, 1.0).acos().to_degrees())
        .collect())
}
