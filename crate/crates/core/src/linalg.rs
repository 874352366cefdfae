//! Dense helpers over LAPACK.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eigh, SVD, UPLO};

use crate::error::{Error, Result};

/// Symmetric eigendecomposition, eigenvalues non-increasing. Each
/// eigenvector's largest-magnitude entry is made positive.
pub(crate) fn sym_eigen_desc(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (vals, vecs) = a.eigh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;
    let n = vals.len();
    let order: Vec<usize> = (0..n).rev().collect();
    let vals = vals.select(Axis(0), &order);
    let mut vecs = vecs.select(Axis(1), &order);
    for mut col in vecs.columns_mut() {
        fix_sign(&mut col);
    }
    Ok((vals, vecs))
}

fn fix_sign(col: &mut ndarray::ArrayViewMut1<f64>) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, v) in col.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    if col[best] < 0.0 {
        col.mapv_inplace(|v| -v);
    }
}

/// Column means and the mean-centered copy of a D×N matrix.
pub(crate) fn center_columns(data: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let mean = data.mean_axis(Axis(1)).unwrap_or_else(|| Array1::zeros(data.nrows()));
    let mut centered = data.to_owned();
    centered -= &mean.view().insert_axis(Axis(1));
    (mean, centered)
}

/// Sample covariance `Xc·Xcᵀ / (N-1)` of centered D×N data.
pub(crate) fn covariance(centered: &Array2<f64>) -> Array2<f64> {
    let n = centered.ncols();
    let mut cov = centered.dot(&centered.t());
    cov /= (n - 1) as f64;
    // symmetrize rounding
    let t = cov.t().to_owned();
    cov += &t;
    cov *= 0.5;
    cov
}

/// Orthonormal basis of the columns of `vectors` (D×k) by modified
/// Gram–Schmidt with one re-orthogonalization pass.
pub(crate) fn orthonormalize(vectors: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (d, k) = vectors.dim();
    if k > d {
        return Err(Error::Degenerate(format!("{k} vectors cannot be independent in R^{d}")));
    }
    let mut q = Array2::<f64>::zeros((d, k));
    for j in 0..k {
        let mut v = vectors.column(j).to_owned();
        let original = v.dot(&v).sqrt();
        if original == 0.0 || !original.is_finite() {
            return Err(Error::Degenerate(format!("vector {j} is zero or non-finite")));
        }
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let proj = qi.dot(&v);
                v.scaled_add(-proj, &qi);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm <= 1e-10 * original {
            return Err(Error::Degenerate(format!(
                "vector {j} is linearly dependent on the preceding vectors"
            )));
        }
        q.column_mut(j).assign(&(v / norm));
    }
    Ok(q)
}

/// Singular values in non-increasing order.
pub(crate) fn singular_values(m: &Array2<f64>) -> Result<Array1<f64>> {
    let (_, s, _) = m.svd(false, false).map_err(|e| Error::Linalg(e.to_string()))?;
    Ok(s)
}
