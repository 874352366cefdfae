//! Reference implementations shared by the integration tests. They follow
//! the textbook definitions directly and avoid the library's own shortcuts.

#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eigh, UPLO};
use pssc::ann::HnswParams;
use pssc::kmeans::kmeans;
use pssc::uspec::{build_affinity, hybrid_sample, SparseAffinity};
use pssc::{Domain, FeatureMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Spectral clustering of the full (N+p)-node bipartite graph: top-`c`
/// eigenvectors of `D^{-1/2} W D^{-1/2}`, mapped back with `D^{-1/2}`,
/// restricted to the N sample nodes, column- then row-normalized, then
/// k-means with the given seed.
pub fn dense_bipartite_clustering(a: &SparseAffinity, c: usize, seed: u64) -> Vec<usize> {
    let dense = a.to_dense();
    let (n, p) = dense.dim();
    let mut w = Array2::<f64>::zeros((n + p, n + p));
    for i in 0..n {
        for j in 0..p {
            w[[i, n + j]] = dense[[i, j]];
            w[[n + j, i]] = dense[[i, j]];
        }
    }
    let deg: Array1<f64> = w.sum_axis(Axis(1));
    let isqrt = deg.mapv(|d| 1.0 / d.sqrt());
    let mut norm = w.clone();
    for ((r, col), v) in norm.indexed_iter_mut() {
        *v *= isqrt[r] * isqrt[col];
    }
    let (vals, vecs) = norm.eigh(UPLO::Upper).unwrap();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
    let mut emb = Array2::<f64>::zeros((n, c));
    for (k, &idx) in order.iter().take(c).enumerate() {
        for i in 0..n {
            emb[[i, k]] = vecs[[i, idx]] * isqrt[i];
        }
    }
    for mut col in emb.columns_mut() {
        let nrm = col.dot(&col).sqrt();
        col /= nrm;
    }
    for mut row in emb.rows_mut() {
        let nrm = row.dot(&row).sqrt();
        if nrm > 0.0 {
            row /= nrm;
        }
    }
    kmeans(emb.view(), c, 300, 10, seed).unwrap().assignments
}

/// A random small instance: three overlapping Gaussian clouds in R^4,
/// `p` representatives from hybrid sampling, `k` links per sample, with
/// unreferenced representatives dropped.
pub fn random_instance(n: usize, p: usize, k: usize, seed: u64) -> SparseAffinity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 4;
    let centers: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..dim).map(|_| 4.0 * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let mut data = Array2::<f64>::zeros((n, dim));
    for i in 0..n {
        let ctr = &centers[i % 3];
        for d in 0..dim {
            data[[i, d]] = ctr[d] + rng.sample::<f64, _>(StandardNormal);
        }
    }
    let m = FeatureMatrix::from_samples(data, Domain::Poc).unwrap();
    let reps = hybrid_sample(&m, n / 2, p, seed).unwrap();
    let a = build_affinity(&m, &reps, k, HnswParams::default(), seed).unwrap();
    a.prune_empty_columns().0
}

fn gram_schmidt(vectors: &[Array1<f64>]) -> Vec<Array1<f64>> {
    let mut out: Vec<Array1<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let proj = q.dot(&w);
                w = &w - &(q * proj);
            }
        }
        let nrm = w.dot(&w).sqrt();
        if nrm > 1e-9 * v.dot(v).sqrt().max(1e-300) {
            out.push(w / nrm);
        }
    }
    out
}

/// Greedy principal angles: repeatedly pick the unit vectors `u ∈ span(U)`,
/// `v ∈ span(V)` with the largest `uᵀv` that are orthogonal to every earlier
/// pick, via power iteration on the current bases. Degrees.
pub fn greedy_principal_angles(u: ArrayView2<f64>, v: ArrayView2<f64>, count: usize) -> Vec<f64> {
    let mut bu = gram_schmidt(&u.columns().into_iter().map(|c| c.to_owned()).collect::<Vec<_>>());
    let mut bv = gram_schmidt(&v.columns().into_iter().map(|c| c.to_owned()).collect::<Vec<_>>());
    let mut angles = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..count {
        let (ku, kv) = (bu.len(), bv.len());
        let mut m = Array2::<f64>::zeros((ku, kv));
        for i in 0..ku {
            for j in 0..kv {
                m[[i, j]] = bu[i].dot(&bv[j]);
            }
        }
        // power iteration on MᵀM for the leading right singular vector
        let mtm = m.t().dot(&m);
        let mut b: Array1<f64> = (0..kv).map(|_| rng.random::<f64>() - 0.5).collect();
        b /= b.dot(&b).sqrt();
        let mut last = f64::NAN;
        for _ in 0..200_000 {
            let mut nb = mtm.dot(&b);
            let nrm = nb.dot(&nb).sqrt();
            nb /= nrm;
            b = nb;
            if (nrm - last).abs() <= 1e-16 * nrm {
                break;
            }
            last = nrm;
        }
        let a_raw = m.dot(&b);
        let sigma = a_raw.dot(&a_raw).sqrt();
        let a = &a_raw / sigma;
        let uvec = bu.iter().zip(a.iter()).fold(Array1::<f64>::zeros(u.nrows()), |acc, (q, &c)| acc + q * c);
        let vvec = bv.iter().zip(b.iter()).fold(Array1::<f64>::zeros(v.nrows()), |acc, (q, &c)| acc + q * c);
        let cos = uvec.dot(&vvec).clamp(-1.0, 1.0);
        angles.push(cos.acos().to_degrees());
        bu = restrict(&bu, &uvec);
        bv = restrict(&bv, &vvec);
    }
    angles
}

/// Orthonormal basis of `span(basis) ∩ pick⊥`.
fn restrict(basis: &[Array1<f64>], pick: &Array1<f64>) -> Vec<Array1<f64>> {
    let mut vectors = vec![pick.clone()];
    vectors.extend(basis.iter().cloned());
    let mut q = gram_schmidt(&vectors);
    q.remove(0);
    q
}

/// Two elongated Gaussian clusters sharing a major axis (variance 50) and
/// offset by ±5 along the unit-variance minor axis.
pub fn elongated_clusters(per: usize, seed: u64) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Array2::<f64>::zeros((2 * per, 2));
    let mut labels = Vec::with_capacity(2 * per);
    for c in 0..2 {
        let offset = if c == 0 { -5.0 } else { 5.0 };
        for i in 0..per {
            data[[c * per + i, 0]] = 50f64.sqrt() * rng.sample::<f64, _>(StandardNormal);
            data[[c * per + i, 1]] = offset + rng.sample::<f64, _>(StandardNormal);
            labels.push(c);
        }
    }
    (FeatureMatrix::from_samples(data, Domain::Image).unwrap(), labels)
}
