//! Scalable spectral clustering on a sample/representative bipartite graph.
//!
//! Representatives come from k-means over a random candidate subset. Every
//! sample links to its `k` nearest representatives (found with HNSW) through
//! a Gaussian kernel, giving an N×p affinity with exactly `k` entries per
//! row. The spectral embedding is computed on the p×p side
//! (`Ā = Aᵀ D_X⁻¹ A`) and transferred back to the samples.

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ann::{build_index, HnswParams};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::kmeans::{kmeans, DEFAULT_MAX_ITER, DEFAULT_N_INIT};
use crate::linalg::sym_eigen_desc;
use crate::metrics::ClusterResult;

/// Lloyd iterations spent refining the candidate subset into representatives.
pub const SAMPLING_MAX_ITER: usize = 10;

/// Tolerance for the symmetry, semidefiniteness and eigenvalue-range checks.
const SPECTRAL_TOL: f64 = 1e-8;

/// p representatives (rows) chosen from `p_prime` random candidates.
#[derive(Debug, Clone)]
pub struct Representatives {
    matrix: Array2<f64>,
    p_prime: usize,
}

impl Representatives {
    /// Wraps an explicit p×d matrix; `p_prime` is informational.
    pub fn new(matrix: Array2<f64>, p_prime: usize) -> Result<Self> {
        if matrix.nrows() == 0 {
            return Err(Error::Parameter("no representatives".into()));
        }
        if matrix.nrows() > p_prime {
            return Err(Error::Parameter(format!(
                "p = {} exceeds p' = {p_prime}",
                matrix.nrows()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Range("representatives have non-finite entries".into()));
        }
        Ok(Self {
            matrix: matrix.as_standard_layout().into_owned(),
            p_prime,
        })
    }

    /// p×d, one representative per row.
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p_prime(&self) -> usize {
        self.p_prime
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn rows(&self) -> Vec<&[f64]> {
        let d = self.dim().max(1);
        self.matrix
            .as_slice()
            .expect("standard layout")
            .chunks(d)
            .take(self.p())
            .collect()
    }
}

/// Row-sparse N×p affinity holding exactly `k` entries per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinity {
    n_cols: usize,
    k: usize,
    cols: Vec<usize>,
    weights: Vec<f64>,
    sigma: f64,
}

impl SparseAffinity {
    /// `cols` and `weights` are laid out row after row, `k` per row.
    pub fn new(n_cols: usize, k: usize, cols: Vec<usize>, weights: Vec<f64>, sigma: f64) -> Result<Self> {
        if k == 0 || k > n_cols {
            return Err(Error::Parameter(format!("k = {k} outside [1, {n_cols}]")));
        }
        if cols.len() != weights.len() || !cols.len().is_multiple_of(k) {
            return Err(Error::Dimension(format!(
                "{} column ids and {} weights do not form rows of {k}",
                cols.len(),
                weights.len()
            )));
        }
        for (i, (row_cols, row_w)) in cols.chunks(k).zip(weights.chunks(k)).enumerate() {
            for (a, &c) in row_cols.iter().enumerate() {
                if c >= n_cols {
                    return Err(Error::Range(format!("row {i}: column {c} outside [0,{n_cols})")));
                }
                if row_cols[..a].contains(&c) {
                    return Err(Error::Consistency(format!("row {i}: column {c} repeated")));
                }
            }
            if let Some(w) = row_w.iter().find(|w| !(**w > 0.0 && **w <= 1.0)) {
                return Err(Error::Range(format!("row {i}: weight {w} outside (0,1]")));
            }
        }
        Ok(Self {
            n_cols,
            k,
            cols,
            weights,
            sigma,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.cols.len() / self.k
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of stored entries, always `k·N`.
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Column ids and weights of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = i * self.k..(i + 1) * self.k;
        (&self.cols[r.clone()], &self.weights[r])
    }

    pub fn row_degrees(&self) -> Array1<f64> {
        self.weights.chunks(self.k).map(|w| w.iter().sum()).collect()
    }

    pub fn column_degrees(&self) -> Array1<f64> {
        let mut d = Array1::zeros(self.n_cols);
        for (&c, &w) in self.cols.iter().zip(&self.weights) {
            d[c] += w;
        }
        d
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n_rows(), self.n_cols));
        for i in 0..self.n_rows() {
            let (cols, w) = self.row(i);
            for (&c, &w) in cols.iter().zip(w) {
                a[[i, c]] = w;
            }
        }
        a
    }

    /// Drops columns that no row links to and renumbers the rest. Returns the
    /// pruned affinity and the original ids of the kept columns.
    pub fn prune_empty_columns(&self) -> (SparseAffinity, Vec<usize>) {
        let mut used = vec![false; self.n_cols];
        for &c in &self.cols {
            used[c] = true;
        }
        let kept: Vec<usize> = (0..self.n_cols).filter(|&c| used[c]).collect();
        let mut new_id = vec![usize::MAX; self.n_cols];
        for (n, &c) in kept.iter().enumerate() {
            new_id[c] = n;
        }
        let pruned = SparseAffinity {
            n_cols: kept.len(),
            k: self.k,
            cols: self.cols.iter().map(|&c| new_id[c]).collect(),
            weights: self.weights.clone(),
            sigma: self.sigma,
        };
        (pruned, kept)
    }
}

/// N×C spectral coordinates; each column has unit length.
#[derive(Debug, Clone)]
pub struct Embedding {
    coords: Array2<f64>,
    eigenvalues: Vec<f64>,
}

impl Embedding {
    pub fn coords(&self) -> ArrayView2<'_, f64> {
        self.coords.view()
    }

    /// Eigenvalues of the reduced problem matching each column, non-increasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Copy with every nonzero row scaled to unit length.
    pub fn row_normalized(&self) -> Array2<f64> {
        let mut out = self.coords.clone();
        normalize_rows(&mut out);
        out
    }
}

pub(crate) fn normalize_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
}

pub(crate) fn normalize_columns(m: &mut Array2<f64>) {
    for mut col in m.columns_mut() {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col /= norm;
        }
    }
}

/// Picks `p_prime` distinct samples uniformly at random and returns the `p`
/// k-means centers of that candidate set.
pub fn hybrid_sample(m: &FeatureMatrix, p_prime: usize, p: usize, seed: u64) -> Result<Representatives> {
    let n = m.n_samples();
    if p == 0 || p >= p_prime {
        return Err(Error::Parameter(format!("need 0 < p < p', got p = {p}, p' = {p_prime}")));
    }
    if p_prime > n {
        return Err(Error::Parameter(format!("p' = {p_prime} exceeds N = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, p_prime).into_vec();
    picked.sort_unstable();
    let candidates = m.data().select(Axis(1), &picked).reversed_axes();
    let fit = kmeans(candidates.view(), p, SAMPLING_MAX_ITER, 1, seed)?;
    Representatives::new(fit.centers, p_prime)
}

/// Links every sample to its `k` approximately nearest representatives with
/// weight `exp(-d²/2σ²)`, where σ is the mean distance from a sample to its
/// k-th nearest representative. Weights that would underflow are clamped to
/// the smallest positive normal number so every stored edge stays positive.
pub fn build_affinity(
    m: &FeatureMatrix,
    reps: &Representatives,
    k: usize,
    params: HnswParams,
    seed: u64,
) -> Result<SparseAffinity> {
    let p = reps.p();
    if k == 0 || k > p {
        return Err(Error::Parameter(format!("k = {k} outside [1, p = {p}]")));
    }
    if reps.dim() != m.dim() {
        return Err(Error::Dimension(format!(
            "representatives have dimension {}, samples {}",
            reps.dim(),
            m.dim()
        )));
    }
    let index = build_index(&reps.rows(), params.m, params.ef_construction, seed)?;
    let samples = m.samples_owned();
    let d = m.dim();
    let flat = samples.as_slice().expect("standard layout");
    let neighbors = (0..m.n_samples())
        .into_par_iter()
        .map(|i| index.query(&flat[i * d..(i + 1) * d], k, params.ef_search))
        .collect::<Result<Vec<_>>>()?;

    let n = neighbors.len();
    let sigma = if n == 0 {
        0.0
    } else {
        neighbors.iter().map(|nl| nl.distances[k - 1]).sum::<f64>() / n as f64
    };
    let mut cols = Vec::with_capacity(n * k);
    let mut weights = Vec::with_capacity(n * k);
    for nl in &neighbors {
        cols.extend_from_slice(&nl.ids);
        weights.extend(nl.distances.iter().map(|&dist| gaussian(dist, sigma)));
    }
    SparseAffinity::new(p, k, cols, weights, sigma)
}

fn gaussian(dist: f64, sigma: f64) -> f64 {
    if dist == 0.0 {
        return 1.0;
    }
    if sigma == 0.0 {
        return f64::MIN_POSITIVE;
    }
    (-(dist * dist) / (2.0 * sigma * sigma)).exp().max(f64::MIN_POSITIVE)
}

/// Spectral embedding of the samples from the p×p reduced problem.
///
/// Solves the symmetric eigenproblem on `D_Y^{-1/2} Ā D_Y^{-1/2}` with
/// `Ā = Aᵀ D_X⁻¹ A`, keeps the eigenvectors of the `c` largest eigenvalues
/// and maps each one to the samples via `u = D_X⁻¹ A D_Y^{-1/2} v`.
pub fn transfer_cut(a: &SparseAffinity, c: usize) -> Result<Embedding> {
    let p = a.n_cols();
    if c < 2 || c > p {
        return Err(Error::Parameter(format!("C = {c} outside [2, p = {p}]")));
    }
    let dx = a.row_degrees();
    if let Some(i) = dx.iter().position(|&v| v <= 0.0) {
        return Err(Error::Connectivity(format!("sample {i} has no positive affinity")));
    }
    let dy = a.column_degrees();
    if let Some(j) = dy.iter().position(|&v| v <= 0.0) {
        return Err(Error::Connectivity(format!("representative {j} is linked to no sample")));
    }

    let mut abar = Array2::<f64>::zeros((p, p));
    for i in 0..a.n_rows() {
        let (cols, w) = a.row(i);
        for (&ca, &wa) in cols.iter().zip(w) {
            let s = wa / dx[i];
            for (&cb, &wb) in cols.iter().zip(w) {
                abar[[ca, cb]] += s * wb;
            }
        }
    }
    let asym = (&abar - &abar.t()).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if asym > SPECTRAL_TOL {
        return Err(Error::Consistency(format!("reduced affinity is not symmetric ({asym:e})")));
    }

    let dy_isqrt = dy.mapv(|v| 1.0 / v.sqrt());
    let mut normalized = abar;
    for ((r, col), v) in normalized.indexed_iter_mut() {
        *v *= dy_isqrt[r] * dy_isqrt[col];
    }
    let (vals, vecs) = sym_eigen_desc(&normalized)?;
    let lo = vals[p - 1];
    let hi = vals[0];
    if lo < -SPECTRAL_TOL || hi > 1.0 + SPECTRAL_TOL {
        return Err(Error::Consistency(format!(
            "normalized reduced affinity has eigenvalues in [{lo:e}, {hi:e}], outside [0, 1]"
        )));
    }

    let mut y = vecs.slice(ndarray::s![.., ..c]).to_owned();
    y *= &dy_isqrt.view().insert_axis(Axis(1));
    let mut coords = Array2::<f64>::zeros((a.n_rows(), c));
    for (i, mut out) in coords.rows_mut().into_iter().enumerate() {
        let (cols, w) = a.row(i);
        for (&col, &wt) in cols.iter().zip(w) {
            out.scaled_add(wt / dx[i], &y.row(col));
        }
    }
    normalize_columns(&mut coords);
    Ok(Embedding {
        coords,
        eigenvalues: vals.iter().take(c).copied().collect(),
    })
}

/// Parameters for [`uspec_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UspecParams {
    pub n_clusters: usize,
    pub p_prime: usize,
    pub p: usize,
    pub k: usize,
    pub hnsw: HnswParams,
    pub seed: u64,
}

/// Full clustering run with default HNSW parameters.
pub fn uspec(m: &FeatureMatrix, c: usize, p_prime: usize, p: usize, k: usize, seed: u64) -> Result<ClusterResult> {
    uspec_with(
        m,
        &UspecParams {
            n_clusters: c,
            p_prime,
            p,
            k,
            hnsw: HnswParams::default(),
            seed,
        },
    )
}

/// Sampling, affinity, transfer cut and k-means on the row-normalized
/// embedding. Representatives that no sample links to are dropped before
/// the eigenproblem.
pub fn uspec_with(m: &FeatureMatrix, params: &UspecParams) -> Result<ClusterResult> {
    let mut timing = std::collections::BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, clock: &mut Instant| {
        timing.insert(name.to_string(), clock.elapsed().as_secs_f64());
        *clock = Instant::now();
    };

    let reps = hybrid_sample(m, params.p_prime, params.p, params.seed)?;
    lap("sampling", &mut clock);
    let affinity = build_affinity(m, &reps, params.k, params.hnsw, params.seed)?;
    let (affinity, _) = affinity.prune_empty_columns();
    lap("affinity", &mut clock);
    let embedding = transfer_cut(&affinity, params.n_clusters)?;
    lap("transfer_cut", &mut clock);
    let rows = embedding.row_normalized();
    let fit = kmeans(rows.view(), params.n_clusters, DEFAULT_MAX_ITER, DEFAULT_N_INIT, params.seed)?;
    lap("kmeans", &mut clock);

    let mut result = ClusterResult::new(fit.assignments, params.n_clusters)?;
    result.timing = timing;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Domain;
    use crate::metrics::accuracy;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn blobs(centers: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> (FeatureMatrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Array2::zeros((centers.len() * per, 2));
        let mut labels = Vec::new();
        for (c, ctr) in centers.iter().enumerate() {
            for i in 0..per {
                data[[c * per + i, 0]] = ctr[0] + spread * rng.sample::<f64, _>(StandardNormal);
                data[[c * per + i, 1]] = ctr[1] + spread * rng.sample::<f64, _>(StandardNormal);
                labels.push(c);
            }
        }
        (FeatureMatrix::from_samples(data, Domain::Poc).unwrap(), labels)
    }

    fn rings(per: usize, seed: u64) -> (FeatureMatrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Array2::zeros((2 * per, 2));
        let mut labels = Vec::new();
        for (c, radius) in [1.0, 4.0].into_iter().enumerate() {
            for i in 0..per {
                let t = rng.random::<f64>() * std::f64::consts::TAU;
                let r = radius + 0.1 * rng.sample::<f64, _>(StandardNormal);
                data[[c * per + i, 0]] = r * t.cos();
                data[[c * per + i, 1]] = r * t.sin();
                labels.push(c);
            }
        }
        (FeatureMatrix::from_samples(data, Domain::Poc).unwrap(), labels)
    }

    const THREE: [[f64; 2]; 3] = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]];

    #[test]
    fn hybrid_sample_parameter_errors() {
        let (m, _) = blobs(&THREE, 10, 0.5, 0);
        assert!(matches!(hybrid_sample(&m, 10, 10, 0), Err(Error::Parameter(_))));
        assert!(matches!(hybrid_sample(&m, 31, 5, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn hybrid_sample_degenerate_sizes() {
        let (m, _) = blobs(&THREE, 10, 0.5, 0);
        let reps = hybrid_sample(&m, 30, 29, 4).unwrap();
        assert_eq!(reps.p(), 29);
        assert_eq!(reps.p_prime(), 30);
        assert!(reps.matrix().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn hybrid_sample_covers_every_blob() {
        let (m, _) = blobs(&THREE, 100, 0.5, 1);
        let reps = hybrid_sample(&m, 150, 30, 2).unwrap();
        let mut hit = [false; 3];
        for r in reps.matrix().rows() {
            let nearest = (0..3)
                .min_by(|&a, &b| {
                    let da = (r[0] - THREE[a][0]).powi(2) + (r[1] - THREE[a][1]).powi(2);
                    let db = (r[0] - THREE[b][0]).powi(2) + (r[1] - THREE[b][1]).powi(2);
                    da.total_cmp(&db)
                })
                .unwrap();
            hit[nearest] = true;
        }
        assert_eq!(hit, [true; 3]);
    }

    #[test]
    fn affinity_entries_and_weights() {
        let (m, _) = blobs(&THREE, 50, 0.5, 3);
        let reps = hybrid_sample(&m, 100, 20, 3).unwrap();
        let a = build_affinity(&m, &reps, 5, HnswParams::default(), 3).unwrap();
        assert_eq!(a.nnz(), 5 * 150);
        assert!(a.sigma() > 0.0);
        for i in 0..a.n_rows() {
            let (cols, w) = a.row(i);
            assert_eq!(cols.len(), 5);
            assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
        assert!(matches!(
            build_affinity(&m, &reps, 21, HnswParams::default(), 3),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn coinciding_sample_has_unit_weight() {
        let (m, _) = blobs(&THREE, 20, 0.5, 5);
        let reps_matrix = m.select_samples(&[0, 25, 45]).samples_owned();
        let reps = Representatives::new(reps_matrix, 10).unwrap();
        let a = build_affinity(&m, &reps, 2, HnswParams::default(), 0).unwrap();
        let (cols, w) = a.row(25);
        assert_eq!(cols[0], 1);
        assert_eq!(w[0], 1.0);
    }

    #[test]
    fn equal_distances_give_equal_weights() {
        // one sample at the centre of a square of representatives
        let m = FeatureMatrix::from_samples(ndarray::array![[0.0, 0.0]], Domain::Poc).unwrap();
        let reps = Representatives::new(
            ndarray::array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
            4,
        )
        .unwrap();
        let a = build_affinity(&m, &reps, 4, HnswParams::default(), 0).unwrap();
        let (_, w) = a.row(0);
        assert!(w.iter().all(|&v| v == w[0]));
        assert_eq!(a.sigma(), 1.0);
    }

    #[test]
    fn identity_graph_separates_singletons() {
        let p = 4;
        let a = SparseAffinity::new(p, 1, vec![2, 0, 3, 1], vec![1.0; 4], 1.0).unwrap();
        let e = transfer_cut(&a, 4).unwrap();
        assert!(e.eigenvalues().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let rows = e.row_normalized();
        for i in 0..p {
            for j in 0..i {
                let d: f64 = (&rows.row(i) - &rows.row(j)).mapv(|v| v * v).sum();
                assert!(d > 1.0);
            }
        }
    }

    #[test]
    fn disconnected_components_are_constant() {
        // samples 0..3 link to reps {0,1}, samples 3..6 to reps {2,3}
        let cols = vec![0, 1, 1, 0, 0, 1, 2, 3, 3, 2, 2, 3];
        let weights = vec![1.0, 0.5, 0.9, 0.2, 0.4, 0.4, 1.0, 0.3, 0.7, 0.6, 0.5, 0.5];
        let a = SparseAffinity::new(4, 2, cols, weights, 1.0).unwrap();
        let e = transfer_cut(&a, 2).unwrap();
        assert!((e.eigenvalues()[0] - 1.0).abs() < 1e-12);
        assert!((e.eigenvalues()[1] - 1.0).abs() < 1e-12);
        let rows = e.row_normalized();
        for block in [0..3, 3..6] {
            let first = rows.row(block.start).to_owned();
            for i in block {
                assert!((&rows.row(i) - &first).iter().all(|v| v.abs() < 1e-9));
            }
        }
        let d: f64 = (&rows.row(0) - &rows.row(3)).mapv(|v| v * v).sum();
        assert!(d > 1e-3);
    }

    #[test]
    fn zero_degree_column_is_rejected() {
        let a = SparseAffinity::new(3, 1, vec![0, 1], vec![1.0, 1.0], 1.0).unwrap();
        match transfer_cut(&a, 2) {
            Err(Error::Connectivity(msg)) => assert!(msg.contains("representative 2")),
            other => panic!("unexpected {other:?}"),
        }
        let (pruned, kept) = a.prune_empty_columns();
        assert_eq!(kept, vec![0, 1]);
        assert!(transfer_cut(&pruned, 2).is_ok());
    }

    #[test]
    fn affinity_validation() {
        assert!(SparseAffinity::new(3, 2, vec![0, 0], vec![1.0, 1.0], 1.0).is_err());
        assert!(SparseAffinity::new(3, 1, vec![0], vec![0.0], 1.0).is_err());
        assert!(SparseAffinity::new(3, 1, vec![3], vec![1.0], 1.0).is_err());
        assert!(SparseAffinity::new(3, 2, vec![0, 1, 2], vec![1.0; 3], 1.0).is_err());
    }

    #[test]
    fn column_permutation_preserves_partition() {
        let (m, labels) = blobs(&THREE, 60, 1.0, 9);
        let reps = hybrid_sample(&m, 120, 15, 9).unwrap();
        let a = build_affinity(&m, &reps, 4, HnswParams::default(), 9).unwrap();
        let (a, _) = a.prune_empty_columns();
        let perm: Vec<usize> = (0..a.n_cols()).rev().collect();
        let permuted = SparseAffinity::new(
            a.n_cols(),
            a.k(),
            a.cols.iter().map(|&c| perm[c]).collect(),
            a.weights.clone(),
            a.sigma(),
        )
        .unwrap();
        let cluster = |aff: &SparseAffinity| {
            let rows = transfer_cut(aff, 3).unwrap().row_normalized();
            kmeans(rows.view(), 3, 300, 10, 0).unwrap().assignments
        };
        let x = cluster(&a);
        let y = cluster(&permuted);
        assert_eq!(accuracy(&x, &y).unwrap(), 1.0);
        assert_eq!(accuracy(&labels, &x).unwrap(), 1.0);
    }

    #[test]
    fn three_blobs_are_recovered() {
        let (m, labels) = blobs(&THREE, 1000, 1.0, 11);
        let r = uspec(&m, 3, 1000, 100, 5, 11).unwrap();
        assert_eq!(r.len(), 3000);
        assert_eq!(accuracy(&labels, &r.assignments).unwrap(), 1.0);
        for stage in ["sampling", "affinity", "transfer_cut", "kmeans"] {
            assert!(r.timing.contains_key(stage));
        }
    }

    #[test]
    fn concentric_rings_beat_kmeans() {
        let (m, labels) = rings(1000, 12);
        let r = uspec(&m, 2, 1000, 200, 5, 12).unwrap();
        assert!(accuracy(&labels, &r.assignments).unwrap() >= 0.98);
        let direct = kmeans(m.samples(), 2, 300, 10, 12).unwrap();
        assert!(accuracy(&labels, &direct.assignments).unwrap() <= 0.6);
    }

    #[test]
    fn deterministic_given_seed() {
        let (m, _) = blobs(&THREE, 100, 2.0, 13);
        let a = uspec(&m, 3, 200, 30, 5, 7).unwrap();
        let b = uspec(&m, 3, 200, 30, 5, 7).unwrap();
        assert_eq!(a.assignments, b.assignments);
    }
}
