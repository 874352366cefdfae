//! Lloyd k-means with k-means++ seeding.
//!
//! A cluster that ends an assignment step empty is re-seeded at the point
//! farthest from its current center (taken from a cluster with at least two
//! members). Restarts draw from one seeded ChaCha stream, so results depend
//! only on the input and the seed.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ann::squared_distance;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_N_INIT: usize = 10;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// k×d.
    pub centers: Array2<f64>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned centers.
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after each assignment step of the returned run.
    pub inertia_trace: Vec<f64>,
}

fn row(points: &ArrayView2<f64>, i: usize) -> Vec<f64> {
    points.row(i).to_vec()
}

fn kmeans_pp(points: &ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centers = Array2::zeros((k, points.ncols()));
    let rows: Vec<Vec<f64>> = (0..n).map(|i| row(points, i)).collect();
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = rows.iter().map(|r| squared_distance(r, &rows[first])).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // never land on a zero-weight point through rounding
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&w| w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&points.row(pick));
        for (i, r) in rows.iter().enumerate() {
            let d = squared_distance(r, &rows[pick]);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

struct Assignment {
    labels: Vec<usize>,
    d2: Vec<f64>,
}

fn assign(points: &ArrayView2<f64>, norms: &Array1<f64>, centers: &Array2<f64>) -> Assignment {
    let cross = points.dot(&centers.t());
    let cnorms: Vec<f64> = centers.rows().into_iter().map(|c| c.dot(&c)).collect();
    let mut labels = Vec::with_capacity(points.nrows());
    for (i, r) in cross.rows().into_iter().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, &x) in r.iter().enumerate() {
            let d = norms[i] - 2.0 * x + cnorms[c];
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels.push(best);
    }
    let d2 = labels
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let p = points.row(i);
            let ctr = centers.row(c);
            p.iter().zip(ctr.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
        })
        .collect();
    Assignment { labels, d2 }
}

fn rescue_empty(asg: &mut Assignment, k: usize) {
    let mut counts = vec![0usize; k];
    for &l in &asg.labels {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let donor = (0..asg.labels.len())
            .filter(|&i| counts[asg.labels[i]] > 1)
            .fold(None::<usize>, |best, i| match best {
                Some(b) if asg.d2[b] >= asg.d2[i] => Some(b),
                _ => Some(i),
            });
        if let Some(i) = donor {
            counts[asg.labels[i]] -= 1;
            counts[c] = 1;
            asg.labels[i] = c;
            asg.d2[i] = 0.0;
        }
    }
}

fn means(points: &ArrayView2<f64>, labels: &[usize], previous: &Array2<f64>) -> Array2<f64> {
    let k = previous.nrows();
    let mut sums = Array2::<f64>::zeros(previous.raw_dim());
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        sums.row_mut(l).scaled_add(1.0, &points.row(i));
        counts[l] += 1;
    }
    for (c, mut r) in sums.axis_iter_mut(Axis(0)).enumerate() {
        if counts[c] == 0 {
            r.assign(&previous.row(c));
        } else {
            r /= counts[c] as f64;
        }
    }
    sums
}

fn lloyd(points: &ArrayView2<f64>, norms: &Array1<f64>, mut centers: Array2<f64>, max_iter: usize) -> KMeansResult {
    let k = centers.nrows();
    let mut current = assign(points, norms, &centers);
    let mut trace = vec![current.d2.iter().sum::<f64>()];
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        rescue_empty(&mut current, k);
        centers = means(points, &current.labels, &centers);
        let next = assign(points, norms, &centers);
        trace.push(next.d2.iter().sum());
        let done = next.labels == current.labels;
        current = next;
        if done {
            break;
        }
    }
    KMeansResult {
        centers,
        inertia: current.d2.iter().sum(),
        assignments: current.labels,
        iterations_run: iterations,
        inertia_trace: trace,
    }
}

/// Best of `n_init` k-means++ seeded Lloyd runs over the rows of `points`.
pub fn kmeans(points: ArrayView2<f64>, k: usize, max_iter: usize, n_init: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("k = {k} outside [1, {n}]")));
    }
    if max_iter == 0 || n_init == 0 {
        return Err(Error::Parameter("max_iter and n_init must be positive".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Range("k-means input has non-finite entries".into()));
    }
    let norms: Array1<f64> = points.rows().into_iter().map(|r| r.dot(&r)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..n_init {
        let init = kmeans_pp(&points, k, &mut rng);
        let run = lloyd(&points, &norms, init, max_iter);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("n_init >= 1"))
}
