//! Clustering accuracy under the best one-to-one label matching, and
//! normalized mutual information with arithmetic-mean normalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-sample cluster ids plus per-stage wall-clock seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    pub n_clusters: usize,
    pub timing: BTreeMap<String, f64>,
}

impl ClusterResult {
    pub fn new(assignments: Vec<usize>, n_clusters: usize) -> Result<Self> {
        if let Some(bad) = assignments.iter().find(|&&a| a >= n_clusters) {
            return Err(Error::Range(format!("cluster id {bad} outside [0,{n_clusters})")));
        }
        Ok(Self {
            assignments,
            n_clusters,
            timing: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// `sample,cluster` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,cluster\n");
        for (i, c) in self.assignments.iter().enumerate() {
            out.push_str(&format!("{i},{c}\n"));
        }
        out
    }
}

fn check_pair(y: &[usize], y_hat: &[usize]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::Parameter(format!(
            "label vectors differ in length: {} vs {}",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Parameter("label vectors are empty".into()));
    }
    Ok(())
}

/// Maps arbitrary label values onto `0..distinct`.
fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

/// Contingency table, rows indexed by `y`, columns by `y_hat`.
fn contingency(y: &[usize], y_hat: &[usize]) -> Vec<Vec<usize>> {
    let (a, na) = densify(y);
    let (b, nb) = densify(y_hat);
    let mut table = vec![vec![0usize; nb]; na];
    for (i, j) in a.into_iter().zip(b) {
        table[i][j] += 1;
    }
    table
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with row/column potentials). Returns `col_of_row`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        if row_of_col[j] > 0 {
            col_of_row[row_of_col[j] - 1] = j - 1;
        }
    }
    col_of_row
}

/// Fraction of samples that agree with the ground truth under the best
/// one-to-one matching of predicted clusters to classes. Unequal label
/// counts are handled by padding the contingency table with zeros.
pub fn accuracy(y: &[usize], y_hat: &[usize]) -> Result<f64> {
    check_pair(y, y_hat)?;
    let table = contingency(y, y_hat);
    let size = table.len().max(table[0].len());
    let max = y.len() as f64;
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| max - table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as f64)
                .collect()
        })
        .collect();
    let matching = hungarian(&cost);
    let agree: usize = matching
        .iter()
        .enumerate()
        .map(|(i, &j)| table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0))
        .sum();
    Ok(agree as f64 / y.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let c = c as f64;
            c / n * (n / c).ln()
        })
        .sum()
}

/// `2·I(y, ŷ) / (H(y) + H(ŷ))` from empirical frequencies. Two constant
/// labelings score 1.
///
/// Entropy and mutual information terms share the `(c/n)·ln(ratio)` form so
/// that identical labelings give exactly 1 and a constant labeling exactly 0.
pub fn nmi(y: &[usize], y_hat: &[usize]) -> Result<f64> {
    check_pair(y, y_hat)?;
    let table = contingency(y, y_hat);
    let n = y.len() as f64;
    let rows: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<usize> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let hy = entropy(rows.iter().copied(), n);
    let hc = entropy(cols.iter().copied(), n);
    if hy + hc == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &c) in r.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    Ok((2.0 * mi / (hy + hc)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force ACC over all injective relabelings.
    fn acc_brute(y: &[usize], y_hat: &[usize]) -> f64 {
        let (a, na) = densify(y);
        let (b, nb) = densify(y_hat);
        let size = na.max(nb);
        let mut perm: Vec<usize> = (0..size).collect();
        let mut best = 0;
        fn rec(k: usize, perm: &mut Vec<usize>, a: &[usize], b: &[usize], best: &mut usize) {
            if k == perm.len() {
                let hits = a.iter().zip(b).filter(|(x, y)| perm[**y] == **x).count();
                *best = (*best).max(hits);
                return;
            }
            for i in k..perm.len() {
                perm.swap(k, i);
                rec(k + 1, perm, a, b, best);
                perm.swap(k, i);
            }
        }
        rec(0, &mut perm, &a, &b, &mut best);
        best as f64 / y.len() as f64
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2, 1], &[0, 1, 2, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1, 1], &[1, 0, 0]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.5);
        assert_eq!(acc_brute(&[0, 0, 1, 1], &[0, 1, 0, 1]), 0.5);
        // more clusters than classes
        assert_eq!(accuracy(&[0, 0, 0, 1], &[0, 1, 2, 3]).unwrap(), 0.5);
    }

    #[test]
    fn nmi_examples() {
        assert_eq!(nmi(&[0, 1, 2, 0], &[0, 1, 2, 0]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 1, 1, 0], &[3, 3, 3, 3]).unwrap(), 0.0);
        assert!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().abs() < 1e-15);
        assert_eq!(nmi(&[2, 2], &[5, 5]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn nmi_extremes_are_exact(y in labels(9, 2..300)) {
            prop_assume!(y.iter().any(|&v| v != y[0]));
            prop_assert_eq!(nmi(&y, &y).unwrap(), 1.0);
            prop_assert_eq!(nmi(&y, &vec![4; y.len()]).unwrap(), 0.0);
        }
    }

    #[test]
    fn nmi_hand_computed() {
        // y = (0,0,1,1), ŷ = (0,0,0,1); joint counts {00:2, 10:1, 11:1}
        let n = 4.0f64;
        let mi = (2.0 / n) * ((2.0 * n) / (2.0 * 3.0)).ln()
            + (1.0 / n) * ((1.0 * n) / (2.0 * 3.0)).ln()
            + (1.0 / n) * ((1.0 * n) / (2.0 * 1.0)).ln();
        let hy = 2.0f64.ln();
        let hc = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        let want = 2.0 * mi / (hy + hc);
        assert!((nmi(&[0, 0, 1, 1], &[0, 0, 0, 1]).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn length_errors() {
        assert!(matches!(accuracy(&[0, 1], &[0]), Err(Error::Parameter(_))));
        assert!(matches!(nmi(&[], &[]), Err(Error::Parameter(_))));
    }

    #[test]
    fn hungarian_small() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let m = hungarian(&cost);
        let total: f64 = m.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn cluster_result_csv() {
        let r = ClusterResult::new(vec![1, 0, 1], 2).unwrap();
        assert_eq!(r.to_csv(), "sample,cluster\n0,1\n1,0\n2,1\n");
        assert!(ClusterResult::new(vec![2], 2).is_err());
    }

    fn labels(max: usize, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0..max, len)
    }

    proptest! {
        #[test]
        fn hungarian_matches_brute_force(
            (y, y_hat) in (1usize..40).prop_flat_map(|n| (labels(6, n..n + 1), labels(6, n..n + 1)))
        ) {
            let fast = accuracy(&y, &y_hat).unwrap();
            prop_assert!((fast - acc_brute(&y, &y_hat)).abs() < 1e-12);
        }

        #[test]
        fn bounded_and_symmetric(
            (y, y_hat) in (1usize..60).prop_flat_map(|n| (labels(8, n..n + 1), labels(8, n..n + 1)))
        ) {
            let a = accuracy(&y, &y_hat).unwrap();
            let m = nmi(&y, &y_hat).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((0.0..=1.0).contains(&m));
            prop_assert!((m - nmi(&y_hat, &y).unwrap()).abs() <= 1e-12);
        }

        #[test]
        fn invariant_under_relabeling(
            (y, y_hat) in (1usize..60).prop_flat_map(|n| (labels(7, n..n + 1), labels(7, n..n + 1))),
            perm in Just((0..7usize).collect::<Vec<_>>()).prop_shuffle()
        ) {
            let relabeled: Vec<usize> = y_hat.iter().map(|&c| perm[c]).collect();
            prop_assert_eq!(accuracy(&y, &y_hat).unwrap(), accuracy(&y, &relabeled).unwrap());
            prop_assert!((nmi(&y, &y_hat).unwrap() - nmi(&y, &relabeled).unwrap()).abs() <= 1e-12);
        }
    }
}
