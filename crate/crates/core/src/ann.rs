//! Hierarchical Navigable Small World index for Euclidean k-NN search, and
//! the exact full-scan search it is checked against.
//!
//! Layer assignment is geometric with multiplier `1/ln M`. Neighbors are
//! chosen with the diversity heuristic (a candidate is kept only if it is
//! closer to the base point than to every neighbor already kept); pruned
//! candidates are discarded. Edges are kept symmetric: when a node drops a
//! neighbor while shrinking its list, the reverse edge is removed as well,
//! unless that would leave the neighbor with no edge on that layer.
//!
//! Distances are squared internally and square-rooted only in
//! [`NeighborList`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_M: usize = 16;
pub const DEFAULT_EF_CONSTRUCTION: usize = 200;
pub const DEFAULT_EF_SEARCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HnswParams {
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            m: DEFAULT_M,
            ef_construction: DEFAULT_EF_CONSTRUCTION,
            ef_search: DEFAULT_EF_SEARCH,
        }
    }
}

/// k nearest neighbors, closest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub ids: Vec<usize>,
    /// Euclidean distances, non-decreasing.
    pub distances: Vec<f64>,
    /// Set when fewer than `k` points were available.
    pub truncated: bool,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        for (lane, slot) in acc.iter_mut().enumerate() {
            let d = a[i + lane] - b[i + lane];
            *slot += d * d;
        }
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        let d = a[i] - b[i];
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    id: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
pub struct AnnIndex {
    dim: usize,
    points: Vec<f64>,
    /// `links[node][level]`, for levels `0..=level(node)`.
    links: Vec<Vec<Vec<u32>>>,
    entry: Option<u32>,
    max_level: usize,
    m: usize,
    ef_construction: usize,
}

impl AnnIndex {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self, level: usize) -> usize {
        if level == 0 {
            2 * self.m
        } else {
            self.m
        }
    }

    pub fn entry_point(&self) -> Option<usize> {
        self.entry.map(|e| e as usize)
    }

    pub fn top_level(&self) -> usize {
        self.max_level
    }

    /// Highest layer containing `node`.
    pub fn level(&self, node: usize) -> usize {
        self.links[node].len() - 1
    }

    pub fn neighbors(&self, node: usize, level: usize) -> &[u32] {
        self.links[node].get(level).map_or(&[], |l| &l[..])
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.points[id * self.dim..(id + 1) * self.dim]
    }

    fn dist_to(&self, q: &[f64], id: u32) -> f64 {
        squared_distance(q, self.point(id as usize))
    }

    /// Beam search on one layer; result sorted ascending.
    fn search_layer(&self, q: &[f64], entry: &[Candidate], ef: usize, level: usize) -> Vec<Candidate> {
        let mut visited = vec![false; self.len()];
        let mut candidates: BinaryHeap<std::cmp::Reverse<Candidate>> = BinaryHeap::new();
        let mut found: BinaryHeap<Candidate> = BinaryHeap::new();
        for &c in entry {
            if !visited[c.id as usize] {
                visited[c.id as usize] = true;
                candidates.push(std::cmp::Reverse(c));
                found.push(c);
            }
        }
        while found.len() > ef {
            found.pop();
        }
        while let Some(std::cmp::Reverse(c)) = candidates.pop() {
            let worst = found.peek().map_or(f64::INFINITY, |f| f.dist);
            if c.dist > worst && found.len() >= ef {
                break;
            }
            for &nb in self.neighbors(c.id as usize, level) {
                if visited[nb as usize] {
                    continue;
                }
                visited[nb as usize] = true;
                let d = self.dist_to(q, nb);
                let worst = found.peek().map_or(f64::INFINITY, |f| f.dist);
                if found.len() < ef || d < worst {
                    let cand = Candidate { dist: d, id: nb };
                    candidates.push(std::cmp::Reverse(cand));
                    found.push(cand);
                    if found.len() > ef {
                        found.pop();
                    }
                }
            }
        }
        found.into_sorted_vec()
    }

    /// Diversity heuristic over candidates sorted by distance to the base.
    fn select_neighbors(&self, sorted: &[Candidate], max: usize) -> Vec<Candidate> {
        let mut kept: Vec<Candidate> = Vec::with_capacity(max);
        for &c in sorted {
            if kept.len() >= max {
                break;
            }
            let p = self.point(c.id as usize);
            if kept.iter().all(|r| squared_distance(p, self.point(r.id as usize)) > c.dist) {
                kept.push(c);
            }
        }
        kept
    }

    fn shrink(&mut self, node: u32, level: usize) {
        let max = self.max_degree(level);
        let base = self.point(node as usize).to_vec();
        let mut cands: Vec<Candidate> = self.links[node as usize][level]
            .iter()
            .map(|&id| Candidate {
                dist: self.dist_to(&base, id),
                id,
            })
            .collect();
        cands.sort();
        let mut kept: Vec<u32> = self.select_neighbors(&cands, max).iter().map(|c| c.id).collect();
        let mut dropped = Vec::new();
        for c in &cands {
            if kept.contains(&c.id) {
                continue;
            }
            let sole_link = self.links[c.id as usize][level].len() <= 1;
            if sole_link && kept.len() < max {
                kept.push(c.id);
            } else {
                dropped.push(c.id);
            }
        }
        for x in dropped {
            self.links[x as usize][level].retain(|&y| y != node);
        }
        self.links[node as usize][level] = kept;
    }

    fn insert(&mut self, id: u32, level: usize) {
        let q = self.point(id as usize).to_vec();
        let Some(entry) = self.entry else {
            self.entry = Some(id);
            self.max_level = level;
            return;
        };
        let mut eps = vec![Candidate {
            dist: self.dist_to(&q, entry),
            id: entry,
        }];
        for lc in (level + 1..=self.max_level).rev() {
            eps = self.search_layer(&q, &eps, 1, lc);
        }
        for lc in (0..=level.min(self.max_level)).rev() {
            let found = self.search_layer(&q, &eps, self.ef_construction, lc);
            let chosen = self.select_neighbors(&found, self.m);
            self.links[id as usize][lc] = chosen.iter().map(|c| c.id).collect();
            for c in &chosen {
                self.links[c.id as usize][lc].push(id);
                if self.links[c.id as usize][lc].len() > self.max_degree(lc) {
                    self.shrink(c.id, lc);
                }
            }
            eps = found;
        }
        if level > self.max_level {
            self.entry = Some(id);
            self.max_level = level;
        }
    }

    /// Approximate `k` nearest neighbors of `query`. The level-0 beam width
    /// is `max(ef_search, k)`.
    pub fn query(&self, query: &[f64], k: usize, ef_search: usize) -> Result<NeighborList> {
        if query.len() != self.dim {
            return Err(Error::Parameter(format!(
                "query has dimension {}, index {}",
                query.len(),
                self.dim
            )));
        }
        let Some(entry) = self.entry else {
            return Ok(NeighborList {
                ids: vec![],
                distances: vec![],
                truncated: k > 0,
            });
        };
        let mut eps = vec![Candidate {
            dist: self.dist_to(query, entry),
            id: entry,
        }];
        for lc in (1..=self.max_level).rev() {
            eps = self.search_layer(query, &eps, 1, lc);
        }
        let found = self.search_layer(query, &eps, ef_search.max(k), 0);
        let take = k.min(found.len());
        Ok(NeighborList {
            ids: found[..take].iter().map(|c| c.id as usize).collect(),
            distances: found[..take].iter().map(|c| c.dist.sqrt()).collect(),
            truncated: k > self.len(),
        })
    }
}

/// Builds an HNSW index over `points` (all of equal length).
pub fn build_index<P: AsRef<[f64]>>(points: &[P], m: usize, ef_construction: usize, seed: u64) -> Result<AnnIndex> {
    if m < 2 {
        return Err(Error::Parameter(format!("HNSW needs M >= 2, got {m}")));
    }
    if ef_construction == 0 {
        return Err(Error::Parameter("ef_construction must be positive".into()));
    }
    if points.len() > u32::MAX as usize {
        return Err(Error::Parameter("too many points for a u32 node id".into()));
    }
    let dim = points.first().map_or(0, |p| p.as_ref().len());
    let mut flat = Vec::with_capacity(points.len() * dim);
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::Parameter(format!(
                "point {i} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        flat.extend_from_slice(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ml = 1.0 / (m as f64).ln();
    let levels: Vec<usize> = (0..points.len())
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            (-u.ln() * ml).floor() as usize
        })
        .collect();
    let mut index = AnnIndex {
        dim,
        points: flat,
        links: levels.iter().map(|&l| vec![Vec::new(); l + 1]).collect(),
        entry: None,
        max_level: 0,
        m,
        ef_construction,
    };
    for (id, &level) in levels.iter().enumerate() {
        index.insert(id as u32, level);
    }
    Ok(index)
}

pub fn knn_query(index: &AnnIndex, query: &[f64], k: usize, ef_search: usize) -> Result<NeighborList> {
    index.query(query, k, ef_search)
}

/// Exact k-NN by full scan; ties go to the lower id.
pub fn exact_knn<P: AsRef<[f64]>>(points: &[P], query: &[f64], k: usize) -> Result<NeighborList> {
    if k > points.len() {
        return Err(Error::Parameter(format!(
            "k = {k} exceeds the {} available points",
            points.len()
        )));
    }
    let mut all = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != query.len() {
            return Err(Error::Parameter(format!(
                "point {i} has dimension {}, query {}",
                p.len(),
                query.len()
            )));
        }
        all.push((squared_distance(p, query), i));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    Ok(NeighborList {
        ids: all.iter().map(|a| a.1).collect(),
        distances: all.iter().map(|a| a.0.sqrt()).collect(),
        truncated: false,
    })
}
