//! Approximate nearest-neighbor index over descriptors with Gaussian
//! kernel density scoring, plus incremental insertion for online model
//! updates.
//!
//! The index is a kd-tree searched best-bin-first: nodes are visited in
//! order of their minimum possible distance to the query, and search stops
//! once no remaining node can beat the current k-th distance by more than
//! the approximation factor. With `epsilon = 0` the search is exact.

mod kdtree;

use kdtree::KdTree;

use crate::error::{Error, Result};

/// How the KDE exponent treats the neighbor distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// exp(-d / 2h^2) with d the plain L2 distance.
    Unsquared,
    /// exp(-d^2 / 2h^2), the standard Gaussian kernel.
    Squared,
}

/// Bandwidth, neighbor count and exponent convention for KDE scoring.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KdeParams {
    pub h: f64,
    pub k: usize,
    pub norm_mode: NormMode,
}

impl KdeParams {
    pub fn new(h: f64, k: usize, norm_mode: NormMode) -> Result<KdeParams> {
        if !(h > 0.0) {
            return Err(Error::Param(format!("kde bandwidth must be positive, got {h}")));
        }
        if k < 1 {
            return Err(Error::Param("kde k must be >= 1".into()));
        }
        Ok(KdeParams { h, k, norm_mode })
    }

    pub fn default_with_bandwidth(h: f64) -> KdeParams {
        KdeParams {
            h: if h > 0.0 { h } else { 0.25 },
            k: DEFAULT_KDE_K,
            norm_mode: NormMode::Unsquared,
        }
    }
}

pub const DEFAULT_KDE_K: usize = 5;

/// Gaussian KDE over a neighbor distance list:
/// `1/(sqrt(2 pi) h k) * sum_j exp(-d_j / (2 h^2))`, where `d_j` is the
/// distance (unsquared mode) or its square (squared mode).
pub fn kde_score(neighbor_distances: &[f64], params: &KdeParams) -> f64 {
    let k = neighbor_distances.len().max(1) as f64;
    let two_h2 = 2.0 * params.h * params.h;
    let sum: f64 = neighbor_distances
        .iter()
        .map(|&d| {
            let e = match params.norm_mode {
                NormMode::Unsquared => d,
                NormMode::Squared => d * d,
            };
            (-e / two_h2).exp()
        })
        .sum();
    sum / ((2.0 * std::f64::consts::PI).sqrt() * params.h * k)
}

/// Entries below this size are scanned linearly; the tree only pays off
/// beyond it.
const BRUTE_FORCE_LIMIT: usize = 256;
/// Rebuild the tree once inserts exceed this fraction of its size.
const REBUILD_FRACTION: f64 = 1.0;

/// An incrementally updatable nearest-neighbor store. Every entry carries a
/// `u64` payload label.
#[derive(Debug, Clone)]
pub struct AnnIndex {
    dim: usize,
    vectors: Vec<f32>,
    payloads: Vec<u64>,
    tree: Option<KdTree>,
    inserts_since_build: usize,
}

impl AnnIndex {
    pub fn new(dim: usize) -> AnnIndex {
        AnnIndex {
            dim,
            vectors: Vec::new(),
            payloads: Vec::new(),
            tree: None,
            inserts_since_build: 0,
        }
    }

    /// Build from descriptor vectors with payload labels.
    pub fn build(dim: usize, entries: &[(&[f32], u64)]) -> Result<AnnIndex> {
        let mut index = AnnIndex::new(dim);
        for (v, payload) in entries {
            index.insert(v, *payload)?;
        }
        index.rebuild();
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.payloads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payloads.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn payload(&self, i: usize) -> u64 {
        self.payloads[i]
    }

    /// Insert one entry. The tree absorbs it immediately; a full rebalance
    /// happens once enough inserts accumulate.
    pub fn insert(&mut self, v: &[f32], payload: u64) -> Result<usize> {
        if v.len() != self.dim {
            return Err(Error::Dimension(format!(
                "descriptor of dim {} into index of dim {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Param("descriptor must be finite".into()));
        }
        let id = self.len();
        self.vectors.extend_from_slice(v);
        self.payloads.push(payload);
        if let Some(tree) = &mut self.tree {
            tree.insert(&self.vectors, self.dim, id);
            self.inserts_since_build += 1;
            if self.inserts_since_build as f64 > REBUILD_FRACTION * id.max(1) as f64 {
                self.rebuild();
            }
        } else if self.len() > BRUTE_FORCE_LIMIT {
            self.rebuild();
        }
        Ok(id)
    }

    fn rebuild(&mut self) {
        self.inserts_since_build = 0;
        if self.len() > BRUTE_FORCE_LIMIT {
            self.tree = Some(KdTree::build(&self.vectors, self.dim, self.len()));
        } else {
            self.tree = None;
        }
    }

    /// k nearest entries, non-decreasing distance. Every returned distance
    /// is at most `(1 + epsilon)` times the true i-th distance; with
    /// `epsilon = 0` the result is exact.
    pub fn knn(&self, q: &[f32], k: usize, epsilon: f64) -> Result<Vec<(usize, f64)>> {
        self.knn_budgeted(q, k, epsilon, usize::MAX)
    }

    /// Like [`AnnIndex::knn`] but additionally stops after visiting
    /// `max_leaves` tree leaves. The epsilon bound is no longer guaranteed
    /// once the budget binds; detection inner loops use this.
    pub fn knn_budgeted(&self, q: &[f32], k: usize, epsilon: f64, max_leaves: usize) -> Result<Vec<(usize, f64)>> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if k > self.len() {
            return Err(Error::KnnSize { k, size: self.len() });
        }
        if q.len() != self.dim {
            return Err(Error::Dimension(format!(
                "query of dim {} against index of dim {}",
                q.len(),
                self.dim
            )));
        }
        let sq = match &self.tree {
            None => kdtree::brute_force(&self.vectors, self.dim, self.len(), q, k),
            Some(tree) => tree.knn(&self.vectors, self.dim, q, k, epsilon, max_leaves),
        };
        Ok(sq.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect())
    }

    /// KDE appearance score of `q`: density over its k nearest entries.
    /// `k` is capped at the index size.
    pub fn score(&self, q: &[f32], params: &KdeParams, epsilon: f64, max_leaves: usize) -> Result<f64> {
        let k = params.k.min(self.len());
        let neighbors = self.knn_budgeted(q, k, epsilon, max_leaves)?;
        let dists: Vec<f64> = neighbors.iter().map(|&(_, d)| d).collect();
        Ok(kde_score(&dists, params))
    }

    /// Median nearest-neighbor distance over a deterministic sample of
    /// entries; the default bandwidth heuristic.
    pub fn median_neighbor_distance(&self) -> f64 {
        if self.len() < 2 {
            return 0.25;
        }
        let sample = self.len().min(256);
        let step = self.len() / sample;
        let mut dists: Vec<f64> = Vec::with_capacity(sample);
        for s in 0..sample {
            let i = s * step;
            let vi = self.vector(i);
            let mut best = f64::MAX;
            for j in 0..self.len() {
                if j == i {
                    continue;
                }
                let d = crate::features::l2_f64(vi, self.vector(j));
                if d < best {
                    best = d;
                }
            }
            dists.push(best);
        }
        dists.sort_by(f64::total_cmp);
        let m = dists[dists.len() / 2];
        if m > 0.0 {
            m
        } else {
            0.25
        }
    }

    /// Serialize as the `ANNKDE01` container:
    ///
    /// ```text
    /// bytes 0..8   magic "ANNKDE01"
    /// bytes 8..12  u32 LE dimension
    /// bytes 12..16 u32 LE entry count
    /// then count * dim   f32 LE vector components
    /// then count         u64 LE payload labels
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.vectors.len() + 8 * self.payloads.len());
        out.extend_from_slice(b"ANNKDE01");
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for v in &self.vectors {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for p in &self.payloads {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<AnnIndex> {
        if bytes.len() < 16 || &bytes[0..8] != b"ANNKDE01" {
            return Err(Error::Format("bad ANNKDE01 header".into()));
        }
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let count = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let expect = 16 + 4 * dim * count + 8 * count;
        if bytes.len() != expect {
            return Err(Error::Format(format!(
                "ANNKDE01 length {} != expected {expect}",
                bytes.len()
            )));
        }
        let mut vectors = Vec::with_capacity(dim * count);
        let mut off = 16;
        for _ in 0..dim * count {
            vectors.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        let mut payloads = Vec::with_capacity(count);
        for _ in 0..count {
            payloads.push(u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        let mut index = AnnIndex {
            dim,
            vectors,
            payloads,
            tree: None,
            inserts_since_build: 0,
        };
        index.rebuild();
        Ok(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vectors(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..dim).map(|_| rng.gen::<f32>()).collect()).collect()
    }

    fn brute_knn(data: &[Vec<f32>], q: &[f32], k: usize) -> Vec<(usize, f64)> {
        let mut dists: Vec<(usize, f64)> = data
            .iter()
            .enumerate()
            .map(|(i, v)| (i, crate::features::l2_f64(v, q)))
            .collect();
        dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        dists.truncate(k);
        dists
    }

    #[test]
    fn empty_index_query_is_error() {
        let index = AnnIndex::new(8);
        assert!(matches!(index.knn(&[0.0; 8], 1, 0.0), Err(Error::EmptyIndex)));
    }

    #[test]
    fn insert_then_query_self_distance_zero() {
        let mut index = AnnIndex::new(4);
        index.insert(&[0.5, 0.25, 0.75, 0.1], 42).unwrap();
        let r = index.knn(&[0.5, 0.25, 0.75, 0.1], 1, 0.0).unwrap();
        assert_eq!(r[0].0, 0);
        assert!(r[0].1 <= 1e-9);
        assert_eq!(index.payload(0), 42);
    }

    #[test]
    fn exact_search_matches_brute_force() {
        let dim = 16;
        let data = random_vectors(1200, dim, 3);
        let entries: Vec<(&[f32], u64)> = data.iter().map(|v| (v.as_slice(), 0u64)).collect();
        let index = AnnIndex::build(dim, &entries).unwrap();
        assert!(index.tree.is_some(), "tree should engage above the linear limit");
        let queries = random_vectors(50, dim, 4);
        for q in &queries {
            let got = index.knn(q, 5, 0.0).unwrap();
            let want = brute_knn(&data, q, 5);
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g.0, w.0);
                assert!((g.1 - w.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn epsilon_search_within_bound() {
        let dim = 12;
        let data = random_vectors(800, dim, 7);
        let entries: Vec<(&[f32], u64)> = data.iter().map(|v| (v.as_slice(), 0u64)).collect();
        let index = AnnIndex::build(dim, &entries).unwrap();
        for q in &random_vectors(40, dim, 8) {
            let got = index.knn(q, 3, 0.5).unwrap();
            let want = brute_knn(&data, q, 3);
            for (i, g) in got.iter().enumerate() {
                assert!(
                    g.1 <= 1.5 * want[i].1 + 1e-9,
                    "approx {} vs true {}",
                    g.1,
                    want[i].1
                );
            }
            // Distances are non-decreasing.
            for w in got.windows(2) {
                assert!(w[0].1 <= w[1].1 + 1e-12);
            }
        }
    }

    #[test]
    fn k_equals_size_returns_all() {
        let data = random_vectors(10, 4, 1);
        let entries: Vec<(&[f32], u64)> = data.iter().map(|v| (v.as_slice(), 0u64)).collect();
        let index = AnnIndex::build(4, &entries).unwrap();
        let r = index.knn(&data[0], 10, 0.0).unwrap();
        assert_eq!(r.len(), 10);
        assert!(matches!(
            index.knn(&data[0], 11, 0.0),
            Err(Error::KnnSize { k: 11, size: 10 })
        ));
    }

    #[test]
    fn insertion_consistent_with_fresh_build() {
        let dim = 8;
        let data = random_vectors(600, dim, 9);
        let mut incremental = AnnIndex::new(dim);
        for (i, v) in data.iter().enumerate() {
            incremental.insert(v, i as u64).unwrap();
        }
        let entries: Vec<(&[f32], u64)> = data
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_slice(), i as u64))
            .collect();
        let fresh = AnnIndex::build(dim, &entries).unwrap();
        for q in &random_vectors(30, dim, 10) {
            let a = incremental.knn(q, 4, 0.0).unwrap();
            let b = fresh.knn(q, 4, 0.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn kde_exact_values() {
        // Single neighbor at distance 0: 1 / (sqrt(2 pi) h).
        let params = KdeParams::new(0.7, 1, NormMode::Unsquared).unwrap();
        let got = kde_score(&[0.0], &params);
        let want = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * 0.7);
        assert!((got - want).abs() < 1e-15);

        // k=2, distances {0, 2 h^2 ln 2} in unsquared mode:
        // (1/(sqrt(2 pi) h 2)) * (1 + 0.5).
        let h = 0.9;
        let params = KdeParams::new(h, 2, NormMode::Unsquared).unwrap();
        let d = 2.0 * h * h * std::f64::consts::LN_2;
        let got = kde_score(&[0.0, d], &params);
        let want = 1.5 / ((2.0 * std::f64::consts::PI).sqrt() * h * 2.0);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn kde_monotone_in_distance() {
        let params = KdeParams::new(0.5, 3, NormMode::Unsquared).unwrap();
        let mut last = f64::MAX;
        for d in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let s = kde_score(&[d, 0.2, 0.4], &params);
            assert!(s <= last);
            last = s;
        }
    }

    #[test]
    fn squared_mode_differs_from_unsquared() {
        let pu = KdeParams::new(0.5, 1, NormMode::Unsquared).unwrap();
        let ps = KdeParams::new(0.5, 1, NormMode::Squared).unwrap();
        let d = 0.3;
        assert!((kde_score(&[d], &pu) - kde_score(&[d], &ps)).abs() > 1e-6);
        // At d = 1 both exponents agree.
        assert!((kde_score(&[1.0], &pu) - kde_score(&[1.0], &ps)).abs() < 1e-15);
    }

    #[test]
    fn serialization_round_trip_and_layout() {
        let data = random_vectors(5, 3, 11);
        let entries: Vec<(&[f32], u64)> = data
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_slice(), (i * 10) as u64))
            .collect();
        let index = AnnIndex::build(3, &entries).unwrap();
        let bytes = index.to_bytes();
        assert_eq!(&bytes[0..8], b"ANNKDE01");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 5);
        assert_eq!(bytes.len(), 16 + 4 * 15 + 8 * 5);
        let back = AnnIndex::from_bytes(&bytes).unwrap();
        assert_eq!(back.len(), 5);
        assert_eq!(back.payload(2), 20);
        let q = &data[2];
        assert_eq!(back.knn(q, 1, 0.0).unwrap()[0].0, 2);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let mut index = AnnIndex::new(4);
        assert!(index.insert(&[0.0; 3], 0).is_err());
        index.insert(&[0.0; 4], 0).unwrap();
        assert!(index.knn(&[0.0; 5], 1, 0.0).is_err());
    }
}
