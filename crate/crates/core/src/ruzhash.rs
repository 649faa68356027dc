//! Locality-sensitive hashing for the Ruzicka distance and the isolation
//! trees that split on it.
//!
//! A hash draw consists of thresholds `τ ∈ [0,1)^m`, a permutation `π` of
//! `1..=m` and an aggregation table `β ∈ {1..=b}^m`. A vector `p` is binarized
//! coordinate-wise as `p_i > τ_i`; its hash is the smallest `π_i` among the
//! set bits, and its aggregated bin is `β` at that hash. Two vectors collide
//! with probability `1 - d_R(p, q)`, and land in the same aggregated bin with
//! probability `1 + (1 - b)/b · d_R(p, q)`.
//!
//! A vector with no set bit has no hash; it is routed to the reserved
//! aggregated bin `1`.
//!
//! Tree nodes do not store their draw explicitly, which would cost `O(m)`
//! memory per node. Instead a node keeps a 64-bit key from which `τ_j`, a
//! priority for coordinate `j` and `β` are derived by counter-based hashing.
//! Ranking coordinates by priority yields a uniform permutation, so the node
//! hash is distributed exactly like an explicit draw and can be materialized
//! into one on demand (see [`NodeHash::materialize`]).

use std::collections::HashMap;

use rand::{Rng, RngCore};

use crate::error::Result;
use crate::forest::{adjustment_c, BuildStats, Forest, ForestConfig, IsolationTree};
use crate::rng::{mix64, rng_from_seed, unit_f64};
use crate::sparse::{SparseRows, SparseVec};

/// An explicit hash draw. Bins and permutation values are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct HashDraw {
    pub thresholds: Vec<f64>,
    pub permutation: Vec<u32>,
    pub aggregation: Vec<u32>,
}

impl HashDraw {
    /// Samples a draw over `m` coordinates aggregating into `b` bins.
    ///
    /// The permutation is generated by a forward Fisher–Yates pass from a
    /// dedicated stream: step `r` picks the coordinate that receives
    /// permutation value `r + 1` and then its threshold. The aggregation table
    /// comes from a second stream, one entry per bin in order.
    pub fn sample<R: RngCore + ?Sized>(m: usize, b: u32, rng: &mut R) -> Self {
        assert!(b >= 1);
        let mut perm_rng = rng_from_seed(rng.next_u64());
        let mut beta_rng = rng_from_seed(rng.next_u64());
        let mut order: Vec<usize> = (0..m).collect();
        let mut thresholds = vec![0.0; m];
        let mut permutation = vec![0u32; m];
        for r in 0..m {
            let j = r + perm_rng.random_range(0..m - r);
            order.swap(r, j);
            let coord = order[r];
            permutation[coord] = r as u32 + 1;
            thresholds[coord] = perm_rng.random::<f64>();
        }
        let aggregation = (0..m).map(|_| beta_rng.random_range(1..=b)).collect();
        HashDraw {
            thresholds,
            permutation,
            aggregation,
        }
    }

    pub fn dim(&self) -> usize {
        self.thresholds.len()
    }
}

/// Hash of a dense vector: `min{π_i : p_i > τ_i}`, or `None` if no bit is set.
pub fn ruzhash(p: &[f64], thresholds: &[f64], permutation: &[u32]) -> Option<u32> {
    debug_assert_eq!(p.len(), thresholds.len());
    debug_assert_eq!(p.len(), permutation.len());
    p.iter()
        .zip(thresholds)
        .zip(permutation)
        .filter(|((v, t), _)| v > t)
        .map(|(_, &pi)| pi)
        .min()
}

/// Hash of a sparse vector; only stored coordinates can exceed a threshold.
pub fn ruzhash_sparse(p: SparseVec<'_>, thresholds: &[f64], permutation: &[u32]) -> Option<u32> {
    p.iter()
        .filter(|&(i, v)| v > thresholds[i as usize])
        .map(|(i, _)| permutation[i as usize])
        .min()
}

/// Aggregated bin in `1..=b`; vectors without a hash go to bin `1`.
pub fn ruzhash_aggregated(p: &[f64], draw: &HashDraw) -> u32 {
    match ruzhash(p, &draw.thresholds, &draw.permutation) {
        Some(h) => draw.aggregation[h as usize - 1],
        None => 1,
    }
}

pub fn ruzhash_aggregated_sparse(p: SparseVec<'_>, draw: &HashDraw) -> u32 {
    match ruzhash_sparse(p, &draw.thresholds, &draw.permutation) {
        Some(h) => draw.aggregation[h as usize - 1],
        None => 1,
    }
}

/// A draw sampled lazily: permutation values, thresholds and aggregation
/// entries are produced only as far as a hash evaluation needs them. Given
/// the same generator it reproduces [`HashDraw::sample`] exactly.
struct LazyDraw {
    m: usize,
    perm_rng: crate::rng::PifRng,
    beta_rng: crate::rng::PifRng,
    b: u32,
    swapped: HashMap<usize, usize>,
    betas: Vec<u32>,
}

impl LazyDraw {
    fn new<R: RngCore + ?Sized>(m: usize, b: u32, rng: &mut R) -> Self {
        LazyDraw {
            m,
            perm_rng: rng_from_seed(rng.next_u64()),
            beta_rng: rng_from_seed(rng.next_u64()),
            b,
            swapped: HashMap::new(),
            betas: Vec::new(),
        }
    }

    /// Coordinate receiving permutation value `r + 1`, with its threshold.
    fn step(&mut self, r: usize) -> (usize, f64) {
        let j = r + self.perm_rng.random_range(0..self.m - r);
        let at_j = *self.swapped.get(&j).unwrap_or(&j);
        let at_r = *self.swapped.get(&r).unwrap_or(&r);
        self.swapped.insert(j, at_r);
        self.swapped.insert(r, at_j);
        (at_j, self.perm_rng.random::<f64>())
    }

    fn beta(&mut self, bin: u32) -> u32 {
        while self.betas.len() < bin as usize {
            self.betas.push(self.beta_rng.random_range(1..=self.b));
        }
        self.betas[bin as usize - 1]
    }

    /// Hashes of `p` and `q`, walking permutation values in increasing order
    /// until both are known.
    fn hash_pair(&mut self, p: &[f64], q: &[f64]) -> (Option<u32>, Option<u32>) {
        let (mut hp, mut hq) = (None, None);
        for r in 0..self.m {
            let (coord, tau) = self.step(r);
            if hp.is_none() && p[coord] > tau {
                hp = Some(r as u32 + 1);
            }
            if hq.is_none() && q[coord] > tau {
                hq = Some(r as u32 + 1);
            }
            if hp.is_some() && hq.is_some() {
                break;
            }
        }
        (hp, hq)
    }
}

/// Fraction of `draws` independent hash draws under which `p` and `q`
/// collide. Two empty hashes collide; an empty hash never collides with a
/// nonempty one.
pub fn estimate_collision_prob<R: RngCore + ?Sized>(p: &[f64], q: &[f64], draws: usize, rng: &mut R) -> f64 {
    assert_eq!(p.len(), q.len());
    assert!(draws >= 1);
    let hits = (0..draws)
        .filter(|_| {
            let mut d = LazyDraw::new(p.len(), 1, rng);
            let (hp, hq) = d.hash_pair(p, q);
            hp == hq
        })
        .count();
    hits as f64 / draws as f64
}

/// Fraction of `draws` independent draws under which `p` and `q` fall in the
/// same aggregated bin out of `b`.
pub fn estimate_aggregated_collision_prob<R: RngCore + ?Sized>(
    p: &[f64],
    q: &[f64],
    b: u32,
    draws: usize,
    rng: &mut R,
) -> f64 {
    assert_eq!(p.len(), q.len());
    assert!(draws >= 1 && b >= 1);
    let hits = (0..draws)
        .filter(|_| {
            let mut d = LazyDraw::new(p.len(), b, rng);
            let (hp, hq) = d.hash_pair(p, q);
            let bp = hp.map_or(1, |h| d.beta(h));
            let bq = hq.map_or(1, |h| d.beta(h));
            bp == bq
        })
        .count();
    hits as f64 / draws as f64
}

const STREAM_THRESHOLD: u64 = 0;
const STREAM_PRIORITY: u64 = 1;
const STREAM_AGGREGATION: u64 = 2;

/// Per-node hash draw, derived on the fly from a 64-bit key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeHash {
    pub key: u64,
    pub branching: u32,
}

impl NodeHash {
    pub fn sample<R: RngCore + ?Sized>(branching: u32, rng: &mut R) -> Self {
        NodeHash {
            key: rng.next_u64(),
            branching,
        }
    }

    #[inline]
    fn word(&self, coord: u32, stream: u64) -> u64 {
        mix64(self.key ^ mix64(((coord as u64) << 2 | stream).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
    }

    #[inline]
    pub fn threshold(&self, coord: u32) -> f64 {
        unit_f64(self.word(coord, STREAM_THRESHOLD))
    }

    #[inline]
    fn priority(&self, coord: u32) -> (u64, u32) {
        (self.word(coord, STREAM_PRIORITY), coord)
    }

    /// Aggregated bin attached to the hash bin owned by `coord`.
    #[inline]
    pub fn aggregation(&self, coord: u32) -> u32 {
        let w = self.word(coord, STREAM_AGGREGATION);
        1 + ((w as u128 * self.branching as u128) >> 64) as u32
    }

    /// Coordinate that wins the hash of `v`, if any bit is set.
    pub fn winner(&self, v: SparseVec<'_>) -> Option<u32> {
        v.iter()
            .filter(|&(i, x)| x > self.threshold(i))
            .map(|(i, _)| self.priority(i))
            .min()
            .map(|(_, i)| i)
    }

    /// Aggregated bin in `1..=b`, and whether the hash was empty.
    pub fn bin(&self, v: SparseVec<'_>) -> (u32, bool) {
        match self.winner(v) {
            Some(i) => (self.aggregation(i), false),
            None => (1, true),
        }
    }

    /// The explicit draw this node hash stands for, over `m` coordinates.
    pub fn materialize(&self, m: usize) -> HashDraw {
        let thresholds: Vec<f64> = (0..m as u32).map(|j| self.threshold(j)).collect();
        let mut ranked: Vec<(u64, u32)> = (0..m as u32).map(|j| self.priority(j)).collect();
        ranked.sort_unstable();
        let mut permutation = vec![0u32; m];
        let mut aggregation = vec![0u32; m];
        for (rank, &(_, j)) in ranked.iter().enumerate() {
            permutation[j as usize] = rank as u32 + 1;
            aggregation[rank] = self.aggregation(j);
        }
        HashDraw {
            thresholds,
            permutation,
            aggregation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuzHashNode {
    Internal {
        hash: NodeHash,
        children: Vec<RuzHashNode>,
    },
    External {
        size: usize,
    },
}

/// Builds one hashing tree on `points`, starting at depth `depth`.
pub fn build_ruzhash_tree<R: RngCore + ?Sized>(
    points: &[SparseVec<'_>],
    depth: usize,
    limit: usize,
    branching: usize,
    rng: &mut R,
) -> RuzHashNode {
    let mut stats = BuildStats::default();
    build_ruzhash_tree_counted(points, depth, limit, branching, rng, &mut stats)
}

pub fn build_ruzhash_tree_counted<R: RngCore + ?Sized>(
    points: &[SparseVec<'_>],
    depth: usize,
    limit: usize,
    branching: usize,
    rng: &mut R,
    stats: &mut BuildStats,
) -> RuzHashNode {
    let members: Vec<usize> = (0..points.len()).collect();
    grow(points, members, depth, limit, branching, rng, stats)
}

fn grow<R: RngCore + ?Sized>(
    points: &[SparseVec<'_>],
    members: Vec<usize>,
    depth: usize,
    limit: usize,
    b: usize,
    rng: &mut R,
    stats: &mut BuildStats,
) -> RuzHashNode {
    if depth >= limit || members.len() < b {
        stats.external_nodes += 1;
        return RuzHashNode::External {
            size: members.len(),
        };
    }
    stats.internal_nodes += 1;
    stats.split_ops += members.len() as u64;
    let hash = NodeHash::sample(b as u32, rng);
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); b];
    for &m in &members {
        let (bin, empty) = hash.bin(points[m]);
        stats.empty_hashes += empty as u64;
        cells[bin as usize - 1].push(m);
    }
    drop(members);
    let children = cells
        .into_iter()
        .map(|cell| grow(points, cell, depth + 1, limit, b, rng, stats))
        .collect();
    RuzHashNode::Internal { hash, children }
}

/// Depth of the leaf reached by `v` plus the adjustment for its size.
pub fn path_length_ruzhash(v: SparseVec<'_>, node: &RuzHashNode, depth: usize) -> f64 {
    let (mut node, mut depth) = (node, depth);
    loop {
        match node {
            RuzHashNode::External { size } => return depth as f64 + adjustment_c(*size),
            RuzHashNode::Internal { hash, children } => {
                node = &children[hash.bin(v).0 as usize - 1];
                depth += 1;
            }
        }
    }
}

impl IsolationTree for RuzHashNode {
    fn path_length(&self, v: SparseVec<'_>) -> f64 {
        path_length_ruzhash(v, self, 0)
    }
}

impl RuzHashNode {
    pub fn leaf_sizes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            match n {
                RuzHashNode::External { size } => out.push(*size),
                RuzHashNode::Internal { children, .. } => stack.extend(children.iter().rev()),
            }
        }
        out
    }

    /// Position, in [`leaf_sizes`](Self::leaf_sizes) order, of the leaf
    /// reached by `v`.
    pub fn leaf_id(&self, v: SparseVec<'_>) -> usize {
        let (mut node, mut id) = (self, 0);
        while let RuzHashNode::Internal { hash, children } = node {
            let c = hash.bin(v).0 as usize - 1;
            id += children[..c].iter().map(|ch| ch.leaf_sizes().len()).sum::<usize>();
            node = &children[c];
        }
        id
    }

    pub fn max_depth(&self) -> usize {
        match self {
            RuzHashNode::External { .. } => 0,
            RuzHashNode::Internal { children, .. } => {
                1 + children.iter().map(RuzHashNode::max_depth).max().unwrap_or(0)
            }
        }
    }
}

pub type RuzHashForest = Forest<RuzHashNode>;

/// Builds a hashing isolation forest; `cfg.distance` is not consulted.
pub fn build_ruzhash_forest(rows: &SparseRows, cfg: &ForestConfig) -> Result<RuzHashForest> {
    Forest::build(rows, cfg, |sample, limit, rng, stats| {
        build_ruzhash_tree_counted(sample, 0, limit, cfg.branching, rng, stats)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::ruzicka;
    use crate::rng::rng_from_seed;
    use crate::sparse::SparseVector;
    use proptest::prelude::*;
    use rand::Rng;

    fn identity(m: usize) -> Vec<u32> {
        (1..=m as u32).collect()
    }

    #[test]
    fn hash_examples() {
        let m = 6;
        assert_eq!(ruzhash(&[1.0; 6], &[0.999; 6], &identity(m)), Some(1));
        let mut e3 = vec![0.0; m];
        e3[2] = 1.0;
        assert_eq!(ruzhash(&e3, &[0.5; 6], &identity(m)), Some(3));
        assert_eq!(ruzhash(&[0.0; 6], &[0.0; 6], &identity(m)), None);
        // Binarization is strict.
        assert_eq!(ruzhash(&[0.5; 6], &[0.5; 6], &identity(m)), None);
    }

    #[test]
    fn aggregation_examples() {
        let draw = HashDraw {
            thresholds: vec![0.5; 5],
            permutation: identity(5),
            aggregation: vec![2, 1, 2, 1, 1],
        };
        assert_eq!(ruzhash_aggregated(&[0.0, 0.0, 0.9, 0.0, 0.0], &draw), 2);
        assert_eq!(ruzhash_aggregated(&[0.0; 5], &draw), 1);
        let one = HashDraw::sample(5, 1, &mut rng_from_seed(0));
        for p in [[0.3, 0.9, 0.1, 0.0, 1.0], [0.0; 5]] {
            assert_eq!(ruzhash_aggregated(&p, &one), 1);
        }
    }

    #[test]
    fn sampled_draw_is_well_formed() {
        let d = HashDraw::sample(50, 4, &mut rng_from_seed(2));
        let mut perm = d.permutation.clone();
        perm.sort_unstable();
        assert_eq!(perm, identity(50));
        assert!(d.thresholds.iter().all(|t| (0.0..1.0).contains(t)));
        assert!(d.aggregation.iter().all(|b| (1..=4).contains(b)));
    }

    #[test]
    fn materialized_node_hash_agrees() {
        let mut rng = rng_from_seed(8);
        for b in [2u32, 3, 7] {
            let node = NodeHash::sample(b, &mut rng);
            let draw = node.materialize(40);
            let mut perm = draw.permutation.clone();
            perm.sort_unstable();
            assert_eq!(perm, identity(40));
            for _ in 0..200 {
                let dense: Vec<f64> = (0..40)
                    .map(|_| if rng.random::<f64>() < 0.2 { rng.random() } else { 0.0 })
                    .collect();
                let sv = SparseVector::from_dense(&dense);
                assert_eq!(node.bin(sv.view()).0, ruzhash_aggregated(&dense, &draw));
                assert_eq!(
                    node.winner(sv.view()).map(|j| draw.permutation[j as usize]),
                    ruzhash(&dense, &draw.thresholds, &draw.permutation)
                );
            }
        }
    }

    /// Full-materialization route for the collision estimators.
    fn collisions_explicit(p: &[f64], q: &[f64], b: u32, draws: usize, seed: u64) -> (f64, f64) {
        let mut rng = rng_from_seed(seed);
        let (mut raw, mut agg) = (0, 0);
        for _ in 0..draws {
            let d = HashDraw::sample(p.len(), b, &mut rng);
            raw += (ruzhash(p, &d.thresholds, &d.permutation) == ruzhash(q, &d.thresholds, &d.permutation)) as usize;
            agg += (ruzhash_aggregated(p, &d) == ruzhash_aggregated(q, &d)) as usize;
        }
        (raw as f64 / draws as f64, agg as f64 / draws as f64)
    }

    #[test]
    fn lazy_estimators_match_explicit_draws() {
        let mut rng = rng_from_seed(21);
        for _ in 0..20 {
            let p: Vec<f64> = (0..30).map(|_| if rng.random::<f64>() < 0.4 { rng.random() } else { 0.0 }).collect();
            let q: Vec<f64> = (0..30).map(|_| if rng.random::<f64>() < 0.4 { rng.random() } else { 0.0 }).collect();
            let seed = rng.random();
            // Raw collisions are independent of the aggregation stream.
            let (raw, agg) = collisions_explicit(&p, &q, 3, 50, seed);
            assert_eq!(raw, estimate_collision_prob(&p, &q, 50, &mut rng_from_seed(seed)));
            assert_eq!(agg, estimate_aggregated_collision_prob(&p, &q, 3, 50, &mut rng_from_seed(seed)));
        }
    }

    #[test]
    fn collision_edge_cases() {
        let mut rng = rng_from_seed(4);
        // A coordinate at 1 keeps the binarized vector nonempty for every τ < 1.
        let p = [0.2, 0.0, 1.0, 0.4];
        assert_eq!(estimate_collision_prob(&p, &p, 37, &mut rng), 1.0);
        assert_eq!(estimate_aggregated_collision_prob(&p, &p, 4, 37, &mut rng), 1.0);
        let q = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(estimate_collision_prob(&p, &q, 200, &mut rng), 0.0);
        assert_eq!(estimate_aggregated_collision_prob(&p, &q, 1, 50, &mut rng), 1.0);
        let z = [0.0; 4];
        assert_eq!(estimate_collision_prob(&z, &z, 10, &mut rng), 1.0);
        assert_eq!(estimate_collision_prob(&z, &p, 100, &mut rng), 0.0);
    }

    #[test]
    fn disjoint_aggregated_rate_is_one_over_b() {
        let mut p = vec![0.0; 100];
        let mut q = vec![0.0; 100];
        for i in 0..50 {
            p[i] = 1.0;
            q[50 + i] = 1.0;
        }
        let rate = estimate_aggregated_collision_prob(&p, &q, 2, 10_000, &mut rng_from_seed(77));
        assert!((rate - 0.5).abs() <= 0.03, "{rate}");
    }

    #[test]
    fn single_pair_follows_ruzicka() {
        let p: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 100.0).collect();
        let q: Vec<f64> = (0..200).map(|i| ((i * 53) % 97) as f64 / 96.0).collect();
        let sp = SparseVector::from_dense(&p);
        let sq = SparseVector::from_dense(&q);
        let target = 1.0 - ruzicka(sp.view(), sq.view());
        let rate = estimate_collision_prob(&p, &q, 20_000, &mut rng_from_seed(3));
        assert!((rate - target).abs() < 0.02, "{rate} vs {target}");
    }

    #[test]
    fn tree_stops_below_branching() {
        let v = [SparseVector::from_dense(&[0.5, 0.5])];
        let views: Vec<_> = v.iter().map(|s| s.view()).collect();
        assert_eq!(
            build_ruzhash_tree(&views, 0, 4, 2, &mut rng_from_seed(0)),
            RuzHashNode::External { size: 1 }
        );
    }

    #[test]
    fn identical_vectors_reach_the_depth_limit() {
        let v = SparseVector::from_dense(&[0.3, 0.9, 0.0, 0.6]);
        let views = vec![v.view(); 20];
        let t = build_ruzhash_tree(&views, 0, 5, 2, &mut rng_from_seed(1));
        assert_eq!(t.max_depth(), 5);
        assert_eq!(path_length_ruzhash(v.view(), &t, 0), 5.0 + adjustment_c(20));
        assert_eq!(t.leaf_sizes().iter().filter(|&&s| s > 0).count(), 1);
    }

    #[test]
    fn single_leaf_path_is_zero() {
        let t = RuzHashNode::External { size: 1 };
        assert_eq!(path_length_ruzhash(SparseVector::default().view(), &t, 0), 0.0);
    }

    #[test]
    fn split_cost_is_independent_of_branching() {
        let mut rng = rng_from_seed(5);
        let mut rows = SparseRows::new(500);
        for _ in 0..256 {
            let dense: Vec<f64> = (0..500).map(|_| if rng.random::<f64>() < 0.1 { rng.random() } else { 0.0 }).collect();
            rows.push_row(SparseVector::from_dense(&dense).view().iter());
        }
        let views: Vec<_> = rows.rows().collect();
        let mut stats = BuildStats::default();
        let _ = build_ruzhash_tree_counted(&views, 0, 1, 2, &mut rng, &mut stats);
        assert_eq!(stats.split_ops, 256);
        let mut stats = BuildStats::default();
        let _ = build_ruzhash_tree_counted(&views, 0, 1, 16, &mut rng, &mut stats);
        assert_eq!(stats.split_ops, 256);
        let mut stats = BuildStats::default();
        let _ = build_ruzhash_tree_counted(&views[..128], 0, 1, 16, &mut rng, &mut stats);
        assert_eq!(stats.split_ops, 128);
    }

    #[test]
    fn empty_rows_are_counted() {
        let rows: Vec<SparseVector> = (0..8).map(|_| SparseVector::default()).collect();
        let views: Vec<_> = rows.iter().map(|s| s.view()).collect();
        let mut stats = BuildStats::default();
        let t = build_ruzhash_tree_counted(&views, 0, 3, 2, &mut rng_from_seed(0), &mut stats);
        assert_eq!(stats.empty_hashes, 8 * 3);
        assert_eq!(path_length_ruzhash(views[0], &t, 0), 3.0 + adjustment_c(8));
    }

    proptest! {
        #[test]
        fn binary_vectors_reduce_to_minhash(
            bits in proptest::collection::vec(any::<bool>(), 1..80),
            seed in any::<u64>(),
        ) {
            let m = bits.len();
            let p: Vec<f64> = bits.iter().map(|&b| b as u8 as f64).collect();
            let d = HashDraw::sample(m, 2, &mut rng_from_seed(seed));
            let minhash = (0..m).filter(|&i| bits[i]).map(|i| d.permutation[i]).min();
            prop_assert_eq!(ruzhash(&p, &d.thresholds, &d.permutation), minhash);
        }

        #[test]
        fn forest_partitions_agree_with_traversal(seed in 0u64..200) {
            let mut rng = rng_from_seed(seed);
            let mut rows = SparseRows::new(25);
            for _ in 0..40 {
                let dense: Vec<f64> = (0..25).map(|_| if rng.random::<f64>() < 0.3 { rng.random() } else { 0.0 }).collect();
                rows.push_row(SparseVector::from_dense(&dense).view().iter());
            }
            let cfg = ForestConfig { num_trees: 3, subsample_size: 40, branching: 3, seed, ..Default::default() };
            let f = build_ruzhash_forest(&rows, &cfg).unwrap();
            for t in &f.trees {
                prop_assert_eq!(t.leaf_sizes().iter().sum::<usize>(), 40);
                prop_assert!(t.max_depth() <= f.depth_limit);
                // Recount leaf occupancy by traversal.
                let mut counts = vec![0usize; t.leaf_sizes().len()];
                for r in rows.rows() {
                    counts[t.leaf_id(r)] += 1;
                }
                prop_assert_eq!(counts, t.leaf_sizes());
            }
        }
    }
}
