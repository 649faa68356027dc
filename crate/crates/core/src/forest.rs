//! Ensemble protocol shared by every isolation-tree species: subsampling,
//! depth limit, path-length normalization and anomaly scores.

use rand::seq::index;
use rayon::prelude::*;

use crate::distances::DistanceKind;
use crate::error::{PifError, Result};
use crate::rng::{rng_from_seed, substream, PifRng};
use crate::sparse::{SparseRows, SparseVec};

/// Euler–Mascheroni constant as used by the harmonic-number approximation.
pub const EULER_GAMMA: f64 = 0.577_215_664_9;

/// Average path length of an unsuccessful search in a binary search tree of
/// `n` keys, used to normalize depths.
///
/// The binary formula is used for every branching factor; it only rescales
/// scores by a per-forest constant and leaves their ranking unchanged.
pub fn adjustment_c(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * ((n - 1.0).ln() + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

/// `ceil(log_b(psi))`, computed exactly on integers.
pub fn depth_limit(psi: usize, b: usize) -> usize {
    assert!(b >= 2, "branching factor must be at least 2");
    let (mut level, mut reach) = (0, 1usize);
    while reach < psi {
        reach = reach.saturating_mul(b);
        level += 1;
    }
    level
}

/// `2^(-mean / c)`; a forest whose normalizer is zero (a single training
/// point) scores everything `0.5`.
pub fn anomaly_score(mean_path: f64, c_psi: f64) -> f64 {
    if c_psi <= 0.0 {
        0.5
    } else {
        (-mean_path / c_psi).exp2()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub num_trees: usize,
    pub subsample_size: usize,
    pub branching: usize,
    /// Split distance of Voronoi trees; hashing trees always follow Ruzicka.
    pub distance: DistanceKind,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            num_trees: 100,
            subsample_size: 256,
            branching: 2,
            distance: DistanceKind::Tanimoto,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_trees == 0 {
            return Err(PifError::InvalidConfig("number of trees must be positive".into()));
        }
        if self.subsample_size == 0 {
            return Err(PifError::InvalidConfig("subsample size must be positive".into()));
        }
        if self.branching < 2 {
            return Err(PifError::InvalidConfig(format!(
                "branching factor must be at least 2, got {}",
                self.branching
            )));
        }
        if self.branching > self.subsample_size {
            return Err(PifError::InvalidConfig(format!(
                "branching factor {} exceeds subsample size {}",
                self.branching, self.subsample_size
            )));
        }
        Ok(())
    }
}

/// Work counters collected while building a forest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Distance evaluations (Voronoi) or hash evaluations (hashing trees)
    /// spent on splits.
    pub split_ops: u64,
    pub internal_nodes: u64,
    pub external_nodes: u64,
    /// Vectors whose hash found no set bit and went to the reserved bin.
    pub empty_hashes: u64,
}

impl BuildStats {
    pub fn merge(&mut self, other: &BuildStats) {
        self.split_ops += other.split_ops;
        self.internal_nodes += other.internal_nodes;
        self.external_nodes += other.external_nodes;
        self.empty_hashes += other.empty_hashes;
    }
}

/// A tree that can report the depth at which a vector is isolated.
pub trait IsolationTree: Send + Sync {
    /// Leaf depth plus `adjustment_c(leaf size)`.
    fn path_length(&self, v: SparseVec<'_>) -> f64;
}

#[derive(Debug, Clone)]
pub struct Forest<T> {
    pub trees: Vec<T>,
    pub config: ForestConfig,
    /// Normalizer `c(min(ψ, n))`.
    pub c_psi: f64,
    pub depth_limit: usize,
    /// Vectors each tree was trained on.
    pub tree_sample_size: usize,
    pub stats: BuildStats,
}

impl<T: IsolationTree> Forest<T> {
    /// Builds `cfg.num_trees` trees, each on a subsample drawn without
    /// replacement. Tree `k` draws from its own stream keyed by `k`, so the
    /// result does not depend on how the trees are scheduled.
    pub fn build<F>(rows: &SparseRows, cfg: &ForestConfig, build_tree: F) -> Result<Self>
    where
        F: Fn(&[SparseVec<'_>], usize, &mut PifRng, &mut BuildStats) -> T + Sync,
        T: Send,
    {
        cfg.validate()?;
        let n = rows.n_rows();
        if n == 0 {
            return Err(PifError::InsufficientPoints { needed: 1, got: 0 });
        }
        let psi = cfg.subsample_size.min(n);
        let limit = depth_limit(psi, cfg.branching);
        let built: Vec<(T, BuildStats)> = (0..cfg.num_trees)
            .into_par_iter()
            .map(|k| {
                let mut rng = rng_from_seed(substream(cfg.seed, k as u64));
                let sample: Vec<SparseVec<'_>> = index::sample(&mut rng, n, psi)
                    .into_iter()
                    .map(|i| rows.row(i))
                    .collect();
                let mut stats = BuildStats::default();
                let tree = build_tree(&sample, limit, &mut rng, &mut stats);
                (tree, stats)
            })
            .collect();
        let mut stats = BuildStats::default();
        let mut trees = Vec::with_capacity(built.len());
        for (t, s) in built {
            stats.merge(&s);
            trees.push(t);
        }
        Ok(Forest {
            trees,
            config: cfg.clone(),
            c_psi: adjustment_c(psi),
            depth_limit: limit,
            tree_sample_size: psi,
            stats,
        })
    }

    /// Mean path length of `v` over all trees.
    pub fn mean_path_length(&self, v: SparseVec<'_>) -> f64 {
        self.trees.iter().map(|t| t.path_length(v)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn score_one(&self, v: SparseVec<'_>) -> f64 {
        anomaly_score(self.mean_path_length(v), self.c_psi)
    }

    /// Anomaly score of every row.
    pub fn score(&self, rows: &SparseRows) -> Vec<f64> {
        (0..rows.n_rows())
            .into_par_iter()
            .map(|i| self.score_one(rows.row(i)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(n: usize) -> f64 {
        (1..=n).map(|i| 1.0 / i as f64).sum()
    }

    #[test]
    fn adjustment_examples() {
        assert_eq!(adjustment_c(0), 0.0);
        assert_eq!(adjustment_c(1), 0.0);
        assert_eq!(adjustment_c(2), 1.0);
        let c = adjustment_c(256);
        assert!((c - 10.2445).abs() < 5e-4, "{c}");
        // The approximation tracks the exact harmonic form closely.
        let exact = 2.0 * harmonic(255) - 2.0 * 255.0 / 256.0;
        assert!((harmonic(255) - 6.120_438_7).abs() < 1e-6);
        assert!((c - exact).abs() < 5e-3);
    }

    #[test]
    fn depth_limits() {
        assert_eq!(depth_limit(256, 2), 8);
        assert_eq!(depth_limit(256, 3), 6);
        assert_eq!(depth_limit(256, 16), 2);
        assert_eq!(depth_limit(256, 256), 1);
        assert_eq!(depth_limit(1, 2), 0);
        assert_eq!(depth_limit(257, 2), 9);
    }

    #[test]
    fn score_law() {
        assert_eq!(anomaly_score(10.2445, 10.2445), 0.5);
        assert!(anomaly_score(1e-9, 10.0) > 0.999_999);
        assert!(anomaly_score(3.0, 10.0) > anomaly_score(4.0, 10.0));
        assert_eq!(anomaly_score(0.0, 0.0), 0.5);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ForestConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.branching = 1;
        assert!(cfg.validate().is_err());
        cfg.branching = 300;
        assert!(cfg.validate().is_err());
        cfg.branching = 2;
        cfg.num_trees = 0;
        assert!(cfg.validate().is_err());
    }
}
