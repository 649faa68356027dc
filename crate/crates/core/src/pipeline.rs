//! End-to-end detector: embedding followed by an isolation forest.

use std::fmt;
use std::str::FromStr;

use crate::embedding::{embed_points, EmbeddingConfig, PreferenceMatrix};
use crate::error::{PifError, Result};
use crate::forest::{BuildStats, ForestConfig};
use crate::geometry::Point;
use crate::ruzhash::build_ruzhash_forest;
use crate::sparse::SparseRows;
use crate::voronoi::build_forest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeSpecies {
    /// Nearest-seed splits under `ForestConfig::distance`.
    Voronoi,
    /// Hash splits; always Ruzicka.
    RuzHash,
}

impl fmt::Display for TreeSpecies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TreeSpecies::Voronoi => "voronoi",
            TreeSpecies::RuzHash => "ruzhash",
        })
    }
}

impl FromStr for TreeSpecies {
    type Err = PifError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "voronoi" => Ok(TreeSpecies::Voronoi),
            "ruzhash" => Ok(TreeSpecies::RuzHash),
            _ => Err(PifError::UnknownName {
                what: "tree species",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PifConfig {
    pub embedding: EmbeddingConfig,
    pub forest: ForestConfig,
    pub species: TreeSpecies,
}

impl PifConfig {
    /// Default forest (`t = 100`, `ψ = 256`, `b = 2`, Tanimoto Voronoi trees)
    /// seeded like the embedding.
    pub fn new(embedding: EmbeddingConfig) -> Self {
        let forest = ForestConfig {
            seed: embedding.seed,
            ..ForestConfig::default()
        };
        PifConfig {
            embedding,
            forest,
            species: TreeSpecies::Voronoi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestOutput {
    pub scores: Vec<f64>,
    pub stats: BuildStats,
    pub c_psi: f64,
    pub depth_limit: usize,
    pub tree_sample_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PifOutput {
    /// Anomaly score per input point, in input order.
    pub scores: Vec<f64>,
    pub stats: BuildStats,
    pub c_psi: f64,
    pub depth_limit: usize,
    pub tree_sample_size: usize,
    pub preferences: PreferenceMatrix,
}

/// Trains a forest of `species` on `rows` and scores every row.
pub fn score_rows(rows: &SparseRows, forest: &ForestConfig, species: TreeSpecies) -> Result<ForestOutput> {
    Ok(match species {
        TreeSpecies::Voronoi => {
            let f = build_forest(rows, forest)?;
            ForestOutput {
                scores: f.score(rows),
                stats: f.stats,
                c_psi: f.c_psi,
                depth_limit: f.depth_limit,
                tree_sample_size: f.tree_sample_size,
            }
        }
        TreeSpecies::RuzHash => {
            let f = build_ruzhash_forest(rows, forest)?;
            ForestOutput {
                scores: f.score(rows),
                stats: f.stats,
                c_psi: f.c_psi,
                depth_limit: f.depth_limit,
                tree_sample_size: f.tree_sample_size,
            }
        }
    })
}

/// Embeds `points` and scores them.
pub fn run_pif(points: &[Point], cfg: &PifConfig) -> Result<PifOutput> {
    let (_, preferences) = embed_points(points, &cfg.embedding)?;
    let out = score_rows(preferences.rows(), &cfg.forest, cfg.species)?;
    Ok(PifOutput {
        scores: out.scores,
        stats: out.stats,
        c_psi: out.c_psi,
        depth_limit: out.depth_limit,
        tree_sample_size: out.tree_sample_size,
        preferences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelFamily;

    fn noisy_line() -> Vec<Point> {
        let mut pts: Vec<Point> = (0..60).map(|i| Point::new(vec![i as f64 / 60.0, 0.0])).collect();
        pts.push(Point::new(vec![0.5, 0.4]));
        pts
    }

    #[test]
    fn off_line_point_scores_highest() {
        let pts = noisy_line();
        for species in [TreeSpecies::Voronoi, TreeSpecies::RuzHash] {
            let mut cfg = PifConfig::new(EmbeddingConfig::new(ModelFamily::Line2D, 300, 0.01));
            cfg.species = species;
            cfg.forest.num_trees = 50;
            let out = run_pif(&pts, &cfg).unwrap();
            let top = (0..pts.len()).max_by(|&a, &b| out.scores[a].total_cmp(&out.scores[b])).unwrap();
            assert_eq!(top, 60, "{species}");
            assert!(out.scores.iter().all(|s| *s > 0.0 && *s < 1.0));
        }
    }

    #[test]
    fn deterministic() {
        let pts = noisy_line();
        let mut cfg = PifConfig::new(EmbeddingConfig::new(ModelFamily::Line2D, 100, 0.01));
        cfg.forest.num_trees = 10;
        assert_eq!(run_pif(&pts, &cfg).unwrap(), run_pif(&pts, &cfg).unwrap());
    }
}
