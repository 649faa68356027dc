//! Fixtures shared by the benchmarks.

use pif_core::datagen::{generate, LabeledDataset, SyntheticName, SyntheticSpec};
use pif_core::embedding::{embed_points, EmbeddingConfig, PreferenceMatrix};
use pif_core::geometry::ModelFamily;

/// A stair dataset and its continuous preference embedding with
/// `models_per_point · n` models.
pub fn stair_embedding(models_per_point: usize, seed: u64) -> (LabeledDataset, PreferenceMatrix) {
    let data = generate(&SyntheticSpec::new(SyntheticName::Stair3, seed)).expect("valid spec");
    let mut cfg = EmbeddingConfig::new(ModelFamily::Line2D, models_per_point * data.len(), data.noise);
    cfg.seed = seed;
    let (_, prefs) = embed_points(&data.points, &cfg).expect("embedding");
    (data, prefs)
}
