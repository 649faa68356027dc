//! Preference isolation forests.
//!
//! Points are embedded into a preference space by sampling a pool of
//! parametric models (lines, circles, planes, ...) on random minimal samples
//! and recording how well every point fits every model. Points that follow
//! the dominant structures share preferences; anomalies end up with sparse,
//! nearly orthogonal preference vectors and are isolated early by random
//! partition trees.
//!
//! Two tree species are provided:
//!
//! * [`voronoi`] trees split on the nearest of `b` random seeds under any
//!   preference distance;
//! * [`ruzhash`] trees split with a locality-sensitive hash for the Ruzicka
//!   distance, which needs no distance computations at all.
//!
//! [`sliding`] runs the detector on half-overlapping windows of a range
//! image with local surface models and averages the window scores.
//!
//! ```
//! use pif_core::prelude::*;
//!
//! let data = generate(&SyntheticSpec::new(SyntheticName::Stair3, 42)).unwrap();
//! let cfg = PifConfig::new(EmbeddingConfig::new(ModelFamily::Line2D, 2 * data.len(), 0.01));
//! let out = run_pif(&data.points, &cfg).unwrap();
//! let auc = auc(&out.scores, &data.anomaly_flags());
//! assert!(auc > 0.8);
//! ```

pub mod datagen;
pub mod distances;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod forest;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod ruzhash;
pub mod sliding;
pub mod sparse;
pub mod voronoi;

pub use error::{PifError, Result};

pub mod prelude {
    pub use crate::datagen::{generate, LabeledDataset, SyntheticName, SyntheticSpec};
    pub use crate::distances::DistanceKind;
    pub use crate::embedding::{EmbeddingConfig, PreferenceKind, PreferenceMatrix};
    pub use crate::error::{PifError, Result};
    pub use crate::eval::auc;
    pub use crate::forest::{Forest, ForestConfig};
    pub use crate::geometry::{ModelFamily, ModelHypothesis, Point};
    pub use crate::pipeline::{run_pif, PifConfig, PifOutput, TreeSpecies};
    pub use crate::sliding::{DepthGrid, SlidingConfig};
}
