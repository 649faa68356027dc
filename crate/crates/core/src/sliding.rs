//! Sliding-window detection on grid-structured data.
//!
//! The grid is tiled by square windows of side `ω` that overlap by half their
//! width. Each window is embedded with models sampled only from its own valid
//! pixels, scored by its own forest, and the per-window scores of a pixel are
//! averaged. With `ω` equal to the grid side the result is plain detection on
//! all valid pixels.

use rayon::prelude::*;

use crate::embedding::{embed_points, EmbeddingConfig};
use crate::error::{PifError, Result};
use crate::forest::ForestConfig;
use crate::geometry::{ModelFamily, Point};
use crate::pipeline::{score_rows, TreeSpecies};
use crate::rng::substream_path;

/// Range image: one `(x, y, z)` sample and a validity flag per pixel,
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthGrid {
    width: usize,
    height: usize,
    xyz: Vec<[f64; 3]>,
    valid: Vec<bool>,
}

impl DepthGrid {
    pub fn new(width: usize, height: usize, xyz: Vec<[f64; 3]>, valid: Vec<bool>) -> Result<Self> {
        let n = width
            .checked_mul(height)
            .ok_or_else(|| PifError::Format("grid dimensions overflow".into()))?;
        if width == 0 || height == 0 {
            return Err(PifError::Format("grid must have positive width and height".into()));
        }
        if xyz.len() != n || valid.len() != n {
            return Err(PifError::Format(format!(
                "grid {width}x{height} needs {n} samples, got {} coordinates and {} flags",
                xyz.len(),
                valid.len()
            )));
        }
        Ok(DepthGrid { width, height, xyz, valid })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.xyz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xyz.is_empty()
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn xyz(&self, i: usize) -> &[f64] {
        &self.xyz[i]
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Valid pixels as grid points, row-major, with their pixel indices.
    pub fn valid_points(&self) -> (Vec<usize>, Vec<Point>) {
        self.window_points(&Window {
            row0: 0,
            col0: 0,
            rows: self.height,
            cols: self.width,
        })
    }

    fn window_points(&self, w: &Window) -> (Vec<usize>, Vec<Point>) {
        let mut idx = Vec::new();
        let mut pts = Vec::new();
        for r in w.row0..w.row0 + w.rows {
            for c in w.col0..w.col0 + w.cols {
                let i = self.index(r, c);
                if self.valid[i] {
                    idx.push(i);
                    pts.push(Point::on_grid(self.xyz[i].to_vec(), r as u32, c as u32));
                }
            }
        }
        (idx, pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowGrid {
    pub omega: usize,
    pub stride: usize,
    pub windows: Vec<Window>,
}

fn axis_starts(len: usize, omega: usize, stride: usize) -> Vec<usize> {
    let mut starts: Vec<usize> = (0..).map(|k| k * stride).take_while(|s| s + omega <= len).collect();
    if starts.last().is_some_and(|&s| s + omega < len) {
        starts.push(len - omega);
    }
    starts
}

/// Half-overlapping tiling of a `width × height` grid by `ω × ω` windows;
/// the last window on each axis is shifted inward to end at the border.
pub fn make_windows(width: usize, height: usize, omega: usize) -> Result<WindowGrid> {
    if omega == 0 || omega > width.min(height) {
        return Err(PifError::InvalidConfig(format!(
            "window size {omega} must lie in 1..={}",
            width.min(height)
        )));
    }
    let stride = (omega / 2).max(1);
    let rows = axis_starts(height, omega, stride);
    let cols = axis_starts(width, omega, stride);
    let windows = rows
        .iter()
        .flat_map(|&row0| {
            cols.iter().map(move |&col0| Window {
                row0,
                col0,
                rows: omega,
                cols: omega,
            })
        })
        .collect();
    Ok(WindowGrid { omega, stride, windows })
}

/// `(2k - 1)²` windows for `ω = δ / k`.
pub fn window_count(k: u64) -> u64 {
    (2 * k - 1) * (2 * k - 1)
}

/// Models per window that fit `budget_bytes` of preference storage:
/// `⌊P / (s · (δ²/k²) · (2k − 1)²)⌋` with `s` given in bits. Evaluated
/// exactly in integers.
pub fn memory_budget_models(budget_bytes: u64, bits_per_value: u64, delta: u64, k: u64) -> u64 {
    assert!(bits_per_value > 0 && delta > 0 && k > 0);
    let num = budget_bytes as u128 * 8 * (k as u128) * (k as u128);
    let den = bits_per_value as u128 * (delta as u128) * (delta as u128) * window_count(k) as u128;
    (num / den) as u64
}

/// Models per window for an arbitrary layout: `⌊8P / (s · ω² · windows)⌋`.
/// Agrees with [`memory_budget_models`] when `ω = δ / k` exactly.
pub fn layout_budget_models(budget_bytes: u64, bits_per_value: u64, omega: usize, windows: usize) -> u64 {
    assert!(bits_per_value > 0 && omega > 0 && windows > 0);
    let num = budget_bytes as u128 * 8;
    let den = bits_per_value as u128 * (omega as u128).pow(2) * windows as u128;
    (num / den) as u64
}

/// Seed of the stream owned by the window at `(row0, col0)`. The window at
/// the origin keeps the master seed.
pub fn window_seed(master: u64, w: &Window) -> u64 {
    if w.row0 == 0 && w.col0 == 0 {
        master
    } else {
        substream_path(master, &[w.row0 as u64, w.col0 as u64])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingConfig {
    pub omega: usize,
    /// `num_models` is the per-window pool size `m_W`.
    pub embedding: EmbeddingConfig,
    pub forest: ForestConfig,
    pub species: TreeSpecies,
}

impl SlidingConfig {
    pub fn validate(&self) -> Result<()> {
        if !matches!(
            self.embedding.family,
            ModelFamily::Plane3D | ModelFamily::Sphere3D | ModelFamily::Quadric3D
        ) {
            return Err(PifError::InvalidConfig(format!(
                "sliding windows need a surface family, got {}",
                self.embedding.family
            )));
        }
        self.embedding.validate()?;
        self.forest.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowOutcome {
    Scored {
        pixels: Vec<usize>,
        scores: Vec<f64>,
        /// The window held fewer valid pixels than `ψ`.
        psi_capped: bool,
    },
    Skipped {
        valid: usize,
        reason: SkipReason,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    TooFewPixels,
    /// Every minimal sample in the window was degenerate.
    PoolExhausted,
}

/// Scores the valid pixels of one window.
pub fn score_window(grid: &DepthGrid, window: &Window, cfg: &SlidingConfig) -> Result<WindowOutcome> {
    let (pixels, points) = grid.window_points(window);
    let needed = cfg.embedding.family.minimal_sample_size().max(2);
    if points.len() < needed {
        return Ok(WindowOutcome::Skipped {
            valid: points.len(),
            reason: SkipReason::TooFewPixels,
        });
    }
    let embedding = EmbeddingConfig {
        seed: window_seed(cfg.embedding.seed, window),
        ..cfg.embedding.clone()
    };
    let forest = ForestConfig {
        seed: window_seed(cfg.forest.seed, window),
        ..cfg.forest.clone()
    };
    let prefs = match embed_points(&points, &embedding) {
        Ok((_, p)) => p,
        Err(PifError::PoolExhausted { .. }) => {
            return Ok(WindowOutcome::Skipped {
                valid: points.len(),
                reason: SkipReason::PoolExhausted,
            })
        }
        Err(e) => return Err(e),
    };
    let out = score_rows(prefs.rows(), &forest, cfg.species)?;
    Ok(WindowOutcome::Scored {
        psi_capped: points.len() < cfg.forest.subsample_size,
        pixels,
        scores: out.scores,
    })
}

/// Mean score per pixel over the scored windows containing it; `None` for
/// pixels no scored window covers. Windows are accumulated in slice order.
pub fn fuse_scores(n_pixels: usize, outcomes: &[WindowOutcome]) -> Vec<Option<f64>> {
    let mut sum = vec![0.0; n_pixels];
    let mut count = vec![0u32; n_pixels];
    for o in outcomes {
        if let WindowOutcome::Scored { pixels, scores, .. } = o {
            for (&p, &s) in pixels.iter().zip(scores) {
                sum[p] += s;
                count[p] += 1;
            }
        }
    }
    sum.into_iter()
        .zip(count)
        .map(|(s, c)| (c > 0).then(|| s / c as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingOutput {
    /// Row-major fused scores.
    pub scores: Vec<Option<f64>>,
    pub windows: WindowGrid,
    pub outcomes: Vec<WindowOutcome>,
}

impl SlidingOutput {
    pub fn skipped(&self) -> usize {
        self.outcomes.iter().filter(|o| matches!(o, WindowOutcome::Skipped { .. })).count()
    }

    pub fn psi_capped(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| matches!(o, WindowOutcome::Scored { psi_capped: true, .. }))
            .count()
    }
}

pub fn sliding_pif(grid: &DepthGrid, cfg: &SlidingConfig) -> Result<SlidingOutput> {
    cfg.validate()?;
    let windows = make_windows(grid.width(), grid.height(), cfg.omega)?;
    let outcomes = windows
        .windows
        .par_iter()
        .map(|w| score_window(grid, w, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(SlidingOutput {
        scores: fuse_scores(grid.len(), &outcomes),
        windows,
        outcomes,
    })
}
