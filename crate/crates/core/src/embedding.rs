//! Preference embedding.
//!
//! A pool of `m` models is fitted on random minimal samples of the data and
//! every point is mapped to the vector of its preferences towards the pool:
//! `φ(δ)` when the residual `δ` is within the inlier threshold `ε = kσ`,
//! zero otherwise.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{PifError, Result};
use crate::geometry::{fit_minimal, residual, ModelFamily, ModelHypothesis, Point};
use crate::sparse::{SparseRows, SparseVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreferenceKind {
    /// Gaussian kernel `exp(-δ² / 2σ²)` of the residual.
    Continuous,
    /// `1` for inliers.
    Binary,
}

impl fmt::Display for PreferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreferenceKind::Continuous => "continuous",
            PreferenceKind::Binary => "binary",
        })
    }
}

impl FromStr for PreferenceKind {
    type Err = PifError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "continuous" => Ok(PreferenceKind::Continuous),
            "binary" => Ok(PreferenceKind::Binary),
            _ => Err(PifError::UnknownName {
                what: "preference kind",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub family: ModelFamily,
    pub num_models: usize,
    /// Noise standard deviation, in residual units.
    pub sigma: f64,
    pub k_sigma: f64,
    pub preference_kind: PreferenceKind,
    pub max_degenerate_retries: usize,
    pub seed: u64,
}

impl EmbeddingConfig {
    pub const DEFAULT_K_SIGMA: f64 = 3.0;
    pub const DEFAULT_MAX_RETRIES: usize = 100;

    pub fn new(family: ModelFamily, num_models: usize, sigma: f64) -> Self {
        EmbeddingConfig {
            family,
            num_models,
            sigma,
            k_sigma: Self::DEFAULT_K_SIGMA,
            preference_kind: PreferenceKind::Continuous,
            max_degenerate_retries: Self::DEFAULT_MAX_RETRIES,
            seed: 0,
        }
    }

    /// Inlier threshold `ε = kσ`.
    pub fn epsilon(&self) -> f64 {
        self.k_sigma * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_models == 0 {
            return Err(PifError::InvalidConfig("number of models must be positive".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(PifError::InvalidConfig(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.k_sigma > 0.0 && self.k_sigma.is_finite()) {
            return Err(PifError::InvalidConfig(format!("k must be positive, got {}", self.k_sigma)));
        }
        if self.max_degenerate_retries == 0 {
            return Err(PifError::InvalidConfig("retry cap must be positive".into()));
        }
        Ok(())
    }
}

/// Samples `cfg.num_models` hypotheses, each fitted on a minimal sample drawn
/// without replacement. Degenerate samples are redrawn; the run fails once the
/// cumulative number of degenerate draws exceeds `max_degenerate_retries · m`.
pub fn sample_model_pool<R: Rng + ?Sized>(
    points: &[Point],
    cfg: &EmbeddingConfig,
    rng: &mut R,
) -> Result<Vec<ModelHypothesis>> {
    cfg.validate()?;
    let k = cfg.family.minimal_sample_size();
    if points.len() < k {
        return Err(PifError::InsufficientPoints {
            needed: k,
            got: points.len(),
        });
    }
    let budget = cfg.max_degenerate_retries.saturating_mul(cfg.num_models);
    let mut failures = 0usize;
    let mut pool = Vec::with_capacity(cfg.num_models);
    let mut sample: Vec<&[f64]> = Vec::with_capacity(k);
    while pool.len() < cfg.num_models {
        sample.clear();
        sample.extend(
            index::sample(rng, points.len(), k)
                .into_iter()
                .map(|i| points[i].coords.as_slice()),
        );
        match fit_minimal(cfg.family, &sample) {
            Ok(h) => pool.push(h),
            Err(PifError::Degenerate(_)) => {
                failures += 1;
                if failures > budget {
                    return Err(PifError::PoolExhausted {
                        failures,
                        drawn: pool.len(),
                        requested: cfg.num_models,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(pool)
}

/// Preference of a point with residual `delta`.
#[inline]
pub fn preference_value(delta: f64, sigma: f64, epsilon: f64, kind: PreferenceKind) -> f64 {
    // NaN residuals count as outliers.
    if delta.is_nan() || delta.abs() > epsilon {
        return 0.0;
    }
    match kind {
        PreferenceKind::Continuous => (-delta * delta / (2.0 * sigma * sigma)).exp(),
        PreferenceKind::Binary => 1.0,
    }
}

/// Sparse `n × m` matrix of preferences in `(0, 1]`; absent entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    rows: SparseRows,
    kind: PreferenceKind,
}

impl PreferenceMatrix {
    /// Wraps rows after checking that every stored value lies in `(0, 1]`
    /// (exactly `1` for binary matrices).
    pub fn from_rows(rows: SparseRows, kind: PreferenceKind) -> Result<Self> {
        let ok = rows.values().iter().all(|&v| match kind {
            PreferenceKind::Binary => v == 1.0,
            PreferenceKind::Continuous => v > 0.0 && v <= 1.0,
        });
        if !ok {
            return Err(PifError::Format(format!(
                "preference values out of range for a {kind} matrix"
            )));
        }
        Ok(PreferenceMatrix { rows, kind })
    }

    pub fn n_points(&self) -> usize {
        self.rows.n_rows()
    }

    pub fn n_models(&self) -> usize {
        self.rows.n_cols()
    }

    pub fn kind(&self) -> PreferenceKind {
        self.kind
    }

    pub fn row(&self, j: usize) -> SparseVec<'_> {
        self.rows.row(j)
    }

    pub fn rows(&self) -> &SparseRows {
        &self.rows
    }

    /// Writes the sparse CSV form: a `n,m` header followed by one
    /// `row,col,value` line per stored entry (`row,col` for binary matrices),
    /// values with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{},{}", self.n_points(), self.n_models())?;
        for (j, row) in self.rows.rows().enumerate() {
            for (i, v) in row.iter() {
                match self.kind {
                    PreferenceKind::Binary => writeln!(out, "{j},{i}")?,
                    PreferenceKind::Continuous => writeln!(out, "{j},{i},{}", fmt_sig17(v))?,
                }
            }
        }
        Ok(())
    }

    /// Parses the sparse CSV form. Lines without a value mark a binary matrix;
    /// entries must be sorted by row, then column. `#` lines are skipped.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input
            .lines()
            .filter(|l| l.as_ref().map_or(true, |s| !s.trim_start().starts_with('#')));
        let header = lines
            .next()
            .ok_or_else(|| PifError::Format("empty preference file".into()))??;
        let (n, m) = header
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| PifError::Format(format!("bad header {header:?}, expected `n,m`")))?;
        let mut entries: Vec<(usize, u32, f64)> = Vec::new();
        let mut kind = None;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || PifError::Format(format!("entry {}: malformed {line:?}", lineno + 1));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let this_kind = match fields.len() {
                2 => PreferenceKind::Binary,
                3 => PreferenceKind::Continuous,
                _ => return Err(bad()),
            };
            if *kind.get_or_insert(this_kind) != this_kind {
                return Err(PifError::Format("mixed binary and valued entries".into()));
            }
            let r: usize = fields[0].parse().map_err(|_| bad())?;
            let c: u32 = fields[1].parse().map_err(|_| bad())?;
            let v: f64 = if fields.len() == 3 { fields[2].parse().map_err(|_| bad())? } else { 1.0 };
            if r >= n || c as usize >= m {
                return Err(PifError::Format(format!("entry {}: ({r},{c}) outside {n}x{m}", lineno + 1)));
            }
            if let Some(&(pr, pc, _)) = entries.last() {
                if (r, c) <= (pr, pc) {
                    return Err(PifError::Format(format!("entry {}: entries not sorted", lineno + 1)));
                }
            }
            entries.push((r, c, v));
        }
        let mut rows = SparseRows::new(m);
        let mut it = entries.into_iter().peekable();
        for r in 0..n {
            let mut row = Vec::new();
            while let Some(&(er, c, v)) = it.peek() {
                if er != r {
                    break;
                }
                row.push((c, v));
                it.next();
            }
            rows.push_row(row);
        }
        PreferenceMatrix::from_rows(rows, kind.unwrap_or(PreferenceKind::Continuous))
    }
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Builds the preference matrix of `points` against `pool`.
pub fn embed(points: &[Point], pool: &[ModelHypothesis], cfg: &EmbeddingConfig) -> PreferenceMatrix {
    let eps = cfg.epsilon();
    let rows: Vec<Vec<(u32, f64)>> = points
        .par_iter()
        .map(|p| {
            pool.iter()
                .enumerate()
                .filter_map(|(i, h)| {
                    let v = preference_value(residual(h, &p.coords), cfg.sigma, eps, cfg.preference_kind);
                    (v > 0.0).then_some((i as u32, v))
                })
                .collect()
        })
        .collect();
    let mut out = SparseRows::new(pool.len());
    for r in rows {
        out.push_row(r);
    }
    PreferenceMatrix {
        rows: out,
        kind: cfg.preference_kind,
    }
}

/// Samples a pool with `cfg.seed` and embeds `points` against it.
pub fn embed_points(points: &[Point], cfg: &EmbeddingConfig) -> Result<(Vec<ModelHypothesis>, PreferenceMatrix)> {
    let mut rng = crate::rng::rng_from_seed(cfg.seed);
    let pool = sample_model_pool(points, cfg, &mut rng)?;
    let prefs = embed(points, &pool, cfg);
    Ok((pool, prefs))
}

/// Robust noise estimate `1.4826 · median(|r - median(r)|)`.
///
/// Offered as a helper; configurations always take `σ` explicitly.
pub fn estimate_sigma_mad(residuals: &[f64]) -> Option<f64> {
    fn median(v: &mut [f64]) -> Option<f64> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
    }
    let mut r: Vec<f64> = residuals.iter().copied().filter(|x| x.is_finite()).collect();
    let med = median(&mut r)?;
    let mut dev: Vec<f64> = r.iter().map(|x| (x - med).abs()).collect();
    median(&mut dev).map(|mad| 1.482_602_218_505_602 * mad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn line_points(n: usize) -> Vec<Point> {
        (0..n).map(|i| Point::new(vec![i as f64, 2.0 * i as f64 + 1.0])).collect()
    }

    #[test]
    fn preference_value_examples() {
        assert_eq!(preference_value(0.0, 0.7, 2.1, PreferenceKind::Continuous), 1.0);
        let v = preference_value(0.5, 0.5, 1.5, PreferenceKind::Continuous);
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.606_53).abs() < 1e-5);
        for kind in [PreferenceKind::Continuous, PreferenceKind::Binary] {
            assert_eq!(preference_value(3.0001, 1.0, 3.0, kind), 0.0);
            assert_eq!(preference_value(f64::INFINITY, 1.0, 3.0, kind), 0.0);
            assert_eq!(preference_value(f64::NAN, 1.0, 3.0, kind), 0.0);
        }
        assert_eq!(preference_value(2.9, 1.0, 3.0, PreferenceKind::Binary), 1.0);
    }

    #[test]
    fn pool_has_m_interpolating_models() {
        let mut rng = rng_from_seed(3);
        let pts: Vec<Point> = (0..100)
            .map(|_| Point::new(vec![rng.random::<f64>(), rng.random::<f64>()]))
            .collect();
        let cfg = EmbeddingConfig::new(ModelFamily::Line2D, 10, 0.01);
        let pool = sample_model_pool(&pts, &cfg, &mut rng).unwrap();
        assert_eq!(pool.len(), 10);
        for h in &pool {
            let on = pts.iter().filter(|p| residual(h, &p.coords).abs() < 1e-9).count();
            assert!(on >= 2);
        }
    }

    #[test]
    fn two_points_give_their_line() {
        let pts = vec![Point::new(vec![0.0, 0.0]), Point::new(vec![1.0, 0.0])];
        let cfg = EmbeddingConfig::new(ModelFamily::Line2D, 1, 0.1);
        let pool = sample_model_pool(&pts, &cfg, &mut rng_from_seed(1)).unwrap();
        assert_eq!(residual(&pool[0], &[5.0, 0.0]).abs(), 0.0);
        assert!((residual(&pool[0], &[5.0, 2.0]).abs() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identical_points_exhaust_the_pool() {
        let pts = vec![Point::new(vec![1.0, 1.0]); 10];
        let mut cfg = EmbeddingConfig::new(ModelFamily::Circle2D, 5, 0.1);
        cfg.max_degenerate_retries = 3;
        let err = sample_model_pool(&pts, &cfg, &mut rng_from_seed(0)).unwrap_err();
        assert!(matches!(err, PifError::PoolExhausted { failures: 16, drawn: 0, requested: 5 }));
    }

    #[test]
    fn too_few_points() {
        let pts = vec![Point::new(vec![1.0, 1.0])];
        let cfg = EmbeddingConfig::new(ModelFamily::Line2D, 5, 0.1);
        assert!(matches!(
            sample_model_pool(&pts, &cfg, &mut rng_from_seed(0)),
            Err(PifError::InsufficientPoints { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn embed_examples() {
        let pts = line_points(3);
        let line = ModelHypothesis::line([2.0, -1.0], 1.0);
        let far = ModelHypothesis::line([1.0, 0.0], 100.0);
        let cfg = EmbeddingConfig::new(ModelFamily::Line2D, 1, 0.1);
        let p = embed(&pts, std::slice::from_ref(&line), &cfg);
        assert_eq!((p.n_points(), p.n_models()), (3, 1));
        for j in 0..3 {
            assert_eq!(p.row(j).to_dense(1), vec![1.0]);
        }
        let p = embed(&pts, &[far], &cfg);
        assert!(p.rows().rows().all(|r| r.is_empty()));
    }

    #[test]
    fn csv_roundtrip_and_format() {
        let pts = line_points(4);
        let mut pts2 = pts.clone();
        pts2.push(Point::new(vec![0.0, 1.05]));
        let cfg = EmbeddingConfig::new(ModelFamily::Line2D, 6, 0.05);
        let (_, p) = embed_points(&pts2, &cfg).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("5,6\n"));
        let back = PreferenceMatrix::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, p);

        let mut bin_cfg = cfg.clone();
        bin_cfg.preference_kind = PreferenceKind::Binary;
        let (_, pb) = embed_points(&pts2, &bin_cfg).unwrap();
        let mut buf = Vec::new();
        pb.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == 2));
        assert_eq!(PreferenceMatrix::read_csv(buf.as_slice()).unwrap(), pb);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(PreferenceMatrix::read_csv("2,2\n0,5,0.5\n".as_bytes()).is_err());
        assert!(PreferenceMatrix::read_csv("2,2\n0,1,1.5\n".as_bytes()).is_err());
        assert!(PreferenceMatrix::read_csv("2,2\n1,0\n0,1\n".as_bytes()).is_err());
        assert!(PreferenceMatrix::read_csv("x\n".as_bytes()).is_err());
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_sig17((-0.5f64).exp()), "6.0653065971263342e-1");
        assert_eq!(fmt_sig17(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn mad_estimate() {
        assert_eq!(estimate_sigma_mad(&[]), None);
        let r = [1.0, 2.0, 3.0, 4.0, 100.0];
        let s = estimate_sigma_mad(&r).unwrap();
        assert!((s - 1.482_602_218_505_602).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn binary_and_continuous_share_sparsity(seed in 0u64..500) {
            let mut rng = rng_from_seed(seed);
            let pts: Vec<Point> = (0..30)
                .map(|_| Point::new(vec![rng.random::<f64>(), rng.random::<f64>()]))
                .collect();
            let mut cfg = EmbeddingConfig::new(ModelFamily::Line2D, 20, 0.02);
            cfg.seed = seed;
            let (pool, cont) = embed_points(&pts, &cfg).unwrap();
            cfg.preference_kind = PreferenceKind::Binary;
            let bin = embed(&pts, &pool, &cfg);
            for j in 0..pts.len() {
                prop_assert_eq!(cont.row(j).indices, bin.row(j).indices);
            }
            // Same seed, same matrix.
            cfg.preference_kind = PreferenceKind::Continuous;
            let (pool2, cont2) = embed_points(&pts, &cfg).unwrap();
            prop_assert_eq!(pool, pool2);
            prop_assert_eq!(cont, cont2);
        }

        #[test]
        fn preference_is_monotone(a in 0.0..3.0f64, b in 0.0..3.0f64, sigma in 0.01..2.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (lo, hi) = (lo * sigma, hi * sigma);
            let eps = 3.0 * sigma;
            for kind in [PreferenceKind::Continuous, PreferenceKind::Binary] {
                prop_assert!(preference_value(lo, sigma, eps, kind) >= preference_value(hi, sigma, eps, kind));
                prop_assert_eq!(preference_value(-lo, sigma, eps, kind), preference_value(lo, sigma, eps, kind));
            }
        }
    }
}
