//! Evaluation: AUC, the axis-aligned isolation forest baseline and parameter
//! sweeps.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::datagen::{generate, SyntheticName, SyntheticSpec};
use crate::distances::DistanceKind;
use crate::embedding::{embed_points, fmt_sig17, EmbeddingConfig};
use crate::error::{PifError, Result};
use crate::forest::{BuildStats, Forest, ForestConfig, IsolationTree};
use crate::geometry::Point;
use crate::pipeline::{score_rows, TreeSpecies};
use crate::rng::{substream, substream_path, PifRng};
use crate::sparse::{SparseRows, SparseVec};

/// Area under the ROC curve of `scores` against `positives` (anomalies):
/// the Mann–Whitney statistic with tied scores counted one half. `NaN` when
/// either class is empty.
pub fn auc(scores: &[f64], positives: &[bool]) -> f64 {
    assert_eq!(scores.len(), positives.len());
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let (mut rank_sum, mut n_pos) = (0.0, 0usize);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their average.
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            if positives[k] {
                rank_sum += avg;
                n_pos += 1;
            }
        }
        i = j + 1;
    }
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return f64::NAN;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    u / (n_pos as f64 * n_neg as f64)
}

/// Axis-aligned isolation tree.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisNode {
    Internal {
        attribute: usize,
        cut: f64,
        left: Box<AxisNode>,
        right: Box<AxisNode>,
    },
    External {
        size: usize,
    },
}

fn grow_axis(points: &[SparseVec<'_>], depth: usize, limit: usize, rng: &mut PifRng, stats: &mut BuildStats) -> AxisNode {
    if depth >= limit || points.len() < 2 {
        stats.external_nodes += 1;
        return AxisNode::External { size: points.len() };
    }
    let dim = points[0].values.len();
    let ranges: Vec<(usize, f64, f64)> = (0..dim)
        .filter_map(|a| {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.values[a]), hi.max(p.values[a]))
            });
            (lo < hi).then_some((a, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        stats.external_nodes += 1;
        return AxisNode::External { size: points.len() };
    }
    let (attribute, lo, hi) = ranges[rng.random_range(0..ranges.len())];
    let cut = rng.random_range(lo..hi);
    stats.internal_nodes += 1;
    stats.split_ops += points.len() as u64;
    let (l, r): (Vec<SparseVec<'_>>, Vec<SparseVec<'_>>) = points.iter().partition(|p| p.values[attribute] < cut);
    AxisNode::Internal {
        attribute,
        cut,
        left: Box::new(grow_axis(&l, depth + 1, limit, rng, stats)),
        right: Box::new(grow_axis(&r, depth + 1, limit, rng, stats)),
    }
}

impl IsolationTree for AxisNode {
    fn path_length(&self, v: SparseVec<'_>) -> f64 {
        let (mut node, mut depth) = (self, 0);
        loop {
            match node {
                AxisNode::Internal { attribute, cut, left, right } => {
                    node = if v.values[*attribute] < *cut { left } else { right };
                    depth += 1;
                }
                AxisNode::External { size } => return depth as f64 + crate::forest::adjustment_c(*size),
            }
        }
    }
}

/// Dense rows that keep explicit zeros, so coordinate `a` is `values[a]`.
pub fn ambient_rows(points: &[Point]) -> SparseRows {
    let coords: Vec<&[f64]> = points.iter().map(|p| p.coords.as_slice()).collect();
    SparseRows::from_dense_rows(&coords)
}

/// Isolation forest with random axis-aligned binary splits in ambient space.
/// `cfg.branching` and `cfg.distance` are ignored.
pub fn baseline_iforest_forest(points: &[Point], cfg: &ForestConfig) -> Result<(Forest<AxisNode>, SparseRows)> {
    let rows = ambient_rows(points);
    let cfg = ForestConfig {
        branching: 2,
        ..cfg.clone()
    };
    let forest = Forest::build(&rows, &cfg, |sample, limit, rng, stats| grow_axis(sample, 0, limit, rng, stats))?;
    Ok((forest, rows))
}

pub fn baseline_iforest(points: &[Point], cfg: &ForestConfig) -> Result<Vec<f64>> {
    let (forest, rows) = baseline_iforest_forest(points, cfg)?;
    Ok(forest.score(&rows))
}

/// Detector compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Voronoi trees in preference space.
    ViFor(DistanceKind),
    /// Hashing trees in preference space.
    RzHiFor,
    /// Axis-aligned forest in ambient space.
    IFor,
    /// Euclidean Voronoi trees in ambient space.
    ViForAmbient,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ViFor(_) => "vifor",
            Method::RzHiFor => "rzhifor",
            Method::IFor => "ifor",
            Method::ViForAmbient => "vifor-ambient",
        }
    }

    pub fn distance_name(self) -> &'static str {
        match self {
            Method::ViFor(d) => d.name(),
            Method::RzHiFor => "ruzicka",
            Method::IFor => "axis",
            Method::ViForAmbient => "euclidean",
        }
    }

    /// Parses `vifor`, `vifor:<distance>`, `rzhifor`, `ifor` or
    /// `vifor-ambient`; plain `vifor` takes `default_distance`.
    pub fn parse(s: &str, default_distance: DistanceKind) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let (name, dist) = match lower.split_once(':') {
            Some((n, d)) => (n, Some(d.parse::<DistanceKind>()?)),
            None => (lower.as_str(), None),
        };
        match (name, dist) {
            ("vifor", d) => Ok(Method::ViFor(d.unwrap_or(default_distance))),
            ("rzhifor", None) => Ok(Method::RzHiFor),
            ("ifor", None) => Ok(Method::IFor),
            ("vifor-ambient", None) => Ok(Method::ViForAmbient),
            _ => Err(PifError::UnknownName {
                what: "method",
                name: s.to_string(),
            }),
        }
    }

    fn uses_preferences(self) -> bool {
        matches!(self, Method::ViFor(_) | Method::RzHiFor)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::ViFor(d) => write!(f, "vifor:{d}"),
            m => f.write_str(m.name()),
        }
    }
}

impl FromStr for Method {
    type Err = PifError;

    fn from_str(s: &str) -> Result<Self> {
        Method::parse(s, DistanceKind::Tanimoto)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub datasets: Vec<SyntheticName>,
    pub methods: Vec<Method>,
    pub b_values: Vec<usize>,
    /// Pool sizes as multiples of the dataset size.
    pub m_factors: Vec<f64>,
    pub repeats: usize,
    pub num_trees: usize,
    pub subsample_size: usize,
    pub k_sigma: f64,
    pub seed: u64,
    /// Record wall-clock times; zeros otherwise, which keeps reports
    /// reproducible byte for byte.
    pub timing: bool,
}

impl SweepConfig {
    pub const DEFAULT_B: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 256];
    pub const DEFAULT_M_FACTORS: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

    pub fn new(datasets: Vec<SyntheticName>, methods: Vec<Method>) -> Self {
        SweepConfig {
            datasets,
            methods,
            b_values: Self::DEFAULT_B.to_vec(),
            m_factors: Self::DEFAULT_M_FACTORS.to_vec(),
            repeats: 1,
            num_trees: 100,
            subsample_size: 256,
            k_sigma: EmbeddingConfig::DEFAULT_K_SIGMA,
            seed: 0,
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(PifError::InvalidConfig(format!("sweep needs at least one {what}")));
        if self.datasets.is_empty() {
            return empty("dataset");
        }
        if self.methods.is_empty() {
            return empty("method");
        }
        if self.b_values.is_empty() {
            return empty("branching factor");
        }
        if self.m_factors.is_empty() {
            return empty("model factor");
        }
        if self.repeats == 0 {
            return empty("repeat");
        }
        if self.m_factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(PifError::InvalidConfig("model factors must be positive".into()));
        }
        if self.datasets.contains(&SyntheticName::Custom) {
            return Err(PifError::InvalidConfig("sweeps run on named datasets only".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub dataset: String,
    pub method: &'static str,
    pub distance: &'static str,
    pub b: usize,
    /// Pool size; zero for ambient-space methods.
    pub m: usize,
    pub psi: usize,
    pub t: usize,
    pub seed: u64,
    pub auc: f64,
    pub build_s: f64,
    pub test_s: f64,
    pub split_ops: u64,
}

pub const REPORT_HEADER: &str = "dataset,method,distance,b,m,psi,t,seed,auc,build_s,test_s,split_ops";

fn elapsed(start: Instant, timing: bool) -> f64 {
    if timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    }
}

/// Full factorial over datasets × methods × b × m × repeats. Ambient-space
/// methods ignore `m`, and the axis-aligned forest ignores `b` as well; each
/// runs once per value it depends on. Repeat `r` of dataset `d` regenerates
/// the data with its own seed, shared by every method.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ExperimentReport>> {
    cfg.validate()?;
    let groups: Vec<(usize, usize)> = (0..cfg.datasets.len())
        .flat_map(|d| (0..cfg.repeats).map(move |r| (d, r)))
        .collect();
    let per_group = groups
        .par_iter()
        .map(|&(d, r)| sweep_group(cfg, d, r))
        .collect::<Result<Vec<_>>>()?;
    let mut keyed: Vec<Keyed> = per_group.into_iter().flatten().collect();
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

type Keyed = ((usize, usize, usize, usize, usize), ExperimentReport);

fn sweep_group(cfg: &SweepConfig, d: usize, r: usize) -> Result<Vec<Keyed>> {
    let name = cfg.datasets[d];
    let seed = substream_path(cfg.seed, &[d as u64, r as u64]);
    let data = generate(&SyntheticSpec::new(name, seed))?;
    let labels = data.anomaly_flags();
    let n = data.len();
    let forest_for = |b: usize| ForestConfig {
        num_trees: cfg.num_trees,
        subsample_size: cfg.subsample_size,
        branching: b,
        distance: DistanceKind::Tanimoto,
        seed: substream(seed, 1),
    };
    let report = |method: Method, b: usize, m: usize, auc: f64, build_s: f64, test_s: f64, split_ops: u64| ExperimentReport {
        dataset: name.to_string(),
        method: method.name(),
        distance: method.distance_name(),
        b,
        m,
        psi: cfg.subsample_size,
        t: cfg.num_trees,
        seed,
        auc,
        build_s,
        test_s,
        split_ops,
    };
    let mut out = Vec::new();

    for (mi, method) in cfg.methods.iter().enumerate() {
        match method {
            Method::IFor => {
                let start = Instant::now();
                let (forest, rows) = baseline_iforest_forest(&data.points, &forest_for(2))?;
                let build = elapsed(start, cfg.timing);
                let start = Instant::now();
                let scores = forest.score(&rows);
                let test = elapsed(start, cfg.timing);
                let rep = report(*method, 2, 0, auc(&scores, &labels), build, test, forest.stats.split_ops);
                out.push(((d, mi, 0, 0, r), rep));
            }
            Method::ViForAmbient => {
                let rows = ambient_rows(&data.points);
                for (bi, &b) in cfg.b_values.iter().enumerate() {
                    let fc = ForestConfig {
                        distance: DistanceKind::Euclidean,
                        ..forest_for(b)
                    };
                    let start = Instant::now();
                    let forest = crate::voronoi::build_forest(&rows, &fc)?;
                    let build = elapsed(start, cfg.timing);
                    let start = Instant::now();
                    let scores = forest.score(&rows);
                    let test = elapsed(start, cfg.timing);
                    let rep = report(*method, b, 0, auc(&scores, &labels), build, test, forest.stats.split_ops);
                    out.push(((d, mi, bi, 0, r), rep));
                }
            }
            _ => {}
        }
    }

    if cfg.methods.iter().any(|m| m.uses_preferences()) {
        for (fi, factor) in cfg.m_factors.iter().enumerate() {
            let m = ((factor * n as f64).round() as usize).max(1);
            let mut ec = EmbeddingConfig::new(name.family(), m, data.noise);
            ec.k_sigma = cfg.k_sigma;
            ec.seed = substream(seed, 2 + fi as u64);
            let start = Instant::now();
            let (_, prefs) = embed_points(&data.points, &ec)?;
            let embed_s = elapsed(start, cfg.timing);
            for (mi, method) in cfg.methods.iter().enumerate() {
                let (species, distance) = match method {
                    Method::ViFor(dist) => (TreeSpecies::Voronoi, *dist),
                    Method::RzHiFor => (TreeSpecies::RuzHash, DistanceKind::Ruzicka),
                    _ => continue,
                };
                for (bi, &b) in cfg.b_values.iter().enumerate() {
                    let fc = ForestConfig { distance, ..forest_for(b) };
                    let (scores, build, test, ops) = timed_forest(prefs.rows(), &fc, species, cfg.timing)?;
                    let rep = report(*method, b, m, auc(&scores, &labels), embed_s + build, test, ops);
                    out.push(((d, mi, bi, fi, r), rep));
                }
            }
        }
    }
    Ok(out)
}

/// Scores, build seconds, test seconds and split operations.
fn timed_forest(rows: &SparseRows, fc: &ForestConfig, species: TreeSpecies, timing: bool) -> Result<(Vec<f64>, f64, f64, u64)> {
    let start = Instant::now();
    match species {
        TreeSpecies::Voronoi => {
            let f = crate::voronoi::build_forest(rows, fc)?;
            let build = elapsed(start, timing);
            let start = Instant::now();
            let s = f.score(rows);
            Ok((s, build, elapsed(start, timing), f.stats.split_ops))
        }
        TreeSpecies::RuzHash => {
            let f = crate::ruzhash::build_ruzhash_forest(rows, fc)?;
            let build = elapsed(start, timing);
            let start = Instant::now();
            let s = f.score(rows);
            Ok((s, build, elapsed(start, timing), f.stats.split_ops))
        }
    }
}

/// Scores a labeled point set with one method; convenience for tests and
/// the command line.
pub fn score_method(
    points: &[Point],
    method: Method,
    embedding: &EmbeddingConfig,
    forest: &ForestConfig,
) -> Result<(Vec<f64>, BuildStats)> {
    match method {
        Method::IFor => {
            let (f, rows) = baseline_iforest_forest(points, forest)?;
            Ok((f.score(&rows), f.stats))
        }
        Method::ViForAmbient => {
            let rows = ambient_rows(points);
            let fc = ForestConfig {
                distance: DistanceKind::Euclidean,
                ..forest.clone()
            };
            let f = crate::voronoi::build_forest(&rows, &fc)?;
            Ok((f.score(&rows), f.stats))
        }
        Method::ViFor(distance) => {
            let (_, prefs) = embed_points(points, embedding)?;
            let fc = ForestConfig { distance, ..forest.clone() };
            let out = score_rows(prefs.rows(), &fc, TreeSpecies::Voronoi)?;
            Ok((out.scores, out.stats))
        }
        Method::RzHiFor => {
            let (_, prefs) = embed_points(points, embedding)?;
            let out = score_rows(prefs.rows(), forest, TreeSpecies::RuzHash)?;
            Ok((out.scores, out.stats))
        }
    }
}

pub fn write_reports<W: Write>(reports: &[ExperimentReport], mut out: W) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.method,
            r.distance,
            r.b,
            r.m,
            r.psi,
            r.t,
            r.seed,
            fmt_sig17(r.auc),
            fmt_sig17(r.build_s),
            fmt_sig17(r.test_s),
            r.split_ops
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: &'static str,
    pub distance: &'static str,
    pub b: usize,
    pub m: usize,
    pub repeats: usize,
    pub auc_mean: f64,
    /// Sample standard deviation; `None` with a single repeat.
    pub auc_std: Option<f64>,
    pub build_s_mean: f64,
    pub test_s_mean: f64,
    pub split_ops_mean: f64,
}

pub const SUMMARY_HEADER: &str = "dataset,method,distance,b,m,repeats,auc_mean,auc_std,build_s_mean,test_s_mean,split_ops_mean";

/// Mean and standard deviation per cell; reports of one cell must be
/// adjacent, as [`run_sweep`] returns them.
pub fn summarize(reports: &[ExperimentReport]) -> Vec<SummaryRow> {
    let same = |a: &ExperimentReport, b: &ExperimentReport| {
        a.dataset == b.dataset && a.method == b.method && a.distance == b.distance && a.b == b.b && a.m == b.m
    };
    reports
        .chunk_by(same)
        .map(|cell| {
            let k = cell.len() as f64;
            let mean = |f: &dyn Fn(&ExperimentReport) -> f64| cell.iter().map(f).sum::<f64>() / k;
            let auc_mean = mean(&|r| r.auc);
            let auc_std = (cell.len() > 1)
                .then(|| (cell.iter().map(|r| (r.auc - auc_mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt());
            SummaryRow {
                dataset: cell[0].dataset.clone(),
                method: cell[0].method,
                distance: cell[0].distance,
                b: cell[0].b,
                m: cell[0].m,
                repeats: cell.len(),
                auc_mean,
                auc_std,
                build_s_mean: mean(&|r| r.build_s),
                test_s_mean: mean(&|r| r.test_s),
                split_ops_mean: mean(&|r| r.split_ops as f64),
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.method,
            r.distance,
            r.b,
            r.m,
            r.repeats,
            fmt_sig17(r.auc_mean),
            r.auc_std.map(fmt_sig17).unwrap_or_default(),
            fmt_sig17(r.build_s_mean),
            fmt_sig17(r.test_s_mean),
            fmt_sig17(r.split_ops_mean)
        )?;
    }
    Ok(())
}
