//! Synthetic benchmarks.
//!
//! Planar datasets made of a few noisy structures (line segments or circles)
//! plus uniform anomalies, and analytic range-image surfaces with planted
//! defects for the sliding-window detector.
//!
//! Layouts are fixed constants:
//!
//! * `stairK`: `K` unit segments alternating between `+x` and `+y` steps,
//!   starting at the origin.
//! * `starK`: `K` segments of length 2 centred on the origin, at angles
//!   `kπ/K`.
//! * `circleK`: the first `K` circles of [`CIRCLES`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{PifError, Result};
use crate::geometry::{residual, ModelHypothesis, Point};
use crate::rng::{rng_from_seed, substream};
use crate::sliding::DepthGrid;

/// `(center, radius)` of the circle datasets.
pub const CIRCLES: [([f64; 2], f64); 5] = [
    ([0.0, 0.0], 1.0),
    ([2.2, 0.3], 0.6),
    ([1.0, 1.6], 0.8),
    ([-1.2, 1.4], 0.45),
    ([2.6, 1.9], 0.35),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticName {
    Stair3,
    Stair4,
    Star5,
    Star11,
    Circle3,
    Circle4,
    Circle5,
    /// Structures supplied in [`SyntheticSpec::structures`].
    Custom,
}

impl SyntheticName {
    pub const ALL: [SyntheticName; 8] = [
        SyntheticName::Stair3,
        SyntheticName::Stair4,
        SyntheticName::Star5,
        SyntheticName::Star11,
        SyntheticName::Circle3,
        SyntheticName::Circle4,
        SyntheticName::Circle5,
        SyntheticName::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntheticName::Stair3 => "stair3",
            SyntheticName::Stair4 => "stair4",
            SyntheticName::Star5 => "star5",
            SyntheticName::Star11 => "star11",
            SyntheticName::Circle3 => "circle3",
            SyntheticName::Circle4 => "circle4",
            SyntheticName::Circle5 => "circle5",
            SyntheticName::Custom => "custom",
        }
    }

    /// The structures of a named layout; empty for `Custom`.
    pub fn structures(self) -> Vec<Structure> {
        match self {
            SyntheticName::Stair3 => stair(3),
            SyntheticName::Stair4 => stair(4),
            SyntheticName::Star5 => star(5),
            SyntheticName::Star11 => star(11),
            SyntheticName::Circle3 => circles(3),
            SyntheticName::Circle4 => circles(4),
            SyntheticName::Circle5 => circles(5),
            SyntheticName::Custom => Vec::new(),
        }
    }

    /// Model family that describes the structures.
    pub fn family(self) -> crate::geometry::ModelFamily {
        use crate::geometry::ModelFamily;
        match self {
            SyntheticName::Circle3 | SyntheticName::Circle4 | SyntheticName::Circle5 => ModelFamily::Circle2D,
            _ => ModelFamily::Line2D,
        }
    }
}

impl fmt::Display for SyntheticName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntheticName {
    type Err = PifError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        SyntheticName::ALL
            .into_iter()
            .find(|n| n.name() == lower)
            .ok_or_else(|| PifError::UnknownName {
                what: "dataset",
                name: s.to_string(),
            })
    }
}

/// A generating structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Structure {
    Segment { from: [f64; 2], to: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
}

impl Structure {
    /// The model the structure lies on (the supporting line of a segment).
    pub fn hypothesis(&self) -> ModelHypothesis {
        match *self {
            Structure::Segment { from, to } => {
                let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
                let len = dx.hypot(dy);
                let normal = [-dy / len, dx / len];
                ModelHypothesis::line(normal, -(normal[0] * from[0] + normal[1] * from[1]))
            }
            Structure::Circle { center, radius } => ModelHypothesis::circle(center, radius),
        }
    }

    /// Signed geometric residual of `p`.
    pub fn residual(&self, p: &[f64]) -> f64 {
        residual(&self.hypothesis(), p)
    }

    fn sample<R: Rng + ?Sized>(&self, noise: &Option<Normal<f64>>, rng: &mut R) -> [f64; 2] {
        let eta = noise.map_or(0.0, |n| n.sample(rng));
        match *self {
            Structure::Segment { from, to } => {
                let t: f64 = rng.random();
                let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
                let len = dx.hypot(dy);
                let (nx, ny) = (-dy / len, dx / len);
                [from[0] + t * dx + eta * nx, from[1] + t * dy + eta * ny]
            }
            Structure::Circle { center, radius } => {
                let a = rng.random::<f64>() * std::f64::consts::TAU;
                let r = radius + eta;
                [center[0] + r * a.cos(), center[1] + r * a.sin()]
            }
        }
    }
}

fn stair(k: usize) -> Vec<Structure> {
    let mut corner = [0.0, 0.0];
    (0..k)
        .map(|i| {
            let mut next = corner;
            next[i % 2] += 1.0;
            let s = Structure::Segment { from: corner, to: next };
            corner = next;
            s
        })
        .collect()
}

fn star(k: usize) -> Vec<Structure> {
    (0..k)
        .map(|i| {
            let a = std::f64::consts::PI * i as f64 / k as f64;
            let (s, c) = a.sin_cos();
            Structure::Segment { from: [-c, -s], to: [c, s] }
        })
        .collect()
}

fn circles(k: usize) -> Vec<Structure> {
    CIRCLES[..k]
        .iter()
        .map(|&(center, radius)| Structure::Circle { center, radius })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub name: SyntheticName,
    pub points_per_structure: usize,
    /// Standard deviation of the perpendicular Gaussian noise.
    pub noise: f64,
    /// `|A| / |X|`.
    pub anomaly_ratio: f64,
    pub seed: u64,
    /// Used only by `Custom`.
    pub structures: Vec<Structure>,
}

impl SyntheticSpec {
    pub const DEFAULT_POINTS_PER_STRUCTURE: usize = 100;
    pub const DEFAULT_NOISE: f64 = 0.01;
    pub const DEFAULT_ANOMALY_RATIO: f64 = 0.5;

    pub fn new(name: SyntheticName, seed: u64) -> Self {
        SyntheticSpec {
            name,
            points_per_structure: Self::DEFAULT_POINTS_PER_STRUCTURE,
            noise: Self::DEFAULT_NOISE,
            anomaly_ratio: Self::DEFAULT_ANOMALY_RATIO,
            seed,
            structures: Vec::new(),
        }
    }

    pub fn custom(structures: Vec<Structure>, seed: u64) -> Self {
        SyntheticSpec {
            structures,
            ..Self::new(SyntheticName::Custom, seed)
        }
    }

    pub fn resolved_structures(&self) -> Vec<Structure> {
        match self.name {
            SyntheticName::Custom => self.structures.clone(),
            n => n.structures(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_structure == 0 {
            return Err(PifError::InvalidConfig("points per structure must be positive".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(PifError::InvalidConfig(format!("noise must be non-negative, got {}", self.noise)));
        }
        if !(self.anomaly_ratio > 0.0 && self.anomaly_ratio < 1.0) {
            return Err(PifError::InvalidConfig(format!(
                "anomaly ratio must lie in (0, 1), got {}",
                self.anomaly_ratio
            )));
        }
        if self.name == SyntheticName::Custom && self.structures.is_empty() {
            return Err(PifError::InvalidConfig("custom dataset needs at least one structure".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Genuine,
    Anomaly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub points: Vec<Point>,
    pub labels: Vec<Label>,
    /// Source structure of genuine points; `None` for anomalies.
    pub structure_id: Vec<Option<u32>>,
    /// Noise level the genuine points were generated with; zero when unknown.
    pub noise: f64,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `true` for anomalies.
    pub fn anomaly_flags(&self) -> Vec<bool> {
        self.labels.iter().map(|l| *l == Label::Anomaly).collect()
    }

    pub fn n_anomalies(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Anomaly).count()
    }
}

/// Number of anomalies that brings `n_genuine` genuine points to `ratio`.
pub fn anomaly_count(n_genuine: usize, ratio: f64) -> usize {
    (n_genuine as f64 * ratio / (1.0 - ratio)).round() as usize
}

pub fn generate(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let structures = spec.resolved_structures();
    let mut rng = rng_from_seed(spec.seed);
    let noise = (spec.noise > 0.0).then(|| Normal::new(0.0, spec.noise).expect("finite noise"));

    let n_genuine = structures.len() * spec.points_per_structure;
    let n_anom = anomaly_count(n_genuine, spec.anomaly_ratio);
    let mut points = Vec::with_capacity(n_genuine + n_anom);
    let mut labels = Vec::with_capacity(n_genuine + n_anom);
    let mut structure_id = Vec::with_capacity(n_genuine + n_anom);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for (sid, s) in structures.iter().enumerate() {
        for _ in 0..spec.points_per_structure {
            let p = s.sample(&noise, &mut rng);
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
            points.push(Point::new(p.to_vec()));
            labels.push(Label::Genuine);
            structure_id.push(Some(sid as u32));
        }
    }
    for _ in 0..n_anom {
        let p: Vec<f64> = (0..2).map(|d| lo[d] + (hi[d] - lo[d]) * rng.random::<f64>()).collect();
        points.push(Point::new(p));
        labels.push(Label::Anomaly);
        structure_id.push(None);
    }
    Ok(LabeledDataset {
        points,
        labels,
        structure_id,
        noise: spec.noise,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    PlanePatch,
    /// Cap of a sphere of radius [`SPHERE_RADIUS`] above the unit square.
    SphereCap,
    Saddle,
}

pub const SPHERE_RADIUS: f64 = 1.5;

impl SurfaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::PlanePatch => "plane_patch",
            SurfaceKind::SphereCap => "sphere_cap",
            SurfaceKind::Saddle => "saddle",
        }
    }

    /// Height of the surface above `(x, y)`.
    pub fn height(self, x: f64, y: f64) -> f64 {
        match self {
            SurfaceKind::PlanePatch => 0.3 * x - 0.2 * y + 0.5,
            SurfaceKind::SphereCap => (SPHERE_RADIUS * SPHERE_RADIUS - x * x - y * y).sqrt(),
            SurfaceKind::Saddle => 0.5 * (x * x - y * y),
        }
    }
}

impl FromStr for SurfaceKind {
    type Err = PifError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plane_patch" | "plane" => Ok(SurfaceKind::PlanePatch),
            "sphere_cap" | "sphere" => Ok(SurfaceKind::SphereCap),
            "saddle" => Ok(SurfaceKind::Saddle),
            _ => Err(PifError::UnknownName {
                what: "surface",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Defect {
    None,
    /// Pixels within the defect radius pushed down by the defect depth.
    Dent,
    /// Pixels within the radius invalidated; a ring out to 1.5× the radius
    /// pushed down by the defect depth.
    Hole,
}

impl FromStr for Defect {
    type Err = PifError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Defect::None),
            "dent" => Ok(Defect::Dent),
            "hole" => Ok(Defect::Hole),
            _ => Err(PifError::UnknownName {
                what: "defect",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    pub defect: Defect,
    /// Grid side in pixels; the grid spans `[-1, 1]²`.
    pub size: usize,
    /// Depth noise.
    pub sigma: f64,
    /// Defect radius in surface units.
    pub defect_radius: f64,
    /// Defect depth; `None` means `max(10σ, 0.05)`.
    pub defect_depth: Option<f64>,
    pub seed: u64,
}

impl SurfaceSpec {
    /// Small enough that defects stay a minority inside windows of a tenth
    /// of the grid.
    pub const DEFAULT_DEFECT_RADIUS: f64 = 0.05;

    pub fn new(kind: SurfaceKind, defect: Defect, size: usize, sigma: f64, seed: u64) -> Self {
        SurfaceSpec {
            kind,
            defect,
            size,
            sigma,
            defect_radius: Self::DEFAULT_DEFECT_RADIUS,
            defect_depth: None,
            seed,
        }
    }

    pub fn depth(&self) -> f64 {
        self.defect_depth.unwrap_or((10.0 * self.sigma).max(0.05))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFixture {
    pub grid: DepthGrid,
    /// Row-major defect mask.
    pub mask: Vec<bool>,
    pub center: [f64; 2],
}

/// Grid coordinate of pixel `i` along an axis of `n` pixels.
pub fn grid_coord(i: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        -1.0 + 2.0 * i as f64 / (n - 1) as f64
    }
}

pub fn generate_surface_fixture(spec: &SurfaceSpec) -> Result<SurfaceFixture> {
    if spec.size < 2 {
        return Err(PifError::InvalidConfig("surface grid needs at least 2 pixels per side".into()));
    }
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(PifError::InvalidConfig(format!("sigma must be non-negative, got {}", spec.sigma)));
    }
    let n = spec.size;
    let mut center_rng = rng_from_seed(substream(spec.seed, 0));
    let center = [center_rng.random_range(-0.5..0.5), center_rng.random_range(-0.5..0.5)];
    let mut rng = rng_from_seed(substream(spec.seed, 1));
    let noise = (spec.sigma > 0.0).then(|| Normal::new(0.0, spec.sigma).expect("finite sigma"));
    let (r, depth) = (spec.defect_radius, spec.depth());

    let mut xyz = Vec::with_capacity(n * n);
    let mut valid = Vec::with_capacity(n * n);
    let mut mask = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (x, y) = (grid_coord(col, n), grid_coord(row, n));
            let mut z = spec.kind.height(x, y) + noise.map_or(0.0, |d| d.sample(&mut rng));
            let rho = (x - center[0]).hypot(y - center[1]);
            let (ok, defect) = match spec.defect {
                Defect::None => (true, false),
                Defect::Dent => (true, rho <= r),
                Defect::Hole => (rho > r, rho <= 1.5 * r),
            };
            if defect && ok {
                z -= depth;
            }
            xyz.push([x, y, z]);
            valid.push(ok);
            mask.push(defect);
        }
    }
    Ok(SurfaceFixture {
        grid: DepthGrid::new(n, n, xyz, valid)?,
        mask,
        center,
    })
}
