//! Parametric model families, minimal-sample fitting and residuals.
//!
//! Residuals are expressed in the same length units as the points, so an
//! inlier threshold proportional to the point noise is meaningful for every
//! family. Lines and planes store a unit normal and an offset; circles and
//! spheres store a center and a radius; quadrics store the ten coefficients
//! of `ax² + by² + cz² + dxy + exz + fyz + gx + hy + iz + j = 0` scaled to
//! unit norm and report the algebraic value divided by its gradient norm.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix4, SMatrix, Vector3};

use crate::error::{PifError, Result};

/// A point of the ambient space, optionally tied to a pixel of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
    /// `(row, col)` for grid-structured data.
    pub grid_index: Option<(u32, u32)>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point {
            coords,
            grid_index: None,
        }
    }

    pub fn on_grid(coords: Vec<f64>, row: u32, col: u32) -> Self {
        Point {
            coords,
            grid_index: Some((row, col)),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point::new(coords)
    }
}

/// Supported model families.
///
/// Further families (homographies, fundamental matrices) would slot in as new
/// variants together with their fitting and residual routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelFamily {
    Line2D,
    Circle2D,
    Plane3D,
    Sphere3D,
    Quadric3D,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Line2D,
        ModelFamily::Circle2D,
        ModelFamily::Plane3D,
        ModelFamily::Sphere3D,
        ModelFamily::Quadric3D,
    ];

    /// Number of points that uniquely constrain one model.
    pub fn minimal_sample_size(self) -> usize {
        match self {
            ModelFamily::Line2D => 2,
            ModelFamily::Circle2D => 3,
            ModelFamily::Plane3D => 3,
            ModelFamily::Sphere3D => 4,
            ModelFamily::Quadric3D => 9,
        }
    }

    pub fn ambient_dim(self) -> usize {
        match self {
            ModelFamily::Line2D | ModelFamily::Circle2D => 2,
            _ => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Line2D => "line",
            ModelFamily::Circle2D => "circle",
            ModelFamily::Plane3D => "plane",
            ModelFamily::Sphere3D => "sphere",
            ModelFamily::Quadric3D => "quadric",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = PifError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "line" | "line2d" => Ok(ModelFamily::Line2D),
            "circle" | "circle2d" => Ok(ModelFamily::Circle2D),
            "plane" | "plane3d" => Ok(ModelFamily::Plane3D),
            "sphere" | "sphere3d" => Ok(ModelFamily::Sphere3D),
            "quadric" | "quadric3d" => Ok(ModelFamily::Quadric3D),
            _ => Err(PifError::UnknownName {
                what: "model family",
                name: s.to_string(),
            }),
        }
    }
}

/// Maps a local-family name used by the sliding-window detector to its
/// family. Only surface families are accepted.
pub fn tangent_local_family(name: &str) -> Result<ModelFamily> {
    match name.to_ascii_lowercase().as_str() {
        "plane" => Ok(ModelFamily::Plane3D),
        "sphere" => Ok(ModelFamily::Sphere3D),
        "quadric" => Ok(ModelFamily::Quadric3D),
        _ => Err(PifError::UnknownName {
            what: "local family",
            name: name.to_string(),
        }),
    }
}

/// A fitted model instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelHypothesis {
    pub family: ModelFamily,
    pub params: Vec<f64>,
}

/// Gradient norm below which a quadric residual cannot be normalized.
pub const QUADRIC_GRADIENT_FLOOR: f64 = 1e-12;

const REL_DEGENERACY: f64 = 1e-10;

impl ModelHypothesis {
    /// Line `n·x + c = 0`; the normal is normalized here.
    pub fn line(normal: [f64; 2], offset: f64) -> Self {
        let norm = normal[0].hypot(normal[1]);
        ModelHypothesis {
            family: ModelFamily::Line2D,
            params: vec![normal[0] / norm, normal[1] / norm, offset / norm],
        }
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        ModelHypothesis {
            family: ModelFamily::Circle2D,
            params: vec![center[0], center[1], radius],
        }
    }

    /// Plane `n·x + d = 0`; the normal is normalized here.
    pub fn plane(normal: [f64; 3], offset: f64) -> Self {
        let norm = Vector3::from(normal).norm();
        ModelHypothesis {
            family: ModelFamily::Plane3D,
            params: vec![
                normal[0] / norm,
                normal[1] / norm,
                normal[2] / norm,
                offset / norm,
            ],
        }
    }

    pub fn sphere(center: [f64; 3], radius: f64) -> Self {
        ModelHypothesis {
            family: ModelFamily::Sphere3D,
            params: vec![center[0], center[1], center[2], radius],
        }
    }

    /// Quadric from its ten coefficients `[a, b, c, d, e, f, g, h, i, j]`.
    pub fn quadric(coeffs: [f64; 10]) -> Self {
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        ModelHypothesis {
            family: ModelFamily::Quadric3D,
            params: coeffs.iter().map(|c| c / norm).collect(),
        }
    }

    /// Residual of `p` with respect to this model.
    pub fn residual(&self, p: &[f64]) -> f64 {
        residual(self, p)
    }
}

/// Fits a model of `family` through exactly `minimal_sample_size` points.
pub fn fit_minimal(family: ModelFamily, sample: &[&[f64]]) -> Result<ModelHypothesis> {
    let need = family.minimal_sample_size();
    if sample.len() != need {
        return Err(PifError::InvalidConfig(format!(
            "{family} needs a minimal sample of {need} points, got {}",
            sample.len()
        )));
    }
    let dim = family.ambient_dim();
    if let Some(bad) = sample.iter().find(|p| p.len() != dim) {
        return Err(PifError::InvalidConfig(format!(
            "{family} expects {dim}-dimensional points, got {}",
            bad.len()
        )));
    }
    match family {
        ModelFamily::Line2D => fit_line(sample[0], sample[1]),
        ModelFamily::Circle2D => fit_circle(sample[0], sample[1], sample[2]),
        ModelFamily::Plane3D => fit_plane(sample[0], sample[1], sample[2]),
        ModelFamily::Sphere3D => fit_sphere(sample),
        ModelFamily::Quadric3D => fit_quadric(sample),
    }
}

fn fit_line(a: &[f64], b: &[f64]) -> Result<ModelHypothesis> {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    let scale = a[0].abs().max(a[1].abs()).max(b[0].abs()).max(b[1].abs());
    if len == 0.0 || len <= REL_DEGENERACY * scale {
        return Err(PifError::Degenerate("coincident points"));
    }
    let (nx, ny) = (-dy / len, dx / len);
    Ok(ModelHypothesis {
        family: ModelFamily::Line2D,
        params: vec![nx, ny, -(nx * a[0] + ny * a[1])],
    })
}

fn fit_circle(a: &[f64], b: &[f64], c: &[f64]) -> Result<ModelHypothesis> {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let cross = bx * cy - by * cx;
    let nb = bx.hypot(by);
    let nc = cx.hypot(cy);
    if nb == 0.0 || nc == 0.0 || cross.abs() <= REL_DEGENERACY * nb * nc {
        return Err(PifError::Degenerate("collinear points"));
    }
    let d = 2.0 * cross;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Ok(ModelHypothesis::circle([a[0] + ux, a[1] + uy], ux.hypot(uy)))
}

fn fit_plane(a: &[f64], b: &[f64], c: &[f64]) -> Result<ModelHypothesis> {
    let pa = Vector3::new(a[0], a[1], a[2]);
    let u = Vector3::new(b[0], b[1], b[2]) - pa;
    let v = Vector3::new(c[0], c[1], c[2]) - pa;
    let n = u.cross(&v);
    let nn = n.norm();
    if nn == 0.0 || nn <= REL_DEGENERACY * u.norm() * v.norm() {
        return Err(PifError::Degenerate("collinear points"));
    }
    let n = n / nn;
    Ok(ModelHypothesis {
        family: ModelFamily::Plane3D,
        params: vec![n.x, n.y, n.z, -n.dot(&pa)],
    })
}

fn fit_sphere(sample: &[&[f64]]) -> Result<ModelHypothesis> {
    let p0 = Vector3::new(sample[0][0], sample[0][1], sample[0][2]);
    let mut a = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    let mut row_norms = 1.0;
    for (r, p) in sample[1..].iter().enumerate() {
        let d = Vector3::new(p[0], p[1], p[2]) - p0;
        a.set_row(r, &(2.0 * d).transpose());
        rhs[r] = d.norm_squared();
        row_norms *= 2.0 * d.norm();
    }
    let det = a.determinant();
    if row_norms == 0.0 || det.abs() <= REL_DEGENERACY * row_norms {
        return Err(PifError::Degenerate("coplanar points"));
    }
    let u = a
        .lu()
        .solve(&rhs)
        .ok_or(PifError::Degenerate("coplanar points"))?;
    let center = p0 + u;
    Ok(ModelHypothesis::sphere(
        [center.x, center.y, center.z],
        u.norm(),
    ))
}

fn fit_quadric(sample: &[&[f64]]) -> Result<ModelHypothesis> {
    // Condition the design matrix: centre on the centroid, unit mean radius.
    let n = sample.len() as f64;
    let centroid = sample
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::new(p[0], p[1], p[2]))
        / n;
    let mean_dist = sample
        .iter()
        .map(|p| (Vector3::new(p[0], p[1], p[2]) - centroid).norm())
        .sum::<f64>()
        / n;
    if mean_dist == 0.0 {
        return Err(PifError::Degenerate("coincident points"));
    }
    let s = 1.0 / mean_dist;

    // Pad with a zero row so the SVD yields the full right singular basis.
    let mut design = SMatrix::<f64, 10, 10>::zeros();
    for (r, p) in sample.iter().enumerate() {
        let x = s * (p[0] - centroid.x);
        let y = s * (p[1] - centroid.y);
        let z = s * (p[2] - centroid.z);
        let row = [x * x, y * y, z * z, x * y, x * z, y * z, x, y, z, 1.0];
        for (c, v) in row.into_iter().enumerate() {
            design[(r, c)] = v;
        }
    }
    let svd = design.svd(false, true);
    let v_t = svd.v_t.ok_or(PifError::Degenerate("svd failed"))?;
    let mut order: Vec<usize> = (0..10).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let largest = svd.singular_values[order[0]];
    let second_smallest = svd.singular_values[order[8]];
    if largest == 0.0 || second_smallest <= REL_DEGENERACY * largest {
        return Err(PifError::Degenerate("rank-deficient quadric design"));
    }
    let null = v_t.row(order[9]);
    let [a, b, c, d, e, f, g, h, i, j] = std::array::from_fn(|k| null[k]);
    let q_norm = Matrix4::new(
        a,
        d / 2.0,
        e / 2.0,
        g / 2.0,
        d / 2.0,
        b,
        f / 2.0,
        h / 2.0,
        e / 2.0,
        f / 2.0,
        c,
        i / 2.0,
        g / 2.0,
        h / 2.0,
        i / 2.0,
        j,
    );
    // x' = s (x - centroid) in homogeneous form.
    let mut t = Matrix4::identity() * s;
    t[(3, 3)] = 1.0;
    let shift = -s * centroid;
    t[(0, 3)] = shift.x;
    t[(1, 3)] = shift.y;
    t[(2, 3)] = shift.z;
    let q = t.transpose() * q_norm * t;
    Ok(ModelHypothesis::quadric([
        q[(0, 0)],
        q[(1, 1)],
        q[(2, 2)],
        2.0 * q[(0, 1)],
        2.0 * q[(0, 2)],
        2.0 * q[(1, 2)],
        2.0 * q[(0, 3)],
        2.0 * q[(1, 3)],
        2.0 * q[(2, 3)],
        q[(3, 3)],
    ]))
}

/// Residual of point `p` with respect to `h`.
///
/// Lines and planes give the signed Euclidean distance, circles and spheres
/// the distance to the center minus the radius. Quadrics give the algebraic
/// value over the gradient norm; where the gradient vanishes the residual is
/// `0` on the surface and `±∞` off it.
pub fn residual(h: &ModelHypothesis, p: &[f64]) -> f64 {
    let t = &h.params;
    match h.family {
        ModelFamily::Line2D => t[0] * p[0] + t[1] * p[1] + t[2],
        ModelFamily::Circle2D => (p[0] - t[0]).hypot(p[1] - t[1]) - t[2],
        ModelFamily::Plane3D => t[0] * p[0] + t[1] * p[1] + t[2] * p[2] + t[3],
        ModelFamily::Sphere3D => {
            let d = Vector3::new(p[0] - t[0], p[1] - t[1], p[2] - t[2]);
            d.norm() - t[3]
        }
        ModelFamily::Quadric3D => {
            let (x, y, z) = (p[0], p[1], p[2]);
            let value = quadric_value(t, x, y, z);
            let grad = Vector3::new(
                2.0 * t[0] * x + t[3] * y + t[4] * z + t[6],
                2.0 * t[1] * y + t[3] * x + t[5] * z + t[7],
                2.0 * t[2] * z + t[4] * x + t[5] * y + t[8],
            );
            let gn = grad.norm();
            if gn < QUADRIC_GRADIENT_FLOOR {
                if value == 0.0 {
                    0.0
                } else {
                    f64::INFINITY.copysign(value)
                }
            } else {
                value / gn
            }
        }
    }
}

/// Algebraic value of a quadric at `(x, y, z)`.
pub fn quadric_value(t: &[f64], x: f64, y: f64, z: f64) -> f64 {
    t[0] * x * x
        + t[1] * y * y
        + t[2] * z * z
        + t[3] * x * y
        + t[4] * x * z
        + t[5] * y * z
        + t[6] * x
        + t[7] * y
        + t[8] * z
        + t[9]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fit(family: ModelFamily, pts: &[Vec<f64>]) -> Result<ModelHypothesis> {
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        fit_minimal(family, &refs)
    }

    #[test]
    fn line_through_diagonal() {
        let h = fit(ModelFamily::Line2D, &[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h.params[0] + s).abs() < 1e-15);
        assert!((h.params[1] - s).abs() < 1e-15);
        assert!(h.params[2].abs() < 1e-15);
        assert!(residual(&h, &[2.0, 2.0]).abs() < 1e-15);
    }

    #[test]
    fn unit_circle_from_three_points() {
        let h = fit(
            ModelFamily::Circle2D,
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
        )
        .unwrap();
        assert!(h.params[0].abs() < 1e-12 && h.params[1].abs() < 1e-12);
        assert!((h.params[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_circle_is_degenerate() {
        let err = fit(
            ModelFamily::Circle2D,
            &[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]],
        );
        assert!(matches!(err, Err(PifError::Degenerate(_))));
    }

    #[test]
    fn coplanar_sphere_is_degenerate() {
        let pts = [
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ];
        assert!(matches!(
            fit(ModelFamily::Sphere3D, &pts),
            Err(PifError::Degenerate(_))
        ));
    }

    #[test]
    fn quadric_rank_deficient_on_a_line() {
        let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64, 0.0, 0.0]).collect();
        assert!(matches!(
            fit(ModelFamily::Quadric3D, &pts),
            Err(PifError::Degenerate(_))
        ));
    }

    #[test]
    fn wrong_sample_size_rejected() {
        assert!(matches!(
            fit(ModelFamily::Line2D, &[vec![0.0, 0.0]]),
            Err(PifError::InvalidConfig(_))
        ));
        assert!(matches!(
            fit(ModelFamily::Line2D, &[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]),
            Err(PifError::InvalidConfig(_))
        ));
    }

    #[test]
    fn residual_examples() {
        let line = ModelHypothesis::line([1.0, 0.0], -1.0);
        assert_eq!(residual(&line, &[3.0, 7.0]), 2.0);
        let circle = ModelHypothesis::circle([0.0, 0.0], 1.0);
        assert_eq!(residual(&circle, &[2.0, 0.0]), 1.0);
        let sphere = ModelHypothesis::sphere([0.0, 0.0, 0.0], 2.0);
        assert_eq!(residual(&sphere, &[0.0, 0.0, 2.0]), 0.0);
    }

    #[test]
    fn quadric_residual_of_unit_sphere_is_geometric_to_first_order() {
        // x² + y² + z² - 1: value/|grad| = (r² - 1) / 2r.
        let q = ModelHypothesis::quadric([1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let r = residual(&q, &[1.01, 0.0, 0.0]);
        assert!((r - (1.01f64 * 1.01 - 1.0) / 2.02).abs() < 1e-12);
    }

    #[test]
    fn quadric_gradient_guard() {
        // At the origin the gradient of x² + y² + z² - 1 vanishes.
        let q = ModelHypothesis::quadric([1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        assert_eq!(residual(&q, &[0.0, 0.0, 0.0]), f64::NEG_INFINITY);
        let cone = ModelHypothesis::quadric([1.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(residual(&cone, &[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn local_family_names() {
        assert_eq!(tangent_local_family("plane").unwrap(), ModelFamily::Plane3D);
        assert_eq!(tangent_local_family("Sphere").unwrap(), ModelFamily::Sphere3D);
        assert_eq!(tangent_local_family("quadric").unwrap(), ModelFamily::Quadric3D);
        assert!(tangent_local_family("line").is_err());
        assert!("hyperbola".parse::<ModelFamily>().is_err());
    }

    fn coord() -> impl Strategy<Value = f64> {
        -10.0..10.0f64
    }

    fn rotation2(angle: f64) -> impl Fn(&[f64]) -> Vec<f64> {
        let (s, c) = angle.sin_cos();
        move |p| vec![c * p[0] - s * p[1], s * p[0] + c * p[1]]
    }

    fn rotation3(axis: Vector3<f64>, angle: f64) -> nalgebra::Rotation3<f64> {
        nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
    }

    proptest! {
        #[test]
        fn minimal_samples_interpolate(
            pts in proptest::collection::vec(proptest::collection::vec(coord(), 3), 9)
        ) {
            for family in ModelFamily::ALL {
                let dim = family.ambient_dim();
                let sample: Vec<Vec<f64>> = pts[..family.minimal_sample_size()]
                    .iter()
                    .map(|p| p[..dim].to_vec())
                    .collect();
                if let Ok(h) = fit(family, &sample) {
                    let tol = if family == ModelFamily::Quadric3D { 1e-6 } else { 1e-9 };
                    for p in &sample {
                        let r = residual(&h, p);
                        prop_assert!(r.abs() < tol, "{family}: residual {r}");
                    }
                }
            }
        }

        #[test]
        fn planar_residuals_rigid_invariant(
            sample in proptest::collection::vec(proptest::collection::vec(coord(), 2), 3),
            query in proptest::collection::vec(coord(), 2),
            angle in 0.0..std::f64::consts::TAU,
            shift in proptest::collection::vec(coord(), 2),
            scale in 0.1..10.0f64,
        ) {
            let rot = rotation2(angle);
            let moved = |p: &[f64]| {
                let r = rot(p);
                vec![r[0] + shift[0], r[1] + shift[1]]
            };
            for family in [ModelFamily::Line2D, ModelFamily::Circle2D] {
                let s = &sample[..family.minimal_sample_size()];
                let Ok(h) = fit(family, s) else { continue };
                let moved_sample: Vec<Vec<f64>> = s.iter().map(|p| moved(p)).collect();
                let h2 = fit(family, &moved_sample).unwrap();
                let r = residual(&h, &query);
                let r2 = residual(&h2, &moved(&query));
                // The line normal may flip sign under refitting.
                let (r, r2) = if family == ModelFamily::Line2D { (r.abs(), r2.abs()) } else { (r, r2) };
                prop_assert!((r - r2).abs() < 1e-8 * (1.0 + r.abs()), "{family}: {r} vs {r2}");

                let scaled: Vec<Vec<f64>> = s.iter().map(|p| p.iter().map(|c| c * scale).collect()).collect();
                let h3 = fit(family, &scaled).unwrap();
                let q3: Vec<f64> = query.iter().map(|c| c * scale).collect();
                let r3 = residual(&h3, &q3);
                let r3 = if family == ModelFamily::Line2D { r3.abs() } else { r3 };
                prop_assert!((r3 - scale * r).abs() < 1e-8 * (1.0 + (scale * r).abs()));
            }
        }

        #[test]
        fn spatial_residuals_rigid_invariant(
            sample in proptest::collection::vec(proptest::collection::vec(coord(), 3), 4),
            query in proptest::collection::vec(coord(), 3),
            axis in proptest::collection::vec(0.1..1.0f64, 3),
            angle in 0.0..std::f64::consts::TAU,
            shift in proptest::collection::vec(coord(), 3),
            scale in 0.1..10.0f64,
        ) {
            let rot = rotation3(Vector3::new(axis[0], axis[1], axis[2]), angle);
            let t = Vector3::new(shift[0], shift[1], shift[2]);
            let moved = |p: &[f64]| {
                let v = rot * Vector3::new(p[0], p[1], p[2]) + t;
                vec![v.x, v.y, v.z]
            };
            for family in [ModelFamily::Plane3D, ModelFamily::Sphere3D] {
                let s = &sample[..family.minimal_sample_size()];
                let Ok(h) = fit(family, s) else { continue };
                // Skip nearly degenerate samples whose fits are ill-conditioned.
                if h.params.iter().any(|p| p.abs() > 1e4) { continue; }
                let moved_sample: Vec<Vec<f64>> = s.iter().map(|p| moved(p)).collect();
                let h2 = fit(family, &moved_sample).unwrap();
                let r = residual(&h, &query);
                let r2 = residual(&h2, &moved(&query));
                let (r, r2) = if family == ModelFamily::Plane3D { (r.abs(), r2.abs()) } else { (r, r2) };
                prop_assert!((r - r2).abs() < 1e-8 * (1.0 + r.abs()), "{family}: {r} vs {r2}");

                let scaled: Vec<Vec<f64>> = s.iter().map(|p| p.iter().map(|c| c * scale).collect()).collect();
                let h3 = fit(family, &scaled).unwrap();
                let q3: Vec<f64> = query.iter().map(|c| c * scale).collect();
                let r3 = residual(&h3, &q3);
                let r3 = if family == ModelFamily::Plane3D { r3.abs() } else { r3 };
                prop_assert!((r3 - scale * r).abs() < 1e-8 * (1.0 + (scale * r).abs()));
            }
        }
    }
}
