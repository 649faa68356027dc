//! Dissimilarities between preference vectors.
//!
//! All preference distances lie in `[0, 1]`. Two all-zero vectors are at
//! distance `0`; an all-zero vector and a nonzero one are at distance `1`.

use std::fmt;
use std::str::FromStr;

use crate::error::{PifError, Result};
use crate::sparse::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    /// Set distance on supports; meant for binary preferences.
    Jaccard,
    Ruzicka,
    Tanimoto,
    Euclidean,
}

impl DistanceKind {
    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Jaccard => "jaccard",
            DistanceKind::Ruzicka => "ruzicka",
            DistanceKind::Tanimoto => "tanimoto",
            DistanceKind::Euclidean => "euclidean",
        }
    }

    pub fn eval(self, p: SparseVec<'_>, q: SparseVec<'_>) -> f64 {
        match self {
            DistanceKind::Jaccard => jaccard(p, q),
            DistanceKind::Ruzicka => ruzicka(p, q),
            DistanceKind::Tanimoto => tanimoto(p, q),
            DistanceKind::Euclidean => euclidean(p, q),
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = PifError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jaccard" => Ok(DistanceKind::Jaccard),
            "ruzicka" => Ok(DistanceKind::Ruzicka),
            "tanimoto" => Ok(DistanceKind::Tanimoto),
            "euclidean" | "l2" => Ok(DistanceKind::Euclidean),
            _ => Err(PifError::UnknownName {
                what: "distance",
                name: s.to_string(),
            }),
        }
    }
}

/// Visits the union of both supports in index order, passing `(p_i, q_i)`.
#[inline]
fn merge(p: SparseVec<'_>, q: SparseVec<'_>, mut f: impl FnMut(f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < p.indices.len() && j < q.indices.len() {
        let (a, b) = (p.indices[i], q.indices[j]);
        if a == b {
            f(p.values[i], q.values[j]);
            i += 1;
            j += 1;
        } else if a < b {
            f(p.values[i], 0.0);
            i += 1;
        } else {
            f(0.0, q.values[j]);
            j += 1;
        }
    }
    for &v in &p.values[i..] {
        f(v, 0.0);
    }
    for &v in &q.values[j..] {
        f(0.0, v);
    }
}

#[inline]
fn one_minus_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        1.0 - num / den
    }
}

/// `1 - |p ∧ q| / |p ∨ q|` on the supports of `p` and `q`.
pub fn jaccard(p: SparseVec<'_>, q: SparseVec<'_>) -> f64 {
    let (mut inter, mut union) = (0u64, 0u64);
    merge(p, q, |a, b| {
        let (a, b) = (a != 0.0, b != 0.0);
        inter += (a && b) as u64;
        union += (a || b) as u64;
    });
    one_minus_ratio(inter as f64, union as f64)
}

/// `1 - Σ min(p_i, q_i) / Σ max(p_i, q_i)`.
pub fn ruzicka(p: SparseVec<'_>, q: SparseVec<'_>) -> f64 {
    let (mut lo, mut hi) = (0.0, 0.0);
    merge(p, q, |a, b| {
        lo += a.min(b);
        hi += a.max(b);
    });
    one_minus_ratio(lo, hi)
}

/// `1 - <p, q> / (|p|² + |q|² - <p, q>)`.
pub fn tanimoto(p: SparseVec<'_>, q: SparseVec<'_>) -> f64 {
    let (mut dot, mut sq) = (0.0, 0.0);
    merge(p, q, |a, b| {
        dot += a * b;
        sq += a * a + b * b;
    });
    one_minus_ratio(dot, sq - dot)
}

pub fn euclidean(p: SparseVec<'_>, q: SparseVec<'_>) -> f64 {
    let mut acc = 0.0;
    merge(p, q, |a, b| acc += (a - b) * (a - b));
    acc.sqrt()
}

/// Euclidean distance between dense vectors.
pub fn euclidean_dense(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}
