//! Points of R^n and the closed convex sets used as feasible regions.
//!
//! Every set kind has an exact projection; nothing here runs an inner
//! optimization loop.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of R^n with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting empty input and non-finite entries.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("vector dimension must be positive".into()));
        }
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Vector(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    /// Unchecked construction for results of arithmetic on valid vectors.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        Vector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Euclidean inner product.
    pub fn inner(&self, other: &Vector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.dot(other))
    }

    /// Inner product for operands already known to share a dimension.
    pub(crate) fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Returns `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + alpha * b).collect())
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.0.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn zip_map(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;

    fn add(self, rhs: &Vector) -> Vector {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Vector {
    type Output = Vector;

    fn sub(self, rhs: &Vector) -> Vector {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;

    fn mul(self, rhs: &Vector) -> Vector {
        rhs.map(|v| self * v)
    }
}

impl Neg for &Vector {
    type Output = Vector;

    fn neg(self) -> Vector {
        self.map(|v| -v)
    }
}

/// Free-function form of [`Vector::inner`].
pub fn inner(a: &Vector, b: &Vector) -> Result<f64> {
    a.inner(b)
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Shape of a [`ConvexSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    WholeSpace,
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    /// The probability simplex `{x ≥ 0, Σ xᵢ = 1}`.
    Simplex,
}

/// A nonempty closed convex subset of R^n given by its projection oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSet {
    kind: SetKind,
    dim: usize,
}

impl ConvexSet {
    pub fn whole_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("set dimension must be positive".into()));
        }
        Ok(ConvexSet {
            kind: SetKind::WholeSpace,
            dim,
        })
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim(lower.dim(), upper.dim())?;
        if let Some(i) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidInput(format!(
                "box lower bound exceeds upper bound at index {i}"
            )));
        }
        Ok(ConvexSet {
            dim: lower.dim(),
            kind: SetKind::Box { lower, upper },
        })
    }

    /// Symmetric box `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(Vector::new(vec![lo; dim])?, Vector::new(vec![hi; dim])?)
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
        }
        Ok(ConvexSet {
            dim: center.dim(),
            kind: SetKind::Ball { center, radius },
        })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("set dimension must be positive".into()));
        }
        Ok(ConvexSet {
            kind: SetKind::Simplex,
            dim,
        })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.kind, SetKind::WholeSpace)
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.dim())?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Vector) -> Vector {
        match &self.kind {
            SetKind::WholeSpace => x.clone(),
            SetKind::Box { lower, upper } => Vector::from_raw(
                x.as_slice()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v.max(lower[i]).min(upper[i]))
                    .collect(),
            ),
            SetKind::Ball { center, radius } => {
                let offset = x - center;
                let dist = offset.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    center.axpy(radius / dist, &offset)
                }
            }
            SetKind::Simplex => project_simplex(x),
        }
    }

    /// Membership test with absolute tolerance `tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if x.dim() != self.dim {
            return false;
        }
        match &self.kind {
            SetKind::WholeSpace => true,
            SetKind::Box { lower, upper } => (0..self.dim)
                .all(|i| x[i] >= lower[i] - tol && x[i] <= upper[i] + tol),
            SetKind::Ball { center, radius } => x.distance(center) <= radius + tol,
            SetKind::Simplex => {
                x.as_slice().iter().all(|&v| v >= -tol)
                    && (x.as_slice().iter().sum::<f64>() - 1.0).abs() <= tol
            }
        }
    }

    /// Smallest axis-aligned box containing the set, if bounded.
    pub fn bounding_box(&self) -> Option<(Vector, Vector)> {
        match &self.kind {
            SetKind::WholeSpace => None,
            SetKind::Box { lower, upper } => Some((lower.clone(), upper.clone())),
            SetKind::Ball { center, radius } => {
                Some((center.map(|c| c - radius), center.map(|c| c + radius)))
            }
            SetKind::Simplex => Some((Vector::zeros(self.dim), Vector::from_raw(vec![1.0; self.dim]))),
        }
    }
}

/// Sort-and-threshold projection onto the probability simplex.
fn project_simplex(x: &Vector) -> Vector {
    let mut sorted = x.as_slice().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    x.map(|v| (v - theta).max(0.0))
}
