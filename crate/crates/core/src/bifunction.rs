//! Structured bifunctions `f(x, y) = φ(x, y) + ϕ(y) − ϕ(x)`.
//!
//! Three families of the coupling term `φ` are supported:
//!
//! * affine variational inequalities, `φ(x, y) = ⟨Ax + b, y − x⟩`;
//! * bilinear equilibrium bifunctions, `φ(x, y) = ⟨Px + Qy + q, y − x⟩` with `Q`
//!   symmetric positive semidefinite;
//! * the planar rotation `φ(x, y) = ⟨Ax, y − x⟩`, `A = [[0, 1], [-1, 0]]`,
//!   which is monotone but whose proximal mapping is expansive.
//!
//! `ϕ` is a convex [`Regularizer`]. Its contribution cancels in every
//! monotonicity and Lipschitz-type expression, so the closed-form constants
//! depend on the coupling term only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Vector};
use crate::linalg::Matrix;

const PSD_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum BifunctionKind {
    MviAffine { a: Matrix, b: Vector },
    Bilinear { p: Matrix, q: Matrix, q_vec: Vector },
    Rotation,
}

/// Convex function `ϕ` of the mixed form.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    Zero,
    /// `Σ wᵢ |yᵢ|` with `w ≥ 0`.
    WeightedL1 { weights: Vector },
    /// `½ yᵀHy + hᵀy` with `H` symmetric PSD.
    Quadratic { h_mat: Matrix, h_vec: Vector },
}

impl Regularizer {
    pub fn weighted_l1(weights: Vector) -> Result<Self> {
        if let Some(i) = (0..weights.dim()).find(|&i| weights[i] < 0.0) {
            return Err(Error::InvalidInput(format!("l1 weight {i} is negative")));
        }
        Ok(Regularizer::WeightedL1 { weights })
    }

    pub fn quadratic(h_mat: Matrix, h_vec: Vector) -> Result<Self> {
        check_square(&h_mat, h_vec.dim(), "H")?;
        if !h_mat.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::InvalidInput("H must be symmetric".into()));
        }
        if !h_mat.is_psd(PSD_TOL) {
            return Err(Error::InvalidInput("H must be positive semidefinite".into()));
        }
        Ok(Regularizer::Quadratic { h_mat, h_vec })
    }

    fn dimension(&self) -> Option<usize> {
        match self {
            Regularizer::Zero => None,
            Regularizer::WeightedL1 { weights } => Some(weights.dim()),
            Regularizer::Quadratic { h_vec, .. } => Some(h_vec.dim()),
        }
    }

    pub fn value(&self, y: &Vector) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::WeightedL1 { weights } => weights
                .as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(w, v)| w * v.abs())
                .sum(),
            Regularizer::Quadratic { h_mat, h_vec } => 0.5 * y.dot(&h_mat.mul_vec(y)) + h_vec.dot(y),
        }
    }

    /// One subgradient; the `0` element is selected at `l1` kinks.
    pub fn subgradient(&self, y: &Vector) -> Vector {
        match self {
            Regularizer::Zero => Vector::zeros(y.dim()),
            Regularizer::WeightedL1 { weights } => weights.zip_map(y, |w, v| {
                if v > 0.0 {
                    w
                } else if v < 0.0 {
                    -w
                } else {
                    0.0
                }
            }),
            Regularizer::Quadratic { h_mat, h_vec } => &h_mat.mul_vec(y) + h_vec,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Regularizer::Zero)
    }

    pub(crate) fn l1_weights(&self) -> Option<&Vector> {
        match self {
            Regularizer::WeightedL1 { weights } => Some(weights),
            _ => None,
        }
    }
}

/// Where the constants of a [`BifunctionProfile`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileSource {
    ClosedForm,
    Estimated,
}

/// Monotonicity and Lipschitz-type constants of a bifunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifunctionProfile {
    /// Strong monotonicity modulus, clipped at zero.
    pub tau: f64,
    /// Lipschitz-type constants `f(u,v) + f(v,w) ≥ f(u,w) − L1‖u−v‖² − L2‖v−w‖²`.
    pub l1: f64,
    pub l2: f64,
    /// Strongly-Lipschitz aggregate used in the contraction and
    /// ε-nonexpansiveness bounds; equals `lipschitz_f²`.
    pub m: f64,
    /// Lipschitz constant of the operator in `f(x,y) = ⟨F(x), y − x⟩ + …`.
    pub lipschitz_f: f64,
    pub cocoercivity: f64,
    /// Smallest eigenvalue of the symmetric part of the monotonicity matrix,
    /// before clipping. Negative means the bifunction is not monotone.
    pub monotonicity_margin: f64,
    pub source: ProfileSource,
}

impl BifunctionProfile {
    pub fn is_monotone(&self) -> bool {
        self.monotonicity_margin >= -1e-12
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bifunction {
    kind: BifunctionKind,
    regularizer: Regularizer,
    dim: usize,
}

fn check_square(m: &Matrix, dim: usize, name: &str) -> Result<()> {
    if m.rows() != dim || m.cols() != dim {
        return Err(Error::InvalidInput(format!(
            "{name} must be {dim}x{dim}, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

impl Bifunction {
    /// `⟨Ax + b, y − x⟩`.
    pub fn mvi_affine(a: Matrix, b: Vector) -> Result<Self> {
        check_square(&a, b.dim(), "A")?;
        Ok(Bifunction {
            dim: b.dim(),
            kind: BifunctionKind::MviAffine { a, b },
            regularizer: Regularizer::Zero,
        })
    }

    /// `⟨Px + Qy + q, y − x⟩`; `Q` must be symmetric PSD so that `f(x, ·)` is convex.
    pub fn bilinear(p: Matrix, q: Matrix, q_vec: Vector) -> Result<Self> {
        let dim = q_vec.dim();
        check_square(&p, dim, "P")?;
        check_square(&q, dim, "Q")?;
        if !q.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::InvalidInput("Q must be symmetric".into()));
        }
        if !q.is_psd(PSD_TOL) {
            return Err(Error::InvalidInput("Q must be positive semidefinite".into()));
        }
        Ok(Bifunction {
            dim,
            kind: BifunctionKind::Bilinear { p, q, q_vec },
            regularizer: Regularizer::Zero,
        })
    }

    pub fn rotation() -> Self {
        Bifunction {
            dim: 2,
            kind: BifunctionKind::Rotation,
            regularizer: Regularizer::Zero,
        }
    }

    pub fn with_regularizer(mut self, regularizer: Regularizer) -> Result<Self> {
        if let Some(d) = regularizer.dimension() {
            check_dim(self.dim, d)?;
        }
        self.regularizer = regularizer;
        Ok(self)
    }

    pub fn kind(&self) -> &BifunctionKind {
        &self.kind
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// The part of `∇_y φ(x, y)` that does not depend on `y`'s quadratic term:
    /// `Ax + b`, `Px + q`, or `Ax` for the rotation.
    pub(crate) fn operator_at(&self, x: &Vector) -> Vector {
        match &self.kind {
            BifunctionKind::MviAffine { a, b } => &a.mul_vec(x) + b,
            BifunctionKind::Bilinear { p, q_vec, .. } => &p.mul_vec(x) + q_vec,
            BifunctionKind::Rotation => rotate(x),
        }
    }

    pub(crate) fn coupling(&self, x: &Vector, y: &Vector) -> f64 {
        match &self.kind {
            BifunctionKind::Bilinear { q, .. } => (&self.operator_at(x) + &q.mul_vec(y)).dot(&(y - x)),
            // ⟨Ax, x⟩ vanishes identically, so ⟨Ax, y − x⟩ = x₂y₁ − x₁y₂. This form
            // keeps f(x,y) + f(y,x) = 0 exact in floating point.
            BifunctionKind::Rotation => x[1] * y[0] - x[0] * y[1],
            BifunctionKind::MviAffine { .. } => self.operator_at(x).dot(&(y - x)),
        }
    }

    pub(crate) fn eval(&self, x: &Vector, y: &Vector) -> f64 {
        self.coupling(x, y) + self.regularizer.value(y) - self.regularizer.value(x)
    }

    /// `f(x, y)`.
    pub fn evaluate(&self, x: &Vector, y: &Vector) -> Result<f64> {
        check_dim(self.dim, x.dim())?;
        check_dim(self.dim, y.dim())?;
        Ok(self.eval(x, y))
    }

    /// Gradient in `y` of `φ(x, ·)` plus the smooth part of `ϕ`.
    pub(crate) fn smooth_y_gradient(&self, x: &Vector, y: &Vector) -> Vector {
        let mut g = self.operator_at(x);
        if let BifunctionKind::Bilinear { q, .. } = &self.kind {
            // ∇_y ⟨Qy, y − x⟩ = Qy + Qᵀ(y − x), with Q symmetric.
            g = &(&g + &q.mul_vec(y)) + &q.mul_vec(&(y - x));
        }
        if let Regularizer::Quadratic { .. } = &self.regularizer {
            g = &g + &self.regularizer.subgradient(y);
        }
        g
    }

    pub(crate) fn y_subgradient_unchecked(&self, x: &Vector, y: &Vector) -> Vector {
        let g = self.smooth_y_gradient(x, y);
        match &self.regularizer {
            Regularizer::WeightedL1 { .. } => &g + &self.regularizer.subgradient(y),
            _ => g,
        }
    }

    /// One element of `∂_y f(x, ·)` at `y`.
    pub fn y_subgradient(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.dim())?;
        check_dim(self.dim, y.dim())?;
        Ok(self.y_subgradient_unchecked(x, y))
    }

    /// Lipschitz bound on the smooth `y`-gradient: `‖2Q‖ + ‖H‖`.
    pub(crate) fn y_curvature(&self) -> f64 {
        let coupling = match &self.kind {
            BifunctionKind::Bilinear { q, .. } => 2.0 * q.spectral_norm(),
            _ => 0.0,
        };
        let reg = match &self.regularizer {
            Regularizer::Quadratic { h_mat, .. } => h_mat.spectral_norm(),
            _ => 0.0,
        };
        coupling + reg
    }

    /// Whether `φ(x, ·)` is affine in `y`.
    pub(crate) fn coupling_is_linear_in_y(&self) -> bool {
        match &self.kind {
            BifunctionKind::Bilinear { q, .. } => q.spectral_norm() == 0.0,
            _ => true,
        }
    }

    /// Matrix `M` with `f(x,y) + f(y,x) = −⟨M(x−y), x−y⟩`.
    fn monotonicity_matrix(&self) -> Matrix {
        match &self.kind {
            BifunctionKind::MviAffine { a, .. } => a.clone(),
            BifunctionKind::Bilinear { p, q, .. } => p.sub(q),
            BifunctionKind::Rotation => Matrix::rotation(),
        }
    }

    /// Matrix `D` with `f(u,v) + f(v,w) − f(u,w) = ⟨D(u−v), v−w⟩`.
    fn three_point_matrix(&self) -> Matrix {
        match &self.kind {
            BifunctionKind::MviAffine { a, .. } => a.clone(),
            BifunctionKind::Bilinear { p, q, .. } => p.sub(&q.transpose()),
            BifunctionKind::Rotation => Matrix::rotation(),
        }
    }

    /// Exact constants derived from the structure of the coupling term.
    pub fn closed_form_profile(&self) -> BifunctionProfile {
        let margin = self.monotonicity_matrix().min_symmetric_eigenvalue();
        let tau = margin.max(0.0);
        let d_norm = self.three_point_matrix().spectral_norm();
        let cocoercivity = match &self.kind {
            BifunctionKind::MviAffine { a, .. } if d_norm > 0.0 => {
                if a.is_symmetric(SYMMETRY_TOL) && margin >= -PSD_TOL {
                    // Symmetric PSD: 1/λ_max exactly.
                    1.0 / a.symmetric_eigenvalues().into_iter().fold(0.0, f64::max)
                } else {
                    tau / (d_norm * d_norm)
                }
            }
            _ => 0.0,
        };
        BifunctionProfile {
            tau,
            l1: d_norm / 2.0,
            l2: d_norm / 2.0,
            m: d_norm * d_norm,
            lipschitz_f: d_norm,
            cocoercivity,
            monotonicity_margin: margin,
            source: ProfileSource::ClosedForm,
        }
    }

    /// The strongly monotone bifunction `g(z, y) = f(z, y) + (1/2λ)⟨y − z, z − anchor⟩`
    /// whose equilibrium is the resolvent point of `f` at `anchor`.
    pub(crate) fn regularized(&self, anchor: &Vector, lambda: f64) -> Bifunction {
        let c = 1.0 / (2.0 * lambda);
        let shift = Matrix::identity(self.dim).scale(c);
        let offset = (-c) * anchor;
        let kind = match &self.kind {
            BifunctionKind::MviAffine { a, b } => BifunctionKind::MviAffine {
                a: a.add(&shift),
                b: b + &offset,
            },
            BifunctionKind::Rotation => BifunctionKind::MviAffine {
                a: Matrix::rotation().add(&shift),
                b: offset,
            },
            BifunctionKind::Bilinear { p, q, q_vec } => BifunctionKind::Bilinear {
                p: p.add(&shift),
                q: q.clone(),
                q_vec: q_vec + &offset,
            },
        };
        Bifunction {
            kind,
            regularizer: self.regularizer.clone(),
            dim: self.dim,
        }
    }
}

/// `Ax` for the rotation generator, i.e. `(x₂, −x₁)`.
fn rotate(x: &Vector) -> Vector {
    Vector::from_raw(vec![x[1], -x[0]])
}
