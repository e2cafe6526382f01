//! The three point-to-point maps whose fixed points are the equilibria:
//!
//! * `B_λ(x) = argmin { λ f(x, y) + ½‖y − x‖² : y ∈ S }`, the proximal mapping;
//! * `T_λ(x) = argmin { λ f(B_λ(x), y) + ½‖y − x‖² : y ∈ S }`, the composite
//!   (extragradient-style) mapping;
//! * `R_λ(x)`, the unique `z ∈ S` with `f(z, y) + (1/2λ)⟨y − z, z − x⟩ ≥ 0`
//!   for all `y ∈ S`, the resolvent.
//!
//! Each evaluation returns a [`ProxEvaluation`] with solver diagnostics so that
//! numerical error can be told apart from a failing inequality.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bifunction::{Bifunction, BifunctionKind};
use crate::error::{Error, Result};
use crate::geometry::{check_dim, ConvexSet, SetKind, Vector};
use crate::linalg::Matrix;
use crate::subproblem::{solve_prox_subproblem, DEFAULT_TOL, MAX_INNER_ITERATIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MapKind {
    B,
    T,
    R,
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MapKind::B => "B",
            MapKind::T => "T",
            MapKind::R => "R",
        };
        f.write_str(s)
    }
}

impl FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" | "b" => Ok(MapKind::B),
            "T" | "t" => Ok(MapKind::T),
            "R" | "r" => Ok(MapKind::R),
            other => Err(Error::InvalidInput(format!("unknown map `{other}`; expected B, T or R"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxEvaluation {
    pub output: Vector,
    /// `‖output − input‖`.
    pub residual_to_input: f64,
    pub subproblem_residual: f64,
    pub inner_iterations: usize,
    pub map_kind: MapKind,
    pub lambda: f64,
}

/// `B_λ(x)`.
pub fn prox_b(f: &Bifunction, set: &ConvexSet, x: &Vector, lambda: f64, tol: f64) -> Result<ProxEvaluation> {
    let sol = solve_prox_subproblem(f, set, x, x, lambda, tol)?;
    Ok(ProxEvaluation {
        residual_to_input: sol.minimizer.distance(x),
        output: sol.minimizer,
        subproblem_residual: sol.optimality_residual,
        inner_iterations: sol.inner_iterations,
        map_kind: MapKind::B,
        lambda,
    })
}

/// `T_λ(x)`: a second proximal step anchored at `x` with the bifunction frozen at `B_λ(x)`.
pub fn prox_t(f: &Bifunction, set: &ConvexSet, x: &Vector, lambda: f64, tol: f64) -> Result<ProxEvaluation> {
    let first = prox_b(f, set, x, lambda, tol)?;
    let second = solve_prox_subproblem(f, set, &first.output, x, lambda, tol)?;
    Ok(ProxEvaluation {
        residual_to_input: second.minimizer.distance(x),
        output: second.minimizer,
        subproblem_residual: first.subproblem_residual.max(second.optimality_residual),
        inner_iterations: first.inner_iterations + second.inner_iterations,
        map_kind: MapKind::T,
        lambda,
    })
}

/// `R_λ(x)`, the resolvent point.
///
/// The regularized bifunction `g(z, y) = f(z, y) + (1/2λ)⟨y − z, z − x⟩` is
/// strongly monotone with modulus `τ + 1/(2λ)`. Its equilibrium is the fixed
/// point of `B_μ` for `g`, found by Picard iteration with `μ = τ_g / M_g`,
/// the midpoint of the contraction range `(0, 2τ_g/M_g)`. Affine problems
/// on the whole space use `z = (I + 2λK)⁻¹(x − 2λc)` directly.
pub fn prox_r(f: &Bifunction, set: &ConvexSet, x: &Vector, lambda: f64, tol: f64) -> Result<ProxEvaluation> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    check_dim(f.dimension(), x.dim())?;
    check_dim(f.dimension(), set.dimension())?;
    let profile = f.closed_form_profile();
    if !profile.is_monotone() {
        return Err(Error::NotMonotone {
            min_eigenvalue: profile.monotonicity_margin,
        });
    }

    if let Some(z) = resolvent_closed_form(f, set, x, lambda)? {
        return Ok(ProxEvaluation {
            residual_to_input: z.distance(x),
            output: z,
            subproblem_residual: 0.0,
            inner_iterations: 0,
            map_kind: MapKind::R,
            lambda,
        });
    }

    let g = f.regularized(x, lambda);
    let g_profile = g.closed_form_profile();
    let mu = g_profile.tau / g_profile.m;
    // Contraction factor bound √(1 − 2μτ + μ²M) = √(1 − τ²/M).
    let rho = (1.0 - g_profile.tau * g_profile.tau / g_profile.m).max(0.0).sqrt();
    let inner_tol = (0.1 * tol).max(1e-14);
    let mut z = set.project_unchecked(x);
    let mut inner = 0;
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_INNER_ITERATIONS {
        let next = solve_prox_subproblem(&g, set, &z, &z, mu, inner_tol)?;
        inner += next.inner_iterations + 1;
        last_step = next.minimizer.distance(&z);
        z = next.minimizer;
        // Distance to the fixed point is at most ρ/(1 − ρ) times the last step.
        if last_step * rho / (1.0 - rho) <= 0.1 * tol || last_step == 0.0 {
            return Ok(ProxEvaluation {
                residual_to_input: z.distance(x),
                output: z,
                subproblem_residual: last_step,
                inner_iterations: inner,
                map_kind: MapKind::R,
                lambda,
            });
        }
    }
    Err(Error::NotConverged {
        stage: "resolvent Picard iteration",
        iterations: MAX_INNER_ITERATIONS,
        residual: last_step,
    })
}

fn resolvent_closed_form(f: &Bifunction, set: &ConvexSet, x: &Vector, lambda: f64) -> Result<Option<Vector>> {
    if !matches!(set.kind(), SetKind::WholeSpace) || !f.regularizer().is_zero() {
        return Ok(None);
    }
    // The equilibrium condition reduces to K z + c + (z − x)/(2λ) = 0.
    let (k, c) = match f.kind() {
        BifunctionKind::MviAffine { a, b } => (a.clone(), b.clone()),
        BifunctionKind::Rotation => (Matrix::rotation(), Vector::zeros(2)),
        BifunctionKind::Bilinear { p, q, q_vec } => (p.add(q), q_vec.clone()),
    };
    let n = f.dimension();
    let system = Matrix::identity(n).add(&k.scale(2.0 * lambda));
    let rhs = x.axpy(-2.0 * lambda, &c);
    Ok(Some(system.solve(&rhs)?))
}

/// A map of fixed kind and parameter, bound to a problem.
#[derive(Debug, Clone, Copy)]
pub struct ProxMap<'a> {
    pub f: &'a Bifunction,
    pub set: &'a ConvexSet,
    pub kind: MapKind,
    pub lambda: f64,
    pub tol: f64,
}

impl<'a> ProxMap<'a> {
    pub fn new(f: &'a Bifunction, set: &'a ConvexSet, kind: MapKind, lambda: f64) -> Self {
        ProxMap {
            f,
            set,
            kind,
            lambda,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn evaluate(&self, x: &Vector) -> Result<ProxEvaluation> {
        match self.kind {
            MapKind::B => prox_b(self.f, self.set, x, self.lambda, self.tol),
            MapKind::T => prox_t(self.f, self.set, x, self.lambda, self.tol),
            MapKind::R => prox_r(self.f, self.set, x, self.lambda, self.tol),
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        self.evaluate(x).map(|e| e.output)
    }
}
