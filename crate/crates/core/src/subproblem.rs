//! The strongly convex program behind every proximal evaluation,
//!
//! ```text
//! min { λ f(x, y) + ½‖y − anchor‖² : y ∈ S },
//! ```
//!
//! and the gap function `g(x) = −min { f(x, y) : y ∈ S }` used to certify
//! solutions.
//!
//! Closed forms are used when the coupling term is affine in `y` or the whole
//! program is an unconstrained quadratic. Everything else goes through a
//! fixed-step proximal-gradient loop whose backward step is the exact
//! projection, or a Dykstra-type splitting when an `l1` term meets a set.

use crate::bifunction::{Bifunction, Regularizer};
use crate::error::{Error, Result};
use crate::geometry::{check_dim, ConvexSet, SetKind, Vector};
use crate::linalg::Matrix;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_INNER_ITERATIONS: usize = 100_000;

const DYKSTRA_MAX_ITER: usize = 10_000;
const DYKSTRA_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub minimizer: Vector,
    /// Norm of the projected-gradient map at `minimizer`.
    pub optimality_residual: f64,
    pub inner_iterations: usize,
    pub used_closed_form: bool,
}

fn validate(f: &Bifunction, set: &ConvexSet, x: &Vector, anchor: &Vector, lambda: f64, tol: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    check_dim(f.dimension(), set.dimension())?;
    check_dim(f.dimension(), x.dim())?;
    check_dim(f.dimension(), anchor.dim())?;
    if !x.is_finite() || !anchor.is_finite() {
        return Err(Error::InvalidInput("subproblem inputs must be finite".into()));
    }
    Ok(())
}

/// Minimizer of `y ↦ λ f(x, y) + ½‖y − anchor‖²` over `set`.
///
/// With `anchor = x` this is the proximal mapping at `x`; the composite map
/// freezes the first argument at an earlier proximal point and keeps the
/// quadratic centred at the original input.
pub fn solve_prox_subproblem(
    f: &Bifunction,
    set: &ConvexSet,
    x: &Vector,
    anchor: &Vector,
    lambda: f64,
    tol: f64,
) -> Result<SubproblemSolution> {
    validate(f, set, x, anchor, lambda, tol)?;
    if let Some(y) = closed_form(f, set, x, anchor, lambda)? {
        let residual = gradient_map_norm(f, set, x, anchor, lambda, &y, 1.0, true);
        if residual <= tol {
            return Ok(SubproblemSolution {
                minimizer: y,
                optimality_residual: residual,
                inner_iterations: 0,
                used_closed_form: true,
            });
        }
    }
    generic(f, set, x, anchor, lambda, tol, anchor)
}

/// Same program, always solved by the iterative path. Used to cross-check the
/// closed forms.
pub fn solve_prox_subproblem_generic(
    f: &Bifunction,
    set: &ConvexSet,
    x: &Vector,
    anchor: &Vector,
    lambda: f64,
    tol: f64,
) -> Result<SubproblemSolution> {
    validate(f, set, x, anchor, lambda, tol)?;
    generic(f, set, x, anchor, lambda, tol, anchor)
}

/// Closed-form minimizer when one exists:
///
/// * coupling affine in `y`, `ϕ = 0`: `P_S(anchor − λ c)`;
/// * coupling affine in `y`, weighted `l1`, box or whole space: soft-threshold then clamp;
/// * whole space, smooth quadratic program: the stationarity linear system.
pub fn closed_form_prox(
    f: &Bifunction,
    set: &ConvexSet,
    x: &Vector,
    anchor: &Vector,
    lambda: f64,
) -> Result<Option<Vector>> {
    validate(f, set, x, anchor, lambda, DEFAULT_TOL)?;
    closed_form(f, set, x, anchor, lambda)
}

fn closed_form(f: &Bifunction, set: &ConvexSet, x: &Vector, anchor: &Vector, lambda: f64) -> Result<Option<Vector>> {
    let separable = matches!(set.kind(), SetKind::WholeSpace | SetKind::Box { .. });
    if f.coupling_is_linear_in_y() {
        let c = f.operator_at(x);
        let center = anchor.axpy(-lambda, &c);
        match f.regularizer() {
            Regularizer::Zero => return Ok(Some(set.project_unchecked(&center))),
            Regularizer::WeightedL1 { weights } if separable => {
                let t = lambda * weights;
                return Ok(Some(set.project_unchecked(&soft_threshold(&center, &t))));
            }
            _ => {}
        }
    }
    if matches!(set.kind(), SetKind::WholeSpace) && f.regularizer().l1_weights().is_none() {
        // Gradient of the objective is affine in y: (I + λK) y = anchor − λ r.
        let n = f.dimension();
        let zero = Vector::zeros(n);
        let r = f.smooth_y_gradient(x, &zero);
        let mut k_cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = &f.smooth_y_gradient(x, &Vector::from_raw(e)) - &r;
            k_cols.push(col);
        }
        let system = Matrix::from_rows(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| f64::from(i == j) + lambda * k_cols[j][i])
                        .collect()
                })
                .collect(),
        )?;
        let rhs = anchor.axpy(-lambda, &r);
        return Ok(Some(system.solve(&rhs)?));
    }
    Ok(None)
}

/// Componentwise `sign(v) · max(|v| − t, 0)`.
pub(crate) fn soft_threshold(v: &Vector, t: &Vector) -> Vector {
    v.zip_map(t, |a, t| a.signum() * (a.abs() - t).max(0.0))
}

/// Proximal map of `Σ tᵢ|yᵢ| + ι_S` computed by the Dykstra-like splitting of
/// Bauschke and Combettes, which only needs each prox separately.
pub(crate) fn dykstra_l1_prox(set: &ConvexSet, t: &Vector, z: &Vector) -> Vector {
    let n = z.dim();
    let mut x = z.clone();
    let mut p = Vector::zeros(n);
    let mut q = Vector::zeros(n);
    let scale = 1.0 + z.norm();
    let mut y = set.project_unchecked(&x);
    for _ in 0..DYKSTRA_MAX_ITER {
        y = set.project_unchecked(&(&x + &p));
        p = &(&x + &p) - &y;
        let x_next = soft_threshold(&(&y + &q), t);
        q = &(&y + &q) - &x_next;
        let moved = x_next.distance(&x);
        let gap = x_next.distance(&y);
        x = x_next;
        if moved <= DYKSTRA_TOL * scale && gap <= DYKSTRA_TOL * scale {
            break;
        }
    }
    y
}

/// Backward step of the proximal-gradient loop: prox of `t·ϕ_l1 + ι_S`.
fn backward(set: &ConvexSet, l1: Option<&Vector>, step_weight: f64, v: &Vector, fast: bool) -> Vector {
    match l1 {
        None => set.project_unchecked(v),
        Some(w) => {
            let t = step_weight * w;
            match set.kind() {
                SetKind::WholeSpace | SetKind::Box { .. } if fast => set.project_unchecked(&soft_threshold(v, &t)),
                _ => dykstra_l1_prox(set, &t, v),
            }
        }
    }
}

/// `‖y − prox_{s(λϕ_l1 + ι_S)}(y − s∇h(y))‖ / s`, with `h` the smooth part of
/// the subproblem objective.
#[allow(clippy::too_many_arguments)]
fn gradient_map_norm(
    f: &Bifunction,
    set: &ConvexSet,
    x: &Vector,
    anchor: &Vector,
    lambda: f64,
    y: &Vector,
    step: f64,
    fast: bool,
) -> f64 {
    let grad = &(lambda * &f.smooth_y_gradient(x, y)) + &(y - anchor);
    let next = backward(set, f.regularizer().l1_weights(), step * lambda, &y.axpy(-step, &grad), fast);
    y.distance(&next) / step
}

fn generic(
    f: &Bifunction,
    set: &ConvexSet,
    x: &Vector,
    anchor: &Vector,
    lambda: f64,
    tol: f64,
    start: &Vector,
) -> Result<SubproblemSolution> {
    // The objective is 1-strongly convex with (1 + λΛ)-Lipschitz smooth gradient.
    // Half the textbook step keeps this loop from reproducing the affine closed
    // form in a single step.
    let step = 0.5 / (1.0 + lambda * f.y_curvature());
    let l1 = f.regularizer().l1_weights();
    let mut y = set.project_unchecked(start);
    let mut best = f64::INFINITY;
    for k in 1..=MAX_INNER_ITERATIONS {
        let grad = &(lambda * &f.smooth_y_gradient(x, &y)) + &(&y - anchor);
        let next = backward(set, l1, step * lambda, &y.axpy(-step, &grad), false);
        let residual = y.distance(&next) / step;
        if !residual.is_finite() {
            break;
        }
        best = best.min(residual);
        if residual <= tol {
            return Ok(SubproblemSolution {
                minimizer: y,
                optimality_residual: residual,
                inner_iterations: k,
                used_closed_form: false,
            });
        }
        y = next;
    }
    Err(Error::NotConverged {
        stage: "prox subproblem",
        iterations: MAX_INNER_ITERATIONS,
        residual: best,
    })
}

/// Gap function `g(x) = −min { f(x, y) : y ∈ S }`.
///
/// `g ≥ 0` on `S` and vanishes exactly at equilibria. Linear programs over the
/// supported sets are solved exactly; everything else uses accelerated
/// proximal gradient with restarts.
pub fn gap_value(f: &Bifunction, set: &ConvexSet, x: &Vector, tol: f64) -> Result<f64> {
    check_dim(f.dimension(), set.dimension())?;
    check_dim(f.dimension(), x.dim())?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if !set.contains(x, 1e-9) {
        return Err(Error::InvalidInput("gap function requires a point of the set".into()));
    }
    if let Some(min_value) = exact_linear_minimum(f, set, x)? {
        return Ok(-min_value);
    }
    let min_value = accelerated_minimum(f, set, x, tol)?;
    Ok(-min_value)
}

fn unbounded() -> Error {
    Error::Unbounded("f(x, ·) decreases without bound on the whole space; certify on a bounded set".into())
}

/// `min_y f(x, y)` when `f(x, ·)` is affine (plus an `l1` term on separable or
/// simplex sets).
fn exact_linear_minimum(f: &Bifunction, set: &ConvexSet, x: &Vector) -> Result<Option<f64>> {
    if !f.coupling_is_linear_in_y() {
        return Ok(None);
    }
    let c = f.operator_at(x);
    let reg = f.regularizer();
    let weights = match reg {
        Regularizer::Zero => None,
        Regularizer::WeightedL1 { weights } => Some(weights),
        Regularizer::Quadratic { .. } => return Ok(None),
    };
    let n = x.dim();
    let w = |i: usize| weights.map_or(0.0, |w| w[i]);
    // min over y of ⟨c, y⟩ + ϕ(y)
    let inner_min = match set.kind() {
        SetKind::WholeSpace => {
            if (0..n).any(|i| c[i].abs() > w(i)) {
                return Err(unbounded());
            }
            0.0
        }
        SetKind::Box { lower, upper } => (0..n)
            .map(|i| {
                let piece = |y: f64| c[i] * y + w(i) * y.abs();
                let mut m = piece(lower[i]).min(piece(upper[i]));
                if lower[i] <= 0.0 && upper[i] >= 0.0 {
                    m = m.min(0.0);
                }
                m
            })
            .sum(),
        SetKind::Simplex => (0..n).map(|i| c[i] + w(i)).fold(f64::INFINITY, f64::min),
        SetKind::Ball { center, radius } => {
            if weights.is_some() {
                return Ok(None);
            }
            c.dot(center) - radius * c.norm()
        }
    };
    Ok(Some(inner_min - c.dot(x) - reg.value(x)))
}

fn accelerated_minimum(f: &Bifunction, set: &ConvexSet, x: &Vector, tol: f64) -> Result<f64> {
    let curvature = f.y_curvature().max(1e-12);
    let step = 1.0 / curvature;
    let l1 = f.regularizer().l1_weights();
    let diameter = set
        .bounding_box()
        .map(|(lo, hi)| lo.distance(&hi))
        .unwrap_or(1.0);
    let prox_step = |y: &Vector| {
        let g = f.smooth_y_gradient(x, y);
        backward(set, l1, step, &y.axpy(-step, &g), true)
    };
    let start = set.project_unchecked(x);
    let mut best = f.eval(x, &start);
    let mut y = start.clone();
    let mut z = start;
    let mut momentum = 1.0_f64;
    let blowup = 1e8 * (1.0 + x.norm());
    for _ in 0..MAX_INNER_ITERATIONS {
        let next = prox_step(&z);
        let mapping = z.distance(&next) / step;
        let next_value = f.eval(x, &next);
        best = best.min(next_value);
        if next.norm() > blowup || !next_value.is_finite() {
            return Err(unbounded());
        }
        if mapping * diameter <= 0.1 * tol {
            return Ok(best);
        }
        if (&z - &next).dot(&(&next - &y)) > 0.0 {
            // Gradient restart: the momentum direction opposes descent.
            momentum = 1.0;
            z = next.clone();
            y = next;
            continue;
        }
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        z = next.axpy(beta, &(&next - &y));
        y = next;
        momentum = next_momentum;
    }
    Err(Error::NotConverged {
        stage: "gap function",
        iterations: MAX_INNER_ITERATIONS,
        residual: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunction::Regularizer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    fn plane() -> ConvexSet {
        ConvexSet::whole_space(2).unwrap()
    }

    fn square() -> ConvexSet {
        ConvexSet::cube(2, -1.0, 1.0).unwrap()
    }

    /// Dense grid search with local refinement, independent of every solver path.
    fn grid_minimizer(objective: impl Fn(f64, f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let mut h = 1e-3;
        let steps = ((hi - lo) / h).round() as usize;
        for i in 0..=steps {
            for j in 0..=steps {
                let (a, b) = (lo + i as f64 * h, lo + j as f64 * h);
                let val = objective(a, b);
                if val < best.0 {
                    best = (val, a, b);
                }
            }
        }
        while h > 1e-12 {
            let (_, a, b) = best;
            for (da, db) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                let val = objective(a + da, b + db);
                if val < best.0 {
                    best = (val, a + da, b + db);
                }
            }
            if best.1 == a && best.2 == b {
                h *= 0.5;
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn rotation_matches_explicit_formula() {
        let rot = Bifunction::rotation();
        let x = v(&[1.0, 0.0]);
        let sol = solve_prox_subproblem(&rot, &plane(), &x, &x, 0.5, DEFAULT_TOL).unwrap();
        assert!(sol.used_closed_form);
        assert_eq!(sol.minimizer, v(&[1.0, 0.5]));
    }

    #[test]
    fn identity_operator_against_grid_oracle() {
        let f = Bifunction::mvi_affine(Matrix::identity(2), Vector::zeros(2)).unwrap();
        let x = v(&[2.0, 0.0]);
        let lambda = 0.5;
        let (ga, gb) = grid_minimizer(
            |a, b| lambda * f.eval(&x, &v(&[a, b])) + 0.5 * ((a - 2.0).powi(2) + b * b),
            -3.0,
            3.0,
        );
        assert!((ga - 1.0).abs() < 1e-6 && gb.abs() < 1e-6);
        let sol = solve_prox_subproblem(&f, &plane(), &x, &x, lambda, DEFAULT_TOL).unwrap();
        assert!(sol.minimizer.distance(&v(&[1.0, 0.0])) < 1e-12);
    }

    #[test]
    fn solution_is_fixed() {
        let f = Bifunction::bilinear(Matrix::diagonal(&[3.0, 4.0]), Matrix::identity(2), Vector::zeros(2)).unwrap();
        let x = Vector::zeros(2);
        for lambda in [0.01, 0.3, 5.0] {
            let sol = solve_prox_subproblem(&f, &square(), &x, &x, lambda, DEFAULT_TOL).unwrap();
            assert!(sol.minimizer.norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_lambda_and_tolerance() {
        let rot = Bifunction::rotation();
        let x = v(&[1.0, 0.0]);
        assert!(solve_prox_subproblem(&rot, &plane(), &x, &x, 0.0, 1e-10).is_err());
        assert!(solve_prox_subproblem(&rot, &plane(), &x, &x, -1.0, 1e-10).is_err());
        assert!(solve_prox_subproblem(&rot, &plane(), &x, &x, 1.0, 0.0).is_err());
    }

    fn instances() -> Vec<(Bifunction, ConvexSet)> {
        let skew = Matrix::from_rows(vec![vec![1.0, 0.5], vec![-0.5, 1.0]]).unwrap();
        let l1 = Regularizer::weighted_l1(v(&[0.2, 0.4])).unwrap();
        let bl = Bifunction::bilinear(
            Matrix::from_rows(vec![vec![3.0, 1.0], vec![0.0, 4.0]]).unwrap(),
            Matrix::from_rows(vec![vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
            v(&[0.1, -0.2]),
        )
        .unwrap();
        vec![
            (Bifunction::rotation(), plane()),
            (Bifunction::rotation(), ConvexSet::ball(v(&[0.2, 0.1]), 1.0).unwrap()),
            (Bifunction::mvi_affine(skew.clone(), v(&[0.3, -0.1])).unwrap(), square()),
            (Bifunction::mvi_affine(skew.clone(), v(&[0.3, -0.1])).unwrap().with_regularizer(l1.clone()).unwrap(), square()),
            (Bifunction::mvi_affine(skew.clone(), v(&[0.3, -0.1])).unwrap().with_regularizer(l1.clone()).unwrap(), ConvexSet::ball(v(&[0.5, 0.0]), 1.0).unwrap()),
            (Bifunction::mvi_affine(skew, v(&[0.3, -0.1])).unwrap().with_regularizer(l1).unwrap(), ConvexSet::simplex(2).unwrap()),
            (bl.clone(), plane()),
            (bl.clone(), square()),
            (bl, ConvexSet::simplex(2).unwrap()),
        ]
    }

    #[test]
    fn starting_point_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (f, set) in instances() {
            for _ in 0..20 {
                let x = v(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
                let lambda = rng.random_range(0.05..2.0);
                let far = v(&[rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]);
                let a = generic(&f, &set, &x, &x, lambda, DEFAULT_TOL, &x).unwrap();
                let b = generic(&f, &set, &x, &x, lambda, DEFAULT_TOL, &far).unwrap();
                assert!(a.minimizer.distance(&b.minimizer) <= 10.0 * DEFAULT_TOL, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn optimality_and_three_point_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (f, set) in instances() {
            for _ in 0..20 {
                let x = set.project(&v(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])).unwrap();
                let lambda = rng.random_range(0.05..2.0);
                let sol = solve_prox_subproblem(&f, &set, &x, &x, lambda, DEFAULT_TOL).unwrap();
                let y = &sol.minimizer;
                assert!(set.contains(y, 1e-12));
                for _ in 0..20 {
                    let z = set.project(&v(&[rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])).unwrap();
                    // ⟨B(x) − x, B(x) − z⟩ ≤ λ[f(x,z) − f(x,B(x))]
                    let lhs = (y - &x).dot(&(y - &z));
                    let rhs = lambda * (f.eval(&x, &z) - f.eval(&x, y));
                    assert!(lhs <= rhs + 1e-8, "{lhs} > {rhs}");
                    if f.regularizer().is_zero() {
                        let g = f.y_subgradient(&x, y).unwrap();
                        let vi = (&(lambda * &g) + &(y - &x)).dot(&(&z - y));
                        assert!(vi >= -1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_and_generic_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        for (f, set) in instances() {
            for _ in 0..30 {
                let x = v(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
                let anchor = v(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
                let lambda = rng.random_range(0.05..3.0);
                if let Some(cf) = closed_form_prox(&f, &set, &x, &anchor, lambda).unwrap() {
                    let gen = solve_prox_subproblem_generic(&f, &set, &x, &anchor, lambda, DEFAULT_TOL).unwrap();
                    assert!(cf.distance(&gen.minimizer) <= 1e-8);
                    checked += 1;
                }
            }
        }
        assert!(checked >= 100);
    }

    #[test]
    fn dykstra_matches_clamped_soft_threshold_on_boxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let set = ConvexSet::boxed(v(&[-1.0, 0.2, -3.0]), v(&[0.5, 2.0, -1.0])).unwrap();
        for _ in 0..500 {
            let z = v(&[rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]);
            let t = v(&[rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]);
            let fast = set.project(&soft_threshold(&z, &t)).unwrap();
            let slow = dykstra_l1_prox(&set, &t, &z);
            assert!(fast.distance(&slow) < 1e-12);
        }
    }

    #[test]
    fn gap_examples() {
        let rot = Bifunction::rotation();
        assert_eq!(gap_value(&rot, &square(), &v(&[0.0, 0.0]), 1e-9).unwrap(), 0.0);
        // Vertex enumeration oracle: −min over the four corners of f((1,0), y).
        let x = v(&[1.0, 0.0]);
        let corners = [[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]];
        let oracle = -corners.iter().map(|c| rot.eval(&x, &v(c))).fold(f64::INFINITY, f64::min);
        assert_eq!(oracle, 1.0);
        assert!((gap_value(&rot, &square(), &x, 1e-9).unwrap() - oracle).abs() < 1e-12);

        let bl = Bifunction::bilinear(Matrix::diagonal(&[2.0, 2.0]), Matrix::identity(2), Vector::zeros(2)).unwrap();
        assert!(gap_value(&bl, &square(), &Vector::zeros(2), 1e-9).unwrap().abs() < 1e-9);
    }

    #[test]
    fn gap_accelerated_matches_grid() {
        let bl = Bifunction::bilinear(
            Matrix::from_rows(vec![vec![3.0, 1.0], vec![0.0, 4.0]]).unwrap(),
            Matrix::from_rows(vec![vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
            v(&[0.1, -0.2]),
        )
        .unwrap();
        let x = v(&[0.4, -0.7]);
        let gap = gap_value(&bl, &square(), &x, 1e-10).unwrap();
        let (a, b) = grid_minimizer(
            |a, b| bl.eval(&x, &v(&[a.clamp(-1.0, 1.0), b.clamp(-1.0, 1.0)])),
            -1.0,
            1.0,
        );
        let oracle = -bl.eval(&x, &v(&[a.clamp(-1.0, 1.0), b.clamp(-1.0, 1.0)]));
        assert!((gap - oracle).abs() < 1e-8, "{gap} vs {oracle}");
        assert!(gap > 0.0);
    }

    #[test]
    fn gap_on_whole_space_linear_is_unbounded() {
        let rot = Bifunction::rotation();
        assert!(matches!(gap_value(&rot, &plane(), &v(&[1.0, 1.0]), 1e-9), Err(Error::Unbounded(_))));
        assert_eq!(gap_value(&rot, &plane(), &Vector::zeros(2), 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn gap_rejects_points_outside_set() {
        let rot = Bifunction::rotation();
        assert!(gap_value(&rot, &square(), &v(&[2.0, 0.0]), 1e-9).is_err());
    }
}
