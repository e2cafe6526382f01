//! Bundled instances with exact constants and known solutions, plus loading
//! and certification of user-supplied problems.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bifunction::{Bifunction, BifunctionKind, BifunctionProfile, Regularizer};
use crate::error::{Error, Result};
use crate::format::ProblemFile;
use crate::geometry::{check_dim, ConvexSet, Vector};
use crate::iteration::{run_fixed_point, IterationConfig, IterationTrace, RunStatus, TraceSummary};
use crate::linalg::Matrix;
use crate::proxmaps::prox_b;
use crate::subproblem::{gap_value, DEFAULT_TOL};

pub const BUILTIN_NAMES: [&str; 5] = [
    "rotation",
    "bilinear-strong",
    "mvi-cocoercive",
    "mvi-l1",
    "mvi-monotone-skew",
];

/// Gap threshold for accepting a point as a solution on a bounded set.
pub const GAP_TOL: f64 = 1e-6;
/// Fixed-point residual threshold for accepting a solution.
pub const FIXED_POINT_TOL: f64 = 1e-8;
/// The `λ` at which solutions are certified through `B_λ`.
pub const CERTIFY_LAMBDA: f64 = 0.1;

/// An open or half-open interval `(0, upper)` / `(0, upper]` of admissible `λ`;
/// `upper = None` means every positive `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRange {
    pub upper: Option<f64>,
    pub upper_inclusive: bool,
}

impl LambdaRange {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda > 0.0
            && match self.upper {
                None => true,
                Some(u) if self.upper_inclusive => lambda <= u,
                Some(u) => lambda < u,
            }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub name: String,
    pub bifunction: Bifunction,
    pub set: ConvexSet,
    pub profile: BifunctionProfile,
    pub known_solution: Option<Vector>,
    /// Keys: `b-quasicontraction`, `b-nonexpansive`, `t-quasi-nonexpansive`,
    /// `r-firmly-nonexpansive`. A key is present only when its hypotheses hold.
    pub lambda_recommendations: BTreeMap<String, LambdaRange>,
}

/// How well a point solves an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `−min_y f(x, y)`; absent on unbounded sets.
    pub gap: Option<f64>,
    /// `‖B_λ(x) − x‖` at `λ = 0.1`.
    pub fixed_point_residual: f64,
}

impl Certificate {
    /// Gap within [`GAP_TOL`] on bounded sets, fixed-point residual within
    /// [`FIXED_POINT_TOL`] otherwise.
    pub fn accepts(&self) -> bool {
        match self.gap {
            Some(g) => g <= GAP_TOL,
            None => self.fixed_point_residual <= FIXED_POINT_TOL,
        }
    }
}

/// Certifies `x` as a solution of the problem `(f, S)`.
pub fn certify(f: &Bifunction, set: &ConvexSet, x: &Vector) -> Result<Certificate> {
    check_dim(f.dimension(), x.dim())?;
    let gap = if set.is_bounded() {
        Some(gap_value(f, set, x, 1e-9)?)
    } else {
        None
    };
    let fixed_point_residual = prox_b(f, set, x, CERTIFY_LAMBDA, DEFAULT_TOL)?.residual_to_input;
    Ok(Certificate {
        gap,
        fixed_point_residual,
    })
}

fn recommendations(f: &Bifunction, profile: &BifunctionProfile) -> BTreeMap<String, LambdaRange> {
    let mut out = BTreeMap::new();
    if profile.tau > profile.l1 && profile.l2 > 0.0 {
        out.insert(
            "b-quasicontraction".into(),
            LambdaRange {
                upper: Some(1.0 / (2.0 * profile.l2)),
                upper_inclusive: false,
            },
        );
    }
    if matches!(f.kind(), BifunctionKind::MviAffine { .. }) && profile.cocoercivity > 0.0 {
        out.insert(
            "b-nonexpansive".into(),
            LambdaRange {
                upper: Some(2.0 * profile.cocoercivity),
                upper_inclusive: true,
            },
        );
    }
    if profile.is_monotone() {
        let l = profile.l1.max(profile.l2);
        out.insert(
            "t-quasi-nonexpansive".into(),
            LambdaRange {
                upper: (l > 0.0).then(|| 1.0 / (2.0 * l)),
                upper_inclusive: false,
            },
        );
        out.insert(
            "r-firmly-nonexpansive".into(),
            LambdaRange {
                upper: None,
                upper_inclusive: false,
            },
        );
    }
    out
}

impl ProblemInstance {
    /// Builds and validates an instance; a claimed solution must pass
    /// [`certify`] with both its gap (on bounded sets) and its fixed-point residual.
    pub fn new(
        name: impl Into<String>,
        bifunction: Bifunction,
        set: ConvexSet,
        known_solution: Option<Vector>,
    ) -> Result<Self> {
        check_dim(bifunction.dimension(), set.dimension())?;
        if let Some(x) = &known_solution {
            check_dim(bifunction.dimension(), x.dim())?;
            if !set.contains(x, 1e-9) {
                return Err(Error::schema("known_solution", "point lies outside the set"));
            }
            let cert = certify(&bifunction, &set, x).map_err(|e| e.at("known_solution"))?;
            if cert.gap.is_some_and(|g| g > GAP_TOL) || cert.fixed_point_residual > FIXED_POINT_TOL {
                return Err(Error::schema(
                    "known_solution",
                    format!(
                        "point fails its certificate (gap {:?}, fixed-point residual {:e})",
                        cert.gap, cert.fixed_point_residual
                    ),
                ));
            }
        }
        let profile = bifunction.closed_form_profile();
        Ok(ProblemInstance {
            name: name.into(),
            lambda_recommendations: recommendations(&bifunction, &profile),
            bifunction,
            set,
            profile,
            known_solution,
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let v = |xs: &[f64]| Vector::from_slice(xs).expect("finite literal");
        let m = |rows: &[[f64; 2]; 2]| Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).expect("literal");
        let cube = || ConvexSet::cube(2, -1.0, 1.0).expect("literal");
        let (f, set, x_star) = match name {
            "rotation" => (Bifunction::rotation(), ConvexSet::whole_space(2)?, v(&[0.0, 0.0])),
            "bilinear-strong" => (
                Bifunction::bilinear(Matrix::diagonal(&[3.0, 4.0]), Matrix::identity(2), Vector::zeros(2))?,
                cube(),
                v(&[0.0, 0.0]),
            ),
            "mvi-cocoercive" => (
                Bifunction::mvi_affine(Matrix::diagonal(&[1.0, 4.0]), v(&[-0.2, 1.0]))?,
                cube(),
                v(&[0.2, -0.25]),
            ),
            "mvi-l1" => (
                Bifunction::mvi_affine(m(&[[1.0, 0.5], [-0.5, 1.0]]), v(&[-0.7, 0.25]))?
                    .with_regularizer(Regularizer::weighted_l1(v(&[0.2, 0.2]))?)?,
                cube(),
                v(&[0.5, 0.0]),
            ),
            "mvi-monotone-skew" => (
                Bifunction::mvi_affine(Matrix::rotation(), v(&[0.3, -0.2]))?,
                ConvexSet::ball(Vector::zeros(2), 1.0)?,
                v(&[-0.2, -0.3]),
            ),
            other => {
                return Err(Error::UnknownProblem {
                    name: other.to_string(),
                    available: BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
                })
            }
        };
        ProblemInstance::new(name, f, set, Some(x_star))
    }

    pub fn all_builtins() -> Vec<Self> {
        BUILTIN_NAMES
            .iter()
            .map(|n| Self::builtin(n).expect("bundled instances are valid"))
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed = ProblemFile::from_json(text)?.build()?;
        ProblemInstance::new(
            parsed.name.unwrap_or_else(|| "unnamed".into()),
            parsed.bifunction,
            parsed.set,
            parsed.known_solution,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile::describe(Some(&self.name), &self.bifunction, &self.set, self.known_solution.as_ref())
    }

    pub fn to_json(&self) -> String {
        self.to_file().to_json()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn certify(&self, x: &Vector) -> Result<Certificate> {
        certify(&self.bifunction, &self.set, x)
    }

    /// Runs the iteration and certifies its end point.
    ///
    /// Outside their admissible `λ` range the maps can have fixed points that
    /// are not solutions, so a run whose residual met the tolerance is
    /// reported as converged only if the end point also passes
    /// [`Certificate::accepts`]; otherwise the summary status is
    /// [`RunStatus::Uncertified`]. The summary carries the gap on bounded sets.
    pub fn solve(&self, x0: &Vector, cfg: &IterationConfig) -> Result<(IterationTrace, TraceSummary)> {
        let trace = run_fixed_point(&self.bifunction, &self.set, x0, cfg)?;
        let mut summary = trace.summary();
        if let Some(x) = trace.final_point() {
            match self.certify(x) {
                Ok(cert) => {
                    summary.gap = cert.gap;
                    if summary.status == RunStatus::Converged && !cert.accepts() {
                        summary.status = RunStatus::Uncertified;
                        summary.error = Some(format!(
                            "fixed-point residual met its tolerance but the point fails the solution \
                             certificate (gap {:?}, residual of B_{CERTIFY_LAMBDA} {:e})",
                            cert.gap, cert.fixed_point_residual
                        ));
                    }
                }
                Err(e) if summary.status == RunStatus::Converged => {
                    summary.status = RunStatus::Uncertified;
                    summary.error = Some(format!("certificate could not be computed: {e}"));
                }
                Err(_) => {}
            }
        }
        Ok((trace, summary))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{check_monotone, estimate_lipschitz_type, estimate_strong_monotonicity, SampleSpec};

    #[test]
    fn registry_profiles() {
        let rot = ProblemInstance::builtin("rotation").unwrap();
        assert_eq!(rot.profile.tau, 0.0);
        assert!((rot.profile.l1 - 0.5).abs() < 1e-12 && (rot.profile.l2 - 0.5).abs() < 1e-12);
        assert_eq!(rot.known_solution, Some(Vector::zeros(2)));

        let bs = ProblemInstance::builtin("bilinear-strong").unwrap();
        assert!((bs.profile.tau - 2.0).abs() < 1e-12);
        assert!((bs.profile.l1 - 1.5).abs() < 1e-9 && (bs.profile.l2 - 1.5).abs() < 1e-9);
        assert!(bs.profile.l1 + bs.profile.l2 > bs.profile.tau);
        let range = &bs.lambda_recommendations["b-quasicontraction"];
        assert!((range.upper.unwrap() - 1.0 / 3.0).abs() < 1e-9);
        assert!(range.contains(0.3) && !range.contains(1.0 / 3.0));

        let mc = ProblemInstance::builtin("mvi-cocoercive").unwrap();
        assert!((mc.profile.cocoercivity - 0.25).abs() < 1e-12);
        assert!(mc.lambda_recommendations["b-nonexpansive"].contains(0.5));
        assert!(!rot.lambda_recommendations.contains_key("b-nonexpansive"));
    }

    #[test]
    fn unknown_name_lists_registry() {
        match ProblemInstance::builtin("nope") {
            Err(Error::UnknownProblem { available, .. }) => assert_eq!(available.len(), BUILTIN_NAMES.len()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn known_solutions_certify() {
        for inst in ProblemInstance::all_builtins() {
            let x = inst.known_solution.as_ref().unwrap();
            let cert = inst.certify(x).unwrap();
            assert!(cert.accepts(), "{}: {cert:?}", inst.name);
            assert!(cert.fixed_point_residual <= FIXED_POINT_TOL);
        }
    }

    #[test]
    fn round_trip_and_rejections() {
        for inst in ProblemInstance::all_builtins() {
            assert_eq!(ProblemInstance::from_json(&inst.to_json()).unwrap(), inst);
        }
        let mut file = ProblemInstance::builtin("rotation").unwrap().to_file();
        file.known_solution = Some(vec![1.0, 1.0]);
        assert!(matches!(
            ProblemInstance::from_json(&file.to_json()),
            Err(Error::Schema { path, .. }) if path == "known_solution"
        ));
        // Bounded superset: the gap certificate also rejects (1, 1).
        let boxed = ProblemInstance::new("r", Bifunction::rotation(), ConvexSet::cube(2, -2.0, 2.0).unwrap(), None).unwrap();
        let cert = boxed.certify(&Vector::from_slice(&[1.0, 1.0]).unwrap()).unwrap();
        // Vertex oracle: −min over the corners of ⟨A(1,1), y − (1,1)⟩ with A(1,1) = (1, −1).
        let corners = [[-2.0, -2.0], [-2.0, 2.0], [2.0, -2.0], [2.0, 2.0]];
        let min = corners.iter().map(|c| (c[0] - 1.0) - (c[1] - 1.0)).fold(f64::INFINITY, f64::min);
        assert!((cert.gap.unwrap() + min).abs() < 1e-9);
        assert!(!cert.accepts());

        let text = r#"{"dimension": 2, "set": {"kind": "whole-space"},
            "bifunction": {"kind": "bilinear", "P": [[1,0],[0,1]], "Q": [[1,0],[0,-1]], "q": [0,0]}}"#;
        assert!(ProblemInstance::from_json(text).is_err());
    }

    #[test]
    fn builtins_pass_matching_checks() {
        for inst in ProblemInstance::all_builtins() {
            let spec = SampleSpec::over(&inst.set, 10_000, 42).unwrap();
            let f = &inst.bifunction;
            assert!(check_monotone(f, Some(&inst.set), &spec).unwrap().holds(), "{}", inst.name);
            assert!(estimate_lipschitz_type(f, Some(&inst.set), &spec).unwrap().holds(), "{}", inst.name);
            let strong = estimate_strong_monotonicity(f, Some(&inst.set), &spec).unwrap();
            assert_eq!(strong.holds(), inst.profile.tau > 0.0, "{}", inst.name);
        }
    }

    #[test]
    fn spurious_fixed_points_are_not_reported_as_solutions() {
        use crate::iteration::Scheme;
        use crate::proxmaps::MapKind;
        let inst = ProblemInstance::builtin("mvi-cocoercive").unwrap();
        // At λ = 0.4 the composite map fixes (0.2, −1), which is not a solution.
        let cfg = IterationConfig::new(Scheme::Picard, MapKind::T, 0.4).with_tol(1e-10);
        let (trace, summary) = inst.solve(&Vector::from_slice(&[0.7, -0.4]).unwrap(), &cfg).unwrap();
        assert_eq!(trace.final_status, RunStatus::Converged);
        assert_eq!(summary.status, RunStatus::Uncertified);
        assert!(summary.gap.unwrap() > 1.0);

        let cfg = IterationConfig::new(Scheme::Picard, MapKind::T, 0.2).with_tol(1e-10);
        let (_, summary) = inst.solve(&Vector::from_slice(&[0.7, -0.4]).unwrap(), &cfg).unwrap();
        assert_eq!(summary.status, RunStatus::Converged);
        assert!(summary.gap.unwrap() <= GAP_TOL);
    }

    #[test]
    fn estimates_approach_profile() {
        for inst in ProblemInstance::all_builtins() {
            let spec = SampleSpec::cube(2, -10.0, 10.0, 100_000, 42).unwrap();
            let f = &inst.bifunction;
            let close = |est: f64, exact: f64| (est - exact).abs() / exact.max(1.0) <= 0.05;
            let tau = estimate_strong_monotonicity(f, None, &spec).unwrap().estimated_modulus.unwrap();
            assert!(close(tau, inst.profile.tau), "{}: {tau}", inst.name);
            let l = estimate_lipschitz_type(f, None, &spec).unwrap().estimated_modulus.unwrap();
            assert!(close(l, inst.profile.l1), "{}: {l}", inst.name);
        }
    }
}
