//! JSON problem files.
//!
//! ```json
//! {
//!   "name": "example",
//!   "dimension": 2,
//!   "set": { "kind": "box", "lower": [-1, -1], "upper": [1, 1] },
//!   "bifunction": { "kind": "bilinear", "P": [[3, 0], [0, 4]], "Q": [[1, 0], [0, 1]], "q": [0, 0] },
//!   "regularizer": { "kind": "weighted-l1", "w": [0.1, 0.1] },
//!   "known_solution": [0, 0]
//! }
//! ```
//!
//! Matrices are row-major arrays of rows. Unknown keys are rejected and every
//! error names the offending field.

use serde::{Deserialize, Serialize};

use crate::bifunction::{Bifunction, BifunctionKind, Regularizer};
use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, SetKind, Vector};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub set: SetSpec,
    pub bifunction: BifunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<RegularizerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_solution: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetSpec {
    WholeSpace,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Simplex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BifunctionSpec {
    MviAffine {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Bilinear {
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        #[serde(rename = "q")]
        q_vec: Vec<f64>,
    },
    Rotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegularizerSpec {
    Zero,
    WeightedL1 {
        w: Vec<f64>,
    },
    Quadratic {
        #[serde(rename = "H")]
        h_mat: Vec<Vec<f64>>,
        h: Vec<f64>,
    },
}

/// Validated contents of a problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProblem {
    pub name: Option<String>,
    pub bifunction: Bifunction,
    pub set: ConvexSet,
    pub known_solution: Option<Vector>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::schema(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn build(&self) -> Result<ParsedProblem> {
        let n = self.dimension;
        if n == 0 {
            return Err(Error::schema("dimension", "must be positive"));
        }
        let set = self.set.build(n).map_err(|e| e.at("set"))?;
        let bifunction = self.bifunction.build(n).map_err(|e| e.at("bifunction"))?;
        let bifunction = match &self.regularizer {
            Some(spec) => {
                let reg = spec.build(n).map_err(|e| e.at("regularizer"))?;
                bifunction.with_regularizer(reg).map_err(|e| e.at("regularizer"))?
            }
            None => bifunction,
        };
        let known_solution = self
            .known_solution
            .as_ref()
            .map(|x| vector(x, n).map_err(|e| e.at("known_solution")))
            .transpose()?;
        Ok(ParsedProblem {
            name: self.name.clone(),
            bifunction,
            set,
            known_solution,
        })
    }

    pub fn describe(
        name: Option<&str>,
        bifunction: &Bifunction,
        set: &ConvexSet,
        known_solution: Option<&Vector>,
    ) -> Self {
        ProblemFile {
            name: name.map(str::to_string),
            dimension: bifunction.dimension(),
            set: SetSpec::describe(set),
            bifunction: BifunctionSpec::describe(bifunction.kind()),
            regularizer: match bifunction.regularizer() {
                Regularizer::Zero => None,
                other => Some(RegularizerSpec::describe(other)),
            },
            known_solution: known_solution.map(|x| x.as_slice().to_vec()),
        }
    }
}

fn vector(values: &[f64], n: usize) -> Result<Vector> {
    if values.len() != n {
        return Err(Error::schema("", format!("expected {n} entries, found {}", values.len())));
    }
    Vector::from_slice(values).map_err(|e| Error::schema("", e.to_string()))
}

fn matrix(rows: &[Vec<f64>], n: usize) -> Result<Matrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::schema("", format!("expected a {n}x{n} matrix")));
    }
    Matrix::from_rows(rows.to_vec()).map_err(|e| Error::schema("", e.to_string()))
}

impl SetSpec {
    fn build(&self, n: usize) -> Result<ConvexSet> {
        let set = match self {
            SetSpec::WholeSpace => ConvexSet::whole_space(n),
            SetSpec::Simplex => ConvexSet::simplex(n),
            SetSpec::Box { lower, upper } => {
                let lower = vector(lower, n).map_err(|e| e.at("lower"))?;
                let upper = vector(upper, n).map_err(|e| e.at("upper"))?;
                ConvexSet::boxed(lower, upper)
            }
            SetSpec::Ball { center, radius } => {
                let center = vector(center, n).map_err(|e| e.at("center"))?;
                ConvexSet::ball(center, *radius).map_err(|e| e.at("radius"))
            }
        };
        set.map_err(|e| Error::schema("", e.to_string()))
    }

    fn describe(set: &ConvexSet) -> Self {
        match set.kind() {
            SetKind::WholeSpace => SetSpec::WholeSpace,
            SetKind::Simplex => SetSpec::Simplex,
            SetKind::Box { lower, upper } => SetSpec::Box {
                lower: lower.as_slice().to_vec(),
                upper: upper.as_slice().to_vec(),
            },
            SetKind::Ball { center, radius } => SetSpec::Ball {
                center: center.as_slice().to_vec(),
                radius: *radius,
            },
        }
    }
}

impl BifunctionSpec {
    fn build(&self, n: usize) -> Result<Bifunction> {
        match self {
            BifunctionSpec::Rotation => {
                if n != 2 {
                    return Err(Error::schema("", "the rotation bifunction is two-dimensional"));
                }
                Ok(Bifunction::rotation())
            }
            BifunctionSpec::MviAffine { a, b } => {
                let a = matrix(a, n).map_err(|e| e.at("A"))?;
                let b = vector(b, n).map_err(|e| e.at("b"))?;
                Bifunction::mvi_affine(a, b).map_err(|e| Error::schema("", e.to_string()))
            }
            BifunctionSpec::Bilinear { p, q, q_vec } => {
                let p = matrix(p, n).map_err(|e| e.at("P"))?;
                let q = matrix(q, n).map_err(|e| e.at("Q"))?;
                let q_vec = vector(q_vec, n).map_err(|e| e.at("q"))?;
                Bifunction::bilinear(p, q, q_vec).map_err(|e| Error::schema("Q", e.to_string()))
            }
        }
    }

    fn describe(kind: &BifunctionKind) -> Self {
        match kind {
            BifunctionKind::Rotation => BifunctionSpec::Rotation,
            BifunctionKind::MviAffine { a, b } => BifunctionSpec::MviAffine {
                a: a.to_rows(),
                b: b.as_slice().to_vec(),
            },
            BifunctionKind::Bilinear { p, q, q_vec } => BifunctionSpec::Bilinear {
                p: p.to_rows(),
                q: q.to_rows(),
                q_vec: q_vec.as_slice().to_vec(),
            },
        }
    }
}

impl RegularizerSpec {
    fn build(&self, n: usize) -> Result<Regularizer> {
        match self {
            RegularizerSpec::Zero => Ok(Regularizer::Zero),
            RegularizerSpec::WeightedL1 { w } => {
                let w = vector(w, n).map_err(|e| e.at("w"))?;
                Regularizer::weighted_l1(w).map_err(|e| Error::schema("w", e.to_string()))
            }
            RegularizerSpec::Quadratic { h_mat, h } => {
                let h_mat = matrix(h_mat, n).map_err(|e| e.at("H"))?;
                let h = vector(h, n).map_err(|e| e.at("h"))?;
                Regularizer::quadratic(h_mat, h).map_err(|e| Error::schema("H", e.to_string()))
            }
        }
    }

    fn describe(reg: &Regularizer) -> Self {
        match reg {
            Regularizer::Zero => RegularizerSpec::Zero,
            Regularizer::WeightedL1 { weights } => RegularizerSpec::WeightedL1 {
                w: weights.as_slice().to_vec(),
            },
            Regularizer::Quadratic { h_mat, h_vec } => RegularizerSpec::Quadratic {
                h_mat: h_mat.to_rows(),
                h: h_vec.as_slice().to_vec(),
            },
        }
    }
}
