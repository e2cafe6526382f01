//! Picard, Krasnoselskii–Mann and Halpern drivers over the proximal maps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bifunction::Bifunction;
use crate::error::{Error, Result};
use crate::geometry::{check_dim, ConvexSet, Vector};
use crate::proxmaps::{MapKind, ProxMap};
use crate::subproblem::DEFAULT_TOL;

/// Relaxation parameters of the Krasnoselskii–Mann step.
#[derive(Debug, Clone, PartialEq)]
pub enum KmRelaxation {
    Constant(f64),
    /// `alpha_k` for `k < len`; the last entry is reused afterwards.
    Schedule(Vec<f64>),
}

impl KmRelaxation {
    fn at(&self, k: usize) -> f64 {
        match self {
            KmRelaxation::Constant(a) => *a,
            KmRelaxation::Schedule(s) => s[k.min(s.len() - 1)],
        }
    }

    fn validate(&self) -> Result<()> {
        let values: &[f64] = match self {
            KmRelaxation::Constant(a) => std::slice::from_ref(a),
            KmRelaxation::Schedule(s) if s.is_empty() => {
                return Err(Error::InvalidInput("KM schedule must not be empty".into()))
            }
            KmRelaxation::Schedule(s) => s,
        };
        if values.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::InvalidInput("KM relaxation must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// `x_{k+1} = M(x_k)`.
    Picard,
    /// `x_{k+1} = (1 − α_k) x_k + α_k M(x_k)`.
    KrasnoselskiiMann(KmRelaxation),
    /// `x_{k+1} = β_k u + (1 − β_k) M(x_k)` with `β_k = 1/(k + 2)`. The anchor
    /// `u` defaults to the starting point.
    Halpern { anchor: Option<Vector> },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Picard => "picard",
            Scheme::KrasnoselskiiMann(_) => "km",
            Scheme::Halpern { .. } => "halpern",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    pub scheme: Scheme,
    pub map_kind: MapKind,
    pub lambda: f64,
    pub tol_residual: f64,
    pub max_iterations: usize,
    /// Tolerance handed to each map evaluation.
    pub inner_tol: f64,
    /// Known solution for distance tracking, if any.
    pub reference_solution: Option<Vector>,
}

impl IterationConfig {
    pub fn new(scheme: Scheme, map_kind: MapKind, lambda: f64) -> Self {
        IterationConfig {
            scheme,
            map_kind,
            lambda,
            tol_residual: 1e-8,
            max_iterations: 1000,
            inner_tol: DEFAULT_TOL,
            reference_solution: None,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_residual = tol;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_reference(mut self, solution: Option<Vector>) -> Self {
        self.reference_solution = solution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.tol_residual.is_finite() && self.tol_residual > 0.0) {
            return Err(Error::InvalidInput("residual tolerance must be positive".into()));
        }
        if !(self.inner_tol.is_finite() && self.inner_tol > 0.0) {
            return Err(Error::InvalidInput("inner tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be positive".into()));
        }
        if let Scheme::KrasnoselskiiMann(relax) = &self.scheme {
            relax.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    MaxIter,
    Error,
    /// The residual reached its tolerance but the point failed the solution
    /// certificate. Only set by [`ProblemInstance::solve`](crate::problems::ProblemInstance::solve).
    Uncertified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub iterate: Vector,
    /// `‖x_k − M(x_k)‖`.
    pub residual: f64,
    pub distance_to_solution: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
    pub final_status: RunStatus,
    pub error_message: Option<String>,
    pub estimated_rate: Option<f64>,
    /// Set when the starting point was outside the set and got projected.
    pub start_projected: bool,
    pub inner_iterations: usize,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_point(&self) -> Option<&Vector> {
        self.records.last().map(|r| &r.iterate)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual)
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    pub fn estimate_rate(&self) -> Option<f64> {
        estimate_rate(&self.residuals())
    }

    /// CSV with columns `k, residual, distance_to_solution, x_0 … x_{n−1}`;
    /// an absent distance is written as an empty field.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let n = self.records.first().map_or(0, |r| r.iterate.dim());
        let mut header = vec!["k".to_string(), "residual".into(), "distance_to_solution".into()];
        header.extend((0..n).map(|i| format!("x_{i}")));
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![
                r.k.to_string(),
                r.residual.to_string(),
                r.distance_to_solution.map(|d| d.to_string()).unwrap_or_default(),
            ];
            row.extend(r.iterate.as_slice().iter().map(f64::to_string));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            status: self.final_status,
            iterations: self.iterations(),
            final_residual: self.final_residual(),
            rate: self.estimated_rate,
            final_point: self.final_point().map(|p| p.as_slice().to_vec()),
            start_projected: self.start_projected,
            error: self.error_message.clone(),
            gap: None,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// JSON summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub status: RunStatus,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub rate: Option<f64>,
    pub final_point: Option<Vec<f64>>,
    pub start_projected: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Gap value at the final point, when the set is bounded.
    pub gap: Option<f64>,
}

/// Runs the configured fixed-point scheme from `x0`.
///
/// Only an invalid configuration is an `Err`; a map failure mid-run ends the
/// trace with [`RunStatus::Error`] and keeps the partial records.
pub fn run_fixed_point(f: &Bifunction, set: &ConvexSet, x0: &Vector, cfg: &IterationConfig) -> Result<IterationTrace> {
    cfg.validate()?;
    check_dim(f.dimension(), set.dimension())?;
    check_dim(f.dimension(), x0.dim())?;
    if let Some(sol) = &cfg.reference_solution {
        check_dim(f.dimension(), sol.dim())?;
    }
    let start_projected = !set.contains(x0, 0.0);
    let mut x = set.project(x0)?;
    let anchor = match &cfg.scheme {
        Scheme::Halpern { anchor: Some(u) } => {
            check_dim(f.dimension(), u.dim())?;
            u.clone()
        }
        _ => x.clone(),
    };
    let map = ProxMap::new(f, set, cfg.map_kind, cfg.lambda).with_tol(cfg.inner_tol);

    let mut trace = IterationTrace {
        records: Vec::new(),
        final_status: RunStatus::MaxIter,
        error_message: None,
        estimated_rate: None,
        start_projected,
        inner_iterations: 0,
    };
    for k in 0..cfg.max_iterations {
        let image = match map.evaluate(&x) {
            Ok(eval) if eval.output.is_finite() => {
                trace.inner_iterations += eval.inner_iterations;
                eval.output
            }
            Ok(_) => {
                trace.final_status = RunStatus::Error;
                trace.error_message = Some(format!("map {} produced non-finite values", cfg.map_kind));
                break;
            }
            Err(e) => {
                trace.final_status = RunStatus::Error;
                trace.error_message = Some(format!("map {} evaluation failed: {e}", cfg.map_kind));
                break;
            }
        };
        let residual = x.distance(&image);
        trace.records.push(TraceRecord {
            k,
            distance_to_solution: cfg.reference_solution.as_ref().map(|s| x.distance(s)),
            iterate: x.clone(),
            residual,
        });
        if residual <= cfg.tol_residual {
            trace.final_status = RunStatus::Converged;
            break;
        }
        x = match &cfg.scheme {
            Scheme::Picard => image,
            Scheme::KrasnoselskiiMann(relax) => {
                let alpha = relax.at(k);
                &((1.0 - alpha) * &x) + &(alpha * &image)
            }
            Scheme::Halpern { .. } => {
                let beta = 1.0 / (k as f64 + 2.0);
                &(beta * &anchor) + &((1.0 - beta) * &image)
            }
        };
    }
    trace.estimated_rate = trace.estimate_rate();
    Ok(trace)
}

/// Geometric rate of a residual sequence: the exponentiated least-squares slope
/// of `ln r_k` over the second half of the sequence.
///
/// Needs at least 10 residuals and a strictly positive second half.
pub fn estimate_rate(residuals: &[f64]) -> Option<f64> {
    if residuals.len() < 10 {
        return None;
    }
    let start = residuals.len() / 2;
    let window = &residuals[start..];
    if window.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return None;
    }
    let n = window.len() as f64;
    let mean_k = (0..window.len()).map(|k| k as f64).sum::<f64>() / n;
    let logs: Vec<f64> = window.iter().map(|r| r.ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / n;
    let (num, den) = logs.iter().enumerate().fold((0.0, 0.0), |(num, den), (k, l)| {
        let dk = k as f64 - mean_k;
        (num + dk * (l - mean_log), den + dk * dk)
    });
    Some((num / den).exp())
}
