//! Sampled checks and estimates of monotonicity, Lipschitz-type and
//! (firm) nonexpansiveness properties.
//!
//! Every check draws tuples uniformly from a box (projected onto the domain
//! when one is given), evaluates a violation or ratio in parallel, then refines
//! the ten most extreme tuples by coordinate search. Reductions run in sample
//! order, so a report depends only on its inputs and the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifunction::Bifunction;
use crate::error::{Error, Result};
use crate::geometry::{check_dim, ConvexSet, Vector};
use crate::linalg::Matrix;
use crate::proxmaps::ProxMap;

/// Tolerance for identities that hold in exact arithmetic up to rounding.
pub const EXACT_TOL: f64 = 1e-9;
/// Tolerance for checks that go through an iterative solver.
pub const SOLVER_TOL: f64 = 1e-6;
/// Tuples closer than this are discarded and redrawn.
pub const MIN_SEPARATION: f64 = 1e-6;
const REFINED: usize = 10;
const REFINE_EVALS: usize = 400;
const REFINE_SEPARATION: f64 = 1e-2;
const MAX_DRAWS_PER_SAMPLE: usize = 1000;

/// Where and how many points to draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub seed: u64,
}

impl SampleSpec {
    pub fn new(count: usize, lower: Vec<f64>, upper: Vec<f64>, seed: u64) -> Result<Self> {
        let spec = SampleSpec { count, lower, upper, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn cube(dim: usize, lo: f64, hi: f64, count: usize, seed: u64) -> Result<Self> {
        SampleSpec::new(count, vec![lo; dim], vec![hi; dim], seed)
    }

    /// The bounding box of `set`, or `[−10, 10]ⁿ` when the set is unbounded.
    pub fn over(set: &ConvexSet, count: usize, seed: u64) -> Result<Self> {
        match set.bounding_box() {
            Some((lo, hi)) => SampleSpec::new(count, lo.into_inner(), hi.into_inner(), seed),
            None => SampleSpec::cube(set.dimension(), -10.0, 10.0, count, seed),
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidInput("sample count must be at least 1".into()));
        }
        if self.lower.is_empty() {
            return Err(Error::InvalidInput("sample region must have positive dimension".into()));
        }
        check_dim(self.lower.len(), self.upper.len())?;
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!(
                    "sample region needs finite lower < upper, got [{lo}, {hi}] in coordinate {i}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Violated,
}

/// Classification of a map by its sampled expansion modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "class")]
pub enum MapClass {
    Contraction,
    Nonexpansive,
    /// `ε̂ = modulus² − 1`.
    Expansive { epsilon: f64 },
}

impl MapClass {
    pub fn from_modulus(modulus: f64) -> Self {
        if modulus < 1.0 - SOLVER_TOL {
            MapClass::Contraction
        } else if modulus <= 1.0 + SOLVER_TOL {
            MapClass::Nonexpansive
        } else {
            MapClass::Expansive {
                epsilon: modulus * modulus - 1.0,
            }
        }
    }
}

/// Outcome of one sampled check.
///
/// `verdict` is `Violated` exactly when `worst_violation > tolerance`, and the
/// violation is recomputed from `worst_witness`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: Verdict,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub worst_witness: Vec<Vec<f64>>,
    pub estimated_modulus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<MapClass>,
    pub samples_used: usize,
    pub seed: u64,
}

impl PropertyReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn witness(&self) -> Vec<Vector> {
        self.worst_witness.iter().map(|p| Vector::from_raw(p.clone())).collect()
    }
}

struct Extremum {
    value: f64,
    witness: Vec<Vector>,
    applicable: usize,
}

struct Sampler<'a> {
    spec: &'a SampleSpec,
    domain: Option<&'a ConvexSet>,
    arity: usize,
}

impl<'a> Sampler<'a> {
    fn new(spec: &'a SampleSpec, domain: Option<&'a ConvexSet>, dim: usize, arity: usize) -> Result<Self> {
        spec.validate()?;
        check_dim(dim, spec.dimension())?;
        if let Some(set) = domain {
            check_dim(dim, set.dimension())?;
        }
        Ok(Sampler { spec, domain, arity })
    }

    fn place(&self, raw: &[f64]) -> Vec<Vector> {
        raw.chunks(self.spec.dimension())
            .map(|c| {
                let p = Vector::from_raw(c.to_vec());
                match self.domain {
                    Some(set) => set.project_unchecked(&p),
                    None => p,
                }
            })
            .collect()
    }

    fn separation(points: &[Vector]) -> f64 {
        points
            .iter()
            .enumerate()
            .flat_map(|(i, p)| points[i + 1..].iter().map(move |q| p.distance(q)))
            .fold(f64::INFINITY, f64::min)
    }

    fn admissible(points: &[Vector]) -> bool {
        Self::separation(points) >= MIN_SEPARATION
    }

    fn draw(&self) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        let n = self.spec.dimension();
        let mut tuples = Vec::with_capacity(self.spec.count);
        for _ in 0..self.spec.count {
            let mut tries = 0;
            loop {
                let raw: Vec<f64> = (0..self.arity * n)
                    .map(|j| rng.random_range(self.spec.lower[j % n]..self.spec.upper[j % n]))
                    .collect();
                if Self::admissible(&self.place(&raw)) {
                    tuples.push(raw);
                    break;
                }
                tries += 1;
                if tries >= MAX_DRAWS_PER_SAMPLE {
                    return Err(Error::InvalidInput(
                        "sample region collapses onto a single point of the domain".into(),
                    ));
                }
            }
        }
        Ok(tuples)
    }

    /// Maximizes `objective` over drawn tuples; `None` marks a tuple the
    /// property does not apply to.
    fn maximize<F>(&self, objective: F) -> Result<Extremum>
    where
        F: Fn(&[Vector]) -> Result<Option<f64>> + Sync,
    {
        let tuples = self.draw()?;
        let values = tuples
            .par_iter()
            .map(|raw| objective(&self.place(raw)))
            .collect::<Result<Vec<_>>>()?;
        let applicable = values.iter().filter(|v| v.is_some()).count();

        let mut ranked: Vec<(usize, f64)> = values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(REFINED);

        let refined = ranked
            .par_iter()
            .map(|&(i, v)| self.refine(&objective, tuples[i].clone(), v))
            .collect::<Result<Vec<_>>>()?;

        let mut best: Option<(f64, Vec<f64>)> = None;
        for (value, raw) in refined {
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, raw));
            }
        }
        Ok(match best {
            Some((value, raw)) => Extremum {
                value,
                witness: self.place(&raw),
                applicable,
            },
            None => Extremum {
                value: f64::NEG_INFINITY,
                witness: Vec::new(),
                applicable: 0,
            },
        })
    }

    /// Coordinate search with shrinking step, kept inside the sampling box.
    fn refine<F>(&self, objective: &F, mut raw: Vec<f64>, mut value: f64) -> Result<(f64, Vec<f64>)>
    where
        F: Fn(&[Vector]) -> Result<Option<f64>>,
    {
        let n = self.spec.dimension();
        let width = (0..n)
            .map(|i| self.spec.upper[i] - self.spec.lower[i])
            .fold(0.0, f64::max);
        let mut step = 0.05 * width;
        // Ratios over nearly coincident points mostly measure rounding error.
        let floor = Self::separation(&self.place(&raw)).min(REFINE_SEPARATION * width);
        let mut evals = 0;
        while step > 1e-9 * width && evals < REFINE_EVALS {
            let mut improved = false;
            'coords: for c in 0..raw.len() {
                for sign in [1.0, -1.0] {
                    let mut cand = raw.clone();
                    cand[c] = (cand[c] + sign * step).clamp(self.spec.lower[c % n], self.spec.upper[c % n]);
                    let points = self.place(&cand);
                    if Self::separation(&points) < floor {
                        continue;
                    }
                    evals += 1;
                    if let Some(v) = objective(&points)? {
                        if v > value {
                            value = v;
                            raw = cand;
                            improved = true;
                            break 'coords;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok((value, raw))
    }
}

fn report(
    property: &str,
    ext: &Extremum,
    tolerance: f64,
    estimated_modulus: Option<f64>,
    spec: &SampleSpec,
) -> PropertyReport {
    PropertyReport {
        property: property.to_string(),
        verdict: if ext.value > tolerance {
            Verdict::Violated
        } else {
            Verdict::Holds
        },
        worst_violation: ext.value,
        tolerance,
        worst_witness: ext.witness.iter().map(|p| p.as_slice().to_vec()).collect(),
        estimated_modulus,
        classification: None,
        samples_used: ext.applicable,
        seed: spec.seed,
    }
}

fn monotone_sum(f: &Bifunction, x: &Vector, y: &Vector) -> f64 {
    f.eval(x, y) + f.eval(y, x)
}

/// `f(x,y) + f(y,x) ≤ 0` on sampled pairs.
pub fn check_monotone(f: &Bifunction, domain: Option<&ConvexSet>, spec: &SampleSpec) -> Result<PropertyReport> {
    let sampler = Sampler::new(spec, domain, f.dimension(), 2)?;
    let ext = sampler.maximize(|p| Ok(Some(monotone_sum(f, &p[0], &p[1]))))?;
    Ok(report("monotone", &ext, EXACT_TOL, None, spec))
}

/// Estimates `γ` in `f(x,y) + f(y,x) ≤ −γ‖x−y‖²` as the smallest sampled
/// ratio. The worst violation is the largest `(f(x,y)+f(y,x))/‖x−y‖²`; the
/// check holds when that stays below `−1e−9`, i.e. when some `γ > 0` fits.
pub fn estimate_strong_monotonicity(
    f: &Bifunction,
    domain: Option<&ConvexSet>,
    spec: &SampleSpec,
) -> Result<PropertyReport> {
    let sampler = Sampler::new(spec, domain, f.dimension(), 2)?;
    let ext = sampler.maximize(|p| Ok(Some(monotone_sum(f, &p[0], &p[1]) / p[0].distance(&p[1]).powi(2))))?;
    let modulus = (-ext.value).max(0.0);
    Ok(report("strong-monotone", &ext, -EXACT_TOL, Some(modulus), spec))
}

/// `f(x,y) ≥ 0 ⇒ f(y,x) ≤ 0` on sampled pairs. The modulus is the sampled
/// `γ` of the strong variant `f(x,y) ≥ 0 ⇒ f(y,x) ≤ −γ‖x−y‖²`, clipped at 0.
pub fn check_pseudomonotone(
    f: &Bifunction,
    domain: Option<&ConvexSet>,
    spec: &SampleSpec,
) -> Result<PropertyReport> {
    let sampler = Sampler::new(spec, domain, f.dimension(), 2)?;
    let ext = sampler.maximize(|p| Ok((f.eval(&p[0], &p[1]) >= 0.0).then(|| f.eval(&p[1], &p[0]))))?;
    let strong = sampler.maximize(|p| {
        Ok((f.eval(&p[0], &p[1]) >= 0.0).then(|| f.eval(&p[1], &p[0]) / p[0].distance(&p[1]).powi(2)))
    })?;
    let modulus = if strong.applicable > 0 {
        (-strong.value).max(0.0)
    } else {
        0.0
    };
    Ok(report("pseudomonotone", &ext, EXACT_TOL, Some(modulus), spec))
}

/// Estimates the smallest symmetric `L` with
/// `f(u,v) + f(v,w) ≥ f(u,w) − L‖u−v‖² − L‖v−w‖²` on sampled triples. The
/// violation is the excess of that estimate over the closed-form constant.
pub fn estimate_lipschitz_type(
    f: &Bifunction,
    domain: Option<&ConvexSet>,
    spec: &SampleSpec,
) -> Result<PropertyReport> {
    let sampler = Sampler::new(spec, domain, f.dimension(), 3)?;
    let ext = sampler.maximize(|p| {
        let (u, v, w) = (&p[0], &p[1], &p[2]);
        let excess = f.eval(u, w) - f.eval(u, v) - f.eval(v, w);
        Ok(Some(excess / (u.distance(v).powi(2) + v.distance(w).powi(2))))
    })?;
    let estimate = ext.value.max(0.0);
    let profile = f.closed_form_profile();
    let shifted = Extremum {
        value: estimate - profile.l1.max(profile.l2),
        witness: ext.witness,
        applicable: ext.applicable,
    };
    Ok(report("lipschitz-type", &shifted, SOLVER_TOL, Some(estimate), spec))
}

/// Largest sampled `‖M(x) − M(y)‖ / ‖x − y‖`. Holds when the map is
/// nonexpansive on the samples; `classification` says how it behaves.
pub fn estimate_map_expansion(map: &ProxMap<'_>, spec: &SampleSpec) -> Result<PropertyReport> {
    let sampler = Sampler::new(spec, Some(map.set), map.f.dimension(), 2)?;
    let ext = sampler.maximize(|p| {
        let (mx, my) = (map.apply(&p[0])?, map.apply(&p[1])?);
        Ok(Some(mx.distance(&my) / p[0].distance(&p[1])))
    })?;
    let modulus = ext.value;
    let shifted = Extremum {
        value: modulus - 1.0,
        witness: ext.witness,
        applicable: ext.applicable,
    };
    let mut rep = report("expansion", &shifted, SOLVER_TOL, Some(modulus), spec);
    rep.classification = Some(MapClass::from_modulus(modulus));
    Ok(rep)
}

/// `‖M(y) − x*‖ ≤ ρ‖y − x*‖` for sampled `y`. The modulus is the largest
/// sampled ratio `‖M(y) − x*‖ / ‖y − x*‖`.
pub fn check_quasicontraction(
    map: &ProxMap<'_>,
    x_star: &Vector,
    rho: f64,
    spec: &SampleSpec,
) -> Result<PropertyReport> {
    check_dim(map.f.dimension(), x_star.dim())?;
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::InvalidInput(format!("rho must be nonnegative, got {rho}")));
    }
    let residual = map.apply(x_star)?.distance(x_star);
    if residual > 1e-8 {
        return Err(Error::NotFixedPoint { residual });
    }
    let sampler = Sampler::new(spec, Some(map.set), map.f.dimension(), 1)?;
    let ext = sampler.maximize(|p| Ok(Some(map.apply(&p[0])?.distance(x_star) - rho * p[0].distance(x_star))))?;
    let ratio = sampler.maximize(|p| {
        let d = p[0].distance(x_star);
        if d < MIN_SEPARATION {
            return Ok(None);
        }
        Ok(Some(map.apply(&p[0])?.distance(x_star) / d))
    })?;
    let modulus = (ratio.applicable > 0).then_some(ratio.value);
    Ok(report("quasicontraction", &ext, SOLVER_TOL, modulus, spec))
}

/// `‖M(x)−M(y)‖² ≤ ‖x−y‖² − ‖(I−M)(x) − (I−M)(y)‖²` on sampled pairs.
pub fn check_firmly_nonexpansive(map: &ProxMap<'_>, spec: &SampleSpec) -> Result<PropertyReport> {
    let sampler = Sampler::new(spec, Some(map.set), map.f.dimension(), 2)?;
    let ext = sampler.maximize(|p| {
        let (x, y) = (&p[0], &p[1]);
        let (mx, my) = (map.apply(x)?, map.apply(y)?);
        let dm = &mx - &my;
        let d = x - y;
        let residual = &d - &dm;
        Ok(Some(dm.norm_squared() - d.norm_squared() + residual.norm_squared()))
    })?;
    Ok(report("firmly-nonexpansive", &ext, SOLVER_TOL, None, spec))
}

/// Estimates `δ` in `⟨F(x)−F(y), x−y⟩ ≥ δ‖F(x)−F(y)‖²` for `F(x) = Ax + b`.
/// Pairs with `F(x) = F(y)` are skipped. As for strong monotonicity, the
/// check holds when some `δ > 0` fits the samples.
pub fn check_cocoercive(a: &Matrix, b: &Vector, spec: &SampleSpec) -> Result<PropertyReport> {
    if !a.is_square() {
        return Err(Error::InvalidInput("cocoercivity needs a square matrix".into()));
    }
    check_dim(a.rows(), b.dim())?;
    let sampler = Sampler::new(spec, None, a.rows(), 2)?;
    let ext = sampler.maximize(|p| {
        let d = &p[0] - &p[1];
        // F(x) − F(y) = A(x − y); b cancels.
        let df = a.mul_vec(&d);
        let den = df.norm_squared();
        Ok((den > 1e-300).then(|| -df.dot(&d) / den))
    })?;
    let modulus = if ext.applicable > 0 { (-ext.value).max(0.0) } else { 0.0 };
    Ok(report("cocoercive", &ext, -EXACT_TOL, Some(modulus), spec))
}
