//! Proximal and resolvent mappings for equilibrium problems
//! `f(x, y) = φ(x, y) + ϕ(y) − ϕ(x)` over simple convex sets, fixed-point
//! iterations on them, and sampled checks of the properties that govern
//! their convergence.

pub mod analysis;
pub mod bench;
pub mod bifunction;
pub mod cli;
pub mod error;
pub mod format;
pub mod geometry;
pub mod iteration;
pub mod linalg;
pub mod problems;
pub mod proxmaps;
pub mod subproblem;

pub use bifunction::{Bifunction, BifunctionProfile, Regularizer};
pub use error::{Error, Result};
pub use geometry::{ConvexSet, Vector};
pub use linalg::Matrix;
pub use problems::ProblemInstance;
pub use proxmaps::{MapKind, ProxMap};
