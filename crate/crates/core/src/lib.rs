//! Exact and Monte Carlo computation of the probability that a planar
//! loop-erased random walk crossing a square uses the central edge `{0, 1}`.

pub mod error;
pub mod greens;
pub mod harmonic;
pub mod harness;
pub mod identity;
pub mod lattice;
pub mod loopmeasure;
pub mod montecarlo;
pub mod solver;
pub mod walks;

pub use error::{LerwError, Result};
pub use identity::{IdentityReport, LogValue};
pub use lattice::{build_domain, DirectedEdge, LatticeDomain, LatticePoint};
pub use montecarlo::{McConfig, McEstimate};
pub use solver::Signing;
pub use walks::EnumerationCaps;
pub use walks::{UnrootedLoop, WalkPath};
