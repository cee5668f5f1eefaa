//! Numerical geometry engine for zero mean curvature surfaces of mixed
//! causal type in Lorentz-Minkowski 3-space, together with the classical
//! Euclidean triply and singly periodic minimal surface families they are
//! built from.
//!
//! The pipeline: hyperelliptic curve domains with sheet tracking
//! ([`curve`]), Weierstrass-type integrand assembly and period lattices
//! ([`weierstrass`]), pointwise differential-geometric analysis
//! ([`analysis`]), fold-curve extension across causal type changes
//! ([`extension`]), the concrete surface families ([`families`]), and
//! triply periodic mesh assembly with OBJ/PLY export ([`mesh`]).

pub mod analysis;
pub mod checks;
pub mod curve;
pub mod extension;
pub mod families;
pub mod lorentz;
pub mod mesh;
pub mod quad;
pub mod report;
pub mod weierstrass;

pub use lorentz::{CausalClass, CVec3, Mat3, Vec3};
