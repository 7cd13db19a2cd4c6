//! Singularity analysis for first-order implicit ODEs on the plane.
//!
//! The crate works with equations `G(x, y, p) = 0`, `p = dy/dx`, given
//! either implicitly or as a parametric surface in `(x, y, p)`-space, and
//! provides:
//!
//! - an expression parser and exact truncated Taylor-jet arithmetic
//!   ([`expr`], [`jet`]);
//! - the equation surface, its characteristic field, criminant and
//!   discriminant ([`surface`]);
//! - detection and classification of the generic point singularities:
//!   plane-field equilibria, folded saddle/node/focus with their exponents,
//!   pleated points, Whitney umbrella points ([`classify`], [`umbrella`]);
//! - Clairaut-type tests and the classification of generating families
//!   ([`clairaut`]);
//! - phase-curve integration on the surface and deterministic SVG phase
//!   portraits ([`flow`], [`portrait`]).
//!
//! All numeric kernels are generic over the scalar type through
//! [`num::Real`]; the aliases below fix `f64`, which is what the
//! command-line front end uses.

pub mod clairaut;
pub mod classify;
pub mod expr;
pub mod flow;
pub mod jet;
pub mod linalg;
pub mod num;
pub mod portrait;
pub mod surface;
pub mod umbrella;

pub use expr::{Expression, VarSet};
pub use num::Real;

/// `f64` jet (the default precision everywhere).
pub type Jet64 = jet::Jet<f64>;
/// `f64` equation surface.
pub type Surface64 = surface::EquationSurface<f64>;
/// `f64` working box.
pub type Box64 = surface::Box3<f64>;
/// `f64` singular-point report.
pub type Report64 = classify::SingularPointReport<f64>;
/// `f64` phase curve.
pub type PhaseCurve64 = flow::PhaseCurve<f64>;
