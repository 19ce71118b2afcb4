//! Computational engine for three-dimensional pseudohermitian (CR) geometry.
//!
//! The crate evaluates, pointwise on explicit chart models, the operators of
//! Tanaka-Webster geometry — connection form, torsion, scalar curvature,
//! Cartan tensor, CR Paneitz operator and Q-curvature — together with the
//! Riemannian package of the Webster adapted metrics, and numerically
//! verifies the CR Yamabe soliton identities, their conserved quantities and
//! the level-set structure of soliton potentials.
//!
//! Everything is built on truncated Taylor jets ([`jet`]): model data are
//! closed-form expressions ([`expr`]) evaluated to jets at sample points, and
//! all derived quantities (coframes, exterior derivatives, covariant
//! derivatives) are computed in the jet ring, so derivatives of composite
//! quantities are exact up to the truncation order. An independent
//! finite-difference oracle cross-checks the jets on raw expressions.
//!
//! All values are immutable after construction and evaluation is pure;
//! structures and models may be shared freely across threads.

pub mod calculus;
pub mod curvature;
pub mod expr;
pub mod forms;
pub mod jet;
pub mod models;
pub mod report;
pub mod riemann;
pub mod sample;
pub mod soliton;
pub mod structure;

pub use expr::{parse_expr, Expr, Point};
pub use jet::{CJet, Jet};
pub use models::ModelDecl;
pub use report::{CheckEntry, Report};
pub use sample::{Chart, SampleSet};
pub use structure::PHStructure;
