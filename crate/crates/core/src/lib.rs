//! Lagrangian mechanics on Lie algebroids in local coordinates.
//!
//! The crate provides, in dependency order:
//!
//! - [`expr`]: a minimal symbolic engine (parse, differentiate, evaluate,
//!   sampled equality) that carries every coordinate function below;
//! - [`algebroid`]: the Lie algebroid data model, axiom validation, the
//!   exterior derivative, section brackets, and complete/vertical lifts;
//! - [`dynamics`]: Poincaré forms, energy, Hessian regularity and the
//!   Euler–Lagrange vector field of a Lagrangian;
//! - [`integrate`]: fixed-step RK4 trajectories, flows of lifted fields,
//!   and drift reports for monitored quantities;
//! - [`conserved`]: gauge/geometric/dynamical equivalence of Lagrangians,
//!   Nöther symmetry certificates, one-parameter gauge families, and
//!   non-Nöther conserved quantities from characteristic polynomials;
//! - [`model`]: the TOML model-file schema and the built-in catalog;
//! - [`cli`]: the command-line surface over all of the above.

pub mod algebroid;
pub mod cli;
pub mod conserved;
pub mod dynamics;
pub mod expr;
pub mod integrate;
pub(crate) mod linalg;
pub mod model;

pub use algebroid::{LieAlgebroid, OneFormOnM, ProlongedSection, Section, ValidationReport};
pub use dynamics::{LagrangianSystem, OmegaCoefficients, State};
pub use expr::{Expr, SampleDomain};
pub use integrate::{simulate, DriftReport, Monitor, Trajectory};
pub use model::Model;
