//! Structure-preserving reduced-order modelling of KdV-type Hamiltonian PDEs.
//!
//! Full-order models are periodic finite-difference skew-gradient systems
//! `q' = S ∇H(q)`, integrated with Kahan's linearly implicit method. Reduced models
//! are Galerkin projections onto POD bases that keep the skew-gradient form, with
//! the quadratic term evaluated through a precomputed reduced tensor.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod io;
pub mod linalg;
pub mod models;
pub mod operators;
pub mod pod;
pub mod rom;

pub use error::{Error, Result};
pub use integrator::{
    integrate, integrate_with, kahan_step, kahan_step_polarized, modified_hamiltonian,
    HamiltonianSystem, QuadraticSystem, TimeMesh, Trajectory,
};
pub use models::{assemble, Domain, InitialCondition, ModelKind, ModelParams, SkewGradientModel};
pub use operators::{Grid1D, Grid2D, SparseOperator};
pub use pod::{build_basis, Basis, BasisMode, SnapshotSet};
pub use rom::{reduce, LiftedRom, ReducedModel};
pub use linalg::Resolvent;
