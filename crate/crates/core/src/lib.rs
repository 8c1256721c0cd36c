//! Generalized inner functions in reproducing kernel Hilbert spaces of
//! analytic functions on the unit disk.
//!
//! The crate builds analogues of finite Blaschke products in weighted Hardy
//! spaces, Dirichlet-type spaces `D_alpha`, local Dirichlet spaces and
//! spaces given by an explicit monomial Gram table. The central object is
//! the Shapiro-Shields function of a reproducible multiset, computed either
//! from a bordered Gram determinant or from a Hermitian linear solve, and
//! cross-checked against a finite-dimensional projection oracle.
//!
//! Everything is generic over the real scalar type (`f32` or `f64`); the
//! `*64` aliases below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod construct;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod linalg;
pub mod poly;
pub mod scalar;
pub mod space;
pub mod verify;

pub use construct::{
    bergman_rational, classical_blaschke, inner_projection_of, project_kernel_fd, shapiro_shields, ConstructionResult,
    RationalRep, Route, RouteChoice, ShapiroOptions,
};
pub use error::{Error, Result};
pub use kernel::{
    combo_derivative_at, combo_norm_sq, combo_taylor, kernel_pairing, kernel_taylor, shift_inner_product, BoundKind,
    KernelCombo, KernelTerm, TaylorSeries, TruncationPolicy,
};
pub use poly::FactoredPoly;
pub use scalar::{cx, Real, C};
pub use space::{ReproducibleMultiset, ReproducibleOrder, SpaceSpec};
pub use verify::{
    extraneous_scan, extremal_check, inner_report, scalar_multiple_check, subspace_equal, zero_report,
    ComparisonReport, ExtremalReport, InnerReport, ScanReport, SubspaceReport, ZeroReport,
};

pub type Complex64 = C<f64>;
pub type SpaceSpec64 = SpaceSpec<f64>;
pub type ReproducibleMultiset64 = ReproducibleMultiset<f64>;
pub type KernelTerm64 = KernelTerm<f64>;
pub type KernelCombo64 = KernelCombo<f64>;
pub type TaylorSeries64 = TaylorSeries<f64>;
pub type TruncationPolicy64 = TruncationPolicy<f64>;
pub type FactoredPoly64 = FactoredPoly<f64>;
pub type ConstructionResult64 = ConstructionResult<f64>;
pub type InnerReport64 = InnerReport<f64>;
pub type ZeroReport64 = ZeroReport<f64>;
pub type ComparisonReport64 = ComparisonReport<f64>;
pub type SubspaceReport64 = SubspaceReport<f64>;
pub type ExtremalReport64 = ExtremalReport<f64>;
pub type ScanReport64 = ScanReport<f64>;
