//! Exact parameters of nonlinear neutral coated inclusions.
//!
//! A coated sphere (3D) or disk (2D) with a power-law (`p`-Laplacian) core
//! and a linear coating can be inserted into a matrix of conductivity
//! `sigma_star` without disturbing a uniform applied field, and a
//! space-filling assemblage of such inclusions at a fixed core fraction
//! behaves like a homogeneous linear material of that conductivity. This
//! crate computes everything that characterizes those inclusions:
//!
//! - the interface unknown `x0` (a scalar root of a strictly monotone
//!   function) and the effective conductivity `sigma_star`, including the
//!   all-linear, all-nonlinear and `p = 2` (Hashin-Shtrikman) closed forms
//!   ([`kernel`]);
//! - the full piecewise potential for a concrete inclusion, with
//!   transmission-condition, harmonicity and energy-dissipation checks
//!   ([`field`]);
//! - analytic sensitivities of `x0` and `sigma_star` in `p` and `theta1`,
//!   validated against central finite differences ([`sensitivity`]);
//! - regeneration of the six reference tables and figure sweeps, with a
//!   golden-value diff at printed precision ([`report`]).
//!
//! ```
//! use nil_core::{effective_conductivity, Dim, Problem, SolverConfig};
//!
//! let prob = Problem::new(10.0, 1.0, 2.0, 1.0, 0.5, Dim::Three).unwrap();
//! let eff = effective_conductivity(&prob, &SolverConfig::default()).unwrap();
//! assert!((eff.sigma_star - 2.8).abs() < 1e-12);
//! ```
//!
//! All types are immutable values and all operations are pure functions, so
//! everything here is safe to call concurrently without synchronization.

pub mod error;
pub mod field;
pub mod kernel;
pub mod model;
pub mod quad;
pub mod report;
pub mod sensitivity;

pub use error::{Error, Result};
pub use field::{build_field, scale_invariance_check, EnergyReport, FieldSolution, PointSample};
pub use kernel::{
    effective_conductivity, hashin_shtrikman, hs_bounds, interface_fn, solve_root, SolverConfig,
};
pub use model::{
    Branch, Coefficients, Dim, EffectiveResult, GeometryFactors, Problem, Root, SensitivityReport,
};
pub use report::{
    generate_table, golden_diff, golden_table, sweep, Dataset, GoldenDiff, SweepAxis,
    SweepQuantity, SweepSpec, TableQuantity, TableSpec,
};
pub use sensitivity::{full_report, regime_classify, Regime, RegimeReport};
