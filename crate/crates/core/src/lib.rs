//! Monotone finite-difference solvers for the two-phase parabolic
//! obstacle-like problem
//!
//! ```text
//! Δu − u_t = λ⁺·χ{u>0} − λ⁻·χ{u<0}   in (0, T) × Ω
//! ```
//!
//! and its steady counterpart, the two-phase membrane problem. Both are
//! solved through the min-max form
//!
//! ```text
//! min(u_t − Δu + λ⁺, max(u_t − Δu − λ⁻, u)) = 0
//! ```
//!
//! discretised with the standard `2·dim`-point Laplacian on uniform grids.
//!
//! * [`grid`]: structured grids, time grids and grid functions.
//! * [`problem`]: coefficients, initial and boundary data, reference cases.
//! * [`operators`]: the stencil operator and the discrete min-max residuals.
//! * [`elliptic`]: projected Gauss-Seidel for the membrane problem.
//! * [`parabolic`]: explicit and implicit time marching.
//! * [`analysis`]: consistency estimates, an exhaustive oracle, sign sets,
//!   residual band checks and monotonicity fuzzing.

pub mod analysis;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod operators;
pub mod parabolic;
pub mod problem;

pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec, Point, TimeGrid};
pub use problem::{builtin_case, builtin_cases, BuiltinCase, Coefficient, CoefficientField, ProblemSpec};
