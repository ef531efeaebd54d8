//! Verification instruments: consistency-order estimation, a brute-force
//! elliptic oracle, sign sets and free boundaries, residual band checks,
//! monotonicity fuzzing and the randomized trial drivers built on them.

pub mod band;
pub mod checks;
pub mod consistency;
pub mod fuzz;
pub mod heat;
pub mod oracle;
pub mod probe;
pub mod signs;

pub use band::{residual_band_check, snapshot_band_check, BandReport};
pub use checks::{CheckReport, FigureReport};
pub use consistency::{consistency_order, fit_order, ConsistencyProbe, OperatorKind, OrderEstimate};
pub use fuzz::{monotonicity_fuzz, FuzzKind, FuzzReport, FuzzViolation};
pub use heat::{heat_space_study, heat_time_study};
pub use oracle::{brute_force_elliptic, Branch, OracleSolution};
pub use probe::SmoothProbe;
pub use signs::{classify_signs, SignClass, SignSets};
