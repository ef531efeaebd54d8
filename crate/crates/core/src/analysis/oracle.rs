//! Exhaustive branch enumeration for tiny membrane problems.
//!
//! Every interior node picks one of three branches of
//! `min(L_h u + λ⁺, max(L_h u − λ⁻, u)) = 0`:
//!
//! ```text
//! Plus:  L_h u + λ⁺ = 0, consistent when u ≥ 0
//! Minus: L_h u − λ⁻ = 0, consistent when u ≤ 0
//! Zero:  u = 0,          consistent when −λ⁺ ≤ L_h u ≤ λ⁻
//! ```
//!
//! Each assignment gives a linear system, solved densely by LU.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::problem::ProblemSpec;

/// Largest interior count the oracle accepts (3^6 = 729 systems).
pub const ORACLE_MAX_INTERIOR: usize = 6;

/// Relative tolerance for the branch inequalities and for telling
/// solutions apart.
const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub solution: GridFunction,
    /// Branch per interior node, in interior order, of the first consistent
    /// assignment found.
    pub branches: Vec<Branch>,
    /// Number of assignments whose solution satisfies every inequality.
    pub consistent_assignments: usize,
}

/// Solves the membrane problem by trying every branch assignment.
///
/// Fails when the grid has more than [`ORACLE_MAX_INTERIOR`] unknowns, when
/// no assignment is consistent, or when consistent assignments disagree.
pub fn brute_force_elliptic(problem: &ProblemSpec) -> Result<OracleSolution> {
    let grid = problem.grid();
    let n = grid.interior_count();
    if n > ORACLE_MAX_INTERIOR {
        return Err(Error::Analysis(format!(
            "oracle refuses {n} interior nodes (limit {ORACLE_MAX_INTERIOR})"
        )));
    }
    let boundary = problem.boundary_values(0.0)?;
    let (lp, lm) = (problem.lambda_plus(), problem.lambda_minus());
    let h2 = grid.dx() * grid.dx();
    let k = grid.k() as f64;

    let scale = 1.0
        + boundary.sup_norm()
        + h2 * (lp.sup() + lm.sup());
    let tol_u = ORACLE_TOL * scale;
    let tol_lh = tol_u * 2.0 * k / h2;

    let mut found: Option<(DVector<f64>, Vec<Branch>)> = None;
    let mut consistent = 0;
    let mut branches = vec![Branch::Plus; n];
    for code in 0..3usize.pow(n as u32) {
        let mut rest = code;
        for b in branches.iter_mut() {
            *b = [Branch::Plus, Branch::Minus, Branch::Zero][rest % 3];
            rest /= 3;
        }
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for (slot, &i) in grid.interior().iter().enumerate() {
            match branches[slot] {
                Branch::Zero => a[(slot, slot)] = 1.0,
                branch => {
                    a[(slot, slot)] = k;
                    let mut r = if branch == Branch::Plus {
                        -h2 * lp.at(i)
                    } else {
                        h2 * lm.at(i)
                    };
                    for &j in grid.slot_neighbors(slot) {
                        match grid.interior_slot(j) {
                            Some(q) => a[(slot, q)] -= 1.0,
                            None => r += boundary[j],
                        }
                    }
                    rhs[slot] = r;
                }
            }
        }
        let Some(x) = a.lu().solve(&rhs) else {
            continue;
        };
        if !is_consistent(problem, &boundary, &x, &branches, tol_u, tol_lh) {
            continue;
        }
        consistent += 1;
        match &found {
            None => found = Some((x, branches.clone())),
            Some((first, _)) => {
                let diff = (first - &x).amax();
                if diff > tol_u {
                    return Err(Error::Analysis(format!(
                        "oracle found two consistent assignments with solutions {diff:e} apart"
                    )));
                }
            }
        }
    }
    let (x, branches) = found.ok_or_else(|| {
        Error::Analysis("oracle found no consistent branch assignment".into())
    })?;
    let mut u = boundary;
    for (slot, &i) in grid.interior().iter().enumerate() {
        u[i] = x[slot];
    }
    Ok(OracleSolution {
        solution: u,
        branches,
        consistent_assignments: consistent,
    })
}

fn is_consistent(
    problem: &ProblemSpec,
    boundary: &GridFunction,
    x: &DVector<f64>,
    branches: &[Branch],
    tol_u: f64,
    tol_lh: f64,
) -> bool {
    let grid = problem.grid();
    let h2 = grid.dx() * grid.dx();
    let value = |j: usize| grid.interior_slot(j).map_or(boundary[j], |q| x[q]);
    grid.interior().iter().enumerate().all(|(slot, &i)| {
        let ui = x[slot];
        if !ui.is_finite() {
            return false;
        }
        match branches[slot] {
            Branch::Plus => ui >= -tol_u,
            Branch::Minus => ui <= tol_u,
            Branch::Zero => {
                let lh = grid
                    .slot_neighbors(slot)
                    .iter()
                    .map(|&j| ui - value(j))
                    .sum::<f64>()
                    / h2;
                lh + problem.lambda_plus().at(i) >= -tol_lh && lh - problem.lambda_minus().at(i) <= tol_lh
            }
        }
    })
}
