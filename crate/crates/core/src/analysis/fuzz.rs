//! Randomized monotonicity checks for the two schemes.
//!
//! Parabolic trials build an ordered pair of old levels `ũ ≥ ṽ` sharing the
//! new-level value and assert `S(ũ) ≤ S(ṽ)` at the center node. Elliptic
//! trials raise one argument of the membrane scheme (the node value, or one
//! difference by lowering a neighbor) and assert the residual does not
//! decrease.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{GridFunction, GridSpec};
use crate::operators::{elliptic_residual, parabolic_residual, SchemeParams};
use crate::problem::CoefficientField;

/// Node values are drawn from `[−VALUE_RANGE, VALUE_RANGE]`.
pub const VALUE_RANGE: f64 = 10.0;
/// Perturbations and ordering noise are drawn from `(0, NOISE_RANGE]`.
pub const NOISE_RANGE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FuzzKind {
    Elliptic { dim: usize },
    /// `c = Δt/Δx²` is fixed for every trial; `c ≤ 1/(2·dim)` is the
    /// monotone range.
    Parabolic { dim: usize, c: f64 },
}

impl FuzzKind {
    pub fn dim(&self) -> usize {
        match *self {
            FuzzKind::Elliptic { dim } | FuzzKind::Parabolic { dim, .. } => dim,
        }
    }
}

/// A failing trial, with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzViolation {
    pub trial: usize,
    pub seed: u64,
    pub dx: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// The unperturbed state (parabolic: the smaller old level).
    pub base: Vec<f64>,
    /// The perturbed state (parabolic: the larger old level).
    pub perturbed: Vec<f64>,
    pub residual_base: f64,
    pub residual_perturbed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub kind: FuzzKind,
    pub trials: usize,
    pub seed: u64,
    pub violations: Vec<FuzzViolation>,
}

impl FuzzReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Seed of trial `index` under `master`. Trials can be replayed one at a
/// time with [`fuzz_trial`].
pub fn trial_seed(master: u64, index: usize) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = master ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn monotonicity_fuzz(kind: FuzzKind, trials: usize, seed: u64) -> FuzzReport {
    let violations = (0..trials)
        .filter_map(|trial| fuzz_trial(kind, trial, trial_seed(seed, trial)))
        .collect();
    FuzzReport {
        kind,
        trials,
        seed,
        violations,
    }
}

/// Runs one trial; returns the counterexample if the inequality fails.
pub fn fuzz_trial(kind: FuzzKind, trial: usize, seed: u64) -> Option<FuzzViolation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = kind.dim();
    let dx = rng.gen_range(0.05..=1.0);
    let grid = if dim == 1 {
        GridSpec::line(0.0, 2.0 * dx, 3)
    } else {
        GridSpec::square(0.0, 2.0 * dx, 3)
    }
    .expect("three nodes per axis always form a grid");
    let center = grid.interior()[0];
    let lp = rng.gen_range(0.05..=5.0);
    let lm = rng.gen_range(0.05..=5.0);
    let lam_p = CoefficientField::constant(&grid, lp);
    let lam_m = CoefficientField::constant(&grid, lm);
    let values: Vec<f64> = (0..grid.len())
        .map(|_| rng.gen_range(-VALUE_RANGE..=VALUE_RANGE))
        .collect();

    // (base, perturbed, residual that must not exceed the other, the other)
    let (base, perturbed, r_small, r_large) = match kind {
        FuzzKind::Parabolic { c, .. } => {
            let params = SchemeParams::new(dx, c * dx * dx, grid.k());
            let upper: Vec<f64> = values
                .iter()
                .map(|&v| {
                    if rng.gen_bool(0.5) {
                        v + rng.gen_range(0.0..=NOISE_RANGE)
                    } else {
                        v
                    }
                })
                .collect();
            let mut new = GridFunction::zeros(&grid);
            new[center] = rng.gen_range(-VALUE_RANGE..=VALUE_RANGE);
            let residual = |old: &[f64]| {
                let old = GridFunction::from_raw(old.to_vec());
                parabolic_residual(&grid, &params, &old, &new, &lam_p, &lam_m).at(center)
            };
            // larger old level ⇒ smaller residual
            let (r_base, r_pert) = (residual(&values), residual(&upper));
            (values, upper, r_pert, r_base)
        }
        FuzzKind::Elliptic { .. } => {
            let mut upper = values.clone();
            let delta = rng.gen_range(f64::MIN_POSITIVE..=NOISE_RANGE);
            let neighbors = grid.slot_neighbors(0);
            let pick = rng.gen_range(0..=neighbors.len());
            if pick == 0 {
                upper[center] += delta;
            } else {
                upper[neighbors[pick - 1]] -= delta;
            }
            let residual = |u: &[f64]| {
                elliptic_residual(&grid, &GridFunction::from_raw(u.to_vec()), &lam_p, &lam_m).at(center)
            };
            // raised argument ⇒ residual does not drop
            let (r_base, r_pert) = (residual(&values), residual(&upper));
            (values, upper, r_base, r_pert)
        }
    };
    let tol = 1e-12 * (1.0 + r_small.abs().max(r_large.abs()));
    if r_small <= r_large + tol {
        return None;
    }
    let (residual_base, residual_perturbed) = match kind {
        FuzzKind::Parabolic { .. } => (r_large, r_small),
        FuzzKind::Elliptic { .. } => (r_small, r_large),
    };
    Some(FuzzViolation {
        trial,
        seed,
        dx,
        lambda_plus: lp,
        lambda_minus: lm,
        base,
        perturbed,
        residual_base,
        residual_perturbed,
    })
}
