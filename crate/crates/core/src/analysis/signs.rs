//! Positivity and negativity sets and the free boundary between them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::grid::{GridFunction, GridSpec, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignClass {
    Negative,
    Zero,
    Positive,
}

impl SignClass {
    /// `−1`, `0` or `1`.
    pub fn as_i8(self) -> i8 {
        match self {
            SignClass::Negative => -1,
            SignClass::Zero => 0,
            SignClass::Positive => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignSets {
    pub classes: Vec<SignClass>,
    /// Crossing points in edge order: interpolated zeros on edges joining
    /// opposite signs, and the nodes of the zero set that border a signed
    /// node.
    pub free_boundary: Vec<Point>,
}

impl SignSets {
    pub fn count(&self, class: SignClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn nodes(&self, class: SignClass) -> impl Iterator<Item = usize> + '_ {
        self.classes
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == class)
            .map(|(i, _)| i)
    }
}

/// Default sign threshold: `1e-6 · (‖u‖∞ + 1)`.
pub fn default_sign_tolerance(u: &GridFunction) -> f64 {
    1e-6 * (u.sup_norm() + 1.0)
}

/// Classifies every node as positive (`u > tol`), negative (`u < −tol`) or
/// zero, and extracts the free boundary along grid edges.
pub fn classify_signs(grid: &GridSpec, u: &GridFunction, tol_sign: f64) -> SignSets {
    assert_eq!(u.len(), grid.len(), "grid function does not match grid");
    let classes: Vec<SignClass> = u
        .as_slice()
        .iter()
        .map(|&v| {
            if v > tol_sign {
                SignClass::Positive
            } else if v < -tol_sign {
                SignClass::Negative
            } else {
                SignClass::Zero
            }
        })
        .collect();

    let mut free_boundary = Vec::new();
    let mut zero_nodes = BTreeSet::new();
    for (a, b) in grid.edges() {
        match (classes[a], classes[b]) {
            (ca, cb) if ca == cb => {}
            (SignClass::Zero, _) => {
                if zero_nodes.insert(a) {
                    free_boundary.push(grid.point(a));
                }
            }
            (_, SignClass::Zero) => {
                if zero_nodes.insert(b) {
                    free_boundary.push(grid.point(b));
                }
            }
            _ => {
                let theta = u[a] / (u[a] - u[b]);
                let (pa, pb) = (grid.point(a), grid.point(b));
                free_boundary.push(Point::new(
                    pa.x + theta * (pb.x - pa.x),
                    pa.y + theta * (pb.y - pa.y),
                ));
            }
        }
    }
    SignSets {
        classes,
        free_boundary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_data_crossing_is_exact() {
        let g = GridSpec::line(0.0, 1.0, 11).unwrap();
        let u = GridFunction::from_fn(&g, |p| p.x - 0.3).unwrap();
        let s = classify_signs(&g, &u, 1e-12);
        // the zero falls on node 3
        assert_eq!(s.free_boundary.len(), 1);
        assert!((s.free_boundary[0].x - 0.3).abs() < 1e-12);
        assert_eq!(s.count(SignClass::Negative), 3);
        assert_eq!(s.count(SignClass::Zero), 1);
        assert_eq!(s.count(SignClass::Positive), 7);
        let shifted = GridFunction::from_fn(&g, |p| p.x - 0.33).unwrap();
        let s = classify_signs(&g, &shifted, 1e-12);
        assert_eq!(s.free_boundary.len(), 1);
        assert!((s.free_boundary[0].x - 0.33).abs() < 1e-12);
    }

    #[test]
    fn zero_function_has_no_free_boundary() {
        let g = GridSpec::square(0.0, 1.0, 5).unwrap();
        let s = classify_signs(&g, &GridFunction::zeros(&g), 0.0);
        assert_eq!(s.count(SignClass::Zero), 25);
        assert!(s.free_boundary.is_empty());
    }

    #[test]
    fn crossing_through_a_zero_node() {
        // 16x − 8 on 201 nodes vanishes exactly at node 100
        let g = GridSpec::line(0.0, 1.0, 201).unwrap();
        let u = GridFunction::from_fn(&g, |p| 16.0 * p.x - 8.0).unwrap();
        let s = classify_signs(&g, &u, default_sign_tolerance(&u));
        assert_eq!(s.classes[100], SignClass::Zero);
        assert_eq!(s.free_boundary.len(), 1);
        assert!((s.free_boundary[0].x - 0.5).abs() <= g.dx());
    }

    #[test]
    fn crossing_between_nodes() {
        let g = GridSpec::line(0.0, 1.0, 200).unwrap();
        let u = GridFunction::from_fn(&g, |p| 16.0 * p.x - 8.0).unwrap();
        let s = classify_signs(&g, &u, default_sign_tolerance(&u));
        assert_eq!(s.count(SignClass::Zero), 0);
        assert_eq!(s.free_boundary.len(), 1);
        assert!((s.free_boundary[0].x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_edges() {
        let g = GridSpec::square(0.0, 1.0, 3).unwrap();
        let u = GridFunction::from_fn(&g, |p| p.x + p.y - 0.75).unwrap();
        let s = classify_signs(&g, &u, 1e-12);
        for p in &s.free_boundary {
            assert!((p.x + p.y - 0.75).abs() < 1e-12, "{p:?}");
        }
        assert_eq!(s.free_boundary.len(), 4);
    }
}
