//! Closed-form smooth test functions with hand-coded derivatives.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::grid::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothProbe {
    /// `x²` on a line.
    Quadratic,
    /// `x² + y²` on a square.
    Quadratic2d,
    /// `sin(πx)` on a line.
    SinPi,
    /// `sin(πx)·sin(πy)` on a square.
    SinPi2d,
    /// `t + x` on a line.
    LinearTime,
    /// `eᵗ·sin(πx)` on a line.
    ExpSin,
    /// `eᵗ·sin(πx)·sin(πy)` on a square.
    ExpSin2d,
}

impl SmoothProbe {
    pub const ALL: [SmoothProbe; 7] = [
        SmoothProbe::Quadratic,
        SmoothProbe::Quadratic2d,
        SmoothProbe::SinPi,
        SmoothProbe::SinPi2d,
        SmoothProbe::LinearTime,
        SmoothProbe::ExpSin,
        SmoothProbe::ExpSin2d,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SmoothProbe::Quadratic => "quadratic",
            SmoothProbe::Quadratic2d => "quadratic_2d",
            SmoothProbe::SinPi => "sin_pi",
            SmoothProbe::SinPi2d => "sin_pi_2d",
            SmoothProbe::LinearTime => "linear_time",
            SmoothProbe::ExpSin => "exp_sin",
            SmoothProbe::ExpSin2d => "exp_sin_2d",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SmoothProbe::Quadratic2d | SmoothProbe::SinPi2d | SmoothProbe::ExpSin2d => 2,
            _ => 1,
        }
    }

    pub fn value(&self, t: f64, p: Point) -> f64 {
        let (sx, sy) = ((PI * p.x).sin(), (PI * p.y).sin());
        match self {
            SmoothProbe::Quadratic => p.x * p.x,
            SmoothProbe::Quadratic2d => p.x * p.x + p.y * p.y,
            SmoothProbe::SinPi => sx,
            SmoothProbe::SinPi2d => sx * sy,
            SmoothProbe::LinearTime => t + p.x,
            SmoothProbe::ExpSin => t.exp() * sx,
            SmoothProbe::ExpSin2d => t.exp() * sx * sy,
        }
    }

    pub fn time_derivative(&self, t: f64, p: Point) -> f64 {
        match self {
            SmoothProbe::LinearTime => 1.0,
            SmoothProbe::ExpSin | SmoothProbe::ExpSin2d => self.value(t, p),
            _ => 0.0,
        }
    }

    pub fn laplacian(&self, t: f64, p: Point) -> f64 {
        let pi2 = PI * PI;
        match self {
            SmoothProbe::Quadratic => 2.0,
            SmoothProbe::Quadratic2d => 4.0,
            SmoothProbe::SinPi | SmoothProbe::ExpSin => -pi2 * self.value(t, p),
            SmoothProbe::SinPi2d | SmoothProbe::ExpSin2d => -2.0 * pi2 * self.value(t, p),
            SmoothProbe::LinearTime => 0.0,
        }
    }
}

impl fmt::Display for SmoothProbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SmoothProbe {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SmoothProbe::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown probe `{s}`"))
    }
}
