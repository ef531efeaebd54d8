//! Problem data: the coefficients `λ±`, the initial datum `g` and the
//! Dirichlet datum `h`, sampled onto a grid.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, Point, TimeGrid};

pub type SpatialFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>;

/// Relative mismatch between `g` and `h(0, ·)` on the boundary above which a
/// compatibility warning is logged.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-9;

/// A coefficient given either as a constant or as a function of space.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Field(SpatialFn),
}

impl Coefficient {
    pub fn field(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Field(Arc::new(f))
    }

    fn eval(&self, p: Point) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Field(f) => f(p),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(c: f64) -> Self {
        Coefficient::Constant(c)
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Field(_) => write!(f, "Field(..)"),
        }
    }
}

/// Node-sampled coefficient values.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    values: Vec<f64>,
}

impl CoefficientField {
    /// Samples `coef` at every node. Negative or non-finite values are
    /// rejected; zeros only when `allow_zero` is set.
    pub fn sample(grid: &GridSpec, coef: &Coefficient, name: &str, allow_zero: bool) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for node in 0..grid.len() {
            let v = coef.eval(grid.point(node));
            if !v.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "{name} is not finite at node {node}"
                )));
            }
            if v < 0.0 || (v == 0.0 && !allow_zero) {
                return Err(Error::InvalidProblem(format!(
                    "{name} must be strictly positive, got {v} at node {node}"
                )));
            }
            values.push(v);
        }
        Ok(Self { values })
    }

    /// Constant field without validation, for building operator inputs in
    /// tests and analysis tools.
    pub fn constant(grid: &GridSpec, value: f64) -> Self {
        Self {
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A fully sampled problem instance. Parabolic problems carry a time grid and
/// an initial datum; elliptic ones do not.
#[derive(Clone)]
pub struct ProblemSpec {
    grid: GridSpec,
    time: Option<TimeGrid>,
    lambda_plus: CoefficientField,
    lambda_minus: CoefficientField,
    initial: Option<GridFunction>,
    boundary: BoundaryFn,
    compatibility_gap: f64,
    degenerate: bool,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("grid", &self.grid)
            .field("time", &self.time)
            .field("lambda_plus", &self.lambda_plus)
            .field("lambda_minus", &self.lambda_minus)
            .field("initial", &self.initial)
            .field("compatibility_gap", &self.compatibility_gap)
            .field("degenerate", &self.degenerate)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn builder(grid: GridSpec) -> ProblemBuilder {
        ProblemBuilder {
            grid,
            time: None,
            lambda_plus: None,
            lambda_minus: None,
            initial: None,
            boundary: None,
            allow_degenerate: false,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn time(&self) -> Option<&TimeGrid> {
        self.time.as_ref()
    }

    pub fn lambda_plus(&self) -> &CoefficientField {
        &self.lambda_plus
    }

    pub fn lambda_minus(&self) -> &CoefficientField {
        &self.lambda_minus
    }

    /// Sampled initial datum `g` (parabolic problems only).
    pub fn initial(&self) -> Option<&GridFunction> {
        self.initial.as_ref()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `max |g - h(0, ·)|` over boundary nodes (zero for elliptic problems).
    pub fn compatibility_gap(&self) -> f64 {
        self.compatibility_gap
    }

    pub fn boundary_value(&self, t: f64, node: usize) -> f64 {
        (self.boundary)(t, self.grid.point(node))
    }

    /// Overwrites the boundary entries of `u` with `h(t, ·)`.
    pub fn apply_boundary(&self, t: f64, u: &mut GridFunction) -> Result<()> {
        for node in self.grid.boundary_nodes() {
            let v = self.boundary_value(t, node);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    node,
                    context: format!("boundary datum at t = {t}"),
                });
            }
            u[node] = v;
        }
        Ok(())
    }

    /// Grid function holding `h(t, ·)` on the boundary and zero inside.
    pub fn boundary_values(&self, t: f64) -> Result<GridFunction> {
        let mut u = GridFunction::zeros(&self.grid);
        self.apply_boundary(t, &mut u)?;
        Ok(u)
    }

    /// Level zero of a time march: `g` inside, `h(0, ·)` on the boundary.
    pub fn initial_level(&self) -> Result<GridFunction> {
        let g = self.initial.as_ref().ok_or_else(|| {
            Error::InvalidProblem("parabolic solve needs an initial datum".into())
        })?;
        let mut u = g.clone();
        self.apply_boundary(0.0, &mut u)?;
        Ok(u)
    }

    /// Same problem on a different time grid.
    pub fn with_time(&self, time: TimeGrid) -> Self {
        let mut p = self.clone();
        p.time = Some(time);
        p
    }
}

/// Collects problem data and validates it on [`ProblemBuilder::build`].
pub struct ProblemBuilder {
    grid: GridSpec,
    time: Option<TimeGrid>,
    lambda_plus: Option<Coefficient>,
    lambda_minus: Option<Coefficient>,
    initial: Option<SpatialFn>,
    boundary: Option<BoundaryFn>,
    allow_degenerate: bool,
}

impl ProblemBuilder {
    pub fn time(mut self, time: TimeGrid) -> Self {
        self.time = Some(time);
        self
    }

    pub fn lambda_plus(mut self, coef: impl Into<Coefficient>) -> Self {
        self.lambda_plus = Some(coef.into());
        self
    }

    pub fn lambda_minus(mut self, coef: impl Into<Coefficient>) -> Self {
        self.lambda_minus = Some(coef.into());
        self
    }

    pub fn initial(mut self, g: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Some(Arc::new(g));
        self
    }

    pub fn initial_arc(mut self, g: SpatialFn) -> Self {
        self.initial = Some(g);
        self
    }

    /// Dirichlet datum `h(t, x)`.
    pub fn boundary(mut self, h: impl Fn(f64, Point) -> f64 + Send + Sync + 'static) -> Self {
        self.boundary = Some(Arc::new(h));
        self
    }

    pub fn boundary_arc(mut self, h: BoundaryFn) -> Self {
        self.boundary = Some(h);
        self
    }

    /// Time-independent Dirichlet datum.
    pub fn steady_boundary(self, h: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.boundary(move |_, p| h(p))
    }

    /// Permits `λ± = 0`, which reduces the problem to the heat (or Laplace)
    /// equation. Negative values are still rejected.
    pub fn allow_degenerate(mut self, allow: bool) -> Self {
        self.allow_degenerate = allow;
        self
    }

    pub fn build(self) -> Result<ProblemSpec> {
        let grid = self.grid;
        let lp = self
            .lambda_plus
            .ok_or_else(|| Error::InvalidProblem("missing lambda_plus".into()))?;
        let lm = self
            .lambda_minus
            .ok_or_else(|| Error::InvalidProblem("missing lambda_minus".into()))?;
        let boundary = self
            .boundary
            .ok_or_else(|| Error::InvalidProblem("missing boundary datum".into()))?;
        let lambda_plus = CoefficientField::sample(&grid, &lp, "lambda_plus", self.allow_degenerate)?;
        let lambda_minus =
            CoefficientField::sample(&grid, &lm, "lambda_minus", self.allow_degenerate)?;

        for node in grid.boundary_nodes() {
            if !boundary(0.0, grid.point(node)).is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "boundary datum is not finite at node {node}"
                )));
            }
        }

        let initial = match (&self.time, self.initial) {
            (Some(_), None) => {
                return Err(Error::InvalidProblem(
                    "a time-dependent problem needs an initial datum".into(),
                ))
            }
            (_, Some(g)) => Some(
                GridFunction::from_fn(&grid, |p| g(p))
                    .map_err(|_| Error::InvalidProblem("initial datum is not finite".into()))?,
            ),
            (None, None) => None,
        };

        let mut compatibility_gap = 0.0_f64;
        let mut scale = 0.0_f64;
        if let Some(g) = &initial {
            for node in grid.boundary_nodes() {
                let h0 = boundary(0.0, grid.point(node));
                compatibility_gap = compatibility_gap.max((g[node] - h0).abs());
                scale = scale.max(h0.abs());
            }
        }
        if compatibility_gap > COMPATIBILITY_TOLERANCE * (1.0 + scale) {
            log::warn!(
                "initial and boundary data disagree on the boundary by up to {compatibility_gap:e}"
            );
        }

        Ok(ProblemSpec {
            grid,
            time: self.time,
            lambda_plus,
            lambda_minus,
            initial,
            boundary,
            compatibility_gap,
            degenerate: self.allow_degenerate,
        })
    }
}

/// Spatial node count used by the reference figure runs (200 subintervals).
pub const REFERENCE_NODES: usize = 201;
/// Time step count used by the reference figure runs.
pub const REFERENCE_STEPS: usize = 250;

/// One of the three one-dimensional reference cases on `Ω = [0, 1]`, `T = 1`
/// with linear initial datum and constant boundary values taken from the
/// initial datum at the endpoints.
#[derive(Debug, Clone)]
pub struct BuiltinCase {
    pub name: &'static str,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// `g(x) = slope * x + offset`.
    pub slope: f64,
    pub offset: f64,
    /// The case at reference resolution (201 nodes, 250 steps).
    pub problem: ProblemSpec,
}

impl BuiltinCase {
    fn new(name: &'static str, lambda_plus: f64, lambda_minus: f64, slope: f64, offset: f64) -> Self {
        let problem = linear_case_problem(
            (lambda_plus, lambda_minus),
            (slope, offset),
            REFERENCE_NODES,
            Some(TimeGrid::new(1.0, REFERENCE_STEPS).expect("valid time grid")),
        )
        .expect("built-in case parameters are valid");
        Self {
            name,
            lambda_plus,
            lambda_minus,
            slope,
            offset,
            problem,
        }
    }

    pub fn initial_value(&self, x: f64) -> f64 {
        self.slope * x + self.offset
    }

    /// Boundary constants `(h1, h2)` at `x = 0` and `x = 1`.
    pub fn boundary_constants(&self) -> (f64, f64) {
        (self.initial_value(0.0), self.initial_value(1.0))
    }

    /// The case on `nodes` spatial nodes and `steps` time steps up to `horizon`.
    pub fn parabolic(&self, nodes: usize, steps: usize, horizon: f64) -> Result<ProblemSpec> {
        linear_case_problem(
            (self.lambda_plus, self.lambda_minus),
            (self.slope, self.offset),
            nodes,
            Some(TimeGrid::new(horizon, steps)?),
        )
    }

    /// The steady two-phase membrane problem with the same coefficients and
    /// boundary values.
    pub fn elliptic(&self, nodes: usize) -> Result<ProblemSpec> {
        linear_case_problem(
            (self.lambda_plus, self.lambda_minus),
            (self.slope, self.offset),
            nodes,
            None,
        )
    }
}

fn linear_case_problem(
    (lambda_plus, lambda_minus): (f64, f64),
    (slope, offset): (f64, f64),
    nodes: usize,
    time: Option<TimeGrid>,
) -> Result<ProblemSpec> {
    let (left, right) = (offset, slope + offset);
    let mut builder = ProblemSpec::builder(GridSpec::line(0.0, 1.0, nodes)?)
        .lambda_plus(lambda_plus)
        .lambda_minus(lambda_minus)
        .steady_boundary(move |p| if p.x < 0.5 { left } else { right });
    if let Some(time) = time {
        builder = builder.time(time).initial(move |p| slope * p.x + offset);
    }
    builder.build()
}

/// The three reference cases: `fig1`, `fig2`, `fig3`.
pub fn builtin_cases() -> Vec<BuiltinCase> {
    vec![
        BuiltinCase::new("fig1", 3.0, 1.0, 16.0, -8.0),
        BuiltinCase::new("fig2", 0.7, 0.2, 8.0, -4.0),
        BuiltinCase::new("fig3", 0.6, 0.6, 8.0, -4.0),
    ]
}

pub fn builtin_case(name: &str) -> Option<BuiltinCase> {
    builtin_cases().into_iter().find(|c| c.name == name)
}
