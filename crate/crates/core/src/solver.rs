//! Conservative explicit scheme for the regularised equation
//!
//! ```text
//! u_t + f(u)_x = Q(u_x)_x + eps u_xx
//! ```
//!
//! Interface fluxes are `F - G` with `F` the Engquist–Osher flux of f and
//! `G = Q(D) + eps D`, `D` the one-sided slope across the interface. With the
//! time step from [`max_stable_dt`] the update is monotone, so it inherits the
//! maximum principle, TV and L1 bounds and the L1 contraction property.

use rayon::prelude::*;

use crate::error::{arg, Error, Result};
use crate::model::{derive_constants, ModelConstants, ModelSpec};

/// Uniform node grid `x_i = x_left + i dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_left: f64,
    x_right: f64,
    n: usize,
}

impl Grid {
    pub const MIN_NODES: usize = 16;

    pub fn new(x_left: f64, x_right: f64, n: usize) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite() && x_right > x_left) {
            return arg(format!("grid needs finite x_left < x_right, got [{x_left}, {x_right}]"));
        }
        if n < Self::MIN_NODES {
            return arg(format!("grid needs at least {} nodes, got {n}", Self::MIN_NODES));
        }
        Ok(Self { x_left, x_right, n })
    }

    /// Grid on [x_left, x_right] whose spacing is `dx` (rounded to fit).
    pub fn with_spacing(x_left: f64, x_right: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return arg(format!("grid spacing must be positive, got {dx}"));
        }
        let cells = ((x_right - x_left) / dx).round() as usize;
        Self::new(x_left, x_right, cells + 1)
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        (self.x_right - self.x_left) / (self.n - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_right
        } else {
            self.x_left + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let k = ((x - self.x_left) / self.dx()).round();
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Nodal values of u on a grid at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub t: f64,
    pub u: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, t: f64, u: Vec<f64>) -> Result<Self> {
        if u.len() != grid.n() {
            return arg(format!("field has {} values for a grid of {} nodes", u.len(), grid.n()));
        }
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value {} at node {i}", u[i])));
        }
        Ok(Self { grid, t, u })
    }

    pub fn from_fn(grid: Grid, t: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let u = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, t, u)
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        self.u.iter().map(|v| v.abs()).sum::<f64>() * self.dx()
    }

    pub fn mass(&self) -> f64 {
        self.u.iter().sum::<f64>() * self.dx()
    }

    /// Sum of |u_{i+1} - u_i|; the periodic variant includes the wrap pair.
    pub fn total_variation(&self, boundary: Boundary) -> f64 {
        let inner: f64 = self.u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        match boundary {
            Boundary::Outflow => inner,
            Boundary::Periodic => inner + (self.u[0] - self.u[self.u.len() - 1]).abs(),
        }
    }

    /// Linear interpolation of the nodal values; constant beyond the ends.
    pub fn sample(&self, x: f64) -> f64 {
        let dx = self.dx();
        let s = (x - self.grid.x_left()) / dx;
        if s <= 0.0 {
            return self.u[0];
        }
        let n = self.u.len();
        if s >= (n - 1) as f64 {
            return self.u[n - 1];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        (1.0 - w) * self.u[i] + w * self.u[i + 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Zero-gradient ghost nodes.
    Outflow,
    /// Node n-1 neighbours node 0 at distance dx.
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outflow" => Ok(Self::Outflow),
            "periodic" => Ok(Self::Periodic),
            other => arg(format!("unknown boundary '{other}' (expected outflow or periodic)")),
        }
    }
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Outflow => "outflow",
            Self::Periodic => "periodic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Artificial viscosity, >= 0.
    pub epsilon: f64,
    /// Fraction of the stability limit, in (0, 1].
    pub cfl_safety: f64,
    pub boundary: Boundary,
    pub t_end: f64,
    /// Output times in [0, t_end]; t_end is always recorded.
    pub snapshot_times: Vec<f64>,
    /// Use this step instead of the adaptive one (must not exceed it).
    /// Lets separate runs share one time grid.
    pub fixed_dt: Option<f64>,
}

impl SolverConfig {
    pub fn new(epsilon: f64, t_end: f64) -> Self {
        Self {
            epsilon,
            cfl_safety: 0.4,
            boundary: Boundary::Outflow,
            t_end,
            snapshot_times: vec![],
            fixed_dt: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return arg(format!("epsilon must be finite and >= 0, got {}", self.epsilon));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return arg(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return arg(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        if let Some(&t) = self.snapshot_times.iter().find(|&&t| !(t >= 0.0 && t <= self.t_end)) {
            return arg(format!("snapshot time {t} outside [0, {}]", self.t_end));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0) {
                return arg(format!("fixed_dt must be positive, got {dt}"));
            }
        }
        Ok(())
    }

    /// Sorted, de-duplicated output times ending with t_end.
    pub fn output_times(&self) -> Vec<f64> {
        let mut ts = self.snapshot_times.clone();
        ts.push(self.t_end);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

/// Monitors for one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub sup: f64,
    pub l1: f64,
    pub tv: f64,
    /// sum |Q(D_{i+1/2}) - Q(D_{i-1/2})| + eps sum |D_{i+1/2} - D_{i-1/2}|
    pub qbv: f64,
    pub mass: f64,
}

/// Per-step monitors. `initial` describes the datum; `rows` holds one entry
/// per completed step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub initial: DiagRow,
    pub rows: Vec<DiagRow>,
}

impl DiagnosticsReport {
    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    fn series(&self, f: impl Fn(&DiagRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn sup_norm_series(&self) -> Vec<f64> {
        self.series(|r| r.sup)
    }

    pub fn l1_norm_series(&self) -> Vec<f64> {
        self.series(|r| r.l1)
    }

    pub fn tv_series(&self) -> Vec<f64> {
        self.series(|r| r.tv)
    }

    pub fn qflux_bv_series(&self) -> Vec<f64> {
        self.series(|r| r.qbv)
    }

    pub fn mass_series(&self) -> Vec<f64> {
        self.series(|r| r.mass)
    }

    pub fn dt_series(&self) -> Vec<f64> {
        self.series(|r| r.dt)
    }

    /// Initial row followed by all step rows.
    pub fn all_rows(&self) -> impl Iterator<Item = &DiagRow> {
        std::iter::once(&self.initial).chain(self.rows.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub epsilon: f64,
    pub snapshots: Vec<GridField>,
    pub diagnostics: DiagnosticsReport,
}

impl Trajectory {
    pub fn final_state(&self) -> &GridField {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&GridField> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }
}

/// Explicit stability limit
/// `safety / (F(M)/dx + 2 (Q1 + eps)/dx^2)`.
pub fn max_stable_dt(f_lip: f64, q1: f64, epsilon: f64, dx: f64, safety: f64) -> f64 {
    safety / (f_lip / dx + 2.0 * (q1 + epsilon) / (dx * dx))
}

pub fn stable_dt(state: &GridField, model: &ModelSpec, config: &SolverConfig) -> Result<f64> {
    if let Some(i) = state.u.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite state at node {i}")));
    }
    config.validate()?;
    let c = derive_constants(model, state.sup_norm().max(1e-12))?;
    Ok(max_stable_dt(
        c.f_lip,
        c.q1,
        config.epsilon,
        state.dx(),
        config.cfl_safety,
    ))
}

/// Reusable work arrays for the update. Interface `k` sits between nodes
/// `k-1` and `k`; interfaces 0 and n are the boundary ones.
struct Stepper<'a> {
    model: &'a ModelSpec,
    epsilon: f64,
    boundary: Boundary,
    dx: f64,
    slope: Vec<f64>,
    q_of_slope: Vec<f64>,
    flux: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a ModelSpec, epsilon: f64, boundary: Boundary, grid: &Grid) -> Self {
        let n = grid.n();
        Self {
            model,
            epsilon,
            boundary,
            dx: grid.dx(),
            slope: vec![0.0; n + 1],
            q_of_slope: vec![0.0; n + 1],
            flux: vec![0.0; n + 1],
        }
    }

    #[inline]
    fn sides(&self, u: &[f64], k: usize) -> (f64, f64) {
        let n = u.len();
        match (self.boundary, k) {
            (Boundary::Outflow, 0) => (u[0], u[0]),
            (Boundary::Outflow, k) if k == n => (u[n - 1], u[n - 1]),
            (Boundary::Periodic, 0) => (u[n - 1], u[0]),
            (Boundary::Periodic, k) if k == n => (u[n - 1], u[0]),
            (_, k) => (u[k - 1], u[k]),
        }
    }

    fn refresh(&mut self, u: &[f64]) {
        let q = &self.model.dissipation;
        for k in 0..=u.len() {
            let (l, r) = self.sides(u, k);
            let d = (r - l) / self.dx;
            self.slope[k] = d;
            self.q_of_slope[k] = q.eval(d);
        }
    }

    /// One forward-Euler update; `refresh` must have been called for `u`.
    fn advance(&mut self, u: &mut [f64], dt: f64) {
        let f = &self.model.flux;
        let n = u.len();
        for k in 0..=n {
            let (l, r) = self.sides(u, k);
            let convective = f.engquist_osher(l, r);
            let diffusive = self.q_of_slope[k] + self.epsilon * self.slope[k];
            self.flux[k] = convective - diffusive;
        }
        let ratio = dt / self.dx;
        for (i, ui) in u.iter_mut().enumerate() {
            *ui -= ratio * (self.flux[i + 1] - self.flux[i]);
        }
        self.refresh(u);
    }

    fn diagnostics(&self, u: &[f64], step: usize, t: f64, dt: f64) -> DiagRow {
        let dx = self.dx;
        let n = u.len();
        let (mut sup, mut l1, mut mass) = (0.0f64, 0.0, 0.0);
        for &v in u {
            sup = sup.max(v.abs());
            l1 += v.abs();
            mass += v;
        }
        let tv_range = match self.boundary {
            Boundary::Outflow => 0..=n,
            Boundary::Periodic => 1..=n,
        };
        let tv: f64 = tv_range.map(|k| self.slope[k].abs()).sum::<f64>() * dx;
        let mut qbv = 0.0;
        let mut dbv = 0.0;
        for i in 0..n {
            qbv += (self.q_of_slope[i + 1] - self.q_of_slope[i]).abs();
            dbv += (self.slope[i + 1] - self.slope[i]).abs();
        }
        DiagRow {
            step,
            t,
            dt,
            sup,
            l1: l1 * dx,
            tv,
            qbv: qbv + self.epsilon * dbv,
            mass: mass * dx,
        }
    }
}

const MAX_PRINCIPLE_SLACK: f64 = 1e-9;

fn check_bounds(u: &[f64], lower: f64, upper: f64, t: f64) -> Result<()> {
    for &v in u {
        if !(v >= lower - MAX_PRINCIPLE_SLACK && v <= upper + MAX_PRINCIPLE_SLACK) {
            return Err(Error::Unstable {
                t,
                value: v,
                lower,
                upper,
            });
        }
    }
    Ok(())
}

/// Advances `state` by one step of size `dt`. Fails if the result leaves the
/// range of the input by more than the rounding slack.
pub fn step(state: &GridField, model: &ModelSpec, config: &SolverConfig, dt: f64) -> Result<GridField> {
    config.validate()?;
    if !(dt > 0.0) {
        return arg(format!("time step must be positive, got {dt}"));
    }
    let mut u = state.u.clone();
    let mut st = Stepper::new(model, config.epsilon, config.boundary, &state.grid);
    st.refresh(&u);
    st.advance(&mut u, dt);
    let t = state.t + dt;
    check_bounds(&u, state.min(), state.max(), t)?;
    GridField::new(state.grid, t, u)
}

/// Runs the regularised problem from `u0` to `config.t_end`, recording
/// snapshots at the requested times and monitors after every step.
pub fn solve(u0: &GridField, model: &ModelSpec, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    let consts: ModelConstants = derive_constants(model, u0.sup_norm().max(1e-12))?;
    let dx = u0.dx();
    let dt_limit = max_stable_dt(consts.f_lip, consts.q1, config.epsilon, dx, config.cfl_safety);
    let dt_nominal = match config.fixed_dt {
        Some(dt) if dt > dt_limit * (1.0 + 1e-12) => {
            return arg(format!("fixed_dt {dt} exceeds the stability limit {dt_limit}"));
        }
        Some(dt) => dt,
        None => dt_limit,
    };
    let (lower, upper) = (u0.min(), u0.max());

    let mut u = u0.u.clone();
    let mut t = u0.t;
    let mut st = Stepper::new(model, config.epsilon, config.boundary, &u0.grid);
    st.refresh(&u);
    let initial = st.diagnostics(&u, 0, t, 0.0);
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut step_no = 0;

    for target in config.output_times() {
        if target < t - 1e-14 {
            continue;
        }
        while t < target {
            let remaining = target - t;
            let dt = if remaining <= dt_nominal * (1.0 + 1e-9) {
                remaining
            } else {
                dt_nominal
            };
            st.advance(&mut u, dt);
            step_no += 1;
            t = if dt == remaining { target } else { t + dt };
            check_bounds(&u, lower, upper, t)?;
            rows.push(st.diagnostics(&u, step_no, t, dt));
        }
        snapshots.push(GridField::new(u0.grid, t, u.clone())?);
    }
    Ok(Trajectory {
        epsilon: config.epsilon,
        snapshots,
        diagnostics: DiagnosticsReport { initial, rows },
    })
}

/// Discrete L1 distance `sum |a_i - b_i| dx`.
pub fn l1_distance(a: &GridField, b: &GridField) -> Result<f64> {
    if a.grid != b.grid {
        return arg("l1_distance needs fields on the same grid");
    }
    Ok(a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).sum::<f64>() * a.dx())
}

/// Independent runs for each viscosity in `eps_list` (non-negative, strictly
/// decreasing), executed in parallel; the result order follows `eps_list`.
pub fn epsilon_continuation(
    u0: &GridField,
    model: &ModelSpec,
    config: &SolverConfig,
    eps_list: &[f64],
) -> Result<Vec<Trajectory>> {
    if eps_list.is_empty() {
        return arg("eps_list is empty");
    }
    if eps_list.iter().any(|&e| !(e >= 0.0)) {
        return arg("eps_list entries must be >= 0");
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return arg("eps_list must be strictly decreasing");
    }
    eps_list
        .par_iter()
        .map(|&eps| {
            let cfg = SolverConfig {
                epsilon: eps,
                ..config.clone()
            };
            solve(u0, model, &cfg)
        })
        .collect()
}
