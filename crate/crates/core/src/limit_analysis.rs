//! Post-processing of computed states: the limiting viscous flux
//! `Q_lim = lim Q((u(x+h) - u(x-h)) / 2h)`, shock detection and tracking,
//! the chord admissibility test, and the weak-form residual.

use rayon::prelude::*;

use crate::error::{arg, Error, Result};
use crate::model::{FluxFunction, ModelSpec};
use crate::numerics::{golden_max, linspace};
use crate::solver::GridField;

#[derive(Debug, Clone, PartialEq)]
pub struct QLimOptions {
    /// Stencil half-widths in cells, increasing.
    pub h_sweep: Vec<usize>,
    /// Successive sweep values closer than this count as converged.
    pub tol_sat: f64,
}

impl QLimOptions {
    /// Half-widths 1, 2, 4, 8 cells; tolerance 1% of the larger saturation level.
    pub fn for_model(model: &ModelSpec) -> Self {
        Self {
            h_sweep: vec![1, 2, 4, 8],
            tol_sat: 1e-2 * model.dissipation.q_bar(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QLimProfile {
    pub t: f64,
    pub x_nodes: Vec<f64>,
    pub q_values: Vec<f64>,
    /// Half-width (in x units) whose value was kept.
    pub h_used: Vec<f64>,
    /// Nodes where q is within `tol_sat` of a saturation level.
    pub saturation_flags: Vec<bool>,
    /// Nodes where the sweep never settled; the smallest-h value is kept.
    pub unsaturated: Vec<bool>,
}

impl QLimProfile {
    /// Value at the node nearest to `x`.
    pub fn at(&self, x: f64) -> f64 {
        let dx = self.x_nodes[1] - self.x_nodes[0];
        let k = ((x - self.x_nodes[0]) / dx)
            .round()
            .clamp(0.0, (self.x_nodes.len() - 1) as f64) as usize;
        self.q_values[k]
    }

    /// Largest adjacent difference and the midpoint where it occurs.
    pub fn worst_jump(&self) -> (f64, f64) {
        self.q_values
            .windows(2)
            .enumerate()
            .map(|(i, w)| (0.5 * (self.x_nodes[i] + self.x_nodes[i + 1]), (w[1] - w[0]).abs()))
            .fold((self.x_nodes[0], 0.0), |best, c| if c.1 > best.1 { c } else { best })
    }

    /// Discrete variation of q.
    pub fn variation(&self) -> f64 {
        self.q_values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }
}

/// Reconstructs `Q_lim` node by node from symmetric difference quotients.
/// Stencils reaching past the grid ends use the end values.
pub fn q_lim_profile(state: &GridField, model: &ModelSpec, opts: &QLimOptions) -> Result<QLimProfile> {
    if opts.h_sweep.is_empty() {
        return arg("empty h sweep");
    }
    if opts.h_sweep[0] == 0 || opts.h_sweep.windows(2).any(|w| w[1] <= w[0]) {
        return arg("h sweep must be positive and strictly increasing");
    }
    if !(opts.tol_sat > 0.0) {
        return arg("saturation tolerance must be positive");
    }
    let n = state.u.len();
    let dx = state.dx();
    let q = &model.dissipation;
    let (q_lo, q_hi) = (q.q_minus_inf(), q.q_plus_inf());
    let at = |i: isize| state.u[i.clamp(0, n as isize - 1) as usize];
    let mut out = QLimProfile {
        t: state.t,
        x_nodes: state.grid.nodes(),
        q_values: Vec::with_capacity(n),
        h_used: Vec::with_capacity(n),
        saturation_flags: Vec::with_capacity(n),
        unsaturated: Vec::with_capacity(n),
    };
    let mut sweep = Vec::with_capacity(opts.h_sweep.len());
    for i in 0..n as isize {
        sweep.clear();
        sweep.extend(opts.h_sweep.iter().map(|&k| {
            let k = k as isize;
            q.eval((at(i + k) - at(i - k)) / (2.0 * k as f64 * dx))
                .clamp(q_lo, q_hi)
        }));
        let settled = sweep.windows(2).position(|w| (w[1] - w[0]).abs() < opts.tol_sat);
        let j = settled.unwrap_or(0);
        let v = sweep[j];
        out.q_values.push(v);
        out.h_used.push(opts.h_sweep[j] as f64 * dx);
        out.saturation_flags
            .push((v - q_lo).abs() < opts.tol_sat || (v - q_hi).abs() < opts.tol_sat);
        out.unsaturated.push(settled.is_none() && sweep.len() > 1);
    }
    Ok(out)
}

/// Max over nodes of |q(x_{i+1}) - q(x_i)|.
pub fn continuity_modulus(profile: &QLimProfile) -> f64 {
    profile.worst_jump().1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedShock {
    /// Where u crosses the mean of its side values.
    pub location: f64,
    pub u_minus: f64,
    pub u_plus: f64,
    /// First and last interface of the steep run (interface k joins nodes k, k+1).
    pub first_interface: usize,
    pub last_interface: usize,
}

impl DetectedShock {
    pub fn strength(&self) -> f64 {
        self.u_minus - self.u_plus
    }
}

/// Steep-gradient default, `0.2 / dx`.
pub fn default_slope_threshold(dx: f64) -> f64 {
    0.2 / dx
}

/// Merges contiguous runs of interfaces with `|D| > slope_threshold` into
/// shocks. Side values come from the first node past the run where `|D|`
/// has dropped below a tenth of the threshold.
pub fn detect_shocks(state: &GridField, slope_threshold: f64) -> Vec<DetectedShock> {
    let u = &state.u;
    let dx = state.dx();
    let m = u.len() - 1;
    let d: Vec<f64> = u.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
    let calm = 0.1 * slope_threshold;
    let mut out = Vec::new();
    let mut k = 0;
    while k < m {
        if d[k].abs() <= slope_threshold {
            k += 1;
            continue;
        }
        let start = k;
        while k < m && d[k].abs() > slope_threshold {
            k += 1;
        }
        let end = k - 1;
        let mut l = start;
        while l > 0 && d[l - 1].abs() >= calm {
            l -= 1;
        }
        let mut r = end + 1;
        while r < m && d[r].abs() >= calm {
            r += 1;
        }
        let (um, up) = (u[l], u[r]);
        let mid = 0.5 * (um + up);
        let mut location = state.grid.x(start) + 0.5 * dx;
        for j in l..r {
            let (a, b) = (u[j] - mid, u[j + 1] - mid);
            if a == 0.0 {
                location = state.grid.x(j);
                break;
            }
            if a * b < 0.0 {
                location = state.grid.x(j) + dx * a / (a - b);
                break;
            }
        }
        if um != up {
            out.push(DetectedShock {
                location,
                u_minus: um,
                u_plus: up,
                first_interface: start,
                last_interface: end,
            });
        }
    }
    // neighbouring runs whose calm zones overlap describe the same front
    out.dedup_by(|b, a| {
        if b.first_interface <= a.last_interface + 2 {
            a.u_plus = b.u_plus;
            a.last_interface = b.last_interface;
            true
        } else {
            false
        }
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EVerdict {
    pub satisfied: bool,
    /// Largest amount by which the chord lies on the wrong side of f (<= 0 when satisfied).
    pub worst_violation: f64,
    pub worst_at: f64,
}

/// Chord test: with `l(u) = f(u-) + (u - u-) (f(u+) - f(u-)) / (u+ - u-)`
/// a decreasing jump needs `l >= f` and an increasing jump `l <= f` between
/// the states.
pub fn condition_e_check(f: &FluxFunction, u_minus: f64, u_plus: f64, n_grid: usize) -> Result<EVerdict> {
    if u_minus == u_plus {
        return arg("condition E needs distinct states");
    }
    if n_grid < 101 {
        return arg(format!("condition E needs at least 101 grid points, got {n_grid}"));
    }
    let (fm, fp) = (f.eval(u_minus), f.eval(u_plus));
    let s = (fp - fm) / (u_plus - u_minus);
    let sign = if u_minus > u_plus { 1.0 } else { -1.0 };
    let excess = |u: f64| sign * (f.eval(u) - (fm + (u - u_minus) * s));
    let (lo, hi) = (u_minus.min(u_plus), u_minus.max(u_plus));
    let pts = linspace(lo, hi, n_grid);
    let vals: Vec<f64> = pts.iter().map(|&u| excess(u)).collect();
    let (k, _) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let (a, b) = (pts[k.saturating_sub(1)], pts[(k + 1).min(n_grid - 1)]);
    let (mut at, mut worst) = golden_max(excess, a, b, 1e-14);
    if vals[k] > worst {
        at = pts[k];
        worst = vals[k];
    }
    let scale = 1.0 + fm.abs() + fp.abs() + s.abs() * (hi - lo);
    Ok(EVerdict {
        satisfied: worst <= 1e-12 * scale,
        worst_violation: worst,
        worst_at: at,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockSample {
    pub t: f64,
    pub location: f64,
    pub u_minus: f64,
    pub u_plus: f64,
    pub measured_speed: f64,
    /// Chord slope of f between the sampled side values.
    pub chord_speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShockRecord {
    pub samples: Vec<ShockSample>,
    /// Chord test on the side values of every sample; the worst one is kept.
    pub admissibility: EVerdict,
    /// Max over samples of |measured - chord| (central differences only when
    /// at least three samples exist).
    pub hugoniot_residual: f64,
    /// The track was lost before the last snapshot.
    pub truncated: bool,
}

impl ShockRecord {
    pub fn mean_speed(&self) -> f64 {
        self.samples.iter().map(|s| s.measured_speed).sum::<f64>() / self.samples.len() as f64
    }
}

/// Follows detected shocks across snapshots by nearest location, measures
/// their speed by differencing and compares it with the chord slope.
pub fn track_and_check_hugoniot(
    snapshots: &[GridField],
    model: &ModelSpec,
    slope_threshold: f64,
) -> Result<Vec<ShockRecord>> {
    let f = &model.flux;
    let detected: Vec<(f64, Vec<DetectedShock>)> = snapshots
        .par_iter()
        .map(|s| (s.t, detect_shocks(s, slope_threshold)))
        .collect();
    // tracks: (list of (t, shock)), alive
    let mut tracks: Vec<(Vec<(f64, DetectedShock)>, bool)> = Vec::new();
    let mut prev_t: Option<f64> = None;
    for (t, shocks) in &detected {
        let dt = prev_t.map_or(0.0, |p| t - p);
        let mut taken = vec![false; shocks.len()];
        for (track, alive) in tracks.iter_mut().filter(|(_, a)| *a) {
            let last = track.last().expect("tracks are never empty").1;
            let umax = last.u_minus.abs().max(last.u_plus.abs());
            let sup = umax.max(1e-300);
            let reach = local_speed_bound(f, -sup, sup) * dt + 10.0 * snapshots[0].dx();
            let best = shocks
                .iter()
                .enumerate()
                .filter(|(i, _)| !taken[*i])
                .map(|(i, s)| (i, (s.location - last.location).abs()))
                .filter(|&(_, d)| d <= reach)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((i, _)) => {
                    taken[i] = true;
                    track.push((*t, shocks[i]));
                }
                None => *alive = false,
            }
        }
        for (i, s) in shocks.iter().enumerate() {
            if !taken[i] {
                tracks.push((vec![(*t, *s)], true));
            }
        }
        prev_t = Some(*t);
    }
    let mut out = Vec::new();
    for (track, alive) in tracks {
        if track.len() < 2 {
            continue;
        }
        let n = track.len();
        let mut samples = Vec::with_capacity(n);
        let mut admissibility: Option<EVerdict> = None;
        let mut residual: f64 = 0.0;
        for j in 0..n {
            let (a, b) = match j {
                0 => (0, 1),
                _ if j == n - 1 => (n - 2, n - 1),
                _ => (j - 1, j + 1),
            };
            let speed = (track[b].1.location - track[a].1.location) / (track[b].0 - track[a].0);
            if !speed.is_finite() {
                return Err(Error::Numeric(format!("shock speed undefined near t = {}", track[j].0)));
            }
            let s = track[j].1;
            let chord = (f.eval(s.u_plus) - f.eval(s.u_minus)) / (s.u_plus - s.u_minus);
            if n < 3 || (j > 0 && j < n - 1) {
                residual = residual.max((speed - chord).abs());
            }
            let v = condition_e_check(f, s.u_minus, s.u_plus, 401)?;
            if admissibility.is_none_or(|w| v.worst_violation > w.worst_violation) {
                admissibility = Some(v);
            }
            samples.push(ShockSample {
                t: track[j].0,
                location: s.location,
                u_minus: s.u_minus,
                u_plus: s.u_plus,
                measured_speed: speed,
                chord_speed: chord,
            });
        }
        out.push(ShockRecord {
            samples,
            admissibility: admissibility.expect("at least two samples"),
            hugoniot_residual: residual,
            truncated: !alive,
        });
    }
    out.sort_by(|a, b| a.samples[0].location.total_cmp(&b.samples[0].location));
    Ok(out)
}

fn local_speed_bound(f: &FluxFunction, lo: f64, hi: f64) -> f64 {
    linspace(lo, hi, 201).iter().fold(0.0, |m, &u| m.max(f.deriv(u).abs()))
}

/// At each detected shock, distance of q at the nearest node from the
/// saturation level prescribed by the jump direction.
pub fn shock_flux_deviation(profile: &QLimProfile, shocks: &[DetectedShock], model: &ModelSpec) -> Vec<f64> {
    shocks
        .iter()
        .map(|s| {
            let target = if s.u_minus > s.u_plus {
                model.dissipation.q_minus_inf()
            } else {
                model.dissipation.q_plus_inf()
            };
            (profile.at(s.location) - target).abs()
        })
        .collect()
}

/// `exp(-1/(1-r^2))` and its derivative.
fn bump(r: f64) -> (f64, f64) {
    if r.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let g = 1.0 - r * r;
    let v = (-1.0 / g).exp();
    (v, v * (-2.0 * r / (g * g)))
}

/// Tensor test function `psi((t - t_c)/tau) psi((x - x_c)/w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorBump {
    pub t_center: f64,
    pub t_half_width: f64,
    pub x_center: f64,
    pub x_half_width: f64,
}

impl TensorBump {
    /// (phi, phi_t, phi_x)
    pub fn eval(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let (pt, dpt) = bump((t - self.t_center) / self.t_half_width);
        let (px, dpx) = bump((x - self.x_center) / self.x_half_width);
        (pt * px, dpt / self.t_half_width * px, pt * dpx / self.x_half_width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestBank {
    pub bumps: Vec<TensorBump>,
}

impl TestBank {
    /// Three centres at the quarter points of `[x_lo, x_hi]`, spatial
    /// half-widths of a quarter and an eighth of the length, centred in
    /// `[t_lo, t_hi]` with half-widths 0.45 and 0.25 of its length.
    pub fn standard(x_lo: f64, x_hi: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(x_hi > x_lo) || !(t_hi > t_lo) {
            return arg("test bank needs a non-empty space-time box");
        }
        let len = x_hi - x_lo;
        let span = t_hi - t_lo;
        let mut bumps = Vec::with_capacity(12);
        for c in [0.25, 0.5, 0.75] {
            for w in [0.25, 0.125] {
                for tau in [0.45, 0.25] {
                    bumps.push(TensorBump {
                        t_center: t_lo + 0.5 * span,
                        t_half_width: tau * span,
                        x_center: x_lo + c * len,
                        x_half_width: w * len,
                    });
                }
            }
        }
        Ok(Self { bumps })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidual {
    /// |int int (u phi_t + f(u) phi_x - Q_lim phi_x)| per test function.
    pub per_test: Vec<f64>,
    /// The same integral with absolute values inside, for scale.
    pub magnitude: Vec<f64>,
}

impl WeakResidual {
    pub fn max(&self) -> f64 {
        self.per_test.iter().copied().fold(0.0, f64::max)
    }

    /// Largest residual over the largest integrand magnitude in the bank.
    pub fn normalized(&self) -> f64 {
        let scale = self.magnitude.iter().copied().fold(0.0, f64::max);
        if scale > 0.0 {
            self.max() / scale
        } else {
            0.0
        }
    }
}

/// Space-time quadrature of the weak identity over the snapshots
/// (trapezoid in t across snapshots, nodal sum in x). The time
/// rule is only second order, so snapshots should be dense: with a
/// hundred or more per run the quadrature error stays below the
/// discretisation error of a first-order solution.
pub fn weak_residual(
    snapshots: &[GridField],
    model: &ModelSpec,
    qlim: &[QLimProfile],
    bank: &TestBank,
) -> Result<WeakResidual> {
    if snapshots.len() < 2 {
        return arg("weak residual needs at least two snapshots");
    }
    if qlim.len() != snapshots.len() {
        return arg(format!(
            "{} Q_lim profiles for {} snapshots",
            qlim.len(),
            snapshots.len()
        ));
    }
    if snapshots.windows(2).any(|w| w[1].t <= w[0].t) {
        return arg("snapshots must be strictly increasing in time");
    }
    let grid = snapshots[0].grid;
    let (xl, xr) = (grid.x_left(), grid.x_right());
    let (t0, t1) = (snapshots[0].t, snapshots[snapshots.len() - 1].t);
    for b in &bank.bumps {
        if b.x_center - b.x_half_width < xl - 1e-12
            || b.x_center + b.x_half_width > xr + 1e-12
            || b.t_center - b.t_half_width < t0 - 1e-12
            || b.t_center + b.t_half_width > t1 + 1e-12
        {
            return arg(format!("test function support exceeds the computed domain: {b:?}"));
        }
    }
    let dx = grid.dx();
    let nodes = grid.nodes();
    let f = &model.flux;
    let fu: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|s| s.u.iter().map(|&u| f.eval(u)).collect())
        .collect();
    let wt: Vec<f64> = (0..snapshots.len())
        .map(|k| {
            let left = if k > 0 {
                snapshots[k].t - snapshots[k - 1].t
            } else {
                0.0
            };
            let right = if k + 1 < snapshots.len() {
                snapshots[k + 1].t - snapshots[k].t
            } else {
                0.0
            };
            0.5 * (left + right)
        })
        .collect();
    let results: Vec<(f64, f64)> = bank
        .bumps
        .par_iter()
        .map(|b| {
            let mut total = 0.0;
            let mut mag = 0.0;
            for (k, s) in snapshots.iter().enumerate() {
                if wt[k] == 0.0 {
                    continue;
                }
                let mut row = 0.0;
                let mut row_mag = 0.0;
                for (i, &x) in nodes.iter().enumerate() {
                    let (_, pt, px) = b.eval(s.t, x);
                    if pt == 0.0 && px == 0.0 {
                        continue;
                    }
                    let a = s.u[i] * pt;
                    let c = fu[k][i] * px;
                    let q = qlim[k].q_values[i] * px;
                    row += a + c - q;
                    row_mag += a.abs() + c.abs() + q.abs();
                }
                total += wt[k] * row * dx;
                mag += wt[k] * row_mag * dx;
            }
            (total.abs(), mag)
        })
        .collect();
    Ok(WeakResidual {
        per_test: results.iter().map(|r| r.0).collect(),
        magnitude: results.iter().map(|r| r.1).collect(),
    })
}

/// `int |u(t, .) - u0|` over the grid for every snapshot, ordered by t.
pub fn initial_trace_check(snapshots: &[GridField], u0: &GridField) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        if s.grid != u0.grid {
            return arg("snapshot and initial datum live on different grids");
        }
        let diff: Vec<f64> = s.u.iter().zip(&u0.u).map(|(a, b)| (a - b).abs()).collect();
        out.push((s.t, crate::initial_data::trapezoid(&diff, s.dx())));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Variation of u over the outer `fraction` of the grid on each side; small
/// values indicate the far-field decay the solution class assumes.
pub fn far_field_variation(state: &GridField, fraction: f64) -> (f64, f64) {
    let n = state.u.len();
    let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n - 1);
    let tv = |v: &[f64]| v.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
    (tv(&state.u[..=k]), tv(&state.u[n - 1 - k..]))
}
