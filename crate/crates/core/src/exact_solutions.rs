//! Exact reference solutions.
//!
//! Traveling waves `u = b(x - s t)` satisfy `Q(b') = fhat(b)` with the chord
//! deficit `fhat(b) = f(b) - f(b_-) - s (b - b_-)`, so the profile is the
//! inverse of `xi(b) = int_{b0}^{b} dB / Q^{-1}(fhat(B))`. When the deficit
//! dips below `Q(-inf)` the integrand cannot be continued through the
//! minimum and the profile jumps between the two roots of
//! `fhat(b) = Q(-inf)` at `xi = 0`.
//!
//! For `f = 0` and a step datum the solution is self-similar in
//! `z = x / sqrt(t)` and keeps its jump for a finite time;
//! [`fit_similarity`] measures the local exponent of the rescaled profile.

use crate::error::{arg, Error, Result};
use crate::model::{FluxFunction, ModelSpec};
use crate::numerics::{bisect, fit_line, gl_panel, golden_max, linspace, maximize_sampled, MonotoneCubic};
use crate::solver::{Grid, GridField};

/// Chord slope `(f(b+) - f(b-)) / (b+ - b-)`.
pub fn wave_speed(f: &FluxFunction, b_minus: f64, b_plus: f64) -> Result<f64> {
    if b_minus == b_plus {
        return arg("wave speed needs distinct states");
    }
    Ok((f.eval(b_plus) - f.eval(b_minus)) / (b_plus - b_minus))
}

fn chord_deficit_fn(f: &FluxFunction, b_minus: f64, s: f64) -> impl Fn(f64) -> f64 + '_ {
    let fm = f.eval(b_minus);
    move |b| f.eval(b) - fm - s * (b - b_minus)
}

/// Minimum `m <= 0` of the chord deficit over `[b+, b-]` and its location.
pub fn chord_deficit(f: &FluxFunction, b_minus: f64, b_plus: f64) -> Result<(f64, f64)> {
    if !(b_minus > b_plus) {
        return arg(format!(
            "chord deficit needs b_minus > b_plus, got ({b_minus}, {b_plus})"
        ));
    }
    let s = wave_speed(f, b_minus, b_plus)?;
    let fhat = chord_deficit_fn(f, b_minus, s);
    let grid = linspace(b_plus, b_minus, 4001);
    let (arg_min, neg) = maximize_sampled(|b| -fhat(b), &grid, 1e-14);
    let m = (-neg).min(0.0);
    Ok((m, arg_min))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaveClass {
    Continuous,
    /// Jump from `b1` (left) down to `b2` (right) at xi = 0.
    Discontinuous {
        b1: f64,
        b2: f64,
    },
    NoWave,
}

const ROOT_TOL: f64 = 1e-14;

/// Traveling-wave type for the states (b-, b+).
///
/// Increasing states admit no wave. A decreasing pair whose chord deficit
/// turns positive somewhere (non-convex f) has no monotone connection either
/// and is also reported as `NoWave`.
pub fn classify_wave(model: &ModelSpec, b_minus: f64, b_plus: f64) -> Result<WaveClass> {
    if b_minus == b_plus {
        return arg("wave classification needs distinct states");
    }
    if b_minus < b_plus {
        return Ok(WaveClass::NoWave);
    }
    let f = &model.flux;
    let s = wave_speed(f, b_minus, b_plus)?;
    let fhat = chord_deficit_fn(f, b_minus, s);
    let scale = f.eval(b_minus).abs() + f.eval(b_plus).abs() + s.abs() * (b_minus - b_plus);
    let interior = linspace(b_plus, b_minus, 4001);
    let (_, fmax) = maximize_sampled(&fhat, &interior[1..interior.len() - 1], 1e-14);
    if fmax > 1e-12 * (1.0 + scale) {
        return Ok(WaveClass::NoWave);
    }
    let (m, arg_min) = chord_deficit(f, b_minus, b_plus)?;
    let q_minus = model.dissipation.q_minus_inf();
    if m.abs() <= q_minus.abs() {
        return Ok(WaveClass::Continuous);
    }
    let g = |b: f64| fhat(b) - q_minus;
    let b2 = bisect(g, b_plus, arg_min, ROOT_TOL)
        .map_err(|e| Error::Internal(format!("lower root of fhat = Q(-inf) not bracketed: {e}")))?;
    let b1 = bisect(g, arg_min, b_minus, ROOT_TOL)
        .map_err(|e| Error::Internal(format!("upper root of fhat = Q(-inf) not bracketed: {e}")))?;
    Ok(WaveClass::Discontinuous { b1, b2 })
}

/// One monotone piece of the profile: `xi` as a function of `b` on
/// `[lo, hi]`, anchored at `xi(anchor) = 0`.
#[derive(Debug, Clone)]
struct Branch {
    /// b nodes, ascending
    b: Vec<f64>,
    /// xi at the nodes, descending
    xi: Vec<f64>,
    /// b(xi) for initial guesses; abscissae ascending
    inverse: MonotoneCubic,
    /// exponential decay rates towards (lo, hi) ends; None for a regular end
    rate_lo: Option<f64>,
    rate_hi: Option<f64>,
    end_lo: f64,
    end_hi: f64,
}

#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub b_minus: f64,
    pub b_plus: f64,
    pub speed: f64,
    pub class: WaveClass,
    /// minimum of the chord deficit
    pub m: f64,
    pub argmin_b: f64,
    pub xi_grid: Vec<f64>,
    pub b_values: Vec<f64>,
    /// Summed panel error estimate of the xi(b) table.
    pub quadrature_error: f64,
    /// Gap between the tabulated b range and the asymptotic states; beyond
    /// the table the profile follows the linearised exponential tails.
    pub tail_gap: (f64, f64),
    model: ModelSpec,
    branches: Vec<Branch>,
}

/// Geometric clustering towards `end` from `other` (distances down to `min_gap`).
fn clustered(end: f64, other: f64, min_gap: f64, per_decade: usize) -> Vec<f64> {
    let len = (other - end).abs();
    let dir = (other - end).signum();
    let decades = (len / min_gap).log10().max(0.0);
    let n = (decades * per_decade as f64).ceil() as usize;
    (0..=n)
        .map(|k| end + dir * len * 10f64.powf(-(k as f64) / per_decade as f64))
        .filter(|b| (b - end).abs() >= min_gap * 0.999)
        .collect()
}

impl WaveProfile {
    fn integrand(&self) -> impl Fn(f64) -> f64 + '_ {
        let fhat = chord_deficit_fn(&self.model.flux, self.b_minus, self.speed);
        move |b| {
            let slope = self.model.dissipation.inverse(fhat(b));
            if slope == 0.0 {
                f64::NEG_INFINITY
            } else {
                1.0 / slope
            }
        }
    }

    fn build_branch(&self, lo: f64, hi: f64, anchor: f64, sing_lo: bool, sing_hi: bool) -> Result<(Branch, f64)> {
        let len = hi - lo;
        // closer to a singular end the deficit is dominated by cancellation
        let min_gap = 1e-9 * len.max(1e-300);
        let mut nodes = linspace(lo, hi, 401);
        let gap_lo = if sing_lo { min_gap } else { 0.0 };
        let gap_hi = if sing_hi { min_gap } else { 0.0 };
        nodes.extend(clustered(
            lo,
            hi,
            if sing_lo { min_gap } else { 1e-12 * len },
            if sing_lo { 40 } else { 20 },
        ));
        nodes.extend(clustered(
            hi,
            lo,
            if sing_hi { min_gap } else { 1e-12 * len },
            if sing_hi { 40 } else { 20 },
        ));
        nodes.retain(|&b| b - lo >= gap_lo * 0.999 && hi - b >= gap_hi * 0.999);
        nodes.push(anchor);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + a.abs()));
        let g = self.integrand();
        let k_anchor = nodes
            .iter()
            .position(|&b| (b - anchor).abs() <= 1e-15 * (1.0 + anchor.abs()))
            .ok_or_else(|| Error::Internal("anchor missing from b mesh".into()))?;
        let mut xi = vec![0.0; nodes.len()];
        let mut err = 0.0;
        let mut panel = |a: f64, b: f64| -> f64 {
            let whole = gl_panel(&g, a, b);
            let mid = 0.5 * (a + b);
            let halves = gl_panel(&g, a, mid) + gl_panel(&g, mid, b);
            err += (whole - halves).abs();
            halves
        };
        for k in k_anchor + 1..nodes.len() {
            xi[k] = xi[k - 1] + panel(nodes[k - 1], nodes[k]);
        }
        for k in (0..k_anchor).rev() {
            xi[k] = xi[k + 1] - panel(nodes[k], nodes[k + 1]);
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("profile quadrature produced non-finite xi".into()));
        }
        let rev_xi: Vec<f64> = xi.iter().rev().copied().collect();
        let rev_b: Vec<f64> = nodes.iter().rev().copied().collect();
        let inverse = MonotoneCubic::new(rev_xi, rev_b)
            .map_err(|e| Error::Numeric(format!("xi(b) table is not strictly monotone: {e}")))?;
        let q0 = self.model.dissipation.deriv(0.0);
        let f = &self.model.flux;
        let rate = |end: f64| {
            let lam = (f.deriv(end) - self.speed) / q0;
            (lam.abs() > 1e-14).then_some(lam)
        };
        let branch = Branch {
            rate_lo: if sing_lo { rate(lo) } else { None },
            rate_hi: if sing_hi { rate(hi) } else { None },
            end_lo: lo,
            end_hi: hi,
            b: nodes,
            xi,
            inverse,
        };
        Ok((branch, err))
    }

    fn branch_for(&self, xi: f64) -> &Branch {
        match self.class {
            WaveClass::Discontinuous { .. } if xi < 0.0 => &self.branches[0],
            WaveClass::Discontinuous { .. } => &self.branches[1],
            _ => &self.branches[0],
        }
    }

    /// Profile value at `xi`; in the discontinuous case `b(0) = b2`.
    pub fn eval(&self, xi: f64) -> f64 {
        let br = self.branch_for(xi);
        let xi_max = br.xi[0];
        let xi_min = br.xi[br.xi.len() - 1];
        if xi > xi_max {
            // towards the low-b end (b+ side)
            let gap = br.b[0] - br.end_lo;
            return match br.rate_lo {
                Some(lam) => br.end_lo + gap * (lam * (xi - xi_max)).exp(),
                None => br.b[0],
            };
        }
        if xi < xi_min {
            let gap = br.end_hi - br.b[br.b.len() - 1];
            return match br.rate_hi {
                Some(lam) => br.end_hi - gap * (lam * (xi - xi_min)).exp(),
                None => br.b[br.b.len() - 1],
            };
        }
        // bracket: xi decreasing in b
        let k = br.xi.partition_point(|&v| v > xi);
        if k == 0 {
            return br.b[0];
        }
        if k >= br.b.len() {
            return br.b[br.b.len() - 1];
        }
        let (mut lo, mut hi) = (br.b[k - 1], br.b[k]);
        let xi_lo = br.xi[k - 1];
        if br.xi[k] == xi {
            return br.b[k];
        }
        let g = self.integrand();
        let mut b = br.inverse.eval(xi).clamp(lo, hi);
        for _ in 0..60 {
            let val = xi_lo + gl_panel(&g, br.b[k - 1], b) - xi;
            // val is decreasing in b
            if val > 0.0 {
                lo = b;
            } else {
                hi = b;
            }
            let d = g(b);
            let newton = b - val / d;
            let next = if d.is_finite() && d < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - b).abs() <= 1e-15 * (1.0 + b.abs()) || hi - lo <= 1e-15 * (1.0 + b.abs()) {
                return next;
            }
            b = next;
        }
        b
    }

    /// Table-only inverse (monotone cubic through the quadrature nodes).
    pub fn eval_interpolated(&self, xi: f64) -> f64 {
        self.branch_for(xi).inverse.eval(xi)
    }

    /// `xi(b)` by quadrature from the nearest table node.
    pub fn xi_of_b(&self, b: f64) -> Result<f64> {
        let br = match self.class {
            WaveClass::Discontinuous { b1, b2 } => {
                if b >= b1 {
                    &self.branches[0]
                } else if b <= b2 {
                    &self.branches[1]
                } else {
                    return arg(format!("b = {b} lies inside the jump ({b2}, {b1})"));
                }
            }
            _ => &self.branches[0],
        };
        if !(b >= br.b[0] && b <= br.b[br.b.len() - 1]) {
            return arg(format!("b = {b} outside the tabulated range"));
        }
        let k = br.b.partition_point(|&v| v <= b).saturating_sub(1);
        Ok(br.xi[k] + gl_panel(&self.integrand(), br.b[k], b))
    }

    /// Q(b'(xi)), which equals the chord deficit of b(xi); `Q(-inf)` at the jump.
    pub fn q_hat(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            if let WaveClass::Discontinuous { .. } = self.class {
                return self.model.dissipation.q_minus_inf();
            }
        }
        let fhat = chord_deficit_fn(&self.model.flux, self.b_minus, self.speed);
        fhat(self.eval(xi))
    }

    /// b'(xi) from the profile relation `b' = Q^{-1}(fhat(b))`.
    pub fn slope(&self, xi: f64) -> f64 {
        self.model.dissipation.inverse(self.q_hat(xi))
    }

    /// `u(t, x) = b(x - x0 - s t)` sampled on `grid`. A node sitting exactly
    /// on the jump gets the mean of the two sides.
    pub fn field(&self, grid: Grid, t: f64, x0: f64) -> Result<GridField> {
        GridField::from_fn(grid, t, |x| {
            let xi = x - x0 - self.speed * t;
            match self.class {
                WaveClass::Discontinuous { b1, b2 } if xi == 0.0 => 0.5 * (b1 + b2),
                _ => self.eval(xi),
            }
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }
}

/// Traveling-wave profile between `b_minus > b_plus`, sampled on `xi_grid`.
pub fn wave_profile(model: &ModelSpec, b_minus: f64, b_plus: f64, xi_grid: &[f64]) -> Result<WaveProfile> {
    let class = classify_wave(model, b_minus, b_plus)?;
    if class == WaveClass::NoWave {
        return arg(format!("no traveling wave connects {b_minus} to {b_plus}"));
    }
    let speed = wave_speed(&model.flux, b_minus, b_plus)?;
    let (m, argmin_b) = chord_deficit(&model.flux, b_minus, b_plus)?;
    let mut p = WaveProfile {
        b_minus,
        b_plus,
        speed,
        class,
        m,
        argmin_b,
        xi_grid: xi_grid.to_vec(),
        b_values: vec![],
        quadrature_error: 0.0,
        tail_gap: (0.0, 0.0),
        model: model.clone(),
        branches: vec![],
    };
    match class {
        WaveClass::Continuous => {
            let mid = 0.5 * (b_minus + b_plus);
            let (br, err) = p.build_branch(b_plus, b_minus, mid, true, true)?;
            p.quadrature_error = err;
            p.branches.push(br);
        }
        WaveClass::Discontinuous { b1, b2 } => {
            let (left, e1) = p.build_branch(b1, b_minus, b1, false, true)?;
            let (right, e2) = p.build_branch(b_plus, b2, b2, true, false)?;
            p.quadrature_error = e1 + e2;
            p.branches.push(left);
            p.branches.push(right);
        }
        WaveClass::NoWave => unreachable!(),
    }
    let first = &p.branches[0];
    let last = &p.branches[p.branches.len() - 1];
    p.tail_gap = (b_minus - first.b[first.b.len() - 1], last.b[0] - b_plus);
    p.b_values = xi_grid.iter().map(|&xi| p.eval(xi)).collect();
    Ok(p)
}

/// Local admissibility of a decreasing jump: the graph of f stays on or below
/// the chord, `f(b) - f(b-0) - s (b - b-0) <= 0` on `[b+0, b-0]`.
pub fn jump_admissible_local(f: &FluxFunction, b_m0: f64, b_p0: f64) -> Result<bool> {
    if !(b_m0 > b_p0) {
        return arg(format!("local admissibility needs b_m0 > b_p0, got ({b_m0}, {b_p0})"));
    }
    let s = wave_speed(f, b_m0, b_p0)?;
    let fhat = chord_deficit_fn(f, b_m0, s);
    let grid = linspace(b_p0, b_m0, 2001);
    let (_, worst) = maximize_sampled(&fhat, &grid, 1e-14);
    let scale = 1.0 + f.eval(b_m0).abs() + f.eval(b_p0).abs() + s.abs() * (b_m0 - b_p0);
    Ok(worst <= 1e-12 * scale)
}

/// Local exponent `(beta - 2)/(beta - 1)` of the self-similar step profile.
pub fn selfsimilar_exponent(beta: f64) -> Result<f64> {
    if !(beta > 2.0) || !beta.is_finite() {
        return arg(format!("self-similar exponent needs beta > 2, got {beta}"));
    }
    Ok((beta - 2.0) / (beta - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityOptions {
    /// Left state of the step; the right state is 0 and the jump sits at x = 0.
    pub step_height: f64,
    pub beta: f64,
    /// Regression window in z. The lower end defaults to `2 dx / sqrt(t)`
    /// per snapshot, the upper to 0.2.
    pub z_lo: Option<f64>,
    pub z_hi: f64,
}

impl SimilarityOptions {
    pub fn new(step_height: f64, beta: f64) -> Self {
        Self {
            step_height,
            beta,
            z_lo: None,
            z_hi: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarFit {
    pub alpha_est: f64,
    pub alpha_theory: f64,
    /// Coefficient A in h(z) = h(0) + A z^alpha.
    pub a_coef: f64,
    pub h0_est: f64,
    /// `(u / 2 h(0))^2`
    pub t_star_est: f64,
    /// Largest L1 deviation (over the window) of a rescaled snapshot from
    /// the snapshot mean.
    pub collapse_error: f64,
    /// (t, u(0-) - u(0+)) from the nodes adjacent to x = 0.
    pub jump_series: Vec<(f64, f64)>,
    /// First snapshot time at which the centre jump no longer exceeds three
    /// times the neighbouring node differences.
    pub disappearance_time: Option<f64>,
    /// Rescaled profiles (z, u/sqrt t) on x >= 0 of the fitted snapshots.
    pub collapsed: Vec<(f64, Vec<(f64, f64)>)>,
}

/// Fits `u(t,x)/sqrt(t) = h(0) + A z^alpha` near `z = 0+` over the
/// snapshots of the step problem that still carry a jump at x = 0.
pub fn fit_similarity(states: &[GridField], opts: &SimilarityOptions) -> Result<SelfSimilarFit> {
    let states: Vec<&GridField> = states.iter().filter(|s| s.t > 0.0).collect();
    if states.len() < 3 {
        return arg(format!(
            "similarity fit needs at least 3 snapshots with t > 0, got {}",
            states.len()
        ));
    }
    let alpha_theory = if opts.beta > 2.0 {
        selfsimilar_exponent(opts.beta)?
    } else {
        f64::NAN
    };
    let mut zs = Vec::new();
    let mut hs = Vec::new();
    let mut collapsed = Vec::new();
    let mut jump_series = Vec::new();
    let mut disappearance_time = None;
    let mut fitted: Vec<&GridField> = Vec::new();
    for s in &states {
        let n = s.u.len();
        let r = (0..n).find(|&i| s.grid.x(i) >= 0.0).unwrap_or(n);
        if r < 3 || r + 2 >= n {
            return arg("snapshot grid must extend at least three nodes to each side of x = 0");
        }
        let jump = s.u[r - 1] - s.u[r];
        let neighbours = (s.u[r - 2] - s.u[r - 1]).abs().max((s.u[r] - s.u[r + 1]).abs());
        jump_series.push((s.t, jump));
        let present = jump.abs() > 3.0 * neighbours;
        if !present && disappearance_time.is_none() {
            disappearance_time = Some(s.t);
        }
        let rt = s.t.sqrt();
        let prof: Vec<(f64, f64)> = (r..n).map(|i| (s.grid.x(i) / rt, s.u[i] / rt)).collect();
        if present && disappearance_time.is_none() {
            let z_lo = opts.z_lo.unwrap_or(2.0 * s.dx() / rt);
            for &(z, h) in &prof {
                if z >= z_lo && z <= opts.z_hi {
                    zs.push(z);
                    hs.push(h);
                }
            }
            fitted.push(s);
            collapsed.push((s.t, prof));
        }
    }
    if zs.len() < 3 {
        return arg("regression window holds fewer than 3 points");
    }
    // For fixed alpha the model is linear in (h0, A); scan alpha, then refine.
    let sse = |alpha: f64| -> f64 {
        let basis: Vec<f64> = zs.iter().map(|z| z.powf(alpha)).collect();
        fit_line(&basis, &hs).map(|f| f.sse).unwrap_or(f64::INFINITY)
    };
    let alphas = linspace(0.01, 2.0, 200);
    let (alpha, _) = maximize_sampled(|a| -sse(a), &alphas, 1e-10);
    let (alpha, _) = golden_max(|a| -sse(a), (alpha - 0.01).max(1e-3), alpha + 0.01, 1e-12);
    let basis: Vec<f64> = zs.iter().map(|z| z.powf(alpha)).collect();
    let line = fit_line(&basis, &hs)?;
    let h0 = line.intercept;

    // collapse error on the window common to all snapshots
    let z_common_lo = fitted
        .iter()
        .map(|s| opts.z_lo.unwrap_or(2.0 * s.dx() / s.t.sqrt()))
        .fold(0.0, f64::max);
    let zgrid = linspace(z_common_lo, opts.z_hi.max(z_common_lo * 1.0001), 200);
    let resampled: Vec<Vec<f64>> = collapsed
        .iter()
        .map(|(_, prof)| zgrid.iter().map(|&z| interp_pairs(prof, z)).collect())
        .collect();
    let mean: Vec<f64> = (0..zgrid.len())
        .map(|j| resampled.iter().map(|r| r[j]).sum::<f64>() / resampled.len() as f64)
        .collect();
    let dz = zgrid[1] - zgrid[0];
    let collapse_error = resampled
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(a, b)| (a - b).abs()).sum::<f64>() * dz)
        .fold(0.0, f64::max);

    Ok(SelfSimilarFit {
        alpha_est: alpha,
        alpha_theory,
        a_coef: line.slope,
        h0_est: h0,
        t_star_est: (opts.step_height / (2.0 * h0)).powi(2),
        collapse_error,
        jump_series,
        disappearance_time,
        collapsed,
    })
}

fn interp_pairs(pts: &[(f64, f64)], z: f64) -> f64 {
    let k = pts.partition_point(|p| p.0 <= z);
    if k == 0 {
        return pts[0].1;
    }
    if k >= pts.len() {
        return pts[pts.len() - 1].1;
    }
    let (z0, h0) = pts[k - 1];
    let (z1, h1) = pts[k];
    h0 + (h1 - h0) * (z - z0) / (z1 - z0)
}
