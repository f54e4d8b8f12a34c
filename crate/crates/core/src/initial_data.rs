//! Piecewise-smooth initial data with finitely many jumps, the admissibility
//! check for that class, and kernel mollification `u0^h = omega_h * u0`.

use std::fmt;
use std::sync::Arc;

use crate::error::{arg, Result};
use crate::model::{DissipationFlux, ValidationReport};
use crate::numerics::{adaptive_quad, gl_composite, linspace, MonotoneCubic};
use crate::solver::{Grid, GridField};

/// Value, first and second derivative of a smooth piece.
pub type SmoothFn = Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>;

#[derive(Clone)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    func: SmoothFn,
}

impl Piece {
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        (self.func)(x)
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Piece[{}, {})", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub x: f64,
    pub left: f64,
    pub right: f64,
}

impl Jump {
    pub fn strength(&self) -> f64 {
        (self.right - self.left).abs()
    }
}

/// Initial datum: smooth pieces covering the real line, separated by
/// breakpoints. Jumps are stored exactly, never pre-smoothed.
#[derive(Debug, Clone)]
pub struct InitialDatum {
    name: String,
    pieces: Vec<Piece>,
    jumps: Vec<Jump>,
    support: (f64, f64),
}

const JUMP_TOL: f64 = 1e-14;

impl InitialDatum {
    /// `breakpoints` (strictly increasing, finite) split the line into
    /// `funcs.len() == breakpoints.len() + 1` pieces. `support` is the compact
    /// set outside of which the datum is treated as a tail.
    pub fn from_pieces(
        name: impl Into<String>,
        breakpoints: Vec<f64>,
        funcs: Vec<SmoothFn>,
        support: (f64, f64),
    ) -> Result<Self> {
        if funcs.len() != breakpoints.len() + 1 {
            return arg("need exactly one more piece than breakpoints");
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return arg("breakpoints must be finite and strictly increasing");
        }
        if !(support.0 < support.1) {
            return arg("support hint must be a non-empty interval");
        }
        let mut pieces = Vec::with_capacity(funcs.len());
        for (k, func) in funcs.into_iter().enumerate() {
            let start = if k == 0 { f64::NEG_INFINITY } else { breakpoints[k - 1] };
            let end = breakpoints.get(k).copied().unwrap_or(f64::INFINITY);
            pieces.push(Piece { start, end, func });
        }
        let mut jumps = Vec::new();
        for (k, &b) in breakpoints.iter().enumerate() {
            let left = pieces[k].eval3(b).0;
            let right = pieces[k + 1].eval3(b).0;
            if (left - right).abs() > JUMP_TOL {
                jumps.push(Jump { x: b, left, right });
            }
        }
        Ok(Self {
            name: name.into(),
            pieces,
            jumps,
            support,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().skip(1).map(|p| p.start)
    }

    fn piece_at(&self, x: f64) -> &Piece {
        let k = self.pieces.partition_point(|p| p.end <= x);
        &self.pieces[k.min(self.pieces.len() - 1)]
    }

    /// Right-continuous value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.piece_at(x).eval3(x).0
    }

    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        self.piece_at(x).eval3(x)
    }

    pub fn sample(&self, grid: Grid) -> Result<GridField> {
        GridField::from_fn(grid, 0.0, |x| self.eval(x))
    }

    pub fn sup_norm(&self) -> f64 {
        let (a, b) = self.support;
        let w = b - a;
        linspace(a - w, b + w, 20_001)
            .into_iter()
            .map(|x| self.eval(x).abs())
            .chain(self.jumps.iter().flat_map(|j| [j.left.abs(), j.right.abs()]))
            .fold(0.0, f64::max)
    }

    /// Exact integral over [a, b], split at the breakpoints.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().filter(|&p| p > a && p < b));
        cuts.push(b);
        cuts.windows(2)
            .map(|w| {
                let p = self.piece_at(0.5 * (w[0] + w[1])).clone();
                adaptive_quad(&|x| p.eval3(x).0, w[0], w[1], 1e-13, 30).value
            })
            .sum()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_pieces("constant", vec![], vec![constant_fn(c)], (-1.0, 1.0)).expect("valid constant datum")
    }

    /// u = left for x < x0, right for x > x0.
    pub fn riemann(left: f64, right: f64, x0: f64) -> Self {
        Self::from_pieces(
            "riemann",
            vec![x0],
            vec![constant_fn(left), constant_fn(right)],
            (x0 - 1.0, x0 + 1.0),
        )
        .expect("valid riemann datum")
    }

    /// Step of the given height down to zero at x = 0.
    pub fn step(height: f64) -> Self {
        let mut d = Self::riemann(height, 0.0, 0.0);
        d.name = "step".into();
        d
    }

    /// u = height on [a, b), zero elsewhere.
    pub fn pulse(height: f64, a: f64, b: f64) -> Result<Self> {
        Self::from_pieces(
            "pulse",
            vec![a, b],
            vec![constant_fn(0.0), constant_fn(height), constant_fn(0.0)],
            (a, b),
        )
    }

    /// Compactly supported C-infinity bump `amp exp(1 - 1/(1 - r^2))`,
    /// `r = (x - center)/width`; peak value `amp`.
    pub fn bump(amp: f64, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return arg("bump width must be positive");
        }
        let f: SmoothFn = Arc::new(move |x| {
            let r = (x - center) / width;
            if r.abs() >= 1.0 {
                return (0.0, 0.0, 0.0);
            }
            let g = 1.0 - r * r;
            let e = amp * (1.0 - 1.0 / g).exp();
            // d/dr exp(1 - 1/g) = exp(..) * (-2r/g^2)
            let d1r = -2.0 * r / (g * g);
            let d2r = (-2.0 * g * g - 8.0 * r * r * g) / g.powi(4);
            let v1 = e * d1r / width;
            let v2 = e * (d1r * d1r + d2r) / (width * width);
            (e, v1, v2)
        });
        Self::from_pieces("bump", vec![], vec![f], (center - width, center + width))
    }

    /// `amp exp(-((x - center)/width)^2)`.
    pub fn gaussian(amp: f64, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return arg("gaussian width must be positive");
        }
        let f: SmoothFn = Arc::new(move |x| {
            let r = (x - center) / width;
            let e = amp * (-r * r).exp();
            (e, -2.0 * r * e / width, (4.0 * r * r - 2.0) * e / (width * width))
        });
        Self::from_pieces(
            "gaussian",
            vec![],
            vec![f],
            (center - 6.0 * width, center + 6.0 * width),
        )
    }

    /// `teeth` ramps of height `amp` and length `period` starting at `x0`;
    /// each ramp rises with zero end slopes and drops back to zero by a jump.
    pub fn sawtooth(teeth: usize, amp: f64, period: f64, x0: f64) -> Result<Self> {
        if teeth == 0 || !(period > 0.0) {
            return arg("sawtooth needs at least one tooth and a positive period");
        }
        let mut breaks = vec![];
        let mut funcs = vec![constant_fn(0.0)];
        for k in 0..teeth {
            let a = x0 + k as f64 * period;
            breaks.push(a);
            funcs.push(Arc::new(move |x| {
                let s = ((x - a) / period).clamp(0.0, 1.0);
                // smootherstep 6s^5 - 15s^4 + 10s^3
                let v = s * s * s * (s * (6.0 * s - 15.0) + 10.0);
                let d = 30.0 * s * s * (s - 1.0) * (s - 1.0);
                let dd = 60.0 * s * (2.0 * s - 1.0) * (s - 1.0);
                (amp * v, amp * d / period, amp * dd / (period * period))
            }));
        }
        breaks.push(x0 + teeth as f64 * period);
        funcs.push(constant_fn(0.0));
        Self::from_pieces("sawtooth", breaks, funcs, (x0, x0 + teeth as f64 * period))
    }

    /// Tabulated data `(x, u)` with declared jump locations. Each piece
    /// between jumps is a monotone cubic through its points; beyond the data
    /// the end values are held constant.
    pub fn tabulated(xs: &[f64], us: &[f64], jumps: &[f64]) -> Result<Self> {
        if xs.len() != us.len() || xs.len() < 2 {
            return arg("tabulated datum needs matching x and u columns with >= 2 rows");
        }
        let mut jumps = jumps.to_vec();
        jumps.sort_by(f64::total_cmp);
        let mut funcs = Vec::new();
        let bounds: Vec<f64> = std::iter::once(f64::NEG_INFINITY)
            .chain(jumps.iter().copied())
            .chain(std::iter::once(f64::INFINITY))
            .collect();
        for w in bounds.windows(2) {
            let (px, pu): (Vec<f64>, Vec<f64>) = xs
                .iter()
                .zip(us)
                .filter(|(x, _)| **x >= w[0] && **x < w[1])
                .map(|(x, u)| (*x, *u))
                .unzip();
            if px.len() < 2 {
                return arg(format!("piece [{}, {}) has fewer than two data points", w[0], w[1]));
            }
            let (lo, hi) = (px[0], px[px.len() - 1]);
            let (ulo, uhi) = (pu[0], pu[pu.len() - 1]);
            let p = MonotoneCubic::new(px, pu)?;
            funcs.push(Arc::new(move |x: f64| {
                if x <= lo {
                    (ulo, 0.0, 0.0)
                } else if x >= hi {
                    (uhi, 0.0, 0.0)
                } else {
                    p.eval3(x)
                }
            }) as SmoothFn);
        }
        let support = (xs[0], xs[xs.len() - 1]);
        Self::from_pieces("tabulated", jumps, funcs, support)
    }
}

pub fn constant_fn(c: f64) -> SmoothFn {
    Arc::new(move |_| (c, 0.0, 0.0))
}

pub const CHECK_FINITE_JUMPS: &str = "finitely many jumps";
pub const CHECK_FLAT_APPROACH: &str = "u0'(x_i +- 0) = 0";
pub const CHECK_PIECEWISE_C2: &str = "piecewise C2";
pub const CHECK_TAIL_U: &str = "u0 integrable outside K (sampled check)";
pub const CHECK_TAIL_U2: &str = "u0'' integrable outside K (sampled check)";
pub const CHECK_TAIL_Q: &str = "Q(u0')' integrable outside K (sampled check)";

/// Itemised admissibility report for the piecewise-C2 class with flat
/// approach to every jump and integrable tails.
pub fn check_bv_c1_plus(u0: &InitialDatum) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let n = u0.jumps.len();
    let all_finite = u0
        .jumps
        .iter()
        .all(|j| j.x.is_finite() && j.left.is_finite() && j.right.is_finite());
    rep.push(CHECK_FINITE_JUMPS, all_finite, None, format!("{n} jump(s)"));

    let mut bad_jump = None;
    for j in &u0.jumps {
        let k = u0.pieces.partition_point(|p| p.end <= j.x);
        let left_slope = u0.pieces[k - 1].eval3(j.x).1;
        let right_slope = u0.pieces[k].eval3(j.x).1;
        let worst = left_slope.abs().max(right_slope.abs());
        if !(worst <= 1e-10) {
            bad_jump = Some((j.x, left_slope, right_slope));
            break;
        }
    }
    match bad_jump {
        None => rep.push(CHECK_FLAT_APPROACH, true, None, "one-sided slopes vanish at every jump"),
        Some((x, l, r)) => rep.push(
            CHECK_FLAT_APPROACH,
            false,
            Some(x),
            format!("one-sided slopes ({l}, {r}) at x = {x}"),
        ),
    }

    let (a, b) = u0.support;
    let w = b - a;
    let mut bad_sample = None;
    for x in linspace(a - w, b + w, 4001) {
        let (v, d, dd) = u0.eval3(x);
        if !(v.is_finite() && d.is_finite() && dd.is_finite()) {
            bad_sample = Some(x);
            break;
        }
    }
    match bad_sample {
        None => rep.push(CHECK_PIECEWISE_C2, true, None, "u0, u0', u0'' finite on every piece"),
        Some(x) => rep.push(CHECK_PIECEWISE_C2, false, Some(x), "non-finite derivative sample"),
    }

    let scale = w.max(1.0);
    let tail = |g: &dyn Fn(f64) -> f64| -> (bool, f64, f64) {
        // integral over growing shells on both sides must settle
        let shells = [0.0, 10.0, 100.0, 1000.0].map(|r| r * scale);
        let mut partial = [0.0; 4];
        for k in 1..4 {
            let right = adaptive_quad(&|x| g(x).abs(), b + shells[k - 1], b + shells[k], 1e-12, 24).value;
            let left = adaptive_quad(&|x| g(x).abs(), a - shells[k], a - shells[k - 1], 1e-12, 24).value;
            partial[k] = partial[k - 1] + left + right;
        }
        let last = partial[3] - partial[2];
        (last <= 1e-6 * (1.0 + partial[3]), partial[3], last)
    };
    let (ok, total, last) = tail(&|x| u0.eval(x));
    rep.push(
        CHECK_TAIL_U,
        ok,
        if ok { None } else { Some(b + 1000.0 * scale) },
        format!("tail integral {total:e}, outer shell {last:e}"),
    );
    let (ok2, total2, last2) = tail(&|x| u0.eval3(x).2);
    rep.push(
        CHECK_TAIL_U2,
        ok2,
        if ok2 { None } else { Some(b + 1000.0 * scale) },
        format!("tail integral {total2:e}, outer shell {last2:e}"),
    );
    // Q' is bounded, so |Q(u0')'| <= Q1 |u0''| and this follows from the u0'' tail.
    rep.push(CHECK_TAIL_Q, ok2, None, "implied by the u0'' tail since Q' is bounded");
    rep
}

/// Non-negative kernel supported in [-1, 1] with unit mass.
#[derive(Clone)]
pub struct MollifierKernel {
    omega: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    normalization: f64,
}

impl fmt::Debug for MollifierKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MollifierKernel")
            .field("normalization", &self.normalization)
            .finish()
    }
}

impl Default for MollifierKernel {
    fn default() -> Self {
        Self::from_shape(|z| {
            if z.abs() < 1.0 {
                (-1.0 / (1.0 - z * z)).exp()
            } else {
                0.0
            }
        })
        .expect("standard bump is a valid kernel")
    }
}

impl MollifierKernel {
    /// Normalises a non-negative shape supported in [-1, 1].
    pub fn from_shape(shape: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let mass = gl_composite(&shape, -1.0, 1.0, 64);
        if !(mass > 0.0) || !mass.is_finite() {
            return arg("kernel shape must have positive finite mass");
        }
        if linspace(-1.0, 1.0, 2001).into_iter().any(|z| !(shape(z) >= 0.0)) {
            return arg("kernel shape must be non-negative");
        }
        Ok(Self {
            omega: Arc::new(shape),
            normalization: 1.0 / mass,
        })
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        if z.abs() >= 1.0 {
            0.0
        } else {
            self.normalization * (self.omega)(z)
        }
    }

    pub fn mass(&self) -> f64 {
        gl_composite(&|z| self.eval(z), -1.0, 1.0, 64)
    }
}

/// Value of `u0^h(x) = int omega(z) u0(x - h z) dz`, integrated piecewise
/// between the breakpoints.
pub fn mollified_value(u0: &InitialDatum, kernel: &MollifierKernel, h: f64, x: f64) -> f64 {
    let mut cuts = vec![-1.0];
    let mut inner: Vec<f64> = u0
        .breakpoints()
        .map(|b| (x - b) / h)
        .filter(|z| z.abs() < 1.0)
        .collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(1.0);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        // y = x - h z decreases in z; the piece is fixed on the open interval.
        let zm = 0.5 * (w[0] + w[1]);
        let piece = u0.piece_at(x - h * zm);
        let g = |z: f64| kernel.eval(z) * piece.eval3(x - h * z).0;
        total += gl_composite(&g, w[0], w[1], 32);
    }
    total
}

pub fn mollify(u0: &InitialDatum, kernel: &MollifierKernel, h: f64, grid: Grid) -> Result<GridField> {
    if !(h > 0.0) || !h.is_finite() {
        return arg(format!("mollification width must be positive, got {h}"));
    }
    if grid.dx() > 0.25 * h * (1.0 + 1e-12) {
        return arg(format!(
            "grid spacing {} does not resolve a kernel of width {h} (need dx <= h/4)",
            grid.dx()
        ));
    }
    GridField::from_fn(grid, 0.0, |x| mollified_value(u0, kernel, h, x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollificationRow {
    pub h: f64,
    /// int |(u0^h)_x|
    pub tv: f64,
    /// int |Q((u0^h)_x)_x|
    pub q_variation: f64,
    /// h int |(u0^h)_xx|
    pub h_second_variation: f64,
}

/// Grid used for the estimate table: the support widened by the largest
/// width plus one unit, at spacing `min(h)/40`.
pub fn estimate_grid(u0: &InitialDatum, h_list: &[f64]) -> Result<Grid> {
    let hmin = h_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hmax = h_list.iter().copied().fold(0.0, f64::max);
    let (a, b) = u0.support();
    Grid::with_spacing(a - hmax - 1.0, b + hmax + 1.0, hmin / 40.0)
}

/// Discrete versions of the three mollification bounds for each width.
pub fn mollification_estimates(
    u0: &InitialDatum,
    kernel: &MollifierKernel,
    h_list: &[f64],
    q: &DissipationFlux,
) -> Result<Vec<MollificationRow>> {
    if h_list.is_empty() {
        return arg("h_list is empty");
    }
    let grid = estimate_grid(u0, h_list)?;
    let dx = grid.dx();
    h_list
        .iter()
        .map(|&h| {
            let field = mollify(u0, kernel, h, grid)?;
            let slopes: Vec<f64> = field.u.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
            let tv = slopes.iter().map(|s| s.abs()).sum::<f64>() * dx;
            let q_variation = slopes.windows(2).map(|w| (q.eval(w[1]) - q.eval(w[0])).abs()).sum();
            let second: f64 = slopes.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
            Ok(MollificationRow {
                h,
                tv,
                q_variation,
                h_second_variation: h * second,
            })
        })
        .collect()
}

/// Trapezoidal `int |u0^h - u0|` on `grid`.
pub fn mollification_error(u0: &InitialDatum, kernel: &MollifierKernel, h: f64, grid: Grid) -> Result<f64> {
    let field = mollify(u0, kernel, h, grid)?;
    let diffs: Vec<f64> = (0..grid.n()).map(|i| (field.u[i] - u0.eval(grid.x(i))).abs()).collect();
    Ok(trapezoid(&diffs, grid.dx()))
}

pub(crate) fn trapezoid(v: &[f64], dx: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1])) * dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jumps_are_detected_at_breakpoints() {
        let d = InitialDatum::riemann(1.0, 0.0, 0.5);
        assert_eq!(d.jumps().len(), 1);
        assert_eq!(
            d.jumps()[0],
            Jump {
                x: 0.5,
                left: 1.0,
                right: 0.0
            }
        );
        assert_eq!(d.eval(0.5), 0.0);
        assert_eq!(d.eval(0.4999), 1.0);
        let s = InitialDatum::sawtooth(3, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(s.jumps().len(), 3);
        assert!((s.jumps()[2].x - 3.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_gaussian_passes() {
        let rep = check_bv_c1_plus(&InitialDatum::gaussian(1.0, 0.0, 1.0).unwrap());
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        assert!(check_bv_c1_plus(&InitialDatum::bump(1.0, 0.0, 0.5).unwrap()).passed());
    }

    #[test]
    fn nonzero_slope_at_jump_fails_flat_approach() {
        let funcs: Vec<SmoothFn> = vec![
            Arc::new(|x: f64| {
                (
                    if x > -1.0 { 1.0 + 0.3 * x } else { 0.7 },
                    if x > -1.0 { 0.3 } else { 0.0 },
                    0.0,
                )
            }),
            constant_fn(0.0),
        ];
        let d = InitialDatum::from_pieces("sloped", vec![0.0], funcs, (-1.0, 1.0)).unwrap();
        let rep = check_bv_c1_plus(&d);
        let c = rep.check(CHECK_FLAT_APPROACH).unwrap();
        assert!(!c.passed);
        assert_eq!(c.witness, Some(0.0));
    }

    #[test]
    fn sawtooth_with_flat_ramps_passes() {
        let d = InitialDatum::sawtooth(3, 0.8, 1.0, -1.5).unwrap();
        let rep = check_bv_c1_plus(&d);
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        assert!(rep.check(CHECK_FINITE_JUMPS).unwrap().detail.starts_with("3 jump"));
    }

    #[test]
    fn riemann_tail_is_not_integrable() {
        let rep = check_bv_c1_plus(&InitialDatum::riemann(1.0, 0.0, 0.0));
        assert!(rep.check(CHECK_FLAT_APPROACH).unwrap().passed);
        assert!(!rep.check(CHECK_TAIL_U).unwrap().passed);
    }

    #[test]
    fn kernel_has_unit_mass() {
        let k = MollifierKernel::default();
        assert!((k.mass() - 1.0).abs() < 1e-12);
        assert_eq!(k.eval(1.0), 0.0);
        assert!(k.eval(0.3) > 0.0);
        assert!(MollifierKernel::from_shape(|z| z).is_err());
    }

    #[test]
    fn mollify_argument_errors() {
        let d = InitialDatum::step(1.0);
        let g = Grid::new(-1.0, 1.0, 201).unwrap();
        let k = MollifierKernel::default();
        assert!(mollify(&d, &k, 0.0, g).is_err());
        assert!(mollify(&d, &k, 0.02, g).is_err());
        assert!(mollify(&d, &k, 0.04, g).is_ok());
    }

    #[test]
    fn mollified_constant_is_constant() {
        let d = InitialDatum::constant(0.37);
        let g = Grid::new(-1.0, 1.0, 101).unwrap();
        let f = mollify(&d, &MollifierKernel::default(), 0.1, g).unwrap();
        assert!(f.u.iter().all(|v| (v - 0.37).abs() < 1e-13));
    }

    #[test]
    fn mollified_step_has_unit_variation() {
        let d = InitialDatum::step(1.0);
        let g = Grid::new(-1.0, 1.0, 801).unwrap();
        let f = mollify(&d, &MollifierKernel::default(), 0.1, g).unwrap();
        let tv = f.total_variation(crate::solver::Boundary::Outflow);
        assert!((tv - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mollification_preserves_integral() {
        let d = InitialDatum::sawtooth(2, 1.0, 0.5, -0.5).unwrap();
        let g = Grid::new(-1.0, 1.5, 2501).unwrap();
        let exact = d.integral(-1.0, 1.5);
        // each tooth has mean amp/2
        assert!((exact - 0.5).abs() < 1e-12);
        let f = mollify(&d, &MollifierKernel::default(), 0.05, g).unwrap();
        let total = trapezoid(&f.u, g.dx());
        assert!((total - exact).abs() < 1e-8 * exact.abs());
    }
}
