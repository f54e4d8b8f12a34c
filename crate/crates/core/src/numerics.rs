//! Small numerical kernels shared by the rest of the crate: Gauss–Legendre
//! quadrature (fixed and adaptive), bracketed root finding, golden-section
//! refinement, monotone cubic interpolation and least-squares lines.

use std::sync::OnceLock;

use crate::error::{arg, Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl15() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(15))
}

/// Single-panel 15-point Gauss–Legendre integral of `f` over [a, b].
pub fn gl_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gl15();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        s += wi * f(mid + half * xi);
    }
    s * half
}

/// Composite 15-point Gauss–Legendre rule on `panels` equal panels.
pub fn gl_composite(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            gl_panel(f, lo, lo + h)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// Adaptive bisection on Gauss–Legendre panels. The error estimate compares a
/// panel against its two halves; panels are split until the estimate drops
/// below the (depth-scaled) tolerance or `max_depth` is reached.
pub fn adaptive_quad(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> Quadrature {
    if a == b {
        return Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            converged: true,
        };
    }
    let whole = gl_panel(f, a, b);
    adaptive_rec(f, a, b, whole, tol, max_depth)
}

fn adaptive_rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> Quadrature {
    let mid = 0.5 * (a + b);
    let left = gl_panel(f, a, mid);
    let right = gl_panel(f, mid, b);
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= tol || depth == 0 || !refined.is_finite() {
        return Quadrature {
            value: refined,
            error_estimate: err,
            converged: err <= tol && refined.is_finite(),
        };
    }
    let l = adaptive_rec(f, a, mid, left, 0.5 * tol, depth - 1);
    let r = adaptive_rec(f, mid, b, right, 0.5 * tol, depth - 1);
    Quadrature {
        value: l.value + r.value,
        error_estimate: l.error_estimate + r.error_estimate,
        converged: l.converged && r.converged,
    }
}

/// Bisection for a sign change of `f` on [lo, hi]; returns the midpoint of
/// the final bracket once its width is below `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::Numeric(format!(
            "no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of a unimodal `f` on [a, b].
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let scale = a.abs().max(b.abs()).max(1e-300);
    for _ in 0..300 {
        if (b - a).abs() <= rel_tol * scale {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // The end points of the final bracket can beat the midpoint when the
    // maximum sits on the boundary of the original interval.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Maximum of `f` over a list of sample points followed by golden-section
/// refinement between the neighbours of the best sample.
pub fn maximize_sampled(f: impl Fn(f64) -> f64, samples: &[f64], rel_tol: f64) -> (f64, f64) {
    assert!(!samples.is_empty());
    let values: Vec<f64> = samples.iter().map(|&x| f(x)).collect();
    let (k, _) = values.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |best, (i, &v)| if v > best.1 { (i, v) } else { best },
    );
    let lo = samples[k.saturating_sub(1)];
    let hi = samples[(k + 1).min(samples.len() - 1)];
    let (x, fx) = if hi > lo {
        golden_max(&f, lo, hi, rel_tol)
    } else {
        (samples[k], values[k])
    };
    if fx >= values[k] {
        (x, fx)
    } else {
        (samples[k], values[k])
    }
}

/// `n` points evenly spaced on [a, b] inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * h }).collect()
        }
    }
}

/// Piecewise cubic Hermite interpolant with Fritsch–Carlson slopes; monotone
/// data gives a monotone interpolant.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return arg("interpolation abscissae and ordinates differ in length");
        }
        if xs.len() < 2 {
            return arg("interpolation needs at least two points");
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return arg("interpolation abscissae must be strictly increasing");
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return arg("interpolation data must be finite");
        }
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            if a * b <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // Weighted harmonic mean (Fritsch–Butland form).
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Value, first and second derivative. Outside the data range the end
    /// cubic is continued.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * t2 - 2.0 * t;
        let d = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
        let s00 = 12.0 * t - 6.0;
        let s10 = 6.0 * t - 4.0;
        let s11 = 6.0 * t - 2.0;
        let dd = (s00 * y0 + s10 * m0 - s00 * y1 + s11 * m1) / (h * h);
        (v, d, dd)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    pub fn end_slopes(&self) -> (f64, f64) {
        (self.slopes[0], self.slopes[self.slopes.len() - 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Sum of squared residuals.
    pub sse: f64,
}

/// Ordinary least-squares line through (xs, ys).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return arg("line fit needs at least two paired points");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return arg("line fit abscissae are all equal");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        sse,
    })
}
