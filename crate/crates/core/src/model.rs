//! The pair (f, Q): convective flux and bounded dissipation flux.
//!
//! Both functions are stored as shared closures so a [`ModelSpec`] can be
//! cloned cheaply and evaluated from several threads. The dissipation flux
//! carries its saturation limits `Q(-inf) < 0 < Q(+inf)`; its inverse is
//! computed numerically for every instance, built-in or tabulated.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{arg, Result};
use crate::numerics::{bisect, gl_composite, linspace, maximize_sampled, MonotoneCubic};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Nonconvex,
    Unknown,
}

/// Convective flux f with its derivative.
#[derive(Clone)]
pub struct FluxFunction {
    name: String,
    eval: ScalarFn,
    deriv: ScalarFn,
    convexity: Convexity,
    /// Sorted points where f' may change sign. Between consecutive points f
    /// is monotone, which makes the total variation of f exact.
    turning_points: Vec<f64>,
}

impl fmt::Debug for FluxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FluxFunction")
            .field("name", &self.name)
            .field("convexity", &self.convexity)
            .field("turning_points", &self.turning_points)
            .finish()
    }
}

impl FluxFunction {
    /// General constructor. `turning_points` must contain every sign change
    /// of `deriv`; use [`FluxFunction::scan_turning_points`] when they are not
    /// known in closed form.
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        convexity: Convexity,
        mut turning_points: Vec<f64>,
    ) -> Self {
        turning_points.retain(|p| p.is_finite());
        turning_points.sort_by(f64::total_cmp);
        turning_points.dedup();
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            convexity,
            turning_points,
        }
    }

    /// Sign changes of `deriv` on [lo, hi], located by sampling and bisection.
    pub fn scan_turning_points(deriv: &dyn Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
        let xs = linspace(lo, hi, samples.max(2));
        let mut out = Vec::new();
        for w in xs.windows(2) {
            let (a, b) = (deriv(w[0]), deriv(w[1]));
            if a == 0.0 {
                out.push(w[0]);
            } else if a * b < 0.0 {
                if let Ok(r) = bisect(deriv, w[0], w[1], 1e-14 * (1.0 + w[0].abs())) {
                    out.push(r);
                }
            }
        }
        out
    }

    /// f(u) = sum_k coeffs[k] * u^k.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let mut c = coeffs.to_vec();
        while c.len() > 1 && c[c.len() - 1] == 0.0 {
            c.pop();
        }
        let d: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
        let dd: Vec<f64> = d.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
        let turning = real_roots(&d);
        let convexity = if dd.is_empty() || dd.iter().all(|&a| a == 0.0) {
            Convexity::Convex
        } else if dd.len() == 1 {
            if dd[0] > 0.0 {
                Convexity::Convex
            } else {
                Convexity::Nonconvex
            }
        } else {
            Convexity::Nonconvex
        };
        let name = format!("poly{c:?}");
        let (ce, cd) = (c.clone(), d);
        Self::new(
            name,
            move |u| horner(&ce, u),
            move |u| horner(&cd, u),
            convexity,
            turning,
        )
    }

    /// f(u) = u^2 / 2.
    pub fn burgers() -> Self {
        Self::new("burgers", |u| 0.5 * u * u, |u| u, Convexity::Convex, vec![0.0])
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0, |_| 0.0, Convexity::Convex, vec![])
    }

    pub fn linear(speed: f64) -> Self {
        Self::new("linear", move |u| speed * u, move |_| speed, Convexity::Convex, vec![])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.eval)(u)
    }

    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        (self.deriv)(u)
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    pub fn turning_points(&self) -> &[f64] {
        &self.turning_points
    }

    /// Total variation of f between `a` and `b` (the integral of |f'|).
    pub fn variation(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let start = self.turning_points.partition_point(|&p| p <= lo);
        let mut fprev = self.eval(lo);
        let mut total = 0.0;
        for &p in &self.turning_points[start..] {
            if p >= hi {
                break;
            }
            let fp = self.eval(p);
            total += (fp - fprev).abs();
            fprev = fp;
        }
        total + (self.eval(hi) - fprev).abs()
    }

    /// Engquist–Osher numerical flux between left state `a` and right state `b`:
    /// (f(a) + f(b))/2 minus half the signed integral of |f'| from `a` to `b`.
    #[inline]
    pub fn engquist_osher(&self, a: f64, b: f64) -> f64 {
        let mean = 0.5 * (self.eval(a) + self.eval(b));
        if a <= b {
            mean - 0.5 * self.variation(a, b)
        } else {
            mean + 0.5 * self.variation(b, a)
        }
    }
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

/// Real roots of a polynomial (ascending coefficients) where it changes sign.
fn real_roots(c: &[f64]) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
    if c.len() <= 1 {
        return vec![];
    }
    let lead = c[c.len() - 1];
    let bound = 1.0 + c[..c.len() - 1].iter().map(|a| (a / lead).abs()).fold(0.0, f64::max);
    let d: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
    let mut knots = vec![-bound];
    knots.extend(real_roots_all(&d).into_iter().filter(|r| r.abs() < bound));
    knots.push(bound);
    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (pa, pb) = (horner(&c, w[0]), horner(&c, w[1]));
        if pa == 0.0 {
            roots.push(w[0]);
        } else if pa * pb < 0.0 {
            if let Ok(r) = bisect(
                |x| horner(&c, x),
                w[0],
                w[1],
                1e-15 * (1.0 + w[0].abs().max(w[1].abs())),
            ) {
                roots.push(r);
            }
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    roots
}

/// Like [`real_roots`] but keeps touching roots too (used for knot placement).
fn real_roots_all(c: &[f64]) -> Vec<f64> {
    let mut out = real_roots(c);
    let d: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
    for r in real_roots(&d) {
        if horner(c, r).abs() < 1e-12 {
            out.push(r);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    C1,
    C2,
    CInfinity,
}

/// Bounded, strictly increasing dissipation flux Q with Q(0) = 0.
#[derive(Clone)]
pub struct DissipationFlux {
    name: String,
    eval: ScalarFn,
    deriv: ScalarFn,
    q_minus_inf: f64,
    q_plus_inf: f64,
    tail_exponent_beta: Option<f64>,
    smoothness: Smoothness,
}

impl fmt::Debug for DissipationFlux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DissipationFlux")
            .field("name", &self.name)
            .field("q_minus_inf", &self.q_minus_inf)
            .field("q_plus_inf", &self.q_plus_inf)
            .field("tail_exponent_beta", &self.tail_exponent_beta)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl DissipationFlux {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        q_minus_inf: f64,
        q_plus_inf: f64,
        tail_exponent_beta: Option<f64>,
        smoothness: Smoothness,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            q_minus_inf,
            q_plus_inf,
            tail_exponent_beta,
            smoothness,
        }
    }

    /// Q(s) = q_bar * (2/pi) * atan(s).
    pub fn arctan(q_bar: f64) -> Self {
        let c = q_bar * FRAC_2_PI;
        Self::new(
            "arctan",
            move |s| c * s.atan(),
            move |s| c / (1.0 + s * s),
            -q_bar,
            q_bar,
            Some(2.0),
            Smoothness::CInfinity,
        )
    }

    /// Q(s) = q_bar * s / sqrt(1 + s^2).
    pub fn algebraic(q_bar: f64) -> Self {
        Self::new(
            "algebraic",
            move |s| q_bar * s / (1.0 + s * s).sqrt(),
            move |s| q_bar / (1.0 + s * s).powf(1.5),
            -q_bar,
            q_bar,
            Some(3.0),
            Smoothness::CInfinity,
        )
    }

    /// Q'(s) = c (1 + s^2)^(-beta/2), normalised so Q(+inf) = q_bar.
    ///
    /// With s = tan(theta) the primitive is c * I(atan s) where
    /// I(theta) = int_0^theta cos^(beta-2). Integer exponents use the exact
    /// reduction formula, others composite Gauss–Legendre.
    pub fn power_tail(beta: f64, q_bar: f64) -> Result<Self> {
        if !(beta > 1.0) || !beta.is_finite() {
            return arg(format!(
                "tail exponent beta must exceed 1 for a bounded flux, got {beta}"
            ));
        }
        if !(q_bar > 0.0) {
            return arg(format!("q_bar must be positive, got {q_bar}"));
        }
        let p = beta - 2.0;
        let integer = (p - p.round()).abs() < 1e-12 && p.round() >= 0.0;
        let prim: Arc<dyn Fn(f64) -> f64 + Send + Sync> = if integer {
            let n = p.round() as u32;
            Arc::new(move |theta: f64| cos_power_integral(n, theta))
        } else {
            Arc::new(move |theta: f64| cos_power_integral_real(p, theta))
        };
        let total = prim(0.5 * PI);
        let c = q_bar / total;
        let prim_eval = prim.clone();
        Ok(Self::new(
            format!("power_tail(beta={beta})"),
            move |s| c * prim_eval(s.atan()),
            move |s| c * (1.0 + s * s).powf(-0.5 * beta),
            -q_bar,
            q_bar,
            Some(beta),
            Smoothness::CInfinity,
        ))
    }

    /// Tabulated Q through (s, q) with a monotone cubic in the table range and
    /// C1 hyperbolic tails `Q(±inf) ∓ A/(|s - s_end| + c)` outside it.
    pub fn tabulated(s: Vec<f64>, q: Vec<f64>, q_minus_inf: f64, q_plus_inf: f64) -> Result<Self> {
        if q.windows(2).any(|w| w[1] <= w[0]) {
            return arg("tabulated Q must be strictly increasing");
        }
        let interp = MonotoneCubic::new(s, q)?;
        let (s_lo, s_hi) = interp.domain();
        let (q_lo, q_hi) = (interp.ys()[0], interp.ys()[interp.ys().len() - 1]);
        if !(q_minus_inf < q_lo && q_hi < q_plus_inf) {
            return arg("table values must lie strictly between the saturation limits");
        }
        let (d_lo, d_hi) = interp.end_slopes();
        if !(d_lo > 0.0 && d_hi > 0.0) {
            return arg("tabulated Q needs positive end slopes");
        }
        let c_hi = (q_plus_inf - q_hi) / d_hi;
        let a_hi = c_hi * (q_plus_inf - q_hi);
        let c_lo = (q_lo - q_minus_inf) / d_lo;
        let a_lo = c_lo * (q_lo - q_minus_inf);
        let interp = Arc::new(interp);
        let ie = interp.clone();
        let eval = move |x: f64| {
            if x > s_hi {
                q_plus_inf - a_hi / (x - s_hi + c_hi)
            } else if x < s_lo {
                q_minus_inf + a_lo / (s_lo - x + c_lo)
            } else {
                ie.eval(x)
            }
        };
        let deriv = move |x: f64| {
            if x > s_hi {
                a_hi / (x - s_hi + c_hi).powi(2)
            } else if x < s_lo {
                a_lo / (s_lo - x + c_lo).powi(2)
            } else {
                interp.eval3(x).1
            }
        };
        Ok(Self::new(
            "tabulated",
            eval,
            deriv,
            q_minus_inf,
            q_plus_inf,
            Some(2.0),
            Smoothness::C1,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    #[inline]
    pub fn deriv(&self, s: f64) -> f64 {
        (self.deriv)(s)
    }

    pub fn q_minus_inf(&self) -> f64 {
        self.q_minus_inf
    }

    pub fn q_plus_inf(&self) -> f64 {
        self.q_plus_inf
    }

    pub fn q_bar(&self) -> f64 {
        self.q_minus_inf.abs().max(self.q_plus_inf.abs())
    }

    pub fn tail_exponent_beta(&self) -> Option<f64> {
        self.tail_exponent_beta
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Q^{-1}(y) for y in (Q(-inf), Q(+inf)); -inf / +inf at or beyond the
    /// lower / upper limit. Bracket expansion, then Newton steps safeguarded
    /// by bisection.
    pub fn inverse(&self, y: f64) -> f64 {
        if y.is_nan() {
            return f64::NAN;
        }
        if y <= self.q_minus_inf {
            return f64::NEG_INFINITY;
        }
        if y >= self.q_plus_inf {
            return f64::INFINITY;
        }
        if y == 0.0 {
            return 0.0;
        }
        let g = |s: f64| self.eval(s) - y;
        let (mut lo, mut hi) = if y > 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
        if y > 0.0 {
            while g(hi) < 0.0 {
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() {
                    return f64::INFINITY;
                }
            }
        } else {
            while g(lo) > 0.0 {
                hi = lo;
                lo *= 2.0;
                if !lo.is_finite() {
                    return f64::NEG_INFINITY;
                }
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let gx = g(x);
            if gx == 0.0 {
                return x;
            }
            if gx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.deriv(x);
            let newton = x - gx / d;
            let next = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) || hi - lo <= 2.0 * f64::EPSILON * x.abs() {
                return next;
            }
            x = next;
        }
        x
    }
}

/// `int_0^theta cos^p` for real p > -1 and |theta| <= pi/2. Beyond pi/4 the
/// integral is taken from pi/2 backwards with `phi = a w^m`; an integer m
/// with `m (p + 1) > 6` turns the endpoint singularity of `sin^p` into a
/// smooth power of w.
fn cos_power_integral_real(p: f64, theta: f64) -> f64 {
    let quarter = 0.25 * PI;
    let head = |th: f64| gl_composite(&|t: f64| t.cos().powf(p), 0.0, th, 8);
    let m = (6.0 / (p + 1.0)).ceil().max(1.0);
    let tail = |a: f64| {
        if a <= 0.0 {
            return 0.0;
        }
        let g = |w: f64| {
            let phi = a * w.powf(m);
            let sinc = if phi == 0.0 { 1.0 } else { phi.sin() / phi };
            sinc.powf(p) * w.powf(m * (p + 1.0) - 1.0)
        };
        a.powf(p + 1.0) * m * gl_composite(&g, 0.0, 1.0, 8)
    };
    let th = theta.abs().min(0.5 * PI);
    let v = if th <= quarter {
        head(th)
    } else {
        head(quarter) + tail(quarter) - tail(0.5 * PI - th)
    };
    v.copysign(theta)
}

fn cos_power_integral(n: u32, theta: f64) -> f64 {
    match n {
        0 => theta,
        1 => theta.sin(),
        _ => {
            let nf = n as f64;
            theta.cos().powi(n as i32 - 1) * theta.sin() / nf + (nf - 1.0) / nf * cos_power_integral(n - 2, theta)
        }
    }
}

/// A complete model: u_t + f(u)_x = Q(u_x)_x.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub name: String,
    pub flux: FluxFunction,
    pub dissipation: DissipationFlux,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, flux: FluxFunction, dissipation: DissipationFlux) -> Self {
        Self {
            name: name.into(),
            flux,
            dissipation,
        }
    }

    pub fn f(&self, u: f64) -> f64 {
        self.flux.eval(u)
    }

    pub fn q(&self, s: f64) -> f64 {
        self.dissipation.eval(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinModel {
    /// f = u^2/2, Q = q_bar (2/pi) atan(s)
    BurgersArctan,
    /// f = u^2/2, Q = q_bar s / sqrt(1+s^2)
    BurgersAlgebraic,
    /// f = 0, Q' proportional to (1+s^2)^(-beta/2)
    ZeroFluxBeta(f64),
}

impl BuiltinModel {
    pub fn from_name(name: &str, beta: Option<f64>) -> Result<Self> {
        match name {
            "burgers_arctan" => Ok(Self::BurgersArctan),
            "burgers_alg" => Ok(Self::BurgersAlgebraic),
            "zero_flux_beta" => match beta {
                Some(b) => Ok(Self::ZeroFluxBeta(b)),
                None => arg("model zero_flux_beta needs a beta value"),
            },
            other => arg(format!(
                "unknown model '{other}' (expected burgers_arctan, burgers_alg or zero_flux_beta)"
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BurgersArctan => "burgers_arctan",
            Self::BurgersAlgebraic => "burgers_alg",
            Self::ZeroFluxBeta(_) => "zero_flux_beta",
        }
    }
}

pub fn builtin_model(kind: BuiltinModel, q_bar: f64) -> Result<ModelSpec> {
    if !(q_bar > 0.0) || !q_bar.is_finite() {
        return arg(format!("q_bar must be positive and finite, got {q_bar}"));
    }
    Ok(match kind {
        BuiltinModel::BurgersArctan => {
            ModelSpec::new(kind.name(), FluxFunction::burgers(), DissipationFlux::arctan(q_bar))
        }
        BuiltinModel::BurgersAlgebraic => {
            ModelSpec::new(kind.name(), FluxFunction::burgers(), DissipationFlux::algebraic(q_bar))
        }
        BuiltinModel::ZeroFluxBeta(beta) => {
            let q = if beta == 3.0 {
                DissipationFlux::algebraic(q_bar)
            } else {
                DissipationFlux::power_tail(beta, q_bar)?
            };
            ModelSpec::new(kind.name(), FluxFunction::zero(), q)
        }
    })
}

/// Convenience lookup by configuration name.
pub fn builtin_model_by_name(name: &str, q_bar: f64, beta: Option<f64>) -> Result<ModelSpec> {
    builtin_model(BuiltinModel::from_name(name, beta)?, q_bar)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub smoothness: Option<Smoothness>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub(crate) fn push(&mut self, name: &str, passed: bool, witness: Option<f64>, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            witness,
            detail: detail.into(),
        });
    }
}

pub const CHECK_F_ZERO: &str = "f(0)=0";
pub const CHECK_F_DERIV: &str = "f' consistent";
pub const CHECK_Q_ZERO: &str = "Q(0)=0";
pub const CHECK_Q_INCREASING: &str = "Q'>0";
pub const CHECK_Q_SATURATION: &str = "Q saturates";
pub const CHECK_Q_DERIV: &str = "Q' consistent";
pub const CHECK_Q_INVERSE: &str = "Q inverse round trip";

/// Symmetric log-spaced probe points: 0 and ±10^k for k in [lo_exp, hi_exp].
pub fn log_probe_grid(lo_exp: f64, hi_exp: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi_exp - lo_exp) * per_decade as f64).round() as usize + 1;
    let mut v: Vec<f64> = linspace(lo_exp, hi_exp, n).into_iter().map(|e| 10f64.powf(e)).collect();
    let neg: Vec<f64> = v.iter().rev().map(|x| -x).collect();
    let mut out = neg;
    out.push(0.0);
    out.append(&mut v);
    out
}

/// Checks the structural assumptions on (f, Q). Failures are reported with a
/// witness point; non-finite evaluations become failed checks.
pub fn validate_model(model: &ModelSpec) -> ValidationReport {
    let mut rep = ValidationReport {
        checks: vec![],
        smoothness: Some(model.dissipation.smoothness()),
    };
    let f = &model.flux;
    let q = &model.dissipation;

    let f0 = f.eval(0.0);
    rep.push(
        CHECK_F_ZERO,
        f0.is_finite() && f0.abs() <= 1e-12,
        Some(0.0),
        format!("f(0) = {f0}"),
    );

    let mut worst: Option<(f64, f64)> = None;
    for u in linspace(-4.0, 4.0, 41) {
        let d = f.deriv(u);
        let h = 1e-5 * (1.0 + u.abs());
        let fd = (f.eval(u + h) - f.eval(u - h)) / (2.0 * h);
        let err = (fd - d).abs() / (1.0 + d.abs());
        let bad = !err.is_finite() || err > 1e-5;
        if bad && worst.is_none_or(|(_, e)| !(e >= err)) {
            worst = Some((u, err));
        }
    }
    match worst {
        None => rep.push(CHECK_F_DERIV, true, None, "central differences agree with f'"),
        Some((u, e)) => rep.push(CHECK_F_DERIV, false, Some(u), format!("relative mismatch {e:e}")),
    }

    let q0 = q.eval(0.0);
    rep.push(
        CHECK_Q_ZERO,
        q0.is_finite() && q0.abs() <= 1e-12,
        Some(0.0),
        format!("Q(0) = {q0}"),
    );

    let probes = log_probe_grid(-6.0, 6.0, 8);
    let bad = probes.iter().find(|&&s| !(q.deriv(s) > 0.0));
    match bad {
        None => rep.push(CHECK_Q_INCREASING, true, None, "Q' positive on probe grid"),
        Some(&s) => rep.push(CHECK_Q_INCREASING, false, Some(s), format!("Q'({s}) = {}", q.deriv(s))),
    }

    let (qm, qp) = (q.q_minus_inf(), q.q_plus_inf());
    let mut sat_fail: Option<(f64, String)> = None;
    if !(qm < 0.0 && qp > 0.0 && qm.is_finite() && qp.is_finite()) {
        sat_fail = Some((
            f64::NAN,
            format!("limits ({qm}, {qp}) must be finite with Q(-inf) < 0 < Q(+inf)"),
        ));
    } else {
        let far_p = q.eval(1e6);
        let far_m = q.eval(-1e6);
        if !((far_p - qp).abs() < 1e-3 * qp.abs()) {
            sat_fail = Some((1e6, format!("Q(1e6) = {far_p} not within 1e-3 of {qp}")));
        } else if !((far_m - qm).abs() < 1e-3 * qm.abs()) {
            sat_fail = Some((-1e6, format!("Q(-1e6) = {far_m} not within 1e-3 of {qm}")));
        } else {
            let vals: Vec<f64> = probes.iter().map(|&s| q.eval(s)).collect();
            for (i, &v) in vals.iter().enumerate() {
                // far out the values may round onto the limit itself
                if !(v >= qm && v <= qp) || (i > 0 && !(v >= vals[i - 1])) {
                    sat_fail = Some((probes[i], format!("Q({}) = {v} breaks monotone approach", probes[i])));
                    break;
                }
            }
        }
    }
    let saturated = sat_fail.is_none();
    match sat_fail {
        None => rep.push(CHECK_Q_SATURATION, true, None, "Q approaches its limits monotonically"),
        Some((w, d)) => rep.push(CHECK_Q_SATURATION, false, Some(w), d),
    }

    let mut qworst: Option<(f64, f64)> = None;
    for s in log_probe_grid(-3.0, 3.0, 4) {
        let d = q.deriv(s);
        let h = 1e-5 * (1.0 + s.abs());
        let (qa, qb) = (q.eval(s + h), q.eval(s - h));
        let fd = (qa - qb) / (2.0 * h);
        let noise = 1e-13 * (qa.abs() + qb.abs()) / h;
        let err = (fd - d).abs() / (d.abs() + 1e-300);
        let bad = !err.is_finite() || (fd - d).abs() > 1e-4 * d.abs() + noise;
        if bad && qworst.is_none_or(|(_, e)| !(e >= err)) {
            qworst = Some((s, err));
        }
    }
    match qworst {
        None => rep.push(CHECK_Q_DERIV, true, None, "central differences agree with Q'"),
        Some((s, e)) => rep.push(CHECK_Q_DERIV, false, Some(s), format!("relative mismatch {e:e}")),
    }

    // |s| <= 100: beyond that the round trip is limited by the conditioning
    // of Q itself near saturation, not by the inversion.
    let mut inv_fail = None;
    if saturated {
        for s in log_probe_grid(-4.0, 2.0, 6) {
            let back = q.inverse(q.eval(s));
            if !((back - s).abs() <= 1e-10 * (1.0 + s.abs())) {
                inv_fail = Some((s, back));
                break;
            }
        }
        match inv_fail {
            None => rep.push(CHECK_Q_INVERSE, true, None, "Q^-1(Q(s)) = s on probe grid"),
            Some((s, b)) => rep.push(CHECK_Q_INVERSE, false, Some(s), format!("Q^-1(Q({s})) = {b}")),
        }
    } else {
        rep.push(
            CHECK_Q_INVERSE,
            false,
            None,
            "skipped: Q has no valid saturation limits",
        );
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    /// max(|Q(-inf)|, |Q(+inf)|)
    pub q_bar: f64,
    /// max |f'(u)| over |u| <= M
    pub f_lip: f64,
    /// max Q'(s) over the real line
    pub q1: f64,
    pub m_bound: f64,
}

pub fn derive_constants(model: &ModelSpec, m_bound: f64) -> Result<ModelConstants> {
    if !(m_bound > 0.0) || !m_bound.is_finite() {
        return arg(format!("bound M must be positive and finite, got {m_bound}"));
    }
    let q = &model.dissipation;
    let grid = linspace(-m_bound, m_bound, 10_001);
    let (_, f_lip) = maximize_sampled(|u| model.flux.deriv(u).abs(), &grid, 1e-8);
    let probes = log_probe_grid(-8.0, 6.0, 700);
    let (_, q1) = maximize_sampled(|s| q.deriv(s), &probes, 1e-8);
    Ok(ModelConstants {
        q_bar: q.q_bar(),
        f_lip,
        q1,
        m_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_models_validate() {
        for (kind, qb) in [
            (BuiltinModel::BurgersArctan, 1.0),
            (BuiltinModel::BurgersArctan, 1.0 / 16.0),
            (BuiltinModel::BurgersAlgebraic, 1.0),
            (BuiltinModel::ZeroFluxBeta(3.0), 1.0),
            (BuiltinModel::ZeroFluxBeta(4.0), 0.5),
            (BuiltinModel::ZeroFluxBeta(2.5), 1.0),
        ] {
            let m = builtin_model(kind, qb).unwrap();
            let rep = validate_model(&m);
            assert!(rep.passed(), "{kind:?}: {:?}", rep.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn shifted_flux_fails_f_zero() {
        let m = ModelSpec::new(
            "shifted",
            FluxFunction::polynomial(&[1.0, 0.0, 0.5]),
            DissipationFlux::arctan(1.0),
        );
        let rep = validate_model(&m);
        assert!(!rep.check(CHECK_F_ZERO).unwrap().passed);
        assert!(rep.check(CHECK_Q_SATURATION).unwrap().passed);
    }

    #[test]
    fn linear_q_fails_saturation() {
        let q = DissipationFlux::new("linear", |s| s, |_| 1.0, -1.0, 1.0, None, Smoothness::CInfinity);
        let m = ModelSpec::new("lin", FluxFunction::burgers(), q);
        let rep = validate_model(&m);
        let c = rep.check(CHECK_Q_SATURATION).unwrap();
        assert!(!c.passed);
        assert!(c.witness.is_some());
    }

    #[test]
    fn nonmonotone_q_is_rejected() {
        let q = DissipationFlux::new(
            "bump",
            |s| s * (-s * s).exp(),
            |s| (1.0 - 2.0 * s * s) * (-s * s).exp(),
            -1.0,
            1.0,
            None,
            Smoothness::CInfinity,
        );
        let rep = validate_model(&ModelSpec::new("bad", FluxFunction::zero(), q));
        assert!(!rep.check(CHECK_Q_INCREASING).unwrap().passed);
    }

    #[test]
    fn nonfinite_evaluation_is_a_failed_check() {
        let f = FluxFunction::new(
            "nan",
            |u| if u > 3.0 { f64::NAN } else { u },
            |_| 1.0,
            Convexity::Unknown,
            vec![],
        );
        let rep = validate_model(&ModelSpec::new("nan", f, DissipationFlux::arctan(1.0)));
        assert!(!rep.check(CHECK_F_DERIV).unwrap().passed);
    }

    #[test]
    fn constants_for_burgers_arctan() {
        let m = builtin_model(BuiltinModel::BurgersArctan, 1.0).unwrap();
        let c = derive_constants(&m, 1.0).unwrap();
        assert!((c.q_bar - 1.0).abs() < 1e-15);
        assert!((c.f_lip - 1.0).abs() < 1e-12);
        // Q'(s) = (2/pi)/(1+s^2) peaks at s = 0
        assert!((c.q1 - std::f64::consts::FRAC_2_PI).abs() < 1e-6);
        let c2 = derive_constants(&m, 2.0).unwrap();
        assert!((c2.f_lip - 2.0).abs() < 1e-12);
        assert!(derive_constants(&m, 0.0).is_err());
        assert!(derive_constants(&m, -1.0).is_err());
    }

    #[test]
    fn constants_for_zero_flux() {
        let m = builtin_model(BuiltinModel::ZeroFluxBeta(3.0), 1.0).unwrap();
        let c = derive_constants(&m, 5.0).unwrap();
        assert_eq!(c.f_lip, 0.0);
        assert!((c.q_bar - 1.0).abs() < 1e-15);
        assert!((c.q1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn builtin_lookup() {
        let m = builtin_model_by_name("burgers_arctan", 1.0, None).unwrap();
        assert!((m.q(1e300) - 1.0).abs() < 1e-12);
        assert!((m.q(1.0) - 0.5).abs() < 1e-15);
        assert!(builtin_model_by_name("nope", 1.0, None).is_err());
        assert!(builtin_model_by_name("zero_flux_beta", 1.0, None).is_err());
        assert!(builtin_model_by_name("burgers_arctan", 0.0, None).is_err());
        let alg = builtin_model_by_name("burgers_alg", 1.0, None).unwrap();
        assert_eq!(alg.dissipation.tail_exponent_beta(), Some(3.0));
    }

    #[test]
    fn power_tail_beta3_matches_algebraic() {
        let a = DissipationFlux::algebraic(1.0);
        let p = DissipationFlux::power_tail(3.0, 1.0).unwrap();
        for s in log_probe_grid(-3.0, 3.0, 5) {
            assert!((a.eval(s) - p.eval(s)).abs() < 1e-14, "s = {s}");
        }
        let p4 = DissipationFlux::power_tail(4.0, 1.0).unwrap();
        assert!((p4.eval(1e8) - 1.0).abs() < 1e-9);
        assert!((p4.deriv(0.0) - 4.0 / PI).abs() < 1e-12);
        let frac = DissipationFlux::power_tail(2.5, 1.0).unwrap();
        assert!((frac.eval(1e9) - 1.0).abs() < 1e-4);
        assert!(DissipationFlux::power_tail(1.0, 1.0).is_err());
        for th in [0.3, 0.9, 1.5, 1.57, -1.2] {
            for n in [1u32, 2, 3] {
                let (a, b) = (cos_power_integral_real(n as f64, th), cos_power_integral(n, th));
                assert!((a - b).abs() < 1e-13, "n = {n}, theta = {th}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn tabulated_q_is_c1_and_saturating() {
        let s: Vec<f64> = linspace(-5.0, 5.0, 41);
        let q: Vec<f64> = s.iter().map(|x: &f64| x.atan() * FRAC_2_PI).collect();
        let tab = DissipationFlux::tabulated(s, q, -1.0, 1.0).unwrap();
        let m = ModelSpec::new("tab", FluxFunction::burgers(), tab.clone());
        let rep = validate_model(&m);
        assert_eq!(rep.smoothness, Some(Smoothness::C1));
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        // value and slope continuous at the table end
        let e = 1e-9;
        assert!((tab.eval(5.0 + e) - tab.eval(5.0 - e)).abs() < 1e-8);
        assert!((tab.deriv(5.0 + e) - tab.deriv(5.0 - e)).abs() < 1e-6);
    }

    #[test]
    fn polynomial_turning_points_and_variation() {
        let cubic = FluxFunction::polynomial(&[0.0, -1.0, 0.0, 1.0]);
        let tp = cubic.turning_points();
        assert_eq!(tp.len(), 2);
        assert!((tp[1] - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        // variation of u^3 - u over [-1, 1]: up, down, up
        let ext = 2.0 / (3.0 * 3f64.sqrt());
        assert!((cubic.variation(-1.0, 1.0) - 4.0 * ext).abs() < 1e-12);
        assert_eq!(cubic.convexity(), Convexity::Nonconvex);
        assert_eq!(
            FluxFunction::polynomial(&[0.0, 0.0, 0.5]).convexity(),
            Convexity::Convex
        );
    }

    #[test]
    fn engquist_osher_reduces_to_upwind_and_godunov_for_burgers() {
        let f = FluxFunction::burgers();
        assert_eq!(f.engquist_osher(1.0, 0.5), 0.5);
        assert_eq!(f.engquist_osher(-1.0, -0.5), 0.125);
        // transonic rarefaction: flux at the sonic point
        assert_eq!(f.engquist_osher(-1.0, 1.0), 0.0);
        // shock 1 -> -1: f+(1) + f-(-1) = 0.5 + 0.5
        assert_eq!(f.engquist_osher(1.0, -1.0), 1.0);
    }
}
