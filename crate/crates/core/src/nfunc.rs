//! Scalar N-function algebra.
//!
//! The central object is the shifted power function
//! `omega_{p,delta}(t) = int_0^t (delta + s)^(p-2) s ds`, evaluated in closed
//! form. Complementary functions, the `psi` potential of the `F` operator,
//! balance characteristics and Delta_2 constants are computed numerically for
//! any [`ScalarNFunction`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, invert_increasing, linear_grid, log_grid, QuadOptions};

/// Evaluation contract for a regular N-function on `[0, inf)`.
///
/// `value` and `d1` must be continuous with `value(0) = d1(0) = 0` and `d1`
/// strictly increasing on `t > 0`. `d2` is only required for `t > 0`.
pub trait ScalarNFunction: Sync {
    fn value(&self, t: f64) -> f64;
    fn d1(&self, t: f64) -> f64;
    fn d2(&self, t: f64) -> f64;

    /// `a(t) = d1(t) / t`, with `d1(0)/0 := 0`.
    fn a(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            self.d1(t) / t
        }
    }

    fn name(&self) -> String;
}

impl<T: ScalarNFunction + ?Sized> ScalarNFunction for &T {
    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }
    fn d1(&self, t: f64) -> f64 {
        (**self).d1(t)
    }
    fn d2(&self, t: f64) -> f64 {
        (**self).d2(t)
    }
    fn a(&self, t: f64) -> f64 {
        (**self).a(t)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// The N-function `omega_{p,delta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdNFunction {
    p: f64,
    delta: f64,
}

impl PdNFunction {
    pub fn new(p: f64, delta: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("exponent p must be finite and > 1, got {p}")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!(
                "shift delta must be finite and >= 0, got {delta}"
            )));
        }
        Ok(Self { p, delta })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Exact balance characteristics `(min{1, p-1}, max{1, p-1})`.
    pub fn characteristics(&self) -> Characteristics {
        let pm1 = self.p - 1.0;
        Characteristics {
            gamma1: pm1.min(1.0),
            gamma2: pm1.max(1.0),
        }
    }

    /// The ratio `t d2(t) / d1(t) = 1 + (p-2) t / (delta + t)`.
    pub fn balance_ratio(&self, t: f64) -> f64 {
        if t == 0.0 {
            if self.delta > 0.0 {
                1.0
            } else {
                self.p - 1.0
            }
        } else {
            1.0 + (self.p - 2.0) * t / (self.delta + t)
        }
    }
}

/// Closed-form antiderivative `int_0^x (1 + s)^(p-2) s ds`.
///
/// The two-term closed form cancels catastrophically for small `x`, so the
/// binomial series is used there.
fn unit_omega(p: f64, x: f64) -> f64 {
    if x <= 0.5 {
        let r = p - 2.0;
        let mut coeff = 1.0;
        let mut power = x * x;
        let mut sum = 0.0;
        for k in 0..400 {
            let term = coeff * power / (k as f64 + 2.0);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            coeff *= (r - k as f64) / (k as f64 + 1.0);
            if coeff == 0.0 {
                break;
            }
            power *= x;
        }
        sum
    } else {
        let l = x.ln_1p();
        (p * l).exp_m1() / p - ((p - 1.0) * l).exp_m1() / (p - 1.0)
    }
}

impl ScalarNFunction for PdNFunction {
    fn value(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        if self.delta == 0.0 {
            return t.powf(self.p) / self.p;
        }
        self.delta.powf(self.p) * unit_omega(self.p, t / self.delta)
    }

    fn d1(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        (self.delta + t).powf(self.p - 2.0) * t
    }

    fn d2(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.a(0.0);
        }
        if self.p == 2.0 {
            return 1.0;
        }
        (self.delta + t).powf(self.p - 3.0) * (self.delta + (self.p - 1.0) * t)
    }

    /// `(delta + t)^(p-2)`; at the origin `delta^(p-2)` directly, which is 0
    /// for `delta = 0, p > 2` and infinite for `delta = 0, p < 2`.
    fn a(&self, t: f64) -> f64 {
        (self.delta + t).powf(self.p - 2.0)
    }

    fn name(&self) -> String {
        format!("omega_{{p={}, delta={}}}", self.p, self.delta)
    }
}

fn check_omega_args(p: f64, delta: f64, t: f64) -> Result<PdNFunction> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("argument t must be finite and >= 0, got {t}")));
    }
    PdNFunction::new(p, delta)
}

pub fn omega_value(p: f64, delta: f64, t: f64) -> Result<f64> {
    Ok(check_omega_args(p, delta, t)?.value(t))
}

pub fn omega_d1(p: f64, delta: f64, t: f64) -> Result<f64> {
    Ok(check_omega_args(p, delta, t)?.d1(t))
}

pub fn omega_d2(p: f64, delta: f64, t: f64) -> Result<f64> {
    let f = check_omega_args(p, delta, t)?;
    if t == 0.0 && delta == 0.0 && p < 2.0 {
        return Err(Error::Domain(format!(
            "second derivative of omega_{{{p}, 0}} is unbounded at t = 0"
        )));
    }
    Ok(f.d2(t))
}

/// Numerical complementary function `phi*(t) = int_0^t (phi')^{-1}(s) ds`.
#[derive(Debug, Clone, Copy)]
pub struct Conjugate<F> {
    inner: F,
    opts: QuadOptions,
    root_tol: f64,
}

impl<F: ScalarNFunction> Conjugate<F> {
    pub fn new(inner: F) -> Self {
        Self {
            inner,
            opts: QuadOptions::default(),
            root_tol: 1e-12,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.opts.rel_tol = rel_tol;
        self
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }

    /// `(phi')^{-1}(s)`.
    pub fn inverse_d1(&self, s: f64) -> Result<f64> {
        invert_increasing(|x| self.inner.d1(x), |x| self.inner.d2(x), s, self.root_tol)
    }

    pub fn try_value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("conjugate argument must be >= 0, got {t}")));
        }
        let failure = std::cell::Cell::new(None);
        let r = integrate(
            |s| match self.inverse_d1(s) {
                Ok(x) => x,
                Err(e) => {
                    failure.set(Some(e));
                    f64::NAN
                }
            },
            0.0,
            t,
            self.opts,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(r?.value)
    }

    /// Values of the conjugate at ascending points `ts`, integrating the
    /// inverse once across the whole grid.
    pub fn table(&self, ts: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ts.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &t in ts {
            if t < prev {
                return Err(Error::Domain(
                    "conjugate table points must be ascending and >= 0".into(),
                ));
            }
            let failure = std::cell::Cell::new(None);
            let piece = integrate(
                |s| match self.inverse_d1(s) {
                    Ok(x) => x,
                    Err(e) => {
                        failure.set(Some(e));
                        f64::NAN
                    }
                },
                prev,
                t,
                self.opts,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            acc += piece?.value;
            out.push(acc);
            prev = t;
        }
        Ok(out)
    }
}

impl<F: ScalarNFunction> ScalarNFunction for Conjugate<F> {
    fn value(&self, t: f64) -> f64 {
        self.try_value(t).unwrap_or(f64::NAN)
    }

    fn d1(&self, s: f64) -> f64 {
        self.inverse_d1(s).unwrap_or(f64::NAN)
    }

    /// `1 / phi''((phi')^{-1}(s))`.
    fn d2(&self, s: f64) -> f64 {
        match self.inverse_d1(s) {
            Ok(x) => 1.0 / self.inner.d2(x),
            Err(_) => f64::NAN,
        }
    }

    fn name(&self) -> String {
        format!("({})*", self.inner.name())
    }
}

/// `phi*(t)` with default tolerances.
pub fn conjugate_value<F: ScalarNFunction>(phi: F, t: f64) -> Result<f64> {
    Conjugate::new(phi).try_value(t)
}

/// `psi(t) = int_0^t sqrt(phi'(s) s) ds`, the potential of `F_phi`.
pub fn psi_value<F: ScalarNFunction>(phi: F, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("psi argument must be >= 0, got {t}")));
    }
    let r = integrate(|s| (phi.d1(s) * s).sqrt(), 0.0, t, QuadOptions::default())?;
    Ok(r.value)
}

/// Balance characteristics `(gamma1, gamma2)` with
/// `gamma1 phi'(t) <= t phi''(t) <= gamma2 phi'(t)`.
///
/// Values returned by [`estimate_characteristics`] are raw extrema of the
/// ratio on a grid and need not straddle 1; [`Characteristics::balanced`]
/// widens them to a valid characteristic pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Characteristics {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Characteristics {
    pub fn balanced(&self) -> Self {
        Self {
            gamma1: self.gamma1.min(1.0),
            gamma2: self.gamma2.max(1.0),
        }
    }

    /// Delta_2 bound `2^(gamma2 + 1)` for a balanced function.
    pub fn delta2_bound(&self) -> f64 {
        2f64.powf(self.balanced().gamma2 + 1.0)
    }

    /// Delta_2 bound `2^(1/gamma1 + 1)` for the complementary function.
    pub fn conjugate_delta2_bound(&self) -> f64 {
        2f64.powf(1.0 / self.balanced().gamma1 + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    #[default]
    Log,
    Linear,
}

/// Sample grid on `[t_lo, t_hi]` with caller-supplied endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub t_lo: f64,
    pub t_hi: f64,
    pub n: usize,
    #[serde(default)]
    pub kind: GridKind,
}

impl SampleGrid {
    pub fn log(t_lo: f64, t_hi: f64, n: usize) -> Self {
        Self {
            t_lo,
            t_hi,
            n,
            kind: GridKind::Log,
        }
    }

    pub fn linear(t_lo: f64, t_hi: f64, n: usize) -> Self {
        Self {
            t_lo,
            t_hi,
            n,
            kind: GridKind::Linear,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.t_lo > 0.0 && self.t_lo < self.t_hi && self.t_hi.is_finite()) {
            return Err(Error::Domain(format!(
                "sample range must satisfy 0 < t_lo < t_hi, got [{}, {}]",
                self.t_lo, self.t_hi
            )));
        }
        if self.n < 2 {
            return Err(Error::Domain(format!("need at least 2 samples, got {}", self.n)));
        }
        Ok(match self.kind {
            GridKind::Log => log_grid(self.t_lo, self.t_hi, self.n),
            GridKind::Linear => linear_grid(self.t_lo, self.t_hi, self.n),
        })
    }
}

/// Extrema of `t phi''(t) / phi'(t)` over the grid.
pub fn estimate_characteristics_on<F: ScalarNFunction>(phi: F, grid: SampleGrid) -> Result<Characteristics> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in grid.points()? {
        let r = t * phi.d2(t) / phi.d1(t);
        if !r.is_finite() {
            return Err(Error::Domain(format!(
                "balance ratio of {} is not finite at t = {t:e}",
                phi.name()
            )));
        }
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(Characteristics { gamma1: lo, gamma2: hi })
}

pub fn estimate_characteristics<F: ScalarNFunction>(
    phi: F,
    t_lo: f64,
    t_hi: f64,
    n_samples: usize,
) -> Result<Characteristics> {
    estimate_characteristics_on(phi, SampleGrid::log(t_lo, t_hi, n_samples))
}

/// `max(2, max_t phi(2t)/phi(t))` over a log grid.
pub fn estimate_delta2<F: ScalarNFunction>(phi: F, t_lo: f64, t_hi: f64, n_samples: usize) -> Result<f64> {
    let mut k: f64 = 2.0;
    for t in SampleGrid::log(t_lo, t_hi, n_samples).points()? {
        let r = phi.value(2.0 * t) / phi.value(t);
        if !r.is_finite() {
            return Err(Error::Domain(format!(
                "Delta_2 ratio of {} is not finite at t = {t:e}",
                phi.name()
            )));
        }
        k = k.max(r);
    }
    Ok(k)
}

/// Delta_2 constants of a function and of its complementary function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungConstants {
    pub delta2_phi: f64,
    pub delta2_conj: f64,
}

impl YoungConstants {
    pub fn estimate<F: ScalarNFunction>(phi: F, t_lo: f64, t_hi: f64, n_samples: usize) -> Result<Self> {
        let delta2_phi = estimate_delta2(&phi, t_lo, t_hi, n_samples)?;
        let conj = Conjugate::new(&phi);
        let delta2_conj = estimate_delta2(conj, t_lo, t_hi, n_samples)?;
        Ok(Self {
            delta2_phi,
            delta2_conj,
        })
    }
}

/// Both sides of each of the four Young-type inequalities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungSides {
    pub lhs: [f64; 4],
    pub rhs: [f64; 4],
}

impl YoungSides {
    /// `lhs <= rhs (1 + rel_slack)` for all four inequalities.
    pub fn holds(&self, rel_slack: f64) -> bool {
        self.lhs
            .iter()
            .zip(self.rhs.iter())
            .all(|(l, r)| *l <= *r + rel_slack * r.abs())
    }
}

/// Smallest integer `M` with `x <= 2^M`.
pub fn dyadic_exponent(x: f64) -> u32 {
    let mut m = 0;
    while 2f64.powi(m as i32) < x {
        m += 1;
    }
    m
}

/// Evaluates the four Young-type inequalities
///
/// ```text
/// t u        <= eps phi(t)  + K*^M phi*(u)
/// t u        <= eps phi*(t) + K^M  phi(u)
/// t phi'(u)  <= eps phi(t)  + K K*^M phi(u)
/// phi'(t) u  <= eps phi(t)  + K^N  phi(u),   K / eps <= 2^N
/// ```
///
/// with `K = Delta_2(phi)` and `K* = Delta_2(phi*)`.
pub fn young_sides<F: ScalarNFunction>(
    phi: F,
    t: f64,
    u: f64,
    eps: f64,
    m: u32,
    consts: YoungConstants,
) -> Result<YoungSides> {
    if !(t >= 0.0 && u >= 0.0) {
        return Err(Error::Domain(format!("Young arguments must be >= 0, got ({t}, {u})")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if 1.0 / eps > 2f64.powi(m as i32) {
        return Err(Error::Parameter(format!(
            "M = {m} too small for eps = {eps}: need 1/eps <= 2^M"
        )));
    }
    let conj = Conjugate::new(&phi);
    let (k, ks) = (consts.delta2_phi, consts.delta2_conj);
    let n = dyadic_exponent(k / eps);
    let phi_t = phi.value(t);
    let phi_u = phi.value(u);
    let conj_t = conj.try_value(t)?;
    let conj_u = conj.try_value(u)?;
    let km = k.powi(m as i32);
    let ksm = ks.powi(m as i32);
    let kn = k.powi(n as i32);

    let lhs = [t * u, t * u, t * phi.d1(u), phi.d1(t) * u];
    let rhs = [
        eps * phi_t + ksm * conj_u,
        eps * conj_t + km * phi_u,
        eps * phi_t + k * ksm * phi_u,
        eps * phi_t + kn * phi_u,
    ];
    Ok(YoungSides { lhs, rhs })
}

/// True iff all four Young-type inequalities hold at `(t, u)`.
pub fn young_check<F: ScalarNFunction>(
    phi: F,
    t: f64,
    u: f64,
    eps: f64,
    m: u32,
    consts: YoungConstants,
) -> Result<bool> {
    Ok(young_sides(phi, t, u, eps, m, consts)?.holds(1e-12))
}

/// Relative defect of the Young equality `phi(t) + phi*(phi'(t)) = t phi'(t)`.
pub fn young_equality_defect<F: ScalarNFunction>(phi: F, t: f64) -> Result<f64> {
    let s = phi.d1(t);
    let conj = conjugate_value(&phi, s)?;
    let lhs = phi.value(t) + conj;
    let rhs = t * s;
    Ok((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE))
}
