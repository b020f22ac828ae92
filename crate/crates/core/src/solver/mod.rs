//! Implicit Euler and steady solvers for the regularized problem
//! `u_t - div S^N(Du) = f` on the unit square with zero boundary values,
//! discretized by P1 triangles with lumped mass.

mod grid;
mod manufactured;
mod newton;
mod output;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use grid::{discrete_div, discrete_dsym, discrete_gradient, triangle_inner, Field, GridSpec};
pub use manufactured::{
    manufactured_forcing, manufactured_rhs, manufactured_rhs_at_level, ManufacturedSine, TimeProfile,
};
pub use newton::{NewtonReport, SolverTolerances};
pub use output::{diagnostics_csv, solve_document, sweep_csv, trajectory_bytes, TRAJECTORY_LAYOUT};

use crate::approx::{chain_build, special_chain, ApproxChain, ChainLevel};
use crate::config::{FieldConfig, FieldKind, RunConfig};
use crate::error::{Error, Result};
use crate::nfunc::{PdNFunction, ScalarNFunction};

pub type ForcingFn = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;

/// Right-hand side `f(x, y, t)` with a label for reports.
#[derive(Clone)]
pub struct Forcing {
    pub label: String,
    f: ForcingFn,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("Forcing").field("label", &self.label).finish()
    }
}

/// `amplitude sin(pi x) sin(pi y) (1, -1)`.
pub fn sine_profile(amplitude: f64, x: f64, y: f64) -> [f64; 2] {
    let s = amplitude * (PI * x).sin() * (PI * y).sin();
    [s, -s]
}

impl Forcing {
    pub fn zero() -> Self {
        Self::from_fn("zero", |_, _, _| [0.0; 2])
    }

    pub fn sine(amplitude: f64) -> Self {
        Self::from_fn(format!("sine, amplitude {amplitude}"), move |x, y, _| {
            sine_profile(amplitude, x, y)
        })
    }

    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64, f64, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn from_config(cfg: &FieldConfig) -> Self {
        match cfg.kind {
            FieldKind::Zero => Self::zero(),
            FieldKind::Sine => Self::sine(cfg.amplitude),
        }
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        (self.f)(x, y, t)
    }

    pub fn sample(&self, grid: GridSpec, t: f64) -> Field {
        Field::from_fn(grid, |x, y| self.eval(x, y, t))
    }
}

/// Initial field from a configuration entry.
pub fn field_from_config(cfg: &FieldConfig, grid: GridSpec) -> Field {
    match cfg.kind {
        FieldKind::Zero => Field::zeros(grid),
        FieldKind::Sine => Field::from_fn(grid, |x, y| sine_profile(cfg.amplitude, x, y)),
    }
}

/// A parabolic problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub chain: ApproxChain,
    pub grid: GridSpec,
    pub t_final: f64,
    pub tau: f64,
    pub forcing: Forcing,
    pub u0: Field,
    pub tols: SolverTolerances,
}

fn check_chain(chain: &ApproxChain) -> Result<()> {
    if !(chain.delta() > 0.0) {
        return Err(Error::Parameter("the solver needs delta > 0".into()));
    }
    let n = chain.len();
    if n == 0 || chain.q(n) != 2.0 {
        return Err(Error::Parameter(format!(
            "the solver needs a terminal stage with q = 2, chain exponents are {:?}",
            chain.exponents()
        )));
    }
    Ok(())
}

impl SolverTolerances {
    /// Defaults overridden by the configured `tolerances` keys.
    pub fn from_run_config(cfg: &RunConfig) -> Self {
        let d = Self::default();
        match cfg.tolerances {
            None => d,
            Some(t) => Self {
                newton_tol: t.newton.unwrap_or(d.newton_tol),
                newton_max_iter: t.newton_max_iter.unwrap_or(d.newton_max_iter),
                cg_tol: t.cg.unwrap_or(d.cg_tol),
            },
        }
    }
}

fn required<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Parameter(format!("missing required key `{key}`")))
}

impl ProblemSpec {
    /// Problem from a configuration: `p`, `delta`, `grid` and `time` are
    /// required; `forcing` and `u0` default to zero.
    pub fn from_run_config(cfg: &RunConfig) -> Result<Self> {
        let (p, delta) = cfg.single_p_delta()?;
        let grid = GridSpec::square(required(cfg.grid, "grid")?.n)?;
        let time = required(cfg.time, "time")?;
        let spec = Self {
            chain: cfg.build_chain(p, delta)?,
            grid,
            t_final: time.t_final,
            tau: time.tau,
            forcing: cfg.forcing.as_ref().map_or_else(Forcing::zero, Forcing::from_config),
            u0: cfg
                .u0
                .as_ref()
                .map_or_else(|| Field::zeros(grid), |c| field_from_config(c, grid)),
            tols: SolverTolerances::from_run_config(cfg),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_chain(&self.chain)?;
        self.grid.validate()?;
        self.tols.validate()?;
        if !(self.tau > 0.0) || !(self.t_final >= self.tau) {
            return Err(Error::Parameter(format!(
                "need tau > 0 and T >= tau, got tau = {}, T = {}",
                self.tau, self.t_final
            )));
        }
        if self.u0.grid != self.grid || !self.u0.is_finite() {
            return Err(Error::Parameter(
                "initial field must be finite and live on the problem grid".into(),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.tau - 1e-9).ceil().max(1.0) as usize
    }
}

/// Per-step diagnostics. Accumulated columns include the current step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    /// `||u||_2^2`.
    pub l2_sq: f64,
    /// `||F^N(Du)||_2^2`.
    #[serde(rename = "F_l2_sq")]
    pub f_l2_sq: f64,
    /// `delta^{p-2} ||grad u||_2^2`.
    pub gradu_l2_sq: f64,
    /// `tau sum ||(u^k - u^{k-1}) / tau||_2^2`.
    pub dt_accum: f64,
    /// `tau sum ||grad_h F^N(Du^k)||_2^2`.
    #[serde(rename = "gradF_accum")]
    pub grad_f_accum: f64,
    /// `delta^{p-2} tau sum ||Du^k||_2^2`.
    pub du_accum: f64,
    pub newton_iters: usize,
    pub residual: f64,
    /// Smallest CG Rayleigh quotient of the step, infinite if no CG ran.
    pub min_rayleigh: f64,
    /// `max_T |D_T u|`.
    pub max_du: f64,
}

/// Instantaneous quantities of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateQuantities {
    pub l2_sq: f64,
    pub f_l2_sq: f64,
    /// `||grad u||_2^2` without the `delta^{p-2}` factor.
    pub grad_sq: f64,
    pub dsym_sq: f64,
    pub grad_f_sq: f64,
    pub max_du: f64,
}

/// `||u||^2`, `||F(Du)||^2`, `||grad u||^2`, `||Du||^2`, `||grad_h F(Du)||^2`
/// and `max |Du|` for `u` under `level`. `grad_h F` differences the
/// nodal average of the triangle values of `F`.
pub fn state_quantities(level: &ChainLevel<'_>, u: &Field) -> StateQuantities {
    let g = u.grid;
    let wt = g.triangle_weight();
    let d = discrete_dsym(u);
    let grads = discrete_gradient(u);
    let fs: Vec<_> = d.iter().map(|x| crate::tensor::f_quantity(level, x)).collect();
    StateQuantities {
        l2_sq: u.l2_sq(),
        f_l2_sq: wt * fs.iter().map(|x| x.dot(x)).sum::<f64>(),
        grad_sq: wt * grads.iter().map(|m| m.dot(m)).sum::<f64>(),
        dsym_sq: wt * d.iter().map(|x| x.dot(x)).sum::<f64>(),
        grad_f_sq: wt * grid::nodal_average_gradient_sq(&g, &fs).iter().sum::<f64>(),
        max_du: d.iter().map(|x| x.norm()).fold(0.0, f64::max),
    }
}

/// `|||u0, f|||^2 = int |u0|^2 + omega(|Du0|) + int_0^T int |f|^2`, by nodal
/// and triangle quadrature with the forcing sampled at the step times.
pub fn data_norm_sq(spec: &ProblemSpec) -> f64 {
    let base = PdNFunction::new(spec.chain.p(), spec.chain.delta()).expect("validated chain");
    let wt = spec.grid.triangle_weight();
    let omega: f64 = discrete_dsym(&spec.u0).iter().map(|d| base.value(d.norm())).sum();
    let forcing: f64 = (1..=spec.steps())
        .map(|k| spec.tau * spec.forcing.sample(spec.grid, k as f64 * spec.tau).l2_sq())
        .sum();
    spec.u0.l2_sq() + wt * omega + forcing
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub times: Vec<f64>,
    /// States at `times`, the initial field first.
    pub trajectory: Vec<Field>,
    /// One row per state, step 0 being the initial field.
    pub diagnostics: Vec<StepDiagnostics>,
    pub data_norm_sq: f64,
    /// `sup_k (||u||^2 + ||F||^2 + delta^{p-2}||grad u||^2)
    /// + delta^{p-2} tau sum ||Du||^2 + tau sum ||d_t u||^2`.
    pub estimate_lhs: f64,
    /// `estimate_lhs / (1 + |||u0, f|||^2)`.
    pub estimate_ratio: f64,
    /// `max_{k,T} |D_T u^k|`.
    pub max_du: f64,
}

impl SolveResult {
    pub fn last(&self) -> &StepDiagnostics {
        self.diagnostics.last().expect("at least the initial row")
    }

    pub fn final_field(&self) -> &Field {
        self.trajectory.last().expect("at least the initial field")
    }

    /// `(tau sum_k ||u^k||^2)^{1/2}` over steps `1..`.
    pub fn l2l2_norm(&self) -> f64 {
        (1..self.times.len())
            .map(|k| (self.times[k] - self.times[k - 1]) * self.trajectory[k].l2_sq())
            .sum::<f64>()
            .sqrt()
    }

    /// `(tau sum_k ||u^k - v^k||^2)^{1/2}` over steps `1..`, for results on
    /// the same grid and time steps.
    pub fn l2l2_distance(&self, other: &SolveResult) -> Result<f64> {
        if self.times != other.times || self.trajectory[0].grid != other.trajectory[0].grid {
            return Err(Error::Parameter(
                "trajectories live on different grids or time steps".into(),
            ));
        }
        let mut acc = 0.0;
        for k in 1..self.times.len() {
            acc += (self.times[k] - self.times[k - 1]) * self.trajectory[k].dist_sq(&other.trajectory[k]);
        }
        Ok(acc.sqrt())
    }
}

/// One implicit Euler step from `state` with forcing `f` at the new time.
pub fn step_implicit(
    chain: &ApproxChain,
    state: &Field,
    f: &Field,
    tau: f64,
    tols: &SolverTolerances,
) -> Result<(Field, NewtonReport)> {
    check_chain(chain)?;
    if !(tau > 0.0) {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    if state.grid != f.grid {
        return Err(Error::Parameter("state and forcing live on different grids".into()));
    }
    newton::minimize_step(chain.top(), state.grid, 1.0 / tau, state, f, tols)
}

fn diagnostics_row(
    level: &ChainLevel<'_>,
    delta_factor: f64,
    u: &Field,
    step: usize,
    time: f64,
    prev: Option<(&StepDiagnostics, &Field, f64)>,
    report: Option<&NewtonReport>,
) -> StepDiagnostics {
    let q = state_quantities(level, u);
    let (dt_accum, grad_f_accum, du_accum) = match prev {
        None => (0.0, 0.0, 0.0),
        Some((row, old, tau)) => (
            row.dt_accum + u.dist_sq(old) / tau,
            row.grad_f_accum + tau * q.grad_f_sq,
            row.du_accum + tau * delta_factor * q.dsym_sq,
        ),
    };
    StepDiagnostics {
        step,
        time,
        l2_sq: q.l2_sq,
        f_l2_sq: q.f_l2_sq,
        gradu_l2_sq: delta_factor * q.grad_sq,
        dt_accum,
        grad_f_accum,
        du_accum,
        newton_iters: report.map_or(0, |r| r.iterations),
        residual: report.map_or(0.0, |r| r.residual),
        min_rayleigh: report.map_or(f64::INFINITY, |r| r.min_rayleigh),
        max_du: q.max_du,
    }
}

/// Implicit Euler over `ceil(T / tau)` steps.
pub fn solve_parabolic(spec: &ProblemSpec) -> Result<SolveResult> {
    spec.validate()?;
    let level = spec.chain.top();
    let delta_factor = spec.chain.delta().powf(spec.chain.p() - 2.0);
    let mut u = spec.u0.clone();
    let mut rows = vec![diagnostics_row(&level, delta_factor, &u, 0, 0.0, None, None)];
    let mut times = vec![0.0];
    let mut trajectory = vec![u.clone()];
    for k in 1..=spec.steps() {
        let t = k as f64 * spec.tau;
        let f = spec.forcing.sample(spec.grid, t);
        let (next, report) =
            newton::minimize_step(level, spec.grid, 1.0 / spec.tau, &u, &f, &spec.tols).map_err(|e| Error::Step {
                step: k,
                source: Box::new(e),
            })?;
        let row = diagnostics_row(
            &level,
            delta_factor,
            &next,
            k,
            t,
            Some((rows.last().expect("initial row"), &u, spec.tau)),
            Some(&report),
        );
        rows.push(row);
        times.push(t);
        trajectory.push(next.clone());
        u = next;
    }
    let sup = rows
        .iter()
        .map(|r| r.l2_sq + r.f_l2_sq + r.gradu_l2_sq)
        .fold(0.0, f64::max);
    let last = rows.last().expect("initial row");
    let estimate_lhs = sup + last.du_accum + last.dt_accum;
    let data = data_norm_sq(spec);
    let max_du = rows.iter().map(|r| r.max_du).fold(0.0, f64::max);
    Ok(SolveResult {
        times,
        trajectory,
        diagnostics: rows,
        data_norm_sq: data,
        estimate_lhs,
        estimate_ratio: estimate_lhs / (1.0 + data),
        max_du,
    })
}

/// A steady problem.
#[derive(Debug, Clone)]
pub struct SteadySpec {
    pub chain: ApproxChain,
    pub grid: GridSpec,
    pub forcing: Forcing,
    pub tols: SolverTolerances,
}

impl SteadySpec {
    /// Steady problem from a configuration: `p`, `delta` and `grid` are
    /// required; `forcing` defaults to zero.
    pub fn from_run_config(cfg: &RunConfig) -> Result<Self> {
        let (p, delta) = cfg.single_p_delta()?;
        let spec = Self {
            chain: cfg.build_chain(p, delta)?,
            grid: GridSpec::square(required(cfg.grid, "grid")?.n)?,
            forcing: cfg.forcing.as_ref().map_or_else(Forcing::zero, Forcing::from_config),
            tols: SolverTolerances::from_run_config(cfg),
        };
        check_chain(&spec.chain)?;
        spec.tols.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyResult {
    pub field: Field,
    pub newton: NewtonReport,
    /// `||F^N(Du)||_2`.
    pub f_l2: f64,
    /// `||grad_h F^N(Du)||_2`.
    pub grad_f_l2: f64,
    pub max_du: f64,
}

/// Minimizes `sum_T |T| U^N(|D_T v|) - h^2 sum f . v` from zero, with the
/// forcing taken at `t = 0`.
pub fn solve_steady(spec: &SteadySpec) -> Result<SteadyResult> {
    check_chain(&spec.chain)?;
    spec.grid.validate()?;
    spec.tols.validate()?;
    let level = spec.chain.top();
    let zero = Field::zeros(spec.grid);
    let f = spec.forcing.sample(spec.grid, 0.0);
    let (field, newton) = newton::minimize_step(level, spec.grid, 0.0, &zero, &f, &spec.tols)?;
    let q = state_quantities(&level, &field);
    Ok(SteadyResult {
        field,
        newton,
        f_l2: q.f_l2_sq.sqrt(),
        grad_f_l2: q.grad_f_sq.sqrt(),
        max_du: q.max_du,
    })
}

/// Chain used by a continuation entry: the special chain from `a1` for
/// `p > 2`, a single `q = 2` stage at `a1` otherwise.
pub fn continuation_chain(p: f64, delta: f64, a1: f64, spacing: f64) -> Result<ApproxChain> {
    if p > 2.0 {
        special_chain(p, delta, a1, spacing)
    } else {
        chain_build(p, delta, &[2.0], &[a1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "A1")]
    pub a1: f64,
    #[serde(rename = "A")]
    pub thresholds: Vec<f64>,
    pub last: Option<StepDiagnostics>,
    pub estimate_lhs: Option<f64>,
    pub estimate_ratio: Option<f64>,
    pub max_du: Option<f64>,
    /// `L^2(L^2)` distance to the previous entry's solution.
    pub diff_prev: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Relative change of each quantity across the last two successful
    /// entries, keyed by column name.
    pub last_change: Vec<(String, f64)>,
}

impl SweepResult {
    pub fn max_last_change(&self) -> Option<f64> {
        self.last_change.iter().map(|(_, v)| *v).reduce(f64::max)
    }
}

fn relative_change(new: f64, old: f64) -> f64 {
    if new == old {
        0.0
    } else {
        (new - old).abs() / old.abs().max(f64::MIN_POSITIVE)
    }
}

/// Re-solves `spec` for each first threshold of `schedule`, in parallel.
/// Failed entries are recorded and the sweep continues.
pub fn continuation_sweep(spec: &ProblemSpec, schedule: &[f64], spacing: f64) -> Result<SweepResult> {
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter(format!(
            "A schedule must be non-empty and increasing, got {schedule:?}"
        )));
    }
    let (p, delta) = (spec.chain.p(), spec.chain.delta());
    let solved: Vec<(Vec<f64>, Result<SolveResult>)> = schedule
        .par_iter()
        .map(|&a1| match continuation_chain(p, delta, a1, spacing) {
            Err(e) => (Vec::new(), Err(e)),
            Ok(chain) => {
                let thresholds = chain.thresholds();
                let entry = ProblemSpec { chain, ..spec.clone() };
                (thresholds, solve_parabolic(&entry))
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(schedule.len());
    let mut prev: Option<&SolveResult> = None;
    let mut ok: Vec<&SolveResult> = Vec::new();
    for (&a1, (thresholds, res)) in schedule.iter().zip(&solved) {
        let row = match res {
            Ok(r) => {
                let diff = prev.map(|q| r.l2l2_distance(q)).transpose()?;
                prev = Some(r);
                ok.push(r);
                SweepRow {
                    a1,
                    thresholds: thresholds.clone(),
                    last: Some(*r.last()),
                    estimate_lhs: Some(r.estimate_lhs),
                    estimate_ratio: Some(r.estimate_ratio),
                    max_du: Some(r.max_du),
                    diff_prev: diff,
                    error: None,
                }
            }
            Err(e) => {
                prev = None;
                SweepRow {
                    a1,
                    thresholds: thresholds.clone(),
                    last: None,
                    estimate_lhs: None,
                    estimate_ratio: None,
                    max_du: None,
                    diff_prev: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    let mut last_change = Vec::new();
    if let [.., a, b] = ok.as_slice() {
        let (x, y) = (a.last(), b.last());
        for (name, old, new) in [
            ("gradF_accum", x.grad_f_accum, y.grad_f_accum),
            ("l2_sq", x.l2_sq, y.l2_sq),
            ("F_l2_sq", x.f_l2_sq, y.f_l2_sq),
            ("gradu_l2_sq", x.gradu_l2_sq, y.gradu_l2_sq),
            ("dt_accum", x.dt_accum, y.dt_accum),
            ("du_accum", x.du_accum, y.du_accum),
            ("estimate_lhs", a.estimate_lhs, b.estimate_lhs),
        ] {
            last_change.push((name.to_string(), relative_change(new, old)));
        }
    }
    Ok(SweepResult { rows, last_change })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: f64, n: usize) -> ProblemSpec {
        let grid = GridSpec::square(n).unwrap();
        ProblemSpec {
            chain: crate::config::RunConfig::default().build_chain(p, 1.0).unwrap(),
            grid,
            t_final: 0.1,
            tau: 0.02,
            forcing: Forcing::zero(),
            u0: Field::zeros(grid),
            tols: SolverTolerances::default(),
        }
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let r = solve_parabolic(&spec(3.0, 6)).unwrap();
        assert_eq!(r.diagnostics.len(), 6);
        for row in &r.diagnostics {
            assert_eq!(
                (row.l2_sq, row.f_l2_sq, row.gradu_l2_sq, row.dt_accum, row.grad_f_accum),
                (0.0, 0.0, 0.0, 0.0, 0.0)
            );
        }
    }

    #[test]
    fn unforced_energy_decays() {
        let mut s = spec(5.0, 10);
        s.u0 = Field::from_fn(s.grid, |x, y| sine_profile(2.0, x, y));
        let r = solve_parabolic(&s).unwrap();
        for w in r.diagnostics.windows(2) {
            assert!(w[1].l2_sq <= w[0].l2_sq);
            assert!(w[1].dt_accum >= w[0].dt_accum && w[1].grad_f_accum >= w[0].grad_f_accum);
        }
        assert!(r.estimate_ratio.is_finite() && r.estimate_ratio > 0.0);
    }

    #[test]
    fn rejects_invalid_problems() {
        let mut s = spec(3.0, 5);
        s.tau = 0.0;
        assert!(solve_parabolic(&s).is_err());
        let mut s = spec(3.0, 5);
        s.chain = chain_build(3.0, 0.0, &[2.0], &[2.0]).unwrap();
        assert!(solve_parabolic(&s).is_err());
        let mut s = spec(5.0, 5);
        s.chain = chain_build(5.0, 1.0, &[3.0], &[2.0]).unwrap();
        assert!(solve_parabolic(&s).is_err());
    }

    #[test]
    fn steps_round_up() {
        let mut s = spec(3.0, 5);
        s.t_final = 0.5;
        s.tau = 0.2;
        assert_eq!(s.steps(), 3);
        s.tau = 0.1;
        assert_eq!(s.steps(), 5);
    }

    #[test]
    fn sweep_of_one_entry_has_no_difference() {
        let mut s = spec(3.0, 6);
        s.u0 = Field::from_fn(s.grid, |x, y| sine_profile(1.0, x, y));
        let r = continuation_sweep(&s, &[4.0], 1.0).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].diff_prev.is_none() && r.last_change.is_empty());
        assert!(continuation_sweep(&s, &[4.0, 2.0], 1.0).is_err());
    }
}
