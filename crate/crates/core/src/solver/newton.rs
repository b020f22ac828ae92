//! Minimization of the discrete step energy
//! `J(v) = h^2 sum |v - u_old|^2 / (2 tau) + sum_T |T| U(|D_T v|) - h^2 sum f . v`
//! by Newton's method with Armijo backtracking and Jacobi-preconditioned
//! conjugate gradients.

use serde::{Deserialize, Serialize};

use super::grid::{scatter, sym_of, triangle_gradient, Field, GridSpec, Triangle, BOUNDARY};
use crate::approx::ChainLevel;
use crate::error::{Error, Result};
use crate::nfunc::ScalarNFunction;
use crate::tensor::SymMat;

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
/// Below this norm the Jacobian is evaluated by its limit at zero.
const TINY_NORM: f64 = 1e-150;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverTolerances {
    /// Bound on `sqrt(sum g^2) / h`, the discrete `L^2` norm of the residual,
    /// relative to the same norm of the data `h^2 (f + u_old / tau)` once
    /// that exceeds one.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Relative residual reduction of each inner solve.
    pub cg_tol: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            newton_max_iter: 50,
            cg_tol: 1e-12,
        }
    }
}

impl SolverTolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0 && self.cg_tol > 0.0 && self.cg_tol < 1.0 && self.newton_max_iter >= 1) {
            return Err(Error::Parameter(format!("invalid solver tolerances {self:?}")));
        }
        Ok(())
    }
}

/// Convergence history of one minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    /// Residual before each iteration and after the last.
    pub residuals: Vec<f64>,
    /// Energy of each accepted iterate, starting with the initial guess.
    pub energies: Vec<f64>,
    /// Smallest `p.Hp / p.p` over all CG search directions.
    pub min_rayleigh: f64,
    pub cg_iterations: usize,
}

/// Linearization of the stress on one triangle:
/// `dS[Q] = a (Q - (E:Q) E) + d2 (E:Q) E`, or `a Q` at the origin.
#[derive(Debug, Clone, Copy)]
struct Linearization {
    a: f64,
    d2: f64,
    e: Option<SymMat>,
}

impl Linearization {
    fn apply(&self, q: &SymMat) -> SymMat {
        match self.e {
            None => self.a * *q,
            Some(e) => {
                let eq = e.dot(q);
                self.a * (*q - eq * e) + (self.d2 * eq) * e
            }
        }
    }
}

/// The step energy for fixed data.
pub(crate) struct StepEnergy<'a> {
    level: ChainLevel<'a>,
    grid: GridSpec,
    table: Vec<Triangle>,
    /// `1 / tau`, or zero for the steady problem.
    inv_tau: f64,
    u_old: &'a [[f64; 2]],
    f: &'a [[f64; 2]],
}

fn axpy(x: &[[f64; 2]], alpha: f64, y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    x.iter()
        .zip(y)
        .map(|(a, b)| [a[0] + alpha * b[0], a[1] + alpha * b[1]])
        .collect()
}

fn dot(x: &[[f64; 2]], y: &[[f64; 2]]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum()
}

impl<'a> StepEnergy<'a> {
    pub(crate) fn new(
        level: ChainLevel<'a>,
        grid: GridSpec,
        inv_tau: f64,
        u_old: &'a [[f64; 2]],
        f: &'a [[f64; 2]],
    ) -> Self {
        Self {
            level,
            grid,
            table: grid.triangle_table(),
            inv_tau,
            u_old,
            f,
        }
    }

    fn dsym(&self, tri: &Triangle, v: &[[f64; 2]]) -> SymMat {
        sym_of(&triangle_gradient(tri, v, self.grid.h))
    }

    pub(crate) fn energy(&self, v: &[[f64; 2]]) -> f64 {
        let (wn, wt) = (self.grid.node_weight(), self.grid.triangle_weight());
        let mut nodal = 0.0;
        for ((x, old), f) in v.iter().zip(self.u_old).zip(self.f) {
            let d = [x[0] - old[0], x[1] - old[1]];
            nodal += 0.5 * self.inv_tau * (d[0] * d[0] + d[1] * d[1]) - (f[0] * x[0] + f[1] * x[1]);
        }
        let cells: f64 = self
            .table
            .iter()
            .map(|t| self.level.value(self.dsym(t, v).norm()))
            .sum();
        wn * nodal + wt * cells
    }

    pub(crate) fn gradient(&self, v: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let wn = self.grid.node_weight();
        let mut g: Vec<[f64; 2]> = v
            .iter()
            .zip(self.u_old)
            .zip(self.f)
            .map(|((x, old), f)| {
                [
                    wn * (self.inv_tau * (x[0] - old[0]) - f[0]),
                    wn * (self.inv_tau * (x[1] - old[1]) - f[1]),
                ]
            })
            .collect();
        let wt = self.grid.triangle_weight();
        for tri in &self.table {
            let d = self.dsym(tri, v);
            let t = d.norm();
            if t > 0.0 {
                scatter(tri, &(self.level.a(t) * d), wt, self.grid.h, &mut g);
            }
        }
        g
    }

    /// `sqrt(sum g^2) / h`.
    pub(crate) fn residual_norm(&self, g: &[[f64; 2]]) -> f64 {
        dot(g, g).sqrt() / self.grid.h
    }

    /// Residual norm of the data vector `h^2 (f + u_old / tau)`.
    fn data_norm(&self) -> f64 {
        let wn = self.grid.node_weight();
        let b: Vec<[f64; 2]> = self
            .f
            .iter()
            .zip(self.u_old)
            .map(|(f, u)| [wn * (f[0] + self.inv_tau * u[0]), wn * (f[1] + self.inv_tau * u[1])])
            .collect();
        self.residual_norm(&b)
    }

    fn linearize(&self, v: &[[f64; 2]]) -> Vec<Linearization> {
        self.table
            .iter()
            .map(|tri| {
                let d = self.dsym(tri, v);
                let t = d.norm();
                if t < TINY_NORM {
                    Linearization {
                        a: self.level.a(0.0),
                        d2: 0.0,
                        e: None,
                    }
                } else {
                    let vals = self.level.eval(t);
                    Linearization {
                        a: vals.a,
                        d2: vals.d2,
                        e: Some((1.0 / t) * d),
                    }
                }
            })
            .collect()
    }

    fn hess_apply(&self, lin: &[Linearization], w: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let m = self.grid.node_weight() * self.inv_tau;
        let mut out: Vec<[f64; 2]> = w.iter().map(|x| [m * x[0], m * x[1]]).collect();
        let wt = self.grid.triangle_weight();
        for (tri, l) in self.table.iter().zip(lin) {
            let q = self.dsym(tri, w);
            scatter(tri, &l.apply(&q), wt, self.grid.h, &mut out);
        }
        out
    }

    fn hess_diagonal(&self, lin: &[Linearization]) -> Vec<[f64; 2]> {
        let m = self.grid.node_weight() * self.inv_tau;
        let mut diag = vec![[m; 2]; self.grid.nodes()];
        let (wt, h) = (self.grid.triangle_weight(), self.grid.h);
        for (tri, l) in self.table.iter().zip(lin) {
            for (node, b) in tri.nodes.iter().zip(&tri.grads) {
                if *node == BOUNDARY {
                    continue;
                }
                for c in 0..2 {
                    let mut g = [[0.0; 2]; 2];
                    g[c] = [b[0] / h, b[1] / h];
                    let q = sym_of(&g);
                    diag[*node][c] += wt * l.apply(&q).dot(&q);
                }
            }
        }
        diag
    }

    /// Solves `H s = rhs` by preconditioned CG. Returns the solution, the
    /// iteration count and the smallest Rayleigh quotient seen.
    fn cg(&self, lin: &[Linearization], rhs: &[[f64; 2]], tol: f64) -> Result<(Vec<[f64; 2]>, usize, f64)> {
        let n = rhs.len();
        let diag = self.hess_diagonal(lin);
        let precond = |r: &[[f64; 2]]| -> Vec<[f64; 2]> {
            r.iter().zip(&diag).map(|(x, d)| [x[0] / d[0], x[1] / d[1]]).collect()
        };
        let mut x = vec![[0.0; 2]; n];
        let mut r = rhs.to_vec();
        let target = tol * dot(rhs, rhs).sqrt();
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut min_rq = f64::INFINITY;
        let max_iter = 20 * 2 * n + 100;
        let mut it = 0;
        while dot(&r, &r).sqrt() > target && it < max_iter {
            let hp = self.hess_apply(lin, &p);
            let php = dot(&p, &hp);
            let pp = dot(&p, &p);
            if !(php > 0.0) || !php.is_finite() {
                return Err(Error::CgBreakdown(format!(
                    "non-positive curvature p.Hp = {php:e} at iteration {it}"
                )));
            }
            min_rq = min_rq.min(php / pp);
            let alpha = rz / php;
            x = axpy(&x, alpha, &p);
            r = axpy(&r, -alpha, &hp);
            z = precond(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p = axpy(&z, beta, &p);
            it += 1;
        }
        Ok((x, it, min_rq))
    }

    /// Newton iteration from `v0`.
    pub(crate) fn minimize(&self, v0: Vec<[f64; 2]>, tols: &SolverTolerances) -> Result<(Vec<[f64; 2]>, NewtonReport)> {
        let mut v = v0;
        let mut j = self.energy(&v);
        let mut g = self.gradient(&v);
        let mut res = self.residual_norm(&g);
        let mut report = NewtonReport {
            iterations: 0,
            residual: res,
            residuals: vec![res],
            energies: vec![j],
            min_rayleigh: f64::INFINITY,
            cg_iterations: 0,
        };
        let tol = tols.newton_tol * self.data_norm().max(1.0);
        while res > tol {
            if report.iterations >= tols.newton_max_iter {
                return Err(Error::NewtonDivergence {
                    iterations: report.iterations,
                    residual: res,
                });
            }
            let lin = self.linearize(&v);
            let neg_g: Vec<[f64; 2]> = g.iter().map(|x| [-x[0], -x[1]]).collect();
            let (s, cg_it, rq) = self.cg(&lin, &neg_g, tols.cg_tol)?;
            report.cg_iterations += cg_it;
            report.min_rayleigh = report.min_rayleigh.min(rq);
            let slope = dot(&g, &s);
            // Once the predicted decrease is at rounding level of J the full
            // Newton step is taken; Armijo cannot resolve it.
            let resolvable = -slope > 1e-13 * (1.0 + j.abs());
            let mut alpha = 1.0;
            let mut trial = axpy(&v, alpha, &s);
            let mut j_trial = self.energy(&trial);
            if resolvable {
                let mut k = 0;
                while !(j_trial <= j + ARMIJO_C * alpha * slope) {
                    k += 1;
                    if k > MAX_BACKTRACKS {
                        return Err(Error::NewtonDivergence {
                            iterations: report.iterations,
                            residual: res,
                        });
                    }
                    alpha *= BACKTRACK;
                    trial = axpy(&v, alpha, &s);
                    j_trial = self.energy(&trial);
                }
            }
            v = trial;
            j = j_trial;
            g = self.gradient(&v);
            res = self.residual_norm(&g);
            report.iterations += 1;
            report.residuals.push(res);
            report.energies.push(j);
            if !res.is_finite() {
                return Err(Error::NewtonDivergence {
                    iterations: report.iterations,
                    residual: res,
                });
            }
        }
        report.residual = res;
        Ok((v, report))
    }
}

/// Minimizer of the step energy with data `u_old`, `f` on `grid`;
/// `inv_tau = 0` gives the steady problem.
pub(crate) fn minimize_step(
    level: ChainLevel<'_>,
    grid: GridSpec,
    inv_tau: f64,
    u_old: &Field,
    f: &Field,
    tols: &SolverTolerances,
) -> Result<(Field, NewtonReport)> {
    let e = StepEnergy::new(level, grid, inv_tau, &u_old.values, &f.values);
    let (v, report) = e.minimize(u_old.values.clone(), tols)?;
    Ok((Field { grid, values: v }, report))
}
