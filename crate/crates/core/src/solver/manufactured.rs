//! Manufactured solutions `u = amplitude g(t) sin(pi x) sin(pi y) (1, -1)`
//! and the forcing that makes them exact.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{Field, GridSpec};
use super::Forcing;
use crate::approx::ApproxChain;
use crate::error::{Error, Result};
use crate::tensor::{jacobian_action, SymMat};

/// Time factor of a manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeProfile {
    /// `g = 1`.
    Constant,
    /// `g = 1 + t`; implicit Euler is exact in time for it.
    Linear,
    /// `g = exp(-t)`.
    Decay,
}

impl TimeProfile {
    fn g(&self, t: f64) -> (f64, f64) {
        match self {
            TimeProfile::Constant => (1.0, 0.0),
            TimeProfile::Linear => (1.0 + t, 1.0),
            TimeProfile::Decay => ((-t).exp(), -(-t).exp()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedSine {
    pub amplitude: f64,
    pub profile: TimeProfile,
}

const DIRECTION: [f64; 2] = [1.0, -1.0];

impl ManufacturedSine {
    pub fn new(amplitude: f64, profile: TimeProfile) -> Self {
        Self { amplitude, profile }
    }

    pub fn value(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let s = self.amplitude * self.profile.g(t).0 * (PI * x).sin() * (PI * y).sin();
        [s * DIRECTION[0], s * DIRECTION[1]]
    }

    pub fn field(&self, grid: GridSpec, t: f64) -> Field {
        Field::from_fn(grid, |x, y| self.value(x, y, t))
    }

    /// `(du/dt, Du, d_x Du, d_y Du)` at a point.
    fn jets(&self, x: f64, y: f64, t: f64) -> ([f64; 2], SymMat, [SymMat; 2]) {
        let (g, dg) = self.profile.g(t);
        let amp = self.amplitude;
        let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
        let grad_s = [PI * cx * sy, PI * sx * cy];
        let pi2 = PI * PI;
        let hess_s = [[-pi2 * sx * sy, pi2 * cx * cy], [pi2 * cx * cy, -pi2 * sx * sy]];
        let sym_outer = |v: [f64; 2]| {
            let c = amp * g;
            SymMat::new2(
                c * DIRECTION[0] * v[0],
                c * DIRECTION[1] * v[1],
                0.5 * c * (DIRECTION[0] * v[1] + DIRECTION[1] * v[0]),
            )
        };
        let dt = amp * dg * sx * sy;
        (
            [dt * DIRECTION[0], dt * DIRECTION[1]],
            sym_outer(grad_s),
            [sym_outer(hess_s[0]), sym_outer(hess_s[1])],
        )
    }

    /// `du/dt - div S^n(Du)` at a point, with
    /// `div S(Du)_c = sum_k (dS(Du)[d_k Du])_{ck}`.
    pub fn forcing_at(&self, chain: &ApproxChain, n: usize, x: f64, y: f64, t: f64) -> Result<[f64; 2]> {
        let level = chain.level(n)?;
        let (dt, d, dd) = self.jets(x, y, t);
        let r0 = jacobian_action(&level, &d, &dd[0], chain.delta(), chain.p())?;
        let r1 = jacobian_action(&level, &d, &dd[1], chain.delta(), chain.p())?;
        Ok([
            dt[0] - (r0.get(0, 0) + r1.get(0, 1)),
            dt[1] - (r0.get(1, 0) + r1.get(1, 1)),
        ])
    }
}

/// Forcing making `u` exact, evaluated at the nodes of `grid` with the
/// level-0 operator `S(Du) = a(|Du|) Du` of the unmodified base function.
pub fn manufactured_rhs(u: &ManufacturedSine, chain: &ApproxChain, grid: GridSpec, t: f64) -> Result<Field> {
    manufactured_rhs_at_level(u, chain, 0, grid, t)
}

/// As [`manufactured_rhs`] with the operator of chain level `n`.
pub fn manufactured_rhs_at_level(
    u: &ManufacturedSine,
    chain: &ApproxChain,
    n: usize,
    grid: GridSpec,
    t: f64,
) -> Result<Field> {
    let values = (0..grid.nodes())
        .map(|k| {
            let (x, y) = grid.coords(k);
            u.forcing_at(chain, n, x, y, t)
        })
        .collect::<Result<_>>()?;
    Ok(Field { grid, values })
}

/// [`manufactured_rhs`] as a time-dependent forcing.
pub fn manufactured_forcing(u: &ManufacturedSine, chain: &ApproxChain) -> Result<Forcing> {
    if !(chain.delta() > 0.0) && chain.p() != 2.0 {
        return Err(Error::Parameter("manufactured forcing needs delta > 0 or p = 2".into()));
    }
    let (u, chain) = (*u, Arc::new(chain.clone()));
    Ok(Forcing::from_fn(
        format!("manufactured sine, amplitude {}, profile {:?}", u.amplitude, u.profile),
        move |x, y, t| u.forcing_at(&chain, 0, x, y, t).expect("positive delta"),
    ))
}
