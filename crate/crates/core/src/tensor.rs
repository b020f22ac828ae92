//! Symmetric-matrix evaluation of the stitched operators
//! `S^n(P) = a^n(|P^sym|) P^sym`, `F^n(P) = sqrt(a^n(|P^sym|)) P^sym` and the
//! Jacobian action `dS^n(P)[Q]`, for `d` in {2, 3}.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::approx::{ApproxChain, ChainLevel};
use crate::error::{Error, Result};
use crate::nfunc::ScalarNFunction;

fn check_dim(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::Domain(format!("dimension must be 2 or 3, got {d}")))
    }
}

/// Dense `d x d` matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    d: usize,
    e: [f64; 9],
}

impl Mat {
    pub fn zeros(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { d, e: [0.0; 9] })
    }

    pub fn identity(d: usize) -> Result<Self> {
        let mut m = Self::zeros(d)?;
        for i in 0..d {
            m.e[i * d + i] = 1.0;
        }
        Ok(m)
    }

    /// Builds a matrix from `d * d` row-major entries.
    pub fn from_row_major(d: usize, entries: &[f64]) -> Result<Self> {
        check_dim(d)?;
        if entries.len() != d * d {
            return Err(Error::Domain(format!(
                "{} entries do not form a {d}x{d} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        let mut e = [0.0; 9];
        e[..d * d].copy_from_slice(entries);
        Ok(Self { d, e })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.e[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.e[i * self.d + j] = v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.e[..self.d * self.d]
    }

    pub fn transpose(&self) -> Self {
        let mut t = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                t.e[i * self.d + j] = self.e[j * self.d + i];
            }
        }
        t
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Mat) -> f64 {
        self.entries().iter().zip(other.entries()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(mut self, rhs: Mat) -> Mat {
        for (a, b) in self.e.iter_mut().zip(rhs.e) {
            *a += b;
        }
        self
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(mut self, rhs: Mat) -> Mat {
        for (a, b) in self.e.iter_mut().zip(rhs.e) {
            *a -= b;
        }
        self
    }
}

impl Mul<Mat> for f64 {
    type Output = Mat;
    fn mul(self, mut rhs: Mat) -> Mat {
        for a in rhs.e.iter_mut() {
            *a *= self;
        }
        rhs
    }
}

/// Symmetric `d x d` matrix stored as its diagonal followed by the upper
/// off-diagonal entries: `(xx, yy, xy)` for `d = 2`,
/// `(xx, yy, zz, xy, xz, yz)` for `d = 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    d: usize,
    e: [f64; 6],
}

const OFF2: [(usize, usize); 1] = [(0, 1)];
const OFF3: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

impl SymMat {
    pub fn zeros(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { d, e: [0.0; 6] })
    }

    pub fn identity(d: usize) -> Result<Self> {
        let mut s = Self::zeros(d)?;
        for i in 0..d {
            s.e[i] = 1.0;
        }
        Ok(s)
    }

    /// `d = 2` matrix `[[xx, xy], [xy, yy]]`.
    pub fn new2(xx: f64, yy: f64, xy: f64) -> Self {
        Self {
            d: 2,
            e: [xx, yy, xy, 0.0, 0.0, 0.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of stored entries, `d (d + 1) / 2`.
    pub fn len(&self) -> usize {
        self.d * (self.d + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn packed(&self) -> &[f64] {
        &self.e[..self.len()]
    }

    fn off(&self) -> &'static [(usize, usize)] {
        if self.d == 2 {
            &OFF2
        } else {
            &OFF3
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.e[i];
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let k = self
            .off()
            .iter()
            .position(|&pair| pair == (i, j))
            .expect("index within dimension");
        self.e[self.d + k]
    }

    /// Frobenius inner product; off-diagonal entries count twice.
    pub fn dot(&self, other: &SymMat) -> f64 {
        let d = self.d;
        let diag: f64 = (0..d).map(|i| self.e[i] * other.e[i]).sum();
        let off: f64 = (d..self.len()).map(|k| self.e[k] * other.e[k]).sum();
        diag + 2.0 * off
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn to_mat(&self) -> Mat {
        let mut m = Mat { d: self.d, e: [0.0; 9] };
        for i in 0..self.d {
            for j in 0..self.d {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }
}

impl Add for SymMat {
    type Output = SymMat;
    fn add(mut self, rhs: SymMat) -> SymMat {
        for (a, b) in self.e.iter_mut().zip(rhs.e) {
            *a += b;
        }
        self
    }
}

impl Sub for SymMat {
    type Output = SymMat;
    fn sub(mut self, rhs: SymMat) -> SymMat {
        for (a, b) in self.e.iter_mut().zip(rhs.e) {
            *a -= b;
        }
        self
    }
}

impl Mul<SymMat> for f64 {
    type Output = SymMat;
    fn mul(self, mut rhs: SymMat) -> SymMat {
        for a in rhs.e.iter_mut() {
            *a *= self;
        }
        rhs
    }
}

/// `(P + P^T) / 2`.
pub fn sym(p: &Mat) -> SymMat {
    let d = p.d;
    let mut s = SymMat { d, e: [0.0; 6] };
    for i in 0..d {
        s.e[i] = p.get(i, i);
    }
    for (k, &(i, j)) in s.off().iter().enumerate() {
        s.e[d + k] = 0.5 * (p.get(i, j) + p.get(j, i));
    }
    s
}

/// `a(|P|) P` for symmetric `P`; zero at the origin.
pub fn stress<F: ScalarNFunction>(phi: &F, p: &SymMat) -> SymMat {
    let t = p.norm();
    if t == 0.0 {
        return *p;
    }
    phi.a(t) * *p
}

/// `sqrt(a(|P|)) P` for symmetric `P`; zero at the origin.
pub fn f_quantity<F: ScalarNFunction>(phi: &F, p: &SymMat) -> SymMat {
    let t = p.norm();
    if t == 0.0 {
        return *p;
    }
    phi.a(t).sqrt() * *p
}

/// Jacobian action
/// `(phi'(t)/t) (Q - (E:Q) E) + phi''(t) (E:Q) E` with `E = P / |P|`.
///
/// At `P = 0` the continuous limit `a(0) Q` is used, which exists when
/// `a(0)` is finite and positive; `delta` and `p` only enter the error.
pub fn jacobian_action<F: ScalarNFunction>(
    phi: &F,
    p: &SymMat,
    q: &SymMat,
    delta: f64,
    exponent: f64,
) -> Result<SymMat> {
    let t = p.norm();
    if t == 0.0 {
        if delta > 0.0 {
            return Ok(phi.a(0.0) * *q);
        }
        if exponent == 2.0 {
            return Ok(*q);
        }
        return Err(Error::DegeneratePoint { p: exponent });
    }
    let e = (1.0 / t) * *p;
    let eq = e.dot(q);
    let a = phi.d1(t) / t;
    let b = phi.d2(t);
    Ok(a * (*q - eq * e) + (b * eq) * e)
}

fn level(chain: &ApproxChain, n: usize) -> Result<ChainLevel<'_>> {
    chain.level(n)
}

/// `S^n(P) = a^n(|P^sym|) P^sym`.
pub fn s_eval(chain: &ApproxChain, n: usize, p: &Mat) -> Result<SymMat> {
    Ok(stress(&level(chain, n)?, &sym(p)))
}

/// `F^n(P) = sqrt(a^n(|P^sym|)) P^sym`.
pub fn f_eval(chain: &ApproxChain, n: usize, p: &Mat) -> Result<SymMat> {
    Ok(f_quantity(&level(chain, n)?, &sym(p)))
}

/// `dS^n(P)[Q]`.
pub fn ds_apply(chain: &ApproxChain, n: usize, p: &Mat, q: &Mat) -> Result<SymMat> {
    jacobian_action(&level(chain, n)?, &sym(p), &sym(q), chain.delta(), chain.p())
}

/// `dS^n(P)[G] : G`.
pub fn quad_form(chain: &ApproxChain, n: usize, p: &Mat, g: &Mat) -> Result<f64> {
    let gs = sym(g);
    Ok(ds_apply(chain, n, p, g)?.dot(&gs))
}
