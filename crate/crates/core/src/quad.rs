//! Numerical kernels shared by the N-function and verification code:
//! globally adaptive Gauss–Kronrod quadrature and safeguarded root finding
//! for monotone functions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod 15-point nodes (non-negative half) and weights, with the embedded
// 7-point Gauss weights on the odd nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let s = f(center - dx) + f(center + dx);
        kronrod += w * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Integrates `f` over `[a, b]` by bisecting the segment with the largest
/// error estimate until the summed estimate meets the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!(
            "quadrature bounds must be finite, got [{a}, {b}]"
        )));
    }
    let (v, e) = kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut total_err = e;
    let mut count = 1;
    loop {
        if !total.is_finite() {
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
            });
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            break;
        }
        if count >= opts.max_intervals {
            // Accept if the remaining error is at round-off level of the result.
            if total_err <= 1e3 * f64::EPSILON * total.abs().max(opts.abs_tol) {
                break;
            }
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
            });
        }
        let seg = heap.pop().expect("heap never empties during refinement");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Segment can no longer be split in floating point.
            heap.push(Segment { error: 0.0, ..seg });
            total_err = heap.iter().map(|s| s.error).sum();
            if total_err == 0.0 || heap.iter().all(|s| s.error == 0.0) {
                break;
            }
            continue;
        }
        let (v1, e1) = kronrod15(&f, seg.a, mid);
        let (v2, e2) = kronrod15(&f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        count += 1;
        if count % 64 == 0 {
            // Re-sum to shed accumulated cancellation in the running totals.
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    let value: f64 = heap.iter().map(|s| s.value).sum();
    Ok(QuadResult {
        value,
        error: total_err,
        intervals: count,
    })
}

/// Solves `g(x) = target` for a continuous, strictly increasing `g` on
/// `[0, inf)` with `g(0) = 0`. A geometric bracket `[B/2, B]` is located by
/// doubling or halving from 1; the root is then polished by Newton steps
/// that fall back to bisection whenever they leave the bracket. `rel_tol` is
/// relative to the root.
pub fn invert_increasing<G, D>(g: G, dg: D, target: f64, rel_tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if target <= 0.0 {
        return Ok(0.0);
    }
    let fail = |what: &str| {
        Err(Error::Convergence(format!(
            "could not bracket the inverse at level {target:e}: {what}"
        )))
    };
    let mut lo;
    let mut hi = 1.0;
    let mut moves = 0;
    if g(hi) < target {
        loop {
            lo = hi;
            hi *= 2.0;
            moves += 1;
            if moves > 1100 || !hi.is_finite() {
                return fail("function does not reach the target");
            }
            if g(hi) >= target {
                break;
            }
        }
    } else {
        loop {
            lo = 0.5 * hi;
            moves += 1;
            if moves > 1100 || lo == 0.0 {
                return fail("function does not vanish at the origin");
            }
            if g(lo) < target {
                break;
            }
            hi = lo;
        }
    }
    if g(lo) > target || g(hi) < target {
        return fail("function is not increasing");
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let gx = g(x) - target;
        if gx == 0.0 {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let tol = rel_tol.max(4.0 * f64::EPSILON) * x.abs();
        let slope = dg(x);
        if slope > 0.0 && slope.is_finite() {
            let step = gx / slope;
            let candidate = x - step;
            if candidate > lo && candidate < hi {
                if step.abs() <= tol {
                    return Ok(candidate);
                }
                x = candidate;
                continue;
            }
        }
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        x = 0.5 * (lo + hi);
    }
    Err(Error::Convergence(format!(
        "inverse at level {target:e} did not converge (bracket [{lo:e}, {hi:e}])"
    )))
}

/// Returns `n` points spaced geometrically between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Returns `n` evenly spaced points between `lo` and `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
