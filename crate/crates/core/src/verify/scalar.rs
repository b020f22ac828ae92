//! Checks on scalar functions: the base `omega_{p,delta}` and the levels of
//! its approximation chain.

use rayon::prelude::*;

use super::{ratio, require_stages, require_subquadratic, require_superquadratic, Ctx, Tally};
use crate::approx::ChainLevel;
use crate::error::Result;
use crate::nfunc::{
    dyadic_exponent, estimate_characteristics_on, estimate_delta2, young_equality_defect, young_sides, Conjugate,
    PdNFunction, SampleGrid, ScalarNFunction, YoungConstants,
};
use crate::quad::{integrate, log_grid, QuadOptions};

const T_LO: f64 = 1e-6;
const T_HI: f64 = 1e6;
const T_SAMPLES: usize = 10_000;

const STREAM_YOUNG: u64 = 6;

fn t_grid() -> Vec<f64> {
    log_grid(T_LO, T_HI, T_SAMPLES)
}

type Row = Vec<(&'static str, f64, f64)>;

/// Evaluates the inequalities returned by `f` at every grid point (in
/// parallel, recorded in grid order). If one fails, the boundary between the
/// first failing point and its passing predecessor is located by bisection
/// and reported as `boundary_t`.
fn scan<F>(tally: &mut Tally, grid: &[f64], slack: f64, extra: &[(&str, f64)], f: F)
where
    F: Fn(f64) -> Row + Sync,
{
    let rows: Vec<Row> = grid.par_iter().map(|&t| f(t)).collect();
    let fails = |row: &Row, case: &str| row.iter().any(|(c, l, r)| *c == case && ratio(*l, *r) - 1.0 > slack);
    let mut first_failure: Option<(usize, &'static str)> = None;
    for (i, row) in rows.iter().enumerate() {
        let mut witness: Vec<(&str, f64)> = vec![("t", grid[i])];
        witness.extend_from_slice(extra);
        for &(case, l, r) in row {
            tally.le(case, l, r, &witness);
            if first_failure.is_none() && ratio(l, r) - 1.0 > slack {
                first_failure = Some((i, case));
            }
        }
    }
    tally.samples += grid.len();
    if let Some((i, case)) = first_failure {
        if i > 0 && !fails(&rows[i - 1], case) {
            let (mut lo, mut hi) = (grid[i - 1].ln(), grid[i].ln());
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if fails(&f(mid.exp()), case) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            tally.detail("boundary_t", hi.exp());
        }
    }
}

/// Records `values[k] <= values[k + 1]` (or the reverse) along the grid.
fn monotone(tally: &mut Tally, case: &str, grid: &[f64], values: &[f64], increasing: bool, extra: &[(&str, f64)]) {
    for k in 0..values.len() - 1 {
        let (l, r) = if increasing {
            (values[k], values[k + 1])
        } else {
            (values[k + 1], values[k])
        };
        let mut w: Vec<(&str, f64)> = vec![("t", grid[k]), ("t_next", grid[k + 1])];
        w.extend_from_slice(extra);
        tally.le(case, l, r, &w);
    }
}

fn levels<'a>(ctx: &Ctx<'a>) -> Vec<ChainLevel<'a>> {
    (0..=ctx.chain.len())
        .map(|n| ctx.chain.level(n).expect("level within chain"))
        .collect()
}

pub(super) fn eq_e(ctx: &Ctx) -> Result<Tally> {
    let f = ctx.chain.base();
    let p = f.p();
    let growth = 2f64.powf(p + 1.0);
    let (lo, hi) = ((p - 1.0).min(1.0), (p - 1.0).max(1.0));
    let mut tally = Tally::new();
    scan(&mut tally, &t_grid(), ctx.slack, &[], |t| {
        let (v, d1, d2) = (f.value(t), f.d1(t), f.d2(t));
        vec![
            ("omega <= t omega'", v, t * d1),
            ("t omega' <= 2^(p+1) omega", t * d1, growth * v),
            ("min(1,p-1) omega' <= t omega''", lo * d1, t * d2),
            ("t omega'' <= max(1,p-1) omega'", t * d2, hi * d1),
        ]
    });
    Ok(tally)
}

pub(super) fn basic(ctx: &Ctx) -> Result<Tally> {
    let mut tally = Tally::new();
    let grid = t_grid();
    for level in levels(ctx) {
        scan(&mut tally, &grid, ctx.slack, &[("level", level.index() as f64)], |t| {
            let (v, d1) = (level.value(t), level.d1(t));
            vec![
                ("phi <= t phi'", v, t * d1),
                ("t phi' <= phi(2t)", t * d1, level.value(2.0 * t)),
            ]
        });
    }
    Ok(tally)
}

pub(super) fn delta2(ctx: &Ctx) -> Result<Tally> {
    let mut tally = Tally::new();
    for level in levels(ctx) {
        let n = level.index();
        let ch = estimate_characteristics_on(level, SampleGrid::log(T_LO, 2.0 * T_HI, T_SAMPLES))?.balanced();
        let k = estimate_delta2(level, T_LO, T_HI, T_SAMPLES)?;
        let bound = ch.delta2_bound();
        tally.le("Delta_2 estimate <= 2^(gamma2+1)", k, bound, &[("level", n as f64)]);
        tally.detail(format!("delta2_level{n}"), k);
        tally.detail(format!("gamma2_level{n}"), ch.gamma2);
        tally.samples += T_SAMPLES;
    }
    Ok(tally)
}

/// Delta_2 estimates of `phi` and `phi*` on a dyadic grid, so that `2t` is
/// again a grid point and one conjugate sweep serves both.
fn dyadic_delta2<F: ScalarNFunction>(phi: F, lo: f64, hi: f64, per_doubling: usize) -> Result<YoungConstants> {
    let mut grid = Vec::new();
    let mut k = 0;
    loop {
        let t = lo * 2f64.powf(k as f64 / per_doubling as f64);
        grid.push(t);
        if t > 2.0 * hi {
            break;
        }
        k += 1;
    }
    let values: Vec<f64> = grid.iter().map(|&t| phi.value(t)).collect();
    let conj = Conjugate::new(&phi).table(&grid)?;
    let ratio_max = |v: &[f64]| {
        (0..v.len() - per_doubling)
            .map(|i| v[i + per_doubling] / v[i])
            .fold(2.0, f64::max)
    };
    Ok(YoungConstants {
        delta2_phi: ratio_max(&values),
        delta2_conj: ratio_max(&conj),
    })
}

pub(super) fn young(ctx: &Ctx) -> Result<Tally> {
    let f = ctx.chain.base();
    let consts = dyadic_delta2(f, T_LO, T_HI, 16)?;
    let mut tally = Tally::new();
    tally.detail("delta2_phi", consts.delta2_phi);
    tally.detail("delta2_conj", consts.delta2_conj);
    let n = ctx.sampler.count.min(2000);
    let epsilons = [0.5, 0.25, 0.1];
    let rows: Vec<Result<(f64, f64, f64, crate::nfunc::YoungSides)>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ctx.sampler.rng(STREAM_YOUNG, i);
            let t = ctx.sampler.magnitude(&mut rng);
            let u = ctx.sampler.magnitude(&mut rng);
            let eps = epsilons[(i % 3) as usize];
            let m = dyadic_exponent(1.0 / eps);
            Ok((t, u, eps, young_sides(f, t, u, eps, m, consts)?))
        })
        .collect();
    const CASES: [&str; 4] = [
        "t u <= eps phi(t) + K*^M phi*(u)",
        "t u <= eps phi*(t) + K^M phi(u)",
        "t phi'(u) <= eps phi(t) + K K*^M phi(u)",
        "phi'(t) u <= eps phi(t) + K^N phi(u)",
    ];
    for row in rows {
        let (t, u, eps, sides) = row?;
        for i in 0..4 {
            tally.le(
                CASES[i],
                sides.lhs[i],
                sides.rhs[i],
                &[("t", t), ("u", u), ("eps", eps)],
            );
        }
    }
    tally.samples += n;
    for t in [0.1, 1.0, 10.0] {
        let defect = young_equality_defect(f, t)?;
        tally.le("Young equality defect <= 1e-8", defect, 1e-8, &[("t", t)]);
        tally.detail(format!("equality_defect_t{t}"), defect);
        tally.samples += 1;
    }
    Ok(tally)
}

pub(super) fn conj_balanced(ctx: &Ctx) -> Result<Tally> {
    let mut tally = Tally::new();
    let grid = log_grid(1e-4, 1e4, 400);
    let all = levels(ctx);
    for &level in &all {
        let n = level.index();
        let ch = estimate_characteristics_on(level, SampleGrid::log(1e-4, 1e4, 400))?;
        let conj = Conjugate::new(level);
        let ratios: Vec<(f64, f64)> = grid
            .par_iter()
            .map(|&t| {
                let s = level.d1(t);
                (s, s * conj.d2(s) / conj.d1(s))
            })
            .collect();
        for (k, (s, r)) in ratios.into_iter().enumerate() {
            let w = [("level", n as f64), ("t", grid[k]), ("s", s)];
            tally.le("1/gamma2 <= conjugate balance ratio", 1.0 / ch.gamma2, r, &w);
            tally.le("conjugate balance ratio <= 1/gamma1", r, 1.0 / ch.gamma1, &w);
        }
        tally.samples += grid.len();
    }
    let ends = if all.len() > 1 {
        vec![all[0], all[all.len() - 1]]
    } else {
        vec![all[0]]
    };
    for level in ends {
        let bi = Conjugate::new(Conjugate::new(level));
        let pts = [0.01, 0.1, 1.0, 10.0, 100.0];
        let vals: Vec<Result<f64>> = pts.par_iter().map(|&t| bi.try_value(t)).collect();
        for (t, v) in pts.iter().zip(vals) {
            let exact = level.value(*t);
            let err = (v? - exact).abs() / exact;
            tally.le(
                "biconjugate relative error <= 1e-6",
                err,
                1e-6,
                &[("level", level.index() as f64), ("t", *t)],
            );
            tally.samples += 1;
        }
    }
    Ok(tally)
}

pub(super) fn stitch(ctx: &Ctx) -> Result<Tally> {
    require_stages("stitch", ctx.chain)?;
    let mut tally = Tally::new();
    for (i, m) in ctx.chain.stitch_mismatch().iter().enumerate() {
        let w = [("stage", (i + 1) as f64), ("A", ctx.chain.threshold(i + 1))];
        tally.le("value mismatch <= 1e-9", m[0], 1e-9, &w);
        tally.le("first derivative mismatch <= 1e-9", m[1], 1e-9, &w);
        tally.le("second derivative mismatch <= 1e-9", m[2], 1e-9, &w);
        tally.detail(
            format!("max_mismatch_stage{}", i + 1),
            m.iter().cloned().fold(0.0, f64::max),
        );
        tally.samples += 1;
    }
    Ok(tally)
}

pub(super) fn eq12(ctx: &Ctx) -> Result<Tally> {
    require_stages("eq12", ctx.chain)?;
    let mut tally = Tally::new();
    let grid = t_grid();
    for n in 1..=ctx.chain.len() {
        let prev = ctx.chain.level(n - 1)?;
        let level = ctx.chain.level(n)?;
        let ch = estimate_characteristics_on(prev, SampleGrid::log(T_LO, T_HI, T_SAMPLES))?.balanced();
        let upper = ch.gamma2.max(ctx.chain.q(n) - 1.0);
        tally.detail(format!("gamma1_level{}", n - 1), ch.gamma1);
        tally.detail(format!("upper_level{n}"), upper);
        scan(&mut tally, &grid, ctx.slack, &[("level", n as f64)], |t| {
            let r = t * level.d2(t) / level.d1(t);
            vec![
                ("gamma1 <= stitched balance ratio", ch.gamma1, r),
                ("stitched balance ratio <= max(gamma2, q-1)", r, upper),
            ]
        });
    }
    Ok(tally)
}

/// `A_{n-1}^{p - q_{n-1}}`, equal to 1 for `n = 1`.
fn prev_threshold_factor(ctx: &Ctx, n: usize) -> f64 {
    if n == 1 {
        1.0
    } else {
        ctx.chain.threshold(n - 1).powf(ctx.chain.p() - ctx.chain.q(n - 1))
    }
}

pub(super) fn uam(ctx: &Ctx) -> Result<Tally> {
    require_superquadratic("UAm", ctx.chain)?;
    let chain = ctx.chain;
    let (p, delta) = (chain.p(), chain.delta());
    let q1 = chain.q(1);
    let lower_c = delta.powf(p - 2.0) / ((p - 1.0) * 2f64.powf(q1 - 2.0));
    let grid = t_grid();
    let mut tally = Tally::new();
    for n in 1..=chain.len() {
        let level = chain.level(n)?;
        let (qn, qprev) = (chain.q(n), chain.q(n - 1));
        let shifted_c = delta.powf(p - qn) / ((p - 1.0) * 2f64.powf(q1 - 2.0));
        let upper_c = (p - 1.0) / (qn - 1.0) * 2f64.powf(p - 2.0);
        let prev_factor = prev_threshold_factor(ctx, n);
        scan(&mut tally, &grid, ctx.slack, &[("level", n as f64)], |t| {
            let an = level.a(t);
            let mid = shifted_c * (delta + t).powf(qn - 2.0);
            vec![
                ("delta^(p-2)/((p-1)2^(q1-2)) <= shifted lower bound", lower_c, mid),
                ("shifted lower bound <= a^n", mid, an),
                (
                    "a^n <= c A_(n-1)^(p-q_(n-1)) a_(q_(n-1))",
                    an,
                    upper_c * prev_factor * (delta + t).powf(qprev - 2.0),
                ),
                ("a^n <= c a^0", an, upper_c * (delta + t).powf(p - 2.0)),
            ]
        });
        let values: Vec<f64> = grid.iter().map(|&t| level.a(t)).collect();
        monotone(
            &mut tally,
            "a^n non-decreasing",
            &grid,
            &values,
            true,
            &[("level", n as f64)],
        );
    }
    Ok(tally)
}

pub(super) fn cor_uam(ctx: &Ctx) -> Result<Tally> {
    require_superquadratic("cor_UAm", ctx.chain)?;
    let chain = ctx.chain;
    let (p, delta) = (chain.p(), chain.delta());
    let q1 = chain.q(1);
    let quad_c = delta.powf(p - 2.0) / ((p - 1.0) * 2f64.powf(q1 - 1.0));
    let conj_c = (p - 1.0) * 2f64.powf(q1 - 3.0) / delta.powf(p - 2.0);
    let grid = t_grid();
    let conj_grid = log_grid(1e-4, 1e4, 300);
    let mut tally = Tally::new();
    for n in 1..=chain.len() {
        let level = chain.level(n)?;
        let (qn, qprev) = (chain.q(n), chain.q(n - 1));
        let wn = PdNFunction::new(qn, delta)?;
        let wprev = PdNFunction::new(qprev, delta)?;
        let base = chain.base();
        let shifted_c = delta.powf(p - qn) / ((p - 1.0) * 2f64.powf(q1 - 2.0));
        let upper_c = (p - 1.0) / (qn - 1.0) * 2f64.powf(p - 2.0);
        let prev_factor = prev_threshold_factor(ctx, n);
        scan(&mut tally, &grid, ctx.slack, &[("level", n as f64)], |t| {
            let on = level.value(t);
            let mid = shifted_c * wn.value(t);
            vec![
                (
                    "delta^(p-2) t^2/((p-1)2^(q1-1)) <= shifted lower bound",
                    quad_c * t * t,
                    mid,
                ),
                ("shifted lower bound <= omega^n", mid, on),
                ("omega^n <= c omega^0", on, upper_c * base.value(t)),
                (
                    "omega^n <= c A_(n-1)^(p-q_(n-1)) omega_(q_(n-1))",
                    on,
                    upper_c * prev_factor * wprev.value(t),
                ),
            ]
        });
        let conj = Conjugate::new(level).table(&conj_grid)?;
        for (t, c) in conj_grid.iter().zip(conj) {
            tally.le(
                "(omega^n)* <= (p-1)2^(q1-3)/delta^(p-2) t^2",
                c,
                conj_c * t * t,
                &[("level", n as f64), ("t", *t)],
            );
        }
        tally.samples += conj_grid.len();
    }
    Ok(tally)
}

/// `sup a^n(t) s^2 / (delta^p + omega^n(s) + omega^n(t))` over a 200 x 200
/// log grid.
fn mixed_supremum(level: ChainLevel<'_>, delta: f64, p: f64, grid: &[f64]) -> f64 {
    let a: Vec<f64> = grid.iter().map(|&t| level.a(t)).collect();
    let w: Vec<f64> = grid.iter().map(|&t| level.value(t)).collect();
    let floor = delta.powf(p);
    let mut sup: f64 = 0.0;
    for (i, s) in grid.iter().enumerate() {
        for j in 0..grid.len() {
            let v = a[j] * s * s / (floor + w[i] + w[j]);
            if !(v <= sup) {
                sup = v;
            }
        }
    }
    sup
}

pub(super) fn ast(ctx: &Ctx) -> Result<Tally> {
    require_superquadratic("ast", ctx.chain)?;
    let chain = ctx.chain;
    let doubled = chain.with_scaled_thresholds(2.0)?;
    let top = 4.0 * doubled.thresholds().last().copied().unwrap_or(1.0);
    let grid = log_grid(1e-3, top.max(1e4), 200);
    let (p, delta) = (chain.p(), chain.delta());
    let mut tally = Tally::new();
    for n in 1..=chain.len() {
        let s1 = mixed_supremum(chain.level(n)?, delta, p, &grid);
        let s2 = mixed_supremum(doubled.level(n)?, delta, p, &grid);
        tally.detail(format!("sup_level{n}"), s1);
        tally.detail(format!("sup_doubled_level{n}"), s2);
        let w = [("level", n as f64), ("sup", s1), ("sup_doubled", s2)];
        if !(s1.is_finite() && s2.is_finite() && s1 > 0.0) {
            tally.fail("supremum finite and positive", &w);
        }
        tally.le("doubled supremum < 2 x supremum", s2, 2.0 * s1, &w);
        tally.samples += 2 * grid.len() * grid.len();
    }
    Ok(tally)
}

pub(super) fn ua_smallp(ctx: &Ctx) -> Result<Tally> {
    require_subquadratic("UA_smallp", ctx.chain)?;
    let chain = ctx.chain;
    let (p, delta) = (chain.p(), chain.delta());
    let a_thr = chain.threshold(1);
    let base = chain.base();
    let level = chain.level(1)?;
    let upper = delta.powf(p - 2.0);
    let lower = (p - 1.0) * (delta + a_thr).powf(p - 2.0);
    let grid = t_grid();
    let mut tally = Tally::new();
    scan(&mut tally, &grid, ctx.slack, &[], |t| {
        let aa = level.a(t);
        vec![
            ("(p-1) a <= a^A", (p - 1.0) * base.a(t), aa),
            ("a^A <= delta^(p-2)", aa, upper),
            ("(p-1)(delta+A)^(p-2) <= a^A", lower, aa),
        ]
    });
    let values: Vec<f64> = grid.iter().map(|&t| level.a(t)).collect();
    monotone(&mut tally, "a^A non-increasing", &grid, &values, false, &[]);
    Ok(tally)
}

pub(super) fn cor_ua(ctx: &Ctx) -> Result<Tally> {
    require_subquadratic("cor_UA", ctx.chain)?;
    let chain = ctx.chain;
    let (p, delta) = (chain.p(), chain.delta());
    let a_thr = chain.threshold(1);
    let base = chain.base();
    let level = chain.level(1)?;
    let grid = t_grid();
    let mut tally = Tally::new();
    scan(&mut tally, &grid, ctx.slack, &[], |t| {
        let wa = level.value(t);
        vec![
            ("(p-1) omega <= omega^A", (p - 1.0) * base.value(t), wa),
            ("omega^A <= delta^(p-2) t^2/2", wa, delta.powf(p - 2.0) * t * t / 2.0),
            (
                "(p-1)/2 (delta+A)^(p-2) t^2 <= omega^A",
                (p - 1.0) / 2.0 * (delta + a_thr).powf(p - 2.0) * t * t,
                wa,
            ),
        ]
    });
    let k = 2f64.powf(1.0 / (p - 1.0) + 1.0);
    let m = dyadic_exponent(1.0 / (p - 1.0));
    let conj_grid = log_grid(1e-3, 1e3, 300);
    let scaled_grid: Vec<f64> = conj_grid.iter().map(|t| t / (p - 1.0)).collect();
    let ca = Conjugate::new(level).table(&conj_grid)?;
    let cb = Conjugate::new(base).table(&conj_grid)?;
    let cs = Conjugate::new(base).table(&scaled_grid)?;
    for i in 0..conj_grid.len() {
        let w = [("t", conj_grid[i])];
        tally.le("(omega^A)* <= (p-1) omega*(t/(p-1))", ca[i], (p - 1.0) * cs[i], &w);
        tally.le(
            "(p-1) omega*(t/(p-1)) <= (p-1) K^M omega*(t)",
            (p - 1.0) * cs[i],
            (p - 1.0) * k.powi(m as i32) * cb[i],
            &w,
        );
    }
    tally.samples += conj_grid.len();
    Ok(tally)
}

pub(super) fn trans(ctx: &Ctx) -> Result<Tally> {
    let phi = ctx.chain.base();
    let ch = phi.characteristics();
    let (c0, c1) = (0.5, 2.0);
    let weight = move |s: f64| c0 + (c1 - c0) * (1.0 + (3.0 * s.ln_1p()).sin()) / 2.0;
    let grid = log_grid(1e-4, 1e4, 400);
    let opts = QuadOptions {
        rel_tol: 1e-12,
        ..QuadOptions::default()
    };
    let rows: Vec<Result<(f64, f64, f64)>> = grid
        .par_iter()
        .map(|&t| {
            let u1 = integrate(|s| phi.d2(s) * weight(s), 0.0, t, opts)?.value;
            let u0 = integrate(|s| (t - s) * phi.d2(s) * weight(s), 0.0, t, opts)?.value;
            Ok((u0, u1, phi.d2(t) * weight(t)))
        })
        .collect();
    let (g1, g2) = (ch.gamma1 * c0 / c1, ch.gamma2 * c1 / c0);
    tally_trans(rows, &grid, phi, (c0, c1), (g1, g2))
}

fn tally_trans(
    rows: Vec<Result<(f64, f64, f64)>>,
    grid: &[f64],
    phi: PdNFunction,
    (c0, c1): (f64, f64),
    (g1, g2): (f64, f64),
) -> Result<Tally> {
    let mut tally = Tally::new();
    tally.detail("gamma1_transferred", g1);
    tally.detail("gamma2_transferred", g2);
    for (t, row) in grid.iter().zip(rows) {
        let (u0, u1, u2) = row?;
        let w = [("t", *t)];
        tally.le("c0 phi' <= U'", c0 * phi.d1(*t), u1, &w);
        tally.le("U' <= c1 phi'", u1, c1 * phi.d1(*t), &w);
        tally.le("c0 phi <= U", c0 * phi.value(*t), u0, &w);
        tally.le("U <= c1 phi", u0, c1 * phi.value(*t), &w);
        tally.le("gamma1 c0/c1 U' <= t U''", g1 * u1, t * u2, &w);
        tally.le("t U'' <= gamma2 c1/c0 U'", t * u2, g2 * u1, &w);
    }
    tally.samples += grid.len();
    Ok(tally)
}
