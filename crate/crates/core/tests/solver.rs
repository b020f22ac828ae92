//! Solver behaviour on small grids.

mod common;

use pdlab::approx::chain_build;
use pdlab::config::RunConfig;
use pdlab::solver::{
    continuation_sweep, discrete_div, discrete_dsym, sine_profile, solve_parabolic, solve_steady, step_implicit,
    triangle_inner, Field, Forcing, GridSpec, ProblemSpec, SolverTolerances, SteadySpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(grid: GridSpec, seed: u64, scale: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field {
        grid,
        values: (0..grid.nodes())
            .map(|_| [scale * rng.random_range(-1.0..1.0), scale * rng.random_range(-1.0..1.0)])
            .collect(),
    }
}

#[test]
fn summation_by_parts_on_several_grids() {
    for (n, seed) in [(3, 1), (9, 2), (40, 3)] {
        let g = GridSpec::square(n).unwrap();
        let v = random_field(g, seed, 1.0);
        let s = discrete_dsym(&random_field(g, seed + 100, 3.0));
        let lhs = discrete_div(&g, &s).unwrap().inner(&v);
        let rhs = triangle_inner(&g, &s, &discrete_dsym(&v));
        assert!((lhs + rhs).abs() <= 1e-13 * rhs.abs(), "n={n}: {lhs} {rhs}");
    }
}

#[test]
fn steady_linear_problem_matches_direct_solve() {
    let grid = GridSpec::square(24).unwrap();
    let spec = SteadySpec {
        chain: chain_build(2.0, 0.5, &[2.0], &[4.0]).unwrap(),
        grid,
        forcing: Forcing::from_fn("polynomial", |x, y, _| [x * (1.0 - y), 1.0]),
        tols: SolverTolerances::default(),
    };
    let r = solve_steady(&spec).unwrap();
    let zero = Field::zeros(grid);
    let exact = common::p2_direct(&zero, &spec.forcing.sample(grid, 0.0), 0.0);
    let rel = (r.field.dist_sq(&exact) / exact.l2_sq()).sqrt();
    assert!(rel <= 1e-8, "{rel}");
    assert_eq!(r.newton.iterations, 1);
}

#[test]
fn steady_newton_is_superlinear() {
    let grid = GridSpec::square(24).unwrap();
    let spec = SteadySpec {
        chain: RunConfig::default().build_chain(3.0, 1.0).unwrap(),
        grid,
        forcing: Forcing::sine(200.0),
        tols: SolverTolerances::default(),
    };
    let r = solve_steady(&spec).unwrap();
    let res = &r.newton.residuals;
    assert!(res.len() >= 4, "{res:?}");
    for w in res[res.len() - 4..].windows(2) {
        assert!(w[1] < 0.5 * w[0], "{res:?}");
    }
    assert!(r.max_du > 2.0, "the solution should reach the stitched stage");
}

#[test]
fn newton_decreases_energy_and_hessian_is_bounded_below() {
    let grid = GridSpec::square(16).unwrap();
    let chain = RunConfig::default().build_chain(5.0, 0.5).unwrap();
    let tau = 0.05;
    let u_old = random_field(grid, 9, 0.3);
    let f = Forcing::sine(800.0).sample(grid, 0.0);
    let (_, rep) = step_implicit(&chain, &u_old, &f, tau, &SolverTolerances::default()).unwrap();
    assert!(rep.iterations >= 2);
    for w in rep.energies.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
    }
    assert!(rep.min_rayleigh >= grid.node_weight() / tau * (1.0 - 1e-12));
}

#[test]
fn unforced_l2_energy_is_nonincreasing() {
    let grid = GridSpec::square(20).unwrap();
    let spec = ProblemSpec {
        chain: RunConfig::default().build_chain(4.0, 1.0).unwrap(),
        grid,
        t_final: 0.3,
        tau: 0.03,
        forcing: Forcing::zero(),
        u0: Field::from_fn(grid, |x, y| sine_profile(3.0, x, y)),
        tols: SolverTolerances::default(),
    };
    let r = solve_parabolic(&spec).unwrap();
    for w in r.diagnostics.windows(2) {
        assert!(w[1].l2_sq <= w[0].l2_sq);
        assert!(w[1].min_rayleigh >= grid.node_weight() / spec.tau * (1.0 - 1e-12));
    }
    assert!(r.data_norm_sq.is_finite() && r.data_norm_sq > 0.0);
}

#[test]
fn sweep_records_failures_and_continues() {
    let grid = GridSpec::square(8).unwrap();
    let spec = ProblemSpec {
        chain: RunConfig::default().build_chain(5.0, 1.0).unwrap(),
        grid,
        t_final: 0.1,
        tau: 0.05,
        forcing: Forcing::sine(300.0),
        u0: Field::zeros(grid),
        tols: SolverTolerances::default(),
    };
    // A1 = 0.5 is below the admissible minimum and is reported, not fatal.
    let r = continuation_sweep(&spec, &[0.5, 4.0, 8.0], 1.0).unwrap();
    assert!(r.rows[0].error.is_some());
    assert!(r.rows[1].error.is_none() && r.rows[1].diff_prev.is_none());
    assert!(r.rows[2].diff_prev.is_some());
    assert_eq!(r.last_change.len(), 7);
}
