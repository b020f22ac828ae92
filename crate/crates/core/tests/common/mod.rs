//! Oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::DVector;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use pdlab::solver::Field;

/// Grid point and hat-function gradient of one triangle corner.
type Corner = ((usize, usize), [f64; 2]);

/// Stiffness of `sum_T |T| |D_T v|^2 / 2` assembled triangle by triangle,
/// independently of the solver's matrix-free operators.
pub fn p2_matrix(n: usize, h: f64, mass: f64) -> CscMatrix<f64> {
    let idx =
        |i: usize, j: usize| -> Option<usize> { (i >= 1 && j >= 1 && i <= n && j <= n).then(|| (j - 1) * n + (i - 1)) };
    let mut coo = CooMatrix::new(2 * n * n, 2 * n * n);
    for k in 0..2 * n * n {
        coo.push(k, k, mass);
    }
    let w = 0.5 * h * h;
    for j in 0..=n {
        for i in 0..=n {
            let tris: [[Corner; 3]; 2] = [
                [
                    ((i, j), [-1.0, -1.0]),
                    ((i + 1, j), [1.0, 0.0]),
                    ((i, j + 1), [0.0, 1.0]),
                ],
                [
                    ((i + 1, j + 1), [1.0, 1.0]),
                    ((i, j + 1), [-1.0, 0.0]),
                    ((i + 1, j), [0.0, -1.0]),
                ],
            ];
            for tri in tris {
                // Rows: D_xx, D_yy, D_xy with weights 1, 1, 2 in the Frobenius product.
                let mut rows: Vec<(usize, [f64; 3])> = Vec::new();
                for ((a, b), g) in tri {
                    if let Some(k) = idx(a, b) {
                        rows.push((2 * k, [g[0] / h, 0.0, 0.5 * g[1] / h]));
                        rows.push((2 * k + 1, [0.0, g[1] / h, 0.5 * g[0] / h]));
                    }
                }
                for (r, br) in &rows {
                    for (c, bc) in &rows {
                        let v = w * (br[0] * bc[0] + br[1] * bc[1] + 2.0 * br[2] * bc[2]);
                        coo.push(*r, *c, v);
                    }
                }
            }
        }
    }
    CscMatrix::from(&coo)
}

/// Minimizer of the `p = 2` step energy by a sparse Cholesky solve of
/// `(h^2 / tau + K) v = h^2 (u_old / tau + f)`; `inv_tau = 0` is steady.
pub fn p2_direct(u_old: &Field, f: &Field, inv_tau: f64) -> Field {
    let grid = u_old.grid;
    let n = grid.nx;
    let h2 = grid.node_weight();
    let k = p2_matrix(n, grid.h, h2 * inv_tau);
    let rhs = DVector::from_iterator(
        2 * n * n,
        u_old
            .values
            .iter()
            .zip(&f.values)
            .flat_map(|(u, g)| [h2 * (u[0] * inv_tau + g[0]), h2 * (u[1] * inv_tau + g[1])]),
    );
    let direct = CscCholesky::factor(&k).expect("SPD").solve(&rhs);
    Field {
        grid,
        values: (0..n * n).map(|i| [direct[2 * i], direct[2 * i + 1]]).collect(),
    }
}

/// Gauss-Legendre rule with `n` nodes on `[a, b]`, composite over `m`
/// panels; nodes by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize, m: usize) -> f64 {
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    let w = (b - a) / m as f64;
    let mut total = 0.0;
    for j in 0..m {
        let (lo, hi) = (a + j as f64 * w, a + (j + 1) as f64 * w);
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        total += r * nodes.iter().map(|(x, wt)| wt * f(c + r * x)).sum::<f64>();
    }
    total
}
