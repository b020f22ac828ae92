//! Unit-square grid with zero Dirichlet boundary, split into right
//! triangles. Gradients are constant on each triangle; the divergence is
//! the negative adjoint of the gradient under the lumped nodal inner
//! product, so the discrete system is exactly the gradient of the discrete
//! energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Mat, SymMat};

/// Marks a boundary node in the triangle table.
pub(crate) const BOUNDARY: usize = usize::MAX;

/// `nx * ny` interior nodes of the unit square with mesh width `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

/// One triangle: node indices (or [`BOUNDARY`]) and the gradient of each
/// nodal hat function, in units of `1/h`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Triangle {
    pub nodes: [usize; 3],
    pub grads: [[f64; 2]; 3],
}

impl GridSpec {
    /// `n * n` interior nodes, `h = 1/(n+1)`.
    pub fn square(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Parameter(format!(
                "grid needs at least 3 interior nodes per side, got {n}"
            )));
        }
        Ok(Self {
            nx: n,
            ny: n,
            h: 1.0 / (n + 1) as f64,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.nx >= 3 && self.nx == self.ny && (self.h * (self.nx + 1) as f64 - 1.0).abs() < 1e-12;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "invalid grid {self:?}: need nx = ny >= 3 and h = 1/(nx+1)"
            )))
        }
    }

    pub fn nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn triangles(&self) -> usize {
        2 * (self.nx + 1) * (self.ny + 1)
    }

    /// Area of one triangle.
    pub fn triangle_weight(&self) -> f64 {
        0.5 * self.h * self.h
    }

    /// Lumped mass of one interior node.
    pub fn node_weight(&self) -> f64 {
        self.h * self.h
    }

    /// Index of grid point `(i, j)`, `0 <= i, j <= n+1`, or [`BOUNDARY`].
    pub(crate) fn index(&self, i: usize, j: usize) -> usize {
        if i == 0 || j == 0 || i > self.nx || j > self.ny {
            BOUNDARY
        } else {
            (j - 1) * self.nx + (i - 1)
        }
    }

    /// Coordinates of interior node `k`.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        let i = k % self.nx + 1;
        let j = k / self.nx + 1;
        (i as f64 * self.h, j as f64 * self.h)
    }

    /// Triangles cell by cell, `x` fastest; lower-left then upper-right.
    pub(crate) fn triangle_table(&self) -> Vec<Triangle> {
        let mut out = Vec::with_capacity(self.triangles());
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                out.push(Triangle {
                    nodes: [self.index(i, j), self.index(i + 1, j), self.index(i, j + 1)],
                    grads: [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
                });
                out.push(Triangle {
                    nodes: [self.index(i + 1, j + 1), self.index(i, j + 1), self.index(i + 1, j)],
                    grads: [[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
                });
            }
        }
        out
    }

    /// Centroid of triangle `t` in the order of the triangle table.
    pub fn centroid(&self, t: usize) -> (f64, f64) {
        let cell = t / 2;
        let (i, j) = ((cell % (self.nx + 1)) as f64, (cell / (self.nx + 1)) as f64);
        let off = if t.is_multiple_of(2) { 1.0 / 3.0 } else { 2.0 / 3.0 };
        ((i + off) * self.h, (j + off) * self.h)
    }
}

/// Nodal values of a vector field `u: Ω -> R^2` at interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Vec<[f64; 2]>,
}

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![[0.0; 2]; grid.nodes()],
        }
    }

    /// Samples `f(x, y)` at the interior nodes.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let values = (0..grid.nodes())
            .map(|k| {
                let (x, y) = grid.coords(k);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v[0].is_finite() && v[1].is_finite())
    }

    /// `h^2 sum |u|^2`.
    pub fn l2_sq(&self) -> f64 {
        self.grid.node_weight() * self.values.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>()
    }

    /// `h^2 sum u . v`.
    pub fn inner(&self, other: &Field) -> f64 {
        self.grid.node_weight()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
                .sum::<f64>()
    }

    /// `h^2 sum |u - v|^2`.
    pub fn dist_sq(&self, other: &Field) -> f64 {
        self.grid.node_weight()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
                .sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub(crate) fn node_value(values: &[[f64; 2]], k: usize) -> [f64; 2] {
    if k == BOUNDARY {
        [0.0; 2]
    } else {
        values[k]
    }
}

/// Full gradient `G[c][k] = d u_c / d x_k` on one triangle.
pub(crate) fn triangle_gradient(tri: &Triangle, values: &[[f64; 2]], h: f64) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    for (node, b) in tri.nodes.iter().zip(&tri.grads) {
        let u = node_value(values, *node);
        for c in 0..2 {
            for k in 0..2 {
                g[c][k] += u[c] * b[k];
            }
        }
    }
    for row in g.iter_mut() {
        for x in row.iter_mut() {
            *x /= h;
        }
    }
    g
}

pub(crate) fn sym_of(g: &[[f64; 2]; 2]) -> SymMat {
    SymMat::new2(g[0][0], g[1][1], 0.5 * (g[0][1] + g[1][0]))
}

/// Adds `w * S : D_T(e)` to `out` for every nodal unit vector `e`.
pub(crate) fn scatter(tri: &Triangle, s: &SymMat, w: f64, h: f64, out: &mut [[f64; 2]]) {
    let m = [[s.get(0, 0), s.get(0, 1)], [s.get(1, 0), s.get(1, 1)]];
    for (node, b) in tri.nodes.iter().zip(&tri.grads) {
        if *node == BOUNDARY {
            continue;
        }
        for c in 0..2 {
            out[*node][c] += w * (m[c][0] * b[0] + m[c][1] * b[1]) / h;
        }
    }
}

/// Symmetric gradient on every triangle, in triangle-table order.
pub fn discrete_dsym(field: &Field) -> Vec<SymMat> {
    let g = field.grid;
    g.triangle_table()
        .iter()
        .map(|t| sym_of(&triangle_gradient(t, &field.values, g.h)))
        .collect()
}

/// Full gradient on every triangle.
pub fn discrete_gradient(field: &Field) -> Vec<Mat> {
    let g = field.grid;
    g.triangle_table()
        .iter()
        .map(|t| {
            let m = triangle_gradient(t, &field.values, g.h);
            Mat::from_row_major(2, &[m[0][0], m[0][1], m[1][0], m[1][1]]).expect("2x2")
        })
        .collect()
}

/// Discrete divergence of a triangle-wise symmetric tensor field: the
/// negative adjoint of [`discrete_dsym`], so that
/// `<div_h S, v> + <S, D_h v> = 0` in the nodal and triangle inner products.
pub fn discrete_div(grid: &GridSpec, s: &[SymMat]) -> Result<Field> {
    if s.len() != grid.triangles() {
        return Err(Error::Index {
            requested: s.len(),
            available: grid.triangles(),
        });
    }
    let mut out = vec![[0.0; 2]; grid.nodes()];
    let w = -grid.triangle_weight() / grid.node_weight();
    for (tri, st) in grid.triangle_table().iter().zip(s) {
        scatter(tri, st, w, grid.h, &mut out);
    }
    Ok(Field {
        grid: *grid,
        values: out,
    })
}

/// `sum_T |T| S_T : R_T`.
pub fn triangle_inner(grid: &GridSpec, s: &[SymMat], r: &[SymMat]) -> f64 {
    grid.triangle_weight() * s.iter().zip(r).map(|(a, b)| a.dot(b)).sum::<f64>()
}

/// Averages a triangle-wise symmetric field onto all `(n+2)^2` grid points
/// (boundary included) and returns the P1 gradient of each component on
/// every triangle as `|grad|^2`, summed over components.
pub(crate) fn nodal_average_gradient_sq(grid: &GridSpec, s: &[SymMat]) -> Vec<f64> {
    let (nx, ny, h) = (grid.nx, grid.ny, grid.h);
    let w = nx + 2;
    let mut sum = vec![[0.0; 3]; w * (ny + 2)];
    let mut count = vec![0u32; w * (ny + 2)];
    let corners = |t: usize| -> [(usize, usize); 3] {
        let cell = t / 2;
        let (i, j) = (cell % (nx + 1), cell / (nx + 1));
        if t.is_multiple_of(2) {
            [(i, j), (i + 1, j), (i, j + 1)]
        } else {
            [(i + 1, j + 1), (i, j + 1), (i + 1, j)]
        }
    };
    for (t, st) in s.iter().enumerate() {
        let comp = [st.get(0, 0), st.get(1, 1), st.get(0, 1)];
        for (i, j) in corners(t) {
            let k = j * w + i;
            for c in 0..3 {
                sum[k][c] += comp[c];
            }
            count[k] += 1;
        }
    }
    let avg: Vec<[f64; 3]> = sum
        .iter()
        .zip(&count)
        .map(|(s, &n)| [s[0] / n as f64, s[1] / n as f64, s[2] / n as f64])
        .collect();
    let table = grid.triangle_table();
    (0..s.len())
        .map(|t| {
            let mut g = [[0.0; 2]; 3];
            for ((i, j), b) in corners(t).iter().zip(&table[t].grads) {
                let v = avg[j * w + i];
                for c in 0..3 {
                    g[c][0] += v[c] * b[0] / h;
                    g[c][1] += v[c] * b[1] / h;
                }
            }
            // The off-diagonal component appears twice in the tensor.
            let sq = |r: [f64; 2]| r[0] * r[0] + r[1] * r[1];
            sq(g[0]) + sq(g[1]) + 2.0 * sq(g[2])
        })
        .collect()
}
