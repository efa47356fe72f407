//! The shifted linear problem `-u'' - k u = g`, `u'(0) = λ₁ u(ξ)`,
//! `u'(1) = λ₂ u(η) + c`, solved through the closed-form kernel.
//!
//! The integral `∫ G(x, s) g(s) ds` is taken with Simpson's rule on every
//! grid interval separately. Because `x`, `ξ` and `η` are nodes, each
//! interval lies inside one smooth branch of the kernel; the branch is
//! picked from the interval midpoint and evaluated up to the interval ends.
//! The midpoint value of `g` is cubic Lagrange interpolation from the four
//! nearest nodes.
//!
//! For a fixed grid and kernel the quadrature is linear in `g`, so
//! [`LinearSolver`] stores it as two dense weight matrices (for `u` and
//! `u'`) and each solve is a pair of matrix-vector products.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{boundary_indices, GridFunction};
use crate::kernel::{BoundaryConfig, GreenKernel, ShiftedOperator};

/// Source data of the linear problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearRhs {
    pub g: GridFunction,
    /// Inhomogeneity `c` of the right-end condition.
    pub c_shift: f64,
}

impl LinearRhs {
    pub fn new(g: GridFunction, c_shift: f64) -> Result<Self> {
        if !c_shift.is_finite() {
            return Err(Error::NonFinite("c_shift".into()));
        }
        Ok(LinearRhs { g, c_shift })
    }

    pub fn homogeneous(g: GridFunction) -> Self {
        LinearRhs { g, c_shift: 0.0 }
    }
}

/// Quadrature weights for one `(config, k, grid)` triple.
#[derive(Clone, Debug)]
pub struct LinearSolver {
    kernel: GreenKernel,
    nodes: Vec<f64>,
    // row-major n x n
    w_u: Vec<f64>,
    w_du: Vec<f64>,
    // boundary solution for c = 1
    base_u: Vec<f64>,
    base_du: Vec<f64>,
}

impl LinearSolver {
    pub fn new(config: &BoundaryConfig, op: &ShiftedOperator, nodes: &[f64]) -> Result<Self> {
        boundary_indices(config, nodes)?;
        let kernel = GreenKernel::new(config, op)?;
        let n = nodes.len();
        let interp: Vec<([usize; 4], [f64; 4])> = (0..n - 1).map(|j| midpoint_stencil(nodes, j)).collect();

        let rows: Vec<(Vec<f64>, Vec<f64>)> = nodes
            .par_iter()
            .map(|&x| {
                let mut ru = vec![0.0; n];
                let mut rd = vec![0.0; n];
                for j in 0..n - 1 {
                    let (a, b) = (nodes[j], nodes[j + 1]);
                    let m = 0.5 * (a + b);
                    let w = (b - a) / 6.0;
                    let branch = kernel.branch_at(x, m);
                    let (ga, da) = kernel.eval_branch(branch, x, a);
                    let (gm, dm) = kernel.eval_branch(branch, x, m);
                    let (gb, db) = kernel.eval_branch(branch, x, b);
                    ru[j] += w * ga;
                    rd[j] += w * da;
                    ru[j + 1] += w * gb;
                    rd[j + 1] += w * db;
                    let (idx, coef) = &interp[j];
                    for (&i, &c) in idx.iter().zip(coef) {
                        ru[i] += 4.0 * w * gm * c;
                        rd[i] += 4.0 * w * dm * c;
                    }
                }
                (ru, rd)
            })
            .collect();

        let mut w_u = Vec::with_capacity(n * n);
        let mut w_du = Vec::with_capacity(n * n);
        for (ru, rd) in rows {
            w_u.extend(ru);
            w_du.extend(rd);
        }
        let (base_u, base_du) = nodes.iter().map(|&x| kernel.boundary_term(1.0, x)).unzip();
        Ok(LinearSolver { kernel, nodes: nodes.to_vec(), w_u, w_du, base_u, base_du })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn kernel(&self) -> &GreenKernel {
        &self.kernel
    }

    /// `(u, u')` on the solver grid.
    pub fn solve(&self, rhs: &LinearRhs) -> Result<(GridFunction, GridFunction)> {
        self.check_grid(&rhs.g)?;
        let (u, du) = self.solve_values(&rhs.g.values, rhs.c_shift);
        Ok((
            GridFunction { nodes: self.nodes.clone(), values: u },
            GridFunction { nodes: self.nodes.clone(), values: du },
        ))
    }

    /// Raw-slice variant of [`solve`](Self::solve) for callers that already
    /// hold values on this grid.
    pub fn solve_values(&self, g: &[f64], c_shift: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes.len();
        assert_eq!(g.len(), n, "source length does not match the solver grid");
        let row =
            |w: &[f64], i: usize| -> f64 { w[i * n..(i + 1) * n].iter().zip(g).map(|(a, b)| a * b).sum() };
        let u = (0..n).map(|i| c_shift * self.base_u[i] - row(&self.w_u, i)).collect();
        let du = (0..n).map(|i| c_shift * self.base_du[i] - row(&self.w_du, i)).collect();
        (u, du)
    }

    fn check_grid(&self, g: &GridFunction) -> Result<()> {
        let same = g.nodes.len() == self.nodes.len() && g.nodes.iter().zip(&self.nodes).all(|(a, b)| a == b);
        if same {
            Ok(())
        } else {
            Err(Error::Grid("source is not sampled on the solver grid".into()))
        }
    }
}

/// Four nodes around interval `j` and the cubic Lagrange weights for its
/// midpoint.
fn midpoint_stencil(nodes: &[f64], j: usize) -> ([usize; 4], [f64; 4]) {
    let n = nodes.len();
    let start = j.saturating_sub(1).min(n - 4);
    let idx = [start, start + 1, start + 2, start + 3];
    let m = 0.5 * (nodes[j] + nodes[j + 1]);
    let mut coef = [1.0; 4];
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                coef[a] *= (m - nodes[idx[b]]) / (nodes[idx[a]] - nodes[idx[b]]);
            }
        }
    }
    (idx, coef)
}

/// One-shot solve; builds a [`LinearSolver`] on the grid of `rhs.g`.
pub fn solve_linear(
    config: &BoundaryConfig,
    op: &ShiftedOperator,
    rhs: &LinearRhs,
) -> Result<(GridFunction, GridFunction)> {
    LinearSolver::new(config, op, &rhs.g.nodes)?.solve(rhs)
}

/// `(u'(0) - λ₁ u(ξ), u'(1) - λ₂ u(η))`.
pub fn boundary_residuals(
    config: &BoundaryConfig,
    u: &GridFunction,
    du: &GridFunction,
) -> Result<(f64, f64)> {
    u.check_same_grid(du)?;
    let (ixi, ieta) = boundary_indices(config, &u.nodes)?;
    let n = u.len();
    Ok((du.values[0] - config.lambda1 * u.values[ixi], du.values[n - 1] - config.lambda2 * u.values[ieta]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{second_derivative_5pt, solver_grid};

    fn ex1() -> BoundaryConfig {
        BoundaryConfig::new(0.1, 0.2, 2.0, 3.0).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let c = ex1();
        let nodes = solver_grid(&c, 101).unwrap();
        let op = ShiftedOperator::new(0.49).unwrap();
        let rhs = LinearRhs::homogeneous(GridFunction::zeros(&nodes));
        let (u, du) = solve_linear(&c, &op, &rhs).unwrap();
        assert_eq!(u.sup_norm(), 0.0);
        assert_eq!(du.sup_norm(), 0.0);
    }

    #[test]
    fn midpoint_weights_reproduce_cubics() {
        let nodes: Vec<f64> = [0.0, 0.1, 0.25, 0.3, 0.6, 1.0].to_vec();
        for j in 0..nodes.len() - 1 {
            let (idx, coef) = midpoint_stencil(&nodes, j);
            let m = 0.5 * (nodes[j] + nodes[j + 1]);
            let p = |x: f64| 1.0 - 2.0 * x + 3.0 * x * x - x * x * x;
            let approx: f64 = idx.iter().zip(coef).map(|(&i, c)| c * p(nodes[i])).sum();
            assert!((approx - p(m)).abs() < 1e-14);
        }
    }

    #[test]
    fn satisfies_the_equation_and_boundary_rows() {
        let c = ex1();
        let nodes = solver_grid(&c, 401).unwrap();
        for k in [0.49, -2.0] {
            let op = ShiftedOperator::new(k).unwrap();
            let g = GridFunction::from_fn(&nodes, |x| (3.0 * x).cos() + x).unwrap();
            let rhs = LinearRhs::new(g.clone(), 0.7).unwrap();
            let (u, du) = solve_linear(&c, &op, &rhs).unwrap();
            let d2 = second_derivative_5pt(&u);
            for (j, v) in d2.iter().enumerate() {
                let i = j + 2;
                assert!((-v - k * u.values[i] - g.values[i]).abs() < 1e-5, "node {i}");
            }
            let (r0, r1) = boundary_residuals(&c, &u, &du).unwrap();
            assert!(r0.abs() < 1e-9);
            assert!((r1 - 0.7).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_foreign_grid() {
        let c = ex1();
        let nodes = solver_grid(&c, 51).unwrap();
        let solver = LinearSolver::new(&c, &ShiftedOperator::new(0.49).unwrap(), &nodes).unwrap();
        let other = solver_grid(&c, 61).unwrap();
        let rhs = LinearRhs::homogeneous(GridFunction::zeros(&other));
        assert!(matches!(solver.solve(&rhs), Err(Error::Grid(_))));
        let missing: Vec<f64> = (0..=7).map(|i| i as f64 / 7.0).collect();
        assert!(LinearSolver::new(&c, &ShiftedOperator::new(0.49).unwrap(), &missing).is_err());
    }
}
