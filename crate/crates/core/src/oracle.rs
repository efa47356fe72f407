//! Second-order finite-difference reference solvers, independent of the
//! kernel pipeline.
//!
//! Interior rows are the usual three-point `-u''` stencil; the two boundary
//! rows use three-point one-sided differences for `u'(0)` and `u'(1)` and
//! couple to the interior unknowns at ξ and η. The system is therefore
//! tridiagonal except for those two rows, and is solved by eliminating the
//! interior block with the Thomas algorithm and closing a 2 × 2 system for
//! `u_0` and `u_N`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{boundary_indices, uniform_spacing, GridFunction};
use crate::kernel::BoundaryConfig;
use crate::monotone::NonlinearProblem;

/// A discretized four-point problem: tridiagonal interior rows plus two
/// sparse boundary rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdSystem {
    pub n: usize,
    pub h: f64,
    /// Interior row `i` (1 ≤ i ≤ n-2) reads
    /// `sub[i] u_{i-1} + diag[i] u_i + sup[i] u_{i+1} = rhs[i]`;
    /// entries 0 and n-1 are unused.
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    /// Rows 0 and n-1 as `(column, coefficient)` lists.
    pub first_row: Vec<(usize, f64)>,
    pub last_row: Vec<(usize, f64)>,
    pub rhs: Vec<f64>,
}

impl FdSystem {
    /// Boundary rows of `u'(0) - λ₁u(ξ) = 0` and `u'(1) - λ₂u(η) = c`.
    fn boundary_rows(
        config: &BoundaryConfig,
        n: usize,
        h: f64,
        ixi: usize,
        ieta: usize,
    ) -> [Vec<(usize, f64)>; 2] {
        let m = n - 1;
        let s = 1.0 / (2.0 * h);
        [
            vec![(0, -3.0 * s), (1, 4.0 * s), (2, -s), (ixi, -config.lambda1)],
            vec![(m, 3.0 * s), (m - 1, -4.0 * s), (m - 2, s), (ieta, -config.lambda2)],
        ]
    }

    /// Solves the system. A vanishing pivot is reported with its row.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let n = self.n;
        let m = n - 1;
        let interior = m - 1;
        // the interior block with u_0 and u_N moved to the right-hand side:
        // u_int = p + u_0 e + u_N f
        let mut p_rhs: Vec<f64> = self.rhs[1..m].to_vec();
        let mut e_rhs = vec![0.0; interior];
        let mut f_rhs = vec![0.0; interior];
        e_rhs[0] = -self.sub[1];
        f_rhs[interior - 1] = -self.sup[m - 1];
        thomas(
            &self.sub[1..m],
            &self.diag[1..m],
            &self.sup[1..m],
            &mut [&mut p_rhs, &mut e_rhs, &mut f_rhs],
        )?;

        let full = |v: &[f64], a: f64, b: f64| -> Vec<f64> {
            let mut out = Vec::with_capacity(n);
            out.push(a);
            out.extend_from_slice(v);
            out.push(b);
            out
        };
        let p = full(&p_rhs, 0.0, 0.0);
        let e = full(&e_rhs, 1.0, 0.0);
        let f = full(&f_rhs, 0.0, 1.0);
        let apply = |row: &[(usize, f64)], v: &[f64]| row.iter().map(|&(j, c)| c * v[j]).sum::<f64>();

        let (a11, a12) = (apply(&self.first_row, &e), apply(&self.first_row, &f));
        let (a21, a22) = (apply(&self.last_row, &e), apply(&self.last_row, &f));
        let b1 = self.rhs[0] - apply(&self.first_row, &p);
        let b2 = self.rhs[m] - apply(&self.last_row, &p);
        let det = a11 * a22 - a12 * a21;
        let scale = (a11 * a22).abs() + (a12 * a21).abs();
        if !(det.abs() > 1e-10 * scale) {
            let pivot = if a11.abs() >= a21.abs() { m } else { 0 };
            return Err(Error::Singular { pivot });
        }
        let u0 = (b1 * a22 - a12 * b2) / det;
        let un = (a11 * b2 - a21 * b1) / det;
        Ok((0..n).map(|i| p[i] + u0 * e[i] + un * f[i]).collect())
    }
}

/// Thomas elimination of a tridiagonal block for several right-hand sides.
/// `sub[0]` and `sup[last]` are ignored.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [&mut Vec<f64>]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        if i > 0 {
            beta = diag[i] - sub[i] * c[i - 1];
        }
        if !(beta.abs() > 1e-14 * scale) {
            return Err(Error::Singular { pivot: i + 1 });
        }
        if i + 1 < n {
            c[i] = sup[i] / beta;
        }
        for r in rhs.iter_mut() {
            let prev = if i > 0 { r[i - 1] } else { 0.0 };
            r[i] = (r[i] - if i > 0 { sub[i] * prev } else { 0.0 }) / beta;
        }
    }
    for i in (0..n - 1).rev() {
        for r in rhs.iter_mut() {
            r[i] -= c[i] * r[i + 1];
        }
    }
    Ok(())
}

fn fd_grid(config: &BoundaryConfig, nodes: &[f64]) -> Result<(f64, usize, usize)> {
    let (ixi, ieta) = boundary_indices(config, nodes)?;
    let h = uniform_spacing(nodes)
        .ok_or_else(|| Error::Grid("finite-difference oracle needs a uniform grid".into()))?;
    Ok((h, ixi, ieta))
}

/// Builds the discretization of `-u'' - k u = g` with right-end constant
/// `c_shift`.
pub fn fd_system(config: &BoundaryConfig, k: f64, g: &GridFunction, c_shift: f64) -> Result<FdSystem> {
    let (h, ixi, ieta) = fd_grid(config, &g.nodes)?;
    let n = g.len();
    let h2 = h * h;
    let mut sys = FdSystem {
        n,
        h,
        sub: vec![-1.0 / h2; n],
        diag: vec![2.0 / h2 - k; n],
        sup: vec![-1.0 / h2; n],
        first_row: Vec::new(),
        last_row: Vec::new(),
        rhs: g.values.clone(),
    };
    let [first, last] = FdSystem::boundary_rows(config, n, h, ixi, ieta);
    sys.first_row = first;
    sys.last_row = last;
    sys.rhs[0] = 0.0;
    sys.rhs[n - 1] = c_shift;
    Ok(sys)
}

/// Second-order solution of the shifted linear problem on the grid of `g`.
pub fn fd_linear(config: &BoundaryConfig, k: f64, g: &GridFunction, c_shift: f64) -> Result<GridFunction> {
    let values = fd_system(config, k, g, c_shift)?.solve()?;
    GridFunction::new(g.nodes.clone(), values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Smallest damping factor before giving up.
    pub min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 60, tol: 1e-10, min_step: 2f64.powi(-20) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NewtonReport {
    pub solution: GridFunction,
    pub iterations: usize,
    pub residual: f64,
    /// Residual level accepted as converged (tol raised to the rounding
    /// floor of the second difference).
    pub accepted: f64,
}

/// Damped Newton iteration on the finite-difference equations of the
/// nonlinear problem, started from the midpoint of the initial functions.
pub fn fd_nonlinear(problem: &NonlinearProblem, nodes: &[f64]) -> Result<GridFunction> {
    Ok(fd_nonlinear_with(problem, nodes, &NewtonOptions::default())?.solution)
}

pub fn fd_nonlinear_with(
    problem: &NonlinearProblem,
    nodes: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    let config = &problem.config;
    let (h, ixi, ieta) = fd_grid(config, nodes)?;
    let n = nodes.len();
    let m = n - 1;
    let h2 = h * h;
    let [first, last] = FdSystem::boundary_rows(config, n, h, ixi, ieta);

    let bracket: Vec<(f64, f64)> = nodes.iter().map(|&x| problem.bracket_at(x)).collect();
    let width = bracket.iter().fold(0.0f64, |w, (lo, hi)| w.max(hi - lo));
    let inside = |u: &[f64]| {
        u.iter().zip(&bracket).all(|(v, (lo, hi))| {
            let mid = 0.5 * (lo + hi);
            (v - mid).abs() <= 5.0 * width.max(1e-12)
        })
    };

    let residual = |u: &[f64]| -> Result<Vec<f64>> {
        let mut r = vec![0.0; n];
        for i in 1..m {
            let up = (u[i + 1] - u[i - 1]) / (2.0 * h);
            r[i] = -(u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2 - problem.psi.eval(nodes[i], u[i], up);
        }
        r[0] = first.iter().map(|&(j, c)| c * u[j]).sum();
        r[m] = last.iter().map(|&(j, c)| c * u[j]).sum();
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("finite-difference residual".into()));
        }
        Ok(r)
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let mut u: Vec<f64> = bracket.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let mut r = residual(&u)?;
    let mut rn = norm(&r);
    for iter in 0..=opts.max_iter {
        let mut sys = FdSystem {
            n,
            h,
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
            first_row: first.clone(),
            last_row: last.clone(),
            rhs: r.iter().map(|v| -v).collect(),
        };
        for i in 1..m {
            let up = (u[i + 1] - u[i - 1]) / (2.0 * h);
            let (pu, pp) = problem.psi.partials(nodes[i], u[i], up);
            sys.sub[i] = -1.0 / h2 + pp / (2.0 * h);
            sys.diag[i] = 2.0 / h2 - pu;
            sys.sup[i] = -1.0 / h2 - pp / (2.0 * h);
        }
        // factor before accepting so a singular Jacobian is never hidden
        let delta = sys.solve()?;
        let scale = u.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let accepted = opts.tol.max(64.0 * f64::EPSILON * scale / h2);
        if rn <= accepted {
            let solution = GridFunction::new(nodes.to_vec(), u)?;
            return Ok(NewtonReport { solution, iterations: iter, residual: rn, accepted });
        }
        if iter == opts.max_iter {
            break;
        }

        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            if !inside(&trial) {
                if t * 0.5 < opts.min_step {
                    return Err(Error::NewtonEscaped { iteration: iter + 1 });
                }
            } else if let Ok(tr) = residual(&trial) {
                let tn = norm(&tr);
                if tn <= (1.0 - 1e-4 * t) * rn {
                    u = trial;
                    r = tr;
                    rn = tn;
                    break;
                }
            }
            t *= 0.5;
            if t < opts.min_step {
                return Err(Error::NewtonStagnation { iterations: iter + 1, residual: rn });
            }
        }
    }
    Err(Error::NewtonStagnation { iterations: opts.max_iter, residual: rn })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::solver_grid;
    use crate::monotone::BracketOrder;

    #[test]
    fn zero_data_gives_zero() {
        let c = BoundaryConfig::new(0.1, 0.2, 2.0, 3.0).unwrap();
        let nodes = solver_grid(&c, 101).unwrap();
        let u = fd_linear(&c, 0.49, &GridFunction::zeros(&nodes), 0.0).unwrap();
        assert_eq!(u.sup_norm(), 0.0);
    }

    #[test]
    fn thomas_matches_dense_solve() {
        // 4x4 diagonally dominant system
        let sub = [0.0, 1.0, -2.0, 0.5];
        let diag = [4.0, 5.0, 6.0, 3.0];
        let sup = [1.0, -1.0, 2.0, 0.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b: Vec<f64> = (0..4)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += sub[i] * x[i - 1];
                }
                if i < 3 {
                    v += sup[i] * x[i + 1];
                }
                v
            })
            .collect();
        thomas(&sub, &diag, &sup, &mut [&mut b]).unwrap();
        for (a, e) in b.iter().zip(x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_for_quadratics() {
        // both stencils are exact on quadratics
        let c = BoundaryConfig::new(0.1, 0.2, 2.0, 3.0).unwrap();
        let nodes = solver_grid(&c, 21).unwrap();
        let k = 0.49;
        let b = (2.0 * (1.0 + 0.01)) / (1.0 - 2.0 * 0.1);
        let exact = |x: f64| 1.0 + b * x + x * x;
        let g = GridFunction::from_fn(&nodes, |x| -2.0 - k * exact(x)).unwrap();
        let cs = (b + 2.0) - 3.0 * exact(0.2);
        let u = fd_linear(&c, k, &g, cs).unwrap();
        for (x, v) in u.nodes.iter().zip(&u.values) {
            assert!((v - exact(*x)).abs() < 1e-10, "{x}: {v} vs {}", exact(*x));
        }
    }

    #[test]
    fn neumann_degeneracy_is_singular() {
        let c = BoundaryConfig::new(0.3, 0.6, 0.0, 0.0).unwrap();
        let p = NonlinearProblem::new(c, "0", "1", "-1", BracketOrder::Reverse).unwrap();
        let nodes = solver_grid(&c, 51).unwrap();
        assert!(matches!(fd_nonlinear(&p, &nodes), Err(Error::Singular { .. })));
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let c = BoundaryConfig::new(0.123, 0.5, 1.0, 1.0).unwrap();
        let nodes = solver_grid(&c, 11).unwrap();
        assert!(matches!(fd_linear(&c, 0.5, &GridFunction::zeros(&nodes), 0.0), Err(Error::Grid(_))));
    }
}
