mod common;

use common::{example1, example2};
use mibvp::config::builtin;
use mibvp::grid::solver_grid;
use mibvp::monotone::{run, BracketOrder, NonlinearProblem};
use mibvp::oracle::{fd_linear, fd_nonlinear, fd_nonlinear_with, NewtonOptions};
use mibvp::{BoundaryConfig, Error, GridFunction};

fn fd_on(c: &BoundaryConfig, k: f64, n: usize, shift: f64) -> GridFunction {
    let nodes = solver_grid(c, n).unwrap();
    let g = GridFunction::from_fn(&nodes, |x| x.exp() + (3.0 * x).sin()).unwrap();
    fd_linear(c, k, &g, shift).unwrap()
}

/// Observed order from three nested grids, compared on the coarse nodes.
fn observed_order(c: &BoundaryConfig, k: f64) -> f64 {
    let coarse = fd_on(c, k, 41, 0.5);
    let mid = fd_on(c, k, 81, 0.5);
    let fine = fd_on(c, k, 161, 0.5);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for i in 0..coarse.len() {
        e1 = e1.max((coarse.values[i] - mid.values[2 * i]).abs());
        e2 = e2.max((mid.values[2 * i] - fine.values[4 * i]).abs());
    }
    (e1 / e2).log2()
}

#[test]
fn second_order_convergence() {
    for (c, k) in [(example1(), 0.49), (example2(), -4.0)] {
        let p = observed_order(&c, k);
        assert!((1.8..=2.2).contains(&p), "k = {k}: order {p}");
    }
}

#[test]
fn nonlinear_manufactured_solution() {
    // u* = 1 + b x + x^2 with λ2 chosen so both conditions are homogeneous
    let (xi, eta, l1) = (0.1, 0.2, 2.0);
    let b = l1 * (1.0 + xi * xi) / (1.0 - l1 * xi);
    let exact = |x: f64| 1.0 + b * x + x * x;
    let l2 = (b + 2.0) / exact(eta);
    let c = BoundaryConfig::new(xi, eta, l1, l2).unwrap();
    let ustar = format!("(1 + {b}*x + x^2)");
    let psi = format!("-2 + u^3 - {ustar}^3 + (up - ({b} + 2*x))/4");
    let p = NonlinearProblem::new(
        c,
        &psi,
        &format!("{ustar} + 1"),
        &format!("{ustar} - 1"),
        BracketOrder::Reverse,
    )
    .unwrap();
    let nodes = solver_grid(&c, 101).unwrap();
    let report = fd_nonlinear_with(&p, &nodes, &NewtonOptions::default()).unwrap();
    assert!(report.iterations <= 10, "{} iterations", report.iterations);
    for (x, v) in nodes.iter().zip(&report.solution.values) {
        // the stencils are exact on quadratics
        assert!((v - exact(*x)).abs() < 1e-9, "u({x}) = {v}");
    }
}

#[test]
fn newton_agrees_with_monotone_limits() {
    for name in ["example1", "example2"] {
        let cfg = builtin(name).unwrap();
        let problem = cfg.build().unwrap();
        let trace = run(&problem, cfg.k_value().unwrap(), &cfg.run_options()).unwrap();
        assert!(trace.converged);
        let fd = fd_nonlinear(&problem, &trace.nodes).unwrap();
        for it in [trace.last_lower(), trace.last_upper()] {
            let diff = it.u.iter().zip(&fd.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(diff < 1e-4, "{name}: {diff}");
        }
    }
}

#[test]
fn newton_reports_stagnation() {
    // one Newton step cannot settle a nonlinear problem
    let c = example1();
    let p = NonlinearProblem::new(c, "1 + u^2", "10", "-10", BracketOrder::Reverse).unwrap();
    let nodes = solver_grid(&c, 41).unwrap();
    let opts = NewtonOptions { max_iter: 1, ..NewtonOptions::default() };
    match fd_nonlinear_with(&p, &nodes, &opts) {
        Err(Error::NewtonStagnation { iterations, .. }) => assert_eq!(iterations, 1),
        other => panic!("expected stagnation, got {other:?}"),
    }
}
