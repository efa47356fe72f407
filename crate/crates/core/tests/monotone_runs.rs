use mibvp::config::builtin;
use mibvp::grid::solver_grid;
use mibvp::monotone::{
    run, run_with, verify_initial_bracket, BracketOrder, DerivativeCheck, IterationTrace, NonlinearProblem,
    RunOptions,
};
use mibvp::{Error, LinearSolver, ShiftedOperator};
use proptest::prelude::*;

/// Recheck ordering and monotonicity from the stored iterates.
fn recheck(trace: &IterationTrace) {
    let slack = 1e-9;
    let (hi, lo) = match trace.ordering {
        BracketOrder::Reverse => (&trace.lower, &trace.upper),
        BracketOrder::Well => (&trace.upper, &trace.lower),
    };
    for n in 0..hi.len() {
        assert!(hi[n].u.iter().zip(&lo[n].u).all(|(a, b)| b <= &(a + slack)), "order at {n}");
        if n > 0 {
            assert!(hi[n].u.iter().zip(&hi[n - 1].u).all(|(a, b)| a <= &(b + slack)), "top rose at {n}");
            assert!(lo[n].u.iter().zip(&lo[n - 1].u).all(|(a, b)| a + slack >= *b), "bottom fell at {n}");
        }
    }
}

#[test]
fn example_one_runs_across_k() {
    let cfg = builtin("example1").unwrap();
    let problem = cfg.build().unwrap();
    for (k, expected) in [(0.49, 21), (1.0, 33), (2.3, 62)] {
        let trace = run(&problem, k, &cfg.run_options()).unwrap();
        assert!(trace.converged, "k = {k}");
        assert_eq!(trace.steps(), expected, "k = {k}");
        assert!(trace.all_flags_hold() && trace.flags_consistent());
        // Nagumo gives no finite bound for this majorant
        assert_eq!(trace.derivative_check, DerivativeCheck::SkippedNagumoFailure);
        recheck(&trace);
    }
}

#[test]
fn example_two_runs_across_k() {
    let cfg = builtin("example2").unwrap();
    let problem = cfg.build().unwrap();
    for (k, expected) in [(-1.0698, 132), (-4.0, 438)] {
        let trace = run(&problem, k, &cfg.run_options()).unwrap();
        assert!(trace.converged, "k = {k}");
        assert_eq!(trace.steps(), expected, "k = {k}");
        assert_eq!(trace.derivative_bound_held, Some(true));
        recheck(&trace);
    }
}

#[test]
fn contraction_speeds_up_near_the_threshold() {
    let cfg = builtin("example2").unwrap();
    let problem = cfg.build().unwrap();
    let opts = RunOptions { max_iter: 3000, ..cfg.run_options() };
    let a = run(&problem, -1.0698, &opts).unwrap().steps();
    let b = run(&problem, -5.0, &opts).unwrap().steps();
    assert!(a < b);
}

#[test]
fn swapped_bracket_is_reported() {
    let cfg = builtin("example1").unwrap();
    let mut p = cfg.build().unwrap();
    std::mem::swap(&mut p.lower0, &mut p.upper0);
    let nodes = solver_grid(&p.config, 101).unwrap();
    let report = verify_initial_bracket(&p, 0.49, &nodes, 1e-9).unwrap();
    assert!(!report.pass);
    assert!(!report.get("ordering").unwrap().pass);
}

#[test]
fn budget_exhaustion_is_not_convergence() {
    let cfg = builtin("example2").unwrap();
    let problem = cfg.build().unwrap();
    let opts = RunOptions { max_iter: 5, ..cfg.run_options() };
    let trace = run(&problem, -4.0, &opts).unwrap();
    assert_eq!(trace.steps(), 5);
    assert!(!trace.converged);
    assert!(trace.all_flags_hold());
}

#[test]
fn divergence_keeps_the_trace() {
    let c = builtin("example1").unwrap().boundary;
    let p = NonlinearProblem::new(c, "50*u + 1", "1", "-1", BracketOrder::Reverse).unwrap();
    match run(&p, 0.49, &RunOptions { grid_n: 51, max_iter: 200, tol: 1e-8 }) {
        Err(Error::Diverged { step, trace, .. }) => {
            assert_eq!(trace.steps(), step);
            assert!(trace.lower.len() == step + 1);
        }
        other => panic!("expected divergence, got {:?}", other.map(|t| t.steps())),
    }
}

#[test]
fn csv_has_one_row_per_node_and_iterate() {
    let cfg = builtin("example1").unwrap();
    let problem = cfg.build().unwrap();
    let trace = run(&problem, 0.49, &RunOptions { grid_n: 51, ..cfg.run_options() }).unwrap();
    let csv = trace.to_csv();
    assert_eq!(csv.lines().next(), Some("iter,x,c_n,d_n"));
    assert_eq!(csv.lines().count(), 1 + 51 * (trace.steps() + 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flags_hold_inside_the_admissible_range(k in 0.48f64..0.86) {
        let cfg = builtin("example1").unwrap();
        let problem = cfg.build().unwrap();
        let nodes = solver_grid(&problem.config, 81).unwrap();
        let solver = LinearSolver::new(&problem.config, &ShiftedOperator::new(k).unwrap(), &nodes).unwrap();
        let trace = run_with(&problem, &solver, &RunOptions { grid_n: 81, max_iter: 8, tol: 1e-8 }).unwrap();
        prop_assert!(trace.all_flags_hold());
        prop_assert!(trace.flags_consistent());
        prop_assert!(trace.gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
