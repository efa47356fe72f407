mod common;

use common::{d2_centred, example1, example2, uniform, SmoothSource};
use mibvp::grid::solver_grid;
use mibvp::oracle::fd_linear;
use mibvp::{boundary_residuals, BoundaryConfig, GridFunction, LinearRhs, LinearSolver, ShiftedOperator};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn solver(c: &BoundaryConfig, k: f64, n: usize) -> LinearSolver {
    let nodes = solver_grid(c, n).unwrap();
    LinearSolver::new(c, &ShiftedOperator::new(k).unwrap(), &nodes).unwrap()
}

fn operator_residual(k: f64, nodes: &[f64], u: &[f64], g: &[f64]) -> f64 {
    let h = nodes[1] - nodes[0];
    d2_centred(u, h)
        .iter()
        .enumerate()
        .map(|(j, d2)| (-d2 - k * u[j + 2] - g[j + 2]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn manufactured_quadratic_is_recovered() {
    // u* = 1 + b x + x^2 meets the left condition; the right one sets c
    let c = example1();
    let b = c.lambda1 * (1.0 + c.xi * c.xi) / (1.0 - c.lambda1 * c.xi);
    let exact = |x: f64| 1.0 + b * x + x * x;
    let shift = (b + 2.0) - c.lambda2 * exact(c.eta);
    assert!((shift + 0.11).abs() < 1e-12);
    for k in [0.49, 1.5] {
        let s = solver(&c, k, 401);
        let g = GridFunction::from_fn(s.nodes(), |x| -2.0 - k * exact(x)).unwrap();
        let (u, du) = s.solve(&LinearRhs::new(g, shift).unwrap()).unwrap();
        for ((x, v), d) in u.nodes.iter().zip(&u.values).zip(&du.values) {
            assert!((v - exact(*x)).abs() < 1e-8, "u({x}) = {v}");
            assert!((d - (b + 2.0 * x)).abs() < 1e-7, "u'({x}) = {d}");
        }
    }
}

#[test]
fn random_sources_meet_equation_and_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (c, k) in [(example1(), 0.49), (example2(), -4.0)] {
        let s = solver(&c, k, 501);
        for _ in 0..4 {
            let src = SmoothSource::random(&mut rng);
            let g = GridFunction::from_fn(s.nodes(), |x| src.eval(x)).unwrap();
            let (u, du) = s.solve(&LinearRhs::new(g.clone(), 0.3).unwrap()).unwrap();
            assert!(operator_residual(k, s.nodes(), &u.values, &g.values) < 1e-4);
            let (r0, r1) = boundary_residuals(&c, &u, &du).unwrap();
            assert!(r0.abs() < 1e-10 && (r1 - 0.3).abs() < 1e-10);
            let fd = fd_linear(&c, k, &g, 0.3).unwrap();
            assert!(u.sup_diff(&fd).unwrap() < 1e-4);
        }
    }
}

#[test]
fn maximum_and_anti_maximum_principles() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pos = solver(&example1(), 0.49, 201);
    let neg = solver(&example2(), -2.0, 201);
    for _ in 0..5 {
        let src = SmoothSource::random(&mut rng);
        let lift = src.nonnegative();
        let shift = rand::Rng::gen_range(&mut rng, 0.0..2.0);
        let g: Vec<f64> = pos.nodes().iter().map(|&x| lift(x)).collect();
        let (u, _) = pos.solve_values(&g, shift);
        assert!(
            u.iter().all(|v| *v <= 1e-10),
            "positive k gave max {}",
            u.iter().cloned().fold(f64::MIN, f64::max)
        );
        let g: Vec<f64> = neg.nodes().iter().map(|&x| lift(x)).collect();
        let (u, _) = neg.solve_values(&g, shift);
        assert!(u.iter().all(|v| *v >= -1e-10));
    }
}

#[test]
fn non_uniform_grids_are_supported() {
    let c = BoundaryConfig::new(0.137, 0.61, 1.0, 0.5).unwrap();
    let s = solver(&c, 1.0, 301);
    // 0.61 is on the lattice, 0.137 is inserted
    assert_eq!(s.nodes().len(), 302);
    let g = vec![1.0; s.nodes().len()];
    let (u, du) = s.solve_values(&g, 0.0);
    let u = GridFunction::new(s.nodes().to_vec(), u).unwrap();
    let du = GridFunction::new(s.nodes().to_vec(), du).unwrap();
    let (r0, r1) = boundary_residuals(&c, &u, &du).unwrap();
    assert!(r0.abs() < 1e-10 && r1.abs() < 1e-10);
    // every coarse node is also a node of the refined grid
    let fine = solver(&c, 1.0, 1201);
    let (uf, _) = fine.solve_values(&vec![1.0; fine.nodes().len()], 0.0);
    let uf = GridFunction::new(fine.nodes().to_vec(), uf).unwrap();
    for (x, v) in u.nodes.iter().zip(&u.values) {
        let i = fine.nodes().iter().position(|y| (y - x).abs() < 1e-12).unwrap();
        assert!((v - uf.values[i]).abs() < 1e-7);
    }
}

#[test]
fn grid_node_counts_are_checked() {
    let s = solver(&example1(), 0.49, 101);
    let other = GridFunction::zeros(&uniform(51));
    assert!(s.solve(&LinearRhs::homogeneous(other)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solution_map_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        c1 in -1.0f64..1.0,
        c2 in -1.0f64..1.0,
        seed in any::<u64>(),
        negative in any::<bool>(),
    ) {
        let (cfg, k) = if negative { (example2(), -2.5) } else { (example1(), 0.6) };
        let s = solver(&cfg, k, 61);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = SmoothSource::random(&mut rng);
        let g = SmoothSource::random(&mut rng);
        let gf: Vec<f64> = s.nodes().iter().map(|&x| f.eval(x)).collect();
        let gg: Vec<f64> = s.nodes().iter().map(|&x| g.eval(x)).collect();
        let mix: Vec<f64> = gf.iter().zip(&gg).map(|(p, q)| a * p + b * q).collect();
        let (u1, d1) = s.solve_values(&gf, c1);
        let (u2, d2) = s.solve_values(&gg, c2);
        let (u, d) = s.solve_values(&mix, a * c1 + b * c2);
        for i in 0..u.len() {
            let scale = 1.0 + u1[i].abs() + u2[i].abs();
            prop_assert!((u[i] - a * u1[i] - b * u2[i]).abs() < 1e-10 * scale);
            prop_assert!((d[i] - a * d1[i] - b * d2[i]).abs() < 1e-9 * (1.0 + d1[i].abs() + d2[i].abs()));
        }
    }

    #[test]
    fn boundary_conditions_hold_for_any_source(seed in any::<u64>(), shift in -2.0f64..2.0) {
        let cfg = example2();
        let s = solver(&cfg, -1.0, 41);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = SmoothSource::random(&mut rng);
        let g = GridFunction::from_fn(s.nodes(), |x| src.eval(x)).unwrap();
        let (u, du) = s.solve(&LinearRhs::new(g, shift).unwrap()).unwrap();
        let (r0, r1) = boundary_residuals(&cfg, &u, &du).unwrap();
        prop_assert!(r0.abs() < 1e-11);
        prop_assert!((r1 - shift).abs() < 1e-11);
    }
}
