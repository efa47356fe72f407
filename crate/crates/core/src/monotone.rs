//! Lower/upper sequences of the quasilinearized iteration
//!
//! ```text
//! -c_{n+1}'' - k c_{n+1} = ψ(x, c_n, c_n') - k c_n
//! ```
//!
//! with homogeneous four-point conditions, and the same for `d_n`. Each
//! step is one application of the linear solver, so a run reuses a single
//! [`LinearSolver`] for all iterates of both sequences.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::admissibility::{nagumo_bound, Condition, LipschitzData, NagumoVerdict};
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr, Var, Vars};
use crate::grid::{boundary_indices, second_derivative_5pt, solver_grid, GridFunction};
use crate::kernel::{BoundaryConfig, ShiftedOperator};
use crate::linear_bvp::LinearSolver;

/// Slack for pointwise monotonicity and ordering comparisons.
pub const ORDER_SLACK: f64 = 1e-9;

/// A closed-form function of `x` with its first two derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedForm {
    text: String,
    expr: Expr,
    d1: Expr,
    d2: Expr,
}

impl ClosedForm {
    pub fn parse(text: &str) -> Result<Self> {
        let expr = parse_expression(text)?;
        if let Some(v) = expr.disallowed_var(&[Var::X]) {
            return Err(Error::Config(format!("`{text}` may only depend on x, found `{}`", v.name())));
        }
        let d1 = expr.derivative(Var::X);
        let d2 = d1.derivative(Var::X);
        Ok(ClosedForm { text: text.to_string(), expr, d1, d2 })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn value(&self, x: f64) -> f64 {
        self.expr.eval(&Vars::x(x))
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.d1.eval(&Vars::x(x))
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.d2.eval(&Vars::x(x))
    }

    pub fn sample(&self, nodes: &[f64]) -> Result<Iterate> {
        let u: Vec<f64> = nodes.iter().map(|&x| self.value(x)).collect();
        let du: Vec<f64> = nodes.iter().map(|&x| self.d1(x)).collect();
        if u.iter().chain(&du).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("closed form `{}`", self.text)));
        }
        Ok(Iterate { u, du })
    }
}

/// The nonlinear source ψ(x, u, u') with its symbolic partials.
#[derive(Clone, Debug, PartialEq)]
pub struct Source {
    text: String,
    expr: Expr,
    du: Expr,
    dup: Expr,
}

impl Source {
    pub fn parse(text: &str) -> Result<Self> {
        let expr = parse_expression(text)?;
        if let Some(v) = expr.disallowed_var(&[Var::X, Var::U, Var::Up]) {
            return Err(Error::Config(format!("psi may only depend on x, u, up, found `{}`", v.name())));
        }
        let du = expr.derivative(Var::U);
        let dup = expr.derivative(Var::Up);
        Ok(Source { text: text.to_string(), expr, du, dup })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn eval(&self, x: f64, u: f64, up: f64) -> f64 {
        self.expr.eval(&Vars::xuup(x, u, up))
    }

    /// `(∂ψ/∂u, ∂ψ/∂u')`.
    pub fn partials(&self, x: f64, u: f64, up: f64) -> (f64, f64) {
        let v = Vars::xuup(x, u, up);
        (self.du.eval(&v), self.dup.eval(&v))
    }
}

/// Nagumo majorant φ(s) of |ψ| in terms of |u'|.
#[derive(Clone, Debug, PartialEq)]
pub enum Majorant {
    Expr(Expr),
    /// Sampled sup of |ψ| over the bracket with |u'| ≤ s.
    Auto,
}

/// Which of the two initial functions lies on top.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BracketOrder {
    /// `c ≥ d`, used with `k > 0`.
    Reverse,
    /// `c ≤ d`, used with `k < 0`.
    Well,
}

#[derive(Clone, Debug)]
pub struct NonlinearProblem {
    pub config: BoundaryConfig,
    pub psi: Source,
    pub lower0: ClosedForm,
    pub upper0: ClosedForm,
    pub ordering: BracketOrder,
    pub lipschitz: Option<LipschitzData>,
    pub nagumo_phi: Option<Majorant>,
    /// Bound on |u'| over the bracket, if known.
    pub derivative_bound: Option<f64>,
}

impl NonlinearProblem {
    pub fn new(
        config: BoundaryConfig,
        psi: &str,
        lower0: &str,
        upper0: &str,
        ordering: BracketOrder,
    ) -> Result<Self> {
        config.validate()?;
        Ok(NonlinearProblem {
            config,
            psi: Source::parse(psi)?,
            lower0: ClosedForm::parse(lower0)?,
            upper0: ClosedForm::parse(upper0)?,
            ordering,
            lipschitz: None,
            nagumo_phi: None,
            derivative_bound: None,
        })
    }

    /// Pointwise `(min(c, d), max(c, d))` of the initial functions.
    pub fn bracket_at(&self, x: f64) -> (f64, f64) {
        let (c, d) = (self.lower0.value(x), self.upper0.value(x));
        (c.min(d), c.max(d))
    }

    /// Sup-norm of `-u'' - ψ(x, u, u')` over the nodes where the 5-point
    /// second difference is available.
    pub fn residual(&self, nodes: &[f64], it: &Iterate) -> Result<f64> {
        let u = GridFunction::new(nodes.to_vec(), it.u.clone())?;
        let d2 = second_derivative_5pt(&u);
        let mut worst: f64 = 0.0;
        for (j, v) in d2.iter().enumerate() {
            let i = j + 2;
            let r = -v - self.psi.eval(nodes[i], it.u[i], it.du[i]);
            if !r.is_finite() {
                return Err(Error::NonFinite(format!("nonlinear residual at x = {}", nodes[i])));
            }
            worst = worst.max(r.abs());
        }
        Ok(worst)
    }

    /// `max(|u'(0) - λ₁u(ξ)|, |u'(1) - λ₂u(η)|)`.
    pub fn boundary_residual(&self, nodes: &[f64], it: &Iterate) -> Result<f64> {
        let (ixi, ieta) = boundary_indices(&self.config, nodes)?;
        let n = nodes.len();
        let r0 = it.du[0] - self.config.lambda1 * it.u[ixi];
        let r1 = it.du[n - 1] - self.config.lambda2 * it.u[ieta];
        Ok(r0.abs().max(r1.abs()))
    }
}

/// One iterate: values and derivative on the solver grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl Iterate {
    pub fn sup_diff(&self, other: &Iterate) -> f64 {
        self.u.iter().zip(&other.u).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_derivative(&self) -> f64 {
        self.du.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One step of the iteration: solve with `g = ψ(x, u, u') - k u`.
pub fn iterate_once(problem: &NonlinearProblem, solver: &LinearSolver, current: &Iterate) -> Result<Iterate> {
    let k = solver.kernel().operator().k();
    let nodes = solver.nodes();
    if current.u.len() != nodes.len() || current.du.len() != nodes.len() {
        return Err(Error::Grid("iterate is not sampled on the solver grid".into()));
    }
    let mut g = Vec::with_capacity(nodes.len());
    for (i, &x) in nodes.iter().enumerate() {
        let v = problem.psi.eval(x, current.u[i], current.du[i]) - k * current.u[i];
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "psi at x = {x}, u = {}, up = {}",
                current.u[i], current.du[i]
            )));
        }
        g.push(v);
    }
    let (u, du) = solver.solve_values(&g, 0.0);
    Ok(Iterate { u, du })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub grid_n: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { grid_n: 501, max_iter: 200, tol: 1e-8 }
    }
}

/// Full record of a run. Iterate lists start with the initial functions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationTrace {
    pub k: f64,
    pub ordering: BracketOrder,
    pub tol: f64,
    pub nodes: Vec<f64>,
    pub lower: Vec<Iterate>,
    pub upper: Vec<Iterate>,
    /// sup|c_n - d_n| for every stored n.
    pub gaps: Vec<f64>,
    /// sup|c_{n+1} - c_n| and sup|d_{n+1} - d_n| per step.
    pub step_moves_lower: Vec<f64>,
    pub step_moves_upper: Vec<f64>,
    pub monotone_lower: Vec<bool>,
    pub monotone_upper: Vec<bool>,
    /// Ordering of `(c_n, d_n)` for every stored n.
    pub ordered: Vec<bool>,
    /// Nagumo `P` the iterates were checked against.
    pub derivative_bound: Option<f64>,
    pub derivative_check: DerivativeCheck,
    /// `None` unless the check ran.
    pub derivative_bound_held: Option<bool>,
    /// Largest sup|u'| over the computed iterates.
    pub max_derivative: f64,
    pub final_residual: f64,
    pub boundary_residual: f64,
    pub converged: bool,
}

/// Whether the iterates were checked against the Nagumo bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeCheck {
    /// No Nagumo majorant on the problem.
    NotRequested,
    /// The majorant gives no finite bound.
    SkippedNagumoFailure,
    Checked,
}

/// Flags recomputed from a trace's iterates.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceFlags {
    pub monotone_lower: Vec<bool>,
    pub monotone_upper: Vec<bool>,
    pub ordered: Vec<bool>,
}

fn at_most(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x <= *y + ORDER_SLACK)
}

impl IterationTrace {
    fn empty(nodes: Vec<f64>, k: f64, ordering: BracketOrder, tol: f64) -> Self {
        IterationTrace {
            k,
            ordering,
            tol,
            nodes,
            lower: Vec::new(),
            upper: Vec::new(),
            gaps: Vec::new(),
            step_moves_lower: Vec::new(),
            step_moves_upper: Vec::new(),
            monotone_lower: Vec::new(),
            monotone_upper: Vec::new(),
            ordered: Vec::new(),
            derivative_bound: None,
            derivative_check: DerivativeCheck::NotRequested,
            derivative_bound_held: None,
            max_derivative: 0.0,
            final_residual: f64::NAN,
            boundary_residual: f64::NAN,
            converged: false,
        }
    }

    pub fn steps(&self) -> usize {
        self.lower.len().saturating_sub(1)
    }

    pub fn all_flags_hold(&self) -> bool {
        self.monotone_lower.iter().chain(&self.monotone_upper).chain(&self.ordered).all(|f| *f)
    }

    pub fn last_lower(&self) -> &Iterate {
        self.lower.last().expect("trace holds the initial iterate")
    }

    pub fn last_upper(&self) -> &Iterate {
        self.upper.last().expect("trace holds the initial iterate")
    }

    fn order_holds(&self, c: &Iterate, d: &Iterate) -> bool {
        match self.ordering {
            BracketOrder::Reverse => at_most(&d.u, &c.u),
            BracketOrder::Well => at_most(&c.u, &d.u),
        }
    }

    fn push(&mut self, c: Iterate, d: Iterate) {
        if let (Some(pc), Some(pd)) = (self.lower.last(), self.upper.last()) {
            self.step_moves_lower.push(c.sup_diff(pc));
            self.step_moves_upper.push(d.sup_diff(pd));
            let (ml, mu) = match self.ordering {
                BracketOrder::Reverse => (at_most(&c.u, &pc.u), at_most(&pd.u, &d.u)),
                BracketOrder::Well => (at_most(&pc.u, &c.u), at_most(&d.u, &pd.u)),
            };
            self.monotone_lower.push(ml);
            self.monotone_upper.push(mu);
        }
        self.gaps.push(c.sup_diff(&d));
        self.ordered.push(self.order_holds(&c, &d));
        self.lower.push(c);
        self.upper.push(d);
    }

    /// Recomputes every flag from the stored iterates.
    pub fn recompute_flags(&self) -> TraceFlags {
        let mut fresh = IterationTrace::empty(self.nodes.clone(), self.k, self.ordering, self.tol);
        for (c, d) in self.lower.iter().zip(&self.upper) {
            fresh.push(c.clone(), d.clone());
        }
        TraceFlags {
            monotone_lower: fresh.monotone_lower,
            monotone_upper: fresh.monotone_upper,
            ordered: fresh.ordered,
        }
    }

    pub fn flags_consistent(&self) -> bool {
        let f = self.recompute_flags();
        f.monotone_lower == self.monotone_lower
            && f.monotone_upper == self.monotone_upper
            && f.ordered == self.ordered
    }

    /// Long-format CSV with columns `iter,x,c_n,d_n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,x,c_n,d_n\n");
        for (n, (c, d)) in self.lower.iter().zip(&self.upper).enumerate() {
            for (i, x) in self.nodes.iter().enumerate() {
                let _ = writeln!(out, "{n},{x},{},{}", c.u[i], d.u[i]);
            }
        }
        out
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            k: self.k,
            ordering: self.ordering,
            tol: self.tol,
            grid_n: self.nodes.len(),
            iterations: self.steps(),
            converged: self.converged,
            all_monotone_lower: self.monotone_lower.iter().all(|f| *f),
            all_monotone_upper: self.monotone_upper.iter().all(|f| *f),
            all_ordered: self.ordered.iter().all(|f| *f),
            final_gap: self.gaps.last().copied().unwrap_or(f64::NAN),
            final_move_lower: self.step_moves_lower.last().copied().unwrap_or(f64::NAN),
            final_move_upper: self.step_moves_upper.last().copied().unwrap_or(f64::NAN),
            final_residual: self.final_residual,
            boundary_residual: self.boundary_residual,
            derivative_bound: self.derivative_bound,
            derivative_check: self.derivative_check,
            derivative_bound_held: self.derivative_bound_held,
            max_derivative: self.max_derivative,
            gaps: self.gaps.clone(),
            monotone_lower: self.monotone_lower.clone(),
            monotone_upper: self.monotone_upper.clone(),
            ordered: self.ordered.clone(),
        }
    }
}

/// JSON-friendly digest of a trace, without the iterates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceSummary {
    pub k: f64,
    pub ordering: BracketOrder,
    pub tol: f64,
    pub grid_n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub all_monotone_lower: bool,
    pub all_monotone_upper: bool,
    pub all_ordered: bool,
    pub final_gap: f64,
    pub final_move_lower: f64,
    pub final_move_upper: f64,
    pub final_residual: f64,
    pub boundary_residual: f64,
    pub derivative_bound: Option<f64>,
    pub derivative_check: DerivativeCheck,
    pub derivative_bound_held: Option<bool>,
    pub max_derivative: f64,
    pub gaps: Vec<f64>,
    pub monotone_lower: Vec<bool>,
    pub monotone_upper: Vec<bool>,
    pub ordered: Vec<bool>,
}

/// Runs both sequences from the initial functions until both step moves
/// drop to `tol` or `max_iter` steps have been taken.
pub fn run(problem: &NonlinearProblem, k: f64, opts: &RunOptions) -> Result<IterationTrace> {
    if opts.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", opts.tol)));
    }
    let op = ShiftedOperator::new(k)?;
    let nodes = solver_grid(&problem.config, opts.grid_n)?;
    let solver = LinearSolver::new(&problem.config, &op, &nodes)?;
    run_with(problem, &solver, opts)
}

/// [`run`] with a prebuilt solver; `opts.grid_n` is ignored.
pub fn run_with(
    problem: &NonlinearProblem,
    solver: &LinearSolver,
    opts: &RunOptions,
) -> Result<IterationTrace> {
    let nodes = solver.nodes().to_vec();
    let k = solver.kernel().operator().k();
    let c0 = problem.lower0.sample(&nodes)?;
    let d0 = problem.upper0.sample(&nodes)?;
    let limit = 10.0 * c0.sup_norm().max(d0.sup_norm());

    let mut trace = IterationTrace::empty(nodes.clone(), k, problem.ordering, opts.tol);
    if problem.nagumo_phi.is_some() {
        match nagumo_bound(problem)?.verdict {
            NagumoVerdict::Bound { p } => {
                trace.derivative_bound = Some(p);
                trace.derivative_check = DerivativeCheck::Checked;
            }
            NagumoVerdict::Failure { .. } => {
                trace.derivative_check = DerivativeCheck::SkippedNagumoFailure;
            }
        }
    }
    trace.push(c0, d0);

    for step in 1..=opts.max_iter {
        let (c, d) = rayon::join(
            || iterate_once(problem, solver, trace.last_lower()),
            || iterate_once(problem, solver, trace.last_upper()),
        );
        let (c, d) = (c?, d?);
        let sup = c.sup_norm().max(d.sup_norm());
        trace.push(c, d);
        if !(sup <= limit) {
            return Err(Error::Diverged { step, sup, limit, trace: Box::new(trace) });
        }
        let ml = *trace.step_moves_lower.last().unwrap();
        let mu = *trace.step_moves_upper.last().unwrap();
        if ml <= opts.tol && mu <= opts.tol {
            break;
        }
    }

    let (c, d) = (trace.last_lower(), trace.last_upper());
    let residual = problem.residual(&nodes, c)?.max(problem.residual(&nodes, d)?);
    let boundary = problem.boundary_residual(&nodes, c)?.max(problem.boundary_residual(&nodes, d)?);
    trace.final_residual = residual;
    trace.boundary_residual = boundary;
    trace.max_derivative = trace
        .lower
        .iter()
        .skip(1)
        .chain(trace.upper.iter().skip(1))
        .fold(0.0f64, |m, it| m.max(it.sup_derivative()));
    if let Some(p) = trace.derivative_bound {
        trace.derivative_bound_held = Some(trace.max_derivative <= p + 1e-6);
    }
    let settled = trace.step_moves_lower.last().is_some_and(|m| *m <= opts.tol)
        && trace.step_moves_upper.last().is_some_and(|m| *m <= opts.tol);
    trace.converged =
        settled && trace.final_residual <= 10.0 * opts.tol && trace.boundary_residual <= opts.tol;
    Ok(trace)
}

/// Checks of the initial functions as lower and upper solutions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BracketReport {
    pub conditions: Vec<Condition>,
    pub pass: bool,
}

impl BracketReport {
    pub fn get(&self, id: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

/// Lower/upper solution inequalities, ordering and the cross condition
/// `ψ(x,d,d') - ψ(x,c,c') - k(d - c) ≥ 0`, each reported with its worst
/// margin (positive means satisfied) over `nodes`. Equalities and
/// inequalities are accepted within `tol`.
pub fn verify_initial_bracket(
    problem: &NonlinearProblem,
    k: f64,
    nodes: &[f64],
    tol: f64,
) -> Result<BracketReport> {
    let cfg = &problem.config;
    let (ixi, ieta) = boundary_indices(cfg, nodes)?;
    let (c, d) = (&problem.lower0, &problem.upper0);
    let n = nodes.len();
    let interior = &nodes[1..n - 1];
    let psi = |f: &ClosedForm, x: f64| problem.psi.eval(x, f.value(x), f.d1(x));
    let worst = |vals: &mut dyn Iterator<Item = f64>| vals.fold(f64::INFINITY, |m, v| m.min(v));

    let mut conditions = Vec::new();
    let mut add = |id: &str, value: f64, margin: f64| {
        conditions.push(Condition::new(id, value, margin, margin >= -tol));
    };

    // -c'' <= ψ(x, c, c')
    let m = worst(&mut interior.iter().map(|&x| psi(c, x) + c.d2(x)));
    add("lower_ode", m, m);
    let r = c.d1(0.0) - cfg.lambda1 * c.value(nodes[ixi]);
    add("lower_bc0", r, -r.abs());
    let r = c.d1(1.0) - cfg.lambda2 * c.value(nodes[ieta]);
    add("lower_bc1", r, -r);

    // -d'' >= ψ(x, d, d')
    let m = worst(&mut interior.iter().map(|&x| -d.d2(x) - psi(d, x)));
    add("upper_ode", m, m);
    let r = d.d1(0.0) - cfg.lambda1 * d.value(nodes[ixi]);
    add("upper_bc0", r, -r.abs());
    let r = d.d1(1.0) - cfg.lambda2 * d.value(nodes[ieta]);
    add("upper_bc1", r, r);

    let m = match problem.ordering {
        BracketOrder::Reverse => worst(&mut nodes.iter().map(|&x| c.value(x) - d.value(x))),
        BracketOrder::Well => worst(&mut nodes.iter().map(|&x| d.value(x) - c.value(x))),
    };
    add("ordering", m, m);

    let m = worst(&mut nodes.iter().map(|&x| psi(d, x) - psi(c, x) - k * (d.value(x) - c.value(x))));
    add("cross", m, m);

    if conditions.iter().any(|c| !c.value.is_finite()) {
        return Err(Error::NonFinite("initial bracket check".into()));
    }
    let pass = conditions.iter().all(|c| c.pass);
    Ok(BracketReport { conditions, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn example1() -> NonlinearProblem {
        NonlinearProblem::new(
            BoundaryConfig::new(0.1, 0.2, 2.0, 3.0).unwrap(),
            "(exp(u) - x*exp(up))/195",
            "1 + 2.525*x + x^2",
            "-(1 + 2.525*x + x^2)",
            BracketOrder::Reverse,
        )
        .unwrap()
    }

    fn example2() -> NonlinearProblem {
        NonlinearProblem::new(
            BoundaryConfig::new(0.2, 0.3, 0.25, 1.0 / 9.0).unwrap(),
            "((exp(x)-1)/40)*(up^2 - u - cos(x)/4)",
            "-1.905 - x/2 + x^2/8",
            "1.9 + x/2",
            BracketOrder::Well,
        )
        .unwrap()
    }

    #[test]
    fn closed_form_derivatives() {
        let c = ClosedForm::parse("1 + 2.525*x + x^2").unwrap();
        assert_eq!(c.d1(0.0), 2.525);
        assert_eq!(c.d2(0.3), 2.0);
        assert!(ClosedForm::parse("x + u").is_err());
        assert!(Source::parse("v + 1").is_err());
    }

    #[test]
    fn brackets_of_both_examples_pass() {
        for (p, k) in [(example1(), 0.49), (example2(), -4.0)] {
            let nodes = solver_grid(&p.config, 501).unwrap();
            let r = verify_initial_bracket(&p, k, &nodes, 1e-9).unwrap();
            assert!(r.pass, "{:?}", r.conditions);
        }
    }

    #[test]
    fn first_step_moves_towards_the_solution() {
        let p = example1();
        let nodes = solver_grid(&p.config, 201).unwrap();
        let solver = LinearSolver::new(&p.config, &ShiftedOperator::new(0.49).unwrap(), &nodes).unwrap();
        let c0 = p.lower0.sample(&nodes).unwrap();
        let c1 = iterate_once(&p, &solver, &c0).unwrap();
        assert!(c1.u.iter().zip(&c0.u).all(|(a, b)| a <= b));

        let p = example2();
        let nodes = solver_grid(&p.config, 201).unwrap();
        let solver = LinearSolver::new(&p.config, &ShiftedOperator::new(-2.0).unwrap(), &nodes).unwrap();
        let c0 = p.lower0.sample(&nodes).unwrap();
        let c1 = iterate_once(&p, &solver, &c0).unwrap();
        assert!(c1.u.iter().zip(&c0.u).all(|(a, b)| a >= b));
    }

    #[test]
    fn short_run_keeps_its_flags_consistent() {
        let p = example1();
        let opts = RunOptions { grid_n: 101, max_iter: 5, tol: 1e-8 };
        let t = run(&p, 0.49, &opts).unwrap();
        assert_eq!(t.steps(), 5);
        assert!(!t.converged);
        assert!(t.all_flags_hold());
        assert!(t.flags_consistent());
        assert_eq!(t.gaps.len(), 6);
        let csv = t.to_csv();
        assert!(csv.starts_with("iter,x,c_n,d_n\n"));
        assert_eq!(csv.lines().count(), 1 + 6 * 101);
    }

    #[test]
    fn rejects_bad_options() {
        let p = example1();
        let bad = RunOptions { max_iter: 0, ..Default::default() };
        assert!(matches!(run(&p, 0.49, &bad), Err(Error::InvalidArgument(_))));
        let bad = RunOptions { tol: 0.0, ..Default::default() };
        assert!(matches!(run(&p, 0.49, &bad), Err(Error::InvalidArgument(_))));
        assert!(matches!(run(&p, 0.0, &RunOptions::default()), Err(Error::ZeroShift)));
    }

    #[test]
    fn divergence_aborts_with_trace() {
        // a strongly repulsive source blows up under a small positive shift
        let p = NonlinearProblem::new(
            BoundaryConfig::new(0.1, 0.2, 2.0, 3.0).unwrap(),
            "50*u + 1",
            "1 + 2.525*x + x^2",
            "-(1 + 2.525*x + x^2)",
            BracketOrder::Reverse,
        )
        .unwrap();
        let opts = RunOptions { grid_n: 51, max_iter: 200, tol: 1e-8 };
        match run(&p, 0.49, &opts) {
            Err(Error::Diverged { step, trace, .. }) => {
                assert_eq!(trace.steps(), step);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
