//! Closed-form Green's kernels of the shifted operator `-u'' - k u` under
//! the four-point conditions `u'(0) = λ₁ u(ξ)`, `u'(1) = λ₂ u(η)`.
//!
//! The solution of `-u'' - k u = g` with homogeneous conditions is
//! `u(x) = -∫ G(x, s) g(s) ds`. For `0 < k <= π²/4` the kernel is built from
//! `cos`/`sin` of `√k`, for `k < 0` from `cosh`/`sinh` of `√|k|`.
//!
//! The kernel is piecewise in `s` (segments `s <= ξ`, `ξ <= s <= η`,
//! `s >= η`) and in the ordering of `x` against `s`. On every seam the
//! branch listed first wins: `s = ξ` belongs to the left segment, `s = η`
//! to the middle one and `x = s` to the `x <= s` branch.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// |D| below this marks a degenerate (resonant) kernel.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Upper end of the trigonometric regime.
pub const K_MAX: f64 = PI * PI / 4.0;

/// The four-point boundary data `(ξ, η, λ₁, λ₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfig {
    pub xi: f64,
    pub eta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl BoundaryConfig {
    pub fn new(xi: f64, eta: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        let c = BoundaryConfig { xi, eta, lambda1, lambda2 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.xi, self.eta, self.lambda1, self.lambda2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBoundary("non-finite entry".into()));
        }
        if !(0.0 < self.xi && self.xi <= self.eta && self.eta < 1.0) {
            return Err(Error::InvalidBoundary(format!(
                "need 0 < xi <= eta < 1, got xi = {}, eta = {}",
                self.xi, self.eta
            )));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::InvalidBoundary(format!(
                "need lambda1, lambda2 >= 0, got {}, {}",
                self.lambda1, self.lambda2
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `0 < k <= π²/4`, trigonometric kernel.
    PositiveK,
    /// `k < 0`, hyperbolic kernel.
    NegativeK,
}

impl Regime {
    pub fn of(k: f64) -> Result<Regime> {
        if k == 0.0 {
            Err(Error::ZeroShift)
        } else if k < 0.0 && k.is_finite() {
            Ok(Regime::NegativeK)
        } else if k > 0.0 && k <= K_MAX {
            Ok(Regime::PositiveK)
        } else {
            Err(Error::ShiftOutOfRange { k })
        }
    }
}

/// The shift `k` of `-u'' - k u`, tagged with its regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedOperator {
    k: f64,
    regime: Regime,
}

impl ShiftedOperator {
    pub fn new(k: f64) -> Result<Self> {
        Ok(ShiftedOperator { k, regime: Regime::of(k)? })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `√|k|`.
    pub fn root(&self) -> f64 {
        self.k.abs().sqrt()
    }
}

/// One sample of the kernel. At `x = s` the derivative is double valued;
/// `dvalue_dx` then holds the limit from below and `on_diagonal` is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelSample {
    pub x: f64,
    pub s: f64,
    pub value: f64,
    pub dvalue_dx: f64,
    pub on_diagonal: bool,
}

/// Which third of [0, 1] the source point `s` lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Segment {
    Left,
    Middle,
    Right,
}

/// A smooth piece of the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Branch {
    pub segment: Segment,
    /// `true` for the `x > s` piece; `x = s` takes the other one.
    pub x_above: bool,
}

/// Raw normalization `D_k` (or `D_k'` for `k < 0`), without the degeneracy
/// check.
pub fn normalization_value(config: &BoundaryConfig, op: &ShiftedOperator) -> f64 {
    let BoundaryConfig { xi, eta, lambda1: l1, lambda2: l2 } = *config;
    let w = op.root();
    match op.regime {
        Regime::PositiveK => {
            op.k * w.sin()
                + l2 * w * (w * eta).cos()
                + l1 * (l2 * (w * (eta - xi)).sin() - w * (w * (xi - 1.0)).cos())
        }
        Regime::NegativeK => {
            let a = w;
            op.k.abs() * a.sinh() - l2 * a * (a * eta).cosh() - l1 * l2 * (a * (eta - xi)).sinh()
                + l1 * a * (a * (xi - 1.0)).cosh()
        }
    }
}

/// `D_k` for `k > 0` and `D_k'` for `k < 0`; rejects a vanishing value.
pub fn normalization(config: &BoundaryConfig, op: &ShiftedOperator) -> Result<f64> {
    config.validate()?;
    let d = normalization_value(config, op);
    if !d.is_finite() || d.abs() < DEGENERATE_NORM {
        return Err(Error::DegenerateNormalization { k: op.k, value: d });
    }
    Ok(d)
}

/// The kernel for one `(config, k)` pair with the shared constants
/// precomputed.
#[derive(Clone, Debug)]
pub struct GreenKernel {
    config: BoundaryConfig,
    op: ShiftedOperator,
    root: f64,
    norm: f64,
    scale: f64,
    // case-one and case-six coefficients, see `eval_branch`
    left_coef: f64,
    right_coef: f64,
}

impl GreenKernel {
    pub fn new(config: &BoundaryConfig, op: &ShiftedOperator) -> Result<Self> {
        let norm = normalization(config, op)?;
        let BoundaryConfig { xi, eta, lambda1: l1, lambda2: l2 } = *config;
        let w = op.root();
        let (left_coef, right_coef) = match op.regime {
            Regime::PositiveK => (
                l2 * (w * (eta - xi)).sin() - w * (w * (xi - 1.0)).cos(),
                w * (w * eta).cos() + l1 * (w * (eta - xi)).sin(),
            ),
            Regime::NegativeK => (
                w * (w * (xi - 1.0)).cosh() - l2 * (w * (eta - xi)).sinh(),
                w * (w * eta).cosh() + l1 * (w * (eta - xi)).sinh(),
            ),
        };
        Ok(GreenKernel {
            config: *config,
            op: *op,
            root: w,
            norm,
            scale: 1.0 / (w * norm),
            left_coef,
            right_coef,
        })
    }

    pub fn config(&self) -> &BoundaryConfig {
        &self.config
    }

    pub fn operator(&self) -> &ShiftedOperator {
        &self.op
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn segment_of(&self, s: f64) -> Segment {
        if s <= self.config.xi {
            Segment::Left
        } else if s <= self.config.eta {
            Segment::Middle
        } else {
            Segment::Right
        }
    }

    /// Branch active at `(x, s)` under the first-listed tie rule.
    pub fn branch_at(&self, x: f64, s: f64) -> Branch {
        Branch { segment: self.segment_of(s), x_above: x > s }
    }

    /// Left-end factor `√k cos√k x + λ₁ sin√k(x-ξ)` (hyperbolic analogue for
    /// `k < 0`) and its derivative. It satisfies `φ'(0) = λ₁ φ(ξ)`.
    pub fn left_mode(&self, x: f64) -> (f64, f64) {
        let w = self.root;
        let BoundaryConfig { xi, lambda1: l1, .. } = self.config;
        match self.op.regime {
            Regime::PositiveK => (
                w * (w * x).cos() + l1 * (w * (x - xi)).sin(),
                -w * w * (w * x).sin() + l1 * w * (w * (x - xi)).cos(),
            ),
            Regime::NegativeK => (
                w * (w * x).cosh() + l1 * (w * (x - xi)).sinh(),
                w * w * (w * x).sinh() + l1 * w * (w * (x - xi)).cosh(),
            ),
        }
    }

    /// Right-end factor `√k cos√k(x-1) + λ₂ sin√k(x-η)` and its derivative.
    /// It satisfies `φ'(1) = λ₂ φ(η)`.
    pub fn right_mode(&self, x: f64) -> (f64, f64) {
        let w = self.root;
        let BoundaryConfig { eta, lambda2: l2, .. } = self.config;
        match self.op.regime {
            Regime::PositiveK => (
                w * (w * (x - 1.0)).cos() + l2 * (w * (x - eta)).sin(),
                -w * w * (w * (x - 1.0)).sin() + l2 * w * (w * (x - eta)).cos(),
            ),
            Regime::NegativeK => (
                w * (w * (x - 1.0)).cosh() + l2 * (w * (x - eta)).sinh(),
                w * w * (w * (x - 1.0)).sinh() + l2 * w * (w * (x - eta)).cosh(),
            ),
        }
    }

    /// `(G, ∂G/∂x)` of the given branch at `(x, s)`; the branch formula is
    /// used as-is, so callers may evaluate a branch up to its seams.
    pub fn eval_branch(&self, branch: Branch, x: f64, s: f64) -> (f64, f64) {
        let w = self.root;
        let (value, dx) = match self.op.regime {
            Regime::PositiveK => self.positive_branch(branch, x, s, w),
            Regime::NegativeK => self.negative_branch(branch, x, s, w),
        };
        (value * self.scale, dx * self.scale)
    }

    fn positive_branch(&self, branch: Branch, x: f64, s: f64, w: f64) -> (f64, f64) {
        let BoundaryConfig { lambda1: l1, lambda2: l2, .. } = self.config;
        let (cos, sin) = (|t: f64| (w * t).cos(), |t: f64| (w * t).sin());
        match (branch.segment, branch.x_above) {
            (Segment::Left, false) => {
                let (r, _) = self.right_mode(s);
                (
                    w * cos(x) * r + l1 * sin(s - x) * self.left_coef,
                    -w * w * sin(x) * r - l1 * w * cos(s - x) * self.left_coef,
                )
            }
            (Segment::Left, true) => {
                let (r, dr) = self.right_mode(x);
                (w * cos(s) * r, w * cos(s) * dr)
            }
            (Segment::Middle, false) => {
                let (l, dl) = self.left_mode(x);
                let (r, _) = self.right_mode(s);
                (l * r, dl * r)
            }
            (Segment::Middle, true) => {
                let (l, _) = self.left_mode(s);
                let (r, dr) = self.right_mode(x);
                (l * r, l * dr)
            }
            (Segment::Right, false) => {
                let (l, dl) = self.left_mode(x);
                (w * cos(s - 1.0) * l, w * cos(s - 1.0) * dl)
            }
            (Segment::Right, true) => {
                let (l, _) = self.left_mode(s);
                (
                    w * cos(x - 1.0) * l + l2 * sin(x - s) * self.right_coef,
                    -w * w * sin(x - 1.0) * l + l2 * w * cos(x - s) * self.right_coef,
                )
            }
        }
    }

    fn negative_branch(&self, branch: Branch, x: f64, s: f64, a: f64) -> (f64, f64) {
        let BoundaryConfig { xi, eta, lambda1: l1, lambda2: l2 } = self.config;
        let (cosh, sinh) = (|t: f64| (a * t).cosh(), |t: f64| (a * t).sinh());
        match (branch.segment, branch.x_above) {
            (Segment::Left, false) => {
                let inner = l2 * sinh(eta - s) - a * cosh(s - 1.0);
                (
                    a * cosh(x) * inner + l1 * sinh(s - x) * self.left_coef,
                    a * a * sinh(x) * inner - l1 * a * cosh(s - x) * self.left_coef,
                )
            }
            (Segment::Left, true) => {
                let (r, dr) = self.right_mode(x);
                (-a * cosh(s) * r, -a * cosh(s) * dr)
            }
            (Segment::Middle, false) => {
                let (l, dl) = self.left_mode(x);
                let (r, _) = self.right_mode(s);
                (-l * r, -dl * r)
            }
            (Segment::Middle, true) => {
                let (l, _) = self.left_mode(s);
                let (r, dr) = self.right_mode(x);
                (-l * r, -l * dr)
            }
            (Segment::Right, false) => {
                let (l, dl) = self.left_mode(x);
                (-a * cosh(s - 1.0) * l, -a * cosh(s - 1.0) * dl)
            }
            (Segment::Right, true) => {
                let inner = l1 * sinh(xi - s) - a * cosh(s);
                (
                    a * cosh(x - 1.0) * inner + l2 * sinh(s - x) * self.right_coef,
                    a * a * sinh(x - 1.0) * inner - l2 * a * cosh(s - x) * self.right_coef,
                )
            }
        }
    }

    pub fn eval(&self, x: f64, s: f64) -> Result<KernelSample> {
        check_unit_square(x, s)?;
        let (value, dvalue_dx) = self.eval_branch(self.branch_at(x, s), x, s);
        Ok(KernelSample { x, s, value, dvalue_dx, on_diagonal: x == s })
    }

    /// Both one-sided x-derivatives at `(x, s)`: `(from below, from above)`.
    /// They differ only on the diagonal, where the jump is exactly one.
    pub fn dx_limits(&self, x: f64, s: f64) -> Result<(f64, f64)> {
        check_unit_square(x, s)?;
        let segment = self.segment_of(s);
        let below = self.eval_branch(Branch { segment, x_above: x > s }, x, s).1;
        let above = self.eval_branch(Branch { segment, x_above: x >= s }, x, s).1;
        Ok((below, above))
    }

    /// Homogeneous solution carrying the boundary constant `c` of
    /// `u'(1) = λ₂ u(η) + c`, with its derivative.
    pub fn boundary_term(&self, c: f64, x: f64) -> (f64, f64) {
        let (l, dl) = self.left_mode(x);
        let coef = match self.op.regime {
            Regime::PositiveK => -c / self.norm,
            Regime::NegativeK => c / self.norm,
        };
        (coef * l, coef * dl)
    }
}

fn check_unit_square(x: f64, s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { x, s })
    }
}

pub fn green_eval(config: &BoundaryConfig, op: &ShiftedOperator, x: f64, s: f64) -> Result<KernelSample> {
    check_unit_square(x, s)?;
    GreenKernel::new(config, op)?.eval(x, s)
}

/// Outcome of [`green_dx_sign_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DxSignReport {
    pub holds: bool,
    pub max_dx: f64,
    pub argmax: (f64, f64),
    pub violations: usize,
    pub checked: usize,
}

/// Tests `∂G/∂x <= tol` on every off-diagonal pair of `nodes`. Only
/// meaningful for `k < 0`.
pub fn green_dx_sign_check(
    config: &BoundaryConfig,
    op: &ShiftedOperator,
    nodes: &[f64],
    tol: f64,
) -> Result<DxSignReport> {
    if op.regime() != Regime::NegativeK {
        return Err(Error::RegimeMismatch { expected: Regime::NegativeK, k: op.k() });
    }
    let kernel = GreenKernel::new(config, op)?;
    let mut report = DxSignReport {
        holds: true,
        max_dx: f64::NEG_INFINITY,
        argmax: (0.0, 0.0),
        violations: 0,
        checked: 0,
    };
    for &x in nodes {
        for &s in nodes {
            if x == s {
                continue;
            }
            let d = kernel.eval(x, s)?.dvalue_dx;
            report.checked += 1;
            if d > report.max_dx {
                report.max_dx = d;
                report.argmax = (x, s);
            }
            if d > tol {
                report.violations += 1;
            }
        }
    }
    report.holds = report.violations == 0;
    Ok(report)
}

/// Samples `G` on the `n × n` uniform grid, row-major in `x`.
pub fn kernel_table(kernel: &GreenKernel, n: usize) -> Vec<KernelSample> {
    let pts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    pts.iter()
        .flat_map(|&x| pts.iter().map(move |&s| (x, s)))
        .map(|(x, s)| {
            let (value, dvalue_dx) = kernel.eval_branch(kernel.branch_at(x, s), x, s);
            KernelSample { x, s, value, dvalue_dx, on_diagonal: x == s }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ex1() -> BoundaryConfig {
        BoundaryConfig::new(0.1, 0.2, 2.0, 3.0).unwrap()
    }

    fn ex2() -> BoundaryConfig {
        BoundaryConfig::new(0.2, 0.3, 0.25, 1.0 / 9.0).unwrap()
    }

    #[test]
    fn regime_follows_k() {
        assert_eq!(ShiftedOperator::new(0.49).unwrap().regime(), Regime::PositiveK);
        assert_eq!(ShiftedOperator::new(-2.0).unwrap().regime(), Regime::NegativeK);
        assert!(matches!(ShiftedOperator::new(0.0), Err(Error::ZeroShift)));
        assert!(matches!(ShiftedOperator::new(2.5), Err(Error::ShiftOutOfRange { .. })));
        assert!(ShiftedOperator::new(K_MAX).is_ok());
    }

    #[test]
    fn boundary_config_invariants() {
        assert!(BoundaryConfig::new(0.3, 0.2, 1.0, 1.0).is_err());
        assert!(BoundaryConfig::new(0.0, 0.2, 1.0, 1.0).is_err());
        assert!(BoundaryConfig::new(0.2, 1.0, 1.0, 1.0).is_err());
        assert!(BoundaryConfig::new(0.2, 0.5, -1.0, 1.0).is_err());
        assert!(BoundaryConfig::new(0.5, 0.5, 0.0, 0.0).is_ok());
    }

    #[test]
    fn normalization_without_lambdas() {
        let c = BoundaryConfig::new(0.1, 0.2, 0.0, 0.0).unwrap();
        let d = normalization(&c, &ShiftedOperator::new(K_MAX).unwrap()).unwrap();
        assert_relative_eq!(d, K_MAX, epsilon = 1e-14);
        assert_relative_eq!(d, 2.46740, epsilon = 1e-5);
    }

    #[test]
    fn normalization_positive_on_example_one() {
        let d = normalization(&ex1(), &ShiftedOperator::new(0.49).unwrap()).unwrap();
        assert!(d > 0.0);
    }

    #[test]
    fn normalization_negative_matches_second_evaluator() {
        let c = ex2();
        let k: f64 = -2.0;
        // D_k' rewritten through the factorisation used for its sign
        let a = k.abs().sqrt();
        let (xi, eta, l1, l2) = (c.xi, c.eta, c.lambda1, c.lambda2);
        let factored = (a * a.sinh() - l2 * (a * eta).cosh()) * (a - l1 * (a * xi).sinh())
            + l1 * (a * xi).cosh() * (a * a.cosh() - l2 * (a * eta).sinh());
        let d = normalization(&c, &ShiftedOperator::new(k).unwrap()).unwrap();
        assert_relative_eq!(d, factored, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_normalization_is_reported() {
        // with λ₂ = 0, D vanishes at λ₁ = √k sin√k / cos√k(1-ξ)
        let (k, xi): (f64, f64) = (1.0, 0.1);
        let l1 = k.sqrt() * k.sqrt().sin() / (k.sqrt() * (1.0 - xi)).cos();
        let c = BoundaryConfig::new(xi, 0.2, l1, 0.0).unwrap();
        let op = ShiftedOperator::new(k).unwrap();
        assert!(normalization_value(&c, &op).abs() < 1e-12);
        assert!(matches!(normalization(&c, &op), Err(Error::DegenerateNormalization { .. })));
        assert!(matches!(GreenKernel::new(&c, &op), Err(Error::DegenerateNormalization { .. })));
    }

    #[test]
    fn reduced_neumann_kernel() {
        let c = BoundaryConfig::new(0.1, 0.2, 0.0, 0.0).unwrap();
        let op = ShiftedOperator::new(K_MAX).unwrap();
        let w = K_MAX.sqrt();
        let g = green_eval(&c, &op, 0.0, 0.5).unwrap();
        // λ = 0: G(x, s) = cos√k x cos√k(s-1) / (√k sin√k) for x <= s
        let reduced = (w * 0.0).cos() * (w * (0.5 - 1.0)).cos() / (w * w.sin());
        assert_relative_eq!(g.value, reduced, epsilon = 1e-14);
        assert_relative_eq!(g.value, w * (w * (0.5 - 1.0)).cos() / K_MAX, epsilon = 1e-14);
    }

    #[test]
    fn out_of_domain() {
        let op = ShiftedOperator::new(0.49).unwrap();
        assert!(matches!(green_eval(&ex1(), &op, 1.2, 0.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(green_eval(&ex1(), &op, 0.5, -0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn derivative_jumps_by_one_on_diagonal() {
        for (c, k) in [(ex1(), 0.49), (ex2(), -2.0), (ex1(), 2.0), (ex2(), -5.0)] {
            let kern = GreenKernel::new(&c, &ShiftedOperator::new(k).unwrap()).unwrap();
            for s in [0.05, c.xi, 0.25, c.eta, 0.6, 0.95] {
                let (below, above) = kern.dx_limits(s, s).unwrap();
                assert_relative_eq!(above - below, 1.0, epsilon = 1e-12);
                let sample = kern.eval(s, s).unwrap();
                assert!(sample.on_diagonal);
                assert_eq!(sample.dvalue_dx, below);
            }
        }
    }

    #[test]
    fn dx_sign_check_requires_negative_regime() {
        let op = ShiftedOperator::new(0.49).unwrap();
        let r = green_dx_sign_check(&ex1(), &op, &[0.0, 0.5, 1.0], 1e-10);
        assert!(matches!(r, Err(Error::RegimeMismatch { .. })));
    }

    #[test]
    fn seams_agree_across_branches() {
        for (c, k) in [(ex1(), 0.49), (ex2(), -2.0)] {
            let kern = GreenKernel::new(&c, &ShiftedOperator::new(k).unwrap()).unwrap();
            for &x in &[0.0, 0.07, c.xi, 0.25, c.eta, 0.5, 1.0] {
                for (side_a, side_b) in [(Segment::Left, Segment::Middle), (Segment::Middle, Segment::Right)]
                {
                    let s = if side_a == Segment::Left { c.xi } else { c.eta };
                    let above = x > s;
                    let a = kern.eval_branch(Branch { segment: side_a, x_above: above }, x, s);
                    let b = kern.eval_branch(Branch { segment: side_b, x_above: above }, x, s);
                    assert_relative_eq!(a.0, b.0, epsilon = 1e-9);
                }
                // x = s between the two x-orderings
                let s = x;
                let seg = kern.segment_of(s);
                let lo = kern.eval_branch(Branch { segment: seg, x_above: false }, x, s).0;
                let hi = kern.eval_branch(Branch { segment: seg, x_above: true }, x, s).0;
                assert_relative_eq!(lo, hi, epsilon = 1e-9);
            }
        }
    }
}
