//! Conditions on the shift `k` under which the monotone iteration is
//! guaranteed to work, the Lipschitz data they depend on, and the Nagumo
//! bound on derivatives of bracketed solutions.
//!
//! Every condition is reported as a signed margin: positive (or zero for
//! non-strict inequalities) means satisfied.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr, Var, Vars};
use crate::grid::sampled_sup;
use crate::kernel::{normalization_value, BoundaryConfig, Regime, ShiftedOperator, K_MAX};
use crate::monotone::{BracketOrder, Majorant, NonlinearProblem};

/// Sample count for suprema over [0, 1].
pub const SUP_SAMPLES: usize = 2001;

/// Bisection tolerance for scan endpoints.
pub const ENDPOINT_TOL: f64 = 1e-4;

/// One-sided Lipschitz constant `L₁` in `u` and the Lipschitz function
/// `L₂(x)` in `u'`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzData {
    pub l1: f64,
    pub l2_text: String,
    #[serde(skip)]
    l2: Expr,
    #[serde(skip)]
    l2_prime: Expr,
    pub l2_sup: f64,
    pub l2prime_sup: f64,
}

impl LipschitzData {
    pub fn new(l1: f64, l2: &str) -> Result<Self> {
        if !(l1.is_finite() && l1 >= 0.0) {
            return Err(Error::InvalidArgument(format!("L1 must be finite and >= 0, got {l1}")));
        }
        let expr = parse_expression(l2)?;
        if let Some(v) = expr.disallowed_var(&[Var::X]) {
            return Err(Error::Config(format!("L2 may only depend on x, found `{}`", v.name())));
        }
        let prime = expr.derivative(Var::X);
        let f = |x: f64| expr.eval(&Vars::x(x));
        let at0 = f(0.0);
        if !(at0.abs() <= 1e-12) {
            return Err(Error::InvalidArgument(format!("L2(0) must vanish, got {at0}")));
        }
        let h = 1.0 / (SUP_SAMPLES - 1) as f64;
        let samples: Vec<f64> = (0..SUP_SAMPLES).map(|i| f(i as f64 * h)).collect();
        if samples.iter().any(|v| !v.is_finite() || *v < -1e-12) {
            return Err(Error::InvalidArgument("L2 must be finite and nonnegative on [0, 1]".into()));
        }
        if samples.windows(2).any(|w| w[1] < w[0] - 1e-12) {
            return Err(Error::InvalidArgument("L2 must be nondecreasing on [0, 1]".into()));
        }
        let l2_sup = sampled_sup(f, 0.0, 1.0, SUP_SAMPLES);
        let l2prime_sup = sampled_sup(|x| prime.eval(&Vars::x(x)), 0.0, 1.0, SUP_SAMPLES);
        Ok(LipschitzData { l1, l2_text: l2.to_string(), l2: expr, l2_prime: prime, l2_sup, l2prime_sup })
    }

    pub fn l2(&self, x: f64) -> f64 {
        self.l2.eval(&Vars::x(x))
    }

    pub fn l2_prime(&self, x: f64) -> f64 {
        self.l2_prime.eval(&Vars::x(x))
    }
}

/// A checked inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub id: String,
    /// The quantity the inequality is stated on.
    pub value: f64,
    /// Signed distance from failure; positive is on the safe side.
    pub margin: f64,
    pub pass: bool,
}

impl Condition {
    pub fn new(id: &str, value: f64, margin: f64, pass: bool) -> Self {
        // +0.0 turns a negated zero into a plain zero
        Condition { id: id.to_string(), value, margin: margin + 0.0, pass }
    }

    fn at_most_zero(id: &str, value: f64) -> Self {
        Condition::new(id, value, -value, value <= 0.0)
    }

    fn at_least_zero(id: &str, value: f64) -> Self {
        Condition::new(id, value, value, value >= 0.0)
    }

    fn positive(id: &str, value: f64) -> Self {
        Condition::new(id, value, value, value > 0.0)
    }

    fn k_at_most(id: &str, k: f64, bound: f64) -> Self {
        Condition::new(id, bound, bound - k, k <= bound)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub k: f64,
    pub regime: Regime,
    pub conditions: Vec<Condition>,
    pub admissible: bool,
}

impl AdmissibilityReport {
    fn new(k: f64, regime: Regime, conditions: Vec<Condition>) -> Self {
        let admissible = conditions.iter().all(|c| c.pass);
        AdmissibilityReport { k, regime, conditions, admissible }
    }

    pub fn get(&self, id: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

fn require(k: f64, expected: Regime) -> Result<ShiftedOperator> {
    let op = ShiftedOperator::new(k).map_err(|_| Error::RegimeMismatch { expected, k })?;
    if op.regime() != expected {
        return Err(Error::RegimeMismatch { expected, k });
    }
    Ok(op)
}

/// Conditions for `0 < k <= π²/4` (reverse-ordered bracket):
///
/// * `kernel_norm`: `D_k > 0`
/// * `kernel_cos`: `√k cos√k - λ₂ sin√k η ≥ 0`
/// * `kernel_sin`: `√k - λ₁ sin√k ξ > 0`
/// * `growth_cos`: `(L₁-k) cos√k + L₂(x) √k sin√k ≤ 0` for all x
/// * `growth_slope`: `(L₁-k) + sup L₂' ≤ 0`
pub fn check_positive_k(config: &BoundaryConfig, k: f64, lip: &LipschitzData) -> Result<AdmissibilityReport> {
    config.validate()?;
    let op = require(k, Regime::PositiveK)?;
    let w = op.root();
    let BoundaryConfig { xi, eta, lambda1, lambda2 } = *config;
    let growth = sampled_sup(|x| (lip.l1 - k) * w.cos() + lip.l2(x) * w * w.sin(), 0.0, 1.0, SUP_SAMPLES);
    let conditions = vec![
        Condition::positive("kernel_norm", normalization_value(config, &op)),
        Condition::at_least_zero("kernel_cos", w * w.cos() - lambda2 * (w * eta).sin()),
        Condition::positive("kernel_sin", w - lambda1 * (w * xi).sin()),
        Condition::at_most_zero("growth_cos", growth),
        Condition::at_most_zero("growth_slope", (lip.l1 - k) + lip.l2prime_sup),
    ];
    Ok(AdmissibilityReport::new(k, Regime::PositiveK, conditions))
}

/// The four upper bounds on `k < 0` implied by the Lipschitz data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NegativeBounds {
    /// `-L₁`
    pub l1: f64,
    /// `-λ₁²`
    pub lambda: f64,
    /// `(L₁ + λ₁ sup L₂) / (1 - sup L₂)`, only when `sup L₂ < 1`.
    pub ratio: Option<f64>,
    /// `-sup(L₁ + L₂' + L₂²/2 + (L₂/2) √(L₂² + 4(L₁ + L₂')))`
    pub root: f64,
}

impl NegativeBounds {
    pub fn min(&self) -> f64 {
        [self.l1, self.lambda, self.ratio.unwrap_or(f64::INFINITY), self.root]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn negative_bounds(config: &BoundaryConfig, lip: &LipschitzData) -> NegativeBounds {
    let l1 = lip.l1;
    let ratio = (1.0 - lip.l2_sup > 0.0).then(|| (l1 + config.lambda1 * lip.l2_sup) / (1.0 - lip.l2_sup));
    let root = -sampled_sup(
        |x| {
            let (l2, l2p) = (lip.l2(x), lip.l2_prime(x));
            l1 + l2p + 0.5 * l2 * l2 + 0.5 * l2 * (l2 * l2 + 4.0 * (l1 + l2p)).sqrt()
        },
        0.0,
        1.0,
        SUP_SAMPLES,
    );
    NegativeBounds { l1: -l1, lambda: -config.lambda1 * config.lambda1, ratio, root }
}

/// Conditions for `k < 0` (well-ordered bracket), with `a = √|k|`:
///
/// * `kernel_norm`: `D_k' > 0`
/// * `kernel_sinh`: `a sinh a - λ₂ cosh aη ≥ 0`
/// * `kernel_mid`: `a sinh aξ + (λ₁ - a) cosh aξ ≤ 0`
/// * `kernel_lambda`: `a - λ₁ cosh aξ > 0`
/// * `growth_slope`: `(L₁+k) + sup(L₂' + a L₂) ≤ 0`
/// * `bound_l1`, `bound_lambda`, `bound_ratio`, `bound_root`: `k` below
///   each of [`NegativeBounds`]; `bound_ratio` is omitted when
///   `sup L₂ ≥ 1`.
pub fn check_negative_k(config: &BoundaryConfig, k: f64, lip: &LipschitzData) -> Result<AdmissibilityReport> {
    config.validate()?;
    let op = require(k, Regime::NegativeK)?;
    let a = op.root();
    let BoundaryConfig { xi, eta, lambda1, lambda2 } = *config;
    let slope = sampled_sup(|x| lip.l2_prime(x) + a * lip.l2(x), 0.0, 1.0, SUP_SAMPLES);
    let bounds = negative_bounds(config, lip);
    let mut conditions = vec![
        Condition::positive("kernel_norm", normalization_value(config, &op)),
        Condition::at_least_zero("kernel_sinh", a * a.sinh() - lambda2 * (a * eta).cosh()),
        Condition::at_most_zero("kernel_mid", a * (a * xi).sinh() + (lambda1 - a) * (a * xi).cosh()),
        Condition::positive("kernel_lambda", a - lambda1 * (a * xi).cosh()),
        Condition::at_most_zero("growth_slope", (lip.l1 + k) + slope),
        Condition::k_at_most("bound_l1", k, bounds.l1),
        Condition::k_at_most("bound_lambda", k, bounds.lambda),
    ];
    if let Some(r) = bounds.ratio {
        conditions.push(Condition::k_at_most("bound_ratio", k, r));
    }
    conditions.push(Condition::k_at_most("bound_root", k, bounds.root));
    Ok(AdmissibilityReport::new(k, Regime::NegativeK, conditions))
}

pub fn check(config: &BoundaryConfig, k: f64, lip: &LipschitzData) -> Result<AdmissibilityReport> {
    match Regime::of(k)? {
        Regime::PositiveK => check_positive_k(config, k, lip),
        Regime::NegativeK => check_negative_k(config, k, lip),
    }
}

/// A maximal run of admissible samples. `lo_refined`/`hi_refined` tell
/// whether the end was located by bisection or is a scan-window edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_refined: bool,
    pub hi_refined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub intervals: Vec<KInterval>,
    pub samples: Vec<AdmissibilityReport>,
}

impl ScanResult {
    /// Margin table with columns `k,condition,margin,pass`.
    pub fn margins_csv(&self) -> String {
        let mut out = String::from("k,condition,margin,pass\n");
        for s in &self.samples {
            for c in &s.conditions {
                let _ = writeln!(out, "{},{},{},{}", s.k, c.id, c.margin, c.pass);
            }
        }
        out
    }

    /// Margins of one condition across the scan, in k order.
    pub fn series(&self, id: &str) -> Vec<(f64, f64)> {
        self.samples.iter().filter_map(|s| s.get(id).map(|c| (s.k, c.margin))).collect()
    }
}

/// Number of strict sign changes in a sequence of margins.
pub fn sign_changes(margins: &[f64]) -> usize {
    margins
        .iter()
        .filter(|m| **m != 0.0)
        .collect::<Vec<_>>()
        .windows(2)
        .filter(|w| (*w[0] > 0.0) != (*w[1] > 0.0))
        .count()
}

/// Scans `steps` uniform cells of `(k_lo, k_hi)`, sampling each at its
/// midpoint, merges admissible neighbours into intervals and moves each
/// interval end to within [`ENDPOINT_TOL`] of the true switch by bisection.
/// A run that reaches the window edge ends at the edge if the edge itself
/// is admissible, and at its outermost sample if the edge cannot be
/// evaluated (k = 0).
pub fn scan_k(
    config: &BoundaryConfig,
    lip: &LipschitzData,
    regime: Regime,
    k_lo: f64,
    k_hi: f64,
    steps: usize,
) -> Result<ScanResult> {
    config.validate()?;
    if !(k_lo < k_hi) {
        return Err(Error::EmptyRange { lo: k_lo, hi: k_hi });
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("steps must be at least 2, got {steps}")));
    }
    let in_regime = match regime {
        Regime::PositiveK => k_lo >= 0.0 && k_hi <= K_MAX,
        Regime::NegativeK => k_hi <= 0.0 && k_lo.is_finite(),
    };
    if !in_regime {
        let k = if matches!(regime, Regime::PositiveK) && k_lo < 0.0 { k_lo } else { k_hi };
        return Err(Error::RegimeMismatch { expected: regime, k });
    }

    let checker = |k: f64| -> Option<bool> {
        let r = match regime {
            Regime::PositiveK => check_positive_k(config, k, lip),
            Regime::NegativeK => check_negative_k(config, k, lip),
        };
        r.ok().map(|r| r.admissible)
    };
    let width = (k_hi - k_lo) / steps as f64;
    let samples: Vec<AdmissibilityReport> = (0..steps)
        .into_par_iter()
        .map(|i| {
            let k = k_lo + (i as f64 + 0.5) * width;
            match regime {
                Regime::PositiveK => check_positive_k(config, k, lip),
                Regime::NegativeK => check_negative_k(config, k, lip),
            }
        })
        .collect::<Result<_>>()?;

    let refine = |inside: f64, outside: f64| -> f64 {
        let (mut a, mut b) = (inside, outside);
        while (a - b).abs() > ENDPOINT_TOL {
            let m = 0.5 * (a + b);
            if checker(m) == Some(true) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    let edge = |sample: f64, edge: f64| -> (f64, bool) {
        match checker(edge) {
            Some(true) => (edge, false),
            Some(false) => (refine(sample, edge), true),
            None => (sample, false),
        }
    };

    let mut intervals = Vec::new();
    let mut i = 0;
    while i < steps {
        if !samples[i].admissible {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < steps && samples[i + 1].admissible {
            i += 1;
        }
        let (ks, ke) = (samples[start].k, samples[i].k);
        let (lo, lo_refined) =
            if start == 0 { edge(ks, k_lo) } else { (refine(ks, samples[start - 1].k), true) };
        let (hi, hi_refined) =
            if i == steps - 1 { edge(ke, k_hi) } else { (refine(ke, samples[i + 1].k), true) };
        intervals.push(KInterval { lo, hi, lo_refined, hi_refined });
        i += 1;
    }
    Ok(ScanResult { intervals, samples })
}

fn derivative_box_bound(problem: &NonlinearProblem) -> f64 {
    problem.derivative_bound.unwrap_or_else(|| {
        let f = |x: f64| problem.lower0.d1(x).abs().max(problem.upper0.d1(x).abs());
        sampled_sup(f, 0.0, 1.0, SUP_SAMPLES)
    })
}

/// One-sided Lipschitz constant of ψ in `u` over the box between the
/// initial functions with `|u'|` up to the problem's derivative bound (or
/// the initial functions' slopes when none is set).
///
/// Reverse brackets bound `ψ(x,v₂,w) - ψ(x,v₁,w) ≤ L₁(v₂-v₁)`, so the
/// estimate is the largest positive `∂ψ/∂u`; well-ordered brackets bound
/// it from below by `-L₁(v₂-v₁)`, so it is the largest negative part.
/// Derivatives are central differences; `density` points are taken along
/// each of the three box axes.
pub fn estimate_l1(problem: &NonlinearProblem, density: usize) -> Result<f64> {
    let n = density.max(2);
    let p = derivative_box_bound(problem);
    let axis = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let sign = match problem.ordering {
        BracketOrder::Reverse => 1.0,
        BracketOrder::Well => -1.0,
    };
    let worst = (0..n)
        .into_par_iter()
        .map(|ix| -> Result<f64> {
            let x = axis(0.0, 1.0, ix);
            let (lo, hi) = problem.bracket_at(x);
            let mut best = 0.0f64;
            for iu in 0..n {
                let u = axis(lo, hi, iu);
                let h = 1e-6 * (1.0 + u.abs());
                for ip in 0..n {
                    let up = axis(-p, p, ip);
                    let d = (problem.psi.eval(x, u + h, up) - problem.psi.eval(x, u - h, up)) / (2.0 * h);
                    if !d.is_finite() {
                        return Err(Error::NonFinite(format!("psi near x = {x}, u = {u}, up = {up}")));
                    }
                    best = best.max(sign * d);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum NagumoVerdict {
    /// Smallest `P ≥ γ` with `∫_γ^P s/φ(s) ds = diameter`.
    Bound { p: f64 },
    /// `∫_γ^∞ s/φ(s) ds` falls short of the diameter.
    Failure { integral: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NagumoData {
    pub phi: String,
    pub gamma: f64,
    pub diameter: f64,
    #[serde(flatten)]
    pub verdict: NagumoVerdict,
}

impl NagumoData {
    pub fn p(&self) -> Option<f64> {
        match self.verdict {
            NagumoVerdict::Bound { p } => Some(p),
            NagumoVerdict::Failure { .. } => None,
        }
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
        + adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(&f, a, fa, b, fb);
    adaptive(&f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Solves `∫_γ^P s/φ(s) ds = diameter` for `P`, integrating over doubling
/// segments until the target is passed or the tail becomes negligible.
pub fn nagumo_p(phi: impl Fn(f64) -> f64, gamma: f64, diameter: f64) -> Result<NagumoVerdict> {
    if !(diameter >= 0.0) {
        return Err(Error::InvalidArgument(format!("diameter must be >= 0, got {diameter}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    if diameter == 0.0 {
        return Ok(NagumoVerdict::Bound { p: gamma });
    }
    let integrand = |s: f64| -> f64 {
        let v = phi(s);
        if v.is_infinite() && v > 0.0 {
            0.0
        } else {
            s / v
        }
    };
    let tol = 1e-13 * diameter.max(1.0);
    let mut a = gamma;
    let mut len = gamma.max(1.0);
    let mut total = 0.0;
    for _ in 0..2000 {
        let b = a + len;
        for j in 0..=16 {
            let s = a + (b - a) * j as f64 / 16.0;
            let v = phi(s);
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::NonIntegrable(format!("phi({s}) = {v} is not positive")));
            }
        }
        let piece = integrate(integrand, a, b, tol);
        if !piece.is_finite() {
            return Err(Error::NonIntegrable(format!("integral over [{a}, {b}] is {piece}")));
        }
        if total + piece >= diameter {
            let need = diameter - total;
            let (mut lo, mut hi) = (a, b);
            while hi - lo > 1e-13 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if integrate(integrand, a, mid, tol) >= need {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(NagumoVerdict::Bound { p: 0.5 * (lo + hi) });
        }
        total += piece;
        if piece <= 1e-16 * total && len > 1e3 * gamma.max(1.0) {
            return Ok(NagumoVerdict::Failure { integral: total });
        }
        if !b.is_finite() || b > 1e300 {
            break;
        }
        a = b;
        len *= 2.0;
    }
    Err(Error::NonIntegrable(format!("partial integral {total} neither settled nor reached {diameter}")))
}

/// Sampled majorant `φ(s) = max |ψ(x, u, w)|` over the bracket and
/// `|w| ≤ s`, plus a tiny floor to keep it positive.
pub fn auto_majorant(problem: &NonlinearProblem, s: f64) -> f64 {
    const N: usize = 17;
    let mut best = 0.0f64;
    for ix in 0..N {
        let x = ix as f64 / (N - 1) as f64;
        let (lo, hi) = problem.bracket_at(x);
        for iu in 0..N {
            let u = lo + (hi - lo) * iu as f64 / (N - 1) as f64;
            for iw in 0..N {
                let w = -s + 2.0 * s * iw as f64 / (N - 1) as f64;
                best = best.max(problem.psi.eval(x, u, w).abs());
            }
        }
    }
    best + 1e-12
}

/// Nagumo data: `γ = 2 sup|c|` for reverse brackets (`2 sup|d|` for
/// well-ordered ones) and diameter `max(top) - min(bottom)`.
pub fn nagumo_bound(problem: &NonlinearProblem) -> Result<NagumoData> {
    let phi = problem
        .nagumo_phi
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("problem has no Nagumo majorant".into()))?;
    let (top, bottom) = match problem.ordering {
        BracketOrder::Reverse => (&problem.lower0, &problem.upper0),
        BracketOrder::Well => (&problem.upper0, &problem.lower0),
    };
    let gamma = 2.0 * sampled_sup(|x| top.value(x).abs(), 0.0, 1.0, SUP_SAMPLES);
    let diameter = sampled_sup(|x| top.value(x), 0.0, 1.0, SUP_SAMPLES)
        + sampled_sup(|x| -bottom.value(x), 0.0, 1.0, SUP_SAMPLES);
    let (verdict, text) = match phi {
        Majorant::Expr(e) => (nagumo_p(|s| e.eval(&Vars::s(s)), gamma, diameter)?, e.to_string()),
        Majorant::Auto => (nagumo_p(|s| auto_majorant(problem, s), gamma, diameter)?, "auto".to_string()),
    };
    Ok(NagumoData { phi: text, gamma, diameter, verdict })
}
