//! Helpers shared by the integration tests. Nothing here calls into the
//! kernel or the solvers, so these act as independent references.

#![allow(dead_code)]

use mibvp::BoundaryConfig;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn example1() -> BoundaryConfig {
    BoundaryConfig::new(0.1, 0.2, 2.0, 3.0).unwrap()
}

pub fn example2() -> BoundaryConfig {
    BoundaryConfig::new(0.2, 0.3, 0.25, 1.0 / 9.0).unwrap()
}

/// Fundamental pair `(f1, f2)` of `u'' + k u = 0` with `f1(0)=1, f2'(0)=1`,
/// each returned as `(value, slope)`.
fn basis(k: f64, x: f64) -> [(f64, f64); 2] {
    if k > 0.0 {
        let w = k.sqrt();
        [((w * x).cos(), -w * (w * x).sin()), ((w * x).sin() / w, (w * x).cos())]
    } else {
        let a = (-k).sqrt();
        [((a * x).cosh(), a * (a * x).sinh()), ((a * x).sinh() / a, (a * x).cosh())]
    }
}

/// Green's function by direct construction: `G(., s) = A f1 + B f2 + H(x-s) f2(x-s)`
/// with `A, B` fixed by the two boundary conditions. Returns `(G, G_x)`.
pub fn direct_kernel(c: &BoundaryConfig, k: f64, x: f64, s: f64) -> (f64, f64) {
    let tail = |t: f64| if t > 0.0 { basis(k, t)[1] } else { (0.0, 0.0) };
    let [p0, q0] = basis(k, 0.0);
    let [pxi, qxi] = basis(k, c.xi);
    let [p1, q1] = basis(k, 1.0);
    let [peta, qeta] = basis(k, c.eta);
    // row 1: G_x(0) - λ1 G(ξ) = 0, row 2: G_x(1) - λ2 G(η) = 0
    let (a11, a12) = (p0.1 - c.lambda1 * pxi.0, q0.1 - c.lambda1 * qxi.0);
    let (a21, a22) = (p1.1 - c.lambda2 * peta.0, q1.1 - c.lambda2 * qeta.0);
    let b1 = -(tail(0.0 - s).1 - c.lambda1 * tail(c.xi - s).0);
    // s = 1 is taken as the limit from inside, so the jump still reaches x = 1
    let right_slope = if s >= 1.0 { 1.0 } else { tail(1.0 - s).1 };
    let b2 = -(right_slope - c.lambda2 * tail(c.eta - s).0);
    let det = a11 * a22 - a12 * a21;
    let a = (b1 * a22 - a12 * b2) / det;
    let b = (a11 * b2 - a21 * b1) / det;
    let [px, qx] = basis(k, x);
    let t = tail(x - s);
    (a * px.0 + b * qx.0 + t.0, a * px.1 + b * qx.1 + t.1)
}

/// Uniform grid with `n` nodes.
pub fn uniform(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// `u''` at interior nodes `2..n-2` by the centred five-point stencil.
pub fn d2_centred(u: &[f64], h: f64) -> Vec<f64> {
    (2..u.len() - 2)
        .map(|i| (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) / (12.0 * h * h))
        .collect()
}

/// A smooth random source: a few Fourier modes plus a quadratic.
#[derive(Clone, Debug)]
pub struct SmoothSource {
    modes: Vec<(f64, f64, f64)>,
    poly: [f64; 3],
}

impl SmoothSource {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let modes = (0..4)
            .map(|_| (rng.gen_range(0.5..6.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let poly = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        SmoothSource { modes, poly }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let [p0, p1, p2] = self.poly;
        self.modes
            .iter()
            .fold(p0 + p1 * x + p2 * x * x, |acc, (w, a, b)| acc + a * (w * x).sin() + b * (w * x).cos())
    }

    /// The same shape lifted so it is nonnegative on `[0, 1]`.
    pub fn nonnegative(&self) -> impl Fn(f64) -> f64 + '_ {
        let bound = self.modes.iter().map(|(_, a, b)| a.abs() + b.abs()).sum::<f64>()
            + self.poly.iter().map(|p| p.abs()).sum::<f64>();
        move |x| self.eval(x) + bound
    }
}
