//! Two-sided evaluation of summation identities against test functions with
//! known transforms, and the reports that record the outcome.
//!
//! A finite suite of test functions is evidence for an identity, not a proof
//! of it; reports carry their parameters so every verdict can be rerun.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::measures::{pair, DiscreteMeasure, FsPair};
use crate::quadrature::{composite_nodes, integrate};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `amp exp(pi i z (x - x0)^2) exp(2 pi i xi0 x)` with `Im z > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    #[serde(with = "pair")]
    pub amp: Complex64,
    #[serde(with = "pair")]
    pub z: Complex64,
    pub x0: f64,
    pub xi0: f64,
}

impl Gaussian {
    pub fn new(amp: Complex64, z: Complex64, x0: f64, xi0: f64) -> Result<Self> {
        if !(z.im > 0.0 && z.re.is_finite() && x0.is_finite() && xi0.is_finite()) {
            return Err(Error::NotUpperHalfPlane(z));
        }
        Ok(Self { amp, z, x0, xi0 })
    }

    /// `exp(pi i z x^2)`.
    pub fn centered(z: Complex64) -> Result<Self> {
        Self::new(Complex64::new(1.0, 0.0), z, 0.0, 0.0)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let d = x - self.x0;
        self.amp * (I * PI * self.z * d * d).exp() * Complex64::from_polar(1.0, 2.0 * PI * self.xi0 * x)
    }

    /// The transform `int g(x) exp(-2 pi i x xi) dx`, again a gaussian.
    pub fn transform(&self) -> Gaussian {
        let amp = self.amp * (I / self.z).sqrt() * Complex64::from_polar(1.0, 2.0 * PI * self.xi0 * self.x0);
        Gaussian { amp, z: -1.0 / self.z, x0: self.xi0, xi0: -self.x0 }
    }

    /// `|g(x)|`, nonincreasing in `|x - x0|`.
    pub fn envelope(&self, x: f64) -> f64 {
        let d = x - self.x0;
        self.amp.norm() * (-PI * self.z.im * d * d).exp()
    }
}

/// `exp(-s / (1 - u^2))` for `|u| < 1`, `u = (x - center) / halfwidth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub halfwidth: f64,
    pub exponent: f64,
}

impl Bump {
    pub fn new(center: f64, halfwidth: f64, exponent: f64) -> Result<Self> {
        if !(halfwidth > 0.0 && exponent > 0.0 && center.is_finite() && halfwidth.is_finite()) {
            return Err(Error::Invalid(format!("bump ({center}, {halfwidth}, {exponent})")));
        }
        Ok(Self { center, halfwidth, exponent })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.halfwidth;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        (-self.exponent / (1.0 - u * u)).exp()
    }

    // derivative of order 2 or 4 in x, from g = -s/(1 - u^2) = -(s/2)(1/(1-u) + 1/(1+u))
    fn derivative(&self, x: f64, order: u32) -> f64 {
        let u = (x - self.center) / self.halfwidth;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let s = self.exponent;
        let g = |k: i32| {
            let f = (1..=k).map(f64::from).product::<f64>();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            -0.5 * s * f * ((1.0 - u).powi(-(k + 1)) + sign * (1.0 + u).powi(-(k + 1)))
        };
        let (g1, g2, g3, g4) = (g(1), g(2), g(3), g(4));
        let poly = match order {
            2 => g2 + g1 * g1,
            4 => g4 + 4.0 * g1 * g3 + 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 + g1.powi(4),
            _ => unreachable!("only orders 2 and 4 are used"),
        };
        poly * self.eval(x) / self.halfwidth.powi(order as i32)
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.halfwidth, self.center + self.halfwidth)
    }

    /// Transform by composite Gauss-Legendre, doubling panels until two
    /// successive estimates agree to `tol`; returns the estimate and that
    /// difference as its error bound.
    pub fn transform(&self, xi: f64, tol: f64) -> Result<(Complex64, f64)> {
        if !(tol > 0.0) {
            return Err(Error::Invalid(format!("tolerance {tol}")));
        }
        let (a, b) = self.support();
        let f = |x: f64| Complex64::from_polar(self.eval(x), -2.0 * PI * x * xi);
        let waves = ((b - a) * xi.abs()).ceil() as usize;
        let mut panels = 8usize.max(2 * waves);
        let mut prev = integrate(f, a, b, panels);
        while panels <= 1 << 16 {
            panels *= 2;
            let next = integrate(f, a, b, panels);
            let err = (next - prev).norm();
            if err <= tol {
                return Ok((next, err));
            }
            prev = next;
        }
        Err(Error::Quadrature(tol))
    }

    /// `int |g^(k)|` for `k` in {2, 4}, so that `|g^(xi)| <= l1_derivative(k) / (2 pi xi)^k`.
    pub fn l1_derivative(&self, k: u32) -> f64 {
        let (a, b) = self.support();
        composite_nodes(a, b, 512, 10).into_iter().map(|(x, w)| self.derivative(x, k).abs() * w).sum()
    }

    /// Bound on the transform from the L1 norms of the bump and its second
    /// and fourth derivatives.
    pub fn transform_bound(&self) -> impl Fn(f64) -> f64 {
        let (l0, l2, l4) = (self.l1(), self.l1_derivative(2), self.l1_derivative(4));
        move |xi| {
            let t = (2.0 * PI * xi).abs();
            l0.min(l2 / (t * t)).min(l4 / t.powi(4))
        }
    }

    pub fn l1(&self) -> f64 {
        let (a, b) = self.support();
        composite_nodes(a, b, 256, 10).into_iter().map(|(x, w)| self.eval(x) * w).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestFunction {
    Gaussian(Gaussian),
    Bump(Bump),
}

/// Transform tolerance used for bumps.
pub const BUMP_TOL: f64 = 1e-12;

impl TestFunction {
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            TestFunction::Gaussian(g) => g.eval(x),
            TestFunction::Bump(b) => Complex64::new(b.eval(x), 0.0),
        }
    }

    /// Transform value and its numerical error bound.
    pub fn transform_at(&self, xi: f64) -> Result<(Complex64, f64)> {
        match self {
            TestFunction::Gaussian(g) => Ok((g.transform().eval(xi), 0.0)),
            TestFunction::Bump(b) => b.transform(xi, BUMP_TOL),
        }
    }

    fn envelope(&self) -> impl Fn(f64) -> f64 + '_ {
        move |x| match self {
            TestFunction::Gaussian(g) => g.envelope(x),
            TestFunction::Bump(b) => b.eval(x),
        }
    }

    fn transform_envelope(&self) -> Box<dyn Fn(f64) -> f64 + '_> {
        match self {
            TestFunction::Gaussian(g) => {
                let t = g.transform();
                Box::new(move |x| t.envelope(x))
            }
            TestFunction::Bump(b) => Box::new(b.transform_bound()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(with = "pair")]
    pub lhs: Complex64,
    #[serde(with = "pair")]
    pub rhs: Complex64,
    pub residual: f64,
    pub tails: [f64; 2],
    pub verdict: Verdict,
    pub params: serde_json::Value,
}

impl VerificationReport {
    /// Pass iff the residual and both tails are within `tol`; inconclusive
    /// when a tail alone exceeds it.
    pub fn judge(lhs: Complex64, rhs: Complex64, tails: [f64; 2], tol: f64, params: serde_json::Value) -> Self {
        let residual = (lhs - rhs).norm();
        let verdict = if tails.iter().any(|t| !(*t <= tol)) {
            Verdict::Inconclusive
        } else if residual <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self { lhs, rhs, residual, tails, verdict, params }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn transform_sum(m: &DiscreteMeasure, tf: &TestFunction) -> Result<(Complex64, f64)> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for a in m.atoms() {
        let (v, e) = tf.transform_at(a.x)?;
        acc += a.w * v;
        err += a.w.norm() * e;
    }
    Ok((acc, err))
}

/// `sum a(l) g(l)` against `sum w g^(gamma)`.
pub fn check_pair(p: &FsPair, tf: &TestFunction, tol: f64) -> Result<VerificationReport> {
    let lhs = p.a.pair_with(|x| tf.eval(x));
    let (rhs, quad) = transform_sum(&p.mu, tf)?;
    let tails = [p.a.tail_bound(tf.envelope()), p.mu.tail_bound(tf.transform_envelope()) + quad];
    let params = json!({
        "check": "pair",
        "testFunction": tf,
        "tol": tol,
        "muWindow": [p.mu.window().0, p.mu.window().1],
        "aWindow": [p.a.window().0, p.a.window().1],
        "muAtoms": p.mu.len(),
        "aAtoms": p.a.len(),
    });
    Ok(VerificationReport::judge(lhs, rhs, tails, tol, params))
}

/// `sum w g^(gamma)` against `sign sum w g(gamma)` for each test function.
pub fn check_selfdual(m: &DiscreteMeasure, suite: &[TestFunction], tol: f64) -> Result<Vec<VerificationReport>> {
    let sign = m.sign().ok_or_else(|| Error::Invalid("measure has no sign tag".into()))? as f64;
    suite
        .iter()
        .map(|tf| {
            let (lhs, quad) = transform_sum(m, tf)?;
            let rhs = m.pair_with(|x| tf.eval(x)) * sign;
            let tails = [m.tail_bound(tf.transform_envelope()) + quad, m.tail_bound(tf.envelope())];
            let params = json!({
                "check": "selfdual",
                "testFunction": tf,
                "tol": tol,
                "sign": sign,
                "window": [m.window().0, m.window().1],
                "atoms": m.len(),
            });
            Ok(VerificationReport::judge(lhs, rhs, tails, tol, params))
        })
        .collect()
}

fn fejer_kernel(w: Complex64, z: Complex64, x: f64) -> Complex64 {
    let wc = w.conj();
    let num = if x < 0.0 { (-2.0 * PI * I * wc * x.abs()).exp() } else { (2.0 * PI * I * z * x.abs()).exp() };
    num / (z - wc)
}

/// Fejer-weighted `sum a(l)(1 - |l|/T) g(w, z, l)` against
/// `(1/2 pi i) sum w_g / ((g - z)(g - conj w))`, the latter with the
/// mean-density estimate of the atoms beyond the window.
///
/// Tails report the taper bias bound (with the `a` tail) and the raw window
/// tail of the kernel sum.
pub fn fejer_identity_check(p: &FsPair, w: Complex64, z: Complex64, t: f64, tol: f64) -> Result<VerificationReport> {
    if !(w.im > 0.0) {
        return Err(Error::NotUpperHalfPlane(w));
    }
    if !(z.im > 0.0) {
        return Err(Error::NotUpperHalfPlane(z));
    }
    if !(t > 0.0) {
        return Err(Error::Invalid(format!("T = {t}")));
    }
    let wc = w.conj();
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut bias = 0.0;
    for a in p.a.atoms() {
        let g = fejer_kernel(w, z, a.x);
        let taper = 1.0 - a.x.abs() / t;
        if taper > 0.0 {
            lhs += a.w * g * taper;
        }
        bias += a.w.norm() * g.norm() * (a.x.abs() / t).min(1.0);
    }
    let decay = w.im.min(z.im);
    bias += p.a.tail_bound(|x| (-2.0 * PI * decay * x.abs()).exp() / (z - wc).norm());
    let kern = |g: f64| 1.0 / ((g - z) * (g - wc) * (2.0 * PI * I));
    let rhs = p.mu.pair_with(kern) + p.mu.tail_correction(kern);
    let window_tail = p.mu.tail_bound(|g| 1.0 / (2.0 * PI * (g - z).norm() * (g - wc).norm()));
    let params = json!({
        "check": "fejer",
        "w": [w.re, w.im],
        "z": [z.re, z.im],
        "T": t,
        "tol": tol,
        "muWindow": [p.mu.window().0, p.mu.window().1],
    });
    Ok(VerificationReport::judge(lhs, rhs, [bias, window_tail], tol, params))
}

/// `n` gaussians with `Im z` in `[0.5, 3]`, `Re z` in `[-1, 1]`, and shift
/// and modulation in `[-2, 2]`, drawn from a seeded stream.
pub fn gaussian_suite(seed: u64, n: usize) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(0.5..=3.0));
            let x0 = rng.gen_range(-2.0..=2.0);
            let xi0 = rng.gen_range(-2.0..=2.0);
            TestFunction::Gaussian(Gaussian { amp: Complex64::new(1.0, 0.0), z, x0, xi0 })
        })
        .collect()
}

/// Centered gaussians `exp(-pi y x^2)`.
pub fn heights_suite(ys: &[f64]) -> Result<Vec<TestFunction>> {
    ys.iter().map(|y| Ok(TestFunction::Gaussian(Gaussian::centered(Complex64::new(0.0, *y))?))).collect()
}
