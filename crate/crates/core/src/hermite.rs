//! Hermite-Biehler exponential sums `E = A - iB`.
//!
//! Validation is a sampled check on a rectangular grid in the upper half
//! plane. It is evidence, not proof: real-rootedness of an exponential sum
//! with incommensurable frequencies has no finite certificate.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freqalg::{ExpSum, Freq, FreqBasis};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rectangle `[x_min, x_max] x [y_min, y_max]` sampled on an `nx` by `ny` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// 400 x 50 points over `[-X, X] x [0.05, 5]`, `X` four periods of the
    /// slowest nonzero frequency of `e`.
    pub fn default_for(e: &ExpSum) -> Self {
        let slowest = e.spectrum().iter().map(|t| t.0.abs()).filter(|l| *l > 0.0).fold(f64::INFINITY, f64::min);
        let x = if slowest.is_finite() { 4.0 / slowest } else { 4.0 };
        Self { x_min: -x, x_max: x, y_min: 0.05, y_max: 5.0, nx: 400, ny: 50 }
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        let step = |lo: f64, hi: f64, n: usize, i: usize| {
            if n <= 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        (0..self.ny).flat_map(move |j| {
            let y = step(self.y_min, self.y_max, self.ny, j);
            (0..self.nx).map(move |i| Complex64::new(step(self.x_min, self.x_max, self.nx, i), y))
        })
    }
}

/// Parameters and margins of a successful sampled validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HbCertificate {
    pub grid: GridSpec,
    /// Smallest value of `1 - |E*|/|E|` over the grid.
    pub margin: f64,
    /// Smallest value of `Re(iA/B)` over the non-degenerate grid points.
    pub min_re_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HbVerdict {
    Accepted(HbCertificate),
    Rejected { witness: Complex64, reason: String },
}

impl HbVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, HbVerdict::Accepted(_))
    }
}

/// `A = (E* + E)/2`, `B = (E* - E)/(2i)`.
pub fn split_ab(e: &ExpSum) -> (ExpSum, ExpSum) {
    let es = e.star();
    let a = es.add(e).expect("same basis").scale(Complex64::new(0.5, 0.0));
    let b = es.sub(e).expect("same basis").scale(Complex64::new(0.0, -0.5));
    (a, b)
}

/// Sampled Hermite-Biehler test, with a real-axis preflight for zeros of `E`.
pub fn is_hermite_biehler(e: &ExpSum, grid: &GridSpec) -> Result<HbVerdict> {
    if grid.nx == 0 || grid.ny == 0 || e.is_zero() {
        return Err(Error::EmptyGrid);
    }
    if grid.y_min <= 0.0 || grid.y_max < grid.y_min || grid.x_max < grid.x_min {
        return Err(Error::Invalid("grid must lie in the upper half plane".into()));
    }
    if let Some(x) = real_zero(e, grid.x_min, grid.x_max)? {
        return Ok(HbVerdict::Rejected {
            witness: Complex64::new(x, 0.0),
            reason: "E vanishes on the real axis".into(),
        });
    }
    let es = e.star();
    let mut margin = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    for z in grid.points() {
        let ev = e.eval(z)?;
        let sv = es.eval(z)?;
        let ratio = sv.norm() / ev.norm();
        if ratio.is_nan() || ratio >= 1.0 {
            return Ok(HbVerdict::Rejected { witness: z, reason: "|E*| >= |E|".into() });
        }
        margin = margin.min(1.0 - ratio);
        let a = (sv + ev) * 0.5;
        let b = (sv - ev) / (2.0 * I);
        if b.norm() > 1e-10 * ev.norm() {
            let r = (I * a / b).re;
            if r <= 0.0 {
                return Ok(HbVerdict::Rejected { witness: z, reason: "Re(iA/B) <= 0".into() });
            }
            min_ratio = min_ratio.min(r);
        }
    }
    Ok(HbVerdict::Accepted(HbCertificate { grid: *grid, margin, min_re_ratio: min_ratio }))
}

// Local minima of |E| on the real axis that fall below a relative floor.
fn real_zero(e: &ExpSum, x0: f64, x1: f64) -> Result<Option<f64>> {
    let floor = 1e-9 * e.l1_norm();
    let fmax = e.max_abs_freq().max(1e-3);
    let n = (((x1 - x0) * 16.0 * fmax).ceil() as usize).max(2);
    let h = (x1 - x0) / n as f64;
    let m = |x: f64| e.eval(Complex64::new(x, 0.0)).map(|v| v.norm());
    let vals: Vec<f64> = (0..=n).map(|i| m(x0 + i as f64 * h)).collect::<Result<_>>()?;
    for i in 0..=n {
        if vals[i] <= floor {
            return Ok(Some(x0 + i as f64 * h));
        }
        if i > 0 && i < n && vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1] {
            let (x, v) =
                golden_min(|x| m(x).unwrap_or(f64::INFINITY), x0 + (i - 1) as f64 * h, x0 + (i + 1) as f64 * h);
            if v <= floor {
                return Ok(Some(x));
            }
        }
    }
    Ok(None)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// A validated Hermite-Biehler sum with its real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteBiehler {
    e: ExpSum,
    a: ExpSum,
    b: ExpSum,
    certificate: HbCertificate,
}

impl HermiteBiehler {
    pub fn new(e: ExpSum) -> Result<Self> {
        let grid = GridSpec::default_for(&e);
        Self::with_grid(e, &grid)
    }

    pub fn with_grid(e: ExpSum, grid: &GridSpec) -> Result<Self> {
        match is_hermite_biehler(&e, grid)? {
            HbVerdict::Accepted(certificate) => {
                let (a, b) = split_ab(&e);
                Ok(Self { e, a, b, certificate })
            }
            HbVerdict::Rejected { witness, reason } => Err(Error::NotHermiteBiehler { witness, reason }),
        }
    }

    #[cfg(test)]
    pub(crate) fn unchecked(e: ExpSum) -> Self {
        let (a, b) = split_ab(&e);
        let grid = GridSpec::default_for(&e);
        let certificate = HbCertificate { grid, margin: f64::NAN, min_re_ratio: f64::NAN };
        Self { e, a, b, certificate }
    }

    pub fn e(&self) -> &ExpSum {
        &self.e
    }

    pub fn a(&self) -> &ExpSum {
        &self.a
    }

    pub fn b(&self) -> &ExpSum {
        &self.b
    }

    pub fn certificate(&self) -> &HbCertificate {
        &self.certificate
    }

    /// `e^{i alpha} E` split into its real and imaginary parts.
    pub fn rotated(&self, alpha: f64) -> (ExpSum, ExpSum) {
        split_ab(&self.e.scale(Complex64::from_polar(1.0, alpha)))
    }
}

#[derive(Serialize, Deserialize)]
struct HbRepr {
    #[serde(rename = "E")]
    e: ExpSum,
    #[serde(rename = "A")]
    a: ExpSum,
    #[serde(rename = "B")]
    b: ExpSum,
    certificate: HbCertificate,
}

impl Serialize for HermiteBiehler {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HbRepr { e: self.e.clone(), a: self.a.clone(), b: self.b.clone(), certificate: self.certificate }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermiteBiehler {
    /// Re-validates `E` on the recorded grid.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = HbRepr::deserialize(d)?;
        HermiteBiehler::with_grid(r.e, &r.certificate.grid).map_err(serde::de::Error::custom)
    }
}

/// Kurasov-Sarnak lift `E = Q' - iQ`, so `A = Q'` and `B = Q`.
pub fn ks_from_q(q: &ExpSum) -> Result<HermiteBiehler> {
    if !q.is_star_fixed() {
        return Err(Error::Invalid("Q must be real on the real axis".into()));
    }
    let e = q.derivative().sub(&q.scale(I))?;
    HermiteBiehler::new(e)
}

fn check_unitary(u: &DMatrix<Complex64>) -> Result<()> {
    if !u.is_square() || u.nrows() == 0 {
        return Err(Error::Invalid("matrix must be square and nonempty".into()));
    }
    let n = u.nrows();
    let dev = (u.adjoint() * u - DMatrix::<Complex64>::identity(n, n)).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if dev > 1e-10 {
        return Err(Error::NonUnitary(dev));
    }
    Ok(())
}

/// `det(U + diag(e^{2 pi i l_j z}))`, expanded over subsets of the diagonal.
pub fn leeyang_trigpoly(u: &DMatrix<Complex64>, lengths: &[Freq], basis: &FreqBasis) -> Result<ExpSum> {
    check_unitary(u)?;
    let n = u.nrows();
    if lengths.len() != n {
        return Err(Error::Invalid(format!("{} lengths for a {n}x{n} matrix", lengths.len())));
    }
    for l in lengths {
        if basis.value(l) <= 0.0 || l.0.len() != basis.rank() {
            return Err(Error::Invalid("lengths must be positive frequencies of the basis".into()));
        }
    }
    if n > 20 {
        return Err(Error::Invalid("at most 20 lengths".into()));
    }
    let mut terms = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        let rest: Vec<usize> = (0..n).filter(|j| mask & (1 << j) == 0).collect();
        let minor = if rest.is_empty() {
            Complex64::new(1.0, 0.0)
        } else {
            u.select_rows(&rest).select_columns(&rest).determinant()
        };
        let mut k = Freq::zero(basis.rank());
        for (j, l) in lengths.iter().enumerate() {
            if mask & (1 << j) != 0 {
                k = k.add(l);
            }
        }
        terms.push((k, minor));
    }
    ExpSum::new(basis.clone(), terms)
}

/// The Lee-Yang polynomial times `det(U)^{-1/2} e^{-pi i L z}` with `L` the
/// sum of the lengths; star-fixed, over a basis with doubled denominator.
pub fn leeyang_star_fixed(u: &DMatrix<Complex64>, lengths: &[Freq], basis: &FreqBasis) -> Result<ExpSum> {
    let p = leeyang_trigpoly(u, lengths, basis)?.refine(2)?;
    let total = lengths.iter().fold(Freq::zero(basis.rank()), |acc, l| acc.add(l));
    let c = u.determinant().sqrt().inv();
    let q = p.shift(&total.neg())?.scale(c);
    let dev = q.sub(&q.star())?.l1_norm();
    if dev > 1e-9 * q.l1_norm() {
        return Err(Error::Degenerate(format!("normalized polynomial not real (deviation {dev:e})")));
    }
    Ok(q.add(&q.star())?.scale(Complex64::new(0.5, 0.0)))
}

/// Real roots found by a sign-change scan, and minima of `|B|` that look like
/// roots without a sign change.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RootScan {
    pub roots: Vec<f64>,
    pub suspected_double: Vec<f64>,
}

/// Roots of a real-on-real sum in `[x0, x1]`.
pub fn real_roots(b: &ExpSum, x0: f64, x1: f64) -> Result<RootScan> {
    if b.is_zero() {
        return Err(Error::Degenerate("identically zero".into()));
    }
    if !(x0.is_finite() && x1.is_finite()) || x1 < x0 {
        return Err(Error::Invalid(format!("interval [{x0}, {x1}]")));
    }
    let span = b.span();
    if span == 0.0 {
        // a single real exponential term never vanishes
        return Ok(RootScan::default());
    }
    let f = |x: f64| b.eval(Complex64::new(x, 0.0)).map(|v| v.re);
    let n = (((x1 - x0) * 8.0 * span).ceil() as usize).max(1);
    let h = (x1 - x0) / n as f64;
    if x1 > x0 && (h <= 0.0 || x0 + h == x0 || x1 - h == x1) {
        return Err(Error::StepUnderflow(x0));
    }
    let xs: Vec<f64> = (0..=n).map(|i| if i == n { x1 } else { x0 + i as f64 * h }).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let tol = 1e-12 * b.l1_norm();
    let is_zero = |v: f64| v.abs() <= tol;
    let mut out = RootScan::default();
    let push = |r: f64, out: &mut RootScan| {
        if out.roots.last().is_none_or(|&p| (r - p).abs() > 1e-10) {
            out.roots.push(r);
        }
    };
    for i in 0..=n {
        if is_zero(vs[i]) {
            let r = if i > 0 && i < n && vs[i - 1] * vs[i + 1] < 0.0 && !is_zero(vs[i - 1]) && !is_zero(vs[i + 1]) {
                bisect(&f, xs[i - 1], xs[i + 1], vs[i - 1])?
            } else {
                xs[i]
            };
            push(r, &mut out);
        } else if i > 0 && !is_zero(vs[i - 1]) && (vs[i - 1] < 0.0) != (vs[i] < 0.0) {
            let r = bisect(&f, xs[i - 1], xs[i], vs[i - 1])?;
            push(r, &mut out);
        } else if i > 0
            && i < n
            && !is_zero(vs[i - 1])
            && !is_zero(vs[i + 1])
            && (vs[i - 1] < 0.0) == (vs[i] < 0.0)
            && (vs[i + 1] < 0.0) == (vs[i] < 0.0)
            && vs[i].abs() < vs[i - 1].abs()
            && vs[i].abs() <= vs[i + 1].abs()
        {
            let (x, v) = golden_min(|x| f(x).map(f64::abs).unwrap_or(f64::INFINITY), xs[i - 1], xs[i + 1]);
            if v <= 1e-8 * b.l1_norm() {
                out.suspected_double.push(x);
            }
        }
    }
    Ok(out)
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `phi'(x) = Re(i E'(x) / E(x))`.
pub fn phase_derivative(h: &HermiteBiehler, x: f64) -> Result<f64> {
    let (v, d) = h.e.eval_with_derivative(Complex64::new(x, 0.0))?;
    if v.norm() <= 1e-12 * h.e.l1_norm() {
        return Err(Error::RealZero(x));
    }
    Ok((I * d / v).re)
}

/// A zero of `B_alpha` with its weight `A_alpha / B_alpha'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub gamma: f64,
    pub phase_residue_weight: f64,
    pub alpha: f64,
}

/// Zeros of `B_alpha` in `[x0, x1]` and their residue weights.
pub fn phase_points(h: &HermiteBiehler, alpha: f64, x0: f64, x1: f64) -> Result<Vec<PhasePoint>> {
    if !(0.0..PI).contains(&alpha) {
        return Err(Error::Invalid(format!("alpha {alpha} outside [0, pi)")));
    }
    let (a, b) = h.rotated(alpha);
    let scan = real_roots(&b, x0, x1)?;
    if let Some(x) = scan.suspected_double.first() {
        return Err(Error::Degenerate(format!("multiple zero of B near {x}")));
    }
    let bp = b.derivative();
    scan.roots
        .into_iter()
        .map(|g| {
            let z = Complex64::new(g, 0.0);
            let w = a.eval(z)?.re / bp.eval(z)?.re;
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Degenerate(format!("residue weight {w} at {g}")));
            }
            Ok(PhasePoint { gamma: g, phase_residue_weight: w, alpha })
        })
        .collect()
}
