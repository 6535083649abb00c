//! Reproducing kernels of de Branges spaces: the closed form, its expansion
//! over the zeros of `B`, and the sampling series through those zeros.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::freqalg::ExpSum;
use crate::hermite::{phase_points, HermiteBiehler, PhasePoint};
use crate::measures::{Atom, DiscreteMeasure};

const I: Complex64 = Complex64::new(0.0, 1.0);
const CONFLUENT: f64 = 1e-8;
const NODE_TOL: f64 = 1e-12;
const SAMPLE_MATCH: f64 = 1e-9;

/// An `E` together with the zeros of `B` in `[-R, R]` and their weights `1/phi'`.
#[derive(Debug, Clone)]
pub struct KernelContext {
    h: HermiteBiehler,
    roots: Vec<PhasePoint>,
    radius: f64,
    // A, B and their first two derivatives
    a: [ExpSum; 3],
    b: [ExpSum; 3],
    weights: DiscreteMeasure,
}

impl KernelContext {
    pub fn new(h: HermiteBiehler, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::Invalid(format!("kernel radius {radius}")));
        }
        let roots = if radius > 0.0 { phase_points(&h, 0.0, -radius, radius)? } else { Vec::new() };
        let a0 = h.a().clone();
        let b0 = h.b().clone();
        let a = [a0.clone(), a0.derivative(), a0.derivative().derivative()];
        let b = [b0.clone(), b0.derivative(), b0.derivative().derivative()];
        let atoms = roots.iter().map(|p| Atom::real(p.gamma, p.phase_residue_weight)).collect();
        let weights = DiscreteMeasure::new(atoms, (-radius, radius))?;
        Ok(Self { h, roots, radius, a, b, weights })
    }

    pub fn hb(&self) -> &HermiteBiehler {
        &self.h
    }

    pub fn roots(&self) -> &[PhasePoint] {
        &self.roots
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn ab(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        Ok((self.a[0].eval(z)?, self.b[0].eval(z)?))
    }
}

/// `K(w, z) = (B(z) conj A(w) - conj B(w) A(z)) / (pi (z - conj w))`, with a
/// second-order Taylor branch once `z` is within `1e-8` of `conj w`.
pub fn kernel_closed(ctx: &KernelContext, w: Complex64, z: Complex64) -> Result<Complex64> {
    let (aw, bw) = ctx.ab(w)?;
    let (aw, bw) = (aw.conj(), bw.conj());
    let wc = w.conj();
    let d = z - wc;
    if d.norm() < CONFLUENT {
        // N(s) = B(s) conj A(w) - A(s) conj B(w) vanishes at conj w
        let n1 = ctx.b[1].eval(wc)? * aw - ctx.a[1].eval(wc)? * bw;
        let n2 = ctx.b[2].eval(wc)? * aw - ctx.a[2].eval(wc)? * bw;
        return Ok((n1 + 0.5 * n2 * d) / PI);
    }
    let (az, bz) = ctx.ab(z)?;
    Ok((bz * aw - bw * az) / (PI * d))
}

/// The same kernel as `(E(z) conj E(w) - E*(z) conj E*(w)) / (2 pi i (conj w - z))`.
pub fn kernel_e_form(ctx: &KernelContext, w: Complex64, z: Complex64) -> Result<Complex64> {
    let e = ctx.h.e();
    let star = |s: Complex64| -> Result<Complex64> { Ok(e.eval(s.conj())?.conj()) };
    let num = e.eval(z)? * e.eval(w)?.conj() - star(z)? * star(w)?.conj();
    Ok(num / (2.0 * PI * I * (w.conj() - z)))
}

/// A truncated series over the stored zeros, with and without the
/// mean-density estimate of the zeros beyond `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    #[serde(with = "crate::measures::pair")]
    pub raw: Complex64,
    #[serde(with = "crate::measures::pair")]
    pub corrected: Complex64,
    /// Bound on what the raw sum misses.
    pub tail_bound: f64,
    /// Error estimate of `corrected`: midpoint-rule error of the continuation
    /// plus accumulated rounding.
    pub correction_error: f64,
}

fn check_off_nodes(ctx: &KernelContext, z: Complex64) -> Result<()> {
    if z.im.abs() >= 1e-6 {
        return Ok(());
    }
    let i = ctx.roots.partition_point(|p| p.gamma < z.re);
    for p in ctx.roots[i.saturating_sub(1)..(i + 1).min(ctx.roots.len())].iter() {
        let dist = (z - p.gamma).norm();
        if dist < 1e-6 {
            return Err(Error::PoleProximity { z, dist });
        }
    }
    Ok(())
}

/// `K(w, z)` from `pi K = sum (1/phi'(g)) B(z) conj B(w) / ((g - z)(g - conj w))`.
pub fn kernel_series(ctx: &KernelContext, w: Complex64, z: Complex64) -> Result<SeriesValue> {
    check_off_nodes(ctx, w.conj())?;
    check_off_nodes(ctx, z)?;
    let bz = ctx.b[0].eval(z)?;
    let bw = ctx.b[0].eval(w)?.conj();
    let wc = w.conj();
    let scale = bz * bw / PI;
    let term = |g: f64| scale / ((g - z) * (g - wc));
    let mut abs_sum = 0.0;
    let raw: Complex64 = ctx
        .roots
        .iter()
        .map(|p| {
            let t = p.phase_residue_weight * term(p.gamma);
            abs_sum += t.norm();
            t
        })
        .sum();
    let m = &ctx.weights;
    let tail_bound = m.tail_bound(|g| scale.norm() / ((g - z).norm() * (g - wc).norm()).max(f64::MIN_POSITIVE));
    let correction = m.tail_correction(term);
    let rounding = f64::EPSILON * (ctx.roots.len() as f64).sqrt() * abs_sum;
    Ok(SeriesValue {
        raw,
        corrected: raw + correction,
        tail_bound,
        correction_error: m.tail_correction_error(term) + rounding,
    })
}

fn lookup(samples: &[(f64, Complex64)], g: f64) -> Result<Complex64> {
    let i = samples.partition_point(|s| s.0 < g);
    [i.checked_sub(1), Some(i)]
        .into_iter()
        .flatten()
        .filter_map(|j| samples.get(j))
        .find(|s| (s.0 - g).abs() <= SAMPLE_MATCH * g.abs().max(1.0))
        .map(|s| s.1)
        .ok_or(Error::MissingSample(g))
}

// Least-squares fit of F/A ~ c / (g - s) on the outermost nodes.
fn fit_pole(nodes: &[(f64, Complex64)]) -> Option<(Complex64, Complex64)> {
    let n = nodes.len() as f64;
    let (mut sg, mut sgg, mut sb0, mut sb1) =
        (Complex64::new(0.0, 0.0), 0.0, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for &(x, g) in nodes {
        sg += g;
        sgg += g.norm_sqr();
        sb0 += g * x;
        sb1 += g.conj() * g * x;
    }
    // rows [1, g] against right side g x, unknowns (c, s)
    let det = n * sgg - sg.norm_sqr();
    if !(det > 1e-300 && sgg > 0.0 && det > 1e-12 * n * sgg) {
        return None;
    }
    let c = (sgg * sb0 - sg * sb1) / det;
    let s = (n * sb1 - sg.conj() * sb0) / det;
    Some((c, s))
}

/// `F(z) = sum F(g) B(z) / (B'(g)(z - g))` over the stored zeros.
///
/// Every stored zero needs a sample within `1e-9` (relative). The correction
/// assumes `F/A` decays like `c/(g - s)` beyond the window, which holds for
/// kernels `K(w, .)`.
pub fn sampling_eval(ctx: &KernelContext, samples: &[(f64, Complex64)], z: Complex64) -> Result<SeriesValue> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let vals: Vec<Complex64> = ctx.roots.iter().map(|p| lookup(&sorted, p.gamma)).collect::<Result<_>>()?;
    if let Some(k) = ctx.roots.iter().position(|p| (z - p.gamma).norm() < NODE_TOL) {
        let v = vals[k];
        return Ok(SeriesValue { raw: v, corrected: v, tail_bound: 0.0, correction_error: 0.0 });
    }
    let bz = ctx.b[0].eval(z)?;
    let mut ratios = Vec::with_capacity(vals.len());
    let mut raw = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    for (p, v) in ctx.roots.iter().zip(&vals) {
        let ag = ctx.a[0].eval(Complex64::new(p.gamma, 0.0))?;
        // F(g)/B'(g) = (F/A)(g) * (A/B')(g)
        let r = v / ag;
        let t = r * p.phase_residue_weight * bz / (z - p.gamma);
        abs_sum += t.norm();
        raw += t;
        ratios.push((p.gamma, r));
    }
    let rounding = f64::EPSILON * (vals.len() as f64).sqrt() * abs_sum;
    let n = ratios.len();
    let m = (n / 4).max(2);
    let fit = if n >= 8 {
        let outer: Vec<_> = ratios[..m].iter().chain(&ratios[n - m..]).copied().collect();
        fit_pole(&outer)
    } else {
        None
    };
    let Some((c, s)) = fit else {
        return Ok(SeriesValue { raw, corrected: raw, tail_bound: 0.0, correction_error: rounding });
    };
    let term = |g: f64| c / (g - s) * bz / (z - g);
    let wts = &ctx.weights;
    let tail_bound =
        wts.tail_bound(|g| (c.norm() * bz.norm()) / ((g - s).norm() * (g - z).norm()).max(f64::MIN_POSITIVE));
    Ok(SeriesValue {
        raw,
        corrected: raw + wts.tail_correction(term),
        tail_bound,
        correction_error: wts.tail_correction_error(term) + rounding,
    })
}
