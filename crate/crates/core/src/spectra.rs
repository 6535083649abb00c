//! Spectral coefficients of `f = iA/B`, exactly by geometric division and
//! numerically by tapered Bohr mean values, plus Fejer reconstruction.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freqalg::{ExpSum, Freq, FreqBasis};
use crate::hermite::HermiteBiehler;
use crate::quadrature::composite_nodes;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Mean values `E f(lambda)` on a finitely generated frequency set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumAtoms {
    basis: FreqBasis,
    atoms: BTreeMap<Freq, Complex64>,
    cutoff: Freq,
    y_valid: f64,
    /// `|a(lambda)| <= coeff_bound * exp(2 pi lambda y_valid)` for every frequency.
    coeff_bound: f64,
}

impl SpectrumAtoms {
    pub fn basis(&self) -> &FreqBasis {
        &self.basis
    }

    pub fn atoms(&self) -> &BTreeMap<Freq, Complex64> {
        &self.atoms
    }

    pub fn cutoff(&self) -> &Freq {
        &self.cutoff
    }

    pub fn cutoff_value(&self) -> f64 {
        self.basis.value(&self.cutoff)
    }

    pub fn y_valid(&self) -> f64 {
        self.y_valid
    }

    pub fn coeff_bound(&self) -> f64 {
        self.coeff_bound
    }

    /// `(value, coefficient)` in ascending frequency.
    pub fn sorted(&self) -> Vec<(f64, Complex64)> {
        let mut v: Vec<(f64, Complex64)> = self.atoms.iter().map(|(k, c)| (self.basis.value(k), *c)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    /// Coefficient at a numeric frequency, zero when absent.
    pub fn at_value(&self, lambda: f64) -> Complex64 {
        self.atoms
            .iter()
            .find(|(k, _)| (self.basis.value(k) - lambda).abs() <= 1e-9 * (1.0 + lambda.abs()))
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }

    /// The mean value at frequency zero.
    pub fn constant(&self) -> Complex64 {
        self.atoms.get(&Freq::zero(self.basis.rank())).copied().unwrap_or_default()
    }

    /// Bound on `sum |a(lambda)| e^{-2 pi lambda y}` over frequencies above
    /// the cutoff, assuming at most `count_rate` frequencies per unit length.
    pub fn tail_bound(&self, y: f64, count_rate: f64) -> f64 {
        let d = y - self.y_valid;
        if d <= 0.0 {
            return f64::INFINITY;
        }
        let l0 = self.cutoff_value();
        self.coeff_bound * count_rate * (-2.0 * PI * l0 * d).exp() / (2.0 * PI * d)
    }
}

fn sup_bound(g: &ExpSum, y: f64) -> f64 {
    g.spectrum().iter().map(|(l, c)| c.norm() * (-2.0 * PI * l * y).exp()).sum()
}

/// Term map of `iA/B` up to `cutoff`, via `1/(1 - g) = sum g^n`.
pub fn exact_spectrum(h: &HermiteBiehler, cutoff: &Freq) -> Result<SpectrumAtoms> {
    let (a, b) = (h.a(), h.b());
    let basis = b.basis().clone();
    if cutoff.0.len() != basis.rank() {
        return Err(Error::RankMismatch { expected: basis.rank(), got: cutoff.0.len() });
    }
    let cap = basis.value(cutoff);
    if cap < 0.0 {
        return Err(Error::Invalid(format!("negative cutoff {cap}")));
    }
    let (theta0, b0) = b.lowest().ok_or_else(|| Error::Degenerate("B is zero".into()))?;
    let theta0 = theta0.clone();
    let (alpha0, _) = a.lowest().ok_or_else(|| Error::Degenerate("A is zero".into()))?;
    if *alpha0 != theta0 {
        return Err(Error::FrequencyMismatch);
    }
    let shift = theta0.neg();
    let inv = b0.inv();
    let g = ExpSum::new(
        basis.clone(),
        b.terms().iter().filter(|(k, _)| **k != theta0).map(|(k, c)| (k.add(&shift), -c * inv)),
    )?;
    let delta = g.spectrum().first().map(|t| t.0);
    if let Some(d) = delta {
        if d <= 0.0 {
            return Err(Error::ZeroGap);
        }
    }
    let prefactor = a.shift(&shift)?.scale(I * inv);
    let one = ExpSum::constant(basis.clone(), Complex64::new(1.0, 0.0));
    let steps = delta.map_or(0, |d| (cap / d).ceil() as usize);
    let mut power = one.clone();
    let mut sum = one;
    for _ in 0..steps {
        power = power.mul(&g)?.truncate(cutoff)?;
        if power.is_zero() {
            break;
        }
        sum = sum.add(&power)?;
    }
    let out = prefactor.mul(&sum)?.truncate(cutoff)?;
    if let Some((k, _)) = out.terms().iter().find(|(k, _)| basis.value(k) < 0.0) {
        return Err(Error::Degenerate(format!("negative frequency {:?} in spectrum", k.0)));
    }
    let mut y_valid = 0.0;
    if !g.is_zero() {
        let mut k = 1u32;
        loop {
            y_valid = 0.01 * k as f64;
            if sup_bound(&g, y_valid) < 0.5 {
                break;
            }
            if k > 1_000_000 {
                return Err(Error::Degenerate("no half plane where the expansion converges".into()));
            }
            k += 1;
        }
    }
    // |1/(1-g)| <= 2 on Im z >= y_valid, so Cauchy bounds the coefficients
    let coeff_bound = 2.0 * sup_bound(&prefactor, y_valid);
    Ok(SpectrumAtoms { basis, atoms: out.terms().clone(), cutoff: cutoff.clone(), y_valid, coeff_bound })
}

/// Weighting of the averaging window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    None,
    Fejer,
}

// Panels are 0.25 wide, or half a wavelength of the fastest target frequency
// when that is shorter; 8 Gauss nodes each.
fn mean_nodes(t: f64, taper: Taper, fastest: f64) -> Result<(Vec<(f64, f64)>, f64)> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Invalid(format!("averaging length {t}")));
    }
    let width = 0.25f64.min(0.5 / (fastest + 1.0));
    let mut panels = (2.0 * t / width).ceil() as usize;
    panels += panels % 2;
    let nodes = composite_nodes(-t, t, panels, 8)
        .into_iter()
        .map(|(x, w)| match taper {
            Taper::None => (x, w),
            Taper::Fejer => (x, w * (1.0 - x.abs() / t)),
        })
        .collect();
    let norm = match taper {
        Taper::None => 2.0 * t,
        Taper::Fejer => t,
    };
    Ok((nodes, norm))
}

/// `(1/2T) int_{-T}^{T} w(x/T) f(x+iy) e^{-2 pi i lambda (x+iy)} dx` with
/// `w` normalized to unit mean.
pub fn mean_value<F>(f: F, lambda: f64, y: f64, t: f64, taper: Taper) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    Ok(mean_values(f, &[lambda], y, t, taper)?[0])
}

/// Mean values at several frequencies from one set of samples.
pub fn mean_values<F>(f: F, lambdas: &[f64], y: f64, t: f64, taper: Taper) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let fastest = lambdas.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let (nodes, norm) = mean_nodes(t, taper, fastest)?;
    let samples: Vec<(f64, Complex64)> = nodes
        .iter()
        .map(|&(x, w)| {
            let v = f(Complex64::new(x, y))?;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFiniteSample(x));
            }
            Ok((x, v * w))
        })
        .collect::<Result<_>>()?;
    lambdas
        .iter()
        .map(|&lam| {
            let growth = 2.0 * PI * lam * y;
            if growth > 709.0 {
                return Err(Error::Range(Complex64::new(lam, y)));
            }
            let acc: Complex64 =
                samples.iter().map(|&(x, v)| v * Complex64::from_polar(1.0, -2.0 * PI * lam * x)).sum();
            Ok(acc * growth.exp() / norm)
        })
        .collect()
}

/// `a0/2 + sum_{0 < lambda < T} a(lambda) (1 - lambda/T) e^{2 pi i lambda z}`.
pub fn fejer_reconstruct(a: &SpectrumAtoms, a0: f64, t: f64, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.5 * a0, 0.0);
    for (lam, c) in a.sorted() {
        if lam <= 0.0 || lam >= t {
            continue;
        }
        acc += c * (1.0 - lam / t) * (I * 2.0 * PI * lam * z).exp();
    }
    acc
}

/// `iA(z)/B(z)`.
pub fn herglotz_function(h: &HermiteBiehler, z: Complex64) -> Result<Complex64> {
    Ok(I * h.a().eval(z)? / h.b().eval(z)?)
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    k: Vec<i64>,
    c: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct SpectrumRepr {
    basis: Vec<f64>,
    denominator: i64,
    terms: Vec<TermRepr>,
    cutoff: Vec<i64>,
    #[serde(rename = "yValid")]
    y_valid: f64,
    #[serde(rename = "coeffBound")]
    coeff_bound: f64,
}

impl Serialize for SpectrumAtoms {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpectrumRepr {
            basis: self.basis.base().to_vec(),
            denominator: self.basis.denominator(),
            terms: self.atoms.iter().map(|(k, c)| TermRepr { k: k.0.clone(), c: [c.re, c.im] }).collect(),
            cutoff: self.cutoff.0.clone(),
            y_valid: self.y_valid,
            coeff_bound: self.coeff_bound,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectrumAtoms {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SpectrumRepr::deserialize(d)?;
        let basis = FreqBasis::new(r.basis, r.denominator).map_err(serde::de::Error::custom)?;
        let sum = ExpSum::new(basis.clone(), r.terms.into_iter().map(|t| (Freq(t.k), Complex64::new(t.c[0], t.c[1]))))
            .map_err(serde::de::Error::custom)?;
        Ok(SpectrumAtoms {
            basis,
            atoms: sum.terms().clone(),
            cutoff: Freq(r.cutoff),
            y_valid: r.y_valid,
            coeff_bound: r.coeff_bound,
        })
    }
}
