//! Exact frequency bookkeeping for finite exponential sums.
//!
//! A frequency is an integer vector `k` over a fixed basis of positive reals,
//! read as `sum(k_j * base_j) / denominator`. Merging and comparison use the
//! integer vectors, so two terms collapse only when their vectors agree.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest exponent accepted before `exp` overflows.
const EXP_LIMIT: f64 = 709.0;

/// Positive, distinct reals together with a common positive denominator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreqBasis {
    base: Vec<f64>,
    denominator: i64,
}

impl PartialEq for FreqBasis {
    fn eq(&self, other: &Self) -> bool {
        self.denominator == other.denominator
            && self.base.len() == other.base.len()
            && self.base.iter().zip(&other.base).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl FreqBasis {
    pub fn new(base: Vec<f64>, denominator: i64) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::InvalidBasis("empty basis".into()));
        }
        if denominator <= 0 {
            return Err(Error::InvalidBasis(format!("denominator {denominator} must be positive")));
        }
        for (i, b) in base.iter().enumerate() {
            if !b.is_finite() || *b <= 0.0 {
                return Err(Error::InvalidBasis(format!("entry {b} is not a positive finite real")));
            }
            if base[..i].iter().any(|c| c == b) {
                return Err(Error::InvalidBasis(format!("entry {b} repeated")));
            }
        }
        Ok(Self { base, denominator })
    }

    /// The basis `{1}` with denominator 1, i.e. integer frequencies.
    pub fn integers() -> Self {
        Self { base: vec![1.0], denominator: 1 }
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn denominator(&self) -> i64 {
        self.denominator
    }

    pub fn rank(&self) -> usize {
        self.base.len()
    }

    pub fn value(&self, k: &Freq) -> f64 {
        let s: f64 = k.0.iter().zip(&self.base).map(|(&n, &b)| n as f64 * b).sum();
        s / self.denominator as f64
    }

    fn check(&self, k: &Freq) -> Result<()> {
        if k.0.len() != self.base.len() {
            return Err(Error::RankMismatch { expected: self.base.len(), got: k.0.len() });
        }
        Ok(())
    }
}

/// Integer coordinate vector of a frequency. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Freq(pub Vec<i64>);

impl Freq {
    pub fn zero(rank: usize) -> Self {
        Freq(vec![0; rank])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&n| n == 0)
    }

    pub fn add(&self, other: &Freq) -> Freq {
        Freq(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Freq) -> Freq {
        Freq(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Freq {
        Freq(self.0.iter().map(|a| -a).collect())
    }
}

/// Finite sum `sum c_k exp(2 pi i lambda_k z)` over a shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    basis: FreqBasis,
    terms: BTreeMap<Freq, Complex64>,
    // (frequency value, coefficient) in ascending frequency order
    sorted: Vec<(f64, Complex64)>,
}

impl ExpSum {
    /// Builds a sum, merging repeated frequencies and dropping zero coefficients.
    pub fn new<I>(basis: FreqBasis, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Freq, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (k, c) in terms {
            basis.check(&k)?;
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Invalid(format!("non-finite coefficient {c}")));
            }
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Ok(Self::from_map(basis, map))
    }

    fn from_map(basis: FreqBasis, mut terms: BTreeMap<Freq, Complex64>) -> Self {
        terms.retain(|_, c| c.re != 0.0 || c.im != 0.0);
        let mut sorted: Vec<(f64, Complex64)> = terms.iter().map(|(k, c)| (basis.value(k), *c)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { basis, terms, sorted }
    }

    pub fn zero(basis: FreqBasis) -> Self {
        Self::from_map(basis, BTreeMap::new())
    }

    pub fn constant(basis: FreqBasis, c: Complex64) -> Self {
        let rank = basis.rank();
        Self::from_map(basis, BTreeMap::from([(Freq::zero(rank), c)]))
    }

    pub fn monomial(basis: FreqBasis, k: Freq, c: Complex64) -> Result<Self> {
        Self::new(basis, [(k, c)])
    }

    pub fn basis(&self) -> &FreqBasis {
        &self.basis
    }

    pub fn terms(&self) -> &BTreeMap<Freq, Complex64> {
        &self.terms
    }

    pub fn coeff(&self, k: &Freq) -> Complex64 {
        self.terms.get(k).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(value, coefficient)` pairs in ascending frequency.
    pub fn spectrum(&self) -> &[(f64, Complex64)] {
        &self.sorted
    }

    /// Term with the smallest frequency value.
    pub fn lowest(&self) -> Option<(&Freq, Complex64)> {
        self.terms.iter().min_by(|a, b| self.basis.value(a.0).total_cmp(&self.basis.value(b.0))).map(|(k, c)| (k, *c))
    }

    pub fn highest(&self) -> Option<(&Freq, Complex64)> {
        self.terms.iter().max_by(|a, b| self.basis.value(a.0).total_cmp(&self.basis.value(b.0))).map(|(k, c)| (k, *c))
    }

    /// Width of the frequency support.
    pub fn span(&self) -> f64 {
        match (self.sorted.first(), self.sorted.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0.0,
        }
    }

    /// Largest absolute frequency value.
    pub fn max_abs_freq(&self) -> f64 {
        self.sorted.iter().map(|t| t.0.abs()).fold(0.0, f64::max)
    }

    /// Sum of coefficient moduli.
    pub fn l1_norm(&self) -> f64 {
        self.sorted.iter().map(|t| t.1.norm()).sum()
    }

    /// Evaluates at `z`, summing terms in ascending frequency.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(lam, c) in &self.sorted {
            let decay = -2.0 * PI * lam * z.im;
            if decay > EXP_LIMIT {
                return Err(Error::Range(z));
            }
            let phase = 2.0 * PI * lam * z.re;
            acc += c * Complex64::from_polar(decay.exp(), phase);
        }
        Ok(acc)
    }

    /// Value and first derivative at `z` in one pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for &(lam, c) in &self.sorted {
            let decay = -2.0 * PI * lam * z.im;
            if decay > EXP_LIMIT {
                return Err(Error::Range(z));
            }
            let e = c * Complex64::from_polar(decay.exp(), 2.0 * PI * lam * z.re);
            v += e;
            d += e * Complex64::new(0.0, 2.0 * PI * lam);
        }
        Ok((v, d))
    }

    fn same_basis(&self, other: &ExpSum) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &ExpSum) -> Result<ExpSum> {
        self.same_basis(other)?;
        let mut map = self.terms.clone();
        for (k, c) in &other.terms {
            *map.entry(k.clone()).or_default() += c;
        }
        Ok(Self::from_map(self.basis.clone(), map))
    }

    pub fn sub(&self, other: &ExpSum) -> Result<ExpSum> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> ExpSum {
        let map = self.terms.iter().map(|(k, c)| (k.clone(), c * s)).collect();
        Self::from_map(self.basis.clone(), map)
    }

    /// Multiplies every term by `exp(2 pi i shift z)`.
    pub fn shift(&self, shift: &Freq) -> Result<ExpSum> {
        self.basis.check(shift)?;
        let map = self.terms.iter().map(|(k, c)| (k.add(shift), *c)).collect();
        Ok(Self::from_map(self.basis.clone(), map))
    }

    /// Product; fails when the bases differ.
    pub fn mul(&self, other: &ExpSum) -> Result<ExpSum> {
        self.same_basis(other)?;
        let mut map: BTreeMap<Freq, Complex64> = BTreeMap::new();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                *map.entry(k1.add(k2)).or_default() += c1 * c2;
            }
        }
        Ok(Self::from_map(self.basis.clone(), map))
    }

    /// Keeps only terms whose frequency value does not exceed `limit`.
    /// A term whose vector equals `limit` exactly is kept.
    pub fn truncate(&self, limit: &Freq) -> Result<ExpSum> {
        self.basis.check(limit)?;
        let cap = self.basis.value(limit);
        let map = self
            .terms
            .iter()
            .filter(|(k, _)| *k == limit || self.basis.value(k) <= cap)
            .map(|(k, c)| (k.clone(), *c))
            .collect();
        Ok(Self::from_map(self.basis.clone(), map))
    }

    /// Reflection `conj(f(conj z))`: conjugate coefficients, negated frequencies.
    pub fn star(&self) -> ExpSum {
        let map = self.terms.iter().map(|(k, c)| (k.neg(), c.conj())).collect();
        Self::from_map(self.basis.clone(), map)
    }

    pub fn is_star_fixed(&self) -> bool {
        self.star().terms == self.terms
    }

    pub fn derivative(&self) -> ExpSum {
        let map = self
            .terms
            .iter()
            .map(|(k, c)| {
                let lam = self.basis.value(k);
                (k.clone(), c * Complex64::new(0.0, 2.0 * PI * lam))
            })
            .collect();
        Self::from_map(self.basis.clone(), map)
    }

    /// Same function over a basis whose denominator is `factor` times larger.
    pub fn refine(&self, factor: i64) -> Result<ExpSum> {
        if factor <= 0 {
            return Err(Error::InvalidBasis(format!("refinement factor {factor}")));
        }
        let basis = FreqBasis::new(self.basis.base.clone(), self.basis.denominator * factor)?;
        let map = self.terms.iter().map(|(k, c)| (Freq(k.0.iter().map(|n| n * factor).collect()), *c)).collect();
        Ok(Self::from_map(basis, map))
    }

    /// Drops coefficients below `rel * l1_norm`.
    pub fn prune(&self, rel: f64) -> ExpSum {
        let floor = rel * self.l1_norm();
        let map = self.terms.iter().filter(|(_, c)| c.norm() > floor).map(|(k, c)| (k.clone(), *c)).collect();
        Self::from_map(self.basis.clone(), map)
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    k: Vec<i64>,
    c: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct ExpSumRepr {
    basis: Vec<f64>,
    denominator: i64,
    terms: Vec<TermRepr>,
}

impl Serialize for ExpSum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ExpSumRepr {
            basis: self.basis.base.clone(),
            denominator: self.basis.denominator,
            terms: self.terms.iter().map(|(k, c)| TermRepr { k: k.0.clone(), c: [c.re, c.im] }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExpSum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ExpSumRepr::deserialize(d)?;
        let basis = FreqBasis::new(r.basis, r.denominator).map_err(serde::de::Error::custom)?;
        ExpSum::new(basis, r.terms.into_iter().map(|t| (Freq(t.k), Complex64::new(t.c[0], t.c[1]))))
            .map_err(serde::de::Error::custom)
    }
}
