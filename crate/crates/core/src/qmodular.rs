//! Exact q-series with rational exponents: Dedekind eta, eta products with
//! rational powers, the lambda invariant, and the self-dual series built from
//! them.
//!
//! All arithmetic is exact. Exponents are `Ratio<i64>`, coefficients are
//! `BigRational`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::{Integer, Roots};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Exponent = Ratio<i64>;

fn ex(n: i64, d: i64) -> Exponent {
    Ratio::new(n, d)
}

fn big(r: Exponent) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Truncated formal series `sum c_e q^e`; every exponent is below `order`
/// and the coefficients of exponents below `order` are exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    terms: BTreeMap<Exponent, BigRational>,
    order: Exponent,
}

impl QSeries {
    pub fn zero(order: Exponent) -> Self {
        Self { terms: BTreeMap::new(), order }
    }

    pub fn one(order: Exponent) -> Self {
        Self::from_terms(order, [(Exponent::zero(), BigRational::one())])
    }

    /// Drops zero coefficients and exponents at or above `order`; repeated
    /// exponents are summed.
    pub fn from_terms<I: IntoIterator<Item = (Exponent, BigRational)>>(order: Exponent, terms: I) -> Self {
        let mut map: BTreeMap<Exponent, BigRational> = BTreeMap::new();
        for (e, c) in terms {
            if e < order {
                *map.entry(e).or_insert_with(BigRational::zero) += c;
            }
        }
        map.retain(|_, c| !c.is_zero());
        Self { terms: map, order }
    }

    pub fn order(&self) -> Exponent {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, BigRational> {
        &self.terms
    }

    pub fn coeff(&self, e: Exponent) -> BigRational {
        self.terms.get(&e).cloned().unwrap_or_else(BigRational::zero)
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

    pub fn leading(&self) -> Option<(Exponent, &BigRational)> {
        self.terms.iter().next().map(|(e, c)| (*e, c))
    }

    /// Exponent of the leading term, or `order` for the zero series.
    pub fn valuation(&self) -> Exponent {
        self.leading().map_or(self.order, |(e, _)| e)
    }

    pub fn truncate(&self, order: Exponent) -> Self {
        let order = order.min(self.order);
        Self::from_terms(order, self.terms.range(..order).map(|(e, c)| (*e, c.clone())))
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        Self::from_terms(order, self.terms.iter().chain(&other.terms).map(|(e, c)| (*e, c.clone())))
    }

    pub fn neg(&self) -> Self {
        self.scale(&-BigRational::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::from_terms(self.order, self.terms.iter().map(|(e, v)| (*e, v * c)))
    }

    /// Multiplication by `q^e`.
    pub fn shift(&self, e: Exponent) -> Self {
        Self::from_terms(self.order + e, self.terms.iter().map(|(x, c)| (*x + e, c.clone())))
    }

    /// Substitution `q -> q^f` for `f > 0`.
    pub fn dilate(&self, f: Exponent) -> Result<Self> {
        if f <= Exponent::zero() {
            return Err(Error::Invalid(format!("dilation factor {f}")));
        }
        Ok(Self::from_terms(self.order * f, self.terms.iter().map(|(x, c)| (*x * f, c.clone()))))
    }

    /// Product, exact to `min(order_a + val_b, order_b + val_a)`.
    pub fn mul(&self, other: &Self) -> Self {
        let order = (self.order + other.valuation()).min(other.order + self.valuation());
        // integer numerators over one common denominator per operand
        let (na, da) = common_denominator(&self.terms);
        let (nb, db) = common_denominator(&other.terms);
        let mut acc: BTreeMap<Exponent, BigInt> = BTreeMap::new();
        for (ea, ca) in &na {
            for (eb, cb) in &nb {
                let e = *ea + *eb;
                if e >= order {
                    break;
                }
                *acc.entry(e).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
        let den = da * db;
        Self::from_terms(order, acc.into_iter().map(|(e, n)| (e, BigRational::new(n, den.clone()))))
    }

    /// `u^r`, exact to the same precision relative to the leading term.
    pub fn qpow(&self, r: Exponent) -> Result<Self> {
        let (e0, c0) = self.leading().ok_or_else(|| Error::Invalid("power of the zero series".into()))?;
        let c0 = c0.clone();
        let c0r = rational_power(&c0, r)?;
        let lead = e0 * r;
        let rel = self.order - e0;
        // v = u / (c0 q^e0) - 1 on the lattice (1/l) Z
        let l = self.terms.keys().fold(rel.denom().lcm(&1), |acc, e| acc.lcm((*e - e0).denom()));
        let idx = |e: Exponent| -> i64 { ((e - e0) * l).to_integer() };
        let v: Vec<(i64, BigRational)> = self.terms.iter().skip(1).map(|(e, c)| (idx(*e), c / &c0)).collect();
        let count = (rel * l).ceil().to_integer().max(0);
        let rb = big(r);
        let mut w: Vec<BigRational> = Vec::with_capacity(count as usize);
        if count > 0 {
            w.push(BigRational::one());
        }
        for m in 1..count {
            let mut s = BigRational::zero();
            for (j, vj) in &v {
                if *j > m {
                    break;
                }
                let f = &rb * BigRational::from(BigInt::from(*j)) - BigRational::from(BigInt::from(m - j));
                s += f * vj * &w[(m - j) as usize];
            }
            w.push(s / BigRational::from(BigInt::from(m)));
        }
        Ok(Self::from_terms(lead + rel, w.into_iter().enumerate().map(|(m, c)| (lead + ex(m as i64, l), c * &c0r))))
    }

    /// Numerical value at `q = exp(2 pi i z)` with principal fractional powers
    /// taken as `exp(2 pi i e z)`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let x = e.to_f64().unwrap_or(f64::NAN);
                (Complex64::new(0.0, 2.0 * PI * x) * z).exp() * c.to_f64().unwrap_or(f64::NAN)
            })
            .sum()
    }
}

fn common_denominator(terms: &BTreeMap<Exponent, BigRational>) -> (Vec<(Exponent, BigInt)>, BigInt) {
    let den = terms.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let nums = terms.iter().map(|(e, c)| (*e, c.numer() * (&den / c.denom()))).collect();
    (nums, den)
}

fn rational_power(c: &BigRational, r: Exponent) -> Result<BigRational> {
    let k = *r.denom();
    let root = if k == 1 {
        c.clone()
    } else {
        let kk = u32::try_from(k).map_err(|_| Error::IrrationalPower(format!("{c}^{r}")))?;
        let fail = || Error::IrrationalPower(format!("({c})^({r}) is not rational"));
        if c.is_negative() && k % 2 == 0 {
            return Err(fail());
        }
        let n = c.numer().nth_root(kk);
        let d = c.denom().nth_root(kk);
        if n.pow(kk) != *c.numer() || d.pow(kk) != *c.denom() {
            return Err(fail());
        }
        BigRational::new(n, d)
    };
    let p = *r.numer();
    let e = i32::try_from(p).map_err(|_| Error::Invalid(format!("power {r} too large")))?;
    Ok(root.pow(e))
}

#[derive(Serialize, Deserialize)]
struct QTerm {
    e: String,
    c: String,
}

#[derive(Serialize, Deserialize)]
struct QSeriesRepr {
    order: String,
    terms: Vec<QTerm>,
}

impl Serialize for QSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QSeriesRepr {
            order: self.order.to_string(),
            terms: self.terms.iter().map(|(e, c)| QTerm { e: e.to_string(), c: c.to_string() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = QSeriesRepr::deserialize(d)?;
        let order: Exponent = r.order.parse().map_err(|_| D::Error::custom(format!("bad order {}", r.order)))?;
        let mut terms = Vec::with_capacity(r.terms.len());
        for t in r.terms {
            let e: Exponent = t.e.parse().map_err(|_| D::Error::custom(format!("bad exponent {}", t.e)))?;
            let c: BigRational = t.c.parse().map_err(|_| D::Error::custom(format!("bad coefficient {}", t.c)))?;
            if e >= order {
                return Err(D::Error::custom(format!("exponent {e} not below order {order}")));
            }
            terms.push((e, c));
        }
        Ok(QSeries::from_terms(order, terms))
    }
}

/// Kronecker character mod 12 on the residues 1, 5, 7, 11.
pub fn chi12(n: i64) -> i64 {
    match n.rem_euclid(12) {
        1 | 11 => 1,
        5 | 7 => -1,
        _ => 0,
    }
}

/// `eta(d z) = sum_{n >= 1} chi12(n) q^{d n^2 / 24}` below `order`.
pub fn eta_dilated(d: Exponent, order: Exponent) -> QSeries {
    let mut terms = Vec::new();
    let mut n = 1i64;
    loop {
        let e = d * ex(n * n, 24);
        if e >= order {
            break;
        }
        let c = chi12(n);
        if c != 0 {
            terms.push((e, BigRational::from(BigInt::from(c))));
        }
        n += 1;
    }
    QSeries::from_terms(order, terms)
}

pub fn eta_expansion(order: Exponent) -> QSeries {
    eta_dilated(Exponent::one(), order)
}

/// Levels and rational powers `r_d` of an eta product `prod eta(d z)^{r_d}`,
/// with `sum d r_d = 24 k / b` in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EtaProductSpec {
    level: u64,
    r: BTreeMap<u64, Exponent>,
    b: i64,
    k: i64,
}

pub fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

impl EtaProductSpec {
    /// Checks `r_d = r_{N/d}`, `sum r_d = 1`, and `sum d r_d >= 0`. Divisors
    /// missing from `r` have exponent zero.
    pub fn new(level: u64, r: BTreeMap<u64, Exponent>) -> Result<Self> {
        if level == 0 {
            return Err(Error::EtaConditions("level must be positive".into()));
        }
        if let Some(d) = r.keys().find(|d| **d == 0 || !level.is_multiple_of(**d)) {
            return Err(Error::EtaConditions(format!("{d} does not divide {level}")));
        }
        let get = |d: u64| r.get(&d).copied().unwrap_or_else(Exponent::zero);
        for d in divisors(level) {
            if get(d) != get(level / d) {
                return Err(Error::EtaConditions(format!("r_{d} != r_{}", level / d)));
            }
        }
        let total: Exponent = r.values().sum();
        if total != Exponent::one() {
            return Err(Error::EtaConditions(format!("sum of r_d is {total}, not 1")));
        }
        let weighted: Exponent = r.iter().map(|(d, v)| *v * (*d as i64)).sum();
        if weighted < Exponent::zero() {
            return Err(Error::EtaConditions(format!("sum d r_d = {weighted} is negative")));
        }
        let kb = weighted / 24;
        let (k, b) = (*kb.numer(), *kb.denom());
        let r = r.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(Self { level, r, b, k })
    }

    /// Exponents listed for the divisors of `level` in increasing order.
    pub fn from_divisor_list(level: u64, r: &[Exponent]) -> Result<Self> {
        let ds = divisors(level);
        if ds.len() != r.len() {
            return Err(Error::EtaConditions(format!("{level} has {} divisors, got {} exponents", ds.len(), r.len())));
        }
        Self::new(level, ds.into_iter().zip(r.iter().copied()).collect())
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn r(&self) -> &BTreeMap<u64, Exponent> {
        &self.r
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn leading_exponent(&self) -> Exponent {
        ex(self.k, self.b)
    }
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    #[serde(rename = "N")]
    level: u64,
    r: BTreeMap<u64, String>,
    #[serde(default, skip_deserializing)]
    b: i64,
    #[serde(default, skip_deserializing)]
    k: i64,
}

impl Serialize for EtaProductSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpecRepr {
            level: self.level,
            r: self.r.iter().map(|(d, v)| (*d, v.to_string())).collect(),
            b: self.b,
            k: self.k,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EtaProductSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rep = SpecRepr::deserialize(d)?;
        let mut r = BTreeMap::new();
        for (d, v) in rep.r {
            r.insert(d, v.parse().map_err(|_| D::Error::custom(format!("bad exponent {v}")))?);
        }
        EtaProductSpec::new(rep.level, r).map_err(D::Error::custom)
    }
}

fn sigma1(n: i64) -> i64 {
    let mut s = 0;
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            s += d;
            if d * d != n {
                s += n / d;
            }
        }
        d += 1;
    }
    s
}

/// `prod_i eta(d_i z)^{r_i}` to `rel` beyond its leading exponent, by the
/// logarithmic-derivative recurrence on integers.
///
/// With `L` the common denominator of the `d_i` and `R` that of the `r_i`,
/// the integer-power product `G = prod (1 - s^{L d_i n})^{R r_i}` in
/// `s = q^{1/L}` has integer coefficients, and `W_m = R^{2m} [s^m] G^{1/R}`
/// is again an integer, so no rational arithmetic is needed until the end.
pub fn eta_quotient(factors: &[(Exponent, Exponent)], rel: Exponent) -> Result<QSeries> {
    if factors.iter().any(|(d, _)| *d <= Exponent::zero()) {
        return Err(Error::Invalid("eta dilation must be positive".into()));
    }
    let lead: Exponent = factors.iter().map(|(d, r)| *d * *r).sum::<Exponent>() / 24;
    let l = factors.iter().fold(1i64, |acc, (d, _)| acc.lcm(d.denom()));
    let rr = factors.iter().fold(1i64, |acc, (_, r)| acc.lcm(r.denom()));
    let parts: Vec<(i64, i64)> = factors.iter().map(|(d, r)| ((*d * l).to_integer(), (*r * rr).to_integer())).collect();
    let count = (rel * l).ceil().to_integer().max(0) as usize;
    if count == 0 {
        return Ok(QSeries::zero(lead + rel));
    }
    let c: Vec<i64> = (0..count as i64)
        .map(|j| {
            if j == 0 {
                return 0;
            }
            parts.iter().filter(|(dd, _)| j % dd == 0).map(|(dd, a)| a * dd * sigma1(j / dd)).sum()
        })
        .collect();
    // m g_m = -sum_j c_j g_{m-j}
    let mut g: Vec<BigInt> = vec![BigInt::one()];
    for m in 1..count {
        let mut s = BigInt::zero();
        for j in 1..=m {
            if c[j] != 0 {
                s -= &g[m - j] * c[j];
            }
        }
        let (q, rem) = s.div_rem(&BigInt::from(m));
        debug_assert!(rem.is_zero());
        g.push(q);
    }
    let rb = BigInt::from(rr);
    let coeffs: Vec<BigRational> = if rr == 1 {
        g.into_iter().map(BigRational::from).collect()
    } else {
        // m W_m = (1/R) sum_j (j - R(m - j)) g_j W_{m-j} R^{2j}, Horner in R^2
        let r2 = &rb * &rb;
        let mut w: Vec<BigInt> = vec![BigInt::one()];
        for m in 1..count {
            let mut acc = BigInt::zero();
            for j in (1..=m).rev() {
                acc *= &r2;
                if !g[j].is_zero() {
                    let e = j as i64 - rr * (m - j) as i64;
                    acc += &g[j] * &w[m - j] * e;
                }
            }
            acc *= &r2;
            let (q, rem) = acc.div_rem(&(&rb * BigInt::from(m)));
            if !rem.is_zero() {
                return Err(Error::Invalid("non-integral root coefficient".into()));
            }
            w.push(q);
        }
        let mut den = BigInt::one();
        w.into_iter()
            .map(|x| {
                let v = BigRational::new(x, den.clone());
                den *= &r2;
                v
            })
            .collect()
    };
    Ok(QSeries::from_terms(lead + rel, coeffs.into_iter().enumerate().map(|(m, v)| (lead + ex(m as i64, l), v))))
}

fn spec_factors(spec: &EtaProductSpec) -> Vec<(Exponent, Exponent)> {
    spec.r.iter().map(|(d, r)| (Exponent::from_integer(*d as i64), *r)).collect()
}

/// `prod eta(d z)^{r_d}` with all exponents below `order`.
pub fn eta_product(spec: &EtaProductSpec, order: Exponent) -> Result<QSeries> {
    let lead = spec.leading_exponent();
    let rel = (order - lead).max(Exponent::zero());
    let s = eta_quotient(&spec_factors(spec), rel)?.truncate(order);
    check_lattice(spec, &s)?;
    Ok(s)
}

/// Same series as `eta_product`, built from `eta_dilated`, `qpow` and `mul`.
pub fn eta_product_generic(spec: &EtaProductSpec, order: Exponent) -> Result<QSeries> {
    let lead = spec.leading_exponent();
    let rel = (order - lead).max(Exponent::zero());
    let mut acc = QSeries::one(rel);
    for (d, r) in spec_factors(spec) {
        let base = eta_dilated(d, d / 24 + rel);
        acc = acc.mul(&base.qpow(r)?);
    }
    let s = acc.truncate(order);
    check_lattice(spec, &s)?;
    Ok(s)
}

fn check_lattice(spec: &EtaProductSpec, s: &QSeries) -> Result<()> {
    for e in s.terms.keys() {
        let n = *e * spec.b;
        if !n.is_integer() || n.to_integer() < spec.k || (n.to_integer() - spec.k) % spec.b != 0 {
            return Err(Error::ExponentLattice(format!("exponent {e} outside ({} + Z)/{}", spec.k, spec.b)));
        }
    }
    Ok(())
}

/// `16 eta(2z)^16 eta(z/2)^8 / eta(z)^24` below `order`.
pub fn lambda_invariant(order: Exponent) -> Result<QSeries> {
    if order <= ex(1, 2) {
        return Err(Error::Invalid(format!("order {order} must exceed 1/2")));
    }
    let factors = [(ex(2, 1), ex(16, 1)), (ex(1, 2), ex(8, 1)), (ex(1, 1), ex(-24, 1))];
    let s = eta_quotient(&factors, order - ex(1, 2))?;
    Ok(s.scale(&BigRational::from(BigInt::from(16))).truncate(order))
}

/// `F(z) = sum c_x exp(2 pi i x z / sqrt N)` from a q-series in
/// `t = exp(2 pi i z / sqrt N)`, with `F(-1/z) sqrt(i/z) = sign F(z)`.
/// Exponents are `n / scale` for integers `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfDualSeries {
    series: QSeries,
    scale: i64,
    radical: u64,
    sign: i8,
}

impl SelfDualSeries {
    pub fn new(series: QSeries, scale: i64, radical: u64, sign: i8) -> Result<Self> {
        if scale <= 0 || radical == 0 || (sign != 1 && sign != -1) {
            return Err(Error::Invalid(format!("scale {scale}, radical {radical}, sign {sign}")));
        }
        if let Some(e) = series.terms.keys().find(|e| !(**e * scale).is_integer() || **e < Exponent::zero()) {
            return Err(Error::ExponentLattice(format!("exponent {e} not in Z/{scale}")));
        }
        Ok(Self { series, scale, radical, sign })
    }

    pub fn series(&self) -> &QSeries {
        &self.series
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn radical(&self) -> u64 {
        self.radical
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// `(n, c_n)` with frequency `n / (scale sqrt N)`.
    pub fn indexed(&self) -> Vec<(i64, &BigRational)> {
        self.series.terms.iter().map(|(e, c)| ((*e * self.scale).to_integer(), c)).collect()
    }

    /// Coefficient `j` steps of `1` above the leading exponent.
    pub fn relative_coeff(&self, j: i64) -> BigRational {
        match self.series.leading() {
            Some((e0, _)) => self.series.coeff(e0 + j),
            None => BigRational::zero(),
        }
    }

    pub fn frequency(&self, e: Exponent) -> f64 {
        e.to_f64().unwrap_or(f64::NAN) / (self.radical as f64).sqrt()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.series.eval(z / (self.radical as f64).sqrt())
    }
}

/// `F_+(z) = eta(r, z / sqrt N)`.
pub fn fplus(spec: &EtaProductSpec, order: Exponent) -> Result<SelfDualSeries> {
    SelfDualSeries::new(eta_product(spec, order)?, spec.b, spec.level, 1)
}

pub fn isqrt_exact(n: u64) -> Option<u64> {
    let s = n.sqrt();
    (s * s == n).then_some(s)
}

/// `F_-(z) = (1 - 2 lambda(z)) eta(r, z / sqrt N)`; needs `N` square so both
/// factors live on one frequency lattice.
pub fn fminus(spec: &EtaProductSpec, order: Exponent) -> Result<SelfDualSeries> {
    let s = isqrt_exact(spec.level).ok_or(Error::NotSquare(spec.level))?;
    let s = s as i64;
    let eta = eta_product(spec, order)?;
    // lambda(z) as a series in t = q^{1/s}
    let lam = lambda_invariant(order / s + 1)?.dilate(Exponent::from_integer(s))?;
    let one = QSeries::one(lam.order());
    let factor = one.sub(&lam.scale(&BigRational::from(BigInt::from(2))));
    let series = factor.mul(&eta).truncate(order);
    SelfDualSeries::new(series, 2 * spec.b, spec.level, -1)
}

/// `N = 4`, `r = (l, 1 - 2l, l)`: the spec and its `F_+`, `F_-` series.
pub fn family_l(l: Exponent, order: Exponent) -> Result<(EtaProductSpec, SelfDualSeries, SelfDualSeries)> {
    if l < Exponent::from_integer(-2) {
        return Err(Error::Invalid(format!("l = {l} below -2")));
    }
    let spec = EtaProductSpec::from_divisor_list(4, &[l, Exponent::one() - l * 2, l])?;
    debug_assert_eq!(spec.leading_exponent(), (l + 2) / 24);
    let plus = fplus(&spec, order)?;
    let minus = fminus(&spec, order)?;
    Ok((spec, plus, minus))
}

/// Number of `n` in `0..=nmax` with `sqrt(c + n)` within `1e-9` of
/// `start + m step` for some integer `m >= 0`.
pub fn progression_hits(c: f64, start: f64, step: f64, nmax: u64) -> Result<usize> {
    if !(step > 0.0 && step.is_finite() && start.is_finite() && c.is_finite()) {
        return Err(Error::Invalid(format!("progression ({start}, {step}) with c = {c}")));
    }
    let mut hits = 0;
    for n in 0..=nmax {
        let v = c + n as f64;
        if v < 0.0 {
            continue;
        }
        let x = v.sqrt();
        let m = ((x - start) / step).round();
        if m >= 0.0 && (x - (start + m * step)).abs() <= 1e-9 {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Growth of `|c_n| / n^{1/4}` over the indexed coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HeckeReport {
    pub n_max: i64,
    pub constant: f64,
    pub first_half_constant: f64,
    pub second_half_constant: f64,
    pub fitted_exponent: Option<f64>,
    pub degraded: bool,
}

pub fn hecke_report(s: &SelfDualSeries, n_max: i64) -> HeckeReport {
    let pts: Vec<(i64, f64)> = s
        .indexed()
        .into_iter()
        .filter(|(n, _)| *n >= 1 && *n <= n_max)
        .map(|(n, c)| (n, c.to_f64().unwrap_or(f64::NAN).abs()))
        .collect();
    let ratio = |lo: i64, hi: i64| {
        pts.iter().filter(|(n, _)| *n > lo && *n <= hi).map(|(n, v)| v / (*n as f64).powf(0.25)).fold(0.0, f64::max)
    };
    let first = ratio(0, n_max / 2);
    let second = ratio(n_max / 2, n_max);
    let mut blocks = Vec::new();
    let mut hi = n_max;
    while hi >= 16 {
        let m = pts.iter().filter(|(n, _)| *n > hi / 2 && *n <= hi).map(|p| p.1).fold(0.0, f64::max);
        if m > 0.0 {
            blocks.push(((hi as f64 * 0.75).ln(), m.ln()));
        }
        hi /= 2;
    }
    let fitted = fit_slope(&blocks);
    let degraded = fitted.is_some_and(|p| p > 0.35) || (first > 0.0 && second > 2.0 * first);
    HeckeReport {
        n_max,
        constant: first.max(second),
        first_half_constant: first,
        second_half_constant: second,
        fitted_exponent: fitted,
        degraded,
    }
}

fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn int(n: i64) -> Exponent {
        Exponent::from_integer(n)
    }

    fn guinand() -> EtaProductSpec {
        EtaProductSpec::from_divisor_list(4, &[ex(2, 3), ex(-1, 3), ex(2, 3)]).unwrap()
    }

    fn theta_spec() -> EtaProductSpec {
        EtaProductSpec::from_divisor_list(4, &[int(-2), int(5), int(-2)]).unwrap()
    }

    #[test]
    fn eta_leading_terms() {
        let e = eta_expansion(int(8));
        let got: Vec<(Exponent, BigRational)> = e.terms().iter().take(5).map(|(a, b)| (*a, b.clone())).collect();
        let want = [(1, 1), (25, -1), (49, -1), (121, 1), (169, 1)];
        for ((ge, gc), (we, wc)) in got.iter().zip(want) {
            assert_eq!(*ge, ex(we, 24));
            assert_eq!(*gc, q(wc, 1));
        }
        assert!(eta_expansion(ex(1, 24)).is_empty());
    }

    #[test]
    fn eta_matches_euler_product() {
        let order = int(48);
        let mut p = QSeries::one(order);
        for n in 1..48 {
            let f = QSeries::from_terms(order, [(int(0), q(1, 1)), (int(n), q(-1, 1))]);
            p = p.mul(&f);
        }
        let prod = p.shift(ex(1, 24)).truncate(order);
        assert_eq!(prod, eta_expansion(order));
    }

    #[test]
    fn binomial_square_root() {
        let u = QSeries::from_terms(int(6), [(int(0), q(1, 1)), (int(1), q(-1, 1))]);
        let h = u.qpow(ex(1, 2)).unwrap();
        assert_eq!(h.coeff(int(0)), q(1, 1));
        assert_eq!(h.coeff(int(1)), q(-1, 2));
        assert_eq!(h.coeff(int(2)), q(-1, 8));
        assert_eq!(h.coeff(int(3)), q(-1, 16));
        assert_eq!(u.qpow(int(0)).unwrap(), QSeries::one(int(6)));
        assert_eq!(u.qpow(int(1)).unwrap(), u);
    }

    #[test]
    fn power_of_non_unit_leading_coefficient() {
        let u = QSeries::from_terms(int(4), [(int(2), q(4, 9)), (int(3), q(1, 1))]);
        let h = u.qpow(ex(1, 2)).unwrap();
        assert_eq!(h.leading().unwrap(), (int(1), &q(2, 3)));
        let v = QSeries::from_terms(int(4), [(int(0), q(2, 1))]);
        assert!(matches!(v.qpow(ex(1, 2)), Err(Error::IrrationalPower(_))));
        let n = QSeries::from_terms(int(4), [(int(0), q(-1, 1))]);
        assert!(n.qpow(ex(1, 2)).is_err());
        assert_eq!(n.qpow(ex(1, 3)).unwrap().coeff(int(0)), q(-1, 1));
    }

    #[test]
    fn guinand_coefficients() {
        let spec = guinand();
        assert_eq!((spec.k(), spec.b()), (1, 9));
        let s = eta_product(&spec, int(7)).unwrap();
        let want = [(1, 1), (-2, 3), (-4, 9), (-40, 81), (-160, 243), (268, 729), (1808, 6561)];
        for (m, (n, d)) in want.iter().enumerate() {
            assert_eq!(s.coeff(ex(1, 9) + m as i64), q(*n, *d), "c_{m}");
        }
        assert_eq!(s.len(), 7);
    }

    #[test]
    fn theta_series() {
        let s = eta_product(&theta_spec(), int(400)).unwrap();
        let mut want = vec![(int(0), q(1, 1))];
        want.extend((1..20).map(|n| (int(n * n), q(2, 1))));
        assert_eq!(s, QSeries::from_terms(int(400), want));
    }

    #[test]
    fn fast_and_generic_routes_agree() {
        for spec in [guinand(), theta_spec(), EtaProductSpec::from_divisor_list(1, &[int(1)]).unwrap()] {
            let order = int(25);
            assert_eq!(eta_product(&spec, order).unwrap(), eta_product_generic(&spec, order).unwrap());
        }
        let eta = eta_product(&EtaProductSpec::from_divisor_list(1, &[int(1)]).unwrap(), int(30)).unwrap();
        assert_eq!(eta, eta_expansion(int(30)));
        let (spec, _, _) = family_l(ex(5, 7), int(10)).unwrap();
        assert_eq!(eta_product(&spec, int(12)).unwrap(), eta_product_generic(&spec, int(12)).unwrap());
    }

    #[test]
    fn spec_conditions() {
        assert!(EtaProductSpec::from_divisor_list(4, &[int(1), int(0), int(0)]).is_err());
        assert!(EtaProductSpec::from_divisor_list(4, &[int(1), int(1), int(1)]).is_err());
        assert!(EtaProductSpec::from_divisor_list(4, &[int(1), int(1)]).is_err());
        let p = theta_spec();
        assert_eq!((p.k(), p.b()), (0, 1));
        let j = serde_json::to_string(&guinand()).unwrap();
        assert_eq!(j, r#"{"N":4,"r":{"1":"2/3","2":"-1/3","4":"2/3"},"b":9,"k":1}"#);
        let back: EtaProductSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, guinand());
    }

    #[test]
    fn lambda_leading_terms() {
        let l = lambda_invariant(int(3)).unwrap();
        assert_eq!(l.coeff(ex(1, 2)), q(16, 1));
        assert_eq!(l.coeff(int(1)), q(-128, 1));
        assert_eq!(l.coeff(ex(3, 2)), q(704, 1));
        assert_eq!(l.valuation(), ex(1, 2));
        let one_minus = QSeries::one(int(3)).sub(&l.scale(&q(2, 1)));
        assert_eq!(one_minus.leading().unwrap(), (int(0), &q(1, 1)));
        assert!(lambda_invariant(ex(1, 2)).is_err());
    }

    #[test]
    fn lambda_generic_route() {
        let order = int(5);
        let rel = order - ex(1, 2);
        let mut acc = QSeries::one(rel);
        for (d, r) in [(ex(2, 1), int(16)), (ex(1, 2), int(8)), (int(1), int(-24))] {
            acc = acc.mul(&eta_dilated(d, d / 24 + rel).qpow(r).unwrap());
        }
        assert_eq!(acc.scale(&q(16, 1)).truncate(order), lambda_invariant(order).unwrap());
    }

    fn l_values() -> Vec<Exponent> {
        vec![int(-2), ex(2, 3), int(1), int(5)]
    }

    #[test]
    fn family_coefficient_laws() {
        for l in l_values() {
            let (spec, plus, minus) = family_l(l, int(6)).unwrap();
            let lb = big(l);
            let one = BigRational::one();
            assert_eq!(plus.relative_coeff(0), one);
            assert_eq!(plus.relative_coeff(1), -lb.clone());
            assert_eq!(plus.relative_coeff(2), (&lb - &one) * (&lb + q(2, 1)) / q(2, 1));
            assert_eq!(minus.relative_coeff(1), -(q(32, 1) + &lb));
            assert_eq!(minus.relative_coeff(2), (&lb * &lb + q(65, 1) * &lb + q(510, 1)) / q(2, 1));
            assert_eq!(minus.sign(), -1);
            assert_eq!(spec.leading_exponent(), (l + 2) / 24);
        }
        let (_, p, _) = family_l(int(-2), int(50)).unwrap();
        assert_eq!(p.series(), &eta_product(&theta_spec(), int(50)).unwrap());
        assert!(family_l(int(-3), int(5)).is_err());
    }

    #[test]
    fn factorial_times_coefficient_is_integer_polynomial() {
        let ls: Vec<i64> = (-2..=4).collect();
        let rows: Vec<Vec<BigRational>> = ls
            .iter()
            .map(|&l| {
                let (_, p, _) = family_l(int(l), int(8)).unwrap();
                (0..=6).map(|n| p.relative_coeff(n)).collect()
            })
            .collect();
        let mut fact = BigRational::one();
        for n in 0..=6usize {
            if n > 0 {
                fact *= q(n as i64, 1);
            }
            let pts: Vec<(BigRational, BigRational)> =
                ls.iter().zip(&rows).map(|(l, r)| (q(*l, 1), &r[n] * &fact)).collect();
            let poly = interpolate(&pts);
            assert!(poly.iter().all(|c| c.is_integer()), "n = {n}: {poly:?}");
            // the interpolant also predicts a non-integer l
            let l = q(2, 3);
            let val = poly.iter().rev().fold(BigRational::zero(), |acc, c| acc * &l + c);
            let (_, g, _) = family_l(ex(2, 3), int(8)).unwrap();
            assert_eq!(val, g.relative_coeff(n as i64) * &fact);
        }
    }

    // Newton form expanded to monomial coefficients.
    fn interpolate(pts: &[(BigRational, BigRational)]) -> Vec<BigRational> {
        let n = pts.len();
        let mut dd: Vec<BigRational> = pts.iter().map(|p| p.1.clone()).collect();
        for j in 1..n {
            for i in (j..n).rev() {
                dd[i] = (&dd[i] - &dd[i - 1]) / (&pts[i].0 - &pts[i - j].0);
            }
        }
        let mut poly = vec![BigRational::zero(); n];
        for i in (0..n).rev() {
            // poly = poly * (x - x_i) + dd[i]
            let mut next = vec![BigRational::zero(); n];
            for k in 0..n {
                if k + 1 < n {
                    next[k + 1] += &poly[k];
                }
                next[k] -= &poly[k] * &pts[i].0;
            }
            next[0] += &dd[i];
            poly = next;
        }
        poly
    }

    #[test]
    fn fminus_requires_square_level() {
        let s2 = EtaProductSpec::from_divisor_list(2, &[ex(1, 2), ex(1, 2)]).unwrap();
        assert_eq!((s2.k(), s2.b()), (1, 16));
        assert!(matches!(fminus(&s2, int(3)), Err(Error::NotSquare(2))));
        assert!(fplus(&s2, int(3)).is_ok());
    }

    #[test]
    fn fplus_frequencies() {
        let p = fplus(&theta_spec(), int(10)).unwrap();
        let idx: Vec<i64> = p.indexed().iter().map(|x| x.0).collect();
        assert_eq!(idx, vec![0, 1, 4, 9]);
        assert!((p.frequency(int(4)) - 2.0).abs() < 1e-15);
        let g = fplus(&guinand(), int(3)).unwrap();
        assert!(g.indexed().iter().all(|(n, _)| n % 9 == 1));
        assert_eq!(fplus(&theta_spec(), int(0)).unwrap().series().len(), 0);
    }

    #[test]
    fn progressions() {
        assert_eq!(progression_hits(0.0, 0.0, 1.0, 100).unwrap(), 11);
        assert_eq!(progression_hits(1.0 / 9.0, 1.0 / 3.0, 3.0, 10_000).unwrap(), 34);
        assert!(progression_hits(0.0, 0.0, 0.0, 10).is_err());
    }

    #[test]
    fn hecke_growth_is_tame() {
        let g = fplus(&guinand(), int(223)).unwrap();
        let r = hecke_report(&g, 2000);
        assert!(!r.degraded, "{r:?}");
        assert!(r.constant.is_finite() && r.constant > 0.0);
    }

    #[test]
    fn json_round_trip() {
        let s = eta_product(&guinand(), int(3)).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.starts_with(r#"{"order":"3","terms":[{"e":"1/9","c":"1"},{"e":"10/9","c":"-2/3"}"#), "{j}");
        let back: QSeries = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<QSeries>(r#"{"order":"1","terms":[{"e":"2","c":"1"}]}"#).is_err());
    }

    fn small_series() -> impl Strategy<Value = QSeries> {
        proptest::collection::vec((0i64..12, -5i64..=5, 1i64..4), 0..6).prop_map(|v| {
            let mut terms = vec![(int(0), q(1, 1))];
            terms.extend(v.into_iter().map(|(e, n, d)| (ex(e + 1, 2), q(n, d))));
            QSeries::from_terms(int(8), terms)
        })
    }

    proptest! {
        #[test]
        fn power_inverts(u in small_series(), p in 1i64..4, d in 1i64..4) {
            let r = ex(p, d);
            let back = u.qpow(r).unwrap().qpow(r.recip()).unwrap();
            prop_assert_eq!(back, u);
        }

        #[test]
        fn product_is_commutative_and_exact(a in small_series(), b in small_series()) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            let sq = a.qpow(int(2)).unwrap();
            prop_assert_eq!(sq, a.mul(&a));
        }
    }
}
