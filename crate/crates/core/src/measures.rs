//! Discrete measures, Fourier summation pairs, and the Herglotz-Poisson
//! evaluator for measures built from phase data.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freqalg::{ExpSum, Freq};
use crate::hermite::{phase_points, HermiteBiehler};
use crate::quadrature::integrate_to_infinity;
use crate::spectra::exact_spectrum;

const I: Complex64 = Complex64::new(0.0, 1.0);
const MERGE_TOL: f64 = 1e-10;
const POLE_TOL: f64 = 1e-9;

/// Exact position `sqrt(2n / (b sqrt(N)))`, negated for atoms left of zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SqrtProvenance {
    pub n: i64,
    pub b: i64,
    pub radical: i64,
}

impl SqrtProvenance {
    pub fn magnitude(&self) -> f64 {
        (2.0 * self.n as f64 / (self.b as f64 * (self.radical as f64).sqrt())).sqrt()
    }
}

#[derive(Serialize, Deserialize)]
struct ProvRepr {
    form: String,
    n: i64,
    b: i64,
    #[serde(rename = "N")]
    radical: i64,
}

impl Serialize for SqrtProvenance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProvRepr { form: "sqrt".into(), n: self.n, b: self.b, radical: self.radical }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SqrtProvenance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ProvRepr::deserialize(d)?;
        if r.form != "sqrt" {
            return Err(serde::de::Error::custom(format!("unknown provenance form {}", r.form)));
        }
        if r.b <= 0 || r.radical <= 0 || r.n < 0 {
            return Err(serde::de::Error::custom("provenance integers out of range"));
        }
        Ok(SqrtProvenance { n: r.n, b: r.b, radical: r.radical })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prov: Option<SqrtProvenance>,
    #[serde(with = "pair")]
    pub w: Complex64,
}

impl Atom {
    pub fn new(x: f64, w: Complex64) -> Self {
        Self { x, prov: None, w }
    }

    pub fn real(x: f64, w: f64) -> Self {
        Self { x, prov: None, w: Complex64::new(w, 0.0) }
    }
}

pub(crate) mod pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// Power-law envelope `|w| <= c (1 + |x|)^p` and atom density near the
/// window edges, `density * (|x| / edge)^(growth - 1)` atoms per unit length
/// on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub c: f64,
    pub p: f64,
    pub density: f64,
    pub growth: f64,
}

/// Where the mean-density continuation of a measure starts on one side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeDensity {
    pub start: f64,
    pub rho: Complex64,
    pub gap: f64,
    /// `1` for the right edge, `-1` for the left.
    pub dir: f64,
}

/// Atoms sorted by position, with the window they were collected from.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
    window: (f64, f64),
    nonneg: bool,
    sign: Option<i8>,
    tail: Option<TailModel>,
}

fn same_point(a: &Atom, b: &Atom) -> bool {
    match (a.prov, b.prov) {
        (Some(p), Some(q)) => p == q && (a.x < 0.0) == (b.x < 0.0),
        _ => (a.x - b.x).abs() <= MERGE_TOL,
    }
}

impl DiscreteMeasure {
    /// Sorts and merges atoms; every atom must lie in the window.
    pub fn new(mut atoms: Vec<Atom>, window: (f64, f64)) -> Result<Self> {
        let (x0, x1) = window;
        if !(x0.is_finite() && x1.is_finite()) || x1 < x0 {
            return Err(Error::Invalid(format!("window [{x0}, {x1}]")));
        }
        for a in &atoms {
            if !(a.x.is_finite() && a.w.re.is_finite() && a.w.im.is_finite()) {
                return Err(Error::Invalid(format!("non-finite atom at {}", a.x)));
            }
            if a.x < x0 - 1e-12 || a.x > x1 + 1e-12 {
                return Err(Error::Invalid(format!("atom {} outside window [{x0}, {x1}]", a.x)));
            }
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if same_point(last, &a) => last.w += a.w,
                _ => merged.push(a),
            }
        }
        let tail = fit_tail(&merged, window);
        Ok(Self { atoms: merged, window, nonneg: false, sign: None, tail })
    }

    pub fn empty(window: (f64, f64)) -> Result<Self> {
        Self::new(Vec::new(), window)
    }

    /// Marks the measure nonnegative after checking every weight.
    pub fn with_nonneg(mut self) -> Result<Self> {
        if let Some(a) = self.atoms.iter().find(|a| a.w.im != 0.0 || a.w.re < 0.0) {
            return Err(Error::Invalid(format!("negative or complex weight {} at {}", a.w, a.x)));
        }
        self.nonneg = true;
        Ok(self)
    }

    /// Tags the measure as satisfying `mu^ = sign * mu`.
    pub fn with_sign(mut self, sign: i8) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::Invalid(format!("sign {sign}")));
        }
        self.sign = Some(sign);
        Ok(self)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn sign(&self) -> Option<i8> {
        self.sign
    }

    pub fn tail_model(&self) -> Option<&TailModel> {
        self.tail.as_ref()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `sum w_x phi(x)` over the stored atoms.
    pub fn pair_with<F: FnMut(f64) -> Complex64>(&self, mut phi: F) -> Complex64 {
        self.atoms.iter().map(|a| a.w * phi(a.x)).sum()
    }

    /// Upper bound for `sum |w| env(x)` over atoms beyond the window, from the
    /// tail model. `env` must be nonincreasing in `|x|` outside the window.
    pub fn tail_bound<F: Fn(f64) -> f64>(&self, env: F) -> f64 {
        let Some(t) = self.tail else { return 0.0 };
        let (x0, x1) = self.window;
        let mut total = 0.0;
        for (edge, dir) in [(x1, 1.0), (x0, -1.0)] {
            let r = edge.abs().max(1e-3);
            // combined in logs: weights may overflow where env underflows
            let log_weight = |u: f64| t.c.ln() + t.p * (1.0 + u).ln();
            let term = |u: f64, e: f64| if e > 0.0 { (log_weight(u) + e.ln()).exp() } else { 0.0 };
            let dens = |u: f64| t.density * (u / r).powf(t.growth - 1.0);
            let integral =
                integrate_to_infinity(|u| Complex64::new(dens(u) * term(u, env(dir * u)), 0.0), r, r.max(1.0)).re;
            total += integral + term(r, env(edge));
        }
        total
    }

    /// Mean weight density and spacing of the outer quarter of atoms on each
    /// side, `[right, left]`; `None` with fewer than 8 atoms.
    pub fn mean_density_edges(&self) -> Option<[EdgeDensity; 2]> {
        let n = self.atoms.len();
        if n < 8 {
            return None;
        }
        let m = (n / 4).max(2);
        let side = |atoms: &[Atom], start: f64, dir: f64| {
            let span = (atoms[atoms.len() - 1].x - atoms[0].x).abs();
            let gap = span / (atoms.len() - 1) as f64;
            let total: Complex64 = atoms.iter().map(|a| a.w).sum();
            EdgeDensity { start: start + dir * 0.5 * gap, rho: total / (span + gap), gap, dir }
        };
        Some([side(&self.atoms[n - m..], self.atoms[n - 1].x, 1.0), side(&self.atoms[..m], self.atoms[0].x, -1.0)])
    }

    /// Mean-density estimate of `sum w h(x)` over atoms beyond the window,
    /// assuming the weight density is asymptotically constant on each side.
    pub fn tail_correction<F: Fn(f64) -> Complex64>(&self, h: F) -> Complex64 {
        let Some(edges) = self.mean_density_edges() else { return Complex64::new(0.0, 0.0) };
        edges
            .iter()
            .map(|e| {
                let scale = e.start.abs().max(1.0);
                e.rho * integrate_to_infinity(|u| h(e.dir * u), e.dir * e.start, scale)
            })
            .sum()
    }

    /// Leading midpoint-rule error of `tail_correction` for a lattice-like
    /// continuation: `|rho| gap^2 |h'(start)| / 24` per side.
    pub fn tail_correction_error<F: Fn(f64) -> Complex64>(&self, h: F) -> f64 {
        let Some(edges) = self.mean_density_edges() else { return 0.0 };
        edges
            .iter()
            .map(|e| {
                let d = 0.05 * e.gap;
                let slope = (h(e.start + d) - h(e.start - d)) / (2.0 * d);
                e.rho.norm() * e.gap * e.gap * slope.norm() / 24.0
            })
            .sum()
    }

    fn nearest_distance(&self, z: Complex64) -> f64 {
        let i = self.atoms.partition_point(|a| a.x < z.re);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|j| self.atoms.get(j))
            .map(|a| (z - a.x).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

// |w| envelope and counting growth from dyadic shells of the populated window.
fn fit_tail(atoms: &[Atom], window: (f64, f64)) -> Option<TailModel> {
    if atoms.is_empty() {
        return None;
    }
    let reach = window.0.abs().max(window.1.abs()).max(1e-3);
    let mut logs = Vec::new();
    let mut r = reach;
    while r > reach / 64.0 && r > 1.0 {
        let shell = atoms.iter().filter(|a| a.x.abs() <= r && a.x.abs() > r / 2.0);
        let m = shell.map(|a| a.w.norm()).fold(0.0, f64::max);
        if m > 0.0 {
            logs.push(((1.0 + 0.75 * r).ln(), m.ln()));
        }
        r /= 2.0;
    }
    let p = slope(&logs).unwrap_or(0.0).max(0.0);
    let c = atoms.iter().map(|a| a.w.norm() / (1.0 + a.x.abs()).powf(p)).fold(0.0, f64::max);
    let count = |r: f64| atoms.iter().filter(|a| a.x.abs() <= r).count() as f64;
    let (full, half) = (count(reach), count(reach / 2.0));
    let growth = if half > 0.0 && full > half { (full / half).log2().clamp(0.0, 4.0) } else { 1.0 };
    // one side, per unit length, at the edge; the local spacing of the
    // outermost atoms guards against undercounting by the growth fit
    let m = (atoms.len() / 4).max(2);
    let local = |s: &[Atom]| {
        let span = (s[s.len() - 1].x - s[0].x).abs();
        if s.len() < 2 || span == 0.0 {
            0.0
        } else {
            (s.len() - 1) as f64 / span
        }
    };
    let edge_density =
        if atoms.len() >= 2 * m { local(&atoms[atoms.len() - m..]).max(local(&atoms[..m])) } else { 0.0 };
    let density = (growth * full / reach / 2.0).max(edge_density).max(1e-12);
    Some(TailModel { c, p, density, growth: growth.max(1e-6) })
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    atoms: Vec<Atom>,
    window: [f64; 2],
    nonneg: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sign: Option<i8>,
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRepr {
            atoms: self.atoms.clone(),
            window: [self.window.0, self.window.1],
            nonneg: self.nonneg,
            sign: self.sign,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = MeasureRepr::deserialize(d)?;
        let mut m = DiscreteMeasure::new(r.atoms, (r.window[0], r.window[1])).map_err(D::Error::custom)?;
        if r.nonneg {
            m = m.with_nonneg().map_err(D::Error::custom)?;
        }
        if let Some(s) = r.sign {
            m = m.with_sign(s).map_err(D::Error::custom)?;
        }
        Ok(m)
    }
}

/// Construction record of a pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairMeta {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<ExpSum>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cutoff: Option<Freq>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y_valid: Option<f64>,
    pub real_antipodal: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

/// A measure `mu` and coefficients `a` with `int phi^ dmu = sum a(l) phi(l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsPair {
    pub mu: DiscreteMeasure,
    pub a: DiscreteMeasure,
    pub meta: PairMeta,
}

/// Atoms at the zeros of `B_alpha` in the window with weights `2 pi / phi'`.
pub fn measure_from_phase(h: &HermiteBiehler, alpha: f64, window: (f64, f64)) -> Result<DiscreteMeasure> {
    let pts = phase_points(h, alpha, window.0, window.1)?;
    let atoms = pts.iter().map(|p| Atom::real(p.gamma, 2.0 * PI * p.phase_residue_weight)).collect();
    DiscreteMeasure::new(atoms, window)?.with_nonneg()
}

/// `mu` from the zeros of `B`, `a` from the exact spectrum of `iA/B`.
pub fn pair_from_hb(h: &HermiteBiehler, cutoff: &Freq, window: (f64, f64)) -> Result<FsPair> {
    let mu = measure_from_phase(h, 0.0, window)?;
    let spec = exact_spectrum(h, cutoff)?;
    let mut atoms = Vec::new();
    for (lam, c) in spec.sorted() {
        if lam == 0.0 {
            atoms.push(Atom::real(0.0, 2.0 * c.re));
        } else {
            atoms.push(Atom::new(lam, c));
            atoms.push(Atom::new(-lam, c.conj()));
        }
    }
    let cap = spec.cutoff_value();
    let a = DiscreteMeasure::new(atoms, (-cap, cap))?;
    let meta = PairMeta {
        source: Some(h.e().clone()),
        cutoff: Some(cutoff.clone()),
        y_valid: Some(spec.y_valid()),
        real_antipodal: true,
        note: None,
    };
    Ok(FsPair { mu, a, meta })
}

fn check_upper(z: Complex64) -> Result<()> {
    if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NotUpperHalfPlane(z))
    }
}

fn check_poles(mu: &DiscreteMeasure, z: Complex64) -> Result<()> {
    let d = mu.nearest_distance(z);
    if d < POLE_TOL {
        return Err(Error::PoleProximity { z, dist: d });
    }
    Ok(())
}

fn poisson_term(t: f64, z: Complex64) -> Complex64 {
    (1.0 + t * z) / ((t - z) * (1.0 + t * t) * (2.0 * PI * I))
}

/// `ih + (1/2 pi i) sum w (1 + g z) / ((g - z)(1 + g^2))` over stored atoms.
pub fn herglotz_eval(mu: &DiscreteMeasure, h: f64, z: Complex64) -> Result<Complex64> {
    check_upper(z)?;
    check_poles(mu, z)?;
    Ok(I * h + mu.pair_with(|t| poisson_term(t, z)))
}

/// `herglotz_eval` plus the mean-density estimate of the atoms beyond the window.
pub fn herglotz_eval_corrected(mu: &DiscreteMeasure, h: f64, z: Complex64) -> Result<Complex64> {
    Ok(herglotz_eval(mu, h, z)? + mu.tail_correction(|t| poisson_term(t, z)))
}

/// The real constant `h` for which the representation matches `f(i)`.
pub fn fit_h(mu: &DiscreteMeasure, f_at_i: Complex64, corrected: bool) -> Result<f64> {
    let s = if corrected { herglotz_eval_corrected(mu, 0.0, I)? } else { herglotz_eval(mu, 0.0, I)? };
    Ok((f_at_i - s).im)
}

fn kernel_sum(mu: &DiscreteMeasure, w: Complex64, z: Complex64) -> Complex64 {
    let wc = w.conj();
    mu.pair_with(|t| 1.0 / ((z - t) * (wc - t) * (2.0 * PI * I)))
}

/// `|(f(z) + conj f(w))/(z - conj w) - (1/2 pi i) sum w_g / ((z - g)(conj w - g))|`.
pub fn herglotz_kernel_residual<F>(mu: &DiscreteMeasure, f: F, w: Complex64, z: Complex64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    check_upper(w)?;
    check_upper(z)?;
    check_poles(mu, w)?;
    check_poles(mu, z)?;
    let lhs = (f(z)? + f(w)?.conj()) / (z - w.conj());
    Ok((lhs - kernel_sum(mu, w, z)).norm())
}

/// `herglotz_kernel_residual` with the mean-density estimate of the missing atoms
/// added to the kernel sum.
pub fn herglotz_kernel_residual_corrected<F>(mu: &DiscreteMeasure, f: F, w: Complex64, z: Complex64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    check_upper(w)?;
    check_upper(z)?;
    check_poles(mu, w)?;
    check_poles(mu, z)?;
    let lhs = (f(z)? + f(w)?.conj()) / (z - w.conj());
    let wc = w.conj();
    let tail = mu.tail_correction(|t| 1.0 / ((z - t) * (wc - t) * (2.0 * PI * I)));
    Ok((lhs - kernel_sum(mu, w, z) - tail).norm())
}

/// Tail-model bound on the atoms the kernel sum misses.
pub fn herglotz_kernel_tail(mu: &DiscreteMeasure, w: Complex64, z: Complex64) -> f64 {
    mu.tail_bound(|t| {
        let d = ((t - z).norm() * (t - w.conj()).norm()).max(f64::MIN_POSITIVE);
        1.0 / (2.0 * PI * d)
    })
}

/// Positive and negative parts of a real measure.
pub fn signed_split(mu: &DiscreteMeasure) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if mu.atoms.iter().any(|a| a.w.im != 0.0) {
        return Err(Error::ComplexWeights);
    }
    let part = |s: f64| -> Result<DiscreteMeasure> {
        let atoms = mu
            .atoms
            .iter()
            .filter(|a| a.w.re * s > 0.0)
            .map(|a| Atom { x: a.x, prov: a.prov, w: Complex64::new(a.w.re * s, 0.0) })
            .collect();
        DiscreteMeasure::new(atoms, mu.window)?.with_nonneg()
    };
    Ok((part(1.0)?, part(-1.0)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    ConvergentAtWindowScale,
    DivergentTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub n: u32,
    /// `(radius, partial sum)` for dyadic radii.
    pub partial_sums: Vec<(f64, f64)>,
    /// Fitted exponent of the increments between consecutive radii.
    pub increment_exponent: Option<f64>,
    pub trend: Trend,
}

/// Partial sums of `sum |w| / (1 + x^2)^(n/2)` over expanding windows.
pub fn degree_probe(mu: &DiscreteMeasure, n: u32) -> DegreeReport {
    let reach = mu.atoms.iter().map(|a| a.x.abs()).fold(0.0, f64::max);
    let term = |a: &Atom| a.w.norm() / (1.0 + a.x * a.x).powf(n as f64 / 2.0);
    let mut radii: Vec<f64> = (0..10).map(|j| reach / 2f64.powi(j)).filter(|r| *r >= 1.0).collect();
    radii.reverse();
    let partial: Vec<(f64, f64)> =
        radii.iter().map(|&r| (r, mu.atoms.iter().filter(|a| a.x.abs() <= r).map(term).sum())).collect();
    let incs: Vec<(f64, f64)> =
        partial.windows(2).filter(|w| w[1].1 > w[0].1).map(|w| (w[1].0.ln(), (w[1].1 - w[0].1).ln())).collect();
    let exponent = slope(&incs);
    let trend = match exponent {
        Some(e) if e > -0.2 => Trend::DivergentTrend,
        _ => Trend::ConvergentAtWindowScale,
    };
    DegreeReport { n, partial_sums: partial, increment_exponent: exponent, trend }
}
