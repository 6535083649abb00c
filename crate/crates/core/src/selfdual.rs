//! Measures supported on `+-sqrt(2 gamma_n)` from self-dual q-series, and the
//! pointwise functional-equation check of the series itself.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::measures::{Atom, DiscreteMeasure, SqrtProvenance};
use crate::quadrature::integrate_to_infinity;

pub use crate::qmodular::SelfDualSeries;

/// Atoms at `+-sqrt(2 gamma)` with weight `c` for each term `c t^x` of the
/// series, `gamma = x / sqrt N`; `gamma = 0` gives one atom of weight `2c`.
///
/// Fails if the window reaches positions the truncated series cannot supply.
pub fn selfdual_measure(s: &SelfDualSeries, window: (f64, f64)) -> Result<DiscreteMeasure> {
    let root_n = (s.radical() as f64).sqrt();
    let reach = window.0.abs().max(window.1.abs());
    let needed = reach * reach * root_n / 2.0;
    let order = s.series().order().to_f64().unwrap_or(f64::INFINITY);
    if needed >= order {
        return Err(Error::Invalid(format!(
            "window reaches exponent {needed:.3} but the series is exact only below {order}"
        )));
    }
    let mut atoms = Vec::new();
    for (e, c) in s.series().terms() {
        let prov = SqrtProvenance { n: *e.numer(), b: *e.denom(), radical: s.radical() as i64 };
        let x = prov.magnitude();
        let w = Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0);
        for pos in [x, -x] {
            if pos >= window.0 && pos <= window.1 {
                atoms.push(Atom { x: pos, prov: Some(prov), w });
            }
        }
    }
    DiscreteMeasure::new(atoms, window)?.with_sign(s.sign())
}

/// Window `[-r, r]` holding exactly the first `count` nonzero positive atoms
/// (plus their mirrors and any atom at zero).
pub fn window_for_atoms(s: &SelfDualSeries, count: usize) -> Result<(f64, f64)> {
    let root_n = (s.radical() as f64).sqrt();
    let pos: Vec<f64> = s
        .series()
        .terms()
        .keys()
        .filter(|e| **e > num_rational::Ratio::from_integer(0))
        .map(|e| (2.0 * e.to_f64().unwrap_or(f64::NAN) / root_n).sqrt())
        .collect();
    if pos.len() <= count {
        return Err(Error::Invalid(format!("series has {} positive atoms, {count} requested", pos.len())));
    }
    let r = 0.5 * (pos[count - 1] + pos[count]);
    Ok((-r, r))
}

/// Bound on `sum |c_x| |t|^x` over the terms the truncation dropped, at
/// `t = exp(2 pi i z / sqrt N)`.
///
/// Coefficients beyond the order are modelled as
/// `A exp(kappa (sqrt x - sqrt order))`, with `A` the largest coefficient
/// in the top quarter and `kappa` from the growth between the two halves.
pub fn truncation_tail(s: &SelfDualSeries, z: Complex64) -> f64 {
    let order = s.series().order().to_f64().unwrap_or(f64::INFINITY);
    let pts: Vec<(f64, f64)> = s
        .series()
        .terms()
        .iter()
        .map(|(e, c)| (e.to_f64().unwrap_or(f64::NAN), c.to_f64().unwrap_or(f64::NAN).abs()))
        .collect();
    if pts.is_empty() || !order.is_finite() {
        return 0.0;
    }
    let block_max = |lo: f64, hi: f64| pts.iter().filter(|p| p.0 >= lo && p.0 < hi).map(|p| p.1).fold(0.0, f64::max);
    let top = block_max(0.75 * order, order).max(block_max(0.5 * order, order));
    let low = block_max(0.25 * order, 0.5 * order);
    let kappa = if top > 0.0 && low > 0.0 && order > 4.0 {
        (1.5 * (top / low).ln() / (order.sqrt() - (0.375 * order).sqrt())).max(0.0)
    } else {
        0.0
    };
    let a = top.max(pts.iter().map(|p| p.1).fold(0.0, f64::max) * 1e-300);
    let decay = 2.0 * PI * z.im / (s.radical() as f64).sqrt();
    if decay <= 0.0 {
        return f64::INFINITY;
    }
    let density = s.scale() as f64;
    let term = |x: f64| a * (kappa * (x.sqrt() - order.sqrt()) - decay * x).exp();
    let integral = integrate_to_infinity(|x| Complex64::new(term(x), 0.0), order, (1.0 / decay).max(1.0)).re;
    density * integral + term(order)
}

/// `|F(z) - sign sqrt(i/z) F(-1/z)|` with the principal square root.
///
/// Errors with `TailTooLarge` when the truncation tail at `z` or `-1/z`
/// exceeds `target`.
pub fn functional_equation_residual(s: &SelfDualSeries, z: Complex64, target: f64) -> Result<f64> {
    if !(z.im > 0.0) {
        return Err(Error::NotUpperHalfPlane(z));
    }
    let zi = -1.0 / z;
    let tail = truncation_tail(s, z).max(truncation_tail(s, zi) * (Complex64::i() / z).sqrt().norm());
    if !(tail <= target) {
        return Err(Error::TailTooLarge { tail, target });
    }
    let lhs = s.eval(z);
    let rhs = (Complex64::i() / z).sqrt() * s.eval(zi) * s.sign() as f64;
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmodular::{eta_product, family_l, fplus, EtaProductSpec, Exponent, QSeries};
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn int(n: i64) -> Exponent {
        Exponent::from_integer(n)
    }

    fn theta(order: i64) -> SelfDualSeries {
        let spec = EtaProductSpec::from_divisor_list(4, &[int(-2), int(5), int(-2)]).unwrap();
        fplus(&spec, int(order)).unwrap()
    }

    fn guinand(order: i64) -> SelfDualSeries {
        let spec =
            EtaProductSpec::from_divisor_list(4, &[Exponent::new(2, 3), Exponent::new(-1, 3), Exponent::new(2, 3)])
                .unwrap();
        fplus(&spec, int(order)).unwrap()
    }

    #[test]
    fn theta_measure_is_a_comb() {
        let m = selfdual_measure(&theta(40), (-5.5, 5.5)).unwrap();
        assert_eq!(m.len(), 11);
        for (a, k) in m.atoms().iter().zip(-5..=5) {
            assert!((a.x - k as f64).abs() < 1e-14);
            assert_eq!(a.w.re, 2.0);
        }
        assert_eq!(m.sign(), Some(1));
    }

    #[test]
    fn guinand_positions() {
        let m = selfdual_measure(&guinand(30), (-5.0, 5.0)).unwrap();
        let pos: Vec<f64> = m.atoms().iter().filter(|a| a.x > 0.0).map(|a| a.x).collect();
        for (k, x) in pos.iter().enumerate() {
            assert!((x - (k as f64 + 1.0 / 9.0).sqrt()).abs() < 1e-14);
        }
        assert_eq!(pos.len(), 25);
        assert!((m.atoms().iter().find(|a| a.x > 0.0).unwrap().w.re - 1.0).abs() < 1e-15);
        assert!(m.atoms().iter().all(|a| a.prov.is_some_and(|p| p.b == 9 && p.radical == 4)));
    }

    #[test]
    fn empty_series_gives_empty_measure() {
        let s = SelfDualSeries::new(QSeries::zero(int(5)), 1, 4, 1).unwrap();
        assert!(selfdual_measure(&s, (-1.0, 1.0)).unwrap().is_empty());
    }

    #[test]
    fn window_beyond_order_is_refused() {
        assert!(selfdual_measure(&theta(10), (-5.0, 5.0)).is_err());
        let w = window_for_atoms(&guinand(1001), 1000).unwrap();
        let m = selfdual_measure(&guinand(1001), w).unwrap();
        assert_eq!(m.len(), 2000);
    }

    #[test]
    fn functional_equations() {
        let r = functional_equation_residual(&theta(300), Complex64::new(0.0, 1.0), 1e-12).unwrap();
        assert!(r <= 1e-10, "{r}");
        let g = functional_equation_residual(&guinand(300), Complex64::new(0.0, 0.8), 1e-10).unwrap();
        assert!(g <= 1e-8, "{g}");
        let (_, _, minus) = family_l(int(1), int(300)).unwrap();
        let z = Complex64::new(0.0, 2f64.sqrt());
        let f = functional_equation_residual(&minus, z, 1e-10).unwrap();
        assert!(f <= 1e-8, "{f}");
        assert!(minus.eval(z).norm() > 1e-3);
    }

    #[test]
    fn wrong_sign_is_detected() {
        let (_, _, minus) = family_l(int(1), int(300)).unwrap();
        let flipped = SelfDualSeries::new(minus.series().clone(), minus.scale(), minus.radical(), 1).unwrap();
        let z = Complex64::new(0.3, 1.1);
        assert!(functional_equation_residual(&flipped, z, 1e-10).unwrap() > 1e-3);
    }

    #[test]
    fn short_series_reports_tail() {
        let r = functional_equation_residual(&theta(2), Complex64::new(0.0, 0.1), 1e-8);
        assert!(matches!(r, Err(Error::TailTooLarge { .. })));
        assert!(functional_equation_residual(&theta(20), Complex64::new(1.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn residuals_shrink_with_order() {
        for z in [Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.05)] {
            let rs: Vec<f64> =
                [100, 200, 400].iter().map(|o| functional_equation_residual(&guinand(*o), z, 1.0).unwrap()).collect();
            assert!(rs[1] <= 1.1 * rs[0] && rs[2] <= 1.1 * rs[1], "{z}: {rs:?}");
        }
        let loose = functional_equation_residual(&guinand(100), Complex64::new(0.0, 0.05), 1.0).unwrap();
        let tight = functional_equation_residual(&guinand(400), Complex64::new(0.0, 0.05), 1.0).unwrap();
        assert!(loose > 1e-9 && tight < 1e-9, "{loose} {tight}");
    }

    #[test]
    fn tail_bound_covers_dropped_terms() {
        let full = guinand(400);
        let z = Complex64::new(0.0, 0.05);
        let short = guinand(100);
        let dropped = full.eval(z) - short.eval(z);
        assert!(dropped.norm() <= truncation_tail(&short, z), "{} > {}", dropped.norm(), truncation_tail(&short, z));
    }

    #[test]
    fn progression_in_support() {
        let s = guinand(1001);
        let e = eta_product(
            &EtaProductSpec::from_divisor_list(4, &[Exponent::new(2, 3), Exponent::new(-1, 3), Exponent::new(2, 3)])
                .unwrap(),
            int(1001),
        )
        .unwrap();
        assert_eq!(s.series(), &e);
        // positions 3m + 1/3 need n = 9m^2 + 2m, exponent n + 1/9
        for m in 0..10i64 {
            let c = s.series().coeff(Exponent::new(9 * (9 * m * m + 2 * m) + 1, 9));
            assert_ne!(c, BigRational::from(BigInt::from(0)), "m = {m}");
        }
    }
}
