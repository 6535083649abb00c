//! Irrational frequency sets: a real-rooted Lee-Yang sum is accepted, while
//! sin(x) + 0.1 sin(sqrt2 x) is rejected because it has non-real zeros.

use std::f64::consts::PI;

use crystalline::freqalg::{ExpSum, Freq, FreqBasis};
use crystalline::hermite::{ks_from_q, leeyang_star_fixed, phase_derivative, phase_points};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn main() -> crystalline::Result<()> {
    let c = |re: f64| Complex64::new(re, 0.0);
    let (s, co) = (PI / 4.0).sin_cos();
    let u = DMatrix::from_row_slice(2, 2, &[c(co), c(-s), c(s), c(co)]);
    let basis = FreqBasis::new(vec![1.0, 2f64.sqrt()], 1)?;
    let q = leeyang_star_fixed(&u, &[Freq(vec![1, 0]), Freq(vec![0, 1])], &basis)?;
    let h = ks_from_q(&q)?;
    let pts = phase_points(&h, 0.0, -10.0, 10.0)?;
    println!("{} zeros in [-10, 10]; density 1 + sqrt2 predicts {:.1}", pts.len(), 20.0 * (1.0 + 2f64.sqrt()));
    for p in pts.iter().take(4) {
        println!("  gamma {:+.6}  1/phi' {:.6}", p.gamma, p.phase_residue_weight);
    }
    println!("phi'(0.3) = {:.6}", phase_derivative(&h, 0.3)?);

    let b2 = FreqBasis::new(vec![1.0 / (2.0 * PI), 2f64.sqrt() / (2.0 * PI)], 1)?;
    let i = |v: f64| Complex64::new(0.0, v);
    let q2 = ExpSum::new(
        b2,
        [
            (Freq(vec![1, 0]), i(-0.5)),
            (Freq(vec![-1, 0]), i(0.5)),
            (Freq(vec![0, 1]), i(-0.05)),
            (Freq(vec![0, -1]), i(0.05)),
        ],
    )?;
    match ks_from_q(&q2) {
        Ok(_) => println!("sin(x) + 0.1 sin(sqrt2 x): accepted"),
        Err(e) => println!("sin(x) + 0.1 sin(sqrt2 x): {e}"),
    }
    Ok(())
}
