//! Exact spectrum of iA/B against Fejer-weighted mean values along Im z = y.

use crystalline::freqalg::{ExpSum, Freq, FreqBasis};
use crystalline::hermite::ks_from_q;
use crystalline::spectra::{exact_spectrum, herglotz_function, mean_values, Taper};
use num_complex::Complex64;

fn main() -> crystalline::Result<()> {
    let q = ExpSum::new(
        FreqBasis::new(vec![1.0], 2)?,
        [(Freq(vec![1]), Complex64::new(0.0, -0.5)), (Freq(vec![-1]), Complex64::new(0.0, 0.5))],
    )?;
    let h = ks_from_q(&q)?;
    let exact = exact_spectrum(&h, &Freq(vec![12]))?;
    let lambdas: Vec<f64> = exact.sorted().iter().map(|a| a.0).take(6).collect();
    let numeric = mean_values(|z| herglotz_function(&h, z), &lambdas, 1.0, 1e4, Taper::Fejer)?;
    println!("{:>6} {:>22} {:>22} {:>10}", "lambda", "exact", "mean value", "|diff|");
    for (l, n) in lambdas.iter().zip(numeric) {
        let e = exact.at_value(*l);
        println!("{l:>6} {:>22.15} {:>22.15} {:>10.1e}", e.re, n.re, (e - n).norm());
    }
    // from lambda = 4 on, exp(2 pi lambda) magnifies rounding past any useful tolerance
    Ok(())
}
