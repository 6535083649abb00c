//! iA/B as a Herglotz function: its Poisson representation over the phase
//! measure, the kernel identity, and agreement with the Fejer sum of a(lambda).

use crystalline::freqalg::{ExpSum, Freq, FreqBasis};
use crystalline::hermite::ks_from_q;
use crystalline::measures::{
    fit_h, herglotz_eval_corrected, herglotz_kernel_residual, herglotz_kernel_tail, pair_from_hb,
};
use crystalline::spectra::{exact_spectrum, fejer_reconstruct, herglotz_function};
use num_complex::Complex64;

fn main() -> crystalline::Result<()> {
    let q = ExpSum::new(
        FreqBasis::new(vec![1.0], 2)?,
        [(Freq(vec![1]), Complex64::new(0.0, -0.5)), (Freq(vec![-1]), Complex64::new(0.0, 0.5))],
    )?;
    let h = ks_from_q(&q)?;
    let pair = pair_from_hb(&h, &Freq(vec![2000]), (-2000.5, 2000.5))?;
    let f = |z: Complex64| herglotz_function(&h, z);
    let (w, z) = (Complex64::new(0.0, 1.0), Complex64::new(1.0, 2.0));
    println!(
        "kernel residual {:.2e}, tail bound {:.2e}",
        herglotz_kernel_residual(&pair.mu, f, w, z)?,
        herglotz_kernel_tail(&pair.mu, w, z)
    );
    let spec = exact_spectrum(&h, &Freq(vec![2000]))?;
    let i = Complex64::new(0.0, 1.0);
    let hfit = fit_h(&pair.mu, f(i)?, true)?;
    for z in [Complex64::new(0.4, 1.0), Complex64::new(7.1, 2.0)] {
        let fe = fejer_reconstruct(&spec, 2.0 * spec.constant().re, 1000.0, z) + i * spec.constant().im;
        let he = herglotz_eval_corrected(&pair.mu, hfit, z)?;
        println!("z = {z}: fejer {fe:.8}, herglotz {he:.8}");
    }
    Ok(())
}
