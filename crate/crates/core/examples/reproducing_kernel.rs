//! Reproducing kernel of the de Branges space of E = pi cos(pi z) - i sin(pi z):
//! closed form, expansion over the integers, and sampling reconstruction.

use crystalline::dbspace::{kernel_closed, kernel_series, sampling_eval, KernelContext};
use crystalline::freqalg::{ExpSum, Freq, FreqBasis};
use crystalline::hermite::ks_from_q;
use num_complex::Complex64;

fn main() -> crystalline::Result<()> {
    let q = ExpSum::new(
        FreqBasis::new(vec![1.0], 2)?,
        [(Freq(vec![1]), Complex64::new(0.0, -0.5)), (Freq(vec![-1]), Complex64::new(0.0, 0.5))],
    )?;
    let w = Complex64::new(0.0, 1.0);
    for r in [1e2, 1e3, 1e4] {
        let ctx = KernelContext::new(ks_from_q(&q)?, r)?;
        let z = Complex64::new(1.0, 2.0);
        let k = kernel_closed(&ctx, w, z)?;
        let s = kernel_series(&ctx, w, z)?;
        println!(
            "R = {r:>7}: raw {:.2e} (tail bound {:.2e}), corrected {:.2e} (estimate {:.2e})",
            (s.raw - k).norm(),
            s.tail_bound,
            (s.corrected - k).norm(),
            s.correction_error
        );
    }
    let ctx = KernelContext::new(ks_from_q(&q)?, 1e3)?;
    let samples: Vec<_> = ctx
        .roots()
        .iter()
        .map(|p| Ok((p.gamma, kernel_closed(&ctx, w, Complex64::new(p.gamma, 0.0))?)))
        .collect::<crystalline::Result<_>>()?;
    let z = Complex64::new(0.3, 0.7);
    let f = sampling_eval(&ctx, &samples, z)?;
    println!("K(i, 0.3+0.7i) = {:.10}, sampled {:.10}", kernel_closed(&ctx, w, z)?, f.corrected);
    Ok(())
}
