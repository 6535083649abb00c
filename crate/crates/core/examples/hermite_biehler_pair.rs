//! Q = sin(pi z) lifted to E = Q' - iQ: the measure on the zeros of Q, the
//! spectrum of iA/B, and a gaussian check of the summation identity.

use crystalline::freqalg::{ExpSum, Freq, FreqBasis};
use crystalline::hermite::ks_from_q;
use crystalline::measures::pair_from_hb;
use crystalline::verifier::{check_pair, gaussian_suite};
use num_complex::Complex64;

fn main() -> crystalline::Result<()> {
    let basis = FreqBasis::new(vec![1.0], 2)?;
    let q =
        ExpSum::new(basis, [(Freq(vec![1]), Complex64::new(0.0, -0.5)), (Freq(vec![-1]), Complex64::new(0.0, 0.5))])?;
    let h = ks_from_q(&q)?;
    let pair = pair_from_hb(&h, &Freq(vec![60]), (-30.5, 30.5))?;
    let head: Vec<String> = pair.mu.atoms()[..3].iter().map(|a| format!("{:.3} ({:.6})", a.x, a.w.re)).collect();
    println!("mu: {} atoms, first {}", pair.mu.len(), head.join(", "));
    println!("a: {} atoms, a(0) = {}", pair.a.len(), pair.a.atoms()[pair.a.len() / 2].w);
    for tf in gaussian_suite(1, 5) {
        let r = check_pair(&pair, &tf, 1e-10)?;
        println!("residual {:.2e}  tails {:.1e} {:.1e}  {:?}", r.residual, r.tails[0], r.tails[1], r.verdict);
    }
    Ok(())
}
