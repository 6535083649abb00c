//! The Guinand measure on +-sqrt(n + 1/9) and the anti-self-dual F_- member
//! of the level-4 family, checked against centered gaussians.

use crystalline::qmodular::{family_l, fplus, EtaProductSpec, Exponent};
use crystalline::selfdual::{functional_equation_residual, selfdual_measure, window_for_atoms};
use crystalline::verifier::{check_selfdual, heights_suite};
use num_complex::Complex64;

fn main() -> crystalline::Result<()> {
    let spec = EtaProductSpec::from_divisor_list(4, &[Exponent::new(2, 3), Exponent::new(-1, 3), Exponent::new(2, 3)])?;
    let s = fplus(&spec, Exponent::from_integer(1001))?;
    let mu = selfdual_measure(&s, window_for_atoms(&s, 1000)?)?;
    println!("guinand: {} atoms, first positive at {:.12}", mu.len(), mu.atoms()[1000].x);
    let suite = heights_suite(&[0.5, 1.0, 2.0])?;
    for r in check_selfdual(&mu, &suite, 1e-6)? {
        println!("  residual {:.2e} {:?}", r.residual, r.verdict);
    }
    let fe = functional_equation_residual(&s, Complex64::new(0.0, 0.8), 1e-10)?;
    println!("  |F(z) - sqrt(i/z) F(-1/z)| at 0.8i: {fe:.2e}");

    let (_, _, minus) = family_l(Exponent::from_integer(1), Exponent::from_integer(400))?;
    let mu = selfdual_measure(&minus, window_for_atoms(&minus, 300)?)?;
    println!("F_- (l = 1): {} atoms, sign {:?}", mu.len(), mu.sign());
    for r in check_selfdual(&mu, &suite, 1e-6)? {
        println!("  residual {:.2e} {:?}", r.residual, r.verdict);
    }
    Ok(())
}
