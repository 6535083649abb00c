//! Exact q-expansions of eta products: the Guinand series, the theta
//! function as an eta quotient, and the lambda invariant.

use crystalline::qmodular::{eta_product, lambda_invariant, EtaProductSpec, Exponent};

fn main() -> crystalline::Result<()> {
    let guinand =
        EtaProductSpec::from_divisor_list(4, &[Exponent::new(2, 3), Exponent::new(-1, 3), Exponent::new(2, 3)])?;
    println!("guinand: k = {}, b = {}", guinand.k(), guinand.b());
    for (e, c) in eta_product(&guinand, Exponent::from_integer(8))?.terms() {
        println!("  q^{e}: {c}");
    }

    let theta = EtaProductSpec::from_divisor_list(4, &[(-2).into(), 5.into(), (-2).into()])?;
    let s = eta_product(&theta, Exponent::from_integer(50))?;
    let shown: Vec<String> = s.terms().iter().map(|(e, c)| format!("{c}q^{e}")).collect();
    println!("theta: {}", shown.join(" + "));

    let lam = lambda_invariant(Exponent::new(5, 2))?;
    let shown: Vec<String> = lam.terms().iter().map(|(e, c)| format!("{c}q^({e})")).collect();
    println!("lambda: {}", shown.join(" + "));
    Ok(())
}
