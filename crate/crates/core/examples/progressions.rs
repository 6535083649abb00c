//! How often an arithmetic progression meets the support sqrt(c + n).

use crystalline::qmodular::progression_hits;

fn main() -> crystalline::Result<()> {
    println!("squares, (0; 0, 1), n <= 100: {}", progression_hits(0.0, 0.0, 1.0, 100)?);
    println!("guinand, (1/9; 1/3, 3), n <= 1e4: {}", progression_hits(1.0 / 9.0, 1.0 / 3.0, 3.0, 10_000)?);
    let c = 2f64.sqrt();
    let (a, b) = ((c + 3.0).sqrt(), (c + 10.0).sqrt());
    println!("sqrt2, through n = 3 and 10: {}", progression_hits(c, a, b - a, 10_000)?);
    Ok(())
}
