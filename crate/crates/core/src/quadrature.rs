//! Gauss-Legendre rules and a few composite integrators built on them.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (t * p - pm) / (t * t - 1.0);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Nodes and weights of a composite rule: `panels` equal panels on `[a, b]`,
/// each with the `order`-point Gauss-Legendre rule.
pub fn composite_nodes(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (gx, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (t, w) in gx.iter().zip(&gw) {
            out.push((lo + 0.5 * h * (t + 1.0), 0.5 * h * w));
        }
    }
    out
}

pub fn integrate<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    composite_nodes(a, b, panels, 10).into_iter().map(|(x, w)| f(x) * w).sum()
}

/// Integral of `f` over `[a, inf)` via `t = a + scale * u / (1 - u)`.
/// Suited to integrands that decay at least like `1/t^2`.
pub fn integrate_to_infinity<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, scale: f64) -> Complex64 {
    // panels graded toward u = 1
    let mut acc = Complex64::new(0.0, 0.0);
    let edges: Vec<f64> = (0..=100).map(|i| 1.0 - 0.5f64.powf(i as f64 / 2.0)).collect();
    for pair in edges.windows(2) {
        for (u, w) in composite_nodes(pair[0], pair[1], 1, 12) {
            let d = 1.0 - u;
            let t = a + scale * u / d;
            acc += f(t) * (w * scale / (d * d));
        }
    }
    acc
}
