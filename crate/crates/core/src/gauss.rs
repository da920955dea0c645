//! Node tables for the two rules the period integrals need.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// `P_n` from the Chebyshev initial guess.
pub(crate) fn legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Angles `theta_j = (j + 1/2) pi / n` of the Chebyshev-Gauss rule.
pub(crate) fn chebyshev_angles(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| (j as f64 + 0.5) * PI / n as f64)
}

/// Composite Gauss-Legendre over `[0, upper]` on geometric panels
/// `[0, upper 2^-k], ..., [upper/2, upper]`, refined until the first panel is
/// shorter than `scale`.
pub(crate) fn geometric_panels<F: Fn(f64) -> f64>(
    f: F,
    upper: f64,
    scale: f64,
    per_panel: usize,
) -> f64 {
    let (x, w) = legendre(per_panel);
    let mut breaks = vec![upper];
    while breaks.len() < 200 && *breaks.last().unwrap() > scale {
        let b = 0.5 * breaks.last().unwrap();
        breaks.push(b);
    }
    breaks.push(0.0);
    breaks
        .windows(2)
        .map(|pair| {
            let (b, a) = (pair[0], pair[1]);
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| wi * f(c + h * xi))
                .sum::<f64>()
                * h
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 96] {
            let (x, w) = legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((approx - exact).abs() < 1e-13, "n = {n}");
            let even = 2 * (n / 2);
            let exact = 2.0 / (even as f64 + 1.0);
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(even as i32)).sum();
            assert!((approx - exact).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn panels_resolve_a_lorentzian() {
        let v = geometric_panels(|u| 1.0 / (1.0 + u * u), 1e3, 0.5, 16);
        assert!((v - 1e3f64.atan()).abs() < 1e-13);
    }
}
