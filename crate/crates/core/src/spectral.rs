//! FFT-backed transforms on periodic grids.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Wavenumber of FFT bin `j` on an `n`-point grid (Nyquist taken negative).
#[inline]
pub(crate) fn wavenumber(j: usize, n: usize) -> f64 {
    if j < n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// Spectral derivative of a real periodic sample over `[0, 2 pi)`.
/// The Nyquist mode is dropped.
pub(crate) fn derivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (j, c) in buf.iter_mut().enumerate() {
        let k = wavenumber(j, n);
        *c = if n.is_multiple_of(2) && j == n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k) * *c
        };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// `a_k = sum_j v_j cos(k (j + 1/2) pi / n)` for `k = 0..n`, via a length-2n
/// FFT of the even extension.
pub(crate) fn dct2(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values
        .iter()
        .chain(values.iter().rev())
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(2 * n).process(&mut buf);
    (0..n)
        .map(|k| {
            let shift = Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64));
            0.5 * (shift * buf[k]).re
        })
        .collect()
}
