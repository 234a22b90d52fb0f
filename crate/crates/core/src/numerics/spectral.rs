//! Fourier differentiation of periodic samples.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Derivative of `f`, sampled at `i·period/n`, by FFT.
///
/// The Nyquist mode of an even-length signal is dropped.
pub fn periodic_derivative(f: &[f64], period: f64) -> Vec<f64> {
    let n = f.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let scale = 2.0 * PI / period;
    for (k, c) in buf.iter_mut().enumerate() {
        let kk = if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        };
        if n.is_multiple_of(2) && k == n / 2 {
            *c = Complex::new(0.0, 0.0);
        } else {
            *c *= Complex::new(0.0, kk * scale);
        }
    }
    inv.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_trig_polynomial_is_exact() {
        let n = 96;
        let p = 2.0 * PI * 1.03;
        let x: Vec<f64> = (0..n).map(|i| i as f64 * p / n as f64).collect();
        let w = 2.0 * PI / p;
        let f: Vec<f64> = x
            .iter()
            .map(|t| (3.0 * w * t).sin() + 0.5 * (w * t).cos())
            .collect();
        let d = periodic_derivative(&f, p);
        for (t, dv) in x.iter().zip(&d) {
            let exact = 3.0 * w * (3.0 * w * t).cos() - 0.5 * w * (w * t).sin();
            assert!((dv - exact).abs() < 1e-12);
        }
    }
}
