//! Multi-dimensional transforms and the chirp-z evaluation used for dilation.
//!
//! Forward transforms are unnormalized; inverse transforms divide by `n^N`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place transform of a row-major `n^dim` array along every axis.
pub fn transform_nd(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // Last axis is contiguous.
    fft.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::default(); n];
    for axis in 0..dim.saturating_sub(1) {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[start + j * stride] = *v;
                }
            }
        }
    }
    if inverse {
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

pub fn forward_real(values: &[f64], dim: usize, n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_nd(&mut buf, dim, n, false);
    buf
}

/// Inverse transform; returns the real part and the largest imaginary magnitude.
pub fn inverse_to_real(mut spectrum: Vec<Complex64>, dim: usize, n: usize) -> (Vec<f64>, f64) {
    transform_nd(&mut spectrum, dim, n, true);
    let mut max_imag = 0.0f64;
    let out = spectrum
        .iter()
        .map(|c| {
            max_imag = max_imag.max(c.im.abs());
            c.re
        })
        .collect();
    (out, max_imag)
}

/// Evaluates the trigonometric interpolant of one periodic line at the points
/// `alpha * x_j`, where `x_j = -L + j h` are the line's own sample points.
///
/// The Nyquist coefficient is split evenly between `+n/2` and `-n/2` so the
/// interpolant of real data is real. Uses Bluestein's identity
/// `r j = (r^2 + j^2 - (j - r)^2) / 2`.
pub struct ChirpInterpolator {
    n: usize,
    alpha: f64,
    conv_len: usize,
    chirp_hat: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    line_fwd: Arc<dyn Fft<f64>>,
}

impl ChirpInterpolator {
    pub fn new(n: usize, alpha: f64) -> Self {
        let terms = n + 1;
        let conv_len = (terms + n).next_power_of_two();
        let beta = PI * alpha / n as f64;
        let mut chirp = vec![Complex64::default(); conv_len];
        for idx in -(terms as i64 - 1)..(n as i64) {
            let q = idx as f64;
            let slot = idx.rem_euclid(conv_len as i64) as usize;
            chirp[slot] = Complex64::from_polar(1.0, -beta * q * q);
        }
        let fwd = plan(conv_len, false);
        let inv = plan(conv_len, true);
        fwd.process(&mut chirp);
        Self {
            n,
            alpha,
            conv_len,
            chirp_hat: chirp,
            fwd,
            inv,
            line_fwd: plan(n, false),
        }
    }

    pub fn eval(&self, line: &[f64]) -> Vec<f64> {
        let n = self.n;
        let half = n / 2;
        let mut c: Vec<Complex64> = line.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.line_fwd.process(&mut c);
        let inv_n = 1.0 / n as f64;
        // Wave indices ordered -n/2 ..= n/2; r = kappa + n/2.
        let beta = PI * self.alpha / n as f64;
        let mut a = vec![Complex64::default(); self.conv_len];
        for (r, slot) in a.iter_mut().enumerate().take(n + 1) {
            let kappa = r as i64 - half as i64;
            let coef = if kappa.unsigned_abs() as usize == half {
                c[half] * 0.5
            } else {
                c[kappa.rem_euclid(n as i64) as usize]
            } * inv_n;
            let shift = kappa as f64 * PI * (1.0 - self.alpha);
            let rf = r as f64;
            *slot = coef * Complex64::from_polar(1.0, shift + beta * rf * rf);
        }
        self.fwd.process(&mut a);
        a.iter_mut().zip(&self.chirp_hat).for_each(|(x, y)| *x *= *y);
        self.inv.process(&mut a);
        let norm = 1.0 / self.conv_len as f64;
        let k0 = -(half as f64);
        (0..n)
            .map(|j| {
                let jf = j as f64;
                let phase = beta * jf * jf + 2.0 * PI * self.alpha * k0 * jf / n as f64;
                (a[j] * norm * Complex64::from_polar(1.0, phase)).re
            })
            .collect()
    }
}
