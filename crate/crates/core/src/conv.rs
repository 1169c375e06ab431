//! Linear convolution of real sequences, direct below a crossover length
//! and FFT-based above it.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Output lengths below this are convolved directly.
pub const DIRECT_CROSSOVER: usize = 64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

pub fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Full linear convolution `a * b` (length `a.len() + b.len() - 1`).
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if out_len < DIRECT_CROSSOVER || a.len().min(b.len()) < 8 {
        return convolve_direct(a, b);
    }
    Convolver::new(a, b.len()).apply(b)
}

/// A convolution kernel with its spectrum precomputed, for repeated
/// application to inputs of bounded length.
pub struct Convolver {
    kernel_len: usize,
    max_input: usize,
    n: usize,
    spectrum: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Convolver {
    pub fn new(kernel: &[f64], max_input: usize) -> Self {
        let need = (kernel.len() + max_input).saturating_sub(1).max(1);
        let n = need.next_power_of_two();
        let (fwd, inv) = plan(n);
        let mut spectrum: Vec<Complex64> = kernel
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(n)
            .collect();
        fwd.process(&mut spectrum);
        Convolver {
            kernel_len: kernel.len(),
            max_input,
            n,
            spectrum,
            fwd,
            inv,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert!(x.len() <= self.max_input, "convolver input too long");
        if x.is_empty() || self.kernel_len == 0 {
            return Vec::new();
        }
        let mut buf: Vec<Complex64> = x
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(self.n)
            .collect();
        self.fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf[..self.kernel_len + x.len() - 1]
            .iter()
            .map(|c| c.re * scale)
            .collect()
    }

    /// Applies the kernel to two real inputs at once, packed as the real and
    /// imaginary parts of one complex transform.
    pub fn apply_pair(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert!(x.len() <= self.max_input && y.len() <= self.max_input);
        if self.kernel_len == 0 {
            return (Vec::new(), Vec::new());
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        for (i, &v) in x.iter().enumerate() {
            buf[i].re = v;
        }
        for (i, &v) in y.iter().enumerate() {
            buf[i].im = v;
        }
        self.fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        let lx = if x.is_empty() {
            0
        } else {
            self.kernel_len + x.len() - 1
        };
        let ly = if y.is_empty() {
            0
        } else {
            self.kernel_len + y.len() - 1
        };
        (
            buf[..lx].iter().map(|c| c.re * scale).collect(),
            buf[..ly].iter().map(|c| c.im * scale).collect(),
        )
    }
}
