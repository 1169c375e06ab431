//! Laurent polynomials with the Wiener norm.
//!
//! A [`LaurentSymbol`] stores the coefficients `a_lo, ..., a_hi` of
//! `a(z) = sum_k a_k z^k` densely together with the lowest index. Stored
//! values are always canonically trimmed: the first and last coefficients are
//! nonzero unless the symbol is identically zero.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::conv;
use crate::error::{QtError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSymbol {
    lowest: i64,
    coeffs: Vec<f64>,
}

impl Default for LaurentSymbol {
    fn default() -> Self {
        Self::zero()
    }
}

impl LaurentSymbol {
    /// Builds `sum_k coeffs[k] z^(lowest + k)`, trimming exact zeros at both ends.
    pub fn new(lowest: i64, coeffs: Vec<f64>) -> Self {
        let mut s = LaurentSymbol { lowest, coeffs };
        s.trim();
        s
    }

    pub fn zero() -> Self {
        LaurentSymbol {
            lowest: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(0, vec![c])
    }

    /// `c z^k`
    pub fn monomial(k: i64, c: f64) -> Self {
        Self::new(k, vec![c])
    }

    /// Power series `sum_{k>=0} coeffs[k] z^k`.
    pub fn power_series(coeffs: Vec<f64>) -> Self {
        Self::new(0, coeffs)
    }

    /// Builds a symbol from the coefficients with nonpositive indices
    /// (`neg = [a_0, a_-1, a_-2, ...]`) and nonnegative indices
    /// (`pos = [a_0, a_1, ...]`). Both lists carry the constant term, which
    /// must agree when both are nonempty.
    pub fn from_neg_pos(neg: &[f64], pos: &[f64]) -> Result<Self> {
        let a0 = match (neg.first(), pos.first()) {
            (Some(&n), Some(&p)) => {
                if n != p {
                    return Err(QtError::ConstantTermMismatch { neg: n, pos: p });
                }
                n
            }
            (Some(&n), None) => n,
            (None, Some(&p)) => p,
            (None, None) => return Ok(Self::zero()),
        };
        let nm = neg.len().saturating_sub(1);
        let mut coeffs = Vec::with_capacity(nm + pos.len().max(1));
        coeffs.extend(neg.iter().skip(1).rev());
        coeffs.push(a0);
        coeffs.extend(pos.iter().skip(1));
        Ok(Self::new(-(nm as i64), coeffs))
    }

    fn trim(&mut self) {
        let first = self.coeffs.iter().position(|&c| c != 0.0);
        match first {
            None => {
                self.coeffs.clear();
                self.lowest = 0;
            }
            Some(f) => {
                let last = self.coeffs.iter().rposition(|&c| c != 0.0).unwrap();
                self.coeffs.truncate(last + 1);
                self.coeffs.drain(..f);
                self.lowest += f as i64;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn lowest(&self) -> i64 {
        self.lowest
    }

    /// Highest stored index; `lowest - 1` for the zero symbol.
    pub fn highest(&self) -> i64 {
        self.lowest + self.coeffs.len() as i64 - 1
    }

    /// Number of coefficients with negative index, `n_-`.
    pub fn n_minus(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            (-self.lowest).max(0) as usize
        }
    }

    /// Number of coefficients with positive index, `n_+`.
    pub fn n_plus(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            self.highest().max(0) as usize
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: i64) -> f64 {
        let i = k - self.lowest;
        if i < 0 || i as usize >= self.coeffs.len() {
            0.0
        } else {
            self.coeffs[i as usize]
        }
    }

    /// Dense coefficients of the indices `lo..=hi`, zero filled.
    pub fn coeff_range(&self, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|k| self.coeff(k)).collect()
    }

    /// `||a||_W = sum |a_k|`
    pub fn wiener_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.lowest, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `z^k a(z)`
    pub fn shift(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        LaurentSymbol {
            lowest: self.lowest + k,
            coeffs: self.coeffs.clone(),
        }
    }

    /// `a(z^{-1})`, the symbol of `T(a)^T`.
    pub fn reversed(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut c = self.coeffs.clone();
        c.reverse();
        LaurentSymbol {
            lowest: -self.highest(),
            coeffs: c,
        }
    }

    /// Keeps only the coefficients with index in `lo..=hi`.
    pub fn clip(&self, lo: i64, hi: i64) -> Self {
        if lo > hi {
            return Self::zero();
        }
        let lo = lo.max(self.lowest);
        let hi = hi.min(self.highest());
        if lo > hi {
            return Self::zero();
        }
        Self::new(lo, self.coeff_range(lo, hi))
    }

    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        // Horner on the polynomial part, then multiply by z^lowest.
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.lowest as i32)
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let lo = self.lowest.min(other.lowest);
        let hi = self.highest().max(other.highest());
        Self::new(
            lo,
            (lo..=hi).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        LaurentSymbol {
            lowest: self.lowest,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    /// Exact coefficient convolution.
    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        Self::new(
            self.lowest + other.lowest,
            conv::convolve(&self.coeffs, &other.coeffs),
        )
    }

    /// Splits `a(z) = a_minus(z^{-1}) + a0 + a_plus(z)`. Both `a_minus` and
    /// `a_plus` are power series with zero constant term; `a_minus` holds
    /// `a_{-i}` as the coefficient of `z^i`.
    pub fn split(&self) -> (Self, f64, Self) {
        let minus = self.clip(self.lowest.min(-1), -1).reversed();
        let plus = self.clip(1, self.highest().max(1));
        (minus, self.coeff(0), plus)
    }

    /// Power series with the nonnegative-index coefficients, `a_0 + a_plus`.
    pub fn analytic_part(&self) -> Self {
        self.clip(0, self.highest().max(0))
    }

    /// Greedy truncation of the symbol tails: repeatedly drops the smaller of
    /// the two extremal coefficients while its modulus is below the remaining
    /// budget, debiting the budget. Guarantees `||a - result||_W <= eps`.
    pub fn truncate(&self, eps: f64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let c = &self.coeffs;
        let mut lo = 0usize;
        let mut hi = c.len() - 1;
        let mut budget = eps;
        let mut empty = false;
        loop {
            let l = c[lo].abs();
            let h = c[hi].abs();
            if l.min(h) >= budget {
                break;
            }
            if lo == hi {
                empty = true;
                break;
            }
            if h < l {
                budget -= h;
                hi -= 1;
            } else {
                budget -= l;
                lo += 1;
            }
        }
        if empty {
            return Self::zero();
        }
        Self::new(self.lowest + lo as i64, c[lo..=hi].to_vec())
    }

    /// Winding number of `a(z)` around the origin along the unit circle,
    /// with the default vanishing safeguard `1e-10 ||a||_W`.
    pub fn winding_number(&self) -> Result<i64> {
        self.winding_number_with(1e-10)
    }

    pub fn winding_number_with(&self, safeguard: f64) -> Result<i64> {
        if self.is_zero() {
            return Err(QtError::SymbolVanishesOnCircle { min_modulus: 0.0 });
        }
        let norm = self.wiener_norm();
        let len = self.coeffs.len();
        let mut n = (32 * len).next_power_of_two().max(64);
        const MAX_GRID: usize = 1 << 24;
        loop {
            let values = self.grid_values(n);
            let min_mod = values
                .iter()
                .map(|v| v.norm())
                .fold(f64::INFINITY, f64::min);
            if min_mod < safeguard * norm {
                return Err(QtError::SymbolVanishesOnCircle {
                    min_modulus: min_mod,
                });
            }
            let mut total = 0.0;
            for j in 0..n {
                let next = values[(j + 1) % n];
                total += (next / values[j]).arg();
            }
            let turns = total / (2.0 * PI);
            let rounded = turns.round();
            if (turns - rounded).abs() <= 1e-3 {
                return Ok(rounded as i64 + self.lowest);
            }
            if n >= MAX_GRID {
                return Err(QtError::NoConvergence {
                    what: "winding number grid refinement",
                    iterations: n,
                });
            }
            n *= 2;
        }
    }

    /// Values of the polynomial part `z^{-lowest} a(z)` on `n` equispaced
    /// points of the unit circle, `n >= len`.
    fn grid_values(&self, n: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            buf[i % n].re += c;
        }
        let mut planner = rustfft::FftPlanner::<f64>::new();
        planner.plan_fft_inverse(n).process(&mut buf);
        buf
    }

    /// Minimum of `|a(z)|` over a dense grid of the unit circle.
    pub fn min_modulus_on_circle(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let n = (32 * self.coeffs.len()).next_power_of_two().max(64);
        self.grid_values(n)
            .iter()
            .map(|v| v.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Inverse of a power series by the Sieveking-Kung doubling scheme; see
    /// [`invert_power_series_with`].
    pub fn invert_power_series(&self, eps: f64) -> Result<Self> {
        invert_power_series_with(self, None, eps, &SeriesInversionOptions::default())
            .map(|r| r.inverse)
    }
}

impl Add for &LaurentSymbol {
    type Output = LaurentSymbol;
    fn add(self, rhs: &LaurentSymbol) -> LaurentSymbol {
        LaurentSymbol::add(self, rhs)
    }
}

impl Sub for &LaurentSymbol {
    type Output = LaurentSymbol;
    fn sub(self, rhs: &LaurentSymbol) -> LaurentSymbol {
        LaurentSymbol::sub(self, rhs)
    }
}

impl Mul for &LaurentSymbol {
    type Output = LaurentSymbol;
    fn mul(self, rhs: &LaurentSymbol) -> LaurentSymbol {
        LaurentSymbol::mul(self, rhs)
    }
}

impl Neg for &LaurentSymbol {
    type Output = LaurentSymbol;
    fn neg(self) -> LaurentSymbol {
        LaurentSymbol::neg(self)
    }
}

#[derive(Clone, Debug)]
pub struct SeriesInversionOptions {
    /// Number of coefficients computed by forward substitution before doubling.
    pub initial_block: usize,
    pub max_doublings: usize,
}

impl Default for SeriesInversionOptions {
    fn default() -> Self {
        SeriesInversionOptions {
            initial_block: 8,
            max_doublings: 50,
        }
    }
}

/// Result of a power-series inversion, with the Wiener norms of the
/// residuals `u v_q - 1` observed at each doubling step.
#[derive(Clone, Debug)]
pub struct SeriesInverse {
    pub inverse: LaurentSymbol,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

/// Computes `v ~ 1/u` for a power series `u` with `u_0 != 0` such that
/// `||u v - 1||_W <= eps ||u||_W`.
///
/// The first block of coefficients comes from `seed` when given, otherwise
/// from forward substitution. Each doubling step updates
/// `v <- v - v (u v - 1)`. While `||u v - 1||_W >= 1` the update is cut to
/// twice the current length (this is the triangular block identity and only
/// extends the exact prefix); afterwards the full product is kept, so the
/// residual is squared at every step.
///
/// Returns early without error when the residual reaches the rounding floor
/// `16 eps_mach ||u||_W ||v||_W` even if `eps` is tighter than that.
pub fn invert_power_series_with(
    u: &LaurentSymbol,
    seed: Option<&[f64]>,
    eps: f64,
    opts: &SeriesInversionOptions,
) -> Result<SeriesInverse> {
    if u.is_zero() || u.lowest() != 0 || u.coeffs[0] == 0.0 {
        return Err(QtError::NonInvertibleSeries);
    }
    let uc = u.coeffs();
    let u0 = uc[0];
    let norm_u = u.wiener_norm();
    if uc.len() == 1 {
        return Ok(SeriesInverse {
            inverse: LaurentSymbol::constant(1.0 / u0),
            residual: 0.0,
            residual_history: vec![0.0],
        });
    }

    let mut v: Vec<f64> = match seed {
        Some(s) if !s.is_empty() => s.to_vec(),
        _ => {
            let q = opts.initial_block.max(1);
            let mut v = vec![0.0; q];
            v[0] = 1.0 / u0;
            for k in 1..q {
                let mut acc = 0.0;
                for j in 1..=k.min(uc.len() - 1) {
                    acc += uc[j] * v[k - j];
                }
                v[k] = -acc / u0;
            }
            v
        }
    };

    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut doublings = 0usize;
    loop {
        let mut r = conv::convolve(uc, &v);
        r[0] -= 1.0;
        let res: f64 = r.iter().map(|c| c.abs()).sum();
        history.push(res);
        if !res.is_finite() {
            return Err(QtError::NoConvergence {
                what: "power series inversion",
                iterations: doublings,
            });
        }
        if best.as_ref().is_none_or(|(b, _)| res < *b) {
            best = Some((res, v.clone()));
        }
        let norm_v: f64 = v.iter().map(|c| c.abs()).sum();
        let floor = 16.0 * f64::EPSILON * norm_u * norm_v;
        let stagnated = history.len() >= 2 && res >= history[history.len() - 2];
        if res <= eps * norm_u || (stagnated && res <= 64.0 * floor) || res <= floor {
            let (res, v) = best.unwrap();
            return Ok(SeriesInverse {
                inverse: LaurentSymbol::power_series(v),
                residual: res,
                residual_history: history,
            });
        }
        if doublings >= opts.max_doublings {
            return Err(QtError::NoConvergence {
                what: "power series inversion",
                iterations: doublings,
            });
        }
        let vr = conv::convolve(&v, &r);
        let keep = if res >= 1.0 {
            2 * v.len()
        } else {
            v.len().max(vr.len())
        };
        let mut next = vec![0.0; keep];
        for (i, x) in v.iter().enumerate().take(keep) {
            next[i] = *x;
        }
        for (i, x) in vr.iter().enumerate().take(keep) {
            next[i] -= x;
        }
        while next.len() > 1 && *next.last().unwrap() == 0.0 {
            next.pop();
        }
        v = next;
        doublings += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> LaurentSymbol {
        // -z^{-1} + 2 + z + z^2
        LaurentSymbol::from_neg_pos(&[2.0, -1.0], &[2.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn constructor_and_norm() {
        let a = example();
        assert_eq!(a.lowest(), -1);
        assert_eq!(a.highest(), 2);
        assert_eq!(a.wiener_norm(), 5.0);
        assert_eq!(LaurentSymbol::zero().wiener_norm(), 0.0);
        let e = LaurentSymbol::from_neg_pos(&[1.0, 2.0], &[3.0]);
        assert!(matches!(e, Err(QtError::ConstantTermMismatch { .. })));
    }

    #[test]
    fn geometric_norm() {
        let a = LaurentSymbol::power_series((0..=50).map(|j| (-(j as f64) / 10.0).exp()).collect());
        let direct: f64 = (0..=50).map(|j| (-(j as f64) / 10.0).exp()).sum();
        assert!((a.wiener_norm() - direct).abs() < 1e-14);
        let closed = (1.0 - (-5.1f64).exp()) / (1.0 - (-0.1f64).exp());
        assert!((a.wiener_norm() - closed).abs() < 1e-12);
    }

    #[test]
    fn add_neg_scale() {
        let a = LaurentSymbol::power_series(vec![1.0, 1.0]);
        let b = LaurentSymbol::power_series(vec![1.0, -1.0]);
        assert_eq!(&a + &b, LaurentSymbol::constant(2.0));
        let c = &LaurentSymbol::monomial(-1, 1.0) + &LaurentSymbol::monomial(1, 1.0);
        assert_eq!(c, LaurentSymbol::new(-1, vec![1.0, 0.0, 1.0]));
        assert!((&example() + &(-&example())).is_zero());
        assert_eq!(example().scale(0.0), LaurentSymbol::zero());
    }

    #[test]
    fn products() {
        let a = LaurentSymbol::power_series(vec![1.0, -0.5]);
        let b = LaurentSymbol::new(-1, vec![-0.5, 1.0]);
        assert_eq!(&a * &b, LaurentSymbol::new(-1, vec![-0.5, 1.25, -0.5]));
        let p = &LaurentSymbol::monomial(2, 1.0) * &LaurentSymbol::monomial(-2, 1.0);
        assert_eq!(p, LaurentSymbol::constant(1.0));
    }

    #[test]
    fn split_examples() {
        let (m, a0, p) = example().split();
        assert_eq!(m, LaurentSymbol::monomial(1, 1.0).scale(-1.0));
        assert_eq!(a0, 2.0);
        assert_eq!(p, LaurentSymbol::new(1, vec![1.0, 1.0]));
        let (m, a0, p) = LaurentSymbol::constant(3.0).split();
        assert!(m.is_zero() && p.is_zero() && a0 == 3.0);
        let (m, a0, p) = LaurentSymbol::monomial(-3, 1.0).split();
        assert_eq!(m, LaurentSymbol::monomial(3, 1.0));
        assert!(a0 == 0.0 && p.is_zero());
    }

    #[test]
    fn truncation_examples() {
        let a = LaurentSymbol::new(-5, {
            let mut v = vec![0.0; 11];
            v[0] = 1e-16;
            v[5] = 1.0;
            v[10] = 1e-16;
            v
        });
        assert_eq!(a.truncate(1e-15), LaurentSymbol::constant(1.0));
        let b = LaurentSymbol::power_series(vec![1.0, 1.0]);
        assert_eq!(b.truncate(0.0), b);
    }

    #[test]
    fn truncation_exponential_tails() {
        let a = LaurentSymbol::new(
            -30,
            (-30..=30).map(|j: i64| (-(j.abs() as f64)).exp()).collect(),
        );
        let t = a.truncate(1e-8);
        assert_eq!(t.lowest(), -19);
        assert_eq!(t.highest(), 19);
        assert!((&a - &t).wiener_norm() <= 1e-8);
    }

    #[test]
    fn winding_examples() {
        assert_eq!(LaurentSymbol::monomial(1, 1.0).winding_number().unwrap(), 1);
        let a = LaurentSymbol::new(-1, vec![-0.5, 1.25, -0.5]);
        assert_eq!(a.winding_number().unwrap(), 0);
        let f1 = LaurentSymbol::power_series(vec![1.0, -0.25]);
        let f2 = LaurentSymbol::power_series(vec![1.0, -0.2]);
        let b = &(&LaurentSymbol::monomial(-1, 1.0) * &f1) * &f2;
        assert_eq!(b.winding_number().unwrap(), -1);
        let c = LaurentSymbol::new(-1, vec![1.0, 2.0, 1.0]); // (1+z)^2 / z vanishes at -1
        assert!(matches!(
            c.winding_number(),
            Err(QtError::SymbolVanishesOnCircle { .. })
        ));
    }

    #[test]
    fn invert_geometric() {
        let u = LaurentSymbol::power_series(vec![1.0, -0.5]);
        let v = u.invert_power_series(1e-15).unwrap();
        for k in 0..40 {
            assert!((v.coeff(k) - 0.5f64.powi(k as i32)).abs() < 1e-15);
        }
        let c = LaurentSymbol::constant(3.0)
            .invert_power_series(1e-15)
            .unwrap();
        assert_eq!(c, LaurentSymbol::constant(1.0 / 3.0));
        assert!(matches!(
            LaurentSymbol::monomial(1, 1.0).invert_power_series(1e-10),
            Err(QtError::NonInvertibleSeries)
        ));
    }

    #[test]
    fn invert_slow_geometric_against_closed_form() {
        let u = LaurentSymbol::power_series(vec![1.0, -0.9]);
        let r = invert_power_series_with(&u, None, 1e-12, &Default::default()).unwrap();
        assert!(r.residual <= 1e-12 * u.wiener_norm());
        let exact: Vec<f64> = (0..2000).map(|k| 0.9f64.powi(k)).collect();
        for (k, e) in exact.iter().enumerate().take(r.inverse.len()) {
            assert!((r.inverse.coeff(k as i64) - e).abs() < 1e-12, "k = {k}");
        }
    }
}
