//! Products of two semi-infinite Hankel operators `H(f) H(g)`, applied
//! implicitly through FFT convolutions and compressed to low rank.

use std::sync::atomic::{AtomicU64, AtomicU8, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::{norm2, thin_svd, ThinSvd};
use crate::conv::Convolver;
use crate::correction::{thin_qr, Correction};
use crate::error::{QtError, Result};
use crate::symbol::LaurentSymbol;

/// Largest support handled by a dense SVD.
pub const DENSE_CAP: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompressionMethod {
    Lanczos,
    Random,
}

static DEFAULT_METHOD: AtomicU8 = AtomicU8::new(0);
static DEFAULT_SEED: AtomicU64 = AtomicU64::new(0x5eed);

/// Sets the process-wide compression method used when options are not given.
pub fn set_default_compression(method: CompressionMethod) {
    let v = match method {
        CompressionMethod::Lanczos => 0,
        CompressionMethod::Random => 1,
    };
    DEFAULT_METHOD.store(v, Ordering::Relaxed);
}

pub fn default_compression() -> CompressionMethod {
    match DEFAULT_METHOD.load(Ordering::Relaxed) {
        1 => CompressionMethod::Random,
        _ => CompressionMethod::Lanczos,
    }
}

pub fn set_default_seed(seed: u64) {
    DEFAULT_SEED.store(seed, Ordering::Relaxed);
}

#[derive(Clone, Debug)]
pub struct CompressionOptions {
    pub method: CompressionMethod,
    pub seed: u64,
    /// Supports up to this size go through a dense SVD.
    pub dense_cap: usize,
    /// Optional rank limit; exceeding it is reported as `NoConvergence`.
    pub max_rank: Option<usize>,
}

impl Default for CompressionOptions {
    fn default() -> Self {
        CompressionOptions {
            method: default_compression(),
            seed: DEFAULT_SEED.load(Ordering::Relaxed),
            dense_cap: DENSE_CAP,
            max_rank: None,
        }
    }
}

/// Fraction of the accuracy target given to the final singular-value cut;
/// the rest is left to the basis construction.
const CUT_FRACTION: f64 = 0.5;

/// The operator `H(f) H(g)` with `H(h)_{ij} = h_{i+j+1}` (zero-based), i.e.
/// entry `(1,1)` of `H(h)` is the coefficient of `z`.
#[derive(Clone, Debug)]
pub struct HankelProduct {
    f: Vec<f64>,
    g: Vec<f64>,
}

impl HankelProduct {
    /// Uses the positive-index coefficients of `f` and `g`.
    pub fn new(f: &LaurentSymbol, g: &LaurentSymbol) -> Self {
        let take = |s: &LaurentSymbol| -> Vec<f64> {
            let hi = s.highest();
            if s.is_zero() || hi < 1 {
                Vec::new()
            } else {
                s.coeff_range(1, hi)
            }
        };
        Self::from_coeffs(take(f), take(g))
    }

    /// `f[t]` and `g[t]` are the coefficients of `z^{t+1}`.
    pub fn from_coeffs(f: Vec<f64>, g: Vec<f64>) -> Self {
        let trim = |mut v: Vec<f64>| {
            while v.last() == Some(&0.0) {
                v.pop();
            }
            v
        };
        HankelProduct {
            f: trim(f),
            g: trim(g),
        }
    }

    /// Row support.
    pub fn rows(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            self.f.len()
        }
    }

    /// Column support.
    pub fn cols(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            self.g.len()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_empty() || self.g.is_empty()
    }

    fn inner(&self) -> usize {
        self.f.len().min(self.g.len())
    }

    pub fn transpose(&self) -> Self {
        HankelProduct {
            f: self.g.clone(),
            g: self.f.clone(),
        }
    }

    fn check(&self, x: &DMatrix<f64>, expected: usize) -> Result<()> {
        if x.nrows() != expected {
            return Err(QtError::DimensionMismatch {
                expected,
                found: x.nrows(),
            });
        }
        Ok(())
    }

    /// `H(f) H(g) X` for `X` with `cols()` rows.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(x, self.cols())?;
        Ok(self.apply_unchecked(x))
    }

    /// `(H(f) H(g))^T X = H(g) H(f) X` for `X` with `rows()` rows.
    pub fn apply_transpose(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(x, self.rows())?;
        Ok(self.transpose().apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        if self.is_zero() {
            return DMatrix::zeros(self.rows(), x.ncols());
        }
        let y = hankel_apply(&self.g, x, self.inner());
        hankel_apply(&self.f, &y, self.f.len())
    }

    /// Dense `rows() x cols()` matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        if self.is_zero() {
            return DMatrix::zeros(0, 0);
        }
        let k = self.inner();
        let hf = DMatrix::from_fn(self.f.len(), k, |i, j| {
            self.f.get(i + j).copied().unwrap_or(0.0)
        });
        let hg = DMatrix::from_fn(k, self.g.len(), |i, j| {
            self.g.get(i + j).copied().unwrap_or(0.0)
        });
        hf * hg
    }

    /// Spectral norm estimate by a few steps of power iteration.
    pub fn norm_estimate(&self, seed: u64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        let mut x = gaussian(self.cols(), 1, &mut rng);
        let mut est = 0.0;
        for _ in 0..30 {
            let nx = x.norm();
            if nx == 0.0 {
                return 0.0;
            }
            x /= nx;
            let y = self.apply_unchecked(&x);
            let new = y.norm();
            x = self.transpose().apply_unchecked(&y);
            if (new - est).abs() <= 1e-3 * new {
                est = new;
                break;
            }
            est = new;
        }
        est
    }

    /// Compresses with the configured method: dense SVD for supports up to
    /// `dense_cap`, otherwise Lanczos or random sampling. The result `U V^T`
    /// satisfies `||U V^T - H(f) H(g)||_2 <= max(rel_tol ||H(f)H(g)||_2, abs_tol)`
    /// up to the accuracy of the error estimates.
    pub fn compress(
        &self,
        rel_tol: f64,
        abs_tol: f64,
        opts: &CompressionOptions,
    ) -> Result<Correction> {
        if self.is_zero() {
            return Ok(Correction::zero());
        }
        if self.rows().max(self.cols()) <= opts.dense_cap {
            return Ok(self.compress_dense_with(rel_tol, abs_tol));
        }
        match opts.method {
            CompressionMethod::Lanczos => self.compress_lanczos_with(rel_tol, abs_tol, opts),
            CompressionMethod::Random => self.compress_random_with(rel_tol, abs_tol, opts),
        }
    }

    pub fn compress_dense(&self, tol: f64) -> Correction {
        self.compress_dense_with(tol, 0.0)
    }

    pub fn compress_lanczos(&self, tol: f64) -> Result<Correction> {
        self.compress_lanczos_with(tol, 0.0, &CompressionOptions::default())
    }

    pub fn compress_random(&self, tol: f64, seed: u64) -> Result<Correction> {
        let opts = CompressionOptions {
            seed,
            ..CompressionOptions::default()
        };
        self.compress_random_with(tol, 0.0, &opts)
    }

    pub fn compress_dense_with(&self, rel_tol: f64, abs_tol: f64) -> Correction {
        if self.is_zero() {
            return Correction::zero();
        }
        let d = self.to_dense();
        let ThinSvd { u, s, v } = thin_svd(&d);
        let cut = rel_tol.max(0.0) * s[0] * CUT_FRACTION;
        let cut = cut.max(abs_tol * CUT_FRACTION);
        let k = s.iter().take_while(|&&x| x > cut && x > 0.0).count();
        let uk = DMatrix::from_fn(u.nrows(), k, |r, c| u[(r, c)] * s[c]);
        let vk = v.columns(0, k).into_owned();
        Correction::new(uk, vk)
            .expect("matching ranks")
            .trim_zero_rows()
    }

    /// Golub-Kahan bidiagonalization with full reorthogonalization of both
    /// bases. Stops once the trailing singular value of the bidiagonal
    /// matrix stays below the threshold for three consecutive steps, or
    /// when the Krylov space is exhausted.
    pub fn compress_lanczos_with(
        &self,
        rel_tol: f64,
        abs_tol: f64,
        opts: &CompressionOptions,
    ) -> Result<Correction> {
        if self.is_zero() {
            return Ok(Correction::zero());
        }
        let (m, n) = (self.rows(), self.cols());
        let dim = m.min(n);
        let cap = opts.max_rank.unwrap_or(dim).min(dim);
        let at = self.transpose();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

        let mut us: Vec<DVector<f64>> = Vec::new();
        let mut vs: Vec<DVector<f64>> = Vec::new();
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();

        let mut v = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
        v /= v.norm();
        let mut below = 0usize;
        let mut smax = 0.0f64;
        loop {
            // u_j = A v_j - beta_{j-1} u_{j-1}
            let mut u = col(&self.apply_unchecked(&as_mat(&v)));
            if let (Some(b), Some(up)) = (beta.last(), us.last()) {
                u.axpy(-*b, up, 1.0);
            }
            reorthogonalize(&mut u, &us);
            let a = u.norm();
            vs.push(v.clone());
            if a == 0.0 || a <= f64::EPSILON * smax * 1e-2 {
                alpha.push(0.0);
                us.push(DVector::zeros(m));
                break;
            }
            u /= a;
            alpha.push(a);
            us.push(u.clone());

            let k = alpha.len();
            if k >= dim {
                break;
            }
            if k >= cap {
                return Err(QtError::NoConvergence {
                    what: "Lanczos bidiagonalization",
                    iterations: k,
                });
            }
            // v_{j+1} = A^T u_j - alpha_j v_j
            let mut w = col(&at.apply_unchecked(&as_mat(&u)));
            w.axpy(-a, &v, 1.0);
            reorthogonalize(&mut w, &vs);
            let b = w.norm();
            smax = smax.max(bidiag_norm(&alpha, &beta, b));
            let thresh = (rel_tol * smax).max(abs_tol) * (1.0 - CUT_FRACTION);
            if a.max(b) < thresh {
                below += 1;
            } else {
                below = 0;
            }
            if below >= 3 || b <= f64::EPSILON * smax * 1e-2 {
                break;
            }
            w /= b;
            beta.push(b);
            v = w;
        }

        let k = alpha.len();
        let mut bmat = DMatrix::zeros(k, k);
        for i in 0..k {
            bmat[(i, i)] = alpha[i];
            if i + 1 < k {
                bmat[(i, i + 1)] = beta[i];
            }
        }
        let umat = DMatrix::from_columns(&us);
        let vmat = DMatrix::from_columns(&vs[..k]);
        Ok(truncate_factored(&umat, &bmat, &vmat, rel_tol, abs_tol))
    }

    /// Randomized range finder with Gaussian test blocks doubling from 16
    /// columns, and a posterior error estimate from 10 independent probes.
    pub fn compress_random_with(
        &self,
        rel_tol: f64,
        abs_tol: f64,
        opts: &CompressionOptions,
    ) -> Result<Correction> {
        if self.is_zero() {
            return Ok(Correction::zero());
        }
        let (m, n) = (self.rows(), self.cols());
        let dim = m.min(n);
        let cap = opts.max_rank.unwrap_or(dim).min(dim);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let norm = self.norm_estimate(opts.seed);
        let target = (rel_tol * norm).max(abs_tol) * (1.0 - CUT_FRACTION);

        let mut q = DMatrix::<f64>::zeros(m, 0);
        let mut block = 16usize;
        let mut prev_est = f64::INFINITY;
        loop {
            let b = block.min(dim - q.ncols()).max(1);
            let omega = gaussian(n, b, &mut rng);
            let mut y = self.apply_unchecked(&omega);
            project_out(&mut y, &q);
            project_out(&mut y, &q);
            let (qy, _) = thin_qr(&y);
            // keep only directions that survived the projection
            let mut cols = Vec::new();
            for c in 0..qy.ncols() {
                let mut c_vec = qy.column(c).into_owned();
                let before = c_vec.norm();
                for j in 0..q.ncols() {
                    let d = q.column(j).dot(&c_vec);
                    c_vec.axpy(-d, &q.column(j), 1.0);
                }
                let after = c_vec.norm();
                if after > 0.5 * before {
                    cols.push(c_vec / after);
                }
            }
            let mut all: Vec<DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
            all.extend(cols);
            q = if all.is_empty() {
                DMatrix::zeros(m, 0)
            } else {
                DMatrix::from_columns(&all)
            };

            let probes = gaussian(n, 10, &mut rng);
            let mut r = self.apply_unchecked(&probes);
            project_out(&mut r, &q);
            let worst = r.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
            let est = 10.0 * (2.0 / std::f64::consts::PI).sqrt() * worst;
            // a posterior estimate that stops improving has hit the rounding
            // floor of the Hankel products
            let stalled = est > 0.5 * prev_est;
            prev_est = est;
            if est <= target || stalled || q.ncols() >= dim {
                break;
            }
            if q.ncols() >= cap {
                return Err(QtError::NoConvergence {
                    what: "randomized range finder",
                    iterations: q.ncols(),
                });
            }
            block *= 2;
        }
        if q.ncols() == 0 {
            return Ok(Correction::zero());
        }
        // A ~ Q (Q^T A) = Q (A^T Q)^T
        let bt = self.transpose().apply_unchecked(&q);
        let (qb, rb) = thin_qr(&bt);
        // A ~ Q R_b^T Q_b^T
        let core = rb.transpose();
        Ok(truncate_factored(&q, &core, &qb, rel_tol, abs_tol))
    }
}

/// `U C V^T` truncated by an SVD of the small core `C`.
fn truncate_factored(
    u: &DMatrix<f64>,
    core: &DMatrix<f64>,
    v: &DMatrix<f64>,
    rel_tol: f64,
    abs_tol: f64,
) -> Correction {
    let ThinSvd { u: pu, s, v: pv } = thin_svd(core);
    if s.is_empty() {
        return Correction::zero();
    }
    let cut = ((rel_tol * s[0]).max(abs_tol)) * CUT_FRACTION;
    let k = s.iter().take_while(|&&x| x > cut && x > 0.0).count();
    let pk = DMatrix::from_fn(pu.nrows(), k, |r, c| pu[(r, c)] * s[c]);
    let qk = pv.columns(0, k).into_owned();
    Correction::new(u * pk, v * qk)
        .expect("matching ranks")
        .trim_zero_rows()
}

/// Largest singular value of the bidiagonal matrix with diagonal `alpha`
/// and superdiagonal `beta`, extended by the newest coupling `next`.
fn bidiag_norm(alpha: &[f64], beta: &[f64], next: f64) -> f64 {
    let k = alpha.len();
    let mut b = DMatrix::zeros(k, k + 1);
    for i in 0..k {
        b[(i, i)] = alpha[i];
        b[(i, i + 1)] = if i < beta.len() { beta[i] } else { next };
    }
    norm2(&b)
}

fn reorthogonalize(x: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let d = q.dot(x);
            x.axpy(-d, q, 1.0);
        }
    }
}

fn project_out(y: &mut DMatrix<f64>, q: &DMatrix<f64>) {
    if q.ncols() == 0 {
        return;
    }
    let c = q.transpose() * &*y;
    *y -= q * c;
}

fn as_mat(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn col(m: &DMatrix<f64>) -> DVector<f64> {
    m.column(0).into_owned()
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `H(h) X` restricted to its first `rows` rows, where `H(h)_{ij} = h[i+j]`.
pub(crate) fn hankel_apply(h: &[f64], x: &DMatrix<f64>, rows: usize) -> DMatrix<f64> {
    let k = x.ncols();
    let mut out = DMatrix::zeros(rows, k);
    if h.is_empty() || x.nrows() == 0 {
        return out;
    }
    // only the leading len(h) entries of x meet nonzero coefficients
    let len = x.nrows().min(h.len());
    let rows_eff = rows.min(h.len());
    if len * h.len() < 4096 {
        for c in 0..k {
            for i in 0..rows_eff {
                let mut acc = 0.0;
                for j in 0..len.min(h.len() - i) {
                    acc += h[i + j] * x[(j, c)];
                }
                out[(i, c)] = acc;
            }
        }
        return out;
    }
    let conv = Convolver::new(h, len);
    let rev = |c: usize| -> Vec<f64> { (0..len).rev().map(|j| x[(j, c)]).collect() };
    let mut place = |c: usize, full: &[f64]| {
        for i in 0..rows_eff {
            out[(i, c)] = full[i + len - 1];
        }
    };
    let mut c = 0;
    while c < k {
        if c + 1 < k {
            let (a, b) = conv.apply_pair(&rev(c), &rev(c + 1));
            place(c, &a);
            place(c + 1, &b);
            c += 2;
        } else {
            let a = conv.apply(&rev(c));
            place(c, &a);
            c += 1;
        }
    }
    out
}

/// Dense `H(h)` of size `rows x cols`.
pub fn dense_hankel(h: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| h.get(i + j).copied().unwrap_or(0.0))
}

/// Coefficients `a_1, ..., a_n` with `a_j` uniform on `[0, e^{-j/10}]`.
pub fn decaying_random_coeffs(n: usize, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=n)
        .map(|j| rng.random::<f64>() * (-(j as f64) / 10.0).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> LaurentSymbol {
        LaurentSymbol::monomial(1, 1.0)
    }

    #[test]
    fn single_antidiagonal() {
        let hp = HankelProduct::new(&z(), &z());
        let y = hp.apply(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(y, DMatrix::from_element(1, 1, 1.0));
        let c = hp.compress_lanczos(1e-14).unwrap();
        assert_eq!(c.rank(), 1);
        assert!((c.entry(0, 0) - 1.0).abs() < 1e-15);
        let r = hp.compress_random(1e-14, 3).unwrap();
        assert_eq!(r.rank(), 1);
    }

    #[test]
    fn zero_product() {
        let hp = HankelProduct::new(&z(), &LaurentSymbol::zero());
        assert!(hp.is_zero());
        assert!(hp.compress_random(1e-14, 1).unwrap().is_zero());
        assert!(hp.compress_lanczos(1e-14).unwrap().is_zero());
        let hp = HankelProduct::new(&z(), &LaurentSymbol::constant(4.0));
        assert!(hp.is_zero());
    }

    #[test]
    fn two_by_two_dense() {
        let f = LaurentSymbol::new(1, vec![1.0, 1.0]);
        let hp = HankelProduct::new(&f, &f);
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        let expect = &h * &h;
        let c = hp.compress_dense(1e-15);
        assert!((c.to_dense(2, 2) - &expect).norm() < 1e-14);
        assert!((hp.to_dense() - expect).norm() == 0.0);
    }

    #[test]
    fn dimension_checked() {
        let hp = HankelProduct::from_coeffs(vec![1.0, 2.0, 3.0], vec![1.0, 2.0]);
        assert!(matches!(
            hp.apply(&DMatrix::zeros(3, 1)),
            Err(QtError::DimensionMismatch { .. })
        ));
        assert!(hp.apply_transpose(&DMatrix::zeros(3, 1)).is_ok());
    }

    #[test]
    fn apply_matches_dense() {
        let f = decaying_random_coeffs(300, 1);
        let g = decaying_random_coeffs(300, 2);
        let hp = HankelProduct::from_coeffs(f.clone(), g.clone());
        let x = DMatrix::from_fn(300, 5, |i, j| ((i * 7 + j * 3) % 13) as f64 - 6.0);
        let dense = dense_hankel(&f, 300, 300) * dense_hankel(&g, 300, 300);
        let y = hp.apply(&x).unwrap();
        let yd = &dense * &x;
        assert!((&y - &yd).norm() <= 1e-13 * yd.norm());
        let yt = hp.apply_transpose(&x).unwrap();
        let ytd = dense.transpose() * &x;
        assert!((&yt - &ytd).norm() <= 1e-13 * ytd.norm());
    }

    #[test]
    fn dispatch_routes_by_size() {
        let small = HankelProduct::from_coeffs(
            decaying_random_coeffs(100, 5),
            decaying_random_coeffs(100, 6),
        );
        let opts = CompressionOptions {
            dense_cap: 500,
            max_rank: Some(1),
            ..Default::default()
        };
        // the dense path ignores the rank limit
        assert!(small.compress(1e-14, 0.0, &opts).is_ok());
        let big = HankelProduct::from_coeffs(
            decaying_random_coeffs(600, 5),
            decaying_random_coeffs(600, 6),
        );
        assert!(matches!(
            big.compress(1e-14, 0.0, &opts),
            Err(QtError::NoConvergence { .. })
        ));
    }
}
