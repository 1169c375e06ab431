//! Low-rank corner corrections `E = U V^T` with finite row support.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{thin_svd, ThinSvd};
use crate::conv::Convolver;
use crate::error::{QtError, Result};
use crate::symbol::LaurentSymbol;

/// A correction `U V^T` embedded in the top-left corner of a (possibly
/// semi-infinite) matrix. `U` has one row per row of the support, `V` one row
/// per column of the support. The zero correction has `0 x 0` factors.
#[derive(Clone, Debug, PartialEq)]
pub struct Correction {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
}

impl Default for Correction {
    fn default() -> Self {
        Self::zero()
    }
}

/// Economy SVD `Uo diag(s) Vo^T` of a correction, singular values nonincreasing.
#[derive(Clone, Debug)]
pub struct EconomySvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Correction {
    pub fn zero() -> Self {
        Correction {
            u: DMatrix::zeros(0, 0),
            v: DMatrix::zeros(0, 0),
        }
    }

    pub fn new(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(QtError::DimensionMismatch {
                expected: u.ncols(),
                found: v.ncols(),
            });
        }
        Ok(Self::from_parts(u, v))
    }

    /// Like [`Correction::new`] for factors known to have equal column counts.
    pub(crate) fn from_parts(u: DMatrix<f64>, v: DMatrix<f64>) -> Self {
        debug_assert_eq!(u.ncols(), v.ncols());
        if u.ncols() == 0 || u.nrows() == 0 || v.nrows() == 0 {
            return Self::zero();
        }
        Correction { u, v }
    }

    /// Factored form of a dense corner block, dropping singular values below
    /// `rel_tol` times the largest one.
    pub fn from_dense(m: &DMatrix<f64>, rel_tol: f64) -> Self {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Self::zero();
        }
        let ThinSvd { u, s, v } = thin_svd(m);
        let smax = s.iter().next().copied().unwrap_or(0.0);
        let k = s
            .iter()
            .take_while(|&&x| x > rel_tol * smax && x > 0.0)
            .count();
        let uk = DMatrix::from_fn(u.nrows(), k, |r, c| u[(r, c)] * s[c]);
        let vk = v.columns(0, k).into_owned();
        Self::from_parts(uk, vk).trim_zero_rows()
    }

    /// Rank-one correction `x y^T`.
    pub fn outer(x: &[f64], y: &[f64]) -> Self {
        Self::from_parts(
            DMatrix::from_column_slice(x.len(), 1, x),
            DMatrix::from_column_slice(y.len(), 1, y),
        )
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.u, self.v)
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    /// Row support (number of rows of `U`).
    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    /// Column support (number of rows of `V`).
    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i >= self.rows() || j >= self.cols() {
            return 0.0;
        }
        self.u.row(i).dot(&self.v.row(j))
    }

    /// Dense `rows x cols` top-left block of the embedded correction.
    pub fn to_dense(&self, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(rows, cols);
        if self.is_zero() {
            return out;
        }
        let r = rows.min(self.rows());
        let c = cols.min(self.cols());
        if r > 0 && c > 0 {
            let block = self.u.rows(0, r) * self.v.rows(0, c).transpose();
            out.view_mut((0, 0), (r, c)).copy_from(&block);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        Self::from_parts(&self.u * s, self.v.clone())
    }

    pub fn transpose(&self) -> Self {
        Correction {
            u: self.v.clone(),
            v: self.u.clone(),
        }
    }

    /// Horizontal stacking of the factors: `[U_a, U_b] [V_a, V_b]^T`.
    pub fn concat(&self, other: &Self) -> Self {
        concat_all(&[self, other])
    }

    /// Drops trailing rows of `U` and `V` that are exactly zero.
    pub fn trim_zero_rows(self) -> Self {
        if self.is_zero() {
            return self;
        }
        let ru = last_nonzero_row(&self.u);
        let rv = last_nonzero_row(&self.v);
        match (ru, rv) {
            (Some(ru), Some(rv)) => {
                Self::from_parts(self.u.rows(0, ru + 1).into(), self.v.rows(0, rv + 1).into())
            }
            _ => Self::zero(),
        }
    }

    /// Economy SVD from QR factorizations of both factors and an SVD of the
    /// small core `R_U R_V^T`.
    pub fn economy_svd(&self) -> EconomySvd {
        if self.is_zero() {
            return EconomySvd {
                u: DMatrix::zeros(0, 0),
                s: DVector::zeros(0),
                v: DMatrix::zeros(0, 0),
            };
        }
        let (qu, ru) = thin_qr(&self.u);
        let (qv, rv) = thin_qr(&self.v);
        let core = &ru * rv.transpose();
        let ThinSvd { u: cu, s, v: cv } = thin_svd(&core);
        // singular values below the rounding level of the factor product are
        // cancellation noise, e.g. from E + (-E)
        let scale: f64 = (0..self.rank())
            .map(|i| self.u.column(i).norm() * self.v.column(i).norm())
            .sum();
        let floor = 4.0 * f64::EPSILON * scale;
        let s = s.map(|x| if x <= floor { 0.0 } else { x });
        EconomySvd {
            u: qu * cu,
            s,
            v: qv * cv,
        }
    }

    /// Spectral norm, the largest singular value.
    pub fn norm2(&self) -> f64 {
        let svd = self.economy_svd();
        if svd.s.is_empty() {
            0.0
        } else {
            svd.s[0]
        }
    }

    /// Frobenius norm of `U V^T`, computed from the `k x k` Gram matrices.
    pub fn norm_fro(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let gu = self.u.transpose() * &self.u;
        let gv = self.v.transpose() * &self.v;
        gu.component_mul(&gv).sum().max(0.0).sqrt()
    }

    /// Returns `Ê` with `||E - Ê||_2 <= budget`: singular values below
    /// `budget / 2` are cut, then trailing rows of `Uo S` and `Vo S` are
    /// dropped (smaller first) while the accumulated dropped norm fits the
    /// remaining `budget / 2`. Rows that are exactly zero are always dropped.
    pub fn compress(&self, budget: f64) -> Self {
        let svd = self.economy_svd();
        compress_svd(svd, budget)
    }
}

pub(crate) fn compress_svd(svd: EconomySvd, budget: f64) -> Correction {
    let cut = budget / 2.0;
    let k = svd.s.iter().take_while(|&&s| s >= cut && s > 0.0).count();
    if k == 0 {
        return Correction::zero();
    }
    let s = svd.s.rows(0, k).into_owned();
    let us = DMatrix::from_fn(svd.u.nrows(), k, |r, c| svd.u[(r, c)] * s[c]);
    let vs = DMatrix::from_fn(svd.v.nrows(), k, |r, c| svd.v[(r, c)] * s[c]);
    let row_budget = budget - cut;
    let mut nu = us.nrows();
    let mut nv = vs.nrows();
    let mut spent = 0.0;
    while nu > 0 && nv > 0 {
        let cu = us.row(nu - 1).norm();
        let cv = vs.row(nv - 1).norm();
        let (c, is_u) = if cu <= cv { (cu, true) } else { (cv, false) };
        if c == 0.0 || spent + c <= row_budget {
            spent += c;
            if is_u {
                nu -= 1;
            } else {
                nv -= 1;
            }
        } else {
            break;
        }
    }
    if nu == 0 || nv == 0 {
        return Correction::zero();
    }
    Correction::from_parts(
        us.rows(0, nu).into_owned(),
        svd.v.view((0, 0), (nv, k)).into_owned(),
    )
}

pub(crate) fn concat_all(parts: &[&Correction]) -> Correction {
    let parts: Vec<&&Correction> = parts.iter().filter(|c| !c.is_zero()).collect();
    if parts.is_empty() {
        return Correction::zero();
    }
    let rows = parts.iter().map(|c| c.rows()).max().unwrap();
    let cols = parts.iter().map(|c| c.cols()).max().unwrap();
    let k: usize = parts.iter().map(|c| c.rank()).sum();
    let mut u = DMatrix::zeros(rows, k);
    let mut v = DMatrix::zeros(cols, k);
    let mut off = 0;
    for c in parts {
        u.view_mut((0, off), (c.rows(), c.rank())).copy_from(&c.u);
        v.view_mut((0, off), (c.cols(), c.rank())).copy_from(&c.v);
        off += c.rank();
    }
    Correction::from_parts(u, v)
}

fn last_nonzero_row(m: &DMatrix<f64>) -> Option<usize> {
    (0..m.nrows())
        .rev()
        .find(|&r| m.row(r).iter().any(|&x| x != 0.0))
}

/// Thin QR: `Q` is `n x min(n, k)` with orthonormal columns.
pub(crate) fn thin_qr(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// `T(a) X` for a block `X` whose rows are the leading entries of vectors
/// supported on the first `X.nrows()` indices. The result keeps every row
/// that can be nonzero.
pub fn toeplitz_times(a: &LaurentSymbol, x: &DMatrix<f64>) -> DMatrix<f64> {
    let r = x.nrows() as i64;
    let rows = (r - a.lowest()).max(0) as usize;
    toeplitz_times_rows(a, x, rows)
}

/// `T(a) X` restricted to its first `rows` rows.
pub fn toeplitz_times_rows(a: &LaurentSymbol, x: &DMatrix<f64>, rows: usize) -> DMatrix<f64> {
    let k = x.ncols();
    let mut out = DMatrix::zeros(rows, k);
    if a.is_zero() || x.nrows() == 0 || k == 0 || rows == 0 {
        return out;
    }
    // (T(a) x)_i = sum_j a_{j-i} x_j is the convolution of a(z^{-1}) with x.
    let rev = a.reversed();
    let off = rev.lowest();
    let kernel = rev.coeffs();
    let conv = Convolver::new(kernel, x.nrows());
    let small = kernel.len().min(x.nrows()) < 16;
    let mut place = |c: usize, full: &[f64]| {
        for i in 0..rows {
            let s = i as i64 - off;
            if s >= 0 && (s as usize) < full.len() {
                out[(i, c)] = full[s as usize];
            }
        }
    };
    let mut c = 0;
    while c < k {
        if small {
            let full = crate::conv::convolve_direct(kernel, x.column(c).as_slice());
            place(c, &full);
            c += 1;
        } else if c + 1 < k {
            let (f0, f1) = conv.apply_pair(x.column(c).as_slice(), x.column(c + 1).as_slice());
            place(c, &f0);
            place(c + 1, &f1);
            c += 2;
        } else {
            let f0 = conv.apply(x.column(c).as_slice());
            place(c, &f0);
            c += 1;
        }
    }
    out
}

/// `T(a)^T X = T(a(z^{-1})) X`.
pub fn toeplitz_transpose_times(a: &LaurentSymbol, x: &DMatrix<f64>) -> DMatrix<f64> {
    toeplitz_times(&a.reversed(), x)
}

/// Applies `T(a)` to the row factor of a correction: `T(a) U V^T`.
pub fn left_multiply_toeplitz(a: &LaurentSymbol, e: &Correction) -> Correction {
    if e.is_zero() {
        return Correction::zero();
    }
    Correction::from_parts(toeplitz_times(a, &e.u), e.v.clone()).trim_zero_rows()
}

/// Pads (with zero rows) or cuts a factor to exactly `rows` rows.
pub(crate) fn resize_rows(m: &DMatrix<f64>, rows: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, m.ncols());
    let r = rows.min(m.nrows());
    if r > 0 {
        out.rows_mut(0, r).copy_from(&m.rows(0, r));
    }
    out
}
