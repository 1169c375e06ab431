//! Semi-infinite quasi-Toeplitz matrices `A = T(a) + E`.

use nalgebra::DMatrix;

use crate::algebra::Algebra;
use crate::correction::{
    compress_svd, concat_all, resize_rows, toeplitz_times, toeplitz_transpose_times, Correction,
};
use crate::error::{QtError, Result};
use crate::hankel::{CompressionOptions, HankelProduct};
use crate::symbol::LaurentSymbol;
use crate::wiener_hopf::factorize;

/// Weight of the symbol in the QT norm, `(1 + sqrt 5) / 2`.
pub const ALPHA: f64 = 1.618_033_988_749_895;

/// Default relative truncation tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-15;

/// `T(a) + E` with `E = U V^T` supported in the top-left corner.
///
/// Arithmetic results are truncated so that they match the exact result up
/// to a relative QT-norm error of `tolerance`.
#[derive(Clone, Debug)]
pub struct QtMatrix {
    symbol: LaurentSymbol,
    corr: Correction,
    tolerance: f64,
    // set by truncation so that truncating again is a no-op
    compressed: bool,
}

/// Diagnostics of a Toeplitz inversion.
#[derive(Clone, Debug, Default)]
pub struct InversionReport {
    /// `||a b - 1||_W` for the computed symbol `b`.
    pub e_inv: f64,
    pub residual_ul: f64,
    pub residual_u: f64,
    pub residual_l: f64,
    /// `||v_hat||_W`, the estimate of `||u^{-1}||_W`.
    pub norm_u_inv: f64,
    /// `||w_hat||_W`, the estimate of `||l^{-1}||_W`.
    pub norm_l_inv: f64,
    /// `||b||_W`, the estimate of `||a^{-1}||_W`.
    pub norm_a_inv: f64,
    /// `(alpha ||a^{-1}||_W + ||u^{-1}||_W ||l^{-1}||_W) eps`
    pub bound: f64,
    /// `||A B - I||_QT` when requested.
    pub check: Option<f64>,
}

impl InversionReport {
    /// `alpha ||a^{-1}||_W + ||u^{-1}||_W ||l^{-1}||_W`
    pub fn amplification(&self) -> f64 {
        ALPHA * self.norm_a_inv + self.norm_u_inv * self.norm_l_inv
    }
}

impl QtMatrix {
    pub fn new(symbol: LaurentSymbol, corr: Correction) -> Self {
        QtMatrix {
            symbol,
            corr,
            tolerance: DEFAULT_TOLERANCE,
            compressed: false,
        }
    }

    pub fn toeplitz(symbol: LaurentSymbol) -> Self {
        Self::new(symbol, Correction::zero())
    }

    /// `T(a)` from the coefficients `[a_0, a_-1, ...]` and `[a_0, a_1, ...]`.
    pub fn from_neg_pos(neg: &[f64], pos: &[f64]) -> Result<Self> {
        Ok(Self::toeplitz(LaurentSymbol::from_neg_pos(neg, pos)?))
    }

    /// `T(a) + E` with `E` given as a dense top-left block.
    pub fn with_dense_correction(symbol: LaurentSymbol, e: &DMatrix<f64>) -> Self {
        Self::new(symbol, Correction::from_dense(e, 1e-15))
    }

    pub fn identity() -> Self {
        Self::toeplitz(LaurentSymbol::constant(1.0))
    }

    pub fn zero() -> Self {
        Self::toeplitz(LaurentSymbol::zero())
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.compressed = false;
        self
    }

    pub fn symbol(&self) -> &LaurentSymbol {
        &self.symbol
    }

    pub fn correction(&self) -> &Correction {
        &self.corr
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn is_zero(&self) -> bool {
        self.symbol.is_zero() && self.corr.is_zero()
    }

    /// `alpha ||a||_W + ||E||_2`
    pub fn qt_norm(&self) -> f64 {
        ALPHA * self.symbol.wiener_norm() + self.corr.norm2()
    }

    /// Entry `(i, j)`, zero-based.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.symbol.coeff(j as i64 - i as i64) + self.corr.entry(i, j)
    }

    /// Leading `rows x cols` section.
    pub fn to_dense(&self, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut d = self.corr.to_dense(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                d[(i, j)] += self.symbol.coeff(j as i64 - i as i64);
            }
        }
        d
    }

    /// Entries at the zero-based row and column indices.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.entry(rows[r], cols[c]))
    }

    pub fn neg(&self) -> Self {
        QtMatrix {
            symbol: self.symbol.neg(),
            corr: self.corr.neg(),
            tolerance: self.tolerance,
            compressed: self.compressed,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        QtMatrix {
            symbol: self.symbol.scale(s),
            corr: self.corr.scale(s),
            tolerance: self.tolerance,
            compressed: false,
        }
    }

    pub fn transpose(&self) -> Self {
        QtMatrix {
            symbol: self.symbol.reversed(),
            corr: self.corr.transpose(),
            tolerance: self.tolerance,
            compressed: false,
        }
    }

    /// The truncation operator: drops symbol tails within
    /// `eps ||A||_QT / (2 alpha)` and compresses the correction within
    /// `eps ||A||_QT / 2`, so that `||A - QT(A)||_QT <= eps ||A||_QT`.
    /// Truncating an already truncated value returns it unchanged.
    pub fn truncate(&self) -> Self {
        if self.compressed {
            return self.clone();
        }
        self.truncate_with(self.tolerance)
    }

    fn truncate_with(&self, eps: f64) -> Self {
        let svd = self.corr.economy_svd();
        let e_norm = svd.s.iter().next().copied().unwrap_or(0.0);
        let norm = ALPHA * self.symbol.wiener_norm() + e_norm;
        let symbol = self.symbol.truncate(eps * norm / (2.0 * ALPHA));
        let corr = compress_svd(svd, eps * norm / 2.0);
        QtMatrix {
            symbol,
            corr,
            tolerance: self.tolerance,
            compressed: true,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        QtMatrix {
            symbol: self.symbol.add(&other.symbol),
            corr: self.corr.concat(&other.corr),
            tolerance: self.tolerance.max(other.tolerance),
            compressed: false,
        }
        .truncate()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// `QT(A B)`. The Hankel term of `T(a) T(b) = T(ab) - H(a-) H(b+)` is
    /// compressed with absolute accuracy `eps alpha ||ab||_W / 4` and the
    /// assembled product truncated with the remaining `3 eps / 4`.
    pub fn mul(&self, other: &Self) -> Self {
        self.mul_with(other, &CompressionOptions::default())
    }

    pub fn mul_with(&self, other: &Self, opts: &CompressionOptions) -> Self {
        let eps = self.tolerance.max(other.tolerance);
        let (a, b) = (&self.symbol, &other.symbol);
        let c = a.mul(b);
        let hp = HankelProduct::from_coeffs(
            (1..=a.n_minus() as i64).map(|i| a.coeff(-i)).collect(),
            (1..=b.n_plus() as i64).map(|j| b.coeff(j)).collect(),
        );
        let h_tol = eps * ALPHA * c.wiener_norm() / 4.0;
        let h = hp
            .compress(0.0, h_tol, opts)
            .unwrap_or_else(|_| hp.compress_dense_with(0.0, h_tol));

        let (ua, va) = (self.corr.u(), self.corr.v());
        let (ub, vb) = (other.corr.u(), other.corr.v());
        // T(a) E_b
        let t_eb = if other.corr.is_zero() {
            Correction::zero()
        } else {
            Correction::from_parts(toeplitz_times(a, ub), vb.clone())
        };
        // E_a T(b) + E_a E_b = U_a (T(b)^T V_a + V_b (U_b^T V_a))^T
        let ea_rest = if self.corr.is_zero() {
            Correction::zero()
        } else {
            let mut right = toeplitz_transpose_times(b, va);
            if !other.corr.is_zero() {
                let rows = ub.nrows().max(va.nrows());
                let coupling = resize_rows(ub, rows).transpose() * resize_rows(va, rows);
                let extra = vb * coupling;
                let r = right.nrows().max(extra.nrows());
                right = resize_rows(&right, r) + resize_rows(&extra, r);
            }
            Correction::from_parts(ua.clone(), right)
        };
        let corr = concat_all(&[&t_eb, &ea_rest, &h.neg()]);
        QtMatrix {
            symbol: c,
            corr,
            tolerance: eps,
            compressed: false,
        }
        .truncate_with(0.75 * eps)
    }

    /// `A^p` by repeated squaring.
    pub fn power(&self, p: u32) -> Self {
        let mut result = Self::identity().with_tolerance(self.tolerance);
        let mut base = self.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Inverse of `A = T(a) + U V^T` through `T(a)^{-1}` and the
    /// Sherman-Morrison-Woodbury formula
    /// `A^{-1} = T(a)^{-1} - X S^{-1} Y^T`, with `X = T(a)^{-1} U`,
    /// `Y = T(a)^{-T} V` and `S = I + V^T X`.
    pub fn inv(&self) -> Result<Self> {
        self.invert_with_report(false).map(|(b, _)| b)
    }

    /// Like [`QtMatrix::inv`]; with `check` also evaluates `||A B - I||_QT`.
    pub fn invert_with_report(&self, check: bool) -> Result<(Self, InversionReport)> {
        let eps = self.tolerance;
        let (tinv, mut report) = invert_toeplitz(&self.symbol, eps)?;
        let result = if self.corr.is_zero() {
            tinv
        } else {
            let (ua, va) = (self.corr.u(), self.corr.v());
            let x = apply_left(&tinv, ua);
            let y = apply_left(&tinv.transpose(), va);
            let k = ua.ncols();
            let rows = x.nrows().max(va.nrows());
            let s =
                DMatrix::identity(k, k) + resize_rows(va, rows).transpose() * resize_rows(&x, rows);
            let s_inv = s
                .clone()
                .lu()
                .try_inverse()
                .ok_or(QtError::SingularSchurComplement {
                    condition: f64::INFINITY,
                })?;
            let cond = crate::algebra::norm2(&s) * crate::algebra::norm2(&s_inv);
            if !cond.is_finite() || cond > 1.0 / (100.0 * eps.max(f64::EPSILON)) {
                return Err(QtError::SingularSchurComplement { condition: cond });
            }
            let update = Correction::from_parts(-(x * s_inv), y);
            QtMatrix {
                symbol: tinv.symbol.clone(),
                corr: tinv.corr.concat(&update),
                tolerance: eps,
                compressed: false,
            }
            .truncate()
        };
        if check {
            let r = self.mul(&result).sub(&Self::identity());
            report.check = Some(r.qt_norm());
        }
        Ok((result, report))
    }

    /// UL factorization `A = U L` with `U` upper and `L` lower triangular.
    ///
    /// For `A = T(a)` this is `U = T(u)`, `L = T(l(z^{-1}))` from the
    /// Wiener-Hopf factors (`l_0 = 1`). With a correction supported in the
    /// leading `m x m` block, both factors keep their Toeplitz parts and
    /// differ from them only in that block, which is the dense UL
    /// factorization of `T_m(u) T_m(l(z^{-1})) + E`.
    pub fn ul(&self) -> Result<(Self, Self)> {
        let f = factorize(&self.symbol, self.tolerance)?;
        let lt = f.l.reversed();
        let mk = |s: LaurentSymbol, c: Correction| QtMatrix {
            symbol: s,
            corr: c,
            tolerance: self.tolerance,
            compressed: false,
        };
        if self.corr.is_zero() {
            return Ok((mk(f.u, Correction::zero()), mk(lt, Correction::zero())));
        }
        let m = self.corr.rows().max(self.corr.cols());
        if m > UL_DENSE_CAP {
            return Err(QtError::Unsupported(format!(
                "UL factorization with a correction of support {m} (limit {UL_DENSE_CAP})"
            )));
        }
        let tu = QtMatrix::toeplitz(f.u.clone()).to_dense(m, m);
        let tl = QtMatrix::toeplitz(lt.clone()).to_dense(m, m);
        let block = &tu * &tl + self.corr.to_dense(m, m);
        let (u11, l11) = dense_ul(&block)?;
        let cu = Correction::from_dense(&(u11 - tu), 1e-16);
        let cl = Correction::from_dense(&(l11 - tl), 1e-16);
        Ok((mk(f.u, cu), mk(lt, cl)))
    }
}

/// Largest correction support handled by [`QtMatrix::ul`].
pub const UL_DENSE_CAP: usize = 2048;

/// `B X` for a QT matrix `B` and a block `X` supported on its first rows.
fn apply_left(b: &QtMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    let tx = toeplitz_times(&b.symbol, x);
    if b.corr.is_zero() {
        return tx;
    }
    let (u, v) = (b.corr.u(), b.corr.v());
    let rows = v.nrows().max(x.nrows());
    let ex = u * (resize_rows(v, rows).transpose() * resize_rows(x, rows));
    let r = tx.nrows().max(ex.nrows());
    resize_rows(&tx, r) + resize_rows(&ex, r)
}

/// `M = U L` with `U` upper triangular and `L` unit lower triangular, no
/// pivoting.
fn dense_ul(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let scale = m.amax();
    // U L of M is the LU of the row- and column-reversed transpose, flipped back
    let mut a = DMatrix::from_fn(n, n, |i, j| m[(n - 1 - j, n - 1 - i)]);
    for k in 0..n {
        let piv = a[(k, k)];
        if piv.abs() <= f64::EPSILON * scale * n as f64 {
            return Err(QtError::FactorizationFailed(
                "zero pivot in the UL factorization of the correction block".into(),
            ));
        }
        for i in k + 1..n {
            let f = a[(i, k)] / piv;
            a[(i, k)] = f;
            for j in k + 1..n {
                let t = a[(k, j)];
                a[(i, j)] -= f * t;
            }
        }
    }
    // a now holds unit-lower Ln and upper Un; M = J Un^T J  J Ln^T J
    let u = DMatrix::from_fn(n, n, |i, j| {
        let (r, c) = (n - 1 - j, n - 1 - i);
        if r <= c {
            a[(r, c)]
        } else {
            0.0
        }
    });
    let l = DMatrix::from_fn(n, n, |i, j| {
        let (r, c) = (n - 1 - j, n - 1 - i);
        match r.cmp(&c) {
            std::cmp::Ordering::Greater => a[(r, c)],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => 0.0,
        }
    });
    Ok((u, l))
}

/// `T(a)^{-1}` as a QT matrix: with the Wiener-Hopf factors
/// `a = u l(z^{-1})` and truncated inverses `v_hat ~ 1/u`, `w_hat ~ 1/l`,
/// the result is `T(v_hat w_hat(z^{-1})) - H(w_hat) H(v_hat)`.
pub fn invert_toeplitz(a: &LaurentSymbol, eps: f64) -> Result<(QtMatrix, InversionReport)> {
    let f = factorize(a, eps / 4.0)?;
    let (v, w) = (&f.v_hat, &f.w_hat);
    let b = v.mul(&w.reversed());
    let hp = HankelProduct::new(w, v);
    let h_tol = eps * ALPHA * b.wiener_norm() / 4.0;
    let h = hp
        .compress(0.0, h_tol, &CompressionOptions::default())
        .unwrap_or_else(|_| hp.compress_dense_with(0.0, h_tol));
    let report = InversionReport {
        e_inv: a.mul(&b).sub(&LaurentSymbol::constant(1.0)).wiener_norm(),
        residual_ul: f.residual_ul,
        residual_u: f.residual_u,
        residual_l: f.residual_l,
        norm_u_inv: v.wiener_norm(),
        norm_l_inv: w.wiener_norm(),
        norm_a_inv: b.wiener_norm(),
        bound: (ALPHA * b.wiener_norm() + v.wiener_norm() * w.wiener_norm()) * eps,
        check: None,
    };
    let m = QtMatrix {
        symbol: b,
        corr: h.neg(),
        tolerance: eps,
        compressed: false,
    }
    .truncate_with(0.75 * eps);
    Ok((m, report))
}

// the truncation marker is bookkeeping, not part of the value
impl PartialEq for QtMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.symbol == other.symbol && self.corr == other.corr && self.tolerance == other.tolerance
    }
}

impl Algebra for QtMatrix {
    fn add(&self, other: &Self) -> Result<Self> {
        Ok(QtMatrix::add(self, other))
    }

    fn sub(&self, other: &Self) -> Result<Self> {
        Ok(QtMatrix::sub(self, other))
    }

    fn mul(&self, other: &Self) -> Result<Self> {
        Ok(QtMatrix::mul(self, other))
    }

    fn scale(&self, s: f64) -> Self {
        QtMatrix::scale(self, s)
    }

    fn inv(&self) -> Result<Self> {
        QtMatrix::inv(self)
    }

    fn norm(&self) -> f64 {
        self.qt_norm()
    }

    fn identity_like(&self) -> Self {
        QtMatrix::identity().with_tolerance(self.tolerance)
    }

    fn working_tolerance(&self) -> f64 {
        self.tolerance
    }

    fn at_tolerance(&self, tol: f64) -> Self {
        self.clone().with_tolerance(tol)
    }
}
