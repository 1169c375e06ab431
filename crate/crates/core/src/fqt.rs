//! Finite quasi-Toeplitz matrices `T_{n,m}(a) + U V^T + J_n W Z^T J_m`.
//!
//! The top correction lives in the leading corner, the bottom one is stored
//! flipped and lives in the trailing corner. When the two corners would
//! overlap they are merged into a single top correction.

use nalgebra::DMatrix;

use crate::algebra::{norm2, Algebra};
use crate::correction::{compress_svd, concat_all, resize_rows, toeplitz_times_rows, Correction};
use crate::error::{QtError, Result};
use crate::hankel::{CompressionOptions, HankelProduct};
use crate::qt::{ALPHA, DEFAULT_TOLERANCE};
use crate::symbol::LaurentSymbol;
use crate::wiener_hopf::factorize;

/// Largest number of entries [`FiniteQtMatrix::to_dense`] materializes.
pub const DENSE_ENTRY_CAP: usize = 4096 * 4096;

#[derive(Clone, Debug)]
pub struct FiniteQtMatrix {
    symbol: LaurentSymbol,
    top: Correction,
    bot: Correction,
    n: usize,
    m: usize,
    tolerance: f64,
    compressed: bool,
}

/// Row and column extents of the two corrections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CornerSupports {
    pub top_rows: usize,
    pub top_cols: usize,
    pub bot_rows: usize,
    pub bot_cols: usize,
}

impl FiniteQtMatrix {
    /// `T_{n,m}(a) + top + J_n bot J_m`. Coefficients of `a` outside the
    /// matrix are dropped and overlapping corners are merged.
    pub fn new(
        symbol: LaurentSymbol,
        top: Correction,
        bot: Correction,
        n: usize,
        m: usize,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(QtError::InvalidArgument(
                "finite QT dimensions must be positive".into(),
            ));
        }
        for c in [&top, &bot] {
            if c.rows() > n {
                return Err(QtError::DimensionMismatch {
                    expected: n,
                    found: c.rows(),
                });
            }
            if c.cols() > m {
                return Err(QtError::DimensionMismatch {
                    expected: m,
                    found: c.cols(),
                });
            }
        }
        Ok(FiniteQtMatrix {
            symbol: clip_symbol(&symbol, n, m),
            top,
            bot,
            n,
            m,
            tolerance: DEFAULT_TOLERANCE,
            compressed: false,
        }
        .normalized())
    }

    /// Builds from coefficient lists `[a_0, a_-1, ...]`, `[a_0, a_1, ...]`
    /// and dense corner blocks placed as they appear in the matrix.
    pub fn from_corners(
        neg: &[f64],
        pos: &[f64],
        top: &DMatrix<f64>,
        bottom: &DMatrix<f64>,
        n: usize,
        m: usize,
    ) -> Result<Self> {
        let symbol = LaurentSymbol::from_neg_pos(neg, pos)?;
        let (r, c) = bottom.shape();
        let flipped = DMatrix::from_fn(r, c, |i, j| bottom[(r - 1 - i, c - 1 - j)]);
        let tol = 1e-15;
        Self::new(
            symbol,
            Correction::from_dense(top, tol),
            Correction::from_dense(&flipped, tol),
            n,
            m,
        )
    }

    pub fn toeplitz(symbol: LaurentSymbol, n: usize, m: usize) -> Result<Self> {
        Self::new(symbol, Correction::zero(), Correction::zero(), n, m)
    }

    pub fn identity(n: usize) -> Self {
        Self::toeplitz(LaurentSymbol::constant(1.0), n, n).expect("positive dimension")
    }

    pub fn zeros(n: usize, m: usize) -> Result<Self> {
        Self::toeplitz(LaurentSymbol::zero(), n, m)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.compressed = false;
        self
    }

    pub fn symbol(&self) -> &LaurentSymbol {
        &self.symbol
    }

    pub fn top(&self) -> &Correction {
        &self.top
    }

    /// The bottom correction in flipped coordinates: the matrix holds
    /// `J_n W Z^T J_m`.
    pub fn bottom(&self) -> &Correction {
        &self.bot
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.m
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn supports(&self) -> CornerSupports {
        CornerSupports {
            top_rows: self.top.rows(),
            top_cols: self.top.cols(),
            bot_rows: self.bot.rows(),
            bot_cols: self.bot.cols(),
        }
    }

    /// Total rank of the stored corrections.
    pub fn correction_rank(&self) -> usize {
        self.top.rank() + self.bot.rank()
    }

    pub fn is_zero(&self) -> bool {
        self.symbol.is_zero() && self.top.is_zero() && self.bot.is_zero()
    }

    /// `alpha ||a||_W + ||top||_2 + ||bottom||_2`
    pub fn qt_norm(&self) -> f64 {
        ALPHA * self.symbol.wiener_norm() + self.top.norm2() + self.bot.norm2()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let mut x = self.symbol.coeff(j as i64 - i as i64) + self.top.entry(i, j);
        if !self.bot.is_zero() {
            x += self.bot.entry(self.n - 1 - i, self.m - 1 - j);
        }
        x
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.n.saturating_mul(self.m) > DENSE_ENTRY_CAP {
            return Err(QtError::Unsupported(format!(
                "dense materialization of a {}x{} matrix",
                self.n, self.m
            )));
        }
        let (n, m) = (self.n, self.m);
        let mut d = DMatrix::from_fn(n, m, |i, j| self.symbol.coeff(j as i64 - i as i64));
        if !self.top.is_zero() {
            let t = self.top.to_dense(self.top.rows(), self.top.cols());
            let mut view = d.view_mut((0, 0), t.shape());
            view += t;
        }
        if !self.bot.is_zero() {
            let (r, c) = (self.bot.rows(), self.bot.cols());
            let b = self.bot.to_dense(r, c);
            for i in 0..r {
                for j in 0..c {
                    d[(n - 1 - i, m - 1 - j)] += b[(i, j)];
                }
            }
        }
        Ok(d)
    }

    /// `J_n A J_m`: symbol `z^{m-n} a(z^{-1})`, corners swapped.
    pub fn flip(&self) -> Self {
        FiniteQtMatrix {
            symbol: self.symbol.reversed().shift(self.m as i64 - self.n as i64),
            top: self.bot.clone(),
            bot: self.top.clone(),
            ..self.clone()
        }
    }

    pub fn transpose(&self) -> Self {
        FiniteQtMatrix {
            symbol: self.symbol.reversed(),
            top: self.top.transpose(),
            bot: self.bot.transpose(),
            n: self.m,
            m: self.n,
            tolerance: self.tolerance,
            compressed: self.compressed,
        }
    }

    pub fn neg(&self) -> Self {
        FiniteQtMatrix {
            symbol: self.symbol.neg(),
            top: self.top.neg(),
            bot: self.bot.neg(),
            ..self.clone()
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        FiniteQtMatrix {
            symbol: self.symbol.scale(s),
            top: self.top.scale(s),
            bot: self.bot.scale(s),
            compressed: false,
            ..self.clone()
        }
    }

    fn overlapping(&self) -> bool {
        if self.top.is_zero() || self.bot.is_zero() {
            return false;
        }
        let s = self.supports();
        !(s.top_rows + s.bot_rows < self.n || s.top_cols + s.bot_cols < self.m)
    }

    fn normalized(self) -> Self {
        if self.overlapping() {
            self.merge_corrections()
        } else {
            self
        }
    }

    /// Folds the bottom correction into the top one, which then spans the
    /// whole matrix.
    pub fn merge_corrections(&self) -> Self {
        if self.bot.is_zero() {
            return self.clone();
        }
        let moved = flip_embed(&self.bot, self.n, self.m);
        FiniteQtMatrix {
            top: concat_all(&[&self.top, &moved]),
            bot: Correction::zero(),
            compressed: false,
            ..self.clone()
        }
    }

    /// Drops symbol tails within `eps ||A|| / (2 alpha)` and compresses each
    /// correction within `eps ||A|| / 4`.
    pub fn truncate(&self) -> Self {
        if self.compressed {
            return self.clone();
        }
        self.truncate_with(self.tolerance)
    }

    fn truncate_with(&self, eps: f64) -> Self {
        let st = self.top.economy_svd();
        let sb = self.bot.economy_svd();
        let first = |s: &nalgebra::DVector<f64>| s.iter().next().copied().unwrap_or(0.0);
        let norm = ALPHA * self.symbol.wiener_norm() + first(&st.s) + first(&sb.s);
        FiniteQtMatrix {
            symbol: self.symbol.truncate(eps * norm / (2.0 * ALPHA)),
            top: compress_svd(st, eps * norm / 4.0),
            bot: compress_svd(sb, eps * norm / 4.0),
            compressed: true,
            ..self.clone()
        }
    }

    /// Truncates with `eps`; a merge forced by the compressed supports is
    /// followed by a second compression with `rest`.
    fn finish(self, eps: f64, rest: f64) -> Self {
        let t = self.truncate_with(eps);
        if t.overlapping() {
            t.merge_corrections().truncate_with(rest)
        } else {
            t
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.n, self.m) != (other.n, other.m) {
            return Err(QtError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let eps = self.tolerance.max(other.tolerance);
        Ok(FiniteQtMatrix {
            symbol: self.symbol.add(&other.symbol),
            top: self.top.concat(&other.top),
            bot: self.bot.concat(&other.bot),
            tolerance: eps,
            compressed: false,
            ..self.clone()
        }
        .finish(0.5 * eps, 0.5 * eps))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Product through the finite-section identity
    /// `T_{n,m}(a) T_{m,p}(b) = T_{n,p}(ab) - H(a-) H(b+) - J_n H(a~+) H(b~-) J_p`
    /// with `a~ = z^{n-m} a`, `b~ = z^{m-p} b`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.m != other.n {
            return Err(QtError::DimensionMismatch {
                expected: self.m,
                found: other.n,
            });
        }
        let eps = self.tolerance.max(other.tolerance);
        let (n, m, p) = (self.n, self.m, other.m);
        if m + 1 < n.min(p) {
            // the finite Hankel blocks are cut by the inner dimension; the
            // product has rank at most m, so store it as one correction
            let corr = Correction::from_parts(
                self.dense_product_factor()?,
                other.transpose().dense_product_factor()?,
            );
            return Ok(FiniteQtMatrix {
                symbol: LaurentSymbol::zero(),
                top: corr,
                bot: Correction::zero(),
                n,
                m: p,
                tolerance: eps,
                compressed: false,
            }
            .finish(0.75 * eps, 0.25 * eps));
        }
        let c = clip_symbol(&self.symbol.mul(&other.symbol), n, p);
        let h_tol = eps * ALPHA * c.wiener_norm() / 8.0;
        let top = corner_terms(self, other, h_tol);
        let (fa, fb) = (self.flip(), other.flip());
        let bot = corner_terms(&fa, &fb, h_tol);
        let cross = [
            cross_term(self, other),
            cross_term(&fa, &fb).map(|c| flip_embed(&c, n, p)),
        ];
        let mut result = FiniteQtMatrix {
            symbol: c,
            top,
            bot,
            n,
            m: p,
            tolerance: eps,
            compressed: false,
        };
        let cross: Vec<Correction> = cross.into_iter().flatten().collect();
        if !cross.is_empty() {
            result = result.merge_corrections();
            let mut parts = vec![&result.top];
            parts.extend(cross.iter());
            result.top = concat_all(&parts);
        }
        Ok(result.finish(0.5 * eps, 0.25 * eps))
    }

    // rows of the dense matrix, as the left factor of a rank-m product
    fn dense_product_factor(&self) -> Result<DMatrix<f64>> {
        self.to_dense()
    }

    /// Inverse of a square finite QT matrix. With the Wiener-Hopf factors
    /// `a = u l(z^{-1})` the Toeplitz part splits as
    /// `T_n(a) = T_n(u) T_n(l)^T + J_n H(u) H(l) J_n`; the triangular product
    /// has the structured inverse `T_n(b) - H(w) H(v)` (`v ~ 1/u`,
    /// `w ~ 1/l`) and every other term is low rank, handled by Woodbury.
    pub fn inv(&self) -> Result<Self> {
        let n = self.n;
        if n != self.m {
            return Err(QtError::DimensionMismatch {
                expected: n,
                found: self.m,
            });
        }
        let eps = self.tolerance;
        let singular = |what: &str| QtError::SingularMatrix(what.to_string());
        if self.symbol.is_zero() {
            return Err(singular("zero Toeplitz part"));
        }
        let f = factorize(&self.symbol, eps / 4.0)
            .map_err(|e| singular(&format!("Toeplitz part: {e}")))?;
        let v = f.v_hat.clip(0, n as i64 - 1);
        let w = f.w_hat.clip(0, n as i64 - 1);
        let b = clip_symbol(&v.mul(&w.reversed()), n, n);
        let hp = HankelProduct::new(&w, &v);
        let h_tol = eps * ALPHA * b.wiener_norm() / 8.0;
        let k_inv = hp
            .compress(0.0, h_tol, &CompressionOptions::default())
            .unwrap_or_else(|_| hp.compress_dense_with(0.0, h_tol));

        // A - T_n(u) T_n(l)^T as one full-length factored term
        let split = HankelProduct::new(&f.u, &f.l);
        let hb = split.compress_dense_with(0.0, 0.0);
        let low = concat_all(&[
            &embed(&self.top, n, n),
            &flip_embed(&self.bot, n, n),
            &flip_embed(&hb, n, n),
        ]);
        let minv = |x: &DMatrix<f64>, transposed: bool| -> DMatrix<f64> {
            let (sym, ku, kv) = if transposed {
                (b.reversed(), k_inv.v(), k_inv.u())
            } else {
                (b.clone(), k_inv.u(), k_inv.v())
            };
            let mut y = toeplitz_times_rows(&sym, x, n);
            if !k_inv.is_zero() {
                let r = kv.nrows();
                let t = ku * (kv.transpose() * x.rows(0, r));
                let mut head = y.rows_mut(0, ku.nrows());
                head -= &t;
            }
            y
        };
        let mut top = k_inv.neg();
        if !low.is_zero() {
            let (x, y) = (low.u(), low.v());
            let px = minv(x, false);
            let qy = minv(y, true);
            let k = x.ncols();
            let s = DMatrix::identity(k, k) + y.transpose() * &px;
            let s_inv = s
                .clone()
                .lu()
                .try_inverse()
                .ok_or_else(|| singular("Woodbury core"))?;
            let cond = norm2(&s) * norm2(&s_inv);
            if !cond.is_finite() || cond > 1.0 / (100.0 * eps.max(f64::EPSILON)) {
                return Err(singular(&format!("Woodbury core has condition {cond:.3e}")));
            }
            top = concat_all(&[&top, &Correction::from_parts(-(px * s_inv), qy)]);
        }
        Ok(FiniteQtMatrix {
            symbol: b,
            top,
            bot: Correction::zero(),
            n,
            m: n,
            tolerance: eps,
            compressed: false,
        }
        .finish(0.5 * eps, 0.25 * eps))
    }
}

/// Keeps the coefficients that appear in an `n x m` section.
fn clip_symbol(a: &LaurentSymbol, n: usize, m: usize) -> LaurentSymbol {
    a.clip(-(n as i64) + 1, m as i64 - 1)
}

/// A correction padded to an `n x m` frame.
fn embed(c: &Correction, n: usize, m: usize) -> Correction {
    if c.is_zero() {
        return Correction::zero();
    }
    Correction::from_parts(resize_rows(c.u(), n), resize_rows(c.v(), m))
}

/// `J_n W Z^T J_m` as a correction on the full `n x m` frame.
fn flip_embed(c: &Correction, n: usize, m: usize) -> Correction {
    if c.is_zero() {
        return Correction::zero();
    }
    Correction::from_parts(flip_rows(c.u(), n), flip_rows(c.v(), m))
}

/// `J_rows` times a factor padded to `rows` rows.
fn flip_rows(f: &DMatrix<f64>, rows: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, f.ncols());
    for i in 0..f.nrows().min(rows) {
        out.row_mut(rows - 1 - i).copy_from(&f.row(i));
    }
    out
}

/// Top-left terms of `A B`: the Hankel product, `T(a) E_b` and
/// `E_a T(b) + E_a E_b` for the top corrections.
fn corner_terms(a: &FiniteQtMatrix, b: &FiniteQtMatrix, h_tol: f64) -> Correction {
    let (n, p) = (a.n, b.m);
    let (sa, sb) = (&a.symbol, &b.symbol);
    let hp = HankelProduct::from_coeffs(
        (1..=sa.n_minus() as i64).map(|i| sa.coeff(-i)).collect(),
        (1..=sb.n_plus() as i64).map(|j| sb.coeff(j)).collect(),
    );
    let h = hp
        .compress(0.0, h_tol, &CompressionOptions::default())
        .unwrap_or_else(|_| hp.compress_dense_with(0.0, h_tol));
    let mut parts = vec![h.neg()];
    if !b.top.is_zero() {
        let ub = b.top.u();
        let rows = (ub.nrows() as i64 - sa.lowest()).clamp(0, n as i64) as usize;
        parts.push(Correction::from_parts(
            toeplitz_times_rows(sa, ub, rows),
            b.top.v().clone(),
        ));
    }
    if !a.top.is_zero() {
        let va = a.top.v();
        let bt = sb.reversed();
        let rows = (va.nrows() as i64 - bt.lowest()).clamp(0, p as i64) as usize;
        let mut right = toeplitz_times_rows(&bt, va, rows);
        if !b.top.is_zero() {
            let ub = b.top.u();
            let r = ub.nrows().max(va.nrows());
            let coupling = resize_rows(ub, r).transpose() * resize_rows(va, r);
            let extra = b.top.v() * coupling;
            let r = right.nrows().max(extra.nrows());
            right = resize_rows(&right, r) + resize_rows(&extra, r);
        }
        parts.push(Correction::from_parts(a.top.u().clone(), right));
    }
    let refs: Vec<&Correction> = parts.iter().collect();
    concat_all(&refs)
}

/// `U_a V_a^T J_m W_b Z_b^T J_p` when the top of `a` meets the bottom of `b`.
fn cross_term(a: &FiniteQtMatrix, b: &FiniteQtMatrix) -> Option<Correction> {
    if a.top.is_zero() || b.bot.is_zero() {
        return None;
    }
    let m = a.m;
    let (va, wb) = (a.top.v(), b.bot.u());
    if va.nrows() + wb.nrows() <= m {
        return None;
    }
    let mut k = DMatrix::zeros(va.ncols(), wb.ncols());
    for r in 0..va.nrows() {
        let s = m - 1 - r;
        if s < wb.nrows() {
            k += va.row(r).transpose() * wb.row(s);
        }
    }
    Some(Correction::from_parts(
        a.top.u() * k,
        flip_rows(b.bot.v(), b.m),
    ))
}

// the truncation marker is bookkeeping, not part of the value
impl PartialEq for FiniteQtMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.symbol == other.symbol
            && self.top == other.top
            && self.bot == other.bot
            && self.n == other.n
            && self.m == other.m
            && self.tolerance == other.tolerance
    }
}

impl Algebra for FiniteQtMatrix {
    fn add(&self, other: &Self) -> Result<Self> {
        FiniteQtMatrix::add(self, other)
    }

    fn sub(&self, other: &Self) -> Result<Self> {
        FiniteQtMatrix::sub(self, other)
    }

    fn mul(&self, other: &Self) -> Result<Self> {
        FiniteQtMatrix::mul(self, other)
    }

    fn scale(&self, s: f64) -> Self {
        FiniteQtMatrix::scale(self, s)
    }

    fn inv(&self) -> Result<Self> {
        FiniteQtMatrix::inv(self)
    }

    fn norm(&self) -> f64 {
        self.qt_norm()
    }

    fn identity_like(&self) -> Self {
        FiniteQtMatrix::identity(self.n).with_tolerance(self.tolerance)
    }

    fn working_tolerance(&self) -> f64 {
        self.tolerance
    }

    fn at_tolerance(&self, tol: f64) -> Self {
        self.clone().with_tolerance(tol)
    }
}
