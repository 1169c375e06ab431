//! A small algebra interface shared by dense matrices and QT matrices, and
//! cyclic reduction written once against it.

use nalgebra::{DMatrix, DVector};

use crate::error::{QtError, Result};

/// Operations needed by iterations that run unchanged on dense and
/// quasi-Toeplitz matrices.
pub trait Algebra: Clone + Sized {
    fn add(&self, other: &Self) -> Result<Self>;
    fn sub(&self, other: &Self) -> Result<Self>;
    fn mul(&self, other: &Self) -> Result<Self>;
    fn scale(&self, s: f64) -> Self;
    fn inv(&self) -> Result<Self>;
    /// The norm used in stopping tests: spectral for dense matrices, the QT
    /// norm for QT matrices.
    fn norm(&self) -> f64;
    /// Identity of the same shape.
    fn identity_like(&self) -> Self;
    /// Relative accuracy of the arithmetic.
    fn working_tolerance(&self) -> f64 {
        f64::EPSILON
    }
    /// The same value with results of later operations truncated at `tol`.
    fn at_tolerance(&self, _tol: f64) -> Self {
        self.clone()
    }
}

impl Algebra for DMatrix<f64> {
    fn add(&self, other: &Self) -> Result<Self> {
        same_shape(self, other)?;
        Ok(self + other)
    }

    fn sub(&self, other: &Self) -> Result<Self> {
        same_shape(self, other)?;
        Ok(self - other)
    }

    fn mul(&self, other: &Self) -> Result<Self> {
        if self.ncols() != other.nrows() {
            return Err(QtError::DimensionMismatch {
                expected: self.ncols(),
                found: other.nrows(),
            });
        }
        Ok(self * other)
    }

    fn scale(&self, s: f64) -> Self {
        self * s
    }

    fn inv(&self) -> Result<Self> {
        dense_inverse(self, "dense block")
    }

    fn norm(&self) -> f64 {
        norm2(self)
    }

    fn identity_like(&self) -> Self {
        DMatrix::identity(self.nrows(), self.ncols())
    }
}

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(QtError::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(())
}

/// Spectral norm of a dense matrix.
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    thin_svd(m).s.max()
}

/// `m = u diag(s) v^T` with `s` nonincreasing and `u`, `v` of width
/// `min(rows, cols)`.
pub(crate) struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

// nalgebra's bidiagonal SVD can lose digits on strongly graded matrices,
// which are exactly the cores produced by low-rank arithmetic
pub(crate) fn thin_svd(m: &DMatrix<f64>) -> ThinSvd {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return ThinSvd {
            u: DMatrix::zeros(r, 0),
            s: DVector::zeros(0),
            v: DMatrix::zeros(c, 0),
        };
    }
    let fm = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    match fm.thin_svd() {
        Ok(svd) => {
            let (fu, fv, fs) = (svd.U(), svd.V(), svd.S().column_vector());
            ThinSvd {
                u: DMatrix::from_fn(r, k, |i, j| fu[(i, j)]),
                s: DVector::from_fn(k, |i, _| fs[i]),
                v: DMatrix::from_fn(c, k, |i, j| fv[(i, j)]),
            }
        }
        Err(_) => {
            let svd = m.clone().svd(true, true);
            let (u, s, vt) = (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap());
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
            ThinSvd {
                u: DMatrix::from_fn(r, k, |i, j| u[(i, order[j])]),
                s: DVector::from_fn(k, |i, _| s[order[i]]),
                v: DMatrix::from_fn(c, k, |i, j| vt[(order[j], i)]),
            }
        }
    }
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse by LU with partial pivoting; `Breakdown` when the 1-norm
/// condition number exceeds `1/eps`.
pub fn dense_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(QtError::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let inv = m
        .clone()
        .lu()
        .try_inverse()
        .ok_or(QtError::Breakdown { what })?;
    let cond = norm1(m) * norm1(&inv);
    if !cond.is_finite() || cond > 1.0 / f64::EPSILON {
        return Err(QtError::Breakdown { what });
    }
    Ok(inv)
}

#[derive(Clone, Debug)]
pub struct CrOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CrOptions {
    fn default() -> Self {
        CrOptions {
            tol: 1e-15,
            max_iter: 64,
        }
    }
}

/// Output of cyclic reduction for `A1 G^2 + A0 G + Am1 = 0` and the dual
/// equation `R^2 Am1 + R A0 + A1 = 0`.
#[derive(Clone, Debug)]
pub struct CrOutput<T> {
    pub g: T,
    pub r: T,
    pub b_hat: T,
    pub b_tilde: T,
    pub iterations: usize,
    /// `min(||A^(k)||, ||C^(k)||)` at every step.
    pub decay: Vec<f64>,
}

/// Cyclic reduction. With `A = A1`, `B = A0`, `C = Am1` and `S = B^{-1}`:
///
/// ```text
/// A' = -A S A          C' = -C S C
/// B' = B - A S C - C S A
/// B~' = B~ - A S C     B^' = B^ - C S A
/// ```
///
/// starting from `B~ = B^ = B`. Then `G = -B~^{-1} Am1` and
/// `R = -A1 B~^{-1}`; `B^` plays the same role for the reversed equation
/// `Am1 X^2 + A0 X + A1 = 0`. Stops when
/// `min(||A||, ||C||) max(||B^^{-1}||, ||B~^{-1}||) <= tol`.
pub fn cyclic_reduction<T: Algebra>(
    am1: &T,
    a0: &T,
    a1: &T,
    opts: &CrOptions,
) -> Result<CrOutput<T>> {
    let breakdown = |_| QtError::Breakdown {
        what: "cyclic reduction pivot block",
    };
    let mut a = a1.clone();
    let mut b = a0.clone();
    let mut c = am1.clone();
    let mut bh = a0.clone();
    let mut bt = a0.clone();
    let mut decay = Vec::new();
    for k in 0..=opts.max_iter {
        let small = a.norm().min(c.norm());
        decay.push(small);
        let s = b.inv().map_err(breakdown)?;
        if small == 0.0 || small * s.norm() <= opts.tol || k == opts.max_iter {
            let bt_inv = if k == 0 {
                s.clone()
            } else {
                bt.inv().map_err(breakdown)?
            };
            let bh_inv = if k == 0 {
                s.clone()
            } else {
                bh.inv().map_err(breakdown)?
            };
            let bound = small * bt_inv.norm().max(bh_inv.norm());
            if small == 0.0 || bound <= opts.tol {
                let g = bt_inv.mul(am1)?.scale(-1.0);
                let r = a1.mul(&bt_inv)?.scale(-1.0);
                return Ok(CrOutput {
                    g,
                    r,
                    b_hat: bh,
                    b_tilde: bt,
                    iterations: k,
                    decay,
                });
            }
            if k == opts.max_iter {
                break;
            }
        }
        let as_ = a.mul(&s)?;
        let cs = c.mul(&s)?;
        let asc = as_.mul(&c)?;
        let csa = cs.mul(&a)?;
        let a_next = as_.mul(&a)?.scale(-1.0);
        let c_next = cs.mul(&c)?.scale(-1.0);
        b = b.sub(&asc)?.sub(&csa)?;
        bt = bt.sub(&asc)?;
        bh = bh.sub(&csa)?;
        a = a_next;
        c = c_next;
    }
    Err(QtError::NoConvergence {
        what: "cyclic reduction",
        iterations: opts.max_iter,
    })
}
