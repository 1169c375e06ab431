//! Wiener-Hopf factorization `a(z) = u(z) l(z^{-1})` by cyclic reduction on
//! the block reblocking of `T(a)`.

use nalgebra::DMatrix;

use crate::algebra::{cyclic_reduction, CrOptions, CrOutput};
use crate::error::{QtError, Result};
use crate::symbol::{invert_power_series_with, LaurentSymbol, SeriesInversionOptions};

/// `T(a)` cut into `p x p` blocks: `Am1` below the diagonal, `A0` on it and
/// `A1` above it.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticBlocks {
    pub am1: DMatrix<f64>,
    pub a0: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub p: usize,
}

/// Factors of `a(z) = u(z) l(z^{-1})`.
///
/// `u` has degree `n_+` and `l` degree `n_-`; `l_0 = 1` and the scale `w` is
/// folded into `u`, so `u_0 = w`. `v_hat` and `w_hat` approximate `1/u` and
/// `1/l`.
#[derive(Clone, Debug)]
pub struct WienerHopfFactors {
    pub u: LaurentSymbol,
    pub l: LaurentSymbol,
    pub w: f64,
    pub v_hat: LaurentSymbol,
    pub w_hat: LaurentSymbol,
    /// `||a - u l(z^{-1})||_W`
    pub residual_ul: f64,
    /// `||v_hat u - 1||_W`
    pub residual_u: f64,
    /// `||w_hat l - 1||_W`
    pub residual_l: f64,
    pub cr_iterations: usize,
}

pub fn assemble_blocks(a: &LaurentSymbol, p: usize) -> Result<QuadraticBlocks> {
    let required = a.n_minus().max(a.n_plus()).max(1);
    if p < required {
        return Err(QtError::BlockTooSmall { block: p, required });
    }
    let pi = p as i64;
    let a0 = DMatrix::from_fn(p, p, |i, j| a.coeff(j as i64 - i as i64));
    let a1 = DMatrix::from_fn(p, p, |i, j| a.coeff(pi + j as i64 - i as i64));
    let am1 = DMatrix::from_fn(p, p, |i, j| a.coeff(j as i64 - i as i64 - pi));
    Ok(QuadraticBlocks { am1, a0, a1, p })
}

/// Cyclic reduction on the blocks, returning `G` and `R` with the
/// accumulated `B^` and `B~`.
pub fn cyclic_reduction_blocks(
    blocks: &QuadraticBlocks,
    tol: f64,
    max_iter: usize,
) -> Result<CrOutput<DMatrix<f64>>> {
    cyclic_reduction(
        &blocks.am1,
        &blocks.a0,
        &blocks.a1,
        &CrOptions { tol, max_iter },
    )
}

/// Wiener-Hopf factorization of `a` with the default block size
/// `max(n_-, n_+)`.
pub fn factorize(a: &LaurentSymbol, tol: f64) -> Result<WienerHopfFactors> {
    let p = a.n_minus().max(a.n_plus()).max(1);
    factorize_with_block(a, tol, p)
}

pub fn factorize_with_block(a: &LaurentSymbol, tol: f64, p: usize) -> Result<WienerHopfFactors> {
    let fail = |msg: String| QtError::FactorizationFailed(msg);
    if a.is_zero() {
        return Err(fail("zero symbol".into()));
    }
    let norm_a = a.wiener_norm();
    match a.winding_number() {
        Ok(0) => {}
        Ok(m) => return Err(fail(format!("winding number {m}"))),
        Err(e) => return Err(fail(e.to_string())),
    }
    let (np, nm) = (a.n_plus(), a.n_minus());
    if np == 0 && nm == 0 {
        let c = a.coeff(0);
        return Ok(WienerHopfFactors {
            u: LaurentSymbol::constant(c),
            l: LaurentSymbol::constant(1.0),
            w: c,
            v_hat: LaurentSymbol::constant(1.0 / c),
            w_hat: LaurentSymbol::constant(1.0),
            residual_ul: 0.0,
            residual_u: 0.0,
            residual_l: 0.0,
            cr_iterations: 0,
        });
    }

    let blocks = assemble_blocks(a, p)?;
    let cr_tol = (tol / 10.0).max(f64::EPSILON);
    let cr = cyclic_reduction_blocks(&blocks, cr_tol, 64).map_err(|e| fail(e.to_string()))?;

    // first column of R holds (u_p, ..., u_1) and first row of G holds
    // (l_p, ..., l_1), both normalized by u_0 = l_0 = -1
    let mut u_norm = vec![-1.0];
    u_norm.extend((1..=np).map(|k| cr.r[(p - k, 0)]));
    let mut l_norm = vec![-1.0];
    l_norm.extend((1..=nm).map(|k| cr.g[(0, p - k)]));
    let u_top = u_norm[np];
    if u_top == 0.0 || !u_top.is_finite() {
        return Err(fail("vanishing leading factor coefficient".into()));
    }
    let w = -a.coeff(np as i64) / u_top;
    let u = LaurentSymbol::power_series(u_norm.iter().map(|x| -w * x).collect());
    let l = LaurentSymbol::power_series(l_norm.iter().map(|x| -x).collect());

    let residual_ul = a.sub(&u.mul(&l.reversed())).wiener_norm();
    let accept = tol.max(64.0 * f64::EPSILON) * norm_a;
    if residual_ul.is_nan() || residual_ul > accept {
        return Err(fail(format!(
            "factor residual {residual_ul:.3e} above {accept:.3e}"
        )));
    }
    for (f, name) in [(&u, "u"), (&l, "l")] {
        match f.winding_number() {
            Ok(0) => {}
            Ok(m) => {
                return Err(fail(format!(
                    "factor {name} has {m} zeros in the unit disk"
                )))
            }
            Err(e) => return Err(fail(format!("factor {name}: {e}"))),
        }
    }

    let (seed_u, seed_l) = seed_factor_inverses(&cr.g, &cr.r, p, np, nm, u_top, l_norm[nm], w);
    let (v_hat, residual_u) = invert_factor(&u, &seed_u, tol).map_err(|e| fail(e.to_string()))?;
    let (w_hat, residual_l) = invert_factor(&l, &seed_l, tol).map_err(|e| fail(e.to_string()))?;
    Ok(WienerHopfFactors {
        u,
        l,
        w,
        v_hat,
        w_hat,
        residual_ul,
        residual_u,
        residual_l,
        cr_iterations: cr.iterations,
    })
}

/// First `p` coefficients of `1/u` and `1/l` (for the stored, rescaled
/// factors) read off the CR solvents:
/// `L0^{-1} e1 = -(1/l_{n-}) G e_{p-n-+1}` and
/// `e1^T U0^{-1} = -(1/u_{n+}) e_{p-n++1}^T R`, where `L0`, `U0` are the
/// triangular Toeplitz sections of the normalized factors.
#[allow(clippy::too_many_arguments)]
fn seed_factor_inverses(
    g: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: usize,
    np: usize,
    nm: usize,
    u_top: f64,
    l_top: f64,
    w: f64,
) -> (Vec<f64>, Vec<f64>) {
    let seed_u: Vec<f64> = if np == 0 {
        vec![1.0 / w]
    } else {
        // 1/u = -(1/w) (1/u_norm)
        (0..p).map(|j| (1.0 / w) * r[(p - np, j)] / u_top).collect()
    };
    let seed_l: Vec<f64> = if nm == 0 {
        vec![1.0]
    } else {
        // 1/l = -(1/l_norm)
        (0..p).map(|i| g[(i, p - nm)] / l_top).collect()
    };
    (seed_u, seed_l)
}

/// Leading `p` coefficients of `1/u` and `1/l` from the CR solvents, for
/// the factors returned by [`factorize_with_block`].
pub fn factor_inverse_seeds(a: &LaurentSymbol, p: usize, tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let f = factorize_with_block(a, tol, p)?;
    let (np, nm) = (a.n_plus(), a.n_minus());
    let blocks = assemble_blocks(a, p)?;
    let cr = cyclic_reduction_blocks(&blocks, (tol / 10.0).max(f64::EPSILON), 64)?;
    let u_top = if np == 0 { -1.0 } else { cr.r[(p - np, 0)] };
    let l_top = if nm == 0 { -1.0 } else { cr.g[(0, p - nm)] };
    Ok(seed_factor_inverses(
        &cr.g, &cr.r, p, np, nm, u_top, l_top, f.w,
    ))
}

/// `1/f` to relative accuracy `tol / ||1/f||_W`, estimating `||1/f||_W` from a
/// first pass at `tol`.
fn invert_factor(f: &LaurentSymbol, seed: &[f64], tol: f64) -> Result<(LaurentSymbol, f64)> {
    let opts = SeriesInversionOptions::default();
    let first = invert_power_series_with(f, Some(seed), tol, &opts)?;
    let est = first.inverse.wiener_norm();
    if est <= 1.0 {
        return Ok((first.inverse, first.residual));
    }
    let second = invert_power_series_with(f, Some(first.inverse.coeffs()), tol / est, &opts)?;
    Ok((second.inverse, second.residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(lo: i64, c: &[f64]) -> LaurentSymbol {
        LaurentSymbol::new(lo, c.to_vec())
    }

    #[test]
    fn scalar_blocks() {
        let b = assemble_blocks(&sym(-1, &[-0.5, 1.25, -0.5]), 1).unwrap();
        assert_eq!(b.am1[(0, 0)], -0.5);
        assert_eq!(b.a0[(0, 0)], 1.25);
        assert_eq!(b.a1[(0, 0)], -0.5);
    }

    #[test]
    fn two_by_two_blocks() {
        let b = assemble_blocks(&sym(-1, &[1.0, 4.0, 1.0]), 2).unwrap();
        assert_eq!(b.a0, DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 4.0]));
        assert_eq!(b.a1, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]));
        assert_eq!(b.am1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let e = assemble_blocks(&sym(0, &[1.0, 1.0, 1.0]), 1);
        assert!(matches!(
            e,
            Err(QtError::BlockTooSmall {
                block: 1,
                required: 2
            })
        ));
    }

    #[test]
    fn known_factors() {
        let a = sym(-1, &[-0.5, 1.25, -0.5]);
        let f = factorize(&a, 1e-15).unwrap();
        assert!((f.u.coeff(0) - 1.0).abs() < 1e-15 && (f.u.coeff(1) + 0.5).abs() < 1e-15);
        assert!((f.l.coeff(0) - 1.0).abs() < 1e-15 && (f.l.coeff(1) + 0.5).abs() < 1e-15);
        assert!((f.w - 1.0).abs() < 1e-15);
        assert!(f.residual_ul <= 1e-14);
        for k in 0..20 {
            assert!((f.v_hat.coeff(k) - 0.5f64.powi(k as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn nonzero_winding_fails() {
        assert!(matches!(
            factorize(&LaurentSymbol::monomial(1, 1.0), 1e-15),
            Err(QtError::FactorizationFailed(_))
        ));
        assert!(matches!(
            factorize(&sym(-1, &[1.0, 2.0, 1.0]), 1e-15),
            Err(QtError::FactorizationFailed(_))
        ));
    }

    #[test]
    fn scaled_product_of_factors() {
        let u = sym(0, &[1.0, -0.3]);
        let l = sym(0, &[1.0, -0.4]);
        let a = u.mul(&l.reversed()).scale(2.0);
        let f = factorize(&a, 1e-15).unwrap();
        assert!(f.residual_ul <= 1e-13 * a.wiener_norm());
        assert!((f.u.coeff(1) / f.u.coeff(0) + 0.3).abs() < 1e-14);
        assert!((f.l.coeff(1) + 0.4).abs() < 1e-14);
        assert!((f.w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn seeds_match_series_inverse() {
        let a = sym(-1, &[-0.5, 1.25, -0.5]);
        let (su, sl) = factor_inverse_seeds(&a, 4, 1e-15).unwrap();
        for (k, x) in su.iter().enumerate() {
            assert!((x - 0.5f64.powi(k as i32)).abs() < 1e-14, "u seed {k}: {x}");
        }
        for (k, x) in sl.iter().enumerate() {
            assert!((x - 0.5f64.powi(k as i32)).abs() < 1e-14, "l seed {k}: {x}");
        }
    }

    #[test]
    fn one_sided_symbols() {
        // lower-triangular-free: n_- = 0
        let a = sym(0, &[2.0, -1.0, 0.25]);
        let f = factorize(&a, 1e-15).unwrap();
        assert_eq!(f.l, LaurentSymbol::constant(1.0));
        assert!(f.residual_ul <= 1e-14 * a.wiener_norm());
        let (_, sl) = factor_inverse_seeds(&a, 2, 1e-15).unwrap();
        assert_eq!(sl, vec![1.0]);
        // n_+ = 0
        let b = sym(-2, &[0.1, -0.5, 1.0]);
        let f = factorize(&b, 1e-15).unwrap();
        assert_eq!(f.u.len(), 1);
        assert!(f.residual_ul <= 1e-14 * b.wiener_norm());
    }
}
