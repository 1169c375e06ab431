//! Matrix functions and quadratic matrix equations on top of [`Algebra`].

use nalgebra::DMatrix;

use crate::algebra::{cyclic_reduction, Algebra, CrOptions};
use crate::correction::Correction;
use crate::error::{QtError, Result};
use crate::fqt::FiniteQtMatrix;
use crate::symbol::LaurentSymbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExpmMethod {
    /// Degree-12 Taylor polynomial.
    #[default]
    Taylor,
    /// Diagonal (6, 6) Pade approximant.
    Pade,
}

const TAYLOR_DEGREE: u32 = 12;

/// Number of halvings that bring `norm` to at most one.
pub fn scaling_steps(norm: f64) -> u32 {
    if norm > 1.0 {
        norm.log2().ceil() as u32
    } else {
        0
    }
}

/// `exp(A)` by scaling and squaring.
pub fn expm<T: Algebra>(a: &T, method: ExpmMethod) -> Result<T> {
    let s = scaling_steps(a.norm());
    let b = a.scale(0.5f64.powi(s as i32));
    let id = a.identity_like();
    let mut r = match method {
        ExpmMethod::Taylor => {
            // Horner: I + B/1 (I + B/2 (... (I + B/12)))
            let mut r = id.add(&b.scale(1.0 / TAYLOR_DEGREE as f64))?;
            for k in (1..TAYLOR_DEGREE).rev() {
                r = id.add(&b.mul(&r)?.scale(1.0 / k as f64))?;
            }
            r
        }
        ExpmMethod::Pade => {
            let c = pade_coefficients();
            let b2 = b.mul(&b)?;
            let b4 = b2.mul(&b2)?;
            let b6 = b4.mul(&b2)?;
            let even = id
                .scale(c[0])
                .add(&b2.scale(c[2]))?
                .add(&b4.scale(c[4]))?
                .add(&b6.scale(c[6]))?;
            let odd_inner = id.scale(c[1]).add(&b2.scale(c[3]))?.add(&b4.scale(c[5]))?;
            let odd = b.mul(&odd_inner)?;
            let num = even.add(&odd)?;
            let den = even.sub(&odd)?;
            den.inv()?.mul(&num)?
        }
    };
    for _ in 0..s {
        r = r.mul(&r)?;
    }
    Ok(r)
}

/// `c_k = (12 - k)! 6! / (12! k! (6 - k)!)`
fn pade_coefficients() -> [f64; 7] {
    let mut c = [1.0; 7];
    for k in 1..7 {
        c[k] = c[k - 1] * (7 - k) as f64 / ((13 - k) * k) as f64;
    }
    c
}

/// Model constants of the jump-diffusion generator.
pub mod merton {
    pub const RATE: f64 = 0.05;
    pub const JUMP_INTENSITY: f64 = 0.01;
    pub const JUMP_MEAN: f64 = -0.9;
    pub const VOLATILITY: f64 = 0.25;
    pub const JUMP_STD: f64 = 0.45;
    /// Width of the log-price domain discretized by the grid.
    pub const DOMAIN: f64 = 4.0;

    /// `E[e^J] - 1` for the normal jump size `J`.
    pub fn kappa() -> f64 {
        ((JUMP_MEAN + JUMP_STD * JUMP_STD) / 2.0).exp() - 1.0
    }

    /// Jump density weight `lambda h phi(eta)` for grid step `h`.
    pub fn jump_weight(eta: f64, h: f64) -> f64 {
        let d = eta - JUMP_MEAN;
        JUMP_INTENSITY * h * (-d * d / (2.0 * JUMP_STD * JUMP_STD)).exp()
            / ((2.0 * std::f64::consts::PI).sqrt() * JUMP_STD)
    }
}

/// Symbol of the `n x n` discretized jump-diffusion generator: a
/// three-point diffusion and drift stencil plus a dense jump term.
/// Coefficients below `1e-18` times the largest one are dropped.
pub fn merton_symbol(n: usize) -> Result<LaurentSymbol> {
    use merton::*;
    if n < 2 {
        return Err(QtError::InvalidArgument(
            "the grid needs at least 2 points".into(),
        ));
    }
    let h = DOMAIN / (n as f64 + 1.0);
    let b = VOLATILITY * VOLATILITY / (2.0 * h * h);
    let c = (2.0 * RATE - 2.0 * JUMP_INTENSITY * kappa() - VOLATILITY * VOLATILITY) / (4.0 * h);
    let k = n as i64 - 1;
    let mut coeffs: Vec<f64> = (-k..=k).map(|j| jump_weight(j as f64 * h, h)).collect();
    let at = |j: i64| (j + k) as usize;
    // second-difference stencil (b, -2b, b); a positive diagonal would make
    // exp(A) grow like e^{4b} and overflow for a few hundred grid points
    coeffs[at(0)] += -2.0 * b - RATE - JUMP_INTENSITY;
    coeffs[at(1)] += b + c;
    coeffs[at(-1)] += b - c;
    let big = coeffs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for x in coeffs.iter_mut() {
        if x.abs() < 1e-18 * big {
            *x = 0.0;
        }
    }
    let a = LaurentSymbol::new(-k, coeffs);
    Ok(a)
}

/// Outcome of [`sqrtm`].
#[derive(Clone, Debug)]
pub struct SqrtResult<T> {
    pub sqrt: T,
    pub iterations: usize,
    /// `||Y^2 - A||`
    pub residual: f64,
}

pub const SQRTM_MAX_ITER: usize = 50;

/// Square root by the Denman-Beavers iteration
/// `Y <- (Y + Z^{-1}) / 2`, `Z <- (Z + Y^{-1}) / 2` from `Y = A`, `Z = I`.
pub fn sqrtm<T: Algebra>(a: &T) -> Result<SqrtResult<T>> {
    let eps = a.working_tolerance();
    let mut y = a.clone();
    let mut z = a.identity_like();
    let singular = |e: QtError| QtError::SingularIterate(Box::new(e));
    for k in 1..=SQRTM_MAX_ITER {
        let zi = z.inv().map_err(singular)?;
        let yi = y.inv().map_err(singular)?;
        let y_next = y.add(&zi)?.scale(0.5);
        let z_next = z.add(&yi)?.scale(0.5);
        let step = y_next.sub(&y)?.norm();
        let done = step <= 1e3 * eps * y.norm();
        y = y_next;
        z = z_next;
        if done {
            let residual = y.mul(&y)?.sub(a)?.norm();
            return Ok(SqrtResult {
                sqrt: y,
                iterations: k,
                residual,
            });
        }
    }
    Err(QtError::NoConvergence {
        what: "Denman-Beavers iteration",
        iterations: SQRTM_MAX_ITER,
    })
}

/// Outcome of [`solve_quadratic`].
#[derive(Clone, Debug)]
pub struct QuadraticSolution<T> {
    pub g: T,
    /// `||Am1 + A0 G + A1 G^2 - G||`
    pub residual: f64,
    pub iterations: usize,
}

/// Minimal solution of `Am1 + A0 G + A1 G^2 = G` by cyclic reduction on
/// `A1 G^2 + (A0 - I) G + Am1 = 0`, truncating every iterate at `tol / 10`.
pub fn solve_quadratic<T: Algebra>(
    am1: &T,
    a0: &T,
    a1: &T,
    tol: f64,
) -> Result<QuadraticSolution<T>> {
    let inner = tol / 10.0;
    let (cm, c0, c1) = (
        am1.at_tolerance(inner),
        a0.at_tolerance(inner),
        a1.at_tolerance(inner),
    );
    let shifted = c0.sub(&c0.identity_like())?;
    let out = cyclic_reduction(&cm, &shifted, &c1, &CrOptions { tol, max_iter: 64 })?;
    let g = out.g;
    let residual = am1
        .add(&a0.mul(&g)?)?
        .add(&a1.mul(&g)?.mul(&g)?)?
        .sub(&g)?
        .norm();
    Ok(QuadraticSolution {
        g,
        residual,
        iterations: out.iterations,
    })
}

/// Level-transition symbols of a quasi-birth-death chain, rescaled so that
/// `a_-1 + a_0 + a_1` has unit coefficient sum.
#[derive(Clone, Debug)]
pub struct QbdModel {
    pub down: LaurentSymbol,
    pub local: LaurentSymbol,
    pub up: LaurentSymbol,
    /// The common row sum divided out.
    pub scale: f64,
}

/// Rescales nonnegative symbols to a stochastic triple.
pub fn stochastic_rescale(
    down: &LaurentSymbol,
    local: &LaurentSymbol,
    up: &LaurentSymbol,
) -> Result<QbdModel> {
    for s in [down, local, up] {
        for (i, &x) in s.coeffs().iter().enumerate() {
            if x < 0.0 {
                return Err(QtError::NegativeCoefficient {
                    index: s.lowest() + i as i64,
                    value: x,
                });
            }
        }
    }
    let sigma: f64 = [down, local, up]
        .iter()
        .map(|s| s.coeffs().iter().sum::<f64>())
        .sum();
    if sigma <= 0.0 {
        return Err(QtError::InvalidArgument(
            "all transition symbols are zero".into(),
        ));
    }
    Ok(QbdModel {
        down: down.scale(1.0 / sigma),
        local: local.scale(1.0 / sigma),
        up: up.scale(1.0 / sigma),
        scale: sigma,
    })
}

impl QbdModel {
    /// The `m x m` blocks `(A_-1, A_0, A_1)`. Mass of coefficients that fall
    /// outside the matrix in the first and last rows is put back on the
    /// diagonal, so every row of `A_-1 + A_0 + A_1` sums to one.
    pub fn blocks(&self, m: usize) -> Result<[FiniteQtMatrix; 3]> {
        let one = |s: &LaurentSymbol| -> Result<FiniteQtMatrix> {
            let (top, bot) = boundary_repair(s, m);
            FiniteQtMatrix::new(s.clone(), top, bot, m, m)
        };
        Ok([one(&self.down)?, one(&self.local)?, one(&self.up)?])
    }
}

/// Diagonal corrections for the rows of `T_m(a)` that lose coefficients.
fn boundary_repair(a: &LaurentSymbol, m: usize) -> (Correction, Correction) {
    let k = (a.n_minus().max(a.n_plus())).min(m);
    let mut top = DMatrix::zeros(k, k);
    let mut bot = DMatrix::zeros(k, k);
    for i in 0..k {
        let ii = i as i64;
        // row i misses a_j for j < -i and, counted from the end, j > i
        top[(i, i)] = (a.lowest()..-ii).map(|j| a.coeff(j)).sum::<f64>();
        bot[(i, i)] = (ii + 1..=a.highest()).map(|j| a.coeff(j)).sum::<f64>();
    }
    (
        Correction::from_dense(&top, 0.0),
        Correction::from_dense(&bot, 0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qt::QtMatrix;

    #[test]
    fn pade_coefficients_match_closed_form() {
        let c = pade_coefficients();
        assert_eq!(c[0], 1.0);
        assert!((c[1] - 0.5).abs() < 1e-16);
        assert!((c[2] - 5.0 / 44.0).abs() < 1e-16);
        assert!((c[6] - 1.0 / 665280.0).abs() < 1e-20);
    }

    #[test]
    fn exp_of_zero_and_constants() {
        let z = expm(&QtMatrix::zero(), ExpmMethod::Taylor).unwrap();
        assert_eq!(z.symbol(), &LaurentSymbol::constant(1.0));
        assert!(z.correction().is_zero());
        for method in [ExpmMethod::Taylor, ExpmMethod::Pade] {
            let e = expm(&QtMatrix::toeplitz(LaurentSymbol::constant(0.7)), method).unwrap();
            assert!((e.symbol().coeff(0) - 0.7f64.exp()).abs() < 1e-14);
            assert!(e.correction().is_zero());
        }
    }

    #[test]
    fn kappa_and_jump_weight() {
        assert!((merton::kappa() - ((-0.34875f64).exp() - 1.0)).abs() < 1e-15);
        assert!((merton::kappa() + 0.29444).abs() < 1e-5);
        let h = 4.0 / 256.0;
        let phi0 = 0.01 * h * (-0.81f64 / (2.0 * 0.2025)).exp()
            / ((2.0 * std::f64::consts::PI).sqrt() * 0.45);
        assert!((merton::jump_weight(0.0, h) - phi0).abs() < 1e-20);
        let a = merton_symbol(255).unwrap();
        assert!((a.coeff(5) - a.coeff(-5)).abs() > 0.0);
        assert!(merton_symbol(1).is_err());
    }

    #[test]
    fn sqrt_of_scaled_identity() {
        let r = sqrtm(&QtMatrix::toeplitz(LaurentSymbol::constant(4.0))).unwrap();
        assert_eq!(r.sqrt.symbol(), &LaurentSymbol::constant(2.0));
        let i = sqrtm(&QtMatrix::identity()).unwrap();
        assert_eq!(i.sqrt, QtMatrix::identity());
    }

    #[test]
    fn quadratic_with_zero_constant_term() {
        let a0 = QtMatrix::toeplitz(LaurentSymbol::constant(0.2));
        let a1 = QtMatrix::toeplitz(LaurentSymbol::constant(0.3));
        let s = solve_quadratic(&QtMatrix::zero(), &a0, &a1, 1e-14).unwrap();
        assert!(s.g.is_zero());
    }

    #[test]
    fn rescaled_rows_are_stochastic() {
        let down = LaurentSymbol::new(-1, vec![0.5, 0.5, 0.5]);
        let local = LaurentSymbol::new(-1, vec![0.1, 0.0, 0.2]);
        let up = LaurentSymbol::new(-1, vec![0.5, 1.0, 1.0 / 3.0]);
        let q = stochastic_rescale(&down, &local, &up).unwrap();
        assert!((q.scale - (1.5 + 0.3 + 11.0 / 6.0)).abs() < 1e-15);
        let blocks = q.blocks(50).unwrap();
        let sum = blocks
            .iter()
            .map(|b| b.to_dense().unwrap())
            .fold(DMatrix::zeros(50, 50), |s, d| s + d);
        for i in 0..50 {
            assert!((sum.row(i).sum() - 1.0).abs() < 1e-15, "row {i}");
        }
        let bad = LaurentSymbol::new(0, vec![-0.1]);
        assert!(matches!(
            stochastic_rescale(&bad, &local, &up),
            Err(QtError::NegativeCoefficient { .. })
        ));
        let q = stochastic_rescale(&down, &LaurentSymbol::zero(), &up).unwrap();
        assert!((q.scale - (1.5 + 11.0 / 6.0)).abs() < 1e-15);
    }
}
