//! The four experiments: Hankel compression timings, the Merton option
//! pricing exponential, a square root with a random corner, and the
//! quadratic equation of a quasi-birth-death chain.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use qtoeplitz::hankel::{decaying_random_coeffs, CompressionOptions};
use qtoeplitz::matfunc::{self, ExpmMethod, QbdModel};
use qtoeplitz::{
    CompressionMethod, Correction, FiniteQtMatrix, HankelProduct, LaurentSymbol, QtMatrix, Result,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{csv_line, fmt_float, fmt_opt};

/// Largest size compared against a dense computation.
pub const DENSE_ORACLE_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchMethod {
    Lanczos,
    Random,
    Svd,
}

impl FromStr for BenchMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "lanczos" => Ok(BenchMethod::Lanczos),
            "random" => Ok(BenchMethod::Random),
            "svd" => Ok(BenchMethod::Svd),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchMethod::Lanczos => "lanczos",
            BenchMethod::Random => "random",
            BenchMethod::Svd => "svd",
        })
    }
}

#[derive(Clone, Debug)]
pub struct HankelRow {
    pub size: usize,
    pub method: BenchMethod,
    pub time_s: f64,
    pub rank: usize,
    /// Relative 2-norm residual, only up to [`DENSE_ORACLE_CAP`].
    pub residual: Option<f64>,
}

impl HankelRow {
    pub const HEADER: &'static str = "size,method,time_s,rank,residual";

    pub fn csv(&self) -> String {
        csv_line(&[
            &self.size,
            &self.method,
            &fmt_float(self.time_s),
            &self.rank,
            &fmt_opt(self.residual),
        ])
    }
}

/// `H(f) H(g)` with independent random coefficients `f_j, g_j` uniform on
/// `[0, e^{-j/10}]`.
pub fn hankel_instance(n: usize, seed: u64) -> HankelProduct {
    HankelProduct::from_coeffs(
        decaying_random_coeffs(n, seed),
        decaying_random_coeffs(n, seed.wrapping_add(1)),
    )
}

pub fn hankel_bench(n: usize, method: BenchMethod, tol: f64, seed: u64) -> Result<HankelRow> {
    let hp = hankel_instance(n, seed);
    let start = Instant::now();
    let c = match method {
        BenchMethod::Svd => hp.compress_dense_with(tol, 0.0),
        BenchMethod::Lanczos | BenchMethod::Random => {
            let opts = CompressionOptions {
                method: if method == BenchMethod::Lanczos {
                    CompressionMethod::Lanczos
                } else {
                    CompressionMethod::Random
                },
                seed,
                ..CompressionOptions::default()
            };
            if method == BenchMethod::Lanczos {
                hp.compress_lanczos_with(tol, 0.0, &opts)?
            } else {
                hp.compress_random_with(tol, 0.0, &opts)?
            }
        }
    };
    let time_s = start.elapsed().as_secs_f64();
    let residual = (n <= DENSE_ORACLE_CAP).then(|| {
        let dense = hp
            .apply(&DMatrix::identity(hp.cols(), hp.cols()))
            .expect("square");
        let diff = &dense - c.to_dense(hp.rows(), hp.cols());
        norm2_estimate(&diff, seed) / norm2_estimate(&dense, seed)
    });
    Ok(HankelRow {
        size: n,
        method,
        time_s,
        rank: c.rank(),
        residual,
    })
}

/// Spectral norm by subspace iteration on `M^T M` with a small block.
/// Converges from below; 60 steps are plenty for the residuals seen here.
pub fn norm2_estimate(m: &DMatrix<f64>, seed: u64) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let k = 4.min(m.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f726d);
    let mut x = DMatrix::from_fn(m.ncols(), k, |_, _| rng.random_range(-1.0..1.0));
    let mut est = 0.0;
    for _ in 0..60 {
        let q = x.clone().qr().q();
        let y = m * &q;
        let next = y.clone().singular_values().max();
        x = m.transpose() * y;
        if next == 0.0 {
            return 0.0;
        }
        if (next - est).abs() <= 1e-6 * next {
            return next;
        }
        est = next;
    }
    est
}

#[derive(Clone, Debug)]
pub struct MertonRow {
    pub size: usize,
    pub time_s: f64,
    /// Relative Frobenius error against a dense exponential.
    pub rel_err: Option<f64>,
    /// Frobenius norm of the generator matrix.
    pub frob_norm: f64,
    pub corr_rank: usize,
}

impl MertonRow {
    pub const HEADER: &'static str = "size,time_s,rel_err,frob_norm,corr_rank";

    pub fn csv(&self) -> String {
        csv_line(&[
            &self.size,
            &fmt_float(self.time_s),
            &fmt_opt(self.rel_err),
            &fmt_float(self.frob_norm),
            &self.corr_rank,
        ])
    }
}

/// Frobenius norm of the `n x n` section `T_n(a)`.
pub fn toeplitz_frobenius(a: &LaurentSymbol, n: usize) -> f64 {
    let n = n as i64;
    (a.lowest()..=a.highest())
        .filter(|k| k.abs() < n)
        .map(|k| (n - k.abs()) as f64 * a.coeff(k).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn merton_expm(n: usize, tol: f64, method: ExpmMethod, dense_cap: usize) -> Result<MertonRow> {
    let sym = matfunc::merton_symbol(n)?;
    let a = FiniteQtMatrix::toeplitz(sym.clone(), n, n)?.with_tolerance(tol);
    let start = Instant::now();
    let e = matfunc::expm(&a, method)?;
    let time_s = start.elapsed().as_secs_f64();
    let rel_err = if n <= dense_cap {
        let exact = a.to_dense()?.exp();
        Some((e.to_dense()? - &exact).norm() / exact.norm())
    } else {
        None
    };
    Ok(MertonRow {
        size: n,
        time_s,
        rel_err,
        frob_norm: toeplitz_frobenius(&sym, n),
        corr_rank: e.correction_rank(),
    })
}

#[derive(Clone, Debug)]
pub struct SqrtRow {
    pub support: usize,
    pub time_s: f64,
    /// `||B^2 - A||` in the QT norm.
    pub residual: f64,
    pub rank: usize,
    pub corr_rows: usize,
    pub corr_cols: usize,
}

impl SqrtRow {
    pub const HEADER: &'static str = "support,time_s,residual,rank,corr_rows,corr_cols";

    pub fn csv(&self) -> String {
        csv_line(&[
            &self.support,
            &fmt_float(self.time_s),
            &fmt_float(self.residual),
            &self.rank,
            &self.corr_rows,
            &self.corr_cols,
        ])
    }
}

/// `(z^-2 + z^-1 + 1 + 2z + z^2) / 4 + shift`.
pub fn sqrtm_symbol(shift: f64) -> LaurentSymbol {
    LaurentSymbol::new(-2, vec![0.25, 0.25, 0.25 + shift, 0.5, 0.25])
}

/// Rank-3 corner on a `support x support` block with entries drawn
/// uniformly and scaled to spectral norm 1/5.
pub fn sqrtm_corner(support: usize, seed: u64) -> Correction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || DMatrix::from_fn(support, 3, |_, _| rng.random_range(-1.0..1.0));
    let (u, v) = (draw(), draw());
    let c = Correction::new(u, v).expect("equal ranks");
    let s = 0.2 / c.norm2();
    c.scale(s)
}

pub fn sqrtm_problem(support: usize, seed: u64, shift: f64) -> QtMatrix {
    QtMatrix::new(sqrtm_symbol(shift), sqrtm_corner(support, seed))
}

pub fn sqrtm_demo(support: usize, seed: u64, shift: f64) -> Result<SqrtRow> {
    let a = sqrtm_problem(support, seed, shift);
    let start = Instant::now();
    let r = matfunc::sqrtm(&a)?;
    let time_s = start.elapsed().as_secs_f64();
    let corr = r.sqrt.correction();
    Ok(SqrtRow {
        support,
        time_s,
        residual: r.residual,
        rank: corr.rank(),
        corr_rows: corr.rows(),
        corr_cols: corr.cols(),
    })
}

#[derive(Clone, Debug)]
pub struct QbdRow {
    pub m: usize,
    pub time_s: f64,
    /// `||A_-1 + A_0 G + A_1 G^2 - G||` in the QT norm.
    pub residual: f64,
    pub corr_rank: usize,
}

impl QbdRow {
    pub const HEADER: &'static str = "m,time_s,residual,corr_rank";

    pub fn csv(&self) -> String {
        csv_line(&[
            &self.m,
            &fmt_float(self.time_s),
            &fmt_float(self.residual),
            &self.corr_rank,
        ])
    }
}

/// Transition symbols `(2z^-1 + 2 + 2z)/4`, `(z^-1 + 2z)/10`,
/// `(3z^-1 + 6 + 2z)/6`, rescaled to a stochastic triple.
pub fn qbd_model() -> Result<QbdModel> {
    let down = LaurentSymbol::new(-1, vec![0.5, 0.5, 0.5]);
    let local = LaurentSymbol::new(-1, vec![0.1, 0.0, 0.2]);
    let up = LaurentSymbol::new(-1, vec![0.5, 1.0, 1.0 / 3.0]);
    matfunc::stochastic_rescale(&down, &local, &up)
}

pub fn qbd(m: usize, tol: f64) -> Result<QbdRow> {
    let [am1, a0, a1] = qbd_model()?.blocks(m)?;
    let start = Instant::now();
    let sol = matfunc::solve_quadratic(&am1, &a0, &a1, tol)?;
    let time_s = start.elapsed().as_secs_f64();
    Ok(QbdRow {
        m,
        time_s,
        residual: sol.residual,
        corr_rank: sol.g.correction_rank(),
    })
}
