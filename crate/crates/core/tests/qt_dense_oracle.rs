use nalgebra::DMatrix;
use qtoeplitz::{invert_toeplitz, Correction, LaurentSymbol, QtMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_qt(rng: &mut ChaCha8Rng, nm: usize, np: usize, k: usize, rows: usize) -> QtMatrix {
    let coeffs: Vec<f64> = (0..nm + np + 1)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let sym = LaurentSymbol::new(-(nm as i64), coeffs);
    let u = DMatrix::from_fn(rows, k, |_, _| rng.random_range(-1.0..1.0));
    let v = DMatrix::from_fn(rows + 1, k, |_, _| rng.random_range(-1.0..1.0));
    QtMatrix::new(sym, Correction::new(u, v).unwrap())
}

// leading n x n block of A B from finite sections wide enough to be exact
fn dense_product(a: &QtMatrix, b: &QtMatrix, n: usize) -> DMatrix<f64> {
    let m = n + 64;
    a.to_dense(n, m) * b.to_dense(m, n)
}

#[test]
fn product_matches_dense_sections() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let a = random_qt(&mut rng, 3, 5, 2, 6);
        let b = random_qt(&mut rng, 4, 2, 3, 4);
        let c = a.mul(&b);
        let n = 40;
        let err = (c.to_dense(n, n) - dense_product(&a, &b, n)).amax();
        assert!(err <= 1e-13 * a.qt_norm() * b.qt_norm(), "err {err}");
    }
}

#[test]
fn sum_matches_dense_sections() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_qt(&mut rng, 2, 2, 2, 5);
    let b = random_qt(&mut rng, 1, 3, 1, 3);
    let n = 20;
    let err = (a.add(&b).to_dense(n, n) - a.to_dense(n, n) - b.to_dense(n, n)).amax();
    assert!(err < 1e-13);
}

#[test]
fn power_matches_repeated_products() {
    let a = QtMatrix::new(
        LaurentSymbol::new(-1, vec![0.3, 0.2, 0.4]),
        Correction::outer(&[0.1, -0.2], &[0.3]),
    );
    let p = a.power(5);
    let n = 30;
    let m = 80;
    let d = a.to_dense(m, m);
    let mut expect = DMatrix::identity(m, m);
    for _ in 0..5 {
        expect = &expect * &d;
    }
    let err = (p.to_dense(n, n) - expect.view((0, 0), (n, n))).amax();
    assert!(err < 1e-14, "err {err}");
}

#[test]
fn toeplitz_inverse_is_a_right_inverse() {
    let a = LaurentSymbol::new(-2, vec![0.1, -0.7, 3.0, -0.5, 0.2, 0.05]);
    let (b, rep) = invert_toeplitz(&a, 1e-15).unwrap();
    let prod = QtMatrix::toeplitz(a.clone())
        .mul(&b)
        .sub(&QtMatrix::identity());
    assert!(
        prod.qt_norm() <= 1e2 * rep.bound.max(1e-15),
        "{} vs {}",
        prod.qt_norm(),
        rep.bound
    );
    let n = 60;
    let m = 300;
    let dense = QtMatrix::toeplitz(a).to_dense(n, m) * b.to_dense(m, n);
    assert!((dense - DMatrix::<f64>::identity(n, n)).amax() < 1e-13);
}

#[test]
fn general_inverse_against_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let corr = Correction::new(
        DMatrix::from_fn(5, 2, |_, _| rng.random_range(-0.3..0.3)),
        DMatrix::from_fn(5, 2, |_, _| rng.random_range(-0.3..0.3)),
    )
    .unwrap();
    let a = QtMatrix::new(LaurentSymbol::new(-1, vec![-1.0, 4.0, -1.5]), corr);
    let (b, rep) = a.invert_with_report(true).unwrap();
    assert!(rep.check.unwrap() < 1e-13, "{:?}", rep.check);
    let n = 30;
    let m = 200;
    let prod = b.to_dense(n, m) * a.to_dense(m, n);
    assert!((prod - DMatrix::<f64>::identity(n, n)).amax() < 1e-13);
}

#[test]
fn transpose_and_submatrix_agree_with_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_qt(&mut rng, 2, 3, 2, 4);
    let d = a.to_dense(10, 12);
    let t = a.transpose().to_dense(12, 10);
    assert!((d.transpose() - t).amax() < 1e-15);
    let s = a.submatrix(&[1, 4, 7], &[0, 9]);
    assert_eq!(s[(1, 1)], d[(4, 9)]);
    assert_eq!(s[(2, 0)], d[(7, 0)]);
}

fn small_example() -> QtMatrix {
    let e = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, -2.0, 2.0]);
    QtMatrix::with_dense_correction(
        LaurentSymbol::from_neg_pos(&[2.0, -1.0], &[2.0, 1.0, 1.0]).unwrap(),
        &e,
    )
}

#[test]
fn double_inversion_returns_the_original() {
    let a = small_example();
    let b = a.inv().unwrap().inv().unwrap();
    let d = b.sub(&a).qt_norm();
    assert!(d <= 10.0 * 1e-15 * a.qt_norm() * 100.0, "{d}");
    // tighter check on a leading section
    assert!((b.to_dense(20, 20) - a.to_dense(20, 20)).amax() < 1e-13);
}

#[test]
fn inverse_columns_match_dense_solve() {
    let a = QtMatrix::new(
        LaurentSymbol::new(-1, vec![-0.5, 1.25, -0.5]),
        Correction::outer(&[1.0], &[1.0]),
    );
    let b = a.inv().unwrap();
    let n = 500;
    let lu = a.to_dense(n, n).lu();
    let cols = b.to_dense(n, 51);
    for j in 0..51 {
        let mut e = nalgebra::DVector::zeros(n);
        e[j] = 1.0;
        let x = lu.solve(&e).unwrap();
        let err = (cols.column(j) - x).amax();
        assert!(err < 1e-10, "column {j}: {err}");
    }
}

#[test]
fn cube_matches_explicit_products() {
    let a = small_example().scale(0.3);
    let p = a.power(3);
    let q = a.mul(&a).mul(&a);
    assert!(p.sub(&q).qt_norm() <= 4.0 * 1e-15 * a.qt_norm().powi(3));
}

#[test]
fn truncation_error_within_budget_on_a_section() {
    let coeffs: Vec<f64> = (-40i64..=40).map(|j| (-(j.abs() as f64)).exp()).collect();
    let sym = LaurentSymbol::new(-40, coeffs);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = 200;
    let (q1, _) =
        nalgebra::linalg::QR::new(DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0)))
            .unpack();
    let (q2, _) =
        nalgebra::linalg::QR::new(DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0)))
            .unpack();
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(k, |i, _| 0.7f64.powi(i as i32)));
    // at 1e-15 the dense oracle's own rounding exceeds the budget
    let eps = 1e-12;
    let a = QtMatrix::new(sym, Correction::new(&q1 * s, q2).unwrap()).with_tolerance(eps);
    let t = a.truncate();
    assert!(t.correction().rank() < k);
    assert!(t.symbol().len() < 81);
    let n = 1000;
    let diff = a.to_dense(n, n) - t.to_dense(n, n);
    let err = qtoeplitz::algebra::norm2(&diff);
    assert!(err <= eps * a.qt_norm(), "{err} vs {}", eps * a.qt_norm());
}
