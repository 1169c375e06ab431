use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qtoeplitz::algebra::norm2;
use qtoeplitz::textio::{parse, parse_finite, parse_qt, write_finite, write_qt};
use qtoeplitz::{Correction, FiniteQtMatrix, LaurentSymbol, QtMatrix};

fn symbol() -> impl Strategy<Value = LaurentSymbol> {
    (-6i64..=2, prop::collection::vec(-1.0f64..1.0, 1..10))
        .prop_map(|(lo, c)| LaurentSymbol::new(lo, c))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn correction() -> impl Strategy<Value = Correction> {
    (1usize..8, 1usize..8, 0usize..4).prop_flat_map(|(r, c, k)| {
        (matrix(r, k), matrix(c, k)).prop_map(|(u, v)| Correction::new(u, v).unwrap())
    })
}

fn qt() -> impl Strategy<Value = QtMatrix> {
    (symbol(), correction()).prop_map(|(a, e)| QtMatrix::new(a, e))
}

fn finite(n: usize) -> impl Strategy<Value = FiniteQtMatrix> {
    (
        -3i64..=0,
        prop::collection::vec(-1.0f64..1.0, 1..6),
        correction(),
        correction(),
    )
        .prop_map(move |(lo, c, top, bottom)| {
            let a = LaurentSymbol::new(lo, c);
            FiniteQtMatrix::new(a, top, bottom, n, n).unwrap()
        })
}

fn on_circle(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_product_evaluates_pointwise(a in symbol(), b in symbol(), t in 0.0..std::f64::consts::TAU) {
        let z = on_circle(t);
        let lhs = a.mul(&b).evaluate(z);
        let rhs = a.evaluate(z) * b.evaluate(z);
        prop_assert!((lhs - rhs).norm() <= 1e-13 * (1.0 + a.wiener_norm() * b.wiener_norm()));
    }

    #[test]
    fn wiener_norm_is_submultiplicative(a in symbol(), b in symbol()) {
        let ab = a.mul(&b).wiener_norm();
        prop_assert!(ab <= a.wiener_norm() * b.wiener_norm() * (1.0 + 1e-14));
    }

    #[test]
    fn symbol_truncation_respects_budget(a in symbol(), frac in 0.0f64..1.0) {
        let eps = frac * a.wiener_norm();
        let t = a.truncate(eps);
        prop_assert!(a.sub(&t).wiener_norm() <= eps * (1.0 + 1e-14));
        prop_assert!(t.len() <= a.len());
    }

    #[test]
    fn reversal_is_an_involution(a in symbol()) {
        prop_assert_eq!(a.reversed().reversed(), a);
    }

    #[test]
    fn correction_compression_respects_budget(e in correction(), frac in 0.0f64..1.0) {
        let dense = e.to_dense(e.rows(), e.cols());
        let budget = frac * norm2(&dense);
        let c = e.compress(budget);
        prop_assert!(c.rank() <= e.rank());
        let err = norm2(&(c.to_dense(e.rows(), e.cols()) - &dense));
        prop_assert!(err <= budget + 1e-14 * (1.0 + norm2(&dense)), "{} > {}", err, budget);
    }

    #[test]
    fn opposite_sum_is_zero(a in qt()) {
        prop_assert!(a.add(&a.neg()).is_zero());
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn qt_norm_is_submultiplicative(a in qt(), b in qt()) {
        let ab = a.mul(&b);
        let bound = a.qt_norm() * b.qt_norm();
        prop_assert!(ab.qt_norm() <= bound * (1.0 + 1e-12) + 1e-14, "{} > {}", ab.qt_norm(), bound);
    }

    #[test]
    fn qt_product_matches_dense_sections(a in qt(), b in qt()) {
        let n = 20;
        let w = n + 24;
        let expect = a.to_dense(n, w) * b.to_dense(w, n);
        let got = a.mul(&b).to_dense(n, n);
        let scale = a.qt_norm() * b.qt_norm();
        prop_assert!((got - expect).amax() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn qt_text_round_trip_is_exact(a in qt()) {
        prop_assert_eq!(parse_qt(&write_qt(&a)).unwrap(), a);
    }

    #[test]
    fn finite_text_round_trip_is_exact(a in finite(24)) {
        prop_assert_eq!(parse_finite(&write_finite(&a)).unwrap(), a);
    }

    #[test]
    fn finite_sum_and_product_match_dense(a in finite(24), b in finite(24)) {
        let (da, db) = (a.to_dense().unwrap(), b.to_dense().unwrap());
        let sum = a.add(&b).unwrap().to_dense().unwrap();
        prop_assert!((sum - (&da + &db)).amax() <= 1e-13 * (1.0 + a.qt_norm() + b.qt_norm()));
        let prod = a.mul(&b).unwrap().to_dense().unwrap();
        let scale = norm2(&da) * norm2(&db);
        prop_assert!(norm2(&(prod - &da * &db)) <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn finite_transpose_matches_dense(a in finite(24)) {
        let d = a.to_dense().unwrap();
        prop_assert!((a.transpose().to_dense().unwrap() - d.transpose()).amax() <= 1e-15);
    }

    #[test]
    fn parser_rejects_garbage_without_panicking(text in "\\PC{0,200}") {
        let _ = parse(&text);
    }

    #[test]
    fn parser_survives_edited_documents(a in qt(), at in any::<prop::sample::Index>(), junk in "[-+0-9eE. \n]{0,8}") {
        let mut text = write_qt(&a);
        let mut i = at.index(text.len() + 1);
        while !text.is_char_boundary(i) {
            i -= 1;
        }
        text.insert_str(i, &junk);
        // whatever is accepted must print and re-read unchanged
        if let Ok(b) = parse_qt(&text) {
            prop_assert_eq!(parse_qt(&write_qt(&b)).unwrap(), b);
        }
    }
}
