use std::process::Command;

use qt_bench::experiments::{self, BenchMethod, HankelRow, MertonRow, QbdRow, SqrtRow};
use qtoeplitz::matfunc::solve_quadratic;

fn qt_bench(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qt-bench"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn empty_sizes_is_a_usage_error() {
    for cmd in ["hankel-bench", "merton-expm", "sqrtm-demo", "qbd"] {
        let (ok, out, err) = qt_bench(&[cmd, "--sizes", ""]);
        assert!(!ok, "{cmd}");
        assert!(out.is_empty());
        assert!(err.contains("--sizes"), "{err}");
    }
    let (ok, _, _) = qt_bench(&["merton-expm", "--sizes", "2"]);
    assert!(!ok);
}

#[test]
fn headers_and_row_shapes() {
    let cases: [(&[&str], &str); 4] = [
        (
            &["hankel-bench", "--sizes", "64", "--method", "svd"],
            HankelRow::HEADER,
        ),
        (&["merton-expm", "--sizes", "8"], MertonRow::HEADER),
        (
            &["sqrtm-demo", "--sizes", "8", "--shift", "0.5"],
            SqrtRow::HEADER,
        ),
        (&["qbd", "--sizes", "16"], QbdRow::HEADER),
    ];
    for (args, header) in cases {
        let (ok, out, err) = qt_bench(args);
        assert!(ok, "{args:?}: {err}");
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 2, "{out}");
        assert_eq!(lines[0], header);
        assert_eq!(
            lines[1].split(',').count(),
            header.split(',').count(),
            "{}",
            lines[1]
        );
    }
}

#[test]
fn output_file_and_seed_determinism() {
    let dir = std::env::temp_dir().join(format!("qt-bench-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("h.csv");
    let p = path.to_str().unwrap();
    let args = [
        "hankel-bench",
        "--sizes",
        "600",
        "--method",
        "random",
        "--seed",
        "9",
        "--out",
        p,
    ];
    assert!(qt_bench(&args).0);
    let first = std::fs::read_to_string(&path).unwrap();
    assert!(qt_bench(&args).0);
    let second = std::fs::read_to_string(&path).unwrap();
    let rank = |s: &str| {
        s.lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(3)
            .unwrap()
            .to_string()
    };
    assert_eq!(rank(&first), rank(&second));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unshifted_square_root_reports_an_error() {
    let (ok, _, err) = qt_bench(&["sqrtm-demo", "--sizes", "32"]);
    assert!(!ok);
    assert!(err.contains("vanishes"), "{err}");
}

#[test]
fn small_hankel_exact_path() {
    let row = experiments::hankel_bench(64, BenchMethod::Svd, 1e-14, 3).unwrap();
    assert!(row.residual.unwrap() <= 1e-13);
    assert!(row.rank > 0 && row.rank <= 64);
}

#[test]
fn hankel_methods_agree_on_rank() {
    let a = experiments::hankel_bench(1024, BenchMethod::Lanczos, 1e-14, 4).unwrap();
    let b = experiments::hankel_bench(1024, BenchMethod::Random, 1e-14, 4).unwrap();
    assert!(a.rank.abs_diff(b.rank) <= 2, "{} {}", a.rank, b.rank);
    assert!(a.residual.unwrap() <= 1e-13 && b.residual.unwrap() <= 1e-13);
}

#[test]
fn shifted_square_root_converges() {
    let row = experiments::sqrtm_demo(32, 2, 0.5).unwrap();
    assert!(row.residual <= 1e-10, "{}", row.residual);
    let again = experiments::sqrtm_demo(32, 2, 0.5).unwrap();
    assert_eq!(row.rank, again.rank);
    assert_eq!(row.residual, again.residual);
}

#[test]
fn qbd_solution_matches_dense_cyclic_reduction() {
    let m = 64;
    let [am1, a0, a1] = experiments::qbd_model().unwrap().blocks(m).unwrap();
    let d = |a: &qtoeplitz::FiniteQtMatrix| a.to_dense().unwrap();
    let dense = solve_quadratic(&d(&am1), &d(&a0), &d(&a1), 1e-15).unwrap();
    let qt = solve_quadratic(&am1, &a0, &a1, 1e-15).unwrap();
    let diff = (qt.g.to_dense().unwrap() - &dense.g).norm();
    assert!(diff <= 1e-10, "{diff}");
    // the assembled chain is stochastic
    let total = d(&am1) + d(&a0) + d(&a1);
    for i in 0..m {
        assert!((total.row(i).sum() - 1.0).abs() < 1e-15, "row {i}");
    }
}
