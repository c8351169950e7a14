mod common;

use common::{
    dense_a, dense_a1, dense_a2, identity_plus, lu_solve, matvec, max_abs, max_abs_diff,
    random_drift,
};
use osmosis::operators::{is_irreducible, off_diagonals_nonnegative, Stencil};
use osmosis::synthetic::random_field;
use osmosis::{
    apply_a, assemble_lines, canonical_drift, column_sum_defect, Axis, DriftField, ScalarField,
};
use proptest::prelude::*;

fn small_case() -> impl Strategy<Value = (DriftField, ScalarField)> {
    (2usize..=6, 2usize..=6, 0u64..100_000, 0.1f64..1.9).prop_map(|(w, h, seed, bound)| {
        (
            random_drift(w, h, bound, seed),
            random_field(w, h, 0.0, 10.0, seed + 7),
        )
    })
}

proptest! {
    #[test]
    fn flux_form_matches_dense((d, u) in small_case()) {
        let got = apply_a(&u, &d).unwrap();
        let a = dense_a(&d);
        let want = matvec(&a, u.values());
        let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
        prop_assert!(max_abs_diff(got.values(), &want) <= 1e-13 * norm * max_abs(u.values()));
    }

    #[test]
    fn stencil_matches_dense((d, u) in small_case()) {
        let s = Stencil::assemble(&d);
        let a = dense_a(&d);
        prop_assert!(max_abs_diff(&s.apply(u.values()), &matvec(&a, u.values())) <= 1e-12);
        let at: Vec<Vec<f64>> = (0..a.len()).map(|j| a.iter().map(|r| r[j]).collect()).collect();
        prop_assert!(max_abs_diff(&s.apply_transpose(u.values()), &matvec(&at, u.values())) <= 1e-12);
    }

    #[test]
    fn columns_sum_to_zero((d, _) in small_case()) {
        prop_assert!(column_sum_defect(&d) <= 1e-13);
        let a = dense_a(&d);
        for j in 0..a.len() {
            let s: f64 = a.iter().map(|r| r[j]).sum();
            prop_assert!(s.abs() <= 1e-13);
        }
    }

    #[test]
    fn image_of_a_carries_no_mass((d, u) in small_case()) {
        let r = apply_a(&u, &d).unwrap();
        prop_assert!(r.values().iter().sum::<f64>().abs() <= 1e-10);
    }

    #[test]
    fn off_diagonal_sign_follows_scaled_drift((d, _) in small_case()) {
        let a = dense_a(&d);
        let oracle = a.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, &v)| i == j || v >= 0.0));
        prop_assert_eq!(off_diagonals_nonnegative(&d), oracle);
        prop_assert!(oracle);
        prop_assert!(is_irreducible(&d));
    }

    #[test]
    fn line_systems_place_into_dense((d, _) in small_case(), tau in 0.01f64..100.0) {
        let (w, h) = d.dims();
        for (axis, m) in [(Axis::X, dense_a1(&d)), (Axis::Y, dense_a2(&d))] {
            let want = identity_plus(&m, -tau);
            let sys = assemble_lines(&d, axis, tau).unwrap();
            let mut placed = vec![vec![0.0; w * h]; w * h];
            let idx = |line: usize, k: usize| match axis {
                Axis::X => line * w + k,
                Axis::Y => k * w + line,
            };
            for line in 0..sys.line_count {
                let t = sys.line(line);
                for k in 0..sys.line_len {
                    placed[idx(line, k)][idx(line, k)] = t.diag[k];
                }
                for k in 0..sys.line_len - 1 {
                    placed[idx(line, k + 1)][idx(line, k)] = t.lower[k];
                    placed[idx(line, k)][idx(line, k + 1)] = t.upper[k];
                }
            }
            for (pr, wr) in placed.iter().zip(&want) {
                prop_assert!(max_abs_diff(pr, wr) <= 1e-14 * (1.0 + 4.0 * tau));
            }
            // Unit column sums: I - tau A conserves mass.
            for j in 0..w * h {
                let s: f64 = placed.iter().map(|r| r[j]).sum();
                prop_assert!((s - 1.0).abs() <= 1e-14 * (1.0 + 4.0 * tau));
            }
        }
    }
}

#[test]
fn three_point_line_without_drift() {
    let d = DriftField::zeros(3, 2, 1.0).unwrap();
    let sys = assemble_lines(&d, Axis::X, 1.0).unwrap();
    let line = sys.line(1);
    assert_eq!(line.diag, [2.0, 3.0, 2.0]);
    assert_eq!(line.lower, [-1.0, -1.0]);
    assert_eq!(line.upper, [-1.0, -1.0]);
}

#[test]
fn steady_state_is_the_dense_null_vector() {
    let v = random_field(5, 5, 0.5, 20.0, 99);
    let d = canonical_drift(&v).unwrap();
    let a = dense_a(&d);
    // Replace the last equation by a mass constraint and solve.
    let n = 25;
    let mut m = a.clone();
    m[n - 1] = vec![1.0; n];
    let mut b = vec![0.0; n];
    b[n - 1] = v.total_mass();
    let null = lu_solve(&m, &b);
    assert!(max_abs_diff(&null, v.values()) <= 1e-10 * v.max());
    assert!(max_abs(apply_a(&v, &d).unwrap().values()) <= 1e-12 * v.max());
}

#[test]
fn gating_one_face_touches_two_rows() {
    let v = random_field(6, 5, 1.0, 9.0, 4);
    let d = canonical_drift(&v).unwrap();
    let mut g = d.clone();
    let (x, y) = (2, 3);
    g.d1_mut()[y * 5 + x] = 0.0;
    let (a, b) = (dense_a(&d), dense_a(&g));
    let changed: Vec<usize> = (0..30).filter(|&i| a[i] != b[i]).collect();
    assert_eq!(changed, vec![y * 6 + x, y * 6 + x + 1]);
    assert!(column_sum_defect(&g) <= 1e-13);
}

#[test]
fn canonical_drift_on_larger_grid_has_no_defect() {
    let v = random_field(64, 48, 0.01, 300.0, 12);
    assert!(column_sum_defect(&canonical_drift(&v).unwrap()) <= 1e-13);
}
