use num_complex::Complex64;
use proptest::prelude::*;
use relmor::algorithms::{biorthogonality_error, biorthogonalize, pole_set_change};
use relmor::linalg::{eigenvalues, fro, lyapunov_residual, solve_lyapunov, Matrix};
use relmor::random::{gaussian, rng, stable_matrix, stable_system};
use relmor::ss::{h2_norm, h2_norm_observability};

fn poles() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-10.0..-0.01f64, -10.0..10.0f64), 1..6)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lyapunov_solution_is_symmetric_with_small_residual(seed in any::<u64>(), n in 1usize..12, k in 1usize..4) {
        let mut g = rng(seed);
        let a = stable_matrix(n, &mut g);
        let b = gaussian(n, k, &mut g);
        let q = &b * b.transpose();
        let p = solve_lyapunov(&a, &q).unwrap();
        prop_assert_eq!(&p, &p.transpose());
        prop_assert!(lyapunov_residual(&a, &q, &p) < 1e-9);
    }

    #[test]
    fn h2_gramians_agree(seed in any::<u64>(), n in 1usize..10, m in 1usize..3) {
        let sys = stable_system(n, m, &mut rng(seed));
        let c = h2_norm(&sys).unwrap();
        let o = h2_norm_observability(&sys).unwrap();
        prop_assert!((c - o).abs() <= 1e-8 * c.max(1e-12));
    }

    #[test]
    fn biorthogonalize_gives_identity_and_keeps_v(seed in any::<u64>(), n in 2usize..10, r in 1usize..3) {
        let r = r.min(n);
        let mut g = rng(seed);
        let v = gaussian(n, r, &mut g);
        let w = &v + gaussian(n, r, &mut g) * 0.3;
        if let Ok((v2, w2, cond)) = biorthogonalize(&v, &w) {
            prop_assert_eq!(&v2, &v);
            prop_assert!(biorthogonality_error(&v2, &w2) <= 1e-10 * cond.max(1.0));
            // The span of W is unchanged: W' = W M for some invertible M.
            let m = w.clone().svd(true, true).solve(&w2, 1e-14).unwrap();
            prop_assert!(fro(&(&w * m - &w2)) <= 1e-8 * fro(&w2));
        }
    }

    #[test]
    fn pole_set_change_is_a_scaled_metric(a in poles(), b in poles()) {
        prop_assert_eq!(pole_set_change(&a, &a), 0.0);
        let ab = pole_set_change(&a, &b);
        prop_assert_eq!(ab, pole_set_change(&b, &a));
        prop_assert!(ab >= 0.0);
        let mut reordered = a.clone();
        reordered.reverse();
        prop_assert_eq!(pole_set_change(&reordered, &b), ab);
    }

    #[test]
    fn spectrum_of_real_matrix_is_conjugate_closed(seed in any::<u64>(), n in 1usize..10) {
        let a = gaussian(n, n, &mut rng(seed));
        let s = eigenvalues(&a).unwrap();
        prop_assert_eq!(s.len(), n);
        let scale = fro(&a).max(1.0);
        for z in &s.eigenvalues {
            let d = s.eigenvalues.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-8 * scale);
        }
        let max_re = s.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(s.max_real_part, max_re);
        prop_assert_eq!(s.is_hurwitz, max_re < 0.0);
    }

    #[test]
    fn h2_norm_is_similarity_invariant(seed in any::<u64>(), n in 1usize..8) {
        let mut g = rng(seed);
        let sys = stable_system(n, 2, &mut g);
        let t = gaussian(n, n, &mut g) + Matrix::identity(n, n) * (2.0 * n as f64).sqrt() * 2.0;
        let moved = sys.similarity(&t).unwrap();
        let (a, b) = (h2_norm(&sys).unwrap(), h2_norm(&moved).unwrap());
        prop_assert!((a - b).abs() <= 1e-7 * a.max(1e-12));
    }
}
