use num_complex::Complex64;
use relmor::linalg::{to_complex, CMatrix, Matrix};
use relmor::random::{gaussian, minimum_phase_system, rng, stable_system};
use relmor::ss::*;

fn scalar(a: f64, b: f64, c: f64, d: f64) -> StateSpace {
    let e = |v| Matrix::from_element(1, 1, v);
    StateSpace::new(e(a), e(b), e(c), e(d)).unwrap()
}

/// `C (jωI - A)⁻¹ B + D` by an independent complex LU solve.
fn direct_response(sys: &StateSpace, w: f64) -> CMatrix {
    let n = sys.n();
    let m = CMatrix::identity(n, n) * Complex64::new(0.0, w) - to_complex(sys.a());
    let x = m.lu().solve(&to_complex(sys.b())).unwrap();
    to_complex(sys.c()) * x + to_complex(sys.d())
}

#[test]
fn response_matches_direct_solve() {
    let mut g = rng(21);
    let mut sys = stable_system(5, 2, &mut g);
    sys = sys.with_d(gaussian(2, 2, &mut g)).unwrap();
    let grid = log_grid(1e-2, 1e2, 15);
    let table = frequency_response(&sys, &grid).unwrap();
    for (w, sv) in grid.iter().zip(&table.singular_values) {
        let sv = sv.as_ref().unwrap();
        let mut expect: Vec<f64> = direct_response(&sys, *w).singular_values().iter().copied().collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        for (s, e) in sv.iter().zip(&expect) {
            assert!((s - e).abs() <= 1e-10 * e.max(1.0));
        }
        assert!(sv.windows(2).all(|p| p[0] >= p[1]));
    }
}

#[test]
fn identity_gain_has_unit_sigma() {
    let sys = StateSpace::new(Matrix::zeros(0, 0), Matrix::zeros(0, 2), Matrix::zeros(2, 0), Matrix::identity(2, 2))
        .unwrap();
    let t = frequency_response(&sys, &[0.1, 1.0, 10.0]).unwrap();
    for sv in t.singular_values {
        assert!(sv.unwrap().iter().all(|s| (s - 1.0).abs() < 1e-15));
    }
}

#[test]
fn resonance_peak_against_dense_grid() {
    // ω₀² / (s² + 2ζω₀ s + ω₀²), ζ = 0.02, ω₀ = 3.
    let (w0, z) = (3.0, 0.02);
    let sys = StateSpace::new(
        Matrix::from_row_slice(2, 2, &[0.0, 1.0, -w0 * w0, -2.0 * z * w0]),
        Matrix::from_row_slice(2, 1, &[0.0, 1.0]),
        Matrix::from_row_slice(1, 2, &[w0 * w0, 0.0]),
        Matrix::zeros(1, 1),
    )
    .unwrap();
    let grid = log_grid(1e-2, 1e2, 100_000);
    let oracle = frequency_response(&sys, &grid)
        .unwrap()
        .sigma_max()
        .into_iter()
        .fold(0.0, f64::max);
    let closed_form = 1.0 / (2.0 * z * (1.0 - z * z).sqrt());
    let got = hinf_norm(&sys, 1e-4).unwrap();
    assert!((got - oracle).abs() <= 1e-4 * oracle, "{got} vs grid {oracle}");
    assert!((got - closed_form).abs() <= 1e-4 * closed_form, "{got} vs {closed_form}");
    assert!(got >= oracle * (1.0 - 1e-12));
}

#[test]
fn hinf_is_an_upper_bound_on_the_grid() {
    let mut g = rng(22);
    for _ in 0..5 {
        let sys = stable_system(6, 2, &mut g);
        let gamma = hinf_norm(&sys, 1e-6).unwrap();
        let sm = frequency_response(&sys, &log_grid(1e-3, 1e3, 400)).unwrap().sigma_max();
        assert!(sm.iter().all(|s| *s <= gamma * (1.0 + 1e-9)));
    }
}

#[test]
fn scalar_cascade() {
    let g = series(&scalar(-1.0, 1.0, 1.0, 0.0), &scalar(-2.0, 1.0, 1.0, 0.0)).unwrap();
    for w in probe_frequencies() {
        let s = Complex64::new(0.0, w);
        let expect = 1.0 / ((s + 1.0) * (s + 2.0));
        assert!((g.eval_jw(w).unwrap()[(0, 0)] - expect).norm() < 1e-12);
    }
    let h = scalar(-1.0, 1.0, 1.0, 0.0);
    assert!(h2_norm(&subtract(&h, &h).unwrap()).unwrap() < 1e-12);
}

#[test]
fn inverse_cascade_is_identity() {
    let mut g = rng(23);
    let mut sys = stable_system(6, 1, &mut g);
    sys = sys.with_d(Matrix::identity(1, 1)).unwrap();
    let inv = inverse_realization(&sys).unwrap();
    let both = series(&sys, &inv).unwrap();
    for w in std::iter::once(0.0).chain(probe_frequencies()) {
        let p = sys.eval_jw(w).unwrap()[(0, 0)] * inv.eval_jw(w).unwrap()[(0, 0)];
        assert!((p - 1.0).norm() < 1e-8);
        assert!((both.eval_jw(w).unwrap()[(0, 0)] - 1.0).norm() < 1e-8);
    }
}

#[test]
fn spectral_factor_preserves_singular_values() {
    let mut g = rng(24);
    for k in 0..4 {
        let mut sys = stable_system(5, 2, &mut g);
        sys = sys.with_d(Matrix::identity(2, 2) + gaussian(2, 2, &mut g) * 0.1).unwrap();
        let sf = spectral_factor(&sys).unwrap();
        assert!(zeros(&sf.factor).unwrap().max_real_part < 0.0, "instance {k}");
        for w in probe_frequencies() {
            let sg = direct_response(&sf.factor, w).singular_values();
            let sh = direct_response(&sys, w).singular_values();
            let (mut sg, mut sh): (Vec<f64>, Vec<f64>) = (sg.iter().copied().collect(), sh.iter().copied().collect());
            sg.sort_by(f64::total_cmp);
            sh.sort_by(f64::total_cmp);
            for (a, b) in sg.iter().zip(&sh) {
                assert!((a - b).abs() <= 1e-6 * b.max(1e-12));
            }
        }
    }
}

#[test]
fn factor_of_four_state_minimum_phase_model() {
    // G(jω)G⁻¹(jω) = 1 and |G(jω)| = |H(jω)| at 20 frequencies.
    let sys = minimum_phase_system(4, 1, &mut rng(25));
    let sf = spectral_factor(&sys).unwrap();
    let inv = inverse_realization(&sf.factor).unwrap();
    for w in log_grid(1e-3, 1e3, 20) {
        let p = sf.factor.eval_jw(w).unwrap()[(0, 0)] * inv.eval_jw(w).unwrap()[(0, 0)];
        assert!((p - 1.0).norm() < 1e-8);
        let mag = sys.eval_jw(w).unwrap()[(0, 0)].norm();
        assert!((sf.factor.eval_jw(w).unwrap()[(0, 0)].norm() - mag).abs() < 1e-8 * mag);
    }
}

#[test]
fn h2_duality_on_random_systems() {
    let mut g = rng(26);
    for _ in 0..10 {
        let sys = stable_system(8, 2, &mut g);
        let c = h2_norm(&sys).unwrap();
        let o = h2_norm_observability(&sys).unwrap();
        assert!((c - o).abs() <= 1e-9 * c);
        let f = h2_norm_factored(&sys).unwrap();
        let fo = h2_norm_factored_observability(&sys).unwrap();
        assert!((f - c).abs() <= 1e-9 * c && (fo - c).abs() <= 1e-9 * c);
    }
}
