use relmor::algorithms::*;
use relmor::linalg::*;
use relmor::random::{gaussian, minimum_phase_system, rng, stable_system};
use relmor::relerr::*;
use relmor::ss::*;
use relmor::MorError;

mod common;
use common::{brute_force, fwbt, siso1};

fn transfer_gap(a: &StateSpace, b: &StateSpace) -> f64 {
    probe_frequencies()
        .into_iter()
        .chain([0.0])
        .map(|w| (a.eval_jw(w).unwrap() - b.eval_jw(w).unwrap()).norm())
        .fold(0.0, f64::max)
}

#[test]
fn balanced_truncation_error_bound() {
    let full = stable_system(10, 1, &mut rng(31));
    let bt = balanced_truncation(&full, 4).unwrap();
    let err = hinf_norm(&subtract(&full, &bt.candidate.rom).unwrap(), 1e-6).unwrap();
    let tail: f64 = bt.hankel[4..].iter().sum();
    assert!(err <= 2.0 * tail, "{err} > 2·{tail}");
    assert!(bt.candidate.rom.is_stable());
    assert!(bt.candidate.biorthogonality_error().unwrap() < 1e-10);
    assert!(bt.hankel.windows(2).all(|p| p[0] >= p[1]));
}

#[test]
fn balanced_truncation_full_order() {
    let full = stable_system(5, 2, &mut rng(32));
    let bt = balanced_truncation(&full, 5).unwrap();
    assert!(transfer_gap(&full, &bt.candidate.rom) < 1e-8);
}

#[test]
fn bst_contract() {
    let mut g = rng(33);
    for k in 0..6 {
        let full = if k % 2 == 0 {
            minimum_phase_system(8, 1, &mut g)
        } else {
            stable_system(8, 2, &mut g)
        };
        let cfg = ReductionConfig::new(3);
        let bst = balanced_stochastic_truncation(&full, 3, &cfg).unwrap();
        let rom = &bst.candidate.rom;
        assert!(rom.is_stable(), "instance {k}");
        if full.is_minimum_phase() {
            assert!(rom.is_minimum_phase(), "instance {k}");
        }
        let sigma = Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(&bst.hankel[..3]));
        let scale = bst.hankel[0];
        assert!((&bst.projected_p - &sigma).amax() <= 1e-8 * scale);
        assert!((&bst.projected_q - &sigma).amax() <= 1e-8 * scale);
        assert!(bst.hankel.iter().all(|s| *s <= 1.0 + 1e-10));
    }
}

#[test]
fn bst_full_order_minimum_phase() {
    let full = minimum_phase_system(4, 1, &mut rng(34));
    let bst = balanced_stochastic_truncation(&full, 4, &ReductionConfig::new(4)).unwrap();
    assert!(transfer_gap(&full, &bst.candidate.rom) < 1e-8);
}

#[test]
fn bst_agrees_with_inverse_weighted_fwbt() {
    for seed in 0..4 {
        let full = minimum_phase_system(7, 1, &mut rng(40 + seed));
        let w = inverse_realization(&full).unwrap();
        let bst = balanced_stochastic_truncation(&full, 2, &ReductionConfig::new(2)).unwrap();
        let fw = fwbt(&full, &w, 2);
        let rel_err = |rom: &StateSpace| hinf_norm(&series(&subtract(&full, rom).unwrap(), &w).unwrap(), 1e-9).unwrap();
        let (a, b) = (rel_err(&bst.candidate.rom), rel_err(&fw));
        assert!((a - b).abs() <= 1e-6 * b.max(1e-12), "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn tsia_converged_runs_reach_the_global_optimum() {
    let mut checked = 0;
    for seed in 0..12 {
        let full = stable_system(2, 1, &mut rng(seed));
        let mut cfg = ReductionConfig::new(1);
        cfg.tol = 1e-12;
        cfg.max_iterations = 500;
        let t = tsia(&full, &cfg).unwrap();
        if !t.converged {
            continue;
        }
        let got = h2_norm(&subtract(&full, &t.candidate.rom).unwrap()).unwrap();
        let best = brute_force(&|a, k| h2_norm(&subtract(&full, &siso1(a, k, 0.0)).unwrap()).ok());
        assert!((got - best).abs() <= 1e-6, "seed {seed}: {got} vs {best}");
        checked += 1;
    }
    assert!(checked >= 6);
}

#[test]
fn irhmora_against_brute_force() {
    let mut checked = 0;
    for seed in 0..8 {
        let full = stable_system(2, 1, &mut rng(seed)).with_d(Matrix::identity(1, 1)).unwrap();
        if !full.is_minimum_phase() {
            continue;
        }
        let mut cfg = ReductionConfig::new(1);
        cfg.tol = 1e-12;
        cfg.max_iterations = 500;
        let r = irhmora(&full, &cfg).unwrap();
        assert!(r.candidate.biorthogonality_error().unwrap() < 1e-10);
        let Ok(got) = delta_mul_norm(&full, &r.candidate.rom) else {
            continue;
        };
        let best = brute_force(&|a, k| delta_mul_norm(&full, &siso1(a, k, 1.0)).ok().map(|d| d.value));
        // Nothing beats the global optimum.
        assert!(got.value >= best - 1e-9, "seed {seed}");
        if seed == 0 {
            assert!(r.converged && got.value <= best + 1e-3);
        }
        checked += 1;
    }
    assert!(checked >= 4);
}

#[test]
fn tsia_multi_start_fixed_points() {
    let full = stable_system(10, 1, &mut rng(50));
    let mut values = Vec::new();
    for seed in 0..5 {
        let mut cfg = ReductionConfig::new(2);
        cfg.seed = seed;
        cfg.tol = 1e-10;
        cfg.max_iterations = 500;
        let t = tsia(&full, &cfg).unwrap();
        if !t.converged {
            continue;
        }
        // Every converged run is a fixed point: one more sweep leaves the poles in place.
        let mut again = cfg.clone();
        again.init = Initialization::Given(t.candidate.rom.clone());
        again.max_iterations = 1;
        let one = tsia(&full, &again).unwrap();
        assert!(one.trace.last_change().unwrap() < 1e-8);
        values.push(h2_norm(&subtract(&full, &t.candidate.rom).unwrap()).unwrap());
    }
    assert!(!values.is_empty());
}

#[test]
fn irhmora_fixed_point_is_idempotent() {
    let full = minimum_phase_system(6, 1, &mut rng(60));
    let mut cfg = ReductionConfig::new(2);
    cfg.tol = 1e-10;
    cfg.max_iterations = 500;
    let r = irhmora(&full, &cfg).unwrap();
    assert!(r.converged);
    let next = irhmora_step(&full, &r.candidate.rom).unwrap();
    let change = pole_set_change(
        &r.candidate.rom.poles().unwrap().eigenvalues,
        &next.rom.poles().unwrap().eigenvalues,
    );
    assert!(change < 10.0 * cfg.tol);
    // Oblique-projection consistency of the returned model.
    let (v, w) = (r.candidate.v.as_ref().unwrap(), r.candidate.w.as_ref().unwrap());
    let rom = &r.candidate.rom;
    assert!((w.transpose() * full.a() * v - rom.a()).amax() < 1e-12 * full.a().amax());
    assert!((w.transpose() * full.b() - rom.b()).amax() < 1e-12 * full.b().amax().max(1.0));
    assert!((full.c() * v - rom.c()).amax() < 1e-12 * full.c().amax().max(1.0));
}

#[test]
fn sweep_is_basis_invariant() {
    let full = minimum_phase_system(8, 1, &mut rng(70));
    let rom = balanced_stochastic_truncation(&full, 3, &ReductionConfig::new(3)).unwrap().candidate.rom;
    let (v, w) = irhmora_bases(&full, &rom).unwrap();
    let m = gaussian(3, 3, &mut rng(71)) + Matrix::identity(3, 3) * 2.0;
    let project = |v: &Matrix, w: &Matrix| {
        let (v, w, _) = biorthogonalize(v, w).unwrap();
        RomCandidate::project(&full, v, w).unwrap().rom
    };
    let a = project(&v, &w);
    let b = project(&(&v * &m), &w);
    let c = project(&v, &(&w * m.transpose()));
    let scale = probe_frequencies()
        .into_iter()
        .map(|f| a.eval_jw(f).unwrap().norm())
        .fold(1.0, f64::max);
    assert!(transfer_gap(&a, &b) <= 1e-8 * scale);
    assert!(transfer_gap(&a, &c) <= 1e-8 * scale);
}

#[test]
fn biorthogonalize_contracts() {
    let mut g = rng(80);
    let v = gaussian(10, 3, &mut g);
    let w = gaussian(10, 3, &mut g);
    let (v2, w2, cond) = biorthogonalize(&v, &w).unwrap();
    assert!(cond >= 1.0);
    assert!((w2.transpose() * &v2 - Matrix::identity(3, 3)).amax() < 1e-12);
    // Same column spans: the orthogonal projectors agree.
    let proj = |x: &Matrix| {
        let q = orthonormalize(x);
        &q * q.transpose()
    };
    assert!((proj(&v2) - proj(&v)).amax() < 1e-10);
    assert!((proj(&w2) - proj(&w)).amax() < 1e-10);
    let pi = &v2 * w2.transpose();
    assert!((&pi * &pi - &pi).amax() < 1e-10);
    // Already bi-orthogonal input is a fixed point.
    let (v3, w3, _) = biorthogonalize(&v2, &w2).unwrap();
    assert!((v3 - &v2).amax() < 1e-12 && (w3 - &w2).amax() < 1e-12);
    let q = orthonormalize(&v);
    let (v4, w4, _) = biorthogonalize(&q, &q).unwrap();
    assert!((&v4 - &q).amax() < 1e-12 && (&w4 - &q).amax() < 1e-12);
    let singular = Matrix::from_fn(10, 3, |i, j| if i == j && j < 2 { 1.0 } else { 0.0 });
    assert!(matches!(biorthogonalize(&singular, &singular), Err(MorError::Singular(_))));
}

#[test]
fn weighted_routes_agree_for_minimum_phase_models() {
    let full = minimum_phase_system(6, 1, &mut rng(90));
    let mut cfg = ReductionConfig::new(2);
    cfg.tol = 1e-10;
    cfg.max_iterations = 500;
    cfg.init = Initialization::Given(
        balanced_stochastic_truncation(&full, 2, &cfg).unwrap().candidate.rom,
    );
    let inv = inverse_realization(&full).unwrap();
    let value = |route| {
        let r = relative_error_h2_weighted(&full, &cfg, route).unwrap();
        assert!(r.converged);
        weighted_h2_norm(&full, &r.rom_with_original_d().unwrap(), &inv).unwrap()
    };
    let (a, b) = (value(WeightRoute::Inverse), value(WeightRoute::SpectralFactor));
    assert!((a - b).abs() <= 1e-4 * a.max(b), "{a} vs {b}");
}

#[test]
fn inverse_weight_refused_for_non_minimum_phase_model() {
    // (s - 2)/(s + 1): zero at +2.
    let full = siso1(-1.0, -3.0, 1.0);
    let cfg = ReductionConfig::new(1);
    assert!(matches!(
        relative_error_h2_weighted(&full, &cfg, WeightRoute::Inverse),
        Err(MorError::NotMinimumPhase { .. })
    ));
    let r = relative_error_h2_weighted(&full, &cfg, WeightRoute::SpectralFactor).unwrap();
    let w = inverse_spectral_weight(&full).unwrap();
    let v = weighted_h2_norm(&full, &r.rom_with_original_d().unwrap(), &w).unwrap();
    assert!(v.is_finite());
}

#[test]
fn relative_error_two_assemblies() {
    let full = minimum_phase_system(6, 2, &mut rng(95));
    let rom = balanced_truncation(&full, 3).unwrap().candidate.rom;
    let inv = inverse_realization(&full).unwrap();
    let a = weighted_h2_norm(&full, &rom, &inv).unwrap();
    let b = h2_norm(&series(&subtract(&full, &rom).unwrap(), &inv).unwrap()).unwrap();
    assert!((a - b).abs() <= 1e-9 * b);
}
