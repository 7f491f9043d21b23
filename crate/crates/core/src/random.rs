//! Seeded random test systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{orthonormalize, Matrix};
use crate::ss::{zeros, StateSpace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random Hurwitz matrix with real poles and lightly damped complex pairs,
/// hidden behind a random orthogonal similarity.
pub fn stable_matrix(n: usize, rng: &mut impl Rng) -> Matrix {
    let mut d = Matrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && rng.random_bool(0.5) {
            let sigma = -rng.random_range(0.05..2.0);
            let omega = rng.random_range(0.2..5.0);
            d[(i, i)] = sigma;
            d[(i + 1, i + 1)] = sigma;
            d[(i, i + 1)] = omega;
            d[(i + 1, i)] = -omega;
            i += 2;
        } else {
            d[(i, i)] = -rng.random_range(0.1..3.0);
            i += 1;
        }
    }
    let q = orthonormalize(&gaussian(n, n, rng));
    &q * d * q.transpose()
}

/// Stable strictly proper system (`D = 0`).
pub fn stable_system(n: usize, m: usize, rng: &mut impl Rng) -> StateSpace {
    let a = stable_matrix(n, rng);
    let b = gaussian(n, m, rng);
    let c = gaussian(m, n, rng);
    StateSpace::new(a, b, c, Matrix::zeros(m, m)).expect("consistent dimensions")
}

/// Stable, minimum-phase system with `D = I`.
pub fn minimum_phase_system(n: usize, m: usize, rng: &mut impl Rng) -> StateSpace {
    let a = stable_matrix(n, rng);
    let b = gaussian(n, m, rng);
    let c = gaussian(m, n, rng);
    let mut scale = 1.0;
    loop {
        let sys = StateSpace::new(a.clone(), &b * scale, c.clone(), Matrix::identity(m, m))
            .expect("consistent dimensions");
        if zeros(&sys).map(|z| z.max_real_part < -1e-3).unwrap_or(false) {
            return sys;
        }
        scale *= 0.5;
    }
}
