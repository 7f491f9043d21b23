#![allow(dead_code)]

use relmor::linalg::{solve_lyapunov, Matrix};
use relmor::ss::StateSpace;

pub fn siso1(a: f64, k: f64, d: f64) -> StateSpace {
    let e = |v| Matrix::from_element(1, 1, v);
    StateSpace::new(e(a), e(1.0), e(k), e(d)).unwrap()
}

/// Global minimum over first-order models `k/(s - a) + d`: log grid in `a`,
/// linear grid in `k`, then a compass search. `b = 1` loses nothing since
/// only the product `bk` enters the transfer function.
pub fn brute_force(f: &dyn Fn(f64, f64) -> Option<f64>) -> f64 {
    let mut best = (f64::INFINITY, -1.0, 0.0);
    for i in 0..200 {
        let a = -(10f64.powf(-2.0 + 4.0 * i as f64 / 199.0));
        for j in 0..=200 {
            let k = -5.0 + 0.05 * j as f64;
            if let Some(v) = f(a, k).filter(|v| *v < best.0) {
                best = (v, a, k);
            }
        }
    }
    let (mut v, mut a, mut k) = best;
    let (mut sa, mut sk) = (0.05 * a.abs(), 0.05);
    while sa > 1e-12 || sk > 1e-12 {
        let step = [(sa, 0.0), (-sa, 0.0), (0.0, sk), (0.0, -sk)]
            .into_iter()
            .filter(|(da, _)| a + da < 0.0)
            .find_map(|(da, dk)| f(a + da, k + dk).filter(|nv| *nv < v).map(|nv| (nv, da, dk)));
        match step {
            Some((nv, da, dk)) => {
                v = nv;
                a += da;
                k += dk;
            }
            None => {
                sa *= 0.5;
                sk *= 0.5;
            }
        }
    }
    v
}

/// Frequency-weighted balanced truncation with output weight `W`: the
/// controllability gramian of `H` against the `H`-block of the observability
/// gramian of the cascade `W·H`.
pub fn fwbt(full: &StateSpace, w: &StateSpace, r: usize) -> StateSpace {
    let (n, nw, m) = (full.n(), w.n(), full.m());
    let mut ac = Matrix::zeros(n + nw, n + nw);
    ac.view_mut((0, 0), (n, n)).copy_from(full.a());
    ac.view_mut((n, 0), (nw, n)).copy_from(&(w.b() * full.c()));
    ac.view_mut((n, n), (nw, nw)).copy_from(w.a());
    let mut cc = Matrix::zeros(m, n + nw);
    cc.view_mut((0, 0), (m, n)).copy_from(&(w.d() * full.c()));
    cc.view_mut((0, n), (m, nw)).copy_from(w.c());
    let qc = solve_lyapunov(&ac.transpose(), &(cc.transpose() * &cc)).unwrap();
    let q = qc.view((0, 0), (n, n)).into_owned();
    let p = solve_lyapunov(full.a(), &(full.b() * full.b().transpose())).unwrap();
    let lp = p.cholesky().unwrap().l();
    let lq = q.cholesky().unwrap().l();
    let svd = (lq.transpose() * &lp).svd(true, true);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let mut v = Matrix::zeros(n, r);
    let mut wm = Matrix::zeros(n, r);
    for (k, &i) in idx.iter().take(r).enumerate() {
        let s = 1.0 / svd.singular_values[i].sqrt();
        v.set_column(k, &(&lp * vt.row(i).transpose() * s));
        wm.set_column(k, &(&lq * u.column(i) * s));
    }
    StateSpace::new(
        wm.transpose() * full.a() * &v,
        wm.transpose() * full.b(),
        full.c() * &v,
        full.d().clone(),
    )
    .unwrap()
}
