#![allow(dead_code)]

use modal_steer::{FrequencyPreset, ModalSystem, Mode, StateVector};
use rand::Rng;

/// Dense matrix-free RK4 for `x' = A x + B u(t)` over blocks `0..=m`,
/// halving the step until two runs agree to `tol` in l2.
pub fn rk4_truncated(
    system: &ModalSystem,
    m: usize,
    x0: &StateVector,
    u: &dyn Fn(f64) -> f64,
    tau: f64,
    tol: f64,
) -> Vec<f64> {
    let d = 2 * (m + 1);
    let kappa = system.kappa();
    let deriv = |t: f64, x: &[f64]| -> Vec<f64> {
        let mut dx = vec![0.0; d];
        let ut = u(t);
        dx[0] = x[1];
        dx[1] = ut;
        for n in 1..=m {
            let md = system.modes()[n - 1];
            let (i, j) = (2 * n, 2 * n + 1);
            dx[i] = md.omega * x[j];
            dx[j] = -md.omega * x[i] - 2.0 * kappa * x[j] + md.b * ut;
        }
        dx
    };
    let run = |steps: usize| {
        let h = tau / steps as f64;
        let mut x = x0.to_dense(d);
        for k in 0..steps {
            let t = k as f64 * h;
            let axpy = |a: &[f64], c: f64, b: &[f64]| a.iter().zip(b).map(|(p, q)| p + c * q).collect::<Vec<_>>();
            let k1 = deriv(t, &x);
            let k2 = deriv(t + h / 2.0, &axpy(&x, h / 2.0, &k1));
            let k3 = deriv(t + h / 2.0, &axpy(&x, h / 2.0, &k2));
            let k4 = deriv(t + h, &axpy(&x, h, &k3));
            for i in 0..d {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        x
    };
    let mut steps = 1024;
    let mut prev = run(steps);
    loop {
        steps *= 2;
        let next = run(steps);
        let diff = next.iter().zip(&prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if diff < tol || steps >= 1 << 18 {
            return next;
        }
        prev = next;
    }
}

pub fn l2_diff(a: &[f64], b: &StateVector) -> f64 {
    a.iter()
        .enumerate()
        .map(|(i, x)| (x - b.get(i)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Random system with well separated, roughly quadratic frequencies.
pub fn random_system<R: Rng>(rng: &mut R, modes: usize, kappa_max: f64) -> ModalSystem {
    let scale = rng.gen_range(0.5..1.5);
    let list: Vec<Mode> = (1..=modes)
        .map(|n| {
            let nf = n as f64;
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            Mode {
                omega: scale * nf * nf * rng.gen_range(0.97..1.03) + 0.2,
                b: sign * rng.gen_range(0.5..1.5) * nf.powf(-2.0),
            }
        })
        .collect();
    let kappa = rng.gen_range(0.0..kappa_max);
    ModalSystem::new(kappa, list, false).unwrap()
}

pub fn random_state<R: Rng>(rng: &mut R, blocks: usize) -> StateVector {
    StateVector::from_entries((0..2 * (blocks + 1)).map(|i| (i, rng.gen_range(-1.0..1.0))))
}

pub fn euler_bernoulli(kappa: f64, count: usize) -> ModalSystem {
    modal_steer::build_system(&FrequencyPreset::euler_bernoulli(1.0), count, kappa, false).unwrap()
}
