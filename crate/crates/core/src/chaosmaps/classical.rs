//! Classical sawtooth and Chirikov standard maps.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::randgen::{par_samples, SeededStream};
use crate::stats::{linear_fit, LinearFit};

const TWO_PI: f64 = 2.0 * PI;

fn wrap_angle(theta: f64) -> f64 {
    theta.rem_euclid(TWO_PI)
}

fn wrap_action(i: f64) -> f64 {
    (i + PI).rem_euclid(TWO_PI) - PI
}

/// `I' = I + K(θ - π)`, `θ' = θ + I'`, on the torus `0 ≤ θ < 2π`, `-π ≤ I < π`.
pub fn classical_sawtooth_step(i: f64, theta: f64, big_k: f64) -> (f64, f64) {
    let (i2, th2) = sawtooth_step_lifted(i, theta, big_k);
    (wrap_action(i2), th2)
}

/// Sawtooth step on the cylinder: `θ` wrapped, `I` left unbounded.
pub fn sawtooth_step_lifted(i: f64, theta: f64, big_k: f64) -> (f64, f64) {
    let theta = wrap_angle(theta);
    let i2 = i + big_k * (theta - PI);
    (i2, wrap_angle(theta + i2))
}

/// Jacobian of one sawtooth step in the `(I, θ)` variables.
pub fn sawtooth_jacobian(big_k: f64) -> [[f64; 2]; 2] {
    [[1.0, big_k], [1.0, 1.0 + big_k]]
}

/// Eigenvalues `μ± = (2 + K ± √(K² + 4K))/2` of the stability matrix;
/// complex (unit modulus) for `-4 < K < 0`.
pub fn stability_eigenvalues(big_k: f64) -> Option<(f64, f64)> {
    let disc = big_k * big_k + 4.0 * big_k;
    (disc >= 0.0).then(|| {
        let r = disc.sqrt();
        ((2.0 + big_k + r) / 2.0, (2.0 + big_k - r) / 2.0)
    })
}

/// Analytic Lyapunov exponent: `ln μ₊` for `K > 0`, `ln|μ₋|` for `K < -4`,
/// zero in the stable window `-4 ≤ K ≤ 0`.
pub fn lyapunov(big_k: f64) -> f64 {
    if (-4.0..=0.0).contains(&big_k) {
        return 0.0;
    }
    let (mu_p, mu_m) = stability_eigenvalues(big_k).expect("real eigenvalues outside [-4, 0]");
    if big_k > 0.0 {
        mu_p.ln()
    } else {
        mu_m.abs().ln()
    }
}

/// Finite-time exponent from iterating the tangent map with renormalization
/// every step. The sawtooth Jacobian is the same at every phase-space point,
/// so no reference orbit is needed.
pub fn lyapunov_tangent(big_k: f64, steps: usize) -> f64 {
    let m = sawtooth_jacobian(big_k);
    let mut v = [1.0, 0.0];
    let mut sum = 0.0;
    for _ in 0..steps {
        v = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
        let norm = v[0].hypot(v[1]);
        sum += norm.ln();
        v = [v[0] / norm, v[1] / norm];
    }
    sum / steps as f64
}

/// Finite-time exponent from two nearby orbits, re-separated to `d0`
/// after every step (Benettin's scheme). Separations are taken on the
/// cylinder so wrap-arounds do not register as jumps.
pub fn lyapunov_two_trajectory(big_k: f64, i0: f64, theta0: f64, d0: f64, steps: usize) -> f64 {
    let (mut ia, mut ta) = (i0, theta0);
    let (mut ib, mut tb) = (i0 + d0, theta0);
    let mut sum = 0.0;
    for _ in 0..steps {
        (ia, ta) = classical_sawtooth_step(ia, ta, big_k);
        (ib, tb) = classical_sawtooth_step(ib, tb, big_k);
        let di = wrap_action(ib - ia);
        let dt = wrap_action(tb - ta);
        let d = di.hypot(dt);
        sum += (d / d0).ln();
        ib = ia + di * d0 / d;
        tb = ta + dt * d0 / d;
    }
    sum / steps as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct DiffusionEstimate {
    /// Fitted slope of `⟨(I_t - I_0)²⟩` against `t`.
    pub coefficient: f64,
    pub fit: LinearFit,
    /// `⟨(I_t - I_0)²⟩` for `t = 1..=t_max`.
    pub variance: Vec<f64>,
}

/// Momentum diffusion of the lifted sawtooth map from a uniform ensemble.
pub fn diffusion_coefficient(big_k: f64, ensemble: usize, t_max: usize, stream: SeededStream) -> DiffusionEstimate {
    let paths = par_samples(stream, ensemble, |rng| {
        let i0 = rng.random_range(-PI..PI);
        let mut th = rng.random_range(0.0..TWO_PI);
        let mut i = i0;
        let mut out = Vec::with_capacity(t_max);
        for _ in 0..t_max {
            (i, th) = sawtooth_step_lifted(i, th, big_k);
            out.push((i - i0).powi(2));
        }
        out
    });
    let variance: Vec<f64> = (0..t_max)
        .map(|t| paths.iter().map(|p| p[t]).sum::<f64>() / ensemble as f64)
        .collect();
    let ts: Vec<f64> = (1..=t_max).map(|t| t as f64).collect();
    let fit = linear_fit(&ts, &variance);
    DiffusionEstimate { coefficient: fit.slope, fit, variance }
}

/// Random-phase estimate `D ≈ π²K²/3`.
pub fn diffusion_random_phase(big_k: f64) -> f64 {
    PI * PI * big_k * big_k / 3.0
}

/// Standard map `n' = n + k sin θ`, `θ' = θ + T n'` with `θ` wrapped.
pub fn chirikov_step(n: f64, theta: f64, k: f64, t: f64) -> (f64, f64) {
    let n2 = n + k * theta.sin();
    (n2, wrap_angle(theta + t * n2))
}

/// Jacobian of the standard map at angle `θ`, in `(n, θ)` variables.
pub fn chirikov_jacobian(theta: f64, k: f64, t: f64) -> [[f64; 2]; 2] {
    let c = k * theta.cos();
    [[1.0, c], [t, 1.0 + t * c]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(m: [[f64; 2]; 2]) -> f64 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    #[test]
    fn fixed_point_and_wrapping() {
        let (i, th) = classical_sawtooth_step(0.0, PI, 1.5);
        assert_eq!((i, th), (0.0, PI));
        let (i, th) = classical_sawtooth_step(3.0, 6.0, 7.3);
        assert!((-PI..PI).contains(&i) && (0.0..TWO_PI).contains(&th));
    }

    #[test]
    fn area_preserving() {
        for k in [-3.0, -1.0, 1.5, 10.0] {
            assert_eq!(det(sawtooth_jacobian(k)), 1.0);
        }
        for th in [0.1, 1.0, 2.5] {
            assert!((det(chirikov_jacobian(th, 3.0, 0.7)) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lyapunov_values() {
        assert!((lyapunov(1.5) - 1.1588).abs() < 1e-4);
        assert_eq!(lyapunov(-2.0), 0.0);
        assert!(lyapunov(-5.0) > 0.0);
        let tangent = lyapunov_tangent(1.5, 2000);
        assert!((tangent / lyapunov(1.5) - 1.0).abs() < 0.05);
        let two = lyapunov_two_trajectory(1.5, 0.3, 1.1, 1e-9, 5000);
        assert!((two / lyapunov(1.5) - 1.0).abs() < 0.05, "{two}");
    }

    #[test]
    fn integrable_orbit_stays_bounded() {
        // K = -1: the lifted action stays bounded along an orbit.
        let (mut i, mut th) = (0.4, 2.0);
        let mut max: f64 = 0.0;
        for _ in 0..10_000 {
            (i, th) = sawtooth_step_lifted(i, th, -1.0);
            max = max.max(i.abs());
        }
        assert!(max < 10.0);
    }

    #[test]
    fn chirikov_free_rotation_and_diffusion() {
        let (n, th) = chirikov_step(2.0, 1.0, 0.0, 0.5);
        assert_eq!(n, 2.0);
        assert!((th - 2.0).abs() < 1e-15);
        // K = kT = 10: variance of n grows roughly like k² t / 2.
        let k = 100.0;
        let t = 0.1;
        let samples = par_samples(SeededStream::new(3, 0), 2000, |rng| {
            let (mut n, mut th) = (0.0, rng.random_range(0.0..TWO_PI));
            for _ in 0..50 {
                (n, th) = chirikov_step(n, th, k, t);
            }
            n * n
        });
        let var = samples.iter().sum::<f64>() / samples.len() as f64;
        assert!(var > 0.5 * 0.5 * k * k * 50.0, "{var}");
    }

    #[test]
    fn diffusion_near_random_phase() {
        let est = diffusion_coefficient(10.0, 4000, 50, SeededStream::new(2, 0));
        assert!((est.coefficient / diffusion_random_phase(10.0) - 1.0).abs() < 0.15);
        assert!(est.fit.r_squared > 0.99);
    }
}
