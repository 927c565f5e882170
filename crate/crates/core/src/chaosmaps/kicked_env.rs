//! Two qubits coupled to a kicked rotator that acts as a dephasing
//! environment, plus the random-phase-kick channel that approximates it.
//!
//! The joint state is kept as four rotator vectors `ψ_c`, one per qubit
//! basis state `c = q1 + 2 q2`. As a [`StateVector`] with dims `[2, 2, N]`
//! the amplitude of `|q1 q2 j⟩` sits at flat index `c + 4j`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::entan::entanglement_of_formation;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::qstate::{vn_entropy, DensityMatrix, StateVector};
use crate::randgen::{complex_gaussian, par_tasks, SeededStream};

use super::sawtooth::momentum_of_bin;

/// Eigenvalue of `σ_z⁽¹⁾ + σ_z⁽²⁾` on qubit basis state `c`.
pub const KICK_SHIFT: [f64; 4] = [2.0, 0.0, 0.0, -2.0];

/// Kick strength used for the headline environment runs.
pub const HEADLINE_K: f64 = 99.72676;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickedEnvParams {
    /// Classical parameter `K = kT`.
    pub big_k: f64,
    /// Rotator dimension, a power of two.
    pub n: usize,
    /// Qubit–rotator coupling.
    pub epsilon: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl KickedEnvParams {
    /// Parameters with `δ₂ = √2 δ₁`.
    pub fn new(big_k: f64, n: usize, epsilon: f64, delta1: f64) -> Result<Self> {
        let p = KickedEnvParams { big_k, n, epsilon, delta1, delta2: std::f64::consts::SQRT_2 * delta1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 2 {
            return Err(Error::param(format!("rotator dimension must be a power of two, got {}", self.n)));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn kick(&self) -> f64 {
        self.big_k / self.period()
    }
}

/// One-qubit rotation `exp(-iδσ_x)`.
pub fn x_rotation(delta: f64) -> [[C64; 2]; 2] {
    let (c, s) = (delta.cos(), delta.sin());
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

/// `R = exp(-iδ₂σ_x⁽²⁾) exp(-iδ₁σ_x⁽¹⁾)` in the `c = q1 + 2q2` basis.
pub fn qubit_rotation_matrix(delta1: f64, delta2: f64) -> CMatrix {
    let r1 = x_rotation(delta1);
    let r2 = x_rotation(delta2);
    CMatrix::from_fn(4, 4, |c, d| r1[c & 1][d & 1] * r2[c >> 1][d >> 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct KickedEnvState {
    pub components: [Vec<C64>; 4],
}

impl KickedEnvState {
    /// `(|00⟩ + |11⟩)/√2 ⊗ |ψ_0⟩`.
    pub fn bell_times(rotator: &[C64]) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let scaled: Vec<C64> = rotator.iter().map(|a| a * h).collect();
        let zero = vec![ZERO; rotator.len()];
        KickedEnvState { components: [scaled.clone(), zero.clone(), zero, scaled] }
    }

    /// Bell pair with a random rotator state of normalized complex Gaussians.
    pub fn random(n: usize, stream: SeededStream) -> Self {
        let mut rng = stream.rng();
        let mut v: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        Self::bell_times(&v)
    }

    pub fn to_state_vector(&self) -> StateVector {
        let n = self.components[0].len();
        let mut amps = vec![ZERO; 4 * n];
        for (c, comp) in self.components.iter().enumerate() {
            for (j, a) in comp.iter().enumerate() {
                amps[c + 4 * j] = *a;
            }
        }
        StateVector::from_parts_unchecked(amps, vec![2, 2, n])
    }

    pub fn from_state_vector(psi: &StateVector) -> Result<Self> {
        let dims = psi.dims();
        if dims.len() != 3 || dims[0] != 2 || dims[1] != 2 {
            return Err(Error::dim("kicked environment state needs dims [2, 2, N]"));
        }
        let n = dims[2];
        let a = psi.amplitudes();
        let components = [0, 1, 2, 3].map(|c| (0..n).map(|j| a[c + 4 * j]).collect());
        Ok(KickedEnvState { components })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    /// Two-qubit reduced density matrix `ρ₁₂[c, c'] = Σ_j ψ_c[j] ψ_{c'}[j]*`.
    pub fn reduced_qubits(&self) -> DensityMatrix {
        let m = CMatrix::from_fn(4, 4, |c, d| {
            self.components[c].iter().zip(&self.components[d]).map(|(a, b)| a * b.conj()).sum()
        });
        DensityMatrix::from_matrix_unchecked(m, vec![2, 2])
    }
}

/// Precomputed propagator pieces for [`KickedEnvParams`].
#[derive(Clone)]
pub struct KickedEnv {
    params: KickedEnvParams,
    rotation: CMatrix,
    free_phase: Vec<C64>,
    kick_phase: [Vec<C64>; 4],
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl KickedEnv {
    pub fn new(params: KickedEnvParams) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let t = params.period();
        let k = params.kick();
        let free_phase = (0..n)
            .map(|m| {
                let p = momentum_of_bin(m, n) as f64;
                C64::from_polar(1.0 / n as f64, -0.5 * t * p * p)
            })
            .collect();
        let kick_phase = [0, 1, 2, 3].map(|c| {
            let strength = k + params.epsilon * KICK_SHIFT[c];
            (0..n)
                .map(|j| C64::from_polar(1.0, -strength * (2.0 * PI * j as f64 / n as f64).cos()))
                .collect()
        });
        let mut planner = FftPlanner::new();
        Ok(KickedEnv {
            params,
            rotation: qubit_rotation_matrix(params.delta1, params.delta2),
            free_phase,
            kick_phase,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn params(&self) -> &KickedEnvParams {
        &self.params
    }

    /// Qubit rotations, free rotor evolution, then the qubit-dependent kick.
    pub fn step(&self, state: &mut KickedEnvState) {
        let n = self.params.n;
        let old = state.components.clone();
        for c in 0..4 {
            let out = &mut state.components[c];
            for j in 0..n {
                out[j] = (0..4).map(|d| self.rotation[(c, d)] * old[d][j]).sum();
            }
        }
        for (c, comp) in state.components.iter_mut().enumerate() {
            self.fwd.process(comp);
            for (a, f) in comp.iter_mut().zip(&self.free_phase) {
                *a *= f;
            }
            self.inv.process(comp);
            for (a, k) in comp.iter_mut().zip(&self.kick_phase[c]) {
                *a *= k;
            }
        }
    }
}

/// One step of the full model on a `[2, 2, N]` state vector.
pub fn kicked_env_step(psi: &StateVector, params: &KickedEnvParams) -> Result<StateVector> {
    let mut state = KickedEnvState::from_state_vector(psi)?;
    if state.components[0].len() != params.n {
        return Err(Error::dim("rotator dimension does not match the parameters"));
    }
    KickedEnv::new(*params)?.step(&mut state);
    Ok(state.to_state_vector())
}

/// Bessel function `J₀(x)`: power series for small `|x|`, Miller's backward
/// recurrence otherwise.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 4.0 {
        let q = -(x * x) / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= q / (k * k) as f64;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    // J_{k-1} = (2k/x) J_k - J_{k+1}, normalized with J_0 + 2 Σ J_{2k} = 1.
    let start = 2 * ((x as usize + 30 + (40.0 * x).sqrt() as usize) / 2);
    let (mut jp, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    let mut j0 = 0.0;
    for k in (1..=start).rev() {
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        if j.abs() > 1e250 {
            jp *= 1e-250;
            j *= 1e-250;
            norm *= 1e-250;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if k - 1 == 0 {
            j0 = j;
        }
    }
    norm += j0;
    j0 / norm
}

/// `M_{cc'} = J₀(ε(s_c - s_{c'}))`, the θ-average of the kick phases.
pub fn phase_kick_multipliers(epsilon: f64) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for (c, row) in m.iter_mut().enumerate() {
        for (d, v) in row.iter_mut().enumerate() {
            *v = bessel_j0(epsilon * (KICK_SHIFT[c] - KICK_SHIFT[d]));
        }
    }
    m
}

/// Same multipliers from an `points`-node uniform quadrature over `θ`.
pub fn phase_kick_multipliers_quadrature(epsilon: f64, points: usize) -> [[C64; 4]; 4] {
    let mut m = [[ZERO; 4]; 4];
    for (c, row) in m.iter_mut().enumerate() {
        for (d, v) in row.iter_mut().enumerate() {
            let ds = KICK_SHIFT[c] - KICK_SHIFT[d];
            *v = (0..points)
                .map(|j| C64::from_polar(1.0, -epsilon * ds * (2.0 * PI * j as f64 / points as f64).cos()))
                .sum::<C64>()
                / points as f64;
        }
    }
    m
}

/// One application of the random-phase-kick channel:
/// `ρ' = M ∘ (R ρ R†)` with Hadamard (entrywise) product `∘`.
pub fn random_phase_kick_channel(rho12: &DensityMatrix, epsilon: f64, delta1: f64, delta2: f64) -> Result<DensityMatrix> {
    if rho12.dims() != [2, 2] {
        return Err(Error::dim("phase-kick channel acts on two qubits"));
    }
    let r = qubit_rotation_matrix(delta1, delta2);
    let m = phase_kick_multipliers(epsilon);
    let rotated = &r * rho12.matrix() * r.adjoint();
    let out = CMatrix::from_fn(4, 4, |c, d| rotated[(c, d)] * m[c][d]);
    Ok(DensityMatrix::from_matrix_unchecked(out, vec![2, 2]))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvTrajectories {
    /// `t = 0..=t_max`.
    pub entropy_full: Vec<f64>,
    pub eof_full: Vec<f64>,
    pub entropy_kick: Vec<f64>,
    pub eof_kick: Vec<f64>,
}

impl EnvTrajectories {
    /// RMS differences `(S, E)` between the full and phase-kick models.
    pub fn rms_deviation(&self) -> (f64, f64) {
        let rms = |a: &[f64], b: &[f64]| {
            (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
        };
        (rms(&self.entropy_full, &self.entropy_kick), rms(&self.eof_full, &self.eof_kick))
    }
}

/// `S₁₂(t)` and `E₁₂(t)` for the full model and the phase-kick channel,
/// both from a Bell pair and a random rotator state drawn from `stream`.
pub fn environment_experiment(params: &KickedEnvParams, t_max: usize, stream: SeededStream) -> Result<EnvTrajectories> {
    let env = KickedEnv::new(*params)?;
    let mut state = KickedEnvState::random(params.n, stream);
    let mut rho_kick = state.reduced_qubits();
    let mut out = EnvTrajectories {
        entropy_full: Vec::with_capacity(t_max + 1),
        eof_full: Vec::with_capacity(t_max + 1),
        entropy_kick: Vec::with_capacity(t_max + 1),
        eof_kick: Vec::with_capacity(t_max + 1),
    };
    for t in 0..=t_max {
        if t > 0 {
            env.step(&mut state);
            rho_kick = random_phase_kick_channel(&rho_kick, params.epsilon, params.delta1, params.delta2)?;
        }
        let rho_full = state.reduced_qubits();
        out.entropy_full.push(vn_entropy(&rho_full)?);
        out.eof_full.push(entanglement_of_formation(&rho_full)?);
        out.entropy_kick.push(vn_entropy(&rho_kick)?);
        out.eof_kick.push(entanglement_of_formation(&rho_kick)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnvDeviation {
    pub entropy_rms: f64,
    pub eof_rms: f64,
}

/// RMS deviation between the two models averaged over `seeds` random
/// rotator states (one substream each).
pub fn environment_deviation(params: &KickedEnvParams, t_max: usize, seeds: usize, stream: SeededStream) -> Result<EnvDeviation> {
    let runs = par_tasks(stream, seeds, |_, s| environment_experiment(params, t_max, s));
    let mut s_sum = 0.0;
    let mut e_sum = 0.0;
    for r in runs {
        let (ds, de) = r?.rms_deviation();
        s_sum += ds;
        e_sum += de;
    }
    Ok(EnvDeviation { entropy_rms: s_sum / seeds as f64, eof_rms: e_sum / seeds as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entan::concurrence;
    use crate::qstate::purity;

    #[test]
    fn bessel_values() {
        // Reference values of J0.
        let cases = [
            (0.0, 1.0),
            (0.032, 0.9997440163835339),
            (1.0, 0.765197686557966551),
            (2.404825557695773, 0.0),
            (5.0, -0.177596771314338304),
            (10.0, -0.245935764451348335),
            (30.0, -0.086367983581040225),
        ];
        for (x, v) in cases {
            assert!((bessel_j0(x) - v).abs() < 1e-11, "J0({x}) = {} vs {v}", bessel_j0(x));
        }
    }

    #[test]
    fn bessel_matches_quadrature() {
        for eps in [1e-3, 8e-3, 0.1, 0.7, 2.5] {
            let q = phase_kick_multipliers_quadrature(eps, 1000);
            let b = phase_kick_multipliers(eps);
            for c in 0..4 {
                for d in 0..4 {
                    assert!((q[c][d] - C64::new(b[c][d], 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn channel_identity_and_bell_coherence() {
        let bell = KickedEnvState::bell_times(&[C64::new(1.0, 0.0)]).reduced_qubits();
        let same = random_phase_kick_channel(&bell, 0.0, 0.0, 0.0).unwrap();
        assert!((same.matrix() - bell.matrix()).norm() < 1e-15);
        let eps = 8e-3;
        let out = random_phase_kick_channel(&bell, eps, 0.0, 0.0).unwrap();
        assert!((out.matrix()[(0, 3)].re - 0.5 * bessel_j0(4.0 * eps)).abs() < 1e-15);
        assert!((bessel_j0(4.0 * eps) - 0.999744).abs() < 1e-6);
        let mut rho = bell;
        for t in 1..=50 {
            rho = random_phase_kick_channel(&rho, eps, 0.0, 0.0).unwrap();
            let expected = bessel_j0(4.0 * eps).abs().powi(t);
            assert!((concurrence(&rho).unwrap() - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn channel_trace_preserving_and_positive() {
        let mut rng = SeededStream::new(4, 4).rng();
        for _ in 0..200 {
            let psi = crate::randgen::haar_state_on(vec![2, 2, 3], &mut rng).unwrap();
            let rho = crate::qstate::partial_trace(&psi.to_density(), &[0, 1]).unwrap();
            let out = random_phase_kick_channel(&rho, 0.3, 0.2, 0.5).unwrap();
            assert!((out.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(out.eigenvalues()[0] > -1e-12);
        }
    }

    #[test]
    fn decoupled_dynamics() {
        let p = KickedEnvParams { big_k: HEADLINE_K, n: 64, epsilon: 0.0, delta1: 0.0, delta2: 0.0 };
        let env = KickedEnv::new(p).unwrap();
        let mut s = KickedEnvState::random(64, SeededStream::new(1, 0));
        for _ in 0..20 {
            env.step(&mut s);
            let rho = s.reduced_qubits();
            assert!((purity(&rho) - 1.0).abs() < 1e-10);
            assert!((entanglement_of_formation(&rho).unwrap() - 1.0).abs() < 1e-8);
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coupled_run_decoheres() {
        let p = KickedEnvParams::new(HEADLINE_K, 256, 8e-3, 1e-2).unwrap();
        let tr = environment_experiment(&p, 100, SeededStream::new(2, 0)).unwrap();
        assert!(tr.entropy_full[0].abs() < 1e-10 && (tr.eof_full[0] - 1.0).abs() < 1e-10);
        assert!(tr.entropy_full[100] > 0.01);
        assert!(tr.eof_full[100] < 0.99);
    }

    #[test]
    fn state_vector_round_trip() {
        let s = KickedEnvState::random(8, SeededStream::new(3, 0));
        let v = s.to_state_vector();
        assert_eq!(v.dims(), &[2, 2, 8]);
        assert_eq!(KickedEnvState::from_state_vector(&v).unwrap(), s);
        let p = KickedEnvParams::new(10.0, 8, 0.1, 0.2).unwrap();
        let stepped = kicked_env_step(&v, &p).unwrap();
        assert!((stepped.norm_sqr() - 1.0).abs() < 1e-12);
        // Reduced state from the generic partial trace agrees.
        let direct = crate::qstate::partial_trace(&v.to_density(), &[0, 1]).unwrap();
        assert!((direct.matrix() - s.reduced_qubits().matrix()).norm() < 1e-12);
    }
}
