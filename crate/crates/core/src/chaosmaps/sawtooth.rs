//! Quantum sawtooth map on the torus, `U = e^{-iT n̂²/2} e^{ik(θ̂-π)²/2}`,
//! evolved either with FFTs or with an explicit one- and two-qubit circuit.
//!
//! States live in the θ representation: amplitude `j` belongs to
//! `θ_j = 2πj/N`, and register qubit `q` carries the bit of `j` of weight
//! `2^q`. FFT bin `m` is momentum `n = m` for `m < N/2` and `m - N`
//! otherwise.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::qstate::gates::{self, Gate1};
use crate::qstate::{DensityMatrix, StateVector};
use crate::randgen::{par_tasks, SeededStream};

/// Largest register for which dense noise-averaged density matrices are built.
pub const MAX_DENSE_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SawtoothParams {
    /// Classical chaos parameter `K = kT`.
    pub big_k: f64,
    pub n_q: usize,
}

impl SawtoothParams {
    pub fn new(big_k: f64, n_q: usize) -> Result<Self> {
        if big_k == 0.0 || !big_k.is_finite() {
            return Err(Error::param("K must be finite and nonzero"));
        }
        if n_q == 0 || n_q > 24 {
            return Err(Error::param(format!("n_q must be in 1..=24, got {n_q}")));
        }
        Ok(SawtoothParams { big_k, n_q })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_q
    }

    /// `T = 2π/N`, which is also the effective Planck constant.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.dim() as f64
    }

    /// Kick strength `k = K/T`.
    pub fn kick(&self) -> f64 {
        self.big_k / self.period()
    }

    /// Gates per map step of the circuit implementation, `3n² + n`.
    pub fn gate_count(&self) -> usize {
        3 * self.n_q * self.n_q + self.n_q
    }
}

/// Signed momentum of FFT bin `m`.
pub fn momentum_of_bin(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Momentum eigenstate `|n⟩` in the θ representation, `e^{inθ_j}/√N`.
pub fn momentum_eigenstate(n_q: usize, n: i64) -> StateVector {
    let dim = 1usize << n_q;
    let norm = 1.0 / (dim as f64).sqrt();
    let amps = (0..dim)
        .map(|j| C64::from_polar(norm, 2.0 * PI * (n as f64) * j as f64 / dim as f64))
        .collect();
    StateVector::from_parts_unchecked(amps, vec![2; n_q])
}

/// Split-operator evolution with precomputed phases and FFT plans.
#[derive(Clone)]
pub struct SawtoothMap {
    n: usize,
    kick_phase: Vec<C64>,
    /// Free phases with the `1/N` of the FFT round trip folded in.
    free_phase: Vec<C64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SawtoothMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SawtoothMap").field("n", &self.n).finish()
    }
}

impl SawtoothMap {
    pub fn new(params: &SawtoothParams) -> Result<Self> {
        Ok(Self::from_raw(params.dim(), params.kick(), params.period()))
    }

    /// Map with arbitrary kick `k` and period `T` on `n` grid points.
    pub fn from_raw(n: usize, k: f64, t: f64) -> Self {
        let kick_phase = (0..n)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / n as f64 - PI;
                C64::from_polar(1.0, 0.5 * k * x * x)
            })
            .collect();
        let free_phase = (0..n)
            .map(|m| {
                let p = momentum_of_bin(m, n) as f64;
                C64::from_polar(1.0 / n as f64, -0.5 * t * p * p)
            })
            .collect();
        let mut planner = FftPlanner::new();
        SawtoothMap {
            n,
            kick_phase,
            free_phase,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// One map step in place.
    pub fn step_fft(&self, amps: &mut [C64]) {
        debug_assert_eq!(amps.len(), self.n);
        for (a, k) in amps.iter_mut().zip(&self.kick_phase) {
            *a *= k;
        }
        self.fwd.process(amps);
        for (a, f) in amps.iter_mut().zip(&self.free_phase) {
            *a *= f;
        }
        self.inv.process(amps);
    }
}

/// One FFT map step on a state of dims `[N]` or `[2; n_q]`.
pub fn quantum_sawtooth_step_fft(psi: &StateVector, params: &SawtoothParams) -> Result<StateVector> {
    if psi.dim() != params.dim() {
        return Err(Error::dim("state dimension does not match the map"));
    }
    let map = SawtoothMap::new(params)?;
    let mut amps = psi.amplitudes().to_vec();
    map.step_fft(&mut amps);
    Ok(StateVector::from_parts_unchecked(amps, psi.dims().to_vec()))
}

/// Elementary gates of the circuit; phases are the diagonal in the local basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Hadamard(usize),
    Phase1 { q: usize, phases: [f64; 2] },
    /// Local index `2a + b` with `a` on `q1`, `b` on `q2`.
    Phase2 { q1: usize, q2: usize, phases: [f64; 4] },
}

/// Per-gate noise model: tilted Hadamard axes and extra diagonal phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub epsilon: f64,
    pub realizations: usize,
    pub stream: SeededStream,
}

/// The `3n² + n` gates of one map step.
#[derive(Debug, Clone)]
pub struct SawtoothCircuit {
    n_q: usize,
    gates: Vec<Gate>,
}

impl SawtoothCircuit {
    pub fn new(params: &SawtoothParams) -> Self {
        let n = params.n_q;
        let dim = params.dim() as f64;
        let mut gates = Vec::with_capacity(params.gate_count());

        // Kick: πKN (Σ_l f_l)² with f_l(a) = a/2^l - 1/(2n); bit l sits on qubit n - l.
        let f = |l: usize, a: usize| a as f64 / (1u64 << l) as f64 - 0.5 / n as f64;
        let ck = PI * params.big_k * dim;
        push_quadratic_form(&mut gates, n, ck, f, |l| n - l);

        push_qft(&mut gates, n, 1.0);

        // Free evolution: -πN (Σ_l g_l)²; after the swap-free QFT qubit l - 1
        // holds the y bit of weight 2^{n-l}, and flipping the top bit centers
        // the momentum range.
        let g = |l: usize, a: usize| {
            let bit = if l == 1 { a ^ 1 } else { a };
            bit as f64 / (1u64 << l) as f64 - 0.5 / n as f64
        };
        push_quadratic_form(&mut gates, n, -PI * dim, g, |l| l - 1);

        push_qft(&mut gates, n, -1.0);
        debug_assert_eq!(gates.len(), params.gate_count());
        SawtoothCircuit { n_q: n, gates }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn step_ideal(&self, amps: &mut [C64]) {
        for gate in &self.gates {
            apply_gate(amps, gate);
        }
    }

    /// One step with fresh noise drawn for every gate.
    pub fn step_noisy<R: Rng + ?Sized>(&self, amps: &mut [C64], epsilon: f64, rng: &mut R) {
        if epsilon == 0.0 {
            return self.step_ideal(amps);
        }
        for gate in &self.gates {
            match *gate {
                Gate::Hadamard(q) => {
                    let u = noisy_hadamard(epsilon, rng);
                    gates::apply_one_qubit(amps, q, &u);
                }
                Gate::Phase1 { q, phases } => {
                    let d = noisy_phases(phases, epsilon, rng);
                    gates::apply_diagonal_one(amps, q, &d);
                }
                Gate::Phase2 { q1, q2, phases } => {
                    let d = noisy_controlled_phase(phases, epsilon, rng);
                    gates::apply_diagonal_two(amps, q1, q2, &d);
                }
            }
        }
    }
}

fn push_quadratic_form(
    gates: &mut Vec<Gate>,
    n: usize,
    coeff: f64,
    f: impl Fn(usize, usize) -> f64,
    qubit: impl Fn(usize) -> usize,
) {
    for l1 in 1..=n {
        for l2 in 1..=n {
            if l1 == l2 {
                let phases = [0, 1].map(|a| coeff * f(l1, a) * f(l1, a));
                gates.push(Gate::Phase1 { q: qubit(l1), phases });
            } else {
                let phases = [0, 1, 2, 3].map(|i| coeff * f(l1, i >> 1) * f(l2, i & 1));
                gates.push(Gate::Phase2 { q1: qubit(l1), q2: qubit(l2), phases });
            }
        }
    }
}

/// Swap-free QFT `|x⟩ → Σ_y e^{2πi xy/N}|y⟩/√N` (`sign = 1`) leaving qubit
/// `q` with the output bit of weight `2^{n-1-q}`, or its inverse (`sign = -1`).
fn push_qft(gates: &mut Vec<Gate>, n: usize, sign: f64) {
    let mut forward = Vec::with_capacity(n * (n + 1) / 2);
    for q in (0..n).rev() {
        forward.push(Gate::Hadamard(q));
        for c in (0..q).rev() {
            let phi = PI / (1u64 << (q - c)) as f64;
            forward.push(Gate::Phase2 { q1: q, q2: c, phases: [0.0, 0.0, 0.0, phi] });
        }
    }
    if sign > 0.0 {
        gates.extend(forward);
    } else {
        gates.extend(forward.into_iter().rev().map(|g| match g {
            Gate::Phase2 { q1, q2, phases } => Gate::Phase2 { q1, q2, phases: phases.map(|p| -p) },
            other => other,
        }));
    }
}

pub fn apply_gate(amps: &mut [C64], gate: &Gate) {
    match *gate {
        Gate::Hadamard(q) => gates::apply_one_qubit(amps, q, &gates::hadamard()),
        Gate::Phase1 { q, phases } => {
            gates::apply_diagonal_one(amps, q, &phases.map(|p| C64::from_polar(1.0, p)))
        }
        Gate::Phase2 { q1, q2, phases } => {
            gates::apply_diagonal_two(amps, q1, q2, &phases.map(|p| C64::from_polar(1.0, p)))
        }
    }
}

/// One exact circuit step; `noise = None` is the ideal circuit.
pub fn quantum_sawtooth_step_gates(
    psi: &StateVector,
    params: &SawtoothParams,
    noise: Option<(f64, &mut dyn rand::RngCore)>,
) -> Result<StateVector> {
    if psi.dim() != params.dim() {
        return Err(Error::dim("state dimension does not match the map"));
    }
    let circuit = SawtoothCircuit::new(params);
    let mut amps = psi.amplitudes().to_vec();
    match noise {
        None => circuit.step_ideal(&mut amps),
        Some((eps, rng)) => circuit.step_noisy(&mut amps, eps, rng),
    }
    Ok(StateVector::from_parts_unchecked(amps, psi.dims().to_vec()))
}

fn pauli_combination(n: [f64; 3]) -> Gate1 {
    [
        [C64::new(n[2], 0.0), C64::new(n[0], -n[1])],
        [C64::new(n[0], n[1]), C64::new(-n[2], 0.0)],
    ]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|x| x / n)
}

/// Rotation `exp(-i angle/2 n'·σ)` about `axis` tilted by two independent
/// angles uniform in `[-ε, ε]` along orthogonal directions.
pub fn noisy_one_qubit_gate<R: Rng + ?Sized>(axis: [f64; 3], angle: f64, epsilon: f64, rng: &mut R) -> Gate1 {
    let nvec = tilted_axis(axis, epsilon, rng);
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let p = pauli_combination(nvec);
    let i = C64::new(0.0, 1.0);
    [
        [c - i * s * p[0][0], -i * s * p[0][1]],
        [-i * s * p[1][0], c - i * s * p[1][1]],
    ]
}

fn tilted_axis<R: Rng + ?Sized>(axis: [f64; 3], epsilon: f64, rng: &mut R) -> [f64; 3] {
    let n = normalize(axis);
    let (e1_raw, e1_ok) = {
        let v = cross([0.0, 0.0, 1.0], n);
        (v, v.iter().map(|x| x * x).sum::<f64>() > 1e-24)
    };
    let e1 = if e1_ok { normalize(e1_raw) } else { [1.0, 0.0, 0.0] };
    let e2 = cross(n, e1);
    let (t1, t2) = if epsilon > 0.0 {
        (rng.random_range(-epsilon..=epsilon), rng.random_range(-epsilon..=epsilon))
    } else {
        (0.0, 0.0)
    };
    let (c1, s1, c2, s2) = (t1.cos(), t1.sin(), t2.cos(), t2.sin());
    [0, 1, 2].map(|k| c1 * c2 * n[k] + s1 * c2 * e1[k] + s2 * e2[k])
}

/// Hadamard `(X + Z)/√2 = n·σ` with its axis tilted as in
/// [`noisy_one_qubit_gate`].
pub fn noisy_hadamard<R: Rng + ?Sized>(epsilon: f64, rng: &mut R) -> Gate1 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    pauli_combination(tilted_axis([h, 0.0, h], epsilon, rng))
}

/// Diagonal two-qubit gate with i.i.d. extra phases uniform in `[-ε, ε]`.
pub fn noisy_controlled_phase<R: Rng + ?Sized>(ideal: [f64; 4], epsilon: f64, rng: &mut R) -> [C64; 4] {
    ideal.map(|p| C64::from_polar(1.0, p + jitter(epsilon, rng)))
}

fn noisy_phases<R: Rng + ?Sized>(ideal: [f64; 2], epsilon: f64, rng: &mut R) -> [C64; 2] {
    ideal.map(|p| C64::from_polar(1.0, p + jitter(epsilon, rng)))
}

fn jitter<R: Rng + ?Sized>(epsilon: f64, rng: &mut R) -> f64 {
    if epsilon > 0.0 {
        rng.random_range(-epsilon..=epsilon)
    } else {
        0.0
    }
}

/// Ideal orbit `ψ_0, ψ_1, ..., ψ_{t_max}`.
pub fn ideal_orbit(params: &SawtoothParams, initial: &StateVector, t_max: usize) -> Result<Vec<Vec<C64>>> {
    if initial.dim() != params.dim() {
        return Err(Error::dim("initial state does not match the map"));
    }
    let map = SawtoothMap::new(params)?;
    let mut amps = initial.amplitudes().to_vec();
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(amps.clone());
    for _ in 0..t_max {
        map.step_fft(&mut amps);
        out.push(amps.clone());
    }
    Ok(out)
}

/// `F(t) = mean_r |⟨ψ_t|ψ_{ε,t}^{(r)}⟩|²` for `t = 0..=t_max`.
pub fn fidelity_decay(
    params: &SawtoothParams,
    noise: &NoiseConfig,
    initial: &StateVector,
    t_max: usize,
) -> Result<Vec<f64>> {
    let ideal = ideal_orbit(params, initial, t_max)?;
    let circuit = SawtoothCircuit::new(params);
    let per_run = par_tasks(noise.stream, noise.realizations, |_, s| {
        let mut rng = s.rng();
        let mut amps = initial.amplitudes().to_vec();
        let mut f = Vec::with_capacity(t_max + 1);
        f.push(1.0);
        for ideal_t in &ideal[1..] {
            circuit.step_noisy(&mut amps, noise.epsilon, &mut rng);
            let ov: C64 = ideal_t.iter().zip(&amps).map(|(a, b)| a.conj() * b).sum();
            f.push(ov.norm_sqr());
        }
        f
    });
    let r = per_run.len().max(1) as f64;
    Ok((0..=t_max).map(|t| per_run.iter().map(|f| f[t]).sum::<f64>() / r).collect())
}

/// Final states `ψ_{ε,t}` of every noise realization, in realization order.
pub fn noisy_final_states(
    params: &SawtoothParams,
    noise: &NoiseConfig,
    initial: &StateVector,
    t: usize,
) -> Result<Vec<StateVector>> {
    if initial.dim() != params.dim() {
        return Err(Error::dim("initial state does not match the map"));
    }
    let circuit = SawtoothCircuit::new(params);
    let dims = initial.dims().to_vec();
    Ok(par_tasks(noise.stream, noise.realizations, |_, s| {
        let mut rng = s.rng();
        let mut amps = initial.amplitudes().to_vec();
        for _ in 0..t {
            circuit.step_noisy(&mut amps, noise.epsilon, &mut rng);
        }
        StateVector::from_parts_unchecked(amps, dims.clone())
    }))
}

/// `ρ_{ε,t} = Σ_r |ψ_{ε,t}^{(r)}⟩⟨ψ_{ε,t}^{(r)}| / 𝒩`.
pub fn noise_averaged_state(
    params: &SawtoothParams,
    noise: &NoiseConfig,
    t: usize,
    initial: &StateVector,
) -> Result<DensityMatrix> {
    if params.n_q > MAX_DENSE_QUBITS {
        return Err(Error::ResourceGuard(format!(
            "dense density matrix for n_q = {} exceeds the n_q <= {MAX_DENSE_QUBITS} guard",
            params.n_q
        )));
    }
    if noise.realizations == 0 {
        return Err(Error::param("need at least one noise realization"));
    }
    DensityMatrix::equal_mixture(&noisy_final_states(params, noise, initial, t)?)
}

/// Momentum-space probabilities of a θ-representation state, indexed by FFT bin.
pub fn momentum_distribution(amps: &[C64]) -> Vec<f64> {
    let n = amps.len();
    let mut buf = amps.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|z| z.norm_sqr() / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randgen::haar_state_on;

    fn overlap(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
    }

    #[test]
    fn gate_counts() {
        for n_q in 1..=8 {
            let p = SawtoothParams::new(1.5, n_q).unwrap();
            assert_eq!(SawtoothCircuit::new(&p).gate_count(), 3 * n_q * n_q + n_q);
        }
        assert_eq!(SawtoothParams::new(1.5, 6).unwrap().gate_count(), 114);
    }

    #[test]
    fn momentum_bins() {
        assert_eq!(momentum_of_bin(0, 8), 0);
        assert_eq!(momentum_of_bin(3, 8), 3);
        assert_eq!(momentum_of_bin(4, 8), -4);
        assert_eq!(momentum_of_bin(7, 8), -1);
        // |n = -1⟩ lands in bin N - 1.
        let dist = momentum_distribution(momentum_eigenstate(3, -1).amplitudes());
        assert!((dist[7] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qft_maps_zero_to_uniform() {
        let n = 4;
        let mut gates_list = Vec::new();
        push_qft(&mut gates_list, n, 1.0);
        let mut amps = StateVector::zero_qubits(n).into_amplitudes();
        for g in &gates_list {
            apply_gate(&mut amps, g);
        }
        for a in &amps {
            assert!((a - C64::new(0.25, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn qft_bit_reversed_output() {
        // |x⟩ → Σ_y e^{2πixy/N}|rev(y)⟩/√N with no swaps.
        let n = 3;
        let dim = 8;
        let mut g = Vec::new();
        push_qft(&mut g, n, 1.0);
        let rev = |y: usize| (0..n).fold(0, |acc, b| acc | (((y >> b) & 1) << (n - 1 - b)));
        for x in 0..dim {
            let mut amps = StateVector::basis(vec![2; n], x).unwrap().into_amplitudes();
            for gate in &g {
                apply_gate(&mut amps, gate);
            }
            for y in 0..dim {
                let expected = C64::from_polar(1.0 / (dim as f64).sqrt(), 2.0 * PI * (x * y) as f64 / dim as f64);
                assert!((amps[rev(y)] - expected).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn gate_and_fft_agree() {
        for n_q in 2..=8 {
            let p = SawtoothParams::new(1.5, n_q).unwrap();
            let map = SawtoothMap::new(&p).unwrap();
            let circuit = SawtoothCircuit::new(&p);
            let psi = haar_state_on(vec![2; n_q], &mut SeededStream::new(n_q as u64, 0).rng()).unwrap();
            let mut a = psi.amplitudes().to_vec();
            let mut b = a.clone();
            for _ in 0..20 {
                map.step_fft(&mut a);
                circuit.step_ideal(&mut b);
            }
            assert!(1.0 - overlap(&a, &b) < 1e-10, "n_q = {n_q}");
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-9, "global phase must match too");
            }
        }
    }

    #[test]
    fn first_step_momentum_distribution_matches() {
        let p = SawtoothParams::new(1.5, 5).unwrap();
        let psi = momentum_eigenstate(5, 0);
        let a = quantum_sawtooth_step_fft(&psi, &p).unwrap();
        let b = quantum_sawtooth_step_gates(&psi, &p, None).unwrap();
        let (da, db) = (momentum_distribution(a.amplitudes()), momentum_distribution(b.amplitudes()));
        for (x, y) in da.iter().zip(&db) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn norm_preserved_and_identity_limit() {
        let p = SawtoothParams::new(1.5, 6).unwrap();
        let map = SawtoothMap::new(&p).unwrap();
        let mut a = momentum_eigenstate(6, 3).into_amplitudes();
        for _ in 0..1000 {
            map.step_fft(&mut a);
        }
        let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);

        let id = SawtoothMap::from_raw(16, 0.0, 0.0);
        let psi = haar_state_on(vec![16], &mut SeededStream::new(1, 0).rng()).unwrap();
        let mut b = psi.amplitudes().to_vec();
        id.step_fft(&mut b);
        for (x, y) in b.iter().zip(psi.amplitudes()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn noisy_gates_limits() {
        let mut rng = SeededStream::new(0, 0).rng();
        let h = noisy_hadamard(0.0, &mut rng);
        let ideal = gates::hadamard();
        for r in 0..2 {
            for c in 0..2 {
                assert!((h[r][c] - ideal[r][c]).norm() < 1e-15);
            }
        }
        // Hadamard as a π rotation equals n·σ up to the global phase -i.
        let rot = noisy_one_qubit_gate([1.0, 0.0, 1.0], PI, 0.0, &mut rng);
        assert!((rot[0][0] * C64::new(0.0, 1.0) - ideal[0][0]).norm() < 1e-15);
        for eps in [1e-3, 1e-2] {
            for _ in 0..200 {
                let u = noisy_hadamard(eps, &mut rng);
                // unitary
                let m00 = u[0][0].norm_sqr() + u[1][0].norm_sqr();
                let m01 = u[0][0].conj() * u[0][1] + u[1][0].conj() * u[1][1];
                assert!((m00 - 1.0).abs() < 1e-14 && m01.norm() < 1e-14);
                let dist = (0..2)
                    .flat_map(|r| (0..2).map(move |c| (r, c)))
                    .map(|(r, c)| (u[r][c] - ideal[r][c]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(dist <= 2.0 * eps, "{dist} > 2ε");
            }
            let d = noisy_controlled_phase([0.0, 0.0, 0.0, PI / 2.0], eps, &mut rng);
            let ideal = [0.0, 0.0, 0.0, PI / 2.0];
            for (z, p) in d.iter().zip(ideal) {
                assert!((z.norm() - 1.0).abs() < 1e-15);
                let dev = (z.arg() - p + PI).rem_euclid(2.0 * PI) - PI;
                assert!(dev.abs() <= eps + 1e-15);
            }
        }
    }

    #[test]
    fn noise_average_limits_and_guard() {
        let p = SawtoothParams::new(1.5, 4).unwrap();
        let psi = momentum_eigenstate(4, 0);
        let clean = NoiseConfig { epsilon: 0.0, realizations: 3, stream: SeededStream::new(1, 0) };
        let rho = noise_averaged_state(&p, &clean, 5, &psi).unwrap();
        assert!((crate::qstate::purity(&rho) - 1.0).abs() < 1e-12);
        let mut last = 1.0;
        for eps in [0.02, 0.05, 0.1] {
            let noise = NoiseConfig { epsilon: eps, realizations: 32, stream: SeededStream::new(1, 0) };
            let rho = noise_averaged_state(&p, &noise, 5, &psi).unwrap();
            let pur = crate::qstate::purity(&rho);
            assert!(pur < last);
            last = pur;
        }
        let big = SawtoothParams::new(1.5, 11).unwrap();
        let err = noise_averaged_state(&big, &clean, 1, &momentum_eigenstate(11, 0)).unwrap_err();
        assert!(matches!(err, Error::ResourceGuard(_)));
    }
}
