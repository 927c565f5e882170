//! Pseudo-random two-qubit circuits and the Markov chain that governs the
//! average decay of reduced purity under them.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::qstate::gates::{apply_two_qubit, Gate2};
use crate::qstate::{purity, reduced_density, Bipartition, DensityMatrix, Side, StateVector};
use crate::randgen::{haar_unitary, lubkin_mean, par_samples, SeededStream};
use crate::stats::{linear_fit, Estimate, LinearFit};

/// Largest register for Pauli expansions (4^n coefficients).
pub const MAX_PAULI_QUBITS: usize = 8;
/// Largest register for the full `4^n` chain.
pub const MAX_FULL_CHAIN_QUBITS: usize = 6;
pub const MAX_REDUCED_CHAIN_QUBITS: usize = 20;
pub const MAX_CIRCUIT_QUBITS: usize = 12;
/// Dense eigensolver limit for the gap; larger chains use power iteration.
const DENSE_GAP_LIMIT: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitKind {
    /// `CNOT^{(i,j)} V^{(i)} V^{(j)}` with Haar one-qubit `V`.
    Cnot,
    /// Haar `U(4)` on the pair.
    U4,
}

/// A drawn gate: 4×4 unitary on the ordered pair `(i, j)`, local index `2a + b`
/// with `a` on qubit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomGate {
    pub i: usize,
    pub j: usize,
    pub matrix: Gate2,
}

impl RandomGate {
    pub fn apply(&self, amps: &mut [C64]) {
        apply_two_qubit(amps, self.i, self.j, &self.matrix);
    }
}

fn to_gate2(m: &CMatrix) -> Gate2 {
    let mut g = [[ZERO; 4]; 4];
    for (r, row) in g.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = m[(r, c)];
        }
    }
    g
}

fn cnot_matrix() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

/// Draws one gate on a uniformly random ordered pair `i ≠ j`.
pub fn draw_gate<R: Rng + ?Sized>(n_q: usize, kind: CircuitKind, rng: &mut R) -> RandomGate {
    let i = rng.random_range(0..n_q);
    let mut j = rng.random_range(0..n_q - 1);
    if j >= i {
        j += 1;
    }
    let m = match kind {
        CircuitKind::U4 => haar_unitary(4, rng),
        CircuitKind::Cnot => {
            let vi = haar_unitary(2, rng);
            let vj = haar_unitary(2, rng);
            // Local index 2a + b puts qubit i in the high slot.
            cnot_matrix() * vi.kronecker(&vj)
        }
    };
    RandomGate { i, j, matrix: to_gate2(&m) }
}

fn check_register(psi: &StateVector) -> Result<usize> {
    match psi.qubit_count() {
        Some(n) if n >= 2 => Ok(n),
        _ => Err(Error::dim("random circuits need a register of at least two qubits")),
    }
}

/// One step `W_k` of the random circuit.
pub fn circuit_step<R: Rng + ?Sized>(psi: &StateVector, kind: CircuitKind, rng: &mut R) -> Result<StateVector> {
    let n_q = check_register(psi)?;
    let mut out = psi.clone();
    draw_gate(n_q, kind, rng).apply(out.amplitudes_mut());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitModel {
    pub kind: CircuitKind,
    pub n_q: usize,
    pub stream: SeededStream,
}

impl CircuitModel {
    pub fn new(kind: CircuitKind, n_q: usize, stream: SeededStream) -> Result<Self> {
        if n_q < 2 {
            return Err(Error::param("random circuits need n_q >= 2"));
        }
        Ok(CircuitModel { kind, n_q, stream })
    }

    /// The first `t` gates of this model's sequence.
    pub fn gate_sequence(&self, t: usize) -> Vec<RandomGate> {
        let mut rng = self.stream.rng();
        (0..t).map(|_| draw_gate(self.n_q, self.kind, &mut rng)).collect()
    }

    pub fn run(&self, initial: &StateVector, t: usize) -> Result<StateVector> {
        if check_register(initial)? != self.n_q {
            return Err(Error::dim("initial state does not match the circuit register"));
        }
        let mut out = initial.clone();
        for g in self.gate_sequence(t) {
            g.apply(out.amplitudes_mut());
        }
        Ok(out)
    }
}

fn pauli_digit(alpha: usize, k: usize) -> usize {
    (alpha >> (2 * k)) & 3
}

/// `σ_d[out][in]` for `d ∈ {I, X, Y, Z}`.
fn pauli_entry(d: usize, out: usize, inp: usize) -> C64 {
    match (d, out, inp) {
        (0, 0, 0) | (0, 1, 1) | (1, 0, 1) | (1, 1, 0) | (3, 0, 0) => ONE,
        (3, 1, 1) => -ONE,
        (2, 0, 1) => C64::new(0.0, -1.0),
        (2, 1, 0) => C64::new(0.0, 1.0),
        _ => ZERO,
    }
}

fn x_mask(alpha: usize, n_q: usize) -> usize {
    (0..n_q).filter(|&k| matches!(pauli_digit(alpha, k), 1 | 2)).map(|k| 1 << k).sum()
}

/// `⟨i ⊕ x| σ_α |i⟩`, the only nonzero entry in column `i`.
fn pauli_column_entry(alpha: usize, n_q: usize, i: usize, x: usize) -> C64 {
    let j = i ^ x;
    (0..n_q).fold(ONE, |acc, k| acc * pauli_entry(pauli_digit(alpha, k), (j >> k) & 1, (i >> k) & 1))
}

fn qubit_register(dims: &[usize]) -> Result<usize> {
    if dims.iter().all(|&d| d == 2) && !dims.is_empty() {
        Ok(dims.len())
    } else {
        Err(Error::dim("Pauli expansion needs a qubit register"))
    }
}

/// Coefficients `c_α = Tr(σ_α ρ)/N` with `α = Σ_k α_k 4^k` and `σ_{α_k}`
/// acting on qubit `k`.
pub fn pauli_coefficients(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let n_q = qubit_register(rho.dims())?;
    if n_q > MAX_PAULI_QUBITS {
        return Err(Error::ResourceGuard(format!("Pauli expansion limited to {MAX_PAULI_QUBITS} qubits")));
    }
    let n = rho.dim();
    let m = rho.matrix();
    let out = (0..1usize << (2 * n_q))
        .map(|alpha| {
            let x = x_mask(alpha, n_q);
            // Tr(σ ρ) = Σ_i σ[i⊕x, i] ρ[i, i⊕x]
            let tr: C64 = (0..n).map(|i| pauli_column_entry(alpha, n_q, i, x) * m[(i, i ^ x)]).sum();
            tr.re / n as f64
        })
        .collect();
    Ok(out)
}

/// `Σ_α c_α σ_α`.
pub fn reconstruct_from_pauli(c: &[f64], n_q: usize) -> CMatrix {
    let n = 1usize << n_q;
    let mut m = CMatrix::zeros(n, n);
    for (alpha, &ca) in c.iter().enumerate() {
        if ca == 0.0 {
            continue;
        }
        let x = x_mask(alpha, n_q);
        for i in 0..n {
            m[(i ^ x, i)] += pauli_column_entry(alpha, n_q, i, x) * ca;
        }
    }
    m
}

fn support(alpha: usize, n_q: usize) -> usize {
    (0..n_q).filter(|&k| pauli_digit(alpha, k) != 0).map(|k| 1 << k).sum()
}

fn side_mask(cut: &Bipartition) -> Result<usize> {
    qubit_register(cut.dims())?;
    Ok(cut.side_a().iter().map(|&q| 1usize << q).sum())
}

/// `P(ρ_A) = N_A N_B² Σ_{supp α ⊆ A} c_α²`.
pub fn purity_from_pauli(c: &[f64], cut: &Bipartition) -> Result<f64> {
    let n_q = cut.dims().len();
    if c.len() != 1 << (2 * n_q) {
        return Err(Error::dim("coefficient count does not match the cut"));
    }
    let a = side_mask(cut)?;
    let sum: f64 = c.iter().enumerate().filter(|(alpha, _)| support(*alpha, n_q) & !a == 0).map(|(_, v)| v * v).sum();
    let (na, nb) = (cut.dim_a() as f64, cut.dim_b() as f64);
    Ok(na * nb * nb * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// One state per Pauli string, `4^{n_q}` states.
    Full,
    /// Strings lumped by support pattern, `2^{n_q}` states.
    Reduced,
}

/// Markov chain on squared Pauli coefficients for the averaged `U(4)`
/// circuit. Column-stochastic; applied matrix-free.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovPurityModel {
    pub n_q: usize,
    pub representation: Representation,
}

pub fn markov_matrix(n_q: usize, representation: Representation) -> Result<MarkovPurityModel> {
    if n_q < 2 {
        return Err(Error::param("the purity chain needs n_q >= 2"));
    }
    let limit = match representation {
        Representation::Full => MAX_FULL_CHAIN_QUBITS,
        Representation::Reduced => MAX_REDUCED_CHAIN_QUBITS,
    };
    if n_q > limit {
        return Err(Error::ResourceGuard(format!("{representation:?} chain limited to {limit} qubits")));
    }
    Ok(MarkovPurityModel { n_q, representation })
}

impl MarkovPurityModel {
    pub fn dim(&self) -> usize {
        match self.representation {
            Representation::Full => 1 << (2 * self.n_q),
            Representation::Reduced => 1 << self.n_q,
        }
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n_q).flat_map(|i| (i + 1..self.n_q).map(move |j| (i, j))).collect()
    }

    /// Number of Pauli strings lumped into each state.
    pub fn multiplicities(&self) -> Vec<f64> {
        match self.representation {
            Representation::Full => vec![1.0; self.dim()],
            Representation::Reduced => (0..self.dim()).map(|s| 3f64.powi(s.count_ones() as i32)).collect(),
        }
    }

    /// `M v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let pairs = self.pairs();
        let w = 1.0 / pairs.len() as f64;
        let mut out = vec![0.0; v.len()];
        match self.representation {
            Representation::Full => {
                for &(i, j) in &pairs {
                    let pair_mask = (3 << (2 * i)) | (3 << (2 * j));
                    for (alpha, &va) in v.iter().enumerate() {
                        if alpha & pair_mask != 0 {
                            continue;
                        }
                        out[alpha] += w * va;
                        let labels = (1..16).map(|l| alpha | ((l & 3) << (2 * i)) | ((l >> 2) << (2 * j)));
                        let mass: f64 = labels.clone().map(|b| v[b]).sum::<f64>() * w / 15.0;
                        for b in labels {
                            out[b] += mass;
                        }
                    }
                }
            }
            Representation::Reduced => {
                for &(i, j) in &pairs {
                    let (bi, bj) = (1usize << i, 1usize << j);
                    for (s, &vs) in v.iter().enumerate() {
                        if s & (bi | bj) == 0 {
                            out[s] += w * vs;
                        } else {
                            let rest = s & !(bi | bj);
                            out[rest | bi] += w * vs * 3.0 / 15.0;
                            out[rest | bj] += w * vs * 3.0 / 15.0;
                            out[rest | bi | bj] += w * vs * 9.0 / 15.0;
                        }
                    }
                }
            }
        }
        out
    }

    /// Dense transition matrix, `M[to, from]`.
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if d > 1 << 12 {
            return Err(Error::ResourceGuard("dense Markov matrix limited to 4096 states".into()));
        }
        let mut m = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        for c in 0..d {
            e[c] = 1.0;
            for (r, x) in self.apply(&e).into_iter().enumerate() {
                m[(r, c)] = x;
            }
            e[c] = 0.0;
        }
        Ok(m)
    }

    /// Squared coefficients of `|0…0⟩`: `1/N²` on each `{I, Z}` string.
    pub fn initial_product(&self) -> Vec<f64> {
        let n2 = (1u64 << (2 * self.n_q)) as f64;
        match self.representation {
            Representation::Reduced => vec![1.0 / n2; self.dim()],
            Representation::Full => (0..self.dim())
                .map(|alpha| if x_mask(alpha, self.n_q) == 0 { 1.0 / n2 } else { 0.0 })
                .collect(),
        }
    }

    /// Squared coefficients of an arbitrary qubit density matrix.
    pub fn state_of(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        let c = pauli_coefficients(rho)?;
        if c.len() != 1 << (2 * self.n_q) {
            return Err(Error::dim("state does not match the chain register"));
        }
        Ok(match self.representation {
            Representation::Full => c.iter().map(|x| x * x).collect(),
            Representation::Reduced => {
                let mut y = vec![0.0; self.dim()];
                for (alpha, x) in c.iter().enumerate() {
                    y[support(alpha, self.n_q)] += x * x;
                }
                y
            }
        })
    }

    pub fn purity(&self, v: &[f64], cut: &Bipartition) -> Result<f64> {
        if cut.dims().len() != self.n_q {
            return Err(Error::dim("cut does not match the chain register"));
        }
        let a = side_mask(cut)?;
        let sum: f64 = v
            .iter()
            .enumerate()
            .filter(|(s, _)| {
                let supp = match self.representation {
                    Representation::Full => support(*s, self.n_q),
                    Representation::Reduced => *s,
                };
                supp & !a == 0
            })
            .map(|(_, x)| x)
            .sum();
        let (na, nb) = (cut.dim_a() as f64, cut.dim_b() as f64);
        Ok(na * nb * nb * sum)
    }

    /// `P(ρ_{A,t})` for `t = 0..=t_max` from the product initial state.
    pub fn trajectory(&self, cut: &Bipartition, t_max: usize) -> Result<Vec<f64>> {
        let mut v = self.initial_product();
        let mut out = Vec::with_capacity(t_max + 1);
        out.push(self.purity(&v, cut)?);
        for _ in 0..t_max {
            v = self.apply(&v);
            out.push(self.purity(&v, cut)?);
        }
        Ok(out)
    }

    /// `x₀ v₀ + x₁ v₁` with `x₀ = 1/N²` fixed by `Tr ρ = 1` and
    /// `x₀ + x₁ = 1/N` fixed by purity one.
    pub fn fixed_point(&self) -> Vec<f64> {
        let n = (1u64 << self.n_q) as f64;
        let x0 = 1.0 / (n * n);
        let x1 = (n - 1.0) / (n * n);
        let mult = self.multiplicities();
        let total: f64 = mult.iter().skip(1).sum();
        let mut v: Vec<f64> = mult.iter().map(|m| x1 * m / total).collect();
        v[0] = x0;
        v
    }

    /// `D^{-1/2} M D^{1/2}`, symmetric since `M` obeys detailed balance
    /// with respect to the multiplicities.
    fn symmetric_apply(&self, u: &[f64], sqrt_mult: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = u.iter().zip(sqrt_mult).map(|(x, s)| x * s).collect();
        self.apply(&scaled).iter().zip(sqrt_mult).map(|(x, s)| x / s).collect()
    }
}

/// Purity of side A at the chain's fixed point.
pub fn markov_fixed_point(model: &MarkovPurityModel, cut: &Bipartition) -> Result<f64> {
    model.purity(&model.fixed_point(), cut)
}

/// Spectral gap `Δ = 1 - λ₂`, where `λ₂` is the largest eigenvalue on the
/// complement of the two unit eigenvectors.
pub fn markov_gap(model: &MarkovPurityModel) -> Result<f64> {
    if model.dim() <= DENSE_GAP_LIMIT {
        markov_gap_dense(model)
    } else {
        Ok(markov_gap_power(model))
    }
}

fn markov_gap_dense(model: &MarkovPurityModel) -> Result<f64> {
    let m = model.matrix()?;
    let s: Vec<f64> = model.multiplicities().iter().map(|x| x.sqrt()).collect();
    let d = m.nrows();
    let sym = DMatrix::from_fn(d, d, |r, c| m[(r, c)] * s[c] / s[r]);
    let vals = linalg::symmetric_eigenvalues_desc(&sym);
    Ok((1.0 - vals[2]).clamp(0.0, 1.0))
}

/// Power iteration on `(A + 1)/2` with the two unit eigenvectors projected out.
fn markov_gap_power(model: &MarkovPurityModel) -> f64 {
    let d = model.dim();
    let s: Vec<f64> = model.multiplicities().iter().map(|x| x.sqrt()).collect();
    let norm1: f64 = s.iter().skip(1).map(|x| x * x).sum::<f64>().sqrt();
    let u1: Vec<f64> = (0..d).map(|i| if i == 0 { 0.0 } else { s[i] / norm1 }).collect();
    let deflate = |v: &mut Vec<f64>| {
        v[0] = 0.0;
        let p: f64 = v.iter().zip(&u1).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&u1).for_each(|(a, b)| *a -= p * b);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= n);
    };
    let mut v: Vec<f64> = (0..d).map(|i| ((i as f64) * 0.7548776662466927).fract() - 0.5).collect();
    deflate(&mut v);
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let av = model.symmetric_apply(&v, &s);
        let mut w: Vec<f64> = av.iter().zip(&v).map(|(a, x)| 0.5 * (a + x)).collect();
        let rq: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        deflate(&mut w);
        v = w;
        if (rq - lambda).abs() < 1e-14 {
            lambda = rq;
            break;
        }
        lambda = rq;
    }
    (1.0 - (2.0 * lambda - 1.0)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct PurityDecay {
    pub kind: CircuitKind,
    pub n_q: usize,
    /// Monte Carlo mean of `P(ρ_{A,t})` for `t = 0..=t_max`.
    pub mean: Vec<Estimate>,
    /// Chain prediction (U(4) model only).
    pub chain: Option<Vec<f64>>,
    pub lubkin: f64,
}

impl PurityDecay {
    /// Log-linear fit of `|⟨P_t⟩ - P_L|` over `t_range` (inclusive).
    pub fn decay_fit(&self, t_from: usize, t_to: usize) -> LinearFit {
        let ts: Vec<f64> = (t_from..=t_to).map(|t| t as f64).collect();
        let ys: Vec<f64> = (t_from..=t_to).map(|t| (self.mean[t].mean - self.lubkin).abs().ln()).collect();
        linear_fit(&ts, &ys)
    }
}

/// Reduced purity along random circuits started from `|0…0⟩`, averaged over
/// `samples` independent trajectories.
pub fn purity_decay_experiment(
    kind: CircuitKind,
    cut: &Bipartition,
    t_max: usize,
    samples: usize,
    stream: SeededStream,
) -> Result<PurityDecay> {
    let n_q = qubit_register(cut.dims())?;
    if n_q < 2 {
        return Err(Error::param("random circuits need n_q >= 2"));
    }
    if n_q > MAX_CIRCUIT_QUBITS {
        return Err(Error::ResourceGuard(format!("circuit simulation limited to {MAX_CIRCUIT_QUBITS} qubits")));
    }
    if samples < 2 {
        return Err(Error::param("need at least two trajectories"));
    }
    let paths: Vec<Vec<f64>> = par_samples(stream, samples, |rng| {
        let mut psi = StateVector::zero_qubits(n_q);
        let mut out = Vec::with_capacity(t_max + 1);
        for t in 0..=t_max {
            if t > 0 {
                draw_gate(n_q, kind, rng).apply(psi.amplitudes_mut());
            }
            out.push(purity(&reduced_density(&psi, cut, Side::A).expect("checked cut")));
        }
        out
    });
    let mean = (0..=t_max)
        .map(|t| Estimate::from_samples(&paths.iter().map(|p| p[t]).collect::<Vec<_>>()))
        .collect();
    let chain = match kind {
        CircuitKind::U4 => Some(markov_matrix(n_q, Representation::Reduced)?.trajectory(cut, t_max)?),
        CircuitKind::Cnot => None,
    };
    Ok(PurityDecay { kind, n_q, mean, chain, lubkin: lubkin_mean(cut.dim_a(), cut.dim_b()) })
}
