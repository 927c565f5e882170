//! Entanglement measures and detectors: concurrence, negativity, the Peres
//! test, decomposable witnesses and multipartite bipartition statistics.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::qstate::{
    self, entanglement_entropy, partial_trace, partial_transpose_matrix, schmidt, schmidt_coefficients,
    vn_entropy, Bipartition, DensityMatrix, StateRef, StateVector,
};
use crate::randgen::complex_gaussian;
use crate::stats::{self, binary_entropy, Histogram};

/// Negative partial-transpose eigenvalues above this are treated as zero.
pub const PERES_TOL: f64 = 1e-10;

fn check_two_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.dims() != [2, 2] {
        return Err(Error::dim(format!("expected a two-qubit state, got dims {:?}", rho.dims())));
    }
    Ok(())
}

/// Two-qubit concurrence from the spin-flipped matrix `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
pub fn concurrence(rho12: &DensityMatrix) -> Result<f64> {
    check_two_qubits(rho12)?;
    let rho = rho12.matrix();
    // σ_y ⊗ σ_y is the same in either qubit order.
    let yy = CMatrix::from_fn(4, 4, |i, j| match (i, j) {
        (0, 3) | (3, 0) => C64::new(-1.0, 0.0),
        (1, 2) | (2, 1) => C64::new(1.0, 0.0),
        _ => ZERO,
    });
    // λ_i are the singular values of Xᵀ(σ_y⊗σ_y)X for ρ = XX†; dropping
    // null eigenvectors keeps pure states exact instead of √(1e-16) noisy.
    let (vals, vecs) = linalg::hermitian_eigh(rho);
    let cols: Vec<usize> = (0..4).filter(|&j| vals[j] > 1e-14).collect();
    let x = CMatrix::from_fn(4, cols.len(), |i, k| vecs[(i, cols[k])] * vals[cols[k]].sqrt());
    let tau = x.transpose() * yy * &x;
    let mut lam: Vec<f64> = tau.singular_values().iter().copied().collect();
    lam.resize(4, 0.0);
    lam.sort_by(|a, b| b.total_cmp(a));
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).clamp(0.0, 1.0))
}

/// Entanglement of formation in bits, `h((1 + √(1 - C²))/2)`.
pub fn entanglement_of_formation(rho12: &DensityMatrix) -> Result<f64> {
    let c = concurrence(rho12)?.min(1.0);
    Ok(eof_from_concurrence(c))
}

pub fn eof_from_concurrence(c: f64) -> f64 {
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
}

/// Eigenvalues of the partial transpose, ascending.
pub fn partial_transpose_spectrum<'a>(state: impl Into<StateRef<'a>>, cut: &Bipartition) -> Result<Vec<f64>> {
    match state.into() {
        StateRef::Pure(psi) => pure_pt_spectrum(psi, cut),
        StateRef::Mixed(rho) => {
            cut.check_dims(rho.dims())?;
            Ok(linalg::hermitian_eigenvalues(&partial_transpose_matrix(rho.matrix(), cut)))
        }
    }
}

/// `log₂ ‖ρ^{T_B}‖₁`; pure states use `‖·‖₁ = (Σ_i √p_i)²`.
pub fn log_negativity<'a>(state: impl Into<StateRef<'a>>, cut: &Bipartition) -> Result<f64> {
    let norm = match state.into() {
        StateRef::Pure(psi) => schmidt_coefficients(psi, cut)?.iter().map(|p| p.max(0.0).sqrt()).sum::<f64>().powi(2),
        StateRef::Mixed(rho) => partial_transpose_spectrum(rho, cut)?.iter().map(|v| v.abs()).sum(),
    };
    Ok(norm.log2().max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistillableBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `max{S(ρ_A) - S(ρ), 0} ≤ E_D ≤ log₂ ‖ρ^{T_B}‖₁`.
pub fn distillable_bounds<'a>(state: impl Into<StateRef<'a>>, cut: &Bipartition) -> Result<DistillableBounds> {
    match state.into() {
        StateRef::Pure(psi) => {
            let e = entanglement_entropy(psi, cut)?;
            Ok(DistillableBounds { lower: e, upper: log_negativity(psi, cut)? })
        }
        StateRef::Mixed(rho) => {
            cut.check_dims(rho.dims())?;
            let s_a = vn_entropy(&partial_trace(rho, cut.side_a())?)?;
            let s = vn_entropy(rho)?;
            Ok(DistillableBounds { lower: (s_a - s).max(0.0), upper: log_negativity(rho, cut)? })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeresResult {
    pub detected: bool,
    pub lambda_min: f64,
}

pub fn peres_test<'a>(state: impl Into<StateRef<'a>>, cut: &Bipartition) -> Result<PeresResult> {
    let lambda_min = partial_transpose_spectrum(state, cut)?[0];
    Ok(PeresResult { detected: lambda_min < -PERES_TOL, lambda_min })
}

/// Spectrum of `(|ψ⟩⟨ψ|)^{T_B}` from the Schmidt coefficients: `{p_i}` and
/// `{±√(p_i p_j), i < j}`, zero-padded to `N` and sorted ascending.
pub fn pure_pt_spectrum(psi: &StateVector, cut: &Bipartition) -> Result<Vec<f64>> {
    let p = schmidt_coefficients(psi, cut)?;
    let mut out = Vec::with_capacity(psi.dim());
    out.extend_from_slice(&p);
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            let s = (p[i] * p[j]).max(0.0).sqrt();
            out.push(s);
            out.push(-s);
        }
    }
    out.resize(psi.dim(), 0.0);
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// Which positive operator `Q` defines the decomposable witness `W = Q^{T_B}`.
/// Every kind is normalized to `Tr Q = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessKind {
    /// `Q = |φ⟩⟨φ|`.
    RankOne(StateVector),
    /// `Q = |φ⟩⟨φ|` with `φ = √λ |0⟩_A|0⟩_B + √(1-λ) |1⟩_A|1⟩_B`.
    SchmidtRank2 { lambda: f64 },
    /// `Q = Σ_i |φ_i⟩⟨φ_i| / k` for orthonormal `φ_i`.
    RankK(Vec<StateVector>),
    /// Projector onto the minimal eigenvector of some state's partial transpose.
    OptimalFor(StateVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSpec {
    pub kind: WitnessKind,
    pub cut: Bipartition,
}

impl WitnessSpec {
    pub fn new(kind: WitnessKind, cut: Bipartition) -> Result<Self> {
        let n: usize = cut.dims().iter().product();
        match &kind {
            WitnessKind::RankOne(phi) | WitnessKind::OptimalFor(phi) => cut.check_dims(phi.dims())?,
            WitnessKind::SchmidtRank2 { lambda } => {
                if !(*lambda > 0.0 && *lambda < 1.0) {
                    return Err(Error::param(format!("λ must lie in (0, 1), got {lambda}")));
                }
                if cut.dim_a() < 2 || cut.dim_b() < 2 {
                    return Err(Error::InvalidCut("rank-2 witness needs both sides of dimension >= 2".into()));
                }
            }
            WitnessKind::RankK(phis) => {
                if phis.is_empty() || phis.len() > n {
                    return Err(Error::param("rank-k witness needs 1 <= k <= N vectors"));
                }
                for phi in phis {
                    cut.check_dims(phi.dims())?;
                }
            }
        }
        Ok(WitnessSpec { kind, cut })
    }

    /// Rank-k witness on `k` random orthonormal vectors.
    pub fn random_rank_k<R: Rng + ?Sized>(k: usize, cut: Bipartition, rng: &mut R) -> Result<Self> {
        let n: usize = cut.dims().iter().product();
        if k == 0 || k > n {
            return Err(Error::param(format!("rank k must be in 1..={n}, got {k}")));
        }
        let z = CMatrix::from_fn(n, k, |_, _| complex_gaussian(rng));
        let q = z.qr().q();
        let phis = (0..k)
            .map(|c| StateVector::normalized(q.column(c).iter().copied().collect(), cut.dims().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(WitnessKind::RankK(phis), cut)
    }

    /// `(weight, φ)` pairs with `Q = Σ weight |φ⟩⟨φ|`.
    pub fn components(&self) -> Vec<(f64, StateVector)> {
        match &self.kind {
            WitnessKind::RankOne(phi) | WitnessKind::OptimalFor(phi) => vec![(1.0, phi.clone())],
            WitnessKind::SchmidtRank2 { lambda } => vec![(1.0, schmidt_rank2_vector(*lambda, &self.cut))],
            WitnessKind::RankK(phis) => {
                let w = 1.0 / phis.len() as f64;
                phis.iter().map(|p| (w, p.clone())).collect()
            }
        }
    }

    pub fn rank(&self) -> usize {
        match &self.kind {
            WitnessKind::RankK(phis) => phis.len(),
            _ => 1,
        }
    }
}

fn schmidt_rank2_vector(lambda: f64, cut: &Bipartition) -> StateVector {
    let mut m = CMatrix::zeros(cut.dim_a(), cut.dim_b());
    m[(0, 0)] = C64::new(lambda.sqrt(), 0.0);
    m[(1, 1)] = C64::new((1.0 - lambda).sqrt(), 0.0);
    StateVector::from_matrix(&m, cut).expect("normalized by construction")
}

/// Dense `W = Q^{T_B}`; only for small `N` (oracles and mixed states).
pub fn dense_witness(w: &WitnessSpec) -> CMatrix {
    let comps = w.components();
    let n = comps[0].1.dim();
    let mut q = CMatrix::zeros(n, n);
    for (weight, phi) in &comps {
        let v = DVector::from_column_slice(phi.amplitudes());
        q += (&v * v.adjoint()) * C64::new(*weight, 0.0);
    }
    partial_transpose_matrix(&q, &w.cut)
}

/// `⟨ψ|(|φ⟩⟨φ|)^{T_B}|ψ⟩ = Σ_{a,a'} Y[a,a'] Y[a',a]*` with `Y = Φ Ψᵀ`.
pub(crate) fn rank_one_pure_expectation(phi_mat: &CMatrix, psi_mat: &CMatrix) -> f64 {
    let y = phi_mat * psi_mat.transpose();
    let n = y.nrows();
    let mut acc = ZERO;
    for a in 0..n {
        for b in 0..n {
            acc += y[(a, b)] * y[(b, a)].conj();
        }
    }
    acc.re
}

/// Raw `Tr(W ρ)`; pure states never build an `N × N` operator.
pub fn witness_expectation<'a>(w: &WitnessSpec, state: impl Into<StateRef<'a>>) -> Result<f64> {
    let state = state.into();
    w.cut.check_dims(state.dims())?;
    match state {
        StateRef::Pure(psi) => {
            let psi_mat = psi.matricize(&w.cut)?;
            let mut total = 0.0;
            for (weight, phi) in w.components() {
                total += weight * rank_one_pure_expectation(&phi.matricize(&w.cut)?, &psi_mat);
            }
            Ok(total)
        }
        StateRef::Mixed(rho) => {
            // Tr(Q^{T_B} ρ) = Tr(Q ρ^{T_B}).
            let pt = partial_transpose_matrix(rho.matrix(), &w.cut);
            Ok(w.components().iter().map(|(weight, phi)| weight * qstate::expectation(&pt, phi.amplitudes())).sum())
        }
    }
}

/// Pure-state dimensions above which the optimal witness uses the Schmidt
/// construction instead of a dense eigendecomposition.
const DENSE_OPTIMAL_LIMIT: usize = 1 << 10;

/// Witness `W = (|φ_min⟩⟨φ_min|)^{T_B}` built on the eigenvector of the
/// smallest eigenvalue of `ρ^{T_B}`, so that `Tr(W ρ) = λ_min`.
///
/// A degenerate minimal eigenspace is resolved by projecting the first
/// computational basis vector with a nonzero overlap onto it; the first
/// nonzero component of the result is made real and positive.
pub fn optimal_witness<'a>(state: impl Into<StateRef<'a>>, cut: &Bipartition) -> Result<WitnessSpec> {
    let state = state.into();
    cut.check_dims(state.dims())?;
    if let StateRef::Pure(psi) = state {
        if psi.dim() > DENSE_OPTIMAL_LIMIT {
            return optimal_witness_schmidt(psi, cut);
        }
    }
    let rho = match state {
        StateRef::Pure(psi) => psi.to_density(),
        StateRef::Mixed(rho) => rho.clone(),
    };
    let pt = partial_transpose_matrix(rho.matrix(), cut);
    let (vals, vecs) = linalg::hermitian_eigh(&pt);
    if vals[0] >= -PERES_TOL {
        return Err(Error::PositivePartialTranspose);
    }
    let degenerate = vals.iter().take_while(|&&v| v - vals[0] < 1e-9).count();
    let n = pt.nrows();
    let mut phi: Vec<C64> = vecs.column(0).iter().copied().collect();
    if degenerate > 1 {
        let basis = vecs.columns(0, degenerate);
        for k in 0..n {
            // P e_k = Σ_i v_i v_i[k]*
            let proj: Vec<C64> = (0..n)
                .map(|r| (0..degenerate).map(|i| basis[(r, i)] * basis[(k, i)].conj()).sum())
                .collect();
            if proj.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-12 {
                phi = proj;
                break;
            }
        }
    }
    let phi = fix_phase(phi);
    let phi = StateVector::normalized(phi, rho.dims().to_vec())?;
    WitnessSpec::new(WitnessKind::OptimalFor(phi), cut.clone())
}

fn fix_phase(mut v: Vec<C64>) -> Vec<C64> {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-8 * scale).copied() {
        let phase = first.conj() / first.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
    v
}

/// Pure-state optimal witness from the Schmidt form `ψ = Σ s_i u_i ⊗ v_i`:
/// the most negative eigenvalue `-s_1 s_2` of the partial transpose has
/// eigenvector `(u_1 ⊗ v_2* - u_2 ⊗ v_1*)/√2`.
fn optimal_witness_schmidt(psi: &StateVector, cut: &Bipartition) -> Result<WitnessSpec> {
    let d = schmidt(psi, cut)?;
    if d.schmidt_number < 2 {
        return Err(Error::PositivePartialTranspose);
    }
    let mut m = CMatrix::zeros(cut.dim_a(), cut.dim_b());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..cut.dim_a() {
        for b in 0..cut.dim_b() {
            m[(a, b)] = (d.left[0][a] * d.right[1][b].conj() - d.left[1][a] * d.right[0][b].conj()) * h;
        }
    }
    let phi = StateVector::from_matrix(&m, cut)?;
    let phi = StateVector::normalized(fix_phase(phi.into_amplitudes()), cut.dims().to_vec())?;
    WitnessSpec::new(WitnessKind::OptimalFor(phi), cut.clone())
}

#[derive(Debug, Clone, Serialize)]
pub struct BipartitionSpectrum {
    /// `(A side, E_AB in bits)` per cut, in enumeration order.
    pub entries: Vec<(Vec<usize>, f64)>,
    pub mean: f64,
    /// Population standard deviation over cuts.
    pub std: f64,
    pub histogram: Histogram,
}

impl BipartitionSpectrum {
    pub fn from_values(entries: Vec<(Vec<usize>, f64)>) -> Self {
        let values: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let (mean, std) = stats::mean_std(&values);
        let histogram = Histogram::freedman_diaconis(&values);
        BipartitionSpectrum { entries, mean, std, histogram }
    }

    pub fn relative_std(&self) -> f64 {
        self.std / self.mean
    }
}

/// Entanglement entropy of a qubit-register state over every balanced cut
/// (or every cut), computed in parallel and returned in enumeration order.
pub fn bipartition_spectrum(psi: &StateVector, balanced_only: bool) -> Result<BipartitionSpectrum> {
    let n_q = psi.qubit_count().ok_or_else(|| Error::dim("bipartition spectrum needs a qubit register"))?;
    let cuts = if balanced_only { Bipartition::balanced_qubit_cuts(n_q)? } else { Bipartition::all_qubit_cuts(n_q)? };
    let values: Vec<Result<f64>> = cuts.par_iter().map(|c| entanglement_entropy(psi, c)).collect();
    let entries = cuts
        .into_iter()
        .zip(values)
        .map(|(c, v)| v.map(|e| (c.side_a().to_vec(), e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BipartitionSpectrum::from_values(entries))
}

/// Quantum Fano bound `h(F) + (1 - F) log₂(N² - 1)` on `S(ρ)`.
pub fn fano_entropy_bound(fidelity: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(Error::param(format!("fidelity must lie in [0, 1], got {fidelity}")));
    }
    let n = n as f64;
    Ok(binary_entropy(fidelity) + (1.0 - fidelity) * (n * n - 1.0).log2())
}

/// Small-`x` form of the Fano bound with `F = e^{-x}`, `x = γ ε² n_g t`:
/// `x (-log₂ x + 2 n_q + 1/ln 2)`.
pub fn fano_entropy_small_x(x: f64, n_q: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x * (-x.log2() + 2.0 * n_q as f64 + 1.0 / std::f64::consts::LN_2)
}

/// Predicted lower bound `n_q/2 - 1/(2 ln 2) - 6 γ n_q³ ε² t` on the
/// distillable entanglement of the noisy state.
pub fn fano_lower_bound(n_q: usize, epsilon: f64, t: usize, gamma: f64) -> f64 {
    let n = n_q as f64;
    n / 2.0 - 1.0 / (2.0 * std::f64::consts::LN_2) - 6.0 * gamma * n.powi(3) * epsilon * epsilon * t as f64
}

/// Half-value threshold `ε^{(R)} = 1/√(24 γ n_q² t)`.
pub fn threshold_prediction(n_q: usize, t: usize, gamma: f64) -> Result<f64> {
    if n_q == 0 || t == 0 || !(gamma > 0.0) {
        return Err(Error::param("n_q, t and γ must be positive"));
    }
    Ok(1.0 / (24.0 * gamma * (n_q * n_q) as f64 * t as f64).sqrt())
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz(n_q: usize) -> StateVector {
    let last = (1usize << n_q) - 1;
    qstate::superposition(vec![2; n_q], &[(0, C64::new(1.0, 0.0)), (last, C64::new(1.0, 0.0))])
        .expect("valid GHZ state")
}

/// Equal superposition of the single-excitation states, normalized by `1/√n`.
pub fn w_state(n_q: usize) -> StateVector {
    let terms: Vec<(usize, C64)> = (0..n_q).map(|q| (1usize << q, C64::new(1.0, 0.0))).collect();
    qstate::superposition(vec![2; n_q], &terms).expect("valid W state")
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn bell() -> StateVector {
    ghz(2)
}

/// Bell pair on qubits 0, 1 with qubit 2 in `|0⟩`.
pub fn bell_times_zero() -> StateVector {
    bell().tensor(&StateVector::zero_qubits(1))
}
