use nalgebra::DVector;

use super::{
    Bipartition, DensityMatrix, SchmidtDecomposition, Side, StateRef, StateVector, PSD_TOL,
    SCHMIDT_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};

pub fn tensor_product(a: &StateVector, b: &StateVector) -> StateVector {
    a.tensor(b)
}

/// `Tr_B |ψ⟩⟨ψ|` (keep `A`) or `Tr_A |ψ⟩⟨ψ|` (keep `B`).
pub fn reduced_density(psi: &StateVector, cut: &Bipartition, keep: Side) -> Result<DensityMatrix> {
    let m = psi.matricize(cut)?;
    Ok(match keep {
        Side::A => DensityMatrix::from_matrix_unchecked(&m * m.adjoint(), cut.dims_a()),
        Side::B => {
            let mt = m.transpose();
            DensityMatrix::from_matrix_unchecked(&mt * mt.adjoint(), cut.dims_b())
        }
    })
}

/// Traces out every subsystem not listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n_sub = rho.dims().len();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() == n_sub && keep_sorted.iter().enumerate().all(|(i, &k)| i == k) {
        return Ok(rho.clone());
    }
    let cut = Bipartition::new(rho.dims(), &keep_sorted)?;
    let (da, db) = (cut.dim_a(), cut.dim_b());
    let table = cut.flat_index_table();
    let m = rho.matrix();
    let out = CMatrix::from_fn(da, da, |a, a2| {
        (0..db).map(|b| m[(table[a * db + b], table[a2 * db + b])]).sum()
    });
    Ok(DensityMatrix::from_matrix_unchecked(out, cut.dims_a()))
}

/// `ρ^{T_B}` with entries `⟨a b|ρ^{T_B}|a' b'⟩ = ⟨a b'|ρ|a' b⟩`.
pub fn partial_transpose(rho: &DensityMatrix, cut: &Bipartition) -> Result<CMatrix> {
    cut.check_dims(rho.dims())?;
    Ok(partial_transpose_matrix(rho.matrix(), cut))
}

pub(crate) fn partial_transpose_matrix(m: &CMatrix, cut: &Bipartition) -> CMatrix {
    let db = cut.dim_b();
    let layout = cut.layout();
    let table = cut.flat_index_table();
    let n = m.nrows();
    CMatrix::from_fn(n, n, |i, j| {
        let (a, b) = layout[i];
        let (a2, b2) = layout[j];
        m[(table[a * db + b2], table[a2 * db + b])]
    })
}

/// Von Neumann entropy in bits.
pub fn vn_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_from_spectrum(&rho.eigenvalues())
}

/// `-Σ p log₂ p` with small negative eigenvalues clamped to zero.
pub fn entropy_from_spectrum(eigs: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &p in eigs {
        if p < -PSD_TOL {
            return Err(Error::NegativeEigenvalue(p));
        }
        if p > 0.0 {
            s -= p * p.log2();
        }
    }
    Ok(s.max(0.0))
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    linalg::frobenius_sq(rho.matrix())
}

pub fn participation_ratio(rho: &DensityMatrix) -> f64 {
    1.0 / purity(rho)
}

pub fn schmidt(psi: &StateVector, cut: &Bipartition) -> Result<SchmidtDecomposition> {
    let m = psi.matricize(cut)?;
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let coefficients: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let left = order.iter().map(|&i| u.column(i).iter().copied().collect()).collect();
    let right = order.iter().map(|&i| v_t.row(i).iter().copied().collect()).collect();
    let schmidt_number = coefficients.iter().filter(|&&p| p > SCHMIDT_TOL).count();
    Ok(SchmidtDecomposition { coefficients, left, right, schmidt_number })
}

/// Squared singular values of the matricization, descending. Cheaper than
/// [`schmidt`] when the vectors are not needed.
pub fn schmidt_coefficients(psi: &StateVector, cut: &Bipartition) -> Result<Vec<f64>> {
    let m = psi.matricize(cut)?;
    let mut p: Vec<f64> = m.singular_values().iter().map(|s| s * s).collect();
    p.sort_by(|a, b| b.total_cmp(a));
    Ok(p)
}

/// Entanglement entropy of a pure state across `cut`, in bits.
pub fn entanglement_entropy(psi: &StateVector, cut: &Bipartition) -> Result<f64> {
    // Smaller side gives the cheaper Gram matrix.
    let keep = if cut.dim_a() <= cut.dim_b() { Side::A } else { Side::B };
    vn_entropy(&reduced_density(psi, cut, keep)?)
}

impl SchmidtDecomposition {
    /// `Σ √p_i |i⟩_A |i'⟩_B` as a flat amplitude vector for `cut`.
    pub fn reconstruct(&self, cut: &Bipartition) -> Vec<C64> {
        let layout = cut.layout();
        layout
            .iter()
            .map(|&(a, b)| {
                self.coefficients
                    .iter()
                    .zip(self.left.iter().zip(&self.right))
                    .map(|(p, (l, r))| l[a] * r[b] * p.sqrt())
                    .sum()
            })
            .collect()
    }
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`; a pure argument uses `⟨ψ|σ|ψ⟩`.
pub fn fidelity<'a>(rho: impl Into<StateRef<'a>>, sigma: impl Into<StateRef<'a>>) -> Result<f64> {
    let (rho, sigma) = (rho.into(), sigma.into());
    if rho.dims() != sigma.dims() {
        return Err(Error::dim("fidelity between states of different dims"));
    }
    let f = match (rho, sigma) {
        (StateRef::Pure(a), StateRef::Pure(b)) => a.inner(b).norm_sqr(),
        (StateRef::Pure(p), StateRef::Mixed(m)) | (StateRef::Mixed(m), StateRef::Pure(p)) => {
            expectation(m.matrix(), p.amplitudes())
        }
        (StateRef::Mixed(a), StateRef::Mixed(b)) => {
            let sqrt_a = linalg::hermitian_function(a.matrix(), |v| v.max(0.0).sqrt());
            let inner = &sqrt_a * b.matrix() * &sqrt_a;
            let tr: f64 = linalg::hermitian_eigenvalues(&inner).iter().map(|v| v.max(0.0).sqrt()).sum();
            tr * tr
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `Re ⟨ψ|M|ψ⟩`.
pub(crate) fn expectation(m: &CMatrix, psi: &[C64]) -> f64 {
    let v = DVector::from_column_slice(psi);
    let mv = m * &v;
    v.iter().zip(mv.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().re
}

/// Equal superposition helper used by reference states and tests.
pub(crate) fn superposition(dims: Vec<usize>, terms: &[(usize, C64)]) -> Result<StateVector> {
    let n: usize = dims.iter().product();
    let mut amps = vec![ZERO; n];
    for &(i, c) in terms {
        if i >= n {
            return Err(Error::dim(format!("basis index {i} out of range")));
        }
        amps[i] += c;
    }
    StateVector::normalized(amps, dims)
}

#[cfg(test)]
mod tests {
    use super::super::gates;
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> StateVector {
        superposition(vec![2, 2], &[(0, c(1.0)), (3, c(1.0))]).unwrap()
    }

    fn w3() -> StateVector {
        superposition(vec![2, 2, 2], &[(1, c(1.0)), (2, c(1.0)), (4, c(1.0))]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn tensor_examples() {
        let zero = StateVector::zero_qubits(1);
        assert_eq!(tensor_product(&zero, &zero), StateVector::zero_qubits(2));
        let plus = superposition(vec![2], &[(0, c(1.0)), (1, c(1.0))]).unwrap();
        let s = tensor_product(&plus, &zero);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // |00⟩ and |10⟩ in ket order: qubit 0 set is flat index 1.
        assert!(close(s.amplitudes()[0].re, h, 1e-15));
        assert!(close(s.amplitudes()[1].re, h, 1e-15));
        let mut amps = s.into_amplitudes();
        gates::apply_cnot(&mut amps, 0, 1);
        let b = StateVector::new(amps, vec![2, 2]).unwrap();
        assert!(close(b.inner(&bell()).norm(), 1.0, 1e-14));
    }

    #[test]
    fn reduced_density_examples() {
        let cut = Bipartition::qubits(2, &[0]).unwrap();
        let ra = reduced_density(&bell(), &cut, Side::A).unwrap();
        let half = CMatrix::identity(2, 2) * c(0.5);
        assert!((ra.matrix() - half).norm() < 1e-14);

        let w = w3();
        let cut = Bipartition::qubits(3, &[0]).unwrap();
        let r = reduced_density(&w, &cut, Side::A).unwrap();
        assert!(close(r.matrix()[(0, 0)].re, 2.0 / 3.0, 1e-14));
        assert!(close(r.matrix()[(1, 1)].re, 1.0 / 3.0, 1e-14));
        assert!(r.matrix()[(0, 1)].norm() < 1e-14);
        assert!(close(vn_entropy(&r).unwrap(), 0.9182958340544896, 1e-12));
        assert!(close(purity(&r), 5.0 / 9.0, 1e-14));
        assert!(close(participation_ratio(&r), 1.8, 1e-12));

        let rb = reduced_density(&w, &cut, Side::B).unwrap();
        assert_eq!(rb.dims(), &[2, 2]);
        let traced = partial_trace(&w.to_density(), &[0]).unwrap();
        assert!((traced.matrix() - r.matrix()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_of_products() {
        let ra = DensityMatrix::new(
            CMatrix::from_row_slice(2, 2, &[c(0.7), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.3)]),
            vec![2],
        )
        .unwrap();
        let rb = DensityMatrix::maximally_mixed(vec![3]);
        let prod = ra.tensor(&rb);
        assert!((partial_trace(&prod, &[0]).unwrap().matrix() - ra.matrix()).norm() < 1e-14);
        assert!((partial_trace(&prod, &[1]).unwrap().matrix() - rb.matrix()).norm() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2, 2]);
        let kept = partial_trace(&mixed, &[0, 2]).unwrap();
        assert!((kept.matrix() - CMatrix::identity(4, 4) * c(0.25)).norm() < 1e-14);
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let cut = Bipartition::qubits(2, &[0]).unwrap();
        let pt = partial_transpose(&bell().to_density(), &cut).unwrap();
        let eig = linalg::hermitian_eigenvalues(&pt);
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in eig.iter().zip(expected) {
            assert!(close(*a, b, 1e-12));
        }
    }

    #[test]
    fn entropy_clamps_and_rejects() {
        assert_eq!(entropy_from_spectrum(&[1.0, -1e-9]).unwrap(), 0.0);
        assert!(matches!(entropy_from_spectrum(&[1.0, -1e-6]), Err(Error::NegativeEigenvalue(_))));
        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        assert!(close(vn_entropy(&mixed).unwrap(), 1.0, 1e-14));
        assert!(vn_entropy(&bell().to_density()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn schmidt_examples() {
        let cut = Bipartition::qubits(2, &[0]).unwrap();
        let d = schmidt(&StateVector::zero_qubits(2), &cut).unwrap();
        assert_eq!(d.schmidt_number, 1);
        let d = schmidt(&bell(), &cut).unwrap();
        assert_eq!(d.schmidt_number, 2);
        assert!(close(d.coefficients[0], 0.5, 1e-14) && close(d.coefficients[1], 0.5, 1e-14));
        let psi = superposition(vec![2, 2], &[(0, c(0.8f64.sqrt())), (3, c(0.2f64.sqrt()))]).unwrap();
        let d = schmidt(&psi, &cut).unwrap();
        assert!(close(d.coefficients[0], 0.8, 1e-14) && close(d.coefficients[1], 0.2, 1e-14));
    }

    #[test]
    fn fidelity_examples() {
        let zero = StateVector::zero_qubits(1);
        let one = StateVector::basis(vec![2], 1).unwrap();
        assert!(close(fidelity(&zero, &zero).unwrap(), 1.0, 1e-15));
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        assert!(close(fidelity(&zero, &mixed).unwrap(), 0.5, 1e-15));
        // Spectral route agrees with the pure fast path.
        assert!(close(fidelity(&zero.to_density(), &mixed).unwrap(), 0.5, 1e-10));
        assert!(close(fidelity(&mixed, &mixed).unwrap(), 1.0, 1e-10));
    }

    fn arb_state(dims: Vec<usize>) -> impl Strategy<Value = StateVector> {
        let n: usize = dims.iter().product();
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
            .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
            .prop_map(move |v| {
                let amps = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
                StateVector::normalized(amps, dims.clone()).unwrap()
            })
    }

    fn arb_cut() -> impl Strategy<Value = Bipartition> {
        (1usize..15).prop_map(|mask| {
            let a: Vec<usize> = (0..4).filter(|k| mask >> k & 1 == 1).collect();
            Bipartition::qubits(4, &a).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn schmidt_invariants(psi in arb_state(vec![2; 4]), cut in arb_cut()) {
            let d = schmidt(&psi, &cut).unwrap();
            prop_assert!((d.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            let back = d.reconstruct(&cut);
            for (x, y) in back.iter().zip(psi.amplitudes()) {
                prop_assert!((x - y).norm() < 1e-8);
            }
            let ra = reduced_density(&psi, &cut, Side::A).unwrap();
            let mut eig = ra.eigenvalues();
            eig.reverse();
            for (p, e) in d.coefficients.iter().zip(&eig) {
                prop_assert!((p - e).abs() < 1e-10);
            }
            let p2: f64 = d.coefficients.iter().map(|p| p * p).sum();
            prop_assert!((purity(&ra) - p2).abs() < 1e-10);
        }

        #[test]
        fn entropy_symmetric_and_bounded(psi in arb_state(vec![2; 4]), cut in arb_cut()) {
            let sa = vn_entropy(&reduced_density(&psi, &cut, Side::A).unwrap()).unwrap();
            let sb = vn_entropy(&reduced_density(&psi, &cut, Side::B).unwrap()).unwrap();
            prop_assert!((sa - sb).abs() < 1e-8);
            prop_assert!(sa <= (cut.dim_a() as f64).log2() + 1e-10);
        }

        #[test]
        fn partial_transpose_involution(psi in arb_state(vec![2; 4]), cut in arb_cut()) {
            let rho = psi.to_density();
            let pt = partial_transpose(&rho, &cut).unwrap();
            prop_assert!(linalg::is_hermitian(&pt, 1e-12));
            prop_assert!((linalg::trace(&pt) - C64::new(1.0, 0.0)).norm() < 1e-12);
            for i in 0..16 {
                prop_assert!((pt[(i, i)] - rho.matrix()[(i, i)]).norm() < 1e-15);
            }
            let back = partial_transpose_matrix(&pt, &cut);
            prop_assert!((back - rho.matrix()).norm() < 1e-14);
        }
    }
}
