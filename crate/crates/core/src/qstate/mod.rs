//! Pure states, density matrices and bipartitions of a tensor-product space.
//!
//! Indexing is little-endian over the `dims` list: for dims `[d0, d1, ...]`
//! the flat index of the basis state `|i0⟩|i1⟩...` is `i0 + d0·(i1 + d1·(...))`.
//! For a qubit register this means qubit `k` carries the bit of weight `2^k`.
//! Kets in docs are written in subsystem order, e.g. `|01⟩` is qubit 0 in
//! `|0⟩` and qubit 1 in `|1⟩` (flat index 2).

pub mod gates;
mod ops;

pub use ops::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};

pub const NORM_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    dims: Vec<usize>,
}

impl StateVector {
    /// Validates the norm and the tensor structure.
    pub fn new(amps: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amps.len())?;
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Ok(StateVector { amps, dims })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(mut amps: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::param("cannot normalize a zero or non-finite vector"));
        }
        let inv = 1.0 / norm;
        amps.iter_mut().for_each(|a| *a *= inv);
        Ok(StateVector { amps, dims })
    }

    pub(crate) fn from_parts_unchecked(amps: Vec<C64>, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), amps.len());
        StateVector { amps, dims }
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let n: usize = dims.iter().product();
        if index >= n {
            return Err(Error::dim(format!("basis index {index} out of range for dimension {n}")));
        }
        let mut amps = vec![ZERO; n];
        amps[index] = C64::new(1.0, 0.0);
        StateVector::new(amps, dims)
    }

    /// `|0...0⟩` on `n_q` qubits.
    pub fn zero_qubits(n_q: usize) -> Self {
        Self::basis(vec![2; n_q], 0).expect("valid basis state")
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Number of qubits, if every subsystem is a qubit.
    pub fn qubit_count(&self) -> Option<usize> {
        self.dims.iter().all(|&d| d == 2).then_some(self.dims.len())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `self ⊗ other`, with `self` occupying the leading (least significant)
    /// subsystems.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let na = self.dim();
        let mut amps = vec![ZERO; na * other.dim()];
        for (ib, b) in other.amps.iter().enumerate() {
            for (ia, a) in self.amps.iter().enumerate() {
                amps[ia + na * ib] = a * b;
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        StateVector { amps, dims }
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        DensityMatrix::from_matrix_unchecked(&v * v.adjoint(), self.dims.clone())
    }

    /// The `dim_a × dim_b` coefficient matrix `Ψ[a, b] = ⟨a b|ψ⟩` for `cut`.
    pub fn matricize(&self, cut: &Bipartition) -> Result<CMatrix> {
        cut.check_dims(&self.dims)?;
        let layout = cut.layout();
        let mut m = CMatrix::zeros(cut.dim_a(), cut.dim_b());
        for (amp, &(a, b)) in self.amps.iter().zip(&layout) {
            m[(a, b)] = *amp;
        }
        Ok(m)
    }

    /// Inverse of [`StateVector::matricize`]; the matrix must be normalized.
    pub fn from_matrix(m: &CMatrix, cut: &Bipartition) -> Result<Self> {
        if m.nrows() != cut.dim_a() || m.ncols() != cut.dim_b() {
            return Err(Error::dim("matrix shape does not match the cut"));
        }
        let amps = cut.layout().iter().map(|&(a, b)| m[(a, b)]).collect();
        StateVector::new(amps, cut.dims().to_vec())
    }
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::dim("subsystem dimensions must be positive"));
    }
    let prod: usize = dims.iter().product();
    if prod != len {
        return Err(Error::dim(format!("product of dims {prod} != amplitude count {len}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and numerical positivity.
    pub fn new(mat: CMatrix, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, mat.nrows())?;
        if !linalg::is_hermitian(&mat, HERMITIAN_TOL) {
            return Err(Error::InvalidDensity("matrix is not Hermitian".into()));
        }
        let tr = linalg::trace(&mat);
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let min = linalg::hermitian_eigenvalues(&mat)[0];
        if min < -PSD_TOL {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(DensityMatrix { mat, dims })
    }

    pub(crate) fn from_matrix_unchecked(mat: CMatrix, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), mat.nrows());
        DensityMatrix { mat, dims }
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.to_density()
    }

    /// `I/N`.
    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        let mat = CMatrix::identity(n, n) * C64::new(1.0 / n as f64, 0.0);
        DensityMatrix { mat, dims }
    }

    /// Equal-weight mixture `Σ |ψ_i⟩⟨ψ_i| / m`.
    pub fn equal_mixture(states: &[StateVector]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::param("empty mixture"))?;
        if states.iter().any(|s| s.dims != first.dims) {
            return Err(Error::dim("mixture components have different dims"));
        }
        let refs: Vec<&[C64]> = states.iter().map(|s| s.amplitudes()).collect();
        let mat = linalg::weighted_gram(&refs, 1.0 / states.len() as f64);
        Ok(DensityMatrix { mat, dims: first.dims.clone() })
    }

    /// `ρ_a ⊗ ρ_b` with `a` on the leading subsystems.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mat = other.mat.kronecker(&self.mat);
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix { mat, dims }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.mat)
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.mat)
    }
}

/// Borrowed view of either kind of state.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a StateVector),
    Mixed(&'a DensityMatrix),
}

impl<'a> StateRef<'a> {
    pub fn dims(&self) -> &'a [usize] {
        match self {
            StateRef::Pure(p) => p.dims(),
            StateRef::Mixed(r) => r.dims(),
        }
    }
}

impl<'a> From<&'a StateVector> for StateRef<'a> {
    fn from(s: &'a StateVector) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(r: &'a DensityMatrix) -> Self {
        StateRef::Mixed(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// A split of the subsystems into `A` and its complement `B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bipartition {
    dims: Vec<usize>,
    side_a: Vec<usize>,
    side_b: Vec<usize>,
}

impl Bipartition {
    pub fn new(dims: &[usize], side_a: &[usize]) -> Result<Self> {
        let mut a = side_a.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.len() != side_a.len() {
            return Err(Error::InvalidCut("duplicate subsystem index".into()));
        }
        if let Some(&bad) = a.iter().find(|&&i| i >= dims.len()) {
            return Err(Error::InvalidCut(format!("subsystem {bad} out of range")));
        }
        if a.is_empty() || a.len() == dims.len() {
            return Err(Error::InvalidCut("both sides must be non-empty".into()));
        }
        let b = (0..dims.len()).filter(|i| !a.contains(i)).collect();
        Ok(Bipartition { dims: dims.to_vec(), side_a: a, side_b: b })
    }

    pub fn qubits(n_q: usize, side_a: &[usize]) -> Result<Self> {
        Self::new(&vec![2; n_q], side_a)
    }

    /// Sides swapped so that subsystem 0 lies in `A`.
    pub fn canonical(&self) -> Self {
        if self.side_a.contains(&0) {
            self.clone()
        } else {
            self.swapped()
        }
    }

    pub fn swapped(&self) -> Self {
        Bipartition {
            dims: self.dims.clone(),
            side_a: self.side_b.clone(),
            side_b: self.side_a.clone(),
        }
    }

    /// All `C(n, n/2)/2` balanced cuts of an even qubit register, canonical
    /// (qubit 0 in `A`), in lexicographic order of `A`.
    pub fn balanced_qubit_cuts(n_q: usize) -> Result<Vec<Self>> {
        if n_q < 2 || n_q % 2 != 0 {
            return Err(Error::InvalidCut(format!("balanced cuts need an even qubit count, got {n_q}")));
        }
        let half = n_q / 2;
        Ok(subsets_containing_zero(n_q, half)
            .into_iter()
            .map(|a| Self::qubits(n_q, &a).expect("valid subset"))
            .collect())
    }

    /// Every proper cut of a qubit register, canonical and deduplicated
    /// (`2^{n-1} - 1` cuts), ordered by the size of `A` then lexicographically.
    pub fn all_qubit_cuts(n_q: usize) -> Result<Vec<Self>> {
        if n_q < 2 {
            return Err(Error::InvalidCut("need at least two qubits".into()));
        }
        let mut cuts = Vec::new();
        for size in 1..n_q {
            for a in subsets_containing_zero(n_q, size) {
                cuts.push(Self::qubits(n_q, &a).expect("valid subset"));
            }
        }
        Ok(cuts)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side_a(&self) -> &[usize] {
        &self.side_a
    }

    pub fn side_b(&self) -> &[usize] {
        &self.side_b
    }

    pub fn n_a(&self) -> usize {
        self.side_a.len()
    }

    pub fn n_b(&self) -> usize {
        self.side_b.len()
    }

    pub fn dim_a(&self) -> usize {
        self.side_a.iter().map(|&i| self.dims[i]).product()
    }

    pub fn dim_b(&self) -> usize {
        self.side_b.iter().map(|&i| self.dims[i]).product()
    }

    pub fn dims_a(&self) -> Vec<usize> {
        self.side_a.iter().map(|&i| self.dims[i]).collect()
    }

    pub fn dims_b(&self) -> Vec<usize> {
        self.side_b.iter().map(|&i| self.dims[i]).collect()
    }

    pub(crate) fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if dims != self.dims.as_slice() {
            return Err(Error::InvalidCut(format!(
                "cut built for dims {:?} applied to dims {:?}",
                self.dims, dims
            )));
        }
        Ok(())
    }

    /// For each flat index, its `(a, b)` coordinates; `a` and `b` are
    /// little-endian over the subsystems of each side in increasing order.
    pub(crate) fn layout(&self) -> Vec<(usize, usize)> {
        let n: usize = self.dims.iter().product();
        let mut strides = Vec::with_capacity(self.dims.len());
        let mut s = 1;
        for &d in &self.dims {
            strides.push(s);
            s *= d;
        }
        let side_strides = |side: &[usize]| {
            let mut out = vec![0usize; self.dims.len()];
            let mut s = 1;
            for &k in side {
                out[k] = s;
                s *= self.dims[k];
            }
            out
        };
        let sa = side_strides(&self.side_a);
        let sb = side_strides(&self.side_b);
        let in_a: Vec<bool> = (0..self.dims.len()).map(|k| self.side_a.contains(&k)).collect();
        (0..n)
            .map(|i| {
                let (mut a, mut b) = (0, 0);
                for k in 0..self.dims.len() {
                    let digit = (i / strides[k]) % self.dims[k];
                    if in_a[k] {
                        a += digit * sa[k];
                    } else {
                        b += digit * sb[k];
                    }
                }
                (a, b)
            })
            .collect()
    }

    /// Flat index of `(a, b)`; inverse of [`Bipartition::layout`].
    pub(crate) fn flat_index_table(&self) -> Vec<usize> {
        let db = self.dim_b();
        let layout = self.layout();
        let mut table = vec![0usize; layout.len()];
        for (i, &(a, b)) in layout.iter().enumerate() {
            table[a * db + b] = i;
        }
        table
    }
}

fn subsets_containing_zero(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < left {
                break;
            }
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size == 0 {
        return out;
    }
    let mut cur = vec![0];
    rec(1, n, size - 1, &mut cur, &mut out);
    // A complementary cut of the same size appears twice only when size == n/2;
    // containing qubit 0 already picks one representative per pair.
    out
}

#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// `p_i`, descending, summing to one.
    pub coefficients: Vec<f64>,
    /// Orthonormal vectors on `A`, matching `coefficients`.
    pub left: Vec<Vec<C64>>,
    /// Orthonormal vectors on `B`, matching `coefficients`.
    pub right: Vec<Vec<C64>>,
    /// Number of `p_i` above [`SCHMIDT_TOL`].
    pub schmidt_number: usize,
}

pub const SCHMIDT_TOL: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_cut_counts() {
        assert_eq!(Bipartition::balanced_qubit_cuts(4).unwrap().len(), 3);
        assert_eq!(Bipartition::balanced_qubit_cuts(6).unwrap().len(), 10);
        assert_eq!(Bipartition::balanced_qubit_cuts(8).unwrap().len(), 35);
        assert!(Bipartition::balanced_qubit_cuts(5).is_err());
        assert_eq!(Bipartition::all_qubit_cuts(3).unwrap().len(), 3);
        assert_eq!(Bipartition::all_qubit_cuts(4).unwrap().len(), 7);
    }

    #[test]
    fn canonical_cut_contains_zero() {
        let cut = Bipartition::qubits(4, &[1, 2]).unwrap();
        let c = cut.canonical();
        assert_eq!(c.side_a(), &[0, 3]);
        assert_eq!(c.dim_a() * c.dim_b(), 16);
    }

    #[test]
    fn invalid_cuts_rejected() {
        assert!(Bipartition::qubits(3, &[]).is_err());
        assert!(Bipartition::qubits(3, &[0, 1, 2]).is_err());
        assert!(Bipartition::qubits(3, &[3]).is_err());
        assert!(Bipartition::qubits(3, &[1, 1]).is_err());
    }

    #[test]
    fn matricize_round_trip_and_little_endian() {
        // |ψ⟩ on dims [2, 3]; flat index i0 + 2·i1.
        let amps: Vec<C64> = (0..6).map(|i| C64::new(i as f64 + 1.0, 0.5 * i as f64)).collect();
        let psi = StateVector::normalized(amps, vec![2, 3]).unwrap();
        let cut = Bipartition::new(&[2, 3], &[0]).unwrap();
        let m = psi.matricize(&cut).unwrap();
        assert_eq!(m.shape(), (2, 3));
        // row = subsystem 0 digit, column = subsystem 1 digit.
        assert_eq!(m[(1, 2)], psi.amplitudes()[1 + 2 * 2]);
        let back = StateVector::from_matrix(&m, &cut).unwrap();
        assert_eq!(back, psi);
        let swapped = psi.matricize(&cut.swapped()).unwrap();
        assert_eq!(swapped, m.transpose());
    }

    #[test]
    fn layout_respects_side_order() {
        let cut = Bipartition::qubits(3, &[0, 2]).unwrap();
        let layout = cut.layout();
        // flat 5 = q0=1, q1=0, q2=1 -> a = 1 + 2·1 = 3, b = 0.
        assert_eq!(layout[5], (3, 0));
        let table = cut.flat_index_table();
        assert_eq!(table[3 * 2], 5);
    }

    #[test]
    fn normalization_is_checked() {
        let amps = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(StateVector::new(amps.clone(), vec![2]), Err(Error::NotNormalized(_))));
        assert!(StateVector::new(amps, vec![3]).is_err());
    }

    #[test]
    fn density_validation() {
        let bad = CMatrix::from_row_slice(2, 2, &[C64::new(1.5, 0.0), ZERO, ZERO, C64::new(-0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new(bad, vec![2]), Err(Error::NegativeEigenvalue(_))));
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert!(DensityMatrix::new(mixed.matrix().clone(), vec![2, 2]).is_ok());
    }
}
