//! In-place gate application on little-endian qubit registers.
//!
//! Two-qubit matrices act on the local basis `|x⟩_{q1}|y⟩_{q2}` with local
//! index `2x + y`.

use crate::linalg::C64;

pub type Gate1 = [[C64; 2]; 2];
pub type Gate2 = [[C64; 4]; 4];

pub fn hadamard() -> Gate1 {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn apply_one_qubit(amps: &mut [C64], q: usize, u: &Gate1) {
    let bit = 1usize << q;
    for i in 0..amps.len() {
        if i & bit != 0 {
            continue;
        }
        let j = i | bit;
        let (a0, a1) = (amps[i], amps[j]);
        amps[i] = u[0][0] * a0 + u[0][1] * a1;
        amps[j] = u[1][0] * a0 + u[1][1] * a1;
    }
}

pub fn apply_two_qubit(amps: &mut [C64], q1: usize, q2: usize, u: &Gate2) {
    assert_ne!(q1, q2, "two-qubit gate needs distinct qubits");
    let (b1, b2) = (1usize << q1, 1usize << q2);
    for i in 0..amps.len() {
        if i & (b1 | b2) != 0 {
            continue;
        }
        let idx = [i, i | b2, i | b1, i | b1 | b2];
        let v = idx.map(|k| amps[k]);
        for (r, &k) in idx.iter().enumerate() {
            amps[k] = (0..4).map(|c| u[r][c] * v[c]).sum();
        }
    }
}

/// Diagonal one-qubit gate `diag(d0, d1)`.
pub fn apply_diagonal_one(amps: &mut [C64], q: usize, d: &[C64; 2]) {
    let bit = 1usize << q;
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= d[usize::from(i & bit != 0)];
    }
}

/// Diagonal two-qubit gate indexed by `2x + y`.
pub fn apply_diagonal_two(amps: &mut [C64], q1: usize, q2: usize, d: &[C64; 4]) {
    let (b1, b2) = (1usize << q1, 1usize << q2);
    for (i, a) in amps.iter_mut().enumerate() {
        let k = 2 * usize::from(i & b1 != 0) + usize::from(i & b2 != 0);
        *a *= d[k];
    }
}

pub fn apply_cnot(amps: &mut [C64], control: usize, target: usize) {
    let (bc, bt) = (1usize << control, 1usize << target);
    for i in 0..amps.len() {
        if i & bc != 0 && i & bt == 0 {
            amps.swap(i, i | bt);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, k: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[k] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn cnot_truth_table() {
        // control qubit 0, target qubit 1: |10⟩ (flat 1) -> |11⟩ (flat 3)
        let mut v = basis(4, 1);
        apply_cnot(&mut v, 0, 1);
        assert_eq!(v, basis(4, 3));
        let mut v = basis(4, 2);
        apply_cnot(&mut v, 0, 1);
        assert_eq!(v, basis(4, 2));
    }

    #[test]
    fn two_qubit_local_ordering() {
        // CNOT as a dense matrix with control = first local qubit.
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        let cnot = [[o, z, z, z], [z, o, z, z], [z, z, z, o], [z, z, o, z]];
        for k in 0..8 {
            let mut a = basis(8, k);
            let mut b = a.clone();
            apply_two_qubit(&mut a, 2, 0, &cnot);
            apply_cnot(&mut b, 2, 0);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn hadamard_is_involution() {
        let mut v = vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.9)];
        let orig = v.clone();
        apply_one_qubit(&mut v, 0, &hadamard());
        apply_one_qubit(&mut v, 0, &hadamard());
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
