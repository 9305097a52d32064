//! GF(2) linear algebra and F2[x] arithmetic.

mod matrix;
mod poly;

pub use matrix::{symplectic_form, BitMatrix};
pub use num_bigint::BigUint;
pub use poly::GF2Poly;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("symplectic check needs even dimension, got {0}")]
    OddDimension(usize),
    #[error("division by the zero polynomial")]
    ZeroPolynomial,
    #[error("polynomial division is not exact")]
    InexactDivision,
    #[error("vector length mismatch: {0} vs {1} qubits")]
    LengthMismatch(usize, usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A Pauli operator ZX(a) as a = (z | x), qubit `k` at bit `k` of each mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliVector {
    pub m: usize,
    pub z: u64,
    pub x: u64,
}

impl PauliVector {
    pub fn new(m: usize, z: u64, x: u64) -> Self {
        assert!(m <= 64);
        PauliVector { m, z, x }
    }

    /// From a 2m-bit column mask (z in the low m bits), `m <= 32`.
    pub fn from_mask(m: usize, v: u64) -> Self {
        assert!(m <= 32);
        let low = if m == 0 { 0 } else { (1u64 << m) - 1 };
        PauliVector { m, z: v & low, x: v >> m & low }
    }

    pub fn to_mask(self) -> u64 {
        assert!(self.m <= 32);
        self.z | self.x << self.m
    }

    pub fn is_identity(self) -> bool {
        self.z == 0 && self.x == 0
    }

    /// Letter per qubit, qubit 0 first: I, Z, X or Y.
    pub fn label(self) -> String {
        (0..self.m)
            .map(|k| match (self.z >> k & 1, self.x >> k & 1) {
                (0, 0) => 'I',
                (1, 0) => 'Z',
                (0, 1) => 'X',
                _ => 'Y',
            })
            .collect()
    }

    pub fn parse_label(s: &str) -> Option<Self> {
        let mut v = PauliVector::new(s.chars().count(), 0, 0);
        for (k, ch) in s.chars().enumerate() {
            match ch {
                'I' | '1' => {}
                'Z' => v.z |= 1 << k,
                'X' => v.x |= 1 << k,
                'Y' => {
                    v.z |= 1 << k;
                    v.x |= 1 << k;
                }
                _ => return None,
            }
        }
        Some(v)
    }
}

/// (a, b)_sp = Σ a_z b_x + a_x b_z mod 2.
pub fn symplectic_product(a: PauliVector, b: PauliVector) -> Result<bool, Gf2Error> {
    if a.m != b.m {
        return Err(Gf2Error::LengthMismatch(a.m, b.m));
    }
    Ok(((a.z & b.x) ^ (a.x & b.z)).count_ones() & 1 == 1)
}

/// Symplectic product of packed 2m-bit masks.
#[inline]
pub fn symplectic_product_mask(a: u64, b: u64, m: usize) -> bool {
    let low = (1u64 << m) - 1;
    (((a & low) & (b >> m)) ^ ((a >> m) & (b & low))).count_ones() & 1 == 1
}

/// det(xI + a) over F2[x] by fraction-free (Bareiss) elimination.
pub fn char_poly(a: &BitMatrix) -> Result<GF2Poly, Gf2Error> {
    if !a.is_square() {
        return Err(Gf2Error::NotSquare(a.rows(), a.cols()));
    }
    let n = a.rows();
    let mut m: Vec<Vec<GF2Poly>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut p = GF2Poly::zero();
                    p.set_coeff(0, a.get(i, j));
                    if i == j {
                        p.set_coeff(1, true);
                    }
                    p
                })
                .collect()
        })
        .collect();
    let mut prev = GF2Poly::one();
    for k in 0..n.saturating_sub(1) {
        if m[k][k].is_zero() {
            // sign changes are invisible in characteristic 2
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => m.swap(k, r),
                None => return Ok(GF2Poly::zero()),
            }
        }
        let pivot = m[k][k].clone();
        for i in k + 1..n {
            let mik = m[i][k].clone();
            for j in k + 1..n {
                let num = m[i][j].mul(&pivot).add(&mik.mul(&m[k][j]));
                m[i][j] = num.exact_div(&prev)?;
            }
            m[i][k] = GF2Poly::zero();
        }
        prev = pivot;
    }
    Ok(m[n - 1][n - 1].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Permutation-expansion determinant oracle for tiny matrices.
    fn leibniz_char_poly(a: &BitMatrix) -> GF2Poly {
        let n = a.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut total = GF2Poly::zero();
        loop {
            let mut term = GF2Poly::one();
            for (i, &j) in perm.iter().enumerate() {
                let mut e = GF2Poly::zero();
                e.set_coeff(0, a.get(i, j));
                if i == j {
                    e.set_coeff(1, true);
                }
                term = term.mul(&e);
            }
            total.add_assign(&term);
            // next permutation
            let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
            let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
        total
    }

    fn arb_square(n: usize) -> impl Strategy<Value = BitMatrix> {
        proptest::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
            let mut a = BitMatrix::zeros(n, n);
            for (idx, b) in bits.into_iter().enumerate() {
                a.set(idx / n, idx % n, b);
            }
            a
        })
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(char_poly(&BitMatrix::identity(1)).unwrap(), "x + 1".parse().unwrap());
        let f = BitMatrix::from_rows(&["11", "10"]).unwrap();
        assert_eq!(char_poly(&f).unwrap(), "x^2 + x + 1".parse().unwrap());
        assert!(matches!(char_poly(&BitMatrix::zeros(2, 3)), Err(Gf2Error::NotSquare(2, 3))));
        // zero leading pivot forces a row swap
        let z = BitMatrix::from_rows(&["010", "001", "100"]).unwrap();
        assert_eq!(char_poly(&z).unwrap(), "x^3 + 1".parse().unwrap());
    }

    #[test]
    fn symplectic_product_examples() {
        let z1 = PauliVector::new(1, 1, 0);
        let x1 = PauliVector::new(1, 0, 1);
        assert!(!symplectic_product(z1, z1).unwrap());
        assert!(symplectic_product(z1, x1).unwrap());
        assert!(symplectic_product(z1, PauliVector::new(2, 1, 0)).is_err());
    }

    #[test]
    fn symplectic_product_bilinear_exhaustive() {
        let m = 2;
        for a in 0u64..16 {
            for b in 0u64..16 {
                let pab = symplectic_product_mask(a, b, m);
                assert_eq!(pab, symplectic_product_mask(b, a, m));
                for c in 0u64..16 {
                    let lhs = symplectic_product_mask(a ^ b, c, m);
                    assert_eq!(lhs, symplectic_product_mask(a, c, m) ^ symplectic_product_mask(b, c, m));
                }
            }
        }
    }

    #[test]
    fn pauli_labels() {
        let v = PauliVector::parse_label("IYXZ").unwrap();
        assert_eq!(v.label(), "IYXZ");
        assert_eq!(PauliVector::from_mask(4, v.to_mask()), v);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn char_poly_matches_leibniz(a in arb_square(5)) {
            prop_assert_eq!(char_poly(&a).unwrap(), leibniz_char_poly(&a));
        }

        #[test]
        fn hamilton_cayley(a in arb_square(16)) {
            let chi = char_poly(&a).unwrap();
            prop_assert_eq!(chi.degree(), Some(16));
            prop_assert!(chi.eval_matrix(&a).unwrap().is_zero());
        }
    }
}
