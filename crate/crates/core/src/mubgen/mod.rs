//! Pauli classes, standard forms and the explicit unitary generating a cyclic MUB set.

mod complex;

pub use complex::ComplexMatrix;
pub use num_complex::Complex64;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibpoly::fib_pair_matrix;
use crate::gf2core::{char_poly, BitMatrix, BigUint, Gf2Error, PauliVector};

#[derive(Debug, Error)]
pub enum MubError {
    #[error("classes do not partition the nonzero Pauli vectors: {0}")]
    PartitionFailure(String),
    #[error("generator has neither invertible block; not a valid class")]
    NotStandardizable,
    #[error("m = {0} exceeds the limit ({1}) for this operation")]
    TooLarge(usize, usize),
    #[error("tr(P H) vanishes; B does not yield a cyclic unitary")]
    ZeroTrace,
    #[error("F_{0}(B) is singular")]
    SingularFibonacci(u64),
    #[error("class index {0} out of range")]
    BadIndex(u64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

pub const MATERIALIZE_MAX_M: usize = 12;
pub const DENSE_MAX_M: usize = 5;

/// The d+1 generators G_j = C^j G0 and, for small m, the classes they span.
#[derive(Debug, Clone)]
pub struct PauliClassSet {
    pub m: usize,
    pub generators: Vec<BitMatrix>,
    /// packed (z | x) masks, one list per class
    classes: Option<Vec<Vec<u64>>>,
}

impl PauliClassSet {
    pub fn d(&self) -> u64 {
        1 << self.m
    }

    pub fn is_materialized(&self) -> bool {
        self.classes.is_some()
    }

    pub fn class_masks(&self, j: usize) -> Option<&[u64]> {
        self.classes.as_ref().map(|c| c[j].as_slice())
    }

    pub fn class(&self, j: usize) -> Option<Vec<PauliVector>> {
        self.class_masks(j).map(|c| c.iter().map(|&v| PauliVector::from_mask(self.m, v)).collect())
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

/// Nonzero elements of the column space of a 2m×m generator, in Gray-code order.
pub fn span_masks(g: &BitMatrix) -> Vec<u64> {
    let cols: Vec<u64> = (0..g.cols()).map(|j| g.col_mask(j)).collect();
    let mut out = Vec::with_capacity((1usize << cols.len()) - 1);
    let mut acc = 0u64;
    for i in 1u64..1 << cols.len() {
        acc ^= cols[i.trailing_zeros() as usize];
        out.push(acc);
    }
    out
}

pub fn generate_classes(c: &BitMatrix, g0: &BitMatrix) -> Result<PauliClassSet, MubError> {
    let m = g0.cols();
    if c.rows() != 2 * m || c.cols() != 2 * m || g0.rows() != 2 * m {
        return Err(MubError::Shape(format!("C is {}x{}, G0 is {}x{}", c.rows(), c.cols(), g0.rows(), g0.cols())));
    }
    if m > 20 {
        return Err(MubError::TooLarge(m, 20));
    }
    if g0.rank() != m {
        return Err(MubError::PartitionFailure("G0 lacks full column rank".into()));
    }
    let d = 1usize << m;
    let mut generators = Vec::with_capacity(d + 1);
    let mut g = g0.clone();
    for _ in 0..=d {
        let next = c.mul(&g)?;
        generators.push(g);
        g = next;
    }
    let classes = if m <= MATERIALIZE_MAX_M {
        let mut seen = vec![0u64; (1usize << (2 * m)).div_ceil(64)];
        let mut all = Vec::with_capacity(d + 1);
        for (j, gj) in generators.iter().enumerate() {
            if gj.rank() != m {
                return Err(MubError::PartitionFailure(format!("G_{j} is rank deficient")));
            }
            let span = span_masks(gj);
            for &v in &span {
                let (w, b) = (v as usize / 64, v % 64);
                if seen[w] >> b & 1 == 1 {
                    return Err(MubError::PartitionFailure(format!("class {j} overlaps an earlier class")));
                }
                seen[w] |= 1 << b;
            }
            all.push(span);
        }
        Some(all)
    } else {
        None
    };
    Ok(PauliClassSet { m, generators, classes })
}

/// (Gz Gx⁻¹, I)ᵗ when Gx is invertible, else (I, Gx Gz⁻¹)ᵗ.
pub fn standard_form(g: &BitMatrix) -> Result<BitMatrix, MubError> {
    let m = g.cols();
    if g.rows() != 2 * m {
        return Err(MubError::Shape(format!("generator is {}x{}", g.rows(), m)));
    }
    let gz = g.block(0, 0, m, m);
    let gx = g.block(m, 0, m, m);
    if let Some(inv) = gx.inverse()? {
        return Ok(g.mul(&inv)?);
    }
    if let Some(inv) = gz.inverse()? {
        return Ok(g.mul(&inv)?);
    }
    Err(MubError::NotStandardizable)
}

/// Canonical key for a column space: RREF of the transposed generator.
pub fn column_space_key(g: &BitMatrix) -> BitMatrix {
    g.transpose().rref()
}

fn check_dense(m: usize) -> Result<(), MubError> {
    if m > DENSE_MAX_M {
        Err(MubError::TooLarge(m, DENSE_MAX_M))
    } else {
        Ok(())
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// ZX(a) = ⊗_k (−i)^{z_k x_k} Z^{z_k} X^{x_k}; qubit k is bit k of the basis index.
pub fn pauli_unitary(a: PauliVector) -> Result<ComplexMatrix, MubError> {
    check_dense(a.m)?;
    let d = 1usize << a.m;
    let mut u = ComplexMatrix::zeros(d);
    let base = 4 - (a.z & a.x).count_ones() % 4; // (−i)^n = i^{4−n}
    for j in 0..d {
        let target = j ^ a.x as usize;
        let sign = 2 * ((a.z as usize & target).count_ones() % 2) as u32;
        u.set(target, j, i_pow(base + sign));
    }
    Ok(u)
}

/// Exponent e with p_j = i^e: p_j = (−i)^{⟨j|B|j⟩ mod 4} (−1)^{Σ b_kk j_k}.
pub fn phase_exponent(b: &BitMatrix, j: u64) -> u32 {
    let m = b.rows();
    let mut quad = 0u32;
    let mut diag = 0u32;
    for k in 0..m {
        if j >> k & 1 == 0 {
            continue;
        }
        for l in 0..m {
            if j >> l & 1 == 1 && b.get(k, l) {
                quad += 1;
            }
        }
        if b.get(k, k) {
            diag += 1;
        }
    }
    (4 - quad % 4 + 2 * (diag % 2)) % 4
}

pub fn phase_vector(b: &BitMatrix) -> Result<Vec<Complex64>, MubError> {
    let m = b.rows();
    if m > 20 {
        return Err(MubError::TooLarge(m, 20));
    }
    Ok((0..1u64 << m).map(|j| i_pow(phase_exponent(b, j))).collect())
}

/// V = diag(p) · H̄^{⊗m} with the unnormalized Hadamard H̄ = [[1,1],[1,−1]].
pub fn build_v(b: &BitMatrix) -> Result<ComplexMatrix, MubError> {
    check_dense(b.rows())?;
    let p = phase_vector(b)?;
    Ok(phase_times_hadamard(&p))
}

fn phase_times_hadamard(p: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(p.len(), |i, j| if (i & j).count_ones() % 2 == 1 { -p[i] } else { p[i] })
}

/// U = V / (−tr V).
pub fn build_unitary(b: &BitMatrix) -> Result<ComplexMatrix, MubError> {
    if !b.is_symmetric() {
        return Err(MubError::Shape("B must be symmetric".into()));
    }
    let v = build_v(b)?;
    let tr = v.trace();
    if tr.norm() < 1e-9 {
        return Err(MubError::ZeroTrace);
    }
    Ok(v.scale(-1.0 / tr))
}

/// V_{2^k} from the chop-map recursion.
#[derive(Debug, Clone)]
pub enum RecursiveV {
    Dense(ComplexMatrix),
    Phases(Vec<Complex64>),
}

pub const RECURSIVE_DENSE_MAX_K: u32 = 2;
pub const RECURSIVE_PHASES_MAX_K: u32 = 4;
pub const RECURSIVE_LAZY_MAX_K: u32 = 11;

/// Phase of V_{2^k} at diagonal index `idx` (2^k bits, little-endian words), as a power of i.
/// P_{2m}[j·2^m + i] = (V_m)_{ij} = p_i (−1)^{i·j}.
pub fn recursive_phase_exponent(k: u32, idx: &[u64]) -> u32 {
    fn bit(idx: &[u64], n: usize) -> bool {
        idx.get(n / 64).is_some_and(|w| w >> (n % 64) & 1 == 1)
    }
    fn rec(k: u32, idx: &[u64], off: usize) -> u32 {
        if k == 0 {
            return if bit(idx, off) { 1 } else { 0 };
        }
        let half = 1usize << (k - 1);
        let mut dot = 0u32;
        for t in 0..half {
            if bit(idx, off + t) && bit(idx, off + half + t) {
                dot ^= 1;
            }
        }
        (rec(k - 1, idx, off) + 2 * dot) % 4
    }
    rec(k, idx, 0)
}

pub fn build_v_recursive(k: u32) -> Result<RecursiveV, MubError> {
    if k > RECURSIVE_PHASES_MAX_K {
        return Err(MubError::TooLarge(1 << k, 1 << RECURSIVE_PHASES_MAX_K));
    }
    // phases of V_1
    let mut p = vec![i_pow(0), i_pow(1)];
    for _ in 0..k {
        let dim = p.len();
        let mut next = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for (i, &pi) in p.iter().enumerate() {
                next.push(if (i & j).count_ones() % 2 == 1 { -pi } else { pi });
            }
        }
        p = next;
    }
    if k <= RECURSIVE_DENSE_MAX_K {
        Ok(RecursiveV::Dense(phase_times_hadamard(&p)))
    } else {
        Ok(RecursiveV::Phases(p))
    }
}

/// Chop map: concatenated columns of V.
pub fn chop(v: &ComplexMatrix) -> Vec<Complex64> {
    (0..v.dim()).flat_map(|j| v.column(j)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MubReport {
    pub bases: usize,
    pub max_deviation: f64,
    pub max_unitarity_error: f64,
    pub passed: bool,
}

/// Every cross-basis overlap must have modulus d^{−1/2}.
pub fn verify_mub(bases: &[ComplexMatrix], tol: f64) -> MubReport {
    let mut max_dev: f64 = 0.0;
    let mut max_unit: f64 = 0.0;
    for b in bases {
        max_unit = max_unit.max(b.mul(&b.adjoint()).max_diff(&ComplexMatrix::identity(b.dim())));
    }
    for (x, a) in bases.iter().enumerate() {
        let target = 1.0 / (a.dim() as f64).sqrt();
        for b in &bases[x + 1..] {
            let overlap = a.adjoint().mul(b);
            for i in 0..a.dim() {
                for j in 0..a.dim() {
                    max_dev = max_dev.max((overlap.get(i, j).norm() - target).abs());
                }
            }
        }
    }
    MubReport { bases: bases.len(), max_deviation: max_dev, max_unitarity_error: max_unit, passed: max_dev <= tol && max_unit <= tol }
}

/// {I, U, U², …, U^d}.
pub fn power_bases(u: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let d = u.dim();
    let mut out = vec![ComplexMatrix::identity(d)];
    for l in 1..=d {
        out.push(out[l - 1].mul(u));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// multiplicity of ω^r, ω = e^{2πi/(d+1)}, r = 0..d
    pub multiplicities: Vec<f64>,
    pub order_error: f64,
    pub trace: (f64, f64),
    pub passed: bool,
}

/// Are the eigenvalues of U the d nontrivial (d+1)-th roots of unity?
/// Since U^{d+1} = I, mult_r = (1/(d+1)) Σ_l ω^{−rl} tr(U^l).
pub fn spectrum_check(u: &ComplexMatrix, tol: f64) -> SpectrumReport {
    let d = u.dim();
    let n = d + 1;
    let mut traces = Vec::with_capacity(n);
    let mut p = ComplexMatrix::identity(d);
    for _ in 0..n {
        traces.push(p.trace());
        p = p.mul(u);
    }
    let order_error = p.max_diff(&ComplexMatrix::identity(d));
    let multiplicities: Vec<f64> = (0..n)
        .map(|r| {
            let s: Complex64 = traces
                .iter()
                .enumerate()
                .map(|(l, t)| t * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (r * l % n) as f64 / n as f64))
                .sum();
            s.re / n as f64
        })
        .collect();
    let passed = order_error <= tol
        && multiplicities[0].abs() <= tol
        && multiplicities[1..].iter().all(|&x| (x - 1.0).abs() <= tol);
    let tr = u.trace();
    SpectrumReport { multiplicities, order_error, trace: (tr.re, tr.im), passed }
}

/// l = 1: trace; l = 2: sum of all 2×2 principal minors.
pub fn trace_minor(v: &ComplexMatrix, l: usize) -> Option<Complex64> {
    match l {
        1 => Some(v.trace()),
        2 => {
            let n = v.dim();
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in i + 1..n {
                    s += v.get(i, i) * v.get(j, j) - v.get(i, j) * v.get(j, i);
                }
            }
            Some(s)
        }
        _ => None,
    }
}

/// Fibonacci stabilizer C = [[B, I], [I, 0]] and G0 = (I, 0)ᵗ.
fn fibonacci_pair(b: &BitMatrix) -> (BitMatrix, BitMatrix) {
    let m = b.rows();
    let id = BitMatrix::identity(m);
    let z = BitMatrix::zeros(m, m);
    (BitMatrix::from_blocks(b, &id, &id, &z).expect("square"), BitMatrix::vstack(&id, &z).expect("same width"))
}

/// A_l = [[I, F_{l+1}(B) F_l(B)⁻¹], [0, I]].
pub fn class_permutation_operator(l: u64, b: &BitMatrix) -> Result<BitMatrix, MubError> {
    let m = b.rows();
    let (fl, fl1) = fib_pair_matrix(&BigUint::from(l), b)?;
    let inv = fl.inverse()?.ok_or(MubError::SingularFibonacci(l))?;
    let top = fl1.mul(&inv)?;
    Ok(BitMatrix::from_blocks(&BitMatrix::identity(m), &top, &BitMatrix::zeros(m, m), &BitMatrix::identity(m))?)
}

/// Index permutation j ↦ π(j) with colspace(A G_j) = colspace(G_{π(j)}).
pub fn permutation_induced(op: &BitMatrix, generators: &[BitMatrix]) -> Result<Vec<usize>, MubError> {
    let keys: Vec<BitMatrix> = generators.iter().map(column_space_key).collect();
    let mut out = Vec::with_capacity(generators.len());
    for g in generators {
        let k = column_space_key(&op.mul(g)?);
        let idx = keys
            .iter()
            .position(|x| *x == k)
            .ok_or_else(|| MubError::PartitionFailure("operator does not permute the classes".into()))?;
        out.push(idx);
    }
    Ok(out)
}

pub fn class_permutation(l: u64, b: &BitMatrix) -> Result<Vec<usize>, MubError> {
    let m = b.rows();
    let d = 1u64 << m;
    if l == 0 || l > d {
        return Err(MubError::BadIndex(l));
    }
    let (c, g0) = fibonacci_pair(b);
    let set = generate_classes_unchecked(&c, &g0)?;
    permutation_induced(&class_permutation_operator(l, b)?, &set)
}

fn generate_classes_unchecked(c: &BitMatrix, g0: &BitMatrix) -> Result<Vec<BitMatrix>, MubError> {
    let d = 1usize << g0.cols();
    let mut out = Vec::with_capacity(d + 1);
    let mut g = g0.clone();
    for _ in 0..=d {
        let next = c.mul(&g)?;
        out.push(g);
        g = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    /// B' = s B sᵗ with s sᵗ = I; f = diag(s, s)
    Found { s: BitMatrix, f: BitMatrix },
    /// characteristic polynomials differ; no constructive map is attempted
    DifferentCharPoly,
    NotFound,
}

/// Exhaustive search for an orthogonal s with B' = s B sᵗ, m ≤ 4.
pub fn check_equivalence(b: &BitMatrix, b2: &BitMatrix) -> Result<Equivalence, MubError> {
    let m = b.rows();
    if m > 4 {
        return Err(MubError::TooLarge(m, 4));
    }
    if b2.rows() != m {
        return Err(MubError::Shape("B and B' differ in size".into()));
    }
    if char_poly(b)? != char_poly(b2)? {
        return Ok(Equivalence::DifferentCharPoly);
    }
    let id = BitMatrix::identity(m);
    for code in 0u64..1 << (m * m) {
        let mut s = BitMatrix::zeros(m, m);
        for idx in 0..m * m {
            s.set(idx / m, idx % m, code >> idx & 1 == 1);
        }
        let st = s.transpose();
        if s.mul(&st)? != id {
            continue;
        }
        if s.mul(b)?.mul(&st)? == *b2 {
            let z = BitMatrix::zeros(m, m);
            let f = BitMatrix::from_blocks(&s, &z, &z, &s)?;
            return Ok(Equivalence::Found { s, f });
        }
    }
    Ok(Equivalence::NotFound)
}

/// Orthonormal common eigenbasis of a commuting class given by a generator (m ≤ 5):
/// one vector per sign pattern of the generator columns.
pub fn class_eigenbasis(g: &BitMatrix) -> Result<Vec<Vec<Complex64>>, MubError> {
    let m = g.cols();
    check_dense(m)?;
    let d = 1usize << m;
    let paulis: Vec<ComplexMatrix> = (0..m)
        .map(|j| pauli_unitary(PauliVector::from_mask(m, g.col_mask(j))))
        .collect::<Result<_, _>>()?;
    let half = Complex64::new(0.5, 0.0);
    let mut out = Vec::with_capacity(d);
    for signs in 0..d {
        let mut proj = ComplexMatrix::identity(d);
        for (k, p) in paulis.iter().enumerate() {
            let s = if signs >> k & 1 == 1 { -1.0 } else { 1.0 };
            let factor = ComplexMatrix::from_fn(d, |i, j| {
                let id = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                (id + p.get(i, j) * s) * half
            });
            proj = proj.mul(&factor);
        }
        let (best, norm) = (0..d)
            .map(|j| (j, proj.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm < 1e-12 {
            return Err(MubError::PartitionFailure("class does not define a full eigenbasis".into()));
        }
        let scale = 1.0 / norm.sqrt();
        out.push(proj.column(best).into_iter().map(|z| z * scale).collect());
    }
    Ok(out)
}

/// Serializable description of a generated set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MubSet {
    pub m: usize,
    #[serde(rename = "C")]
    pub c: BitMatrix,
    #[serde(rename = "G0")]
    pub g0: BitMatrix,
    #[serde(default)]
    pub family: String,
    #[serde(default)]
    pub provenance: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub structure: Option<Vec<usize>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibpoly::anti_triangle;

    fn mat(rows: &[&str]) -> BitMatrix {
        BitMatrix::from_rows(rows).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const TOL: f64 = 1e-9;

    #[test]
    fn m1_classes_are_singletons() {
        let (cm, g0) = fibonacci_pair(&mat(&["1"]));
        let set = generate_classes(&cm, &g0).unwrap();
        let labels: Vec<String> = (0..3).map(|j| set.class(j).unwrap()[0].label()).collect();
        assert_eq!(labels, ["Z", "Y", "X"]);
    }

    #[test]
    fn m3_class_listing() {
        let b = mat(&["111", "110", "100"]);
        let (cm, g0) = fibonacci_pair(&b);
        let set = generate_classes(&cm, &g0).unwrap();
        let listing = [
            "IIZ IZI IZZ ZII ZIZ ZZI ZZZ",
            "IYX XXZ XZY YXY YZZ ZIX ZYI",
            "IZX XXY XYZ YIX YZI ZXZ ZYY",
            "IZY XIY XZI YXZ YYX ZXX ZYZ",
            "IIY IYI IYY YII YIY YYI YYY",
            "IXY XYX XZZ YYZ YZX ZIY ZXI",
            "IXZ XYY XZX YIZ YXI ZYX ZZY",
            "IYZ XIZ XYI YXX YZY ZXY ZZX",
            "IIX IXI IXX XII XIX XXI XXX",
        ];
        for (j, want) in listing.iter().enumerate() {
            let mut got: Vec<String> = set.class(j).unwrap().iter().map(|v| v.label()).collect();
            got.sort();
            assert_eq!(got.join(" "), *want, "class {j}");
        }
    }

    #[test]
    fn partition_failure_detected() {
        let (_, g0) = fibonacci_pair(&mat(&["10", "01"]));
        let id = BitMatrix::identity(4);
        assert!(matches!(generate_classes(&id, &g0), Err(MubError::PartitionFailure(_))));
    }

    #[test]
    fn standard_forms() {
        let b = mat(&["11", "10"]);
        let (cm, g0) = fibonacci_pair(&b);
        let set = generate_classes(&cm, &g0).unwrap();
        assert_eq!(standard_form(&g0).unwrap(), g0);
        let y = BitMatrix::vstack(&BitMatrix::identity(2), &BitMatrix::identity(2)).unwrap();
        assert_eq!(standard_form(&set.generators[2]).unwrap(), y);
        // Z-blocks of G_1..G_4 together with 0 form a field
        let mut blocks: Vec<BitMatrix> = set.generators[1..].iter().map(|g| standard_form(g).unwrap().block(0, 0, 2, 2)).collect();
        blocks.push(BitMatrix::zeros(2, 2));
        for a in &blocks {
            for b in &blocks {
                assert!(blocks.contains(&a.add(b).unwrap()));
            }
        }
        assert!(standard_form(&BitMatrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn pauli_matrices() {
        let z = pauli_unitary(PauliVector::new(1, 1, 0)).unwrap();
        assert!(z.approx_eq(&ComplexMatrix::from_fn(2, |i, j| if i == j { c(if i == 0 { 1.0 } else { -1.0 }, 0.0) } else { c(0.0, 0.0) }), 0.0));
        let y = pauli_unitary(PauliVector::new(1, 1, 1)).unwrap();
        assert_eq!(y.get(0, 1), c(0.0, -1.0));
        assert_eq!(y.get(1, 0), c(0.0, 1.0));
        assert!(pauli_unitary(PauliVector::new(6, 0, 0)).is_err());
        // Hilbert-Schmidt orthogonality for two qubits
        let all: Vec<ComplexMatrix> = (0..16).map(|v| pauli_unitary(PauliVector::from_mask(2, v)).unwrap()).collect();
        for (a, pa) in all.iter().enumerate() {
            for (b, pb) in all.iter().enumerate() {
                let t = pa.adjoint().mul(pb).trace();
                let want = if a == b { 4.0 } else { 0.0 };
                assert!((t - c(want, 0.0)).norm() < TOL);
            }
        }
    }

    #[test]
    fn v1_and_v2_match_displays() {
        let v1 = build_v(&mat(&["1"])).unwrap();
        let want1 = [[c(1., 0.), c(1., 0.)], [c(0., 1.), c(0., -1.)]];
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(v1.get(i, j), want1[i][j]);
            }
        }
        let (o, i, mi, mo) = (c(1., 0.), c(0., 1.), c(0., -1.), c(-1., 0.));
        let want2 = [[o, o, o, o], [i, mi, i, mi], [o, o, mo, mo], [mi, i, i, mi]];
        let v2 = build_v(&mat(&["11", "10"])).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                assert_eq!(v2.get(r, col), want2[r][col], "({r},{col})");
            }
        }
        assert_eq!(chop(&v1), vec![o, i, o, mi]);
        match build_v_recursive(1).unwrap() {
            RecursiveV::Dense(v) => assert!(v.approx_eq(&v2, 0.0)),
            _ => panic!(),
        }
    }

    #[test]
    fn recursive_v4_matches_fermat() {
        let b4 = crate::stabsearch::fermat_b(2).unwrap();
        let RecursiveV::Dense(v4) = build_v_recursive(2).unwrap() else { panic!() };
        assert!(v4.approx_eq(&build_v(&b4).unwrap(), TOL));
        let RecursiveV::Phases(p) = build_v_recursive(3).unwrap() else { panic!() };
        assert_eq!(p, phase_vector(&crate::stabsearch::fermat_b(3).unwrap()).unwrap());
        assert!(build_v_recursive(5).is_err());
    }

    #[test]
    fn lazy_phases_agree() {
        for k in 0..=3u32 {
            let b = crate::stabsearch::fermat_b(k).unwrap();
            for j in 0..1u64 << (1 << k) {
                assert_eq!(recursive_phase_exponent(k, &[j]), phase_exponent(&b, j), "k={k} j={j}");
            }
        }
        // k = 11 only needs the index bits
        let idx = vec![u64::MAX; 32];
        assert!(recursive_phase_exponent(11, &idx) < 4);
    }

    #[test]
    fn unitary_properties() {
        for b in [mat(&["1"]), mat(&["11", "10"]), anti_triangle(3), crate::stabsearch::fermat_b(2).unwrap()] {
            let m = b.rows();
            let d = 1usize << m;
            let u = build_unitary(&b).unwrap();
            assert!(u.is_unitary(TOL));
            assert!(u.pow(d as u64 + 1).approx_eq(&ComplexMatrix::identity(d), TOL), "m = {m}");
            assert!((u.trace() + c(1.0, 0.0)).norm() < TOL);
            assert!(spectrum_check(&u, 1e-6).passed);
            // entries are roots of unity times 2^{-m/2}
            let order = if m % 2 == 0 { 4 } else { 8 };
            for i in 0..d {
                for j in 0..d {
                    let z = u.get(i, j) * (d as f64).sqrt();
                    assert!((z.norm() - 1.0).abs() < TOL);
                    let k = z.arg() / (2.0 * std::f64::consts::PI / order as f64);
                    assert!((k - k.round()).abs() < 1e-6, "m={m} entry {z}");
                }
            }
        }
    }

    #[test]
    fn mub_report() {
        let u = build_unitary(&mat(&["1"])).unwrap();
        assert!(verify_mub(&power_bases(&u), TOL).max_deviation < 1e-12);
        let h = ComplexMatrix::from_fn(2, |i, j| c(if i & j == 1 { -1.0 } else { 1.0 } / 2f64.sqrt(), 0.0));
        assert!(verify_mub(&[ComplexMatrix::identity(2), h], TOL).passed);
        assert!(!verify_mub(&[ComplexMatrix::identity(2), ComplexMatrix::identity(2)], TOL).passed);
        for b in [mat(&["11", "10"]), anti_triangle(3)] {
            assert!(verify_mub(&power_bases(&build_unitary(&b).unwrap()), TOL).passed);
        }
    }

    #[test]
    fn trace_identities_m2() {
        let v = build_v(&mat(&["11", "10"])).unwrap();
        assert!((trace_minor(&v, 1).unwrap() - c(0.0, -2.0)).norm() < TOL);
        assert!((trace_minor(&v, 2).unwrap() - c(-4.0, 0.0)).norm() < TOL);
        assert!(trace_minor(&v, 3).is_none());
        let v4 = build_v(&crate::stabsearch::fermat_b(2).unwrap()).unwrap();
        assert!((trace_minor(&v4, 1).unwrap() - c(0.0, -4.0)).norm() < TOL);
    }

    #[test]
    fn conjugation_shifts_classes() {
        for b in [mat(&["1"]), mat(&["11", "10"]), anti_triangle(3)] {
            let (cm, g0) = fibonacci_pair(&b);
            let set = generate_classes(&cm, &g0).unwrap();
            let u = build_unitary(&b).unwrap();
            let d = set.d() as usize;
            for j in 0..=d {
                let next: Vec<u64> = set.class_masks((j + 1) % (d + 1)).unwrap().to_vec();
                for &a in set.class_masks(j).unwrap() {
                    let p = pauli_unitary(PauliVector::from_mask(set.m, a)).unwrap();
                    let conj = u.mul(&p).mul(&u.adjoint());
                    // find the Pauli it is proportional to
                    let hit = next.iter().any(|&q| {
                        let pq = pauli_unitary(PauliVector::from_mask(set.m, q)).unwrap();
                        (pq.adjoint().mul(&conj).trace().norm() - d as f64).abs() < TOL
                    });
                    assert!(hit, "m={} class {j}", set.m);
                }
            }
        }
    }

    #[test]
    fn columns_of_powers_are_eigenvectors() {
        for b in [mat(&["11", "10"]), anti_triangle(3)] {
            let (cm, g0) = fibonacci_pair(&b);
            let set = generate_classes(&cm, &g0).unwrap();
            let u = build_unitary(&b).unwrap();
            for (l, ul) in power_bases(&u).iter().enumerate() {
                for &a in set.class_masks(l).unwrap() {
                    let p = pauli_unitary(PauliVector::from_mask(set.m, a)).unwrap();
                    for col in 0..ul.dim() {
                        let v = ul.column(col);
                        let pv = p.mul_vec(&v);
                        let lambda: Complex64 = v.iter().zip(&pv).map(|(x, y)| x.conj() * y).sum();
                        let err = pv.iter().zip(&v).map(|(y, x)| (y - lambda * x).norm()).fold(0.0, f64::max);
                        assert!(err < TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn permutations() {
        let b = mat(&["11", "10"]);
        let p1 = class_permutation(1, &b).unwrap();
        assert_eq!(p1, vec![0, 4, 3, 2, 1]);
        for l in 1..=4 {
            assert_eq!(class_permutation(l, &b).unwrap()[0], 0);
        }
        let (cm, g0) = fibonacci_pair(&b);
        let gens = generate_classes(&cm, &g0).unwrap().generators;
        assert_eq!(permutation_induced(&cm, &gens).unwrap(), vec![1, 2, 3, 4, 0]);
        assert!(class_permutation(0, &b).is_err());
    }

    #[test]
    fn equivalences() {
        let b = mat(&["11", "10"]);
        assert!(matches!(check_equivalence(&b, &b).unwrap(), Equivalence::Found { s, .. } if s.is_identity()));
        let b2 = mat(&["01", "11"]);
        let Equivalence::Found { s, f } = check_equivalence(&b, &b2).unwrap() else { panic!() };
        assert_eq!(s.mul(&b).unwrap().mul(&s.transpose()).unwrap(), b2);
        assert!(f.is_symplectic().unwrap());
        assert_eq!(check_equivalence(&b, &BitMatrix::identity(2)).unwrap(), Equivalence::DifferentCharPoly);
    }

    #[test]
    fn eigenbasis_is_orthonormal() {
        let g = BitMatrix::vstack(&BitMatrix::identity(2), &BitMatrix::identity(2)).unwrap();
        let basis = class_eigenbasis(&g).unwrap();
        for (a, u) in basis.iter().enumerate() {
            for (b, v) in basis.iter().enumerate() {
                let ip: Complex64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
                assert!((ip.norm() - if a == b { 1.0 } else { 0.0 }).abs() < TOL);
            }
        }
    }
}
