//! Compile symplectic stabilizer matrices into circuits over {H, S, CZ, CX}.
//!
//! Gates apply left to right to states. Each gate has a 2m×2m symplectic matrix
//! acting on column vectors a = (z; x); a circuit g1, ..., gn therefore has
//! symplectic matrix S_gn ⋯ S_g1, with later gates multiplying on the left.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::gf2core::{BitMatrix, Gf2Error, PauliVector};
use crate::mubgen::{pauli_unitary, Complex64, ComplexMatrix, DENSE_MAX_M};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("gate {0} addresses a qubit outside 0..{1}")]
    BadQubit(Gate, usize),
    #[error("gate {0} uses the same qubit twice")]
    RepeatedQubit(Gate),
    #[error("lower-left block is singular and no Hadamard pre-pass fixes it")]
    UBlockSingular,
    #[error("input is not symplectic")]
    NotSymplectic,
    #[error("matrix must be symmetric")]
    NotSymmetric,
    #[error("circuit line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("m = {0} is too large for dense simulation")]
    TooLarge(usize),
    #[error("power 2^{power}: {source}")]
    Power { power: usize, source: Box<CompileError> },
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    H(usize),
    S(usize),
    CZ(usize, usize),
    /// control, target
    CX(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) => vec![q],
            Gate::CZ(a, b) | Gate::CX(a, b) => vec![a, b],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::S(_) => "S",
            Gate::CZ(..) => "CZ",
            Gate::CX(..) => "CX",
        }
    }

    fn check(&self, m: usize) -> Result<(), CompileError> {
        let q = self.qubits();
        if q.iter().any(|&x| x >= m) {
            return Err(CompileError::BadQubit(*self, m));
        }
        if q.len() == 2 && q[0] == q[1] {
            return Err(CompileError::RepeatedQubit(*self));
        }
        Ok(())
    }

    /// Left-multiply `a` by this gate's symplectic matrix (row operations).
    fn left_apply(&self, a: &mut BitMatrix, m: usize) {
        match *self {
            Gate::H(i) => a.swap_rows(i, m + i),
            Gate::S(i) => a.xor_row(i, m + i),
            Gate::CX(c, t) => {
                a.xor_row(c, t);
                a.xor_row(m + t, m + c);
            }
            Gate::CZ(c, t) => {
                a.xor_row(c, m + t);
                a.xor_row(t, m + c);
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::S(q) => write!(f, "S {q}"),
            Gate::CZ(a, b) => write!(f, "CZ {a} {b}"),
            Gate::CX(c, t) => write!(f, "CX {c} {t}"),
        }
    }
}

impl FromStr for Gate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        let q = |i: usize| -> Result<usize, String> {
            toks.get(i).ok_or_else(|| format!("missing qubit in {s:?}"))?.parse().map_err(|_| format!("bad qubit in {s:?}"))
        };
        let g = match toks.first().copied() {
            Some("H") => Gate::H(q(1)?),
            Some("S") => Gate::S(q(1)?),
            Some("CZ") => Gate::CZ(q(1)?, q(2)?),
            Some("CX") => Gate::CX(q(1)?, q(2)?),
            _ => return Err(format!("unknown gate {s:?}")),
        };
        if toks.len() != g.qubits().len() + 1 {
            return Err(format!("wrong arity in {s:?}"));
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub m: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(m: usize) -> Self {
        Circuit { m, gates: Vec::new() }
    }

    pub fn with_gates(m: usize, gates: Vec<Gate>) -> Result<Self, CompileError> {
        for g in &gates {
            g.check(m)?;
        }
        Ok(Circuit { m, gates })
    }

    pub fn push(&mut self, g: Gate) -> Result<(), CompileError> {
        g.check(self.m)?;
        self.gates.push(g);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) {
        self.gates.extend_from_slice(&other.gates);
    }

    /// (#S, #CZ, #H, #CX)
    pub fn counts(&self) -> (usize, usize, usize, usize) {
        let mut c = (0, 0, 0, 0);
        for g in &self.gates {
            match g {
                Gate::S(_) => c.0 += 1,
                Gate::CZ(..) => c.1 += 1,
                Gate::H(_) => c.2 += 1,
                Gate::CX(..) => c.3 += 1,
            }
        }
        c
    }

    /// S_gn ⋯ S_g1.
    pub fn symplectic(&self) -> BitMatrix {
        let mut a = BitMatrix::identity(2 * self.m);
        for g in &self.gates {
            g.left_apply(&mut a, self.m);
        }
        a
    }

    /// S_g1 ⋯ S_gn: the product in drawn order, equal to the inverse of `symplectic`.
    pub fn adjoint_symplectic(&self) -> BitMatrix {
        let mut a = BitMatrix::identity(2 * self.m);
        for g in self.gates.iter().rev() {
            g.left_apply(&mut a, self.m);
        }
        a
    }

    pub fn reversed(&self) -> Circuit {
        Circuit { m: self.m, gates: self.gates.iter().rev().copied().collect() }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.m);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, CompileError> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CompileError::Parse { line: idx + 1, msg };
            match circuit.as_mut() {
                None => {
                    let m = line
                        .strip_prefix("qubits")
                        .and_then(|r| r.trim().parse::<usize>().ok())
                        .ok_or_else(|| err("expected \"qubits <m>\"".into()))?;
                    circuit = Some(Circuit::new(m));
                }
                Some(c) => {
                    let g: Gate = line.parse().map_err(err)?;
                    c.push(g).map_err(|e| err(e.to_string()))?;
                }
            }
        }
        circuit.ok_or(CompileError::Parse { line: 0, msg: "empty circuit file".into() })
    }
}

/// Single gate as a 2m×2m matrix.
pub fn gate_symplectic(g: Gate, m: usize) -> Result<BitMatrix, CompileError> {
    g.check(m)?;
    let mut a = BitMatrix::identity(2 * m);
    g.left_apply(&mut a, m);
    Ok(a)
}

/// CX gates K (in order) with K·C = C' and the lower-left block of C' equal to I.
pub fn gauss_reduce(c: &BitMatrix) -> Result<(Vec<Gate>, BitMatrix), CompileError> {
    let m = half(c)?;
    let mut a = c.clone();
    let mut gates = Vec::new();
    let mut apply = |g: Gate, a: &mut BitMatrix| {
        g.left_apply(a, m);
        gates.push(g);
    };
    // CX(c, t) adds row c of u to row t
    for k in 0..m {
        if !a.get(m + k, k) {
            let r = (k + 1..m).find(|&r| a.get(m + r, k)).ok_or(CompileError::UBlockSingular)?;
            apply(Gate::CX(r, k), &mut a);
        }
        for i in 0..m {
            if i != k && a.get(m + i, k) {
                apply(Gate::CX(k, i), &mut a);
            }
        }
    }
    Ok((gates, a))
}

fn half(c: &BitMatrix) -> Result<usize, CompileError> {
    if !c.is_square() || c.rows() % 2 != 0 {
        return Err(CompileError::NotSymplectic);
    }
    Ok(c.rows() / 2)
}

/// Si on diagonal ones, CZ on upper-triangle ones, ascending qubit order.
fn phase_layer(x: &BitMatrix, out: &mut Vec<Gate>) {
    let m = x.rows();
    for i in 0..m {
        if x.get(i, i) {
            out.push(Gate::S(i));
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            if x.get(i, j) {
                out.push(Gate::CZ(i, j));
            }
        }
    }
}

/// C' = [[s', t'], [I, v']] as P(v'), H on every qubit, P(s').
pub fn decompose(c: &BitMatrix) -> Result<Circuit, CompileError> {
    let m = half(c)?;
    let s = c.block(0, 0, m, m);
    let t = c.block(0, m, m, m);
    let u = c.block(m, 0, m, m);
    let v = c.block(m, m, m, m);
    if !u.is_identity() {
        return Err(CompileError::UBlockSingular);
    }
    if !s.is_symmetric() || !v.is_symmetric() || t != BitMatrix::identity(m).add(&s.mul(&v)?)? {
        return Err(CompileError::NotSymplectic);
    }
    let mut gates = Vec::new();
    phase_layer(&v, &mut gates);
    gates.extend((0..m).map(Gate::H));
    phase_layer(&s, &mut gates);
    Ok(Circuit { m, gates })
}

fn compile_invertible_u(c: &BitMatrix) -> Result<Circuit, CompileError> {
    let (cx, reduced) = gauss_reduce(c)?;
    let mut circuit = decompose(&reduced)?;
    circuit.gates.extend(cx.into_iter().rev());
    Ok(circuit)
}

/// Any symplectic C. When u is singular, C·H_Q is tried for qubit subsets Q
/// (smallest first) and the H_Q gates are prepended.
pub fn compile(c: &BitMatrix) -> Result<Circuit, CompileError> {
    let m = half(c)?;
    if !c.is_symplectic()? {
        return Err(CompileError::NotSymplectic);
    }
    if c.block(m, 0, m, m).is_invertible() {
        return compile_invertible_u(c);
    }
    if m > 20 {
        return Err(CompileError::UBlockSingular);
    }
    let mut subsets: Vec<u64> = (1u64..1 << m).collect();
    subsets.sort_by_key(|q| (q.count_ones(), *q));
    for q in subsets {
        let hq = Circuit { m, gates: (0..m).filter(|i| q >> i & 1 == 1).map(Gate::H).collect() };
        let mut swapped = c.clone();
        // C·H_Q swaps column i with column m+i
        swapped = swapped.transpose();
        for g in &hq.gates {
            g.left_apply(&mut swapped, m);
        }
        let swapped = swapped.transpose();
        if swapped.block(m, 0, m, m).is_invertible() {
            let mut out = hq;
            out.extend(&compile_invertible_u(&swapped)?);
            return Ok(out);
        }
    }
    Err(CompileError::UBlockSingular)
}

/// H layer, then P(B): symplectic matrix [[B, I], [I, 0]].
pub fn compile_fibonacci(b: &BitMatrix) -> Result<Circuit, CompileError> {
    if !b.is_symmetric() {
        return Err(CompileError::NotSymmetric);
    }
    let m = b.rows();
    let mut gates: Vec<Gate> = (0..m).map(Gate::H).collect();
    phase_layer(b, &mut gates);
    Ok(Circuit { m, gates })
}

/// C0 = [[I, 0], [g, I]] = H·P(g)·H, with H pairs dropped on qubits g leaves untouched.
pub fn compile_inhomogeneous(g0x: &BitMatrix) -> Result<Circuit, CompileError> {
    if !g0x.is_symmetric() {
        return Err(CompileError::NotSymmetric);
    }
    let m = g0x.rows();
    let touched: Vec<usize> = (0..m).filter(|&i| g0x.row_mask(i) != 0).collect();
    let mut gates: Vec<Gate> = touched.iter().map(|&q| Gate::H(q)).collect();
    phase_layer(g0x, &mut gates);
    gates.extend(touched.iter().map(|&q| Gate::H(q)));
    Ok(Circuit { m, gates })
}

/// Dense unitary of the circuit, gates applied in order (m ≤ 5).
pub fn simulate(circuit: &Circuit) -> Result<ComplexMatrix, CompileError> {
    let m = circuit.m;
    if m > DENSE_MAX_M {
        return Err(CompileError::TooLarge(m));
    }
    let d = 1usize << m;
    let mut u = ComplexMatrix::identity(d);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for g in &circuit.gates {
        for col in 0..d {
            let mut v = u.column(col);
            match *g {
                Gate::H(q) => {
                    let bit = 1 << q;
                    for j in 0..d {
                        if j & bit == 0 {
                            let (a, b) = (v[j], v[j | bit]);
                            v[j] = (a + b) * r;
                            v[j | bit] = (a - b) * r;
                        }
                    }
                }
                Gate::S(q) => {
                    for (j, x) in v.iter_mut().enumerate() {
                        if j >> q & 1 == 1 {
                            *x *= Complex64::i();
                        }
                    }
                }
                Gate::CZ(a, b) => {
                    for (j, x) in v.iter_mut().enumerate() {
                        if j >> a & 1 == 1 && j >> b & 1 == 1 {
                            *x = -*x;
                        }
                    }
                }
                Gate::CX(c, t) => {
                    for j in 0..d {
                        if j >> c & 1 == 1 && j >> t & 1 == 0 {
                            v.swap(j, j | 1 << t);
                        }
                    }
                }
            }
            for (i, x) in v.into_iter().enumerate() {
                u.set(i, col, x);
            }
        }
    }
    Ok(u)
}

/// max |a − e^{iφ} b| over the best global phase.
pub fn phase_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let overlap: Complex64 = (0..a.dim()).flat_map(|i| (0..a.dim()).map(move |j| (i, j))).map(|(i, j)| b.get(i, j).conj() * a.get(i, j)).sum();
    if overlap.norm() == 0.0 {
        return f64::INFINITY;
    }
    let phase = overlap / overlap.norm();
    a.max_diff(&b.scale(phase))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileReport {
    pub symplectic_ok: bool,
    /// None when m is too large for dense simulation
    pub unitary_ok: Option<bool>,
}

impl CompileReport {
    pub fn passed(&self) -> bool {
        self.symplectic_ok && self.unitary_ok.unwrap_or(true)
    }
}

/// Symplectic product must equal C; for m ≤ 4 the simulated unitary must map
/// ZX(e_i) to a multiple of ZX(C e_i) for every basis vector e_i.
pub fn verify_compilation(c: &BitMatrix, circuit: &Circuit, tol: f64) -> Result<CompileReport, CompileError> {
    let m = circuit.m;
    let symplectic_ok = circuit.symplectic() == *c;
    let unitary_ok = if m <= 4 {
        let u = simulate(circuit)?;
        let ud = u.adjoint();
        let d = (1usize << m) as f64;
        let ok = (0..2 * m).all(|i| {
            let e = 1u64 << i;
            let image = c.mul_mask(e);
            let p = pauli_unitary(PauliVector::from_mask(m, e)).expect("m <= 4");
            let q = pauli_unitary(PauliVector::from_mask(m, image)).expect("m <= 4");
            let conj = u.mul(&p).mul(&ud);
            (q.adjoint().mul(&conj).trace().norm() - d).abs() <= tol * d
        });
        Some(ok)
    } else {
        None
    };
    Ok(CompileReport { symplectic_ok, unitary_ok })
}

/// Circuits for C^{2^i}, i = 0..m−1. Basis l is reached by composing the set bits
/// of l; l = d = 2^m uses every circuit plus circuit 0 once more.
#[derive(Debug, Clone)]
pub struct PowerPlan {
    pub m: usize,
    pub circuits: Vec<Circuit>,
}

impl PowerPlan {
    /// Indices of the circuits applied to reach basis l.
    pub fn schedule(&self, l: u64) -> Vec<usize> {
        let d = 1u64 << self.m;
        if l == d {
            let mut all: Vec<usize> = (0..self.m).collect();
            all.push(0);
            return all;
        }
        (0..self.m).filter(|&i| l >> i & 1 == 1).collect()
    }

    pub fn compose(&self, l: u64) -> Circuit {
        let mut out = Circuit::new(self.m);
        for i in self.schedule(l) {
            out.extend(&self.circuits[i]);
        }
        out
    }
}

pub fn binary_power_plan(c: &BitMatrix) -> Result<PowerPlan, CompileError> {
    let m = half(c)?;
    let mut powers = vec![c.clone()];
    for i in 1..m {
        powers.push(powers[i - 1].mul(&powers[i - 1])?);
    }
    let circuits: Vec<Result<Circuit, CompileError>> = powers.par_iter().map(compile).collect();
    let circuits = circuits
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CompileError::Power { power: i, source: Box::new(e) }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PowerPlan { m, circuits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mubgen::build_unitary;
    use crate::stabsearch::{fermat_b, fibonacci_stabilizer, group_stabilizer};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: &[&str]) -> BitMatrix {
        BitMatrix::from_rows(rows).unwrap()
    }

    fn random_symplectic(m: usize, rng: &mut impl Rng, len: usize) -> BitMatrix {
        let mut c = Circuit::new(m);
        for _ in 0..len {
            let a = rng.gen_range(0..m);
            let b = (a + rng.gen_range(1..m.max(2))) % m;
            let g = match rng.gen_range(0..4) {
                0 => Gate::H(a),
                1 => Gate::S(a),
                2 if m > 1 => Gate::CZ(a, b),
                3 if m > 1 => Gate::CX(a, b),
                _ => Gate::H(a),
            };
            c.push(g).unwrap();
        }
        c.symplectic()
    }

    #[test]
    fn gate_matrices() {
        assert_eq!(gate_symplectic(Gate::H(0), 1).unwrap(), mat(&["01", "10"]));
        assert_eq!(gate_symplectic(Gate::S(0), 1).unwrap(), mat(&["11", "01"]));
        assert_eq!(gate_symplectic(Gate::CX(0, 1), 2).unwrap(), mat(&["1100", "0100", "0010", "0011"]));
        assert_eq!(gate_symplectic(Gate::CZ(0, 1), 2).unwrap(), mat(&["1001", "0110", "0010", "0001"]));
        assert!(gate_symplectic(Gate::CX(0, 0), 2).is_err());
        assert!(gate_symplectic(Gate::H(2), 2).is_err());
        for g in [Gate::H(1), Gate::S(0), Gate::CX(1, 2), Gate::CZ(0, 2)] {
            let s = gate_symplectic(g, 3).unwrap();
            assert!(s.is_symplectic().unwrap());
            assert!(s.mul(&s).unwrap().is_identity());
        }
    }

    #[test]
    fn text_roundtrip() {
        let c = Circuit::with_gates(3, vec![Gate::H(0), Gate::S(2), Gate::CZ(0, 1), Gate::CX(2, 0)]).unwrap();
        let text = c.to_text();
        assert_eq!(text, "qubits 3\nH 0\nS 2\nCZ 0 1\nCX 2 0\n");
        assert_eq!(Circuit::from_text(&text).unwrap(), c);
        let err = Circuit::from_text("qubits 2\n# note\nH 0\nCZ 0 5\n").unwrap_err();
        assert!(matches!(err, CompileError::Parse { line: 4, .. }), "{err}");
        assert!(matches!(Circuit::from_text("H 0\n"), Err(CompileError::Parse { line: 1, .. })));
    }

    #[test]
    fn gauss_examples() {
        let fib = fibonacci_stabilizer(&mat(&["11", "10"]));
        assert!(gauss_reduce(&fib).unwrap().0.is_empty());
        // u = swapped identity
        let c = Circuit::with_gates(2, vec![Gate::CX(0, 1), Gate::CX(1, 0), Gate::CX(0, 1), Gate::H(0), Gate::H(1)]).unwrap();
        let s = c.symplectic();
        assert_eq!(s.block(2, 0, 2, 2), mat(&["01", "10"]));
        let (cx, reduced) = gauss_reduce(&s).unwrap();
        assert_eq!(cx.len(), 3);
        assert!(reduced.block(2, 0, 2, 2).is_identity());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tried = 0;
        while tried < 50 {
            let c = random_symplectic(3, &mut rng, 30);
            if !c.block(3, 0, 3, 3).is_invertible() {
                continue;
            }
            tried += 1;
            let (cx, reduced) = gauss_reduce(&c).unwrap();
            assert!(cx.len() <= 9);
            let k = Circuit::with_gates(3, cx).unwrap().symplectic();
            assert_eq!(k.mul(&c).unwrap(), reduced);
            assert!(reduced.block(3, 0, 3, 3).is_identity());
        }
    }

    #[test]
    fn decompose_examples() {
        let b = mat(&["111", "110", "100"]);
        assert_eq!(decompose(&fibonacci_stabilizer(&b)).unwrap(), compile_fibonacci(&b).unwrap());
        let swap = fibonacci_stabilizer(&BitMatrix::zeros(3, 3));
        assert_eq!(decompose(&swap).unwrap().gates, vec![Gate::H(0), Gate::H(1), Gate::H(2)]);
        let mut bad = swap.clone();
        bad.flip(0, 4);
        assert!(matches!(decompose(&bad), Err(CompileError::NotSymplectic)));
    }

    #[test]
    fn paper_three_qubit_circuits() {
        let c234 = group_stabilizer(&mat(&["011", "001", "100"]), &mat(&["001", "010", "100"])).unwrap();
        let circ = compile(&c234).unwrap();
        assert_eq!(circ.symplectic(), c234);
        let mut got = circ.gates.clone();
        got.sort();
        let mut want = vec![Gate::CX(2, 0), Gate::CX(0, 2), Gate::CX(2, 0), Gate::S(0), Gate::S(2), Gate::CZ(1, 2), Gate::H(0), Gate::H(1), Gate::H(2)];
        want.sort();
        assert_eq!(circ.counts(), (2, 1, 3, 3));
        // the drawn circuit, multiplied in drawn order, gives the printed matrix
        let drawn = Circuit::with_gates(3, vec![Gate::CX(2, 0), Gate::CX(0, 2), Gate::CX(2, 0), Gate::S(0), Gate::S(2), Gate::CZ(1, 2), Gate::H(0), Gate::H(1), Gate::H(2)]).unwrap();
        assert_eq!(drawn.adjoint_symplectic(), c234);
        assert_eq!(got, want);
    }

    #[test]
    fn fibonacci_circuits() {
        let f = compile_fibonacci(&fermat_b(2).unwrap()).unwrap();
        assert_eq!(f.counts(), (1, 3, 4, 0));
        assert_eq!(compile_fibonacci(&BitMatrix::zeros(3, 3)).unwrap().counts(), (0, 0, 3, 0));
        assert_eq!(compile_fibonacci(&BitMatrix::identity(3)).unwrap().counts(), (3, 0, 3, 0));
        assert!(compile_fibonacci(&mat(&["01", "00"])).is_err());
        for k in 0..=4 {
            let b = fermat_b(k).unwrap();
            let m = b.rows();
            let circ = compile_fibonacci(&b).unwrap();
            assert_eq!(circ.counts(), (1, m - 1, m, 0), "k = {k}");
            assert_eq!(circ.symplectic(), fibonacci_stabilizer(&b));
        }
    }

    #[test]
    fn fibonacci_simulation_matches_unitary() {
        for b in [mat(&["1"]), mat(&["11", "10"]), mat(&["111", "110", "100"]), fermat_b(2).unwrap()] {
            let circ = compile_fibonacci(&b).unwrap();
            let u = simulate(&circ).unwrap();
            assert!(phase_distance(&u, &build_unitary(&b).unwrap()) < 1e-9);
            assert!(verify_compilation(&fibonacci_stabilizer(&b), &circ, 1e-9).unwrap().passed());
            // reordering inside the phase layer changes nothing
            let mut shuffled = circ.clone();
            let m = b.rows();
            shuffled.gates[m..].reverse();
            assert!(verify_compilation(&fibonacci_stabilizer(&b), &shuffled, 1e-9).unwrap().passed());
        }
    }

    #[test]
    fn simulate_basics() {
        let h = simulate(&Circuit::with_gates(1, vec![Gate::H(0)]).unwrap()).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h.get(1, 1).re + r).abs() < 1e-12);
        assert!(simulate(&Circuit::new(2)).unwrap().approx_eq(&ComplexMatrix::identity(4), 0.0));
        assert!(simulate(&Circuit::new(6)).is_err());
    }

    #[test]
    fn dropped_gate_is_detected() {
        let b = fermat_b(2).unwrap();
        let mut circ = compile_fibonacci(&b).unwrap();
        let pos = circ.gates.iter().position(|g| matches!(g, Gate::CZ(..))).unwrap();
        circ.gates.remove(pos);
        let rep = verify_compilation(&fibonacci_stabilizer(&b), &circ, 1e-9).unwrap();
        assert!(!rep.symplectic_ok);
        assert_eq!(rep.unitary_ok, Some(false));
    }

    #[test]
    fn inhomogeneous_circuits() {
        let g = mat(&["010", "100", "000"]);
        let circ = compile_inhomogeneous(&g).unwrap();
        assert_eq!(circ.gates, vec![Gate::H(0), Gate::H(1), Gate::CZ(0, 1), Gate::H(0), Gate::H(1)]);
        let c0 = BitMatrix::from_blocks(&BitMatrix::identity(3), &BitMatrix::zeros(3, 3), &g, &BitMatrix::identity(3)).unwrap();
        assert_eq!(circ.symplectic(), c0);
        assert!(compile_inhomogeneous(&BitMatrix::zeros(3, 3)).unwrap().gates.is_empty());
        let id = compile_inhomogeneous(&BitMatrix::identity(2)).unwrap();
        assert_eq!(id.gates, vec![Gate::H(0), Gate::H(1), Gate::S(0), Gate::S(1), Gate::H(0), Gate::H(1)]);
    }

    #[test]
    fn singular_u_prepass() {
        // C = identity has u = 0
        let c = BitMatrix::identity(4);
        let circ = compile(&c).unwrap();
        assert_eq!(circ.symplectic(), c);
        let mut bad = c.clone();
        bad.flip(0, 1);
        assert!(matches!(compile(&bad), Err(CompileError::NotSymplectic)));
    }

    #[test]
    fn power_plan() {
        let c = fibonacci_stabilizer(&mat(&["111", "110", "100"]));
        let plan = binary_power_plan(&c).unwrap();
        assert_eq!(plan.circuits.len(), 3);
        assert!(plan.compose(0).gates.is_empty());
        for l in 0..=8u64 {
            assert_eq!(plan.compose(l).symplectic(), c.pow_u64(l).unwrap(), "l = {l}");
            assert!(plan.schedule(l).len() <= 4);
        }
        let b10 = crate::fibpoly::anti_triangle(10);
        let plan10 = binary_power_plan(&fibonacci_stabilizer(&b10)).unwrap();
        assert_eq!(plan10.circuits.len(), 10);
        let total: usize = (0..=1024u64).map(|l| plan10.schedule(l).len()).sum();
        let mean = total as f64 / 1025.0;
        assert!((mean - 5.0).abs() < 0.1, "{mean}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn compile_round_trip(m in 1usize..=8, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_symplectic(m, &mut rng, 6 * m);
            let circ = compile(&c).unwrap();
            prop_assert_eq!(circ.symplectic(), c.clone());
            if c.block(m, 0, m, m).is_invertible() {
                let (cx, reduced) = gauss_reduce(&c).unwrap();
                prop_assert!(cx.len() <= m * m);
                let (s, cz, h, _) = decompose(&reduced).unwrap().counts();
                prop_assert!(s <= 2 * m && cz <= m * m - m && h == m);
            }
        }

        #[test]
        fn simulation_matches_symplectic(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_symplectic(3, &mut rng, 12);
            let circ = compile(&c).unwrap();
            prop_assert!(verify_compilation(&c, &circ, 1e-9).unwrap().passed());
        }
    }
}
