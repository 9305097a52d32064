//! Searches for stabilizer matrices that generate complete cyclic MUB sets.

mod factordb;

pub use factordb::{trial_division, FactorDb, FACTOR_DB_ENV, TRIAL_DIVISION_MAX_M};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entclass;
use crate::fibpoly::{fib_pair_matrix, fibonacci_index, two_pow_pm1, FibError, FibSide};
use crate::gf2core::{char_poly, symplectic_product_mask, BitMatrix, GF2Poly, Gf2Error};
use crate::mubgen;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("empty factor list for d + 1")]
    EmptyFactors,
    #[error("stabilizer must be 2m x 2m, got {0}x{1}")]
    BadShape(usize, usize),
    #[error("no factorization of 2^{m}{sign}1 available (supply a factor file)")]
    MissingFactorization { m: usize, sign: char },
    #[error("factor file line {line}: {msg}")]
    FactorParse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
    #[error("triangle search exhausted all corners up to r = {0}")]
    TriangleExhausted(usize),
    #[error("companion search exhausted all {0}-bit parameter strings")]
    CompanionExhausted(usize),
    #[error("companion search needs m <= 40, got {0}")]
    CompanionTooLarge(usize),
    #[error("g0x must be symmetric")]
    AsymmetricG0,
    #[error("m = {0} is outside the supported range for this search")]
    Unsupported(usize),
    #[error("k = {0} is above the supported Fermat level (12)")]
    FermatTooLarge(u32),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error(transparent)]
    Fib(#[from] FibError),
    #[error(transparent)]
    Mub(#[from] mubgen::MubError),
    #[error(transparent)]
    Ent(#[from] entclass::EntError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Triangle,
    Companion,
    Fermat,
    Group,
    #[serde(rename = "general")]
    GeneralSymplectic,
}

#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub m: usize,
    pub family: Family,
    /// corner size to start from (triangle only)
    pub r: usize,
    pub target_structure: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerCandidate {
    #[serde(rename = "C")]
    pub c: BitMatrix,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none", default)]
    pub b: Option<BitMatrix>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none", default)]
    pub r: Option<BitMatrix>,
    #[serde(rename = "G0")]
    pub g0: BitMatrix,
    pub provenance: String,
}

/// C = [[B, I], [I, 0]].
pub fn fibonacci_stabilizer(b: &BitMatrix) -> BitMatrix {
    let m = b.rows();
    BitMatrix::from_blocks(b, &BitMatrix::identity(m), &BitMatrix::identity(m), &BitMatrix::zeros(m, m))
        .expect("square blocks")
}

/// C = [[B, R], [R⁻¹, 0]], or None if R is singular.
pub fn group_stabilizer(b: &BitMatrix, r: &BitMatrix) -> Option<BitMatrix> {
    let rinv = r.inverse().ok()??;
    let m = b.rows();
    BitMatrix::from_blocks(b, r, &rinv, &BitMatrix::zeros(m, m)).ok()
}

/// G0 = (I, 0)ᵗ.
pub fn homogeneous_g0(m: usize) -> BitMatrix {
    BitMatrix::vstack(&BitMatrix::identity(m), &BitMatrix::zeros(m, m)).expect("same width")
}

/// G0 = (I, g0x)ᵗ.
pub fn inhomogeneous_g0(g0x: &BitMatrix) -> BitMatrix {
    BitMatrix::vstack(&BitMatrix::identity(g0x.rows()), g0x).expect("same width")
}

/// Conditions for G0 = (I, 0)ᵗ: C symplectic, C^{d+1} = I, and for every prime
/// p | d+1 both off-diagonal blocks of C^{(d+1)/p} are nonzero.
pub fn validate_stabilizer(c: &BitMatrix, m: usize, factors: &[BigUint]) -> Result<bool, SearchError> {
    if factors.is_empty() {
        return Err(SearchError::EmptyFactors);
    }
    if c.rows() != c.cols() {
        return Err(SearchError::BadShape(c.rows(), c.cols()));
    }
    if c.rows() % 2 != 0 {
        return Err(Gf2Error::OddDimension(c.rows()).into());
    }
    if c.rows() != 2 * m {
        return Err(SearchError::BadShape(c.rows(), c.cols()));
    }
    if !c.is_symplectic()? {
        return Ok(false);
    }
    let n = two_pow_pm1(m, true);
    if !c.pow(&n)?.is_identity() {
        return Ok(false);
    }
    let mut primes = factors.to_vec();
    primes.sort();
    primes.dedup();
    for p in &primes {
        if !(&n % p).is_zero() {
            continue;
        }
        let q = c.pow(&(&n / p))?;
        if q.block(0, m, m, m).is_zero() || q.block(m, 0, m, m).is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Direct check against an arbitrary initial generator: C^{d+1} = I and the
/// symplectic Gram matrix G0ᵗ J C^l G0 is invertible for l = 1..d. Exhaustive, m ≤ 16.
pub fn validate_with_generator(c: &BitMatrix, g0: &BitMatrix) -> Result<bool, SearchError> {
    let m = g0.cols();
    if m > 16 {
        return Err(SearchError::Unsupported(m));
    }
    if c.rows() != 2 * m || c.cols() != 2 * m || g0.rows() != 2 * m {
        return Err(SearchError::BadShape(c.rows(), c.cols()));
    }
    if !c.is_symplectic()? {
        return Ok(false);
    }
    let cols: Vec<u64> = (0..2 * m).map(|j| c.col_mask(j)).collect();
    let g: Vec<u64> = (0..m).map(|j| g0.col_mask(j)).collect();
    Ok(cyclic_with_generator(&cols, &g, m))
}

fn apply(cols: &[u64], v: u64) -> u64 {
    let mut out = 0;
    let mut w = v;
    while w != 0 {
        out ^= cols[w.trailing_zeros() as usize];
        w &= w - 1;
    }
    out
}

fn gram_invertible(a: &[u64], b: &[u64], m: usize) -> bool {
    let mut rows: Vec<u64> = a
        .iter()
        .map(|&ai| {
            b.iter()
                .enumerate()
                .fold(0u64, |acc, (j, &bj)| acc | (symplectic_product_mask(ai, bj, m) as u64) << j)
        })
        .collect();
    // rank over GF(2)
    let mut rank = 0;
    for col in 0..m {
        let Some(p) = (rank..m).find(|&r| rows[r] >> col & 1 == 1) else { return false };
        rows.swap(p, rank);
        for r in 0..m {
            if r != rank && rows[r] >> col & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank == m
}

/// Column-mask form of the generator check.
fn cyclic_with_generator(cols: &[u64], g0: &[u64], m: usize) -> bool {
    let d = 1usize << m;
    let mut gl = g0.to_vec();
    for _ in 1..=d {
        for v in gl.iter_mut() {
            *v = apply(cols, *v);
        }
        if !gram_invertible(g0, &gl, m) {
            return false;
        }
    }
    // C^{d+1} = I on the full basis
    (0..2 * m).all(|j| {
        let mut v = 1u64 << j;
        for _ in 0..=d {
            v = apply(cols, v);
        }
        v == 1 << j
    })
}

/// Anti-triangle B (b_ij = 1 iff i + j ≤ m + 1) with its lower-right r×r corner set to A.
pub fn triangle_b(m: usize, a: Option<&BitMatrix>) -> BitMatrix {
    let mut b = crate::fibpoly::anti_triangle(m);
    if let Some(a) = a {
        let r = a.rows();
        for i in 0..r {
            for j in 0..r {
                b.set(m - r + i, m - r + j, a.get(i, j));
            }
        }
    }
    b
}

/// The `code`-th symmetric r×r matrix: upper-triangle bits read row-major, first bit most significant.
pub fn symmetric_from_code(r: usize, code: u64) -> BitMatrix {
    let nbits = r * (r + 1) / 2;
    let mut a = BitMatrix::zeros(r, r);
    let mut pos = 0;
    for i in 0..r {
        for j in i..r {
            let bit = code >> (nbits - 1 - pos) & 1 == 1;
            a.set(i, j, bit);
            a.set(j, i, bit);
            pos += 1;
        }
    }
    a
}

pub fn symmetric_code(a: &BitMatrix) -> u64 {
    let r = a.rows();
    let mut code = 0u64;
    for i in 0..r {
        for j in i..r {
            code = code << 1 | a.get(i, j) as u64;
        }
    }
    code
}

fn candidate(c: BitMatrix, b: Option<BitMatrix>, r: Option<BitMatrix>, g0: BitMatrix, provenance: String) -> StabilizerCandidate {
    StabilizerCandidate { c, b, r, g0, provenance }
}

/// First corner A (ascending code, growing r from `r_start`) whose triangle B validates.
pub fn search_triangle(m: usize, r_start: usize, db: &FactorDb) -> Result<StabilizerCandidate, SearchError> {
    let factors = db.factors(m, true)?;
    let r_max = (m / 2).max(1);
    if m == 1 {
        let b = BitMatrix::identity(1);
        let c = fibonacci_stabilizer(&b);
        if validate_stabilizer(&c, m, &factors)? {
            return Ok(candidate(c, Some(b), None, homogeneous_g0(1), "triangle m=1".into()));
        }
        return Err(SearchError::TriangleExhausted(1));
    }
    for r in r_start.max(1)..=r_max {
        let nbits = r * (r + 1) / 2;
        if nbits > 40 {
            return Err(SearchError::TriangleExhausted(r - 1));
        }
        let found = (0u64..1 << nbits).into_par_iter().find_first(|&code| {
            let a = symmetric_from_code(r, code);
            let b = triangle_b(m, Some(&a));
            validate_stabilizer(&fibonacci_stabilizer(&b), m, &factors).unwrap_or(false)
        });
        if let Some(code) = found {
            let a = symmetric_from_code(r, code);
            let b = triangle_b(m, Some(&a));
            let c = fibonacci_stabilizer(&b);
            return Ok(candidate(c, Some(b), None, homogeneous_g0(m), format!("triangle m={m} r={r} A={}", a.to_row_strings().join(","))));
        }
    }
    Err(SearchError::TriangleExhausted(r_max))
}

/// Hankel matrix b_ij = s_{i+j-1}, with s given constant-first as bits of `s`.
pub fn companion_b(m: usize, s: &[bool]) -> BitMatrix {
    let mut b = BitMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            b.set(i, j, s.get(i + j).copied().unwrap_or(false));
        }
    }
    b
}

pub fn parse_bitstring(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

/// True iff χ_B is irreducible with Fibonacci index 2^m + 1.
pub fn has_full_fibonacci_index(b: &BitMatrix, db: &FactorDb) -> Result<bool, SearchError> {
    let m = b.rows();
    let chi = char_poly(b)?;
    if !chi.coeff(1) || !chi.is_irreducible() {
        return Ok(false);
    }
    let plus = db.factors(m, true)?;
    let res = fibonacci_index(&chi, &[], &plus)?;
    Ok(res.side == FibSide::PlusOne)
}

/// First Hankel parameter string s (s_1 least significant) with a full-index χ_B.
/// Returns s with trailing zeros removed.
pub fn search_companion(m: usize, db: &FactorDb) -> Result<String, SearchError> {
    if m > 40 {
        return Err(SearchError::CompanionTooLarge(m));
    }
    let len = 2 * m - 1;
    let plus = db.factors(m, true)?;
    let test = |v: u64| -> bool {
        let s: Vec<bool> = (0..len).map(|i| v >> i & 1 == 1).collect();
        let b = companion_b(m, &s);
        let Ok(chi) = char_poly(&b) else { return false };
        chi.coeff(1)
            && chi.is_irreducible()
            && fibonacci_index(&chi, &[], &plus).map(|r| r.side == FibSide::PlusOne).unwrap_or(false)
    };
    // scan in blocks so the parallel search stays ordered and bounded
    let limit: u64 = if len >= 63 { u64::MAX } else { 1u64 << len };
    let block = 1u64 << 12;
    let mut start = 1u64;
    while start < limit {
        let end = start.saturating_add(block).min(limit);
        if let Some(v) = (start..end).into_par_iter().find_first(|&v| test(v)) {
            let s: String = (0..len).map(|i| if v >> i & 1 == 1 { '1' } else { '0' }).collect();
            return Ok(s.trim_end_matches('0').to_string());
        }
        start = end;
    }
    Err(SearchError::CompanionExhausted(len))
}

/// B_{2^0} = (1), B_{2^{k+1}} = [[B_{2^k}, I], [I, 0]].
pub fn fermat_b(k: u32) -> Result<BitMatrix, SearchError> {
    if k > 12 {
        return Err(SearchError::FermatTooLarge(k));
    }
    let mut b = BitMatrix::identity(1);
    for _ in 0..k {
        b = fibonacci_stabilizer(&b);
    }
    Ok(b)
}

/// The stabilizer for m = 2^k qubits, which is B_{2^{k+1}}.
pub fn fermat_c(k: u32) -> Result<BitMatrix, SearchError> {
    if k > 11 {
        return Err(SearchError::FermatTooLarge(k));
    }
    fermat_b(k + 1)
}

/// f^Q(x) = x^n f(x + 1/x), n = deg f.
pub fn reciprocal_op(f: &GF2Poly) -> GF2Poly {
    let Some(n) = f.degree() else { return GF2Poly::zero() };
    let x2p1 = GF2Poly::from_exponents(&[2, 0]);
    let mut out = GF2Poly::zero();
    let mut pow = GF2Poly::one(); // (x^2 + 1)^i
    for i in 0..=n {
        if f.coeff(i) {
            out.add_assign(&pow.shl(n - i));
        }
        pow = pow.mul(&x2p1);
    }
    out
}

/// Validate the Fermat stabilizer for m = 2^k against the factors of 2^{2^k} + 1.
pub fn wiedemann_test(k: u32, db: &FactorDb) -> Result<bool, SearchError> {
    let m = 1usize << k;
    let factors = db.factors(m, true)?;
    validate_stabilizer(&fermat_c(k)?, m, &factors)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPair {
    pub b: BitMatrix,
    pub r: BitMatrix,
    /// R = p(B) for some polynomial p, i.e. equivalent to the Fibonacci set of B
    pub fibonacci_equivalent: bool,
}

/// Nonzero polynomials of degree < m evaluated at B.
fn polynomials_in(b: &BitMatrix) -> Vec<BitMatrix> {
    let m = b.rows();
    let mut powers = vec![BitMatrix::identity(m)];
    for i in 1..m {
        powers.push(powers[i - 1].mul(b).expect("square"));
    }
    (1u64..1 << m)
        .map(|mask| {
            let mut acc = BitMatrix::zeros(m, m);
            for (i, p) in powers.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    acc = acc.add(p).expect("same shape");
                }
            }
            acc
        })
        .collect()
}

fn matrix_from_code(m: usize, code: u64) -> BitMatrix {
    let mut b = BitMatrix::zeros(m, m);
    for idx in 0..m * m {
        b.set(idx / m, idx % m, code >> (m * m - 1 - idx) & 1 == 1);
    }
    b
}

fn row_key(a: &BitMatrix) -> String {
    a.to_row_strings().concat()
}

/// Exhaustive (m ≤ 4) search of all (B, R): R invertible, R and BR symmetric,
/// χ_B irreducible with Fibonacci index 2^m + 1.
pub fn search_group(m: usize, db: &FactorDb) -> Result<Vec<GroupPair>, SearchError> {
    if !(1..=4).contains(&m) {
        return Err(SearchError::Unsupported(m));
    }
    let plus = db.factors(m, true)?;
    let sym: Vec<BitMatrix> = (0u64..1 << (m * (m + 1) / 2))
        .map(|c| symmetric_from_code(m, c))
        .filter(|r| r.is_invertible())
        .collect();
    let mut out: Vec<GroupPair> = (0u64..1 << (m * m))
        .into_par_iter()
        .flat_map_iter(|code| {
            let b = matrix_from_code(m, code);
            let ok = char_poly(&b).ok().is_some_and(|chi| {
                chi.coeff(1)
                    && chi.is_irreducible()
                    && fibonacci_index(&chi, &[], &plus).map(|r| r.side == FibSide::PlusOne).unwrap_or(false)
            });
            let polys = if ok { polynomials_in(&b) } else { Vec::new() };
            let hits: Vec<GroupPair> = if ok {
                sym.iter()
                    .filter(|r| b.mul(r).expect("square").is_symmetric())
                    .map(|r| GroupPair { b: b.clone(), r: r.clone(), fibonacci_equivalent: polys.contains(r) })
                    .collect()
            } else {
                Vec::new()
            };
            hits.into_iter()
        })
        .collect();
    out.sort_by_key(|p| (row_key(&p.b), row_key(&p.r)));
    Ok(out)
}

/// Collapse R ~ p(B)·R, keeping the representative with the smallest R encoding.
pub fn dedup_group_pairs(pairs: &[GroupPair]) -> Vec<GroupPair> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for p in pairs {
        let orbit_min = polynomials_in(&p.b)
            .iter()
            .map(|q| row_key(&q.mul(&p.r).expect("square")))
            .min()
            .expect("at least the identity");
        if seen.insert((row_key(&p.b), orbit_min.clone())) {
            let rep = polynomials_in(&p.b)
                .into_iter()
                .map(|q| q.mul(&p.r).expect("square"))
                .find(|r| row_key(r) == orbit_min)
                .expect("minimum is attained");
            out.push(GroupPair { b: p.b.clone(), fibonacci_equivalent: p.fibonacci_equivalent, r: rep });
        }
    }
    out
}

/// Options for `search_general`.
#[derive(Debug, Clone)]
pub struct GeneralSearch {
    pub m: usize,
    pub g0x: Option<BitMatrix>,
    pub target: Option<Vec<usize>>,
    /// random samples for m = 4
    pub samples: u64,
    pub seed: u64,
    /// stop after this many hits (0 = unlimited)
    pub limit: usize,
}

impl GeneralSearch {
    pub fn new(m: usize) -> Self {
        GeneralSearch { m, g0x: None, target: None, samples: 2_000_000, seed: 1, limit: 0 }
    }
}

/// Symplectic C satisfying the cyclic-MUB conditions against G0 = (I, g0x)ᵗ.
/// Exhaustive over Sp(2m, 2) for m ≤ 3, random sampling with s invertible for m = 4.
pub fn search_general(opts: &GeneralSearch) -> Result<Vec<StabilizerCandidate>, SearchError> {
    let m = opts.m;
    let g0x = opts.g0x.clone().unwrap_or_else(|| BitMatrix::zeros(m, m));
    if !g0x.is_symmetric() || g0x.rows() != m {
        return Err(SearchError::AsymmetricG0);
    }
    let g0 = inhomogeneous_g0(&g0x);
    let g0_cols: Vec<u64> = (0..m).map(|j| g0.col_mask(j)).collect();
    let hits: Vec<Vec<u64>> = match m {
        1..=3 => enumerate_symplectic(m)
            .into_par_iter()
            .flat_map_iter(|prefix| {
                let mut local = Vec::new();
                extend_symplectic(m, prefix, &mut |cols| {
                    if cyclic_with_generator(cols, &g0_cols, m) {
                        local.push(cols.to_vec());
                    }
                });
                local.into_iter()
            })
            .collect(),
        4 => sample_symplectic(m, opts.samples, opts.seed, &g0_cols),
        _ => return Err(SearchError::Unsupported(m)),
    };
    let mut out = Vec::new();
    for cols in hits {
        let c = BitMatrix::from_col_masks(2 * m, &cols);
        if let Some(t) = &opts.target {
            let set = mubgen::generate_classes(&c, &g0)?;
            if entclass::structure_vector(&set)?.counts != *t {
                continue;
            }
        }
        out.push(candidate(c, None, None, g0.clone(), format!("general m={m}")));
    }
    out.sort_by_key(|cand| row_key(&cand.c));
    out.dedup_by(|a, b| a.c == b.c);
    if opts.limit > 0 {
        out.truncate(opts.limit);
    }
    Ok(out)
}

/// Choices for the first column (the parallel split).
fn enumerate_symplectic(m: usize) -> Vec<u64> {
    (1u64..1 << (2 * m)).collect()
}

/// Depth-first over symplectic bases: column i and column m+i form a hyperbolic
/// pair, orthogonal to every earlier pair.
fn extend_symplectic(m: usize, first: u64, visit: &mut dyn FnMut(&[u64])) {
    let mut cols = vec![0u64; 2 * m];
    cols[0] = first;
    fn rec(m: usize, i: usize, half: usize, cols: &mut Vec<u64>, visit: &mut dyn FnMut(&[u64])) {
        if i == m {
            visit(cols);
            return;
        }
        let slot = if half == 0 { i } else { m + i };
        let orth_prev = |v: u64, cols: &[u64]| (0..i).all(|k| !symplectic_product_mask(v, cols[k], m) && !symplectic_product_mask(v, cols[m + k], m));
        if half == 0 && i == 0 {
            rec(m, i, 1, cols, visit);
            return;
        }
        for v in 1u64..1 << (2 * m) {
            if !orth_prev(v, cols) {
                continue;
            }
            if half == 1 && !symplectic_product_mask(cols[i], v, m) {
                continue;
            }
            cols[slot] = v;
            if half == 0 {
                rec(m, i, 1, cols, visit);
            } else {
                rec(m, i + 1, 0, cols, visit);
            }
        }
        cols[slot] = 0;
    }
    rec(m, 0, 0, &mut cols, visit);
}

/// C = [[s, sP], [Qs, s⁻ᵗ + QsP]] with s invertible and P, Q symmetric; this is
/// the general symplectic matrix with invertible upper-left block, and its
/// lower-right block equals (sᵗ)⁻¹(I + uᵗt).
fn sample_symplectic(m: usize, samples: u64, seed: u64, g0: &[u64]) -> Vec<Vec<u64>> {
    // fixed worker count keeps results independent of the thread pool size
    const WORKERS: u64 = 64;
    let per = samples.div_ceil(WORKERS);
    (0..WORKERS)
        .into_par_iter()
        .flat_map_iter(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (w.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            let mut local = Vec::new();
            for _ in 0..per {
                let s = matrix_from_code(m, rng.gen_range(0..1u64 << (m * m)));
                let Some(sinv) = s.inverse().expect("square") else { continue };
                let p = symmetric_from_code(m, rng.gen_range(0..1u64 << (m * (m + 1) / 2)));
                let q = symmetric_from_code(m, rng.gen_range(0..1u64 << (m * (m + 1) / 2)));
                let t = s.mul(&p).expect("square");
                let u = q.mul(&s).expect("square");
                let v = sinv.transpose().add(&u.mul(&p).expect("square")).expect("square");
                let c = BitMatrix::from_blocks(&s, &t, &u, &v).expect("blocks");
                let cols: Vec<u64> = (0..2 * m).map(|j| c.col_mask(j)).collect();
                if cyclic_with_generator(&cols, g0, m) {
                    local.push(cols);
                }
            }
            local.into_iter()
        })
        .collect()
}

/// Closed form for the number of symmetric invertible m×m matrices over GF(2).
pub fn count_symmetric_invertible(m: usize) -> BigUint {
    // a(m) = 2^{m(m+1)/2} Π_{j=1}^{2⌈m/2⌉} (1 - 2^{-j}) / Π_{j=1}^{⌈m/2⌉} (1 - 4^{-j}),
    // evaluated over the integers after clearing denominators.
    let h = m.div_ceil(2);
    let mut num = BigUint::one() << (m * (m + 1) / 2);
    let mut den = BigUint::one();
    for j in 1..=2 * h {
        num *= (BigUint::one() << j) - 1u32;
        den <<= j;
    }
    for j in 1..=h {
        num <<= 2 * j;
        den *= (BigUint::one() << (2 * j)) - 1u32;
    }
    num / den
}

/// Brute-force count for small m.
pub fn count_symmetric_invertible_brute(m: usize) -> u64 {
    (0u64..1 << (m * (m + 1) / 2)).filter(|&c| symmetric_from_code(m, c).is_invertible()).count() as u64
}

/// All symmetric B of size m accepted by `validate_stabilizer`.
pub fn brute_force_fibonacci(m: usize, db: &FactorDb) -> Result<Vec<BitMatrix>, SearchError> {
    let factors = db.factors(m, true)?;
    let mut out = Vec::new();
    for code in 0u64..1 << (m * (m + 1) / 2) {
        let b = symmetric_from_code(m, code);
        if validate_stabilizer(&fibonacci_stabilizer(&b), m, &factors)? {
            out.push(b);
        }
    }
    Ok(out)
}

/// Run one of the single-result families.
pub fn run_search(spec: &SearchSpec, db: &FactorDb) -> Result<Vec<StabilizerCandidate>, SearchError> {
    let m = spec.m;
    match spec.family {
        Family::Triangle => Ok(vec![search_triangle(m, spec.r.max(1), db)?]),
        Family::Companion => {
            let s = search_companion(m, db)?;
            let b = companion_b(m, &parse_bitstring(&s).expect("search emits bits"));
            Ok(vec![candidate(fibonacci_stabilizer(&b), Some(b), None, homogeneous_g0(m), format!("companion m={m} s={s}"))])
        }
        Family::Fermat => {
            if !m.is_power_of_two() {
                return Err(SearchError::Unsupported(m));
            }
            let k = m.trailing_zeros();
            let b = fermat_b(k)?;
            Ok(vec![candidate(fibonacci_stabilizer(&b), Some(b), None, homogeneous_g0(m), format!("fermat k={k}"))])
        }
        Family::Group => {
            let mut out = Vec::new();
            for p in dedup_group_pairs(&search_group(m, db)?) {
                let c = group_stabilizer(&p.b, &p.r).expect("R invertible");
                if let Some(t) = &spec.target_structure {
                    let set = mubgen::generate_classes(&c, &homogeneous_g0(m))?;
                    if entclass::structure_vector(&set)?.counts != *t {
                        continue;
                    }
                }
                out.push(candidate(c, Some(p.b), Some(p.r), homogeneous_g0(m), format!("group m={m}")));
            }
            Ok(out)
        }
        Family::GeneralSymplectic => {
            let mut opts = GeneralSearch::new(m);
            opts.target = spec.target_structure.clone();
            search_general(&opts)
        }
    }
}

/// F_{d+1}(B) = 0 and F_d(B) = I.
pub fn fibonacci_certificate(b: &BitMatrix) -> Result<bool, Gf2Error> {
    let m = b.rows();
    let (fd, fd1) = fib_pair_matrix(&(BigUint::one() << m), b)?;
    Ok(fd1.is_zero() && fd.is_identity())
}
