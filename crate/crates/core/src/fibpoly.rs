//! Fibonacci polynomials over GF(2).
//!
//! F_0 = 0, F_1 = 1, F_{n+1} = x F_n + F_{n-1}. Everything large goes through
//! the doubling formulas F_{2k} = x F_k² and F_{2k+1} = F_k² + F_{k+1}², which
//! are the squaring step of the companion matrix [[0,1],[1,x]]^n.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf2core::{char_poly, BitMatrix, GF2Poly, Gf2Error};

/// Largest index `fib_poly` will materialize.
pub const FIB_POLY_MAX: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FibError {
    #[error("index {0} exceeds the coefficient storage bound {FIB_POLY_MAX}")]
    TooLarge(usize),
    #[error("modulus is the zero polynomial")]
    ZeroModulus,
    #[error("polynomial is reducible")]
    Reducible,
    #[error("factor list for 2^{m}{sign}1 is incomplete: no divisor of it annihilates f")]
    IncompleteFactors { m: usize, sign: char },
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// Where an irreducible f sits relative to F_{2^m ± 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum FibSide {
    /// f | F_{2^m - 1}
    MinusOne,
    /// index is exactly 2^m + 1
    PlusOne,
    /// f = x, index 2
    IsX,
    /// index is a proper divisor of 2^m + 1
    ProperDivisorOfPlusOne,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibIndexResult {
    pub index: BigUint,
    pub side: FibSide,
}

pub fn fib_poly(n: usize) -> Result<GF2Poly, FibError> {
    if n > FIB_POLY_MAX {
        return Err(FibError::TooLarge(n));
    }
    Ok(fib_pair(n).0)
}

/// (F_n, F_{n+1}) by doubling over the bits of n.
fn fib_pair(n: usize) -> (GF2Poly, GF2Poly) {
    let x = GF2Poly::x();
    let (mut a, mut b) = (GF2Poly::zero(), GF2Poly::one());
    if n == 0 {
        return (a, b);
    }
    for i in (0..usize::BITS - n.leading_zeros()).rev() {
        let (a2, b2) = (a.square(), b.square());
        let even = x.mul(&a2); // F_{2k}
        let odd = a2.add(&b2); // F_{2k+1}
        if n >> i & 1 == 1 {
            let next = x.mul(&b2); // F_{2k+2}
            a = odd;
            b = next;
        } else {
            a = even;
            b = odd;
        }
    }
    (a, b)
}

fn binom_odd(n: usize, k: usize) -> bool {
    k <= n && k & !n == 0
}

/// Coefficient of x^k in F_n: binom((n+k-1)/2, k) mod 2 when n - k is odd.
pub fn fib_coeff(n: usize, k: usize) -> bool {
    if k >= n || (n - k) % 2 == 0 {
        return false;
    }
    binom_odd((n + k - 1) / 2, k)
}

/// (F_n mod f, F_{n+1} mod f).
pub fn fib_pair_mod(n: &BigUint, f: &GF2Poly) -> Result<(GF2Poly, GF2Poly), FibError> {
    if f.is_zero() {
        return Err(FibError::ZeroModulus);
    }
    let x = GF2Poly::x().rem(f)?;
    let (mut a, mut b) = (GF2Poly::zero(), GF2Poly::one().rem(f)?);
    for i in (0..n.bits()).rev() {
        let (a2, b2) = (a.square().rem(f)?, b.square().rem(f)?);
        let odd = a2.add(&b2);
        if n.bit(i) {
            b = x.mul(&b2).rem(f)?;
            a = odd;
        } else {
            a = x.mul(&a2).rem(f)?;
            b = odd;
        }
    }
    Ok((a, b))
}

/// (F_n(B), F_{n+1}(B)) for a square matrix, by the same doubling.
pub fn fib_pair_matrix(n: &BigUint, b: &BitMatrix) -> Result<(BitMatrix, BitMatrix), Gf2Error> {
    if !b.is_square() {
        return Err(Gf2Error::NotSquare(b.rows(), b.cols()));
    }
    let dim = b.rows();
    let (mut f0, mut f1) = (BitMatrix::zeros(dim, dim), BitMatrix::identity(dim));
    for i in (0..n.bits()).rev() {
        let (a2, b2) = (f0.mul(&f0)?, f1.mul(&f1)?);
        let odd = a2.add(&b2)?;
        if n.bit(i) {
            f1 = b.mul(&b2)?;
            f0 = odd;
        } else {
            f0 = b.mul(&a2)?;
            f1 = odd;
        }
    }
    Ok((f0, f1))
}

/// F_n(B).
pub fn fib_matrix(n: u64, b: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
    Ok(fib_pair_matrix(&BigUint::from(n), b)?.0)
}

/// 2^m + 1 or 2^m - 1.
pub fn two_pow_pm1(m: usize, plus: bool) -> BigUint {
    let p = BigUint::one() << m;
    if plus {
        p + 1u32
    } else {
        p - 1u32
    }
}

/// Minimal n > 0 with f | F_n. The side 2^m ± 1 is chosen by the linear term of f,
/// then prime factors are stripped while F_{N/p} ≡ 0 (mod f) still holds.
pub fn fibonacci_index(
    f: &GF2Poly,
    factors_minus: &[BigUint],
    factors_plus: &[BigUint],
) -> Result<FibIndexResult, FibError> {
    if *f == GF2Poly::x() {
        return Ok(FibIndexResult { index: BigUint::from(2u32), side: FibSide::IsX });
    }
    if !f.is_irreducible() {
        return Err(FibError::Reducible);
    }
    let m = f.degree().expect("irreducible implies nonzero");
    let plus = f.coeff(1);
    let factors = if plus { factors_plus } else { factors_minus };
    let full = two_pow_pm1(m, plus);
    let sign = if plus { '+' } else { '-' };
    let prod = factors.iter().fold(BigUint::one(), |acc, p| acc * p);
    if prod != full || !fib_pair_mod(&full, f)?.0.is_zero() {
        return Err(FibError::IncompleteFactors { m, sign });
    }
    let mut primes: Vec<BigUint> = factors.to_vec();
    primes.sort();
    primes.dedup();
    let mut n = full.clone();
    for p in &primes {
        while (&n % p).is_zero() {
            let cand = &n / p;
            if fib_pair_mod(&cand, f)?.0.is_zero() {
                n = cand;
            } else {
                break;
            }
        }
    }
    let side = match (plus, n == full) {
        (false, _) => FibSide::MinusOne,
        (true, true) => FibSide::PlusOne,
        (true, false) => FibSide::ProperDivisorOfPlusOne,
    };
    Ok(FibIndexResult { index: n, side })
}

/// Index found by brute force: smallest n with f | F_n, n ≤ limit.
pub fn fibonacci_index_naive(f: &GF2Poly, limit: usize) -> Option<usize> {
    let (mut a, mut b) = (GF2Poly::zero(), GF2Poly::one());
    let x = GF2Poly::x();
    for n in 1..=limit {
        let next = x.mul(&b).add(&a).rem(f).ok()?;
        a = b;
        b = next;
        if a.is_zero() {
            return Some(n);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    General,
    Symmetric,
    Subtractive,
    Divisibility,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityReport {
    pub trials: usize,
    pub checks: usize,
    /// First failing (identity, k, l), if any.
    pub counterexample: Option<(Identity, usize, usize)>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Check the four identities at one (k, l), k, l ≥ 1.
pub fn check_identities(k: usize, l: usize) -> Option<Identity> {
    let f = |n: usize| fib_poly(n).expect("within bound");
    let x = GF2Poly::x();
    // F_{k+l} = F_k F_{l+1} + F_{k-1} F_l
    if f(k + l) != f(k).mul(&f(l + 1)).add(&f(k - 1).mul(&f(l))) {
        return Some(Identity::General);
    }
    // F_{k+l} + F_{k-l} = x F_k F_l  (F_{-n} = F_n over GF(2))
    if f(k + l).add(&f(k.abs_diff(l))) != x.mul(&f(k)).mul(&f(l)) {
        return Some(Identity::Symmetric);
    }
    // F_{k+1} F_l + F_k F_{l+1} = F_{|k-l|}
    if f(k + 1).mul(&f(l)).add(&f(k).mul(&f(l + 1))) != f(k.abs_diff(l)) {
        return Some(Identity::Subtractive);
    }
    // F_k | F_l  <=>  k | l
    let divides = f(k).divides(&f(l)).expect("F_k nonzero for k >= 1");
    if divides != (l % k == 0) {
        return Some(Identity::Divisibility);
    }
    None
}

/// Randomized identity check over 1 ≤ k, l ≤ max.
pub fn identity_suite(seed: u64, trials: usize, max: usize) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, usize)> = (0..trials).map(|_| (rng.gen_range(1..=max), rng.gen_range(1..=max))).collect();
    use rayon::prelude::*;
    let counterexample = pairs
        .par_iter()
        .find_map_first(|&(k, l)| check_identities(k, l).map(|id| (id, k, l)));
    IdentityReport { trials, checks: trials * 4, counterexample }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleKind {
    Fibonacci,
    Charpoly,
    Pascal,
}

impl std::str::FromStr for TriangleKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fibonacci" => Ok(Self::Fibonacci),
            "charpoly" => Ok(Self::Charpoly),
            "pascal" => Ok(Self::Pascal),
            _ => Err(format!("unknown pattern {s:?} (fibonacci, charpoly, pascal)")),
        }
    }
}

/// Maximum rows for `emit_triangle`.
pub const TRIANGLE_MAX_ROWS: usize = 4096;

/// '#'/' ' rendering, one line per row, no trailing spaces.
///
/// * Fibonacci: row j = F_j for j = 1.., constant term leftmost.
/// * Charpoly: row m = χ of the anti-triangle B with zero corner, leading term leftmost.
/// * Pascal: row n = binomial parity for n = 0.., k = 0..n.
pub fn emit_triangle(kind: TriangleKind, rows: usize) -> String {
    let rows = rows.min(TRIANGLE_MAX_ROWS);
    let mut out = String::new();
    let render = |out: &mut String, bits: &mut dyn Iterator<Item = bool>| {
        let line: String = bits.map(|b| if b { '#' } else { ' ' }).collect();
        out.push_str(line.trim_end());
        out.push('\n');
    };
    match kind {
        TriangleKind::Fibonacci => {
            for j in 1..=rows {
                render(&mut out, &mut (0..j).map(|k| fib_coeff(j, k)));
            }
        }
        TriangleKind::Charpoly => {
            for m in 1..=rows {
                let chi = triangle_charpoly(m);
                render(&mut out, &mut (0..=m).rev().map(|k| chi.coeff(k)));
            }
        }
        TriangleKind::Pascal => {
            for n in 0..rows {
                render(&mut out, &mut (0..=n).map(|k| binom_odd(n, k)));
            }
        }
    }
    out
}

/// χ of the m×m anti-triangle (b_ij = 1 iff i + j ≤ m + 1, 1-based).
/// Equals the reversal of the even part of F_{2m+1}, so no elimination is needed.
pub fn triangle_charpoly(m: usize) -> GF2Poly {
    let mut chi = GF2Poly::zero();
    for k in 0..=m {
        if fib_coeff(2 * m + 1, 2 * k) {
            chi.set_coeff(m - k, true);
        }
    }
    chi
}

/// The anti-triangle matrix itself.
pub fn anti_triangle(m: usize) -> BitMatrix {
    let mut b = BitMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m - i {
            b.set(i, j, true);
        }
    }
    b
}

/// χ through Bareiss; the oracle for `triangle_charpoly`.
pub fn triangle_charpoly_direct(m: usize) -> GF2Poly {
    char_poly(&anti_triangle(m)).expect("square")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_fib(n: usize) -> Vec<GF2Poly> {
        let mut v = vec![GF2Poly::zero(), GF2Poly::one()];
        for i in 2..=n {
            let next = GF2Poly::x().mul(&v[i - 1]).add(&v[i - 2]);
            v.push(next);
        }
        v
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn p(s: &str) -> GF2Poly {
        s.parse().unwrap()
    }

    #[test]
    fn small_values() {
        assert!(fib_poly(0).unwrap().is_zero());
        assert!(fib_poly(1).unwrap().is_one());
        assert_eq!(fib_poly(4).unwrap(), p("x^3"));
        let f2 = fib_poly(2).unwrap();
        assert_eq!(fib_poly(4).unwrap(), GF2Poly::x().mul(&f2.square()));
        assert_eq!(fib_poly(FIB_POLY_MAX + 1), Err(FibError::TooLarge(FIB_POLY_MAX + 1)));
    }

    #[test]
    fn doubling_matches_recursion() {
        let v = naive_fib(600);
        for (n, want) in v.iter().enumerate() {
            assert_eq!(&fib_poly(n).unwrap(), want, "n = {n}");
        }
    }

    #[test]
    fn inverse_recursion() {
        let v = naive_fib(513);
        for n in 1..=512 {
            assert_eq!(v[n - 1], GF2Poly::x().mul(&v[n]).add(&v[n + 1]));
        }
    }

    #[test]
    fn coefficients() {
        assert!(fib_coeff(4, 3));
        assert!(!fib_coeff(4, 1));
        assert!(fib_coeff(1, 0));
        let v = naive_fib(512);
        for (n, f) in v.iter().enumerate() {
            for k in 0..=n + 1 {
                assert_eq!(fib_coeff(n, k), f.coeff(k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn pair_mod_examples() {
        let f = p("x^2 + x + 1");
        assert_eq!(fib_pair_mod(&big(5), &f).unwrap(), (GF2Poly::zero(), GF2Poly::one()));
        assert_eq!(fib_pair_mod(&big(0), &f).unwrap(), (GF2Poly::zero(), GF2Poly::one()));
        assert_eq!(fib_pair_mod(&big(3), &GF2Poly::zero()), Err(FibError::ZeroModulus));
    }

    #[test]
    fn pair_mod_matches_materialized() {
        let v = naive_fib(2049);
        let moduli = ["x^8 + x^4 + x^3 + x + 1", "x^5 + x^2 + 1", "x^3 + x", "x^7 + x^6 + x^2", "x + 1"];
        for ms in moduli {
            let f = p(ms);
            for n in (0..=2048usize).step_by(7).chain([2047, 2048]) {
                let (a, b) = fib_pair_mod(&big(n as u64), &f).unwrap();
                assert_eq!(a, v[n].rem(&f).unwrap());
                assert_eq!(b, v[n + 1].rem(&f).unwrap());
            }
        }
    }

    #[test]
    fn pair_matrix_matches_poly_eval() {
        let b = anti_triangle(5);
        for n in [0u64, 1, 2, 7, 33, 100] {
            let (f0, f1) = fib_pair_matrix(&big(n), &b).unwrap();
            assert_eq!(f0, fib_poly(n as usize).unwrap().eval_matrix(&b).unwrap());
            assert_eq!(f1, fib_poly(n as usize + 1).unwrap().eval_matrix(&b).unwrap());
        }
    }

    fn trial_factor(mut n: u64) -> Vec<BigUint> {
        let mut out = vec![];
        let mut p = 2;
        while p * p <= n {
            while n % p == 0 {
                out.push(big(p));
                n /= p;
            }
            p += 1;
        }
        if n > 1 {
            out.push(big(n));
        }
        out
    }

    fn index_of(f: &GF2Poly) -> FibIndexResult {
        let m = f.degree().unwrap();
        let minus = trial_factor((1 << m) - 1);
        let plus = trial_factor((1 << m) + 1);
        fibonacci_index(f, &minus, &plus).unwrap()
    }

    #[test]
    fn index_examples() {
        let r = index_of(&p("x^2 + x + 1"));
        assert_eq!((r.index, r.side), (big(5), FibSide::PlusOne));
        let r = fibonacci_index(&GF2Poly::x(), &[], &[]).unwrap();
        assert_eq!((r.index, r.side), (big(2), FibSide::IsX));
        let r = index_of(&p("x + 1"));
        assert_eq!((r.index, r.side), (big(3), FibSide::PlusOne));
        assert_eq!(index_of(&p("x^3 + x + 1")).index, big(9));
        assert_eq!(index_of(&p("x^3 + x^2 + 1")).side, FibSide::MinusOne);
        assert_eq!(fibonacci_index(&p("x^2 + 1"), &[], &[]), Err(FibError::Reducible));
        // x^6 + x + 1 has index 5 or 13 or 65; a lying list is caught by the product check
        let f = p("x^6 + x + 1");
        assert!(matches!(fibonacci_index(&f, &[], &[big(5)]), Err(FibError::IncompleteFactors { .. })));
    }

    #[test]
    fn index_matches_brute_force_and_count() {
        // every irreducible of degree m has index dividing 2^m ± 1, and exactly
        // phi(2^m+1)/(2m) of them reach the full 2^m + 1
        let phi = |n: u64| (1..=n).filter(|k| num_integer_gcd(*k, n) == 1).count();
        for m in 1..=8usize {
            let mut full = 0;
            for low in 0u64..1 << m {
                let f = GF2Poly::from_u64(low | 1 << m);
                if !f.is_irreducible() || f == GF2Poly::x() {
                    continue;
                }
                let r = index_of(&f);
                let naive = fibonacci_index_naive(&f, (1 << m) + 1).unwrap();
                assert_eq!(r.index, big(naive as u64), "{f}");
                let n = naive as u64;
                assert!(((1u64 << m) + 1) % n == 0 || ((1u64 << m) - 1) % n == 0);
                if r.side == FibSide::PlusOne {
                    full += 1;
                }
            }
            assert_eq!(full, phi((1 << m) + 1) / (2 * m), "m = {m}");
        }
    }

    fn num_integer_gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            num_integer_gcd(b, a % b)
        }
    }

    #[test]
    fn identity_examples() {
        assert_eq!(check_identities(7, 3), None);
        assert_eq!(check_identities(5, 5), None);
        let f5 = fib_poly(5).unwrap();
        assert_eq!(fib_poly(10).unwrap().add(&fib_poly(0).unwrap()), GF2Poly::x().mul(&f5.square()));
        assert!(fib_poly(3).unwrap().divides(&fib_poly(9).unwrap()).unwrap());
        assert!(!fib_poly(3).unwrap().divides(&fib_poly(10).unwrap()).unwrap());
        assert!(identity_suite(7, 60, 120).passed());
    }

    #[test]
    fn triangles() {
        let pascal = emit_triangle(TriangleKind::Pascal, 5);
        assert_eq!(pascal.lines().skip(1).take(4).collect::<Vec<_>>(), vec!["##", "# #", "####", "#   #"]);
        assert_eq!(emit_triangle(TriangleKind::Fibonacci, 1), "#\n");
        for m in 1..=40 {
            assert_eq!(triangle_charpoly(m), triangle_charpoly_direct(m), "m = {m}");
        }
    }

    #[test]
    fn charpoly_is_decimated_fibonacci() {
        let fib = emit_triangle(TriangleKind::Fibonacci, 81);
        let fib: Vec<&str> = fib.lines().collect();
        let chi = emit_triangle(TriangleKind::Charpoly, 40);
        for (m, line) in chi.lines().enumerate() {
            let row = fib[2 * (m + 1)]; // F_{2m+1}
            let decimated: String = row.chars().step_by(2).collect();
            assert_eq!(line, decimated.trim_end());
        }
    }

    proptest! {
        #[test]
        fn pair_mod_consistent_random(n in 0u64..2048, low in 0u64..256) {
            let f = GF2Poly::from_u64(low | 256);
            let (a, b) = fib_pair_mod(&big(n), &f).unwrap();
            prop_assert_eq!(a, fib_poly(n as usize).unwrap().rem(&f).unwrap());
            prop_assert_eq!(b, fib_poly(n as usize + 1).unwrap().rem(&f).unwrap());
        }

        #[test]
        fn identities_hold(k in 1usize..300, l in 1usize..300) {
            prop_assert_eq!(check_identities(k, l), None);
        }
    }
}
