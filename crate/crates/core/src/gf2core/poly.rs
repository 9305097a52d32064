//! Polynomials over GF(2), coefficient `i` at bit `i`.

use std::fmt;

use super::{BitMatrix, Gf2Error};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GF2Poly {
    // little-endian words, no trailing zero words
    words: Vec<u64>,
}

impl GF2Poly {
    pub fn zero() -> Self {
        GF2Poly { words: Vec::new() }
    }

    pub fn one() -> Self {
        GF2Poly { words: vec![1] }
    }

    /// The monomial x^k.
    pub fn monomial(k: usize) -> Self {
        let mut p = Self::zero();
        p.set_coeff(k, true);
        p
    }

    pub fn x() -> Self {
        Self::monomial(1)
    }

    /// From the set exponents, e.g. `[2, 1, 0]` is x² + x + 1.
    pub fn from_exponents(exps: &[usize]) -> Self {
        let mut p = Self::zero();
        for &e in exps {
            p.set_coeff(e, !p.coeff(e));
        }
        p
    }

    /// Bit-string with the constant term first, e.g. "111".
    pub fn from_coeff_str(s: &str) -> Result<Self, Gf2Error> {
        let mut p = Self::zero();
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => p.set_coeff(i, true),
                _ => return Err(Gf2Error::Parse { line: 0, msg: format!("bad coefficient {ch:?}") }),
            }
        }
        Ok(p)
    }

    pub fn from_words(mut words: Vec<u64>) -> Self {
        while words.last() == Some(&0) {
            words.pop();
        }
        GF2Poly { words }
    }

    pub fn from_u64(w: u64) -> Self {
        Self::from_words(vec![w])
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.words == [1]
    }

    /// `None` is the degree of the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let last = *self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    pub fn set_coeff(&mut self, i: usize, v: bool) {
        let wi = i / 64;
        if v {
            if self.words.len() <= wi {
                self.words.resize(wi + 1, 0);
            }
            self.words[wi] |= 1 << (i % 64);
        } else if wi < self.words.len() {
            self.words[wi] &= !(1 << (i % 64));
            self.trim();
        }
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let (long, short) = if self.words.len() >= other.words.len() { (self, other) } else { (other, self) };
        let mut w = long.words.clone();
        for (x, y) in w.iter_mut().zip(&short.words) {
            *x ^= *y;
        }
        Self::from_words(w)
    }

    pub fn add_assign(&mut self, other: &Self) {
        if self.words.len() < other.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (x, y) in self.words.iter_mut().zip(&other.words) {
            *x ^= *y;
        }
        self.trim();
    }

    /// Multiply by x^k.
    pub fn shl(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let (ws, bs) = (k / 64, k % 64);
        let mut out = vec![0u64; self.words.len() + ws + 1];
        for (i, &w) in self.words.iter().enumerate() {
            out[i + ws] ^= w << bs;
            if bs != 0 {
                out[i + ws + 1] ^= w >> (64 - bs);
            }
        }
        Self::from_words(out)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let (a, b) = if self.weight() <= other.weight() { (self, other) } else { (other, self) };
        let mut out = vec![0u64; a.words.len() + b.words.len() + 1];
        for (wi, &word) in a.words.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let k = wi * 64 + w.trailing_zeros() as usize;
                w &= w - 1;
                let (ws, bs) = (k / 64, k % 64);
                for (i, &bw) in b.words.iter().enumerate() {
                    out[i + ws] ^= bw << bs;
                    if bs != 0 {
                        out[i + ws + 1] ^= bw >> (64 - bs);
                    }
                }
            }
        }
        Self::from_words(out)
    }

    /// Squaring is linear over GF(2): spread the bits.
    pub fn square(&self) -> Self {
        let mut out = vec![0u64; self.words.len() * 2];
        for (i, &w) in self.words.iter().enumerate() {
            out[2 * i] = spread(w as u32);
            out[2 * i + 1] = spread((w >> 32) as u32);
        }
        Self::from_words(out)
    }

    pub fn divrem(&self, d: &Self) -> Result<(Self, Self), Gf2Error> {
        let dd = d.degree().ok_or(Gf2Error::ZeroPolynomial)?;
        let mut r = self.clone();
        let mut q = Self::zero();
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let shift = rd - dd;
            q.set_coeff(shift, true);
            r.add_assign(&d.shl(shift));
        }
        Ok((q, r))
    }

    pub fn rem(&self, d: &Self) -> Result<Self, Gf2Error> {
        let dd = d.degree().ok_or(Gf2Error::ZeroPolynomial)?;
        let mut r = self.clone();
        // reduce word-wise: cheap path for the common small-modulus case
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            xor_shifted(&mut r.words, &d.words, rd - dd);
            r.trim();
        }
        Ok(r)
    }

    pub fn mulmod(&self, other: &Self, f: &Self) -> Result<Self, Gf2Error> {
        self.mul(other).rem(f)
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a
    }

    pub fn divides(&self, other: &Self) -> Result<bool, Gf2Error> {
        if self.is_zero() {
            return Err(Gf2Error::ZeroPolynomial);
        }
        Ok(other.rem(self)?.is_zero())
    }

    /// Exact division; errors if `d` does not divide `self`.
    pub fn exact_div(&self, d: &Self) -> Result<Self, Gf2Error> {
        let (q, r) = self.divrem(d)?;
        if !r.is_zero() {
            return Err(Gf2Error::InexactDivision);
        }
        Ok(q)
    }

    /// Distinct-degree test: f of degree n is irreducible iff
    /// gcd(x^(2^i) - x, f) = 1 for all i <= n/2.
    pub fn is_irreducible(&self) -> bool {
        let Some(n) = self.degree() else { return false };
        if n == 0 {
            return false;
        }
        if n == 1 {
            return true;
        }
        let x = Self::x();
        let mut h = x.clone();
        for _ in 1..=n / 2 {
            h = h.square().rem(self).expect("nonzero modulus");
            if !h.add(&x).gcd(self).is_one() {
                return false;
            }
        }
        true
    }

    /// Horner evaluation at a square matrix.
    pub fn eval_matrix(&self, a: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if !a.is_square() {
            return Err(Gf2Error::NotSquare(a.rows(), a.cols()));
        }
        let n = a.rows();
        let mut acc = BitMatrix::zeros(n, n);
        let Some(d) = self.degree() else { return Ok(acc) };
        let id = BitMatrix::identity(n);
        for i in (0..=d).rev() {
            acc = acc.mul(a)?;
            if self.coeff(i) {
                acc = acc.add(&id)?;
            }
        }
        Ok(acc)
    }

    /// Substitution f(g).
    pub fn compose(&self, g: &Self) -> Self {
        let Some(d) = self.degree() else { return Self::zero() };
        let mut acc = Self::zero();
        for i in (0..=d).rev() {
            acc = acc.mul(g);
            if self.coeff(i) {
                acc.add_assign(&Self::one());
            }
        }
        acc
    }

    /// Coefficients read constant term first.
    pub fn to_coeff_string(&self) -> String {
        match self.degree() {
            None => "0".into(),
            Some(d) => (0..=d).map(|i| if self.coeff(i) { '1' } else { '0' }).collect(),
        }
    }

    /// Coefficient `i` mirrored: x^deg f(1/x).
    pub fn reverse(&self) -> Self {
        let Some(d) = self.degree() else { return Self::zero() };
        let mut r = Self::zero();
        for i in 0..=d {
            if self.coeff(i) {
                r.set_coeff(d - i, true);
            }
        }
        r
    }
}

fn xor_shifted(dst: &mut Vec<u64>, src: &[u64], k: usize) {
    let (ws, bs) = (k / 64, k % 64);
    let need = src.len() + ws + 1;
    if dst.len() < need {
        dst.resize(need, 0);
    }
    for (i, &w) in src.iter().enumerate() {
        dst[i + ws] ^= w << bs;
        if bs != 0 {
            dst[i + ws + 1] ^= w >> (64 - bs);
        }
    }
}

fn spread(x: u32) -> u64 {
    let mut x = x as u64;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

impl fmt::Display for GF2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(d) = self.degree() else { return write!(f, "0") };
        let mut first = true;
        for i in (0..=d).rev() {
            if !self.coeff(i) {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "1")?,
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for GF2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF2Poly({self})")
    }
}

impl std::str::FromStr for GF2Poly {
    type Err = Gf2Error;

    /// Parses sums like "x^3 + x + 1".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Self::zero();
        let s = s.trim();
        if s == "0" {
            return Ok(p);
        }
        for term in s.split('+') {
            let t = term.trim();
            let e = match t {
                "1" => 0,
                "x" => 1,
                _ => t
                    .strip_prefix("x^")
                    .and_then(|e| e.parse::<usize>().ok())
                    .ok_or_else(|| Gf2Error::Parse { line: 0, msg: format!("bad term {t:?}") })?,
            };
            p.set_coeff(e, !p.coeff(e));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> GF2Poly {
        s.parse().unwrap()
    }

    fn naive_mul(a: &GF2Poly, b: &GF2Poly) -> GF2Poly {
        let mut out = GF2Poly::zero();
        if let (Some(da), Some(db)) = (a.degree(), b.degree()) {
            for i in 0..=da {
                for j in 0..=db {
                    if a.coeff(i) && b.coeff(j) {
                        out.set_coeff(i + j, !out.coeff(i + j));
                    }
                }
            }
        }
        out
    }

    fn arb_poly(max_deg: usize) -> impl Strategy<Value = GF2Poly> {
        proptest::collection::vec(any::<bool>(), 0..=max_deg + 1).prop_map(|bits| {
            let mut q = GF2Poly::zero();
            for (i, b) in bits.into_iter().enumerate() {
                q.set_coeff(i, b);
            }
            q
        })
    }

    #[test]
    fn degree_sentinel() {
        assert_eq!(GF2Poly::zero().degree(), None);
        assert_eq!(GF2Poly::one().degree(), Some(0));
        assert_eq!(GF2Poly::monomial(130).degree(), Some(130));
        let mut q = GF2Poly::monomial(130);
        q.set_coeff(130, false);
        assert!(q.is_zero());
        assert!(q.words().is_empty());
    }

    #[test]
    fn gcd_and_irreducibility() {
        assert_eq!(p("x").gcd(&p("x^2 + x")), p("x"));
        assert!(p("x^2 + x + 1").is_irreducible());
        assert!(!p("x^2 + 1").is_irreducible());
        assert!(p("x^3 + x + 1").is_irreducible());
        assert!(!p("x^4 + x^2 + 1").is_irreducible()); // (x^2+x+1)^2
        assert!(p("x^8 + x^4 + x^3 + x + 1").is_irreducible()); // AES modulus
        assert!(!GF2Poly::zero().is_irreducible());
        assert!(!GF2Poly::one().is_irreducible());
    }

    #[test]
    fn irreducible_counts_match_necklace_formula() {
        // number of irreducible polynomials of degree n over GF(2): 2,1,2,3,6,9,18,30
        let expected = [2usize, 1, 2, 3, 6, 9, 18, 30];
        for (idx, &want) in expected.iter().enumerate() {
            let n = idx + 1;
            let count = (0u64..1 << n)
                .map(|low| GF2Poly::from_u64(low | 1 << n))
                .filter(|f| f.is_irreducible())
                .count();
            assert_eq!(count, want, "degree {n}");
        }
    }

    #[test]
    fn division_by_zero() {
        assert!(matches!(p("x").rem(&GF2Poly::zero()), Err(Gf2Error::ZeroPolynomial)));
        assert!(matches!(GF2Poly::zero().divides(&p("x")), Err(Gf2Error::ZeroPolynomial)));
    }

    #[test]
    fn eval_matrix_examples() {
        let a = BitMatrix::from_rows(&["11", "10"]).unwrap();
        assert!(GF2Poly::one().eval_matrix(&a).unwrap().is_identity());
        assert_eq!(GF2Poly::x().eval_matrix(&a).unwrap(), a);
        assert!(p("x^2 + x + 1").eval_matrix(&a).unwrap().is_zero());
    }

    #[test]
    fn parse_display_roundtrip() {
        let q = p("x^70 + x^3 + 1");
        assert_eq!(q.to_string(), "x^70 + x^3 + 1");
        assert_eq!(p(&q.to_string()), q);
        assert_eq!(GF2Poly::from_coeff_str("1101").unwrap(), p("x^3 + x + 1"));
    }

    proptest! {
        #[test]
        fn mul_matches_naive(a in arb_poly(150), b in arb_poly(90)) {
            prop_assert_eq!(a.mul(&b), naive_mul(&a, &b));
        }

        #[test]
        fn square_matches_mul(a in arb_poly(200)) {
            prop_assert_eq!(a.square(), a.mul(&a));
        }

        #[test]
        fn divrem_reconstructs(a in arb_poly(200), d in arb_poly(70)) {
            prop_assume!(!d.is_zero());
            let (q, r) = a.divrem(&d).unwrap();
            prop_assert_eq!(q.mul(&d).add(&r), a.clone());
            prop_assert!(r.degree() < d.degree());
            prop_assert_eq!(a.rem(&d).unwrap(), r);
        }

        #[test]
        fn gcd_divides_both(a in arb_poly(60), b in arb_poly(60)) {
            prop_assume!(!a.is_zero() && !b.is_zero());
            let g = a.gcd(&b);
            prop_assert!(g.divides(&a).unwrap());
            prop_assert!(g.divides(&b).unwrap());
        }
    }
}
