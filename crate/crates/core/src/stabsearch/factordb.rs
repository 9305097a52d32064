//! Prime factorizations of 2^m ± 1.
//!
//! File format, one entry per line:
//!
//! ```text
//! # comment
//! 2^5+1: 3,11
//! 2^5-1: 31
//! 2^1-1:
//! ```
//!
//! Factors are decimal and repeated for multiplicity; the product is checked
//! against the descriptor on load.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use super::SearchError;
use crate::fibpoly::two_pow_pm1;

/// Environment variable naming a factor file to use instead of the built-in table.
pub const FACTOR_DB_ENV: &str = "MUBFORGE_FACTOR_DB";

/// Trial division is only attempted up to this exponent.
pub const TRIAL_DIVISION_MAX_M: usize = 40;

const EMBEDDED: &str = include_str!("../../data/factors.txt");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactorDb {
    entries: BTreeMap<(usize, bool), Vec<BigUint>>,
}

impl FactorDb {
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED).expect("built-in factor table is well formed")
    }

    pub fn load(path: &Path) -> Result<Self, SearchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SearchError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Explicit path, else `MUBFORGE_FACTOR_DB`, else the built-in table.
    pub fn resolve(path: Option<&Path>) -> Result<Self, SearchError> {
        if let Some(p) = path {
            return Self::load(p);
        }
        match std::env::var_os(FACTOR_DB_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::embedded()),
        }
    }

    pub fn parse(text: &str) -> Result<Self, SearchError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| SearchError::FactorParse { line: line_no, msg };
            let (key, list) = line.split_once(':').ok_or_else(|| bad("missing ':'".into()))?;
            let key = key.trim();
            let rest = key.strip_prefix("2^").ok_or_else(|| bad(format!("bad descriptor {key:?}")))?;
            let (exp, plus) = if let Some(e) = rest.strip_suffix("+1") {
                (e, true)
            } else if let Some(e) = rest.strip_suffix("-1") {
                (e, false)
            } else {
                return Err(bad(format!("bad descriptor {key:?}")));
            };
            let m: usize = exp.trim().parse().map_err(|_| bad(format!("bad exponent {exp:?}")))?;
            let mut factors = Vec::new();
            for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let f: BigUint = tok.parse().map_err(|_| bad(format!("bad factor {tok:?}")))?;
                factors.push(f);
            }
            let prod = factors.iter().fold(BigUint::one(), |a, f| a * f);
            if prod != two_pow_pm1(m, plus) {
                return Err(bad(format!("factors do not multiply to {key}")));
            }
            entries.insert((m, plus), factors);
        }
        Ok(FactorDb { entries })
    }

    pub fn get(&self, m: usize, plus: bool) -> Option<&[BigUint]> {
        self.entries.get(&(m, plus)).map(Vec::as_slice)
    }

    /// Factors of 2^m ± 1 from the table, falling back to trial division for small m.
    pub fn factors(&self, m: usize, plus: bool) -> Result<Vec<BigUint>, SearchError> {
        if let Some(f) = self.get(m, plus) {
            return Ok(f.to_vec());
        }
        if m <= TRIAL_DIVISION_MAX_M {
            let n = two_pow_pm1(m, plus).to_u64().expect("m <= 40 fits in u64");
            return Ok(trial_division(n).into_iter().map(BigUint::from).collect());
        }
        Err(SearchError::MissingFactorization { m, sign: if plus { '+' } else { '-' } })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn trial_division(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_table_is_complete() {
        let db = FactorDb::embedded();
        for m in 1..=128 {
            assert!(db.get(m, true).is_some(), "2^{m}+1");
            assert!(db.get(m, false).is_some(), "2^{m}-1");
        }
        let f5: Vec<BigUint> = db.get(32, true).unwrap().to_vec();
        assert_eq!(f5, vec![BigUint::from(641u32), BigUint::from(6700417u32)]);
    }

    #[test]
    fn table_agrees_with_trial_division() {
        let db = FactorDb::embedded();
        for m in 1..=32 {
            for plus in [true, false] {
                let n = two_pow_pm1(m, plus).to_u64().unwrap();
                let want: Vec<BigUint> = trial_division(n).into_iter().map(BigUint::from).collect();
                let mut got = db.get(m, plus).unwrap().to_vec();
                got.sort();
                assert_eq!(got, want, "2^{m}{}1", if plus { '+' } else { '-' });
            }
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = FactorDb::parse("# header\n2^5+1: 3,11\n2^5-1: 30\n").unwrap_err();
        assert!(matches!(err, SearchError::FactorParse { line: 3, .. }), "{err}");
        let err = FactorDb::parse("2^x+1: 3\n").unwrap_err();
        assert!(matches!(err, SearchError::FactorParse { line: 1, .. }));
        let ok = FactorDb::parse("2^1-1:\n2^3+1: 3,3 # nine\n").unwrap();
        assert_eq!(ok.get(3, true).unwrap().len(), 2);
        assert!(ok.get(1, false).unwrap().is_empty());
    }

    #[test]
    fn fallback_and_missing() {
        let db = FactorDb::default();
        assert_eq!(db.factors(10, true).unwrap(), vec![BigUint::from(5u32), BigUint::from(5u32), BigUint::from(41u32)]);
        assert!(matches!(db.factors(41, true), Err(SearchError::MissingFactorization { m: 41, sign: '+' })));
    }
}
