//! The acceptance suite: thirteen end-to-end checks over every module, with the
//! golden tables compiled in so `mubforge selftest` needs no files.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::One;
use serde::Deserialize;

use crate::entclass::structure_vector;
use crate::fibpoly::{fibonacci_index, identity_suite, FibSide};
use crate::gf2core::{char_poly, BitMatrix};
use crate::mubgen::{build_unitary, build_v, generate_classes, power_bases, trace_minor, verify_mub, Complex64, ComplexMatrix};
use crate::qcompile::{compile, compile_fibonacci, phase_distance, simulate, Circuit, Gate};
use crate::qpke::{
    alpha_averages, alpha_min_double, alpha_min_single, double_key, double_key_ratio, monte_carlo, popt, psuc_wbit_mean, s_min,
    s_min_forward_search, single_key, single_key_ratio, Attack, ProtocolParams,
};
use crate::stabsearch::{
    brute_force_fibonacci, companion_b, count_symmetric_invertible, count_symmetric_invertible_brute, dedup_group_pairs, fermat_b,
    fibonacci_stabilizer, group_stabilizer, has_full_fibonacci_index, homogeneous_g0, inhomogeneous_g0, parse_bitstring,
    search_group, symmetric_from_code, triangle_b, validate_stabilizer, wiedemann_test, FactorDb,
};

pub const TRIANGLE_CORNERS: &str = include_str!("../data/triangle_corners.txt");
pub const COMPANION_STRINGS: &str = include_str!("../data/companion_strings.txt");
pub const FOUR_QUBIT_SETS: &str = include_str!("../data/four_qubit_sets.json");

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).filter_map(|l| {
        let (m, rest) = l.split_once(char::is_whitespace)?;
        Some((m.parse().ok()?, rest.trim()))
    })
}

/// (m, corner A) rows of the triangle table.
pub fn triangle_corners() -> Vec<(usize, BitMatrix)> {
    data_lines(TRIANGLE_CORNERS)
        .map(|(m, rows)| (m, BitMatrix::from_rows(&rows.split(',').collect::<Vec<_>>()).expect("well-formed table")))
        .collect()
}

/// (m, Hankel string) rows of the companion table.
pub fn companion_strings() -> Vec<(usize, String)> {
    data_lines(COMPANION_STRINGS).map(|(m, s)| (m, s.to_string())).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FourQubitEntry {
    Group { label: Vec<usize>, b: BitMatrix, r: BitMatrix, circuit: Vec<String> },
    Semigroup { label: Vec<usize>, c: BitMatrix, circuit: Vec<String> },
    Generator { g0: usize, circuit: Vec<String> },
    Inhomogeneous { label: Vec<usize>, c: BitMatrix, g0: usize, circuit: Vec<String> },
}

/// The symmetric G0^x with ones at (0, k) and (k, 0) for k = 1..i.
pub fn star_g0x(m: usize, i: usize) -> BitMatrix {
    let mut g = BitMatrix::zeros(m, m);
    for k in 1..i {
        g.set(0, k, true);
        g.set(k, 0, true);
    }
    g
}

impl FourQubitEntry {
    pub fn circuit(&self) -> Circuit {
        let lines = match self {
            Self::Group { circuit, .. } | Self::Semigroup { circuit, .. } | Self::Generator { circuit, .. } | Self::Inhomogeneous { circuit, .. } => circuit,
        };
        let gates = lines.iter().map(|l| l.parse::<Gate>().expect("well-formed fixture")).collect();
        Circuit::with_gates(4, gates).expect("qubits in range")
    }

    /// The matrix as printed next to the circuit.
    pub fn displayed(&self) -> BitMatrix {
        match self {
            Self::Group { b, r, .. } => group_stabilizer(b, r).expect("R invertible"),
            Self::Semigroup { c, .. } | Self::Inhomogeneous { c, .. } => c.clone(),
            Self::Generator { g0, .. } => {
                BitMatrix::from_blocks(&BitMatrix::identity(4), &BitMatrix::zeros(4, 4), &star_g0x(4, *g0), &BitMatrix::identity(4)).expect("blocks")
            }
        }
    }

    /// (C, G0) generating the set; semigroup tables are printed transposed.
    pub fn generator_pair(&self) -> Option<(BitMatrix, BitMatrix)> {
        match self {
            Self::Group { .. } => Some((self.displayed(), homogeneous_g0(4))),
            Self::Semigroup { c, .. } => Some((c.transpose(), homogeneous_g0(4))),
            Self::Inhomogeneous { c, g0, .. } => Some((c.clone(), inhomogeneous_g0(&star_g0x(4, *g0)))),
            Self::Generator { .. } => None,
        }
    }

    pub fn label(&self) -> Option<&[usize]> {
        match self {
            Self::Group { label, .. } | Self::Semigroup { label, .. } | Self::Inhomogeneous { label, .. } => Some(label),
            Self::Generator { .. } => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Generator { g0, .. } => format!("C0(g0={g0})"),
            _ => format!("C{:?}", self.label().expect("labeled")),
        }
    }
}

pub fn four_qubit_sets() -> Vec<FourQubitEntry> {
    serde_json::from_str(FOUR_QUBIT_SETS).expect("well-formed fixture")
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:>2} {} ({:.2}s): {}", self.id, self.name, self.elapsed.as_secs_f64(), self.detail)
    }
}

type Check = fn(&FactorDb) -> (bool, String);

pub const CRITERIA: [(&str, Option<u64>, Check); 13] = [
    ("fibonacci identities", Some(5), fibonacci_identities),
    ("triangle table", Some(60), triangle_table),
    ("companion table", Some(30), companion_table),
    ("fermat and wiedemann", Some(120), fermat_wiedemann),
    ("mutual unbiasedness", None, mutual_unbiasedness),
    ("structure vectors", None, structure_vectors),
    ("group-set count", None, group_set_count),
    ("compilation", None, compilation),
    ("trace identities", None, trace_identities),
    ("qpke closed forms", None, qpke_closed_forms),
    ("qpke bounds", None, qpke_bounds),
    ("monte carlo", None, monte_carlo_runs),
    ("brute-force oracle", None, brute_force_oracle),
];

pub fn run_criterion(id: usize, db: &FactorDb) -> CriterionResult {
    let (name, budget, check) = CRITERIA[id - 1];
    let start = Instant::now();
    let (mut passed, mut detail) = check(db);
    let elapsed = start.elapsed();
    if let Some(limit) = budget {
        if elapsed > Duration::from_secs(limit) {
            passed = false;
            detail.push_str(&format!("; exceeded the {limit} s budget"));
        }
    }
    CriterionResult { id, name, passed, detail, elapsed }
}

/// Runs every criterion, reporting each result as soon as it is known.
pub fn run_all(db: &FactorDb, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    (1..=CRITERIA.len())
        .map(|id| {
            let r = run_criterion(id, db);
            report(&r);
            r
        })
        .collect()
}

fn verdict(failures: Vec<String>, ok: String) -> (bool, String) {
    if failures.is_empty() {
        (true, ok)
    } else {
        (false, failures.join("; "))
    }
}

fn fibonacci_identities(_: &FactorDb) -> (bool, String) {
    let r = identity_suite(2024, 500, 300);
    match r.counterexample {
        None => (true, format!("{} pairs, {} checks", r.trials, r.checks)),
        Some((id, k, l)) => (false, format!("{id:?} fails at k={k}, l={l}")),
    }
}

fn triangle_table(db: &FactorDb) -> (bool, String) {
    let rows: Vec<_> = triangle_corners().into_iter().filter(|(m, _)| (2..=64).contains(m)).collect();
    let mut failures = Vec::new();
    for (m, a) in &rows {
        let c = fibonacci_stabilizer(&triangle_b(*m, Some(a)));
        match db.factors(*m, true).map_err(|e| e.to_string()).and_then(|f| validate_stabilizer(&c, *m, &f).map_err(|e| e.to_string())) {
            Ok(true) => {}
            Ok(false) => failures.push(format!("m={m} rejected")),
            Err(e) => failures.push(format!("m={m}: {e}")),
        }
    }
    let covered = rows.len() == 63;
    if !covered {
        failures.push(format!("table has {} of 63 rows", rows.len()));
    }
    verdict(failures, format!("{} corners validated", rows.len()))
}

fn companion_table(db: &FactorDb) -> (bool, String) {
    let rows: Vec<_> = companion_strings().into_iter().filter(|(m, _)| (2..=20).contains(m)).collect();
    let mut failures = Vec::new();
    for (m, s) in &rows {
        let Some(bits) = parse_bitstring(s) else {
            failures.push(format!("m={m}: bad string"));
            continue;
        };
        match has_full_fibonacci_index(&companion_b(*m, &bits), db) {
            Ok(true) => {}
            Ok(false) => failures.push(format!("m={m} s={s} rejected")),
            Err(e) => failures.push(format!("m={m}: {e}")),
        }
    }
    verdict(failures, format!("{} strings give irreducible full-index characteristic polynomials", rows.len()))
}

fn fermat_wiedemann(db: &FactorDb) -> (bool, String) {
    let mut failures = Vec::new();
    let f32 = db.factors(32, true).unwrap_or_default();
    if f32 != [BigUint::from(641u32), BigUint::from(6700417u32)] {
        failures.push(format!("2^32+1 factors {f32:?}"));
    }
    for k in 0..=7 {
        match wiedemann_test(k, db) {
            Ok(true) => {}
            Ok(false) => failures.push(format!("k={k} fails")),
            Err(e) => failures.push(format!("k={k}: {e}")),
        }
    }
    verdict(failures, "k = 0..7 verified".into())
}

/// One Fibonacci set per m, from the golden tables (m = 1 uses B = (1)).
pub fn small_fibonacci_b(m: usize) -> BitMatrix {
    if m == 1 {
        return BitMatrix::identity(1);
    }
    let (_, a) = triangle_corners().into_iter().find(|(mm, _)| *mm == m).expect("table covers m");
    triangle_b(m, Some(&a))
}

fn mutual_unbiasedness(db: &FactorDb) -> (bool, String) {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for m in 1..=4 {
        let b = small_fibonacci_b(m);
        let ok = db.factors(m, true).ok().and_then(|f| validate_stabilizer(&fibonacci_stabilizer(&b), m, &f).ok()).unwrap_or(false);
        if !ok {
            failures.push(format!("m={m}: B does not validate"));
        }
        let u = build_unitary(&b).expect("dense m");
        let d = 1u64 << m;
        let order = u.pow(d + 1).max_diff(&ComplexMatrix::identity(d as usize));
        let rep = verify_mub(&power_bases(&u), 1e-9);
        worst = worst.max(rep.max_deviation).max(order);
        if !rep.passed || rep.bases != d as usize + 1 || order >= 1e-9 {
            failures.push(format!("m={m}: deviation {:.1e}, order error {order:.1e}", rep.max_deviation));
        }
    }
    verdict(failures, format!("m = 1..4, worst deviation {worst:.1e}"))
}

fn structure_of(c: &BitMatrix, g0: &BitMatrix) -> Result<Vec<usize>, String> {
    let set = generate_classes(c, g0).map_err(|e| e.to_string())?;
    Ok(structure_vector(&set).map_err(|e| e.to_string())?.counts)
}

fn rows(r: &[&str]) -> BitMatrix {
    BitMatrix::from_rows(r).expect("literal")
}

/// The four three-qubit generators and their expected structure vectors.
pub fn three_qubit_generators() -> Vec<(&'static str, BitMatrix, BitMatrix, Vec<usize>)> {
    let g0 = homogeneous_g0(3);
    vec![
        ("fibonacci", fibonacci_stabilizer(&small_fibonacci_b(3)), g0.clone(), vec![3, 0, 6]),
        ("C(2,3,4)", group_stabilizer(&rows(&["011", "001", "100"]), &rows(&["001", "010", "100"])).expect("invertible"), g0.clone(), vec![2, 3, 4]),
        ("C(1,6,2)", rows(&["011010", "011001", "000100", "001001", "010010", "100000"]).transpose(), g0, vec![1, 6, 2]),
        (
            "C(0,9,0)",
            rows(&["000001", "100100", "000010", "001000", "100000", "010000"]),
            inhomogeneous_g0(&rows(&["010", "100", "000"])),
            vec![0, 9, 0],
        ),
    ]
}

fn structure_vectors(_: &FactorDb) -> (bool, String) {
    let mut failures = Vec::new();
    for (name, c, g0, want) in three_qubit_generators() {
        match structure_of(&c, &g0) {
            Ok(got) if got == want => {}
            Ok(got) => failures.push(format!("{name}: got {got:?}")),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let entries = four_qubit_sets();
    let mut checked = 0;
    for e in &entries {
        let (Some((c, g0)), Some(label)) = (e.generator_pair(), e.label()) else { continue };
        checked += 1;
        match structure_of(&c, &g0) {
            Ok(got) if got == label => {}
            Ok(got) => failures.push(format!("{}: got {got:?}", e.name())),
            Err(e2) => failures.push(format!("{}: {e2}", e.name())),
        }
    }
    verdict(failures, format!("4 three-qubit and {checked} four-qubit labels reproduced"))
}

fn group_set_count(db: &FactorDb) -> (bool, String) {
    let pairs = match search_group(3, db) {
        Ok(p) => p,
        Err(e) => return (false, e.to_string()),
    };
    let g0 = homogeneous_g0(3);
    let matching: Vec<_> = pairs
        .into_iter()
        .filter(|p| group_stabilizer(&p.b, &p.r).and_then(|c| structure_of(&c, &g0).ok()).is_some_and(|s| s == [2, 3, 4]))
        .collect();
    let reps = dedup_group_pairs(&matching).len();
    let passed = matching.len() == 126 && reps == 18;
    (passed, format!("{} pairs with structure (2,3,4), {reps} after dedup", matching.len()))
}

fn compilation(_: &FactorDb) -> (bool, String) {
    let mut failures = Vec::new();
    let entries = four_qubit_sets();
    let bad: Vec<String> = entries.iter().filter(|e| e.circuit().adjoint_symplectic() != e.displayed()).map(FourQubitEntry::name).collect();
    if !bad.is_empty() {
        failures.push(format!("{} of {} printed circuits do not reproduce their matrix: {}", bad.len(), entries.len(), bad.join(", ")));
    }
    for (name, c, _, _) in three_qubit_generators().into_iter().take(2) {
        match compile(&c) {
            Ok(circ) if circ.symplectic() == c => {}
            _ => failures.push(format!("{name}: compile round trip")),
        }
    }
    for m in 1..=4 {
        let b = small_fibonacci_b(m);
        let target = build_unitary(&b).expect("dense m");
        for circ in [compile_fibonacci(&b), compile(&fibonacci_stabilizer(&b))] {
            let dist = circ.ok().and_then(|c| simulate(&c).ok()).map(|u| phase_distance(&u, &target)).unwrap_or(f64::INFINITY);
            if dist >= 1e-9 {
                failures.push(format!("m={m}: simulated unitary off by {dist:.1e}"));
            }
        }
    }
    for k in 0..=6 {
        let b = fermat_b(k).expect("small k");
        let m = b.rows();
        let (s, cz, h, _) = compile_fibonacci(&b).expect("symmetric").counts();
        if (s, cz, h) != (1, m - 1, m) {
            failures.push(format!("fermat k={k}: counts ({s},{cz},{h})"));
        }
    }
    verdict(failures, format!("{} four-qubit circuits, m = 1..4 unitaries, fermat k = 0..6 counts", entries.len()))
}

fn trace_identities(_: &FactorDb) -> (bool, String) {
    let mut failures = Vec::new();
    for (k, m) in [(1u32, 2u32), (2, 4)] {
        let v = build_v(&fermat_b(k).expect("small k")).expect("dense m");
        let tr = v.trace();
        let want = Complex64::new(0.0, -(2f64.powf(m as f64 / 2.0)));
        let minors = trace_minor(&v, 2).expect("l = 2");
        let want_minor = Complex64::new(-(2f64.powi(m as i32)), 0.0);
        if (tr - want).norm() >= 1e-9 {
            failures.push(format!("m={m}: tr V = {tr}"));
        }
        if (minors - want_minor).norm() >= 1e-9 {
            failures.push(format!("m={m}: minor sum = {minors}"));
        }
    }
    verdict(failures, "m = 2, 4".into())
}

fn qpke_closed_forms(_: &FactorDb) -> (bool, String) {
    let mut failures = Vec::new();
    let mut check = |name: &str, got: f64, want: f64, tol: f64| {
        if (got - want).abs() > tol {
            failures.push(format!("{name}: {got} vs {want}"));
        }
    };
    let single = single_key(0, 10, 1, 0.0).expect("valid");
    check("single-key mean", single.mean, 0.75, 1e-12);
    check("double-key", double_key(1, 0.0).expect("valid").eve, (2.0 + 2f64.sqrt()) / 4.0, 1e-12);
    check("single-key ratio at alpha_min", single_key_ratio(alpha_min_single()), 3f64.sqrt() - 1.0, 1e-6);
    check("double-key ratio at alpha_min", double_key_ratio(alpha_min_double()), 2f64.sqrt() * ((1.0 + 2f64.sqrt()).sqrt() - 1.0), 1e-6);
    match alpha_averages() {
        Ok(a) => {
            check("single average", a.single_full, 0.773, 2e-3);
            check("double average", a.double_full, 0.830, 2e-3);
            check("single average on pi/3", a.single_third, 0.740, 2e-3);
            check("double average on alpha_lim", a.double_lim, 0.816, 2e-3);
        }
        Err(e) => failures.push(e.to_string()),
    }
    verdict(failures, "all closed forms and averages within tolerance".into())
}

fn qpke_bounds(_: &FactorDb) -> (bool, String) {
    let mut failures = Vec::new();
    let mut worst_gap = f64::INFINITY;
    for t in 2..=50 {
        let mean = match psuc_wbit_mean(10, t) {
            Ok(v) => v,
            Err(e) => {
                failures.push(e.to_string());
                continue;
            }
        };
        let bound = 1.0 - 1.0 / (6.0 * t as f64);
        worst_gap = worst_gap.min(bound + 2e-3 - mean);
        if mean > bound + 2e-3 {
            failures.push(format!("T={t}: mean {mean:.5} above 1-1/(6T)"));
        }
        if mean > popt(t) {
            failures.push(format!("T={t}: mean {mean:.5} above popt {:.5}", popt(t)));
        }
        let (ours, fs) = (s_min(t, 0.01), s_min_forward_search(t, 0.01));
        match (ours, fs) {
            (Ok(a), Ok(b)) if (b.exact as f64 - 2.0 / 3.0 * a.exact as f64).abs() <= 1.0 => {}
            (Ok(a), Ok(b)) => failures.push(format!("T={t}: s_min {} vs forward search {}", a.exact, b.exact)),
            _ => failures.push(format!("T={t}: s_min error")),
        }
    }
    let asym = (popt(50) - (1.0 - 1.0 / 400.0)).abs();
    if asym >= 5e-4 {
        failures.push(format!("popt(50) off its asymptote by {asym:.1e}"));
    }
    verdict(failures, format!("T = 2..50, smallest slack under the bound {worst_gap:.1e}, asymptote gap {asym:.1e}"))
}

fn monte_carlo_runs(_: &FactorDb) -> (bool, String) {
    let mut failures = Vec::new();
    let params = ProtocolParams::default();
    let mut worst: f64 = 0.0;
    for (attack, want) in [(Attack::Single, 0.75), (Attack::Double, (2.0 + 2f64.sqrt()) / 4.0)] {
        for seed in 1..=10u64 {
            let est = monte_carlo(attack, &params, 1_000_000, seed).expect("valid");
            let z = (est.mean - want).abs() / est.stderr;
            worst = worst.max(z);
            if z > 3.0 {
                failures.push(format!("{attack:?} seed {seed}: {:.5} is {z:.2} standard errors off", est.mean));
            }
        }
    }
    verdict(failures, format!("seeds 1..10 per attack, 10^6 trials each, largest deviation {worst:.2} standard errors"))
}

fn brute_force_oracle(db: &FactorDb) -> (bool, String) {
    let mut failures = Vec::new();
    for m in 2..=3 {
        let accepted = match brute_force_fibonacci(m, db) {
            Ok(a) => a,
            Err(e) => return (false, e.to_string()),
        };
        let plus = db.factors(m, true).unwrap_or_default();
        let full = (BigUint::one() << m) + 1u32;
        let oracle: Vec<BitMatrix> = (0u64..1 << (m * (m + 1) / 2))
            .map(|c| symmetric_from_code(m, c))
            .filter(|b| {
                let chi = char_poly(b).expect("square");
                chi.is_irreducible() && fibonacci_index(&chi, &[], &plus).is_ok_and(|r| r.side == FibSide::PlusOne && r.index == full)
            })
            .collect();
        if accepted != oracle {
            failures.push(format!("m={m}: validator accepts {}, index oracle {}", accepted.len(), oracle.len()));
        }
    }
    for m in 1..=5 {
        let closed = count_symmetric_invertible(m);
        let brute = count_symmetric_invertible_brute(m);
        if closed != BigUint::from(brute) {
            failures.push(format!("a({m}) = {closed}, enumeration {brute}"));
        }
    }
    verdict(failures, "m = 2, 3 agree; a(m) matches for m <= 5".into())
}
