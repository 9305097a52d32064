//! `mubforge` command line. `run` returns the process exit code: 0 on success,
//! 1 when a verification fails, 2 for usage, input or parameter errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::entclass::structure_vector;
use crate::fibpoly::{emit_triangle, TriangleKind};
use crate::gf2core::BitMatrix;
use crate::mubgen::{class_eigenbasis, generate_classes, verify_mub, ComplexMatrix, MubSet, DENSE_MAX_M};
use crate::qcompile::{binary_power_plan, compile, compile_fibonacci, verify_compilation, Circuit};
use crate::qpke;
use crate::selftest;
use crate::stabsearch::{
    fibonacci_stabilizer, homogeneous_g0, run_search, search_general, validate_with_generator, wiedemann_test, Family,
    FactorDb, GeneralSearch, SearchSpec, StabilizerCandidate,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            _ => 2,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "mubforge", version, about = "Cyclic mutually unbiased bases for qubits over GF(2)")]
struct Cli {
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// factor table for 2^m ± 1 (default: $MUBFORGE_FACTOR_DB, then the built-in table)
    #[arg(long, global = true)]
    factors: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find stabilizer matrices of one family.
    Search(SearchArgs),
    /// Check a set file: symplectic, cyclic conditions, unbiasedness, structure vector.
    Verify(VerifyArgs),
    /// Emit and verify a circuit for a set file.
    Compile(CompileArgs),
    /// Check the Fermat construction for m = 2^k.
    Wiedemann {
        #[arg(long)]
        k: u32,
    },
    /// Attack analysis tables, figure data and Monte Carlo runs.
    Qpke(QpkeArgs),
    /// Print a binary triangle pattern.
    Fractal {
        #[arg(long, value_enum, default_value = "pascal")]
        kind: FractalKind,
        #[arg(long, default_value_t = 64)]
        rows: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Selftest {
        /// run a single criterion (1..=13)
        #[arg(long)]
        only: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Triangle,
    Companion,
    Fermat,
    Group,
    General,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// number of qubits
    #[arg(long)]
    m: Option<usize>,
    /// Fermat level, m = 2^k
    #[arg(long)]
    k: Option<u32>,
    /// starting corner size (triangle)
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// keep only sets with this structure vector, e.g. 2,3,4
    #[arg(long, value_delimiter = ',')]
    target: Option<Vec<usize>>,
    /// initial generator G0^x as comma-separated rows (general)
    #[arg(long)]
    g0x: Option<String>,
    /// random samples for m = 4 (general)
    #[arg(long, default_value_t = 2_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// stop after this many hits (general, 0 = all)
    #[arg(long, default_value_t = 0)]
    limit: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// JSON set file (object or array) or a bit-grid matrix C
    file: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompileArgs {
    /// JSON set file or a bit-grid matrix C
    file: PathBuf,
    /// which set in an array file
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// circuit output (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// verify this circuit file instead of compiling
    #[arg(long)]
    check: Option<PathBuf>,
    /// also write circuits for C^(2^i) into this directory
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AttackArg {
    Single,
    Double,
}

#[derive(Debug, Args)]
struct QpkeArgs {
    /// figure data: 6.1, 6.2, 6.3 or 7.3
    #[arg(long)]
    fig: Option<String>,
    /// Monte Carlo run for one attack
    #[arg(long, value_enum)]
    mc: Option<AttackArg>,
    #[arg(long, default_value_t = 10)]
    n: u32,
    #[arg(long, default_value_t = 1)]
    t: usize,
    #[arg(long, default_value_t = 50)]
    tmax: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10")]
    ts: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    smax: u32,
    #[arg(long, default_value_t = 1)]
    s: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FractalKind {
    Pascal,
    Fibonacci,
    Charpoly,
}

/// A set file record: the set plus the matrices it was built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetRecord {
    #[serde(flatten)]
    pub set: MubSet,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none", default)]
    pub b: Option<BitMatrix>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none", default)]
    pub r: Option<BitMatrix>,
}

impl SetRecord {
    fn from_candidate(c: StabilizerCandidate, family: &str) -> Self {
        SetRecord {
            set: MubSet { m: c.g0.cols(), c: c.c, g0: c.g0, family: family.into(), provenance: c.provenance, structure: None },
            b: c.b,
            r: c.r,
        }
    }
}

pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 2;
        }
        // a second call in the same process (tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let db = || FactorDb::resolve(cli.factors.as_deref()).map_err(input);
    match &cli.command {
        Command::Search(a) => search(a, &db()?),
        Command::Verify(a) => verify(a),
        Command::Compile(a) => compile_cmd(a),
        Command::Wiedemann { k } => {
            if *k > 11 {
                return Err(CliError::Usage(format!("k = {k} is above the supported 11")));
            }
            if wiedemann_test(*k, &db()?).map_err(input)? {
                println!("conjecture verified for k={k}");
                Ok(())
            } else {
                Err(CliError::Verification(format!("conjecture failed for k={k}")))
            }
        }
        Command::Qpke(a) => qpke_cmd(a),
        Command::Fractal { kind, rows, out } => {
            let kind = match kind {
                FractalKind::Pascal => TriangleKind::Pascal,
                FractalKind::Fibonacci => TriangleKind::Fibonacci,
                FractalKind::Charpoly => TriangleKind::Charpoly,
            };
            write_output(out.as_deref(), &emit_triangle(kind, *rows))
        }
        Command::Selftest { only } => {
            let db = db()?;
            let results = match only {
                Some(id) if (1..=selftest::CRITERIA.len()).contains(id) => {
                    let r = selftest::run_criterion(*id, &db);
                    println!("{r}");
                    vec![r]
                }
                Some(id) => return Err(CliError::Usage(format!("criterion {id} does not exist"))),
                None => selftest::run_all(&db, |r| println!("{r}")),
            };
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(CliError::Verification(format!("{failed} criteria failed")));
            }
            Ok(())
        }
    }
}

/// Write to a file or stdout, always newline-terminated.
fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_rows(s: &str) -> Result<BitMatrix, CliError> {
    BitMatrix::from_rows(&s.split(',').map(str::trim).collect::<Vec<_>>()).map_err(input)
}

fn search(a: &SearchArgs, db: &FactorDb) -> Result<(), CliError> {
    let (family, name) = match a.family {
        FamilyArg::Triangle => (Family::Triangle, "triangle"),
        FamilyArg::Companion => (Family::Companion, "companion"),
        FamilyArg::Fermat => (Family::Fermat, "fermat"),
        FamilyArg::Group => (Family::Group, "group"),
        FamilyArg::General => (Family::GeneralSymplectic, "general"),
    };
    let m = match (a.m, a.k, family) {
        (_, Some(k), Family::Fermat) if k <= 12 => 1usize << k,
        (_, Some(k), Family::Fermat) => return Err(CliError::Usage(format!("k = {k} is above the supported 12"))),
        (Some(m), None, _) if m >= 1 => m,
        _ => return Err(CliError::Usage("give --m (or --k for the fermat family)".into())),
    };
    let found = if let Family::GeneralSymplectic = family {
        let mut opts = GeneralSearch::new(m);
        opts.g0x = a.g0x.as_deref().map(parse_rows).transpose()?;
        opts.target = a.target.clone();
        opts.samples = a.samples;
        opts.seed = a.seed;
        opts.limit = a.limit;
        search_general(&opts).map_err(input)?
    } else {
        let spec = SearchSpec { m, family, r: a.r, target_structure: a.target.clone() };
        run_search(&spec, db).map_err(input)?
    };
    if found.is_empty() {
        return Err(CliError::Verification(format!("no {name} set found for m={m}")));
    }
    let records: Vec<SetRecord> = found.into_iter().map(|c| SetRecord::from_candidate(c, name)).collect();
    eprintln!("{} set(s) found", records.len());
    write_output(a.out.as_deref(), &serde_json::to_string_pretty(&records).map_err(input)?)
}

/// JSON object, JSON array, or a bit-grid matrix C with G0 = (I, 0)ᵗ.
pub fn read_sets(path: &Path) -> Result<Vec<SetRecord>, CliError> {
    let text = read(path)?;
    let trimmed = text.trim_start();
    let diag = |e: serde_json::Error| CliError::Input(format!("{}: {e}", path.display()));
    if trimmed.starts_with('[') {
        return serde_json::from_str(&text).map_err(diag);
    }
    if trimmed.starts_with('{') {
        return Ok(vec![serde_json::from_str(&text).map_err(diag)?]);
    }
    let c = BitMatrix::from_text(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if c.rows() != c.cols() || c.rows() % 2 != 0 {
        return Err(CliError::Input(format!("{}: C must be square of even size, got {}x{}", path.display(), c.rows(), c.cols())));
    }
    let m = c.rows() / 2;
    Ok(vec![SetRecord {
        set: MubSet { m, c, g0: homogeneous_g0(m), family: String::new(), provenance: path.display().to_string(), structure: None },
        b: None,
        r: None,
    }])
}

fn check_shapes(rec: &SetRecord, idx: usize) -> Result<(), CliError> {
    let m = rec.set.m;
    let (c, g0) = (&rec.set.c, &rec.set.g0);
    if m == 0 || c.rows() != 2 * m || c.cols() != 2 * m || g0.rows() != 2 * m || g0.cols() != m {
        return Err(CliError::Input(format!(
            "set {idx}: m = {m} but C is {}x{} and G0 is {}x{}",
            c.rows(),
            c.cols(),
            g0.rows(),
            g0.cols()
        )));
    }
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    if !(a.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let sets = read_sets(&a.file)?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (idx, rec) in sets.iter().enumerate() {
        check_shapes(rec, idx)?;
        let (c, g0, m) = (&rec.set.c, &rec.set.g0, rec.set.m);
        if !c.is_symplectic().map_err(input)? {
            failures.push(format!("set {idx}: symplectic check failed"));
            reports.push(json!({"index": idx, "m": m, "symplectic": false}));
            continue;
        }
        let cyclic = if m <= 16 { Some(validate_with_generator(c, g0).map_err(input)?) } else { None };
        if cyclic == Some(false) {
            failures.push(format!("set {idx}: cyclic conditions fail"));
            reports.push(json!({"index": idx, "m": m, "symplectic": true, "cyclic": false}));
            continue;
        }
        let set = generate_classes(c, g0).map_err(input)?;
        let mub = if m <= DENSE_MAX_M.min(4) {
            let bases = set
                .generators
                .iter()
                .map(|g| class_eigenbasis(g).map(|cols| ComplexMatrix::from_fn(cols.len(), |i, j| cols[j][i])))
                .collect::<Result<Vec<_>, _>>()
                .map_err(input)?;
            let rep = verify_mub(&bases, a.tol);
            if !rep.passed {
                failures.push(format!("set {idx}: bases are not mutually unbiased (deviation {:.2e})", rep.max_deviation));
            }
            Some(rep.max_deviation)
        } else {
            None
        };
        let structure = structure_vector(&set).ok().map(|s| s.counts);
        if let (Some(want), Some(got)) = (&rec.set.structure, &structure) {
            if want != got {
                failures.push(format!("set {idx}: structure {got:?} differs from recorded {want:?}"));
            }
        }
        reports.push(json!({"index": idx, "m": m, "symplectic": true, "cyclic": cyclic, "mub_max_deviation": mub, "structure": structure}));
    }
    write_output(a.out.as_deref(), &serde_json::to_string_pretty(&reports).map_err(input)?)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}

fn compile_cmd(a: &CompileArgs) -> Result<(), CliError> {
    let sets = read_sets(&a.file)?;
    let rec = sets.get(a.index).ok_or_else(|| CliError::Usage(format!("{} holds {} set(s)", a.file.display(), sets.len())))?;
    check_shapes(rec, a.index)?;
    let c = &rec.set.c;
    if !c.is_symplectic().map_err(input)? {
        return Err(CliError::Verification("symplectic check failed".into()));
    }
    let circuit = match &a.check {
        Some(p) => Circuit::from_text(&read(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => match &rec.b {
            Some(b) if fibonacci_stabilizer(b) == *c => compile_fibonacci(b).map_err(input)?,
            _ => compile(c).map_err(input)?,
        },
    };
    if circuit.m != rec.set.m {
        return Err(CliError::Input(format!("circuit has {} qubits, set has {}", circuit.m, rec.set.m)));
    }
    let report = verify_compilation(c, &circuit, a.tol).map_err(input)?;
    let (s, cz, h, cx) = circuit.counts();
    eprintln!(
        "gates: S={s} CZ={cz} H={h} CX={cx}; symplectic {}; unitary {}",
        if report.symplectic_ok { "ok" } else { "FAILED" },
        match report.unitary_ok {
            Some(true) => "ok",
            Some(false) => "FAILED",
            None => "skipped",
        }
    );
    if a.check.is_none() {
        write_output(a.out.as_deref(), &circuit.to_text())?;
    }
    if let Some(dir) = &a.plan {
        let plan = binary_power_plan(c).map_err(input)?;
        fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        for (i, circ) in plan.circuits.iter().enumerate() {
            write_output(Some(&dir.join(format!("power_{i}.txt"))), &circ.to_text())?;
        }
    }
    if !report.symplectic_ok {
        return Err(CliError::Verification("symplectic check failed".into()));
    }
    if report.unitary_ok == Some(false) {
        return Err(CliError::Verification("unitary check failed".into()));
    }
    Ok(())
}

fn qpke_cmd(a: &QpkeArgs) -> Result<(), CliError> {
    let params = qpke::ProtocolParams { n: a.n, s: a.s, t: a.t, alpha: a.alpha, epsilon: a.epsilon };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(attack) = a.mc {
        let attack = match attack {
            AttackArg::Single => qpke::Attack::Single,
            AttackArg::Double => qpke::Attack::Double,
        };
        let est = qpke::monte_carlo(attack, &params, a.trials, a.seed).map_err(input)?;
        let want = qpke::analytic_success(attack, &params).map_err(input)?;
        let text = format!("attack,trials,seed,estimate,stderr,analytic\n{attack:?},{},{},{},{},{want}\n", est.trials, a.seed, est.mean, est.stderr);
        return write_output(a.out.as_deref(), &text.to_lowercase());
    }
    let text = match a.fig.as_deref() {
        Some("6.1") => qpke::fig_6_1(a.n, a.t),
        Some("6.2") => qpke::fig_6_2(a.n, a.tmax),
        Some("6.3") => qpke::fig_6_3(a.n, &a.ts, a.smax),
        Some("7.3") => qpke::fig_7_3(a.smax),
        Some(other) => return Err(CliError::Usage(format!("unknown figure {other:?} (6.1, 6.2, 6.3, 7.3)"))),
        None => summary(&params),
    }
    .map_err(input)?;
    write_output(a.out.as_deref(), &text)
}

fn summary(p: &qpke::ProtocolParams) -> Result<String, qpke::QpkeError> {
    let single = qpke::single_key(0, p.n, p.s, p.alpha)?;
    let double = qpke::double_key(p.s, p.alpha)?;
    let avg = qpke::alpha_averages()?;
    let sm = qpke::s_min(p.t, p.epsilon)?;
    let fs = qpke::s_min_forward_search(p.t, p.epsilon)?;
    let rows = [
        ("single_key_mean", single.mean),
        ("single_key_p_s", single.p_s),
        ("single_key_ratio", single.ratio),
        ("double_key", double.eve),
        ("double_key_p_s", double.p_s),
        ("double_key_ratio", double.ratio),
        ("alpha_min_single", qpke::alpha_min_single()),
        ("alpha_min_double", qpke::alpha_min_double()),
        ("average_single_full", avg.single_full),
        ("average_double_full", avg.double_full),
        ("average_single_third", avg.single_third),
        ("average_double_lim", avg.double_lim),
        ("popt", qpke::popt(p.t)),
        ("s_min", sm.exact as f64),
        ("s_min_linear", sm.linear_bound),
        ("s_min_forward_search", fs.exact as f64),
        ("s_min_forward_search_linear", fs.linear_bound),
    ];
    let mut out = String::from("quantity,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["mubforge"]), 2);
        assert_eq!(run(["mubforge", "search", "--family", "nope"]), 2);
        assert_eq!(run(["mubforge", "search", "--family", "triangle"]), 2);
        assert_eq!(run(["mubforge", "selftest", "--only", "14"]), 2);
        assert_eq!(run(["mubforge", "qpke", "--fig", "9.9"]), 2);
        assert_eq!(run(["mubforge", "--help"]), 0);
    }

    #[test]
    fn record_roundtrip() {
        let b = BitMatrix::from_rows(&["11", "10"]).unwrap();
        let rec = SetRecord {
            set: MubSet { m: 2, c: fibonacci_stabilizer(&b), g0: homogeneous_g0(2), family: "triangle".into(), provenance: "test".into(), structure: None },
            b: Some(b),
            r: None,
        };
        let js = serde_json::to_string(&rec).unwrap();
        assert!(js.contains("\"B\":[\"11\",\"10\"]"));
        let back: SetRecord = serde_json::from_str(&js).unwrap();
        assert_eq!(back.set, rec.set);
        let bare: SetRecord = serde_json::from_str(r#"{"m":1,"C":["01","10"],"G0":["1","0"]}"#).unwrap();
        assert_eq!(bare.set.family, "");
    }
}
