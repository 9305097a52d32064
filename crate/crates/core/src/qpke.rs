//! Attack analysis for the single-qubit-rotation public-key protocol.
//!
//! A private key k ∈ Z_{2^n} is published as the qubit with Bloch vector
//! cos(kθ_n) ẑ + sin(kθ_n) x̂, θ_n = π/2^{n−1}. A message bit is spread over an
//! s-bit codeword whose parity is the bit; each codeword bit is encrypted by
//! rotating the matching key qubit by π when the bit is one.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, SQRT_2};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QpkeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("T = {0} exceeds the exact-enumeration limit {EXACT_T_MAX}")]
    TooManyCopies(usize),
    #[error("quadrature did not converge on [{0}, {1}]")]
    Quadrature(f64, f64),
}

/// psuc_wbit enumerates all (T+1)² tallies up to this T.
pub const EXACT_T_MAX: usize = 64;
pub const HOLEVO_TAU_MAX: usize = 64;
/// Default slack, in bits, for the Holevo security predicate n ≥ log₂(T') + margin.
pub const DEFAULT_HOLEVO_MARGIN: f64 = 20.0;
const N_MAX: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub n: u32,
    pub s: u32,
    pub t: usize,
    pub alpha: f64,
    pub epsilon: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams { n: 10, s: 1, t: 1, alpha: 0.0, epsilon: 0.01 }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<(), QpkeError> {
        if self.n == 0 || self.n > N_MAX {
            return Err(QpkeError::InvalidParams(format!("n = {} must lie in 1..={N_MAX}", self.n)));
        }
        if self.s == 0 || self.t == 0 {
            return Err(QpkeError::InvalidParams("s and T must be at least 1".into()));
        }
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&self.alpha) {
            return Err(QpkeError::InvalidParams(format!("alpha = {} outside [-pi/2, pi/2]", self.alpha)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(QpkeError::InvalidParams(format!("epsilon = {} outside (0, 1/2]", self.epsilon)));
        }
        Ok(())
    }
}

pub fn theta(n: u32) -> f64 {
    PI / (1u64 << (n - 1)) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyQubit {
    pub k: u64,
    /// (x, y, z)
    pub bloch: [f64; 3],
}

impl KeyQubit {
    /// Key state R_y(kθ_n) R_x(α) |0⟩.
    pub fn new(k: u64, n: u32, alpha: f64) -> Self {
        let a = k as f64 * theta(n);
        KeyQubit { k, bloch: [alpha.cos() * a.sin(), -alpha.sin(), alpha.cos() * a.cos()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementTally {
    pub t0z: usize,
    pub t0x: usize,
}

/// Probability of outcome zero when measuring key k in the given basis.
pub fn p0(k: u64, n: u32, basis: Basis) -> f64 {
    let h = k as f64 * theta(n) / 2.0;
    match basis {
        Basis::Z => h.cos().powi(2),
        Basis::X => (FRAC_PI_4 - h).cos().powi(2),
    }
}

fn binomial_pmf_table(t: usize, p: f64) -> Vec<f64> {
    let mut binom = 1.0f64;
    (0..=t)
        .map(|j| {
            if j > 0 {
                binom = binom * (t - j + 1) as f64 / j as f64;
            }
            binom * p.powi(j as i32) * (1.0 - p).powi((t - j) as i32)
        })
        .collect()
}

/// Per-key likelihood tables for z and x tallies.
struct Likelihoods {
    t: usize,
    z: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
}

impl Likelihoods {
    fn new(n: u32, t: usize) -> Self {
        let keys = 1u64 << n;
        let z = (0..keys).map(|k| binomial_pmf_table(t, p0(k, n, Basis::Z))).collect();
        let x = (0..keys).map(|k| binomial_pmf_table(t, p0(k, n, Basis::X))).collect();
        Likelihoods { t, z, x }
    }

    fn get(&self, k: usize, tally: MeasurementTally) -> f64 {
        self.z[k][tally.t0z] * self.x[k][tally.t0x]
    }

    fn tallies(&self) -> impl Iterator<Item = MeasurementTally> + '_ {
        (0..=self.t).flat_map(move |t0z| (0..=self.t).map(move |t0x| MeasurementTally { t0z, t0x }))
    }
}

fn check_tally(tally: MeasurementTally, t: usize) -> Result<(), QpkeError> {
    if tally.t0z > t || tally.t0x > t {
        return Err(QpkeError::InvalidParams(format!("tally ({}, {}) exceeds T = {t}", tally.t0z, tally.t0x)));
    }
    Ok(())
}

fn check_n(n: u32) -> Result<(), QpkeError> {
    if n == 0 || n > N_MAX {
        return Err(QpkeError::InvalidParams(format!("n = {n} must lie in 1..={N_MAX}")));
    }
    Ok(())
}

/// Bayes posterior p(k' | tally) under a uniform prior; T = 0 gives the uniform distribution.
pub fn posterior(k_prime: u64, tally: MeasurementTally, n: u32, t: usize) -> Result<f64, QpkeError> {
    check_n(n)?;
    check_tally(tally, t)?;
    let lik = Likelihoods::new(n, t);
    let total: f64 = (0..1usize << n).map(|k| lik.get(k, tally)).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(lik.get(k_prime as usize, tally) / total)
}

/// Posterior-weighted Bloch vector (z, x) for one tally and the tally's marginal probability.
struct TallyEstimate {
    prob: f64,
    r: (f64, f64),
}

fn tally_estimates(n: u32, t: usize) -> Vec<(MeasurementTally, TallyEstimate)> {
    let lik = Likelihoods::new(n, t);
    let th = theta(n);
    let keys = 1usize << n;
    let trig: Vec<(f64, f64)> = (0..keys).map(|k| ((k as f64 * th).cos(), (k as f64 * th).sin())).collect();
    lik.tallies()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|tally| {
            let (mut w, mut rz, mut rx) = (0.0, 0.0, 0.0);
            for (k, &(c, s)) in trig.iter().enumerate() {
                let p = lik.get(k, tally);
                w += p;
                rz += p * c;
                rx += p * s;
            }
            let r = if w > 0.0 { (rz / w, rx / w) } else { (0.0, 0.0) };
            (tally, TallyEstimate { prob: w / keys as f64, r })
        })
        .collect()
}

fn success_given(est: &TallyEstimate, k: u64, n: u32) -> f64 {
    let norm = est.r.0.hypot(est.r.1);
    // no information: a guess is right half the time
    if norm < 1e-15 {
        return 0.5;
    }
    let a = k as f64 * theta(n);
    0.5 + (est.r.0 * a.cos() + est.r.1 * a.sin()) / (2.0 * norm)
}

fn check_t(t: usize) -> Result<(), QpkeError> {
    if t == 0 {
        return Err(QpkeError::InvalidParams("T must be at least 1".into()));
    }
    if t > EXACT_T_MAX {
        return Err(QpkeError::TooManyCopies(t));
    }
    Ok(())
}

/// P(suc | w_j, k): Eve's chance of guessing one codeword bit after T z- and T x-measurements.
pub fn psuc_wbit(k: u64, n: u32, t: usize) -> Result<f64, QpkeError> {
    Ok(psuc_wbit_all(n, t)?[k as usize % (1usize << n)])
}

/// P(suc | w_j, k) for every key k.
pub fn psuc_wbit_all(n: u32, t: usize) -> Result<Vec<f64>, QpkeError> {
    check_n(n)?;
    check_t(t)?;
    let lik = Likelihoods::new(n, t);
    let est = tally_estimates(n, t);
    Ok((0..1usize << n)
        .into_par_iter()
        .map(|k| est.iter().map(|(tally, e)| lik.get(k, *tally) * success_given(e, k as u64, n)).sum())
        .collect())
}

/// Mean of psuc_wbit over all keys, via Σ_tally p(tally)(1/2 + |R̃|/2).
pub fn psuc_wbit_mean(n: u32, t: usize) -> Result<f64, QpkeError> {
    check_n(n)?;
    check_t(t)?;
    Ok(tally_estimates(n, t)
        .iter()
        .map(|(_, e)| {
            let norm = e.r.0.hypot(e.r.1);
            e.prob * if norm < 1e-15 { 0.5 } else { 0.5 + norm / 2.0 }
        })
        .sum())
}

fn ln_binomials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    out.push(0.0);
    for i in 1..=n {
        acc += ((n - i + 1) as f64).ln() - (i as f64).ln();
        out.push(acc);
    }
    out
}

/// Optimal collective estimate from 2T copies.
pub fn popt(t: usize) -> f64 {
    let lb = ln_binomials(2 * t);
    let scale = (2 * t + 1) as f64 * std::f64::consts::LN_2;
    0.5 + (0..2 * t).map(|i| (0.5 * (lb[i] + lb[i + 1]) - scale).exp()).sum::<f64>()
}

/// Parity success for an s-bit codeword when a single bit succeeds with 1/2 + λ/2.
pub fn q_s(lambda: f64, s: u32) -> f64 {
    0.5 + lambda.powi(s as i32) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParameter {
    /// smallest s with success below 1/2 + ε
    pub exact: u32,
    /// closed-form linear estimate
    pub linear_bound: f64,
}

fn smallest_s(lambda: f64, epsilon: f64) -> Result<u32, QpkeError> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(QpkeError::InvalidParams(format!("epsilon = {epsilon} outside (0, 1/2]")));
    }
    let mut s = 1u32;
    while q_s(lambda, s) >= 0.5 + epsilon {
        s += 1;
        if s > 10_000_000 {
            return Err(QpkeError::InvalidParams("security parameter search did not terminate".into()));
        }
    }
    Ok(s)
}

/// Security parameter against the bound 1/2 + (1 − 1/(3T))^s / 2, with linear estimate −3T(1 + log₂ε).
pub fn s_min(t: usize, epsilon: f64) -> Result<SecurityParameter, QpkeError> {
    check_t_positive(t)?;
    let tf = t as f64;
    Ok(SecurityParameter { exact: smallest_s(1.0 - 1.0 / (3.0 * tf), epsilon)?, linear_bound: -3.0 * tf * (1.0 + epsilon.log2()) })
}

/// Same for the forward-search bound, linear estimate −2T(1 + log₂ε).
pub fn s_min_forward_search(t: usize, epsilon: f64) -> Result<SecurityParameter, QpkeError> {
    check_t_positive(t)?;
    let tf = t as f64;
    Ok(SecurityParameter { exact: smallest_s(1.0 - 1.0 / (2.0 * tf), epsilon)?, linear_bound: -2.0 * tf * (1.0 + epsilon.log2()) })
}

fn check_t_positive(t: usize) -> Result<(), QpkeError> {
    if t == 0 {
        return Err(QpkeError::InvalidParams("T must be at least 1".into()));
    }
    Ok(())
}

pub fn forward_search(t: usize, s: u32) -> f64 {
    q_s(1.0 - 1.0 / (2.0 * t as f64), s)
}

/// Alice's probability of reading a bit correctly with displacement α.
pub fn alice_success(alpha: f64) -> f64 {
    (alpha / 2.0).cos().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleKeyReport {
    /// single codeword bit, key k
    pub per_k: f64,
    /// per-bit success averaged over all 2^n keys
    pub mean: f64,
    /// parity of an s-bit codeword
    pub p_s: f64,
    /// closed form (5 + cos 2α)/8
    pub eve: f64,
    pub alice: f64,
    pub ratio: f64,
}

fn single_key_bit(k: u64, n: u32, alpha: f64) -> f64 {
    let r_z = KeyQubit::new(k, n, alpha).bloch[2];
    0.5 + r_z * r_z / 2.0
}

/// Eve measures key and ciphertext qubit in the same basis and guesses the bit as their XOR.
pub fn single_key(k: u64, n: u32, s: u32, alpha: f64) -> Result<SingleKeyReport, QpkeError> {
    ProtocolParams { n, s, alpha, ..Default::default() }.validate()?;
    let keys = 1u64 << n;
    let mean = (0..keys).map(|k| single_key_bit(k, n, alpha)).sum::<f64>() / keys as f64;
    let eve = (5.0 + (2.0 * alpha).cos()) / 8.0;
    let alice = alice_success(alpha);
    Ok(SingleKeyReport { per_k: single_key_bit(k, n, alpha), mean, p_s: q_s(2.0 * mean - 1.0, s), eve, alice, ratio: eve / alice })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleKeyReport {
    pub eve: f64,
    pub p_s: f64,
    pub alice: f64,
    pub ratio: f64,
    /// parity success at s with λ = 2·ratio − 1
    pub ratio_p_s: f64,
}

/// Two keys measured in z and x select the ciphertext basis.
pub fn double_key(s: u32, alpha: f64) -> Result<DoubleKeyReport, QpkeError> {
    ProtocolParams { s, alpha, ..Default::default() }.validate()?;
    let eve = 0.5 + SQRT_2 / 4.0 * alpha.cos().powi(2);
    let alice = alice_success(alpha);
    let ratio = eve / alice;
    Ok(DoubleKeyReport { eve, p_s: q_s(2.0 * eve - 1.0, s), alice, ratio, ratio_p_s: q_s(2.0 * ratio - 1.0, s) })
}

/// The four-outcome sum for one key, evaluated from the measurement probabilities.
pub fn double_key_per_k(k: u64, n: u32, alpha: f64) -> f64 {
    let [rx, _, rz] = KeyQubit::new(k, n, alpha).bloch;
    let pz = [(1.0 + rz) / 2.0, (1.0 - rz) / 2.0];
    let px = [(1.0 + rx) / 2.0, (1.0 - rx) / 2.0];
    let mut total = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let (nz, nx) = (sign(a) / SQRT_2, sign(b) / SQRT_2);
            total += pz[a] * px[b] * (1.0 + rz * nz + rx * nx) / 2.0;
        }
    }
    total
}

fn sign(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn single_key_ratio(alpha: f64) -> f64 {
    (5.0 + (2.0 * alpha).cos()) / (8.0 * alice_success(alpha))
}

pub fn double_key_ratio(alpha: f64) -> f64 {
    (1.0 + alpha.cos().powi(2) / SQRT_2) / (2.0 * alice_success(alpha))
}

/// ±2 arccos((3/4)^{1/4}), positive branch.
pub fn alpha_min_single() -> f64 {
    2.0 * 0.75f64.powf(0.25).acos()
}

/// Positive minimizer of the double-key ratio: cos²(α/2) = √(1+√2)/2.
pub fn alpha_min_double() -> f64 {
    2.0 * ((1.0 + SQRT_2).sqrt() / 2.0).sqrt().acos()
}

/// Edge of the interval on which the double-key ratio stays at or below its α = 0 value.
pub fn alpha_lim_double() -> f64 {
    2.0 * ((1.0 + SQRT_2).sqrt() / 2.0).acos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaAverages {
    pub single_full: f64,
    pub double_full: f64,
    pub single_third: f64,
    pub double_lim: f64,
}

/// Ratio averages over uniformly random α on the four intervals.
pub fn alpha_averages() -> Result<AlphaAverages, QpkeError> {
    let avg = |f: fn(f64) -> f64, a: f64| -> Result<f64, QpkeError> { Ok(adaptive_simpson(f, -a, a, 1e-10)? / (2.0 * a)) };
    Ok(AlphaAverages {
        single_full: avg(single_key_ratio, FRAC_PI_2)?,
        double_full: avg(double_key_ratio, FRAC_PI_2)?,
        single_third: avg(single_key_ratio, FRAC_PI_3)?,
        double_lim: avg(double_key_ratio, alpha_lim_double())?,
    })
}

pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, QpkeError> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Option<f64> {
        let m = (a + b) / 2.0;
        let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        Some(rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)? + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }
    let (fa, fm, fb) = (f(a), f((a + b) / 2.0), f(b));
    rec(&f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50).ok_or(QpkeError::Quadrature(a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolevoPrior {
    /// (τ+1)×(τ+1) density matrix in the symmetric basis
    pub coefficients: Vec<Vec<f64>>,
    /// ascending
    pub eigenvalues: Vec<f64>,
    pub entropy: f64,
    /// log₂(τ+1)
    pub bound: f64,
    pub n_ok: bool,
}

/// Eve's prior state over τ key copies, its entropy and the Holevo bound.
pub fn holevo_prior(n: u32, tau: usize, margin: f64) -> Result<HolevoPrior, QpkeError> {
    check_n(n)?;
    if tau == 0 || tau > HOLEVO_TAU_MAX {
        return Err(QpkeError::InvalidParams(format!("tau = {tau} must lie in 1..={HOLEVO_TAU_MAX}")));
    }
    let keys = 1usize << n;
    let lb = ln_binomials(tau);
    let th = theta(n);
    let mut c = DMatrix::<f64>::zeros(tau + 1, tau + 1);
    for k in 0..keys {
        let h = k as f64 * th / 2.0;
        let (co, si) = (h.cos(), h.sin());
        let amp: Vec<f64> = (0..=tau).map(|l| (0.5 * lb[l]).exp() * co.powi((tau - l) as i32) * si.powi(l as i32)).collect();
        for l in 0..=tau {
            for lp in 0..=tau {
                c[(l, lp)] += amp[l] * amp[lp];
            }
        }
    }
    c /= keys as f64;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(c.clone()).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let entropy = -eigenvalues.iter().filter(|&&l| l > 1e-300).map(|l| l * l.log2()).sum::<f64>();
    let bound = ((tau + 1) as f64).log2();
    Ok(HolevoPrior {
        coefficients: (0..=tau).map(|l| (0..=tau).map(|lp| c[(l, lp)]).collect()).collect(),
        eigenvalues,
        entropy,
        bound,
        n_ok: n as f64 >= (tau as f64).log2() + margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attack {
    Single,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

const MC_CHUNK: u64 = 1 << 16;

fn measure_zero(rng: &mut ChaCha8Rng, expectation: f64) -> bool {
    rng.gen::<f64>() < (1.0 + expectation) / 2.0
}

/// One codeword bit: returns whether Eve's guess is right.
fn mc_bit(attack: Attack, rng: &mut ChaCha8Rng, n: u32, alpha: f64) -> bool {
    let k = rng.gen_range(0..1u64 << n);
    let [rx, _, rz] = KeyQubit::new(k, n, alpha).bloch;
    let w = rng.gen::<bool>();
    let flip = if w { -1.0 } else { 1.0 };
    match attack {
        Attack::Single => {
            let a = !measure_zero(rng, rz);
            let c = !measure_zero(rng, flip * rz);
            (a ^ c) == w
        }
        Attack::Double => {
            let a = !measure_zero(rng, rz);
            let b = !measure_zero(rng, rx);
            let (nz, nx) = (sign(a as usize) / SQRT_2, sign(b as usize) / SQRT_2);
            let c = !measure_zero(rng, flip * (rz * nz + rx * nx));
            c == w
        }
    }
}

/// Empirical success of guessing the parity of an s-bit codeword. Trials are split
/// into fixed chunks, chunk i drawing from ChaCha8 stream i of the master seed, so
/// results do not depend on the thread count.
pub fn monte_carlo(attack: Attack, params: &ProtocolParams, trials: u64, seed: u64) -> Result<McEstimate, QpkeError> {
    params.validate()?;
    if trials == 0 {
        return Err(QpkeError::InvalidParams("trials must be at least 1".into()));
    }
    let chunks = trials.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let len = MC_CHUNK.min(trials - i * MC_CHUNK);
            (0..len)
                .filter(|_| (0..params.s).fold(true, |ok, _| ok == mc_bit(attack, &mut rng, params.n, params.alpha)))
                .count() as u64
        })
        .sum();
    let mean = hits as f64 / trials as f64;
    Ok(McEstimate { mean, stderr: (mean * (1.0 - mean) / trials as f64).sqrt(), trials })
}

/// Analytic counterpart of `monte_carlo`.
pub fn analytic_success(attack: Attack, params: &ProtocolParams) -> Result<f64, QpkeError> {
    params.validate()?;
    Ok(match attack {
        Attack::Single => single_key(0, params.n, params.s, params.alpha)?.p_s,
        Attack::Double => {
            let keys = 1u64 << params.n;
            let mean = (0..keys).map(|k| double_key_per_k(k, params.n, params.alpha)).sum::<f64>() / keys as f64;
            q_s(2.0 * mean - 1.0, params.s)
        }
    })
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// Per-key success for fixed T: "k,psuc".
pub fn fig_6_1(n: u32, t: usize) -> Result<String, QpkeError> {
    let p = psuc_wbit_all(n, t)?;
    Ok(csv("k,psuc", p.iter().enumerate().map(|(k, v)| format!("{k},{v}"))))
}

/// Mean attack success against T: "T,psuc_mean,bound,popt".
pub fn fig_6_2(n: u32, tmax: usize) -> Result<String, QpkeError> {
    let rows = (1..=tmax)
        .map(|t| Ok(format!("{t},{},{},{}", psuc_wbit_mean(n, t)?, 1.0 - 1.0 / (6.0 * t as f64), popt(t))))
        .collect::<Result<Vec<_>, QpkeError>>()?;
    Ok(csv("T,psuc_mean,bound,popt", rows))
}

/// Codeword success against s for each T: "T,s,exact,bound".
pub fn fig_6_3(n: u32, ts: &[usize], smax: u32) -> Result<String, QpkeError> {
    let mut rows = Vec::new();
    for &t in ts {
        let lambda = 2.0 * psuc_wbit_mean(n, t)? - 1.0;
        let bound = 1.0 - 1.0 / (3.0 * t as f64);
        rows.extend((1..=smax).map(|s| format!("{t},{s},{},{}", q_s(lambda, s), q_s(bound, s))));
    }
    Ok(csv("T,s,exact,bound", rows))
}

/// Double-key relative success against s at α = 0 and α_min: "s,p_alpha0,p_alphamin".
pub fn fig_7_3(smax: u32) -> Result<String, QpkeError> {
    let rows = (1..=smax)
        .map(|s| Ok(format!("{s},{},{}", double_key(s, 0.0)?.ratio_p_s, double_key(s, alpha_min_double())?.ratio_p_s)))
        .collect::<Result<Vec<_>, QpkeError>>()?;
    Ok(csv("s,p_alpha0,p_alphamin", rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn measurement_probabilities() {
        assert_eq!(p0(0, 5, Basis::Z), 1.0);
        assert!(p0(16, 5, Basis::Z).abs() < 1e-15);
        assert!((p0(8, 5, Basis::Z) - 0.5).abs() < 1e-15);
        assert!((p0(0, 5, Basis::X) - 0.5).abs() < 1e-15);
        assert!((p0(8, 5, Basis::X) - 1.0).abs() < 1e-15);
        let q = KeyQubit::new(3, 4, 0.0);
        assert!(((q.bloch[0].powi(2) + q.bloch[2].powi(2)) - 1.0).abs() < 1e-15);
        assert_eq!(q.bloch[1], 0.0);
    }

    #[test]
    fn posterior_examples() {
        let zero = MeasurementTally { t0z: 0, t0x: 0 };
        for k in 0..8 {
            assert!((posterior(k, zero, 3, 0).unwrap() - 0.125).abs() < 1e-15);
        }
        let tally = MeasurementTally { t0z: 1, t0x: 1 };
        let post: Vec<f64> = (0..4).map(|k| posterior(k, tally, 2, 1).unwrap()).collect();
        // p0z = 1, 1/2, 0, 1/2 and p0x = 1/2, 1, 1/2, 0 for k = 0..3
        let want = [0.5, 0.5, 0.0, 0.0];
        for k in 0..4 {
            assert!((post[k] - want[k]).abs() < 1e-15, "{post:?}");
        }
        assert!(posterior(0, MeasurementTally { t0z: 3, t0x: 0 }, 2, 2).is_err());
    }

    #[test]
    fn wbit_oscillation_shrinks() {
        let amp = |t| {
            let p = psuc_wbit_all(10, t).unwrap();
            let mean = p.iter().sum::<f64>() / p.len() as f64;
            assert!((mean - psuc_wbit_mean(10, t).unwrap()).abs() < 1e-12);
            p.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
        };
        // T = 1 is the double-key test attack, flat in k at (2+√2)/4
        assert!(amp(1) < 1e-12);
        assert!((psuc_wbit(7, 10, 1).unwrap() - (2.0 + SQRT_2) / 4.0).abs() < 1e-12);
        let (a2, a5, a10) = (amp(2), amp(5), amp(10));
        assert!(a2 > a5 && a5 > a10, "{a2} {a5} {a10}");
        let m10 = psuc_wbit_mean(10, 10).unwrap();
        assert!(m10 <= 1.0 - 1.0 / 60.0 + 1e-3, "{m10}");
        assert!(m10 < popt(10));
        assert!(psuc_wbit(5, 6, 3).unwrap() >= 0.5);
    }

    #[test]
    fn popt_values() {
        assert!((popt(1) - (0.5 + SQRT_2 / 4.0)).abs() < 1e-14);
        for t in 1..60 {
            assert!(popt(t + 1) > popt(t));
        }
        assert!((popt(50) - (1.0 - 1.0 / 400.0)).abs() < 5e-4);
        // direct formula
        let t = 6u64;
        let direct = 0.5 + (0..2 * t).map(|i| (binom(2 * t, i) * binom(2 * t, i + 1)).sqrt()).sum::<f64>() / 2f64.powi(2 * t as i32 + 1);
        assert!((popt(6) - direct).abs() < 1e-13);
    }

    #[test]
    fn security_parameters() {
        assert_eq!(s_min(10, 0.5).unwrap().exact, 1);
        let ours = s_min(10, 0.01).unwrap();
        let fs = s_min_forward_search(10, 0.01).unwrap();
        assert_eq!((ours.exact, fs.exact), (116, 77));
        assert!((fs.exact as f64 - 2.0 / 3.0 * ours.exact as f64).abs() <= 1.0);
        assert!((ours.linear_bound / fs.linear_bound - 1.5).abs() < 1e-12);
        assert!((forward_search(7, 1) - (1.0 - 1.0 / 28.0)).abs() < 1e-15);
        assert!(s_min(3, 0.0).is_err());
    }

    #[test]
    fn single_key_values() {
        let r = single_key(0, 6, 1, 0.0).unwrap();
        assert_eq!(r.per_k, 1.0);
        assert!((r.mean - 0.75).abs() < 1e-14);
        assert!((single_key(0, 6, 3, 0.0).unwrap().p_s - (0.5 + 0.0625)).abs() < 1e-14);
        for k in 0..64 {
            let h = k as f64 * theta(6) / 2.0;
            let v = single_key(k, 6, 1, 0.0).unwrap().per_k;
            assert!((v - (h.sin().powi(4) + h.cos().powi(4))).abs() < 1e-14);
        }
        for alpha in [-1.2, -0.3, 0.4, 1.5] {
            let r = single_key(0, 8, 1, alpha).unwrap();
            assert!((r.mean - r.eve).abs() < 1e-12);
            assert!((r.ratio - single_key_ratio(alpha)).abs() < 1e-14);
        }
        assert!((single_key_ratio(alpha_min_single()) - (3f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn double_key_values() {
        let r = double_key(1, 0.0).unwrap();
        assert!((r.eve - (2.0 + SQRT_2) / 4.0).abs() < 1e-15);
        assert!((double_key(4, 0.0).unwrap().p_s - (0.5 + 0.125)).abs() < 1e-14);
        assert!(double_key(400, 0.0).unwrap().p_s - 0.5 < 1e-12);
        for alpha in [-1.0, 0.0, 0.7] {
            for k in [0, 3, 17] {
                assert!((double_key_per_k(k, 5, alpha) - double_key(1, alpha).unwrap().eve).abs() < 1e-14);
            }
        }
        let best = double_key_ratio(alpha_min_double());
        assert!((best - SQRT_2 * ((1.0 + SQRT_2).sqrt() - 1.0)).abs() < 1e-12);
        assert!((best - 0.783).abs() < 1e-3);
        assert!((double_key_ratio(alpha_lim_double()) - double_key_ratio(0.0)).abs() < 1e-12);
    }

    #[test]
    fn ratio_minimizers_by_grid() {
        for (f, amin) in [(single_key_ratio as fn(f64) -> f64, alpha_min_single()), (double_key_ratio, alpha_min_double())] {
            let grid: Vec<f64> = (0..=3141).map(|i| -FRAC_PI_2 + i as f64 * 1e-3).collect();
            let best = grid.iter().copied().min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
            assert!((best.abs() - amin).abs() <= 1e-3, "{best} vs {amin}");
        }
    }

    #[test]
    fn interval_averages() {
        let a = alpha_averages().unwrap();
        assert!((a.single_full - 0.773).abs() < 2e-3, "{a:?}");
        assert!((a.double_full - 0.830).abs() < 2e-3);
        assert!((a.single_third - 0.740).abs() < 2e-3);
        assert!((a.double_lim - 0.816).abs() < 2e-3);
        let v = adaptive_simpson(|x| x.sin(), 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn holevo_examples() {
        let h1 = holevo_prior(4, 1, DEFAULT_HOLEVO_MARGIN).unwrap();
        let tr: f64 = (0..2).map(|i| h1.coefficients[i][i]).sum();
        assert!((tr - 1.0).abs() < 1e-14);
        assert_eq!(holevo_prior(6, 3, 0.0).unwrap().bound, 2.0);
        for tau in 1..=8 {
            let h = holevo_prior(6, tau, 0.0).unwrap();
            let mut want: Vec<f64> = (0..=tau as u64).map(|i| binom(tau as u64, i) / 2f64.powi(tau as i32)).collect();
            want.sort_by(f64::total_cmp);
            for (a, b) in h.eigenvalues.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "tau {tau}: {:?}", h.eigenvalues);
            }
            assert!(h.entropy <= h.bound + 1e-12);
        }
        assert!(!holevo_prior(10, 4, 20.0).unwrap().n_ok);
        assert!(holevo_prior(23, 4, 20.0).unwrap().n_ok);
    }

    #[test]
    fn monte_carlo_agrees() {
        let p = ProtocolParams { n: 6, ..Default::default() };
        let single = monte_carlo(Attack::Single, &p, 200_000, 1).unwrap();
        assert!((single.mean - 0.75).abs() < 4.0 * single.stderr, "{single:?}");
        let double = monte_carlo(Attack::Double, &p, 200_000, 2).unwrap();
        assert!((double.mean - (2.0 + SQRT_2) / 4.0).abs() < 4.0 * double.stderr);
        let noisy = ProtocolParams { n: 5, s: 2, alpha: 0.6, ..Default::default() };
        for attack in [Attack::Single, Attack::Double] {
            let est = monte_carlo(attack, &noisy, 200_000, 3).unwrap();
            let want = analytic_success(attack, &noisy).unwrap();
            assert!((est.mean - want).abs() < 4.0 * est.stderr, "{attack:?}: {est:?} vs {want}");
        }
        assert_eq!(monte_carlo(Attack::Single, &p, 1000, 9).unwrap(), monte_carlo(Attack::Single, &p, 1000, 9).unwrap());
        let one = monte_carlo(Attack::Double, &p, 1, 4).unwrap().mean;
        assert!(one == 0.0 || one == 1.0);
    }

    #[test]
    fn figure_csvs() {
        let f61 = fig_6_1(4, 2).unwrap();
        assert!(f61.starts_with("k,psuc\n0,"));
        assert_eq!(f61.lines().count(), 17);
        assert_eq!(fig_6_2(5, 3).unwrap().lines().count(), 4);
        assert!(fig_6_3(5, &[1, 2], 4).unwrap().starts_with("T,s,exact,bound\n1,1,"));
        let f73 = fig_7_3(3).unwrap();
        assert!(f73.starts_with("s,p_alpha0,p_alphamin\n1,"));
        assert!(f73.ends_with('\n'));
    }

    proptest! {
        #[test]
        fn success_recursion(lambda in -1.0f64..=1.0, s in 2u32..=20) {
            let q1 = q_s(lambda, 1);
            let prev = q_s(lambda, s - 1);
            prop_assert!((q_s(lambda, s) - (q1 * prev + (1.0 - q1) * (1.0 - prev))).abs() < 1e-12);
        }

        #[test]
        fn probabilities_in_range(alpha in -FRAC_PI_2..=FRAC_PI_2, s in 1u32..30, k in 0u64..256) {
            let one = single_key(k, 8, s, alpha).unwrap();
            let two = double_key(s, alpha).unwrap();
            for v in [one.per_k, one.mean, one.p_s, one.eve, two.eve, two.p_s] {
                prop_assert!((0.5..=1.0 + 1e-15).contains(&v));
            }
            prop_assert!(double_key(s + 1, alpha).unwrap().p_s <= two.p_s + 1e-15);
            prop_assert!(single_key(k, 8, s + 1, alpha).unwrap().p_s <= one.p_s + 1e-15);
        }

        #[test]
        fn posterior_normalized(t0z in 0usize..=4, t0x in 0usize..=4) {
            let tally = MeasurementTally { t0z, t0x };
            let total: f64 = (0..16).map(|k| posterior(k, tally, 4, 4).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
