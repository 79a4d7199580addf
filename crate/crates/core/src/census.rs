//! Orbit census: checks a claimed complete list of simple orbits against the
//! homology of a prequantization and certifies that it has exactly `r_B` members.

use std::collections::HashSet;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{ExactReal, RadicalSum};
use crate::homology::{HomologyError, Monotonicity, PrequantSpec};
use crate::index::{ell_zero, reciprocal_mean_sum, IndexError, OrbitModel};
use crate::jump::{find_jump, lemma52_check, JumpCertificate, JumpError, JumpParams, JumpRequest, Sides};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CensusError {
    #[error("spec does not satisfy the census hypotheses: {0}")]
    Hypothesis(String),
    #[error("dataset has n = {dataset}, spec has n = {spec}")]
    DimensionMismatch { dataset: usize, spec: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Jump(#[from] JumpError),
}

/// A claimed complete list of simple orbits in dimension `2n + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitDataset {
    pub n: usize,
    pub orbits: Vec<OrbitModel>,
}

impl OrbitDataset {
    pub fn validate(&self) -> Result<(), CensusError> {
        let mut names = HashSet::new();
        for o in &self.orbits {
            if !names.insert(o.name.as_str()) {
                return Err(CensusError::InvalidDataset(format!("duplicate orbit name {:?}", o.name)));
            }
        }
        Ok(())
    }

    /// Each orbit replaced by its minimal contractible iterate.
    pub fn collapsed(&self) -> Result<Vec<OrbitModel>, IndexError> {
        self.orbits.iter().map(OrbitModel::collapse).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanCheck {
    pub orbit: String,
    pub mean_index: String,
    pub pass: bool,
}

pub fn check_positive_mean(dataset: &OrbitDataset) -> Vec<MeanCheck> {
    dataset
        .orbits
        .iter()
        .map(|o| {
            let mean = o.mean_index_simple();
            MeanCheck { orbit: o.name.clone(), mean_index: mean.to_string(), pass: mean.is_positive() }
        })
        .collect()
}

/// Two contractible iterates whose indices have different parity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityWitness {
    pub orbit: String,
    pub k: i64,
    pub mu: i64,
    pub other_orbit: String,
    pub other_k: i64,
    pub other_mu: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LacunaryReport {
    pub pass: bool,
    /// Common parity of all contractible indices when `pass`.
    pub parity: Option<u8>,
    pub witness: Option<ParityWitness>,
}

/// All contractible indices share one parity.
///
/// `mu(gamma^k) = e + k |odd_linear| (mod 2)`, so along multiples of `c` the
/// parity is constant iff `c |odd_linear|` is even; then `gamma^c` represents it.
pub fn check_lacunary(dataset: &OrbitDataset) -> Result<LacunaryReport, IndexError> {
    let mut reference: Option<(String, i64, i64)> = None;
    for o in &dataset.orbits {
        let c = o.torsion_order as i64;
        let mu1 = o.cz_index(c)?;
        if (c * o.odd_linear.len() as i64) % 2 != 0 {
            let mu2 = o.cz_index(2 * c)?;
            let witness = ParityWitness {
                orbit: o.name.clone(),
                k: c,
                mu: mu1,
                other_orbit: o.name.clone(),
                other_k: 2 * c,
                other_mu: mu2,
            };
            return Ok(LacunaryReport { pass: false, parity: None, witness: Some(witness) });
        }
        match &reference {
            None => reference = Some((o.name.clone(), c, mu1)),
            Some((name, k, mu)) if (mu - mu1).rem_euclid(2) != 0 => {
                let witness = ParityWitness {
                    orbit: name.clone(),
                    k: *k,
                    mu: *mu,
                    other_orbit: o.name.clone(),
                    other_k: c,
                    other_mu: mu1,
                };
                return Ok(LacunaryReport { pass: false, parity: None, witness: Some(witness) });
            }
            Some(_) => {}
        }
    }
    let parity = reference.map(|(_, _, mu)| mu.rem_euclid(2) as u8);
    Ok(LacunaryReport { pass: true, parity, witness: None })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainRow {
    pub k: i64,
    pub c: u64,
    pub b: u64,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainTable {
    pub rows: Vec<ChainRow>,
    /// First degree where the comparison fails.
    pub first_mismatch: Option<i64>,
}

/// Dense Morse counts: `counts[i]` is the number of contractible iterates of
/// index `lo + i`, for every index up to `max_degree`.
struct MorseCounts {
    lo: i64,
    counts: Vec<u64>,
}

impl MorseCounts {
    fn new(orbits: &[OrbitModel], n: usize, max_degree: i64) -> Result<Self, IndexError> {
        let mut runs = Vec::with_capacity(orbits.len());
        for o in orbits {
            // Past k_max, mu > k mu_hat - e > max_degree.
            let e = o.elliptic_rank().max(n) as i64;
            let k_max = o.max_iterate_below(max_degree + e)?;
            let minimal = o.collapse()?;
            runs.push(minimal.index_run(k_max / o.torsion_order as i64)?);
        }
        let lo = runs.iter().flatten().copied().min().unwrap_or(max_degree).min(max_degree);
        let mut counts = vec![0u64; (max_degree - lo + 1) as usize];
        for mu in runs.iter().flatten() {
            if *mu <= max_degree {
                counts[(mu - lo) as usize] += 1;
            }
        }
        Ok(MorseCounts { lo, counts })
    }

    fn get(&self, k: i64) -> u64 {
        if k < self.lo {
            return 0;
        }
        self.counts.get((k - self.lo) as usize).copied().unwrap_or(0)
    }
}

/// Degree-by-degree comparison without materialized rows.
struct ChainSummary {
    compared: i64,
    matched: i64,
    last: i64,
    first_mismatch: Option<ChainRow>,
}

fn chain_scan(
    dataset: &OrbitDataset,
    spec: &PrequantSpec,
    max_degree: i64,
    accept: impl Fn(u64, u64) -> bool,
    mut visit: impl FnMut(ChainRow),
) -> Result<ChainSummary, CensusError> {
    let k_min = spec.k_min()?;
    let counts = MorseCounts::new(&dataset.orbits, dataset.n, max_degree)?;
    let lo = counts.lo.min(k_min);
    let mut summary = ChainSummary { compared: 0, matched: 0, last: max_degree, first_mismatch: None };
    for k in lo..=max_degree {
        let c = counts.get(k);
        let b = if k < k_min { 0 } else { spec.betti_m(k) };
        let equal = accept(c, b);
        summary.compared += 1;
        if equal {
            summary.matched += 1;
        } else if summary.first_mismatch.is_none() {
            summary.first_mismatch = Some(ChainRow { k, c, b, equal });
        }
        visit(ChainRow { k, c, b, equal });
    }
    Ok(summary)
}

fn chain_compare(
    dataset: &OrbitDataset,
    spec: &PrequantSpec,
    max_degree: i64,
    accept: impl Fn(u64, u64) -> bool,
) -> Result<ChainTable, CensusError> {
    let mut rows = Vec::new();
    let summary = chain_scan(dataset, spec, max_degree, accept, |row| rows.push(row))?;
    Ok(ChainTable { rows, first_mismatch: summary.first_mismatch.map(|row| row.k) })
}

/// Morse numbers of the dataset against `betti_M`, degree by degree up to `max_degree`.
pub fn chain_match(dataset: &OrbitDataset, spec: &PrequantSpec, max_degree: i64) -> Result<ChainTable, CensusError> {
    chain_compare(dataset, spec, max_degree, |c, b| c == b)
}

/// Partial-data variant: `c_k <= b_k`.
pub fn chain_dominated(dataset: &OrbitDataset, spec: &PrequantSpec, max_degree: i64) -> Result<ChainTable, CensusError> {
    chain_compare(dataset, spec, max_degree, |c, b| c <= b)
}

pub fn finiteness_bound(spec: &PrequantSpec) -> Result<u64, HomologyError> {
    spec.finiteness_bound()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resonance {
    pub lhs: String,
    pub rhs: String,
    pub equal: bool,
}

/// `sum_i chi_hat(gamma_i) / mu_hat(gamma_i)` over minimal contractible iterates.
pub fn resonance_sum(dataset: &OrbitDataset) -> Result<RadicalSum, IndexError> {
    let mut sum = RadicalSum::zero();
    for o in dataset.collapsed()? {
        let chi = RadicalSum::from(&o.mean_chi()?);
        let mean = o.mean_index_simple();
        if !mean.is_positive() {
            return Err(IndexError::NonPositiveMeanIndex { orbit: o.name.clone(), mean: mean.to_string() });
        }
        sum = sum.add(&chi.div(&mean)?);
    }
    Ok(sum)
}

pub fn resonance_check(dataset: &OrbitDataset, spec: &PrequantSpec) -> Result<Resonance, CensusError> {
    let lhs = resonance_sum(dataset)?;
    let rhs = RadicalSum::from(&spec.mean_euler()?);
    Ok(Resonance { lhs: lhs.to_string(), rhs: rhs.to_string(), equal: lhs == rhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusConfig {
    /// `N`; defaults to the lcm of `2 c_B` and the linear terms of hyperbolic orbits.
    pub modulus: Option<u64>,
    /// Defaults to the largest power of 1/2 that is at most 1 with `eta sum 1/mu_hat < 1`.
    pub eta: Option<ExactReal>,
    pub search_bound: u64,
    /// Defaults to `2 s c_B + 2n + 2`.
    pub max_degree: Option<i64>,
    pub mode: Mode,
}

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig { modulus: None, eta: None, search_bound: 100_000_000, max_degree: None, mode: Mode::Exact }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: Value,
    pub rhs: Value,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Refuted { check: String, detail: String, degree: Option<i64> },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusReport {
    pub mode: Mode,
    pub r: i64,
    #[serde(rename = "r_B")]
    pub r_b: i64,
    pub r_plus: Option<i64>,
    pub r_minus: Option<i64>,
    pub b0_correction: i64,
    pub lower_bound: Option<i64>,
    pub ell0: Option<u64>,
    pub s: Option<i64>,
    pub modulus: Option<u64>,
    pub eta: Option<String>,
    pub certificates: Vec<JumpCertificate>,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

struct Ledger {
    checks: Vec<Check>,
    first_failure: Option<(String, String, Option<i64>)>,
}

impl Ledger {
    fn new() -> Self {
        Ledger { checks: Vec::new(), first_failure: None }
    }

    fn record(&mut self, name: impl Into<String>, lhs: Value, rhs: Value, pass: bool, degree: Option<i64>) -> bool {
        let name = name.into();
        if !pass && self.first_failure.is_none() {
            let detail = format!("{} != {}", show(&lhs), show(&rhs));
            self.first_failure = Some((name.clone(), detail, degree));
        }
        self.checks.push(Check { name, lhs, rhs, pass });
        pass
    }

    fn int(&mut self, name: impl Into<String>, lhs: i64, rhs: i64) -> bool {
        self.record(name, Value::Int(lhs), Value::Int(rhs), lhs == rhs, None)
    }

    fn failed(&self) -> bool {
        self.first_failure.is_some()
    }
}

fn show(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Text(t) => t.clone(),
    }
}

fn validate(dataset: &OrbitDataset, spec: &PrequantSpec) -> Result<(), CensusError> {
    if spec.sign != Monotonicity::Positive {
        return Err(CensusError::Hypothesis("base is not positive monotone".into()));
    }
    if !spec.lacunary_base {
        return Err(CensusError::Hypothesis("base homology is not lacunary".into()));
    }
    if dataset.n != spec.n {
        return Err(CensusError::DimensionMismatch { dataset: dataset.n, spec: spec.n });
    }
    dataset.validate()
}

/// `eta = 2^{-j}`, the largest with `eta <= 1` and `eta * sum 1/mu_hat < 1`.
fn default_eta(orbits: &[OrbitModel]) -> Result<ExactReal, CensusError> {
    let recip = reciprocal_mean_sum(orbits)?;
    let one = RadicalSum::from_integer(1);
    for j in 0..120u32 {
        let den = 1i128 << j;
        let eta = ExactReal::rational(1, den).map_err(IndexError::from)?;
        if recip.div(&RadicalSum::from_integer(den)).map_err(IndexError::from)? < one {
            return Ok(eta);
        }
    }
    Err(CensusError::InvalidConfig("mean indices too small to size eta".into()))
}

fn default_modulus(orbits: &[OrbitModel], spec: &PrequantSpec) -> u64 {
    orbits
        .iter()
        .filter(|o| o.is_hyperbolic())
        .map(|o| o.linear_total().unsigned_abs())
        .filter(|&l| l > 0)
        .fold(2 * spec.c_b, |acc, l| acc.lcm(&l))
}

fn finish(mut report: CensusReport, ledger: Ledger) -> CensusReport {
    report.verdict = match ledger.first_failure {
        Some((check, detail, degree)) => Verdict::Refuted { check, detail, degree },
        None => report.verdict,
    };
    report.checks = ledger.checks;
    report
}

/// Runs the counting argument on `dataset` against `spec`.
pub fn run_census(dataset: &OrbitDataset, spec: &PrequantSpec, config: &CensusConfig) -> Result<CensusReport, CensusError> {
    validate(dataset, spec)?;
    let n = spec.n as i64;
    let r = dataset.orbits.len() as i64;
    let r_b = spec.r_b() as i64;
    let mut report = CensusReport {
        mode: config.mode,
        r,
        r_b,
        r_plus: None,
        r_minus: None,
        b0_correction: spec.b0() as i64,
        lower_bound: None,
        ell0: None,
        s: None,
        modulus: None,
        eta: None,
        certificates: Vec::new(),
        checks: Vec::new(),
        verdict: Verdict::Certified,
    };
    let mut ledger = Ledger::new();

    for m in check_positive_mean(dataset) {
        ledger.record(format!("positive_mean[{}]", m.orbit), Value::Text(m.mean_index), Value::Text("> 0".into()), m.pass, None);
    }
    if ledger.failed() {
        return Ok(finish(report, ledger));
    }

    let lac = check_lacunary(dataset)?;
    let parity_detail = match &lac.witness {
        Some(w) => format!("mu({}^{}) = {}, mu({}^{}) = {}", w.orbit, w.k, w.mu, w.other_orbit, w.other_k, w.other_mu),
        None => "one parity".into(),
    };
    ledger.record("lacunary", Value::Text(parity_detail), Value::Text("one parity".into()), lac.pass, None);
    if ledger.failed() {
        return Ok(finish(report, ledger));
    }

    let k_min = spec.k_min()?;
    let b = spec.finiteness_bound()? as i64;
    if config.mode == Mode::LowerBound {
        return lower_bound_census(dataset, spec, config, report, ledger, k_min, b);
    }

    let provisional = config.max_degree.unwrap_or(k_min + 4 * spec.c_b as i64 + 2 * n + 2);
    if !record_chain(&mut ledger, chain_scan(dataset, spec, provisional, |c, b| c == b, |_| ())?, "chain_match") {
        return Ok(finish(report, ledger));
    }

    let res = resonance_check(dataset, spec)?;
    ledger.record("resonance", Value::Text(res.lhs), Value::Text(res.rhs), res.equal, None);
    ledger.record("finiteness", Value::Int(r), Value::Int(b), r <= b, None);
    if ledger.failed() {
        return Ok(finish(report, ledger));
    }

    let orbits = dataset.collapsed()?;
    let ell0 = ell_zero(&orbits, spec.n)?;
    report.ell0 = Some(ell0);
    let modulus = match config.modulus {
        Some(m) if m == 0 || m % (2 * spec.c_b) != 0 => {
            return Err(CensusError::InvalidConfig(format!("N = {m} is not a positive multiple of 2 c_B = {}", 2 * spec.c_b)))
        }
        Some(m) => m,
        None => default_modulus(&orbits, spec),
    };
    let eta = match &config.eta {
        Some(eta) => {
            let scaled = reciprocal_mean_sum(&orbits)?.mul(&RadicalSum::from(eta));
            if !eta.is_positive() || *eta > ExactReal::ONE || scaled >= RadicalSum::from_integer(1) {
                return Err(CensusError::InvalidConfig(format!("eta = {eta} must lie in (0, 1] with eta sum 1/mu_hat < 1")));
            }
            *eta
        }
        None => default_eta(&orbits)?,
    };
    report.modulus = Some(modulus);
    report.eta = Some(eta.to_string());

    let params = JumpParams { eta, ell0, modulus, n_ambient: spec.n };
    let mut request = JumpRequest::new(orbits.clone(), params, Sides::Both, config.search_bound);
    request.min_k = ell0 as i64 + 2;
    request.min_d_exclusive = 2 * n;
    let (plus, minus) = match find_jump(&request) {
        Ok((Some(p), Some(m))) => (p, m),
        Ok(_) => unreachable!("both sides requested"),
        Err(JumpError::Exhausted { bound }) => {
            report.verdict = Verdict::Inconclusive { reason: format!("jump search exhausted at bound {bound}") };
            return Ok(finish(report, ledger));
        }
        Err(e) => return Err(e.into()),
    };
    report.certificates = vec![plus.clone(), minus.clone()];

    let l_plus = lemma52_check(&plus, spec)?;
    let l_minus = lemma52_check(&minus, spec)?;
    ledger.int("pivot_sum[plus]", l_plus.sum_k, l_plus.s * r_b);
    ledger.int("pivot_sum[minus]", l_minus.sum_k, l_minus.s * r_b);
    let s = l_plus.s;
    report.s = Some(s);

    let lemma = spec.lemma_sum_identity(s as u64)?;
    ledger.int("truncated_betti_sum", lemma.lhs, lemma.rhs);
    let sums = spec.classic_sums(s as u64)?;
    let (observed, predicted) = if n % 2 == 1 {
        (sums.sum_to_d, sums.predicted_odd.unwrap_or(i64::MIN))
    } else {
        (sums.sum_to_d_plus_1, sums.predicted_even.unwrap_or(i64::MIN))
    };
    ledger.int("betti_sum", observed, predicted);

    let side_plus = side_identities(&mut ledger, "plus", &orbits, &plus, spec, ell0 as i64, k_min)?;
    let side_minus = side_identities(&mut ledger, "minus", &orbits, &minus, spec, ell0 as i64, k_min)?;
    report.r_plus = Some(side_plus.r_side);
    report.r_minus = Some(side_minus.r_side);
    let h_n = spec.middle_betti() as i64;
    let b0 = spec.b0() as i64;

    // The minus certificate's count of high pivots transfers to low pivots on the plus side.
    ledger.int("transfer", side_plus.below, side_minus.r_side);
    ledger.int("parity_exclusion", side_plus.near_parity, 0);
    if n % 2 == 0 {
        let c_d = side_plus.c_d;
        ledger.int("c_d", c_d, 2 * b0 + r - side_minus.r_side - side_plus.r_side);
        let b_d = spec.betti_m(plus.d) as i64;
        ledger.int("b_d", b_d, 2 * b0 + h_n);
        ledger.int("c_d=b_d", c_d, b_d);
        ledger.int("middle", side_plus.at_d, h_n);
    }

    let max_degree = config.max_degree.unwrap_or(2 * s * spec.c_b as i64 + 2 * n + 2).max(provisional);
    if max_degree > provisional {
        record_chain(&mut ledger, chain_scan(dataset, spec, max_degree, |c, b| c == b, |_| ())?, "chain_match_final");
    }
    ledger.int("count", r, r_b);
    Ok(finish(report, ledger))
}

fn record_chain(ledger: &mut Ledger, summary: ChainSummary, name: &str) -> bool {
    let (lhs, rhs) = match &summary.first_mismatch {
        Some(row) => (Value::Text(format!("c_{} = {}", row.k, row.c)), Value::Text(format!("b_{} = {}", row.k, row.b))),
        None => (Value::Int(summary.matched), Value::Int(summary.compared)),
    };
    let degree = summary.first_mismatch.map(|row| row.k);
    let name = format!("{name}[..={}]", summary.last);
    ledger.record(name, lhs, rhs, degree.is_none(), degree)
}

struct SideCounts {
    /// `r_+` for this certificate: pivots above `d` (n odd) or above `d + 1` (n even).
    r_side: i64,
    /// Pivots below `d` (n odd) or below `d - 1` (n even).
    below: i64,
    /// Pivots at the excluded parity: `= d` (n odd) or `= d +- 1` (n even).
    near_parity: i64,
    at_d: i64,
    /// All contractible iterates of index `d`.
    c_d: i64,
}

/// Identities forced on one certificate by the matching chain.
fn side_identities(
    ledger: &mut Ledger,
    side: &str,
    orbits: &[OrbitModel],
    cert: &JumpCertificate,
    spec: &PrequantSpec,
    ell0: i64,
    k_min: i64,
) -> Result<SideCounts, CensusError> {
    let n = spec.n as i64;
    let even = n % 2 == 0;
    let d = cert.d;
    let s = d / (2 * spec.c_b as i64);
    let r_b = spec.r_b() as i64;
    let h_n = spec.middle_betti() as i64;
    let b0 = spec.b0() as i64;
    let top = if even { d + 1 } else { d };

    let mut pivots = Vec::with_capacity(orbits.len());
    let mut sum_c0 = 0;
    let mut c_d = 0;
    let mut sum_c = 0i64;
    for (o, &k) in orbits.iter().zip(&cert.k) {
        let tag = format!("[{side},{}]", o.name);
        let mu_k = o.cz_index(k)?;
        pivots.push(mu_k);

        // Beyond the horizon, mu > (k + l) mu_hat - e >= d + 2 automatically.
        let e = o.elliptic_rank() as i64;
        let horizon = o.max_iterate_below(d + 2 + e)?.max(k + ell0) + 1;
        let mus = o.index_run(horizon)?;
        let mu_at = |j: i64| mus[(j - 1) as usize];

        let worst = (1..k - ell0).map(mu_at).max().unwrap_or(d - 2);
        ledger.record(format!("below_window{tag}"), Value::Int(worst), Value::Int(d - 2), worst <= d - 2, None);

        let least = (k + ell0 + 1..=horizon).map(mu_at).min().unwrap_or(d + 2);
        ledger.record(format!("above_window{tag}"), Value::Int(least), Value::Int(d + 2), least >= d + 2, None);

        let window: Vec<i64> = (-ell0..=ell0).filter(|&l| l != 0).map(|l| mu_at(k + l)).collect();
        let a = window.iter().filter(|&&mu| mu <= d - 1).count() as i64;
        let b = window.iter().filter(|&&mu| mu >= d + 1).count() as i64;
        let bar_c = window.iter().filter(|&&mu| mu == d).count() as i64;
        ledger.int(format!("window_balance{tag}"), a, b);

        // The run covers every iterate with mu <= top, since top <= d + 1 < d + 2.
        let table: Vec<(i64, i64)> = (1..=horizon).map(|j| (j, mu_at(j))).filter(|&(_, mu)| mu <= top).collect();
        let c0 = table.iter().filter(|x| x.1 == 0).count() as i64;
        sum_c0 += c0;
        c_d += table.iter().filter(|x| x.1 == d).count() as i64;
        for &(_, mu) in &table {
            if mu >= k_min {
                sum_c += 1;
            }
        }
        let others = table.iter().filter(|x| x.0 != k && x.1 <= d).count() as i64;
        if even {
            ledger.int(format!("window_size{tag}"), a + b + bar_c, 2 * ell0);
            ledger.int(format!("window_at_d{tag}"), bar_c, 2 * c0);
            ledger.int(format!("window_low{tag}"), a + c0, ell0);
            ledger.int(format!("iterates_below{tag}"), others, k - 1 + c0);
        } else {
            ledger.int(format!("window_size{tag}"), a + b, 2 * ell0);
            ledger.int(format!("iterates_below{tag}"), others, k - 1);
        }
    }

    let r_side = pivots.iter().filter(|&&mu| mu > top).count() as i64;
    if even {
        ledger.int(format!("zero_index[{side}]"), sum_c0, b0);
        ledger.int(format!("chain_count[{side}]"), sum_c, s * r_b - r_side + b0);
        ledger.int(format!("r_side[{side}]"), r_side, (r_b - h_n) / 2);
    } else {
        ledger.int(format!("chain_count[{side}]"), sum_c, s * r_b - r_side);
        ledger.int(format!("r_side[{side}]"), r_side, r_b / 2);
    }

    let (below, near_parity) = if even {
        (
            pivots.iter().filter(|&&mu| mu < d - 1).count() as i64,
            pivots.iter().filter(|&&mu| mu == d - 1 || mu == d + 1).count() as i64,
        )
    } else {
        (pivots.iter().filter(|&&mu| mu < d).count() as i64, pivots.iter().filter(|&&mu| mu == d).count() as i64)
    };
    let at_d = pivots.iter().filter(|&&mu| mu == d).count() as i64;
    Ok(SideCounts { r_side, below, near_parity, at_d, c_d })
}

/// Partial data: consistency with the homology plus the counts it forces.
fn lower_bound_census(
    dataset: &OrbitDataset,
    spec: &PrequantSpec,
    config: &CensusConfig,
    mut report: CensusReport,
    mut ledger: Ledger,
    k_min: i64,
    b: i64,
) -> Result<CensusReport, CensusError> {
    let n = spec.n as i64;
    let max_degree = config.max_degree.unwrap_or(k_min + 4 * spec.c_b as i64 + 2 * n + 2);
    record_chain(&mut ledger, chain_scan(dataset, spec, max_degree, |c, b| c <= b, |_| ())?, "chain_dominated");
    ledger.record("finiteness", Value::Int(report.r), Value::Int(b), report.r <= b, None);
    let r_b = spec.r_b() as i64;
    let h_n = spec.middle_betti() as i64;
    // Steps 1 and 2 force r_+ and r_- orbits on either side of the pivot; for n even
    // the pivot degree itself carries dim H_n(B) more.
    let forced = if n % 2 == 1 { r_b / 2 + r_b / 2 } else { (r_b - h_n) / 2 * 2 + h_n };
    report.lower_bound = Some(forced);
    if !ledger.failed() && report.r < forced {
        report.verdict = Verdict::Inconclusive {
            reason: format!("dataset lists {} orbits; the homology forces at least {forced}", report.r),
        };
    }
    Ok(finish(report, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{ellipsoid, lens};

    fn axes(list: &[&str]) -> Vec<ExactReal> {
        list.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn positive_mean_checks() {
        let data = OrbitDataset {
            n: 1,
            orbits: vec![
                OrbitModel::elliptic("a", vec!["sqrt2/2".parse().unwrap()], 2).unwrap(),
                OrbitModel::new("b", vec![], -4, vec![], 1).unwrap(),
            ],
        };
        let checks = check_positive_mean(&data);
        assert_eq!(checks.iter().map(|c| c.pass).collect::<Vec<_>>(), vec![true, false]);
    }

    #[test]
    fn lacunary_checks() {
        let (_, data) = ellipsoid(&axes(&["1", "sqrt2"])).unwrap();
        assert_eq!(check_lacunary(&data).unwrap().parity, Some(1));
        let bad = OrbitDataset { n: 1, orbits: vec![OrbitModel::new("h", vec![], 0, vec![1], 1).unwrap()] };
        let w = check_lacunary(&bad).unwrap().witness.unwrap();
        assert_eq!((w.k, w.other_k), (1, 2));
        let twisted = OrbitDataset { n: 1, orbits: vec![OrbitModel::new("h", vec![], 0, vec![1], 2).unwrap()] };
        assert!(check_lacunary(&twisted).unwrap().pass);
    }

    #[test]
    fn chain_examples() {
        let (spec, data) = ellipsoid(&axes(&["1", "sqrt2"])).unwrap();
        let table = chain_match(&data, &spec, 101).unwrap();
        assert_eq!(table.first_mismatch, None);
        for row in &table.rows {
            let odd = row.k >= 3 && row.k % 2 == 1;
            assert_eq!((row.c, row.b), if odd { (1, 1) } else { (0, 0) });
        }
        let short = OrbitDataset { n: 1, orbits: vec![data.orbits[0].clone()] };
        assert_eq!(chain_match(&short, &spec, 101).unwrap().first_mismatch, Some(5));
        let empty = OrbitDataset { n: 1, orbits: vec![] };
        assert_eq!(chain_match(&empty, &spec, 20).unwrap().first_mismatch, Some(3));
    }

    #[test]
    fn resonance_examples() {
        let (spec, data) = ellipsoid(&axes(&["1", "sqrt2"])).unwrap();
        let res = resonance_check(&data, &spec).unwrap();
        assert!(res.equal);
        assert_eq!(res.lhs, "-1/2");
        let short = OrbitDataset { n: 1, orbits: vec![data.orbits[0].clone()] };
        assert!(!resonance_check(&short, &spec).unwrap().equal);
    }

    #[test]
    fn census_ellipsoid_s3() {
        let (spec, data) = ellipsoid(&axes(&["1", "sqrt2"])).unwrap();
        let report = run_census(&data, &spec, &CensusConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Certified, "{report:#?}");
        assert_eq!((report.r, report.r_plus, report.r_minus), (2, Some(1), Some(1)));
    }

    #[test]
    fn census_ellipsoid_s5() {
        let (spec, data) = ellipsoid(&axes(&["1", "sqrt2", "sqrt3"])).unwrap();
        let report = run_census(&data, &spec, &CensusConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Certified, "{report:#?}");
        assert_eq!(report.r, 3);
    }

    #[test]
    fn census_lens() {
        let (spec, data) = lens(3, &[1, 1], &axes(&["1", "sqrt2"])).unwrap();
        let report = run_census(&data, &spec, &CensusConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Certified, "{report:#?}");
    }

    #[test]
    fn census_refutes_deletion() {
        let (spec, data) = ellipsoid(&axes(&["1", "sqrt2"])).unwrap();
        let short = OrbitDataset { n: 1, orbits: vec![data.orbits[1].clone()] };
        let report = run_census(&short, &spec, &CensusConfig::default()).unwrap();
        assert!(matches!(report.verdict, Verdict::Refuted { degree: Some(3), .. }), "{:?}", report.verdict);
    }

    #[test]
    fn census_rejects_bad_hypotheses() {
        let (_, data) = ellipsoid(&axes(&["1", "sqrt2"])).unwrap();
        let neg = PrequantSpec::new(1, 2, Monotonicity::Negative, vec![1, 0, 1], true).unwrap();
        assert!(matches!(run_census(&data, &neg, &CensusConfig::default()), Err(CensusError::Hypothesis(_))));
        assert!(matches!(
            run_census(&data, &PrequantSpec::sphere(2), &CensusConfig::default()),
            Err(CensusError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lower_bound_mode() {
        let (spec, data) = ellipsoid(&axes(&["1", "sqrt2", "sqrt5"])).unwrap();
        let config = CensusConfig { mode: Mode::LowerBound, ..CensusConfig::default() };
        let report = run_census(&data, &spec, &config).unwrap();
        assert_eq!(report.verdict, Verdict::Certified);
        assert_eq!(report.lower_bound, Some(3));
        let partial = OrbitDataset { n: 2, orbits: data.orbits[..2].to_vec() };
        let report = run_census(&partial, &spec, &config).unwrap();
        assert!(matches!(report.verdict, Verdict::Inconclusive { .. }));
    }
}
