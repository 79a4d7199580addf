//! Common index jump: pivot degrees `d` and iterate vectors `k` such that every
//! orbit's index sequence near `k_i` is a shifted copy of its start.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{ExactReal, RadicalSum};
use crate::homology::PrequantSpec;
use crate::index::{IndexError, OrbitModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JumpError {
    #[error("invalid jump request: {0}")]
    InvalidRequest(String),
    #[error("no certificate with t <= {bound}; raise the search bound")]
    Exhausted { bound: u64 },
    #[error("pivot degree {d} is not divisible by {modulus}")]
    NotDivisible { d: i64, modulus: u64 },
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sides {
    Plus,
    Minus,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JumpCertificate {
    pub side: Side,
    pub d: i64,
    pub k: Vec<i64>,
}

impl JumpCertificate {
    /// `mu(gamma_i^{k_i}) - d` for each orbit.
    pub fn defects(&self, orbits: &[OrbitModel]) -> Result<Vec<i64>, IndexError> {
        orbits
            .iter()
            .zip(&self.k)
            .map(|(o, &k)| Ok(o.cz_index(k)? - self.d))
            .collect()
    }
}

/// Parameters shared by the solver and the verifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpParams {
    pub eta: ExactReal,
    pub ell0: u64,
    /// `N`: every `d` and `k_i` must be a multiple.
    pub modulus: u64,
    pub n_ambient: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpRequest {
    pub orbits: Vec<OrbitModel>,
    pub params: JumpParams,
    pub sides: Sides,
    pub search_bound: u64,
    /// Reject certificates with some `k_i` below this.
    pub min_k: i64,
    /// Reject certificates with `d` at or below this.
    pub min_d_exclusive: i64,
}

impl JumpRequest {
    pub fn new(orbits: Vec<OrbitModel>, params: JumpParams, sides: Sides, search_bound: u64) -> Self {
        JumpRequest { orbits, params, sides, search_bound, min_k: 1, min_d_exclusive: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clause {
    #[serde(rename = "shape")]
    Shape,
    #[serde(rename = "divisibility")]
    Divisibility,
    #[serde(rename = "i")]
    Closeness,
    #[serde(rename = "ii")]
    Recurrence,
    #[serde(rename = "iii")]
    Symmetry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub clause: Clause,
    pub side: Option<Side>,
    pub orbit: Option<usize>,
    pub ell: Option<i64>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, clause: Clause, side: Option<Side>, orbit: Option<usize>, ell: Option<i64>, detail: String) {
        self.violations.push(Violation { clause, side, orbit, ell, detail });
    }
}

/// Checks divisibility, (i) and (ii) for one certificate.
pub fn verify_side(
    orbits: &[OrbitModel],
    cert: &JumpCertificate,
    params: &JumpParams,
) -> Result<VerificationReport, IndexError> {
    let mut report = VerificationReport::default();
    let side = Some(cert.side);
    if cert.k.len() != orbits.len() {
        report.push(
            Clause::Shape,
            side,
            None,
            None,
            format!("{} iterates for {} orbits", cert.k.len(), orbits.len()),
        );
        return Ok(report);
    }
    let modulus = params.modulus as i64;
    if cert.d <= 0 || cert.d % modulus != 0 {
        report.push(Clause::Divisibility, side, None, None, format!("d = {} is not a positive multiple of {modulus}", cert.d));
    }
    let eta = RadicalSum::from(&params.eta);
    let ell0 = params.ell0 as i64;
    for (i, (orbit, &k)) in orbits.iter().zip(&cert.k).enumerate() {
        let at = Some(i);
        if orbit.elliptic_rank() > params.n_ambient {
            report.push(Clause::Shape, side, at, None, format!("{} rotations exceed n = {}", orbit.elliptic_rank(), params.n_ambient));
        }
        if k <= ell0 {
            report.push(Clause::Shape, side, at, None, format!("k = {k} must exceed ell0 = {ell0}"));
            continue;
        }
        if k % modulus != 0 {
            report.push(Clause::Divisibility, side, at, None, format!("k = {k} is not a multiple of {modulus}"));
        }
        let offset = orbit.mean_index(k).sub(&RadicalSum::from_integer(cert.d as i128));
        if !offset.sub(&eta).neg().is_positive() || !offset.add(&eta).is_positive() {
            report.push(Clause::Closeness, side, at, None, format!("k mu_hat - d = {offset} is not within eta"));
        }
        if orbit.is_hyperbolic() {
            let mu = orbit.cz_index(k)?;
            if mu != cert.d || !offset.is_zero() {
                report.push(Clause::Closeness, side, at, None, format!("hyperbolic orbit needs mu = mu_hat = d, got mu = {mu}"));
            }
        }
        for ell in (-ell0..=ell0).filter(|&l| l != 0) {
            let lhs = orbit.cz_index(k + ell)?;
            let rhs = cert.d + orbit.cz_index(ell)?;
            if lhs != rhs {
                report.push(Clause::Recurrence, side, at, Some(ell), format!("mu(k{ell:+}) = {lhs}, expected {rhs}"));
            }
        }
    }
    Ok(report)
}

/// Full check of a certificate pair, including the antisymmetry (iii).
pub fn verify_jump(
    orbits: &[OrbitModel],
    plus: &JumpCertificate,
    minus: &JumpCertificate,
    params: &JumpParams,
) -> Result<VerificationReport, IndexError> {
    let mut report = verify_side(orbits, plus, params)?;
    report.violations.extend(verify_side(orbits, minus, params)?.violations);
    if plus.side != Side::Plus || minus.side != Side::Minus {
        report.push(Clause::Shape, None, None, None, "certificates must be labelled plus and minus".into());
    }
    if plus.k.len() != orbits.len() || minus.k.len() != orbits.len() {
        return Ok(report);
    }
    for (i, orbit) in orbits.iter().enumerate() {
        let dp = orbit.cz_index(plus.k[i])? - plus.d;
        let dm = orbit.cz_index(minus.k[i])? - minus.d;
        if dm != -dp {
            report.push(Clause::Symmetry, None, Some(i), None, format!("defects {dp} (plus) and {dm} (minus) are not opposite"));
        }
    }
    Ok(report)
}

/// Reads `d = 2 s c_B` and compares `sum k_i` with `s r_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotSum {
    pub s: i64,
    pub sum_k: i64,
    pub holds: bool,
}

pub fn lemma52_check(cert: &JumpCertificate, spec: &PrequantSpec) -> Result<PivotSum, JumpError> {
    let step = 2 * spec.c_b as i64;
    if cert.d % step != 0 {
        return Err(JumpError::NotDivisible { d: cert.d, modulus: step as u64 });
    }
    let s = cert.d / step;
    let sum_k: i64 = cert.k.iter().sum();
    Ok(PivotSum { s, sum_k, holds: sum_k == s * spec.r_b() as i64 })
}

const SCALE_BITS: u32 = 64;

/// Per-orbit data precomputed for the search loop.
struct Prepared<'a> {
    orbit: &'a OrbitModel,
    mean: RadicalSum,
    /// `floor(2^64 / mu_hat)`; the true value lies in `[inv_lo, inv_lo + 1)`.
    inv_lo: u128,
    e: i128,
    linear: i128,
}

impl<'a> Prepared<'a> {
    fn new(orbit: &'a OrbitModel) -> Result<Self, JumpError> {
        let mean = orbit.mean_index_simple();
        if !mean.is_positive() {
            return Err(IndexError::NonPositiveMeanIndex { orbit: orbit.name.clone(), mean: mean.to_string() }.into());
        }
        let inv = RadicalSum::from_integer(1i128 << SCALE_BITS).div(&mean).map_err(IndexError::from)?;
        let inv_lo = inv
            .floor()
            .to_u128()
            .ok_or_else(|| JumpError::InvalidRequest(format!("mean index of {} is too small", orbit.name)))?;
        Ok(Prepared { orbit, mean, inv_lo, e: orbit.elliptic_rank() as i128, linear: orbit.linear_total() as i128 })
    }

    /// Iterates `k = j N` that may satisfy `|k mu_hat - d| < eta`, a superset.
    fn candidate_range(&self, d: i128, eta_ceil: i128, modulus: i128) -> Option<(i128, i128)> {
        let lo_num = (d - eta_ceil).max(0) as u128;
        let hi_num = (d + eta_ceil) as u128;
        let lo = lo_num.checked_mul(self.inv_lo)? >> SCALE_BITS;
        let hi = (hi_num.checked_mul(self.inv_lo + 1)? >> SCALE_BITS) + 1;
        let m = modulus as u128;
        Some(((lo / m).max(1) as i128, (hi / m) as i128))
    }

    fn mu(&self, k: i64) -> Option<i64> {
        self.orbit.cz_index(k).ok()
    }

    /// `2 sum floor(k theta_m) + k L`; then `k mu_hat` lies in `(A, A + 2e)`, or equals `A` when `e = 0`.
    fn floor_part(&self, k: i64) -> Option<i128> {
        let mut floors: i128 = 0;
        for r in &self.orbit.rotations {
            if r.is_integer_multiple(k as i128) {
                return None;
            }
            floors += 2 * r.floor_mul(k as i128);
        }
        Some(floors + k as i128 * self.linear)
    }

    /// Index defect `mu(k) - d` of a candidate that satisfies (i) and (ii), or `None`.
    fn accept(&self, k: i64, d: i64, eta: &Eta) -> Option<i64> {
        if k <= eta.ell0 {
            return None;
        }
        let base = self.floor_part(k)? - d as i128;
        if self.e == 0 {
            if base != 0 {
                return None;
            }
        } else if base > eta.strict_floor || base + 2 * self.e < -eta.strict_floor {
            return None;
        }
        let mu_k = self.mu(k)?;
        for ell in 1..=eta.ell0 {
            let m = self.mu(ell)?;
            if self.mu(k + ell)? != d + m || self.mu(k - ell)? != d - m {
                return None;
            }
        }
        let offset = self.mean.mul_int(k as i128).sub(&RadicalSum::from_integer(d as i128));
        if !offset.sub(&eta.value).neg().is_positive() || !offset.add(&eta.value).is_positive() {
            return None;
        }
        Some(mu_k - d)
    }
}

/// `eta` in the forms the search needs, plus the other per-request constants.
struct Eta {
    value: RadicalSum,
    ceil: i128,
    /// Largest integer strictly below `eta`.
    strict_floor: i128,
    ell0: i64,
}

/// All accepted `(k, defect)` pairs of one orbit at pivot `d`.
fn orbit_candidates(p: &Prepared<'_>, d: i64, req: &JumpRequest, eta: &Eta) -> Option<Vec<(i64, i64)>> {
    let modulus = req.params.modulus as i128;
    let (lo, hi) = p.candidate_range(d as i128, eta.ceil, modulus)?;
    let mut found = Vec::new();
    for j in lo..=hi {
        let k = i64::try_from(j * modulus).ok()?;
        if k < req.min_k {
            continue;
        }
        if let Some(defect) = p.accept(k, d, eta) {
            found.push((k, defect));
        }
    }
    Some(found)
}

/// Per-orbit candidate lists at `d`, or `None` if some orbit has none.
/// `known` supplies the lists of orbits already computed.
fn candidates_at(
    prepared: &[Prepared<'_>],
    d: i64,
    req: &JumpRequest,
    eta: &Eta,
    known: Option<(usize, &[(i64, i64)])>,
) -> Option<Vec<Vec<(i64, i64)>>> {
    if d <= req.min_d_exclusive {
        return None;
    }
    let mut out = Vec::with_capacity(prepared.len());
    for (i, p) in prepared.iter().enumerate() {
        let found = match known {
            Some((at, list)) if at == i => list.to_vec(),
            _ => orbit_candidates(p, d, req, eta)?,
        };
        if found.is_empty() {
            return None;
        }
        out.push(found);
    }
    Some(out)
}

/// Accepted `(k, defect)` pairs, one list per orbit.
type PerOrbit = Vec<Vec<(i64, i64)>>;

/// At most this many defect vectors are recorded per pivot.
const MAX_COMBOS: usize = 64;

fn combos(per_orbit: &[Vec<(i64, i64)>]) -> Vec<(Vec<i64>, Vec<i64>)> {
    let mut acc: Vec<(Vec<i64>, Vec<i64>)> = vec![(Vec::new(), Vec::new())];
    for choices in per_orbit {
        let mut next = Vec::new();
        'outer: for (ks, defects) in &acc {
            for (k, defect) in choices {
                let mut ks = ks.clone();
                let mut ds = defects.clone();
                ks.push(*k);
                ds.push(*defect);
                next.push((ks, ds));
                if next.len() >= MAX_COMBOS {
                    break 'outer;
                }
            }
        }
        acc = next;
    }
    acc
}

fn thread_pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var("CZC_THREADS").ok()?.trim().parse::<usize>().ok()?;
        rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().ok()
    })
    .as_ref()
}

pub(crate) fn run_pooled<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_pool() {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Consumes pivots in increasing order and reports the first acceptable outcome.
struct Pairing {
    sides: Sides,
    seen: HashMap<Vec<i64>, (i64, Vec<i64>)>,
}

type Found = (Option<JumpCertificate>, Option<JumpCertificate>);

impl Pairing {
    fn offer(&mut self, d: i64, per_orbit: &[Vec<(i64, i64)>]) -> Option<Found> {
        for (ks, defects) in combos(per_orbit) {
            match self.sides {
                Sides::Plus => return Some((Some(JumpCertificate { side: Side::Plus, d, k: ks }), None)),
                Sides::Minus => return Some((None, Some(JumpCertificate { side: Side::Minus, d, k: ks }))),
                Sides::Both => {
                    let opposite: Vec<i64> = defects.iter().map(|x| -x).collect();
                    let earlier = self
                        .seen
                        .get(&opposite)
                        .cloned()
                        .or_else(|| (opposite == defects).then(|| (d, ks.clone())));
                    if let Some((pd, pk)) = earlier {
                        let plus = JumpCertificate { side: Side::Plus, d: pd, k: pk };
                        let minus = JumpCertificate { side: Side::Minus, d, k: ks };
                        return Some((Some(plus), Some(minus)));
                    }
                    self.seen.entry(defects).or_insert((d, ks));
                }
            }
        }
        None
    }
}

const CHUNK: i128 = 1 << 14;

/// Drives the search by the iterates of one orbit.
///
/// Every certificate contains a valid iterate `k = j N` of the driver, and
/// such a `k` pins `d` to the window `(k mu_hat - eta, k mu_hat + eta)`.
/// Walking `j` upward and releasing a pivot only once no later `j` can reach
/// it yields pivots in increasing order, so the result is the one the plain
/// scan over `d = N t` would return.
struct Driver<'a, 'p> {
    prepared: &'a [Prepared<'p>],
    at: usize,
    req: &'a JumpRequest,
    eta: &'a Eta,
    /// `floor(2^64 frac(mu_hat / N))`.
    frac_step: u64,
    /// Upper bound for `2^64 eta / N`, saturated.
    window: u128,
    /// `floor(2^32 mu_hat)`.
    mean_lo_32: u128,
    d_max: i64,
}

impl<'a, 'p> Driver<'a, 'p> {
    fn new(prepared: &'a [Prepared<'p>], req: &'a JumpRequest, eta: &'a Eta) -> Result<Self, JumpError> {
        let mut at = 0;
        for (i, p) in prepared.iter().enumerate().skip(1) {
            if p.mean > prepared[at].mean {
                at = i;
            }
        }
        let p = &prepared[at];
        let modulus = req.params.modulus as i128;
        let scaled = p.mean.mul_int(1i128 << SCALE_BITS).div(&RadicalSum::from_integer(modulus)).map_err(IndexError::from)?;
        let frac_step = (scaled.floor() & num_bigint::BigInt::from(u64::MAX)).to_u64().unwrap_or(0);
        let window = eta
            .value
            .mul_int(1i128 << SCALE_BITS)
            .div(&RadicalSum::from_integer(modulus))
            .map_err(IndexError::from)?
            .floor()
            .to_u128()
            .map_or(u128::MAX, |w| w.saturating_add(1));
        let mean_lo_32 = p.mean.mul_int(1i128 << 32).floor().to_u128().unwrap_or(0);
        let d_max = (req.search_bound as i128 * modulus).min(i64::MAX as i128) as i64;
        Ok(Driver { prepared, at, req, eta, frac_step, window, mean_lo_32, d_max })
    }

    /// Necessary condition for `|k mu_hat - d| < eta` with `N | d`.
    fn near_multiple(&self, k: i64) -> bool {
        let approx = (k as u64).wrapping_mul(self.frac_step) as u128;
        let span = 2 * self.window + k as u128;
        if span >= 1u128 << 64 {
            return true;
        }
        let z = (approx + self.window + k as u128) % (1u128 << 64);
        z < span
    }

    /// `(d, k, defect)` for every valid driver iterate `k`.
    fn hits(&self, k: i64) -> Vec<(i64, i64, i64)> {
        if k < self.req.min_k || !self.near_multiple(k) {
            return Vec::new();
        }
        let p = &self.prepared[self.at];
        let Some(a) = p.floor_part(k) else { return Vec::new() };
        let modulus = self.req.params.modulus as i128;
        let lo = a - self.eta.strict_floor;
        let hi = a + 2 * p.e + self.eta.strict_floor;
        let mut out = Vec::new();
        let mut d = num_integer::Integer::div_ceil(&lo, &modulus) * modulus;
        while d <= hi {
            if d > self.req.min_d_exclusive as i128 && d <= self.d_max as i128 {
                if let Some(defect) = p.accept(k, d as i64, self.eta) {
                    out.push((d as i64, k, defect));
                }
            }
            d += modulus;
        }
        out
    }

    /// Lower bound for every pivot reachable from driver iterates `k >= k_next`.
    fn reach_floor(&self, k_next: i128) -> i128 {
        ((k_next as u128).saturating_mul(self.mean_lo_32) >> 32) as i128 - self.eta.ceil - 1
    }

    fn run(&self) -> Option<Found> {
        let modulus = self.req.params.modulus as i128;
        let p = &self.prepared[self.at];
        let j_max = ((self.d_max as u128 + self.eta.ceil as u128).saturating_mul(p.inv_lo + 1) >> SCALE_BITS) as i128
            / modulus
            + 1;
        let mut pairing = Pairing { sides: self.req.sides, seen: HashMap::new() };
        let mut pending: BTreeMap<i64, Vec<(i64, i64)>> = BTreeMap::new();
        let mut j = 1i128;
        while j <= j_max {
            let end = (j + CHUNK - 1).min(j_max);
            let hits: Vec<(i64, i64, i64)> = (j..=end)
                .into_par_iter()
                .flat_map_iter(|jj| {
                    let k = i64::try_from(jj * modulus).unwrap_or(i64::MAX);
                    self.hits(k)
                })
                .collect();
            for (d, k, defect) in hits {
                pending.entry(d).or_default().push((k, defect));
            }
            let threshold = if end == j_max { i128::MAX } else { self.reach_floor((end + 1) * modulus) };
            let ready: Vec<(i64, Vec<(i64, i64)>)> = {
                let keys: Vec<i64> = pending.range(..).take_while(|(d, _)| (**d as i128) < threshold).map(|(d, _)| *d).collect();
                keys.into_iter().map(|d| (d, pending.remove(&d).unwrap_or_default())).collect()
            };
            let full: Vec<Option<PerOrbit>> = ready
                .par_iter()
                .map(|(d, list)| candidates_at(self.prepared, *d, self.req, self.eta, Some((self.at, list))))
                .collect();
            for ((d, _), per_orbit) in ready.iter().zip(full) {
                if let Some(per_orbit) = per_orbit {
                    if let Some(found) = pairing.offer(*d, &per_orbit) {
                        return Some(found);
                    }
                }
            }
            j = end + 1;
        }
        None
    }
}

fn prepare_eta(params: &JumpParams) -> Eta {
    let floor = params.eta.floor();
    Eta {
        value: RadicalSum::from(&params.eta),
        ceil: floor + 1,
        strict_floor: if params.eta.is_integer() { floor - 1 } else { floor },
        ell0: params.ell0 as i64,
    }
}

fn check_request(req: &JumpRequest) -> Result<(), JumpError> {
    if !req.params.eta.is_positive() {
        return Err(JumpError::InvalidRequest("eta must be positive".into()));
    }
    if req.params.modulus == 0 || req.params.ell0 == 0 || req.search_bound == 0 {
        return Err(JumpError::InvalidRequest("N, ell0 and the search bound must be positive".into()));
    }
    if req.orbits.is_empty() {
        return Err(JumpError::InvalidRequest("no orbits".into()));
    }
    Ok(())
}

/// Finds the first certificate(s) among pivots `d = N t`, `t = 1..=search_bound`.
///
/// With `Sides::Both`, the plus certificate is the earlier pivot of the first
/// pair whose defect vectors are opposite; a zero defect vector pairs with itself.
/// Returned certificates have been re-checked by [`verify_jump`] / [`verify_side`].
pub fn find_jump(req: &JumpRequest) -> Result<Found, JumpError> {
    check_request(req)?;
    let prepared = req.orbits.iter().map(Prepared::new).collect::<Result<Vec<_>, _>>()?;
    let eta = prepare_eta(&req.params);
    let driver = Driver::new(&prepared, req, &eta)?;
    let found = run_pooled(|| driver.run()).ok_or(JumpError::Exhausted { bound: req.search_bound })?;
    certify(req, found)
}

fn certify(req: &JumpRequest, found: Found) -> Result<Found, JumpError> {
    let report = match &found {
        (Some(p), Some(m)) => verify_jump(&req.orbits, p, m, &req.params)?,
        (Some(c), None) | (None, Some(c)) => verify_side(&req.orbits, c, &req.params)?,
        (None, None) => unreachable!("search returns at least one certificate"),
    };
    if !report.passed() {
        return Err(JumpError::InvalidRequest(format!(
            "solver produced a certificate the verifier rejects: {:?}",
            report.violations
        )));
    }
    Ok(found)
}

/// Plain scan over `d = N t`; the reference the driven search must agree with.
pub fn find_jump_by_scan(req: &JumpRequest) -> Result<Found, JumpError> {
    check_request(req)?;
    let prepared = req.orbits.iter().map(Prepared::new).collect::<Result<Vec<_>, _>>()?;
    let eta = prepare_eta(&req.params);
    let modulus = req.params.modulus as i64;
    let mut pairing = Pairing { sides: req.sides, seen: HashMap::new() };
    for t in 1..=req.search_bound {
        let Some(d) = (t as i64).checked_mul(modulus) else { break };
        if let Some(per_orbit) = candidates_at(&prepared, d, req, &eta, None) {
            if let Some(found) = pairing.offer(d, &per_orbit) {
                return certify(req, found);
            }
        }
    }
    Err(JumpError::Exhausted { bound: req.search_bound })
}
