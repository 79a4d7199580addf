//! Conley-Zehnder indices of iterated Reeb orbits in symplectic normal form.
//!
//! A simple orbit is described by its elliptic rotation numbers `theta_m`, an
//! even per-iterate contribution of the positive-hyperbolic and winding part,
//! and odd per-iterate contributions of negative-hyperbolic blocks. The k-th
//! iterate then has
//!
//! ```text
//! mu(k)     = sum_m (2 floor(k theta_m) + 1) + k (linear_even + sum odd_linear)
//! mu_hat(k) = k (2 sum_m theta_m + linear_even + sum odd_linear)
//! ```
//!
//! so `|mu(k) - mu_hat(k)| < e` where `e` is the number of rotations.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{ExactError, ExactReal, RadicalSum};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("orbit {orbit}: iterate {k} is degenerate")]
    DegenerateIterate { orbit: String, k: i64 },
    #[error("orbit {orbit}: mean index is not positive ({mean})")]
    NonPositiveMeanIndex { orbit: String, mean: String },
    #[error("orbit {orbit}: {reason}")]
    InvalidOrbit { orbit: String, reason: String },
    #[error("iterate number must be nonzero")]
    ZeroIterate,
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Normal-form data of a simple closed Reeb orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawOrbit")]
pub struct OrbitModel {
    pub name: String,
    pub rotations: Vec<ExactReal>,
    pub linear_even: i64,
    pub odd_linear: Vec<i64>,
    /// Iterate `k` is contractible iff `torsion_order` divides `k`.
    pub torsion_order: u64,
}

#[derive(Deserialize)]
struct RawOrbit {
    name: String,
    #[serde(default)]
    rotations: Vec<ExactReal>,
    #[serde(default)]
    linear_even: i64,
    #[serde(default)]
    odd_linear: Vec<i64>,
    #[serde(default = "one")]
    torsion_order: u64,
}

fn one() -> u64 {
    1
}

impl TryFrom<RawOrbit> for OrbitModel {
    type Error = IndexError;

    fn try_from(raw: RawOrbit) -> Result<Self, Self::Error> {
        OrbitModel::new(raw.name, raw.rotations, raw.linear_even, raw.odd_linear, raw.torsion_order)
    }
}

impl OrbitModel {
    pub fn new(
        name: impl Into<String>,
        rotations: Vec<ExactReal>,
        linear_even: i64,
        odd_linear: Vec<i64>,
        torsion_order: u64,
    ) -> Result<Self, IndexError> {
        let name = name.into();
        let invalid = |reason: &str| IndexError::InvalidOrbit { orbit: name.clone(), reason: reason.into() };
        if rotations.iter().any(|r| !r.is_positive()) {
            return Err(invalid("rotation numbers must be positive"));
        }
        if linear_even % 2 != 0 {
            return Err(invalid("linear_even must be even"));
        }
        if odd_linear.iter().any(|o| o % 2 == 0) {
            return Err(invalid("odd_linear entries must be odd"));
        }
        if torsion_order == 0 {
            return Err(invalid("torsion_order must be positive"));
        }
        Ok(OrbitModel { name, rotations, linear_even, odd_linear, torsion_order })
    }

    /// Purely elliptic orbit with the given rotations plus an even linear term.
    pub fn elliptic(name: impl Into<String>, rotations: Vec<ExactReal>, linear_even: i64) -> Result<Self, IndexError> {
        Self::new(name, rotations, linear_even, Vec::new(), 1)
    }

    /// Number of elliptic blocks; the bound in `|mu - mu_hat| < e`.
    pub fn elliptic_rank(&self) -> usize {
        self.rotations.len()
    }

    pub fn linear_total(&self) -> i64 {
        self.linear_even + self.odd_linear.iter().sum::<i64>()
    }

    /// No elliptic blocks: index and mean index agree exactly.
    pub fn is_hyperbolic(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn is_contractible(&self, k: i64) -> bool {
        k % self.torsion_order as i64 == 0
    }

    fn degenerate(&self, k: i64) -> IndexError {
        IndexError::DegenerateIterate { orbit: self.name.clone(), k }
    }

    /// Fails when some `k * theta_m` is an integer.
    pub fn check_nondegenerate(&self, k: i64) -> Result<(), IndexError> {
        if self.rotations.iter().any(|r| r.is_integer_multiple(k as i128)) {
            return Err(self.degenerate(k));
        }
        Ok(())
    }

    /// `mu(gamma^k)`. Negative `k` gives `-mu(gamma^{|k|})`.
    pub fn cz_index(&self, k: i64) -> Result<i64, IndexError> {
        if k == 0 {
            return Err(IndexError::ZeroIterate);
        }
        if k < 0 {
            return self.cz_index(-k).map(|m| -m);
        }
        self.check_nondegenerate(k)?;
        let elliptic: i128 = self
            .rotations
            .iter()
            .map(|r| 2 * r.floor_mul(k as i128) + 1)
            .sum();
        let total = elliptic + k as i128 * self.linear_total() as i128;
        i64::try_from(total).map_err(|_| IndexError::Exact(ExactError::Overflow))
    }

    /// `mu_hat(gamma)`.
    pub fn mean_index_simple(&self) -> RadicalSum {
        let mut sum = RadicalSum::from_integer(self.linear_total() as i128);
        for r in &self.rotations {
            sum = sum.add(&RadicalSum::from(r).mul_int(2));
        }
        sum
    }

    /// `mu_hat(gamma^k) = k * mu_hat(gamma)`.
    pub fn mean_index(&self, k: i64) -> RadicalSum {
        self.mean_index_simple().mul_int(k as i128)
    }

    /// Good iterates have the parity of the simple orbit's index.
    pub fn is_good(&self, k: i64) -> Result<bool, IndexError> {
        self.check_nondegenerate(k)?;
        self.check_nondegenerate(1)?;
        Ok(k % 2 != 0 || self.odd_linear.len() % 2 == 0)
    }

    /// Euler characteristic of the local homology of `gamma^k`.
    pub fn local_chi(&self, k: i64) -> Result<i64, IndexError> {
        if !self.is_good(k)? {
            return Ok(0);
        }
        let mu = self.cz_index(k)?;
        Ok(if mu.rem_euclid(2) == 0 { 1 } else { -1 })
    }

    /// Local mean Euler characteristic: `(-1)^mu` if the second iterate is
    /// good, `(-1)^mu / 2` otherwise.
    pub fn mean_chi(&self) -> Result<ExactReal, IndexError> {
        let mu = self.cz_index(1)?;
        let sign: i128 = if mu.rem_euclid(2) == 0 { 1 } else { -1 };
        let den = if self.is_good(2)? { 1 } else { 2 };
        Ok(ExactReal::rational(sign, den)?)
    }

    fn require_positive_mean(&self) -> Result<RadicalSum, IndexError> {
        let mean = self.mean_index_simple();
        if !mean.is_positive() {
            return Err(IndexError::NonPositiveMeanIndex { orbit: self.name.clone(), mean: mean.to_string() });
        }
        Ok(mean)
    }

    /// Largest `k` with `k * mu_hat <= bound`, for positive mean index.
    pub(crate) fn max_iterate_below(&self, bound: i64) -> Result<i64, IndexError> {
        let mean = self.require_positive_mean()?;
        let q = RadicalSum::from_integer(bound as i128).div(&mean)?;
        q.floor().to_i64().ok_or(IndexError::Exact(ExactError::Overflow))
    }

    /// `mu(gamma^j)` for `j = 1..=upto`, same values as [`Self::cz_index`].
    ///
    /// Floors come from a float estimate when it is clearly away from an
    /// integer and from the exact path otherwise.
    pub fn index_run(&self, upto: i64) -> Result<Vec<i64>, IndexError> {
        let approx: Vec<f64> = self.rotations.iter().map(ExactReal::to_f64).collect();
        let linear = self.linear_total();
        let rank = self.rotations.len() as i64;
        let mut out = Vec::with_capacity(upto.max(0) as usize);
        for j in 1..=upto {
            let mut total = rank + j * linear;
            for (r, &theta) in self.rotations.iter().zip(&approx) {
                let x = j as f64 * theta;
                let f = x.floor();
                let margin = (x.abs() + 1.0) * f64::powi(2.0, -40);
                let floor = if x - f > margin && f + 1.0 - x > margin {
                    f as i64
                } else {
                    if r.is_integer_multiple(j as i128) {
                        return Err(self.degenerate(j));
                    }
                    r.floor_mul(j as i128) as i64
                };
                total += 2 * floor;
            }
            out.push(total);
        }
        Ok(out)
    }

    /// All contractible iterates with index at most `max_index`.
    ///
    /// Since `mu(k) > k mu_hat - e`, no iterate with `k mu_hat >= max_index + e`
    /// qualifies. `slack` may raise `e` (for instance to the ambient `n`).
    pub fn contractible_iterates(&self, max_index: i64, slack: usize) -> Result<IterateIndexTable, IndexError> {
        let e = self.elliptic_rank().max(slack) as i64;
        let k_max = self.max_iterate_below(max_index + e)?;
        let c = self.torsion_order as i64;
        let mut entries = Vec::new();
        let mut k = c;
        while k <= k_max {
            let mu = self.cz_index(k)?;
            if mu <= max_index {
                entries.push(IterateEntry { k, mu, contractible: true, good: self.is_good(k)? });
            }
            k += c;
        }
        Ok(IterateIndexTable { orbit: self.name.clone(), entries })
    }

    /// The minimal contractible iterate `gamma^c` as a simple orbit in its own right.
    pub fn collapse(&self) -> Result<OrbitModel, IndexError> {
        let c = self.torsion_order as i64;
        if c == 1 {
            return Ok(self.clone());
        }
        let rotations = self
            .rotations
            .iter()
            .map(|r| r.mul_int(c as i128))
            .collect::<Result<Vec<_>, _>>()?;
        let scaled_odd: Vec<i64> = self.odd_linear.iter().map(|o| o * c).collect();
        let (linear_even, odd_linear) = if c % 2 == 0 {
            (self.linear_even * c + scaled_odd.iter().sum::<i64>(), Vec::new())
        } else {
            (self.linear_even * c, scaled_odd)
        };
        OrbitModel::new(self.name.clone(), rotations, linear_even, odd_linear, 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterateEntry {
    pub k: i64,
    pub mu: i64,
    pub contractible: bool,
    pub good: bool,
}

/// Iterates of one orbit, sorted by `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterateIndexTable {
    pub orbit: String,
    pub entries: Vec<IterateEntry>,
}

/// A certified `ell_0`: for every orbit, every `k >= 1` and `ell >= ell_0`,
/// `mu(gamma^{k+ell}) >= mu(gamma^k) + n + 3`.
///
/// Uses `floor((k+l)x) - floor(kx) >= floor(lx)`, so it suffices that
/// `g(l) = sum_m 2 floor(l theta_m) + l L >= n + 3` for all `l >= ell_0`.
/// Because `g(l) > l mu_hat - 2e`, that holds automatically once
/// `l >= (n + 3 + 2e) / mu_hat`; below that we scan.
pub fn ell_zero(orbits: &[OrbitModel], n: usize) -> Result<u64, IndexError> {
    let target = n as i128 + 3;
    let mut best = 1u64;
    for orbit in orbits {
        let e = orbit.elliptic_rank() as i64;
        let horizon = orbit.max_iterate_below(n as i64 + 3 + 2 * e)? + 1;
        let growth = |l: i64| -> i128 {
            orbit.rotations.iter().map(|r| 2 * r.floor_mul(l as i128)).sum::<i128>()
                + l as i128 * orbit.linear_total() as i128
        };
        let mut least = horizon.max(1);
        for l in (1..horizon).rev() {
            if growth(l) >= target {
                least = l;
            } else {
                break;
            }
        }
        best = best.max(least as u64);
    }
    Ok(best)
}

/// `ceil((3n + 3) / min mu_hat)`, an a priori bound for [`ell_zero`] when
/// every orbit has at most `n` rotations.
pub fn ell_zero_bound(orbits: &[OrbitModel], n: usize) -> Result<u64, IndexError> {
    let mut best = 1u64;
    for orbit in orbits {
        let mean = orbit.require_positive_mean()?;
        let q = RadicalSum::from_integer(3 * n as i128 + 3).div(&mean)?;
        let fl = q.floor();
        let ceil = if q.rational_value().is_some_and(|v| v.is_integer()) { fl } else { fl + 1 };
        best = best.max(ceil.to_u64().unwrap_or(u64::MAX));
    }
    Ok(best)
}

/// Reciprocal sum used to size the jump tolerance: `sum_i 1 / mu_hat_i`.
pub fn reciprocal_mean_sum(orbits: &[OrbitModel]) -> Result<RadicalSum, IndexError> {
    let mut sum = RadicalSum::zero();
    for o in orbits {
        let mean = o.require_positive_mean()?;
        sum = sum.add(&RadicalSum::from_integer(1).div(&mean)?);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt(s: &str) -> ExactReal {
        s.parse().unwrap()
    }

    fn short_orbit() -> OrbitModel {
        OrbitModel::elliptic("g0", vec![rt("sqrt2/2")], 2).unwrap()
    }

    fn long_orbit() -> OrbitModel {
        OrbitModel::elliptic("g1", vec![rt("sqrt2")], 2).unwrap()
    }

    #[test]
    fn pure_linear_index() {
        let o = OrbitModel::new("h", vec![], 2, vec![], 1).unwrap();
        assert_eq!(o.cz_index(5).unwrap(), 10);
        assert_eq!(o.mean_index(1), RadicalSum::from_integer(2));
        let odd = OrbitModel::new("h", vec![], 0, vec![1], 1).unwrap();
        assert_eq!(odd.cz_index(4).unwrap(), 4);
    }

    #[test]
    fn ellipsoid_short_orbit_indices() {
        let g = short_orbit();
        assert_eq!(g.cz_index(1).unwrap(), 3);
        assert_eq!(g.cz_index(2).unwrap(), 7);
        assert_eq!(g.mean_index(1), "2+sqrt2".parse().unwrap());
        assert_eq!(long_orbit().cz_index(1).unwrap(), 5);
    }

    #[test]
    fn hyperbolic_index_equals_mean() {
        let o = OrbitModel::new("h", vec![], 0, vec![3], 1).unwrap();
        for k in 1..10 {
            assert_eq!(RadicalSum::from_integer(o.cz_index(k).unwrap() as i128), o.mean_index(k));
        }
    }

    #[test]
    fn goodness_and_mean_chi() {
        assert!(short_orbit().is_good(2).unwrap());
        let bad = OrbitModel::new("b", vec![], 0, vec![1], 1).unwrap();
        assert!(!bad.is_good(2).unwrap());
        assert_eq!(bad.local_chi(2).unwrap(), 0);
        assert_eq!(bad.mean_chi().unwrap(), ExactReal::rational(-1, 2).unwrap());
        let pair = OrbitModel::new("p", vec![], 0, vec![1, 3], 1).unwrap();
        assert!(pair.is_good(2).unwrap());
        assert_eq!(short_orbit().mean_chi().unwrap(), ExactReal::integer(-1));
    }

    #[test]
    fn degenerate_iterates_are_refused() {
        let o = OrbitModel::elliptic("q", vec![rt("1/4")], 2).unwrap();
        assert!(o.cz_index(3).is_ok());
        assert_eq!(o.cz_index(8), Err(IndexError::DegenerateIterate { orbit: "q".into(), k: 8 }));
    }

    #[test]
    fn validation() {
        assert!(OrbitModel::new("x", vec![], 3, vec![], 1).is_err());
        assert!(OrbitModel::new("x", vec![], 2, vec![2], 1).is_err());
        assert!(OrbitModel::new("x", vec![rt("-1/2")], 2, vec![], 1).is_err());
        assert!(OrbitModel::new("x", vec![], 2, vec![], 0).is_err());
        let json = r#"{"name":"g0","rotations":[{"type":"surd","a":0,"b":1,"root":2,"den":2}],"linear_even":2,"odd_linear":[],"torsion_order":1}"#;
        let o: OrbitModel = serde_json::from_str(json).unwrap();
        assert_eq!(o, short_orbit());
        assert!(serde_json::from_str::<OrbitModel>(r#"{"name":"x","linear_even":1}"#).is_err());
    }

    #[test]
    fn contractible_iterates_short_orbit() {
        let t = short_orbit().contractible_iterates(13, 1).unwrap();
        let ks: Vec<_> = t.entries.iter().map(|e| (e.k, e.mu)).collect();
        assert_eq!(ks, vec![(1, 3), (2, 7), (3, 11), (4, 13)]);
        let lens = OrbitModel::new("g0", vec![rt("sqrt2/2")], 2, vec![], 3).unwrap();
        let t = lens.contractible_iterates(13, 1).unwrap();
        assert_eq!(t.entries.iter().map(|e| (e.k, e.mu)).collect::<Vec<_>>(), vec![(3, 11)]);
        assert!(short_orbit().contractible_iterates(2, 1).unwrap().entries.is_empty());
        let neg = OrbitModel::new("n", vec![], -4, vec![], 1).unwrap();
        assert!(matches!(neg.contractible_iterates(10, 1), Err(IndexError::NonPositiveMeanIndex { .. })));
    }

    #[test]
    fn index_run_matches_cz_index() {
        let o = OrbitModel::new("x", vec![rt("sqrt3/5"), rt("sqrt7"), rt("1/3")], 2, vec![1, 3], 1).unwrap();
        assert!(matches!(o.index_run(5), Err(IndexError::DegenerateIterate { k: 3, .. })));
        for orbit in [short_orbit(), long_orbit()] {
            let run = orbit.index_run(5000).unwrap();
            for (j, mu) in run.iter().enumerate() {
                assert_eq!(*mu, orbit.cz_index(j as i64 + 1).unwrap());
            }
        }
    }

    #[test]
    fn collapse_matches_iterates() {
        let o = OrbitModel::new("x", vec![rt("sqrt3/5"), rt("sqrt7")], 2, vec![1, 3], 4).unwrap();
        let c = o.collapse().unwrap();
        assert_eq!(c.torsion_order, 1);
        for j in 1..30 {
            assert_eq!(c.cz_index(j).unwrap(), o.cz_index(4 * j).unwrap());
            assert_eq!(c.mean_index(j), o.mean_index(4 * j));
        }
        let odd = OrbitModel::new("y", vec![rt("sqrt2/3")], 0, vec![1], 3).unwrap();
        let c = odd.collapse().unwrap();
        assert_eq!(c.odd_linear, vec![3]);
        for j in 1..30 {
            assert_eq!(c.cz_index(j).unwrap(), odd.cz_index(3 * j).unwrap());
        }
    }

    #[test]
    fn ell_zero_examples() {
        let lin = OrbitModel::new("h", vec![], 4, vec![], 1).unwrap();
        for n in 0..10 {
            assert_eq!(ell_zero(std::slice::from_ref(&lin), n).unwrap(), (n as u64 + 3).div_ceil(4));
        }
        let pair = [short_orbit(), long_orbit()];
        assert_eq!(ell_zero(&pair, 1).unwrap(), 2);
        assert!(ell_zero(&pair, 1).unwrap() <= ell_zero_bound(&pair, 1).unwrap());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn orbit() -> impl Strategy<Value = OrbitModel> {
            let rotation = (proptest::sample::select(vec![2i128, 3, 5, 7, 11]), 1i128..6, 0i128..3, any::<bool>())
                .prop_map(|(r, q, a, neg)| {
                    let x = ExactReal::surd(0, if neg { -1 } else { 1 }, r, q).unwrap().add_int(a).unwrap();
                    if x.is_positive() { x } else { x.add_int(1 - x.floor()).unwrap() }
                });
            (
                proptest::collection::vec(rotation, 0..=3),
                -2i64..4,
                proptest::collection::vec(proptest::sample::select(vec![-3i64, -1, 1, 3, 5]), 0..=2),
                1u64..4,
            )
                .prop_map(|(rotations, half, odd, c)| OrbitModel::new("p", rotations, 2 * half, odd, c).unwrap())
        }

        proptest! {
            #[test]
            fn parity_law(o in orbit(), k in 1i64..5000) {
                let shift = (o.cz_index(k).unwrap() - o.cz_index(1).unwrap()).rem_euclid(2);
                prop_assert_eq!(shift == 0, o.is_good(k).unwrap());
            }

            #[test]
            fn index_near_mean(o in orbit(), k in 1i64..5000) {
                let gap = RadicalSum::from_integer(o.cz_index(k).unwrap() as i128).sub(&o.mean_index(k));
                let e = RadicalSum::from_integer(o.elliptic_rank() as i128);
                if o.elliptic_rank() == 0 {
                    prop_assert!(gap.is_zero());
                } else {
                    prop_assert!(gap < e && gap > e.neg());
                }
            }

            #[test]
            fn quasi_additive(o in orbit(), j in 1i64..3000, l in 1i64..3000) {
                let gap = o.cz_index(j + l).unwrap() - o.cz_index(j).unwrap() - o.cz_index(l).unwrap();
                let e = o.elliptic_rank() as i64;
                prop_assert!(gap.abs() <= e && (gap - e).rem_euclid(2) == 0);
            }

            #[test]
            fn negative_iterates_flip(o in orbit(), k in 1i64..3000) {
                prop_assert_eq!(o.cz_index(-k).unwrap(), -o.cz_index(k).unwrap());
            }

            #[test]
            fn contractible_iterates_exhaustive(o in orbit(), max_index in -20i64..200) {
                prop_assume!(o.mean_index_simple().is_positive());
                let table = o.contractible_iterates(max_index, 0).unwrap();
                let c = o.torsion_order as i64;
                // Past this many iterates, mu(k) > k mu_hat - e exceeds max_index with room to spare.
                let mean = o.mean_index_simple().to_f64();
                prop_assume!(mean > 0.05);
                let span = ((max_index.max(0) + o.elliptic_rank() as i64 + 10) as f64 / (mean * c as f64)).ceil() as i64 + 10;
                let brute: Vec<(i64, i64)> = (1..=span)
                    .map(|j| j * c)
                    .map(|k| (k, o.cz_index(k).unwrap()))
                    .filter(|&(_, mu)| mu <= max_index)
                    .collect();
                let got: Vec<(i64, i64)> = table.entries.iter().map(|x| (x.k, x.mu)).collect();
                prop_assert_eq!(got, brute);
            }

            #[test]
            fn index_run_agrees(o in orbit()) {
                let run = o.index_run(2000).unwrap();
                for (j, mu) in run.iter().enumerate() {
                    prop_assert_eq!(*mu, o.cz_index(j as i64 + 1).unwrap());
                }
            }
        }
    }
}
