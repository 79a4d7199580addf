//! Positive equivariant symplectic homology of prequantization bundles,
//! read off from the Betti numbers of the base.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::ExactReal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomologyError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("operation requires a positive monotone base")]
    SignMismatch,
    #[error("operation requires a lacunary base")]
    NotLacunary,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Positive,
    Negative,
}

/// Base data of a prequantization `M^{2n+1} -> B^{2n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct PrequantSpec {
    pub n: usize,
    #[serde(rename = "c_B")]
    pub c_b: u64,
    pub sign: Monotonicity,
    pub betti: Vec<u64>,
    pub lacunary_base: bool,
}

#[derive(Deserialize)]
struct RawSpec {
    n: usize,
    #[serde(rename = "c_B")]
    c_b: u64,
    sign: Monotonicity,
    betti: Vec<u64>,
    lacunary_base: bool,
}

impl TryFrom<RawSpec> for PrequantSpec {
    type Error = HomologyError;

    fn try_from(raw: RawSpec) -> Result<Self, Self::Error> {
        PrequantSpec::new(raw.n, raw.c_b, raw.sign, raw.betti, raw.lacunary_base)
    }
}

impl PrequantSpec {
    pub fn new(
        n: usize,
        c_b: u64,
        sign: Monotonicity,
        betti: Vec<u64>,
        lacunary_base: bool,
    ) -> Result<Self, HomologyError> {
        let bad = |s: String| Err(HomologyError::InvalidSpec(s));
        if c_b == 0 {
            return bad("c_B must be positive".into());
        }
        if betti.len() != 2 * n + 1 {
            return bad(format!("expected {} Betti numbers, got {}", 2 * n + 1, betti.len()));
        }
        if betti[0] == 0 {
            return bad("betti[0] must be at least 1".into());
        }
        if let Some(k) = (0..=2 * n).find(|&k| betti[k] != betti[2 * n - k]) {
            return bad(format!("Poincare duality fails in degree {k}"));
        }
        if lacunary_base {
            if let Some(k) = (1..=2 * n).step_by(2).find(|&k| betti[k] != 0) {
                return bad(format!("lacunary base has nonzero odd Betti number in degree {k}"));
            }
        }
        Ok(PrequantSpec { n, c_b, sign, betti, lacunary_base })
    }

    /// Positive monotone, lacunary spec.
    pub fn lacunary(n: usize, c_b: u64, betti: Vec<u64>) -> Result<Self, HomologyError> {
        Self::new(n, c_b, Monotonicity::Positive, betti, true)
    }

    /// Round sphere `S^{2n+1}` over `CP^n`.
    pub fn sphere(n: usize) -> Self {
        let betti = (0..=2 * n).map(|k| u64::from(k % 2 == 0)).collect();
        Self::lacunary(n, n as u64 + 1, betti).expect("CP^n profile is valid")
    }

    pub fn r_b(&self) -> u64 {
        self.betti.iter().sum()
    }

    /// `dim H_k(B)`, zero outside `[0, 2n]`.
    pub fn betti_b(&self, k: i64) -> u64 {
        if k < 0 || k > 2 * self.n as i64 {
            0
        } else {
            self.betti[k as usize]
        }
    }

    /// `dim H_n(B)`.
    pub fn middle_betti(&self) -> u64 {
        self.betti[self.n]
    }

    fn two_c(&self) -> i64 {
        2 * self.c_b as i64
    }

    /// Dimension of the degree `k` positive equivariant symplectic homology of `M`.
    pub fn betti_m(&self, k: i64) -> u64 {
        let n = self.n as i64;
        let step = self.two_c();
        // Shift m contributes betti_B(deg(m)); only deg in [0, 2n] can be nonzero.
        let deg = |m: i64| match self.sign {
            Monotonicity::Positive => k - m * step + n,
            Monotonicity::Negative => k + m * step - n,
        };
        let (lo, hi) = match self.sign {
            Monotonicity::Positive => (Integer::div_ceil(&(k - n), &step), Integer::div_floor(&(k + n), &step)),
            Monotonicity::Negative => (Integer::div_ceil(&(n - k), &step), Integer::div_floor(&(3 * n - k), &step)),
        };
        (lo.max(1)..=hi).map(|m| self.betti_b(deg(m))).sum()
    }

    fn require_positive(&self) -> Result<(), HomologyError> {
        match self.sign {
            Monotonicity::Positive => Ok(()),
            Monotonicity::Negative => Err(HomologyError::SignMismatch),
        }
    }

    fn require_lacunary(&self) -> Result<(), HomologyError> {
        self.require_positive()?;
        if self.lacunary_base {
            Ok(())
        } else {
            Err(HomologyError::NotLacunary)
        }
    }

    /// Lowest degree with nonzero homology, `2 c_B - n`.
    pub fn k_min(&self) -> Result<i64, HomologyError> {
        self.require_positive()?;
        let k = self.two_c() - self.n as i64;
        let scanned = (k - self.two_c() - 1..=k).find(|&j| self.betti_m(j) != 0);
        if scanned != Some(k) {
            return Err(HomologyError::InternalInconsistency(format!(
                "lowest nonzero degree is {scanned:?}, expected {k}"
            )));
        }
        Ok(k)
    }

    /// `b_0 = betti_M(0)`, the correction appearing when `c_B <= n/2`.
    pub fn b0(&self) -> u64 {
        self.betti_m(0)
    }

    /// Mean Euler characteristic `(-1)^n r_B / (2 c_B)`.
    pub fn mean_euler(&self) -> Result<ExactReal, HomologyError> {
        self.require_lacunary()?;
        let sign: i128 = if self.n % 2 == 0 { 1 } else { -1 };
        let closed = ExactReal::rational(sign * self.r_b() as i128, self.two_c() as i128)
            .map_err(|e| HomologyError::InternalInconsistency(e.to_string()))?;
        // Average of (-1)^k betti_M(k) over one period in the periodic range k > n.
        let start = self.n as i64 + 1;
        let signed: i128 = (start..start + self.two_c())
            .map(|k| if k % 2 == 0 { 1 } else { -1 } * self.betti_m(k) as i128)
            .sum();
        let averaged = ExactReal::rational(signed, self.two_c() as i128)
            .map_err(|e| HomologyError::InternalInconsistency(e.to_string()))?;
        if averaged != closed {
            return Err(HomologyError::InternalInconsistency(format!(
                "period average {averaged} differs from {closed}"
            )));
        }
        Ok(closed)
    }

    pub fn truncated_betti_sum(&self, lo: i64, hi: i64) -> u64 {
        (lo..=hi).map(|k| self.betti_m(k)).sum()
    }

    fn require_s(&self, s: u64) -> Result<(), HomologyError> {
        self.require_lacunary()?;
        if s == 0 || 2 * s * self.c_b <= 2 * self.n as u64 {
            return Err(HomologyError::Precondition(format!(
                "need s >= 1 and 2 s c_B > 2n, got s = {s}"
            )));
        }
        Ok(())
    }

    /// Closed form for twice the truncated sum from `k_min` to `2 s c_B`.
    pub fn lemma_sum_identity(&self, s: u64) -> Result<TruncatedSum, HomologyError> {
        self.require_s(s)?;
        let d = 2 * s as i64 * self.c_b as i64;
        let lhs = 2 * self.truncated_betti_sum(self.k_min()?, d) as i64;
        let n = self.n as i64;
        let tail: u64 = (s + 1..=2 * s - 1)
            .map(|m| self.betti_b(n + 2 * (s as i64 - m as i64) * self.c_b as i64))
            .sum();
        let rhs = (2 * s as i64 - 1) * self.r_b() as i64 + self.middle_betti() as i64 + 2 * tail as i64;
        Ok(TruncatedSum { lhs, rhs, holds: lhs == rhs })
    }

    /// Sums up to the pivot degree `d = 2 s c_B` against their predicted values.
    pub fn classic_sums(&self, s: u64) -> Result<ClassicSums, HomologyError> {
        self.require_s(s)?;
        let d = 2 * s as i64 * self.c_b as i64;
        let k_min = self.k_min()?;
        let sum_to_d = self.truncated_betti_sum(k_min, d) as i64;
        let sum_to_d_plus_1 = self.truncated_betti_sum(k_min, d + 1) as i64;
        let b0 = self.b0() as i64;
        let r_b = self.r_b() as i64;
        let base = s as i64 * r_b + b0;
        let (predicted_odd, predicted_even, holds) = if self.n % 2 == 1 {
            let p = base - r_b / 2;
            (Some(p), None, r_b % 2 == 0 && p == sum_to_d)
        } else {
            let gap = r_b - self.middle_betti() as i64;
            let p = base - gap / 2;
            (None, Some(p), gap % 2 == 0 && p == sum_to_d_plus_1)
        };
        Ok(ClassicSums { d, sum_to_d, sum_to_d_plus_1, b0, predicted_odd, predicted_even, holds })
    }

    /// Eventual maximum of `sum_{i=0}^{2n} betti_M(k + i)`; no dataset can
    /// have more simple contractible orbits.
    pub fn finiteness_bound(&self) -> Result<u64, HomologyError> {
        self.require_positive()?;
        let n = self.n as i64;
        let window = |k: i64| -> u64 { (0..=2 * n).map(|i| self.betti_m(k + i)).sum() };
        Ok((n + 1..=n + self.two_c()).map(window).max().unwrap_or(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedSum {
    pub lhs: i64,
    pub rhs: i64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicSums {
    pub d: i64,
    pub sum_to_d: i64,
    pub sum_to_d_plus_1: i64,
    pub b0: i64,
    /// `s r_B + b_0 - r_B / 2`, compared with `sum_to_d` when `n` is odd.
    pub predicted_odd: Option<i64>,
    /// `s r_B + b_0 - (r_B - b_n) / 2`, compared with `sum_to_d_plus_1` when `n` is even.
    pub predicted_even: Option<i64>,
    pub holds: bool,
}
