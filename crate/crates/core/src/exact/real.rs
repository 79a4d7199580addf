use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::arith::{floor_div, floor_surd, gcd_i128, is_square_free, square_free_split};
use super::{ExactError, RadicalSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Rat { num: i128, den: i128 },
    Surd { a: i128, b: i128, root: i128, den: i128 },
}

/// A rational number or a real quadratic irrational `(a + b*sqrt(root)) / den`.
///
/// Values are always kept in canonical form: `den > 0`, the integer
/// coefficients share no common factor, `root` is square-free and at least 2,
/// and `b != 0`. Equal numbers therefore compare equal field by field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExactReal(Repr);

impl ExactReal {
    pub const ZERO: ExactReal = ExactReal(Repr::Rat { num: 0, den: 1 });
    pub const ONE: ExactReal = ExactReal(Repr::Rat { num: 1, den: 1 });

    pub fn integer(n: i128) -> Self {
        ExactReal(Repr::Rat { num: n, den: 1 })
    }

    pub fn rational(num: i128, den: i128) -> Result<Self, ExactError> {
        if den == 0 {
            return Err(ExactError::ZeroDenominator);
        }
        let g = gcd_i128(num, den).max(1);
        let (mut num, mut den) = (num / g, den / g);
        if den < 0 {
            num = num.checked_neg().ok_or(ExactError::Overflow)?;
            den = den.checked_neg().ok_or(ExactError::Overflow)?;
        }
        Ok(ExactReal(Repr::Rat { num, den }))
    }

    /// Builds `(a + b*sqrt(root)) / den`, pulling square factors out of `root`.
    /// Collapses to a rational when `b == 0` or `root` is a perfect square.
    pub fn surd(a: i128, b: i128, root: i128, den: i128) -> Result<Self, ExactError> {
        if den == 0 {
            return Err(ExactError::ZeroDenominator);
        }
        if root <= 0 {
            return Err(ExactError::NonPositiveRoot(root));
        }
        let (f, s) = square_free_split(u64::try_from(root).map_err(|_| ExactError::Overflow)?);
        let b = b.checked_mul(f as i128).ok_or(ExactError::Overflow)?;
        if b == 0 || s == 1 {
            let num = a.checked_add(b).ok_or(ExactError::Overflow)?;
            return Self::rational(num, den);
        }
        let g = gcd_i128(gcd_i128(a, b), den).max(1);
        let (mut a, mut b, mut den) = (a / g, b / g, den / g);
        if den < 0 {
            a = -a;
            b = -b;
            den = -den;
        }
        Ok(ExactReal(Repr::Surd { a, b, root: s as i128, den }))
    }

    /// `sqrt(n)` for a positive integer `n`.
    pub fn sqrt(n: i128) -> Result<Self, ExactError> {
        Self::surd(0, 1, n, 1)
    }

    pub fn as_rational(&self) -> Option<(i128, i128)> {
        match self.0 {
            Repr::Rat { num, den } => Some((num, den)),
            Repr::Surd { .. } => None,
        }
    }

    /// `(a, b, root, den)` for an irrational value.
    pub fn as_surd(&self) -> Option<(i128, i128, i128, i128)> {
        match self.0 {
            Repr::Surd { a, b, root, den } => Some((a, b, root, den)),
            Repr::Rat { .. } => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.0, Repr::Rat { .. })
    }

    pub fn is_integer(&self) -> bool {
        matches!(self.0, Repr::Rat { den: 1, .. })
    }

    /// Square-free radicand, 1 for rationals.
    pub fn root(&self) -> i128 {
        match self.0 {
            Repr::Rat { .. } => 1,
            Repr::Surd { root, .. } => root,
        }
    }

    pub fn signum(&self) -> i32 {
        match self.0 {
            Repr::Rat { num, .. } => num.signum() as i32,
            Repr::Surd { a, b, root, .. } => surd_numerator_sign(a, b, root),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn neg(&self) -> Self {
        match self.0 {
            Repr::Rat { num, den } => ExactReal(Repr::Rat { num: -num, den }),
            Repr::Surd { a, b, root, den } => ExactReal(Repr::Surd { a: -a, b: -b, root, den }),
        }
    }

    pub fn mul_int(&self, k: i128) -> Result<Self, ExactError> {
        self.mul_rational(k, 1)
    }

    /// Multiplies by `num / den`.
    pub fn mul_rational(&self, num: i128, den: i128) -> Result<Self, ExactError> {
        let m = |x: i128| x.checked_mul(num).ok_or(ExactError::Overflow);
        match self.0 {
            Repr::Rat { num: p, den: q } => {
                Self::rational(m(p)?, q.checked_mul(den).ok_or(ExactError::Overflow)?)
            }
            Repr::Surd { a, b, root, den: q } => Self::surd(
                m(a)?,
                m(b)?,
                root,
                q.checked_mul(den).ok_or(ExactError::Overflow)?,
            ),
        }
    }

    pub fn add_int(&self, k: i128) -> Result<Self, ExactError> {
        self.add(&ExactReal::integer(k))
    }

    /// Sum of two values lying in a common quadratic field.
    pub fn add(&self, other: &Self) -> Result<Self, ExactError> {
        let (a1, b1, r1, d1) = self.parts();
        let (a2, b2, r2, d2) = other.parts();
        let root = match (b1 == 0, b2 == 0) {
            (true, _) => r2,
            (_, true) => r1,
            _ if r1 == r2 => r1,
            _ => return Err(ExactError::NotQuadratic),
        };
        let ov = || ExactError::Overflow;
        let a = a1
            .checked_mul(d2)
            .and_then(|x| a2.checked_mul(d1).and_then(|y| x.checked_add(y)))
            .ok_or_else(ov)?;
        let b = b1
            .checked_mul(d2)
            .and_then(|x| b2.checked_mul(d1).and_then(|y| x.checked_add(y)))
            .ok_or_else(ov)?;
        let den = d1.checked_mul(d2).ok_or_else(ov)?;
        Self::surd(a, b, root.max(1), den)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ExactError> {
        self.add(&other.neg())
    }

    /// Exact quotient, when it is again rational or a single quadratic surd.
    pub fn div(&self, other: &Self) -> Result<Self, ExactError> {
        if other.signum() == 0 {
            return Err(ExactError::DivisionByZero);
        }
        let q = RadicalSum::from(self).div(&RadicalSum::from(other))?;
        q.to_exact_real().ok_or(ExactError::NotQuadratic)
    }

    pub fn recip(&self) -> Result<Self, ExactError> {
        ExactReal::ONE.div(self)
    }

    /// `floor(k * x)`.
    pub fn floor_mul(&self, k: i128) -> i128 {
        match self.0 {
            Repr::Rat { num, den } => match num.checked_mul(k) {
                Some(nk) => floor_div(nk, den),
                None => {
                    let q = (BigInt::from(num) * BigInt::from(k)).div_floor(&BigInt::from(den));
                    i128::try_from(q).expect("floor exceeds i128")
                }
            },
            Repr::Surd { a, b, root, den } => {
                if k == 0 {
                    return 0;
                }
                match (a.checked_mul(k), b.checked_mul(k)) {
                    (Some(ka), Some(kb)) => floor_surd(ka, kb, root, den),
                    _ => {
                        let f = RadicalSum::from(self).mul_int(k).floor();
                        i128::try_from(f).expect("floor exceeds i128")
                    }
                }
            }
        }
    }

    pub fn floor(&self) -> i128 {
        self.floor_mul(1)
    }

    /// Whether `k * x` is an integer. Always false for surds.
    pub fn is_integer_multiple(&self, k: i128) -> bool {
        match self.0 {
            Repr::Rat { num, den } => match num.checked_mul(k) {
                Some(nk) => nk % den == 0,
                None => (BigInt::from(num) * BigInt::from(k)) % BigInt::from(den) == BigInt::from(0),
            },
            Repr::Surd { .. } => false,
        }
    }

    /// Distances of `k * x` to the integers below and above it.
    pub fn frac_gap(&self, k: i128) -> Result<(Self, Self), ExactError> {
        if self.is_integer_multiple(k) {
            return Err(ExactError::DegenerateIterate { k });
        }
        let kx = self.mul_int(k)?;
        let fl = kx.floor();
        let below = kx.add_int(-fl)?;
        let above = ExactReal::integer(fl + 1).sub(&kx)?;
        Ok((below, above))
    }

    /// Approximate value for display and candidate generation only.
    pub fn to_f64(&self) -> f64 {
        match self.0 {
            Repr::Rat { num, den } => num as f64 / den as f64,
            Repr::Surd { a, b, root, den } => {
                (a as f64 + b as f64 * (root as f64).sqrt()) / den as f64
            }
        }
    }

    /// `(a, b, root, den)` with `b == 0, root == 1` for rationals.
    fn parts(&self) -> (i128, i128, i128, i128) {
        match self.0 {
            Repr::Rat { num, den } => (num, 0, 1, den),
            Repr::Surd { a, b, root, den } => (a, b, root, den),
        }
    }

    pub(crate) fn to_big_parts(self) -> (BigRational, BigRational, u64) {
        let (a, b, root, den) = self.parts();
        let den = BigInt::from(den);
        (
            BigRational::new(BigInt::from(a), den.clone()),
            BigRational::new(BigInt::from(b), den),
            root as u64,
        )
    }
}

/// Sign of `a + b*sqrt(root)` with `b != 0` and `root` square-free.
fn surd_numerator_sign(a: i128, b: i128, root: i128) -> i32 {
    if a >= 0 && b >= 0 {
        return 1;
    }
    if a <= 0 && b <= 0 {
        return -1;
    }
    let cmp = match (a.checked_mul(a), b.checked_mul(b).and_then(|x| x.checked_mul(root))) {
        (Some(a2), Some(b2r)) => a2.cmp(&b2r),
        _ => {
            let (a, b) = (BigInt::from(a), BigInt::from(b));
            (&a * &a).cmp(&(&b * &b * BigInt::from(root)))
        }
    };
    // a^2 == b^2 r is impossible for irrational sqrt(r)
    match (a > 0, cmp) {
        (true, Ordering::Greater) | (false, Ordering::Less) => 1,
        _ => -1,
    }
}

impl PartialOrd for ExactReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactReal {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        RadicalSum::from(self).cmp(&RadicalSum::from(other))
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Repr::Rat { num, den: 1 } => write!(f, "{num}"),
            Repr::Rat { num, den } => write!(f, "{num}/{den}"),
            Repr::Surd { a, b, root, den } => {
                let sign = if b < 0 { '-' } else { '+' };
                write!(f, "({a}{sign}{}\u{221a}{root})/{den}", b.abs())
            }
        }
    }
}

impl FromStr for ExactReal {
    type Err = ExactError;

    /// Accepts sums of terms like `7/5`, `sqrt2`, `sqrt(3)`, `3*sqrt2/4`, `1+sqrt5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RadicalSum::from_str(s)?
            .to_exact_real()
            .ok_or(ExactError::NotQuadratic)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Wire {
    Rat { num: i64, den: i64 },
    Surd { a: i64, b: i64, root: i64, den: i64 },
}

impl Serialize for ExactReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error;
        let narrow = |x: i128| i64::try_from(x).map_err(|_| S::Error::custom("value exceeds i64"));
        let wire = match self.0 {
            Repr::Rat { num, den } => Wire::Rat { num: narrow(num)?, den: narrow(den)? },
            Repr::Surd { a, b, root, den } => Wire::Surd {
                a: narrow(a)?,
                b: narrow(b)?,
                root: narrow(root)?,
                den: narrow(den)?,
            },
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExactReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Input {
            Wire(Wire),
            Text(String),
        }
        let wire = match Input::deserialize(deserializer)? {
            Input::Wire(w) => w,
            Input::Text(t) => return t.parse().map_err(D::Error::custom),
        };
        match wire {
            Wire::Rat { num, den } => ExactReal::rational(num as i128, den as i128),
            Wire::Surd { a, b, root, den } => {
                if root < 2 || !is_square_free(root as u64) {
                    return Err(D::Error::custom(ExactError::NotSquareFree(root as i128)));
                }
                ExactReal::surd(a as i128, b as i128, root as i128, den as i128)
            }
        }
        .map_err(D::Error::custom)
    }
}
