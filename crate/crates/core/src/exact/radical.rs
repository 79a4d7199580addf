use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::arith::{scaled_term_floor, square_free_split};
use super::{ExactError, ExactReal};

/// An element of a multi-quadratic field: `sum_s q_s * sqrt(s)` over distinct
/// square-free radicands `s` (with `s = 1` the rational part).
///
/// Square roots of distinct square-free integers are linearly independent over
/// the rationals, so the sparse coefficient map is a canonical form and zero
/// testing is structural. Signs are decided by refining rational enclosures,
/// which terminates because a nonzero value is bounded away from zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RadicalSum {
    terms: BTreeMap<u64, BigRational>,
}

impl RadicalSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_integer(n: i128) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_rational(q: BigRational) -> Self {
        let mut out = Self::zero();
        out.add_term(1, q);
        out
    }

    /// `q * sqrt(root)` for any positive `root`.
    pub fn term(q: BigRational, root: u64) -> Self {
        let (f, s) = square_free_split(root);
        let mut out = Self::zero();
        out.add_term(s, q * BigRational::from_integer(BigInt::from(f)));
        out
    }

    fn add_term(&mut self, root: u64, q: BigRational) {
        if q.is_zero() {
            return;
        }
        let slot = self.terms.entry(root).or_insert_with(BigRational::zero);
        *slot += q;
        if slot.is_zero() {
            self.terms.remove(&root);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.terms.keys().all(|&s| s == 1)
    }

    pub fn rational_value(&self) -> Option<BigRational> {
        if self.is_rational() {
            Some(self.terms.get(&1).cloned().unwrap_or_else(BigRational::zero))
        } else {
            None
        }
    }

    /// Iterates `(radicand, coefficient)` pairs in increasing radicand order.
    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.terms.iter().map(|(s, q)| (*s, q))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (s, q) in &other.terms {
            out.add_term(*s, q.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        RadicalSum {
            terms: self.terms.iter().map(|(s, q)| (*s, -q.clone())).collect(),
        }
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        RadicalSum {
            terms: self.terms.iter().map(|(s, c)| (*s, c * q)).collect(),
        }
    }

    pub fn mul_int(&self, k: i128) -> Self {
        self.scale(&BigRational::from_integer(BigInt::from(k)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (s, p) in &self.terms {
            for (t, q) in &other.terms {
                let g = s.gcd(t);
                // sqrt(s) sqrt(t) = g sqrt(s t / g^2), and s t / g^2 is square-free again
                let root = (s / g) * (t / g);
                out.add_term(root, p * q * BigRational::from_integer(BigInt::from(g)));
            }
        }
        out
    }

    /// Multiplicative inverse by successive conjugation over one prime at a time.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let prime = self
            .terms
            .keys()
            .find(|&&s| s > 1)
            .map(|&s| smallest_prime_factor(s));
        let Some(p) = prime else {
            let q = self.terms.get(&1)?;
            return Some(Self::from_rational(q.recip()));
        };
        // x = A + B sqrt(p), with A and B free of sqrt(p)
        let mut a = Self::zero();
        let mut b = Self::zero();
        for (s, q) in &self.terms {
            if s % p == 0 {
                b.add_term(s / p, q.clone());
            } else {
                a.add_term(*s, q.clone());
            }
        }
        let sqrt_p = Self::term(BigRational::one(), p);
        let conj = a.sub(&b.mul(&sqrt_p));
        let norm = a
            .mul(&a)
            .sub(&b.mul(&b).mul_int(p as i128));
        let norm_inv = norm.inv()?;
        Some(conj.mul(&norm_inv))
    }

    pub fn div(&self, other: &Self) -> Result<Self, ExactError> {
        let inv = other.inv().ok_or(ExactError::DivisionByZero)?;
        Ok(self.mul(&inv))
    }

    /// Lower enclosure at scale `2^shift`: the value times `2^shift` lies in `[lo, lo + terms)`.
    fn enclose(&self, shift: u32) -> BigInt {
        self.terms
            .iter()
            .map(|(s, q)| scaled_term_floor(q.numer(), q.denom(), *s, shift))
            .sum()
    }

    pub fn signum(&self) -> i32 {
        if self.terms.is_empty() {
            return 0;
        }
        if self.terms.len() == 1 {
            let q = self.terms.values().next().unwrap();
            return if q.is_positive() { 1 } else { -1 };
        }
        let width = BigInt::from(self.terms.len());
        let mut shift = 64u32;
        loop {
            let lo = self.enclose(shift);
            if lo.is_positive() {
                return 1;
            }
            if !(&lo + &width).is_positive() {
                return -1;
            }
            shift *= 2;
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    /// Exact floor.
    pub fn floor(&self) -> BigInt {
        if let Some(q) = self.rational_value() {
            return q.floor().to_integer();
        }
        let width = BigInt::from(self.terms.len());
        let mut shift = 64u32;
        loop {
            let lo = self.enclose(shift);
            let hi: BigInt = &lo + &width - BigInt::one();
            let unit = BigInt::one() << shift;
            let a = lo.div_floor(&unit);
            let b = hi.div_floor(&unit);
            if a == b {
                return a;
            }
            shift *= 2;
        }
    }

    /// Converts back to a single-radical value when possible.
    pub fn to_exact_real(&self) -> Option<ExactReal> {
        let irrational: Vec<_> = self.terms.iter().filter(|(s, _)| **s != 1).collect();
        if irrational.len() > 1 {
            return None;
        }
        let rat = self.terms.get(&1).cloned().unwrap_or_else(BigRational::zero);
        let (root, coef) = match irrational.first() {
            Some((s, q)) => (**s, (*q).clone()),
            None => (1, BigRational::zero()),
        };
        let den = rat.denom().lcm(coef.denom());
        let a = (rat.numer() * &den / rat.denom()).to_i128()?;
        let b = (coef.numer() * &den / coef.denom()).to_i128()?;
        let den = den.to_i128()?;
        if root == 1 {
            ExactReal::rational(a, den).ok()
        } else {
            ExactReal::surd(a, b, root as i128, den).ok()
        }
    }

    /// Approximate value for display only.
    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(s, q)| q.to_f64().unwrap_or(f64::NAN) * (*s as f64).sqrt())
            .sum()
    }
}

fn smallest_prime_factor(n: u64) -> u64 {
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            return p;
        }
        p += 1;
    }
    n
}

impl From<&ExactReal> for RadicalSum {
    fn from(x: &ExactReal) -> Self {
        let (a, b, root) = x.to_big_parts();
        let mut out = RadicalSum::zero();
        out.add_term(1, a);
        out.add_term(root, b);
        out
    }
}

impl From<ExactReal> for RadicalSum {
    fn from(x: ExactReal) -> Self {
        RadicalSum::from(&x)
    }
}

impl PartialOrd for RadicalSum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RadicalSum {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sub(other).signum().cmp(&0)
    }
}

impl fmt::Display for RadicalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, q)) in self.terms.iter().enumerate() {
            let neg = q.is_negative();
            if i > 0 {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            } else if neg {
                write!(f, "-")?;
            }
            let q = q.abs();
            match (*s, q.is_integer()) {
                (1, _) => write!(f, "{q}")?,
                (s, true) if q.is_one() => write!(f, "\u{221a}{s}")?,
                (s, true) => write!(f, "{q}\u{221a}{s}")?,
                (s, false) => write!(f, "{}\u{221a}{s}/{}", q.numer(), q.denom())?,
            }
        }
        Ok(())
    }
}

impl FromStr for RadicalSum {
    type Err = ExactError;

    /// Parses `+`/`-` separated terms of the forms `p`, `p/q`, `sqrtN`,
    /// `sqrt(N)`, `c*sqrtN`, optionally followed by `/q`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ExactError::Parse(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad());
        }
        let mut out = RadicalSum::zero();
        let mut rest = compact.as_str();
        while !rest.is_empty() {
            let (negative, body) = match rest.as_bytes()[0] {
                b'+' => (false, &rest[1..]),
                b'-' => (true, &rest[1..]),
                _ => (false, rest),
            };
            let end = body[1.min(body.len())..]
                .find(['+', '-'])
                .map(|i| i + 1)
                .unwrap_or(body.len());
            let (token, tail) = body.split_at(end);
            let mut term = parse_term(token).ok_or_else(bad)?;
            if negative {
                term = term.neg();
            }
            out = out.add(&term);
            rest = tail;
        }
        Ok(out)
    }
}

fn parse_term(token: &str) -> Option<RadicalSum> {
    let parse_rat = |t: &str| -> Option<BigRational> {
        match t.split_once('/') {
            Some((p, q)) => {
                let q: BigInt = q.parse().ok()?;
                if q.is_zero() {
                    return None;
                }
                Some(BigRational::new(p.parse().ok()?, q))
            }
            None => Some(BigRational::from_integer(t.parse().ok()?)),
        }
    };
    let Some(pos) = token.find("sqrt") else {
        return parse_rat(token).map(RadicalSum::from_rational);
    };
    let coef = match &token[..pos] {
        "" => BigRational::one(),
        c => parse_rat(c.strip_suffix('*')?)?,
    };
    let tail = &token[pos + 4..];
    let (radicand, divisor) = match tail.split_once('/') {
        Some((r, q)) => (r, q.parse::<BigInt>().ok()?),
        None => (tail, BigInt::one()),
    };
    if divisor.is_zero() {
        return None;
    }
    let radicand = radicand.trim_start_matches('(').trim_end_matches(')');
    let root: u64 = radicand.parse().ok()?;
    if root == 0 {
        return Some(RadicalSum::zero());
    }
    Some(RadicalSum::term(coef / BigRational::from_integer(divisor), root))
}
