//! Integer kernels shared by the exact number types.

use num_bigint::{BigInt, Sign};
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, Zero};

/// `floor(a / b)` for `b > 0`.
pub(crate) fn floor_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    Integer::div_floor(&a, &b)
}

/// Splits `n` as `f^2 * s` with `s` square-free. Returns `(f, s)`.
pub fn square_free_split(n: u64) -> (u64, u64) {
    debug_assert!(n > 0);
    let mut rest = n;
    let mut f = 1u64;
    let mut s = 1u64;
    let mut p = 2u64;
    while p.saturating_mul(p) <= rest {
        let mut e = 0u32;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        f *= p.pow(e / 2);
        if e % 2 == 1 {
            s *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    s *= rest;
    (f, s)
}

pub fn is_square_free(n: u64) -> bool {
    n > 0 && square_free_split(n).0 == 1
}

/// `floor(b * sqrt(r))` for square-free `r >= 2` and `b != 0`, or `None` on overflow.
///
/// `b^2 r` is never a perfect square, so the negative branch is `-(isqrt + 1)`.
pub(crate) fn floor_b_sqrt_r(b: i128, r: i128) -> Option<i128> {
    let sq = b.checked_mul(b)?.checked_mul(r)?;
    let root = (sq as u128).sqrt() as i128;
    Some(if b > 0 { root } else { -(root + 1) })
}

pub(crate) fn floor_b_sqrt_r_big(b: &BigInt, r: u64) -> BigInt {
    let sq = b * b * BigInt::from(r);
    let root = sq.sqrt();
    if b.sign() == Sign::Minus {
        -(root + BigInt::one())
    } else {
        root
    }
}

/// Exact `floor((a + b*sqrt(r)) / den)` for square-free `r >= 2`, `b != 0`, `den > 0`.
pub(crate) fn floor_surd(a: i128, b: i128, r: i128, den: i128) -> i128 {
    if let Some(f) = floor_surd_float(a, b, r, den) {
        return f;
    }
    floor_surd_exact(a, b, r, den)
}

/// Float estimate, returned only when it is at least `2^-40` (relative) away from an integer.
/// The accumulated rounding error is a few ulps of `|a| + |b| sqrt(r)`, far inside that margin.
fn floor_surd_float(a: i128, b: i128, r: i128, den: i128) -> Option<i128> {
    let root = (r as f64).sqrt();
    let d = den as f64;
    let x = (a as f64 + b as f64 * root) / d;
    let scale = ((a as f64).abs() + (b as f64).abs() * root) / d;
    let margin = (scale + 1.0) * f64::powi(2.0, -40);
    let f = x.floor();
    if f.abs() < f64::powi(2.0, 52) && x - f > margin && f + 1.0 - x > margin {
        Some(f as i128)
    } else {
        None
    }
}

pub(crate) fn floor_surd_exact(a: i128, b: i128, r: i128, den: i128) -> i128 {
    if let Some(f) = floor_b_sqrt_r(b, r) {
        if let Some(num) = a.checked_add(f) {
            return floor_div(num, den);
        }
    }
    let f = floor_b_sqrt_r_big(&BigInt::from(b), r as u64);
    let q = (BigInt::from(a) + f).div_floor(&BigInt::from(den));
    i128::try_from(q).expect("floor of surd exceeds i128")
}

/// Floor of `num * 2^shift * sqrt(root) / den` for a term of a radical sum, `den > 0`.
pub(crate) fn scaled_term_floor(num: &BigInt, den: &BigInt, root: u64, shift: u32) -> BigInt {
    let scaled = num << shift;
    if root == 1 {
        return scaled.div_floor(den);
    }
    if scaled.is_zero() {
        return BigInt::zero();
    }
    let f = floor_b_sqrt_r_big(&scaled, root);
    debug_assert!(!den.is_negative());
    f.div_floor(den)
}

pub(crate) fn gcd_i128(a: i128, b: i128) -> i128 {
    a.gcd(&b)
}
