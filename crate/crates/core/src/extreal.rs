//! Compensated double-double reals and exact mod-1 phase reduction.
//!
//! Phases of the form `m * w mod 1` with `m` up to ~10^12 lose all of their
//! fractional digits in plain `f64`. Frequencies are therefore carried as an
//! unevaluated sum `hi + lo` and integer multipliers are split so that every
//! partial product is exact.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Largest multiplier accepted by [`phase_frac`].
pub const MAX_MULTIPLIER: u64 = 1 << 62;

/// A real number represented as `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtReal {
    hi: f64,
    lo: f64,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal { hi: 0.0, lo: 0.0 };

    /// Builds a normalized pair from two arbitrary doubles.
    pub fn new(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        ExtReal { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        ExtReal { hi: x, lo: 0.0 }
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn to_f64(&self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(&self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Square root of a non-negative integer, correct to double-double precision.
    pub fn sqrt_u64(n: u64) -> Self {
        let x = TwoFloat::from(n as f64);
        debug_assert!(n < (1 << 53));
        Self::from_two(x.sqrt())
    }

    pub fn sqrt(self) -> Self {
        Self::from_two(self.two().sqrt())
    }

    /// `self^e` for positive `self`, evaluated as `exp(e * ln(self))`.
    pub fn powf(self, e: ExtReal) -> Self {
        Self::from_two(dd_exp(e.two() * dd_ln(self.two())))
    }

    pub fn exp(self) -> Self {
        Self::from_two(dd_exp(self.two()))
    }

    pub fn ln(self) -> Self {
        Self::from_two(dd_ln(self.two()))
    }

    pub fn recip(self) -> Self {
        Self::from_two(self.two().recip())
    }

    pub fn mul_int(self, m: i64) -> Self {
        // exact for |m| < 2^53
        Self::from_two(self.two() * TwoFloat::from(m as f64))
    }

    pub fn half(self) -> Self {
        ExtReal {
            hi: self.hi * 0.5,
            lo: self.lo * 0.5,
        }
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(self) -> Self {
        let t = self.hi - self.hi.trunc();
        let mut r = TwoFloat::from(t) + self.lo;
        if r.hi() < 0.0 || (r.hi() == 0.0 && r.lo() < 0.0) {
            r += 1.0;
        }
        if r.hi() >= 1.0 {
            r -= 1.0;
        }
        Self::from_two(r)
    }

    /// Parses a decimal literal (`-12.5e-3`, `1.4142135623730950488016887`)
    /// exactly and rounds it to double-double.
    pub fn parse_decimal(s: &str) -> Option<Self> {
        let r = parse_rational(s.trim())?;
        Some(Self::from_rational(&r))
    }

    pub fn from_rational(r: &BigRational) -> Self {
        let hi = r.to_f64().unwrap_or(f64::NAN);
        if !hi.is_finite() {
            return ExtReal { hi, lo: 0.0 };
        }
        let rem = r - BigRational::from_float(hi).expect("finite");
        let lo = rem.to_f64().unwrap_or(0.0);
        Self::new(hi, lo)
    }

    fn two(self) -> TwoFloat {
        TwoFloat::new_add(self.hi, self.lo)
    }

    fn from_two(t: TwoFloat) -> Self {
        Self::new(t.hi(), t.lo())
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        ExtReal::from_two(self.two() + rhs.two())
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;
    fn sub(self, rhs: ExtReal) -> ExtReal {
        ExtReal::from_two(self.two() - rhs.two())
    }
}

impl Mul for ExtReal {
    type Output = ExtReal;
    fn mul(self, rhs: ExtReal) -> ExtReal {
        ExtReal::from_two(self.two() * rhs.two())
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        ExtReal {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}{:+e}", self.hi, self.lo)
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn ln2() -> TwoFloat {
    TwoFloat::new_add(std::f64::consts::LN_2, 2.3190468138462996e-17)
}

/// Double-double `exp`: reduce by multiples of ln 2, scale by 2^-9, run a
/// Taylor series and square back.
fn dd_exp(x: TwoFloat) -> TwoFloat {
    if x.hi() > 709.0 {
        return TwoFloat::from(f64::INFINITY);
    }
    if x.hi() < -745.0 {
        return TwoFloat::from(0.0);
    }
    let ln2 = ln2();
    let k = (x.hi() / ln2.hi()).round();
    let r = (x - ln2 * k) * (1.0 / 512.0);
    let mut term = TwoFloat::from(1.0);
    let mut sum = TwoFloat::from(1.0);
    for n in 1..=16 {
        term = term * r / n as f64;
        sum += term;
    }
    for _ in 0..9 {
        sum = sum * sum;
    }
    let scale = 2f64.powi(k as i32);
    TwoFloat::new_add(sum.hi() * scale, sum.lo() * scale)
}

/// Double-double `ln` by Newton iteration on `exp`.
fn dd_ln(x: TwoFloat) -> TwoFloat {
    if !(x.hi() > 0.0) {
        return TwoFloat::from(f64::NAN);
    }
    let mut y = TwoFloat::from(x.hi().ln());
    for _ in 0..2 {
        y = y + x * dd_exp(-y) - 1.0;
    }
    y
}

/// Drops the integer part of `x`; exact for every finite double.
#[inline]
fn trunc_frac(x: f64) -> f64 {
    if x.abs() >= 9007199254740992.0 {
        0.0
    } else {
        x - x.trunc()
    }
}

/// `frac(m * (w.hi + w.lo))` in `[0, 1)`.
///
/// `m` is split as `m1 * 2^31 + m0` so each of the eight partial products with
/// `hi` and `lo` is exact after `two_prod`; only the final summation of eight
/// numbers in `(-1, 1)` rounds.
pub fn phase_frac(m: u64, w: ExtReal) -> Result<f64> {
    if m > MAX_MULTIPLIER {
        return Err(Error::Overflow(m));
    }
    Ok(phase_frac_unchecked(m, w))
}

#[inline]
pub(crate) fn phase_frac_unchecked(m: u64, w: ExtReal) -> f64 {
    let m1 = ((m >> 31) << 31) as f64;
    let m0 = (m & ((1 << 31) - 1)) as f64;
    let mut hi = 0.0;
    let mut lo = 0.0;
    for (a, b) in [(m1, w.hi), (m0, w.hi), (m1, w.lo), (m0, w.lo)] {
        let (p, e) = two_prod(a, b);
        for part in [trunc_frac(p), trunc_frac(e)] {
            let (s, err) = two_sum(hi, part);
            hi = s;
            lo += err;
        }
    }
    let s = trunc_frac(hi) + lo;
    let mut f = s - s.floor();
    if f >= 1.0 {
        f = 0.0;
    }
    f
}

/// Walks the phases `frac(t w)` for `t = 0, 1, 2, ...` by repeated
/// double-double addition; the error after `t` steps is about `t * 2^-104`.
#[derive(Clone, Copy, Debug)]
pub struct PhaseWalk {
    step_hi: f64,
    step_lo: f64,
    hi: f64,
    lo: f64,
}

impl PhaseWalk {
    pub fn new(w: ExtReal) -> Self {
        let w = w.frac();
        PhaseWalk {
            step_hi: w.hi,
            step_lo: w.lo,
            hi: 0.0,
            lo: 0.0,
        }
    }

    /// Current phase in `[0, 1)`.
    #[inline]
    pub fn phase(&self) -> f64 {
        let t = self.hi + self.lo;
        if t < 0.0 {
            t + 1.0
        } else if t >= 1.0 {
            t - 1.0
        } else {
            t
        }
    }

    #[inline]
    pub fn advance(&mut self) {
        let (s, e) = two_sum(self.hi, self.step_hi);
        let e = e + self.lo + self.step_lo;
        let (mut h, mut l) = two_sum(s, e);
        if h >= 1.0 {
            let (a, b) = two_sum(h - 1.0, l);
            h = a;
            l = b;
        }
        self.hi = h;
        self.lo = l;
    }
}

/// Signed multiplier variant of [`phase_frac`].
pub fn phase_frac_signed(m: i64, w: ExtReal) -> Result<f64> {
    let f = phase_frac(m.unsigned_abs(), w)?;
    Ok(if m < 0 && f != 0.0 { 1.0 - f } else { f })
}

#[inline]
pub(crate) fn phase_frac_signed_unchecked(m: i64, w: ExtReal) -> f64 {
    let f = phase_frac_unchecked(m.unsigned_abs(), w);
    if m < 0 && f != 0.0 {
        1.0 - f
    } else {
        f
    }
}

/// `e[t] = exp(2 pi i t)` for a phase already reduced to `[0, 1)`.
#[inline]
pub fn expi(t: f64) -> Complex64 {
    let u = if t > 0.5 { t - 1.0 } else { t };
    let (s, c) = (std::f64::consts::TAU * u).sin_cos();
    Complex64::new(c, s)
}

/// Distance from a phase in `[0, 1)` to the nearest integer.
#[inline]
pub fn torus_norm(t: f64) -> f64 {
    t.min(1.0 - t).abs()
}

/// Exact rational value of a decimal literal or `a/b` fraction.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((a, b)) = s.split_once('/') {
        let den = parse_rational(b.trim())?;
        return (!den.is_zero()).then(|| parse_rational(a.trim()).map(|num| num / den))?;
    }
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(p) => (&body[..p], body[p + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(p) => (&mantissa[..p], &mantissa[p + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut r = BigRational::from_integer(num);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    if neg && !r.is_zero() {
        r = -r;
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    /// frac(m * sqrt(n)) from a 256-bit integer square root.
    fn bigfloat_phase(m: u64, n: u64) -> f64 {
        let bits = 256u32;
        let scaled = BigUint::from(n) << (2 * bits) as usize;
        let root = scaled.sqrt();
        let prod = root * BigUint::from(m);
        let one = BigUint::from(1u32) << bits as usize;
        let frac = prod % &one;
        let num = frac >> (bits - 64) as usize;
        num.to_u64().unwrap() as f64 / 2f64.powi(64)
    }

    #[test]
    fn even_multiple_of_half() {
        assert_eq!(phase_frac(4, ExtReal::from(0.5)).unwrap(), 0.0);
    }

    #[test]
    fn third_times_three() {
        let third = ExtReal::parse_decimal("0.333333333333333333333333333333333333").unwrap();
        let f = phase_frac(3, third).unwrap();
        assert!(torus_norm(f) < 1e-12, "{f}");
    }

    #[test]
    fn large_multiple_of_sqrt2_matches_bigfloat() {
        let w = ExtReal::sqrt_u64(2);
        for m in [64_000_000u64, 1 << 40, 987_654_321_987, (1 << 62) - 1] {
            let got = phase_frac(m, w).unwrap();
            let want = bigfloat_phase(m, 2);
            let d = torus_norm((got - want).rem_euclid(1.0));
            let tol = m as f64 * 2f64.powi(-100) + 2f64.powi(-50);
            assert!(d <= tol.max(1e-15), "m={m} got={got} want={want}");
        }
        let got = phase_frac(64_000_000, w).unwrap();
        assert!(torus_norm((got - bigfloat_phase(64_000_000, 2)).rem_euclid(1.0)) < 1e-9);
    }

    #[test]
    fn sqrt_roots_agree_with_oracle() {
        for n in [3u64, 5, 7, 8000] {
            let w = ExtReal::sqrt_u64(n);
            let got = phase_frac(49_000_000, w).unwrap();
            let want = bigfloat_phase(49_000_000, n);
            assert!(torus_norm((got - want).rem_euclid(1.0)) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn overflow_rejected() {
        assert!(matches!(
            phase_frac(MAX_MULTIPLIER + 1, ExtReal::from(0.1)),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn signed_phase_is_negation() {
        let w = ExtReal::sqrt_u64(2);
        let a = phase_frac_signed(12345, w).unwrap();
        let b = phase_frac_signed(-12345, w).unwrap();
        assert!(torus_norm((a + b).rem_euclid(1.0)) < 1e-15);
    }

    #[test]
    fn frac_of_negative() {
        let x = ExtReal::new(-2.25, 1e-20);
        let f = x.frac();
        assert!((f.to_f64() - 0.75).abs() < 1e-15);
        assert!(f.lo() > 0.0 || f.hi() > 0.75);
    }

    #[test]
    fn parse_roundtrips_simple_values() {
        assert_eq!(ExtReal::parse_decimal("0.5").unwrap(), ExtReal::from(0.5));
        assert_eq!(ExtReal::parse_decimal("-3").unwrap(), ExtReal::from(-3.0));
        assert_eq!(ExtReal::parse_decimal("2.5e2").unwrap(), ExtReal::from(250.0));
        let tenth = ExtReal::parse_decimal("0.1").unwrap();
        assert_eq!(tenth.hi(), 0.1);
        assert!(tenth.lo() != 0.0);
        assert!(ExtReal::parse_decimal("abc").is_none());
        assert!(ExtReal::parse_decimal("1.2.3").is_none());
        assert!(ExtReal::parse_decimal("").is_none());
    }

    #[test]
    fn powf_matches_sqrt() {
        let half = ExtReal::from(0.5);
        for n in [2u64, 3, 17, 1000, 7999] {
            let a = ExtReal::from(n as f64).powf(half);
            let b = ExtReal::sqrt_u64(n);
            let d = (a - b).to_f64().abs();
            assert!(d <= 1e-29 * b.to_f64(), "n={n} d={d:e}");
        }
    }

    #[test]
    fn phase_walk_matches_direct() {
        let w = ExtReal::sqrt_u64(2).mul_int(37);
        let mut walk = PhaseWalk::new(w);
        for t in 0..5000u64 {
            let d = (walk.phase() - phase_frac(t, w).unwrap()).abs();
            assert!(d.min(1.0 - d) < 1e-13, "t={t} d={d:e}");
            walk.advance();
        }
    }

    #[test]
    fn expi_quarter_turn() {
        let z = expi(0.25);
        assert!(z.re.abs() < 1e-16 && (z.im - 1.0).abs() < 1e-16);
        assert!((expi(0.5).re + 1.0).abs() < 1e-16);
    }
}
