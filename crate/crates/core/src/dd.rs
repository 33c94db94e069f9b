//! Double-double ("compensated") floating point: an unevaluated sum of two
//! f64 values carrying ~106 mantissa bits.
//!
//! Threshold constants in this crate have 11-17 significant digits and some
//! comparisons (e.g. the Proposition 5.1 cutover, where two terms agree to 18
//! digits) flip under plain f64 rounding, so every bound formula is evaluated
//! in this type.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Two-float value `hi + lo` with `|lo| <= ulp(hi)/2` (normalized).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln 2 to double-double precision.
    pub const LN2: Dd = Dd {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };
    /// pi to double-double precision.
    pub const PI: Dd = Dd {
        hi: 3.141_592_653_589_793,
        lo: 1.224_646_799_147_353_2e-16,
    };
    /// Euler-Mascheroni constant to double-double precision.
    pub const EULER: Dd = Dd {
        hi: 0.577_215_664_901_532_9,
        lo: -4.942_915_152_430_645e-18,
    };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn from_u64(v: u64) -> Dd {
        let hi = v as f64;
        let lo = (v as i128 - hi as i128) as f64;
        Dd::new(hi, lo)
    }

    pub fn from_i64(v: i64) -> Dd {
        let hi = v as f64;
        let lo = (v as i128 - hi as i128) as f64;
        Dd::new(hi, lo)
    }

    /// Exact for |v| < 2^106; correctly rounded to ~2^-106 relative beyond.
    pub fn from_u128(v: u128) -> Dd {
        let hi = v as f64;
        debug_assert!(hi < i128::MAX as f64);
        let lo = (v as i128).wrapping_sub(hi as i128) as f64;
        Dd::new(hi, lo)
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Exact multiplication by a power of two.
    #[inline]
    pub fn mul_pwr2(self, p: f64) -> Dd {
        Dd {
            hi: self.hi * p,
            lo: self.lo * p,
        }
    }

    #[inline]
    pub fn sqr(self) -> Dd {
        let (p, mut e) = two_prod(self.hi, self.hi);
        e += 2.0 * self.hi * self.lo;
        e += self.lo * self.lo;
        let (s, t) = quick_two_sum(p, e);
        Dd { hi: s, lo: t }
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    pub fn powi(self, n: i32) -> Dd {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base.sqr();
            e >>= 1;
        }
        acc
    }

    pub fn floor(self) -> Dd {
        let f = self.hi.floor();
        if f == self.hi {
            Dd::new(f, self.lo.floor())
        } else {
            Dd { hi: f, lo: 0.0 }
        }
    }

    pub fn ceil(self) -> Dd {
        let c = self.hi.ceil();
        if c == self.hi {
            Dd::new(c, self.lo.ceil())
        } else {
            Dd { hi: c, lo: 0.0 }
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.is_zero() {
            return Dd::ZERO;
        }
        debug_assert!(self.hi > 0.0, "sqrt of negative double-double");
        // One dd Newton step from the f64 seed reaches full precision.
        let y = Dd::from(self.hi.sqrt());
        (y + self / y).mul_pwr2(0.5)
    }

    /// k-th root for k >= 1 of a positive value.
    pub fn nroot(self, k: u32) -> Dd {
        match k {
            0 => panic!("0th root"),
            1 => self,
            2 => self.sqrt(),
            _ => (self.ln() / Dd::from_u64(u64::from(k))).exp(),
        }
    }

    pub fn exp(self) -> Dd {
        if self.hi <= -709.0 {
            return Dd::ZERO;
        }
        if self.hi >= 709.0 {
            return Dd {
                hi: f64::INFINITY,
                lo: 0.0,
            };
        }
        if self.is_zero() {
            return Dd::ONE;
        }
        // exp(x) = 2^m * (exp(r/512))^512 with |r| <= ln2/2
        let m = (self.hi / Dd::LN2.hi).round();
        let r = (self - Dd::LN2 * m).mul_pwr2(1.0 / 512.0);
        // Taylor for exp(r) - 1; r is tiny so a handful of terms suffice.
        let mut term = r;
        let mut sum = r;
        let mut n = 1u64;
        loop {
            n += 1;
            term = term * r / Dd::from_u64(n);
            sum = sum + term;
            if term.abs().hi < 1e-40 * sum.abs().hi.max(1e-300) || n > 24 {
                break;
            }
        }
        // Undo the 2^9 scaling: (1+s)^2 - 1 = 2s + s^2, nine times.
        for _ in 0..9 {
            sum = sum.mul_pwr2(2.0) + sum.sqr();
        }
        let result = sum + Dd::ONE;
        result.ldexp(m as i32)
    }

    /// Exact scaling by 2^e.
    pub fn ldexp(self, e: i32) -> Dd {
        let p = 2f64.powi(e);
        Dd {
            hi: self.hi * p,
            lo: self.lo * p,
        }
    }

    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0, "ln of non-positive double-double");
        if self == Dd::ONE {
            return Dd::ZERO;
        }
        // Newton on exp(y) = x from the f64 seed; two steps saturate dd precision.
        let mut y = Dd::from(self.hi.ln());
        y = y + self * (-y).exp() - Dd::ONE;
        y = y + self * (-y).exp() - Dd::ONE;
        y
    }

    /// Parse a decimal literal exactly (sign, digits, optional fraction and
    /// exponent; underscores ignored). Needed because constants like
    /// 0.70881678090424862707121 exceed f64 precision.
    pub fn parse(s: &str) -> Result<Dd> {
        let cleaned: String = s.chars().filter(|&c| c != '_').collect();
        let t = cleaned.trim();
        let bad = || Error::Format(format!("invalid decimal literal: {s:?}"));
        if t.is_empty() {
            return Err(bad());
        }
        let (neg, rest) = match t.as_bytes()[0] {
            b'+' => (false, &t[1..]),
            b'-' => (true, &t[1..]),
            _ => (false, t),
        };
        let (mant_str, exp10) = match rest.find(['e', 'E']) {
            Some(i) => {
                let e: i32 = rest[i + 1..].parse().map_err(|_| bad())?;
                (&rest[..i], e)
            }
            None => (rest, 0),
        };
        let mut mant: u128 = 0;
        let mut frac_digits: i32 = 0;
        let mut seen_point = false;
        let mut seen_digit = false;
        let mut dropped: i32 = 0;
        for c in mant_str.chars() {
            match c {
                '.' if !seen_point => seen_point = true,
                '0'..='9' => {
                    seen_digit = true;
                    let d = (c as u8 - b'0') as u128;
                    if mant <= (u128::MAX - 9) / 10 && mant < 10u128.pow(37) {
                        mant = mant * 10 + d;
                        if seen_point {
                            frac_digits += 1;
                        }
                    } else if !seen_point {
                        dropped += 1; // integer digit beyond 38 digits
                    }
                }
                _ => return Err(bad()),
            }
        }
        if !seen_digit {
            return Err(bad());
        }
        let mut v = Dd::from_u128(mant);
        let net = exp10 - frac_digits + dropped;
        v = v * pow10(net);
        Ok(if neg { -v } else { v })
    }
}

/// 10^e as a double-double (exact for |e| <= 38 up to dd precision).
fn pow10(e: i32) -> Dd {
    if e == 0 {
        return Dd::ONE;
    }
    let mag = e.unsigned_abs();
    let mut p = Dd::ONE;
    let mut left = mag;
    while left > 0 {
        let chunk = left.min(38);
        p = p * Dd::from_u128(10u128.pow(chunk));
        left -= chunk;
    }
    if e < 0 {
        p.recip()
    } else {
        p
    }
}

impl From<f64> for Dd {
    #[inline]
    fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (s1, s2) = quick_two_sum(s1, s2 + t2);
        Dd { hi: s1, lo: s2 }
    }
}

impl Add<f64> for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: f64) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs);
        let (s1, s2) = quick_two_sum(s1, s2 + self.lo);
        Dd { hi: s1, lo: s2 }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Sub<f64> for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: f64) -> Dd {
        self + (-rhs)
    }
}

impl Sub<Dd> for f64 {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        -rhs + self
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p, mut e) = two_prod(self.hi, rhs.hi);
        e += self.hi * rhs.lo + self.lo * rhs.hi;
        let (s, t) = quick_two_sum(p, e);
        Dd { hi: s, lo: t }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: f64) -> Dd {
        let (p, mut e) = two_prod(self.hi, rhs);
        e += self.lo * rhs;
        let (s, t) = quick_two_sum(p, e);
        Dd { hi: s, lo: t }
    }
}

impl Mul<Dd> for f64 {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        rhs * self
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * q1;
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * q2;
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e + q3)
    }
}

impl Div<f64> for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, rhs: f64) -> Dd {
        self / Dd::from(rhs)
    }
}

impl Div<Dd> for f64 {
    type Output = Dd;
    #[inline]
    fn div(self, rhs: Dd) -> Dd {
        Dd::from(self) / rhs
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Diagnostic form; not a round-trip representation.
        write!(f, "{:.17e}{:+.17e}", self.hi, self.lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: Dd, b: Dd, rel: f64) {
        let diff = (a - b).abs().to_f64();
        let scale = b.abs().to_f64().max(1e-300);
        assert!(
            diff / scale <= rel,
            "a={a} b={b} rel err {}",
            diff / scale
        );
    }

    #[test]
    fn constants_match_recomputation() {
        assert_close(Dd::from_u64(2).ln(), Dd::LN2, 1e-30);
        // pi via arctan-free check: sin is unavailable, so verify against a
        // 33-digit decimal literal instead.
        let pi = Dd::parse("3.14159265358979323846264338327950288").unwrap();
        assert_close(pi, Dd::PI, 1e-31);
        let euler = Dd::parse("0.57721566490153286060651209008240243").unwrap();
        assert_close(euler, Dd::EULER, 1e-31);
    }

    #[test]
    fn parse_splits_long_decimals() {
        // Reference hi/lo splits computed with mpmath at 60 digits.
        let c0 = Dd::parse("0.70881678090424862707121").unwrap();
        assert_eq!(c0.hi(), 0.7088167809042486);
        assert!((c0.lo() - 2.7011962435213653e-17).abs() < 1e-32);
        let eps = Dd::parse("0.70863503301170907614119").unwrap();
        assert_eq!(eps.hi(), 0.708635033011709);
        assert!((eps.lo() - 2.8229126602765693e-17).abs() < 1e-32);
        // Integer, exponent, sign, underscore forms.
        assert_eq!(Dd::parse("38_284_442_297").unwrap().to_f64(), 38284442297.0);
        assert_eq!(Dd::parse("-2.5e3").unwrap().to_f64(), -2500.0);
        assert_eq!(Dd::parse("1e20").unwrap().to_f64(), 1e20);
        assert!(Dd::parse("").is_err());
        assert!(Dd::parse("1.2.3").is_err());
        assert!(Dd::parse("abc").is_err());
    }

    #[test]
    fn exp_and_ln_reference_values() {
        let e = Dd::ONE.exp();
        let e_ref = Dd::parse("2.71828182845904523536028747135266250").unwrap();
        assert_close(e, e_ref, 1e-30);
        let e2 = Dd::from_u64(2).exp();
        let e2_ref = Dd::parse("7.38905609893065022723042746057500781").unwrap();
        assert_close(e2, e2_ref, 1e-30);
        let l10 = Dd::from_u64(10).ln();
        let l10_ref = Dd::parse("2.30258509299404568401799145468436421").unwrap();
        assert_close(l10, l10_ref, 1e-30);
        let s2 = Dd::from_u64(2).sqrt();
        let s2_ref = Dd::parse("1.41421356237309504880168872420969808").unwrap();
        assert_close(s2, s2_ref, 1e-30);
    }

    #[test]
    fn floor_ceil_handle_integral_hi() {
        let x = Dd::new(5.0, -1e-20);
        assert_eq!(x.floor().to_f64(), 4.0);
        assert_eq!(x.ceil().to_f64(), 5.0);
        let y = Dd::new(5.0, 1e-20);
        assert_eq!(y.floor().to_f64(), 5.0);
        assert_eq!(y.ceil().to_f64(), 6.0);
        assert_eq!(Dd::from(2.5).floor().to_f64(), 2.0);
        assert_eq!(Dd::from(2.5).ceil().to_f64(), 3.0);
    }

    #[test]
    fn from_u128_is_exact_below_106_bits() {
        let v = 10u128.pow(23);
        let d = Dd::from_u128(v);
        // Reconstruct exactly through i128 arithmetic.
        let back = d.hi() as i128 + d.lo() as i128;
        assert_eq!(back, v as i128);
    }

    proptest! {
        #[test]
        fn add_sub_roundtrip(a in -1e12f64..1e12, b in -1e12f64..1e12) {
            let x = Dd::from(a) + Dd::from(b) - Dd::from(b);
            prop_assert!((x.to_f64() - a).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn mul_div_roundtrip(a in 1e-6f64..1e12, b in 1e-6f64..1e12) {
            let x = Dd::from(a) * Dd::from(b) / Dd::from(b);
            let rel = ((x - Dd::from(a)).abs() / Dd::from(a)).to_f64();
            prop_assert!(rel <= 1e-28);
        }

        #[test]
        fn ln_exp_roundtrip(x in -40.0f64..40.0) {
            let y = Dd::from(x).exp().ln();
            prop_assert!((y.to_f64() - x).abs() <= 1e-27 * x.abs().max(1.0));
        }

        #[test]
        fn exp_matches_f64(x in -30.0f64..30.0) {
            let y = Dd::from(x).exp().to_f64();
            let rel = (y - x.exp()).abs() / x.exp();
            prop_assert!(rel <= 1e-14);
        }

        #[test]
        fn sqrt_squares_back(x in 1e-6f64..1e18) {
            let s = Dd::from(x).sqrt();
            let rel = ((s.sqr() - Dd::from(x)).abs() / Dd::from(x)).to_f64();
            prop_assert!(rel <= 1e-28);
        }

        #[test]
        fn ordering_matches_f64(a in -1e9f64..1e9, b in -1e9f64..1e9) {
            let (da, db) = (Dd::from(a), Dd::from(b));
            prop_assert_eq!(da.partial_cmp(&db), a.partial_cmp(&b));
        }
    }
}
