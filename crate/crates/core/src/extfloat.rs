//! Positive binary floating point with a wide mantissa and an unbounded exponent.
//!
//! Values are `mantissa · 2^exponent` with the mantissa normalised to
//! [`PRECISION`] bits. Enough for products and repeated squarings of tiny
//! probabilities that underflow `f64`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

pub const PRECISION: u64 = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtFloat {
    mantissa: BigUint,
    exponent: i128,
}

impl ExtFloat {
    pub fn zero() -> Self {
        ExtFloat {
            mantissa: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_parts(BigUint::one(), 0)
    }

    fn from_parts(mantissa: BigUint, exponent: i128) -> Self {
        let mut v = ExtFloat { mantissa, exponent };
        v.normalise();
        v
    }

    fn normalise(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let bits = self.mantissa.bits();
        if bits > PRECISION {
            let shift = bits - PRECISION;
            let half = BigUint::one() << (shift - 1);
            let rounded = (&self.mantissa + half) >> shift;
            self.exponent += shift as i128;
            self.mantissa = rounded;
            if self.mantissa.bits() > PRECISION {
                self.mantissa >>= 1u32;
                self.exponent += 1;
            }
        } else if bits < PRECISION {
            let shift = PRECISION - bits;
            self.mantissa <<= shift;
            self.exponent -= shift as i128;
        }
    }

    pub fn from_u64(v: u64) -> Self {
        Self::from_parts(BigUint::from(v), 0)
    }

    /// Exact conversion of a finite non-negative `f64`.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() || v < 0.0 {
            return None;
        }
        if v == 0.0 {
            return Some(Self::zero());
        }
        let bits = v.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i128;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Some(Self::from_parts(BigUint::from(mant), exp))
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn exponent(&self) -> i128 {
        self.exponent
    }

    pub fn mul(&self, other: &ExtFloat) -> ExtFloat {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        Self::from_parts(&self.mantissa * &other.mantissa, self.exponent + other.exponent)
    }

    /// `1 / self`, or `None` for zero.
    pub fn recip(&self) -> Option<ExtFloat> {
        if self.is_zero() {
            return None;
        }
        let num = BigUint::one() << (2 * PRECISION + 2);
        let q = num / &self.mantissa;
        Some(Self::from_parts(q, -(2 * PRECISION as i128 + 2) - self.exponent))
    }

    pub fn powi(&self, mut n: u64) -> ExtFloat {
        let mut base = self.clone();
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `self^(2^k)` by `k` squarings.
    pub fn pow_pow2(&self, k: u32) -> ExtFloat {
        let mut v = self.clone();
        for _ in 0..k {
            v = v.mul(&v);
        }
        v
    }

    /// log₂ of the value; `-inf` for zero.
    pub fn log2(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.mantissa.bits();
        let top = (&self.mantissa >> (bits - 64)).to_u64().unwrap_or(u64::MAX);
        (top as f64).log2() + (bits as i128 - 64 + self.exponent) as f64
    }

    pub fn log10(&self) -> f64 {
        self.log2() * std::f64::consts::LOG10_2
    }

    /// Nearest `f64`; zero or infinity outside its range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mantissa.bits();
        let top = (&self.mantissa >> (bits - 64)).to_u64().unwrap_or(u64::MAX);
        let e = bits as i128 - 64 + self.exponent;
        if e > 1100 {
            return f64::INFINITY;
        }
        if e < -1200 {
            return 0.0;
        }
        let mut v = top as f64;
        let mut e = e as i32;
        // Split the scaling so intermediate values stay finite.
        while e > 0 {
            let step = e.min(1000);
            v *= 2f64.powi(step);
            e -= step;
        }
        while e < 0 {
            let step = (-e).min(1000);
            v /= 2f64.powi(step);
            e += step;
        }
        v
    }

    /// Scientific notation with `digits` significant digits: `(d.ddd, exp10)`.
    pub fn to_scientific(&self, digits: usize) -> (String, i64) {
        if self.is_zero() {
            return ("0".into(), 0);
        }
        let digits = digits.max(1);
        let guess = self.log10().floor() as i64;
        // value · 10^(digits-1-guess) rounded to an integer, retried if the guess is off by one.
        for exp10 in [guess, guess + 1, guess - 1] {
            let scale = digits as i64 - 1 - exp10;
            let int = self.scaled_integer(scale);
            let s = int.to_string();
            if s.len() == digits {
                let (head, tail) = s.split_at(1);
                let text = if tail.is_empty() {
                    head.to_string()
                } else {
                    format!("{head}.{tail}")
                };
                return (text, exp10);
            }
        }
        let e = self.log10();
        (format!("{:.*}", digits - 1, 10f64.powf(e - e.floor())), e.floor() as i64)
    }

    /// `round(self · 10^scale)`.
    fn scaled_integer(&self, scale: i64) -> BigUint {
        let ten = BigUint::from(10u32);
        let mut num = self.mantissa.clone();
        let mut den = BigUint::one();
        if scale >= 0 {
            num *= ten.pow(scale as u32);
        } else {
            den *= ten.pow((-scale) as u32);
        }
        if self.exponent >= 0 {
            num <<= self.exponent as u64;
        } else {
            den <<= (-self.exponent) as u64;
        }
        (num * 2u32 + &den) / (den * 2u32)
    }
}

impl PartialOrd for ExtFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self
                .exponent
                .cmp(&other.exponent)
                .then_with(|| self.mantissa.cmp(&other.mantissa)),
        })
    }
}

impl fmt::Display for ExtFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, e) = self.to_scientific(f.precision().unwrap_or(15));
        write!(f, "{m}e{e}")
    }
}
