//! Exact rational thresholds.
//!
//! Configured thresholds such as 0.35 or 0.12 are parsed from their shortest
//! decimal representation into an exact fraction, so comparisons against
//! count ratios (7/20, 12/100) land on the intended side of the boundary.

use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    /// Exact value of the shortest decimal that round-trips to `value`.
    /// Values must be finite and non-negative; at most 18 fractional digits
    /// are kept.
    pub fn from_f64(value: f64) -> Self {
        assert!(value.is_finite() && value >= 0.0, "threshold must be finite and >= 0");
        let text = format!("{value}");
        let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
        let frac_part = &frac_part[..frac_part.len().min(18)];
        let den = 10u64.pow(frac_part.len() as u32);
        let int: u64 = int_part.parse().expect("integer part");
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().expect("fractional part")
        };
        Self::new(int * den + frac, den)
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Compares `count / total` against this ratio.
    pub fn cmp_fraction(&self, count: u64, total: u64) -> Ordering {
        ((count as u128) * (self.den as u128)).cmp(&((self.num as u128) * (total as u128)))
    }

    /// `count / total > self`.
    pub fn is_exceeded_by(&self, count: u64, total: u64) -> bool {
        self.cmp_fraction(count, total) == Ordering::Greater
    }

    /// Compares `shared / sqrt(a * b)` against this ratio (score first) without square roots:
    /// both sides are non-negative, so squaring preserves order.
    pub fn cmp_cosine(&self, shared: u64, a: u64, b: u64) -> Ordering {
        let lhs = (shared as u128).pow(2) * (self.den as u128).pow(2);
        let rhs = (self.num as u128).pow(2) * (a as u128) * (b as u128);
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        ((self.num as u128) * (other.den as u128)).cmp(&((other.num as u128) * (self.den as u128)))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}
