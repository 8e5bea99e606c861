//! Small numeric helpers shared across modules.

use std::fmt;

/// Neumaier's variant of compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Multiplies `x` by `2^k` exactly (barring underflow into subnormals).
pub fn ldexp(mut x: f64, mut k: i64) -> f64 {
    const STEP: i64 = 1000;
    while k > STEP {
        x *= pow2(STEP);
        k -= STEP;
        if x.is_infinite() {
            return x;
        }
    }
    while k < -STEP {
        x *= pow2(-STEP);
        k += STEP;
        if x == 0.0 {
            return x;
        }
    }
    x * pow2(k)
}

fn pow2(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

const RENORM_HI: f64 = 1.157_920_892_373_162e77; // 2^256
const RENORM_LO: f64 = 8.636_168_555_094_445e-78; // 2^-256
const RENORM_SHIFT: i64 = 256;

/// A non-negative real carried as `mantissa * 2^exponent` with an unbounded
/// (64-bit) exponent. All rescaling is by exact powers of two, so products
/// and ratios keep full double precision far beyond the `f64` range.
#[derive(Clone, Copy, PartialEq)]
pub struct Scaled {
    mantissa: f64,
    exponent: i64,
}

impl Scaled {
    pub const ONE: Scaled = Scaled {
        mantissa: 1.0,
        exponent: 0,
    };

    pub const ZERO: Scaled = Scaled {
        mantissa: 0.0,
        exponent: 0,
    };

    /// `value` must be finite and non-negative.
    pub fn from_f64(value: f64) -> Self {
        debug_assert!(value.is_finite() && value >= 0.0);
        Scaled {
            mantissa: value,
            exponent: 0,
        }
        .normalized()
    }

    /// Builds `exp(ln_value)` without overflowing.
    pub fn from_ln(ln_value: f64) -> Self {
        if ln_value == f64::NEG_INFINITY {
            return Scaled::ZERO;
        }
        let exponent = (ln_value / std::f64::consts::LN_2).floor();
        let rest = ln_value - exponent * std::f64::consts::LN_2;
        Scaled {
            mantissa: rest.exp(),
            exponent: exponent as i64,
        }
        .normalized()
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    fn normalized(mut self) -> Self {
        if self.mantissa == 0.0 {
            self.exponent = 0;
            return self;
        }
        while self.mantissa > RENORM_HI {
            self.mantissa *= RENORM_LO;
            self.exponent += RENORM_SHIFT;
        }
        while self.mantissa < RENORM_LO {
            self.mantissa *= RENORM_HI;
            self.exponent -= RENORM_SHIFT;
        }
        self
    }

    pub fn mul_f64(self, factor: f64) -> Self {
        Scaled {
            mantissa: self.mantissa * factor,
            exponent: self.exponent,
        }
        .normalized()
    }

    /// Exact multiplication by `2^k`.
    pub fn mul_pow2(self, k: i64) -> Self {
        if self.is_zero() {
            return self;
        }
        Scaled {
            mantissa: self.mantissa,
            exponent: self.exponent + k,
        }
    }

    pub fn div_f64(self, divisor: f64) -> Self {
        Scaled {
            mantissa: self.mantissa / divisor,
            exponent: self.exponent,
        }
        .normalized()
    }

    pub fn add(self, other: Scaled) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= other.exponent {
            (self, other)
        } else {
            (other, self)
        };
        let aligned = ldexp(small.mantissa, small.exponent - big.exponent);
        Scaled {
            mantissa: big.mantissa + aligned,
            exponent: big.exponent,
        }
        .normalized()
    }

    /// `self / other` as a plain double (saturating to 0 or infinity).
    pub fn ratio(self, other: Scaled) -> f64 {
        ldexp(
            self.mantissa / other.mantissa,
            self.exponent - other.exponent,
        )
    }

    /// The value expressed relative to `2^shift`, i.e. `self / 2^shift`.
    pub fn relative_to(self, shift: i64) -> f64 {
        ldexp(self.mantissa, self.exponent - shift)
    }

    pub fn ln(self) -> f64 {
        self.mantissa.ln() + self.exponent as f64 * std::f64::consts::LN_2
    }

    /// Plain double; infinity when out of range.
    pub fn to_f64(self) -> f64 {
        ldexp(self.mantissa, self.exponent)
    }
}

impl fmt::Debug for Scaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mantissa, self.exponent)
    }
}
