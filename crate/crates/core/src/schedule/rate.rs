use std::fmt;

use super::PowerLawFamily;

/// Convergence-rate class of the power-law family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateClass {
    /// `O(T^{-r/2})` when `r/2 + s < 1`.
    PolyHalfR {
        exponent: f64,
    },
    /// `O(log T / T^{1-s})` when `r/2 + s = 1`.
    LogOverPower {
        exponent: f64,
    },
    /// `O(1 / T^{1-s})` when `r/2 + s > 1`.
    Poly {
        exponent: f64,
    },
    NotConvergent,
}

impl RateClass {
    pub fn tag(&self) -> &'static str {
        match self {
            RateClass::PolyHalfR { .. } => "poly(-r/2)",
            RateClass::LogOverPower { .. } => "log_over_T^{1-s}",
            RateClass::Poly { .. } => "poly(-(1-s))",
            RateClass::NotConvergent => "not_convergent",
        }
    }

    /// The polynomial decay exponent; 0 for [`RateClass::NotConvergent`].
    pub fn exponent(&self) -> f64 {
        match *self {
            RateClass::PolyHalfR { exponent }
            | RateClass::LogOverPower { exponent }
            | RateClass::Poly { exponent } => exponent,
            RateClass::NotConvergent => 0.0,
        }
    }
}

impl fmt::Display for RateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateClass::NotConvergent => f.write_str(self.tag()),
            _ => write!(f, "{} (exponent {})", self.tag(), self.exponent()),
        }
    }
}

// Ties within a few ulps count as equal so that grids built from decimal
// fractions land on the boundary cases they denote.
const TIE: f64 = 8.0 * f64::EPSILON;

fn cmp_tol(a: f64, b: f64) -> std::cmp::Ordering {
    if (a - b).abs() <= TIE * a.abs().max(b.abs()).max(1.0) {
        std::cmp::Ordering::Equal
    } else if a < b {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

pub fn classify_rate(fam: &PowerLawFamily) -> RateClass {
    classify_exponents(fam.r, fam.s)
}

/// The case split on `r/2 + s` for `theta_t = 1 - a/t^r`, `alpha_t = eta/t^s`.
/// Convergence requires `0 < r <= 2s < 2`.
pub fn classify_exponents(r: f64, s: f64) -> RateClass {
    use std::cmp::Ordering::*;
    if !(r > 0.0) || cmp_tol(r, 2.0 * s) == Greater || cmp_tol(2.0 * s, 2.0) != Less {
        return RateClass::NotConvergent;
    }
    match cmp_tol(r / 2.0 + s, 1.0) {
        Less => RateClass::PolyHalfR { exponent: -r / 2.0 },
        Equal => RateClass::LogOverPower {
            exponent: -(1.0 - s),
        },
        Greater => RateClass::Poly {
            exponent: -(1.0 - s),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_cases() {
        assert_eq!(
            classify_exponents(1.0, 0.5),
            RateClass::LogOverPower { exponent: -0.5 }
        );
        assert_eq!(
            classify_exponents(0.5, 0.5),
            RateClass::PolyHalfR { exponent: -0.25 }
        );
        assert_eq!(classify_exponents(0.0, 0.5), RateClass::NotConvergent);
        assert_eq!(
            classify_exponents(1.5, 0.8),
            RateClass::Poly {
                exponent: -(1.0 - 0.8)
            }
        );
    }

    #[test]
    fn boundary_on_decimal_fractions() {
        // 0.8/2 + 0.6 lands on 1 only up to rounding
        assert!(matches!(
            classify_exponents(0.8, 0.6),
            RateClass::LogOverPower { .. }
        ));
        assert!(matches!(
            classify_exponents(0.6, 0.3),
            RateClass::PolyHalfR { .. }
        ));
        // r > 2s breaks condition 3
        assert_eq!(classify_exponents(0.9, 0.4), RateClass::NotConvergent);
    }
}
