//! Floating-point comparison policy shared by the whole crate.
//!
//! Every numeric comparison goes through these helpers: relative tolerance
//! `1e-9`, scaled by the larger magnitude, with an absolute floor of `1e-12`
//! so comparisons near zero stay meaningful. Threshold tests use
//! [`definitely_greater`], which demands clearing the whole tolerance band —
//! a distance exactly at a threshold never counts as exceeding it.

/// Relative comparison tolerance.
pub const REL_TOL: f64 = 1e-9;

/// Absolute floor under the relative tolerance.
pub const ABS_FLOOR: f64 = 1e-12;

/// Width of the tolerance band around `a` and `b`.
pub fn band(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    (REL_TOL * scale).max(ABS_FLOOR)
}

/// `a` and `b` agree within the band.
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= band(a, b)
}

/// `a` exceeds `b` by more than the band (tolerance-adjusted strict `>`).
pub fn definitely_greater(a: f64, b: f64) -> bool {
    a > b + band(a, b)
}

/// `a ≤ b`, allowing the band.
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b + band(a, b)
}

/// `a ≥ b`, allowing the band.
pub fn approx_ge(a: f64, b: f64) -> bool {
    a + band(a, b) >= b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_scales_with_magnitude_and_floors_near_zero() {
        assert_eq!(band(0.0, 0.0), ABS_FLOOR);
        assert!(band(1e6, 0.0) >= 1e6 * REL_TOL);
    }

    #[test]
    fn equality_at_threshold_is_not_definitely_greater() {
        assert!(!definitely_greater(1.0, 1.0));
        assert!(!definitely_greater(1.0 + 1e-13, 1.0));
        assert!(definitely_greater(1.0 + 1e-6, 1.0));
    }

    #[test]
    fn approx_eq_tolerates_ninth_digit() {
        assert!(approx_eq(1.0, 1.0 + 5e-10));
        assert!(!approx_eq(1.0, 1.0 + 5e-9));
    }
}
