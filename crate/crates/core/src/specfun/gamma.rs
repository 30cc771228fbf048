//! Gamma-function helpers. Everything goes through `lgamma_r` so that
//! arguments in the hundreds never overflow.

/// True when `z` is a pole of the gamma function.
#[inline]
pub fn is_gamma_pole(z: f64) -> bool {
    z <= 0.0 && z == z.floor()
}

/// `(ln|Γ(z)|, sign Γ(z))`. At a pole this returns `(+inf, 1.0)`.
#[inline]
pub fn ln_gamma(z: f64) -> (f64, f64) {
    if is_gamma_pole(z) {
        return (f64::INFINITY, 1.0);
    }
    let (lg, sign) = libm::lgamma_r(z);
    (lg, if sign < 0 { -1.0 } else { 1.0 })
}

/// `1/Γ(z)`, with the convention that it vanishes at the poles of Γ.
///
/// ```
/// use fracop::specfun::reciprocal_gamma;
/// assert_eq!(reciprocal_gamma(1.0), 1.0);
/// assert_eq!(reciprocal_gamma(-3.0), 0.0);
/// ```
pub fn reciprocal_gamma(z: f64) -> f64 {
    if is_gamma_pole(z) || z.is_nan() {
        return if z.is_nan() { f64::NAN } else { 0.0 };
    }
    if z == f64::INFINITY {
        return 0.0;
    }
    // exact for small positive integers, where lgamma loses the last ulp
    if is_small_positive_integer(z) {
        return 1.0 / factorial(z as u32 - 1);
    }
    let (lg, sign) = ln_gamma(z);
    sign * (-lg).exp()
}

/// `Γ(a)/Γ(b)` evaluated in log space, with `1/Γ(pole) = 0`.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    if is_gamma_pole(b) {
        return 0.0;
    }
    if is_gamma_pole(a) {
        return f64::INFINITY;
    }
    if is_small_positive_integer(a) && is_small_positive_integer(b) {
        return factorial(a as u32 - 1) / factorial(b as u32 - 1);
    }
    let (la, sa) = ln_gamma(a);
    let (lb, sb) = ln_gamma(b);
    sa * sb * (la - lb).exp()
}

fn is_small_positive_integer(z: f64) -> bool {
    (1.0..=21.0).contains(&z) && z == z.floor()
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poles_give_zero() {
        for z in [0.0, -1.0, -2.0, -17.0] {
            assert_eq!(reciprocal_gamma(z), 0.0);
        }
    }

    #[test]
    fn integer_and_half_integer_values() {
        assert_eq!(reciprocal_gamma(1.0), 1.0);
        assert_eq!(reciprocal_gamma(5.0), 1.0 / 24.0);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((reciprocal_gamma(0.5) - 1.0 / sqrt_pi).abs() < 1e-15);
        assert!((reciprocal_gamma(-0.5) + 0.5 / sqrt_pi).abs() < 1e-15);
    }

    #[test]
    fn large_arguments_do_not_overflow() {
        assert_eq!(reciprocal_gamma(400.0), 0.0);
        let r = reciprocal_gamma(171.5);
        assert!(r > 0.0 && r.is_finite());
        assert!(reciprocal_gamma(-170.5).is_finite());
    }

    #[test]
    fn ratio_matches_direct_quotient() {
        let g = gamma_ratio(2.0, 1.5);
        assert!((g - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_ratio(3.0, -1.0), 0.0);
    }
}
