//! Mittag-Leffler, Wright and Tricomi functions by direct series summation.
//!
//! All evaluators share the truncation rule of [`SeriesPolicy`]. Arguments
//! whose series cancel too strongly to be summed (negative arguments beyond
//! [`NEGATIVE_ARGUMENT_LIMIT`]) are refused with a domain error.

mod gamma;

use rug::Float;
use serde::Serialize;

pub use gamma::{gamma_ratio, is_gamma_pole, ln_gamma, reciprocal_gamma};

use crate::error::{Error, Result};
use crate::fracops::FractionalOrder;
use crate::series::{sum_power_series, CachedCoefficients, Coefficients, LogTerm};
pub use crate::series::{SeriesPolicy, SeriesResult};

/// Largest `|x|` accepted for negative arguments of the Mittag-Leffler and
/// Wright series.
pub const NEGATIVE_ARGUMENT_LIMIT: f64 = 50.0;

/// Parameters `(γ, ζ)` of `E_{γ,ζ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MittagLefflerParams {
    gamma: f64,
    zeta: f64,
}

impl MittagLefflerParams {
    pub fn new(gamma: f64, zeta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("{gamma} is not > 0")));
        }
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::invalid("zeta", format!("{zeta} is not > 0")));
        }
        Ok(Self { gamma, zeta })
    }

    /// The one-parameter function `E_ν = E_{ν,1}`.
    pub fn one_parameter(nu: f64) -> Result<Self> {
        Self::new(nu, 1.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }
}

/// Parameters `(γ, ζ)` of the Wright function `φ(γ, ζ; x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WrightParams {
    gamma: f64,
    zeta: f64,
}

impl WrightParams {
    pub fn new(gamma: f64, zeta: f64) -> Result<Self> {
        if !(gamma > -1.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("{gamma} is not > -1")));
        }
        if !zeta.is_finite() {
            return Err(Error::invalid("zeta", "must be finite"));
        }
        Ok(Self { gamma, zeta })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }
}

/// `1/Γ(a)` in multiprecision, zero at the poles.
pub(crate) fn mp_reciprocal_gamma(a: Float) -> Float {
    if a.is_integer() && a <= 0 {
        return Float::with_val(a.prec(), 0);
    }
    a.gamma().recip()
}

fn mp_factorial(r: usize, prec: u32) -> Float {
    Float::with_val(prec, Float::factorial(r as u32))
}

/// `ln|1/Γ(a)|` as a log term, or `None` at a pole.
fn log_reciprocal_gamma(a: f64) -> Option<LogTerm> {
    if is_gamma_pole(a) {
        return None;
    }
    let (lg, sign) = ln_gamma(a);
    // the rounding of `a` itself moves lgamma by about a*ln(a)
    let cond = lg.abs() + a.abs() * a.abs().max(1.0).ln();
    Some(LogTerm::new(-lg, sign, cond))
}

fn ln_factorial(r: usize) -> f64 {
    libm::lgamma(r as f64 + 1.0)
}

struct MittagLefflerCoeffs {
    gamma: f64,
    zeta: f64,
}

impl Coefficients for MittagLefflerCoeffs {
    fn log_coeff(&self, r: usize) -> Option<LogTerm> {
        log_reciprocal_gamma(self.gamma * r as f64 + self.zeta)
    }

    fn mp_coeff(&self, r: usize, prec: u32) -> Float {
        let a = Float::with_val(prec, self.gamma) * r as u32 + self.zeta;
        mp_reciprocal_gamma(a)
    }
}

struct WrightCoeffs {
    gamma: f64,
    zeta: f64,
}

impl Coefficients for WrightCoeffs {
    fn log_coeff(&self, r: usize) -> Option<LogTerm> {
        let lf = ln_factorial(r);
        log_reciprocal_gamma(self.gamma * r as f64 + self.zeta)
            .map(|t| LogTerm::new(t.ln_abs - lf, t.sign, t.cond + lf))
    }

    fn mp_coeff(&self, r: usize, prec: u32) -> Float {
        let a = Float::with_val(prec, self.gamma) * r as u32 + self.zeta;
        mp_reciprocal_gamma(a) / mp_factorial(r, prec)
    }
}

/// Coefficients `1/(r! Γ(1 - ν(r+1)))` of the Wright density in `-ξ`.
struct DensityCoeffs {
    nu: f64,
}

impl Coefficients for DensityCoeffs {
    fn log_coeff(&self, r: usize) -> Option<LogTerm> {
        let lf = ln_factorial(r);
        log_reciprocal_gamma(1.0 - self.nu * (r + 1) as f64)
            .map(|t| LogTerm::new(t.ln_abs - lf, t.sign, t.cond + lf))
    }

    fn mp_coeff(&self, r: usize, prec: u32) -> Float {
        let a = 1 - Float::with_val(prec, self.nu) * (r as u32 + 1);
        mp_reciprocal_gamma(a) / mp_factorial(r, prec)
    }
}

struct TricomiCoeffs;

impl Coefficients for TricomiCoeffs {
    fn log_coeff(&self, r: usize) -> Option<LogTerm> {
        let lf = ln_factorial(r);
        Some(LogTerm::new(-2.0 * lf, 1.0, 2.0 * lf))
    }

    fn mp_coeff(&self, r: usize, prec: u32) -> Float {
        let f = mp_factorial(r, prec);
        Float::with_val(prec, &f * &f).recip()
    }
}

fn check_negative_domain(x: f64) -> Result<()> {
    if x < -NEGATIVE_ARGUMENT_LIMIT {
        return Err(Error::Domain {
            value: x,
            reason: "negative argument beyond the cancellation limit |x| <= 50",
        });
    }
    Ok(())
}

/// Generalised Mittag-Leffler function `E_{γ,ζ}(x) = sum_r x^r / Γ(γr + ζ)`.
///
/// ```
/// use fracop::specfun::{mittag_leffler, MittagLefflerParams, SeriesPolicy};
/// let p = MittagLefflerParams::new(1.0, 1.0).unwrap();
/// let e = mittag_leffler(&p, 1.0, &SeriesPolicy::default()).unwrap();
/// assert!((e.value - std::f64::consts::E).abs() < 1e-15);
/// ```
pub fn mittag_leffler(p: &MittagLefflerParams, x: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
    check_negative_domain(x)?;
    let coeffs = MittagLefflerCoeffs {
        gamma: p.gamma,
        zeta: p.zeta,
    };
    sum_power_series(&coeffs, x, policy)
}

/// The `r`-th term `x^r / Γ(γr + ζ)` of the Mittag-Leffler series as summed
/// by [`mittag_leffler`].
pub fn mittag_leffler_term(p: &MittagLefflerParams, x: f64, r: usize) -> f64 {
    let c = MittagLefflerCoeffs {
        gamma: p.gamma,
        zeta: p.zeta,
    };
    match c.log_coeff(r) {
        None => 0.0,
        Some(t) if x == 0.0 => {
            if r == 0 {
                t.sign * t.ln_abs.exp()
            } else {
                0.0
            }
        }
        Some(t) => {
            let sign = if x < 0.0 && r % 2 == 1 { -t.sign } else { t.sign };
            sign * (t.ln_abs + r as f64 * x.abs().ln()).exp()
        }
    }
}

/// Wright function `φ(γ, ζ; x) = sum_r x^r / (r! Γ(γr + ζ))`.
pub fn wright(p: &WrightParams, x: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
    check_negative_domain(x)?;
    let coeffs = WrightCoeffs {
        gamma: p.gamma,
        zeta: p.zeta,
    };
    sum_power_series(&coeffs, x, policy)
}

/// Probability density of the Wright distribution,
/// `f(ξ) = φ(-ν, 1-ν; -ξ)` for `ν ∈ (0, 1)` and `ξ > 0`.
pub fn wright_density(nu: &FractionalOrder, xi: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
    WrightDensity::new(nu)?.evaluate(xi, policy)
}

/// Wright density evaluator that keeps its series coefficients between
/// calls. Quadrature rules evaluate the density at many nodes, where the
/// coefficient table (and its multiprecision counterpart) dominates the cost.
pub struct WrightDensity {
    coeffs: CachedCoefficients<DensityCoeffs>,
}

impl WrightDensity {
    pub fn new(nu: &FractionalOrder) -> Result<Self> {
        nu.require_open_unit("wright_density")?;
        Ok(Self {
            coeffs: CachedCoefficients::new(DensityCoeffs { nu: nu.nu() }),
        })
    }

    pub fn evaluate(&self, xi: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        if !(xi > 0.0) || !xi.is_finite() {
            return Err(Error::Domain {
                value: xi,
                reason: "the Wright density is evaluated for xi > 0",
            });
        }
        sum_power_series(&self.coeffs, -xi, policy)
    }
}

/// Tricomi function `C_0(y) = sum_r (-y)^r / (r!)^2`.
pub fn tricomi_c0(y: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
    sum_power_series(&TricomiCoeffs, -y, policy)
}
