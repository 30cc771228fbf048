//! Truncation control and summation for the infinite series used throughout
//! the crate.
//!
//! Power series `sum_r c_r x^r` are summed by [`sum_power_series`]. Terms are
//! formed in log space so that neither `x^r` nor the gamma factors overflow,
//! and are accumulated with Neumaier's compensated sum. When the bound on the
//! roundoff (dominated by cancellation between large alternating terms)
//! exceeds the requested tolerance the sum is redone in multiprecision
//! arithmetic, with the working precision raised until the digits lost to
//! cancellation are covered.

use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest working precision the multiprecision fallback may use.
pub const MAX_PRECISION_BITS: u32 = 1 << 16;

const MIN_PRECISION_BITS: u32 = 128;
const GUARD_BITS: f64 = 64.0;

/// Truncation rule shared by every series in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPolicy {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Number of successive small, non-increasing terms required to stop.
    pub consecutive_small: usize,
    pub max_terms: usize,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            abs_tol: 1e-300,
            consecutive_small: 3,
            max_terms: 10_000,
        }
    }
}

impl SeriesPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid("rel_tol", "must be positive and finite"));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::invalid("abs_tol", "must be non-negative"));
        }
        if self.max_terms < 1 {
            return Err(Error::invalid("max_terms", "must be at least 1"));
        }
        if self.consecutive_small < 1 {
            return Err(Error::invalid("consecutive_small", "must be at least 1"));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }
}

/// Value of a truncated series with its convergence diagnostics.
///
/// `converged == false` always comes with `terms_used == max_terms`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
    pub est_error: f64,
}

impl SeriesResult {
    pub fn exact(value: f64, terms_used: usize) -> Self {
        Self {
            value,
            terms_used,
            converged: true,
            est_error: 0.0,
        }
    }

    pub(crate) fn not_converged(value: f64, policy: &SeriesPolicy) -> Self {
        Self {
            value,
            terms_used: policy.max_terms,
            converged: false,
            est_error: f64::INFINITY,
        }
    }

    /// Multiplies value and error estimate by a constant factor.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            est_error: self.est_error * factor.abs(),
            ..self
        }
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Stopping rule: `consecutive_small` successive terms below
/// `rel_tol * |partial| + abs_tol` that do not grow in magnitude. Exact zeros
/// (pole-convention terms) count as small and leave the growth check alone.
#[derive(Debug, Clone)]
pub(crate) struct StopRule {
    rel_tol: f64,
    abs_tol: f64,
    needed: usize,
    streak: usize,
    last_nonzero: f64,
}

impl StopRule {
    pub(crate) fn new(policy: &SeriesPolicy) -> Self {
        Self {
            rel_tol: policy.rel_tol,
            abs_tol: policy.abs_tol,
            needed: policy.consecutive_small,
            streak: 0,
            last_nonzero: f64::INFINITY,
        }
    }

    /// Records a term; returns true once the series may be truncated.
    pub(crate) fn observe(&mut self, term_abs: f64, partial_abs: f64) -> bool {
        let small = term_abs < self.rel_tol * partial_abs + self.abs_tol;
        let non_increasing = term_abs == 0.0 || term_abs <= self.last_nonzero;
        if term_abs > 0.0 {
            self.last_nonzero = term_abs;
        }
        if small && non_increasing {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= self.needed
    }

    pub(crate) fn satisfied(&self) -> bool {
        self.streak >= self.needed
    }

    /// Log-magnitude form of [`StopRule::observe`] for values outside the
    /// f64 range. `ln_partial` may be `-inf` for an exactly zero partial sum.
    pub(crate) fn observe_ln(&mut self, ln_term: f64, ln_partial: f64) -> bool {
        let bound = (self.rel_tol.ln() + ln_partial).max(self.abs_tol.ln());
        let zero = ln_term == f64::NEG_INFINITY;
        let small = zero || ln_term < bound;
        let non_increasing = zero || ln_term <= self.last_nonzero;
        if !zero {
            self.last_nonzero = ln_term;
        }
        if small && non_increasing {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= self.needed
    }
}

/// Logarithmic form of one series coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogTerm {
    pub ln_abs: f64,
    pub sign: f64,
    /// Sum of the magnitudes of the logarithms combined into `ln_abs`; the
    /// absolute error of `ln_abs` is a few ulps of this.
    pub cond: f64,
}

impl LogTerm {
    pub(crate) fn new(ln_abs: f64, sign: f64, cond: f64) -> Self {
        Self { ln_abs, sign, cond }
    }
}

/// Coefficients `c_r` of a power series in both floating and multiprecision
/// form. `None` / zero marks a coefficient that vanishes exactly.
pub(crate) trait Coefficients {
    fn log_coeff(&self, r: usize) -> Option<LogTerm>;
    fn mp_coeff(&self, r: usize, prec: u32) -> Float;
}

impl<C: Coefficients + ?Sized> Coefficients for &C {
    fn log_coeff(&self, r: usize) -> Option<LogTerm> {
        (**self).log_coeff(r)
    }
    fn mp_coeff(&self, r: usize, prec: u32) -> Float {
        (**self).mp_coeff(r, prec)
    }
}

/// Memoises the coefficients of a series evaluated at many points.
pub(crate) struct CachedCoefficients<C> {
    inner: C,
    logs: std::cell::RefCell<Vec<Option<LogTerm>>>,
    mp: std::cell::RefCell<(u32, Vec<Float>)>,
}

impl<C: Coefficients> CachedCoefficients<C> {
    pub(crate) fn new(inner: C) -> Self {
        Self {
            inner,
            logs: Default::default(),
            mp: std::cell::RefCell::new((0, Vec::new())),
        }
    }
}

impl<C: Coefficients> Coefficients for CachedCoefficients<C> {
    fn log_coeff(&self, r: usize) -> Option<LogTerm> {
        let mut logs = self.logs.borrow_mut();
        while logs.len() <= r {
            let next = logs.len();
            logs.push(self.inner.log_coeff(next));
        }
        logs[r]
    }

    fn mp_coeff(&self, r: usize, prec: u32) -> Float {
        let mut cache = self.mp.borrow_mut();
        if cache.0 < prec {
            // round up so that small precision increases reuse the table
            let bits = prec.div_ceil(256) * 256;
            *cache = (bits, Vec::new());
        }
        let bits = cache.0;
        while cache.1.len() <= r {
            let next = cache.1.len();
            let c = self.inner.mp_coeff(next, bits);
            cache.1.push(c);
        }
        cache.1[r].clone()
    }
}

/// Sums `sum_r c_r x^r` under `policy`, switching to multiprecision when the
/// floating-point result cannot be trusted to `rel_tol`.
pub(crate) fn sum_power_series<C: Coefficients>(
    coeffs: &C,
    x: f64,
    policy: &SeriesPolicy,
) -> Result<SeriesResult> {
    policy.validate()?;
    if !x.is_finite() {
        return Err(Error::Domain {
            value: x,
            reason: "series argument must be finite",
        });
    }
    if x == 0.0 {
        let value = coeffs.log_coeff(0).map_or(0.0, |c| c.sign * c.ln_abs.exp());
        return Ok(SeriesResult::exact(value, 1));
    }

    let ln_x = x.abs().ln();
    let negative = x < 0.0;
    let eps = f64::EPSILON;
    // log-magnitude below the peak at which the scan may stop even when the
    // floating sum is swamped by cancellation noise
    let noise_floor = (policy.rel_tol * eps).ln();

    let mut sum = CompensatedSum::new();
    let mut roundoff = 0.0;
    let mut stop = StopRule::new(policy);
    let mut noise_stop = StopRule::new(&SeriesPolicy {
        rel_tol: 1.0,
        abs_tol: 0.0,
        ..*policy
    });
    let mut peak = f64::NEG_INFINITY;
    let mut overflowed = false;
    let mut last_abs = 0.0;
    let mut used = 0;
    let mut converged = false;

    for r in 0..policy.max_terms {
        used = r + 1;
        let rf = r as f64;
        let term = coeffs.log_coeff(r).map(|c| {
            let ln_abs = c.ln_abs + rf * ln_x;
            let sign = if negative && r % 2 == 1 { -c.sign } else { c.sign };
            (ln_abs, sign, c.cond + rf * ln_x.abs())
        });
        let (ln_abs, sign, cond) = term.unwrap_or((f64::NEG_INFINITY, 1.0, 0.0));
        peak = peak.max(ln_abs);
        if ln_abs > 700.0 {
            overflowed = true;
        }
        if overflowed {
            // terms only tracked in log space; the multiprecision pass sums them
            let rel = (ln_abs - peak - noise_floor).exp();
            if noise_stop.observe(rel, 1.0) {
                converged = true;
                break;
            }
            continue;
        }
        let t = sign * ln_abs.exp();
        sum.add(t);
        roundoff += t.abs() * (4.0 + cond);
        last_abs = t.abs();
        if stop.observe(t.abs(), sum.value().abs()) {
            converged = true;
            break;
        }
    }

    if !converged {
        let value = if overflowed { f64::NAN } else { sum.value() };
        return Ok(SeriesResult::not_converged(value, policy));
    }

    let value = sum.value();
    let round_est = eps * (roundoff + value.abs());
    if !overflowed && round_est <= policy.rel_tol * value.abs() + policy.abs_tol {
        if !value.is_finite() {
            return Err(Error::Overflow { terms: used });
        }
        return Ok(SeriesResult {
            value,
            terms_used: used,
            converged: true,
            est_error: last_abs + round_est,
        });
    }

    let guess = if overflowed || value == 0.0 || !value.is_finite() {
        peak + eps.ln()
    } else {
        value.abs().ln()
    };
    sum_power_series_mp(coeffs, x, policy, peak, guess)
}

/// Working precision for a sum whose largest term is `e^peak_ln`, so that
/// the result is accurate to double precision or to `abs_tol`, whichever is
/// looser.
fn bits_for(peak_ln: f64, sum_ln: f64, terms: usize, abs_tol: f64) -> u32 {
    let rel = f64::EPSILON.ln() + sum_ln;
    let abs = abs_tol.ln();
    let hi = rel.max(abs);
    if hi == f64::NEG_INFINITY {
        return u32::MAX;
    }
    let target = hi + (rel.min(abs) - hi).exp().ln_1p();
    let lost = ((peak_ln - target) / std::f64::consts::LN_2).max(53.0);
    let bits = lost + GUARD_BITS + (terms.max(2) as f64).log2();
    if bits.is_finite() {
        (bits.ceil() as u32).max(MIN_PRECISION_BITS)
    } else {
        u32::MAX
    }
}

/// Natural log of |v| for a nonzero multiprecision value.
pub(crate) fn mp_ln_abs(v: &Float) -> f64 {
    match v.to_f64_exp() {
        (m, e) if m != 0.0 => m.abs().ln() + e as f64 * std::f64::consts::LN_2,
        _ => f64::NEG_INFINITY,
    }
}

fn sum_power_series_mp<C: Coefficients>(
    coeffs: &C,
    x: f64,
    policy: &SeriesPolicy,
    mut peak: f64,
    mut sum_ln: f64,
) -> Result<SeriesResult> {
    let mut bits = bits_for(peak, sum_ln, 64, policy.abs_tol);
    for _ in 0..8 {
        if bits > MAX_PRECISION_BITS {
            return Err(Error::PrecisionBudget {
                bits,
                limit: MAX_PRECISION_BITS,
            });
        }
        let xm = Float::with_val(bits, x);
        let mut power = Float::with_val(bits, 1);
        let mut sum = Float::with_val(bits, 0);
        let mut stop = StopRule::new(policy);
        let mut used = 0;
        let mut converged = false;
        let mut last_ln = f64::NEG_INFINITY;
        for r in 0..policy.max_terms {
            used = r + 1;
            if r > 0 {
                power *= &xm;
            }
            let mut term = coeffs.mp_coeff(r, bits);
            last_ln = f64::NEG_INFINITY;
            if !term.is_zero() {
                term *= &power;
                last_ln = mp_ln_abs(&term);
                peak = peak.max(last_ln);
                sum += &term;
            }
            if stop.observe_ln(last_ln, mp_ln_abs(&sum)) {
                converged = true;
                break;
            }
        }
        let value = sum.to_f64();
        if !converged {
            return Ok(SeriesResult::not_converged(value, policy));
        }
        sum_ln = mp_ln_abs(&sum);
        let needed = bits_for(peak, sum_ln, used, policy.abs_tol);
        if needed <= bits || sum.is_zero() {
            // only a trustworthy sum may be reported as out of range; a
            // low-precision one can be huge noise
            if !value.is_finite() {
                return Err(Error::Overflow { terms: used });
            }
            return Ok(SeriesResult {
                value,
                terms_used: used,
                converged: true,
                est_error: last_ln.exp()
                    + value.abs() * f64::EPSILON
                    + (peak + (used as f64).ln() - bits as f64 * std::f64::consts::LN_2).exp(),
            });
        }
        // A sum computed with too few bits is itself inflated by roundoff,
        // so the estimate above is only a lower bound; grow geometrically.
        bits = needed.max(bits.saturating_mul(2));
    }
    Err(Error::PrecisionBudget {
        bits,
        limit: MAX_PRECISION_BITS,
    })
}
