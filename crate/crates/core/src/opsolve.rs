//! Operational solutions `f = E_ν(s^ν Θ) g = sum_r s^{νr} Θ^r g / Γ(νr+1)`
//! for constant-coefficient operators `Θ` acting on analytic data `g`.
//!
//! Functions are stored in the gamma-normalised basis
//! `g(x) = sum_i n_i x^{e_i} / Γ(e_i + 1)` with `e_i = offset + i`. In this
//! basis `∂xx` only lowers the offset by two, and terms whose exponent lands
//! on a pole of `Γ(e+1)` drop out by the reciprocal-gamma convention. Powers
//! `Θ^r g` therefore share one coefficient table and cost nothing to form.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fracops::FractionalOrder;
use crate::series::{CompensatedSum, SeriesPolicy, SeriesResult, StopRule};
use crate::specfun::{is_gamma_pole, ln_gamma};

/// Analytic data `g(x) = sum_k a_k x^{β₀ + k}` with finitely many stored
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticFunction {
    offset: f64,
    normalized: Arc<[f64]>,
    start: usize,
    scale: f64,
    truncated: bool,
}

impl AnalyticFunction {
    fn from_normalized(offset: f64, normalized: Vec<f64>, truncated: bool) -> Self {
        let mut f = Self {
            offset,
            normalized: normalized.into(),
            start: 0,
            scale: 1.0,
            truncated,
        };
        f.skip_vanishing();
        f
    }

    /// Ordinary Taylor-type coefficients `a_k` of `x^{offset + k}`.
    pub fn from_coefficients(offset: f64, coeffs: &[f64], truncated: bool) -> Result<Self> {
        if !(offset >= 0.0 && offset.is_finite()) {
            return Err(Error::invalid("exponent_offset", format!("{offset} is not >= 0")));
        }
        let normalized = coeffs
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                if a == 0.0 {
                    0.0
                } else {
                    let (lg, sign) = ln_gamma(offset + k as f64 + 1.0);
                    a * sign * lg.exp()
                }
            })
            .collect();
        Ok(Self::from_normalized(offset, normalized, truncated))
    }

    /// Data given by its derivatives at 0: `g(x) = sum_k g^{(k)}(0) x^k / k!`.
    pub fn from_derivatives(derivs: &[f64], truncated: bool) -> Self {
        Self::from_normalized(0.0, derivs.to_vec(), truncated)
    }

    /// `x^β` for `β >= 0`.
    pub fn monomial(beta: f64) -> Result<Self> {
        Self::from_coefficients(beta, &[1.0], false)
    }

    pub fn constant(c: f64) -> Self {
        Self::from_normalized(0.0, vec![c], false)
    }

    /// `sin x` truncated to `n` Taylor terms.
    pub fn sin(n: usize) -> Self {
        let d = (0..n).map(|k| [0.0, 1.0, 0.0, -1.0][k % 4]).collect::<Vec<_>>();
        Self::from_derivatives(&d, true)
    }

    /// `e^{c x}` truncated to `n` Taylor terms.
    pub fn exp_scaled(c: f64, n: usize) -> Self {
        let d = (0..n).map(|k| c.powi(k as i32)).collect::<Vec<_>>();
        Self::from_derivatives(&d, true)
    }

    /// Drops leading entries that are zero or sit on a pole of `Γ(e+1)`.
    fn skip_vanishing(&mut self) {
        while self.start < self.normalized.len() {
            let e = self.offset + self.start as f64;
            if self.normalized[self.start] != 0.0 && !is_gamma_pole(e + 1.0) {
                break;
            }
            self.start += 1;
        }
    }

    /// Lowest exponent that can carry a nonzero coefficient.
    pub fn exponent_offset(&self) -> f64 {
        self.offset + self.start as f64
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.normalized.len() - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when the stored coefficients are a truncation of an infinite
    /// series.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// True for the zero function (no stored nonzero coefficient).
    pub fn is_zero(&self) -> bool {
        self.scale == 0.0
            || (self.start..self.normalized.len())
                .all(|i| self.normalized[i] == 0.0 || is_gamma_pole(self.offset + i as f64 + 1.0))
    }

    fn normalized_at(&self, i: usize) -> f64 {
        self.scale * self.normalized[i]
    }

    /// Coefficient `a_k` of `x^{exponent_offset() + k}`.
    pub fn coeff(&self, k: usize) -> f64 {
        let i = self.start + k;
        if i >= self.normalized.len() {
            return 0.0;
        }
        let e = self.offset + i as f64;
        if is_gamma_pole(e + 1.0) {
            return 0.0;
        }
        let (lg, sign) = ln_gamma(e + 1.0);
        self.normalized_at(i) * sign * (-lg).exp()
    }

    /// All stored coefficients `a_k`.
    pub fn coeffs(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.coeff(k)).collect()
    }

    /// Partial sum at `x` with the truncation status of the stored series.
    pub fn evaluate(&self, x: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        let mut sum = CompensatedSum::new();
        let mut stop = StopRule::new(policy);
        let mut last = 0.0;
        let mut used = 0;
        for i in self.start..self.normalized.len() {
            used += 1;
            let n = self.normalized_at(i);
            let e = self.offset + i as f64;
            let term = if n == 0.0 || is_gamma_pole(e + 1.0) {
                0.0
            } else {
                n * scaled_power(x, e)?
            };
            sum.add(term);
            last = term.abs();
            if stop.observe(last, sum.value().abs()) {
                break;
            }
        }
        let value = sum.value();
        if !value.is_finite() {
            return Err(Error::Overflow { terms: used });
        }
        Ok(SeriesResult {
            value,
            terms_used: used.max(1),
            converged: !self.truncated || stop.satisfied(),
            est_error: if self.truncated { last } else { 0.0 },
        })
    }

    /// `a f + b g` for data whose exponents differ by integers.
    pub fn linear_combination(a: f64, f: &Self, b: f64, g: &Self) -> Result<Self> {
        let (lo, hi) = (f.offset.min(g.offset), f.offset.max(g.offset));
        let shift = hi - lo;
        if shift != shift.floor() {
            return Err(Error::UnsupportedPairing {
                op: "linear_combination",
                what: format!("exponent families {} and {}", f.offset, g.offset),
            });
        }
        let len = (f.normalized.len() + (f.offset - lo) as usize)
            .max(g.normalized.len() + (g.offset - lo) as usize);
        let mut out = vec![0.0; len];
        for (w, h) in [(a, f), (b, g)] {
            let d = (h.offset - lo) as usize;
            for i in h.start..h.normalized.len() {
                out[i + d] += w * h.normalized_at(i);
            }
        }
        Ok(Self::from_normalized(lo, out, f.truncated || g.truncated))
    }
}

/// `x^e / Γ(e+1)` in log space.
fn scaled_power(x: f64, e: f64) -> Result<f64> {
    let (lg, sign) = ln_gamma(e + 1.0);
    if x == 0.0 {
        return if e == 0.0 {
            Ok(sign * (-lg).exp())
        } else if e > 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Domain {
                value: x,
                reason: "negative power evaluated at 0",
            })
        };
    }
    let integer = e == e.floor();
    if x < 0.0 && !integer {
        return Err(Error::Domain {
            value: x,
            reason: "non-integer power of a negative argument",
        });
    }
    let odd = integer && x < 0.0 && (e.abs() % 2.0) == 1.0;
    let s = if odd { -sign } else { sign };
    Ok(s * (e * x.abs().ln() - lg).exp())
}

/// The closed set of constant-coefficient operators `Θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum OperatorDescriptor {
    SecondDerivative,
    NegatedFourthDerivative,
    Scalar(f64),
    /// Backward shift of a sequence, acting on its generating function
    /// `sum_k p_k u^k` as multiplication by `u`.
    BackwardShift,
}

impl OperatorDescriptor {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SecondDerivative => "d2",
            Self::NegatedFourthDerivative => "neg-d4",
            Self::Scalar(_) => "scalar",
            Self::BackwardShift => "shift",
        }
    }

    /// Parses the command-line spelling; `scalar` takes `coeff`.
    pub fn parse(name: &str, coeff: f64) -> Result<Self> {
        match name {
            "d2" | "second-derivative" => Ok(Self::SecondDerivative),
            "neg-d4" | "negated-fourth-derivative" => Ok(Self::NegatedFourthDerivative),
            "scalar" => Ok(Self::Scalar(coeff)),
            "shift" | "backward-shift" => Ok(Self::BackwardShift),
            other => Err(Error::invalid(
                "op",
                format!("unknown operator `{other}` (d2, neg-d4, scalar, shift)"),
            )),
        }
    }
}

impl fmt::Display for OperatorDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scalar(c) => write!(f, "scalar({c})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Exact action of `op` on `g`.
pub fn apply_operator(op: &OperatorDescriptor, g: &AnalyticFunction) -> Result<AnalyticFunction> {
    let mut out = g.clone();
    match *op {
        OperatorDescriptor::SecondDerivative => out.offset -= 2.0,
        OperatorDescriptor::NegatedFourthDerivative => {
            out.offset -= 4.0;
            out.scale = -out.scale;
        }
        OperatorDescriptor::Scalar(c) => {
            if !c.is_finite() {
                return Err(Error::invalid("coeff", "scalar must be finite"));
            }
            out.scale *= c;
        }
        OperatorDescriptor::BackwardShift => {
            if g.offset != g.offset.floor() {
                return Err(Error::UnsupportedPairing {
                    op: "backward_shift",
                    what: format!("non-integer exponent family {}", g.offset),
                });
            }
            // u * u^e / Γ(e+1) = (e+1) u^{e+1} / Γ(e+2)
            let shifted = (g.start..g.normalized.len())
                .map(|i| g.normalized_at(i) * (g.offset + i as f64 + 1.0))
                .collect();
            return Ok(AnalyticFunction::from_normalized(
                g.offset + g.start as f64 + 1.0,
                shifted,
                g.truncated,
            ));
        }
    }
    out.skip_vanishing();
    Ok(out)
}

/// Which variable carries the fractional derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FractionalVariable {
    /// Initial value problem `D_t^ν f = Θ_x f`, `f(x, 0) = g(x)`.
    Time,
    /// Boundary value problem `D_x^ν f = Θ_t f`, `f(0, t) = g(t)`.
    Space,
}

/// The operator series with its cached powers `Θ^r g`.
#[derive(Debug, Clone)]
pub struct OperationalSolution {
    terms: Vec<AnalyticFunction>,
    order: FractionalOrder,
    variable: FractionalVariable,
    op: OperatorDescriptor,
    terminated: bool,
}

impl OperationalSolution {
    fn build(
        order: &FractionalOrder,
        op: &OperatorDescriptor,
        g: &AnalyticFunction,
        policy: &SeriesPolicy,
        variable: FractionalVariable,
    ) -> Result<Self> {
        order.require_up_to_two("operational solver")?;
        policy.validate()?;
        let mut terms = vec![g.clone()];
        let mut terminated = g.is_zero();
        // one power beyond max_terms so that Θf is available at every r
        while !terminated && terms.len() <= policy.max_terms {
            let next = apply_operator(op, terms.last().expect("non-empty"))?;
            if next.is_zero() {
                terminated = true;
            } else {
                terms.push(next);
            }
        }
        Ok(Self {
            terms,
            order: *order,
            variable,
            op: *op,
            terminated,
        })
    }

    /// `Θ^r g` for `r = 0, 1, ...`.
    pub fn terms(&self) -> &[AnalyticFunction] {
        &self.terms
    }

    pub fn order(&self) -> &FractionalOrder {
        &self.order
    }

    pub fn variable(&self) -> FractionalVariable {
        self.variable
    }

    pub fn operator(&self) -> &OperatorDescriptor {
        &self.op
    }

    /// True when `Θ^r g` vanishes identically from some `r` on, so the
    /// series is a finite sum.
    pub fn terminates(&self) -> bool {
        self.terminated
    }
}

/// Solution of `D_t^ν f = Θ_x f`, `f(x, 0) = g(x)`.
///
/// For `ν ∈ (1, 2]` the series satisfies `∂_t f(x, 0) = 0` by construction.
pub fn solve_ivp(
    order: &FractionalOrder,
    op: &OperatorDescriptor,
    g: &AnalyticFunction,
    policy: &SeriesPolicy,
) -> Result<OperationalSolution> {
    OperationalSolution::build(order, op, g, policy, FractionalVariable::Time)
}

/// Solution of `D_x^ν f = Θ_t f`, `f(0, t) = g(t)`.
pub fn solve_bvp(
    order: &FractionalOrder,
    op: &OperatorDescriptor,
    g: &AnalyticFunction,
    policy: &SeriesPolicy,
) -> Result<OperationalSolution> {
    OperationalSolution::build(order, op, g, policy, FractionalVariable::Space)
}

/// `f(x, t)`.
pub fn evaluate(sol: &OperationalSolution, x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
    sum_solution(sol, x, t, policy, 0)
}

/// `(Θ f)(x, t)`, computed from the cached powers `Θ^{r+1} g`.
pub fn evaluate_applied(
    sol: &OperationalSolution,
    x: f64,
    t: f64,
    policy: &SeriesPolicy,
) -> Result<SeriesResult> {
    sum_solution(sol, x, t, policy, 1)
}

fn sum_solution(
    sol: &OperationalSolution,
    x: f64,
    t: f64,
    policy: &SeriesPolicy,
    shift: usize,
) -> Result<SeriesResult> {
    policy.validate()?;
    let (s, y) = match sol.variable {
        FractionalVariable::Time => (t, x),
        FractionalVariable::Space => (x, t),
    };
    if !(s >= 0.0) || !s.is_finite() || !y.is_finite() {
        return Err(Error::Domain {
            value: s,
            reason: "the fractional variable must be finite and >= 0",
        });
    }
    let nu = sol.order.nu();
    let ln_s = s.ln();
    let mut sum = CompensatedSum::new();
    let mut stop = StopRule::new(policy);
    let mut inner_ok = true;
    let mut inner_err = 0.0;
    for r in 0..policy.max_terms {
        let Some(term_fn) = sol.terms.get(r + shift) else {
            let finished = sol.terminated;
            let value = sum.value();
            return Ok(if finished {
                SeriesResult {
                    value,
                    terms_used: r.max(1),
                    converged: inner_ok,
                    est_error: inner_err,
                }
            } else {
                SeriesResult::not_converged(value, policy)
            });
        };
        let weight = if r == 0 {
            1.0
        } else if s == 0.0 {
            0.0
        } else {
            let rn = nu * r as f64;
            let (lg, sign) = ln_gamma(rn + 1.0);
            sign * (rn * ln_s - lg).exp()
        };
        let term = if weight == 0.0 {
            0.0
        } else {
            let inner = term_fn.evaluate(y, policy)?;
            inner_ok &= inner.converged;
            inner_err += weight.abs() * inner.est_error;
            weight * inner.value
        };
        sum.add(term);
        let last = term.abs();
        if !sum.value().is_finite() {
            return Err(Error::Overflow { terms: r + 1 });
        }
        if s == 0.0 || stop.observe(last, sum.value().abs()) {
            return Ok(SeriesResult {
                value: sum.value(),
                terms_used: r + 1,
                converged: inner_ok,
                est_error: last + inner_err,
            });
        }
    }
    Ok(SeriesResult::not_converged(sum.value(), policy))
}

impl FromStr for FractionalVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ivp" | "time" => Ok(Self::Time),
            "bvp" | "space" => Ok(Self::Space),
            other => Err(Error::invalid("mode", format!("`{other}` is not ivp or bvp"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol() -> SeriesPolicy {
        SeriesPolicy::default()
    }

    #[test]
    fn second_derivative_of_square_is_two() {
        let g = AnalyticFunction::monomial(2.0).unwrap();
        let d = apply_operator(&OperatorDescriptor::SecondDerivative, &g).unwrap();
        assert_eq!(d.exponent_offset(), 0.0);
        assert_eq!(d.coeff(0), 2.0);
        let dd = apply_operator(&OperatorDescriptor::SecondDerivative, &d).unwrap();
        assert!(dd.is_zero());
    }

    #[test]
    fn second_derivative_of_fractional_power() {
        let g = AnalyticFunction::monomial(3.5).unwrap();
        let d = apply_operator(&OperatorDescriptor::SecondDerivative, &g).unwrap();
        assert_eq!(d.exponent_offset(), 1.5);
        assert!((d.coeff(0) - 3.5 * 2.5).abs() < 1e-13);
    }

    #[test]
    fn fourth_derivative_of_sine() {
        let g = AnalyticFunction::sin(40);
        let d = apply_operator(&OperatorDescriptor::NegatedFourthDerivative, &g).unwrap();
        for x in [0.3, 1.0, 2.5] {
            let v = d.evaluate(x, &pol()).unwrap();
            assert!(v.converged);
            assert!((v.value + f64::sin(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn backward_shift_multiplies_generating_function() {
        let g = AnalyticFunction::from_coefficients(0.0, &[1.0, 2.0, 3.0], false).unwrap();
        let b = apply_operator(&OperatorDescriptor::BackwardShift, &g).unwrap();
        assert_eq!(b.exponent_offset(), 1.0);
        let c = b.coeffs();
        assert!((c[0] - 1.0).abs() < 1e-15 && (c[1] - 2.0).abs() < 1e-15 && (c[2] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn heat_polynomial_terminates() {
        let o = FractionalOrder::new(1.0).unwrap();
        let g = AnalyticFunction::monomial(2.0).unwrap();
        let sol = solve_ivp(&o, &OperatorDescriptor::SecondDerivative, &g, &pol()).unwrap();
        assert!(sol.terminates());
        assert_eq!(sol.terms().len(), 2);
        let v = evaluate(&sol, 1.5, 0.7, &pol()).unwrap();
        assert!(v.converged);
        assert!((v.value - (2.25 + 1.4)).abs() < 1e-14);
    }

    #[test]
    fn scalar_operator_gives_mittag_leffler() {
        let o = FractionalOrder::new(2.0).unwrap();
        let g = AnalyticFunction::constant(1.0);
        let sol = solve_bvp(&o, &OperatorDescriptor::Scalar(-1.0), &g, &pol()).unwrap();
        for x in [0.5, 1.0, 3.0] {
            let v = evaluate(&sol, x, 123.0, &pol()).unwrap();
            assert!((v.value - f64::cos(x)).abs() < 1e-14);
        }
        assert_eq!(evaluate(&sol, 0.0, 5.0, &pol()).unwrap().value, 1.0);
    }

    #[test]
    fn applied_series_is_theta_f() {
        let o = FractionalOrder::new(0.6).unwrap();
        let g = AnalyticFunction::constant(1.0);
        let sol = solve_ivp(&o, &OperatorDescriptor::Scalar(-2.0), &g, &pol()).unwrap();
        let f = evaluate(&sol, 0.0, 0.8, &pol()).unwrap().value;
        let tf = evaluate_applied(&sol, 0.0, 0.8, &pol()).unwrap().value;
        assert!((tf + 2.0 * f).abs() < 1e-14);
    }

    #[test]
    fn operator_names_round_trip() {
        for op in [
            OperatorDescriptor::SecondDerivative,
            OperatorDescriptor::NegatedFourthDerivative,
            OperatorDescriptor::Scalar(2.0),
            OperatorDescriptor::BackwardShift,
        ] {
            assert_eq!(OperatorDescriptor::parse(op.name(), 2.0).unwrap(), op);
        }
        assert!(OperatorDescriptor::parse("laplace", 0.0).is_err());
    }

    #[test]
    fn fractional_power_rejects_negative_argument() {
        let g = AnalyticFunction::monomial(0.5).unwrap();
        assert!(g.evaluate(-1.0, &pol()).is_err());
        assert!(AnalyticFunction::monomial(-0.5).is_err());
    }
}
