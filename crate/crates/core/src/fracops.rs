//! Caputo derivatives, Riemann-Liouville integrals and the Γ(⌈ν⌉)-scaled
//! integral `𝔻^{-ν}`, exactly on power functions and numerically on sampled
//! data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{CompensatedSum, SeriesPolicy, SeriesResult, StopRule};
use crate::specfun::{gamma_ratio, reciprocal_gamma};

/// A fractional order `ν > 0` together with `m = ⌈ν⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionalOrder {
    nu: f64,
    m: u32,
}

impl FractionalOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::invalid(
                "nu",
                format!("{nu} is not a positive finite order"),
            ));
        }
        Ok(Self {
            nu,
            m: nu.ceil() as u32,
        })
    }

    #[inline]
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `m = ⌈ν⌉`.
    #[inline]
    pub fn ceil(&self) -> u32 {
        self.m
    }

    fn window(&self, ok: bool, window: &str, op: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "nu",
                format!("{op} needs nu in {window}, got {}", self.nu),
            ))
        }
    }

    /// Requires `ν ∈ (0, 1)`.
    pub fn require_open_unit(&self, op: &str) -> Result<()> {
        self.window(self.nu < 1.0, "(0, 1)", op)
    }

    /// Requires `ν ∈ (0, 1]`.
    pub fn require_unit(&self, op: &str) -> Result<()> {
        self.window(self.nu <= 1.0, "(0, 1]", op)
    }

    /// Requires `ν ∈ (0, 2]`.
    pub fn require_up_to_two(&self, op: &str) -> Result<()> {
        self.window(self.nu <= 2.0, "(0, 2]", op)
    }
}

/// The monomial `coeff * t^exponent` with `exponent > -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn new(coeff: f64, exponent: f64) -> Result<Self> {
        if !(exponent > -1.0) {
            return Err(Error::invalid(
                "exponent",
                format!("{exponent} is not > -1, so t^e is not integrable at 0"),
            ));
        }
        Ok(Self { coeff, exponent })
    }

    pub fn one() -> Self {
        Self {
            coeff: 1.0,
            exponent: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeff * self.eval_at(t)
    }

    /// `t^exponent` without the coefficient, with `t^0 = 1` at `t = 0`.
    fn eval_at(&self, t: f64) -> f64 {
        if self.exponent == 0.0 {
            1.0
        } else {
            t.powf(self.exponent)
        }
    }
}

/// Exact Caputo derivative of order `ν ∈ (0, 2]` of a power function.
///
/// Returns `Ok(None)` for the polynomials `t^j`, `j < m`, which the Caputo
/// derivative annihilates. Non-integer exponents below `m - 1` are rejected.
pub fn caputo_power(order: &FractionalOrder, p: &PowerTerm) -> Result<Option<PowerTerm>> {
    order.require_up_to_two("caputo_power")?;
    let e = p.exponent;
    let m = order.ceil() as f64;
    if e >= 0.0 && e == e.floor() && e < m {
        return Ok(None);
    }
    if e <= m - 1.0 {
        return Err(Error::UnsupportedPairing {
            op: "caputo_power",
            what: format!("t^{e} with nu = {} (needs e > {})", order.nu(), m - 1.0),
        });
    }
    Ok(Some(PowerTerm {
        coeff: p.coeff * gamma_ratio(e + 1.0, e + 1.0 - order.nu()),
        exponent: e - order.nu(),
    }))
}

/// Riemann-Liouville integral `D^{-ν}` of a power function.
pub fn rl_integral_power(order: &FractionalOrder, p: &PowerTerm) -> Result<PowerTerm> {
    PowerTerm::new(p.coeff, p.exponent)?;
    let e = p.exponent;
    Ok(PowerTerm {
        coeff: p.coeff * gamma_ratio(e + 1.0, e + 1.0 + order.nu()),
        exponent: e + order.nu(),
    })
}

/// The scaled integral `𝔻^{-ν} = Γ(⌈ν⌉) D^{-ν}` for `ν ∈ (0, 1)`.
pub fn modified_integral_power(order: &FractionalOrder, p: &PowerTerm) -> Result<PowerTerm> {
    order.require_open_unit("modified_integral_power")?;
    let mut q = rl_integral_power(order, p)?;
    q.coeff /= reciprocal_gamma(order.ceil() as f64);
    Ok(q)
}

/// Sums `sum_r (-α)^r weight(r) P_r(t)` where `P_{r+1} = step(P_r)`, `P_0 = 1`.
fn iterated_series(
    alpha: f64,
    t: f64,
    policy: &SeriesPolicy,
    weight: impl Fn(usize) -> f64,
    step: impl Fn(&PowerTerm) -> Result<PowerTerm>,
) -> Result<SeriesResult> {
    policy.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain {
            value: t,
            reason: "t must be finite and >= 0",
        });
    }
    if !alpha.is_finite() {
        return Err(Error::invalid("alpha", "must be finite"));
    }
    let mut p = PowerTerm::one();
    let mut sum = CompensatedSum::new();
    let mut abs_sum = 0.0;
    let mut stop = StopRule::new(policy);
    let mut sign = 1.0;
    for r in 0..policy.max_terms {
        let term = if p.coeff == 0.0 || (t == 0.0 && r > 0) {
            0.0
        } else {
            sign * weight(r) * p.coeff * alpha.abs().powi(r as i32) * p.eval_at(t)
        };
        sum.add(term);
        abs_sum += term.abs();
        if !sum.value().is_finite() {
            return Err(Error::Overflow { terms: r + 1 });
        }
        if stop.observe(term.abs(), sum.value().abs()) || alpha == 0.0 {
            return Ok(SeriesResult {
                value: sum.value(),
                terms_used: r + 1,
                converged: true,
                est_error: term.abs() + f64::EPSILON * (r + 1) as f64 * abs_sum,
            });
        }
        if alpha > 0.0 {
            sign = -sign;
        }
        p = step(&p)?;
    }
    Ok(SeriesResult::not_converged(sum.value(), policy))
}

/// `e^{-α 𝔻^{-ν}} 1 = sum_r (-α)^r (𝔻^{-ν})^r 1`, built by applying the
/// scaled integral repeatedly to the constant 1. For `ν = 1` the plain
/// integral is iterated, which gives `e^{-αt}`.
pub fn operator_exponential_on_one(
    order: &FractionalOrder,
    alpha: f64,
    t: f64,
    policy: &SeriesPolicy,
) -> Result<SeriesResult> {
    order.require_unit("operator_exponential_on_one")?;
    let step = |p: &PowerTerm| {
        if order.nu() < 1.0 {
            modified_integral_power(order, p)
        } else {
            rl_integral_power(order, p)
        }
    };
    iterated_series(alpha, t, policy, |_| 1.0, step)
}

/// `e^{-α D^{-ν}} 1 = sum_r (-α)^r / r! (D^{-ν})^r 1`, a Wright function.
pub fn wright_exponential_on_one(
    order: &FractionalOrder,
    alpha: f64,
    t: f64,
    policy: &SeriesPolicy,
) -> Result<SeriesResult> {
    let weight = |r: usize| (-libm::lgamma(r as f64 + 1.0)).exp();
    iterated_series(alpha, t, policy, weight, |p| rl_integral_power(order, p))
}

/// Samples of a function on a mesh starting at 0, with its derivatives at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    t_grid: Vec<f64>,
    values: Vec<f64>,
    deriv0: Vec<f64>,
}

impl SampledFunction {
    pub fn new(t_grid: Vec<f64>, values: Vec<f64>, deriv0: Vec<f64>) -> Result<Self> {
        if t_grid.is_empty() || t_grid[0] != 0.0 {
            return Err(Error::Mesh("the mesh must start at t = 0".into()));
        }
        if t_grid.len() != values.len() {
            return Err(Error::Mesh(format!(
                "{} mesh points but {} values",
                t_grid.len(),
                values.len()
            )));
        }
        if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Mesh("mesh is not strictly increasing".into()));
        }
        Ok(Self {
            t_grid,
            values,
            deriv0,
        })
    }

    /// Samples `f` at `t_j = j h` for `j = 0..=n`.
    pub fn uniform(h: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Mesh(format!("step {h} is not positive")));
        }
        let t_grid: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
        let values = t_grid.iter().map(|&t| f(t)).collect();
        Self::new(t_grid, values, Vec::new())
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn deriv0(&self) -> &[f64] {
        &self.deriv0
    }

    fn uniform_step(&self) -> Result<f64> {
        let n = self.t_grid.len() - 1;
        if n == 0 {
            return Err(Error::Mesh("mesh has a single point".into()));
        }
        let h = self.t_grid[n] / n as f64;
        let uniform = self
            .t_grid
            .iter()
            .enumerate()
            .all(|(j, &t)| (t - j as f64 * h).abs() <= 1e-9 * h.max(t));
        if uniform {
            Ok(h)
        } else {
            Err(Error::Mesh("the L1 scheme needs a uniform mesh".into()))
        }
    }
}

/// `k^{1-ν}` for `k = 0..=n`, with `0^0 = 0` so that `ν = 1` reduces to the
/// backward difference.
fn l1_powers(nu: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| if k == 0 { 0.0 } else { (k as f64).powf(1.0 - nu) })
        .collect()
}

fn l1_at(powers: &[f64], values: &[f64], k: usize) -> f64 {
    let mut acc = CompensatedSum::new();
    for j in 0..k {
        let b = powers[k - j] - powers[k - j - 1];
        acc.add(b * (values[j + 1] - values[j]));
    }
    acc.value()
}

fn l1_setup(order: &FractionalOrder, f: &SampledFunction) -> Result<(f64, Vec<f64>)> {
    order.require_unit("caputo_l1")?;
    let h = f.uniform_step()?;
    let scale = reciprocal_gamma(2.0 - order.nu()) / h.powf(order.nu());
    Ok((scale, l1_powers(order.nu(), f.t_grid.len() - 1)))
}

/// L1 approximation of the Caputo derivative of order `ν ∈ (0, 1]` at
/// `t_grid[t_index]` on a uniform mesh.
pub fn caputo_l1(order: &FractionalOrder, f: &SampledFunction, t_index: usize) -> Result<f64> {
    if t_index < 1 || t_index >= f.t_grid.len() {
        return Err(Error::Mesh(format!(
            "index {t_index} outside 1..{}",
            f.t_grid.len()
        )));
    }
    let (scale, powers) = l1_setup(order, f)?;
    Ok(scale * l1_at(&powers, &f.values, t_index))
}

/// [`caputo_l1`] at every mesh point `t_1, ..., t_n`.
pub fn caputo_l1_all(order: &FractionalOrder, f: &SampledFunction) -> Result<Vec<f64>> {
    let (scale, powers) = l1_setup(order, f)?;
    Ok((1..f.t_grid.len())
        .map(|k| scale * l1_at(&powers, &f.values, k))
        .collect())
}

/// Quadrature weights for `∫_0^t g(s) ds_ν` with
/// `ds_ν = Γ(⌈ν⌉) ds / (Γ(ν) (t - s)^{1-ν})`, using product trapezoidal
/// weights on a uniform mesh of `n` panels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionalWeight {
    nu: FractionalOrder,
    node_weights: Vec<f64>,
}

impl FractionalWeight {
    pub fn uniform(order: &FractionalOrder, t: f64, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Mesh("need at least one panel".into()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain {
                value: t,
                reason: "t must be positive",
            });
        }
        let nu = order.nu();
        let h = t / n as f64;
        let p = |k: usize| (k as f64).powf(nu + 1.0);
        let nf = n as f64;
        let mut a = Vec::with_capacity(n + 1);
        a.push((nf - 1.0).max(0.0).powf(nu + 1.0) - (nf - 1.0 - nu) * nf.powf(nu));
        for j in 1..n {
            a.push(p(n - j + 1) - 2.0 * p(n - j) + p(n - j - 1));
        }
        a.push(1.0);
        let scale =
            h.powf(nu) / (nu * (nu + 1.0)) * reciprocal_gamma(nu) / reciprocal_gamma(order.ceil() as f64);
        let node_weights = a.into_iter().map(|w| (w * scale).max(0.0)).collect();
        Ok(Self {
            nu: *order,
            node_weights,
        })
    }

    pub fn order(&self) -> &FractionalOrder {
        &self.nu
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.node_weights.len() {
            return Err(Error::Mesh(format!(
                "{} values for {} nodes",
                values.len(),
                self.node_weights.len()
            )));
        }
        Ok(self
            .node_weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .collect::<CompensatedSum>()
            .value())
    }
}
