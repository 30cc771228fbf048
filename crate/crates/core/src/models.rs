//! Closed-form solutions of four model problems: fractional heat
//! polynomials, the fractional vibrating plate, a space-fractional boundary
//! value problem and the fractional Poisson process.

use rug::ops::Pow;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fracops::FractionalOrder;
use crate::series::{
    mp_ln_abs, sum_power_series, Coefficients, CompensatedSum, LogTerm, SeriesPolicy, SeriesResult, StopRule,
    MAX_PRECISION_BITS,
};
use crate::specfun::{
    gamma_ratio, is_gamma_pole, ln_gamma, mittag_leffler, mp_reciprocal_gamma, MittagLefflerParams,
};

/// Largest `λ t^ν` for which the pmf series is evaluated.
pub const FPP_ARGUMENT_LIMIT: f64 = 50.0;

fn require_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            value: v,
            reason: match name {
                "t" => "t must be finite and >= 0",
                _ => "x must be finite and >= 0",
            },
        })
    }
}

/// Initial exponent `β` and order `ν ∈ (0, 1]` of a fractional heat
/// polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatPolyParams {
    beta: f64,
    nu: FractionalOrder,
}

impl HeatPolyParams {
    pub fn new(beta: f64, nu: FractionalOrder) -> Result<Self> {
        if !beta.is_finite() || (beta < 0.0 && beta == beta.floor()) {
            return Err(Error::invalid("beta", format!("{beta} is a negative integer")));
        }
        nu.require_unit("heat_polynomial")?;
        Ok(Self { beta, nu })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nu(&self) -> &FractionalOrder {
        &self.nu
    }

    fn is_polynomial(&self) -> bool {
        self.beta >= 0.0 && self.beta == self.beta.floor()
    }
}

/// Coefficients `Γ(β+1) / (Γ(νr+1) Γ(β+1-2r))` of the heat series in
/// `y = t^ν / x²`.
struct HeatCoeffs {
    beta: f64,
    nu: f64,
}

impl Coefficients for HeatCoeffs {
    fn log_coeff(&self, r: usize) -> Option<LogTerm> {
        let b = self.beta + 1.0 - 2.0 * r as f64;
        if is_gamma_pole(b) {
            return None;
        }
        let (l0, s0) = ln_gamma(self.beta + 1.0);
        let (l1, s1) = ln_gamma(self.nu * r as f64 + 1.0);
        let (l2, s2) = ln_gamma(b);
        let cond = l0.abs() + l1.abs() + l2.abs() + b.abs() * b.abs().max(1.0).ln();
        Some(LogTerm::new(l0 - l1 - l2, s0 * s1 * s2, cond))
    }

    fn mp_coeff(&self, r: usize, prec: u32) -> Float {
        let beta1: Float = Float::with_val(prec, self.beta) + 1;
        let b = Float::with_val(prec, &beta1 - 2 * r as u32);
        let a = Float::with_val(prec, self.nu) * r as u32 + 1;
        beta1.gamma() * mp_reciprocal_gamma(a) * mp_reciprocal_gamma(b)
    }
}

/// Fractional heat polynomial
/// `f(x,t) = sum_r Γ(β+1) t^{νr} x^{β-2r} / (Γ(νr+1) Γ(β+1-2r))`.
///
/// For a non-negative integer `β` the sum is finite. Otherwise it is summed
/// under `policy` and `x` must be positive. For non-integer `β` the series
/// diverges (`1/Γ(β+1-2r)` grows factorially), so it is normally reported as
/// not converged; when `t^ν / x²` is tiny the leading terms can shrink fast
/// enough for the stop rule to accept an optimally truncated asymptotic sum.
pub fn heat_polynomial(p: &HeatPolyParams, x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
    require_nonneg("t", t)?;
    if !x.is_finite() {
        return Err(Error::Domain {
            value: x,
            reason: "x must be finite",
        });
    }
    let nu = p.nu.nu();
    let beta = p.beta;
    if p.is_polynomial() {
        let n = (beta / 2.0).floor() as usize;
        let mut sum = CompensatedSum::new();
        let mut abs = 0.0;
        for r in 0..=n {
            let e = beta - 2.0 * r as f64;
            let rn = nu * r as f64;
            let time = if r == 0 {
                1.0
            } else {
                t.powf(rn) * gamma_ratio(1.0, rn + 1.0)
            };
            let term = gamma_ratio(beta + 1.0, e + 1.0) * x.powi(e as i32) * time;
            sum.add(term);
            abs += term.abs();
        }
        return Ok(SeriesResult {
            value: sum.value(),
            terms_used: n + 1,
            converged: true,
            est_error: abs * f64::EPSILON,
        });
    }
    if !(x > 0.0) {
        return Err(Error::Domain {
            value: x,
            reason: "non-integer beta needs x > 0",
        });
    }
    let lead = x.powf(beta);
    if t == 0.0 {
        return Ok(SeriesResult::exact(lead, 1));
    }
    let y = t.powf(nu) / (x * x);
    let r = sum_power_series(&HeatCoeffs { beta, nu }, y, policy)?;
    Ok(r.scaled(lead))
}

/// `sin(x) E_ν(-t^ν)`, the plate deflection for `ν ∈ (0, 2]`.
pub fn vibrating_plate(nu: &FractionalOrder, x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
    nu.require_up_to_two("vibrating_plate")?;
    require_nonneg("t", t)?;
    let ml = MittagLefflerParams::one_parameter(nu.nu())?;
    Ok(mittag_leffler(&ml, -t.powf(nu.nu()), policy)?.scaled(x.sin()))
}

/// `e^{-t} E_ν(-x^ν)` for `x >= 0` and `ν ∈ (0, 2]`.
pub fn space_fractional_bvp(
    nu: &FractionalOrder,
    x: f64,
    t: f64,
    policy: &SeriesPolicy,
) -> Result<SeriesResult> {
    nu.require_up_to_two("space_fractional_bvp")?;
    require_nonneg("x", x)?;
    let ml = MittagLefflerParams::one_parameter(nu.nu())?;
    Ok(mittag_leffler(&ml, -x.powf(nu.nu()), policy)?.scaled((-t).exp()))
}

/// Rate `λ > 0` and order `ν ∈ (0, 1]` of a fractional Poisson process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FppParams {
    rate: f64,
    nu: FractionalOrder,
}

impl FppParams {
    pub fn new(rate: f64, nu: FractionalOrder) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid("rate", format!("{rate} is not > 0")));
        }
        nu.require_unit("fractional Poisson process")?;
        Ok(Self { rate, nu })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn nu(&self) -> &FractionalOrder {
        &self.nu
    }

    /// `λ t^ν`.
    pub fn scaled_time(&self, t: f64) -> f64 {
        self.rate * t.powf(self.nu.nu())
    }
}

/// A state probability together with its clamped companion.
///
/// Cancellation in the alternating series can leave a tiny negative value;
/// `raw.value` keeps it and `clamped` is `max(raw.value, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PmfValue {
    pub raw: SeriesResult,
    pub clamped: f64,
}

impl PmfValue {
    fn new(raw: SeriesResult) -> Self {
        Self {
            raw,
            clamped: raw.value.max(0.0),
        }
    }

    pub fn is_negative(&self) -> bool {
        self.raw.value < 0.0
    }
}

/// Coefficients of `p_k = z^k sum_j (-z)^j binom(k+j, k) / Γ(ν(k+j)+1)`
/// with the prefactor `z^k` folded in.
struct PmfCoeffs {
    k: usize,
    nu: f64,
    z: f64,
}

impl Coefficients for PmfCoeffs {
    fn log_coeff(&self, j: usize) -> Option<LogTerm> {
        let n = (self.k + j) as f64;
        let parts = [
            libm::lgamma(n + 1.0),
            libm::lgamma(self.k as f64 + 1.0),
            libm::lgamma(j as f64 + 1.0),
        ];
        let lb = parts[0] - parts[1] - parts[2];
        let (lg, sign) = ln_gamma(self.nu * n + 1.0);
        let lz = self.k as f64 * self.z.ln();
        let cond = parts.iter().sum::<f64>() + lg.abs() + lz.abs();
        Some(LogTerm::new(lb - lg + lz, sign, cond))
    }

    fn mp_coeff(&self, j: usize, prec: u32) -> Float {
        let n = (self.k + j) as u32;
        let fact = |m: u32| Float::with_val(prec, Float::factorial(m));
        let binom = fact(n) / (fact(j as u32) * fact(self.k as u32));
        let a = Float::with_val(prec, self.nu) * n + 1;
        let zk = Float::with_val(prec, self.z).pow(self.k as u32);
        binom * mp_reciprocal_gamma(a) * zk
    }
}

fn check_fpp_domain(p: &FppParams, t: f64) -> Result<f64> {
    require_nonneg("t", t)?;
    let z = p.scaled_time(t);
    if z > FPP_ARGUMENT_LIMIT {
        return Err(Error::Domain {
            value: z,
            reason: "rate * t^nu beyond the cancellation limit 50",
        });
    }
    Ok(z)
}

/// `P(N(t) = k)` for the fractional Poisson process, summed from the tail
/// series `sum_{r>=k} (-λt^ν)^r binom(r, k) (-1)^k / Γ(νr+1)`.
pub fn fpp_pmf(p: &FppParams, k: usize, t: f64, policy: &SeriesPolicy) -> Result<PmfValue> {
    let z = check_fpp_domain(p, t)?;
    if z == 0.0 {
        return Ok(PmfValue::new(SeriesResult::exact(
            if k == 0 { 1.0 } else { 0.0 },
            1,
        )));
    }
    let coeffs = PmfCoeffs { k, nu: p.nu.nu(), z };
    Ok(PmfValue::new(sum_power_series(&coeffs, -z, policy)?))
}

/// Probability generating function `E_ν(-λ(1-u)t^ν)` for `|u| <= 1`.
pub fn fpp_pgf(p: &FppParams, u: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
    if !(u.abs() <= 1.0) {
        return Err(Error::Domain {
            value: u,
            reason: "the generating function is evaluated for |u| <= 1",
        });
    }
    require_nonneg("t", t)?;
    let ml = MittagLefflerParams::one_parameter(p.nu.nu())?;
    mittag_leffler(&ml, -p.rate * (1.0 - u) * t.powf(p.nu.nu()), policy)
}

/// Probabilities `p_0, p_1, ...` up to the first `k` beyond the bulk where
/// `p_k < tail_tol`, capped at `k_cap`.
pub fn fpp_pmf_adaptive(
    p: &FppParams,
    t: f64,
    tail_tol: f64,
    k_cap: usize,
    policy: &SeriesPolicy,
) -> Result<Vec<PmfValue>> {
    let mut out: Vec<PmfValue> = Vec::new();
    for k in 0..=k_cap {
        let v = fpp_pmf(p, k, t, policy)?;
        let decreasing = out.last().is_none_or(|prev| v.clamped <= prev.clamped);
        out.push(v);
        if v.clamped < tail_tol && decreasing {
            break;
        }
    }
    Ok(out)
}

/// The Kronecker sequence `δ_{k - offset, 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeltaSequence {
    pub offset: usize,
}

impl DeltaSequence {
    pub fn at(offset: usize) -> Self {
        Self { offset }
    }

    pub fn value(&self, k: usize) -> f64 {
        if k == self.offset {
            1.0
        } else {
            0.0
        }
    }

    /// `B δ_{k-j,0} = δ_{k-j-1,0}`.
    pub fn backward_shift(&self) -> Self {
        Self {
            offset: self.offset + 1,
        }
    }

    /// The sequence truncated to indices `0..=k_max`.
    pub fn to_vec(&self, k_max: usize) -> Vec<f64> {
        (0..=k_max).map(|k| self.value(k)).collect()
    }
}

/// `p_0, ..., p_{K}` from the operator series
/// `sum_r (-λt^ν)^r / Γ(νr+1) (1-B)^r δ_{k,0}`, expanding `(1-B)^r` on the
/// delta sequence step by step.
///
/// The expansion is carried out in multiprecision because the weights and
/// the binomial entries of `(1-B)^r δ` cancel strongly; the working precision
/// is raised until it covers the largest intermediate term.
pub fn backward_shift_solution(
    p: &FppParams,
    t: f64,
    k_max: usize,
    policy: &SeriesPolicy,
) -> Result<Vec<SeriesResult>> {
    policy.validate()?;
    let z = check_fpp_domain(p, t)?;
    let delta = DeltaSequence::at(0);
    if z == 0.0 {
        return Ok(delta
            .to_vec(k_max)
            .into_iter()
            .map(|v| SeriesResult::exact(v, 1))
            .collect());
    }
    let nu = p.nu.nu();
    // rough peak of |w_r| binom(r, k) to seed the working precision
    let mut peak = 0.0f64;
    for r in 0..policy.max_terms.min(20_000) {
        let rf = r as f64;
        let lw = rf * z.ln() - libm::lgamma(nu * rf + 1.0);
        let lb = libm::lgamma(rf + 1.0) - 2.0 * libm::lgamma(rf / 2.0 + 1.0);
        peak = peak.max(lw + lb);
        if lw + lb < peak - 100.0 && r > k_max {
            break;
        }
    }
    let mut bits = (53.0 + 64.0 + peak.max(0.0) / std::f64::consts::LN_2) as u32;
    loop {
        if bits > MAX_PRECISION_BITS {
            return Err(Error::PrecisionBudget {
                bits,
                limit: MAX_PRECISION_BITS,
            });
        }
        let (out, needed) = shift_expansion(z, nu, k_max, bits, delta, policy);
        if needed <= bits {
            return Ok(out);
        }
        bits = needed;
    }
}

fn shift_expansion(
    z: f64,
    nu: f64,
    k_max: usize,
    bits: u32,
    delta: DeltaSequence,
    policy: &SeriesPolicy,
) -> (Vec<SeriesResult>, u32) {
    let n = k_max + 1;
    let mut seq: Vec<Float> = delta
        .to_vec(k_max)
        .into_iter()
        .map(|v| Float::with_val(bits, v))
        .collect();
    let mut sums: Vec<Float> = (0..n).map(|_| Float::with_val(bits, 0)).collect();
    let mut peaks = vec![f64::NEG_INFINITY; n];
    let mut rules: Vec<StopRule> = (0..n).map(|_| StopRule::new(policy)).collect();
    let mut done = vec![false; n];
    let mut used = vec![policy.max_terms; n];
    let mut last_ln = vec![f64::NEG_INFINITY; n];
    let neg_z = -Float::with_val(bits, z);
    let mut power = Float::with_val(bits, 1);

    for r in 0..policy.max_terms {
        if r > 0 {
            power *= &neg_z;
            // (1 - B) applied in place, from the top index down
            for k in (1..n).rev() {
                let prev = seq[k - 1].clone();
                seq[k] -= &prev;
            }
        }
        let a = Float::with_val(bits, nu) * r as u32 + 1;
        let weight = Float::with_val(bits, &power * mp_reciprocal_gamma(a));
        for k in 0..n {
            if done[k] {
                continue;
            }
            let term = Float::with_val(bits, &weight * &seq[k]);
            let ln_t = mp_ln_abs(&term);
            sums[k] += &term;
            peaks[k] = peaks[k].max(ln_t);
            last_ln[k] = ln_t;
            // entries below the diagonal are identically zero until r = k
            if r >= k && rules[k].observe_ln(ln_t, mp_ln_abs(&sums[k])) {
                done[k] = true;
                used[k] = r + 1;
            }
        }
        if done.iter().all(|&d| d) {
            break;
        }
    }

    let mut needed = 0u32;
    let out = (0..n)
        .map(|k| {
            let value = sums[k].to_f64();
            let lost = ((peaks[k] - mp_ln_abs(&sums[k])) / std::f64::consts::LN_2).max(0.0);
            let want = (53.0 + 32.0 + lost).ceil();
            needed = needed.max(if want.is_finite() { want as u32 } else { bits });
            if done[k] {
                SeriesResult {
                    value,
                    terms_used: used[k],
                    converged: true,
                    est_error: last_ln[k].exp() + value.abs() * f64::EPSILON,
                }
            } else {
                SeriesResult::not_converged(value, policy)
            }
        })
        .collect();
    (out, needed)
}
