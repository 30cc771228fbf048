//! Named evaluators selected at run time.
//!
//! Every function or model the command line can tabulate implements
//! [`Model`]: a pure map `(x, t) -> SeriesResult`. The [`Registry`] maps a
//! subcommand name to a builder that validates the parameters once and
//! returns the boxed evaluator.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fracops::{caputo_l1, caputo_power, FractionalOrder, PowerTerm, SampledFunction};
use crate::models::{
    fpp_pgf, fpp_pmf, heat_polynomial, space_fractional_bvp, vibrating_plate, FppParams, HeatPolyParams,
};
use crate::opsolve::{
    evaluate, solve_bvp, solve_ivp, AnalyticFunction, FractionalVariable, OperationalSolution,
    OperatorDescriptor,
};
use crate::series::{SeriesPolicy, SeriesResult};
use crate::specfun::{mittag_leffler, tricomi_c0, wright, MittagLefflerParams, WrightParams};
use crate::subordination::{randomized_exponential, SubordinationSpec};

/// A function of `(x, t)` evaluated under a series policy.
pub trait Model: Send + Sync {
    fn name(&self) -> &'static str;

    fn evaluate(&self, x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult>;
}

/// Raw parameters collected from the command line. Builders pick the ones
/// they need and reject missing required values.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelParams {
    pub nu: Option<f64>,
    pub rate: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub zeta: Option<f64>,
    pub alpha: Option<f64>,
    pub exponent: Option<f64>,
    pub h: Option<f64>,
    pub coeff: Option<f64>,
    pub init_rate: Option<f64>,
    pub init_terms: Option<usize>,
    pub method: Option<String>,
    pub op: Option<String>,
    pub init: Option<String>,
    pub mode: Option<String>,
}

fn require(v: Option<f64>, name: &'static str) -> Result<f64> {
    v.ok_or_else(|| Error::invalid(name, format!("--{name} is required")))
}

impl ModelParams {
    fn order(&self) -> Result<FractionalOrder> {
        FractionalOrder::new(require(self.nu, "nu")?)
    }
}

type Builder = fn(&ModelParams, &SeriesPolicy) -> Result<Box<dyn Model>>;

struct Entry {
    summary: &'static str,
    build: Builder,
}

/// Name-to-builder table of every evaluator.
pub struct Registry {
    entries: BTreeMap<&'static str, Entry>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, summary: &'static str, build: Builder) {
        self.entries.insert(name, Entry { summary, build });
    }

    /// All evaluators shipped with the crate.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("ml", "Mittag-Leffler E_{gamma,zeta}(x)", build_ml);
        r.register("wright", "Wright function phi(gamma, zeta; x)", build_wright);
        r.register("tricomi", "Tricomi C_0(x)", build_tricomi);
        r.register("caputo", "Caputo derivative of t^exponent at t", build_caputo);
        r.register("heatpoly", "fractional heat polynomial f(x, t)", build_heatpoly);
        r.register("plate", "vibrating plate sin(x) E_nu(-t^nu)", build_plate);
        r.register(
            "spacebvp",
            "space-fractional BVP e^{-t} E_nu(-x^nu)",
            build_spacebvp,
        );
        r.register(
            "fpp-pmf",
            "fractional Poisson P(N(t) = k), k on the x axis",
            build_fpp_pmf,
        );
        r.register(
            "fpp-pgf",
            "fractional Poisson generating function at u = x",
            build_fpp_pgf,
        );
        r.register(
            "subordination",
            "E[exp(-alpha Xi t^nu)] by quadrature",
            build_subordination,
        );
        r.register(
            "solve",
            "operational series solution E_nu(s^nu Theta) g",
            build_solve,
        );
        r
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn summary(&self, name: &str) -> Option<&'static str> {
        self.entries.get(name).map(|e| e.summary)
    }

    pub fn build(&self, name: &str, params: &ModelParams, policy: &SeriesPolicy) -> Result<Box<dyn Model>> {
        let entry = self
            .entries
            .get(name)
            .ok_or_else(|| Error::invalid("model", format!("unknown model `{name}`")))?;
        (entry.build)(params, policy)
    }
}

struct Ml(MittagLefflerParams);

impl Model for Ml {
    fn name(&self) -> &'static str {
        "ml"
    }
    fn evaluate(&self, x: f64, _t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        mittag_leffler(&self.0, x, policy)
    }
}

fn build_ml(p: &ModelParams, _: &SeriesPolicy) -> Result<Box<dyn Model>> {
    let gamma = require(p.gamma.or(p.nu), "gamma")?;
    Ok(Box::new(Ml(MittagLefflerParams::new(
        gamma,
        p.zeta.unwrap_or(1.0),
    )?)))
}

struct Wright(WrightParams);

impl Model for Wright {
    fn name(&self) -> &'static str {
        "wright"
    }
    fn evaluate(&self, x: f64, _t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        wright(&self.0, x, policy)
    }
}

fn build_wright(p: &ModelParams, _: &SeriesPolicy) -> Result<Box<dyn Model>> {
    let gamma = require(p.gamma, "gamma")?;
    Ok(Box::new(Wright(WrightParams::new(gamma, p.zeta.unwrap_or(1.0))?)))
}

struct Tricomi;

impl Model for Tricomi {
    fn name(&self) -> &'static str {
        "tricomi"
    }
    fn evaluate(&self, x: f64, _t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        tricomi_c0(x, policy)
    }
}

fn build_tricomi(_: &ModelParams, _: &SeriesPolicy) -> Result<Box<dyn Model>> {
    Ok(Box::new(Tricomi))
}

enum CaputoMethod {
    Exact,
    L1 { h: f64 },
}

struct Caputo {
    order: FractionalOrder,
    power: PowerTerm,
    method: CaputoMethod,
}

impl Model for Caputo {
    fn name(&self) -> &'static str {
        "caputo"
    }

    fn evaluate(&self, _x: f64, t: f64, _policy: &SeriesPolicy) -> Result<SeriesResult> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain {
                value: t,
                reason: "t must be finite and >= 0",
            });
        }
        match self.method {
            CaputoMethod::Exact => {
                let v = caputo_power(&self.order, &self.power)?.map_or(0.0, |q| q.eval(t));
                Ok(SeriesResult::exact(v, 1))
            }
            CaputoMethod::L1 { h } => {
                let n = (t / h).round() as usize;
                if n == 0 {
                    return Err(Error::Mesh(format!("t = {t} is below one step h = {h}")));
                }
                let step = t / n as f64;
                let f = SampledFunction::uniform(step, n, |s| self.power.eval(s))?;
                let v = caputo_l1(&self.order, &f, n)?;
                Ok(SeriesResult {
                    value: v,
                    terms_used: n,
                    converged: true,
                    est_error: step.powf(2.0 - self.order.nu()),
                })
            }
        }
    }
}

fn build_caputo(p: &ModelParams, _: &SeriesPolicy) -> Result<Box<dyn Model>> {
    let order = p.order()?;
    let power = PowerTerm::new(1.0, require(p.exponent, "exponent")?)?;
    let method = match p.method.as_deref().unwrap_or("exact") {
        "exact" => {
            order.require_up_to_two("caputo")?;
            CaputoMethod::Exact
        }
        "l1" => {
            order.require_unit("caputo_l1")?;
            let h = p.h.unwrap_or(1e-3);
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid("h", format!("{h} is not > 0")));
            }
            CaputoMethod::L1 { h }
        }
        other => return Err(Error::invalid("method", format!("`{other}` is not exact or l1"))),
    };
    Ok(Box::new(Caputo { order, power, method }))
}

struct HeatPoly(HeatPolyParams);

impl Model for HeatPoly {
    fn name(&self) -> &'static str {
        "heatpoly"
    }
    fn evaluate(&self, x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        heat_polynomial(&self.0, x, t, policy)
    }
}

fn build_heatpoly(p: &ModelParams, _: &SeriesPolicy) -> Result<Box<dyn Model>> {
    Ok(Box::new(HeatPoly(HeatPolyParams::new(
        require(p.beta, "beta")?,
        p.order()?,
    )?)))
}

struct Plate(FractionalOrder);

impl Model for Plate {
    fn name(&self) -> &'static str {
        "plate"
    }
    fn evaluate(&self, x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        vibrating_plate(&self.0, x, t, policy)
    }
}

fn build_plate(p: &ModelParams, _: &SeriesPolicy) -> Result<Box<dyn Model>> {
    let nu = p.order()?;
    nu.require_up_to_two("plate")?;
    Ok(Box::new(Plate(nu)))
}

struct SpaceBvp(FractionalOrder);

impl Model for SpaceBvp {
    fn name(&self) -> &'static str {
        "spacebvp"
    }
    fn evaluate(&self, x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        space_fractional_bvp(&self.0, x, t, policy)
    }
}

fn build_spacebvp(p: &ModelParams, _: &SeriesPolicy) -> Result<Box<dyn Model>> {
    let nu = p.order()?;
    nu.require_up_to_two("spacebvp")?;
    Ok(Box::new(SpaceBvp(nu)))
}

fn fpp_params(p: &ModelParams) -> Result<FppParams> {
    FppParams::new(require(p.rate, "rate")?, p.order()?)
}

struct FppPmf(FppParams);

impl Model for FppPmf {
    fn name(&self) -> &'static str {
        "fpp-pmf"
    }
    /// `x` is the state index `k`.
    fn evaluate(&self, x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        if !(x >= 0.0) || x != x.floor() {
            return Err(Error::invalid("k", format!("{x} is not a non-negative integer")));
        }
        Ok(fpp_pmf(&self.0, x as usize, t, policy)?.raw)
    }
}

fn build_fpp_pmf(p: &ModelParams, _: &SeriesPolicy) -> Result<Box<dyn Model>> {
    Ok(Box::new(FppPmf(fpp_params(p)?)))
}

struct FppPgf(FppParams);

impl Model for FppPgf {
    fn name(&self) -> &'static str {
        "fpp-pgf"
    }
    fn evaluate(&self, x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        fpp_pgf(&self.0, x, t, policy)
    }
}

fn build_fpp_pgf(p: &ModelParams, _: &SeriesPolicy) -> Result<Box<dyn Model>> {
    Ok(Box::new(FppPgf(fpp_params(p)?)))
}

struct Subordination {
    alpha: f64,
    nu: FractionalOrder,
}

impl Model for Subordination {
    fn name(&self) -> &'static str {
        "subordination"
    }
    fn evaluate(&self, _x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        let spec = SubordinationSpec::with_tail_rule(self.alpha, self.nu, t, policy)?;
        randomized_exponential(&spec, policy)
    }
}

fn build_subordination(p: &ModelParams, _: &SeriesPolicy) -> Result<Box<dyn Model>> {
    let nu = p.order()?;
    nu.require_open_unit("subordination")?;
    let alpha = require(p.alpha, "alpha")?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", format!("{alpha} is not > 0")));
    }
    Ok(Box::new(Subordination { alpha, nu }))
}

struct Solve(OperationalSolution);

impl Model for Solve {
    fn name(&self) -> &'static str {
        "solve"
    }
    fn evaluate(&self, x: f64, t: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
        evaluate(&self.0, x, t, policy)
    }
}

/// Initial or boundary data by name: `one`, `monomial` (needs `beta`),
/// `sin` or `exp` (`e^{c s}` with `c = init_rate`, default -1).
fn initial_data(p: &ModelParams) -> Result<AnalyticFunction> {
    let n = p.init_terms.unwrap_or(256);
    match p.init.as_deref().unwrap_or("one") {
        "one" => Ok(AnalyticFunction::constant(1.0)),
        "monomial" => AnalyticFunction::monomial(require(p.beta, "beta")?),
        "sin" => Ok(AnalyticFunction::sin(n)),
        "exp" => Ok(AnalyticFunction::exp_scaled(p.init_rate.unwrap_or(-1.0), n)),
        other => Err(Error::invalid(
            "init",
            format!("`{other}` is not one of one, monomial, sin, exp"),
        )),
    }
}

fn build_solve(p: &ModelParams, policy: &SeriesPolicy) -> Result<Box<dyn Model>> {
    let order = p.order()?;
    let op = OperatorDescriptor::parse(p.op.as_deref().unwrap_or("d2"), p.coeff.unwrap_or(1.0))?;
    let g = initial_data(p)?;
    let mode: FractionalVariable = p.mode.as_deref().unwrap_or("ivp").parse()?;
    let sol = match mode {
        FractionalVariable::Time => solve_ivp(&order, &op, &g, policy)?,
        FractionalVariable::Space => solve_bvp(&order, &op, &g, policy)?,
    };
    Ok(Box::new(Solve(sol)))
}
