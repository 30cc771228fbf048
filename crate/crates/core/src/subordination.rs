//! Time randomisation by a Wright-distributed variable:
//! `E[exp(-α Ξ t^ν)] = E_ν(-α t^ν)` checked by quadrature over the density.

use std::cell::RefCell;
use std::rc::Rc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fracops::FractionalOrder;
use crate::quadrature::GaussLegendre;
use crate::series::{CompensatedSum, SeriesPolicy, SeriesResult};
use crate::specfun::WrightDensity;

/// Nodes per Gauss-Legendre panel.
pub const PANEL_NODES: usize = 16;
/// Widest panel the tail rule lays down.
pub const MAX_PANEL_WIDTH: f64 = 0.25;
/// Relative density mass allowed beyond the truncation point.
pub const TAIL_TOLERANCE: f64 = 1e-10;

const TAIL_START: f64 = 1.0;
const TAIL_GROWTH: f64 = 1.25;
const TAIL_MAX: f64 = 512.0;

/// Parameters of the expectation together with its quadrature set-up:
/// `[0, quad_upper]` split into `quad_nodes / 16` equal Gauss-Legendre panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubordinationSpec {
    pub alpha: f64,
    pub nu: FractionalOrder,
    pub t: f64,
    pub quad_upper: f64,
    pub quad_nodes: usize,
}

impl SubordinationSpec {
    pub fn new(alpha: f64, nu: FractionalOrder, t: f64, quad_upper: f64, quad_nodes: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("{alpha} is not > 0")));
        }
        nu.require_open_unit("subordination")?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("{t} is not > 0")));
        }
        if !(quad_upper > 0.0 && quad_upper.is_finite()) {
            return Err(Error::invalid("quad_upper", format!("{quad_upper} is not > 0")));
        }
        if quad_nodes < PANEL_NODES || !quad_nodes.is_multiple_of(PANEL_NODES) {
            return Err(Error::invalid(
                "quad_nodes",
                format!("{quad_nodes} is not a positive multiple of {PANEL_NODES}"),
            ));
        }
        Ok(Self {
            alpha,
            nu,
            t,
            quad_upper,
            quad_nodes,
        })
    }

    /// Chooses the truncation point from the density tail: starting at
    /// `U = 1`, `U` grows by a factor 1.25 until the density mass added by
    /// the last step is below `1e-10` of the mass so far.
    pub fn with_tail_rule(alpha: f64, nu: FractionalOrder, t: f64, policy: &SeriesPolicy) -> Result<Self> {
        nu.require_open_unit("subordination")?;
        let upper = tail_upper(&nu, policy)?;
        let panels = (upper / MAX_PANEL_WIDTH).ceil() as usize;
        Self::new(alpha, nu, t, upper, panels * PANEL_NODES)
    }

    fn panels(&self) -> usize {
        self.quad_nodes / PANEL_NODES
    }
}

thread_local! {
    static DENSITIES: RefCell<Vec<(u64, Rc<WrightDensity>)>> = const { RefCell::new(Vec::new()) };
}

/// Most recently used density evaluators kept per thread.
const DENSITY_CACHE_SIZE: usize = 8;

/// A density evaluator for `nu` whose coefficient tables persist across
/// calls on this thread. The multiprecision table for `ν` near 1 runs to
/// thousands of entries and is the dominant cost of a quadrature.
fn shared_density(nu: &FractionalOrder) -> Result<Rc<WrightDensity>> {
    let key = nu.nu().to_bits();
    DENSITIES.with(|cell| {
        let mut cache = cell.borrow_mut();
        if let Some(pos) = cache.iter().position(|(k, _)| *k == key) {
            let entry = cache.remove(pos);
            let density = Rc::clone(&entry.1);
            cache.push(entry);
            return Ok(density);
        }
        let density = Rc::new(WrightDensity::new(nu)?);
        if cache.len() == DENSITY_CACHE_SIZE {
            cache.remove(0);
        }
        cache.push((key, Rc::clone(&density)));
        Ok(density)
    })
}

/// Absolute accuracy asked of each density value. Far in the tail the
/// density is many orders of magnitude below its peak, and resolving it to
/// full relative precision would cost hundreds of extra bits while changing
/// no integral.
const DENSITY_ABS_TOL: f64 = 1e-18;

/// Density values at the nodes of the 16- and 8-point rules on equal panels
/// of `[a, b]`.
struct DensityTable {
    hi: Vec<(f64, f64, f64)>,
    lo: Vec<(f64, f64, f64)>,
    panels: usize,
    converged: bool,
}

impl DensityTable {
    fn new(density: &WrightDensity, a: f64, b: f64, panels: usize, policy: &SeriesPolicy) -> Result<Self> {
        let policy = SeriesPolicy {
            abs_tol: policy.abs_tol.max(DENSITY_ABS_TOL),
            ..*policy
        };
        let width = (b - a) / panels as f64;
        let mut converged = true;
        let mut sample = |rule: &GaussLegendre| -> Result<Vec<(f64, f64, f64)>> {
            let mut out = Vec::with_capacity(panels * rule.len());
            for i in 0..panels {
                let (pa, pb) = (a + i as f64 * width, a + (i + 1) as f64 * width);
                for (x, w) in rule.mapped(pa, pb) {
                    let d = density.evaluate(x, &policy)?;
                    converged &= d.converged;
                    out.push((x, w, d.value));
                }
            }
            Ok(out)
        };
        let hi = sample(&GaussLegendre::new(PANEL_NODES))?;
        let lo = sample(&GaussLegendre::new(PANEL_NODES / 2))?;
        Ok(Self {
            hi,
            lo,
            panels,
            converged,
        })
    }

    /// Integral of `g(ξ) f(ξ)`, with the difference between the 16- and
    /// 8-point rules as error estimate.
    fn integrate(&self, g: impl Fn(f64) -> f64) -> PanelSum {
        let mut total = CompensatedSum::new();
        let mut err = 0.0;
        let mut last_panel = 0.0;
        let (nh, nl) = (self.hi.len() / self.panels, self.lo.len() / self.panels);
        for (ph, pl) in self.hi.chunks(nh).zip(self.lo.chunks(nl)) {
            let sum = |nodes: &[(f64, f64, f64)]| {
                nodes
                    .iter()
                    .map(|&(x, w, d)| w * g(x) * d)
                    .collect::<CompensatedSum>()
                    .value()
            };
            let (v16, v8) = (sum(ph), sum(pl));
            total.add(v16);
            err += (v16 - v8).abs();
            last_panel = v16;
        }
        PanelSum {
            value: total.value(),
            err,
            converged: self.converged,
            last_panel,
        }
    }
}

struct PanelSum {
    value: f64,
    err: f64,
    converged: bool,
    last_panel: f64,
}

fn integrate_density(
    density: &WrightDensity,
    a: f64,
    b: f64,
    panels: usize,
    policy: &SeriesPolicy,
) -> Result<PanelSum> {
    Ok(DensityTable::new(density, a, b, panels, policy)?.integrate(|_| 1.0))
}

fn tail_upper(nu: &FractionalOrder, policy: &SeriesPolicy) -> Result<f64> {
    let density = shared_density(nu)?;
    let mut lower = 0.0;
    let mut upper = TAIL_START;
    let mut mass = 0.0;
    loop {
        let panels = ((upper - lower) / MAX_PANEL_WIDTH).ceil().max(1.0) as usize;
        let seg = integrate_density(&density, lower, upper, panels, policy)?;
        if !seg.converged {
            return Err(Error::Domain {
                value: upper,
                reason: "the Wright density series does not converge below this truncation point",
            });
        }
        mass += seg.value;
        if lower > 0.0 && seg.value.abs() < TAIL_TOLERANCE * mass {
            return Ok(upper);
        }
        if upper >= TAIL_MAX {
            return Err(Error::TailTooLarge {
                upper,
                mass: seg.value.abs() / mass,
            });
        }
        lower = upper;
        upper *= TAIL_GROWTH;
    }
}

/// `∫_0^U exp(-α ξ t^ν) f_Ξ(ξ) dξ` by composite Gauss-Legendre panels.
///
/// Fails with [`Error::TailTooLarge`] when the density mass on the last
/// panel exceeds `1e-10` of the total, i.e. when `U` cuts off too much.
pub fn randomized_exponential(spec: &SubordinationSpec, policy: &SeriesPolicy) -> Result<SeriesResult> {
    let density = shared_density(&spec.nu)?;
    let rate = spec.alpha * spec.t.powf(spec.nu.nu());
    let table = DensityTable::new(&density, 0.0, spec.quad_upper, spec.panels(), policy)?;
    let mass = table.integrate(|_| 1.0);
    if mass.last_panel.abs() > TAIL_TOLERANCE * mass.value.abs() {
        return Err(Error::TailTooLarge {
            upper: spec.quad_upper,
            mass: mass.last_panel.abs() / mass.value.abs(),
        });
    }
    let v = table.integrate(|x| (-rate * x).exp());
    Ok(SeriesResult {
        value: v.value,
        terms_used: spec.quad_nodes,
        converged: v.converged && mass.converged,
        est_error: v.err + mass.last_panel.abs(),
    })
}

/// The randomised time `-(1/α) ln E[exp(-α Ξ t^ν)]`.
pub fn time_substitution(spec: &SubordinationSpec, policy: &SeriesPolicy) -> Result<f64> {
    let e = randomized_exponential(spec, policy)?;
    if !(e.value > 0.0) {
        return Err(Error::Domain {
            value: e.value,
            reason: "the expectation must be positive to take its logarithm",
        });
    }
    Ok(-e.value.ln() / spec.alpha)
}

/// `∫_0^U f_Ξ(ξ) dξ` on panels of width at most 0.25.
pub fn density_mass(nu: &FractionalOrder, upper: f64, policy: &SeriesPolicy) -> Result<SeriesResult> {
    let density = shared_density(nu)?;
    if !(upper > 0.0 && upper.is_finite()) {
        return Err(Error::invalid("upper", "must be positive"));
    }
    let panels = (upper / MAX_PANEL_WIDTH).ceil() as usize;
    let m = integrate_density(&density, 0.0, upper, panels, policy)?;
    Ok(SeriesResult {
        value: m.value,
        terms_used: panels * PANEL_NODES,
        converged: m.converged,
        est_error: m.err,
    })
}
