//! Rectangular `(x, t)` lattices and their CSV / JSON serialisation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// One axis `min:max:count` of a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::invalid("grid", "bounds must be finite"));
        }
        if count < 1 {
            return Err(Error::invalid("grid", "count must be at least 1"));
        }
        if max < min {
            return Err(Error::invalid("grid", format!("max {max} is below min {min}")));
        }
        Ok(Self { min, max, count })
    }

    pub fn point(v: f64) -> Result<Self> {
        Self::new(v, v, 1)
    }

    /// Equally spaced values; the end points are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.max
                } else {
                    self.min + (self.max - self.min) * (i as f64 / n)
                }
            })
            .collect()
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// Parses `a:b:n`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid("grid", format!("`{s}` is not of the form a:b:n"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        Self::new(a, b, n)
    }
}

/// Rectangular evaluation lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub x_count: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
}

impl GridSpec {
    pub fn new(x: Axis, t: Axis) -> Self {
        Self {
            x_min: x.min,
            x_max: x.max,
            x_count: x.count,
            t_min: t.min,
            t_max: t.max,
            t_count: t.count,
        }
    }

    pub fn x_axis(&self) -> Axis {
        Axis {
            min: self.x_min,
            max: self.x_max,
            count: self.x_count,
        }
    }

    pub fn t_axis(&self) -> Axis {
        Axis {
            min: self.t_min,
            max: self.t_max,
            count: self.t_count,
        }
    }

    /// Lattice points in row-major order: `x` outer, `t` inner.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let ts = self.t_axis().values();
        self.x_axis()
            .values()
            .into_iter()
            .flat_map(|x| ts.iter().map(move |&t| (x, t)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.x_count * self.t_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Model name and parameters echoed into the output.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metadata {
    pub model: String,
    pub params: BTreeMap<String, serde_json::Value>,
}

/// Sampled values on a [`GridSpec`] with per-point convergence flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub convergence_flags: Vec<bool>,
    pub metadata: Metadata,
    /// Header of the first column (`x`, or `k` for state indices).
    #[serde(skip)]
    pub x_label: &'static str,
}

#[derive(Serialize)]
struct JsonRow {
    x: f64,
    t: f64,
    value: f64,
    converged: bool,
}

#[derive(Serialize)]
struct JsonField<'a> {
    model: &'a str,
    params: &'a BTreeMap<String, serde_json::Value>,
    grid: &'a GridSpec,
    rows: Vec<JsonRow>,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>, flags: Vec<bool>, metadata: Metadata) -> Result<Self> {
        if values.len() != spec.len() || flags.len() != spec.len() {
            return Err(Error::invalid(
                "grid",
                format!(
                    "{} values / {} flags for {} points",
                    values.len(),
                    flags.len(),
                    spec.len()
                ),
            ));
        }
        Ok(Self {
            spec,
            values,
            convergence_flags: flags,
            metadata,
            x_label: "x",
        })
    }

    pub fn with_x_label(mut self, label: &'static str) -> Self {
        self.x_label = label;
        self
    }

    /// CSV with header `x,t,value,converged` and `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},t,value,converged\n", self.x_label);
        for (i, (x, t)) in self.spec.points().into_iter().enumerate() {
            let x = if self.x_label == "k" {
                format!("{}", x as u64)
            } else {
                format_g17(x)
            };
            let _ = writeln!(
                out,
                "{x},{},{},{}",
                format_g17(t),
                format_g17(self.values[i]),
                self.convergence_flags[i]
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows = self
            .spec
            .points()
            .into_iter()
            .enumerate()
            .map(|(i, (x, t))| JsonRow {
                x,
                t,
                value: self.values[i],
                converged: self.convergence_flags[i],
            })
            .collect();
        let doc = JsonField {
            model: &self.metadata.model,
            params: &self.metadata.params,
            grid: &self.spec,
            rows,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("grid fields serialise");
        s.push('\n');
        s
    }
}

/// Formats `v` with 17 significant digits in the style of C's `%.17g`
/// (which round-trips every f64) and trims trailing zeros.
pub fn format_g17(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
