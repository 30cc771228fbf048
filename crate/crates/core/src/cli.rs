//! Command-line front end: one subcommand per registered model, evaluated on
//! an `(x, t)` lattice and written as CSV or JSON.

use std::io::Write;
use std::path::PathBuf;

use clap::{ArgAction, Args, Command, FromArgMatches, ValueEnum};
use rayon::prelude::*;

use crate::error::Error;
use crate::grid::{Axis, GridField, GridSpec, Metadata};
use crate::registry::{ModelParams, Registry};
use crate::series::SeriesPolicy;

/// Process exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for malformed arguments, invalid parameters and unwritable
/// output paths.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for numerical and domain failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Fractional order
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// Rate of the fractional Poisson process
    #[arg(long, allow_hyphen_values = true)]
    pub rate: Option<f64>,
    /// Exponent of the initial monomial x^beta
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// First special-function parameter
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Second special-function parameter (default 1)
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<f64>,
    /// Scale of the randomised exponential
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Single x value (the argument for ml, wright, tricomi; u for fpp-pgf; k for fpp-pmf)
    #[arg(long, visible_aliases = ["u", "y", "k"], allow_hyphen_values = true, conflicts_with_all = ["grid", "kmax"])]
    pub x: Option<f64>,
    /// x lattice a:b:n
    #[arg(long, allow_hyphen_values = true, conflicts_with = "kmax")]
    pub grid: Option<Axis>,
    /// Single t value
    #[arg(long, allow_hyphen_values = true, conflicts_with = "tgrid")]
    pub t: Option<f64>,
    /// t lattice a:b:n
    #[arg(long, allow_hyphen_values = true)]
    pub tgrid: Option<Axis>,
    /// Tabulate states k = 0..=kmax (fpp-pmf)
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Power of t differentiated by `caputo`
    #[arg(long, allow_hyphen_values = true)]
    pub exponent: Option<f64>,
    /// `exact` power rule or `l1` quadrature (caputo)
    #[arg(long)]
    pub method: Option<String>,
    /// Mesh step of the L1 scheme (caputo, default 1e-3)
    #[arg(long)]
    pub h: Option<f64>,
    /// Operator for `solve`: d2, neg-d4, scalar, shift
    #[arg(long)]
    pub op: Option<String>,
    /// Constant of the scalar operator
    #[arg(long, allow_hyphen_values = true)]
    pub coeff: Option<f64>,
    /// Data for `solve`: one, monomial, sin, exp
    #[arg(long)]
    pub init: Option<String>,
    /// Rate c of exp data e^{c s} (default -1)
    #[arg(long, allow_hyphen_values = true)]
    pub init_rate: Option<f64>,
    /// Stored Taylor terms of sin/exp data (default 256)
    #[arg(long)]
    pub init_terms: Option<usize>,
    /// `ivp` (fractional in t) or `bvp` (fractional in x)
    #[arg(long)]
    pub mode: Option<String>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (default stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Relative truncation tolerance of every series
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Term cap of every series
    #[arg(long)]
    pub max_terms: Option<usize>,
    /// File with further flags, one per line
    #[arg(long, action = ArgAction::Append)]
    pub args_file: Vec<PathBuf>,
}

impl EvalArgs {
    fn params(&self) -> ModelParams {
        ModelParams {
            nu: self.nu,
            rate: self.rate,
            beta: self.beta,
            gamma: self.gamma,
            zeta: self.zeta,
            alpha: self.alpha,
            exponent: self.exponent,
            h: self.h,
            coeff: self.coeff,
            init_rate: self.init_rate,
            init_terms: self.init_terms,
            method: self.method.clone(),
            op: self.op.clone(),
            init: self.init.clone(),
            mode: self.mode.clone(),
        }
    }

    fn policy(&self) -> SeriesPolicy {
        let mut p = SeriesPolicy::default();
        if let Some(r) = self.rel_tol {
            p.rel_tol = r;
        }
        if let Some(m) = self.max_terms {
            p.max_terms = m;
        }
        p
    }

    fn grid(&self) -> Result<GridSpec, Error> {
        let x = match (self.grid, self.x, self.kmax) {
            (Some(g), _, _) => g,
            (None, Some(x), _) => Axis::point(x)?,
            (None, None, Some(k)) => Axis::new(0.0, k as f64, k + 1)?,
            (None, None, None) => Axis::point(0.0)?,
        };
        let t = match (self.tgrid, self.t) {
            (Some(g), _) => g,
            (None, Some(t)) => Axis::point(t)?,
            (None, None) => Axis::point(0.0)?,
        };
        Ok(GridSpec::new(x, t))
    }
}

fn command(registry: &Registry) -> Command {
    let mut cmd = Command::new("fracop")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Tabulate fractional-calculus kernels and operational solutions")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(Command::new("list").about("List the available models"));
    for name in registry.names() {
        // the derived arguments carry the struct's doc comment as `about`,
        // so the model summary is set afterwards
        let sub = EvalArgs::augment_args(Command::new(name).allow_negative_numbers(true))
            .about(registry.summary(name).unwrap_or_default());
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Replaces every `--args-file PATH` by the flags stored in `PATH`.
fn expand_args_files(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let path = if a == "--args-file" {
            Some(it.next().ok_or("--args-file needs a path")?)
        } else {
            a.strip_prefix("--args-file=").map(str::to_string)
        };
        match path {
            None => out.push(a),
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| format!("cannot read {p}: {e}"))?;
                for line in text.lines().map(str::trim) {
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    out.extend(line.split_whitespace().map(str::to_string));
                }
            }
        }
    }
    Ok(out)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

/// Runs the command line with explicit output streams; returns the exit
/// status.
pub fn run_with(args: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let registry = Registry::builtin();
    let args = match expand_args_files(args) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let matches = match command(&registry).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{rendered}")
            } else {
                write!(stdout, "{rendered}")
            };
            return code;
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    if name == "list" {
        for n in registry.names() {
            let _ = writeln!(stdout, "{n:<14} {}", registry.summary(n).unwrap_or_default());
        }
        return EXIT_OK;
    }
    let eval = match EvalArgs::from_arg_matches(sub) {
        Ok(a) => a,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return EXIT_USAGE;
        }
    };
    match evaluate_command(&registry, name, &eval) {
        Ok(field) => {
            let text = match eval.format {
                Format::Csv => field.to_csv(),
                Format::Json => field.to_json(),
            };
            let written = match &eval.out {
                Some(path) => std::fs::write(path, text.as_bytes())
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => EXIT_OK,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    EXIT_USAGE
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Builds the model `name` and evaluates it on the lattice of `args`.
pub fn evaluate_command(registry: &Registry, name: &str, args: &EvalArgs) -> Result<GridField, Error> {
    let policy = args.policy();
    policy.validate()?;
    let params = args.params();
    let model = registry.build(name, &params, &policy)?;
    let spec = args.grid()?;
    let results: Vec<_> = spec
        .points()
        .par_iter()
        .map(|&(x, t)| model.evaluate(x, t, &policy))
        .collect();
    let mut values = Vec::with_capacity(results.len());
    let mut flags = Vec::with_capacity(results.len());
    for r in results {
        let r = r?;
        values.push(r.value);
        flags.push(r.converged);
    }
    let params_json = match serde_json::to_value(&params) {
        Ok(serde_json::Value::Object(map)) => map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Default::default(),
    };
    let metadata = Metadata {
        model: name.to_string(),
        params: params_json,
    };
    let field = GridField::new(spec, values, flags, metadata)?;
    Ok(if name == "fpp-pmf" {
        field.with_x_label("k")
    } else {
        field
    })
}

/// Runs the command line on the process streams.
pub fn run(args: Vec<String>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
