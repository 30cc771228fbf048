//! Operational solutions of linear fractional differential equations.
//!
//! The crate evaluates the kernels of fractional calculus (Mittag-Leffler,
//! Wright and Tricomi functions), applies Caputo and Riemann-Liouville
//! operators to power functions and sampled data, builds operator-series
//! solutions `E_ν(t^ν Θ) g` for constant-coefficient operators `Θ`, and
//! provides closed forms for a set of model problems together with the
//! Wright-subordination identity. A command-line front end tabulates any of
//! these on a grid.
//!
//! ```
//! use fracop::prelude::*;
//!
//! let policy = SeriesPolicy::default();
//! let nu = FractionalOrder::new(0.5).unwrap();
//! let p = HeatPolyParams::new(4.0, nu).unwrap();
//! let f = heat_polynomial(&p, 1.0, 0.1, &policy).unwrap();
//! assert!(f.converged && f.terms_used == 3);
//! ```

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fracops;
pub mod grid;
pub mod models;
pub mod opsolve;
pub mod quadrature;
pub mod registry;
pub mod series;
pub mod specfun;
pub mod subordination;

pub use error::{Error, Result};
pub use series::{CompensatedSum, SeriesPolicy, SeriesResult};

/// The commonly used types and functions.
pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::fracops::{
        caputo_l1, caputo_l1_all, caputo_power, modified_integral_power, operator_exponential_on_one,
        rl_integral_power, wright_exponential_on_one, FractionalOrder, FractionalWeight, PowerTerm,
        SampledFunction,
    };
    pub use crate::models::{
        backward_shift_solution, fpp_pgf, fpp_pmf, heat_polynomial, space_fractional_bvp, vibrating_plate,
        DeltaSequence, FppParams, HeatPolyParams, PmfValue,
    };
    pub use crate::opsolve::{
        apply_operator, evaluate, evaluate_applied, solve_bvp, solve_ivp, AnalyticFunction,
        OperationalSolution, OperatorDescriptor,
    };
    pub use crate::series::{SeriesPolicy, SeriesResult};
    pub use crate::specfun::{
        mittag_leffler, reciprocal_gamma, tricomi_c0, wright, wright_density, MittagLefflerParams,
        WrightParams,
    };
    pub use crate::subordination::{randomized_exponential, time_substitution, SubordinationSpec};
}
