//! Linear support vector machines fitted by majorization-minimization.
//!
//! Each of the twelve combinations of {hinge, least-squares, squared-hinge,
//! logistic} loss and {2-norm, 1-norm, elastic-net} penalty is minimized by
//! iteratively-reweighted least squares: every step minimizes a quadratic
//! majorizer of the risk, so the (possibly epsilon-smoothed) risk never
//! increases. Least squares with a 2-norm penalty is solved in closed form.
//!
//! ```
//! use irls_svm::{fit, synth, FitOptions, LossKind, PenaltyKind, RiskSpec};
//!
//! let data = synth::default_simulation(200, 1).unwrap();
//! let spec = RiskSpec::new(LossKind::SquaredHinge, PenaltyKind::L2, 0.1, 0.0).unwrap();
//! let result = fit(&spec, &data, &FitOptions::default()).unwrap();
//! assert!(data.accuracy(&result.theta).unwrap() > 0.8);
//! ```

pub mod dataset;
pub mod engine;
pub mod error;
pub mod io;
pub mod linalg;
pub mod loss;
pub mod oracle;
pub mod penalty;
pub mod spec;
pub mod synth;
pub mod verify;

pub use dataset::{build_design_matrix, margins, predict, Dataset, DesignMatrix, Label, ModelParams};
pub use engine::{
    closed_form_ls_l2, fit, irls_step, monitored_risk, risk, smoothed_risk, FitOptions, FitResult, Init,
    TerminationReason,
};
pub use error::{Error, Result, SolveError};
pub use spec::{LossKind, Monitor, PenaltyKind, RiskSpec};
