//! IRLS updates for the twelve loss x penalty combinations and the fit loop.
//!
//! Every update minimizes a quadratic majorizer of the (possibly smoothed)
//! risk anchored at the current iterate, so each step solves one
//! `(q+1) x (q+1)` positive-definite system:
//!
//! | loss          | matrix                       | right-hand side        |
//! |---------------|------------------------------|------------------------|
//! | hinge         | `Y'WY + n C`                 | `Y'W (gamma + 1)`      |
//! | least squares | `Y'Y + n C`                  | `Y'1`                  |
//! | squared hinge | `Y'Y + n C`                  | `Y'r`                  |
//! | logistic      | `Y'Y + 8n C`                 | `Y'm + 4 Y'pi`         |
//!
//! where `C = lambda Ibar + (mu/2) Omega(beta)` keeps only the terms the
//! penalty uses.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{build_design_matrix, margins, Dataset, DesignMatrix, ModelParams};
use crate::error::{Error, Result, SolveError};
use crate::linalg::{gram, solve_spd, weighted_gram, weighted_rhs, JitterPolicy, SymmetricSystem};
use crate::loss::{self, average_loss, hinge_state, logistic_state, smoothed_average_loss, squared_hinge_state};
use crate::penalty::{penalty_majorizer_constant, penalty_quadratic, penalty_value, smoothed_penalty_value};
use crate::spec::{LossKind, Monitor, RiskSpec};

pub const DEFAULT_MAX_ITERATIONS: usize = 50;
pub const DEFAULT_RISK_TOLERANCE: f64 = 1e-8;
/// Smallest ridge constant used for the least-squares warm start.
pub const WARM_START_MIN_RIDGE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zero,
    /// Ridge least-squares solution with constant `max(lambda, 1e-3)`.
    WarmStartLsL2,
    Explicit(ModelParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop once the monitored risk changes by at most
    /// `risk_tolerance * (1 + |previous|)`; zero disables early stopping.
    pub risk_tolerance: f64,
    pub init: Init,
    /// Override for the monitored risk; `None` uses `RiskSpec::monitor`.
    pub monitor: Option<Monitor>,
    pub jitter: JitterPolicy,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            risk_tolerance: DEFAULT_RISK_TOLERANCE,
            init: Init::WarmStartLsL2,
            monitor: None,
            jitter: JitterPolicy::default(),
        }
    }
}

impl FitOptions {
    /// Fixed iteration count from a zero start, no early stopping.
    pub fn fixed(iterations: usize) -> Self {
        Self {
            max_iterations: iterations,
            risk_tolerance: 0.0,
            init: Init::Zero,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    MaxIterations,
    RiskTolerance,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta: ModelParams,
    /// Risk at every recorded iterate, starting with the initial point.
    pub exact_risk_trajectory: Vec<f64>,
    pub smoothed_risk_trajectory: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub termination_reason: TerminationReason,
    pub monitor: Monitor,
    /// Number of steps whose solve needed diagonal jitter.
    pub jittered_steps: usize,
}

impl FitResult {
    pub fn monitored_trajectory(&self) -> &[f64] {
        match self.monitor {
            Monitor::Exact => &self.exact_risk_trajectory,
            Monitor::Smoothed => &self.smoothed_risk_trajectory,
        }
    }

    pub fn final_exact_risk(&self) -> f64 {
        *self.exact_risk_trajectory.last().expect("trajectory is never empty")
    }

    pub fn final_smoothed_risk(&self) -> f64 {
        *self.smoothed_risk_trajectory.last().expect("trajectory is never empty")
    }

    pub fn final_monitored_risk(&self) -> f64 {
        *self.monitored_trajectory().last().expect("trajectory is never empty")
    }
}

pub(crate) fn risk_at_margins(spec: &RiskSpec, margins: &DVector<f64>, beta: &DVector<f64>) -> Result<f64> {
    Ok(average_loss(spec.loss, margins)? + penalty_value(spec.penalty, beta, spec.lambda(), spec.mu()))
}

pub(crate) fn smoothed_risk_at_margins(spec: &RiskSpec, margins: &DVector<f64>, beta: &DVector<f64>) -> Result<f64> {
    Ok(smoothed_average_loss(spec.loss, margins, spec.epsilon)?
        + smoothed_penalty_value(spec.penalty, beta, spec.lambda(), spec.mu(), spec.epsilon))
}

/// Average loss plus penalty.
pub fn risk(spec: &RiskSpec, theta: &ModelParams, dataset: &Dataset) -> Result<f64> {
    risk_at_margins(spec, &dataset.margins(theta)?, &theta.beta)
}

/// Risk with every absolute value replaced by `sqrt(u^2 + eps)`.
pub fn smoothed_risk(spec: &RiskSpec, theta: &ModelParams, dataset: &Dataset) -> Result<f64> {
    smoothed_risk_at_margins(spec, &dataset.margins(theta)?, &theta.beta)
}

pub fn monitored_risk(spec: &RiskSpec, monitor: Monitor, theta: &ModelParams, dataset: &Dataset) -> Result<f64> {
    match monitor {
        Monitor::Exact => risk(spec, theta, dataset),
        Monitor::Smoothed => smoothed_risk(spec, theta, dataset),
    }
}

fn add_scaled_diagonal(matrix: &mut DMatrix<f64>, diag: &DVector<f64>, scale: f64) {
    for (i, d) in diag.iter().enumerate() {
        matrix[(i, i)] += scale * d;
    }
}

/// Normal equations of the majorizer anchored at `theta`.
pub fn assemble_system(spec: &RiskSpec, design: &DesignMatrix, theta: &ModelParams) -> Result<SymmetricSystem> {
    let m = margins(design, theta)?;
    let n = design.n() as f64;
    let penalty = penalty_quadratic(spec.penalty, &theta.beta, spec.lambda(), spec.mu(), spec.epsilon).total();
    let ones = DVector::from_element(design.n(), 1.0);

    let (mut matrix, rhs, penalty_scale) = match spec.loss {
        LossKind::Hinge => {
            let state = hinge_state(&m, spec.epsilon);
            (
                weighted_gram(design, &state.weights)?,
                weighted_rhs(design, &state.weights, &state.targets)?,
                n,
            )
        }
        LossKind::LeastSquares => (gram(design), design.matrix().tr_mul(&ones), n),
        LossKind::SquaredHinge => {
            let state = squared_hinge_state(&m);
            (gram(design), design.matrix().tr_mul(&state.targets), n)
        }
        LossKind::Logistic => {
            let state = logistic_state(&m);
            let rhs = design.matrix().tr_mul(&(&state.targets + &state.pi * 4.0));
            (gram(design), rhs, 8.0 * n)
        }
    };
    add_scaled_diagonal(&mut matrix, &penalty, penalty_scale);
    Ok(SymmetricSystem { matrix, rhs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub theta: ModelParams,
    pub jitter: Option<f64>,
    /// The combination has a one-shot solution and `theta` is it.
    pub closed_form: bool,
}

/// One MM update from `theta`. For least squares with a 2-norm penalty this
/// returns the closed-form minimizer regardless of `theta`.
pub fn irls_step(spec: &RiskSpec, theta: &ModelParams, design: &DesignMatrix, policy: JitterPolicy) -> Result<Step> {
    theta.check_dim(design.q())?;
    if spec.is_closed_form() {
        let (theta, jitter) = closed_form_solve(design, spec.lambda(), policy)?;
        return Ok(Step {
            theta,
            jitter,
            closed_form: true,
        });
    }
    let system = assemble_system(spec, design, theta)?;
    let solution = solve_spd(&system, policy)?;
    Ok(Step {
        theta: ModelParams::from_vector(&solution.x),
        jitter: solution.jitter,
        closed_form: false,
    })
}

fn closed_form_solve(
    design: &DesignMatrix,
    lambda: f64,
    policy: JitterPolicy,
) -> std::result::Result<(ModelParams, Option<f64>), SolveError> {
    let n = design.n() as f64;
    let mut matrix = gram(design);
    for i in 1..matrix.nrows() {
        matrix[(i, i)] += n * lambda;
    }
    let rhs = design.matrix().tr_mul(&DVector::from_element(design.n(), 1.0));
    let solution = solve_spd(&SymmetricSystem { matrix, rhs }, policy)?;
    Ok((ModelParams::from_vector(&solution.x), solution.jitter))
}

/// Exact minimizer of the ridge least-squares risk `(Y'Y + n lambda Ibar)^-1 Y'1`.
pub fn closed_form_ls_l2(design: &DesignMatrix, lambda: f64) -> Result<ModelParams> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidParameter("lambda must be ≥ 0".into()));
    }
    Ok(closed_form_solve(design, lambda, JitterPolicy::default())?.0)
}

pub(crate) fn initial_point(
    spec: &RiskSpec,
    design: &DesignMatrix,
    init: &Init,
    policy: JitterPolicy,
) -> Result<ModelParams> {
    match init {
        Init::Zero => Ok(ModelParams::zeros(design.q())),
        Init::WarmStartLsL2 => Ok(closed_form_solve(design, spec.lambda().max(WARM_START_MIN_RIDGE), policy)?.0),
        Init::Explicit(theta) => {
            theta.check_dim(design.q())?;
            if !theta.is_finite() {
                return Err(Error::InvalidParameter("initial parameters must be finite".into()));
            }
            Ok(theta.clone())
        }
    }
}

/// Runs MM iterations until the iteration cap or the risk tolerance is hit.
pub fn fit(spec: &RiskSpec, dataset: &Dataset, options: &FitOptions) -> Result<FitResult> {
    if options.max_iterations == 0 {
        return Err(Error::InvalidParameter("max_iterations must be ≥ 1".into()));
    }
    let design = build_design_matrix(dataset)?;
    let monitor = options.monitor.unwrap_or_else(|| spec.monitor());
    let mut theta = initial_point(spec, &design, &options.init, options.jitter)?;

    let mut result = FitResult {
        theta: theta.clone(),
        exact_risk_trajectory: Vec::with_capacity(options.max_iterations + 1),
        smoothed_risk_trajectory: Vec::with_capacity(options.max_iterations + 1),
        iterations_run: 0,
        converged: false,
        termination_reason: TerminationReason::MaxIterations,
        monitor,
        jittered_steps: 0,
    };
    let record = |result: &mut FitResult, theta: &ModelParams| -> Result<()> {
        let m = margins(&design, theta)?;
        result
            .exact_risk_trajectory
            .push(risk_at_margins(spec, &m, &theta.beta)?);
        result
            .smoothed_risk_trajectory
            .push(smoothed_risk_at_margins(spec, &m, &theta.beta)?);
        Ok(())
    };
    record(&mut result, &theta)?;

    for iteration in 1..=options.max_iterations {
        let step = match irls_step(spec, &theta, &design, options.jitter) {
            Ok(step) => step,
            Err(Error::Solve(source)) => {
                return Err(Error::Fit {
                    iteration,
                    source,
                    partial: Box::new(result),
                })
            }
            Err(e) => return Err(e),
        };
        theta = step.theta;
        result.theta = theta.clone();
        result.iterations_run = iteration;
        if step.jitter.is_some() {
            result.jittered_steps += 1;
        }
        record(&mut result, &theta)?;

        if step.closed_form {
            result.converged = true;
            result.termination_reason = TerminationReason::ClosedForm;
            break;
        }
        let trajectory = result.monitored_trajectory();
        let (prev, curr) = (trajectory[iteration - 1], trajectory[iteration]);
        if options.risk_tolerance > 0.0 && (curr - prev).abs() <= options.risk_tolerance * (1.0 + prev.abs()) {
            result.converged = true;
            result.termination_reason = TerminationReason::RiskTolerance;
            break;
        }
    }
    Ok(result)
}

/// Quadratic majorizer of the monitored risk, anchored at some iterate:
/// `(1/n) sum w_i (m_i - r_i)^2 + theta' diag(c) theta + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Majorizer {
    pub weights: DVector<f64>,
    pub targets: DVector<f64>,
    pub penalty_diag: DVector<f64>,
    pub constant: f64,
}

impl Majorizer {
    /// Builds the majorizer at `anchor`. It touches the smoothed risk there
    /// (the exact risk when neither the hinge loss nor a 1-norm term is used).
    pub fn at(spec: &RiskSpec, design: &DesignMatrix, anchor: &ModelParams) -> Result<Self> {
        let m = margins(design, anchor)?;
        let n = design.n();
        let eps = spec.epsilon;
        let (weights, targets, loss_constant) = match spec.loss {
            LossKind::Hinge => {
                let g = m.map(|mi| loss::smooth_abs(1.0 - mi, eps));
                let constant = g.iter().map(|gi| eps / (4.0 * gi)).sum::<f64>();
                (g.map(|gi| 1.0 / (4.0 * gi)), g.map(|gi| gi + 1.0), constant)
            }
            LossKind::LeastSquares => (DVector::from_element(n, 1.0), DVector::from_element(n, 1.0), 0.0),
            LossKind::SquaredHinge => {
                let targets = m.map(|mi| if 1.0 - mi < 0.0 { mi } else { 1.0 });
                (DVector::from_element(n, 1.0), targets, 0.0)
            }
            LossKind::Logistic => {
                let pi = m.map(loss::logistic_pi);
                let constant = m
                    .iter()
                    .zip(pi.iter())
                    .map(|(&mi, &p)| loss::logistic_loss(mi) - 2.0 * p * p)
                    .sum::<f64>();
                (DVector::from_element(n, 0.125), &m + &pi * 4.0, constant)
            }
        };
        let penalty_diag = penalty_quadratic(spec.penalty, &anchor.beta, spec.lambda(), spec.mu(), eps).total();
        let constant =
            loss_constant / n as f64 + penalty_majorizer_constant(spec.penalty, &anchor.beta, spec.mu(), eps);
        Ok(Self {
            weights,
            targets,
            penalty_diag,
            constant,
        })
    }

    pub fn value(&self, design: &DesignMatrix, theta: &ModelParams) -> Result<f64> {
        let m = margins(design, theta)?;
        let resid = &m - &self.targets;
        let data = resid
            .iter()
            .zip(self.weights.iter())
            .map(|(r, w)| w * r * r)
            .sum::<f64>()
            / design.n() as f64;
        let t = theta.to_vector();
        let pen = t
            .iter()
            .zip(self.penalty_diag.iter())
            .map(|(x, c)| c * x * x)
            .sum::<f64>();
        Ok(data + pen + self.constant)
    }
}
