//! Runtime checks of the MM descent guarantees along a fit.

use std::fmt;

use crate::dataset::{build_design_matrix, margins, Dataset, DesignMatrix, ModelParams};
use crate::engine::{initial_point, irls_step, risk_at_margins, smoothed_risk_at_margins, FitOptions, Majorizer};
use crate::error::Result;
use crate::spec::{Monitor, RiskSpec};

/// Relative slack allowed in every check.
pub const DESCENT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// The monitored risk went up.
    Ascent,
    /// The majorizer did not touch the monitored risk at its anchor.
    Anchoring,
    /// The update did not lower the majorizer it was derived from.
    StepNotOptimal,
    /// The risk at the new iterate exceeded the majorizer there.
    NotMajorized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub iteration: usize,
    pub kind: ViolationKind,
    /// Left and right side of the failed `lhs <= rhs` (or `lhs == rhs`).
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iteration {}: {:?} ({:.17e} vs {:.17e})",
            self.iteration, self.kind, self.lhs, self.rhs
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    pub monitor: Monitor,
    pub iterations: usize,
    pub trajectory: Vec<f64>,
    pub violations: Vec<Violation>,
}

impl DescentReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn monitored(spec: &RiskSpec, monitor: Monitor, design: &DesignMatrix, theta: &ModelParams) -> Result<f64> {
    let m = margins(design, theta)?;
    match monitor {
        Monitor::Exact => risk_at_margins(spec, &m, &theta.beta),
        Monitor::Smoothed => smoothed_risk_at_margins(spec, &m, &theta.beta),
    }
}

fn slack(x: f64) -> f64 {
    DESCENT_TOLERANCE * (1.0 + x.abs())
}

/// Replays `options.max_iterations` MM steps and checks, at every step, that
/// the majorizer touches the monitored risk at the anchor, that the update
/// does not increase the majorizer, that the majorizer still dominates the
/// risk at the update, and that the monitored risk does not increase.
pub fn verify_descent(spec: &RiskSpec, dataset: &Dataset, options: &FitOptions) -> Result<DescentReport> {
    let design = build_design_matrix(dataset)?;
    let monitor = options.monitor.unwrap_or_else(|| spec.monitor());
    let mut theta = initial_point(spec, &design, &options.init, options.jitter)?;
    let mut current = monitored(spec, monitor, &design, &theta)?;
    let mut report = DescentReport {
        monitor,
        iterations: 0,
        trajectory: vec![current],
        violations: Vec::new(),
    };
    let iterations = if spec.is_closed_form() {
        1
    } else {
        options.max_iterations
    };

    for iteration in 1..=iterations {
        let majorizer = Majorizer::at(spec, &design, &theta)?;
        let at_anchor = majorizer.value(&design, &theta)?;
        let mut flag = |kind, lhs: f64, rhs: f64| {
            report.violations.push(Violation {
                iteration,
                kind,
                lhs,
                rhs,
            })
        };
        if (at_anchor - current).abs() > slack(current) {
            flag(ViolationKind::Anchoring, at_anchor, current);
        }
        let next = irls_step(spec, &theta, &design, options.jitter)?.theta;
        let at_next = majorizer.value(&design, &next)?;
        let next_risk = monitored(spec, monitor, &design, &next)?;
        if at_next > at_anchor + slack(at_anchor) {
            flag(ViolationKind::StepNotOptimal, at_next, at_anchor);
        }
        if next_risk > at_next + slack(at_next) {
            flag(ViolationKind::NotMajorized, next_risk, at_next);
        }
        if next_risk > current + slack(current) {
            flag(ViolationKind::Ascent, next_risk, current);
        }
        theta = next;
        current = next_risk;
        report.trajectory.push(current);
        report.iterations = iteration;
    }
    Ok(report)
}
