//! Margin losses, their epsilon-smoothed forms, and the per-iteration
//! majorizer state each loss feeds into the normal equations.
//!
//! All functions take the margin `m = y * (alpha + beta . t)`. For the hinge,
//! least-squares and squared-hinge losses the majorizers are written in
//! `u = 1 - m`; the logistic majorizer is a second-order expansion in `m`
//! with curvature bound 1/4.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::spec::LossKind;

/// `log(1 + exp(-m))` without overflow for large `|m|`.
pub fn logistic_loss(m: f64) -> f64 {
    if m >= 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// `1 / (1 + exp(m))`, the negated derivative of the logistic loss.
pub fn logistic_pi(m: f64) -> f64 {
    if m >= 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

/// `sqrt(u^2 + eps)`, the smoothed absolute value.
#[inline]
pub fn smooth_abs(u: f64, epsilon: f64) -> f64 {
    u.hypot(epsilon.sqrt())
}

/// `(sqrt(u^2 + eps) + u) / 2` evaluated without cancellation.
fn smoothed_positive_part(u: f64, epsilon: f64) -> f64 {
    let s = smooth_abs(u, epsilon);
    if u >= 0.0 {
        u + 0.5 * epsilon / (s + u)
    } else {
        0.5 * epsilon / (s - u)
    }
}

pub fn loss_value(kind: LossKind, m: f64) -> f64 {
    let u = 1.0 - m;
    match kind {
        LossKind::Hinge => u.max(0.0),
        LossKind::LeastSquares => u * u,
        LossKind::SquaredHinge => {
            let p = u.max(0.0);
            p * p
        }
        LossKind::Logistic => logistic_loss(m),
    }
}

/// Loss with `|u|` replaced by `sqrt(u^2 + eps)`. Only the hinge loss contains
/// an absolute value (through `[u]_+ = |u|/2 + u/2`); the rest are unchanged.
pub fn smoothed_loss_value(kind: LossKind, m: f64, epsilon: f64) -> f64 {
    match kind {
        LossKind::Hinge => smoothed_positive_part(1.0 - m, epsilon),
        _ => loss_value(kind, m),
    }
}

/// Majorizer state of the smoothed hinge loss at the current margins.
#[derive(Debug, Clone, PartialEq)]
pub struct HingeState {
    /// `sqrt((1 - m_i)^2 + eps)`
    pub gamma: DVector<f64>,
    /// `1 / (4 gamma_i)`
    pub weights: DVector<f64>,
    /// `gamma_i + 1`
    pub targets: DVector<f64>,
}

pub fn hinge_state(margins: &DVector<f64>, epsilon: f64) -> HingeState {
    let gamma = margins.map(|m| smooth_abs(1.0 - m, epsilon));
    let weights = gamma.map(|g| 1.0 / (4.0 * g));
    let targets = gamma.map(|g| g + 1.0);
    HingeState {
        gamma,
        weights,
        targets,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquaredHingeState {
    /// `true` where `1 - m_i < 0`, i.e. the sample is strictly beyond the margin.
    pub upsilon: Vec<bool>,
    /// `1` where inactive, the current margin where active.
    pub targets: DVector<f64>,
}

pub fn squared_hinge_state(margins: &DVector<f64>) -> SquaredHingeState {
    let upsilon: Vec<bool> = margins.iter().map(|&m| 1.0 - m < 0.0).collect();
    let targets = DVector::from_iterator(
        margins.len(),
        margins
            .iter()
            .zip(&upsilon)
            .map(|(&m, &active)| if active { m } else { 1.0 }),
    );
    SquaredHingeState { upsilon, targets }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticState {
    pub pi: DVector<f64>,
    /// The current margins.
    pub targets: DVector<f64>,
}

pub fn logistic_state(margins: &DVector<f64>) -> LogisticState {
    LogisticState {
        pi: margins.map(logistic_pi),
        targets: margins.clone(),
    }
}

/// Scalar majorizer of the loss at `m`, anchored at `m_ref`.
///
/// For the hinge loss this majorizes the smoothed loss: with
/// `g = sqrt((1 - m_ref)^2 + eps)` it is `(u + g)^2 / (4g) + eps / (4g)`,
/// which touches `smoothed_loss_value` at `m = m_ref` and reduces to the
/// classical `(u + |v|)^2 / (4|v|)` as `eps -> 0`.
pub fn majorizer_value(kind: LossKind, m: f64, m_ref: f64, epsilon: f64) -> f64 {
    let u = 1.0 - m;
    let v = 1.0 - m_ref;
    match kind {
        LossKind::Hinge => {
            let g = smooth_abs(v, epsilon);
            (u + g).powi(2) / (4.0 * g) + epsilon / (4.0 * g)
        }
        LossKind::LeastSquares => u * u,
        LossKind::SquaredHinge => {
            if v >= 0.0 {
                u * u
            } else {
                (u - v).powi(2)
            }
        }
        LossKind::Logistic => {
            let d = m - m_ref;
            logistic_loss(m_ref) - logistic_pi(m_ref) * d + d * d / 8.0
        }
    }
}

pub fn average_loss(kind: LossKind, margins: &DVector<f64>) -> Result<f64> {
    if margins.is_empty() {
        return Err(Error::InvalidDataset("no samples".into()));
    }
    Ok(margins.iter().map(|&m| loss_value(kind, m)).sum::<f64>() / margins.len() as f64)
}

pub fn smoothed_average_loss(kind: LossKind, margins: &DVector<f64>, epsilon: f64) -> Result<f64> {
    if margins.is_empty() {
        return Err(Error::InvalidDataset("no samples".into()));
    }
    Ok(margins
        .iter()
        .map(|&m| smoothed_loss_value(kind, m, epsilon))
        .sum::<f64>()
        / margins.len() as f64)
}
