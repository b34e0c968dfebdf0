//! Reference minimizer and derivative checks for verifying the IRLS fits.
//!
//! Nothing here goes through the engine's normal equations; the only shared
//! pieces are the scalar loss and penalty evaluations.

use nalgebra::DVector;
use rand_core::Rng;
use rand_pcg::Pcg64;

use crate::dataset::{Dataset, ModelParams};
use crate::loss::{loss_value, smoothed_loss_value};
use crate::penalty::{penalty_value, smoothed_penalty_value};
use crate::spec::{LossKind, Monitor, RiskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleObjective {
    ExactRisk,
    SmoothedRisk,
}

impl From<Monitor> for OracleObjective {
    fn from(m: Monitor) -> Self {
        match m {
            Monitor::Exact => OracleObjective::ExactRisk,
            Monitor::Smoothed => OracleObjective::SmoothedRisk,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub iterations: usize,
    /// Step `k` has length `initial_step / sqrt(k + 1)`.
    pub initial_step: f64,
    pub seed: u64,
    /// Extra runs from random starting points in `[-1, 1]^(q+1)`; the best
    /// iterate over all runs is returned.
    pub restarts: usize,
    pub objective: OracleObjective,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            iterations: 200_000,
            initial_step: 1.0,
            seed: 0,
            restarts: 0,
            objective: OracleObjective::ExactRisk,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub theta: ModelParams,
    pub value: f64,
}

/// The objective and one of its subgradients, evaluated row by row.
struct Objective<'a> {
    spec: &'a RiskSpec,
    dataset: &'a Dataset,
    smoothed: bool,
}

impl Objective<'_> {
    fn margin(&self, i: usize, theta: &DVector<f64>) -> f64 {
        let t = self.dataset.features().row(i);
        let mut w = theta[0];
        for j in 0..t.len() {
            w += theta[j + 1] * t[j];
        }
        self.dataset.labels()[i].sign() * w
    }

    fn value(&self, theta: &DVector<f64>) -> f64 {
        let n = self.dataset.n();
        let eps = self.spec.epsilon;
        let beta = theta.rows(1, theta.len() - 1).into_owned();
        let (lambda, mu) = (self.spec.lambda(), self.spec.mu());
        let mut loss = 0.0;
        for i in 0..n {
            let m = self.margin(i, theta);
            loss += if self.smoothed {
                smoothed_loss_value(self.spec.loss, m, eps)
            } else {
                loss_value(self.spec.loss, m)
            };
        }
        let penalty = if self.smoothed {
            smoothed_penalty_value(self.spec.penalty, &beta, lambda, mu, eps)
        } else {
            penalty_value(self.spec.penalty, &beta, lambda, mu)
        };
        loss / n as f64 + penalty
    }

    /// Derivative of the loss with respect to the margin.
    fn loss_slope(&self, m: f64) -> f64 {
        let u = 1.0 - m;
        match self.spec.loss {
            LossKind::Hinge if self.smoothed => -0.5 * (u / (u * u + self.spec.epsilon).sqrt() + 1.0),
            LossKind::Hinge => {
                if u > 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            LossKind::LeastSquares => -2.0 * u,
            LossKind::SquaredHinge => -2.0 * u.max(0.0),
            LossKind::Logistic => {
                if m > 0.0 {
                    let e = (-m).exp();
                    -e / (1.0 + e)
                } else {
                    -1.0 / (1.0 + m.exp())
                }
            }
        }
    }

    fn subgradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        let n = self.dataset.n();
        let q = theta.len() - 1;
        let mut g = DVector::zeros(q + 1);
        for i in 0..n {
            let m = self.margin(i, theta);
            let s = self.loss_slope(m) * self.dataset.labels()[i].sign();
            if s == 0.0 {
                continue;
            }
            let t = self.dataset.features().row(i);
            g[0] += s;
            for j in 0..q {
                g[j + 1] += s * t[j];
            }
        }
        g /= n as f64;
        let (lambda, mu, eps) = (self.spec.lambda(), self.spec.mu(), self.spec.epsilon);
        for j in 1..=q {
            let b = theta[j];
            g[j] += 2.0 * lambda * b;
            g[j] += if self.smoothed {
                mu * b / (b * b + eps).sqrt()
            } else {
                mu * if b > 0.0 {
                    1.0
                } else if b < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            };
        }
        g
    }
}

fn uniform_signed(rng: &mut Pcg64) -> f64 {
    ((rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)) * 2.0 - 1.0
}

/// Best-so-far subgradient descent with diminishing steps on the exact or
/// smoothed risk, starting from zero (plus optional random restarts).
pub fn subgradient_minimize(spec: &RiskSpec, dataset: &Dataset, options: &OracleOptions) -> OracleResult {
    let objective = Objective {
        spec,
        dataset,
        smoothed: options.objective == OracleObjective::SmoothedRisk,
    };
    let dim = dataset.q() + 1;
    let mut rng = Pcg64::new(options.seed as u128, crate::synth::PCG_DEFAULT_STREAM);

    let mut best = DVector::zeros(dim);
    let mut best_value = objective.value(&best);
    for run in 0..=options.restarts {
        let mut theta = if run == 0 {
            DVector::zeros(dim)
        } else {
            DVector::from_fn(dim, |_, _| uniform_signed(&mut rng))
        };
        for k in 0..options.iterations {
            let value = objective.value(&theta);
            if value < best_value {
                best_value = value;
                best.copy_from(&theta);
            }
            let g = objective.subgradient(&theta);
            let step = options.initial_step / ((k + 1) as f64).sqrt();
            theta.axpy(-step, &g, 1.0);
        }
        let value = objective.value(&theta);
        if value < best_value {
            best_value = value;
            best.copy_from(&theta);
        }
    }
    OracleResult {
        theta: ModelParams::from_vector(&best),
        value: best_value,
    }
}

/// Central differences with per-coordinate step `h * (1 + |theta_j|)`.
pub fn finite_diff_gradient<F>(objective: F, theta: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut grad = DVector::zeros(theta.len());
    let mut probe = theta.clone();
    for j in 0..theta.len() {
        let hj = h * (1.0 + theta[j].abs());
        probe[j] = theta[j] + hj;
        let up = objective(&probe);
        probe[j] = theta[j] - hj;
        let down = objective(&probe);
        probe[j] = theta[j];
        grad[j] = (up - down) / (2.0 * hj);
    }
    grad
}

pub const DEFAULT_FD_STEP: f64 = 1e-6;
