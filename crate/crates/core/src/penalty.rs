//! Penalties on `beta` (never on the intercept) and their quadratic majorizers.

use nalgebra::DVector;

use crate::loss::smooth_abs;
use crate::spec::PenaltyKind;

/// `lambda * beta . beta`, `mu * sum |beta_j|`, or their sum.
pub fn penalty_value(kind: PenaltyKind, beta: &DVector<f64>, lambda: f64, mu: f64) -> f64 {
    let mut p = 0.0;
    if kind.has_l2() {
        p += lambda * beta.dot(beta);
    }
    if kind.has_l1() {
        p += mu * beta.iter().map(|b| b.abs()).sum::<f64>();
    }
    p
}

/// Penalty with each `|beta_j|` replaced by `sqrt(beta_j^2 + eps)`.
pub fn smoothed_penalty_value(kind: PenaltyKind, beta: &DVector<f64>, lambda: f64, mu: f64, epsilon: f64) -> f64 {
    let mut p = 0.0;
    if kind.has_l2() {
        p += lambda * beta.dot(beta);
    }
    if kind.has_l1() {
        p += mu * beta.iter().map(|&b| smooth_abs(b, epsilon)).sum::<f64>();
    }
    p
}

/// `(0, 1/sqrt(v_1^2 + eps), ..., 1/sqrt(v_q^2 + eps))`.
pub fn omega_diagonal(beta_ref: &DVector<f64>, epsilon: f64) -> DVector<f64> {
    let mut d = DVector::zeros(beta_ref.len() + 1);
    for (j, &v) in beta_ref.iter().enumerate() {
        d[j + 1] = 1.0 / smooth_abs(v, epsilon);
    }
    d
}

/// Diagonal quadratic `theta' diag(ibar + omega) theta` majorizing the
/// (smoothed) penalty, up to an additive constant.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyQuadratic {
    /// `lambda * (0, 1, ..., 1)`
    pub ibar_diag: DVector<f64>,
    /// `(mu / 2) * Omega(beta_ref)`
    pub omega_diag: DVector<f64>,
}

impl PenaltyQuadratic {
    pub fn total(&self) -> DVector<f64> {
        &self.ibar_diag + &self.omega_diag
    }
}

pub fn penalty_quadratic(
    kind: PenaltyKind,
    beta_ref: &DVector<f64>,
    lambda: f64,
    mu: f64,
    epsilon: f64,
) -> PenaltyQuadratic {
    let dim = beta_ref.len() + 1;
    let mut ibar_diag = DVector::zeros(dim);
    if kind.has_l2() {
        ibar_diag.rows_mut(1, dim - 1).fill(lambda);
    }
    let omega_diag = if kind.has_l1() {
        omega_diagonal(beta_ref, epsilon) * (0.5 * mu)
    } else {
        DVector::zeros(dim)
    };
    PenaltyQuadratic { ibar_diag, omega_diag }
}

/// Constant that makes `theta' diag(ibar + omega) theta + c` touch the
/// smoothed penalty at `beta_ref`: `(mu/2) * sum (g_j + eps / g_j)` with
/// `g_j = sqrt(v_j^2 + eps)`.
pub fn penalty_majorizer_constant(kind: PenaltyKind, beta_ref: &DVector<f64>, mu: f64, epsilon: f64) -> f64 {
    if !kind.has_l1() {
        return 0.0;
    }
    0.5 * mu
        * beta_ref
            .iter()
            .map(|&v| {
                let g = smooth_abs(v, epsilon);
                g + epsilon / g
            })
            .sum::<f64>()
}

/// Scalar majorizer of `mu * sqrt(b^2 + eps)` at `v`, from the tangent line
/// of the square root at `v^2 + eps`.
pub fn coordinate_majorizer(b: f64, v: f64, mu: f64, epsilon: f64) -> f64 {
    let g = smooth_abs(v, epsilon);
    0.5 * mu * (b * b / g + g + epsilon / g)
}
