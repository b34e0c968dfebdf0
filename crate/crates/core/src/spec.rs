//! Loss/penalty selection and hyperparameters for one of the twelve risk
//! combinations.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Hinge,
    LeastSquares,
    SquaredHinge,
    Logistic,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Hinge,
        LossKind::LeastSquares,
        LossKind::SquaredHinge,
        LossKind::Logistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Hinge => "hinge",
            LossKind::LeastSquares => "least-squares",
            LossKind::SquaredHinge => "squared-hinge",
            LossKind::Logistic => "logistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyKind {
    L2,
    L1,
    ElasticNet,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 3] = [PenaltyKind::L2, PenaltyKind::L1, PenaltyKind::ElasticNet];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::L2 => "l2",
            PenaltyKind::L1 => "l1",
            PenaltyKind::ElasticNet => "elastic",
        }
    }

    pub fn has_l2(self) -> bool {
        matches!(self, PenaltyKind::L2 | PenaltyKind::ElasticNet)
    }

    pub fn has_l1(self) -> bool {
        matches!(self, PenaltyKind::L1 | PenaltyKind::ElasticNet)
    }
}

macro_rules! named_enum_traits {
    ($ty:ty, $what:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .into_iter()
                    .find(|k| k.name() == s)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown {} '{}'", $what, s)))
            }
        }
    };
}

named_enum_traits!(LossKind, "loss");
named_enum_traits!(PenaltyKind, "penalty");

/// Which risk a fit monitors for stopping and descent checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monitor {
    /// The risk itself; its majorizer is exact.
    Exact,
    /// The risk with every `|u|` replaced by `sqrt(u^2 + epsilon)`.
    Smoothed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSpec {
    pub loss: LossKind,
    pub penalty: PenaltyKind,
    lambda: f64,
    mu: f64,
    pub epsilon: f64,
}

impl RiskSpec {
    /// `lambda` scales `beta . beta`, `mu` scales `sum |beta_j|`. The constant a
    /// penalty kind does not use is kept but ignored.
    pub fn new(loss: LossKind, penalty: PenaltyKind, lambda: f64, mu: f64) -> Result<Self> {
        Self::with_epsilon(loss, penalty, lambda, mu, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(loss: LossKind, penalty: PenaltyKind, lambda: f64, mu: f64, epsilon: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be ≥ 0".into()));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter("mu must be ≥ 0".into()));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter("epsilon must be > 0".into()));
        }
        Ok(Self {
            loss,
            penalty,
            lambda,
            mu,
            epsilon,
        })
    }

    /// The 2-norm constant actually in effect (zero for a pure 1-norm penalty).
    pub fn lambda(&self) -> f64 {
        if self.penalty.has_l2() {
            self.lambda
        } else {
            0.0
        }
    }

    /// The 1-norm constant actually in effect (zero for a pure 2-norm penalty).
    pub fn mu(&self) -> f64 {
        if self.penalty.has_l1() {
            self.mu
        } else {
            0.0
        }
    }

    pub fn raw_lambda(&self) -> f64 {
        self.lambda
    }

    pub fn raw_mu(&self) -> f64 {
        self.mu
    }

    /// Least squares with a 2-norm penalty has a one-shot solution.
    pub fn is_closed_form(&self) -> bool {
        self.loss == LossKind::LeastSquares && self.penalty == PenaltyKind::L2
    }

    /// Exact for the combinations whose majorizer is exact; smoothed whenever
    /// the hinge loss or a 1-norm term is involved.
    pub fn monitor(&self) -> Monitor {
        if self.loss == LossKind::Hinge || self.penalty.has_l1() {
            Monitor::Smoothed
        } else {
            Monitor::Exact
        }
    }

    /// All twelve loss x penalty combinations with shared constants.
    pub fn all_combinations(lambda: f64, mu: f64, epsilon: f64) -> Result<Vec<RiskSpec>> {
        let mut out = Vec::with_capacity(12);
        for loss in LossKind::ALL {
            for penalty in PenaltyKind::ALL {
                out.push(Self::with_epsilon(loss, penalty, lambda, mu, epsilon)?);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for RiskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.loss, self.penalty)?;
        if self.penalty.has_l2() {
            write!(f, " lambda={}", self.lambda)?;
        }
        if self.penalty.has_l1() {
            write!(f, " mu={}", self.mu)?;
        }
        Ok(())
    }
}
