//! Labeled samples, the label-scaled design matrix, and the hyperplane
//! parameters `(alpha, beta)`.
//!
//! Every loss in this crate is a function of the margin
//! `m_i = y_i * (alpha + beta . t_i)`. Stacking the rows `y_i * (1, t_i)`
//! into a design matrix turns the margin vector into a single product `Y theta`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    /// Integer form used in CSV files.
    pub fn as_i8(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn from_i64(value: i64) -> Option<Self> {
        match value {
            -1 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }
}

/// `n` feature vectors in `R^q` with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: Vec<Label>,
}

impl Dataset {
    /// Builds a dataset from an `n x q` feature matrix. Rejects empty input and
    /// non-finite feature values.
    pub fn new(features: DMatrix<f64>, labels: Vec<Label>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                found: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::InvalidDataset("no samples".into()));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        for row in 0..features.nrows() {
            for column in 0..features.ncols() {
                if !features[(row, column)].is_finite() {
                    return Err(Error::NonFiniteFeature { row, column });
                }
            }
        }
        Ok(Self { features, labels })
    }

    /// Convenience constructor from row slices.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let q = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != q) {
            return Err(Error::DimensionMismatch {
                expected: q,
                found: bad.len(),
            });
        }
        let features = DMatrix::from_fn(rows.len(), q, |i, j| rows[i][j]);
        Self::new(features, labels)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn q(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Margins evaluated row by row, without going through the design matrix.
    pub fn margins(&self, theta: &ModelParams) -> Result<DVector<f64>> {
        theta.check_dim(self.q())?;
        Ok(DVector::from_fn(self.n(), |i, _| {
            let w = theta.alpha + self.features.row(i).transpose().dot(&theta.beta);
            self.labels[i].sign() * w
        }))
    }

    /// Fraction of samples whose predicted label matches.
    pub fn accuracy(&self, theta: &ModelParams) -> Result<f64> {
        let margins = self.margins(theta)?;
        let hits = margins.iter().filter(|&&m| m > 0.0).count();
        Ok(hits as f64 / self.n() as f64)
    }
}

/// The `n x (q+1)` matrix with rows `y_i * (1, t_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn q(&self) -> usize {
        self.rows.ncols() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }
}

pub fn build_design_matrix(dataset: &Dataset) -> Result<DesignMatrix> {
    let (n, q) = (dataset.n(), dataset.q());
    let features = dataset.features();
    let mut rows = DMatrix::zeros(n, q + 1);
    for i in 0..n {
        let y = dataset.labels()[i].sign();
        rows[(i, 0)] = y;
        for j in 0..q {
            let t = features[(i, j)];
            if !t.is_finite() {
                return Err(Error::NonFiniteFeature { row: i, column: j });
            }
            rows[(i, j + 1)] = y * t;
        }
    }
    Ok(DesignMatrix { rows })
}

/// Hyperplane `alpha + beta . t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: DVector<f64>,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: Vec<f64>) -> Self {
        Self {
            alpha,
            beta: DVector::from_vec(beta),
        }
    }

    pub fn zeros(q: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: DVector::zeros(q),
        }
    }

    pub fn q(&self) -> usize {
        self.beta.len()
    }

    /// Stacked `(alpha, beta)`.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut theta = DVector::zeros(self.q() + 1);
        theta[0] = self.alpha;
        theta.rows_mut(1, self.q()).copy_from(&self.beta);
        theta
    }

    pub fn from_vector(theta: &DVector<f64>) -> Self {
        assert!(!theta.is_empty(), "parameter vector needs an intercept");
        Self {
            alpha: theta[0],
            beta: theta.rows(1, theta.len() - 1).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.beta.iter().all(|b| b.is_finite())
    }

    pub(crate) fn check_dim(&self, q: usize) -> Result<()> {
        if self.q() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                found: self.q(),
            });
        }
        Ok(())
    }
}

/// `Y theta`, one margin per sample.
pub fn margins(design: &DesignMatrix, theta: &ModelParams) -> Result<DVector<f64>> {
    theta.check_dim(design.q())?;
    Ok(design.matrix() * theta.to_vector())
}

/// Sign of `alpha + beta . t`; a score of exactly zero is classified `Positive`.
pub fn predict(theta: &ModelParams, features: &[f64]) -> Result<Label> {
    if features.len() != theta.q() {
        return Err(Error::DimensionMismatch {
            expected: theta.q(),
            found: features.len(),
        });
    }
    let score = theta.alpha + theta.beta.iter().zip(features).map(|(b, t)| b * t).sum::<f64>();
    Ok(if score >= 0.0 { Label::Positive } else { Label::Negative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_dim(ts: &[f64], ys: &[i64]) -> Dataset {
        let rows: Vec<Vec<f64>> = ts.iter().map(|&t| vec![t]).collect();
        let labels = ys.iter().map(|&y| Label::from_i64(y).unwrap()).collect();
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn design_rows_are_label_scaled() {
        let ds = one_dim(&[1.0, -1.0], &[1, -1]);
        let y = build_design_matrix(&ds).unwrap();
        assert_eq!(y.matrix().row(0).iter().copied().collect::<Vec<_>>(), [1.0, 1.0]);
        assert_eq!(y.matrix().row(1).iter().copied().collect::<Vec<_>>(), [-1.0, 1.0]);

        let ds = Dataset::from_rows(&[vec![2.0, 3.0]], vec![Label::Negative]).unwrap();
        let y = build_design_matrix(&ds).unwrap();
        assert_eq!(
            y.matrix().row(0).iter().copied().collect::<Vec<_>>(),
            [-1.0, -2.0, -3.0]
        );
    }

    #[test]
    fn non_finite_feature_names_the_row() {
        let err = Dataset::from_rows(&[vec![1.0], vec![f64::NAN]], vec![Label::Positive; 2]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteFeature { row: 1, column: 0 }));
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(Dataset::from_rows(&[], vec![]).is_err());
    }

    #[test]
    fn margin_examples() {
        let ds = one_dim(&[1.0, -1.0], &[1, -1]);
        let y = build_design_matrix(&ds).unwrap();
        let zero = margins(&y, &ModelParams::zeros(1)).unwrap();
        assert!(zero.iter().all(|&m| m == 0.0));

        let m = margins(&y, &ModelParams::new(0.0, vec![1.0])).unwrap();
        assert_eq!(m[0], 1.0);

        let ds = one_dim(&[3.0], &[-1]);
        let y = build_design_matrix(&ds).unwrap();
        let m = margins(&y, &ModelParams::new(1.0, vec![2.0])).unwrap();
        assert_eq!(m[0], -7.0);
    }

    #[test]
    fn margin_dimension_mismatch() {
        let ds = one_dim(&[1.0], &[1]);
        let y = build_design_matrix(&ds).unwrap();
        assert!(margins(&y, &ModelParams::zeros(2)).is_err());
    }

    #[test]
    fn predict_examples() {
        let theta = ModelParams::new(0.0, vec![1.0, 1.0]);
        assert_eq!(predict(&theta, &[1.0, 1.0]).unwrap(), Label::Positive);
        assert_eq!(predict(&theta, &[-1.0, -1.0]).unwrap(), Label::Negative);
        assert_eq!(predict(&theta, &[1.0, -1.0]).unwrap(), Label::Positive);
        assert!(predict(&theta, &[1.0]).is_err());
    }

    fn dataset_and_theta() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>, f64, Vec<f64>)> {
        (1usize..4, 1usize..12).prop_flat_map(|(q, n)| {
            (
                prop::collection::vec(prop::collection::vec(-10.0..10.0f64, q), n),
                prop::collection::vec(any::<bool>(), n),
                -5.0..5.0f64,
                prop::collection::vec(-5.0..5.0f64, q),
            )
        })
    }

    proptest! {
        #[test]
        fn design_margins_match_direct_evaluation((rows, signs, alpha, beta) in dataset_and_theta()) {
            let labels = signs.iter().map(|&s| if s { Label::Positive } else { Label::Negative }).collect();
            let ds = Dataset::from_rows(&rows, labels).unwrap();
            let theta = ModelParams::new(alpha, beta);
            let via_design = margins(&build_design_matrix(&ds).unwrap(), &theta).unwrap();
            let direct = ds.margins(&theta).unwrap();
            for (a, b) in via_design.iter().zip(direct.iter()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn predict_positive_iff_positive_label_margin_nonnegative((rows, _s, alpha, beta) in dataset_and_theta()) {
            let theta = ModelParams::new(alpha, beta);
            let t = &rows[0];
            let ds = Dataset::from_rows(std::slice::from_ref(t), vec![Label::Positive]).unwrap();
            let m = ds.margins(&theta).unwrap()[0];
            prop_assert_eq!(predict(&theta, t).unwrap() == Label::Positive, m >= 0.0);
        }
    }
}
