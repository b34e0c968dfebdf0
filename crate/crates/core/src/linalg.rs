//! Weighted Gram assembly and a jittered Cholesky solve.

use nalgebra::{DMatrix, DVector};

use crate::dataset::DesignMatrix;
use crate::error::{Error, Result, SolveError};

/// `A x = b` with `A` symmetric positive (semi-)definite.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

/// Ridge fallback for factorizations that break down: on failure add
/// `delta * I` with `delta = initial_scale * sum|A_ii| / dim` and retry,
/// multiplying `delta` by `growth` each time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    pub initial_scale: f64,
    pub growth: f64,
    pub max_retries: usize,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self {
            initial_scale: 1e-10,
            growth: 10.0,
            max_retries: 3,
        }
    }
}

impl JitterPolicy {
    /// Fail immediately instead of regularizing.
    pub fn none() -> Self {
        Self {
            max_retries: 0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: DVector<f64>,
    /// Ridge added to the diagonal, if the plain factorization failed.
    pub jitter: Option<f64>,
}

fn check_rows(design: &DesignMatrix, len: usize) -> Result<()> {
    if design.n() != len {
        return Err(Error::DimensionMismatch {
            expected: design.n(),
            found: len,
        });
    }
    Ok(())
}

/// `Y' diag(weights) Y`, filled from the lower triangle so the result is
/// exactly symmetric.
pub fn weighted_gram(design: &DesignMatrix, weights: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_rows(design, weights.len())?;
    debug_assert!(weights.iter().all(|w| w.is_finite() && *w >= 0.0));
    let y = design.matrix();
    let dim = y.ncols();
    let mut gram = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let weighted = y.column(j).component_mul(weights);
        for k in j..dim {
            let v = weighted.dot(&y.column(k));
            gram[(k, j)] = v;
            gram[(j, k)] = v;
        }
    }
    Ok(gram)
}

/// `Y' Y`.
pub fn gram(design: &DesignMatrix) -> DMatrix<f64> {
    let y = design.matrix();
    let dim = y.ncols();
    let mut gram = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        for k in j..dim {
            let v = y.column(j).dot(&y.column(k));
            gram[(k, j)] = v;
            gram[(j, k)] = v;
        }
    }
    gram
}

/// `Y' diag(weights) targets`.
pub fn weighted_rhs(design: &DesignMatrix, weights: &DVector<f64>, targets: &DVector<f64>) -> Result<DVector<f64>> {
    check_rows(design, weights.len())?;
    check_rows(design, targets.len())?;
    Ok(design.matrix().tr_mul(&weights.component_mul(targets)))
}

/// Lower-triangular `L` with `A = L L'`, or the first non-positive pivot.
fn cholesky(a: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, f64> {
    let dim = a.nrows();
    let mut l = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > 0.0 && pivot.is_finite()) {
            return Err(pivot);
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..dim {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let dim = l.nrows();
    let mut z = b.clone();
    for i in 0..dim {
        for k in 0..i {
            z[i] -= l[(i, k)] * z[k];
        }
        z[i] /= l[(i, i)];
    }
    for i in (0..dim).rev() {
        for k in (i + 1)..dim {
            z[i] -= l[(k, i)] * z[k];
        }
        z[i] /= l[(i, i)];
    }
    z
}

pub fn solve_spd(system: &SymmetricSystem, policy: JitterPolicy) -> Result<Solution, SolveError> {
    let a = &system.matrix;
    let dim = a.nrows();
    assert_eq!(dim, a.ncols(), "matrix must be square");
    assert_eq!(dim, system.rhs.len(), "rhs length must match matrix");

    let mut smallest_pivot = match cholesky(a) {
        Ok(l) => {
            return Ok(Solution {
                x: cholesky_solve(&l, &system.rhs),
                jitter: None,
            })
        }
        Err(pivot) => pivot,
    };

    let scale = a.diagonal().abs().sum() / dim as f64;
    let mut delta = policy.initial_scale * scale;
    for attempt in 0..policy.max_retries {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(SolveError {
                attempts: attempt + 1,
                smallest_pivot,
            });
        }
        let mut jittered = a.clone();
        for i in 0..dim {
            jittered[(i, i)] += delta;
        }
        match cholesky(&jittered) {
            Ok(l) => {
                return Ok(Solution {
                    x: cholesky_solve(&l, &system.rhs),
                    jitter: Some(delta),
                })
            }
            Err(pivot) => smallest_pivot = pivot,
        }
        delta *= policy.growth;
    }
    Err(SolveError {
        attempts: policy.max_retries + 1,
        smallest_pivot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_design_matrix, Dataset, Label};
    use proptest::prelude::*;

    fn two_sample_design() -> DesignMatrix {
        let ds = Dataset::from_rows(&[vec![1.0], vec![-1.0]], vec![Label::Positive, Label::Negative]).unwrap();
        build_design_matrix(&ds).unwrap()
    }

    #[test]
    fn gram_examples() {
        let y = two_sample_design();
        let g = weighted_gram(&y, &DVector::from_element(2, 1.0)).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
        assert_eq!(gram(&y), g);
        let g = weighted_gram(&y, &DVector::zeros(2)).unwrap();
        assert_eq!(g, DMatrix::zeros(2, 2));

        let ds = Dataset::from_rows(&[vec![2.0, -3.0]], vec![Label::Negative]).unwrap();
        let y = build_design_matrix(&ds).unwrap();
        let g = weighted_gram(&y, &DVector::from_element(1, 0.5)).unwrap();
        let r = y.matrix().row(0).transpose();
        assert_eq!(g, &r * r.transpose() * 0.5);
        assert!(weighted_gram(&y, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn rhs_examples() {
        let y = two_sample_design();
        let ones = DVector::from_element(2, 1.0);
        assert_eq!(weighted_rhs(&y, &ones, &ones).unwrap().as_slice(), [0.0, 2.0]);
        assert_eq!(
            weighted_rhs(&y, &ones, &DVector::zeros(2)).unwrap().as_slice(),
            [0.0, 0.0]
        );
        assert_eq!(
            weighted_rhs(&y, &DVector::zeros(2), &ones).unwrap().as_slice(),
            [0.0, 0.0]
        );
    }

    #[test]
    fn solve_examples() {
        let b = DVector::from_vec(vec![0.3, -2.0, 7.0]);
        let s = solve_spd(
            &SymmetricSystem {
                matrix: DMatrix::identity(3, 3),
                rhs: b.clone(),
            },
            JitterPolicy::default(),
        )
        .unwrap();
        assert_eq!(s.x, b);
        assert_eq!(s.jitter, None);

        let s = solve_spd(
            &SymmetricSystem {
                matrix: DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0])),
                rhs: DVector::from_vec(vec![2.0, 8.0]),
            },
            JitterPolicy::default(),
        )
        .unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-15 && (s.x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_system_uses_jitter() {
        let system = SymmetricSystem {
            matrix: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0])),
            rhs: DVector::from_vec(vec![1.0, 0.0]),
        };
        let s = solve_spd(&system, JitterPolicy::default()).unwrap();
        // delta = 1e-10 * trace / 2
        assert_eq!(s.jitter, Some(5e-11));
        assert!((s.x[0] - 1.0 / (1.0 + 5e-11)).abs() < 1e-15);
        assert!(s.x[1].abs() <= 1e-3);

        let err = solve_spd(&system, JitterPolicy::none()).unwrap_err();
        assert_eq!(err.smallest_pivot, 0.0);
    }

    #[test]
    fn hopeless_system_reports_pivot() {
        let system = SymmetricSystem {
            matrix: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -5.0])),
            rhs: DVector::from_vec(vec![1.0, 1.0]),
        };
        let err = solve_spd(&system, JitterPolicy::default()).unwrap_err();
        assert_eq!(err.attempts, 4);
        assert!(err.smallest_pivot < 0.0);
    }

    /// Random SPD matrix `Q diag(eigs) Q'` with eigenvalues spread over `cond`.
    fn spd(dim: usize, seed: Vec<f64>, eig_exponents: Vec<f64>) -> DMatrix<f64> {
        let m = DMatrix::from_iterator(dim, dim, seed);
        let q = m.qr().q();
        let eigs = DVector::from_iterator(dim, eig_exponents.into_iter().map(|e| 10f64.powf(e)));
        let a = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
        (&a + a.transpose()) * 0.5
    }

    proptest! {
        #[test]
        fn residual_bound(
            (dim, seed, exps, b) in (1usize..7).prop_flat_map(|d| (
                Just(d),
                prop::collection::vec(-1.0..1.0f64, d * d),
                prop::collection::vec(-4.0..4.0f64, d),
                prop::collection::vec(-10.0..10.0f64, d),
            ))
        ) {
            let a = spd(dim, seed, exps);
            let b = DVector::from_vec(b);
            let s = solve_spd(&SymmetricSystem { matrix: a.clone(), rhs: b.clone() }, JitterPolicy::default()).unwrap();
            let resid = (&a * &s.x - &b).amax();
            prop_assert!(resid <= 1e-8 * (1.0 + b.amax()), "residual {}", resid);
        }

        #[test]
        fn unit_weights_equal_plain_gram(rows in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 1..20)) {
            let labels = (0..rows.len()).map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect();
            let y = build_design_matrix(&Dataset::from_rows(&rows, labels).unwrap()).unwrap();
            let w = weighted_gram(&y, &DVector::from_element(rows.len(), 1.0)).unwrap();
            prop_assert_eq!(&w, &gram(&y));
            prop_assert_eq!(&w, &w.transpose());
        }
    }
}
