//! Small dense linear-algebra kernel shared by the other modules: symmetric
//! PSD square roots, Kronecker products and stochastic-matrix validation.
//!
//! Everything is backed by [`nalgebra`] dynamic matrices; the state and mode
//! dimensions in this domain are small (a few to a few dozen), so dense
//! eigendecompositions are the robust choice.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::Error;
use crate::Result;

/// Dense row-major real matrix used for modes, transition matrices and gains.
pub type Matrix = DMatrix<f64>;

/// Absolute per-entry tolerance for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues of a PSD matrix may round off slightly negative; anything
/// above this floor is clamped to zero, anything below is an error.
pub const PSD_EIG_FLOOR: f64 = -1e-10;

/// Tolerance for stochastic row sums and probability-simplex sums.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Probability entries may round off slightly negative; entries above this
/// floor are clamped to zero, entries below violate the invariant.
pub const PROBABILITY_DUST: f64 = -1e-15;

/// Symmetric positive semidefinite matrix (a covariance).
///
/// Construction via [`SymmetricPsd::new`] checks symmetry to [`SYMMETRY_TOL`]
/// and positive semidefiniteness to [`PSD_EIG_FLOOR`]. Operations that
/// preserve PSD structurally (congruences, convex combinations with spread
/// terms) re-symmetrize but skip the spectral check.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPsd {
    mat: DMatrix<f64>,
}

impl SymmetricPsd {
    /// Validates symmetry and positive semidefiniteness.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                let dev = (mat[(i, j)] - mat[(j, i)]).abs();
                if dev > SYMMETRY_TOL {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        deviation: dev,
                    });
                }
            }
        }
        let sym = symmetrize(&mat);
        let min_eig = SymmetricEigen::new(sym.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < PSD_EIG_FLOOR {
            return Err(Error::NotPsd {
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self { mat: sym })
    }

    /// Wraps a matrix that is PSD by construction, after re-symmetrizing.
    /// No spectral check is performed.
    pub(crate) fn from_psd_construction(mat: DMatrix<f64>) -> Self {
        Self {
            mat: symmetrize(&mat),
        }
    }

    /// Zero covariance of the given dimension (a Dirac).
    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    /// Scaled identity covariance.
    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        if scale < 0.0 {
            return Err(Error::NotPsd {
                min_eigenvalue: scale,
            });
        }
        Ok(Self {
            mat: DMatrix::identity(dim, dim) * scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }
}

/// `(S + S^T) / 2`, the cheapest way to keep congruence outputs symmetric.
pub fn symmetrize(mat: &DMatrix<f64>) -> DMatrix<f64> {
    (mat + mat.transpose()) * 0.5
}

/// Standard Kronecker product `a (x) b`, shape `(ra*rb, ca*cb)`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Unique symmetric PSD square root `R` with `R * R = s`.
///
/// Computed from the symmetric eigendecomposition; eigenvalues inside the
/// round-off band `[PSD_EIG_FLOOR, 0)` are clamped to zero.
pub fn sym_psd_sqrt(s: &SymmetricPsd) -> Result<SymmetricPsd> {
    let eig = SymmetricEigen::new(s.as_matrix().clone());
    let mut vals = eig.eigenvalues;
    for v in vals.iter_mut() {
        if *v < PSD_EIG_FLOOR {
            return Err(Error::NotPsd { min_eigenvalue: *v });
        }
        *v = v.max(0.0).sqrt();
    }
    let q = eig.eigenvectors;
    let root = &q * Matrix::from_diagonal(&vals) * q.transpose();
    Ok(SymmetricPsd::from_psd_construction(root))
}

/// Checks that `p` is right stochastic: entries in [0, 1], rows summing to 1
/// within [`STOCHASTIC_TOL`]. Reports the first offending row.
pub fn validate_stochastic(p: &Matrix) -> Result<()> {
    if p.nrows() != p.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "transition matrix must be square, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    for i in 0..p.nrows() {
        let mut sum = 0.0;
        for j in 0..p.ncols() {
            let v = p[(i, j)];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::StochasticEntryRange {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::StochasticRowSum { row: i, sum });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn kron_identity() {
        let i2 = Matrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2), Matrix::identity(4, 4));
    }

    #[test]
    fn kron_column_by_row() {
        let a = Matrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let b = Matrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let expect = Matrix::from_row_slice(2, 2, &[3.0, 4.0, 6.0, 8.0]);
        assert_eq!(kron(&a, &b), expect);
    }

    #[test]
    fn kron_pendulum_transition_entry() {
        let lambda = Matrix::from_row_slice(
            3,
            3,
            &[0.5, 0.5, 0.0, 0.3, 0.6, 0.1, 0.3, 0.6, 0.1],
        );
        let omega = Matrix::from_row_slice(2, 2, &[0.2, 0.8, 0.5, 0.5]);
        let p = kron(&lambda, &omega);
        assert_eq!(p.shape(), (6, 6));
        assert!((p[(0, 0)] - 0.1).abs() < 1e-15);
        validate_stochastic(&p).unwrap();
    }

    #[test]
    fn sqrt_identity_and_diagonal() {
        let id = SymmetricPsd::new(Matrix::identity(3, 3)).unwrap();
        assert_eq!(sym_psd_sqrt(&id).unwrap().as_matrix(), id.as_matrix());

        let d = SymmetricPsd::new(Matrix::from_diagonal(&nalgebra::dvector![4.0, 9.0])).unwrap();
        let r = sym_psd_sqrt(&d).unwrap();
        assert!(max_abs_diff(r.as_matrix(), &Matrix::from_diagonal(&nalgebra::dvector![2.0, 3.0])) < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let s = SymmetricPsd::new(Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let r = sym_psd_sqrt(&s).unwrap();
        let rr = r.as_matrix() * r.as_matrix();
        assert!(max_abs_diff(&rr, s.as_matrix()) < 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let err = SymmetricPsd::new(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert!(matches!(err, Err(Error::NotPsd { .. })));
    }

    #[test]
    fn stochastic_validation_reports_row() {
        let good = Matrix::from_row_slice(2, 2, &[0.5, 0.5, 0.3, 0.7]);
        validate_stochastic(&good).unwrap();

        let bad = Matrix::from_row_slice(2, 2, &[0.5, 0.6, 0.3, 0.7]);
        match validate_stochastic(&bad) {
            Err(Error::StochasticRowSum { row, sum }) => {
                assert_eq!(row, 0);
                assert!((sum - 1.1).abs() < 1e-15);
            }
            other => panic!("expected row-sum violation, got {other:?}"),
        }

        let neg = Matrix::from_row_slice(2, 2, &[1.2, -0.2, 0.3, 0.7]);
        assert!(matches!(
            validate_stochastic(&neg),
            Err(Error::StochasticEntryRange { row: 0, .. })
        ));
    }

    proptest! {
        // kron(alpha*a, b) == alpha*kron(a, b) entrywise
        #[test]
        fn kron_is_bilinear(
            entries_a in proptest::collection::vec(-5.0f64..5.0, 6),
            entries_b in proptest::collection::vec(-5.0f64..5.0, 6),
            alpha in -3.0f64..3.0,
        ) {
            let a = Matrix::from_row_slice(2, 3, &entries_a);
            let b = Matrix::from_row_slice(3, 2, &entries_b);
            let lhs = kron(&(&a * alpha), &b);
            let rhs = kron(&a, &b) * alpha;
            prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12 * (1.0 + rhs.amax()));
        }

        // sqrt(R*R) recovers R for symmetric PSD R
        #[test]
        fn sqrt_recovers_psd_factor(entries in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let l = Matrix::from_row_slice(3, 3, &entries);
            let r = SymmetricPsd::from_psd_construction(&l * l.transpose());
            let square = SymmetricPsd::from_psd_construction(r.as_matrix() * r.as_matrix());
            let recovered = sym_psd_sqrt(&square).unwrap();
            let err = (recovered.as_matrix() - r.as_matrix()).norm() / r.as_matrix().norm().max(1e-30);
            prop_assert!(err < 1e-10, "relative Frobenius error {err}");
        }

        // Kronecker product of right-stochastic matrices is right-stochastic
        #[test]
        fn kron_preserves_stochastic(
            rows_a in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 3), 3),
            rows_b in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 2), 2),
        ) {
            let normalize = |rows: &[Vec<f64>], n: usize| {
                let mut data = Vec::with_capacity(n * n);
                for row in rows {
                    let s: f64 = row.iter().sum();
                    data.extend(row.iter().map(|v| v / s));
                }
                Matrix::from_row_slice(n, n, &data)
            };
            let a = normalize(&rows_a, 3);
            let b = normalize(&rows_b, 2);
            prop_assert!(validate_stochastic(&kron(&a, &b)).is_ok());
        }
    }
}
