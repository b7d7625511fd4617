//! Dense least-squares helpers shared by the model fits.

use nalgebra::{DMatrix, DVector};

pub struct Lstsq {
    pub coefficients: Vec<f64>,
    pub rank: usize,
    pub residual_sum_squares: f64,
}

/// Minimum-norm least squares via SVD. Singular values below
/// `1e-10 * s_max` count as zero when determining rank.
pub fn lstsq_min_norm(a: &DMatrix<f64>, y: &[f64]) -> Lstsq {
    let rhs = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let eps = (s_max * 1e-10).max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let beta = svd.solve(&rhs, eps).expect("SVD solve with computed U/V");
    let residual = a * &beta - rhs;
    Lstsq {
        coefficients: beta.iter().copied().collect(),
        rank,
        residual_sum_squares: residual.norm_squared(),
    }
}

/// Index of the first column that is (numerically) a linear combination of
/// the columns before it, via modified Gram-Schmidt. `None` if full rank.
pub fn first_dependent_column(a: &DMatrix<f64>) -> Option<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for j in 0..a.ncols() {
        let mut v: DVector<f64> = a.column(j).into();
        let original = v.norm();
        if original == 0.0 {
            return Some(j);
        }
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v -= q * proj;
            }
        }
        if v.norm() < 1e-8 * original {
            return Some(j);
        }
        let norm = v.norm();
        basis.push(v / norm);
    }
    None
}

/// Design matrix with a leading intercept column from row-major feature rows.
pub fn with_intercept(rows: usize, cols: usize, row_major: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            row_major[i * cols + (j - 1)]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_exact_system() {
        // y = 2 + 3x on x = 0..4
        let a = with_intercept(5, 1, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let y = [2.0, 5.0, 8.0, 11.0, 14.0];
        let fit = lstsq_min_norm(&a, &y);
        assert_eq!(fit.rank, 2);
        assert_relative_eq!(fit.coefficients[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(fit.coefficients[1], 3.0, epsilon = 1e-10);
        assert!(fit.residual_sum_squares < 1e-18);
    }

    #[test]
    fn flags_rank_deficiency_and_names_column() {
        // Third column = first + second.
        let rows = 4;
        let row_major: Vec<f64> = (0..rows)
            .flat_map(|i| {
                let x = i as f64;
                [x, x * x, x + x * x]
            })
            .collect();
        let a = with_intercept(rows, 3, &row_major);
        let y = [1.0, 2.0, 3.0, 4.0];
        let fit = lstsq_min_norm(&a, &y);
        assert!(fit.rank < 4);
        assert_eq!(first_dependent_column(&a), Some(3));
    }

    #[test]
    fn full_rank_matrix_has_no_dependent_column() {
        let a = with_intercept(4, 2, &[0.0, 1.0, 1.0, 4.0, 2.0, 9.0, 3.0, 16.0]);
        assert_eq!(first_dependent_column(&a), None);
    }
}
