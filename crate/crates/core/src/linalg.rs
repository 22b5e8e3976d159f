//! Dense null-space computation for the flight phase of the cube method.
//!
//! Matrices are stored with one row per balancing constraint and one column
//! per active unit, so kernel vectors live in unit space.

use crate::error::{Error, Result};

/// Default rank threshold, relative to the largest column norm.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`.
    entries: Vec<f64>,
    active: Vec<usize>,
}

impl ConstraintMatrix {
    /// Builds a matrix from row-major entries. `active` lists the unit index
    /// of each column.
    pub fn new(rows: usize, entries: Vec<f64>, active: Vec<usize>) -> Result<Self> {
        let cols = active.len();
        if cols == 0 {
            return Err(Error::InvalidArgument(
                "constraint matrix needs at least one column".into(),
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "constraint matrix entries",
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
            active,
        })
    }

    /// Builds a matrix from a list of rows, with columns labelled `0..m`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), entries, (0..cols).collect())
    }

    /// Constraint matrix `x_k / π_k` for the given units, keeping the first
    /// `constraints` columns of `aux`.
    pub fn for_units(aux: &[Vec<f64>], pi: &[f64], units: &[usize], constraints: usize) -> Self {
        let mut entries = Vec::with_capacity(constraints * units.len());
        for col in aux.iter().take(constraints) {
            entries.extend(units.iter().map(|&k| col[k] / pi[k]));
        }
        Self {
            rows: constraints,
            cols: units.len(),
            entries,
            active: units.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn active_units(&self) -> &[usize] {
        &self.active
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// Largest Euclidean column norm.
    pub fn max_column_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self.get(i, j).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `A v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// A nonzero vector in the kernel, normalized so that `max |v_j| = 1`, or
    /// `None` when the matrix has full numerical column rank.
    ///
    /// Gaussian elimination with partial pivoting; a column whose best pivot
    /// is below `tol * max_column_norm` is treated as free. The returned
    /// vector is the back-substitution solution for the first free column.
    pub fn kernel_vector(&self, tol: f64) -> Option<Vec<f64>> {
        let (q, m) = (self.rows, self.cols);
        let threshold = tol * self.max_column_norm();
        let mut a = self.entries.clone();
        let mut pivot_cols = Vec::with_capacity(q.min(m));
        let mut free = None;
        let mut row = 0;

        for col in 0..m {
            if row == q {
                free = free.or(Some(col));
                break;
            }
            let (best, best_abs) = (row..q)
                .map(|r| (r, a[r * m + col].abs()))
                .fold((row, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best_abs <= threshold {
                free = free.or(Some(col));
                continue;
            }
            if best != row {
                for j in 0..m {
                    a.swap(row * m + j, best * m + j);
                }
            }
            let p = a[row * m + col];
            for r in row + 1..q {
                let factor = a[r * m + col] / p;
                if factor != 0.0 {
                    a[r * m + col] = 0.0;
                    for j in col + 1..m {
                        a[r * m + j] -= factor * a[row * m + j];
                    }
                }
            }
            pivot_cols.push(col);
            row += 1;
        }

        let free = free?;
        let mut v = vec![0.0; m];
        v[free] = 1.0;
        for (r, &pc) in pivot_cols.iter().enumerate().rev() {
            let s: f64 = (pc + 1..m).map(|j| a[r * m + j] * v[j]).sum();
            v[pc] = -s / a[r * m + pc];
        }
        let scale = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        for x in &mut v {
            *x /= scale;
        }
        Some(v)
    }

    /// Removes the last constraint row.
    pub fn drop_last_constraint(&self) -> Result<Self> {
        if self.rows == 0 {
            return Err(Error::NoConstraintsLeft);
        }
        let rows = self.rows - 1;
        Ok(Self {
            rows,
            cols: self.cols,
            entries: self.entries[..rows * self.cols].to_vec(),
            active: self.active.clone(),
        })
    }
}

/// Free-function form of [`ConstraintMatrix::kernel_vector`].
pub fn kernel_vector(a: &ConstraintMatrix, tol: f64) -> Option<Vec<f64>> {
    a.kernel_vector(tol)
}

/// Free-function form of [`ConstraintMatrix::drop_last_constraint`].
pub fn drop_last_constraint(a: &ConstraintMatrix) -> Result<ConstraintMatrix> {
    a.drop_last_constraint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn assert_residual(a: &ConstraintMatrix, v: &[f64], tol: f64) {
        let r = norm(&a.apply(v));
        assert!(
            r <= tol * norm(v) * a.max_column_norm().max(1.0),
            "residual {r} too large"
        );
        let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!((max - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_constraint_gives_antisymmetric_vector() {
        let a = ConstraintMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let v = a.kernel_vector(DEFAULT_RANK_TOL).unwrap();
        assert_eq!(v[0], -v[1]);
        assert_residual(&a, &v, 1e-12);
    }

    #[test]
    fn identity_has_trivial_kernel() {
        let a = ConstraintMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(a.kernel_vector(DEFAULT_RANK_TOL), None);
    }

    #[test]
    fn two_by_three_kernel() {
        let a = ConstraintMatrix::from_rows(&[vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]]).unwrap();
        let v = a.kernel_vector(DEFAULT_RANK_TOL).unwrap();
        // direct substitution
        assert!(norm(&a.apply(&v)) < 1e-12);
        let ratio = v[1] / v[0];
        assert!((ratio + 2.0).abs() < 1e-12);
        assert!((v[2] / v[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_constraint_set_spans_everything() {
        let a = ConstraintMatrix::new(0, vec![], vec![4, 7]).unwrap();
        assert_eq!(a.kernel_vector(DEFAULT_RANK_TOL), Some(vec![1.0, 0.0]));
    }

    #[test]
    fn rank_deficient_square() {
        let a = ConstraintMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let v = a.kernel_vector(DEFAULT_RANK_TOL).unwrap();
        assert_residual(&a, &v, 1e-12);
    }

    #[test]
    fn zero_leading_column_is_free() {
        let a = ConstraintMatrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(a.kernel_vector(DEFAULT_RANK_TOL), Some(vec![1.0, 0.0, 0.0]));
    }

    #[test]
    fn drops_last_row() {
        let a = ConstraintMatrix::from_rows(&[vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]]).unwrap();
        let b = drop_last_constraint(&a).unwrap();
        assert_eq!(b.rows(), 1);
        assert_eq!(b.row(0), &[1.0, 1.0, 1.0]);
        assert_eq!(b.active_units(), a.active_units());

        let c = ConstraintMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let d = drop_last_constraint(&c).unwrap();
        assert_eq!((d.rows(), d.cols()), (0, 2));
        assert_eq!(drop_last_constraint(&d), Err(Error::NoConstraintsLeft));
    }

    proptest! {
        #[test]
        fn wide_matrices_always_have_a_kernel(
            q in 1usize..8,
            seed in proptest::collection::vec(-10.0f64..10.0, 72),
        ) {
            let m = q + 1;
            let rows: Vec<Vec<f64>> = (0..q).map(|i| seed[i * m..(i + 1) * m].to_vec()).collect();
            let a = ConstraintMatrix::from_rows(&rows).unwrap();
            let v = a.kernel_vector(DEFAULT_RANK_TOL);
            prop_assert!(v.is_some());
            let v = v.unwrap();
            let r = norm(&a.apply(&v));
            prop_assert!(r <= 1e-9 * norm(&v) * a.max_column_norm().max(1.0));
            prop_assert_eq!(Some(v), a.kernel_vector(DEFAULT_RANK_TOL));
        }
    }
}
