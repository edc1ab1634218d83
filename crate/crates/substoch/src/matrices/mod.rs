//! Exact rational scalars, dense matrices, and the rational linear algebra
//! used by every other module. No floating point anywhere: entries are
//! arbitrary-precision fractions and all comparisons are exact.

mod linalg;
mod rational;

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

pub use linalg::rational_nullspace;
pub(crate) use linalg::rref;
pub use rational::{frac, rat, rational_from_text, rational_to_text, Rational};

/// Indices in error messages are 1-based, matching the file formats.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("malformed number {text:?}: expected digits, digits.digits, or digits/digits")]
    MalformedNumber { text: String },
    #[error("zero denominator in {text:?}")]
    ZeroDenominator { text: String },
    #[error("entry grid has {found} cells, expected {rows}x{cols}")]
    EntryCountMismatch { rows: usize, cols: usize, found: usize },
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("entry at row {row}, column {col} is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: Rational },
    #[error("row {index} sum {sum} exceeds 1 by {excess}")]
    RowSumExceedsOne { index: usize, sum: Rational, excess: Rational },
    #[error("column {index} sum {sum} exceeds 1 by {excess}")]
    ColumnSumExceedsOne { index: usize, sum: Rational, excess: Rational },
}

/// Dense row-major matrix of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self, MatrixError> {
        if entries.len() != rows * cols {
            return Err(MatrixError::EntryCountMismatch {
                rows,
                cols,
                found: entries.len(),
            });
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, MatrixError> {
        let cols = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(MatrixError::RaggedRow {
                    row: i + 1,
                    expected: cols,
                    found: row.len(),
                });
            }
        }
        let row_count = rows.len();
        Ok(Self {
            rows: row_count,
            cols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    /// Parses a grid of exact numbers: rows separated by `;` or newlines,
    /// entries by whitespace.
    pub fn from_text(text: &str) -> Result<Self, MatrixError> {
        let mut rows = Vec::new();
        for line in text.split([';', '\n']) {
            let row: Vec<Rational> = line
                .split_whitespace()
                .map(rational_from_text)
                .collect::<Result<_, _>>()?;
            if !row.is_empty() {
                rows.push(row);
            }
        }
        Self::from_rows(rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = rat(1);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn at(&self, row: usize, col: usize) -> &Rational {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        &self.entries[row * self.cols + col]
    }

    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut Rational {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        &mut self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[Rational] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(c, r) = self.at(r, c).clone();
            }
        }
        out
    }

    /// Sum of all entries.
    pub fn sigma(&self) -> Rational {
        self.entries.iter().fold(Rational::zero(), |acc, e| acc + e)
    }

    pub fn row_sums(&self) -> Vec<Rational> {
        (0..self.rows)
            .map(|r| self.row(r).iter().fold(Rational::zero(), |acc, e| acc + e))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<Rational> {
        let mut sums = vec![Rational::zero(); self.cols];
        for r in 0..self.rows {
            for (c, sum) in sums.iter_mut().enumerate() {
                *sum += self.at(r, c);
            }
        }
        sums
    }

    /// All row sums and all column sums, in index order.
    pub fn line_sums(&self) -> (Vec<Rational>, Vec<Rational>) {
        (self.row_sums(), self.col_sums())
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|e| !e.is_zero()).count()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    /// Exact check: square, nonnegative, every line sum equal to 1.
    pub fn is_doubly_stochastic(&self) -> bool {
        self.is_square()
            && self.entries.iter().all(|e| !e.is_negative())
            && self.row_sums().iter().all(rational::is_one)
            && self.col_sums().iter().all(rational::is_one)
    }

    /// Copy of the leading `side`x`side` block.
    pub fn leading_block(&self, side: usize) -> Matrix {
        assert!(side <= self.rows && side <= self.cols);
        let mut out = Matrix::zeros(side, side);
        for r in 0..side {
            for c in 0..side {
                *out.at_mut(r, c) = self.at(r, c).clone();
            }
        }
        out
    }

    /// Copy of the rectangular block with the given corners (half-open).
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
        assert!(rows.end <= self.rows && cols.end <= self.cols);
        let mut out = Matrix::zeros(rows.len(), cols.len());
        for (ri, r) in rows.clone().enumerate() {
            for (ci, c) in cols.clone().enumerate() {
                *out.at_mut(ri, ci) = self.at(r, c).clone();
            }
        }
        out
    }

    pub fn scale(&self, factor: &Rational) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(rational_to_text).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// A validated doubly substochastic matrix: square, nonnegative, every row
/// and column sum at most 1. Caches the entry sum and the sub-defect
/// k = ceil(n - sigma), the smallest number of rows and columns that must be
/// appended to reach a doubly stochastic matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstochasticMatrix {
    inner: Matrix,
    sigma: Rational,
    sub_defect: usize,
}

impl SubstochasticMatrix {
    /// Validates exactly, with no tolerance. Reports the first violation in
    /// row-major / row-then-column order, 1-based.
    pub fn new(matrix: Matrix) -> Result<Self, MatrixError> {
        if !matrix.is_square() {
            return Err(MatrixError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        for r in 0..matrix.rows() {
            for c in 0..matrix.cols() {
                if matrix.at(r, c).is_negative() {
                    return Err(MatrixError::NegativeEntry {
                        row: r + 1,
                        col: c + 1,
                        value: matrix.at(r, c).clone(),
                    });
                }
            }
        }
        let one = rat(1);
        for (i, sum) in matrix.row_sums().into_iter().enumerate() {
            if sum > one {
                let excess = &sum - &one;
                return Err(MatrixError::RowSumExceedsOne { index: i + 1, sum, excess });
            }
        }
        for (i, sum) in matrix.col_sums().into_iter().enumerate() {
            if sum > one {
                let excess = &sum - &one;
                return Err(MatrixError::ColumnSumExceedsOne { index: i + 1, sum, excess });
            }
        }
        let sigma = matrix.sigma();
        let sub_defect = compute_sub_defect(matrix.rows(), &sigma);
        Ok(Self {
            inner: matrix,
            sigma,
            sub_defect,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    pub fn side(&self) -> usize {
        self.inner.rows()
    }

    pub fn sigma(&self) -> &Rational {
        &self.sigma
    }

    /// ceil(n - sigma): 0 exactly when the matrix is doubly stochastic.
    pub fn sub_defect(&self) -> usize {
        self.sub_defect
    }
}

/// Validates a square matrix as doubly substochastic. Alias for
/// [`SubstochasticMatrix::new`].
pub fn validate_substochastic(matrix: Matrix) -> Result<SubstochasticMatrix, MatrixError> {
    SubstochasticMatrix::new(matrix)
}

fn compute_sub_defect(n: usize, sigma: &Rational) -> usize {
    let deficit = Rational::from_integer(BigInt::from(n)) - sigma;
    debug_assert!(!deficit.is_negative());
    let k = deficit.ceil().to_integer();
    usize::try_from(k).expect("sub-defect fits usize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(text: &str) -> Matrix {
        Matrix::from_text(text).unwrap()
    }

    /// 4x4 matrix used throughout: entry sums and the completion are pinned
    /// by golden tests.
    pub(crate) fn sample_4x4() -> Matrix {
        mat("0.1 0 0.2 0.1; 0 0.2 0.1 0; 0.2 0 0 0.1; 0.1 0.2 0.3 0.2")
    }

    #[test]
    fn sigma_of_sample() {
        assert_eq!(sample_4x4().sigma(), frac(9, 5));
        assert_eq!(Matrix::zeros(3, 3).sigma(), rat(0));
        assert_eq!(mat("7/12 0; 1/6 1/2").sigma(), frac(5, 4));
    }

    #[test]
    fn line_sums_of_sample() {
        let (rows, cols) = sample_4x4().line_sums();
        assert_eq!(rows, vec![frac(2, 5), frac(3, 10), frac(3, 10), frac(4, 5)]);
        assert_eq!(cols, vec![frac(2, 5), frac(2, 5), frac(3, 5), frac(2, 5)]);
        let (rows, cols) = Matrix::identity(2).line_sums();
        assert_eq!(rows, vec![rat(1), rat(1)]);
        assert_eq!(cols, vec![rat(1), rat(1)]);
        let (rows, cols) = Matrix::zeros(2, 2).line_sums();
        assert_eq!(rows, vec![rat(0), rat(0)]);
        assert_eq!(cols, vec![rat(0), rat(0)]);
    }

    #[test]
    fn validates_sample_with_sub_defect_three() {
        let b = SubstochasticMatrix::new(sample_4x4()).unwrap();
        assert_eq!(b.sub_defect(), 3);
        assert_eq!(b.sigma(), &frac(9, 5));
    }

    #[test]
    fn identity_is_substochastic_with_zero_defect() {
        let b = SubstochasticMatrix::new(Matrix::identity(2)).unwrap();
        assert_eq!(b.sub_defect(), 0);
    }

    #[test]
    fn rejects_row_sum_over_one() {
        let err = SubstochasticMatrix::new(mat("1 1/2; 0 0")).unwrap_err();
        assert_eq!(
            err,
            MatrixError::RowSumExceedsOne {
                index: 1,
                sum: frac(3, 2),
                excess: frac(1, 2),
            }
        );
    }

    #[test]
    fn rejects_negative_entry_with_position() {
        let err = SubstochasticMatrix::new(mat("0 0; -1/2 0")).unwrap_err();
        assert_eq!(
            err,
            MatrixError::NegativeEntry {
                row: 2,
                col: 1,
                value: frac(-1, 2),
            }
        );
    }

    #[test]
    fn rejects_non_square() {
        let err = SubstochasticMatrix::new(mat("0 0 0; 0 0 0")).unwrap_err();
        assert_eq!(err, MatrixError::NotSquare { rows: 2, cols: 3 });
    }

    #[test]
    fn sub_defect_extremes() {
        for n in 1..=5 {
            let zero = SubstochasticMatrix::new(Matrix::zeros(n, n)).unwrap();
            assert_eq!(zero.sub_defect(), n);
            let id = SubstochasticMatrix::new(Matrix::identity(n)).unwrap();
            assert_eq!(id.sub_defect(), 0);
        }
    }

    #[test]
    fn example_matrix_has_sub_defect_one() {
        let a = SubstochasticMatrix::new(mat("7/12 0; 1/6 1/2")).unwrap();
        assert_eq!(a.sub_defect(), 1);
    }

    #[test]
    fn ragged_text_is_rejected() {
        let err = Matrix::from_text("1 2; 3").unwrap_err();
        assert_eq!(err, MatrixError::RaggedRow { row: 2, expected: 2, found: 1 });
    }
}
