//! Minimal doubly stochastic completion. A doubly substochastic matrix B of
//! side n with sub-defect k embeds as the leading block of a doubly
//! stochastic matrix of side n+k, and no smaller one. The completion is built
//! by a greedy staircase fill of the appended blocks:
//!
//! ```text
//! full = | input   right  |      input:  n x n, the matrix B itself
//!        | bottom  corner |      right:  n x k, fills the row deficits
//!                                bottom: k x n, fills the column deficits
//!                                corner: k x k, zero except the last cell
//! ```
//!
//! [`verify_completion_structure`] re-checks the structural guarantees of the
//! construction (entry-sum bounds, filled lines, staircase sparsity) on any
//! claimed completion, minimal or not.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::matrices::{rat, rational_to_text, Matrix, Rational, SubstochasticMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompletionError {
    #[error("deficit {index} is {value}, outside [0, 1]")]
    DeficitOutOfRange { index: usize, value: Rational },
    #[error("deficits total {total} exceeds the {columns} available columns")]
    DeficitsExceedColumns { total: Rational, columns: usize },
    #[error("claimed completion is {rows}x{cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("declared input side {input_side} exceeds completion side {side}")]
    InputBlockTooLarge { input_side: usize, side: usize },
    #[error("completion entry at row {row}, column {col} is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: Rational },
    #[error("completion row {index} sums to {sum}, expected exactly 1")]
    RowSumNotOne { index: usize, sum: Rational },
    #[error("completion column {index} sums to {sum}, expected exactly 1")]
    ColumnSumNotOne { index: usize, sum: Rational },
}

/// A doubly stochastic matrix of side n+k presented as a completion of its
/// leading n×n block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionBlocks {
    full: Matrix,
    input_side: usize,
    appended: usize,
}

impl CompletionBlocks {
    /// Wraps an already-built completion. Checks that `full` is doubly
    /// stochastic and large enough; it does *not* check the staircase
    /// structure, so adversarial completions can be built and then fed to
    /// [`verify_completion_structure`].
    pub fn from_parts(full: Matrix, input_side: usize) -> Result<Self, CompletionError> {
        if !full.is_square() {
            return Err(CompletionError::NotSquare {
                rows: full.rows(),
                cols: full.cols(),
            });
        }
        let side = full.rows();
        if input_side > side {
            return Err(CompletionError::InputBlockTooLarge { input_side, side });
        }
        for r in 0..side {
            for c in 0..side {
                if full.at(r, c).is_negative() {
                    return Err(CompletionError::NegativeEntry {
                        row: r + 1,
                        col: c + 1,
                        value: full.at(r, c).clone(),
                    });
                }
            }
        }
        let one = rat(1);
        for (i, sum) in full.row_sums().into_iter().enumerate() {
            if sum != one {
                return Err(CompletionError::RowSumNotOne { index: i + 1, sum });
            }
        }
        for (i, sum) in full.col_sums().into_iter().enumerate() {
            if sum != one {
                return Err(CompletionError::ColumnSumNotOne { index: i + 1, sum });
            }
        }
        Ok(Self {
            full,
            input_side,
            appended: side - input_side,
        })
    }

    /// Side of the original matrix.
    pub fn input_side(&self) -> usize {
        self.input_side
    }

    /// Number of appended rows and columns.
    pub fn appended(&self) -> usize {
        self.appended
    }

    /// Side of the completed matrix.
    pub fn side(&self) -> usize {
        self.input_side + self.appended
    }

    pub fn full(&self) -> &Matrix {
        &self.full
    }

    pub fn into_full(self) -> Matrix {
        self.full
    }

    /// Leading block: the matrix that was completed.
    pub fn input_block(&self) -> Matrix {
        self.full.block(0..self.input_side, 0..self.input_side)
    }

    /// Appended columns next to the input block (n×k).
    pub fn right_block(&self) -> Matrix {
        self.full.block(0..self.input_side, self.input_side..self.side())
    }

    /// Appended rows under the input block (k×n).
    pub fn bottom_block(&self) -> Matrix {
        self.full.block(self.input_side..self.side(), 0..self.input_side)
    }

    /// Trailing k×k block; in a minimal completion it is zero except
    /// possibly the last diagonal cell.
    pub fn corner_block(&self) -> Matrix {
        self.full.block(self.input_side..self.side(), self.input_side..self.side())
    }
}

/// Greedy staircase fill: distributes `deficits` (one per row, each in
/// [0, 1]) over `k` unit-capacity columns. A cursor starts at the top left;
/// rows with zero remaining deficit are skipped; each placement is the
/// minimum of the remaining row deficit and the remaining column capacity;
/// the cursor moves down when a row completes, right when a column completes,
/// and diagonally when both do. The result has row sums equal to the
/// deficits, column sums at most 1, and at most two nonzeros per row.
pub fn staircase_fill(deficits: &[Rational], k: usize) -> Result<Matrix, CompletionError> {
    let one = rat(1);
    let mut total = Rational::zero();
    for (i, d) in deficits.iter().enumerate() {
        if d.is_negative() || *d > one {
            return Err(CompletionError::DeficitOutOfRange {
                index: i + 1,
                value: d.clone(),
            });
        }
        total += d;
    }
    if total > Rational::from_integer(BigInt::from(k)) {
        return Err(CompletionError::DeficitsExceedColumns { total, columns: k });
    }

    let n = deficits.len();
    let mut fill = Matrix::zeros(n, k);
    let mut row_left = deficits.to_vec();
    let mut col_left = vec![one; k];
    let (mut row, mut col) = (0, 0);
    while row < n && col < k {
        if row_left[row].is_zero() {
            row += 1;
            continue;
        }
        let placed = row_left[row].clone().min(col_left[col].clone());
        row_left[row] -= &placed;
        col_left[col] -= &placed;
        *fill.at_mut(row, col) = placed;
        // The placement exhausted the row, the column, or both.
        if row_left[row].is_zero() {
            row += 1;
        }
        if col_left[col].is_zero() {
            col += 1;
        }
    }
    debug_assert!(row_left.iter().all(Zero::is_zero), "unplaced deficit");
    Ok(fill)
}

/// The minimal doubly stochastic completion: k = sub_defect(B) rows and
/// columns are appended, the right block is a staircase fill of the row
/// deficits, the bottom block is the transposed staircase fill of the column
/// deficits, and the corner holds whatever the last appended line still
/// lacks. A doubly stochastic input is returned unchanged (k = 0).
pub fn minimal_completion(b: &SubstochasticMatrix) -> CompletionBlocks {
    let n = b.side();
    let k = b.sub_defect();
    let one = rat(1);
    let row_deficits: Vec<Rational> = b.matrix().row_sums().iter().map(|s| &one - s).collect();
    let col_deficits: Vec<Rational> = b.matrix().col_sums().iter().map(|s| &one - s).collect();
    let right = staircase_fill(&row_deficits, k).expect("sub-defect bounds the row deficits");
    let bottom = staircase_fill(&col_deficits, k)
        .expect("sub-defect bounds the column deficits")
        .transpose();

    let mut full = Matrix::zeros(n + k, n + k);
    for r in 0..n {
        for c in 0..n {
            *full.at_mut(r, c) = b.matrix().at(r, c).clone();
        }
        for c in 0..k {
            *full.at_mut(r, n + c) = right.at(r, c).clone();
        }
    }
    for r in 0..k {
        for c in 0..n {
            *full.at_mut(n + r, c) = bottom.at(r, c).clone();
        }
    }
    if k > 0 {
        let last_col_sum: Rational =
            (0..n).map(|r| right.at(r, k - 1)).fold(Rational::zero(), |acc, e| acc + e);
        let corner = one - last_col_sum;
        debug_assert!(!corner.is_negative(), "corner deficit cannot be negative");
        *full.at_mut(n + k - 1, n + k - 1) = corner;
    }
    debug_assert!(full.is_doubly_stochastic());
    CompletionBlocks {
        full,
        input_side: n,
        appended: k,
    }
}

/// One verified structural clause: whether it held, and what was observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseOutcome {
    pub ok: bool,
    pub detail: String,
}

impl ClauseOutcome {
    fn pass(detail: String) -> Self {
        Self { ok: true, detail }
    }

    fn check(ok: bool, detail: String) -> Self {
        Self { ok, detail }
    }
}

/// Everything [`verify_completion_structure`] measures about a completion,
/// clause by clause. The mass clauses bound the appended blocks' entry sums
/// and line sums; the sparsity clauses bound their nonzero counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureReport {
    pub sigma_right: Rational,
    pub sigma_bottom: Rational,
    pub column_sums_right: Vec<Rational>,
    pub row_sums_bottom: Vec<Rational>,
    pub nnz_input: usize,
    pub nnz_right: usize,
    pub nnz_bottom: usize,
    pub nnz_corner: usize,
    pub nnz_full: usize,
    /// k−1 < σ(right) = σ(bottom) ≤ k.
    pub mass_bounds: ClauseOutcome,
    /// Columns 1..k−1 of the right block and rows 1..k−1 of the bottom block
    /// sum to exactly 1; every column of the right block and every row of the
    /// bottom block has a positive entry.
    pub filled_lines: ClauseOutcome,
    /// nnz(right) ≤ n+k−1, no row of the right block has more than two
    /// nonzeros, and at most k−1 rows have two.
    pub staircase_sparsity: ClauseOutcome,
    /// The corner block is zero except possibly its last diagonal cell.
    pub corner_confinement: ClauseOutcome,
    /// nnz(full) ≤ nnz(input) + 2(n+k) − 1.
    pub total_sparsity: ClauseOutcome,
}

impl StructureReport {
    /// Entry-sum and line-sum clauses together.
    pub fn mass_clauses_ok(&self) -> bool {
        self.mass_bounds.ok && self.filled_lines.ok
    }

    /// Nonzero-count clauses together.
    pub fn sparsity_clauses_ok(&self) -> bool {
        self.staircase_sparsity.ok && self.corner_confinement.ok && self.total_sparsity.ok
    }

    pub fn all_ok(&self) -> bool {
        self.mass_clauses_ok() && self.sparsity_clauses_ok()
    }

    /// Clauses with stable names, in report order.
    pub fn clauses(&self) -> [(&'static str, &ClauseOutcome); 5] {
        [
            ("mass_bounds", &self.mass_bounds),
            ("filled_lines", &self.filled_lines),
            ("staircase_sparsity", &self.staircase_sparsity),
            ("corner_confinement", &self.corner_confinement),
            ("total_sparsity", &self.total_sparsity),
        ]
    }
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "sigma_right={} sigma_bottom={} nnz_input={} nnz_right={} nnz_bottom={} nnz_corner={} nnz_full={}",
            rational_to_text(&self.sigma_right),
            rational_to_text(&self.sigma_bottom),
            self.nnz_input,
            self.nnz_right,
            self.nnz_bottom,
            self.nnz_corner,
            self.nnz_full,
        )?;
        for (name, outcome) in self.clauses() {
            writeln!(
                f,
                "{}: {} ({})",
                name,
                if outcome.ok { "ok" } else { "FAIL" },
                outcome.detail
            )?;
        }
        Ok(())
    }
}

/// Re-measures a claimed completion against the structural guarantees of the
/// minimal construction. Never fails: violations are recorded in the report.
/// With no appended lines (k = 0) every clause passes vacuously.
pub fn verify_completion_structure(blocks: &CompletionBlocks) -> StructureReport {
    let n = blocks.input_side();
    let k = blocks.appended();
    let input = blocks.input_block();
    let right = blocks.right_block();
    let bottom = blocks.bottom_block();
    let corner = blocks.corner_block();

    let sigma_right = right.sigma();
    let sigma_bottom = bottom.sigma();
    let column_sums_right = right.col_sums();
    let row_sums_bottom = bottom.row_sums();
    let nnz_input = input.nnz();
    let nnz_right = right.nnz();
    let nnz_bottom = bottom.nnz();
    let nnz_corner = corner.nnz();
    let nnz_full = blocks.full().nnz();

    let (mass_bounds, filled_lines, staircase_sparsity, corner_confinement, total_sparsity);
    if k == 0 {
        let vacuous = || ClauseOutcome::pass("vacuous: nothing appended".to_string());
        mass_bounds = vacuous();
        filled_lines = vacuous();
        staircase_sparsity = vacuous();
        corner_confinement = vacuous();
        total_sparsity = vacuous();
    } else {
        let low = rat(k as i64 - 1);
        let high = rat(k as i64);
        mass_bounds = ClauseOutcome::check(
            sigma_right == sigma_bottom && low < sigma_right && sigma_right <= high,
            format!(
                "appended mass {} and {} must be equal and in ({}, {}]",
                rational_to_text(&sigma_right),
                rational_to_text(&sigma_bottom),
                k - 1,
                k
            ),
        );

        let one = rat(1);
        let interior_filled = column_sums_right[..k - 1].iter().all(|s| *s == one)
            && row_sums_bottom[..k - 1].iter().all(|s| *s == one);
        let every_line_touched = (0..k).all(|c| (0..n).any(|r| !right.at(r, c).is_zero()))
            && (0..k).all(|r| (0..n).any(|c| !bottom.at(r, c).is_zero()));
        filled_lines = ClauseOutcome::check(
            interior_filled && every_line_touched,
            format!(
                "right column sums {:?}, bottom row sums {:?}; the first {} of each must be 1 and none may be empty",
                column_sums_right.iter().map(rational_to_text).collect::<Vec<_>>(),
                row_sums_bottom.iter().map(rational_to_text).collect::<Vec<_>>(),
                k - 1
            ),
        );

        let row_nnz: Vec<usize> = (0..n)
            .map(|r| (0..k).filter(|&c| !right.at(r, c).is_zero()).count())
            .collect();
        let rows_with_two = row_nnz.iter().filter(|&&c| c == 2).count();
        staircase_sparsity = ClauseOutcome::check(
            nnz_right <= n + k - 1
                && row_nnz.iter().all(|&c| c <= 2)
                && rows_with_two <= k - 1,
            format!(
                "right block has {} nonzeros (limit {}), max {} per row (limit 2), {} rows with two (limit {})",
                nnz_right,
                n + k - 1,
                row_nnz.iter().max().copied().unwrap_or(0),
                rows_with_two,
                k - 1
            ),
        );

        let off_corner_nnz = (0..k)
            .flat_map(|r| (0..k).map(move |c| (r, c)))
            .filter(|&(r, c)| !(r == k - 1 && c == k - 1) && !corner.at(r, c).is_zero())
            .count();
        corner_confinement = ClauseOutcome::check(
            off_corner_nnz == 0,
            format!(
                "{} nonzeros outside the corner's last diagonal cell (limit 0)",
                off_corner_nnz
            ),
        );

        total_sparsity = ClauseOutcome::check(
            nnz_full <= nnz_input + 2 * (n + k) - 1,
            format!(
                "completion has {} nonzeros (limit {} + {} = {})",
                nnz_full,
                nnz_input,
                2 * (n + k) - 1,
                nnz_input + 2 * (n + k) - 1
            ),
        );
    }

    StructureReport {
        sigma_right,
        sigma_bottom,
        column_sums_right,
        row_sums_bottom,
        nnz_input,
        nnz_right,
        nnz_bottom,
        nnz_corner,
        nnz_full,
        mass_bounds,
        filled_lines,
        staircase_sparsity,
        corner_confinement,
        total_sparsity,
    }
}
