//! Exact Gaussian elimination over the rationals. Deterministic: pivots are
//! chosen as the first nonzero entry in column order, so identical inputs
//! always produce identical bases.

use num_traits::Zero;

use super::{Matrix, Rational};

/// Reduced row echelon form, in place on a row-of-rows representation.
/// Returns the pivot column of each pivot row, in order.
pub(crate) fn rref(rows: &mut [Vec<Rational>]) -> Vec<usize> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut pivot_row = 0;
    for col in 0..cols {
        let Some(src) = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, src);
        let inv = rows[pivot_row][col].recip();
        for e in rows[pivot_row].iter_mut() {
            *e *= &inv;
        }
        for r in 0..rows.len() {
            if r != pivot_row && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                // Indexing both the pivot row (read) and row r (write).
                #[allow(clippy::needless_range_loop)]
                for c in col..cols {
                    let delta = &rows[pivot_row][c] * &factor;
                    rows[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
        if pivot_row == rows.len() {
            break;
        }
    }
    pivots
}

/// Basis of the right nullspace { x : Mx = 0 }, one vector per free column,
/// in increasing free-column order. Each basis vector has a 1 in its free
/// column and zeros in the other free columns.
pub fn rational_nullspace(m: &Matrix) -> Vec<Vec<Rational>> {
    let cols = m.cols();
    let mut rows: Vec<Vec<Rational>> = (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
    let pivots = rref(&mut rows);
    let mut basis = Vec::with_capacity(cols - pivots.len());
    let mut next_pivot = 0;
    for free in 0..cols {
        if next_pivot < pivots.len() && pivots[next_pivot] == free {
            next_pivot += 1;
            continue;
        }
        let mut v = vec![Rational::zero(); cols];
        v[free] = super::rat(1);
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -rows[row][free].clone();
        }
        basis.push(v);
    }
    basis
}
