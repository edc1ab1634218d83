//! Decomposition of doubly substochastic matrices into convex combinations
//! of subpermutation matrices, within the bound nnz(B) + t:
//!
//! 1. complete B to the minimal doubly stochastic matrix B^comp,
//! 2. expand B^comp greedily into permutation matrices (Birkhoff),
//! 3. reduce the combination to at most face_dimension + 1 terms by
//!    eliminating affine dependencies (Carathéodory),
//! 4. truncate every term back to the leading n×n block and merge
//!    duplicates.
//!
//! Here t is the number of fully indecomposable components of B^comp's
//! support, and face_dimension + 1 ≤ nnz(B) + t, so the reduction step is
//! what guarantees the bound.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::completion::{minimal_completion, CompletionBlocks};
use crate::matrices::{rat, Matrix, Rational, SubstochasticMatrix};
use crate::structure::{
    face_dimension, fully_indecomposable_components, perfect_matching, Matching, StructureError,
    SupportPattern,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecomposeError {
    #[error("matrix is not doubly stochastic")]
    NotDoublyStochastic,
    #[error("assignment pair ({row}, {col}) is out of range or collides for side {side}")]
    InvalidAssignment { row: usize, col: usize, side: usize },
    #[error("term {index} uses cell ({row}, {col}) outside the face")]
    TermEscapesFace { index: usize, row: usize, col: usize },
    #[error("scale factor {value} is outside [0, 1]")]
    ScaleOutOfRange { value: Rational },
    #[error("target side {target} exceeds the combination's side {side}")]
    TargetSideExceedsTermSide { target: usize, side: usize },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("internal invariant violated: {detail}")]
    Internal { detail: String },
}

/// A 0/1 matrix with at most one 1 per row and per column, stored as a
/// partial injective row → column assignment. The zero matrix (empty
/// assignment) and the permutation matrices (full assignment) are the two
/// extremes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subpermutation {
    side: usize,
    assignment: BTreeMap<usize, usize>,
}

impl Subpermutation {
    pub fn zero(side: usize) -> Self {
        Self { side, assignment: BTreeMap::new() }
    }

    pub fn identity(side: usize) -> Self {
        Self {
            side,
            assignment: (0..side).map(|i| (i, i)).collect(),
        }
    }

    /// Builds from (row, column) pairs, rejecting out-of-range indices and
    /// repeated rows or columns.
    pub fn from_pairs(
        side: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, DecomposeError> {
        let mut assignment = BTreeMap::new();
        let mut used_cols = BTreeSet::new();
        for (row, col) in pairs {
            let bad = row >= side
                || col >= side
                || assignment.insert(row, col).is_some()
                || !used_cols.insert(col);
            if bad {
                return Err(DecomposeError::InvalidAssignment {
                    row: row + 1,
                    col: col + 1,
                    side,
                });
            }
        }
        Ok(Self { side, assignment })
    }

    pub fn from_matching(side: usize, matching: &Matching) -> Self {
        Self {
            side,
            assignment: matching.pairs().collect(),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of assigned rows (number of 1s).
    pub fn rank(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_permutation(&self) -> bool {
        self.rank() == self.side
    }

    pub fn column_of(&self, row: usize) -> Option<usize> {
        self.assignment.get(&row).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignment.iter().map(|(&r, &c)| (r, c))
    }

    /// Restriction to the leading `side`×`side` block: pairs whose row or
    /// column falls outside are dropped.
    pub fn restricted(&self, side: usize) -> Subpermutation {
        Subpermutation {
            side,
            assignment: self
                .pairs()
                .filter(|&(r, c)| r < side && c < side)
                .collect(),
        }
    }

    /// Direct sum with a leading identity: the result acts as the identity
    /// on the first `k` indices and as `self`, shifted by `k`, after them.
    pub fn lifted(&self, k: usize) -> Subpermutation {
        Subpermutation {
            side: self.side + k,
            assignment: (0..k)
                .map(|i| (i, i))
                .chain(self.pairs().map(|(r, c)| (r + k, c + k)))
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.side, self.side);
        for (r, c) in self.pairs() {
            *m.at_mut(r, c) = rat(1);
        }
        m
    }
}

/// A weighted list of subpermutation terms. The pipeline keeps the contract
/// — positive weights summing to 1, pairwise distinct terms — and
/// [`verify_combination`] re-checks it on any claimed combination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvexCombination {
    side: usize,
    terms: Vec<(Rational, Subpermutation)>,
}

impl ConvexCombination {
    pub fn new(side: usize, terms: Vec<(Rational, Subpermutation)>) -> Self {
        Self { side, terms }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn terms(&self) -> &[(Rational, Subpermutation)] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn weight_sum(&self) -> Rational {
        self.terms.iter().fold(Rational::zero(), |acc, (w, _)| acc + w)
    }

    /// The represented matrix: Σ weight · term.
    pub fn value(&self) -> Matrix {
        let mut m = Matrix::zeros(self.side, self.side);
        for (w, term) in &self.terms {
            for (r, c) in term.pairs() {
                *m.at_mut(r, c) += w;
            }
        }
        m
    }
}

/// Greedy Birkhoff expansion of a doubly stochastic matrix: repeatedly take
/// the lexicographically smallest perfect matching of the remainder's
/// support, subtract it with the minimum matched entry as weight, and stop
/// at zero. Produces at most nnz(A) − n + 1 permutation terms whose weights
/// sum to 1.
pub fn greedy_birkhoff(a: &Matrix) -> Result<ConvexCombination, DecomposeError> {
    if !a.is_doubly_stochastic() {
        return Err(DecomposeError::NotDoublyStochastic);
    }
    let n = a.rows();
    if n == 0 {
        // Degenerate 0×0 input: one empty term keeps the weights summing to 1.
        return Ok(ConvexCombination::new(0, vec![(rat(1), Subpermutation::zero(0))]));
    }
    let mut remainder = a.clone();
    let mut terms = Vec::new();
    while !remainder.is_zero() {
        let pattern = SupportPattern::from_matrix(&remainder)
            .expect("remainder stays square");
        let matching = perfect_matching(&pattern).ok_or_else(|| DecomposeError::Internal {
            detail: "doubly stochastic remainder lost its perfect matching".to_string(),
        })?;
        let weight = matching
            .pairs()
            .map(|(r, c)| remainder.at(r, c).clone())
            .min()
            .expect("perfect matching is nonempty");
        for (r, c) in matching.pairs() {
            *remainder.at_mut(r, c) -= &weight;
        }
        terms.push((weight, Subpermutation::from_matching(n, &matching)));
    }
    Ok(ConvexCombination::new(n, terms))
}

/// Carathéodory reduction: while the combination has more terms than
/// face_dimension(face) + 1, find a rational affine dependency among the
/// terms (flattened over the face's cells, plus a constant-1 coordinate),
/// shift the weights along it until the first one reaches zero, and drop the
/// vanished terms. The represented value never changes, and the result has
/// at most face_dimension + 1 terms.
///
/// Deterministic: the dependency always comes from the first
/// linearly dependent column, and weight ties are broken by smallest index.
pub fn caratheodory_reduce(
    combo: ConvexCombination,
    face: &SupportPattern,
) -> Result<ConvexCombination, DecomposeError> {
    let side = combo.side();
    for (index, (_, term)) in combo.terms().iter().enumerate() {
        if let Some((r, c)) = term.pairs().find(|&(r, c)| !face.contains(r, c)) {
            return Err(DecomposeError::TermEscapesFace {
                index: index + 1,
                row: r + 1,
                col: c + 1,
            });
        }
    }
    let target = face_dimension(face)? + 1;
    if combo.term_count() <= target {
        return Ok(combo);
    }

    let cells: Vec<(usize, usize)> = face.cells().collect();
    let cell_index: BTreeMap<(usize, usize), usize> =
        cells.iter().copied().enumerate().map(|(i, cell)| (cell, i)).collect();
    let mut terms = combo.terms.clone();

    // Row-reduced tableau over the flattened terms: one column per term, one
    // row per face cell plus a final constant-1 row (the affine condition).
    // After the initial reduction only pivot rows are kept; `pivot_cols[r]`
    // is the column carrying row r's pivot. Every non-pivot column then
    // reads off a dependency against the pivot columns directly.
    let mut tableau: Vec<Vec<Rational>> = vec![vec![Rational::zero(); terms.len()]; cells.len() + 1];
    for (j, (_, term)) in terms.iter().enumerate() {
        for (r, c) in term.pairs() {
            tableau[cell_index[&(r, c)]][j] = rat(1);
        }
        tableau[cells.len()][j] = rat(1);
    }
    let mut pivot_cols = Vec::new();
    {
        let mut pivot_row = 0;
        for col in 0..terms.len() {
            let Some(src) = (pivot_row..tableau.len()).find(|&r| !tableau[r][col].is_zero())
            else {
                continue;
            };
            tableau.swap(pivot_row, src);
            let inv = tableau[pivot_row][col].recip();
            for e in tableau[pivot_row].iter_mut() {
                *e *= &inv;
            }
            for r in 0..tableau.len() {
                if r != pivot_row && !tableau[r][col].is_zero() {
                    let factor = tableau[r][col].clone();
                    // Indexing both the pivot row (read) and row r (write).
                    #[allow(clippy::needless_range_loop)]
                    for c in 0..terms.len() {
                        let delta = &tableau[pivot_row][c] * &factor;
                        tableau[r][c] -= delta;
                    }
                }
            }
            pivot_cols.push(col);
            pivot_row += 1;
        }
        tableau.truncate(pivot_cols.len());
    }

    while terms.len() > target {
        let mut is_pivot = vec![false; terms.len()];
        for &pc in &pivot_cols {
            is_pivot[pc] = true;
        }
        let free = (0..terms.len()).find(|&j| !is_pivot[j]).ok_or_else(|| {
            DecomposeError::Internal {
                detail: format!(
                    "{} independent terms exceed the face dimension bound {}",
                    terms.len(),
                    target
                ),
            }
        })?;

        // Dependency: free column minus its expression in the pivot columns.
        let mut dependency = vec![Rational::zero(); terms.len()];
        dependency[free] = rat(1);
        for (row, &pc) in pivot_cols.iter().enumerate() {
            dependency[pc] = -tableau[row][free].clone();
        }

        // Largest step that keeps all weights nonnegative; ties take the
        // smallest index, and at least `free` itself has a positive entry.
        let mut step: Option<Rational> = None;
        for (i, l) in dependency.iter().enumerate() {
            if l.is_positive() {
                let ratio = &terms[i].0 / l;
                let improves = match &step {
                    None => true,
                    Some(best) => ratio < *best,
                };
                if improves {
                    step = Some(ratio);
                }
            }
        }
        let step = step.expect("dependency has a positive entry");
        for (i, l) in dependency.iter().enumerate() {
            let delta = &step * l;
            terms[i].0 -= delta;
        }

        for j in (0..terms.len()).rev() {
            if terms[j].0.is_zero() {
                drop_column(&mut tableau, &mut pivot_cols, j);
                terms.remove(j);
            }
        }
    }

    Ok(ConvexCombination::new(side, terms))
}

/// Removes column `j` from the reduced tableau, repairing the pivot
/// structure when `j` carried a pivot: the pivot moves to the smallest
/// remaining column with a nonzero entry in that row, or the row disappears
/// if none exists.
fn drop_column(tableau: &mut Vec<Vec<Rational>>, pivot_cols: &mut Vec<usize>, j: usize) {
    if let Some(row) = pivot_cols.iter().position(|&pc| pc == j) {
        let replacement = (0..tableau[row].len())
            .find(|&q| q != j && !tableau[row][q].is_zero());
        if let Some(q) = replacement {
            let inv = tableau[row][q].recip();
            for e in tableau[row].iter_mut() {
                *e *= &inv;
            }
            for r in 0..tableau.len() {
                if r != row && !tableau[r][q].is_zero() {
                    let factor = tableau[r][q].clone();
                    for c in 0..tableau[r].len() {
                        let delta = &tableau[row][c] * &factor;
                        tableau[r][c] -= delta;
                    }
                }
            }
            pivot_cols[row] = q;
        } else {
            tableau.remove(row);
            pivot_cols.remove(row);
        }
    }
    for r in tableau.iter_mut() {
        r.remove(j);
    }
    for pc in pivot_cols.iter_mut() {
        if *pc > j {
            *pc -= 1;
        }
    }
}

/// Restricts every term of a side n+k combination to its leading n×n block
/// and merges terms that become identical (first occurrence keeps its
/// position; weights add). The value of the result is the leading n×n block
/// of the input's value.
pub fn truncate_and_merge(
    combo: ConvexCombination,
    target_side: usize,
) -> Result<ConvexCombination, DecomposeError> {
    if target_side > combo.side() {
        return Err(DecomposeError::TargetSideExceedsTermSide {
            target: target_side,
            side: combo.side(),
        });
    }
    let mut merged: Vec<(Rational, Subpermutation)> = Vec::new();
    for (weight, term) in combo.terms {
        let cut = term.restricted(target_side);
        match merged.iter_mut().find(|(_, existing)| *existing == cut) {
            Some((w, _)) => *w += weight,
            None => merged.push((weight, cut)),
        }
    }
    Ok(ConvexCombination::new(target_side, merged))
}

/// How a decomposition run went: the completion it used, the combination on
/// the completed side, the final truncated combination, and every count the
/// bound story needs.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub input: SubstochasticMatrix,
    pub completion: CompletionBlocks,
    /// Combination on the completed (n+k) side, after any reduction.
    pub completion_combination: ConvexCombination,
    /// The deliverable: a combination of side-n subpermutations.
    pub combination: ConvexCombination,
    /// Terms straight out of the greedy expansion.
    pub greedy_count: usize,
    /// Terms after the Carathéodory pass (equals greedy_count when reduction
    /// is disabled).
    pub reduced_count: usize,
    /// Terms in the final combination.
    pub term_count: usize,
    /// Face dimension of the completion's support.
    pub face_dim: usize,
    /// Fully indecomposable components of the completion's support.
    pub component_count: usize,
    /// nnz(input) + component_count.
    pub bound: usize,
}

/// Pipeline switches. `reduce` is on by default; turning it off skips the
/// Carathéodory pass, which voids the term-count guarantee.
#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    pub reduce: bool,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { reduce: true }
    }
}

/// Full pipeline with the default options: the result reconstructs B
/// exactly with at most nnz(B) + t terms.
pub fn decompose_substochastic(
    b: &SubstochasticMatrix,
) -> Result<DecompositionReport, DecomposeError> {
    decompose_with_options(b, DecomposeOptions::default())
}

pub fn decompose_with_options(
    b: &SubstochasticMatrix,
    options: DecomposeOptions,
) -> Result<DecompositionReport, DecomposeError> {
    let completion = minimal_completion(b);
    let support = SupportPattern::from_matrix(completion.full())
        .expect("completion is square");
    let component_count = fully_indecomposable_components(&support)?.t();
    let face_dim = face_dimension(&support)?;
    let greedy = greedy_birkhoff(completion.full())?;
    let greedy_count = greedy.term_count();
    let reduced = if options.reduce {
        caratheodory_reduce(greedy, &support)?
    } else {
        greedy
    };
    let reduced_count = reduced.term_count();
    let combination = truncate_and_merge(reduced.clone(), b.side())?;
    let term_count = combination.term_count();
    Ok(DecompositionReport {
        input: b.clone(),
        completion,
        completion_combination: reduced,
        combination,
        greedy_count,
        reduced_count,
        term_count,
        face_dim,
        component_count,
        bound: b.matrix().nnz() + component_count,
    })
}

/// The term-count bound nnz(B) + t, where t counts the fully indecomposable
/// components of the minimal completion's support.
pub fn bound(b: &SubstochasticMatrix) -> usize {
    let completion = minimal_completion(b);
    let support = SupportPattern::from_matrix(completion.full())
        .expect("completion is square");
    let t = fully_indecomposable_components(&support)
        .expect("doubly stochastic support always decomposes")
        .t();
    b.matrix().nnz() + t
}

/// The first reason a claimed combination fails to be a convex combination
/// of subpermutations reconstructing the matrix, if any. Indices and cells
/// are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombinationFlaw {
    #[error("matrix side {matrix_side} does not match combination side {combination_side}")]
    SideMismatch { matrix_side: usize, combination_side: usize },
    #[error("term {index} has side {term_side}, expected {combination_side}")]
    TermSideMismatch { index: usize, term_side: usize, combination_side: usize },
    #[error("term {index} has nonpositive weight {weight}")]
    NonpositiveWeight { index: usize, weight: Rational },
    #[error("weights sum to {sum}, expected exactly 1")]
    WeightSumNotOne { sum: Rational },
    #[error("terms {first} and {second} are identical")]
    DuplicateTerm { first: usize, second: usize },
    #[error("reconstruction mismatch at ({row}, {col}): combination gives {actual}, matrix has {expected}")]
    ReconstructionMismatch { row: usize, col: usize, expected: Rational, actual: Rational },
}

/// Checks a claimed combination against a matrix: positive weights, weights
/// summing to 1, distinct terms, and exact entrywise reconstruction.
/// `Ok(())` means the combination is valid; otherwise the first failing
/// condition is reported.
pub fn verify_combination(b: &Matrix, combo: &ConvexCombination) -> Result<(), CombinationFlaw> {
    if !b.is_square() || b.rows() != combo.side() {
        return Err(CombinationFlaw::SideMismatch {
            matrix_side: b.rows(),
            combination_side: combo.side(),
        });
    }
    for (i, (_, term)) in combo.terms().iter().enumerate() {
        if term.side() != combo.side() {
            return Err(CombinationFlaw::TermSideMismatch {
                index: i + 1,
                term_side: term.side(),
                combination_side: combo.side(),
            });
        }
    }
    for (i, (weight, _)) in combo.terms().iter().enumerate() {
        if !weight.is_positive() {
            return Err(CombinationFlaw::NonpositiveWeight {
                index: i + 1,
                weight: weight.clone(),
            });
        }
    }
    let sum = combo.weight_sum();
    if sum != rat(1) {
        return Err(CombinationFlaw::WeightSumNotOne { sum });
    }
    for i in 0..combo.term_count() {
        for j in i + 1..combo.term_count() {
            if combo.terms()[i].1 == combo.terms()[j].1 {
                return Err(CombinationFlaw::DuplicateTerm { first: i + 1, second: j + 1 });
            }
        }
    }
    let value = combo.value();
    for r in 0..b.rows() {
        for c in 0..b.cols() {
            if value.at(r, c) != b.at(r, c) {
                return Err(CombinationFlaw::ReconstructionMismatch {
                    row: r + 1,
                    col: c + 1,
                    expected: b.at(r, c).clone(),
                    actual: value.at(r, c).clone(),
                });
            }
        }
    }
    Ok(())
}

/// Scales a combination by c ∈ [0, 1]: every weight is multiplied by c and
/// the slack 1−c goes to a zero term (merged into an existing zero term if
/// there is one, appended otherwise). The value becomes c times the old
/// value and the term count grows by at most 1.
pub fn scale_decomposition(
    combo: ConvexCombination,
    c: &Rational,
) -> Result<ConvexCombination, DecomposeError> {
    if c.is_negative() || *c > rat(1) {
        return Err(DecomposeError::ScaleOutOfRange { value: c.clone() });
    }
    let side = combo.side();
    if *c == rat(1) {
        return Ok(combo);
    }
    let zero_term = Subpermutation::zero(side);
    let slack = rat(1) - c;
    let mut terms: Vec<(Rational, Subpermutation)> = combo
        .terms
        .into_iter()
        .map(|(w, t)| (w * c, t))
        .filter(|(w, _)| !w.is_zero())
        .collect();
    match terms.iter_mut().find(|(_, t)| *t == zero_term) {
        Some((w, _)) => *w += slack,
        None => terms.push((slack, zero_term)),
    }
    Ok(ConvexCombination::new(side, terms))
}

/// Prepends an identity block: every term P becomes I_k ⊕ P with its weight
/// unchanged, so the value becomes I_k ⊕ (old value) and the term count
/// stays the same.
pub fn direct_sum_lift(combo: ConvexCombination, k: usize) -> ConvexCombination {
    let side = combo.side() + k;
    let terms = combo
        .terms
        .into_iter()
        .map(|(w, t)| (w, t.lifted(k)))
        .collect();
    ConvexCombination::new(side, terms)
}

impl fmt::Display for DecompositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "side={} completed_side={} greedy={} reduced={} terms={} face_dim={} t={} bound={}",
            self.input.side(),
            self.completion.side(),
            self.greedy_count,
            self.reduced_count,
            self.term_count,
            self.face_dim,
            self.component_count,
            self.bound,
        )
    }
}
