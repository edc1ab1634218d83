//! Support patterns and their combinatorics: perfect matchings, total
//! support, fully indecomposable components, and the dimension of the face
//! of the doubly stochastic polytope carved out by a pattern.
//!
//! A (0,1) pattern A has *total support* when every 1 lies on some
//! permutation matrix dominated by A. Such patterns decompose, after row and
//! column permutations, into a direct sum of t fully indecomposable blocks,
//! and the face F(A) = { doubly stochastic S : support(S) ⊆ A } has
//! dimension nnz(A) − 2n + t.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use thiserror::Error;

use crate::matrices::{rational_nullspace, rat, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("support pattern requires a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("cell ({row}, {col}) is outside the {side}x{side} pattern")]
    CellOutOfRange { row: usize, col: usize, side: usize },
    #[error("pattern has no perfect matching")]
    NoPerfectMatching,
    #[error("pattern lacks total support")]
    LacksTotalSupport,
}

/// The nonzero positions of a square matrix. Rows and columns are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportPattern {
    side: usize,
    cells: BTreeSet<(usize, usize)>,
}

impl SupportPattern {
    /// Cell present iff the entry is nonzero (exact comparison).
    pub fn from_matrix(m: &Matrix) -> Result<Self, StructureError> {
        if !m.is_square() {
            return Err(StructureError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let side = m.rows();
        let cells = (0..side)
            .flat_map(|r| (0..side).map(move |c| (r, c)))
            .filter(|&(r, c)| !m.at(r, c).is_zero())
            .collect();
        Ok(Self { side, cells })
    }

    pub fn from_cells(
        side: usize,
        cells: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, StructureError> {
        let mut set = BTreeSet::new();
        for (row, col) in cells {
            if row >= side || col >= side {
                return Err(StructureError::CellOutOfRange {
                    row: row + 1,
                    col: col + 1,
                    side,
                });
            }
            set.insert((row, col));
        }
        Ok(Self { side, cells: set })
    }

    /// Pattern with every cell present.
    pub fn full(side: usize) -> Self {
        Self {
            side,
            cells: (0..side).flat_map(|r| (0..side).map(move |c| (r, c))).collect(),
        }
    }

    pub fn identity(side: usize) -> Self {
        Self {
            side,
            cells: (0..side).map(|i| (i, i)).collect(),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn nnz(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.cells.contains(&(row, col))
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells.iter().copied()
    }

    /// Columns with a cell in the given row, ascending.
    pub fn row_cells(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.cells
            .range((row, 0)..(row + 1, 0))
            .map(|&(_, c)| c)
    }

    /// Is every cell of `self` also a cell of `other`?
    pub fn is_subset_of(&self, other: &SupportPattern) -> bool {
        self.side == other.side && self.cells.is_subset(&other.cells)
    }

    /// Relabelled pattern: cell (i, j) present iff (row_perm[i], col_perm[j])
    /// is present in `self`. Both permutations map new index → old index.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> SupportPattern {
        assert_eq!(row_perm.len(), self.side);
        assert_eq!(col_perm.len(), self.side);
        let cells = (0..self.side)
            .flat_map(|i| (0..self.side).map(move |j| (i, j)))
            .filter(|&(i, j)| self.contains(row_perm[i], col_perm[j]))
            .collect();
        SupportPattern { side: self.side, cells }
    }

    /// 0/1 matrix with ones at the cells.
    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.side, self.side);
        for &(r, c) in &self.cells {
            *m.at_mut(r, c) = rat(1);
        }
        m
    }
}

/// A partial injective assignment of rows to columns inside a pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pairs: BTreeMap<usize, usize>,
}

impl Matching {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().map(|(&r, &c)| (r, c))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn column_of(&self, row: usize) -> Option<usize> {
        self.pairs.get(&row).copied()
    }
}

/// Internal matching state: row → column and column → row, usize::MAX free.
struct MatchState<'a> {
    pattern: &'a SupportPattern,
    row_match: Vec<usize>,
    col_match: Vec<usize>,
}

const FREE: usize = usize::MAX;

impl<'a> MatchState<'a> {
    fn new(pattern: &'a SupportPattern) -> Self {
        Self {
            pattern,
            row_match: vec![FREE; pattern.side()],
            col_match: vec![FREE; pattern.side()],
        }
    }

    /// Augmenting-path search from `row`, scanning columns in ascending
    /// order. Rows with index < `protected` may not be displaced.
    fn augment(&mut self, row: usize, protected: usize, visited: &mut Vec<bool>) -> bool {
        let pattern = self.pattern;
        for col in pattern.row_cells(row) {
            if visited[col] {
                continue;
            }
            visited[col] = true;
            let owner = self.col_match[col];
            if owner != FREE && owner < protected {
                continue;
            }
            if owner == FREE || self.augment(owner, protected, visited) {
                self.row_match[row] = col;
                self.col_match[col] = row;
                return true;
            }
        }
        false
    }

    fn try_augment(&mut self, row: usize, protected: usize) -> bool {
        let mut visited = vec![false; self.pattern.side()];
        self.augment(row, protected, &mut visited)
    }
}

/// Maximum matching by augmenting paths, rows taken in ascending order.
/// Returns the match state with `row_match`/`col_match` filled in.
fn maximum_matching(pattern: &SupportPattern) -> (MatchState<'_>, usize) {
    let mut state = MatchState::new(pattern);
    let mut size = 0;
    for row in 0..pattern.side() {
        if state.try_augment(row, 0) {
            size += 1;
        }
    }
    (state, size)
}

/// The lexicographically smallest perfect matching of the pattern: among all
/// perfect matchings, the one whose column sequence (row 0's column, row 1's
/// column, …) is smallest. None when no perfect matching exists. This is the
/// deterministic matching every other operation builds on.
pub fn perfect_matching(pattern: &SupportPattern) -> Option<Matching> {
    let n = pattern.side();
    let (mut state, size) = maximum_matching(pattern);
    if size < n {
        return None;
    }
    // Canonicalize row by row: give each row the smallest column that still
    // leaves a perfect matching for the rows after it. Rows already fixed
    // (index ≤ barrier) may not be displaced by the repair search.
    for row in 0..n {
        let current = state.row_match[row];
        let candidates: Vec<usize> =
            state.pattern.row_cells(row).take_while(|&c| c < current).collect();
        for col in candidates {
            let displaced = state.col_match[col];
            if displaced != FREE && displaced < row {
                continue;
            }
            // Tentatively hand `col` to `row` and ask the displaced row to
            // re-match among the columns not owned by rows ≤ row.
            state.row_match[row] = col;
            state.col_match[col] = row;
            state.col_match[current] = FREE;
            if displaced == FREE || state.try_augment(displaced, row + 1) {
                break;
            }
            state.row_match[row] = current;
            state.col_match[current] = row;
            state.col_match[col] = displaced;
        }
    }
    Some(Matching {
        pairs: (0..n).map(|r| (r, state.row_match[r])).collect(),
    })
}

/// Strongly connected components of `adj` (Tarjan), as a component id per
/// vertex. Ids are renumbered so that component 0 contains vertex with the
/// smallest index, then component 1 the smallest index not yet covered, etc.
fn strongly_connected_components(adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    struct Walk<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<usize>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next_index: usize,
        comp: Vec<usize>,
        comp_count: usize,
    }

    impl Walk<'_> {
        fn visit(&mut self, v: usize) {
            self.index[v] = self.next_index;
            self.low[v] = self.next_index;
            self.next_index += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            for &w in &self.adj[v] {
                if self.index[w] == FREE {
                    self.visit(w);
                    self.low[v] = self.low[v].min(self.low[w]);
                } else if self.on_stack[w] {
                    self.low[v] = self.low[v].min(self.index[w]);
                }
            }
            if self.low[v] == self.index[v] {
                loop {
                    let w = self.stack.pop().expect("tarjan stack underflow");
                    self.on_stack[w] = false;
                    self.comp[w] = self.comp_count;
                    if w == v {
                        break;
                    }
                }
                self.comp_count += 1;
            }
        }
    }

    let n = adj.len();
    let mut walk = Walk {
        adj,
        index: vec![FREE; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next_index: 0,
        comp: vec![0; n],
        comp_count: 0,
    };
    for v in 0..n {
        if walk.index[v] == FREE {
            walk.visit(v);
        }
    }
    // Renumber by smallest contained vertex for a canonical labelling.
    let mut first_seen = vec![FREE; walk.comp_count];
    let mut order = Vec::new();
    for v in 0..n {
        if first_seen[walk.comp[v]] == FREE {
            first_seen[walk.comp[v]] = order.len();
            order.push(walk.comp[v]);
        }
    }
    let comp = walk.comp.iter().map(|&c| first_seen[c]).collect();
    (walk.comp_count, comp)
}

/// Digraph on rows induced by a perfect matching: edge i → j iff the cell
/// (i, column matched to j) is present and i ≠ j. Cycles in this graph are
/// exactly the alternating cycles of the matching.
fn matching_digraph(pattern: &SupportPattern, matching: &Matching) -> Vec<Vec<usize>> {
    let n = pattern.side();
    let mut row_of_col = vec![FREE; n];
    for (r, c) in matching.pairs() {
        row_of_col[c] = r;
    }
    (0..n)
        .map(|i| {
            pattern
                .row_cells(i)
                .map(|c| row_of_col[c])
                .filter(|&j| j != i)
                .collect()
        })
        .collect()
}

/// Does every cell of the pattern lie on some perfect matching? An empty
/// pattern qualifies vacuously. A cell (r, c) off the reference matching is
/// coverable exactly when r can reach — and be reached from — the row
/// matched to c along alternating paths, i.e. when the two rows share a
/// strongly connected component of the matching digraph.
pub fn has_total_support(pattern: &SupportPattern) -> bool {
    if pattern.is_empty() {
        return true;
    }
    let Some(matching) = perfect_matching(pattern) else {
        return false;
    };
    let adj = matching_digraph(pattern, &matching);
    let (_, comp) = strongly_connected_components(&adj);
    let mut row_of_col = vec![FREE; pattern.side()];
    for (r, c) in matching.pairs() {
        row_of_col[c] = r;
    }
    pattern
        .cells()
        .all(|(r, c)| row_of_col[c] == r || comp[r] == comp[row_of_col[c]])
}

/// The direct-sum structure of a total-support pattern: row and column
/// blocks that, after relabelling, exhibit the pattern as a block-diagonal
/// direct sum of fully indecomposable patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDecomposition {
    row_blocks: Vec<Vec<usize>>,
    column_blocks: Vec<Vec<usize>>,
}

impl ComponentDecomposition {
    /// Number of fully indecomposable components.
    pub fn t(&self) -> usize {
        self.row_blocks.len()
    }

    pub fn row_blocks(&self) -> &[Vec<usize>] {
        &self.row_blocks
    }

    pub fn column_blocks(&self) -> &[Vec<usize>] {
        &self.column_blocks
    }

    /// Row permutation (new index → old row) that stacks the blocks.
    pub fn row_perm(&self) -> Vec<usize> {
        self.row_blocks.iter().flatten().copied().collect()
    }

    /// Column permutation (new index → old column) that stacks the blocks.
    pub fn col_perm(&self) -> Vec<usize> {
        self.column_blocks.iter().flatten().copied().collect()
    }

    /// The pattern relabelled into block-diagonal form.
    pub fn apply(&self, pattern: &SupportPattern) -> SupportPattern {
        pattern.permuted(&self.row_perm(), &self.col_perm())
    }

    /// The diagonal blocks of the relabelled pattern, as standalone patterns.
    pub fn diagonal_blocks(&self, pattern: &SupportPattern) -> Vec<SupportPattern> {
        self.row_blocks
            .iter()
            .zip(&self.column_blocks)
            .map(|(rows, cols)| {
                let cells = rows.iter().enumerate().flat_map(|(i, &r)| {
                    cols.iter()
                        .enumerate()
                        .filter(move |&(_, &c)| pattern.contains(r, c))
                        .map(move |(j, _)| (i, j))
                });
                SupportPattern::from_cells(rows.len(), cells)
                    .expect("block cells are in range by construction")
            })
            .collect()
    }
}

/// Splits a total-support pattern into its fully indecomposable components:
/// the strongly connected components of the matching digraph, listed by
/// smallest contained row index. Patterns without a perfect matching or
/// without total support are rejected — the block structure is undefined
/// for them.
pub fn fully_indecomposable_components(
    pattern: &SupportPattern,
) -> Result<ComponentDecomposition, StructureError> {
    let matching = perfect_matching(pattern).ok_or(StructureError::NoPerfectMatching)?;
    let adj = matching_digraph(pattern, &matching);
    let (count, comp) = strongly_connected_components(&adj);
    let mut row_of_col = vec![FREE; pattern.side()];
    for (r, c) in matching.pairs() {
        row_of_col[c] = r;
    }
    let covered = pattern
        .cells()
        .all(|(r, c)| row_of_col[c] == r || comp[r] == comp[row_of_col[c]]);
    if !covered {
        return Err(StructureError::LacksTotalSupport);
    }

    let mut row_blocks = vec![Vec::new(); count];
    for (row, &c) in comp.iter().enumerate() {
        row_blocks[c].push(row);
    }
    // Component ids already order blocks by smallest contained row; columns
    // follow their matched rows.
    let column_blocks = row_blocks
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|&r| matching.column_of(r).expect("perfect matching covers every row"))
                .collect()
        })
        .collect();
    Ok(ComponentDecomposition { row_blocks, column_blocks })
}

/// Dimension of the face of the doubly stochastic polytope cut out by the
/// pattern: nnz − 2n + t. Requires total support.
pub fn face_dimension(pattern: &SupportPattern) -> Result<usize, StructureError> {
    let t = fully_indecomposable_components(pattern)?.t();
    let dim = pattern.nnz() as i64 - 2 * pattern.side() as i64 + t as i64;
    debug_assert!(dim >= 0, "face dimension cannot be negative");
    Ok(dim as usize)
}

/// Independent computation of the face dimension: the dimension of the space
/// of support-confined matrices with all line sums zero, read off the
/// nullspace of the 2n×nnz cell-incidence system.
pub fn face_dimension_via_rank(pattern: &SupportPattern) -> Result<usize, StructureError> {
    if !has_total_support(pattern) {
        return Err(StructureError::LacksTotalSupport);
    }
    let n = pattern.side();
    let cells: Vec<(usize, usize)> = pattern.cells().collect();
    let mut incidence = Matrix::zeros(2 * n, cells.len());
    for (j, &(r, c)) in cells.iter().enumerate() {
        *incidence.at_mut(r, j) = rat(1);
        *incidence.at_mut(n + c, j) = rat(1);
    }
    Ok(rational_nullspace(&incidence).len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::Matrix;

    fn pattern(text: &str) -> SupportPattern {
        SupportPattern::from_matrix(&Matrix::from_text(text).unwrap()).unwrap()
    }

    #[test]
    fn support_from_matrix() {
        let p = pattern("7/12 0; 1/6 1/2");
        assert_eq!(p.nnz(), 3);
        assert!(p.contains(0, 0) && p.contains(1, 0) && p.contains(1, 1));
        assert!(!p.contains(0, 1));
        assert!(SupportPattern::from_matrix(&Matrix::zeros(3, 3)).unwrap().is_empty());
    }

    #[test]
    fn matching_prefers_small_columns() {
        let m = perfect_matching(&SupportPattern::full(2)).unwrap();
        assert_eq!(m.pairs().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
        let m = perfect_matching(&SupportPattern::identity(3)).unwrap();
        assert_eq!(m.pairs().collect::<Vec<_>>(), vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn matching_is_lexicographically_smallest() {
        // Row 0 could take column 0, but then row 1 is stuck; the smallest
        // perfect matching is (0→1, 1→0, 2→2).
        let p = pattern("1 1 0; 1 0 0; 0 1 1");
        let m = perfect_matching(&p).unwrap();
        assert_eq!(m.pairs().collect::<Vec<_>>(), vec![(0, 1), (1, 0), (2, 2)]);
    }

    #[test]
    fn empty_row_has_no_perfect_matching() {
        assert!(perfect_matching(&pattern("1 1; 0 0")).is_none());
    }

    #[test]
    fn total_support_examples() {
        assert!(has_total_support(&SupportPattern::identity(4)));
        assert!(has_total_support(&SupportPattern::from_matrix(&Matrix::zeros(2, 2)).unwrap()));
        // Cell (0,1) lies on no permutation inside the pattern.
        assert!(!has_total_support(&pattern("1 1; 0 1")));
        assert!(has_total_support(&pattern("7/12 0 5/12; 1/6 1/2 1/3; 1/4 1/2 1/4")));
    }

    #[test]
    fn identity_splits_into_singleton_components() {
        let p = SupportPattern::identity(3);
        let d = fully_indecomposable_components(&p).unwrap();
        assert_eq!(d.t(), 3);
        assert_eq!(d.row_blocks(), &[vec![0], vec![1], vec![2]]);
        assert_eq!(face_dimension(&p).unwrap(), 0);
    }

    #[test]
    fn stochastic_completion_is_one_component() {
        let p = pattern("7/12 0 5/12; 1/6 1/2 1/3; 1/4 1/2 1/4");
        let d = fully_indecomposable_components(&p).unwrap();
        assert_eq!(d.t(), 1);
        assert_eq!(face_dimension(&p).unwrap(), 8 - 6 + 1);
        assert_eq!(face_dimension_via_rank(&p).unwrap(), 3);
    }

    #[test]
    fn block_diagonal_pattern_recovers_its_blocks() {
        let p = pattern("1 1 0; 1 1 0; 0 0 1");
        let d = fully_indecomposable_components(&p).unwrap();
        assert_eq!(d.t(), 2);
        assert_eq!(d.row_blocks(), &[vec![0, 1], vec![2]]);
        assert_eq!(d.column_blocks(), &[vec![0, 1], vec![2]]);
        let blocks = d.diagonal_blocks(&p);
        assert_eq!(blocks[0], SupportPattern::full(2));
        assert_eq!(blocks[1], SupportPattern::full(1));
    }

    #[test]
    fn shuffled_direct_sum_is_found() {
        // A 2×2 full block on rows {0,2} × columns {1,2} plus a singleton.
        let p = SupportPattern::from_cells(3, [(0, 1), (0, 2), (2, 1), (2, 2), (1, 0)]).unwrap();
        let d = fully_indecomposable_components(&p).unwrap();
        assert_eq!(d.t(), 2);
        assert_eq!(d.diagonal_blocks(&p), vec![SupportPattern::full(2), SupportPattern::full(1)]);
        let relabelled = d.apply(&p);
        // Relabelling really is block-diagonal: no cell crosses blocks.
        let mut offset = 0;
        let sizes: Vec<usize> = d.row_blocks().iter().map(Vec::len).collect();
        for size in sizes {
            for (r, c) in relabelled.cells() {
                let r_in = (offset..offset + size).contains(&r);
                let c_in = (offset..offset + size).contains(&c);
                assert_eq!(r_in, c_in, "cell ({r}, {c}) crosses the block boundary");
            }
            offset += size;
        }
    }

    #[test]
    fn unsupported_patterns_are_rejected() {
        let p = pattern("1 1; 0 1");
        assert_eq!(
            fully_indecomposable_components(&p).unwrap_err(),
            StructureError::LacksTotalSupport
        );
        assert_eq!(face_dimension(&p).unwrap_err(), StructureError::LacksTotalSupport);
        let empty_row = pattern("1 1; 0 0");
        assert_eq!(
            fully_indecomposable_components(&empty_row).unwrap_err(),
            StructureError::NoPerfectMatching
        );
    }

    #[test]
    fn full_pattern_face_dimension_is_square() {
        for n in 2..=5 {
            let p = SupportPattern::full(n);
            assert_eq!(face_dimension(&p).unwrap(), (n - 1) * (n - 1));
            assert_eq!(face_dimension_via_rank(&p).unwrap(), (n - 1) * (n - 1));
        }
    }

    /// The 7×7 completion of the running 4×4 example is fully
    /// indecomposable: no proper set of rows touches only as many columns as
    /// it has members (checked exhaustively in the oracle cross-tests).
    #[test]
    fn golden_completion_support_is_indecomposable() {
        let p = pattern(
            "0.1 0 0.2 0.1 0.6 0 0; \
             0 0.2 0.1 0 0.4 0.3 0; \
             0.2 0 0 0.1 0 0.7 0; \
             0.1 0.2 0.3 0.2 0 0 0.2; \
             0.6 0.4 0 0 0 0 0; \
             0 0.2 0.4 0.4 0 0 0; \
             0 0 0 0.2 0 0 0.8",
        );
        assert!(has_total_support(&p));
        let d = fully_indecomposable_components(&p).unwrap();
        assert_eq!(d.t(), 1);
        assert_eq!(face_dimension(&p).unwrap(), 23 - 14 + 1);
        assert_eq!(face_dimension_via_rank(&p).unwrap(), 10);
    }
}
