//! Exponential-time ground truth for desk-scale inputs: the exact minimal
//! number of subpermutation terms, total support by definition, and full
//! indecomposability by the zero-submatrix criterion. Every oracle either
//! answers exactly or fails loudly when its budget runs out — it never
//! silently truncates a search.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::decompose::Subpermutation;
use crate::matrices::{rat, rref, Matrix, Rational, SubstochasticMatrix};
use crate::structure::SupportPattern;

/// Hard cap for the per-cell permutation search and the zero-submatrix scan.
const MAX_BRUTE_SIDE: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("side {side} exceeds the oracle budget's max side {max_side}")]
    SideExceedsBudget { side: usize, max_side: usize },
    #[error("{terms} terms exceed the oracle budget's max terms {max_terms}")]
    TermsExceedBudget { terms: usize, max_terms: usize },
    #[error("subset budget {max_subsets} exhausted before the count was certain")]
    SubsetBudgetExhausted { max_subsets: usize },
    #[error("no subpermutation subset reconstructs the matrix")]
    Unsolvable,
}

/// Enumeration limits. The defaults keep every oracle comfortably under a
/// second on desk-scale inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    /// Largest matrix side the term-count search accepts.
    pub max_side: usize,
    /// Largest subset size fed to the exact feasibility solver.
    pub max_terms: usize,
    /// Total subsets examined before the search gives up.
    pub max_subsets: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_side: 4,
            max_terms: 8,
            max_subsets: 200_000,
        }
    }
}

/// All subpermutation matrices of the given side — Σ_k C(n,k)²·k! of them —
/// ordered by rank (number of 1s), then lexicographically by assignment.
pub fn enumerate_subpermutations(
    side: usize,
    budget: &OracleBudget,
) -> Result<Vec<Subpermutation>, OracleError> {
    if side > budget.max_side {
        return Err(OracleError::SideExceedsBudget {
            side,
            max_side: budget.max_side,
        });
    }
    fn recurse(
        row: usize,
        side: usize,
        used_cols: &mut Vec<bool>,
        pairs: &mut Vec<(usize, usize)>,
        out: &mut Vec<Subpermutation>,
    ) {
        if row == side {
            out.push(
                Subpermutation::from_pairs(side, pairs.iter().copied())
                    .expect("generated pairs are injective"),
            );
            return;
        }
        recurse(row + 1, side, used_cols, pairs, out);
        for col in 0..side {
            if !used_cols[col] {
                used_cols[col] = true;
                pairs.push((row, col));
                recurse(row + 1, side, used_cols, pairs, out);
                pairs.pop();
                used_cols[col] = false;
            }
        }
    }
    let mut out = Vec::new();
    recurse(0, side, &mut vec![false; side], &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.rank().cmp(&b.rank()).then_with(|| a.cmp(b)));
    Ok(out)
}

/// One linear inequality Σ coeffs[i]·x_i ≤ rhs over a fixed variable count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Inequality {
    coeffs: Vec<Rational>,
    rhs: Rational,
}

impl Inequality {
    /// Scales so the first nonzero coefficient has absolute value 1, which
    /// lets identical constraints deduplicate.
    fn normalized(mut self) -> Self {
        if let Some(lead) = self.coeffs.iter().find(|c| !c.is_zero()) {
            let scale = lead.clone().abs().recip();
            for c in self.coeffs.iter_mut() {
                *c *= &scale;
            }
            self.rhs *= scale;
        }
        self
    }
}

/// Eliminates the variable `var` (the highest one mentioned) by pairing
/// every upper bound on it with every lower bound. Returns None when a
/// variable-free contradiction appears.
fn fourier_motzkin_eliminate(rows: &[Inequality], var: usize) -> Option<Vec<Inequality>> {
    let mut kept = BTreeSet::new();
    let mut uppers: Vec<(Vec<Rational>, Rational)> = Vec::new();
    let mut lowers: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for row in rows {
        match row.coeffs[var].cmp(&Rational::zero()) {
            Ordering::Equal => {
                if row.coeffs.iter().all(Zero::is_zero) {
                    if row.rhs.is_negative() {
                        return None;
                    }
                } else {
                    kept.insert(row.clone().normalized());
                }
            }
            // c·x_var + Σ c_i·x_i ≤ rhs with c > 0: x_var ≤ (rhs − Σ c_i·x_i)/c.
            Ordering::Greater | Ordering::Less => {
                let c = row.coeffs[var].clone();
                let rest: Vec<Rational> = row
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, ci)| if i == var { Rational::zero() } else { -(ci / &c) })
                    .collect();
                let constant = &row.rhs / &c;
                if c.is_positive() {
                    uppers.push((rest, constant));
                } else {
                    lowers.push((rest, constant));
                }
            }
        }
    }
    for (l_rest, l_const) in &lowers {
        for (u_rest, u_const) in &uppers {
            // l_const + Σ l_i·x_i ≤ x_var ≤ u_const + Σ u_i·x_i.
            let coeffs: Vec<Rational> = l_rest
                .iter()
                .zip(u_rest)
                .map(|(l, u)| l - u)
                .collect();
            let rhs = u_const - l_const;
            if coeffs.iter().all(Zero::is_zero) {
                if rhs.is_negative() {
                    return None;
                }
            } else {
                kept.insert(Inequality { coeffs, rhs }.normalized());
            }
        }
    }
    Some(kept.into_iter().collect())
}

/// Finds a point satisfying every inequality, or None. Variables are
/// eliminated from the highest index down; the witness is then assembled
/// from the lowest index up, giving each variable the maximum of its lower
/// bounds — the smallest feasible choice.
fn feasibility_witness(rows: Vec<Inequality>, vars: usize) -> Option<Vec<Rational>> {
    let mut levels: Vec<Vec<Inequality>> = vec![Vec::new(); vars + 1];
    for row in rows {
        if row.coeffs.iter().all(Zero::is_zero) {
            if row.rhs.is_negative() {
                return None;
            }
        } else {
            levels[vars].push(row);
        }
    }
    for var in (0..vars).rev() {
        levels[var] = fourier_motzkin_eliminate(&levels[var + 1], var)?;
    }

    let mut values: Vec<Rational> = Vec::with_capacity(vars);
    for var in 0..vars {
        let mut best_lower: Option<Rational> = None;
        for row in &levels[var + 1] {
            if row.coeffs[var].is_negative() {
                let residual = row
                    .coeffs
                    .iter()
                    .take(var)
                    .zip(&values)
                    .fold(row.rhs.clone(), |acc, (c, v)| acc - c * v);
                let bound = residual / &row.coeffs[var];
                let improves = match &best_lower {
                    None => true,
                    Some(current) => bound > *current,
                };
                if improves {
                    best_lower = Some(bound);
                }
            }
        }
        let value = best_lower.unwrap_or_else(Rational::zero);
        #[cfg(debug_assertions)]
        for row in &levels[var + 1] {
            if row.coeffs[var].is_positive() {
                let residual = row
                    .coeffs
                    .iter()
                    .take(var)
                    .zip(&values)
                    .fold(row.rhs.clone(), |acc, (c, v)| acc - c * v);
                debug_assert!(
                    &value * &row.coeffs[var] <= residual,
                    "witness violates an upper bound"
                );
            }
        }
        values.push(value);
    }
    Some(values)
}

/// Exact nonnegative weights with Σ w_i = 1 and Σ w_i·term_i = B, or None
/// when no such weights exist. Solved by rational elimination of the
/// equality system followed by Fourier–Motzkin elimination over the free
/// variables. Returned weights can be zero — a zero marks a term the
/// witness does not use.
pub fn exact_feasibility(
    b: &Matrix,
    terms: &[Subpermutation],
    budget: &OracleBudget,
) -> Result<Option<Vec<Rational>>, OracleError> {
    if terms.len() > budget.max_terms {
        return Err(OracleError::TermsExceedBudget {
            terms: terms.len(),
            max_terms: budget.max_terms,
        });
    }
    let n = b.rows();
    assert!(b.is_square(), "feasibility target must be square");
    assert!(
        terms.iter().all(|t| t.side() == n),
        "terms must match the target's side"
    );
    let m = terms.len();

    // Augmented equality system: one row per cell plus the Σ w = 1 row.
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(n * n + 1);
    for r in 0..n {
        for c in 0..n {
            let mut row = vec![Rational::zero(); m + 1];
            for (j, term) in terms.iter().enumerate() {
                if term.column_of(r) == Some(c) {
                    row[j] = rat(1);
                }
            }
            row[m] = b.at(r, c).clone();
            rows.push(row);
        }
    }
    let mut sum_row = vec![rat(1); m];
    sum_row.push(rat(1));
    rows.push(sum_row);

    let pivots = rref(&mut rows);
    if pivots.contains(&m) {
        // A pivot in the constant column means 0 = 1: inconsistent.
        return Ok(None);
    }
    let free: Vec<usize> = (0..m).filter(|j| !pivots.contains(j)).collect();

    // Inequalities over the free variables: every pivot weight's
    // nonnegativity plus the free weights' own nonnegativity. Pivot rows
    // sit at the top of the reduced system, one per pivot column, and give
    // w_pivot = row[m] − Σ_f row[f]·w_f ≥ 0.
    let mut inequalities = Vec::new();
    for row in rows.iter().take(pivots.len()) {
        let coeffs = free.iter().map(|&f| row[f].clone()).collect();
        inequalities.push(Inequality { coeffs, rhs: row[m].clone() });
    }
    for i in 0..free.len() {
        let mut coeffs = vec![Rational::zero(); free.len()];
        coeffs[i] = rat(-1);
        inequalities.push(Inequality { coeffs, rhs: Rational::zero() });
    }

    let Some(free_values) = feasibility_witness(inequalities, free.len()) else {
        return Ok(None);
    };
    let mut weights = vec![Rational::zero(); m];
    for (&f, v) in free.iter().zip(&free_values) {
        weights[f] = v.clone();
    }
    for (row, &pivot) in rows.iter().zip(&pivots) {
        let value = free
            .iter()
            .zip(&free_values)
            .fold(row[m].clone(), |acc, (&f, v)| acc - &row[f] * v);
        debug_assert!(!value.is_negative(), "witness violates nonnegativity");
        weights[pivot] = value;
    }
    Ok(Some(weights))
}

/// Lexicographic k-subsets of 0..n.
struct LexSubsets {
    n: usize,
    indices: Vec<usize>,
    started: bool,
    done: bool,
}

impl LexSubsets {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            indices: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.indices);
        }
        let k = self.indices.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.indices[i] != i + self.n - k {
                break;
            }
        }
        self.indices[i] += 1;
        for j in i + 1..k {
            self.indices[j] = self.indices[j - 1] + 1;
        }
        Some(&self.indices)
    }
}

/// The smallest m such that B is a convex combination of m subpermutation
/// matrices, found by scanning subset sizes upward with exact feasibility
/// checks. Only subpermutations confined to B's support can carry positive
/// weight at the minimal size, so the scan is restricted to those; subsets
/// whose union misses a support cell are skipped without a solve.
pub fn minimal_term_count(
    b: &SubstochasticMatrix,
    budget: &OracleBudget,
) -> Result<usize, OracleError> {
    if b.side() > budget.max_side {
        return Err(OracleError::SideExceedsBudget {
            side: b.side(),
            max_side: budget.max_side,
        });
    }
    let support = SupportPattern::from_matrix(b.matrix()).expect("validated input is square");
    let candidates: Vec<Subpermutation> = enumerate_subpermutations(b.side(), budget)?
        .into_iter()
        .filter(|t| t.pairs().all(|(r, c)| support.contains(r, c)))
        .collect();

    let mut examined = 0usize;
    for size in 1..=candidates.len() {
        if size > budget.max_terms {
            return Err(OracleError::TermsExceedBudget {
                terms: size,
                max_terms: budget.max_terms,
            });
        }
        let mut subsets = LexSubsets::new(candidates.len(), size);
        while let Some(chosen) = subsets.next() {
            examined += 1;
            if examined > budget.max_subsets {
                return Err(OracleError::SubsetBudgetExhausted {
                    max_subsets: budget.max_subsets,
                });
            }
            let union_covers = support.cells().all(|(r, c)| {
                chosen
                    .iter()
                    .any(|&i| candidates[i].column_of(r) == Some(c))
            });
            if !union_covers {
                continue;
            }
            let terms: Vec<Subpermutation> =
                chosen.iter().map(|&i| candidates[i].clone()).collect();
            if exact_feasibility(b.matrix(), &terms, budget)?.is_some() {
                return Ok(size);
            }
        }
    }
    Err(OracleError::Unsolvable)
}

/// Total support by definition: every cell must carry some permutation
/// dominated by the pattern. All pattern-confined permutations are
/// enumerated and their cells marked.
pub fn total_support_bruteforce(pattern: &SupportPattern) -> Result<bool, OracleError> {
    let n = pattern.side();
    if n > MAX_BRUTE_SIDE {
        return Err(OracleError::SideExceedsBudget {
            side: n,
            max_side: MAX_BRUTE_SIDE,
        });
    }
    fn mark(
        row: usize,
        pattern: &SupportPattern,
        used_cols: &mut Vec<bool>,
        chosen: &mut Vec<usize>,
        covered: &mut BTreeSet<(usize, usize)>,
    ) {
        let n = pattern.side();
        if row == n {
            for (r, &c) in chosen.iter().enumerate() {
                covered.insert((r, c));
            }
            return;
        }
        let cols: Vec<usize> = pattern.row_cells(row).collect();
        for col in cols {
            if !used_cols[col] {
                used_cols[col] = true;
                chosen.push(col);
                mark(row + 1, pattern, used_cols, chosen, covered);
                chosen.pop();
                used_cols[col] = false;
            }
        }
    }
    let mut covered = BTreeSet::new();
    mark(0, pattern, &mut vec![false; n], &mut Vec::new(), &mut covered);
    Ok(pattern.cells().all(|cell| covered.contains(&cell)))
}

/// Full indecomposability by the zero-submatrix criterion: decomposable
/// exactly when some nonempty proper row set S and column set T with
/// |S| + |T| = n leave S×T entirely empty.
pub fn fully_indecomposable_bruteforce(pattern: &SupportPattern) -> Result<bool, OracleError> {
    let n = pattern.side();
    if n > MAX_BRUTE_SIDE {
        return Err(OracleError::SideExceedsBudget {
            side: n,
            max_side: MAX_BRUTE_SIDE,
        });
    }
    for rows in 1u32..(1 << n) - 1 {
        let s = rows.count_ones() as usize;
        let t = n - s;
        if t == 0 || t == n {
            continue;
        }
        'cols: for cols in 1u32..(1 << n) - 1 {
            if cols.count_ones() as usize != t {
                continue;
            }
            for r in 0..n {
                if rows & (1 << r) == 0 {
                    continue;
                }
                for c in 0..n {
                    if cols & (1 << c) != 0 && pattern.contains(r, c) {
                        continue 'cols;
                    }
                }
            }
            return Ok(false);
        }
    }
    Ok(true)
}
