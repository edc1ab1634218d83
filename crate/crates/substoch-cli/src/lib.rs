//! Command-line front door for the substochastic toolkit: exact matrix
//! ingestion (JSON documents or plain grids), the completion/decomposition
//! pipeline, decomposition serialization, seeded random instances, and a
//! batch property sweep.
//!
//! Exit codes: 0 success, 1 domain/validation/io failure, 2 usage error.

// Bounds are spelled in the form they are checked (`x + 1 <= y`), and error
// values deliberately carry exact rationals for diagnostics.
#![allow(clippy::int_plus_one, clippy::result_large_err)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use substoch::completion::{minimal_completion, verify_completion_structure};
use substoch::decompose::{
    decompose_with_options, verify_combination, CombinationFlaw, ConvexCombination,
    DecomposeError, DecomposeOptions, Subpermutation,
};
use substoch::matrices::{
    rat, rational_from_text, rational_to_text, Matrix, MatrixError, Rational,
    SubstochasticMatrix,
};
use substoch::oracle::{minimal_term_count, OracleBudget, OracleError};
use substoch::structure::{fully_indecomposable_components, SupportPattern, StructureError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    WriteFile { path: String, source: std::io::Error },
    #[error("cannot write output: {0}")]
    Stream(#[from] std::io::Error),
    #[error("{path}: {detail}")]
    Document { path: String, detail: String },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("verification failed: {0}")]
    Verification(CombinationFlaw),
    #[error("{0}")]
    Invalid(String),
}

/// JSON matrix document: `{"n": 2, "entries": [["7/12", "0"], ["1/6", "0.5"]]}`.
#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    entries: Vec<Vec<String>>,
}

/// JSON decomposition document; rows and columns are 1-indexed.
#[derive(Debug, Serialize, Deserialize)]
struct DecompositionFile {
    n: usize,
    terms: Vec<TermFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TermFile {
    weight: String,
    assignment: Vec<[usize; 2]>,
}

#[derive(Parser)]
#[command(
    name = "substoch",
    about = "Exact toolkit for doubly substochastic matrices: completion, \
             structure reports, and subpermutation decompositions",
    version
)]
struct Cli {
    /// Rescale an input whose line sums exceed 1 by its exact maximum line
    /// sum before validating.
    #[arg(long, global = true)]
    clamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the entry sum and sub-defect of a matrix.
    Subdefect { file: PathBuf },
    /// Embed a matrix into its minimal doubly stochastic completion.
    Complete {
        file: PathBuf,
        /// Write the completed matrix document here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Report the structural clauses of the minimal completion.
    Structure { file: PathBuf },
    /// Decompose a matrix into a convex combination of subpermutations.
    Decompose {
        file: PathBuf,
        /// Skip the term-count reduction pass.
        #[arg(long)]
        no_reduce: bool,
        /// Emit the combination on the completed side instead of
        /// truncating back to the input side.
        #[arg(long)]
        keep_completion: bool,
        /// Write the decomposition document here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the guaranteed term-count bound nnz + t.
    Bound { file: PathBuf },
    /// Check a decomposition document against a matrix document.
    Verify { matrix: PathBuf, decomposition: PathBuf },
    /// Exhaustively find the minimal term count (small matrices only).
    Oracle {
        file: PathBuf,
        /// Largest subset size the feasibility search may try.
        #[arg(long, default_value_t = OracleBudget::default().max_terms)]
        max_terms: usize,
    },
    /// Generate a seeded random substochastic matrix document.
    Random {
        /// Matrix side.
        #[arg(short, value_parser = parse_positive)]
        n: usize,
        /// Probability that a cell is nonzero, as an exact number in [0, 1].
        #[arg(long, value_parser = parse_density)]
        density: Rational,
        #[arg(long)]
        seed: u64,
    },
    /// Batch decomposition report over seeded random instances, as CSV.
    Sweep {
        /// Number of instances.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Smallest matrix side (instances cycle through the side range).
        #[arg(long, default_value_t = 2, value_parser = parse_positive)]
        min_n: usize,
        /// Largest matrix side.
        #[arg(long, default_value_t = 8)]
        max_n: usize,
        /// Comma-separated densities to cycle through.
        #[arg(long, value_delimiter = ',', value_parser = parse_density,
              default_value = "1/4,1/2,3/4")]
        densities: Vec<Rational>,
        /// Seed of the first instance; instance i uses seed + i.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_positive(text: &str) -> Result<usize, String> {
    let value: usize = text.parse().map_err(|e| format!("{e}"))?;
    if value == 0 {
        return Err("must be at least 1".to_owned());
    }
    Ok(value)
}

fn parse_density(text: &str) -> Result<Rational, String> {
    let value = rational_from_text(text).map_err(|e| e.to_string())?;
    if value < rat(0) || value > rat(1) {
        return Err(format!("density {} is outside [0, 1]", rational_to_text(&value)));
    }
    Ok(value)
}

/// Runs the CLI against explicit argument and output streams and returns
/// the process exit code.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let argv = std::iter::once("substoch".to_owned()).chain(args.iter().cloned());
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(parse_error) => {
            // --help and --version arrive here too; they are not failures.
            return if parse_error.use_stderr() {
                let _ = write!(err, "{parse_error}");
                2
            } else {
                let _ = write!(out, "{parse_error}");
                0
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(failure) => {
            let _ = writeln!(err, "error: {failure}");
            1
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Subdefect { file } => {
            let b = load_substochastic(&file, cli.clamp)?;
            writeln!(
                out,
                "sigma={} sub_defect={}",
                rational_to_text(b.sigma()),
                b.sub_defect()
            )?;
        }
        Command::Complete { file, output } => {
            let b = load_substochastic(&file, cli.clamp)?;
            let blocks = minimal_completion(&b);
            emit(out, output.as_deref(), &matrix_document(blocks.full()))?;
        }
        Command::Structure { file } => {
            let b = load_substochastic(&file, cli.clamp)?;
            let blocks = minimal_completion(&b);
            let report = verify_completion_structure(&blocks);
            writeln!(
                out,
                "side={} appended={} verdict={}",
                blocks.input_side(),
                blocks.appended(),
                if report.all_ok() { "ok" } else { "FAIL" }
            )?;
            write!(out, "{report}")?;
        }
        Command::Decompose { file, no_reduce, keep_completion, output } => {
            let b = load_substochastic(&file, cli.clamp)?;
            let options = DecomposeOptions { reduce: !no_reduce };
            let report = decompose_with_options(&b, options)?;
            let combo = if keep_completion {
                &report.completion_combination
            } else {
                &report.combination
            };
            emit(out, output.as_deref(), &decomposition_document(combo))?;
        }
        Command::Bound { file } => {
            let b = load_substochastic(&file, cli.clamp)?;
            let completion = minimal_completion(&b);
            let support = SupportPattern::from_matrix(completion.full())?;
            let t = fully_indecomposable_components(&support)?.t();
            let nnz = b.matrix().nnz();
            writeln!(out, "nnz={} t={} bound={}", nnz, t, nnz + t)?;
        }
        Command::Verify { matrix, decomposition } => {
            let m = load_matrix(&matrix, cli.clamp)?;
            let combo = load_decomposition(&decomposition)?;
            verify_combination(&m, &combo).map_err(CliError::Verification)?;
            writeln!(out, "ok")?;
        }
        Command::Oracle { file, max_terms } => {
            let b = load_substochastic(&file, cli.clamp)?;
            let budget = OracleBudget { max_terms, ..OracleBudget::default() };
            let minimal = minimal_term_count(&b, &budget)?;
            writeln!(out, "minimal_terms={minimal}")?;
        }
        Command::Random { n, density, seed } => {
            let b = random_substochastic(n, &density, seed);
            emit(out, None, &matrix_document(b.matrix()))?;
        }
        Command::Sweep { count, min_n, max_n, densities, seed } => {
            if max_n < min_n {
                return Err(CliError::Invalid(format!(
                    "max-n {max_n} is smaller than min-n {min_n}"
                )));
            }
            sweep(out, count, min_n, max_n, &densities, seed)?;
        }
    }
    Ok(())
}

fn sweep(
    out: &mut dyn Write,
    count: usize,
    min_n: usize,
    max_n: usize,
    densities: &[Rational],
    seed: u64,
) -> Result<(), CliError> {
    writeln!(
        out,
        "seed,n,sigma,sub_defect,nnz,t,face_dim,greedy_count,reduced_count,bound,ok"
    )?;
    let span = max_n - min_n + 1;
    for i in 0..count {
        let instance_seed = seed + i as u64;
        let side = min_n + i % span;
        let density = &densities[i % densities.len()];
        let b = random_substochastic(side, density, instance_seed);
        let report = decompose_with_options(&b, DecomposeOptions::default())?;
        let structure = verify_completion_structure(&report.completion);
        let ok = verify_combination(b.matrix(), &report.combination).is_ok()
            && structure.all_ok()
            && report.term_count <= report.bound
            && report.reduced_count <= report.face_dim + 1
            && report.face_dim + 1 <= b.matrix().nnz() + report.component_count;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            instance_seed,
            side,
            rational_to_text(b.sigma()),
            b.sub_defect(),
            b.matrix().nnz(),
            report.component_count,
            report.face_dim,
            report.greedy_count,
            report.reduced_count,
            report.bound,
            ok
        )?;
    }
    Ok(())
}

/// Deterministic random substochastic matrix: each cell is kept with the
/// exact probability `density`, kept cells draw a fraction in (0, 1], and
/// the whole matrix is rescaled by its maximum line sum when that exceeds 1.
pub fn random_substochastic(n: usize, density: &Rational, seed: u64) -> SubstochasticMatrix {
    assert!(n >= 1, "side must be positive");
    assert!(
        *density >= rat(0) && *density <= rat(1),
        "density must lie in [0, 1]"
    );
    let p = density.numer().to_u64().expect("density numerator fits u64");
    let q = density.denom().to_u64().expect("density denominator fits u64");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let keep = rng.gen_range(0..q) < p;
        if keep {
            let den = rng.gen_range(2..=9i64);
            let num = rng.gen_range(1..=den);
            entries.push(substoch::matrices::frac(num, den));
        } else {
            entries.push(rat(0));
        }
    }
    let matrix = Matrix::new(n, n, entries).expect("square by construction");
    clamp_to_substochastic(matrix).expect("rescaled matrix validates")
}

/// Rescales by the exact maximum line sum when it exceeds 1, then validates.
fn clamp_to_substochastic(matrix: Matrix) -> Result<SubstochasticMatrix, MatrixError> {
    let (rows, cols) = matrix.line_sums();
    let max_line = rows.into_iter().chain(cols).max().unwrap_or_else(|| rat(0));
    let scaled = if max_line > rat(1) {
        matrix.scale(&max_line.recip())
    } else {
        matrix
    };
    SubstochasticMatrix::new(scaled)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn load_matrix(path: &Path, clamp: bool) -> Result<Matrix, CliError> {
    let text = read_file(path)?;
    let matrix = parse_matrix_file(&text, &path.display().to_string())?;
    if clamp {
        let (rows, cols) = matrix.line_sums();
        let max_line = rows.into_iter().chain(cols).max().unwrap_or_else(|| rat(0));
        if max_line > rat(1) {
            return Ok(matrix.scale(&max_line.recip()));
        }
    }
    Ok(matrix)
}

fn load_substochastic(path: &Path, clamp: bool) -> Result<SubstochasticMatrix, CliError> {
    Ok(SubstochasticMatrix::new(load_matrix(path, clamp)?)?)
}

fn load_decomposition(path: &Path) -> Result<ConvexCombination, CliError> {
    let text = read_file(path)?;
    parse_decomposition_file(&text, &path.display().to_string())
}

/// Parses either document form: the JSON object with explicit side, or a
/// plain grid of exact numbers (whitespace-separated columns, one row per
/// line or ';'-separated).
pub fn parse_matrix_file(text: &str, path: &str) -> Result<Matrix, CliError> {
    if text.trim_start().starts_with('{') {
        let file: MatrixFile =
            serde_json::from_str(text).map_err(|e| CliError::Document {
                path: path.to_owned(),
                detail: e.to_string(),
            })?;
        if file.entries.len() != file.n {
            return Err(CliError::Document {
                path: path.to_owned(),
                detail: format!("expected {} rows, found {}", file.n, file.entries.len()),
            });
        }
        let mut cells = Vec::with_capacity(file.n * file.n);
        for (r, row) in file.entries.iter().enumerate() {
            if row.len() != file.n {
                return Err(CliError::Document {
                    path: path.to_owned(),
                    detail: format!(
                        "row {} has {} entries, expected {}",
                        r + 1,
                        row.len(),
                        file.n
                    ),
                });
            }
            for (c, cell) in row.iter().enumerate() {
                let value = rational_from_text(cell).map_err(|e| CliError::Document {
                    path: path.to_owned(),
                    detail: format!("entry at row {}, column {}: {}", r + 1, c + 1, e),
                })?;
                cells.push(value);
            }
        }
        Ok(Matrix::new(file.n, file.n, cells)?)
    } else {
        Ok(Matrix::from_text(text)?)
    }
}

/// Serializes a square matrix as a JSON document with exact entries.
pub fn write_matrix_file(matrix: &Matrix) -> String {
    matrix_document(matrix)
}

fn matrix_document(matrix: &Matrix) -> String {
    debug_assert!(matrix.is_square());
    let file = MatrixFile {
        n: matrix.rows(),
        entries: (0..matrix.rows())
            .map(|r| (0..matrix.cols()).map(|c| rational_to_text(matrix.at(r, c))).collect())
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("document serializes");
    text.push('\n');
    text
}

/// Serializes a combination in canonical order: descending weight, ties
/// broken by lexicographic assignment. Rows and columns are 1-indexed.
pub fn write_decomposition_file(combo: &ConvexCombination) -> String {
    decomposition_document(combo)
}

fn decomposition_document(combo: &ConvexCombination) -> String {
    let mut terms: Vec<&(Rational, Subpermutation)> = combo.terms().iter().collect();
    terms.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let file = DecompositionFile {
        n: combo.side(),
        terms: terms
            .into_iter()
            .map(|(weight, term)| TermFile {
                weight: rational_to_text(weight),
                assignment: term.pairs().map(|(r, c)| [r + 1, c + 1]).collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("document serializes");
    text.push('\n');
    text
}

pub fn parse_decomposition_file(text: &str, path: &str) -> Result<ConvexCombination, CliError> {
    let file: DecompositionFile =
        serde_json::from_str(text).map_err(|e| CliError::Document {
            path: path.to_owned(),
            detail: e.to_string(),
        })?;
    let mut terms = Vec::with_capacity(file.terms.len());
    for (i, term) in file.terms.iter().enumerate() {
        let weight = rational_from_text(&term.weight).map_err(|e| CliError::Document {
            path: path.to_owned(),
            detail: format!("term {}: weight: {}", i + 1, e),
        })?;
        let mut pairs = Vec::with_capacity(term.assignment.len());
        for &[row, col] in &term.assignment {
            if row == 0 || col == 0 || row > file.n || col > file.n {
                return Err(CliError::Document {
                    path: path.to_owned(),
                    detail: format!(
                        "term {}: cell ({row}, {col}) outside the {}x{} grid",
                        i + 1,
                        file.n,
                        file.n
                    ),
                });
            }
            pairs.push((row - 1, col - 1));
        }
        let sub = Subpermutation::from_pairs(file.n, pairs).map_err(|e| CliError::Document {
            path: path.to_owned(),
            detail: format!("term {}: {}", i + 1, e),
        })?;
        terms.push((weight, sub));
    }
    Ok(ConvexCombination::new(file.n, terms))
}

fn emit(out: &mut dyn Write, output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::WriteFile {
            path: path.display().to_string(),
            source,
        }),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (u8, String, String) {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(&args, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn json_and_grid_forms_parse_identically() {
        let json = r#"{"n": 2, "entries": [["7/12", "0"], ["1/6", "0.5"]]}"#;
        let grid = "7/12 0\n1/6 0.5\n";
        let a = parse_matrix_file(json, "a").unwrap();
        let b = parse_matrix_file(grid, "b").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.at(1, 1), &substoch::matrices::frac(1, 2));
    }

    #[test]
    fn matrix_document_round_trips() {
        let m = parse_matrix_file("7/12 0; 1/6 1/2", "inline").unwrap();
        let doc = write_matrix_file(&m);
        let reparsed = parse_matrix_file(&doc, "doc").unwrap();
        assert_eq!(m, reparsed);
        // Idempotent: writing the reparse gives the same bytes.
        assert_eq!(doc, write_matrix_file(&reparsed));
    }

    #[test]
    fn ragged_documents_name_the_offending_row() {
        let json = r#"{"n": 2, "entries": [["1", "0"], ["1"]]}"#;
        let err = parse_matrix_file(json, "short").unwrap_err();
        assert!(err.to_string().contains("row 2 has 1 entries, expected 2"));
    }

    #[test]
    fn bad_entries_report_their_position() {
        let json = r#"{"n": 1, "entries": [["1/x"]]}"#;
        let err = parse_matrix_file(json, "bad").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("row 1, column 1"), "got: {text}");
    }

    #[test]
    fn decomposition_document_round_trips_in_canonical_order() {
        let terms = vec![
            (
                substoch::matrices::frac(1, 4),
                Subpermutation::identity(2),
            ),
            (
                substoch::matrices::frac(3, 4),
                Subpermutation::from_pairs(2, [(0, 1), (1, 0)]).unwrap(),
            ),
        ];
        let combo = ConvexCombination::new(2, terms);
        let doc = write_decomposition_file(&combo);
        let reparsed = parse_decomposition_file(&doc, "doc").unwrap();
        // Canonical order puts the 3/4 term first.
        assert_eq!(reparsed.terms()[0].0, substoch::matrices::frac(3, 4));
        assert_eq!(doc, write_decomposition_file(&reparsed));
    }

    #[test]
    fn decomposition_documents_reject_out_of_grid_cells() {
        let doc = r#"{"n": 2, "terms": [{"weight": "1", "assignment": [[3, 1]]}]}"#;
        let err = parse_decomposition_file(doc, "oob").unwrap_err();
        assert!(err.to_string().contains("cell (3, 1)"));
    }

    #[test]
    fn random_matrices_are_deterministic_and_valid() {
        let density = substoch::matrices::frac(1, 2);
        let a = random_substochastic(4, &density, 42);
        let b = random_substochastic(4, &density, 42);
        assert_eq!(a.matrix(), b.matrix());
        let c = random_substochastic(4, &density, 43);
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn density_extremes() {
        let zero = random_substochastic(3, &rat(0), 7);
        assert!(zero.matrix().is_zero());
        for seed in 0..100 {
            let dense = random_substochastic(5, &rat(1), seed);
            assert!(dense.matrix().nnz() == 25);
        }
    }

    #[test]
    fn usage_errors_exit_two() {
        let (code, _, err) = run_cli(&["no-such-command"]);
        assert_eq!(code, 2);
        assert!(!err.is_empty());
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_cli(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("subdefect"));
    }

    #[test]
    fn missing_files_exit_one() {
        let (code, _, err) = run_cli(&["subdefect", "/no/such/file"]);
        assert_eq!(code, 1);
        assert!(err.contains("cannot read"));
    }
}
