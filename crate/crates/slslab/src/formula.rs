//! CNF formulas with canonical clause normalization and DIMACS text I/O.
//!
//! Variables are 0-based internally; the 1-based DIMACS convention is
//! confined to [`parse_dimacs`] and [`Formula::to_dimacs`]. Clauses are kept
//! sorted by variable (negative literal before positive on the same
//! variable), duplicate literals are merged, and tautological clauses are
//! rejected outright, so two clauses are logically identical iff they
//! compare equal.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// 0-based propositional variable index.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    pub fn new(index: usize) -> Var {
        Var(u32::try_from(index).expect("variable index exceeds u32"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0 + 1)
    }
}

/// A literal packed as `var << 1 | polarity` with polarity bit 1 = positive.
///
/// The packing makes the derived order the canonical clause order: ascending
/// by variable, negative literal first on the same variable.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, negative: bool) -> Lit {
        Lit(var.0 << 1 | u32::from(!negative))
    }

    pub fn positive(var: Var) -> Lit {
        Lit::new(var, false)
    }

    pub fn negative(var: Var) -> Lit {
        Lit::new(var, true)
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_negative(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn negated(self) -> Lit {
        Lit(self.0 ^ 1)
    }

    /// Internal dense code, usable as an index into per-literal tables of
    /// size `2 * num_vars`.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// Signed 1-based DIMACS form.
    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.0 >> 1) + 1;
        if self.is_negative() {
            -v
        } else {
            v
        }
    }

    /// Parses a signed non-zero DIMACS literal.
    pub fn from_dimacs(lit: i64) -> Option<Lit> {
        if lit == 0 || lit.unsigned_abs() > u64::from(u32::MAX >> 1) {
            return None;
        }
        let var = Var((lit.unsigned_abs() - 1) as u32);
        Some(Lit::new(var, lit < 0))
    }

    pub fn is_true_under(self, a: &Assignment) -> bool {
        a.value(self.var()) != self.is_negative()
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClauseError {
    #[error("clause has no literals")]
    Empty,
    #[error("clause is tautological on variable {var}")]
    Tautological { var: Var },
}

/// A non-empty, non-tautological disjunction of literals in canonical order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    /// Builds a clause, sorting literals, merging duplicates and rejecting
    /// the empty and tautological cases. Normalization is idempotent.
    pub fn new(lits: impl IntoIterator<Item = Lit>) -> Result<Clause, ClauseError> {
        let mut lits: Vec<Lit> = lits.into_iter().collect();
        lits.sort_unstable();
        lits.dedup();
        if lits.is_empty() {
            return Err(ClauseError::Empty);
        }
        for pair in lits.windows(2) {
            if pair[0].var() == pair[1].var() {
                return Err(ClauseError::Tautological { var: pair[0].var() });
            }
        }
        Ok(Clause { lits })
    }

    /// Convenience constructor from signed DIMACS literals; panics on
    /// malformed input, intended for tests and examples.
    pub fn from_dimacs_lits(lits: &[i64]) -> Clause {
        Clause::new(
            lits.iter()
                .map(|&l| Lit::from_dimacs(l).expect("non-zero literal")),
        )
        .expect("well-formed clause")
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.lits.binary_search(&lit).is_ok()
    }

    pub fn max_var(&self) -> Var {
        self.lits.last().expect("clause is non-empty").var()
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.lits.iter().any(|l| l.is_true_under(a))
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// A total truth assignment over variables `0..len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn from_values(values: Vec<bool>) -> Assignment {
        Assignment { values }
    }

    pub fn all_false(num_vars: usize) -> Assignment {
        Assignment {
            values: vec![false; num_vars],
        }
    }

    pub fn random(num_vars: usize, rng: &mut impl rand::Rng) -> Assignment {
        Assignment {
            values: (0..num_vars).map(|_| rng.gen_bool(0.5)).collect(),
        }
    }

    /// Assignment whose bit `v` is bit `v` of `mask`; usable with full
    /// truth-table enumeration for up to 64 variables.
    pub fn from_mask(num_vars: usize, mask: u64) -> Assignment {
        assert!(num_vars <= 64);
        Assignment {
            values: (0..num_vars).map(|v| mask >> v & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, var: Var) -> bool {
        self.values[var.index()]
    }

    pub fn set(&mut self, var: Var, value: bool) {
        self.values[var.index()] = value;
    }

    pub fn flip(&mut self, var: Var) {
        self.values[var.index()] ^= true;
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("literal {lit} uses a variable outside 1..={num_vars}")]
    LiteralOutOfRange { lit: i64, num_vars: usize },
    #[error("{0}")]
    BadClause(#[from] ClauseError),
    #[error("assignment has {assignment} variables, formula has {formula}")]
    AssignmentMismatch { assignment: usize, formula: usize },
}

/// A CNF formula: a deduplicated clause list over a fixed variable range.
///
/// Clause storage order is insertion order of first occurrence, which keeps
/// text round-trips and seeded generation reproducible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(
        num_vars: usize,
        clauses: impl IntoIterator<Item = Clause>,
    ) -> Result<Formula, FormulaError> {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for clause in clauses {
            if clause.max_var().index() >= num_vars {
                return Err(FormulaError::LiteralOutOfRange {
                    lit: Lit::new(clause.max_var(), false).to_dimacs(),
                    num_vars,
                });
            }
            if seen.insert(clause.clone()) {
                kept.push(clause);
            }
        }
        Ok(Formula {
            num_vars,
            clauses: kept,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn contains_clause(&self, clause: &Clause) -> bool {
        self.clauses.iter().any(|c| c == clause)
    }

    /// Returns the formula extended by `extra` clauses (duplicates dropped,
    /// original clause order preserved).
    pub fn with_added_clauses(
        &self,
        extra: impl IntoIterator<Item = Clause>,
    ) -> Result<Formula, FormulaError> {
        Formula::new(self.num_vars, self.clauses.iter().cloned().chain(extra))
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.is_satisfied_by(a))
    }

    /// Indices of clauses with no literal satisfied by `a`, in clause order.
    pub fn unsat_clauses(&self, a: &Assignment) -> Result<Vec<usize>, FormulaError> {
        if a.len() != self.num_vars {
            return Err(FormulaError::AssignmentMismatch {
                assignment: a.len(),
                formula: self.num_vars,
            });
        }
        Ok(self
            .clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_satisfied_by(a))
            .map(|(i, _)| i)
            .collect())
    }

    /// Canonical DIMACS text: `p cnf` header, then one clause per line with
    /// literals ascending by variable, single spaces, and a trailing ` 0`.
    /// Emission is byte-reproducible for equal formulas.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("p cnf {} {}\n", self.num_vars, self.clauses.len()));
        for clause in &self.clauses {
            for lit in clause.lits() {
                out.push_str(&lit.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("missing `p cnf <vars> <clauses>` header")]
    MissingHeader,
    #[error("malformed header: {0:?}")]
    BadHeader(String),
    #[error("token {0:?} is not a literal")]
    BadToken(String),
    #[error("literal {lit} uses a variable outside 1..={num_vars}")]
    LiteralOutOfRange { lit: i64, num_vars: usize },
    #[error("empty clause")]
    EmptyClause,
    #[error("tautological clause on variable {0}")]
    TautologicalClause(u32),
    #[error("clause not terminated by 0 at end of input")]
    UnterminatedClause,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

/// Non-fatal irregularities observed while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// Header clause count disagrees with the number of clauses actually
    /// read (before deduplication).
    ClauseCountMismatch { declared: usize, found: usize },
    /// Duplicate clauses were merged away.
    DuplicateClauses { dropped: usize },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::ClauseCountMismatch { declared, found } => write!(
                f,
                "header declares {declared} clauses but {found} were found"
            ),
            ParseWarning::DuplicateClauses { dropped } => {
                write!(f, "{dropped} duplicate clause(s) merged")
            }
        }
    }
}

#[derive(Debug)]
pub struct ParsedDimacs {
    pub formula: Formula,
    pub warnings: Vec<ParseWarning>,
}

/// Parses DIMACS CNF text. Comment lines (`c ...`) are skipped, clauses are
/// zero-terminated token streams and may span lines. Errors carry the
/// 1-based line number of the offending token.
pub fn parse_dimacs(text: &str) -> Result<ParsedDimacs, ParseError> {
    let mut num_vars: Option<usize> = None;
    let mut declared_clauses = 0usize;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut current_line = 0usize;
    let mut found = 0usize;

    let err = |line: usize, kind: ParseErrorKind| ParseError { line, kind };

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if num_vars.is_none() {
            if !trimmed.starts_with('p') {
                return Err(err(line_no, ParseErrorKind::MissingHeader));
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                ["p", "cnf", nv, nc] => nv
                    .parse::<usize>()
                    .ok()
                    .zip(nc.parse::<usize>().ok()),
                _ => None,
            };
            let (nv, nc) = parsed
                .ok_or_else(|| err(line_no, ParseErrorKind::BadHeader(trimmed.to_string())))?;
            num_vars = Some(nv);
            declared_clauses = nc;
            continue;
        }
        let nv = num_vars.unwrap();
        for token in trimmed.split_whitespace() {
            let value: i64 = token
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::BadToken(token.to_string())))?;
            if value == 0 {
                found += 1;
                let clause = Clause::new(current.drain(..)).map_err(|e| match e {
                    ClauseError::Empty => err(line_no, ParseErrorKind::EmptyClause),
                    ClauseError::Tautological { var } => err(
                        line_no,
                        ParseErrorKind::TautologicalClause(var.0 + 1),
                    ),
                })?;
                clauses.push(clause);
            } else {
                let lit = Lit::from_dimacs(value)
                    .ok_or_else(|| err(line_no, ParseErrorKind::BadToken(token.to_string())))?;
                if lit.var().index() >= nv {
                    return Err(err(
                        line_no,
                        ParseErrorKind::LiteralOutOfRange {
                            lit: value,
                            num_vars: nv,
                        },
                    ));
                }
                if current.is_empty() {
                    current_line = line_no;
                }
                current.push(lit);
            }
        }
    }

    let num_vars = num_vars.ok_or(ParseError {
        line: text.lines().count().max(1),
        kind: ParseErrorKind::MissingHeader,
    })?;
    if !current.is_empty() {
        return Err(err(current_line, ParseErrorKind::UnterminatedClause));
    }

    let mut warnings = Vec::new();
    if found != declared_clauses {
        warnings.push(ParseWarning::ClauseCountMismatch {
            declared: declared_clauses,
            found,
        });
    }
    let formula = Formula::new(num_vars, clauses).map_err(|e| {
        // Range errors are caught per token above; only defensive here.
        ParseError {
            line: 0,
            kind: match e {
                FormulaError::LiteralOutOfRange { lit, num_vars } => {
                    ParseErrorKind::LiteralOutOfRange { lit, num_vars }
                }
                _ => ParseErrorKind::EmptyClause,
            },
        }
    })?;
    if formula.len() != found {
        warnings.push(ParseWarning::DuplicateClauses {
            dropped: found - formula.len(),
        });
    }
    Ok(ParsedDimacs { formula, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clause(lits: &[i64]) -> Clause {
        Clause::from_dimacs_lits(lits)
    }

    #[test]
    fn literal_packing_round_trips() {
        for raw in [1i64, -1, 2, -2, 17, -40] {
            let lit = Lit::from_dimacs(raw).unwrap();
            assert_eq!(lit.to_dimacs(), raw);
            assert_eq!(lit.negated().to_dimacs(), -raw);
            assert_eq!(lit.negated().negated(), lit);
        }
        assert_eq!(Lit::from_dimacs(0), None);
    }

    #[test]
    fn canonical_order_sorts_by_variable_negative_first() {
        let c = clause(&[3, -1, 2]);
        let rendered: Vec<i64> = c.lits().iter().map(|l| l.to_dimacs()).collect();
        assert_eq!(rendered, vec![-1, 2, 3]);
        // Same variable: negative sorts before positive.
        assert!(Lit::from_dimacs(-2).unwrap() < Lit::from_dimacs(2).unwrap());
    }

    #[test]
    fn clause_normalization_is_idempotent_and_merges_duplicates() {
        let c = clause(&[2, 2, -1, 2]);
        assert_eq!(c, clause(&[-1, 2]));
        let renorm = Clause::new(c.lits().iter().copied()).unwrap();
        assert_eq!(renorm, c);
    }

    #[test]
    fn tautologies_and_empty_clauses_are_rejected() {
        let taut = Clause::new([Lit::from_dimacs(1).unwrap(), Lit::from_dimacs(-1).unwrap()]);
        assert!(matches!(taut, Err(ClauseError::Tautological { .. })));
        assert_eq!(Clause::new([]), Err(ClauseError::Empty));
    }

    #[test]
    fn formula_deduplicates_preserving_first_occurrence_order() {
        let f = Formula::new(
            3,
            vec![clause(&[1, 2]), clause(&[-3]), clause(&[2, 1]), clause(&[-3])],
        )
        .unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.clauses()[0], clause(&[1, 2]));
        assert_eq!(f.clauses()[1], clause(&[-3]));
    }

    #[test]
    fn unsat_clauses_matches_naive_per_clause_scan() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(05_11);
        for _ in 0..50 {
            let f = crate::gen::tests_support::random_formula(&mut rng, 8, 20, 3);
            let a = Assignment::random(f.num_vars(), &mut rng);
            let expected: Vec<usize> = f
                .clauses()
                .iter()
                .enumerate()
                .filter(|(_, c)| {
                    !c.lits().iter().any(|l| {
                        let v = a.value(l.var());
                        if l.is_negative() {
                            !v
                        } else {
                            v
                        }
                    })
                })
                .map(|(i, _)| i)
                .collect();
            assert_eq!(f.unsat_clauses(&a).unwrap(), expected);
        }
    }

    #[test]
    fn unsat_clauses_rejects_mismatched_assignment() {
        let f = Formula::new(2, vec![clause(&[1, 2])]).unwrap();
        let a = Assignment::all_false(3);
        assert!(matches!(
            f.unsat_clauses(&a),
            Err(FormulaError::AssignmentMismatch { .. })
        ));
    }

    #[test]
    fn emits_exact_dimacs_bytes() {
        let f = Formula::new(1, vec![clause(&[1])]).unwrap();
        assert_eq!(f.to_dimacs(), "p cnf 1 1\n1 0\n");

        let g = Formula::new(3, vec![clause(&[3, -1]), clause(&[2])]).unwrap();
        assert_eq!(g.to_dimacs(), "p cnf 3 2\n-1 3 0\n2 0\n");
    }

    #[test]
    fn parses_comments_multiline_clauses_and_blank_lines() {
        let text = "c example\n\np cnf 4 2\n1 -3\n4 0\nc mid comment\n2 -4 0\n";
        let parsed = parse_dimacs(text).unwrap();
        assert!(parsed.warnings.is_empty());
        assert_eq!(parsed.formula.len(), 2);
        assert_eq!(parsed.formula.clauses()[0], clause(&[1, -3, 4]));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let out_of_range = parse_dimacs("p cnf 2 1\n1 5 0\n").unwrap_err();
        assert_eq!(out_of_range.line, 2);
        assert!(matches!(
            out_of_range.kind,
            ParseErrorKind::LiteralOutOfRange { lit: 5, num_vars: 2 }
        ));

        let taut = parse_dimacs("p cnf 2 1\n\nc x\n1 -1 0\n").unwrap_err();
        assert_eq!(taut.line, 4);
        assert_eq!(taut.kind, ParseErrorKind::TautologicalClause(1));

        let empty = parse_dimacs("p cnf 2 1\n0\n").unwrap_err();
        assert_eq!(empty.kind, ParseErrorKind::EmptyClause);

        let unterminated = parse_dimacs("p cnf 2 1\n1 2\n").unwrap_err();
        assert_eq!(unterminated.kind, ParseErrorKind::UnterminatedClause);
        assert_eq!(unterminated.line, 2);

        let missing = parse_dimacs("1 2 0\n").unwrap_err();
        assert_eq!(missing.kind, ParseErrorKind::MissingHeader);
    }

    #[test]
    fn clause_count_mismatch_is_a_warning_not_an_error() {
        let parsed = parse_dimacs("p cnf 2 5\n1 0\n-2 0\n").unwrap();
        assert_eq!(
            parsed.warnings,
            vec![ParseWarning::ClauseCountMismatch {
                declared: 5,
                found: 2
            }]
        );
        assert_eq!(parsed.formula.len(), 2);
    }

    #[test]
    fn parse_merges_duplicate_literals_and_clauses_with_warning() {
        let parsed = parse_dimacs("p cnf 2 2\n1 1 2 0\n2 1 0\n").unwrap();
        assert_eq!(parsed.formula.len(), 1);
        assert_eq!(
            parsed.warnings,
            vec![ParseWarning::DuplicateClauses { dropped: 1 }]
        );
    }
}
