//! Random k-SAT instance generators.
//!
//! Two families: uniform random formulas, and hidden-solution formulas that
//! plant an assignment and accept candidate clauses with a probability
//! depending on how many of their literals agree with it. A minimal DPLL
//! decision procedure supports satisfiability filtering at desk scale.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Assignment, Clause, Formula, FormulaError, Lit, Var};

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("chance vector must have k+1 = {expected} entries, got {got}")]
    ChanceLength { expected: usize, got: usize },
    #[error("chance vector entry {index} = {value} outside [0, 1]")]
    ChanceRange { index: usize, value: f64 },
    #[error("chance vector must put probability 0 on clauses with no agreeing literal")]
    ChanceZeroMissing,
    #[error("chance vector accepts nothing")]
    ChanceAllZero,
    #[error("clause width {k} exceeds variable count {n}")]
    WidthExceedsVars { k: usize, n: usize },
    #[error("clause width must be at least 1")]
    ZeroWidth,
    #[error("variable count must be at least 1")]
    ZeroVars,
    #[error("candidate budget {budget} exhausted after accepting {accepted} of {target} clauses")]
    CandidateBudgetExhausted {
        budget: u64,
        accepted: usize,
        target: usize,
    },
    #[error("DPLL node budget {budget} exceeded")]
    NodeBudgetExceeded { budget: u64 },
    #[error("no satisfiable formula found in {attempts} attempts")]
    SatAttemptsExhausted { attempts: u64 },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Acceptance probabilities for hidden-solution generation, indexed by the
/// number of clause literals agreeing with the planted assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ChanceVector {
    probs: Vec<f64>,
}

impl ChanceVector {
    /// Validates: length k+1, entry 0 must be 0 (a clause agreeing nowhere
    /// is falsified by the planted assignment), some entry positive.
    pub fn new(probs: Vec<f64>, k: usize) -> Result<ChanceVector, GenError> {
        if probs.len() != k + 1 {
            return Err(GenError::ChanceLength {
                expected: k + 1,
                got: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(GenError::ChanceRange { index, value });
            }
        }
        if probs[0] != 0.0 {
            return Err(GenError::ChanceZeroMissing);
        }
        if probs.iter().all(|&q| q == 0.0) {
            return Err(GenError::ChanceAllZero);
        }
        Ok(ChanceVector { probs })
    }

    /// Default profile for 3-literal clauses, biased toward clauses that
    /// agree with the planted assignment in most positions.
    pub fn default_k3() -> ChanceVector {
        ChanceVector {
            probs: vec![0.0, 0.05, 0.25, 0.70],
        }
    }

    pub fn k(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn accept_prob(&self, agreeing: usize) -> f64 {
        self.probs[agreeing]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl TryFrom<Vec<f64>> for ChanceVector {
    type Error = GenError;
    fn try_from(probs: Vec<f64>) -> Result<Self, Self::Error> {
        if probs.is_empty() {
            return Err(GenError::ChanceAllZero);
        }
        let k = probs.len() - 1;
        ChanceVector::new(probs, k)
    }
}

impl From<ChanceVector> for Vec<f64> {
    fn from(cv: ChanceVector) -> Vec<f64> {
        cv.probs
    }
}

/// Shape of one generated instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n == 0 {
            return Err(GenError::ZeroVars);
        }
        if self.k == 0 {
            return Err(GenError::ZeroWidth);
        }
        if self.k > self.n {
            return Err(GenError::WidthExceedsVars { k: self.k, n: self.n });
        }
        Ok(())
    }
}

/// One uniform candidate clause: `k` distinct variables, random polarities.
fn random_clause(n: usize, k: usize, rng: &mut impl Rng) -> Clause {
    let vars = rand::seq::index::sample(rng, n, k);
    Clause::new(
        vars.iter()
            .map(|v| Lit::new(Var::new(v), rng.gen_bool(0.5))),
    )
    .expect("distinct variables cannot collide or be empty")
}

/// Uniform random k-SAT: `m` candidate clauses drawn independently.
/// Duplicate clauses are merged by formula construction, so the result may
/// have fewer than `m` clauses.
pub fn gen_uniform(spec: &GenSpec, rng: &mut impl Rng) -> Result<Formula, GenError> {
    spec.validate()?;
    let clauses: Vec<Clause> = (0..spec.m)
        .map(|_| random_clause(spec.n, spec.k, rng))
        .collect();
    Ok(Formula::new(spec.n, clauses)?)
}

/// Budget for candidate draws per requested clause.
const CANDIDATES_PER_CLAUSE: u64 = 10_000;

/// Hidden-solution generation: plant a random assignment, then draw uniform
/// candidate clauses and accept each with probability `chances[i]` where `i`
/// counts its literals satisfied by the planted assignment.
///
/// The planted assignment satisfies every accepted clause (clauses agreeing
/// nowhere have acceptance probability 0), so the result is satisfiable by
/// construction. A candidate budget guards against chance vectors that are
/// almost everywhere zero.
pub fn gen_hidden(
    spec: &GenSpec,
    chances: &ChanceVector,
    rng: &mut impl Rng,
) -> Result<(Formula, Assignment), GenError> {
    spec.validate()?;
    if chances.k() != spec.k {
        return Err(GenError::ChanceLength {
            expected: spec.k + 1,
            got: chances.probs.len(),
        });
    }
    let planted = Assignment::random(spec.n, rng);
    let budget = CANDIDATES_PER_CLAUSE * spec.m.max(1) as u64;
    let mut accepted: Vec<Clause> = Vec::with_capacity(spec.m);
    let mut drawn = 0u64;
    while accepted.len() < spec.m {
        if drawn == budget {
            return Err(GenError::CandidateBudgetExhausted {
                budget,
                accepted: accepted.len(),
                target: spec.m,
            });
        }
        drawn += 1;
        let candidate = random_clause(spec.n, spec.k, rng);
        let agreeing = candidate
            .lits()
            .iter()
            .filter(|l| l.is_true_under(&planted))
            .count();
        let q = chances.accept_prob(agreeing);
        if q > 0.0 && rng.gen_bool(q) {
            accepted.push(candidate);
        }
    }
    let formula = Formula::new(spec.n, accepted)?;
    debug_assert!(formula.is_satisfied_by(&planted));
    Ok((formula, planted))
}

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Minimal DPLL satisfiability decision: unit propagation plus two-way
/// branching on the first unassigned variable. No clause learning; intended
/// for desk-scale inputs (tens of variables). The budget counts decision
/// nodes.
pub fn dpll_sat(f: &Formula, node_budget: u64) -> Result<bool, GenError> {
    let mut assign: Vec<Option<bool>> = vec![None; f.num_vars()];
    let mut nodes = 0u64;
    dpll(f, &mut assign, &mut nodes, node_budget)
}

fn dpll(
    f: &Formula,
    assign: &mut Vec<Option<bool>>,
    nodes: &mut u64,
    budget: u64,
) -> Result<bool, GenError> {
    let mut trail: Vec<Var> = Vec::new();
    let undo = |assign: &mut Vec<Option<bool>>, trail: &[Var]| {
        for v in trail {
            assign[v.index()] = None;
        }
    };
    // Unit propagation to fixpoint.
    loop {
        let mut propagated = false;
        for clause in f.clauses() {
            let mut unassigned: Option<Lit> = None;
            let mut count = 0usize;
            let mut satisfied = false;
            for &lit in clause.lits() {
                match assign[lit.var().index()] {
                    None => {
                        unassigned = Some(lit);
                        count += 1;
                    }
                    Some(v) => {
                        if v != lit.is_negative() {
                            satisfied = true;
                            break;
                        }
                    }
                }
            }
            if satisfied {
                continue;
            }
            match count {
                0 => {
                    undo(assign, &trail);
                    return Ok(false);
                }
                1 => {
                    let lit = unassigned.unwrap();
                    assign[lit.var().index()] = Some(!lit.is_negative());
                    trail.push(lit.var());
                    propagated = true;
                }
                _ => {}
            }
        }
        if !propagated {
            break;
        }
    }

    let branch_var = (0..f.num_vars()).find(|&v| assign[v].is_none());
    let result = match branch_var {
        None => Ok(true),
        Some(v) => {
            *nodes += 1;
            if *nodes > budget {
                Err(GenError::NodeBudgetExceeded { budget })
            } else {
                let mut r = Ok(false);
                for value in [true, false] {
                    assign[v] = Some(value);
                    r = dpll(f, assign, nodes, budget);
                    if !matches!(r, Ok(false)) {
                        break;
                    }
                }
                if matches!(r, Ok(false) | Err(_)) {
                    assign[v] = None;
                }
                r
            }
        }
    };
    if !matches!(result, Ok(true)) {
        undo(assign, &trail);
    }
    result
}

pub const DEFAULT_SAT_ATTEMPTS: u64 = 10_000;

/// Uniform random k-SAT conditioned on satisfiability: draws formulas with
/// `m = round(ratio * n)` clauses until DPLL certifies one satisfiable.
pub fn gen_uniform_sat(
    n: usize,
    ratio: f64,
    k: usize,
    rng: &mut impl Rng,
    attempts: u64,
    node_budget: u64,
) -> Result<Formula, GenError> {
    let m = (ratio * n as f64).round() as usize;
    let spec = GenSpec { n, m, k, seed: 0 };
    spec.validate()?;
    for _ in 0..attempts {
        let f = gen_uniform(&spec, rng)?;
        if dpll_sat(&f, node_budget)? {
            return Ok(f);
        }
    }
    Err(GenError::SatAttemptsExhausted { attempts })
}

/// Helpers shared by unit tests across modules.
#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    /// Run-of-the-mill random formula for closure and round-trip tests.
    pub fn random_formula(rng: &mut impl Rng, n: usize, m: usize, k: usize) -> Formula {
        let spec = GenSpec { n, m, k, seed: 0 };
        gen_uniform(&spec, rng).unwrap()
    }
}
