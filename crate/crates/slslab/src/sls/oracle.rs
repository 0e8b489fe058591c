//! Exact expected-flips computation for tiny formulas.
//!
//! The solvers define a Markov chain on assignments; for up to
//! [`MAX_ORACLE_VARS`] variables that chain can be represented exactly and
//! the mean number of flips from a uniform initial assignment computed by
//! linear algebra instead of simulation. The transition law is rebuilt
//! here from the formula alone — satisfaction tests, break counts, and
//! clause selection are all recomputed from first principles — so that
//! agreement with the incremental solvers is evidence rather than
//! tautology.

use thiserror::Error;

use crate::formula::{Assignment, Formula, Var};
use crate::sls::{BreakFunction, ProbSatParams, Solver};

/// Upper bound on formula size for exact analysis; `2^n` states are
/// enumerated.
pub const MAX_ORACLE_VARS: usize = 12;

const GAUSS_SEIDEL_TOL: f64 = 1e-12;
const GAUSS_SEIDEL_MAX_SWEEPS: usize = 2_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("oracle supports at most {MAX_ORACLE_VARS} variables, formula has {0}")]
    TooManyVariables(usize),
    #[error("expected-flips iteration did not converge")]
    NoConvergence,
}

/// Expected number of flips the given solver spends on `f`, starting from
/// a uniformly random assignment, with an unlimited budget. Returns
/// `f64::INFINITY` for unsatisfiable formulas.
pub fn expected_flips(f: &Formula, solver: &Solver) -> Result<f64, OracleError> {
    let n = f.num_vars();
    if n > MAX_ORACLE_VARS {
        return Err(OracleError::TooManyVariables(n));
    }
    let chain = Chain::build(f, solver);
    if chain.sat.iter().all(|&s| !s) {
        return Ok(f64::INFINITY);
    }
    match solver {
        Solver::Srwa(params) => match params.walk_period(n) {
            Some(period) => Ok(chain.expected_flips_with_period(period)),
            None => chain.expected_flips_no_reset(),
        },
        Solver::ProbSat(_) => chain.expected_flips_no_reset(),
    }
}

struct Chain {
    sat: Vec<bool>,
    /// `transitions[state]` lists `(next_state, probability)`; empty for
    /// satisfying states.
    transitions: Vec<Vec<(usize, f64)>>,
}

impl Chain {
    fn build(f: &Formula, solver: &Solver) -> Chain {
        let n = f.num_vars();
        let states = 1usize << n;
        let mut sat = vec![false; states];
        let mut transitions = vec![Vec::new(); states];
        for mask in 0..states as u64 {
            let a = Assignment::from_mask(n, mask);
            let unsat = f.unsat_clauses(&a).expect("assignment width matches");
            if unsat.is_empty() {
                sat[mask as usize] = true;
                continue;
            }
            let clause_weight = 1.0 / unsat.len() as f64;
            let mut probs = vec![0.0f64; n];
            for &c in &unsat {
                let vars: Vec<usize> =
                    f.clauses()[c].lits().iter().map(|l| l.var().index()).collect();
                match solver {
                    Solver::Srwa(_) => {
                        let w = clause_weight / vars.len() as f64;
                        for &v in &vars {
                            probs[v] += w;
                        }
                    }
                    Solver::ProbSat(p) => {
                        let weights: Vec<f64> =
                            vars.iter().map(|&v| break_weight(f, &a, v, p)).collect();
                        let total: f64 = weights.iter().sum();
                        for (&v, &w) in vars.iter().zip(&weights) {
                            probs[v] += clause_weight * w / total;
                        }
                    }
                }
            }
            transitions[mask as usize] = probs
                .iter()
                .enumerate()
                .filter(|&(_, &p)| p > 0.0)
                .map(|(v, &p)| ((mask ^ (1u64 << v)) as usize, p))
                .collect();
        }
        Chain { sat, transitions }
    }

    /// Mean hitting time of the satisfying set from the uniform
    /// distribution, by Gauss-Seidel on `E = 1 + P E`.
    fn expected_flips_no_reset(&self) -> Result<f64, OracleError> {
        let states = self.sat.len();
        let mut e = vec![0.0f64; states];
        for _ in 0..GAUSS_SEIDEL_MAX_SWEEPS {
            let mut delta = 0.0f64;
            let mut scale = 1.0f64;
            for s in 0..states {
                if self.sat[s] {
                    continue;
                }
                let next: f64 = 1.0
                    + self.transitions[s]
                        .iter()
                        .map(|&(t, p)| p * e[t])
                        .sum::<f64>();
                delta = delta.max((next - e[s]).abs());
                scale = scale.max(next.abs());
                e[s] = next;
            }
            if delta <= GAUSS_SEIDEL_TOL * scale {
                let mean = e.iter().sum::<f64>() / states as f64;
                return Ok(mean);
            }
        }
        Err(OracleError::NoConvergence)
    }

    /// Expected total flips when the assignment is re-drawn uniformly
    /// after every `period` unsuccessful flips. One epoch costs
    /// `min(hitting time, period)` flips and fails with the probability
    /// that the walk survives the whole period, so the total is the epoch
    /// cost divided by the per-epoch success probability.
    fn expected_flips_with_period(&self, period: u64) -> f64 {
        let states = self.sat.len();
        let uniform = 1.0 / states as f64;
        // Mass over non-satisfying states; satisfying mass is absorbed.
        let mut live: Vec<f64> = (0..states)
            .map(|s| if self.sat[s] { 0.0 } else { uniform })
            .collect();
        let mut epoch_cost = 0.0f64;
        for _ in 0..period {
            let mass: f64 = live.iter().sum();
            if mass == 0.0 {
                break;
            }
            // Every surviving trajectory spends one more flip.
            epoch_cost += mass;
            let mut next = vec![0.0f64; states];
            for s in 0..states {
                if live[s] == 0.0 {
                    continue;
                }
                for &(t, p) in &self.transitions[s] {
                    if !self.sat[t] {
                        next[t] += live[s] * p;
                    }
                }
            }
            live = next;
        }
        let survive: f64 = live.iter().sum();
        debug_assert!(survive < 1.0, "some trajectory must reach a model");
        epoch_cost / (1.0 - survive)
    }
}

/// Number of clauses that flipping `var` would newly falsify, recomputed
/// directly from the formula, and the solver weight attached to it.
fn break_weight(f: &Formula, a: &Assignment, var: usize, params: &ProbSatParams) -> f64 {
    let mut flipped = a.clone();
    flipped.flip(Var::new(var));
    let mut breaks = 0u32;
    for clause in f.clauses() {
        if clause.is_satisfied_by(a) && !clause.is_satisfied_by(&flipped) {
            breaks += 1;
        }
    }
    match params.function {
        BreakFunction::Polynomial => (params.eps + breaks as f64).powf(-params.cb),
        BreakFunction::Exponential => params.cb.powf(-(breaks as f64)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Clause;
    use crate::gen::{dpll_sat, tests_support::random_formula};
    use crate::sls::{SolveStatus, SrwaParams};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn formula(clauses: &[&[i64]]) -> Formula {
        let n = clauses
            .iter()
            .flat_map(|c| c.iter())
            .map(|l| l.unsigned_abs() as usize)
            .max()
            .unwrap();
        let clauses: Vec<Clause> =
            clauses.iter().map(|c| Clause::from_dimacs_lits(c)).collect();
        Formula::new(n, clauses).unwrap()
    }

    #[test]
    fn single_positive_unit_clause() {
        // One variable, clause (x1). The only non-model flips straight to
        // the model: E = 1/2 * 0 + 1/2 * 1.
        let f = formula(&[&[1]]);
        for solver in [
            Solver::Srwa(SrwaParams { walk_period_factor: 0 }),
            Solver::Srwa(SrwaParams::default()),
            Solver::ProbSat(ProbSatParams::default()),
        ] {
            assert_relative_eq!(expected_flips(&f, &solver).unwrap(), 0.5);
        }
    }

    #[test]
    fn one_binary_clause() {
        // Clause (x1 v x2): only state 00 is unsatisfying and either flip
        // lands on a model, so E = 1/4.
        let f = formula(&[&[1, 2]]);
        for solver in [
            Solver::Srwa(SrwaParams { walk_period_factor: 0 }),
            Solver::ProbSat(ProbSatParams::default()),
        ] {
            assert_relative_eq!(expected_flips(&f, &solver).unwrap(), 0.25);
        }
    }

    #[test]
    fn two_conflicting_units_never_finish() {
        let f = formula(&[&[1], &[-1]]);
        let solver = Solver::Srwa(SrwaParams::default());
        assert_eq!(expected_flips(&f, &solver).unwrap(), f64::INFINITY);
    }

    #[test]
    fn contradiction_chain_solved_from_both_sides() {
        // (x1)(x1 -> x2) == (x1)(-x1 v x2); models: 11. Hand solve for the
        // pure walk: from 01 the unit clause forces x1, reaching 11, so
        // E(01) = 1. From 00 only (x1) is violated; flipping x1 gives 10.
        // From 10 only the implication is violated; half the flips return
        // to 00, half reach 11: E(10) = 1 + E(00)/2, E(00) = 1 + E(10).
        // Hence E(00) = 4, E(10) = 3, uniform mean = (4 + 1 + 3 + 0)/4.
        let f = formula(&[&[1], &[-1, 2]]);
        let solver = Solver::Srwa(SrwaParams { walk_period_factor: 0 });
        assert_relative_eq!(expected_flips(&f, &solver).unwrap(), 2.0, max_relative = 1e-10);
    }

    #[test]
    fn oracle_size_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_formula(&mut rng, MAX_ORACLE_VARS + 1, 10, 3);
        assert_eq!(
            expected_flips(&f, &Solver::Srwa(SrwaParams::default())),
            Err(OracleError::TooManyVariables(MAX_ORACLE_VARS + 1)),
        );
    }

    /// Simulation agreement on small random satisfiable formulas: the
    /// empirical mean over many runs must sit within a few standard
    /// errors of the exact value. This pins the solver implementations
    /// (clause selection, variable law, re-draw schedule, flip counting)
    /// to the independently constructed chain.
    fn check_agreement(solver: Solver, seed: u64, runs: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0usize;
        while checked < 4 {
            let f = random_formula(&mut rng, 6, 22, 3);
            if !dpll_sat(&f, 100_000).unwrap() {
                continue;
            }
            checked += 1;
            let exact = expected_flips(&f, &solver).unwrap();
            let mut sum = 0.0f64;
            let mut sum_sq = 0.0f64;
            for _ in 0..runs {
                let outcome = solver.solve(&f, u64::MAX, &mut rng);
                assert_eq!(outcome.status, SolveStatus::Solved);
                let x = outcome.flips as f64;
                sum += x;
                sum_sq += x * x;
            }
            let mean = sum / runs as f64;
            let var = (sum_sq / runs as f64 - mean * mean).max(0.0);
            let se = (var / runs as f64).sqrt();
            assert!(
                (mean - exact).abs() <= 5.0 * se + 1e-9,
                "empirical {mean} vs exact {exact} (se {se})",
            );
        }
    }

    #[test]
    fn walk_with_reinit_matches_exact_chain() {
        check_agreement(Solver::Srwa(SrwaParams::default()), 21, 40_000);
    }

    #[test]
    fn walk_without_reinit_matches_exact_chain() {
        check_agreement(Solver::Srwa(SrwaParams { walk_period_factor: 0 }), 22, 40_000);
    }

    #[test]
    fn short_period_reinit_matches_exact_chain() {
        // Period n: re-draws happen constantly, exercising the epoch
        // bookkeeping on both sides.
        check_agreement(Solver::Srwa(SrwaParams { walk_period_factor: 1 }), 23, 40_000);
    }

    #[test]
    fn polynomial_break_solver_matches_exact_chain() {
        check_agreement(Solver::ProbSat(ProbSatParams::default()), 24, 40_000);
    }

    #[test]
    fn exponential_break_solver_matches_exact_chain() {
        let params = ProbSatParams {
            cb: 2.5,
            eps: 1.0,
            function: BreakFunction::Exponential,
        };
        check_agreement(Solver::ProbSat(params), 25, 40_000);
    }
}
