//! Incremental flip engine shared by the stochastic local search solvers.
//!
//! The engine maintains, per clause, the number of satisfied literals and
//! (when that number is one) the critical variable, plus per-variable break
//! counts and an unsatisfied-clause stack with positional index for O(1)
//! removal. A flip touches only the clauses containing the flipped variable.

use rand::Rng;

use crate::formula::{Assignment, Formula};

const NOT_IN_UNSAT: u32 = u32::MAX;

pub(crate) struct WalkState {
    num_vars: usize,
    /// CSR clause storage: literal codes of clause `c` are
    /// `lits[clause_start[c]..clause_start[c + 1]]`.
    lits: Vec<u32>,
    clause_start: Vec<u32>,
    /// CSR occurrence lists per literal code.
    occ: Vec<u32>,
    occ_start: Vec<u32>,
    assign: Vec<bool>,
    true_count: Vec<u32>,
    /// Valid only where `true_count == 1`.
    crit_var: Vec<u32>,
    break_count: Vec<u32>,
    unsat: Vec<u32>,
    unsat_pos: Vec<u32>,
}

impl WalkState {
    pub fn new(f: &Formula, rng: &mut impl Rng) -> WalkState {
        let num_clauses = f.len();
        let mut lits = Vec::new();
        let mut clause_start = Vec::with_capacity(num_clauses + 1);
        clause_start.push(0u32);
        let mut occ_count = vec![0u32; 2 * f.num_vars()];
        for clause in f.clauses() {
            for lit in clause.lits() {
                lits.push(lit.code() as u32);
                occ_count[lit.code()] += 1;
            }
            clause_start.push(lits.len() as u32);
        }
        let mut occ_start = Vec::with_capacity(occ_count.len() + 1);
        let mut acc = 0u32;
        occ_start.push(0u32);
        for &c in &occ_count {
            acc += c;
            occ_start.push(acc);
        }
        let mut occ = vec![0u32; lits.len()];
        let mut cursor = occ_start.clone();
        for c in 0..num_clauses {
            for i in clause_start[c] as usize..clause_start[c + 1] as usize {
                let code = lits[i] as usize;
                occ[cursor[code] as usize] = c as u32;
                cursor[code] += 1;
            }
        }

        let mut state = WalkState {
            num_vars: f.num_vars(),
            lits,
            clause_start,
            occ,
            occ_start,
            assign: Vec::new(),
            true_count: vec![0; num_clauses],
            crit_var: vec![0; num_clauses],
            break_count: vec![0; f.num_vars()],
            unsat: Vec::new(),
            unsat_pos: vec![NOT_IN_UNSAT; num_clauses],
        };
        state.reinitialize(rng);
        state
    }

    /// Draws a fresh uniform assignment and rebuilds all counters.
    pub fn reinitialize(&mut self, rng: &mut impl Rng) {
        self.assign.clear();
        self.assign.extend((0..self.num_vars).map(|_| rng.gen_bool(0.5)));
        self.unsat.clear();
        self.unsat_pos.fill(NOT_IN_UNSAT);
        self.break_count.fill(0);
        let num_clauses = self.true_count.len();
        for c in 0..num_clauses {
            let mut count = 0u32;
            let mut crit = 0u32;
            for i in self.clause_start[c] as usize..self.clause_start[c + 1] as usize {
                let code = self.lits[i];
                if self.lit_is_true(code) {
                    count += 1;
                    crit = code >> 1;
                }
            }
            self.true_count[c] = count;
            self.crit_var[c] = crit;
            match count {
                0 => {
                    self.unsat_pos[c] = self.unsat.len() as u32;
                    self.unsat.push(c as u32);
                }
                1 => self.break_count[crit as usize] += 1,
                _ => {}
            }
        }
    }

    #[inline]
    fn lit_is_true(&self, code: u32) -> bool {
        // Literal code: var << 1 | positive-bit.
        self.assign[(code >> 1) as usize] == (code & 1 == 1)
    }

    #[inline]
    pub fn num_unsat(&self) -> usize {
        self.unsat.len()
    }

    #[inline]
    pub fn unsat_clause(&self, i: usize) -> u32 {
        self.unsat[i]
    }

    #[inline]
    pub fn clause_lits(&self, c: u32) -> &[u32] {
        &self.lits[self.clause_start[c as usize] as usize..self.clause_start[c as usize + 1] as usize]
    }

    #[inline]
    pub fn break_count(&self, var: u32) -> u32 {
        self.break_count[var as usize]
    }

    pub fn assignment(&self) -> Assignment {
        Assignment::from_values(self.assign.clone())
    }

    pub fn flip(&mut self, var: u32) {
        self.assign[var as usize] ^= true;
        let value = self.assign[var as usize];
        // The literal of `var` now true, and the one now false.
        let making = var << 1 | u32::from(value);
        let breaking = var << 1 | u32::from(!value);

        let (start, end) = (
            self.occ_start[making as usize] as usize,
            self.occ_start[making as usize + 1] as usize,
        );
        for i in start..end {
            let c = self.occ[i] as usize;
            let count = self.true_count[c] + 1;
            self.true_count[c] = count;
            match count {
                1 => {
                    // Clause leaves the unsat set; `var` becomes critical.
                    let pos = self.unsat_pos[c];
                    let last = *self.unsat.last().unwrap();
                    self.unsat.swap_remove(pos as usize);
                    if last != c as u32 {
                        self.unsat_pos[last as usize] = pos;
                    }
                    self.unsat_pos[c] = NOT_IN_UNSAT;
                    self.crit_var[c] = var;
                    self.break_count[var as usize] += 1;
                }
                2 => {
                    self.break_count[self.crit_var[c] as usize] -= 1;
                }
                _ => {}
            }
        }

        let (start, end) = (
            self.occ_start[breaking as usize] as usize,
            self.occ_start[breaking as usize + 1] as usize,
        );
        for i in start..end {
            let c = self.occ[i] as usize;
            let count = self.true_count[c] - 1;
            self.true_count[c] = count;
            match count {
                0 => {
                    // Clause joins the unsat set; `var` was critical.
                    self.unsat_pos[c] = self.unsat.len() as u32;
                    self.unsat.push(c as u32);
                    self.break_count[var as usize] -= 1;
                }
                1 => {
                    // Find the remaining true literal; it becomes critical.
                    let (cs, ce) = (
                        self.clause_start[c] as usize,
                        self.clause_start[c + 1] as usize,
                    );
                    for j in cs..ce {
                        let code = self.lits[j];
                        if self.lit_is_true(code) {
                            self.crit_var[c] = code >> 1;
                            self.break_count[(code >> 1) as usize] += 1;
                            break;
                        }
                    }
                }
                _ => {}
            }
        }
    }

    /// Recomputes every counter from scratch; test oracle for the
    /// incremental updates.
    #[cfg(test)]
    pub fn check_consistency(&self) {
        let num_clauses = self.true_count.len();
        let mut breaks = vec![0u32; self.num_vars];
        let mut unsat = Vec::new();
        for c in 0..num_clauses {
            let mut count = 0u32;
            let mut crit = 0u32;
            for i in self.clause_start[c] as usize..self.clause_start[c + 1] as usize {
                let code = self.lits[i];
                if self.lit_is_true(code) {
                    count += 1;
                    crit = code >> 1;
                }
            }
            assert_eq!(count, self.true_count[c], "true_count of clause {c}");
            match count {
                0 => unsat.push(c as u32),
                1 => {
                    assert_eq!(crit, self.crit_var[c], "crit_var of clause {c}");
                    breaks[crit as usize] += 1;
                }
                _ => {}
            }
        }
        assert_eq!(breaks, self.break_count);
        let mut ours = self.unsat.clone();
        ours.sort_unstable();
        assert_eq!(ours, unsat);
        for (c, &pos) in self.unsat_pos.iter().enumerate() {
            if pos != NOT_IN_UNSAT {
                assert_eq!(self.unsat[pos as usize], c as u32);
            }
        }
    }
}

/// Uniform choice among the variables of one clause; the selection law of
/// the random-walk solver.
#[inline]
pub(crate) fn choose_uniform_var(clause_lits: &[u32], rng: &mut impl Rng) -> u32 {
    clause_lits[rng.gen_range(0..clause_lits.len())] >> 1
}

/// Weighted choice among clause variables with weight `g(break(v))`,
/// sampled by cumulative weights; the selection law of the break-only
/// solver.
#[inline]
pub(crate) fn choose_weighted_var(
    clause_lits: &[u32],
    weight_of: impl Fn(u32) -> f64,
    rng: &mut impl Rng,
) -> u32 {
    debug_assert!(!clause_lits.is_empty());
    let mut total = 0.0;
    for &code in clause_lits {
        total += weight_of(code >> 1);
    }
    let mut target = rng.gen::<f64>() * total;
    for &code in clause_lits {
        target -= weight_of(code >> 1);
        if target <= 0.0 {
            return code >> 1;
        }
    }
    // Floating-point slack: fall back to the last variable.
    clause_lits[clause_lits.len() - 1] >> 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::tests_support::random_formula;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn incremental_counters_survive_a_random_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let f = random_formula(&mut rng, 12, 50, 3);
            let mut state = WalkState::new(&f, &mut rng);
            state.check_consistency();
            for _ in 0..200 {
                let v = rng.gen_range(0..12) as u32;
                state.flip(v);
                state.check_consistency();
            }
            state.reinitialize(&mut rng);
            state.check_consistency();
        }
    }

    #[test]
    fn unsat_stack_tracks_the_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let f = random_formula(&mut rng, 10, 40, 3);
        let mut state = WalkState::new(&f, &mut rng);
        for _ in 0..100 {
            let a = state.assignment();
            assert_eq!(f.unsat_clauses(&a).unwrap().len(), state.num_unsat());
            let v = rng.gen_range(0..10) as u32;
            state.flip(v);
        }
    }

    #[test]
    fn uniform_choice_law_is_uniform() {
        // Chi-square uniformity check on the in-clause variable choice.
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let clause: Vec<u32> = vec![0 << 1 | 1, 3 << 1, 7 << 1 | 1];
        let mut counts = [0u64; 3];
        let draws = 60_000;
        for _ in 0..draws {
            let v = choose_uniform_var(&clause, &mut rng);
            let slot = clause.iter().position(|&c| c >> 1 == v).unwrap();
            counts[slot] += 1;
        }
        let expected = draws as f64 / 3.0;
        let stat: f64 = counts
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9th percentile of chi-square with 2 degrees of freedom.
        assert!(stat < 13.8, "chi-square statistic {stat}");
    }

    #[test]
    fn weighted_choice_law_matches_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let clause: Vec<u32> = vec![1 << 1, 4 << 1 | 1, 6 << 1];
        let weights = |v: u32| match v {
            1 => 1.0,
            4 => 2.0,
            6 => 5.0,
            _ => unreachable!(),
        };
        let mut counts = [0u64; 3];
        let draws = 80_000usize;
        for _ in 0..draws {
            let v = choose_weighted_var(&clause, weights, &mut rng);
            let slot = clause.iter().position(|&c| c >> 1 == v).unwrap();
            counts[slot] += 1;
        }
        let total_w = 8.0;
        let stat: f64 = counts
            .iter()
            .zip([1.0, 2.0, 5.0])
            .map(|(&o, w)| {
                let e = draws as f64 * w / total_w;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        assert!(stat < 13.8, "chi-square statistic {stat}");
    }
}
