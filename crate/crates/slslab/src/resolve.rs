//! Bounded-width resolution closure and randomized clause-set extension.
//!
//! The closure of a formula under width-bounded resolution collects every
//! clause derivable by repeatedly resolving pairs, keeping only resolvents
//! of at most `width` literals at every step. Clauses in the closure are
//! logical consequences of the input, so adding any subset of them yields a
//! formula with the same solution set. [`sample_resolvent_set`] picks each
//! pool clause independently with probability `p`, and [`modify`] runs the
//! whole pipeline: close, sample, extend.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

use crate::formula::{Clause, Formula, FormulaError, Lit, Var};

#[derive(Debug, Error, PartialEq)]
pub enum ResolveError {
    #[error("derived the empty clause; the input formula is unsatisfiable")]
    EmptyResolvent,
    #[error("resolution closure exceeded the {limit}-clause limit")]
    ClosureLimitExceeded { limit: usize },
    #[error("width must be at least 1")]
    ZeroWidth,
    #[error("inclusion probability {p} outside (0, 1]")]
    BadProbability { p: f64 },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Parameters of one randomized modification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModificationParams {
    /// Maximum resolvent width kept in the closure.
    pub width: u32,
    /// Independent inclusion probability for each pool clause.
    pub p: f64,
    /// Shuffle the selected clauses before appending them.
    pub shuffle: bool,
    /// Seed recorded with the modification; callers construct their RNG
    /// stream from it.
    pub seed: u64,
}

impl ModificationParams {
    pub fn validate(&self) -> Result<(), ResolveError> {
        if self.width == 0 {
            return Err(ResolveError::ZeroWidth);
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(ResolveError::BadProbability { p: self.p });
        }
        Ok(())
    }
}

/// Safety limits for closure computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureLimits {
    /// Hard cap on the total number of clauses in the closure.
    pub max_clauses: usize,
}

impl Default for ClosureLimits {
    fn default() -> Self {
        ClosureLimits {
            max_clauses: 10_000_000,
        }
    }
}

/// The derivable clauses outside the base formula, in a canonical order
/// independent of derivation schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolventPool {
    base: Formula,
    width: u32,
    clauses: Vec<Clause>,
}

impl ResolventPool {
    pub fn base(&self) -> &Formula {
        &self.base
    }

    pub fn width(&self) -> u32 {
        self.width
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
}

/// All non-tautological resolvents of a clause pair, one candidate per
/// variable occurring with opposite polarity in the two clauses.
///
/// With zero clashing variables there is nothing to resolve; with two or
/// more, every candidate retains another complementary pair and is
/// tautological. Exactly one clash can produce the empty clause (two
/// complementary units), which is reported as an error: inputs are promised
/// satisfiable and an empty resolvent refutes that promise.
pub fn resolve_pair(a: &Clause, b: &Clause) -> Result<Vec<Clause>, ResolveError> {
    let mut clash: Option<Var> = None;
    for lit in a.lits() {
        if b.contains(lit.negated()) {
            if clash.is_some() {
                return Ok(Vec::new());
            }
            clash = Some(lit.var());
        }
    }
    let Some(clash) = clash else {
        return Ok(Vec::new());
    };
    let merged: Vec<Lit> = a
        .lits()
        .iter()
        .chain(b.lits())
        .copied()
        .filter(|l| l.var() != clash)
        .collect();
    if merged.is_empty() {
        return Err(ResolveError::EmptyResolvent);
    }
    let resolvent = Clause::new(merged)
        .expect("a single-clash resolvent has no complementary pair left");
    Ok(vec![resolvent])
}

/// Closure of `f` under resolution restricted to resolvents of at most
/// `width` literals, returned as the pool of derived clauses outside `f`.
///
/// Iteration is semi-naive: each round only resolves clauses discovered in
/// the previous round against everything found so far. The result is a set,
/// so it does not depend on the derivation schedule; the pool is sorted into
/// canonical clause order before returning.
pub fn res_w_closure(
    f: &Formula,
    width: u32,
    limits: &ClosureLimits,
) -> Result<ResolventPool, ResolveError> {
    if width == 0 {
        return Err(ResolveError::ZeroWidth);
    }
    let mut pool = if f.num_vars() <= 64 && width <= MAX_INDEXED_WIDTH {
        closure_masked(f, width, limits)?
    } else {
        closure_generic(f, width, limits)?
    };
    pool.sort_unstable();
    Ok(ResolventPool {
        base: f.clone(),
        width,
        clauses: pool,
    })
}

/// Widest closure the tuple-indexed engine handles; partner keys pack up to
/// seven literal codes plus a width tag into one word.
const MAX_INDEXED_WIDTH: u32 = 7;

#[derive(Copy, Clone, PartialEq, Eq, Hash)]
struct MaskClause {
    pos: u64,
    neg: u64,
}

impl MaskClause {
    fn width(self) -> u32 {
        (self.pos | self.neg).count_ones()
    }

    /// Literal codes in ascending order.
    fn codes(self, num_vars: usize, out: &mut Vec<u8>) {
        out.clear();
        for v in 0..num_vars {
            let bit = 1u64 << v;
            if self.pos & bit != 0 {
                out.push(Lit::positive(Var::new(v)).code() as u8);
            }
            if self.neg & bit != 0 {
                out.push(Lit::negative(Var::new(v)).code() as u8);
            }
        }
    }
}

/// Partner-lookup key: the partner's width in the top byte, then up to
/// seven literal codes the partner must contain, ascending, biased by one
/// so an absent slot reads as zero.
fn tuple_key(partner_width: u32, codes: &[u8]) -> u64 {
    debug_assert!(codes.len() < 8);
    let mut key = (partner_width as u64) << 56;
    let mut shift = 0;
    let mut previous = 0u8;
    for &code in codes {
        debug_assert!(code < 128 && (shift == 0 || code > previous));
        previous = code;
        key |= (code as u64 + 1) << shift;
        shift += 8;
    }
    key
}

/// Calls `visit` for every `size`-subset of `codes`, ascending order
/// preserved, using `scratch` as the assembly buffer.
fn for_each_subset(
    codes: &[u8],
    size: usize,
    scratch: &mut Vec<u8>,
    visit: &mut impl FnMut(&[u8]),
) {
    if size > codes.len() {
        return;
    }
    if size == 0 {
        visit(scratch);
        return;
    }
    // Leave room for the remaining picks.
    for first in 0..=codes.len() - size {
        scratch.push(codes[first]);
        for_each_subset(&codes[first + 1..], size - 1, scratch, visit);
        scratch.pop();
    }
}

/// Bitmask engine for up to 64 variables: a clause is a `(pos, neg)` pair
/// of variable masks, so resolution, width and tautology checks are single
/// word operations.
///
/// Partner lookup is stratified by width. A resolvent of clauses with
/// widths `wc` and `wd` has `wc + wd - 2 - s` literals, where `s` counts
/// shared same-polarity literals besides the clash, so it fits the bound
/// only when the pair shares at least `r = wc + wd - 2 - width` extra
/// literals. Each clause of width `wd <= width` is indexed under every
/// (width, literal subset) key a legal probe might carry, so the scan per
/// clause is proportional to the number of nearly-resolvable pairs instead
/// of the number of clauses sharing one literal. Near saturation — dense
/// formulas with few models imply almost every narrow clause — this is the
/// difference between seconds and hours.
///
/// Base clauses wider than `width` never match a tuple key and get plain
/// per-literal occurrence lists instead; only widths up to `width + 1` can
/// parent an in-width resolvent, and those pairs stay rare.
fn closure_masked(
    f: &Formula,
    width: u32,
    limits: &ClosureLimits,
) -> Result<Vec<Clause>, ResolveError> {
    let from_mask = |m: MaskClause| {
        let mut lits = Vec::with_capacity(m.width() as usize);
        for v in 0..f.num_vars() {
            let bit = 1u64 << v;
            if m.pos & bit != 0 {
                lits.push(Lit::positive(Var::new(v)));
            }
            if m.neg & bit != 0 {
                lits.push(Lit::negative(Var::new(v)));
            }
        }
        Clause::new(lits).expect("mask clause is non-empty and non-tautological")
    };

    // A probing clause of width `width + 1` needs `r + 1 = wd` codes, i.e.
    // the partner's whole literal set; those keys are only worth storing
    // when such a clause exists.
    let widest_base = f.clauses().iter().map(|c| c.len() as u32).max().unwrap_or(0);
    let full_keys = widest_base > width;

    let mut all: Vec<MaskClause> = Vec::with_capacity(f.len());
    let mut seen: HashSet<MaskClause> = HashSet::with_capacity(f.len() * 2);
    let mut occ: HashMap<u64, Vec<u32>> = HashMap::new();
    let mut wide_occ: Vec<Vec<u32>> = vec![Vec::new(); 2 * f.num_vars()];
    let mut codes_buf: Vec<u8> = Vec::new();
    let mut scratch: Vec<u8> = Vec::new();

    let register = |m: MaskClause,
                    all: &mut Vec<MaskClause>,
                    occ: &mut HashMap<u64, Vec<u32>>,
                    wide_occ: &mut Vec<Vec<u32>>,
                    codes_buf: &mut Vec<u8>,
                    scratch: &mut Vec<u8>| {
        let idx = all.len() as u32;
        let wd = m.width();
        m.codes(f.num_vars(), codes_buf);
        scratch.clear();
        if wd > width {
            for &code in codes_buf.iter() {
                wide_occ[code as usize].push(idx);
            }
        } else {
            let top = if full_keys { wd } else { (wd - 1).max(1) } as usize;
            for size in 1..=top {
                for_each_subset(codes_buf, size, scratch, &mut |subset| {
                    occ.entry(tuple_key(wd, subset)).or_default().push(idx);
                });
            }
        }
        all.push(m);
    };

    for c in f.clauses() {
        let mut m = MaskClause { pos: 0, neg: 0 };
        for lit in c.lits() {
            let bit = 1u64 << lit.var().index();
            if lit.is_negative() {
                m.neg |= bit;
            } else {
                m.pos |= bit;
            }
        }
        if seen.insert(m) {
            register(m, &mut all, &mut occ, &mut wide_occ, &mut codes_buf, &mut scratch);
        }
    }
    let base_count = all.len();

    let mut frontier: Vec<u32> = (0..base_count as u32).collect();
    let mut c_codes: Vec<u8> = Vec::new();
    let mut others: Vec<u8> = Vec::new();
    let mut partners: Vec<u32> = Vec::new();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &ci in &frontier {
            let c = all[ci as usize];
            let wc = c.width();
            c.codes(f.num_vars(), &mut c_codes);
            // Probes read the index as it stands; pairs with later
            // discoveries are found when the later clause is frontier.
            partners.clear();
            for (slot, &code) in c_codes.iter().enumerate() {
                let clash = code ^ 1; // complement literal
                others.clear();
                others.extend(
                    c_codes
                        .iter()
                        .enumerate()
                        .filter_map(|(i, &lc)| (i != slot).then_some(lc)),
                );
                for wd in 1..=width {
                    let r = (wc + wd).saturating_sub(2 + width) as usize;
                    if r > others.len() || r + 1 > wd as usize {
                        continue;
                    }
                    scratch.clear();
                    scratch.push(clash);
                    for_each_subset(&others, r, &mut scratch, &mut |key_codes| {
                        let mut sorted = [0u8; 8];
                        let len = key_codes.len();
                        sorted[..len].copy_from_slice(key_codes);
                        sorted[..len].sort_unstable();
                        if let Some(list) = occ.get(&tuple_key(wd, &sorted[..len])) {
                            partners.extend_from_slice(list);
                        }
                    });
                }
                partners.extend_from_slice(&wide_occ[clash as usize]);
            }
            for idx in 0..partners.len() {
                let d = all[partners[idx] as usize];
                let clash = (c.pos & d.neg) | (c.neg & d.pos);
                if clash.count_ones() != 1 {
                    continue;
                }
                let pos = (c.pos | d.pos) & !clash;
                let neg = (c.neg | d.neg) & !clash;
                if pos & neg != 0 {
                    continue; // tautological on some other variable
                }
                if pos | neg == 0 {
                    return Err(ResolveError::EmptyResolvent);
                }
                if (pos | neg).count_ones() > width {
                    continue;
                }
                let m = MaskClause { pos, neg };
                if seen.insert(m) {
                    if all.len() == limits.max_clauses {
                        return Err(ResolveError::ClosureLimitExceeded {
                            limit: limits.max_clauses,
                        });
                    }
                    next.push(all.len() as u32);
                    register(m, &mut all, &mut occ, &mut wide_occ, &mut codes_buf, &mut scratch);
                }
            }
        }
        frontier = next;
    }

    Ok(all[base_count..].iter().map(|&m| from_mask(m)).collect())
}

/// Fallback engine for formulas with more than 64 variables.
fn closure_generic(
    f: &Formula,
    width: u32,
    limits: &ClosureLimits,
) -> Result<Vec<Clause>, ResolveError> {
    let mut all: Vec<Clause> = Vec::new();
    let mut seen: HashSet<Clause> = HashSet::new();
    let mut occ: HashMap<Lit, Vec<u32>> = HashMap::new();

    let register = |c: Clause, all: &mut Vec<Clause>, occ: &mut HashMap<Lit, Vec<u32>>| {
        let idx = all.len() as u32;
        for &lit in c.lits() {
            occ.entry(lit).or_default().push(idx);
        }
        all.push(c);
    };

    for c in f.clauses() {
        if seen.insert(c.clone()) {
            register(c.clone(), &mut all, &mut occ);
        }
    }
    let base_count = all.len();

    let mut frontier: Vec<u32> = (0..base_count as u32).collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &ci in &frontier {
            let partners: Vec<u32> = {
                let c = &all[ci as usize];
                c.lits()
                    .iter()
                    .filter_map(|l| occ.get(&l.negated()))
                    .flat_map(|v| v.iter().copied())
                    .collect()
            };
            for pi in partners {
                let resolvents = resolve_pair(&all[ci as usize], &all[pi as usize])?;
                for r in resolvents {
                    if r.len() as u32 > width {
                        continue;
                    }
                    if seen.insert(r.clone()) {
                        if all.len() == limits.max_clauses {
                            return Err(ResolveError::ClosureLimitExceeded {
                                limit: limits.max_clauses,
                            });
                        }
                        next.push(all.len() as u32);
                        register(r, &mut all, &mut occ);
                    }
                }
            }
        }
        frontier = next;
    }

    Ok(all.split_off(base_count))
}

/// Draws a random subset of the pool: each clause is included independently
/// with probability `params.p`, walking the pool in canonical order. With
/// `params.shuffle` the selection is then Fisher-Yates shuffled, otherwise
/// it stays in pool order.
pub fn sample_resolvent_set(
    pool: &ResolventPool,
    params: &ModificationParams,
    rng: &mut impl Rng,
) -> Result<Vec<Clause>, ResolveError> {
    params.validate()?;
    let mut selected: Vec<Clause> = pool
        .clauses
        .iter()
        .filter(|_| rng.gen_bool(params.p))
        .cloned()
        .collect();
    if params.shuffle {
        selected.shuffle(rng);
    }
    Ok(selected)
}

/// Full modification pipeline: close `f` under bounded-width resolution,
/// sample an implied clause set, and return `f` extended by it. The result
/// always has the same solution set as `f`.
pub fn modify(
    f: &Formula,
    params: &ModificationParams,
    limits: &ClosureLimits,
    rng: &mut impl Rng,
) -> Result<Formula, ResolveError> {
    params.validate()?;
    let pool = res_w_closure(f, params.width, limits)?;
    let extra = sample_resolvent_set(&pool, params, rng)?;
    Ok(f.with_added_clauses(extra)?)
}
