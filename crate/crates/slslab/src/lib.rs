//! A laboratory for the hardness of random k-SAT under stochastic local
//! search.
//!
//! The crate generates random instances, hardens them by adjoining
//! bounded-width resolvents, measures per-instance hardness as the mean
//! number of variable flips a local-search solver needs, fits heavy-tailed
//! models to the resulting hardness samples, and analyzes when restart
//! strategies help.
//!
//! Module tour:
//!
//! - [`formula`]: CNF representation with canonical clause order and
//!   DIMACS I/O.
//! - [`gen`]: uniform and hidden-solution random instance generators plus
//!   a desk-scale DPLL filter.
//! - [`resolve`]: bounded-width resolution closure and seeded sampling of
//!   resolvent sets.
//! - [`sls`]: flip-counting local search solvers and an exact
//!   expected-flips oracle for tiny formulas.
//! - [`seedstream`]: derivation of independent named random streams from
//!   one base seed.
//! - [`numeric`]: adaptive quadrature and one-dimensional minimization.
//! - [`stats`]: shifted-lognormal fitting, chi-square and bootstrap
//!   goodness-of-fit, and plot tables.
//! - [`restart`]: the restart-usefulness calculus over fitted or
//!   empirical runtime distributions.

pub mod formula;
pub mod gen;
pub mod harness;
pub mod numeric;
pub mod resolve;
pub mod restart;
pub mod seedstream;
pub mod sls;
pub mod stats;
