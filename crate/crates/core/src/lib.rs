//! A summation laboratory for divergent series.
//!
//! - [`series`]: lazy exact-term series, the catalog, partial sums and the
//!   classical limit classifier.
//! - [`canonical`]: prefix + periodic-polynomial sequences with decidable
//!   equality.
//! - [`transforms`]: dilution, pair swaps, pair association, shifts, linear
//!   combinations and the greedy Riemann rearrangement.
//! - [`methods`]: classical, Cesàro, Abel and zeta-registry summation.
//! - [`axioms`]: linearity/stability rewrite engine with contradiction search.
//! - [`regularity`]: regular / totally-regular audits.
//! - [`dsl`] and [`cli`]: expression language and command-line front end.

pub mod axioms;
pub mod canonical;
pub mod cli;
pub mod dsl;
pub mod methods;
pub mod regularity;
pub mod series;
pub mod transforms;
