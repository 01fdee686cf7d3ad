//! Contextuality analysis for systems of finite random variables recorded
//! under different conditions.
//!
//! The crate decides whether a system admits an identity coupling (the
//! non-contextuality criterion), evaluates CH/Fine inequalities in the 2x2
//! Bell paradigm, computes the maximal uniform agreement probability and
//! min-negativity signed quasi-couplings, and estimates systems from
//! recorded trial streams. All probability arithmetic is exact rational.

pub mod bell;
pub mod coupling;
pub mod ingest;
pub mod lp;
pub mod quasi;
pub mod rational;
pub mod sample;
pub mod system;

pub use rational::Q;
