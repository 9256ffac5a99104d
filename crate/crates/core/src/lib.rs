//! Election primitives and an experiment harness for group axioms of voting.
//!
//! The crate is organized around anonymized elections:
//!
//! - [`ranking`], [`profile`], [`wmg`]: linear orders, profiles/histograms and
//!   weighted majority graphs with Condorcet winner detection.
//! - [`rules`]: a registry of resolute, anonymous voting rules.
//! - [`axioms`]: per-profile satisfaction checkers for the Condorcet
//!   criterion, participation, half-way monotonicity, Maskin monotonicity and
//!   strategy-proofness, in their coalition (size `B`) versions, producing
//!   machine-checkable violation witnesses.
//! - [`models`]: strictly positive distributions over rankings (impartial
//!   culture, Mallows, Plackett-Luce) with seeded samplers.
//! - [`templates`]: scaled violation templates — tree-shaped flip/change
//!   scripts that extract a verified axiom violation against any rule.
//! - [`lab`]: Monte-Carlo violation-rate estimation, a small-`n` exact
//!   impartial-culture oracle and log-log power-law fitting.
//! - [`oracle`]: brute-force reference checkers that enumerate voters of an
//!   explicit profile directly. Exponential; used for cross-verification.

pub mod axioms;
pub mod lab;
pub mod models;
pub mod oracle;
pub mod profile;
pub mod ranking;
pub mod rules;
pub mod templates;
pub mod witness;
pub mod wmg;

pub use profile::{Histogram, Profile};
pub use ranking::{Ranking, RankingTable};
pub use rules::RuleId;
pub use wmg::Wmg;
