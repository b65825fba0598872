//! Reconstruction of a hidden binary string through substring queries.
//!
//! The oracle answers yes/no to "is S a contiguous substring of the hidden
//! string χ" and the goal is to recover χ in as few queries as possible
//! (the information-theoretic floor is n). Three reconstruction strategies
//! are provided: the generalized `basic` routine, an average-case method
//! seeded by the longest zero run, and a randomized two-seed method whose
//! query count is n + o(n) with high probability.

pub mod automaton;
pub mod average;
pub mod basic;
pub mod bitstr;
pub mod corpus;
pub mod harness;
pub mod oracle;
pub mod randomized;
pub mod verify;

pub use bitstr::BitString;
pub use oracle::{Oracle, Phase, QueryRecord};
