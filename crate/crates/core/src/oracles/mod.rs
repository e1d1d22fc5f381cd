//! Brute-force references: a truncated Fock-space superoperator engine and a
//! finite harmonic reservoir propagated exactly.

pub mod fock;
pub mod micro;
pub mod suite;
pub mod violation;
pub mod verify;
