//! Exact evaluation, certification and stress testing of higher-order FKG
//! inequalities (conjugate cumulants) on finite distributive lattices.

pub mod applications;
pub mod cumulants;
pub mod lattice;
pub mod partitions;
pub mod rational;
pub mod symcert;
pub mod verifier;

pub use rational::Rational;
