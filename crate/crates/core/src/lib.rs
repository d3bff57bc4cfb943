//! Core algorithms for distributed quantum computing with three-qubit nodes.
//!
//! This crate models a network of small nodes (broker, intermediate and client
//! qubit per node) that builds a topologically protected cluster state out of
//! purified parity projections:
//!
//! - [`pauli`] — Pauli-operator and Pauli-channel algebra with Clifford
//!   conjugation, the noise language used everywhere else.
//! - [`dense`] — small dense state-vector / density-matrix oracle, used by the
//!   test suites to verify the channel algebra and circuits by brute force.
//! - [`purify`] — Bell-diagonal bookkeeping, bit-error entanglement pumping and
//!   the truncated majority-vote parity-projection walk.
//! - [`graph`] — stabilizer tableau, the parity-projection primitive, the graph
//!   rewrite rule and cluster-state construction schedules.
//! - [`budget`] — translates protocol noise into an effective phase-error /
//!   loss budget on the cluster state.
//! - [`threshold`] — loss-adjusted threshold test, protocol-parameter
//!   optimization and threshold curves.
//! - [`mc`] — Pauli-frame Monte Carlo sampler validating the analytic path.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the command
//! line live in the companion `dqc3` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;


pub mod budget;
pub mod circuit;
pub mod graph;
pub mod dense;


pub mod mc;
pub mod pauli;
pub mod purify;
pub mod threshold;


pub use pauli::{BellIndex, CliffordGate, PauliChannel, PauliOperator};
