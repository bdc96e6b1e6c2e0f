//! Quantum combs: Choi operators of circuit boards with open slots.
//!
//! The crate is `no_std` (with `alloc`). It provides labeled dense operator
//! algebra ([`tensor`]), the Choi–Jamiołkowski correspondence ([`choi`]), the
//! link product that composes connected circuits ([`link`]), causality
//! verification and generation of combs ([`comb`]), Haar-averaged performance
//! operators for cloning and learning of unitaries ([`objective`]) and a
//! first-order solver that maximizes linear figures of merit over the comb set
//! ([`optimizer`]).
#![no_std]

extern crate alloc;

pub mod choi;
pub mod comb;
pub mod design;
pub mod error;
pub mod link;
pub mod objective;
pub mod optimizer;
pub mod random;
pub mod tensor;

pub use choi::{ChoiOperator, KrausMap};
pub use comb::{CausalityReport, CombStructure, ProbabilisticComb, QuantumComb};
pub use error::{Error, Result};
pub use link::{link_product, Network};
pub use tensor::{wire, LabeledOperator, LabeledVector, Wire, C64};
