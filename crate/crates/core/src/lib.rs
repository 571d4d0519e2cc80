//! Symbolic reachability for interrupt timed automata (ITA) and their
//! parametric extension (PITA).
//!
//! The pipeline is: [`frontend`] parses a model into a [`model::Automaton`],
//! [`exprsets`] saturates the per-level expression sets, [`regions`]
//! enumerates parameter regions, [`classgraph`] builds the finite class
//! automaton of a region and [`analysis`] answers reachability queries.
//! [`semantics`] provides the concrete semantics used as a test oracle.

pub mod analysis;
pub mod arith;
pub mod classgraph;
pub mod exprsets;
pub mod fm;
pub mod frontend;
pub mod model;
pub mod regions;
pub mod semantics;
