//! A Lagrangian-driven cellular automaton.
//!
//! Equations of motion are derived symbolically from a Lagrangian, compiled
//! into finite-difference update schedules and executed on a grid of cells
//! that also carries non-local particle and field objects. Interactions
//! between objects follow a path-table model with split/combine channels and
//! seeded collapse.

pub mod dsl;
pub mod engine;
pub mod grid;
pub mod interaction;
pub mod scenario;
pub mod state;
pub mod stencil;
pub mod output;
