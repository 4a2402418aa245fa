//! Logic.py: a small constraint-modelling language, its finite-domain solver,
//! a CBMC harness emitter, the formalization pipeline and a logic-grid
//! puzzle benchmark.

pub mod frontend;
pub mod model;
pub mod solver;
pub mod cemit;
pub mod agent;
pub mod bench;
