//! Anonymous on-line cooperation of program analyses over MiniImp.
//!
//! Analyses (clients) run interleaved on one program and exchange facts
//! through a mediating server in shared terms only: a canonical program
//! models the instruction counter, a canonical segment-offset memory names
//! addresses, and quantifier-free formulas over typed dereferences carry
//! values. Three reference clients are provided — interval and octagon
//! abstract interpreters and a classic symbolic execution — plus a harness
//! that runs client configurations and compares the invariants they settle
//! on.

pub mod canon;
pub mod clients;
pub mod concrete;
pub mod dbm;
pub mod formula;
pub mod harness;
pub mod lang;
pub mod memory;
pub mod protocol;
pub mod solver;
