//! Field-calculus interpreter, asynchronous network simulator and a corpus
//! of runtime-verification monitors checked against independent oracles.

pub mod builtins;
pub mod cli;
pub mod eval;
pub mod lang;
pub mod monitors;
pub mod netsim;
pub mod value;
