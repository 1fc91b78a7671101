//! Runtime-verification programs as a checked corpus.

mod check;
mod corpus;
mod oracles;

pub use check::{
    adjusting_status_consistent, adjusting_width_bounded, check_entry, check_stabilized, CheckError, CheckReport,
    CheckRow, Divergence, Horizon, OracleKind,
};
pub use corpus::{corpus, entry, entry_names, mutate, CorpusEntry, CorpusError, Metadata, Mutation};
pub use oracles::{
    collision_course, component, oracle_bfs, oracle_ellipse, oracle_longest_chain, oracle_same_value_component,
    replay_roundsince, samevalue_direct_model, within_sixty,
};
