//! miniXCOM: a small turn-based tactics game with search and learning agents.

pub mod agents;
pub mod cli;
pub mod game;
pub mod log;
pub mod search;
pub mod stats;
pub mod td;
pub mod tournament;
