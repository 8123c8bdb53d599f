//! Playing agents behind one interface.

mod mcts;
mod rb1;
mod sarsa_uct;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::game::{Action, GameState, GridMap, Side};
use crate::search::{GameRng, SearchError};
use crate::td::{TdError, UtilityTable};

pub use mcts::{mcts_td_choose, MctsAgent};
pub use rb1::{rb1_choose, Rb1Agent, Rb1State};
pub use sarsa_uct::{sarsa_uct_choose, SarsaTree, SarsaUctAgent, SarsaUctConfig};

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Td(#[from] TdError),
}

/// A seat at the table.
///
/// `observe` is called after every action of the round, the agent's own
/// and the opponent's, in play order.
pub trait Agent: Send {
    fn name(&self) -> &'static str;

    fn side(&self) -> Side;

    fn choose_action(&mut self, state: &GameState, rng: &mut GameRng) -> Result<Action, AgentError>;

    fn observe(&mut self, _prev: &GameState, _action: &Action, _next: &GameState) {}

    fn reset_round(&mut self) {}

    fn reset_run(&mut self) {}

    /// The agent's learned utilities, when it has any.
    fn utility_table(&self) -> Option<&UtilityTable> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Rb1,
    Mcts,
    MctsTd,
    SarsaUct,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::Rb1, AgentKind::Mcts, AgentKind::MctsTd, AgentKind::SarsaUct];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Rb1 => "rb1",
            AgentKind::Mcts => "mcts",
            AgentKind::MctsTd => "mcts-td",
            AgentKind::SarsaUct => "sarsa-uct",
        }
    }

    /// Human-readable label; the SARSA-UCT baseline is flagged approximate.
    pub fn label(self) -> &'static str {
        match self {
            AgentKind::Rb1 => "RB1",
            AgentKind::Mcts => "MCTS",
            AgentKind::MctsTd => "MCTS-TD",
            AgentKind::SarsaUct => "SARSA-UCT (approximate)",
        }
    }

    pub fn learns(self) -> bool {
        self == AgentKind::MctsTd
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown agent `{s}` (expected rb1, mcts, mcts-td or sarsa-uct)"))
    }
}

/// Parameters shared by every agent in an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSettings {
    pub iterations: u32,
    pub time_limit: Option<Duration>,
    pub exploration_c: f64,
    pub td_factor: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub literal_backprop: bool,
    pub literal_update: bool,
    pub final_guide: bool,
}

impl Default for AgentSettings {
    fn default() -> Self {
        AgentSettings {
            iterations: 1000,
            time_limit: None,
            exploration_c: std::f64::consts::FRAC_1_SQRT_2,
            td_factor: 1.0,
            alpha: 0.8,
            gamma: 0.9,
            lambda: 0.9,
            literal_backprop: false,
            literal_update: false,
            final_guide: false,
        }
    }
}

/// Builds a fresh agent of `kind` playing `side` on `map`.
pub fn build_agent(
    kind: AgentKind,
    settings: &AgentSettings,
    side: Side,
    map: &Arc<GridMap>,
) -> Result<Box<dyn Agent>, AgentError> {
    Ok(match kind {
        AgentKind::Rb1 => Box::new(Rb1Agent::new(side, map)),
        AgentKind::Mcts => Box::new(MctsAgent::plain(settings, side)),
        AgentKind::MctsTd => Box::new(MctsAgent::with_td(settings, side)?),
        AgentKind::SarsaUct => Box::new(SarsaUctAgent::new(settings, side)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for kind in AgentKind::ALL {
            assert_eq!(kind.name().parse::<AgentKind>().unwrap(), kind);
        }
        assert!("minimax".parse::<AgentKind>().is_err());
        assert!(AgentKind::SarsaUct.label().contains("approximate"));
    }
}
