//! Approximate SARSA-UCT(lambda) baseline.
//!
//! UCT selection over per-node value estimates, with Monte Carlo
//! backpropagation replaced by a backward Sarsa(lambda) sweep along the
//! selected path. The playout is collapsed into a single transition that
//! carries the terminal reward, intermediate rewards are zero and each node
//! uses step size `1/N(v)`. This is a baseline in the spirit of the
//! temporal-difference tree search family, not a faithful reproduction.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};

use super::{Agent, AgentError, AgentSettings};
use crate::game::{Action, GameState, Outcome, Side};
use crate::search::{rollout, GameRng, NodeId, SearchError};

#[derive(Debug, Clone, PartialEq)]
pub struct SarsaUctConfig {
    pub exploration_c: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub iteration_limit: u32,
    pub time_limit: Option<std::time::Duration>,
    pub rng_seed: u64,
}

impl Default for SarsaUctConfig {
    fn default() -> Self {
        SarsaUctConfig {
            exploration_c: std::f64::consts::FRAC_1_SQRT_2,
            lambda: 0.9,
            gamma: 1.0,
            iteration_limit: 1000,
            time_limit: None,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct SarsaNode {
    state: GameState,
    action: Option<Action>,
    children: Vec<NodeId>,
    visits: u32,
    /// Value estimate from the root player's point of view.
    value: f64,
    untried: Vec<Action>,
    outcome: Outcome,
}

impl SarsaNode {
    fn new(state: GameState, action: Option<Action>) -> Self {
        let outcome = state.outcome();
        let mut untried = Vec::new();
        if !outcome.is_terminal() {
            state.legal_actions_into(&mut untried);
        }
        SarsaNode {
            state,
            action,
            children: Vec::new(),
            visits: 0,
            value: 0.0,
            untried,
            outcome,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SarsaTree {
    nodes: Vec<SarsaNode>,
    root_side: Side,
}

impl SarsaTree {
    pub fn new(root: GameState) -> Self {
        let root_side = root.side_to_move();
        SarsaTree {
            nodes: vec![SarsaNode::new(root, None)],
            root_side,
        }
    }

    pub fn visits(&self, id: NodeId) -> u32 {
        self.nodes[id].visits
    }

    pub fn value(&self, id: NodeId) -> f64 {
        self.nodes[id].value
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn action(&self, id: NodeId) -> Option<Action> {
        self.nodes[id].action
    }

    fn best_child(&self, id: NodeId, c: f64) -> Option<NodeId> {
        let node = &self.nodes[id];
        let sign = if node.state.side_to_move() == self.root_side { 1.0 } else { -1.0 };
        let ln_n = (node.visits.max(1) as f64).ln();
        let mut best: Option<(NodeId, f64)> = None;
        for &child in &node.children {
            let ch = &self.nodes[child];
            let mut score = sign * ch.value;
            if c != 0.0 {
                score += c * (2.0 * ln_n / ch.visits.max(1) as f64).sqrt();
            }
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((child, score));
            }
        }
        best.map(|(id, _)| id)
    }

    /// Selects and expands; returns the root-to-leaf path.
    fn select(&mut self, c: f64, rng: &mut GameRng) -> Vec<NodeId> {
        let mut path = vec![0];
        let mut v = 0;
        while !self.nodes[v].outcome.is_terminal() {
            if !self.nodes[v].untried.is_empty() {
                let untried = &mut self.nodes[v].untried;
                let action = untried.swap_remove(rng.gen_range(0..untried.len()));
                let mut state = self.nodes[v].state.clone();
                state.apply_in_place(&action);
                let id = self.nodes.len();
                self.nodes.push(SarsaNode::new(state, Some(action)));
                self.nodes[v].children.push(id);
                path.push(id);
                return path;
            }
            v = self.best_child(v, c).expect("expanded node has children");
            path.push(v);
        }
        path
    }

    /// Backward Sarsa(lambda) sweep. `reward` (root player's view) arrives
    /// on the transition after the last node of `path`.
    pub fn backup(&mut self, path: &[NodeId], reward: f64, lambda: f64, gamma: f64) {
        let mut delta_sum = 0.0;
        let mut next_value = 0.0;
        let mut r = reward;
        for &id in path.iter().rev() {
            let node = &mut self.nodes[id];
            let delta = r + gamma * next_value - node.value;
            delta_sum = lambda * gamma * delta_sum + delta;
            next_value = node.value;
            node.visits += 1;
            node.value += delta_sum / node.visits as f64;
            r = 0.0;
        }
    }

    /// Adds a child for `action` under `parent` without search. Test helper.
    pub fn push_child(&mut self, parent: NodeId, action: Action) -> NodeId {
        let mut state = self.nodes[parent].state.clone();
        state.apply_in_place(&action);
        self.nodes[parent].untried.retain(|a| *a != action);
        let id = self.nodes.len();
        self.nodes.push(SarsaNode::new(state, Some(action)));
        self.nodes[parent].children.push(id);
        id
    }
}

pub fn sarsa_uct_choose(state: &GameState, config: &SarsaUctConfig, rng: &mut GameRng) -> Result<Action, AgentError> {
    let outcome = state.outcome();
    if outcome.is_terminal() {
        return Err(SearchError::TerminalRoot(outcome).into());
    }
    let mut search_rng = GameRng::seed_from_u64(config.rng_seed ^ rng.next_u64());
    let mut tree = SarsaTree::new(state.clone());
    let started = Instant::now();
    for _ in 0..config.iteration_limit.max(1) {
        if config.time_limit.is_some_and(|t| started.elapsed() >= t) {
            break;
        }
        let path = tree.select(config.exploration_c, &mut search_rng);
        let leaf = *path.last().expect("path holds the root");
        let reward = rollout(&tree.nodes[leaf].state, None, tree.root_side, &mut search_rng);
        tree.backup(&path, reward, config.lambda, config.gamma);
    }
    let best = tree.best_child(0, 0.0).ok_or(SearchError::ChildlessNode)?;
    Ok(tree.nodes[best].action.expect("children carry their action"))
}

#[derive(Debug, Clone)]
pub struct SarsaUctAgent {
    side: Side,
    config: SarsaUctConfig,
}

impl SarsaUctAgent {
    pub fn new(settings: &AgentSettings, side: Side) -> Self {
        SarsaUctAgent {
            side,
            config: SarsaUctConfig {
                exploration_c: settings.exploration_c,
                lambda: settings.lambda,
                gamma: 1.0,
                iteration_limit: settings.iterations,
                time_limit: settings.time_limit,
                rng_seed: 0,
            },
        }
    }
}

impl Agent for SarsaUctAgent {
    fn name(&self) -> &'static str {
        "sarsa-uct"
    }

    fn side(&self) -> Side {
        self.side
    }

    fn choose_action(&mut self, state: &GameState, rng: &mut GameRng) -> Result<Action, AgentError> {
        sarsa_uct_choose(state, &self.config, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{default_map, legal_actions, Rules};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn start() -> GameState {
        GameState::new(Arc::new(default_map()), Rules::default(), Side::Human)
    }

    #[test]
    fn lambda_one_is_monte_carlo_averaging() {
        let state = start();
        let actions = legal_actions(&state).unwrap();
        let mut tree = SarsaTree::new(state);
        let child = tree.push_child(0, actions[0]);
        let reply = legal_actions(&tree.nodes[child].state).unwrap()[0];
        let grandchild = tree.push_child(child, reply);
        let path = [0, child, grandchild];
        let returns = [1.0, -1.0, 1.0, 1.0, 0.0, -1.0, 1.0];
        for r in returns {
            tree.backup(&path, r, 1.0, 1.0);
        }
        let mean = returns.iter().sum::<f64>() / returns.len() as f64;
        for id in path {
            assert_abs_diff_eq!(tree.value(id), mean, epsilon = 1e-12);
            assert_eq!(tree.visits(id), returns.len() as u32);
        }
    }

    #[test]
    fn lambda_below_one_bootstraps() {
        let state = start();
        let actions = legal_actions(&state).unwrap();
        let mut tree = SarsaTree::new(state);
        let child = tree.push_child(0, actions[0]);
        tree.backup(&[0, child], 1.0, 0.5, 1.0);
        // Leaf: delta 1, value 1. Root: delta = 0 + 0 - 0, sum = 0.5 * 1.
        assert_abs_diff_eq!(tree.value(child), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tree.value(0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_for_seed() {
        let state = start();
        let config = SarsaUctConfig {
            iteration_limit: 200,
            ..SarsaUctConfig::default()
        };
        let a = sarsa_uct_choose(&state, &config, &mut GameRng::seed_from_u64(5)).unwrap();
        let b = sarsa_uct_choose(&state, &config, &mut GameRng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!(legal_actions(&state).unwrap().contains(&a));
    }

    #[test]
    fn terminal_root_rejected() {
        let state = start().with_moves_made(20, 20).unwrap();
        assert!(sarsa_uct_choose(&state, &SarsaUctConfig::default(), &mut GameRng::seed_from_u64(0)).is_err());
    }
}
