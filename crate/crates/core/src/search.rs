//! Two-player Monte Carlo tree search with UCT selection.
//!
//! Child selection scores each child `v'` of `v` as
//!
//! ```text
//! Q(v')/N(v') + c * sqrt(2 ln N(v) / N(v')) + d * U(s(v'))
//! ```
//!
//! where `U` comes from a pluggable [`ValueGuide`]. With `d = 0` the guide is
//! never consulted and the search is plain UCT.
//!
//! Rewards are kept from the point of view of the side that chose the
//! node's incoming action, so every decision node maximizes for whoever is
//! moving there. `literal_backprop` instead adds the root player's reward to
//! every node on the path.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::{Action, GameState, Outcome, Side};

/// Seedable RNG used throughout search, agents and the tournament.
pub type GameRng = ChaCha8Rng;

/// Heuristic utility of a position, consulted during child selection.
///
/// Implementations must be deterministic and free of side effects for
/// the duration of a search.
pub trait ValueGuide {
    /// Utility of `state` from the point of view of `perspective`.
    fn value(&self, state: &GameState, perspective: Side) -> f64;
}

/// Guide that rates every position 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroGuide;

impl ValueGuide for ZeroGuide {
    fn value(&self, _state: &GameState, _perspective: Side) -> f64 {
        0.0
    }
}

impl<G: ValueGuide + ?Sized> ValueGuide for &G {
    fn value(&self, state: &GameState, perspective: Side) -> f64 {
        (**self).value(state, perspective)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("cannot search from a finished game ({0})")]
    TerminalRoot(Outcome),
    #[error("node has no children")]
    ChildlessNode,
    #[error("invalid search config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Exploration constant `C`.
    pub exploration_c: f64,
    /// Weight `d` on the guide's utility term.
    pub td_factor: f64,
    pub iteration_limit: u32,
    pub time_limit: Option<Duration>,
    /// Maximum rollout plies; `None` plays until the draw limit ends the game.
    pub rollout_ply_cap: Option<u32>,
    pub rng_seed: u64,
    /// Add the root player's reward to every node instead of sign-flipping
    /// at opponent decisions.
    pub literal_backprop: bool,
    /// Keep the `d`-weighted guide term when picking the move to play.
    pub final_guide: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            exploration_c: std::f64::consts::FRAC_1_SQRT_2,
            td_factor: 0.0,
            iteration_limit: 1000,
            time_limit: None,
            rollout_ply_cap: None,
            rng_seed: 0,
            literal_backprop: false,
            final_guide: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.exploration_c >= 0.0 && self.exploration_c.is_finite()) {
            return Err(SearchError::InvalidConfig("exploration constant must be finite and >= 0"));
        }
        if !(self.td_factor >= 0.0 && self.td_factor.is_finite()) {
            return Err(SearchError::InvalidConfig("td factor must be finite and >= 0"));
        }
        if self.iteration_limit < 1 {
            return Err(SearchError::InvalidConfig("iteration limit must be >= 1"));
        }
        Ok(())
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub state: GameState,
    pub incoming_action: Option<Action>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub visits: u32,
    /// Accumulated reward, seen by the side that chose `incoming_action`
    /// (by the root player for the root itself).
    pub total_reward: f64,
    pub untried_actions: Vec<Action>,
    outcome: Outcome,
}

impl SearchNode {
    fn new(state: GameState, incoming_action: Option<Action>, parent: Option<NodeId>) -> Self {
        let outcome = state.outcome();
        let mut untried_actions = Vec::new();
        if !outcome.is_terminal() {
            state.legal_actions_into(&mut untried_actions);
        }
        SearchNode {
            state,
            incoming_action,
            parent,
            children: Vec::new(),
            visits: 0,
            total_reward: 0.0,
            untried_actions,
            outcome,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome.is_terminal()
    }

    pub fn is_fully_expanded(&self) -> bool {
        self.untried_actions.is_empty()
    }

    pub fn mean_reward(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.total_reward / self.visits as f64
        }
    }
}

/// UCT score of a child with guide term: `q/n + c*sqrt(2 ln parent_n / n) + d*u`.
#[inline]
pub fn uct_score(q: f64, n: u32, parent_n: u32, c: f64, d: f64, u: f64) -> f64 {
    let n = n as f64;
    let mut score = q / n;
    if c != 0.0 {
        score += c * (2.0 * (parent_n as f64).ln() / n).sqrt();
    }
    if d != 0.0 {
        score += d * u;
    }
    score
}

/// Arena-allocated search tree; node 0 is the root.
#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
    root_side: Side,
    literal_backprop: bool,
}

impl SearchTree {
    pub fn new(root_state: GameState, literal_backprop: bool) -> Self {
        let root_side = root_state.side_to_move();
        SearchTree {
            nodes: vec![SearchNode::new(root_state, None, None)],
            root_side,
            literal_backprop,
        }
    }

    pub const ROOT: NodeId = 0;

    pub fn root(&self) -> &SearchNode {
        &self.nodes[Self::ROOT]
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_side(&self) -> Side {
        self.root_side
    }

    /// Side whose reward a node accumulates.
    fn perspective(&self, id: NodeId) -> Side {
        match self.nodes[id].parent {
            Some(parent) if !self.literal_backprop => self.nodes[parent].state.side_to_move(),
            _ => self.root_side,
        }
    }

    /// Child of `node` maximizing the UCT score plus `d` times the guide's
    /// utility of the child state. Ties go to the earliest child.
    pub fn best_child<G: ValueGuide + ?Sized>(
        &self,
        node: NodeId,
        c: f64,
        d: f64,
        guide: &G,
    ) -> Result<NodeId, SearchError> {
        let parent = &self.nodes[node];
        let mut best: Option<(NodeId, f64)> = None;
        for &child_id in &parent.children {
            let child = &self.nodes[child_id];
            let u = if d != 0.0 {
                guide.value(&child.state, self.perspective(child_id))
            } else {
                0.0
            };
            let score = uct_score(child.total_reward, child.visits, parent.visits, c, d, u);
            match best {
                Some((_, s)) if score <= s => {}
                _ => best = Some((child_id, score)),
            }
        }
        best.map(|(id, _)| id).ok_or(SearchError::ChildlessNode)
    }

    /// Descends with `best_child` through fully expanded nodes and expands
    /// one untried action at the first node that has any. Returns the new
    /// child, or the terminal node the descent ended on.
    pub fn select_node<G: ValueGuide + ?Sized>(
        &mut self,
        config: &SearchConfig,
        guide: &G,
        rng: &mut GameRng,
    ) -> NodeId {
        let mut v = Self::ROOT;
        while !self.nodes[v].is_terminal() {
            if !self.nodes[v].is_fully_expanded() {
                return self.expand(v, rng);
            }
            v = self
                .best_child(v, config.exploration_c, config.td_factor, guide)
                .expect("non-terminal, fully expanded node has children");
        }
        v
    }

    fn expand(&mut self, v: NodeId, rng: &mut GameRng) -> NodeId {
        let untried = &mut self.nodes[v].untried_actions;
        let pick = rng.gen_range(0..untried.len());
        let action = untried.swap_remove(pick);
        let mut state = self.nodes[v].state.clone();
        state.apply_in_place(&action);
        let id = self.nodes.len();
        self.nodes.push(SearchNode::new(state, Some(action), Some(v)));
        self.nodes[v].children.push(id);
        id
    }

    /// Adds `reward` (root player's view) along the path from `leaf` to the
    /// root, negated at nodes chosen by the opponent.
    pub fn backpropagate(&mut self, leaf: NodeId, reward: f64) {
        let mut cursor = Some(leaf);
        while let Some(id) = cursor {
            let signed = if self.perspective(id) == self.root_side {
                reward
            } else {
                -reward
            };
            let node = &mut self.nodes[id];
            node.visits += 1;
            node.total_reward += signed;
            cursor = node.parent;
        }
    }

    /// One select, rollout, backpropagate cycle.
    pub fn iterate<G: ValueGuide + ?Sized>(&mut self, config: &SearchConfig, guide: &G, rng: &mut GameRng) {
        let leaf = self.select_node(config, guide, rng);
        let reward = rollout(&self.nodes[leaf].state, config.rollout_ply_cap, self.root_side, rng);
        self.backpropagate(leaf, reward);
    }
}

/// Reward of a finished game for `perspective`: +1 win, -1 loss, 0 draw.
pub fn terminal_reward(outcome: Outcome, perspective: Side) -> f64 {
    match outcome {
        Outcome::Win(side) if side == perspective => 1.0,
        Outcome::Win(_) => -1.0,
        Outcome::Draw | Outcome::Ongoing => 0.0,
    }
}

/// Uniformly random playout. Returns +1/-1/0 for `perspective`; hitting
/// `ply_cap` counts as a draw.
pub fn rollout(state: &GameState, ply_cap: Option<u32>, perspective: Side, rng: &mut GameRng) -> f64 {
    let outcome = state.outcome();
    if outcome.is_terminal() {
        return terminal_reward(outcome, perspective);
    }
    let mut state = state.clone();
    let mut actions = Vec::with_capacity(64);
    let mut plies = 0u32;
    loop {
        let outcome = state.outcome();
        if outcome.is_terminal() {
            return terminal_reward(outcome, perspective);
        }
        if ply_cap.is_some_and(|cap| plies >= cap) {
            return 0.0;
        }
        state.legal_actions_into(&mut actions);
        let action = actions[rng.gen_range(0..actions.len())];
        state.apply_in_place(&action);
        plies += 1;
    }
}

/// Builds a tree from `root_state` within the configured budget.
pub fn build_tree<G: ValueGuide + ?Sized>(
    root_state: &GameState,
    config: &SearchConfig,
    guide: &G,
) -> Result<SearchTree, SearchError> {
    config.validate()?;
    let outcome = root_state.outcome();
    if outcome.is_terminal() {
        return Err(SearchError::TerminalRoot(outcome));
    }
    let mut rng = GameRng::seed_from_u64(config.rng_seed);
    let mut tree = SearchTree::new(root_state.clone(), config.literal_backprop);
    let started = Instant::now();
    for _ in 0..config.iteration_limit {
        if config.time_limit.is_some_and(|limit| started.elapsed() >= limit) {
            break;
        }
        tree.iterate(config, guide, &mut rng);
    }
    Ok(tree)
}

/// Runs the search and returns the root child with the best mean reward.
/// Exploration is off for the final pick; the guide term only with
/// `final_guide`.
pub fn search<G: ValueGuide + ?Sized>(
    root_state: &GameState,
    config: &SearchConfig,
    guide: &G,
) -> Result<Action, SearchError> {
    let tree = build_tree(root_state, config, guide)?;
    let best = if config.final_guide {
        tree.best_child(SearchTree::ROOT, 0.0, config.td_factor, guide)?
    } else {
        tree.best_child(SearchTree::ROOT, 0.0, 0.0, &ZeroGuide)?
    };
    Ok(tree.node(best).incoming_action.expect("children carry their action"))
}
