use rand::RngCore;

use super::{Agent, AgentError, AgentSettings};
use crate::game::{Action, GameState, Side};
use crate::search::{search, GameRng, SearchConfig, ZeroGuide};
use crate::td::{TdGuide, TdLearner, UtilityTable};

/// Plain UCT, or UCT steered by an online TD utility table.
#[derive(Debug, Clone)]
pub struct MctsAgent {
    side: Side,
    config: SearchConfig,
    learner: Option<TdLearner>,
}

impl MctsAgent {
    pub fn plain(settings: &AgentSettings, side: Side) -> Self {
        MctsAgent {
            side,
            config: SearchConfig {
                td_factor: 0.0,
                ..search_config(settings)
            },
            learner: None,
        }
    }

    pub fn with_td(settings: &AgentSettings, side: Side) -> Result<Self, AgentError> {
        let table = UtilityTable::new(settings.alpha, settings.gamma)?.with_literal_update(settings.literal_update);
        Ok(MctsAgent {
            side,
            config: search_config(settings),
            learner: Some(TdLearner::new(table, side)),
        })
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn learner(&self) -> Option<&TdLearner> {
        self.learner.as_ref()
    }

    pub fn learner_mut(&mut self) -> Option<&mut TdLearner> {
        self.learner.as_mut()
    }
}

fn search_config(settings: &AgentSettings) -> SearchConfig {
    SearchConfig {
        exploration_c: settings.exploration_c,
        td_factor: settings.td_factor,
        iteration_limit: settings.iterations,
        time_limit: settings.time_limit,
        rollout_ply_cap: None,
        rng_seed: 0,
        literal_backprop: settings.literal_backprop,
        final_guide: settings.final_guide,
    }
}

/// One TD-guided search. The table is read-only for the whole call.
pub fn mcts_td_choose(
    state: &GameState,
    config: &SearchConfig,
    table: &UtilityTable,
    rng: &mut GameRng,
) -> Result<Action, AgentError> {
    let config = SearchConfig {
        rng_seed: rng.next_u64(),
        ..config.clone()
    };
    let guide = TdGuide {
        table,
        learner: state.side_to_move(),
    };
    Ok(search(state, &config, &guide)?)
}

impl Agent for MctsAgent {
    fn name(&self) -> &'static str {
        if self.learner.is_some() {
            "mcts-td"
        } else {
            "mcts"
        }
    }

    fn side(&self) -> Side {
        self.side
    }

    fn choose_action(&mut self, state: &GameState, rng: &mut GameRng) -> Result<Action, AgentError> {
        match &self.learner {
            Some(learner) => mcts_td_choose(state, &self.config, learner.table(), rng),
            None => {
                let config = SearchConfig {
                    rng_seed: rng.next_u64(),
                    ..self.config.clone()
                };
                Ok(search(state, &config, &ZeroGuide)?)
            }
        }
    }

    fn observe(&mut self, prev: &GameState, action: &Action, next: &GameState) {
        if let Some(learner) = &mut self.learner {
            learner.observe(prev, action, next);
        }
    }

    fn reset_round(&mut self) {
        if let Some(learner) = &mut self.learner {
            learner.reset_round();
        }
    }

    fn reset_run(&mut self) {
        if let Some(learner) = &mut self.learner {
            learner.reset_run();
        }
    }

    fn utility_table(&self) -> Option<&UtilityTable> {
        self.learner.as_ref().map(TdLearner::table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{apply_action, default_map, Coord, GridMap, Rules, UnitId};
    use crate::td::abstract_state;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn start() -> GameState {
        GameState::new(Arc::new(default_map()), Rules::default(), Side::Human)
    }

    fn settings(iterations: u32) -> AgentSettings {
        AgentSettings {
            iterations,
            ..AgentSettings::default()
        }
    }

    #[test]
    fn empty_table_matches_plain_mcts() {
        let state = start();
        for seed in 0..5 {
            let mut plain = MctsAgent::plain(&settings(200), Side::Human);
            let mut td = MctsAgent::with_td(&settings(200), Side::Human).unwrap();
            let a = plain.choose_action(&state, &mut GameRng::seed_from_u64(seed)).unwrap();
            let b = td.choose_action(&state, &mut GameRng::seed_from_u64(seed)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn same_seed_same_table_same_action() {
        let state = start();
        let mut table = UtilityTable::new(0.8, 0.9).unwrap();
        table.set("....S....".parse().unwrap(), 3.0);
        let config = search_config(&settings(300));
        let a = mcts_td_choose(&state, &config, &table, &mut GameRng::seed_from_u64(11)).unwrap();
        let b = mcts_td_choose(&state, &config, &table, &mut GameRng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn observe_feeds_both_sides_actions() {
        let map = Arc::new(
            GridMap::new(6, 6, vec![false; 36], vec![], vec![Coord::new(0, 5), Coord::new(1, 5)], vec![Coord::new(5, 0), Coord::new(4, 0)])
                .unwrap(),
        );
        let s0 = GameState::new(map, Rules::default(), Side::Human);
        let mut agent = MctsAgent::with_td(&settings(10), Side::Human).unwrap();
        let own = Action::Shoot { unit: UnitId(0), target: UnitId(2) };
        let s1 = apply_action(&s0, &own).unwrap();
        agent.observe(&s0, &own, &s1);
        assert_eq!(agent.learner().unwrap().previous_state(), Some(&abstract_state(&s1, Side::Human).unwrap()));
        let theirs = Action::Shoot { unit: UnitId(3), target: UnitId(1) };
        let s2 = apply_action(&s1, &theirs).unwrap();
        agent.observe(&s1, &theirs, &s2);
        let s_t = abstract_state(&s1, Side::Human).unwrap();
        assert!((agent.utility_table().unwrap().get(&s_t) + 8.0).abs() < 1e-12);
        agent.reset_run();
        assert!(agent.utility_table().unwrap().is_empty());
    }
}
