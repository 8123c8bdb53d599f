//! Plain-text action logs and their replay.
//!
//! ```text
//! minixcom-log 1
//! # free-form comments
//! first human
//! move-range 3
//! draw-limit 20
//! map-begin
//! size 6 6
//! ...
//! map-end
//! moveshoot 0 0,3 2
//! shoot 1 3
//! end win human 3f0c9a1b22d4e8f7
//! ```
//!
//! One action per line; the last line holds the outcome and the fingerprint
//! of the final position.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::game::{parse_map, Action, GameState, GridMap, MapError, Outcome, Rules, Side};

const MAGIC: &str = "minixcom-log 1";

#[derive(Debug, Error, PartialEq)]
pub enum LogError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("embedded map: {0}")]
    Map(#[from] MapError),
}

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("ply {ply}: `{action}` is not legal here: {reason}")]
    Illegal { ply: usize, action: Action, reason: String },
    #[error("ply {ply}: `{action}` played after the game ended ({outcome})")]
    AfterEnd { ply: usize, action: Action, outcome: Outcome },
    #[error("log ends before the game does (after {plies} plies)")]
    Unfinished { plies: usize },
    #[error("final outcome is `{actual}`, log says `{logged}`")]
    OutcomeMismatch { logged: String, actual: String },
    #[error("final position hash is {actual}, log says {logged}")]
    HashMismatch { logged: String, actual: String },
}

impl ReplayError {
    /// First ply that disagrees with the log, when the failure is tied to one.
    pub fn ply(&self) -> Option<usize> {
        match self {
            ReplayError::Illegal { ply, .. } | ReplayError::AfterEnd { ply, .. } => Some(*ply),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionLog {
    pub comments: Vec<String>,
    pub map: GridMap,
    pub rules: Rules,
    pub first: Side,
    pub actions: Vec<Action>,
    /// Logged outcome text and final fingerprint.
    pub outcome: String,
    pub fingerprint: String,
}

impl ActionLog {
    /// Builds a log by playing `actions` forward; the end line is whatever
    /// the game actually reached.
    pub fn record(map: GridMap, rules: Rules, first: Side, actions: Vec<Action>, comments: Vec<String>) -> Self {
        let mut state = GameState::new(Arc::new(map.clone()), rules, first);
        for a in &actions {
            state.apply_in_place(a);
        }
        ActionLog {
            comments,
            map,
            rules,
            first,
            actions,
            outcome: state.outcome().to_string(),
            fingerprint: state.fingerprint(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC}\n");
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "first {}", self.first);
        let _ = writeln!(out, "move-range {}", self.rules.move_range);
        let _ = writeln!(out, "draw-limit {}", self.rules.draw_limit);
        out.push_str("map-begin\n");
        out.push_str(&self.map.to_map_text());
        if !out.ends_with('\n') {
            out.push('\n');
        }
        out.push_str("map-end\n");
        for a in &self.actions {
            let _ = writeln!(out, "{a}");
        }
        let _ = writeln!(out, "end {} {}", self.outcome, self.fingerprint);
        out
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        let syntax = |line: usize, msg: String| LogError::Syntax { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            _ => return Err(syntax(1, format!("expected `{MAGIC}`"))),
        }
        let mut comments = Vec::new();
        let mut first = None;
        let mut rules = Rules::default();
        let mut map = None;
        let mut actions = Vec::new();
        let mut end = None;
        while let Some((n, line)) = lines.next() {
            if line.is_empty() {
                continue;
            }
            if end.is_some() {
                return Err(syntax(n, "content after the end line".into()));
            }
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.trim().to_string());
                continue;
            }
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "first" => first = Some(rest.parse::<Side>().map_err(|e| syntax(n, e.to_string()))?),
                "move-range" => rules.move_range = rest.parse().map_err(|_| syntax(n, format!("bad move range `{rest}`")))?,
                "draw-limit" => rules.draw_limit = rest.parse().map_err(|_| syntax(n, format!("bad draw limit `{rest}`")))?,
                "map-begin" => {
                    let mut body = String::new();
                    loop {
                        match lines.next() {
                            Some((_, "map-end")) => break,
                            Some((_, l)) => {
                                body.push_str(l);
                                body.push('\n');
                            }
                            None => return Err(syntax(n, "map-begin without map-end".into())),
                        }
                    }
                    map = Some(parse_map(&body)?);
                }
                "end" => {
                    let mut parts: Vec<&str> = rest.split_whitespace().collect();
                    let hash = parts.pop().ok_or_else(|| syntax(n, "end line needs an outcome and a hash".into()))?;
                    if parts.is_empty() {
                        return Err(syntax(n, "end line needs an outcome and a hash".into()));
                    }
                    end = Some((parts.join(" "), hash.to_string()));
                }
                _ => {
                    if map.is_none() {
                        return Err(syntax(n, format!("unexpected `{line}` before the map")));
                    }
                    actions.push(line.parse::<Action>().map_err(|e| syntax(n, e.to_string()))?);
                }
            }
        }
        let (outcome, fingerprint) = end.ok_or_else(|| syntax(text.lines().count(), "missing end line".into()))?;
        Ok(ActionLog {
            comments,
            map: map.ok_or_else(|| syntax(1, "missing map".into()))?,
            rules,
            first: first.ok_or_else(|| syntax(1, "missing `first` line".into()))?,
            actions,
            outcome,
            fingerprint,
        })
    }

    /// Re-applies every action, checking legality, the outcome and the hash.
    /// Returns the final state.
    pub fn replay(&self) -> Result<GameState, ReplayError> {
        let mut state = GameState::new(Arc::new(self.map.clone()), self.rules, self.first);
        for (i, action) in self.actions.iter().enumerate() {
            let ply = i + 1;
            let outcome = state.outcome();
            if outcome.is_terminal() {
                return Err(ReplayError::AfterEnd { ply, action: *action, outcome });
            }
            if let Err(e) = state.check_action(action) {
                return Err(ReplayError::Illegal {
                    ply,
                    action: *action,
                    reason: e.to_string(),
                });
            }
            state.apply_in_place(action);
        }
        let outcome = state.outcome();
        if !outcome.is_terminal() {
            return Err(ReplayError::Unfinished { plies: self.actions.len() });
        }
        if outcome.to_string() != self.outcome {
            return Err(ReplayError::OutcomeMismatch {
                logged: self.outcome.clone(),
                actual: outcome.to_string(),
            });
        }
        let actual = state.fingerprint();
        if actual != self.fingerprint {
            return Err(ReplayError::HashMismatch {
                logged: self.fingerprint.clone(),
                actual,
            });
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{rb1_choose, Rb1State};
    use crate::game::default_map;
    use crate::search::GameRng;
    use rand::SeedableRng;

    fn played() -> ActionLog {
        let map = default_map();
        let shared = Arc::new(map.clone());
        let mut state = GameState::new(shared.clone(), Rules::default(), Side::Alien);
        let mut progress = [Rb1State::new(&shared, Side::Human), Rb1State::new(&shared, Side::Alien)];
        let mut rng = GameRng::seed_from_u64(9);
        let mut actions = Vec::new();
        while !state.outcome().is_terminal() {
            let a = rb1_choose(&state, &mut progress[state.side_to_move().index()], &mut rng);
            state.apply_in_place(&a);
            actions.push(a);
        }
        ActionLog::record(map, Rules::default(), Side::Alien, actions, vec!["rb1 vs rb1".into()])
    }

    #[test]
    fn round_trip_and_replay() {
        let log = played();
        let text = log.to_text();
        let back = ActionLog::parse(&text).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.to_text(), text);
        back.replay().unwrap();
    }

    #[test]
    fn edited_action_diverges_at_its_ply() {
        let mut log = played();
        let bad = Action::Move {
            unit: crate::game::UnitId(0),
            to: crate::game::Coord::new(1, 1),
        };
        log.actions[0] = bad;
        let err = log.replay().unwrap_err();
        assert_eq!(err.ply(), Some(1), "{err}");
    }

    #[test]
    fn tampered_hash_detected() {
        let mut log = played();
        log.fingerprint = "0000000000000000".into();
        assert!(matches!(log.replay(), Err(ReplayError::HashMismatch { .. })));
    }

    #[test]
    fn truncated_log_is_unfinished() {
        let mut log = played();
        log.actions.pop();
        assert!(matches!(log.replay(), Err(ReplayError::Unfinished { .. })));
    }

    #[test]
    fn malformed_text() {
        assert!(ActionLog::parse("hello").is_err());
        let text = played().to_text();
        let no_end: String = text.lines().filter(|l| !l.starts_with("end ")).map(|l| format!("{l}\n")).collect();
        assert!(ActionLog::parse(&no_end).is_err());
        let garbage = text.replace("map-end\n", "map-end\nfly 0 1,1\n");
        assert!(matches!(ActionLog::parse(&garbage), Err(LogError::Syntax { .. })));
    }
}
