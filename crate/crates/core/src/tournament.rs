//! Experiment protocol: runs of rounds between two seats, win buckets,
//! summary statistics and the paired t-test.
//!
//! Seat A always commands the humans and seat B the aliens; the first mover
//! alternates round by round, starting with A. Every random stream is derived
//! from `(master_seed, run, round, seat)`, so results do not depend on which
//! worker plays which run.

use std::fmt::{self, Write as _};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{build_agent, Agent, AgentError, AgentKind, AgentSettings};
use crate::game::{Action, GameError, GameState, GridMap, Outcome, Rules, Side};
use crate::log::ActionLog;
use crate::search::GameRng;
use crate::stats::{mean, paired_t_test, sample_sd, TTest};

pub const BUCKET: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Seat {
    A,
    B,
}

impl Seat {
    pub const BOTH: [Seat; 2] = [Seat::A, Seat::B];

    pub fn side(self) -> Side {
        match self {
            Seat::A => Side::Human,
            Seat::B => Side::Alien,
        }
    }

    pub fn of(side: Side) -> Seat {
        match side {
            Side::Human => Seat::A,
            Side::Alien => Seat::B,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Seat {
        match self {
            Seat::A => Seat::B,
            Seat::B => Seat::A,
        }
    }
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Seat::A => "A",
            Seat::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Winner {
    Seat(Seat),
    Draw,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Winner::Seat(s) => s.fmt(f),
            Winner::Draw => f.write_str("draw"),
        }
    }
}

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("run {run} round {round}: agent {seat} failed: {source}")]
    Agent {
        run: usize,
        round: usize,
        seat: Seat,
        source: AgentError,
    },
    #[error("run {run} round {round} ply {ply}: agent {seat} chose an illegal action: {source}")]
    IllegalAction {
        run: usize,
        round: usize,
        ply: u32,
        seat: Seat,
        source: GameError,
    },
    #[error("{0}")]
    Stats(#[from] crate::stats::StatsError),
}

/// Everything that determines an experiment.
#[derive(Debug, Clone)]
pub struct MatchConfig {
    pub agent_a: AgentKind,
    pub agent_b: AgentKind,
    pub map: Arc<GridMap>,
    /// Where the map came from, for the config echo.
    pub map_label: String,
    pub rounds_per_run: usize,
    pub runs: usize,
    pub rules: Rules,
    pub settings: AgentSettings,
    pub master_seed: u64,
    /// Keep the full action sequence of every round.
    pub keep_actions: bool,
}

impl MatchConfig {
    pub fn new(agent_a: AgentKind, agent_b: AgentKind, map: Arc<GridMap>) -> Self {
        MatchConfig {
            agent_a,
            agent_b,
            map,
            map_label: "default".into(),
            rounds_per_run: 50,
            runs: 20,
            rules: Rules::default(),
            settings: AgentSettings::default(),
            master_seed: 0,
            keep_actions: false,
        }
    }

    pub fn agent(&self, seat: Seat) -> AgentKind {
        match seat {
            Seat::A => self.agent_a,
            Seat::B => self.agent_b,
        }
    }

    pub fn validate(&self) -> Result<(), TournamentError> {
        let bad = |m: String| Err(TournamentError::Config(m));
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        if self.rounds_per_run == 0 || !self.rounds_per_run.is_multiple_of(BUCKET) {
            return bad(format!(
                "rounds per run must be a positive multiple of {BUCKET} (got {})",
                self.rounds_per_run
            ));
        }
        if self.rules.move_range == 0 {
            return bad("move range must be >= 1".into());
        }
        let s = &self.settings;
        if s.iterations == 0 {
            return bad("iterations must be >= 1".into());
        }
        for (name, v) in [("c", s.exploration_c), ("td-factor", s.td_factor)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0 (got {v})"));
            }
        }
        if !(s.alpha > 0.0 && s.alpha <= 1.0) {
            return bad(format!("alpha must be in (0, 1] (got {})", s.alpha));
        }
        if !(0.0..=1.0).contains(&s.gamma) {
            return bad(format!("gamma must be in [0, 1] (got {})", s.gamma));
        }
        if !(0.0..=1.0).contains(&s.lambda) {
            return bad(format!("lambda must be in [0, 1] (got {})", s.lambda));
        }
        Ok(())
    }

    /// Exact effective configuration, one `key = value` per line.
    pub fn echo(&self) -> String {
        let s = &self.settings;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("agent_a", format!("{} (humans)", self.agent_a));
        line("agent_b", format!("{} (aliens)", self.agent_b));
        line("map", self.map_label.clone());
        line("grid", format!("{}x{}", self.map.width(), self.map.height()));
        line("runs", self.runs.to_string());
        line("rounds_per_run", self.rounds_per_run.to_string());
        line("first_mover", "alternating, A first".into());
        line("move_range", self.rules.move_range.to_string());
        line("draw_limit", self.rules.draw_limit.to_string());
        line("iterations", s.iterations.to_string());
        line("c", format!("{}", s.exploration_c));
        line("td_factor", format!("{}", s.td_factor));
        line("alpha", format!("{}", s.alpha));
        line("gamma", format!("{}", s.gamma));
        line("lambda", format!("{}", s.lambda));
        line("literal_backprop", s.literal_backprop.to_string());
        line("literal_update", s.literal_update.to_string());
        line("final_guide", s.final_guide.to_string());
        line("seed", self.master_seed.to_string());
        out
    }
}

/// Seed for one seat's random stream in one round.
pub fn derive_seed(master: u64, run: usize, round: usize, seat: Seat) -> u64 {
    let mut h = Sha256::new();
    h.update(b"minixcom-seed");
    h.update(master.to_le_bytes());
    h.update((run as u64).to_le_bytes());
    h.update((round as u64).to_le_bytes());
    h.update([seat.index() as u8]);
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

pub fn first_mover(round: usize) -> Seat {
    if round.is_multiple_of(2) {
        Seat::A
    } else {
        Seat::B
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub first_mover: Seat,
    pub winner: Winner,
    pub plies: u32,
    /// Wall-clock decision time per ply, in play order.
    pub move_times: Vec<Duration>,
    /// Filled only when the config asks for it.
    pub actions: Vec<Action>,
    pub final_fingerprint: String,
    /// Utility-table sizes per seat before and after the round.
    pub table_before: [Option<usize>; 2],
    pub table_after: [Option<usize>; 2],
}

impl RoundRecord {
    pub fn wins(&self, seat: Seat) -> bool {
        self.winner == Winner::Seat(seat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub rounds: Vec<RoundRecord>,
}

impl RunRecord {
    pub fn wins(&self, seat: Seat) -> usize {
        self.rounds.iter().filter(|r| r.wins(seat)).count()
    }

    pub fn draws(&self) -> usize {
        self.rounds.iter().filter(|r| r.winner == Winner::Draw).count()
    }
}

/// Plays one round. Both agents see every transition.
#[allow(clippy::too_many_arguments)]
pub fn play_round(
    agent_a: &mut dyn Agent,
    agent_b: &mut dyn Agent,
    map: &Arc<GridMap>,
    rules: Rules,
    first: Seat,
    seeds: [u64; 2],
    keep_actions: bool,
    (run, round): (usize, usize),
) -> Result<RoundRecord, TournamentError> {
    agent_a.reset_round();
    agent_b.reset_round();
    let table_size = |a: &dyn Agent| a.utility_table().map(|t| t.len());
    let table_before = [table_size(agent_a), table_size(agent_b)];
    let mut rngs = [GameRng::seed_from_u64(seeds[0]), GameRng::seed_from_u64(seeds[1])];
    let mut state = GameState::new(map.clone(), rules, first.side());
    let mut move_times = Vec::new();
    let mut actions = Vec::new();
    let mut outcome = state.outcome();
    while !outcome.is_terminal() {
        let seat = Seat::of(state.side_to_move());
        let started = Instant::now();
        let chosen = match seat {
            Seat::A => agent_a.choose_action(&state, &mut rngs[0]),
            Seat::B => agent_b.choose_action(&state, &mut rngs[1]),
        };
        move_times.push(started.elapsed());
        let action = chosen.map_err(|source| TournamentError::Agent { run, round, seat, source })?;
        state.check_action(&action).map_err(|source| TournamentError::IllegalAction {
            run,
            round,
            ply: state.ply() + 1,
            seat,
            source,
        })?;
        let prev = state.clone();
        state.apply_in_place(&action);
        agent_a.observe(&prev, &action, &state);
        agent_b.observe(&prev, &action, &state);
        if keep_actions {
            actions.push(action);
        }
        outcome = state.outcome();
    }
    let winner = match outcome {
        Outcome::Win(side) => Winner::Seat(Seat::of(side)),
        _ => Winner::Draw,
    };
    Ok(RoundRecord {
        round,
        first_mover: first,
        winner,
        plies: state.ply(),
        move_times,
        actions,
        final_fingerprint: state.fingerprint(),
        table_before,
        table_after: [table_size(agent_a), table_size(agent_b)],
    })
}

fn fresh_agents(config: &MatchConfig, run: usize, round: usize) -> Result<[Box<dyn Agent>; 2], TournamentError> {
    let build = |seat: Seat| {
        build_agent(config.agent(seat), &config.settings, seat.side(), &config.map)
            .map_err(|source| TournamentError::Agent { run, round, seat, source })
    };
    Ok([build(Seat::A)?, build(Seat::B)?])
}

fn play_indexed(
    config: &MatchConfig,
    agents: &mut [Box<dyn Agent>; 2],
    run: usize,
    round: usize,
) -> Result<RoundRecord, TournamentError> {
    let seeds = [
        derive_seed(config.master_seed, run, round, Seat::A),
        derive_seed(config.master_seed, run, round, Seat::B),
    ];
    let [a, b] = agents;
    play_round(
        a.as_mut(),
        b.as_mut(),
        &config.map,
        config.rules,
        first_mover(round),
        seeds,
        config.keep_actions,
        (run, round),
    )
}

/// One run: fresh agents, then `rounds_per_run` rounds in order.
pub fn play_run(config: &MatchConfig, run: usize) -> Result<RunRecord, TournamentError> {
    play_run_with(config, run, &|_, _| {})
}

fn play_run_with(
    config: &MatchConfig,
    run: usize,
    progress: &(dyn Fn(usize, &RoundRecord) + Sync),
) -> Result<RunRecord, TournamentError> {
    config.validate()?;
    let mut agents = fresh_agents(config, run, 0)?;
    for agent in agents.iter_mut() {
        agent.reset_run();
    }
    let mut rounds = Vec::with_capacity(config.rounds_per_run);
    for round in 0..config.rounds_per_run {
        let record = play_indexed(config, &mut agents, run, round)?;
        progress(run, &record);
        rounds.push(record);
    }
    Ok(RunRecord { run, rounds })
}

/// Plays every run on a pool of `jobs` workers.
///
/// Runs are independent. When neither agent learns, rounds carry no state
/// from one to the next, so they are spread over the pool individually.
pub fn run_experiment(
    config: &MatchConfig,
    jobs: usize,
    progress: &(dyn Fn(usize, &RoundRecord) + Sync),
) -> Result<Vec<RunRecord>, TournamentError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| TournamentError::Config(format!("worker pool: {e}")))?;
    let learning = config.agent_a.learns() || config.agent_b.learns();
    pool.install(|| {
        if learning {
            (0..config.runs)
                .into_par_iter()
                .map(|run| play_run_with(config, run, progress))
                .collect()
        } else {
            let tasks: Vec<(usize, usize)> = (0..config.runs)
                .flat_map(|run| (0..config.rounds_per_run).map(move |round| (run, round)))
                .collect();
            let records: Vec<RoundRecord> = tasks
                .par_iter()
                .map(|&(run, round)| {
                    let mut agents = fresh_agents(config, run, round)?;
                    let record = play_indexed(config, &mut agents, run, round)?;
                    progress(run, &record);
                    Ok(record)
                })
                .collect::<Result<_, TournamentError>>()?;
            let mut records = records.into_iter();
            Ok((0..config.runs)
                .map(|run| RunRecord {
                    run,
                    rounds: records.by_ref().take(config.rounds_per_run).collect(),
                })
                .collect())
        }
    })
}

/// Wins per seat in consecutive blocks of ten rounds. Draws count for nobody.
pub fn bucket_wins(records: &[RoundRecord]) -> Result<[Vec<usize>; 2], TournamentError> {
    if !records.len().is_multiple_of(BUCKET) {
        return Err(TournamentError::Config(format!(
            "{} rounds do not split into blocks of {BUCKET}",
            records.len()
        )));
    }
    let mut out = [Vec::new(), Vec::new()];
    for block in records.chunks(BUCKET) {
        for seat in Seat::BOTH {
            out[seat.index()].push(block.iter().filter(|r| r.wins(seat)).count());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    fn of(xs: &[f64]) -> Self {
        MeanSd {
            mean: mean(xs),
            sd: sample_sd(xs),
        }
    }
}

impl fmt::Display for MeanSd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ({:.2})", self.mean, self.sd)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: MatchConfig,
    pub runs: Vec<RunRecord>,
    /// Wins per ten rounds, across runs, per seat.
    pub per10: [MeanSd; 2],
    pub draws_per10: MeanSd,
    /// Per bucket, per seat: mean and sd across runs.
    pub buckets: [Vec<MeanSd>; 2],
    /// Paired over per-run win totals (A vs B); `None` with a single run.
    pub t_test: Option<TTest>,
}

pub fn summarize(config: &MatchConfig, runs: Vec<RunRecord>) -> Result<ExperimentResult, TournamentError> {
    let scale = |n: usize, rounds: usize| n as f64 * BUCKET as f64 / rounds as f64;
    let per_run = |seat: Seat| -> Vec<f64> {
        runs.iter().map(|r| scale(r.wins(seat), r.rounds.len())).collect()
    };
    let per10 = [MeanSd::of(&per_run(Seat::A)), MeanSd::of(&per_run(Seat::B))];
    let draws: Vec<f64> = runs.iter().map(|r| scale(r.draws(), r.rounds.len())).collect();

    let mut per_bucket: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    for run in &runs {
        let b = bucket_wins(&run.rounds)?;
        for seat in Seat::BOTH {
            let cols = &mut per_bucket[seat.index()];
            for (k, &w) in b[seat.index()].iter().enumerate() {
                if cols.len() <= k {
                    cols.push(Vec::new());
                }
                cols[k].push(w as f64);
            }
        }
    }
    let buckets = per_bucket.map(|cols| cols.iter().map(|xs| MeanSd::of(xs)).collect());

    let t_test = if runs.len() >= 2 {
        let totals = |seat: Seat| runs.iter().map(|r| r.wins(seat) as f64).collect::<Vec<_>>();
        Some(paired_t_test(&totals(Seat::A), &totals(Seat::B))?)
    } else {
        None
    };
    Ok(ExperimentResult {
        config: config.clone(),
        runs,
        per10,
        draws_per10: MeanSd::of(&draws),
        buckets,
        t_test,
    })
}

impl ExperimentResult {
    /// `run,round,first_mover,winner,plies`, one row per round.
    pub fn results_csv(&self) -> String {
        let mut out = String::from("run,round,first_mover,winner,plies\n");
        for run in &self.runs {
            for r in &run.rounds {
                let _ = writeln!(out, "{},{},{},{},{}", run.run, r.round, r.first_mover, r.winner, r.plies);
            }
        }
        out
    }

    /// One row per ten-round block: mean and sd of wins per seat.
    pub fn buckets_csv(&self) -> String {
        let mut out = String::from("bucket,first_round,last_round,a_mean,a_sd,b_mean,b_sd\n");
        for k in 0..self.buckets[0].len() {
            let (a, b) = (self.buckets[0][k], self.buckets[1][k]);
            let _ = writeln!(
                out,
                "{},{},{},{:.4},{:.4},{:.4},{:.4}",
                k,
                k * BUCKET,
                k * BUCKET + BUCKET - 1,
                a.mean,
                a.sd,
                b.mean,
                b.sd
            );
        }
        out
    }

    /// Mean and max decision time per seat, over every ply played.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("run,round,ply,seat,micros\n");
        for run in &self.runs {
            for r in &run.rounds {
                let mut seat = r.first_mover;
                for (ply, t) in r.move_times.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{},{},{}", run.run, r.round, ply, seat, t.as_micros());
                    seat = seat.other();
                }
            }
        }
        out
    }

    /// Plain-text table: config echo, wins per ten rounds, and the test.
    pub fn summary_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        out.push_str("# configuration\n");
        out.push_str(&c.echo());
        out.push_str("\n# wins per 10 rounds, mean (sd) over runs\n");
        let width = [c.agent_a.label(), c.agent_b.label()].iter().map(|l| l.len()).max().unwrap_or(0) + 4;
        for seat in Seat::BOTH {
            let label = format!("{} [{seat}]", c.agent(seat).label());
            let _ = writeln!(out, "{label:<width$}  {}", self.per10[seat.index()]);
        }
        let _ = writeln!(out, "{:<width$}  {}", "draws", self.draws_per10);
        let total = |seat: Seat| self.runs.iter().map(|r| r.wins(seat)).sum::<usize>();
        let draws: usize = self.runs.iter().map(RunRecord::draws).sum();
        let _ = writeln!(
            out,
            "totals: A {} / B {} / draws {} over {} rounds",
            total(Seat::A),
            total(Seat::B),
            draws,
            self.runs.iter().map(|r| r.rounds.len()).sum::<usize>()
        );
        out.push_str("\n# paired t-test on per-run win totals, A minus B\n");
        match &self.t_test {
            Some(t) => {
                let _ = writeln!(
                    out,
                    "n = {}, df = {}, mean diff = {:.3}, t = {:.4}, p = {:.6}{}",
                    t.df + 1,
                    t.df,
                    t.mean_diff,
                    t.t,
                    t.p,
                    if t.degenerate { " (degenerate: zero variance)" } else { "" }
                );
                let verdict = |level: f64| if t.p < level { "yes" } else { "no" };
                let _ = writeln!(out, "significant at 95%: {}, at 99%: {}", verdict(0.05), verdict(0.01));
            }
            None => out.push_str("not computed (needs at least 2 runs)\n"),
        }
        out.push_str("\n# wins per 10-round bucket, mean (sd) over runs\n");
        for k in 0..self.buckets[0].len() {
            let _ = writeln!(
                out,
                "rounds {:>3}-{:<3}  A {}  B {}",
                k * BUCKET,
                k * BUCKET + BUCKET - 1,
                self.buckets[0][k],
                self.buckets[1][k]
            );
        }
        out
    }

    /// Replayable action logs for every round; needs `keep_actions`.
    pub fn action_logs(&self) -> Vec<(String, ActionLog)> {
        let c = &self.config;
        self.runs
            .iter()
            .flat_map(|run| {
                run.rounds.iter().map(move |r| {
                    let name = format!("run{:03}-round{:03}.log", run.run, r.round);
                    let log = ActionLog::record(
                        (*c.map).clone(),
                        c.rules,
                        r.first_mover.side(),
                        r.actions.clone(),
                        vec![
                            format!("agent_a {}", c.agent_a),
                            format!("agent_b {}", c.agent_b),
                            format!("run {} round {} seed {}", run.run, r.round, c.master_seed),
                        ],
                    );
                    (name, log)
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::default_map;
    use approx::assert_abs_diff_eq;

    fn record(round: usize, winner: Winner) -> RoundRecord {
        RoundRecord {
            round,
            first_mover: first_mover(round),
            winner,
            plies: 1,
            move_times: vec![],
            actions: vec![],
            final_fingerprint: String::new(),
            table_before: [None, None],
            table_after: [None, None],
        }
    }

    fn run_of(run: usize, winners: &[Winner]) -> RunRecord {
        RunRecord {
            run,
            rounds: winners.iter().enumerate().map(|(i, &w)| record(i, w)).collect(),
        }
    }

    const A: Winner = Winner::Seat(Seat::A);
    const B: Winner = Winner::Seat(Seat::B);

    fn config(a: AgentKind, b: AgentKind) -> MatchConfig {
        let mut c = MatchConfig::new(a, b, Arc::new(default_map()));
        c.settings.iterations = 30;
        c
    }

    #[test]
    fn buckets() {
        let all_a: Vec<_> = (0..50).map(|i| record(i, A)).collect();
        assert_eq!(bucket_wins(&all_a).unwrap(), [vec![10; 5], vec![0; 5]]);
        let draws: Vec<_> = (0..50).map(|i| record(i, Winner::Draw)).collect();
        assert_eq!(bucket_wins(&draws).unwrap(), [vec![0; 5], vec![0; 5]]);
        let alt: Vec<_> = (0..50).map(|i| record(i, if i % 2 == 0 { A } else { B })).collect();
        assert_eq!(bucket_wins(&alt).unwrap(), [vec![5; 5], vec![5; 5]]);
        assert!(bucket_wins(&alt[..7]).is_err());
    }

    #[test]
    fn summary_of_two_runs() {
        let c = config(AgentKind::Rb1, AgentKind::Rb1);
        let mut r0 = vec![B; 50];
        r0[..30].fill(A);
        let mut r1 = vec![B; 50];
        r1[..40].fill(A);
        let res = summarize(&c, vec![run_of(0, &r0), run_of(1, &r1)]).unwrap();
        assert_abs_diff_eq!(res.per10[0].mean, 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(res.per10[0].sd, sample_sd(&[6.0, 8.0]), epsilon = 1e-12);
        assert_abs_diff_eq!(res.per10[1].mean, 3.0, epsilon = 1e-12);
        // Bucket sums equal totals.
        let bucket_total: f64 = res.buckets[0].iter().map(|b| b.mean * 2.0).sum();
        assert_abs_diff_eq!(bucket_total, 70.0, epsilon = 1e-9);
    }

    #[test]
    fn single_run_all_a() {
        let c = config(AgentKind::Rb1, AgentKind::Rb1);
        let res = summarize(&c, vec![run_of(0, &[A; 50])]).unwrap();
        assert_eq!(res.per10[0], MeanSd { mean: 10.0, sd: 0.0 });
        assert!(res.t_test.is_none());
    }

    #[test]
    fn first_mover_alternates() {
        let mut c = config(AgentKind::Rb1, AgentKind::Rb1);
        c.rounds_per_run = 10;
        let run = play_run(&c, 0).unwrap();
        let firsts: Vec<Seat> = run.rounds.iter().map(|r| r.first_mover).collect();
        assert_eq!(&firsts[..2], &[Seat::A, Seat::B]);
        assert_eq!(firsts.iter().filter(|&&s| s == Seat::A).count(), 5);
        for r in &run.rounds {
            assert!(r.plies <= 2 * c.rules.draw_limit);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let mut c = config(AgentKind::Mcts, AgentKind::Rb1);
        c.rounds_per_run = 10;
        let untimed = |mut r: RunRecord| {
            r.rounds.iter_mut().for_each(|x| x.move_times.clear());
            r
        };
        assert_eq!(untimed(play_run(&c, 3).unwrap()), untimed(play_run(&c, 3).unwrap()));
    }

    #[test]
    fn learner_table_persists_within_run_only() {
        let mut c = config(AgentKind::MctsTd, AgentKind::Rb1);
        c.rounds_per_run = 10;
        let run = play_run(&c, 0).unwrap();
        assert_eq!(run.rounds[0].table_before[0], Some(0));
        assert!(run.rounds[9].table_after[0].unwrap() > 0);
        assert_eq!(run.rounds[1].table_before[0], run.rounds[0].table_after[0]);
        let next = play_run(&c, 1).unwrap();
        assert_eq!(next.rounds[0].table_before[0], Some(0));
        assert_eq!(run.rounds[0].table_before[1], None);
    }

    #[test]
    fn zero_draw_limit_is_immediate_draw() {
        let mut c = config(AgentKind::Rb1, AgentKind::Rb1);
        c.rules.draw_limit = 0;
        c.rounds_per_run = 10;
        let run = play_run(&c, 0).unwrap();
        assert!(run.rounds.iter().all(|r| r.winner == Winner::Draw && r.plies == 0));
    }

    struct Idler(Side);

    impl Agent for Idler {
        fn name(&self) -> &'static str {
            "idle"
        }
        fn side(&self) -> Side {
            self.0
        }
        fn choose_action(&mut self, state: &GameState, _: &mut GameRng) -> Result<Action, AgentError> {
            // Never shoots; takes the first legal move.
            let acts = crate::game::legal_actions(state).unwrap();
            Ok(acts
                .iter()
                .copied()
                .find(|a| matches!(a, Action::Move { .. }))
                .unwrap_or(acts[0]))
        }
    }

    struct Cheater;

    impl Agent for Cheater {
        fn name(&self) -> &'static str {
            "cheat"
        }
        fn side(&self) -> Side {
            Side::Alien
        }
        fn choose_action(&mut self, _: &GameState, _: &mut GameRng) -> Result<Action, AgentError> {
            Ok(Action::Shoot {
                unit: crate::game::UnitId(2),
                target: crate::game::UnitId(0),
            })
        }
    }

    #[test]
    fn rb1_beats_a_passive_opponent() {
        let map = Arc::new(default_map());
        let mut wins = 0;
        for seed in 0..20u64 {
            let mut rb1 = crate::agents::Rb1Agent::new(Side::Human, &map);
            let mut passive = Idler(Side::Alien);
            let r = play_round(&mut rb1, &mut passive, &map, Rules::default(), Seat::A, [seed, seed + 1], false, (0, 0))
                .unwrap();
            wins += r.wins(Seat::A) as u32;
        }
        assert!(wins >= 15, "rb1 won {wins}/20");
    }

    #[test]
    fn illegal_action_aborts_round() {
        let map = Arc::new(default_map());
        let mut rb1 = crate::agents::Rb1Agent::new(Side::Human, &map);
        let err = play_round(&mut rb1, &mut Cheater, &map, Rules::default(), Seat::B, [0, 1], false, (0, 4)).unwrap_err();
        assert!(matches!(err, TournamentError::IllegalAction { seat: Seat::B, ply: 1, round: 4, .. }), "{err}");
    }

    #[test]
    fn config_validation() {
        let mut c = config(AgentKind::Rb1, AgentKind::Rb1);
        c.rounds_per_run = 7;
        assert!(c.validate().is_err());
        c.rounds_per_run = 50;
        c.runs = 0;
        assert!(c.validate().is_err());
        c.runs = 1;
        c.settings.alpha = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn seeds_differ_by_every_coordinate() {
        let base = derive_seed(7, 1, 2, Seat::A);
        assert_ne!(base, derive_seed(8, 1, 2, Seat::A));
        assert_ne!(base, derive_seed(7, 2, 2, Seat::A));
        assert_ne!(base, derive_seed(7, 1, 3, Seat::A));
        assert_ne!(base, derive_seed(7, 1, 2, Seat::B));
        assert_eq!(base, derive_seed(7, 1, 2, Seat::A));
    }

    #[test]
    fn output_files_shape() {
        let c = config(AgentKind::Rb1, AgentKind::Rb1);
        let res = summarize(&c, vec![run_of(0, &[A; 10]), run_of(1, &[B; 10])]).unwrap();
        let csv = res.results_csv();
        assert_eq!(csv.lines().count(), 21);
        assert_eq!(csv.lines().nth(1), Some("0,0,A,A,1"));
        assert_eq!(res.buckets_csv().lines().count(), 2);
        let summary = res.summary_text();
        assert!(summary.contains("gamma = 0.9"));
        assert!(summary.contains("RB1 [A]"));
    }
}
