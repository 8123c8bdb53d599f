//! Command-line front end: `run`, `play`, `replay`, `map-check`.
//!
//! Exit codes: 0 success, 2 bad configuration, 3 I/O failure, 4 agent fault,
//! 5 replay divergence.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;

use crate::agents::{build_agent, AgentKind, AgentSettings};
use crate::game::{default_map, parse_map, GameState, GridMap, Outcome, Rules, Side};
use crate::log::ActionLog;
use crate::search::GameRng;
use crate::tournament::{derive_seed, run_experiment, summarize, MatchConfig, Seat, TournamentError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_AGENT: i32 = 4;
pub const EXIT_REPLAY: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "minixcom", version, about = "miniXCOM tactics game, search agents and tournament harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play runs of rounds between two agents and write result files.
    Run(RunArgs),
    /// Play one verbose round and write its action log.
    Play(PlayArgs),
    /// Re-apply a logged game and verify every action and the final hash.
    Replay {
        /// Action log written by `play` or `run --logs`.
        log: PathBuf,
    },
    /// Validate a map file and print it.
    MapCheck {
        /// Map file; the built-in map when omitted.
        map: Option<PathBuf>,
    },
}

/// Agent, map and game parameters shared by `run` and `play`.
#[derive(Debug, Clone, Args)]
pub struct GameArgs {
    /// Agent in seat A (humans): rb1, mcts, mcts-td or sarsa-uct.
    #[arg(long, default_value = "mcts-td")]
    pub agent_a: AgentKind,
    /// Agent in seat B (aliens).
    #[arg(long, default_value = "rb1")]
    pub agent_b: AgentKind,
    /// Map file; the built-in 6x6 map when omitted.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Search iterations per move (artifact default).
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
    pub iterations: u32,
    /// UCT exploration constant C.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub c: f64,
    /// Weight d of the learned utility in selection.
    #[arg(long, default_value_t = 1.0)]
    pub td_factor: f64,
    /// TD learning rate.
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    /// TD discount (artifact default).
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    /// Trace decay of the SARSA-UCT baseline.
    #[arg(long, default_value_t = 0.9)]
    pub lambda: f64,
    /// Moves per side before an undecided round is drawn.
    #[arg(long, default_value_t = 20)]
    pub draw_limit: u32,
    /// Steps per move.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..))]
    pub move_range: u8,
    /// Master seed; every random stream derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Back up the root player's reward unchanged at every node.
    #[arg(long)]
    pub literal_backprop: bool,
    /// Insert unseen TD states without updating them on first sight.
    #[arg(long)]
    pub literal_update: bool,
    /// Keep the learned-utility term when choosing the move to play.
    #[arg(long)]
    pub final_guide: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// Independent runs; learned utilities are cleared between runs.
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// Rounds per run; a positive multiple of 10.
    #[arg(long, default_value_t = 50)]
    pub rounds: usize,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Quick preset: 1 run of 10 rounds at 200 iterations.
    #[arg(long)]
    pub smoke: bool,
    /// Also write a replayable action log for every round under OUT/logs.
    #[arg(long)]
    pub logs: bool,
    /// No progress output.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PlayArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// Side that moves first.
    #[arg(long, default_value = "human")]
    pub first: Side,
    /// Where to write the action log.
    #[arg(long, default_value = "play.log")]
    pub log: PathBuf,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, msg: msg.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            msg: format!("{}: {e}", path.display()),
        }
    }
}

impl From<TournamentError> for Failure {
    fn from(e: TournamentError) -> Self {
        let code = match e {
            TournamentError::Config(_) | TournamentError::Stats(_) => EXIT_CONFIG,
            TournamentError::Agent { .. } | TournamentError::IllegalAction { .. } => EXIT_AGENT,
        };
        Failure { code, msg: e.to_string() }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}

fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Run(args) => cmd_run(args, out, err),
        Command::Play(args) => cmd_play(args, out),
        Command::Replay { log } => cmd_replay(log, out),
        Command::MapCheck { map } => cmd_map_check(map.as_deref(), out),
    }
}

fn load_map(path: Option<&Path>) -> Result<(GridMap, String), Failure> {
    match path {
        None => Ok((default_map(), "default".into())),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
            let map = parse_map(&text).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
            Ok((map, p.display().to_string()))
        }
    }
}

fn settings(g: &GameArgs) -> AgentSettings {
    AgentSettings {
        iterations: g.iterations,
        time_limit: None,
        exploration_c: g.c,
        td_factor: g.td_factor,
        alpha: g.alpha,
        gamma: g.gamma,
        lambda: g.lambda,
        literal_backprop: g.literal_backprop,
        literal_update: g.literal_update,
        final_guide: g.final_guide,
    }
}

fn match_config(g: &GameArgs) -> Result<MatchConfig, Failure> {
    let (map, label) = load_map(g.map.as_deref())?;
    let mut config = MatchConfig::new(g.agent_a, g.agent_b, Arc::new(map));
    config.map_label = label;
    config.rules = Rules {
        move_range: g.move_range,
        draw_limit: g.draw_limit,
    };
    config.settings = settings(g);
    config.master_seed = g.seed;
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

/// Executes an experiment and writes `results.csv`, `summary.txt`,
/// `buckets.csv` and `timing.csv` into the output directory.
fn cmd_run_config(
    config: &MatchConfig,
    jobs: usize,
    out_dir: &Path,
    logs: bool,
    quiet: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Failure::io(out_dir, e))?;
    let total = config.runs * config.rounds_per_run;
    let done = AtomicUsize::new(0);
    // Progress goes straight to the process's stderr; `err` is not Sync.
    let progress = |_run: usize, _r: &crate::tournament::RoundRecord| {
        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
        if !quiet && (n.is_multiple_of(10) || n == total) {
            eprintln!("{n}/{total} rounds");
        }
    };
    let runs = run_experiment(config, jobs, &progress)?;
    let result = summarize(config, runs)?;
    write_file(&out_dir.join("results.csv"), &result.results_csv())?;
    write_file(&out_dir.join("buckets.csv"), &result.buckets_csv())?;
    let summary = result.summary_text();
    write_file(&out_dir.join("summary.txt"), &summary)?;
    write_file(&out_dir.join("timing.csv"), &result.timing_csv())?;
    if logs {
        let dir = out_dir.join("logs");
        fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
        for (name, log) in result.action_logs() {
            write_file(&dir.join(name), &log.to_text())?;
        }
    }
    let _ = write!(out, "{summary}");
    if !quiet {
        let _ = writeln!(err, "wrote {}", out_dir.display());
    }
    Ok(())
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let mut config = match_config(&args.game)?;
    config.runs = args.runs;
    config.rounds_per_run = args.rounds;
    if args.smoke {
        config.runs = 1;
        config.rounds_per_run = 10;
        config.settings.iterations = 200;
    }
    config.keep_actions = args.logs;
    let jobs = match args.jobs {
        Some(0) => return Err(Failure::config("--jobs must be >= 1")),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    cmd_run_config(&config, jobs, &args.out, args.logs, args.quiet, out, err)
}

fn cmd_play(args: &PlayArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = match_config(&args.game)?;
    config.validate()?;
    let first = Seat::of(args.first);
    let mut agents = Vec::new();
    for seat in Seat::BOTH {
        let agent = build_agent(config.agent(seat), &config.settings, seat.side(), &config.map)
            .map_err(|source| TournamentError::Agent { run: 0, round: 0, seat, source })?;
        agents.push(agent);
    }
    let mut rngs = Seat::BOTH.map(|seat| GameRng::seed_from_u64(derive_seed(config.master_seed, 0, 0, seat)));
    let mut state = GameState::new(config.map.clone(), config.rules, first.side());
    let mut actions = Vec::new();
    let _ = writeln!(
        out,
        "A: {} (humans)  B: {} (aliens)  first: {}",
        config.agent_a.label(),
        config.agent_b.label(),
        args.first
    );
    let _ = write!(out, "{}", state.render());
    while !state.outcome().is_terminal() {
        let seat = Seat::of(state.side_to_move());
        let action = agents[seat.index()]
            .choose_action(&state, &mut rngs[seat.index()])
            .map_err(|source| TournamentError::Agent {
                run: 0,
                round: 0,
                seat,
                source,
            })?;
        state.check_action(&action).map_err(|source| TournamentError::IllegalAction {
            run: 0,
            round: 0,
            ply: state.ply() + 1,
            seat,
            source,
        })?;
        let prev = state.clone();
        state.apply_in_place(&action);
        for a in agents.iter_mut() {
            a.observe(&prev, &action, &state);
        }
        actions.push(action);
        let _ = writeln!(out, "\nply {} {} ({}): {}", state.ply(), seat, prev.side_to_move(), action);
        let _ = write!(out, "{}", state.render());
    }
    let verdict = match state.outcome() {
        Outcome::Win(side) => format!("winner {} ({side})", Seat::of(side)),
        _ => "draw".to_string(),
    };
    let _ = writeln!(out, "\n{verdict} after {} plies", state.ply());
    let log = ActionLog::record(
        (*config.map).clone(),
        config.rules,
        args.first,
        actions,
        vec![
            format!("agent_a {}", config.agent_a),
            format!("agent_b {}", config.agent_b),
            format!("seed {}", config.master_seed),
        ],
    );
    write_file(&args.log, &log.to_text())?;
    let _ = writeln!(out, "log written to {}", args.log.display());
    Ok(())
}

fn cmd_replay(path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let log = ActionLog::parse(&text).map_err(|e| Failure {
        code: EXIT_REPLAY,
        msg: format!("{}: {e}", path.display()),
    })?;
    let state = log.replay().map_err(|e| Failure {
        code: EXIT_REPLAY,
        msg: format!("replay diverged: {e}"),
    })?;
    let _ = writeln!(
        out,
        "replay ok: {} plies, {} ({})",
        log.actions.len(),
        state.outcome(),
        state.fingerprint()
    );
    Ok(())
}

fn cmd_map_check(path: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let (map, label) = load_map(path)?;
    let state = GameState::new(Arc::new(map.clone()), Rules::default(), Side::Human);
    let _ = writeln!(out, "{label}: {}x{}, {} walls", map.width(), map.height(), map.walls().len());
    let _ = write!(out, "{}", state.render());
    for side in Side::ALL {
        let starts: Vec<String> = map.start_positions(side).iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{side} starts: {}", starts.join(" "));
    }
    let corridor: Vec<String> = map.corridor().iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "corridor: {}", if corridor.is_empty() { "(none)".into() } else { corridor.join(" ") });
    let _ = writeln!(out, "ok");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(std::iter::once("minixcom").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn defaults_match_documented_values() {
        let cli = Cli::try_parse_from(["minixcom", "run"]).unwrap();
        let Command::Run(r) = cli.command else { panic!() };
        assert_eq!((r.runs, r.rounds), (20, 50));
        let g = r.game;
        assert_eq!(g.c, std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!((g.td_factor, g.alpha, g.gamma), (1.0, 0.8, 0.9));
        assert_eq!((g.iterations, g.draw_limit, g.move_range), (1000, 20, 3));
        assert_eq!((g.agent_a, g.agent_b), (AgentKind::MctsTd, AgentKind::Rb1));
    }

    #[test]
    fn help_lists_every_flag() {
        let (code, out, _) = cli(&["run", "--help"]);
        assert_eq!(code, 0);
        for flag in [
            "--agent-a", "--agent-b", "--map", "--runs", "--rounds", "--iterations", "--c", "--td-factor", "--alpha",
            "--gamma", "--draw-limit", "--seed", "--jobs", "--out", "--literal-backprop", "--literal-update", "--smoke",
        ] {
            assert!(out.contains(flag), "missing {flag}");
        }
    }

    #[test]
    fn config_errors_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(cli(&["run", "--rounds", "7", "--out", out]).0, EXIT_CONFIG);
        assert_eq!(cli(&["run", "--alpha", "1.5", "--out", out]).0, EXIT_CONFIG);
        assert_eq!(cli(&["run", "--bogus"]).0, EXIT_CONFIG);
        assert_eq!(cli(&["run", "--agent-a", "minimax"]).0, EXIT_CONFIG);
        assert_eq!(cli(&["run", "--jobs", "0", "--out", out]).0, EXIT_CONFIG);
    }

    #[test]
    fn missing_map_is_io_error() {
        assert_eq!(cli(&["map-check", "/nonexistent/x.map"]).0, EXIT_IO);
    }

    #[test]
    fn bad_map_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.map");
        fs::write(&p, "size 3 3\n...\n").unwrap();
        assert_eq!(cli(&["map-check", p.to_str().unwrap()]).0, EXIT_CONFIG);
    }

    #[test]
    fn map_check_default() {
        let (code, out, _) = cli(&["map-check"]);
        assert_eq!(code, 0);
        assert!(out.ends_with("ok\n"));
        assert!(out.contains('H') && out.contains('A') && out.contains('#'));
    }

    #[test]
    fn play_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("g.log");
        let log_s = log.to_str().unwrap();
        let args = ["play", "--agent-a", "rb1", "--agent-b", "rb1", "--seed", "4", "--log", log_s];
        let (code, first, _) = cli(&args);
        assert_eq!(code, 0);
        assert!(first.contains("after"));
        let (_, second, _) = cli(&args);
        assert_eq!(first, second);
        assert_eq!(cli(&["replay", log_s]).0, 0);

        let text = fs::read_to_string(&log).unwrap();
        let tampered = {
            let (head, tail) = text.trim_end().rsplit_once(' ').unwrap();
            let flipped = if tail.starts_with('0') { "1" } else { "0" };
            format!("{head} {flipped}{}\n", &tail[1..])
        };
        fs::write(&log, tampered).unwrap();
        assert_eq!(cli(&["replay", log_s]).0, EXIT_REPLAY);
    }

    #[test]
    fn smoke_run_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o");
        let (code, stdout, err) = cli(&[
            "run", "--agent-a", "rb1", "--agent-b", "rb1", "--smoke", "--quiet", "--logs", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(stdout.contains("wins per 10 rounds"));
        for f in ["results.csv", "summary.txt", "buckets.csv", "timing.csv"] {
            assert!(out.join(f).exists(), "{f}");
        }
        let results = fs::read_to_string(out.join("results.csv")).unwrap();
        assert_eq!(results.lines().count(), 11);
        let logs: Vec<_> = fs::read_dir(out.join("logs")).unwrap().collect();
        assert_eq!(logs.len(), 10);
    }
}
