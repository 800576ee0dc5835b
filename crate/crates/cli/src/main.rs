//! `audionav` command-line entry point.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_file, RunConfig, KEYS, SEED_ENV};

#[derive(Parser, Debug)]
#[command(name = "audionav", version, about = "Audio-only navigation: data, training and evaluation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Each one sets a single config key.
#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed [key: seed; env: AUDIONAV_SEED].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root [key: out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// desk | paper [key: preset].
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Set any documented key, e.g. `--set ppo.lr=1e-3`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the utterance pool manifest (and optionally WAV files).
    GenData {
        /// [key: data.export_wav]
        #[arg(long)]
        export_wav: bool,
        /// [key: data.n_train]
        #[arg(long)]
        n_train: Option<usize>,
        /// [key: data.n_test]
        #[arg(long)]
        n_test: Option<usize>,
    },
    /// Train an agent with PPO.
    Train {
        /// Continue from the latest checkpoint [key: train.resume].
        #[arg(long)]
        resume: bool,
        /// [key: ppo.total_steps]
        #[arg(long)]
        total_steps: Option<String>,
        /// Target speaker index [key: room.target_index].
        #[arg(long)]
        target: Option<usize>,
        /// Train one agent per speaker [key: eval.target_rotation].
        #[arg(long)]
        target_rotation: bool,
        /// Train utterances per speaker to use; 0 = all [key: train.utterances].
        #[arg(long)]
        utterances: Option<usize>,
    },
    /// Evaluate trained agents on the test pools.
    Eval {
        #[command(flatten)]
        eval: EvalFlags,
        /// trained | random [key: eval.policy].
        #[arg(long)]
        policy: Option<String>,
        /// Parameter file to evaluate [key: eval.checkpoint].
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        /// Train full-pool and N-utterance agents and compare them [key: eval.few_shot_utterances].
        #[arg(long, value_name = "N")]
        few_shot: Option<usize>,
        /// Sample actions instead of using the mean [key: eval.deterministic = false].
        #[arg(long)]
        stochastic: bool,
    },
    /// Evaluate the random policy.
    Baseline {
        #[command(flatten)]
        eval: EvalFlags,
    },
    /// Print the effective configuration, or the documented keys with --keys.
    ShowConfig {
        #[arg(long)]
        keys: bool,
    },
}

#[derive(Args, Debug)]
struct EvalFlags {
    /// Episodes per target [key: eval.episodes].
    #[arg(long)]
    episodes: Option<usize>,
    /// MIN:MAX percent, e.g. 4:8 [key: eval.pitch_shift].
    #[arg(long, value_name = "MIN:MAX")]
    pitch_shift: Option<String>,
    /// Evaluate every speaker as target [key: eval.target_rotation].
    #[arg(long)]
    target_rotation: bool,
    /// [key: room.target_index]
    #[arg(long)]
    target: Option<usize>,
}

impl EvalFlags {
    fn push(&self, kv: &mut Vec<(String, String)>) {
        push_opt(kv, "eval.episodes", &self.episodes);
        push_opt(kv, "eval.pitch_shift", &self.pitch_shift);
        push_flag(kv, "eval.target_rotation", self.target_rotation);
        push_opt(kv, "room.target_index", &self.target);
    }
}

fn push_opt<T: ToString>(kv: &mut Vec<(String, String)>, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        kv.push((key.into(), v.to_string()));
    }
}

fn push_flag(kv: &mut Vec<(String, String)>, key: &str, on: bool) {
    if on {
        kv.push((key.into(), "true".into()));
    }
}

/// File values, then the seed from the environment, then flags.
fn resolve(cli: &Cli) -> audionav::Result<RunConfig> {
    let mut kv = match &cli.common.config {
        Some(path) => parse_file(path)?,
        None => Vec::new(),
    };
    if cli.common.seed.is_none() {
        if let Ok(v) = std::env::var(SEED_ENV) {
            kv.push(("seed".into(), v));
        }
    }
    let c = &cli.common;
    push_opt(&mut kv, "seed", &c.seed);
    push_opt(&mut kv, "out", &c.out.as_ref().map(|p| p.display().to_string()));
    push_opt(&mut kv, "preset", &c.preset);
    for s in &c.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| audionav::Error::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        kv.push((k.trim().into(), v.trim().into()));
    }
    match &cli.command {
        Command::GenData { export_wav, n_train, n_test } => {
            push_flag(&mut kv, "data.export_wav", *export_wav);
            push_opt(&mut kv, "data.n_train", n_train);
            push_opt(&mut kv, "data.n_test", n_test);
        }
        Command::Train {
            resume,
            total_steps,
            target,
            target_rotation,
            utterances,
        } => {
            push_flag(&mut kv, "train.resume", *resume);
            push_opt(&mut kv, "ppo.total_steps", total_steps);
            push_opt(&mut kv, "room.target_index", target);
            push_flag(&mut kv, "eval.target_rotation", *target_rotation);
            push_opt(&mut kv, "train.utterances", utterances);
        }
        Command::Eval {
            eval,
            policy,
            checkpoint,
            few_shot,
            stochastic,
        } => {
            eval.push(&mut kv);
            push_opt(&mut kv, "eval.policy", policy);
            push_opt(&mut kv, "eval.checkpoint", &checkpoint.as_ref().map(|p| p.display().to_string()));
            push_opt(&mut kv, "eval.few_shot_utterances", few_shot);
            if *stochastic {
                kv.push(("eval.deterministic".into(), "false".into()));
            }
        }
        Command::Baseline { eval } => {
            eval.push(&mut kv);
            kv.push(("eval.policy".into(), "random".into()));
        }
        Command::ShowConfig { .. } => {}
    }
    RunConfig::from_pairs(&kv)
}

fn run(cli: &Cli) -> audionav::Result<()> {
    if let Command::ShowConfig { keys: true } = cli.command {
        for (k, doc) in KEYS {
            println!("{k:<28} {doc}");
        }
        return Ok(());
    }
    let cfg = resolve(cli)?;
    match cli.command {
        Command::GenData { .. } => commands::gen_data(&cfg),
        Command::Train { .. } => commands::train(&cfg),
        Command::Eval { .. } | Command::Baseline { .. } => commands::eval(&cfg),
        Command::ShowConfig { .. } => {
            print!("{}", cfg.render());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                audionav::Error::Config(_) | audionav::Error::Usage(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
