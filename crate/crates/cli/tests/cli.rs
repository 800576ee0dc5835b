//! End-to-end command tests on a miniature configuration.

use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "\
# miniature run: short observations, small pools, a few updates
data.n_train = 3
data.n_test = 2
room.hop = 32
room.obs_len_per_channel = 32
room.max_steps = 40
ppo.horizon = 32
ppo.n_envs = 2
ppo.minibatch_size = 32
ppo.epochs_per_update = 2
ppo.total_steps = 192
train.checkpoint_every = 2
eval.episodes = 4
";

fn audionav(dir: &Path, args: &[&str]) -> Output {
    let config = dir.join("tiny.conf");
    if !config.exists() {
        std::fs::write(&config, TINY).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_audionav"))
        .args(args)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.join("run"))
        .env_remove("AUDIONAV_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_data_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let a = audionav(dir.path(), &["gen-data", "--seed", "5"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let manifest = dir.path().join("run/data/manifest.tsv");
    let first = std::fs::read(&manifest).unwrap();
    let b = audionav(dir.path(), &["gen-data", "--seed", "5"]);
    assert!(b.status.success());
    assert_eq!(std::fs::read(&manifest).unwrap(), first);
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("profile")).count(), 3);
    assert_eq!(text.lines().filter(|l| l.starts_with("clip")).count(), 3 * 5);
}

#[test]
fn gen_data_can_export_wavs() {
    let dir = tempfile::tempdir().unwrap();
    let o = audionav(dir.path(), &["gen-data", "--export-wav"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let wavs = std::fs::read_dir(dir.path().join("run/data/wav/male_low")).unwrap().count();
    assert_eq!(wavs, 5);
    let b = audionav(dir.path(), &["baseline"]);
    assert!(b.status.success(), "{}", stderr(&b));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = audionav(dir.path(), &["gen-data", "--n-train", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("data.n_train"), "{}", stderr(&o));

    let o = audionav(dir.path(), &["train", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));

    let o = audionav(dir.path(), &["show-config", "--set", "no.such.key=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no.such.key"));
}

#[test]
fn missing_checkpoint_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = audionav(dir.path(), &["eval", "--checkpoint", "/nonexistent/final.params"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn show_config_reflects_sources_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = audionav(dir.path(), &["show-config", "--preset", "paper", "--seed", "9", "--set", "ppo.lr=0.002"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for line in ["preset = paper", "seed = 9", "ppo.lr = 0.002", "ppo.horizon = 32", "data.n_train = 3"] {
        assert!(text.lines().any(|l| l == line), "missing `{line}` in\n{text}");
    }

    let env = Command::new(env!("CARGO_BIN_EXE_audionav"))
        .args(["show-config"])
        .env("AUDIONAV_SEED", "77")
        .output()
        .unwrap();
    assert!(stdout(&env).lines().any(|l| l == "seed = 77"));
    let flag_wins = Command::new(env!("CARGO_BIN_EXE_audionav"))
        .args(["show-config", "--seed", "3"])
        .env("AUDIONAV_SEED", "77")
        .output()
        .unwrap();
    assert!(stdout(&flag_wins).lines().any(|l| l == "seed = 3"));

    let keys = audionav(dir.path(), &["show-config", "--keys"]);
    assert!(stdout(&keys).contains("ppo.total_steps"));
}

#[test]
fn train_eval_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    assert!(audionav(dir.path(), &["gen-data"]).status.success());
    let t = audionav(dir.path(), &["train"]);
    assert!(t.status.success(), "{}", stderr(&t));
    let ck = dir.path().join("run/checkpoints/target-0");
    for f in ["final.params", "latest.params", "latest.adam", "progress.json", "update-000002.params", "stats.jsonl"] {
        assert!(ck.join(f).exists(), "{f}");
    }
    let stats = std::fs::read_to_string(ck.join("stats.jsonl")).unwrap();
    assert_eq!(stats.lines().count(), 3);
    let first: serde_json::Value = serde_json::from_str(stats.lines().next().unwrap()).unwrap();
    for key in ["mean_episode_reward", "success_rate", "policy_loss", "value_loss", "entropy", "clip_fraction"] {
        assert!(first[key].is_number(), "{key}");
    }

    let e = audionav(dir.path(), &["eval"]);
    assert!(e.status.success(), "{}", stderr(&e));
    let last = stdout(&e).lines().last().unwrap().to_string();
    assert!(last.starts_with("success_rate "), "{last}");
    assert!(dir.path().join("run/reports/eval.json").exists());
    assert!(dir.path().join("run/reports/eval.csv").exists());

    let p = audionav(dir.path(), &["eval", "--pitch-shift", "4:8"]);
    assert!(p.status.success(), "{}", stderr(&p));
    assert!(dir.path().join("run/reports/eval-pitch-4-8.json").exists());

    // a longer schedule picks up where the finished one stopped
    let r = audionav(dir.path(), &["train", "--resume", "--total-steps", "320"]);
    assert!(r.status.success(), "{}", stderr(&r));
    assert!(stderr(&r).contains("resuming after update 3"), "{}", stderr(&r));
    let stats = std::fs::read_to_string(ck.join("stats.jsonl")).unwrap();
    let updates: Vec<u64> = stats
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["update"].as_u64().unwrap())
        .collect();
    assert_eq!(updates, vec![1, 2, 3, 4, 5]);
}

#[test]
fn same_seed_same_artifacts() {
    let run = |dir: &Path| {
        assert!(audionav(dir, &["gen-data", "--seed", "4"]).status.success());
        assert!(audionav(dir, &["train", "--seed", "4"]).status.success());
        let e = audionav(dir, &["eval", "--seed", "4"]);
        assert!(e.status.success());
        (
            std::fs::read(dir.join("run/checkpoints/target-0/final.params")).unwrap(),
            std::fs::read(dir.join("run/reports/eval.json")).unwrap(),
        )
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path()), run(b.path()));
}

#[test]
fn baseline_and_few_shot_reports() {
    let dir = tempfile::tempdir().unwrap();
    let b = audionav(dir.path(), &["baseline", "--episodes", "6"]);
    assert!(b.status.success(), "{}", stderr(&b));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/reports/baseline.json")).unwrap()).unwrap();
    assert_eq!(report["episodes"].as_array().unwrap().len(), 6);
    assert_eq!(report["config"]["policy_mode"], "random");

    let f = audionav(dir.path(), &["eval", "--few-shot", "1"]);
    assert!(f.status.success(), "{}", stderr(&f));
    assert!(stdout(&f).lines().last().unwrap().starts_with("success_rate full "));
    let csv = std::fs::read_to_string(dir.path().join("run/reports/few-shot.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
}
