use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use audionav::audio::{save_wav, ClipSource, Manifest, Partition, UtterancePool, WavEncoding};
use audionav::eval::{
    agent_seeds, eval_seed, run_eval, run_few_shot_experiment, summarize, write_report, write_summary, EvalReport,
    FewShotConfig, Policy, PolicyMode,
};
use audionav::nn::{load_adam, load_params_expecting, save_adam, save_params, MlpParams, MlpShape};
use audionav::ppo::{TrainProgress, Trainer};
use audionav::room::EnvFactory;
use audionav::{Error, Result};

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.tsv";

fn network_shape(cfg: &RunConfig) -> MlpShape {
    MlpShape {
        input: cfg.room.obs_len(),
        ..MlpShape::default()
    }
}

fn synthetic_manifest(cfg: &RunConfig) -> Result<Manifest> {
    Manifest::synthetic(&cfg.profiles, cfg.n_train, cfg.n_test, cfg.data_seed())
}

/// Pool index from `data_dir`, or an in-memory synthetic one when allowed.
fn manifest(cfg: &RunConfig) -> Result<Manifest> {
    let path = cfg.data_dir().join(MANIFEST_FILE);
    if path.exists() {
        let m = Manifest::read(&path)?;
        if m.profiles.len() != cfg.room.n_speakers {
            return Err(Error::Config(format!(
                "{} lists {} speakers but the config has {}",
                path.display(),
                m.profiles.len(),
                cfg.room.n_speakers
            )));
        }
        Ok(m)
    } else if cfg.on_the_fly {
        eprintln!("no manifest at {}; synthesizing pools from the config", path.display());
        synthetic_manifest(cfg)
    } else {
        Err(Error::Config(format!(
            "no manifest at {} and data.on_the_fly is false; run gen-data first",
            path.display()
        )))
    }
}

fn pools(cfg: &RunConfig, manifest: &Manifest, partition: Partition) -> Result<Vec<Arc<UtterancePool>>> {
    Ok(manifest
        .build_partition(partition, cfg.room.sample_rate, &cfg.data_dir())?
        .into_iter()
        .map(Arc::new)
        .collect())
}

fn targets(cfg: &RunConfig) -> Vec<usize> {
    if cfg.eval.target_rotation {
        (0..cfg.room.n_speakers).collect()
    } else {
        vec![cfg.room.target_index]
    }
}

pub fn target_dir(cfg: &RunConfig, target: usize) -> PathBuf {
    cfg.checkpoint_dir().join(format!("target-{target}"))
}

/// Writes via a temporary file so an interrupted run never leaves a torn file.
fn replace_file(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension("tmp");
    write(&tmp)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn gen_data(cfg: &RunConfig) -> Result<()> {
    let dir = cfg.data_dir();
    fs::create_dir_all(&dir)?;
    let mut m = synthetic_manifest(cfg)?;
    if cfg.export_wav {
        let built = [Partition::Train, Partition::Test]
            .map(|part| m.build_partition(part, cfg.room.sample_rate, &dir));
        let [train, test] = built;
        let (train, test) = (train?, test?);
        let mut counters = std::collections::HashMap::new();
        for clip in &mut m.clips {
            let speaker = m.profiles.iter().position(|p| p.speaker_id == clip.speaker_id).unwrap();
            let k = counters.entry((speaker, clip.partition)).or_insert(0usize);
            let pool = match clip.partition {
                Partition::Train => &train[speaker],
                Partition::Test => &test[speaker],
            };
            let rel = PathBuf::from("wav")
                .join(&clip.speaker_id)
                .join(format!("{}-{:04}.wav", clip.partition.as_str(), *k));
            fs::create_dir_all(dir.join(rel.parent().unwrap()))?;
            save_wav(&pool.clips()[*k], dir.join(&rel), WavEncoding::Float32)?;
            clip.source = ClipSource::Wav { path: rel };
            *k += 1;
        }
    }
    let path = dir.join(MANIFEST_FILE);
    m.write(&path)?;
    eprintln!(
        "wrote {} ({} speakers, {} train / {} test utterances each{})",
        path.display(),
        m.profiles.len(),
        cfg.n_train,
        cfg.n_test,
        if cfg.export_wav { ", WAV export" } else { "" }
    );
    Ok(())
}

fn keep_stats_through(path: &Path, updates: usize) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let mut kept = String::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        let v: serde_json::Value = serde_json::from_str(&line)?;
        if v["update"].as_u64().is_some_and(|u| u as usize <= updates) {
            kept.push_str(&line);
            kept.push('\n');
        }
    }
    fs::write(path, kept)?;
    Ok(())
}

fn save_state(dir: &Path, trainer: &Trainer) -> Result<()> {
    replace_file(&dir.join("latest.params"), |p| save_params(trainer.params(), p))?;
    replace_file(&dir.join("latest.adam"), |p| save_adam(trainer.adam(), p))?;
    replace_file(&dir.join("progress.json"), |p| {
        Ok(fs::write(p, serde_json::to_string_pretty(trainer.progress())? + "\n")?)
    })
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let mut m = manifest(cfg)?;
    if cfg.train_utterances > 0 {
        m = m.with_train_limit(cfg.train_utterances);
    }
    let train_pools = pools(cfg, &m, Partition::Train)?;
    let shape = network_shape(cfg);
    let (init_seed, run_seed) = agent_seeds(cfg.seed);
    for target in targets(cfg) {
        let dir = target_dir(cfg, target);
        fs::create_dir_all(&dir)?;
        let mut room = cfg.room.clone();
        room.target_index = target;
        let factory = EnvFactory::new(room, train_pools.clone());
        let progress_path = dir.join("progress.json");
        let stats_path = dir.join("stats.jsonl");
        let mut trainer = if cfg.resume && progress_path.exists() {
            let progress: TrainProgress = serde_json::from_str(&fs::read_to_string(&progress_path)?)?;
            let params = load_params_expecting(dir.join("latest.params"), shape)?;
            let adam = load_adam(dir.join("latest.adam"))?;
            keep_stats_through(&stats_path, progress.updates)?;
            eprintln!("target {target}: resuming after update {}", progress.updates);
            Trainer::resume(factory, params, adam, cfg.ppo.clone(), run_seed, progress)?
        } else {
            if cfg.resume {
                eprintln!("target {target}: no checkpoint in {}; starting fresh", dir.display());
            }
            if stats_path.exists() {
                fs::remove_file(&stats_path)?;
            }
            Trainer::new(factory, MlpParams::init(shape, init_seed), cfg.ppo.clone(), run_seed)?
        };
        let mut stats_file = fs::OpenOptions::new().create(true).append(true).open(&stats_path)?;
        let n_updates = cfg.ppo.n_updates();
        while !trainer.is_done() {
            let s = trainer.step()?;
            writeln!(stats_file, "{}", serde_json::to_string(&s)?)?;
            stats_file.flush()?;
            eprintln!(
                "target {target} update {}/{n_updates} steps {} return {:.3} success {:.3} (rollout {:.3}) \
                 policy {:.4} value {:.4} entropy {:.3} clip {:.3}",
                s.update,
                s.env_steps,
                s.mean_episode_reward,
                s.success_rate,
                s.rollout_success_rate,
                s.policy_loss,
                s.value_loss,
                s.entropy,
                s.clip_fraction
            );
            if s.update % cfg.checkpoint_every == 0 || trainer.is_done() {
                save_state(&dir, &trainer)?;
                save_params(trainer.params(), dir.join(format!("update-{:06}.params", s.update)))?;
            }
        }
        save_state(&dir, &trainer)?;
        save_params(trainer.params(), dir.join("final.params"))?;
        println!(
            "target {target}: trained {} steps, checkpoint {}",
            trainer.progress().env_steps,
            dir.join("final.params").display()
        );
    }
    Ok(())
}

fn report_name(cfg: &RunConfig) -> String {
    let mut name = match cfg.eval.policy_mode {
        PolicyMode::Random => "baseline".to_string(),
        PolicyMode::Trained => "eval".to_string(),
    };
    if let Some(p) = cfg.eval.pitch_shift {
        name.push_str(&format!("-pitch-{}-{}", p.min_pct, p.max_pct));
    }
    name
}

fn print_report(label: &str, r: &EvalReport) {
    let counts: Vec<String> = r
        .outcome_counts()
        .iter()
        .map(|(o, n)| format!("{}={n}", serde_json::to_value(o).unwrap().as_str().unwrap()))
        .collect();
    eprintln!("{label}: {} episodes, {}", r.episodes.len(), counts.join(" "));
    for t in &r.per_target {
        eprintln!(
            "{label}: target {} ({}) {}/{} = {:.3}",
            t.target, t.speaker_id, t.successes, t.n_episodes, t.success_rate
        );
    }
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    let dir = cfg.report_dir();
    fs::create_dir_all(&dir)?;
    if cfg.few_shot_utterances > 0 {
        return few_shot(cfg, &dir);
    }
    let m = manifest(cfg)?;
    let factory = EnvFactory::new(cfg.room.clone(), pools(cfg, &m, Partition::Test)?);
    let seed = eval_seed(cfg.seed);
    let report = match cfg.eval.policy_mode {
        PolicyMode::Random => run_eval(&factory, Policy::Random, &cfg.eval, seed)?,
        PolicyMode::Trained => {
            let shape = network_shape(cfg);
            let agents = match &cfg.checkpoint {
                Some(path) => {
                    if cfg.eval.target_rotation {
                        return Err(Error::Config(
                            "eval.checkpoint names one network; it cannot be combined with eval.target_rotation".into(),
                        ));
                    }
                    vec![load_params_expecting(path, shape)?]
                }
                None => targets(cfg)
                    .into_iter()
                    .map(|t| load_params_expecting(target_dir(cfg, t).join("final.params"), shape))
                    .collect::<Result<_>>()?,
            };
            run_eval(&factory, Policy::Trained(&agents), &cfg.eval, seed)?
        }
    };
    let name = report_name(cfg);
    write_report(&report, dir.join(format!("{name}.json")))?;
    write_summary(&summarize(&[(&name, &report)]), dir.join(format!("{name}.csv")))?;
    print_report(&name, &report);
    println!("success_rate {:.4}", report.mean_target_success_rate);
    Ok(())
}

fn few_shot(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let fs_cfg = FewShotConfig {
        n_train: cfg.n_train,
        n_test: cfg.n_test,
        few_shot_utterances: cfg.few_shot_utterances,
        data_seed: cfg.data_seed(),
        eval: cfg.eval.clone(),
    };
    let r = run_few_shot_experiment(&cfg.profiles, &cfg.room, &cfg.ppo, network_shape(cfg), &fs_cfg, cfg.seed)?;
    write_report(&r.full, dir.join("few-shot-full.json"))?;
    write_report(&r.few_shot, dir.join("few-shot-reduced.json"))?;
    let full_label = format!("train-{}", r.train_pool_sizes[0]);
    let few_label = format!("train-{}", r.train_pool_sizes[1]);
    write_summary(
        &summarize(&[(&full_label, &r.full), (&few_label, &r.few_shot)]),
        dir.join("few-shot.csv"),
    )?;
    print_report(&full_label, &r.full);
    print_report(&few_label, &r.few_shot);
    println!(
        "success_rate full {:.4} few_shot {:.4}",
        r.full.mean_target_success_rate, r.few_shot.mean_target_success_rate
    );
    Ok(())
}
