//! The six subcommands. Each validates its whole configuration and every
//! input it depends on before touching the output directory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use hddpg_core::armsim::{ArmEnv, DemoTrajectory, Frame};
use hddpg_core::ddpg::{evaluate_policy, Agent, ExplorationMode, Task};
use hddpg_core::heuristic::Trajectory;
use hddpg_core::imitation::{
    augment, build_dataset, evaluate, read_manifest, split_dataset, train_imitation, write_manifest,
    AugmentConfig, ImitationNet, LabeledFrame, ManifestEntry,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, WithPath};
use crate::pipeline::{self, median, RunSummary};

/// Where every artifact lives under the output root.
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.root.join("dataset")
    }

    pub fn manifest(&self) -> PathBuf {
        self.dataset_dir().join("manifest.txt")
    }

    pub fn imitation_dir(&self) -> PathBuf {
        self.root.join("imitation")
    }

    pub fn weights(&self) -> PathBuf {
        self.imitation_dir().join("weights.hdpw")
    }

    pub fn demo_dir(&self) -> PathBuf {
        self.root.join("demo")
    }

    pub fn demo_file(&self) -> PathBuf {
        self.demo_dir().join("demo.txt")
    }

    pub fn grid_map(&self) -> PathBuf {
        self.demo_dir().join("grid_map.txt")
    }

    pub fn run_dir(&self, mode: ExplorationMode, seed: u64) -> PathBuf {
        self.root.join("policy").join(format!("{mode}-seed{seed}"))
    }

    pub fn evaluation_dir(&self) -> PathBuf {
        self.root.join("evaluation")
    }

    pub fn compare_dir(&self) -> PathBuf {
        self.root.join("compare")
    }
}

fn require(path: &Path, hint: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{} not found; {hint}", path.display())))
    }
}

fn refuse_existing(path: &Path, overwrite: bool) -> CliResult<()> {
    if path.exists() && !overwrite {
        return Err(CliError::Config(format!(
            "{} already exists; pass --overwrite to replace it",
            path.display()
        )));
    }
    Ok(())
}

/// Empties (with `--overwrite`) and recreates an output directory.
fn fresh_dir(path: &Path) -> CliResult<()> {
    if path.exists() {
        fs::remove_dir_all(path).at(path)?;
    }
    fs::create_dir_all(path).at(path)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).at(path)?))
}

fn write_lines(path: &Path, header: &str, rows: &[String]) -> CliResult<()> {
    let mut w = create(path)?;
    writeln!(w, "{header}").at(path)?;
    for r in rows {
        writeln!(w, "{r}").at(path)?;
    }
    w.flush().at(path)
}

fn write_frame(path: &Path, frame: &Frame) -> CliResult<()> {
    let mut w = create(path)?;
    frame.write_pgm(&mut w).at(path)?;
    w.flush().at(path)
}

fn sha256_hex(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path).at(path)?)))
}

fn load_net(cfg: &RunConfig, path: &Path) -> CliResult<ImitationNet> {
    let mut r = BufReader::new(File::open(path).at(path)?);
    ImitationNet::read_from(cfg.imitation_arch(), &mut r).at(path)
}

fn load_demo(layout: &Layout) -> CliResult<(DemoTrajectory, Trajectory)> {
    let (demo_path, map_path) = (layout.demo_file(), layout.grid_map());
    let demo = DemoTrajectory::read_text(BufReader::new(File::open(&demo_path).at(&demo_path)?)).at(&demo_path)?;
    let map = Trajectory::read_text(BufReader::new(File::open(&map_path).at(&map_path)?)).at(&map_path)?;
    Ok((demo, map))
}

fn require_demo(layout: &Layout) -> CliResult<()> {
    require(&layout.demo_file(), "run record-demo first")?;
    require(&layout.grid_map(), "run record-demo first")
}

/// Loads the demonstration and, when asked, the imitation net, and checks
/// both against the episode length before anything is written.
fn load_task(cfg: &RunConfig, layout: &Layout, with_net: bool) -> CliResult<Task> {
    require_demo(layout)?;
    let net = if with_net {
        require(&layout.weights(), "run train-imitation first")?;
        Some(load_net(cfg, &layout.weights())?)
    } else {
        None
    };
    let (demo, map) = load_demo(layout)?;
    pipeline::make_task(cfg, demo, map, net)
}

pub fn gen_dataset(cfg: &RunConfig, overwrite: bool) -> CliResult<()> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out_dir);
    let dir = layout.dataset_dir();
    refuse_existing(&dir, overwrite)?;
    let env = ArmEnv::new(cfg.arm.clone())?;
    let data = build_dataset(&env, cfg.n_per_cell, &cfg.subjects, cfg.seed)?;
    fresh_dir(&dir)?;
    fs::create_dir_all(dir.join("frames")).at(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa5a5);
    let mut entries = Vec::with_capacity(data.len());
    for (i, lf) in data.iter().enumerate() {
        let rel = format!("frames/{i:05}.pgm");
        let frame = if cfg.store_augmented {
            let ops = AugmentConfig::random_subset(&mut rng);
            augment(&lf.frame, &ops, rng.random())?
        } else {
            lf.frame.clone()
        };
        write_frame(&dir.join(&rel), &frame)?;
        entries.push(ManifestEntry {
            path: rel,
            subject: lf.subject,
            label: lf.label,
            marker_px: lf.marker_px,
        });
    }
    let path = layout.manifest();
    let mut w = create(&path)?;
    write_manifest(&mut w, &entries).at(&path)?;
    w.flush().at(&path)?;
    println!("wrote {} frames and {}", entries.len(), path.display());
    Ok(())
}

fn load_dataset(layout: &Layout) -> CliResult<Vec<LabeledFrame>> {
    let path = layout.manifest();
    let entries = read_manifest(BufReader::new(File::open(&path).at(&path)?)).at(&path)?;
    entries
        .into_iter()
        .map(|e| {
            let fp = layout.dataset_dir().join(&e.path);
            let frame = Frame::read_pgm(&mut BufReader::new(File::open(&fp).at(&fp)?)).at(&fp)?;
            Ok(LabeledFrame {
                frame,
                label: e.label,
                subject: e.subject,
                marker_px: e.marker_px,
            })
        })
        .collect()
}

pub fn train_imitation_cmd(cfg: &RunConfig, overwrite: bool) -> CliResult<()> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out_dir);
    require(&layout.manifest(), "run gen-dataset first")?;
    let dir = layout.imitation_dir();
    refuse_existing(&dir, overwrite)?;
    let data = load_dataset(&layout)?;
    let (train, val) = split_dataset(data, cfg.val_fraction, cfg.seed)?;
    let mut net = ImitationNet::new(cfg.imitation_arch(), &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
    let log = train_imitation(&mut net, &train, &val, &cfg.imitation, cfg.seed)?;
    fresh_dir(&dir)?;
    let weights = layout.weights();
    let mut w = create(&weights)?;
    net.write_to(&mut w).at(&weights)?;
    w.flush().at(&weights)?;
    let csv = dir.join("train.csv");
    let mut w = create(&csv)?;
    log.write_csv(&mut w).at(&csv)?;
    w.flush().at(&csv)?;

    let last = log.last().ok_or_else(|| CliError::Internal("no epochs ran".into()))?;
    let (held_out, acc) = if val.is_empty() {
        ("training", last.train_acc)
    } else {
        ("validation", last.val_acc)
    };
    if !val.is_empty() {
        let reloaded = load_net(cfg, &weights)?;
        if evaluate(&reloaded, &val)?.1 != acc {
            return Err(CliError::Internal("reloaded weights disagree with the trained net".into()));
        }
    }
    println!("final {held_out} accuracy {acc:.4} after {} epochs", log.epochs.len());
    if acc < cfg.val_floor {
        return Err(CliError::Gate(format!(
            "{held_out} accuracy {acc:.4} is below the floor {}",
            cfg.val_floor
        )));
    }
    Ok(())
}

pub fn record_demo_cmd(cfg: &RunConfig, overwrite: bool) -> CliResult<()> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out_dir);
    require(&layout.weights(), "run train-imitation first")?;
    let dir = layout.demo_dir();
    refuse_existing(&dir, overwrite)?;
    let net = load_net(cfg, &layout.weights())?;
    let rec = pipeline::record_demo(cfg, &net)?;
    fresh_dir(&dir)?;
    fs::create_dir_all(dir.join("frames")).at(&dir)?;
    for (t, frame) in rec.frames.iter().enumerate() {
        write_frame(&dir.join(format!("frames/t{t:03}.pgm")), frame)?;
    }
    let path = layout.demo_file();
    let mut w = create(&path)?;
    rec.demo.write_text(&mut w).at(&path)?;
    w.flush().at(&path)?;
    let path = layout.grid_map();
    let mut w = create(&path)?;
    rec.map.write_text(&mut w).at(&path)?;
    w.flush().at(&path)?;
    let first = rec.map.cells()[0];
    let last = rec.map.cells()[rec.map.len() - 1];
    println!(
        "recorded {} demo of {} steps, cells ({},{}) to ({},{})",
        cfg.pattern,
        rec.demo.len(),
        first.row(),
        first.col(),
        last.row(),
        last.col()
    );
    Ok(())
}

fn write_checkpoint(agent: &Agent, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    agent.write_checkpoint(&mut w).at(path)?;
    w.flush().at(path)
}

pub fn train_policy(cfg: &RunConfig, overwrite: bool) -> CliResult<()> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out_dir);
    let task = load_task(cfg, &layout, cfg.mode == ExplorationMode::Heuristic)?;
    let dir = layout.run_dir(cfg.mode, cfg.seed);
    refuse_existing(&dir, overwrite)?;
    fresh_dir(&dir)?;
    fs::create_dir_all(dir.join("checkpoints")).at(&dir)?;
    fs::write(dir.join("config.txt"), cfg.to_text()).at(&dir)?;

    let joints = cfg.arm.joints();
    let ep_path = dir.join("episodes.csv");
    let step_path = dir.join("steps.csv");
    let mut episodes = create(&ep_path)?;
    let mut steps = create(&step_path)?;
    writeln!(episodes, "{}", pipeline::EPISODE_CSV_HEADER).at(&ep_path)?;
    writeln!(steps, "{}", pipeline::step_csv_header(joints)).at(&step_path)?;
    let mut successes = 0;
    let ts = pipeline::train_run(cfg, &task, cfg.mode, cfg.seed, |stats, ts| {
        writeln!(episodes, "{}", pipeline::episode_csv_row(stats)).at(&ep_path)?;
        for row in pipeline::step_csv_rows(stats, joints) {
            writeln!(steps, "{row}").at(&step_path)?;
        }
        successes += usize::from(stats.success);
        let done = stats.episode + 1;
        if cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 {
            write_checkpoint(&ts.agent, &dir.join(format!("checkpoints/episode-{done:05}.hdpw")))?;
        }
        Ok(())
    })?;
    episodes.flush().at(&ep_path)?;
    steps.flush().at(&step_path)?;
    write_checkpoint(&ts.agent, &dir.join("final.hdpw"))?;
    println!(
        "trained {} episodes in {} mode, {successes} successful; log at {}",
        cfg.episodes,
        cfg.mode,
        ep_path.display()
    );
    Ok(())
}

pub fn evaluate_cmd(cfg: &RunConfig, checkpoint: Option<&Path>, overwrite: bool) -> CliResult<()> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out_dir);
    let ckpt = checkpoint.map_or_else(|| layout.run_dir(cfg.mode, cfg.seed).join("final.hdpw"), Path::to_path_buf);
    require(&ckpt, "train a policy or pass --checkpoint")?;
    let task = load_task(cfg, &layout, false)?;
    let stem = ckpt.file_stem().and_then(|s| s.to_str()).unwrap_or("checkpoint");
    let parent = ckpt
        .parent()
        .and_then(Path::file_name)
        .and_then(|s| s.to_str())
        .unwrap_or("run");
    let report_path = layout.evaluation_dir().join(format!("{parent}-{stem}.csv"));
    refuse_existing(&report_path, overwrite)?;

    let mut agent = Agent::new(cfg.agent.clone(), cfg.arm.joints(), &mut ChaCha8Rng::seed_from_u64(0))?;
    agent
        .read_checkpoint(&mut BufReader::new(File::open(&ckpt).at(&ckpt)?))
        .at(&ckpt)?;
    let report = evaluate_policy(&agent, &task, cfg.eval_episodes, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
    fs::create_dir_all(layout.evaluation_dir()).at(&layout.evaluation_dir())?;
    write_lines(
        &report_path,
        "checkpoint,episodes,success_rate,mean_final_distance,mean_deviation",
        &[format!(
            "{},{},{},{},{}",
            ckpt.display(),
            report.episodes,
            report.success_rate,
            report.mean_final_distance,
            report.mean_deviation
        )],
    )?;
    println!(
        "success rate {:.3}, mean final distance {:.4}, mean deviation {:.4} over {} episodes",
        report.success_rate, report.mean_final_distance, report.mean_deviation, report.episodes
    );
    Ok(())
}

pub fn compare(cfg: &RunConfig, overwrite: bool) -> CliResult<()> {
    cfg.validate()?;
    if cfg.compare_seeds < 3 {
        return Err(CliError::Config(format!(
            "compare needs at least 3 seeds, got {}",
            cfg.compare_seeds
        )));
    }
    let layout = Layout::new(&cfg.out_dir);
    let task = load_task(cfg, &layout, true)?;
    let dir = layout.compare_dir();
    refuse_existing(&dir, overwrite)?;
    fresh_dir(&dir)?;

    let demo_hash = sha256_hex(&layout.demo_file())?;
    let map_hash = sha256_hex(&layout.grid_map())?;
    let modes = [ExplorationMode::GaussianNoise, ExplorationMode::Heuristic];
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for k in 0..cfg.compare_seeds as u64 {
        let seed = cfg.seed + k;
        for mode in modes {
            // both arms must train against byte-identical demonstrations
            let (d, m) = (sha256_hex(&layout.demo_file())?, sha256_hex(&layout.grid_map())?);
            if d != demo_hash || m != map_hash {
                return Err(CliError::Internal("demo files changed during the comparison".into()));
            }
            let run_dir = dir.join(format!("{mode}-seed{seed}"));
            fs::create_dir_all(&run_dir).at(&run_dir)?;
            let mut stats = Vec::with_capacity(cfg.episodes);
            let mut csv = vec![];
            pipeline::train_run(cfg, &task, mode, seed, |s, _| {
                csv.push(pipeline::episode_csv_row(s));
                stats.push(s.clone());
                Ok(())
            })?;
            write_lines(&run_dir.join("episodes.csv"), pipeline::EPISODE_CSV_HEADER, &csv)?;
            let summary = RunSummary::from_stats(cfg, mode, seed, &stats);
            eprintln!(
                "{mode} seed {seed}: episodes to threshold {}",
                summary
                    .episodes_to_threshold
                    .map_or("not reached".to_string(), |e| e.to_string())
            );
            rows.push(format!(
                "run,{mode},{seed},{},{},{},{d},{m}",
                summary.censored(cfg.episodes),
                u8::from(summary.episodes_to_threshold.is_some()),
                summary.reward_auc
            ));
            summaries.push(summary);
        }
    }
    let mut medians = Vec::new();
    for mode in modes {
        let runs: Vec<&RunSummary> = summaries.iter().filter(|s| s.mode == mode).collect();
        let ett: Vec<f64> = runs.iter().map(|s| s.censored(cfg.episodes) as f64).collect();
        let auc: Vec<f64> = runs.iter().map(|s| s.reward_auc).collect();
        let reached = runs.iter().filter(|s| s.episodes_to_threshold.is_some()).count();
        let med = median(&ett);
        rows.push(format!("summary,{mode},,{med},{reached},{},,", median(&auc)));
        medians.push(med);
    }
    write_lines(
        &dir.join("runs.csv"),
        "kind,mode,seed,episodes_to_threshold,reached,reward_auc,demo_sha256,grid_map_sha256",
        &rows,
    )?;
    let ratio = medians[1] / medians[0];
    let summary = format!(
        "seeds = {}\nepisodes = {}\ngaussian_noise_median = {}\nheuristic_median = {}\nratio_heuristic_over_noise = {ratio}\n",
        cfg.compare_seeds, cfg.episodes, medians[0], medians[1]
    );
    fs::write(dir.join("summary.txt"), &summary).at(&dir)?;
    print!("{summary}");
    Ok(())
}
