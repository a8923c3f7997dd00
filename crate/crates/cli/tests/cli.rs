use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "seed = 1\nn_per_cell = 2\nimitation_epochs = 1\nval_floor = 0\nepisode_len = 10\n\
                    episodes = 3\nwarmup = 8\nagent_batch_size = 4\ncheckpoint_every = 2\n";

fn hddpg(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_hddpg"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn unknown_key_is_a_config_error_without_side_effects() {
    let dir = tempfile::tempdir().unwrap();
    let o = hddpg(dir.path(), "seed = 1\nbogus = 2\n", &["gen-dataset"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("bogus"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn out_of_range_value_is_rejected_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let o = hddpg(dir.path(), "val_fraction = 1.5\n", &["gen-dataset"]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_prerequisites_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["train-imitation", "record-demo", "train-policy", "evaluate"] {
        let o = hddpg(dir.path(), TINY, &[cmd]);
        assert_eq!(code(&o), 2, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn pipeline_outputs_overwrite_guard_and_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&hddpg(dir.path(), TINY, &["gen-dataset"])), 0);
    let manifest = std::fs::read_to_string(out.join("dataset/manifest.txt")).unwrap();
    assert_eq!(manifest.lines().count(), 100);
    assert_eq!(code(&hddpg(dir.path(), TINY, &["gen-dataset"])), 2);

    assert_eq!(code(&hddpg(dir.path(), TINY, &["train-imitation"])), 0);
    let log = std::fs::read_to_string(out.join("imitation/train.csv")).unwrap();
    assert_eq!(log.lines().count(), 2);

    assert_eq!(code(&hddpg(dir.path(), TINY, &["record-demo"])), 0);
    for f in ["demo/demo.txt", "demo/grid_map.txt"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 10, "{f}");
    }

    let o = hddpg(dir.path(), TINY, &["--mode", "heuristic", "train-policy"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run = out.join("policy/heuristic-seed1");
    let episodes = std::fs::read_to_string(run.join("episodes.csv")).unwrap();
    assert_eq!(episodes.lines().count(), 4);
    assert!(run.join("checkpoints/episode-00002.hdpw").exists());

    let ckpt = std::fs::read(run.join("final.hdpw")).unwrap();
    let o = hddpg(dir.path(), TINY, &["--mode", "heuristic", "evaluate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(run.join("final.hdpw")).unwrap(), ckpt);

    let bad = dir.path().join("bad.hdpw");
    std::fs::write(&bad, &ckpt[..ckpt.len() / 2]).unwrap();
    let o = hddpg(dir.path(), TINY, &["evaluate", "--checkpoint", bad.to_str().unwrap(), "--overwrite"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn accuracy_gate_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TINY.replace("val_floor = 0", "val_floor = 1");
    assert_eq!(code(&hddpg(dir.path(), &cfg, &["gen-dataset"])), 0);
    assert_eq!(code(&hddpg(dir.path(), &cfg, &["train-imitation"])), 5);
}

#[test]
fn compare_needs_three_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = hddpg(dir.path(), &format!("{TINY}compare_seeds = 2\n"), &["compare"]);
    assert_eq!(code(&o), 2);
}
