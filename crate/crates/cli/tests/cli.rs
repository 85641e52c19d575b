use std::path::Path;
use std::process::{Command, Output};

fn usv_auv(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_usv-auv"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

const QUICK: &[(&str, &str)] = &[("USVAUV_HIDDEN", "16"), ("USVAUV_WARMUP", "50"), ("USVAUV_BATCH", "16")];

fn train(out: &Path, epochs: &str) -> Output {
    usv_auv(&["train", "--epochs", epochs, "--seed", "3", "--out", out.to_str().unwrap()], QUICK)
}

#[test]
fn one_epoch_train_writes_one_metrics_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(dir.path(), "1");
    ok(&out);
    let text = read(&dir.path().join("metrics.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# usv-auv metrics v1");
    assert_eq!(lines[1], "epoch,sdr,ec,arps");
    assert_eq!(lines.len(), 3, "{text}");
    assert!(lines[2].starts_with("0,"));
    assert!(dir.path().join("checkpoint.json").exists());
    assert!(read(&dir.path().join("config.toml")).contains("epochs = 1"));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn repeated_commands_rewrite_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let train_dir = dir.path().join("train");
    ok(&train(&train_dir, "2"));
    let first = snapshot(&train_dir);
    ok(&train(&train_dir, "2"));
    assert_eq!(first, snapshot(&train_dir));

    let ck = train_dir.join("checkpoint.json");
    for sub in ["eval", "compare-positioning", "dump-trajectories"] {
        let out = dir.path().join(sub);
        let args = [sub, "--episodes", "2", "--checkpoint", ck.to_str().unwrap(), "--out", out.to_str().unwrap()];
        ok(&usv_auv(&args, QUICK));
        let first = snapshot(&out);
        ok(&usv_auv(&args, QUICK));
        assert_eq!(first, snapshot(&out), "{sub}");
        assert!(first.len() >= 3, "{sub}: {:?}", first.iter().map(|f| &f.0).collect::<Vec<_>>());
    }
}

#[test]
fn unreadable_or_invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = usv_auv(&["train", "--config", dir.path().join("nope.toml").to_str().unwrap()], &[]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.toml"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\nnot_a_key = 3\n").unwrap();
    let out = usv_auv(&["eval", "--config", bad.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_a_key"));

    let out = usv_auv(&["eval", "--out", dir.path().to_str().unwrap()], &[("USVAUV_BOGUS", "1")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn checkpoint_dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    ok(&train(dir.path(), "1"));
    let ck = dir.path().join("checkpoint.json");
    let out = usv_auv(
        &["eval", "--checkpoint", ck.to_str().unwrap(), "--out", dir.path().join("e").to_str().unwrap()],
        &[("USVAUV_NEAREST_NODES", "3")],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn training_divergence_exits_3_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let mut envs = QUICK.to_vec();
    envs.extend([("USVAUV_LR_CRITIC", "1e200"), ("USVAUV_REWARD_SCALE", "1e150")]);
    let out = usv_auv(&["train", "--epochs", "2", "--out", dir.path().to_str().unwrap()], &envs);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("divergence.txt"), "{stderr}");
    assert!(read(&dir.path().join("divergence.txt")).contains("lr_critic"));
}

#[test]
fn ideal_sea_trace_has_no_current() {
    let dir = tempfile::tempdir().unwrap();
    ok(&usv_auv(&["dump-trajectories", "--sea", "ideal", "--out", dir.path().to_str().unwrap()], &[]));
    let trace = read(&dir.path().join("trace.csv"));
    let mut lines = trace.lines().skip(1);
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "current_speed").unwrap();
    let mut rows = 0;
    for l in lines {
        assert_eq!(l.split(',').nth(col), Some("0"));
        rows += 1;
    }
    assert_eq!(rows, 2 * 100);
}

#[test]
fn single_episode_eval_reports_zero_std() {
    let dir = tempfile::tempdir().unwrap();
    let out = usv_auv(&["eval", "--episodes", "1", "--baseline", "random", "--out", dir.path().to_str().unwrap()], &[]);
    ok(&out);
    let summary = read(&dir.path().join("eval_summary.csv"));
    let sdr = summary.lines().find(|l| l.starts_with("sdr,")).unwrap();
    let fields: Vec<&str> = sdr.split(',').collect();
    assert_eq!(fields[2], "0");
    assert_eq!(fields[3], "1");
}
