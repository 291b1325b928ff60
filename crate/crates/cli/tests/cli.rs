use std::path::Path;
use std::process::Command;

fn qhlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qhlab"))
}

fn run_dirs(out: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn simulate_writes_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sim.cfg");
    std::fs::write(&cfg, "model.variant = fbm\nmodel.H = 0.75\ngrid.n = 32\nmc.m_paths = 5\n").unwrap();
    let out = tmp.path().join("runs");
    let st = qhlab()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--seed", "11", "--threads", "2", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let stdout = String::from_utf8_lossy(&st.stdout);
    assert!(stdout.contains("paths.csv"), "{stdout}");
    let dirs = run_dirs(&out);
    assert_eq!(dirs.len(), 1);
    let name = dirs[0].file_name().unwrap().to_string_lossy().to_string();
    assert!(name.starts_with("simulate-") && name.ends_with("-11"));
    assert!(dirs[0].join("manifest.json").exists());
    assert!(dirs[0].join("path_stats.csv").exists());
}

#[test]
fn invalid_config_exits_with_one_and_lists_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "model.H = 1.5\nnot.a.key = 3\n").unwrap();
    let st = qhlab()
        .args(["smallball", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(1));
    let err = String::from_utf8_lossy(&st.stderr);
    assert!(err.contains("line 1") && err.contains("line 2"), "{err}");
}

#[test]
fn unknown_command_is_rejected() {
    let st = qhlab().args(["fly", "--config", "x.cfg"]).output().unwrap();
    assert!(!st.status.success());
}

#[test]
fn threads_env_fallback_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("rep.cfg");
    std::fs::write(&cfg, "grid.n = 1024\nmc.m_paths = 4\nreplicate.N_blocks = 6\n").unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = tmp.path().join(format!("t{threads}"));
        let st = qhlab()
            .args(["replicate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env("QHLAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        let dir = &run_dirs(&out)[0];
        let m = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
        assert!(m.contains(&format!("\"threads\": {threads}")), "{m}");
        outputs.push(std::fs::read(dir.join("replicate_summary.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn help_lists_config_keys() {
    let st = qhlab().arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&st.stdout);
    assert!(text.contains("replicate.N_blocks") && text.contains("QHLAB_THREADS"), "{text}");
}
