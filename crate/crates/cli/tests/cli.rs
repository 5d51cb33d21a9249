use std::process::Command;

fn ratind() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ratind"))
}

#[test]
fn zero_dim_prints_weak_solution() {
    let out = ratind().args(["zero-dim", "--mode", "weak", "--tau", "0.5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,u");
    assert_eq!(lines.len(), 6);
    assert!(lines[4].ends_with("1.250000000000e0"));
}

#[test]
fn failing_rate_fit_sets_exit_code() {
    let dir = std::env::temp_dir().join(format!("ratind-sweep-{}", std::process::id()));
    let out = ratind()
        .args(["sweep", "--h-levels", "4,8,16", "--tau-levels", "10,20,40", "--fixed-time", "40", "--fixed-space", "32"])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    // the tau-error of the exact problem is purely spatial, so the tau fit fails
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.join("h_sweep.csv")).unwrap();
    assert!(csv.starts_with("level,h,tau,sq_error,slope,pass\n"));
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.join("tau_sweep.dat").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_config_is_an_error() {
    let path = std::env::temp_dir().join(format!("ratind-bad-{}.json", std::process::id()));
    std::fs::write(&path, "{\"n_space\": 1}").unwrap();
    let out = ratind().arg("run").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(&path).unwrap();
}
