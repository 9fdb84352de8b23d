use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bogoliubov")).current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn minimize_then_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["minimize", "--output", "run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&tmp.path().join("run/report.json"));
    assert!(report["energy"]["total"].as_f64().unwrap() < -0.5);
    assert_eq!(report["converged"], true);
    assert!(report["trace"].as_array().unwrap().len() > 1);
    assert_eq!(report["config"]["physics"]["mu"], "1");

    let profile = std::fs::read_to_string(tmp.path().join("run/profile.csv")).unwrap();
    let header = profile.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "p,gamma,alpha,A,B");
    assert_eq!(profile.lines().filter(|l| !l.starts_with('#')).count(), 1025);

    let out = run(tmp.path(), &["verify", "run/state.txt", "--output", "check"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&tmp.path().join("check/verification.json"));
    assert_eq!(v["passed"], true);
}

#[test]
fn negative_mu_is_the_vacuum() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["minimize", "--set", "physics.mu=-1"]);
    assert_eq!(code(&out), 0);
    let report = json(&tmp.path().join("report.json"));
    assert_eq!(report["energy"]["total"].as_f64(), Some(0.0));
    assert_eq!(report["rho0"].as_f64(), Some(0.0));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.ini"), "[grid]\nn = many\n").unwrap();
    std::fs::write(tmp.path().join("odd.ini"), "[physics]\nmu 1\n").unwrap();
    for args in [
        &["minimize", "--config", "bad.ini"][..],
        &["minimize", "--config", "odd.ini"],
        &["minimize", "--config", "missing.ini"],
        &["minimize", "--set", "physics.color=red"],
        &["verify", "missing.txt"],
        &["sweep", "--set", "physics.kappa_list=[]"],
        &["sweep"],
        &["fixed-density", "--set", "physics.lambda=-1", "--set", "physics.rho0=1"],
        &["minimize", "--set", "physics.mu_list=1,2"],
        &["frobnicate"],
    ] {
        assert_eq!(code(&run(tmp.path(), args)), 2, "{args:?}");
    }
}

#[test]
fn verify_rejects_edited_states() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = ["--set", "grid.n=256", "--set", "grid.pmax=10"];
    let mut args = vec!["minimize"];
    args.extend(grid);
    assert_eq!(code(&run(tmp.path(), &args)), 0);
    let text = std::fs::read_to_string(tmp.path().join("state.txt")).unwrap();

    // negative gamma on the first data line
    let mut edited = String::new();
    let mut done = false;
    for line in text.lines() {
        if !done && !line.starts_with('#') {
            let cols: Vec<&str> = line.split_whitespace().collect();
            edited.push_str(&format!("{} -1e-3 {}\n", cols[0], cols[2]));
            done = true;
        } else {
            edited.push_str(line);
            edited.push('\n');
        }
    }
    std::fs::write(tmp.path().join("edited.txt"), edited).unwrap();
    let mut args = vec!["verify", "edited.txt"];
    args.extend(grid);
    let out = run(tmp.path(), &args);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("domain"));

    // same file against another grid
    let out = run(tmp.path(), &["verify", "state.txt"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid mismatch"));
}

#[test]
fn sweeps_write_tables_and_states() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["sweep", "--set", "physics.mu_list=[0.5, 1, 2]", "--output", "mu"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(tmp.path().join("mu/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let fraction: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
        assert!(fraction > 0.5);
    }
    for i in 0..3 {
        assert!(tmp.path().join(format!("mu/state_mu_{i:03}.txt")).exists());
    }

    let out = run(tmp.path(), &["sweep", "--set", "physics.kappa_list=0.5,1,2,4,8,16,32", "--output", "k"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("monotone=true"));
    assert!(stdout.contains("stabilized_kappa=4"));
    let csv = std::fs::read_to_string(tmp.path().join("k/sweep.csv")).unwrap();
    let energies: Vec<f64> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(energies.len(), 7);
    assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn fixed_density_closed_form_and_convexity() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["fixed-density", "--set", "physics.lambda=0", "--set", "physics.rho0=1", "--output", "zero"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(tmp.path().join("zero/fixed_density.csv")).unwrap();
    let row = csv.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
    let f: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(f, -0.5);

    let lambdas = "physics.lambda_list=0.001,0.0015,0.002,0.0025,0.003,0.0035,0.004,0.0045,0.005";
    let out = run(tmp.path(), &["fixed-density", "--set", lambdas, "--set", "physics.rho0=auto", "--output", "slice"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(tmp.path().join("slice/fixed_density.csv")).unwrap();
    assert!(csv.lines().last().unwrap().starts_with("# convexity"));
    assert!(csv.contains("status=pass"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let grid = ["--set", "grid.n=256", "--set", "grid.pmax=10", "--output", "out"];
    let lambdas = "physics.lambda_list=0.001,0.002,0.003,0.004";
    for (dir, jobs) in dirs.iter().zip(["1", "4"]) {
        let mut args = vec!["minimize", "--jobs", jobs];
        args.extend(grid);
        assert_eq!(code(&run(dir.path(), &args)), 0);
        let mut args = vec!["fixed-density", "--set", lambdas, "--set", "physics.rho0_list=0.9,1", "--jobs", jobs];
        args.extend(grid);
        assert_eq!(code(&run(dir.path(), &args)), 0);
    }
    for name in ["report.json", "state.txt", "profile.csv", "fixed_density.csv", "fixed_density.json"] {
        let a = std::fs::read(dirs[0].path().join("out").join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join("out").join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn config_file_and_overrides_combine() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("run.ini"),
        "# exponential interaction\n[potential]\nfamily = exponential\nrate = 1\n[grid]\nn = 256\npmax = 10\n[physics]\nmu = 2\n",
    )
    .unwrap();
    let out = run(tmp.path(), &["minimize", "--config", "run.ini", "--set", "physics.mu=1"]);
    assert_eq!(code(&out), 0);
    let report = json(&tmp.path().join("report.json"));
    assert_eq!(report["config"]["potential"]["family"], "exponential");
    assert_eq!(report["mu"].as_f64(), Some(1.0));
    let state = std::fs::read_to_string(tmp.path().join("state.txt")).unwrap();
    assert!(state.contains("# family = exponential"));
}
