use std::path::Path;
use std::process::{Command, Output};

fn rvr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvr")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CONFIG: &str = r#"
seeds = [1, 2]
[problem]
kind = "pca"
seed = 7
n = 80
d = 6
r = 2
[budget]
epochs = 2
iterations = 30
[[optimizer]]
algorithm = "R-SVRG"
eta = 0.05
[[optimizer]]
algorithm = "R-AbaSRG"
eta = 0.05
c_beta = 100.0
"#;

#[test]
fn gen_then_oracle_on_the_saved_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("spd.bin");
    let out = rvr(&["gen", "spd", "--out", path(&data), "--n", "20", "--d", "3", "--cn", "5", "--seed", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data.is_file());

    let json = dir.path().join("oracle.json");
    let out = rvr(&["oracle", "--problem", "spd", "--data", path(&data), "--out", path(&json)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(v["grad_norm"].as_f64().unwrap() <= 1e-8);

    let out = rvr(&["oracle", "--problem", "pca", "--data", path(&data), "--out", path(&json)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn check_grad_reports_json() {
    let out = rvr(&["check-grad", "--problem", "pca", "--n", "50", "--d", "5", "--r", "2", "--seed", "3", "--points", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["points"], 3);
    assert!(v["max_rel_error"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn run_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out_dir = dir.path().join("out");
    let out = rvr(&["run", "--config", path(&cfg), "--out", path(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_dir(out_dir.join("traces")).unwrap().count(), 4);
    let header = std::fs::read_to_string(out_dir.join("traces/R-SVRG_rep0.csv")).unwrap();
    assert!(header.starts_with(
        "algorithm,rep,epoch,step,ifo,wall_ms,cost,grad_norm,gap,test_mse,batch_size,step_size\n"
    ));
    assert_eq!(std::fs::read_to_string(out_dir.join("summary.csv")).unwrap().lines().count(), 5);
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let text = "seeds = [1]\n[problem]\nkind = \"spd\"\nn = 20\nd = 3\ncn = 10.0\n[budget]\nepochs = 40\n\
                [[optimizer]]\nalgorithm = \"R-SVRG\"\neta = 1000.0\n";
    std::fs::write(&cfg, text).unwrap();
    let out = rvr(&["run", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, CONFIG.replace("eta = 0.05\n[[optimizer]]", "eta = 0.05\ntypo = 1\n[[optimizer]]")).unwrap();
    let out = rvr(&["run", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo"));

    assert_eq!(code(&rvr(&["gen", "circle", "--out", "x.bin"])), 2);
    assert_eq!(code(&rvr(&["run", "--config", path(&cfg)])), 2);
    assert_eq!(code(&rvr(&["gen", "pca", "--out", path(&dir.path().join("x.bin")), "--n", "3", "--d", "5", "--r", "9"])), 2);
}

#[test]
fn sweep_prints_a_tuned_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let text = format!("{CONFIG}[sweep]\neta_grid = [0.01, 0.05]\nc_beta_grid = [10.0, 100.0]\n");
    std::fs::write(&cfg, text).unwrap();
    let tuned = dir.path().join("tuned.toml");
    let out = rvr(&["sweep", "--config", path(&cfg), "--out", path(&tuned)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&tuned).unwrap();
    assert_eq!(text, String::from_utf8(out.stdout).unwrap());
    assert!(!text.contains("[sweep]"));
}
