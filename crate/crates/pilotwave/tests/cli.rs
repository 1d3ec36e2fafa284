use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pilotwave::runner::Manifest;
use pilotwave::{ExperimentConfig, EXPERIMENTS};

fn pilotwave(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pilotwave")).args(args).current_dir(cwd).env_remove("PILOTWAVE_OUT").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL_EPRB: &str = r#"
experiment = "eprb"

[eprb]
deltas = [0.0, "pi/2", "pi"]
n_pairs = 200
seed = 5
chsh = [0.0, "pi/2", "pi/4", "3pi/4"]

[eprb.grid]
half_width = [32.0]
nodes = [256]
absorbing_width = 1.5
"#;

#[test]
fn list_names_every_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pilotwave(&["list"], tmp.path());
    assert!(o.status.success());
    let text = stdout(&o);
    for k in EXPERIMENTS {
        assert!(text.contains(k.name()), "{} missing from\n{text}", k.name());
    }
}

#[test]
fn shipped_configs_validate() {
    let tmp = tempfile::tempdir().unwrap();
    for k in EXPERIMENTS {
        ExperimentConfig::parse(k.default_config()).unwrap();
        let o = pilotwave(&["validate", k.name()], tmp.path());
        assert!(o.status.success(), "{}: {}", k.name(), stderr(&o));
        assert!(stdout(&o).trim_end().ends_with("ok"));
    }
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let o = pilotwave(&["validate", path.to_str().unwrap()], tmp.path());
        assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
    }
}

#[test]
fn validate_warns_on_coarse_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let text = EXPERIMENTS[1].default_config().replace("nodes = [1024]", "nodes = [128]");
    fs::write(tmp.path().join("coarse.toml"), text).unwrap();
    let o = pilotwave(&["validate", "coarse.toml"], tmp.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("warning: de Broglie wavelength"), "{out}");
    assert!(out.contains("2.0944"), "{out}");
    assert!(out.trim_end().ends_with("ok"));
}

#[test]
fn invalid_parameter_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let text = EXPERIMENTS[1].default_config().replace("sigma0 = 1.0", "sigma0 = -1.0");
    fs::write(tmp.path().join("neg.toml"), text).unwrap();
    for cmd in ["validate", "run"] {
        let o = pilotwave(&[cmd, "neg.toml"], tmp.path());
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("gaussian_linear.packet.sigma0"), "{}", stderr(&o));
    }
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn missing_and_unknown_fields_are_named() {
    let tmp = tempfile::tempdir().unwrap();
    let base = EXPERIMENTS[1].default_config();
    let missing: String = base.lines().filter(|l| !l.starts_with("dt =")).map(|l| format!("{l}\n")).collect();
    fs::write(tmp.path().join("missing.toml"), missing).unwrap();
    let o = pilotwave(&["validate", "missing.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gaussian_linear.integrator: missing field `dt`"), "{}", stderr(&o));

    fs::write(tmp.path().join("typo.toml"), base.replace("bins = 100", "binz = 100")).unwrap();
    let o = pilotwave(&["validate", "typo.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field `binz`"), "{}", stderr(&o));
}

#[test]
fn unknown_experiment_suggests_nearest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pilotwave(&["run", "stern-gerlah"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean `stern-gerlach`"), "{}", stderr(&o));

    fs::write(tmp.path().join("x.toml"), "experiment = \"epr-b\"\n").unwrap();
    let o = pilotwave(&["validate", "x.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean `eprb`"), "{}", stderr(&o));
}

#[test]
fn eprb_run_writes_correlations_and_chsh() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("small.toml"), SMALL_EPRB).unwrap();
    let o = pilotwave(&["run", "small.toml", "--quiet"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let dir = tmp.path().join("runs/small");
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    let c = summary["correlations"].as_array().unwrap();
    assert_eq!(c.len(), 3);
    assert_eq!(c[0]["e"].as_f64().unwrap(), -1.0);
    assert_eq!(c[2]["e"].as_f64().unwrap(), 1.0);
    assert_eq!(c[1]["n"].as_u64().unwrap(), 200);
    assert!(summary["chsh"]["s"].as_f64().unwrap() > 2.0);
    let records = fs::read_to_string(dir.join("records.csv")).unwrap();
    assert!(records.starts_with("pair_id,delta,theta_hidden,phi_hidden,outcome_a,outcome_b\n"));
    assert_eq!(records.lines().count(), 601);
    let m = manifest(&dir);
    assert_eq!(m.experiment, "eprb");
    assert_eq!(m.files.len(), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("small.toml"), SMALL_EPRB).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = pilotwave(&["run", "small.toml", "--out", a.to_str().unwrap(), "--threads", "1"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = pilotwave(&["run", "small.toml", "--out", b.to_str().unwrap(), "--threads", "3"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.config_hash, mb.config_hash);
    for f in &ma.files {
        assert_eq!(fs::read(a.join(&f.path)).unwrap(), fs::read(b.join(&f.path)).unwrap());
    }
    // A rerun replaces the previous run directory.
    let o = pilotwave(&["run", "small.toml", "--out", a.to_str().unwrap()], tmp.path());
    assert!(o.status.success());
    assert_eq!(manifest(&a).files, ma.files);
}

#[test]
fn output_dir_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_EPRB}\n").replace("experiment = \"eprb\"", "experiment = \"eprb\"\n\n[output]\ndir = \"from-config\"");
    fs::write(tmp.path().join("c.toml"), &text).unwrap();
    assert!(pilotwave(&["run", "c.toml", "--quiet"], tmp.path()).status.success());
    assert!(tmp.path().join("from-config/manifest.json").is_file());
    assert!(pilotwave(&["run", "c.toml", "--quiet", "--out", "cli"], tmp.path()).status.success());
    assert!(tmp.path().join("cli/manifest.json").is_file());
    let o = Command::new(env!("CARGO_BIN_EXE_pilotwave"))
        .args(["run", "small.toml", "--quiet"])
        .current_dir(tmp.path())
        .env("PILOTWAVE_OUT", tmp.path().join("env"))
        .output()
        .unwrap();
    // small.toml does not exist here yet.
    assert_eq!(o.status.code(), Some(2));
    fs::write(tmp.path().join("small.toml"), SMALL_EPRB).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pilotwave"))
        .args(["run", "small.toml", "--quiet"])
        .current_dir(tmp.path())
        .env("PILOTWAVE_OUT", tmp.path().join("env"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("env/small/manifest.json").is_file());
}

#[test]
fn failed_run_leaves_nothing_behind() {
    let tmp = tempfile::tempdir().unwrap();
    // A weak magnet cannot separate the spots; the run itself fails.
    let text = r#"
experiment = "stern-gerlach"

[stern_gerlach]
n_atoms = 2000
dt = 0.05

[stern_gerlach.grid]
half_width = [64.0]
nodes = [512]
absorbing_width = 1.5

[stern_gerlach.magnet]
gradient = 0.05
flight_time = 4.0
"#;
    fs::write(tmp.path().join("weak.toml"), text).unwrap();
    let o = pilotwave(&["run", "weak.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("stern-gerlach failed"), "{}", stderr(&o));
    let runs = tmp.path().join("runs");
    let left: Vec<_> = fs::read_dir(&runs).map(|d| d.map(|e| e.unwrap().file_name()).collect()).unwrap_or_default();
    assert!(left.is_empty(), "{left:?}");

    // A foreign non-empty directory is never replaced.
    let keep = tmp.path().join("keep");
    fs::create_dir(&keep).unwrap();
    fs::write(keep.join("notes.txt"), "mine").unwrap();
    fs::write(tmp.path().join("small.toml"), SMALL_EPRB).unwrap();
    let o = pilotwave(&["run", "small.toml", "--out", "keep"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(fs::read_to_string(keep.join("notes.txt")).unwrap(), "mine");
    assert_eq!(fs::read_dir(&keep).unwrap().count(), 1);
}

#[test]
fn config_hash_ignores_formatting_and_output() {
    let a = ExperimentConfig::parse(SMALL_EPRB).unwrap();
    let reformatted = SMALL_EPRB.replace("n_pairs = 200", "# pairs per offset\nn_pairs   =   200").replace("\"pi\"]", "3.141592653589793]");
    let b = ExperimentConfig::parse(&reformatted).unwrap();
    assert_eq!(a.hash(), b.hash());
    let c = ExperimentConfig { output: pilotwave::config::OutputBlock { dir: Some("x".into()) }, ..a.clone() };
    assert_eq!(a.hash(), c.hash());
    let d = ExperimentConfig::parse(&SMALL_EPRB.replace("seed = 5", "seed = 6")).unwrap();
    assert_ne!(a.hash(), d.hash());
}
