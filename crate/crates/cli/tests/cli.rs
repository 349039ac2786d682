use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optocool"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Self {
        let text = fs::read_to_string(path).unwrap();
        assert!(!text.contains('\r'), "{} has CR line endings", path.display());
        let mut lines = text.lines().map(|l| l.split(',').map(String::from).collect::<Vec<_>>());
        let header = lines.next().unwrap();
        Self {
            header,
            rows: lines.collect(),
        }
    }

    fn column(&self, name: &str) -> Vec<&str> {
        let k = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[k].as_str()).collect()
    }
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn transfer_moves_the_excitation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("transfer.toml");
    let o = run(&["transfer", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = Csv::read(&dir.path().join("transfer.csv"));
    assert_eq!(csv.header, ["t", "t_shifted", "omega_p", "delta_s", "delta_c", "delta_a", "N_a", "N_c", "N_b"]);
    let n_a: f64 = csv.column("N_a").last().unwrap().parse().unwrap();
    assert!(n_a >= 0.99, "final N_a = {n_a}");
    assert_eq!(csv.column("t_shifted")[0].parse::<f64>().unwrap(), 0.0);
    let m = manifest(dir.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["pulse"]["omega0"], 0.1);
}

#[test]
fn compare_reports_the_published_stability_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("benchmark.toml");
    let o = run(&["compare", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = Csv::read(&dir.path().join("compare.csv"));
    assert_eq!(csv.rows.len(), 40);
    let expected: Vec<&str> = csv
        .column("g")
        .iter()
        .map(|g| {
            let g: f64 = g.parse().unwrap();
            if [0.6, 0.9, 1.2, 1.5].contains(&g) {
                "unstable"
            } else {
                "stable"
            }
        })
        .collect();
    assert_eq!(csv.column("stability"), expected);
    for (nc, reported) in csv.column("n_min_nc").iter().zip(csv.column("reported_nc")) {
        match reported {
            "unstable" => assert_eq!(*nc, "unstable"),
            r => {
                let (a, b): (f64, f64) = (nc.parse().unwrap(), r.parse().unwrap());
                assert!((a - b).abs() <= 0.01, "{a} vs {b}");
            }
        }
    }
    assert!(csv.column("n_min_sc").iter().all(|v| v.parse::<f64>().is_ok()));
}

#[test]
fn missing_config_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["cool", "--config", "/no/such/scenario.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let record: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("error.json")).unwrap()).unwrap();
    assert_eq!(record["path"], "/no/such/scenario.toml");
    assert_eq!(record["kind"], "configuration");
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/scenario.toml"));
}

#[test]
fn invalid_parameters_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[pulse]\nomega0 = -0.3\n").unwrap();
    let o = run(&["cool", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    fs::write(&cfg, "[pulse]\nomega0 = 0.3\nbogus = 1\n").unwrap();
    let o = run(&["cool", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("iterated.toml");
    let args = ["cool", "--config", cfg.to_str().unwrap(), "--cycles", "2", "--full-moments"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&args, &a).status.success());
    assert!(run(&args, &b).status.success());
    for f in ["trajectory.csv", "cycles.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let csv = Csv::read(&a.join("trajectory.csv"));
    assert_eq!(
        csv.header[..11],
        ["t", "t_shifted", "N_a", "N_c", "N_b", "re_ac", "im_ac", "re_cb", "im_cb", "re_cb_anom", "im_cb_anom"]
    );
    assert_eq!(csv.header.len(), 11 + 24);
    assert_eq!(manifest(&a)["window"]["n_cycles"], 2);
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("iterated.toml");
    let o = run(
        &[
            "cool",
            "--config",
            cfg.to_str().unwrap(),
            "--window",
            "60,70",
            "--cycles",
            "1",
            "--no-counter-rotating",
            "--tol",
            "1e-7,1e-9",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["window"]["t_start"], 60.0);
    assert_eq!(m["window"]["t_end"], 70.0);
    assert_eq!(m["options"]["counter_rotating"], false);
    assert_eq!(m["options"]["rtol"], 1e-7);
    assert_eq!(Csv::read(&dir.path().join("cycles.csv")).rows.len(), 1);
}

#[test]
fn sweep_keeps_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(
        &cfg,
        "[system]\nkappa_c = 0.5\nkappa_a = 2.0\nq_b = 1.0e7\nnbar_b = 1000.0\n\
         [pulse]\nomega0 = 0.9\n[initial]\nn_b = 1000.0\n[run]\nwindow = [50.0, 90.0]\ncycles = 1\n\
         [[sweep.axes]]\nparam = \"kappa_a\"\nvalues = [2.0, -1.0, 0.5]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--jobs", "2"], &out);
    assert_eq!(o.status.code(), Some(1));
    let csv = Csv::read(&out.join("sweep.csv"));
    assert_eq!(csv.column("status"), ["ok", "failed", "ok"]);
    assert_eq!(csv.column("kappa_a")[1].parse::<f64>().unwrap(), -1.0);
    assert_eq!(manifest(&out)["summary"]["failed"], 1);
}

#[test]
fn oracle_check_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("oracle.toml");
    let o = run(&["oracle-check", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path());
    assert!(m["oracle"]["max_rel_error"].as_f64().unwrap() <= 1e-3);
    assert_eq!(Csv::read(&dir.path().join("oracle.csv")).rows.len(), 41);
}

#[test]
fn spectrum_finds_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("spectrum.toml");
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let gaps = Csv::read(&dir.path().join("gaps.csv"));
    assert_eq!(gaps.rows.len(), 2);
    let widest = &manifest(dir.path())["summary"]["widest_gap"];
    assert_eq!(widest["branch"], "plus");
    assert!(widest["width"].as_f64().unwrap() > 0.1);
}

#[test]
fn tune_never_worsens_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tune.toml");
    let mut text = fs::read_to_string(config("tune.toml")).unwrap();
    text = text.replace("budget = 60", "budget = 6").replace("restarts = 1", "restarts = 0");
    text = text.replace("cycles = 10", "cycles = 2");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let o = run(&["tune", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = &manifest(&out)["summary"];
    assert!(s["objective"].as_f64().unwrap() <= s["seed_objective"].as_f64().unwrap());
    let log = Csv::read(&out.join("tune_log.csv"));
    let best: Vec<f64> = log.column("best_so_far").iter().map(|v| v.parse().unwrap()).collect();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(log.header, ["evaluation", "objective", "best_so_far", "t_start", "t_end"]);
}
