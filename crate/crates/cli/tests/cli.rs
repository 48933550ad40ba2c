use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use ionflux::bvp::{asymptotic_comparison, BvpOptions};
use ionflux::matching::{solve_matching, SolverOptions};
use ionflux::zero_current::reversal_potential_zeroth;
use ionflux::{BoundaryData, ChannelGeometry, IonPair, ModelSpec};
use serde_json::Value;

const A: f64 = 1.0 / 3.0;
const B: f64 = 2.0 / 3.0;

fn model_block(v: f64, q: f64, l: f64, r: f64, d: f64) -> String {
    format!(
        "[model]\nd = {d}\nV = {v}\nl1 = {l}\nl2 = {l}\nr1 = {r}\nr2 = {r}\na = {A:e}\nb = {B:e}\nQ2 = {q}\nepsilon = 1e-4\n"
    )
}

fn library_model(v: f64, q: f64, l: f64, r: f64, d: f64) -> ModelSpec {
    ModelSpec::new(
        IonPair::new(1.0, -1.0, d, 1.0).unwrap(),
        BoundaryData::symmetric(v, l, r),
        ChannelGeometry::uniform(A, B).unwrap(),
        q,
        1e-4,
    )
    .unwrap()
}

struct Run {
    out: PathBuf,
    output: Output,
    _dir: tempfile::TempDir,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().unwrap()
    }

    fn stdout(&self) -> String {
        String::from_utf8_lossy(&self.output.stdout).into_owned()
    }

    fn file(&self, name: &str) -> String {
        fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    fn report(&self) -> Value {
        serde_json::from_str(&self.file("report.json")).unwrap()
    }

    fn csv(&self, name: &str) -> (Vec<String>, Vec<Vec<f64>>) {
        let text = self.file(name);
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
        (header, rows)
    }
}

fn ionflux(command: &str, config: &str, envs: &[(&str, &str)]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_ionflux"))
        .args([command, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .envs(envs.iter().cloned())
        .output()
        .unwrap();
    Run { out, output, _dir: dir }
}

fn summary_value(stdout: &str, key: &str) -> f64 {
    let line = stdout.lines().find(|l| l.split_whitespace().next() == Some(key)).unwrap_or_else(|| panic!("{key} missing:\n{stdout}"));
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

fn sign_changes(values: &[f64]) -> usize {
    values.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count()
}

#[test]
fn solve_at_equilibrium_reports_zero_flux() {
    let r = ionflux("solve", &model_block(0.0, 0.5, 1.5, 1.5, 0.01), &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let out = r.stdout();
    for key in ["J1", "J2", "J10", "J20", "J11", "J21"] {
        assert!(summary_value(&out, key).abs() < 1e-10, "{key}:\n{out}");
    }
    assert_eq!(r.report()["status"], "ok");
}

#[test]
fn solve_writes_exact_fluxes_and_marked_profile_plot() {
    let r = ionflux("solve", &model_block(1.0, 0.5, 2.0, 1.0, 0.01), &[]);
    assert_eq!(r.code(), 0);
    let sol = solve_matching(&library_model(1.0, 0.5, 2.0, 1.0, 0.01), &SolverOptions::default()).unwrap();
    let json: Value = serde_json::from_str(&r.file("solve.json")).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["fluxes"]["j10"].as_f64().unwrap(), sol.fluxes.j10);
    assert_eq!(json["fluxes"]["j21"].as_f64().unwrap(), sol.fluxes.j21);

    let (header, rows) = {
        let text = r.file("profile.csv");
        let mut lines = text.lines();
        let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
        (header, lines.map(String::from).collect::<Vec<_>>())
    };
    assert_eq!(header, ["x", "region", "phi0", "phi1", "c10", "c11", "c20", "c21"]);
    assert!(rows.iter().any(|l| l.contains(",left,")) && rows.iter().any(|l| l.contains(",middle,")) && rows.iter().any(|l| l.contains(",right,")));

    let svg = r.file("profile.svg");
    let main = svg.lines().find(|l| l.contains(r#"id="main""#)).unwrap();
    assert!(main.contains(r#"data-x-min="0e0" data-x-max="1e0""#), "{main}");
    let junctions: Vec<&str> = svg.lines().filter(|l| l.contains(r#"class="guide junction""#)).collect();
    assert!(junctions.iter().any(|l| l.contains(&format!(r#"data-x="{A:e}""#))));
    assert!(junctions.iter().any(|l| l.contains(&format!(r#"data-x="{B:e}""#))));
    assert_eq!(svg.matches(r#"class="panel""#).count(), 3, "main panel and two layer zooms");
}

#[test]
fn voltage_sweep_has_one_row_per_point_and_monotone_voltage() {
    let cfg = format!("{}\n[sweep]\nparameter = \"v\"\nstart = -2\nstop = 2\npoints = 21\n", model_block(0.0, 0.5, 2.0, 1.0, 0.01));
    let r = ionflux("sweep", &cfg, &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let (header, rows) = r.csv("sweep.csv");
    assert_eq!(header, ["V", "J10", "J20", "J11", "J21", "I0", "I1"]);
    assert_eq!(rows.len(), 21);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert_eq!((rows[0][0], rows[20][0]), (-2.0, 2.0));
    let lib = solve_matching(&library_model(rows[7][0], 0.5, 2.0, 1.0, 0.01), &SolverOptions::default()).unwrap().fluxes;
    assert!((rows[7][1] - lib.j10).abs() < 1e-9 && (rows[7][3] - lib.j11).abs() < 1e-8);
    assert!(r.out.join("iv.svg").exists() && r.out.join("fluxes.svg").exists());
    assert!(!r.file("iv.svg").contains("zero-crossing"));
}

#[test]
fn sweep_csv_is_byte_identical_across_runs_and_thread_counts() {
    let cfg = format!("{}\n[sweep]\nparameter = \"q\"\nstart = 0\nstop = 1\npoints = 19\n", model_block(0.5, 0.0, 2.0, 1.0, 0.02));
    let one = ionflux("sweep", &cfg, &[("RAYON_NUM_THREADS", "1")]);
    let four = ionflux("sweep", &cfg, &[("RAYON_NUM_THREADS", "4")]);
    assert_eq!(one.code(), 0);
    assert_eq!(one.file("sweep.csv"), four.file("sweep.csv"));
    assert_eq!(one.csv("sweep.csv").0[0], "Q");
}

#[test]
fn empty_sweep_writes_no_plots_and_warns() {
    let cfg = format!("{}\n[sweep]\nparameter = \"v\"\nvalues = []\n", model_block(0.0, 0.5, 2.0, 1.0, 0.0));
    let r = ionflux("sweep", &cfg, &[]);
    assert_eq!(r.code(), 0);
    let svgs = fs::read_dir(&r.out).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")).count();
    assert_eq!(svgs, 0);
    let report = r.report();
    assert!(report["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("empty sweep")));
    assert_eq!(r.csv("sweep.csv").1.len(), 0);
}

#[test]
fn reversal_plot_marks_the_single_zero_crossing() {
    let r = ionflux("reversal", &model_block(0.0, 0.5, 2.0, 1.0, 0.01), &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let (header, rows) = r.csv("iv.csv");
    let i0 = header.iter().position(|h| h == "I0").unwrap();
    let currents: Vec<f64> = rows.iter().map(|r| r[i0]).collect();
    let svg = r.file("iv.svg");
    assert_eq!(sign_changes(&currents), 1);
    assert_eq!(svg.matches(r#"class="marker zero-crossing""#).count(), 1);
    let v_rev = reversal_potential_zeroth(&library_model(0.0, 0.5, 2.0, 1.0, 0.01), &SolverOptions::default()).unwrap();
    let json: Value = serde_json::from_str(&r.file("reversal.json")).unwrap();
    assert_eq!(json["v_rev_zeroth"].as_f64().unwrap(), v_rev);
    let k = currents.windows(2).position(|w| (w[0] < 0.0) != (w[1] < 0.0)).unwrap();
    assert!(rows[k][0] <= v_rev && v_rev <= rows[k + 1][0]);
}

#[test]
fn zero_current_writes_curve_and_result() {
    let cfg = format!("{}\n[sweep]\nparameter = \"v\"\nstart = -1\nstop = 1\npoints = 11\n", model_block(0.0, 0.2, 2.0, 1.0, 0.01));
    let r = ionflux("zero-current", &cfg, &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.output.stderr));
    let (header, rows) = r.csv("zero_current_curve.csv");
    assert_eq!(header, ["V", "phi_V", "M00", "M01", "J11", "J11_uncharged"]);
    assert_eq!(rows.len(), 11);
    let json: Value = serde_json::from_str(&r.file("zero_current.json")).unwrap();
    assert_eq!(json["mode"], "reversal");
    assert!(json["i0"].as_f64().unwrap().abs() < 1e-8);
    assert!(r.file("zero_current.svg").contains("operating-point"));
}

#[test]
fn validate_reproduces_the_library_comparison() {
    let cfg = format!("{}\n[validate]\nepsilons = [0.03, 0.01]\nd = [0.0]\n", model_block(1.0, 0.5, 2.0, 1.0, 0.0));
    let r = ionflux("validate", &cfg, &[]);
    let m = library_model(1.0, 0.5, 2.0, 1.0, 0.0);
    let table = asymptotic_comparison(&m, &[0.03, 0.01], &[0.0], &BvpOptions::default(), &SolverOptions::default()).unwrap();
    let (header, rows) = r.csv("comparison.csv");
    assert_eq!(header[..4], ["epsilon", "d", "J1", "J2"]);
    assert_eq!(rows.len(), 2);
    for (row, want) in rows.iter().zip(&table.rows) {
        assert_eq!((row[0], row[2], row[3]), (want.epsilon, want.j1, want.j2));
    }
    let rel = table.rows_for_d(0.0).last().unwrap().rel_error;
    let expect_pass = rel[0] < 0.02 && rel[1] < 0.02 && table.non_increasing_in_epsilon(0.0);
    let json: Value = serde_json::from_str(&r.file("comparison.json")).unwrap();
    assert_eq!(json["verdict"]["pass"].as_bool().unwrap(), expect_pass);
    assert_eq!(summary_value(&r.stdout(), "pass"), if expect_pass { 1.0 } else { 0.0 });
}

#[test]
fn manifest_lists_exactly_the_written_files() {
    let cfg = format!(
        "{}\n[sweep]\nparameter = \"v\"\nvalues = [-1, 0, 1]\n\n[output]\nformats = [\"csv\", \"svg\"]\n",
        model_block(0.0, 0.5, 2.0, 1.0, 0.01)
    );
    let r = ionflux("sweep", &cfg, &[]);
    let report = r.report();
    assert_eq!(report["schema_version"], 1);
    let mut listed: Vec<String> = report["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap().to_string()).collect();
    listed.sort();
    let mut on_disk: Vec<String> = fs::read_dir(&r.out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).filter(|n| n != "report.json").collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    assert_eq!(listed, ["fluxes.svg", "iv.svg", "sweep.csv"]);
    for f in report["files"].as_array().unwrap() {
        let len = fs::metadata(r.out.join(f["path"].as_str().unwrap())).unwrap().len();
        assert_eq!(f["bytes"].as_u64().unwrap(), len);
    }
}

#[test]
fn unknown_key_exits_with_config_error() {
    let r = ionflux("solve", &format!("{}\nbogus = 1\n", model_block(0.0, 0.0, 1.0, 1.0, 0.0)), &[]);
    assert_eq!(r.code(), 2);
    assert!(!r.out.exists());
}

#[test]
fn mismatched_command_exits_with_config_error() {
    let r = ionflux("solve", &format!("command = \"sweep\"\n{}", model_block(0.0, 0.0, 1.0, 1.0, 0.0)), &[]);
    assert_eq!(r.code(), 2);
}

#[test]
fn unusable_output_directory_exits_with_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, model_block(0.0, 0.0, 1.0, 1.0, 0.0)).unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_ionflux"))
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(blocker.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
    let status = Command::new(env!("CARGO_BIN_EXE_ionflux")).args(["solve", "--config"]).arg(dir.path().join("missing.toml")).status().unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn solve_failure_exits_with_solve_error_and_records_it() {
    // unequal boundary concentrations violate the zero-current precondition
    let cfg = model_block(0.0, 0.0, 1.0, 1.0, 0.0).replace("l2 = 1", "l2 = 2");
    let r = ionflux("zero-current", &cfg, &[]);
    assert_eq!(r.code(), 3);
    let report = r.report();
    assert_eq!(report["status"], "failed");
    assert!(report["error"].as_str().unwrap().contains("electroneutral"));
    assert_eq!(report["files"].as_array().unwrap().len(), 0);
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|x| x == "toml") {
            let cfg = ionflux_cli::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(cfg.command.is_some(), "{}", path.display());
            n += 1;
        }
    }
    assert!(n >= 5);
}
