use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fockport_cli::report::RunReport;
use fockport_core::bell::DetectorDesign;
use fockport_core::design::{verify_design, DesignReport};
use fockport_core::fock::PureState;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fockport"))
}

fn crate_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn reversal_qubit_example() {
    let file = crate_path("examples/pipelines/reversal_qubit.toml");
    let o = run(&["run", file.to_str().unwrap(), "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = RunReport::from_csv(&stdout(&o)).unwrap();
    let net = report.net.unwrap();
    assert!((net - 5.9319703e-3).abs() < 1e-9, "{net}");
    let amps: Vec<f64> = report.output.iter().map(|t| t.re).collect();
    assert!((amps[0] - 0.5 / 1.25f64.sqrt()).abs() < 1e-12);
    assert!((amps[1] - 1.0 / 1.25f64.sqrt()).abs() < 1e-12);
}

#[test]
fn every_example_runs() {
    for entry in std::fs::read_dir(crate_path("examples/pipelines")).unwrap() {
        let path = entry.unwrap().path();
        let o = run(&["run", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
        assert!(stdout(&o).contains("net probability"));
    }
}

#[test]
fn empty_pipeline_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.toml", "[input]\namplitudes = [[0.6, 0.0], [0.0, 0.8]]\n");
    let o = run(&["run", f.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let r = RunReport::from_json(&stdout(&o)).unwrap();
    assert_eq!(r.net, Some(1.0));
    assert!(r.stages.is_empty());
    assert_eq!((r.output[0].re, r.output[1].im), (0.6, 0.8));
}

#[test]
fn domain_errors_exit_2_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "p.toml",
        "[input]\nbasis = [0]\n[[step]]\nkind = \"reversal_scaling\"\nlambda = 1.2\nn_tilde = 1\n",
    );
    let o = run(&["run", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambda = 1.2"), "{}", stderr(&o));

    let f = write(dir.path(), "q.toml", "[input]\nbasis = [0]\n[[step]]\nkind = \"teleport\"\n");
    let o = run(&["run", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown step kind `teleport`"));

    let f = write(dir.path(), "r.toml", "[input\n");
    let o = run(&["run", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));

    assert_eq!(run(&["run"]).status.code(), Some(2));
    assert_eq!(run(&["verify-paper", "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn zero_probability_stage_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.toml", "[input]\nbasis = [1]\n[[step]]\nkind = \"extractor\"\nn = 0\n");
    let o = run(&["run", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("zero probability"));
    assert!(stderr(&o).contains("number shift"));
}

#[test]
fn reports_round_trip_and_repeat() {
    let file = crate_path("examples/pipelines/chain.toml");
    let f = file.to_str().unwrap();
    for format in ["csv", "json"] {
        let a = stdout(&run(&["run", f, "--format", format]));
        let b = stdout(&run(&["run", f, "--format", format]));
        assert_eq!(a, b);
        let parsed = if format == "csv" {
            RunReport::from_csv(&a).unwrap()
        } else {
            RunReport::from_json(&a).unwrap()
        };
        let again = parsed.render(if format == "csv" {
            fockport_cli::report::Format::Csv
        } else {
            fockport_cli::report::Format::Json
        });
        assert_eq!(again.unwrap(), a);
    }
}

#[test]
fn reference_figures_table() {
    let o = run(&["verify-paper", "--format", "csv"]);
    let report = RunReport::from_csv(&stdout(&o)).unwrap();
    let row = |name: &str| report.comparisons.iter().find(|c| c.name == name).unwrap().clone();
    assert!(row("|g1|,|g2|").pass);
    assert!(row("reversal qubit").pass);
    assert!(row("reversal qutrit").pass);
    assert!(row("source |0>->|1>").pass);
    assert!(row("source |0>->|2>").pass);
    let p2 = row("p(N~=2)");
    assert_eq!(p2.expected, 0.375);
    // exit status follows the rows
    assert_eq!(o.status.code(), Some(if report.all_pass() { 0 } else { 1 }));
    assert_eq!(stdout(&run(&["verify-paper", "--format", "csv"])), stdout(&o));
}

#[test]
fn design_reference_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.toml");
    let det = dir.path().join("det.toml");
    let problem = crate_path("examples/design_n2.toml");
    let o = run(&[
        "design",
        problem.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--emit-detector",
        det.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = DesignReport::from_toml(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report.feasible);
    assert!(report.success_probability >= 0.3);

    // the shipped detector is this exact search result
    let shipped = std::fs::read_to_string(crate_path("assets/n2_detector.toml")).unwrap();
    assert_eq!(std::fs::read_to_string(&det).unwrap(), shipped);
    let d = DetectorDesign::<f64>::from_toml(&shipped).unwrap();
    assert!(verify_design(&d, 30, 1).unwrap().max_deviation < 1e-7);
}

#[test]
fn design_is_deterministic_per_seed() {
    let problem = crate_path("examples/design_n2.toml");
    let p = problem.to_str().unwrap();
    let a = run(&["design", p, "--seed", "3"]);
    let b = run(&["design", p, "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("seed = 3"));
}

#[test]
fn design_trivial_and_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "z.toml", "n_tilde = 0\nancillas = 0\n");
    let o = run(&["design", f.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let r: DesignReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r.feasible && r.block.is_empty());

    let f = write(dir.path(), "n2.toml", "n_tilde = 2\nancillas = 0\n");
    let o = run(&["design", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("infeasible"));
}

#[test]
fn design_sweep_writes_one_report_per_count() {
    let dir = tempfile::tempdir().unwrap();
    let problem = crate_path("examples/design_n3.toml");
    let out = dir.path().join("sweep");
    let o = run(&[
        "design",
        problem.to_str().unwrap(),
        "--ancillas",
        "1..3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(matches!(o.status.code(), Some(0 | 1)));
    for k in 1..=3 {
        let text = std::fs::read_to_string(out.join(format!("design_n3_a{k}.toml"))).unwrap();
        let r = DesignReport::from_toml(&text).unwrap();
        assert_eq!((r.n_tilde, r.ancillas), (3, k));
    }
    assert_eq!(stderr(&o).lines().count(), 3);
}

#[test]
fn state_print() {
    let o = run(&["state", "print", "--resource", "number_phase_bell", "--n", "2", "--m", "1"]);
    assert!(o.status.success());
    let s = PureState::<f64>::parse_text(&stdout(&o)).unwrap();
    let want = fockport_core::resources::number_phase_bell::<f64>(2, 1).unwrap();
    assert_eq!(s, want);

    let o = run(&["state", "print", "--amplitudes", "3,-4"]);
    let s = PureState::<f64>::parse_text(&stdout(&o)).unwrap();
    assert!((s.amplitude_of(&[0]).re - 0.6).abs() < 1e-15);
    assert!((s.amplitude_of(&[1]).re + 0.8).abs() < 1e-15);

    let file = crate_path("examples/pipelines/reversal_qubit.toml");
    let o = run(&["state", "print", file.to_str().unwrap(), "--run"]);
    let out = PureState::<f64>::parse_text(&stdout(&o)).unwrap();
    assert!(out.amplitude_of(&[1]).re > out.amplitude_of(&[0]).re);

    let o = run(&["state", "print", "--resource", "squeezed_vacuum"]);
    assert_eq!(o.status.code(), Some(2));
}
