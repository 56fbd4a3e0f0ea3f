use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlspec"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn criterion<'a>(r: &'a Value, id: &str) -> &'a Value {
    r["criteria"].as_array().unwrap().iter().find(|c| c["id"] == id).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const PI: f64 = std::f64::consts::PI;

#[test]
fn spectrum_of_plateau_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum"], &configs().join("plateau-cauchy.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    let s = &r["spectral_summary"];
    assert_eq!(s["mu0"].as_f64(), Some(-5.0));
    assert_eq!(s["mu1"].as_f64(), Some(0.0));
    let below = r["oracle"]["eigenvalues_below_mu0"].as_array().unwrap();
    assert!(!below.is_empty());
    assert!(below.iter().all(|v| (-5.0 - PI - 1e-6..-5.0).contains(&v.as_f64().unwrap())));
    // Floats carry 17 significant digits.
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(text.contains("\"mu0\": -5.0000000000000000"), "{text}");
    let csv = std::fs::read_to_string(dir.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("index,value"));
    assert_eq!(csv.lines().count(), 513);
}

#[test]
fn zero_operator_has_spectrum_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum"], &configs().join("zero.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["oracle"]["eigenvalues_below_mu0"].as_array().unwrap().len(), 0);
    let csv = std::fs::read_to_string(dir.path().join("eigenvalues.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }
}

#[test]
fn offset_potential_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("offset-example.toml"))
        .unwrap()
        .replace("force_offset = true", "force_offset = false")
        .replace("points = 1024", "points = 256");
    let cfg = write_config(dir.path(), "offset.toml", &text);
    let o = run(&["spectrum"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tends to -4"));

    let o = run(&["spectrum", "--force-offset"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path());
    assert!(r["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().starts_with("decay_offset")));
    assert_eq!(r["config_echo"]["analysis"]["force_offset"], true);
    let below = r["oracle"]["eigenvalues_below_mu0"].as_array().unwrap();
    assert!(!below.is_empty() && below.iter().all(|v| v.as_f64().unwrap() >= -5.0 - PI - 1e-6));
}

#[test]
fn check_on_plateau_cross_validates() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["check"], &configs().join("plateau-cauchy.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    let existence = criterion(&r, "existence");
    assert_eq!(existence["verdict"], "SATISFIED");
    assert_eq!(existence["bound"]["count"], 1);
    let flat = criterion(&r, "flat-infinite");
    assert_eq!(flat["verdict"], "SATISFIED");
    assert_eq!(flat["bound"]["kind"], "infinite");
    let bs = criterion(&r, "birman-schwinger");
    assert_eq!(bs["verdict"], "INCONCLUSIVE");
    assert_eq!(bs["witnesses"]["i_v_status"], "divergent");
    let rows = r["cross_validation"].as_array().unwrap();
    assert!(rows.iter().any(|row| row["kind"] == "lower"));
    assert!(rows.iter().all(|row| row["consistent"] == true));
    assert_eq!(r["self_checks"]["passed"], true);
    assert_eq!(r["self_checks"]["seed"], 7);
    for key in ["version", "tolerances"] {
        assert!(!r[key].is_null(), "{key}");
    }
    assert!(criterion(&r, "existence")["checklist"].as_array().is_some_and(|c| !c.is_empty()));
    assert!(String::from_utf8_lossy(&o.stdout).contains("certified"));
}

#[test]
fn check_on_sqrt_well_gives_finite_upper_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["check"], &configs().join("sqrt-well.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path());
    let bs = criterion(&r, "birman-schwinger");
    assert_eq!(bs["verdict"], "SATISFIED");
    let bound = bs["bound"]["count"].as_u64().unwrap();
    assert_eq!(bound, 4);
    assert!(r["oracle"]["count_below_mu0"].as_u64().unwrap() <= bound);
}

#[test]
fn nonnegative_problem_has_no_lower_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[grid]\ndim = 1\nlength = 24.0\npoints = 256\n\n[kernel]\nfamily = \"Gaussian\"\n\n[potential]\nfamily = \"PowerWell\"\nparams = [-1.0, 2.0, 1.0]\nx0_hint = [3.0]\n";
    let cfg = write_config(dir.path(), "positive.toml", text);
    let o = run(&["check"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    for id in ["existence", "fourier-count", "smooth-count", "dominance", "flat-infinite", "analytic-infinite"] {
        let v = &criterion(&r, id)["verdict"];
        assert!(v == "VIOLATED" || v == "INCONCLUSIVE", "{id}: {v}");
    }
    assert_eq!(r["oracle"]["count_below_mu0"], 0);
}

#[test]
fn count_reports_resolutions() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("plateau-cauchy.toml"))
        .unwrap()
        .replace("seed = 7", "seed = 7\ncount_resolutions = [128, 256, 512]");
    let cfg = write_config(dir.path(), "count.toml", &text);
    let o = run(&["count"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path());
    let counts: Vec<u64> = r["resolution_counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["count_below_mu0"].as_u64().unwrap())
        .collect();
    assert_eq!(counts.len(), 3);
    assert!(counts.windows(2).all(|w| w[1] >= w[0]), "{counts:?}");
    assert!(r["criteria"].as_array().unwrap().iter().all(|c| c["id"] != "essential-spectrum"));
}

#[test]
fn evolve_matches_top_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["evolve"], &configs().join("evolve-supercritical.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let e = &report(dir.path())["evolution"];
    let rate = e["growth_rate"].as_f64().unwrap();
    let predicted = e["predicted_rate"].as_f64().unwrap();
    assert!(predicted > 0.1 && (rate - predicted).abs() < 1e-2, "{rate} vs {predicted}");
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,mass,l2norm"));
    assert_eq!(csv.lines().count(), 82);
}

#[test]
fn evolve_subcritical_decays() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("evolve-supercritical.toml"))
        .unwrap()
        .replace("family = \"PlateauWell\"\nparams = [-1.0, 1.0, 2.0]", "family = \"GaussianWell\"\nparams = [1.0, 1.0]")
        .replace("points = 1024", "points = 512");
    let cfg = write_config(dir.path(), "sub.toml", &text);
    let o = run(&["evolve"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let e = &report(dir.path())["evolution"];
    assert!(e["growth_rate"].as_f64().unwrap() < 0.0);
    assert!(e["predicted_rate"].as_f64().unwrap() < 0.0);
}

#[test]
fn evolve_constant_potential_grows_exactly() {
    // a = 0, V = 0.7 on the box: every node follows exp(0.7 t).
    let dir = tempfile::tempdir().unwrap();
    let values = vec!["0.7"; 18].join(", ");
    let text = format!(
        "[grid]\ndim = 1\nlength = 16.0\npoints = 64\n\n[kernel]\nfamily = \"Gaussian\"\nparams = [0.0, 1.0]\n\n[potential]\nfamily = \"Tabulated\"\ntable = {{ lower = [-8.5], spacing = 1.0, shape = [18], values = [{values}] }}\n\n[analysis]\ncriteria = []\n\n[time]\ndt = 0.01\nsteps = 500\n"
    );
    let cfg = write_config(dir.path(), "exp.toml", &text);
    let o = run(&["evolve"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let e = &report(dir.path())["evolution"];
    assert!((e["growth_rate"].as_f64().unwrap() - 0.7).abs() < 1e-8);
}

#[test]
fn stability_guard_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("evolve-supercritical.toml"))
        .unwrap()
        .replace("dt = 0.05", "dt = 5.0");
    let cfg = write_config(dir.path(), "unstable.toml", &text);
    let o = run(&["evolve"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("use dt <"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn config_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(configs().join("zero.toml")).unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("{base}\n[analysis]\ncriteria = [\"spectral-gap\"]\n"));
    let o = run(&["check"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 15") && err.contains("analysis.criteria"), "{err}");

    let cfg = write_config(dir.path(), "syntax.toml", "[grid]\ndim = 1\nlength = \n");
    let o = run(&["spectrum"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = run(&["evolve"], &configs().join("zero.toml"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[time]"));

    let o = run(&["spectrum"], &dir.path().join("missing.toml"), dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rerun_from_echo_is_bitwise_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let o = run(&["check", "--seed", "11"], &configs().join("plateau-cauchy.toml"), first.path());
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["check"], &first.path().join("report.json"), second.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for file in ["report.json", "eigenvalues.csv"] {
        let a = std::fs::read(first.path().join(file)).unwrap();
        let b = std::fs::read(second.path().join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
    assert_eq!(report(second.path())["self_checks"]["seed"], 11);
}
