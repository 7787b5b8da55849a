use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use delay_smoothing::Phibar;
use dsmooth::{output::sha256_hex, run_text, Catalog, CliError, RunConfig};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn dsmooth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsmooth")).args(args).output().unwrap()
}

fn run(cfg: &str, out: &Path) -> Output {
    dsmooth(&["--config", config(cfg).to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn column(csv_text: &str, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].parse().unwrap()).collect()
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn s1_covariance_config_is_analytic() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("s1_covariance.toml", dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("covariance.csv")).unwrap();
    let t = column(&text, "t");
    let q = column(&text, "q_0_0");
    assert_eq!(t, vec![0.1, 0.5, 0.9]);
    for (a, b) in t.iter().zip(&q) {
        assert!((a - b).abs() / a <= 1e-10);
    }
    let s = summary(dir.path());
    let resolved = fs::read_to_string(dir.path().join("resolved_config.toml")).unwrap();
    assert_eq!(s["config_sha256"], sha256_hex(&resolved));
    assert_eq!(s["status"], "PASS");
    assert_eq!(RunConfig::parse(&resolved).unwrap().resolved_toml(), resolved);
}

#[test]
fn s2_smoothing_rate_config_slope() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("s2_smoothing_rate.toml", dir.path()).status.code(), Some(0));
    let slope = summary(dir.path())["slope"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&slope), "{slope}");
}

#[test]
fn atom_at_zero_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("invalid_atom_at_zero.toml", dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("a1({0}) = 0"), "{err}");
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn unknown_experiment_and_missing_seed_are_rejected() {
    let cat = Catalog::builtin();
    let dir = tempfile::tempdir().unwrap();
    let r = run_text("experiment = \"sweep\"\n[system]\nname = \"S1\"\n", dir.path(), &cat);
    assert!(matches!(r, Err(CliError::Validation(_))));
    let r = run_text("experiment = \"simulate\"\n[system]\nname = \"S1\"\n", dir.path(), &cat);
    assert!(matches!(r, Err(CliError::Validation(m)) if m.contains("seed")));
    let r = run_text("experiment = \"covariance\"\n[system]\nname = \"S9\"\n", dir.path(), &cat);
    assert!(matches!(r, Err(CliError::Validation(m)) if m.contains("S9")));
    let r = run_text("experiment = \"covariance\"\ncolour = 1\n[system]\nname = \"S1\"\n", dir.path(), &cat);
    assert!(matches!(r, Err(CliError::Validation(_))));
}

#[test]
fn gradient_formula_needs_smooth_observable() {
    let cat = Catalog::builtin();
    let dir = tempfile::tempdir().unwrap();
    let text = "experiment = \"linear-solve\"\nseed = 1\nobservable = \"indicator\"\n[system]\nname = \"S2\"\n[params]\npaths = 10\ngradient = \"formula\"\n";
    let r = run_text(text, dir.path(), &cat);
    assert!(matches!(r, Err(CliError::Validation(m)) if m.contains("indicator")));
}

#[test]
fn a2_solver_request_is_a_certificate_failure() {
    let cat = Catalog::builtin();
    let dir = tempfile::tempdir().unwrap();
    let r = run_text("experiment = \"hjb-solve\"\n[system]\nname = \"S3\"\n", dir.path(), &cat);
    let e = r.unwrap_err();
    assert_eq!(e.exit_code(), 3, "{e}");
}

#[test]
fn listing_covers_builtins() {
    let o = dsmooth(&["--list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for s in ["S1", "S2", "S3"] {
        assert!(text.contains(&format!("system\t{s}\n")), "{text}");
    }
    assert!(text.contains("benchmark\ts1-quadratic"));
}

#[test]
fn registration_and_empty_catalog() {
    let mut cat = Catalog::builtin();
    assert!(!cat.listing().iter().any(|(_, n)| n == "bump"));
    cat.register_observable("bump", |_, _| Phibar::new("bump", delay_smoothing::Smoothness::Bounded, 1.0, |y| (-y[0] * y[0]).exp()));
    assert!(cat.listing().contains(&("observable", "bump".to_string())));
    assert!(Catalog::empty().listing().is_empty());
    let dir = tempfile::tempdir().unwrap();
    let r = run_text("experiment = \"covariance\"\n[system]\nname = \"S1\"\n", dir.path(), &Catalog::empty());
    assert!(matches!(r, Err(CliError::Validation(_))));
}

#[test]
fn custom_system_matches_builtin() {
    let cat = Catalog::builtin();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_text("experiment = \"covariance\"\n[system]\nname = \"S2\"\n", a.path(), &cat).unwrap();
    let custom = "experiment = \"covariance\"\n[system]\ndelay = 1.0\na0 = [[-1.0]]\n[[system.a1.atoms]]\ntheta = -0.5\nweight = [[0.5]]\n[pf]\nalpha0 = [[1.0]]\n[pf.tail]\ndensity = [[[1.0]]]\n";
    run_text(custom, b.path(), &cat).unwrap();
    assert_eq!(
        fs::read(a.path().join("covariance.csv")).unwrap(),
        fs::read(b.path().join("covariance.csv")).unwrap()
    );
}

#[test]
fn seeded_runs_repeat_exactly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run("s2_simulate.toml", a.path()).status.code(), Some(0));
    assert_eq!(run("s2_simulate.toml", b.path()).status.code(), Some(0));
    assert_eq!(
        fs::read(a.path().join("trajectories.csv")).unwrap(),
        fs::read(b.path().join("trajectories.csv")).unwrap()
    );
}
