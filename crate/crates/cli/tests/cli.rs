use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use urllc_noma_cli::run;
use urllc_noma_cli::sweep::{CompareResult, SweepResult};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn invoke(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("urllc-noma").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

// `ln E[e^{θA}]` for Poisson arrivals by summing the pmf.
fn poisson_log_mgf(lambda: f64, theta: f64) -> f64 {
    let mut pmf = (-lambda).exp();
    let mut excess = 0.0;
    for k in 1..200 {
        pmf *= lambda / k as f64;
        let term = pmf * (theta * k as f64).exp_m1();
        excess += term;
        if term < 1e-18 * excess {
            break;
        }
    }
    excess.ln_1p()
}

#[test]
fn table1_plan_matches_fixture() {
    let o = invoke(&["plan", "--config", &config("table1.cfg")]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let fixture = include_str!("fixtures/table1_plan.json");
    assert_eq!(o.stdout, fixture);
}

#[test]
fn fixture_values_agree_with_oracles() {
    let doc: Value = serde_json::from_str(include_str!("fixtures/table1_plan.json")).unwrap();
    let plan = &doc["plan"];
    assert_eq!(plan["feasible"], Value::Bool(false));
    assert!(plan["diagnostics"].as_str().unwrap().contains("ceiling 4"));
    for label in ["11", "12", "22"] {
        let m = &plan["messages"][label];
        assert_eq!(m["eps_c"].as_f64(), Some(5e-6));
        let theta = m["qos_exponent"].as_f64().unwrap();
        let eb = poisson_log_mgf(0.01, theta) / (5e-4 * theta);
        assert!((eb / m["effective_bandwidth"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        // θ·E_B·D reproduces the queueing budget
        assert!(((-theta * eb * 8e-4).exp() / 5e-6 - 1.0).abs() < 1e-10);

        // first sign change on a 1e-6 grid in ln(1+γ)
        let q_inv = 4.417_173_413_469_03; // Q⁻¹(5e-6)
        let a = 120.0 * std::f64::consts::LN_2 * 5e-4 * eb / 30.0;
        let c = q_inv / 30f64.sqrt();
        let mut x = 0.0;
        while x - a - c * (1.0 - (-x).exp()).sqrt() < 0.0 {
            x += 1e-6;
        }
        let gamma = m["required_sinr"].as_f64().unwrap();
        assert!((gamma.ln_1p() - x).abs() < 2e-6, "{} vs {}", gamma.ln_1p(), x);
    }
}

#[test]
fn plan_is_byte_identical_across_runs() {
    let a = invoke(&["plan", "--config", &config("relaxed_delay.cfg")]);
    let b = invoke(&["plan", "--config", &config("relaxed_delay.cfg")]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_str(&a.stdout).unwrap();
    assert_eq!(doc["plan"]["feasible"], Value::Bool(true));
    assert_eq!(doc["verification"]["all_pass"], Value::Bool(true));
    assert!(!a.stdout.contains("\": ") && !a.stdout.contains(", \"") && a.stdout.lines().count() == 1);
}

#[test]
fn idle_plan_is_all_zero() {
    let o = invoke(&["plan", "--config", &config("idle.cfg")]);
    assert_eq!(o.code, 0);
    let doc: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(doc["plan"]["required_rho"].as_f64(), Some(0.0));
    for label in ["11", "12", "22"] {
        assert_eq!(doc["plan"]["messages"][label]["required_sinr"].as_f64(), Some(0.0));
    }
}

#[test]
fn corrected_mode_is_recorded() {
    let o = invoke(&["plan", "--config", &config("relaxed_delay.cfg"), "--mode", "corrected"]);
    assert_eq!(o.code, 0);
    let doc: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(doc["plan"]["modes"]["dispersion"], "standard");
    assert_eq!(doc["plan"]["modes"]["sinr"], "corrected");
}

#[test]
fn plan_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan.json");
    let o = invoke(&["plan", "--config", &config("table1.cfg"), "--output", out.to_str().unwrap()]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(out).unwrap(), include_str!("fixtures/table1_plan.json"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let table1 = fs::read_to_string(configs().join("table1.cfg")).unwrap();

    let missing = write_config(dir.path(), "missing.cfg", &table1.replace("bandwidth_hz = 1e5\n", ""));
    let o = invoke(&["plan", "--config", &missing]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("bandwidth_hz"), "{}", o.stderr);

    let o = invoke(&["plan", "--config", "/no/such/file.cfg"]);
    assert_eq!(o.code, 1);

    let bad = write_config(dir.path(), "bad.cfg", &table1.replace("alpha1 = 0.2", "alpha1 = 0.9"));
    let o = invoke(&["plan", "--config", &bad]);
    assert_eq!(o.code, 1, "{}", o.stderr);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(invoke(&[]).code, 1);
    assert_eq!(invoke(&["sweep"]).code, 1);
    assert_eq!(invoke(&["sweep", "--preset", "fig9"]).code, 1);
    assert_eq!(invoke(&["plan"]).code, 1);
    assert_eq!(invoke(&["frobnicate"]).code, 1);
    let help = invoke(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stderr.contains("simulate"));
}

#[test]
fn unwritable_output_exits_with_two() {
    let o = invoke(&["sweep", "--preset", "fig1", "--output", "/no/such/dir/out.csv"]);
    assert_eq!(o.code, 2);
}

#[test]
fn preset_sweep_writes_parseable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.csv");
    let o = invoke(&["sweep", "--preset", "fig1", "--output", out.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let bytes = fs::read(&out).unwrap();
    assert!(!bytes.contains(&b'\r'));
    let r = SweepResult::read_csv(&bytes[..]).unwrap();
    assert_eq!(r.rows.len(), 60);
    let mut again = Vec::new();
    r.write_csv(&mut again).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn config_sweep_matches_preset() {
    let a = invoke(&["sweep", "--config", &config("table1.cfg")]);
    let b = invoke(&["sweep", "--preset", "fig1"]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn oma_sweep_needs_more() {
    let noma = SweepResult::read_csv(invoke(&["sweep", "--preset", "fig3"]).stdout.as_bytes()).unwrap();
    let oma = SweepResult::read_csv(invoke(&["sweep", "--preset", "fig3", "--oma"]).stdout.as_bytes()).unwrap();
    for (n, o) in noma.rows.iter().zip(&oma.rows) {
        assert!(o.snr_linear.unwrap() > n.snr_linear.unwrap());
    }
}

#[test]
fn idle_sweep_and_compare() {
    let s = invoke(&["sweep", "--config", &config("idle.cfg")]);
    assert_eq!(s.code, 0);
    let r = SweepResult::read_csv(s.stdout.as_bytes()).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert!(r.rows.iter().all(|row| row.snr_linear == Some(0.0) && row.feasible));

    let c = invoke(&["compare", "--config", &config("idle.cfg")]);
    let r = CompareResult::read_csv(c.stdout.as_bytes()).unwrap();
    assert!(r
        .rows
        .iter()
        .all(|row| row.gamma_noma == Some(0.0) && row.gamma_oma == Some(0.0)));
}

#[test]
fn compare_gap_is_non_negative() {
    let c = invoke(&["compare", "--preset", "fig2", "--mode", "corrected"]);
    assert_eq!(c.code, 0);
    assert!(c.stdout.starts_with("eps_c,phi,gamma_noma,gamma_oma,gap_db\n"));
    let r = CompareResult::read_csv(c.stdout.as_bytes()).unwrap();
    assert!(r.rows.iter().all(|row| row.gap_db.unwrap() >= 0.0));
}

const SMALL_QUEUE: &str = r#"
[traffic]
mean_arrivals_per_frame = 0.5

[simulation]
seed = 7
num_frames = 200000
service_packets_per_frame = 1.0
frame_duration_s = 5e-4
delay_bound_s = 8e-4
"#;

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.cfg", SMALL_QUEUE);
    let h1 = dir.path().join("h1.csv");
    let h2 = dir.path().join("h2.csv");
    let a = invoke(&["simulate", "--config", &cfg, "--output", h1.to_str().unwrap()]);
    let b = invoke(&["simulate", "--config", &cfg, "--output", h2.to_str().unwrap()]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(fs::read(&h1).unwrap(), fs::read(&h2).unwrap());
    assert!(fs::read_to_string(&h1).unwrap().starts_with("delay_frames,count\n0,0\n"));
    let doc: Value = serde_json::from_str(&a.stdout).unwrap();
    assert_eq!(doc["validation"]["pass"], Value::Bool(true));
    assert_eq!(doc["at_delay_bound"]["bound_frames"].as_u64(), Some(2));
}

#[test]
fn unstable_queue_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "q.cfg",
        &SMALL_QUEUE.replace("service_packets_per_frame = 1.0", "service_packets_per_frame = 0.4"),
    );
    let o = invoke(&["simulate", "--config", &cfg]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("unstable"), "{}", o.stderr);
}

#[test]
fn failed_slope_check_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // too few packets to fit a tail
    let cfg = write_config(
        dir.path(),
        "q.cfg",
        &SMALL_QUEUE.replace("num_frames = 200000", "num_frames = 300"),
    );
    let o = invoke(&["simulate", "--config", &cfg]);
    assert_eq!(o.code, 2);
    let doc: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(doc["validation"]["pass"], Value::Bool(false));
}
