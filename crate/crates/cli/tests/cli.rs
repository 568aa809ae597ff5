use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use secrecy_esr::{load_spec, parse_spec, run_sweep, Method, Overrides};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_secrecy-esr"))
}

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn binary")
}

fn write_spec(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"{
    "num_eavesdroppers": 2,
    "eve_avg_snr": { "units": "db", "values": [2, 7] },
    "snr_fraction": [0.5, 0.9],
    "backhaul_reliability": [0.8, 1],
    "inv_beta": { "units": "db", "values": [0, 10, 20] },
    "methods": ["mc-exact", "exact", "highsnr"],
    "mc": { "replications": 5000, "seed": 3 }
}"#;

#[test]
fn sweep_to_stdout_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(&dir, "s.json", SMALL);
    let out = run(&["sweep", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], format!("# secrecy-esr v{} seed=3", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines[1], "inv_beta_db,exact,highsnr,mc_exact,mc_exact_se");
    assert_eq!(lines.len(), 5);

    let csv = dir.path().join("out.csv");
    let out = run(&["sweep", spec.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), text);
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(&dir, "s.json", SMALL);
    let a = run(&["sweep", spec.to_str().unwrap()]).stdout;
    let b = run(&["sweep", spec.to_str().unwrap()]).stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn seed_and_reps_flags_override_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(&dir, "s.json", SMALL);
    let base = run(&["sweep", spec.to_str().unwrap()]).stdout;
    let out = run(&["sweep", spec.to_str().unwrap(), "--seed", "99", "--reps", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# secrecy-esr v"));
    assert!(text.lines().next().unwrap().ends_with("seed=99"));
    assert_ne!(text.as_bytes(), &base[..]);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_delta = write_spec(&dir, "d.json", &SMALL.replace("[0.8, 1]", "[1.5, 1]"));
    let out = run(&["sweep", bad_delta.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("backhaul_reliability"), "{err}");

    let empty = write_spec(&dir, "e.json", &SMALL.replace("[0, 10, 20]", "[]"));
    assert_eq!(run(&["validate", empty.to_str().unwrap()]).status.code(), Some(2));

    let broken = write_spec(&dir, "b.json", "{ \"num_eavesdroppers\": 1,");
    let out = run(&["validate", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    assert_eq!(run(&["sweep", "/nonexistent/spec.json"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn degenerate_products_need_jitter() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("[2, 7]", "[4, 4]")
        .replace("[0.5, 0.9]", "1")
        .replace("\"num_eavesdroppers\": 2", "\"num_eavesdroppers\": 1");
    let spec = write_spec(&dir, "iid.json", &text);
    let out = run(&["validate", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("1*a_1 ~ 1*a_2") && err.contains("--jitter"), "{err}");
    let out = run(&["sweep", spec.to_str().unwrap(), "--jitter"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn term_guard_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let eve: Vec<String> = (0..12).map(|i| format!("{}", 0.37 + 0.913 * i as f64)).collect();
    let text = format!(
        r#"{{
            "num_eavesdroppers": 3,
            "eve_avg_snr": {{ "units": "db", "values": [{}] }},
            "backhaul_reliability": 1,
            "inv_beta": {{ "units": "db", "values": [10] }},
            "methods": ["exact"]
        }}"#,
        eve.join(", ")
    );
    let spec = write_spec(&dir, "big.json", &text);
    let out = run(&["sweep", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("10 dB"));
}

#[test]
fn validate_and_selftest() {
    let out = run(&["validate", specs_dir().join("fig1_n1_delta08.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: K=4 N=1"));

    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("[PASS]")));
}

#[test]
fn shipped_specs_load() {
    let mut n = 0;
    for entry in std::fs::read_dir(specs_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            load_spec(&p, &Overrides::default()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 13);
}

#[test]
fn golden_point_with_monte_carlo() {
    let text = r#"{
        "num_eavesdroppers": 1,
        "eve_avg_snr": { "units": "linear", "values": [1] },
        "backhaul_reliability": 1,
        "inv_beta": { "units": "linear", "values": [1] },
        "methods": ["exact", "mc-exact"],
        "mc": { "replications": 400000, "seed": 12 }
    }"#;
    let spec = parse_spec(text, &Overrides::default()).unwrap();
    let row = run_sweep(&spec).unwrap()[0];
    let exact = row.exact.unwrap();
    assert!((exact - 0.235_020).abs() < 1e-5);
    let mc = row.mc_exact.unwrap();
    assert!((mc.value - exact).abs() <= 3.0 * mc.std_error.unwrap());
}

#[test]
fn asymptote_gap_shrinks_beyond_20_db() {
    for name in ["fig2_case1_n1_delta1.json", "fig2_case1_n3_delta1.json", "fig2_case2_k4_delta1.json"] {
        let spec = load_spec(&specs_dir().join(name), &Overrides::default()).unwrap();
        assert!(spec.wants(Method::Asymptote));
        let rows = run_sweep(&spec).unwrap();
        let gaps: Vec<f64> = rows
            .iter()
            .filter(|r| r.inv_beta_db >= 20.0)
            .map(|r| (r.highsnr.or(r.iid).unwrap() - r.asymptote.unwrap()).abs())
            .collect();
        // once the gap is down at round-off it can only wobble; with N = 3,
        // 2 a_2 is within 0.3% of a_1 and the weights put that floor near 1e-10
        let floor = 1e-9;
        assert!(gaps[0] > floor, "{name}");
        assert!(gaps.windows(2).all(|w| w[1] < w[0] || w[0] < floor), "{name}: {gaps:?}");
    }
}

#[test]
fn iid_method_rejects_non_iid() {
    let text = SMALL.replace("[\"mc-exact\", \"exact\", \"highsnr\"]", "[\"iid\"]");
    assert!(parse_spec(&text, &Overrides::default()).is_err());
}
