use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spurious_cli::config::RunConfig;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spurious"));
    c.env_remove("SPURIOUS_THREADS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn body(csv: &str) -> String {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

const SMALL: &str = r#"
[sequence]
kind = "xy8"
pulses = 64

[signal]
type = "quantum"
a_perp_khz = 100.0
gamma_mhz_per_t = 20.0
field_mt = 100.0

[sweep]
fmin_mhz = 1.0
fmax_mhz = 6.0
fpoints = 400
refine = false
"#;

#[test]
fn overlap_report_has_five_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["overlaps", "--field-mt", "100", "--out", "t2.csv"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("t2.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    let pct: Vec<&str> = lines
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(pct, ["0.2", "0.6", "0.7", "1.2", "1.2"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("| 1H | 4.258 MHz | 13C | 4x |"), "{stdout}");
    assert!(stdout.contains("overlaps: 5 rows"));
}

#[test]
fn sidecar_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = configs().join("fig7_carbon.toml");
    let out = run(
        &[
            "overlaps",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            "echo.csv",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("echo.json")).unwrap())
            .unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["command"], "overlaps");
    let echoed: RunConfig = serde_json::from_value(doc["config"].clone()).unwrap();
    let mut original = RunConfig::load(&cfg_path).unwrap();
    original.output.path = Some("echo.csv".into());
    assert_eq!(echoed, original);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let a = run(
        &[
            "spectrum",
            "--config",
            "small.toml",
            "--threads",
            "1",
            "--out",
            "one.csv",
        ],
        dir.path(),
    );
    let b = bin()
        .args(["spectrum", "--config", "small.toml", "--out", "many.csv"])
        .env("SPURIOUS_THREADS", "4")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(
        b.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&b.stderr)
    );
    let one = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    let many = std::fs::read_to_string(dir.path().join("many.csv")).unwrap();
    assert_eq!(body(&one), body(&many));
    assert_eq!(body(&one).lines().count(), 401);
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = run(
        &[
            "spectrum",
            "--config",
            "small.toml",
            "--fpoints",
            "50",
            "--seq",
            "xy4",
            "--ideal-pulses",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("spectrum.json")).unwrap())
            .unwrap();
    assert_eq!(doc["config"]["sweep"]["fpoints"], 50);
    assert_eq!(doc["config"]["sequence"]["kind"], "xy4");
    assert_eq!(doc["config"]["sequence"]["ideal_pulses"], true);
    assert_eq!(doc["summary"]["points"], 50);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "[sequence]\nkind = \"xy8\"\npulsez = 8\n",
    )
    .unwrap();
    let out = run(&["spectrum", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pulsez") && err.contains("line 3"), "{err}");

    std::fs::write(
        dir.path().join("odd.toml"),
        "[sequence]\nkind = \"xy16\"\npulses = 24\n",
    )
    .unwrap();
    let out = run(&["spectrum", "--config", "odd.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sequence.pulses"));

    assert_eq!(
        run(&["spectrum", "--config", "missing.toml"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["transmogrify"], dir.path()).status.code(), Some(2));
    assert_eq!(
        run(&["map", "--threads", "0"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["overlaps", "--out", "no/such/dir/x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot write"));
}

#[test]
fn table1_passes_with_defaults_and_fails_with_long_pulses() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "table1",
            "--config",
            configs().join("table1.toml").to_str().unwrap(),
            "--out",
            "t1.csv",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.ends_with("PASS")).count(), 48);
    assert!(stdout.contains("table1: 48 checks, 0 failed: PASS"));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("t1.csv"))
            .unwrap()
            .lines()
            .count(),
        2 + 48
    );

    // at f_ac = 1.5 MHz the 25 ns pulses fill a large part of the interpulse
    // delay and the weak-pulse coefficients no longer hold
    std::fs::write(dir.path().join("slow.toml"), "[table1]\nf_ac_mhz = 1.5\n").unwrap();
    let out = run(&["table1", "--config", "slow.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn every_shipped_config_validates() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&path)
                .unwrap()
                .validate()
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 10);
}

#[test]
fn map_and_timeev_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("m.toml"),
        format!("{SMALL}\n[map]\nharmonic = \"2\"\namp_points = 3\ndet_points = 2\n\n[timeev]\nharmonic = \"1\"\nt_max_us = 20\npoints = 5\n"),
    )
    .unwrap();
    let out = run(&["map", "--config", "m.toml", "--out", "m.csv"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert!(csv.starts_with("# schema=1\namp,detuning,p\n"));
    assert_eq!(csv.lines().count(), 2 + 6);

    let out = run(
        &["timeev", "--config", "m.toml", "--out", "t.csv"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(csv.contains("N,T_s,p\n0,0,0\n"), "{csv}");
}
