use std::path::Path;
use std::process::{Command, Output};

use bmhd_core::io::read_trajectory;

const BASE: &str = r#"
[grid]
n = 8
rule = "three_halves_pad"

[params]
kappa0 = 0.5
kappa1 = 1.0
mu = 1.0
s = 1.0
epsilon = 1.0
p = 1.5

[solver]
dt = 0.01
t_end = 5.0
record_stride = 5
seed = 5

[solver.initial]
kind = "random"
amplitude = 2.0
kmax = 3
"#;

fn bmhd(args: &[&Path]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmhd")).args(args).output().unwrap()
}

fn p(s: &str) -> &Path {
    Path::new(s)
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn zero_initial_state_without_forcing_stays_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "zero.toml", &BASE.replace("kind = \"random\"", "kind = \"zero\""));
    let out = dir.path().join("zero.bmhd");
    let r = bmhd(&[p("simulate"), &cfg, p("-o"), &out]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let tr = read_trajectory(&out).unwrap();
    assert_eq!(tr.len(), 101);
    assert!(tr.states().iter().all(|s| s.h_norm() == 0.0));
}

#[test]
fn decaying_run_passes_the_energy_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "decay.toml", BASE);
    let out = dir.path().join("decay.bmhd");
    assert!(bmhd(&[p("simulate"), &cfg, p("-o"), &out]).status.success());
    let csv = dir.path().join("margins.csv");
    let r = bmhd(&[p("verify"), p("inequality"), &out, &cfg, p("-o"), &csv]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,margin\n"));
    assert!(text.lines().count() > 10);
    let r = bmhd(&[p("verify"), p("apriori"), &out, &cfg]);
    assert_eq!(r.status.code(), Some(0));
    let r = bmhd(&[p("attractor"), &out, &cfg, p("-o"), &dir.path().join("a.csv")]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn property_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "props.toml", BASE);
    let args = [p("props"), p("operators"), &cfg, p("--samples"), p("12"), p("--seed"), p("9")];
    let a = bmhd(&args);
    let b = bmhd(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("seed = 9") && text.ends_with("result = PASS\n"));
}

#[test]
fn spectrum_lists_the_smallest_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", BASE);
    let r = bmhd(&[p("spectrum"), &cfg, p("--count"), p("2")]);
    assert!(r.status.success());
    let text = String::from_utf8(r.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().ends_with(",1.0000000000000000e0"));
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &BASE.replace("seed = 5", "seed = 5\nbogus = 1"));
    let r = bmhd(&[p("simulate"), &cfg, p("-o"), &dir.path().join("x.bmhd")]);
    assert_eq!(r.status.code(), Some(2));

    let good = write(dir.path(), "good.toml", BASE);
    let out = dir.path().join("run.bmhd");
    assert!(bmhd(&[p("simulate"), &good, p("-o"), &out]).status.success());
    let mut bytes = std::fs::read(&out).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&out, &bytes).unwrap();
    let r = bmhd(&[p("verify"), p("energy"), &out, &good]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("checksum mismatch"));

    // a stored run checked against a configuration with different parameters
    assert!(bmhd(&[p("simulate"), &good, p("-o"), &out]).status.success());
    let other = write(dir.path(), "other.toml", &BASE.replace("p = 1.5", "p = 2.0"));
    assert_eq!(bmhd(&[p("verify"), p("apriori"), &out, &other]).status.code(), Some(2));
}

#[test]
fn blow_up_exits_with_code_three_and_keeps_the_partial_record() {
    let dir = tempfile::tempdir().unwrap();
    let text = BASE
        .replace("dt = 0.01", "dt = 0.5\nscheme = \"if_rk2\"")
        .replace("t_end = 5.0", "t_end = 50.0")
        .replace("record_stride = 5", "record_stride = 1")
        .replace("amplitude = 2.0\nkmax = 3", "amplitude = 1e4\nkmax = 3\nslope = 0.0");
    let cfg = write(dir.path(), "boom.toml", &text);
    let out = dir.path().join("boom.bmhd");
    let r = bmhd(&[p("simulate"), &cfg, p("-o"), &out]);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(!read_trajectory(&out).unwrap().is_empty());
}
