use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_repulse-wave"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

const FREE_WAVEOP: &str = r#"
experiment = "waveop"
band = [0.5, 4.0]
t_list = [10.0, 20.0, 40.0]

[potential]
kind = "zero"

[grid]
length = 128.0
N = 1023
"#;

const FREE_SPECTRUM: &str = r#"
band = [0.5, 4.0]

[potential]
kind = "zero"

[spectrum]
nk = 12
"#;

#[test]
fn free_waveop_residuals_vanish() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.toml", FREE_WAVEOP);
    let out = tmp.path().join("out");
    let r = run(&["waveop", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let (header, rows) = read_csv(&out.join("waveop.csv"));
    assert_eq!(header, ["t", "residual", "relative", "cauchy_diff"]);
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert!(row[2].abs() < 1e-6, "relative residual {}", row[2]);
    }
}

#[test]
fn free_spectrum_amplitude_is_inverse_k() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", FREE_SPECTRUM);
    let out = tmp.path().join("out");
    let r = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let (header, rows) = read_csv(&out.join("jost.csv"));
    assert_eq!(header, ["k", "absA", "argA", "residual"]);
    assert_eq!(rows.len(), 12);
    for row in &rows {
        assert!((row[1] * row[0] - 1.0).abs() < 1e-3, "k = {}: |A| = {}", row[0], row[1]);
    }
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.toml", "band = [0.5, 4.0\n[potential]\nkind = \"zero\"\n"),
        ("unknown_key.toml", "bandwidth = 3\n[potential]\nkind = \"zero\"\n"),
        ("bad_kind.toml", "[potential]\nkind = \"harmonic\"\n"),
        ("missing_beta.toml", "[potential]\nkind = \"inverse_power\"\n"),
        ("bad_band.toml", "band = [2.0, 1.0]\n[potential]\nkind = \"zero\"\n"),
    ];
    for (name, text) in cases {
        let cfg = write_config(tmp.path(), name, text);
        let out = tmp.path().join(name.replace(".toml", ""));
        let r = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(r.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&r.stderr).contains("invalid config"), "{name}");
        assert!(!out.exists(), "{name} wrote output");
    }
}

#[test]
fn short_grid_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.toml", FREE_WAVEOP);
    let r = run(&["waveop", "--config", cfg.to_str().unwrap(), "--set", "grid.length=60.0", "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn experiment_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.toml", FREE_WAVEOP);
    let r = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_and_manifest_is_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", FREE_SPECTRUM);
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        let r = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--threads", "2"]);
        assert!(r.status.success());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dirs[0].join("manifest.json")).unwrap()).unwrap();
    let listed: BTreeSet<String> =
        manifest["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap().to_string()).collect();
    let on_disk: BTreeSet<String> = std::fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    assert_eq!(listed, on_disk);
    assert!(listed.contains("summary.txt"));
    for name in &listed {
        assert_eq!(std::fs::read(dirs[0].join(name)).unwrap(), std::fs::read(dirs[1].join(name)).unwrap(), "{name}");
    }
    assert_eq!(std::fs::read(dirs[0].join("manifest.json")).unwrap(), std::fs::read(dirs[1].join("manifest.json")).unwrap());
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn set_overrides_change_the_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", FREE_SPECTRUM);
    let hash = |extra: &[&str], d: &str| {
        let out = tmp.path().join(d);
        let mut args = vec!["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert!(run(&args).status.success());
        let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        let rows = read_csv(&out.join("jost.csv")).1.len();
        (m["config_sha256"].as_str().unwrap().to_string(), rows)
    };
    let (h0, n0) = hash(&[], "a");
    let (h1, n1) = hash(&["--set", "spectrum.nk=5"], "b");
    assert_ne!(h0, h1);
    assert_eq!((n0, n1), (12, 5));
}

#[test]
fn floats_carry_17_significant_digits() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", FREE_SPECTRUM);
    let out = tmp.path().join("out");
    assert!(run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(out.join("jost.csv")).unwrap();
    let cell = text.lines().nth(1).unwrap().split(',').next().unwrap();
    let mantissa = cell.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
    assert_eq!(mantissa.len(), 17, "{cell}");
}
