use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sqlab"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_shipped_config_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("chsh", "chsh.json"),
        ("witness", "witness.json"),
        ("witness", "witness_geometry.json"),
        ("evolve", "evolve.json"),
        ("feasibility", "feasibility.json"),
        ("bs-check", "bs_check.json"),
        ("sweep", "sweep_witness.json"),
        ("sweep", "sweep_chsh.json"),
    ] {
        let out = tmp.path().join(file);
        let o = run(cmd, &config(file), &out, &[]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{file}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["pipeline"], cmd);
        assert!(manifest["constants"]["hbar_j_s"].is_number());
        for entry in manifest["outputs"].as_array().unwrap() {
            assert!(out.join(entry["file"].as_str().unwrap()).exists());
            assert_eq!(entry["sha256"].as_str().unwrap().len(), 64);
        }
    }
}

#[test]
fn identical_runs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("witness", "witness.json"),
        ("chsh", "chsh.json"),
        ("sweep", "sweep_chsh.json"),
    ] {
        let a = tmp.path().join(format!("{file}-a"));
        let b = tmp.path().join(format!("{file}-b"));
        assert_eq!(
            run(cmd, &config(file), &a, &["--shots", "2000", "--seed", "5"])
                .status
                .code(),
            Some(0)
        );
        assert_eq!(
            run(cmd, &config(file), &b, &["--shots", "2000", "--seed", "5"])
                .status
                .code(),
            Some(0)
        );
        assert_eq!(outputs(&a), outputs(&b), "{file}");
    }
    let c = tmp.path().join("other-seed");
    run(
        "witness",
        &config("witness.json"),
        &c,
        &["--shots", "2000", "--seed", "6"],
    );
    let a = tmp.path().join("witness.json-a");
    assert_ne!(outputs(&a), outputs(&c));
}

#[test]
fn thread_count_does_not_change_sweep_output() {
    let tmp = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(threads);
        let o = bin()
            .env("SQLAB_THREADS", threads)
            .args(["sweep", "--config"])
            .arg(config("sweep_witness.json"))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        seen.push(outputs(&out));
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn chsh_sweep_csv_crosses_two_at_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run("chsh", &config("chsh.json"), tmp.path(), &[])
            .status
            .code(),
        Some(0)
    );
    let mut reader = csv::Reader::from_path(tmp.path().join("chsh_sweep.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["delta_theta_rad", "gamma_t", "chsh_value"]
    );
    let rows: Vec<(f64, f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (
                r[0].parse().unwrap(),
                r[1].parse().unwrap(),
                r[2].parse().unwrap(),
            )
        })
        .filter(|r: &(f64, f64, f64)| r.1 == 0.0)
        .collect();
    let crossing = rows
        .windows(2)
        .find(|w| (w[0].2 - 2.0) * (w[1].2 - 2.0) <= 0.0)
        .map(|w| w[0].0 + (2.0 - w[0].2) * (w[1].0 - w[0].0) / (w[1].2 - w[0].2))
        .unwrap();
    assert!((crossing - 2.783).abs() <= 1e-3, "{crossing}");
}

#[test]
fn manifest_records_the_phase_assumption() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run("witness", &config("witness.json"), tmp.path(), &[])
            .status
            .code(),
        Some(0)
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    let notes = manifest["notes"].as_array().unwrap();
    assert!(notes
        .iter()
        .any(|n| n.as_str().unwrap().contains("epsilon_r")));
}

#[test]
fn invalid_configs_exit_with_code_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (
            "witness",
            r#"{"schema_version":"1","pipeline":"witness","parameters":{"experiment":{"R":2e-8,"D":3.5e-6,"d":5e-8,"epsilon_r":5.7,"tau":0.01,"m":1e-19,"sigma_d":1e-9,"colour":1}}}"#,
            "colour",
        ),
        (
            "witness",
            r#"{"schema_version":"1","pipeline":"witness","parameters":{"experiment":{"R":2e-8,"D":6e-8,"d":5e-8,"epsilon_r":5.7,"tau":0.01,"m":1e-19,"sigma_d":1e-9}}}"#,
            "`D`",
        ),
        (
            "feasibility",
            r#"{"schema_version":"1","pipeline":"feasibility","parameters":{"m":0,"sigma_d":1e-10,"d":2.5e-8,"delta_x":1e-10}}"#,
            "`m`",
        ),
        (
            "evolve",
            r#"{"schema_version":"1","pipeline":"evolve","parameters":{"d_over_sigma_d":5}}"#,
            "d_over_sigma_d",
        ),
        (
            "chsh",
            r#"{"schema_version":"1","pipeline":"evolve","parameters":{}}"#,
            "pipeline",
        ),
        (
            "chsh",
            r#"{"schema_version":"2","pipeline":"chsh","parameters":{}}"#,
            "schema_version",
        ),
        (
            "chsh",
            r#"{"schema_version":"1","pipeline":"chsh","#,
            "invalid config",
        ),
    ];
    for (i, (cmd, text, needle)) in cases.iter().enumerate() {
        let path = write(tmp.path(), &format!("bad{i}.json"), text);
        let o = run(cmd, &path, &tmp.path().join("out"), &[]);
        let stderr = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "case {i}: {stderr}");
        assert!(stderr.contains(needle), "case {i}: {stderr}");
    }
}

#[test]
fn numeric_failures_exit_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(
        tmp.path(),
        "early.json",
        r#"{"schema_version":"1","pipeline":"evolve","parameters":{"d_over_sigma_d":50,"t_over_overlap":1e-4}}"#,
    );
    let o = run("evolve", &path, &tmp.path().join("out"), &[]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn evolve_profile_has_grid_column() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run("evolve", &config("evolve.json"), tmp.path(), &[])
            .status
            .code(),
        Some(0)
    );
    let mut reader = csv::Reader::from_path(tmp.path().join("density_profile.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "x_over_sigma_d",
            "probability_density",
            "grid_probability_density"
        ]
    );
    for r in reader.records() {
        let r = r.unwrap();
        let (a, b): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((a - b).abs() <= 1e-6 * 0.02 + 1e-12);
    }
}
