use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uavcover"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

#[test]
fn version_prints_crate_version() {
    let out = bin().arg("version").output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn shipped_configs_validate() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = bin().arg("validate").arg(&path).output().unwrap();
            assert_eq!(code(&out), 0, "{}: {}", path.display(), String::from_utf8_lossy(&out.stdout));
        }
    }
}

#[test]
fn run_writes_csv_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("run")
        .arg(configs().join("angle_power_curve.toml"))
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let curve = std::fs::read_to_string(dir.path().join("angle_power_curve.csv")).unwrap();
    assert!(curve.lines().count() > 10);
    assert!(dir.path().join("angle_optimum.csv").exists());
}

#[test]
fn seed_override_changes_random_rosters() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "pso.toml",
        r#"
[experiment]
kind = "pso_sweep"

[users]
distribution = "uniform"
users_per_floor = 2

[building]
x_b = 10
y_b = 20
z_b = 30

[pso]
population = 10
max_iterations = 10

[[sweep]]
label = "only"
"#,
    );
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = bin()
            .args(["run", spec.to_str().unwrap(), "--seed", seed, "--output-dir"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("pso_placements.csv")).unwrap()
    };
    assert_eq!(run("7", "a"), run("7", "b"));
    assert_ne!(run("7", "a"), run("8", "c"));
}

#[test]
fn invalid_config_reports_line_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "bad.toml",
        "[experiment]\nkind = \"table2\"\n\n[building]\nx_b = -4\ny_b = 50\nz_b = 100\n\n[[sweep]]\nlabel = \"a\"\n",
    );
    let out = bin().arg("validate").arg(&spec).output().unwrap();
    assert_eq!(code(&out), 1);
    let msg = String::from_utf8_lossy(&out.stdout);
    assert!(msg.contains("line 5"), "{msg}");

    let out = bin().arg("run").arg(&spec).output().unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn unknown_kind_and_empty_sweep_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "u.toml", "[experiment]\nkind = \"teleport\"\n");
    assert_eq!(code(&bin().arg("validate").arg(&unknown).output().unwrap()), 1);
    let empty = write(dir.path(), "e.toml", "[experiment]\nkind = \"gd_sweep\"\n");
    let out = bin().arg("run").arg(&empty).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep"));
}

#[test]
fn missing_file_exits_1() {
    let out = bin().args(["run", "/nonexistent/spec.toml"]).output().unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn unreachable_corner_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "w.toml",
        r#"
[experiment]
kind = "worst_case_power_curve"
standoff_m = { start = 0, stop = 10, step = 1 }

[building]
x_b = 20
y_b = 1000
z_b = 5

[[sweep]]
label = "wide"
"#,
    );
    let out = bin()
        .arg("run")
        .arg(&spec)
        .arg("--output-dir")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wide"));
}

#[test]
fn infeasible_fleet_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "m.toml",
        r#"
[experiment]
kind = "multi_uav_compare"

[building]
x_b = 20
y_b = 50
z_b = 20

[users]
distribution = "uniform"
users_per_floor = 10

[multi_uav]
max_power_w = 1e-30
max_k = 3
population = 10
max_iterations = 5

[[sweep]]
label = "starved"
"#,
    );
    let out = bin()
        .arg("run")
        .arg(&spec)
        .arg("--output-dir")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn roster_file_is_loaded_relative_to_spec() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "users.csv", "# id, x, y, z\n1, 5, 10, 0\n2, 5, 40, 0\n3, 15, 25, 10\n");
    let spec = write(
        dir.path(),
        "g.toml",
        r#"
[experiment]
kind = "gd_sweep"

[building]
x_b = 20
y_b = 50
z_b = 10

[users]
distribution = "file"
path = "users.csv"

[[sweep]]
label = "file"
"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin().arg("run").arg(&spec).arg("--output-dir").arg(&out_dir).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let placements = std::fs::read_to_string(out_dir.join("gd_placements.csv")).unwrap();
    assert_eq!(placements.lines().count(), 2);
}
