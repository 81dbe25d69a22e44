//! End-to-end checks of the `uavnoma` binary: spec execution, output schema,
//! rerun determinism, and diagnostics on bad inputs.

use std::path::Path;
use std::process::{Command, Output};

fn uavnoma(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uavnoma"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("{name} exists"))
}

/// results.csv with the wall-time column stripped (the one non-deterministic
/// field).
fn strip_wall_time(results: &str) -> String {
    results
        .lines()
        .map(|line| {
            let (rest, _) = line.rsplit_once(',').expect("wall time column");
            rest
        })
        .collect::<Vec<_>>()
        .join("\n")
}

const SMALL_SPEC: &str = "\
variants = [\"juddsra-1\", \"oma\"]
num_seeds = 2
output_dir = \"out\"

[sweep]
axis = \"num_devices\"
values = [6.0, 10.0]

[config]
num_devices = 8
rng_seed = 42
";

#[test]
fn run_writes_all_outputs_with_stable_schema() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.toml"), SMALL_SPEC).unwrap();

    let output = uavnoma(&["run", "exp.toml", "--workers", "2"], dir.path());
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let out = dir.path().join("out");
    let results = read(&out, "results.csv");
    let mut lines = results.lines();
    assert_eq!(
        lines.next().unwrap(),
        "seed,variant,sweep_axis,sweep_value,num_devices,num_subchannels,num_stop_points,\
         quota,ee,accessed,swaps,outer_iterations,wall_time_s"
    );
    // 2 sweep values x 2 variants x 2 seeds
    assert_eq!(lines.count(), 8);

    let curve = read(&out, "ee_curve.csv");
    assert!(curve.starts_with(
        "variant,sweep_axis,sweep_value,runs,mean_ee,ee_ci95,mean_accessed,accessed_ci95,\
         mean_swaps,swaps_ci95"
    ));
    assert_eq!(curve.lines().count(), 1 + 4); // one group per (variant, value)

    let cdf = read(&out, "swap_cdf.csv");
    assert!(cdf.starts_with("variant,sweep_axis,sweep_value,swaps,cum_prob"));
    let last = cdf.lines().last().unwrap();
    assert!(last.ends_with(",1"), "cdf ends at 1: {last}");

    let snapshot = read(&out, "snapshot.csv");
    assert!(snapshot.starts_with("kind,id,x_m,y_m,subchannel,stop_point"));
    assert_eq!(snapshot.lines().filter(|l| l.starts_with("stop_point")).count(), 4);
    assert_eq!(snapshot.lines().filter(|l| l.starts_with("device")).count(), 8);
}

#[test]
fn rerun_reproduces_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.toml"), SMALL_SPEC).unwrap();

    assert!(uavnoma(&["run", "exp.toml", "--output-dir", "a"], dir.path()).status.success());
    assert!(uavnoma(&["run", "exp.toml", "--output-dir", "b", "--workers", "1"], dir.path())
        .status
        .success());

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for name in ["ee_curve.csv", "swap_cdf.csv", "snapshot.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs between reruns");
    }
    // wall time is the lone timing column; all data fields must match
    assert_eq!(
        strip_wall_time(&read(&a, "results.csv")),
        strip_wall_time(&read(&b, "results.csv"))
    );
}

#[test]
fn seed_override_changes_layouts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.toml"), SMALL_SPEC).unwrap();
    assert!(uavnoma(&["run", "exp.toml", "--output-dir", "a"], dir.path()).status.success());
    assert!(uavnoma(&["run", "exp.toml", "--output-dir", "c", "--seed", "7"], dir.path())
        .status
        .success());
    assert_ne!(
        strip_wall_time(&read(&dir.path().join("a"), "results.csv")),
        strip_wall_time(&read(&dir.path().join("c"), "results.csv"))
    );
}

#[test]
fn validate_accepts_good_and_reports_every_field_of_bad() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("good.toml"), SMALL_SPEC).unwrap();
    let good = uavnoma(&["validate", "good.toml"], dir.path());
    assert!(good.status.success());
    assert!(String::from_utf8_lossy(&good.stdout).contains("8 cells"));

    let bad_spec = "\
variants = [\"juddsra-1\"]

[config]
min_elevation_rad = 0.0
p_min_w = 0.9
p_max_w = 0.5
";
    std::fs::write(dir.path().join("bad.toml"), bad_spec).unwrap();
    let bad = uavnoma(&["validate", "bad.toml"], dir.path());
    assert!(!bad.status.success());
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(stderr.contains("min_elevation_rad"), "stderr: {stderr}");
    assert!(stderr.contains("p_min_w"), "stderr: {stderr}");
}

#[test]
fn run_fails_loudly_when_the_area_cannot_be_covered() {
    let dir = tempfile::tempdir().unwrap();
    // elevation close to pi/2 shrinks the LoS radius below every table entry
    let spec = "\
variants = [\"juddsra-1\"]

[config]
num_devices = 4
min_elevation_rad = 1.5
";
    std::fs::write(dir.path().join("exp.toml"), spec).unwrap();
    let output = uavnoma(&["run", "exp.toml"], dir.path());
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("cannot cover"));
}

#[test]
fn snapshot_exports_layout_and_assignment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scenario.toml"), "num_devices = 12\nrng_seed = 3\n").unwrap();
    let output =
        uavnoma(&["snapshot", "scenario.toml", "--output-dir", "snap"], dir.path());
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let snap = dir.path().join("snap");
    let devices = read(&snap, "devices.csv");
    assert_eq!(devices.lines().next().unwrap(), "id,x_m,y_m");
    assert_eq!(devices.lines().count(), 13);

    let matching = read(&snap, "matching.csv");
    assert_eq!(matching.lines().next().unwrap(), "device_id,subchannel,stop_point");
    assert_eq!(matching.lines().count(), 13);

    let snapshot = read(&snap, "snapshot.csv");
    // every matched device row carries a unit; snapshot agrees with matching
    assert_eq!(snapshot.lines().filter(|l| l.starts_with("device")).count(), 12);

    let units = read(&snap, "units.csv");
    assert_eq!(units.lines().next().unwrap(), "subchannel,stop_point,members,rate_bit_s_hz,power_w,ee");
    assert_eq!(units.lines().count(), 1 + 5 * 4); // N * K units
    // occupancy in the unit table accounts for every matched device
    let total_members: usize = units
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total_members, 12);
}
