//! Experiment front end: loads experiment specs, fans the (sweep value x
//! variant x seed) grid out to a worker pool, and writes plot-ready CSV
//! tables.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Deserialize;
use thiserror::Error;

use uavnoma_core::matching::matching_to_csv;
use uavnoma_core::orchestrator::{collect_metrics, mix_seed, run_variant, RunRecord, Variant};
use uavnoma_core::scenario::{devices_to_csv, generate_devices, ScenarioConfig};
use uavnoma_core::{ss_unit_power, ss_unit_rate, Network, Solution};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] uavnoma_core::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// Validation failures, one entry per offending field.
    #[error("invalid experiment spec:\n  {}", issues.join("\n  "))]
    InvalidSpec { issues: Vec<String> },
}

/// The parameter being swept across experiment cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    NumDevices,
    NumSubchannels,
    Quota,
    PMax,
    TMax,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::NumDevices => "num_devices",
            SweepAxis::NumSubchannels => "num_subchannels",
            SweepAxis::Quota => "quota",
            SweepAxis::PMax => "p_max",
            SweepAxis::TMax => "t_max",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "num_devices" => Ok(SweepAxis::NumDevices),
            "num_subchannels" => Ok(SweepAxis::NumSubchannels),
            "quota" => Ok(SweepAxis::Quota),
            "p_max" => Ok(SweepAxis::PMax),
            "t_max" => Ok(SweepAxis::TMax),
            other => Err(format!(
                "unknown sweep axis '{other}' (expected num_devices, num_subchannels, quota, \
                 p_max, or t_max)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// A validated experiment: base config, optional sweep, variants, and the
/// Monte-Carlo seed count.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub config: ScenarioConfig,
    pub sweep: Option<Sweep>,
    pub variants: Vec<Variant>,
    pub num_seeds: usize,
    pub output_dir: PathBuf,
}

// ---- TOML schema ----------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    #[serde(default)]
    config: ScenarioConfig,
    sweep: Option<SweepFile>,
    variants: Vec<String>,
    #[serde(default = "default_num_seeds")]
    num_seeds: usize,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    jdssa2: Option<Jdssa2File>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    axis: String,
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Jdssa2File {
    t_max: Option<usize>,
    epsilon: Option<f64>,
}

fn default_num_seeds() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentSpec {
    /// Parse and fully validate a spec; every violated field is reported,
    /// never a partial acceptance.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, CliError> {
        let file: SpecFile = toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;

        let mut issues = file.config.validation_issues();
        for issue in &mut issues {
            issue.insert_str(0, "config.");
        }

        let t_max = file.jdssa2.as_ref().and_then(|j| j.t_max);
        let epsilon = file.jdssa2.as_ref().and_then(|j| j.epsilon);
        if let Some(eps) = epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                issues.push(format!("jdssa2.epsilon: must lie in (0, 1), got {eps}"));
            }
        }
        if t_max == Some(0) {
            issues.push("jdssa2.t_max: must be >= 1".to_string());
        }

        if file.variants.is_empty() {
            issues.push("variants: must list at least one variant".to_string());
        }
        let mut variants = Vec::new();
        for tag in &file.variants {
            match tag.parse::<Variant>() {
                Ok(Variant::Juddsra2 { t_max: default_t, epsilon: default_e }) => {
                    variants.push(Variant::Juddsra2 {
                        t_max: t_max.unwrap_or(default_t),
                        epsilon: epsilon.unwrap_or(default_e),
                    });
                }
                Ok(variant) => variants.push(variant),
                Err(e) => issues.push(format!("variants: {e}")),
            }
        }

        let sweep = match &file.sweep {
            None => None,
            Some(raw) => {
                let axis = match raw.axis.parse::<SweepAxis>() {
                    Ok(axis) => Some(axis),
                    Err(e) => {
                        issues.push(format!("sweep.axis: {e}"));
                        None
                    }
                };
                if raw.values.is_empty() {
                    issues.push("sweep.values: must be non-empty".to_string());
                }
                if let Some(axis) = axis {
                    for &value in &raw.values {
                        if let Err(e) = check_sweep_value(axis, value) {
                            issues.push(format!("sweep.values: {e}"));
                        }
                    }
                    if axis == SweepAxis::TMax
                        && !variants.iter().any(|v| matches!(v, Variant::Juddsra2 { .. }))
                    {
                        issues.push(
                            "sweep.axis: a t_max sweep needs the juddsra-2 variant".to_string(),
                        );
                    }
                    Some(Sweep { axis, values: raw.values.clone() })
                } else {
                    None
                }
            }
        };

        if file.num_seeds == 0 {
            issues.push("num_seeds: must be >= 1".to_string());
        }

        if !issues.is_empty() {
            return Err(CliError::InvalidSpec { issues });
        }
        Ok(Self {
            config: file.config,
            sweep,
            variants,
            num_seeds: file.num_seeds,
            output_dir: file.output_dir,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, path)
    }

    /// Number of (sweep value x variant x seed) cells.
    pub fn num_cells(&self) -> usize {
        let sweep_len = self.sweep.as_ref().map_or(1, |s| s.values.len());
        sweep_len * self.variants.len() * self.num_seeds
    }
}

fn check_sweep_value(axis: SweepAxis, value: f64) -> Result<(), String> {
    let must_be_count = |name: &str| -> Result<(), String> {
        if value.fract() != 0.0 || value < 1.0 {
            Err(format!("{name} sweep value {value} is not a positive integer"))
        } else {
            Ok(())
        }
    };
    match axis {
        SweepAxis::NumDevices => {
            if value.fract() != 0.0 || value < 0.0 {
                Err(format!("num_devices sweep value {value} is not a whole number"))
            } else {
                Ok(())
            }
        }
        SweepAxis::NumSubchannels => must_be_count("num_subchannels"),
        SweepAxis::Quota => must_be_count("quota"),
        SweepAxis::TMax => must_be_count("t_max"),
        SweepAxis::PMax => {
            if value > 0.0 {
                Ok(())
            } else {
                Err(format!("p_max sweep value {value} must be positive"))
            }
        }
    }
}

/// Apply one sweep value to a (config, variant) cell.
fn apply_sweep(config: &mut ScenarioConfig, variant: &mut Variant, axis: SweepAxis, value: f64) {
    match axis {
        SweepAxis::NumDevices => config.num_devices = value as usize,
        SweepAxis::NumSubchannels => config.num_subchannels = value as usize,
        SweepAxis::Quota => config.quota = value as usize,
        SweepAxis::PMax => config.p_max_w = value,
        SweepAxis::TMax => {
            if let Variant::Juddsra2 { epsilon, .. } = *variant {
                *variant = Variant::Juddsra2 { t_max: value as usize, epsilon };
            }
        }
    }
}

/// Runtime knobs from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Override the spec's output directory.
    pub output_dir: Option<PathBuf>,
    /// Worker threads for the cell pool (defaults to all cores).
    pub workers: Option<usize>,
    /// Override the base seed from the config.
    pub seed: Option<u64>,
}

/// What `run_experiment` produced, for reporting.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub output_dir: PathBuf,
    pub cells: usize,
    pub files: Vec<PathBuf>,
    pub elapsed_s: f64,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn fmt_opt<T: fmt::Display>(value: &Option<T>) -> String {
    value.as_ref().map_or(String::new(), |v| v.to_string())
}

/// Execute every cell of the experiment and write the CSV outputs:
/// `results.csv` (one row per run), `ee_curve.csv` (per-group aggregates),
/// `swap_cdf.csv` (per-group swap-count CDFs) and `snapshot.csv` (one
/// device/stop-point layout with its final assignment).
pub fn run_experiment(
    spec: &ExperimentSpec,
    opts: &RunOptions,
) -> Result<ExperimentOutput, CliError> {
    let started = Instant::now();
    let output_dir = opts.output_dir.clone().unwrap_or_else(|| spec.output_dir.clone());
    std::fs::create_dir_all(&output_dir)
        .map_err(|source| CliError::Io { path: output_dir.clone(), source })?;
    let base_seed = opts.seed.unwrap_or(spec.config.rng_seed);

    // cells in deterministic order: sweep-major, then variant, then replicate
    struct Cell {
        config: ScenarioConfig,
        variant: Variant,
        sweep: Option<(SweepAxis, f64)>,
        seed: u64,
    }
    let sweep_values: Vec<Option<(SweepAxis, f64)>> = match &spec.sweep {
        None => vec![None],
        Some(sweep) => sweep.values.iter().map(|&v| Some((sweep.axis, v))).collect(),
    };
    let mut cells = Vec::with_capacity(spec.num_cells());
    for sweep in &sweep_values {
        for &variant in &spec.variants {
            for replicate in 0..spec.num_seeds {
                let mut config = spec.config.clone();
                let mut variant = variant;
                if let Some((axis, value)) = *sweep {
                    apply_sweep(&mut config, &mut variant, axis, value);
                }
                // the layout seed ignores the variant so variants pair up
                let sweep_bits = sweep.map_or(0, |(_, v)| v.to_bits());
                let seed = mix_seed(mix_seed(base_seed, sweep_bits), replicate as u64);
                config.rng_seed = seed;
                cells.push(Cell { config, variant, sweep: *sweep, seed });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .expect("worker pool");
    let records: Result<Vec<RunRecord>, CliError> = pool.install(|| {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|cell| {
                let run_started = Instant::now();
                let solution = run_variant(&cell.config, &cell.variant)?;
                Ok(RunRecord::from_solution(
                    cell.seed,
                    &cell.variant,
                    cell.sweep.map(|(axis, value)| (axis.name(), value)),
                    &cell.config,
                    &solution,
                    run_started.elapsed().as_secs_f64(),
                ))
            })
            .collect()
    });
    let records = records?;

    let mut files = Vec::new();

    let mut results = String::from(
        "seed,variant,sweep_axis,sweep_value,num_devices,num_subchannels,num_stop_points,\
         quota,ee,accessed,swaps,outer_iterations,wall_time_s\n",
    );
    for r in &records {
        results.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.6}\n",
            r.seed,
            r.variant,
            fmt_opt(&r.sweep_axis),
            fmt_opt(&r.sweep_value),
            r.num_devices,
            r.num_subchannels,
            r.num_stop_points,
            r.quota,
            r.ee,
            r.accessed,
            r.swaps,
            r.outer_iterations,
            r.wall_time_s,
        ));
    }
    files.push(write_file(&output_dir, "results.csv", &results)?);

    let report = collect_metrics(&records);
    let mut curve = String::from(
        "variant,sweep_axis,sweep_value,runs,mean_ee,ee_ci95,mean_accessed,accessed_ci95,\
         mean_swaps,swaps_ci95\n",
    );
    let mut cdf = String::from("variant,sweep_axis,sweep_value,swaps,cum_prob\n");
    for group in &report.groups {
        curve.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            group.variant,
            fmt_opt(&group.sweep_axis),
            fmt_opt(&group.sweep_value),
            group.runs,
            group.mean_ee,
            group.ee_ci95,
            group.mean_accessed,
            group.accessed_ci95,
            group.mean_swaps,
            group.swaps_ci95,
        ));
        for &(swaps, prob) in &group.swap_cdf {
            cdf.push_str(&format!(
                "{},{},{},{},{}\n",
                group.variant,
                fmt_opt(&group.sweep_axis),
                fmt_opt(&group.sweep_value),
                swaps,
                prob,
            ));
        }
    }
    files.push(write_file(&output_dir, "ee_curve.csv", &curve)?);
    files.push(write_file(&output_dir, "swap_cdf.csv", &cdf)?);

    // Fig-4-style snapshot: the base config under the first variant
    let mut snapshot_config = spec.config.clone();
    snapshot_config.rng_seed = base_seed;
    let solution = run_variant(&snapshot_config, &spec.variants[0])?;
    files.push(write_file(
        &output_dir,
        "snapshot.csv",
        &snapshot_csv(&snapshot_config, &solution),
    )?);

    Ok(ExperimentOutput {
        output_dir,
        cells: records.len(),
        files,
        elapsed_s: started.elapsed().as_secs_f64(),
    })
}

/// One layout with its final assignment:
/// `kind,id,x_m,y_m,subchannel,stop_point` rows for stop points and devices.
pub fn snapshot_csv(config: &ScenarioConfig, solution: &Solution) -> String {
    let devices = generate_devices(config);
    let mut out = String::from("kind,id,x_m,y_m,subchannel,stop_point\n");
    for sp in &solution.deployment.stop_points {
        out.push_str(&format!("stop_point,{},{},{},,\n", sp.id, sp.x_m, sp.y_m));
    }
    for device in &devices {
        match solution.matching.assignment(device.id) {
            Some(unit) => out.push_str(&format!(
                "device,{},{},{},{},{}\n",
                device.id, device.x_m, device.y_m, unit.subchannel, unit.stop_point
            )),
            None => {
                out.push_str(&format!("device,{},{},{},,\n", device.id, device.x_m, device.y_m))
            }
        }
    }
    out
}

/// Per-unit breakdown of the final state:
/// `subchannel,stop_point,members,rate_bit_s_hz,power_w,ee`.
pub fn unit_report_csv(config: &ScenarioConfig, solution: &Solution) -> String {
    let network =
        Network::new(config.clone(), generate_devices(config), solution.deployment.clone());
    let mut out = String::from("subchannel,stop_point,members,rate_bit_s_hz,power_w,ee\n");
    for unit in network.units() {
        let cluster = network.cluster(&solution.matching, unit);
        let rate = ss_unit_rate(&cluster, &solution.powers, config.noise_power_w);
        let power = ss_unit_power(&cluster, &solution.powers, config.p_circuit_w);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            unit.subchannel,
            unit.stop_point,
            cluster.len(),
            rate,
            power,
            network.unit_ee(&cluster, &solution.powers),
        ));
    }
    out
}

/// Run a single scenario and write `snapshot.csv` plus the device layout,
/// assignment, and per-unit breakdown tables.
pub fn run_snapshot(config_path: &Path, opts: &RunOptions) -> Result<ExperimentOutput, CliError> {
    let started = Instant::now();
    let mut config = ScenarioConfig::from_file(config_path)?;
    if let Some(seed) = opts.seed {
        config.rng_seed = seed;
    }
    let output_dir = opts.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&output_dir)
        .map_err(|source| CliError::Io { path: output_dir.clone(), source })?;

    let solution = run_variant(&config, &Variant::Juddsra1)?;
    let mut files = Vec::new();
    files.push(write_file(&output_dir, "snapshot.csv", &snapshot_csv(&config, &solution))?);
    files.push(write_file(
        &output_dir,
        "devices.csv",
        &devices_to_csv(&generate_devices(&config)),
    )?);
    files.push(write_file(&output_dir, "matching.csv", &matching_to_csv(&solution.matching))?);
    files.push(write_file(&output_dir, "units.csv", &unit_report_csv(&config, &solution))?);

    Ok(ExperimentOutput { output_dir, cells: 1, files, elapsed_s: started.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_spec(extra: &str) -> String {
        format!(
            "variants = [\"juddsra-1\"]\nnum_seeds = 2\n{extra}\n[config]\nnum_devices = 8\n"
        )
    }

    #[test]
    fn parse_minimal_spec() {
        let spec =
            ExperimentSpec::from_toml_str(&minimal_spec(""), Path::new("spec.toml")).unwrap();
        assert_eq!(spec.variants, vec![Variant::Juddsra1]);
        assert_eq!(spec.num_seeds, 2);
        assert_eq!(spec.num_cells(), 2);
        assert!(spec.sweep.is_none());
        assert_eq!(spec.config.num_devices, 8);
    }

    #[test]
    fn parse_sweep_and_jdssa2_knobs() {
        let text = "\
variants = [\"juddsra-2\", \"oma\"]
num_seeds = 3

[sweep]
axis = \"num_devices\"
values = [10.0, 20.0]

[jdssa2]
t_max = 500
epsilon = 0.05

[config]
num_devices = 8
";
        let spec = ExperimentSpec::from_toml_str(text, Path::new("spec.toml")).unwrap();
        assert_eq!(spec.num_cells(), 12);
        assert_eq!(spec.variants[0], Variant::Juddsra2 { t_max: 500, epsilon: 0.05 });
        let sweep = spec.sweep.unwrap();
        assert_eq!(sweep.axis, SweepAxis::NumDevices);
        assert_eq!(sweep.values, vec![10.0, 20.0]);
    }

    #[test]
    fn validation_collects_all_issues() {
        let text = "\
variants = [\"warp-drive\"]
num_seeds = 0

[sweep]
axis = \"quota\"
values = [0.5]

[config]
p_min_w = 0.9
p_max_w = 0.5
";
        let err = ExperimentSpec::from_toml_str(text, Path::new("spec.toml")).unwrap_err();
        let CliError::InvalidSpec { issues } = err else { panic!("wrong error kind") };
        assert!(issues.iter().any(|i| i.contains("config.p_min_w")));
        assert!(issues.iter().any(|i| i.contains("warp-drive")));
        assert!(issues.iter().any(|i| i.contains("num_seeds")));
        assert!(issues.iter().any(|i| i.contains("quota sweep value")));
    }

    #[test]
    fn t_max_sweep_requires_exploration_variant() {
        let text = "\
variants = [\"juddsra-1\"]

[sweep]
axis = \"t_max\"
values = [100.0]
";
        let err = ExperimentSpec::from_toml_str(text, Path::new("spec.toml")).unwrap_err();
        let CliError::InvalidSpec { issues } = err else { panic!("wrong error kind") };
        assert!(issues.iter().any(|i| i.contains("t_max sweep")));
    }

    #[test]
    fn table_defaults_accepted_verbatim() {
        let text = "variants = [\"juddsra-1\"]\n\n[config]\n";
        let spec = ExperimentSpec::from_toml_str(text, Path::new("spec.toml")).unwrap();
        assert_eq!(spec.config, ScenarioConfig::default());
    }

    #[test]
    fn layout_seed_is_shared_across_variants() {
        // paired comparisons need the same device layout per (sweep, replicate)
        let base = 7u64;
        let seed_a = mix_seed(mix_seed(base, 40f64.to_bits()), 3);
        let seed_b = mix_seed(mix_seed(base, 40f64.to_bits()), 3);
        assert_eq!(seed_a, seed_b);
    }
}
