//! The full alternating pipeline: plan stop points once, then iterate the
//! swap-matching and Dinkelbach power stages to a joint fixed point, plus the
//! benchmark variants and Monte-Carlo aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::channel::{network_ee, Network, PowerAllocation};
use crate::matching::{
    explore_from, initialize_matching, stabilize, Matching, DEFAULT_EPSILON, DEFAULT_T_MAX,
};
use crate::power::{dabpa, FractionalProblem};
use crate::scenario::{
    generate_devices, los_radius, plan_stop_points, CoveringTable, Deployment, ScenarioConfig,
};
use crate::Error;

/// Fixed-point limit for the alternating matching/power loop.
pub const OUTER_ITERATION_LIMIT: usize = 50;
/// Power vectors within this absolute tolerance count as unchanged.
pub const POWER_CONVERGENCE_TOL: f64 = 1e-9;

/// Which matching flavor drives the scheduling stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatcherKind {
    /// JDSSA-1: deterministic swap stabilization.
    Swap,
    /// JDSSA-2: swap passes with ε-exploration, best state kept.
    Exploration { t_max: usize, epsilon: f64 },
}

/// The schemes compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Full pipeline with JDSSA-1.
    Juddsra1,
    /// Full pipeline with JDSSA-2 exploration.
    Juddsra2 { t_max: usize, epsilon: f64 },
    /// Quota forced to one: each SS unit serves a single device.
    Oma,
    /// No power optimization; every device transmits at P_max.
    FixedPower,
    /// UAV parked over the center; out-of-range devices stay unserved.
    StationaryUav,
    /// Initialization only, then one power pass; no swap operations.
    NoSwap,
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Juddsra1 => "juddsra-1",
            Variant::Juddsra2 { .. } => "juddsra-2",
            Variant::Oma => "oma",
            Variant::FixedPower => "fixed-power",
            Variant::StationaryUav => "stationary-uav",
            Variant::NoSwap => "no-swap",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// Parse a variant tag; `juddsra-2` takes the default exploration knobs.
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "juddsra-1" => Ok(Variant::Juddsra1),
            "juddsra-2" => {
                Ok(Variant::Juddsra2 { t_max: DEFAULT_T_MAX, epsilon: DEFAULT_EPSILON })
            }
            "oma" => Ok(Variant::Oma),
            "fixed-power" => Ok(Variant::FixedPower),
            "stationary-uav" => Ok(Variant::StationaryUav),
            "no-swap" => Ok(Variant::NoSwap),
            other => Err(Error::Parse(format!(
                "unknown variant '{other}' (expected juddsra-1, juddsra-2, oma, fixed-power, \
                 stationary-uav, or no-swap)"
            ))),
        }
    }
}

/// Converged output of one run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub deployment: Deployment,
    pub matching: Matching,
    pub powers: PowerAllocation,
    /// Final network EE.
    pub ee: f64,
    /// Number of matched devices.
    pub accessed_count: usize,
    /// Applied swaps summed over all outer iterations.
    pub swap_count: usize,
    /// Outer iterations executed, including the one that confirms the fixed
    /// point.
    pub outer_iterations: usize,
    /// Network EE after each outer iteration.
    pub ee_trace: Vec<f64>,
}

/// SplitMix64 step; the stable seed-derivation mix used across runs.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct RunOptions {
    matcher: MatcherKind,
    optimize_power: bool,
    stationary: bool,
    single_pass: bool,
}

/// One Dinkelbach solve per occupied unit; unmatched devices keep their
/// current power.
fn allocate_powers(
    network: &Network,
    matching: &Matching,
    powers: &mut PowerAllocation,
) -> Result<(), Error> {
    for unit in network.units() {
        let cluster = network.cluster(matching, unit);
        if cluster.is_empty() {
            continue;
        }
        let problem = FractionalProblem::from_cluster(&cluster, network.config());
        let result = dabpa(&problem)?;
        for (&(device, _), &p) in cluster.members().iter().zip(&result.powers) {
            powers.set(device, p);
        }
    }
    Ok(())
}

fn run(config: &ScenarioConfig, opts: RunOptions) -> Result<Solution, Error> {
    config.validate()?;
    let r_los = los_radius(config.uav_altitude_m, config.min_elevation_rad)?;
    let deployment = if opts.stationary {
        Deployment::stationary(r_los, config.uav_altitude_m)
    } else {
        plan_stop_points(
            config.area_radius_m,
            r_los,
            config.uav_altitude_m,
            &CoveringTable::builtin(),
        )?
    };
    let devices = generate_devices(config);
    let network = Network::new(config.clone(), devices, deployment.clone());

    let mut powers = PowerAllocation::uniform(config.num_devices, config.p_max_w);
    let mut matching = initialize_matching(&network);
    let mut swap_count = 0;
    let mut ee_trace = Vec::new();

    if opts.single_pass {
        if opts.optimize_power {
            allocate_powers(&network, &matching, &mut powers)?;
        }
        let ee = network_ee(&network, &matching, &powers);
        ee_trace.push(ee);
        let accessed_count = matching.matched_count();
        return Ok(Solution {
            deployment,
            matching,
            powers,
            ee,
            accessed_count,
            swap_count,
            outer_iterations: 1,
            ee_trace,
        });
    }

    let mut outer_iterations = 0;
    loop {
        outer_iterations += 1;
        if outer_iterations > OUTER_ITERATION_LIMIT {
            return Err(Error::OuterIterationLimit { limit: OUTER_ITERATION_LIMIT });
        }
        let previous_matching = matching.clone();
        let previous_powers = powers.clone();

        match opts.matcher {
            MatcherKind::Swap => {
                let stats = stabilize(&network, &mut matching, &powers);
                swap_count += stats.swaps;
            }
            MatcherKind::Exploration { t_max, epsilon } => {
                let seed = mix_seed(config.rng_seed, outer_iterations as u64);
                let (best, stats) =
                    explore_from(&network, matching, &powers, t_max, epsilon, seed);
                matching = best;
                swap_count += stats.swaps;
            }
        }
        if opts.optimize_power {
            allocate_powers(&network, &matching, &mut powers)?;
        }
        ee_trace.push(network_ee(&network, &matching, &powers));

        if matching == previous_matching
            && powers.max_abs_diff(&previous_powers) <= POWER_CONVERGENCE_TOL
        {
            break;
        }
    }

    let ee = *ee_trace.last().expect("at least one outer iteration ran");
    let accessed_count = matching.matched_count();
    Ok(Solution {
        deployment,
        matching,
        powers,
        ee,
        accessed_count,
        swap_count,
        outer_iterations,
        ee_trace,
    })
}

/// The joint pipeline: deployment planning, then alternating matching and
/// power stages until neither changes.
pub fn juddsra(config: &ScenarioConfig, matcher: MatcherKind) -> Result<Solution, Error> {
    run(
        config,
        RunOptions { matcher, optimize_power: true, stationary: false, single_pass: false },
    )
}

/// Run one benchmark variant on a config.
pub fn run_variant(config: &ScenarioConfig, variant: &Variant) -> Result<Solution, Error> {
    match *variant {
        Variant::Juddsra1 => juddsra(config, MatcherKind::Swap),
        Variant::Juddsra2 { t_max, epsilon } => {
            juddsra(config, MatcherKind::Exploration { t_max, epsilon })
        }
        Variant::Oma => {
            let oma_config = ScenarioConfig { quota: 1, ..config.clone() };
            juddsra(&oma_config, MatcherKind::Swap)
        }
        Variant::FixedPower => run(
            config,
            RunOptions {
                matcher: MatcherKind::Swap,
                optimize_power: false,
                stationary: false,
                single_pass: false,
            },
        ),
        Variant::StationaryUav => run(
            config,
            RunOptions {
                matcher: MatcherKind::Swap,
                optimize_power: true,
                stationary: true,
                single_pass: false,
            },
        ),
        Variant::NoSwap => run(
            config,
            RunOptions {
                matcher: MatcherKind::Swap,
                optimize_power: true,
                stationary: false,
                single_pass: true,
            },
        ),
    }
}

/// One Monte-Carlo cell result, ready for aggregation and CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub variant: String,
    pub sweep_axis: Option<String>,
    pub sweep_value: Option<f64>,
    pub num_devices: usize,
    pub num_subchannels: usize,
    pub num_stop_points: usize,
    pub quota: usize,
    pub ee: f64,
    pub accessed: usize,
    pub swaps: usize,
    pub outer_iterations: usize,
    pub wall_time_s: f64,
}

impl RunRecord {
    /// Capture a finished run.
    pub fn from_solution(
        seed: u64,
        variant: &Variant,
        sweep: Option<(&str, f64)>,
        config: &ScenarioConfig,
        solution: &Solution,
        wall_time_s: f64,
    ) -> Self {
        Self {
            seed,
            variant: variant.tag().to_string(),
            sweep_axis: sweep.map(|(axis, _)| axis.to_string()),
            sweep_value: sweep.map(|(_, value)| value),
            num_devices: config.num_devices,
            num_subchannels: config.num_subchannels,
            num_stop_points: solution.deployment.num_stop_points(),
            quota: if variant.tag() == "oma" { 1 } else { config.quota },
            ee: solution.ee,
            accessed: solution.accessed_count,
            swaps: solution.swap_count,
            outer_iterations: solution.outer_iterations,
            wall_time_s,
        }
    }
}

/// Aggregates for one (variant, sweep value) group. The ci95 fields are half
/// widths of normal-approximation 95% confidence intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub variant: String,
    pub sweep_axis: Option<String>,
    pub sweep_value: Option<f64>,
    pub runs: usize,
    pub mean_ee: f64,
    pub ee_ci95: f64,
    pub mean_accessed: f64,
    pub accessed_ci95: f64,
    pub mean_swaps: f64,
    pub swaps_ci95: f64,
    /// Empirical CDF of the swap count: (swaps, cumulative probability).
    pub swap_cdf: Vec<(usize, f64)>,
}

/// Aggregated metrics over a set of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub groups: Vec<GroupSummary>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn ci95_half_width(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var =
        values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    1.96 * (var / values.len() as f64).sqrt()
}

/// Empirical CDF over integer swap counts.
pub fn swap_cdf(swap_counts: &[usize]) -> Vec<(usize, f64)> {
    let mut sorted = swap_counts.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut cdf = Vec::new();
    let mut seen = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let value = sorted[i];
        while i < sorted.len() && sorted[i] == value {
            seen += 1;
            i += 1;
        }
        cdf.push((value, seen as f64 / n));
    }
    cdf
}

/// Group records by (variant, sweep value) and summarize each group.
pub fn collect_metrics(records: &[RunRecord]) -> Report {
    assert!(!records.is_empty(), "collect_metrics needs at least one run");
    let mut groups: BTreeMap<(String, Option<String>, Option<u64>), Vec<&RunRecord>> =
        BTreeMap::new();
    for record in records {
        groups
            .entry((
                record.variant.clone(),
                record.sweep_axis.clone(),
                record.sweep_value.map(f64::to_bits),
            ))
            .or_default()
            .push(record);
    }
    let groups = groups
        .into_values()
        .map(|members| {
            let ee: Vec<f64> = members.iter().map(|r| r.ee).collect();
            let accessed: Vec<f64> = members.iter().map(|r| r.accessed as f64).collect();
            let swaps: Vec<f64> = members.iter().map(|r| r.swaps as f64).collect();
            let swap_counts: Vec<usize> = members.iter().map(|r| r.swaps).collect();
            GroupSummary {
                variant: members[0].variant.clone(),
                sweep_axis: members[0].sweep_axis.clone(),
                sweep_value: members[0].sweep_value,
                runs: members.len(),
                mean_ee: mean(&ee),
                ee_ci95: ci95_half_width(&ee),
                mean_accessed: mean(&accessed),
                accessed_ci95: ci95_half_width(&accessed),
                mean_swaps: mean(&swaps),
                swaps_ci95: ci95_half_width(&swaps),
                swap_cdf: swap_cdf(&swap_counts),
            }
        })
        .collect();
    Report { groups }
}
