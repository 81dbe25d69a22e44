//! Scenario geometry: random device layouts, LoS coverage, and UAV stop-point
//! planning via the disk covering problem.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Error;

/// Convert a dBm figure to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Full parameter set for one network realization.
///
/// Defaults follow the standard simulation setup: a 350 m cell, UAV at 150 m
/// with a pi/6 minimum elevation angle, 5 subchannels with quota 3, -99 dBm
/// noise and 100..500 mW transmit power bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Target area radius R in meters.
    pub area_radius_m: f64,
    /// UAV hover altitude H in meters.
    pub uav_altitude_m: f64,
    /// Minimum elevation angle for LoS coverage, radians in (0, pi/2).
    pub min_elevation_rad: f64,
    /// Number of IoT devices M.
    pub num_devices: usize,
    /// Number of orthogonal subchannels N.
    pub num_subchannels: usize,
    /// Maximum devices multiplexed on one SS unit (NOMA quota q).
    pub quota: usize,
    /// Unit power gain at the 1 m reference distance.
    pub unit_gain: f64,
    /// AWGN power sigma^2 in watts.
    pub noise_power_w: f64,
    /// Maximum device transmit power in watts.
    pub p_max_w: f64,
    /// Minimum device transmit power in watts.
    pub p_min_w: f64,
    /// Static circuit power per device in watts.
    pub p_circuit_w: f64,
    /// Seed for the device layout generator.
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_radius_m: 350.0,
            uav_altitude_m: 150.0,
            min_elevation_rad: PI / 6.0,
            num_devices: 60,
            num_subchannels: 5,
            quota: 3,
            unit_gain: 1.4e-4,
            noise_power_w: dbm_to_watts(-99.0),
            p_max_w: 0.5,
            p_min_w: 0.1,
            p_circuit_w: 1e-3,
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Collect every violated invariant, one message per field.
    ///
    /// `num_devices` may be zero: an empty network is a legal degenerate case
    /// (empty layout, vacuous matching, EE of zero).
    pub fn validation_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.area_radius_m > 0.0) {
            issues.push(format!("area_radius_m: must be > 0, got {}", self.area_radius_m));
        }
        if !(self.uav_altitude_m > 0.0) {
            issues.push(format!("uav_altitude_m: must be > 0, got {}", self.uav_altitude_m));
        }
        if !(self.min_elevation_rad > 0.0 && self.min_elevation_rad < FRAC_PI_2) {
            issues.push(format!(
                "min_elevation_rad: must lie in (0, pi/2), got {}",
                self.min_elevation_rad
            ));
        }
        if self.num_subchannels == 0 {
            issues.push("num_subchannels: must be >= 1".to_string());
        }
        if self.quota == 0 {
            issues.push("quota: must be >= 1".to_string());
        }
        if !(self.unit_gain > 0.0) {
            issues.push(format!("unit_gain: must be > 0, got {}", self.unit_gain));
        }
        if !(self.noise_power_w > 0.0) {
            issues.push(format!("noise_power_w: must be > 0, got {}", self.noise_power_w));
        }
        if !(self.p_min_w > 0.0) {
            issues.push(format!("p_min_w: must be > 0, got {}", self.p_min_w));
        }
        if !(self.p_max_w > 0.0) {
            issues.push(format!("p_max_w: must be > 0, got {}", self.p_max_w));
        }
        if self.p_min_w > self.p_max_w {
            issues.push(format!(
                "p_min_w: must not exceed p_max_w ({} > {})",
                self.p_min_w, self.p_max_w
            ));
        }
        if !(self.p_circuit_w > 0.0) {
            issues.push(format!("p_circuit_w: must be > 0, got {}", self.p_circuit_w));
        }
        issues
    }

    /// Validate all invariants, reporting every violation at once.
    pub fn validate(&self) -> Result<(), Error> {
        let issues = self.validation_issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig { issues })
        }
    }

    /// Parse a config from TOML text; missing keys take the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Load and validate a config file.
    pub fn from_file(path: &Path) -> Result<Self, Error> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// A ground IoT node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
}

/// A UAV hover position (ground projection; the altitude lives on [`Deployment`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopPoint {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
}

/// The planned set of UAV stop points.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub stop_points: Vec<StopPoint>,
    pub los_radius_m: f64,
    pub altitude_m: f64,
}

impl Deployment {
    /// Single stop point hovering over the area center (the stationary-UAV
    /// baseline; devices beyond the LoS radius stay unserved).
    pub fn stationary(los_radius_m: f64, altitude_m: f64) -> Self {
        Self {
            stop_points: vec![StopPoint { id: 0, x_m: 0.0, y_m: 0.0 }],
            los_radius_m,
            altitude_m,
        }
    }

    pub fn num_stop_points(&self) -> usize {
        self.stop_points.len()
    }

    /// LoS test: horizontal distance from device to stop point at most the
    /// LoS radius (closed disk).
    pub fn in_los(&self, device: &Device, sp: &StopPoint) -> bool {
        let dx = device.x_m - sp.x_m;
        let dy = device.y_m - sp.y_m;
        dx * dx + dy * dy <= self.los_radius_m * self.los_radius_m
    }

    /// True when `(x, y)` is within the LoS radius of at least one stop point.
    pub fn covers(&self, x: f64, y: f64) -> bool {
        let r2 = self.los_radius_m * self.los_radius_m;
        self.stop_points.iter().any(|sp| {
            let dx = x - sp.x_m;
            let dy = y - sp.y_m;
            dx * dx + dy * dy <= r2
        })
    }
}

/// One row of a covering table: `num_disks` congruent disks of radius
/// `radius_ratio` (relative to the target disk) centered at `centers`
/// (normalized to the unit disk) cover the unit disk.
///
/// A second unit-ratio disk adds nothing over one, so the two-disk row keeps
/// a single center; `centers` may list fewer than `num_disks` positions when
/// the extras are redundant.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringEntry {
    pub num_disks: usize,
    pub radius_ratio: f64,
    pub centers: Vec<(f64, f64)>,
}

impl CoveringEntry {
    /// Grid-sample the unit disk and report whether every point lies within
    /// `radius_ratio + tol` of some center.
    pub fn covers_unit_disk(&self, min_samples: usize, tol: f64) -> bool {
        let radius = self.radius_ratio + tol;
        let r2 = radius * radius;
        unit_disk_grid(min_samples).into_iter().all(|(x, y)| {
            self.centers.iter().any(|&(cx, cy)| {
                let dx = x - cx;
                let dy = y - cy;
                dx * dx + dy * dy <= r2
            })
        })
    }
}

/// Lattice sample of the closed unit disk with at least `min_samples` points.
pub fn unit_disk_grid(min_samples: usize) -> Vec<(f64, f64)> {
    // Square lattice keeps ~pi/4 of its points; grow until enough survive.
    let mut n = ((min_samples as f64 * 4.0 / PI).sqrt().ceil() as usize).max(2);
    loop {
        let mut points = Vec::with_capacity(min_samples + n);
        for i in 0..n {
            let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let y = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
                if x * x + y * y <= 1.0 {
                    points.push((x, y));
                }
            }
        }
        if points.len() >= min_samples {
            return points;
        }
        n += 1;
    }
}

/// Lookup table for the disk covering problem, ordered by disk count.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringTable {
    entries: Vec<CoveringEntry>,
}

impl CoveringTable {
    /// Covering solutions for up to four disks.
    pub fn builtin() -> Self {
        let half_sqrt3 = 3f64.sqrt() / 2.0;
        Self {
            entries: vec![
                CoveringEntry {
                    num_disks: 1,
                    radius_ratio: 1.0,
                    centers: vec![(0.0, 0.0)],
                },
                // Two disks bring no improvement over one; the table keeps the
                // row so minimality checks can see its ratio.
                CoveringEntry {
                    num_disks: 2,
                    radius_ratio: 1.0,
                    centers: vec![(0.0, 0.0)],
                },
                CoveringEntry {
                    num_disks: 3,
                    radius_ratio: half_sqrt3,
                    centers: vec![
                        (-3f64.sqrt() / 4.0, 0.25),
                        (0.0, -0.5),
                        (3f64.sqrt() / 4.0, 0.25),
                    ],
                },
                CoveringEntry {
                    num_disks: 4,
                    radius_ratio: SQRT_2 / 2.0,
                    centers: vec![(-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5), (0.5, 0.5)],
                },
            ],
        }
    }

    pub fn entries(&self) -> &[CoveringEntry] {
        &self.entries
    }

    /// Smallest-ratio entry, i.e. the best the table can do.
    pub fn min_ratio(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.radius_ratio)
            .fold(f64::INFINITY, f64::min)
    }

    /// Parse a table from text: one entry per line,
    /// `K ratio x1 y1 [x2 y2 ...]`, separators are whitespace and/or commas,
    /// `#` starts a comment. Entries are sorted by K and validated (positive
    /// ratios non-increasing in K, centers inside the unit disk, coverage by
    /// grid sampling).
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .collect();
            let bad = |msg: &str| {
                Error::InvalidCoveringTable(format!("line {}: {}", lineno + 1, msg))
            };
            if tokens.len() < 4 || tokens.len() % 2 != 0 {
                return Err(bad("expected `K ratio x1 y1 [x2 y2 ...]`"));
            }
            let num_disks: usize = tokens[0].parse().map_err(|_| bad("bad disk count"))?;
            let radius_ratio: f64 = tokens[1].parse().map_err(|_| bad("bad radius ratio"))?;
            let mut centers = Vec::new();
            for pair in tokens[2..].chunks(2) {
                let x: f64 = pair[0].parse().map_err(|_| bad("bad center coordinate"))?;
                let y: f64 = pair[1].parse().map_err(|_| bad("bad center coordinate"))?;
                centers.push((x, y));
            }
            entries.push(CoveringEntry { num_disks, radius_ratio, centers });
        }
        if entries.is_empty() {
            return Err(Error::InvalidCoveringTable("no entries".to_string()));
        }
        entries.sort_by_key(|e| e.num_disks);
        let table = Self { entries };
        table.validate()?;
        Ok(table)
    }

    /// Load a covering table from a text file (see [`CoveringTable::parse`]).
    pub fn from_file(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Check structural invariants plus grid-sampled coverage of every entry.
    pub fn validate(&self) -> Result<(), Error> {
        let mut prev: Option<(usize, f64)> = None;
        for entry in &self.entries {
            if entry.centers.is_empty() {
                return Err(Error::InvalidCoveringTable(format!(
                    "entry K={} has no centers",
                    entry.num_disks
                )));
            }
            if entry.centers.len() > entry.num_disks {
                return Err(Error::InvalidCoveringTable(format!(
                    "entry K={} lists {} centers",
                    entry.num_disks,
                    entry.centers.len()
                )));
            }
            if !(entry.radius_ratio > 0.0) {
                return Err(Error::InvalidCoveringTable(format!(
                    "entry K={} has non-positive ratio",
                    entry.num_disks
                )));
            }
            for &(x, y) in &entry.centers {
                if x * x + y * y > 1.0 + 1e-9 {
                    return Err(Error::InvalidCoveringTable(format!(
                        "entry K={} center ({}, {}) lies outside the unit disk",
                        entry.num_disks, x, y
                    )));
                }
            }
            if let Some((prev_k, prev_ratio)) = prev {
                if entry.num_disks == prev_k {
                    return Err(Error::InvalidCoveringTable(format!(
                        "duplicate entry K={}",
                        entry.num_disks
                    )));
                }
                if entry.radius_ratio > prev_ratio + 1e-12 {
                    return Err(Error::InvalidCoveringTable(format!(
                        "ratio increases from K={} to K={}",
                        prev_k, entry.num_disks
                    )));
                }
            }
            if !entry.covers_unit_disk(10_000, 1e-9) {
                return Err(Error::InvalidCoveringTable(format!(
                    "entry K={} does not cover the unit disk",
                    entry.num_disks
                )));
            }
            prev = Some((entry.num_disks, entry.radius_ratio));
        }
        Ok(())
    }
}

/// Sample `num_devices` positions i.i.d. uniform over the target disk,
/// reproducibly from `rng_seed`.
pub fn generate_devices(config: &ScenarioConfig) -> Vec<Device> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    (0..config.num_devices)
        .map(|id| {
            // sqrt of a uniform radius fraction gives area-uniform sampling
            let r = config.area_radius_m * rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            Device { id, x_m: r * theta.cos(), y_m: r * theta.sin() }
        })
        .collect()
}

/// LoS coverage radius on the ground: `H * cot(theta_thr)`.
pub fn los_radius(altitude_m: f64, min_elevation_rad: f64) -> Result<f64, Error> {
    if !(min_elevation_rad > 0.0 && min_elevation_rad < FRAC_PI_2) {
        return Err(Error::InvalidElevation(min_elevation_rad));
    }
    Ok(altitude_m / min_elevation_rad.tan())
}

/// Pick the smallest covering-table entry whose scaled radius fits inside the
/// LoS range and instantiate its centers as stop points.
///
/// Boundary equality counts as covered (closed disks). When the LoS range
/// already spans the whole area a single stop point at the origin suffices.
pub fn plan_stop_points(
    area_radius_m: f64,
    los_radius_m: f64,
    altitude_m: f64,
    table: &CoveringTable,
) -> Result<Deployment, Error> {
    assert!(los_radius_m > 0.0, "LoS radius must be positive");
    if los_radius_m >= area_radius_m {
        return Ok(Deployment {
            stop_points: vec![StopPoint { id: 0, x_m: 0.0, y_m: 0.0 }],
            los_radius_m,
            altitude_m,
        });
    }
    for entry in table.entries() {
        if entry.radius_ratio * area_radius_m <= los_radius_m {
            let stop_points = entry
                .centers
                .iter()
                .enumerate()
                .map(|(id, &(x, y))| StopPoint {
                    id,
                    x_m: x * area_radius_m,
                    y_m: y * area_radius_m,
                })
                .collect();
            return Ok(Deployment { stop_points, los_radius_m, altitude_m });
        }
    }
    Err(Error::UncoverableArea { los_radius_m, area_radius_m })
}

/// Plan the deployment for a config using the built-in covering table.
pub fn plan_deployment(config: &ScenarioConfig, table: &CoveringTable) -> Result<Deployment, Error> {
    let r_los = los_radius(config.uav_altitude_m, config.min_elevation_rad)?;
    plan_stop_points(config.area_radius_m, r_los, config.uav_altitude_m, table)
}

/// Render a device layout as CSV (`id,x_m,y_m`).
pub fn devices_to_csv(devices: &[Device]) -> String {
    let mut out = String::from("id,x_m,y_m\n");
    for d in devices {
        out.push_str(&format!("{},{},{}\n", d.id, d.x_m, d.y_m));
    }
    out
}
