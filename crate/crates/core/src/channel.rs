//! Link-level math: free-space channel gains, SIC decoding order, per-unit
//! sum rate and power draw, and the network energy-efficiency objective.

use crate::matching::Matching;
use crate::scenario::{Deployment, Device, ScenarioConfig, StopPoint};
use crate::Error;

/// Dimensionless power gain of one device/stop-point link.
///
/// Always positive and, for any geometry with the UAV at altitude >= 1 m,
/// bounded above by the unit reference gain.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ChannelGain(f64);

impl ChannelGain {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A (subchannel, stop point) pair: the capacity-q slot devices match with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SsUnit {
    pub subchannel: usize,
    pub stop_point: usize,
}

/// Free-space path-loss gain between a device and the UAV hovering at a stop
/// point: `unit_gain / (dx^2 + dy^2 + H^2)`.
pub fn channel_gain(
    device: &Device,
    sp: &StopPoint,
    altitude_m: f64,
    unit_gain: f64,
) -> ChannelGain {
    let dx = device.x_m - sp.x_m;
    let dy = device.y_m - sp.y_m;
    ChannelGain(unit_gain / (dx * dx + dy * dy + altitude_m * altitude_m))
}

/// The devices sharing one SS unit, in SIC decoding order.
///
/// Members are sorted by descending channel gain, ties broken by ascending
/// device id, so the receiver decodes the strongest signal first. Quota and
/// LoS feasibility are properties of the matching that produced the cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    unit: SsUnit,
    members: Vec<(usize, ChannelGain)>,
}

impl Cluster {
    /// Build a cluster, establishing the decoding order.
    pub fn new(unit: SsUnit, mut members: Vec<(usize, ChannelGain)>) -> Self {
        members.sort_by(|a, b| {
            b.1.value()
                .partial_cmp(&a.1.value())
                .expect("channel gains are finite")
                .then(a.0.cmp(&b.0))
        });
        Self { unit, members }
    }

    pub fn unit(&self) -> SsUnit {
        self.unit
    }

    /// Members in decoding order: `(device id, gain)`.
    pub fn members(&self) -> &[(usize, ChannelGain)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Per-device transmit power in watts, indexed by device id.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    watts: Vec<f64>,
}

impl PowerAllocation {
    /// Every device at the same power (the fixed-power starting point).
    pub fn uniform(num_devices: usize, watts: f64) -> Self {
        Self { watts: vec![watts; num_devices] }
    }

    pub fn get(&self, device: usize) -> f64 {
        self.watts[device]
    }

    pub fn set(&mut self, device: usize, watts: f64) {
        self.watts[device] = watts;
    }

    pub fn len(&self) -> usize {
        self.watts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.watts.is_empty()
    }

    /// Largest absolute per-device difference; the outer loop's convergence
    /// metric.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.watts.len(), other.watts.len());
        self.watts
            .iter()
            .zip(&other.watts)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// True when every matched device sits inside the transmit power box.
    pub fn within_bounds(&self, matching: &Matching, p_min_w: f64, p_max_w: f64) -> bool {
        (0..self.watts.len()).all(|m| {
            matching.assignment(m).is_none()
                || (self.watts[m] >= p_min_w - 1e-12 && self.watts[m] <= p_max_w + 1e-12)
        })
    }
}

/// Per-member SINR in decoding order.
///
/// The member at position m sees interference only from members decoded after
/// it; the last member's interference term is exactly zero.
pub fn sinr_profile(
    cluster: &Cluster,
    powers: &PowerAllocation,
    noise_power_w: f64,
) -> Result<Vec<f64>, Error> {
    if cluster.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let received: Vec<f64> = cluster
        .members()
        .iter()
        .map(|&(device, gain)| powers.get(device) * gain.value())
        .collect();
    let mut interference = 0.0;
    let mut sinr = vec![0.0; received.len()];
    for m in (0..received.len()).rev() {
        sinr[m] = received[m] / (interference + noise_power_w);
        interference += received[m];
    }
    Ok(sinr)
}

/// Sum rate of one SS unit in bit/s/Hz; an empty unit carries no traffic.
pub fn ss_unit_rate(cluster: &Cluster, powers: &PowerAllocation, noise_power_w: f64) -> f64 {
    match sinr_profile(cluster, powers, noise_power_w) {
        Ok(sinr) => sinr.iter().map(|s| (1.0 + s).log2()).sum(),
        Err(_) => 0.0,
    }
}

/// Total power drawn on one SS unit: transmit plus circuit power per member.
pub fn ss_unit_power(cluster: &Cluster, powers: &PowerAllocation, p_circuit_w: f64) -> f64 {
    cluster
        .members()
        .iter()
        .map(|&(device, _)| powers.get(device) + p_circuit_w)
        .sum()
}

/// A scenario realization with its gain table: the evaluation context shared
/// by the matching and power stages.
#[derive(Debug, Clone)]
pub struct Network {
    config: ScenarioConfig,
    devices: Vec<Device>,
    deployment: Deployment,
    /// gains[device][stop point]
    gains: Vec<Vec<f64>>,
}

impl Network {
    pub fn new(config: ScenarioConfig, devices: Vec<Device>, deployment: Deployment) -> Self {
        let gains = devices
            .iter()
            .map(|d| {
                deployment
                    .stop_points
                    .iter()
                    .map(|sp| {
                        channel_gain(d, sp, deployment.altitude_m, config.unit_gain).value()
                    })
                    .collect()
            })
            .collect();
        Self { config, devices, deployment, gains }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn num_subchannels(&self) -> usize {
        self.config.num_subchannels
    }

    pub fn num_stop_points(&self) -> usize {
        self.deployment.num_stop_points()
    }

    pub fn gain(&self, device: usize, stop_point: usize) -> f64 {
        self.gains[device][stop_point]
    }

    pub fn in_los(&self, device: usize, stop_point: usize) -> bool {
        self.deployment
            .in_los(&self.devices[device], &self.deployment.stop_points[stop_point])
    }

    /// All SS units in canonical (subchannel-major) order.
    pub fn units(&self) -> impl Iterator<Item = SsUnit> + '_ {
        let stop_points = self.num_stop_points();
        (0..self.num_subchannels()).flat_map(move |subchannel| {
            (0..stop_points).map(move |stop_point| SsUnit { subchannel, stop_point })
        })
    }

    /// Extract one unit's cluster (decoding order included) from a matching.
    pub fn cluster(&self, matching: &Matching, unit: SsUnit) -> Cluster {
        let members = matching
            .members(unit)
            .iter()
            .map(|&device| (device, ChannelGain(self.gain(device, unit.stop_point))))
            .collect();
        Cluster::new(unit, members)
    }

    /// One unit's EE contribution: rate over power, zero for empty units.
    pub fn unit_ee(&self, cluster: &Cluster, powers: &PowerAllocation) -> f64 {
        if cluster.is_empty() {
            return 0.0;
        }
        ss_unit_rate(cluster, powers, self.config.noise_power_w)
            / ss_unit_power(cluster, powers, self.config.p_circuit_w)
    }
}

/// Network energy efficiency: the sum over occupied SS units of
/// rate / power. Units are always visited in canonical order so the value is
/// reproducible bit for bit.
pub fn network_ee(network: &Network, matching: &Matching, powers: &PowerAllocation) -> f64 {
    network
        .units()
        .map(|unit| network.unit_ee(&network.cluster(matching, unit), powers))
        .sum()
}
