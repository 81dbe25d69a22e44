//! Joint device scheduling and subchannel allocation as a many-to-one
//! matching between devices and SS units with peer effects.
//!
//! The matching is initialized with a deferred-acceptance-style round-robin
//! (IA), stabilized by swap operations that the controller approves only when
//! they strictly raise network EE (JDSSA-1), and optionally perturbed by
//! ε-exploration that accepts non-improving swaps with small probability to
//! escape local maxima (JDSSA-2).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{network_ee, Network, PowerAllocation, SsUnit};
use crate::Error;

/// Default exploration iteration budget for JDSSA-2.
pub const DEFAULT_T_MAX: usize = 10_000;
/// Default probability of accepting a non-improving swap in JDSSA-2.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Assignment state between devices and SS units.
///
/// Both directions of the assignment are stored and kept consistent: a device
/// maps to at most one unit, a unit holds at most `quota` devices, and
/// membership is bidirectional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    num_subchannels: usize,
    num_stop_points: usize,
    quota: usize,
    device_unit: Vec<Option<SsUnit>>,
    /// Member ids per unit, ascending; indexed subchannel-major.
    unit_members: Vec<Vec<usize>>,
}

impl Matching {
    /// An empty matching over the given dimensions.
    pub fn new(
        num_devices: usize,
        num_subchannels: usize,
        num_stop_points: usize,
        quota: usize,
    ) -> Self {
        Self {
            num_subchannels,
            num_stop_points,
            quota,
            device_unit: vec![None; num_devices],
            unit_members: vec![Vec::new(); num_subchannels * num_stop_points],
        }
    }

    pub fn num_devices(&self) -> usize {
        self.device_unit.len()
    }

    pub fn num_subchannels(&self) -> usize {
        self.num_subchannels
    }

    pub fn num_stop_points(&self) -> usize {
        self.num_stop_points
    }

    pub fn quota(&self) -> usize {
        self.quota
    }

    fn unit_index(&self, unit: SsUnit) -> usize {
        debug_assert!(unit.subchannel < self.num_subchannels);
        debug_assert!(unit.stop_point < self.num_stop_points);
        unit.subchannel * self.num_stop_points + unit.stop_point
    }

    /// All SS units in canonical (subchannel-major) order.
    pub fn units(&self) -> impl Iterator<Item = SsUnit> + '_ {
        let stop_points = self.num_stop_points;
        (0..self.num_subchannels).flat_map(move |subchannel| {
            (0..stop_points).map(move |stop_point| SsUnit { subchannel, stop_point })
        })
    }

    pub fn assignment(&self, device: usize) -> Option<SsUnit> {
        self.device_unit[device]
    }

    /// Member ids of a unit, ascending.
    pub fn members(&self, unit: SsUnit) -> &[usize] {
        &self.unit_members[self.unit_index(unit)]
    }

    pub fn occupancy(&self, unit: SsUnit) -> usize {
        self.unit_members[self.unit_index(unit)].len()
    }

    pub fn has_vacancy(&self, unit: SsUnit) -> bool {
        self.occupancy(unit) < self.quota
    }

    pub fn matched_count(&self) -> usize {
        self.device_unit.iter().filter(|u| u.is_some()).count()
    }

    /// Attach an unassigned device to a unit.
    pub fn assign(&mut self, device: usize, unit: SsUnit) -> Result<(), Error> {
        assert!(
            self.device_unit[device].is_none(),
            "device {device} is already matched"
        );
        let index = self.unit_index(unit);
        if self.unit_members[index].len() >= self.quota {
            return Err(Error::QuotaViolation {
                subchannel: unit.subchannel,
                stop_point: unit.stop_point,
                quota: self.quota,
            });
        }
        let members = &mut self.unit_members[index];
        let pos = members.partition_point(|&m| m < device);
        members.insert(pos, device);
        self.device_unit[device] = Some(unit);
        Ok(())
    }

    /// Detach a device from its unit, if any.
    pub fn unassign(&mut self, device: usize) {
        if let Some(unit) = self.device_unit[device].take() {
            let index = self.unit_index(unit);
            self.unit_members[index].retain(|&m| m != device);
        }
    }

    /// Full integrity check: bidirectional consistency, quota, and the LoS
    /// constraint for every matched device.
    pub fn validate(&self, network: &Network) -> bool {
        for (device, &unit) in self.device_unit.iter().enumerate() {
            if let Some(unit) = unit {
                if !self.members(unit).contains(&device) {
                    return false;
                }
                if !network.in_los(device, unit.stop_point) {
                    return false;
                }
            }
        }
        for unit in self.units() {
            let members = self.members(unit);
            if members.len() > self.quota {
                return false;
            }
            if members.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            if members.iter().any(|&m| self.device_unit[m] != Some(unit)) {
                return false;
            }
        }
        true
    }
}

/// Serialize assignments as CSV (`device_id,subchannel,stop_point`); the unit
/// columns stay empty for unmatched devices.
pub fn matching_to_csv(matching: &Matching) -> String {
    let mut out = String::from("device_id,subchannel,stop_point\n");
    for device in 0..matching.num_devices() {
        match matching.assignment(device) {
            Some(unit) => {
                out.push_str(&format!("{},{},{}\n", device, unit.subchannel, unit.stop_point))
            }
            None => out.push_str(&format!("{},,\n", device)),
        }
    }
    out
}

/// A device's ranking of stop points: LoS-feasible ones only, by descending
/// channel gain, ties broken by ascending stop-point id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceList {
    stop_points: Vec<usize>,
}

impl PreferenceList {
    pub fn for_device(network: &Network, device: usize) -> Self {
        let mut stop_points: Vec<usize> = (0..network.num_stop_points())
            .filter(|&k| network.in_los(device, k))
            .collect();
        stop_points.sort_by(|&a, &b| {
            network
                .gain(device, b)
                .partial_cmp(&network.gain(device, a))
                .expect("gains are finite")
                .then(a.cmp(&b))
        });
        Self { stop_points }
    }

    /// Currently most preferred stop point.
    pub fn favorite(&self) -> Option<usize> {
        self.stop_points.first().copied()
    }

    pub fn remove(&mut self, stop_point: usize) {
        self.stop_points.retain(|&k| k != stop_point);
    }

    pub fn is_empty(&self) -> bool {
        self.stop_points.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.stop_points
    }
}

/// Initialization Algorithm: each unmatched device proposes to its current
/// favorite stop point and a per-stop-point round-robin pointer picks the
/// subchannel. The pointer advances after every proposal, accepted or not; a
/// stop point leaves a device's list only once all its units are saturated.
/// Runs until every device is matched or out of options.
pub fn initialize_matching(network: &Network) -> Matching {
    let num_devices = network.num_devices();
    let num_subchannels = network.num_subchannels();
    let quota = network.config().quota;
    let mut matching = Matching::new(
        num_devices,
        num_subchannels,
        network.num_stop_points(),
        quota,
    );
    let mut prefs: Vec<PreferenceList> = (0..num_devices)
        .map(|device| PreferenceList::for_device(network, device))
        .collect();
    let mut pointer = vec![0usize; network.num_stop_points()];
    let mut unmatched: Vec<usize> = (0..num_devices).collect();

    while !unmatched.is_empty() {
        let mut still_unmatched = Vec::new();
        for &device in &unmatched {
            let Some(stop_point) = prefs[device].favorite() else {
                continue; // out of options; stays unmatched for good
            };
            let unit = SsUnit { subchannel: pointer[stop_point], stop_point };
            if matching.has_vacancy(unit) {
                matching.assign(device, unit).expect("vacancy was checked");
            } else {
                let saturated = (0..num_subchannels).all(|subchannel| {
                    !matching.has_vacancy(SsUnit { subchannel, stop_point })
                });
                if saturated {
                    prefs[device].remove(stop_point);
                }
                still_unmatched.push(device);
            }
            pointer[stop_point] = (pointer[stop_point] + 1) % num_subchannels;
        }
        unmatched = still_unmatched;
    }
    matching
}

/// A candidate state change: two matched devices trading places, a matched
/// device moving into a vacancy, or an unmatched device being admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapCandidate {
    Exchange { first: usize, second: usize },
    MoveToVacancy { device: usize, target: SsUnit },
    AdmitUnmatched { device: usize, target: SsUnit },
}

/// All structurally valid, LoS-feasible candidates for the current state, in
/// canonical order: exchanges over device pairs (first < second), then
/// vacancy moves, then admissions; within each kind devices ascend and units
/// follow subchannel-major order. Pure function of the matching.
pub fn enumerate_swap_candidates(network: &Network, matching: &Matching) -> Vec<SwapCandidate> {
    let num_devices = network.num_devices();
    let units: Vec<SsUnit> = network.units().collect();
    let mut candidates = Vec::new();

    for first in 0..num_devices {
        let Some(unit_first) = matching.assignment(first) else { continue };
        for second in (first + 1)..num_devices {
            let Some(unit_second) = matching.assignment(second) else { continue };
            if unit_first != unit_second
                && network.in_los(first, unit_second.stop_point)
                && network.in_los(second, unit_first.stop_point)
            {
                candidates.push(SwapCandidate::Exchange { first, second });
            }
        }
    }
    for device in 0..num_devices {
        let Some(current) = matching.assignment(device) else { continue };
        for &target in &units {
            if target != current
                && matching.has_vacancy(target)
                && network.in_los(device, target.stop_point)
            {
                candidates.push(SwapCandidate::MoveToVacancy { device, target });
            }
        }
    }
    for device in 0..num_devices {
        if matching.assignment(device).is_some() {
            continue;
        }
        for &target in &units {
            if matching.has_vacancy(target) && network.in_los(device, target.stop_point) {
                candidates.push(SwapCandidate::AdmitUnmatched { device, target });
            }
        }
    }
    candidates
}

/// Inverse bookkeeping for an applied candidate.
enum Undo {
    Exchange { first: usize, second: usize },
    MoveBack { device: usize, from: SsUnit },
    Evict { device: usize },
}

fn apply_in_place(matching: &mut Matching, candidate: &SwapCandidate) -> Result<Undo, Error> {
    match *candidate {
        SwapCandidate::Exchange { first, second } => {
            let unit_first = matching.assignment(first).expect("exchange endpoint matched");
            let unit_second = matching.assignment(second).expect("exchange endpoint matched");
            matching.unassign(first);
            matching.unassign(second);
            matching.assign(first, unit_second)?;
            matching.assign(second, unit_first)?;
            Ok(Undo::Exchange { first, second })
        }
        SwapCandidate::MoveToVacancy { device, target } => {
            let from = matching.assignment(device).expect("moving device is matched");
            if !matching.has_vacancy(target) {
                return Err(Error::QuotaViolation {
                    subchannel: target.subchannel,
                    stop_point: target.stop_point,
                    quota: matching.quota(),
                });
            }
            matching.unassign(device);
            matching.assign(device, target)?;
            Ok(Undo::MoveBack { device, from })
        }
        SwapCandidate::AdmitUnmatched { device, target } => {
            matching.assign(device, target)?;
            Ok(Undo::Evict { device })
        }
    }
}

fn undo_in_place(matching: &mut Matching, undo: Undo) {
    match undo {
        Undo::Exchange { first, second } => {
            apply_in_place(matching, &SwapCandidate::Exchange { first, second })
                .expect("exchange is an involution");
        }
        Undo::MoveBack { device, from } => {
            matching.unassign(device);
            matching.assign(device, from).expect("vacated slot is free");
        }
        Undo::Evict { device } => matching.unassign(device),
    }
}

/// Execute a candidate, returning the changed matching; only the endpoints'
/// assignments differ from the input.
pub fn apply_swap(matching: &Matching, candidate: &SwapCandidate) -> Result<Matching, Error> {
    let mut next = matching.clone();
    apply_in_place(&mut next, candidate)?;
    Ok(next)
}

/// The controller's approval test: the swap must strictly raise network EE
/// (under the currently fixed powers) and both relocated devices must remain
/// inside LoS range at their new stop points.
pub fn is_swap_blocking(
    network: &Network,
    matching: &Matching,
    candidate: &SwapCandidate,
    powers: &PowerAllocation,
) -> bool {
    let feasible = match *candidate {
        SwapCandidate::Exchange { first, second } => {
            match (matching.assignment(first), matching.assignment(second)) {
                (Some(unit_first), Some(unit_second)) => {
                    unit_first != unit_second
                        && network.in_los(first, unit_second.stop_point)
                        && network.in_los(second, unit_first.stop_point)
                }
                _ => false,
            }
        }
        SwapCandidate::MoveToVacancy { device, target } => match matching.assignment(device) {
            Some(current) => {
                current != target
                    && matching.has_vacancy(target)
                    && network.in_los(device, target.stop_point)
            }
            None => false,
        },
        SwapCandidate::AdmitUnmatched { device, target } => {
            matching.assignment(device).is_none()
                && matching.has_vacancy(target)
                && network.in_los(device, target.stop_point)
        }
    };
    if !feasible {
        return false;
    }
    let before = network_ee(network, matching, powers);
    let swapped = apply_swap(matching, candidate).expect("feasibility was checked");
    network_ee(network, &swapped, powers) > before
}

/// Counters and the EE trajectory of one matching run.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapStats {
    /// Total applied swaps (including exploratory ones).
    pub swaps: usize,
    /// Applied swaps that did not improve EE (JDSSA-2 exploration only).
    pub exploration_swaps: usize,
    /// Network EE before any swap and after each applied one.
    pub ee_trace: Vec<f64>,
}

/// Driver state for swap passes: the evaluation context plus the running EE
/// and counters.
struct SwapDriver<'a> {
    network: &'a Network,
    powers: &'a PowerAllocation,
    ee: f64,
    stats: SwapStats,
}

impl<'a> SwapDriver<'a> {
    fn new(network: &'a Network, matching: &Matching, powers: &'a PowerAllocation) -> Self {
        let ee = network_ee(network, matching, powers);
        Self {
            network,
            powers,
            ee,
            stats: SwapStats { swaps: 0, exploration_swaps: 0, ee_trace: vec![ee] },
        }
    }

    /// Apply one candidate, then keep or revert it according to `accept`.
    fn consider(
        &mut self,
        matching: &mut Matching,
        candidate: SwapCandidate,
        accept: &mut dyn FnMut(f64, f64) -> bool,
        on_applied: &mut dyn FnMut(&Matching, f64),
    ) -> bool {
        let undo = apply_in_place(matching, &candidate).expect("candidate pre-checked");
        let ee_new = network_ee(self.network, matching, self.powers);
        if accept(ee_new, self.ee) {
            if ee_new <= self.ee {
                self.stats.exploration_swaps += 1;
            }
            self.ee = ee_new;
            self.stats.swaps += 1;
            self.stats.ee_trace.push(ee_new);
            on_applied(matching, ee_new);
            true
        } else {
            undo_in_place(matching, undo);
            false
        }
    }

    /// One pass over all candidates in canonical order, evaluated lazily
    /// against the evolving state. `accept` decides from
    /// (candidate EE, current EE) whether an applied swap is kept;
    /// `on_applied` observes each kept state.
    fn sweep(
        &mut self,
        matching: &mut Matching,
        accept: &mut dyn FnMut(f64, f64) -> bool,
        on_applied: &mut dyn FnMut(&Matching, f64),
    ) -> bool {
        let num_devices = self.network.num_devices();
        let quota = matching.quota();
        let units: Vec<SsUnit> = self.network.units().collect();
        let mut changed = false;

        for first in 0..num_devices {
            for second in (first + 1)..num_devices {
                let (Some(unit_first), Some(unit_second)) =
                    (matching.assignment(first), matching.assignment(second))
                else {
                    continue;
                };
                if unit_first == unit_second
                    || !self.network.in_los(first, unit_second.stop_point)
                    || !self.network.in_los(second, unit_first.stop_point)
                {
                    continue;
                }
                let candidate = SwapCandidate::Exchange { first, second };
                changed |= self.consider(matching, candidate, accept, on_applied);
            }
        }
        for device in 0..num_devices {
            for &target in &units {
                let Some(current) = matching.assignment(device) else { break };
                if target == current
                    || matching.occupancy(target) >= quota
                    || !self.network.in_los(device, target.stop_point)
                {
                    continue;
                }
                let candidate = SwapCandidate::MoveToVacancy { device, target };
                changed |= self.consider(matching, candidate, accept, on_applied);
            }
        }
        for device in 0..num_devices {
            for &target in &units {
                if matching.assignment(device).is_some() {
                    break;
                }
                if matching.occupancy(target) >= quota
                    || !self.network.in_los(device, target.stop_point)
                {
                    continue;
                }
                let candidate = SwapCandidate::AdmitUnmatched { device, target };
                changed |= self.consider(matching, candidate, accept, on_applied);
            }
        }
        changed
    }
}

/// Swap-stabilize a matching in place: repeat full passes, keeping every swap
/// that strictly raises EE, until a pass applies none. The result is
/// exchange-stable for the given powers.
pub fn stabilize(
    network: &Network,
    matching: &mut Matching,
    powers: &PowerAllocation,
) -> SwapStats {
    let mut driver = SwapDriver::new(network, matching, powers);
    let mut accept = |ee_new: f64, ee_cur: f64| ee_new > ee_cur;
    let mut on_applied = |_: &Matching, _: f64| {};
    while driver.sweep(matching, &mut accept, &mut on_applied) {}
    driver.stats
}

/// JDSSA-1: initialization followed by swap stabilization.
pub fn jdssa1(network: &Network, powers: &PowerAllocation) -> (Matching, SwapStats) {
    let mut matching = initialize_matching(network);
    let stats = stabilize(network, &mut matching, powers);
    (matching, stats)
}

/// Exploration phase of JDSSA-2 from a given starting state: `t_max` passes
/// in which blocking swaps apply with probability one and non-blocking but
/// feasible swaps with probability `epsilon`. Returns the best matching ever
/// visited; deterministic for a given seed.
pub fn explore_from(
    network: &Network,
    mut matching: Matching,
    powers: &PowerAllocation,
    t_max: usize,
    epsilon: f64,
    seed: u64,
) -> (Matching, SwapStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut driver = SwapDriver::new(network, &matching, powers);
    let mut best = matching.clone();
    let mut best_ee = driver.ee;
    for _ in 0..t_max {
        let mut accept =
            |ee_new: f64, ee_cur: f64| ee_new > ee_cur || rng.gen::<f64>() < epsilon;
        let mut on_applied = |state: &Matching, ee_new: f64| {
            if ee_new > best_ee {
                best_ee = ee_new;
                best = state.clone();
            }
        };
        driver.sweep(&mut matching, &mut accept, &mut on_applied);
    }
    (best, driver.stats)
}

/// JDSSA-2: initialization followed by ε-exploration.
pub fn jdssa2(
    network: &Network,
    powers: &PowerAllocation,
    t_max: usize,
    epsilon: f64,
    seed: u64,
) -> (Matching, SwapStats) {
    let matching = initialize_matching(network);
    explore_from(network, matching, powers, t_max, epsilon, seed)
}

/// Exhaustively test exchange stability: no candidate swap, move, or
/// admission strictly improves EE.
pub fn verify_exchange_stable(
    network: &Network,
    matching: &Matching,
    powers: &PowerAllocation,
) -> bool {
    enumerate_swap_candidates(network, matching)
        .iter()
        .all(|candidate| !is_swap_blocking(network, matching, candidate, powers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Deployment, Device, ScenarioConfig, StopPoint};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Network with explicit device/stop-point geometry and full LoS when
    /// `los_radius_m` is generous.
    fn network(
        devices: Vec<(f64, f64)>,
        stop_points: Vec<(f64, f64)>,
        num_subchannels: usize,
        quota: usize,
        los_radius_m: f64,
    ) -> Network {
        let config = ScenarioConfig {
            num_devices: devices.len(),
            num_subchannels,
            quota,
            ..ScenarioConfig::default()
        };
        let devices = devices
            .into_iter()
            .enumerate()
            .map(|(id, (x_m, y_m))| Device { id, x_m, y_m })
            .collect();
        let stop_points = stop_points
            .into_iter()
            .enumerate()
            .map(|(id, (x_m, y_m))| StopPoint { id, x_m, y_m })
            .collect();
        let deployment = Deployment { stop_points, los_radius_m, altitude_m: 150.0 };
        Network::new(config, devices, deployment)
    }

    fn random_network(
        rng: &mut ChaCha8Rng,
        num_devices: usize,
        stop_points: Vec<(f64, f64)>,
        num_subchannels: usize,
        quota: usize,
        los_radius_m: f64,
    ) -> Network {
        let devices = (0..num_devices)
            .map(|_| {
                let r = 350.0 * rng.gen::<f64>().sqrt();
                let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                (r * theta.cos(), r * theta.sin())
            })
            .collect();
        network(devices, stop_points, num_subchannels, quota, los_radius_m)
    }

    fn four_corners() -> Vec<(f64, f64)> {
        vec![(-175.0, 175.0), (-175.0, -175.0), (175.0, -175.0), (175.0, 175.0)]
    }

    #[test]
    fn single_device_single_unit() {
        let net = network(vec![(10.0, 0.0)], vec![(0.0, 0.0)], 1, 1, 300.0);
        let matching = initialize_matching(&net);
        assert_eq!(matching.assignment(0), Some(SsUnit { subchannel: 0, stop_point: 0 }));
        assert_eq!(matching.matched_count(), 1);
        assert!(matching.validate(&net));
    }

    #[test]
    fn ia_matches_everyone_when_capacity_suffices() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let m = rng.gen_range(1..=12);
            // 2 subchannels x 2 stop points x quota 3 = 12 slots, full coverage
            let net = random_network(&mut rng, m, vec![(-100.0, 0.0), (100.0, 0.0)], 2, 3, 1000.0);
            let matching = initialize_matching(&net);
            assert_eq!(matching.matched_count(), m);
            assert!(matching.validate(&net));
        }
    }

    #[test]
    fn ia_saturates_at_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let net = random_network(&mut rng, 20, vec![(-100.0, 0.0), (100.0, 0.0)], 2, 3, 1000.0);
        let matching = initialize_matching(&net);
        assert_eq!(matching.matched_count(), 12); // min(M, q N K)
        for unit in matching.units() {
            assert_eq!(matching.occupancy(unit), 3);
        }
    }

    #[test]
    fn ia_leaves_out_of_range_devices_unmatched() {
        let net = network(
            vec![(0.0, 0.0), (340.0, 0.0)],
            vec![(0.0, 0.0)],
            2,
            3,
            100.0,
        );
        let matching = initialize_matching(&net);
        assert_eq!(matching.assignment(0), Some(SsUnit { subchannel: 0, stop_point: 0 }));
        assert_eq!(matching.assignment(1), None);
    }

    #[test]
    fn ia_spreads_subchannels_round_robin() {
        let net = network(
            vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
            vec![(0.0, 0.0)],
            3,
            3,
            300.0,
        );
        let matching = initialize_matching(&net);
        for n in 0..3 {
            assert_eq!(matching.occupancy(SsUnit { subchannel: n, stop_point: 0 }), 1);
        }
    }

    #[test]
    fn enumerate_only_exchanges_when_saturated() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let net = random_network(&mut rng, 12, vec![(-100.0, 0.0), (100.0, 0.0)], 2, 3, 1000.0);
        let matching = initialize_matching(&net);
        assert_eq!(matching.matched_count(), 12);
        let candidates = enumerate_swap_candidates(&net, &matching);
        assert!(!candidates.is_empty());
        assert!(candidates
            .iter()
            .all(|c| matches!(c, SwapCandidate::Exchange { .. })));
        assert!(candidates.len() <= 12 * 11 / 2);
    }

    #[test]
    fn enumerate_admits_single_unmatched_device() {
        let net = network(vec![(10.0, 0.0)], vec![(0.0, 0.0)], 1, 1, 300.0);
        let matching = Matching::new(1, 1, 1, 1);
        let candidates = enumerate_swap_candidates(&net, &matching);
        assert_eq!(
            candidates,
            vec![SwapCandidate::AdmitUnmatched {
                device: 0,
                target: SsUnit { subchannel: 0, stop_point: 0 }
            }]
        );
    }

    #[test]
    fn enumerate_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let net = random_network(&mut rng, 9, four_corners(), 2, 2, 400.0);
        let matching = initialize_matching(&net);
        assert_eq!(
            enumerate_swap_candidates(&net, &matching),
            enumerate_swap_candidates(&net, &matching)
        );
    }

    #[test]
    fn symmetric_exchange_is_not_blocking() {
        // both devices equidistant from both stop points: EE unchanged
        let net = network(
            vec![(0.0, 50.0), (0.0, -50.0)],
            vec![(-100.0, 0.0), (100.0, 0.0)],
            1,
            1,
            1000.0,
        );
        let mut matching = Matching::new(2, 1, 2, 1);
        matching.assign(0, SsUnit { subchannel: 0, stop_point: 0 }).unwrap();
        matching.assign(1, SsUnit { subchannel: 0, stop_point: 1 }).unwrap();
        let powers = PowerAllocation::uniform(2, 0.5);
        let candidate = SwapCandidate::Exchange { first: 0, second: 1 };
        assert!(!is_swap_blocking(&net, &matching, &candidate, &powers));
    }

    #[test]
    fn move_to_closer_vacancy_is_blocking() {
        let net = network(
            vec![(100.0, 0.0)],
            vec![(-100.0, 0.0), (100.0, 0.0)],
            1,
            1,
            1000.0,
        );
        let mut matching = Matching::new(1, 1, 2, 1);
        matching.assign(0, SsUnit { subchannel: 0, stop_point: 0 }).unwrap();
        let powers = PowerAllocation::uniform(1, 0.5);
        let candidate = SwapCandidate::MoveToVacancy {
            device: 0,
            target: SsUnit { subchannel: 0, stop_point: 1 },
        };
        assert!(is_swap_blocking(&net, &matching, &candidate, &powers));
    }

    #[test]
    fn los_violation_blocks_approval_regardless_of_ee() {
        let net = network(
            vec![(100.0, 0.0)],
            vec![(100.0, 0.0), (-300.0, 0.0)],
            1,
            1,
            150.0,
        );
        let mut matching = Matching::new(1, 1, 2, 1);
        matching.assign(0, SsUnit { subchannel: 0, stop_point: 0 }).unwrap();
        let powers = PowerAllocation::uniform(1, 0.5);
        let candidate = SwapCandidate::MoveToVacancy {
            device: 0,
            target: SsUnit { subchannel: 0, stop_point: 1 },
        };
        assert!(!is_swap_blocking(&net, &matching, &candidate, &powers));
    }

    #[test]
    fn exchange_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let net = random_network(&mut rng, 8, four_corners(), 2, 2, 1000.0);
        let matching = initialize_matching(&net);
        let candidate = SwapCandidate::Exchange { first: 0, second: 1 };
        if matching.assignment(0).is_some() && matching.assignment(1).is_some() {
            let once = apply_swap(&matching, &candidate).unwrap();
            let twice = apply_swap(&once, &candidate).unwrap();
            assert_eq!(twice, matching);
        }
    }

    #[test]
    fn move_and_admit_update_counts() {
        let net = network(
            vec![(0.0, 0.0), (10.0, 0.0)],
            vec![(0.0, 0.0)],
            2,
            2,
            300.0,
        );
        let mut matching = Matching::new(2, 2, 1, 2);
        matching.assign(0, SsUnit { subchannel: 0, stop_point: 0 }).unwrap();

        let moved = apply_swap(
            &matching,
            &SwapCandidate::MoveToVacancy {
                device: 0,
                target: SsUnit { subchannel: 1, stop_point: 0 },
            },
        )
        .unwrap();
        assert_eq!(moved.occupancy(SsUnit { subchannel: 0, stop_point: 0 }), 0);
        assert_eq!(moved.occupancy(SsUnit { subchannel: 1, stop_point: 0 }), 1);
        assert!(moved.validate(&net));

        let admitted = apply_swap(
            &moved,
            &SwapCandidate::AdmitUnmatched {
                device: 1,
                target: SsUnit { subchannel: 0, stop_point: 0 },
            },
        )
        .unwrap();
        assert_eq!(admitted.matched_count(), 2);
        assert!(admitted.validate(&net));
    }

    #[test]
    fn apply_swap_rejects_full_target() {
        let net = network(
            vec![(0.0, 0.0), (10.0, 0.0)],
            vec![(0.0, 0.0)],
            2,
            1,
            300.0,
        );
        let mut matching = Matching::new(2, 2, 1, 1);
        matching.assign(0, SsUnit { subchannel: 0, stop_point: 0 }).unwrap();
        matching.assign(1, SsUnit { subchannel: 1, stop_point: 0 }).unwrap();
        let result = apply_swap(
            &matching,
            &SwapCandidate::MoveToVacancy {
                device: 0,
                target: SsUnit { subchannel: 1, stop_point: 0 },
            },
        );
        assert!(matches!(result, Err(Error::QuotaViolation { .. })));
        let _ = net;
    }

    #[test]
    fn jdssa1_fixed_point_costs_no_swaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let net = random_network(&mut rng, 10, four_corners(), 3, 2, 400.0);
        let powers = PowerAllocation::uniform(10, 0.5);
        let (mut stable, _) = jdssa1(&net, &powers);
        let before = stable.clone();
        let stats = stabilize(&net, &mut stable, &powers);
        assert_eq!(stats.swaps, 0);
        assert_eq!(stable, before);
    }

    #[test]
    fn jdssa1_output_is_exchange_stable_with_increasing_ee() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..5 {
            let net = random_network(&mut rng, 14, four_corners(), 2, 2, 400.0);
            let powers = PowerAllocation::uniform(14, 0.5);
            let (matching, stats) = jdssa1(&net, &powers);
            assert!(matching.validate(&net));
            assert!(verify_exchange_stable(&net, &matching, &powers));
            for pair in stats.ee_trace.windows(2) {
                assert!(pair[1] > pair[0]);
            }
            assert_eq!(stats.swaps + 1, stats.ee_trace.len());
        }
    }

    /// Highest EE over every full assignment, by exhaustive enumeration.
    ///
    /// The swap/move/admit operations never evict a device, so the game's
    /// state space keeps every matchable device matched; the oracle leaves a
    /// device out only when no feasible slot remains.
    fn exhaustive_best_ee(network: &Network, powers: &PowerAllocation) -> f64 {
        fn recurse(
            network: &Network,
            powers: &PowerAllocation,
            units: &[SsUnit],
            matching: &mut Matching,
            device: usize,
            best: &mut f64,
        ) {
            if device == network.num_devices() {
                let ee = network_ee(network, matching, powers);
                if ee > *best {
                    *best = ee;
                }
                return;
            }
            let mut assigned_somewhere = false;
            for &unit in units {
                if matching.has_vacancy(unit) && network.in_los(device, unit.stop_point) {
                    assigned_somewhere = true;
                    matching.assign(device, unit).unwrap();
                    recurse(network, powers, units, matching, device + 1, best);
                    matching.unassign(device);
                }
            }
            if !assigned_somewhere {
                recurse(network, powers, units, matching, device + 1, best);
            }
        }
        let units: Vec<SsUnit> = network.units().collect();
        let mut matching = Matching::new(
            network.num_devices(),
            network.num_subchannels(),
            network.num_stop_points(),
            network.config().quota,
        );
        let mut best = 0.0;
        recurse(network, powers, &units, &mut matching, 0, &mut best);
        best
    }

    #[test]
    fn jdssa1_reaches_a_local_maximum_on_tiny_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..5 {
            let net = random_network(&mut rng, 5, vec![(-120.0, 0.0), (120.0, 0.0)], 2, 2, 600.0);
            let powers = PowerAllocation::uniform(5, 0.5);
            let (matching, _) = jdssa1(&net, &powers);
            // no single candidate improves the final state
            assert!(verify_exchange_stable(&net, &matching, &powers));
        }
    }

    #[test]
    fn jdssa2_with_zero_epsilon_matches_truncated_jdssa1() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let net = random_network(&mut rng, 8, four_corners(), 2, 2, 500.0);
        let powers = PowerAllocation::uniform(8, 0.5);
        let (stable, _) = jdssa1(&net, &powers);
        let (explored, stats) = jdssa2(&net, &powers, 50, 0.0, 9);
        assert_eq!(explored, stable);
        assert_eq!(stats.exploration_swaps, 0);
    }

    #[test]
    fn jdssa2_returns_best_state_visited() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let net = random_network(&mut rng, 6, vec![(-120.0, 0.0), (120.0, 0.0)], 2, 2, 600.0);
        let powers = PowerAllocation::uniform(6, 0.5);
        let (best, stats) = jdssa2(&net, &powers, 200, 0.05, 17);
        let best_ee = network_ee(&net, &best, &powers);
        for &ee in &stats.ee_trace {
            assert!(best_ee >= ee - 1e-12);
        }
    }

    #[test]
    fn jdssa2_finds_global_optimum_on_tiny_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let net = random_network(&mut rng, 6, vec![(-120.0, 0.0), (120.0, 0.0)], 2, 2, 600.0);
        let powers = PowerAllocation::uniform(6, 0.5);
        let target = exhaustive_best_ee(&net, &powers);
        let (best, _) = jdssa2(&net, &powers, 2_000, 0.01, 29);
        let ee = network_ee(&net, &best, &powers);
        assert!(ee <= target + 1e-9);
        assert!((ee - target).abs() <= 1e-9 * target, "ee {ee} vs optimum {target}");
    }

    #[test]
    fn jdssa2_best_ee_is_monotone_in_iteration_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        let net = random_network(&mut rng, 6, vec![(-120.0, 0.0), (120.0, 0.0)], 2, 2, 600.0);
        let powers = PowerAllocation::uniform(6, 0.5);
        let mut previous = 0.0;
        for t_max in [5, 20, 80, 320] {
            let (best, _) = jdssa2(&net, &powers, t_max, 0.02, 31);
            let ee = network_ee(&net, &best, &powers);
            assert!(ee >= previous - 1e-12);
            previous = ee;
        }
    }

    #[test]
    fn jdssa2_is_deterministic_for_a_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        let net = random_network(&mut rng, 8, four_corners(), 2, 2, 500.0);
        let powers = PowerAllocation::uniform(8, 0.5);
        let (a, stats_a) = jdssa2(&net, &powers, 30, 0.05, 5);
        let (b, stats_b) = jdssa2(&net, &powers, 30, 0.05, 5);
        assert_eq!(a, b);
        assert_eq!(stats_a, stats_b);
    }

    #[test]
    fn empty_network_is_vacuously_stable() {
        let net = network(vec![], vec![(0.0, 0.0)], 2, 2, 300.0);
        let matching = Matching::new(0, 2, 1, 2);
        let powers = PowerAllocation::uniform(0, 0.5);
        assert!(verify_exchange_stable(&net, &matching, &powers));
    }

    #[test]
    fn dominated_vacancy_is_detected_as_unstable() {
        // a lone device parked at the far stop point
        let net = network(
            vec![(100.0, 0.0)],
            vec![(-100.0, 0.0), (100.0, 0.0)],
            1,
            1,
            1000.0,
        );
        let mut matching = Matching::new(1, 1, 2, 1);
        matching.assign(0, SsUnit { subchannel: 0, stop_point: 0 }).unwrap();
        let powers = PowerAllocation::uniform(1, 0.5);
        assert!(!verify_exchange_stable(&net, &matching, &powers));
    }

    #[test]
    fn matching_csv_layout() {
        let mut matching = Matching::new(3, 2, 2, 1);
        matching.assign(0, SsUnit { subchannel: 1, stop_point: 0 }).unwrap();
        matching.assign(2, SsUnit { subchannel: 0, stop_point: 1 }).unwrap();
        assert_eq!(
            matching_to_csv(&matching),
            "device_id,subchannel,stop_point\n0,1,0\n1,,\n2,0,1\n"
        );
    }
}
