//! Per-cluster transmit power allocation: the energy-efficiency ratio is
//! maximized with Dinkelbach's algorithm, whose concave inner problem has a
//! closed-form greedy solution certified against the KKT conditions.

use std::f64::consts::LN_2;

use crate::channel::Cluster;
use crate::scenario::ScenarioConfig;
use crate::Error;

/// Dinkelbach termination threshold on the subtractive objective.
pub const DINKELBACH_MU: f64 = 1e-8;
/// Iteration cap; superlinear convergence makes hitting it a bug signal.
pub const DINKELBACH_MAX_ITERATIONS: usize = 100;
/// Gradient tolerance for the KKT stationarity certificate.
pub const KKT_TOLERANCE: f64 = 1e-9;
/// Largest cluster the exhaustive grid oracle accepts.
pub const ORACLE_MAX_CLUSTER: usize = 4;

/// The per-unit ratio maximization: gains in decoding (descending) order, the
/// noise floor, the transmit power box and the per-device circuit power.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalProblem {
    gains: Vec<f64>,
    pub noise_power_w: f64,
    pub p_min_w: f64,
    pub p_max_w: f64,
    pub p_circuit_w: f64,
}

impl FractionalProblem {
    /// Build a problem; gains are sorted into descending order.
    pub fn new(
        mut gains: Vec<f64>,
        noise_power_w: f64,
        p_min_w: f64,
        p_max_w: f64,
        p_circuit_w: f64,
    ) -> Self {
        assert!(gains.iter().all(|&g| g > 0.0), "gains must be positive");
        assert!(noise_power_w > 0.0, "noise power must be positive");
        assert!(
            0.0 < p_min_w && p_min_w <= p_max_w,
            "power bounds must satisfy 0 < P_min <= P_max"
        );
        gains.sort_by(|a, b| b.partial_cmp(a).expect("gains are finite"));
        Self { gains, noise_power_w, p_min_w, p_max_w, p_circuit_w }
    }

    /// The sub-problem for one occupied SS unit.
    pub fn from_cluster(cluster: &Cluster, config: &ScenarioConfig) -> Self {
        Self::new(
            cluster.members().iter().map(|m| m.1.value()).collect(),
            config.noise_power_w,
            config.p_min_w,
            config.p_max_w,
            config.p_circuit_w,
        )
    }

    /// Gains in decoding (descending) order.
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn size(&self) -> usize {
        self.gains.len()
    }

    /// Total received power over noise after SIC telescoping.
    fn total_received(&self, powers: &[f64]) -> f64 {
        powers.iter().zip(&self.gains).map(|(p, g)| p * g).sum()
    }

    /// Transmit plus circuit power of the whole cluster.
    pub fn total_power(&self, powers: &[f64]) -> f64 {
        powers.iter().sum::<f64>() + self.size() as f64 * self.p_circuit_w
    }

    /// The EE ratio at a given allocation.
    pub fn ratio(&self, powers: &[f64]) -> f64 {
        telescoped_rate(self, powers) / self.total_power(powers)
    }
}

/// Cluster sum rate in its telescoped closed form:
/// `log2(1 + sum(p_m g_m) / sigma^2)`.
pub fn telescoped_rate(problem: &FractionalProblem, powers: &[f64]) -> f64 {
    (1.0 + problem.total_received(powers) / problem.noise_power_w).log2()
}

/// The parametric subtractive objective `f(tau, {p}) = rate - tau * power`.
pub fn dinkelbach_objective(problem: &FractionalProblem, tau: f64, powers: &[f64]) -> f64 {
    telescoped_rate(problem, powers) - tau * problem.total_power(powers)
}

/// Global maximizer of the concave subtractive objective over the power box.
///
/// The objective depends on the allocation only through `S = sum(p_m g_m)`
/// and the linear cost, so the maximizer is a water level: starting from all
/// devices at P_min, powers rise to P_max in descending-gain order until the
/// marginal device where `g_m / (ln2 (sigma^2 + S)) = tau`; everyone after it
/// stays at P_min.
pub fn inner_maximize(problem: &FractionalProblem, tau: f64) -> Vec<f64> {
    let n = problem.size();
    if n == 0 {
        return Vec::new();
    }
    if tau <= 0.0 {
        // no power penalty: the rate is strictly increasing in every power
        return vec![problem.p_max_w; n];
    }
    let a = tau * LN_2;
    let mut powers = vec![problem.p_min_w; n];
    let mut received = problem.total_received(&powers);
    for m in 0..n {
        let g = problem.gains[m];
        let without = received - powers[m] * g;
        let raised = without + problem.p_max_w * g;
        if g >= a * (problem.noise_power_w + raised) {
            powers[m] = problem.p_max_w;
            received = without + powers[m] * g;
        } else if g <= a * (problem.noise_power_w + received) {
            // gradient already non-positive here; weaker devices stay put too
            break;
        } else {
            // marginal device: solve g = a (sigma^2 + S_others + p g) for p
            let p = (g / a - problem.noise_power_w - without) / g;
            powers[m] = p.clamp(problem.p_min_w, problem.p_max_w);
            break;
        }
    }
    debug_assert!(kkt_max_violation(problem, tau, &powers) <= KKT_TOLERANCE);
    powers
}

/// Worst violation of the KKT conditions at an allocation: each device must
/// sit at a bound with the right gradient sign or satisfy the stationarity
/// equation `g_m / (ln2 (sigma^2 + S)) = tau`.
pub fn kkt_max_violation(problem: &FractionalProblem, tau: f64, powers: &[f64]) -> f64 {
    let received = problem.total_received(powers);
    let denom = LN_2 * (problem.noise_power_w + received);
    let bound_eps = 1e-12 * problem.p_max_w.max(1.0);
    let mut worst: f64 = 0.0;
    for (&p, &g) in powers.iter().zip(&problem.gains) {
        let marginal = g / denom;
        let at_max = p >= problem.p_max_w - bound_eps;
        let at_min = p <= problem.p_min_w + bound_eps;
        let violation = match (at_max, at_min) {
            // degenerate box: the point is forced, any gradient is fine
            (true, true) => 0.0,
            (true, false) => (tau - marginal).max(0.0),
            (false, true) => (marginal - tau).max(0.0),
            (false, false) => (marginal - tau).abs(),
        };
        worst = worst.max(violation);
    }
    worst
}

/// One Dinkelbach iteration's bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachState {
    /// Ratio parameter after the iteration's update.
    pub tau: f64,
    /// Subtractive objective at the iteration's maximizer.
    pub f_max: f64,
    pub iteration: usize,
}

/// Result of a converged Dinkelbach run.
#[derive(Debug, Clone, PartialEq)]
pub struct DabpaResult {
    /// Optimal powers in decoding order.
    pub powers: Vec<f64>,
    /// The optimal per-unit EE ratio.
    pub ratio: f64,
    pub iterations: usize,
    /// Per-iteration states, for convergence diagnostics.
    pub trace: Vec<DinkelbachState>,
}

/// Dinkelbach's algorithm for the per-unit EE maximization.
///
/// Starting from `tau = 0`, alternates the concave inner maximization with
/// the ratio update until the subtractive optimum drops to the threshold.
pub fn dabpa(problem: &FractionalProblem) -> Result<DabpaResult, Error> {
    if problem.size() == 0 {
        return Err(Error::EmptyCluster);
    }
    let mut tau = 0.0;
    let mut f_max = DINKELBACH_MU + 0.01;
    let mut powers = Vec::new();
    let mut trace = Vec::new();
    let mut iteration = 0;
    while f_max > DINKELBACH_MU {
        iteration += 1;
        if iteration > DINKELBACH_MAX_ITERATIONS {
            return Err(Error::IterationLimit { limit: DINKELBACH_MAX_ITERATIONS });
        }
        powers = inner_maximize(problem, tau);
        f_max = dinkelbach_objective(problem, tau, &powers);
        tau = problem.ratio(&powers);
        trace.push(DinkelbachState { tau, f_max, iteration });
    }
    Ok(DabpaResult { powers, ratio: tau, iterations: iteration, trace })
}

/// Exhaustive grid search over the power box; the independent optimality
/// oracle for small clusters.
pub fn brute_force_power_oracle(
    problem: &FractionalProblem,
    grid_step: f64,
) -> Result<(Vec<f64>, f64), Error> {
    let n = problem.size();
    if n == 0 {
        return Err(Error::EmptyCluster);
    }
    if n > ORACLE_MAX_CLUSTER {
        return Err(Error::ClusterTooLarge { size: n, max: ORACLE_MAX_CLUSTER });
    }
    assert!(grid_step > 0.0, "grid step must be positive");

    let mut axis = Vec::new();
    let mut p = problem.p_min_w;
    while p < problem.p_max_w - 1e-15 {
        axis.push(p);
        p += grid_step;
    }
    axis.push(problem.p_max_w);

    let mut indices = vec![0usize; n];
    let mut point = vec![axis[0]; n];
    let mut best_point = point.clone();
    let mut best_ratio = f64::NEG_INFINITY;
    loop {
        let ratio = problem.ratio(&point);
        if ratio > best_ratio {
            best_ratio = ratio;
            best_point.copy_from_slice(&point);
        }
        // odometer over the grid
        let mut dim = 0;
        loop {
            if dim == n {
                return Ok((best_point, best_ratio));
            }
            indices[dim] += 1;
            if indices[dim] < axis.len() {
                point[dim] = axis[indices[dim]];
                break;
            }
            indices[dim] = 0;
            point[dim] = axis[0];
            dim += 1;
        }
    }
}

/// Upper bound on how far the true optimum can exceed the best grid point:
/// one grid step times a bound on the ratio's gradient over the box.
pub fn oracle_lipschitz_slack(problem: &FractionalProblem, grid_step: f64) -> f64 {
    let n = problem.size() as f64;
    let received_min = problem.p_min_w * problem.gains.iter().sum::<f64>();
    let received_max = problem.p_max_w * problem.gains.iter().sum::<f64>();
    let cost_min = n * (problem.p_min_w + problem.p_circuit_w);
    let cost_max = n * (problem.p_max_w + problem.p_circuit_w);
    let rate_max = (1.0 + received_max / problem.noise_power_w).log2();
    let per_coord: f64 = problem
        .gains
        .iter()
        .map(|&g| {
            let rate_slope = g / (LN_2 * (problem.noise_power_w + received_min));
            (rate_slope * cost_max + rate_max) / (cost_min * cost_min)
        })
        .sum();
    grid_step * per_coord
}
