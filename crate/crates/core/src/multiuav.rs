//! Minimum-fleet coverage planning.
//!
//! Users are grouped (k-means or horizontal slabs), each group gets one UAV
//! placed by PSO, and `k` grows from 2 until every UAV fits its power cap.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Bounds3, Interval, Point3};
use crate::optimize::PsoConfig;
use crate::placement::place_pso;
use crate::propagation::{required_power_watts, LinkBudget, RadioParams};
use crate::scenario::{user_path_loss, Building, IndoorUser, UavPlacement};

/// Which user count enters the rate exponent `v M / B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateUsers {
    /// The whole roster shares the band.
    #[default]
    Total,
    /// Each UAV's band is shared by its own cluster only.
    PerCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiUavConfig {
    pub max_power_w: f64,
    pub frequency_ghz: f64,
    pub bandwidth_hz: f64,
    pub rate_bps: f64,
    pub noise_dbm: f64,
    pub bounds: Bounds3,
    pub kmeans_seed: u64,
    pub pso_seed: u64,
    pub population: usize,
    pub max_iterations: usize,
    pub max_k: usize,
    pub rate_users: RateUsers,
}

impl Default for MultiUavConfig {
    fn default() -> Self {
        Self {
            max_power_w: 5.0,
            frequency_ghz: 2.0,
            bandwidth_hz: 50e6,
            rate_bps: 2.2e6,
            noise_dbm: -150.0,
            bounds: Bounds3 {
                x: Interval {
                    min: 25.0,
                    max: 1000.0,
                },
                y: Interval { min: 0.0, max: 50.0 },
                z: Interval {
                    min: 0.0,
                    max: 1000.0,
                },
            },
            kmeans_seed: 1,
            pso_seed: 1,
            population: 50,
            max_iterations: 200,
            max_k: 50,
            rate_users: RateUsers::Total,
        }
    }
}

impl MultiUavConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_power_w > 0.0) {
            return Err(Error::invalid("max_power_w", "must be positive"));
        }
        if self.max_k < 2 {
            return Err(Error::invalid("max_k", "must be at least 2"));
        }
        self.budget(1).validate()?;
        self.radio()?;
        self.pso(0, 0).validate()
    }

    pub fn radio(&self) -> Result<RadioParams> {
        RadioParams::low_shf(self.frequency_ghz)
    }

    /// Link budget with `users` sharing the band.
    pub fn budget(&self, users: usize) -> LinkBudget {
        LinkBudget {
            noise_dbm: self.noise_dbm,
            bandwidth_hz: self.bandwidth_hz,
            rate_bps: self.rate_bps,
            users_for_rate: users.max(1),
            ..LinkBudget::default()
        }
    }

    fn pso(&self, k: usize, cluster: usize) -> PsoConfig {
        PsoConfig {
            population: self.population,
            max_iterations: self.max_iterations,
            bounds: self.bounds,
            seed: derive_seed(self.pso_seed, k as u64, cluster as u64),
            ..PsoConfig::default()
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for restart `k`, member `j`.
pub fn derive_seed(seed: u64, k: u64, j: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ k) ^ j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Point3>,
    /// Cluster index per user, in roster order.
    pub assignment: Vec<usize>,
    pub iterations: usize,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss_history: Vec<f64>,
}

const KMEANS_MAX_ITERATIONS: usize = 10_000;

fn nearest(p: Point3, centroids: &[Point3]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = p.distance_squared(*c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn wcss(points: &[Point3], centroids: &[Point3], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &j)| p.distance_squared(centroids[j]))
        .sum()
}

/// Lloyd's algorithm with Forgy initialization (k distinct users).
pub fn kmeans(users: &[IndoorUser], k: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if k > users.len() {
        return Err(Error::invalid(
            "k",
            format!("{k} clusters requested for {} users", users.len()),
        ));
    }
    let points: Vec<Point3> = users.iter().map(|u| u.position).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Point3> = sample(&mut rng, points.len(), k)
        .into_iter()
        .map(|i| points[i])
        .collect();
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(*p, &centroids)).collect();
    let mut wcss_history = vec![wcss(&points, &centroids, &assignment)];
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITERATIONS {
        iterations += 1;
        let mut sums = vec![Point3::default(); k];
        let mut counts = vec![0usize; k];
        for (p, &j) in points.iter().zip(&assignment) {
            sums[j] = sums[j] + *p;
            counts[j] += 1;
        }
        let mut taken: Vec<usize> = Vec::new();
        for j in 0..k {
            if counts[j] > 0 {
                let n = counts[j] as f64;
                centroids[j] = Point3::new(sums[j].x / n, sums[j].y / n, sums[j].z / n);
            } else {
                let old = centroids[j];
                let far = (0..points.len())
                    .filter(|i| !taken.contains(i))
                    .max_by(|&a, &b| {
                        points[a]
                            .distance_squared(old)
                            .total_cmp(&points[b].distance_squared(old))
                            .then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                taken.push(far);
                centroids[j] = points[far];
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(*p, &centroids)).collect();
        wcss_history.push(wcss(&points, &centroids, &next));
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Ok(KMeansResult {
        centroids,
        assignment,
        iterations,
        wcss_history,
    })
}

/// Transmit power (W) for one UAV to serve `members`, with `rate_users`
/// users sharing the band in the rate exponent.
pub fn cluster_power(
    members: &[IndoorUser],
    placement: Point3,
    config: &MultiUavConfig,
    rate_users: usize,
    building: &Building,
) -> Result<f64> {
    let params = config.radio()?;
    let budget = config.budget(rate_users);
    members
        .iter()
        .map(|u| required_power_watts(user_path_loss(placement, u, &params, building)?, &budget))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMethod {
    Clustered,
    UniformSplit,
}

impl PlanMethod {
    pub fn name(self) -> &'static str {
        match self {
            PlanMethod::Clustered => "clustered",
            PlanMethod::UniformSplit => "uniform_split",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterPlan {
    pub method: PlanMethod,
    pub k: usize,
    /// `(user id, UAV index)` in roster order.
    pub assignment: Vec<(u32, usize)>,
    /// One slot per UAV; `None` for a slot with no users.
    pub placements: Vec<Option<UavPlacement>>,
    pub powers_w: Vec<f64>,
    pub member_counts: Vec<usize>,
    pub feasible: bool,
    /// Largest UAV power at every tested `k`, in scan order.
    pub scan: Vec<(usize, f64)>,
}

impl ClusterPlan {
    pub fn max_power_w(&self) -> f64 {
        self.powers_w.iter().copied().fold(0.0, f64::max)
    }
}

struct Attempt {
    placements: Vec<Option<UavPlacement>>,
    powers: Vec<f64>,
    counts: Vec<usize>,
}

fn place_groups(
    groups: &[Vec<IndoorUser>],
    k: usize,
    total_users: usize,
    building: &Building,
    config: &MultiUavConfig,
) -> Result<Attempt> {
    let params = config.radio()?;
    let solved: Vec<Result<(Option<UavPlacement>, f64)>> = groups
        .par_iter()
        .enumerate()
        .map(|(j, members)| {
            if members.is_empty() {
                return Ok((None, 0.0));
            }
            let (mut placement, _) = place_pso(building, members, &params, &config.pso(k, j))?;
            let rate_users = match config.rate_users {
                RateUsers::Total => total_users,
                RateUsers::PerCluster => members.len(),
            };
            let power = cluster_power(members, placement.position, config, rate_users, building)?;
            placement.transmit_power_w = Some(power);
            placement.within_loss_cap = Some(power <= config.max_power_w);
            Ok((Some(placement), power))
        })
        .collect();
    let mut attempt = Attempt {
        placements: Vec::with_capacity(k),
        powers: Vec::with_capacity(k),
        counts: groups.iter().map(Vec::len).collect(),
    };
    for r in solved {
        let (p, w) = r?;
        attempt.placements.push(p);
        attempt.powers.push(w);
    }
    Ok(attempt)
}

fn scan_k(
    method: PlanMethod,
    users: &[IndoorUser],
    building: &Building,
    config: &MultiUavConfig,
    mut partition: impl FnMut(usize) -> Result<Vec<usize>>,
) -> Result<ClusterPlan> {
    if users.is_empty() {
        return Err(Error::invalid("users", "roster is empty"));
    }
    config.validate()?;
    building.validate()?;
    let mut scan = Vec::new();
    let mut last_profile = Vec::new();
    for k in 2..=config.max_k {
        let labels = partition(k)?;
        let mut groups = vec![Vec::new(); k];
        for (u, &j) in users.iter().zip(&labels) {
            groups[j].push(*u);
        }
        let attempt = place_groups(&groups, k, users.len(), building, config)?;
        let worst = attempt.powers.iter().copied().fold(0.0, f64::max);
        scan.push((k, worst));
        log::debug!("{} k={k}: worst UAV power {worst:.4} W", method.name());
        if worst <= config.max_power_w {
            return Ok(ClusterPlan {
                method,
                k,
                assignment: users.iter().zip(&labels).map(|(u, &j)| (u.id, j)).collect(),
                placements: attempt.placements,
                powers_w: attempt.powers,
                member_counts: attempt.counts,
                feasible: true,
                scan,
            });
        }
        last_profile = attempt.powers;
    }
    let worst_power_w = last_profile.iter().copied().fold(0.0, f64::max);
    Err(Error::Infeasible {
        max_k: config.max_k,
        worst_power_w,
        profile: last_profile,
    })
}

/// k-means clustering with one PSO-placed UAV per cluster.
///
/// When `k` exceeds the roster size the surplus slots stay empty.
pub fn plan_clustered(
    users: &[IndoorUser],
    building: &Building,
    config: &MultiUavConfig,
) -> Result<ClusterPlan> {
    scan_k(PlanMethod::Clustered, users, building, config, |k| {
        let k_eff = k.min(users.len());
        let seed = derive_seed(config.kmeans_seed, k as u64, 0);
        Ok(kmeans(users, k_eff, seed)?.assignment)
    })
}

/// Slab index of altitude `z` when `[0, z_b]` is cut into `k` equal slabs.
pub fn slab_index(z: f64, z_b: f64, k: usize) -> usize {
    ((z / z_b * k as f64).floor().max(0.0) as usize).min(k - 1)
}

/// Baseline: `k` equal-height horizontal slabs, one PSO-placed UAV each.
pub fn plan_uniform_split(
    users: &[IndoorUser],
    building: &Building,
    config: &MultiUavConfig,
) -> Result<ClusterPlan> {
    scan_k(PlanMethod::UniformSplit, users, building, config, |k| {
        Ok(users
            .iter()
            .map(|u| slab_index(u.position.z, building.z_b, k))
            .collect())
    })
}

/// Constraint check of a plan: exact cover, power caps and placement bounds.
/// Returns the list of violations (empty when the plan is valid).
pub fn audit(
    plan: &ClusterPlan,
    users: &[IndoorUser],
    building: &Building,
    config: &MultiUavConfig,
) -> Vec<String> {
    let mut violations = Vec::new();
    if plan.assignment.len() != users.len() {
        violations.push(format!(
            "{} assignments for {} users",
            plan.assignment.len(),
            users.len()
        ));
    }
    for (u, (id, j)) in users.iter().zip(&plan.assignment) {
        if u.id != *id {
            violations.push(format!("assignment row for user {id} where user {} expected", u.id));
        }
        if *j >= plan.k {
            violations.push(format!("user {id} assigned to UAV {j} of {}", plan.k));
        }
    }
    let slots = [plan.placements.len(), plan.powers_w.len(), plan.member_counts.len()];
    if slots.iter().any(|&n| n != plan.k) {
        violations.push(format!("slot counts {slots:?} do not match k = {}", plan.k));
    }
    for j in 0..plan.k {
        let members = plan.assignment.iter().filter(|(_, a)| *a == j).count();
        if plan.member_counts.get(j) != Some(&members) {
            violations.push(format!("UAV {j}: member count mismatch"));
        }
    }
    let bounds = config.bounds.with_x_floor(building.x_b);
    for (j, (p, w)) in plan.placements.iter().zip(&plan.powers_w).enumerate() {
        if plan.feasible && *w > config.max_power_w {
            violations.push(format!("UAV {j} needs {w} W, above the {} W cap", config.max_power_w));
        }
        match p {
            Some(p) if !bounds.contains(p.position) => {
                violations.push(format!("UAV {j} at {:?} is outside the bounds", p.position))
            }
            None if plan.member_counts.get(j).copied().unwrap_or(0) > 0 => {
                violations.push(format!("UAV {j} serves users but has no placement"))
            }
            _ => {}
        }
    }
    violations
}
