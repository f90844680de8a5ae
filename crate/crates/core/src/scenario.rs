//! Building geometry, indoor user rosters and the total-path-loss objective.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::propagation::{self, db_to_linear, Band, LinkBudget, RadioParams};

/// Tolerance used for the in-building test and the mirror-closure check (m).
pub const POSITION_TOLERANCE: f64 = 1e-9;

/// High-rise building occupying `[0, x_b] x [0, y_b] x [0, z_b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub x_b: f64,
    pub y_b: f64,
    pub z_b: f64,
    pub floor_height: f64,
}

impl Building {
    pub fn new(x_b: f64, y_b: f64, z_b: f64, floor_height: f64) -> Result<Self> {
        let b = Self {
            x_b,
            y_b,
            z_b,
            floor_height,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("x_b", self.x_b),
            ("y_b", self.y_b),
            ("z_b", self.z_b),
            ("floor_height", self.floor_height),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let ratio = self.z_b / self.floor_height;
        if (ratio - ratio.round()).abs() > 1e-9 {
            vec![format!(
                "building height {} m is not a whole number of {} m floors",
                self.z_b, self.floor_height
            )]
        } else {
            Vec::new()
        }
    }

    /// Number of storeys, `z_b / floor_height` rounded down.
    pub fn floor_count(&self) -> usize {
        ((self.z_b / self.floor_height) + 1e-9).floor() as usize
    }

    pub fn contains(&self, p: Point3) -> bool {
        let t = POSITION_TOLERANCE;
        (-t..=self.x_b + t).contains(&p.x)
            && (-t..=self.y_b + t).contains(&p.y)
            && (-t..=self.z_b + t).contains(&p.z)
    }

    /// Centre of the facing wall profile: `(x, y_b / 2, z_b / 2)`.
    pub fn center_line(&self, x: f64) -> Point3 {
        Point3::new(x, 0.5 * self.y_b, 0.5 * self.z_b)
    }

    /// User altitudes implied by the floor convention.
    pub fn user_altitudes(&self, height: UserHeight) -> Vec<f64> {
        let n = self.floor_count();
        match height {
            UserHeight::FloorLevels => (0..=n).map(|k| k as f64 * self.floor_height).collect(),
            UserHeight::MidFloor => (0..n)
                .map(|k| (k as f64 + 0.5) * self.floor_height)
                .collect(),
        }
    }
}

/// Altitude of users within a floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserHeight {
    /// Users on every floor level `k * floor_height`, `k = 0..=z_b / floor_height`.
    #[default]
    FloorLevels,
    /// Users at `(k + 0.5) * floor_height`, one level per storey.
    MidFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndoorUser {
    pub id: u32,
    pub position: Point3,
}

impl IndoorUser {
    pub fn new(id: u32, position: Point3) -> Self {
        Self { id, position }
    }
}

fn check_users_per_floor(users_per_floor: usize) -> Result<()> {
    if users_per_floor == 0 {
        return Err(Error::invalid("users_per_floor", "must be at least 1"));
    }
    Ok(())
}

/// Roster mirrored across the planes `y = y_b / 2` and `z = z_b / 2`.
///
/// Floors are paired with their mirror floor; each draw places one user
/// uniformly in the `y < y_b / 2` half and adds its three mirror images. A
/// floor centred on `z_b / 2` is its own mirror and gets y-mirrored pairs.
pub fn generate_symmetric_users(
    building: &Building,
    users_per_floor: usize,
    height: UserHeight,
    seed: u64,
) -> Result<Vec<IndoorUser>> {
    building.validate()?;
    check_users_per_floor(users_per_floor)?;
    if !users_per_floor.is_multiple_of(4) {
        return Err(Error::invalid(
            "users_per_floor",
            format!("symmetric rosters need a multiple of 4 users per floor, got {users_per_floor}"),
        ));
    }
    let levels = building.user_altitudes(height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<Vec<Point3>> = vec![Vec::with_capacity(users_per_floor); levels.len()];
    let n = levels.len();
    let half_y = 0.5 * building.y_b;
    for lower in 0..n.div_ceil(2) {
        let upper = n - 1 - lower;
        for _ in 0..users_per_floor / 2 {
            let x = rng.random_range(0.0..=building.x_b);
            let y = rng.random_range(0.0..half_y);
            let y_mirror = building.y_b - y;
            let z = levels[lower];
            positions[lower].push(Point3::new(x, y, z));
            positions[lower].push(Point3::new(x, y_mirror, z));
            if upper != lower {
                let z_mirror = building.z_b - z;
                positions[upper].push(Point3::new(x, y, z_mirror));
                positions[upper].push(Point3::new(x, y_mirror, z_mirror));
            }
        }
    }
    Ok(number(positions.into_iter().flatten()))
}

/// Roster with `users_per_floor` users drawn uniformly over each floor.
pub fn generate_uniform_users(
    building: &Building,
    users_per_floor: usize,
    height: UserHeight,
    seed: u64,
) -> Result<Vec<IndoorUser>> {
    building.validate()?;
    check_users_per_floor(users_per_floor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::new();
    for z in building.user_altitudes(height) {
        for _ in 0..users_per_floor {
            let x = rng.random_range(0.0..=building.x_b);
            let y = rng.random_range(0.0..=building.y_b);
            positions.push(Point3::new(x, y, z));
        }
    }
    Ok(number(positions))
}

/// A horizontal slab of the building holding users drawn uniformly in volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserZone {
    pub z_min: f64,
    pub z_max: f64,
    pub count: usize,
}

/// Roster drawn uniformly within each zone, e.g. an event on the upper
/// floors plus the regular occupants below.
pub fn generate_zoned_users(
    building: &Building,
    zones: &[UserZone],
    seed: u64,
) -> Result<Vec<IndoorUser>> {
    building.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::new();
    for zone in zones {
        if !(zone.z_min >= 0.0 && zone.z_min < zone.z_max && zone.z_max <= building.z_b) {
            return Err(Error::invalid(
                "zone",
                format!("[{}, {}] is not a slab of the building", zone.z_min, zone.z_max),
            ));
        }
        for _ in 0..zone.count {
            let x = rng.random_range(0.0..=building.x_b);
            let y = rng.random_range(0.0..=building.y_b);
            let z = rng.random_range(zone.z_min..zone.z_max);
            positions.push(Point3::new(x, y, z));
        }
    }
    Ok(number(positions))
}

fn number(positions: impl IntoIterator<Item = Point3>) -> Vec<IndoorUser> {
    positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| IndoorUser::new(i as u32 + 1, p))
        .collect()
}

pub fn validate_roster(users: &[IndoorUser], building: &Building) -> Result<()> {
    for u in users {
        if !u.position.is_finite() || !building.contains(u.position) {
            return Err(Error::UserOutsideBuilding {
                id: u.id,
                x: u.position.x,
                y: u.position.y,
                z: u.position.z,
            });
        }
    }
    Ok(())
}

/// Parse a roster: one `id, x, y, z` row per line, `#` comments allowed.
pub fn parse_users(text: &str, building: &Building) -> Result<Vec<IndoorUser>> {
    let mut users = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields `id, x, y, z`, found {}", fields.len()),
            });
        }
        let id: u32 = fields[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid user id `{}`", fields[0]),
        })?;
        let mut coords = [0.0; 3];
        for (slot, field) in coords.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("invalid coordinate `{field}`"),
                })?;
        }
        users.push(IndoorUser::new(id, Point3::from_array(coords)));
    }
    validate_roster(&users, building)?;
    Ok(users)
}

pub fn load_users(path: &Path, building: &Building) -> Result<Vec<IndoorUser>> {
    let text = std::fs::read_to_string(path)?;
    parse_users(&text, building)
}

/// Loss (dB) from `uav` to one user, band selected by `params`.
pub fn user_path_loss(
    uav: Point3,
    user: &IndoorUser,
    params: &RadioParams,
    building: &Building,
) -> Result<f64> {
    let geom = propagation::link_geometry(uav, user.position, building).map_err(|e| match e {
        Error::UserOutsideBuilding { x, y, z, .. } => Error::UserOutsideBuilding {
            id: user.id,
            x,
            y,
            z,
        },
        other => other,
    })?;
    let loss = match params.band {
        Band::LowShf => {
            propagation::low_shf_unchecked(&geom, &params.low_shf, params.carrier_frequency_ghz)
        }
        Band::HighShf => {
            propagation::high_shf_unchecked(&geom, &params.high_shf, params.carrier_frequency_ghz)
        }
    };
    Ok(loss.total)
}

/// Sum of per-user path losses in dB, the single-UAV placement objective.
pub fn total_path_loss(
    uav: Point3,
    users: &[IndoorUser],
    params: &RadioParams,
    building: &Building,
) -> Result<f64> {
    users
        .iter()
        .map(|u| user_path_loss(uav, u, params, building))
        .sum()
}

/// Sum of per-user losses in linear units.
pub fn total_linear_loss(
    uav: Point3,
    users: &[IndoorUser],
    params: &RadioParams,
    building: &Building,
) -> Result<f64> {
    users
        .iter()
        .map(|u| user_path_loss(uav, u, params, building).map(db_to_linear))
        .sum()
}

/// Largest linear loss budget a UAV with `max_power_w` can afford:
/// `P_max / ((2^(vM/B) - 1) N)`.
pub fn max_linear_loss(max_power_w: f64, budget: &LinkBudget) -> Result<f64> {
    budget.validate()?;
    Ok(max_power_w / (budget.spectral_factor()? * budget.noise_watts()))
}

/// Check the `L_Total <= L_max` constraint with both sides in linear units.
pub fn meets_loss_cap(
    uav: Point3,
    users: &[IndoorUser],
    params: &RadioParams,
    building: &Building,
    max_power_w: f64,
    budget: &LinkBudget,
) -> Result<bool> {
    Ok(total_linear_loss(uav, users, params, building)? <= max_linear_loss(max_power_w, budget)?)
}

/// Verify that the roster is closed under both mirror reflections. Returns the
/// first user whose image is missing.
pub fn check_symmetric(users: &[IndoorUser], building: &Building) -> Result<()> {
    let mut sorted: Vec<Point3> = users.iter().map(|u| u.position).collect();
    sorted.sort_by(|a, b| a.z.total_cmp(&b.z));
    let tol = 1e-6;
    let has = |p: Point3| {
        let start = sorted.partition_point(|q| q.z < p.z - tol);
        sorted[start..]
            .iter()
            .take_while(|q| q.z <= p.z + tol)
            .any(|q| (q.x - p.x).abs() <= tol && (q.y - p.y).abs() <= tol)
    };
    for u in users {
        let p = u.position;
        let y_image = Point3::new(p.x, building.y_b - p.y, p.z);
        let z_image = Point3::new(p.x, p.y, building.z_b - p.z);
        if !has(y_image) || !has(z_image) {
            return Err(Error::NotSymmetric { id: u.id });
        }
    }
    Ok(())
}

/// Result of a single-UAV placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UavPlacement {
    pub position: Point3,
    /// Objective value at `position` (sum of dB losses).
    pub total_path_loss: f64,
    pub transmit_power_w: Option<f64>,
    /// Outcome of the `L_Total <= L_max` check when a power cap was supplied.
    pub within_loss_cap: Option<bool>,
}

impl UavPlacement {
    pub fn new(position: Point3, total_path_loss: f64) -> Self {
        Self {
            position,
            total_path_loss,
            transmit_power_w: None,
            within_loss_cap: None,
        }
    }

    /// Horizontal distance from the facing wall.
    pub fn standoff(&self, building: &Building) -> f64 {
        self.position.x - building.x_b
    }
}
