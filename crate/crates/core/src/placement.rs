//! Single-UAV placement: worst-corner closed form, centre-line gradient
//! descent for symmetric rosters, and full 3D PSO.

use std::f64::consts::LN_10;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Interval, Point3};
use crate::optimize::{
    gradient_descent_1d, pso, ternary_search, GdConfig, GdResult, OptimizationTrace, PsoConfig,
    TernaryConfig,
};
use crate::propagation::{
    self, min_transmit_power_dbm, Band, LinkBudget, LinkGeometry, LowShfConstants, RadioParams,
};
use crate::scenario::{check_symmetric, total_path_loss, Building, IndoorUser, UavPlacement};

/// Horizontal search range for centre-line placement, measured from the wall.
pub const MAX_STANDOFF: f64 = 1000.0;

/// Location of the worst-served user: a bottom corner on the far wall.
pub const WORST_CORNER: Point3 = Point3::new(0.0, 0.0, 0.0);

fn cubic(c: f64, k: &LowShfConstants) -> f64 {
    let g = 2.0 * k.g3;
    g * c * c * c - g * c * c - (k.w / LN_10 + g) * c + g
}

/// Incident angle (deg) minimizing the low-SHF loss to the worst corner.
///
/// Root of `2 g3 c^3 - 2 g3 c^2 - (w / ln 10 + 2 g3) c + 2 g3` in `c = cos θ`,
/// found by bisection on `(0, 1)`.
pub fn worst_case_angle_low_shf(constants: &LowShfConstants) -> Result<f64> {
    if !(constants.g3 > 0.0 && constants.w > 0.0) {
        return Err(Error::invalid("g3, w", "both must be positive"));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let (f_lo, f_hi) = (cubic(lo, constants), cubic(hi, constants));
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoCubicRoot);
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if cubic(mid, constants).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).acos().to_degrees())
}

/// Number of sign changes of the optimal-angle cubic over `(0, 1)` on a grid.
pub fn cubic_sign_changes(constants: &LowShfConstants, samples: usize) -> usize {
    let values: Vec<f64> = (1..samples)
        .map(|i| cubic(i as f64 / samples as f64, constants))
        .collect();
    values.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}

/// Second derivative in θ of the worst-corner low-SHF loss with the altitude
/// gap held fixed: `(w / ln 10) / sin^2 θ + 2 g3 cos θ (1 - cos θ) + 2 g3 sin^2 θ`.
pub fn low_shf_angle_curvature(theta_deg: f64, constants: &LowShfConstants) -> f64 {
    let (s, c) = theta_deg.to_radians().sin_cos();
    constants.w / LN_10 / (s * s) + 2.0 * constants.g3 * c * (1.0 - c) + 2.0 * constants.g3 * s * s
}

/// Horizontal distance from the facing wall at which the worst corner sees
/// `angle_deg`, for a UAV on the centre line.
pub fn worst_case_standoff(building: &Building, angle_deg: f64) -> Result<f64> {
    building.validate()?;
    if !(angle_deg > 0.0 && angle_deg < 90.0) {
        return Err(Error::AngleOutOfRange(angle_deg));
    }
    let reach = 0.5 * building.z_b / angle_deg.to_radians().tan();
    let half_width = 0.5 * building.y_b;
    if reach <= half_width {
        return Err(Error::InfeasibleGeometry(format!(
            "a {angle_deg} deg ray from the centre line cannot reach the corner: \
             horizontal reach {reach:.3} m <= half width {half_width} m"
        )));
    }
    let d_opt = (reach * reach - half_width * half_width).sqrt() - building.x_b;
    if d_opt < 0.0 {
        return Err(Error::InfeasibleGeometry(format!(
            "optimal angle needs the UAV {:.3} m inside the facing wall",
            -d_opt
        )));
    }
    Ok(d_opt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstCaseResult {
    pub optimal_angle_deg: f64,
    pub standoff_distance: f64,
    pub uav_position: Point3,
    pub min_transmit_power_dbm: f64,
}

fn corner_loss(uav: Point3, building: &Building, params: &RadioParams) -> Result<f64> {
    let geom = propagation::link_geometry(uav, WORST_CORNER, building)?;
    Ok(propagation::path_loss(&geom, params)?.total)
}

/// Closed-form worst-corner placement for the low-SHF band.
pub fn solve_worst_case_low_shf(
    building: &Building,
    params: &RadioParams,
    budget: &LinkBudget,
) -> Result<WorstCaseResult> {
    require_band(params, Band::LowShf, "worst-case low-SHF placement")?;
    let angle = worst_case_angle_low_shf(&params.low_shf)?;
    let standoff = worst_case_standoff(building, angle)?;
    let uav = building.center_line(building.x_b + standoff);
    Ok(WorstCaseResult {
        optimal_angle_deg: angle,
        standoff_distance: standoff,
        uav_position: uav,
        min_transmit_power_dbm: min_transmit_power_dbm(corner_loss(uav, building, params)?, budget),
    })
}

fn require_band(params: &RadioParams, band: Band, model: &'static str) -> Result<()> {
    if params.band != band {
        return Err(Error::BandMismatch {
            model,
            band: params.band.name(),
        });
    }
    params.validate()
}

/// Minimum power (dBm) to reach the worst corner from `(x, y_b / 2, z_b / 2)`
/// for each absolute `x` sample.
pub fn worst_case_power_curve(
    building: &Building,
    params: &RadioParams,
    budget: &LinkBudget,
    x_samples: &[f64],
) -> Result<Vec<(f64, f64)>> {
    x_samples
        .iter()
        .map(|&x| {
            let loss = corner_loss(building.center_line(x), building, params)?;
            Ok((x, min_transmit_power_dbm(loss, budget)))
        })
        .collect()
}

/// Worst-corner link with the altitude gap fixed at `z_b / 2` and incident
/// angle `theta_deg`; the UAV slides horizontally to realize the angle.
pub fn worst_case_link_at_angle(building: &Building, theta_deg: f64) -> Result<LinkGeometry> {
    if !(theta_deg > 0.0 && theta_deg <= 90.0) {
        return Err(Error::AngleOutOfRange(theta_deg));
    }
    let dh = 0.5 * building.z_b;
    Ok(LinkGeometry {
        d_out: dh / theta_deg.to_radians().sin(),
        theta_deg,
        d_in: building.x_b,
    })
}

/// Minimum power (dBm) to reach the worst corner as a function of the angle.
pub fn angle_power_curve(
    building: &Building,
    params: &RadioParams,
    budget: &LinkBudget,
    theta_samples: &[f64],
) -> Result<Vec<(f64, f64)>> {
    theta_samples
        .iter()
        .map(|&t| {
            let loss = propagation::path_loss(&worst_case_link_at_angle(building, t)?, params)?;
            Ok((t, min_transmit_power_dbm(loss.total, budget)))
        })
        .collect()
}

/// Default search bracket for the high-SHF efficient angle (deg). The
/// worst-corner curve rises to a local maximum near 26 deg and falls again
/// towards 90 deg, so the full quarter circle is not unimodal.
pub fn default_high_shf_bracket() -> TernaryConfig {
    TernaryConfig {
        a: 1.0,
        b: 25.0,
        precision: 1e-6,
    }
}

/// Efficient incident angle (deg) for the high-SHF band by ternary search.
pub fn worst_case_angle_high_shf(
    building: &Building,
    params: &RadioParams,
    cfg: &TernaryConfig,
) -> Result<f64> {
    require_band(params, Band::HighShf, "high-SHF angle search")?;
    building.validate()?;
    if !(cfg.a > 0.0 && cfg.b < 90.0) {
        return Err(Error::invalid(
            "interval",
            format!("angle bracket [{}, {}] must lie inside (0, 90)", cfg.a, cfg.b),
        ));
    }
    let result = ternary_search(
        |t| match worst_case_link_at_angle(building, t) {
            Ok(geom) => {
                propagation::high_shf_unchecked(&geom, &params.high_shf, params.carrier_frequency_ghz)
                    .total
            }
            Err(_) => f64::NAN,
        },
        cfg,
    )?;
    Ok(result.argmin)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GradientVector {
    pub d_dx: f64,
    pub d_dy: f64,
    pub d_dz: f64,
}

impl GradientVector {
    pub fn to_array(self) -> [f64; 3] {
        [self.d_dx, self.d_dy, self.d_dz]
    }

    fn accumulate(&mut self, dx: f64, dy: f64, dz: f64) {
        self.d_dx += dx;
        self.d_dy += dy;
        self.d_dz += dz;
    }

    fn check(self) -> Result<Self> {
        if self.to_array().iter().all(|v| v.is_finite()) {
            Ok(self)
        } else {
            Err(Error::non_finite("closed-form gradient"))
        }
    }
}

fn link_deltas(uav: Point3, user: &IndoorUser) -> Result<(f64, f64, f64, f64, f64)> {
    let delta = uav - user.position;
    let rho = delta.x.hypot(delta.y);
    if rho == 0.0 {
        return Err(Error::SingularGradient(format!(
            "UAV is vertically aligned with user {}",
            user.id
        )));
    }
    Ok((delta.x, delta.y, delta.z, rho, delta.norm()))
}

/// Gradient of the low-SHF total loss with respect to the UAV position.
pub fn grad_total_low_shf(
    uav: Point3,
    users: &[IndoorUser],
    constants: &LowShfConstants,
) -> Result<GradientVector> {
    let a = constants.w / LN_10;
    let mut g = GradientVector::default();
    for user in users {
        let (dx, dy, dz, rho, d) = link_deltas(uav, user)?;
        let d2 = d * d;
        let d3 = d2 * d;
        let k = 2.0 * constants.g3 * (1.0 - rho / d);
        let horizontal = k * dz * dz / (rho * d3);
        g.accumulate(
            a * dx / d2 - horizontal * dx,
            a * dy / d2 - horizontal * dy,
            a * dz / d2 + k * rho * dz / d3,
        );
    }
    g.check()
}

/// Gradient of the high-SHF total loss with respect to the UAV position. The
/// sigmoid takes the angle in degrees, so its chain rule picks up `180 / π`.
pub fn grad_total_high_shf(
    uav: Point3,
    users: &[IndoorUser],
    constants: &propagation::HighShfConstants,
) -> Result<GradientVector> {
    let a = constants.alpha2 / LN_10;
    let span = constants.beta2 - constants.beta1;
    let mut g = GradientVector::default();
    for user in users {
        let (dx, dy, dz, rho, d) = link_deltas(uav, user)?;
        let d2 = d * d;
        let d3 = d2 * d;
        let s = if dz > 0.0 {
            1.0
        } else if dz < 0.0 {
            -1.0
        } else {
            0.0
        };
        let u = dz.abs() / d;
        let root = (1.0 - u * u).sqrt();
        if !(root > 0.0) {
            return Err(Error::SingularGradient(format!(
                "vertical link to user {} (|u| = 1)",
                user.id
            )));
        }
        let theta_deg = u.asin().to_degrees();
        let e = (-constants.beta3 * (theta_deg - constants.beta4)).exp();
        let ds_dtheta = span * constants.beta3 * e / ((1.0 + e) * (1.0 + e));
        let k = ds_dtheta * (180.0 / std::f64::consts::PI) / root;
        g.accumulate(
            a * dx / d2 - k * s * dz * dx / d3,
            a * dy / d2 - k * s * dz * dy / d3,
            a * dz / d2 + k * s * rho * rho / d3,
        );
    }
    g.check()
}

/// Band-appropriate total-loss gradient.
pub fn grad_total(uav: Point3, users: &[IndoorUser], params: &RadioParams) -> Result<GradientVector> {
    match params.band {
        Band::LowShf => grad_total_low_shf(uav, users, &params.low_shf),
        Band::HighShf => grad_total_high_shf(uav, users, &params.high_shf),
    }
}

fn center_line_bounds(building: &Building) -> Interval {
    Interval {
        min: building.x_b,
        max: building.x_b + MAX_STANDOFF,
    }
}

/// Gradient descent on x with the UAV held at `(y_b / 2, z_b / 2)`.
pub fn place_center_line(
    building: &Building,
    users: &[IndoorUser],
    params: &RadioParams,
    gd: &GdConfig,
) -> Result<(UavPlacement, GdResult)> {
    building.validate()?;
    params.validate()?;
    let x0 = gd.initial_point.unwrap_or(building.x_b + 1.0);
    let result = gradient_descent_1d(
        |x| {
            let uav = building.center_line(x);
            let value = total_path_loss(uav, users, params, building)?;
            let grad = grad_total(uav, users, params)?;
            Ok((value, grad.d_dx))
        },
        gd,
        x0,
        center_line_bounds(building),
    )?;
    let uav = building.center_line(result.x);
    let loss = total_path_loss(uav, users, params, building)?;
    Ok((UavPlacement::new(uav, loss), result))
}

/// Placement for a roster symmetric about both centre planes: the optimal
/// (y, z) is the centre, so only x is searched.
pub fn place_symmetric(
    building: &Building,
    users: &[IndoorUser],
    params: &RadioParams,
    gd: &GdConfig,
) -> Result<(UavPlacement, GdResult)> {
    check_symmetric(users, building)?;
    place_center_line(building, users, params, gd)
}

/// Full 3D search with PSO. The x lower bound is raised to the facing wall.
pub fn place_pso(
    building: &Building,
    users: &[IndoorUser],
    params: &RadioParams,
    cfg: &PsoConfig,
) -> Result<(UavPlacement, OptimizationTrace)> {
    building.validate()?;
    params.validate()?;
    let cfg = PsoConfig {
        bounds: cfg.bounds.with_x_floor(building.x_b),
        ..*cfg
    };
    let result = pso(|p| total_path_loss(p, users, params, building), &cfg)?;
    Ok((UavPlacement::new(result.best, result.cost), result.trace))
}
