//! Outdoor-to-indoor path loss for a UAV serving users inside a building.
//!
//! Two models are supported, selected by [`Band`]:
//!
//! * low-SHF (0.45 to 6 GHz): `L = (w log10 d + w log10 f + g1) + (g2 + g3 (1 - cos θ)^2) + g4 d_in`
//! * high-SHF (above 6 GHz): `L = (α1 + α2 log10 d + α3 log10 f) + (β1 + (β2 - β1) / (1 + exp(-β3 (θ - β4)))) + γ1 d_in`
//!
//! `θ` is the elevation of the UAV-user ray in degrees. The high-SHF sigmoid
//! takes degrees directly; the low-SHF cosine is evaluated on the same angle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::scenario::Building;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    LowShf,
    HighShf,
}

impl Band {
    pub fn name(self) -> &'static str {
        match self {
            Band::LowShf => "low-SHF",
            Band::HighShf => "high-SHF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowShfConstants {
    pub w: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
}

impl Default for LowShfConstants {
    fn default() -> Self {
        Self {
            w: 20.0,
            g1: 32.4,
            g2: 14.0,
            g3: 15.0,
            g4: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HighShfConstants {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub gamma1: f64,
}

impl Default for HighShfConstants {
    fn default() -> Self {
        Self {
            alpha1: 31.4,
            alpha2: 20.0,
            alpha3: 21.5,
            beta1: 6.8,
            beta2: 21.8,
            beta3: 0.453,
            beta4: 19.7,
            gamma1: 0.49,
        }
    }
}

impl HighShfConstants {
    /// Building penetration loss (dB) at incident angle `theta_deg`.
    pub fn penetration(&self, theta_deg: f64) -> f64 {
        self.beta1
            + (self.beta2 - self.beta1) / (1.0 + (-self.beta3 * (theta_deg - self.beta4)).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub carrier_frequency_ghz: f64,
    pub band: Band,
    pub low_shf: LowShfConstants,
    pub high_shf: HighShfConstants,
}

impl RadioParams {
    pub fn new(band: Band, carrier_frequency_ghz: f64) -> Result<Self> {
        let params = Self {
            carrier_frequency_ghz,
            band,
            low_shf: LowShfConstants::default(),
            high_shf: HighShfConstants::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn low_shf(carrier_frequency_ghz: f64) -> Result<Self> {
        Self::new(Band::LowShf, carrier_frequency_ghz)
    }

    pub fn high_shf(carrier_frequency_ghz: f64) -> Result<Self> {
        Self::new(Band::HighShf, carrier_frequency_ghz)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_frequency_ghz > 0.0 && self.carrier_frequency_ghz.is_finite()) {
            return Err(Error::invalid(
                "carrier_frequency_ghz",
                format!("must be positive, got {}", self.carrier_frequency_ghz),
            ));
        }
        Ok(())
    }

    /// Range warnings: the band models are calibrated for 0.45-6 GHz
    /// (low-SHF) and above 6 GHz (high-SHF). Out-of-range values are allowed.
    pub fn warnings(&self) -> Vec<String> {
        let f = self.carrier_frequency_ghz;
        match self.band {
            Band::LowShf if !(0.45..=6.0).contains(&f) => vec![format!(
                "low-SHF model used at {f} GHz, outside its 0.45-6 GHz range"
            )],
            Band::HighShf if f <= 6.0 => vec![format!(
                "high-SHF model used at {f} GHz, below its > 6 GHz range"
            )],
            _ => Vec::new(),
        }
    }
}

/// Geometry of one UAV-to-user link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// UAV-user 3D distance (m).
    pub d_out: f64,
    /// Elevation of the link at the wall (deg).
    pub theta_deg: f64,
    /// Indoor distance from the facing wall to the user (m).
    pub d_in: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossBreakdown {
    pub free_space: f64,
    pub penetration: f64,
    pub indoor: f64,
    pub total: f64,
}

impl PathLossBreakdown {
    fn from_parts(free_space: f64, penetration: f64, indoor: f64) -> Self {
        Self {
            free_space,
            penetration,
            indoor,
            total: free_space + penetration + indoor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudget {
    pub noise_dbm: f64,
    pub snr_threshold_db: f64,
    pub bandwidth_hz: f64,
    pub rate_bps: f64,
    /// Number of users sharing the bandwidth (M).
    pub users_for_rate: usize,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            noise_dbm: -120.0,
            snr_threshold_db: 10.0,
            bandwidth_hz: 50e6,
            rate_bps: 2.2e6,
            users_for_rate: 1,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::invalid("bandwidth_hz", "must be positive"));
        }
        if !(self.rate_bps >= 0.0) {
            return Err(Error::invalid("rate_bps", "must be non-negative"));
        }
        if self.users_for_rate < 1 {
            return Err(Error::invalid("users_for_rate", "must be at least 1"));
        }
        Ok(())
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    /// `2^(v M / B) - 1`, the per-user SNR needed for the rate requirement.
    pub fn spectral_factor(&self) -> Result<f64> {
        let exponent = self.rate_bps * self.users_for_rate as f64 / self.bandwidth_hz;
        if exponent > 1024.0 {
            return Err(Error::invalid(
                "rate_bps",
                format!("rate exponent v*M/B = {exponent} overflows"),
            ));
        }
        Ok((exponent * std::f64::consts::LN_2).exp_m1())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Link geometry between a UAV outside the building and an indoor user.
pub fn link_geometry(uav: Point3, user: Point3, building: &Building) -> Result<LinkGeometry> {
    if !building.contains(user) {
        return Err(Error::UserOutsideBuilding {
            id: 0,
            x: user.x,
            y: user.y,
            z: user.z,
        });
    }
    if uav.x < building.x_b {
        return Err(Error::UavInsideBuilding {
            x: uav.x,
            x_b: building.x_b,
        });
    }
    let d = uav - user;
    let horizontal = d.x.hypot(d.y);
    let d_out = d.norm();
    if d_out == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(LinkGeometry {
        d_out,
        theta_deg: d.z.abs().atan2(horizontal).to_degrees(),
        d_in: building.x_b - user.x,
    })
}

fn check_geometry(geom: &LinkGeometry) -> Result<()> {
    if !(geom.d_out > 0.0) {
        return Err(Error::invalid(
            "d_out",
            format!("link distance must be positive, got {}", geom.d_out),
        ));
    }
    if !(0.0..=90.0).contains(&geom.theta_deg) {
        return Err(Error::AngleOutOfRange(geom.theta_deg));
    }
    Ok(())
}

pub fn path_loss_low_shf(geom: &LinkGeometry, params: &RadioParams) -> Result<PathLossBreakdown> {
    if params.band != Band::LowShf {
        return Err(Error::BandMismatch {
            model: "low-SHF",
            band: params.band.name(),
        });
    }
    check_geometry(geom)?;
    Ok(low_shf_unchecked(geom, &params.low_shf, params.carrier_frequency_ghz))
}

pub fn path_loss_high_shf(geom: &LinkGeometry, params: &RadioParams) -> Result<PathLossBreakdown> {
    if params.band != Band::HighShf {
        return Err(Error::BandMismatch {
            model: "high-SHF",
            band: params.band.name(),
        });
    }
    check_geometry(geom)?;
    Ok(high_shf_unchecked(geom, &params.high_shf, params.carrier_frequency_ghz))
}

/// Band-appropriate path loss.
pub fn path_loss(geom: &LinkGeometry, params: &RadioParams) -> Result<PathLossBreakdown> {
    match params.band {
        Band::LowShf => path_loss_low_shf(geom, params),
        Band::HighShf => path_loss_high_shf(geom, params),
    }
}

pub(crate) fn low_shf_unchecked(
    geom: &LinkGeometry,
    c: &LowShfConstants,
    f_ghz: f64,
) -> PathLossBreakdown {
    let one_minus_cos = 1.0 - geom.theta_deg.to_radians().cos();
    PathLossBreakdown::from_parts(
        c.w * geom.d_out.log10() + c.w * f_ghz.log10() + c.g1,
        c.g2 + c.g3 * one_minus_cos * one_minus_cos,
        c.g4 * geom.d_in,
    )
}

pub(crate) fn high_shf_unchecked(
    geom: &LinkGeometry,
    c: &HighShfConstants,
    f_ghz: f64,
) -> PathLossBreakdown {
    PathLossBreakdown::from_parts(
        c.alpha1 + c.alpha2 * geom.d_out.log10() + c.alpha3 * f_ghz.log10(),
        c.penetration(geom.theta_deg),
        c.gamma1 * geom.d_in,
    )
}

/// High-SHF building penetration loss curve.
pub fn penetration_loss_high_shf(theta_deg: f64, constants: &HighShfConstants) -> Result<f64> {
    if !(0.0..=90.0).contains(&theta_deg) {
        return Err(Error::AngleOutOfRange(theta_deg));
    }
    Ok(constants.penetration(theta_deg))
}

/// Minimum transmit power (dBm) so that the received power reaches
/// `noise + snr_threshold`.
pub fn min_transmit_power_dbm(loss_db: f64, budget: &LinkBudget) -> f64 {
    budget.noise_dbm + budget.snr_threshold_db + loss_db
}

/// Minimum transmit power (W) meeting the rate requirement over a link with
/// `loss_db` of path loss, with each of the M users getting `B / M` of the band.
pub fn required_power_watts(loss_db: f64, budget: &LinkBudget) -> Result<f64> {
    budget.validate()?;
    Ok(budget.spectral_factor()? * budget.noise_watts() * db_to_linear(loss_db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn low(f: f64) -> RadioParams {
        RadioParams::low_shf(f).unwrap()
    }

    fn high(f: f64) -> RadioParams {
        RadioParams::high_shf(f).unwrap()
    }

    fn geom(d_out: f64, theta_deg: f64, d_in: f64) -> LinkGeometry {
        LinkGeometry {
            d_out,
            theta_deg,
            d_in,
        }
    }

    #[test]
    fn geometry_at_wall_same_altitude() {
        let b = Building::new(20.0, 50.0, 20.0, 5.0).unwrap();
        let g = link_geometry(
            Point3::new(30.0, 25.0, 10.0),
            Point3::new(20.0, 25.0, 10.0),
            &b,
        )
        .unwrap();
        assert_abs_diff_eq!(g.d_out, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.theta_deg, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.d_in, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn geometry_vertical_link() {
        let b = Building::new(30.0, 50.0, 200.0, 5.0).unwrap();
        let g = link_geometry(
            Point3::new(30.0, 25.0, 110.0),
            Point3::new(30.0, 25.0, 10.0),
            &b,
        )
        .unwrap();
        assert_abs_diff_eq!(g.theta_deg, 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.d_out, 100.0, epsilon = 1e-12);
    }

    #[test]
    fn geometry_at_optimal_standoff_gives_optimal_angle() {
        // UAV at x = d_H = x_b + d_opt for z_b = 200, y_b = 50, x_b = 20.
        let b = Building::new(20.0, 50.0, 200.0, 5.0).unwrap();
        let g = link_geometry(
            Point3::new(84.368_426_389_816_8, 25.0, 100.0),
            Point3::new(0.0, 0.0, 0.0),
            &b,
        )
        .unwrap();
        assert_abs_diff_eq!(g.theta_deg, 48.654, epsilon = 1e-9);
        let dz = 100.0;
        assert_abs_diff_eq!(g.theta_deg.to_radians().sin() * g.d_out, dz, epsilon = 1e-9);
    }

    #[test]
    fn geometry_rejects_bad_inputs() {
        let b = Building::new(20.0, 50.0, 100.0, 5.0).unwrap();
        let outside = link_geometry(
            Point3::new(30.0, 25.0, 10.0),
            Point3::new(25.0, 25.0, 10.0),
            &b,
        );
        assert!(matches!(outside, Err(Error::UserOutsideBuilding { .. })));
        let coincident = link_geometry(
            Point3::new(20.0, 25.0, 10.0),
            Point3::new(20.0, 25.0, 10.0),
            &b,
        );
        assert!(matches!(coincident, Err(Error::CoincidentPoints)));
        let inside = link_geometry(
            Point3::new(10.0, 25.0, 10.0),
            Point3::new(5.0, 25.0, 10.0),
            &b,
        );
        assert!(matches!(inside, Err(Error::UavInsideBuilding { .. })));
    }

    #[test]
    fn low_shf_reference_values() {
        let a = path_loss_low_shf(&geom(1.0, 0.0, 0.0), &low(1.0)).unwrap();
        assert_abs_diff_eq!(a.free_space, 32.4, epsilon = 1e-12);
        assert_abs_diff_eq!(a.penetration, 14.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.indoor, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.total, 46.4, epsilon = 1e-12);

        let b = path_loss_low_shf(&geom(1.0, 90.0, 10.0), &low(1.0)).unwrap();
        assert_abs_diff_eq!(b.total, 66.4, epsilon = 1e-12);

        // Frozen from a 30-digit evaluation.
        let c = path_loss_low_shf(&geom(100.0, 48.654, 20.0), &low(2.0)).unwrap();
        assert_abs_diff_eq!(c.free_space, 78.420_599_913_279_62, epsilon = 1e-10);
        assert_abs_diff_eq!(c.penetration, 15.727_838_474_629_64, epsilon = 1e-10);
        assert_abs_diff_eq!(c.total, 104.148_438_387_909_27, epsilon = 1e-10);
    }

    #[test]
    fn high_shf_reference_values() {
        let a = path_loss_high_shf(&geom(1.0, 19.7, 0.0), &high(1.0)).unwrap();
        assert_abs_diff_eq!(a.free_space, 31.4, epsilon = 1e-12);
        assert_abs_diff_eq!(a.penetration, 14.3, epsilon = 1e-12);
        assert_abs_diff_eq!(a.total, 45.7, epsilon = 1e-12);

        let b = path_loss_high_shf(&geom(1.0, 90.0, 0.0), &high(1.0)).unwrap();
        assert_abs_diff_eq!(b.penetration, 21.8, epsilon = 1e-9);
        assert_abs_diff_eq!(b.total, 53.2, epsilon = 1e-9);
    }

    #[test]
    fn penetration_curve_points() {
        let c = HighShfConstants::default();
        assert_abs_diff_eq!(penetration_loss_high_shf(19.7, &c).unwrap(), 14.3, epsilon = 1e-12);
        assert_abs_diff_eq!(
            penetration_loss_high_shf(90.0, &c).unwrap(),
            21.799_999_999_999_78,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            penetration_loss_high_shf(0.0, &c).unwrap(),
            6.801_996_852_813_08,
            epsilon = 1e-10
        );
        assert!(matches!(
            penetration_loss_high_shf(91.0, &c),
            Err(Error::AngleOutOfRange(_))
        ));
        assert!(penetration_loss_high_shf(-0.5, &c).is_err());
    }

    #[test]
    fn wrong_band_is_an_error() {
        let g = geom(10.0, 10.0, 1.0);
        assert!(matches!(
            path_loss_low_shf(&g, &high(15.0)),
            Err(Error::BandMismatch { .. })
        ));
        assert!(matches!(
            path_loss_high_shf(&g, &low(2.0)),
            Err(Error::BandMismatch { .. })
        ));
    }

    #[test]
    fn non_positive_distance_rejected() {
        assert!(path_loss_low_shf(&geom(0.0, 10.0, 1.0), &low(2.0)).is_err());
        assert!(path_loss_high_shf(&geom(-1.0, 10.0, 1.0), &high(15.0)).is_err());
    }

    #[test]
    fn frequency_range_warnings() {
        assert!(low(2.0).warnings().is_empty());
        assert_eq!(low(15.0).warnings().len(), 1);
        assert_eq!(high(3.0).warnings().len(), 1);
        assert!(RadioParams::low_shf(0.0).is_err());
    }

    #[test]
    fn transmit_power_dbm() {
        let budget = LinkBudget {
            noise_dbm: -120.0,
            snr_threshold_db: 10.0,
            ..LinkBudget::default()
        };
        assert_abs_diff_eq!(min_transmit_power_dbm(130.0, &budget), 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(min_transmit_power_dbm(0.0, &budget), -110.0, epsilon = 1e-12);
    }

    #[test]
    fn transmit_power_watts() {
        let zero_rate = LinkBudget {
            rate_bps: 0.0,
            ..LinkBudget::default()
        };
        assert_eq!(required_power_watts(0.0, &zero_rate).unwrap(), 0.0);

        let unit = LinkBudget {
            noise_dbm: -150.0,
            bandwidth_hz: 1e6,
            rate_bps: 1e6,
            users_for_rate: 1,
            ..LinkBudget::default()
        };
        assert_abs_diff_eq!(
            required_power_watts(100.0, &unit).unwrap(),
            1e-8,
            epsilon = 1e-20
        );

        let table3 = LinkBudget {
            noise_dbm: -150.0,
            bandwidth_hz: 50e6,
            rate_bps: 2.2e6,
            users_for_rate: 400,
            ..LinkBudget::default()
        };
        assert_abs_diff_eq!(
            required_power_watts(113.0, &table3).unwrap(),
            0.039_639_278_193_066_96,
            epsilon = 1e-14
        );

        let overflow = LinkBudget {
            rate_bps: 1e9,
            bandwidth_hz: 1e6,
            users_for_rate: 2,
            ..LinkBudget::default()
        };
        assert!(required_power_watts(10.0, &overflow).is_err());
    }
}
