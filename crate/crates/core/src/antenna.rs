//! Antenna element gain patterns.
//!
//! The sectored pattern is the single-element pattern of 3GPP TR 38.901
//! (Table 7.3-1): 65° half-power beamwidth in both cuts, 30 dB front-to-back
//! and side-lobe limits, and a configurable peak gain.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

const HPBW_DEG: f64 = 65.0;
const SIDE_LOBE_LIMIT_DB: f64 = 30.0;
const FRONT_BACK_DB: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum ElementGainModel {
    #[default]
    Isotropic,
    Sectored3gpp {
        max_gain_dbi: f64,
    },
}

impl ElementGainModel {
    /// Gain in dBi toward `direction` (unit vector, global frame) for an
    /// element whose boresight is `boresight` with `up` as the vertical.
    pub fn gain_dbi(&self, boresight: Vec3, up: Vec3, direction: Vec3) -> f64 {
        match *self {
            ElementGainModel::Isotropic => 0.0,
            ElementGainModel::Sectored3gpp { max_gain_dbi } => {
                let (zenith_deg, azimuth_deg) = local_angles(boresight, up, direction);
                max_gain_dbi + sectored_pattern_db(zenith_deg, azimuth_deg)
            }
        }
    }

    /// Field amplitude factor `sqrt(G_linear)`.
    pub fn amplitude(&self, boresight: Vec3, up: Vec3, direction: Vec3) -> f64 {
        match self {
            ElementGainModel::Isotropic => 1.0,
            _ => 10f64.powf(self.gain_dbi(boresight, up, direction) / 20.0),
        }
    }
}

/// Relative pattern `A(θ, φ)` in dB (≤ 0), θ the zenith angle and φ the
/// azimuth from boresight, both in degrees.
pub fn sectored_pattern_db(zenith_deg: f64, azimuth_deg: f64) -> f64 {
    let vertical = -(12.0 * ((zenith_deg - 90.0) / HPBW_DEG).powi(2)).min(SIDE_LOBE_LIMIT_DB);
    let horizontal = -(12.0 * (azimuth_deg / HPBW_DEG).powi(2)).min(FRONT_BACK_DB);
    -(-(vertical + horizontal)).min(FRONT_BACK_DB)
}

fn local_angles(boresight: Vec3, up: Vec3, direction: Vec3) -> (f64, f64) {
    let side = up.cross(boresight);
    let zenith = direction.dot(up).clamp(-1.0, 1.0).acos().to_degrees();
    let azimuth = direction.dot(side).atan2(direction.dot(boresight)).to_degrees();
    (zenith, azimuth)
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    const UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    #[test]
    fn boresight_gain_is_peak() {
        let m = ElementGainModel::Sectored3gpp { max_gain_dbi: 8.0 };
        assert!((m.gain_dbi(N, UP, N) - 8.0).abs() < 1e-12);
        assert!((m.amplitude(N, UP, N) - 10f64.powf(0.4)).abs() < 1e-12);
    }

    #[test]
    fn half_power_beamwidth_in_azimuth() {
        let m = ElementGainModel::Sectored3gpp { max_gain_dbi: 8.0 };
        let a = 32.5f64.to_radians();
        let dir = Vec3::new(a.sin(), a.cos(), 0.0);
        assert!((m.gain_dbi(N, UP, dir) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn backlobe_is_clipped() {
        let m = ElementGainModel::Sectored3gpp { max_gain_dbi: 8.0 };
        let back = Vec3::new(0.0, -1.0, 0.0);
        assert!((m.gain_dbi(N, UP, back) - (8.0 - 30.0)).abs() < 1e-12);
        assert!(sectored_pattern_db(0.0, 0.0) >= -30.0);
    }

    #[test]
    fn isotropic_is_unity() {
        let m = ElementGainModel::Isotropic;
        assert_eq!(m.amplitude(N, UP, Vec3::new(1.0, 0.0, 0.0)), 1.0);
    }
}
