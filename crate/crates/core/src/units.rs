//! Physical constants and unit conversions used at the configuration boundary.
//!
//! Everything inside the crate is SI (Hz, W, W/Hz, m, s, rad).

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const GHZ: f64 = 1e9;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Power ratio in dB to linear.
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Power ratio in dB to a linear amplitude factor.
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn ghz(value: f64) -> f64 {
    value * GHZ
}

pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        let w = dbm_to_watts(22.0);
        assert!((w - 0.158_489_319_246_111_36).abs() < 1e-15);
        assert!((watts_to_dbm(w) - 22.0).abs() < 1e-12);
        assert!((dbm_to_watts(-174.0) - 3.981_071_705_534_969e-21).abs() < 1e-33);
    }

    #[test]
    fn unit_amplitude_of_minus_one_db() {
        assert!((db_to_amplitude(-1.0) - 0.891_250_938_133_745_5).abs() < 1e-15);
        assert_eq!(db_to_power(0.0), 1.0);
    }
}
