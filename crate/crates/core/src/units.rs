//! Power unit conversions. Internal power unit is mW throughout.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Thermal noise power over `bandwidth_hz` with the given receiver noise figure.
pub fn noise_power_mw(density_dbm_per_hz: f64, bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_mw(density_dbm_per_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db)
}
