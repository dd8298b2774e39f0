//! UMi aerial-vehicle LOS probability and path loss (3GPP TR 36.777 Annex B).
//!
//! Heights are UAV antenna heights in metres, distances in metres, carrier in GHz.

use crate::error::{Error, Result};

/// Height range where the aerial UMi formulas apply.
pub const AERIAL_MIN_HEIGHT: f64 = 22.5;
pub const AERIAL_MAX_HEIGHT: f64 = 300.0;
/// Lowest height covered by the terrestrial UMi LOS formula.
pub const TERRESTRIAL_MIN_HEIGHT: f64 = 1.5;
/// Upper horizontal-distance limit of the aerial tables.
pub const MAX_HORIZONTAL_DISTANCE: f64 = 4000.0;

/// UMi LOS probability.
///
/// Below 22.5 m this is the terrestrial UMi street-canyon law; between 22.5 m
/// and 300 m the aerial law with height-dependent `d1` and `p1`.
pub fn los_probability(distance_2d: f64, uav_height: f64) -> Result<f64> {
    if !(distance_2d >= 0.0) || distance_2d > MAX_HORIZONTAL_DISTANCE {
        return Err(Error::OutOfModel(format!(
            "horizontal distance {distance_2d} m outside [0, {MAX_HORIZONTAL_DISTANCE}] m"
        )));
    }
    if !(TERRESTRIAL_MIN_HEIGHT..=AERIAL_MAX_HEIGHT).contains(&uav_height) {
        return Err(Error::OutOfModel(format!(
            "height {uav_height} m outside [{TERRESTRIAL_MIN_HEIGHT}, {AERIAL_MAX_HEIGHT}] m"
        )));
    }
    let (d1, p1) = if uav_height <= AERIAL_MIN_HEIGHT {
        (18.0, 36.0)
    } else {
        let lh = uav_height.log10();
        ((294.05 * lh - 432.94).max(18.0), 233.98 * lh - 0.95)
    };
    if distance_2d <= d1 {
        return Ok(1.0);
    }
    let r = d1 / distance_2d;
    Ok((r + (-distance_2d / p1).exp() * (1.0 - r)).clamp(0.0, 1.0))
}

fn check_aerial_height(uav_height: f64) -> Result<()> {
    if (AERIAL_MIN_HEIGHT..=AERIAL_MAX_HEIGHT).contains(&uav_height) {
        Ok(())
    } else {
        Err(Error::OutOfModel(format!(
            "aerial path loss defined for heights in [{AERIAL_MIN_HEIGHT}, {AERIAL_MAX_HEIGHT}] m, got {uav_height} m"
        )))
    }
}

pub fn free_space_loss_db(distance_3d: f64, carrier_ghz: f64) -> f64 {
    20.0 * (40.0 * std::f64::consts::PI * distance_3d * carrier_ghz / 3.0).log10()
}

/// UMi-AV path loss in dB (positive loss) for the given LOS state.
pub fn uav_path_loss_db(
    distance_3d: f64,
    uav_height: f64,
    carrier_ghz: f64,
    los: bool,
) -> Result<f64> {
    check_aerial_height(uav_height)?;
    if !(distance_3d > 0.0) {
        return Err(Error::Geometry(format!(
            "non-positive distance {distance_3d}"
        )));
    }
    let lh = uav_height.log10();
    let ld = distance_3d.log10();
    let lf = 20.0 * carrier_ghz.log10();
    let los_loss =
        free_space_loss_db(distance_3d, carrier_ghz).max(30.9 + (22.25 - 0.5 * lh) * ld + lf);
    if los {
        Ok(los_loss)
    } else {
        Ok(los_loss.max(32.4 + (43.2 - 7.6 * lh) * ld + lf))
    }
}

/// Linear large-scale gain of a UAV link. No shadowing term is applied.
pub fn uav_large_scale(
    distance_3d: f64,
    uav_height: f64,
    carrier_ghz: f64,
    los: bool,
) -> Result<f64> {
    Ok(10f64.powf(-uav_path_loss_db(distance_3d, uav_height, carrier_ghz, los)? / 10.0))
}
