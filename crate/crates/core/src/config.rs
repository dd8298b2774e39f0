//! Scenario configuration.
//!
//! [`SystemConfig`] is deserialized from JSON with snake_case keys mirroring
//! the field names. Every field has a default matching the reference
//! 1 km² scenario (100 APs, 48 GUEs, 12 UAVs), so a config file only needs
//! the keys it overrides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{self, SPEED_OF_LIGHT};

/// How users are mapped onto serving APs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AssociationMode {
    /// Every AP serves every user.
    Cf,
    /// Each user is served by its `serving_aps` strongest APs.
    Uc { serving_aps: usize },
}

/// Downlink power control policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DlPolicy {
    Ppa,
    Wfpc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightRange {
    pub min: f64,
    pub max: f64,
}

/// Breakpoints of the three-slope ground path-loss model, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThreeSlopeParams {
    pub d0: f64,
    pub d1: f64,
}

impl Default for ThreeSlopeParams {
    fn default() -> Self {
        Self { d0: 10.0, d1: 50.0 }
    }
}

/// Two-component correlated shadowing: `z = sqrt(delta) a_ap + sqrt(1 - delta) b_user`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShadowingParams {
    pub delta: f64,
    /// Spatial correlation between components decays as `exp(-d / decorrelation_distance)`.
    pub decorrelation_distance: f64,
}

impl Default for ShadowingParams {
    fn default() -> Self {
        Self {
            delta: 0.5,
            decorrelation_distance: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub area_side: f64,
    pub n_aps: usize,
    pub n_gues: usize,
    pub n_uavs: usize,
    pub n_ap_antennas: usize,
    /// Element spacing in carrier wavelengths.
    pub antenna_spacing: f64,
    pub ap_height: f64,
    pub gue_height: f64,
    pub uav_height_range: HeightRange,
    pub carrier_freq: f64,
    pub bandwidth: f64,
    pub tau_c: usize,
    pub tau_p: usize,
    pub noise_figure: f64,
    pub thermal_noise_density: f64,
    /// Per-sample training power, mW. Total training energy is `tau_p` times this.
    pub train_power_per_sample: f64,
    pub dl_power_budget: f64,
    pub ul_max_power: f64,
    pub fpc_p0: f64,
    pub fpc_alpha: f64,
    pub association_mode: AssociationMode,
    pub dl_policy: DlPolicy,
    pub shadowing_std: f64,
    pub shadowing: ShadowingParams,
    pub three_slope: ThreeSlopeParams,
    /// Scale each pilot-gram term by an extra factor of its β. Off by default;
    /// the closed-form bounds are only exact with this off.
    pub gram_extra_beta: bool,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            area_side: 1000.0,
            n_aps: 100,
            n_gues: 48,
            n_uavs: 12,
            n_ap_antennas: 4,
            antenna_spacing: 0.5,
            ap_height: 15.0,
            gue_height: 1.65,
            uav_height_range: HeightRange {
                min: 22.5,
                max: 300.0,
            },
            carrier_freq: 1.9e9,
            bandwidth: 20e6,
            tau_c: 200,
            tau_p: 32,
            noise_figure: 9.0,
            thermal_noise_density: -174.0,
            train_power_per_sample: 100.0,
            dl_power_budget: 200.0,
            ul_max_power: 100.0,
            fpc_p0: -35.0,
            fpc_alpha: 0.5,
            association_mode: AssociationMode::Cf,
            dl_policy: DlPolicy::Ppa,
            shadowing_std: 8.0,
            shadowing: ShadowingParams::default(),
            three_slope: ThreeSlopeParams::default(),
            gram_extra_beta: false,
            rng_seed: 1,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        positive("area_side", self.area_side)?;
        positive("antenna_spacing", self.antenna_spacing)?;
        positive("ap_height", self.ap_height)?;
        positive("gue_height", self.gue_height)?;
        positive("uav_height_range.min", self.uav_height_range.min)?;
        positive("carrier_freq", self.carrier_freq)?;
        positive("bandwidth", self.bandwidth)?;
        positive("train_power_per_sample", self.train_power_per_sample)?;
        positive("dl_power_budget", self.dl_power_budget)?;
        positive("ul_max_power", self.ul_max_power)?;
        positive("three_slope.d0", self.three_slope.d0)?;
        positive(
            "shadowing.decorrelation_distance",
            self.shadowing.decorrelation_distance,
        )?;
        if self.uav_height_range.max < self.uav_height_range.min {
            return Err(Error::Config(
                "uav_height_range.max < uav_height_range.min".into(),
            ));
        }
        if self.three_slope.d1 <= self.three_slope.d0 {
            return Err(Error::Config(
                "three_slope.d1 must exceed three_slope.d0".into(),
            ));
        }
        if self.n_aps == 0 {
            return Err(Error::Config("n_aps must be at least 1".into()));
        }
        if self.n_users() == 0 {
            return Err(Error::Config("at least one user is required".into()));
        }
        if self.n_ap_antennas == 0 {
            return Err(Error::Config("n_ap_antennas must be at least 1".into()));
        }
        if self.tau_p == 0 {
            return Err(Error::Config("tau_p must be at least 1".into()));
        }
        if self.tau_p >= self.tau_c {
            return Err(Error::Config(format!(
                "tau_p ({}) must be smaller than tau_c ({})",
                self.tau_p, self.tau_c
            )));
        }
        if !(self.tau_c - self.tau_p).is_multiple_of(2) {
            return Err(Error::Config(format!(
                "tau_c - tau_p = {} must split evenly into downlink and uplink",
                self.tau_c - self.tau_p
            )));
        }
        if !(self.shadowing_std >= 0.0 && self.shadowing_std.is_finite()) {
            return Err(Error::Config("shadowing_std must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.shadowing.delta) {
            return Err(Error::Config("shadowing.delta must lie in [0, 1]".into()));
        }
        if !(self.fpc_alpha >= 0.0 && self.fpc_alpha.is_finite()) || !self.fpc_p0.is_finite() {
            return Err(Error::Config(
                "fpc_alpha must be non-negative and fpc_p0 finite".into(),
            ));
        }
        if let AssociationMode::Uc { serving_aps } = self.association_mode {
            if serving_aps == 0 || serving_aps > self.n_aps {
                return Err(Error::Config(format!(
                    "serving_aps must lie in 1..={}, got {serving_aps}",
                    self.n_aps
                )));
            }
        }
        Ok(())
    }

    pub fn n_users(&self) -> usize {
        self.n_gues + self.n_uavs
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Receiver noise power σ², mW (same at APs and users).
    pub fn noise_power(&self) -> f64 {
        units::noise_power_mw(
            self.thermal_noise_density,
            self.bandwidth,
            self.noise_figure,
        )
    }

    /// Training power η_k = τ_p · per-sample power, mW.
    pub fn train_power(&self) -> f64 {
        self.tau_p as f64 * self.train_power_per_sample
    }

    /// τ_d/τ_c, equal to τ_u/τ_c since the data phase is split evenly.
    pub fn data_fraction(&self) -> f64 {
        (self.tau_c - self.tau_p) as f64 / (2.0 * self.tau_c as f64)
    }

    pub fn fpc_p0_mw(&self) -> f64 {
        units::dbm_to_mw(self.fpc_p0)
    }
}
