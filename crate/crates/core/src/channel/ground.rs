//! Ground-user large-scale fading: three-slope path loss with correlated shadowing.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{SystemConfig, ThreeSlopeParams};
use crate::deployment::{wrapped_offset, Drop, Position, UserKind};
use crate::error::{Error, Result};

/// Hata-COST231 constant term `L` in dB. Frequency in MHz, heights in m.
pub fn hata_cost231_constant(freq_mhz: f64, ap_height: f64, user_height: f64) -> f64 {
    let lf = freq_mhz.log10();
    46.3 + 33.9 * lf - 13.82 * ap_height.log10() - (1.1 * lf - 0.7) * user_height
        + (1.56 * lf - 0.8)
}

/// Three-slope path loss in dB (positive loss). Distances in metres; the
/// log-distance terms use kilometres.
///
/// Slopes are 35 dB/decade beyond `d1`, 20 dB/decade between `d0` and `d1`,
/// and flat below `d0`.
pub fn three_slope_loss_db(distance: f64, constant_db: f64, p: &ThreeSlopeParams) -> f64 {
    let km = |d: f64| (d / 1000.0).log10();
    if distance > p.d1 {
        constant_db + 35.0 * km(distance)
    } else if distance > p.d0 {
        constant_db + 15.0 * km(p.d1) + 20.0 * km(distance)
    } else {
        constant_db + 15.0 * km(p.d1) + 20.0 * km(p.d0)
    }
}

/// Linear gain of a GUE link. `shadow` is the standard-normal shadowing
/// variable of the link; it only takes effect beyond the outer breakpoint.
pub fn gue_large_scale(distance_3d: f64, shadow: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(distance_3d > 0.0) {
        return Err(Error::Geometry(format!(
            "non-positive distance {distance_3d}"
        )));
    }
    let constant = hata_cost231_constant(cfg.carrier_freq / 1e6, cfg.ap_height, cfg.gue_height);
    let loss = three_slope_loss_db(distance_3d, constant, &cfg.three_slope);
    let shadow_db = if distance_3d > cfg.three_slope.d1 {
        cfg.shadowing_std * shadow
    } else {
        0.0
    };
    Ok(10f64.powf((shadow_db - loss) / 10.0))
}

/// Per-drop shadowing sources: one spatially correlated field over APs and
/// one over ground users.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowField {
    delta: f64,
    ap: Vec<f64>,
    user: Vec<f64>,
}

impl ShadowField {
    pub fn sample<R: Rng + ?Sized>(drop: &Drop, cfg: &SystemConfig, rng: &mut R) -> Result<Self> {
        let dec = cfg.shadowing.decorrelation_distance;
        let ap = correlated_normals(&drop.ap_positions, drop.area_side, dec, rng)?;
        let gue_idx: Vec<usize> = (0..drop.n_users())
            .filter(|&k| drop.user_kinds[k] == UserKind::Gue)
            .collect();
        let gue_pos: Vec<Position> = gue_idx.iter().map(|&k| drop.user_positions[k]).collect();
        let gue_vals = correlated_normals(&gue_pos, drop.area_side, dec, rng)?;
        let mut user = vec![0.0; drop.n_users()];
        for (&k, v) in gue_idx.iter().zip(gue_vals) {
            user[k] = v;
        }
        Ok(Self {
            delta: cfg.shadowing.delta,
            ap,
            user,
        })
    }

    /// Standard-normal shadowing variable for link (user `k`, AP `a`).
    pub fn z(&self, k: usize, a: usize) -> f64 {
        self.delta.sqrt() * self.ap[a] + (1.0 - self.delta).sqrt() * self.user[k]
    }
}

/// Unit-variance Gaussians with correlation `exp(-d / dec)` over wrapped
/// horizontal distance.
fn correlated_normals<R: Rng + ?Sized>(
    points: &[Position],
    side: f64,
    dec: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = points.len();
    let white: DVector<f64> =
        DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    if n == 0 {
        return Ok(Vec::new());
    }
    let corr = DMatrix::from_fn(n, n, |i, j| {
        let (dx, dy, _) = wrapped_offset(&points[i], &points[j], side);
        (-(dx.hypot(dy)) / dec).exp()
    });
    // The wrapped-distance kernel is not guaranteed positive definite on a
    // torus; a small diagonal load recovers a factorization when needed.
    for jitter in [0.0, 1e-12, 1e-9, 1e-6] {
        let loaded = &corr + DMatrix::identity(n, n) * jitter;
        if let Some(ch) = loaded.cholesky() {
            let out = ch.l() * white;
            let scale = 1.0 / (1.0 + jitter).sqrt();
            return Ok(out.iter().map(|v| v * scale).collect());
        }
    }
    Err(Error::Numerical(
        "shadowing correlation matrix is not positive definite".into(),
    ))
}
