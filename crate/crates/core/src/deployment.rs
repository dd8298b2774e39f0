//! Network drops on a wrap-around square.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{HeightRange, SystemConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserKind {
    Gue,
    Uav,
}

/// One random realization of node positions and pilot assignment.
///
/// Users are indexed GUEs first (`0..n_gues`), then UAVs.
#[derive(Debug, Clone, PartialEq)]
pub struct Drop {
    pub area_side: f64,
    pub ap_positions: Vec<Position>,
    /// Horizontal azimuth of each AP's linear array axis, radians.
    pub ap_azimuths: Vec<f64>,
    pub n_ap_antennas: usize,
    /// Physical element spacing, m.
    pub element_spacing: f64,
    pub user_positions: Vec<Position>,
    pub user_kinds: Vec<UserKind>,
    pub pilots: Vec<usize>,
}

impl Drop {
    pub fn n_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn n_users(&self) -> usize {
        self.user_positions.len()
    }

    /// Coordinates of every element of AP `a`'s array, centred on the AP.
    pub fn element_positions(&self, a: usize) -> Vec<Position> {
        let centre = self.ap_positions[a];
        let (s, c) = self.ap_azimuths[a].sin_cos();
        let mid = (self.n_ap_antennas as f64 - 1.0) / 2.0;
        (0..self.n_ap_antennas)
            .map(|l| {
                let off = (l as f64 - mid) * self.element_spacing;
                Position::new(centre.x + off * c, centre.y + off * s, centre.z)
            })
            .collect()
    }

    /// Image of user `k` closest to AP `a` on the torus, in unwrapped coordinates.
    pub fn user_image_near_ap(&self, k: usize, a: usize) -> Position {
        let ap = self.ap_positions[a];
        let (dx, dy, dz) = wrapped_offset(&ap, &self.user_positions[k], self.area_side);
        Position::new(ap.x + dx, ap.y + dy, ap.z + dz)
    }

    pub fn ap_user_distance(&self, k: usize, a: usize) -> f64 {
        toroidal_distance(
            &self.ap_positions[a],
            &self.user_positions[k],
            self.area_side,
        )
    }

    pub fn ap_user_horizontal_distance(&self, k: usize, a: usize) -> f64 {
        let (dx, dy, _) = wrapped_offset(
            &self.ap_positions[a],
            &self.user_positions[k],
            self.area_side,
        );
        dx.hypot(dy)
    }
}

fn wrap_axis(d: f64, side: f64) -> f64 {
    let d = d.rem_euclid(side);
    if d > side / 2.0 {
        d - side
    } else {
        d
    }
}

/// Shortest displacement from `p` to `q` with horizontal wrap-around.
pub fn wrapped_offset(p: &Position, q: &Position, area_side: f64) -> (f64, f64, f64) {
    (
        wrap_axis(q.x - p.x, area_side),
        wrap_axis(q.y - p.y, area_side),
        q.z - p.z,
    )
}

/// 3D distance with horizontal wrap-around; heights never wrap.
pub fn toroidal_distance(p: &Position, q: &Position, area_side: f64) -> f64 {
    let (dx, dy, dz) = wrapped_offset(p, q, area_side);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Independent uniform pilot indices in `0..tau_p`; collisions are allowed.
pub fn assign_pilots<R: Rng + ?Sized>(
    tau_p: usize,
    n_users: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if tau_p == 0 {
        return Err(Error::Config("tau_p must be at least 1".into()));
    }
    Ok((0..n_users).map(|_| rng.random_range(0..tau_p)).collect())
}

pub fn sample_drop<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<Drop> {
    cfg.validate()?;
    let side = cfg.area_side;
    let horizontal = |rng: &mut R| (rng.random_range(0.0..side), rng.random_range(0.0..side));

    let ap_positions: Vec<Position> = (0..cfg.n_aps)
        .map(|_| {
            let (x, y) = horizontal(rng);
            Position::new(x, y, cfg.ap_height)
        })
        .collect();
    let ap_azimuths = (0..cfg.n_aps)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();

    let mut user_positions = Vec::with_capacity(cfg.n_users());
    let mut user_kinds = Vec::with_capacity(cfg.n_users());
    for _ in 0..cfg.n_gues {
        let (x, y) = horizontal(rng);
        user_positions.push(Position::new(x, y, cfg.gue_height));
        user_kinds.push(UserKind::Gue);
    }
    let HeightRange { min, max } = cfg.uav_height_range;
    for _ in 0..cfg.n_uavs {
        let (x, y) = horizontal(rng);
        let z = if max > min {
            rng.random_range(min..=max)
        } else {
            min
        };
        user_positions.push(Position::new(x, y, z));
        user_kinds.push(UserKind::Uav);
    }

    let pilots = assign_pilots(cfg.tau_p, cfg.n_users(), rng)?;

    Ok(Drop {
        area_side: side,
        ap_positions,
        ap_azimuths,
        n_ap_antennas: cfg.n_ap_antennas,
        element_spacing: cfg.antenna_spacing * cfg.wavelength(),
        user_positions,
        user_kinds,
        pilots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn chi_square_p(counts: &[usize], expected: f64) -> f64 {
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        1.0 - ChiSquared::new((counts.len() - 1) as f64)
            .unwrap()
            .cdf(stat)
    }

    fn reference_cfg() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn reference_population() {
        let cfg = reference_cfg();
        let drop = sample_drop(&cfg, &mut SimRng::seed_from_u64(3)).unwrap();
        assert_eq!(drop.n_users(), 60);
        assert_eq!(drop.n_aps(), 100);
        let uavs: Vec<_> = drop
            .user_positions
            .iter()
            .zip(&drop.user_kinds)
            .filter(|(_, k)| **k == UserKind::Uav)
            .collect();
        assert_eq!(uavs.len(), 12);
        for (p, _) in uavs {
            assert!((22.5..=300.0).contains(&p.z));
        }
        for p in drop.ap_positions.iter().chain(&drop.user_positions) {
            assert!((0.0..1000.0).contains(&p.x) && (0.0..1000.0).contains(&p.y));
        }
        assert!(drop.pilots.iter().all(|&p| p < 32));
    }

    #[test]
    fn same_seed_same_drop() {
        let cfg = reference_cfg();
        let a = sample_drop(&cfg, &mut SimRng::seed_from_u64(11)).unwrap();
        let b = sample_drop(&cfg, &mut SimRng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_uavs_means_ground_heights() {
        let cfg = SystemConfig {
            n_uavs: 0,
            ..reference_cfg()
        };
        let drop = sample_drop(&cfg, &mut SimRng::seed_from_u64(1)).unwrap();
        assert!(drop.user_positions.iter().all(|p| p.z == cfg.gue_height));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SystemConfig {
            n_gues: 0,
            n_uavs: 0,
            ..reference_cfg()
        };
        assert!(matches!(
            sample_drop(&cfg, &mut SimRng::seed_from_u64(1)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn element_spacing_is_half_wavelength() {
        let cfg = reference_cfg();
        let drop = sample_drop(&cfg, &mut SimRng::seed_from_u64(5)).unwrap();
        let el = drop.element_positions(0);
        assert_eq!(el.len(), 4);
        for w in el.windows(2) {
            assert!((w[0].distance(&w[1]) - cfg.wavelength() / 2.0).abs() < 1e-12);
            assert_eq!(w[0].z, cfg.ap_height);
        }
    }

    #[test]
    fn pigeonhole_collisions() {
        let pilots = assign_pilots(32, 60, &mut SimRng::seed_from_u64(9)).unwrap();
        let distinct: std::collections::HashSet<_> = pilots.iter().collect();
        // 60 users on at most 32 indices: at least 28 users reuse a taken index.
        assert!(pilots.len() - distinct.len() >= 28);
    }

    #[test]
    fn single_pilot_shared_by_all() {
        let pilots = assign_pilots(1, 10, &mut SimRng::seed_from_u64(9)).unwrap();
        assert!(pilots.iter().all(|&p| p == 0));
        assert!(assign_pilots(0, 10, &mut SimRng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn all_distinct_probability_matches_combinatorics() {
        // 60!/60^60 from the product form, checked against the log-gamma form.
        let product: f64 = (0..60).map(|i| 1.0 - i as f64 / 60.0).product();
        let log_gamma_form = (statrs::function::gamma::ln_gamma(61.0) - 60.0 * 60f64.ln()).exp();
        assert!((product - 1.702_549_809_332_843e-25).abs() / product < 1e-9);
        assert!((product - log_gamma_form).abs() / product < 1e-9);
        // Vanishingly unlikely, so a handful of draws always collide.
        let mut rng = SimRng::seed_from_u64(4);
        for _ in 0..20 {
            let p = assign_pilots(60, 60, &mut rng).unwrap();
            let distinct: std::collections::HashSet<_> = p.iter().collect();
            assert!(distinct.len() < 60);
        }
    }

    #[test]
    fn pilot_marginal_is_uniform() {
        let mut rng = SimRng::seed_from_u64(21);
        let pilots = assign_pilots(32, 100_000, &mut rng).unwrap();
        let mut counts = vec![0usize; 32];
        for p in pilots {
            counts[p] += 1;
        }
        assert!(chi_square_p(&counts, 100_000.0 / 32.0) > 0.01);
    }

    #[test]
    fn positions_are_uniform_on_grid() {
        let cfg = SystemConfig {
            n_aps: 50_000,
            n_gues: 50_000,
            n_uavs: 0,
            ..reference_cfg()
        };
        let drop = sample_drop(&cfg, &mut SimRng::seed_from_u64(8)).unwrap();
        for pts in [&drop.ap_positions, &drop.user_positions] {
            let mut counts = vec![0usize; 100];
            for p in pts.iter() {
                let i = (p.x / 100.0) as usize;
                let j = (p.y / 100.0) as usize;
                counts[i * 10 + j] += 1;
            }
            assert!(chi_square_p(&counts, pts.len() as f64 / 100.0) > 0.01);
        }
    }

    #[test]
    fn toroidal_examples() {
        let side = 1000.0;
        let o = Position::new(0.0, 0.0, 0.0);
        assert!((toroidal_distance(&o, &Position::new(999.0, 0.0, 0.0), side) - 1.0).abs() < 1e-9);
        assert_eq!(toroidal_distance(&o, &o, side), 0.0);
        let d = toroidal_distance(
            &Position::new(0.0, 0.0, 15.0),
            &Position::new(500.0, 500.0, 150.0),
            side,
        );
        assert!((d - 719.878_461_964_240_2).abs() < 1e-9);
    }

    fn pos(side: f64) -> impl Strategy<Value = Position> {
        (0.0..side, 0.0..side, 0.0..300.0).prop_map(|(x, y, z)| Position::new(x, y, z))
    }

    proptest! {
        #[test]
        fn toroidal_metric_properties(p in pos(1000.0), q in pos(1000.0), r in pos(1000.0)) {
            let side = 1000.0;
            let pq = toroidal_distance(&p, &q, side);
            prop_assert!((pq - toroidal_distance(&q, &p, side)).abs() < 1e-9);
            prop_assert!(pq <= p.distance(&q) + 1e-9);
            let pr = toroidal_distance(&p, &r, side);
            let rq = toroidal_distance(&r, &q, side);
            prop_assert!(pq <= pr + rq + 1e-9);
        }
    }
}
