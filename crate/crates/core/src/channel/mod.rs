//! Per-link large-scale state and Ricean fast-fading realizations.
//!
//! A link from user `k` to AP `a` is
//! `g = sqrt(β/(K+1)) · (sqrt(K) e^{jϑ} a(θ) + h)` with `h ~ CN(0, I)` and
//! `ϑ ~ U[0, 2π)` redrawn per coherence block.

pub mod aerial;
pub mod ground;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::config::SystemConfig;
use crate::deployment::{Drop, Position, UserKind};
use crate::error::{Error, Result};
use crate::rng::complex_normal;

pub use aerial::{los_probability, uav_large_scale};
pub use ground::{gue_large_scale, ShadowField};

/// LOS probabilities at or above `1 - PURE_LOS_EPS` collapse to a pure-LOS link.
pub const PURE_LOS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiceFactor {
    Finite(f64),
    /// K → ∞: the scattered component vanishes.
    PureLos,
}

impl RiceFactor {
    pub fn value(&self) -> f64 {
        match *self {
            RiceFactor::Finite(k) => k,
            RiceFactor::PureLos => f64::INFINITY,
        }
    }
}

/// Ricean factor `K = p / (1 - p)` from a LOS probability.
pub fn rice_factor(p_los: f64) -> RiceFactor {
    if p_los >= 1.0 - PURE_LOS_EPS {
        RiceFactor::PureLos
    } else {
        RiceFactor::Finite(p_los.max(0.0) / (1.0 - p_los))
    }
}

/// Large-scale state of one user–AP link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub beta: f64,
    pub rice: RiceFactor,
    pub distance_3d: f64,
    pub steering: DVector<Complex64>,
}

impl LinkState {
    pub fn new(
        beta: f64,
        rice: RiceFactor,
        distance_3d: f64,
        steering: DVector<Complex64>,
    ) -> Self {
        Self {
            beta,
            rice,
            distance_3d,
            steering,
        }
    }

    /// Rayleigh link with an all-ones steering vector.
    pub fn rayleigh(beta: f64, n_antennas: usize) -> Self {
        Self::new(
            beta,
            RiceFactor::Finite(0.0),
            1.0,
            DVector::from_element(n_antennas, Complex64::new(1.0, 0.0)),
        )
    }

    pub fn n_antennas(&self) -> usize {
        self.steering.len()
    }

    /// Power of the scattered part per antenna, `β/(K+1)`.
    pub fn scatter_power(&self) -> f64 {
        match self.rice {
            RiceFactor::Finite(k) => self.beta / (k + 1.0),
            RiceFactor::PureLos => 0.0,
        }
    }

    /// Power of the specular part per antenna, `βK/(K+1)`.
    pub fn specular_power(&self) -> f64 {
        match self.rice {
            RiceFactor::Finite(k) => self.beta * k / (k + 1.0),
            RiceFactor::PureLos => self.beta,
        }
    }

    /// Channel vector for a given LOS phase and scattered draw.
    pub fn channel(&self, phase: f64, scatter: &DVector<Complex64>) -> DVector<Complex64> {
        let los = Complex64::from_polar(self.specular_power().sqrt(), phase);
        let s = self.scatter_power().sqrt();
        self.steering.map(|v| v * los) + scatter * Complex64::new(s, 0.0)
    }
}

/// Array response of the elements at `elements` towards `user`.
///
/// Entry ℓ is `exp(-j2π(‖z₁ − u‖ − ‖z_ℓ − u‖)/λ)`, so the first entry is 1.
pub fn steering_vector(
    elements: &[Position],
    user: &Position,
    wavelength: f64,
) -> Result<DVector<Complex64>> {
    if !(wavelength > 0.0) {
        return Err(Error::Geometry(format!(
            "non-positive wavelength {wavelength}"
        )));
    }
    let dists: Vec<f64> = elements.iter().map(|e| e.distance(user)).collect();
    if dists.iter().any(|&d| d < 1e-9) {
        return Err(Error::Geometry(
            "user coincides with an antenna element".into(),
        ));
    }
    let Some(&reference) = dists.first() else {
        return Err(Error::Geometry("empty antenna array".into()));
    };
    let k = -std::f64::consts::TAU / wavelength;
    Ok(DVector::from_iterator(
        dists.len(),
        dists
            .iter()
            .map(|&d| Complex64::from_polar(1.0, k * (reference - d))),
    ))
}

/// One fast-fading draw of a link.
pub fn sample_channel<R: Rng + ?Sized>(link: &LinkState, rng: &mut R) -> DVector<Complex64> {
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let h = DVector::from_iterator(
        link.n_antennas(),
        (0..link.n_antennas()).map(|_| complex_normal(rng)),
    );
    link.channel(phase, &h)
}

/// Link states of a whole drop, indexed by (user, AP).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable {
    pub n_users: usize,
    pub n_aps: usize,
    links: Vec<LinkState>,
}

impl LinkTable {
    pub fn from_fn(n_users: usize, n_aps: usize, f: impl FnMut(usize, usize) -> LinkState) -> Self {
        let mut f = f;
        let mut links = Vec::with_capacity(n_users * n_aps);
        for k in 0..n_users {
            for a in 0..n_aps {
                links.push(f(k, a));
            }
        }
        Self {
            n_users,
            n_aps,
            links,
        }
    }

    pub fn get(&self, k: usize, a: usize) -> &LinkState {
        &self.links[k * self.n_aps + a]
    }

    pub fn n_antennas(&self) -> usize {
        self.links.first().map_or(0, |l| l.n_antennas())
    }

    /// β matrix, rows are users.
    pub fn betas(&self) -> Vec<Vec<f64>> {
        (0..self.n_users)
            .map(|k| (0..self.n_aps).map(|a| self.get(k, a).beta).collect())
            .collect()
    }
}

/// Large-scale state for every link of a drop.
///
/// GUE links are Rayleigh with three-slope path loss plus correlated
/// shadowing. UAV links take `K` from the LOS probability and pick the LOS or
/// NLOS path-loss branch from one Bernoulli draw per link.
pub fn build_links<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    drop: &Drop,
    shadow_rng: &mut R,
    los_rng: &mut R,
) -> Result<LinkTable> {
    let shadow = ShadowField::sample(drop, cfg, shadow_rng)?;
    let wavelength = cfg.wavelength();
    let carrier_ghz = cfg.carrier_freq / 1e9;
    let elements: Vec<Vec<Position>> = (0..drop.n_aps())
        .map(|a| drop.element_positions(a))
        .collect();
    let mut links = Vec::with_capacity(drop.n_users() * drop.n_aps());
    for k in 0..drop.n_users() {
        for a in 0..drop.n_aps() {
            let distance = drop.ap_user_distance(k, a);
            let steering =
                steering_vector(&elements[a], &drop.user_image_near_ap(k, a), wavelength)?;
            let (beta, rice) = match drop.user_kinds[k] {
                UserKind::Gue => (
                    gue_large_scale(distance, shadow.z(k, a), cfg)?,
                    RiceFactor::Finite(0.0),
                ),
                UserKind::Uav => {
                    let height = drop.user_positions[k].z;
                    let p = los_probability(drop.ap_user_horizontal_distance(k, a), height)?;
                    let los = los_rng.random_bool(p);
                    (
                        uav_large_scale(distance, height, carrier_ghz, los)?,
                        rice_factor(p),
                    )
                }
            };
            links.push(LinkState::new(beta, rice, distance, steering));
        }
    }
    Ok(LinkTable {
        n_users: drop.n_users(),
        n_aps: drop.n_aps(),
        links,
    })
}

/// One fast-fading draw of every link in a table.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n_aps: usize,
    g: Vec<DVector<Complex64>>,
}

impl ChannelRealization {
    pub fn sample<R: Rng + ?Sized>(links: &LinkTable, rng: &mut R) -> Self {
        let g = links.links.iter().map(|l| sample_channel(l, rng)).collect();
        Self {
            n_aps: links.n_aps,
            g,
        }
    }

    pub fn get(&self, k: usize, a: usize) -> &DVector<Complex64> {
        &self.g[k * self.n_aps + a]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::sample_drop;
    use crate::rng::SimRng;
    use nalgebra::DMatrix;
    use rand::SeedableRng;

    fn ula(n: usize, spacing: f64) -> Vec<Position> {
        (0..n)
            .map(|l| Position::new(l as f64 * spacing, 0.0, 15.0))
            .collect()
    }

    fn unit(x: f64) -> RiceFactor {
        RiceFactor::Finite(x)
    }

    #[test]
    fn broadside_user_sees_all_ones() {
        // Elements on the x axis, user on the bisector plane of a 2-element array.
        let el = ula(2, 0.5);
        let user = Position::new(0.25, 300.0, 100.0);
        let a = steering_vector(&el, &user, 1.0).unwrap();
        for v in a.iter() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn reference_entry_is_one_and_entries_unit_modulus() {
        let el = ula(4, 0.079);
        let a = steering_vector(&el, &Position::new(37.0, -12.0, 80.0), 0.158).unwrap();
        assert_eq!(a[0], Complex64::new(1.0, 0.0));
        for v in a.iter() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn endfire_phases_step_by_pi() {
        let lambda = 0.157_79;
        let el = ula(4, lambda / 2.0);
        // Far user along the array axis, on the side of element 1 (x < 0).
        let user = Position::new(-1.0e4, 0.0, 15.0);
        let a = steering_vector(&el, &user, lambda).unwrap();
        for (l, v) in a.iter().enumerate() {
            // Exact-distance oracle.
            let d1 = el[0].distance(&user);
            let dl = el[l].distance(&user);
            let want = -std::f64::consts::TAU * (d1 - dl) / lambda;
            assert!((v.arg() - Complex64::from_polar(1.0, want).arg()).abs() < 1e-9);
            // Path difference is l·λ/2, so the phase advances by π per element.
            let expect = Complex64::from_polar(1.0, std::f64::consts::PI * l as f64);
            assert!((v - expect).norm() < 1e-6);
        }
    }

    #[test]
    fn coincident_user_is_a_geometry_error() {
        let el = ula(2, 0.5);
        assert!(matches!(
            steering_vector(&el, &el[1], 1.0),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn rice_factor_cases() {
        assert_eq!(rice_factor(0.0), unit(0.0));
        assert_eq!(rice_factor(0.5), unit(1.0));
        assert_eq!(rice_factor(1.0), RiceFactor::PureLos);
        assert_eq!(rice_factor(1.0 - 1e-10), RiceFactor::PureLos);
    }

    #[test]
    fn pure_los_norm_is_deterministic() {
        let mut rng = SimRng::seed_from_u64(1);
        let el = ula(4, 0.08);
        let a = steering_vector(&el, &Position::new(50.0, 20.0, 100.0), 0.16).unwrap();
        let link = LinkState::new(2.5e-9, RiceFactor::PureLos, 1.0, a);
        for _ in 0..100 {
            let g = sample_channel(&link, &mut rng);
            assert!((g.norm_squared() - 2.5e-9 * 4.0).abs() < 1e-20);
        }
    }

    fn sample_covariance(
        link: &LinkState,
        n: usize,
        rng: &mut SimRng,
    ) -> (DMatrix<Complex64>, DVector<Complex64>) {
        let m = link.n_antennas();
        let mut cov = DMatrix::zeros(m, m);
        let mut mean = DVector::zeros(m);
        for _ in 0..n {
            let g = sample_channel(link, rng);
            cov += &g * g.adjoint();
            mean += &g;
        }
        (
            cov / Complex64::new(n as f64, 0.0),
            mean / Complex64::new(n as f64, 0.0),
        )
    }

    #[test]
    fn rayleigh_covariance_is_scaled_identity() {
        let mut rng = SimRng::seed_from_u64(7);
        let link = LinkState::rayleigh(3.0, 2);
        let (cov, _) = sample_covariance(&link, 1_000_000, &mut rng);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 3.0 } else { 0.0 };
                assert!((cov[(i, j)] - Complex64::new(want, 0.0)).norm() < 0.01 * 3.0);
            }
        }
    }

    #[test]
    fn ricean_covariance_and_zero_mean() {
        let mut rng = SimRng::seed_from_u64(8);
        let el = ula(3, 0.08);
        let a = steering_vector(&el, &Position::new(-40.0, 25.0, 60.0), 0.16).unwrap();
        let link = LinkState::new(1.5, unit(2.0), 1.0, a.clone());
        let (cov, mean) = sample_covariance(&link, 1_000_000, &mut rng);
        // (β/(K+1)) (K a aᴴ + I), written out independently of the estimator code.
        let want = (&a * a.adjoint() * Complex64::new(2.0, 0.0) + DMatrix::identity(3, 3))
            * Complex64::new(1.5 / 3.0, 0.0);
        let err = (&cov - &want).norm() / want.norm();
        assert!(err < 0.01, "relative Frobenius error {err}");
        assert!(mean.norm() < 0.01);
    }

    #[test]
    fn drop_links_are_well_formed() {
        let cfg = SystemConfig {
            n_aps: 20,
            n_gues: 10,
            n_uavs: 4,
            ..Default::default()
        };
        let drop = sample_drop(&cfg, &mut SimRng::seed_from_u64(1)).unwrap();
        let links = build_links(
            &cfg,
            &drop,
            &mut SimRng::seed_from_u64(2),
            &mut SimRng::seed_from_u64(3),
        )
        .unwrap();
        for k in 0..drop.n_users() {
            for a in 0..drop.n_aps() {
                let l = links.get(k, a);
                assert!(l.beta > 0.0 && l.beta.is_finite());
                assert_eq!(l.steering[0], Complex64::new(1.0, 0.0));
                if drop.user_kinds[k] == UserKind::Gue {
                    assert_eq!(l.rice, unit(0.0));
                }
            }
        }
        let again = build_links(
            &cfg,
            &drop,
            &mut SimRng::seed_from_u64(2),
            &mut SimRng::seed_from_u64(3),
        )
        .unwrap();
        assert_eq!(links, again);
    }
}
