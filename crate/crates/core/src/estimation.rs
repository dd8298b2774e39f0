//! Uplink training and LMMSE channel estimation.
//!
//! Pilots are columns of the `τ_p × τ_p` identity, so the de-spread statistic
//! of user `k` at AP `a` is the column of the received training matrix that
//! belongs to `k`'s pilot index, and `|φ_iᴴ φ_k|²` is 1 for users sharing a
//! pilot and 0 otherwise.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{ChannelRealization, LinkState, LinkTable, RiceFactor};
use crate::error::{Error, Result};
use crate::rng::complex_normal;

/// Condition-number ceiling for the pilot Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Channel covariance `G = (β/(K+1)) (K a aᴴ + I)`; `β a aᴴ` for pure LOS.
pub fn covariance_g(link: &LinkState) -> DMatrix<Complex64> {
    let n = link.n_antennas();
    let a = &link.steering;
    let specular = &(a * a.adjoint()) * c(link.specular_power());
    match link.rice {
        RiceFactor::PureLos => specular,
        RiceFactor::Finite(_) => specular + DMatrix::identity(n, n) * c(link.scatter_power()),
    }
}

/// Which pilot Gram expression to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GramForm {
    /// `Σ η_i G_i |φ_iᴴφ_k|² + σ² I`, the covariance of the de-spread statistic.
    #[default]
    Consistent,
    /// Same sum with every term additionally scaled by `β_i`.
    ExtraBeta,
}

/// One term of the pilot Gram sum: training power, covariance and β of a user.
pub struct GramTerm<'a> {
    pub pilot: usize,
    pub train_power: f64,
    pub covariance: &'a DMatrix<Complex64>,
    pub beta: f64,
}

/// Pilot Gram matrix `B` seen by a user on `pilot` at one AP.
pub fn pilot_gram_b<'a>(
    n_antennas: usize,
    pilot: usize,
    terms: impl IntoIterator<Item = GramTerm<'a>>,
    noise_var: f64,
    form: GramForm,
) -> DMatrix<Complex64> {
    let mut b = DMatrix::identity(n_antennas, n_antennas) * c(noise_var);
    for t in terms.into_iter().filter(|t| t.pilot == pilot) {
        let scale = match form {
            GramForm::Consistent => t.train_power,
            GramForm::ExtraBeta => t.train_power * t.beta,
        };
        b += t.covariance * c(scale);
    }
    b
}

fn check_condition(b: &DMatrix<Complex64>) -> Result<()> {
    let eig = b.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::Numerical(format!(
            "pilot Gram matrix ill-conditioned (eigenvalues in [{lo:e}, {hi:e}])"
        )));
    }
    Ok(())
}

/// LMMSE filter `D = sqrt(η) G B⁻¹`, via a Cholesky solve of `B`.
pub fn lmmse_filter_d(
    g: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    train_power: f64,
) -> Result<DMatrix<Complex64>> {
    check_condition(b)?;
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("pilot Gram matrix is not positive definite".into()))?;
    // B Hermitian: G B⁻¹ = (B⁻¹ Gᴴ)ᴴ.
    Ok(chol.solve(&g.adjoint()).adjoint() * c(train_power.sqrt()))
}

/// `γ = sqrt(η) tr(G D) = E‖ĝ‖²`.
pub fn gamma_coeff(
    g: &DMatrix<Complex64>,
    d: &DMatrix<Complex64>,
    train_power: f64,
) -> Result<f64> {
    let t = (g * d).trace() * train_power.sqrt();
    let tol = 1e-9 * t.norm().max(f64::MIN_POSITIVE);
    if t.re < -tol || t.im.abs() > tol.max(1e-9 * t.re.abs()) {
        return Err(Error::Numerical(format!(
            "estimate power is not a non-negative real: {t}"
        )));
    }
    Ok(t.re.max(0.0))
}

/// Received training block at one AP.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingObservation {
    /// `N_AP × τ_p` matrix `Y_a`.
    pub received: DMatrix<Complex64>,
}

impl TrainingObservation {
    /// De-spread statistic `ŷ = Y_a φ` for a pilot index.
    pub fn statistic(&self, pilot: usize) -> DVector<Complex64> {
        self.received.column(pilot).into_owned()
    }
}

/// Simulates `Y_a = Σ_k sqrt(η_k) g_k φ_kᴴ + W_a` for the channels of all users into one AP.
pub fn simulate_training<R: Rng + ?Sized>(
    channels: &[&DVector<Complex64>],
    pilots: &[usize],
    train_powers: &[f64],
    tau_p: usize,
    noise_var: f64,
    rng: &mut R,
) -> TrainingObservation {
    let n = channels.first().map_or(0, |g| g.len());
    let sigma = noise_var.sqrt();
    let mut received = if noise_var > 0.0 {
        DMatrix::from_fn(n, tau_p, |_, _| complex_normal(rng) * sigma)
    } else {
        DMatrix::zeros(n, tau_p)
    };
    for ((g, &p), &eta) in channels.iter().zip(pilots).zip(train_powers) {
        let mut col = received.column_mut(p);
        col += *g * c(eta.sqrt());
    }
    TrainingObservation { received }
}

/// Estimator statistics of one (user, AP) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkEstimator {
    pub covariance: DMatrix<Complex64>,
    pub gram: DMatrix<Complex64>,
    pub filter: DMatrix<Complex64>,
    pub gamma: f64,
}

/// Estimator statistics for every (user, AP) pair of a drop.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSet {
    pub n_users: usize,
    pub n_aps: usize,
    pub pilots: Vec<usize>,
    pub train_powers: Vec<f64>,
    pub noise_var: f64,
    pub tau_p: usize,
    est: Vec<LinkEstimator>,
}

impl EstimatorSet {
    pub fn build(
        links: &LinkTable,
        pilots: &[usize],
        train_powers: &[f64],
        tau_p: usize,
        noise_var: f64,
        form: GramForm,
    ) -> Result<Self> {
        let (n_users, n_aps) = (links.n_users, links.n_aps);
        if pilots.len() != n_users || train_powers.len() != n_users {
            return Err(Error::Config(
                "pilot and power lists must cover every user".into(),
            ));
        }
        if let Some(&p) = pilots.iter().find(|&&p| p >= tau_p) {
            return Err(Error::Config(format!("pilot index {p} outside 0..{tau_p}")));
        }
        if !(noise_var > 0.0) {
            return Err(Error::Config("noise variance must be positive".into()));
        }
        let n = links.n_antennas();
        let covs: Vec<DMatrix<Complex64>> = (0..n_users)
            .flat_map(|k| (0..n_aps).map(move |a| (k, a)))
            .map(|(k, a)| covariance_g(links.get(k, a)))
            .collect();
        let mut est: Vec<Option<LinkEstimator>> = vec![None; n_users * n_aps];
        for a in 0..n_aps {
            let mut used: Vec<usize> = pilots.to_vec();
            used.sort_unstable();
            used.dedup();
            for p in used {
                let terms = (0..n_users).map(|i| GramTerm {
                    pilot: pilots[i],
                    train_power: train_powers[i],
                    covariance: &covs[i * n_aps + a],
                    beta: links.get(i, a).beta,
                });
                let b = pilot_gram_b(n, p, terms, noise_var, form);
                check_condition(&b)?;
                let chol = b.clone().cholesky().ok_or_else(|| {
                    Error::Numerical("pilot Gram matrix is not positive definite".into())
                })?;
                for k in (0..n_users).filter(|&k| pilots[k] == p) {
                    let g = &covs[k * n_aps + a];
                    let d = chol.solve(&g.adjoint()).adjoint() * c(train_powers[k].sqrt());
                    let gamma = gamma_coeff(g, &d, train_powers[k])?;
                    est[k * n_aps + a] = Some(LinkEstimator {
                        covariance: g.clone(),
                        gram: b.clone(),
                        filter: d,
                        gamma,
                    });
                }
            }
        }
        Ok(Self {
            n_users,
            n_aps,
            pilots: pilots.to_vec(),
            train_powers: train_powers.to_vec(),
            noise_var,
            tau_p,
            est: est
                .into_iter()
                .map(|e| e.expect("every user has a pilot"))
                .collect(),
        })
    }

    pub fn get(&self, k: usize, a: usize) -> &LinkEstimator {
        &self.est[k * self.n_aps + a]
    }

    pub fn gamma(&self, k: usize, a: usize) -> f64 {
        self.get(k, a).gamma
    }

    /// `|φ_jᴴ φ_k|²`.
    pub fn pilot_overlap(&self, j: usize, k: usize) -> f64 {
        if self.pilots[j] == self.pilots[k] {
            1.0
        } else {
            0.0
        }
    }

    /// Runs the training phase on one channel draw and returns every ĝ,
    /// indexed like the estimator table.
    pub fn estimate_all<R: Rng + ?Sized>(
        &self,
        channels: &ChannelRealization,
        rng: &mut R,
    ) -> Vec<DVector<Complex64>> {
        let mut out = Vec::with_capacity(self.n_users * self.n_aps);
        out.resize(self.n_users * self.n_aps, DVector::zeros(0));
        for a in 0..self.n_aps {
            let gs: Vec<&DVector<Complex64>> =
                (0..self.n_users).map(|k| channels.get(k, a)).collect();
            let obs = simulate_training(
                &gs,
                &self.pilots,
                &self.train_powers,
                self.tau_p,
                self.noise_var,
                rng,
            );
            for k in 0..self.n_users {
                out[k * self.n_aps + a] = &self.get(k, a).filter * obs.statistic(self.pilots[k]);
            }
        }
        out
    }
}
