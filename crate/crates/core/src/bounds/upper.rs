//! Monte-Carlo upper bounds.
//!
//! Each trial draws fresh fading and training noise, runs the estimator and
//! evaluates the instantaneous SINR of every user with the true channel and
//! its estimate. One draw serves all users of a trial.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::rng::{stream, Stream};

/// Mean of `fraction · log2(1 + SINR)` over trials with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UbEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn finish(&self) -> UbEstimate {
        let std_err = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        UbEstimate {
            mean: self.mean,
            std_err,
            trials: self.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBounds {
    pub dl: Vec<UbEstimate>,
    pub ul: Vec<UbEstimate>,
}

/// Runs `trials` fading draws on `rng`.
pub fn se_ub_mc<R: Rng + ?Sized>(net: &Network, trials: usize, rng: &mut R) -> Result<UpperBounds> {
    if trials == 0 {
        return Err(Error::EmptySamples);
    }
    let (n_users, n_aps) = (net.n_users(), net.n_aps());
    let mut dl = vec![Welford::default(); n_users];
    let mut ul = vec![Welford::default(); n_users];
    let mut cross = vec![Complex64::new(0.0, 0.0); n_users * n_users * n_aps];
    for _ in 0..trials {
        let g = ChannelRealization::sample(&net.links, rng);
        let g_hat = net.estimators.estimate_all(&g, rng);
        instantaneous(net, &g, &g_hat, &mut cross, &mut dl, &mut ul);
    }
    Ok(UpperBounds {
        dl: dl.iter().map(Welford::finish).collect(),
        ul: ul.iter().map(Welford::finish).collect(),
    })
}

/// Upper bounds of drop `drop_index` on its own fading stream.
pub fn upper_bounds(
    net: &Network,
    trials: usize,
    seed: u64,
    drop_index: usize,
) -> Result<UpperBounds> {
    se_ub_mc(net, trials, &mut stream(seed, drop_index, Stream::Fading))
}

fn instantaneous(
    net: &Network,
    g: &ChannelRealization,
    g_hat: &[DVector<Complex64>],
    cross: &mut [Complex64],
    dl: &mut [Welford],
    ul: &mut [Welford],
) {
    let (n_users, n_aps) = (net.n_users(), net.n_aps());
    let assoc = &net.association;
    let pw = &net.powers;
    // cross[(k·K + j)·M + a] = g_kaᴴ ĝ_ja, only where AP a serves user j.
    for k in 0..n_users {
        for j in 0..n_users {
            for &a in &assoc.serving[j] {
                cross[(k * n_users + j) * n_aps + a] = g.get(k, a).dotc(&g_hat[j * n_aps + a]);
            }
        }
    }
    let at = |k: usize, j: usize, a: usize| cross[(k * n_users + j) * n_aps + a];

    for k in 0..n_users {
        // Downlink: user k's effective gain towards every stream j.
        let mut signal = 0.0;
        let mut interference = 0.0;
        for j in 0..n_users {
            let s: Complex64 = assoc.serving[j]
                .iter()
                .map(|&a| at(k, j, a) * pw.dl_coef(j, a).sqrt())
                .sum();
            if j == k {
                signal = s.norm_sqr();
            } else {
                interference += s.norm_sqr();
            }
        }
        dl[k].push(net.data_fraction * (1.0 + signal / (interference + net.dl_noise)).log2());

        // Uplink: matched filter over user k's serving APs, ĝ_kaᴴ g_ja = conj(g_jaᴴ ĝ_ka).
        let mut signal = 0.0;
        let mut interference = 0.0;
        for j in 0..n_users {
            let s: Complex64 = assoc.serving[k].iter().map(|&a| at(j, k, a).conj()).sum();
            if j == k {
                signal = pw.ul[k] * s.norm_sqr();
            } else {
                interference += pw.ul[j] * s.norm_sqr();
            }
        }
        let noise = net.ul_noise
            * assoc.serving[k]
                .iter()
                .map(|&a| g_hat[k * n_aps + a].norm_squared())
                .sum::<f64>();
        let ratio = if signal > 0.0 {
            signal / (interference + noise)
        } else {
            0.0
        };
        ul[k].push(net.data_fraction * (1.0 + ratio).log2());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{AssociationMap, PowerAllocation};
    use crate::channel::{LinkState, LinkTable, RiceFactor};
    use crate::deployment::UserKind;
    use crate::estimation::{EstimatorSet, GramForm};
    use crate::rng::SimRng;
    use rand::SeedableRng;

    fn pure_los_net(noise: f64) -> Network {
        let steer = DVector::from_vec(vec![Complex64::new(1.0, 0.0); 2]);
        let links = LinkTable::from_fn(1, 1, |_, _| {
            LinkState::new(1.0, RiceFactor::PureLos, 10.0, steer.clone())
        });
        let est = EstimatorSet::build(&links, &[0], &[1.0], 1, 1e-9, GramForm::Consistent).unwrap();
        let assoc = AssociationMap::from_serving(vec![vec![0]], 1).unwrap();
        let powers = PowerAllocation::new(1, vec![1.0], vec![1.0], &est);
        Network::from_parts(
            vec![UserKind::Uav],
            links,
            est,
            assoc,
            powers,
            noise,
            noise,
            0.5,
        )
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, 7.0, -3.0];
        let mut w = Welford::default();
        xs.iter().for_each(|&x| w.push(x));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        let e = w.finish();
        assert!((e.mean - mean).abs() < 1e-14);
        assert!((e.std_err - (var / 5.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_trials_is_an_error() {
        let net = pure_los_net(1e-3);
        assert!(matches!(
            se_ub_mc(&net, 0, &mut SimRng::seed_from_u64(0)),
            Err(Error::EmptySamples)
        ));
    }

    #[test]
    fn single_pure_los_user_is_nearly_deterministic() {
        // One user, one AP, no scattering and almost no training noise: the
        // estimate equals the channel, ‖g‖² = 2 and γ = 2, so both directions
        // see an SINR of 2 / σ².
        let noise = 1e-3;
        let net = pure_los_net(noise);
        let ub = se_ub_mc(&net, 50, &mut SimRng::seed_from_u64(1)).unwrap();
        let want = 0.5 * (1.0 + 2.0 / noise).log2();
        let (want_dl, want_ul) = (want, want);
        assert!(
            (ub.dl[0].mean - want_dl).abs() < 1e-4,
            "{:?} vs {want_dl}",
            ub.dl[0]
        );
        assert!(
            (ub.ul[0].mean - want_ul).abs() < 1e-4,
            "{:?} vs {want_ul}",
            ub.ul[0]
        );
        assert!(ub.dl[0].std_err < 1e-5);
    }

    #[test]
    fn upper_bounds_reproducible_per_drop() {
        let net = pure_los_net(1e-2);
        assert_eq!(
            upper_bounds(&net, 5, 9, 2).unwrap(),
            upper_bounds(&net, 5, 9, 2).unwrap()
        );
    }
}
