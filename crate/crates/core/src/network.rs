//! One fully realized drop: links, estimators, association and powers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::allocation::{allocate, associate, AssociationMap, PowerAllocation};
use crate::channel::{build_links, LinkTable};
use crate::config::SystemConfig;
use crate::deployment::{sample_drop, Drop, UserKind};
use crate::error::Result;
use crate::estimation::{EstimatorSet, GramForm};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone)]
pub struct Network {
    pub user_kinds: Vec<UserKind>,
    pub links: LinkTable,
    pub estimators: EstimatorSet,
    pub association: AssociationMap,
    pub powers: PowerAllocation,
    /// Noise variance at the users (downlink receivers), mW.
    pub dl_noise: f64,
    /// Noise variance at the APs (uplink receivers), mW.
    pub ul_noise: f64,
    /// Fraction of the coherence block spent on each data direction.
    pub data_fraction: f64,
    /// `G_{k,a} D_{k,a}ᴴ` for every pair, shared by both interference sums.
    pub(crate) gd: Vec<DMatrix<Complex64>>,
}

impl Network {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        user_kinds: Vec<UserKind>,
        links: LinkTable,
        estimators: EstimatorSet,
        association: AssociationMap,
        powers: PowerAllocation,
        dl_noise: f64,
        ul_noise: f64,
        data_fraction: f64,
    ) -> Self {
        let gd = (0..links.n_users)
            .flat_map(|k| (0..links.n_aps).map(move |a| (k, a)))
            .map(|(k, a)| {
                let e = estimators.get(k, a);
                &e.covariance * e.filter.adjoint()
            })
            .collect();
        Self {
            user_kinds,
            links,
            estimators,
            association,
            powers,
            dl_noise,
            ul_noise,
            data_fraction,
            gd,
        }
    }

    /// Estimation, association and power allocation on top of given links.
    pub fn assemble(
        cfg: &SystemConfig,
        user_kinds: Vec<UserKind>,
        pilots: &[usize],
        links: LinkTable,
    ) -> Result<Self> {
        let form = if cfg.gram_extra_beta {
            GramForm::ExtraBeta
        } else {
            GramForm::Consistent
        };
        let noise = cfg.noise_power();
        let train = vec![cfg.train_power(); links.n_users];
        let estimators = EstimatorSet::build(&links, pilots, &train, cfg.tau_p, noise, form)?;
        let association = associate(cfg.association_mode, &links.betas())?;
        let powers = allocate(cfg, &estimators, &association);
        Ok(Self::from_parts(
            user_kinds,
            links,
            estimators,
            association,
            powers,
            noise,
            noise,
            cfg.data_fraction(),
        ))
    }

    /// Samples drop `drop_index` of the experiment seeded by `seed`.
    pub fn realize(cfg: &SystemConfig, seed: u64, drop_index: usize) -> Result<(Drop, Self)> {
        let drop = sample_drop(cfg, &mut stream(seed, drop_index, Stream::Geometry))?;
        let links = build_links(
            cfg,
            &drop,
            &mut stream(seed, drop_index, Stream::Shadowing),
            &mut stream(seed, drop_index, Stream::LosState),
        )?;
        let net = Self::assemble(cfg, drop.user_kinds.clone(), &drop.pilots, links)?;
        Ok((drop, net))
    }

    pub fn n_users(&self) -> usize {
        self.links.n_users
    }

    pub fn n_aps(&self) -> usize {
        self.links.n_aps
    }

    pub(crate) fn gd(&self, k: usize, a: usize) -> &DMatrix<Complex64> {
        &self.gd[k * self.links.n_aps + a]
    }
}
