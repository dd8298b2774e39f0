//! User–AP association and power control.

use crate::config::{AssociationMode, DlPolicy, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::EstimatorSet;

/// Serving sets in both directions. `serving[k]` (APs of user `k`) and
/// `served[a]` (users of AP `a`) are transposes of each other, both sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationMap {
    pub serving: Vec<Vec<usize>>,
    pub served: Vec<Vec<usize>>,
    n_aps: usize,
    mask: Vec<bool>,
}

impl AssociationMap {
    pub fn from_serving(serving: Vec<Vec<usize>>, n_aps: usize) -> Result<Self> {
        let mut served = vec![Vec::new(); n_aps];
        let mut mask = vec![false; serving.len() * n_aps];
        let mut serving = serving;
        for (k, set) in serving.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            for &a in set.iter() {
                if a >= n_aps {
                    return Err(Error::Config(format!("AP index {a} out of range")));
                }
                served[a].push(k);
                mask[k * n_aps + a] = true;
            }
        }
        Ok(Self {
            serving,
            served,
            n_aps,
            mask,
        })
    }

    pub fn serves(&self, a: usize, k: usize) -> bool {
        self.mask[k * self.n_aps + a]
    }

    pub fn n_users(&self) -> usize {
        self.serving.len()
    }

    pub fn n_aps(&self) -> usize {
        self.n_aps
    }
}

/// CF: every AP serves every user. UC: each user keeps its `serving_aps`
/// largest-β APs, ties going to the lower AP index.
pub fn associate(mode: AssociationMode, betas: &[Vec<f64>]) -> Result<AssociationMap> {
    let n_aps = betas.first().map_or(0, Vec::len);
    let serving = match mode {
        AssociationMode::Cf => betas.iter().map(|_| (0..n_aps).collect()).collect(),
        AssociationMode::Uc { serving_aps } => {
            if serving_aps == 0 || serving_aps > n_aps {
                return Err(Error::Config(format!(
                    "serving_aps must lie in 1..={n_aps}, got {serving_aps}"
                )));
            }
            betas
                .iter()
                .map(|row| {
                    let mut idx: Vec<usize> = (0..n_aps).collect();
                    idx.sort_by(|&i, &j| row[j].total_cmp(&row[i]).then(i.cmp(&j)));
                    idx.truncate(serving_aps);
                    idx
                })
                .collect()
        }
    };
    AssociationMap::from_serving(serving, n_aps)
}

/// Proportional split of `budget` by γ. All-zero γ yields zero power.
pub fn ppa(gammas: &[f64], budget: f64) -> Vec<f64> {
    let total: f64 = gammas.iter().sum();
    if !(total > 0.0) {
        log::debug!("PPA: every served user has zero estimate power; AP stays silent");
        return vec![0.0; gammas.len()];
    }
    gammas.iter().map(|g| budget * g / total).collect()
}

/// Result of waterfilling over a set of noise levels.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFill {
    pub level: f64,
    pub powers: Vec<f64>,
}

/// Solves `Σ (ν − L_i)⁺ = budget` exactly by sorting the levels.
///
/// Infinite levels are never filled. With no finite level the water level is
/// infinite and every power is zero.
pub fn water_fill(levels: &[f64], budget: f64) -> WaterFill {
    let mut finite: Vec<f64> = levels.iter().copied().filter(|l| l.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    if finite.is_empty() || !(budget > 0.0) {
        return WaterFill {
            level: if finite.is_empty() {
                f64::INFINITY
            } else {
                finite[0]
            },
            powers: vec![0.0; levels.len()],
        };
    }
    let mut active = finite.len();
    let mut prefix = 0.0;
    for (m, &l) in finite.iter().enumerate() {
        prefix += l;
        let candidate = (budget + prefix) / (m + 1) as f64;
        if finite.get(m + 1).is_none_or(|&next| candidate <= next) {
            active = m + 1;
            break;
        }
    }
    // The powers are differences of nearly equal numbers whenever the level
    // dwarfs the budget, so the level is carried in double-double precision.
    let (mut hi, mut lo) = (budget, 0.0);
    for &l in &finite[..active] {
        let (s, e) = two_sum(hi, l);
        hi = s;
        lo += e;
    }
    let n = active as f64;
    let q = hi / n;
    let rest = ((-q).mul_add(n, hi) + lo) / n;
    let (level, level_lo) = two_sum(q, rest);
    let powers = levels
        .iter()
        .map(|&l| {
            if l >= level {
                return 0.0;
            }
            let (d, e) = two_sum(level, -l);
            (d + (e + level_lo)).max(0.0)
        })
        .collect();
    WaterFill { level, powers }
}

/// Error-free transformation `a + b = s + e`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Waterfilling with noise levels `L = σ_z² / γ`; users with γ = 0 get nothing.
pub fn wfpc(gammas: &[f64], noise_var: f64, budget: f64) -> Vec<f64> {
    let levels: Vec<f64> = gammas
        .iter()
        .map(|&g| {
            if g > 0.0 {
                noise_var / g
            } else {
                f64::INFINITY
            }
        })
        .collect();
    water_fill(&levels, budget).powers
}

/// Fractional power control `min(P_max, P0 ζ^{−α})` with
/// `ζ = sqrt(Σ tr²(G_{k,a}))` over the user's serving APs. Powers in mW.
pub fn fpc(covariance_traces: &[f64], p0_mw: f64, alpha: f64, p_max: f64) -> f64 {
    let zeta = covariance_traces.iter().map(|t| t * t).sum::<f64>().sqrt();
    if !(zeta > 0.0) {
        log::debug!("FPC: zero channel gain, transmitting at P_max");
        return p_max;
    }
    p_max.min(p0_mw * zeta.powf(-alpha))
}

/// Downlink and uplink powers of a drop.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    n_aps: usize,
    /// Transmit power `P_{k,a}` from AP `a` to user `k`, mW.
    pub dl_power: Vec<f64>,
    /// Uplink transmit power of each user, mW.
    pub ul: Vec<f64>,
    /// `η_{k,a} = P_{k,a} / γ_{k,a}`.
    dl_coef: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(n_aps: usize, dl_power: Vec<f64>, ul: Vec<f64>, est: &EstimatorSet) -> Self {
        let dl_coef = dl_power
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let g = est.gamma(i / n_aps, i % n_aps);
                if p > 0.0 && g > 0.0 {
                    p / g
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            n_aps,
            dl_power,
            ul,
            dl_coef,
        }
    }

    pub fn dl_power(&self, k: usize, a: usize) -> f64 {
        self.dl_power[k * self.n_aps + a]
    }

    /// Downlink power coefficient η_{k,a}.
    pub fn dl_coef(&self, k: usize, a: usize) -> f64 {
        self.dl_coef[k * self.n_aps + a]
    }

    /// Same allocation with every downlink power scaled by `factor`.
    pub fn scaled_dl(&self, factor: f64) -> Self {
        Self {
            n_aps: self.n_aps,
            dl_power: self.dl_power.iter().map(|p| p * factor).collect(),
            ul: self.ul.clone(),
            dl_coef: self.dl_coef.iter().map(|p| p * factor).collect(),
        }
    }
}

/// Applies the configured downlink policy at every AP and FPC on the uplink.
pub fn allocate(cfg: &SystemConfig, est: &EstimatorSet, assoc: &AssociationMap) -> PowerAllocation {
    let (n_users, n_aps) = (est.n_users, est.n_aps);
    let mut dl = vec![0.0; n_users * n_aps];
    for (a, users) in assoc.served.iter().enumerate() {
        let gammas: Vec<f64> = users.iter().map(|&k| est.gamma(k, a)).collect();
        let powers = match cfg.dl_policy {
            DlPolicy::Ppa => ppa(&gammas, cfg.dl_power_budget),
            DlPolicy::Wfpc => wfpc(&gammas, cfg.noise_power(), cfg.dl_power_budget),
        };
        for (&k, p) in users.iter().zip(powers) {
            dl[k * n_aps + a] = p;
        }
    }
    let p0 = cfg.fpc_p0_mw();
    let ul = assoc
        .serving
        .iter()
        .enumerate()
        .map(|(k, aps)| {
            let traces: Vec<f64> = aps
                .iter()
                .map(|&a| est.get(k, a).covariance.trace().re)
                .collect();
            fpc(&traces, p0, cfg.fpc_alpha, cfg.ul_max_power)
        })
        .collect();
    PowerAllocation::new(n_aps, dl, ul, est)
}
