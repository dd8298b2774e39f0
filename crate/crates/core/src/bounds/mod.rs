//! Spectral-efficiency bounds.
//!
//! The lower bounds are the closed-form use-and-then-forget SINRs for
//! conjugate beamforming on the downlink and matched-filter combining at the
//! CPU on the uplink. Each denominator is exposed term by term through
//! [`DlTerms`] and [`UlTerms`]. Upper bounds are Monte-Carlo averages of the
//! instantaneous rate, see [`upper`].

pub mod upper;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::LinkState;
use crate::error::{Error, Result};
use crate::network::Network;

pub use upper::{se_ub_mc, upper_bounds, UbEstimate, UpperBounds};

/// `Σ_rc A[r,c] B[c,r]`, i.e. `tr(A B)` without forming the product.
pub fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..n {
        for c in 0..n {
            acc += a[(r, c)] * b[(c, r)];
        }
    }
    acc
}

/// Fourth-moment coefficient of a Ricean link seen through a filter:
///
/// `(β/(K+1))² |tr D|² + (β/(K+1))² K [ (aᴴDa) tr(Dᴴ) + (aᴴDᴴa) tr(D) ]`.
///
/// Vanishes for pure-LOS links.
pub fn delta(link: &LinkState, filter: &DMatrix<Complex64>) -> f64 {
    let scatter = link.scatter_power();
    if scatter == 0.0 {
        return 0.0;
    }
    let a = &link.steering;
    let tr = filter.trace();
    let quad = (a.adjoint() * filter * a)[(0, 0)];
    scatter * scatter * tr.norm_sqr()
        + scatter * link.specular_power() * 2.0 * (quad * tr.conj()).re
}

/// Downlink coefficient for user `k` at AP `a` seen through user `j`'s filter.
pub fn delta_dl(link_k_a: &LinkState, filter_j_a: &DMatrix<Complex64>) -> f64 {
    delta(link_k_a, filter_j_a)
}

/// Uplink coefficient for interferer `j` at AP `a` seen through user `k`'s filter.
pub fn delta_ul(link_j_a: &LinkState, filter_k_a: &DMatrix<Complex64>) -> f64 {
    delta(link_j_a, filter_k_a)
}

/// `Σ_{a≠b} t_a conj(t_b) = |Σ t|² − Σ |t|²`, real by construction.
fn off_diagonal_pairs(t: &[Complex64]) -> f64 {
    let total: Complex64 = t.iter().sum();
    total.norm_sqr() - t.iter().map(|v| v.norm_sqr()).sum::<f64>()
}

/// Downlink lower-bound SINR split into numerator and denominator terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlTerms {
    pub signal: f64,
    pub beamforming_uncertainty: f64,
    pub interference: f64,
    pub noise: f64,
    pub pilot_contamination: f64,
}

impl DlTerms {
    pub fn denominator(&self) -> f64 {
        self.beamforming_uncertainty + self.interference + self.noise + self.pilot_contamination
    }

    pub fn sinr(&self) -> Result<f64> {
        sinr_from(self.signal, self.denominator())
    }
}

/// Uplink lower-bound SINR split into numerator and denominator terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlTerms {
    pub signal: f64,
    pub beamforming_uncertainty: f64,
    pub interference: f64,
    pub noise: f64,
    pub pilot_contamination: f64,
}

impl UlTerms {
    pub fn denominator(&self) -> f64 {
        self.beamforming_uncertainty + self.interference + self.noise + self.pilot_contamination
    }

    pub fn sinr(&self) -> Result<f64> {
        sinr_from(self.signal, self.denominator())
    }
}

fn sinr_from(signal: f64, denominator: f64) -> Result<f64> {
    if signal == 0.0 {
        return Ok(0.0);
    }
    if !(denominator > 0.0) || !denominator.is_finite() {
        return Err(Error::Numerical(format!(
            "non-positive SINR denominator {denominator:e}"
        )));
    }
    Ok(signal / denominator)
}

pub fn dl_terms(net: &Network, k: usize) -> DlTerms {
    let est = &net.estimators;
    let pw = &net.powers;
    let serving_of = |j: usize| net.association.serving[j].iter().copied();
    let eta_k = est.train_powers[k];

    let amplitude: f64 = serving_of(k)
        .map(|a| pw.dl_coef(k, a).sqrt() * est.gamma(k, a))
        .sum();
    let beamforming_uncertainty: f64 = serving_of(k)
        .map(|a| {
            let g = est.gamma(k, a);
            pw.dl_coef(k, a)
                * (eta_k * delta_dl(net.links.get(k, a), &est.get(k, a).filter) - g * g)
        })
        .sum();

    let mut interference = 0.0;
    let mut pilot_contamination = 0.0;
    for j in 0..net.n_users() {
        let sqrt_eta_j = est.train_powers[j].sqrt();
        interference += sqrt_eta_j
            * serving_of(j)
                .map(|a| {
                    pw.dl_coef(j, a) * trace_product(net.gd(j, a), &est.get(k, a).covariance).re
                })
                .sum::<f64>();
        if j == k || est.pilot_overlap(k, j) == 0.0 {
            continue;
        }
        let mut diag = 0.0;
        let mut t = Vec::with_capacity(net.association.serving[j].len());
        for a in serving_of(j) {
            let coef = pw.dl_coef(j, a);
            let d = &est.get(j, a).filter;
            diag += coef * delta_dl(net.links.get(k, a), d);
            t.push(trace_product(d, &est.get(k, a).covariance) * coef.sqrt());
        }
        pilot_contamination += eta_k * (diag + off_diagonal_pairs(&t)) * est.pilot_overlap(k, j);
    }

    DlTerms {
        signal: amplitude * amplitude,
        beamforming_uncertainty,
        interference,
        noise: net.dl_noise,
        pilot_contamination,
    }
}

pub fn ul_terms(net: &Network, k: usize) -> UlTerms {
    let est = &net.estimators;
    let ul = &net.powers.ul;
    let serving: &[usize] = &net.association.serving[k];
    let eta_k = est.train_powers[k];

    let gamma_sum: f64 = serving.iter().map(|&a| est.gamma(k, a)).sum();
    let beamforming_uncertainty = ul[k]
        * serving
            .iter()
            .map(|&a| {
                let g = est.gamma(k, a);
                eta_k * delta_ul(net.links.get(k, a), &est.get(k, a).filter) - g * g
            })
            .sum::<f64>();

    let mut interference = 0.0;
    let mut pilot_contamination = 0.0;
    for j in 0..net.n_users() {
        interference += ul[j]
            * eta_k.sqrt()
            * serving
                .iter()
                .map(|&a| trace_product(net.gd(k, a), &est.get(j, a).covariance).re)
                .sum::<f64>();
        if j == k || est.pilot_overlap(j, k) == 0.0 {
            continue;
        }
        let mut diag = 0.0;
        let mut s = Vec::with_capacity(serving.len());
        for &a in serving {
            let d = &est.get(k, a).filter;
            diag += delta_ul(net.links.get(j, a), d);
            s.push(trace_product(&d.adjoint(), &est.get(j, a).covariance));
        }
        pilot_contamination +=
            ul[j] * est.train_powers[j] * (diag + off_diagonal_pairs(&s)) * est.pilot_overlap(j, k);
    }

    UlTerms {
        signal: ul[k] * gamma_sum * gamma_sum,
        beamforming_uncertainty,
        interference,
        noise: net.ul_noise * gamma_sum,
        pilot_contamination,
    }
}

pub fn sinr_dl_lb(net: &Network, k: usize) -> Result<f64> {
    dl_terms(net, k).sinr()
}

pub fn sinr_ul_lb(net: &Network, k: usize) -> Result<f64> {
    ul_terms(net, k).sinr()
}

/// `fraction · log2(1 + sinr)`, bits/s/Hz.
pub fn se_lb(sinr: f64, phase_fraction: f64) -> f64 {
    phase_fraction * (1.0 + sinr).log2()
}
