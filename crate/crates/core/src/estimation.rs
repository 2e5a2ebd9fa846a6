//! Pilot assignment, pilot-phase observations and MMSE estimation of `o_mk`.

use std::f64::consts::PI;

use crate::channel::ChannelStatistics;
use crate::error::{Error, Result};
use crate::linalg::{c, cis, CMat, CVec, HpdSolver};

/// Orthogonal pilot reuse pattern: UE `k` sends pilot `k mod τ_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotAssignment {
    pub pilot: Vec<usize>,
    pub tau_p: usize,
}

pub fn assign_pilots(num_ues: usize, tau_p: usize) -> Result<PilotAssignment> {
    if tau_p == 0 {
        return Err(Error::Argument("need at least one pilot".into()));
    }
    Ok(PilotAssignment {
        pilot: (0..num_ues).map(|k| k % tau_p).collect(),
        tau_p,
    })
}

impl PilotAssignment {
    pub fn num_ues(&self) -> usize {
        self.pilot.len()
    }

    pub fn shares_pilot(&self, k: usize, i: usize) -> bool {
        self.pilot[k] == self.pilot[i]
    }

    /// `P_k`, in increasing UE order; always contains `k`.
    pub fn coset(&self, k: usize) -> Vec<usize> {
        (0..self.num_ues()).filter(|&i| self.shares_pilot(k, i)).collect()
    }

    /// UEs using pilot `t`.
    pub fn users_of(&self, t: usize) -> Vec<usize> {
        (0..self.num_ues()).filter(|&i| self.pilot[i] == t).collect()
    }
}

/// Unit-modulus DFT pilot book; column `t` is `φ_t`, with `φ_tᵀ φ_s* = τ_p δ_ts`.
pub fn pilot_book(tau_p: usize) -> CMat {
    CMat::from_fn(tau_p, tau_p, |i, t| cis(2.0 * PI * (i * t) as f64 / tau_p as f64))
}

/// Estimation statistics of one AP–UE pair.
#[derive(Debug, Clone)]
pub struct PairEstimation {
    /// `Ψ_mk`
    pub psi: CMat,
    /// `Ψ⁻¹ R^o_mk`
    pub psi_inv_r: CMat,
    /// `Ω_mk = R^o Ψ⁻¹ R^o`
    pub omega: CMat,
    /// Error covariance `C_mk = R^o − p̂ τ_p Ω`.
    pub error_cov: CMat,
    pub condition: f64,
}

impl PairEstimation {
    /// Filter `R^o Ψ⁻¹` applied to the pilot innovation.
    pub fn gain(&self) -> CMat {
        self.psi_inv_r.adjoint()
    }
}

/// `[m][k]` estimation statistics.
#[derive(Debug, Clone)]
pub struct EstimationStatistics {
    pub pairs: Vec<Vec<PairEstimation>>,
    pub assignment: PilotAssignment,
    pub pilot_powers: Vec<f64>,
}

impl EstimationStatistics {
    pub fn get(&self, m: usize, k: usize) -> &PairEstimation {
        &self.pairs[m][k]
    }
}

/// Builds `Ψ`, `Ω` and `C` for every AP–UE pair.
pub fn estimation_statistics(
    channels: &ChannelStatistics,
    r_mm: &[CMat],
    assignment: &PilotAssignment,
    pilot_powers: &[f64],
    sigma2: f64,
) -> Result<EstimationStatistics> {
    let (m_count, k_count) = (channels.num_aps(), channels.num_ues());
    if r_mm.len() != m_count || pilot_powers.len() != k_count || assignment.num_ues() != k_count {
        return Err(Error::Dimension("estimation inputs disagree on M or K".into()));
    }
    let tau = assignment.tau_p as f64;
    let mut pairs = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let l = r_mm[m].nrows();
        let mut row = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let mut psi = &r_mm[m] + CMat::identity(l, l) * c(sigma2, 0.0);
            for i in assignment.coset(k) {
                psi += channels.r_o(m, i) * c(pilot_powers[i] * tau, 0.0);
            }
            let solver = HpdSolver::new(&psi)?;
            let r_o = channels.r_o(m, k);
            let psi_inv_r = solver.solve(r_o);
            let omega = r_o * &psi_inv_r;
            let error_cov = r_o - &omega * c(pilot_powers[k] * tau, 0.0);
            row.push(PairEstimation {
                psi,
                psi_inv_r,
                omega,
                error_cov,
                condition: solver.condition,
            });
        }
        pairs.push(row);
    }
    Ok(EstimationStatistics {
        pairs,
        assignment: assignment.clone(),
        pilot_powers: pilot_powers.to_vec(),
    })
}

/// `ȳ_mk = Σ_{i∈P_k} √p̂_i τ_p ō_mi e^{jθ_i}`.
pub fn pilot_mean(
    channels: &ChannelStatistics,
    assignment: &PilotAssignment,
    pilot_powers: &[f64],
    theta: &[f64],
    m: usize,
    k: usize,
) -> CVec {
    let tau = assignment.tau_p as f64;
    let l = channels.o_bar(m, k).len();
    let mut y = CVec::zeros(l);
    for i in assignment.coset(k) {
        y += channels.o_bar(m, i) * (cis(theta[i]) * (pilot_powers[i].sqrt() * tau));
    }
    y
}

/// `ô = ō e^{jθ} + √p̂ R^o Ψ⁻¹ (y − ȳ)`.
pub fn mmse_estimate(o_bar: &CVec, theta: f64, pilot_power: f64, est: &PairEstimation, innovation: &CVec) -> CVec {
    o_bar * cis(theta) + est.psi_inv_r.ad_mul(innovation) * c(pilot_power.sqrt(), 0.0)
}

/// De-spread pilot observation `y_mk = Y_m φ_k*`, given the received block
/// `Y_m` (L×τ_p).
pub fn despread(received: &CMat, book: &CMat, pilot: usize) -> CVec {
    received * book.column(pilot).map(|z| z.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::AggregatedCovariance;
    use crate::linalg::{hermitian_eigenvalues, standard_cn};
    use crate::rng::{purpose, substream};

    #[test]
    fn round_robin_cosets() {
        let a = assign_pilots(5, 3).unwrap();
        assert_eq!(a.coset(0), vec![0, 3]);
        assert_eq!(a.coset(1), vec![1, 4]);
        assert_eq!(a.coset(2), vec![2]);
        assert_eq!(a.coset(3), vec![0, 3]);
        let b = assign_pilots(3, 3).unwrap();
        assert!((0..3).all(|k| b.coset(k) == vec![k]));
        assert_eq!(assign_pilots(1, 4).unwrap().coset(0), vec![0]);
        assert!(assign_pilots(2, 0).is_err());
    }

    #[test]
    fn pilot_book_is_orthogonal() {
        let p = pilot_book(4);
        let g = p.transpose() * p.map(|z| z.conj());
        assert!((g - CMat::identity(4, 4) * c(4.0, 0.0)).norm() < 1e-12);
    }

    fn toy_channels(m: usize, k: usize, l: usize, seed: u64) -> ChannelStatistics {
        let mut rng = substream(seed, &[purpose::TEST]);
        let pairs = (0..m)
            .map(|_| {
                (0..k)
                    .map(|_| {
                        let g = CMat::from_fn(l, l, |_, _| standard_cn(1, &mut rng)[0]);
                        AggregatedCovariance {
                            o_bar: standard_cn(l, &mut rng),
                            r_o: &g * g.adjoint(),
                            q1: CMat::zeros(l, l),
                            q2: CMat::zeros(l, l),
                        }
                    })
                    .collect()
            })
            .collect();
        ChannelStatistics {
            r_direct: vec![],
            pairs,
        }
    }

    #[test]
    fn decomposition_and_noise_floor() {
        let ch = toy_channels(2, 4, 3, 1);
        let a = assign_pilots(4, 2).unwrap();
        let r_mm = vec![CMat::zeros(3, 3), CMat::identity(3, 3) * c(0.1, 0.0)];
        let p = [0.2, 0.1, 0.3, 0.05];
        let sigma2 = 0.5;
        let est = estimation_statistics(&ch, &r_mm, &a, &p, sigma2).unwrap();
        for m in 0..2 {
            for k in 0..4 {
                let e = est.get(m, k);
                let back = &e.error_cov + &e.omega * c(p[k] * 2.0, 0.0);
                assert!((back - ch.r_o(m, k)).norm() < 1e-12 * ch.r_o(m, k).norm());
                assert!(hermitian_eigenvalues(&e.psi)[0] >= sigma2 - 1e-12);
                assert!(hermitian_eigenvalues(&e.error_cov)[0] >= -1e-10 * e.error_cov.norm());
            }
        }
    }

    #[test]
    fn prior_mean_when_no_innovation() {
        let ch = toy_channels(1, 1, 2, 2);
        let a = assign_pilots(1, 1).unwrap();
        let est = estimation_statistics(&ch, &[CMat::zeros(2, 2)], &a, &[1.0], 1.0).unwrap();
        let o = mmse_estimate(ch.o_bar(0, 0), 0.4, 1.0, est.get(0, 0), &CVec::zeros(2));
        assert!((o - ch.o_bar(0, 0) * cis(0.4)).norm() < 1e-15);
    }

    #[test]
    fn estimator_is_linear_in_innovation() {
        let ch = toy_channels(1, 1, 3, 3);
        let a = assign_pilots(1, 1).unwrap();
        let est = estimation_statistics(&ch, &[CMat::zeros(3, 3)], &a, &[0.7], 0.3).unwrap();
        let mut rng = substream(4, &[purpose::TEST]);
        let e = standard_cn(3, &mut rng);
        let base = ch.o_bar(0, 0) * cis(1.0);
        let d1 = mmse_estimate(ch.o_bar(0, 0), 1.0, 0.7, est.get(0, 0), &e) - &base;
        let d2 = mmse_estimate(ch.o_bar(0, 0), 1.0, 0.7, est.get(0, 0), &(&e * c(2.5, -1.0))) - &base;
        assert!((d1 * c(2.5, -1.0) - d2).norm() < 1e-12);
    }
}
