//! Closed-form UatF SINR with large-scale fading decoding, and spectral efficiency.

use num_complex::Complex64;

use crate::channel::ChannelStatistics;
use crate::error::{Error, Result};
use crate::estimation::{EstimationStatistics, PilotAssignment};
use crate::linalg::{c, trace_of_product, CMat, CVec, HpdSolver};

/// Relative size of the imaginary residue tolerated in provably real quantities.
const REAL_TOL: f64 = 1e-9;

fn real(z: Complex64, scale: f64, what: &str) -> Result<f64> {
    if z.im.abs() > REAL_TOL * (z.re.abs() + scale) {
        return Err(Error::Argument(format!(
            "{what} has imaginary part {:e} (real {:e})",
            z.im, z.re
        )));
    }
    Ok(z.re)
}

fn quad(a: &CMat, x: &CVec) -> Complex64 {
    x.dotc(&(a * x))
}

/// Per-AP ingredients of the closed-form SINR.
#[derive(Debug, Clone)]
pub struct SinrTerms {
    /// `z_mk`, indexed `[k][m]`.
    pub z: Vec<Vec<f64>>,
    /// `ξ_{m,ki}`, indexed `[k][i][m]`.
    pub xi: Vec<Vec<Vec<f64>>>,
    /// `ϖ_{m,ki} = tr(R^o_mi Ψ_mk⁻¹ R^o_mk)`, indexed `[k][i][m]`.
    pub varpi: Vec<Vec<Vec<Complex64>>>,
    /// `‖ō_mk‖²`, indexed `[k][m]`.
    pub j: Vec<Vec<f64>>,
    /// `w_mk`, the EMI term, indexed `[k][m]`.
    pub w: Vec<Vec<f64>>,
    pub assignment: PilotAssignment,
    pub pilot_powers: Vec<f64>,
}

pub fn build_sinr_terms(
    channels: &ChannelStatistics,
    estimation: &EstimationStatistics,
    r_mm: &[CMat],
) -> Result<SinrTerms> {
    let (m_count, k_count) = (channels.num_aps(), channels.num_ues());
    if r_mm.len() != m_count || estimation.pairs.len() != m_count {
        return Err(Error::Dimension("SINR terms: AP count mismatch".into()));
    }
    let assignment = &estimation.assignment;
    let p_hat = &estimation.pilot_powers;
    let tau = assignment.tau_p as f64;
    let mut z = vec![vec![0.0; m_count]; k_count];
    let mut j = vec![vec![0.0; m_count]; k_count];
    let mut w = vec![vec![0.0; m_count]; k_count];
    let mut xi = vec![vec![vec![0.0; m_count]; k_count]; k_count];
    let mut varpi = vec![vec![vec![c(0.0, 0.0); m_count]; k_count]; k_count];
    for m in 0..m_count {
        for k in 0..k_count {
            let est = estimation.get(m, k);
            let ob_k = channels.o_bar(m, k);
            let scale_k = p_hat[k] * tau;
            let jk = ob_k.norm_squared();
            let omega_norm = est.omega.norm();
            j[k][m] = jk;
            z[k][m] = scale_k * real(est.omega.trace(), omega_norm, "tr Ω")? + jk;
            w[k][m] = real(quad(&r_mm[m], ob_k), r_mm[m].norm() * jk, "ōᴴ R_mm ō")?
                + scale_k
                    * real(
                        trace_of_product(&est.omega, &r_mm[m]),
                        omega_norm * r_mm[m].norm(),
                        "tr(Ω R_mm)",
                    )?;
            for i in 0..k_count {
                let r_i = channels.r_o(m, i);
                let ob_i = channels.o_bar(m, i);
                let ri_norm = r_i.norm();
                xi[k][i][m] = scale_k * real(trace_of_product(r_i, &est.omega), ri_norm * omega_norm, "tr(R Ω)")?
                    + real(quad(r_i, ob_k), ri_norm * jk, "ōᴴ R ō")?
                    + scale_k * real(quad(&est.omega, ob_i), omega_norm * ob_i.norm_squared(), "ōᴴ Ω ō")?
                    + ob_k.dotc(ob_i).norm_sqr();
                varpi[k][i][m] = trace_of_product(r_i, &est.psi_inv_r);
            }
        }
    }
    Ok(SinrTerms {
        z,
        xi,
        varpi,
        j,
        w,
        assignment: assignment.clone(),
        pilot_powers: p_hat.clone(),
    })
}

impl SinrTerms {
    pub fn num_aps(&self) -> usize {
        self.z.first().map_or(0, Vec::len)
    }

    pub fn num_ues(&self) -> usize {
        self.z.len()
    }

    fn tau(&self) -> f64 {
        self.assignment.tau_p as f64
    }

    /// UEs other than `k` sharing its pilot, `P_k \ {k}`.
    pub fn contaminators(&self, k: usize) -> Vec<usize> {
        self.assignment.coset(k).into_iter().filter(|&i| i != k).collect()
    }

    /// `p̂_k p̂_i τ_p²`, the factor in front of coherent interference.
    pub fn coherent_scale(&self, k: usize, i: usize) -> f64 {
        self.pilot_powers[k] * self.pilot_powers[i] * self.tau() * self.tau()
    }

    /// `Γ_ki = p̂_k p̂_i τ_p² |aᴴ ϖ_ki|²` for the given weights.
    pub fn gamma(&self, k: usize, i: usize, a: &CVec) -> f64 {
        let s: Complex64 = a.iter().zip(&self.varpi[k][i]).map(|(am, v)| am.conj() * v).sum();
        self.coherent_scale(k, i) * s.norm_sqr()
    }

    /// Per-UE desired signal gain `|aᴴ z_k|²`.
    pub fn signal_gain(&self, k: usize, a: &CVec) -> f64 {
        let s: Complex64 = a.iter().zip(&self.z[k]).map(|(am, zm)| am.conj() * zm).sum();
        s.norm_sqr()
    }

    /// Closed-form moments of the UatF bound for UE `k`.
    pub fn moments(&self, k: usize) -> UatfMoments {
        let m = self.num_aps();
        let zc = CVec::from_fn(m, |i, _| c(self.z[k][i], 0.0));
        let t = (0..self.num_ues())
            .map(|i| {
                let mut t = CMat::from_diagonal(&CVec::from_fn(m, |n, _| c(self.xi[k][i][n], 0.0)));
                if i == k {
                    for n in 0..m {
                        t[(n, n)] -= c(self.j[k][n] * self.j[k][n], 0.0);
                    }
                    t += &zc * zc.transpose();
                } else if self.assignment.shares_pilot(k, i) {
                    let v = CVec::from_vec(self.varpi[k][i].clone());
                    t += &v * v.adjoint() * c(self.coherent_scale(k, i), 0.0);
                }
                t
            })
            .collect();
        UatfMoments {
            mean_kk: zc.clone(),
            t,
            d: CMat::from_diagonal(&zc),
            u: CMat::from_diagonal(&CVec::from_fn(m, |n, _| c(self.w[k][n], 0.0))),
        }
    }
}

/// SINR with weights `a_k` for every UE, including the EMI term.
pub fn sinr_lsfd_closed_form(terms: &SinrTerms, weights: &[CVec], powers: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    sinr_impl(terms, weights, powers, sigma2, true)
}

/// Same expression without the EMI term.
pub fn sinr_no_emi(terms: &SinrTerms, weights: &[CVec], powers: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    sinr_impl(terms, weights, powers, sigma2, false)
}

fn sinr_impl(terms: &SinrTerms, weights: &[CVec], powers: &[f64], sigma2: f64, emi: bool) -> Result<Vec<f64>> {
    let (m_count, k_count) = (terms.num_aps(), terms.num_ues());
    if weights.len() != k_count || powers.len() != k_count || weights.iter().any(|a| a.len() != m_count) {
        return Err(Error::Dimension("weights or powers do not match K and M".into()));
    }
    (0..k_count)
        .map(|k| {
            let a = &weights[k];
            let a2: Vec<f64> = a.iter().map(|x| x.norm_sqr()).collect();
            let num = powers[k] * terms.signal_gain(k, a);
            let mut den = 0.0;
            for i in 0..k_count {
                den += powers[i] * (0..m_count).map(|m| a2[m] * terms.xi[k][i][m]).sum::<f64>();
            }
            for i in terms.contaminators(k) {
                den += powers[i] * terms.gamma(k, i, a);
            }
            for m in 0..m_count {
                if emi {
                    den += a2[m] * terms.w[k][m];
                }
                den += a2[m] * (sigma2 * terms.z[k][m] - powers[k] * terms.j[k][m] * terms.j[k][m]);
            }
            if !(den > 0.0) {
                return Err(Error::NonPositiveDenominator(den, k));
            }
            Ok(num / den)
        })
        .collect()
}

/// SINR of plain summation at the CPU (every `a_mk = 1`), with EMI.
pub fn sinr_equal_weights(terms: &SinrTerms, powers: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    let (m_count, k_count) = (terms.num_aps(), terms.num_ues());
    if powers.len() != k_count {
        return Err(Error::Dimension("powers do not match K".into()));
    }
    (0..k_count)
        .map(|k| {
            let zsum: f64 = terms.z[k].iter().sum();
            let num = powers[k] * zsum * zsum;
            let mut den = 0.0;
            for i in 0..k_count {
                den += powers[i] * terms.xi[k][i].iter().sum::<f64>();
            }
            for i in terms.contaminators(k) {
                let v: Complex64 = terms.varpi[k][i].iter().sum();
                den += powers[i] * terms.coherent_scale(k, i) * v.norm_sqr();
            }
            for m in 0..m_count {
                den += terms.w[k][m] + sigma2 * terms.z[k][m] - powers[k] * terms.j[k][m] * terms.j[k][m];
            }
            if !(den > 0.0) {
                return Err(Error::NonPositiveDenominator(den, k));
            }
            Ok(num / den)
        })
        .collect()
}

/// Weights maximizing the closed-form SINR of every UE.
pub fn optimal_lsfd_weights(terms: &SinrTerms, powers: &[f64], sigma2: f64) -> Result<Vec<CVec>> {
    (0..terms.num_ues())
        .map(|k| optimal_weights_from_moments(&terms.moments(k), powers, k, sigma2))
        .collect()
}

/// Second-order statistics entering the UatF SINR of one UE: `E{u_kk}`,
/// `T_ki = E{u_ki u_kiᴴ}` for every `i`, `D_k` and the EMI matrix `U_k`.
#[derive(Debug, Clone)]
pub struct UatfMoments {
    pub mean_kk: CVec,
    pub t: Vec<CMat>,
    pub d: CMat,
    pub u: CMat,
}

impl UatfMoments {
    /// `Σ_i p_i T_ki − p_k E{u}E{u}ᴴ + σ² D + U`.
    pub fn interference_matrix(&self, powers: &[f64], k: usize, sigma2: f64) -> CMat {
        let mut s = &self.d * c(sigma2, 0.0) + &self.u;
        for (t, &p) in self.t.iter().zip(powers) {
            s += t * c(p, 0.0);
        }
        s - &self.mean_kk * self.mean_kk.adjoint() * c(powers[k], 0.0)
    }
}

/// UatF SINR for given moments and weights.
pub fn uatf_sinr(moments: &UatfMoments, a: &CVec, powers: &[f64], k: usize, sigma2: f64) -> Result<f64> {
    let num = powers[k] * a.dotc(&moments.mean_kk).norm_sqr();
    let den = quad(&moments.interference_matrix(powers, k, sigma2), a).re;
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator(den, k));
    }
    Ok(num / den)
}

/// `a = (interference matrix)⁻¹ E{u_kk}`.
pub fn optimal_weights_from_moments(moments: &UatfMoments, powers: &[f64], k: usize, sigma2: f64) -> Result<CVec> {
    let s = moments.interference_matrix(powers, k, sigma2);
    Ok(HpdSolver::new(&s)?.solve_vec(&moments.mean_kk))
}

/// Maximum SINR `p_k E{u}ᴴ S⁻¹ E{u}` attained by the optimal weights.
pub fn optimal_sinr_from_moments(moments: &UatfMoments, powers: &[f64], k: usize, sigma2: f64) -> Result<f64> {
    let s = moments.interference_matrix(powers, k, sigma2);
    let x = HpdSolver::new(&s)?.solve_vec(&moments.mean_kk);
    Ok(powers[k] * moments.mean_kk.dotc(&x).re)
}

/// `(τ_u / τ_c) log2(1 + γ)`.
pub fn spectral_efficiency(sinr: f64, prelog: f64) -> Result<f64> {
    if !(sinr >= 0.0) {
        return Err(Error::Argument(format!("SINR must be non-negative, got {sinr}")));
    }
    Ok(prelog * (1.0 + sinr).log2())
}

pub fn all_ones(num_ues: usize, num_aps: usize) -> Vec<CVec> {
    vec![CVec::from_element(num_aps, c(1.0, 0.0)); num_ues]
}
