//! Electromagnetic interference impinging on the RIS and its footprint at the APs.

use rand::Rng;

use crate::channel::block_trace_matrix;
use crate::config::db_to_linear;
use crate::error::{Error, Result};
use crate::linalg::{c, diag_congruence, psd_factor, sample_cn, CMat, CVec};

/// `σ_r² = p_max Σ_m β_m / (M ρ)`. An infinite `rho_db` gives zero.
pub fn sigma_r2_from_rho(rho_db: f64, p_max: f64, betas: &[f64]) -> Result<f64> {
    if betas.is_empty() {
        return Err(Error::Argument("EMI power needs at least one AP gain".into()));
    }
    if rho_db.is_nan() {
        return Err(Error::Argument("rho_db is NaN".into()));
    }
    if rho_db == f64::INFINITY {
        return Ok(0.0);
    }
    let rho = db_to_linear(rho_db);
    Ok(p_max * betas.iter().sum::<f64>() / (betas.len() as f64 * rho))
}

/// Covariance of the RIS-reflected EMI seen by one AP.
#[derive(Debug, Clone)]
pub struct EmiNoiseCovariance {
    /// `R_mm`
    pub r_mm: CMat,
    /// NLoS part `Q_m`.
    pub q_m: CMat,
}

/// `Φ` must be diagonal.
///
/// `R_mm = σ_r² A_r H̄ᴴ Φ R Φᴴ H̄ + Q_m` with
/// `[Q_m]_{ll'} = σ_r² A_r tr(Φ R Φᴴ [R̃_m]_{block(l',l)})`.
pub fn emi_noise_covariance(
    h_bar: &CMat,
    phi: &CMat,
    r: &CMat,
    r_tilde_m: &CMat,
    sigma_r2: f64,
    area: f64,
) -> Result<EmiNoiseCovariance> {
    let (n, l) = (h_bar.nrows(), h_bar.ncols());
    if phi.nrows() != n || r.nrows() != n {
        return Err(Error::Dimension("EMI covariance inputs disagree on N".into()));
    }
    let s = c(sigma_r2 * area, 0.0);
    let rotated = diag_congruence(&phi.diagonal(), r) * s;
    let q_m = block_trace_matrix(&rotated, r_tilde_m, l)?;
    let r_mm = h_bar.adjoint() * &rotated * h_bar + &q_m;
    Ok(EmiNoiseCovariance { r_mm, q_m })
}

/// Covariance of the projected pilot-phase disturbance, `τ_p R_mm + τ_p σ² I`.
pub fn pilot_noise_covariance(r_mm: &CMat, tau_p: usize, sigma2: f64) -> CMat {
    let l = r_mm.nrows();
    (r_mm + CMat::identity(l, l) * c(sigma2, 0.0)) * c(tau_p as f64, 0.0)
}

/// Draws `n ~ CN(0, A_r σ_r² R)`.
#[derive(Debug, Clone)]
pub struct EmiSampler {
    factor: CMat,
}

impl EmiSampler {
    pub fn new(r: &CMat, sigma_r2: f64, area: f64) -> Result<Self> {
        if sigma_r2 < 0.0 {
            return Err(Error::Argument(format!("negative EMI power {sigma_r2}")));
        }
        Ok(Self {
            factor: psd_factor(&(r * c(sigma_r2 * area, 0.0)))?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        sample_cn(&self.factor, rng)
    }

    /// `count` independent draws as the columns of an N×count matrix.
    pub fn sample_block<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> CMat {
        let n = self.factor.nrows();
        let mut out = CMat::zeros(n, count);
        for j in 0..count {
            out.set_column(j, &self.sample(rng));
        }
        out
    }
}
