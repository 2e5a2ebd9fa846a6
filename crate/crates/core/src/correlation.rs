//! Spatial correlation matrices and deterministic line-of-sight components.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::{LosDirection, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{c, cis, CMat, CVec, RMat, ZERO};
use crate::quadrature::gaussian_expectation;
use crate::scenario::Scenario;

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Sinc-kernel correlation of a planar RIS in the y–z plane.
#[derive(Debug, Clone)]
pub struct RisCorrelation {
    pub matrix: RMat,
    /// Element positions `u_x`, m.
    pub positions: Vec<[f64; 3]>,
    /// `A_r`, m².
    pub element_area: f64,
}

/// `u_x = [0, mod(x, N_H)·d_H·λ, floor(x / N_H)·d_V·λ]`.
pub fn ris_element_positions(n_h: usize, n_v: usize, d_h: f64, d_v: f64, wavelength: f64) -> Vec<[f64; 3]> {
    (0..n_h * n_v)
        .map(|x| {
            [
                0.0,
                (x % n_h) as f64 * d_h * wavelength,
                (x / n_h) as f64 * d_v * wavelength,
            ]
        })
        .collect()
}

pub fn ris_sinc_correlation(n_h: usize, n_v: usize, d_h: f64, d_v: f64, wavelength: f64) -> RisCorrelation {
    let positions = ris_element_positions(n_h, n_v, d_h, d_v, wavelength);
    let n = positions.len();
    let matrix = RMat::from_fn(n, n, |i, j| {
        let (a, b) = (positions[i], positions[j]);
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        sinc(2.0 * d / wavelength)
    });
    RisCorrelation {
        matrix,
        positions,
        element_area: d_h * wavelength * d_v * wavelength,
    }
}

impl RisCorrelation {
    pub fn from_config(config: &SystemConfig) -> Self {
        ris_sinc_correlation(
            config.ris_columns,
            config.ris_rows,
            config.element_width,
            config.element_height,
            config.wavelength(),
        )
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Gaussian local scattering correlation of an `L`-antenna ULA:
/// `[R]_{ln} = gain · E{ exp(j2π d (l-n) sin(θ + δ)) }`, `δ ~ N(0, σ²)`.
///
/// The result is Toeplitz, so only the `L` distinct lags are integrated.
pub fn gaussian_local_scattering(gain: f64, theta: f64, sigma: f64, antennas: usize, spacing: f64) -> Result<CMat> {
    if !(sigma > 0.0) {
        return Err(Error::Argument(format!("angular spread must be positive, got {sigma}")));
    }
    if antennas == 0 {
        return Err(Error::Argument("need at least one antenna".into()));
    }
    let lags = gaussian_expectation(sigma, antennas, |delta, out| {
        let s = (theta + delta).sin();
        for (lag, v) in out.iter_mut().enumerate() {
            *v = cis(2.0 * PI * spacing * lag as f64 * s);
        }
    })?;
    Ok(CMat::from_fn(antennas, antennas, |l, n| {
        if l >= n {
            lags[l - n] * gain
        } else {
            lags[n - l].conj() * gain
        }
    }))
}

/// Deterministic LoS parts and the RIS phase configuration.
#[derive(Debug, Clone)]
pub struct LosComponents {
    /// `H̄_m`, N×L per AP.
    pub h_bar: Vec<CMat>,
    /// `z̄_k`, per UE.
    pub z_bar: Vec<CVec>,
    /// Diagonal of `Φ`.
    pub phase_shifts: CVec,
}

impl LosComponents {
    pub fn phi(&self) -> CMat {
        CMat::from_diagonal(&self.phase_shifts)
    }
}

pub fn beta_los(beta: f64, kappa: f64) -> f64 {
    kappa / (kappa + 1.0) * beta
}

pub fn beta_nlos(beta: f64, kappa: f64) -> f64 {
    beta / (kappa + 1.0)
}

pub fn los_components(scenario: &Scenario, config: &SystemConfig, ris: &RisCorrelation) -> LosComponents {
    let n = ris.len();
    let l = config.antennas_per_ap;
    let h_bar = scenario
        .beta_ap_ris
        .iter()
        .zip(&scenario.kappa_ap_ris)
        .zip(&scenario.ap_ris_azimuth)
        .map(|((&b, &kappa), &theta)| {
            let amp = beta_los(b, kappa).sqrt();
            CMat::from_fn(n, l, |row, _| {
                cis(2.0 * PI * config.element_width * row as f64 * theta.sin()) * amp
            })
        })
        .collect();
    let lambda = config.wavelength();
    let z_bar = scenario
        .beta_ue_ris
        .iter()
        .zip(&scenario.kappa_ue_ris)
        .zip(&scenario.ris_ue_direction)
        .map(|((&b, &kappa), dir)| {
            let amp = beta_los(b, kappa).sqrt();
            CVec::from_fn(n, |x, _| match config.los_direction {
                LosDirection::Ones => c(amp, 0.0),
                LosDirection::Planar => {
                    let u = ris.positions[x];
                    let proj = u[0] * dir[0] + u[1] * dir[1] + u[2] * dir[2];
                    cis(2.0 * PI * proj / lambda) * amp
                }
            })
        })
        .collect();
    LosComponents {
        h_bar,
        z_bar,
        phase_shifts: CVec::from_element(n, cis(config.ris_phase_rad)),
    }
}

/// NLoS covariances of the RIS links.
#[derive(Debug, Clone)]
pub struct NlosCovariances {
    /// `R̃_m`, NL×NL, of `vec(H̃_m)` (column-major).
    pub r_tilde_m: Vec<CMat>,
    /// `R̃_k`, N×N.
    pub r_tilde_k: Vec<CMat>,
    /// AP-side factor `R_m`, L×L.
    pub r_ap: Vec<CMat>,
    /// RIS-side factor `R_r`, N×N.
    pub r_ris: Vec<CMat>,
}

/// `(R_mᵀ ⊗ R_r) / (L N β)`.
pub fn kronecker_covariance(r_ap: &CMat, r_ris: &CMat, beta: f64) -> Result<CMat> {
    let (l, n) = (r_ap.nrows(), r_ris.nrows());
    if r_ap.ncols() != l || r_ris.ncols() != n {
        return Err(Error::Dimension("Kronecker factors must be square".into()));
    }
    if beta == 0.0 {
        return Ok(CMat::zeros(l * n, l * n));
    }
    Ok(r_ap.transpose().kronecker(r_ris) / c(l as f64 * n as f64 * beta, 0.0))
}

pub fn nlos_covariances(ris: &RisCorrelation, scenario: &Scenario, config: &SystemConfig) -> Result<NlosCovariances> {
    let n = ris.len();
    if config.num_elements() != n {
        return Err(Error::Dimension(format!(
            "config has {} RIS elements, correlation has {n}",
            config.num_elements()
        )));
    }
    let r = ris.matrix.map(|x| c(x, 0.0));
    let area = ris.element_area;
    let mut out = NlosCovariances {
        r_tilde_m: vec![],
        r_tilde_k: vec![],
        r_ap: vec![],
        r_ris: vec![],
    };
    for m in 0..scenario.num_aps() {
        let b = beta_nlos(scenario.beta_ap_ris[m], scenario.kappa_ap_ris[m]);
        let r_ap = gaussian_local_scattering(
            1.0,
            scenario.ap_ris_azimuth[m],
            config.asd_rad(),
            config.antennas_per_ap,
            config.ap_antenna_spacing,
        )?;
        let r_ris = &r * c(b * area, 0.0);
        out.r_tilde_m.push(kronecker_covariance(&r_ap, &r_ris, b)?);
        out.r_ap.push(r_ap);
        out.r_ris.push(r_ris);
    }
    for k in 0..scenario.num_ues() {
        let b = beta_nlos(scenario.beta_ue_ris[k], scenario.kappa_ue_ris[k]);
        out.r_tilde_k.push(&r * c(b * area, 0.0));
    }
    Ok(out)
}

/// Brute-force trapezoid evaluation of the local scattering integral over
/// `[-6σ, 6σ]`. Slow; used to check the quadrature.
pub fn gaussian_local_scattering_trapezoid(
    gain: f64,
    theta: f64,
    sigma: f64,
    antennas: usize,
    spacing: f64,
    points: usize,
) -> CMat {
    let (a, b) = (-6.0 * sigma, 6.0 * sigma);
    let h = (b - a) / (points - 1) as f64;
    let norm = 1.0 / ((2.0 * PI).sqrt() * sigma);
    CMat::from_fn(antennas, antennas, |l, n| {
        let lag = l as f64 - n as f64;
        let mut acc = ZERO;
        for i in 0..points {
            let d = a + h * i as f64;
            let w = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
            acc += cis(2.0 * PI * spacing * lag * (theta + d).sin()) * (w * (-d * d / (2.0 * sigma * sigma)).exp());
        }
        acc * Complex64::new(gain * norm * h, 0.0)
    })
}
