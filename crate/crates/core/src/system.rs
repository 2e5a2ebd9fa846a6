//! Assembly of every statistic the closed form and the oracle need for one scenario.

use crate::channel::{ChannelSampler, ChannelStatistics};
use crate::config::SystemConfig;
use crate::correlation::{
    gaussian_local_scattering, los_components, nlos_covariances, LosComponents, NlosCovariances, RisCorrelation,
};
use crate::emi::{emi_noise_covariance, sigma_r2_from_rho, EmiNoiseCovariance, EmiSampler};
use crate::error::Result;
use crate::estimation::{assign_pilots, estimation_statistics, EstimationStatistics};
use crate::linalg::{to_complex, CMat, CVec};
use crate::scenario::Scenario;
use crate::sinr::{build_sinr_terms, SinrTerms};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemOptions {
    pub emi: bool,
    pub ris: bool,
}

impl Default for SystemOptions {
    fn default() -> Self {
        Self { emi: true, ris: true }
    }
}

#[derive(Debug, Clone)]
pub struct SystemModel {
    pub config: SystemConfig,
    pub options: SystemOptions,
    pub ris: RisCorrelation,
    pub los: LosComponents,
    pub nlos: NlosCovariances,
    pub channels: ChannelStatistics,
    pub sigma_r2: f64,
    pub emi: Vec<EmiNoiseCovariance>,
    pub estimation: EstimationStatistics,
    pub terms: SinrTerms,
    pub sigma2: f64,
}

/// Direct AP–UE correlation matrices `R_mk`, `[m][k]`.
pub fn direct_correlations(scenario: &Scenario, config: &SystemConfig) -> Result<Vec<Vec<CMat>>> {
    (0..scenario.num_aps())
        .map(|m| {
            (0..scenario.num_ues())
                .map(|k| {
                    gaussian_local_scattering(
                        scenario.beta_ap_ue[m][k],
                        scenario.ap_ue_azimuth[m][k],
                        config.asd_rad(),
                        config.antennas_per_ap,
                        config.ap_antenna_spacing,
                    )
                })
                .collect()
        })
        .collect()
}

impl SystemModel {
    pub fn build(config: &SystemConfig, scenario: &Scenario, options: SystemOptions) -> Result<Self> {
        config.validate()?;
        let ris = RisCorrelation::from_config(config);
        let mut los = los_components(scenario, config, &ris);
        let mut nlos = nlos_covariances(&ris, scenario, config)?;
        if !options.ris {
            los.h_bar.iter_mut().for_each(|h| h.fill(crate::linalg::ZERO));
            los.z_bar.iter_mut().for_each(|z| z.fill(crate::linalg::ZERO));
            nlos.r_tilde_m.iter_mut().for_each(|r| r.fill(crate::linalg::ZERO));
            nlos.r_tilde_k.iter_mut().for_each(|r| r.fill(crate::linalg::ZERO));
        }
        let channels = ChannelStatistics::build(direct_correlations(scenario, config)?, &los, &nlos)?;
        let sigma_r2 = if options.emi && options.ris {
            sigma_r2_from_rho(config.rho_db, config.max_power_w, &scenario.beta_ap_ris)?
        } else {
            0.0
        };
        Self::assemble(config.clone(), options, ris, los, nlos, channels, sigma_r2)
    }

    fn assemble(
        config: SystemConfig,
        options: SystemOptions,
        ris: RisCorrelation,
        los: LosComponents,
        nlos: NlosCovariances,
        channels: ChannelStatistics,
        sigma_r2: f64,
    ) -> Result<Self> {
        let phi = los.phi();
        let r = to_complex(&ris.matrix);
        let emi = los
            .h_bar
            .iter()
            .zip(&nlos.r_tilde_m)
            .map(|(h, rt)| emi_noise_covariance(h, &phi, &r, rt, sigma_r2, ris.element_area))
            .collect::<Result<Vec<_>>>()?;
        let r_mm: Vec<CMat> = emi.iter().map(|e| e.r_mm.clone()).collect();
        let assignment = assign_pilots(config.num_ues, config.pilot_symbols)?;
        let sigma2 = config.noise_power_w();
        let estimation = estimation_statistics(&channels, &r_mm, &assignment, &config.pilot_powers(), sigma2)?;
        let terms = build_sinr_terms(&channels, &estimation, &r_mm)?;
        Ok(Self {
            config,
            options,
            ris,
            los,
            nlos,
            channels,
            sigma_r2,
            emi,
            estimation,
            terms,
            sigma2,
        })
    }

    /// Same channels with a different EMI power.
    pub fn with_emi_power(&self, sigma_r2: f64) -> Result<Self> {
        Self::assemble(
            self.config.clone(),
            self.options,
            self.ris.clone(),
            self.los.clone(),
            self.nlos.clone(),
            self.channels.clone(),
            sigma_r2,
        )
    }

    pub fn r_mm(&self) -> Vec<CMat> {
        self.emi.iter().map(|e| e.r_mm.clone()).collect()
    }

    pub fn full_power(&self) -> Vec<f64> {
        vec![self.config.max_power_w; self.config.num_ues]
    }

    pub fn sampler(&self) -> Result<ChannelSampler> {
        ChannelSampler::new(&self.channels.r_direct, &self.los, &self.nlos)
    }

    pub fn emi_sampler(&self) -> Result<EmiSampler> {
        EmiSampler::new(&to_complex(&self.ris.matrix), self.sigma_r2, self.ris.element_area)
    }

    /// `Σ_m tr(R^o_mk)` for every UE.
    pub fn trace_sums(&self) -> Vec<f64> {
        (0..self.config.num_ues)
            .map(|k| {
                (0..self.config.num_aps)
                    .map(|m| self.channels.r_o(m, k).trace().re)
                    .sum()
            })
            .collect()
    }

    pub fn ones(&self) -> Vec<CVec> {
        crate::sinr::all_ones(self.config.num_ues, self.config.num_aps)
    }
}
