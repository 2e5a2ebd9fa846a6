//! System configuration: dimensions, radio parameters and propagation constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How the deterministic UE→RIS line-of-sight vector is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LosDirection {
    /// Planar-array response of the RIS toward the UE.
    #[default]
    Planar,
    /// All-ones direction (debugging aid).
    Ones,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// M
    pub num_aps: usize,
    /// K
    pub num_ues: usize,
    /// L
    pub antennas_per_ap: usize,
    /// N_H, elements per RIS row.
    pub ris_columns: usize,
    /// N_V, elements per RIS column.
    pub ris_rows: usize,
    pub coherence_symbols: usize,
    pub pilot_symbols: usize,
    pub carrier_frequency_hz: f64,
    /// RIS element width, in wavelengths.
    pub element_width: f64,
    /// RIS element height, in wavelengths.
    pub element_height: f64,
    /// AP uniform linear array spacing, in wavelengths.
    pub ap_antenna_spacing: f64,
    pub max_power_w: f64,
    /// Pilot power per UE; defaults to `max_power_w` for everyone.
    pub pilot_power_w: Option<Vec<f64>>,
    pub noise_power_dbm: f64,
    /// Signal-to-EMI ratio. `inf` disables EMI.
    pub rho_db: f64,
    pub area_side_m: f64,
    pub ap_height_m: f64,
    pub ue_height_m: f64,
    pub ris_height_m: f64,
    /// Horizontal RIS position; the area centre when absent.
    pub ris_position: Option<[f64; 2]>,
    pub asd_deg: f64,
    pub alpha_fpc: f64,
    /// δ_f, share of the link-specific shadowing term.
    pub shadow_fraction: f64,
    /// δ_sf, shadow fading standard deviation.
    pub shadow_std_db: f64,
    pub decorrelation_distance_m: f64,
    /// Common phase shift applied by every RIS element.
    pub ris_phase_rad: f64,
    /// Apply the distance Rician law to UE–RIS links too (otherwise Rayleigh).
    pub ue_ris_rician: bool,
    pub los_direction: LosDirection,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_aps: 10,
            num_ues: 5,
            antennas_per_ap: 1,
            ris_columns: 4,
            ris_rows: 4,
            coherence_symbols: 200,
            pilot_symbols: 3,
            carrier_frequency_hz: 1.9e9,
            element_width: 0.5,
            element_height: 0.5,
            ap_antenna_spacing: 0.5,
            max_power_w: 0.2,
            pilot_power_w: None,
            noise_power_dbm: -94.0,
            rho_db: 20.0,
            area_side_m: 100.0,
            ap_height_m: 15.0,
            ue_height_m: 1.65,
            ris_height_m: 30.0,
            ris_position: None,
            asd_deg: 15.0,
            alpha_fpc: 0.6,
            shadow_fraction: 0.5,
            shadow_std_db: 8.0,
            decorrelation_distance_m: 100.0,
            ris_phase_rad: std::f64::consts::FRAC_PI_4,
            ue_ris_rician: true,
            los_direction: LosDirection::Planar,
            seed: 0,
        }
    }
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemConfig {
    pub fn num_elements(&self) -> usize {
        self.ris_columns * self.ris_rows
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    /// Physical element area `A_r`, m².
    pub fn element_area(&self) -> f64 {
        let lambda = self.wavelength();
        self.element_width * lambda * self.element_height * lambda
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watt(self.noise_power_dbm)
    }

    pub fn data_symbols(&self) -> usize {
        self.coherence_symbols - self.pilot_symbols
    }

    /// τ_u / τ_c.
    pub fn prelog(&self) -> f64 {
        self.data_symbols() as f64 / self.coherence_symbols as f64
    }

    pub fn pilot_powers(&self) -> Vec<f64> {
        match &self.pilot_power_w {
            Some(p) => p.clone(),
            None => vec![self.max_power_w; self.num_ues],
        }
    }

    pub fn asd_rad(&self) -> f64 {
        self.asd_deg.to_radians()
    }

    pub fn ris_horizontal_position(&self) -> [f64; 2] {
        self.ris_position
            .unwrap_or([self.area_side_m / 2.0, self.area_side_m / 2.0])
    }

    /// Sets `N_H = N_V = sqrt(n)`; `n` must be a perfect square.
    pub fn set_square_ris(&mut self, n: usize) -> Result<()> {
        let side = (n as f64).sqrt().round() as usize;
        if side * side != n || n == 0 {
            return Err(Error::Config(format!("N = {n} is not a positive perfect square")));
        }
        self.ris_columns = side;
        self.ris_rows = side;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, v) in [
            ("num_aps", self.num_aps),
            ("num_ues", self.num_ues),
            ("antennas_per_ap", self.antennas_per_ap),
            ("ris_columns", self.ris_columns),
            ("ris_rows", self.ris_rows),
            ("coherence_symbols", self.coherence_symbols),
            ("pilot_symbols", self.pilot_symbols),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.pilot_symbols > self.coherence_symbols {
            return bad("pilot_symbols exceeds coherence_symbols".into());
        }
        for (name, v) in [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("element_width", self.element_width),
            ("element_height", self.element_height),
            ("ap_antenna_spacing", self.ap_antenna_spacing),
            ("max_power_w", self.max_power_w),
            ("area_side_m", self.area_side_m),
            ("asd_deg", self.asd_deg),
            ("decorrelation_distance_m", self.decorrelation_distance_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [
            ("ap_height_m", self.ap_height_m),
            ("ue_height_m", self.ue_height_m),
            ("ris_height_m", self.ris_height_m),
            ("shadow_std_db", self.shadow_std_db),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative and finite, got {v}"));
            }
        }
        if !self.noise_power_dbm.is_finite() {
            return bad("noise_power_dbm must be finite".into());
        }
        if self.rho_db.is_nan() || self.rho_db == f64::NEG_INFINITY {
            return bad(format!("rho_db must be a number or +inf, got {}", self.rho_db));
        }
        if !(0.0..1.0).contains(&self.alpha_fpc) {
            return bad(format!("alpha_fpc must lie in [0, 1), got {}", self.alpha_fpc));
        }
        if !(0.0..=1.0).contains(&self.shadow_fraction) {
            return bad(format!(
                "shadow_fraction must lie in [0, 1], got {}",
                self.shadow_fraction
            ));
        }
        if !self.ris_phase_rad.is_finite() {
            return bad("ris_phase_rad must be finite".into());
        }
        if let Some(p) = &self.pilot_power_w {
            if p.len() != self.num_ues {
                return bad(format!(
                    "pilot_power_w has {} entries for {} UEs",
                    p.len(),
                    self.num_ues
                ));
            }
            if p.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return bad("pilot powers must be positive".into());
            }
        }
        if let Some([x, y]) = self.ris_position {
            let side = self.area_side_m;
            if !(0.0..=side).contains(&x) || !(0.0..=side).contains(&y) {
                return bad(format!("ris_position ({x}, {y}) lies outside the area"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SystemConfig::default();
        c.validate().unwrap();
        assert_eq!(c.num_elements(), 16);
        assert_eq!(c.data_symbols(), 197);
        assert!((c.wavelength() - 0.157_785).abs() < 1e-5);
        assert_eq!(c.ris_horizontal_position(), [50.0, 50.0]);
    }

    #[test]
    fn noise_default_is_minus_94_dbm() {
        let c = SystemConfig::default();
        assert!((c.noise_power_w() / 10f64.powf(-12.4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = SystemConfig {
            pilot_symbols: 300,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = SystemConfig {
            num_ues: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = SystemConfig {
            alpha_fpc: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = SystemConfig {
            max_power_w: -1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = SystemConfig {
            pilot_power_w: Some(vec![0.1]),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn infinite_rho_is_allowed() {
        let c = SystemConfig {
            rho_db: f64::INFINITY,
            ..Default::default()
        };
        c.validate().unwrap();
    }

    #[test]
    fn square_ris() {
        let mut c = SystemConfig::default();
        c.set_square_ris(144).unwrap();
        assert_eq!((c.ris_columns, c.ris_rows), (12, 12));
        assert!(c.set_square_ris(10).is_err());
    }
}
