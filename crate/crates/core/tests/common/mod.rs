#![allow(dead_code)]

use riscf::config::SystemConfig;
use riscf::rng::{purpose, substream};
use riscf::scenario::{generate_scenario, Scenario};
use riscf::system::{SystemModel, SystemOptions};

/// M=3, K=4, L=2, N=8, τ_p=2, ρ=20 dB.
pub fn small_config() -> SystemConfig {
    SystemConfig {
        num_aps: 3,
        num_ues: 4,
        antennas_per_ap: 2,
        ris_columns: 4,
        ris_rows: 2,
        pilot_symbols: 2,
        rho_db: 20.0,
        ..SystemConfig::default()
    }
}

pub fn scenario(config: &SystemConfig, seed: u64, index: u64) -> Scenario {
    generate_scenario(config, &mut substream(seed, &[purpose::SCENARIO, index])).unwrap()
}

pub fn model(config: &SystemConfig, seed: u64, index: u64, options: SystemOptions) -> SystemModel {
    SystemModel::build(config, &scenario(config, seed, index), options).unwrap()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}
