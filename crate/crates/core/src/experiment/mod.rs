//! Batch experiments: parameter sweeps over random scenarios and modes.

pub mod cdf;
pub mod csv;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use self::cdf::{curves, write_curves};
use self::csv::{write_records, Record, CSV_SCHEMA_VERSION};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::oracle::{estimate_uatf_terms, sinr_from_estimates, UatfEstimates};
use crate::power::{fractional_power_control, maxmin_lsfd, maxmin_power_control, MaxMinOptions};
use crate::rng::{purpose, substream};
use crate::scenario::generate_scenario;
use crate::sinr::{optimal_lsfd_weights, sinr_lsfd_closed_form, spectral_efficiency};
use crate::system::{SystemModel, SystemOptions};

pub const SCHEMA_VERSION: u32 = 1;
/// Relative closed-form/oracle SE gap above which a warning is recorded.
pub const WARN_REL_GAP: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    M,
    K,
    L,
    N,
    #[serde(rename = "rho_db")]
    RhoDb,
    #[serde(rename = "d_fraction")]
    DFraction,
    #[serde(rename = "ris_position")]
    RisPosition,
    #[serde(rename = "alpha_fpc")]
    AlphaFpc,
    #[serde(rename = "tau_p")]
    TauP,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepParam::M => "M",
            SweepParam::K => "K",
            SweepParam::L => "L",
            SweepParam::N => "N",
            SweepParam::RhoDb => "rho_db",
            SweepParam::DFraction => "d_fraction",
            SweepParam::RisPosition => "ris_position",
            SweepParam::AlphaFpc => "alpha_fpc",
            SweepParam::TauP => "tau_p",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Scalar(f64),
    Pair([f64; 2]),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Scalar(v) => write!(f, "{v}"),
            SweepValue::Pair([x, y]) => write!(f, "{x};{y}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<SweepValue>,
}

fn as_count(v: SweepValue, param: SweepParam) -> Result<usize> {
    match v {
        SweepValue::Scalar(x) if x >= 1.0 && x.fract() == 0.0 && x <= 1e6 => Ok(x as usize),
        _ => Err(Error::Config(format!("{param} needs positive integers, got {v}"))),
    }
}

fn as_scalar(v: SweepValue, param: SweepParam) -> Result<f64> {
    match v {
        SweepValue::Scalar(x) => Ok(x),
        SweepValue::Pair(_) => Err(Error::Config(format!("{param} needs scalar values, got {v}"))),
    }
}

impl Sweep {
    /// Applies one sweep value to a copy of the base configuration.
    pub fn apply(&self, base: &SystemConfig, value: SweepValue) -> Result<SystemConfig> {
        let mut c = base.clone();
        let p = self.param;
        match p {
            SweepParam::M => c.num_aps = as_count(value, p)?,
            SweepParam::K => c.num_ues = as_count(value, p)?,
            SweepParam::L => c.antennas_per_ap = as_count(value, p)?,
            SweepParam::N => c.set_square_ris(as_count(value, p)?)?,
            SweepParam::TauP => c.pilot_symbols = as_count(value, p)?,
            SweepParam::RhoDb => c.rho_db = as_scalar(value, p)?,
            SweepParam::AlphaFpc => c.alpha_fpc = as_scalar(value, p)?,
            SweepParam::DFraction => {
                let d = as_scalar(value, p)?;
                c.element_width = d;
                c.element_height = d;
            }
            SweepParam::RisPosition => match value {
                SweepValue::Pair(xy) => c.ris_position = Some(xy),
                SweepValue::Scalar(_) => return Err(Error::Config("ris_position needs [x, y] pairs".into())),
            },
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    Mr,
    Lsfd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn is_on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerMode {
    Full,
    Fpc,
    Maxmin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub combiner: Combiner,
    pub emi: Switch,
    pub power: PowerMode,
    pub ris: Switch,
}

impl Default for Mode {
    fn default() -> Self {
        Self {
            combiner: Combiner::Lsfd,
            emi: Switch::On,
            power: PowerMode::Full,
            ris: Switch::On,
        }
    }
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_owned))
        .unwrap_or_default()
}

impl Mode {
    pub fn labels(&self) -> [String; 4] {
        [
            label(&self.combiner),
            label(&self.emi),
            label(&self.power),
            label(&self.ris),
        ]
    }

    pub fn slug(&self) -> String {
        let [c, e, p, r] = self.labels();
        format!("{c}-emi_{e}-{p}-ris_{r}")
    }

    fn options(&self) -> SystemOptions {
        SystemOptions {
            emi: self.emi.is_on(),
            ris: self.ris.is_on(),
        }
    }
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::default()]
}

/// A whole experiment as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub n_scenarios: usize,
    /// Oracle trials per scenario; zero skips the oracle.
    #[serde(default)]
    pub mc_trials: usize,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_scenarios == 0 {
            return Err(Error::Config("n_scenarios must be at least 1".into()));
        }
        if self.mc_trials == 1 {
            return Err(Error::Config("mc_trials must be 0 or at least 2".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("at least one mode is required".into()));
        }
        self.system.validate()?;
        for (_, cfg) in self.points()? {
            cfg.validate()?;
        }
        Ok(())
    }

    /// `(sweep value label, configuration)` for every sweep point.
    pub fn points(&self) -> Result<Vec<(String, SystemConfig)>> {
        match &self.sweep {
            None => Ok(vec![(String::new(), self.system.clone())]),
            Some(s) => {
                if s.values.is_empty() {
                    return Err(Error::Config("sweep has no values".into()));
                }
                s.values
                    .iter()
                    .map(|&v| Ok((v.to_string(), s.apply(&self.system, v)?)))
                    .collect()
            }
        }
    }

    pub fn sweep_param_label(&self) -> String {
        self.sweep.as_ref().map(|s| s.param.to_string()).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Overrides the spec's `mc_trials` when set.
    pub mc_trials: Option<usize>,
    /// Fill the `runtime_ms` column. Off by default so output is reproducible.
    pub timings: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Warning {
    pub sweep_value: String,
    pub scenario: usize,
    pub mode: String,
    pub ue: usize,
    pub se_closed: f64,
    pub se_mc: f64,
    pub rel_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub sweep_value: String,
    pub mode: String,
    pub samples: usize,
    pub mean_se: f64,
    pub quantile_05_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub csv_schema_version: u32,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub sweep_param: String,
    pub n_scenarios: usize,
    pub mc_trials: usize,
    pub records: usize,
    pub warnings: Vec<Warning>,
    pub summaries: Vec<Summary>,
    pub cdf_files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<Record>,
    pub manifest: Manifest,
}

fn task_seed(seed: u64, point: usize, scenario: usize, opts: SystemOptions) -> u64 {
    let flags = (opts.emi as u64) | ((opts.ris as u64) << 1);
    substream(seed, &[purpose::ORACLE, point as u64, scenario as u64, flags]).random()
}

fn evaluate_mode(
    model: &SystemModel,
    mode: &Mode,
    oracle: Option<&UatfEstimates>,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let cfg = &model.config;
    let (terms, sigma2, p_max) = (&model.terms, model.sigma2, cfg.max_power_w);
    let full = model.full_power();
    let (powers, weights): (Vec<f64>, Vec<CVec>) = match (mode.power, mode.combiner) {
        (PowerMode::Full, Combiner::Mr) => (full, model.ones()),
        (PowerMode::Full, Combiner::Lsfd) => {
            let w = optimal_lsfd_weights(terms, &full, sigma2)?;
            (full, w)
        }
        (PowerMode::Fpc, comb) => {
            let p = fractional_power_control(&model.trace_sums(), cfg.alpha_fpc, p_max)?.powers;
            let w = match comb {
                Combiner::Mr => model.ones(),
                Combiner::Lsfd => optimal_lsfd_weights(terms, &p, sigma2)?,
            };
            (p, w)
        }
        (PowerMode::Maxmin, Combiner::Mr) => {
            let w = model.ones();
            (
                maxmin_power_control(terms, &w, p_max, sigma2, MaxMinOptions::default().epsilon)?.powers,
                w,
            )
        }
        (PowerMode::Maxmin, Combiner::Lsfd) => {
            let (alloc, w) = maxmin_lsfd(terms, p_max, sigma2, MaxMinOptions::default())?;
            (alloc.powers, w)
        }
    };
    let closed = sinr_lsfd_closed_form(terms, &weights, &powers, sigma2)?;
    let mc = oracle
        .map(|est| sinr_from_estimates(est, &weights, &powers, sigma2))
        .transpose()?;
    Ok((closed, mc))
}

struct TaskResult {
    point: usize,
    scenario: usize,
    rows: Vec<Record>,
}

/// Runs every sweep point × scenario × mode. Rows are ordered by sweep
/// point, scenario, mode and UE regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec, options: &RunOptions) -> Result<RunOutput> {
    spec.validate()?;
    let points = spec.points()?;
    let mc_trials = options.mc_trials.unwrap_or(spec.mc_trials);
    if mc_trials == 1 {
        return Err(Error::Argument("mc_trials must be 0 or at least 2".into()));
    }
    let sweep_param = spec.sweep_param_label();
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.n_scenarios).map(move |s| (p, s)))
        .collect();
    let mut results: Vec<TaskResult> = tasks
        .par_iter()
        .map(|&(pi, si)| -> Result<TaskResult> {
            let (value, cfg) = &points[pi];
            let scenario = generate_scenario(cfg, &mut substream(options.seed, &[purpose::SCENARIO, si as u64]))?;
            let mut models: Vec<(SystemOptions, SystemModel, Option<UatfEstimates>)> = Vec::new();
            let mut rows = Vec::new();
            for mode in &spec.modes {
                let started = Instant::now();
                let opts = mode.options();
                if !models.iter().any(|(o, ..)| *o == opts) {
                    let model = SystemModel::build(cfg, &scenario, opts)?;
                    let est = if mc_trials > 0 {
                        Some(estimate_uatf_terms(
                            &model,
                            mc_trials,
                            task_seed(options.seed, pi, si, opts),
                        )?)
                    } else {
                        None
                    };
                    models.push((opts, model, est));
                }
                let (_, model, est) = models.iter().find(|(o, ..)| *o == opts).expect("model cached above");
                let (closed, mc) = evaluate_mode(model, mode, est.as_ref())?;
                let elapsed = started.elapsed().as_secs_f64() * 1e3;
                let prelog = cfg.prelog();
                let [mc_label, emi_label, power_label, ris_label] = mode.labels();
                for (ue, &s) in closed.iter().enumerate() {
                    let sinr_mc = mc.as_ref().map(|v| v[ue]);
                    rows.push(Record {
                        sweep_param: sweep_param.clone(),
                        sweep_value: value.clone(),
                        scenario: si,
                        mode_combiner: mc_label.clone(),
                        mode_emi: emi_label.clone(),
                        mode_power: power_label.clone(),
                        mode_ris: ris_label.clone(),
                        ue,
                        sinr_closed: s,
                        se_closed: spectral_efficiency(s, prelog)?,
                        sinr_mc,
                        se_mc: sinr_mc.map(|g| spectral_efficiency(g.max(0.0), prelog)).transpose()?,
                        runtime_ms: options.timings.then_some(elapsed),
                    });
                }
            }
            Ok(TaskResult {
                point: pi,
                scenario: si,
                rows,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|t| (t.point, t.scenario));
    let records: Vec<Record> = results.into_iter().flat_map(|t| t.rows).collect();

    let warnings = records
        .iter()
        .filter_map(|r| {
            let mc = r.se_mc?;
            let gap = (r.se_closed - mc).abs() / r.se_closed.abs().max(f64::MIN_POSITIVE);
            (gap > WARN_REL_GAP).then(|| Warning {
                sweep_value: r.sweep_value.clone(),
                scenario: r.scenario,
                mode: format!(
                    "{}-emi_{}-{}-ris_{}",
                    r.mode_combiner, r.mode_emi, r.mode_power, r.mode_ris
                ),
                ue: r.ue,
                se_closed: r.se_closed,
                se_mc: mc,
                rel_gap: gap,
            })
        })
        .collect();
    let summaries = curves(&records)?
        .into_iter()
        .map(|(key, cdf)| Summary {
            sweep_value: key.sweep_value.clone(),
            mode: format!(
                "{}-emi_{}-{}-ris_{}",
                key.mode_combiner, key.mode_emi, key.mode_power, key.mode_ris
            ),
            samples: cdf.values.len(),
            mean_se: cdf.values.iter().sum::<f64>() / cdf.values.len() as f64,
            quantile_05_se: cdf.quantile_05,
        })
        .collect();
    let canonical = toml::to_string(spec).map_err(|e| Error::Parse(e.to_string()))?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        csv_schema_version: CSV_SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: options.seed,
        config_sha256: Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect(),
        sweep_param,
        n_scenarios: spec.n_scenarios,
        mc_trials,
        records: records.len(),
        warnings,
        summaries,
        cdf_files: Vec::new(),
    };
    Ok(RunOutput { records, manifest })
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes `results.csv`, one `cdf_*.csv` per curve and `manifest.json` into `dir`.
pub fn write_outputs(output: &mut RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let results = dir.join("results.csv");
    write_records(&output.records, std::fs::File::create(&results)?)?;
    written.push(results);
    output.manifest.cdf_files.clear();
    for (idx, (key, cdf)) in curves(&output.records)?.into_iter().enumerate() {
        let value = if key.sweep_value.is_empty() {
            "base".to_string()
        } else {
            file_safe(&key.sweep_value)
        };
        let name = format!(
            "cdf_{idx:03}_{value}_{}-emi_{}-{}-ris_{}.csv",
            key.mode_combiner, key.mode_emi, key.mode_power, key.mode_ris
        );
        let path = dir.join(&name);
        write_curves(&[(key, cdf)], std::fs::File::create(&path)?)?;
        output.manifest.cdf_files.push(name);
        written.push(path);
    }
    let manifest = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&output.manifest)?;
    text.push('\n');
    std::fs::write(&manifest, text)?;
    written.push(manifest);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
n_scenarios = 2

[system]
num_aps = 3
num_ues = 2

[sweep]
param = "rho_db"
values = [10.0, inf]

[[modes]]
combiner = "mr"
emi = "on"
power = "full"
ris = "on"
"#;

    #[test]
    fn parses_and_expands_sweep() {
        let spec = ExperimentSpec::from_toml_str(MINIMAL).unwrap();
        let pts = spec.points().unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].0, "10");
        assert_eq!(pts[1].0, "inf");
        assert_eq!(pts[1].1.rho_db, f64::INFINITY);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(
            ExperimentSpec::from_toml_str(&MINIMAL.replace("n_scenarios = 2", "n_scenarios = 2\nfoo = 1")).is_err()
        );
        assert!(ExperimentSpec::from_toml_str(&MINIMAL.replace("num_aps = 3", "num_ap = 3")).is_err());
        assert!(ExperimentSpec::from_toml_str(&MINIMAL.replace("\"rho_db\"", "\"bandwidth\"")).is_err());
        assert!(ExperimentSpec::from_toml_str(&MINIMAL.replace("schema_version = 1", "schema_version = 7")).is_err());
        assert!(ExperimentSpec::from_toml_str(&MINIMAL.replace("n_scenarios = 2", "n_scenarios = 0")).is_err());
        let bad_n = MINIMAL
            .replace("\"rho_db\"", "\"N\"")
            .replace("[10.0, inf]", "[16, 10]");
        assert!(matches!(ExperimentSpec::from_toml_str(&bad_n), Err(Error::Config(_))));
    }

    #[test]
    fn ris_position_pairs() {
        let text = MINIMAL
            .replace("\"rho_db\"", "\"ris_position\"")
            .replace("[10.0, inf]", "[[50.0, 50.0], [10.0, 90.0]]");
        let spec = ExperimentSpec::from_toml_str(&text).unwrap();
        let pts = spec.points().unwrap();
        assert_eq!(pts[1].0, "10;90");
        assert_eq!(pts[1].1.ris_position, Some([10.0, 90.0]));
    }

    #[test]
    fn small_run_has_expected_rows() {
        let spec = ExperimentSpec::from_toml_str(MINIMAL).unwrap();
        let out = run_experiment(
            &spec,
            &RunOptions {
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.records.len(), 2 * 2 * 2);
        assert!(out
            .records
            .iter()
            .all(|r| r.se_closed > 0.0 && r.sinr_mc.is_none() && r.runtime_ms.is_none()));
        let keys: Vec<_> = out
            .records
            .iter()
            .map(|r| (r.sweep_value.clone(), r.scenario, r.ue))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_by_key(|k| (k.0 != "10", k.1, k.2));
        assert_eq!(keys, sorted);
    }
}
