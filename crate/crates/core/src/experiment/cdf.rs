//! Empirical CDFs of per-UE spectral efficiency.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;

use super::csv::{read_records, Record};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    /// Sorted samples.
    pub values: Vec<f64>,
    /// `(i + 1) / n`.
    pub ordinates: Vec<f64>,
    /// 95%-likely value: order statistic `ceil(0.05 n)` (1-based).
    pub quantile_05: f64,
}

pub fn emit_cdf(samples: &[f64]) -> Result<Cdf> {
    if samples.is_empty() {
        return Err(Error::Argument("CDF of an empty sample".into()));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::Argument("CDF sample contains NaN".into()));
    }
    let mut values = samples.to_vec();
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let ordinates = (0..n).map(|i| (i + 1) as f64 / n as f64).collect();
    let idx = ((0.05 * n as f64).ceil() as usize).max(1) - 1;
    Ok(Cdf {
        quantile_05: values[idx],
        values,
        ordinates,
    })
}

/// Key of one CDF curve.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CurveKey {
    pub sweep_param: String,
    pub sweep_value: String,
    pub mode_combiner: String,
    pub mode_emi: String,
    pub mode_power: String,
    pub mode_ris: String,
}

impl CurveKey {
    pub fn of(r: &Record) -> Self {
        Self {
            sweep_param: r.sweep_param.clone(),
            sweep_value: r.sweep_value.clone(),
            mode_combiner: r.mode_combiner.clone(),
            mode_emi: r.mode_emi.clone(),
            mode_power: r.mode_power.clone(),
            mode_ris: r.mode_ris.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct CdfRow<'a> {
    sweep_param: &'a str,
    sweep_value: &'a str,
    mode_combiner: &'a str,
    mode_emi: &'a str,
    mode_power: &'a str,
    mode_ris: &'a str,
    se: f64,
    cdf: f64,
}

/// Groups records into curves, keeping the first-seen order of sweep values.
pub fn curves(records: &[Record]) -> Result<Vec<(CurveKey, Cdf)>> {
    let mut order: Vec<CurveKey> = Vec::new();
    let mut groups: BTreeMap<CurveKey, Vec<f64>> = BTreeMap::new();
    for r in records {
        let key = CurveKey::of(r);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r.se_closed);
    }
    order
        .into_iter()
        .map(|k| {
            let cdf = emit_cdf(&groups[&k])?;
            Ok((k, cdf))
        })
        .collect()
}

/// Writes every curve as long-format CSV: curve key, `se`, `cdf`.
pub fn write_curves<W: Write>(curves: &[(CurveKey, Cdf)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (key, cdf) in curves {
        for (&se, &p) in cdf.values.iter().zip(&cdf.ordinates) {
            w.serialize(CdfRow {
                sweep_param: &key.sweep_param,
                sweep_value: &key.sweep_value,
                mode_combiner: &key.mode_combiner,
                mode_emi: &key.mode_emi,
                mode_power: &key.mode_power,
                mode_ris: &key.mode_ris,
                se,
                cdf: p,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a results CSV and writes its CDF table; returns the curves.
pub fn cdf_from_csv<R: Read, W: Write>(input: R, output: W) -> Result<Vec<(CurveKey, Cdf)>> {
    let records = read_records(input)?;
    let curves = curves(&records)?;
    write_curves(&curves, output)?;
    Ok(curves)
}
