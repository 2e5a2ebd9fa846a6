//! Long-format results table.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// One row: a single UE in one scenario under one mode at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub sweep_param: String,
    pub sweep_value: String,
    pub scenario: usize,
    pub mode_combiner: String,
    pub mode_emi: String,
    pub mode_power: String,
    pub mode_ris: String,
    pub ue: usize,
    pub sinr_closed: f64,
    pub se_closed: f64,
    pub sinr_mc: Option<f64>,
    pub se_mc: Option<f64>,
    pub runtime_ms: Option<f64>,
}

pub fn write_records<W: Write>(records: &[Record], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<Record>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for r in rd.deserialize() {
        out.push(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let r = Record {
            sweep_param: "N".into(),
            sweep_value: "16".into(),
            scenario: 3,
            mode_combiner: "lsfd".into(),
            mode_emi: "on".into(),
            mode_power: "full".into(),
            mode_ris: "on".into(),
            ue: 2,
            sinr_closed: 1.25,
            se_closed: 1.1,
            sinr_mc: None,
            se_mc: Some(1.09),
            runtime_ms: None,
        };
        let mut buf = Vec::new();
        write_records(std::slice::from_ref(&r), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "sweep_param,sweep_value,scenario,mode_combiner,mode_emi,mode_power,mode_ris,ue,sinr_closed,se_closed,sinr_mc,se_mc,runtime_ms\n"
        ));
        assert_eq!(read_records(buf.as_slice()).unwrap(), vec![r]);
    }
}
