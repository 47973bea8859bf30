// SPDX-License-Identifier: Apache-2.0
//! CSV and JSON artifacts.
//!
//! Operand words are hex, zero-padded to `width` bits; output words to
//! `width + 1` bits with carry-out as the top bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::analysis::{EntropyRecord, PairClass, RocCurve, RocPoint};
use crate::error::{invalid, Error, Result};
use crate::netlist::{AdderInput, OutputWord};
use crate::timedsim::{CapturedTrace, TraceEntry};

fn hex_digits(bits: u32) -> usize {
    bits.div_ceil(4).max(1) as usize
}

pub fn operand_hex(value: u64, width: u32) -> String {
    format!("{:0w$x}", value, w = hex_digits(width))
}

pub fn output_hex(word: OutputWord, width: u32) -> String {
    format!("{:0w$x}", word, w = hex_digits(width + 1))
}

fn parse_hex(field: &str, what: &str) -> Result<u128> {
    u128::from_str_radix(field.trim(), 16)
        .map_err(|e| invalid(format!("bad {what} hex '{field}': {e}")))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().flexible(true).from_writer(file))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// `chip_id,trial_id,vector_index,a_hex,b_hex,captured_hex,golden_hex,is_error`
pub fn write_traces_csv(path: &Path, traces: &[CapturedTrace], width: u32) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "chip_id",
        "trial_id",
        "vector_index",
        "a_hex",
        "b_hex",
        "captured_hex",
        "golden_hex",
        "is_error",
    ])?;
    for trace in traces {
        let (chip, trial) = (trace.chip_id.to_string(), trace.trial_id.to_string());
        for (k, e) in trace.entries.iter().enumerate() {
            w.write_record([
                chip.as_str(),
                trial.as_str(),
                &k.to_string(),
                &operand_hex(e.input.a, width),
                &operand_hex(e.input.b, width),
                &output_hex(e.captured, width),
                &output_hex(e.golden, width),
                if e.is_error() { "1" } else { "0" },
            ])?;
        }
    }
    finish(w, path)
}

#[derive(Deserialize)]
struct TraceRow {
    chip_id: u32,
    trial_id: u32,
    vector_index: usize,
    a_hex: String,
    b_hex: String,
    captured_hex: String,
    golden_hex: String,
    is_error: u8,
}

/// Reads traces back, grouped by (chip, trial) in file order of first
/// appearance. Rows of one trace must carry consecutive vector indices.
pub fn read_traces_csv(path: &Path) -> Result<Vec<CapturedTrace>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut index: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut traces: Vec<CapturedTrace> = Vec::new();
    for row in reader.deserialize() {
        let row: TraceRow = row?;
        let slot = *index.entry((row.chip_id, row.trial_id)).or_insert_with(|| {
            traces.push(CapturedTrace {
                chip_id: row.chip_id,
                trial_id: row.trial_id,
                entries: Vec::new(),
            });
            traces.len() - 1
        });
        let trace = &mut traces[slot];
        if row.vector_index != trace.entries.len() {
            return Err(invalid(format!(
                "chip {} trial {}: expected vector_index {}, found {}",
                row.chip_id,
                row.trial_id,
                trace.entries.len(),
                row.vector_index
            )));
        }
        let entry = TraceEntry {
            input: AdderInput::new(
                parse_hex(&row.a_hex, "a")? as u64,
                parse_hex(&row.b_hex, "b")? as u64,
            ),
            captured: parse_hex(&row.captured_hex, "captured")?,
            golden: parse_hex(&row.golden_hex, "golden")?,
        };
        if entry.is_error() != (row.is_error == 1) {
            return Err(invalid(format!(
                "chip {} trial {} vector {}: is_error flag disagrees with words",
                row.chip_id, row.trial_id, row.vector_index
            )));
        }
        trace.entries.push(entry);
    }
    Ok(traces)
}

/// `class,distance,count`
pub fn write_histogram_csv(path: &Path, rows: &[(PairClass, u64, usize)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["class", "distance", "count"])?;
    for (class, d, c) in rows {
        w.write_record([class.name(), &d.to_string(), &c.to_string()])?;
    }
    finish(w, path)
}

pub fn read_histogram_csv(path: &Path) -> Result<Vec<(PairClass, u64, usize)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize::<(PairClass, u64, usize)>()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// `threshold,fpr,tpr` rows followed by an `auc,<value>` footer.
pub fn write_roc_csv(path: &Path, roc: &RocCurve) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["threshold", "fpr", "tpr"])?;
    for p in &roc.points {
        w.write_record([
            p.threshold.to_string(),
            p.fpr.to_string(),
            p.tpr.to_string(),
        ])?;
    }
    w.write_record(["auc".to_string(), roc.auc.to_string()])?;
    finish(w, path)
}

pub fn read_roc_csv(path: &Path) -> Result<RocCurve> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let mut points = Vec::new();
    let mut auc = None;
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).ok_or_else(|| invalid("short ROC row"));
        let num = |i: usize| -> Result<f64> {
            field(i)?
                .parse::<f64>()
                .map_err(|e| invalid(format!("bad ROC value: {e}")))
        };
        if field(0)? == "auc" {
            auc = Some(num(1)?);
        } else {
            let threshold = field(0)?
                .parse::<i64>()
                .map_err(|e| invalid(format!("bad threshold: {e}")))?;
            points.push(RocPoint {
                threshold,
                fpr: num(1)?,
                tpr: num(2)?,
            });
        }
    }
    let auc = auc.ok_or_else(|| invalid("ROC file has no auc footer"))?;
    Ok(RocCurve { points, auc })
}

/// `vector_index,a_hex,b_hex,entropy_bits,n_distinct_outputs`
pub fn write_entropy_csv(path: &Path, records: &[EntropyRecord], width: u32) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "vector_index",
        "a_hex",
        "b_hex",
        "entropy_bits",
        "n_distinct_outputs",
    ])?;
    for r in records {
        w.write_record([
            r.vector_index.to_string(),
            operand_hex(r.input.a, width),
            operand_hex(r.input.b, width),
            r.entropy_bits.to_string(),
            r.distinct_outputs().to_string(),
        ])?;
    }
    finish(w, path)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EntropyRow {
    pub vector_index: usize,
    pub a_hex: String,
    pub b_hex: String,
    pub entropy_bits: f64,
    pub n_distinct_outputs: usize,
}

pub fn read_entropy_csv(path: &Path) -> Result<Vec<EntropyRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub adder: String,
    pub error_rate: f64,
    pub auc: f64,
}

/// `adder,error_rate,auc`
pub fn write_auc_csv(path: &Path, rows: &[AucRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["adder", "error_rate", "auc"])?;
    for r in rows {
        w.write_record([r.adder.clone(), r.error_rate.to_string(), r.auc.to_string()])?;
    }
    finish(w, path)
}

pub fn read_auc_csv(path: &Path) -> Result<Vec<AucRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{build_roc, histogram};

    #[test]
    fn hex_padding_follows_width() {
        assert_eq!(operand_hex(0xFF, 32), "000000ff");
        assert_eq!(output_hex(1 << 32, 32), "100000000");
        assert_eq!(output_hex(0x1FF, 8), "1ff");
        assert_eq!(operand_hex(1, 1), "1");
        assert_eq!(output_hex(3, 1), "3");
    }

    #[test]
    fn trace_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traces.csv");
        let traces = vec![
            CapturedTrace {
                chip_id: 0,
                trial_id: 1,
                entries: vec![
                    TraceEntry {
                        input: AdderInput::new(0xFFFF_FFFF, 1),
                        captured: 0xFFFF_FFFF,
                        golden: 1 << 32,
                    },
                    TraceEntry {
                        input: AdderInput::new(7, 8),
                        captured: 15,
                        golden: 15,
                    },
                ],
            },
            CapturedTrace {
                chip_id: 3,
                trial_id: 0,
                entries: vec![TraceEntry {
                    input: AdderInput::new(1, 2),
                    captured: 3,
                    golden: 3,
                }],
            },
        ];
        write_traces_csv(&path, &traces, 32).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "chip_id,trial_id,vector_index,a_hex,b_hex,captured_hex,golden_hex,is_error\n"
        ));
        assert!(text.contains("0,1,0,ffffffff,00000001,0ffffffff,100000000,1\n"));
        assert_eq!(read_traces_csv(&path).unwrap(), traces);
    }

    #[test]
    fn roc_and_histogram_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let roc = build_roc(&[1, 2, 2, 5], &[2, 3, 9]).unwrap();
        let path = dir.path().join("roc.csv");
        write_roc_csv(&path, &roc).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("threshold,fpr,tpr\n-1,0,0\n"));
        assert!(text.trim_end().lines().last().unwrap().starts_with("auc,"));
        assert_eq!(read_roc_csv(&path).unwrap(), roc);

        let rows = histogram(&[1, 2, 2], &[4]);
        let hpath = dir.path().join("histogram.csv");
        write_histogram_csv(&hpath, &rows).unwrap();
        assert_eq!(read_histogram_csv(&hpath).unwrap(), rows);
        assert!(fs::read_to_string(&hpath).unwrap().contains("within,2,2\n"));
    }
}
