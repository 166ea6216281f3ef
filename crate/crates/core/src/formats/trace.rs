//! Simulation traces as CSV and the heat-map report derived from them.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::compiler::{ContextCell, HeatMap};
use crate::models::ManeuverKind;

pub const TRACE_COLUMNS: [&str; 9] = [
    "t",
    "blinking",
    "selected_frame",
    "decision_kind",
    "target_lane",
    "ego_x",
    "ego_lane",
    "step_cost",
    "switched",
];

/// One trace row; columns in [`TRACE_COLUMNS`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub blinking: bool,
    pub selected_frame: String,
    pub decision_kind: ManeuverKind,
    pub target_lane: usize,
    pub ego_x: f64,
    pub ego_lane: usize,
    pub step_cost: f64,
    pub switched: bool,
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(TRACE_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `(line, reason)` for a row that could not be parsed.
pub type SkippedRow = (u64, String);

/// Parsed rows plus every row that was skipped.
pub fn read_trace<R: Read>(input: R) -> csv::Result<(Vec<TraceRow>, Vec<SkippedRow>)> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_COLUMNS {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected trace header `{}`", header.join(",")),
        )));
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for rec in r.deserialize::<TraceRow>() {
        match rec {
            Ok(row) => rows.push(row),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                skipped.push((line, e.to_string()));
            }
        }
    }
    Ok((rows, skipped))
}

/// `cell,count,frequency` with one row per heat-map cell.
pub fn write_heatmap_report<W: Write>(out: W, heatmap: &HeatMap) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "count", "frequency"])?;
    let total = heatmap.total() as f64;
    for (cell, n) in heatmap.iter() {
        w.write_record([cell.to_string(), n.to_string(), (n as f64 / total).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `cell,count,frequency` report back into a heat map.
pub fn read_heatmap_report<R: Read>(input: R) -> Result<HeatMap, String> {
    let mut r = csv::Reader::from_reader(input);
    let mut hm = HeatMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = i + 2;
        let cell = rec.get(0).unwrap_or_default().parse::<ContextCell>().map_err(|e| format!("line {line}: {e}"))?;
        let count = rec
            .get(1)
            .and_then(|c| c.parse::<u64>().ok())
            .ok_or_else(|| format!("line {line}: bad count"))?;
        hm.add(cell, count);
    }
    Ok(hm)
}

/// Heat map keyed on the `blinking` column, the only factor a trace records.
pub fn heatmap_from_rows(rows: &[TraceRow]) -> HeatMap {
    let mut hm = HeatMap::new();
    for r in rows {
        hm.record(ContextCell::new().with("blinking", r.blinking.to_string()));
    }
    hm
}
