//! CSV schemas: workload labels, extracted window features, respiration
//! series and estimate output.
//!
//! Lines starting with `#` are comments; generated files begin with one
//! recording the configuration that produced them.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FeatureSet, VAD_MEAN_INDEX};
use crate::pipeline::{RespirationSeries, WindowEstimate};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct LabelRow {
    participant_id: String,
    paradigm: String,
    condition: String,
    time_s: f64,
    label: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelPoint {
    pub condition: String,
    pub time_s: f64,
    pub label: f64,
}

/// Per-second workload labels for one participant.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub participant_id: String,
    pub paradigm: String,
    pub points: Vec<LabelPoint>,
}

impl LabeledSeries {
    /// The label in force at time `t`: the last point at or before it.
    pub fn label_at(&self, t: f64) -> Option<&LabelPoint> {
        let i = self.points.partition_point(|p| p.time_s <= t + 1e-9);
        i.checked_sub(1).map(|i| &self.points[i])
    }
}

/// Read a label file, grouping rows by participant in order of first
/// appearance.
pub fn read_labels<R: Read>(r: R) -> Result<Vec<LabeledSeries>> {
    let mut out: Vec<LabeledSeries> = Vec::new();
    for row in reader(r).deserialize::<LabelRow>() {
        let row = row?;
        if !row.label.is_finite() || !row.time_s.is_finite() {
            return Err(Error::Data(format!("non-finite label row for `{}`", row.participant_id)));
        }
        let series = match out.iter_mut().position(|s| s.participant_id == row.participant_id) {
            Some(i) => &mut out[i],
            None => {
                out.push(LabeledSeries {
                    participant_id: row.participant_id.clone(),
                    paradigm: row.paradigm.clone(),
                    points: Vec::new(),
                });
                out.last_mut().expect("just pushed")
            }
        };
        if series.paradigm != row.paradigm {
            return Err(Error::Data(format!(
                "participant `{}` appears under paradigms `{}` and `{}`",
                row.participant_id, series.paradigm, row.paradigm
            )));
        }
        if series.points.last().is_some_and(|p| p.time_s >= row.time_s) {
            return Err(Error::Data(format!(
                "label times for `{}` are not strictly increasing at {} s",
                row.participant_id, row.time_s
            )));
        }
        series.points.push(LabelPoint {
            condition: row.condition,
            time_s: row.time_s,
            label: row.label,
        });
    }
    Ok(out)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<LabeledSeries>> {
    read_labels(std::fs::File::open(path)?)
}

/// One analysed window as stored in a features file.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub participant_id: String,
    pub paradigm: String,
    pub condition: String,
    pub start_s: f64,
    pub vad_mean: f64,
    pub feature_set: FeatureSet,
    /// Absent for windows without voice activity.
    pub features: Option<Vec<f64>>,
    pub label: Option<f64>,
}

impl WindowRecord {
    /// The features of `set`, drawn from this record's (possibly larger) set.
    pub fn select(&self, set: FeatureSet) -> Result<Option<Vec<f64>>> {
        let Some(values) = &self.features else {
            return Ok(None);
        };
        if set == self.feature_set {
            return Ok(Some(values.clone()));
        }
        let have = self.feature_set.names();
        set.names()
            .iter()
            .map(|n| {
                have.iter().position(|h| h == n).map(|i| values[i]).ok_or_else(|| {
                    Error::Data(format!("features file lacks `{n}` needed for feature set `{set}`"))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

const ID_COLUMNS: [&str; 4] = ["participant_id", "paradigm", "condition", "start_s"];

pub fn write_records<W: Write>(w: W, header: Option<&str>, set: FeatureSet, rows: &[WindowRecord]) -> Result<()> {
    let mut w = w;
    if let Some(h) = header {
        writeln!(w, "{h}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    let mut head: Vec<&str> = ID_COLUMNS.to_vec();
    head.extend(set.names());
    head.push("label");
    out.write_record(&head)?;
    for r in rows {
        let mut rec = vec![
            r.participant_id.clone(),
            r.paradigm.clone(),
            r.condition.clone(),
            r.start_s.to_string(),
        ];
        match &r.features {
            Some(v) => rec.extend(v.iter().map(|x| x.to_string())),
            None => rec.extend((0..set.dim()).map(|i| {
                if i == VAD_MEAN_INDEX {
                    r.vad_mean.to_string()
                } else {
                    String::new()
                }
            })),
        }
        rec.push(r.label.map(|l| l.to_string()).unwrap_or_default());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Data(format!("cannot parse {what} value `{field}`")))
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<WindowRecord>> {
    let mut rd = reader(r);
    let headers = rd.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < ID_COLUMNS.len() + 2 || cols[..4] != ID_COLUMNS || cols[cols.len() - 1] != "label" {
        return Err(Error::Data(format!(
            "features file header must be {}, <features>, label",
            ID_COLUMNS.join(", ")
        )));
    }
    let names = &cols[4..cols.len() - 1];
    let set = [FeatureSet::Base, FeatureSet::Respiration, FeatureSet::Fillers, FeatureSet::Both]
        .into_iter()
        .find(|s| s.names() == names)
        .ok_or_else(|| Error::Data(format!("unrecognised feature columns {names:?}")))?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let raw: Vec<&str> = (4..4 + set.dim()).map(field).collect();
        let vad_mean = parse_f64(raw[VAD_MEAN_INDEX], "vad_mean")?;
        let features = if raw.iter().all(|f| !f.is_empty()) {
            Some(
                raw.iter()
                    .zip(set.names())
                    .map(|(f, n)| parse_f64(f, n))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        let label = match field(4 + set.dim()) {
            "" => None,
            l => Some(parse_f64(l, "label")?),
        };
        out.push(WindowRecord {
            participant_id: field(0).to_string(),
            paradigm: field(1).to_string(),
            condition: field(2).to_string(),
            start_s: parse_f64(field(3), "start_s")?,
            vad_mean,
            feature_set: set,
            features,
            label,
        });
    }
    Ok(out)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<WindowRecord>> {
    read_records(std::fs::File::open(path)?)
}

#[derive(Debug, Deserialize)]
struct RespirationRow {
    time_s: f64,
    breaths_per_min: f64,
}

pub fn read_respiration<R: Read>(r: R) -> Result<RespirationSeries> {
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for row in reader(r).deserialize::<RespirationRow>() {
        let row = row?;
        times.push(row.time_s);
        values.push(row.breaths_per_min);
    }
    RespirationSeries::new(times, values)
}

pub fn load_respiration(path: impl AsRef<Path>) -> Result<RespirationSeries> {
    read_respiration(std::fs::File::open(path)?)
}

/// CSV header for estimate output.
pub fn estimate_header(set: FeatureSet) -> String {
    let mut cols = vec!["start_s", "estimate", "vad_mean"];
    cols.extend(set.names());
    cols.join(",")
}

pub fn estimate_csv_line(e: &WindowEstimate, set: FeatureSet) -> String {
    let mut cols = vec![e.start_time_s.to_string(), e.estimate.to_string(), e.vad_mean.to_string()];
    match &e.features {
        Some(f) => cols.extend(f.values().iter().map(|v| v.to_string())),
        None => cols.extend(std::iter::repeat_n(String::new(), set.dim())),
    }
    cols.join(",")
}

#[derive(Serialize)]
struct EstimateJson {
    start_s: f64,
    estimate: f64,
    vad_mean: f64,
    features: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    latency_ms: Option<f64>,
}

/// One JSON object per estimate, for piping into other programs.
pub fn estimate_json_line(e: &WindowEstimate, latency_ms: Option<f64>) -> String {
    let features = e.features.as_ref().map(|f| {
        f.set()
            .names()
            .into_iter()
            .zip(f.values())
            .map(|(n, v)| (n.to_string(), serde_json::json!(v)))
            .collect()
    });
    serde_json::to_string(&EstimateJson {
        start_s: e.start_time_s,
        estimate: e.estimate,
        vad_mean: e.vad_mean,
        features,
        latency_ms,
    })
    .unwrap_or_default()
}
