//! Longitudinal occupant dataset: loading, validation and localization.
//!
//! The CSV must carry the columns `subject_id, age, gender, timestamp,
//! latitude, longitude, altitude` (any order, extra columns ignored). Each
//! row is one geolocated sample; subject attributes may repeat on every row
//! or appear on any one of them.

use std::collections::HashMap;
use std::io::Read;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::Diagnostic;
use crate::geo::{to_local, GeoSample, SiteTransform};
use crate::ifc::SourceId;

pub const REQUIRED_COLUMNS: [&str; 7] =
    ["subject_id", "age", "gender", "timestamp", "latitude", "longitude", "altitude"];

#[derive(Debug, Error)]
pub enum OccupantError {
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("occupant dataset has no data rows")]
    EmptyDataset,
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocatedSample {
    pub timestamp: DateTime<Utc>,
    pub geo: GeoSample,
    /// Building-local metres, filled by [`localize`].
    pub local: Option<[f64; 3]>,
    /// Room containing `local`, filled during inference.
    pub room_ref: Option<SourceId>,
    /// 1-based line in the source file.
    pub line: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupantRecord {
    pub subject_id: String,
    pub age: Option<u32>,
    /// Lower-cased free-form token.
    pub gender: Option<String>,
    /// Sorted by timestamp (stable for equal instants).
    pub samples: Vec<LocatedSample>,
}

impl OccupantRecord {
    /// Latest localized sample taken at or before `as_of`; the latest
    /// localized sample overall when `as_of` is `None`.
    pub fn sample_as_of(&self, as_of: Option<DateTime<Utc>>) -> Option<&LocatedSample> {
        self.samples.iter().rev().filter(|s| s.local.is_some()).find(|s| as_of.is_none_or(|t| s.timestamp <= t))
    }
}

#[derive(Debug, Clone)]
pub struct LoadedOccupants {
    /// One record per distinct subject, in order of first appearance.
    pub records: Vec<OccupantRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses an RFC 3339 instant, or a naive `YYYY-MM-DD[T ]HH:MM:SS` taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .map(|n| n.and_utc())
}

fn field(row: &csv::StringRecord, idx: usize) -> &str {
    row.get(idx).unwrap_or("").trim()
}

/// Reads the occupant CSV (comma separated, RFC 4180 quoting, header row).
///
/// Malformed samples are dropped with a line-numbered diagnostic; the
/// subject's demographic fields on that row still count.
pub fn load_occupants<R: Read>(input: R) -> Result<LoadedOccupants, OccupantError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let mut columns = [0usize; 7];
    for (slot, name) in columns.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim().trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            .ok_or(OccupantError::MissingColumn(name))?;
    }
    let [c_subject, c_age, c_gender, c_time, c_lat, c_lon, c_alt] = columns;

    let mut records: Vec<OccupantRecord> = Vec::new();
    let mut by_subject: HashMap<String, usize> = HashMap::new();
    let mut diagnostics = Vec::new();
    let mut rows = 0usize;

    for row in reader.records() {
        let row = row?;
        rows += 1;
        let line = row.position().map_or(0, |p| p.line());
        let subject = field(&row, c_subject);
        if subject.is_empty() {
            diagnostics.push(Diagnostic::warning(
                "malformed-row",
                None,
                format!("line {line}: empty subject_id; row skipped"),
            ));
            continue;
        }
        let idx = *by_subject.entry(subject.to_owned()).or_insert_with(|| {
            records.push(OccupantRecord {
                subject_id: subject.to_owned(),
                age: None,
                gender: None,
                samples: Vec::new(),
            });
            records.len() - 1
        });
        let record = &mut records[idx];

        let age = field(&row, c_age);
        if !age.is_empty() {
            match age.parse::<u32>() {
                Ok(a) => match record.age {
                    None => record.age = Some(a),
                    Some(prev) if prev != a => diagnostics.push(Diagnostic::warning(
                        "conflicting-attribute",
                        Some(subject),
                        format!("line {line}: age {a} conflicts with earlier {prev}; keeping {prev}"),
                    )),
                    Some(_) => {}
                },
                Err(_) => diagnostics.push(Diagnostic::warning(
                    "malformed-row",
                    Some(subject),
                    format!("line {line}: age {age:?} is not a whole number of years"),
                )),
            }
        }
        let gender = field(&row, c_gender).to_lowercase();
        if !gender.is_empty() {
            match &record.gender {
                None => record.gender = Some(gender),
                Some(prev) if *prev != gender => diagnostics.push(Diagnostic::warning(
                    "conflicting-attribute",
                    Some(subject),
                    format!("line {line}: gender {gender:?} conflicts with earlier {prev:?}; keeping {prev:?}"),
                )),
                Some(_) => {}
            }
        }

        let sample = (|| {
            let timestamp = parse_timestamp(field(&row, c_time)).ok_or("unparseable timestamp")?;
            let num = |c: usize, what: &'static str| field(&row, c).parse::<f64>().map_err(|_| what);
            let geo =
                GeoSample::new(num(c_lat, "bad latitude")?, num(c_lon, "bad longitude")?, num(c_alt, "bad altitude")?);
            geo.validate().map_err(|_| "coordinates out of range")?;
            Ok::<_, &str>(LocatedSample { timestamp, geo, local: None, room_ref: None, line })
        })();
        match sample {
            Ok(s) => record.samples.push(s),
            Err(reason) => diagnostics.push(Diagnostic::warning(
                "malformed-sample",
                Some(subject),
                format!("line {line}: {reason}; sample dropped"),
            )),
        }
    }

    if rows == 0 {
        return Err(OccupantError::EmptyDataset);
    }
    for r in &mut records {
        r.samples.sort_by_key(|s| s.timestamp);
    }
    Ok(LoadedOccupants { records, diagnostics })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dropped {
    pub subject_id: String,
    pub reason: &'static str,
}

/// Keeps the records with an age, a gender and at least one well-formed
/// sample, in their original order.
pub fn filter_defined(records: Vec<OccupantRecord>) -> (Vec<OccupantRecord>, Vec<Dropped>) {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for r in records {
        let reason = if r.age.is_none() {
            Some("undefined age")
        } else if r.gender.is_none() {
            Some("undefined gender")
        } else if r.samples.is_empty() {
            Some("no valid samples")
        } else {
            None
        };
        match reason {
            Some(reason) => dropped.push(Dropped { subject_id: r.subject_id, reason }),
            None => kept.push(r),
        }
    }
    (kept, dropped)
}

/// Fills every sample's local coordinates. Samples outside the site's UTM
/// zone are removed and reported.
pub fn localize(mut records: Vec<OccupantRecord>, t: &SiteTransform) -> (Vec<OccupantRecord>, Vec<Diagnostic>) {
    let mut diagnostics = Vec::new();
    for r in &mut records {
        let subject = r.subject_id.clone();
        r.samples.retain_mut(|s| match to_local(&s.geo, t) {
            Ok(p) => {
                s.local = Some(p);
                true
            }
            Err(e) => {
                diagnostics.push(Diagnostic::warning(
                    "sample-not-localized",
                    Some(&subject),
                    format!("line {}: {e}; sample dropped", s.line),
                ));
                false
            }
        });
    }
    (records, diagnostics)
}
