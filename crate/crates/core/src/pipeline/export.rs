//! Flat CSV and GeoJSON exports of the final events.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::event::EventRecord;
use crate::extraction::VIOLENCE_TYPES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Geojson,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "geojson" => Ok(ExportFormat::Geojson),
            other => Err(Error::Validation(format!("unknown export format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attacker {
    Farc,
    Eln,
    Auc,
    Epl,
    Guerrilla,
    Government,
}

impl Attacker {
    pub const ALL: [Attacker; 6] = [
        Attacker::Farc,
        Attacker::Eln,
        Attacker::Auc,
        Attacker::Epl,
        Attacker::Guerrilla,
        Attacker::Government,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Attacker::Farc => "farc",
            Attacker::Eln => "eln",
            Attacker::Auc => "auc",
            Attacker::Epl => "epl",
            Attacker::Guerrilla => "guerrilla",
            Attacker::Government => "government",
        }
    }

    /// From the yes/no attacker answers. Government covers army combat and
    /// civilians killed by the army.
    pub fn involved(self, e: &EventRecord) -> bool {
        let r = &e.record;
        match self {
            Attacker::Farc => r.farc_involved.is_yes(),
            Attacker::Eln => r.eln_involved.is_yes(),
            Attacker::Auc => r.auc_involved.is_yes(),
            Attacker::Epl => r.epl_involved.is_yes(),
            Attacker::Guerrilla => r.mentions_guerrilla.is_yes(),
            Attacker::Government => {
                r.army_combatant.is_yes()
                    || r.civilians_killed_by_army.is_some_and(|n| n > 0)
                    || r.falsos_positivos_count.is_some_and(|n| n > 0)
            }
        }
    }
}

impl fmt::Display for Attacker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attacker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Attacker::ALL
            .into_iter()
            .find(|a| a.as_str() == key)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown attacker {s:?}; expected one of farc, eln, auc, epl, guerrilla, government"
                ))
            })
    }
}

/// Conjunctive filters; an empty set means no restriction. Within one set
/// an event matches if any member matches.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExportFilters {
    pub years: BTreeSet<i32>,
    pub attackers: BTreeSet<Attacker>,
    pub types: BTreeSet<&'static str>,
}

impl ExportFilters {
    /// Years as a comma list of single years and `a-b` ranges.
    pub fn parse_years(s: &str) -> Result<BTreeSet<i32>> {
        let bad = || Error::Validation(format!("bad year filter {s:?}"));
        let mut out = BTreeSet::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('-') {
                Some((a, b)) => {
                    let (a, b): (i32, i32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                    if a > b {
                        return Err(bad());
                    }
                    out.extend(a..=b);
                }
                None => {
                    out.insert(part.parse().map_err(|_| bad())?);
                }
            }
        }
        Ok(out)
    }

    pub fn parse_attackers(s: &str) -> Result<BTreeSet<Attacker>> {
        s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::parse).collect()
    }

    pub fn parse_types(s: &str) -> Result<BTreeSet<&'static str>> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|t| {
                VIOLENCE_TYPES.iter().copied().find(|v| *v == t).ok_or_else(|| {
                    Error::Validation(format!(
                        "unknown violence type {t:?}; expected one of {}",
                        VIOLENCE_TYPES.join(", ")
                    ))
                })
            })
            .collect()
    }

    pub fn matches(&self, e: &EventRecord) -> bool {
        (self.years.is_empty() || self.years.contains(&e.month().year))
            && (self.attackers.is_empty() || self.attackers.iter().any(|a| a.involved(e)))
            && (self.types.is_empty() || e.record.violence_types().iter().any(|t| self.types.contains(t)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExportNote {
    pub matched: usize,
    pub written: usize,
    /// Matched events left out of a GeoJSON export for lack of coordinates.
    pub excluded_without_coordinates: usize,
}

const CSV_HEADER: [&str; 19] = [
    "article_id",
    "event_date",
    "year",
    "source",
    "latitude",
    "longitude",
    "department",
    "location",
    "murder",
    "attack_or_injury",
    "kidnapping",
    "armed_conflict",
    "harassment_or_threats",
    "farc",
    "eln",
    "auc",
    "epl",
    "government",
    "summary",
];

fn csv_bytes(events: &[&EventRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for e in events {
        let types = e.record.violence_types();
        let flag = |b: bool| if b { "1" } else { "0" }.to_string();
        let mut row = vec![
            e.id().to_string(),
            e.event_date.to_string(),
            e.month().year.to_string(),
            e.source.clone(),
            e.point.as_ref().map(|p| p.latitude.to_string()).unwrap_or_default(),
            e.point.as_ref().map(|p| p.longitude.to_string()).unwrap_or_default(),
            e.department().unwrap_or_default().to_string(),
            e.record.locations.first().cloned().unwrap_or_default(),
        ];
        row.extend(VIOLENCE_TYPES.iter().map(|t| flag(types.contains(t))));
        for a in [Attacker::Farc, Attacker::Eln, Attacker::Auc, Attacker::Epl, Attacker::Government] {
            row.push(flag(a.involved(e)));
        }
        row.push(e.record.summary.clone());
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Parse(e.to_string()))
}

fn geojson_value(events: &[&EventRecord]) -> Value {
    let features: Vec<Value> = events
        .iter()
        .filter_map(|e| {
            let p = e.point.as_ref()?;
            let types = e.record.violence_types();
            let type_flags: Map<String, Value> =
                VIOLENCE_TYPES.iter().map(|t| (t.to_string(), json!(types.contains(t)))).collect();
            let attackers: Map<String, Value> =
                Attacker::ALL.iter().map(|a| (a.as_str().to_string(), json!(a.involved(e)))).collect();
            Some(json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [p.longitude, p.latitude]},
                "properties": {
                    "article_id": e.id(),
                    "event_date": e.event_date.to_string(),
                    "year": e.month().year,
                    "department": e.department(),
                    "types": type_flags,
                    "attackers": attackers,
                    "summary": e.record.summary,
                }
            }))
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

/// Writes the filtered events to `out`. GeoJSON exports also get a
/// sidecar `<out>.note.json` counting events dropped for lack of
/// coordinates.
pub fn export_events(
    events: &[EventRecord],
    format: ExportFormat,
    filters: &ExportFilters,
    out: &Path,
) -> Result<ExportNote> {
    let selected: Vec<&EventRecord> = events.iter().filter(|e| filters.matches(e)).collect();
    let mut note = ExportNote {
        matched: selected.len(),
        ..Default::default()
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    match format {
        ExportFormat::Csv => {
            note.written = selected.len();
            fs::write(out, csv_bytes(&selected)?).map_err(|e| Error::io(out, e))?;
        }
        ExportFormat::Geojson => {
            note.written = selected.iter().filter(|e| e.point.is_some()).count();
            note.excluded_without_coordinates = selected.len() - note.written;
            let text = serde_json::to_string_pretty(&geojson_value(&selected))? + "\n";
            fs::write(out, text).map_err(|e| Error::io(out, e))?;
            let sidecar = note_path(out);
            fs::write(&sidecar, serde_json::to_string_pretty(&note)? + "\n").map_err(|e| Error::io(&sidecar, e))?;
        }
    }
    Ok(note)
}

pub fn note_path(out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.note.json", out.display()))
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;
    use crate::extraction::{ExtractionRecord, MonthYear, Tri};
    use crate::geocode::GeoPoint;

    fn event(id: &str, year: i32, farc: bool, army: bool, located: bool) -> EventRecord {
        let date = NaiveDate::from_ymd_opt(year, 5, 3).unwrap();
        EventRecord {
            record: ExtractionRecord {
                article_id: id.into(),
                is_murder: Tri::Yes,
                farc_involved: if farc { Tri::Yes } else { Tri::No },
                army_combatant: if army { Tri::Yes } else { Tri::No },
                event_month_year: Some(MonthYear::of(date)),
                summary: format!("event {id}"),
                ..Default::default()
            },
            source: "s".into(),
            publication_date: date,
            event_date: date,
            point: located.then(|| GeoPoint::new(4.0, -74.0, "x").unwrap()),
            text: String::new(),
        }
    }

    #[test]
    fn filters_are_conjunctive() {
        let events = [
            event("a", 2013, true, false, true),
            event("b", 2013, false, true, false),
            event("c", 2013, false, false, true),
            event("d", 2019, true, false, true),
        ];
        let filters = ExportFilters {
            years: ExportFilters::parse_years("2013").unwrap(),
            attackers: ExportFilters::parse_attackers("farc,eln,government").unwrap(),
            types: BTreeSet::new(),
        };
        let ids: Vec<&str> = events.iter().filter(|e| filters.matches(e)).map(|e| e.id()).collect();
        assert_eq!(ids, ["a", "b"]);

        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("map.geojson");
        let note = export_events(&events, ExportFormat::Geojson, &filters, &out).unwrap();
        assert_eq!((note.matched, note.written, note.excluded_without_coordinates), (2, 1, 1));
        assert!(note_path(&out).exists());
        let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["features"].as_array().unwrap().len(), 1);
        assert_eq!(v["features"][0]["properties"]["attackers"]["farc"], json!(true));
    }

    #[test]
    fn empty_exports_are_valid() {
        let dir = tempfile::tempdir().unwrap();
        let filters = ExportFilters {
            years: [1990].into(),
            ..Default::default()
        };
        let events = [event("a", 2013, true, false, true)];
        let csv_out = dir.path().join("e.csv");
        export_events(&events, ExportFormat::Csv, &filters, &csv_out).unwrap();
        assert_eq!(fs::read_to_string(&csv_out).unwrap().lines().count(), 1);
        let gj = dir.path().join("e.geojson");
        export_events(&events, ExportFormat::Geojson, &filters, &gj).unwrap();
        let v: Value = serde_json::from_str(&fs::read_to_string(&gj).unwrap()).unwrap();
        assert_eq!(v["features"], json!([]));
    }

    #[test]
    fn unknown_filter_values_are_validation_errors() {
        assert!(ExportFilters::parse_attackers("farc,martians").unwrap_err().is_validation());
        assert!(ExportFilters::parse_types("arson").unwrap_err().is_validation());
        assert!(ExportFilters::parse_years("20x3").unwrap_err().is_validation());
        assert_eq!(ExportFilters::parse_years("2010-2012,2015").unwrap(), [2010, 2011, 2012, 2015].into());
    }
}
