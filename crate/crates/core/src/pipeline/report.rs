//! Stage counts and the reconciled end-of-run report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusManifest;
use crate::error::{Error, Result};
use crate::event::EventRecord;
use crate::extraction::FilterReport;
use crate::linkage::BoundCounts;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestCounts {
    pub total_loaded: usize,
    pub dropped_malformed: usize,
    pub dropped_short: usize,
    pub retained: usize,
    pub out_of_range_dates: usize,
}

impl From<&CorpusManifest> for IngestCounts {
    fn from(m: &CorpusManifest) -> Self {
        IngestCounts {
            total_loaded: m.total_loaded,
            dropped_malformed: m.dropped_malformed,
            dropped_short: m.dropped_short,
            retained: m.retained_ids.len(),
            out_of_range_dates: m.out_of_range_dates,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractCounts {
    pub input: usize,
    pub extracted: usize,
    pub transport_failures: usize,
    pub parse_failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeocodeCounts {
    pub input: usize,
    pub geocoded: usize,
    pub without_location: usize,
    pub unresolved: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DedupCounts {
    pub input: usize,
    pub candidate_pairs: usize,
    pub cutoff: f64,
    pub calibrated: bool,
    pub clusters: usize,
    pub events_retained: usize,
    pub duplicates_removed: usize,
    pub duplicate_fraction: f64,
    #[serde(default)]
    pub calibration_warning: Option<String>,
    /// Labeled pairs dropped because an article did not reach this stage.
    #[serde(default)]
    pub labels_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkCounts {
    pub ours_total: usize,
    pub reference_total: usize,
    pub lower: BoundCounts,
    pub upper: BoundCounts,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegressCounts {
    pub events: usize,
    pub variants: usize,
    pub failed: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub ingest: IngestCounts,
    pub extract: ExtractCounts,
    pub filter: FilterReport,
    pub geocode: GeocodeCounts,
    pub dedup: DedupCounts,
    pub events_by_year: BTreeMap<i32, usize>,
    /// Events per violence type answered yes; `none` when no type is.
    pub events_by_type: BTreeMap<String, usize>,
    pub link: Option<LinkCounts>,
    pub regress: Option<RegressCounts>,
}

pub fn tallies(events: &[EventRecord]) -> (BTreeMap<i32, usize>, BTreeMap<String, usize>) {
    let mut by_year = BTreeMap::new();
    let mut by_type = BTreeMap::new();
    for e in events {
        *by_year.entry(e.month().year).or_insert(0) += 1;
        let types = e.record.violence_types();
        if types.is_empty() {
            *by_type.entry("none".to_string()).or_insert(0) += 1;
        }
        for t in types {
            *by_type.entry(t.to_string()).or_insert(0) += 1;
        }
    }
    (by_year, by_type)
}

impl PipelineReport {
    /// Every stage's input equals the previous stage's output and every
    /// stage's outputs sum to its input.
    pub fn reconcile(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut check = |what: &str, left: usize, right: usize| {
            if left != right {
                problems.push(format!("{what}: {left} != {right}"));
            }
        };
        let i = &self.ingest;
        check("ingest total = malformed + short + retained", i.total_loaded, i.dropped_malformed + i.dropped_short + i.retained);
        let x = &self.extract;
        check("extract input = ingest retained", x.input, i.retained);
        check("extract input = extracted + failures", x.input, x.extracted + x.transport_failures + x.parse_failures);
        let f = &self.filter;
        check("filter input = extracted", f.input, x.extracted);
        check("filter input = dropped + retained", f.input, f.not_single_incident + f.multi_event + f.retained);
        let g = &self.geocode;
        check("geocode input = filter retained", g.input, f.retained);
        check("geocode input = geocoded + not geocoded", g.input, g.geocoded + g.without_location + g.unresolved);
        let d = &self.dedup;
        check("dedup input = geocode input", d.input, g.input);
        check("dedup retained = clusters", d.events_retained, d.clusters);
        check("dedup input = retained + removed", d.input, d.events_retained + d.duplicates_removed);
        check("events by year", self.events_by_year.values().sum(), d.events_retained);
        if let Some(l) = &self.link {
            check("link input = dedup retained", l.ours_total, d.events_retained);
        }
        if let Some(r) = &self.regress {
            check("regress input = dedup retained", r.events, d.events_retained);
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Consistency(format!("stage counts do not reconcile: {}", problems.join("; "))))
        }
    }

    /// Plain-text summary for terminals.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let i = &self.ingest;
        s.push_str(&format!(
            "articles loaded {} (malformed {}, short {}), retained {}\n",
            i.total_loaded, i.dropped_malformed, i.dropped_short, i.retained
        ));
        let x = &self.extract;
        s.push_str(&format!(
            "extracted {} (transport failures {}, parse failures {})\n",
            x.extracted, x.transport_failures, x.parse_failures
        ));
        let f = &self.filter;
        s.push_str(&format!(
            "filtered to {} (not single incident {}, multiple events {})\n",
            f.retained, f.not_single_incident, f.multi_event
        ));
        let g = &self.geocode;
        s.push_str(&format!(
            "geocoded {} of {} (no location {}, unresolved {})\n",
            g.geocoded, g.input, g.without_location, g.unresolved
        ));
        let d = &self.dedup;
        s.push_str(&format!(
            "events {} after removing {} duplicates ({:.1}%) at cutoff {:.4}\n",
            d.events_retained,
            d.duplicates_removed,
            d.duplicate_fraction * 100.0,
            d.cutoff
        ));
        if let Some(l) = &self.link {
            s.push_str(&format!(
                "reference overlap: lower {:.1}%, upper {:.1}% of our events\n",
                l.lower.ours_fraction * 100.0,
                l.upper.ours_fraction * 100.0
            ));
        }
        if let Some(r) = &self.regress {
            s.push_str(&format!("regressions: {} variants, {} failed\n", r.variants, r.failed));
        }
        s
    }
}
