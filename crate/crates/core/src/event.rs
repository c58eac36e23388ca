use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::extraction::{ExtractionRecord, MonthYear};
use crate::geocode::GeoPoint;

/// A filtered extraction joined with its article metadata and geocode:
/// the unit that deduplication, linkage and the panels work on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub record: ExtractionRecord,
    pub source: String,
    pub publication_date: NaiveDate,
    pub event_date: NaiveDate,
    pub point: Option<GeoPoint>,
    pub text: String,
}

impl EventRecord {
    pub fn new(record: ExtractionRecord, article: &Article, point: Option<GeoPoint>) -> Self {
        let event_date = resolve_event_date(record.event_month_year, article.publication_date);
        EventRecord {
            record,
            source: article.source.clone(),
            publication_date: article.publication_date,
            event_date,
            point,
            text: article.text.clone(),
        }
    }

    pub fn id(&self) -> &str {
        &self.record.article_id
    }

    pub fn month(&self) -> MonthYear {
        self.record
            .event_month_year
            .unwrap_or_else(|| MonthYear::of(self.event_date))
    }

    pub fn department(&self) -> Option<&str> {
        self.point.as_ref().and_then(|p| p.department.as_deref())
    }
}

/// Day-precision event date from the month/year answer: the publication
/// date when it falls inside that month, otherwise the 15th. Without a
/// month/year answer the publication date is used.
pub fn resolve_event_date(month_year: Option<MonthYear>, published: NaiveDate) -> NaiveDate {
    match month_year {
        Some(m) if m.contains(published) => published,
        Some(m) => m.day(15).unwrap_or(published),
        None => published,
    }
}
