//! Article ingestion and the OCR-failure length pre-screen.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Articles shorter than this (after trimming) are almost always OCR failures.
pub const DEFAULT_MIN_CHARS: usize = 500;

const FIRST_VALID_DATE: (i32, u32, u32) = (1992, 1, 1);
const LAST_VALID_DATE: (i32, u32, u32) = (2022, 12, 31);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub article_id: String,
    pub source: String,
    pub publication_date: NaiveDate,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_ref: Option<String>,
}

impl Article {
    /// Whether the publication date falls inside the collection window.
    /// Out-of-range articles are flagged, never rejected.
    pub fn date_in_range(&self) -> bool {
        let (y0, m0, d0) = FIRST_VALID_DATE;
        let (y1, m1, d1) = LAST_VALID_DATE;
        let lo = NaiveDate::from_ymd_opt(y0, m0, d0).unwrap();
        let hi = NaiveDate::from_ymd_opt(y1, m1, d1).unwrap();
        (lo..=hi).contains(&self.publication_date)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub total_loaded: usize,
    pub dropped_short: usize,
    pub dropped_malformed: usize,
    pub retained_ids: Vec<String>,
    /// Retained articles whose publication date is outside 1992-2022.
    #[serde(default)]
    pub out_of_range_dates: usize,
}

impl CorpusManifest {
    pub fn is_consistent(&self) -> bool {
        self.total_loaded == self.dropped_short + self.dropped_malformed + self.retained_ids.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::Config(format!("unknown corpus format {other:?}"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Screen {
    Keep,
    DropShort,
}

/// Loose row shape shared by both input formats; validation happens in
/// [`RawRow::into_article`] so that a damaged row is counted, not fatal.
#[derive(Debug, Deserialize)]
struct RawRow {
    article_id: Option<String>,
    source: Option<String>,
    publication_date: Option<String>,
    text: Option<String>,
    #[serde(default)]
    scan_ref: Option<String>,
}

impl RawRow {
    fn into_article(self) -> Option<Article> {
        let article_id = self.article_id.map(|s| s.trim().to_owned())?;
        if article_id.is_empty() {
            return None;
        }
        let date = self.publication_date?;
        let publication_date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d").ok()?;
        Some(Article {
            article_id,
            source: self.source.unwrap_or_default(),
            publication_date,
            text: self.text?,
            scan_ref: self.scan_ref.filter(|s| !s.trim().is_empty()),
        })
    }
}

/// Reads a corpus file. Malformed rows (missing id, unparseable date, missing
/// text, duplicate id) are counted in the manifest and skipped.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<(Vec<Article>, CorpusManifest)> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows: Vec<Option<RawRow>> = match format {
        CorpusFormat::Jsonl => content
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<RawRow>(l).ok())
            .collect(),
        CorpusFormat::Csv => {
            if content.trim().is_empty() {
                Vec::new()
            } else {
                let mut reader = csv::ReaderBuilder::new()
                    .flexible(true)
                    .from_reader(content.as_bytes());
                reader.deserialize::<RawRow>().map(|r| r.ok()).collect()
            }
        }
    };

    let mut seen = HashSet::new();
    let mut articles = Vec::new();
    let mut manifest = CorpusManifest::default();
    for row in rows {
        manifest.total_loaded += 1;
        match row.and_then(RawRow::into_article) {
            Some(article) if seen.insert(article.article_id.clone()) => {
                if !article.date_in_range() {
                    manifest.out_of_range_dates += 1;
                }
                manifest.retained_ids.push(article.article_id.clone());
                articles.push(article);
            }
            _ => manifest.dropped_malformed += 1,
        }
    }
    if manifest.dropped_malformed > 0 {
        log::warn!(
            "{}: skipped {} malformed row(s)",
            path.display(),
            manifest.dropped_malformed
        );
    }
    Ok((articles, manifest))
}

/// Length pre-screen: counts unicode scalar values of the trimmed text.
pub fn prescreen(article: &Article, min_chars: usize) -> Screen {
    if article.text.trim().chars().count() < min_chars {
        Screen::DropShort
    } else {
        Screen::Keep
    }
}

/// Applies [`prescreen`] to a loaded corpus and updates the manifest.
pub fn prescreen_corpus(
    articles: Vec<Article>,
    manifest: &mut CorpusManifest,
    min_chars: usize,
) -> Vec<Article> {
    let (kept, dropped): (Vec<_>, Vec<_>) = articles
        .into_iter()
        .partition(|a| prescreen(a, min_chars) == Screen::Keep);
    manifest.dropped_short += dropped.len();
    manifest.retained_ids = kept.iter().map(|a| a.article_id.clone()).collect();
    manifest.out_of_range_dates = kept.iter().filter(|a| !a.date_in_range()).count();
    kept
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn article(text: &str) -> Article {
        Article {
            article_id: "a1".into(),
            source: "El Tiempo".into(),
            publication_date: NaiveDate::from_ymd_opt(2011, 6, 21).unwrap(),
            text: text.into(),
            scan_ref: None,
        }
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn prescreen_boundary() {
        assert_eq!(prescreen(&article(&"a".repeat(499)), 500), Screen::DropShort);
        assert_eq!(prescreen(&article(&"a".repeat(500)), 500), Screen::Keep);
        assert_eq!(prescreen(&article(""), 500), Screen::DropShort);
    }

    #[test]
    fn prescreen_counts_scalars_after_trim() {
        // 500 two-byte characters: 1000 bytes but exactly 500 characters.
        let accented = "á".repeat(500);
        assert_eq!(prescreen(&article(&accented), 500), Screen::Keep);
        let padded = format!("\n\n   {}   \n", "é".repeat(499));
        assert_eq!(prescreen(&article(&padded), 500), Screen::DropShort);
    }

    #[test]
    fn loads_valid_jsonl() {
        let f = write_tmp(concat!(
            r#"{"article_id":"a","source":"s","publication_date":"2011-06-20","text":"x"}"#,
            "\n",
            r#"{"article_id":"b","source":"s","publication_date":"2011-06-21","text":"y","scan_ref":"scans/b.jpg"}"#,
            "\n",
            r#"{"article_id":"c","source":"s","publication_date":"2011-06-22","text":"z"}"#,
            "\n"
        ));
        let (arts, m) = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(arts.len(), 3);
        assert_eq!((m.total_loaded, m.dropped_short, m.dropped_malformed), (3, 0, 0));
        assert_eq!(m.retained_ids, vec!["a", "b", "c"]);
        assert_eq!(arts[1].scan_ref.as_deref(), Some("scans/b.jpg"));
        assert!(m.is_consistent());
    }

    #[test]
    fn malformed_rows_are_counted() {
        let f = write_tmp(concat!(
            r#"{"article_id":"a","source":"s","publication_date":"2011-06-20","text":"x"}"#,
            "\n",
            r#"{"source":"s","publication_date":"2011-06-20","text":"x"}"#,
            "\n",
            r#"{"article_id":"c","source":"s","publication_date":"2011-06-22","text":"z"}"#,
            "\n",
            "{not json\n",
            r#"{"article_id":"a","source":"s","publication_date":"2011-06-20","text":"dup"}"#,
            "\n",
        ));
        let (arts, m) = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(arts.len(), 2);
        assert_eq!(m.dropped_malformed, 3);
        assert!(m.is_consistent());
    }

    #[test]
    fn empty_file() {
        let f = write_tmp("");
        for fmt in [CorpusFormat::Jsonl, CorpusFormat::Csv] {
            let (arts, m) = load_corpus(f.path(), fmt).unwrap();
            assert!(arts.is_empty());
            assert_eq!(m, CorpusManifest::default());
        }
    }

    #[test]
    fn loads_csv_with_header() {
        let f = write_tmp(
            "article_id,source,publication_date,text,scan_ref\n\
             a,El Tiempo,2011-06-20,\"texto; con, comas\",\n\
             ,El Tiempo,2011-06-20,sin id,\n\
             b,El Espectador,1989-03-02,viejo,scan/b.pdf\n",
        );
        let (arts, m) = load_corpus(f.path(), CorpusFormat::Csv).unwrap();
        assert_eq!(arts.len(), 2);
        assert_eq!(arts[0].text, "texto; con, comas");
        assert_eq!(m.dropped_malformed, 1);
        assert_eq!(m.out_of_range_dates, 1);
        assert!(!arts[1].date_in_range());
    }

    #[test]
    fn unreadable_path_is_fatal() {
        let err = load_corpus(Path::new("/nonexistent/corpus.jsonl"), CorpusFormat::Jsonl);
        assert!(matches!(err, Err(Error::Io { .. })));
        assert!(matches!("xml".parse::<CorpusFormat>(), Err(Error::Config(_))));
    }

    #[test]
    fn idempotent_load() {
        let f = write_tmp(
            r#"{"article_id":"a","source":"s","publication_date":"2011-06-20","text":"x"}"#,
        );
        let first = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        let second = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn prescreen_corpus_keeps_accounting() {
        let mut long = article(&"x".repeat(600));
        long.article_id = "long".into();
        let short = article("corto");
        let mut m = CorpusManifest {
            total_loaded: 3,
            dropped_malformed: 1,
            retained_ids: vec!["long".into(), "a1".into()],
            ..Default::default()
        };
        let kept = prescreen_corpus(vec![long, short], &mut m, DEFAULT_MIN_CHARS);
        assert_eq!(kept.len(), 1);
        assert_eq!(m.dropped_short, 1);
        assert!(m.is_consistent());
    }
}
