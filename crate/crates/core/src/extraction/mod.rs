//! LLM featurization: prompt rendering, transport, response parsing and the
//! two article-level inclusion filters.

mod evaluate;
mod parse;
mod record;
mod template;
mod transport;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use evaluate::{evaluate_extraction, load_gold_labels, AccuracyTable, EvalField, FieldAccuracy, GoldLabel};
pub use parse::{parse_month_year, parse_response, FieldDiagnostic, ParsedResponse, MAX_LOCATIONS};
pub use record::{label_index, ExtractionRecord, MonthYear, Tri, LABELS, VIOLENCE_TYPES};
pub use template::{build_prompt, PromptTemplate};
pub use transport::{
    send_with_retry, ChatRequest, ChatTransport, Completion, FixtureTransport, HttpTransport,
    RateLimiter, TransportError, TransportPolicy,
};

use crate::corpus::Article;
use crate::error::{Error, Result};
use crate::text::fold;

/// Verbatim model output, kept so records can be re-derived with a better
/// parser without querying again.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawResponse {
    pub article_id: String,
    pub attempts: u32,
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    TransportExhausted,
    ParseFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleFailure {
    pub article_id: String,
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub raw: RawResponse,
    pub parsed: ParsedResponse,
}

/// Queries the transport for one article and parses the answer. Transport
/// and parse failures are article-level; the raw response survives a parse
/// failure inside the returned error.
pub fn extract_article(
    article: &Article,
    transport: &dyn ChatTransport,
    policy: &TransportPolicy,
    template: &PromptTemplate,
    limiter: &RateLimiter,
) -> std::result::Result<Extraction, (Option<RawResponse>, ArticleFailure)> {
    let raw = fetch_raw(article, transport, policy, template, limiter).map_err(|f| (None, f))?;
    parse_raw(&raw).map(|parsed| Extraction {
        raw: raw.clone(),
        parsed,
    })
    .map_err(|f| (Some(raw), f))
}

fn fetch_raw(
    article: &Article,
    transport: &dyn ChatTransport,
    policy: &TransportPolicy,
    template: &PromptTemplate,
    limiter: &RateLimiter,
) -> std::result::Result<RawResponse, ArticleFailure> {
    let request = policy.request(&article.article_id, build_prompt(article, template));
    match send_with_retry(transport, &request, policy, limiter) {
        Ok(done) => Ok(RawResponse {
            article_id: article.article_id.clone(),
            attempts: done.attempts,
            response: done.text,
        }),
        Err(e) => Err(ArticleFailure {
            article_id: article.article_id.clone(),
            kind: FailureKind::TransportExhausted,
            message: e.to_string(),
        }),
    }
}

/// Parses a stored raw response into a record carrying its article id.
pub fn parse_raw(raw: &RawResponse) -> std::result::Result<ParsedResponse, ArticleFailure> {
    match parse_response(&raw.response) {
        Ok(mut parsed) => {
            parsed.record.article_id = raw.article_id.clone();
            Ok(parsed)
        }
        Err(e) => Err(ArticleFailure {
            article_id: raw.article_id.clone(),
            kind: FailureKind::ParseFailure,
            message: e.to_string(),
        }),
    }
}

/// Raw responses and transport failures for a batch, both sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchBatch {
    pub responses: Vec<RawResponse>,
    pub failures: Vec<ArticleFailure>,
}

/// Queries all articles with at most `policy.parallelism` requests in flight.
/// Output order is by article id regardless of completion order.
pub fn fetch_batch(
    articles: &[Article],
    transport: &dyn ChatTransport,
    policy: &TransportPolicy,
    template: &PromptTemplate,
) -> Result<FetchBatch> {
    policy.validate()?;
    let limiter = RateLimiter::new(policy.requests_per_minute);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(policy.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: BTreeMap<String, std::result::Result<RawResponse, ArticleFailure>> =
        pool.install(|| {
            articles
                .par_iter()
                .map(|a| {
                    (
                        a.article_id.clone(),
                        fetch_raw(a, transport, policy, template, &limiter),
                    )
                })
                .collect()
        });
    let mut batch = FetchBatch::default();
    for (_, r) in results {
        match r {
            Ok(raw) => batch.responses.push(raw),
            Err(f) => batch.failures.push(f),
        }
    }
    Ok(batch)
}

/// How many events an article covers, from its summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventScope {
    SingleEvent,
    FocalPlusMentions,
    MultipleDistinct,
}

const SCOPE_OPTIONS: [(&str, EventScope); 3] = [
    ("one specific event", EventScope::SingleEvent),
    (
        "one focal event and other events mentioned",
        EventScope::FocalPlusMentions,
    ),
    (
        "multiple distinct events equally",
        EventScope::MultipleDistinct,
    ),
];

pub fn build_scope_prompt(summary: &str) -> String {
    format!(
        "Below is a summary of a news article. Is the article about one specific event, \
         one focal event and other events mentioned, or multiple distinct events equally?\n\
         Answer with exactly one of these options: \"{}\", \"{}\", or \"{}\".\n\n\
         Summary: {}",
        SCOPE_OPTIONS[0].0, SCOPE_OPTIONS[1].0, SCOPE_OPTIONS[2].0, summary
    )
}

/// Maps a free-text classification answer onto a scope. Anything that does
/// not name exactly one option is treated as multiple events.
pub fn interpret_scope(answer: &str) -> EventScope {
    let folded = fold(answer);
    let focal = folded.contains("focal");
    let multiple = folded.contains("multiple distinct") || folded.contains("multiple events");
    let single = folded.contains("one specific event") || folded.contains("single event");
    match (single, focal, multiple) {
        (true, false, false) => EventScope::SingleEvent,
        (false, true, false) => EventScope::FocalPlusMentions,
        _ => EventScope::MultipleDistinct,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeAnswer {
    pub article_id: String,
    pub response: String,
    pub scope: EventScope,
}

pub fn classify_event_scope(
    article_id: &str,
    summary: &str,
    transport: &dyn ChatTransport,
    policy: &TransportPolicy,
    limiter: &RateLimiter,
) -> Result<ScopeAnswer> {
    if summary.trim().is_empty() {
        return Err(Error::Validation(format!("{article_id}: empty summary")));
    }
    let request = policy.request(&format!("{article_id}.scope"), build_scope_prompt(summary));
    let done = send_with_retry(transport, &request, policy, limiter)?;
    Ok(ScopeAnswer {
        article_id: article_id.to_owned(),
        scope: interpret_scope(&done.text),
        response: done.text,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NotSingleIncident,
    MultiEvent,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub retained: usize,
    pub not_single_incident: usize,
    pub multi_event: usize,
}

/// Whether a record needs a scope classification at all (it already fails
/// the single-incident criterion otherwise).
pub fn needs_scope(record: &ExtractionRecord) -> bool {
    record.is_single_incident.is_yes()
}

/// Keeps records answered "yes" to the single-incident question whose scope
/// is a single event or a focal event with mentions. Records failing the
/// first criterion need no scope entry; every other record must have one.
pub fn apply_inclusion_filters(
    records: Vec<ExtractionRecord>,
    scopes: &BTreeMap<String, EventScope>,
) -> Result<(Vec<ExtractionRecord>, FilterReport)> {
    let mut report = FilterReport {
        input: records.len(),
        ..Default::default()
    };
    let mut retained = Vec::new();
    for record in records {
        if !needs_scope(&record) {
            report.not_single_incident += 1;
            continue;
        }
        let scope = scopes.get(&record.article_id).ok_or_else(|| {
            Error::Consistency(format!("no scope entry for {}", record.article_id))
        })?;
        if *scope == EventScope::MultipleDistinct {
            report.multi_event += 1;
        } else {
            retained.push(record);
        }
    }
    report.retained = retained.len();
    Ok((retained, report))
}
