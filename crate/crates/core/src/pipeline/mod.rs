//! Stage orchestration. Each stage reads its inputs from the artifact
//! store, writes its outputs back and commits them to the index only on
//! success, so any stage can be rerun on its own.

pub mod artifacts;
pub mod config;
pub mod export;
pub mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, prescreen_corpus, Article, CorpusManifest};
use crate::dedup::{
    calibrate_cutoff, deduplicate, label_features, load_labels, score_candidates, train_classifier, Calibration,
    EventCluster, ScoredPair, TrainedClassifier, TrainingReport,
};
use crate::error::{Error, Result};
use crate::event::EventRecord;
use crate::extraction::{
    apply_inclusion_filters, classify_event_scope, evaluate_extraction, fetch_batch, load_gold_labels, needs_scope,
    parse_raw, AccuracyTable, ArticleFailure, EventScope, ExtractionRecord, FailureKind, FilterReport, RateLimiter,
    RawResponse, ScopeAnswer,
};
use crate::geocode::{geocode_location, DepartmentTable, GeoCache, GeoPoint, Geocoder, GeocodePolicy};
use crate::linkage::{
    load_reference_dir, match_pairs_csv, overlap_bounds, OurEvent, OverlapReport, PartyCanon, ReferenceLoadReport,
    ViolenceCrosswalk,
};
use crate::regress::{load_eradication, load_specs, robustness_grid, summary_csv, table_csv, GridAxes, GridSummary, PanelEvent};

pub use artifacts::{ArtifactIndex, ArtifactStore, StageOutput, INDEX_FILE};
pub use config::{CorpusSource, DedupStageConfig, GeocoderConfig, LinkageConfig, RegressConfig, RunConfig, TransportConfig};
pub use export::{export_events, Attacker, ExportFilters, ExportFormat, ExportNote};
pub use report::{
    tallies, DedupCounts, ExtractCounts, GeocodeCounts, IngestCounts, LinkCounts, PipelineReport, RegressCounts,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Extract,
    Filter,
    Geocode,
    Dedup,
    Link,
    Regress,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Filter,
        Stage::Geocode,
        Stage::Dedup,
        Stage::Link,
        Stage::Regress,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Filter => "filter",
            Stage::Geocode => "geocode",
            Stage::Dedup => "dedup",
            Stage::Link => "link",
            Stage::Regress => "regress",
            Stage::Report => "report",
        }
    }

    /// Artifacts the stage reads, as `(stage, role)`.
    pub fn inputs(self) -> &'static [(Stage, &'static str)] {
        match self {
            Stage::Ingest => &[],
            Stage::Extract => &[(Stage::Ingest, "articles")],
            Stage::Filter => &[(Stage::Extract, "records")],
            Stage::Geocode => &[(Stage::Filter, "records"), (Stage::Ingest, "articles")],
            Stage::Dedup | Stage::Link | Stage::Regress => &[(Stage::Geocode, "events")],
            Stage::Report => &[
                (Stage::Ingest, "counts"),
                (Stage::Extract, "counts"),
                (Stage::Filter, "report"),
                (Stage::Geocode, "counts"),
                (Stage::Dedup, "counts"),
                (Stage::Dedup, "events"),
            ],
        }
    }

    /// Comma-separated stage names, or `all`. Duplicates collapse and the
    /// result is in pipeline order.
    pub fn parse_list(s: &str) -> Result<Vec<Stage>> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Stage::ALL.to_vec());
        }
        let mut stages: Vec<Stage> = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if stages.is_empty() {
            return Err(Error::Validation("no stages given".into()));
        }
        stages.sort();
        stages.dedup();
        Ok(stages)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Stage::ALL.into_iter().find(|st| st.name() == key).ok_or_else(|| {
            Error::Validation(format!(
                "unknown stage {s:?}; expected one of ingest, extract, filter, geocode, dedup, link, regress, report"
            ))
        })
    }
}

// link and regress read the deduplicated events, not the geocoded ones
fn input_role(stage: Stage, from: Stage, role: &'static str) -> (Stage, &'static str) {
    match (stage, from) {
        (Stage::Link | Stage::Regress, Stage::Geocode) => (Stage::Dedup, "events"),
        _ => (from, role),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for every parallel stage; overrides
    /// `transport_policy.parallelism` when set.
    pub parallelism: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub stages: Vec<Stage>,
    pub report: Option<PipelineReport>,
}

/// Stages a config can run: every core stage, plus link and regress when
/// configured.
pub fn configured_stages(config: &RunConfig) -> Vec<Stage> {
    Stage::ALL
        .into_iter()
        .filter(|s| match s {
            Stage::Link => config.linkage.is_some(),
            Stage::Regress => config.regress.is_some(),
            _ => true,
        })
        .collect()
}

/// Checks that every requested stage can find its inputs, either produced
/// earlier in this run or left by a previous one.
pub fn plan(config: &RunConfig, store: &ArtifactStore, stages: &[Stage]) -> Result<()> {
    let mut problems = Vec::new();
    for &stage in stages {
        for &(from, role) in stage.inputs() {
            let (from, role) = input_role(stage, from, role);
            if !stages.contains(&from) && !store.has(from.name(), role) {
                problems.push(format!("{stage} needs {from}.{role}; run {from} first"));
            }
        }
        match stage {
            Stage::Link if config.linkage.is_none() => problems.push("link requested without a linkage section".into()),
            Stage::Regress if config.regress.is_none() => problems.push("regress requested without a regress section".into()),
            Stage::Dedup if config.dedup.model.is_none() && config.dedup.labels.is_none() => {
                problems.push("dedup needs either dedup.model or dedup.labels".into())
            }
            _ => {}
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems.join("; ")))
    }
}

fn pool(parallelism: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = parallelism {
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Runs `stages` in pipeline order. A failing stage stops the run and
/// leaves every committed artifact as it was.
pub fn run(config: &RunConfig, stages: &[Stage], options: &RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    let mut stages = stages.to_vec();
    stages.sort();
    stages.dedup();
    let mut store = ArtifactStore::open(&config.output_dir)?;
    plan(config, &store, &stages)?;
    let mut config = config.clone();
    if let Some(n) = options.parallelism {
        config.transport_policy.parallelism = n.max(1);
    }
    let workers = pool(options.parallelism)?;
    let mut outcome = RunOutcome {
        stages: stages.clone(),
        report: None,
    };
    for &stage in &stages {
        log::info!("stage {stage}: start");
        let out = workers.install(|| run_stage(stage, &config, &store))?;
        commit_stage(&mut store, stage, out)?;
        log::info!("stage {stage}: done");
    }
    if stages.contains(&Stage::Report) {
        outcome.report = Some(store.read_json("report", "report")?);
    }
    Ok(outcome)
}

/// Commits a stage and drops the index entries of every later stage, which
/// were computed from inputs that no longer exist. Their files stay on disk.
fn commit_stage(store: &mut ArtifactStore, stage: Stage, out: StageOutput) -> Result<()> {
    let stale: Vec<Stage> = Stage::ALL.into_iter().filter(|s| *s > stage && depends_on(*s, stage)).collect();
    store.invalidate(&stale.iter().map(|s| s.name()).collect::<Vec<_>>());
    store.commit(out)
}

fn depends_on(later: Stage, earlier: Stage) -> bool {
    later.inputs().iter().any(|&(from, role)| {
        let (from, _) = input_role(later, from, role);
        from == earlier || (from > earlier && depends_on(from, earlier))
    })
}

fn run_stage(stage: Stage, config: &RunConfig, store: &ArtifactStore) -> Result<StageOutput> {
    match stage {
        Stage::Ingest => ingest(config, store),
        Stage::Extract => extract(config, store),
        Stage::Filter => filter(config, store),
        Stage::Geocode => geocode(config, store),
        Stage::Dedup => dedup(config, store),
        Stage::Link => link(config, store),
        Stage::Regress => regress(config, store),
        Stage::Report => report_stage(store),
    }
}

fn ingest(config: &RunConfig, store: &ArtifactStore) -> Result<StageOutput> {
    let (articles, mut manifest) = load_corpus(&config.corpus.path, config.corpus.format)?;
    let mut articles = prescreen_corpus(articles, &mut manifest, config.corpus.min_chars);
    articles.sort_by(|a, b| a.article_id.cmp(&b.article_id));
    let mut out = store.begin("ingest");
    store.put_jsonl(&mut out, "articles", &articles)?;
    store.put_json(&mut out, "manifest", &manifest)?;
    store.put_json(&mut out, "counts", &IngestCounts::from(&manifest))?;
    Ok(out)
}

fn extract(config: &RunConfig, store: &ArtifactStore) -> Result<StageOutput> {
    let articles: Vec<Article> = store.read_jsonl("ingest", "articles")?;
    let transport = config.chat_transport()?;
    let template = config.template()?;
    let batch = fetch_batch(&articles, transport.as_ref(), &config.transport_policy, &template)?;
    let mut records = Vec::new();
    let mut failures = batch.failures.clone();
    for raw in &batch.responses {
        match parse_raw(raw) {
            Ok(parsed) => records.push(parsed.record),
            Err(f) => failures.push(f),
        }
    }
    failures.sort_by(|a, b| a.article_id.cmp(&b.article_id));
    let counts = ExtractCounts {
        input: articles.len(),
        extracted: records.len(),
        transport_failures: failures.iter().filter(|f| f.kind == FailureKind::TransportExhausted).count(),
        parse_failures: failures.iter().filter(|f| f.kind == FailureKind::ParseFailure).count(),
    };
    let mut out = store.begin("extract");
    store.put_jsonl(&mut out, "raw", &batch.responses)?;
    store.put_jsonl(&mut out, "records", &records)?;
    store.put_jsonl(&mut out, "failures", &failures)?;
    store.put_json(&mut out, "counts", &counts)?;
    Ok(out)
}

/// Re-derives records from stored raw responses, e.g. after a parser fix.
pub fn reparse(raw: &[RawResponse]) -> (Vec<ExtractionRecord>, Vec<ArticleFailure>) {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in raw {
        match parse_raw(r) {
            Ok(p) => records.push(p.record),
            Err(f) => failures.push(f),
        }
    }
    (records, failures)
}

fn filter(config: &RunConfig, store: &ArtifactStore) -> Result<StageOutput> {
    let records: Vec<ExtractionRecord> = store.read_jsonl("extract", "records")?;
    let transport = config.chat_transport()?;
    let policy = &config.transport_policy;
    policy.validate()?;
    let limiter = RateLimiter::new(policy.requests_per_minute);
    let answers: Vec<ScopeAnswer> = records
        .par_iter()
        .filter(|r| needs_scope(r))
        .map(|r| {
            if r.summary.trim().is_empty() {
                // nothing to classify; such records cannot be shown to be single events
                return Ok(ScopeAnswer {
                    article_id: r.article_id.clone(),
                    response: String::new(),
                    scope: EventScope::MultipleDistinct,
                });
            }
            classify_event_scope(&r.article_id, &r.summary, transport.as_ref(), policy, &limiter)
        })
        .collect::<Result<_>>()?;
    let scopes: BTreeMap<String, EventScope> = answers.iter().map(|a| (a.article_id.clone(), a.scope)).collect();
    let (retained, report) = apply_inclusion_filters(records, &scopes)?;
    let mut out = store.begin("filter");
    store.put_jsonl(&mut out, "scopes", &answers)?;
    store.put_jsonl(&mut out, "records", &retained)?;
    store.put_json(&mut out, "report", &report)?;
    Ok(out)
}

/// Queries tried for a record, most specific first: both locations
/// joined, then each on its own.
pub fn location_queries(record: &ExtractionRecord) -> Vec<String> {
    let locs: Vec<&str> = record.locations.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    let mut out = Vec::new();
    if locs.len() > 1 {
        out.push(locs.join(", "));
    }
    out.extend(locs.iter().map(|s| s.to_string()));
    out
}

/// First query the geocoder resolves, if any.
pub fn geocode_record(
    record: &ExtractionRecord,
    client: &dyn Geocoder,
    cache: &GeoCache,
    policy: &GeocodePolicy,
    departments: &DepartmentTable,
) -> Result<Option<GeoPoint>> {
    for q in location_queries(record) {
        if let Some(p) = geocode_location(&q, client, cache, policy, departments)? {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

fn geocode(config: &RunConfig, store: &ArtifactStore) -> Result<StageOutput> {
    let records: Vec<ExtractionRecord> = store.read_jsonl("filter", "records")?;
    let articles: Vec<Article> = store.read_jsonl("ingest", "articles")?;
    let by_id: BTreeMap<&str, &Article> = articles.iter().map(|a| (a.article_id.as_str(), a)).collect();
    let client = config.geocoder()?;
    let cache = match &config.geocache {
        Some(p) => GeoCache::load(p)?,
        None => GeoCache::new(),
    };
    let departments = DepartmentTable::bundled();
    let events: Vec<EventRecord> = records
        .par_iter()
        .map(|r| {
            let article = by_id
                .get(r.article_id.as_str())
                .ok_or_else(|| Error::Consistency(format!("record {} has no ingested article", r.article_id)))?;
            let point = geocode_record(r, client.as_ref(), &cache, &config.geocode_policy, &departments)?;
            Ok(EventRecord::new(r.clone(), article, point))
        })
        .collect::<Result<_>>()?;
    if let Some(p) = &config.geocache {
        cache.save(p)?;
    }
    let without_location = records.iter().filter(|r| location_queries(r).is_empty()).count();
    let geocoded = events.iter().filter(|e| e.point.is_some()).count();
    let counts = GeocodeCounts {
        input: records.len(),
        geocoded,
        without_location,
        unresolved: records.len() - geocoded - without_location,
    };
    let mut out = store.begin("geocode");
    store.put_jsonl(&mut out, "events", &events)?;
    store.put_json(&mut out, "counts", &counts)?;
    Ok(out)
}

/// Loads the configured model, or trains one from the labels restricted to
/// articles present in `events`. Returns the number of labels skipped.
pub fn obtain_model(
    config: &DedupStageConfig,
    events: &[EventRecord],
) -> Result<(TrainedClassifier, Option<TrainingReport>, usize)> {
    if let Some(path) = &config.model {
        return Ok((TrainedClassifier::load(path)?, None, 0));
    }
    let path = config
        .labels
        .as_ref()
        .ok_or_else(|| Error::Config("dedup needs either a model or labels".into()))?;
    let labels = load_labels(path)?;
    let features = label_features(events, &labels, config.params.shingle_n);
    let usable: Vec<_> = labels.iter().filter(|l| features.contains_key(&l.key())).cloned().collect();
    let skipped = labels.len() - usable.len();
    if skipped > 0 {
        log::warn!("{skipped} labeled pairs reference articles absent from this run");
    }
    let (model, report) = train_classifier(&usable, &features, &config.params)?;
    Ok((model, Some(report), skipped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupOutcome {
    pub pairs: Vec<ScoredPair>,
    pub cutoff: f64,
    pub calibration: Option<Calibration>,
    pub clusters: Vec<EventCluster>,
    pub retained: Vec<EventRecord>,
}

/// Scores, picks the cutoff and clusters. Retained events are the cluster
/// representatives in id order.
pub fn run_dedup(events: &[EventRecord], model: &TrainedClassifier, config: &DedupStageConfig) -> Result<DedupOutcome> {
    let pairs = score_candidates(events, model, &config.params)?;
    let calibration = match config.target_rate {
        Some(t) => {
            let ids: Vec<String> = events.iter().map(|e| e.id().to_string()).collect();
            Some(calibrate_cutoff(&ids, &pairs, t)?)
        }
        None => None,
    };
    let cutoff = calibration.as_ref().map_or(config.params.cutoff, |c| c.cutoff);
    let clusters = deduplicate(events, &pairs, cutoff);
    let keep: std::collections::BTreeSet<&str> = clusters.iter().map(|c| c.representative.as_str()).collect();
    let mut retained: Vec<EventRecord> = events.iter().filter(|e| keep.contains(e.id())).cloned().collect();
    retained.sort_by(|a, b| a.id().cmp(b.id()));
    Ok(DedupOutcome {
        pairs,
        cutoff,
        calibration,
        clusters,
        retained,
    })
}

fn dedup(config: &RunConfig, store: &ArtifactStore) -> Result<StageOutput> {
    let events: Vec<EventRecord> = store.read_jsonl("geocode", "events")?;
    let (model, training, labels_skipped) = obtain_model(&config.dedup, &events)?;
    let result = run_dedup(&events, &model, &config.dedup)?;
    let counts = DedupCounts {
        input: events.len(),
        candidate_pairs: result.pairs.len(),
        cutoff: result.cutoff,
        calibrated: result.calibration.is_some(),
        clusters: result.clusters.len(),
        events_retained: result.retained.len(),
        duplicates_removed: events.len() - result.retained.len(),
        duplicate_fraction: if events.is_empty() {
            0.0
        } else {
            (events.len() - result.retained.len()) as f64 / events.len() as f64
        },
        calibration_warning: result.calibration.as_ref().and_then(|c| c.warning.clone()),
        labels_skipped,
    };
    let mut out = store.begin("dedup");
    store.put(&mut out, "model", "json", model.to_json()?.as_bytes())?;
    if let Some(t) = &training {
        store.put_json(&mut out, "training", t)?;
    }
    if let Some(c) = &result.calibration {
        store.put_json(&mut out, "calibration", c)?;
    }
    store.put_jsonl(&mut out, "pairs", &result.pairs)?;
    store.put_jsonl(&mut out, "clusters", &result.clusters)?;
    store.put_jsonl(&mut out, "events", &result.retained)?;
    store.put_json(&mut out, "counts", &counts)?;
    Ok(out)
}

/// Loads the reference directory and computes both overlap bounds.
pub fn link_events(
    events: &[EventRecord],
    linkage: &LinkageConfig,
    config: &RunConfig,
) -> Result<(OverlapReport, ReferenceLoadReport)> {
    let gazetteer = config.gazetteer()?;
    let (reference, load_report) = load_reference_dir(&linkage.reference_dir, gazetteer.as_ref())?;
    let canon = match &linkage.party_canon {
        Some(p) => PartyCanon::load(p)?,
        None => PartyCanon::bundled(),
    };
    let crosswalk = match &linkage.crosswalk {
        Some(p) => ViolenceCrosswalk::load(p)?,
        None => ViolenceCrosswalk::bundled(),
    };
    let ours: Vec<OurEvent> = events.iter().map(|e| OurEvent::from_record(e, &canon, &crosswalk)).collect();
    let report = overlap_bounds(&ours, &reference, &canon, &linkage.lower, &linkage.upper)?;
    Ok((report, load_report))
}

fn link(config: &RunConfig, store: &ArtifactStore) -> Result<StageOutput> {
    let linkage = config
        .linkage
        .as_ref()
        .ok_or_else(|| Error::Config("no linkage section".into()))?;
    let events: Vec<EventRecord> = store.read_jsonl("dedup", "events")?;
    let (report, load_report) = link_events(&events, linkage, config)?;
    let counts = LinkCounts {
        ours_total: report.ours_total,
        reference_total: report.reference_total,
        lower: report.lower.clone(),
        upper: report.upper.clone(),
    };
    let mut out = store.begin("link");
    store.put_json(&mut out, "overlap", &report)?;
    store.put(&mut out, "matches", "csv", match_pairs_csv(&report)?.as_bytes())?;
    store.put_json(&mut out, "reference", &load_report)?;
    store.put_json(&mut out, "counts", &counts)?;
    Ok(out)
}

/// Builds the panels and fits every variant. Fails only when every variant
/// fails.
pub fn regress_events(events: &[EventRecord], regress: &RegressConfig) -> Result<(GridSummary, usize)> {
    let departments = DepartmentTable::bundled();
    let panel_events: Vec<PanelEvent> = events.iter().filter_map(|e| PanelEvent::from_record(e, &departments)).collect();
    let without_department = events.len() - panel_events.len();
    let (eradication, diagnostics) = load_eradication(&regress.eradication, &departments)?;
    for d in &diagnostics {
        log::warn!("eradication: {d}");
    }
    let specs = match &regress.specs {
        Some(p) => load_specs(p)?,
        None => GridAxes::default().expand(),
    };
    let summary = robustness_grid(&panel_events, &eradication, &specs);
    if !summary.variants.is_empty() && summary.failures() == summary.variants.len() {
        let first = summary.variants[0].error.clone().unwrap_or_default();
        return Err(Error::Regression(format!("every model variant failed; first error: {first}")));
    }
    Ok((summary, without_department))
}

fn regress(config: &RunConfig, store: &ArtifactStore) -> Result<StageOutput> {
    let regress = config
        .regress
        .as_ref()
        .ok_or_else(|| Error::Config("no regress section".into()))?;
    let events: Vec<EventRecord> = store.read_jsonl("dedup", "events")?;
    let (summary, _) = regress_events(&events, regress)?;
    let counts = RegressCounts {
        events: events.len(),
        variants: summary.variants.len(),
        failed: summary.failures(),
        flagged: summary.variants.iter().filter(|v| v.flagged).count(),
    };
    let mut out = store.begin("regress");
    store.put(&mut out, "summary", "csv", summary_csv(&summary)?.as_bytes())?;
    store.put_json(&mut out, "grid", &summary)?;
    for (i, v) in summary.variants.iter().enumerate() {
        if let Some(r) = &v.result {
            store.put(&mut out, &format!("table{:02}", i + 1), "csv", table_csv(r)?.as_bytes())?;
        }
    }
    store.put_json(&mut out, "counts", &counts)?;
    Ok(out)
}

/// Assembles the report from the committed stage counts.
pub fn build_report(store: &ArtifactStore) -> Result<PipelineReport> {
    let events: Vec<EventRecord> = store.read_jsonl("dedup", "events")?;
    let (events_by_year, events_by_type) = tallies(&events);
    let link = if store.has("link", "counts") {
        Some(store.read_json("link", "counts")?)
    } else {
        None
    };
    let regress = if store.has("regress", "counts") {
        Some(store.read_json("regress", "counts")?)
    } else {
        None
    };
    Ok(PipelineReport {
        ingest: store.read_json("ingest", "counts")?,
        extract: store.read_json("extract", "counts")?,
        filter: store.read_json::<FilterReport>("filter", "report")?,
        geocode: store.read_json("geocode", "counts")?,
        dedup: store.read_json("dedup", "counts")?,
        events_by_year,
        events_by_type,
        link,
        regress,
    })
}

fn report_stage(store: &ArtifactStore) -> Result<StageOutput> {
    let report = build_report(store)?;
    report.reconcile()?;
    let mut out = store.begin("report");
    store.put_json(&mut out, "report", &report)?;
    store.put(&mut out, "summary", "txt", report.render().as_bytes())?;
    Ok(out)
}

/// Final events of a run directory.
pub fn load_events(store: &ArtifactStore) -> Result<Vec<EventRecord>> {
    store.read_jsonl("dedup", "events")
}

/// Scores the committed extraction records against gold labels.
pub fn evaluate(store: &ArtifactStore, gold: &Path) -> Result<AccuracyTable> {
    let records: Vec<ExtractionRecord> = store.read_jsonl("extract", "records")?;
    let labels = load_gold_labels(gold)?;
    evaluate_extraction(&records, &labels)
}

/// Manifest of the last ingest.
pub fn load_manifest(store: &ArtifactStore) -> Result<CorpusManifest> {
    store.read_json("ingest", "manifest")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_lists() {
        assert_eq!(Stage::parse_list("dedup, extract,dedup").unwrap(), [Stage::Extract, Stage::Dedup]);
        assert_eq!(Stage::parse_list("all").unwrap().len(), 8);
        assert!(Stage::parse_list("extract,index").unwrap_err().is_validation());
        assert!(Stage::parse_list(" ").unwrap_err().is_validation());
    }

    #[test]
    fn dependencies() {
        assert!(depends_on(Stage::Report, Stage::Ingest));
        assert!(depends_on(Stage::Link, Stage::Dedup));
        assert!(depends_on(Stage::Dedup, Stage::Filter));
        assert!(!depends_on(Stage::Link, Stage::Regress));
        assert!(!depends_on(Stage::Extract, Stage::Dedup));
    }
}
