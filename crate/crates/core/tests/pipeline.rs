mod common;

use std::collections::BTreeSet;
use std::fs;

use common::{fixture_copy, fixture_dir, snapshot};
use eventmine::dedup::EventCluster;
use eventmine::extraction::EvalField;
use eventmine::pipeline::*;
use eventmine::synth::fixture::{write_fixture, FixtureExpectation, FixtureParams};

fn expectation() -> FixtureExpectation {
    serde_json::from_str(&fs::read_to_string(fixture_dir().join("expected.json")).unwrap()).unwrap()
}

fn full_run(dir: &std::path::Path) -> (RunConfig, PipelineReport) {
    let cfg = RunConfig::load(&dir.join("run.json")).unwrap();
    let out = run(&cfg, &configured_stages(&cfg), &RunOptions::default()).unwrap();
    (cfg, out.report.unwrap())
}

#[test]
fn committed_fixture_matches_generator() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), &FixtureParams::default()).unwrap();
    let fresh = snapshot(dir.path());
    let committed = snapshot(&fixture_dir());
    assert_eq!(fresh.keys().collect::<Vec<_>>(), committed.keys().collect::<Vec<_>>());
    for (k, v) in &fresh {
        assert!(committed[k] == *v, "{k} differs from the generator output");
    }
}

#[test]
fn full_run_reproduces_fixture_counts() {
    let exp = expectation();
    let dir = fixture_copy();
    let (cfg, report) = full_run(dir.path());
    report.reconcile().unwrap();

    assert_eq!(report.ingest.total_loaded, exp.total_loaded);
    assert_eq!(report.ingest.dropped_malformed, exp.dropped_malformed);
    assert_eq!(report.ingest.dropped_short, exp.dropped_short);
    assert_eq!(report.ingest.retained, exp.retained_articles);
    assert_eq!(report.extract.transport_failures, exp.transport_failures);
    assert_eq!(report.extract.parse_failures, exp.parse_failures);
    assert_eq!(report.extract.extracted, exp.extracted);
    assert_eq!(report.filter.not_single_incident, exp.not_single_incident);
    assert_eq!(report.filter.multi_event, exp.multi_event);
    assert_eq!(report.filter.retained, exp.filtered);
    assert_eq!(report.geocode.geocoded, exp.geocoded);
    assert!(report.link.is_some() && report.regress.is_some());

    // every merge joins articles about the same planted event
    let store = ArtifactStore::open(&cfg.output_dir).unwrap();
    let clusters: Vec<EventCluster> = store.read_jsonl("dedup", "clusters").unwrap();
    let group_of = |id: &str| exp.true_groups.iter().find(|(_, v)| v.iter().any(|x| x == id)).map(|(k, _)| k.clone());
    for c in &clusters {
        let groups: BTreeSet<_> = c.members.iter().map(|m| group_of(m)).collect();
        assert_eq!(groups.len(), 1, "cluster {:?} mixes events", c.members);
    }
    let members: usize = clusters.iter().map(|c| c.members.len()).sum();
    assert_eq!(members, exp.filtered);

    let events = load_events(&store).unwrap();
    assert_eq!(events.len(), report.dedup.events_retained);
    let ids: Vec<&str> = events.iter().map(|e| e.id()).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn evaluate_reproduces_planted_disagreements() {
    let exp = expectation();
    let dir = fixture_copy();
    let cfg = RunConfig::load(&dir.path().join("run.json")).unwrap();
    run(&cfg, &[Stage::Ingest, Stage::Extract], &RunOptions::default()).unwrap();
    let store = ArtifactStore::open(&cfg.output_dir).unwrap();
    let table = evaluate(&store, cfg.gold.as_ref().unwrap()).unwrap();
    for (field, (labeled, correct)) in &exp.gold {
        let f: EvalField = field.parse().unwrap();
        let acc = table.get(f);
        assert_eq!((acc.labeled, acc.correct), (*labeled, *correct), "{field}");
    }
}

#[test]
fn dedup_rerun_leaves_upstream_artifacts_alone() {
    let dir = fixture_copy();
    let (mut cfg, first) = full_run(dir.path());
    let before = snapshot(&cfg.output_dir);
    let index_before = ArtifactStore::open(&cfg.output_dir).unwrap().index().clone();

    cfg.dedup.params.cutoff = 0.2;
    run(&cfg, &[Stage::Dedup, Stage::Report], &RunOptions::default()).unwrap();
    let store = ArtifactStore::open(&cfg.output_dir).unwrap();
    for stage in ["ingest", "extract", "filter", "geocode"] {
        assert_eq!(store.index().stages[stage], index_before.stages[stage], "{stage}");
    }
    let after = snapshot(&cfg.output_dir);
    for (name, bytes) in &before {
        if name != INDEX_FILE {
            assert_eq!(&after[name], bytes, "{name} was rewritten");
        }
    }
    // link and regress were computed from the old clusters
    assert!(!store.has("link", "counts"));
    let report: PipelineReport = store.read_json("report", "report").unwrap();
    assert!(report.link.is_none());
    assert!(report.dedup.clusters <= first.dedup.clusters);
    assert_eq!(report.dedup.cutoff, 0.2);
}

#[test]
fn missing_template_writes_nothing() {
    let dir = fixture_copy();
    let path = dir.path().join("run.json");
    let text = fs::read_to_string(&path).unwrap().replacen('{', "{\n  \"template\": \"missing.txt\",", 1);
    fs::write(&path, text).unwrap();
    let err = RunConfig::load(&path).unwrap_err();
    assert!(err.is_validation());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn stage_without_inputs_is_rejected_before_running() {
    let dir = fixture_copy();
    let cfg = RunConfig::load(&dir.path().join("run.json")).unwrap();
    let err = run(&cfg, &[Stage::Dedup], &RunOptions::default()).unwrap_err();
    assert!(err.is_validation());
    assert!(err.to_string().contains("geocode"));
    assert!(!cfg.output_dir.exists());
}

#[test]
fn failed_stage_keeps_previous_artifacts() {
    let dir = fixture_copy();
    let (cfg, _) = full_run(dir.path());
    let before = fs::read(cfg.output_dir.join(INDEX_FILE)).unwrap();
    // a scope answer disappears: the transport fails hard
    let scope_dir = dir.path().join("fixtures/scope");
    let victim = fs::read_dir(&scope_dir).unwrap().next().unwrap().unwrap().path();
    fs::remove_file(victim).unwrap();
    let err = run(&cfg, &[Stage::Filter], &RunOptions::default()).unwrap_err();
    assert!(!err.is_validation());
    assert_eq!(fs::read(cfg.output_dir.join(INDEX_FILE)).unwrap(), before);
}

#[test]
fn export_filters_run_output() {
    let dir = fixture_copy();
    let (cfg, _) = full_run(dir.path());
    let store = ArtifactStore::open(&cfg.output_dir).unwrap();
    let events = load_events(&store).unwrap();
    let filters = ExportFilters {
        years: ExportFilters::parse_years("2010").unwrap(),
        attackers: ExportFilters::parse_attackers("farc,eln,government").unwrap(),
        types: BTreeSet::new(),
    };
    let expected = events.iter().filter(|e| filters.matches(e)).count();
    assert!(expected > 0 && expected < events.len());

    let csv_out = dir.path().join("export/events.csv");
    let note = export_events(&events, ExportFormat::Csv, &filters, &csv_out).unwrap();
    assert_eq!(note.written, expected);
    let mut reader = csv::Reader::from_path(&csv_out).unwrap();
    assert_eq!(reader.records().count(), expected);

    let gj = dir.path().join("export/events.geojson");
    let note = export_events(&events, ExportFormat::Geojson, &filters, &gj).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&gj).unwrap()).unwrap();
    assert_eq!(v["features"].as_array().unwrap().len(), note.written);
    assert_eq!(note.written + note.excluded_without_coordinates, expected);
}
