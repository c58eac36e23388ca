//! The small end-to-end fixture: a corpus with canned LLM answers for
//! the fixture transport, a gazetteer, pair labels, a reference dataset,
//! eradication data, gold labels and a run configuration.
//!
//! Every damaged input is planted on purpose and recorded in
//! `expected.json`, so the stage counts of a run are known in advance.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::corpus::{generate_corpus, CorpusParams, EventKind, Perpetrator, SynthCorpus};
use super::towns::{gazetteer_csv, TOWNS};
use crate::error::{Error, Result};
use crate::extraction::{EvalField, Tri};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureParams {
    pub articles: usize,
    pub seed: u64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams { articles: 50, seed: 7 }
    }
}

/// What a correct run over the fixture must report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureExpectation {
    pub total_loaded: usize,
    pub dropped_malformed: usize,
    pub dropped_short: usize,
    pub retained_articles: usize,
    pub transport_failures: usize,
    pub parse_failures: usize,
    pub extracted: usize,
    pub not_single_incident: usize,
    pub multi_event: usize,
    pub filtered: usize,
    pub geocoded: usize,
    /// True event of every article that survives filtering.
    pub true_groups: BTreeMap<String, Vec<String>>,
    /// field -> (labeled, correct)
    pub gold: BTreeMap<String, (usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Normal,
    Malformed,
    Short,
    MissingResponse,
    Damaged,
    NotSingle,
    MultiEvent,
    Focal,
}

const DAMAGED: [&str; 2] = [
    "Lo siento, no puedo procesar este artículo porque el texto está incompleto.",
    "   ",
];

fn write(path: &Path, content: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn corpus_params(p: &FixtureParams) -> CorpusParams {
    CorpusParams {
        articles: p.articles,
        duplicate_rate: 0.3,
        start_year: 2010,
        years: 1,
        seed: p.seed,
    }
}

/// Writes the fixture into `dir` (created if missing) and returns the
/// expectation that is also saved as `expected.json`.
pub fn write_fixture(dir: &Path, params: &FixtureParams) -> Result<FixtureExpectation> {
    if params.articles < 20 {
        return Err(Error::Validation("the fixture needs at least 20 articles".into()));
    }
    let corpus = generate_corpus(&corpus_params(params));
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..corpus.articles.len()).collect();
    order.shuffle(&mut rng);
    let mut roles = vec![Role::Normal; corpus.articles.len()];
    let plan = [
        (Role::Malformed, 1),
        (Role::Short, 3),
        (Role::MissingResponse, 1),
        (Role::Damaged, DAMAGED.len()),
        (Role::NotSingle, 3),
        (Role::MultiEvent, 2),
        (Role::Focal, 3),
    ];
    let mut next = order.into_iter();
    for (role, count) in plan {
        for _ in 0..count {
            roles[next.next().expect("enough articles")] = role;
        }
    }

    let mut exp = FixtureExpectation::default();
    let mut corpus_lines = Vec::new();
    let mut damaged = DAMAGED.iter();
    let mut survivors = Vec::new();
    for (i, a) in corpus.articles.iter().enumerate() {
        let id = &a.article.article_id;
        let role = roles[i];
        exp.total_loaded += 1;
        let mut article = a.article.clone();
        match role {
            Role::Malformed => {
                exp.dropped_malformed += 1;
                let mut row = serde_json::to_value(&article)?;
                row["publication_date"] = json!("2010-13-45");
                corpus_lines.push(row.to_string());
                continue;
            }
            Role::Short => {
                exp.dropped_short += 1;
                let cut = article.text.find(". ").map_or(article.text.len(), |k| k + 1);
                article.text = article.text[..cut.min(300)].to_string();
                corpus_lines.push(serde_json::to_string(&article)?);
                continue;
            }
            _ => corpus_lines.push(serde_json::to_string(&article)?),
        }
        exp.retained_articles += 1;
        let extract = dir.join("fixtures").join("extract").join(format!("{id}.txt"));
        let scope = dir.join("fixtures").join("scope").join(format!("{id}.txt"));
        match role {
            Role::MissingResponse => {
                exp.transport_failures += 1;
                continue;
            }
            Role::Damaged => {
                exp.parse_failures += 1;
                write(&extract, damaged.next().unwrap())?;
                continue;
            }
            _ => {}
        }
        exp.extracted += 1;
        let mut record = a.record.clone();
        if role == Role::NotSingle {
            record.is_single_incident = Tri::No;
            exp.not_single_incident += 1;
            write(&extract, record.to_response())?;
            continue;
        }
        write(&extract, record.to_response())?;
        let answer = match role {
            Role::MultiEvent => "Multiple distinct events equally.",
            Role::Focal => "One focal event and other events mentioned.",
            _ => "One specific event.",
        };
        write(&scope, answer)?;
        if role == Role::MultiEvent {
            exp.multi_event += 1;
            continue;
        }
        exp.filtered += 1;
        if !record.locations.is_empty() {
            exp.geocoded += 1;
        }
        exp.true_groups
            .entry(corpus.events[a.event].event_id.clone())
            .or_default()
            .push(id.clone());
        survivors.push(i);
    }
    write(&dir.join("corpus.jsonl"), corpus_lines.join("\n") + "\n")?;
    write(&dir.join("gazetteer.csv"), gazetteer_csv())?;
    write(&dir.join("labels.csv"), labels_csv(&corpus))?;
    write_reference(&dir.join("reference"), &corpus, &mut rng)?;
    write(&dir.join("eradication.csv"), eradication_csv(&corpus, &mut rng))?;
    let (gold, tallies) = gold_csv(&corpus, &survivors);
    exp.gold = tallies;
    write(&dir.join("gold.csv"), gold)?;
    write(&dir.join("specs.json"), serde_json::to_string_pretty(&json!({"grid": {"lags": [1, 2, 3, 4, 5]}}))? + "\n")?;
    let run = json!({
        "corpus": {"path": "corpus.jsonl", "format": "jsonl"},
        "transport": {"kind": "fixture", "dir": "fixtures"},
        "geocoder": {"kind": "gazetteer", "path": "gazetteer.csv"},
        "geocache": "cache/geocache.jsonl",
        "dedup": {"labels": "labels.csv"},
        "linkage": {"reference_dir": "reference"},
        "regress": {"eradication": "eradication.csv", "specs": "specs.json"},
        "gold": "gold.csv",
        "output_dir": "out",
        "seed": params.seed,
    });
    write(&dir.join("run.json"), serde_json::to_string_pretty(&run)? + "\n")?;
    write(&dir.join("expected.json"), serde_json::to_string_pretty(&exp)? + "\n")?;
    Ok(exp)
}

fn labels_csv(corpus: &SynthCorpus) -> String {
    let mut out = String::from("article_id_a,article_id_b,is_duplicate,event_group_id\n");
    for l in corpus.labels(31) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            l.article_id_a,
            l.article_id_b,
            u8::from(l.is_duplicate),
            l.event_group_id
        ));
    }
    out
}

fn reference_file(kind: EventKind) -> &'static str {
    match kind {
        EventKind::Murder => "asesinatos_selectivos.csv",
        EventKind::Massacre => "masacres.csv",
        EventKind::Kidnapping => "secuestros.csv",
        EventKind::Attack => "atentados_terroristas.csv",
        EventKind::Combat => "acciones_belicas.csv",
        EventKind::Threat => "",
    }
}

fn reference_party(p: Perpetrator) -> &'static str {
    match p {
        Perpetrator::Farc => "FARC-EP",
        Perpetrator::Eln => "ELN",
        Perpetrator::Auc => "Grupo paramilitar",
        Perpetrator::Bacrim => "Bacrim",
        Perpetrator::Unknown => "Sin información",
    }
}

const REFERENCE_HEADER: &str =
    "id,fecha,municipio,departamento,latitud,longitud,presunto_responsable,total_victimas\n";

/// Half of the events reappear in the reference data, some without
/// coordinates; unrelated rows and an excluded landmine file are added.
fn write_reference(dir: &Path, corpus: &SynthCorpus, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut files: BTreeMap<&str, String> = BTreeMap::new();
    let mut k = 0;
    let mut row = |file: &'static str, date: String, town: usize, coords: bool, party: &str, victims: u32, rng: &mut ChaCha8Rng| {
        k += 1;
        let t = &TOWNS[town];
        let (lat, lon) = if coords {
            (
                format!("{:.5}", t.latitude + rng.random_range(-0.03..0.03)),
                format!("{:.5}", t.longitude + rng.random_range(-0.03..0.03)),
            )
        } else {
            (String::new(), String::new())
        };
        files.entry(file).or_insert_with(|| REFERENCE_HEADER.to_string()).push_str(&format!(
            "R{k:04},{date},{},{},{lat},{lon},{party},{victims}\n",
            t.name, t.department
        ));
    };
    for e in &corpus.events {
        let file = reference_file(e.kind);
        if file.is_empty() || rng.random::<f64>() < 0.5 {
            continue;
        }
        let date = if rng.random::<f64>() < 0.2 {
            e.date.format("%Y-%m").to_string()
        } else {
            e.date.format("%d/%m/%Y").to_string()
        };
        let coords = rng.random::<f64>() < 0.7;
        row(file, date, e.town, coords, reference_party(e.perpetrator), e.victims, rng);
    }
    for _ in 0..10 {
        let kinds = [EventKind::Murder, EventKind::Kidnapping, EventKind::Combat];
        let kind = kinds[rng.random_range(0..kinds.len())];
        let month = rng.random_range(1..=12);
        let town = rng.random_range(0..TOWNS.len());
        let parties = ["FARC-EP", "ELN", "Agentes del Estado", "Grupo paramilitar"];
        let party = parties[rng.random_range(0..parties.len())];
        row(reference_file(kind), format!("2010-{month:02}-{:02}", rng.random_range(1..=28)), town, true, party, 1, rng);
    }
    for _ in 0..3 {
        let town = rng.random_range(0..TOWNS.len());
        row("minas.csv", format!("2010-{:02}-10", rng.random_range(1..=12)), town, true, "Sin información", 1, rng);
    }
    let mut mapping_files = BTreeMap::new();
    for (file, content) in &files {
        let category = match *file {
            "asesinatos_selectivos.csv" => "killing",
            "masacres.csv" => "massacre",
            "secuestros.csv" => "kidnapping",
            "atentados_terroristas.csv" => "terrorist_attack",
            "acciones_belicas.csv" => "attack",
            _ => "exclude",
        };
        mapping_files.insert(file.to_string(), category);
        write(&dir.join(file), content)?;
    }
    let mapping = json!({
        "columns": {
            "ref_id": "id",
            "date": "fecha",
            "municipality": "municipio",
            "department": "departamento",
            "latitude": "latitud",
            "longitude": "longitud",
            "parties": "presunto_responsable",
            "victim_count": "total_victimas"
        },
        "party_separator": ";",
        "files": mapping_files,
    });
    write(&dir.join("mapping.json"), serde_json::to_string_pretty(&mapping)? + "\n")
}

fn eradication_csv(corpus: &SynthCorpus, rng: &mut ChaCha8Rng) -> String {
    let mut towns: Vec<usize> = corpus.events.iter().map(|e| e.town).collect();
    towns.sort_unstable();
    towns.dedup();
    let mut out = String::from("municipality,department,year,hectares_manual,hectares_aerial\n");
    for year in 2004..=2010 {
        for &t in &towns {
            let town = &TOWNS[t];
            let manual = if rng.random::<f64>() < 0.3 { 0.0 } else { (rng.random::<f64>() * 2000.0).round() };
            let aerial = if rng.random::<f64>() < 0.5 { 0.0 } else { (rng.random::<f64>() * 8000.0).round() };
            out.push_str(&format!("{},{},{year},{manual},{aerial}\n", town.name, town.department));
        }
    }
    out
}

/// Ten gold labels per field on surviving articles with a planted number
/// of disagreements: victim count 1, location 2, attacker group 0, any
/// violence 1.
fn gold_csv(corpus: &SynthCorpus, survivors: &[usize]) -> (String, BTreeMap<String, (usize, usize)>) {
    let mut out = String::from("article_id,field,value\n");
    let mut tallies = BTreeMap::new();
    let plan = [
        (EvalField::VictimCount, 1),
        (EvalField::Location, 2),
        (EvalField::AttackerGroup, 0),
        (EvalField::AnyViolence, 1),
    ];
    for (field, wrong) in plan {
        let picked: Vec<usize> = survivors.iter().copied().take(10).collect();
        for (k, &i) in picked.iter().enumerate() {
            let r = &corpus.articles[i].record;
            let disagree = k < wrong;
            let value = match field {
                EvalField::VictimCount => {
                    let n = r.victim_count.map_or(-1, i64::from);
                    (if disagree { n + 10 } else { n }).to_string()
                }
                EvalField::Location => match (disagree, r.locations.first()) {
                    (true, _) => "Leticia".to_string(),
                    (false, Some(l)) => l.clone(),
                    (false, None) => "-1".to_string(),
                },
                EvalField::AttackerGroup => {
                    if r.attackers.is_empty() {
                        "-1".to_string()
                    } else {
                        r.attackers.join(";")
                    }
                }
                _ => {
                    let yes = !r.violence_types().is_empty();
                    if yes != disagree { "yes" } else { "no" }.to_string()
                }
            };
            out.push_str(&format!("{},{},\"{}\"\n", r.article_id, field.name(), value));
        }
        tallies.insert(field.name().to_string(), (picked.len(), picked.len() - wrong));
    }
    (out, tallies)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_counts_reconcile() {
        let dir = tempfile::tempdir().unwrap();
        let exp = write_fixture(dir.path(), &FixtureParams::default()).unwrap();
        assert_eq!(exp.total_loaded, 50);
        assert_eq!(exp.total_loaded, exp.dropped_malformed + exp.dropped_short + exp.retained_articles);
        assert_eq!(exp.retained_articles, exp.transport_failures + exp.parse_failures + exp.extracted);
        assert_eq!(exp.extracted, exp.not_single_incident + exp.multi_event + exp.filtered);
        assert!(dir.path().join("reference/mapping.json").exists());
        let again = tempfile::tempdir().unwrap();
        assert_eq!(write_fixture(again.path(), &FixtureParams::default()).unwrap(), exp);
        for f in ["corpus.jsonl", "labels.csv", "gold.csv", "eradication.csv"] {
            assert_eq!(
                fs::read(dir.path().join(f)).unwrap(),
                fs::read(again.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }
}
