//! Per-field accuracy of extracted records against manual gold labels.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::record::ExtractionRecord;
use crate::error::{Error, Result};
use crate::text::fold_key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalField {
    VictimCount,
    Location,
    AttackerGroup,
    VictimType,
    ViolenceType,
    AnyViolence,
}

impl EvalField {
    pub const ALL: [EvalField; 6] = [
        EvalField::VictimCount,
        EvalField::Location,
        EvalField::AttackerGroup,
        EvalField::VictimType,
        EvalField::ViolenceType,
        EvalField::AnyViolence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvalField::VictimCount => "victim_count",
            EvalField::Location => "location",
            EvalField::AttackerGroup => "attacker_group",
            EvalField::VictimType => "victim_type",
            EvalField::ViolenceType => "violence_type",
            EvalField::AnyViolence => "any_violence",
        }
    }
}

impl FromStr for EvalField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EvalField::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| Error::Validation(format!("unknown evaluation field {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub article_id: String,
    pub field: EvalField,
    /// "-1" or empty means the annotator found no answer in the article.
    pub value: String,
}

#[derive(Debug, Deserialize)]
struct GoldRow {
    article_id: String,
    field: String,
    value: String,
}

/// Reads `article_id,field,value` rows.
pub fn load_gold_labels(path: &Path) -> Result<Vec<GoldLabel>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => Error::Csv(e),
    })?;
    let mut out = Vec::new();
    for row in reader.deserialize::<GoldRow>() {
        let row = row?;
        out.push(GoldLabel {
            article_id: row.article_id,
            field: row.field.parse()?,
            value: row.value,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldAccuracy {
    pub field: EvalField,
    pub labeled: usize,
    pub correct: usize,
    /// `None` when nothing was labeled for the field.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub fields: Vec<FieldAccuracy>,
}

impl AccuracyTable {
    pub fn get(&self, field: EvalField) -> &FieldAccuracy {
        self.fields.iter().find(|f| f.field == field).unwrap()
    }

    /// Plain-text table: Variable / Correct.
    pub fn render(&self) -> String {
        let mut out = String::from("Variable\tLabeled\tCorrect\tAccuracy\n");
        for f in &self.fields {
            let acc = f
                .accuracy
                .map_or_else(|| "undefined".into(), |a| format!("{:.1}%", a * 100.0));
            out.push_str(&format!("{}\t{}\t{}\t{}\n", f.field.name(), f.labeled, f.correct, acc));
        }
        out
    }
}

fn is_missing(v: &str) -> bool {
    let t = v.trim();
    t.is_empty() || t == "-1"
}

fn folded_set<'a>(items: impl IntoIterator<Item = &'a String>) -> BTreeSet<String> {
    items
        .into_iter()
        .map(|s| fold_key(s))
        .filter(|s| !s.is_empty())
        .collect()
}

fn gold_set(value: &str) -> BTreeSet<String> {
    if is_missing(value) {
        return BTreeSet::new();
    }
    value
        .split([',', ';'])
        .map(fold_key)
        .filter(|s| !s.is_empty())
        .collect()
}

fn matches(field: EvalField, record: &ExtractionRecord, gold: &str) -> bool {
    match field {
        EvalField::VictimCount => {
            let expected = if is_missing(gold) {
                None
            } else {
                match gold.trim().parse::<u32>() {
                    Ok(n) => Some(n),
                    Err(_) => return false,
                }
            };
            record.victim_count == expected
        }
        EvalField::Location => {
            let ours = record.locations.first().map(|s| fold_key(s));
            let theirs = (!is_missing(gold)).then(|| fold_key(gold));
            ours == theirs
        }
        EvalField::AttackerGroup => folded_set(&record.attackers) == gold_set(gold),
        EvalField::VictimType => folded_set(&record.victim_types) == gold_set(gold),
        EvalField::ViolenceType => {
            let ours: BTreeSet<String> = record
                .violence_types()
                .into_iter()
                .map(str::to_owned)
                .collect();
            ours == gold_set(gold)
        }
        EvalField::AnyViolence => {
            let ours = !record.violence_types().is_empty();
            match fold_key(gold).as_str() {
                "yes" | "si" | "1" | "true" => ours,
                "no" | "0" | "false" => !ours,
                _ => false,
            }
        }
    }
}

/// Accuracy per field = matching labels / labels for that field.
pub fn evaluate_extraction(
    records: &[ExtractionRecord],
    labels: &[GoldLabel],
) -> Result<AccuracyTable> {
    let by_id: HashMap<&str, &ExtractionRecord> =
        records.iter().map(|r| (r.article_id.as_str(), r)).collect();
    let mut tallies: BTreeMap<EvalField, (usize, usize)> = BTreeMap::new();
    for label in labels {
        let record = by_id.get(label.article_id.as_str()).ok_or_else(|| {
            Error::Consistency(format!("gold label for unknown article {}", label.article_id))
        })?;
        let entry = tallies.entry(label.field).or_default();
        entry.0 += 1;
        if matches(label.field, record, &label.value) {
            entry.1 += 1;
        }
    }
    let fields = EvalField::ALL
        .into_iter()
        .map(|field| {
            let (labeled, correct) = tallies.get(&field).copied().unwrap_or_default();
            FieldAccuracy {
                field,
                labeled,
                correct,
                accuracy: (labeled > 0).then(|| correct as f64 / labeled as f64),
            }
        })
        .collect();
    Ok(AccuracyTable { fields })
}

#[cfg(test)]
mod tests {
    use super::super::record::Tri;
    use super::*;

    fn rec(id: &str, loc: &str) -> ExtractionRecord {
        ExtractionRecord {
            article_id: id.into(),
            locations: vec![loc.into()],
            victim_count: Some(3),
            attackers: vec!["FARC".into(), "ELN".into()],
            is_murder: Tri::Yes,
            ..Default::default()
        }
    }

    fn label(id: &str, field: EvalField, value: &str) -> GoldLabel {
        GoldLabel {
            article_id: id.into(),
            field,
            value: value.into(),
        }
    }

    #[test]
    fn nine_of_ten_locations() {
        let records: Vec<_> = (0..10).map(|i| rec(&format!("a{i}"), "Bogotá")).collect();
        let mut labels: Vec<_> = (0..9)
            .map(|i| label(&format!("a{i}"), EvalField::Location, "bogota"))
            .collect();
        labels.push(label("a9", EvalField::Location, "Medellín"));
        let table = evaluate_extraction(&records, &labels).unwrap();
        assert_eq!(table.get(EvalField::Location).accuracy, Some(0.9));
        assert_eq!(table.get(EvalField::VictimCount).accuracy, None);
    }

    #[test]
    fn field_specific_rules() {
        let records = vec![rec("a", "Cali")];
        let labels = vec![
            label("a", EvalField::VictimCount, "3"),
            label("a", EvalField::AttackerGroup, "eln, Farc"),
            label("a", EvalField::ViolenceType, "murder"),
            label("a", EvalField::AnyViolence, "yes"),
            label("a", EvalField::VictimType, "-1"),
            label("a", EvalField::Location, "CALI"),
        ];
        let table = evaluate_extraction(&records, &labels).unwrap();
        for f in &table.fields {
            assert_eq!(f.accuracy, Some(1.0), "{:?}", f.field);
        }
    }

    #[test]
    fn unknown_article_is_fatal() {
        let err = evaluate_extraction(&[], &[label("zz", EvalField::Location, "x")]);
        assert!(matches!(err, Err(Error::Consistency(_))));
    }
}
