//! Labels, classifier training with a group-disjoint held-out split, and
//! pair scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{column_feature, column_names, PairFeatures, FEATURE_NAMES};
use super::forest::{fit_forest, predict_forest, ForestParams, Node};
use crate::digest::sha256_hex;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "eventmine-forest/1";
const TEST_GROUP_FRACTION: f64 = 0.2;
const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLabel {
    pub article_id_a: String,
    pub article_id_b: String,
    pub is_duplicate: bool,
    pub event_group_id: String,
}

impl PairLabel {
    pub fn key(&self) -> (String, String) {
        pair_key(&self.article_id_a, &self.article_id_b)
    }
}

/// Order-independent key of a pair.
pub fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Reads `article_id_a,article_id_b,is_duplicate,event_group_id`.
/// A pair listed twice must carry the same label both times.
pub fn load_labels(path: &Path) -> Result<Vec<PairLabel>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    })?;
    let mut labels = Vec::new();
    let mut seen: BTreeMap<(String, String), bool> = BTreeMap::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let field = |i: usize| row.get(i).map(str::trim).unwrap_or("");
        let (a, b) = (field(0), field(1));
        if a.is_empty() || b.is_empty() || a == b {
            return Err(Error::Validation(format!(
                "{} row {}: a label needs two distinct article ids",
                path.display(),
                line + 2
            )));
        }
        let is_duplicate = parse_bool(field(2)).ok_or_else(|| {
            Error::Validation(format!(
                "{} row {}: is_duplicate must be 0/1 or true/false, got {:?}",
                path.display(),
                line + 2,
                field(2)
            ))
        })?;
        let label = PairLabel {
            article_id_a: a.to_string(),
            article_id_b: b.to_string(),
            is_duplicate,
            event_group_id: field(3).to_string(),
        };
        match seen.insert(label.key(), is_duplicate) {
            Some(prev) if prev != is_duplicate => {
                return Err(Error::Validation(format!(
                    "{}: pair ({a}, {b}) labeled both duplicate and distinct",
                    path.display()
                )))
            }
            Some(_) => continue,
            None => labels.push(label),
        }
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupConfig {
    pub shingle_n: usize,
    pub blocking_window_days: u32,
    pub cutoff: f64,
    pub forest_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_tree_depth: Option<usize>,
    pub seed: u64,
    pub downsample_negatives: bool,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            shingle_n: 2,
            blocking_window_days: 31,
            cutoff: 0.95,
            forest_trees: 100,
            max_tree_depth: None,
            seed: 0,
            downsample_negatives: true,
        }
    }
}

impl DedupConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return Err(Error::Config(format!("dedup cutoff must be in (0,1), got {}", self.cutoff)));
        }
        if self.shingle_n == 0 {
            return Err(Error::Config("dedup shingle_n must be at least 1".into()));
        }
        if self.forest_trees == 0 {
            return Err(Error::Config("dedup forest_trees must be at least 1".into()));
        }
        Ok(())
    }
}

/// Held-out classification metrics. A metric is `None` when its
/// denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub positives: usize,
    pub negatives: usize,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f_measure: Option<f64>,
    pub auc: Option<f64>,
}

/// Area under the ROC curve via the Mann-Whitney statistic (ties count 1/2).
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut ranked: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    let n_pos = ranked.iter().filter(|r| r.1).count();
    let n_neg = ranked.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < ranked.len() {
        let mut j = i;
        while j < ranked.len() && ranked[j].0 == ranked[i].0 {
            j += 1;
        }
        // average 1-based rank of the tie block
        let avg = (i + 1 + j) as f64 / 2.0;
        rank_sum += avg * ranked[i..j].iter().filter(|r| r.1).count() as f64;
        i = j;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

pub fn classification_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> Metrics {
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let sensitivity = ratio(tp, tp + fn_);
    let precision = ratio(tp, tp + fp);
    let f_measure = match (precision, sensitivity) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Metrics {
        positives: tp + fn_,
        negatives: tn + fp,
        accuracy: ratio(tp + tn, labels.len()),
        sensitivity,
        specificity: ratio(tn, tn + fp),
        precision,
        f_measure,
        auc: auc(scores, labels),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub config: DedupConfig,
    pub config_digest: String,
    pub training_digest: String,
    pub train_pairs: usize,
    pub train_positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub format: String,
    /// Classifier input columns, in order.
    pub columns: Vec<String>,
    pub feature_importances: Vec<FeatureImportance>,
    pub metadata: TrainingMetadata,
    pub trees: Vec<Node>,
}

impl TrainedClassifier {
    pub fn check_schema(&self) -> Result<()> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Schema(format!(
                "model format {:?}, expected {MODEL_FORMAT:?}",
                self.format
            )));
        }
        if self.columns != column_names() {
            return Err(Error::Schema(
                "model columns do not match the pair feature schema".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: TrainedClassifier = serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        model.check_schema()?;
        Ok(model)
    }

    pub fn importance(&self, feature: &str) -> Option<f64> {
        self.feature_importances
            .iter()
            .find(|f| f.feature == feature)
            .map(|f| f.importance)
    }

    /// Score without re-checking the schema; callers that validated the
    /// model once use this in hot loops.
    pub fn score_unchecked(&self, features: &PairFeatures) -> f64 {
        predict_forest(&self.trees, &features.to_columns())
    }
}

/// Probability that the pair is a duplicate: the mean of the trees' leaf
/// class fractions.
pub fn score_pair(model: &TrainedClassifier, features: &PairFeatures) -> Result<f64> {
    model.check_schema()?;
    Ok(model.score_unchecked(features))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub groups: usize,
    pub train_groups: usize,
    pub test_groups: usize,
    pub train_pairs: usize,
    pub test_pairs_unbalanced: usize,
    pub test_pairs_balanced: usize,
    /// Metrics on the balanced held-out set (threshold 0.5).
    pub balanced: Metrics,
    /// Metrics on every held-out pair before downsampling.
    pub unbalanced: Metrics,
}

/// Event group each labeled pair belongs to: its `event_group_id`, or
/// failing that the group of a duplicate pair sharing article A, or a
/// singleton group named after article A.
fn pair_groups(labels: &[PairLabel]) -> Vec<String> {
    let mut article_group: BTreeMap<&str, &str> = BTreeMap::new();
    for l in labels.iter().filter(|l| l.is_duplicate && !l.event_group_id.is_empty()) {
        for id in [&l.article_id_a, &l.article_id_b] {
            article_group.entry(id).or_insert(&l.event_group_id);
        }
    }
    labels
        .iter()
        .map(|l| {
            if !l.event_group_id.is_empty() {
                l.event_group_id.clone()
            } else if let Some(g) = article_group.get(l.article_id_a.as_str()) {
                g.to_string()
            } else {
                format!("_{}", l.article_id_a)
            }
        })
        .collect()
}

fn balance(indices: &mut Vec<usize>, labels: &[bool], rng: &mut ChaCha8Rng) {
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = indices.iter().partition(|&&i| labels[i]);
    if neg.len() > pos.len() {
        neg.shuffle(rng);
        neg.truncate(pos.len());
    } else if pos.len() > neg.len() {
        pos.shuffle(rng);
        pos.truncate(neg.len());
    }
    pos.extend(neg);
    pos.sort_unstable();
    *indices = pos;
}

fn digest_rows(rows: &[&PairLabel], features: &[Vec<Option<f64>>]) -> String {
    let mut buf = String::new();
    for (label, cols) in rows.iter().zip(features) {
        buf.push_str(&format!(
            "{}|{}|{}|{:?}\n",
            label.article_id_a, label.article_id_b, label.is_duplicate, cols
        ));
    }
    sha256_hex(buf.as_bytes())
}

/// Trains the duplicate classifier.
///
/// Event groups are shuffled with the seed and 20% of them held out, so no
/// event contributes pairs to both sides. Training negatives are
/// downsampled to the number of positives when configured; the held-out
/// set is always balanced the same way for the reported metrics.
pub fn train_classifier(
    labels: &[PairLabel],
    features: &BTreeMap<(String, String), PairFeatures>,
    config: &DedupConfig,
) -> Result<(TrainedClassifier, TrainingReport)> {
    config.validate()?;
    let positives = labels.iter().filter(|l| l.is_duplicate).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::Training(
            "labels contain a single class; need both duplicate and distinct pairs".into(),
        ));
    }
    let columns: Vec<Vec<Option<f64>>> = labels
        .iter()
        .map(|l| {
            features
                .get(&l.key())
                .map(PairFeatures::to_columns)
                .ok_or_else(|| {
                    Error::Consistency(format!(
                        "no features for labeled pair ({}, {})",
                        l.article_id_a, l.article_id_b
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let y: Vec<bool> = labels.iter().map(|l| l.is_duplicate).collect();

    let group_of = pair_groups(labels);
    let mut groups: Vec<&String> = group_of.iter().collect::<BTreeSet<_>>().into_iter().collect();
    if groups.len() < 2 {
        return Err(Error::Training(format!(
            "need at least 2 event groups, found {}",
            groups.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    groups.shuffle(&mut rng);
    let n_test = ((groups.len() as f64 * TEST_GROUP_FRACTION).round() as usize).clamp(1, groups.len() - 1);
    let test_groups: BTreeSet<&String> = groups[..n_test].iter().copied().collect();

    let (mut train, test): (Vec<usize>, Vec<usize>) =
        (0..labels.len()).partition(|&i| !test_groups.contains(&group_of[i]));
    let train_pos = train.iter().filter(|&&i| y[i]).count();
    if train_pos == 0 || train_pos == train.len() {
        return Err(Error::Training(
            "training split contains a single class; label more event groups".into(),
        ));
    }
    if config.downsample_negatives {
        balance(&mut train, &y, &mut rng);
    }
    let test_unbalanced = test.clone();
    let mut test_balanced = test;
    balance(&mut test_balanced, &y, &mut rng);

    let x_train: Vec<Vec<Option<f64>>> = train.iter().map(|&i| columns[i].clone()).collect();
    let y_train: Vec<bool> = train.iter().map(|&i| y[i]).collect();
    let params = ForestParams {
        trees: config.forest_trees,
        max_depth: config.max_tree_depth,
        max_features: None,
        bootstrap: true,
        seed: config.seed,
    };
    let fitted = fit_forest(&x_train, &y_train, &params);

    let mut per_feature = vec![0.0; FEATURE_NAMES.len()];
    for (col, imp) in fitted.column_importances.iter().enumerate() {
        per_feature[column_feature(col)] += imp;
    }
    let feature_importances = FEATURE_NAMES
        .iter()
        .zip(per_feature)
        .map(|(name, importance)| FeatureImportance {
            feature: name.to_string(),
            importance,
        })
        .collect();

    let config_json = serde_json::to_string(config)?;
    let train_rows: Vec<&PairLabel> = train.iter().map(|&i| &labels[i]).collect();
    let model = TrainedClassifier {
        format: MODEL_FORMAT.to_string(),
        columns: column_names(),
        feature_importances,
        metadata: TrainingMetadata {
            seed: config.seed,
            config: config.clone(),
            config_digest: sha256_hex(config_json.as_bytes()),
            training_digest: digest_rows(&train_rows, &x_train),
            train_pairs: train.len(),
            train_positives: y_train.iter().filter(|&&v| v).count(),
        },
        trees: fitted.trees,
    };

    let evaluate = |idx: &[usize]| {
        let scores: Vec<f64> = idx.iter().map(|&i| predict_forest(&model.trees, &columns[i])).collect();
        let truth: Vec<bool> = idx.iter().map(|&i| y[i]).collect();
        classification_metrics(&scores, &truth, DECISION_THRESHOLD)
    };
    let report = TrainingReport {
        groups: groups.len(),
        train_groups: groups.len() - n_test,
        test_groups: n_test,
        train_pairs: train.len(),
        test_pairs_unbalanced: test_unbalanced.len(),
        test_pairs_balanced: test_balanced.len(),
        balanced: evaluate(&test_balanced),
        unbalanced: evaluate(&test_unbalanced),
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;
    use crate::dedup::features::MatchLevel;

    fn separable_fixture() -> (Vec<PairLabel>, BTreeMap<(String, String), PairFeatures>) {
        let mut labels = Vec::new();
        let mut features = BTreeMap::new();
        for g in 0..30 {
            let (a, b, c) = (format!("g{g}a"), format!("g{g}b"), format!("g{g}c"));
            let group = format!("e{g}");
            labels.push(PairLabel {
                article_id_a: a.clone(),
                article_id_b: b.clone(),
                is_duplicate: true,
                event_group_id: group.clone(),
            });
            labels.push(PairLabel {
                article_id_a: c.clone(),
                article_id_b: a.clone(),
                is_duplicate: false,
                event_group_id: group.clone(),
            });
            let mut pos = PairFeatures::all_missing();
            pos.article_text_sim = 0.8 + (g as f64) / 200.0;
            pos.status[7] = Some(MatchLevel::BothYes);
            let mut neg = PairFeatures::all_missing();
            neg.article_text_sim = 0.1 + (g as f64) / 200.0;
            neg.status[7] = Some(MatchLevel::Mismatch);
            features.insert(pair_key(&a, &b), pos);
            features.insert(pair_key(&a, &c), neg);
        }
        (labels, features)
    }

    #[test]
    fn separable_training() {
        let (labels, features) = separable_fixture();
        let config = DedupConfig { forest_trees: 20, seed: 5, ..Default::default() };
        let (model, report) = train_classifier(&labels, &features, &config).unwrap();
        assert_eq!(report.balanced.sensitivity, Some(1.0));
        assert_eq!(report.balanced.specificity, Some(1.0));
        let total: f64 = model.feature_importances.iter().map(|f| f.importance).sum();
        assert!((total - 1.0).abs() < 1e-9);
        let f = &features[&pair_key("g0a", "g0b")];
        assert!(score_pair(&model, f).unwrap() >= 0.5);
        let p = score_pair(&model, &PairFeatures::all_missing()).unwrap();
        assert!((0.0..=1.0).contains(&p));

        let (again, _) = train_classifier(&labels, &features, &config).unwrap();
        assert_eq!(model.to_json().unwrap(), again.to_json().unwrap());
    }

    #[test]
    fn single_class_is_fatal() {
        let (labels, features) = separable_fixture();
        let only_pos: Vec<_> = labels.into_iter().filter(|l| l.is_duplicate).collect();
        let err = train_classifier(&only_pos, &features, &DedupConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
    }

    #[test]
    fn schema_mismatch_is_fatal() {
        let (labels, features) = separable_fixture();
        let config = DedupConfig { forest_trees: 2, ..Default::default() };
        let (mut model, _) = train_classifier(&labels, &features, &config).unwrap();
        model.columns.pop();
        assert!(matches!(
            score_pair(&model, &PairFeatures::all_missing()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn auc_by_hand() {
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]), Some(0.75));
        assert_eq!(auc(&[0.5, 0.5], &[false, true]), Some(0.5));
        assert_eq!(auc(&[0.5], &[true]), None);
    }

    #[test]
    fn metrics_by_hand() {
        let m = classification_metrics(&[0.9, 0.8, 0.2, 0.6], &[true, true, true, false], 0.5);
        assert_eq!(m.sensitivity, Some(2.0 / 3.0));
        assert_eq!(m.specificity, Some(0.0));
        assert_eq!(m.accuracy, Some(0.5));
        assert_eq!(m.f_measure, Some(2.0 * (2.0 / 3.0) * (2.0 / 3.0) / (4.0 / 3.0)));
    }

    #[test]
    fn load_labels_csv() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "article_id_a,article_id_b,is_duplicate,event_group_id").unwrap();
        writeln!(f, "a1,a2,1,e1").unwrap();
        writeln!(f, "a2,a1,true,e1").unwrap();
        writeln!(f, "a1,a3,0,e1").unwrap();
        let labels = load_labels(f.path()).unwrap();
        assert_eq!(labels.len(), 2);

        writeln!(f, "a3,a1,1,e1").unwrap();
        assert!(load_labels(f.path()).unwrap_err().is_validation());
    }

    #[test]
    fn config_validation() {
        assert!(DedupConfig::default().validate().is_ok());
        assert!(DedupConfig { cutoff: 1.0, ..Default::default() }.validate().is_err());
        assert!(DedupConfig { shingle_n: 0, ..Default::default() }.validate().is_err());
    }
}
