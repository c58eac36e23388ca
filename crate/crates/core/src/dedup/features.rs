//! Pairwise match features for duplicate classification.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::similarity::{profile_cosine, ShingleProfile};
use crate::event::EventRecord;
use crate::extraction::Tri;
use crate::text::fold_key;

/// Agreement of two yes/no answers. Missing when either side is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchLevel {
    BothYes,
    BothNo,
    Mismatch,
}

impl MatchLevel {
    pub const ALL: [MatchLevel; 3] = [MatchLevel::BothYes, MatchLevel::BothNo, MatchLevel::Mismatch];

    pub fn of(a: Tri, b: Tri) -> Option<MatchLevel> {
        match (a, b) {
            (Tri::Yes, Tri::Yes) => Some(MatchLevel::BothYes),
            (Tri::No, Tri::No) => Some(MatchLevel::BothNo),
            (Tri::Unknown, _) | (_, Tri::Unknown) => None,
            _ => Some(MatchLevel::Mismatch),
        }
    }

    fn name(self) -> &'static str {
        match self {
            MatchLevel::BothYes => "both_yes",
            MatchLevel::BothNo => "both_no",
            MatchLevel::Mismatch => "mismatch",
        }
    }
}

/// The nineteen pair features, in importance-table order of definition.
pub const FEATURE_NAMES: [&str; 19] = [
    "article_text_sim",
    "summary_sim",
    "num_days_apart",
    "dist_apart",
    "first_location_equal",
    "locations_equal",
    "words_spanish_equal",
    "violence_equal",
    "murder_status",
    "kidnapping_status",
    "armed_conflict_status",
    "attack_or_injury_status",
    "harassment_or_threats_status",
    "army_status",
    "guerrilla_status",
    "farc_status",
    "auc_status",
    "eln_status",
    "epl_status",
];

const NUMERIC_FEATURES: usize = 8;
const STATUS_FEATURES: usize = 11;
pub const NUM_COLUMNS: usize = NUMERIC_FEATURES + 3 * STATUS_FEATURES;

/// Input columns seen by the classifier: the eight scalar features and a
/// one-hot triple per status feature.
pub fn column_names() -> Vec<String> {
    let mut cols: Vec<String> = FEATURE_NAMES[..NUMERIC_FEATURES]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for name in &FEATURE_NAMES[NUMERIC_FEATURES..] {
        for level in MatchLevel::ALL {
            cols.push(format!("{name}={}", level.name()));
        }
    }
    cols
}

/// Feature index (into [`FEATURE_NAMES`]) that a classifier column belongs to.
pub fn column_feature(column: usize) -> usize {
    if column < NUMERIC_FEATURES {
        column
    } else {
        NUMERIC_FEATURES + (column - NUMERIC_FEATURES) / 3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFeatures {
    pub article_text_sim: f64,
    pub summary_sim: f64,
    pub num_days_apart: u32,
    pub dist_apart_km: Option<f64>,
    pub first_location_equal: Option<bool>,
    pub locations_equal: Option<bool>,
    pub words_spanish_equal: Option<bool>,
    pub violence_equal: Option<bool>,
    /// murder, kidnapping, armed conflict, attack/injury, harassment/threats,
    /// army, guerrilla, FARC, AUC, ELN, EPL
    pub status: [Option<MatchLevel>; STATUS_FEATURES],
}

impl PairFeatures {
    /// Every feature missing; similarities default to zero.
    pub fn all_missing() -> Self {
        PairFeatures {
            article_text_sim: 0.0,
            summary_sim: 0.0,
            num_days_apart: 0,
            dist_apart_km: None,
            first_location_equal: None,
            locations_equal: None,
            words_spanish_equal: None,
            violence_equal: None,
            status: [None; STATUS_FEATURES],
        }
    }

    /// Classifier input; `None` marks a missing value.
    pub fn to_columns(&self) -> Vec<Option<f64>> {
        let b = |v: Option<bool>| v.map(|x| if x { 1.0 } else { 0.0 });
        let mut cols = Vec::with_capacity(NUM_COLUMNS);
        cols.extend([
            Some(self.article_text_sim),
            Some(self.summary_sim),
            Some(self.num_days_apart as f64),
            self.dist_apart_km,
            b(self.first_location_equal),
            b(self.locations_equal),
            b(self.words_spanish_equal),
            b(self.violence_equal),
        ]);
        for status in &self.status {
            for level in MatchLevel::ALL {
                cols.push(Some(if *status == Some(level) { 1.0 } else { 0.0 }));
            }
        }
        cols
    }
}

/// Per-record data reused across all pairs the record takes part in.
#[derive(Debug, Clone)]
pub struct PairInput<'a> {
    pub event: &'a EventRecord,
    text: ShingleProfile,
    summary: ShingleProfile,
    locations: Vec<String>,
    words: BTreeSet<String>,
}

impl<'a> PairInput<'a> {
    pub fn new(event: &'a EventRecord, shingle_n: usize) -> Self {
        let r = &event.record;
        PairInput {
            event,
            text: ShingleProfile::new(&event.text, shingle_n),
            summary: ShingleProfile::new(&r.summary, shingle_n),
            locations: r.locations.iter().map(|l| fold_key(l)).filter(|l| !l.is_empty()).collect(),
            words: r.violence_words.iter().map(|w| fold_key(w)).filter(|w| !w.is_empty()).collect(),
        }
    }
}

fn status_tris(e: &EventRecord) -> [Tri; STATUS_FEATURES] {
    let r = &e.record;
    [
        r.is_murder,
        r.is_kidnapping,
        r.is_armed_conflict,
        r.is_attack_or_injury,
        r.is_harassment_or_threats,
        r.army_combatant,
        r.mentions_guerrilla,
        r.farc_involved,
        r.auc_involved,
        r.eln_involved,
        r.epl_involved,
    ]
}

/// Features for one pair. Symmetric in argument order.
pub fn compute_pair_features(a: &PairInput<'_>, b: &PairInput<'_>) -> PairFeatures {
    let (ea, eb) = (a.event, b.event);
    let num_days_apart = (ea.event_date - eb.event_date).num_days().unsigned_abs() as u32;
    let dist_apart_km = match (&ea.point, &eb.point) {
        (Some(pa), Some(pb)) => Some(pa.distance_km(pb)),
        _ => None,
    };
    let both_listed = !a.locations.is_empty() && !b.locations.is_empty();
    let first_location_equal = both_listed.then(|| a.locations[0] == b.locations[0]);
    let locations_equal = both_listed.then(|| a.locations.iter().any(|l| b.locations.contains(l)));
    let words_spanish_equal = (!a.words.is_empty() && !b.words.is_empty())
        .then(|| !a.words.is_disjoint(&b.words));

    let flags_a = ea.record.violence_flags();
    let flags_b = eb.record.violence_flags();
    let any_known = |f: &[Tri; 5]| f.iter().any(|t| t.is_known());
    let violence_equal = (any_known(&flags_a) && any_known(&flags_b)).then(|| {
        let yes = |f: &[Tri; 5]| f.map(Tri::is_yes);
        yes(&flags_a) == yes(&flags_b)
    });

    let ta = status_tris(ea);
    let tb = status_tris(eb);
    let mut status = [None; STATUS_FEATURES];
    for i in 0..STATUS_FEATURES {
        status[i] = MatchLevel::of(ta[i], tb[i]);
    }

    PairFeatures {
        article_text_sim: profile_cosine(&a.text, &b.text),
        summary_sim: profile_cosine(&a.summary, &b.summary),
        num_days_apart,
        dist_apart_km,
        first_location_equal,
        locations_equal,
        words_spanish_equal,
        violence_equal,
        status,
    }
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;
    use crate::extraction::{ExtractionRecord, MonthYear};
    use crate::geocode::GeoPoint;

    fn event(id: &str, day: u32, locations: &[&str]) -> EventRecord {
        EventRecord {
            record: ExtractionRecord {
                article_id: id.into(),
                locations: locations.iter().map(|s| s.to_string()).collect(),
                event_month_year: MonthYear::new(2011, 6),
                ..Default::default()
            },
            source: "s".into(),
            publication_date: NaiveDate::from_ymd_opt(2011, 6, day).unwrap(),
            event_date: NaiveDate::from_ymd_opt(2011, 6, day).unwrap(),
            point: None,
            text: String::new(),
        }
    }

    #[test]
    fn column_layout() {
        let cols = column_names();
        assert_eq!(cols.len(), NUM_COLUMNS);
        assert_eq!(cols[8], "murder_status=both_yes");
        assert_eq!(column_feature(8), 8);
        assert_eq!(column_feature(10), 8);
        assert_eq!(column_feature(11), 9);
        assert_eq!(column_feature(NUM_COLUMNS - 1), 18);
        assert_eq!(PairFeatures::all_missing().to_columns().len(), NUM_COLUMNS);
    }

    #[test]
    fn days_and_locations() {
        let a = event("a", 20, &["Cali", "Palmira"]);
        let b = event("b", 22, &["Palmira"]);
        let f = compute_pair_features(&PairInput::new(&a, 2), &PairInput::new(&b, 2));
        assert_eq!(f.num_days_apart, 2);
        assert_eq!(f.locations_equal, Some(true));
        assert_eq!(f.first_location_equal, Some(false));
        assert_eq!(f.dist_apart_km, None);
    }

    #[test]
    fn status_levels() {
        let mut a = event("a", 1, &[]);
        let mut b = event("b", 1, &[]);
        a.record.farc_involved = Tri::Yes;
        b.record.farc_involved = Tri::Yes;
        a.record.eln_involved = Tri::Yes;
        b.record.eln_involved = Tri::No;
        a.record.auc_involved = Tri::No;
        b.record.auc_involved = Tri::No;
        a.record.epl_involved = Tri::Yes;
        let f = compute_pair_features(&PairInput::new(&a, 2), &PairInput::new(&b, 2));
        assert_eq!(f.status[7], Some(MatchLevel::BothYes));
        assert_eq!(f.status[9], Some(MatchLevel::Mismatch));
        assert_eq!(f.status[8], Some(MatchLevel::BothNo));
        assert_eq!(f.status[10], None);
        assert_eq!(f.locations_equal, None);
    }

    #[test]
    fn symmetric_with_points() {
        let mut a = event("a", 3, &["Cali"]);
        let mut b = event("b", 9, &["cali"]);
        a.point = Some(GeoPoint::new(3.45, -76.53, "Cali").unwrap());
        b.point = Some(GeoPoint::new(3.53, -76.30, "Palmira").unwrap());
        a.text = "el ataque dejó tres muertos en Cali".into();
        b.text = "tres muertos dejó el ataque".into();
        a.record.violence_words = vec!["ataque".into()];
        b.record.violence_words = vec!["Ataque".into(), "masacre".into()];
        let (pa, pb) = (PairInput::new(&a, 2), PairInput::new(&b, 2));
        let ab = compute_pair_features(&pa, &pb);
        assert_eq!(ab, compute_pair_features(&pb, &pa));
        assert_eq!(ab.first_location_equal, Some(true));
        assert_eq!(ab.words_spanish_equal, Some(true));
        assert!(ab.dist_apart_km.unwrap() > 20.0);
    }
}
