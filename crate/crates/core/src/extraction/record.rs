use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

/// Answer labels in prompt order.
pub const LABELS: [&str; 32] = [
    "A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "M", "N", "O", "P", "Q", "R", "S",
    "T", "U", "V", "W", "X", "Y", "Z", "AA", "AB", "AC", "AD", "AE", "AF",
];

pub fn label_index(label: &str) -> Option<usize> {
    LABELS.iter().position(|l| *l == label)
}

/// Yes / no / unknown answer. Unknown covers both "-1" and unparseable text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    #[default]
    Unknown,
}

impl Tri {
    pub fn is_yes(self) -> bool {
        self == Tri::Yes
    }

    pub fn is_known(self) -> bool {
        self != Tri::Unknown
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MonthYear {
    pub year: i32,
    pub month: u32,
}

const MONTHS_EN: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

impl MonthYear {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(MonthYear { year, month })
    }

    pub fn of(date: NaiveDate) -> Self {
        MonthYear {
            year: date.year(),
            month: date.month(),
        }
    }

    /// Months since year 0, for month arithmetic.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn contains(self, date: NaiveDate) -> bool {
        date.year() == self.year && date.month() == self.month
    }

    pub fn day(self, day: u32) -> Option<NaiveDate> {
        NaiveDate::from_ymd_opt(self.year, self.month, day)
    }

    pub fn month_name(self) -> &'static str {
        MONTHS_EN[self.month as usize - 1]
    }
}

impl fmt::Display for MonthYear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.month_name(), self.year)
    }
}

/// Structured answers for one article. `None` / empty list / `Tri::Unknown`
/// are the only representations of a missing answer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub article_id: String,
    /// A
    pub is_single_incident: Tri,
    /// B
    pub violence_words: Vec<String>,
    /// C
    pub victim_count: Option<u32>,
    /// D
    pub attacker_gender: Option<String>,
    /// E
    pub victim_gender: Option<String>,
    /// F
    pub is_murder: Tri,
    /// G
    pub is_attack_or_injury: Tri,
    /// H
    pub is_kidnapping: Tri,
    /// I
    pub is_armed_conflict: Tri,
    /// J
    pub is_harassment_or_threats: Tri,
    /// K
    pub child_victim_count: Option<u32>,
    /// L
    pub witness_words: Vec<String>,
    /// M, at most two entries
    pub locations: Vec<String>,
    /// N
    pub attackers: Vec<String>,
    /// O
    pub victim_types: Vec<String>,
    /// P
    pub event_month_year: Option<MonthYear>,
    /// Q
    pub corpse_count: Option<u32>,
    /// R
    pub army_combatant: Tri,
    /// S
    pub mentions_guerrilla: Tri,
    /// T
    pub farc_involved: Tri,
    /// U
    pub auc_involved: Tri,
    /// V
    pub eln_involved: Tri,
    /// W
    pub published_date: Option<NaiveDate>,
    /// X
    pub tone: Option<String>,
    /// Y
    pub front_or_commission: Option<String>,
    /// Z
    pub bloc_or_narcoparamilitary: Option<String>,
    /// AA
    pub epl_involved: Tri,
    /// AB
    pub group_names: Vec<String>,
    /// AC
    pub civilians_killed_by_army: Option<u32>,
    /// AD
    pub falsos_positivos_count: Option<u32>,
    /// AE
    pub attacker_name: Option<String>,
    /// AF
    pub criminal_group_name: Option<String>,
    pub summary: String,
}

/// Violence-type flags in a fixed order, keyed by their short names.
pub const VIOLENCE_TYPES: [&str; 5] = [
    "murder",
    "attack_or_injury",
    "kidnapping",
    "armed_conflict",
    "harassment_or_threats",
];

impl ExtractionRecord {
    pub fn violence_flags(&self) -> [Tri; 5] {
        [
            self.is_murder,
            self.is_attack_or_injury,
            self.is_kidnapping,
            self.is_armed_conflict,
            self.is_harassment_or_threats,
        ]
    }

    /// Names of the violence types answered "yes".
    pub fn violence_types(&self) -> Vec<&'static str> {
        VIOLENCE_TYPES
            .iter()
            .zip(self.violence_flags())
            .filter(|(_, t)| t.is_yes())
            .map(|(n, _)| *n)
            .collect()
    }

    /// Number of answered fields among A..AF plus the summary, each location
    /// field counted once. Used by representative selection.
    pub fn present_fields(&self) -> Vec<(&'static str, bool)> {
        let tri = |t: Tri| t.is_known();
        vec![
            ("is_single_incident", tri(self.is_single_incident)),
            ("violence_words", !self.violence_words.is_empty()),
            ("victim_count", self.victim_count.is_some()),
            ("attacker_gender", self.attacker_gender.is_some()),
            ("victim_gender", self.victim_gender.is_some()),
            ("is_murder", tri(self.is_murder)),
            ("is_attack_or_injury", tri(self.is_attack_or_injury)),
            ("is_kidnapping", tri(self.is_kidnapping)),
            ("is_armed_conflict", tri(self.is_armed_conflict)),
            ("is_harassment_or_threats", tri(self.is_harassment_or_threats)),
            ("child_victim_count", self.child_victim_count.is_some()),
            ("witness_words", !self.witness_words.is_empty()),
            ("locations", !self.locations.is_empty()),
            ("attackers", !self.attackers.is_empty()),
            ("victim_types", !self.victim_types.is_empty()),
            ("event_month_year", self.event_month_year.is_some()),
            ("corpse_count", self.corpse_count.is_some()),
            ("army_combatant", tri(self.army_combatant)),
            ("mentions_guerrilla", tri(self.mentions_guerrilla)),
            ("farc_involved", tri(self.farc_involved)),
            ("auc_involved", tri(self.auc_involved)),
            ("eln_involved", tri(self.eln_involved)),
            ("published_date", self.published_date.is_some()),
            ("tone", self.tone.is_some()),
            ("front_or_commission", self.front_or_commission.is_some()),
            ("bloc_or_narcoparamilitary", self.bloc_or_narcoparamilitary.is_some()),
            ("epl_involved", tri(self.epl_involved)),
            ("group_names", !self.group_names.is_empty()),
            ("civilians_killed_by_army", self.civilians_killed_by_army.is_some()),
            ("falsos_positivos_count", self.falsos_positivos_count.is_some()),
            ("attacker_name", self.attacker_name.is_some()),
            ("criminal_group_name", self.criminal_group_name.is_some()),
            ("summary", !self.summary.trim().is_empty()),
        ]
    }

    /// Renders the record in the semicolon-separated answer grammar the
    /// prompt requests, followed by the summary on its own line.
    pub fn to_response(&self) -> String {
        let answers = self.answers();
        let mut out = String::new();
        for (i, (label, value)) in LABELS.iter().zip(answers).enumerate() {
            if i > 0 {
                out.push_str("; ");
            }
            out.push_str(label);
            out.push_str(": ");
            out.push_str(&value);
        }
        out.push('.');
        if !self.summary.is_empty() {
            out.push('\n');
            out.push_str(&self.summary);
        }
        out
    }

    fn answers(&self) -> [String; 32] {
        fn tri(t: Tri) -> String {
            match t {
                Tri::Yes => "Yes".into(),
                Tri::No => "No".into(),
                Tri::Unknown => "-1".into(),
            }
        }
        fn count(c: Option<u32>) -> String {
            c.map_or_else(|| "-1".into(), |n| n.to_string())
        }
        fn text(s: &Option<String>) -> String {
            s.clone().unwrap_or_else(|| "-1".into())
        }
        fn list(v: &[String]) -> String {
            if v.is_empty() {
                "-1".into()
            } else {
                v.join(", ")
            }
        }
        [
            tri(self.is_single_incident),
            list(&self.violence_words),
            count(self.victim_count),
            text(&self.attacker_gender),
            text(&self.victim_gender),
            tri(self.is_murder),
            tri(self.is_attack_or_injury),
            tri(self.is_kidnapping),
            tri(self.is_armed_conflict),
            tri(self.is_harassment_or_threats),
            count(self.child_victim_count),
            list(&self.witness_words),
            list(&self.locations),
            list(&self.attackers),
            list(&self.victim_types),
            self.event_month_year
                .map_or_else(|| "-1".into(), |m| m.to_string()),
            count(self.corpse_count),
            tri(self.army_combatant),
            tri(self.mentions_guerrilla),
            tri(self.farc_involved),
            tri(self.auc_involved),
            tri(self.eln_involved),
            self.published_date
                .map_or_else(|| "-1".into(), |d| d.format("%m-%d-%Y").to_string()),
            text(&self.tone),
            text(&self.front_or_commission),
            text(&self.bloc_or_narcoparamilitary),
            tri(self.epl_involved),
            list(&self.group_names),
            count(self.civilians_killed_by_army),
            count(self.falsos_positivos_count),
            text(&self.attacker_name),
            text(&self.criminal_group_name),
        ]
    }
}
