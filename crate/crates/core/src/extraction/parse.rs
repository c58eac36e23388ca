//! Tolerant parser for the semicolon-separated answer grammar.
//!
//! Answers are matched to questions by their explicit `X:` label when one is
//! present and by position (the slot after the previous answer) otherwise.
//! Damage to one answer only makes that field missing; the whole response
//! fails only when not a single labeled answer can be found.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::record::{label_index, ExtractionRecord, MonthYear, Tri, LABELS};
use crate::error::{Error, Result};
use crate::text::fold;

pub const MAX_LOCATIONS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDiagnostic {
    pub label: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub record: ExtractionRecord,
    pub diagnostics: Vec<FieldDiagnostic>,
}

/// Splits a segment into its label (if it starts with one) and the answer.
fn split_label(segment: &str) -> Option<(usize, &str)> {
    let s = segment.trim_start();
    let s = s.trim_start_matches(['*', '-', '•']).trim_start();
    let letters = s.bytes().take_while(u8::is_ascii_uppercase).count();
    if letters == 0 || letters > 2 {
        return None;
    }
    let idx = label_index(&s[..letters])?;
    let rest = s[letters..].trim_start_matches('*').trim_start();
    let rest = rest.strip_prefix(':')?;
    Some((idx, rest.trim_start_matches('*')))
}

/// Breaks the response into answer segments: on semicolons, and on line
/// breaks that are followed by a labeled line.
fn segments(raw: &str) -> Vec<String> {
    let raw = raw.replace("\r\n", "\n");
    let mut out = Vec::new();
    for piece in raw.split(';') {
        let mut current = String::new();
        for (i, line) in piece.split('\n').enumerate() {
            if i > 0 && split_label(line).is_some() && !current.trim().is_empty() {
                out.push(std::mem::take(&mut current));
            } else if i > 0 {
                current.push('\n');
            }
            current.push_str(line);
        }
        out.push(current);
    }
    out
}

fn clean(value: &str) -> &str {
    let v = value.trim();
    let v = v.strip_suffix('.').unwrap_or(v).trim();
    v.trim_matches(|c| c == '"' || c == '\'').trim()
}

/// Separates the final answer from the trailing free-text summary.
fn split_summary(answer: &str) -> (String, String) {
    let answer = answer.trim();
    if let Some((head, tail)) = answer.split_once('\n') {
        return (head.to_owned(), strip_summary_label(tail));
    }
    if let Some(pos) = answer.find(". ") {
        return (answer[..pos].to_owned(), strip_summary_label(&answer[pos + 2..]));
    }
    (answer.to_owned(), String::new())
}

fn strip_summary_label(s: &str) -> String {
    let t = s.trim();
    for prefix in ["summary:", "resumen:"] {
        if let Some(head) = t.get(..prefix.len()) {
            if head.eq_ignore_ascii_case(prefix) {
                return t[prefix.len()..].trim().to_owned();
            }
        }
    }
    t.to_owned()
}

pub fn parse_response(raw: &str) -> Result<ParsedResponse> {
    if raw.trim().is_empty() {
        return Err(Error::Parse("empty response".into()));
    }
    let mut slots: [Option<String>; 32] = Default::default();
    let mut diagnostics = Vec::new();
    let mut labeled = 0usize;
    let mut next = 0usize;
    let mut trailing = Vec::new();
    let mut last_slot = None;

    for segment in segments(raw) {
        if segment.trim().is_empty() {
            continue;
        }
        let (idx, value) = match split_label(&segment) {
            Some((idx, value)) => {
                labeled += 1;
                (Some(idx), value.to_owned())
            }
            None if next < LABELS.len() => (Some(next), segment.clone()),
            None => (None, segment.clone()),
        };
        match idx {
            Some(idx) if slots[idx].is_none() => {
                slots[idx] = Some(value);
                next = idx + 1;
                last_slot = Some(idx);
            }
            Some(idx) => diagnostics.push(FieldDiagnostic {
                label: LABELS[idx].into(),
                message: "duplicate answer ignored".into(),
            }),
            None => trailing.push(segment.trim().to_owned()),
        }
    }
    if labeled == 0 {
        return Err(Error::Parse("no labeled answers found".into()));
    }

    let mut summary = String::new();
    if let Some(idx) = last_slot {
        let (answer, tail) = split_summary(slots[idx].as_deref().unwrap_or_default());
        slots[idx] = Some(answer);
        summary = tail;
    }
    for extra in trailing {
        if !summary.is_empty() {
            summary.push(' ');
        }
        summary.push_str(&strip_summary_label(&extra));
    }

    let mut p = FieldParser {
        slots,
        diagnostics: &mut diagnostics,
    };
    let mut record = ExtractionRecord {
        is_single_incident: p.tri(0),
        violence_words: p.list(1),
        victim_count: p.count(2),
        attacker_gender: p.text(3),
        victim_gender: p.text(4),
        is_murder: p.tri(5),
        is_attack_or_injury: p.tri(6),
        is_kidnapping: p.tri(7),
        is_armed_conflict: p.tri(8),
        is_harassment_or_threats: p.tri(9),
        child_victim_count: p.count(10),
        witness_words: p.list(11),
        locations: p.list(12),
        attackers: p.list(13),
        victim_types: p.list(14),
        event_month_year: p.month_year(15),
        corpse_count: p.count(16),
        army_combatant: p.tri(17),
        mentions_guerrilla: p.tri(18),
        farc_involved: p.tri(19),
        auc_involved: p.tri(20),
        eln_involved: p.tri(21),
        published_date: p.date(22),
        tone: p.text(23),
        front_or_commission: p.text(24),
        bloc_or_narcoparamilitary: p.text(25),
        epl_involved: p.tri(26),
        group_names: p.list(27),
        civilians_killed_by_army: p.count(28),
        falsos_positivos_count: p.count(29),
        attacker_name: p.text(30),
        criminal_group_name: p.text(31),
        summary,
        ..Default::default()
    };
    if record.locations.len() > MAX_LOCATIONS {
        diagnostics.push(FieldDiagnostic {
            label: "M".into(),
            message: format!("{} locations given, keeping the first two", record.locations.len()),
        });
        record.locations.truncate(MAX_LOCATIONS);
    }
    Ok(ParsedResponse {
        record,
        diagnostics,
    })
}

struct FieldParser<'a> {
    slots: [Option<String>; 32],
    diagnostics: &'a mut Vec<FieldDiagnostic>,
}

fn is_sentinel(v: &str) -> bool {
    v == "-1"
}

const NONE_WORDS: [&str; 7] = ["no", "none", "n/a", "unknown", "desconocido", "ninguno", "ninguna"];

impl FieldParser<'_> {
    fn note(&mut self, idx: usize, message: impl Into<String>) {
        self.diagnostics.push(FieldDiagnostic {
            label: LABELS[idx].into(),
            message: message.into(),
        });
    }

    /// The cleaned answer, or None when missing or "-1".
    fn value(&mut self, idx: usize) -> Option<String> {
        let Some(raw) = self.slots[idx].take() else {
            self.note(idx, "answer absent");
            return None;
        };
        let v = clean(&raw);
        if v.is_empty() {
            self.note(idx, "empty answer");
            return None;
        }
        if is_sentinel(v) {
            return None;
        }
        Some(v.to_owned())
    }

    fn tri(&mut self, idx: usize) -> Tri {
        let Some(v) = self.value(idx) else {
            return Tri::Unknown;
        };
        let folded = fold(&v);
        let first = folded
            .split(|c: char| !c.is_alphanumeric())
            .find(|w| !w.is_empty())
            .unwrap_or("");
        match first {
            "yes" | "si" | "y" | "true" => Tri::Yes,
            "no" | "n" | "false" => Tri::No,
            _ => {
                self.note(idx, format!("not a yes/no answer: {v:?}"));
                Tri::Unknown
            }
        }
    }

    fn count(&mut self, idx: usize) -> Option<u32> {
        let v = self.value(idx)?;
        let folded = fold(&v);
        let words: Vec<&str> = folded
            .split(|c: char| !c.is_alphanumeric() && c != '-')
            .filter(|w| !w.is_empty())
            .collect();
        if let Some(first) = words.first() {
            if NONE_WORDS.contains(first) && words.len() == 1 {
                return None;
            }
        }
        for w in &words {
            if let Ok(n) = w.parse::<i64>() {
                return match n {
                    -1 => None,
                    n if n < 0 => {
                        self.note(idx, format!("negative count {n}"));
                        None
                    }
                    n => u32::try_from(n).ok(),
                };
            }
            if let Some(n) = number_word(w) {
                return Some(n);
            }
        }
        if words.first().is_some_and(|w| NONE_WORDS.contains(w)) {
            return None;
        }
        self.note(idx, format!("no count in {v:?}"));
        None
    }

    fn text(&mut self, idx: usize) -> Option<String> {
        let v = self.value(idx)?;
        if NONE_WORDS.contains(&fold(&v).as_str()) {
            return None;
        }
        Some(v)
    }

    fn list(&mut self, idx: usize) -> Vec<String> {
        let Some(v) = self.value(idx) else {
            return Vec::new();
        };
        v.split(',')
            .map(clean)
            .filter(|s| !s.is_empty() && !is_sentinel(s))
            .map(str::to_owned)
            .collect()
    }

    fn month_year(&mut self, idx: usize) -> Option<MonthYear> {
        let v = self.value(idx)?;
        let parsed = parse_month_year(&v);
        if parsed.is_none() {
            self.note(idx, format!("unrecognised month/year {v:?}"));
        }
        parsed
    }

    fn date(&mut self, idx: usize) -> Option<NaiveDate> {
        let v = self.value(idx)?;
        for fmt in ["%m-%d-%Y", "%m/%d/%Y", "%Y-%m-%d"] {
            if let Ok(d) = NaiveDate::parse_from_str(&v, fmt) {
                return Some(d);
            }
        }
        self.note(idx, format!("unrecognised date {v:?}"));
        None
    }
}

fn number_word(w: &str) -> Option<u32> {
    const WORDS: [(&[&str], u32); 13] = [
        (&["cero", "zero"], 0),
        (&["uno", "una", "un", "one"], 1),
        (&["dos", "two"], 2),
        (&["tres", "three"], 3),
        (&["cuatro", "four"], 4),
        (&["cinco", "five"], 5),
        (&["seis", "six"], 6),
        (&["siete", "seven"], 7),
        (&["ocho", "eight"], 8),
        (&["nueve", "nine"], 9),
        (&["diez", "ten"], 10),
        (&["once", "eleven"], 11),
        (&["doce", "twelve"], 12),
    ];
    WORDS
        .iter()
        .find(|(names, _)| names.contains(&w))
        .map(|(_, n)| *n)
}

fn month_number(word: &str) -> Option<u32> {
    const NAMES: [(&[&str], u32); 12] = [
        (&["january", "jan", "enero", "ene"], 1),
        (&["february", "feb", "febrero"], 2),
        (&["march", "mar", "marzo"], 3),
        (&["april", "apr", "abril", "abr"], 4),
        (&["may", "mayo"], 5),
        (&["june", "jun", "junio"], 6),
        (&["july", "jul", "julio"], 7),
        (&["august", "aug", "agosto", "ago"], 8),
        (&["september", "sep", "sept", "septiembre", "setiembre"], 9),
        (&["october", "oct", "octubre"], 10),
        (&["november", "nov", "noviembre"], 11),
        (&["december", "dec", "diciembre", "dic"], 12),
    ];
    NAMES
        .iter()
        .find(|(names, _)| names.contains(&word))
        .map(|(_, n)| *n)
}

/// Accepts "June 2011", "junio de 2011", "06/2011", "2011-06", "06-2011".
pub fn parse_month_year(s: &str) -> Option<MonthYear> {
    let folded = fold(s);
    let words: Vec<&str> = folded
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let year = words
        .iter()
        .filter(|w| w.len() == 4)
        .find_map(|w| w.parse::<i32>().ok())?;
    let month = words.iter().find_map(|w| month_number(w)).or_else(|| {
        words
            .iter()
            .filter(|w| w.len() <= 2)
            .find_map(|w| w.parse::<u32>().ok())
    })?;
    MonthYear::new(year, month)
}
