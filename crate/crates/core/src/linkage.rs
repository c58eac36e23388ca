//! Record linkage of our events against a reference event dataset under
//! lower-bound (strict) and upper-bound (relaxed) matching criteria.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::EventRecord;
use crate::extraction::{MonthYear, Tri};
use crate::geocode::{haversine_km, Gazetteer};
use crate::text::fold_key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceViolence {
    Kidnapping,
    Killing,
    Death,
    Massacre,
    Attack,
    TerroristAttack,
}

impl ReferenceViolence {
    pub const ALL: [ReferenceViolence; 6] = [
        ReferenceViolence::Kidnapping,
        ReferenceViolence::Killing,
        ReferenceViolence::Death,
        ReferenceViolence::Massacre,
        ReferenceViolence::Attack,
        ReferenceViolence::TerroristAttack,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReferenceViolence::Kidnapping => "kidnapping",
            ReferenceViolence::Killing => "killing",
            ReferenceViolence::Death => "death",
            ReferenceViolence::Massacre => "massacre",
            ReferenceViolence::Attack => "attack",
            ReferenceViolence::TerroristAttack => "terrorist_attack",
        }
    }
}

impl fmt::Display for ReferenceViolence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReferenceViolence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = fold_key(s).replace(' ', "_");
        ReferenceViolence::ALL
            .into_iter()
            .find(|v| v.as_str() == key)
            .ok_or_else(|| Error::Config(format!("unknown reference violence type {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEvent {
    pub ref_id: String,
    pub month: MonthYear,
    pub date: Option<NaiveDate>,
    pub municipality: String,
    pub department: String,
    /// `(latitude, longitude)`, from the row or the municipality centroid.
    pub coordinates: Option<(f64, f64)>,
    pub parties: Vec<String>,
    pub violence_type: ReferenceViolence,
    pub victim_count: Option<u32>,
}

/// Maps free-text party names onto canonical party codes.
///
/// Aliases are matched as whole-word runs of the folded name, longest
/// first; matched words are consumed so "ejercito de liberacion nacional"
/// does not also yield "ejercito". An alias with an empty canonical code
/// marks a non-party ("desconocido"). Unmatched text is kept as its folded
/// form. The generic `guerrilla` is dropped when a named guerrilla matched.
#[derive(Debug, Clone)]
pub struct PartyCanon {
    /// (alias tokens, canonical), longest alias first
    aliases: Vec<(Vec<String>, String)>,
}

const PARTY_CANON: &str = include_str!("../data/party_canon.csv");
const NAMED_GUERRILLAS: [&str; 3] = ["farc", "eln", "epl"];

impl PartyCanon {
    pub fn bundled() -> Self {
        Self::from_csv(PARTY_CANON).expect("bundled party table is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut aliases = Vec::new();
        for row in reader.records() {
            let row = row?;
            let alias: Vec<String> = fold_key(row.get(0).unwrap_or(""))
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            if alias.is_empty() {
                continue;
            }
            aliases.push((alias, row.get(1).unwrap_or("").trim().to_string()));
        }
        aliases.sort_by(|a, b| b.0.len().cmp(&a.0.len()));
        Ok(PartyCanon { aliases })
    }

    pub fn canonicalize(&self, party: &str) -> BTreeSet<String> {
        let mut tokens: Vec<Option<String>> = fold_key(party)
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(|t| Some(t.to_string()))
            .collect();
        if tokens.is_empty() {
            return BTreeSet::new();
        }
        let mut out = BTreeSet::new();
        let mut matched_any = false;
        for (alias, canonical) in &self.aliases {
            let k = alias.len();
            if k > tokens.len() {
                continue;
            }
            let mut start = 0;
            while start + k <= tokens.len() {
                let hit = tokens[start..start + k]
                    .iter()
                    .zip(alias)
                    .all(|(t, a)| t.as_deref() == Some(a.as_str()));
                if hit {
                    matched_any = true;
                    if !canonical.is_empty() {
                        out.insert(canonical.clone());
                    }
                    tokens[start..start + k].iter_mut().for_each(|t| *t = None);
                    start += k;
                } else {
                    start += 1;
                }
            }
        }
        if !matched_any {
            out.insert(fold_key(party));
        }
        out
    }

    pub fn canonicalize_all<'a>(&self, parties: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = parties.into_iter().flat_map(|p| self.canonicalize(p)).collect();
        if NAMED_GUERRILLAS.iter().any(|g| out.contains(*g)) {
            out.remove("guerrilla");
        }
        out
    }
}

/// Our violence flags mapped into the reference taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolenceCrosswalk {
    pub flags: BTreeMap<String, Vec<ReferenceViolence>>,
    pub massacre: MassacreRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassacreRule {
    pub min_victims: u32,
    pub requires_flag: String,
}

const VIOLENCE_CROSSWALK: &str = include_str!("../data/violence_crosswalk.json");

impl ViolenceCrosswalk {
    pub fn bundled() -> Self {
        serde_json::from_str(VIOLENCE_CROSSWALK).expect("bundled crosswalk is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn map(&self, event: &EventRecord) -> BTreeSet<ReferenceViolence> {
        let r = &event.record;
        let flag = |name: &str| -> Tri {
            match name {
                "is_murder" => r.is_murder,
                "is_attack_or_injury" => r.is_attack_or_injury,
                "is_kidnapping" => r.is_kidnapping,
                "is_armed_conflict" => r.is_armed_conflict,
                "is_harassment_or_threats" => r.is_harassment_or_threats,
                _ => Tri::Unknown,
            }
        };
        let mut out: BTreeSet<ReferenceViolence> = self
            .flags
            .iter()
            .filter(|(name, _)| flag(name).is_yes())
            .flat_map(|(_, types)| types.iter().copied())
            .collect();
        let victims = r.victim_count.or(r.corpse_count).unwrap_or(0);
        if victims >= self.massacre.min_victims && flag(&self.massacre.requires_flag).is_yes() {
            out.insert(ReferenceViolence::Massacre);
        }
        out
    }
}

/// One of our events reduced to the fields the criteria compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OurEvent {
    pub event_id: String,
    pub month: MonthYear,
    pub coordinates: Option<(f64, f64)>,
    pub department: Option<String>,
    pub parties: BTreeSet<String>,
    pub types: BTreeSet<ReferenceViolence>,
}

impl OurEvent {
    pub fn from_record(event: &EventRecord, canon: &PartyCanon, crosswalk: &ViolenceCrosswalk) -> Self {
        let r = &event.record;
        let mut names: Vec<&str> = r.attackers.iter().map(String::as_str).collect();
        names.extend(r.group_names.iter().map(String::as_str));
        names.extend(r.attacker_name.as_deref());
        names.extend(r.criminal_group_name.as_deref());
        for (flag, name) in [
            (r.farc_involved, "farc"),
            (r.eln_involved, "eln"),
            (r.auc_involved, "auc"),
            (r.epl_involved, "epl"),
            (r.army_combatant, "ejercito"),
        ] {
            if flag.is_yes() {
                names.push(name);
            }
        }
        OurEvent {
            event_id: event.id().to_string(),
            month: event.month(),
            coordinates: event.point.as_ref().map(|p| (p.latitude, p.longitude)),
            department: event.department().map(fold_key),
            parties: canon.canonicalize_all(names),
            types: crosswalk.map(event),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonthTolerance {
    Same,
    Adjacent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyRule {
    /// Canonical party sets equal and non-empty.
    AllMatch,
    /// Canonical party sets intersect, or both are empty.
    SomeMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchCriteria {
    pub month_tolerance: MonthTolerance,
    pub party_rule: PartyRule,
    pub max_distance_km: f64,
    pub require_type_match: bool,
}

impl MatchCriteria {
    pub fn lower() -> Self {
        MatchCriteria {
            month_tolerance: MonthTolerance::Adjacent,
            party_rule: PartyRule::AllMatch,
            max_distance_km: 20.0,
            require_type_match: true,
        }
    }

    pub fn upper() -> Self {
        MatchCriteria {
            party_rule: PartyRule::SomeMatch,
            max_distance_km: 40.0,
            ..Self::lower()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_distance_km > 0.0) {
            return Err(Error::Config(format!(
                "max_distance_km must be positive, got {}",
                self.max_distance_km
            )));
        }
        Ok(())
    }

    fn month_window(&self) -> i64 {
        match self.month_tolerance {
            MonthTolerance::Same => 0,
            MonthTolerance::Adjacent => 1,
        }
    }
}

/// Prepared reference side: canonical parties and a month index.
#[derive(Debug, Clone)]
pub struct ReferenceIndex<'a> {
    events: &'a [ReferenceEvent],
    parties: Vec<BTreeSet<String>>,
    departments: Vec<String>,
    by_month: HashMap<i64, Vec<usize>>,
}

impl<'a> ReferenceIndex<'a> {
    pub fn new(events: &'a [ReferenceEvent], canon: &PartyCanon) -> Self {
        let mut by_month: HashMap<i64, Vec<usize>> = HashMap::new();
        for (i, e) in events.iter().enumerate() {
            by_month.entry(e.month.ordinal()).or_default().push(i);
        }
        ReferenceIndex {
            events,
            parties: events
                .iter()
                .map(|e| canon.canonicalize_all(e.parties.iter().map(String::as_str)))
                .collect(),
            departments: events.iter().map(|e| fold_key(&e.department)).collect(),
            by_month,
        }
    }

    pub fn is_locatable(&self, i: usize) -> bool {
        self.events[i].coordinates.is_some() || !self.departments[i].is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub our_id: String,
    pub ref_id: String,
    /// `None` when the location test fell back to department equality.
    pub distance_km: Option<f64>,
}

pub fn is_locatable(event: &OurEvent) -> bool {
    event.coordinates.is_some() || event.department.as_deref().is_some_and(|d| !d.is_empty())
}

fn parties_match(rule: PartyRule, ours: &BTreeSet<String>, theirs: &BTreeSet<String>) -> bool {
    match rule {
        PartyRule::AllMatch => !ours.is_empty() && ours == theirs,
        PartyRule::SomeMatch => {
            (ours.is_empty() && theirs.is_empty()) || !ours.is_disjoint(theirs)
        }
    }
}

/// Location test: distance when both sides have coordinates, department
/// equality otherwise. `None` means the pair fails.
fn location_match(
    ours: &OurEvent,
    ref_coords: Option<(f64, f64)>,
    ref_department: &str,
    max_km: f64,
) -> Option<Option<f64>> {
    match (ours.coordinates, ref_coords) {
        (Some((la, lo)), Some((lb, lob))) => {
            let d = haversine_km(la, lo, lb, lob);
            (d <= max_km).then_some(Some(d))
        }
        _ => {
            let ours_dep = ours.department.as_deref().unwrap_or("");
            (!ours_dep.is_empty() && ours_dep == ref_department).then_some(None)
        }
    }
}

fn check_pair(ours: &OurEvent, index: &ReferenceIndex<'_>, i: usize, criteria: &MatchCriteria) -> Option<MatchPair> {
    let r = &index.events[i];
    if (ours.month.ordinal() - r.month.ordinal()).abs() > criteria.month_window() {
        return None;
    }
    if criteria.require_type_match && !ours.types.contains(&r.violence_type) {
        return None;
    }
    if !parties_match(criteria.party_rule, &ours.parties, &index.parties[i]) {
        return None;
    }
    let distance_km = location_match(ours, r.coordinates, &index.departments[i], criteria.max_distance_km)?;
    Some(MatchPair {
        our_id: ours.event_id.clone(),
        ref_id: r.ref_id.clone(),
        distance_km,
    })
}

/// All (ours, reference) pairs satisfying `criteria`, in our-event order
/// then reference order. Events that cannot be located are skipped.
pub fn match_events(ours: &[OurEvent], index: &ReferenceIndex<'_>, criteria: &MatchCriteria) -> Vec<MatchPair> {
    let w = criteria.month_window();
    ours.par_iter()
        .filter(|e| is_locatable(e))
        .flat_map_iter(|e| {
            let m = e.month.ordinal();
            let mut candidates: Vec<usize> = (m - w..=m + w)
                .filter_map(|k| index.by_month.get(&k))
                .flatten()
                .copied()
                .filter(|&i| index.is_locatable(i))
                .collect();
            candidates.sort_unstable();
            candidates
                .into_iter()
                .filter_map(|i| check_pair(e, index, i, criteria))
                .collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCounts {
    pub ours_matched: usize,
    pub ours_fraction: f64,
    pub reference_matched: usize,
    pub reference_fraction: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub ours_total: usize,
    pub reference_total: usize,
    /// Our events with neither coordinates nor a department.
    pub ours_unlocatable: usize,
    pub reference_unlocatable: usize,
    pub lower: BoundCounts,
    pub upper: BoundCounts,
    pub lower_criteria: MatchCriteria,
    pub upper_criteria: MatchCriteria,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub lower_pairs: Vec<MatchPair>,
    #[serde(skip)]
    pub upper_pairs: Vec<MatchPair>,
}

fn bound_counts(pairs: &[MatchPair], ours_total: usize, ref_total: usize) -> BoundCounts {
    let ours: BTreeSet<&str> = pairs.iter().map(|p| p.our_id.as_str()).collect();
    let refs: BTreeSet<&str> = pairs.iter().map(|p| p.ref_id.as_str()).collect();
    let frac = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    BoundCounts {
        ours_matched: ours.len(),
        ours_fraction: frac(ours.len(), ours_total),
        reference_matched: refs.len(),
        reference_fraction: frac(refs.len(), ref_total),
        pairs: pairs.len(),
    }
}

/// Runs both bounds. Fractions are over each dataset's full size.
pub fn overlap_bounds(
    ours: &[OurEvent],
    reference: &[ReferenceEvent],
    canon: &PartyCanon,
    lower: &MatchCriteria,
    upper: &MatchCriteria,
) -> Result<OverlapReport> {
    lower.validate()?;
    upper.validate()?;
    let index = ReferenceIndex::new(reference, canon);
    let lower_pairs = match_events(ours, &index, lower);
    let upper_pairs = match_events(ours, &index, upper);
    let mut warnings = Vec::new();
    if reference.is_empty() {
        warnings.push("reference dataset is empty".to_string());
    }
    let lower_counts = bound_counts(&lower_pairs, ours.len(), reference.len());
    let upper_counts = bound_counts(&upper_pairs, ours.len(), reference.len());
    if lower_counts.ours_matched > upper_counts.ours_matched
        || lower_counts.reference_matched > upper_counts.reference_matched
    {
        return Err(Error::Consistency(
            "lower-bound criteria matched more events than the upper bound; the criteria are not nested"
                .into(),
        ));
    }
    Ok(OverlapReport {
        ours_total: ours.len(),
        reference_total: reference.len(),
        ours_unlocatable: ours.iter().filter(|e| !is_locatable(e)).count(),
        reference_unlocatable: (0..reference.len()).filter(|&i| !index.is_locatable(i)).count(),
        lower: lower_counts,
        upper: upper_counts,
        lower_criteria: *lower,
        upper_criteria: *upper,
        warnings,
        lower_pairs,
        upper_pairs,
    })
}

/// Match pairs of both bounds as CSV: `bound,our_id,ref_id,distance_km`.
pub fn match_pairs_csv(report: &OverlapReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bound", "our_id", "ref_id", "distance_km"])?;
    for (bound, pairs) in [("lower", &report.lower_pairs), ("upper", &report.upper_pairs)] {
        for p in pairs {
            let d = p.distance_km.map(|d| format!("{d:.3}")).unwrap_or_default();
            w.write_record([bound, &p.our_id, &p.ref_id, &d])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_match_pairs(path: &Path, report: &OverlapReport) -> Result<()> {
    fs::write(path, match_pairs_csv(report)?).map_err(|e| Error::io(path, e))
}

/// Column names and per-file categories of a reference dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMapping {
    pub columns: ReferenceColumns,
    /// Separator between multiple parties in one cell.
    #[serde(default = "default_party_separator")]
    pub party_separator: String,
    /// File name → violence type; `"exclude"` (e.g. mines) skips the file.
    pub files: BTreeMap<String, String>,
}

fn default_party_separator() -> String {
    ";".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceColumns {
    pub ref_id: String,
    pub date: String,
    pub municipality: String,
    pub department: String,
    #[serde(default)]
    pub latitude: Option<String>,
    #[serde(default)]
    pub longitude: Option<String>,
    pub parties: String,
    #[serde(default)]
    pub victim_count: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLoadReport {
    pub loaded: usize,
    pub excluded_files: Vec<String>,
    pub excluded_rows: usize,
    pub bad_rows: Vec<String>,
    pub centroid_filled: usize,
}

/// Accepts `YYYY-MM-DD`, `DD/MM/YYYY` and month-only `YYYY-MM`.
pub fn parse_reference_date(s: &str) -> Option<(MonthYear, Option<NaiveDate>)> {
    let s = s.trim();
    for fmt in ["%Y-%m-%d", "%d/%m/%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(s, fmt) {
            return Some((MonthYear::of(d), Some(d)));
        }
    }
    let (y, m) = s.split_once('-')?;
    MonthYear::new(y.parse().ok()?, m.parse().ok()?).map(|my| (my, None))
}

/// Loads every mapped CSV in `dir`. Rows lacking coordinates get the
/// municipality centroid from `gazetteer` when it knows the place.
pub fn load_reference_dir(
    dir: &Path,
    gazetteer: Option<&Gazetteer>,
) -> Result<(Vec<ReferenceEvent>, ReferenceLoadReport)> {
    let mapping_path = dir.join("mapping.json");
    let text = fs::read_to_string(&mapping_path).map_err(|e| Error::io(&mapping_path, e))?;
    let mapping: ReferenceMapping = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", mapping_path.display())))?;
    let c = &mapping.columns;
    let mut report = ReferenceLoadReport::default();
    let mut events = Vec::new();
    for (file, category) in &mapping.files {
        let path = dir.join(file);
        let category = category.trim();
        if category.eq_ignore_ascii_case("exclude") || fold_key(category).starts_with("mine") {
            report.excluded_files.push(file.clone());
            if path.exists() {
                let mut reader = csv::Reader::from_path(&path).map_err(|e| Error::Parse(e.to_string()))?;
                report.excluded_rows += reader.records().count();
            }
            continue;
        }
        let violence_type: ReferenceViolence = category.parse()?;
        let mut reader = csv::Reader::from_path(&path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&path, io),
            other => Error::Parse(format!("{}: {other:?}", path.display())),
        })?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
                Error::Config(format!("{}: missing column {name:?}", path.display()))
            })
        };
        let opt_col = |name: &Option<String>| -> Result<Option<usize>> {
            name.as_deref().map(col).transpose()
        };
        let (i_id, i_date, i_mun, i_dep, i_par) =
            (col(&c.ref_id)?, col(&c.date)?, col(&c.municipality)?, col(&c.department)?, col(&c.parties)?);
        let (i_lat, i_lon, i_vic) = (opt_col(&c.latitude)?, opt_col(&c.longitude)?, opt_col(&c.victim_count)?);
        for (line, row) in reader.records().enumerate() {
            let row = row?;
            let get = |i: usize| row.get(i).unwrap_or("").trim();
            let Some((month, date)) = parse_reference_date(get(i_date)) else {
                report.bad_rows.push(format!("{file}:{}: unparseable date {:?}", line + 2, get(i_date)));
                continue;
            };
            let num = |i: Option<usize>| i.and_then(|i| get(i).parse::<f64>().ok());
            let mut coordinates = match (num(i_lat), num(i_lon)) {
                (Some(la), Some(lo)) => Some((la, lo)),
                _ => None,
            };
            let (municipality, department) = (get(i_mun).to_string(), get(i_dep).to_string());
            if coordinates.is_none() {
                if let Some(g) = gazetteer {
                    let hit = g
                        .find(&format!("{municipality}, {department}"))
                        .or_else(|| g.find(&municipality));
                    if let Some(hit) = hit {
                        coordinates = Some((hit.latitude, hit.longitude));
                        report.centroid_filled += 1;
                    }
                }
            }
            events.push(ReferenceEvent {
                ref_id: get(i_id).to_string(),
                month,
                date,
                municipality,
                department,
                coordinates,
                parties: get(i_par)
                    .split(mapping.party_separator.as_str())
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .map(str::to_string)
                    .collect(),
                violence_type,
                victim_count: i_vic.and_then(|i| get(i).parse().ok()),
            });
        }
    }
    report.loaded = events.len();
    Ok((events, report))
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;
    use crate::extraction::ExtractionRecord;
    use crate::geocode::GeoPoint;

    fn our(id: &str, month: u32, coords: Option<(f64, f64)>, parties: &[&str]) -> OurEvent {
        OurEvent {
            event_id: id.into(),
            month: MonthYear::new(2011, month).unwrap(),
            coordinates: coords,
            department: Some("bolivar".into()),
            parties: parties.iter().map(|s| s.to_string()).collect(),
            types: [ReferenceViolence::Killing].into(),
        }
    }

    fn reference(id: &str, date: &str, coords: Option<(f64, f64)>, parties: &[&str]) -> ReferenceEvent {
        let (month, date) = parse_reference_date(date).unwrap();
        ReferenceEvent {
            ref_id: id.into(),
            month,
            date,
            municipality: "San Pablo".into(),
            department: "Bolívar".into(),
            coordinates: coords,
            parties: parties.iter().map(|s| s.to_string()).collect(),
            violence_type: ReferenceViolence::Killing,
            victim_count: Some(1),
        }
    }

    const SAN_PABLO: (f64, f64) = (7.476, -73.924);

    /// Point `km` kilometres due north of `p`.
    fn north(p: (f64, f64), km: f64) -> (f64, f64) {
        (p.0 + km / 111.195, p.1)
    }

    #[test]
    fn party_canonicalization() {
        let c = PartyCanon::bundled();
        let one = |s: &str| c.canonicalize(s).into_iter().collect::<Vec<_>>();
        assert_eq!(one("Fuerza Aérea Colombiana"), vec!["state_forces"]);
        assert_eq!(one("Guerrilla-FARC"), vec!["farc"]);
        assert_eq!(one("Ejército de Liberación Nacional"), vec!["eln"]);
        assert_eq!(one("Grupo Paramilitar"), vec!["auc"]);
        assert!(one("Desconocido").is_empty());
        assert_eq!(one("Los Pelusos"), vec!["los pelusos"]);
        let all = c.canonicalize_all(["la guerrilla de las FARC", "Ejército"]);
        assert_eq!(all.into_iter().collect::<Vec<_>>(), vec!["farc", "state_forces"]);
    }

    #[test]
    fn san_pablo_bombing_matches_both_bounds() {
        let canon = PartyCanon::bundled();
        let record = ExtractionRecord {
            article_id: "ours-1".into(),
            attackers: vec!["Colombian air force".into()],
            is_murder: Tri::Yes,
            victim_count: Some(1),
            event_month_year: MonthYear::new(2011, 6),
            ..Default::default()
        };
        let near = north(SAN_PABLO, 10.0);
        let event = EventRecord {
            record,
            source: "s".into(),
            publication_date: NaiveDate::from_ymd_opt(2011, 6, 22).unwrap(),
            event_date: NaiveDate::from_ymd_opt(2011, 6, 22).unwrap(),
            point: Some(GeoPoint {
                department: Some("Bolívar".into()),
                ..GeoPoint::new(near.0, near.1, "San Pablo").unwrap()
            }),
            text: String::new(),
        };
        let ours = vec![OurEvent::from_record(&event, &canon, &ViolenceCrosswalk::bundled())];
        let refs = vec![reference("chm-1", "2011-06-20", Some(SAN_PABLO), &["Fuerza Aérea Colombiana"])];
        let report = overlap_bounds(&ours, &refs, &canon, &MatchCriteria::lower(), &MatchCriteria::upper()).unwrap();
        assert_eq!(report.lower.pairs, 1);
        assert_eq!(report.upper.pairs, 1);
        assert_eq!(report.lower.ours_fraction, 1.0);

        let far = vec![reference("chm-1", "2011-06-20", Some(north(SAN_PABLO, -30.0)), &["Fuerza Aérea Colombiana"])];
        let report = overlap_bounds(&ours, &far, &canon, &MatchCriteria::lower(), &MatchCriteria::upper()).unwrap();
        assert_eq!((report.lower.pairs, report.upper.pairs), (0, 1));

        let late = vec![reference("chm-1", "2011-08-20", Some(SAN_PABLO), &["Fuerza Aérea Colombiana"])];
        let report = overlap_bounds(&ours, &late, &canon, &MatchCriteria::lower(), &MatchCriteria::upper()).unwrap();
        assert_eq!((report.lower.pairs, report.upper.pairs), (0, 0));
    }

    #[test]
    fn department_fallback_and_unlocatable() {
        let canon = PartyCanon::bundled();
        let refs = vec![reference("r", "2011-06", None, &["farc"])];
        let mut e = our("o", 7, None, &["farc"]);
        let index = ReferenceIndex::new(&refs, &canon);
        let pairs = match_events(std::slice::from_ref(&e), &index, &MatchCriteria::lower());
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].distance_km, None);

        e.department = None;
        let report = overlap_bounds(&[e], &refs, &canon, &MatchCriteria::lower(), &MatchCriteria::upper()).unwrap();
        assert_eq!(report.ours_unlocatable, 1);
        assert_eq!(report.upper.pairs, 0);
    }

    #[test]
    fn party_rules() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
        assert!(parties_match(PartyRule::AllMatch, &s(&["farc"]), &s(&["farc"])));
        assert!(!parties_match(PartyRule::AllMatch, &s(&["farc", "eln"]), &s(&["farc"])));
        assert!(!parties_match(PartyRule::AllMatch, &s(&[]), &s(&[])));
        assert!(parties_match(PartyRule::SomeMatch, &s(&["farc", "eln"]), &s(&["farc"])));
        assert!(parties_match(PartyRule::SomeMatch, &s(&[]), &s(&[])));
        assert!(!parties_match(PartyRule::SomeMatch, &s(&[]), &s(&["farc"])));
    }

    #[test]
    fn crosswalk_massacre() {
        let cw = ViolenceCrosswalk::bundled();
        let mut e = EventRecord {
            record: ExtractionRecord {
                is_murder: Tri::Yes,
                victim_count: Some(5),
                ..Default::default()
            },
            source: String::new(),
            publication_date: NaiveDate::from_ymd_opt(2011, 1, 1).unwrap(),
            event_date: NaiveDate::from_ymd_opt(2011, 1, 1).unwrap(),
            point: None,
            text: String::new(),
        };
        let types = cw.map(&e);
        assert!(types.contains(&ReferenceViolence::Massacre));
        assert!(types.contains(&ReferenceViolence::Killing));
        e.record.victim_count = Some(3);
        assert!(!cw.map(&e).contains(&ReferenceViolence::Massacre));
    }

    #[test]
    fn empty_reference_warns() {
        let report = overlap_bounds(
            &[our("o", 6, Some(SAN_PABLO), &["farc"])],
            &[],
            &PartyCanon::bundled(),
            &MatchCriteria::lower(),
            &MatchCriteria::upper(),
        )
        .unwrap();
        assert_eq!(report.upper.pairs, 0);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn reference_dates() {
        assert_eq!(parse_reference_date("2011-06-20").unwrap().0, MonthYear::new(2011, 6).unwrap());
        assert_eq!(parse_reference_date("20/06/2011").unwrap().1, NaiveDate::from_ymd_opt(2011, 6, 20));
        assert_eq!(parse_reference_date("2011-06").unwrap().1, None);
        assert!(parse_reference_date("junio").is_none());
    }
}
