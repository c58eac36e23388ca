//! Random inputs shared by the acceptance and property suites.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use eventmine::extraction::{ExtractionRecord, MonthYear, Tri};
use eventmine::linkage::{
    MatchCriteria, MonthTolerance, OurEvent, PartyCanon, PartyRule, ReferenceEvent, ReferenceViolence,
};

pub fn my(year: i32, month: u32) -> MonthYear {
    MonthYear::new(year, month).unwrap()
}

pub const WORDS: [&str; 24] = [
    "frente", "sexto", "bloque", "central", "bolívar", "cauca", "tumaco", "guerrilla", "campesinos", "policía",
    "Ejército", "FARC", "ELN", "vereda", "El", "Carmen", "líder", "social", "niños", "montaña", "Águilas", "Negras",
    "río", "sur",
];

pub fn phrase(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    let n = rng.random_range(1..=max_words);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

fn tri(rng: &mut ChaCha8Rng) -> Tri {
    [Tri::Yes, Tri::No, Tri::Unknown][rng.random_range(0..3)]
}

fn count(rng: &mut ChaCha8Rng) -> Option<u32> {
    match rng.random_range(0..4) {
        0 => None,
        1 => Some(0),
        2 => Some(rng.random_range(1..20)),
        _ => Some(rng.random::<u32>()),
    }
}

fn opt_text(rng: &mut ChaCha8Rng) -> Option<String> {
    rng.random_bool(0.7).then(|| phrase(rng, 4))
}

fn list(rng: &mut ChaCha8Rng, max: usize) -> Vec<String> {
    let n = rng.random_range(0..=max);
    (0..n).map(|_| phrase(rng, 3)).collect()
}

/// A record drawn over the whole answer space the grammar can express.
pub fn random_record(rng: &mut ChaCha8Rng) -> ExtractionRecord {
    ExtractionRecord {
        article_id: String::new(),
        is_single_incident: tri(rng),
        violence_words: list(rng, 4),
        victim_count: count(rng),
        attacker_gender: opt_text(rng),
        victim_gender: opt_text(rng),
        is_murder: tri(rng),
        is_attack_or_injury: tri(rng),
        is_kidnapping: tri(rng),
        is_armed_conflict: tri(rng),
        is_harassment_or_threats: tri(rng),
        child_victim_count: count(rng),
        witness_words: list(rng, 3),
        locations: list(rng, 2),
        attackers: list(rng, 3),
        victim_types: list(rng, 3),
        event_month_year: rng
            .random_bool(0.8)
            .then(|| MonthYear::new(rng.random_range(1990..2030), rng.random_range(1..=12)).unwrap()),
        corpse_count: count(rng),
        army_combatant: tri(rng),
        mentions_guerrilla: tri(rng),
        farc_involved: tri(rng),
        auc_involved: tri(rng),
        eln_involved: tri(rng),
        published_date: rng.random_bool(0.8).then(|| {
            NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + chrono::Duration::days(rng.random_range(0..9000))
        }),
        tone: opt_text(rng),
        front_or_commission: opt_text(rng),
        bloc_or_narcoparamilitary: opt_text(rng),
        epl_involved: tri(rng),
        group_names: list(rng, 3),
        civilians_killed_by_army: count(rng),
        falsos_positivos_count: count(rng),
        attacker_name: opt_text(rng),
        criminal_group_name: opt_text(rng),
        summary: if rng.random_bool(0.9) {
            format!("{}. {} en {}.", phrase(rng, 8), phrase(rng, 5), phrase(rng, 2))
        } else {
            String::new()
        },
    }
}

const DEPARTMENTS: [&str; 3] = ["bolivar", "cauca", "narino"];
const PARTIES: [&str; 5] = ["farc", "eln", "auc", "ejercito", "bacrim"];

fn random_sets(rng: &mut ChaCha8Rng) -> Vec<String> {
    PARTIES.iter().filter(|_| rng.random_bool(0.3)).map(|s| s.to_string()).collect()
}

fn random_point(rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
    rng.random_bool(0.85)
        .then(|| (4.0 + rng.random::<f64>() * 0.8, -74.0 + rng.random::<f64>() * 0.8))
}

pub fn random_linkage(rng: &mut ChaCha8Rng, n_ours: usize, n_ref: usize) -> (Vec<OurEvent>, Vec<ReferenceEvent>) {
    let types = ReferenceViolence::ALL;
    let month = |rng: &mut ChaCha8Rng| my(2011, rng.random_range(1..=5));
    let ours = (0..n_ours)
        .map(|i| OurEvent {
            event_id: format!("o{i:03}"),
            month: month(rng),
            coordinates: random_point(rng),
            department: rng.random_bool(0.9).then(|| DEPARTMENTS.choose(rng).unwrap().to_string()),
            parties: random_sets(rng).into_iter().collect(),
            types: types.iter().filter(|_| rng.random_bool(0.4)).copied().collect(),
        })
        .collect();
    let reference = (0..n_ref)
        .map(|i| ReferenceEvent {
            ref_id: format!("r{i:03}"),
            month: month(rng),
            date: None,
            municipality: String::new(),
            department: if rng.random_bool(0.9) { DEPARTMENTS.choose(rng).unwrap().to_string() } else { String::new() },
            coordinates: random_point(rng),
            parties: random_sets(rng),
            violence_type: *types.choose(rng).unwrap(),
            victim_count: None,
        })
        .collect();
    (ours, reference)
}

pub fn oracle_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
    let dp = p2 - p1;
    let dl = (b.1 - a.1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6371.0 * h.sqrt().asin()
}

/// Every pair checked directly against the stated criteria.
pub fn brute_force(
    ours: &[OurEvent],
    reference: &[ReferenceEvent],
    canon: &PartyCanon,
    c: &MatchCriteria,
) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for o in ours {
        let o_dep = o.department.clone().unwrap_or_default();
        if o.coordinates.is_none() && o_dep.is_empty() {
            continue;
        }
        for r in reference {
            let r_dep = eventmine::text::fold_key(&r.department);
            if r.coordinates.is_none() && r_dep.is_empty() {
                continue;
            }
            let months = (o.month.year * 12 + o.month.month as i32) - (r.month.year * 12 + r.month.month as i32);
            let window = if c.month_tolerance == MonthTolerance::Adjacent { 1 } else { 0 };
            if months.abs() > window {
                continue;
            }
            if c.require_type_match && !o.types.contains(&r.violence_type) {
                continue;
            }
            let rp = canon.canonicalize_all(r.parties.iter().map(String::as_str));
            let party_ok = match c.party_rule {
                PartyRule::AllMatch => !o.parties.is_empty() && o.parties == rp,
                PartyRule::SomeMatch => (o.parties.is_empty() && rp.is_empty()) || o.parties.intersection(&rp).next().is_some(),
            };
            if !party_ok {
                continue;
            }
            let located = match (o.coordinates, r.coordinates) {
                (Some(a), Some(b)) => oracle_km(a, b) <= c.max_distance_km,
                _ => !o_dep.is_empty() && o_dep == r_dep,
            };
            if located {
                out.insert((o.event_id.clone(), r.ref_id.clone()));
            }
        }
    }
    out
}

