//! Seeded news corpus with planted duplicate groups: several outlets
//! reporting the same event in their own words, with the extracted fields
//! jittered the way independent LLM answers disagree.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::towns::{Town, TOWNS};
use crate::corpus::Article;
use crate::dedup::{generate_candidate_pairs, pair_key, PairLabel};
use crate::event::EventRecord;
use crate::extraction::{ExtractionRecord, MonthYear, Tri};
use crate::geocode::GeoPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub articles: usize,
    /// Share of articles that repeat an event already reported by another.
    pub duplicate_rate: f64,
    pub start_year: i32,
    pub years: u32,
    pub seed: u64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            articles: 2000,
            duplicate_rate: 0.242,
            start_year: 2008,
            years: 3,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Murder,
    Massacre,
    Attack,
    Kidnapping,
    Combat,
    Threat,
}

const KINDS: [(EventKind, u32); 6] = [
    (EventKind::Murder, 34),
    (EventKind::Massacre, 8),
    (EventKind::Attack, 18),
    (EventKind::Kidnapping, 12),
    (EventKind::Combat, 16),
    (EventKind::Threat, 12),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perpetrator {
    Farc,
    Eln,
    Auc,
    Bacrim,
    Unknown,
}

const PERPETRATORS: [(Perpetrator, u32); 5] = [
    (Perpetrator::Farc, 38),
    (Perpetrator::Eln, 14),
    (Perpetrator::Auc, 12),
    (Perpetrator::Bacrim, 16),
    (Perpetrator::Unknown, 20),
];

/// Ground truth for one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthEvent {
    pub event_id: String,
    pub date: NaiveDate,
    pub town: usize,
    pub kind: EventKind,
    pub perpetrator: Perpetrator,
    /// Armed-group name as printed, e.g. "frente 29 de las Farc".
    pub group_name: Option<String>,
    pub victims: u32,
    pub victim_type: usize,
    pub victim_names: Vec<String>,
    pub hamlet: String,
    pub official: String,
}

impl SynthEvent {
    pub fn town(&self) -> &'static Town {
        &TOWNS[self.town]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthArticle {
    pub article: Article,
    pub record: ExtractionRecord,
    pub point: Option<GeoPoint>,
    /// Index into [`SynthCorpus::events`].
    pub event: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub params: CorpusParams,
    pub events: Vec<SynthEvent>,
    /// Sorted by article id.
    pub articles: Vec<SynthArticle>,
}

impl SynthCorpus {
    pub fn event_records(&self) -> Vec<EventRecord> {
        self.articles
            .iter()
            .map(|a| EventRecord::new(a.record.clone(), &a.article, a.point.clone()))
            .collect()
    }

    /// Realized share of articles beyond the first report of their event.
    pub fn duplicate_rate(&self) -> f64 {
        if self.articles.is_empty() {
            return 0.0;
        }
        1.0 - self.events.len() as f64 / self.articles.len() as f64
    }

    pub fn duplicate_groups(&self) -> usize {
        let mut sizes = vec![0usize; self.events.len()];
        for a in &self.articles {
            sizes[a.event] += 1;
        }
        sizes.iter().filter(|&&s| s > 1).count()
    }

    /// A label for every candidate pair inside the blocking window, as a
    /// complete manual review would produce. The group of a pair is the
    /// event of its first article.
    pub fn labels(&self, window_days: u32) -> Vec<PairLabel> {
        let records = self.event_records();
        let dates: Vec<_> = records.iter().map(|r| r.event_date).collect();
        let mut labels: Vec<PairLabel> = generate_candidate_pairs(&dates, window_days)
            .into_iter()
            .map(|(i, j)| {
                let (a, b) = pair_key(self.articles[i].article.article_id.as_str(), &self.articles[j].article.article_id);
                let ia = if a == self.articles[i].article.article_id { i } else { j };
                PairLabel {
                    article_id_a: a,
                    article_id_b: b,
                    is_duplicate: self.articles[i].event == self.articles[j].event,
                    event_group_id: self.events[self.articles[ia].event].event_id.clone(),
                }
            })
            .collect();
        labels.sort_by(|x, y| x.key().cmp(&y.key()));
        labels
    }
}

const SOURCES: [&str; 8] = [
    "El Tiempo",
    "El Colombiano",
    "El Espectador",
    "Vanguardia Liberal",
    "El País",
    "El Heraldo",
    "La Opinión",
    "El Universal",
];

const FIRST_NAMES: [(&str, bool); 40] = [
    ("José", true), ("Luis", true), ("Carlos", true), ("Jorge", true), ("Édgar", true),
    ("Alirio", true), ("Fabio", true), ("Hernán", true), ("Wilson", true), ("Jhon", true),
    ("Orlando", true), ("Ramiro", true), ("Gustavo", true), ("Arnulfo", true), ("Néstor", true),
    ("Yesid", true), ("Albeiro", true), ("Rubén", true), ("Darío", true), ("Efraín", true),
    ("Diego", true), ("Andrés", true), ("Julio", true), ("Miguel", true), ("Henry", true),
    ("María", false), ("Luz", false), ("Ana", false), ("Gloria", false), ("Rosa", false),
    ("Marta", false), ("Yolanda", false), ("Sandra", false), ("Claudia", false), ("Nubia", false),
    ("Edilma", false), ("Doris", false), ("Blanca", false), ("Diana", false), ("Patricia", false),
];

const SURNAMES: [&str; 40] = [
    "Rodríguez", "Gómez", "González", "Martínez", "García", "López", "Hernández", "Sánchez",
    "Ramírez", "Pérez", "Díaz", "Muñoz", "Rojas", "Moreno", "Jiménez", "Vargas", "Castro",
    "Ortiz", "Rubio", "Mosquera", "Quintero", "Ospina", "Restrepo", "Arango", "Cárdenas",
    "Valencia", "Caicedo", "Benavides", "Guerrero", "Londoño", "Zapata", "Palacios", "Cuero",
    "Angulo", "Bermúdez", "Chaparro", "Quiñones", "Salazar", "Villamizar", "Pabón",
];

const HAMLETS: [&str; 24] = [
    "La Esperanza", "El Porvenir", "Bellavista", "Campo Alegre", "La Unión", "El Diamante",
    "Brisas del Río", "San Isidro", "Las Palmas", "El Recreo", "Villa Nueva", "La Palmera",
    "Monteloro", "El Oso", "La Cristalina", "Caño Negro", "Puerto Nuevo", "Guayabal",
    "El Limón", "Santa Helena", "Remolinos", "La Gabarra", "Versalles", "El Tigre",
];

const RANKS: [&str; 6] = [
    "el coronel",
    "el general",
    "el comandante de Policía",
    "el alcalde",
    "el secretario de Gobierno",
    "el personero municipal",
];

/// (Spanish singular, Spanish plural, English plural)
const VICTIM_TYPES: [(&str, &str, &str); 8] = [
    ("campesino", "campesinos", "farmers"),
    ("soldado", "soldados", "soldiers"),
    ("policía", "policías", "police officers"),
    ("líder comunal", "líderes comunales", "community leaders"),
    ("concejal", "concejales", "councillors"),
    ("indígena", "indígenas", "indigenous residents"),
    ("comerciante", "comerciantes", "merchants"),
    ("conductor", "conductores", "drivers"),
];

const FILLER: [&str; 30] = [
    "La zona ha sido escenario de disputas entre grupos armados por el control de los cultivos de coca.",
    "Las autoridades anunciaron un consejo de seguridad extraordinario para evaluar la situación.",
    "Varias familias se desplazaron hacia la cabecera municipal por temor a nuevos hechos violentos.",
    "La Defensoría del Pueblo había emitido una alerta temprana sobre la región hace varios meses.",
    "El Ejército envió tropas adicionales para reforzar la seguridad en las veredas cercanas.",
    "Los habitantes denunciaron que la presencia del Estado en el área es escasa.",
    "La Fiscalía abrió una investigación para esclarecer los hechos y dar con los responsables.",
    "Organizaciones de derechos humanos rechazaron el hecho y pidieron garantías para la población.",
    "El gobernador ofreció una recompensa por información que permita capturar a los autores.",
    "La vía que comunica al municipio con la capital permaneció cerrada durante varias horas.",
    "Según la comunidad, en la región operan varios grupos que se disputan las rutas del narcotráfico.",
    "Los cuerpos fueron trasladados a Medicina Legal para las respectivas necropsias.",
    "El hecho ocurrió en horas de la noche, cuando la mayoría de los pobladores se encontraban en sus casas.",
    "Los comerciantes cerraron sus establecimientos en señal de protesta por la inseguridad.",
    "La Policía instaló retenes en las salidas del municipio para evitar la huida de los responsables.",
    "Este año se han registrado varios hechos similares en la misma zona rural.",
    "Las clases en la escuela de la vereda fueron suspendidas hasta nuevo aviso.",
    "La Iglesia hizo un llamado a respetar la vida y a buscar salidas pacíficas al conflicto.",
    "Las autoridades no descartan ninguna hipótesis sobre el móvil del ataque.",
    "Un helicóptero de la Fuerza Aérea sobrevoló la zona durante la tarde.",
    "En el lugar fueron encontradas vainillas de fusil de diferentes calibres.",
    "Los pobladores aseguraron que los responsables huyeron hacia una zona montañosa.",
    "La Cruz Roja prestó asistencia humanitaria a las familias afectadas.",
    "Las autoridades locales pidieron al Gobierno nacional mayor inversión social en la región.",
    "Los familiares de las víctimas exigieron justicia y celeridad en las investigaciones.",
    "El municipio ha sufrido durante años la presencia de actores armados ilegales.",
    "Expertos consideran que la violencia en la zona está ligada a la minería ilegal.",
    "La Procuraduría anunció que hará seguimiento a las investigaciones disciplinarias.",
    "El sepelio se realizó en medio de un fuerte dispositivo de seguridad.",
    "La comunidad realizó una marcha por las calles del pueblo para rechazar la violencia.",
];

fn weighted<T: Copy>(rng: &mut ChaCha8Rng, items: &[(T, u32)]) -> T {
    items.choose_weighted(rng, |(_, w)| *w).expect("non-empty weights").0
}

fn number_word(n: u32) -> String {
    const WORDS: [&str; 13] = [
        "cero", "una", "dos", "tres", "cuatro", "cinco", "seis", "siete", "ocho", "nueve", "diez",
        "once", "doce",
    ];
    WORDS.get(n as usize).map_or_else(|| n.to_string(), |w| w.to_string())
}

fn person(rng: &mut ChaCha8Rng) -> (String, bool) {
    let (first, male) = *FIRST_NAMES.choose(rng).unwrap();
    let a = SURNAMES.choose(rng).unwrap();
    let b = SURNAMES.choose(rng).unwrap();
    (format!("{first} {a} {b}"), male)
}

/// Zipf-like weights so the first towns host most events; repeated towns
/// within a month are where distinct events look most alike.
fn town_weights() -> Vec<(usize, u32)> {
    (0..TOWNS.len())
        .map(|i| (i, (10_000.0 / (i as f64 + 2.0).powf(0.9)) as u32))
        .collect()
}

impl Perpetrator {
    fn group_name(self, rng: &mut ChaCha8Rng) -> Option<String> {
        Some(match self {
            Perpetrator::Farc => format!("frente {} de las Farc", rng.random_range(1..=60)),
            Perpetrator::Eln => format!("frente {} del Eln", ["Domingo Laín", "Manuel Vásquez", "Carlos Armando Cacua"].choose(rng).unwrap()),
            Perpetrator::Auc => format!("bloque {} de las Auc", ["Central Bolívar", "Norte", "Calima", "Mineros"].choose(rng).unwrap()),
            Perpetrator::Bacrim => ["Los Rastrojos", "Águilas Negras", "Los Urabeños", "Los Paisas"].choose(rng).unwrap().to_string(),
            Perpetrator::Unknown => return None,
        })
    }

    fn spanish(self) -> &'static str {
        match self {
            Perpetrator::Farc => "guerrilleros de las Farc",
            Perpetrator::Eln => "guerrilleros del Eln",
            Perpetrator::Auc => "paramilitares de las Auc",
            Perpetrator::Bacrim => "una banda criminal",
            Perpetrator::Unknown => "hombres armados",
        }
    }

    fn english(self) -> &'static str {
        match self {
            Perpetrator::Farc => "FARC guerrillas",
            Perpetrator::Eln => "ELN guerrillas",
            Perpetrator::Auc => "AUC paramilitaries",
            Perpetrator::Bacrim => "a criminal gang",
            Perpetrator::Unknown => "unidentified gunmen",
        }
    }

    fn attacker_label(self) -> Option<&'static str> {
        match self {
            Perpetrator::Farc => Some("FARC"),
            Perpetrator::Eln => Some("ELN"),
            Perpetrator::Auc => Some("AUC"),
            Perpetrator::Bacrim => Some("bacrim"),
            Perpetrator::Unknown => None,
        }
    }
}

fn make_event(rng: &mut ChaCha8Rng, id: usize, params: &CorpusParams, towns: &[(usize, u32)]) -> SynthEvent {
    let start = NaiveDate::from_ymd_opt(params.start_year, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(params.start_year + params.years as i32, 1, 1).unwrap();
    let span = (end - start).num_days() as u64;
    let date = start + Days::new(rng.random_range(0..span));
    let kind = weighted(rng, &KINDS);
    let mut perpetrator = weighted(rng, &PERPETRATORS);
    if kind == EventKind::Combat && perpetrator == Perpetrator::Unknown {
        perpetrator = Perpetrator::Farc;
    }
    let victims = match kind {
        EventKind::Massacre => rng.random_range(4..=9),
        EventKind::Combat => rng.random_range(1..=6),
        EventKind::Threat => rng.random_range(1..=4),
        _ => {
            if rng.random::<f64>() < 0.6 {
                1
            } else {
                rng.random_range(2..=4)
            }
        }
    };
    let victim_type = match kind {
        EventKind::Combat => rng.random_range(1..=2),
        _ => rng.random_range(0..VICTIM_TYPES.len()),
    };
    let named = victims.min(3) as usize;
    let victim_names = (0..named).map(|_| person(rng).0).collect();
    let (official_name, _) = person(rng);
    SynthEvent {
        event_id: format!("e{id:05}"),
        date,
        town: weighted(rng, towns),
        kind,
        perpetrator,
        group_name: perpetrator.group_name(rng),
        victims,
        victim_type,
        victim_names,
        hamlet: HAMLETS.choose(rng).unwrap().to_string(),
        official: format!("{} {}", RANKS.choose(rng).unwrap(), official_name),
    }
}

fn lead_sentence(rng: &mut ChaCha8Rng, e: &SynthEvent) -> String {
    let town = e.town();
    let n = number_word(e.victims);
    let (vt_one, vt_many, _) = VICTIM_TYPES[e.victim_type];
    let vt = if e.victims == 1 { vt_one } else { vt_many };
    let perp = e.perpetrator.spanish();
    let variant = rng.random_range(0..3);
    match (e.kind, variant) {
        (EventKind::Murder | EventKind::Massacre, 0) => format!(
            "{} {vt} fueron asesinados por {perp} en la vereda {} del municipio de {}, {}.",
            capitalize(&n), e.hamlet, town.name, town.department
        ),
        (EventKind::Murder | EventKind::Massacre, 1) => format!(
            "Un ataque de {perp} dejó {n} muertos en zona rural de {} ({}), donde los {vt_many} fueron sorprendidos en la vereda {}.",
            town.name, town.department, e.hamlet
        ),
        (EventKind::Murder | EventKind::Massacre, _) => format!(
            "En la vereda {}, jurisdicción de {}, {} perdieron la vida {n} {vt} a manos de {perp}.",
            e.hamlet, town.name, town.department
        ),
        (EventKind::Attack, 0) => format!(
            "Un atentado con explosivos atribuido a {perp} dejó {n} {vt} heridos en {}, {}.",
            town.name, town.department
        ),
        (EventKind::Attack, 1) => format!(
            "{} {vt} resultaron heridos tras la explosión de un artefacto en la vereda {} de {}.",
            capitalize(&n), e.hamlet, town.name
        ),
        (EventKind::Attack, _) => format!(
            "La detonación de una carga explosiva en {} ({}) hirió a {n} {vt}; las autoridades señalaron a {perp}.",
            town.name, town.department
        ),
        (EventKind::Kidnapping, 0) => format!(
            "{} {vt} fueron secuestrados por {perp} en la vereda {}, municipio de {}.",
            capitalize(&n), e.hamlet, town.name
        ),
        (EventKind::Kidnapping, 1) => format!(
            "Denuncian el secuestro de {n} {vt} en zona rural de {}, {}, a manos de {perp}.",
            town.name, town.department
        ),
        (EventKind::Kidnapping, _) => format!(
            "En la vereda {} de {}, {perp} se llevaron a {n} {vt} que transitaban por la zona.",
            e.hamlet, town.name
        ),
        (EventKind::Combat, 0) => format!(
            "Combates entre el Ejército y {perp} en la vereda {} de {} dejaron {n} {vt} muertos.",
            e.hamlet, town.name
        ),
        (EventKind::Combat, 1) => format!(
            "{} {vt} murieron durante enfrentamientos con {perp} en zona rural de {}, {}.",
            capitalize(&n), town.name, town.department
        ),
        (EventKind::Combat, _) => format!(
            "Tropas del Ejército sostuvieron intensos combates con {perp} cerca de la vereda {}, en {}; {n} {vt} perdieron la vida.",
            e.hamlet, town.name
        ),
        (EventKind::Threat, 0) => format!(
            "{} {vt} de {} denunciaron amenazas de muerte por parte de {perp}.",
            capitalize(&n), town.name
        ),
        (EventKind::Threat, 1) => format!(
            "Panfletos firmados por {perp} amenazan a {n} {vt} en la vereda {} de {}, {}.",
            e.hamlet, town.name, town.department
        ),
        (EventKind::Threat, _) => format!(
            "Las amenazas de {perp} contra {n} {vt} tienen en alerta a los habitantes de {}.",
            town.name
        ),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn names_sentence(rng: &mut ChaCha8Rng, e: &SynthEvent) -> Option<String> {
    if e.victim_names.is_empty() {
        return None;
    }
    let list = match e.victim_names.len() {
        1 => e.victim_names[0].clone(),
        k => format!("{} y {}", e.victim_names[..k - 1].join(", "), e.victim_names[k - 1]),
    };
    Some(match rng.random_range(0..3) {
        0 => format!("Las víctimas fueron identificadas como {list}."),
        1 => format!("Entre los afectados se encuentra {list}, según el reporte oficial."),
        _ => format!("Familiares identificaron a {list}."),
    })
}

fn official_sentence(rng: &mut ChaCha8Rng, e: &SynthEvent) -> String {
    let group = e.group_name.as_deref().unwrap_or("un grupo armado ilegal");
    match rng.random_range(0..3) {
        0 => format!("{} atribuyó el hecho al {group}.", capitalize(&e.official)),
        1 => format!("De acuerdo con {}, detrás del ataque estaría el {group}.", e.official),
        _ => format!("\"Tenemos información de que fue el {group}\", dijo {}.", e.official),
    }
}

fn article_text(rng: &mut ChaCha8Rng, e: &SynthEvent, brief: bool) -> String {
    let mut parts = vec![lead_sentence(rng, e)];
    if !brief {
        if let Some(s) = names_sentence(rng, e) {
            parts.push(s);
        }
        parts.push(official_sentence(rng, e));
    }
    let mut filler: Vec<&str> = FILLER.to_vec();
    filler.shuffle(rng);
    let mut fill = filler.into_iter();
    let mut len: usize = parts.iter().map(|p| p.len() + 1).sum();
    let target = rng.random_range(560..900);
    while len < target {
        let Some(f) = fill.next() else { break };
        let at = rng.random_range(1..=parts.len());
        parts.insert(at, f.to_string());
        len += f.len() + 1;
    }
    parts.join(" ")
}

fn summary(rng: &mut ChaCha8Rng, e: &SynthEvent) -> String {
    let town = e.town();
    let (_, _, vt) = VICTIM_TYPES[e.victim_type];
    let perp = e.perpetrator.english();
    let when = format!("{} {}", MonthYear::of(e.date).month_name(), e.date.year());
    let n = e.victims;
    let what = match e.kind {
        EventKind::Murder | EventKind::Massacre => "killed",
        EventKind::Attack => "injured in a bombing",
        EventKind::Kidnapping => "kidnapped",
        EventKind::Combat => "killed in combat",
        EventKind::Threat => "threatened",
    };
    match rng.random_range(0..2) {
        0 => format!("{n} {vt} were {what} by {perp} in {}, {} in {when}.", town.name, town.department),
        _ => format!("In {when}, {perp} {} {n} {vt} near {}, {}.", verb_en(e.kind), town.name, town.department),
    }
}

fn verb_en(kind: EventKind) -> &'static str {
    match kind {
        EventKind::Murder | EventKind::Massacre => "killed",
        EventKind::Attack => "injured",
        EventKind::Kidnapping => "kidnapped",
        EventKind::Combat => "fought the army, leaving dead",
        EventKind::Threat => "threatened",
    }
}

fn violence_words(rng: &mut ChaCha8Rng, kind: EventKind) -> Vec<String> {
    let pool: &[&str] = match kind {
        EventKind::Murder => &["asesinato", "homicidio", "sicarios", "muerto", "disparos"],
        EventKind::Massacre => &["masacre", "asesinados", "muertos", "disparos"],
        EventKind::Attack => &["atentado", "explosivo", "heridos", "detonación"],
        EventKind::Kidnapping => &["secuestro", "retenidos", "plagio"],
        EventKind::Combat => &["combates", "enfrentamientos", "muertos", "tropas"],
        EventKind::Threat => &["amenazas", "panfletos", "intimidación"],
    };
    let k = rng.random_range(1..=pool.len().min(3));
    let mut words: Vec<String> = pool.choose_multiple(rng, k).map(|s| s.to_string()).collect();
    words.sort();
    words
}

fn jitter_tri(rng: &mut ChaCha8Rng, value: bool, unknown: f64) -> Tri {
    if rng.random::<f64>() < unknown {
        Tri::Unknown
    } else if value {
        Tri::Yes
    } else {
        Tri::No
    }
}

fn extraction(rng: &mut ChaCha8Rng, e: &SynthEvent, article_id: &str, published: NaiveDate) -> ExtractionRecord {
    let town = e.town();
    let p = e.perpetrator;
    let kind = e.kind;
    let victims = if rng.random::<f64>() < 0.2 {
        (e.victims as i64 + if rng.random() { 1 } else { -1 }).max(1) as u32
    } else {
        e.victims
    };
    let month = match rng.random::<f64>() {
        x if x < 0.08 => None,
        // month of publication instead of the event
        x if x < 0.12 => Some(MonthYear::of(published)),
        _ => Some(MonthYear::of(e.date)),
    };
    // answers never end in a period; the grammar uses it as the terminator
    let department = town.department.trim_end_matches('.').to_string();
    let mut locations = match rng.random_range(0..10) {
        0 => vec![format!("vereda {}", e.hamlet), town.name.to_string()],
        1 => vec![department],
        2..=4 => vec![town.name.to_string(), department],
        _ => vec![town.name.to_string()],
    };
    if rng.random::<f64>() < 0.04 {
        locations.clear();
    }
    let killed = matches!(kind, EventKind::Murder | EventKind::Massacre | EventKind::Combat);
    let u = 0.08;
    let (_, vt_many, _) = VICTIM_TYPES[e.victim_type];
    let male = FIRST_NAMES
        .iter()
        .find(|(n, _)| e.victim_names.first().is_some_and(|v| v.starts_with(n)))
        .is_none_or(|(_, m)| *m);
    ExtractionRecord {
        article_id: article_id.to_string(),
        is_single_incident: Tri::Yes,
        violence_words: violence_words(rng, kind),
        victim_count: (rng.random::<f64>() > 0.05).then_some(victims),
        attacker_gender: (p != Perpetrator::Unknown || rng.random()).then(|| "male".to_string()),
        victim_gender: (!e.victim_names.is_empty()).then(|| if male { "male" } else { "female" }.to_string()),
        is_murder: jitter_tri(rng, killed, u),
        is_attack_or_injury: jitter_tri(rng, matches!(kind, EventKind::Attack | EventKind::Combat), u),
        is_kidnapping: jitter_tri(rng, kind == EventKind::Kidnapping, u),
        is_armed_conflict: jitter_tri(rng, matches!(kind, EventKind::Combat | EventKind::Attack) || p != Perpetrator::Unknown && p != Perpetrator::Bacrim, u),
        is_harassment_or_threats: jitter_tri(rng, kind == EventKind::Threat, u),
        child_victim_count: (rng.random::<f64>() < 0.5).then_some(0),
        witness_words: Vec::new(),
        locations,
        attackers: p.attacker_label().map(|s| vec![s.to_string()]).unwrap_or_default(),
        victim_types: vec![vt_many.to_string()],
        event_month_year: month,
        corpse_count: killed.then_some(victims).filter(|_| rng.random::<f64>() < 0.7),
        army_combatant: jitter_tri(rng, kind == EventKind::Combat, u),
        mentions_guerrilla: jitter_tri(rng, matches!(p, Perpetrator::Farc | Perpetrator::Eln), u),
        farc_involved: jitter_tri(rng, p == Perpetrator::Farc, u),
        auc_involved: jitter_tri(rng, p == Perpetrator::Auc, u),
        eln_involved: jitter_tri(rng, p == Perpetrator::Eln, u),
        published_date: Some(published),
        tone: Some(["neutral", "alarmist", "somber"].choose(rng).unwrap().to_string()),
        front_or_commission: e.group_name.clone().filter(|g| g.starts_with("frente")),
        bloc_or_narcoparamilitary: e
            .group_name
            .clone()
            .filter(|g| g.starts_with("bloque") || p == Perpetrator::Bacrim),
        epl_involved: jitter_tri(rng, false, u),
        group_names: e.group_name.clone().into_iter().collect(),
        civilians_killed_by_army: None,
        falsos_positivos_count: None,
        attacker_name: None,
        criminal_group_name: e.group_name.clone().filter(|_| p == Perpetrator::Bacrim),
        summary: summary(rng, e),
    }
}

fn geopoint(rng: &mut ChaCha8Rng, town: &Town, record: &ExtractionRecord) -> Option<GeoPoint> {
    if record.locations.is_empty() || rng.random::<f64>() < 0.12 {
        return None;
    }
    let (lat, lon, name) = if record.locations.len() == 1 && town.department.starts_with(record.locations[0].as_str()) {
        // geocoder resolved only the department: jitter around the town,
        // wide enough to look like a department centroid
        (
            town.latitude + rng.random_range(-0.5..0.5),
            town.longitude + rng.random_range(-0.5..0.5),
            town.department.to_string(),
        )
    } else {
        (
            town.latitude + rng.random_range(-0.015..0.015),
            town.longitude + rng.random_range(-0.015..0.015),
            format!("{}, {}", town.name, town.department),
        )
    };
    let mut point = GeoPoint::new(lat, lon, name).ok()?;
    point.department = Some(town.department.to_string());
    Some(point)
}

/// Generates the corpus. Exactly `round(articles * duplicate_rate)` articles
/// repeat an earlier event; most duplicated events get one extra report,
/// some two.
pub fn generate_corpus(params: &CorpusParams) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let extras = (params.articles as f64 * params.duplicate_rate.clamp(0.0, 0.9)).round() as usize;
    let n_events = params.articles - extras;
    let towns = town_weights();
    let events: Vec<SynthEvent> = (0..n_events).map(|i| make_event(&mut rng, i, params, &towns)).collect();

    let mut sizes = vec![1usize; n_events];
    let mut order: Vec<usize> = (0..n_events).collect();
    order.shuffle(&mut rng);
    let mut remaining = extras;
    for &e in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        let extra = if rng.random::<f64>() < 0.08 { 2 } else { 1 }.min(remaining);
        if sizes[e] + extra > SOURCES.len() {
            continue;
        }
        sizes[e] += extra;
        remaining -= extra;
    }

    struct Draft {
        published: NaiveDate,
        tiebreak: u64,
        source: &'static str,
        event: usize,
        brief: bool,
    }
    let mut drafts = Vec::with_capacity(params.articles);
    for (ei, &size) in sizes.iter().enumerate() {
        let sources: Vec<&&str> = SOURCES.choose_multiple(&mut rng, size).collect();
        for s in sources {
            let lag = (rng.random::<f64>().powi(2) * 8.0) as u64;
            drafts.push(Draft {
                published: events[ei].date + Days::new(lag),
                tiebreak: rng.random(),
                source: s,
                event: ei,
                brief: rng.random::<f64>() < 0.15,
            });
        }
    }
    drafts.sort_by_key(|d| (d.published, d.tiebreak));

    let mut articles = Vec::with_capacity(drafts.len());
    for (k, d) in drafts.iter().enumerate() {
        let id = format!("a{:05}", k + 1);
        let e = &events[d.event];
        let text = article_text(&mut rng, e, d.brief);
        let record = extraction(&mut rng, e, &id, d.published);
        let point = geopoint(&mut rng, e.town(), &record);
        articles.push(SynthArticle {
            article: Article {
                article_id: id,
                source: d.source.to_string(),
                publication_date: d.published,
                text,
                scan_ref: None,
            },
            record,
            point,
            event: d.event,
        });
    }
    SynthCorpus {
        params: params.clone(),
        events,
        articles,
    }
}

/// Articles per event, keyed by event id.
pub fn groups(corpus: &SynthCorpus) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for a in &corpus.articles {
        out.entry(corpus.events[a.event].event_id.clone())
            .or_default()
            .push(a.article.article_id.clone());
    }
    out
}
