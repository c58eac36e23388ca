//! Department-year panels and lagged regression designs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::EventRecord;
use crate::geocode::DepartmentTable;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    AllEvents,
    Murders,
    ArmedConflict,
    AttackOrInjury,
    Kidnapping,
    HarassmentOrThreats,
}

impl Outcome {
    fn label(self) -> &'static str {
        match self {
            Outcome::AllEvents => "Number of Events",
            Outcome::Murders => "Number of Murders",
            Outcome::ArmedConflict => "Number of Armed Conflict Events",
            Outcome::AttackOrInjury => "Number of Attacks",
            Outcome::Kidnapping => "Number of Kidnappings",
            Outcome::HarassmentOrThreats => "Number of Threats",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// ln(x + 1)
    Log1p,
    Linear,
    /// 1 if x > 0
    Binary,
}

impl Transform {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Transform::Log1p => x.ln_1p(),
            Transform::Linear => x,
            Transform::Binary => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Term prefix to which a lag suffix such as `t-1` is appended.
    fn term(self, quantity: &str) -> String {
        match self {
            Transform::Log1p => format!("ln({quantity} +1)"),
            Transform::Linear => format!("{quantity} "),
            Transform::Binary => format!("1({quantity} >0)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentSplit {
    Total,
    ManualVsAerial,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_outcome")]
    pub outcome: Outcome,
    #[serde(default = "default_lags")]
    pub lags: u32,
    #[serde(default = "default_transform")]
    pub outcome_transform: Transform,
    #[serde(default = "default_transform")]
    pub treatment_transform: Transform,
    #[serde(default = "default_split")]
    pub treatment_split: TreatmentSplit,
    /// Inclusive year range of the panel; defaults to the data's span.
    #[serde(default)]
    pub years: Option<(i32, i32)>,
}

fn default_outcome() -> Outcome {
    Outcome::AllEvents
}
fn default_lags() -> u32 {
    3
}
fn default_transform() -> Transform {
    Transform::Log1p
}
fn default_split() -> TreatmentSplit {
    TreatmentSplit::Total
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            name: None,
            outcome: default_outcome(),
            lags: default_lags(),
            outcome_transform: default_transform(),
            treatment_transform: default_transform(),
            treatment_split: default_split(),
            years: None,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.lags) {
            return Err(Error::Config(format!("lags must be in 1..=5, got {}", self.lags)));
        }
        if let Some((a, b)) = self.years {
            if a > b {
                return Err(Error::Config(format!("year range {a}..{b} is empty")));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.to_string())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}/lags={}/y={:?}/h={:?}/{:?}",
            self.outcome, self.lags, self.outcome_transform, self.treatment_transform, self.treatment_split
        )
    }
}

/// Minimal event view the panel needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelEvent {
    pub department: String,
    pub year: i32,
    pub types: BTreeSet<Outcome>,
}

impl PanelEvent {
    /// `None` when the event has no department.
    pub fn from_record(event: &EventRecord, departments: &DepartmentTable) -> Option<Self> {
        let dep = event.department()?;
        let department = departments.canonical(dep).unwrap_or(dep).to_string();
        let r = &event.record;
        let mut types = BTreeSet::from([Outcome::AllEvents]);
        for (flag, o) in [
            (r.is_murder, Outcome::Murders),
            (r.is_armed_conflict, Outcome::ArmedConflict),
            (r.is_attack_or_injury, Outcome::AttackOrInjury),
            (r.is_kidnapping, Outcome::Kidnapping),
            (r.is_harassment_or_threats, Outcome::HarassmentOrThreats),
        ] {
            if flag.is_yes() {
                types.insert(o);
            }
        }
        Some(PanelEvent {
            department,
            year: event.month().year,
            types,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EradicationRow {
    pub municipality: String,
    pub department: String,
    pub year: i32,
    pub hectares_manual: f64,
    pub hectares_aerial: f64,
}

/// Reads `municipality,department,year,hectares_manual,hectares_aerial`.
/// Rows whose department is not in `departments` are skipped and reported.
pub fn load_eradication(path: &Path, departments: &DepartmentTable) -> Result<(Vec<EradicationRow>, Vec<String>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    })?;
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for (line, rec) in reader.deserialize::<EradicationRow>().enumerate() {
        let mut row = match rec {
            Ok(r) => r,
            Err(e) => {
                diagnostics.push(format!("row {}: {e}", line + 2));
                continue;
            }
        };
        if row.hectares_manual < 0.0 || row.hectares_aerial < 0.0 {
            diagnostics.push(format!("row {}: negative hectares", line + 2));
            continue;
        }
        match departments.canonical(&row.department) {
            Some(d) => row.department = d.to_string(),
            None => {
                diagnostics.push(format!(
                    "row {}: municipality {:?} has unknown department {:?}",
                    line + 2,
                    row.municipality,
                    row.department
                ));
                continue;
            }
        }
        rows.push(row);
    }
    Ok((rows, diagnostics))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub department: String,
    pub year: i32,
    pub event_count: u32,
    pub hectares_manual: f64,
    pub hectares_aerial: f64,
}

/// Outcome, named regressors and fixed-effect labels, one entry per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Design<T = f64> {
    pub y: Vec<T>,
    pub outcome_name: String,
    pub regressors: Vec<(String, Vec<T>)>,
    /// Indices into `regressors` of the treatment terms.
    pub treatment: Vec<usize>,
    pub departments: Vec<String>,
    pub years: Vec<i32>,
}

impl<T: Scalar> Design<T> {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Design from a balanced department x year grid of outcome and
    /// treatment series (`series[d][t]`, years `first_year..`). Lags are
    /// interleaved (events t-1, treatment t-1, events t-2, ...) and the
    /// first `lags` years are used only as history.
    pub fn from_series(
        department_names: &[String],
        first_year: i32,
        outcome: &[Vec<T>],
        treatment: &[Vec<T>],
        lags: usize,
        names: (&str, &str),
    ) -> Self {
        let years = outcome.first().map_or(0, Vec::len);
        let mut d = Design {
            y: Vec::new(),
            outcome_name: names.0.to_string(),
            regressors: Vec::new(),
            treatment: Vec::new(),
            departments: Vec::new(),
            years: Vec::new(),
        };
        for l in 1..=lags {
            d.regressors.push((format!("{}t-{l}", names.0), Vec::new()));
            d.regressors.push((format!("{}t-{l}", names.1), Vec::new()));
            d.treatment.push(d.regressors.len() - 1);
        }
        for (k, dep) in department_names.iter().enumerate() {
            for t in lags..years {
                d.y.push(outcome[k][t]);
                d.departments.push(dep.clone());
                d.years.push(first_year + t as i32);
                for l in 1..=lags {
                    d.regressors[2 * (l - 1)].1.push(outcome[k][t - l]);
                    d.regressors[2 * (l - 1) + 1].1.push(treatment[k][t - l]);
                }
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub rows: Vec<PanelRow>,
    pub design: Design<f64>,
    pub first_year: i32,
    pub last_year: i32,
    pub dropped_lag_rows: usize,
}

/// Aggregates events and eradication to a full department x year grid
/// (zeros where nothing was recorded), applies the model specification's transforms and
/// builds the lagged design.
pub fn build_panel(events: &[PanelEvent], eradication: &[EradicationRow], spec: &ModelSpec) -> Result<Panel> {
    spec.validate()?;
    let mut departments: BTreeSet<&str> = events.iter().map(|e| e.department.as_str()).collect();
    departments.extend(eradication.iter().map(|r| r.department.as_str()));
    let (first_year, last_year) = match spec.years {
        Some(range) => range,
        None => {
            let years = events.iter().map(|e| e.year).chain(eradication.iter().map(|r| r.year));
            let (lo, hi) = years.fold((i32::MAX, i32::MIN), |(lo, hi), y| (lo.min(y), hi.max(y)));
            if lo > hi {
                return Err(Error::Regression("panel is empty: no events or eradication rows".into()));
            }
            (lo, hi)
        }
    };
    if departments.is_empty() {
        return Err(Error::Regression("panel is empty: no departments".into()));
    }
    let in_range = |y: i32| (first_year..=last_year).contains(&y);

    let mut cells: BTreeMap<(&str, i32), PanelRow> = BTreeMap::new();
    for &d in &departments {
        for y in first_year..=last_year {
            cells.insert(
                (d, y),
                PanelRow {
                    department: d.to_string(),
                    year: y,
                    event_count: 0,
                    hectares_manual: 0.0,
                    hectares_aerial: 0.0,
                },
            );
        }
    }
    for e in events.iter().filter(|e| in_range(e.year) && e.types.contains(&spec.outcome)) {
        cells.get_mut(&(e.department.as_str(), e.year)).expect("grid cell").event_count += 1;
    }
    for r in eradication.iter().filter(|r| in_range(r.year)) {
        let cell = cells.get_mut(&(r.department.as_str(), r.year)).expect("grid cell");
        cell.hectares_manual += r.hectares_manual;
        cell.hectares_aerial += r.hectares_aerial;
    }
    let rows: Vec<PanelRow> = cells.into_values().collect();

    let n_years = (last_year - first_year + 1) as usize;
    let lags = spec.lags as usize;
    if n_years <= lags {
        return Err(Error::Regression(format!(
            "{n_years} panel year(s) leave no rows after {lags} lag(s)"
        )));
    }
    let names: Vec<String> = departments.iter().map(|d| d.to_string()).collect();
    let by_dep = |f: &dyn Fn(&PanelRow) -> f64| -> Vec<Vec<f64>> {
        rows.chunks(n_years).map(|c| c.iter().map(f).collect()).collect()
    };
    let yt = spec.outcome_transform;
    let ht = spec.treatment_transform;
    let outcome = by_dep(&|r| yt.apply(r.event_count as f64));
    let y_term = yt.term(spec.outcome.label());
    let outcome_name = y_term.trim_end().to_string();
    let design = match spec.treatment_split {
        TreatmentSplit::Total => {
            let treat = by_dep(&|r| ht.apply(r.hectares_manual + r.hectares_aerial));
            let mut d = Design::from_series(
                &names,
                first_year,
                &outcome,
                &treat,
                lags,
                (&y_term, &ht.term("Number hectares treated")),
            );
            d.outcome_name = outcome_name;
            d
        }
        TreatmentSplit::ManualVsAerial => {
            let manual = by_dep(&|r| ht.apply(r.hectares_manual));
            let aerial = by_dep(&|r| ht.apply(r.hectares_aerial));
            let mut d = Design::from_series(
                &names,
                first_year,
                &outcome,
                &manual,
                lags,
                (&y_term, &ht.term("Manual hectares treated")),
            );
            // insert the aerial term after each manual term
            let aerial_name = ht.term("Aerial hectares treated");
            let mut regs = Vec::new();
            let mut treatment = Vec::new();
            for (i, (name, col)) in d.regressors.into_iter().enumerate() {
                let is_treat = d.treatment.contains(&i);
                regs.push((name, col));
                if is_treat {
                    treatment.push(regs.len() - 1);
                    let l = i / 2 + 1;
                    let mut col = Vec::with_capacity(d.y.len());
                    for dep in 0..names.len() {
                        for t in lags..n_years {
                            col.push(aerial[dep][t - l]);
                        }
                    }
                    regs.push((format!("{aerial_name}t-{l}"), col));
                    treatment.push(regs.len() - 1);
                }
            }
            d.regressors = regs;
            d.treatment = treatment;
            d.outcome_name = outcome_name;
            d
        }
    };
    if design.n() == 0 {
        return Err(Error::Regression("panel is empty after dropping lag rows".into()));
    }
    Ok(Panel {
        rows,
        design,
        first_year,
        last_year,
        dropped_lag_rows: names.len() * lags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(dep: &str, year: i32) -> PanelEvent {
        PanelEvent {
            department: dep.into(),
            year,
            types: BTreeSet::from([Outcome::AllEvents]),
        }
    }

    #[test]
    fn transforms() {
        assert_eq!(Transform::Log1p.apply(0.0f64), 0.0);
        assert_eq!(Transform::Log1p.apply(std::f64::consts::E - 1.0), 1.0);
        assert_eq!(Transform::Binary.apply(0.3f64), 1.0);
        assert_eq!(Transform::Binary.apply(0.0f64), 0.0);
    }

    #[test]
    fn lag_arithmetic_and_names() {
        let events = vec![ev("Cauca", 2000), ev("Cauca", 2022)];
        let spec = ModelSpec::default();
        let panel = build_panel(&events, &[], &spec).unwrap();
        assert_eq!(panel.design.years.iter().min(), Some(&2003));
        assert_eq!(panel.design.years.iter().max(), Some(&2022));
        assert_eq!(panel.dropped_lag_rows, 3);
        let names: Vec<&str> = panel.design.regressors.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(names[0], "ln(Number of Events +1)t-1");
        assert_eq!(names[1], "ln(Number hectares treated +1)t-1");
        assert_eq!(names[5], "ln(Number hectares treated +1)t-3");
        assert_eq!(panel.design.treatment, vec![1, 3, 5]);
    }

    #[test]
    fn aggregation() {
        let rows = vec![
            EradicationRow {
                municipality: "Tumaco".into(),
                department: "Nariño".into(),
                year: 2010,
                hectares_manual: 10.0,
                hectares_aerial: 0.0,
            },
            EradicationRow {
                municipality: "Ipiales".into(),
                department: "Nariño".into(),
                year: 2010,
                hectares_manual: 0.0,
                hectares_aerial: 5.0,
            },
        ];
        let spec = ModelSpec {
            lags: 1,
            years: Some((2009, 2011)),
            ..Default::default()
        };
        let panel = build_panel(&[ev("Nariño", 2011)], &rows, &spec).unwrap();
        let cell = panel.rows.iter().find(|r| r.year == 2010).unwrap();
        assert_eq!(cell.hectares_manual + cell.hectares_aerial, 15.0);
        let zero = panel.rows.iter().find(|r| r.year == 2009).unwrap();
        assert_eq!(zero.event_count, 0);
        // outcome for 2010 is ln(0+1) = 0
        assert_eq!(panel.design.y[0], 0.0);
    }

    #[test]
    fn manual_vs_aerial_interleaving() {
        let spec = ModelSpec {
            lags: 2,
            treatment_split: TreatmentSplit::ManualVsAerial,
            treatment_transform: Transform::Linear,
            years: Some((2000, 2004)),
            ..Default::default()
        };
        let panel = build_panel(&[ev("Meta", 2001)], &[], &spec).unwrap();
        let names: Vec<&str> = panel.design.regressors.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "ln(Number of Events +1)t-1",
                "Manual hectares treated t-1",
                "Aerial hectares treated t-1",
                "ln(Number of Events +1)t-2",
                "Manual hectares treated t-2",
                "Aerial hectares treated t-2",
            ]
        );
        assert_eq!(panel.design.treatment, vec![1, 2, 4, 5]);
    }

    #[test]
    fn empty_panel_is_fatal() {
        assert!(build_panel(&[], &[], &ModelSpec::default()).is_err());
        let bad = ModelSpec { lags: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
