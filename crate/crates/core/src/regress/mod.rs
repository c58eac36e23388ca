//! Two-way fixed-effects lag regressions on department-year panels.

pub mod linalg;
pub mod panel;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

pub use linalg::{ols_qr, Matrix, OlsFit};
pub use panel::{
    build_panel, load_eradication, Design, EradicationRow, ModelSpec, Outcome, Panel, PanelEvent, PanelRow,
    Transform, TreatmentSplit,
};

use crate::error::{Error, Result};
use crate::num::Scalar;

const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Intercept,
    Department,
    Year,
    Regressor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub kind: TermKind,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub outcome: String,
    pub n: usize,
    /// Retained design columns (intercept and dummies included).
    pub p: usize,
    pub df: usize,
    pub rss: f64,
    pub residual_variance: f64,
    pub coefficients: Vec<Coefficient>,
    pub dropped_collinear: Vec<String>,
    pub reference_department: String,
    pub reference_year: i32,
}

impl RegressionResult {
    pub fn get(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Lag and treatment terms, in design order; fixed effects suppressed.
    pub fn regressors(&self) -> impl Iterator<Item = &Coefficient> {
        self.coefficients.iter().filter(|c| c.kind == TermKind::Regressor)
    }

    pub fn department_effect(&self, department: &str) -> Option<f64> {
        if department == self.reference_department {
            return Some(0.0);
        }
        self.get(&format!("department[{department}]")).map(|c| c.estimate)
    }
}

/// Two-sided p-value of `t` under Student's t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: usize) -> f64 {
    if !t.is_finite() {
        return if t.is_nan() { f64::NAN } else { 0.0 };
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df > 0");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Full design: intercept, department dummies (reference: the
/// lexicographically first department), year dummies (reference: the
/// earliest year), then the design's regressors.
pub fn full_design<T: Scalar>(design: &Design<T>) -> (Matrix<T>, Vec<(String, TermKind)>, String, i32) {
    let n = design.n();
    let departments: Vec<&String> = design.departments.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let years: Vec<i32> = design.years.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut columns: Vec<Vec<T>> = vec![vec![T::one(); n]];
    let mut names = vec![("(Intercept)".to_string(), TermKind::Intercept)];
    for &d in departments.iter().skip(1) {
        columns.push(design.departments.iter().map(|x| if x == d { T::one() } else { T::zero() }).collect());
        names.push((format!("department[{d}]"), TermKind::Department));
    }
    for &y in years.iter().skip(1) {
        columns.push(design.years.iter().map(|&x| if x == y { T::one() } else { T::zero() }).collect());
        names.push((format!("year[{y}]"), TermKind::Year));
    }
    for (name, col) in &design.regressors {
        columns.push(col.clone());
        names.push((name.clone(), TermKind::Regressor));
    }
    (
        Matrix::from_columns(n, &columns),
        names,
        departments.first().map(|d| d.to_string()).unwrap_or_default(),
        years.first().copied().unwrap_or_default(),
    )
}

/// OLS with department and year fixed effects.
///
/// Fails when no treatment column survives the collinearity check or when
/// there are no more rows than retained columns.
pub fn fit_fixed_effects<T: Scalar>(design: &Design<T>) -> Result<RegressionResult> {
    let (x, names, reference_department, reference_year) = full_design(design);
    let fit = ols_qr(&x, &design.y)?;
    let offset = names.len() - design.regressors.len();
    let treatment_left = design
        .treatment
        .iter()
        .any(|&t| fit.retained.contains(&(offset + t)));
    if !design.treatment.is_empty() && !treatment_left {
        return Err(Error::Regression(
            "every treatment column is constant or collinear with the fixed effects".into(),
        ));
    }
    let coefficients = fit
        .retained
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let estimate = fit.coefficients[k].to_f64().unwrap_or(f64::NAN);
            let std_error = fit.std_errors[k].to_f64().unwrap_or(f64::NAN);
            let t_value = estimate / std_error;
            Coefficient {
                name: names[j].0.clone(),
                kind: names[j].1,
                estimate,
                std_error,
                t_value,
                p_value: two_sided_p(t_value, fit.df),
            }
        })
        .collect();
    Ok(RegressionResult {
        outcome: design.outcome_name.clone(),
        n: fit.n,
        p: fit.retained.len(),
        df: fit.df,
        rss: fit.rss.to_f64().unwrap_or(f64::NAN),
        residual_variance: fit.residual_variance.to_f64().unwrap_or(f64::NAN),
        coefficients,
        dropped_collinear: fit.dropped.iter().map(|&j| names[j].0.clone()).collect(),
        reference_department,
        reference_year,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantOutcome {
    pub spec: ModelSpec,
    pub label: String,
    pub result: Option<RegressionResult>,
    pub error: Option<String>,
    pub dropped_lag_rows: usize,
    /// Regressors with p < 0.05.
    pub significant: Vec<String>,
    /// Set when the variant failed or lost a treatment column.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub variants: Vec<VariantOutcome>,
}

impl GridSummary {
    pub fn failures(&self) -> usize {
        self.variants.iter().filter(|v| v.result.is_none()).count()
    }
}

fn run_variant(events: &[PanelEvent], eradication: &[EradicationRow], spec: &ModelSpec) -> VariantOutcome {
    let outcome = build_panel(events, eradication, spec).and_then(|panel| {
        let result = fit_fixed_effects(&panel.design)?;
        let treatment_names: Vec<&String> = panel.design.treatment.iter().map(|&t| &panel.design.regressors[t].0).collect();
        Ok((result, panel.dropped_lag_rows, treatment_names.iter().map(|s| s.to_string()).collect::<Vec<_>>()))
    });
    match outcome {
        Ok((result, dropped_lag_rows, treatment_names)) => {
            let significant = result
                .regressors()
                .filter(|c| c.p_value < SIGNIFICANCE)
                .map(|c| c.name.clone())
                .collect();
            let flagged = treatment_names.iter().any(|t| result.dropped_collinear.contains(t));
            VariantOutcome {
                spec: spec.clone(),
                label: spec.label(),
                result: Some(result),
                error: None,
                dropped_lag_rows,
                significant,
                flagged,
            }
        }
        Err(e) => VariantOutcome {
            spec: spec.clone(),
            label: spec.label(),
            result: None,
            error: Some(e.to_string()),
            dropped_lag_rows: 0,
            significant: Vec::new(),
            flagged: true,
        },
    }
}

/// Fits every variant independently; a failing variant is recorded and
/// flagged without stopping the others. Output order follows `variants`.
pub fn robustness_grid(events: &[PanelEvent], eradication: &[EradicationRow], variants: &[ModelSpec]) -> GridSummary {
    GridSummary {
        variants: variants.par_iter().map(|s| run_variant(events, eradication, s)).collect(),
    }
}

/// Grid description expanded into the cartesian product of its axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxes {
    #[serde(default = "all_lags")]
    pub lags: Vec<u32>,
    #[serde(default = "default_outcomes")]
    pub outcomes: Vec<Outcome>,
    #[serde(default = "default_transforms")]
    pub outcome_transforms: Vec<Transform>,
    #[serde(default = "default_transforms")]
    pub treatment_transforms: Vec<Transform>,
    #[serde(default = "default_splits")]
    pub treatment_splits: Vec<TreatmentSplit>,
    #[serde(default)]
    pub years: Option<(i32, i32)>,
}

fn all_lags() -> Vec<u32> {
    (1..=5).collect()
}
fn default_outcomes() -> Vec<Outcome> {
    vec![Outcome::AllEvents]
}
fn default_transforms() -> Vec<Transform> {
    vec![Transform::Log1p]
}
fn default_splits() -> Vec<TreatmentSplit> {
    vec![TreatmentSplit::Total]
}

impl Default for GridAxes {
    fn default() -> Self {
        GridAxes {
            lags: all_lags(),
            outcomes: default_outcomes(),
            outcome_transforms: default_transforms(),
            treatment_transforms: default_transforms(),
            treatment_splits: default_splits(),
            years: None,
        }
    }
}

impl GridAxes {
    pub fn expand(&self) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for &outcome in &self.outcomes {
            for &lags in &self.lags {
                for &outcome_transform in &self.outcome_transforms {
                    for &treatment_transform in &self.treatment_transforms {
                        for &treatment_split in &self.treatment_splits {
                            out.push(ModelSpec {
                                name: None,
                                outcome,
                                lags,
                                outcome_transform,
                                treatment_transform,
                                treatment_split,
                                years: self.years,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// A specs file is either an explicit list of specs or grid axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecFile {
    List(Vec<ModelSpec>),
    Grid { grid: GridAxes },
}

pub fn load_specs(path: &Path) -> Result<Vec<ModelSpec>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SpecFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let specs = match file {
        SpecFile::List(v) => v,
        SpecFile::Grid { grid } => grid.expand(),
    };
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "NA".into()
    }
}

/// Regressor table with the columns Variable, Estimate, Std. Error,
/// t-value, p-value.
pub fn table_csv(result: &RegressionResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Variable", "Estimate", "Std. Error", "t-value", "p-value"])?;
    for c in result.regressors() {
        w.write_record([
            c.name.clone(),
            fmt_num(c.estimate),
            fmt_num(c.std_error),
            fmt_num(c.t_value),
            fmt_num(c.p_value),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per variant: label, status, n, and treatment terms with p < 0.05.
pub fn summary_csv(summary: &GridSummary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["variant", "status", "n", "df", "flagged", "significant"])?;
    for v in &summary.variants {
        let (status, n, df) = match &v.result {
            Some(r) => ("ok".to_string(), r.n.to_string(), r.df.to_string()),
            None => (format!("failed: {}", v.error.as_deref().unwrap_or("")), String::new(), String::new()),
        };
        w.write_record([v.label.clone(), status, n, df, v.flagged.to_string(), v.significant.join("; ")])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn p_values() {
        assert_relative_eq!(two_sided_p(0.0, 10), 1.0, epsilon = 1e-12);
        // t = 2.228 is the 97.5% quantile at 10 df
        assert_relative_eq!(two_sided_p(2.228138851986, 10), 0.05, epsilon = 1e-9);
        assert!(two_sided_p(40.0, 500) < 1e-12);
    }

    fn tiny_design(treatment: Vec<f64>) -> Design<f64> {
        let deps = ["A", "B", "C"];
        let mut d = Design {
            y: Vec::new(),
            outcome_name: "y".into(),
            regressors: vec![("h".into(), Vec::new())],
            treatment: vec![0],
            departments: Vec::new(),
            years: Vec::new(),
        };
        let mut k = 0;
        for (i, dep) in deps.iter().enumerate() {
            for year in 2000..2005 {
                let h = treatment[k % treatment.len()];
                d.y.push(1.0 + i as f64 + 0.1 * (year - 2000) as f64 + 0.5 * h);
                d.regressors[0].1.push(h);
                d.departments.push(dep.to_string());
                d.years.push(year);
                k += 1;
            }
        }
        d
    }

    #[test]
    fn exact_fixed_effects_fit() {
        let d = tiny_design(vec![0.3, 1.7, 0.2, 2.5, 0.9, 1.1, 3.0]);
        let r = fit_fixed_effects(&d).unwrap();
        assert_relative_eq!(r.get("h").unwrap().estimate, 0.5, max_relative = 1e-10);
        assert_relative_eq!(r.department_effect("C").unwrap(), 2.0, max_relative = 1e-10);
        assert_relative_eq!(r.get("year[2003]").unwrap().estimate, 0.3, max_relative = 1e-9);
        assert_eq!(r.reference_department, "A");
        assert_eq!(r.reference_year, 2000);
        assert_eq!(r.regressors().count(), 1);
    }

    #[test]
    fn constant_treatment_is_fatal() {
        let d = tiny_design(vec![0.0]);
        assert!(matches!(fit_fixed_effects(&d), Err(Error::Regression(_))));
    }

    #[test]
    fn grid_isolates_failures() {
        let events: Vec<PanelEvent> = (0..40)
            .map(|i| PanelEvent {
                department: ["Cauca", "Meta", "Huila"][i % 3].into(),
                year: 2000 + (i % 10) as i32,
                types: [Outcome::AllEvents].into(),
            })
            .collect();
        let specs = vec![
            ModelSpec { lags: 1, treatment_transform: Transform::Binary, ..Default::default() },
            ModelSpec { lags: 9, ..Default::default() },
        ];
        let summary = robustness_grid(&events, &[], &specs);
        assert_eq!(summary.variants.len(), 2);
        assert!(summary.variants.iter().all(|v| v.flagged));
        assert_eq!(summary.failures(), 2);
        assert!(robustness_grid(&events, &[], &[]).variants.is_empty());
    }

    #[test]
    fn grid_expansion() {
        let axes: GridAxes = serde_json::from_str(r#"{"treatment_transforms": ["log1p", "linear", "binary"]}"#).unwrap();
        assert_eq!(axes.expand().len(), 15);
    }

    #[test]
    fn table_columns() {
        let d = tiny_design(vec![0.3, 1.7, 0.2, 2.5, 0.9, 1.1, 3.0]);
        let csv = table_csv(&fit_fixed_effects(&d).unwrap()).unwrap();
        assert!(csv.starts_with("Variable,Estimate,Std. Error,t-value,p-value\n"));
        assert_eq!(csv.lines().count(), 2);
    }
}
