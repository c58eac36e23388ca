//! Department x year panels generated from known coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::regress::Design;

#[derive(Debug, Clone, PartialEq)]
pub struct PanelParams {
    pub departments: usize,
    pub years: usize,
    pub beta_events: f64,
    pub beta_hectares: f64,
    pub noise_sd: f64,
    /// Share of department-years with no eradication.
    pub zero_share: f64,
    pub seed: u64,
}

impl Default for PanelParams {
    fn default() -> Self {
        PanelParams {
            departments: 30,
            years: 20,
            beta_events: 0.25,
            beta_hectares: 0.02,
            noise_sd: 0.05,
            zero_share: 0.3,
            seed: 0,
        }
    }
}

/// Outcome and treatment series already on the regression scale
/// (ln(events+1), ln(hectares+1)), with the fixed effects that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedPanel {
    pub params: PanelParams,
    pub departments: Vec<String>,
    pub first_year: i32,
    pub outcome: Vec<Vec<f64>>,
    pub treatment: Vec<Vec<f64>>,
    pub department_effects: Vec<f64>,
    pub year_effects: Vec<f64>,
}

const BURN_IN: usize = 10;

/// y[k][t] = a_k + g_t + beta_e * y[k][t-1] + beta_h * h[k][t-1] + e,
/// started `BURN_IN` years before the recorded span so the first recorded
/// years are already near the stationary distribution.
pub fn planted_panel(params: &PanelParams) -> PlantedPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let total = params.years + BURN_IN;
    let fe_dep = Normal::new(1.0, 0.5).expect("valid normal");
    let fe_year = Normal::new(0.0, 0.2).expect("valid normal");
    let hectares = LogNormal::new(500f64.ln(), 1.5).expect("valid lognormal");
    let noise = Normal::new(0.0, params.noise_sd.max(0.0)).expect("valid normal");

    let department_effects: Vec<f64> = (0..params.departments).map(|_| fe_dep.sample(&mut rng)).collect();
    let year_effects_all: Vec<f64> = (0..total).map(|_| fe_year.sample(&mut rng)).collect();
    let mut outcome = Vec::with_capacity(params.departments);
    let mut treatment = Vec::with_capacity(params.departments);
    for &a in &department_effects {
        let h: Vec<f64> = (0..total)
            .map(|_| {
                if rng.random::<f64>() < params.zero_share {
                    0.0
                } else {
                    hectares.sample(&mut rng).ln_1p()
                }
            })
            .collect();
        let mut y = vec![a / (1.0 - params.beta_events); total];
        for t in 1..total {
            let e = if params.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            y[t] = a + year_effects_all[t] + params.beta_events * y[t - 1] + params.beta_hectares * h[t - 1] + e;
        }
        outcome.push(y[BURN_IN..].to_vec());
        treatment.push(h[BURN_IN..].to_vec());
    }
    PlantedPanel {
        params: params.clone(),
        departments: (0..params.departments).map(|k| format!("D{k:02}")).collect(),
        first_year: 2000,
        outcome,
        treatment,
        department_effects,
        year_effects: year_effects_all[BURN_IN..].to_vec(),
    }
}

impl PlantedPanel {
    pub fn design(&self, lags: usize) -> Design<f64> {
        Design::from_series(
            &self.departments,
            self.first_year,
            &self.outcome,
            &self.treatment,
            lags,
            ("ln(Number of Events +1)", "ln(Number hectares treated +1)"),
        )
    }
}
