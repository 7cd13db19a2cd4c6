//! Machine-readable report shapes. Absent fields serialize as `null`;
//! maps are ordered, so identical runs produce identical bytes.

use std::collections::BTreeMap;

use serde::Serialize;

use iode_core::classify::SingularPointReport;

#[derive(Serialize)]
pub struct Resonance {
    pub p: u32,
    pub q: u32,
}

/// Singular-point report. Top-level keys are fixed:
/// input, point, kind, lambda, k, resonance, eigenvalues, invariants,
/// residuals, config_digest.
#[derive(Serialize)]
pub struct ClassifyJson {
    pub input: String,
    pub point: Vec<f64>,
    pub kind: String,
    pub lambda: Option<f64>,
    pub k: Option<f64>,
    pub resonance: Option<Resonance>,
    pub eigenvalues: Option<[[f64; 2]; 2]>,
    pub invariants: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
    pub config_digest: String,
}

impl ClassifyJson {
    pub fn from_report(input: &str, report: &SingularPointReport<f64>, digest: &str) -> Self {
        ClassifyJson {
            input: input.to_string(),
            point: report.location.clone(),
            kind: report.kind.label(),
            lambda: report.lambda,
            k: report.k,
            resonance: report.resonance.map(|(p, q)| Resonance { p, q }),
            eigenvalues: report
                .eigenvalues
                .map(|e| [[e[0].0, e[0].1], [e[1].0, e[1].1]]),
            invariants: report.invariants.clone(),
            residuals: report.residuals.clone(),
            config_digest: digest.to_string(),
        }
    }
}

#[derive(Serialize)]
pub struct DaraJson {
    pub order: usize,
    pub holds: bool,
    pub residual: f64,
}

#[derive(Serialize)]
pub struct ClairautEquationJson {
    pub input: String,
    pub clairaut_type: bool,
    pub reduced: bool,
    pub dara: DaraJson,
    pub worst_contact_residual: Option<f64>,
    pub criminant_samples: usize,
    pub config_digest: String,
}

#[derive(Serialize)]
pub struct FamilyValuesJson {
    pub f_t: f64,
    pub f_tt: f64,
    pub f_tx: f64,
    pub f_ttt: f64,
    pub f_txx: f64,
}

#[derive(Serialize)]
pub struct ClairautFamilyJson {
    pub input: String,
    pub kind: String,
    pub diagram: Option<u8>,
    pub values: FamilyValuesJson,
    pub config_digest: String,
}

#[derive(Serialize)]
pub struct SingularPointSummary {
    pub kind: String,
    pub lambda: Option<f64>,
    pub x: f64,
    pub y: f64,
}

#[derive(Serialize)]
pub struct PortraitJson {
    pub output: String,
    pub seed_count: usize,
    pub curve_count: usize,
    pub equilibrium_seeds: usize,
    pub events: BTreeMap<String, usize>,
    pub singular_points: Vec<SingularPointSummary>,
    pub config_digest: String,
}

#[derive(Serialize)]
pub struct TraceJson {
    pub output: String,
    pub samples: usize,
    pub arclength: f64,
    pub events: BTreeMap<String, usize>,
    pub config_digest: String,
}

#[derive(Serialize)]
pub struct CheckJson {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Serialize)]
pub struct ValidateJson {
    pub checks: Vec<CheckJson>,
    pub passed: usize,
    pub failed: usize,
    pub config_digest: String,
}
