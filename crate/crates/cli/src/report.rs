//! Serializable report types. Field order is the serialization order, so a
//! fixed seed yields byte-identical JSON.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InputDigest {
    pub path: String,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ThresholdReport {
    pub value: f64,
    /// "given" when supplied on the command line, "auto" when rule-selected.
    pub mode: String,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PriorReport {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TailReport {
    pub n: usize,
    pub xi: f64,
    pub sigma: f64,
    pub boundary: bool,
    pub method: String,
    pub lambda_mean: f64,
    pub lambda_variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeanReport {
    pub mean: f64,
    pub sd: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BaselineReport {
    pub estimate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiagnosticRow {
    pub u: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<bool>,
    pub selected: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnalysisReport {
    pub input: InputDigest,
    pub seed: u64,
    pub threshold: ThresholdReport,
    pub prior: PriorReport,
    pub tail: TailReport,
    pub mean_posterior: MeanReport,
    pub naive: BaselineReport,
    pub winsorized: BaselineReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<DiagnosticRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EffectReport {
    pub gamma: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AbReport {
    pub a: AnalysisReport,
    pub b: AnalysisReport,
    pub effect: EffectReport,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScanReport {
    pub input: InputDigest,
    pub prior: PriorReport,
    pub rows: Vec<DiagnosticRow>,
    pub selected_u: f64,
    pub low_confidence: bool,
}

impl ScanReport {
    /// Fixed column order: u,n,xi,sigma,ratio,q_n,boundary,selected
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,n,xi,sigma,ratio,q_n,boundary,selected\n");
        for r in &self.rows {
            let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.u,
                r.n,
                opt(&r.xi),
                opt(&r.sigma),
                opt(&r.ratio),
                opt(&r.q_n),
                r.boundary.map(|b| b.to_string()).unwrap_or_default(),
                r.selected
            ));
        }
        out
    }
}
