//! Job and report documents for the `nilreturn` command.

use serde::{Deserialize, Serialize};

use nilreturn::error::{Error, ErrorEntry};
use nilreturn::oracle::{verify_with, Thresholds, VerificationReport, DEFAULT_EPSILONS, DEFAULT_TOL};
use nilreturn::retmap::{classify, return_map, Classification, Diagnostics, DEFAULT_CLASSIFY_TOL};
use nilreturn::sysnorm::{normalize, ContractionBounds, SystemSpec, DEFAULT_WORKING_ORDER};

pub const SCHEMA_VERSION: &str = "1";

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

fn default_order() -> usize {
    DEFAULT_WORKING_ORDER
}

fn default_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}

/// Optional numeric settings; anything left out takes the library default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absolute_residual: Option<f64>,
}

impl ToleranceOverrides {
    pub fn thresholds(&self) -> Thresholds {
        let d = Thresholds::default();
        Thresholds {
            slope_margin: self.slope_margin.unwrap_or(d.slope_margin),
            fixed_point: self.fixed_point.unwrap_or(d.fixed_point),
            closed_form: self.closed_form.unwrap_or(d.closed_form),
            absolute_residual: self.absolute_residual.unwrap_or(d.absolute_residual),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobDocument {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub k: u32,
    pub l: u32,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub verify: bool,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

impl JobDocument {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("job document: {e}"))
    }

    pub fn spec(&self) -> SystemSpec {
        SystemSpec::new(self.f.clone(), self.g.clone(), self.k, self.l)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ValidationError,
    NumericError,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => EXIT_OK,
            Status::ValidationError => EXIT_VALIDATION,
            Status::NumericError => EXIT_NUMERIC,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizedSummary {
    /// Taylor coefficients of `F = g/f`.
    pub f_coefficients: Vec<f64>,
    pub p: u32,
    pub b0: f64,
    pub b1: f64,
    pub theta_p: f64,
    pub radius_r: f64,
    pub contraction: Option<ContractionBounds>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReturnMapSummary {
    pub order: usize,
    /// `Z₀ … Z_order`.
    pub coefficients: Vec<f64>,
    pub closed_form_leading: [f64; 2],
    pub classification: Classification,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub schema_version: String,
    /// Seconds since the Unix epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub status: Status,
    pub job: JobDocument,
    pub normalized: Option<NormalizedSummary>,
    pub return_map: Option<ReturnMapSummary>,
    pub verification: Option<VerificationReport>,
    pub errors: Vec<ErrorEntry>,
}

impl ReportDocument {
    fn new(job: JobDocument) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            timestamp: None,
            status: Status::Ok,
            job,
            normalized: None,
            return_map: None,
            verification: None,
            errors: Vec::new(),
        }
    }

    fn fail(mut self, stage: &str, err: &Error) -> Self {
        self.status = if err.is_validation() {
            Status::ValidationError
        } else {
            Status::NumericError
        };
        self.errors.push(ErrorEntry::new(stage, err));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// `(ε, Z_series, Z_numeric, residual)` rows, tab separated, with a
    /// header line. Missing numeric values are left empty.
    pub fn table(&self) -> String {
        let mut out = String::from("eps\tz_series\tz_numeric\tresidual\n");
        if let Some(v) = &self.verification {
            for s in &v.samples {
                let opt = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    s.eps,
                    s.z_series,
                    opt(s.z_numeric),
                    opt(s.residual)
                ));
            }
        }
        out
    }
}

/// Minimal report written when the job document itself is unusable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocumentError {
    pub schema_version: String,
    pub status: Status,
    pub errors: Vec<ErrorEntry>,
}

impl ReportDocumentError {
    pub fn unreadable(message: String) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            status: Status::ValidationError,
            errors: vec![ErrorEntry {
                stage: "input".into(),
                code: "invalid_input".into(),
                message,
            }],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs normalization, the return map, classification and, if requested,
/// verification against the numeric oracle.
pub fn run_job(doc: JobDocument) -> ReportDocument {
    let spec = doc.spec();
    let mut report = ReportDocument::new(doc.clone());
    let tol = doc.tolerances.integrator.unwrap_or(DEFAULT_TOL);
    let classify_tol = doc.tolerances.classify.unwrap_or(DEFAULT_CLASSIFY_TOL);

    let ns = match normalize(&spec, doc.order.max(DEFAULT_WORKING_ORDER)) {
        Ok(ns) => ns,
        Err(e) => return report.fail("normalize", &e),
    };
    report.normalized = Some(NormalizedSummary {
        f_coefficients: ns.f_series.coeffs().to_vec(),
        p: ns.p,
        b0: ns.b0,
        b1: ns.b1,
        theta_p: ns.theta_p,
        radius_r: ns.radius_r,
        contraction: ns.contraction_bounds(),
    });

    let res = match return_map(&spec, doc.order) {
        Ok(r) => r,
        Err(e) => return report.fail("retmap", &e),
    };
    report.return_map = Some(ReturnMapSummary {
        order: res.order(),
        coefficients: res.coeffs().to_vec(),
        closed_form_leading: [res.leading_closed_form.0, res.leading_closed_form.1],
        classification: classify(&res, classify_tol),
        diagnostics: res.diagnostics.clone(),
    });

    if doc.verify {
        let v = verify_with(&spec, doc.order, &doc.epsilons, tol, &doc.tolerances.thresholds());
        if !v.errors.is_empty() {
            report.status = if v.errors.iter().any(ErrorEntry::is_validation) {
                Status::ValidationError
            } else {
                Status::NumericError
            };
            report.errors.extend(v.errors.iter().cloned());
        }
        report.verification = Some(v);
    }
    report
}
