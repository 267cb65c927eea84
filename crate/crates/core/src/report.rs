/// Text for a float with 17 significant digits (`null` for non-finite values).
pub fn num_text(v: f64) -> String {
    if !v.is_finite() {
        return "null".into();
    }
    format!("{v:.16e}")
}

/// JSON value for a float with 17 significant digits.
pub fn num_value(v: f64) -> serde_json::Value {
    serde_json::from_str(&num_text(v)).expect("valid number literal")
}

/// Outcome of one named check: residual statistics against a tolerance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    /// Builds the result from residuals; `pass` iff every residual is finite
    /// and the maximum is within `tolerance`.
    pub fn from_residuals(name: impl Into<String>, residuals: &[f64], tolerance: f64) -> CheckResult {
        let finite = residuals.iter().all(|r| r.is_finite());
        let max = residuals.iter().copied().fold(0.0f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
        let mean = if residuals.is_empty() { 0.0 } else { residuals.iter().sum::<f64>() / residuals.len() as f64 };
        CheckResult {
            name: name.into(),
            max_residual: max,
            mean_residual: mean,
            tolerance,
            samples: residuals.len(),
            pass: finite && max <= tolerance,
            detail: None,
        }
    }

    /// A check whose residual must exceed `threshold` (negative controls).
    pub fn lower_bound(name: impl Into<String>, value: f64, threshold: f64) -> CheckResult {
        CheckResult {
            name: name.into(),
            max_residual: value,
            mean_residual: value,
            tolerance: threshold,
            samples: 1,
            pass: value.is_finite() && value > threshold,
            detail: Some(format!("requires value > {}", num_text(threshold))),
        }
    }

    /// A boolean check reported as residual 0 or 1.
    pub fn flag(name: impl Into<String>, ok: bool, detail: Option<String>) -> CheckResult {
        let r = if ok { 0.0 } else { 1.0 };
        CheckResult { name: name.into(), max_residual: r, mean_residual: r, tolerance: 0.0, samples: 1, pass: ok, detail }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> CheckResult {
        self.detail = Some(detail.into());
        self
    }

    /// JSON form with 17-digit numbers.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "name": self.name,
            "max_residual": num_value(self.max_residual),
            "mean_residual": num_value(self.mean_residual),
            "tolerance": num_value(self.tolerance),
            "samples": self.samples,
            "pass": self.pass,
        });
        if let Some(d) = &self.detail {
            v["detail"] = serde_json::Value::String(d.clone());
        }
        v
    }
}
