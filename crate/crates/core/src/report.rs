use serde::Serialize;
use std::fmt;

/// One named check with its measured residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

/// Ordered list of structural checks. Passes iff every entry passes.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `residual < threshold` under `name`. NaN residuals fail.
    pub fn record(&mut self, name: impl Into<String>, residual: f64, threshold: f64) -> &mut Check {
        let passed = residual < threshold;
        self.push(Check {
            name: name.into(),
            residual,
            threshold,
            passed,
            detail: String::new(),
        })
    }

    /// Records a check whose outcome was decided by the caller.
    pub fn record_outcome(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) -> &mut Check {
        self.push(Check {
            name: name.into(),
            residual: if passed { 0.0 } else { 1.0 },
            threshold: 0.5,
            passed,
            detail: detail.into(),
        })
    }

    fn push(&mut self, check: Check) -> &mut Check {
        self.checks.push(check);
        self.checks.last_mut().expect("just pushed")
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
    }

    /// Appends `other` with every check name prefixed by `prefix.`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: ValidationReport) {
        self.checks.extend(other.checks.into_iter().map(|mut c| {
            c.name = format!("{prefix}.{}", c.name);
            c
        }));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl Check {
    pub fn with_detail(&mut self, detail: impl Into<String>) -> &mut Self {
        self.detail = detail.into();
        self
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "pass" } else { "FAIL" };
            write!(
                f,
                "[{tag}] {:<40} residual={:.3e} threshold={:.1e}",
                c.name, c.residual, c.threshold
            )?;
            if !c.detail.is_empty() {
                write!(f, "  {}", c.detail)?;
            }
            writeln!(f)?;
        }
        write!(
            f,
            "overall: {}",
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}
