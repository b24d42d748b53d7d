use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

/// One validation result. Field order is the sort order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    /// Atom, residue or spec field the finding refers to.
    pub subject: String,
    pub message: String,
}

impl Finding {
    pub fn new(severity: Severity, code: &str, message: impl Into<String>, subject: impl Into<String>) -> Self {
        Finding {
            severity,
            code: code.to_string(),
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub fn error(code: &str, message: impl Into<String>, subject: impl Into<String>) -> Self {
        Self::new(Severity::Error, code, message, subject)
    }

    pub fn warning(code: &str, message: impl Into<String>, subject: impl Into<String>) -> Self {
        Self::new(Severity::Warning, code, message, subject)
    }

    pub fn info(code: &str, message: impl Into<String>, subject: impl Into<String>) -> Self {
        Self::new(Severity::Info, code, message, subject)
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}] {}: {}", self.severity, self.code, self.subject, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Findings kept sorted by severity, code, subject, message.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn new(mut findings: Vec<Finding>) -> Self {
        findings.sort();
        ValidationReport { findings }
    }

    pub fn findings(&self) -> &[Finding] {
        &self.findings
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn extend(&mut self, more: impl IntoIterator<Item = Finding>) {
        self.findings.extend(more);
        self.findings.sort();
    }

    pub fn merge(mut self, other: ValidationReport) -> Self {
        self.extend(other.findings);
        self
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn verdict(&self) -> Verdict {
        if self.has_errors() {
            Verdict::Fail
        } else {
            Verdict::Pass
        }
    }

    pub fn with_code<'a>(&'a self, code: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings.iter().filter(move |f| f.code == code)
    }

    /// `{"verdict": ..., "findings": [...]}` with a fixed key order.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            verdict: Verdict,
            findings: &'a [Finding],
        }
        let mut s = serde_json::to_string_pretty(&Doc {
            verdict: self.verdict(),
            findings: &self.findings,
        })
        .expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_severity_code_subject() {
        let r = ValidationReport::new(vec![
            Finding::info("b", "m", "x"),
            Finding::warning("a", "m", "y"),
            Finding::error("z", "m", "b"),
            Finding::error("z", "m", "a"),
        ]);
        let order: Vec<(&str, &str)> = r.findings().iter().map(|f| (f.code.as_str(), f.subject.as_str())).collect();
        assert_eq!(order, vec![("z", "a"), ("z", "b"), ("a", "y"), ("b", "x")]);
        assert_eq!(r.verdict(), Verdict::Fail);
        assert!(r.to_json().starts_with("{\n  \"verdict\": \"fail\""));
    }
}
