use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Inconclusive,
    Violation,
    Error,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Inconclusive => "INCONCLUSIVE",
            Outcome::Violation => "VIOLATION",
            Outcome::Error => "ERROR",
        }
    }

    /// 0 for pass, 1 for a violation or undecided result, 2 for bad input.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Inconclusive | Outcome::Violation => 1,
            Outcome::Error => 2,
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Violation
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub tag: String,
    pub outcome: Outcome,
    pub detail: String,
}

impl Check {
    pub fn new(label: impl Into<String>, tag: impl Into<String>, outcome: Outcome, detail: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            tag: tag.into(),
            outcome,
            detail: detail.into(),
        }
    }
}

/// What a command hands back before the report is assembled.
#[derive(Debug, Default)]
pub struct CommandResult {
    pub checks: Vec<Check>,
    pub payload: Value,
    /// Extra text appended in text mode, such as a certificate listing.
    pub text: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub outcome: Outcome,
    pub checks: Vec<Check>,
    pub payload: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
    #[serde(skip)]
    pub text: Option<String>,
}

impl Report {
    pub fn new(command: String, config: Value, result: CommandResult) -> Self {
        let outcome = result.checks.iter().map(|c| c.outcome).max().unwrap_or(Outcome::Pass);
        Self {
            command,
            config,
            outcome,
            checks: result.checks,
            payload: result.payload,
            elapsed_ms: None,
            text: result.text,
        }
    }

    pub fn error(command: String, config: Value, message: String) -> Self {
        Self {
            command,
            config,
            outcome: Outcome::Error,
            checks: vec![Check::new("input accepted", "input", Outcome::Error, message)],
            payload: Value::Null,
            elapsed_ms: None,
            text: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        for c in &self.checks {
            let _ = write!(out, "{}: {} ({})", c.label, c.outcome.label(), c.tag);
            if !c.detail.is_empty() {
                let _ = write!(out, " {}", c.detail);
            }
            out.push('\n');
        }
        if let Some(text) = &self.text {
            out.push_str(text);
            if !text.ends_with('\n') {
                out.push('\n');
            }
        }
        if let Some(ms) = self.elapsed_ms {
            let _ = writeln!(out, "elapsed: {ms:.1} ms");
        }
        let _ = writeln!(out, "outcome: {}", self.outcome.label());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_check_decides_the_outcome() {
        let result = CommandResult {
            checks: vec![
                Check::new("a", "t", Outcome::Pass, ""),
                Check::new("b", "t", Outcome::Inconclusive, ""),
            ],
            ..Default::default()
        };
        let r = Report::new("x".into(), Value::Null, result);
        assert_eq!(r.outcome, Outcome::Inconclusive);
        assert_eq!(r.outcome.exit_code(), 1);
        assert!(r.to_text().contains("b: INCONCLUSIVE (t)"));
    }
}
