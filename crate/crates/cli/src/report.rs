//! Machine-readable run reports.
//!
//! Keys are emitted in a fixed order (struct fields, then sorted maps) and
//! wall times only appear when requested, so identical configurations give
//! byte-identical reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const REPORT_SCHEMA: &str = "toric-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Undetermined,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub status: Status,
    pub counters: BTreeMap<String, Value>,
    pub first_failure_certificate: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl SuiteReport {
    pub fn new(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            status: Status::Pass,
            counters: BTreeMap::new(),
            first_failure_certificate: None,
            wall_time: None,
        }
    }

    pub fn count(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.counters.insert(key.to_string(), value.into());
        self
    }

    /// Record a failure; only the first certificate is kept.
    pub fn fail(&mut self, certificate: Value) -> &mut Self {
        self.status = Status::Fail;
        if self.first_failure_certificate.is_none() {
            self.first_failure_certificate = Some(certificate);
        }
        self
    }

    pub fn undetermined(&mut self, certificate: Value) -> &mut Self {
        if self.status == Status::Pass {
            self.status = Status::Undetermined;
            self.first_failure_certificate = Some(certificate);
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub seed: u64,
    pub trials: usize,
    pub status: Status,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn new(seed: u64, trials: usize, suites: Vec<SuiteReport>) -> Self {
        let status = if suites.iter().any(|s| s.status == Status::Fail) {
            Status::Fail
        } else if suites.iter().any(|s| s.status == Status::Undetermined) {
            Status::Undetermined
        } else {
            Status::Pass
        };
        Report { schema: REPORT_SCHEMA.to_string(), seed, trials, status, suites }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn first_certificate_wins() {
        let mut r = SuiteReport::new("x");
        r.fail(json!(1)).fail(json!(2));
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.first_failure_certificate, Some(json!(1)));
        r.undetermined(json!(3));
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn overall_status() {
        let pass = SuiteReport::new("a");
        let mut und = SuiteReport::new("b");
        und.undetermined(json!("why"));
        let mut fail = SuiteReport::new("c");
        fail.fail(json!("bad"));
        assert_eq!(Report::new(0, 1, vec![pass.clone()]).status, Status::Pass);
        assert_eq!(Report::new(0, 1, vec![pass.clone(), und.clone()]).status, Status::Undetermined);
        assert_eq!(Report::new(0, 1, vec![und, fail, pass]).status, Status::Fail);
    }

    #[test]
    fn stable_layout() {
        let mut s = SuiteReport::new("h0");
        s.count("zeta", 1).count("alpha", "1/2");
        let text = Report::new(7, 3, vec![s]).to_json();
        let alpha = text.find("alpha").unwrap();
        assert!(alpha < text.find("zeta").unwrap());
        assert!(text.find("\"schema\"").unwrap() < text.find("\"suites\"").unwrap());
        assert!(!text.contains("wall_time"));
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_json(), text);
    }
}
