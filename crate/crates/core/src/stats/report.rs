use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// How `estimate` is compared with `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|estimate - target| <= band`
    Within,
    /// `estimate <= target + band`
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub quantity: String,
    pub relation: Relation,
    pub target: f64,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub band: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    /// Record whose pass flag follows from `relation`.
    pub fn compare(
        check: &str,
        quantity: impl Into<String>,
        relation: Relation,
        target: f64,
        estimate: f64,
        stderr: Option<f64>,
        band: f64,
    ) -> Self {
        let pass = match relation {
            Relation::Within => (estimate - target).abs() <= band,
            Relation::AtMost => estimate <= target + band,
        };
        Self {
            check: check.to_string(),
            quantity: quantity.into(),
            relation,
            target,
            estimate,
            stderr,
            band,
            pass,
            p_value: None,
            samples: None,
            seeds: None,
            note: None,
        }
    }

    pub fn with_samples(mut self, samples: u64) -> Self {
        self.samples = Some(samples);
        self
    }

    pub fn with_seeds(mut self, seeds: impl Into<String>) -> Self {
        self.seeds = Some(seeds.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub suite: String,
    pub config: BTreeMap<String, Value>,
    pub records: Vec<CheckRecord>,
    pub pass: bool,
}

impl StatReport {
    pub fn new(suite: &str) -> Self {
        Self {
            suite: suite.to_string(),
            config: BTreeMap::new(),
            records: Vec::new(),
            pass: true,
        }
    }

    pub fn echo(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.config.insert(key.to_string(), value.into());
        self
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.pass &= record.pass;
        self.records.push(record);
    }

    pub fn extend(&mut self, other: StatReport) {
        for r in other.records {
            self.push(r);
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialise")
    }

    /// Records as CSV, preceded by `# key=value` lines for the config echo.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# suite={}", self.suite)?;
        for (k, v) in &self.config {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(
            w,
            "check,quantity,relation,target,estimate,stderr,band,pass,p_value"
        )?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for r in &self.records {
            writeln!(
                w,
                "{},\"{}\",{},{:e},{:e},{},{:e},{},{}",
                r.check,
                r.quantity,
                serde_json::to_value(r.relation).unwrap().as_str().unwrap(),
                r.target,
                r.estimate,
                opt(r.stderr),
                r.band,
                r.pass,
                opt(r.p_value),
            )?;
        }
        writeln!(w, "# pass={}", self.pass)?;
        w.flush()
    }
}
