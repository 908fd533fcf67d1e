//! Scenario reports: a list of named checks with values, bounds, and
//! pass/fail verdicts, rendered either as deterministic JSON (stable key
//! order, 17-significant-digit floats, byte-identical across re-runs of the
//! same config) or as fixed-width text. Wall-clock time is reported only in
//! the text rendering so the JSON bytes stay reproducible.

use crate::numerics::format_g17;

/// Direction of a check: is the value supposed to stay below the bound
/// (residuals) or above it (fault detections)?
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    AtMost,
    AtLeast,
}

impl CheckMode {
    fn as_str(&self) -> &'static str {
        match self {
            CheckMode::AtMost => "at-most",
            CheckMode::AtLeast => "at-least",
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            CheckMode::AtMost => "<=",
            CheckMode::AtLeast => ">=",
        }
    }
}

/// One named check with its measured value and its bound.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub mode: CheckMode,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            mode: CheckMode::AtMost,
            pass: value.is_finite() && value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            mode: CheckMode::AtLeast,
            pass: value.is_finite() && value >= tolerance,
        }
    }

    /// A check that failed before producing a number (integration blew up,
    /// a conditioning gate refused, ...). The reason is carried in the name
    /// suffix-free report text; the value is the largest finite float so the
    /// JSON stays valid and the verdict is an unambiguous failure.
    pub fn failed(name: impl Into<String>, tolerance: f64, mode: CheckMode) -> Self {
        Check {
            name: name.into(),
            value: f64::MAX,
            tolerance,
            mode,
            pass: false,
        }
    }
}

/// A JSON value with deterministic rendering: object keys keep insertion
/// order and floats print with 17 significant digits.
#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    UInt(u64),
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    pub fn object() -> Json {
        Json::Object(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: Json) {
        if let Json::Object(fields) = self {
            fields.push((key.to_string(), value));
        }
    }

    fn escape(s: &str, out: &mut String) {
        out.push('"');
        for c in s.chars() {
            match c {
                '"' => out.push_str("\\\""),
                '\\' => out.push_str("\\\\"),
                '\n' => out.push_str("\\n"),
                '\r' => out.push_str("\\r"),
                '\t' => out.push_str("\\t"),
                c if (c as u32) < 0x20 => {
                    out.push_str(&format!("\\u{:04x}", c as u32));
                }
                c => out.push(c),
            }
        }
        out.push('"');
    }

    fn write(&self, out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        let pad_in = "  ".repeat(indent + 1);
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(v) => out.push_str(&v.to_string()),
            Json::UInt(v) => out.push_str(&v.to_string()),
            Json::Float(v) => out.push_str(&format_g17(*v)),
            Json::Str(s) => Self::escape(s, out),
            Json::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    out.push_str(&pad_in);
                    item.write(out, indent + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&pad);
                out.push(']');
            }
            Json::Object(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                for (i, (key, value)) in fields.iter().enumerate() {
                    out.push_str(&pad_in);
                    Self::escape(key, out);
                    out.push_str(": ");
                    value.write(out, indent + 1);
                    if i + 1 < fields.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&pad);
                out.push('}');
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }
}

/// The result of running one scenario.
#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: String,
    /// Echo of the fully resolved configuration, in insertion order.
    pub config: Json,
    pub checks: Vec<Check>,
    pub overall_pass: bool,
    /// Wall-clock milliseconds; text output only, never part of the JSON.
    pub wall_ms: f64,
}

impl Report {
    pub fn new(scenario: &str, config: Json, checks: Vec<Check>) -> Self {
        let overall_pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Report {
            scenario: scenario.to_string(),
            config,
            checks,
            overall_pass,
            wall_ms: 0.0,
        }
    }

    /// Deterministic JSON rendering: stable key order, 17-significant-digit
    /// floats, no timing data.
    pub fn to_json(&self) -> String {
        let mut root = Json::object();
        root.push("scenario", Json::Str(self.scenario.clone()));
        root.push("config", self.config.clone());
        let checks = self
            .checks
            .iter()
            .map(|c| {
                let mut item = Json::object();
                item.push("name", Json::Str(c.name.clone()));
                item.push("value", Json::Float(c.value));
                item.push("tolerance", Json::Float(c.tolerance));
                item.push("mode", Json::Str(c.mode.as_str().to_string()));
                item.push("pass", Json::Bool(c.pass));
                item
            })
            .collect();
        root.push("checks", Json::Array(checks));
        root.push("overall_pass", Json::Bool(self.overall_pass));
        root.render()
    }

    /// Fixed-width text rendering, including wall-clock time.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario : {}\n", self.scenario));
        out.push_str(&format!(
            "overall  : {}\n",
            if self.overall_pass { "PASS" } else { "FAIL" }
        ));
        out.push_str(&format!("wall_ms  : {:.3}\n", self.wall_ms));
        out.push_str(&format!(
            "{:<38} {:>24}     {:>24}  {}\n",
            "check", "value", "bound", "result"
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "{:<38} {:>24}  {}  {:>24}  {}\n",
                c.name,
                format_g17(c.value),
                c.mode.symbol(),
                format_g17(c.tolerance),
                if c.pass { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}
