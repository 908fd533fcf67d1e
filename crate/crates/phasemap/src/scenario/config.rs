//! Scenario configuration: a single JSON file with a scenario name, the
//! shared knobs (`n`, `seed`, `steps`), per-check tolerance overrides, and a
//! scenario-specific parameter table. Unknown keys are rejected everywhere;
//! matrices arrive as row-major lists and are dimension-checked at load.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five named verification scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    FlatMapVerify,
    RiccatiFamily,
    EmbedCheck,
    CalabiCurvature,
    ReductionCheck,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [
        ScenarioName::FlatMapVerify,
        ScenarioName::RiccatiFamily,
        ScenarioName::EmbedCheck,
        ScenarioName::CalabiCurvature,
        ScenarioName::ReductionCheck,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "flat-map-verify" => Ok(ScenarioName::FlatMapVerify),
            "riccati-family" => Ok(ScenarioName::RiccatiFamily),
            "embed-check" => Ok(ScenarioName::EmbedCheck),
            "calabi-curvature" => Ok(ScenarioName::CalabiCurvature),
            "reduction-check" => Ok(ScenarioName::ReductionCheck),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}'; expected one of flat-map-verify, \
                 riccati-family, embed-check, calabi-curvature, reduction-check"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::FlatMapVerify => "flat-map-verify",
            ScenarioName::RiccatiFamily => "riccati-family",
            ScenarioName::EmbedCheck => "embed-check",
            ScenarioName::CalabiCurvature => "calabi-curvature",
            ScenarioName::ReductionCheck => "reduction-check",
        }
    }

    /// Scenario-specific default for the size knob `n`.
    pub fn default_n(&self) -> usize {
        match self {
            ScenarioName::FlatMapVerify => 4,
            ScenarioName::RiccatiFamily => 6,
            ScenarioName::EmbedCheck => 4,
            ScenarioName::CalabiCurvature => 2,
            ScenarioName::ReductionCheck => 4,
        }
    }
}

/// A dense matrix in config form: shape plus row-major data.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixSpec {
    pub fn to_matrix(&self, key: &str) -> Result<DMatrix<f64>> {
        if self.rows * self.cols != self.data.len() {
            return Err(Error::Config(format!(
                "parameter '{key}': {}x{} matrix needs {} entries, got {}",
                self.rows,
                self.cols,
                self.rows * self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

/// Scenario-specific knobs. One shared table keeps the config format flat;
/// each scenario reads the fields it understands and ignores the rest, but
/// keys outside this table are rejected at parse time.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioParameters {
    /// Target-side flat signature (+-1 entries), length `n`.
    pub y4_signature: Option<Vec<i32>>,
    /// Source-side flat signature (+-1 entries), length `n`.
    pub z4_signature: Option<Vec<i32>>,
    /// Fixed seed quadrant; when absent, drawn uniformly from [-1, 1].
    pub t3: Option<MatrixSpec>,
    /// Number of random draws (transport seeds, family members, ...).
    pub draws: Option<usize>,
    /// Polynomial degree for family data.
    pub degree: Option<usize>,
    /// Family construction: "first", "second", or "both".
    pub variant: Option<String>,
    /// Zero out every free function of the family (trivial member).
    pub zero_functions: Option<bool>,
    /// Amplitude `a` of the parameter change `t = tau + a sin(k tau)`.
    pub rep_amplitude: Option<f64>,
    /// Frequency `k` of the parameter change (needs `|a k| < 1`).
    pub rep_frequency: Option<f64>,
    /// Flat signature for the embedding checks (+-1 entries), length `n`.
    pub signature: Option<Vec<i32>>,
    /// Random embedding points to draw over the vielbein catalog.
    pub points: Option<usize>,
    /// Samples along the unit-speed curve for line-element chains.
    pub samples: Option<usize>,
    /// Arc length of the unit-speed curve.
    pub curve_length: Option<f64>,
    /// Potential catalog entry for curvature checks.
    pub potential: Option<String>,
    /// Coupling strength for potentials that take one.
    pub epsilon: Option<f64>,
    /// Half-width of the sampling box around the origin.
    pub box_half_width: Option<f64>,
    /// Independent velocity/momentum consistency draws.
    pub velocity_checks: Option<usize>,
    /// Expect the configured potential's curvature to vanish, and check it.
    pub expect_flat: Option<bool>,
    /// When set, integrating scenarios also write their reference
    /// trajectory as CSV to this path.
    pub trajectory_csv: Option<String>,
}

/// The on-disk config shape. Everything but the scenario name is optional
/// and falls back to scenario defaults.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub tolerances: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub parameters: Option<ScenarioParameters>,
}

impl ScenarioConfig {
    /// Parses a config from JSON text; parse errors keep serde's line and
    /// column context.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    /// Reads and parses a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    /// Minimal config for a named scenario with all defaults.
    pub fn defaults_for(name: ScenarioName) -> Self {
        ScenarioConfig {
            scenario: name.as_str().to_string(),
            n: None,
            seed: None,
            steps: None,
            tolerances: None,
            parameters: None,
        }
    }

    /// Resolves the scenario name, the shared knobs, and the parameter
    /// table against scenario defaults. Tolerance defaults are merged by
    /// the individual scenario runners (they own the check lists).
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let name = ScenarioName::parse(&self.scenario)?;
        let n = self.n.unwrap_or_else(|| name.default_n());
        if n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        let seed = self.seed.unwrap_or(42);
        let steps = self.steps.unwrap_or(1000);
        if steps == 0 {
            return Err(Error::Config("steps must be positive".into()));
        }
        Ok(ResolvedConfig {
            name,
            n,
            seed,
            steps,
            overrides: self.tolerances.clone().unwrap_or_default(),
            parameters: self.parameters.clone().unwrap_or_default(),
        })
    }
}

/// A config with scenario defaults applied.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub name: ScenarioName,
    pub n: usize,
    pub seed: u64,
    pub steps: usize,
    /// User tolerance overrides by check-family name.
    pub overrides: BTreeMap<String, f64>,
    pub parameters: ScenarioParameters,
}

impl ResolvedConfig {
    /// Tolerance for `key`: the user override if present, else `default`.
    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.overrides.get(key).copied().unwrap_or(default)
    }

    /// Signature entries resolved against a default of `+1` everywhere
    /// except the last slot.
    pub fn signature_or_default(&self, given: &Option<Vec<i32>>, key: &str) -> Result<Vec<i32>> {
        let signs = match given {
            Some(s) => s.clone(),
            None => {
                let mut s = vec![1; self.n];
                if self.n > 1 {
                    s[self.n - 1] = -1;
                }
                s
            }
        };
        if signs.len() != self.n {
            return Err(Error::Config(format!(
                "parameter '{key}': expected {} signature entries, got {}",
                self.n,
                signs.len()
            )));
        }
        if signs.iter().any(|v| *v != 1 && *v != -1) {
            return Err(Error::Config(format!(
                "parameter '{key}': signature entries must be +1 or -1"
            )));
        }
        Ok(signs)
    }

    /// The smooth parameter change `t = tau + a sin(k tau)` with its
    /// derivative, kept monotone by requiring `|a k| < 1`. Scenarios pass
    /// their own defaults; config values win over both.
    pub fn reparameterization(
        &self,
        default_amplitude: f64,
        default_frequency: f64,
    ) -> Result<crate::phase_space::Reparameterization> {
        let a = self.parameters.rep_amplitude.unwrap_or(default_amplitude);
        let k = self.parameters.rep_frequency.unwrap_or(default_frequency);
        if (a * k).abs() >= 1.0 {
            return Err(Error::Config(format!(
                "rep_amplitude * rep_frequency = {} leaves the parameter change \
                 non-monotone; need |a k| < 1",
                a * k
            )));
        }
        Ok(crate::phase_space::Reparameterization::new(
            move |tau| tau + a * (k * tau).sin(),
            move |tau| 1.0 + a * k * (k * tau).cos(),
        ))
    }
}
