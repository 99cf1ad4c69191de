//! Flat `key = value` scenario configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scenario {
    SpinBloch,
    SpinMaster,
    WeakCompare,
    DecayScan,
    QbmLimit,
    QbmExact,
    QbmSweep,
    BridgeCheck,
    Acceptance,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Self::SpinBloch,
        Self::SpinMaster,
        Self::WeakCompare,
        Self::DecayScan,
        Self::QbmLimit,
        Self::QbmExact,
        Self::QbmSweep,
        Self::BridgeCheck,
        Self::Acceptance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SpinBloch => "spin_bloch",
            Self::SpinMaster => "spin_master",
            Self::WeakCompare => "weak_compare",
            Self::DecayScan => "decay_scan",
            Self::QbmLimit => "qbm_limit",
            Self::QbmExact => "qbm_exact",
            Self::QbmSweep => "qbm_sweep",
            Self::BridgeCheck => "bridge_check",
            Self::Acceptance => "acceptance",
        }
    }

    /// Accepted keys with their defaults; `None` marks a required key.
    pub fn keys(self) -> Vec<KeySpec> {
        use Kind::*;
        let k = |name, kind, default| KeySpec { name, kind, default };
        let out = |v: &mut Vec<KeySpec>| {
            v.push(k("output_path", Text(&[]), Some("")));
            v.push(k("format", Text(&["csv", "json"]), Some("csv")));
        };
        let spin = || {
            vec![
                k("epsilon", Float, Some("1")),
                k("delta", Float, Some("1")),
                k("eta", Float, Some("0.1")),
                k("cutoff", Float, Some("10")),
                k("shape", Text(&["exponential", "hard"]), Some("exponential")),
                k("temperature", Float, Some("1")),
            ]
        };
        let oscillator = |eta, cutoff, temperature| {
            vec![
                k("omega0", Float, Some("1")),
                k("mass", Float, Some("1")),
                k("eta", Float, Some(eta)),
                k("cutoff", Float, Some(cutoff)),
                k("shape", Text(&["exponential", "hard"]), Some("exponential")),
                k("temperature", Float, Some(temperature)),
            ]
        };
        let mut v = match self {
            Self::SpinBloch => {
                let mut v = spin();
                v.extend([
                    k("regime", Text(&["rapid", "weak"]), Some("rapid")),
                    k("initial", FloatList, Some("1,0,0")),
                    k("tau_max", Float, Some("20")),
                    k("tau_points", Count, Some("400")),
                    k("tol", Float, Some("1e-10")),
                ]);
                v
            }
            Self::SpinMaster => {
                let mut v = spin();
                v.extend([
                    k("initial", FloatList, Some("1,0,0")),
                    k("tau_max", Float, Some("20")),
                    k("tau_points", Count, Some("400")),
                    k("tol", Float, Some("1e-10")),
                ]);
                v
            }
            Self::BridgeCheck => {
                let mut v = spin();
                v.extend([
                    k("initial", FloatList, Some("0.6,0.3,0.5")),
                    k("tau_max", Float, Some("50")),
                    k("tau_points", Count, Some("400")),
                    k("tol", Float, Some("1e-10")),
                ]);
                v
            }
            Self::WeakCompare => {
                let mut v = spin();
                v.retain(|s| s.name != "temperature");
                v.push(k("temperature_list", FloatList, Some("0.1,0.5,1,2,5,10")));
                v
            }
            Self::DecayScan => vec![
                k("epsilon", Float, Some("0")),
                k("delta", Float, Some("1")),
                k("gamma_min", Float, Some("0.01")),
                k("gamma_max", Float, Some("4")),
                k("gamma_points", Count, Some("400")),
            ],
            Self::QbmLimit => {
                let mut v = oscillator("0.1", "1", "1");
                v.extend([
                    k("x0", Float, Some("1")),
                    k("p0", Float, Some("0")),
                    k("tau_max", Float, Some("20")),
                    k("tau_points", Count, Some("400")),
                    k("tol", Float, Some("1e-10")),
                ]);
                v
            }
            Self::QbmExact => {
                let mut v = oscillator("0.5", "1", "1");
                v.extend([
                    k("lambda", Float, Some("0.2")),
                    k("tau_max", Float, Some("5")),
                    k("tau_points", Count, Some("400")),
                    k("tol", Float, Some("1e-8")),
                ]);
                v
            }
            Self::QbmSweep => {
                let mut v = oscillator("0.5", "4", "4");
                v.extend([
                    k("lambda_list", FloatList, None),
                    k("tau_min", Float, Some("0.3")),
                    k("tau_max", Float, Some("4.8")),
                    k("tol", Float, Some("1e-7")),
                ]);
                v
            }
            Self::Acceptance => vec![],
        };
        out(&mut v);
        v
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s.trim())
            .ok_or_else(|| ConfigError::UnknownScenario(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Count,
    FloatList,
    /// Free text when the slice is empty, otherwise one of the listed words.
    Text(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Count(usize),
    FloatList(Vec<f64>),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Count(n) => write!(f, "{n}"),
            Value::FloatList(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                f.write_str(&parts.join(","))
            }
            Value::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown key `{key}` for scenario {scenario}")]
    UnknownKey { key: String, scenario: Scenario },
    #[error("key `{key}`: cannot read `{value}` as {expected}")]
    TypeMismatch {
        key: String,
        value: String,
        expected: String,
    },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("usage: {0}")]
    Usage(String),
    #[error("cannot read config `{path}`: {reason}")]
    Io { path: String, reason: String },
}

fn parse_value(key: &str, kind: Kind, raw: &str) -> Result<Value, ConfigError> {
    let raw = raw.trim();
    let mismatch = |expected: &str| ConfigError::TypeMismatch {
        key: key.to_string(),
        value: raw.to_string(),
        expected: expected.to_string(),
    };
    let float = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    match kind {
        Kind::Float => float(raw).map(Value::Float).ok_or_else(|| mismatch("a finite number")),
        Kind::Count => raw
            .parse::<usize>()
            .map(Value::Count)
            .map_err(|_| mismatch("a non-negative integer")),
        Kind::FloatList => {
            let items: Option<Vec<f64>> = raw.split(',').map(float).collect();
            items
                .filter(|v| !v.is_empty())
                .map(Value::FloatList)
                .ok_or_else(|| mismatch("a comma-separated list of numbers"))
        }
        Kind::Text(words) => {
            if words.is_empty() || words.contains(&raw) {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(mismatch(&format!("one of {}", words.join(", "))))
            }
        }
    }
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: n + 1,
            text: line.to_string(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub params: BTreeMap<String, Value>,
}

impl ScenarioConfig {
    /// Resolves defaults, file pairs and overrides, later sources winning.
    /// A `scenario` entry in the file is accepted only if it agrees.
    pub fn resolve(
        scenario: Scenario,
        file: &[(String, String)],
        overrides: &[(String, String)],
    ) -> Result<Self, ConfigError> {
        let specs = scenario.keys();
        let mut raw: BTreeMap<&str, String> = BTreeMap::new();
        for (k, v) in file.iter().chain(overrides) {
            if k == "scenario" {
                let named: Scenario = v.parse()?;
                if named != scenario {
                    return Err(ConfigError::TypeMismatch {
                        key: "scenario".into(),
                        value: v.clone(),
                        expected: scenario.name().into(),
                    });
                }
                continue;
            }
            let spec = specs
                .iter()
                .find(|s| s.name == k)
                .ok_or_else(|| ConfigError::UnknownKey {
                    key: k.clone(),
                    scenario,
                })?;
            raw.insert(spec.name, v.clone());
        }
        let mut params = BTreeMap::new();
        for spec in &specs {
            let text = match (raw.get(spec.name), spec.default) {
                (Some(v), _) => v.as_str(),
                (None, Some(d)) => d,
                (None, None) => return Err(ConfigError::MissingKey(spec.name.to_string())),
            };
            params.insert(spec.name.to_string(), parse_value(spec.name, spec.kind, text)?);
        }
        Ok(Self { scenario, params })
    }

    pub fn from_file(scenario: Scenario, path: &Path, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::resolve(scenario, &parse_pairs(&text)?, overrides)
    }

    fn get(&self, key: &str) -> &Value {
        self.params
            .get(key)
            .unwrap_or_else(|| panic!("scenario {} does not declare `{key}`", self.scenario))
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Float(x) => *x,
            other => panic!("`{key}` is not a number: {other:?}"),
        }
    }

    pub fn count(&self, key: &str) -> usize {
        match self.get(key) {
            Value::Count(n) => *n,
            other => panic!("`{key}` is not a count: {other:?}"),
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.get(key) {
            Value::FloatList(v) => v,
            other => panic!("`{key}` is not a list: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(s) => s,
            other => panic!("`{key}` is not text: {other:?}"),
        }
    }

    /// Every resolved parameter in canonical text form, keyed by name.
    pub fn to_metadata(&self) -> BTreeMap<String, String> {
        self.params.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn flags_override_file() {
        let file = parse_pairs("eta = 1\n# comment\n\ntemperature=3 # trailing\n").unwrap();
        let c = ScenarioConfig::resolve(Scenario::SpinMaster, &file, &pairs(&[("eta", "2")])).unwrap();
        assert_eq!(c.float("eta"), 2.0);
        assert_eq!(c.float("temperature"), 3.0);
    }

    #[test]
    fn documented_defaults() {
        let c = ScenarioConfig::resolve(Scenario::SpinMaster, &[], &[]).unwrap();
        assert_eq!(c.float("tol"), 1e-10);
        assert_eq!(c.count("tau_points"), 400);
        assert_eq!(c.text("format"), "csv");
    }

    #[test]
    fn sweep_requires_lambda_list() {
        let e = ScenarioConfig::resolve(Scenario::QbmSweep, &[], &[]).unwrap_err();
        assert_eq!(e, ConfigError::MissingKey("lambda_list".into()));
        let c = ScenarioConfig::resolve(Scenario::QbmSweep, &pairs(&[("lambda_list", "0.4, 0.2,0.1")]), &[]).unwrap();
        assert_eq!(c.list("lambda_list"), &[0.4, 0.2, 0.1]);
    }

    #[test]
    fn errors_name_the_key() {
        let e = ScenarioConfig::resolve(Scenario::SpinBloch, &pairs(&[("etaa", "1")]), &[]).unwrap_err();
        assert!(e.to_string().contains("`etaa`"));
        let e = ScenarioConfig::resolve(Scenario::SpinBloch, &pairs(&[("tau_points", "4.5")]), &[]).unwrap_err();
        assert!(matches!(&e, ConfigError::TypeMismatch { key, .. } if key == "tau_points"));
        let e = ScenarioConfig::resolve(Scenario::SpinBloch, &pairs(&[("regime", "slow")]), &[]).unwrap_err();
        assert!(e.to_string().contains("`regime`"));
        assert!(parse_pairs("eta 1").is_err());
    }

    #[test]
    fn scenario_entry_must_agree() {
        let ok = pairs(&[("scenario", "decay_scan")]);
        assert!(ScenarioConfig::resolve(Scenario::DecayScan, &ok, &[]).is_ok());
        assert!(ScenarioConfig::resolve(Scenario::SpinBloch, &ok, &[]).is_err());
        assert!("nonsense".parse::<Scenario>().is_err());
    }

    #[test]
    fn metadata_is_canonical() {
        let c = ScenarioConfig::resolve(Scenario::WeakCompare, &pairs(&[("temperature_list", "1, 2.5")]), &[]).unwrap();
        let m = c.to_metadata();
        assert_eq!(m["temperature_list"], "1.0,2.5");
        assert_eq!(m["eta"], "0.1");
    }
}
