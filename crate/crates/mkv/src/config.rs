//! Line-oriented experiment configuration: `key = value` entries under
//! `[section]` headers, a fixed per-section key schema with typed values,
//! and byte-stable serialization. Every piece of randomness in a run flows
//! from the single `output.seed` key; submodules derive child seeds by
//! hashing `(seed, purpose tag)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Real(_) => "real",
            Value::Int(_) => "integer",
            Value::Text(_) => "text",
            Value::Bool(_) => "boolean",
        }
    }

    fn serialize(&self) -> String {
        match self {
            Value::Real(x) => {
                if x.is_infinite() {
                    if *x > 0.0 { "inf".into() } else { "-inf".into() }
                } else {
                    format!("{x:?}")
                }
            }
            Value::Int(n) => n.to_string(),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Real,
    Int,
    Text,
    Bool,
}

/// The key schema: `(section, key, type)` triples.
const SCHEMA: &[(&str, &str, Kind)] = &[
    ("model", "kind", Kind::Text),
    ("model", "chi", Kind::Real),
    ("model", "cutoff", Kind::Real),
    ("model", "epsilon", Kind::Real),
    ("noise", "alpha", Kind::Real),
    ("noise", "diffusivity", Kind::Real),
    ("noise", "measure", Kind::Text),
    ("grid", "d", Kind::Int),
    ("grid", "half_width", Kind::Real),
    ("grid", "n", Kind::Int),
    ("initial", "kind", Kind::Text),
    ("initial", "center", Kind::Real),
    ("initial", "sigma", Kind::Real),
    ("initial", "path", Kind::Text),
    ("solver", "t_start", Kind::Real),
    ("solver", "horizon", Kind::Real),
    ("solver", "mesh_m", Kind::Int),
    ("solver", "grading", Kind::Real),
    ("solver", "picard_tol", Kind::Real),
    ("solver", "picard_max", Kind::Int),
    ("solver", "theta_frac", Kind::Real),
    ("solver", "blowup_factor", Kind::Real),
    ("solver", "fixed_segments", Kind::Int),
    ("solver", "snapshots", Kind::Int),
    ("solver", "r", Kind::Real),
    ("solver", "p", Kind::Real),
    ("solver", "q", Kind::Real),
    ("solver", "beta", Kind::Real),
    ("solver", "p0", Kind::Real),
    ("solver", "q0", Kind::Real),
    ("solver", "beta0", Kind::Real),
    ("solver", "eta", Kind::Real),
    ("solver", "has_div_bound", Kind::Bool),
    ("particles", "n", Kind::Int),
    ("particles", "dt", Kind::Real),
    ("particles", "horizon", Kind::Real),
    ("particles", "bandwidth", Kind::Real),
    ("particles", "snapshot_every", Kind::Int),
    ("particles", "compare", Kind::Text),
    ("besov", "field", Kind::Text),
    ("besov", "gamma", Kind::Real),
    ("besov", "ell", Kind::Real),
    ("besov", "m", Kind::Real),
    ("compare", "a", Kind::Text),
    ("compare", "b", Kind::Text),
    ("output", "dir", Kind::Text),
    ("output", "seed", Kind::Int),
];

const SECTIONS: &[&str] =
    &["model", "noise", "grid", "initial", "solver", "particles", "besov", "compare", "output"];

fn lookup(section: &str, key: &str) -> Option<Kind> {
    SCHEMA
        .iter()
        .find(|(s, k, _)| *s == section && *k == key)
        .map(|(_, _, kind)| *kind)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    /// section -> key -> value; ordered for stable serialization.
    pub sections: BTreeMap<String, BTreeMap<String, Value>>,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut section: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::Config(format!(
                        "line {}: unknown section `[{}]`",
                        lineno + 1,
                        name
                    )));
                }
                section = Some(name.to_string());
                cfg.sections.entry(name.to_string()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            let Some(section) = &section else {
                return Err(Error::Config(format!(
                    "line {}: `{key}` appears before any [section] header",
                    lineno + 1
                )));
            };
            let Some(kind) = lookup(section, key) else {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{key}` in section [{section}]",
                    lineno + 1
                )));
            };
            let parsed = Self::parse_value(kind, value).ok_or_else(|| {
                Error::Config(format!(
                    "line {}: [{}] {} expects a {} value, got `{}`",
                    lineno + 1,
                    section,
                    key,
                    match kind {
                        Kind::Real => "real",
                        Kind::Int => "integer",
                        Kind::Text => "text",
                        Kind::Bool => "boolean",
                    },
                    value
                ))
            })?;
            cfg.sections.get_mut(section).unwrap().insert(key.to_string(), parsed);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn parse_value(kind: Kind, text: &str) -> Option<Value> {
        match kind {
            Kind::Real => match text {
                "inf" | "+inf" => Some(Value::Real(f64::INFINITY)),
                "-inf" => Some(Value::Real(f64::NEG_INFINITY)),
                _ => text.parse::<f64>().ok().map(Value::Real),
            },
            Kind::Int => text.parse::<i64>().ok().map(Value::Int),
            Kind::Bool => text.parse::<bool>().ok().map(Value::Bool),
            Kind::Text => {
                if text.is_empty() {
                    None
                } else {
                    Some(Value::Text(text.to_string()))
                }
            }
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (section, entries) in &self.sections {
            let _ = writeln!(out, "[{section}]");
            for (key, value) in entries {
                let _ = writeln!(out, "{key} = {}", value.serialize());
            }
            out.push('\n');
        }
        out
    }

    /// Cross-field validation: ranges and cross-section references.
    fn validate(&mut self) -> Result<()> {
        if let Some(alpha) = self.get_real("noise", "alpha") {
            if !(alpha > 1.0 && alpha <= 2.0) {
                return Err(Error::Config("alpha must lie in (1, 2]".into()));
            }
        }
        if let Some(kind) = self.get_text("model", "kind") {
            let d = self.get_int("grid", "d");
            let admissible = match kind.as_str() {
                "burgers" => d.map_or(true, |d| d == 1),
                "vortex2d" => d.map_or(true, |d| d == 2),
                "keller_segel" => d.map_or(true, |d| d >= 2),
                "custom" | "none" => true,
                other => {
                    return Err(Error::Config(format!(
                        "model kind must be burgers|vortex2d|keller_segel|custom|none, got `{other}`"
                    )))
                }
            };
            if !admissible {
                return Err(Error::Config(format!(
                    "model `{kind}` is not admissible in dimension {:?}",
                    d.unwrap()
                )));
            }
        }
        if let Some(measure) = self.get_text("noise", "measure") {
            if !["isotropic", "cylindrical"].contains(&measure.as_str()) {
                return Err(Error::Config(format!(
                    "noise measure must be isotropic or cylindrical, got `{measure}`"
                )));
            }
        }
        if let Some(kind) = self.get_text("initial", "kind") {
            match kind.as_str() {
                "gaussian" => {}
                "file" => {
                    if self.get_text("initial", "path").is_none() {
                        return Err(Error::Config(
                            "initial kind `file` needs `path` in [initial]".into(),
                        ));
                    }
                }
                other => {
                    return Err(Error::Config(format!(
                        "initial kind must be gaussian or file, got `{other}`"
                    )))
                }
            }
        }
        let beta = self.get_real("solver", "beta");
        let has_div = self.get_bool("solver", "has_div_bound").unwrap_or(false);
        if beta == Some(-1.0) && !has_div {
            self.warnings.push(
                "beta = -1 without has_div_bound = true: condition (C2) unavailable".into(),
            );
        }
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Value> {
        self.sections.get(section)?.get(key)
    }

    pub fn get_real(&self, section: &str, key: &str) -> Option<f64> {
        match self.get(section, key) {
            Some(Value::Real(x)) => Some(*x),
            Some(Value::Int(n)) => Some(*n as f64),
            _ => None,
        }
    }

    pub fn get_int(&self, section: &str, key: &str) -> Option<i64> {
        match self.get(section, key) {
            Some(Value::Int(n)) => Some(*n),
            _ => None,
        }
    }

    pub fn get_text(&self, section: &str, key: &str) -> Option<String> {
        match self.get(section, key) {
            Some(Value::Text(s)) => Some(s.clone()),
            _ => None,
        }
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Option<bool> {
        match self.get(section, key) {
            Some(Value::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn set(&mut self, section: &str, key: &str, value: Value) -> Result<()> {
        let Some(kind) = lookup(section, key) else {
            return Err(Error::Config(format!("unknown key [{section}] {key}")));
        };
        let ok = matches!(
            (&value, kind),
            (Value::Real(_), Kind::Real)
                | (Value::Int(_), Kind::Int)
                | (Value::Text(_), Kind::Text)
                | (Value::Bool(_), Kind::Bool)
        );
        if !ok {
            return Err(Error::Config(format!(
                "[{section}] {key} expects {kind:?}, got {}",
                value.type_name()
            )));
        }
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value);
        Ok(())
    }

    /// Required typed accessors with a uniform diagnostic.
    pub fn require_real(&self, section: &str, key: &str) -> Result<f64> {
        self.get_real(section, key)
            .ok_or_else(|| Error::Config(format!("missing [{section}] {key}")))
    }

    pub fn require_int(&self, section: &str, key: &str) -> Result<i64> {
        self.get_int(section, key)
            .ok_or_else(|| Error::Config(format!("missing [{section}] {key}")))
    }

    pub fn require_text(&self, section: &str, key: &str) -> Result<String> {
        self.get_text(section, key)
            .ok_or_else(|| Error::Config(format!("missing [{section}] {key}")))
    }
}

/// FNV-1a over the tag, mixed with the master seed by splitmix64: the child
/// seed derivation shared by every subsystem.
pub fn child_seed(master: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in tag.bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
