//! Config-file support: a TOML file mirrors every flag of the
//! subcommands; explicit command-line flags win over file values.

use std::path::PathBuf;

use serde::Deserialize;

use pintwave::{Error, Result};

/// Raw config file contents. Scalar-or-list fields accept both shapes;
/// `h` additionally accepts the `2^-7` spelling as a string.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub gamma: Option<OneOrMany<f64>>,
    pub h: Option<OneOrMany<HValue>>,
    pub precond: Option<OneOrMany<String>>,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    pub out: Option<PathBuf>,
    pub strict: Option<bool>,
    pub allow_large: Option<bool>,
    pub preset: Option<String>,
    pub m: Option<usize>,
    pub n: Option<OneOrMany<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum HValue {
    Number(f64),
    Text(String),
}

impl HValue {
    pub fn parse(&self) -> Result<f64> {
        match self {
            HValue::Number(v) => validate_h(*v),
            HValue::Text(s) => parse_h(s),
        }
    }
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
    }
}

/// Accepts `2^-7`, `1/128` or a plain float.
pub fn parse_h(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("2^") {
        let exp: i32 = rest
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad mesh step `{s}`")))?;
        return validate_h(2f64.powi(exp));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad mesh step `{s}`")))?;
        let den: f64 = den
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad mesh step `{s}`")))?;
        return validate_h(num / den);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad mesh step `{s}`")))?;
    validate_h(v)
}

fn validate_h(v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!(
            "mesh step must lie in (0, 1), got {v}"
        )))
    }
}
