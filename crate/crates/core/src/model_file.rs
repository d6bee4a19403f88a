//! Versioned text model format.
//!
//! ```text
//! webspam-model
//! schema 1
//! layers 31 10 1
//! activation bipolar-sigmoid 2e0
//! groups url+content+links
//! normalization minmax 31
//! norm <min> <max>            one line per selected feature
//! params 331
//! <value>                     one line per parameter, flat layout of Network
//! checksum <sha256 hex of every preceding byte>
//! ```
//!
//! `activation logistic` takes no steepness; `normalization none` has no
//! `norm` lines. Floats use Rust's shortest round-trip exponent form, so a
//! load of a save is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{NormalizationStats, Scheme};
use crate::features::{FeatureGroups, FeatureVector};
use crate::metrics::Label;
use crate::network::{Activation, Network, NetworkError};

pub const MODEL_SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "webspam-model";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unsupported model schema version {found} (this build reads {supported})")]
    Version { found: u32, supported: u32 },
    #[error("malformed model file at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("model checksum mismatch (file says {stored}, content hashes to {actual})")]
    Checksum { stored: String, actual: String },
    #[error("model I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid network in model: {0}")]
    Network(#[from] NetworkError),
    #[error("feature schema mismatch: model expects {model}, input has {input}")]
    Schema { model: FeatureGroups, input: FeatureGroups },
}

impl ModelError {
    /// Stable numeric code per error kind, used as the CLI exit status.
    pub fn code(&self) -> i32 {
        match self {
            ModelError::Version { .. } => 10,
            ModelError::Malformed { .. } => 11,
            ModelError::Checksum { .. } => 12,
            ModelError::Io(_) => 13,
            ModelError::Network(_) => 14,
            ModelError::Schema { .. } => 15,
        }
    }
}

/// A trained network plus what is needed to feed it raw feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub network: Network,
    pub groups: FeatureGroups,
    pub normalization: Option<NormalizationStats>,
}

impl Model {
    /// Network output for one feature vector, after normalization.
    pub fn output(&self, features: &FeatureVector) -> Result<f64, ModelError> {
        if features.groups != self.groups {
            return Err(ModelError::Schema { model: self.groups, input: features.groups });
        }
        let mut x = features.selected(self.groups);
        if let Some(stats) = &self.normalization {
            stats.scale(&mut x);
        }
        Ok(self.network.predict(&x)?[0])
    }

    pub fn classify(&self, features: &FeatureVector) -> Result<Label, ModelError> {
        Ok(Label::from_output(self.output(features)?))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "schema {MODEL_SCHEMA_VERSION}");
        let sizes: Vec<String> = self.network.layer_sizes().iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "layers {}", sizes.join(" "));
        match self.network.activation() {
            Activation::Logistic => s.push_str("activation logistic\n"),
            Activation::BipolarSigmoid { steepness } => {
                let _ = writeln!(s, "activation bipolar-sigmoid {steepness:e}");
            }
        }
        let _ = writeln!(s, "groups {}", self.groups);
        match &self.normalization {
            None => s.push_str("normalization none\n"),
            Some(n) => {
                let _ = writeln!(s, "normalization {} {}", n.scheme.tag(), n.min.len());
                for (lo, hi) in n.min.iter().zip(&n.max) {
                    let _ = writeln!(s, "norm {lo:e} {hi:e}");
                }
            }
        }
        let _ = writeln!(s, "params {}", self.network.param_count());
        for p in self.network.params() {
            let _ = writeln!(s, "{p:e}");
        }
        let digest = hex_digest(s.as_bytes());
        let _ = writeln!(s, "checksum {digest}");
        s
    }

    pub fn from_text(text: &str) -> Result<Model, ModelError> {
        let lines: Vec<&str> = text.lines().collect();
        let mut cur = Cursor { lines: &lines, pos: 0 };
        if cur.next("magic line")? != MAGIC {
            return Err(cur.err("not a webspam model file"));
        }
        let version: u32 = cur.keyed("schema")?.parse().map_err(|_| cur.err("bad schema version"))?;
        if version != MODEL_SCHEMA_VERSION {
            return Err(ModelError::Version { found: version, supported: MODEL_SCHEMA_VERSION });
        }
        verify_checksum(text, &lines)?;

        let sizes = cur
            .keyed("layers")?
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| cur.err("bad layer size"))?;
        let act = cur.keyed("activation")?;
        let activation = match act.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["logistic"] => Activation::Logistic,
            ["bipolar-sigmoid", a] => Activation::bipolar(a.parse().map_err(|_| cur.err("bad steepness"))?)
                .map_err(|e| cur.err(&e.to_string()))?,
            _ => return Err(cur.err("unknown activation")),
        };
        let groups: FeatureGroups = cur.keyed("groups")?.parse().map_err(|e| cur.err(&format!("{e}")))?;
        let norm = cur.keyed("normalization")?;
        let normalization = match norm.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["none"] => None,
            ["minmax", k] => {
                let k: usize = k.parse().map_err(|_| cur.err("bad normalization width"))?;
                if k != groups.feature_count() {
                    return Err(cur.err("normalization width does not match feature groups"));
                }
                let (mut min, mut max) = (Vec::with_capacity(k), Vec::with_capacity(k));
                for _ in 0..k {
                    let pair = cur.keyed("norm")?;
                    let mut it = pair.split_whitespace().map(str::parse::<f64>);
                    match (it.next(), it.next(), it.next()) {
                        (Some(Ok(lo)), Some(Ok(hi)), None) => {
                            min.push(lo);
                            max.push(hi);
                        }
                        _ => return Err(cur.err("bad norm line")),
                    }
                }
                Some(NormalizationStats { scheme: Scheme::MinMax, groups, min, max })
            }
            _ => return Err(cur.err("unknown normalization scheme")),
        };
        let count: usize = cur.keyed("params")?.parse().map_err(|_| cur.err("bad parameter count"))?;
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            let v = cur.next("parameter")?;
            params.push(v.trim().parse::<f64>().map_err(|_| cur.err("bad parameter value"))?);
        }
        if !cur.next("checksum")?.starts_with("checksum ") {
            return Err(cur.err("expected checksum line"));
        }
        let network = Network::from_params(&sizes, activation, params)?;
        if network.input_size() != groups.feature_count() {
            return Err(ModelError::Malformed {
                line: 3,
                reason: format!(
                    "input layer {} does not match {} features of `{groups}`",
                    network.input_size(),
                    groups.feature_count()
                ),
            });
        }
        Ok(Model { network, groups, normalization })
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn verify_checksum(text: &str, lines: &[&str]) -> Result<(), ModelError> {
    let last = lines.len();
    let stored = lines.last().and_then(|l| l.strip_prefix("checksum ")).ok_or_else(|| ModelError::Malformed {
        line: last,
        reason: "missing checksum line (truncated file?)".into(),
    })?;
    let body_len = text.rfind("checksum ").unwrap_or(0);
    let actual = hex_digest(&text.as_bytes()[..body_len]);
    if stored.trim() != actual {
        return Err(ModelError::Checksum { stored: stored.trim().to_string(), actual });
    }
    Ok(())
}

struct Cursor<'a> {
    lines: &'a [&'a str],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, reason: &str) -> ModelError {
        ModelError::Malformed { line: self.pos, reason: reason.to_string() }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, ModelError> {
        let line = self.lines.get(self.pos).copied();
        self.pos += 1;
        line.ok_or_else(|| self.err(&format!("unexpected end of file, expected {what}")))
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str, ModelError> {
        let line = self.next(key)?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(&format!("expected `{key}` line")))
    }
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelError> {
    std::fs::write(path, model.to_text())?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model, ModelError> {
    Model::from_text(&std::fs::read_to_string(path)?)
}
