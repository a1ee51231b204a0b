//! JSON documents read and written by the command-line tool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qudit_core::measurement::{DistributionSource, ProbabilityDistribution};
use qudit_core::state::normalize;
use qudit_core::{Complex64, PureState};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON in {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
}

/// `[re, im]` pairs.
pub type ComplexPairs = Vec<[f64; 2]>;

pub fn to_pairs(v: &[Complex64]) -> ComplexPairs {
    v.iter().map(|c| [c.re, c.im]).collect()
}

pub fn from_pairs(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDoc {
    pub dim: usize,
    pub amps: ComplexPairs,
}

impl StateDoc {
    pub fn from_state(s: &PureState) -> Self {
        StateDoc {
            dim: s.dim(),
            amps: to_pairs(s.amps()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionDoc {
    pub dim: usize,
    pub source: String,
    pub probs: Vec<f64>,
}

/// Stamp carried by every output document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub tol: f64,
}

impl Provenance {
    pub fn new(seed: u64, tol: f64) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            tol,
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Read {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| InputError::Parse {
        path: path.to_owned(),
        source,
    })
}

fn invalid(path: &Path, reason: impl ToString) -> InputError {
    InputError::Invalid {
        path: path.to_owned(),
        reason: reason.to_string(),
    }
}

/// Reads a state file; unnormalized amplitudes are rejected unless `renormalize`.
pub fn read_state(path: &Path, renormalize: bool) -> Result<PureState, InputError> {
    let doc: StateDoc = read_json(path)?;
    state_from_doc(&doc, renormalize).map_err(|reason| invalid(path, reason))
}

pub fn state_from_doc(doc: &StateDoc, renormalize: bool) -> Result<PureState, String> {
    if doc.amps.len() != doc.dim {
        return Err(format!("dim is {} but {} amplitudes given", doc.dim, doc.amps.len()));
    }
    let amps = from_pairs(&doc.amps);
    if amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err("amplitudes must be finite".into());
    }
    let state = if renormalize {
        normalize(&amps)
    } else {
        PureState::new(amps)
    };
    state.map_err(|e| match e {
        qudit_core::Error::NotNormalized { .. } => format!("{e}; pass --renormalize to rescale"),
        _ => e.to_string(),
    })
}

pub fn read_distribution(path: &Path) -> Result<ProbabilityDistribution, InputError> {
    let doc: DistributionDoc = read_json(path)?;
    if doc.probs.len() != doc.dim {
        return Err(invalid(
            path,
            format!("dim is {} but {} probabilities given", doc.dim, doc.probs.len()),
        ));
    }
    let source: DistributionSource = doc.source.parse().map_err(|e| invalid(path, e))?;
    ProbabilityDistribution::new(doc.probs, source).map_err(|e| invalid(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output documents serialize");
    text.push('\n');
    text
}

/// Writes to `out`, or stdout when `None`.
pub fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}
