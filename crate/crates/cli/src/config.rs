//! Run configuration documents.

use serde::de::DeserializeOwned;
use serde::Deserialize;
use treeweyl::measure::{AtomicMeasure, DiscreteBranchSequence, MeasureClassBounds, MeasureDoc};
use treeweyl::treeops::TreeSpec;

/// A configuration problem tied to a field path.
#[derive(Debug)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { path: path.into(), message: message.into() }
    }
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "schema error at `{}`: {}", self.path, self.message)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig<P> {
    #[serde(default)]
    pub measure: Option<MeasureDoc>,
    #[serde(default)]
    pub tree: Option<TreeDoc>,
    #[serde(default)]
    pub rng: Option<RngDoc>,
    pub command: P,
}

pub fn parse<P: DeserializeOwned>(text: &str) -> Result<RunConfig<P>, SchemaError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: RunConfig<P> = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::new(path, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| SchemaError::new(".", e.to_string()))?;
    Ok(cfg)
}

impl<P> RunConfig<P> {
    pub fn measure(&self) -> Result<(AtomicMeasure, MeasureClassBounds), SchemaError> {
        let doc = self.measure.as_ref().ok_or_else(|| SchemaError::new("measure", "missing field"))?;
        doc.to_measure().map_err(|e| SchemaError::new("measure", e.to_string()))
    }

    pub fn tree(&self) -> Result<TreeSpec, SchemaError> {
        let doc = self.tree.as_ref().ok_or_else(|| SchemaError::new("tree", "missing field"))?;
        let params = doc.params.iter().map(|v| (v.t, v.b)).collect();
        TreeSpec::new(params, doc.epsilon, doc.c).map_err(|e| SchemaError::new("tree", e.to_string()))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDoc {
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub params: Vec<VertexDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub t: f64,
    pub b: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RngAlgorithm {
    Chacha8,
    Chacha20,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngDoc {
    pub algorithm: RngAlgorithm,
    #[serde(default)]
    pub seed: u64,
}

/// Explicit list or `{start, stop, count}` (inclusive, evenly spaced).
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GridDoc {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl GridDoc {
    pub fn points(&self, path: &str) -> Result<Vec<f64>, SchemaError> {
        let pts = match self {
            GridDoc::List(v) => v.clone(),
            GridDoc::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            },
        };
        if pts.is_empty() {
            return Err(SchemaError::new(path, "grid must be nonempty"));
        }
        if let Some(i) = pts.iter().position(|x| !x.is_finite()) {
            return Err(SchemaError::new(format!("{path}[{i}]"), "grid values must be finite"));
        }
        if let Some(i) = pts.windows(2).position(|w| w[1] <= w[0]) {
            return Err(SchemaError::new(format!("{path}[{}]", i + 1), "grid must be strictly increasing"));
        }
        Ok(pts)
    }
}

pub fn positive(value: f64, path: &str) -> Result<f64, SchemaError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(SchemaError::new(path, format!("must be positive and finite, got {value}")))
    }
}

pub fn sequence(values: &[u32], max_value: u32, path: &str) -> Result<DiscreteBranchSequence, SchemaError> {
    DiscreteBranchSequence::new(values.to_vec(), max_value).map_err(|e| SchemaError::new(path, e.to_string()))
}
