//! JSON model documents.
//!
//! A document is a flat object with a `variant` tag, the variant's parameters,
//! and an optional `seed`:
//!
//! ```json
//! {"variant": "er_graph", "vertices": 4, "edge_probability": 0.5,
//!  "weights": 1.0, "thresholds": 1, "seed": 7}
//! ```
//!
//! `weights` and `thresholds` accept either one value for every urn or a list.

use serde::{Deserialize, Serialize};

use super::{Density, ErGraph, Field, GgNeighbors, GgVolume, Hypergeometric, ModelSpec, Multinomial};
use crate::error::{Error, Result};

/// One value shared by every urn, or one value per urn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUrn<T> {
    All(T),
    Each(Vec<T>),
}

impl<T: Clone> PerUrn<T> {
    pub fn expand(&self, m: usize, name: &str) -> Result<Vec<T>> {
        match self {
            PerUrn::All(v) => Ok(vec![v.clone(); m]),
            PerUrn::Each(v) if v.len() == m => Ok(v.clone()),
            PerUrn::Each(v) => Err(Error::invalid(format!(
                "{name}: expected {m} entries, got {}",
                v.len()
            ))),
        }
    }
}

fn unit_weights() -> PerUrn<f64> {
    PerUrn::All(1.0)
}

fn uniform_densities() -> PerUrn<Density> {
    PerUrn::All(Density::Uniform)
}

fn unit_field() -> Field {
    Field::Constant(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErGraphConfig {
    /// Number of vertices; required with `edge_probability`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<usize>,
    /// Homogeneous edge probability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_probability: Option<f64>,
    /// Symmetric matrix with zero diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_probabilities: Option<Vec<Vec<f64>>>,
    #[serde(default = "unit_weights")]
    pub weights: PerUrn<f64>,
    pub thresholds: PerUrn<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialConfig {
    /// With `balls`, places every ball uniformly among the urns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub urns: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balls: Option<usize>,
    /// `placement[urn][ball]`; every column sums to one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<Vec<Vec<f64>>>,
    #[serde(default = "unit_weights")]
    pub weights: PerUrn<f64>,
    pub thresholds: PerUrn<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypergeometricConfig {
    /// Number of balls of each color.
    pub colors: Vec<u64>,
    pub sample_size: u64,
    #[serde(default = "unit_weights")]
    pub weights: PerUrn<f64>,
    pub thresholds: PerUrn<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgVolumeConfig {
    pub dimension: usize,
    /// Volume of the torus.
    pub volume: f64,
    /// Number of germs.
    pub grains: usize,
    pub radii: PerUrn<f64>,
    #[serde(default = "uniform_densities")]
    pub densities: PerUrn<Density>,
    #[serde(default = "unit_field")]
    pub weight: Field,
    /// Integer-valued coverage threshold field.
    pub threshold: Field,
    /// Midpoint-grid points per axis when the statistic is evaluated on a grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgNeighborsConfig {
    pub dimension: usize,
    pub volume: f64,
    /// Number of unit balls.
    pub grains: usize,
    #[serde(default = "uniform_densities")]
    pub densities: PerUrn<Density>,
    /// Required for dimensions without a tabulated value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa1: Option<usize>,
    #[serde(default = "unit_weights")]
    pub weights: PerUrn<f64>,
    pub thresholds: PerUrn<i64>,
    /// Midpoint-grid points per axis for means under non-uniform densities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ModelConfig {
    ErGraph(ErGraphConfig),
    GgVolume(GgVolumeConfig),
    GgNeighbors(GgNeighborsConfig),
    Multinomial(MultinomialConfig),
    Hypergeometric(HypergeometricConfig),
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        Ok(match self {
            ModelConfig::ErGraph(c) => ModelSpec::ErGraph(ErGraph::from_config(c)?),
            ModelConfig::GgVolume(c) => ModelSpec::GgVolume(GgVolume::from_config(c)?),
            ModelConfig::GgNeighbors(c) => ModelSpec::GgNeighbors(GgNeighbors::from_config(c)?),
            ModelConfig::Multinomial(c) => ModelSpec::Multinomial(Multinomial::from_config(c)?),
            ModelConfig::Hypergeometric(c) => ModelSpec::Hypergeometric(Hypergeometric::from_config(c)?),
        })
    }
}

/// A model configuration plus an optional seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    #[serde(flatten)]
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("model document: {e}")))
    }

    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_documents() {
        let doc = ModelDocument::from_json(
            r#"{"variant":"er_graph","vertices":4,"edge_probability":0.5,"thresholds":1,"seed":9}"#,
        )
        .unwrap();
        assert_eq!(doc.seed, Some(9));
        match &doc.model {
            ModelConfig::ErGraph(c) => {
                assert_eq!(c.weights, PerUrn::All(1.0));
                assert_eq!(c.thresholds, PerUrn::All(1));
            }
            other => panic!("wrong variant {other:?}"),
        }
        let echoed = ModelDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(echoed, doc);
    }

    #[test]
    fn per_urn_lists() {
        let doc = ModelDocument::from_json(
            r#"{"variant":"hypergeometric","colors":[2,2],"sample_size":2,"weights":[1,2],"thresholds":[1,1]}"#,
        )
        .unwrap();
        let m = doc.model.build().unwrap();
        assert!((m.complement(super::super::StatisticKind::Ge).unwrap().offset - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_variant_and_bad_lengths() {
        assert!(ModelDocument::from_json(r#"{"variant":"lattice","thresholds":1}"#).is_err());
        let doc = ModelDocument::from_json(
            r#"{"variant":"hypergeometric","colors":[2,2],"sample_size":2,"thresholds":[1,1,1]}"#,
        )
        .unwrap();
        assert!(doc.model.build().unwrap_err().is_validation());
    }

    #[test]
    fn germ_grain_document() {
        let doc = ModelDocument::from_json(
            r#"{"variant":"gg_volume","dimension":1,"volume":100,"grains":2,"radii":1,"threshold":1}"#,
        )
        .unwrap();
        match &doc.model {
            ModelConfig::GgVolume(c) => {
                assert_eq!(c.densities, PerUrn::All(Density::Uniform));
                assert_eq!(c.weight, Field::Constant(1.0));
            }
            other => panic!("wrong variant {other:?}"),
        }
    }
}
