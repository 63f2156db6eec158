//! JSON checkpoints.
//!
//! Floats are written in shortest round-trip form and parsed back exactly,
//! so save/load is the identity on parameters.

use std::fs;
use std::path::Path;

use gaugeflow_core::flow::{
    gauge_network_dims, matched_plain_width, plain_dims, GAUGE_NETWORK_NAMES, PLAIN_BASELINE_WIDTH,
};
use gaugeflow_core::nn::Mlp;
use gaugeflow_core::{FlowModel, GaugeFlowModel, ModelKind, PlainFlowModel};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "gauge-flow-checkpoint";
pub const FORMAT_VERSION: u32 = 1;
pub const PLAIN_NETWORK_NAME: &str = "v_theta";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub format_version: u32,
    pub model_kind: String,
    pub n_dim: usize,
    pub seed: u64,
    pub networks: Vec<NetworkRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkRecord {
    pub name: String,
    pub layer_dims: Vec<usize>,
    /// One row-major `(out, in)` matrix per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl NetworkRecord {
    fn from_mlp(name: &str, net: &Mlp) -> Self {
        NetworkRecord {
            name: name.to_string(),
            layer_dims: net.dims().to_vec(),
            weights: (0..net.num_layers()).map(|l| net.weights(l).to_vec()).collect(),
            biases: (0..net.num_layers()).map(|l| net.biases(l).to_vec()).collect(),
        }
    }

    fn to_mlp(&self, expected_dims: &[usize]) -> Result<Mlp> {
        if self.layer_dims != expected_dims {
            return Err(Error::Dimension(format!(
                "network `{}` has layer_dims {:?}, expected {:?}",
                self.name, self.layer_dims, expected_dims
            )));
        }
        Mlp::from_layers(&self.layer_dims, &self.weights, &self.biases)
            .map_err(|e| Error::Dimension(format!("network `{}`: {e}", self.name)))
    }
}

/// Layer dims each network of `kind` must have at dimension `n_dim`.
pub fn expected_networks(kind: ModelKind, n_dim: usize) -> Vec<(&'static str, Vec<usize>)> {
    match kind {
        ModelKind::PlainBaseline => vec![(PLAIN_NETWORK_NAME, plain_dims(n_dim, PLAIN_BASELINE_WIDTH))],
        ModelKind::PlainMatched => vec![(PLAIN_NETWORK_NAME, plain_dims(n_dim, matched_plain_width(n_dim)))],
        ModelKind::GaugeDirTheta | ModelKind::GaugeDirNu => GAUGE_NETWORK_NAMES
            .iter()
            .copied()
            .zip(gauge_network_dims(n_dim))
            .collect(),
    }
}

impl Checkpoint {
    pub fn from_model(model: &FlowModel) -> Self {
        let n_dim = gaugeflow_core::VelocityField::n_dim(model);
        let networks = match model {
            FlowModel::Plain(p) => vec![NetworkRecord::from_mlp(PLAIN_NETWORK_NAME, p.net())],
            FlowModel::Gauge(g) => g
                .networks()
                .iter()
                .map(|(n, m)| NetworkRecord::from_mlp(n, m))
                .collect(),
        };
        Checkpoint {
            format: FORMAT_TAG.to_string(),
            format_version: FORMAT_VERSION,
            model_kind: model.kind().name().to_string(),
            n_dim,
            seed: model.seed(),
            networks,
        }
    }

    pub fn kind(&self) -> Result<ModelKind> {
        self.model_kind.parse().map_err(|e| Error::Format(format!("{e}")))
    }

    pub fn to_model(&self) -> Result<FlowModel> {
        if self.format != FORMAT_TAG {
            return Err(Error::Format(format!(
                "not a checkpoint (format tag `{}`)",
                self.format
            )));
        }
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {}",
                self.format_version
            )));
        }
        let kind = self.kind()?;
        if !(gaugeflow_core::gmm::MIN_DIM..=gaugeflow_core::gmm::MAX_DIM).contains(&self.n_dim) {
            return Err(Error::Dimension(format!("n_dim {} outside [2, 64]", self.n_dim)));
        }
        let expected = expected_networks(kind, self.n_dim);
        let names: Vec<&str> = self.networks.iter().map(|n| n.name.as_str()).collect();
        let wanted: Vec<&str> = expected.iter().map(|(n, _)| *n).collect();
        if names != wanted {
            return Err(Error::Format(format!(
                "{kind} expects networks {wanted:?}, found {names:?}"
            )));
        }
        let mut nets = self
            .networks
            .iter()
            .zip(&expected)
            .map(|(rec, (_, dims))| rec.to_mlp(dims))
            .collect::<Result<Vec<_>>>()?;
        Ok(if kind.is_gauge() {
            let nets: [Mlp; 4] = nets.try_into().expect("four gauge networks");
            FlowModel::Gauge(GaugeFlowModel::from_networks(kind, self.n_dim, self.seed, nets)?)
        } else {
            FlowModel::Plain(PlainFlowModel::from_network(
                kind,
                self.n_dim,
                self.seed,
                nets.remove(0),
            )?)
        })
    }

    pub fn to_json(&self) -> Result<String> {
        for net in &self.networks {
            let values = net.weights.iter().chain(&net.biases).flatten();
            if values.clone().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!(
                    "network `{}` holds non-finite parameters",
                    net.name
                )));
            }
        }
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("malformed checkpoint: {e}")))
    }
}

pub fn save_checkpoint(model: &FlowModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = Checkpoint::from_model(model).to_json()?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<FlowModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text)?.to_model()
}

/// Loads a checkpoint and insists it holds a `kind` model of dimension `n_dim`.
pub fn load_checkpoint_as(path: impl AsRef<Path>, kind: ModelKind, n_dim: usize) -> Result<FlowModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt = Checkpoint::from_json(&text)?;
    if ckpt.kind()? != kind {
        return Err(Error::Format(format!(
            "checkpoint holds {}, expected {kind}",
            ckpt.model_kind
        )));
    }
    if ckpt.n_dim != n_dim {
        return Err(Error::Dimension(format!(
            "checkpoint n_dim {} but {n_dim} was requested",
            ckpt.n_dim
        )));
    }
    ckpt.to_model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use gaugeflow_core::flow::build_model;
    use gaugeflow_core::{TrainableField, VelocityField};

    #[test]
    fn round_trip_every_kind() {
        for kind in ModelKind::ALL {
            let model = build_model(kind, 3, 11).unwrap();
            let text = Checkpoint::from_model(&model).to_json().unwrap();
            let back = Checkpoint::from_json(&text).unwrap().to_model().unwrap();
            assert_eq!(back.kind(), kind);
            assert_eq!(back.seed(), 11);
            let bits = |m: &FlowModel| m.flat_params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&model), bits(&back));
            let x = [0.3, -1.0, 2.0];
            assert_eq!(model.velocity(&x, 0.4).unwrap(), back.velocity(&x, 0.4).unwrap());
        }
    }

    #[test]
    fn corrupted_tag_is_a_format_error() {
        let model = build_model(ModelKind::GaugeDirNu, 2, 0).unwrap();
        let mut ckpt = Checkpoint::from_model(&model);
        ckpt.format = "gauge-flow-checkpoinX".into();
        assert!(matches!(ckpt.to_model(), Err(Error::Format(_))));
        assert!(matches!(Checkpoint::from_json("{nope"), Err(Error::Format(_))));
    }

    #[test]
    fn dims_disagreeing_with_kind_is_a_dimension_error() {
        let model = build_model(ModelKind::PlainBaseline, 3, 0).unwrap();
        let mut ckpt = Checkpoint::from_model(&model);
        ckpt.model_kind = "plain-matched".into();
        assert!(matches!(ckpt.to_model(), Err(Error::Dimension(_))));
        let mut ckpt = Checkpoint::from_model(&model);
        ckpt.n_dim = 4;
        assert!(matches!(ckpt.to_model(), Err(Error::Dimension(_))));
    }

    #[test]
    fn ragged_weights_are_rejected() {
        let model = build_model(ModelKind::PlainBaseline, 2, 0).unwrap();
        let mut ckpt = Checkpoint::from_model(&model);
        ckpt.networks[0].weights[1].pop();
        assert!(matches!(ckpt.to_model(), Err(Error::Dimension(_))));
    }

    #[test]
    fn non_finite_parameters_are_not_saved() {
        let model = build_model(ModelKind::PlainBaseline, 2, 0).unwrap();
        let mut ckpt = Checkpoint::from_model(&model);
        ckpt.networks[0].biases[0][0] = f64::INFINITY;
        assert!(ckpt.to_json().is_err());
    }

    #[test]
    fn document_fields() {
        let model = build_model(ModelKind::GaugeDirTheta, 3, 5).unwrap();
        let value: serde_json::Value =
            serde_json::from_str(&Checkpoint::from_model(&model).to_json().unwrap()).unwrap();
        assert_eq!(value["format_version"], 1);
        assert_eq!(value["model_kind"], "gauge-theta");
        assert_eq!(value["n_dim"], 3);
        assert_eq!(value["networks"][1]["name"], "a_net");
        assert_eq!(value["networks"][1]["layer_dims"], serde_json::json!([4, 64, 64, 9]));
        assert_eq!(value["networks"][0]["weights"][0].as_array().unwrap().len(), 64 * 4);
    }
}
