//! JSON network documents.
//!
//! Layout: `{input_dim, layers: [{out_dim, in_dim, weights, bias,
//! activation}]}` with row-major dense weights and `"relu"` or
//! `"identity"` activations. Reals are written in shortest round-trip form
//! and parsed exactly, so documents round-trip bit for bit.

use serde::{Deserialize, Serialize};

use reluforge_core::{Activation, AffineLayer, Matrix, Network};

use crate::error::{Error, Result};

/// Activation tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationDoc {
    /// ReLU.
    Relu,
    /// Affine output.
    Identity,
}

/// One affine layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    /// Rows of the weight matrix.
    pub out_dim: usize,
    /// Columns of the weight matrix.
    pub in_dim: usize,
    /// Row-major weights.
    pub weights: Vec<f64>,
    /// Bias of length `out_dim`.
    pub bias: Vec<f64>,
    /// Activation applied after the affine map.
    pub activation: ActivationDoc,
}

/// Serialized network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    /// Input dimension.
    pub input_dim: usize,
    /// Layers in evaluation order.
    pub layers: Vec<LayerDoc>,
}

impl From<&Network> for NetworkDoc {
    fn from(net: &Network) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|l| LayerDoc {
                out_dim: l.out_dim(),
                in_dim: l.in_dim(),
                weights: l.weights().to_dense(),
                bias: l.bias().to_vec(),
                activation: match l.activation() {
                    Activation::Relu => ActivationDoc::Relu,
                    Activation::Identity => ActivationDoc::Identity,
                },
            })
            .collect();
        NetworkDoc {
            input_dim: net.input_dim(),
            layers,
        }
    }
}

impl NetworkDoc {
    /// Validates the document and builds the network.
    pub fn to_network(&self) -> Result<Network> {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                if l.weights.len() != l.out_dim * l.in_dim {
                    return Err(Error::Format(format!(
                        "layer {i}: {} weights for a {}x{} matrix",
                        l.weights.len(),
                        l.out_dim,
                        l.in_dim
                    )));
                }
                if l.bias.len() != l.out_dim {
                    return Err(Error::Format(format!(
                        "layer {i}: bias length {} but {} rows",
                        l.bias.len(),
                        l.out_dim
                    )));
                }
                let act = match l.activation {
                    ActivationDoc::Relu => Activation::Relu,
                    ActivationDoc::Identity => Activation::Identity,
                };
                AffineLayer::new(
                    Matrix::from_dense(l.out_dim, l.in_dim, &l.weights),
                    l.bias.clone(),
                    act,
                )
                .map_err(|e| Error::Format(format!("layer {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Network::new(self.input_dim, layers).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Network as a JSON document.
pub fn to_json(net: &Network) -> String {
    serde_json::to_string(&NetworkDoc::from(net)).expect("network documents always serialize")
}

/// Parses and validates a JSON document.
pub fn from_json(text: &str) -> Result<Network> {
    let doc: NetworkDoc =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    doc.to_network()
}
