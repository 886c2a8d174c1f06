//! Feed-forward networks with ReLU hidden layers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Activation applied after an affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// `max(0, z)` componentwise.
    Relu,
    /// No activation.
    Identity,
}

/// One affine map `z -> act(W z + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer {
    weights: Matrix,
    bias: Vec<f64>,
    activation: Activation,
}

impl AffineLayer {
    /// Builds a layer, checking the bias length and finiteness.
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::InvalidNetwork(format!(
                "bias length {} differs from row count {}",
                bias.len(),
                weights.rows()
            )));
        }
        if !weights.is_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidNetwork("non-finite parameter".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Weight matrix (rows = outputs).
    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    /// Bias vector.
    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Activation marker.
    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Output dimension.
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    /// Input dimension.
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub(crate) fn into_parts(self) -> (Matrix, Vec<f64>, Activation) {
        (self.weights, self.bias, self.activation)
    }

    /// Largest absolute weight or bias.
    pub fn param_sup(&self) -> f64 {
        self.bias
            .iter()
            .fold(self.weights.max_abs(), |m, b| m.max(b.abs()))
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.weights.mul_vec_into(x, out);
        for (o, b) in out.iter_mut().zip(&self.bias) {
            *o += b;
            if self.activation == Activation::Relu && *o < 0.0 {
                *o = 0.0;
            }
        }
    }
}

/// Layer from sparse rows over `cols` inputs; panics on invalid parameters.
pub(crate) fn rows_layer(
    cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
    bias: Vec<f64>,
    activation: Activation,
) -> AffineLayer {
    match AffineLayer::new(Matrix::from_rows(cols, rows), bias, activation) {
        Ok(l) => l,
        Err(e) => panic!("internal layer construction failed: {e}"),
    }
}

/// Size measurements of a stored realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkProfile {
    /// Largest layer output dimension.
    pub width: usize,
    /// Number of affine maps.
    pub depth: usize,
    /// Largest absolute stored weight or bias. An upper bound for the
    /// minimal parameter size over all realizations of the same function.
    pub param_sup: f64,
    /// Number of nonzero weights.
    pub nonzero_weights: usize,
}

/// A fully connected feed-forward network. Hidden layers use ReLU and the
/// final layer is affine.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<AffineLayer>,
}

impl Network {
    /// Builds a network after checking layer chaining and activations.
    pub fn new(input_dim: usize, layers: Vec<AffineLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("no layers".into()));
        }
        let mut dim = input_dim;
        let last = layers.len() - 1;
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_dim() != dim {
                return Err(Error::InvalidNetwork(format!(
                    "layer {i} expects input {} but receives {dim}",
                    layer.in_dim()
                )));
            }
            let want = if i == last {
                Activation::Identity
            } else {
                Activation::Relu
            };
            if layer.activation != want {
                return Err(Error::InvalidNetwork(format!(
                    "layer {i} must use {want:?} activation"
                )));
            }
            dim = layer.out_dim();
        }
        Ok(Self { input_dim, layers })
    }

    /// Assembles layers produced by the crate's own constructions.
    pub(crate) fn from_parts(input_dim: usize, layers: Vec<AffineLayer>) -> Self {
        match Self::new(input_dim, layers) {
            Ok(n) => n,
            Err(e) => panic!("internal construction produced an invalid network: {e}"),
        }
    }

    /// Single affine map `x -> W x + b`.
    pub fn affine(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        let input_dim = weights.cols();
        Self::new(
            input_dim,
            vec![AffineLayer::new(weights, bias, Activation::Identity)?],
        )
    }

    /// Affine map from dense row-major weights.
    pub fn affine_dense(rows: usize, cols: usize, weights: &[f64], bias: Vec<f64>) -> Result<Self> {
        if weights.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                found: weights.len(),
            });
        }
        Self::affine(Matrix::from_dense(rows, cols, weights), bias)
    }

    /// Input dimension.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Output dimension.
    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Layers in application order.
    pub fn layers(&self) -> &[AffineLayer] {
        &self.layers
    }

    pub(crate) fn into_layers(self) -> Vec<AffineLayer> {
        self.layers
    }

    /// Number of affine maps.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Width, depth, parameter supremum and nonzero count.
    pub fn profile(&self) -> NetworkProfile {
        NetworkProfile {
            width: self.layers.iter().map(|l| l.out_dim()).max().unwrap_or(0),
            depth: self.layers.len(),
            param_sup: self.param_sup(),
            nonzero_weights: self.layers.iter().map(|l| l.weights.nnz()).sum(),
        }
    }

    /// Largest absolute stored parameter.
    pub fn param_sup(&self) -> f64 {
        self.layers.iter().fold(0.0, |m, l| m.max(l.param_sup()))
    }

    /// Evaluates the network at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    /// Evaluates a scalar-output network; panics on dimension mismatch.
    pub fn eval_scalar(&self, x: &[f64]) -> f64 {
        self.eval(x)[0]
    }

    /// Evaluation without the dimension check.
    ///
    /// # Panics
    /// If `x.len()` differs from the input dimension.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim, "input dimension mismatch");
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            next.clear();
            next.resize(layer.out_dim(), 0.0);
            layer.apply_into(&cur, &mut next);
            core::mem::swap(&mut cur, &mut next);
        }
        cur
    }
}
