//! Bit extraction: prefix sums and single-bit lookup.
//!
//! Each row of bits is stored as the binary number `Σ θ_j 2^{-(j+1)}`.
//! Extraction step `j` reads the leading bit as
//! `relu(2^L(ξ - 1/2) + 1) - relu(2^L(ξ - 1/2))` and shifts it out with
//! `ξ <- 2ξ - bit`. The factor `2^L` is applied by `L` doubling layers, so
//! no stored parameter grows with `2^L`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{
    affine_rows, compose_parallel, compose_serial, deepen_two_layer, identity_channel,
};
use crate::error::{Error, Result};
use crate::interp::{build_two_layer_interp, EquiGrid, TwoLayerGrid};
use crate::net::{rows_layer, Activation, AffineLayer, Network};
use crate::primitives::staircase;

/// A matrix of bits `θ_{m,l} ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl BitMatrix {
    /// Row-major bits; every entry must be 0 or 1.
    pub fn new(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                found: bits.len(),
            });
        }
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("empty bit matrix".into()));
        }
        if let Some(b) = bits.iter().find(|b| **b > 1) {
            return Err(Error::InvalidParameter(format!("bit value {b}")));
        }
        Ok(Self { rows, cols, bits })
    }

    /// Number of rows `M`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns `L`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Bit `θ_{m,l}`.
    pub fn get(&self, m: usize, l: usize) -> u8 {
        self.bits[m * self.cols + l]
    }

    /// Prefix sum `Σ_{j <= l} θ_{m,j}`.
    pub fn prefix_sum(&self, m: usize, l: usize) -> u32 {
        (0..=l).map(|j| self.get(m, j) as u32).sum()
    }

    /// Row `m` as the binary fraction `Σ θ_{m,j} 2^{-(j+1)}`.
    pub fn encode_row(&self, m: usize) -> f64 {
        let mut v = 0.0;
        let mut w = 0.5;
        for j in 0..self.cols {
            v += w * self.get(m, j) as f64;
            w *= 0.5;
        }
        v
    }
}

/// `x -> 2^L x` on all of ℝ with width 2, depth `L + 1` and parameters in
/// `{-1, 1, 2}`.
pub fn build_pow2_multiplier(l: u32) -> Result<Network> {
    if l == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    let mut layers = vec![rows_layer(
        1,
        vec![vec![(0, 2.0)], vec![(0, -2.0)]],
        vec![0.0; 2],
        Activation::Relu,
    )];
    for _ in 1..l {
        layers.push(rows_layer(
            2,
            vec![vec![(0, 2.0)], vec![(1, 2.0)]],
            vec![0.0; 2],
            Activation::Relu,
        ));
    }
    layers.push(rows_layer(
        2,
        vec![vec![(0, 1.0), (1, -1.0)]],
        vec![0.0],
        Activation::Identity,
    ));
    Network::new(1, layers)
}

/// Network `m -> encode_row(m)` at integers `0 <= m < M`, built as a
/// deepened two-layer interpolant with `N` blocks of `NL` points.
fn row_encoder(bits: &BitMatrix, n: usize, l: usize) -> Result<Network> {
    let rows = bits.rows;
    let grid = EquiGrid::new(1.0, rows, 0.0)?;
    let mut y: Vec<f64> = (0..rows).map(|m| bits.encode_row(m)).collect();
    y.push(y[rows - 1]);
    let two = build_two_layer_interp(&TwoLayerGrid::equi(grid, n, n * l - 1)?, &y)?;
    deepen_two_layer(&two)
}

/// Extraction stage on inputs `(ξ, t)` returning `Σ_{j < min(t, cols)} θ_j`.
///
/// Channel layout between layers is `[ξ, t, S, ...]`, all nonnegative, so
/// single ReLU units carry them. With `modified`, every step spends `L`
/// doubling layers on `2^L(ξ - 1/2)`; otherwise one layer with weight
/// `2^L` does it.
fn extraction_net(cols: usize, modified: bool) -> Network {
    let big = crate::math::powi(2.0, cols as i32);
    let carry = |k: usize| -> Vec<Vec<(usize, f64)>> { (0..k).map(|i| vec![(i, 1.0)]).collect() };
    let mut layers: Vec<AffineLayer> = Vec::new();
    let mut width_in = 2usize;
    let mut has_s = false;
    for j in 0..cols {
        // Layers producing the scaled pair (p, q) with p - q = 2^L(ξ - 1/2).
        let base = if has_s { 3 } else { 2 };
        let mut rows = carry(base);
        let mut bias = vec![0.0; base];
        if modified {
            rows.push(vec![(0, 2.0)]);
            rows.push(vec![(0, -2.0)]);
            bias.extend([-1.0, 1.0]);
            layers.push(rows_layer(width_in, rows, bias, Activation::Relu));
            width_in = base + 2;
            for _ in 1..cols {
                let mut rows = carry(base);
                rows.push(vec![(base, 2.0)]);
                rows.push(vec![(base + 1, 2.0)]);
                layers.push(rows_layer(width_in, rows, vec![0.0; base + 2], Activation::Relu));
            }
        } else {
            rows.push(vec![(0, big)]);
            rows.push(vec![(0, -big)]);
            bias.extend([-big / 2.0, big / 2.0]);
            layers.push(rows_layer(width_in, rows, bias, Activation::Relu));
            width_in = base + 2;
        }
        // a = relu(s + 1), b = relu(s) with s = p - q; r1, r2 test j <= l.
        let (p, q) = (base, base + 1);
        let jf = j as f64;
        let mut rows = carry(base);
        let mut bias = vec![0.0; base];
        rows.push(vec![(p, 1.0), (q, -1.0)]);
        bias.push(1.0);
        rows.push(vec![(p, 1.0), (q, -1.0)]);
        bias.push(0.0);
        rows.push(vec![(1, 1.0)]);
        bias.push(-jf);
        rows.push(vec![(1, 1.0)]);
        bias.push(-jf - 1.0);
        layers.push(rows_layer(width_in, rows, bias, Activation::Relu));
        width_in = base + 4;
        // ξ' = 2ξ - bit, t carried, S' = S + relu(bit + [j <= l] - 1).
        let (a, b, r1, r2) = (base, base + 1, base + 2, base + 3);
        let mut rows = vec![
            vec![(0, 2.0), (a, -1.0), (b, 1.0)],
            vec![(1, 1.0)],
        ];
        let mut bias = vec![0.0, 0.0];
        if has_s {
            rows.push(vec![(2, 1.0)]);
            bias.push(0.0);
        }
        rows.push(vec![(a, 1.0), (b, -1.0), (r1, 1.0), (r2, -1.0)]);
        bias.push(-1.0);
        layers.push(rows_layer(width_in, rows, bias, Activation::Relu));
        width_in = if has_s { 4 } else { 3 };
        // Fold z into S.
        let z = width_in - 1;
        let rows = if has_s {
            vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(2, 1.0), (z, 1.0)]]
        } else {
            vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(z, 1.0)]]
        };
        layers.push(rows_layer(width_in, rows, vec![0.0; 3], Activation::Relu));
        width_in = 3;
        has_s = true;
    }
    layers.push(rows_layer(3, vec![vec![(2, 1.0)]], vec![0.0], Activation::Identity));
    Network::from_parts(2, layers)
}

fn bit_sum_impl(bits: &BitMatrix, n: usize, l: usize, modified: bool) -> Result<Network> {
    if n == 0 || l == 0 {
        return Err(Error::InvalidParameter("N and L must be at least 1".into()));
    }
    if bits.rows != n * n * l || bits.cols != l {
        return Err(Error::Dimension {
            expected: n * n * l * l,
            found: bits.rows * bits.cols,
        });
    }
    let enc = row_encoder(bits, n, l)?;
    let first = compose_serial(&affine_rows(2, vec![vec![(0, 1.0)]], vec![0.0])?, &enc)?;
    let t = affine_rows(2, vec![vec![(1, 1.0)]], vec![1.0])?;
    let stage1 = compose_parallel(&[first, t])?;
    compose_serial(&stage1, &extraction_net(l, modified))
}

/// Network `(m, l) -> Σ_{j <= l} θ_{m,j}` at integers `0 <= m < N²L`,
/// `0 <= l < L`.
///
/// Depth is `O(L²)` and the parameter supremum is `O(N²L)`.
pub fn build_bit_sum(bits: &BitMatrix, n: usize, l: usize) -> Result<Network> {
    bit_sum_impl(bits, n, l, true)
}

/// The same prefix sums with the single-layer `2^L` scaling. Its parameter
/// supremum is at least `2^L`; only for comparison in tests.
#[cfg(any(test, feature = "test-unmodified"))]
pub fn build_bit_sum_unmodified(bits: &BitMatrix, n: usize, l: usize) -> Result<Network> {
    bit_sum_impl(bits, n, l, false)
}

/// Network `i -> θ_i` at integers `0 <= i < N²L²`.
///
/// A staircase `ψ(i) = ⌊i/L⌋` splits `i` into `(m, l) = (ψ, i - Lψ)`; the
/// bit is the difference of the prefix sums of `a_{m,l} = θ_{mL+l}` and its
/// shift `b_{m,l} = a_{m,l-1}`.
pub fn build_bit_lookup(theta: &[u8], n: usize, l: usize) -> Result<Network> {
    if n == 0 || l == 0 {
        return Err(Error::InvalidParameter("N and L must be at least 1".into()));
    }
    let rows = n * n * l;
    if theta.len() != rows * l {
        return Err(Error::Dimension {
            expected: rows * l,
            found: theta.len(),
        });
    }
    let a = BitMatrix::new(rows, l, theta.to_vec())?;
    let mut shifted = vec![0u8; rows * l];
    for m in 0..rows {
        for j in 1..l {
            shifted[m * l + j] = theta[m * l + j - 1];
        }
    }
    let b = BitMatrix::new(rows, l, shifted)?;
    let psi = if l == 1 {
        affine_rows(1, vec![vec![(0, 1.0)]], vec![0.0])?
    } else {
        staircase(1.0 / l as f64, (l - 1) as u64, n, 2 * n * l - 1)?
    };
    let id = identity_channel(1, 1)?;
    let split = compose_serial(
        &compose_parallel(&[psi, id])?,
        &affine_rows(2, vec![vec![(0, 1.0)], vec![(0, -(l as f64)), (1, 1.0)]], vec![0.0; 2])?,
    )?;
    let sums = compose_parallel(&[build_bit_sum(&a, n, l)?, build_bit_sum(&b, n, l)?])?;
    let diff = affine_rows(2, vec![vec![(0, 1.0), (1, -1.0)]], vec![0.0])?;
    compose_serial(&compose_serial(&split, &sums)?, &diff)
}
