//! Composition calculus for networks.
//!
//! Serial composition merges the boundary affine maps, so depths add minus
//! one. Where merging could multiply parameters together, [`bridge_serial`]
//! inserts a `±ReLU` pass-through layer instead and keeps the parameter
//! supremum at the maximum of the operands.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::matrix::Matrix;
use crate::net::{Activation, AffineLayer, Network};

/// How operands are combined.
#[derive(Debug, Clone, PartialEq)]
pub enum CompositionPlan {
    /// `b ∘ a`.
    Serial,
    /// Outputs concatenated.
    Parallel,
    /// `Σ coefficients_i · net_i + bias`.
    LinearCombination {
        /// One coefficient per operand.
        coefficients: Vec<f64>,
        /// Additive constant.
        bias: f64,
    },
}

/// Applies a [`CompositionPlan`] to a list of operands.
pub fn compose(plan: &CompositionPlan, nets: &[Network]) -> Result<Network> {
    match plan {
        CompositionPlan::Serial => {
            let (first, rest) = nets.split_first().ok_or_else(|| param("no operands"))?;
            rest.iter()
                .try_fold(first.clone(), |acc, n| compose_serial(&acc, n))
        }
        CompositionPlan::Parallel => compose_parallel(nets),
        CompositionPlan::LinearCombination { coefficients, bias } => {
            linear_combination(nets, coefficients, *bias)
        }
    }
}

fn layer(w: Matrix, b: Vec<f64>, act: Activation) -> AffineLayer {
    match AffineLayer::new(w, b, act) {
        Ok(l) => l,
        Err(e) => panic!("internal layer construction failed: {e}"),
    }
}

fn check_serial(a: &Network, b: &Network) -> Result<()> {
    if a.output_dim() != b.input_dim() {
        return Err(Error::Dimension {
            expected: b.input_dim(),
            found: a.output_dim(),
        });
    }
    Ok(())
}

/// `x -> b(a(x))` with `a`'s output map merged into `b`'s first layer.
pub fn compose_serial(a: &Network, b: &Network) -> Result<Network> {
    check_serial(a, b)?;
    let mut left = a.clone().into_layers();
    let mut right = b.clone().into_layers().into_iter();
    let (wa, ba, _) = left.pop().expect("networks are nonempty").into_parts();
    let (wb, bb, act) = right.next().expect("networks are nonempty").into_parts();
    let w = wb.mul(&wa);
    let mut bias = wb.mul_vec(&ba);
    for (x, y) in bias.iter_mut().zip(&bb) {
        *x += y;
    }
    left.push(layer(w, bias, act));
    left.extend(right);
    Ok(Network::from_parts(a.input_dim(), left))
}

/// `x -> b(a(x))` without merging: `a`'s output passes through a `±ReLU`
/// layer, so depth is `depth(a) + depth(b)` and no parameters are multiplied.
pub fn bridge_serial(a: &Network, b: &Network) -> Result<Network> {
    check_serial(a, b)?;
    let k = a.output_dim();
    let mut left = a.clone().into_layers();
    let (wa, ba, _) = left.pop().expect("networks are nonempty").into_parts();
    let neg_b: Vec<f64> = ba.iter().map(|v| -v).collect();
    let w = Matrix::vstack(&[&wa, &wa.scaled(-1.0)]);
    let mut bias = ba;
    bias.extend(neg_b);
    left.push(layer(w, bias, Activation::Relu));
    let mut right = b.clone().into_layers().into_iter();
    let (wb, bb, act) = right.next().expect("networks are nonempty").into_parts();
    let split = Matrix::hstack(&[&Matrix::identity(k), &Matrix::identity(k).scaled(-1.0)]);
    left.push(layer(wb.mul(&split), bb, act));
    left.extend(right);
    Ok(Network::from_parts(a.input_dim(), left))
}

/// Realizes `x -> x` on all of `ℝ^dim` with the given depth, using paired
/// `±ReLU` channels. All parameters lie in `{-1, 0, 1}`.
pub fn identity_channel(dim: usize, depth: usize) -> Result<Network> {
    if dim == 0 || depth == 0 {
        return Err(param("identity channel needs dim >= 1 and depth >= 1"));
    }
    if depth == 1 {
        return Network::affine(Matrix::identity(dim), vec![0.0; dim]);
    }
    let eye = Matrix::identity(dim);
    let split = Matrix::vstack(&[&eye, &eye.scaled(-1.0)]);
    let mut layers = vec![layer(split, vec![0.0; 2 * dim], Activation::Relu)];
    for _ in 0..depth - 2 {
        layers.push(layer(
            Matrix::identity(2 * dim),
            vec![0.0; 2 * dim],
            Activation::Relu,
        ));
    }
    layers.push(layer(
        Matrix::hstack(&[&eye, &eye.scaled(-1.0)]),
        vec![0.0; dim],
        Activation::Identity,
    ));
    Ok(Network::from_parts(dim, layers))
}

/// Extends `net` to `depth` affine maps by appending an identity channel.
pub fn pad_to_depth(net: &Network, depth: usize) -> Result<Network> {
    if depth < net.depth() {
        return Err(param("cannot pad to a smaller depth"));
    }
    if depth == net.depth() {
        return Ok(net.clone());
    }
    let id = identity_channel(net.output_dim(), depth - net.depth() + 1)?;
    compose_serial(net, &id)
}

/// Runs networks side by side on a shared input and concatenates outputs.
/// Shallower operands are padded with identity channels first.
pub fn compose_parallel(nets: &[Network]) -> Result<Network> {
    let first = nets.first().ok_or_else(|| param("empty operand list"))?;
    let input_dim = first.input_dim();
    if let Some(bad) = nets.iter().find(|n| n.input_dim() != input_dim) {
        return Err(Error::Dimension {
            expected: input_dim,
            found: bad.input_dim(),
        });
    }
    stack(nets, input_dim, true)
}

/// Runs networks side by side on disjoint slices of the input: the input is
/// the concatenation of the operands' inputs.
pub fn compose_block_diagonal(nets: &[Network]) -> Result<Network> {
    if nets.is_empty() {
        return Err(param("empty operand list"));
    }
    let input_dim = nets.iter().map(Network::input_dim).sum();
    stack(nets, input_dim, false)
}

fn stack(nets: &[Network], input_dim: usize, shared_input: bool) -> Result<Network> {
    let depth = nets.iter().map(Network::depth).max().unwrap_or(1);
    let padded: Vec<Network> = nets
        .iter()
        .map(|n| pad_to_depth(n, depth))
        .collect::<Result<_>>()?;
    let mut layers = Vec::with_capacity(depth);
    for i in 0..depth {
        let ws: Vec<&Matrix> = padded.iter().map(|n| n.layers()[i].weights()).collect();
        let w = if i == 0 && shared_input {
            Matrix::vstack(&ws)
        } else {
            Matrix::block_diag(&ws)
        };
        let b: Vec<f64> = padded
            .iter()
            .flat_map(|n| n.layers()[i].bias().iter().copied())
            .collect();
        let act = if i + 1 == depth {
            Activation::Identity
        } else {
            Activation::Relu
        };
        layers.push(layer(w, b, act));
    }
    Ok(Network::from_parts(input_dim, layers))
}

/// `x -> Σ coeffs_i · net_i(x) + bias` for scalar-output operands.
///
/// The operands' outputs pass through a `±ReLU` layer before the weighted
/// sum, so the parameter supremum is at most
/// `max(operands, |coeffs|, |bias|, 1)`.
pub fn linear_combination(nets: &[Network], coeffs: &[f64], bias: f64) -> Result<Network> {
    if nets.len() != coeffs.len() {
        return Err(Error::Dimension {
            expected: nets.len(),
            found: coeffs.len(),
        });
    }
    if let Some(bad) = nets.iter().find(|n| n.output_dim() != 1) {
        return Err(Error::Dimension {
            expected: 1,
            found: bad.output_dim(),
        });
    }
    let par = compose_parallel(nets)?;
    let sum = Network::affine(Matrix::from_dense(1, coeffs.len(), coeffs), vec![bias])?;
    bridge_serial(&par, &sum)
}

fn relu_layer(rows: Vec<Vec<(usize, f64)>>, cols: usize, bias: Vec<f64>) -> AffineLayer {
    layer(Matrix::from_rows(cols, rows), bias, Activation::Relu)
}

/// `(x, y) -> max(x, y)`, exact on `ℝ²`.
pub fn max2() -> Network {
    // max = (relu(x+y) - relu(-x-y) + relu(x-y) + relu(y-x)) / 2
    let hidden = relu_layer(
        vec![
            vec![(0, 1.0), (1, 1.0)],
            vec![(0, -1.0), (1, -1.0)],
            vec![(0, 1.0), (1, -1.0)],
            vec![(0, -1.0), (1, 1.0)],
        ],
        2,
        vec![0.0; 4],
    );
    let out = layer(
        Matrix::from_dense(1, 4, &[0.5, -0.5, 0.5, 0.5]),
        vec![0.0],
        Activation::Identity,
    );
    Network::from_parts(2, vec![hidden, out])
}

/// `(x, y) -> min(x, y)`, exact on `ℝ²`.
pub fn min2() -> Network {
    let net = max2();
    let mut layers = net.into_layers();
    let (_, b, _) = layers.pop().expect("max2 has two layers").into_parts();
    layers.push(layer(
        Matrix::from_dense(1, 4, &[0.5, -0.5, -0.5, -0.5]),
        b,
        Activation::Identity,
    ));
    Network::from_parts(2, layers)
}

/// `(x1, x2, x3) -> median`, computed as `x1 + x2 + x3 - max3 - min3` with
/// the three-way extrema nested as `max2(max2(x1, x2), x3)`. Every parameter
/// has magnitude at most 1.
pub fn mid3() -> Network {
    // Layer 1: the four max/min units of (x1, x2), ±x3 and ±s with s = x1+x2+x3.
    let l1 = relu_layer(
        vec![
            vec![(0, 1.0), (1, 1.0)],
            vec![(0, -1.0), (1, -1.0)],
            vec![(0, 1.0), (1, -1.0)],
            vec![(0, -1.0), (1, 1.0)],
            vec![(2, 1.0)],
            vec![(2, -1.0)],
            vec![(0, 1.0), (1, 1.0), (2, 1.0)],
            vec![(0, -1.0), (1, -1.0), (2, -1.0)],
        ],
        3,
        vec![0.0; 8],
    );
    // M = max(x1,x2) = (u0 - u1 + u2 + u3)/2, m = min(x1,x2) = (u0 - u1 - u2 - u3)/2,
    // x3 = u4 - u5. Layer 2 forms the max2 units of (M, x3), the min2 units of
    // (m, x3) and passes ±s through.
    let big = [(0, 0.5), (1, -0.5), (2, 0.5), (3, 0.5)];
    let small = [(0, 0.5), (1, -0.5), (2, -0.5), (3, -0.5)];
    let x3 = [(4, 1.0), (5, -1.0)];
    let combo = |a: &[(usize, f64)], sa: f64, b: &[(usize, f64)], sb: f64| -> Vec<(usize, f64)> {
        a.iter()
            .map(|&(c, v)| (c, sa * v))
            .chain(b.iter().map(|&(c, v)| (c, sb * v)))
            .collect()
    };
    let mut rows = Vec::new();
    for part in [&big[..], &small[..]] {
        rows.push(combo(part, 1.0, &x3, 1.0));
        rows.push(combo(part, -1.0, &x3, -1.0));
        rows.push(combo(part, 1.0, &x3, -1.0));
        rows.push(combo(part, -1.0, &x3, 1.0));
    }
    rows.push(vec![(6, 1.0), (7, -1.0)]);
    rows.push(vec![(6, -1.0), (7, 1.0)]);
    let l2 = relu_layer(rows, 8, vec![0.0; 10]);
    // median = s - max3 - min3
    let out = layer(
        Matrix::from_dense(
            1,
            10,
            &[-0.5, 0.5, -0.5, -0.5, -0.5, 0.5, 0.5, 0.5, 1.0, -1.0],
        ),
        vec![0.0],
        Activation::Identity,
    );
    Network::from_parts(3, vec![l1, l2, out])
}

/// Rewires a network with two hidden layers of widths `n` and `n * l` into
/// a deeper one of width `2n + 2·out` and depth `l + 2`.
///
/// The second hidden layer is split into `l` blocks `h_i`, computed one per
/// layer from the carried first-layer output `g`, while the running output
/// `s_i = s_{i-1} + W_{3,i} h_i` is carried as `relu(s), relu(-s)`. Channel
/// layout per layer is `[g | h_i | relu(s) | relu(-s)]`.
pub fn widen_to_deep(shallow: &Network, n: usize, l: usize) -> Result<Network> {
    let ls = shallow.layers();
    if ls.len() != 3 || n == 0 || l == 0 || ls[0].out_dim() != n || ls[1].out_dim() != n * l {
        return Err(param(alloc::format!(
            "widen_to_deep needs hidden widths {n} and {}",
            n * l
        )));
    }
    let d = shallow.input_dim();
    let o = shallow.output_dim();
    let (w2, b2, w3, b3) = (
        ls[1].weights(),
        ls[1].bias(),
        ls[2].weights(),
        ls[2].bias(),
    );
    let w2_block = |i: usize| -> Vec<Vec<(usize, f64)>> {
        (i * n..(i + 1) * n).map(|r| w2.row(r).collect()).collect()
    };
    // Output weights restricted to block i, as rows over the block's columns.
    let w3_block = |i: usize| -> Vec<Vec<(usize, f64)>> {
        (0..o)
            .map(|r| {
                w3.row(r)
                    .filter(|&(c, _)| c >= i * n && c < (i + 1) * n)
                    .map(|(c, v)| (c - i * n, v))
                    .collect()
            })
            .collect()
    };
    let mut layers = vec![ls[0].clone()];
    if l == 1 {
        layers.push(ls[1].clone());
        layers.push(ls[2].clone());
        return Network::new(d, layers);
    }
    // Layer 2: [g, h_1] from g.
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|j| vec![(j, 1.0)]).collect();
    rows.extend(w2_block(0));
    let mut bias = vec![0.0; n];
    bias.extend_from_slice(&b2[0..n]);
    layers.push(relu_layer(rows, n, bias));
    // Layers for h_2..h_l; input layout [g (n) | h_{i-1} (n) | s+ (o) | s- (o)].
    for i in 1..l {
        let has_s = i >= 2;
        let in_cols = 2 * n + if has_s { 2 * o } else { 0 };
        let carry_g = i + 1 < l;
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut bias = Vec::new();
        if carry_g {
            rows.extend((0..n).map(|j| vec![(j, 1.0)]));
            bias.extend(core::iter::repeat_n(0.0, n));
        }
        rows.extend(w2_block(i));
        bias.extend_from_slice(&b2[i * n..(i + 1) * n]);
        let prev = w3_block(i - 1);
        for sign in [1.0, -1.0] {
            for (r, row) in prev.iter().enumerate() {
                let mut entries: Vec<(usize, f64)> =
                    row.iter().map(|&(c, v)| (n + c, sign * v)).collect();
                if has_s {
                    entries.push((2 * n + r, sign));
                    entries.push((2 * n + o + r, -sign));
                }
                rows.push(entries);
                bias.push(0.0);
            }
        }
        layers.push(relu_layer(rows, in_cols, bias));
    }
    // Output: s_{l-1} + W_{3,l} h_l + b3; input layout [h_l (n) | s+ | s-].
    let last = w3_block(l - 1);
    let rows: Vec<Vec<(usize, f64)>> = last
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut e = row.clone();
            e.push((n + r, 1.0));
            e.push((n + o + r, -1.0));
            e
        })
        .collect();
    layers.push(layer(
        Matrix::from_rows(n + 2 * o, rows),
        b3.to_vec(),
        Activation::Identity,
    ));
    Network::new(d, layers)
}

/// Pads the second hidden layer of a two-hidden-layer network with zero
/// units to the next multiple of the first width, then applies
/// [`widen_to_deep`].
pub fn deepen_two_layer(shallow: &Network) -> Result<Network> {
    let ls = shallow.layers();
    if ls.len() != 3 {
        return Err(param("deepen_two_layer needs exactly two hidden layers"));
    }
    let n = ls[0].out_dim();
    let w = ls[1].out_dim();
    let l = w.div_ceil(n).max(1);
    let pad = n * l - w;
    if pad == 0 {
        return widen_to_deep(shallow, n, l);
    }
    let w2 = Matrix::vstack(&[ls[1].weights(), &Matrix::zeros(pad, n)]);
    let mut b2 = ls[1].bias().to_vec();
    b2.extend(core::iter::repeat_n(0.0, pad));
    let w3 = Matrix::hstack(&[ls[2].weights(), &Matrix::zeros(ls[2].out_dim(), pad)]);
    let padded = Network::new(
        shallow.input_dim(),
        vec![
            ls[0].clone(),
            layer(w2, b2, Activation::Relu),
            layer(w3, ls[2].bias().to_vec(), Activation::Identity),
        ],
    )?;
    widen_to_deep(&padded, n, l)
}

/// Affine selection/combination helper: `x -> W x + b` with `W` given as
/// sparse rows over `cols` inputs.
pub fn affine_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>, bias: Vec<f64>) -> Result<Network> {
    Network::affine(Matrix::from_rows(cols, rows), bias)
}
