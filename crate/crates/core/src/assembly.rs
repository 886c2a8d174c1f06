//! The full approximator: local Taylor assembly away from the trifling
//! region, then the median extension to all of `[0, 1]^d`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{
    affine_rows, bridge_serial, compose_block_diagonal, compose_parallel, compose_serial, mid3,
};
use crate::error::{param, Error, Result};
use crate::math::{ceil, ln, powf, powi, sin, sqrt};
use crate::net::{rows_layer, Activation, Network, NetworkProfile};
use crate::primitives::{
    build_monomial, build_point_fitter, build_product_general, build_step_function, fitter_bits,
    square_k, MultiIndex, StepSpec,
};

/// Step of the central finite-difference fallback.
pub const FD_STEP: f64 = 1e-5;

/// A target function with the data the construction needs.
pub trait FunctionOracle {
    /// Input dimension `d`.
    fn dim(&self) -> usize;
    /// Smoothness order `q`.
    fn order(&self) -> u32;
    /// `f(x)`.
    fn value(&self, x: &[f64]) -> f64;
    /// `∂^α f(x)` if known analytically.
    fn partial(&self, _alpha: &MultiIndex, _x: &[f64]) -> Option<f64> {
        None
    }
    /// Lipschitz constant `L̃` with respect to the Euclidean norm.
    fn lipschitz(&self) -> f64;
    /// `‖f‖_{C^q}`: largest sup-norm of a partial of order at most `q`.
    fn cq_norm(&self) -> f64;
}

/// Nested central differences, one coordinate at a time.
pub fn finite_difference(f: &dyn FunctionOracle, alpha: &MultiIndex, x: &[f64]) -> f64 {
    fn rec(f: &dyn FunctionOracle, a: &mut [u32], x: &mut [f64]) -> f64 {
        match a.iter().position(|v| *v > 0) {
            None => f.value(x),
            Some(i) => {
                a[i] -= 1;
                let x0 = x[i];
                x[i] = x0 + FD_STEP;
                let up = rec(f, a, x);
                x[i] = x0 - FD_STEP;
                let down = rec(f, a, x);
                x[i] = x0;
                a[i] += 1;
                (up - down) / (2.0 * FD_STEP)
            }
        }
    }
    let mut a = alpha.0.clone();
    let mut xs = x.to_vec();
    rec(f, &mut a, &mut xs)
}

/// `∂^α f(x)`, analytic when available, else the finite-difference value
/// (second component `true`).
pub fn partial_or_fd(f: &dyn FunctionOracle, alpha: &MultiIndex, x: &[f64]) -> (f64, bool) {
    if alpha.norm1() == 0 {
        return (f.value(x), false);
    }
    match f.partial(alpha, x) {
        Some(v) => (v, false),
        None => (finite_difference(f, alpha, x), true),
    }
}

/// Shape of the built-in target functions: `f(x) = g(s)` with
/// `s = (x_1 + ... + x_d)/d`, except `Product2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorpusShape {
    /// `g(s) = k`.
    Constant(f64),
    /// `g(s) = s`.
    Linear,
    /// `g(s) = s²`.
    Square,
    /// `g(s) = 1/2 + sin(2πs)/4`.
    Sine,
    /// `f(x) = x_1 x_2`, `d = 2`.
    Product2,
}

/// A built-in target with analytic partials.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFunction {
    /// Registered name.
    pub name: String,
    shape: CorpusShape,
    d: usize,
    q: u32,
}

/// Names accepted by [`CorpusFunction::by_name`].
pub const CORPUS_NAMES: [&str; 5] = ["const", "linear", "square", "sine", "product2"];

impl CorpusFunction {
    /// Target of the given shape, dimension and order.
    pub fn new(shape: CorpusShape, d: usize, q: u32) -> Result<Self> {
        if d == 0 || q == 0 {
            return Err(param("corpus functions need d >= 1 and q >= 1"));
        }
        if shape == CorpusShape::Product2 && d != 2 {
            return Err(param("product2 needs d = 2"));
        }
        let name = match shape {
            CorpusShape::Constant(_) => "const",
            CorpusShape::Linear => "linear",
            CorpusShape::Square => "square",
            CorpusShape::Sine => "sine",
            CorpusShape::Product2 => "product2",
        };
        Ok(Self {
            name: name.into(),
            shape,
            d,
            q,
        })
    }

    /// Looks up a corpus entry; `const` is the constant 1/2.
    pub fn by_name(name: &str, d: usize, q: u32) -> Result<Self> {
        let shape = match name {
            "const" => CorpusShape::Constant(0.5),
            "linear" => CorpusShape::Linear,
            "square" => CorpusShape::Square,
            "sine" => CorpusShape::Sine,
            "product2" => CorpusShape::Product2,
            _ => {
                return Err(param(format!(
                    "unknown function '{name}' (known: {})",
                    CORPUS_NAMES.join(", ")
                )))
            }
        };
        Self::new(shape, d, q)
    }

    /// `g^{(j)}(s)`.
    fn g(&self, j: u32, s: f64) -> f64 {
        let tau = 2.0 * core::f64::consts::PI;
        match (self.shape, j) {
            (CorpusShape::Constant(k), 0) => k,
            (CorpusShape::Linear, 0) => s,
            (CorpusShape::Linear, 1) => 1.0,
            (CorpusShape::Square, 0) => s * s,
            (CorpusShape::Square, 1) => 2.0 * s,
            (CorpusShape::Square, 2) => 2.0,
            (CorpusShape::Sine, 0) => 0.5 + sin(tau * s) / 4.0,
            (CorpusShape::Sine, j) => {
                let phase = sin(tau * s + j as f64 * core::f64::consts::FRAC_PI_2);
                powi(tau, j as i32) * phase / 4.0
            }
            _ => 0.0,
        }
    }

    /// `sup_{s ∈ [0,1]} |g^{(j)}(s)|`.
    fn g_sup(&self, j: u32) -> f64 {
        let tau = 2.0 * core::f64::consts::PI;
        match (self.shape, j) {
            (CorpusShape::Constant(k), 0) => k.abs(),
            (CorpusShape::Linear, 0 | 1) => 1.0,
            (CorpusShape::Square, 0) => 1.0,
            (CorpusShape::Square, 1 | 2) => 2.0,
            (CorpusShape::Sine, 0) => 0.75,
            (CorpusShape::Sine, j) => powi(tau, j as i32) / 4.0,
            (CorpusShape::Product2, 0 | 1) => 1.0,
            _ => 0.0,
        }
    }
}

impl FunctionOracle for CorpusFunction {
    fn dim(&self) -> usize {
        self.d
    }
    fn order(&self) -> u32 {
        self.q
    }
    fn value(&self, x: &[f64]) -> f64 {
        if self.shape == CorpusShape::Product2 {
            return x[0] * x[1];
        }
        let s = x.iter().sum::<f64>() / self.d as f64;
        self.g(0, s)
    }
    fn partial(&self, alpha: &MultiIndex, x: &[f64]) -> Option<f64> {
        if self.shape == CorpusShape::Product2 {
            let v = match alpha.0.as_slice() {
                [0, 0] => x[0] * x[1],
                [1, 0] => x[1],
                [0, 1] => x[0],
                [1, 1] => 1.0,
                _ => 0.0,
            };
            return Some(v);
        }
        let j = alpha.norm1();
        let s = x.iter().sum::<f64>() / self.d as f64;
        Some(self.g(j, s) / powi(self.d as f64, j as i32))
    }
    fn lipschitz(&self) -> f64 {
        match self.shape {
            CorpusShape::Constant(_) => 0.0,
            CorpusShape::Product2 => sqrt(2.0),
            _ => self.g_sup(1) / sqrt(self.d as f64),
        }
    }
    fn cq_norm(&self) -> f64 {
        let per = |j: u32| match self.shape {
            CorpusShape::Product2 => self.g_sup(j),
            _ => self.g_sup(j) / powi(self.d as f64, j as i32),
        };
        (0..=self.q).map(per).fold(0.0, f64::max)
    }
}

/// Union of the open strips `{x : x_i ∈ (k/R - δ, k/R)}`, `1 <= k <= R-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriflingRegion {
    /// Dimension.
    pub d: usize,
    /// Number of cells per axis.
    pub r: u64,
    /// Strip width.
    pub delta: f64,
}

impl TriflingRegion {
    /// Checks `0 < δ <= 1/(3R)`.
    pub fn new(d: usize, r: u64, delta: f64) -> Result<Self> {
        if d == 0 || r == 0 {
            return Err(param("trifling region needs d, R >= 1"));
        }
        if !(delta > 0.0 && delta <= 1.0 / (3.0 * r as f64) * (1.0 + 1e-12)) {
            return Err(param(format!(
                "trifling width δ = {delta} must lie in (0, 1/(3R)] with R = {r}"
            )));
        }
        Ok(Self { d, r, delta })
    }

    /// Whether `x` lies in one of the strips.
    pub fn contains(&self, x: &[f64]) -> bool {
        let r = self.r as f64;
        x.iter().any(|&v| {
            let k = ceil(v * r);
            k >= 1.0 && k <= r - 1.0 && v > k / r - self.delta && v < k / r
        })
    }
}

/// How derivative samples are mapped into `[0, 1]` for the point fitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    /// `ξ = (v + B)/(2B)` with `B = ‖f‖_{C^q}`.
    CqNorm,
    /// `ξ = (v - lo)/(hi - lo)` over the sampled corner values.
    #[default]
    Range,
}

/// Construction options.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AssemblyOptions {
    /// Derivative scaling.
    pub scaling: Scaling,
    /// Accept finite differences when the oracle lacks a partial.
    pub allow_fd: bool,
}

/// A built approximator and the choices made while building it.
#[derive(Debug, Clone)]
pub struct Approximation {
    /// The network.
    pub network: Network,
    /// Number of cells per axis `R`.
    pub r: u64,
    /// The natural `c` with `δ = 1/((c+1)R)`.
    pub c: u64,
    /// Trifling width.
    pub delta: f64,
    /// Point-fitter digits `J`.
    pub fitter_bits: u32,
    /// Depth budget used for the product and monomial sub-networks.
    pub product_depth: u32,
    /// Whether any derivative came from finite differences.
    pub used_fd: bool,
    /// Profile of `network`.
    pub profile: NetworkProfile,
}

/// Smallest `c >= 2` with `L̃·d·N^{2(q-1)/d}·L^{2(q-1)/d} <= c`.
pub fn select_c(lipschitz: f64, d: usize, q: u32, n: u64, l: u64) -> u64 {
    let e = 2.0 * (q as f64 - 1.0) / d as f64;
    let need = lipschitz * d as f64 * powf(n as f64, e) * powf(l as f64, e);
    let c = ceil(need - 1e-9);
    if c.is_finite() && c > 2.0 {
        c as u64
    } else {
        2
    }
}

/// Depth budget of the product sub-networks,
/// `max(L, ⌈log_4(256·B'²·q^d·(NL+1)^{2q/d})/k⌉)` with `B' = max(B, 1)`.
pub fn product_depth(b: f64, q: u32, d: usize, n: u64, l: u64) -> u32 {
    let bp = b.max(1.0);
    let arg = 256.0 * bp * bp * powi(q as f64, d as i32) * powf((n * l + 1) as f64, 2.0 * q as f64 / d as f64);
    let k = square_k(n) as f64;
    let need = ceil(ln(arg) / ln(4.0) / k) as u32;
    need.max(l as u32)
}

/// Corner `(k_1, ..., k_d)` of index `i = Σ k_j R^{j-1}`.
pub fn corner_of_index(i: u64, r: u64, d: usize) -> Vec<u64> {
    let mut rest = i;
    (0..d)
        .map(|_| {
            let k = rest % r;
            rest /= r;
            k
        })
        .collect()
}

/// Index `Σ k_j R^{j-1}` of a corner.
pub fn index_of_corner(k: &[u64], r: u64) -> u64 {
    k.iter().rev().fold(0, |acc, v| acc * r + v)
}

fn affine(cols: usize, rows: Vec<Vec<(usize, f64)>>, bias: Vec<f64>) -> Result<Network> {
    affine_rows(cols, rows, bias)
}

/// Local approximator: exact up to the rate away from the trifling region.
///
/// `φ(x) = Σ_{|α| <= q-1} u_α(Ψ(x))·P_α(x - Ψ(x))` where `Ψ` rounds every
/// coordinate down to the cell corner, `u_α ≈ ∂^α f/α!` at that corner is
/// read from a point fitter over the corner index `Σ ψ_j R^{j-1}`, `P_α`
/// is a monomial network and the product is the network on `[-B', B']²`.
pub fn build_local_approximator(
    f: &dyn FunctionOracle,
    n: u64,
    l: u64,
    c: u64,
    opts: &AssemblyOptions,
) -> Result<Approximation> {
    let d = f.dim();
    let q = f.order();
    if d == 0 || q == 0 || n == 0 || l == 0 {
        return Err(param("local approximator needs d, q, N, L >= 1"));
    }
    let b = f.cq_norm();
    if !(b.is_finite() && b >= 0.0) || !f.lipschitz().is_finite() {
        return Err(param("oracle constants must be finite"));
    }
    let spec = StepSpec::new(d as u32, n, l, c)?;
    let r = spec.k();
    let delta = spec.delta;
    let corners = powi(r as f64, d as i32) as u64;
    let (nf, lf) = (n as usize, l as usize);
    let slots = nf * nf * lf * lf;
    if corners as usize > slots {
        return Err(Error::InvalidParameter(format!(
            "{corners} corners exceed {slots} fitter slots"
        )));
    }
    let s = q.div_ceil(d as u32);
    let alphas = MultiIndex::all_up_to(d, q - 1);
    let l_sub = product_depth(b, q, d, n, l);
    let bp = b.max(1.0);

    let psi = build_step_function(&spec)?;
    let mut s1_parts = vec![affine(
        d,
        (0..d).map(|j| vec![(j, 1.0)]).collect(),
        vec![0.0; d],
    )?];
    for j in 0..d {
        let sel = affine(d, vec![vec![(j, 1.0)]], vec![0.0])?;
        s1_parts.push(compose_serial(&sel, &psi)?);
    }
    let s1 = compose_parallel(&s1_parts)?;

    let index_map = affine(
        2 * d,
        vec![(0..d).map(|j| (d + j, powi(r as f64, j as i32))).collect()],
        vec![0.0],
    )?;
    let offset_map = affine(
        2 * d,
        (0..d)
            .map(|j| vec![(j, 1.0), (d + j, -1.0 / r as f64)])
            .collect(),
        vec![0.0; d],
    )?;
    let mut used_fd = false;
    let mut bits = 0;
    let mut s2_parts = Vec::new();
    let mut s3_parts = Vec::new();
    for alpha in &alphas {
        let mut vals = Vec::with_capacity(corners as usize);
        for i in 0..corners {
            let x: Vec<f64> = corner_of_index(i, r, d)
                .iter()
                .map(|k| *k as f64 / r as f64)
                .collect();
            let (v, fd) = partial_or_fd(f, alpha, &x);
            if fd && !opts.allow_fd {
                return Err(param(format!("oracle lacks partial {:?}", alpha.0)));
            }
            used_fd |= fd;
            vals.push(v);
        }
        let (lo, hi) = match opts.scaling {
            Scaling::CqNorm => (-b, b),
            Scaling::Range => vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, z), v| {
                (a.min(*v), z.max(*v))
            }),
        };
        let span = hi - lo;
        let mut xi: Vec<f64> = vals
            .iter()
            .map(|v| if span > 0.0 { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.0 })
            .collect();
        xi.resize(slots, 0.0);
        bits = fitter_bits(&xi, nf, lf, s)?.0;
        let fitter = build_point_fitter(&xi, nf, lf, s)?;
        s2_parts.push(compose_serial(&index_map, &fitter)?);
        let fact = alpha.factorial();
        // u_α = (lo + span·φ_α)/α!
        let (scale, shift) = (span / fact, lo / fact);
        if alpha.norm1() == 0 {
            s3_parts.push(affine(1, vec![vec![(0, scale)]], vec![shift])?);
        } else {
            s2_parts.push(compose_serial(&offset_map, &build_monomial(alpha, n, l_sub)?)?);
            let pre = affine(2, vec![vec![(0, scale)], vec![(1, 1.0)]], vec![shift, 0.0])?;
            let prod = build_product_general(n, l_sub, -bp, bp)?;
            s3_parts.push(compose_serial(&pre, &prod)?);
        }
    }
    let s2 = compose_parallel(&s2_parts)?;
    let terms = compose_block_diagonal(&s3_parts)?;
    let sum = affine(s3_parts.len(), vec![(0..s3_parts.len()).map(|i| (i, 1.0)).collect()], vec![0.0])?;
    let s3 = compose_serial(&terms, &sum)?;
    let network = compose_serial(&bridge_serial(&s1, &s2)?, &s3)?;
    let profile = network.profile();
    Ok(Approximation {
        network,
        r,
        c,
        delta,
        fitter_bits: bits,
        product_depth: l_sub,
        used_fd,
        profile,
    })
}

/// Median extension: for each axis `i`,
/// `φ_{i+1}(x) = mid(φ_i(x - δe_i), φ_i(x), φ_i(x + δe_i))`.
///
/// The shifted inputs are formed as `relu(±(x + sδe_i))`, so the parameter
/// supremum stays at `max(P(φ), 1, δ)`. `d = 0` returns the input.
pub fn extend_from_trifling(net: &Network, d: usize, delta: f64) -> Result<Network> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(param(format!("δ must be positive, got {delta}")));
    }
    if net.output_dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: net.output_dim(),
        });
    }
    let dim = net.input_dim();
    if d > dim {
        return Err(Error::Dimension {
            expected: dim,
            found: d,
        });
    }
    let mut cur = net.clone();
    for axis in 0..d {
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        for s in [-1.0, 0.0, 1.0] {
            for sign in [1.0, -1.0] {
                for j in 0..dim {
                    rows.push(vec![(j, sign)]);
                    bias.push(if j == axis { sign * s * delta } else { 0.0 });
                }
            }
        }
        let mut out_rows = Vec::new();
        for copy in 0..3 {
            for j in 0..dim {
                let base = copy * 2 * dim;
                out_rows.push(vec![(base + j, 1.0), (base + dim + j, -1.0)]);
            }
        }
        let shift = Network::new(
            dim,
            vec![
                rows_layer(dim, rows, bias, Activation::Relu),
                rows_layer(6 * dim, out_rows, vec![0.0; 3 * dim], Activation::Identity),
            ],
        )?;
        let copies = compose_block_diagonal(&[cur.clone(), cur.clone(), cur])?;
        cur = bridge_serial(&compose_serial(&shift, &copies)?, &mid3())?;
    }
    Ok(cur)
}

/// The full approximator: `c` by [`select_c`], `δ = 1/((c+1)R)`, local
/// assembly, then the median extension.
pub fn build_full_approximator(
    f: &dyn FunctionOracle,
    n: u64,
    l: u64,
    opts: &AssemblyOptions,
) -> Result<Approximation> {
    let c = select_c(f.lipschitz(), f.dim(), f.order(), n, l);
    let local = build_local_approximator(f, n, l, c, opts)?;
    let network = extend_from_trifling(&local.network, f.dim(), local.delta)?;
    let profile = network.profile();
    Ok(Approximation {
        network,
        profile,
        ..local
    })
}

/// Boxed corpus lookup for callers that hold oracles by trait object.
pub fn corpus_oracle(name: &str, d: usize, q: u32) -> Result<Box<dyn FunctionOracle + Send + Sync>> {
    Ok(Box::new(CorpusFunction::by_name(name, d, q)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::breakpoint_weights;

    fn grid_err(net: &Network, f: &dyn FunctionOracle, skip: Option<&TriflingRegion>, pts: usize) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..=pts {
            let x = [i as f64 / pts as f64];
            if skip.is_some_and(|t| t.contains(&x)) {
                continue;
            }
            e = e.max((net.eval_scalar(&x) - f.value(&x)).abs());
        }
        e
    }

    #[test]
    fn corner_indexing_bijective() {
        for d in 1..=2 {
            for r in 1..=8u64 {
                let total = r.pow(d as u32);
                let mut seen = vec![false; total as usize];
                for i in 0..total {
                    let k = corner_of_index(i, r, d);
                    assert!(k.iter().all(|v| *v < r));
                    assert_eq!(index_of_corner(&k, r), i);
                    seen[i as usize] = true;
                }
                assert!(seen.iter().all(|s| *s));
            }
        }
    }

    #[test]
    fn trifling_membership() {
        let t = TriflingRegion::new(1, 4, 0.05).unwrap();
        assert!(t.contains(&[0.24]));
        assert!(!t.contains(&[0.25]));
        assert!(!t.contains(&[0.2]));
        assert!(!t.contains(&[0.99]));
        assert!(!t.contains(&[0.0]));
        assert!(TriflingRegion::new(1, 4, 1.0 / 12.0).is_ok());
        assert!(TriflingRegion::new(1, 4, 0.1).is_err());
        let t2 = TriflingRegion::new(2, 2, 0.1).unwrap();
        assert!(t2.contains(&[0.1, 0.45]));
        assert!(!t2.contains(&[0.1, 0.6]));
    }

    #[test]
    fn corpus_partials_match_finite_differences() {
        for name in ["linear", "square", "sine"] {
            for d in 1..=2 {
                let f = CorpusFunction::by_name(name, d, 2).unwrap();
                for alpha in MultiIndex::all_up_to(d, 2) {
                    let x = vec![0.3; d];
                    let a = f.partial(&alpha, &x).unwrap();
                    let b = finite_difference(&f, &alpha, &x);
                    assert!((a - b).abs() < 1e-4, "{name} {:?}: {a} vs {b}", alpha.0);
                }
            }
        }
        let p = CorpusFunction::by_name("product2", 2, 2).unwrap();
        assert_eq!(p.partial(&MultiIndex(vec![1, 0]), &[0.2, 0.7]), Some(0.7));
        assert!(CorpusFunction::by_name("nope", 1, 1).is_err());
        assert!(CorpusFunction::by_name("product2", 1, 1).is_err());
    }

    #[test]
    fn c_selection() {
        assert_eq!(select_c(1.0, 1, 1, 8, 2), 2);
        assert_eq!(select_c(2.0, 1, 2, 3, 1), 18);
        assert_eq!(select_c(0.0, 2, 3, 4, 4), 2);
    }

    #[test]
    fn constant_is_near_exact() {
        let f = CorpusFunction::new(CorpusShape::Constant(0.5), 1, 1).unwrap();
        let a = build_full_approximator(&f, 2, 1, &AssemblyOptions::default()).unwrap();
        let tol = 2.0 * f.cq_norm() * powi(0.5, a.fitter_bits as i32);
        assert!(grid_err(&a.network, &f, None, 1000) <= tol + 1e-12);
    }

    #[test]
    fn linear_local_error() {
        let f = CorpusFunction::by_name("linear", 1, 1).unwrap();
        let a = build_local_approximator(&f, 2, 2, 2, &AssemblyOptions::default()).unwrap();
        let t = TriflingRegion::new(1, a.r, a.delta).unwrap();
        let e = grid_err(&a.network, &f, Some(&t), 2000);
        assert!(e <= 2.0 / 16.0, "error {e}");
    }

    #[test]
    fn square_full_error_decreases() {
        let f = CorpusFunction::by_name("square", 1, 2).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=3 {
            let a = build_full_approximator(&f, n, 1, &AssemblyOptions::default()).unwrap();
            let e = grid_err(&a.network, &f, None, 2000);
            assert!(e < prev, "n={n}: {e} >= {prev}");
            prev = e;
        }
    }

    #[test]
    fn missing_partial_policy() {
        struct Bare;
        impl FunctionOracle for Bare {
            fn dim(&self) -> usize {
                1
            }
            fn order(&self) -> u32 {
                2
            }
            fn value(&self, x: &[f64]) -> f64 {
                x[0] * x[0]
            }
            fn lipschitz(&self) -> f64 {
                2.0
            }
            fn cq_norm(&self) -> f64 {
                2.0
            }
        }
        assert!(build_local_approximator(&Bare, 2, 1, 2, &AssemblyOptions::default()).is_err());
        let opts = AssemblyOptions {
            allow_fd: true,
            ..Default::default()
        };
        let a = build_local_approximator(&Bare, 2, 1, 2, &opts).unwrap();
        assert!(a.used_fd);
    }

    fn spike_net(delta: f64) -> Network {
        // Identity on [0, 1] except a spike of height 5 inside (1/2 - δ, 1/2).
        let z = [-1.0, 0.5 - delta, 0.5 - delta / 2.0, 0.5, 2.0];
        let v = [-1.0, 0.5 - delta, 5.0, 0.5, 2.0];
        let w = breakpoint_weights(&z, &v);
        Network::new(
            1,
            vec![
                rows_layer(1, z[..4].iter().map(|_| vec![(0, 1.0)]).collect(), z[..4].iter().map(|v| -v).collect(), Activation::Relu),
                rows_layer(4, vec![w.iter().copied().enumerate().collect()], vec![v[0]], Activation::Identity),
            ],
        )
        .unwrap()
    }

    #[test]
    fn extension_repairs_planted_strip() {
        let delta = 0.05;
        let net = spike_net(delta);
        assert!((net.eval_scalar(&[0.5 - delta / 2.0]) - 5.0).abs() < 1e-12);
        let ext = extend_from_trifling(&net, 1, delta).unwrap();
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert!((ext.eval_scalar(&[x]) - x).abs() <= delta + 1e-12, "x = {x}");
        }
        assert!(ext.param_sup() <= net.param_sup().max(1.0));
        assert_eq!(extend_from_trifling(&net, 0, delta).unwrap(), net);
    }

    #[test]
    fn extension_of_exact_net_is_exact() {
        let net = affine_rows(2, vec![vec![(0, 0.3), (1, -0.7)]], vec![0.1]).unwrap();
        let ext = extend_from_trifling(&net, 2, 0.01).unwrap();
        for (a, b) in [(0.2, 0.9), (0.5, 0.5), (1.0, 0.0)] {
            let want = 0.3 * a - 0.7 * b + 0.1;
            assert!((ext.eval_scalar(&[a, b]) - want).abs() < 1e-12);
        }
        assert!(ext.param_sup() <= 1.0);
    }
}
