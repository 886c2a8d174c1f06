//! Products and monomials built from the squaring network.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{
    affine_rows, compose_block_diagonal, compose_serial, identity_channel, linear_combination,
};
use crate::error::{Error, Result};
use crate::net::{rows_layer, Activation, Network};
use crate::primitives::build_square;

/// Multi-index `α ∈ ℕ^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    /// Dimension `d`.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α|₁`.
    pub fn norm1(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α! = Π α_i!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|a| crate::math::factorial(*a as u64)).product()
    }

    /// `x^α`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(a, v)| crate::math::powi(*v, *a as i32))
            .product()
    }

    /// All multi-indices of dimension `d` with `|α|₁ <= max_norm`, in
    /// lexicographic order.
    pub fn all_up_to(d: usize, max_norm: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; d];
        fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if i == cur.len() {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for a in 0..=left {
                cur[i] = a;
                rec(i + 1, left - a, cur, out);
            }
            cur[i] = 0;
        }
        if d > 0 {
            rec(0, max_norm, &mut cur, &mut out);
        }
        out
    }
}

/// Network `φ(x, y) ≈ xy` on `[0, 1]²` as
/// `2(ψ((x+y)/2) - ψ(x/2) - ψ(y/2))` with `ψ` the squaring network.
pub fn build_product_unit(n: u64, l: u32) -> Result<Network> {
    let sq = build_square(n, l)?;
    let pre = affine_rows(
        2,
        vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 0.5)], vec![(1, 0.5)]],
        vec![0.0; 3],
    )?;
    let three = compose_block_diagonal(&[sq.clone(), sq.clone(), sq])?;
    let post = affine_rows(3, vec![vec![(0, 2.0), (1, -2.0), (2, -2.0)]], vec![0.0])?;
    compose_serial(&compose_serial(&pre, &three)?, &post)
}

/// Network `φ(x, y) ≈ xy` on `[a, b]²`:
/// `(b-a)² φ_unit((x-a)/(b-a), (y-a)/(b-a)) + a·relu(x + y + 2|a|) - a² - 2a|a|`.
pub fn build_product_general(n: u64, l: u32, a: f64, b: f64) -> Result<Network> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidParameter(format!("need a < b, got [{a}, {b}]")));
    }
    let w = b - a;
    let pre = affine_rows(
        2,
        vec![vec![(0, 1.0 / w)], vec![(1, 1.0 / w)]],
        vec![-a / w, -a / w],
    )?;
    let unit = compose_serial(&pre, &build_product_unit(n, l)?)?;
    let shift = Network::new(
        2,
        vec![
            rows_layer(2, vec![vec![(0, 1.0), (1, 1.0)]], vec![2.0 * a.abs()], Activation::Relu),
            rows_layer(1, vec![vec![(0, 1.0)]], vec![0.0], Activation::Identity),
        ],
    )?;
    linear_combination(&[unit, shift], &[w * w, a], -a * a - 2.0 * a * a.abs())
}

/// Network `φ(x_1, ..., x_k) ≈ x_1···x_k` on `[0, 1]^k` by chaining the
/// unit product: `φ_{i+1} = φ_unit(φ_i(x_1..x_i), x_{i+1})`.
pub fn build_multi_product(k: usize, n: u64, l: u32) -> Result<Network> {
    if k < 2 {
        return Err(Error::InvalidParameter("multi-product needs k >= 2".into()));
    }
    let unit = build_product_unit(n, l)?;
    let mut net = unit.clone();
    for _ in 2..k {
        let id = identity_channel(1, net.depth())?;
        let pair = compose_block_diagonal(&[net, id])?;
        net = compose_serial(&pair, &unit)?;
    }
    Ok(net)
}

/// Network `φ(x) ≈ x^α` on `[0, 1]^d`: a replication map with unit
/// entries followed by the multi-product. `|α|₁ = 0` gives the constant 1
/// and `|α|₁ = 1` a coordinate projection.
pub fn build_monomial(alpha: &MultiIndex, n: u64, l: u32) -> Result<Network> {
    let d = alpha.dim();
    if d == 0 {
        return Err(Error::InvalidParameter("empty multi-index".into()));
    }
    let k = alpha.norm1() as usize;
    let rows: Vec<Vec<(usize, f64)>> = alpha
        .0
        .iter()
        .enumerate()
        .flat_map(|(i, a)| (0..*a).map(move |_| vec![(i, 1.0)]))
        .collect();
    match k {
        0 => affine_rows(d, vec![vec![]], vec![1.0]),
        1 => affine_rows(d, rows, vec![0.0]),
        _ => {
            let rep = affine_rows(d, rows, vec![0.0; k])?;
            compose_serial(&rep, &build_multi_product(k, n, l)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(net: &Network, a: f64, b: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..=40 {
            for j in 0..=40 {
                let x = a + (b - a) * i as f64 / 40.0;
                let y = a + (b - a) * j as f64 / 40.0;
                e = e.max((net.eval_scalar(&[x, y]) - f(x, y)).abs());
            }
        }
        e
    }

    #[test]
    fn unit_product() {
        let net = build_product_unit(2, 4).unwrap();
        // Three squares, each within 2^{-10}, doubled.
        let bound = 6.0 * crate::math::powi(2.0, -10);
        assert!(grid2(&net, 0.0, 1.0, |x, y| x * y) <= bound);
        assert!((0..=10).all(|j| net.eval_scalar(&[0.0, j as f64 / 10.0]).abs() <= bound));
        let x = 0.3f64;
        let y = 0.7f64;
        assert!((2.0 * ((x + y) * (x + y) / 4.0 - x * x / 4.0 - y * y / 4.0) - x * y).abs() < 1e-15);
    }

    #[test]
    fn general_product() {
        let net = build_product_general(3, 4, -2.0, 1.5).unwrap();
        let bound = 3.5f64 * 3.5 * 6.0 * crate::math::powi(2.0, -18);
        assert!(grid2(&net, -2.0, 1.5, |x, y| x * y) <= bound);
        assert!(net.param_sup() <= 12.25f64.max(12.0).max(3.0 * 4.0) * 1.0 + 1e-12);
        assert!(build_product_general(2, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn multi_product_decreases_with_depth() {
        let mut prev = f64::INFINITY;
        for l in 1..=4 {
            let net = build_multi_product(3, 2, l).unwrap();
            let mut e: f64 = 0.0;
            for i in 0..=8 {
                for j in 0..=8 {
                    for k in 0..=8 {
                        let x = [i as f64 / 8.0, j as f64 / 8.0, k as f64 / 8.0];
                        e = e.max((net.eval_scalar(&x) - x[0] * x[1] * x[2]).abs());
                    }
                }
            }
            assert!(e < prev);
            prev = e;
        }
        let net = build_multi_product(3, 2, 3).unwrap();
        assert!((net.eval_scalar(&[1.0, 1.0, 1.0]) - 1.0).abs() < 0.05);
        assert!(net.eval_scalar(&[0.0, 0.6, 0.9]).abs() < 0.05);
    }

    #[test]
    fn monomials() {
        let c = build_monomial(&MultiIndex(vec![0, 0]), 2, 2).unwrap();
        assert_eq!(c.eval_scalar(&[0.3, 0.9]), 1.0);
        let p = build_monomial(&MultiIndex(vec![1]), 2, 2).unwrap();
        assert_eq!(p.eval_scalar(&[0.4]), 0.4);
        let m = build_monomial(&MultiIndex(vec![2, 1]), 2, 3).unwrap();
        assert!((m.eval_scalar(&[0.5, 0.5]) - 0.125).abs() <= 0.05);
        assert!(m.profile().param_sup <= 8.0);
        assert_eq!(MultiIndex::all_up_to(2, 2).len(), 6);
        assert_eq!(MultiIndex(vec![2, 3]).factorial(), 12.0);
    }
}
