//! Fitting real values at integer points through their binary digits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::compose_parallel;
use crate::error::{Error, Result};
use crate::math::{ceil, log2, powi};
use crate::net::{rows_layer, Activation, Network};
use crate::primitives::build_bit_lookup;

/// Largest number of binary digits a point fitter may use.
pub const MAX_BITS: u32 = 50;

/// Number of digits `J = ⌈2s·log2(NL + 1)⌉` and the digit table:
/// `digits[j][i]` is bit `j + 1` after the binary point of
/// `min(⌊ξ_i 2^J⌋, 2^J - 1) / 2^J`.
pub fn fitter_bits(xi: &[f64], n: usize, l: usize, s: u32) -> Result<(u32, Vec<Vec<u8>>)> {
    if n == 0 || l == 0 || s == 0 {
        return Err(Error::InvalidParameter("N, L and s must be at least 1".into()));
    }
    if let Some(v) = xi.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!("value {v} outside [0, 1]")));
    }
    let j = ceil(2.0 * s as f64 * log2((n * l + 1) as f64)) as u32;
    if j > MAX_BITS {
        return Err(Error::InvalidParameter(format!(
            "point fitter needs J = {j} > {MAX_BITS} binary digits"
        )));
    }
    let scale = powi(2.0, j as i32);
    let top = (1u64 << j) - 1;
    let q: Vec<u64> = xi
        .iter()
        .map(|v| ((v * scale) as u64).min(top))
        .collect();
    let digits = (0..j)
        .map(|b| q.iter().map(|qi| ((qi >> (j - 1 - b)) & 1) as u8).collect())
        .collect();
    Ok((j, digits))
}

/// Network with `|φ(i) - ξ_i| <= (NL)^{-2s}` at integers `0 <= i < N²L²`
/// and `0 <= φ <= 1` on all of ℝ.
///
/// The `J` digit lookups run in parallel; their weighted sum `t` is clamped
/// as `1 - relu(1 - relu(t))`.
pub fn build_point_fitter(xi: &[f64], n: usize, l: usize, s: u32) -> Result<Network> {
    if xi.len() != n * n * l * l {
        return Err(Error::Dimension {
            expected: n * n * l * l,
            found: xi.len(),
        });
    }
    let (j, digits) = fitter_bits(xi, n, l, s)?;
    let lookups: Vec<Network> = digits
        .iter()
        .map(|d| build_bit_lookup(d, n, l))
        .collect::<Result<_>>()?;
    let par = compose_parallel(&lookups)?;
    let input_dim = par.input_dim();
    let mut layers = par.into_layers();
    let (w, b, _) = layers.pop().expect("nonempty").into_parts();
    let coeffs: Vec<f64> = (1..=j).map(|k| powi(0.5, k as i32)).collect();
    // Fold Σ 2^{-k} out_k into the lookups' output map.
    let coeffs = &coeffs;
    let row: Vec<(usize, f64)> = (0..w.rows())
        .flat_map(|r| w.row(r).map(move |(c, v)| (c, v * coeffs[r])))
        .collect();
    let bias: f64 = b.iter().zip(coeffs).map(|(x, c)| x * c).sum();
    layers.push(rows_layer(w.cols(), vec![row], vec![bias], Activation::Relu));
    layers.push(rows_layer(1, vec![vec![(0, -1.0)]], vec![1.0], Activation::Relu));
    layers.push(rows_layer(1, vec![vec![(0, -1.0)]], vec![1.0], Activation::Identity));
    Network::new(input_dim, layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn digit_table() {
        let (j, d) = fitter_bits(&[0.0, 1.0, 0.5, 0.3], 1, 1, 1).unwrap();
        assert_eq!(j, 2);
        assert_eq!(d, vec![vec![0, 1, 1, 0], vec![0, 1, 0, 1]]);
        assert!(fitter_bits(&[1.5], 1, 1, 1).is_err());
        assert!(fitter_bits(&[0.5], 100, 100, 4).is_err());
    }

    #[test]
    fn constant_targets() {
        let zero = build_point_fitter(&[0.0; 16], 2, 2, 1).unwrap();
        assert!((0..16).all(|i| zero.eval_scalar(&[i as f64]).abs() < 1e-9));
        let one = build_point_fitter(&[1.0; 16], 2, 2, 1).unwrap();
        for i in 0..16 {
            let v = one.eval_scalar(&[i as f64]);
            assert!((1.0 - 1.0 / 32.0 - 1e-9..=1.0).contains(&v));
        }
    }

    #[test]
    fn random_targets_and_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let xi: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let net = build_point_fitter(&xi, 2, 2, 1).unwrap();
        for (i, x) in xi.iter().enumerate() {
            assert!((net.eval_scalar(&[i as f64]) - x).abs() <= 1.0 / 16.0);
        }
        for _ in 0..2000 {
            let v = net.eval_scalar(&[rng.gen_range(-100.0..100.0)]);
            assert!((0.0..=1.0).contains(&v));
        }
    }
}
