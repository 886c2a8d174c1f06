//! Approximation of `x²` on `[0, 1]` by sawtooth composition.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::interp::{build_equi_interp, EquiGrid};
use crate::math::powi;
use crate::net::{rows_layer, Activation, Network};

/// Sawtooth `T_i`: 1 at odd multiples of `2^{-i}`, 0 at even multiples,
/// linear in between.
pub fn sawtooth(i: u32, x: f64) -> f64 {
    let mut v = x;
    for _ in 0..i {
        v = 2.0 * v.min(1.0 - v);
    }
    v
}

/// Smallest `k` with `N <= k·2^k`.
pub fn square_k(n: u64) -> u32 {
    let mut k = 1u32;
    while (k as u64) << k < n {
        k += 1;
    }
    k
}

/// Network `φ ≈ x²` on `[0, 1]` with `φ(x) = x - Σ_{i=1}^{Lk} 4^{-i} T_i(x)`,
/// width `2^k + 1`, depth `L + 1` and error `2^{-2Lk-2} <= N^{-L}`.
///
/// Each hidden layer holds `relu(u - j/2^k)`, `0 <= j < 2^k`, which spans
/// `T_1(u), ..., T_k(u)`, and carries the running value `S`. The next stage
/// reads `u' = T_k(u)`, so stage `t` produces `T_{k(t-1)+i}(x)`.
pub fn build_square(n: u64, l: u32) -> Result<Network> {
    if n == 0 || l == 0 {
        return Err(Error::InvalidParameter("N and L must be at least 1".into()));
    }
    let k = square_k(n);
    let units = 1usize << k;
    let grid = EquiGrid::new(units as f64, units, 0.0)?;
    // teeth[i][j]: output weight of unit j in T_{i+1}.
    let teeth: Vec<Vec<f64>> = (1..=k)
        .map(|i| {
            let y: Vec<f64> = grid.points().iter().map(|x| sawtooth(i, *x)).collect();
            let net = build_equi_interp(&grid, &y)?;
            Ok(net.layers()[1].weights().to_dense())
        })
        .collect::<Result<_>>()?;
    let offsets: Vec<f64> = (0..units).map(|j| -(j as f64) / units as f64).collect();
    // Σ_i 4^{-(k(t-1)+i)} T_i as weights on the stage units.
    let stage_sum = |t: u32| -> Vec<(usize, f64)> {
        (0..units)
            .map(|j| {
                let w: f64 = (1..=k)
                    .map(|i| powi(0.25, (k * (t - 1) + i) as i32) * teeth[i as usize - 1][j])
                    .sum();
                (j, -w)
            })
            .collect()
    };
    let s_col = units;
    let mut rows: Vec<Vec<(usize, f64)>> = (0..units).map(|_| vec![(0, 1.0)]).collect();
    rows.push(vec![(0, 1.0)]);
    let mut bias = offsets.clone();
    bias.push(0.0);
    let mut layers = vec![rows_layer(1, rows, bias, Activation::Relu)];
    let last_tooth = &teeth[k as usize - 1];
    for t in 1..l {
        let tk: Vec<(usize, f64)> = last_tooth.iter().copied().enumerate().collect();
        let mut rows: Vec<Vec<(usize, f64)>> = (0..units).map(|_| tk.clone()).collect();
        let mut s = stage_sum(t);
        s.push((s_col, 1.0));
        rows.push(s);
        let mut bias = offsets.clone();
        bias.push(0.0);
        layers.push(rows_layer(units + 1, rows, bias, Activation::Relu));
    }
    let mut s = stage_sum(l);
    s.push((s_col, 1.0));
    layers.push(rows_layer(units + 1, vec![s], vec![0.0], Activation::Identity));
    Network::new(1, layers)
}
