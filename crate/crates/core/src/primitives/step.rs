//! Step functions mapping subintervals of `[0, 1]` to their index.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{affine_rows, compose_parallel, compose_serial, deepen_two_layer};
use crate::error::{param, Error, Result};
use crate::interp::{build_two_layer_interp, InequiGrid, TwoLayerGrid};
use crate::math::{int_root, round};
use crate::net::Network;

/// Parameters of a step network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSpec {
    /// Input dimension of the surrounding approximator.
    pub d: u32,
    /// Width budget.
    pub n: u64,
    /// Depth budget.
    pub l: u64,
    /// Trifling width `δ = 1/((c+1)K)`.
    pub delta: f64,
}

impl StepSpec {
    /// Spec with `δ = 1/((c+1)K)`.
    pub fn new(d: u32, n: u64, l: u64, c: u64) -> Result<Self> {
        if d == 0 || n == 0 || l == 0 || c == 0 {
            return Err(param("step spec needs d, N, L, c >= 1"));
        }
        let k = Self::k_of(d, n, l);
        Ok(Self {
            d,
            n,
            l,
            delta: 1.0 / ((c + 1) as f64 * k as f64),
        })
    }

    /// Spec from an explicit `δ`; rejects values not of the form
    /// `1/((c+1)K)` with natural `c >= 1`.
    pub fn with_delta(d: u32, n: u64, l: u64, delta: f64) -> Result<Self> {
        if d == 0 || n == 0 || l == 0 {
            return Err(param("step spec needs d, N, L >= 1"));
        }
        let spec = Self { d, n, l, delta };
        spec.c()?;
        Ok(spec)
    }

    fn k_of(d: u32, n: u64, l: u64) -> u64 {
        let m = int_root(n, d);
        m * m * int_root(l * l, d)
    }

    /// `m = ⌊N^{1/d}⌋`.
    pub fn m(&self) -> u64 {
        int_root(self.n, self.d)
    }

    /// `⌊L^{2/d}⌋`.
    pub fn l_part(&self) -> u64 {
        int_root(self.l * self.l, self.d)
    }

    /// Number of steps `K = ⌊N^{1/d}⌋²⌊L^{2/d}⌋`.
    pub fn k(&self) -> u64 {
        Self::k_of(self.d, self.n, self.l)
    }

    /// The natural `c` with `δ = 1/((c+1)K)`.
    pub fn c(&self) -> Result<u64> {
        let k = self.k() as f64;
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(param(format!("δ must be positive, got {}", self.delta)));
        }
        let c1 = 1.0 / (self.delta * k);
        let r = round(c1);
        if r < 2.0 || (c1 - r).abs() > 1e-9 * r {
            return Err(param(format!(
                "δ = {} is not of the form 1/((c+1)K) with c >= 1 and K = {}",
                self.delta,
                self.k()
            )));
        }
        Ok(r as u64 - 1)
    }

    /// Index of the plateau containing `x`, or `None` inside a strip
    /// `((k+1)/K - δ, (k+1)/K)`.
    pub fn plateau(&self, x: f64) -> Option<u64> {
        let k = self.k();
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        let kf = k as f64;
        let idx = ((x * kf) as u64).min(k - 1);
        let end = (idx + 1) as f64 / kf;
        if idx + 1 < k && x > end - self.delta && x < end {
            None
        } else {
            Some(idx)
        }
    }
}

/// Staircase `[k/R, (k+1)/R - δ] -> k` for `0 <= k < R̃` with
/// `δ = 1/((c+1)R)` and `R̃ = m(n+1)/2`, realized by a two-layer
/// interpolant on the inequidistant grid and deepened to width `4m + 2`.
pub fn staircase(r: f64, c: u64, m: usize, n: usize) -> Result<Network> {
    let grid = InequiGrid::new(r, c, m, n)?;
    let rt = grid.r_tilde();
    let y: Vec<f64> = (0..grid.len())
        .map(|i| (i / 2).min(rt - 1) as f64)
        .collect();
    let two = build_two_layer_interp(&TwoLayerGrid::Inequi(grid), &y)?;
    deepen_two_layer(&two)
}

/// Step network `x -> k` on `[k/K, (k+1)/K - δ]` (the last plateau extends
/// to 1).
///
/// For `d >= 2` this is one staircase with `m = ⌊N^{1/d}⌋` blocks. For
/// `d = 1` it is `φ₁(x)L + φ₂(x - φ₁(x)/M)` with `M = N²L`: `φ₁` locates
/// the coarse interval and `φ₂` the fine one inside it.
pub fn build_step_function(spec: &StepSpec) -> Result<Network> {
    let c = spec.c()?;
    let k = spec.k();
    if spec.d >= 2 {
        let m = spec.m() as usize;
        let n = 2 * m * spec.l_part() as usize - 1;
        return staircase(k as f64, c, m, n);
    }
    let (nn, l) = (spec.n as usize, spec.l as usize);
    let coarse = (nn * nn * l) as f64;
    let c1 = (c + 1) * l as u64 - 1;
    let phi1 = staircase(coarse, c1, nn, 2 * nn * l - 1)?;
    let phi2 = staircase(k as f64, c, 1, 2 * l - 1)?;
    let ident = affine_rows(1, vec![vec![(0, 1.0)]], vec![0.0])?;
    let a = compose_parallel(&[ident, phi1])?;
    let shift = affine_rows(2, vec![vec![(0, 1.0), (1, -1.0 / coarse)]], vec![0.0])?;
    let fine = compose_serial(&shift, &phi2)?;
    let keep = affine_rows(2, vec![vec![(1, 1.0)]], vec![0.0])?;
    let b = compose_parallel(&[keep, fine])?;
    let out = affine_rows(2, vec![vec![(0, l as f64), (1, 1.0)]], vec![0.0])?;
    let net = compose_serial(&compose_serial(&a, &b)?, &out)?;
    if net.output_dim() != 1 {
        return Err(Error::InvalidNetwork("step network output".into()));
    }
    Ok(net)
}
