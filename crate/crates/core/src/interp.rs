//! Exact piecewise-linear interpolation by ReLU networks.
//!
//! Two grid families are supported. An [`EquiGrid`] has points
//! `x_k = x0 + k/R`. An [`InequiGrid`] alternates long and short gaps:
//! `x_{2k} = k/R` and `x_{2k-1} = k/R - δ` with `δ = 1/((c+1)R)`.
//!
//! The single-hidden-layer interpolants place one unit `relu(x - z_i)` per
//! breakpoint and read the output weights off the slope changes. The
//! two-hidden-layer interpolant splits the grid into `m` blocks of `n+1`
//! points, fits the block endpoints with `g_0` and removes the remaining
//! residual one point per step with the pairs `g_k^±`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::matrix::Matrix;
use crate::net::{Activation, AffineLayer, Network};

/// Equidistant grid `x_k = x0 + k/R`, `0 <= k <= count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquiGrid {
    /// Reciprocal spacing.
    pub r: f64,
    /// Number of intervals.
    pub count: usize,
    /// Left endpoint.
    pub x0: f64,
}

impl EquiGrid {
    /// Checks that the grid is strictly increasing.
    pub fn new(r: f64, count: usize, x0: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0 && x0.is_finite()) || count == 0 {
            return Err(Error::InvalidGrid(format!(
                "equidistant grid needs R > 0 and at least one interval (R = {r}, count = {count})"
            )));
        }
        Ok(Self { r, count, x0 })
    }

    /// Grid point `x_k`.
    pub fn point(&self, k: usize) -> f64 {
        self.x0 + k as f64 / self.r
    }

    /// All `count + 1` points.
    pub fn points(&self) -> Vec<f64> {
        (0..=self.count).map(|k| self.point(k)).collect()
    }
}

/// Inequidistant grid with `2R̃ + 1` points, grouped into `m` blocks of
/// `n + 1 = 2p` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequiGrid {
    r: f64,
    r_tilde: usize,
    c: u64,
    m: usize,
    n: usize,
}

impl InequiGrid {
    /// Grid with `R̃ = m(n+1)/2`.
    pub fn new(r: f64, c: u64, m: usize, n: usize) -> Result<Self> {
        if !(m * (n + 1)).is_multiple_of(2) {
            return Err(Error::InvalidGrid("m(n+1) must be even".into()));
        }
        Self::with_r_tilde(r, m * (n + 1) / 2, c, m, n)
    }

    /// Grid with explicit `R̃`; requires `2R̃ = m(n+1)` and `n+1` even.
    pub fn with_r_tilde(r: f64, r_tilde: usize, c: u64, m: usize, n: usize) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidGrid(format!("R must be positive, got {r}")));
        }
        if c < 1 {
            return Err(Error::InvalidGrid("c must be at least 1".into()));
        }
        if m == 0 || !(n + 1).is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "need m >= 1 and n+1 even (m = {m}, n = {n})"
            )));
        }
        if 2 * r_tilde != m * (n + 1) {
            return Err(Error::InvalidGrid(format!(
                "2R̃ = {} differs from m(n+1) = {}",
                2 * r_tilde,
                m * (n + 1)
            )));
        }
        Ok(Self {
            r,
            r_tilde,
            c,
            m,
            n,
        })
    }

    /// Reciprocal coarse spacing `R`.
    pub fn r(&self) -> f64 {
        self.r
    }
    /// Number of coarse intervals `R̃`.
    pub fn r_tilde(&self) -> usize {
        self.r_tilde
    }
    /// The integer `c` in `δ = 1/((c+1)R)`.
    pub fn c(&self) -> u64 {
        self.c
    }
    /// Number of blocks.
    pub fn m(&self) -> usize {
        self.m
    }
    /// Points per block minus one.
    pub fn n(&self) -> usize {
        self.n
    }
    /// `p = (n+1)/2`.
    pub fn p(&self) -> usize {
        self.n.div_ceil(2)
    }
    /// Short gap `δ = 1/((c+1)R)`.
    pub fn delta(&self) -> f64 {
        1.0 / ((self.c + 1) as f64 * self.r)
    }
    /// `α = Rδ = 1/(c+1)`.
    pub fn alpha(&self) -> f64 {
        1.0 / (self.c + 1) as f64
    }
    /// Number of grid points, `2R̃ + 1`.
    pub fn len(&self) -> usize {
        2 * self.r_tilde + 1
    }
    /// Always false; a grid has at least three points.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid point `x_i`.
    pub fn point(&self, i: usize) -> f64 {
        if i.is_multiple_of(2) {
            (i / 2) as f64 / self.r
        } else {
            (i / 2 + 1) as f64 / self.r - self.delta()
        }
    }

    /// All grid points.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Grid index of designated point `z_i`: block starts `x_{j(n+1)}`, block
    /// ends `x_{j(n+1)+n}` and the final point `x_{m(n+1)}`.
    pub fn designated_index(&self, i: usize) -> usize {
        designated_index(i, self.n)
    }

    /// The `2m + 1` designated points.
    pub fn designated(&self) -> Vec<f64> {
        (0..=2 * self.m)
            .map(|i| self.point(self.designated_index(i)))
            .collect()
    }
}

fn designated_index(i: usize, n: usize) -> usize {
    let j = i / 2;
    if i.is_multiple_of(2) {
        j * (n + 1)
    } else {
        j * (n + 1) + n
    }
}

fn layer(w: Matrix, b: Vec<f64>, act: Activation) -> AffineLayer {
    match AffineLayer::new(w, b, act) {
        Ok(l) => l,
        Err(e) => panic!("internal layer construction failed: {e}"),
    }
}

fn check_finite(y: &[f64]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(param("targets must be finite"))
    }
}

/// Hidden layer of units `relu(x - z_i)`.
fn breakpoint_layer(z: &[f64]) -> AffineLayer {
    layer(
        Matrix::from_rows(1, z.iter().map(|_| vec![(0, 1.0)])),
        z.iter().map(|v| -v).collect(),
        Activation::Relu,
    )
}

/// Output weights of `v_0 + Σ w_i relu(x - z_i)` through `(z_i, v_i)`: the
/// slope changes at each breakpoint. A zero-length segment inherits the
/// previous slope.
pub fn breakpoint_weights(z: &[f64], v: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    (0..z.len() - 1)
        .map(|i| {
            let h = z[i + 1] - z[i];
            let s = if h > 0.0 { (v[i + 1] - v[i]) / h } else { prev };
            let w = s - prev;
            prev = s;
            w
        })
        .collect()
}

/// Single hidden layer of width `R̃` with `net(x_k) = y_k`.
///
/// Output weights are `w_0 = R(y_1 - y_0)` and
/// `w_j = R(y_{j+1} - 2y_j + y_{j-1})`; the output bias is `y_0`.
pub fn build_equi_interp(grid: &EquiGrid, y: &[f64]) -> Result<Network> {
    if y.len() != grid.count + 1 {
        return Err(Error::Dimension {
            expected: grid.count + 1,
            found: y.len(),
        });
    }
    check_finite(y)?;
    let r = grid.r;
    let w: Vec<f64> = (0..grid.count)
        .map(|j| {
            if j == 0 {
                r * (y[1] - y[0])
            } else {
                r * ((y[j + 1] - y[j]) - (y[j] - y[j - 1]))
            }
        })
        .collect();
    let z: Vec<f64> = (0..grid.count).map(|k| grid.point(k)).collect();
    Ok(Network::from_parts(
        1,
        vec![
            breakpoint_layer(&z),
            layer(Matrix::from_dense(1, w.len(), &w), vec![y[0]], Activation::Identity),
        ],
    ))
}

/// Output weights for the designated points of an inequidistant grid.
///
/// With `P = p(c+1) - 1`, long gaps have length `P/((c+1)R)` and short gaps
/// `δ`, giving
/// `w_{2j+1} = (c+1)R(v_{2j+2} - (1 + 1/P)v_{2j+1} + v_{2j}/P)` and
/// `w_{2j} = (c+1)R(v_{2j+1}/P - (1 + 1/P)v_{2j} + v_{2j-1})` with
/// `v_{-1} := v_0`.
pub fn inequi_weights(grid: &InequiGrid, v: &[f64]) -> Vec<f64> {
    let cr = (grid.c + 1) as f64 * grid.r;
    let pp = (grid.p() as u64 * (grid.c + 1) - 1) as f64;
    (0..2 * grid.m)
        .map(|i| {
            let j = i / 2;
            if i % 2 == 1 {
                cr * (v[2 * j + 2] - (1.0 + 1.0 / pp) * v[2 * j + 1] + v[2 * j] / pp)
            } else {
                let before = if j == 0 { v[0] } else { v[2 * j - 1] };
                cr * (v[2 * j + 1] / pp - (1.0 + 1.0 / pp) * v[2 * j] + before)
            }
        })
        .collect()
}

/// Single hidden layer of width `2m` through the `2m + 1` designated points
/// of an inequidistant grid.
pub fn build_inequi_interp(grid: &InequiGrid, v: &[f64]) -> Result<Network> {
    if v.len() != 2 * grid.m + 1 {
        return Err(Error::Dimension {
            expected: 2 * grid.m + 1,
            found: v.len(),
        });
    }
    check_finite(v)?;
    let w = inequi_weights(grid, v);
    let z = grid.designated();
    Ok(Network::from_parts(
        1,
        vec![
            breakpoint_layer(&z[..2 * grid.m]),
            layer(Matrix::from_dense(1, w.len(), &w), vec![v[0]], Activation::Identity),
        ],
    ))
}

/// Residual table of one block: `f[k][l]` for `1 <= k <= l <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockResiduals {
    /// Values from the one-step recursion.
    pub recursion: Vec<Vec<f64>>,
    /// Values from the closed forms in terms of `f_{1,·}`.
    pub closed_form: Vec<Vec<f64>>,
}

impl BlockResiduals {
    /// Diagonal `f_{k,k}` from the recursion.
    pub fn diagonal(&self, k: usize) -> f64 {
        self.recursion[k][k]
    }
}

/// Residuals `f_{k,l}^j` for every block `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FklTable {
    /// `α = 1/(c+1)`.
    pub alpha: f64,
    /// One entry per block.
    pub blocks: Vec<BlockResiduals>,
    /// Largest target magnitude `Y`.
    pub y_max: f64,
}

impl FklTable {
    /// Largest `|f_{k,k}^j|` over all blocks and `k >= 1`.
    pub fn max_diagonal(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| (1..b.recursion.len()).map(move |k| b.diagonal(k).abs()))
            .fold(0.0, f64::max)
    }
}

/// Offset of local point `l` from the block start, in units of `1/R`.
fn local_offset(l: usize, alpha: f64) -> f64 {
    if l.is_multiple_of(2) {
        (l / 2) as f64
    } else {
        (l / 2 + 1) as f64 - alpha
    }
}

fn designated_values(y: &[f64], m: usize, n: usize) -> Vec<f64> {
    (0..=2 * m).map(|i| y[designated_index(i, n)]).collect()
}

/// Residuals of the two-layer construction on an inequidistant grid.
///
/// `f_{1,l}^j = y_{j(n+1)+l} - g_0(x_{j(n+1)+l})`, then for `2 <= k <= l`
/// `f_{k,l} = f_{k-1,l} + γ f_{k-1,k-1}` with `γ` depending on the parities:
/// `(k-l-2)/(2(1-α))` and `(k-l-3+2α)/(2(1-α))` for even `k` (even, odd `l`),
/// `(k-l-1-2α)/(2α)` and `(k-l-2)/(2α)` for odd `k`.
pub fn fkl_table(grid: &InequiGrid, y: &[f64]) -> Result<FklTable> {
    if y.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            found: y.len(),
        });
    }
    check_finite(y)?;
    let (m, n, a) = (grid.m, grid.n, grid.alpha());
    let v = designated_values(y, m, n);
    let span = local_offset(n, a);
    let mut blocks = Vec::with_capacity(m);
    for j in 0..m {
        let base = j * (n + 1);
        let f1: Vec<f64> = (0..=n)
            .map(|l| {
                let g0 = v[2 * j] + (v[2 * j + 1] - v[2 * j]) * local_offset(l, a) / span;
                if l == 0 || l == n {
                    0.0
                } else {
                    y[base + l] - g0
                }
            })
            .collect();
        let mut rec = vec![vec![0.0; n + 1]; n + 1];
        if n >= 1 {
            rec[1][1..=n].copy_from_slice(&f1[1..=n]);
        }
        for k in 2..=n {
            let prev_diag = rec[k - 1][k - 1];
            for l in k..=n {
                let (kf, lf) = (k as f64, l as f64);
                let gamma = match (k % 2 == 0, l % 2 == 0) {
                    (true, true) => (kf - lf - 2.0) / (2.0 * (1.0 - a)),
                    (true, false) => (kf - lf - 3.0 + 2.0 * a) / (2.0 * (1.0 - a)),
                    (false, true) => (kf - lf - 1.0 - 2.0 * a) / (2.0 * a),
                    (false, false) => (kf - lf - 2.0) / (2.0 * a),
                };
                rec[k][l] = rec[k - 1][l] + gamma * prev_diag;
            }
        }
        let mut closed = vec![vec![0.0; n + 1]; n + 1];
        for l in 1..=n {
            closed[1][l] = f1[l];
        }
        for k in 2..=n {
            for l in k..=n {
                let d = (l - k) as f64;
                let (c1, c2) = match (k % 2 == 0, l % 2 == 0) {
                    (true, true) => ((d + 2.0) / (2.0 * (1.0 - a)), (d + 2.0 * a) / (2.0 * (1.0 - a))),
                    (true, false) => (
                        (d + 3.0 - 2.0 * a) / (2.0 * (1.0 - a)),
                        (d + 1.0) / (2.0 * (1.0 - a)),
                    ),
                    (false, true) => ((d + 1.0 + 2.0 * a) / (2.0 * a), (d + 1.0) / (2.0 * a)),
                    (false, false) => ((d + 2.0) / (2.0 * a), (d + 2.0 - 2.0 * a) / (2.0 * a)),
                };
                closed[k][l] = f1[l] - c1 * f1[k - 1] + c2 * f1[k - 2];
            }
        }
        blocks.push(BlockResiduals {
            recursion: rec,
            closed_form: closed,
        });
    }
    Ok(FklTable {
        alpha: a,
        blocks,
        y_max: y.iter().fold(0.0, |mm, v| mm.max(v.abs())),
    })
}

/// Grid accepted by [`build_two_layer_interp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoLayerGrid {
    /// Inequidistant grid; block structure is part of the grid.
    Inequi(InequiGrid),
    /// Equidistant grid with `count = m(n+1)` split into `m` blocks.
    Equi {
        /// The grid.
        grid: EquiGrid,
        /// Number of blocks.
        m: usize,
        /// Points per block minus one.
        n: usize,
    },
}

impl TwoLayerGrid {
    /// Equidistant blocks; checks `count = m(n+1)`.
    pub fn equi(grid: EquiGrid, m: usize, n: usize) -> Result<Self> {
        if m == 0 || grid.count != m * (n + 1) {
            return Err(Error::InvalidGrid(format!(
                "equidistant two-layer grid needs count = m(n+1), got {} vs {}",
                grid.count,
                m * (n + 1)
            )));
        }
        Ok(TwoLayerGrid::Equi { grid, m, n })
    }

    fn mn(&self) -> (usize, usize) {
        match self {
            TwoLayerGrid::Inequi(g) => (g.m, g.n),
            TwoLayerGrid::Equi { m, n, .. } => (*m, *n),
        }
    }

    /// All grid points.
    pub fn points(&self) -> Vec<f64> {
        match self {
            TwoLayerGrid::Inequi(g) => g.points(),
            TwoLayerGrid::Equi { grid, .. } => grid.points(),
        }
    }
}

/// Values of the second-layer rows `g_0, g_1^+, g_1^-, ..., g_n^-` at the
/// designated points, produced by direct simulation of the residuals: each
/// `g_k` is the line through `(x_{k-1}, 0)` and `(x_k, f_k(x_k))` on every
/// block and vanishes at the final point.
pub fn simulate_rows(points: &[f64], m: usize, n: usize, y: &[f64]) -> Vec<Vec<f64>> {
    let v = designated_values(y, m, n);
    let mut rows = vec![v.clone()];
    let mut plus = vec![vec![0.0; 2 * m + 1]; n];
    let mut minus = vec![vec![0.0; 2 * m + 1]; n];
    for j in 0..m {
        let x = &points[j * (n + 1)..=j * (n + 1) + n];
        let span = x[n] - x[0];
        let mut f: Vec<f64> = (0..=n)
            .map(|l| {
                if n == 0 || l == 0 || l == n {
                    0.0
                } else {
                    y[j * (n + 1) + l] - (v[2 * j] + (v[2 * j + 1] - v[2 * j]) * (x[l] - x[0]) / span)
                }
            })
            .collect();
        for k in 1..=n {
            let fk = f[k];
            let line = |t: f64| fk * (t - x[k - 1]) / (x[k] - x[k - 1]);
            let target = if fk >= 0.0 { &mut plus } else { &mut minus };
            let sign = if fk >= 0.0 { 1.0 } else { -1.0 };
            target[k - 1][2 * j] = sign * line(x[0]);
            target[k - 1][2 * j + 1] = sign * line(x[n]);
            for (l, fl) in f.iter_mut().enumerate().skip(k) {
                *fl -= line(x[l]);
            }
        }
    }
    for k in 0..n {
        rows.push(plus[k].clone());
        rows.push(minus[k].clone());
    }
    rows
}

/// The same rows from the residual recursion and the closed-form block
/// endpoint values on an inequidistant grid. With `f = f_{k,k}^j`, even `k`
/// gives endpoint values `(1 - k/(2α))f` and `(2p - k)f/(2α)`, odd `k` gives
/// `-(k-1)f/(2(1-α))` and `(n - k + 2(1-α))f/(2(1-α))`.
fn inequi_rows(grid: &InequiGrid, y: &[f64], table: &FklTable) -> Vec<Vec<f64>> {
    let (m, n, a) = (grid.m, grid.n, grid.alpha());
    let p = grid.p() as f64;
    let mut rows = vec![designated_values(y, m, n)];
    for k in 1..=n {
        let mut plus = vec![0.0; 2 * m + 1];
        let mut minus = vec![0.0; 2 * m + 1];
        let kf = k as f64;
        for (j, block) in table.blocks.iter().enumerate() {
            let f = block.diagonal(k);
            let (start, end) = if k % 2 == 0 {
                ((1.0 - kf / (2.0 * a)) * f, (2.0 * p - kf) * f / (2.0 * a))
            } else {
                (
                    -(kf - 1.0) * f / (2.0 * (1.0 - a)),
                    (n as f64 - kf + 2.0 * (1.0 - a)) * f / (2.0 * (1.0 - a)),
                )
            };
            let (target, sign) = if f >= 0.0 {
                (&mut plus, 1.0)
            } else {
                (&mut minus, -1.0)
            };
            target[2 * j] = sign * start;
            target[2 * j + 1] = sign * end;
        }
        rows.push(plus);
        rows.push(minus);
    }
    rows
}

/// Two hidden layers of widths `2m` and `2n+1` interpolating all
/// `m(n+1) + 1` grid points. Targets must be nonnegative.
///
/// Layer one holds `relu(x - z_i)` for the first `2m` designated points,
/// layer two the rows `g_0, g_k^±` as single-layer interpolants of their
/// designated values, and the output is
/// `relu(g_0) + Σ_k (relu(g_k^+) - relu(g_k^-))`.
pub fn build_two_layer_interp(grid: &TwoLayerGrid, y: &[f64]) -> Result<Network> {
    let points = grid.points();
    if y.len() != points.len() {
        return Err(Error::Dimension {
            expected: points.len(),
            found: y.len(),
        });
    }
    check_finite(y)?;
    if y.iter().any(|v| *v < 0.0) {
        return Err(param("two-layer interpolation needs nonnegative targets"));
    }
    let (m, n) = grid.mn();
    let z: Vec<f64> = (0..=2 * m).map(|i| points[designated_index(i, n)]).collect();
    let (rows, weights): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match grid {
        TwoLayerGrid::Inequi(g) => {
            let table = fkl_table(g, y)?;
            let rows = inequi_rows(g, y, &table);
            let w = rows.iter().map(|v| inequi_weights(g, v)).collect();
            (rows, w)
        }
        TwoLayerGrid::Equi { .. } => {
            let rows = simulate_rows(&points, m, n, y);
            let w = rows.iter().map(|v| breakpoint_weights(&z, v)).collect();
            (rows, w)
        }
    };
    let second = layer(
        Matrix::from_rows(
            2 * m,
            weights
                .iter()
                .map(|w| w.iter().copied().enumerate().collect::<Vec<_>>()),
        ),
        rows.iter().map(|v| v[0]).collect(),
        Activation::Relu,
    );
    let out: Vec<f64> = (0..2 * n + 1)
        .map(|i| if i == 0 || i % 2 == 1 { 1.0 } else { -1.0 })
        .collect();
    Ok(Network::from_parts(
        1,
        vec![
            breakpoint_layer(&z[..2 * m]),
            second,
            layer(
                Matrix::from_dense(1, out.len(), &out),
                vec![0.0],
                Activation::Identity,
            ),
        ],
    ))
}
