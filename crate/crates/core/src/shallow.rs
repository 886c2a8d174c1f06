//! Single-hidden-layer networks with smooth activations built from
//! Chebyshev expansions and central differences, and the growth of their
//! coefficients.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

use crate::error::{param, Error, Result};
use crate::fit::{fit_linear, LinearFit};
use crate::math::{acos, binomial, cos, exp, factorial, ln, log10, powi, sin};

/// Largest derivative order accepted by [`activation_derivative`].
pub const MAX_DERIVATIVE_ORDER: u32 = 60;
/// Largest order accepted by [`derivative_bound_audit`].
pub const MAX_AUDIT_ORDER: u32 = 20;
/// `|φ^{(p)}(b)|` must exceed this for every used `p`.
pub const DERIVATIVE_FLOOR: f64 = 1e-300;
/// Step used when `b` has to be moved off a near-root.
pub const B_PERTURBATION: f64 = 0.007;
/// Absolute tolerance of [`fourier_coeff`].
pub const FOURIER_TOL: f64 = 1e-10;

/// Complex number as a real and imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    /// Real part.
    pub re: f64,
    /// Imaginary part.
    pub im: f64,
}

impl Complex {
    /// Modulus.
    pub fn abs(self) -> f64 {
        libm::hypot(self.re, self.im)
    }
}

/// Coefficients `τ_{k,p}` of the polynomials `T_k` with
/// `T_k(2cos t) = cos(kt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebTable {
    tau: Vec<Vec<f64>>,
}

impl ChebTable {
    /// Largest degree in the table.
    pub fn max_k(&self) -> usize {
        self.tau.len() - 1
    }

    /// `τ_{k,p}`; zero for `p > k`.
    pub fn get(&self, k: usize, p: usize) -> f64 {
        self.tau[k].get(p).copied().unwrap_or(0.0)
    }

    /// `T_k(x)` by Horner's rule.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        self.tau[k].iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Table of `τ_{k,p}` for `k <= max_k` from `T_0 = 1`, `T_1 = x/2`,
/// `T_2 = x²/2 - 1` and `T_{k+1} = x·T_k - T_{k-1}` for `k >= 2`.
pub fn chebyshev_coeffs(max_k: usize) -> ChebTable {
    let mut tau: Vec<Vec<f64>> = vec![vec![1.0]];
    if max_k >= 1 {
        tau.push(vec![0.0, 0.5]);
    }
    if max_k >= 2 {
        tau.push(vec![-1.0, 0.0, 0.5]);
    }
    for k in 2..max_k {
        let mut next = vec![0.0; k + 2];
        for (p, c) in tau[k].iter().enumerate() {
            next[p + 1] += c;
        }
        for (p, c) in tau[k - 1].iter().enumerate() {
            next[p] -= c;
        }
        tau.push(next);
    }
    ChebTable { tau }
}

/// Target on `[-2, 2]`: `π²/4 - arccos(t/2)²` for `t >= 0`, else 0.
pub fn special_f(t: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        let a = acos((t / 2.0).min(1.0));
        PI * PI / 4.0 - a * a
    }
}

/// `2π`-periodic function equal to `π²/4 - t²` for `|t| <= π/2` and 0 on
/// the rest of `[-π, π]`.
pub fn special_fstar(t: f64) -> f64 {
    let t = t - 2.0 * PI * libm::round(t / (2.0 * PI));
    if t.abs() <= PI / 2.0 {
        PI * PI / 4.0 - t * t
    } else {
        0.0
    }
}

const KRONROD_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_W: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS_W: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = KRONROD_W[7] * fc;
    let mut g = GAUSS_W[3] * fc;
    for i in 0..7 {
        let s = f(c - h * KRONROD_X[i]) + f(c + h * KRONROD_X[i]);
        k += KRONROD_W[i] * s;
        if i % 2 == 1 {
            g += GAUSS_W[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integral of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut pending = vec![(a, b, tol, 0u32)];
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    while let Some((lo, hi, t, depth)) = pending.pop() {
        let (v, err) = gk15(f, lo, hi);
        if err <= t || depth >= 40 {
            if err > t {
                worst = worst.max(err);
            }
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            pending.push((lo, mid, t / 2.0, depth + 1));
            pending.push((mid, hi, t / 2.0, depth + 1));
        }
    }
    if worst > tol {
        return Err(Error::Quadrature(worst));
    }
    Ok(total)
}

/// `f̂*(k) = (1/2π)∫_{-π}^{π} f*(t)e^{-ikt} dt`, integrated panel-wise on
/// eight panels of width `π/4` to absolute tolerance [`FOURIER_TOL`].
pub fn fourier_coeff(fstar: &dyn Fn(f64) -> f64, k: u32) -> Result<Complex> {
    let kf = k as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..8 {
        let a = -PI + i as f64 * PI / 4.0;
        let b = a + PI / 4.0;
        re += integrate(&|t| fstar(t) * cos(kf * t), a, b, FOURIER_TOL / 8.0)?;
        im -= integrate(&|t| fstar(t) * sin(kf * t), a, b, FOURIER_TOL / 8.0)?;
    }
    Ok(Complex {
        re: re / (2.0 * PI),
        im: im / (2.0 * PI),
    })
}

/// Weight of `f̂*(k)` in `V_k`: 1 at `k = 0`, 2 for `1 <= k <= m`,
/// `2(2m-k+1)/(m+1)` for `m < k <= 2m`.
pub fn vk_weight(k: usize, m: usize) -> f64 {
    if k == 0 {
        1.0
    } else if k <= m {
        2.0
    } else {
        2.0 * (2 * m - k + 1) as f64 / (m + 1) as f64
    }
}

/// Fourier coefficients `f̂*(k)` and the weighted values `V_k(f)`,
/// `0 <= k <= 2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct VkTable {
    /// Degree parameter `m`.
    pub m: usize,
    /// `f̂*(k)`.
    pub fhat: Vec<Complex>,
    /// `V_k(f)`; `f*` is even so only the real part of `f̂*` enters.
    pub v: Vec<f64>,
}

impl VkTable {
    /// Applies the weights to precomputed coefficients; `fhat` needs at
    /// least `2m + 1` entries.
    pub fn from_fourier(fhat: &[Complex], m: usize) -> Result<VkTable> {
        if m == 0 {
            return Err(param("m must be at least 1"));
        }
        if fhat.len() < 2 * m + 1 {
            return Err(param("need 2m + 1 Fourier coefficients"));
        }
        let fhat = fhat[..=2 * m].to_vec();
        let v: Vec<f64> = fhat
            .iter()
            .enumerate()
            .map(|(k, c)| vk_weight(k, m) * c.re)
            .collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(param("non-finite V_k"));
        }
        Ok(VkTable { m, fhat, v })
    }

    /// `min_k |V_k|`.
    pub fn min_abs(&self) -> f64 {
        self.v.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// `V_k(f)` for `0 <= k <= 2m`, where `fstar(t) = f(2cos t)`.
pub fn vk_coeffs(fstar: &dyn Fn(f64) -> f64, m: usize) -> Result<VkTable> {
    let fhat: Vec<Complex> = (0..=2 * m as u32)
        .map(|k| fourier_coeff(fstar, k))
        .collect::<Result<_>>()?;
    VkTable::from_fourier(&fhat, m)
}

/// Smooth activation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothKind {
    /// `exp(-x²)`.
    Gaussian,
    /// `1/(1 + exp(-x))`.
    Logistic,
}

impl SmoothKind {
    /// `φ(x)`.
    pub fn eval(self, x: f64) -> f64 {
        match self {
            SmoothKind::Gaussian => exp(-x * x),
            SmoothKind::Logistic => 1.0 / (1.0 + exp(-x)),
        }
    }

    /// Default evaluation point `b`.
    pub fn default_b(self) -> f64 {
        match self {
            SmoothKind::Gaussian => 0.41,
            SmoothKind::Logistic => 0.5,
        }
    }

    /// Base of the exponential lower bound: the square of `3e/(2δ)` for the
    /// Gaussian and of `3e/δ` for the logistic function.
    pub fn c_tilde(self, delta: f64) -> f64 {
        let r = match self {
            SmoothKind::Gaussian => 3.0 * E / (2.0 * delta),
            SmoothKind::Logistic => 3.0 * E / delta,
        };
        r * r
    }
}

/// Activation with evaluation point `b` and window `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothActivation {
    /// Family.
    pub kind: SmoothKind,
    /// Point at which derivatives are taken.
    pub b: f64,
    /// Window `δ > 0`.
    pub delta: f64,
}

impl SmoothActivation {
    /// Default `b` and `δ = 1`.
    pub fn new(kind: SmoothKind) -> SmoothActivation {
        SmoothActivation {
            kind,
            b: kind.default_b(),
            delta: 1.0,
        }
    }

    /// Checks `δ`, then moves `b` in steps of [`B_PERTURBATION`] until
    /// `|φ^{(p)}(b)| > DERIVATIVE_FLOOR` for all `p <= max_p`.
    pub fn validated(mut self, max_p: u32) -> Result<SmoothActivation> {
        if !(self.delta > 0.0 && self.delta.is_finite() && self.b.is_finite()) {
            return Err(param("need finite b and δ > 0"));
        }
        for _ in 0..1000 {
            let ok = (0..=max_p)
                .map(|p| activation_derivative(self.kind, p, self.b))
                .collect::<Result<Vec<_>>>()?
                .iter()
                .all(|d| d.abs() > DERIVATIVE_FLOOR);
            if ok {
                return Ok(self);
            }
            self.b += B_PERTURBATION;
        }
        Err(param("no admissible evaluation point b found"))
    }
}

/// Physicists' Hermite polynomial `H_p(x)` from
/// `H_{p+1} = 2x·H_p - 2p·H_{p-1}`.
pub fn hermite(p: u32, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, 2.0 * x);
    if p == 0 {
        return a;
    }
    for q in 1..p {
        let next = 2.0 * x * b - 2.0 * q as f64 * a;
        a = b;
        b = next;
    }
    b
}

/// Coefficients of `H_p`, lowest degree first.
pub fn hermite_coeffs(p: u32) -> Vec<f64> {
    let mut a = vec![1.0];
    let mut b = vec![0.0, 2.0];
    if p == 0 {
        return a;
    }
    for q in 1..p {
        let mut next = vec![0.0; b.len() + 1];
        for (i, c) in b.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, c) in a.iter().enumerate() {
            next[i] -= 2.0 * q as f64 * c;
        }
        a = b;
        b = next;
    }
    b
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Polynomial `P_p` with `φ^{(p)} = (-1)^p P_p(φ)` for the logistic
/// function: `P_0(y) = y`, `P_1(y) = y² - y`, `P_{p+1} = P_p'·P_1`.
/// Coefficients are integers, exact in binary64 for `p <= 16`.
pub fn logistic_poly(p: u32) -> Vec<f64> {
    let p1 = vec![0.0, -1.0, 1.0];
    if p == 0 {
        return vec![0.0, 1.0];
    }
    let mut cur = p1.clone();
    for _ in 1..p {
        cur = poly_mul(&poly_deriv(&cur), &p1);
    }
    cur
}

/// `P_p(φ(x))`, the derivative in the sign convention of `P_1 = y² - y`.
pub fn logistic_paper_derivative(p: u32, x: f64) -> f64 {
    poly_eval(&logistic_poly(p), SmoothKind::Logistic.eval(x))
}

/// `φ^{(p)}(x)` for `p <= MAX_DERIVATIVE_ORDER`.
pub fn activation_derivative(kind: SmoothKind, p: u32, x: f64) -> Result<f64> {
    if p > MAX_DERIVATIVE_ORDER {
        return Err(param("derivative order beyond 60"));
    }
    let sign = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(match kind {
        SmoothKind::Gaussian => sign * hermite(p, x) * exp(-x * x),
        SmoothKind::Logistic => sign * logistic_paper_derivative(p, x),
    })
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `max |g|` over `[a, b]` from the grid values, the endpoints and the
/// bisected sign changes of `dg` between grid points.
fn sup_by_critical_points(
    g: &dyn Fn(f64) -> f64,
    dg: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    cells: usize,
) -> f64 {
    let mut best = g(a).abs().max(g(b).abs());
    let step = (b - a) / cells as f64;
    let mut prev = dg(a);
    for i in 1..=cells {
        let x = a + i as f64 * step;
        best = best.max(g(x).abs());
        let cur = dg(x);
        if (cur < 0.0) != (prev < 0.0) {
            let r = bisect(dg, x - step, x);
            best = best.max(g(r).abs());
        }
        prev = cur;
    }
    best
}

/// `‖P‖_{L∞[0,1]}` for a polynomial given by its coefficients.
pub fn poly_sup_unit(c: &[f64]) -> f64 {
    let d = poly_deriv(c);
    sup_by_critical_points(&|x| poly_eval(c, x), &|x| poly_eval(&d, x), 0.0, 1.0, 4000)
}

/// One audited derivative order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    /// Order `p`.
    pub p: u32,
    /// Measured `‖φ^{(p)}‖∞`.
    pub sup: f64,
    /// Bound it is compared with.
    pub bound: f64,
    /// `sup <= bound`.
    pub holds: bool,
}

/// Result of [`derivative_bound_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeAudit {
    /// Family.
    pub kind: SmoothKind,
    /// `p! ` for the Gaussian, `p!/2^{p+1}` (and 1 at `p = 0`) for the
    /// logistic function.
    pub rows: Vec<BoundRow>,
    /// Gaussian: bound on `|φ^{(p)}|` beyond the search interval.
    pub tail: f64,
    /// Logistic: `α_{n,k} = ‖P_n^{(k)}‖_{L∞[0,1]}`, `k <= n + 1`.
    pub alpha: Vec<Vec<f64>>,
    /// Logistic: `α_{n,k} <= α_{n-1,k+1}/4 + k·α_{n-1,k} + k(k-1)·α_{n-1,k-1}`.
    pub recursion_holds: bool,
    /// Logistic: `α_{n,k} <= n!(n+1)!/(n-k+1)!·2^{k-n-1}`.
    pub claim_holds: bool,
}

impl DerivativeAudit {
    /// Every row and every table check holds.
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds) && self.recursion_holds && self.claim_holds
    }
}

const REL_SLACK: f64 = 1e-9;

fn le(a: f64, b: f64) -> bool {
    a <= b * (1.0 + REL_SLACK) + 1e-300
}

/// Measures `‖φ^{(p)}‖∞` for `p <= p_max` and checks the factorial-type
/// bounds; for the logistic function also the `α_{n,k}` table.
pub fn derivative_bound_audit(kind: SmoothKind, p_max: u32) -> Result<DerivativeAudit> {
    if p_max > MAX_AUDIT_ORDER {
        return Err(param("audit order beyond 20"));
    }
    match kind {
        SmoothKind::Gaussian => {
            let t = 10.0;
            let mut rows = Vec::new();
            let mut tail: f64 = 0.0;
            for p in 0..=p_max {
                let g = |x: f64| hermite(p, x) * exp(-x * x);
                let dg = |x: f64| hermite(p + 1, x);
                let sup = sup_by_critical_points(&g, &dg, -t, t, 20_000);
                // Beyond |x| = t each x^i e^{-x²} (i <= 21) is decreasing.
                let abs_sum = hermite_coeffs(p)
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.abs() * powi(t, i as i32))
                    .sum::<f64>()
                    * exp(-t * t);
                tail = tail.max(abs_sum);
                let sup = sup.max(abs_sum);
                let bound = factorial(p as u64);
                rows.push(BoundRow {
                    p,
                    sup,
                    bound,
                    holds: le(sup, bound),
                });
            }
            Ok(DerivativeAudit {
                kind,
                rows,
                tail,
                alpha: Vec::new(),
                recursion_holds: true,
                claim_holds: true,
            })
        }
        SmoothKind::Logistic => {
            let mut alpha: Vec<Vec<f64>> = Vec::new();
            for n in 0..=p_max {
                let mut c = logistic_poly(n);
                let mut row = Vec::new();
                for _ in 0..=n + 1 {
                    row.push(poly_sup_unit(&c));
                    c = poly_deriv(&c);
                }
                alpha.push(row);
            }
            let a = |n: usize, k: i64| -> f64 {
                if k < 0 {
                    0.0
                } else {
                    alpha[n].get(k as usize).copied().unwrap_or(0.0)
                }
            };
            let mut recursion_holds = true;
            let mut claim_holds = true;
            for n in 1..=p_max as usize {
                for k in 0..=n + 1 {
                    let ki = k as i64;
                    let kf = k as f64;
                    let rhs = 0.25 * a(n - 1, ki + 1)
                        + kf * a(n - 1, ki)
                        + kf * (kf - 1.0) * a(n - 1, ki - 1);
                    recursion_holds &= le(alpha[n][k], rhs);
                    let claim = factorial(n as u64) * factorial(n as u64 + 1)
                        / factorial((n + 1 - k) as u64)
                        * powi(2.0, k as i32 - n as i32 - 1);
                    claim_holds &= le(alpha[n][k], claim);
                }
            }
            let rows = (0..=p_max)
                .map(|p| {
                    let sup = alpha[p as usize][0];
                    let bound = if p == 0 {
                        1.0
                    } else {
                        factorial(p as u64) / powi(2.0, p as i32 + 1)
                    };
                    BoundRow {
                        p,
                        sup,
                        bound,
                        holds: le(sup, bound),
                    }
                })
                .collect();
            Ok(DerivativeAudit {
                kind,
                rows,
                tail: 0.0,
                alpha,
                recursion_holds,
                claim_holds,
            })
        }
    }
}

/// One term `V_k τ_{k,p} φ^{(p)}(b)^{-1} h^{-p} (-1)^r C(p,r)` of the
/// network, stored as sign and `log10` magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhaskarTerm {
    /// Chebyshev degree `k`.
    pub k: usize,
    /// Difference order `p`.
    pub p: usize,
    /// Difference index `r`.
    pub r: usize,
    /// `log10 |coef|`; `-inf` for a zero coefficient.
    pub log10_abs: f64,
    /// `-1`, `0` or `1`.
    pub sign: i8,
}

impl MhaskarTerm {
    /// Coefficient value.
    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * libm::pow(10.0, self.log10_abs)
        }
    }

    /// Index `2r - p` of the unit the term feeds.
    pub fn unit(&self) -> i64 {
        2 * self.r as i64 - self.p as i64
    }
}

/// `x ↦ Σ_j a_j φ(w_j x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShallowNetwork {
    /// Activation and shared bias `b`.
    pub act: SmoothActivation,
    /// Inner weights `w_j`.
    pub inner: Vec<f64>,
    /// Outer weights `a_j`.
    pub outer: Vec<f64>,
}

impl ShallowNetwork {
    /// Number of hidden units.
    pub fn width(&self) -> usize {
        self.inner.len()
    }

    /// Largest absolute parameter.
    pub fn param_sup(&self) -> f64 {
        self.inner
            .iter()
            .chain(&self.outer)
            .map(|v| v.abs())
            .fold(self.act.b.abs(), f64::max)
    }

    /// Network value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.inner
            .iter()
            .zip(&self.outer)
            .map(|(w, a)| a * self.act.kind.eval(w * x + self.act.b))
            .sum()
    }
}

/// Output of [`build_mhaskar`].
#[derive(Debug, Clone, PartialEq)]
pub struct MhaskarBuild {
    /// Degree parameter.
    pub m: usize,
    /// Step `h = δ/(3m)`.
    pub h: f64,
    /// Activation after validation of `b`.
    pub act: SmoothActivation,
    /// All terms over `0 <= r <= p <= k <= 2m`.
    pub ledger: Vec<MhaskarTerm>,
    /// Network with one unit per inner weight `h·j`, `|j| <= 2m`.
    pub network: ShallowNetwork,
}

impl MhaskarBuild {
    /// Largest `log10 |coef|` in the ledger.
    pub fn log10_max_coef(&self) -> f64 {
        self.ledger
            .iter()
            .map(|t| t.log10_abs)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Term-by-term evaluation without merging units.
    pub fn eval_unmerged(&self, x: f64) -> f64 {
        self.ledger
            .iter()
            .filter(|t| t.sign != 0)
            .map(|t| t.value() * self.act.kind.eval(self.h * t.unit() as f64 * x + self.act.b))
            .sum()
    }

    /// `Σ |coef|·|φ(...)|` at `x`, the scale for relative comparisons.
    pub fn magnitude(&self, x: f64) -> f64 {
        self.ledger
            .iter()
            .map(|t| {
                (t.value() * self.act.kind.eval(self.h * t.unit() as f64 * x + self.act.b)).abs()
            })
            .sum()
    }
}

fn signed_log10(v: f64) -> (f64, i8) {
    if v == 0.0 {
        (f64::NEG_INFINITY, 0)
    } else {
        (log10(v.abs()), if v > 0.0 { 1 } else { -1 })
    }
}

fn derivatives_at_b(act: &SmoothActivation, max_p: usize) -> Result<Vec<f64>> {
    (0..=max_p as u32)
        .map(|p| activation_derivative(act.kind, p, act.b))
        .collect()
}

/// Network `f_m(x) = Σ_{0<=r<=p<=k<=2m} V_k τ_{k,p} φ^{(p)}(b)^{-1} h^{-p}
/// (-1)^r C(p,r) φ(h(2r-p)x + b)` with `h = δ/(3m)`, together with its
/// term ledger.
pub fn build_mhaskar(vk: &VkTable, act: SmoothActivation) -> Result<MhaskarBuild> {
    let m = vk.m;
    if m == 0 {
        return Err(param("m must be at least 1"));
    }
    if 2 * m > MAX_DERIVATIVE_ORDER as usize {
        return Err(param("2m beyond the derivative guard"));
    }
    let act = act.validated(2 * m as u32)?;
    let h = act.delta / (3 * m) as f64;
    let cheb = chebyshev_coeffs(2 * m);
    let d = derivatives_at_b(&act, 2 * m)?;
    let mut ledger = Vec::new();
    for k in 0..=2 * m {
        let (lv, sv) = signed_log10(vk.v[k]);
        for p in 0..=k {
            let (lt, st) = signed_log10(cheb.get(k, p));
            let (ld, sd) = signed_log10(d[p]);
            for r in 0..=p {
                let sign = sv * st * sd * if r % 2 == 0 { 1 } else { -1 };
                let log10_abs = if sign == 0 {
                    f64::NEG_INFINITY
                } else {
                    lv + lt - ld - p as f64 * log10(h) + log10(binomial(p as u64, r as u64))
                };
                ledger.push(MhaskarTerm {
                    k,
                    p,
                    r,
                    log10_abs,
                    sign,
                });
            }
        }
    }
    let units = 4 * m + 1;
    let mut outer = vec![0.0; units];
    for t in &ledger {
        outer[(t.unit() + 2 * m as i64) as usize] += t.value();
    }
    let inner = (0..units)
        .map(|j| h * (j as i64 - 2 * m as i64) as f64)
        .collect();
    Ok(MhaskarBuild {
        m,
        h,
        act,
        ledger,
        network: ShallowNetwork { act, inner, outer },
    })
}

/// `log10 I_m` with `I_m = max |V_k τ_{k,p} φ^{(p)}(b)^{-1} h^{-p} C(p,r)|`
/// scanned directly over the index set; `-inf` when every term vanishes.
pub fn log10_i_m(vk: &VkTable, act: &SmoothActivation) -> Result<f64> {
    let m = vk.m;
    let h = act.delta / (3 * m) as f64;
    let cheb = chebyshev_coeffs(2 * m);
    let d = derivatives_at_b(act, 2 * m)?;
    let mut best = f64::NEG_INFINITY;
    for k in 0..=2 * m {
        for p in 0..=k {
            // C(p, r) peaks at r = ⌊p/2⌋.
            for r in [p / 2] {
                let v = vk.v[k].abs() * cheb.get(k, p).abs() / d[p].abs();
                if v == 0.0 {
                    continue;
                }
                let l = log10(v) - p as f64 * log10(h) + log10(binomial(p as u64, r as u64));
                best = best.max(l);
            }
        }
    }
    Ok(best)
}

/// `log10` of `½(3m/δ)^{2m} (max_{p<=2m} |φ^{(p)}(b)|)^{-1} min_k |V_k|`.
pub fn log10_lower_bound(vk: &VkTable, act: &SmoothActivation) -> Result<f64> {
    let m = vk.m;
    let d = derivatives_at_b(act, 2 * m)?;
    let dmax = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let vmin = vk.min_abs();
    if vmin == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(log10(0.5) + (2 * m) as f64 * log10(3.0 * m as f64 / act.delta) - log10(dmax) + log10(vmin))
}

/// One row of [`measure_growth_im`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImRow {
    /// Degree parameter.
    pub m: usize,
    /// `log10 I_m`.
    pub log10_i_m: f64,
    /// `log10` of the lower bound from [`log10_lower_bound`].
    pub log10_lower: f64,
    /// `log10((1/8) c̃^m m^{-3})`.
    pub log10_asymptotic: f64,
}

/// Coefficient growth over a range of `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImGrowth {
    /// Activation after validation at the largest `m`.
    pub act: SmoothActivation,
    /// `c̃` used in the asymptotic bound.
    pub c_tilde: f64,
    /// Rows in increasing `m`.
    pub rows: Vec<ImRow>,
    /// Fit of `ln I_m` against `m` over rows with `I_m > 0`.
    pub fit: Option<LinearFit>,
    /// Smallest `I_{m+1}/I_m` over consecutive rows with `I_m > 0`.
    pub min_ratio: Option<f64>,
}

impl ImGrowth {
    /// Positive slope, `R² >= min_r2` and ratios at least `min_ratio`.
    pub fn geometric(&self, min_r2: f64, min_ratio: f64) -> bool {
        match (self.fit, self.min_ratio) {
            (Some(f), Some(r)) => f.slope > 0.0 && f.r2 >= min_r2 && r >= min_ratio,
            _ => false,
        }
    }

    /// `I_m >= (1/8) c̃^m m^{-3}` on every row.
    pub fn above_asymptotic(&self) -> bool {
        self.rows.iter().all(|r| r.log10_i_m >= r.log10_asymptotic)
    }
}

/// `I_m` and its lower bounds for each `m` in `ms` (ascending).
pub fn measure_growth_im(
    fstar: &dyn Fn(f64) -> f64,
    act: SmoothActivation,
    ms: &[usize],
) -> Result<ImGrowth> {
    let &max_m = ms.iter().max().ok_or_else(|| param("empty m range"))?;
    if ms.contains(&0) || ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(param("m range must be positive and increasing"));
    }
    if 2 * max_m > MAX_DERIVATIVE_ORDER as usize {
        return Err(param("m range beyond the derivative guard"));
    }
    let act = act.validated(2 * max_m as u32)?;
    let fhat: Vec<Complex> = (0..=2 * max_m as u32)
        .map(|k| fourier_coeff(fstar, k))
        .collect::<Result<_>>()?;
    let c_tilde = act.kind.c_tilde(act.delta);
    let rows: Vec<ImRow> = ms
        .iter()
        .map(|&m| {
            let vk = VkTable::from_fourier(&fhat, m)?;
            Ok(ImRow {
                m,
                log10_i_m: log10_i_m(&vk, &act)?,
                log10_lower: log10_lower_bound(&vk, &act)?,
                log10_asymptotic: log10(0.125) + m as f64 * log10(c_tilde)
                    - 3.0 * log10(m as f64),
            })
        })
        .collect::<Result<_>>()?;
    let live: Vec<&ImRow> = rows.iter().filter(|r| r.log10_i_m.is_finite()).collect();
    let fit = if live.len() >= 2 {
        let x: Vec<f64> = live.iter().map(|r| r.m as f64).collect();
        let y: Vec<f64> = live.iter().map(|r| r.log10_i_m * ln(10.0)).collect();
        Some(fit_linear(&x, &y)?)
    } else {
        None
    };
    let min_ratio = live
        .windows(2)
        .map(|w| libm::pow(10.0, w[1].log10_i_m - w[0].log10_i_m))
        .reduce(f64::min);
    Ok(ImGrowth {
        act,
        c_tilde,
        rows,
        fit,
        min_ratio,
    })
}

/// `f̂*(k)` of [`special_fstar`] in closed form:
/// `(2/(πk²))(sin(kπ/2)/k - (π/2)cos(kπ/2))`, and `π²/12` at `k = 0`.
pub fn special_fhat_closed(k: u32) -> f64 {
    if k == 0 {
        return PI * PI / 12.0;
    }
    let kf = k as f64;
    2.0 / (PI * kf * kf) * (sin(kf * PI / 2.0) / kf - PI / 2.0 * cos(kf * PI / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `τ_{n,n-2j} = (n/2)(-1)^j (n-j-1)!/(j!(n-2j)!)` for `n >= 1`.
    fn tau_explicit(n: usize, p: usize) -> f64 {
        if p > n || (n - p) % 2 == 1 {
            return 0.0;
        }
        if n == 0 {
            return 1.0;
        }
        let j = (n - p) / 2;
        let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        s * n as f64 / 2.0 * factorial((n - j - 1) as u64)
            / (factorial(j as u64) * factorial((n - 2 * j) as u64))
    }

    #[test]
    fn chebyshev_table() {
        let t = chebyshev_coeffs(32);
        assert_eq!(t.get(0, 0), 1.0);
        assert_eq!(t.get(1, 1), 0.5);
        assert_eq!(t.get(2, 2), 0.5);
        assert_eq!(t.get(2, 0), -1.0);
        for k in 0..=32 {
            for p in 0..=k {
                let e = tau_explicit(k, p);
                assert!((t.get(k, p) - e).abs() <= 1e-12 * e.abs().max(1.0), "{k} {p}");
            }
        }
        for k in 1..=16 {
            assert_eq!(t.get(2 * k, 2 * k), 0.5);
            for i in 0..1000 {
                let s = -PI + 2.0 * PI * i as f64 / 999.0;
                assert!((t.eval(k, 2.0 * cos(s)) - cos(k as f64 * s)).abs() <= 1e-9);
            }
            for i in 0..=200 {
                let x = -2.0 + 4.0 * i as f64 / 200.0;
                let want = cos(k as f64 * acos(x / 2.0));
                assert!((t.eval(k, x) - want).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn special_functions() {
        assert_eq!(special_f(-0.5), 0.0);
        assert_eq!(special_fstar(0.0), PI * PI / 4.0);
        for i in 0..1000 {
            let s = -PI + 2.0 * PI * i as f64 / 999.0;
            assert!((special_f(2.0 * cos(s)) - special_fstar(s)).abs() <= 1e-12);
        }
        assert!((special_fstar(2.0 * PI + 0.3) - special_fstar(0.3)).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        assert!((integrate(&|x| x * x, 0.0, 3.0, 1e-12).unwrap() - 9.0).abs() < 1e-12);
        for k in 0..=32 {
            let c = fourier_coeff(&special_fstar, k).unwrap();
            assert!((c.re - special_fhat_closed(k)).abs() <= 1e-10, "k={k}");
            assert!(c.im.abs() <= 1e-10);
        }
        let c0 = fourier_coeff(&special_fstar, 0).unwrap();
        assert!((c0.re - PI * PI / 12.0).abs() <= 1e-8);
        assert_eq!(fourier_coeff(&|_| 0.0, 5).unwrap().abs(), 0.0);
    }

    #[test]
    fn vk_branches() {
        let vk = vk_coeffs(&special_fstar, 3).unwrap();
        assert!((vk.v[0] - PI * PI / 12.0).abs() <= 1e-8);
        assert!((vk.v[2] - 2.0 * vk.fhat[2].re).abs() < 1e-15);
        assert!((vk.v[6] - 2.0 / 4.0 * vk.fhat[6].re).abs() < 1e-15);
        assert!(VkTable::from_fourier(&vk.fhat, 4).is_err());
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(activation_derivative(SmoothKind::Gaussian, 2, 0.0).unwrap(), -2.0);
        assert!((logistic_paper_derivative(1, 0.0) + 0.25).abs() < 1e-15);
        assert!((activation_derivative(SmoothKind::Logistic, 1, 0.0).unwrap() - 0.25).abs() < 1e-15);
        for kind in [SmoothKind::Gaussian, SmoothKind::Logistic] {
            assert_eq!(activation_derivative(kind, 0, 0.7).unwrap(), kind.eval(0.7));
        }
        assert!(activation_derivative(SmoothKind::Gaussian, 61, 0.0).is_err());
        assert_eq!(hermite_coeffs(2), vec![-2.0, 0.0, 4.0]);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-5;
        for kind in [SmoothKind::Gaussian, SmoothKind::Logistic] {
            for _ in 0..20 {
                let x: f64 = rng.gen_range(-2.0..2.0);
                for p in 1..=8 {
                    let g = |t| activation_derivative(kind, p - 1, t).unwrap();
                    let fd = (g(x + h) - g(x - h)) / (2.0 * h);
                    let exact = activation_derivative(kind, p, x).unwrap();
                    let scale = exact.abs().max(1e-3);
                    assert!((fd - exact).abs() / scale <= 1e-5, "{kind:?} p={p} x={x}");
                }
            }
        }
    }

    #[test]
    fn bound_audits() {
        let g = derivative_bound_audit(SmoothKind::Gaussian, 12).unwrap();
        assert!(g.all_hold());
        assert_eq!(g.rows[0].sup, 1.0);
        assert!((g.rows[1].sup - (2.0f64).sqrt() * exp(-0.5)).abs() < 1e-9);
        let l = derivative_bound_audit(SmoothKind::Logistic, 12).unwrap();
        assert!(l.all_hold());
        assert!((l.alpha[1][0] - 0.25).abs() < 1e-12);
        assert!((l.alpha[1][1] - 1.0).abs() < 1e-12 && (l.alpha[1][2] - 2.0).abs() < 1e-12);
        assert!(derivative_bound_audit(SmoothKind::Logistic, 21).is_err());
    }

    #[test]
    fn zero_target_gives_zero_network() {
        let vk = vk_coeffs(&|_| 0.0, 1).unwrap();
        let b = build_mhaskar(&vk, SmoothActivation::new(SmoothKind::Gaussian)).unwrap();
        assert!(b.network.outer.iter().all(|a| *a == 0.0));
        assert_eq!(log10_i_m(&vk, &b.act).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn ledger_and_merged_network_agree() {
        for kind in [SmoothKind::Gaussian, SmoothKind::Logistic] {
            for m in [1, 3, 5] {
                let vk = vk_coeffs(&special_fstar, m).unwrap();
                let b = build_mhaskar(&vk, SmoothActivation::new(kind)).unwrap();
                assert!(b.network.width() <= 4 * m + 1);
                let n_terms: usize = (0..=2 * m).map(|k| (k + 1) * (k + 2) / 2).sum();
                assert_eq!(b.ledger.len(), n_terms);
                for t in &b.ledger {
                    assert!(b.h * t.unit().unsigned_abs() as f64 <= 2.0 * b.act.delta / 3.0 + 1e-15);
                }
                let im = log10_i_m(&vk, &b.act).unwrap();
                assert!((b.log10_max_coef() - im).abs() < 1e-9);
                for i in 0..1000 {
                    let x = -1.0 + 2.0 * i as f64 / 999.0;
                    let d = (b.network.eval(x) - b.eval_unmerged(x)).abs();
                    assert!(d <= 1e-9 * b.magnitude(x).max(1.0), "{kind:?} m={m} x={x}");
                }
            }
        }
    }

    #[test]
    fn network_tends_to_reflected_expansion() {
        // Central differences scale x^p by (-2)^p, so as h -> 0 the network
        // tends to Σ V_k T_k(-2x).
        let m = 4;
        let vk = vk_coeffs(&special_fstar, m).unwrap();
        let cheb = chebyshev_coeffs(2 * m);
        let poly = |x: f64| (0..=2 * m).map(|k| vk.v[k] * cheb.eval(k, -2.0 * x)).sum::<f64>();
        let mut prev = f64::INFINITY;
        for delta in [1.0, 0.3, 0.1] {
            let act = SmoothActivation {
                delta,
                ..SmoothActivation::new(SmoothKind::Gaussian)
            };
            let b = build_mhaskar(&vk, act).unwrap();
            let err = (0..=200)
                .map(|i| {
                    let x = -1.0 + i as f64 / 100.0;
                    (b.network.eval(x) - poly(x)).abs()
                })
                .fold(0.0, f64::max);
            assert!(err < prev, "delta={delta}: {err}");
            prev = err;
        }
        assert!(prev < 0.05, "{prev}");
        let e_poly = (0..=200)
            .map(|i| {
                let x = -1.0 + i as f64 / 100.0;
                (poly(x) - special_f(-2.0 * x)).abs()
            })
            .fold(0.0, f64::max);
        assert!(e_poly < 0.3, "{e_poly}");
    }

    #[test]
    fn growth_scan() {
        let g = measure_growth_im(
            &special_fstar,
            SmoothActivation::new(SmoothKind::Gaussian),
            &[2, 3, 4, 5, 6, 7, 8],
        )
        .unwrap();
        assert!(g.geometric(0.9, 1.5));
        for r in &g.rows {
            assert!(r.log10_i_m >= r.log10_lower - 1e-9);
        }
        let z = measure_growth_im(&|_| 0.0, SmoothActivation::new(SmoothKind::Logistic), &[2, 3])
            .unwrap();
        assert!(z.fit.is_none() && z.min_ratio.is_none());
        assert!(measure_growth_im(&special_fstar, SmoothActivation::new(SmoothKind::Gaussian), &[])
            .is_err());
    }
}
