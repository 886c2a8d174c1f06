//! Named constructions for the `build` and `verify` commands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reluforge_core::algebra::widen_to_deep;
use reluforge_core::assembly::{
    build_full_approximator, build_local_approximator, extend_from_trifling, select_c,
    AssemblyOptions, CorpusFunction, FunctionOracle, TriflingRegion,
};
use reluforge_core::interp::{
    build_equi_interp, build_inequi_interp, build_two_layer_interp, fkl_table, EquiGrid,
    InequiGrid, TwoLayerGrid,
};
use reluforge_core::primitives::{
    build_bit_lookup, build_bit_sum, build_point_fitter, build_product_unit, build_square,
    build_step_function, BitMatrix, StepSpec,
};
use reluforge_core::shallow::{
    build_mhaskar, log10_i_m, special_fstar, vk_coeffs, MhaskarBuild, SmoothActivation,
    SmoothKind,
};
use reluforge_core::{Activation, AffineLayer, Matrix, Network};

use crate::error::{Error, Result};

/// Names accepted by [`build`] and [`verify`].
pub const CONSTRUCTIONS: [&str; 15] = [
    "square",
    "step",
    "bit-sum",
    "bit-lookup",
    "point-fitter",
    "product",
    "interp-equi",
    "interp-inequi",
    "interp-two-layer",
    "widen",
    "local",
    "full",
    "trifling",
    "mhaskar",
    "staircase",
];

/// Fully resolved construction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Width budget `N`.
    pub n: u64,
    /// Depth budget `L`.
    pub l: u64,
    /// Input dimension.
    pub d: usize,
    /// Trifling parameter `c`; chosen by the construction when absent.
    pub c: Option<u64>,
    /// Explicit trifling width; must match some natural `c`.
    pub delta: Option<f64>,
    /// Point-fitter accuracy exponent.
    pub s: u32,
    /// Smoothness order.
    pub q: u32,
    /// Mhaskar degree parameter.
    pub m: usize,
    /// Target function name.
    pub target: String,
    /// Smooth activation for `mhaskar`.
    pub activation: SmoothKind,
    /// Seed for random instances.
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: 2,
            l: 2,
            d: 1,
            c: None,
            delta: None,
            s: 1,
            q: 1,
            m: 3,
            target: "square".into(),
            activation: SmoothKind::Gaussian,
            seed: 0,
        }
    }
}

/// Result of [`build`].
#[derive(Debug, Clone)]
pub struct Built {
    /// The ReLU network, when the construction produces one.
    pub network: Option<Network>,
    /// The smooth-activation build for `mhaskar`.
    pub mhaskar: Option<MhaskarBuild>,
    /// `key=value` facts printed after the profile.
    pub summary: Vec<(String, String)>,
}

impl Built {
    fn relu(network: Network, summary: Vec<(String, String)>) -> Self {
        Built {
            network: Some(network),
            mhaskar: None,
            summary,
        }
    }
}

/// One verified property.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Property name.
    pub name: String,
    /// Outcome.
    pub passed: bool,
    /// Measured values.
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

fn usize_of(v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Usage(format!("{v} is too large")))
}

fn u32_of(v: u64) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Usage(format!("{v} is too large")))
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.into(), v.to_string())
}

fn rng(p: &Params) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(p.seed)
}

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.gen_range(0..=1)).collect()
}

fn step_spec(p: &Params) -> Result<StepSpec> {
    let d = u32_of(p.d as u64)?;
    Ok(match (p.delta, p.c) {
        (Some(delta), _) => StepSpec::with_delta(d, p.n, p.l, delta)?,
        (None, c) => StepSpec::new(d, p.n, p.l, c.unwrap_or(1))?,
    })
}

fn bit_matrix(p: &Params) -> Result<BitMatrix> {
    let (n, l) = (usize_of(p.n)?, usize_of(p.l)?);
    let mut r = rng(p);
    Ok(BitMatrix::new(n * n * l, l, random_bits(&mut r, n * n * l * l))?)
}

fn theta(p: &Params) -> Result<Vec<u8>> {
    let (n, l) = (usize_of(p.n)?, usize_of(p.l)?);
    Ok(random_bits(&mut rng(p), n * n * l * l))
}

fn xi(p: &Params) -> Result<Vec<f64>> {
    let (n, l) = (usize_of(p.n)?, usize_of(p.l)?);
    let mut r = rng(p);
    Ok((0..n * n * l * l).map(|_| r.gen_range(0.0..=1.0)).collect())
}

/// `R = N`, `N·L` intervals, random targets in `[0, 1]`.
fn equi_instance(p: &Params) -> Result<(EquiGrid, Vec<f64>)> {
    let count = usize_of(p.n * p.l)?;
    let grid = EquiGrid::new(p.n as f64, count, 0.0)?;
    let mut r = rng(p);
    Ok((grid, (0..=count).map(|_| r.gen_range(0.0..1.0)).collect()))
}

/// `R = N`, `m = N` blocks of `n = 2L - 1`, `c` from the parameters.
fn inequi_grid(p: &Params) -> Result<InequiGrid> {
    let (n, l) = (usize_of(p.n)?, usize_of(p.l)?);
    Ok(InequiGrid::new(p.n as f64, p.c.unwrap_or(1), n, 2 * l - 1)?)
}

fn random_targets(p: &Params, len: usize) -> Vec<f64> {
    let mut r = rng(p);
    (0..len).map(|_| r.gen_range(0.0..1.0)).collect()
}

/// Random network with hidden widths `N` and `N·L`.
fn random_shallow(rng: &mut ChaCha8Rng, n: usize, l: usize) -> Result<Network> {
    let mut layer = |rows: usize, cols: usize, act: Activation| -> Result<AffineLayer> {
        let w: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Ok(AffineLayer::new(Matrix::from_dense(rows, cols, &w), b, act)?)
    };
    let layers = vec![
        layer(n, 1, Activation::Relu)?,
        layer(n * l, n, Activation::Relu)?,
        layer(1, n * l, Activation::Identity)?,
    ];
    Ok(Network::new(1, layers)?)
}

/// Identity on `[0, 1]` except a spike of height 5 inside `(1/2 - δ, 1/2)`.
pub fn spike_net(delta: f64) -> Result<Network> {
    let z = [-1.0, 0.5 - delta, 0.5 - delta / 2.0, 0.5, 2.0];
    let v = [-1.0, 0.5 - delta, 5.0, 0.5, 2.0];
    let w = reluforge_core::interp::breakpoint_weights(&z, &v);
    let hidden = AffineLayer::new(
        Matrix::from_dense(4, 1, &[1.0; 4]),
        z[..4].iter().map(|x| -x).collect(),
        Activation::Relu,
    )?;
    let out = AffineLayer::new(Matrix::from_dense(1, 4, &w), vec![v[0]], Activation::Identity)?;
    Ok(Network::new(1, vec![hidden, out])?)
}

fn oracle(p: &Params) -> Result<CorpusFunction> {
    Ok(CorpusFunction::by_name(&p.target, p.d, p.q)?)
}

fn activation(p: &Params) -> SmoothActivation {
    let mut act = SmoothActivation::new(p.activation);
    if let Some(d) = p.delta {
        act.delta = d;
    }
    act
}

fn mhaskar(p: &Params) -> Result<MhaskarBuild> {
    let vk = vk_coeffs(&special_fstar, p.m)?;
    Ok(build_mhaskar(&vk, activation(p))?)
}

fn unknown(name: &str) -> Error {
    Error::Usage(format!(
        "unknown construction '{name}' (known: {})",
        CONSTRUCTIONS.join(", ")
    ))
}

/// Builds the named construction.
pub fn build(name: &str, p: &Params) -> Result<Built> {
    let (n, l) = (p.n, p.l);
    Ok(match name {
        "square" => Built::relu(
            build_square(n, u32_of(l)?)?,
            vec![kv("error_bound", (n as f64).powi(-(l as i32)))],
        ),
        "step" => {
            let spec = step_spec(p)?;
            Built::relu(
                build_step_function(&spec)?,
                vec![kv("K", spec.k()), kv("c", spec.c()?), kv("delta", spec.delta)],
            )
        }
        "staircase" => {
            let g = inequi_grid(p)?;
            let net = reluforge_core::primitives::staircase(g.r(), g.c(), g.m(), g.n())?;
            Built::relu(net, vec![kv("steps", g.r_tilde())])
        }
        "bit-sum" => Built::relu(
            build_bit_sum(&bit_matrix(p)?, usize_of(n)?, usize_of(l)?)?,
            vec![kv("rows", n * n * l), kv("cols", l)],
        ),
        "bit-lookup" => Built::relu(
            build_bit_lookup(&theta(p)?, usize_of(n)?, usize_of(l)?)?,
            vec![kv("bits", n * n * l * l)],
        ),
        "point-fitter" => Built::relu(
            build_point_fitter(&xi(p)?, usize_of(n)?, usize_of(l)?, p.s)?,
            vec![kv("points", n * n * l * l)],
        ),
        "product" => Built::relu(build_product_unit(n, u32_of(l)?)?, vec![]),
        "interp-equi" => {
            let (g, y) = equi_instance(p)?;
            Built::relu(build_equi_interp(&g, &y)?, vec![kv("points", g.count + 1)])
        }
        "interp-inequi" => {
            let g = inequi_grid(p)?;
            let v = random_targets(p, 2 * g.m() + 1);
            Built::relu(build_inequi_interp(&g, &v)?, vec![kv("delta", g.delta())])
        }
        "interp-two-layer" => {
            let g = inequi_grid(p)?;
            let y = random_targets(p, g.len());
            let net = build_two_layer_interp(&TwoLayerGrid::Inequi(g), &y)?;
            Built::relu(net, vec![kv("points", g.len()), kv("delta", g.delta())])
        }
        "widen" => {
            let (nu, lu) = (usize_of(n)?, usize_of(l)?);
            let shallow = random_shallow(&mut rng(p), nu, lu)?;
            Built::relu(widen_to_deep(&shallow, nu, lu)?, vec![])
        }
        "local" | "full" => {
            let f = oracle(p)?;
            let opts = AssemblyOptions::default();
            let a = if name == "full" {
                build_full_approximator(&f, n, l, &opts)?
            } else {
                let c = p.c.unwrap_or_else(|| select_c(f.lipschitz(), p.d, p.q, n, l));
                build_local_approximator(&f, n, l, c, &opts)?
            };
            let summary = vec![
                kv("R", a.r),
                kv("c", a.c),
                kv("delta", a.delta),
                kv("fitter_bits", a.fitter_bits),
                kv("used_fd", a.used_fd),
            ];
            Built::relu(a.network, summary)
        }
        "trifling" => {
            let delta = p.delta.unwrap_or(0.05);
            Built::relu(
                extend_from_trifling(&spike_net(delta)?, 1, delta)?,
                vec![kv("delta", delta)],
            )
        }
        "mhaskar" => {
            let b = mhaskar(p)?;
            let summary = vec![
                kv("m", b.m),
                kv("h", b.h),
                kv("b", b.act.b),
                kv("units", b.network.width()),
                kv("terms", b.ledger.len()),
                kv("log10_I_m", b.log10_max_coef()),
                kv("param_sup", b.network.param_sup()),
            ];
            Built {
                network: None,
                mhaskar: Some(b),
                summary,
            }
        }
        _ => return Err(unknown(name)),
    })
}

fn grid(count: usize) -> impl Iterator<Item = f64> {
    (0..=count).map(move |i| i as f64 / count as f64)
}

/// Runs the property checks of the named construction.
pub fn verify(name: &str, p: &Params) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let built = build(name, p)?;
    let (n, l) = (p.n, p.l);
    match name {
        "square" => {
            let net = built.network.expect("relu");
            let e = grid(10_000)
                .map(|x| (net.eval_scalar(&[x]) - x * x).abs())
                .fold(0.0, f64::max);
            let bound = (n as f64).powi(-(l as i32));
            out.push(Check::new("sup error <= N^-L", e <= bound, format!("{e:e} vs {bound:e}")));
            let pr = net.profile();
            out.push(Check::new(
                "width <= 3N, depth = L+1",
                pr.width as u64 <= 3 * n && pr.depth as u64 == l + 1,
                format!("width {} depth {}", pr.width, pr.depth),
            ));
        }
        "step" => {
            let net = built.network.expect("relu");
            let spec = step_spec(p)?;
            let k = spec.k();
            let mut worst: f64 = 0.0;
            for j in 0..k {
                let a = j as f64 / k as f64;
                let b = if j + 1 == k { 1.0 } else { (j + 1) as f64 / k as f64 - spec.delta };
                for i in 0..64 {
                    let x = a + (b - a) * i as f64 / 63.0;
                    worst = worst.max((net.eval_scalar(&[x]) - j as f64).abs());
                }
            }
            out.push(Check::new(
                "plateaus exact",
                worst <= 1e-9,
                format!("K={k}, max deviation {worst:e}"),
            ));
        }
        "bit-sum" => {
            let net = built.network.expect("relu");
            let bm = bit_matrix(p)?;
            let mut worst: f64 = 0.0;
            for m in 0..bm.rows() {
                for j in 0..bm.cols() {
                    let v = net.eval_scalar(&[m as f64, j as f64]);
                    worst = worst.max((v - bm.prefix_sum(m, j) as f64).abs());
                }
            }
            out.push(Check::new("prefix sums exact", worst <= 1e-6, format!("max deviation {worst:e}")));
            let ps = net.param_sup();
            let lin = 8.0 * (n * n * l) as f64;
            out.push(Check::new("param_sup <= 8 N^2 L", ps <= lin, format!("{ps} vs {lin}")));
        }
        "bit-lookup" => {
            let net = built.network.expect("relu");
            let t = theta(p)?;
            let worst = t
                .iter()
                .enumerate()
                .map(|(i, b)| (net.eval_scalar(&[i as f64]) - *b as f64).abs())
                .fold(0.0, f64::max);
            out.push(Check::new("bits exact", worst <= 1e-6, format!("max deviation {worst:e}")));
        }
        "point-fitter" => {
            let net = built.network.expect("relu");
            let x = xi(p)?;
            let worst = x
                .iter()
                .enumerate()
                .map(|(i, v)| (net.eval_scalar(&[i as f64]) - v).abs())
                .fold(0.0, f64::max);
            let bound = ((n * l) as f64).powi(-2 * p.s as i32);
            out.push(Check::new("fit <= (NL)^-2s", worst <= bound, format!("{worst:e} vs {bound:e}")));
            let mut r = rng(p);
            let bad = (0..10_000)
                .map(|_| net.eval_scalar(&[r.gen_range(-1e3..1e3)]))
                .filter(|v| !(0.0..=1.0).contains(v))
                .count();
            out.push(Check::new("range [0, 1]", bad == 0, format!("{bad} of 10000 outside")));
        }
        "product" => {
            let net = built.network.expect("relu");
            let mut e: f64 = 0.0;
            for x in grid(50) {
                for y in grid(50) {
                    e = e.max((net.eval_scalar(&[x, y]) - x * y).abs());
                }
            }
            let bound = 6.0 * (n as f64).powi(-(l as i32));
            out.push(Check::new("sup error <= 6 N^-L", e <= bound, format!("{e:e} vs {bound:e}")));
        }
        "interp-equi" => {
            let net = built.network.expect("relu");
            let (g, y) = equi_instance(p)?;
            let worst = g
                .points()
                .iter()
                .zip(&y)
                .map(|(x, t)| (net.eval_scalar(&[*x]) - t).abs())
                .fold(0.0, f64::max);
            out.push(Check::new("interpolation exact", worst <= 1e-8, format!("{worst:e}")));
        }
        "interp-inequi" => {
            let net = built.network.expect("relu");
            let g = inequi_grid(p)?;
            let v = random_targets(p, 2 * g.m() + 1);
            let worst = g
                .designated()
                .iter()
                .zip(&v)
                .map(|(x, t)| (net.eval_scalar(&[*x]) - t).abs())
                .fold(0.0, f64::max);
            out.push(Check::new("interpolation exact", worst <= 1e-8, format!("{worst:e}")));
        }
        "interp-two-layer" => {
            let net = built.network.expect("relu");
            let g = inequi_grid(p)?;
            let y = random_targets(p, g.len());
            let worst = g
                .points()
                .iter()
                .zip(&y)
                .map(|(x, t)| (net.eval_scalar(&[*x]) - t).abs())
                .fold(0.0, f64::max);
            out.push(Check::new("interpolation exact", worst <= 1e-8, format!("{worst:e}")));
            let t = fkl_table(&g, &y)?;
            let gap = t
                .blocks
                .iter()
                .flat_map(|b| {
                    b.recursion
                        .iter()
                        .flatten()
                        .zip(b.closed_form.iter().flatten())
                        .map(|(a, c)| (a - c).abs())
                })
                .fold(0.0, f64::max);
            out.push(Check::new("closed forms match recursion", gap <= 1e-10, format!("{gap:e}")));
        }
        "widen" => {
            let net = built.network.expect("relu");
            let (nu, lu) = (usize_of(n)?, usize_of(l)?);
            let shallow = random_shallow(&mut rng(p), nu, lu)?;
            let worst = (0..1000)
                .map(|i| -3.0 + 6.0 * i as f64 / 999.0)
                .map(|x| (net.eval_scalar(&[x]) - shallow.eval_scalar(&[x])).abs())
                .fold(0.0, f64::max);
            out.push(Check::new("pointwise equal", worst <= 1e-9, format!("{worst:e}")));
            let pr = net.profile();
            out.push(Check::new(
                "depth L+2, width 2N+2",
                pr.depth == lu + 2 && pr.width <= 2 * nu + 2,
                format!("width {} depth {}", pr.width, pr.depth),
            ));
        }
        "local" | "full" => {
            let net = built.network.expect("relu");
            let f = oracle(p)?;
            let pts = reluforge_core::fit::unit_grid(p.d, if p.d == 1 { 2000 } else { 60 });
            let e = pts
                .iter()
                .map(|x| (net.eval_scalar(x) - f.value(x)).abs())
                .fold(0.0, f64::max);
            out.push(Check::new("output finite", e.is_finite(), format!("sup error {e:e}")));
            if name == "full" {
                let c = select_c(f.lipschitz(), p.d, p.q, n, l);
                let local = build_local_approximator(&f, n, l, c, &AssemblyOptions::default())?;
                let ok = net.param_sup() <= local.network.param_sup().max(1.0);
                out.push(Check::new(
                    "extension keeps param_sup",
                    ok,
                    format!("{} vs {}", net.param_sup(), local.network.param_sup()),
                ));
            }
        }
        "trifling" => {
            let net = built.network.expect("relu");
            let delta = p.delta.unwrap_or(0.05);
            let worst = grid(1000)
                .map(|x| (net.eval_scalar(&[x]) - x).abs())
                .fold(0.0, f64::max);
            out.push(Check::new("planted strip repaired", worst <= delta + 1e-12, format!("{worst:e}")));
            let input = spike_net(delta)?.param_sup();
            out.push(Check::new(
                "param_sup <= max(input, 1)",
                net.param_sup() <= input.max(1.0),
                format!("{} vs {input}", net.param_sup()),
            ));
            let t = TriflingRegion::new(1, 2, delta.min(1.0 / 6.0))?;
            out.push(Check::new("strip membership", t.contains(&[0.5 - delta.min(1.0 / 6.0) / 2.0]), String::new()));
        }
        "staircase" => {
            let net = built.network.expect("relu");
            let g = inequi_grid(p)?;
            let steps = g.r_tilde();
            let mut worst: f64 = 0.0;
            for k in 0..steps {
                let a = k as f64 / g.r();
                let b = (k + 1) as f64 / g.r() - g.delta();
                for i in 0..16 {
                    let x = a + (b - a) * i as f64 / 15.0;
                    worst = worst.max((net.eval_scalar(&[x]) - k as f64).abs());
                }
            }
            out.push(Check::new("plateaus exact", worst <= 1e-9, format!("{worst:e}")));
        }
        "mhaskar" => {
            let b = built.mhaskar.expect("mhaskar");
            let mut worst: f64 = 0.0;
            for i in 0..1000 {
                let x = -1.0 + 2.0 * i as f64 / 999.0;
                let d = (b.network.eval(x) - b.eval_unmerged(x)).abs() / b.magnitude(x).max(1.0);
                worst = worst.max(d);
            }
            out.push(Check::new("merged equals ledger", worst <= 1e-9, format!("relative {worst:e}")));
            out.push(Check::new(
                "units <= 4m+1",
                b.network.width() <= 4 * b.m + 1,
                format!("{}", b.network.width()),
            ));
            let reach = b
                .ledger
                .iter()
                .map(|t| b.h * t.unit().unsigned_abs() as f64)
                .fold(0.0, f64::max);
            out.push(Check::new(
                "h|2r-p| <= 2δ/3",
                reach <= 2.0 * b.act.delta / 3.0 + 1e-15,
                format!("{reach}"),
            ));
            let vk = vk_coeffs(&special_fstar, p.m)?;
            let im = log10_i_m(&vk, &b.act)?;
            out.push(Check::new(
                "ledger max equals I_m",
                (im - b.log10_max_coef()).abs() <= 1e-9,
                format!("log10 I_m = {im}"),
            ));
        }
        _ => return Err(unknown(name)),
    }
    Ok(out)
}
