//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use reluforge::constructions::spike_net;
use reluforge_core::algebra::widen_to_deep;
use reluforge_core::assembly::{
    build_full_approximator, extend_from_trifling, AssemblyOptions, CorpusFunction,
    FunctionOracle,
};
use reluforge_core::fit::{fit_linear, fit_loglog};
use reluforge_core::interp::{
    build_equi_interp, build_inequi_interp, build_two_layer_interp, fkl_table, EquiGrid,
    InequiGrid, TwoLayerGrid,
};
use reluforge_core::primitives::{
    build_bit_lookup, build_bit_sum, build_bit_sum_unmodified, build_point_fitter, build_square,
    build_step_function, BitMatrix, StepSpec,
};
use reluforge_core::shallow::{
    derivative_bound_audit, fourier_coeff, measure_growth_im, special_fstar, vk_coeffs,
    SmoothActivation, SmoothKind,
};
use reluforge_core::{Activation, AffineLayer, Matrix, Network};

type Outcome = Result<(bool, String), String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_dev(net: &Network, xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (net.eval_scalar(&[*x]) - y).abs())
        .fold(0.0, f64::max)
}

fn targets(r: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| r.gen_range(0.0..=1.0)).collect()
}

/// Random admissible inequidistant grid with `m(n+1) <= 64`.
fn random_inequi(r: &mut ChaCha8Rng) -> InequiGrid {
    loop {
        let p = r.gen_range(1..=8usize);
        let m = r.gen_range(1..=32usize);
        if m * 2 * p > 64 {
            continue;
        }
        let rr = r.gen_range(1..=64u32) as f64;
        let c = r.gen_range(1..=8u64);
        return InequiGrid::new(rr, c, m, 2 * p - 1).expect("admissible grid");
    }
}

fn c1_interp() -> Outcome {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let e = match i % 4 {
            0 => {
                let count = r.gen_range(1..=64usize);
                let g = EquiGrid::new(r.gen_range(1..=64u32) as f64, count, r.gen_range(-1.0..1.0))
                    .map_err(|e| e.to_string())?;
                let y = targets(&mut r, count + 1);
                let net = build_equi_interp(&g, &y).map_err(|e| e.to_string())?;
                max_dev(&net, &g.points(), &y)
            }
            1 => {
                let g = random_inequi(&mut r);
                let v = targets(&mut r, 2 * g.m() + 1);
                let net = build_inequi_interp(&g, &v).map_err(|e| e.to_string())?;
                max_dev(&net, &g.designated(), &v)
            }
            2 => {
                let g = random_inequi(&mut r);
                let y = targets(&mut r, g.len());
                let net = build_two_layer_interp(&TwoLayerGrid::Inequi(g), &y)
                    .map_err(|e| e.to_string())?;
                max_dev(&net, &g.points(), &y)
            }
            _ => {
                let (m, n) = loop {
                    let m = r.gen_range(1..=32usize);
                    let n = r.gen_range(0..=63usize);
                    if m * (n + 1) <= 64 {
                        break (m, n);
                    }
                };
                let g = EquiGrid::new(r.gen_range(1..=64u32) as f64, m * (n + 1), 0.0)
                    .map_err(|e| e.to_string())?;
                let tg = TwoLayerGrid::equi(g, m, n).map_err(|e| e.to_string())?;
                let y = targets(&mut r, g.count + 1);
                let net = build_two_layer_interp(&tg, &y).map_err(|e| e.to_string())?;
                max_dev(&net, &g.points(), &y)
            }
        };
        worst = worst.max(e);
    }
    Ok((worst <= 1e-8, format!("max deviation {worst:.3e} over 200 instances")))
}

fn c2_closed_forms() -> Outcome {
    let mut r = rng(2);
    let mut gap: f64 = 0.0;
    let mut entries = 0usize;
    for _ in 0..100 {
        let g = random_inequi(&mut r);
        let y = targets(&mut r, g.len());
        let t = fkl_table(&g, &y).map_err(|e| e.to_string())?;
        for b in &t.blocks {
            for (ra, ca) in b.recursion.iter().zip(&b.closed_form) {
                for (a, c) in ra.iter().zip(ca) {
                    gap = gap.max((a - c).abs());
                    entries += 1;
                }
            }
        }
    }
    Ok((gap <= 1e-10, format!("max gap {gap:.3e} over {entries} entries")))
}

fn square_error(l: u32) -> Result<f64, String> {
    let net = build_square(2, l).map_err(|e| e.to_string())?;
    Ok((0..10_000)
        .map(|i| i as f64 / 9_999.0)
        .map(|x| (net.eval_scalar(&[x]) - x * x).abs())
        .fold(0.0, f64::max))
}

fn c3_square() -> Outcome {
    let e3 = square_error(3)?;
    let ls: Vec<f64> = (1..=6).map(f64::from).collect();
    let errs: Vec<f64> = (1..=6).map(square_error).collect::<Result<_, _>>()?;
    let ln_errs: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let fit = fit_linear(&ls, &ln_errs).map_err(|e| e.to_string())?;
    let target = -std::f64::consts::LN_2;
    let slope_ok = (fit.slope - target).abs() <= 0.4;
    Ok((
        e3 <= 0.125 && slope_ok,
        format!(
            "error(N=2,L=3) = {e3:.4e} (<= 0.125: {}); slope of ln error vs L = {:.4} \
             (window [{:.4}, {:.4}]: {slope_ok})",
            e3 <= 0.125,
            fit.slope,
            target - 0.4,
            target + 0.4
        ),
    ))
}

fn c4_step() -> Outcome {
    let spec = StepSpec::new(1, 2, 1, 1).map_err(|e| e.to_string())?;
    let net = build_step_function(&spec).map_err(|e| e.to_string())?;
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
    Ok((k == 4 && worst <= 1e-9, format!("K = {k}, max plateau deviation {worst:.3e}")))
}

fn c5_bits() -> Outcome {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for n in 1..=4usize {
        for l in 1..=4usize {
            let rows = n * n * l;
            let bits: Vec<u8> = (0..rows * l).map(|_| r.gen_range(0..=1)).collect();
            let bm = BitMatrix::new(rows, l, bits).map_err(|e| e.to_string())?;
            let sum = build_bit_sum(&bm, n, l).map_err(|e| e.to_string())?;
            for m in 0..rows {
                for j in 0..l {
                    let v = sum.eval_scalar(&[m as f64, j as f64]);
                    worst = worst.max((v - bm.prefix_sum(m, j) as f64).abs());
                }
            }
            let theta: Vec<u8> = (0..n * n * l * l).map(|_| r.gen_range(0..=1)).collect();
            let look = build_bit_lookup(&theta, n, l).map_err(|e| e.to_string())?;
            for (i, b) in theta.iter().enumerate() {
                worst = worst.max((look.eval_scalar(&[i as f64]) - *b as f64).abs());
            }
            if n >= 2 && l >= 2 {
                ratios.push(sum.param_sup() / (n * n * l) as f64);
            }
        }
    }
    let c = ratios.iter().copied().fold(0.0, f64::max);
    let bound_ok = c <= 8.0;
    let bm = BitMatrix::new(80, 20, (0..1600).map(|_| r.gen_range(0..=1)).collect())
        .map_err(|e| e.to_string())?;
    let p20 = build_bit_sum(&bm, 2, 20).map_err(|e| e.to_string())?.param_sup();
    let u20 = build_bit_sum_unmodified(&bm, 2, 20)
        .map_err(|e| e.to_string())?
        .param_sup();
    let pow = 2f64.powi(20);
    Ok((
        worst <= 1e-6 && bound_ok && p20 < pow,
        format!(
            "max deviation {worst:.3e}; fitted C = {c:.3} (P <= C N^2 L, C <= 8); \
             param_sup at N=2, L=20: {p20} vs 2^20 (unmodified: {u20})"
        ),
    ))
}

fn c6_fitter() -> Outcome {
    let mut r = rng(6);
    let xi = targets(&mut r, 16);
    let net = build_point_fitter(&xi, 2, 2, 1).map_err(|e| e.to_string())?;
    let fit = xi
        .iter()
        .enumerate()
        .map(|(i, v)| (net.eval_scalar(&[i as f64]) - v).abs())
        .fold(0.0, f64::max);
    let xs: Vec<f64> = (0..100_000)
        .map(|_| r.gen_range(-1.0..1.0) * 10f64.powi(r.gen_range(-3..=6)))
        .collect();
    let outside = xs
        .par_iter()
        .map(|x| net.eval_scalar(&[*x]))
        .filter(|v| !(0.0..=1.0).contains(v))
        .count();
    Ok((
        fit <= 1.0 / 16.0 && outside == 0,
        format!("max |phi(i) - xi_i| = {fit:.4e} (<= 1/16); {outside} of 100000 outside [0,1]"),
    ))
}

fn random_shallow(r: &mut ChaCha8Rng, n: usize, l: usize) -> Result<Network, String> {
    let mut layer = |rows: usize, cols: usize, act: Activation| {
        let w: Vec<f64> = (0..rows * cols).map(|_| r.gen_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..rows).map(|_| r.gen_range(-2.0..2.0)).collect();
        AffineLayer::new(Matrix::from_dense(rows, cols, &w), b, act).map_err(|e| e.to_string())
    };
    let layers = vec![
        layer(n, 1, Activation::Relu)?,
        layer(n * l, n, Activation::Relu)?,
        layer(1, n * l, Activation::Identity)?,
    ];
    Network::new(1, layers).map_err(|e| e.to_string())
}

fn c7_widen() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (n, l) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let shallow = random_shallow(&mut r, n, l)?;
        let deep = widen_to_deep(&shallow, n, l).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let x = r.gen_range(-4.0..4.0);
            worst = worst.max((deep.eval_scalar(&[x]) - shallow.eval_scalar(&[x])).abs());
        }
    }
    Ok((worst <= 1e-9, format!("max deviation {worst:.3e} over 50 nets x 1000 points")))
}

fn full_sup_error(f: &CorpusFunction, n: u64, l: u64) -> Result<(f64, f64), String> {
    let a = build_full_approximator(f, n, l, &AssemblyOptions::default()).map_err(|e| e.to_string())?;
    let e = (0..=4000)
        .map(|i| [i as f64 / 4000.0])
        .map(|x| (a.network.eval_scalar(&x) - f.value(&x)).abs())
        .fold(0.0, f64::max);
    Ok((e, a.network.param_sup()))
}

fn c8_rate() -> Outcome {
    let f = CorpusFunction::by_name("square", 1, 2).map_err(|e| e.to_string())?;
    let ns = [1.0, 2.0, 3.0];
    let errs: Vec<f64> = [1, 2, 3]
        .iter()
        .map(|&n| full_sup_error(&f, n, 1).map(|p| p.0))
        .collect::<Result<_, _>>()?;
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let fit = fit_loglog(&ns, &errs).map_err(|e| e.to_string())?;
    Ok((
        decreasing && fit.slope <= -3.5,
        format!(
            "errors {:?}; strictly decreasing: {decreasing}; log-log slope {:.3} (<= -3.5)",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
            fit.slope
        ),
    ))
}

fn c9_growth() -> Outcome {
    let f = CorpusFunction::by_name("linear", 1, 1).map_err(|e| e.to_string())?;
    let ns = [2.0, 4.0, 8.0];
    let ps: Vec<f64> = [2, 4, 8]
        .iter()
        .map(|&n| full_sup_error(&f, n, 2).map(|p| p.1))
        .collect::<Result<_, _>>()?;
    let fit = fit_loglog(&ns, &ps).map_err(|e| e.to_string())?;
    let ratios_ok = ps.windows(2).all(|w| w[1] / w[0] <= 16.0);
    Ok((
        fit.r2 >= 0.9 && fit.slope <= 4.0 && ratios_ok,
        format!(
            "param_sup {ps:?}; slope {:.3} (<= 4), R^2 {:.4} (>= 0.9); ratios <= 16: {ratios_ok}",
            fit.slope, fit.r2
        ),
    ))
}

fn c10_trifling() -> Outcome {
    let delta = 0.05;
    let input = spike_net(delta).map_err(|e| e.to_string())?;
    let before = (0..=1000)
        .map(|i| i as f64 / 1000.0)
        .map(|x| (input.eval_scalar(&[x]) - x).abs())
        .fold(0.0, f64::max);
    let out = extend_from_trifling(&input, 1, delta).map_err(|e| e.to_string())?;
    let after = (0..=1000)
        .map(|i| i as f64 / 1000.0)
        .map(|x| (out.eval_scalar(&[x]) - x).abs())
        .fold(0.0, f64::max);
    let cap = input.param_sup().max(1.0);
    let ps = out.param_sup();
    Ok((
        ps <= cap && before > 1.0 && after <= delta + 1e-12,
        format!(
            "param_sup {ps} vs max(input, 1) = {cap}; strip error {before:.3} -> {after:.3e}"
        ),
    ))
}

fn c11_coefficients() -> Outcome {
    let f0 = fourier_coeff(&special_fstar, 0).map_err(|e| e.to_string())?;
    let pi2 = std::f64::consts::PI.powi(2) / 12.0;
    let zero_ok = (f0.re - pi2).abs() <= 1e-8;
    let mut fk_fail = Vec::new();
    for k in 1..=32u32 {
        let a = fourier_coeff(&special_fstar, k).map_err(|e| e.to_string())?.abs();
        if a < (k as f64).powi(-3) {
            fk_fail.push(k);
        }
    }
    let mut vk_fail = Vec::new();
    for m in 1..=16usize {
        let t = vk_coeffs(&special_fstar, m).map_err(|e| e.to_string())?;
        if t.min_abs() < 1.0 / (4.0 * (m as f64).powi(3)) {
            vk_fail.push(m);
        }
    }
    Ok((
        zero_ok && fk_fail.is_empty() && vk_fail.is_empty(),
        format!(
            "fhat(0) - pi^2/12 = {:.2e}; |fhat(k)| < k^-3 at k = {fk_fail:?}; \
             min |V_k| < 1/(4m^3) at m = {vk_fail:?}",
            f0.re - pi2
        ),
    ))
}

fn c12_derivatives() -> Outcome {
    let g = derivative_bound_audit(SmoothKind::Gaussian, 12).map_err(|e| e.to_string())?;
    let l = derivative_bound_audit(SmoothKind::Logistic, 12).map_err(|e| e.to_string())?;
    let worst = |a: &reluforge_core::shallow::DerivativeAudit| {
        a.rows.iter().map(|r| r.sup / r.bound).fold(0.0, f64::max)
    };
    Ok((
        g.all_hold() && l.all_hold(),
        format!(
            "gaussian: max sup/bound {:.3}, tail {:.1e}; logistic: max sup/bound {:.3}, \
             recursion {}, coefficient claim {}",
            worst(&g),
            g.tail,
            worst(&l),
            l.recursion_holds,
            l.claim_holds
        ),
    ))
}

fn c13_shallow_growth() -> Outcome {
    let ms: Vec<usize> = (2..=8).collect();
    let mut ok = true;
    let mut detail = Vec::new();
    for kind in [SmoothKind::Gaussian, SmoothKind::Logistic] {
        let g = measure_growth_im(&special_fstar, SmoothActivation::new(kind), &ms)
            .map_err(|e| e.to_string())?;
        let geo = g.geometric(0.9, 1.5);
        let asy = g.above_asymptotic();
        ok &= geo && asy;
        let fit = g.fit.map(|f| (f.slope, f.r2)).unwrap_or((f64::NAN, f64::NAN));
        detail.push(format!(
            "{kind:?}: slope {:.3}, R^2 {:.4}, min ratio {:.3}, above bound {asy}",
            fit.0,
            fit.1,
            g.min_ratio.unwrap_or(f64::NAN)
        ));
    }
    Ok((ok, detail.join("; ")))
}

struct Criterion {
    id: u32,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, budget: secs(10), run: c1_interp },
        Criterion { id: 2, budget: secs(5), run: c2_closed_forms },
        Criterion { id: 3, budget: secs(5), run: c3_square },
        Criterion { id: 4, budget: secs(1), run: c4_step },
        Criterion { id: 5, budget: secs(30), run: c5_bits },
        Criterion { id: 6, budget: secs(10), run: c6_fitter },
        Criterion { id: 7, budget: secs(10), run: c7_widen },
        Criterion { id: 8, budget: secs(120), run: c8_rate },
        Criterion { id: 9, budget: secs(120), run: c9_growth },
        Criterion { id: 10, budget: secs(1), run: c10_trifling },
        Criterion { id: 11, budget: secs(10), run: c11_coefficients },
        Criterion { id: 12, budget: secs(30), run: c12_derivatives },
        Criterion { id: 13, budget: secs(60), run: c13_shallow_growth },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let in_time = took <= c.budget;
        let (passed, detail) = match outcome {
            Ok((p, d)) => (p && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "{} criterion {}: {detail} ({:.3} s, budget {} s{})",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            took.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} of {} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
