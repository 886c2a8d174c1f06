//! Error sweeps, rate fits and growth tables.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use reluforge_core::assembly::TriflingRegion;
use reluforge_core::fit::{fit_linear, unit_grid, LinearFit};
use reluforge_core::shallow::{ImGrowth, MhaskarBuild};
use reluforge_core::Network;

use crate::error::{Error, Result};

/// Parameters of a growth or rate sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Target function name.
    pub target: String,
    /// Input dimension.
    pub d: usize,
    /// Smoothness order.
    pub q: u32,
    /// Grid intervals per axis; the grid has `resolution + 1` points per axis.
    pub resolution: usize,
    /// Skip points in the trifling strips when measuring errors.
    pub exclude_trifling: bool,
    /// `(N, L)` pairs to build.
    pub pairs: Vec<(u64, u64)>,
    /// Seed for randomized inputs.
    pub seed: u64,
}

impl SweepSpec {
    /// Checks the resolution and that there is at least one pair.
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::Usage("grid resolution must be at least 2".into()));
        }
        if self.pairs.is_empty() {
            return Err(Error::Usage("empty (N, L) list".into()));
        }
        if self.pairs.iter().any(|(n, l)| *n == 0 || *l == 0) {
            return Err(Error::Usage("N and L must be at least 1".into()));
        }
        Ok(())
    }
}

/// Uniform lattice on `[0, 1]^d` including the endpoints.
pub fn grid_points(d: usize, resolution: usize) -> Vec<Vec<f64>> {
    unit_grid(d, resolution)
}

/// `max |net(x) - f(x)|` over `points`, skipping the trifling strips when
/// `exclude` is given.
pub fn sup_error(
    net: &Network,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    points: &[Vec<f64>],
    exclude: Option<&TriflingRegion>,
) -> Result<f64> {
    if let Some(p) = points.iter().find(|p| p.len() != net.input_dim()) {
        return Err(reluforge_core::Error::Dimension {
            expected: net.input_dim(),
            found: p.len(),
        }
        .into());
    }
    Ok(points
        .par_iter()
        .filter(|x| !exclude.is_some_and(|t| t.contains(x)))
        .map(|x| (net.eval_scalar(x) - f(x)).abs())
        .reduce(|| 0.0, f64::max))
}

/// Least squares on `(ln size, ln value)`; needs three pairs and positive
/// values.
pub fn fit_loglog(pairs: &[(f64, f64)]) -> Result<LinearFit> {
    if pairs.len() < 3 {
        return Err(Error::Usage("log-log fit needs at least three pairs".into()));
    }
    if pairs.iter().any(|(s, v)| *s <= 0.0 || *v <= 0.0) {
        return Err(Error::Usage("log-log fit needs positive sizes and values".into()));
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    Ok(fit_linear(&x, &y)?)
}

/// A built network and the strip region its error sweep may skip.
#[derive(Debug, Clone)]
pub struct StudyItem {
    /// The network.
    pub network: Network,
    /// Trifling region of the construction, if any.
    pub trifling: Option<TriflingRegion>,
}

/// One built network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    /// Width budget.
    pub n: u64,
    /// Depth budget.
    pub l: u64,
    /// Measured width.
    pub width: usize,
    /// Measured depth.
    pub depth: usize,
    /// Largest absolute parameter.
    pub param_sup: f64,
    /// Grid sup error.
    pub sup_error: f64,
    /// Build plus sweep time in seconds.
    pub runtime_s: f64,
}

/// Rows sorted by `(N, L)` with log-log fits.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    /// One row per pair.
    pub rows: Vec<GrowthRow>,
    /// `ln param_sup` against `ln N` for each `L` with three or more `N`.
    pub param_vs_n: Vec<(u64, LinearFit)>,
    /// `ln param_sup` against `ln L` for each `N` with three or more `L`.
    pub param_vs_l: Vec<(u64, LinearFit)>,
    /// `ln sup_error` against `ln N` for each `L` with three or more `N`.
    pub error_vs_n: Vec<(u64, LinearFit)>,
    /// `ln sup_error` against `ln NL` over all rows.
    pub error_vs_nl: Option<LinearFit>,
}

fn group_fits(
    rows: &[GrowthRow],
    key: impl Fn(&GrowthRow) -> u64,
    size: impl Fn(&GrowthRow) -> f64,
    value: impl Fn(&GrowthRow) -> f64,
) -> Vec<(u64, LinearFit)> {
    let mut keys: Vec<u64> = rows.iter().map(&key).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .filter_map(|k| {
            let pairs: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| key(r) == k)
                .map(|r| (size(r), value(r)))
                .collect();
            fit_loglog(&pairs).ok().map(|f| (k, f))
        })
        .collect()
}

/// Builds, profiles and sweeps every pair of `spec`, in parallel.
pub fn run_growth_study(
    spec: &SweepSpec,
    construct: &(dyn Fn(u64, u64) -> Result<StudyItem> + Sync),
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<GrowthReport> {
    spec.validate()?;
    let mut pairs = spec.pairs.clone();
    pairs.sort_unstable();
    pairs.dedup();
    let points = grid_points(spec.d, spec.resolution);
    let rows: Vec<GrowthRow> = pairs
        .par_iter()
        .map(|&(n, l)| {
            let start = Instant::now();
            let item = construct(n, l)?;
            let skip = if spec.exclude_trifling {
                item.trifling.as_ref()
            } else {
                None
            };
            let err = sup_error(&item.network, f, &points, skip)?;
            let p = item.network.profile();
            Ok(GrowthRow {
                n,
                l,
                width: p.width,
                depth: p.depth,
                param_sup: p.param_sup,
                sup_error: err,
                runtime_s: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<_>>()?;
    let nl: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.n * r.l) as f64, r.sup_error))
        .collect();
    Ok(GrowthReport {
        param_vs_n: group_fits(&rows, |r| r.l, |r| r.n as f64, |r| r.param_sup),
        param_vs_l: group_fits(&rows, |r| r.n, |r| r.l as f64, |r| r.param_sup),
        error_vs_n: group_fits(&rows, |r| r.l, |r| r.n as f64, |r| r.sup_error),
        error_vs_nl: fit_loglog(&nl).ok(),
        rows,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Writes `N,L,width,depth,param_sup,sup_error,runtime_s`. Without
/// `timings` the runtime column holds `NA`, which keeps the file identical
/// across runs.
pub fn write_growth_csv(report: &GrowthReport, out: impl Write, timings: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "L", "width", "depth", "param_sup", "sup_error", "runtime_s"])
        .map_err(csv_err)?;
    for r in &report.rows {
        let rt = if timings {
            r.runtime_s.to_string()
        } else {
            "NA".into()
        };
        w.write_record([
            r.n.to_string(),
            r.l.to_string(),
            r.width.to_string(),
            r.depth.to_string(),
            r.param_sup.to_string(),
            r.sup_error.to_string(),
            rt,
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the term ledger as `m,k,p,r,log10_abs_coef,sign`.
pub fn write_ledger_csv(build: &MhaskarBuild, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "k", "p", "r", "log10_abs_coef", "sign"])
        .map_err(csv_err)?;
    for t in &build.ledger {
        w.write_record([
            build.m.to_string(),
            t.k.to_string(),
            t.p.to_string(),
            t.r.to_string(),
            t.log10_abs.to_string(),
            t.sign.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `m,log10_I_m,log10_lower_bound,log10_asymptotic_bound`.
pub fn write_im_csv(growth: &ImGrowth, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "log10_I_m", "log10_lower_bound", "log10_asymptotic_bound"])
        .map_err(csv_err)?;
    for r in &growth.rows {
        w.write_record([
            r.m.to_string(),
            r.log10_i_m.to_string(),
            r.log10_lower.to_string(),
            r.log10_asymptotic.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
