//! Command-line interface: `build`, `verify`, `study` and `eval`.
//!
//! Every run ends with a line `STATUS=ok`, `STATUS=fail` or
//! `STATUS=usage`, matching exit codes 0, 1 and 2.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use reluforge_core::assembly::{
    build_full_approximator, AssemblyOptions, CorpusFunction, FunctionOracle, TriflingRegion,
};
use reluforge_core::shallow::{measure_growth_im, special_fstar, SmoothActivation, SmoothKind};

use crate::constructions::{build, verify, Params};
use crate::error::{Error, Result};
use crate::format::{from_json, to_json};
use crate::harness::{run_growth_study, write_growth_csv, write_im_csv, write_ledger_csv, StudyItem, SweepSpec};

/// Environment variable that overrides the seed.
pub const SEED_ENV: &str = "RELUFORGE_SEED";

/// Exit code of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code of a failed check or construction.
pub const EXIT_FAIL: i32 = 1;
/// Exit code of invalid usage.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "reluforge", version, about = "Explicit ReLU network constructions")]
struct Cli {
    /// Worker threads for sweeps; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML or JSON file with option values; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a construction and print the network and its profile.
    Build {
        /// Construction name.
        construction: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Build a construction and check its properties.
    Verify {
        /// Construction name.
        construction: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Growth and rate studies: deep-growth, deep-rate, mhaskar-growth.
    Study {
        /// Study kind.
        kind: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Evaluate a network document on vectors read from stdin.
    Eval {
        /// Network document.
        #[arg(long)]
        net: PathBuf,
    },
}

/// Options shared by flags and config files.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Opts {
    /// Width budget N.
    #[arg(long)]
    pub n: Option<u64>,
    /// Depth budget L.
    #[arg(long)]
    pub l: Option<u64>,
    /// Input dimension d.
    #[arg(long)]
    pub d: Option<usize>,
    /// Trifling parameter c.
    #[arg(long)]
    pub c: Option<u64>,
    /// Trifling width δ (or the smoothness window for mhaskar).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Point-fitter exponent s.
    #[arg(long)]
    pub s: Option<u32>,
    /// Smoothness order q.
    #[arg(long)]
    pub q: Option<u32>,
    /// Mhaskar degree m.
    #[arg(long)]
    pub m: Option<usize>,
    /// Target function: const, linear, square, sine, product2.
    #[arg(long)]
    pub target: Option<String>,
    /// Smooth activation: gaussian or logistic.
    #[arg(long)]
    pub activation: Option<String>,
    /// Seed for random instances.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid intervals per axis for error sweeps.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Skip the trifling strips when measuring errors.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub exclude_trifling: Option<bool>,
    /// Width budgets of a study.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<u64>>,
    /// Depth budgets of a study.
    #[arg(long, value_delimiter = ',')]
    pub ls: Option<Vec<u64>>,
    /// Degrees of a Mhaskar study.
    #[arg(long, value_delimiter = ',')]
    pub ms: Option<Vec<usize>>,
    /// Output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write measured runtimes into study CSVs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timings: Option<bool>,
    /// Slack added to rate thresholds.
    #[arg(long)]
    pub slope_tol: Option<f64>,
    /// Slack added to growth-exponent thresholds.
    #[arg(long)]
    pub growth_tol: Option<f64>,
    /// Worker threads (config files only; the flag is global).
    #[arg(skip)]
    pub threads: Option<usize>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident, $($f:ident),*) => {
        Opts { $($f: $a.$f.or($b.$f)),* }
    };
}

impl Opts {
    /// Field-wise merge where `self` wins.
    pub fn or(self, other: Opts) -> Opts {
        let a = self;
        let b = other;
        merge_fields!(
            a, b, n, l, d, c, delta, s, q, m, target, activation, seed, resolution,
            exclude_trifling, ns, ls, ms, out, timings, slope_tol, growth_tol, threads
        )
    }

    /// Reads a config file; `.json` files are JSON, everything else TOML.
    pub fn from_file(path: &Path) -> Result<Opts> {
        let text = fs::read_to_string(path)?;
        let json = path.extension().is_some_and(|e| e == "json");
        if json {
            serde_json::from_str(&text).map_err(|e| Error::Usage(format!("config: {e}")))
        } else {
            toml::from_str(&text).map_err(|e| Error::Usage(format!("config: {e}")))
        }
    }

    fn seed(&self) -> Result<u64> {
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("{SEED_ENV} must be an integer, got '{v}'"))),
            Err(_) => Ok(self.seed.unwrap_or(0)),
        }
    }

    /// Construction parameters with defaults filled in.
    pub fn params(&self) -> Result<Params> {
        let def = Params::default();
        let activation = match self.activation.as_deref() {
            None | Some("gaussian") => SmoothKind::Gaussian,
            Some("logistic") => SmoothKind::Logistic,
            Some(o) => return Err(Error::Usage(format!("unknown activation '{o}'"))),
        };
        Ok(Params {
            n: self.n.unwrap_or(def.n),
            l: self.l.unwrap_or(def.l),
            d: self.d.unwrap_or(def.d),
            c: self.c,
            delta: self.delta,
            s: self.s.unwrap_or(def.s),
            q: self.q.unwrap_or(def.q),
            m: self.m.unwrap_or(def.m),
            target: self.target.clone().unwrap_or(def.target),
            activation,
            seed: self.seed()?,
        })
    }
}

fn kv_line(out: &mut dyn Write, k: &str, v: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{k}={v}")?;
    Ok(())
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, bytes)?;
            kv_line(out, "wrote", p.display())
        }
        None => {
            out.write_all(bytes)?;
            if !bytes.ends_with(b"\n") {
                writeln!(out)?;
            }
            Ok(())
        }
    }
}

fn cmd_build(name: &str, opts: &Opts, out: &mut dyn Write) -> Result<bool> {
    let p = opts.params()?;
    let b = build(name, &p)?;
    if let Some(net) = &b.network {
        emit(out, &opts.out, to_json(net).as_bytes())?;
        let pr = net.profile();
        kv_line(out, "width", pr.width)?;
        kv_line(out, "depth", pr.depth)?;
        kv_line(out, "param_sup", pr.param_sup)?;
        kv_line(out, "nonzero_weights", pr.nonzero_weights)?;
    }
    if let Some(m) = &b.mhaskar {
        let mut csv = Vec::new();
        write_ledger_csv(m, &mut csv)?;
        emit(out, &opts.out, &csv)?;
    }
    for (k, v) in &b.summary {
        kv_line(out, k, v)?;
    }
    Ok(true)
}

fn cmd_verify(name: &str, opts: &Opts, out: &mut dyn Write) -> Result<bool> {
    let checks = verify(name, &opts.params()?)?;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {}: {}", c.name, c.detail)?;
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn full_item(f: &CorpusFunction, n: u64, l: u64) -> Result<StudyItem> {
    let a = build_full_approximator(f, n, l, &AssemblyOptions::default())?;
    let trifling = TriflingRegion::new(f.dim(), a.r, a.delta).ok();
    Ok(StudyItem {
        network: a.network,
        trifling,
    })
}

fn cmd_study(kind: &str, opts: &Opts, out: &mut dyn Write) -> Result<bool> {
    let p = opts.params()?;
    match kind {
        "deep-growth" | "deep-rate" => {
            let ns = opts.ns.clone().unwrap_or_else(|| vec![2, 4, 8]);
            let ls = opts.ls.clone().unwrap_or_else(|| vec![2]);
            let pairs: Vec<(u64, u64)> = ns
                .iter()
                .flat_map(|n| ls.iter().map(move |l| (*n, *l)))
                .collect();
            let spec = SweepSpec {
                target: p.target.clone(),
                d: p.d,
                q: p.q,
                resolution: opts.resolution.unwrap_or(if p.d == 1 { 2000 } else { 40 }),
                exclude_trifling: opts.exclude_trifling.unwrap_or(false),
                pairs,
                seed: p.seed,
            };
            spec.validate()?;
            let f = CorpusFunction::by_name(&p.target, p.d, p.q)?;
            let report = run_growth_study(&spec, &|n, l| full_item(&f, n, l), &|x| f.value(x))?;
            let mut csv = Vec::new();
            write_growth_csv(&report, &mut csv, opts.timings.unwrap_or(false))?;
            emit(out, &opts.out, &csv)?;
            let (d, q) = (p.d as f64, p.q as f64);
            let mut ok = true;
            if kind == "deep-growth" {
                let bound = (6.0 * q - 3.0) / d + opts.growth_tol.unwrap_or(1.0);
                if report.param_vs_n.is_empty() {
                    return Err(Error::Usage("deep-growth needs three or more N values".into()));
                }
                for (l, fit) in &report.param_vs_n {
                    let pass = fit.slope <= bound;
                    ok &= pass;
                    let tag = if pass { "PASS" } else { "FAIL" };
                    writeln!(
                        out,
                        "{tag} param_sup slope vs N at L={l}: {:.4} (R2 {:.4}) <= {bound}",
                        fit.slope, fit.r2
                    )?;
                }
            } else {
                let bound = -2.0 * q / d + opts.slope_tol.unwrap_or(0.5);
                if report.error_vs_n.is_empty() {
                    return Err(Error::Usage("deep-rate needs three or more N values".into()));
                }
                for (l, fit) in &report.error_vs_n {
                    let errs: Vec<f64> = report
                        .rows
                        .iter()
                        .filter(|r| r.l == *l)
                        .map(|r| r.sup_error)
                        .collect();
                    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
                    let pass = fit.slope <= bound && decreasing;
                    ok &= pass;
                    let tag = if pass { "PASS" } else { "FAIL" };
                    writeln!(
                        out,
                        "{tag} error slope vs N at L={l}: {:.4} <= {bound}, decreasing={decreasing}",
                        fit.slope
                    )?;
                }
            }
            Ok(ok)
        }
        "mhaskar-growth" => {
            let ms = opts.ms.clone().unwrap_or_else(|| (2..=8).collect());
            if ms.is_empty() {
                return Err(Error::Usage("empty m list".into()));
            }
            let mut act = SmoothActivation::new(p.activation);
            if let Some(d) = p.delta {
                act.delta = d;
            }
            let g = measure_growth_im(&special_fstar, act, &ms)?;
            let mut csv = Vec::new();
            write_im_csv(&g, &mut csv)?;
            emit(out, &opts.out, &csv)?;
            kv_line(out, "b", g.act.b)?;
            kv_line(out, "delta", g.act.delta)?;
            kv_line(out, "c_tilde", g.c_tilde)?;
            let geometric = g.geometric(0.9, 1.5);
            if let (Some(fit), Some(r)) = (g.fit, g.min_ratio) {
                writeln!(
                    out,
                    "{} ln I_m vs m: slope {:.4}, R2 {:.4}, min ratio {:.4}",
                    if geometric { "PASS" } else { "FAIL" },
                    fit.slope,
                    fit.r2,
                    r
                )?;
            } else {
                writeln!(out, "FAIL fewer than two nonzero I_m")?;
            }
            let above = g.above_asymptotic();
            writeln!(
                out,
                "{} I_m >= (1/8) c_tilde^m m^-3 on every row",
                if above { "PASS" } else { "FAIL" }
            )?;
            Ok(geometric && above)
        }
        _ => Err(Error::Usage(format!(
            "unknown study '{kind}' (known: deep-growth, deep-rate, mhaskar-growth)"
        ))),
    }
}

fn cmd_eval(net: &Path, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<bool> {
    let net = from_json(&fs::read_to_string(net)?)?;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let x: Vec<f64> = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Usage(format!("line {}: {e}", i + 1)))?;
        let y = net.evaluate(&x).map_err(|e| Error::Usage(format!("line {}: {e}", i + 1)))?;
        let text: Vec<String> = y.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", text.join(" "))?;
    }
    Ok(true)
}

fn dispatch(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => Opts::from_file(p)?,
        None => Opts::default(),
    };
    let threads = cli.threads.or(file.threads);
    let go = |buf: &mut Vec<u8>| -> Result<bool> {
        match &cli.command {
            Command::Build { construction, opts } => {
                cmd_build(construction, &opts.clone().or(file.clone()), buf)
            }
            Command::Verify { construction, opts } => {
                cmd_verify(construction, &opts.clone().or(file.clone()), buf)
            }
            Command::Study { kind, opts } => cmd_study(kind, &opts.clone().or(file.clone()), buf),
            Command::Eval { .. } => unreachable!("handled before"),
        }
    };
    if let Command::Eval { net } = &cli.command {
        return cmd_eval(net, input, out);
    }
    let mut buf = Vec::new();
    let res = match threads {
        Some(0) => Err(Error::Usage("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Usage(e.to_string()))
            .and_then(|pool| pool.install(|| go(&mut buf))),
        None => go(&mut buf),
    };
    out.write_all(&buf)?;
    res
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code; all output, including the final status line, goes to `out`.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (code, status) = match Cli::try_parse_from(args) {
        Err(e) => {
            let _ = write!(out, "{e}");
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    (EXIT_OK, "ok")
                }
                _ => (EXIT_USAGE, "usage"),
            }
        }
        Ok(cli) => match dispatch(cli, input, out) {
            Ok(true) => (EXIT_OK, "ok"),
            Ok(false) => (EXIT_FAIL, "fail"),
            Err(e) => {
                let _ = writeln!(out, "error: {e}");
                if e.is_usage() {
                    (EXIT_USAGE, "usage")
                } else {
                    (EXIT_FAIL, "fail")
                }
            }
        },
    };
    let _ = writeln!(out, "STATUS={status}");
    let _ = out.flush();
    code
}
