//! Command-line front end. Data goes to files; diagnostics go to stderr.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::brw::{realize_hat, realize_sample};
use crate::capacity::{
    bcap_escape, bcap_hitting, newtonian_cap, riesz_cap, EscapeParams, HittingParams, NewtonianParams, RieszParams,
};
use crate::config::{RunConfig, OUTPUT_DIR_ENV};
use crate::distributions::{parse_offspring, parse_step};
use crate::error::{Error, Result};
use crate::experiments::{
    run_c_theta, run_identity_suite, run_intersection, run_range_capacity, run_spine_fraction, ExperimentReport,
};
use crate::lattice::{green_solve, GreenBoundary, LatticeSet};
use crate::point::ORIGIN;
use crate::rng::StreamKey;
use crate::trees::{sample_adjoint, sample_gw, sample_gw_conditioned, sample_hat_t_minus, SpineSplit};

#[derive(Debug, Parser)]
#[command(name = "bcaplab", about = "Branching capacity simulation and estimation", disable_version_flag = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample trees and write them in text form, one per line.
    SampleTree(SampleTreeArgs),
    /// Sample a tree-indexed walk and write its binary file.
    SampleBrw(SampleBrwArgs),
    /// Run one capacity estimator and write a JSON record.
    Estimate(EstimateArgs),
    /// Run a scripted experiment and write CSV, JSON and schema files.
    Experiment(ExperimentArgs),
    /// Shorthand for `experiment identities`.
    Identities(CommonArgs),
    /// Print the version.
    Version,
}

/// Keys shared by every subcommand; they override the config file.
#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Flat TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Offspring law, e.g. binary, geometric(0.5), poisson, table([0.3,0.4,0.3]).
    #[arg(long)]
    pub mu: Option<String>,
    /// Branching step law, e.g. srw(5), box(5,1).
    #[arg(long)]
    pub theta: Option<String>,
    /// Step law of the independent walk ξ.
    #[arg(long)]
    pub xi: Option<String>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub r_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub far_distances: Option<Vec<f64>>,
    #[arg(long)]
    pub walks_per_n: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub guard: Option<f64>,
    #[arg(long)]
    pub guard_power: Option<f64>,
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub dry_run: bool,
}

impl CommonArgs {
    /// Config file first, then command-line keys on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.merge(&RunConfig {
            experiment: None,
            seed: self.seed,
            d: self.d,
            mu: self.mu.clone(),
            theta: self.theta.clone(),
            xi: self.xi.clone(),
            output_dir: self.output_dir.clone(),
            workers: self.workers,
            n_grid: self.n_grid.clone(),
            eps_grid: self.eps_grid.clone(),
            r_grid: self.r_grid.clone(),
            far_distances: self.far_distances.clone(),
            walks_per_n: self.walks_per_n,
            trials: self.trials,
            samples: self.samples,
            budget: self.budget,
            levels: self.levels,
            guard: self.guard,
            guard_power: self.guard_power,
            batches: self.batches,
            eta: self.eta,
            x: self.x.clone(),
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TreeKind {
    /// Unconditioned Galton–Watson tree.
    Gw,
    /// Galton–Watson tree conditioned on its size.
    Conditioned,
    /// Root offspring from the adjoint law.
    Adjoint,
    /// Prefix of the depth-first reading of the invariant tree's left part.
    HatTMinus,
}

#[derive(Debug, Args)]
pub struct SampleTreeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "gw")]
    pub kind: TreeKind,
    /// Size for conditioned trees (implies --kind conditioned).
    #[arg(long)]
    pub conditioned: Option<usize>,
    /// Prefix length for hat-t-minus.
    #[arg(long, default_value_t = 100)]
    pub length: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Output file; defaults to the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleBrwArgs {
    #[command(flatten)]
    pub tree: SampleTreeArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Newtonian,
    BcapHitting,
    BcapEscape,
    Riesz,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub method: Method,
    /// `ball:R`, `point`, or a CSV file of lattice points.
    #[arg(long)]
    pub set: Option<String>,
    /// Riesz exponent.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// CSV file of real points for the Riesz solver.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Diagonal self-energy constant for the Riesz solver.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Box radius of the Green function solve used by bcap-hitting.
    #[arg(long, default_value_t = 32)]
    pub green_radius: i32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentId {
    RangeCapacity,
    Intersection,
    SpineFraction,
    Identities,
    CTheta,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub id: Option<ExperimentId>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Parses the arguments, runs the command and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Version => {
            println!("bcaplab {}", env!("CARGO_PKG_VERSION"));
            Ok(0)
        }
        Command::SampleTree(a) => sample_tree(&a, false),
        Command::SampleBrw(a) => sample_tree(&a.tree, true),
        Command::Estimate(a) => estimate(&a),
        Command::Experiment(a) => experiment(a.id, &a.common),
        Command::Identities(c) => experiment(Some(ExperimentId::Identities), &c),
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::validation(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn print_dry_run(cfg: &impl serde::Serialize) -> Result<i32> {
    let text = toml::to_string(cfg).map_err(|e| Error::numerical(format!("config serialization: {e}")))?;
    print!("{text}");
    Ok(0)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn sample_tree(a: &SampleTreeArgs, walk: bool) -> Result<i32> {
    let cfg = a.common.resolve()?;
    let kind = if a.conditioned.is_some() { TreeKind::Conditioned } else { a.kind };
    if a.common.dry_run {
        let mut c = cfg.clone();
        c.mu.get_or_insert_with(|| "binary".into());
        c.seed.get_or_insert(1);
        eprintln!("kind = {kind:?}");
        return print_dry_run(&c);
    }
    let mu = parse_offspring(cfg.mu.as_deref().unwrap_or("binary"))?;
    if let Some(n) = a.conditioned {
        mu.check_size_reachable(n)?;
    }
    let theta = if walk {
        let d = cfg.d.unwrap_or(5);
        Some(parse_step(cfg.theta.as_deref().unwrap_or(&format!("srw({d})")))?)
    } else {
        None
    };
    let budget = cfg.budget.unwrap_or(1_000_000);
    let key = StreamKey::new(cfg.seed(), if walk { "sample-brw" } else { "sample-tree" });
    let split = SpineSplit::new(&mu);
    let adjoint = mu.adjoint()?;
    let mut out = Vec::new();
    for i in 0..a.count {
        let mut rng = key.stream(i as u64);
        let (text, brw) = match kind {
            TreeKind::Conditioned => {
                let n = a.conditioned.ok_or_else(|| Error::validation("--kind conditioned needs --conditioned N"))?;
                let t = sample_gw_conditioned(&mu, n, &mut rng)?;
                let s = crate::trees::GwSample::Complete(t);
                let w = theta.as_ref().map(|th| realize_sample(&s, th, &ORIGIN, &mut rng));
                (s.tree().expect("complete").serialize(), w)
            }
            TreeKind::Gw | TreeKind::Adjoint => {
                let s = match kind {
                    TreeKind::Gw => sample_gw(&mu, &mut rng, budget),
                    _ => sample_adjoint(&mu, &adjoint, &mut rng, budget),
                };
                if s.is_truncated() {
                    eprintln!("sample {i}: truncated at {budget} vertices");
                }
                let w = theta.as_ref().map(|th| realize_sample(&s, th, &ORIGIN, &mut rng));
                let text = match s.tree() {
                    Some(t) => t.serialize(),
                    None => {
                        let parts: Vec<String> = s.child_counts().iter().map(|c| c.to_string()).collect();
                        format!("{};{};truncated", s.vertex_count(), parts.join(","))
                    }
                };
                (text, w)
            }
            TreeKind::HatTMinus => {
                let h = sample_hat_t_minus(&mu, &split, a.length, &mut rng);
                let w = theta.as_ref().map(|th| realize_hat(&h, th, &ORIGIN, &mut rng));
                (h.serialize(), w)
            }
        };
        match brw {
            Some(w) => w.write_binary(&mut out)?,
            None => {
                out.extend_from_slice(text.as_bytes());
                out.push(b'\n');
            }
        }
    }
    let ext = if walk { "brw" } else { "tree" };
    let path = a
        .out
        .clone()
        .unwrap_or_else(|| cfg.output_dir().join(format!("{ext}-{kind:?}-seed{}.{ext}", cfg.seed()).to_lowercase()));
    write_file(&path, &out)?;
    Ok(0)
}

fn parse_set(spec: &str, d: usize) -> Result<LatticeSet> {
    if let Some(r) = spec.strip_prefix("ball:") {
        let r: f64 = r.trim().parse().map_err(|_| Error::validation(format!("bad ball radius in '{spec}'")))?;
        return Ok(LatticeSet::ball(d, &ORIGIN, r));
    }
    if spec == "point" {
        return Ok(LatticeSet::singleton(d, ORIGIN));
    }
    let set = LatticeSet::from_csv(&fs::read_to_string(spec)?)?;
    if set.dim() != d {
        return Err(Error::validation(format!("set file is in Z^{}, expected Z^{d}", set.dim())));
    }
    Ok(set)
}

fn read_real_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
        let p = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::validation(format!("bad coordinate '{f}'"))))
            .collect::<Result<Vec<_>>>()?;
        pts.push(p);
    }
    Ok(pts)
}

fn estimate(a: &EstimateArgs) -> Result<i32> {
    let cfg = a.common.resolve()?;
    if a.common.dry_run {
        eprintln!("method = {:?}, set = {:?}, gamma = {:?}", a.method, a.set, a.gamma);
        return print_dry_run(&cfg);
    }
    let seed = cfg.seed();
    let stem = format!("estimate-{:?}-seed{seed}.json", a.method).to_lowercase();
    let path = a.out.clone().unwrap_or_else(|| cfg.output_dir().join(stem));
    let json = if a.method == Method::Riesz {
        let gamma = a.gamma.ok_or_else(|| Error::validation("--method riesz needs --gamma"))?;
        let file = a.points.as_ref().ok_or_else(|| Error::validation("--method riesz needs --points FILE"))?;
        let pts = read_real_points(file)?;
        let params = RieszParams { kappa: a.kappa, ..RieszParams::new(gamma) };
        let sol = with_pool(cfg.workers, || riesz_cap(&pts, &params))??;
        serde_json::to_string_pretty(&sol)?
    } else {
        let d = cfg.d.unwrap_or(5);
        let theta = parse_step(cfg.theta.as_deref().unwrap_or(&format!("srw({d})")))?;
        if theta.dim() != d {
            return Err(Error::validation(format!("theta lives in Z^{}, --d is {d}", theta.dim())));
        }
        let mu = parse_offspring(cfg.mu.as_deref().unwrap_or("binary"))?;
        let k = parse_set(a.set.as_deref().unwrap_or("ball:4"), d)?;
        let key = StreamKey::new(seed, &format!("estimate-{:?}", a.method));
        let est = with_pool(cfg.workers, || match a.method {
            Method::Newtonian => {
                let mut p = NewtonianParams::default();
                if let Some(f) = &cfg.far_distances {
                    p.far_distances = f.clone();
                }
                if let Some(t) = cfg.trials {
                    p.trials_per_direction = t;
                }
                if let Some(b) = cfg.batches {
                    p.batches = b;
                }
                newtonian_cap(&k, &theta, &p, &key)
            }
            Method::BcapHitting => {
                let mut p = HittingParams::default();
                if let Some(f) = &cfg.far_distances {
                    p.far_distances = f.clone();
                }
                if let Some(t) = cfg.trials {
                    p.trials_per_direction = t;
                }
                if let Some(b) = cfg.budget {
                    p.budget = b;
                }
                if let Some(b) = cfg.batches {
                    p.batches = b;
                }
                let green = green_solve(&theta, a.green_radius, GreenBoundary::FarField)?;
                bcap_hitting(&k, &mu, &theta, &green, &p, &key)
            }
            Method::BcapEscape => {
                let mut p = EscapeParams { base_radius: cfg.guard, ..EscapeParams::default() };
                if let Some(t) = cfg.trials {
                    p.trials = t;
                }
                if let Some(b) = cfg.budget {
                    p.budget = b;
                }
                if let Some(l) = cfg.levels {
                    p.levels = l;
                }
                if let Some(b) = cfg.batches {
                    p.batches = b;
                }
                bcap_escape(&k, &mu, &theta, &p, &key)
            }
            Method::Riesz => unreachable!("handled above"),
        })??;
        for w in &est.warnings {
            eprintln!("warning: {w}");
        }
        est.to_json()
    };
    write_file(&path, (json + "\n").as_bytes())?;
    Ok(0)
}

fn experiment(id: Option<ExperimentId>, common: &CommonArgs) -> Result<i32> {
    let cfg = common.resolve()?;
    let id = match id {
        Some(id) => id,
        None => {
            let name = cfg
                .experiment
                .as_deref()
                .ok_or_else(|| Error::validation("no experiment given on the command line or in the config"))?;
            ExperimentId::from_str(name, true).map_err(|_| Error::validation(format!("unknown experiment '{name}'")))?
        }
    };
    if common.dry_run {
        return match id {
            ExperimentId::RangeCapacity => print_dry_run(&cfg.range_capacity()),
            ExperimentId::Intersection => print_dry_run(&cfg.intersection()),
            ExperimentId::SpineFraction => print_dry_run(&cfg.spine_fraction()),
            ExperimentId::Identities => print_dry_run(&cfg.identities()),
            ExperimentId::CTheta => print_dry_run(&cfg.c_theta()),
        };
    }
    let report: ExperimentReport = with_pool(cfg.workers, || match id {
        ExperimentId::RangeCapacity => run_range_capacity(&cfg.range_capacity()),
        ExperimentId::Intersection => run_intersection(&cfg.intersection()),
        ExperimentId::SpineFraction => run_spine_fraction(&cfg.spine_fraction()),
        ExperimentId::Identities => run_identity_suite(&cfg.identities()),
        ExperimentId::CTheta => run_c_theta(&cfg.c_theta()),
    })??;
    for p in report.write(&cfg.output_dir())? {
        eprintln!("wrote {}", p.display());
    }
    for n in &report.notes {
        eprintln!("note: {n}");
    }
    if report.failures.is_empty() {
        Ok(0)
    } else {
        for f in &report.failures {
            eprintln!("FAILED: {f}");
        }
        Ok(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn unreachable_size_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("t.tree");
        let code = run_from_args([
            "bcaplab",
            "sample-tree",
            "--mu",
            "binary",
            "--conditioned",
            "4",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
        assert!(!out.exists());
    }
}
