//! Command-line interface.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use levytree_core::functional::default_battery;
use levytree_core::generators::{brownian_excursion, gw_tree_conditioned, ExcursionSampler};
use levytree_core::rng::substream;
use levytree_core::{ContourExcursion, FinitePath, FunctionalSpec, LevyModel};

use crate::error::{CliError, CliResult};
use crate::harness::{self, FixedS, Key2, Sampler, Triplet};
use crate::io;
use crate::report::{append_reports, read_reports, summarize, McConfig, TestReport};

#[derive(Debug, Parser)]
#[command(name = "levytree", version, about = "Contour coding, re-rooting and invariance checks for random trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an excursion, a tree or a Lukasiewicz walk.
    Gen(GenArgs),
    /// Re-root an excursion read from a path CSV.
    Reroot {
        #[arg(long = "in")]
        input: PathBuf,
        /// Time in [0, sigma]; snapped to the nearest grid point.
        #[arg(long)]
        s: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite.
    #[command(subcommand)]
    Verify(Verify),
    /// Work with report files.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Excursion,
    Tree,
    Walk,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    pub kind: GenKind,
    /// `brownian` or `gamma=<g>[,c=<c>]`.
    #[arg(long, default_value = "brownian")]
    pub model: ModelArg,
    /// Grid intervals for a Brownian excursion, edges otherwise.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of trees for `gen tree`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A parsed `--model` value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelArg {
    pub model: LevyModel,
    /// Set for the literal `brownian`, which samples a Brownian excursion
    /// rather than a tree contour.
    pub brownian: bool,
}

impl FromStr for ModelArg {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        if s == "brownian" {
            return Ok(ModelArg { model: LevyModel::brownian(), brownian: true });
        }
        let mut gamma = None;
        let mut scale = 1.0;
        for part in s.split(',') {
            let (k, v) = part.split_once('=').ok_or_else(|| CliError::Input(format!("bad model `{s}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| CliError::Input(format!("bad number in model `{s}`")))?;
            match k.trim() {
                "gamma" => gamma = Some(v),
                "c" => scale = v,
                other => return Err(CliError::Input(format!("unknown model key `{other}`"))),
            }
        }
        let gamma = gamma.ok_or_else(|| CliError::Input(format!("model `{s}` has no gamma")))?;
        Ok(ModelArg { model: LevyModel::new(gamma, scale)?, brownian: false })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExactSuite {
    RerootBijection,
    TimeReversal,
    Prop1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McSuite {
    FixedS,
    NegativeControl,
    Triplet,
    Ise,
    Key2,
    TimeReversal,
    Isometry,
    SpineIdentities,
}

#[derive(Debug, Subcommand)]
pub enum Verify {
    /// Exhaustive checks without randomness.
    Exact {
        #[arg(long)]
        suite: ExactSuite,
        /// Half-length, or the largest edge count for `prop1`.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Seeded Monte Carlo suites.
    Mc(Box<McArgs>),
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long)]
    pub suite: McSuite,
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Shift fractions; a comma-separated list gives one report each.
    #[arg(long, value_delimiter = ',', default_value = "0.3")]
    pub s0: Vec<f64>,
    /// Contour intervals per sample; tree samplers use `grid / 2` edges.
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
    #[arg(long, default_value_t = 1000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::report::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Worker threads; does not change results.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "gw")]
    pub sampler: String,
    /// Battery member, repeatable, e.g. `sup` or `eval_at(0.5)`.
    #[arg(long = "functional")]
    pub functionals: Vec<String>,
    /// Reuse the same replicas on both sides of `fixed-s`.
    #[arg(long)]
    pub same_replicas: bool,
    /// Model of the plain side in `negative-control`.
    #[arg(long, default_value_t = 1.5)]
    pub alt_gamma: f64,
    /// Fixed time fractions `u,v` for `triplet`.
    #[arg(long)]
    pub times: Option<String>,
    /// Mass samples per tree for `ise`.
    #[arg(long, default_value_t = 500)]
    pub k: usize,
    /// CSV receiving `tree_id,k,right_mass` rows for `ise`.
    #[arg(long)]
    pub ise_csv: Option<PathBuf>,
    /// Measure JSON for `key2`; defaults to drift 1 on [0,2] plus an atom 3 at 0.5.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    /// `reflected` or `records`.
    #[arg(long, default_value = "reflected")]
    pub scheme: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    /// Shifts per excursion for `isometry`.
    #[arg(long, default_value_t = 10)]
    pub shifts: usize,
    /// Times per shift for `isometry`.
    #[arg(long, default_value_t = 5)]
    pub points: usize,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Print one line per report and a pass count.
    Summarize { file: PathBuf },
}

/// Runs a parsed command; `Ok(false)` means some check failed.
pub fn run(cli: Cli) -> CliResult<bool> {
    let mut stdout = std::io::stdout().lock();
    run_with(cli, &mut stdout)
}

pub fn run_with<W: Write>(cli: Cli, out: &mut W) -> CliResult<bool> {
    match cli.command {
        Command::Gen(args) => {
            generate(&args, out)?;
            Ok(true)
        }
        Command::Reroot { input, s, out: file } => {
            let h = ContourExcursion::new(io::read_path_file(&input)?)?;
            let k = snap_time(&h, s)?;
            eprintln!("re-rooted at grid time {}", h.path().time_of(k));
            let r = h.reroot_at(k);
            write_path(r.path(), file.as_deref(), out)?;
            Ok(true)
        }
        Command::Verify(Verify::Exact { suite, n, report }) => {
            let r = match suite {
                ExactSuite::RerootBijection => harness::verify_reroot_bijection(n)?,
                ExactSuite::TimeReversal => harness::verify_time_reversal_exact(n)?,
                ExactSuite::Prop1 => harness::verify_prop1_default(n)?,
            };
            emit(&[r], report.as_deref(), out)
        }
        Command::Verify(Verify::Mc(args)) => {
            let reports = run_mc(&args)?;
            emit(&reports, args.report.as_deref(), out)
        }
        Command::Report(ReportCommand::Summarize { file }) => {
            let s = summarize(&read_reports(&file)?);
            writeln!(out, "{s}")?;
            Ok(s.all_pass())
        }
    }
}

fn snap_time(h: &ContourExcursion, s: f64) -> CliResult<usize> {
    if !(0.0..=h.sigma()).contains(&s) {
        return Err(CliError::Input(format!("s = {s} lies outside [0, {}]", h.sigma())));
    }
    Ok(((s / h.step()).round() as usize).min(h.path().intervals()))
}

fn write_path<W: Write>(p: &FinitePath, file: Option<&Path>, out: &mut W) -> CliResult<()> {
    match file {
        Some(f) => io::write_path_file(p, f),
        None => io::write_path_csv(p, out),
    }
}

fn generate<W: Write>(args: &GenArgs, out: &mut W) -> CliResult<()> {
    let mut rng = substream(args.seed, 0);
    let model = args.model.model;
    match args.kind {
        GenKind::Excursion => {
            let h = if args.model.brownian {
                brownian_excursion(args.n, &mut rng)?
            } else {
                ExcursionSampler::new(model).sample(args.n, &mut rng)?
            };
            write_path(h.path(), args.out.as_deref(), out)
        }
        GenKind::Tree => {
            let law = model.offspring();
            let trees = (0..args.count as u64)
                .map(|i| gw_tree_conditioned(&law, args.n, &mut substream(args.seed, i)))
                .collect::<levytree_core::Result<Vec<_>>>()?;
            match &args.out {
                Some(f) => io::write_trees(&trees, std::io::BufWriter::new(std::fs::File::create(f)?)),
                None => io::write_trees(&trees, out),
            }
        }
        GenKind::Walk => {
            let tree = gw_tree_conditioned(&model.offspring(), args.n, &mut rng)?;
            let values = tree.lukasiewicz_walk().values().iter().map(|&x| x as f64).collect();
            write_path(&FinitePath::new(values, 1.0)?, args.out.as_deref(), out)
        }
    }
}

fn parse_battery(items: &[String]) -> CliResult<Vec<FunctionalSpec>> {
    if items.is_empty() {
        return Ok(default_battery());
    }
    Ok(items.iter().map(|s| s.parse()).collect::<levytree_core::Result<_>>()?)
}

fn parse_pair(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Input(format!("expected `u,v`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn run_mc(args: &McArgs) -> CliResult<Vec<TestReport>> {
    let cfg = McConfig::new(args.grid, args.replicas, args.seed)?.with_alpha(args.alpha)?.with_workers(args.workers)?;
    let sampler: Sampler = args.sampler.parse()?;
    let battery = parse_battery(&args.functionals)?;
    let model = LevyModel::new(args.gamma, args.c)?;
    let first_shift = *args.s0.first().ok_or_else(|| CliError::Input("no s0 given".into()))?;
    let spec = FixedS { model, sampler, s0: first_shift, battery: battery.clone(), same_replicas: args.same_replicas };
    Ok(vec![match args.suite {
        McSuite::FixedS => return harness::verify_fixed_s_many(&spec, &args.s0, &cfg),
        McSuite::NegativeControl => harness::verify_negative_control(&spec, LevyModel::new(args.alt_gamma, args.c)?, &cfg)?,
        McSuite::Triplet => {
            let times = args.times.as_deref().map(parse_pair).transpose()?;
            harness::verify_triplet(&Triplet { sampler, times }, &cfg)?
        }
        McSuite::Ise => {
            let (r, rows) = harness::verify_ise(sampler, args.k, &cfg)?;
            if let Some(f) = &args.ise_csv {
                append_ise_rows(f, &rows)?;
            }
            r
        }
        McSuite::Key2 => {
            let mu = match &args.measure {
                Some(f) => io::read_measure_file(f)?,
                None => Key2::example_measure(),
            };
            let spec = Key2 { mu, delta: args.delta, rule: harness::parse_rule(&args.scheme)?, budget: args.budget, battery };
            harness::verify_key2(&spec, &cfg)?
        }
        McSuite::TimeReversal => harness::verify_time_reversal(sampler, &cfg)?,
        McSuite::Isometry => harness::verify_isometry(sampler, args.shifts, args.points, &cfg)?,
        McSuite::SpineIdentities => harness::verify_spine_identities(&cfg)?,
    }])
}

/// Appends rows, writing the header when the file is new or empty.
pub fn append_ise_rows(file: &Path, rows: &[harness::IseRow]) -> CliResult<()> {
    let fresh = std::fs::metadata(file).map(|m| m.len() == 0).unwrap_or(true);
    let f = OpenOptions::new().create(true).append(true).open(file)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(f);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn emit<W: Write>(reports: &[TestReport], file: Option<&Path>, out: &mut W) -> CliResult<bool> {
    if let Some(f) = file {
        append_reports(f, reports)?;
    }
    for r in reports {
        writeln!(out, "{r}")?;
    }
    Ok(reports.iter().all(|r| r.pass))
}
