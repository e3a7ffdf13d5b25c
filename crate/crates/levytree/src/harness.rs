//! Verification suites: exact enumerations and seeded Monte Carlo tests.
//!
//! Every replica draws from its own substream `(seed, index)`, replicas run
//! on a thread pool and are collected in index order, so a report depends on
//! the configuration and seed but not on the number of workers.

use std::ops::Range;
use std::str::FromStr;
use std::time::Instant;

use levytree_core::coding::{distance_matrix, mass_sample, mass_sample_indices, triplet};
use levytree_core::exact::{
    default_prop1_functionals, default_prop1_weights, verify_prop1_exact as prop1_identities, verify_reroot_bijection as reroot_bijection,
    verify_time_reversal_exact as time_reversal_exact, ShiftFunctional, SigmaWeight,
};
use levytree_core::functional::default_battery;
use levytree_core::generators::{brownian_excursion, ExcursionSampler};
use levytree_core::rng::{retry_substream, SimRng};
use levytree_core::snake::ise_right_mass;
use levytree_core::spine::{sample_q_with, spine_path, Atom, DriftSegment, SpineHeight};
use levytree_core::stats::{bonferroni_pass, ks_two_sample, ks_uniform, mean_and_se};
use levytree_core::{ContourExcursion, FiniteMeasure, FinitePath, FunctionalSpec, LatticePath, LevyModel, WalkPath};
use rand::Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::io::MeasureJson;
use crate::report::{McConfig, Mode, TestReport};

/// Attempts per replica before a retryable failure becomes fatal.
pub const MAX_ATTEMPTS: u64 = 64;

/// Bound on moment z-scores in the triplet suite.
pub const MOMENT_Z_BOUND: f64 = 4.0;

/// Tolerance of the isometry suite.
pub const ISOMETRY_TOLERANCE: f64 = 1e-12;

/// Replica values in index order plus the number of retried attempts.
#[derive(Debug, Clone)]
pub struct Replicas<T> {
    pub values: Vec<T>,
    pub retries: u64,
}

/// Thread pool running independent replicas.
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    pub fn new(workers: Option<usize>) -> CliResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Input(format!("cannot start worker pool: {e}")))?;
        Ok(Runner { pool })
    }

    /// Runs `f` once per stream. A retryable error reruns the replica on
    /// [`retry_substream`] with the next attempt number.
    pub fn replicas<T, F>(&self, seed: u64, streams: Range<u64>, f: F) -> CliResult<Replicas<T>>
    where
        T: Send,
        F: Fn(&mut SimRng) -> levytree_core::Result<T> + Sync,
    {
        let out: Vec<(T, u64)> = self.pool.install(|| {
            streams
                .into_par_iter()
                .map(|stream| {
                    let mut last = None;
                    for attempt in 0..MAX_ATTEMPTS {
                        let mut rng = retry_substream(seed, stream, attempt);
                        match f(&mut rng) {
                            Ok(v) => return Ok((v, attempt)),
                            Err(e) if e.is_retryable() => last = Some(e),
                            Err(e) => return Err(CliError::from(e)),
                        }
                    }
                    Err(CliError::from(last.expect("at least one attempt")))
                })
                .collect::<CliResult<Vec<_>>>()
        })?;
        let retries = out.iter().map(|(_, a)| a).sum();
        Ok(Replicas { values: out.into_iter().map(|(v, _)| v).collect(), retries })
    }
}

/// How excursions are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Conditioned Galton–Watson contour with `grid / 2` edges.
    Gw,
    /// Vervaat transform of a grid Brownian bridge; quadratic case only.
    Brownian,
}

impl Sampler {
    pub fn name(self) -> &'static str {
        match self {
            Sampler::Gw => "gw",
            Sampler::Brownian => "brownian",
        }
    }
}

impl FromStr for Sampler {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "gw" => Ok(Sampler::Gw),
            "brownian" => Ok(Sampler::Brownian),
            _ => Err(CliError::Input(format!("unknown sampler `{s}`, expected gw or brownian"))),
        }
    }
}

/// A normalized excursion sampler at a fixed grid size.
#[derive(Debug, Clone)]
pub struct Source {
    model: LevyModel,
    sampler: Sampler,
    grid: usize,
    gw: ExcursionSampler,
}

impl Source {
    pub fn new(model: LevyModel, sampler: Sampler, grid: usize) -> CliResult<Self> {
        match sampler {
            Sampler::Brownian if !model.is_brownian() => {
                return Err(CliError::Input("the Brownian sampler only covers gamma = 2".into()));
            }
            Sampler::Brownian if grid < 2 => return Err(CliError::Input("grid must be at least 2".into())),
            Sampler::Gw if grid < 2 || grid % 2 == 1 => {
                return Err(CliError::Input(format!("a tree contour needs an even grid of at least 2, got {grid}")));
            }
            _ => {}
        }
        Ok(Source { model, sampler, grid, gw: ExcursionSampler::new(model) })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn sample(&self, rng: &mut SimRng) -> levytree_core::Result<ContourExcursion> {
        Ok(self.draw(rng)?.excursion)
    }

    pub fn draw(&self, rng: &mut SimRng) -> levytree_core::Result<Draw<'_>> {
        match self.sampler {
            Sampler::Gw => {
                let contour = self.gw.sample_contour(self.grid / 2, rng)?;
                Ok(Draw { excursion: self.gw.scale(&contour)?, contour: Some(contour), source: self })
            }
            Sampler::Brownian => Ok(Draw { excursion: brownian_excursion(self.grid, rng)?, contour: None, source: self }),
        }
    }

    fn describe(&self, r: &mut TestReport, prefix: &str) {
        r.set_param(&format!("{prefix}gamma"), self.model.gamma());
        r.set_param(&format!("{prefix}c"), self.model.scale());
        r.set_param(&format!("{prefix}sampler"), self.sampler.name());
        r.set_param("grid", self.grid as u64);
    }
}

/// One sampled excursion. Tree contours keep their integer heights, and
/// re-rooting and branch lengths are taken on them before scaling, so equal
/// shapes always give bit-identical values.
#[derive(Debug, Clone)]
pub struct Draw<'a> {
    source: &'a Source,
    contour: Option<LatticePath>,
    excursion: ContourExcursion,
}

impl Draw<'_> {
    pub fn excursion(&self) -> &ContourExcursion {
        &self.excursion
    }

    pub fn reroot_at(&self, k: usize) -> levytree_core::Result<ContourExcursion> {
        match &self.contour {
            Some(c) => self.source.gw.scale(&c.reroot(k)?),
            None => Ok(self.excursion.reroot_at(k)),
        }
    }

    /// Branch lengths `(H_i − m, H_j − m, m)` at grid indices `i` and `j`.
    pub fn triplet_at(&self, i: usize, j: usize) -> levytree_core::Result<(f64, f64, f64)> {
        match &self.contour {
            Some(c) => {
                let h = c.heights();
                let m = *h[i.min(j)..=i.max(j)].iter().min().expect("nonempty range");
                let f = self.source.gw.height_factor(self.source.grid / 2);
                Ok(((h[i] - m) as f64 * f, (h[j] - m) as f64 * f, m as f64 * f))
            }
            None => {
                let p = self.excursion.path();
                triplet(&self.excursion, p.time_of(i), p.time_of(j))
            }
        }
    }
}

fn battery_values(battery: &[FunctionalSpec], w: &FinitePath) -> Vec<f64> {
    battery.iter().map(|f| f.eval(w)).collect()
}

fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

/// Adds one KS entry per functional and returns the p-values.
fn ks_battery(r: &mut TestReport, battery: &[FunctionalSpec], a: &[Vec<f64>], b: &[Vec<f64>]) -> CliResult<Vec<f64>> {
    let mut ps = Vec::with_capacity(battery.len());
    for (k, f) in battery.iter().enumerate() {
        let t = ks_two_sample(&column(a, k), &column(b, k))?;
        r.push_stat(f.name(), t.statistic, Some(t.p));
        ps.push(t.p);
    }
    Ok(ps)
}

fn battery_names(battery: &[FunctionalSpec]) -> Value {
    Value::from(battery.iter().map(|f| f.name()).collect::<Vec<_>>())
}

fn statistical(suite: &str, cfg: &McConfig, tests: usize) -> TestReport {
    TestReport::new(suite, Mode::Statistical, Some(cfg.seed))
        .param("replicas", cfg.replicas as u64)
        .param("alpha", cfg.alpha)
        .param("tests", tests as u64)
}

fn finish(mut r: TestReport, start: Instant) -> TestReport {
    r.runtime_ms = start.elapsed().as_millis() as u64;
    r
}

fn stream_block(cfg: &McConfig, block: u64) -> Range<u64> {
    let n = cfg.replicas as u64;
    block * n..(block + 1) * n
}

fn snap_fraction(s0: f64, grid: usize) -> CliResult<usize> {
    if !(0.0..1.0).contains(&s0) {
        return Err(CliError::Input(format!("s0 must lie in [0, 1), got {s0}")));
    }
    Ok(((s0 * grid as f64).round() as usize).min(grid))
}

/// Options of [`verify_fixed_s_mc`].
#[derive(Debug, Clone)]
pub struct FixedS {
    pub model: LevyModel,
    pub sampler: Sampler,
    pub s0: f64,
    pub battery: Vec<FunctionalSpec>,
    /// Use the same replicas on both sides instead of independent halves.
    pub same_replicas: bool,
}

impl FixedS {
    pub fn new(model: LevyModel, s0: f64) -> Self {
        FixedS { model, sampler: Sampler::Gw, s0, battery: default_battery(), same_replicas: false }
    }
}

/// Battery KS between the re-rooted `H^{[s0·σ]}` and plain `H`.
pub fn verify_fixed_s_mc(spec: &FixedS, cfg: &McConfig) -> CliResult<TestReport> {
    Ok(verify_fixed_s_many(spec, &[spec.s0], cfg)?.remove(0))
}

/// One [`verify_fixed_s_mc`] report per shift fraction, with every shift
/// applied to the same sampled excursions. Each report equals the one of a
/// separate run at that shift, apart from its runtime.
pub fn verify_fixed_s_many(spec: &FixedS, shifts: &[f64], cfg: &McConfig) -> CliResult<Vec<TestReport>> {
    let start = Instant::now();
    let source = Source::new(spec.model, spec.sampler, cfg.grid)?;
    let ks: Vec<usize> = shifts.iter().map(|&s0| snap_fraction(s0, cfg.grid)).collect::<CliResult<_>>()?;
    let runner = Runner::new(cfg.workers)?;
    let battery = &spec.battery;
    let rerooted = runner.replicas(cfg.seed, stream_block(cfg, 0), |rng| {
        let d = source.draw(rng)?;
        ks.iter().map(|&k| Ok(battery_values(battery, d.reroot_at(k)?.path()))).collect::<levytree_core::Result<Vec<_>>>()
    })?;
    let plain_block = if spec.same_replicas { 0 } else { 1 };
    let plain = runner.replicas(cfg.seed, stream_block(cfg, plain_block), |rng| {
        Ok(battery_values(battery, source.sample(rng)?.path()))
    })?;
    let mut out = Vec::with_capacity(shifts.len());
    for (j, (&s0, &k)) in shifts.iter().zip(&ks).enumerate() {
        let side: Vec<Vec<f64>> = rerooted.values.iter().map(|row| row[j].clone()).collect();
        let mut r = statistical("fixed-s", cfg, battery.len())
            .param("s0", s0)
            .param("shift_index", k as u64)
            .param("same_replicas", spec.same_replicas)
            .param("battery", battery_names(battery))
            .param("retries", rerooted.retries + plain.retries);
        source.describe(&mut r, "");
        let ps = ks_battery(&mut r, battery, &side, &plain.values)?;
        r.pass = bonferroni_pass(&ps, cfg.alpha);
        out.push(finish(r, start));
    }
    Ok(out)
}

/// The fixed-s comparison with the plain side drawn from a different model.
/// Passes when the battery rejects, i.e. when the test has power.
pub fn verify_negative_control(spec: &FixedS, alternative: LevyModel, cfg: &McConfig) -> CliResult<TestReport> {
    let start = Instant::now();
    let source = Source::new(spec.model, spec.sampler, cfg.grid)?;
    let other = Source::new(alternative, Sampler::Gw, cfg.grid)?;
    let k = snap_fraction(spec.s0, cfg.grid)?;
    let runner = Runner::new(cfg.workers)?;
    let battery = &spec.battery;
    let rerooted = runner.replicas(cfg.seed, stream_block(cfg, 0), |rng| {
        Ok(battery_values(battery, source.draw(rng)?.reroot_at(k)?.path()))
    })?;
    let plain = runner.replicas(cfg.seed, stream_block(cfg, 1), |rng| Ok(battery_values(battery, other.sample(rng)?.path())))?;
    let mut r = statistical("negative-control", cfg, battery.len())
        .param("s0", spec.s0)
        .param("shift_index", k as u64)
        .param("expect", "reject")
        .param("battery", battery_names(battery))
        .param("retries", rerooted.retries + plain.retries);
    source.describe(&mut r, "");
    other.describe(&mut r, "alt_");
    let ps = ks_battery(&mut r, battery, &rerooted.values, &plain.values)?;
    r.pass = !bonferroni_pass(&ps, cfg.alpha);
    Ok(finish(r, start))
}

/// Options of [`verify_triplet`].
#[derive(Debug, Clone, Copy)]
pub struct Triplet {
    pub sampler: Sampler,
    /// Fixed time fractions instead of two mass-sampled times.
    pub times: Option<(f64, f64)>,
}

impl Default for Triplet {
    fn default() -> Self {
        Triplet { sampler: Sampler::Gw, times: None }
    }
}

/// Exchangeability of the branch lengths from the root, `U` and `V` to
/// their branch point: pairwise KS between the three marginals, each taken
/// from its own block of replicas, and paired z-scores of
/// `E[X·Y²] − E[Y·X²]` for the three pairs.
pub fn verify_triplet(spec: &Triplet, cfg: &McConfig) -> CliResult<TestReport> {
    let start = Instant::now();
    let source = Source::new(LevyModel::brownian(), spec.sampler, cfg.grid)?;
    let runner = Runner::new(cfg.workers)?;
    let draw = |rng: &mut SimRng| -> levytree_core::Result<[f64; 3]> {
        let d = source.draw(rng)?;
        let h = d.excursion();
        let (a, b, c) = match spec.times {
            Some((a, b)) => triplet(h, a * h.sigma(), b * h.sigma())?,
            None => {
                let t = mass_sample_indices(h, rng, 2);
                d.triplet_at(t[0], t[1])?
            }
        };
        Ok([a, b, c])
    };
    if let Some((a, b)) = spec.times {
        FunctionalSpec::triplet_at(1, a, b)?;
    }
    let blocks: Vec<Replicas<[f64; 3]>> = (0..3).map(|b| runner.replicas(cfg.seed, stream_block(cfg, b), draw)).collect::<CliResult<_>>()?;
    let marginal = |block: usize, comp: usize| -> Vec<f64> { blocks[block].values.iter().map(|x| x[comp]).collect() };
    let mut r = statistical("triplet", cfg, 3)
        .param("times", match spec.times {
            Some((a, b)) => Value::from(vec![a, b]),
            None => Value::from("mass"),
        })
        .param("moment_z_bound", MOMENT_Z_BOUND)
        .param("retries", blocks.iter().map(|b| b.retries).sum::<u64>());
    source.describe(&mut r, "");
    let names = ["A", "B", "C"];
    let mut ps = Vec::new();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let t = ks_two_sample(&marginal(i, i), &marginal(j, j))?;
        r.push_stat(format!("ks({},{})", names[i], names[j]), t.statistic, Some(t.p));
        ps.push(t.p);
    }
    let mut moments_ok = true;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let d: Vec<f64> = blocks[0].values.iter().map(|x| x[i] * x[j] * x[j] - x[j] * x[i] * x[i]).collect();
        let (m, se) = mean_and_se(&d);
        let z = if se > 0.0 { m / se } else if m == 0.0 { 0.0 } else { f64::INFINITY };
        moments_ok &= z.abs() <= MOMENT_Z_BOUND;
        r.push_stat(format!("z({0}*{1}^2-{1}*{0}^2)", names[i], names[j]), z, None);
    }
    r.pass = bonferroni_pass(&ps, cfg.alpha) && moments_ok;
    Ok(finish(r, start))
}

/// One row of the ISE output CSV.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IseRow {
    pub tree_id: u64,
    pub k: usize,
    pub right_mass: f64,
}

/// KS of the right mass of the tree-indexed Brownian motion against the
/// uniform law, with `k` mass samples per tree.
pub fn verify_ise(sampler: Sampler, k: usize, cfg: &McConfig) -> CliResult<(TestReport, Vec<IseRow>)> {
    let start = Instant::now();
    if k == 0 {
        return Err(CliError::Input("k must be positive".into()));
    }
    let source = Source::new(LevyModel::brownian(), sampler, cfg.grid)?;
    let runner = Runner::new(cfg.workers)?;
    let out = runner.replicas(cfg.seed, stream_block(cfg, 0), |rng| {
        let h = source.sample(rng)?;
        ise_right_mass(&h, k, rng)
    })?;
    let mut r = statistical("ise", cfg, 1).param("k", k as u64).param("retries", out.retries);
    source.describe(&mut r, "");
    let t = ks_uniform(&out.values)?;
    r.push_stat("right_mass", t.statistic, Some(t.p));
    r.pass = bonferroni_pass(&[t.p], cfg.alpha);
    let rows = out.values.iter().enumerate().map(|(i, &m)| IseRow { tree_id: i as u64, k, right_mass: m }).collect();
    Ok((finish(r, start), rows))
}

/// Options of [`verify_key2`].
#[derive(Debug, Clone)]
pub struct Key2 {
    pub mu: FiniteMeasure,
    pub delta: f64,
    pub rule: SpineHeight,
    pub budget: u64,
    pub battery: Vec<FunctionalSpec>,
}

impl Key2 {
    /// Drift 1 on `[0, 2]` plus an atom of mass 3 at `0.5`.
    pub fn example_measure() -> FiniteMeasure {
        FiniteMeasure::new(vec![DriftSegment { from: 0.0, to: 2.0, rate: 1.0 }], vec![Atom { at: 0.5, mass: 3.0 }])
            .expect("valid measure")
    }

    pub fn new(mu: FiniteMeasure, delta: f64) -> Self {
        Key2 { mu, delta, rule: SpineHeight::Reflected, budget: 1_000_000, battery: default_battery() }
    }
}

pub fn rule_name(rule: SpineHeight) -> &'static str {
    match rule {
        SpineHeight::WeakRecords => "records",
        SpineHeight::Reflected => "reflected",
    }
}

pub fn parse_rule(s: &str) -> CliResult<SpineHeight> {
    match s {
        "records" => Ok(SpineHeight::WeakRecords),
        "reflected" => Ok(SpineHeight::Reflected),
        _ => Err(CliError::Input(format!("unknown spine scheme `{s}`, expected records or reflected"))),
    }
}

/// Battery KS between `w̃` for `w ~ Q_μ` and the reversal of `w ~ Q_μ̄`.
pub fn verify_key2(spec: &Key2, cfg: &McConfig) -> CliResult<TestReport> {
    let start = Instant::now();
    let runner = Runner::new(cfg.workers)?;
    let battery = &spec.battery;
    let reversed_mu = spec.mu.reverse();
    let tilde = runner.replicas(cfg.seed, stream_block(cfg, 0), |rng| {
        let w = sample_q_with(spec.rule, &spec.mu, spec.delta, spec.budget, rng)?;
        Ok(battery_values(battery, &w.path().tilde()))
    })?;
    let reversed = runner.replicas(cfg.seed, stream_block(cfg, 1), |rng| {
        let w = sample_q_with(spec.rule, &reversed_mu, spec.delta, spec.budget, rng)?;
        Ok(battery_values(battery, &w.path().reverse()))
    })?;
    let mut r = TestReport::new("key2", Mode::Statistical, Some(cfg.seed))
        .param("replicas", cfg.replicas as u64)
        .param("alpha", cfg.alpha)
        .param("tests", battery.len() as u64)
        .param("measure", serde_json::to_value(MeasureJson::from(&spec.mu))?)
        .param("delta", spec.delta)
        .param("scheme", rule_name(spec.rule))
        .param("budget", spec.budget)
        .param("retries", tilde.retries + reversed.retries)
        .param("battery", battery_names(battery));
    let ps = ks_battery(&mut r, battery, &tilde.values, &reversed.values)?;
    r.pass = bonferroni_pass(&ps, cfg.alpha);
    Ok(finish(r, start))
}

/// Battery KS between `H` and its time reversal.
pub fn verify_time_reversal(sampler: Sampler, cfg: &McConfig) -> CliResult<TestReport> {
    let start = Instant::now();
    let source = Source::new(LevyModel::brownian(), sampler, cfg.grid)?;
    let runner = Runner::new(cfg.workers)?;
    let battery = default_battery();
    let plain = runner.replicas(cfg.seed, stream_block(cfg, 0), |rng| Ok(battery_values(&battery, source.sample(rng)?.path())))?;
    let reversed = runner.replicas(cfg.seed, stream_block(cfg, 1), |rng| {
        Ok(battery_values(&battery, &source.sample(rng)?.path().reverse()))
    })?;
    let mut r = statistical("time-reversal", cfg, battery.len())
        .param("battery", battery_names(&battery))
        .param("retries", plain.retries + reversed.retries);
    source.describe(&mut r, "");
    let ps = ks_battery(&mut r, &battery, &plain.values, &reversed.values)?;
    r.pass = bonferroni_pass(&ps, cfg.alpha);
    Ok(finish(r, start))
}

/// Distances of `H^{[s]}` at random times against those of `H` at the
/// shifted times, on `cfg.replicas` excursions with `shifts` random grid
/// shifts and `points` random grid times each.
///
/// The identity is exact on tree contours. A Brownian grid path can cross
/// the height of the new root between grid points, and the re-rooted
/// samples do not see those visits.
pub fn verify_isometry(sampler: Sampler, shifts: usize, points: usize, cfg: &McConfig) -> CliResult<TestReport> {
    let start = Instant::now();
    if shifts == 0 || points == 0 {
        return Err(CliError::Input("isometry needs at least one shift and one time".into()));
    }
    let source = Source::new(LevyModel::brownian(), sampler, cfg.grid)?;
    let runner = Runner::new(cfg.workers)?;
    let grid = cfg.grid;
    let out = runner.replicas(cfg.seed, stream_block(cfg, 0), |rng| {
        let h = source.sample(rng)?;
        let mut worst: f64 = 0.0;
        for _ in 0..shifts {
            let k = rng.random_range(0..=grid);
            let s = h.path().time_of(k);
            let times = mass_sample(&h, rng, points);
            let shifted: Vec<f64> = times.iter().map(|&t| h.shift_time(s, t)).collect();
            let a = distance_matrix(&h.reroot_at(k), &times)?;
            let b = distance_matrix(&h, &shifted)?;
            worst = worst.max(a.max_abs_diff(&b));
        }
        Ok(worst)
    })?;
    let worst = out.values.iter().copied().fold(0.0, f64::max);
    let mut r = TestReport::new("isometry", Mode::Exact, Some(cfg.seed))
        .param("excursions", cfg.replicas as u64)
        .param("shifts", shifts as u64)
        .param("points", points as u64)
        .param("tolerance", ISOMETRY_TOLERANCE);
    source.describe(&mut r, "");
    r.push_stat("max_abs_diff", worst, None);
    r.pass = worst <= ISOMETRY_TOLERANCE;
    Ok(finish(r, start))
}

/// A random element of the lattice family: drift pieces with rates in
/// `{1/2, 1, 2, 4}` and integer total mass, plus up to two integer atoms at
/// quarter-integer positions.
fn random_lattice_measure(rng: &mut SimRng) -> FiniteMeasure {
    let rates = [0.5, 1.0, 2.0, 4.0];
    let mut drift = Vec::new();
    let mut end = 0.0;
    for _ in 0..rng.random_range(1..=3) {
        let rate = rates[rng.random_range(0..rates.len())];
        let len = rng.random_range(1..=4) as f64 * if rate == 0.5 { 2.0 } else { 1.0 };
        drift.push(DriftSegment { from: end, to: end + len, rate });
        end += len;
    }
    let quarters = (4.0 * end) as u32;
    let atoms = (0..rng.random_range(0..=2))
        .map(|_| Atom { at: rng.random_range(0..=quarters) as f64 / 4.0, mass: rng.random_range(1..=3) as f64 })
        .collect();
    FiniteMeasure::new(drift, atoms).expect("valid lattice measure")
}

/// A skip-free walk with steps in `{−1, 0, 1, 2}` that ends at its first
/// visit of `−mass`.
fn random_skip_free_walk(rng: &mut SimRng, mass: i64) -> levytree_core::Result<WalkPath> {
    let mut values = vec![0i64];
    let mut x = 0i64;
    for _ in 0..rng.random_range(0..=80) {
        if x == -mass {
            break;
        }
        x += rng.random_range(-1..=2);
        values.push(x);
    }
    while x > -mass {
        x -= 1;
        values.push(x);
    }
    WalkPath::new(values)
}

/// The running-minimum and reversal identities of spine paths, with zero
/// tolerance, on `cfg.replicas` random lattice instances with unit mass
/// step.
pub fn verify_spine_identities(cfg: &McConfig) -> CliResult<TestReport> {
    let start = Instant::now();
    let runner = Runner::new(cfg.workers)?;
    let out = runner.replicas(cfg.seed, stream_block(cfg, 0), |rng| {
        let mu = random_lattice_measure(rng);
        let walk = random_skip_free_walk(rng, mu.total_mass() as i64)?;
        let sp = spine_path(&mu, &walk, 1.0)?;
        let ends = sp.path().start() == mu.sup_support() && sp.path().end() == 0.0;
        Ok((sp.running_min_identity(0.0) && ends, sp.reversal_identity(0.0)))
    })?;
    let running_failures = out.values.iter().filter(|v| !v.0).count();
    let reversal_failures = out.values.iter().filter(|v| !v.1).count();
    let mut r = TestReport::new("spine-identities", Mode::Exact, Some(cfg.seed))
        .param("instances", cfg.replicas as u64)
        .param("delta", 1.0);
    r.push_stat("running_min_failures", running_failures as f64, None);
    r.push_stat("reversal_failures", reversal_failures as f64, None);
    r.pass = running_failures == 0 && reversal_failures == 0;
    Ok(finish(r, start))
}

/// Exhaustive re-rooting bijection check on Dyck paths of length `2n`.
pub fn verify_reroot_bijection(n: usize) -> CliResult<TestReport> {
    let start = Instant::now();
    if n == 0 || n > 10 {
        return Err(CliError::Input(format!("n must lie in 1..=10, got {n}")));
    }
    let b = reroot_bijection(n)?;
    let mut r = TestReport::new("reroot-bijection", Mode::Exact, None)
        .param("n", n as u64)
        .param("paths", b.paths as u64)
        .param("checks", b.checks as u64);
    r.push_stat("not_dyck", b.not_dyck as f64, None);
    r.push_stat("involution_failures", b.involution_failures as f64, None);
    r.push_stat("non_bijective_shifts", b.non_bijective_shifts as f64, None);
    r.pass = b.pass();
    Ok(finish(r, start))
}

/// Exhaustive check that reversal maps Dyck paths of every half-length up
/// to `n` onto themselves.
pub fn verify_time_reversal_exact(n: usize) -> CliResult<TestReport> {
    let start = Instant::now();
    if n == 0 || n > 12 {
        return Err(CliError::Input(format!("n must lie in 1..=12, got {n}")));
    }
    let mut r = TestReport::new("time-reversal", Mode::Exact, None).param("n", n as u64);
    let mut failures = 0;
    for m in 1..=n {
        if !time_reversal_exact(m)? {
            failures += 1;
        }
    }
    r.push_stat("failed_sizes", failures as f64, None);
    r.pass = failures == 0;
    Ok(finish(r, start))
}

/// The rational re-rooting identity for each functional and weight over all
/// trees with at most `n_max` edges.
pub fn verify_prop1_exact(n_max: usize, functionals: &[ShiftFunctional], weights: &[SigmaWeight]) -> CliResult<TestReport> {
    let start = Instant::now();
    let ids = prop1_identities(n_max, functionals, weights)?;
    let mut r = TestReport::new("prop1", Mode::Exact, None)
        .param("n_max", n_max as u64)
        .param("functionals", functionals.len() as u64)
        .param("weights", weights.len() as u64);
    let mut values = serde_json::Map::new();
    for id in &ids {
        let name = format!("{} | {}", id.functional.name(), id.weight);
        let diff = id.rerooted - id.plain;
        r.push_stat(name.clone(), *diff.numer() as f64 / *diff.denom() as f64, None);
        values.insert(name, Value::from(vec![id.rerooted.to_string(), id.plain.to_string()]));
    }
    r.set_param("values", Value::Object(values));
    r.pass = ids.iter().all(|id| id.holds());
    Ok(finish(r, start))
}

/// [`verify_prop1_exact`] with the default functionals and weights.
pub fn verify_prop1_default(n_max: usize) -> CliResult<TestReport> {
    verify_prop1_exact(n_max, &default_prop1_functionals(), &default_prop1_weights())
}

#[cfg(test)]
mod tests {
    use super::*;
    use levytree_core::functional::FunctionalSpec;

    fn cfg(grid: usize, replicas: usize, seed: u64) -> McConfig {
        McConfig::new(grid, replicas, seed).unwrap()
    }

    #[test]
    fn replicas_are_ordered_and_worker_independent() {
        let a = Runner::new(Some(1)).unwrap().replicas(3, 0..50, |rng| Ok(rng.random::<u64>())).unwrap();
        let b = Runner::new(Some(3)).unwrap().replicas(3, 0..50, |rng| Ok(rng.random::<u64>())).unwrap();
        assert_eq!(a.values, b.values);
        let c = Runner::new(None).unwrap().replicas(3, 10..20, |rng| Ok(rng.random::<u64>())).unwrap();
        assert_eq!(c.values, a.values[10..20]);
    }

    #[test]
    fn retryable_errors_are_retried() {
        let r = Runner::new(Some(2)).unwrap();
        let out = r
            .replicas(1, 0..200, |rng| {
                if rng.random::<f64>() < 0.5 {
                    Err(levytree_core::Error::BudgetExceeded { what: "test", budget: 1 })
                } else {
                    Ok(())
                }
            })
            .unwrap();
        assert_eq!(out.values.len(), 200);
        assert!(out.retries > 100);
        let fatal = r.replicas(1, 0..10, |_| -> levytree_core::Result<()> { Err(levytree_core::Error::Input("bad".into())) });
        assert!(fatal.is_err());
    }

    #[test]
    fn same_replicas_at_zero_shift_give_zero_statistics() {
        let mut spec = FixedS::new(LevyModel::brownian(), 0.0);
        spec.same_replicas = true;
        let r = verify_fixed_s_mc(&spec, &cfg(64, 100, 9)).unwrap();
        assert!(r.pass);
        assert!(r.stats.iter().all(|s| s.statistic == 0.0 && s.p == Some(1.0)));
        assert_eq!(r.params["tests"], 6);
    }

    #[test]
    fn fixed_s_small_run() {
        let r = verify_fixed_s_mc(&FixedS::new(LevyModel::brownian(), 0.3), &cfg(128, 400, 1)).unwrap();
        assert_eq!(r.stats.len(), 6);
        assert_eq!(r.params["shift_index"], 38);
        assert!(r.pass, "{r}");
        assert!(verify_fixed_s_mc(&FixedS::new(LevyModel::brownian(), 1.0), &cfg(128, 100, 1)).is_err());
        let many = verify_fixed_s_many(&FixedS::new(LevyModel::brownian(), 0.0), &[0.1, 0.3], &cfg(128, 400, 1)).unwrap();
        assert_eq!(many[1].without_timing(), r.without_timing());
        assert!(verify_fixed_s_mc(&FixedS::new(LevyModel::brownian(), 0.5), &cfg(127, 100, 1)).is_err());
    }

    #[test]
    fn degenerate_triplet_has_equal_first_marginals() {
        let spec = Triplet { sampler: Sampler::Gw, times: Some((0.5, 0.5)) };
        let r = verify_triplet(&spec, &cfg(64, 100, 2)).unwrap();
        assert_eq!(r.stats[0].functional, "ks(A,B)");
        assert_eq!((r.stats[0].statistic, r.stats[0].p), (0.0, Some(1.0)));
    }

    #[test]
    fn ise_rows_and_range() {
        let (r, rows) = verify_ise(Sampler::Gw, 20, &cfg(64, 100, 3)).unwrap();
        assert_eq!(rows.len(), 100);
        assert!(rows.iter().all(|x| (0.0..=1.0).contains(&x.right_mass) && x.k == 20));
        assert_eq!(r.suite, "ise");
        assert!(verify_ise(Sampler::Gw, 0, &cfg(64, 100, 3)).is_err());
    }

    #[test]
    fn exact_suites() {
        let r = verify_reroot_bijection(3).unwrap();
        assert!(r.pass);
        assert_eq!((r.params["paths"].as_u64(), r.params["checks"].as_u64()), (Some(5), Some(35)));
        assert!(r.stats.iter().all(|s| s.p.is_none()));
        assert!(verify_reroot_bijection(11).is_err());
        assert!(verify_time_reversal_exact(8).unwrap().pass);
        let r = verify_prop1_exact(4, &[ShiftFunctional::new(levytree_core::exact::TimeWeight::One, FunctionalSpec::Area)], &[SigmaWeight::One])
            .unwrap();
        assert!(r.pass);
        assert_eq!(r.stats.len(), 1);
    }

    #[test]
    fn spine_identity_suite() {
        let r = verify_spine_identities(&cfg(2, 500, 4)).unwrap();
        assert!(r.pass, "{r}");
        assert_eq!(r.mode, Mode::Exact);
    }

    #[test]
    fn tree_draws_stay_on_the_lattice() {
        let source = Source::new(LevyModel::brownian(), Sampler::Gw, 64).unwrap();
        let f = source.gw.height_factor(32);
        let on_lattice = |x: f64| x == (x / f).round() * f;
        for i in 0..200 {
            let mut rng = levytree_core::rng::substream(8, i);
            let d = source.draw(&mut rng).unwrap();
            let k = rng.random_range(0..=64);
            assert!(d.reroot_at(k).unwrap().samples().iter().all(|&x| on_lattice(x)));
            let (a, b, c) = d.triplet_at(k, 64 - k).unwrap();
            assert!(on_lattice(a) && on_lattice(b) && on_lattice(c));
        }
        // Rounding in the float re-rooting moves some values off the lattice.
        let mut off = 0;
        for i in 0..200 {
            let d = source.draw(&mut levytree_core::rng::substream(8, i)).unwrap();
            off += (0..=64).filter(|&k| d.excursion().reroot_at(k).samples().iter().any(|&x| !on_lattice(x))).count();
        }
        assert!(off > 0);
    }

    #[test]
    fn isometry_suite() {
        let r = verify_isometry(Sampler::Gw, 3, 5, &cfg(256, 100, 5)).unwrap();
        assert!(r.pass, "{:?}", r.stats);
        // Grid Brownian paths only approximate the re-rooted tree.
        let r = verify_isometry(Sampler::Brownian, 3, 5, &cfg(16, 100, 5)).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn key2_small_run() {
        let mut spec = Key2::new(FiniteMeasure::lebesgue(1.0).unwrap(), 0.5);
        spec.budget = 10_000;
        let r = verify_key2(&spec, &cfg(2, 300, 6)).unwrap();
        assert_eq!(r.params["scheme"], "reflected");
        assert_eq!(r.stats.len(), 6);
        assert!(r.pass, "{r}");
        assert_eq!(parse_rule("records").unwrap(), SpineHeight::WeakRecords);
        assert!(parse_rule("other").is_err());
    }
}
