//! Parameter sweeps. Each (n, ε) cell runs generate → sample → learn →
//! stabilize → verify under its own derived seed and yields one CSV row.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{anyhow, Context};
use epsfc::instances::{random_anon, random_anon_sp, random_fhg};
use epsfc::learning::{anon_sample_size, draw_samples, fhg_sample_size};
use epsfc::seeds::derive_seed;
use epsfc::stabilizers::{choose_epsilon_floor, EpsClass};
use epsfc::verification::{exact_blocking_with_mass, mc_blocking};
use epsfc::{CoalitionDistribution, DistSpec, Error, Game};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pipeline::{self, Input, Params};
use crate::Failure;

#[derive(clap::Args)]
pub struct ExperimentArgs {
    /// JSON experiment configuration.
    config: PathBuf,
    /// CSV output; existing rows are kept and their cells skipped.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the configured sample count.
    #[arg(long)]
    m: Option<usize>,
    /// Overrides the configured Monte Carlo draw count.
    #[arg(long)]
    mc: Option<usize>,
}

fn default_delta() -> f64 {
    0.1
}

fn default_lambda() -> f64 {
    1.0
}

fn default_p() -> f64 {
    0.5
}

fn default_mc() -> usize {
    10_000
}

/// Grid over `n × eps`; the remaining fields are shared by all cells.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub class: EpsClass,
    pub n: Vec<usize>,
    pub eps: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Arc probability for FHG instances.
    #[serde(default = "default_p")]
    pub p: f64,
    /// Default: uniform when `lambda = 1`, a linear size tilt otherwise.
    #[serde(default)]
    pub dist: Option<DistSpec>,
    /// Sample count; default is the class's sample-complexity bound.
    #[serde(default)]
    pub m: Option<usize>,
    /// Forces Monte Carlo verification with this many draws.
    #[serde(default)]
    pub mc: Option<usize>,
}

impl ExperimentConfig {
    fn validate(&self) -> anyhow::Result<()> {
        for &e in self.eps.iter().chain([&self.delta]) {
            if !(e > 0.0 && e < 1.0) {
                return Err(anyhow!("eps and delta must lie in (0, 1), got {e}"));
            }
        }
        if self.lambda < 1.0 {
            return Err(anyhow!("lambda must be at least 1, got {}", self.lambda));
        }
        if self.n.iter().any(|&n| n < 2) {
            return Err(anyhow!("every n must be at least 2"));
        }
        Ok(())
    }

    fn dist(&self, n: usize) -> epsfc::Result<CoalitionDistribution> {
        match &self.dist {
            Some(spec) => spec.build(n),
            None if self.lambda > 1.0 => DistSpec::linear_tilt(n, self.lambda).build(n),
            None => CoalitionDistribution::uniform(n),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct Row {
    cell: usize,
    n: usize,
    class: String,
    eps: f64,
    delta: f64,
    lambda: f64,
    seed: u64,
    m: Option<usize>,
    eps_floor: f64,
    blocks: Option<usize>,
    interval_len: Option<usize>,
    fraction: Option<f64>,
    mass: Option<f64>,
    p_hat: Option<f64>,
    ci: Option<f64>,
    within_eps: Option<bool>,
    status: String,
    error: String,
}

struct Cell {
    index: usize,
    n: usize,
    eps: f64,
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell, root: u64) -> Row {
    let seed = derive_seed(root, "experiment", cell.index as u64);
    let mut row = Row {
        cell: cell.index,
        n: cell.n,
        class: cfg.class.to_string(),
        eps: cell.eps,
        delta: cfg.delta,
        lambda: cfg.lambda,
        seed,
        eps_floor: choose_epsilon_floor(cell.n, cfg.lambda, cfg.class),
        ..Row::default()
    };
    match fill_row(cfg, cell, seed, &mut row) {
        Ok(()) => row.status = "ok".into(),
        Err(e) => {
            row.status = "failed".into();
            row.error = e.to_string();
        }
    }
    row
}

fn fill_row(cfg: &ExperimentConfig, cell: &Cell, seed: u64, row: &mut Row) -> epsfc::Result<()> {
    let n = cell.n;
    let gen_seed = derive_seed(seed, "gen", 0);
    let (game, ordering) = match cfg.class {
        EpsClass::Fhg => (Game::Fhg(random_fhg(n, cfg.p, gen_seed)?), None),
        EpsClass::Anon => (Game::Anon(random_anon(n, gen_seed)), None),
        EpsClass::AnonSp => {
            let (g, cert) = random_anon_sp(n, gen_seed);
            (Game::Anon(g), Some(cert.ordering))
        }
    };
    let dist = cfg.dist(n)?;
    let m = cfg.m.unwrap_or_else(|| match cfg.class {
        EpsClass::Fhg => fhg_sample_size(n, cfg.delta),
        _ => anon_sample_size(n, cfg.delta, cell.eps, cfg.lambda),
    });
    row.m = Some(m);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "sample", 0));
    let records = draw_samples(&game, &dist, m, &mut rng);
    let params =
        Params { class: cfg.class, eps: cell.eps, lambda: cfg.lambda, alpha: cfg.alpha, dist: &dist, ordering };
    let out = pipeline::stabilize(Input::Samples { n, records: &records }, &params)?;
    row.blocks = Some(out.partition.blocks().len());
    row.interval_len = out.interval.as_ref().map(|i| i.len());

    let exact = match cfg.mc {
        Some(_) => None,
        None => match exact_blocking_with_mass(&game, &out.partition, &dist) {
            Ok(r) => Some(r),
            Err(Error::GuardExceeded { .. }) => None,
            Err(e) => return Err(e),
        },
    };
    match exact {
        Some(r) => {
            let mass = r.mass.expect("mass requested");
            row.fraction = Some(r.fraction);
            row.mass = Some(mass);
            row.within_eps = Some(mass <= cell.eps);
        }
        None => {
            let draws = cfg.mc.unwrap_or_else(default_mc);
            let e = mc_blocking(&game, &out.partition, &dist, draws, cfg.delta, derive_seed(seed, "mc", 0))?;
            row.within_eps = Some(e.p_hat - e.ci_halfwidth <= cell.eps);
            row.p_hat = Some(e.p_hat);
            row.ci = Some(e.ci_halfwidth);
        }
    }
    Ok(())
}

/// Cell indices already present in an existing output file.
fn finished_cells(path: &Path) -> anyhow::Result<HashSet<usize>> {
    if fs::metadata(path).map_or(true, |m| m.len() == 0) {
        return Ok(HashSet::new());
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut done = HashSet::new();
    for row in reader.deserialize::<Row>() {
        done.insert(row.with_context(|| format!("{} is not an experiment CSV", path.display()))?.cell);
    }
    Ok(done)
}

/// Writes rows in cell order as they complete.
struct Appender {
    writer: csv::Writer<File>,
    next: usize,
    ready: BTreeMap<usize, Row>,
    error: Option<csv::Error>,
}

impl Appender {
    fn push(&mut self, k: usize, row: Row) {
        self.ready.insert(k, row);
        while let Some(row) = self.ready.remove(&self.next) {
            self.next += 1;
            if self.error.is_none() {
                if let Err(e) = self.writer.serialize(row).and_then(|()| self.writer.flush().map_err(Into::into)) {
                    self.error = Some(e);
                }
            }
        }
    }
}

pub fn run(a: ExperimentArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))
        .map_err(Failure::usage)?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", a.config.display()))
        .map_err(Failure::usage)?;
    cfg.m = a.m.or(cfg.m);
    cfg.mc = a.mc.or(cfg.mc);
    cfg.validate().map_err(Failure::usage)?;

    let done = finished_cells(&a.out).map_err(Failure::usage)?;
    let cells: Vec<Cell> = cfg
        .n
        .iter()
        .flat_map(|&n| cfg.eps.iter().map(move |&eps| (n, eps)))
        .enumerate()
        .map(|(index, (n, eps))| Cell { index, n, eps })
        .filter(|c| !done.contains(&c.index))
        .collect();

    let fresh = done.is_empty();
    let file = OpenOptions::new().create(true).append(true).open(&a.out)?;
    let writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    let appender = Mutex::new(Appender { writer, next: 0, ready: BTreeMap::new(), error: None });

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::usage(e.into()))?;
    pool.install(|| {
        cells.par_iter().enumerate().for_each(|(k, cell)| {
            let row = run_cell(&cfg, cell, a.seed);
            appender.lock().expect("appender lock").push(k, row);
        })
    });

    let appender = appender.into_inner().expect("appender lock");
    if let Some(e) = appender.error {
        return Err(Failure { code: 1, error: e.into() });
    }
    eprintln!("{} cells run, {} already present", cells.len(), done.len());
    Ok(())
}
