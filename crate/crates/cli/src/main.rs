mod experiment;
mod pipeline;

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use epsfc::distributions::lambda_of;
use epsfc::instances::{generate, GeneratorSpec};
use epsfc::io::{
    game_to_json, parse_dist, parse_game, parse_partition, partition_to_json, read_samples, write_samples,
};
use epsfc::learning::draw_samples;
use epsfc::stabilizers::{choose_epsilon_floor, EpsClass};
use epsfc::verification::{exact_blocking_with_mass, mc_blocking};
use epsfc::{CoalitionDistribution, DistSpec, Error, Game};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::pipeline::{Input, Params};

#[derive(Parser)]
#[command(name = "epsfc", version, about = "Epsilon-fractional core stability experiments for hedonic games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a game file.
    Gen(GenArgs),
    /// Draw coalitions from a distribution and record member values as JSON lines.
    Sample(SampleArgs),
    /// Build a partition from a game or from samples.
    Stabilize(StabilizeArgs),
    /// Measure the blocking fraction or mass of a partition.
    Verify(VerifyArgs),
    /// Run generate, sample, learn, stabilize and verify over a parameter grid.
    Experiment(experiment::ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    FhgRandom,
    AnonRandom,
    AnonSpRandom,
    AnonSpSearch,
    FhgExtend,
    AnonSpExtend,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    /// Arc probability for random FHGs.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    max_attempts: u64,
    /// Base game for the extension kinds.
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SampleArgs {
    #[arg(long)]
    game: PathBuf,
    /// Distribution spec as a JSON file or inline JSON (default uniform).
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct StabilizeArgs {
    #[arg(long, value_parser = parse_class)]
    class: EpsClass,
    #[arg(long, required_unless_present = "samples", conflicts_with = "samples")]
    game: Option<PathBuf>,
    /// JSON-lines samples; the matching learner runs first.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Number of agents for sample input (default: largest agent seen).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Overrides the distribution's bound.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated size ordering for anon-sp (default 1,2,…,n).
    #[arg(long, value_delimiter = ',')]
    ordering: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    #[arg(long)]
    dist: Option<String>,
    /// Estimate by Monte Carlo with this many draws instead of enumerating.
    #[arg(long)]
    mc: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_class)]
    class: Option<EpsClass>,
    /// Exit with code 5 when the partition is not eps-fractional core stable.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// CSV file to append a row to.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_class(s: &str) -> Result<EpsClass, String> {
    s.parse()
}

/// Error with its process exit code.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::GuardExceeded { .. } => 3,
        Error::Underdetermined { .. } | Error::InconsistentSample(_) | Error::NoSamples | Error::EmptyInterval(_) => 4,
        Error::NotFound { .. } | Error::Io(_) => 1,
        _ => 2,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), error: e.into() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 1, error: e.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::usage)
}

pub fn load_game(path: &Path) -> Result<(Game, Option<Value>), Failure> {
    parse_game(&read_text(path)?).map_err(|e| Failure::usage(anyhow!("{}: {e}", path.display())))
}

/// Accepts a path to a JSON file or the JSON itself.
pub fn load_dist(arg: Option<&str>, n: usize) -> Result<CoalitionDistribution, Failure> {
    let spec = match arg {
        None => DistSpec::Uniform,
        Some(s) if s.trim_start().starts_with('{') => parse_dist(s)?,
        Some(path) => parse_dist(&read_text(Path::new(path))?)?,
    };
    Ok(spec.build(n)?)
}

fn write_output(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")),
        None => writeln!(io::stdout().lock(), "{text}"),
    }
}

fn check_unit(name: &str, x: f64) -> Result<(), Failure> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Failure::usage(anyhow!("--{name} must lie in (0, 1), got {x}")))
    }
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let spec = match a.kind {
        Kind::FhgRandom => GeneratorSpec::FhgRandom { n: a.n, p: a.p, seed: a.seed },
        Kind::AnonRandom => GeneratorSpec::AnonRandom { n: a.n, seed: a.seed },
        Kind::AnonSpRandom => GeneratorSpec::AnonSpRandom { n: a.n, seed: a.seed },
        Kind::AnonSpSearch => GeneratorSpec::AnonSpSearch { n: a.n, seed: a.seed, max_attempts: a.max_attempts },
        Kind::FhgExtend => GeneratorSpec::FhgExtend { n: a.n },
        Kind::AnonSpExtend => GeneratorSpec::AnonSpExtend { n: a.n },
    };
    let base = a.base.as_deref().map(load_game).transpose()?.map(|(g, _)| g);
    let generated = generate(&spec, base.as_ref())?;
    write_output(a.out.as_deref(), &game_to_json(&generated.game, Some(generated.provenance)))?;
    Ok(())
}

fn cmd_sample(a: SampleArgs) -> CmdResult {
    let (game, _) = load_game(&a.game)?;
    let dist = load_dist(a.dist.as_deref(), game.n())?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let records = draw_samples(&game, &dist, a.m, &mut rng);
    match &a.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_samples(&mut w, &records)?;
            w.flush()?;
        }
        None => write_samples(io::stdout().lock(), &records)?,
    }
    Ok(())
}

/// Single-peaked ordering recorded by the generator, if any.
fn recorded_ordering(provenance: &Option<Value>) -> Option<Vec<usize>> {
    let v = provenance.as_ref()?.get("single_peaked")?.get("ordering")?;
    serde_json::from_value(v.clone()).ok()
}

fn cmd_stabilize(a: StabilizeArgs) -> CmdResult {
    check_unit("eps", a.eps)?;
    let (game, provenance, records) = match (&a.game, &a.samples) {
        (Some(path), _) => {
            let (g, prov) = load_game(path)?;
            (Some(g), prov, Vec::new())
        }
        (None, Some(path)) => {
            let file =
                File::open(path).with_context(|| format!("opening {}", path.display())).map_err(Failure::usage)?;
            (None, None, read_samples(BufReader::new(file))?)
        }
        (None, None) => unreachable!("clap requires --game or --samples"),
    };
    let n = match (&game, a.n) {
        (Some(g), _) => g.n(),
        (None, Some(n)) => n,
        (None, None) => records.iter().filter_map(|r| r.coalition().members().last()).max().map_or(0, |a| a + 1),
    };
    let dist = load_dist(a.dist.as_deref(), n)?;
    let lambda = match a.lambda {
        Some(l) if l >= 1.0 => l,
        Some(l) => return Err(Failure::usage(anyhow!("--lambda must be at least 1, got {l}"))),
        None => lambda_of(&dist).unwrap_or(1.0),
    };
    let params = Params {
        class: a.class,
        eps: a.eps,
        lambda,
        alpha: a.alpha,
        dist: &dist,
        ordering: a.ordering.clone().or_else(|| recorded_ordering(&provenance)),
    };
    let input = match &game {
        Some(g) => Input::Game(g),
        None => Input::Samples { n, records: &records },
    };
    let out = pipeline::stabilize(input, &params)?;
    write_output(a.out.as_deref(), &partition_to_json(&out.partition))?;
    if let Some(path) = &a.trace {
        fs::write(path, serde_json::to_string_pretty(&out.trace).expect("trace serializes") + "\n")?;
    }
    Ok(())
}

const VERIFY_HEADER: [&str; 9] = ["n", "class", "eps_floor", "fraction", "mass", "p_hat", "ci", "seed", "wall_ms"];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    check_unit("delta", a.delta)?;
    if let Some(jobs) = a.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(|e| Failure::usage(e.into()))?;
    }
    let (game, _) = load_game(&a.game)?;
    let n = game.n();
    let partition = parse_partition(&read_text(&a.partition)?, n)?;
    let dist = load_dist(a.dist.as_deref(), n)?;
    let class = a.class.unwrap_or(match game {
        Game::Fhg(_) => EpsClass::Fhg,
        Game::Anon(_) => EpsClass::Anon,
    });
    let lambda = a.lambda.unwrap_or_else(|| lambda_of(&dist).unwrap_or(1.0));
    let floor = choose_epsilon_floor(n, lambda, class);

    let start = Instant::now();
    let (report, measured, lower) = match a.mc {
        None => {
            let r = exact_blocking_with_mass(&game, &partition, &dist)?;
            let mass = r.mass.expect("mass requested");
            let row = (Some(r.fraction), Some(mass), None, None);
            (json!({"mode": "exact", "report": r}), row, mass)
        }
        Some(m) => {
            let e = mc_blocking(&game, &partition, &dist, m, a.delta, a.seed)?;
            let row = (None, None, Some(e.p_hat), Some(e.ci_halfwidth));
            let lower = e.p_hat - e.ci_halfwidth;
            (json!({"mode": "mc", "estimate": e}), row, lower)
        }
    };
    let wall_ms = start.elapsed().as_millis();

    let violated = a.eps.is_some_and(|eps| lower > eps);
    let summary =
        json!({"n": n, "class": class, "eps_floor": floor, "eps": a.eps, "violated": violated, "result": report});
    println!("{}", serde_json::to_string_pretty(&summary).expect("report serializes"));

    if let Some(path) = &a.out {
        let fresh = fs::metadata(path).map_or(true, |m| m.len() == 0);
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = csv::Writer::from_writer(file);
        let to_failure = |e: csv::Error| Failure { code: 1, error: e.into() };
        if fresh {
            w.write_record(VERIFY_HEADER).map_err(to_failure)?;
        }
        let (fraction, mass, p_hat, ci) = measured;
        w.write_record([
            n.to_string(),
            class.to_string(),
            floor.to_string(),
            opt(fraction),
            opt(mass),
            opt(p_hat),
            opt(ci),
            a.seed.to_string(),
            wall_ms.to_string(),
        ])
        .map_err(to_failure)?;
        w.flush()?;
    }
    if violated {
        return Err(Failure { code: 5, error: anyhow!("blocking mass exceeds eps = {}", a.eps.unwrap_or_default()) });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Stabilize(a) => cmd_stabilize(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Experiment(a) => experiment::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
