//! Instance generators: random games, empty-core search and the block
//! extensions that lift a small empty-core game to any size.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{
    check_single_peaked, natural_ordering, AnonymousHg, Game, HedonicGame, SimpleFhg, SinglePeakedCertificate,
};
use crate::seeds::derive_seed;
use crate::verification::certify_empty_core;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Each arc `i → j`, `i ≠ j`, present independently with probability `p`.
pub fn random_fhg(n: usize, p: f64, seed: u64) -> Result<SimpleFhg> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("arc probability {p} outside [0, 1]")));
    }
    let mut rng = rng_for(seed);
    let adj: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| rng.gen_bool(p) && i != j).collect()).collect();
    SimpleFhg::from_matrix(&adj)
}

/// Each agent ranks the sizes `1..=n` by a uniform random permutation;
/// values are the ranks `1..=n`, so they are distinct per agent.
pub fn random_anon(n: usize, seed: u64) -> AnonymousHg {
    let mut rng = rng_for(seed);
    let rows = (0..n)
        .map(|_| {
            let mut ranks: Vec<f64> = (1..=n).map(|r| r as f64).collect();
            ranks.shuffle(&mut rng);
            ranks
        })
        .collect();
    AnonymousHg::new(rows).expect("rank table is well formed")
}

/// Single-peaked in the natural ordering: a uniform peak per agent, then the
/// sizes below and above it interleaved uniformly at random, so values fall
/// strictly with distance from the peak on each side.
pub fn random_anon_sp(n: usize, seed: u64) -> (AnonymousHg, SinglePeakedCertificate) {
    let mut rng = rng_for(seed);
    let rows = (0..n)
        .map(|_| {
            let peak = rng.gen_range(1..=n);
            let mut row = vec![0.0; n];
            let (mut lo, mut hi) = (peak - 1, peak + 1);
            let mut value = n as f64;
            row[peak - 1] = value;
            while lo >= 1 || hi <= n {
                let left = lo;
                let right = n + 1 - hi;
                value -= 1.0;
                if rng.gen_range(0..left + right) < left {
                    row[lo - 1] = value;
                    lo -= 1;
                } else {
                    row[hi - 1] = value;
                    hi += 1;
                }
            }
            row
        })
        .collect();
    let game = AnonymousHg::new(rows).expect("values are finite");
    let cert = check_single_peaked(&game, &natural_ordering(n)).expect("construction is single-peaked");
    (game, cert)
}

/// A single-peaked empty-core instance together with where it was found.
#[derive(Clone, Debug)]
pub struct EmptyCoreHit {
    pub game: AnonymousHg,
    pub certificate: SinglePeakedCertificate,
    /// Attempt index of the hit; attempt `k` uses `derive_seed(seed, label, k)`.
    pub attempt: u64,
    pub seed: u64,
}

pub const SP_SEARCH_LABEL: &str = "anon-sp-search";
const SEARCH_BATCH: u64 = 1024;

/// Seed used for attempt `k` of the single-peaked empty-core search.
pub fn sp_search_seed(seed: u64, attempt: u64) -> u64 {
    derive_seed(seed, SP_SEARCH_LABEL, attempt)
}

/// Random search for a single-peaked game with empty core. The hit with the
/// lowest attempt index wins, independent of scheduling.
pub fn find_empty_core_sp(n: usize, max_attempts: u64, seed: u64) -> Result<EmptyCoreHit> {
    if n > 10 {
        return Err(Error::GuardExceeded { n, limit: 10 });
    }
    let mut start = 0;
    while start < max_attempts {
        let end = (start + SEARCH_BATCH).min(max_attempts);
        let hit = (start..end).into_par_iter().find_first(|&k| {
            let (g, _) = random_anon_sp(n, sp_search_seed(seed, k));
            certify_empty_core(&Game::Anon(g)).unwrap_or(false)
        });
        if let Some(attempt) = hit {
            let (game, certificate) = random_anon_sp(n, sp_search_seed(seed, attempt));
            return Ok(EmptyCoreHit { game, certificate, attempt, seed });
        }
        start = end;
    }
    Err(Error::NotFound { attempts: max_attempts })
}

/// Random search for a simple FHG with empty core; returns the game and the
/// attempt index.
pub fn find_empty_core_fhg(n: usize, p: f64, max_attempts: u64, seed: u64) -> Result<(SimpleFhg, u64)> {
    if n > 10 {
        return Err(Error::GuardExceeded { n, limit: 10 });
    }
    let hit = (0..max_attempts).into_par_iter().find_first(|&k| {
        random_fhg(n, p, derive_seed(seed, "fhg-search", k))
            .map(|g| certify_empty_core(&Game::Fhg(g)).unwrap_or(false))
            .unwrap_or(false)
    });
    match hit {
        Some(k) => Ok((random_fhg(n, p, derive_seed(seed, "fhg-search", k))?, k)),
        None => Err(Error::NotFound { attempts: max_attempts }),
    }
}

/// Base graph on the first `base.n()` agents, a complete digraph on the rest,
/// no arcs between the two groups.
pub fn extend_fhg(base: &SimpleFhg, n: usize) -> Result<SimpleFhg> {
    let b = base.n();
    if n <= b {
        return Err(Error::InvalidParameter(format!("extension size {n} must exceed the base size {b}")));
    }
    let mut out: Vec<Coalition> = (0..b).map(|i| base.neighbors(i).clone()).collect();
    for i in b..n {
        out.push((b..n).filter(|&j| j != i).collect());
    }
    Ok(SimpleFhg::from_neighborhoods(n, out))
}

/// Base agents keep their values on `1..=base.n()` and rank every larger size
/// below their base minimum, decreasing in size; new agents value size `s` at
/// `s`, so they peak at `n`.
pub fn extend_anon_sp(base: &AnonymousHg, n: usize) -> Result<(AnonymousHg, SinglePeakedCertificate)> {
    let b = base.n();
    if n <= b {
        return Err(Error::InvalidParameter(format!("extension size {n} must exceed the base size {b}")));
    }
    check_single_peaked(base, &natural_ordering(b))
        .map_err(|v| Error::InvalidGame(format!("base is not single-peaked in the natural ordering: {v}")))?;
    let mut rows: Vec<Vec<f64>> = base
        .rows()
        .iter()
        .map(|row| {
            let floor = row.iter().copied().fold(f64::INFINITY, f64::min);
            let mut ext = row.clone();
            ext.extend((1..=n - b).map(|k| floor - k as f64));
            ext
        })
        .collect();
    rows.extend((b..n).map(|_| (1..=n).map(|s| s as f64).collect::<Vec<_>>()));
    let game = AnonymousHg::new(rows)?;
    let cert = check_single_peaked(&game, &natural_ordering(n)).expect("extension keeps single-peakedness");
    Ok((game, cert))
}

/// Every non-empty subset of the base agents plus the block of added agents.
pub fn adversarial_family(base_n: usize, n: usize) -> Vec<Coalition> {
    assert!(base_n < 63 && base_n < n, "family is listed explicitly");
    let mut family: Vec<Coalition> = (1u64..1 << base_n).map(Coalition::from_mask).collect();
    family.push((base_n..n).collect());
    family
}

/// What to generate; serialized into the output file as provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    FhgRandom { n: usize, p: f64, seed: u64 },
    AnonRandom { n: usize, seed: u64 },
    AnonSpRandom { n: usize, seed: u64 },
    AnonSpSearch { n: usize, seed: u64, max_attempts: u64 },
    FhgExtend { n: usize },
    AnonSpExtend { n: usize },
}

/// A generated game with its provenance record.
#[derive(Clone, Debug)]
pub struct Generated {
    pub game: Game,
    pub certificate: Option<SinglePeakedCertificate>,
    pub provenance: Value,
}

/// Runs a generator. Extension kinds need `base`.
pub fn generate(spec: &GeneratorSpec, base: Option<&Game>) -> Result<Generated> {
    let mut provenance = json!({ "generator": spec });
    let (game, certificate) = match spec {
        GeneratorSpec::FhgRandom { n, p, seed } => (Game::Fhg(random_fhg(*n, *p, *seed)?), None),
        GeneratorSpec::AnonRandom { n, seed } => (Game::Anon(random_anon(*n, *seed)), None),
        GeneratorSpec::AnonSpRandom { n, seed } => {
            let (g, c) = random_anon_sp(*n, *seed);
            (Game::Anon(g), Some(c))
        }
        GeneratorSpec::AnonSpSearch { n, seed, max_attempts } => {
            let hit = find_empty_core_sp(*n, *max_attempts, *seed)?;
            provenance["attempt"] = json!(hit.attempt);
            provenance["attempts_used"] = json!(hit.attempt + 1);
            provenance["empty_core"] = json!(true);
            (Game::Anon(hit.game), Some(hit.certificate))
        }
        GeneratorSpec::FhgExtend { n } => match base {
            Some(Game::Fhg(b)) => {
                provenance["base_n"] = json!(b.n());
                (Game::Fhg(extend_fhg(b, *n)?), None)
            }
            _ => return Err(Error::InvalidParameter("fhg-extend needs a simple FHG base".into())),
        },
        GeneratorSpec::AnonSpExtend { n } => match base {
            Some(Game::Anon(b)) => {
                provenance["base_n"] = json!(b.n());
                let (g, c) = extend_anon_sp(b, *n)?;
                (Game::Anon(g), Some(c))
            }
            _ => return Err(Error::InvalidParameter("anon-sp-extend needs an anonymous base".into())),
        },
    };
    if let Some(c) = &certificate {
        provenance["single_peaked"] = json!(c);
    }
    Ok(Generated { game, certificate, provenance })
}
