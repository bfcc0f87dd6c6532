//! Exact and sampled measurement of how many coalitions block a partition.
//!
//! Exhaustive scans walk all `2^n − 1` coalitions as `u64` masks. The mask
//! space is split on its top bits into independent chunks handled in
//! parallel; inside a chunk the low bits follow a Gray code so each step
//! toggles one agent and simple FHG neighbour counts update in place.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coalition::{AgentId, Coalition};
use crate::distributions::{CoalitionDistribution, SizeInterval};
use crate::error::{Error, Result};
use crate::game::{AnonymousHg, BlockingOracle, Game, HedonicGame, SimpleFhg, SizeValuations};
use crate::io::one_based;
use crate::limits::Limits;
use crate::partition::{for_each_set_partition, Partition};
use crate::stabilizers::AnonStabilizerTrace;

pub const WITNESS_CAP: usize = 100;

/// Incremental blocking test over a Gray-code walk.
trait Scan: Sync {
    type State: Send;
    fn init(&self, mask: u64) -> Self::State;
    fn toggle(&self, state: &mut Self::State, agent: usize, added: bool);
    fn blocks(&self, state: &Self::State, mask: u64, size: usize) -> bool;
}

struct FhgScan {
    /// `in_nb[j]` = agents having `j` as a neighbour.
    in_nb: Vec<Vec<usize>>,
    out: Vec<u64>,
    /// Current utility `num[i] / den[i]`.
    num: Vec<u64>,
    den: Vec<u64>,
}

impl FhgScan {
    fn new(game: &SimpleFhg, partition: &Partition) -> Self {
        let n = game.n();
        let mut in_nb = vec![Vec::new(); n];
        for i in 0..n {
            for j in game.neighbors(i).members() {
                in_nb[j].push(i);
            }
        }
        let out = (0..n).map(|i| game.neighbors(i).as_mask().unwrap_or(0)).collect();
        let (num, den) = (0..n)
            .map(|i| {
                let b = partition.block_of(i);
                (b.intersection_size(game.neighbors(i)) as u64, b.size() as u64)
            })
            .unzip();
        Self { in_nb, out, num, den }
    }
}

impl Scan for FhgScan {
    /// `|S ∩ N_i|` per agent.
    type State = Vec<u32>;

    fn init(&self, mask: u64) -> Vec<u32> {
        self.out.iter().map(|&o| (o & mask).count_ones()).collect()
    }

    fn toggle(&self, counts: &mut Vec<u32>, agent: usize, added: bool) {
        for &i in &self.in_nb[agent] {
            if added {
                counts[i] += 1;
            } else {
                counts[i] -= 1;
            }
        }
    }

    fn blocks(&self, counts: &Vec<u32>, mask: u64, size: usize) -> bool {
        let mut rest = mask;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if counts[i] as u64 * self.den[i] <= self.num[i] * size as u64 {
                return false;
            }
        }
        true
    }
}

struct AnonScan {
    /// `improve[s]` = agents strictly preferring size `s` to their block.
    improve: Vec<u64>,
}

impl AnonScan {
    fn new(game: &AnonymousHg, partition: &Partition) -> Self {
        Self { improve: improve_masks(game, &|i| partition.block_of(i).size()) }
    }
}

fn improve_masks(game: &AnonymousHg, block_size: &dyn Fn(AgentId) -> usize) -> Vec<u64> {
    let n = game.n();
    let current: Vec<f64> = (0..n).map(|i| game.size_value(i, block_size(i))).collect();
    let mut improve = vec![0u64; n + 1];
    for (s, m) in improve.iter_mut().enumerate().skip(1) {
        for (i, &u) in current.iter().enumerate() {
            if game.size_value(i, s) > u {
                *m |= 1 << i;
            }
        }
    }
    improve
}

impl Scan for AnonScan {
    type State = ();

    fn init(&self, _: u64) {}

    fn toggle(&self, _: &mut (), _: usize, _: bool) {}

    fn blocks(&self, _: &(), mask: u64, size: usize) -> bool {
        mask & !self.improve[size] == 0
    }
}

/// Runs `visit` on every blocking coalition; one accumulator per chunk, in
/// ascending chunk order.
fn scan_blockers<S, A, F, V>(scan: &S, n: usize, fresh: F, visit: V) -> Vec<A>
where
    S: Scan,
    A: Send,
    F: Fn() -> A + Sync,
    V: Fn(&mut A, u64, usize) + Sync,
{
    assert!(n <= 63);
    let high = if n > 12 { (n - 12).min(8) } else { 0 };
    let low = n - high;
    (0..1u64 << high)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = fresh();
            let mut mask = chunk << low;
            let mut size = mask.count_ones() as usize;
            let mut state = scan.init(mask);
            if size > 0 && scan.blocks(&state, mask, size) {
                visit(&mut acc, mask, size);
            }
            for t in 1..1u64 << low {
                let bit = t.trailing_zeros() as usize;
                mask ^= 1 << bit;
                let added = mask >> bit & 1 == 1;
                if added {
                    size += 1;
                } else {
                    size -= 1;
                }
                scan.toggle(&mut state, bit, added);
                if size > 0 && scan.blocks(&state, mask, size) {
                    visit(&mut acc, mask, size);
                }
            }
            acc
        })
        .collect()
}

fn with_scan<A, F, V>(game: &Game, partition: &Partition, fresh: F, visit: V) -> Vec<A>
where
    A: Send,
    F: Fn() -> A + Sync,
    V: Fn(&mut A, u64, usize) + Sync,
{
    let n = game.n();
    match game {
        Game::Fhg(g) => scan_blockers(&FhgScan::new(g, partition), n, fresh, visit),
        Game::Anon(g) => scan_blockers(&AnonScan::new(g, partition), n, fresh, visit),
    }
}

fn check_pair(game: &Game, partition: &Partition) -> Result<()> {
    if partition.n() != game.n() {
        return Err(Error::InvalidParameter(format!(
            "partition covers {} agents but the game has {}",
            partition.n(),
            game.n()
        )));
    }
    Ok(())
}

#[derive(Default)]
struct Tally {
    count: u64,
    by_size: Vec<u64>,
    witnesses: Vec<u64>,
}

/// Exhaustive blocking statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockingReport {
    pub n: usize,
    /// `2^n − 1`.
    pub total_coalitions: u64,
    pub blocking_count: u64,
    /// `blocking_count / total_coalitions` as a float, for display.
    pub fraction: f64,
    /// `by_size[s]` = number of blocking coalitions of size `s`.
    pub by_size: Vec<u64>,
    /// Distribution-weighted blocking mass, when a distribution was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    /// First blocking coalitions found, at most [`WITNESS_CAP`].
    #[serde(with = "one_based::coalitions")]
    pub witnesses: Vec<Coalition>,
}

impl BlockingReport {
    /// The blocking fraction in lowest terms.
    pub fn fraction_exact(&self) -> (u64, u64) {
        let g = gcd(self.blocking_count, self.total_coalitions).max(1);
        (self.blocking_count / g, self.total_coalitions / g)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Counts every blocking coalition of `partition`.
pub fn exact_blocking(game: &Game, partition: &Partition) -> Result<BlockingReport> {
    check_pair(game, partition)?;
    let n = game.n();
    Limits::from_env()?.check_enumeration(n)?;
    let tallies = with_scan(
        game,
        partition,
        || Tally { by_size: vec![0; n + 1], ..Tally::default() },
        |t, mask, size| {
            t.count += 1;
            t.by_size[size] += 1;
            if t.witnesses.len() < WITNESS_CAP {
                t.witnesses.push(mask);
            }
        },
    );
    let mut by_size = vec![0u64; n + 1];
    let mut witnesses = Vec::new();
    for t in &tallies {
        for (a, b) in by_size.iter_mut().zip(&t.by_size) {
            *a += b;
        }
        witnesses.extend(t.witnesses.iter().copied().take(WITNESS_CAP - witnesses.len()));
    }
    let blocking_count = tallies.iter().map(|t| t.count).sum();
    let total = (1u64 << n) - 1;
    Ok(BlockingReport {
        n,
        total_coalitions: total,
        blocking_count,
        fraction: blocking_count as f64 / total as f64,
        by_size,
        mass: None,
        witnesses: witnesses.into_iter().map(Coalition::from_mask).collect(),
    })
}

/// `Σ_{S blocks} P(S)`. Explicit supports are checked member by member;
/// the other variants need a full scan.
pub fn exact_blocking_mass(game: &Game, partition: &Partition, dist: &CoalitionDistribution) -> Result<f64> {
    check_pair(game, partition)?;
    if dist.n() != game.n() {
        return Err(Error::InvalidParameter(format!(
            "distribution is over {} agents but the game has {}",
            dist.n(),
            game.n()
        )));
    }
    if let Some(support) = dist.explicit_support() {
        let hits = count_blocking_in(game, partition, support);
        return Ok(hits as f64 / support.len() as f64);
    }
    let report = exact_blocking(game, partition)?;
    Ok(mass_from_report(game, partition, dist, &report))
}

/// Exact report plus distribution mass.
pub fn exact_blocking_with_mass(
    game: &Game,
    partition: &Partition,
    dist: &CoalitionDistribution,
) -> Result<BlockingReport> {
    let mut report = exact_blocking(game, partition)?;
    report.mass = Some(match dist.explicit_support() {
        Some(support) => count_blocking_in(game, partition, support) as f64 / support.len() as f64,
        None => mass_from_report(game, partition, dist, &report),
    });
    Ok(report)
}

fn count_blocking_in(game: &Game, partition: &Partition, coalitions: &[Coalition]) -> u64 {
    match game {
        Game::Fhg(g) => {
            let o = BlockingOracle::new(g, partition);
            coalitions.par_iter().filter(|c| o.blocks(c)).count() as u64
        }
        Game::Anon(g) => {
            let o = BlockingOracle::new(g, partition);
            coalitions.par_iter().filter(|c| o.blocks(c)).count() as u64
        }
    }
}

fn mass_from_report(game: &Game, partition: &Partition, dist: &CoalitionDistribution, report: &BlockingReport) -> f64 {
    if let Some((family, p, lambda)) = dist.adversarial_parts() {
        let on = count_blocking_in(game, partition, family);
        let off = report.blocking_count - on;
        return on as f64 * p + off as f64 * p / lambda;
    }
    report
        .by_size
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| c as f64 * dist.size_point_mass(s).expect("size-determined distribution"))
        .sum()
}

/// Monte Carlo blocking estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub samples: usize,
    pub hits: usize,
    pub p_hat: f64,
    /// Hoeffding half-width `sqrt(ln(2/δ) / (2m))` at confidence `1 − δ`.
    pub ci_halfwidth: f64,
    pub delta: f64,
}

impl McEstimate {
    pub fn contains(&self, p: f64) -> bool {
        (self.p_hat - p).abs() <= self.ci_halfwidth
    }
}

pub const MC_SHARDS: u64 = 16;

pub fn hoeffding_halfwidth(m: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt()
}

/// Samples `m` coalitions and counts those accepted by `blocks`.
///
/// The work is split into fixed shards, each drawing from its own ChaCha
/// stream, so the estimate does not depend on the thread count.
pub fn mc_blocking_with<B>(blocks: B, dist: &CoalitionDistribution, m: usize, delta: f64, seed: u64) -> McEstimate
where
    B: Fn(&Coalition) -> bool + Sync,
{
    assert!(m >= 1, "need at least one sample");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let per = m as u64 / MC_SHARDS;
    let extra = m as u64 % MC_SHARDS;
    let hits: usize = (0..MC_SHARDS)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let draws = per + u64::from(k < extra);
            (0..draws).filter(|_| blocks(&dist.sample(&mut rng))).count()
        })
        .sum();
    McEstimate { samples: m, hits, p_hat: hits as f64 / m as f64, ci_halfwidth: hoeffding_halfwidth(m, delta), delta }
}

pub fn mc_blocking(
    game: &Game,
    partition: &Partition,
    dist: &CoalitionDistribution,
    m: usize,
    delta: f64,
    seed: u64,
) -> Result<McEstimate> {
    check_pair(game, partition)?;
    if dist.n() != game.n() {
        return Err(Error::InvalidParameter("distribution and game disagree on n".into()));
    }
    Ok(match game {
        Game::Fhg(g) => {
            let o = BlockingOracle::new(g, partition);
            mc_blocking_with(|c| o.blocks(c), dist, m, delta, seed)
        }
        Game::Anon(g) => {
            let o = BlockingOracle::new(g, partition);
            mc_blocking_with(|c| o.blocks(c), dist, m, delta, seed)
        }
    })
}

/// Agents whose block size lies in `I` and maximizes their valuation over `I`.
pub fn audit_green_anonymous<V: SizeValuations + ?Sized>(
    view: &V,
    partition: &Partition,
    interval: &SizeInterval,
) -> Result<Vec<AgentId>> {
    let mut green = Vec::new();
    for i in 0..partition.n() {
        let mut best = f64::NEG_INFINITY;
        for &s in &interval.sizes {
            let v = view.size_value_opt(i, s).ok_or_else(|| {
                Error::InvalidParameter(format!("valuation of agent {} at size {s} is unknown", i + 1))
            })?;
            best = best.max(v);
        }
        let own = partition.block_of(i).size();
        if interval.contains(own) && view.size_value_opt(i, own) == Some(best) {
            green.push(i);
        }
    }
    Ok(green)
}

/// Outcome of the structural checks on a single-peaked construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpLemmaReport {
    pub blockers: u64,
    /// Blockers whose size lies in `I`.
    pub blockers_in_interval: u64,
    /// `2^{3n/4 + 1}`.
    pub count_bound: f64,
    /// A blocker of size in `I` meeting `E′`.
    #[serde(with = "one_based::coalitions")]
    pub e_prime_witness: Vec<Coalition>,
    /// A blocker of size in `I` meeting both `L′` and `G′`.
    #[serde(with = "one_based::coalitions")]
    pub mixing_witness: Vec<Coalition>,
}

impl SpLemmaReport {
    pub fn e_prime_avoided(&self) -> bool {
        self.e_prime_witness.is_empty()
    }

    pub fn no_mixing(&self) -> bool {
        self.mixing_witness.is_empty()
    }

    pub fn count_within_bound(&self) -> bool {
        (self.blockers_in_interval as f64) <= self.count_bound
    }

    pub fn passed(&self) -> bool {
        self.e_prime_avoided() && self.no_mixing() && self.count_within_bound()
    }
}

#[derive(Default)]
struct SpTally {
    blockers: u64,
    in_interval: u64,
    e_hit: Option<u64>,
    mix: Option<u64>,
}

/// Enumerates every blocker of a single-peaked construction and checks that
/// blockers with size in `I` avoid `E′`, never meet both `L′` and `G′`, and
/// number at most `2^{3n/4 + 1}`.
pub fn check_sp_lemmas(
    game: &AnonymousHg,
    partition: &Partition,
    interval: &SizeInterval,
    trace: &AnonStabilizerTrace,
) -> Result<SpLemmaReport> {
    let n = game.n();
    Limits::from_env()?.check_enumeration(n)?;
    if partition.n() != n {
        return Err(Error::InvalidParameter("partition and game disagree on n".into()));
    }
    let sp = trace
        .single_peaked
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("trace does not come from the single-peaked construction".into()))?;
    let mask_of = |set: &[AgentId]| set.iter().fold(0u64, |m, &i| m | 1 << i);
    let (e_p, l_p, g_p) = (mask_of(&sp.e_prime), mask_of(&sp.l_prime), mask_of(&sp.g_prime));
    let scan = AnonScan::new(game, partition);
    let tallies = scan_blockers(&scan, n, SpTally::default, |t, mask, size| {
        t.blockers += 1;
        if !interval.contains(size) {
            return;
        }
        t.in_interval += 1;
        if mask & e_p != 0 && t.e_hit.is_none() {
            t.e_hit = Some(mask);
        }
        if mask & l_p != 0 && mask & g_p != 0 && t.mix.is_none() {
            t.mix = Some(mask);
        }
    });
    let first = |f: fn(&SpTally) -> Option<u64>| {
        tallies.iter().find_map(f).map(Coalition::from_mask).into_iter().collect::<Vec<_>>()
    };
    Ok(SpLemmaReport {
        blockers: tallies.iter().map(|t| t.blockers).sum(),
        blockers_in_interval: tallies.iter().map(|t| t.in_interval).sum(),
        count_bound: (0.75 * n as f64 + 1.0_f64).exp2(),
        e_prime_witness: first(|t| t.e_hit),
        mixing_witness: first(|t| t.mix),
    })
}

/// Splits the blockers of a partition by whether they meet a set `Gr`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrDecomposition {
    pub total_coalitions: u64,
    pub blocking: u64,
    pub blocking_avoiding: u64,
    pub blocking_meeting: u64,
    /// Coalitions disjoint from `Gr`: `2^{n − |Gr|} − 1`.
    pub avoiding: u64,
}

impl GrDecomposition {
    /// `P(C ∩ Gr = ∅) + (blockers meeting Gr) / (2^n − 1)` under the uniform distribution.
    pub fn bound(&self) -> f64 {
        (self.avoiding + self.blocking_meeting) as f64 / self.total_coalitions as f64
    }

    pub fn fraction(&self) -> f64 {
        self.blocking as f64 / self.total_coalitions as f64
    }
}

pub fn gr_decomposition(game: &SimpleFhg, partition: &Partition, gr: &[AgentId]) -> Result<GrDecomposition> {
    let n = game.n();
    Limits::from_env()?.check_enumeration(n)?;
    let gr_mask = gr.iter().fold(0u64, |m, &i| m | 1 << i);
    let scan = FhgScan::new(game, partition);
    let tallies = scan_blockers(
        &scan,
        n,
        || (0u64, 0u64),
        |t, mask, _| {
            if mask & gr_mask == 0 {
                t.0 += 1;
            } else {
                t.1 += 1;
            }
        },
    );
    let (avoid, meet) = tallies.iter().fold((0, 0), |(a, b), t| (a + t.0, b + t.1));
    let free = n - gr_mask.count_ones() as usize;
    Ok(GrDecomposition {
        total_coalitions: (1u64 << n) - 1,
        blocking: avoid + meet,
        blocking_avoiding: avoid,
        blocking_meeting: meet,
        avoiding: (1u64 << free) - 1,
    })
}

/// Whether some coalition blocks the partition given by block labels.
fn has_blocker(game: &Game, labels: &[usize]) -> bool {
    let n = labels.len();
    let mut block_mask = vec![0u64; n];
    for (i, &l) in labels.iter().enumerate() {
        block_mask[l] |= 1 << i;
    }
    let block_of = |i: usize| block_mask[labels[i]];
    match game {
        Game::Anon(g) => {
            let improve = improve_masks(g, &|i| block_of(i).count_ones() as usize);
            (1..=n).any(|s| improve[s].count_ones() as usize >= s)
        }
        Game::Fhg(g) => {
            let out: Vec<u64> = (0..n).map(|i| g.neighbors(i).as_mask().unwrap_or(0)).collect();
            let num: Vec<u64> = (0..n).map(|i| (block_of(i) & out[i]).count_ones() as u64).collect();
            let den: Vec<u64> = (0..n).map(|i| block_of(i).count_ones() as u64).collect();
            (1u64..1 << n).any(|mask| {
                let size = mask.count_ones() as u64;
                let mut rest = mask;
                while rest != 0 {
                    let i = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    if (mask & out[i]).count_ones() as u64 * den[i] <= num[i] * size {
                        return false;
                    }
                }
                true
            })
        }
    }
}

const PARTITION_BATCH: usize = 1 << 12;

/// First core-stable partition in restricted-growth order, if any.
pub fn find_core_stable(game: &Game) -> Result<Option<Partition>> {
    let n = game.n();
    Limits::from_env()?.check_partitions(n)?;
    if n == 0 {
        return Ok(Some(Partition::singletons(0)));
    }
    let mut found: Option<Vec<usize>> = None;
    let mut batch: Vec<Vec<usize>> = Vec::with_capacity(PARTITION_BATCH);
    let mut flush = |batch: &mut Vec<Vec<usize>>| -> bool {
        let hit = batch.par_iter().position_first(|labels| !has_blocker(game, labels));
        if let Some(k) = hit {
            found = Some(batch.swap_remove(k));
        }
        batch.clear();
        hit.is_some()
    };
    let mut done = false;
    for_each_set_partition(n, |labels| {
        batch.push(labels.to_vec());
        if batch.len() == PARTITION_BATCH && flush(&mut batch) {
            done = true;
            return false;
        }
        true
    });
    if !done && !batch.is_empty() {
        flush(&mut batch);
    }
    Ok(found.map(|labels| Partition::from_labels(&labels)))
}

/// True iff every partition admits a blocking coalition.
pub fn certify_empty_core(game: &Game) -> Result<bool> {
    Ok(find_core_stable(game)?.is_none())
}

/// True iff no coalition blocks the partition.
pub fn is_core_stable(game: &Game, partition: &Partition) -> Result<bool> {
    check_pair(game, partition)?;
    let n = game.n();
    if n <= Limits::from_env()?.enumeration {
        let labels: Vec<usize> = (0..n).map(|i| partition.block_index(i)).collect();
        return Ok(!has_blocker(game, &labels));
    }
    Err(Error::GuardExceeded { n, limit: Limits::from_env()?.enumeration })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistSpec;
    use rand::Rng;

    fn pair() -> Game {
        Game::Fhg(SimpleFhg::from_matrix(&[vec![false, true], vec![true, false]]).unwrap())
    }

    fn random_fhg(n: usize, p: f64, rng: &mut ChaCha8Rng) -> SimpleFhg {
        let adj: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i != j && rng.gen_bool(p)).collect()).collect();
        SimpleFhg::from_matrix(&adj).unwrap()
    }

    fn random_partition(n: usize, rng: &mut ChaCha8Rng) -> Partition {
        let k = rng.gen_range(1..=n);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        Partition::from_labels(&labels)
    }

    fn naive(game: &Game, p: &Partition) -> (u64, Vec<u64>) {
        let n = game.n();
        let mut by = vec![0; n + 1];
        let mut c = 0;
        for mask in 1u64..1 << n {
            let s = Coalition::from_mask(mask);
            if game.blocks(&s, p) {
                c += 1;
                by[s.size()] += 1;
            }
        }
        (c, by)
    }

    #[test]
    fn trivial_fractions() {
        let k = Game::Fhg(SimpleFhg::complete(6));
        let r = exact_blocking(&k, &Partition::grand(6)).unwrap();
        assert_eq!(r.blocking_count, 0);
        let r = exact_blocking(&pair(), &Partition::singletons(2)).unwrap();
        assert_eq!(r.fraction_exact(), (1, 3));
        assert_eq!(r.witnesses, vec![Coalition::from_agents([0, 1])]);
    }

    #[test]
    fn scan_matches_naive_across_chunking() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 9, 13, 14] {
            let g = Game::Fhg(random_fhg(n, 0.4, &mut rng));
            let p = random_partition(n, &mut rng);
            let r = exact_blocking(&g, &p).unwrap();
            let (c, by) = naive(&g, &p);
            assert_eq!(r.blocking_count, c, "n = {n}");
            assert_eq!(r.by_size, by);
            assert!(r.witnesses.iter().all(|w| g.blocks(w, &p)));

            let vals = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..5) as f64).collect()).collect();
            let a = Game::Anon(AnonymousHg::new(vals).unwrap());
            let r = exact_blocking(&a, &p).unwrap();
            assert_eq!((r.blocking_count, r.by_size), naive(&a, &p), "n = {n}");
        }
    }

    #[test]
    fn uniform_mass_equals_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Game::Fhg(random_fhg(8, 0.5, &mut rng));
        let p = random_partition(8, &mut rng);
        let r = exact_blocking(&g, &p).unwrap();
        let u = CoalitionDistribution::uniform(8).unwrap();
        let m = exact_blocking_mass(&g, &p, &u).unwrap();
        assert!((m - r.fraction).abs() < 1e-12);
        let flat = DistSpec::SizeTilted { g: vec![3.0; 8] }.build(8).unwrap();
        assert!((exact_blocking_mass(&g, &p, &flat).unwrap() - r.fraction).abs() < 1e-12);
    }

    #[test]
    fn masses_match_point_mass_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = Game::Fhg(random_fhg(7, 0.3, &mut rng));
        let p = random_partition(7, &mut rng);
        let family: Vec<Coalition> = (1u64..40).step_by(3).map(Coalition::from_mask).collect();
        let dists = [
            DistSpec::linear_tilt(7, 4.0).build(7).unwrap(),
            CoalitionDistribution::family_uniform(7, family.clone()).unwrap(),
            CoalitionDistribution::adversarial_bounded(family, 7, 3.0).unwrap(),
        ];
        for d in &dists {
            let direct: f64 =
                (1u64..1 << 7).map(Coalition::from_mask).filter(|c| g.blocks(c, &p)).map(|c| d.point_mass(&c)).sum();
            let m = exact_blocking_mass(&g, &p, d).unwrap();
            assert!((m - direct).abs() < 1e-12, "{m} vs {direct}");
        }
    }

    #[test]
    fn guard_and_mismatch() {
        let g = Game::Fhg(SimpleFhg::empty(25));
        assert!(matches!(exact_blocking(&g, &Partition::singletons(25)), Err(Error::GuardExceeded { .. })));
        assert!(exact_blocking(&pair(), &Partition::singletons(3)).is_err());
    }

    #[test]
    fn mc_is_deterministic_and_zero_without_blockers() {
        let k = Game::Fhg(SimpleFhg::complete(10));
        let u = CoalitionDistribution::uniform(10).unwrap();
        let e = mc_blocking(&k, &Partition::grand(10), &u, 1000, 0.05, 1).unwrap();
        assert_eq!(e.hits, 0);
        let s = Partition::singletons(10);
        let a = mc_blocking(&k, &s, &u, 4000, 0.05, 9).unwrap();
        let b = mc_blocking(&k, &s, &u, 4000, 0.05, 9).unwrap();
        assert_eq!(a, b);
        let q = mc_blocking(&k, &s, &u, 16000, 0.05, 9).unwrap();
        assert!((a.ci_halfwidth / q.ci_halfwidth - 2.0).abs() < 1e-12);
    }

    #[test]
    fn greens_audit() {
        let g = AnonymousHg::new(vec![vec![0.0, 1.0, 0.5], vec![0.0, 1.0, 0.5], vec![0.0, 0.2, 0.9]]).unwrap();
        let p = Partition::from_lists(3, &[vec![0, 1], vec![2]]).unwrap();
        assert_eq!(audit_green_anonymous(&g, &p, &SizeInterval::from_sizes(vec![1, 2, 3])).unwrap(), vec![0, 1]);
        assert_eq!(audit_green_anonymous(&g, &p, &SizeInterval::from_sizes(vec![1])).unwrap(), vec![2]);
    }

    #[test]
    fn empty_core_oracle() {
        assert!(!certify_empty_core(&Game::Fhg(SimpleFhg::complete(5))).unwrap());
        let peak_n = AnonymousHg::new((0..5).map(|_| (1..=5).map(|s| s as f64).collect()).collect()).unwrap();
        let g = Game::Anon(peak_n);
        let stable = find_core_stable(&g).unwrap().unwrap();
        assert!(stable.same_as(&Partition::grand(5)));
        assert!(is_core_stable(&g, &stable).unwrap());
        assert!(!is_core_stable(&g, &Partition::singletons(5)).unwrap());
    }

    #[test]
    fn core_stability_agrees_with_zero_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..40 {
            let g = Game::Fhg(random_fhg(6, 0.5, &mut rng));
            let p = random_partition(6, &mut rng);
            let zero = exact_blocking(&g, &p).unwrap().blocking_count == 0;
            assert_eq!(zero, is_core_stable(&g, &p).unwrap());
        }
    }

    #[test]
    fn gr_split_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_fhg(10, 0.3, &mut rng);
        let p = random_partition(10, &mut rng);
        let d = gr_decomposition(&g, &p, &[0, 3]).unwrap();
        let r = exact_blocking(&Game::Fhg(g), &p).unwrap();
        assert_eq!(d.blocking, r.blocking_count);
        assert_eq!(d.avoiding, 255);
        assert!(d.fraction() <= d.bound());
    }
}
