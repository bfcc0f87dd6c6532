//! Learning phase: recovering valuations from sampled coalitions.
//!
//! Simple FHG valuations are recovered exactly by solving, per agent, the
//! integer system "number of neighbours in `S` = `v_i(S)·|S|`". Anonymous
//! valuations are read off directly, one `(agent, size)` cell per sampled
//! member, together with the empirical mean coalition size.

use rand::Rng;
use rayon::prelude::*;

use crate::coalition::{AgentId, Coalition};
use crate::distributions::{size_deviation, CoalitionDistribution, SizeInterval};
use crate::error::{Error, Result};
use crate::game::{Game, SimpleFhg, SizeValuations};
use crate::linsolve::{self, Solution};

/// One sampled coalition with the valuation of each member.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    coalition: Coalition,
    /// Aligned with `coalition.members()`.
    values: Vec<f64>,
}

impl SampleRecord {
    pub fn new(coalition: Coalition, values: Vec<f64>) -> Result<Self> {
        if coalition.is_empty() {
            return Err(Error::InconsistentSample("sampled coalition is empty".into()));
        }
        if values.len() != coalition.size() {
            return Err(Error::InconsistentSample(format!(
                "{} values for a coalition of size {}",
                values.len(),
                coalition.size()
            )));
        }
        Ok(Self { coalition, values })
    }

    pub fn coalition(&self) -> &Coalition {
        &self.coalition
    }

    /// `(agent, value)` pairs in ascending agent order.
    pub fn member_values(&self) -> impl Iterator<Item = (AgentId, f64)> + '_ {
        self.coalition.members().zip(self.values.iter().copied())
    }

    pub fn value_of(&self, agent: AgentId) -> Option<f64> {
        self.member_values().find(|&(a, _)| a == agent).map(|(_, v)| v)
    }
}

/// Draws `m` coalitions from `dist` and records the true member valuations.
pub fn draw_samples<R: Rng + ?Sized>(
    game: &Game,
    dist: &CoalitionDistribution,
    m: usize,
    rng: &mut R,
) -> Vec<SampleRecord> {
    (0..m)
        .map(|_| {
            let c = dist.sample(rng);
            let values = game.member_values(&c);
            SampleRecord { coalition: c, values }
        })
        .collect()
}

// Sample sizes are ceilings of real bounds; a relative slack keeps values
// that are integral in exact arithmetic from being bumped by rounding noise.
fn ceil_bound(x: f64) -> usize {
    (x - x.abs() * 1e-12).ceil().max(0.0) as usize
}

/// Samples sufficient to learn a simple FHG exactly: `⌈16 ln(n/δ)⌉ + 4n`.
pub fn fhg_sample_size(n: usize, delta: f64) -> usize {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    ceil_bound(16.0 * (n as f64 / delta).ln()) + 4 * n
}

/// Samples sufficient to learn every valuation on `I_D(ε)`:
/// `⌈2λ(1+λ) n² ln(n²/δ) / ε⌉`.
pub fn anon_sample_size(n: usize, delta: f64, eps: f64, lambda: f64) -> usize {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    assert!(lambda >= 1.0, "lambda must be >= 1");
    let n2 = (n * n) as f64;
    ceil_bound(2.0 * lambda * (1.0 + lambda) * n2 * (n2 / delta).ln() / eps)
}

/// Samples for `|μ̄ − μ| < α` with confidence `1 − δ`: `⌈n² ln(2/δ) / (2α²)⌉`.
pub fn mean_confidence_m(n: usize, alpha: f64, delta: f64) -> usize {
    assert!(alpha > 0.0, "alpha must be positive");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    ceil_bound((n * n) as f64 * (2.0 / delta).ln() / (2.0 * alpha * alpha))
}

fn check_agents(n: usize, samples: &[SampleRecord]) -> Result<()> {
    for rec in samples {
        if let Some(bad) = rec.coalition.members().find(|&a| a >= n) {
            return Err(Error::AgentOutOfRange { agent: bad, n });
        }
    }
    Ok(())
}

enum AgentOutcome {
    Learned(Coalition),
    Underdetermined,
    Inconsistent(String),
}

fn learn_fhg_agent(n: usize, agent: AgentId, samples: &[SampleRecord]) -> AgentOutcome {
    let col = |j: AgentId| if j < agent { j } else { j - 1 };
    let mut a = Vec::new();
    let mut b = Vec::new();
    for rec in samples {
        let Some(v) = rec.value_of(agent) else {
            continue;
        };
        let size = rec.coalition.size();
        let scaled = v * size as f64;
        let k = scaled.round();
        if (scaled - k).abs() > 1e-6 || k < 0.0 || k > (size - 1) as f64 {
            return AgentOutcome::Inconsistent(format!(
                "agent {} has value {v} in a coalition of size {size}, not of the form k/{size}",
                agent + 1
            ));
        }
        let mut row = vec![0i64; n - 1];
        for j in rec.coalition.members().filter(|&j| j != agent) {
            row[col(j)] = 1;
        }
        a.push(row);
        b.push(k as i64);
    }
    match linsolve::solve(&a, &b, n - 1) {
        Solution::Unique { numerators, denominator } => {
            let mut nb = Coalition::empty();
            for (c, x) in numerators.iter().enumerate() {
                let j = if c < agent { c } else { c + 1 };
                if *x == denominator {
                    nb.insert(j);
                } else if !num_traits::Zero::is_zero(x) {
                    return AgentOutcome::Inconsistent(format!(
                        "agent {} values agent {} at {x}/{denominator}, not 0 or 1",
                        agent + 1,
                        j + 1
                    ));
                }
            }
            AgentOutcome::Learned(nb)
        }
        Solution::RankDeficient { .. } => AgentOutcome::Underdetermined,
        Solution::Inconsistent => {
            AgentOutcome::Inconsistent(format!("no 0/1 valuation of agent {} reproduces the sampled values", agent + 1))
        }
    }
}

/// Recovers the adjacency of a simple FHG from sampled member valuations.
///
/// Fails with [`Error::Underdetermined`] listing every agent whose system has
/// rank below `n − 1`, or with [`Error::InconsistentSample`] when the values
/// admit no 0/1 solution.
pub fn learn_fhg(n: usize, samples: &[SampleRecord]) -> Result<SimpleFhg> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    check_agents(n, samples)?;
    let outcomes: Vec<AgentOutcome> = (0..n).into_par_iter().map(|i| learn_fhg_agent(n, i, samples)).collect();
    let mut out = Vec::with_capacity(n);
    let mut under = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            AgentOutcome::Learned(nb) => out.push(nb),
            AgentOutcome::Underdetermined => {
                under.push(i);
                out.push(Coalition::empty());
            }
            AgentOutcome::Inconsistent(msg) => return Err(Error::InconsistentSample(msg)),
        }
    }
    if !under.is_empty() {
        return Err(Error::Underdetermined { agents: under });
    }
    Ok(SimpleFhg::from_neighborhoods(n, out))
}

/// Partially learned anonymous valuations.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnedAnonymous {
    n: usize,
    /// `vals[i][s - 1]`.
    vals: Vec<Vec<Option<f64>>>,
    mu_hat: Option<f64>,
    m: usize,
}

impl LearnedAnonymous {
    pub fn known(&self, agent: AgentId, size: usize) -> bool {
        self.vals[agent][size - 1].is_some()
    }

    /// `μ̄ = (1/m) Σ |S_j|`.
    pub fn mean_size(&self) -> Result<f64> {
        self.mu_hat.ok_or(Error::NoSamples)
    }

    pub fn sample_count(&self) -> usize {
        self.m
    }

    /// Sizes whose valuation is known for every agent.
    pub fn learned_sizes(&self) -> Vec<usize> {
        (1..=self.n).filter(|&s| (0..self.n).all(|i| self.known(i, s))).collect()
    }
}

impl SizeValuations for LearnedAnonymous {
    fn agent_count(&self) -> usize {
        self.n
    }

    fn size_value_opt(&self, agent: AgentId, size: usize) -> Option<f64> {
        self.vals.get(agent)?.get(size.checked_sub(1)?).copied().flatten()
    }
}

/// Stores `v_i(|S|)` for every sampled member and the empirical mean size.
pub fn learn_anonymous(n: usize, samples: &[SampleRecord]) -> Result<LearnedAnonymous> {
    check_agents(n, samples)?;
    let mut vals = vec![vec![None; n]; n];
    let mut total = 0usize;
    for rec in samples {
        let s = rec.coalition.size();
        total += s;
        for (i, v) in rec.member_values() {
            match vals[i][s - 1] {
                None => vals[i][s - 1] = Some(v),
                Some(old) if old.to_bits() == v.to_bits() => {}
                Some(old) => {
                    return Err(Error::InconsistentSample(format!(
                        "agent {} has conflicting values {old} and {v} for size {s}",
                        i + 1
                    )))
                }
            }
        }
    }
    let m = samples.len();
    let mu_hat = (m > 0).then(|| total as f64 / m as f64);
    Ok(LearnedAnonymous { n, vals, mu_hat, m })
}

/// `min{1/(2√n), n/(λ+1)}`.
pub fn default_alpha(n: usize, lambda: f64) -> f64 {
    let n = n as f64;
    (1.0 / (2.0 * n.sqrt())).min(n / (lambda + 1.0))
}

/// Sizes in `((1−Δ)(μ̄−α), (1+Δ)(μ̄+α))` learned for every agent.
pub fn estimate_interval_with_delta(learned: &LearnedAnonymous, delta: f64, alpha: f64) -> Result<SizeInterval> {
    let mu = learned.mean_size()?;
    let lo = (1.0 - delta) * (mu - alpha);
    let hi = (1.0 + delta) * (mu + alpha);
    let known = learned.learned_sizes();
    let interval = SizeInterval::open(lo, hi, learned.n).restrict(|s| known.binary_search(&s).is_ok());
    if interval.is_empty() {
        return Err(Error::EmptyInterval(format!(
            "no size in ({lo:.4}, {hi:.4}) is learned for every agent ({} samples)",
            learned.m
        )));
    }
    Ok(interval)
}

/// Estimated superset of `I_D(ε)` restricted to learned sizes; `α` defaults
/// to [`default_alpha`].
pub fn estimate_interval(
    learned: &LearnedAnonymous,
    lambda: f64,
    eps: f64,
    alpha: Option<f64>,
) -> Result<SizeInterval> {
    let alpha = alpha.unwrap_or_else(|| default_alpha(learned.n, lambda));
    estimate_interval_with_delta(learned, size_deviation(learned.n, lambda, eps), alpha)
}
