//! Valuation models: simple fractional and anonymous hedonic games.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::coalition::{AgentId, Coalition};
use crate::error::{Error, Result};
use crate::partition::Partition;

/// Exact non-negative fraction `num / den`, compared by cross multiplication.
#[derive(Clone, Copy)]
pub struct Frac {
    pub num: u32,
    pub den: u32,
}

impl Frac {
    pub fn new(num: u32, den: u32) -> Self {
        assert!(den > 0, "zero denominator");
        Self { num, den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Frac {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frac {}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u64 * other.den as u64).cmp(&(other.num as u64 * self.den as u64))
    }
}

impl fmt::Debug for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

pub trait HedonicGame: Sync {
    type Value: Copy + PartialOrd + fmt::Debug + Send + Sync;

    fn n(&self) -> usize;

    /// `v_i(S)` for `i ∈ S`; callers guarantee membership.
    fn member_value(&self, agent: AgentId, coalition: &Coalition) -> Self::Value;

    /// `v_i(S)`, an error when `i ∉ S`.
    fn value(&self, agent: AgentId, coalition: &Coalition) -> Result<Self::Value> {
        if agent >= self.n() {
            return Err(Error::AgentOutOfRange { agent, n: self.n() });
        }
        if !coalition.contains(agent) {
            return Err(Error::NotAMember { agent });
        }
        Ok(self.member_value(agent, coalition))
    }

    /// `v_i(π) = v_i(π(i))`.
    fn utility(&self, agent: AgentId, partition: &Partition) -> Self::Value {
        self.member_value(agent, partition.block_of(agent))
    }
}

/// Current utilities of every agent under a fixed partition, for repeated blocking tests.
pub struct BlockingOracle<'g, G: HedonicGame> {
    game: &'g G,
    current: Vec<G::Value>,
}

impl<'g, G: HedonicGame> BlockingOracle<'g, G> {
    pub fn new(game: &'g G, partition: &Partition) -> Self {
        debug_assert_eq!(game.n(), partition.n());
        let current = (0..game.n()).map(|i| game.utility(i, partition)).collect();
        Self { game, current }
    }

    pub fn current(&self, agent: AgentId) -> G::Value {
        self.current[agent]
    }

    /// True iff the coalition is non-empty and every member strictly improves.
    pub fn blocks(&self, coalition: &Coalition) -> bool {
        !coalition.is_empty() && coalition.members().all(|i| self.game.member_value(i, coalition) > self.current[i])
    }
}

/// Definition of core-blocking: every member of `S` strictly prefers `S` to its block.
pub fn blocks<G: HedonicGame>(game: &G, coalition: &Coalition, partition: &Partition) -> bool {
    !coalition.is_empty() && coalition.members().all(|i| game.member_value(i, coalition) > game.utility(i, partition))
}

/// No agent strictly prefers being alone.
pub fn is_individually_rational<G: HedonicGame>(game: &G, partition: &Partition) -> bool {
    (0..game.n()).all(|i| {
        let alone = Coalition::singleton(i);
        game.member_value(i, &alone).partial_cmp(&game.utility(i, partition)) != Some(std::cmp::Ordering::Greater)
    })
}

/// Simple fractional hedonic game over an unweighted digraph.
#[derive(Clone, PartialEq, Eq)]
pub struct SimpleFhg {
    n: usize,
    out: Vec<Coalition>,
}

impl SimpleFhg {
    pub fn from_matrix(adj: &[Vec<bool>]) -> Result<Self> {
        let n = adj.len();
        let mut out = Vec::with_capacity(n);
        for (i, row) in adj.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGame(format!(
                    "adjacency row {} has length {}, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            if row[i] {
                return Err(Error::InvalidGame(format!("self-loop at agent {}", i + 1)));
            }
            out.push(Coalition::from_agents(row.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j)));
        }
        Ok(Self { n, out })
    }

    /// From out-neighbourhoods; panics on self-loops or out-of-range agents.
    pub fn from_neighborhoods(n: usize, out: Vec<Coalition>) -> Self {
        assert_eq!(out.len(), n);
        for (i, nb) in out.iter().enumerate() {
            assert!(!nb.contains(i), "self-loop at {i}");
            assert!(nb.span() <= n, "neighbour out of range");
        }
        Self { n, out }
    }

    pub fn empty(n: usize) -> Self {
        Self { n, out: vec![Coalition::empty(); n] }
    }

    pub fn complete(n: usize) -> Self {
        let out = (0..n)
            .map(|i| {
                let mut c = Coalition::full(n);
                c.remove(i);
                c
            })
            .collect();
        Self { n, out }
    }

    pub fn has_arc(&self, i: AgentId, j: AgentId) -> bool {
        self.out[i].contains(j)
    }

    /// `N_i`.
    pub fn neighbors(&self, i: AgentId) -> &Coalition {
        &self.out[i]
    }

    /// `d_i`, the out-degree.
    pub fn degree(&self, i: AgentId) -> usize {
        self.out[i].size()
    }

    pub fn to_matrix(&self) -> Vec<Vec<bool>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.has_arc(i, j)).collect()).collect()
    }
}

impl fmt::Debug for SimpleFhg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimpleFhg").field("n", &self.n).field("out", &self.out).finish()
    }
}

impl HedonicGame for SimpleFhg {
    type Value = Frac;

    fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn member_value(&self, agent: AgentId, coalition: &Coalition) -> Frac {
        Frac { num: coalition.intersection_size(&self.out[agent]) as u32, den: coalition.size() as u32 }
    }
}

/// Size-based valuations. `vals[i][s - 1] = v_i(s)` for `s ∈ [1, n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnonymousHg {
    n: usize,
    vals: Vec<Vec<f64>>,
}

impl AnonymousHg {
    pub fn new(vals: Vec<Vec<f64>>) -> Result<Self> {
        let n = vals.len();
        for (i, row) in vals.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGame(format!(
                    "valuation row {} has length {}, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(s) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidGame(format!("non-finite valuation for agent {} at size {}", i + 1, s + 1)));
            }
        }
        Ok(Self { n, vals })
    }

    /// `v_i(s)`, 1-based size.
    #[inline]
    pub fn size_value(&self, agent: AgentId, size: usize) -> f64 {
        self.vals[agent][size - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.vals
    }
}

impl HedonicGame for AnonymousHg {
    type Value = f64;

    fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn member_value(&self, agent: AgentId, coalition: &Coalition) -> f64 {
        self.vals[agent][coalition.size() - 1]
    }
}

/// Read access to (possibly partially known) anonymous valuations.
pub trait SizeValuations {
    fn agent_count(&self) -> usize;
    /// `v_i(s)` if known.
    fn size_value_opt(&self, agent: AgentId, size: usize) -> Option<f64>;
}

impl SizeValuations for AnonymousHg {
    fn agent_count(&self) -> usize {
        self.n
    }

    fn size_value_opt(&self, agent: AgentId, size: usize) -> Option<f64> {
        (1..=self.n).contains(&size).then(|| self.size_value(agent, size))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SinglePeakedCertificate {
    /// Permutation of `[1, n]`; `ordering[k]` is the size at position `k` (0-based).
    pub ordering: Vec<usize>,
    /// Peak size per agent.
    pub peaks: Vec<usize>,
}

impl SinglePeakedCertificate {
    /// 0-based position of a size in the ordering.
    pub fn position(&self, size: usize) -> usize {
        self.ordering.iter().position(|&s| s == size).expect("size in ordering")
    }
}

/// Agent `agent` should weakly prefer the size at position `k` over the one at
/// position `h` (1-based positions), but does not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SinglePeakViolation {
    pub agent: AgentId,
    pub h: usize,
    pub k: usize,
}

impl fmt::Display for SinglePeakViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "agent {} prefers position {} over position {}, breaking single-peakedness",
            self.agent + 1,
            self.h,
            self.k
        )
    }
}

pub fn natural_ordering(n: usize) -> Vec<usize> {
    (1..=n).collect()
}

/// Checks single-peakedness along `ordering` (a permutation of `[1, n]`).
///
/// The first position of the maximum is taken as the peak: any valid peak is
/// a maximum, and if a later maximum works then everything between the two is
/// flat, so the first one works too.
pub fn check_single_peaked(
    game: &AnonymousHg,
    ordering: &[usize],
) -> std::result::Result<SinglePeakedCertificate, SinglePeakViolation> {
    let n = game.n;
    assert!(is_size_permutation(ordering, n), "ordering must be a permutation of [1, n]");
    let mut peaks = Vec::with_capacity(n);
    for i in 0..n {
        let v = |pos: usize| game.size_value(i, ordering[pos]);
        if n == 0 {
            break;
        }
        let mut peak = 0;
        for pos in 1..n {
            if v(pos) > v(peak) {
                peak = pos;
            }
        }
        for pos in 1..=peak {
            if v(pos) < v(pos - 1) {
                return Err(SinglePeakViolation { agent: i, h: pos, k: pos + 1 });
            }
        }
        for pos in peak..n.saturating_sub(1) {
            if v(pos) < v(pos + 1) {
                return Err(SinglePeakViolation { agent: i, h: pos + 2, k: pos + 1 });
            }
        }
        peaks.push(ordering[peak]);
    }
    Ok(SinglePeakedCertificate { ordering: ordering.to_vec(), peaks })
}

pub(crate) fn is_size_permutation(ordering: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n + 1];
    ordering.len() == n && ordering.iter().all(|&s| (1..=n).contains(&s) && !std::mem::replace(&mut seen[s], true))
}

/// Either supported game model, for file IO and dispatch.
#[derive(Clone, Debug, PartialEq)]
pub enum Game {
    Fhg(SimpleFhg),
    Anon(AnonymousHg),
}

impl Game {
    pub fn n(&self) -> usize {
        match self {
            Game::Fhg(g) => g.n(),
            Game::Anon(g) => g.n(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Game::Fhg(_) => "fhg",
            Game::Anon(_) => "anon",
        }
    }

    /// Member values of a coalition in ascending agent order, as reals.
    pub fn member_values(&self, coalition: &Coalition) -> Vec<f64> {
        match self {
            Game::Fhg(g) => coalition.members().map(|i| g.member_value(i, coalition).to_f64()).collect(),
            Game::Anon(g) => coalition.members().map(|i| g.member_value(i, coalition)).collect(),
        }
    }

    pub fn blocks(&self, coalition: &Coalition, partition: &Partition) -> bool {
        match self {
            Game::Fhg(g) => blocks(g, coalition, partition),
            Game::Anon(g) => blocks(g, coalition, partition),
        }
    }
}
