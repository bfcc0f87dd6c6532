//! Size-based stabilizers for anonymous games.
//!
//! Both constructions pick one size `s*` from the interval `I`, cut `N` into
//! `q = ⌊n/s*⌋` blocks of size `s*` plus a remainder block of size
//! `r = n mod s*`, and fill the `s*` blocks with a priority group first.

use serde::Serialize;

use crate::coalition::{AgentId, Coalition};
use crate::distributions::SizeInterval;
use crate::error::{Error, Result};
use crate::game::{is_size_permutation, SizeValuations};
use crate::io::one_based;
use crate::partition::Partition;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnonStabilizerTrace {
    pub interval: SizeInterval,
    /// Per agent, the size in `I` maximizing its valuation (smallest on ties).
    pub argmax: Vec<usize>,
    /// `(size, number of agents whose argmax it is)` for each size in `I`.
    pub counts: Vec<(usize, usize)>,
    pub s_star: usize,
    pub q: usize,
    pub r: usize,
    /// Agents whose block size is in `I` and attains their maximum over `I`.
    #[serde(with = "one_based::agents")]
    pub green_agents: Vec<AgentId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub single_peaked: Option<SinglePeakedTrace>,
}

/// Peak-position bookkeeping for the single-peaked construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SinglePeakedTrace {
    /// Sizes of `I` listed along the single-peaked ordering.
    pub sizes_in_order: Vec<usize>,
    /// 1-based position of `s*` in `sizes_in_order`.
    pub h_star: usize,
    #[serde(with = "one_based::agents")]
    pub l: Vec<AgentId>,
    #[serde(with = "one_based::agents")]
    pub e: Vec<AgentId>,
    #[serde(with = "one_based::agents")]
    pub g: Vec<AgentId>,
    #[serde(with = "one_based::agents")]
    pub l_prime: Vec<AgentId>,
    #[serde(with = "one_based::agents")]
    pub e_prime: Vec<AgentId>,
    #[serde(with = "one_based::agents")]
    pub g_prime: Vec<AgentId>,
}

/// Valuations over `I`, checked to be known for every agent.
fn interval_values<V: SizeValuations + ?Sized>(view: &V, interval: &SizeInterval) -> Result<Vec<Vec<f64>>> {
    if interval.is_empty() {
        return Err(Error::EmptyInterval("size interval is empty".into()));
    }
    let n = view.agent_count();
    if let Some(&s) = interval.sizes.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::InvalidParameter(format!("interval size {s} outside [1, {n}]")));
    }
    (0..n)
        .map(|i| {
            interval
                .sizes
                .iter()
                .map(|&s| {
                    view.size_value_opt(i, s).ok_or_else(|| {
                        Error::InvalidParameter(format!("valuation of agent {} at size {s} is unknown", i + 1))
                    })
                })
                .collect()
        })
        .collect()
}

/// Index of the first maximum.
fn first_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// `q` blocks of size `s*` taken from `order`, then the remainder.
fn fill(order: &[AgentId], s_star: usize) -> (Vec<Coalition>, usize, usize) {
    let n = order.len();
    let (q, r) = (n / s_star, n % s_star);
    let mut blocks: Vec<Coalition> = order.chunks(s_star).map(|c| c.iter().copied().collect()).collect();
    debug_assert_eq!(blocks.len(), q + usize::from(r > 0));
    blocks.retain(|b| !b.is_empty());
    (blocks, q, r)
}

fn greens(values: &[Vec<f64>], interval: &SizeInterval, partition: &Partition) -> Vec<AgentId> {
    (0..partition.n())
        .filter(|&i| {
            let b = partition.block_of(i).size();
            let Ok(pos) = interval.sizes.binary_search(&b) else {
                return false;
            };
            let best = values[i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            values[i][pos] >= best
        })
        .collect()
}

/// Pigeonhole construction: `s*` is the size in `I` that maximizes the most
/// agents' valuations, and those agents fill the `s*` blocks first.
pub fn stabilize_anonymous<V: SizeValuations + ?Sized>(
    view: &V,
    interval: &SizeInterval,
) -> Result<(Partition, AnonStabilizerTrace)> {
    let values = interval_values(view, interval)?;
    let n = view.agent_count();
    let sizes = &interval.sizes;
    let arg: Vec<usize> = values.iter().map(|row| first_argmax(row)).collect();
    let mut tally = vec![0usize; sizes.len()];
    for &k in &arg {
        tally[k] += 1;
    }
    // sizes are ascending, so the first maximum is the smallest size
    let best = first_argmax(&tally.iter().map(|&c| c as f64).collect::<Vec<_>>());
    let s_star = sizes[best];

    let order: Vec<AgentId> = (0..n).filter(|&i| arg[i] == best).chain((0..n).filter(|&i| arg[i] != best)).collect();
    let (blocks, q, r) = fill(&order, s_star);
    let partition = Partition::new(n, blocks).expect("fill covers every agent once");
    let green_agents = greens(&values, interval, &partition);
    let trace = AnonStabilizerTrace {
        interval: interval.clone(),
        argmax: arg.iter().map(|&k| sizes[k]).collect(),
        counts: sizes.iter().copied().zip(tally).collect(),
        s_star,
        q,
        r,
        green_agents,
        single_peaked: None,
    };
    Ok((partition, trace))
}

/// Single-peaked construction: with sizes of `I` listed along `ordering` as
/// `s_1, …, s_k` and agents split by restricted peak position into `L_h`
/// (before `h`), `E_h` (at `h`) and `G_h` (after `h`), take the largest `h*`
/// with `|L_{h*}| ≤ n/2` and build blocks of size `s_{h*}`, agents of `E`
/// first.
pub fn stabilize_single_peaked<V: SizeValuations + ?Sized>(
    view: &V,
    ordering: &[usize],
    interval: &SizeInterval,
) -> Result<(Partition, AnonStabilizerTrace)> {
    let n = view.agent_count();
    if !is_size_permutation(ordering, n) {
        return Err(Error::InvalidParameter("ordering must be a permutation of [1, n]".into()));
    }
    let values = interval_values(view, interval)?;
    let sizes = &interval.sizes;
    let mut along: Vec<usize> = sizes.clone();
    let rank_of = |s: usize| ordering.iter().position(|&t| t == s).expect("permutation");
    along.sort_by_key(|&s| rank_of(s));

    let arg: Vec<usize> = values.iter().map(|row| first_argmax(row)).collect();
    // 1-based position of each agent's restricted peak along the ordering
    let pos: Vec<usize> = arg.iter().map(|&k| along.iter().position(|&s| s == sizes[k]).unwrap() + 1).collect();

    let mut h_star = 1;
    for h in 1..=along.len() {
        let l = pos.iter().filter(|&&p| p < h).count();
        if 2 * l <= n {
            h_star = h;
        }
    }
    let s_star = along[h_star - 1];
    let l: Vec<AgentId> = (0..n).filter(|&i| pos[i] < h_star).collect();
    let e: Vec<AgentId> = (0..n).filter(|&i| pos[i] == h_star).collect();
    let g: Vec<AgentId> = (0..n).filter(|&i| pos[i] > h_star).collect();

    let order: Vec<AgentId> = e.iter().copied().chain((0..n).filter(|&i| pos[i] != h_star)).collect();
    let (blocks, q, r) = fill(&order, s_star);
    let partition = Partition::new(n, blocks).expect("fill covers every agent once");
    let mut in_star = vec![false; n];
    for &i in &order[..q * s_star] {
        in_star[i] = true;
    }
    let prime = |set: &[AgentId]| set.iter().copied().filter(|&i| in_star[i]).collect::<Vec<_>>();

    let mut tally = vec![0usize; sizes.len()];
    for &k in &arg {
        tally[k] += 1;
    }
    let trace = AnonStabilizerTrace {
        interval: interval.clone(),
        argmax: arg.iter().map(|&k| sizes[k]).collect(),
        counts: sizes.iter().copied().zip(tally).collect(),
        s_star,
        q,
        r,
        green_agents: greens(&values, interval, &partition),
        single_peaked: Some(SinglePeakedTrace {
            sizes_in_order: along,
            h_star,
            l_prime: prime(&l),
            e_prime: prime(&e),
            g_prime: prime(&g),
            l,
            e,
            g,
        }),
    };
    Ok((partition, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{natural_ordering, AnonymousHg};

    fn game(rows: Vec<Vec<f64>>) -> AnonymousHg {
        AnonymousHg::new(rows).unwrap()
    }

    fn peaked(n: usize, peaks: &[usize]) -> AnonymousHg {
        game(peaks.iter().map(|&p| (1..=n).map(|s| -(s as f64 - p as f64).abs()).collect()).collect())
    }

    fn lists(p: &Partition) -> Vec<Vec<usize>> {
        p.blocks().iter().map(|b| b.members().collect()).collect()
    }

    #[test]
    fn everyone_prefers_pairs() {
        let g = peaked(5, &[2; 5]);
        let (p, t) = stabilize_anonymous(&g, &SizeInterval::from_sizes(vec![1, 2, 3])).unwrap();
        assert_eq!(lists(&p), vec![vec![0, 1], vec![2, 3], vec![4]]);
        assert_eq!((t.s_star, t.q, t.r), (2, 2, 1));
        assert_eq!(t.green_agents, vec![0, 1, 2, 3]);
    }

    #[test]
    fn single_size_interval_gives_grand_coalition() {
        let g = peaked(4, &[1, 2, 3, 1]);
        let (p, t) = stabilize_anonymous(&g, &SizeInterval::from_sizes(vec![4])).unwrap();
        assert!(p.same_as(&Partition::grand(4)));
        assert_eq!(t.green_agents.len(), 4);
    }

    #[test]
    fn mixed_peaks_priority_fill() {
        // agents 0 and 3 peak at 2, the rest at 3
        let g = peaked(6, &[2, 3, 3, 2, 3, 3]);
        let (p, t) = stabilize_anonymous(&g, &SizeInterval::from_sizes(vec![2, 3])).unwrap();
        assert_eq!(t.s_star, 3);
        assert_eq!(lists(&p), vec![vec![1, 2, 4], vec![0, 3, 5]]);
        assert_eq!(t.counts, vec![(2, 2), (3, 4)]);
    }

    #[test]
    fn tally_ties_go_to_the_smaller_size() {
        let g = peaked(4, &[1, 1, 3, 3]);
        let (_, t) = stabilize_anonymous(&g, &SizeInterval::from_sizes(vec![1, 3])).unwrap();
        assert_eq!(t.s_star, 1);
    }

    #[test]
    fn empty_interval_and_unknown_values_fail() {
        let g = peaked(3, &[1, 2, 3]);
        assert!(matches!(stabilize_anonymous(&g, &SizeInterval::from_sizes(vec![])), Err(Error::EmptyInterval(_))));
        assert!(stabilize_anonymous(&g, &SizeInterval::from_sizes(vec![4])).is_err());
    }

    #[test]
    fn single_peaked_h_star_scan() {
        let g = peaked(4, &[1, 1, 2, 2]);
        let i = SizeInterval::from_sizes(vec![1, 2]);
        let (p, t) = stabilize_single_peaked(&g, &natural_ordering(4), &i).unwrap();
        let sp = t.single_peaked.unwrap();
        assert_eq!(sp.h_star, 2);
        assert_eq!(t.s_star, 2);
        assert_eq!((t.q, t.r), (2, 0));
        // E = {3, 4} is filled first
        assert_eq!(lists(&p), vec![vec![2, 3], vec![0, 1]]);
        assert_eq!(sp.l, vec![0, 1]);
        assert_eq!(sp.e, vec![2, 3]);
        assert!(sp.g.is_empty());
        assert_eq!(sp.e_prime, vec![2, 3]);
        assert_eq!(sp.l_prime, vec![0, 1]);
    }

    #[test]
    fn single_peaked_uniform_peaks() {
        let g = peaked(7, &[3; 7]);
        let i = SizeInterval::from_sizes(vec![2, 3, 4]);
        let (p, t) = stabilize_single_peaked(&g, &natural_ordering(7), &i).unwrap();
        let sp = t.single_peaked.unwrap();
        assert!(sp.l.is_empty());
        assert_eq!(sp.e.len(), 7);
        assert_eq!(sp.h_star, 2);
        assert_eq!((t.s_star, t.q, t.r), (3, 2, 1));
        assert_eq!(t.green_agents, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(p.block_of(6).size(), 1);
    }

    #[test]
    fn scarce_e_agents_fill_star_blocks_first() {
        // only agents 4 and 5 peak at the chosen size
        let g = peaked(7, &[1, 1, 1, 3, 2, 2, 3]);
        let i = SizeInterval::from_sizes(vec![1, 2, 3]);
        let (p, t) = stabilize_single_peaked(&g, &natural_ordering(7), &i).unwrap();
        let sp = t.single_peaked.unwrap();
        assert_eq!(sp.h_star, 2);
        assert_eq!(sp.e, vec![4, 5]);
        assert_eq!(sp.e_prime, vec![4, 5]);
        assert_eq!(p.block_of(4), &Coalition::from_agents([4, 5]));
    }

    #[test]
    fn reversed_ordering_changes_the_scan() {
        let g = peaked(4, &[1, 1, 2, 2]);
        let i = SizeInterval::from_sizes(vec![1, 2]);
        let (_, t) = stabilize_single_peaked(&g, &[4, 3, 2, 1], &i).unwrap();
        let sp = t.single_peaked.unwrap();
        assert_eq!(sp.sizes_in_order, vec![2, 1]);
        assert_eq!(sp.h_star, 2);
        assert_eq!(t.s_star, 1);
    }
}
