//! Degree-split stabilizer for simple fractional hedonic games.
//!
//! Agents are split on out-degree. When enough agents have low degree, a few
//! of them (the `Gr` set) are each grouped with a small number of
//! neighbours, preferably singletons outside the candidate pool `H`.
//! Otherwise the highest-degree agents carve out a dense clique-like block
//! `F` and the rest of `N` forms the second block.

use serde::Serialize;

use crate::coalition::{AgentId, Coalition};
use crate::game::{HedonicGame, SimpleFhg};
use crate::io::one_based;
use crate::partition::Partition;

/// Integer thresholds driving the branch choice and loop lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FhgThresholds {
    /// Size of the candidate pool `H`, and the minimum low-degree count for the matching branch.
    pub h: usize,
    /// Number of agents added to `Gr`.
    pub budget: usize,
    /// Agents with out-degree at most this count as low-degree.
    pub degree_cut: usize,
}

impl FhgThresholds {
    /// `h = max(1, ⌊n^{1/3}/62⌋)`, `budget = max(1, ⌊n^{1/3}/124⌋)`,
    /// `degree_cut = ⌊n − 31 n^{2/3}⌋` clamped to `[0, n − 1]`.
    pub fn clamped(n: usize) -> Self {
        let nf = n as f64;
        let cbrt = nf.cbrt();
        let cut = (nf - 31.0 * cbrt * cbrt).floor();
        Self {
            h: ((cbrt / 62.0).floor() as usize).max(1),
            budget: ((cbrt / 124.0).floor() as usize).max(1),
            degree_cut: cut.clamp(0.0, n.saturating_sub(1) as f64) as usize,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FhgBranch {
    Matching,
    Clique,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FhgStep {
    Matching {
        #[serde(with = "one_based::agent")]
        agent: AgentId,
        degree: usize,
        /// `⌈2 d_i / (n − d_i)⌉`.
        target: usize,
        #[serde(with = "one_based::agents")]
        f_i: Vec<AgentId>,
        #[serde(with = "one_based::agents")]
        block: Vec<AgentId>,
    },
    Clique {
        #[serde(with = "one_based::agent")]
        agent: AgentId,
        degree: usize,
        #[serde(with = "one_based::agents")]
        deleted: Vec<AgentId>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FhgStabilizerTrace {
    pub n: usize,
    pub thresholds: FhgThresholds,
    pub degrees: Vec<usize>,
    /// Number of agents with degree at most the cut.
    pub phi: usize,
    pub branch: FhgBranch,
    #[serde(with = "one_based::agents")]
    pub gr: Vec<AgentId>,
    pub steps: Vec<FhgStep>,
    /// The loop ran out of candidates before exhausting its budget.
    pub starved: bool,
    /// Final `F` on the clique branch.
    #[serde(with = "one_based::agents_opt")]
    pub clique: Option<Vec<AgentId>>,
}

/// Runs the stabilizer with [`FhgThresholds::clamped`].
pub fn stabilize_fhg(game: &SimpleFhg) -> (Partition, FhgStabilizerTrace) {
    stabilize_fhg_with(game, FhgThresholds::clamped(game.n()))
}

pub fn stabilize_fhg_with(game: &SimpleFhg, thresholds: FhgThresholds) -> (Partition, FhgStabilizerTrace) {
    let n = game.n();
    assert!(n >= 1, "empty game");
    let degrees: Vec<usize> = (0..n).map(|i| game.degree(i)).collect();
    let phi = degrees.iter().filter(|&&d| d <= thresholds.degree_cut).count();
    let mut trace = FhgStabilizerTrace {
        n,
        thresholds,
        degrees,
        phi,
        branch: FhgBranch::Clique,
        gr: Vec::new(),
        steps: Vec::new(),
        starved: false,
        clique: None,
    };
    let partition = if phi >= thresholds.h {
        trace.branch = FhgBranch::Matching;
        matching_branch(game, &mut trace)
    } else {
        clique_branch(game, &mut trace)
    };
    (partition, trace)
}

fn matching_branch(game: &SimpleFhg, trace: &mut FhgStabilizerTrace) -> Partition {
    let n = game.n();
    let deg = &trace.degrees;
    let mut order: Vec<AgentId> = (0..n).collect();
    order.sort_by_key(|&i| (deg[i], i));
    let mut in_h = vec![false; n];
    let mut h_list: Vec<AgentId> = order.iter().copied().take(trace.thresholds.h).collect();
    for &i in &h_list {
        in_h[i] = true;
    }

    // block label per agent; all singletons to start
    let mut label: Vec<usize> = (0..n).collect();
    let mut block_size = vec![1usize; n];
    let mut next_label = n;

    for _ in 0..trace.thresholds.budget {
        let Some(pos) = h_list.iter().position(|&a| in_h[a]) else {
            trace.starved = true;
            break;
        };
        let i = h_list[pos];
        trace.gr.push(i);
        let d = deg[i];
        let target = (2 * d).div_ceil(n - d);

        let mut candidates: Vec<AgentId> = game.neighbors(i).members().collect();
        candidates.sort_by_key(|&j| {
            let tier = match (in_h[j], block_size[label[j]] == 1) {
                (false, true) => 0,
                (false, false) => 1,
                (true, _) => 2,
            };
            (tier, j)
        });
        candidates.truncate(target);

        let merged: Vec<usize> = std::iter::once(label[i]).chain(candidates.iter().map(|&j| label[j])).collect();
        let fresh = next_label;
        next_label += 1;
        let mut size = 0;
        for l in label.iter_mut() {
            if merged.contains(l) {
                *l = fresh;
                size += 1;
            }
        }
        block_size.push(0);
        block_size.resize(next_label, 0);
        block_size[fresh] = size;

        in_h[i] = false;
        for &j in &candidates {
            in_h[j] = false;
        }
        h_list.retain(|&a| in_h[a]);
        let block = (0..n).filter(|&a| label[a] == fresh).collect();
        trace.steps.push(FhgStep::Matching { agent: i, degree: d, target, f_i: candidates, block });
    }
    Partition::from_labels(&label)
}

fn clique_branch(game: &SimpleFhg, trace: &mut FhgStabilizerTrace) -> Partition {
    let n = game.n();
    let mut f = Coalition::full(n);
    let mut in_gr = vec![false; n];
    for _ in 0..trace.thresholds.budget {
        // max degree, ties to the lowest id
        let pick = f.members().filter(|&a| !in_gr[a]).min_by_key(|&a| (std::cmp::Reverse(trace.degrees[a]), a));
        let Some(i) = pick else {
            trace.starved = true;
            break;
        };
        let nb = game.neighbors(i);
        let deleted: Vec<AgentId> = f.members().filter(|&a| a != i && !nb.contains(a)).collect();
        for &a in &deleted {
            f.remove(a);
        }
        in_gr[i] = true;
        trace.gr.push(i);
        trace.steps.push(FhgStep::Clique { agent: i, degree: trace.degrees[i], deleted });
    }
    trace.clique = Some(f.members().collect());
    let rest: Coalition = (0..n).filter(|&a| !f.contains(a)).collect();
    let blocks = if rest.is_empty() { vec![f] } else { vec![f, rest] };
    Partition::new(n, blocks).expect("F and N \\ F partition N")
}
