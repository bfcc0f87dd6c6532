//! Coalition structures: disjoint covers of the agent set.

use std::fmt;

use crate::coalition::{AgentId, Coalition};

/// Why a block list fails to be a partition of `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionViolation {
    Duplicate { agent: AgentId },
    Missing { agent: AgentId },
    OutOfRange { agent: AgentId, n: usize },
    EmptyBlock { index: usize },
}

impl fmt::Display for PartitionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // 1-based in messages, matching the file formats
        match self {
            Self::Duplicate { agent } => {
                write!(f, "agent {} appears in more than one block", agent + 1)
            }
            Self::Missing { agent } => write!(f, "agent {} is not covered by any block", agent + 1),
            Self::OutOfRange { agent, n } => {
                write!(f, "agent {} is out of range for n = {n}", agent + 1)
            }
            Self::EmptyBlock { index } => write!(f, "block {index} is empty"),
        }
    }
}

impl std::error::Error for PartitionViolation {}

/// Checks that `blocks` is a disjoint cover of `[0, n)` by non-empty blocks.
pub fn validate_partition(blocks: &[Coalition], n: usize) -> Result<(), PartitionViolation> {
    let mut seen = vec![false; n];
    for (index, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(PartitionViolation::EmptyBlock { index });
        }
        for a in block.members() {
            if a >= n {
                return Err(PartitionViolation::OutOfRange { agent: a, n });
            }
            if std::mem::replace(&mut seen[a], true) {
                return Err(PartitionViolation::Duplicate { agent: a });
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(agent) => Err(PartitionViolation::Missing { agent }),
        None => Ok(()),
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Coalition>,
    assignment: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Coalition>) -> Result<Self, PartitionViolation> {
        validate_partition(&blocks, n)?;
        let mut assignment = vec![0; n];
        for (bi, b) in blocks.iter().enumerate() {
            for a in b.members() {
                assignment[a] = bi;
            }
        }
        Ok(Self { blocks, assignment })
    }

    pub fn from_lists(n: usize, lists: &[Vec<AgentId>]) -> Result<Self, PartitionViolation> {
        // Duplicates inside a single list would be swallowed by the bitset.
        let mut seen = vec![false; n];
        for list in lists {
            for &a in list {
                if a < n && std::mem::replace(&mut seen[a], true) {
                    return Err(PartitionViolation::Duplicate { agent: a });
                }
            }
        }
        Self::new(n, lists.iter().map(|l| Coalition::from_agents(l.iter().copied())).collect())
    }

    /// Builds a partition from a block label per agent; labels need not be contiguous.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut order: Vec<usize> = Vec::new();
        let mut blocks: Vec<Coalition> = Vec::new();
        for (agent, &l) in labels.iter().enumerate() {
            let bi = match order.iter().position(|&x| x == l) {
                Some(bi) => bi,
                None => {
                    order.push(l);
                    blocks.push(Coalition::empty());
                    order.len() - 1
                }
            };
            blocks[bi].insert(agent);
        }
        Self::new(labels.len(), blocks).expect("labels always define a partition")
    }

    pub fn singletons(n: usize) -> Self {
        Self::new(n, (0..n).map(Coalition::singleton).collect()).expect("singletons partition")
    }

    pub fn grand(n: usize) -> Self {
        if n == 0 {
            return Self { blocks: Vec::new(), assignment: Vec::new() };
        }
        Self::new(n, vec![Coalition::full(n)]).expect("grand coalition")
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn blocks(&self) -> &[Coalition] {
        &self.blocks
    }

    /// `π(i)`.
    #[inline]
    pub fn block_of(&self, agent: AgentId) -> &Coalition {
        &self.blocks[self.assignment[agent]]
    }

    #[inline]
    pub fn block_index(&self, agent: AgentId) -> usize {
        self.assignment[agent]
    }

    pub fn into_blocks(self) -> Vec<Coalition> {
        self.blocks
    }

    /// Same blocks regardless of listing order.
    pub fn same_as(&self, other: &Partition) -> bool {
        self.n() == other.n()
            && self.blocks.len() == other.blocks.len()
            && (0..self.n()).all(|a| self.block_of(a) == other.block_of(a))
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(Coalition::to_one_based).collect()
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.blocks.iter()).finish()
    }
}

/// Visits every set partition of `[0, n)` as a restricted growth string.
pub fn for_each_set_partition(n: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    if n == 0 {
        visit(&[]);
        return;
    }
    let mut a = vec![0usize; n];
    // b[i] = 1 + max(a[0..i])
    let mut b = vec![1usize; n];
    loop {
        if !visit(&a) {
            return;
        }
        let mut i = n - 1;
        loop {
            if i == 0 {
                return;
            }
            if a[i] < b[i] {
                break;
            }
            i -= 1;
        }
        a[i] += 1;
        for j in i + 1..n {
            a[j] = 0;
            b[j] = b[i].max(a[i] + 1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        let c = |v: &[usize]| Coalition::from_agents(v.iter().copied());
        assert_eq!(validate_partition(&[c(&[0, 1]), c(&[2])], 3), Ok(()));
        assert_eq!(validate_partition(&[c(&[0, 1]), c(&[1, 2])], 3), Err(PartitionViolation::Duplicate { agent: 1 }));
        assert_eq!(validate_partition(&[c(&[0])], 2), Err(PartitionViolation::Missing { agent: 1 }));
        assert_eq!(validate_partition(&[c(&[0, 5])], 2), Err(PartitionViolation::OutOfRange { agent: 5, n: 2 }));
        assert_eq!(
            validate_partition(&[c(&[0, 1]), Coalition::empty()], 2),
            Err(PartitionViolation::EmptyBlock { index: 1 })
        );
    }

    #[test]
    fn from_lists_catches_repeats_within_a_block() {
        assert_eq!(Partition::from_lists(2, &[vec![0, 0], vec![1]]), Err(PartitionViolation::Duplicate { agent: 0 }));
    }

    #[test]
    fn bell_numbers() {
        let bell = [1u64, 1, 2, 5, 15, 52, 203, 877, 4140, 21147];
        for (n, &expected) in bell.iter().enumerate() {
            let mut count = 0;
            for_each_set_partition(n, |_| {
                count += 1;
                true
            });
            assert_eq!(count, expected, "Bell({n})");
        }
    }

    #[test]
    fn labels_build_lookup() {
        let p = Partition::from_labels(&[4, 4, 1, 4]);
        assert_eq!(p.blocks().len(), 2);
        assert_eq!(p.block_of(3), &Coalition::from_agents([0, 1, 3]));
        assert_eq!(p.block_index(2), 1);
        assert!(p.same_as(&Partition::from_labels(&[0, 0, 2, 0])));
    }
}
