//! Agent identifiers and bit-indexed coalitions.
//!
//! A coalition over `n <= 64` agents occupies a single machine word; larger
//! agent sets spill into a small word array. The cardinality is cached so
//! that size lookups (the only thing anonymous games care about) are free.

use std::fmt;

use smallvec::SmallVec;

/// 0-based agent index. File formats use 1-based indices.
pub type AgentId = usize;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Coalition {
    words: SmallVec<[u64; 1]>,
    size: usize,
}

impl Coalition {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(agent: AgentId) -> Self {
        let mut c = Self::empty();
        c.insert(agent);
        c
    }

    /// The first `n` agents.
    pub fn full(n: usize) -> Self {
        Self::from_agents(0..n)
    }

    pub fn from_mask(mask: u64) -> Self {
        let mut words = SmallVec::new();
        if mask != 0 {
            words.push(mask);
        }
        Self { words, size: mask.count_ones() as usize }
    }

    pub fn from_agents<I: IntoIterator<Item = AgentId>>(agents: I) -> Self {
        let mut c = Self::empty();
        for a in agents {
            c.insert(a);
        }
        c
    }

    /// Builds a coalition from raw words; trailing zero words are trimmed.
    pub fn from_words(words: &[u64]) -> Self {
        let mut w: SmallVec<[u64; 1]> = SmallVec::from_slice(words);
        while w.last() == Some(&0) {
            w.pop();
        }
        let size = w.iter().map(|x| x.count_ones() as usize).sum();
        Self { words: w, size }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn contains(&self, agent: AgentId) -> bool {
        self.words.get(agent / 64).is_some_and(|w| w >> (agent % 64) & 1 == 1)
    }

    /// Returns true if the agent was newly added.
    pub fn insert(&mut self, agent: AgentId) -> bool {
        let (w, b) = (agent / 64, agent % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let fresh = self.words[w] >> b & 1 == 0;
        if fresh {
            self.words[w] |= 1 << b;
            self.size += 1;
        }
        fresh
    }

    /// Returns true if the agent was present.
    pub fn remove(&mut self, agent: AgentId) -> bool {
        let (w, b) = (agent / 64, agent % 64);
        let present = self.contains(agent);
        if present {
            self.words[w] &= !(1 << b);
            self.size -= 1;
            while self.words.last() == Some(&0) {
                self.words.pop();
            }
        }
        present
    }

    /// The coalition as a single word, if every member is below 64.
    pub fn as_mask(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Members in ascending order.
    pub fn members(&self) -> Members<'_> {
        Members { words: &self.words, idx: 0, cur: self.words.first().copied().unwrap_or(0) }
    }

    /// `|self ∩ other|`.
    pub fn intersection_size(&self, other: &Coalition) -> usize {
        self.words.iter().zip(other.words.iter()).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn intersects(&self, other: &Coalition) -> bool {
        self.words.iter().zip(other.words.iter()).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset_of(&self, other: &Coalition) -> bool {
        self.words.iter().enumerate().all(|(i, w)| {
            let o = other.words.get(i).copied().unwrap_or(0);
            w & !o == 0
        })
    }

    pub fn union(&self, other: &Coalition) -> Coalition {
        let len = self.words.len().max(other.words.len());
        let words: Vec<u64> = (0..len)
            .map(|i| self.words.get(i).copied().unwrap_or(0) | other.words.get(i).copied().unwrap_or(0))
            .collect();
        Coalition::from_words(&words)
    }

    /// Largest member plus one (0 for the empty coalition).
    pub fn span(&self) -> usize {
        match self.words.last() {
            None => 0,
            Some(&w) => (self.words.len() - 1) * 64 + (64 - w.leading_zeros() as usize),
        }
    }

    /// Members as 1-based indices, the file-format convention.
    pub fn to_one_based(&self) -> Vec<usize> {
        self.members().map(|a| a + 1).collect()
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

impl FromIterator<AgentId> for Coalition {
    fn from_iter<T: IntoIterator<Item = AgentId>>(iter: T) -> Self {
        Self::from_agents(iter)
    }
}

pub struct Members<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl Iterator for Members<'_> {
    type Item = AgentId;

    #[inline]
    fn next(&mut self) -> Option<AgentId> {
        loop {
            if self.cur != 0 {
                let b = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.idx * 64 + b);
            }
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
    }
}
