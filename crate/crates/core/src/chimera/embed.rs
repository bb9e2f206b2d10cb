use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ChimeraGraph;
use crate::par::{self, Execution};

/// Chains of hardware qubits, one per logical variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    chains: Vec<Vec<usize>>,
}

impl Embedding {
    /// Chains are sorted on construction.
    pub fn new(mut chains: Vec<Vec<usize>>) -> Self {
        for c in &mut chains {
            c.sort_unstable();
            c.dedup();
        }
        Self { chains }
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn chain(&self, v: usize) -> &[usize] {
        &self.chains[v]
    }

    pub fn num_logical(&self) -> usize {
        self.chains.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn max_chain(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mean_chain(&self) -> f64 {
        if self.chains.is_empty() {
            0.0
        } else {
            self.num_qubits() as f64 / self.chains.len() as f64
        }
    }

    /// `{"0": [q, ...], ...}` keyed by logical variable id.
    pub fn to_json_map(&self) -> BTreeMap<usize, Vec<usize>> {
        self.chains.iter().cloned().enumerate().collect()
    }

    pub fn from_json_map(map: BTreeMap<usize, Vec<usize>>) -> Option<Self> {
        let n = map.len();
        if map.keys().copied().ne(0..n) {
            return None;
        }
        Some(Self::new(map.into_values().collect()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbeddingError {
    #[error("embedding has {got} chains, problem has {expected} variables")]
    ChainCount { expected: usize, got: usize },
    #[error("chain of variable {0} is empty")]
    EmptyChain(usize),
    #[error("qubit {qubit} of variable {var} is not a working qubit")]
    DeadQubit { var: usize, qubit: usize },
    #[error("qubit {qubit} is shared by variables {a} and {b}")]
    Overlap { qubit: usize, a: usize, b: usize },
    #[error("chain of variable {0} is disconnected")]
    Disconnected(usize),
    #[error("no hardware edge between the chains of {0} and {1}")]
    MissingEdge(usize, usize),
}

/// Checks disjointness, connectivity and edge coverage.
pub fn check_embedding(
    embedding: &Embedding,
    num_logical: usize,
    edges: &[(usize, usize)],
    hw: &ChimeraGraph,
) -> Result<(), EmbeddingError> {
    if embedding.num_logical() != num_logical {
        return Err(EmbeddingError::ChainCount {
            expected: num_logical,
            got: embedding.num_logical(),
        });
    }
    let mut owner: Vec<Option<usize>> = vec![None; hw.id_space()];
    for (v, chain) in embedding.chains().iter().enumerate() {
        if chain.is_empty() {
            return Err(EmbeddingError::EmptyChain(v));
        }
        for &q in chain {
            if !hw.is_alive(q) {
                return Err(EmbeddingError::DeadQubit { var: v, qubit: q });
            }
            if let Some(a) = owner[q] {
                return Err(EmbeddingError::Overlap { qubit: q, a, b: v });
            }
            owner[q] = Some(v);
        }
        let mut seen = vec![chain[0]];
        let mut stack = vec![chain[0]];
        while let Some(q) = stack.pop() {
            for &r in hw.neighbors(q) {
                if owner[r] == Some(v) && !seen.contains(&r) {
                    seen.push(r);
                    stack.push(r);
                }
            }
        }
        if seen.len() != chain.len() {
            return Err(EmbeddingError::Disconnected(v));
        }
    }
    for &(a, b) in edges {
        let linked = embedding
            .chain(a)
            .iter()
            .any(|&q| hw.neighbors(q).iter().any(|&r| owner[r] == Some(b)));
        if !linked {
            return Err(EmbeddingError::MissingEdge(a, b));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub seed: u64,
    /// Wall-clock budget across all attempts.
    pub time_limit: Duration,
    /// Independent restarts, seeded `seed, seed + 1, ...`.
    pub attempts: usize,
    /// Rip-up-and-reroute rounds per attempt.
    pub rounds: usize,
    /// Extra rounds spent shrinking chains once the embedding is valid.
    pub shrink_rounds: usize,
    pub execution: Execution,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            time_limit: Duration::from_secs(120),
            attempts: 8,
            rounds: 400,
            shrink_rounds: 16,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedOutcome {
    pub embedding: Option<Embedding>,
    /// Seed of the attempt that succeeded.
    pub seed: Option<u64>,
    pub elapsed: Duration,
}

/// Heuristic minor embedding by weighted shortest-path chain growth with
/// rip-up and reroute. Returns the first successful attempt in seed order.
pub fn embed(num_logical: usize, edges: &[(usize, usize)], hw: &ChimeraGraph, config: &EmbedConfig) -> EmbedOutcome {
    let clock = Instant::now();
    let deadline = clock + config.time_limit;
    let found = par::find_map_first(config.attempts.max(1), config.execution, |a| {
        let seed = config.seed.wrapping_add(a as u64);
        let emb = Attempt::new(num_logical, edges, hw, seed).run(config, deadline)?;
        check_embedding(&emb, num_logical, edges, hw).ok()?;
        Some((emb, seed))
    });
    EmbedOutcome {
        seed: found.as_ref().map(|f| f.1),
        embedding: found.map(|f| f.0),
        elapsed: clock.elapsed(),
    }
}

/// Overlap penalty base while chains are still being untangled.
const OVERLAP_BASE: f64 = 8.0;

struct Attempt<'a> {
    hw: &'a ChimeraGraph,
    nbrs: Vec<Vec<usize>>,
    chains: Vec<Vec<usize>>,
    usage: Vec<u32>,
    history: Vec<f64>,
    rank: Vec<u32>,
    rng: ChaCha8Rng,
    base: f64,
}

impl<'a> Attempt<'a> {
    fn new(num_logical: usize, edges: &[(usize, usize)], hw: &'a ChimeraGraph, seed: u64) -> Self {
        let mut nbrs = vec![Vec::new(); num_logical];
        for &(a, b) in edges {
            if a != b && !nbrs[a].contains(&b) {
                nbrs[a].push(b);
                nbrs[b].push(a);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<u32> = (0..hw.id_space() as u32).collect();
        order.shuffle(&mut rng);
        let mut rank = vec![0; hw.id_space()];
        for (r, &q) in order.iter().enumerate() {
            rank[q as usize] = r as u32;
        }
        Self {
            hw,
            nbrs,
            chains: vec![Vec::new(); num_logical],
            usage: vec![0; hw.id_space()],
            history: vec![0.0; hw.id_space()],
            rank,
            rng,
            base: OVERLAP_BASE,
        }
    }

    fn weight(&self, q: usize) -> f64 {
        (1.0 + self.history[q]) * self.base.powi(self.usage[q].min(8) as i32)
    }

    fn overlapping(&self) -> bool {
        self.usage.iter().any(|&u| u > 1) || self.chains.iter().any(Vec::is_empty)
    }

    fn total(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    fn run(mut self, config: &EmbedConfig, deadline: Instant) -> Option<Embedding> {
        if self.chains.is_empty() {
            return Some(Embedding::new(Vec::new()));
        }
        if self.hw.num_qubits() < self.chains.len() {
            return None;
        }
        let mut order: Vec<usize> = (0..self.chains.len()).collect();
        order.shuffle(&mut self.rng);
        // place high-degree variables first
        order.sort_by_key(|&v| Reverse(self.nbrs[v].len()));
        for &v in &order {
            self.reroute(v);
        }
        // overlaps stay cheap enough to cross while congested qubits
        // accumulate history cost; shrinking then forbids overlaps outright
        let max_base = (self.hw.num_qubits() as f64).max(2.0);
        let mut rounds = 0;
        while self.overlapping() {
            if rounds == config.rounds || Instant::now() > deadline {
                return None;
            }
            self.round();
            for (h, &u) in self.history.iter_mut().zip(&self.usage) {
                if u > 1 {
                    *h += f64::from(u - 1);
                }
            }
            rounds += 1;
        }
        self.base = max_base;
        self.history.iter_mut().for_each(|h| *h = 0.0);
        let mut best = self.chains.clone();
        let mut best_total = self.total();
        for _ in 0..config.shrink_rounds {
            if Instant::now() > deadline {
                break;
            }
            self.round();
            if !self.overlapping() && self.total() < best_total {
                best = self.chains.clone();
                best_total = self.total();
            }
        }
        Some(Embedding::new(best))
    }

    fn round(&mut self) {
        let mut order: Vec<usize> = (0..self.chains.len()).collect();
        order.shuffle(&mut self.rng);
        for v in order {
            self.reroute(v);
        }
    }

    fn set_chain(&mut self, v: usize, chain: Vec<usize>) {
        for &q in &self.chains[v] {
            self.usage[q] -= 1;
        }
        for &q in &chain {
            self.usage[q] += 1;
        }
        self.chains[v] = chain;
    }

    fn reroute(&mut self, v: usize) {
        self.set_chain(v, Vec::new());
        let placed: Vec<usize> = self.nbrs[v]
            .iter()
            .copied()
            .filter(|&u| !self.chains[u].is_empty())
            .collect();
        if placed.is_empty() {
            let root = self
                .hw
                .qubits()
                .min_by_key(|&q| (self.usage[q], self.rank[q]))
                .expect("hardware has qubits");
            self.set_chain(v, vec![root]);
            return;
        }
        let searches: Vec<(Vec<f64>, Vec<usize>)> = placed.iter().map(|&u| self.dijkstra(u)).collect();
        let mut root = None;
        let mut best = f64::INFINITY;
        for q in self.hw.qubits() {
            let w = self.weight(q);
            let cost: f64 = searches.iter().map(|(dist, _)| dist[q].max(w)).sum();
            let better = cost < best
                || (cost == best && root.is_some_and(|r: usize| self.rank[q] < self.rank[r]));
            if better && cost.is_finite() {
                best = cost;
                root = Some(q);
            }
        }
        let Some(root) = root else {
            self.set_chain(v, Vec::new());
            return;
        };
        let mut chain = vec![root];
        for ((_, parent), &u) in searches.iter().zip(&placed) {
            let mut q = root;
            while !self.chains[u].contains(&q) {
                if !chain.contains(&q) {
                    chain.push(q);
                }
                let p = parent[q];
                if p == usize::MAX || self.chains[u].contains(&p) {
                    break;
                }
                q = p;
            }
        }
        // a root inside a neighbour chain would be dropped by the walk above
        if !chain.contains(&root) {
            chain.push(root);
        }
        self.set_chain(v, chain);
    }

    /// Node-weighted distances from the chain of `u`; entering qubit `q`
    /// costs its weight. Chain qubits of `u` have distance 0.
    fn dijkstra(&self, u: usize) -> (Vec<f64>, Vec<usize>) {
        let n = self.hw.id_space();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        for &q in &self.chains[u] {
            dist[q] = 0.0;
            heap.push(Reverse((Ordered(0.0), self.rank[q], q)));
        }
        while let Some(Reverse((Ordered(d), _, q))) = heap.pop() {
            if d > dist[q] {
                continue;
            }
            for &r in self.hw.neighbors(q) {
                let nd = d + self.weight(r);
                if nd < dist[r] {
                    dist[r] = nd;
                    parent[r] = q;
                    heap.push(Reverse((Ordered(nd), self.rank[r], r)));
                }
            }
        }
        (dist, parent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ordered(f64);

impl Eq for Ordered {}

impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
