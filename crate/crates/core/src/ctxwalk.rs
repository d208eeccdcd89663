//! Attributed random walks over a bipartite snapshot.
//!
//! Besides the play edges, same-kind nodes are linked by augmented edges
//! when their feature vectors are similar. A walker that arrived at `curr`
//! from `prev` moves to a node of `prev`'s kind, choosing among `prev`
//! itself, `prev`'s augmented neighbours, and nodes two hops from `prev`
//! that are adjacent to `curr`. Each step emits the (player, game) pair it
//! traversed; those pairs are the contexts of the seed edge.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bigraph::{Day, EdgeKey, NodeId, NodeKind, SnapshotSeries};
use crate::error::{Error, Result};

/// Context pairs are oriented (player, game) and need not be edges.
pub type ContextPair = EdgeKey;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NegativeDistribution {
    Uniform,
    /// Context frequency raised to `power` (0.75 in word2vec).
    Unigram { power: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    /// Augmented edges require similarity above `1 - epsilon`.
    pub epsilon: f64,
    /// Return weight; the previous node gets weight `1/p`.
    pub p: f64,
    /// In-out weight; similar nodes get weight `sim/q`.
    pub q: f64,
    pub walk_len: usize,
    pub contexts_per_edge: usize,
    pub k_aug: usize,
    pub negatives_per_context: usize,
    pub negatives: NegativeDistribution,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            epsilon: 1.0,
            p: 1.0,
            q: 0.05,
            walk_len: 8,
            contexts_per_edge: 4,
            k_aug: 10,
            // one uniform negative keeps the expected gradient parallel to the
            // full softmax gradient near zero scores
            negatives_per_context: 1,
            negatives: NegativeDistribution::Uniform,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!(
                "epsilon must be in (0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.p > 0.0 && self.p.is_finite() && self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::Config("p and q must be positive".into()));
        }
        if self.walk_len == 0 || self.contexts_per_edge == 0 || self.negatives_per_context == 0 {
            return Err(Error::Config(
                "walk_len, contexts_per_edge and negatives_per_context must be at least 1".into(),
            ));
        }
        if let NegativeDistribution::Unigram { power } = self.negatives {
            if !(power >= 0.0 && power.is_finite()) {
                return Err(Error::Config("unigram power must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Same-kind similarity links. A node's list holds its own top-`k_aug`
/// selections plus every node that selected it, sorted by similarity
/// (descending) then index.
#[derive(Debug, Clone, Default)]
pub struct AugmentedIndex {
    lists: HashMap<NodeId, Vec<(NodeId, f64)>>,
}

impl AugmentedIndex {
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, f64)] {
        self.lists.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).iter().any(|&(o, _)| o == b)
    }

    pub fn len(&self) -> usize {
        self.lists.values().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// Builds the index from explicit undirected links.
    pub fn from_links(links: impl IntoIterator<Item = (NodeId, NodeId, f64)>) -> Result<Self> {
        let mut idx = AugmentedIndex::default();
        for (a, b, s) in links {
            if a.kind != b.kind || a == b {
                return Err(Error::Contract(format!(
                    "augmented link {a}-{b} must join distinct nodes of one kind"
                )));
            }
            idx.link(a, b, s);
        }
        idx.sort();
        Ok(idx)
    }

    fn link(&mut self, a: NodeId, b: NodeId, sim: f64) {
        if !self.contains(a, b) {
            self.lists.entry(a).or_default().push((b, sim));
            self.lists.entry(b).or_default().push((a, sim));
        }
    }

    fn sort(&mut self) {
        for list in self.lists.values_mut() {
            list.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        }
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        vec![0.0; v.len()]
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact top-`k_aug` same-kind neighbours above the `1 - epsilon` threshold.
pub fn build_augmented_index(
    nodes: &HashMap<NodeId, Vec<f64>>,
    cfg: &WalkConfig,
) -> AugmentedIndex {
    let threshold = 1.0 - cfg.epsilon;
    let units: HashMap<NodeId, Vec<f64>> = nodes.iter().map(|(&n, x)| (n, unit(x))).collect();
    let nodes = &units;
    let mut idx = AugmentedIndex::default();
    for kind in [NodeKind::Player, NodeKind::Game] {
        let mut ids: Vec<NodeId> = nodes.keys().copied().filter(|n| n.kind == kind).collect();
        ids.sort_unstable();
        for &a in &ids {
            let ua = &nodes[&a];
            let mut cands: Vec<(NodeId, f64)> = ids
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| (b, dot(ua, &nodes[&b])))
                .filter(|&(_, s)| s > threshold)
                .collect();
            cands.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            cands.truncate(cfg.k_aug);
            for (b, s) in cands {
                idx.link(a, b, s);
            }
        }
    }
    idx.sort();
    idx
}

/// One day's bipartite graph, unit-normalized node features and augmented
/// index; everything the walker needs.
#[derive(Debug, Clone)]
pub struct WalkGraph {
    adjacency: HashMap<NodeId, Vec<NodeId>>,
    edges: HashSet<EdgeKey>,
    units: HashMap<NodeId, Vec<f64>>,
    aug: AugmentedIndex,
}

impl WalkGraph {
    /// Graph over `edges` with features for every endpoint; the augmented
    /// index is built from the features.
    pub fn new(
        edges: &[EdgeKey],
        features: &HashMap<NodeId, Vec<f64>>,
        cfg: &WalkConfig,
    ) -> Result<Self> {
        let mut units = HashMap::new();
        for e in edges {
            for n in [e.player_node(), e.game_node()] {
                if let Entry::Vacant(slot) = units.entry(n) {
                    let x = features.get(&n).ok_or(Error::MissingFeatures { node: n, day: 0 })?;
                    slot.insert(unit(x));
                }
            }
        }
        let aug = build_augmented_index(&units, cfg);
        Ok(Self::assemble(edges, units, aug))
    }

    /// Graph with a caller-provided augmented index.
    pub fn with_index(
        edges: &[EdgeKey],
        features: &HashMap<NodeId, Vec<f64>>,
        aug: AugmentedIndex,
    ) -> Self {
        let units = features.iter().map(|(&n, x)| (n, unit(x))).collect();
        Self::assemble(edges, units, aug)
    }

    /// Snapshot `G^(t)` of a series.
    pub fn from_series(series: &SnapshotSeries, day: Day, cfg: &WalkConfig) -> Result<Self> {
        let edges = series.edges_at(day)?;
        Self::from_edges(series, day, &edges, cfg)
    }

    pub(crate) fn from_edges(
        series: &SnapshotSeries,
        day: Day,
        edges: &[EdgeKey],
        cfg: &WalkConfig,
    ) -> Result<Self> {
        let mut feats = HashMap::new();
        for e in edges {
            for n in [e.player_node(), e.game_node()] {
                if let Entry::Vacant(slot) = feats.entry(n) {
                    slot.insert(series.features(n, day)?.as_slice().to_vec());
                }
            }
        }
        Self::new(edges, &feats, cfg)
    }

    fn assemble(edges: &[EdgeKey], units: HashMap<NodeId, Vec<f64>>, aug: AugmentedIndex) -> Self {
        let mut adjacency: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        let mut set = HashSet::new();
        for &e in edges {
            if set.insert(e) {
                adjacency.entry(e.player_node()).or_default().push(e.game_node());
                adjacency.entry(e.game_node()).or_default().push(e.player_node());
            }
        }
        for list in adjacency.values_mut() {
            list.sort_unstable();
        }
        WalkGraph {
            adjacency,
            edges: set,
            units,
            aug,
        }
    }

    pub fn augmented(&self) -> &AugmentedIndex {
        &self.aug
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        self.adjacency.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_edge(&self, a: NodeId, b: NodeId) -> bool {
        EdgeKey::from_nodes(a, b)
            .map(|e| self.edges.contains(&e))
            .unwrap_or(false)
    }

    pub fn contains_edge(&self, e: EdgeKey) -> bool {
        self.edges.contains(&e)
    }

    /// Cosine similarity of two nodes' features (0 if either is unknown).
    pub fn similarity(&self, a: NodeId, b: NodeId) -> f64 {
        match (self.units.get(&a), self.units.get(&b)) {
            (Some(x), Some(y)) => dot(x, y),
            _ => 0.0,
        }
    }

    fn share_neighbor(&self, a: NodeId, b: NodeId) -> bool {
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        if na.iter().any(|x| nb.binary_search(x).is_ok()) {
            return true;
        }
        self.aug
            .neighbors(a)
            .iter()
            .any(|&(x, _)| self.aug.contains(b, x))
    }
}

/// Next-node distribution for a walker at `curr` that came from `prev`.
///
/// Returns `(node, probability)` pairs with positive mass only; every other
/// node, in particular any node not of `prev`'s kind, has probability 0.
pub fn transition_distribution(
    graph: &WalkGraph,
    prev: NodeId,
    curr: NodeId,
    cfg: &WalkConfig,
) -> Result<Vec<(NodeId, f64)>> {
    if prev.kind == curr.kind {
        return Err(Error::Contract(format!(
            "walk step from {prev} to {curr} does not alternate kinds"
        )));
    }
    let mut out: Vec<(NodeId, f64)> = Vec::new();
    out.push((prev, 1.0 / cfg.p));
    let n1 = graph.aug.neighbors(prev);
    for &(o, sim) in n1 {
        out.push((o, sim.max(0.0) / cfg.q));
    }
    let curr_adjacent = graph.is_edge(prev, curr);
    for &o in graph.neighbors(curr) {
        if o == prev || graph.aug.contains(prev, o) {
            continue;
        }
        // o is adjacent to curr; it counts only at distance exactly 2 from prev
        if !curr_adjacent && !graph.share_neighbor(prev, o) {
            continue;
        }
        out.push((o, graph.similarity(prev, o).max(0.0) / cfg.q));
    }
    out.retain(|&(_, w)| w > 0.0);
    let total: f64 = out.iter().map(|&(_, w)| w).sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::WalkerStuck);
    }
    for (_, w) in out.iter_mut() {
        *w /= total;
    }
    Ok(out)
}

fn draw<R: Rng + ?Sized>(dist: &[(NodeId, f64)], rng: &mut R) -> NodeId {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for &(n, p) in dist {
        acc += p;
        if r < acc {
            return n;
        }
    }
    dist[dist.len() - 1].0
}

/// Samples the next node of a walk.
pub fn step<R: Rng + ?Sized>(
    graph: &WalkGraph,
    prev: NodeId,
    curr: NodeId,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<NodeId> {
    let dist = transition_distribution(graph, prev, curr, cfg)?;
    Ok(draw(&dist, rng))
}

/// Up to `contexts_per_edge` distinct context pairs for `seed`.
///
/// Walks start by traversing the seed from player to game. Extra walks run
/// while short of pairs, at most `5 * contexts_per_edge` walks in total.
pub fn sample_contexts<R: Rng + ?Sized>(
    seed: EdgeKey,
    graph: &WalkGraph,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<Vec<ContextPair>> {
    if !graph.contains_edge(seed) {
        return Err(Error::Contract(format!(
            "context seed {seed} is not an edge of the snapshot"
        )));
    }
    let want = cfg.contexts_per_edge;
    let mut found = Vec::with_capacity(want);
    let mut seen = HashSet::new();
    let mut walks = 0;
    while found.len() < want && walks < 5 * want {
        walks += 1;
        let (mut prev, mut curr) = (seed.player_node(), seed.game_node());
        for _ in 0..cfg.walk_len {
            let next = match step(graph, prev, curr, cfg, rng) {
                Ok(n) => n,
                Err(Error::WalkerStuck) => break,
                Err(e) => return Err(e),
            };
            let pair = EdgeKey::from_nodes(curr, next)?;
            if pair != seed && seen.insert(pair) {
                found.push(pair);
                if found.len() == want {
                    break;
                }
            }
            prev = curr;
            curr = next;
        }
    }
    Ok(found)
}

/// Dense integer ids for context pairs, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextVocabulary {
    pairs: Vec<ContextPair>,
    counts: Vec<u64>,
    #[serde(skip)]
    ids: HashMap<ContextPair, u32>,
}

impl ContextVocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers one occurrence of `pair` and returns its id.
    pub fn observe(&mut self, pair: ContextPair) -> u32 {
        if let Some(&id) = self.ids.get(&pair) {
            self.counts[id as usize] += 1;
            return id;
        }
        let id = self.pairs.len() as u32;
        self.pairs.push(pair);
        self.counts.push(1);
        self.ids.insert(pair, id);
        id
    }

    pub fn id(&self, pair: ContextPair) -> Option<u32> {
        self.ids.get(&pair).copied()
    }

    pub fn pair(&self, id: u32) -> Option<ContextPair> {
        self.pairs.get(id as usize).copied()
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts.get(id as usize).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[ContextPair] {
        &self.pairs
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn reindex(&mut self) {
        self.ids = self
            .pairs
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i as u32))
            .collect();
        self.counts.resize(self.pairs.len(), 1);
    }
}

/// `n` ids drawn i.i.d. uniformly from the vocabulary without `exclude`.
pub fn sample_negatives<R: Rng + ?Sized>(
    vocab: &ContextVocabulary,
    exclude: u32,
    n: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    NegativeSampler::new(vocab, NegativeDistribution::Uniform)?.sample(exclude, n, rng)
}

/// Noise distribution over context ids.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    size: u32,
    cumulative: Option<Vec<f64>>,
}

impl NegativeSampler {
    pub fn new(vocab: &ContextVocabulary, dist: NegativeDistribution) -> Result<Self> {
        if vocab.len() < 2 {
            return Err(Error::VocabTooSmall(vocab.len()));
        }
        let cumulative = match dist {
            NegativeDistribution::Uniform => None,
            NegativeDistribution::Unigram { power } => {
                let mut acc = 0.0;
                Some(
                    (0..vocab.len() as u32)
                        .map(|i| {
                            acc += (vocab.count(i) as f64).powf(power);
                            acc
                        })
                        .collect(),
                )
            }
        };
        Ok(NegativeSampler {
            size: vocab.len() as u32,
            cumulative,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, exclude: u32, n: usize, rng: &mut R) -> Result<Vec<u32>> {
        if exclude >= self.size {
            return Err(Error::ContextOutOfRange {
                id: exclude as usize,
                size: self.size as usize,
            });
        }
        let mut out = Vec::with_capacity(n);
        match &self.cumulative {
            None => {
                for _ in 0..n {
                    let r = rng.random_range(0..self.size - 1);
                    out.push(if r >= exclude { r + 1 } else { r });
                }
            }
            Some(cum) => {
                let total = cum[cum.len() - 1];
                while out.len() < n {
                    let r = rng.random::<f64>() * total;
                    let id = cum.partition_point(|&c| c <= r).min(cum.len() - 1) as u32;
                    if id != exclude {
                        out.push(id);
                    }
                }
            }
        }
        Ok(out)
    }
}
