//! Play history of a player/game bipartite graph observed day by day.
//!
//! An edge `(u, v)` exists at day `t` when the player has at least one play
//! of the game in the window `[t + 1, t + T]`. Labels for day `t` describe
//! the edge at `t + 1`, which may be unknowable near the end of the
//! observation period (right censoring).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::edgefeat::FeatureVector;
use crate::error::{Error, Result};

/// Integer day index.
pub type Day = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Player,
    Game,
}

impl NodeKind {
    pub fn other(self) -> NodeKind {
        match self {
            NodeKind::Player => NodeKind::Game,
            NodeKind::Game => NodeKind::Player,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Player => f.write_str("player"),
            NodeKind::Game => f.write_str("game"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: u32,
}

impl NodeId {
    pub fn player(index: u32) -> Self {
        NodeId {
            kind: NodeKind::Player,
            index,
        }
    }

    pub fn game(index: u32) -> Self {
        NodeId {
            kind: NodeKind::Game,
            index,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind, self.index)
    }
}

/// A (player, game) pair. Slot kinds are fixed by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    pub player: u32,
    pub game: u32,
}

impl EdgeKey {
    pub fn new(player: u32, game: u32) -> Self {
        EdgeKey { player, game }
    }

    /// Orients two nodes of opposite kinds into a key.
    pub fn from_nodes(a: NodeId, b: NodeId) -> Result<Self> {
        match (a.kind, b.kind) {
            (NodeKind::Player, NodeKind::Game) => Ok(EdgeKey::new(a.index, b.index)),
            (NodeKind::Game, NodeKind::Player) => Ok(EdgeKey::new(b.index, a.index)),
            _ => Err(Error::Contract(format!(
                "edge endpoints {a} and {b} have the same kind"
            ))),
        }
    }

    pub fn player_node(&self) -> NodeId {
        NodeId::player(self.player)
    }

    pub fn game_node(&self) -> NodeId {
        NodeId::game(self.game)
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(player#{}, game#{})", self.player, self.game)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlayRecord {
    pub player: u32,
    pub game: u32,
    pub day: Day,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Churned,
    Retained,
    Censored,
}

/// Label of an existing edge for the following day.
///
/// `delta` is the censoring indicator: `false` exactly when the label is
/// `Censored`, in which case `e_next` is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelOutcome {
    pub label: Label,
    pub delta: bool,
    pub e_next: Option<bool>,
}

impl LabelOutcome {
    fn churned() -> Self {
        LabelOutcome {
            label: Label::Churned,
            delta: true,
            e_next: Some(false),
        }
    }

    fn retained() -> Self {
        LabelOutcome {
            label: Label::Retained,
            delta: true,
            e_next: Some(true),
        }
    }

    fn censored() -> Self {
        LabelOutcome {
            label: Label::Censored,
            delta: false,
            e_next: None,
        }
    }

    /// 1 for churn, 0 for retention, `None` when censored.
    pub fn churn_target(&self) -> Option<f64> {
        self.e_next.map(|e| if e { 0.0 } else { 1.0 })
    }
}

/// Per-node feature records keyed by the day they take effect.
#[derive(Debug, Clone, Default)]
struct FeatureTable {
    rows: BTreeMap<u32, BTreeMap<Day, FeatureVector>>,
}

impl FeatureTable {
    fn insert(&mut self, index: u32, day: Day, values: FeatureVector) {
        self.rows.entry(index).or_default().insert(day, values);
    }

    /// Most recent record at or before `day`.
    fn lookup(&self, index: u32, day: Day) -> Option<&FeatureVector> {
        self.rows
            .get(&index)?
            .range(..=day)
            .next_back()
            .map(|(_, v)| v)
    }

    fn contains(&self, index: u32) -> bool {
        self.rows.contains_key(&index)
    }

    fn records(&self) -> impl Iterator<Item = (u32, Day, &FeatureVector)> {
        self.rows
            .iter()
            .flat_map(|(&i, by_day)| by_day.iter().map(move |(&d, v)| (i, d, v)))
    }
}

/// Collects play records and node features, then validates them into a
/// [`SnapshotSeries`].
#[derive(Debug, Clone)]
pub struct SeriesBuilder {
    t0: Day,
    t_end: Day,
    window: u32,
    plays: BTreeMap<EdgeKey, Vec<Day>>,
    players: FeatureTable,
    games: FeatureTable,
}

impl SeriesBuilder {
    pub fn new(t0: Day, t_end: Day, window: u32) -> Self {
        SeriesBuilder {
            t0,
            t_end,
            window,
            plays: BTreeMap::new(),
            players: FeatureTable::default(),
            games: FeatureTable::default(),
        }
    }

    pub fn play(&mut self, record: PlayRecord) -> &mut Self {
        self.plays
            .entry(EdgeKey::new(record.player, record.game))
            .or_default()
            .push(record.day);
        self
    }

    pub fn plays(&mut self, records: impl IntoIterator<Item = PlayRecord>) -> &mut Self {
        for r in records {
            self.play(r);
        }
        self
    }

    pub fn features(&mut self, node: NodeId, day: Day, values: FeatureVector) -> &mut Self {
        match node.kind {
            NodeKind::Player => self.players.insert(node.index, day, values),
            NodeKind::Game => self.games.insert(node.index, day, values),
        }
        self
    }

    pub fn build(mut self) -> Result<SnapshotSeries> {
        if self.t0 > self.t_end {
            return Err(Error::Config(format!(
                "t0 {} is after t_end {}",
                self.t0, self.t_end
            )));
        }
        if self.window < 1 {
            return Err(Error::Config("churn window T must be at least 1".into()));
        }
        for (edge, days) in self.plays.iter_mut() {
            days.sort_unstable();
            days.dedup();
            if let (Some(&lo), Some(&hi)) = (days.first(), days.last()) {
                if lo < self.t0 || hi > self.t_end {
                    let bad = if lo < self.t0 { lo } else { hi };
                    return Err(Error::DayOutOfRange {
                        day: bad,
                        t0: self.t0,
                        t_end: self.t_end,
                    });
                }
            }
            if !self.players.contains(edge.player) {
                return Err(Error::MissingFeatures {
                    node: edge.player_node(),
                    day: days[0],
                });
            }
            if !self.games.contains(edge.game) {
                return Err(Error::MissingFeatures {
                    node: edge.game_node(),
                    day: days[0],
                });
            }
        }
        Ok(SnapshotSeries {
            t0: self.t0,
            t_end: self.t_end,
            window: self.window,
            plays: self.plays,
            players: self.players,
            games: self.games,
        })
    }
}

/// Observed history from `t0` to `t_end` with churn window `T`.
#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    t0: Day,
    t_end: Day,
    window: u32,
    plays: BTreeMap<EdgeKey, Vec<Day>>,
    players: FeatureTable,
    games: FeatureTable,
}

impl SnapshotSeries {
    pub fn builder(t0: Day, t_end: Day, window: u32) -> SeriesBuilder {
        SeriesBuilder::new(t0, t_end, window)
    }

    pub fn t0(&self) -> Day {
        self.t0
    }

    pub fn t_end(&self) -> Day {
        self.t_end
    }

    /// Churn window length `T` in days.
    pub fn window(&self) -> u32 {
        self.window
    }

    /// Copy of this series with a different churn window.
    pub fn with_window(&self, window: u32) -> Result<SnapshotSeries> {
        if window < 1 {
            return Err(Error::Config("churn window T must be at least 1".into()));
        }
        let mut s = self.clone();
        s.window = window;
        Ok(s)
    }

    /// Every (player, game) pair with at least one play, in key order.
    pub fn pairs(&self) -> impl Iterator<Item = EdgeKey> + '_ {
        self.plays.keys().copied()
    }

    /// Sorted, de-duplicated play days of a pair.
    pub fn play_days(&self, edge: EdgeKey) -> &[Day] {
        self.plays.get(&edge).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn records(&self) -> impl Iterator<Item = PlayRecord> + '_ {
        self.plays.iter().flat_map(|(e, days)| {
            days.iter().map(move |&day| PlayRecord {
                player: e.player,
                game: e.game,
                day,
            })
        })
    }

    pub fn feature_records(&self) -> impl Iterator<Item = (NodeId, Day, &FeatureVector)> {
        let p = self
            .players
            .records()
            .map(|(i, d, v)| (NodeId::player(i), d, v));
        let g = self
            .games
            .records()
            .map(|(i, d, v)| (NodeId::game(i), d, v));
        p.chain(g)
    }

    pub fn player_indices(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.players.rows.keys().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn game_indices(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.games.rows.keys().copied().collect();
        v.sort_unstable();
        v
    }

    /// Feature vector in effect for `node` on `day`.
    pub fn features(&self, node: NodeId, day: Day) -> Result<&FeatureVector> {
        let table = match node.kind {
            NodeKind::Player => &self.players,
            NodeKind::Game => &self.games,
        };
        table
            .lookup(node.index, day)
            .ok_or(Error::MissingFeatures { node, day })
    }

    fn check_day(&self, day: Day) -> Result<()> {
        if day < self.t0 || day > self.t_end {
            return Err(Error::DayOutOfRange {
                day,
                t0: self.t0,
                t_end: self.t_end,
            });
        }
        Ok(())
    }

    /// Number of play days of `edge` within `[lo, hi]`.
    pub fn plays_in(&self, edge: EdgeKey, lo: Day, hi: Day) -> usize {
        if lo > hi {
            return 0;
        }
        let days = self.play_days(edge);
        let start = days.partition_point(|&d| d < lo);
        let end = days.partition_point(|&d| d <= hi);
        end - start
    }

    fn any_play_in(&self, edge: EdgeKey, lo: Day, hi: Day) -> bool {
        self.plays_in(edge, lo, hi) > 0
    }

    /// `e_uv^(t)`: whether a play is recorded in `[t + 1, t + T]`.
    pub fn edge_exists(&self, edge: EdgeKey, t: Day) -> Result<bool> {
        self.check_day(t)?;
        Ok(self.any_play_in(edge, t + 1, t + self.window as Day))
    }

    /// Censoring indicator for the day-`t` label, i.e. whether `e^(t+1)` is
    /// determinable from the observation. Defined for every pair and day.
    pub fn label_determinable(&self, edge: EdgeKey, t: Day) -> Result<bool> {
        self.check_day(t)?;
        let w = self.window as Day;
        Ok(self.any_play_in(edge, t + 2, t + 1 + w) || t + 1 + w <= self.t_end)
    }

    /// Label of an existing edge for day `t + 1`.
    pub fn churn_label(&self, edge: EdgeKey, t: Day) -> Result<LabelOutcome> {
        if !self.edge_exists(edge, t)? {
            return Err(Error::Contract(format!(
                "churn label requested for {edge} which is not an edge at day {t}"
            )));
        }
        let w = self.window as Day;
        if self.any_play_in(edge, t + 2, t + 1 + w) {
            Ok(LabelOutcome::retained())
        } else if t + 1 + w <= self.t_end {
            Ok(LabelOutcome::churned())
        } else {
            Ok(LabelOutcome::censored())
        }
    }

    /// `t_uv`: the last day on which the edge exists and its label is
    /// determinable.
    pub fn last_observed_timestamp(&self, edge: EdgeKey) -> Result<Day> {
        self.edge_days(edge)
            .into_iter()
            .rev()
            .find(|&t| {
                self.churn_label(edge, t)
                    .map(|l| l.delta)
                    .unwrap_or(false)
            })
            .ok_or(Error::NeverObserved(edge))
    }

    /// Days in `[t0, t_end]` on which `edge` exists, ascending.
    pub fn edge_days(&self, edge: EdgeKey) -> Vec<Day> {
        let w = self.window as Day;
        let mut out = Vec::new();
        let mut next_free = self.t0;
        for &p in self.play_days(edge) {
            // a play on day p makes the edge exist on days [p - T, p - 1]
            let lo = (p - w).max(next_free);
            let hi = (p - 1).min(self.t_end);
            if lo <= hi {
                out.extend(lo..=hi);
                next_free = hi + 1;
            }
        }
        out
    }

    /// `E^(t)` for every day in `[t0, t_end]`, index 0 being `t0`.
    pub fn edges_by_day(&self) -> Vec<Vec<EdgeKey>> {
        let n = (self.t_end - self.t0 + 1) as usize;
        let mut by_day = vec![Vec::new(); n];
        for edge in self.pairs() {
            for t in self.edge_days(edge) {
                by_day[(t - self.t0) as usize].push(edge);
            }
        }
        by_day
    }

    /// `E^(t)` for a single day.
    pub fn edges_at(&self, t: Day) -> Result<Vec<EdgeKey>> {
        self.check_day(t)?;
        let w = self.window as Day;
        Ok(self
            .pairs()
            .filter(|&e| self.any_play_in(e, t + 1, t + w))
            .collect())
    }

    /// The same history observed only up to `t_end`: later plays and
    /// feature records are dropped, so labels near the new end become
    /// censored.
    pub fn truncated(&self, t_end: Day) -> Result<SnapshotSeries> {
        if t_end < self.t0 || t_end > self.t_end {
            return Err(Error::DayOutOfRange {
                day: t_end,
                t0: self.t0,
                t_end: self.t_end,
            });
        }
        let mut s = self.clone();
        s.t_end = t_end;
        for days in s.plays.values_mut() {
            days.retain(|&d| d <= t_end);
        }
        s.plays.retain(|_, days| !days.is_empty());
        for table in [&mut s.players, &mut s.games] {
            for by_day in table.rows.values_mut() {
                by_day.retain(|&d, _| d <= t_end);
            }
        }
        Ok(s)
    }

    /// Copy of this series without the listed pairs' play records.
    pub fn without_pairs(&self, drop: &std::collections::HashSet<EdgeKey>) -> SnapshotSeries {
        let mut s = self.clone();
        s.plays.retain(|e, _| !drop.contains(e));
        s
    }
}
