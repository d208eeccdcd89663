//! Raw edge features built from node feature vectors.
//!
//! Each entry of an edge feature vector is the cosine similarity between a
//! slice of the player vector and the paired slice of the game vector.
//! Optional interaction columns summarize the pair's own play history up to
//! the feature day.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::bigraph::{Day, EdgeKey, SnapshotSeries};
use crate::error::{Error, Result};

/// Node attribute vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector".into()));
        }
        Ok(FeatureVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Edge feature vector `z`; every entry lies in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeFeatureVector(Vec<f64>);

impl EdgeFeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::Contract(format!(
                "edge feature entry {v} outside [-1, 1]"
            )));
        }
        Ok(EdgeFeatureVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A pair of equally long slices compared by cosine similarity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceGroup {
    pub player: Range<usize>,
    pub game: Range<usize>,
}

/// Pair-level aggregate computed from play records on or before the feature
/// day. Values are scaled into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InteractionColumn {
    /// Fraction of the last `window` days (ending at the feature day) with a play.
    RecentActivity { window: u32 },
    /// `1 - exp(-days_since_first_play / scale)`, 0 before the first play.
    Tenure { scale: f64 },
}

impl InteractionColumn {
    fn validate(&self) -> Result<()> {
        match *self {
            InteractionColumn::RecentActivity { window: 0 } => {
                Err(Error::Config("recent activity window must be positive".into()))
            }
            InteractionColumn::Tenure { scale } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::Config("tenure scale must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Value for `edge` using only plays on or before `day`.
    pub fn value(&self, series: &SnapshotSeries, edge: EdgeKey, day: Day) -> f64 {
        match *self {
            InteractionColumn::RecentActivity { window } => {
                let n = series.plays_in(edge, day - window as Day + 1, day);
                n as f64 / window as f64
            }
            InteractionColumn::Tenure { scale } => {
                match series.play_days(edge).first() {
                    Some(&first) if first <= day => {
                        let age = (day - first + 1) as f64;
                        1.0 - (-age / scale).exp()
                    }
                    _ => 0.0,
                }
            }
        }
    }
}

/// Layout of node vectors and how they pair up into `d` edge features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub n_u: usize,
    pub n_v: usize,
    pub groups: Vec<SliceGroup>,
    #[serde(default)]
    pub interactions: Vec<InteractionColumn>,
}

impl FeatureSchema {
    pub fn new(
        n_u: usize,
        n_v: usize,
        groups: Vec<SliceGroup>,
        interactions: Vec<InteractionColumn>,
    ) -> Result<Self> {
        let s = FeatureSchema {
            n_u,
            n_v,
            groups,
            interactions,
        };
        s.validate()?;
        Ok(s)
    }

    /// `n` equal contiguous groups over vectors of length `len` on both sides.
    pub fn even_groups(len: usize, n: usize) -> Result<Self> {
        if n == 0 || len < n {
            return Err(Error::Config(format!(
                "cannot split length {len} into {n} groups"
            )));
        }
        let groups = (0..n)
            .map(|k| {
                let r = (k * len / n)..((k + 1) * len / n);
                SliceGroup {
                    player: r.clone(),
                    game: r,
                }
            })
            .collect();
        FeatureSchema::new(len, len, groups, Vec::new())
    }

    pub fn with_interactions(mut self, interactions: Vec<InteractionColumn>) -> Result<Self> {
        self.interactions = interactions;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Config("feature schema must define d >= 1".into()));
        }
        for (k, g) in self.groups.iter().enumerate() {
            if g.player.is_empty() || g.player.end > self.n_u {
                return Err(Error::Config(format!(
                    "group {k}: player slice {:?} outside [0, {})",
                    g.player, self.n_u
                )));
            }
            if g.game.is_empty() || g.game.end > self.n_v {
                return Err(Error::Config(format!(
                    "group {k}: game slice {:?} outside [0, {})",
                    g.game, self.n_v
                )));
            }
            if g.player.len() != g.game.len() {
                return Err(Error::Config(format!(
                    "group {k}: slice lengths differ ({} vs {})",
                    g.player.len(),
                    g.game.len()
                )));
            }
        }
        for c in &self.interactions {
            c.validate()?;
        }
        Ok(())
    }

    /// Number of cosine groups.
    pub fn cosine_dim(&self) -> usize {
        self.groups.len()
    }

    /// Total edge feature length `d`.
    pub fn dim(&self) -> usize {
        self.groups.len() + self.interactions.len()
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(cosine_unchecked(a, b))
}

pub(crate) fn cosine_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Cosine part of `z`: one entry per schema group.
pub fn edge_features(
    x_u: &FeatureVector,
    x_v: &FeatureVector,
    schema: &FeatureSchema,
) -> Result<EdgeFeatureVector> {
    if x_u.len() != schema.n_u {
        return Err(Error::Dimension {
            expected: schema.n_u,
            got: x_u.len(),
        });
    }
    if x_v.len() != schema.n_v {
        return Err(Error::Dimension {
            expected: schema.n_v,
            got: x_v.len(),
        });
    }
    let u = x_u.as_slice();
    let v = x_v.as_slice();
    let z = schema
        .groups
        .iter()
        .map(|g| cosine_unchecked(&u[g.player.clone()], &v[g.game.clone()]))
        .collect();
    Ok(EdgeFeatureVector(z))
}

/// Full `z` for `edge` on `day`: cosine groups from the node features in
/// effect that day followed by interaction columns over plays up to `day`.
pub fn edge_feature_vector(
    series: &SnapshotSeries,
    schema: &FeatureSchema,
    edge: EdgeKey,
    day: Day,
) -> Result<EdgeFeatureVector> {
    let x_u = series.features(edge.player_node(), day)?;
    let x_v = series.features(edge.game_node(), day)?;
    let mut z = edge_features(x_u, x_v, schema)?.0;
    z.extend(schema.interactions.iter().map(|c| c.value(series, edge, day)));
    Ok(EdgeFeatureVector(z))
}
