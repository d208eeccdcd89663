//! Synthetic play histories with planted affinity, age-dependent churn and
//! slowly drifting node features.
//!
//! Every node has a latent trait vector. A player's games are drawn with
//! weight `1 + s * a_uv`, where `a_uv` is the cosine of the two trait
//! vectors. Each relationship starts on a random day, is played daily while
//! alive, and ends with daily hazard `h * g^age * (1 - s * a_uv)`. Observed
//! features are the traits plus AR(1) noise.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bigraph::{Day, NodeId, PlayRecord, SnapshotSeries};
use crate::edgefeat::{cosine_unchecked, FeatureSchema, FeatureVector, InteractionColumn};
use crate::error::{Error, Result};
use crate::seeding;

/// Daily hazard whose constant-hazard survival after `days` equals `survival`.
pub fn solve_daily_hazard(survival: f64, days: u32) -> Result<f64> {
    if !(survival > 0.0 && survival < 1.0) || days == 0 {
        return Err(Error::Config(format!(
            "cannot solve a hazard for survival {survival} after {days} days"
        )));
    }
    Ok(1.0 - survival.powf(1.0 / days as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_players: u32,
    pub n_games: u32,
    /// Player feature width.
    pub n_u: usize,
    /// Game feature width; must equal `n_u` since both share a trait space.
    pub n_v: usize,
    /// Number of cosine groups in the edge features.
    pub d: usize,
    /// Observed days `1..=days`.
    pub days: u32,
    /// Churn window `T`.
    pub window: u32,
    pub daily_hazard: f64,
    pub hazard_growth: f64,
    pub feature_drift: f64,
    /// Day-to-day persistence of the feature noise.
    pub drift_persistence: f64,
    pub affinity_strength: f64,
    pub relationships_per_player: u32,
    pub seed: u64,
    /// Extra edge feature columns written into the dataset schema.
    pub interactions: Vec<InteractionColumn>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_players: 500,
            n_games: 200,
            n_u: 12,
            n_v: 12,
            d: 4,
            days: 120,
            window: 14,
            // 5% of relationships survive 40 days
            daily_hazard: 1.0 - 0.05f64.powf(1.0 / 40.0),
            hazard_growth: 1.02,
            feature_drift: 0.05,
            drift_persistence: 0.9,
            affinity_strength: 0.6,
            relationships_per_player: 4,
            seed: 0,
            interactions: vec![
                InteractionColumn::RecentActivity { window: 7 },
                InteractionColumn::Tenure { scale: 14.0 },
            ],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_players == 0 || self.n_games == 0 {
            return bad("need at least one player and one game".into());
        }
        if !(self.daily_hazard > 0.0 && self.daily_hazard < 1.0) {
            return bad(format!("daily_hazard {} must lie in (0, 1)", self.daily_hazard));
        }
        if !(self.hazard_growth > 0.0 && self.hazard_growth.is_finite()) {
            return bad(format!("hazard_growth {} must be positive", self.hazard_growth));
        }
        if !(self.feature_drift >= 0.0 && self.feature_drift.is_finite()) {
            return bad(format!("feature_drift {} must be non-negative", self.feature_drift));
        }
        if !(0.0..1.0).contains(&self.drift_persistence) {
            return bad(format!(
                "drift_persistence {} must lie in [0, 1)",
                self.drift_persistence
            ));
        }
        if !(0.0..=1.0).contains(&self.affinity_strength) {
            return bad(format!(
                "affinity_strength {} must lie in [0, 1]",
                self.affinity_strength
            ));
        }
        if self.window == 0 || self.days <= self.window {
            return bad(format!(
                "days ({}) must exceed the churn window ({})",
                self.days, self.window
            ));
        }
        if self.relationships_per_player > self.n_games {
            return bad(format!(
                "{} relationships per player but only {} games",
                self.relationships_per_player, self.n_games
            ));
        }
        if self.n_u != self.n_v {
            return bad(format!(
                "player and game features share one trait space; n_u {} != n_v {}",
                self.n_u, self.n_v
            ));
        }
        self.schema().map(|_| ())
    }

    /// Edge feature schema of the generated data.
    pub fn schema(&self) -> Result<FeatureSchema> {
        FeatureSchema::even_groups(self.n_u, self.d)?.with_interactions(self.interactions.clone())
    }

    pub fn hazard(&self, age: u32, affinity: f64) -> f64 {
        let h = self.daily_hazard
            * self.hazard_growth.powi(age as i32 - 1)
            * (1.0 - self.affinity_strength * affinity);
        h.clamp(1e-12, 1.0 - 1e-12)
    }
}

/// A generated player-game relationship.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relationship {
    pub player: u32,
    pub game: u32,
    pub affinity: f64,
    pub start: Day,
    /// Number of consecutive play days, not cut at the observation end.
    pub lifetime: u32,
}

/// Survival by relationship age: the model's expectation averaged over the
/// generated relationships next to the observed fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalTable {
    /// `expected[k]` and `empirical[k]` are for age `k` days after the start.
    pub expected: Vec<f64>,
    pub empirical: Vec<f64>,
    pub relationships: Vec<Relationship>,
}

impl SurvivalTable {
    pub fn max_gap(&self) -> f64 {
        self.expected
            .iter()
            .zip(&self.empirical)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub series: SnapshotSeries,
    pub schema: FeatureSchema,
    pub survival: SurvivalTable,
}

const TRAIT_STREAM: u64 = 10;
const ADOPT_STREAM: u64 = 11;
const LIFE_STREAM: u64 = 12;
const NOISE_STREAM: u64 = 13;

fn gaussian_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Draws a lifetime in days: alive on day 1, then survives each transition
/// to age `k` with probability `1 - hazard(k)`.
fn draw_lifetime<R: Rng + ?Sized>(cfg: &SynthConfig, affinity: f64, cap: u32, rng: &mut R) -> u32 {
    let mut life = 1;
    while life < cap {
        if rng.random::<f64>() < cfg.hazard(life, affinity) {
            break;
        }
        life += 1;
    }
    life
}

pub fn generate(cfg: &SynthConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let t0: Day = 1;
    let t_end: Day = cfg.days as Day;
    let mut trng = seeding::stream(cfg.seed, &[TRAIT_STREAM]);
    let player_traits: Vec<Vec<f64>> = (0..cfg.n_players)
        .map(|_| gaussian_vec(cfg.n_u, &mut trng))
        .collect();
    let game_traits: Vec<Vec<f64>> = (0..cfg.n_games)
        .map(|_| gaussian_vec(cfg.n_v, &mut trng))
        .collect();

    // lifetimes are simulated past the horizon so the survival table is
    // free of censoring; a long cap keeps the loop finite
    let cap = 4 * cfg.days.max(365);
    let mut relationships = Vec::new();
    for p in 0..cfg.n_players {
        let mut rng = seeding::stream(cfg.seed, &[ADOPT_STREAM, p as u64]);
        let aff: Vec<f64> = game_traits
            .iter()
            .map(|g| cosine_unchecked(&player_traits[p as usize], g))
            .collect();
        let mut weights: Vec<f64> = aff
            .iter()
            .map(|a| (1.0 + cfg.affinity_strength * a).max(1e-9))
            .collect();
        for _ in 0..cfg.relationships_per_player {
            let dist = WeightedIndex::new(&weights)
                .map_err(|e| Error::Config(format!("adoption weights: {e}")))?;
            let g = dist.sample(&mut rng);
            weights[g] = 0.0;
            let start = rng.random_range(t0..=t_end);
            let mut lrng = seeding::stream(cfg.seed, &[LIFE_STREAM, p as u64, g as u64]);
            let lifetime = draw_lifetime(cfg, aff[g], cap, &mut lrng);
            relationships.push(Relationship {
                player: p,
                game: g as u32,
                affinity: aff[g],
                start,
                lifetime,
            });
        }
    }

    let mut b = SnapshotSeries::builder(t0, t_end, cfg.window);
    for r in &relationships {
        let last = (r.start + r.lifetime as Day - 1).min(t_end);
        for day in r.start..=last {
            b.play(PlayRecord {
                player: r.player,
                game: r.game,
                day,
            });
        }
    }
    let nodes = (0..cfg.n_players)
        .map(|p| (NodeId::player(p), &player_traits[p as usize]))
        .chain((0..cfg.n_games).map(|g| (NodeId::game(g), &game_traits[g as usize])));
    let rho = cfg.drift_persistence;
    for (node, traits) in nodes {
        if cfg.feature_drift == 0.0 {
            b.features(node, t0, FeatureVector::new(traits.clone())?);
            continue;
        }
        let kind = match node.kind {
            crate::bigraph::NodeKind::Player => 0,
            crate::bigraph::NodeKind::Game => 1,
        };
        let mut rng = seeding::stream(cfg.seed, &[NOISE_STREAM, kind, node.index as u64]);
        // start from the stationary distribution of the AR(1) noise
        let sd0 = cfg.feature_drift / (1.0 - rho * rho).sqrt();
        let mut noise: Vec<f64> = gaussian_vec(traits.len(), &mut rng)
            .into_iter()
            .map(|e| e * sd0)
            .collect();
        for day in t0..=t_end {
            if day > t0 {
                for n in noise.iter_mut() {
                    *n = rho * *n + cfg.feature_drift * rng.sample::<f64, _>(StandardNormal);
                }
            }
            let x: Vec<f64> = traits.iter().zip(&noise).map(|(t, n)| t + n).collect();
            b.features(node, day, FeatureVector::new(x)?);
        }
    }
    let series = b.build()?;

    let horizon = 60usize.max(cfg.days as usize);
    let mut expected = vec![0.0; horizon + 1];
    let mut empirical = vec![0.0; horizon + 1];
    for r in &relationships {
        let mut s = 1.0;
        for (k, slot) in expected.iter_mut().enumerate() {
            if k > 0 {
                s *= 1.0 - cfg.hazard(k as u32, r.affinity);
            }
            *slot += s;
        }
        for (k, slot) in empirical.iter_mut().enumerate() {
            // alive k days after the start means at least k + 1 play days
            if r.lifetime as usize > k {
                *slot += 1.0;
            }
        }
    }
    let n = relationships.len().max(1) as f64;
    for v in expected.iter_mut().chain(empirical.iter_mut()) {
        *v /= n;
    }
    Ok(SyntheticData {
        series,
        schema: cfg.schema()?,
        survival: SurvivalTable {
            expected,
            empirical,
            relationships,
        },
    })
}
