//! On-disk dataset layout: `plays.csv`, `features.jsonl` and `dataset.toml`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bigraph::{Day, NodeId, NodeKind, PlayRecord, SnapshotSeries};
use crate::edgefeat::{FeatureSchema, FeatureVector};
use crate::error::{Error, Result};

pub const PLAYS_FILE: &str = "plays.csv";
pub const FEATURES_FILE: &str = "features.jsonl";
pub const META_FILE: &str = "dataset.toml";

/// Observation range, churn window and feature layout of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub t0: Day,
    pub t_end: Day,
    pub window: u32,
    pub schema: FeatureSchema,
}

/// One line of `features.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub kind: NodeKind,
    pub index: u32,
    pub day: Day,
    pub values: Vec<f64>,
}

pub fn write_plays(path: &Path, records: impl IntoIterator<Item = PlayRecord>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_plays(path: &Path) -> Result<Vec<PlayRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["player", "game", "day"] {
        return Err(Error::parse(
            path.display().to_string(),
            "header must be `player,game,day`",
        ));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

pub fn write_features<'a>(
    path: &Path,
    records: impl IntoIterator<Item = (NodeId, Day, &'a FeatureVector)>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (node, day, values) in records {
        let line = FeatureRecord {
            kind: node.kind,
            index: node.index,
            day,
            values: values.as_slice().to_vec(),
        };
        serde_json::to_writer(&mut w, &line)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FeatureRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(format!("{}:{}", path.display(), n + 1), e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_meta(path: &Path, meta: &DatasetMeta) -> Result<()> {
    let text = toml::to_string(meta).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<DatasetMeta> {
    let text = std::fs::read_to_string(path)?;
    let meta: DatasetMeta =
        toml::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    meta.schema.validate()?;
    Ok(meta)
}

/// Writes the three dataset files into `dir`, which must exist.
pub fn write_dataset(dir: &Path, series: &SnapshotSeries, schema: &FeatureSchema) -> Result<()> {
    write_plays(&dir.join(PLAYS_FILE), series.records())?;
    write_features(&dir.join(FEATURES_FILE), series.feature_records())?;
    let meta = DatasetMeta {
        t0: series.t0(),
        t_end: series.t_end(),
        window: series.window(),
        schema: schema.clone(),
    };
    write_meta(&dir.join(META_FILE), &meta)
}

/// Loads a dataset directory; `window` overrides the stored churn window.
pub fn read_dataset(dir: &Path, window: Option<u32>) -> Result<(SnapshotSeries, FeatureSchema)> {
    let meta = read_meta(&dir.join(META_FILE))?;
    let mut b = SnapshotSeries::builder(meta.t0, meta.t_end, window.unwrap_or(meta.window));
    b.plays(read_plays(&dir.join(PLAYS_FILE))?);
    for rec in read_features(&dir.join(FEATURES_FILE))? {
        let node = NodeId {
            kind: rec.kind,
            index: rec.index,
        };
        b.features(node, rec.day, FeatureVector::new(rec.values)?);
    }
    Ok((b.build()?, meta.schema))
}

/// One row of a prediction input: an edge on a day, optionally with its
/// precomputed edge features.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeQuery {
    pub player: u32,
    pub game: u32,
    pub day: Day,
    pub z: Option<Vec<f64>>,
}

/// Reads `player,game,day` rows, optionally followed by one column per edge
/// feature.
pub fn read_edge_queries(path: &Path) -> Result<Vec<EdgeQuery>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() < 3 || headers.iter().take(3).collect::<Vec<_>>() != ["player", "game", "day"] {
        return Err(Error::parse(
            path.display().to_string(),
            "header must start with `player,game,day`",
        ));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<&str> {
            row.get(i)
                .ok_or_else(|| Error::parse(format!("{}:{line}", path.display()), "missing column"))
        };
        let bad = |what: &str| Error::parse(format!("{}:{line}", path.display()), format!("invalid {what}"));
        let player = field(0)?.trim().parse().map_err(|_| bad("player"))?;
        let game = field(1)?.trim().parse().map_err(|_| bad("game"))?;
        let day = field(2)?.trim().parse().map_err(|_| bad("day"))?;
        let z = if headers.len() > 3 {
            let z = (3..headers.len())
                .map(|i| field(i)?.trim().parse::<f64>().map_err(|_| bad("feature value")))
                .collect::<Result<Vec<_>>>()?;
            Some(z)
        } else {
            None
        };
        out.push(EdgeQuery { player, game, day, z });
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let location = match e.position() {
        Some(p) => format!("{}:{}", path.display(), p.line()),
        None => path.display().to_string(),
    };
    Error::parse(location, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate, SynthConfig};

    #[test]
    fn dataset_round_trips() {
        let cfg = SynthConfig {
            n_players: 20,
            n_games: 10,
            days: 30,
            ..SynthConfig::default()
        };
        let data = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &data.series, &data.schema).unwrap();
        let (series, schema) = read_dataset(dir.path(), None).unwrap();
        assert_eq!(schema, data.schema);
        assert_eq!(series.t0(), data.series.t0());
        assert_eq!(series.t_end(), data.series.t_end());
        assert_eq!(
            series.records().collect::<Vec<_>>(),
            data.series.records().collect::<Vec<_>>()
        );
        let a: Vec<_> = series.feature_records().map(|(n, d, v)| (n, d, v.clone())).collect();
        let b: Vec<_> = data.series.feature_records().map(|(n, d, v)| (n, d, v.clone())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn window_override_applies() {
        let dir = tempfile::tempdir().unwrap();
        let data = generate(&SynthConfig {
            n_players: 5,
            n_games: 5,
            days: 20,
            ..SynthConfig::default()
        })
        .unwrap();
        write_dataset(dir.path(), &data.series, &data.schema).unwrap();
        let (series, _) = read_dataset(dir.path(), Some(3)).unwrap();
        assert_eq!(series.window(), 3);
    }

    #[test]
    fn edge_queries_with_and_without_features() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.csv");
        std::fs::write(&p, "player,game,day\n1,2,3\n").unwrap();
        let q = read_edge_queries(&p).unwrap();
        assert_eq!(q, vec![EdgeQuery { player: 1, game: 2, day: 3, z: None }]);
        std::fs::write(&p, "player,game,day,z0,z1\n1,2,3,0.5,-0.25\n").unwrap();
        assert_eq!(read_edge_queries(&p).unwrap()[0].z, Some(vec![0.5, -0.25]));
        std::fs::write(&p, "player,game,day,z0\n1,2,3,oops\n").unwrap();
        assert!(matches!(read_edge_queries(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn bad_header_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(PLAYS_FILE);
        std::fs::write(&p, "user,item,day\n1,2,3\n").unwrap();
        assert!(matches!(read_plays(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn malformed_feature_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(FEATURES_FILE);
        std::fs::write(&p, "{\"kind\":\"player\",\"index\":0,\"day\":1,\"values\":[1.0]}\nnot json\n").unwrap();
        match read_features(&p) {
            Err(Error::Parse { location, .. }) => assert!(location.ends_with(":2")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
