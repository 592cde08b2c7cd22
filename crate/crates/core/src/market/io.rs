//! JSON documents for instances, matchings, strategy profiles and preference lists.
//!
//! Every document carries a `format` tag and a `version`. Floats are written in their
//! shortest round-trip form, so a write/read cycle is lossless.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Generator, Matching, MarketInstance, PreferenceProfile, Provenance, StrategyProfile};
use crate::error::{Error, Result};
use crate::zerosum::{MixedStrategy, PayoffMatrix};

pub const FORMAT_VERSION: u32 = 1;
pub const INSTANCE_FORMAT: &str = "ucbmg-market";
pub const MATCHING_FORMAT: &str = "ucbmg-matching";
pub const STRATEGIES_FORMAT: &str = "ucbmg-strategies";
pub const PREFERENCES_FORMAT: &str = "ucbmg-preferences";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameRecord {
    left: usize,
    right: usize,
    /// Row-major, `m * k` values.
    entries: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    format: String,
    version: u32,
    p: usize,
    a: usize,
    m: usize,
    k: usize,
    games: Vec<GameRecord>,
    left_outside: Vec<f64>,
    right_outside: Vec<f64>,
    #[serde(default)]
    generator: Option<Generator>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchingDoc {
    format: String,
    version: u32,
    left_count: usize,
    right_count: usize,
    pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategiesDoc {
    format: String,
    version: u32,
    left: Vec<Option<Vec<f64>>>,
    right: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PreferencesDoc {
    format: String,
    version: u32,
    left: Vec<Vec<usize>>,
    right: Vec<Vec<usize>>,
}

fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))
}

fn check_header(format: &str, version: u32, expected: &str, origin: &str) -> Result<()> {
    if format != expected {
        return Err(Error::format(
            origin,
            format!("field `format`: expected {expected:?}, found {format:?}"),
        ));
    }
    if version != FORMAT_VERSION {
        return Err(Error::format(
            origin,
            format!("field `version`: unsupported version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("documents always serialise");
    text.push('\n');
    text
}

pub fn instance_to_string(instance: &MarketInstance) -> String {
    let games = (0..instance.left_count())
        .flat_map(|l| (0..instance.right_count()).map(move |r| (l, r)))
        .map(|(l, r)| GameRecord {
            left: l,
            right: r,
            entries: instance.game(l, r).entries().to_vec(),
        })
        .collect();
    let doc = InstanceDoc {
        format: INSTANCE_FORMAT.into(),
        version: FORMAT_VERSION,
        p: instance.left_count(),
        a: instance.right_count(),
        m: instance.left_actions(),
        k: instance.right_actions(),
        games,
        left_outside: instance.left_outside().to_vec(),
        right_outside: instance.right_outside().to_vec(),
        generator: instance.provenance().map(|p| p.generator),
        seed: instance.provenance().map(|p| p.seed),
    };
    to_json(&doc)
}

/// Parses an instance document; `origin` names the source in error messages.
pub fn instance_from_str(text: &str, origin: &str) -> Result<MarketInstance> {
    let doc: InstanceDoc = parse(text, origin)?;
    check_header(&doc.format, doc.version, INSTANCE_FORMAT, origin)?;
    if doc.p == 0 || doc.a == 0 || doc.m == 0 || doc.k == 0 {
        return Err(Error::format(origin, "fields `p`, `a`, `m`, `k` must be positive"));
    }
    let mut slots: Vec<Vec<Option<PayoffMatrix>>> = vec![vec![None; doc.a]; doc.p];
    for (n, game) in doc.games.into_iter().enumerate() {
        if game.left >= doc.p || game.right >= doc.a {
            return Err(Error::format(
                origin,
                format!("games[{n}]: pair ({}, {}) outside the market", game.left, game.right),
            ));
        }
        if game.entries.len() != doc.m * doc.k {
            return Err(Error::format(
                origin,
                format!(
                    "games[{n}].entries: expected {} values, found {}",
                    doc.m * doc.k,
                    game.entries.len()
                ),
            ));
        }
        let slot = &mut slots[game.left][game.right];
        if slot.is_some() {
            return Err(Error::format(
                origin,
                format!("games[{n}]: duplicate pair ({}, {})", game.left, game.right),
            ));
        }
        *slot = Some(PayoffMatrix::new(doc.m, doc.k, game.entries)?);
    }
    let mut games = Vec::with_capacity(doc.p);
    for (l, row) in slots.into_iter().enumerate() {
        let mut out = Vec::with_capacity(doc.a);
        for (r, g) in row.into_iter().enumerate() {
            out.push(g.ok_or_else(|| {
                Error::format(origin, format!("games: missing pair ({l}, {r})"))
            })?);
        }
        games.push(out);
    }
    let instance = MarketInstance::new(games, doc.left_outside, doc.right_outside)
        .map_err(|e| Error::format(origin, e.to_string()))?;
    Ok(match (doc.generator, doc.seed) {
        (Some(generator), Some(seed)) => instance.with_provenance(Provenance { generator, seed }),
        _ => instance,
    })
}

pub fn read_instance(path: &Path) -> Result<MarketInstance> {
    instance_from_str(&read_text(path)?, &path.display().to_string())
}

pub fn write_instance(path: &Path, instance: &MarketInstance) -> Result<()> {
    write_text(path, &instance_to_string(instance))
}

pub fn matching_to_string(matching: &Matching) -> String {
    to_json(&MatchingDoc {
        format: MATCHING_FORMAT.into(),
        version: FORMAT_VERSION,
        left_count: matching.left_count(),
        right_count: matching.right_count(),
        pairs: matching.pairs().collect(),
    })
}

pub fn matching_from_str(text: &str, origin: &str) -> Result<Matching> {
    let doc: MatchingDoc = parse(text, origin)?;
    check_header(&doc.format, doc.version, MATCHING_FORMAT, origin)?;
    Matching::from_pairs(doc.left_count, doc.right_count, doc.pairs)
        .map_err(|e| Error::format(origin, format!("field `pairs`: {e}")))
}

pub fn read_matching(path: &Path) -> Result<Matching> {
    matching_from_str(&read_text(path)?, &path.display().to_string())
}

pub fn write_matching(path: &Path, matching: &Matching) -> Result<()> {
    write_text(path, &matching_to_string(matching))
}

pub fn strategies_to_string(profile: &StrategyProfile) -> String {
    let side = |v: &[Option<MixedStrategy>]| {
        v.iter()
            .map(|s| s.as_ref().map(|s| s.probabilities().to_vec()))
            .collect()
    };
    to_json(&StrategiesDoc {
        format: STRATEGIES_FORMAT.into(),
        version: FORMAT_VERSION,
        left: side(&profile.left),
        right: side(&profile.right),
    })
}

pub fn strategies_from_str(text: &str, origin: &str) -> Result<StrategyProfile> {
    let doc: StrategiesDoc = parse(text, origin)?;
    check_header(&doc.format, doc.version, STRATEGIES_FORMAT, origin)?;
    let side = |v: Vec<Option<Vec<f64>>>, name: &str| -> Result<Vec<Option<MixedStrategy>>> {
        v.into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.map(MixedStrategy::new)
                    .transpose()
                    .map_err(|e| Error::format(origin, format!("{name}[{i}]: {e}")))
            })
            .collect()
    };
    Ok(StrategyProfile {
        left: side(doc.left, "left")?,
        right: side(doc.right, "right")?,
    })
}

pub fn read_strategies(path: &Path) -> Result<StrategyProfile> {
    strategies_from_str(&read_text(path)?, &path.display().to_string())
}

pub fn write_strategies(path: &Path, profile: &StrategyProfile) -> Result<()> {
    write_text(path, &strategies_to_string(profile))
}

pub fn preferences_to_string(prefs: &PreferenceProfile) -> String {
    to_json(&PreferencesDoc {
        format: PREFERENCES_FORMAT.into(),
        version: FORMAT_VERSION,
        left: prefs.left.clone(),
        right: prefs.right.clone(),
    })
}

pub fn preferences_from_str(text: &str, origin: &str) -> Result<PreferenceProfile> {
    let doc: PreferencesDoc = parse(text, origin)?;
    check_header(&doc.format, doc.version, PREFERENCES_FORMAT, origin)?;
    let prefs = PreferenceProfile {
        left: doc.left,
        right: doc.right,
    };
    prefs
        .validate()
        .map_err(|e| Error::format(origin, e.to_string()))?;
    Ok(prefs)
}

pub fn read_preferences(path: &Path) -> Result<PreferenceProfile> {
    preferences_from_str(&read_text(path)?, &path.display().to_string())
}
