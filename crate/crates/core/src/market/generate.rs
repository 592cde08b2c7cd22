use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{MarketInstance, Provenance};
use crate::error::{Error, Result};
use crate::rng;
use crate::zerosum::PayoffMatrix;

/// Distribution of payoff entries for random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// i.i.d. standard normal entries.
    GaussianUnit,
    /// i.i.d. uniform entries on `[-1, 1]`.
    UniformSigned,
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" | "gaussian_unit" | "normal" => Ok(Generator::GaussianUnit),
            "uniform" | "uniform_signed" => Ok(Generator::UniformSigned),
            other => Err(Error::Input(format!("unknown generator {other:?}"))),
        }
    }
}

impl std::fmt::Display for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Generator::GaussianUnit => "gaussian_unit",
            Generator::UniformSigned => "uniform_signed",
        })
    }
}

/// Random market with the same outside option for every agent; deterministic in `seed`.
///
/// Entries are drawn pair by pair (left-major), row-major within each game.
pub fn generate_instance(
    p: usize,
    a: usize,
    m: usize,
    k: usize,
    generator: Generator,
    outside_option: f64,
    seed: u64,
) -> Result<MarketInstance> {
    if p == 0 || a == 0 || m == 0 || k == 0 {
        return Err(Error::Input(format!(
            "agent and action counts must be positive, got p={p} a={a} m={m} k={k}"
        )));
    }
    if !outside_option.is_finite() {
        return Err(Error::Input("outside option must be finite".into()));
    }
    let mut rng = rng::stream(seed, rng::INSTANCE_STREAM);
    let mut draw = || -> f64 {
        match generator {
            Generator::GaussianUnit => rng.sample(StandardNormal),
            Generator::UniformSigned => rng.random_range(-1.0..=1.0),
        }
    };
    let mut games = Vec::with_capacity(p);
    for _ in 0..p {
        let mut row = Vec::with_capacity(a);
        for _ in 0..a {
            let entries: Vec<f64> = (0..m * k).map(|_| draw()).collect();
            row.push(PayoffMatrix::new(m, k, entries)?);
        }
        games.push(row);
    }
    Ok(
        MarketInstance::new(games, vec![outside_option; p], vec![outside_option; a])?
            .with_provenance(Provenance { generator, seed }),
    )
}
