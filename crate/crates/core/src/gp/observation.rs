use std::fmt;
use std::num::NonZeroU32;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A count of same-point evaluations, possibly infinite.
///
/// Used both for the number of raw evaluations fused into one observation
/// and for the virtual batch size of the sampling criterion. An infinite
/// count means the averaged value carries no noise at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BatchSize {
    Finite(NonZeroU32),
    Infinite,
}

impl BatchSize {
    pub const ONE: BatchSize = BatchSize::Finite(NonZeroU32::MIN);

    pub fn finite(k: u32) -> Result<Self> {
        NonZeroU32::new(k)
            .map(BatchSize::Finite)
            .ok_or_else(|| Error::InvalidArgument("batch size must be ≥ 1".into()))
    }

    /// Noise variance of the average of this many evaluations: `σ²/k`,
    /// exactly 0 when infinite.
    pub fn averaged_noise(self, noise_variance: f64) -> f64 {
        match self {
            BatchSize::Finite(k) => noise_variance / f64::from(k.get()),
            BatchSize::Infinite => 0.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, BatchSize::Infinite)
    }
}

impl fmt::Display for BatchSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchSize::Finite(k) => write!(f, "{k}"),
            BatchSize::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for BatchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" => Ok(BatchSize::Infinite),
            other => {
                let k: u32 = other
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("not a batch size: {other:?}")))?;
                BatchSize::finite(k)
            }
        }
    }
}

impl Serialize for BatchSize {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BatchSize::Finite(k) => serializer.serialize_u32(k.get()),
            BatchSize::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BatchSize {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(i64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Count(k) => u32::try_from(k)
                .map_err(|_| Error::InvalidArgument(format!("batch size out of range: {k}")))
                .and_then(BatchSize::finite)
                .map_err(serde::de::Error::custom),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Known, constant observation noise variance `σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub variance: f64,
}

impl NoiseModel {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be finite and ≥ 0, got {variance}"
            )));
        }
        Ok(Self { variance })
    }

    pub fn noise_free() -> Self {
        Self { variance: 0.0 }
    }
}

/// One (possibly fused) observation at a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub grid_index: usize,
    pub value: f64,
    pub batch: BatchSize,
}

impl Observation {
    pub fn single(grid_index: usize, value: f64) -> Self {
        Self { grid_index, value, batch: BatchSize::ONE }
    }

    pub fn exact(grid_index: usize, value: f64) -> Self {
        Self { grid_index, value, batch: BatchSize::Infinite }
    }

    pub fn noise_variance(&self, noise: &NoiseModel) -> f64 {
        self.batch.averaged_noise(noise.variance)
    }
}

/// Observations in arrival order. Repeated locations are kept as separate
/// entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObservationSet {
    observations: Vec<Observation>,
}

impl ObservationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, obs: Observation) {
        self.observations.push(obs);
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation> {
        self.observations.iter()
    }

    pub fn as_slice(&self) -> &[Observation] {
        &self.observations
    }

    pub fn distinct_locations(&self) -> usize {
        let mut idx: Vec<usize> = self.observations.iter().map(|o| o.grid_index).collect();
        idx.sort_unstable();
        idx.dedup();
        idx.len()
    }

    /// Same observations with values mapped through `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        self.observations
            .iter()
            .map(|o| Observation { value: f(o.value), ..*o })
            .collect()
    }
}

impl FromIterator<Observation> for ObservationSet {
    fn from_iter<I: IntoIterator<Item = Observation>>(iter: I) -> Self {
        Self { observations: iter.into_iter().collect() }
    }
}

impl From<Vec<Observation>> for ObservationSet {
    fn from(observations: Vec<Observation>) -> Self {
        Self { observations }
    }
}

impl<'a> IntoIterator for &'a ObservationSet {
    type Item = &'a Observation;
    type IntoIter = std::slice::Iter<'a, Observation>;

    fn into_iter(self) -> Self::IntoIter {
        self.observations.iter()
    }
}

/// Replaces `K` evaluations at one grid point by their mean, which carries
/// noise variance `σ²/K`. Conditioning on the mean is equivalent to
/// conditioning on the individual values.
pub fn fuse_batch(grid_index: usize, values: &[f64]) -> Result<Observation> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot fuse an empty batch".into()));
    }
    let k = u32::try_from(values.len())
        .map_err(|_| Error::InvalidArgument("batch too large".into()))?;
    let value = if values.len() == 1 {
        values[0]
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    };
    Ok(Observation { grid_index, value, batch: BatchSize::finite(k)? })
}
