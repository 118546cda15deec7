//! JSON file formats. Every struct rejects unknown keys.

use std::fs;
use std::path::{Path, PathBuf};

use paraproduct_core::dyadic_geometry::{
    Center, CubeConstants, DyadicSystem, QuasiMetricSpace, SystemKind,
};
use paraproduct_core::{Filtration, Func, MeasureKind, MeasureSpace};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON in {path} at line {line}, column {column}: {message}")]
    Json { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{op}")]
    Core { op: &'static str, source: paraproduct_core::Error },
}

/// Attaches the name of the operation that failed.
pub trait Context<T> {
    fn op(self, op: &'static str) -> Result<T, InputError>;
}

impl<T> Context<T> for paraproduct_core::Result<T> {
    fn op(self, op: &'static str) -> Result<T, InputError> {
        self.map_err(|source| InputError::Core { op, source })
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Io { path: path.into(), source })?;
    parse_json(path, &text)
}

pub fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::Json {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindDto {
    #[default]
    Probability,
    SigmaFinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDto {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub kind: KindDto,
}

impl SpaceDto {
    pub fn build(&self) -> Result<MeasureSpace, InputError> {
        let kind = match self.kind {
            KindDto::Probability => MeasureKind::Probability,
            KindDto::SigmaFinite => MeasureKind::SigmaFinite,
        };
        MeasureSpace::new(self.weights.clone(), kind).op("space")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltrationDto {
    #[serde(default)]
    pub k_min: i32,
    /// Blocks per level, coarsest first.
    #[serde(alias = "levels")]
    pub partitions: Vec<Vec<Vec<usize>>>,
}

impl FiltrationDto {
    pub fn build(&self, n: usize) -> Result<Filtration, InputError> {
        Filtration::new(n, self.k_min, self.partitions.clone()).op("filtration")
    }

    pub fn from_filtration(f: &Filtration) -> Self {
        Self { k_min: f.k_min(), partitions: f.to_raw() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuncDto {
    pub values: Vec<f64>,
}

impl FuncDto {
    pub fn build(&self) -> Result<Func, InputError> {
        Func::new(self.values.clone()).op("function")
    }
}

/// A quasi-metric space given by coordinates (Euclidean distance) or a
/// distance matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDto {
    #[serde(default)]
    pub coords: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Defaults to unit weights.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "one", alias = "A0")]
    pub a0: f64,
}

fn one() -> f64 {
    1.0
}

impl MetricDto {
    pub fn build(&self) -> Result<QuasiMetricSpace, InputError> {
        let n = self.coords.as_ref().or(self.matrix.as_ref()).map_or(0, Vec::len);
        let weights = self.weights.clone().unwrap_or_else(|| vec![1.0; n]);
        match (&self.coords, &self.matrix) {
            (Some(c), None) => QuasiMetricSpace::from_coords(c, weights, self.a0).op("metric"),
            (None, Some(m)) => QuasiMetricSpace::from_matrix(m, weights, self.a0).op("metric"),
            _ => Err(InputError::Core {
                op: "metric",
                source: paraproduct_core::Error::InvalidMetric {
                    reason: "give exactly one of coords and matrix".into(),
                },
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum CenterDto {
    Point { id: usize },
    Coords { x: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeDto {
    pub center: CenterDto,
    pub members: Vec<usize>,
    pub parent: Option<usize>,
    pub diameter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum KindTag {
    Nets { seed: Option<u64>, attempt: usize },
    ShiftedGrid { shift: Vec<u8> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsDto {
    pub delta: f64,
    pub c0: f64,
    pub big_c0: f64,
    pub c1: f64,
    pub big_c1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDto {
    pub kind: KindTag,
    pub constants: ConstantsDto,
    pub k_min: i32,
    /// Cubes per level, coarsest first.
    pub levels: Vec<Vec<CubeDto>>,
}

impl SystemDto {
    pub fn from_system(s: &DyadicSystem) -> Self {
        let kind = match &s.kind {
            SystemKind::Nets { seed, attempt } => KindTag::Nets { seed: *seed, attempt: *attempt },
            SystemKind::ShiftedGrid { shift } => KindTag::ShiftedGrid { shift: shift.clone() },
        };
        let c = s.constants;
        Self {
            kind,
            constants: ConstantsDto { delta: c.delta, c0: c.c0, big_c0: c.big_c0, c1: c.c1, big_c1: c.big_c1 },
            k_min: s.k_min(),
            levels: (0..s.num_levels())
                .map(|idx| {
                    s.at(idx)
                        .iter()
                        .map(|cube| CubeDto {
                            center: match &cube.center {
                                Center::Point(id) => CenterDto::Point { id: *id },
                                Center::Coords(x) => CenterDto::Coords { x: x.clone() },
                            },
                            members: cube.members.clone(),
                            parent: cube.parent,
                            diameter: cube.diameter,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn build(&self, space: &QuasiMetricSpace) -> Result<DyadicSystem, InputError> {
        let kind = match &self.kind {
            KindTag::Nets { seed, attempt } => SystemKind::Nets { seed: *seed, attempt: *attempt },
            KindTag::ShiftedGrid { shift } => SystemKind::ShiftedGrid { shift: shift.clone() },
        };
        let c = &self.constants;
        let constants = CubeConstants { delta: c.delta, c0: c.c0, big_c0: c.big_c0, c1: c.c1, big_c1: c.big_c1 };
        let levels = self
            .levels
            .iter()
            .map(|level| {
                level
                    .iter()
                    .map(|cube| {
                        let center = match &cube.center {
                            CenterDto::Point { id } => Center::Point(*id),
                            CenterDto::Coords { x } => Center::Coords(x.clone()),
                        };
                        (center, cube.members.clone(), cube.parent)
                    })
                    .collect()
            })
            .collect();
        DyadicSystem::from_levels(space, kind, constants, self.k_min, levels).op("dyadic system")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Values read from `--config`; command-line flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub space: Option<PathBuf>,
    pub filtration: Option<PathBuf>,
    pub function: Option<PathBuf>,
    pub g: Option<PathBuf>,
    pub metric: Option<PathBuf>,
    pub system: Option<PathBuf>,
    #[serde(default)]
    pub suites: Vec<String>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub sizes: Option<Vec<usize>>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    /// Overrides for named check bounds, e.g. `{"identity.residual": 1e-13}`.
    #[serde(default)]
    pub tolerances: std::collections::BTreeMap<String, f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse_json::<SpaceDto>(Path::new("s.json"), "{\"weights\": [1], \"extra\": 2}").unwrap_err();
        assert!(e.to_string().contains("unknown field"));
        let e = parse_json::<Config>(Path::new("c.json"), "{\n\"seeds\": 1}").unwrap_err();
        assert!(matches!(e, InputError::Json { line: 2, .. }));
    }

    #[test]
    fn system_round_trip() {
        let coords: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64 / 16.0]).collect();
        let space = QuasiMetricSpace::from_coords(&coords, vec![1.0; 16], 1.0).unwrap();
        let grids = paraproduct_core::dyadic_geometry::euclidean_shifted_grids(&space, None).unwrap();
        let dto = SystemDto::from_system(&grids.systems[1]);
        let text = serde_json::to_string(&dto).unwrap();
        let back: SystemDto = serde_json::from_str(&text).unwrap();
        assert_eq!(back.build(&space).unwrap(), grids.systems[1]);
    }
}
