//! Run configuration: a versioned JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use dyadic_core::dyadic::{DyadicCube, DyadicRectangle};
use dyadic_core::haar::{haar_function, StepFunctionJson};
use dyadic_core::paraproduct::{BmoMode, ParaproductSpec};
use dyadic_core::random::{random_haar_function, random_step_function, CoeffSupport};
use dyadic_core::shift::{parse_signature, ShiftMap, SigMap};
use dyadic_core::{GridSpec, Rational, Scalar, StepFunction, VectorSignature};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    /// verify-cases and ratio run each entry; verify-decomposition and
    /// opnorm take one entry per parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<ShiftSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<SeedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
    /// Finest levels kept free of input coefficients (verify-decomposition).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_margin: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bmo_modes: Option<Vec<BmoMode>>,
    /// Grid depths for ratio.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depths: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    /// The symbol `b` for bmo and opnorm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paraproduct: Option<ParaproductSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riesz: Option<RieszConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: Vec<usize>,
    pub depths: Vec<u32>,
}

impl GridConfig {
    pub fn one(dim: usize, depth: u32) -> Self {
        GridConfig { dims: vec![dim], depths: vec![depth] }
    }

    pub fn resolve(&self) -> Result<GridSpec, CliError> {
        GridSpec::new(self.dims.clone(), self.depths.clone()).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// A preset name, a shift-map file, or an inline map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShiftSpec {
    Preset(String),
    File { file: PathBuf },
    Map(ShiftMap),
}

pub const PRESETS: [&str; 4] = ["first-child", "rotating", "rotating-cyclic", "first-child-kill"];

impl ShiftSpec {
    pub fn preset(name: &str) -> Self {
        ShiftSpec::Preset(name.into())
    }

    /// The map for a parameter of dimension `dim`; file paths are relative to `base`.
    pub fn resolve(&self, dim: usize, base: &Path) -> Result<ShiftMap, CliError> {
        let map = match self {
            ShiftSpec::Preset(p) => match p.as_str() {
                "first-child" => ShiftMap::first_child(dim),
                "rotating" => ShiftMap::rotating(dim),
                "rotating-cyclic" => ShiftMap::rotating(dim).with_sig(SigMap::Cyclic).map_err(config)?,
                "first-child-kill" => {
                    ShiftMap::first_child(dim).with_sig(SigMap::Kill { sig: "0".repeat(dim) }).map_err(config)?
                }
                other => {
                    return Err(CliError::Config(format!(
                        "unknown shift preset {other:?} (known: {})",
                        PRESETS.join(", ")
                    )))
                }
            },
            ShiftSpec::File { file } => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("shift map {}: {e}", path.display())))?;
                ShiftMap::from_json(&text)
                    .map_err(|e| CliError::Config(format!("shift map {}: {e}", path.display())))?
            }
            ShiftSpec::Map(m) => m.clone(),
        };
        if map.dim != dim {
            return Err(CliError::Config(format!("shift map has dimension {}, parameter has {dim}", map.dim)));
        }
        Ok(map)
    }

    pub fn label(&self) -> String {
        match self {
            ShiftSpec::Preset(p) => p.clone(),
            ShiftSpec::File { file } => file.display().to_string(),
            ShiftSpec::Map(m) => m.to_json(),
        }
    }
}

fn config(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    /// Half-open range `from..to`.
    Range {
        from: u64,
        to: u64,
    },
}

impl SeedSpec {
    pub fn range(from: u64, to: u64) -> Self {
        SeedSpec::Range { from, to }
    }

    /// Sorted, without duplicates.
    pub fn resolve(&self) -> Vec<u64> {
        let mut v: Vec<u64> = match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { from, to } => (*from..*to).collect(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `"1,2,5"` or `"0..100"`.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = |e: std::num::ParseIntError| CliError::Config(format!("seed list {s:?}: {e}"));
        if let Some((a, b)) = s.split_once("..") {
            return Ok(SeedSpec::Range { from: a.trim().parse().map_err(bad)?, to: b.trim().parse().map_err(bad)? });
        }
        let v = s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse()).collect::<Result<_, _>>();
        Ok(SeedSpec::List(v.map_err(bad)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `h_I` for `I` in `[0,1)`, `[0,1/2)`, `[1/2,1)`.
    SingleHaar,
    /// Random strict coefficients per seed.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// Random strict Haar coefficients in `{-8..8}/8`, one function per seed.
    Random {},
    /// Random cell values in `{-8..8}/8`, one function per seed.
    RandomCells {},
    /// One normalized Haar function.
    Haar {
        cubes: Vec<CubeConfig>,
        sig: Vec<String>,
    },
    Constant {
        value: String,
    },
    /// Explicit cell values on the configured grid.
    Values {
        values: Vec<Scalar>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeConfig {
    pub level: u32,
    pub pos: Vec<u32>,
}

impl FunctionSpec {
    pub fn is_seeded(&self) -> bool {
        matches!(self, FunctionSpec::Random {} | FunctionSpec::RandomCells {})
    }

    pub fn build(&self, grid: &GridSpec, seed: u64) -> Result<StepFunction, CliError> {
        match self {
            FunctionSpec::Random {} => Ok(random_haar_function(grid, &CoeffSupport::full(grid), seed)),
            FunctionSpec::RandomCells {} => Ok(random_step_function(grid, seed)),
            FunctionSpec::Haar { cubes, sig } => {
                let r = DyadicRectangle::new(
                    cubes
                        .iter()
                        .map(|c| DyadicCube::new(c.level, &c.pos))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(config)?,
                );
                let e = VectorSignature::new(
                    sig.iter().map(|s| parse_signature(s.len(), s)).collect::<Result<Vec<_>, _>>().map_err(config)?,
                );
                haar_function(grid, &r, &e).map_err(config)
            }
            FunctionSpec::Constant { value } => {
                let v: Rational = value.parse().map_err(|e| CliError::Config(format!("constant {value:?}: {e}")))?;
                Ok(StepFunction::constant(grid, Scalar::from_rational(v)))
            }
            FunctionSpec::Values { values } => {
                StepFunctionJson { grid: grid.clone(), values: values.clone() }.into_step_function().map_err(config)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RieszConfig {
    #[serde(default = "one")]
    pub j: usize,
    #[serde(default = "one")]
    pub dim: usize,
    /// `n = 2^depth` points per axis.
    pub depth: u32,
    pub m_max: usize,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        if cfg.version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "config version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn empty() -> Self {
        RunConfig { version: SCHEMA_VERSION, ..Default::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(RunConfig::parse(r#"{"version": 1, "grid": {"dims": [1], "depths": [3]}}"#).is_ok());
        assert!(RunConfig::parse(r#"{"version": 1, "gird": {}}"#).is_err());
        assert!(RunConfig::parse(r#"{"version": 2}"#).is_err());
        assert!(RunConfig::parse(r#"{}"#).is_err());
        assert!(RunConfig::parse(r#"{"version": 1, "grid": {"dims": [1], "depths": [3], "x": 1}}"#).is_err());
    }

    #[test]
    fn seeds_parse_and_sort() {
        assert_eq!(SeedSpec::parse("5, 1,5,3").unwrap().resolve(), vec![1, 3, 5]);
        assert_eq!(SeedSpec::parse("2..5").unwrap().resolve(), vec![2, 3, 4]);
        assert_eq!(SeedSpec::parse("").unwrap().resolve(), Vec::<u64>::new());
        assert!(SeedSpec::parse("a").is_err());
        let cfg = RunConfig::parse(r#"{"version": 1, "seeds": {"from": 0, "to": 3}}"#).unwrap();
        assert_eq!(cfg.seeds.unwrap().resolve(), vec![0, 1, 2]);
    }

    #[test]
    fn shift_specs_resolve() {
        let base = Path::new(".");
        assert_eq!(ShiftSpec::preset("rotating").resolve(2, base).unwrap(), ShiftMap::rotating(2));
        assert!(ShiftSpec::preset("spiral").resolve(1, base).is_err());
        assert!(ShiftSpec::File { file: "missing.json".into() }.resolve(1, base).is_err());
        let inline: ShiftSpec = serde_json::from_str(&ShiftMap::rotating(1).to_json()).unwrap();
        assert_eq!(inline.resolve(1, base).unwrap(), ShiftMap::rotating(1));
        assert!(inline.resolve(2, base).is_err());
    }

    #[test]
    fn functions_build() {
        let g = GridSpec::one(1, 2).unwrap();
        let c = FunctionSpec::Constant { value: "3/2".into() }.build(&g, 0).unwrap();
        assert_eq!(c.values()[0], Scalar::from_ratio(3, 2));
        let h: FunctionSpec =
            serde_json::from_str(r#"{"kind": "haar", "cubes": [{"level": 1, "pos": [1]}], "sig": ["0"]}"#).unwrap();
        assert_eq!(h.build(&g, 0).unwrap().l2_norm_sq(), Scalar::one());
        assert!(serde_json::from_str::<FunctionSpec>(r#"{"kind": "random", "seed": 3}"#).is_err());
    }
}
