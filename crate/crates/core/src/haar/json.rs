//! JSON layouts for step functions and Haar expansions.
//!
//! ```json
//! {"grid": {"dims": [1], "depths": [2]},
//!  "values": [{"rat": "1/2", "sqrt2": "0"}, ...]}
//!
//! {"grid": {"dims": [1], "depths": [2]},
//!  "mean": {"rat": "0", "sqrt2": "0"},
//!  "coeffs": [{"cubes": [{"level": 1, "pos": [0]}],
//!              "sig": [[0]],
//!              "value": {"rat": "0", "sqrt2": "1"}}]}
//! ```
//!
//! Cells are ordered with the last parameter fastest; within a parameter the
//! cell index is `Σ_j pos_j 2^(N j)`. Signature parts list their bits.

use serde::{Deserialize, Serialize};

use super::{HaarExpansion, StepFunction};
use crate::dyadic::{DyadicCube, DyadicRectangle, GridSpec, Signature, VectorSignature};
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFunctionJson {
    pub grid: GridSpec,
    pub values: Vec<Scalar>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeJson {
    pub level: u32,
    pub pos: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffJson {
    pub cubes: Vec<CubeJson>,
    pub sig: Vec<Vec<u8>>,
    pub value: Scalar,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionJson {
    pub grid: GridSpec,
    pub mean: Scalar,
    pub coeffs: Vec<CoeffJson>,
}

impl From<&StepFunction> for StepFunctionJson {
    fn from(f: &StepFunction) -> Self {
        StepFunctionJson { grid: f.grid().clone(), values: f.values().to_vec() }
    }
}

impl StepFunctionJson {
    pub fn into_step_function(self) -> Result<StepFunction> {
        StepFunction::from_values(self.grid, self.values)
    }
}

impl From<&HaarExpansion> for ExpansionJson {
    fn from(e: &HaarExpansion) -> Self {
        let coeffs = e
            .coeffs
            .iter()
            .map(|((r, s), v)| CoeffJson {
                cubes: r.factors().iter().map(|q| CubeJson { level: q.level(), pos: q.pos().to_vec() }).collect(),
                sig: s.parts().iter().map(|p| (0..p.dim()).map(|j| p.bit(j)).collect()).collect(),
                value: v.clone(),
            })
            .collect();
        ExpansionJson { grid: e.grid.clone(), mean: e.mean.clone(), coeffs }
    }
}

impl ExpansionJson {
    pub fn into_expansion(self) -> Result<HaarExpansion> {
        self.grid.validate()?;
        let mut e = HaarExpansion::zero(&self.grid);
        e.mean = self.mean;
        for c in self.coeffs {
            let cubes = c.cubes.iter().map(|q| DyadicCube::new(q.level, &q.pos)).collect::<Result<Vec<_>>>()?;
            let sigs = c.sig.iter().map(|b| Signature::from_bits(b)).collect::<Result<Vec<_>>>()?;
            e.set(DyadicRectangle::new(cubes), VectorSignature::new(sigs), c.value)?;
        }
        Ok(e)
    }
}
