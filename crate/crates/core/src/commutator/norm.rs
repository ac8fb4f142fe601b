//! `‖f ↦ C_Q(b, f)‖_{L² → L²}` and its ratio to the BMO estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CommutatorPlan;
use crate::dyadic::{DyadicCube, DyadicRectangle, GridSpec, Signature, VectorSignature};
use crate::error::{DyadicError, Result};
use crate::haar::StepFunction;
use crate::haar::{haar_function, synthesize_dense, TensorBasis};
use crate::linalg::{assemble, largest_singular_value, PowerIteration, ScalarMatrix};
use crate::paraproduct::{bmo_norm, BmoMode};
use crate::random::{random_haar_function, CoeffSupport};
use crate::scalar::Scalar;
use crate::shift::{ShiftMap, TensorShift, DEFAULT_MATRIX_CAP};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    pub cap: usize,
    pub power: PowerIteration,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { cap: DEFAULT_MATRIX_CAP, power: PowerIteration::default() }
    }
}

/// Matrix of `f ↦ C_Q(b, f)` in the orthonormal Haar basis.
pub fn commutator_matrix(b: &StepFunction, q: &TensorShift, cap: usize) -> Result<ScalarMatrix> {
    let grid = b.grid();
    let n = grid.total_cells();
    if n > cap {
        return Err(DyadicError::CapExceeded { what: "basis size", size: n, cap });
    }
    let plan = CommutatorPlan::new(b, q)?;
    let basis = TensorBasis::new(grid);
    assemble(n, n, cap, |j| {
        let mut e = vec![Scalar::zero(); n];
        e[j] = Scalar::one();
        let h = synthesize_dense(grid, &e).expect("valid grid");
        let out = plan.apply(&h).expect("same grid");
        basis.analyze(out.values())
    })
}

/// Largest singular value of [`commutator_matrix`], by power iteration.
pub fn operator_norm(b: &StepFunction, q: &TensorShift, opts: NormOptions) -> Result<f64> {
    let m = commutator_matrix(b, q, opts.cap)?;
    Ok(largest_singular_value(&m.to_f64(), m.rows, m.cols, opts.power)?.value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub seed: u64,
    pub depth: u32,
    pub op_norm: f64,
    pub bmo: f64,
    /// `None` when the BMO estimate is zero.
    pub ratio: Option<f64>,
    pub bmo_mode: BmoMode,
}

/// `operator_norm(b) / ‖b‖_BMO` for one `b`.
pub fn ratio_for(b: &StepFunction, q: &TensorShift, opts: NormOptions) -> Result<(f64, f64, Option<f64>)> {
    let bmo = bmo_norm(b, BmoMode::Greedy)?.value;
    if bmo == 0.0 {
        return Ok((0.0, 0.0, None));
    }
    let op = operator_norm(b, q, opts)?;
    Ok((op, bmo, Some(op / bmo)))
}

/// For every depth and seed, `b` has random strict coefficients on the
/// one-parameter grid of dimension `sigma.dim`. Rows are ordered by depth,
/// then by the order of `seeds`.
pub fn norm_ratio_experiment(
    sigma: &ShiftMap,
    seeds: &[u64],
    depths: &[u32],
    opts: NormOptions,
) -> Result<Vec<RatioRow>> {
    let q = TensorShift::new(vec![Some(sigma.clone())]);
    let jobs: Vec<(u32, u64)> = depths.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    jobs.par_iter()
        .map(|&(depth, seed)| {
            let g = GridSpec::one(sigma.dim, depth)?;
            let b = random_haar_function(&g, &CoeffSupport::full(&g), seed);
            let (op_norm, bmo, ratio) = ratio_for(&b, &q, opts)?;
            Ok(RatioRow { seed, depth, op_norm, bmo, ratio, bmo_mode: BmoMode::Greedy })
        })
        .collect()
}

/// The fixed test family: `b = h^0_I` for `I` in `[0,1)`, `[0,1/2)`,
/// `[1/2,1)`, on the one-dimensional grid of the given depth.
pub fn single_haar_family(depth: u32) -> Result<Vec<(String, StepFunction)>> {
    let g = GridSpec::one(1, depth)?;
    [(0, 0), (1, 0), (1, 1)]
        .iter()
        .map(|&(k, p)| {
            let cube = DyadicCube::new(k, &[p])?;
            let h =
                haar_function(&g, &DyadicRectangle::new([cube.clone()]), &VectorSignature::new([Signature::zeros(1)]))?;
            Ok((cube.to_string(), h))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_step_function;

    #[test]
    fn constant_b_has_zero_norm() {
        let g = GridSpec::one(1, 4).unwrap();
        let q = TensorShift::new(vec![Some(ShiftMap::first_child(1))]);
        let b = StepFunction::constant(&g, Scalar::from_int(2));
        assert_eq!(operator_norm(&b, &q, NormOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn homogeneous_in_b() {
        let g = GridSpec::one(1, 4).unwrap();
        let q = TensorShift::new(vec![Some(ShiftMap::rotating(1))]);
        let b = random_step_function(&g, 8);
        let n1 = operator_norm(&b, &q, NormOptions::default()).unwrap();
        for l in [-3i64, 2, 5] {
            let nl = operator_norm(&b.scale(&Scalar::from_int(l)), &q, NormOptions::default()).unwrap();
            assert!((nl - l.unsigned_abs() as f64 * n1).abs() < 1e-9 * nl);
        }
        let r1 = ratio_for(&b, &q, NormOptions::default()).unwrap().2.unwrap();
        let r2 = ratio_for(&b.scale(&Scalar::from_ratio(-7, 4)), &q, NormOptions::default()).unwrap().2.unwrap();
        assert!((r1 - r2).abs() < 1e-9 * r1);
    }

    #[test]
    fn cap_is_enforced() {
        let g = GridSpec::one(1, 5).unwrap();
        let q = TensorShift::new(vec![Some(ShiftMap::rotating(1))]);
        let b = random_step_function(&g, 8);
        let opts = NormOptions { cap: 16, ..NormOptions::default() };
        assert!(matches!(operator_norm(&b, &q, opts), Err(DyadicError::CapExceeded { .. })));
    }

    #[test]
    fn rows_follow_input_order() {
        let rows = norm_ratio_experiment(&ShiftMap::first_child(1), &[5, 2], &[3, 4], NormOptions::default()).unwrap();
        let keys: Vec<(u32, u64)> = rows.iter().map(|r| (r.depth, r.seed)).collect();
        assert_eq!(keys, vec![(3, 5), (3, 2), (4, 5), (4, 2)]);
    }
}
