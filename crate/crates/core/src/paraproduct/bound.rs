//! Empirical `BMO × L² → L²` ratios for paraproducts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply_paraproduct, bmo_norm, BmoMode, ParaproductSpec};
use crate::dyadic::GridSpec;
use crate::error::{DyadicError, Result};
use crate::random::{random_haar_function, random_step_function, CoeffSupport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub seed: u64,
    pub depth: String,
    /// `None` when the trial was skipped (zero BMO norm or zero `f`).
    pub ratio: Option<f64>,
    pub bmo_mode: BmoMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    /// Largest ratio and the seed attaining it.
    pub max: Option<(u64, f64)>,
    pub skipped: usize,
}

pub fn depth_label(grid: &GridSpec) -> String {
    grid.depths.iter().map(u32::to_string).collect::<Vec<_>>().join("x")
}

/// For each seed, `b` has random strict coefficients (seed `2s`) and `f`
/// random cell values (seed `2s + 1`); the ratio is
/// `‖B(b,f)‖₂ / (‖b‖_BMO ‖f‖₂)` with the greedy BMO estimate.
pub fn empirical_paraproduct_bound(spec: &ParaproductSpec, grid: &GridSpec, seeds: &[u64]) -> Result<BoundReport> {
    if !spec.is_bmo_admissible() {
        return Err(DyadicError::InvalidArgument("paraproduct is not BMO-admissible".into()));
    }
    let rows: Vec<BoundRow> = seeds
        .par_iter()
        .map(|&seed| {
            let b = random_haar_function(grid, &CoeffSupport::full(grid), seed.wrapping_mul(2));
            let f = random_step_function(grid, seed.wrapping_mul(2).wrapping_add(1));
            let ratio = trial_ratio(spec, &b, &f)?;
            Ok(BoundRow { seed, depth: depth_label(grid), ratio, bmo_mode: BmoMode::Greedy })
        })
        .collect::<Result<_>>()?;
    Ok(summarize(rows))
}

/// `‖B(b,f)‖₂ / (‖b‖_BMO ‖f‖₂)`, or `None` if the denominator vanishes.
pub fn trial_ratio(
    spec: &ParaproductSpec,
    b: &crate::haar::StepFunction,
    f: &crate::haar::StepFunction,
) -> Result<Option<f64>> {
    let bmo = bmo_norm(b, BmoMode::Greedy)?;
    let f_norm = f.l2_norm_sq().to_f64().sqrt();
    if bmo.value == 0.0 || f_norm == 0.0 {
        return Ok(None);
    }
    let out = apply_paraproduct(spec, b, f)?;
    Ok(Some(out.l2_norm_sq().to_f64().sqrt() / (bmo.value * f_norm)))
}

pub fn summarize(rows: Vec<BoundRow>) -> BoundReport {
    let skipped = rows.iter().filter(|r| r.ratio.is_none()).count();
    let max =
        rows.iter().filter_map(|r| r.ratio.map(|x| (r.seed, x))).fold(
            None,
            |acc: Option<(u64, f64)>, (s, x)| match acc {
                Some((_, m)) if m >= x => acc,
                _ => Some((s, x)),
            },
        );
    BoundReport { rows, max, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{DyadicRectangle, Signature, VectorSignature};
    use crate::haar::{haar_function, StepFunction};

    fn vs(b: u8) -> VectorSignature {
        VectorSignature::new([Signature::new(1, b).unwrap()])
    }

    #[test]
    fn single_haar_ratio_is_one() {
        let g = GridSpec::one(1, 4).unwrap();
        let spec = ParaproductSpec::with_ones(vs(0), vs(0), vs(1)).unwrap();
        for r in [DyadicRectangle::unit(&[1]), DyadicRectangle::new([crate::dyadic::DyadicCube::new(2, &[3]).unwrap()])]
        {
            let h = haar_function(&g, &r, &vs(0)).unwrap();
            let ratio = trial_ratio(&spec, &h, &h).unwrap().unwrap();
            assert!((ratio - 1.0).abs() < 1e-12, "{ratio}");
        }
    }

    #[test]
    fn zero_b_is_skipped() {
        let g = GridSpec::one(1, 3).unwrap();
        let spec = ParaproductSpec::with_ones(vs(0), vs(1), vs(0)).unwrap();
        let f = random_step_function(&g, 1);
        assert_eq!(trial_ratio(&spec, &StepFunction::zero(&g), &f).unwrap(), None);
        let rep = summarize(vec![BoundRow { seed: 0, depth: "3".into(), ratio: None, bmo_mode: BmoMode::Greedy }]);
        assert_eq!(rep.skipped, 1);
        assert_eq!(rep.max, None);
    }

    #[test]
    fn rejects_non_bmo_admissible() {
        let g = GridSpec::one(1, 3).unwrap();
        let spec = ParaproductSpec::with_ones(vs(1), vs(0), vs(0)).unwrap();
        assert!(empirical_paraproduct_bound(&spec, &g, &[0]).is_err());
    }

    #[test]
    fn report_is_seed_ordered_and_deterministic() {
        let g = GridSpec::one(1, 3).unwrap();
        let spec = ParaproductSpec::with_ones(vs(0), vs(1), vs(0)).unwrap();
        let a = empirical_paraproduct_bound(&spec, &g, &[3, 1, 2]).unwrap();
        let b = empirical_paraproduct_bound(&spec, &g, &[3, 1, 2]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![3, 1, 2]);
    }
}
