//! Iterated commutators `C_Q(b, f) = [⋯[M_b, Q_1], ⋯, Q_t] f`, the one-parameter
//! case table, the decomposition into shifted paraproducts, and operator norms.

pub mod cases;
pub mod decompose;
pub mod norm;

pub use cases::{
    case_classify, case_direct, case_evaluate, case_terms, verify_case_table, CaseInput, CaseLabel, CaseReport,
};
pub use decompose::{decompose, evaluate_terms, verify_decomposition, Decomposition, DecompositionTerm, Pattern};
pub use norm::{commutator_matrix, norm_ratio_experiment, operator_norm, single_haar_family, NormOptions, RatioRow};

use crate::error::{DyadicError, Result};
use crate::haar::StepFunction;
use crate::shift::{ShiftPlan, TensorShift};

/// `f ↦ C_Q(b, f)` with the shift plans resolved once.
pub struct CommutatorPlan {
    b: StepFunction,
    plans: Vec<ShiftPlan>,
}

impl CommutatorPlan {
    /// One factor `Q_s ⊗ Id` per parameter, in order.
    pub fn new(b: &StepFunction, q: &TensorShift) -> Result<Self> {
        let grid = b.grid();
        if q.parts.len() != grid.params() {
            return Err(DyadicError::DimensionMismatch { expected: grid.params(), got: q.parts.len() });
        }
        let plans = (0..grid.params())
            .map(|s| {
                let mut parts = vec![None; grid.params()];
                parts[s] = q.parts[s].clone();
                TensorShift::new(parts).plan(grid)
            })
            .collect::<Result<_>>()?;
        Ok(CommutatorPlan { b: b.clone(), plans })
    }

    fn level(&self, s: usize, f: &StepFunction) -> Result<StepFunction> {
        if s == 0 {
            return self.b.mul(f);
        }
        let q = &self.plans[s - 1];
        let left = self.level(s - 1, &q.apply(f).0)?;
        let right = q.apply(&self.level(s - 1, f)?).0;
        left.sub(&right)
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        if f.grid() != self.b.grid() {
            return Err(DyadicError::GridMismatch(format!("{:?} vs {:?}", self.b.grid(), f.grid())));
        }
        self.level(self.plans.len(), f)
    }
}

/// `C_Q(b, f)`, by `C_s = C_{s-1} Q_s − Q_s C_{s-1}` from `C_0 = M_b`.
pub fn commutator_apply(b: &StepFunction, q: &TensorShift, f: &StepFunction) -> Result<StepFunction> {
    CommutatorPlan::new(b, q)?.apply(f)
}
