//! Seeded generation of test inputs. Draws are uniform on `{-8, ..., 8}/8`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::GridSpec;
use crate::haar::{synthesize_dense, StepFunction, TensorBasis};
use crate::scalar::Scalar;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn draw(rng: &mut impl Rng) -> Scalar {
    Scalar::from_ratio(rng.random_range(-8..=8), 8)
}

/// Random cell values.
pub fn random_step_function(grid: &GridSpec, seed: u64) -> StepFunction {
    let mut r = rng(seed);
    let values = (0..grid.total_cells()).map(|_| draw(&mut r)).collect();
    StepFunction::from_values(grid.clone(), values).expect("valid grid")
}

/// Which Haar slots receive random coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffSupport {
    /// Per parameter, only levels `< max_level[s]` are populated.
    pub max_level: Vec<u32>,
    /// Populate slots with a mean part in some parameter (and the global mean).
    pub with_means: bool,
}

impl CoeffSupport {
    pub fn full(grid: &GridSpec) -> Self {
        CoeffSupport { max_level: grid.depths.clone(), with_means: false }
    }

    /// Keep `margin` levels above the grid depth free in every parameter.
    pub fn with_margin(grid: &GridSpec, margin: u32) -> Self {
        CoeffSupport { max_level: grid.depths.iter().map(|&n| n.saturating_sub(margin)).collect(), with_means: false }
    }
}

/// Random function with independent coefficients on the chosen Haar slots.
pub fn random_haar_function(grid: &GridSpec, support: &CoeffSupport, seed: u64) -> StepFunction {
    let mut r = rng(seed);
    let basis = TensorBasis::new(grid);
    let shape = basis.shape();
    let coeffs: Vec<Scalar> = (0..grid.total_cells())
        .map(|i| {
            let parts = basis.split(i, &shape);
            let keep =
                parts.iter().zip(&basis.params).zip(&support.max_level).all(|((&p, pb), &lim)| match pb.level_of(p) {
                    None => support.with_means,
                    Some(k) => k < lim,
                });
            if keep {
                draw(&mut r)
            } else {
                Scalar::zero()
            }
        })
        .collect();
    synthesize_dense(grid, &coeffs).expect("valid grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::analyze;

    #[test]
    fn seeds_are_reproducible() {
        let g = GridSpec::new(vec![1, 1], vec![2, 2]).unwrap();
        assert_eq!(random_step_function(&g, 3), random_step_function(&g, 3));
        assert_ne!(random_step_function(&g, 3), random_step_function(&g, 4));
    }

    #[test]
    fn support_is_respected() {
        let g = GridSpec::one(1, 5).unwrap();
        let f = random_haar_function(&g, &CoeffSupport::with_margin(&g, 2), 11);
        let e = analyze(&f);
        assert!(e.mean.is_zero());
        assert!(e.coeffs.keys().all(|(r, _)| r.factors()[0].level() < 3));
        assert!(!e.coeffs.is_empty());
    }
}
