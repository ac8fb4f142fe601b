//! The pairing bound `⟨Qf, g⟩ ≤ C ∫ S(f) S(g)`: false with `C = 1`, true with
//! `C = 2^{d/2}`.

use dyadic_core::dyadic::{DyadicCube, DyadicRectangle};
use dyadic_core::haar::{haar_function, square_function};
use dyadic_core::random::random_step_function;
use dyadic_core::shift::{tensor_apply, ShiftMap, TensorShift};
use dyadic_core::{GridSpec, Signature, StepFunction, VectorSignature};

fn pairing(q: &TensorShift, f: &StepFunction, g: &StepFunction) -> (f64, f64) {
    let lhs = tensor_apply(q, f).unwrap().inner(g).unwrap().to_f64();
    let (sf, sg) = (square_function(f), square_function(g));
    let rhs = sf.iter().zip(&sg).map(|(a, b)| a * b).sum::<f64>() / f.grid().total_cells() as f64;
    (lhs, rhs)
}

#[test]
fn unit_constant_fails_on_parent_child_pair() {
    let grid = GridSpec::one(1, 3).unwrap();
    let h = |level, pos| {
        haar_function(
            &grid,
            &DyadicRectangle::new([DyadicCube::new(level, &[pos]).unwrap()]),
            &VectorSignature::new([Signature::zeros(1)]),
        )
        .unwrap()
    };
    let q = TensorShift::new(vec![Some(ShiftMap::first_child(1))]);
    let (lhs, rhs) = pairing(&q, &h(0, 0), &h(1, 0));
    assert!((lhs - 1.0).abs() < 1e-12);
    assert!((rhs - 0.5f64.sqrt()).abs() < 1e-12);
    assert!(lhs > rhs);
    assert!(lhs <= 2f64.sqrt() * rhs + 1e-12);
}

#[test]
fn dimension_constant_holds_on_random_pairs() {
    for (d, n) in [(1, 5), (2, 3)] {
        let grid = GridSpec::one(d, n).unwrap();
        let c = 2f64.powf(d as f64 / 2.0);
        for m in [ShiftMap::first_child(d), ShiftMap::rotating(d)] {
            let q = TensorShift::new(vec![Some(m)]);
            for seed in 0..20 {
                let (f, g) = (random_step_function(&grid, seed), random_step_function(&grid, seed + 100));
                let (lhs, rhs) = pairing(&q, &f, &g);
                assert!(lhs <= c * rhs + 1e-9, "d={d} seed {seed}: {lhs} > {c} * {rhs}");
            }
        }
    }
}
