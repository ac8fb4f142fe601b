//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use dyadic_core::commutator::{
    case_terms, decompose, evaluate_terms, norm_ratio_experiment, operator_norm, single_haar_family, verify_case_table,
    verify_decomposition, Decomposition, DecompositionTerm, NormOptions,
};
use dyadic_core::dyadic::{enumerate_cubes, enumerate_rectangles};
use dyadic_core::haar::{analyze, haar_function, square_function, square_function_sq};
use dyadic_core::paraproduct::{bmo_norm, BmoMode, ParaproductSpec, SignRule};
use dyadic_core::random::random_step_function;
use dyadic_core::riesz::{discrete_riesz, span_residual_experiment, PeriodicGridFunction};
use dyadic_core::shift::{tensor_apply, ShiftMap, SigMap, TensorShift};
use dyadic_core::{DyadicRectangle, GridSpec, Scalar, Signature, StepFunction, VectorSignature};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed <= limit, format!("took {elapsed:.1?}, target {limit:?}"))
}

fn case_table() -> Outcome {
    let start = Instant::now();
    let mut pairs = 0;
    for sigma in [ShiftMap::first_child(1), ShiftMap::rotating(1)] {
        for depth in 1..=4 {
            let g = GridSpec::one(1, depth).unwrap();
            let rep = verify_case_table(&g, &sigma, case_terms).map_err(|e| e.to_string())?;
            if let Some(m) = rep.mismatches.first() {
                return Err(format!("depth {depth} {sigma:?}: {m:?}"));
            }
            pairs += rep.pairs;
        }
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{pairs} pairs exact in {:.1?}", start.elapsed()))
}

fn decomposition_identity() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let runs: [(GridSpec, Vec<Vec<ShiftMap>>, u64); 2] = [
        (GridSpec::one(1, 5).unwrap(), vec![vec![ShiftMap::first_child(1)], vec![ShiftMap::rotating(1)]], 100),
        (
            GridSpec::new(vec![1, 1], vec![3, 3]).unwrap(),
            vec![
                vec![ShiftMap::first_child(1), ShiftMap::rotating(1)],
                vec![ShiftMap::rotating(1), ShiftMap::rotating(1)],
            ],
            25,
        ),
    ];
    for (g, shift_sets, seeds) in runs {
        for maps in shift_sets {
            let d = decompose(&maps);
            for s in 0..seeds {
                let b = random_step_function(&g, 2 * s);
                let f = random_step_function(&g, 2 * s + 1);
                let r = verify_decomposition(&d, &b, &f).map_err(|e| e.to_string())?;
                check(r.is_zero(), format!("{g:?} {maps:?} seed {s}: nonzero residual"))?;
                checked += 1;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("{checked} (b, f) pairs with zero residual in {:.1?}", start.elapsed()))
}

/// Term-by-term product of two one-parameter lists, built field by field.
fn product_terms(a: &Decomposition, b: &Decomposition) -> Vec<DecompositionTerm> {
    let cat_sig =
        |x: &VectorSignature, y: &VectorSignature| VectorSignature::new(x.parts().iter().chain(y.parts()).copied());
    let mut out = Vec::new();
    for s in &a.terms {
        for t in &b.terms {
            let signs = match (&s.para.signs, &t.para.signs) {
                (SignRule::Product { parts: p }, SignRule::Product { parts: q }) => {
                    SignRule::Product { parts: p.iter().chain(q).cloned().collect() }
                }
                _ => unreachable!("one-parameter terms carry product signs"),
            };
            out.push(DecompositionTerm {
                coefficient: &s.coefficient * &t.coefficient,
                post: TensorShift::new(vec![s.post.parts[0].clone(), t.post.parts[0].clone()]),
                pre: TensorShift::new(vec![s.pre.parts[0].clone(), t.pre.parts[0].clone()]),
                para: ParaproductSpec::new(
                    cat_sig(&s.para.eps1, &t.para.eps1),
                    cat_sig(&s.para.eps2, &t.para.eps2),
                    cat_sig(&s.para.eps3, &t.para.eps3),
                    signs,
                )
                .unwrap(),
            });
        }
    }
    out.sort();
    out
}

fn outer(a: &StepFunction, b: &StepFunction) -> StepFunction {
    let g =
        GridSpec::new(vec![a.grid().dims[0], b.grid().dims[0]], vec![a.grid().depths[0], b.grid().depths[0]]).unwrap();
    let v = a.values().iter().flat_map(|x| b.values().iter().map(move |y| x * y)).collect();
    StepFunction::from_values(g, v).unwrap()
}

fn single(term: &DecompositionTerm, source: &[ShiftMap]) -> Decomposition {
    Decomposition { terms: vec![term.clone()], source: source.to_vec() }
}

fn tensor_splitting() -> Outcome {
    let pairs = [
        (ShiftMap::first_child(1), ShiftMap::rotating(1)),
        (ShiftMap::rotating(1), ShiftMap::first_child(1).with_sig(SigMap::Kill { sig: "0".into() }).unwrap()),
    ];
    let mut sizes = Vec::new();
    for (m1, m2) in pairs {
        let (d1, d2) = (decompose(std::slice::from_ref(&m1)), decompose(std::slice::from_ref(&m2)));
        let d12 = decompose(&[m1.clone(), m2.clone()]);
        check(d12.sorted_terms() == product_terms(&d1, &d2), format!("term sets differ for {m1:?} x {m2:?}"))?;
        // each product term acts factor-wise on tensor inputs
        let (g1, g2) = (GridSpec::one(1, 3).unwrap(), GridSpec::one(1, 2).unwrap());
        let (b1, f1) = (random_step_function(&g1, 1), random_step_function(&g1, 2));
        let (b2, f2) = (random_step_function(&g2, 3), random_step_function(&g2, 4));
        let (b, f) = (outer(&b1, &b2), outer(&f1, &f2));
        for (i, s) in d1.terms.iter().enumerate() {
            for (j, t) in d2.terms.iter().enumerate() {
                let left =
                    evaluate_terms(&single(&d12.terms[i * d2.terms.len() + j], &[m1.clone(), m2.clone()]), &b, &f)
                        .unwrap();
                let right = outer(
                    &evaluate_terms(&single(s, std::slice::from_ref(&m1)), &b1, &f1).unwrap(),
                    &evaluate_terms(&single(t, std::slice::from_ref(&m2)), &b2, &f2).unwrap(),
                );
                check(left == right, format!("term ({i}, {j}) does not factor"))?;
            }
        }
        sizes.push(format!("{}x{}={}", d1.terms.len(), d2.terms.len(), d12.terms.len()));
    }
    Ok(format!("term sets equal for two shift pairs ({})", sizes.join(", ")))
}

/// Every basis key `(R, e)` except the mean: per parameter either the unit
/// cube with the all-ones signature or a cube above the depth with a strict one.
fn basis_keys(g: &GridSpec) -> Vec<(DyadicRectangle, VectorSignature)> {
    let mut keys: Vec<(Vec<_>, Vec<Signature>)> = vec![(vec![], vec![])];
    for s in 0..g.params() {
        let d = g.dims[s];
        let mut opts = vec![(enumerate_cubes(d, 0)[0].clone(), Signature::ones(d))];
        for q in enumerate_cubes(d, g.depths[s] - 1) {
            for e in Signature::strict_all(d) {
                opts.push((q.clone(), e));
            }
        }
        keys = keys
            .into_iter()
            .flat_map(|(r, e)| {
                opts.iter().map(move |(q, sig)| {
                    let (mut r, mut e) = (r.clone(), e.clone());
                    r.push(q.clone());
                    e.push(*sig);
                    (r, e)
                })
            })
            .collect();
    }
    keys.into_iter()
        .filter(|(_, e)| e.iter().any(|s| s.is_strict()))
        .map(|(r, e)| (DyadicRectangle::new(r), VectorSignature::new(e)))
        .collect()
}

fn parseval_square_function() -> Outcome {
    let configs = [(vec![1], vec![4]), (vec![2], vec![2]), (vec![1, 1], vec![2, 3]), (vec![1, 2], vec![2, 1])];
    for (dims, depths) in configs {
        let g = GridSpec::new(dims, depths).unwrap();
        let keys = basis_keys(&g);
        check(keys.len() + 1 == g.total_cells(), format!("{g:?}: basis has {} keys", keys.len() + 1))?;
        let hs: Vec<StepFunction> = keys.iter().map(|(r, e)| haar_function(&g, r, e).unwrap()).collect();
        let one = StepFunction::constant(&g, Scalar::one());
        for seed in 0..200 {
            let f = random_step_function(&g, seed);
            let e = analyze(&f);
            let mean = f.inner(&one).unwrap();
            check(e.mean == mean, format!("{g:?} seed {seed}: mean"))?;
            let mut energy = mean.square();
            let mut strict = Scalar::zero();
            let mut s2 = StepFunction::zero(&g);
            for ((r, sig), h) in keys.iter().zip(&hs) {
                let c = f.inner(h).unwrap();
                check(e.get(r, sig) == c, format!("{g:?} seed {seed}: coefficient of {r:?}"))?;
                energy += &c.square();
                if sig.is_strict() {
                    strict += &c.square();
                    // h² = 1_R / |R|
                    s2.add_assign_scaled(&h.mul(h).unwrap(), &c.square()).unwrap();
                }
            }
            check(energy == f.l2_norm_sq(), format!("{g:?} seed {seed}: Parseval"))?;
            let lib_s2 = square_function_sq(&f);
            check(lib_s2 == s2, format!("{g:?} seed {seed}: pointwise S²"))?;
            check(lib_s2.inner(&one).unwrap() == strict, format!("{g:?} seed {seed}: ‖Sf‖²"))?;
        }
    }
    Ok("200 functions on each of 4 grids, exact".into())
}

fn presets(dim: usize) -> Vec<ShiftMap> {
    vec![
        ShiftMap::first_child(dim),
        ShiftMap::rotating(dim),
        ShiftMap::rotating(dim).with_sig(SigMap::Cyclic).unwrap(),
        ShiftMap::first_child(dim).with_sig(SigMap::Kill { sig: "0".repeat(dim) }).unwrap(),
    ]
}

fn shift_contraction() -> Outcome {
    let mut basis_inputs = 0;
    let mut random_inputs = 0;
    let mut grids: Vec<GridSpec> = Vec::new();
    for depth in 1..=3 {
        grids.push(GridSpec::one(1, depth).unwrap());
        grids.push(GridSpec::one(2, depth).unwrap());
    }
    grids.push(GridSpec::new(vec![1, 1], vec![3, 3]).unwrap());
    for g in &grids {
        let shifts: Vec<TensorShift> = if g.params() == 1 {
            presets(g.dims[0]).into_iter().map(|m| TensorShift::new(vec![Some(m)])).collect()
        } else {
            vec![TensorShift::new(vec![Some(ShiftMap::first_child(1)), Some(ShiftMap::rotating(1))])]
        };
        let mut inputs: Vec<StepFunction> =
            basis_keys(g).iter().map(|(r, e)| haar_function(g, r, e).unwrap()).collect();
        inputs.push(StepFunction::constant(g, Scalar::one()));
        for r in enumerate_rectangles(g) {
            inputs.push(StepFunction::indicator(g, &r).unwrap());
        }
        let n_basis = inputs.len();
        for seed in 0..100 {
            inputs.push(random_step_function(g, seed));
        }
        for q in &shifts {
            for (k, f) in inputs.iter().enumerate() {
                let qf = tensor_apply(q, f).unwrap();
                check(qf.l2_norm_sq() <= f.l2_norm_sq(), format!("{g:?} input {k}: ‖Qf‖ > ‖f‖"))?;
            }
            basis_inputs += n_basis;
            random_inputs += inputs.len() - n_basis;
        }
    }
    // ⟨Qf, g⟩ ≤ ∫ S(f) S(g), no constant
    let mut worst = f64::NEG_INFINITY;
    let g = GridSpec::one(1, 5).unwrap();
    for (k, m) in [ShiftMap::first_child(1), ShiftMap::rotating(1)].into_iter().enumerate() {
        let q = TensorShift::new(vec![Some(m)]);
        for s in 0..25u64 {
            let seed = 1000 + 100 * k as u64 + 2 * s;
            let (f, h) = (random_step_function(&g, seed), random_step_function(&g, seed + 1));
            let lhs = tensor_apply(&q, &f).unwrap().inner(&h).unwrap().to_f64();
            let (sf, sh) = (square_function(&f), square_function(&h));
            let rhs = sf.iter().zip(&sh).map(|(a, b)| a * b).sum::<f64>() / g.total_cells() as f64;
            worst = worst.max(lhs - rhs);
            check(lhs <= rhs + 1e-9, format!("duality fails: ⟨Qf,g⟩ = {lhs} > ∫S(f)S(g) = {rhs} (seed {seed})"))?;
        }
    }
    Ok(format!(
        "{basis_inputs} basis and {random_inputs} random inputs contract exactly; duality on 50 pairs (max excess {worst:.3e})"
    ))
}

fn bmo_oracle() -> Outcome {
    let start = Instant::now();
    let g = GridSpec::new(vec![1, 1], vec![2, 2]).unwrap();
    for seed in 0..50 {
        let b = random_b_on(&g, seed);
        let exact = bmo_norm(&b, BmoMode::Exact).unwrap().value_sq;
        for mode in [BmoMode::RectangleSup, BmoMode::Greedy] {
            let est = bmo_norm(&b, mode).unwrap().value_sq;
            check(est <= exact, format!("seed {seed}: {} exceeds exact", mode.name()))?;
        }
    }
    let mut single = 0;
    for g in
        [GridSpec::new(vec![1, 1], vec![2, 2]).unwrap(), GridSpec::one(1, 4).unwrap(), GridSpec::one(2, 2).unwrap()]
    {
        for (r, e) in basis_keys(&g).into_iter().filter(|(_, e)| e.is_strict()) {
            let h = haar_function(&g, &r, &e).unwrap();
            let v = bmo_norm(&h, BmoMode::Exact).unwrap().value_sq;
            check(v == Scalar::from_rational(r.volume().recip().unwrap()), format!("‖h_R‖² ≠ 1/|R| for {r:?}"))?;
            single += 1;
        }
    }
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "exact dominates both estimates on 50 seeds; {single} single Haar functions exact ({:.1?})",
        start.elapsed()
    ))
}

fn random_b_on(g: &GridSpec, seed: u64) -> StepFunction {
    use dyadic_core::random::{random_haar_function, CoeffSupport};
    random_haar_function(g, &CoeffSupport::full(g), seed)
}

fn norm_ratios() -> Outcome {
    let fx = load_fixtures();
    let opts = NormOptions::default();
    let mut worst: f64 = 0.0;
    let mut matched = 0;
    for row in &fx.single_haar {
        let b = single_haar_family(row.depth)
            .unwrap()
            .into_iter()
            .find(|(c, _)| *c == row.cube)
            .ok_or_else(|| format!("no family member {}", row.cube))?
            .1;
        let q = TensorShift::new(vec![Some(preset(&row.preset))]);
        let ratio =
            operator_norm(&b, &q, opts).map_err(|e| e.to_string())? / bmo_norm(&b, BmoMode::Greedy).unwrap().value;
        worst = worst.max((ratio - row.ratio).abs());
        check(
            (ratio - row.ratio).abs() <= 1e-8,
            format!("{} {} depth {}: {ratio} vs {}", row.preset, row.cube, row.depth, row.ratio),
        )?;
        matched += 1;
    }
    check(matched == 24, format!("fixture has {matched} family rows"))?;
    let rows = norm_ratio_experiment(&preset("first-child"), &(0..SEEDS).collect::<Vec<_>>(), &[5, 6], opts)
        .map_err(|e| e.to_string())?;
    let max_at =
        |d: u32| rows.iter().filter(|r| r.depth == d).filter_map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let (m5, m6) = (max_at(5), max_at(6));
    let f5 = fx.random_max.iter().find(|r| r.depth == 5).unwrap().ratio;
    let f6 = fx.random_max.iter().find(|r| r.depth == 6).unwrap().ratio;
    check(
        (m5 - f5).abs() <= 1e-8 && (m6 - f6).abs() <= 1e-8,
        format!("seed maxima {m5}, {m6} vs fixtures {f5}, {f6}"),
    )?;
    check(m6 <= fx.growth_envelope * f5, format!("depth-6 max {m6} outside envelope {} x {f5}", fx.growth_envelope))?;
    Ok(format!(
        "24 family ratios within {worst:.1e}; depth-6 max {m6:.6} <= {} x depth-5 max {f5:.6}",
        fx.growth_envelope
    ))
}

fn riesz_lab() -> Outcome {
    let mut worst: f64 = 0.0;
    for depth in 1..=10 {
        for seed in 0..5 {
            let f = PeriodicGridFunction::random_real(1, depth, seed).unwrap();
            let r2 = discrete_riesz(1, &discrete_riesz(1, &f).unwrap()).unwrap();
            let m = f.mean();
            let expect = PeriodicGridFunction { values: f.values.iter().map(|z| -(z - m)).collect(), ..f.clone() };
            worst = worst.max(r2.max_abs_diff(&expect));
        }
    }
    check(worst <= 1e-12, format!("R₁² off by {worst:e}"))?;
    let fx = load_fixtures().riesz_span;
    let rows = span_residual_experiment(1, 1, 4, 64, &fx.seeds).map_err(|e| e.to_string())?;
    for s in &fx.seeds {
        let seq: Vec<f64> = rows.iter().filter(|r| r.seed == *s).map(|r| r.residual).collect();
        check(seq.len() == 65 && seq[0] == 1.0, format!("seed {s}: sequence shape"))?;
        check(seq.windows(2).all(|w| w[1] <= w[0]), format!("seed {s}: residual increases"))?;
    }
    let finals: Vec<f64> = rows.iter().filter(|r| r.m == 64).map(|r| r.residual).collect();
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    check(mean <= fx.mean_residual + 1e-12, format!("mean residual {mean} above fixture {}", fx.mean_residual))?;
    Ok(format!("R₁² error {worst:.1e}; residuals non-increasing, mean at M=64 {mean:.4}"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("case table exactness", case_table),
        ("decomposition identity", decomposition_identity),
        ("tensor splitting", tensor_splitting),
        ("Parseval and square function", parseval_square_function),
        ("shift contraction and duality", shift_contraction),
        ("BMO oracle", bmo_oracle),
        ("norm-ratio regression", norm_ratios),
        ("Riesz lab", riesz_lab),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let out = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match out {
            Ok(detail) => println!("PASS {} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", k + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
