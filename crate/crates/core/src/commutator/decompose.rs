//! The iterated commutator as a finite sum of shifted paraproducts.
//!
//! One parameter, with strict `e'` (carried by `b`), `e`, `η`:
//!
//! ```text
//! [M_b, Q] f =  Σ_{e', e: σe≠0}  Q B_{e', e, e}(b, f)        signs h^{e'}_R on σ(R)
//!            −  Σ_{e', e}        Q B_{e', e, e'∘e}(b, f)
//!            +  Σ_{e', η ∈ σ(Sig)} B_{e', η, e'∘η}(b, Qf)
//!            +  Σ_{e'}           B_{e', 1, e'}(b, Qf)
//!            −  Σ_{e'}           Q B_{e', 1, e'}(b, f)
//! ```
//!
//! where `e'∘e` is the agreement signature (all-ones when `e' = e`). The
//! first two lines are the diagonal `I = I'`, the third the pairs
//! `I' = σ(I)`, the last two the pairs with `I'` strictly inside `I`
//! (including the mean of `f`). The identity is exact on the finite grid
//! with the truncated shift. Since `[[M_b, Q_1], Q_2]` factors as
//! `[M_{b_1}, Q_1] ⊗ [M_{b_2}, Q_2]` on tensors, the multi-parameter list is
//! the product of the one-parameter lists.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::commutator_apply;
use crate::dyadic::{GridSpec, Signature, VectorSignature};
use crate::error::{DyadicError, Result};
use crate::haar::{StepFunction, TensorBasis};
use crate::paraproduct::{accumulate_ext, ext_to_function, ExtCoeffs, ParamSign, ParaproductSpec, SignRule};
use crate::scalar::Scalar;
use crate::shift::{ShiftMap, TensorShift};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pattern {
    /// `Q B(b, f)`
    PostShift,
    /// `B(b, Q f)`
    PreShift,
    /// Shift after `B` in some parameters and before it in others.
    Mixed,
}

/// `coefficient · post ∘ B(b, pre f)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DecompositionTerm {
    pub coefficient: Scalar,
    pub post: TensorShift,
    pub pre: TensorShift,
    pub para: ParaproductSpec,
}

impl DecompositionTerm {
    pub fn pattern(&self) -> Pattern {
        match (self.post.is_identity(), self.pre.is_identity()) {
            (false, true) => Pattern::PostShift,
            (true, false) => Pattern::PreShift,
            _ => Pattern::Mixed,
        }
    }

    /// Factor-wise product of terms over disjoint parameter sets.
    pub fn tensor(&self, other: &DecompositionTerm) -> DecompositionTerm {
        let cat =
            |a: &VectorSignature, b: &VectorSignature| VectorSignature::new(a.parts().iter().chain(b.parts()).copied());
        let signs = match (&self.para.signs, &other.para.signs) {
            (SignRule::Product { parts: a }, SignRule::Product { parts: b }) => {
                SignRule::Product { parts: a.iter().chain(b).cloned().collect() }
            }
            _ => panic!("only product sign rules tensorize"),
        };
        let cat_shift =
            |a: &TensorShift, b: &TensorShift| TensorShift::new(a.parts.iter().chain(&b.parts).cloned().collect());
        DecompositionTerm {
            coefficient: &self.coefficient * &other.coefficient,
            post: cat_shift(&self.post, &other.post),
            pre: cat_shift(&self.pre, &other.pre),
            para: ParaproductSpec::new(
                cat(&self.para.eps1, &other.para.eps1),
                cat(&self.para.eps2, &other.para.eps2),
                cat(&self.para.eps3, &other.para.eps3),
                signs,
            )
            .expect("matching arities"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub terms: Vec<DecompositionTerm>,
    pub source: Vec<ShiftMap>,
}

impl Decomposition {
    /// Terms sorted, for structural comparison.
    pub fn sorted_terms(&self) -> Vec<DecompositionTerm> {
        let mut t = self.terms.clone();
        t.sort();
        t
    }

    pub fn count_by_pattern(&self) -> BTreeMap<Pattern, usize> {
        let mut m = BTreeMap::new();
        for t in &self.terms {
            *m.entry(t.pattern()).or_insert(0) += 1;
        }
        m
    }
}

fn one_param(sigma: &ShiftMap) -> Vec<DecompositionTerm> {
    let d = sigma.dim;
    let ones = Signature::ones(d);
    let vs = |s: Signature| VectorSignature::new([s]);
    let post = TensorShift::new(vec![Some(sigma.clone())]);
    let pre = post.clone();
    let id = TensorShift::identity(1);
    let plain = SignRule::ones(1);
    let mut out = Vec::new();
    let mut term = |coefficient: i64, post: &TensorShift, pre: &TensorShift, e: [Signature; 3], signs: SignRule| {
        out.push(DecompositionTerm {
            coefficient: Scalar::from_int(coefficient),
            post: post.clone(),
            pre: pre.clone(),
            para: ParaproductSpec::new(vs(e[0]), vs(e[1]), vs(e[2]), signs).expect("one parameter"),
        });
    };
    let strict: Vec<Signature> = Signature::strict_all(d).collect();
    for &ep in &strict {
        for &e in &strict {
            if sigma.sig_image(e).is_some() {
                let signs = SignRule::Product { parts: vec![ParamSign::ShiftedChild { sig: ep, map: sigma.clone() }] };
                term(1, &post, &id, [ep, e, e], signs);
            }
            term(-1, &post, &id, [ep, e, ep.agreement(e)], plain.clone());
        }
        for eta in sigma.sig_range() {
            term(1, &id, &pre, [ep, eta, ep.agreement(eta)], plain.clone());
        }
        term(1, &id, &pre, [ep, ones, ep], plain.clone());
        term(-1, &post, &id, [ep, ones, ep], plain.clone());
    }
    out
}

/// Term list for one shift map per parameter.
pub fn decompose(sigmas: &[ShiftMap]) -> Decomposition {
    let mut terms = vec![DecompositionTerm {
        coefficient: Scalar::one(),
        post: TensorShift::identity(0),
        pre: TensorShift::identity(0),
        para: ParaproductSpec::new(
            VectorSignature::new([]),
            VectorSignature::new([]),
            VectorSignature::new([]),
            SignRule::ones(0),
        )
        .expect("empty"),
    }];
    for sigma in sigmas {
        let factor = one_param(sigma);
        terms = terms.iter().flat_map(|a| factor.iter().map(move |b| a.tensor(b))).collect();
    }
    Decomposition { terms, source: sigmas.to_vec() }
}

/// The commutator shifts `Q_s` of a decomposition as one tensor shift.
pub fn source_shift(d: &Decomposition) -> TensorShift {
    TensorShift::new(d.source.iter().cloned().map(Some).collect())
}

/// `Σ terms(b, f)`, sharing coefficient computations between terms with the
/// same shifts.
pub fn evaluate_terms(d: &Decomposition, b: &StepFunction, f: &StepFunction) -> Result<StepFunction> {
    let grid = b.grid();
    if f.grid() != grid {
        return Err(DyadicError::GridMismatch(format!("{:?} vs {:?}", grid, f.grid())));
    }
    check_dims(d, grid)?;
    let basis = TensorBasis::new(grid);
    let ext_len: usize = basis.ext_shape().iter().product();
    let cb = ExtCoeffs::of(b);
    let mut pre_cache: BTreeMap<TensorShift, ExtCoeffs> = BTreeMap::new();
    let mut by_post: BTreeMap<TensorShift, Vec<Scalar>> = BTreeMap::new();
    for t in &d.terms {
        if !pre_cache.contains_key(&t.pre) {
            let g = t.pre.plan(grid)?.apply(f).0;
            pre_cache.insert(t.pre.clone(), ExtCoeffs::of(&g));
        }
        let cf = &pre_cache[&t.pre];
        let acc = by_post.entry(t.post.clone()).or_insert_with(|| vec![Scalar::zero(); ext_len]);
        accumulate_ext(&t.para, &cb, cf, &t.coefficient, acc);
    }
    let mut out = StepFunction::zero(grid);
    for (post, ext) in by_post {
        let g = ext_to_function(grid, &ext);
        out = out.add(&post.plan(grid)?.apply(&g).0)?;
    }
    Ok(out)
}

fn check_dims(d: &Decomposition, grid: &GridSpec) -> Result<()> {
    if d.source.len() != grid.params() {
        return Err(DyadicError::DimensionMismatch { expected: grid.params(), got: d.source.len() });
    }
    for (s, m) in d.source.iter().enumerate() {
        if m.dim != grid.dims[s] {
            return Err(DyadicError::DimensionMismatch { expected: grid.dims[s], got: m.dim });
        }
    }
    Ok(())
}

/// `C_Q(b, f) − Σ terms(b, f)`; identically zero when the decomposition is right.
pub fn verify_decomposition(d: &Decomposition, b: &StepFunction, f: &StepFunction) -> Result<StepFunction> {
    let direct = commutator_apply(b, &source_shift(d), f)?;
    direct.sub(&evaluate_terms(d, b, f)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_haar_function, random_step_function, CoeffSupport};
    use crate::shift::SigMap;

    #[test]
    fn one_parameter_list_for_dimension_one() {
        let d = decompose(&[ShiftMap::first_child(1)]);
        assert_eq!(d.terms.len(), 5);
        let counts = d.count_by_pattern();
        assert_eq!(counts[&Pattern::PostShift], 3);
        assert_eq!(counts[&Pattern::PreShift], 2);
        assert!(d.terms.iter().all(|t| t.para.is_bmo_admissible()));
        // killing the only signature removes the shifted-child term and the
        // pre-shifted diagonal term
        let k = decompose(&[ShiftMap::first_child(1).with_sig(SigMap::Kill { sig: "0".into() }).unwrap()]);
        assert_eq!(k.terms.len(), 3);
    }

    #[test]
    fn all_terms_bmo_admissible() {
        for m in [ShiftMap::rotating(2).with_sig(SigMap::Cyclic).unwrap(), ShiftMap::first_child(3)] {
            let d = decompose(&[m.clone(), ShiftMap::rotating(1)]);
            assert!(d.terms.iter().all(|t| t.para.is_bmo_admissible()));
        }
    }

    #[test]
    fn zero_inputs_give_zero_residual() {
        let g = GridSpec::one(1, 4).unwrap();
        let d = decompose(&[ShiftMap::rotating(1)]);
        let f = random_step_function(&g, 0);
        let z = StepFunction::zero(&g);
        assert!(verify_decomposition(&d, &z, &f).unwrap().is_zero());
        assert!(verify_decomposition(&d, &f, &z).unwrap().is_zero());
    }

    #[test]
    fn exact_on_full_support_inputs() {
        // no truncation horizon: every level and the means populated
        let cases = [
            (GridSpec::one(1, 4).unwrap(), vec![ShiftMap::rotating(1)]),
            (GridSpec::one(2, 2).unwrap(), vec![ShiftMap::rotating(2).with_sig(SigMap::Cyclic).unwrap()]),
            (
                GridSpec::one(2, 2).unwrap(),
                vec![ShiftMap::first_child(2).with_sig(SigMap::Kill { sig: "10".into() }).unwrap()],
            ),
            (GridSpec::new(vec![1, 1], vec![2, 3]).unwrap(), vec![ShiftMap::first_child(1), ShiftMap::rotating(1)]),
        ];
        for (g, maps) in cases {
            let d = decompose(&maps);
            for seed in 0..4 {
                let b = random_step_function(&g, seed);
                let f = random_step_function(&g, 1000 + seed);
                let r = verify_decomposition(&d, &b, &f).unwrap();
                assert!(r.is_zero(), "{g:?} {maps:?} seed {seed}");
            }
        }
    }

    #[test]
    fn dropping_a_term_breaks_the_identity() {
        let g = GridSpec::one(1, 4).unwrap();
        let full = decompose(&[ShiftMap::rotating(1)]);
        let s = CoeffSupport::full(&g);
        let b = random_haar_function(&g, &s, 1);
        let f = random_haar_function(&g, &s, 2);
        for skip in 0..full.terms.len() {
            let mut d = full.clone();
            d.terms.remove(skip);
            assert!(!verify_decomposition(&d, &b, &f).unwrap().is_zero(), "term {skip} was redundant");
        }
    }
}
