//! Closed forms for `[M_{h_{I'}^{e'}}, Q] h_I^e` in one parameter.
//!
//! Every sign is the constant value of the coarser Haar function on the finer
//! cube. A strict Haar function on a cube at or below the grid depth is read
//! as zero, which is exactly how the truncated shift behaves on the grid.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dyadic::{enumerate_cubes, DyadicCube, DyadicRectangle, GridSpec, Signature, VectorSignature};
use crate::error::{DyadicError, Result};
use crate::haar::{haar_function, haar_value_on, StepFunction};
use crate::scalar::Scalar;
use crate::shift::{apply_shift, ShiftMap, ShiftOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseLabel {
    /// `I ∩ I' = ∅`
    Disjoint,
    /// `I ⊊ I'`
    StrictlyInside,
    /// `I = I'`
    Diagonal,
    /// `I' = σ(I)`
    ShiftDiagonal,
    /// `I' ⊊ I`, `I' ∩ σ(I) = ∅`
    BelowOffShift,
    /// `I' ⊊ σ(I)`
    BelowOnShift,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 6] = [
        CaseLabel::Disjoint,
        CaseLabel::StrictlyInside,
        CaseLabel::Diagonal,
        CaseLabel::ShiftDiagonal,
        CaseLabel::BelowOffShift,
        CaseLabel::BelowOnShift,
    ];
}

/// Label of the pair (`I` carries `f`, `I'` carries `b`).
pub fn case_classify(i: &DyadicCube, i_prime: &DyadicCube, sigma: &ShiftMap) -> CaseLabel {
    if !i.intersects(i_prime) {
        return CaseLabel::Disjoint;
    }
    if i == i_prime {
        return CaseLabel::Diagonal;
    }
    if i_prime.strictly_contains(i) {
        return CaseLabel::StrictlyInside;
    }
    let s = sigma.cube_image(i);
    if *i_prime == s {
        CaseLabel::ShiftDiagonal
    } else if s.strictly_contains(i_prime) {
        CaseLabel::BelowOnShift
    } else {
        CaseLabel::BelowOffShift
    }
}

/// Which side of `b·Qf − Q(b·f)` a term comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermSource {
    /// from `b · Q f`
    MultiplyAfterShift,
    /// from `−Q(b · f)`
    ShiftAfterMultiply,
}

/// `coeff · h_cube^sig`; `sig` may be all-ones (normalized indicator).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseTerm {
    pub coeff: Scalar,
    pub cube: DyadicCube,
    pub sig: Signature,
    pub source: TermSource,
}

impl fmt::Display for CaseTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.source {
            TermSource::MultiplyAfterShift => "b*Qf",
            TermSource::ShiftAfterMultiply => "Q(b*f)",
        };
        write!(f, "{:+} h_{}^{:?} [{}]", self.coeff, self.cube, self.sig, side)
    }
}

/// One input of the case table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseInput {
    pub i: DyadicCube,
    pub eps: Signature,
    pub i_prime: DyadicCube,
    pub eps_prime: Signature,
}

fn value_on(q: &DyadicCube, sig: Signature, inner: &DyadicCube) -> Scalar {
    haar_value_on(q, sig, inner).expect("inner cube lies inside")
}

/// Terms of `[M_{h_{I'}^{e'}}, Q] h_I^e`.
pub fn case_terms(input: &CaseInput, sigma: &ShiftMap) -> Vec<CaseTerm> {
    let CaseInput { i, eps, i_prime, eps_prime } = input;
    let (eps, eps_prime) = (*eps, *eps_prime);
    let mut out = Vec::new();
    let mut push = |coeff: Scalar, cube: DyadicCube, sig: Option<Signature>, source| {
        if let Some(sig) = sig {
            if !coeff.is_zero() {
                out.push(CaseTerm { coeff, cube, sig, source });
            }
        }
    };
    let s_i = sigma.cube_image(i);
    match case_classify(i, i_prime, sigma) {
        CaseLabel::Disjoint | CaseLabel::StrictlyInside => {}
        CaseLabel::Diagonal => {
            // h^{e'}_I on σ(I) times Q h^e_I
            push(value_on(i, eps_prime, &s_i), s_i.clone(), sigma.sig_image(eps), TermSource::MultiplyAfterShift);
            // h^{e'}_I h^e_I = |I|^{-1/2} h^{agree}_I
            let agree = eps.agreement(eps_prime);
            let scale = -i.inv_sqrt_volume();
            if agree.is_strict() {
                push(scale, s_i, sigma.sig_image(agree), TermSource::ShiftAfterMultiply);
            } else {
                // h^1_I = |I|^{1/2} Σ_{J ⊋ I} Σ_e h^e_J|_I h^e_J + mean, then Q
                let root = i.inv_sqrt_volume().recip().expect("nonzero");
                for k in 0..i.level() {
                    let j = i.ancestor(k);
                    let s_j = sigma.cube_image(&j);
                    for e in Signature::strict_all(i.dim()) {
                        let c = &(&scale * &root) * &value_on(&j, e, i);
                        push(c, s_j.clone(), sigma.sig_image(e), TermSource::ShiftAfterMultiply);
                    }
                }
            }
        }
        CaseLabel::ShiftDiagonal => {
            // h^{e'}_{σI} h^{σe}_{σI} = |σI|^{-1/2} h^{agree}_{σI}
            if let Some(se) = sigma.sig_image(eps) {
                push(s_i.inv_sqrt_volume(), s_i.clone(), Some(eps_prime.agreement(se)), TermSource::MultiplyAfterShift);
            }
            let c = value_on(i, eps, &s_i);
            push(-c, sigma.cube_image(&s_i), sigma.sig_image(eps_prime), TermSource::ShiftAfterMultiply);
        }
        CaseLabel::BelowOffShift => {
            let c = value_on(i, eps, i_prime);
            push(-c, sigma.cube_image(i_prime), sigma.sig_image(eps_prime), TermSource::ShiftAfterMultiply);
        }
        CaseLabel::BelowOnShift => {
            if let Some(se) = sigma.sig_image(eps) {
                push(value_on(&s_i, se, i_prime), i_prime.clone(), Some(eps_prime), TermSource::MultiplyAfterShift);
            }
            let c = value_on(i, eps, i_prime);
            push(-c, sigma.cube_image(i_prime), sigma.sig_image(eps_prime), TermSource::ShiftAfterMultiply);
        }
    }
    out
}

/// `h_cube^sig` on a one-parameter grid, zero when a strict signature sits
/// at or below the grid depth.
fn term_function(grid: &GridSpec, t: &CaseTerm) -> Result<StepFunction> {
    if t.sig.is_strict() && t.cube.level() >= grid.depths[0] {
        return Ok(StepFunction::zero(grid));
    }
    let r = DyadicRectangle::new([t.cube.clone()]);
    Ok(haar_function(grid, &r, &VectorSignature::new([t.sig]))?.scale(&t.coeff))
}

pub fn sum_terms(grid: &GridSpec, terms: &[CaseTerm]) -> Result<StepFunction> {
    let mut out = StepFunction::zero(grid);
    for t in terms {
        out = out.add(&term_function(grid, t)?)?;
    }
    Ok(out)
}

fn check_input(grid: &GridSpec, input: &CaseInput, sigma: &ShiftMap) -> Result<()> {
    if grid.params() != 1 || grid.dims[0] != sigma.dim {
        return Err(DyadicError::GridMismatch(format!(
            "case table needs a one-parameter grid of dimension {}",
            sigma.dim
        )));
    }
    for (q, e) in [(&input.i, input.eps), (&input.i_prime, input.eps_prime)] {
        if q.dim() != sigma.dim || e.dim() != sigma.dim {
            return Err(DyadicError::DimensionMismatch { expected: sigma.dim, got: q.dim() });
        }
        if !e.is_strict() {
            return Err(DyadicError::InvalidArgument("case table signatures must be strict".into()));
        }
        if q.level() >= grid.depths[0] {
            return Err(DyadicError::Unresolvable(format!("h_{q}^{e:?} at grid depth {}", grid.depths[0])));
        }
    }
    Ok(())
}

/// `[M_{h_{I'}^{e'}}, Q] h_I^e` from the closed forms.
pub fn case_evaluate(grid: &GridSpec, input: &CaseInput, sigma: &ShiftMap) -> Result<StepFunction> {
    check_input(grid, input, sigma)?;
    sum_terms(grid, &case_terms(input, sigma))
}

/// The same operator expanded pointwise with the generic shift.
pub fn case_direct(grid: &GridSpec, input: &CaseInput, sigma: &ShiftMap) -> Result<StepFunction> {
    check_input(grid, input, sigma)?;
    let q = ShiftOperator::new(sigma.clone(), grid.depths[0]);
    let b =
        haar_function(grid, &DyadicRectangle::new([input.i_prime.clone()]), &VectorSignature::new([input.eps_prime]))?;
    let f = haar_function(grid, &DyadicRectangle::new([input.i.clone()]), &VectorSignature::new([input.eps]))?;
    b.mul(&apply_shift(&q, &f)?)?.sub(&apply_shift(&q, &b.mul(&f)?)?)
}

/// A case-table mismatch with both sides spelled out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseMismatch {
    pub label: CaseLabel,
    pub i: String,
    pub eps: String,
    pub i_prime: String,
    pub eps_prime: String,
    pub terms: Vec<String>,
    pub closed_form: Vec<String>,
    pub direct: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub pairs: usize,
    pub per_label: Vec<(CaseLabel, usize)>,
    pub mismatches: Vec<CaseMismatch>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compare `terms` (the closed form under test) against direct expansion for
/// every pair of cubes above the grid depth and every signature pair.
pub fn verify_case_table<F>(grid: &GridSpec, sigma: &ShiftMap, terms: F) -> Result<CaseReport>
where
    F: Fn(&CaseInput, &ShiftMap) -> Vec<CaseTerm> + Sync,
{
    use rayon::prelude::*;
    if grid.params() != 1 {
        return Err(DyadicError::GridMismatch("case table needs a one-parameter grid".into()));
    }
    let (d, n) = (grid.dims[0], grid.depths[0]);
    let cubes: Vec<DyadicCube> = if n == 0 { Vec::new() } else { enumerate_cubes(d, n - 1) };
    let sigs: Vec<Signature> = Signature::strict_all(d).collect();
    let mut inputs = Vec::new();
    for i in &cubes {
        for ip in &cubes {
            for &e in &sigs {
                for &ep in &sigs {
                    inputs.push(CaseInput { i: i.clone(), eps: e, i_prime: ip.clone(), eps_prime: ep });
                }
            }
        }
    }
    let results: Vec<(CaseLabel, Option<CaseMismatch>)> = inputs
        .par_iter()
        .map(|input| {
            let label = case_classify(&input.i, &input.i_prime, sigma);
            let ts = terms(input, sigma);
            let closed = sum_terms(grid, &ts)?;
            let direct = case_direct(grid, input, sigma)?;
            let mismatch = (closed != direct).then(|| CaseMismatch {
                label,
                i: input.i.to_string(),
                eps: format!("{:?}", input.eps),
                i_prime: input.i_prime.to_string(),
                eps_prime: format!("{:?}", input.eps_prime),
                terms: ts.iter().map(ToString::to_string).collect(),
                closed_form: closed.values().iter().map(ToString::to_string).collect(),
                direct: direct.values().iter().map(ToString::to_string).collect(),
            });
            Ok((label, mismatch))
        })
        .collect::<Result<_>>()?;
    let per_label = CaseLabel::ALL.iter().map(|l| (*l, results.iter().filter(|(x, _)| x == l).count())).collect();
    Ok(CaseReport { pairs: results.len(), per_label, mismatches: results.into_iter().filter_map(|(_, m)| m).collect() })
}
