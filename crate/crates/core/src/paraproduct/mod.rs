//! Paraproducts
//! `B(f1, f2) = Σ_R s_R <f1, h_R^{e1}> <f2, h_R^{e2}> h_R^{e3} / sqrt|R|`
//! with extended signatures, and the product BMO estimators.

mod bmo;
mod bound;

use serde::{Deserialize, Serialize};

pub use bmo::{bmo_norm, carleson_weights, BmoEstimate, BmoMode, EXACT_CELL_CAP};
pub use bound::{depth_label, empirical_paraproduct_bound, BoundReport, BoundRow};

use crate::dyadic::{DyadicCube, DyadicRectangle, GridSpec, Signature, VectorSignature};
use crate::error::{DyadicError, Result};
use crate::haar::{StepFunction, TensorBasis};
use crate::scalar::Scalar;
use crate::shift::{format_signature, parse_signature, ShiftMap};

/// Sign factor of one parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ParamSign {
    One,
    /// Value of `h^sig_Q` on the child `σ(Q)`, up to normalization.
    ShiftedChild {
        #[serde(with = "sig_string")]
        sig: Signature,
        map: ShiftMap,
    },
}

mod sig_string {
    use super::*;

    pub fn serialize<S: serde::Serializer>(s: &Signature, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&format_signature(*s))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Signature, D::Error> {
        let s = String::deserialize(d)?;
        parse_signature(s.len(), &s).map_err(serde::de::Error::custom)
    }
}

/// The rule `R ↦ s_R ∈ {−1, +1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignRule {
    /// Product of per-parameter factors.
    Product { parts: Vec<ParamSign> },
    /// Independent pseudo-random signs, a fixed function of the seed and `R`.
    Random { seed: u64 },
}

impl SignRule {
    pub fn ones(t: usize) -> Self {
        SignRule::Product { parts: vec![ParamSign::One; t] }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, SignRule::Product { parts } if parts.iter().all(|p| *p == ParamSign::One))
    }

    pub fn sign(&self, r: &DyadicRectangle) -> i32 {
        match self {
            SignRule::Product { parts } => parts
                .iter()
                .zip(r.factors())
                .map(|(p, q)| match p {
                    ParamSign::One => 1,
                    ParamSign::ShiftedChild { sig, map } => sig.child_sign(map.child_index(q)),
                })
                .product(),
            SignRule::Random { seed } => {
                let mut h = *seed ^ 0x9e37_79b9_7f4a_7c15;
                for q in r.factors() {
                    h = mix(h ^ q.level() as u64);
                    for &p in q.pos() {
                        h = mix(h ^ p as u64);
                    }
                }
                if h & 1 == 0 {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `B` with signatures `(e1, e2, e3)`; parts may be the all-ones signature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "ParaproductJson", into = "ParaproductJson")]
pub struct ParaproductSpec {
    pub eps1: VectorSignature,
    pub eps2: VectorSignature,
    pub eps3: VectorSignature,
    pub signs: SignRule,
}

/// JSON layout: signatures as per-parameter bit strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParaproductJson {
    pub eps1: Vec<String>,
    pub eps2: Vec<String>,
    pub eps3: Vec<String>,
    #[serde(default)]
    pub signs: Option<SignRule>,
}

impl TryFrom<ParaproductJson> for ParaproductSpec {
    type Error = DyadicError;
    fn try_from(j: ParaproductJson) -> Result<Self> {
        let parse = |v: &[String]| -> Result<VectorSignature> {
            Ok(VectorSignature::new(v.iter().map(|s| parse_signature(s.len(), s)).collect::<Result<Vec<_>>>()?))
        };
        let (eps1, eps2, eps3) = (parse(&j.eps1)?, parse(&j.eps2)?, parse(&j.eps3)?);
        let signs = j.signs.unwrap_or_else(|| SignRule::ones(eps1.parts().len()));
        ParaproductSpec::new(eps1, eps2, eps3, signs)
    }
}

impl From<ParaproductSpec> for ParaproductJson {
    fn from(p: ParaproductSpec) -> Self {
        let fmt = |v: &VectorSignature| v.parts().iter().map(|s| format_signature(*s)).collect();
        ParaproductJson { eps1: fmt(&p.eps1), eps2: fmt(&p.eps2), eps3: fmt(&p.eps3), signs: Some(p.signs) }
    }
}

impl ParaproductSpec {
    pub fn new(eps1: VectorSignature, eps2: VectorSignature, eps3: VectorSignature, signs: SignRule) -> Result<Self> {
        let t = eps1.parts().len();
        for e in [&eps2, &eps3] {
            if e.parts().len() != t {
                return Err(DyadicError::DimensionMismatch { expected: t, got: e.parts().len() });
            }
        }
        for s in 0..t {
            let d = eps1.parts()[s].dim();
            for e in [&eps2, &eps3] {
                if e.parts()[s].dim() != d {
                    return Err(DyadicError::DimensionMismatch { expected: d, got: e.parts()[s].dim() });
                }
            }
        }
        if let SignRule::Product { parts } = &signs {
            if parts.len() != t {
                return Err(DyadicError::DimensionMismatch { expected: t, got: parts.len() });
            }
        }
        Ok(ParaproductSpec { eps1, eps2, eps3, signs })
    }

    pub fn with_ones(eps1: VectorSignature, eps2: VectorSignature, eps3: VectorSignature) -> Result<Self> {
        let t = eps1.parts().len();
        ParaproductSpec::new(eps1, eps2, eps3, SignRule::ones(t))
    }

    pub fn params(&self) -> usize {
        self.eps1.parts().len()
    }

    fn slots(&self, s: usize) -> [Signature; 3] {
        [self.eps1.parts()[s], self.eps2.parts()[s], self.eps3.parts()[s]]
    }

    /// At most one all-ones signature among `(e1, e2, e3)` in each parameter.
    pub fn is_admissible(&self) -> bool {
        (0..self.params()).all(|s| self.slots(s).iter().filter(|e| !e.is_strict()).count() <= 1)
    }

    /// Admissible with `e1` strict in every parameter.
    pub fn is_bmo_admissible(&self) -> bool {
        self.is_admissible() && self.eps1.is_strict()
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.params() != grid.params() {
            return Err(DyadicError::DimensionMismatch { expected: grid.params(), got: self.params() });
        }
        for s in 0..grid.params() {
            if self.eps1.parts()[s].dim() != grid.dims[s] {
                return Err(DyadicError::DimensionMismatch { expected: grid.dims[s], got: self.eps1.parts()[s].dim() });
            }
        }
        Ok(())
    }

    /// Deepest level summed in parameter `s`: `N - 1` if any slot is strict
    /// (a strict Haar function needs one more level), else `N`.
    pub fn max_level(&self, s: usize, depth: u32) -> u32 {
        if self.slots(s).iter().any(|e| e.is_strict()) {
            depth.saturating_sub(1)
        } else {
            depth
        }
    }
}

/// Extended coefficients of a function, reusable across many paraproducts.
#[derive(Clone, Debug)]
pub struct ExtCoeffs {
    pub grid: GridSpec,
    pub data: Vec<Scalar>,
}

impl ExtCoeffs {
    pub fn of(f: &StepFunction) -> Self {
        let basis = TensorBasis::new(f.grid());
        ExtCoeffs { grid: f.grid().clone(), data: basis.ext_analyze(f.values()) }
    }
}

/// Per parameter: (level, linear position) of every cube summed over.
fn cube_lists(spec: &ParaproductSpec, grid: &GridSpec) -> Vec<Vec<(u32, usize)>> {
    (0..grid.params())
        .map(|s| {
            let top = spec.max_level(s, grid.depths[s]);
            (0..=top).flat_map(|k| (0..1usize << (k as usize * grid.dims[s])).map(move |p| (k, p))).collect()
        })
        .collect()
}

/// `B(f1, f2)` as extended coefficients on the `e3` slots, added into `out`
/// with the factor `coeff`.
pub fn accumulate_ext(spec: &ParaproductSpec, c1: &ExtCoeffs, c2: &ExtCoeffs, coeff: &Scalar, out: &mut [Scalar]) {
    let grid = &c1.grid;
    let basis = TensorBasis::new(grid);
    let shape = basis.ext_shape();
    let lists = cube_lists(spec, grid);
    let t = grid.params();
    let bits = |v: &VectorSignature, s: usize| v.parts()[s].bits();
    let mut idx = vec![0usize; t];
    loop {
        let mut j = [0usize; 3];
        for s in 0..t {
            let (k, p) = lists[s][idx[s]];
            let pb = &basis.params[s];
            j[0] = j[0] * shape[s] + pb.ext_index(k, p, bits(&spec.eps1, s));
            j[1] = j[1] * shape[s] + pb.ext_index(k, p, bits(&spec.eps2, s));
            j[2] = j[2] * shape[s] + pb.ext_index(k, p, bits(&spec.eps3, s));
        }
        let a = &c1.data[j[0]];
        let b = &c2.data[j[1]];
        if !a.is_zero() && !b.is_zero() {
            let mut w = a * b;
            for s in 0..t {
                let (k, _) = lists[s][idx[s]];
                w = &w * basis.params[s].inv_sqrt(k);
            }
            if !spec.signs.is_trivial() {
                let r = DyadicRectangle::new(
                    (0..t).map(|s| DyadicCube::from_linear(grid.dims[s], lists[s][idx[s]].0, lists[s][idx[s]].1)),
                );
                if spec.signs.sign(&r) < 0 {
                    w = -w;
                }
            }
            out[j[2]] += &(&w * coeff);
        }
        // odometer, last parameter fastest
        let mut s = t;
        loop {
            if s == 0 {
                return;
            }
            s -= 1;
            idx[s] += 1;
            if idx[s] < lists[s].len() {
                break;
            }
            idx[s] = 0;
        }
    }
}

/// Extended coefficient vector to cell values.
pub fn ext_to_function(grid: &GridSpec, ext: &[Scalar]) -> StepFunction {
    let basis = TensorBasis::new(grid);
    StepFunction::from_values(grid.clone(), basis.ext_synthesize(ext)).expect("grid checked")
}

/// `B(f1, f2)`, exact.
pub fn apply_paraproduct(spec: &ParaproductSpec, f1: &StepFunction, f2: &StepFunction) -> Result<StepFunction> {
    if f1.grid() != f2.grid() {
        return Err(DyadicError::GridMismatch(format!("{:?} vs {:?}", f1.grid(), f2.grid())));
    }
    spec.check_grid(f1.grid())?;
    let (c1, c2) = (ExtCoeffs::of(f1), ExtCoeffs::of(f2));
    let basis = TensorBasis::new(f1.grid());
    let mut out = vec![Scalar::zero(); basis.ext_shape().iter().product()];
    accumulate_ext(spec, &c1, &c2, &Scalar::one(), &mut out);
    Ok(ext_to_function(f1.grid(), &out))
}
