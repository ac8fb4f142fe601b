//! Dyadic shifts `Q h_I^e = h_{σ(I)}^{σ(e)}`, their tensor products and
//! their matrices in the Haar basis.
//!
//! `σ(I)` is always a child of `I`. A coefficient whose image cube falls
//! below the grid depth is dropped and counted as truncated.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicCube, GridSpec, Signature};
use crate::error::{DyadicError, Result};
use crate::haar::{ParamBasis, Slot, StepFunction, TensorBasis};
use crate::linalg::{assemble, ScalarMatrix};
use crate::scalar::Scalar;

/// Default cap on the total basis size for dense matrices.
pub const DEFAULT_MATRIX_CAP: usize = 4096;

/// Rule choosing which child of `I` is `σ(I)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CubeMap {
    /// Child 0, the lexicographically least.
    FirstChild,
    /// Child index = linear position of `I` mod `2^d`.
    Rotating,
    /// Lookup by cube, then by level, then `default`.
    Table {
        default: usize,
        #[serde(default)]
        levels: Vec<LevelRule>,
        #[serde(default)]
        cubes: Vec<CubeRule>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRule {
    pub level: u32,
    pub child: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeRule {
    pub level: u32,
    pub pos: Vec<u32>,
    pub child: usize,
}

/// Rule for `σ` on strict signatures. Signatures are written as bit strings,
/// bit `j` first (`"01"` has bit 0 = 0, bit 1 = 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SigMap {
    Identity,
    /// Strict signatures in bit order, each sent to the next one cyclically.
    Cyclic,
    /// Identity except that `sig` goes to zero.
    Kill {
        sig: String,
    },
    /// Total table; `null` means zero.
    Table {
        entries: BTreeMap<String, Option<String>>,
    },
}

pub fn parse_signature(dim: usize, s: &str) -> Result<Signature> {
    if s.len() != dim {
        return Err(DyadicError::InvalidArgument(format!("signature {s:?} should have {dim} bits")));
    }
    let bits: Vec<u8> = s
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(DyadicError::InvalidArgument(format!("bad signature {s:?}"))),
        })
        .collect::<Result<_>>()?;
    Signature::from_bits(&bits)
}

pub fn format_signature(s: Signature) -> String {
    (0..s.dim()).map(|j| if s.bit(j) == 1 { '1' } else { '0' }).collect()
}

/// The pair of maps `σ` on cubes and on signatures for one dimension `d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "ShiftMapJson", into = "ShiftMapJson")]
pub struct ShiftMap {
    pub dim: usize,
    pub cube: CubeMap,
    pub sig: SigMap,
    /// Resolved signature table, indexed by strict bits.
    sig_table: Vec<Option<Signature>>,
}

/// JSON layout of a [`ShiftMap`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftMapJson {
    pub dim: usize,
    pub cube: CubeMap,
    pub sig: SigMap,
}

impl TryFrom<ShiftMapJson> for ShiftMap {
    type Error = DyadicError;
    fn try_from(j: ShiftMapJson) -> Result<Self> {
        ShiftMap::new(j.dim, j.cube, j.sig)
    }
}

impl From<ShiftMap> for ShiftMapJson {
    fn from(m: ShiftMap) -> Self {
        ShiftMapJson { dim: m.dim, cube: m.cube, sig: m.sig }
    }
}

impl ShiftMap {
    pub fn new(dim: usize, cube: CubeMap, sig: SigMap) -> Result<Self> {
        if !(1..=7).contains(&dim) {
            return Err(DyadicError::InvalidArgument(format!("dimension {dim} out of range")));
        }
        let n_children = 1usize << dim;
        let check_child = |c: usize| {
            if c < n_children {
                Ok(())
            } else {
                Err(DyadicError::InvalidArgument(format!("child index {c} >= 2^{dim}")))
            }
        };
        if let CubeMap::Table { default, levels, cubes } = &cube {
            check_child(*default)?;
            for r in levels {
                check_child(r.child)?;
            }
            for r in cubes {
                check_child(r.child)?;
                if r.pos.len() != dim {
                    return Err(DyadicError::DimensionMismatch { expected: dim, got: r.pos.len() });
                }
                DyadicCube::new(r.level, &r.pos)?;
            }
        }
        let strict: Vec<Signature> = Signature::strict_all(dim).collect();
        let sig_table = match &sig {
            SigMap::Identity => strict.iter().map(|&s| Some(s)).collect(),
            SigMap::Cyclic => {
                let m = strict.len();
                (0..m).map(|b| Some(strict[(b + 1) % m])).collect()
            }
            SigMap::Kill { sig } => {
                let k = parse_signature(dim, sig)?;
                if !k.is_strict() {
                    return Err(DyadicError::InvalidArgument("the all-ones signature is not strict".into()));
                }
                strict.iter().map(|&s| (s != k).then_some(s)).collect()
            }
            SigMap::Table { entries } => {
                let mut t = vec![None; strict.len()];
                let mut seen = vec![false; strict.len()];
                for (k, v) in entries {
                    let from = parse_signature(dim, k)?;
                    if !from.is_strict() {
                        return Err(DyadicError::InvalidArgument(format!("{k} is not strict")));
                    }
                    let to = match v {
                        Some(v) => {
                            let s = parse_signature(dim, v)?;
                            if !s.is_strict() {
                                return Err(DyadicError::InvalidArgument(format!("{v} is not strict")));
                            }
                            Some(s)
                        }
                        None => None,
                    };
                    t[from.bits() as usize] = to;
                    seen[from.bits() as usize] = true;
                }
                if let Some(b) = seen.iter().position(|s| !s) {
                    return Err(DyadicError::InvalidArgument(format!(
                        "signature table misses {}",
                        format_signature(strict[b])
                    )));
                }
                t
            }
        };
        Ok(ShiftMap { dim, cube, sig, sig_table })
    }

    pub fn first_child(dim: usize) -> Self {
        ShiftMap::new(dim, CubeMap::FirstChild, SigMap::Identity).expect("valid preset")
    }

    pub fn rotating(dim: usize) -> Self {
        ShiftMap::new(dim, CubeMap::Rotating, SigMap::Identity).expect("valid preset")
    }

    pub fn with_sig(self, sig: SigMap) -> Result<Self> {
        ShiftMap::new(self.dim, self.cube, sig)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| DyadicError::InvalidArgument(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Index of the child `σ(I)` inside `I`.
    pub fn child_index(&self, i: &DyadicCube) -> usize {
        match &self.cube {
            CubeMap::FirstChild => 0,
            CubeMap::Rotating => i.linear() & ((1usize << self.dim) - 1),
            CubeMap::Table { default, levels, cubes } => cubes
                .iter()
                .find(|r| r.level == i.level() && r.pos == i.pos())
                .map(|r| r.child)
                .or_else(|| levels.iter().find(|r| r.level == i.level()).map(|r| r.child))
                .unwrap_or(*default),
        }
    }

    pub fn cube_image(&self, i: &DyadicCube) -> DyadicCube {
        i.child(self.child_index(i))
    }

    /// `σ(e)`, or `None` for zero.
    pub fn sig_image(&self, e: Signature) -> Option<Signature> {
        debug_assert!(e.is_strict());
        self.sig_table[e.bits() as usize]
    }

    /// Strict signatures in the image of `σ`.
    pub fn sig_range(&self) -> Vec<Signature> {
        let mut v: Vec<Signature> = self.sig_table.iter().flatten().copied().collect();
        v.sort();
        v.dedup();
        v
    }

    /// Image of every standard index of one parameter's basis.
    pub fn index_map(&self, pb: &ParamBasis) -> Vec<Target> {
        (0..pb.size())
            .map(|i| match pb.slot(i) {
                Slot::Mean => Target::Zero,
                Slot::Haar { cube, sig } => match self.sig_image(sig) {
                    None => Target::Zero,
                    Some(s2) => {
                        if cube.level() + 1 >= pb.depth {
                            Target::Truncated
                        } else {
                            Target::Index(pb.std_index(cube.level() + 1, self.cube_image(&cube).linear(), s2.bits()))
                        }
                    }
                },
            })
            .collect()
    }
}

/// Where a basis element goes under a shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Index(usize),
    Zero,
    /// Image cube finer than the grid can resolve.
    Truncated,
}

/// A one-parameter shift bound to a grid depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftOperator {
    pub map: ShiftMap,
    pub depth: u32,
}

impl ShiftOperator {
    pub fn new(map: ShiftMap, depth: u32) -> Self {
        ShiftOperator { map, depth }
    }

    pub fn dim(&self) -> usize {
        self.map.dim
    }
}

/// Factor-wise shift; `None` is the identity in that parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TensorShift {
    pub parts: Vec<Option<ShiftMap>>,
}

impl TensorShift {
    pub fn new(parts: Vec<Option<ShiftMap>>) -> Self {
        TensorShift { parts }
    }

    pub fn identity(t: usize) -> Self {
        TensorShift { parts: vec![None; t] }
    }

    /// `Q` in parameter `s`, identity elsewhere.
    pub fn single(t: usize, s: usize, map: ShiftMap) -> Self {
        let mut parts = vec![None; t];
        parts[s] = Some(map);
        TensorShift { parts }
    }

    pub fn is_identity(&self) -> bool {
        self.parts.iter().all(Option::is_none)
    }

    fn check(&self, grid: &GridSpec) -> Result<()> {
        if self.parts.len() != grid.params() {
            return Err(DyadicError::DimensionMismatch { expected: grid.params(), got: self.parts.len() });
        }
        for (s, p) in self.parts.iter().enumerate() {
            if let Some(m) = p {
                if m.dim != grid.dims[s] {
                    return Err(DyadicError::DimensionMismatch { expected: grid.dims[s], got: m.dim });
                }
            }
        }
        Ok(())
    }

    /// Precomputed per-parameter index maps for a grid.
    pub fn plan(&self, grid: &GridSpec) -> Result<ShiftPlan> {
        self.check(grid)?;
        let basis = TensorBasis::new(grid);
        let maps = self.parts.iter().zip(&basis.params).map(|(p, pb)| p.as_ref().map(|m| m.index_map(pb))).collect();
        Ok(ShiftPlan { shape: basis.shape(), basis, maps })
    }
}

/// A tensor shift resolved against a grid's basis.
#[derive(Clone, Debug)]
pub struct ShiftPlan {
    pub basis: TensorBasis,
    shape: Vec<usize>,
    maps: Vec<Option<Vec<Target>>>,
}

/// Result of applying a shift to a dense coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftOutput {
    pub coeffs: Vec<Scalar>,
    /// Nonzero coefficients dropped because their image fell below the grid.
    pub truncated: usize,
}

impl ShiftPlan {
    fn target(&self, index: usize) -> Target {
        let mut parts = self.basis.split(index, &self.shape);
        let mut truncated = false;
        for (p, m) in parts.iter_mut().zip(&self.maps) {
            if let Some(m) = m {
                match m[*p] {
                    Target::Index(j) => *p = j,
                    Target::Zero => return Target::Zero,
                    Target::Truncated => truncated = true,
                }
            }
        }
        if truncated {
            Target::Truncated
        } else {
            Target::Index(TensorBasis::join(&parts, &self.shape))
        }
    }

    pub fn apply_dense(&self, coeffs: &[Scalar]) -> ShiftOutput {
        let mut out = vec![Scalar::zero(); coeffs.len()];
        let mut truncated = 0;
        for (i, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            match self.target(i) {
                Target::Index(j) => out[j] += c,
                Target::Zero => {}
                Target::Truncated => truncated += 1,
            }
        }
        ShiftOutput { coeffs: out, truncated }
    }

    /// `Q*`: `(Q* g)_i = g_{target(i)}`.
    pub fn adjoint_dense(&self, coeffs: &[Scalar]) -> Vec<Scalar> {
        (0..coeffs.len())
            .map(|i| match self.target(i) {
                Target::Index(j) => coeffs[j].clone(),
                _ => Scalar::zero(),
            })
            .collect()
    }

    pub fn apply(&self, f: &StepFunction) -> (StepFunction, usize) {
        let out = self.apply_dense(&self.basis.analyze(f.values()));
        let values = self.basis.synthesize(&out.coeffs);
        (StepFunction::from_values(f.grid().clone(), values).expect("same grid"), out.truncated)
    }

    pub fn adjoint(&self, f: &StepFunction) -> StepFunction {
        let out = self.adjoint_dense(&self.basis.analyze(f.values()));
        StepFunction::from_values(f.grid().clone(), self.basis.synthesize(&out)).expect("same grid")
    }
}

/// `Q f` for a one-parameter grid matching `q`.
pub fn apply_shift(q: &ShiftOperator, f: &StepFunction) -> Result<StepFunction> {
    apply_shift_counted(q, f).map(|(g, _)| g)
}

/// As [`apply_shift`], also returning the number of truncated coefficients.
pub fn apply_shift_counted(q: &ShiftOperator, f: &StepFunction) -> Result<(StepFunction, usize)> {
    let g = f.grid();
    if g.params() != 1 {
        return Err(DyadicError::DimensionMismatch { expected: 1, got: g.params() });
    }
    if g.depths[0] != q.depth {
        return Err(DyadicError::GridMismatch(format!("shift depth {} vs grid depth {}", q.depth, g.depths[0])));
    }
    let plan = TensorShift::new(vec![Some(q.map.clone())]).plan(g)?;
    Ok(plan.apply(f))
}

pub fn tensor_apply(q: &TensorShift, f: &StepFunction) -> Result<StepFunction> {
    Ok(q.plan(f.grid())?.apply(f).0)
}

/// Dense matrix of `q` in the standard tensor Haar basis (column `j` is the
/// image of basis element `j`).
pub fn matrix_in_haar_basis(q: &TensorShift, grid: &GridSpec, cap: usize) -> Result<ScalarMatrix> {
    let n = grid.total_cells();
    if n > cap {
        return Err(DyadicError::CapExceeded { what: "basis size", size: n, cap });
    }
    let plan = q.plan(grid)?;
    assemble(n, n, cap, |j| {
        let mut e = vec![Scalar::zero(); n];
        e[j] = Scalar::one();
        plan.apply_dense(&e).coeffs
    })
}
