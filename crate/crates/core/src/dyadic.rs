//! Dyadic geometry on the unit domain `[0,1)^d`: cubes, rectangles, grids and
//! signatures.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{DyadicError, Result};
use crate::haar::StepFunction;
use crate::scalar::{Rational, Scalar};

/// Levels beyond this would overflow the `u32` cube positions.
pub const MAX_LEVEL: u32 = 30;

/// A point of `{0,1}^d`. Bit `j` is the choice for coordinate `j`:
/// `0` is the mean-zero Haar factor, `1` the normalized indicator.
///
/// The all-ones signature is only meaningful in extended contexts
/// (paraproduct slots, partial means); [`Signature::is_strict`] excludes it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signature {
    dim: u8,
    bits: u8,
}

impl Signature {
    pub fn new(dim: usize, bits: u8) -> Result<Self> {
        if dim == 0 || dim > 7 {
            return Err(DyadicError::InvalidArgument(format!("signature dimension {dim} out of range 1..=7")));
        }
        if (bits as usize) >> dim != 0 {
            return Err(DyadicError::InvalidArgument(format!("signature bits {bits:#b} exceed dimension {dim}")));
        }
        Ok(Signature { dim: dim as u8, bits })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut b = 0u8;
        for (j, &x) in bits.iter().enumerate() {
            match x {
                0 => {}
                1 => b |= 1 << j,
                _ => return Err(DyadicError::InvalidArgument(format!("signature entry {x} not in {{0,1}}"))),
            }
        }
        Signature::new(bits.len(), b)
    }

    /// The all-ones signature, the normalized indicator.
    pub fn ones(dim: usize) -> Self {
        Signature { dim: dim as u8, bits: ((1u16 << dim) - 1) as u8 }
    }

    pub fn zeros(dim: usize) -> Self {
        Signature { dim: dim as u8, bits: 0 }
    }

    pub fn dim(self) -> usize {
        self.dim as usize
    }

    pub fn bits(self) -> u8 {
        self.bits
    }

    pub fn bit(self, j: usize) -> u8 {
        (self.bits >> j) & 1
    }

    pub fn is_strict(self) -> bool {
        self != Signature::ones(self.dim())
    }

    /// Coordinatewise agreement: the signature of the product of two Haar
    /// functions on the same cube.
    pub fn agreement(self, other: Signature) -> Signature {
        let mask = Signature::ones(self.dim()).bits;
        Signature { dim: self.dim, bits: !(self.bits ^ other.bits) & mask }
    }

    /// All strict signatures in increasing bit order.
    pub fn strict_all(dim: usize) -> impl Iterator<Item = Signature> {
        let top = (1u16 << dim) - 1;
        (0..top).map(move |b| Signature { dim: dim as u8, bits: b as u8 })
    }

    /// Sign of the Haar factor `h^self` on the child with index `child`
    /// (bit `j` of `child` set means the upper half in coordinate `j`).
    pub fn child_sign(self, child: usize) -> i32 {
        let mut s = 1;
        for j in 0..self.dim() {
            if self.bit(j) == 0 && (child >> j) & 1 == 0 {
                s = -s;
            }
        }
        s
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.dim() {
            write!(f, "{}", self.bit(j))?;
        }
        Ok(())
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One signature per parameter.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VectorSignature(pub SmallVec<[Signature; 2]>);

impl VectorSignature {
    pub fn new(parts: impl IntoIterator<Item = Signature>) -> Self {
        VectorSignature(parts.into_iter().collect())
    }

    pub fn parts(&self) -> &[Signature] {
        &self.0
    }

    pub fn is_strict(&self) -> bool {
        self.0.iter().all(|s| s.is_strict())
    }

    pub fn ones(dims: &[usize]) -> Self {
        VectorSignature::new(dims.iter().map(|&d| Signature::ones(d)))
    }
}

impl fmt::Debug for VectorSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// A dyadic cube `2^-k (pos + [0,1)^d)` inside the unit cube.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    level: u32,
    pos: SmallVec<[u32; 3]>,
}

impl DyadicCube {
    pub fn new(level: u32, pos: &[u32]) -> Result<Self> {
        if pos.is_empty() {
            return Err(DyadicError::InvalidArgument("cube of dimension 0".into()));
        }
        if level > MAX_LEVEL {
            return Err(DyadicError::InvalidArgument(format!("level {level} exceeds {MAX_LEVEL}")));
        }
        if let Some(p) = pos.iter().find(|&&p| (p as u64) >> level != 0) {
            return Err(DyadicError::InvalidArgument(format!("position {p} outside [0, 2^{level})")));
        }
        Ok(DyadicCube { level, pos: pos.into() })
    }

    pub fn unit(dim: usize) -> Self {
        DyadicCube { level: 0, pos: SmallVec::from_elem(0, dim) }
    }

    /// The cube at `level` whose row-major position index is `linear`.
    pub fn from_linear(dim: usize, level: u32, linear: usize) -> Self {
        let mask = (1usize << level) - 1;
        let pos = (0..dim).map(|j| ((linear >> (level as usize * j)) & mask) as u32).collect();
        DyadicCube { level, pos }
    }

    pub fn dim(&self) -> usize {
        self.pos.len()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn pos(&self) -> &[u32] {
        &self.pos
    }

    /// Position index among the `2^(level d)` cubes of this level; coordinate 0
    /// varies fastest.
    pub fn linear(&self) -> usize {
        self.pos.iter().enumerate().map(|(j, &p)| (p as usize) << (self.level as usize * j)).sum()
    }

    pub fn volume(&self) -> Rational {
        Rational::pow2(-((self.level as usize * self.dim()) as i32))
    }

    /// `|Q|^(-1/2)`, the sup norm of an L2-normalized Haar function on `Q`.
    pub fn inv_sqrt_volume(&self) -> Scalar {
        Scalar::pow_sqrt2((self.level as usize * self.dim()) as i64)
    }

    pub fn contains(&self, other: &DyadicCube) -> bool {
        if other.dim() != self.dim() || other.level < self.level {
            return false;
        }
        let shift = other.level - self.level;
        self.pos.iter().zip(&other.pos).all(|(&a, &b)| b >> shift == a)
    }

    pub fn strictly_contains(&self, other: &DyadicCube) -> bool {
        other.level > self.level && self.contains(other)
    }

    pub fn intersects(&self, other: &DyadicCube) -> bool {
        self.contains(other) || other.contains(self)
    }

    /// Child number `index`; bit `j` selects the upper half in coordinate `j`.
    pub fn child(&self, index: usize) -> DyadicCube {
        let pos = self.pos.iter().enumerate().map(|(j, &p)| 2 * p + ((index >> j) & 1) as u32).collect();
        DyadicCube { level: self.level + 1, pos }
    }

    /// The `2^d` children, refusing to go below `depth`.
    pub fn children(&self, depth: u32) -> Result<Vec<DyadicCube>> {
        if self.level >= depth || self.level >= MAX_LEVEL {
            return Err(DyadicError::LevelOverflow { level: self.level, depth });
        }
        Ok((0..1usize << self.dim()).map(|i| self.child(i)).collect())
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        if self.level == 0 {
            return None;
        }
        Some(DyadicCube { level: self.level - 1, pos: self.pos.iter().map(|p| p >> 1).collect() })
    }

    /// Which child of its parent this cube is.
    pub fn child_index(&self) -> usize {
        self.pos.iter().enumerate().map(|(j, &p)| ((p & 1) as usize) << j).sum()
    }

    /// The ancestor at `level` (or the cube itself).
    pub fn ancestor(&self, level: u32) -> DyadicCube {
        let shift = self.level.saturating_sub(level);
        DyadicCube { level: self.level - shift, pos: self.pos.iter().map(|p| p >> shift).collect() }
    }

    /// The child of `self` that contains `other`, when `other` is strictly inside.
    pub fn child_toward(&self, other: &DyadicCube) -> Option<usize> {
        if !self.strictly_contains(other) {
            return None;
        }
        Some(other.ancestor(self.level + 1).child_index())
    }
}

impl fmt::Debug for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}{:?}", self.level, self.pos.as_slice())
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim() == 1 {
            let den = 1u64 << self.level;
            let p = self.pos[0] as u64;
            write!(f, "[{}/{den},{}/{den})", p, p + 1)
        } else {
            fmt::Debug::fmt(self, f)
        }
    }
}

/// A product of dyadic cubes, one per parameter.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicRectangle(pub SmallVec<[DyadicCube; 2]>);

impl DyadicRectangle {
    pub fn new(factors: impl IntoIterator<Item = DyadicCube>) -> Self {
        DyadicRectangle(factors.into_iter().collect())
    }

    pub fn unit(dims: &[usize]) -> Self {
        DyadicRectangle::new(dims.iter().map(|&d| DyadicCube::unit(d)))
    }

    pub fn factors(&self) -> &[DyadicCube] {
        &self.0
    }

    pub fn volume(&self) -> Rational {
        self.0.iter().fold(Rational::one(), |acc, q| &acc * &q.volume())
    }

    pub fn inv_sqrt_volume(&self) -> Scalar {
        let m: usize = self.0.iter().map(|q| q.level as usize * q.dim()).sum();
        Scalar::pow_sqrt2(m as i64)
    }

    pub fn contains(&self, other: &DyadicRectangle) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.contains(b))
    }

    pub fn intersects(&self, other: &DyadicRectangle) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.intersects(b))
    }
}

impl fmt::Debug for DyadicRectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

/// Finite product grid on `[0,1)^(d_1) x ... x [0,1)^(d_t)`: parameter `s`
/// has dimension `dims[s]` and finest level `depths[s]`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: Vec<usize>,
    pub depths: Vec<u32>,
}

/// Upper bound on finest cells for any dense computation.
pub const MAX_CELLS: usize = 1 << 16;

impl GridSpec {
    pub fn new(dims: Vec<usize>, depths: Vec<u32>) -> Result<Self> {
        let g = GridSpec { dims, depths };
        g.validate()?;
        Ok(g)
    }

    pub fn one(dim: usize, depth: u32) -> Result<Self> {
        GridSpec::new(vec![dim], vec![depth])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(DyadicError::InvalidGrid("no parameters".into()));
        }
        if self.dims.len() != self.depths.len() {
            return Err(DyadicError::InvalidGrid(format!(
                "{} dimensions but {} depths",
                self.dims.len(),
                self.depths.len()
            )));
        }
        if let Some(d) = self.dims.iter().find(|&&d| d == 0 || d > 7) {
            return Err(DyadicError::InvalidGrid(format!("dimension {d} out of range 1..=7")));
        }
        let bits: usize = self.dims.iter().zip(&self.depths).map(|(&d, &n)| d * n as usize).sum();
        if bits > 16 {
            return Err(DyadicError::CapExceeded {
                what: "finest cells",
                size: 1usize << bits.min(63),
                cap: MAX_CELLS,
            });
        }
        Ok(())
    }

    pub fn params(&self) -> usize {
        self.dims.len()
    }

    /// Finest cells of parameter `s`: `2^(N_s d_s)`.
    pub fn cells_per_param(&self, s: usize) -> usize {
        1usize << (self.dims[s] * self.depths[s] as usize)
    }

    pub fn total_cells(&self) -> usize {
        (0..self.params()).map(|s| self.cells_per_param(s)).product()
    }

    pub fn cell_shape(&self) -> Vec<usize> {
        (0..self.params()).map(|s| self.cells_per_param(s)).collect()
    }

    pub fn cell_volume(&self) -> Rational {
        let bits: usize = self.dims.iter().zip(&self.depths).map(|(&d, &n)| d * n as usize).sum();
        Rational::pow2(-(bits as i32))
    }

    /// Split a global cell index into per-parameter finest-cube indices
    /// (last parameter varies fastest).
    pub fn split_cell(&self, mut cell: usize) -> SmallVec<[usize; 2]> {
        let mut out: SmallVec<[usize; 2]> = SmallVec::from_elem(0, self.params());
        for s in (0..self.params()).rev() {
            let n = self.cells_per_param(s);
            out[s] = cell % n;
            cell /= n;
        }
        out
    }

    pub fn join_cell(&self, parts: &[usize]) -> usize {
        parts.iter().enumerate().fold(0, |acc, (s, &c)| acc * self.cells_per_param(s) + c)
    }

    /// The finest rectangle for a global cell index.
    pub fn cell_rect(&self, cell: usize) -> DyadicRectangle {
        let parts = self.split_cell(cell);
        DyadicRectangle::new(
            parts.iter().enumerate().map(|(s, &c)| DyadicCube::from_linear(self.dims[s], self.depths[s], c)),
        )
    }

    /// Global cell indices of all finest cells inside `r`, in increasing order.
    pub fn cells_of(&self, r: &DyadicRectangle) -> Vec<usize> {
        let per: Vec<Vec<usize>> =
            r.factors().iter().enumerate().map(|(s, q)| finest_cells_of_cube(q, self.depths[s])).collect();
        let mut out = vec![0usize];
        for (s, cells) in per.iter().enumerate() {
            let n = self.cells_per_param(s);
            out = out.iter().flat_map(|&acc| cells.iter().map(move |&c| acc * n + c)).collect();
        }
        out.sort_unstable();
        out
    }

    pub fn check_rect(&self, r: &DyadicRectangle) -> Result<()> {
        if r.factors().len() != self.params() {
            return Err(DyadicError::DimensionMismatch { expected: self.params(), got: r.factors().len() });
        }
        for (s, q) in r.factors().iter().enumerate() {
            if q.dim() != self.dims[s] {
                return Err(DyadicError::DimensionMismatch { expected: self.dims[s], got: q.dim() });
            }
            if q.level() > self.depths[s] {
                return Err(DyadicError::Unresolvable(format!("cube {q:?} (grid depth {})", self.depths[s])));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid(d={:?}, N={:?})", self.dims, self.depths)
    }
}

/// Finest-level linear indices of the cells inside cube `q`.
pub fn finest_cells_of_cube(q: &DyadicCube, depth: u32) -> Vec<usize> {
    let d = q.dim();
    let shift = depth - q.level();
    let side = 1usize << shift;
    let count = 1usize << (shift as usize * d);
    (0..count)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let off = (i >> (shift as usize * j)) & (side - 1);
                    ((q.pos()[j] as usize) * side + off) << (depth as usize * j)
                })
                .sum()
        })
        .collect()
}

/// All cubes of dimension `dim` at levels `0..=depth`, coarse to fine.
pub fn enumerate_cubes(dim: usize, depth: u32) -> Vec<DyadicCube> {
    (0..=depth)
        .flat_map(|k| (0..1usize << (k as usize * dim)).map(move |i| DyadicCube::from_linear(dim, k, i)))
        .collect()
}

/// Every rectangle whose factor levels lie in `[0, N_s]`.
pub fn enumerate_rectangles(g: &GridSpec) -> Vec<DyadicRectangle> {
    let mut out = vec![DyadicRectangle(SmallVec::new())];
    for s in 0..g.params() {
        let cubes = enumerate_cubes(g.dims[s], g.depths[s]);
        out = out
            .into_iter()
            .flat_map(|r| {
                cubes.iter().map(move |q| {
                    let mut r = r.clone();
                    r.0.push(q.clone());
                    r
                })
            })
            .collect();
    }
    out
}

/// `Dil_a^(p)` followed by `Tr_y` on the periodic unit domain.
///
/// Functions on the torus are identified with functions on the centered
/// fundamental domain `[-1/2, 1/2)^D`. Dilation by `a = 2^-shrink` refines
/// the grid by `shrink` levels in every parameter and multiplies by
/// `a^(-D/p)` where `D` is the total dimension. The translation `y` (one
/// rational per coordinate, parameters concatenated) must be a multiple of
/// the output cell side and wraps periodically. Use `p = f64::INFINITY` for
/// the unnormalized dilation.
pub fn translate_dilate(f: &StepFunction, y: &[Rational], shrink: u32, p: f64) -> Result<StepFunction> {
    let g = f.grid();
    let total_dim: usize = g.dims.iter().sum();
    if y.len() != total_dim {
        return Err(DyadicError::DimensionMismatch { expected: total_dim, got: y.len() });
    }
    if !(p >= 1.0 || p.is_infinite()) || p.is_nan() {
        return Err(DyadicError::InvalidArgument(format!("exponent p = {p} must be >= 1")));
    }
    // a^(-D/p) = 2^(shrink D / p); representable iff 2 shrink D / p is an integer
    let factor = if shrink == 0 || p.is_infinite() {
        Scalar::one()
    } else {
        let twice = 2.0 * shrink as f64 * total_dim as f64 / p;
        if (twice - twice.round()).abs() > 1e-12 {
            let denom = if (p - p.round()).abs() < 1e-12 { p.round() as i64 } else { 0 };
            return Err(DyadicError::UnsupportedExponent { numer: (shrink as usize * total_dim) as i64, denom });
        }
        Scalar::pow_sqrt2(twice.round() as i64)
    };
    let out_grid = GridSpec::new(g.dims.clone(), g.depths.iter().map(|n| n + shrink).collect())?;

    // translation in units of output cells, per coordinate
    let mut shifts = Vec::with_capacity(total_dim);
    let mut coord = 0;
    for s in 0..g.params() {
        let n_out = out_grid.depths[s];
        for _ in 0..g.dims[s] {
            let units = &y[coord] * &Rational::pow2(n_out as i32);
            if units.denom() != 1.into() {
                return Err(DyadicError::InvalidArgument(format!(
                    "translation {} is not a multiple of the cell side 2^-{n_out}",
                    y[coord]
                )));
            }
            let side = 1i64 << n_out;
            let u: i64 =
                units.numer().try_into().map_err(|_| DyadicError::InvalidArgument("translation too large".into()))?;
            shifts.push(u.rem_euclid(side) as usize);
            coord += 1;
        }
    }

    // input cell with centered index c covers [c, c+1) input units; x/a lands
    // there exactly when x is in the output cell with the same centered index
    let mut values = vec![Scalar::zero(); out_grid.total_cells()];
    for (cell, v) in f.values().iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        let parts = g.split_cell(cell);
        let mut target = SmallVec::<[usize; 2]>::new();
        let mut coord = 0;
        for s in 0..g.params() {
            let (d, n_in, n_out) = (g.dims[s], g.depths[s], out_grid.depths[s]);
            let q = DyadicCube::from_linear(d, n_in, parts[s]);
            let (side_in, side_out) = (1i64 << n_in, 1i64 << n_out);
            let mut lin = 0usize;
            for j in 0..d {
                let mut c = q.pos()[j] as i64;
                if c >= side_in / 2 {
                    c -= side_in;
                }
                let p = (c + shifts[coord + j] as i64).rem_euclid(side_out) as usize;
                lin += p << (n_out as usize * j);
            }
            coord += d;
            target.push(lin);
        }
        values[out_grid.join_cell(&target)] += &(v * &factor);
    }
    StepFunction::from_values(out_grid, values)
}
