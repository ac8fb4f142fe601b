//! Step functions on a finite product grid and their tensor Haar expansions.

pub mod basis;
mod json;

use std::collections::BTreeMap;

use crate::dyadic::{DyadicCube, DyadicRectangle, GridSpec, Signature, VectorSignature};
use crate::error::{DyadicError, Result};
use crate::scalar::{Rational, Scalar};

pub use basis::{ParamBasis, Slot, TensorBasis};
pub use json::{ExpansionJson, StepFunctionJson};

/// A function constant on each finest cell. Values are stored densely;
/// cells never written read as zero.
#[derive(Clone, PartialEq, Eq)]
pub struct StepFunction {
    grid: GridSpec,
    values: Vec<Scalar>,
}

impl std::fmt::Debug for StepFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StepFunction({:?}, {:?})", self.grid, self.values)
    }
}

impl StepFunction {
    pub fn zero(grid: &GridSpec) -> Self {
        StepFunction { grid: grid.clone(), values: vec![Scalar::zero(); grid.total_cells()] }
    }

    pub fn from_values(grid: GridSpec, values: Vec<Scalar>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.total_cells() {
            return Err(DyadicError::GridMismatch(format!("{} values for {} cells", values.len(), grid.total_cells())));
        }
        Ok(StepFunction { grid, values })
    }

    pub fn constant(grid: &GridSpec, c: Scalar) -> Self {
        StepFunction { grid: grid.clone(), values: vec![c; grid.total_cells()] }
    }

    pub fn indicator(grid: &GridSpec, r: &DyadicRectangle) -> Result<Self> {
        grid.check_rect(r)?;
        let mut f = StepFunction::zero(grid);
        for c in grid.cells_of(r) {
            f.values[c] = Scalar::one();
        }
        Ok(f)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Scalar] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Scalar> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Scalar::is_zero)
    }

    fn check_same_grid(&self, other: &StepFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(DyadicError::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn add(&self, other: &StepFunction) -> Result<StepFunction> {
        self.check_same_grid(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &StepFunction) -> Result<StepFunction> {
        self.check_same_grid(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// Pointwise product `M_self other`.
    pub fn mul(&self, other: &StepFunction) -> Result<StepFunction> {
        self.check_same_grid(other)?;
        Ok(self.zip_with(other, |a, b| if a.is_zero() || b.is_zero() { Scalar::zero() } else { a * b }))
    }

    pub fn scale(&self, c: &Scalar) -> StepFunction {
        StepFunction { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add_assign_scaled(&mut self, other: &StepFunction, c: &Scalar) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            if !b.is_zero() {
                *a += &(b * c);
            }
        }
        Ok(())
    }

    fn zip_with(&self, other: &StepFunction, f: impl Fn(&Scalar, &Scalar) -> Scalar) -> StepFunction {
        StepFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// `∫ f g`, exact.
    pub fn inner(&self, other: &StepFunction) -> Result<Scalar> {
        self.check_same_grid(other)?;
        let s: Scalar = self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| !a.is_zero() && !b.is_zero())
            .map(|(a, b)| a * b)
            .sum();
        Ok(s.scale(&self.grid.cell_volume()))
    }

    /// `‖f‖₂²`, exact.
    pub fn l2_norm_sq(&self) -> Scalar {
        let s: Scalar = self.values.iter().filter(|v| !v.is_zero()).map(Scalar::square).sum();
        s.scale(&self.grid.cell_volume())
    }

    /// `(Σ |v|^p · cell volume)^(1/p)`; `p = ∞` gives the max.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(Scalar::to_f64).collect()
    }
}

/// Haar coefficients keyed by rectangle and signature.
///
/// On the unit domain each parameter carries one non-Haar degree of freedom,
/// the normalized indicator of the unit cube. `mean` holds the coefficient of
/// the product of these across all parameters. When `t > 1`, products that
/// mix the unit indicator in some parameters with strict Haar functions in
/// others live in `coeffs` with the all-ones signature on a level-0 factor.
/// [`HaarExpansion::strict`] iterates only the genuinely strict entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HaarExpansion {
    pub grid: GridSpec,
    pub mean: Scalar,
    pub coeffs: BTreeMap<(DyadicRectangle, VectorSignature), Scalar>,
}

impl HaarExpansion {
    pub fn zero(grid: &GridSpec) -> Self {
        HaarExpansion { grid: grid.clone(), mean: Scalar::zero(), coeffs: BTreeMap::new() }
    }

    pub fn strict(&self) -> impl Iterator<Item = (&(DyadicRectangle, VectorSignature), &Scalar)> {
        self.coeffs.iter().filter(|((_, e), _)| e.is_strict())
    }

    /// Set the coefficient of `h_R^e`; all-ones parts must sit on level-0 cubes.
    pub fn set(&mut self, r: DyadicRectangle, e: VectorSignature, value: Scalar) -> Result<()> {
        let basis = TensorBasis::new(&self.grid);
        let idx = dense_index(&self.grid, &basis, &r, &e)?;
        if idx == 0 {
            self.mean = value;
        } else if value.is_zero() {
            self.coeffs.remove(&(r, e));
        } else {
            self.coeffs.insert((r, e), value);
        }
        Ok(())
    }

    pub fn get(&self, r: &DyadicRectangle, e: &VectorSignature) -> Scalar {
        if e.parts().iter().all(|s| !s.is_strict()) && r.factors().iter().all(|q| q.level() == 0) {
            return self.mean.clone();
        }
        self.coeffs.get(&(r.clone(), e.clone())).cloned().unwrap_or_default()
    }

    /// `mean² + Σ coeffs²`.
    pub fn energy(&self) -> Scalar {
        let mut s = self.mean.square();
        for v in self.coeffs.values() {
            s += &v.square();
        }
        s
    }

    pub fn to_dense(&self) -> Result<Vec<Scalar>> {
        let basis = TensorBasis::new(&self.grid);
        let mut out = vec![Scalar::zero(); self.grid.total_cells()];
        out[0] = self.mean.clone();
        for ((r, e), v) in &self.coeffs {
            let i = dense_index(&self.grid, &basis, r, e)?;
            out[i] = v.clone();
        }
        Ok(out)
    }

    pub fn from_dense(grid: &GridSpec, dense: &[Scalar]) -> Self {
        let basis = TensorBasis::new(grid);
        let shape = basis.shape();
        let mut e = HaarExpansion::zero(grid);
        e.mean = dense[0].clone();
        for (i, v) in dense.iter().enumerate().skip(1) {
            if v.is_zero() {
                continue;
            }
            let key = dense_key(&basis, &basis.split(i, &shape));
            e.coeffs.insert(key, v.clone());
        }
        e
    }
}

/// Rectangle and signature of a dense tensor index.
pub fn dense_key(basis: &TensorBasis, parts: &[usize]) -> (DyadicRectangle, VectorSignature) {
    let mut cubes = Vec::with_capacity(parts.len());
    let mut sigs = Vec::with_capacity(parts.len());
    for (pb, &i) in basis.params.iter().zip(parts) {
        match pb.slot(i) {
            Slot::Mean => {
                cubes.push(DyadicCube::unit(pb.dim));
                sigs.push(Signature::ones(pb.dim));
            }
            Slot::Haar { cube, sig } => {
                cubes.push(cube);
                sigs.push(sig);
            }
        }
    }
    (DyadicRectangle::new(cubes), VectorSignature::new(sigs))
}

pub fn dense_index(grid: &GridSpec, basis: &TensorBasis, r: &DyadicRectangle, e: &VectorSignature) -> Result<usize> {
    grid.check_rect(r)?;
    if e.parts().len() != grid.params() {
        return Err(DyadicError::DimensionMismatch { expected: grid.params(), got: e.parts().len() });
    }
    let mut parts = Vec::with_capacity(grid.params());
    for (s, (q, sig)) in r.factors().iter().zip(e.parts()).enumerate() {
        if sig.dim() != grid.dims[s] {
            return Err(DyadicError::DimensionMismatch { expected: grid.dims[s], got: sig.dim() });
        }
        let i = basis.params[s].std_index_of(q, *sig).ok_or_else(|| {
            DyadicError::Unresolvable(format!("basis element h_{q:?}^{sig:?} at depth {}", grid.depths[s]))
        })?;
        parts.push(i);
    }
    Ok(TensorBasis::join(&parts, &basis.shape()))
}

/// Exact Haar analysis.
pub fn analyze(f: &StepFunction) -> HaarExpansion {
    let basis = TensorBasis::new(&f.grid);
    HaarExpansion::from_dense(&f.grid, &basis.analyze(&f.values))
}

/// Exact inverse of [`analyze`].
pub fn synthesize(e: &HaarExpansion) -> Result<StepFunction> {
    let basis = TensorBasis::new(&e.grid);
    let dense = e.to_dense()?;
    StepFunction::from_values(e.grid.clone(), basis.synthesize(&dense))
}

/// Dense coefficient vector in the standard tensor layout.
pub fn analyze_dense(f: &StepFunction) -> Vec<Scalar> {
    TensorBasis::new(&f.grid).analyze(&f.values)
}

pub fn synthesize_dense(grid: &GridSpec, coeffs: &[Scalar]) -> Result<StepFunction> {
    StepFunction::from_values(grid.clone(), TensorBasis::new(grid).synthesize(coeffs))
}

/// Whether the dense index has a strict signature in every parameter.
pub fn is_strict_index(basis: &TensorBasis, parts: &[usize]) -> bool {
    parts.iter().all(|&i| i != 0) && !basis.params.is_empty()
}

/// The L2-normalized tensor Haar function `h_R^e`. Parts with the all-ones
/// signature are normalized indicators and may sit at any level up to the
/// grid depth; strict parts need one more level to resolve.
pub fn haar_function(grid: &GridSpec, r: &DyadicRectangle, e: &VectorSignature) -> Result<StepFunction> {
    grid.check_rect(r)?;
    if e.parts().len() != grid.params() {
        return Err(DyadicError::DimensionMismatch { expected: grid.params(), got: e.parts().len() });
    }
    for (s, (q, sig)) in r.factors().iter().zip(e.parts()).enumerate() {
        if sig.dim() != grid.dims[s] {
            return Err(DyadicError::DimensionMismatch { expected: grid.dims[s], got: sig.dim() });
        }
        if sig.is_strict() && q.level() >= grid.depths[s] {
            return Err(DyadicError::Unresolvable(format!("h_{q:?}^{sig:?} at grid depth {}", grid.depths[s])));
        }
    }
    let mut f = StepFunction::zero(grid);
    let amp = r.inv_sqrt_volume();
    for cell in grid.cells_of(r) {
        let rect = grid.cell_rect(cell);
        let mut sign = 1;
        for ((q, sig), c) in r.factors().iter().zip(e.parts()).zip(rect.factors()) {
            if sig.is_strict() {
                sign *= sig.child_sign(q.child_toward(c).expect("cell inside cube"));
            }
        }
        f.values[cell] = if sign > 0 { amp.clone() } else { -amp.clone() };
    }
    Ok(f)
}

/// Value of `h_Q^e` on a cube strictly inside `Q` (constant there).
pub fn haar_value_on(q: &DyadicCube, sig: Signature, inner: &DyadicCube) -> Option<Scalar> {
    if !sig.is_strict() {
        return q.contains(inner).then(|| q.inv_sqrt_volume());
    }
    let c = q.child_toward(inner)?;
    let amp = q.inv_sqrt_volume();
    Some(if sig.child_sign(c) > 0 { amp } else { -amp })
}

/// The squared square function `Σ_{strict (R,e)} |<f,h_R^e>|² 1_R / |R|`, exact.
pub fn square_function_sq(f: &StepFunction) -> StepFunction {
    let grid = &f.grid;
    let basis = TensorBasis::new(grid);
    let shape = basis.shape();
    let dense = basis.analyze(&f.values);
    let mut out = StepFunction::zero(grid);
    for (i, c) in dense.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let parts = basis.split(i, &shape);
        if !is_strict_index(&basis, &parts) {
            continue;
        }
        let (r, _) = dense_key(&basis, &parts);
        let w = c.square().scale(&r.volume().recip().expect("nonzero volume"));
        for cell in grid.cells_of(&r) {
            out.values[cell] += &w;
        }
    }
    out
}

/// `S(f)` on each cell, with the square root taken in floating point.
pub fn square_function(f: &StepFunction) -> Vec<f64> {
    square_function_sq(f).values.iter().map(|v| v.to_f64().max(0.0).sqrt()).collect()
}

pub fn lp_norm(f: &StepFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(DyadicError::InvalidArgument(format!("p = {p} must be >= 1")));
    }
    let vals = f.to_f64();
    if p.is_infinite() {
        return Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let vol = f.grid.cell_volume().to_f64();
    if p == 2.0 {
        return Ok(f.l2_norm_sq().to_f64().max(0.0).sqrt());
    }
    let s: f64 = vals.iter().map(|v| v.abs().powf(p)).sum::<f64>() * vol;
    Ok(s.powf(1.0 / p))
}

/// Cell volume as a rational, re-exported for callers working with raw values.
pub fn cell_volume(grid: &GridSpec) -> Rational {
    grid.cell_volume()
}
