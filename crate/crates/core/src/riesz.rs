//! Fourier-multiplier Riesz transforms on the periodic lattice, and a
//! least-squares probe of how well sampled dyadic shifts span them.
//!
//! Everything here is floating point.

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dyadic::{translate_dilate, DyadicCube, GridSpec};
use crate::error::{DyadicError, Result};
use crate::haar::StepFunction;
use crate::random::rng;
use crate::scalar::{Rational, Scalar};
use crate::shift::{apply_shift, CubeMap, ShiftMap, ShiftOperator, SigMap};

/// Rank cutoff for the span projection, relative to each sample's norm.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Complex values on the lattice `(Z / n)^d`, `n = 2^depth`; coordinate 0
/// varies fastest, matching the cell order of `GridSpec::one(d, depth)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicGridFunction {
    pub dim: usize,
    pub depth: u32,
    pub values: Vec<Complex64>,
}

impl PeriodicGridFunction {
    pub fn new(dim: usize, depth: u32, values: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || depth == 0 {
            return Err(DyadicError::InvalidGrid(format!("dim {dim}, depth {depth}")));
        }
        let len = 1usize
            .checked_shl(depth * dim as u32)
            .filter(|_| depth * (dim as u32) < 28)
            .ok_or_else(|| DyadicError::InvalidGrid(format!("2^({depth}*{dim}) points")))?;
        if values.len() != len {
            return Err(DyadicError::DimensionMismatch { expected: len, got: values.len() });
        }
        Ok(PeriodicGridFunction { dim, depth, values })
    }

    pub fn zeros(dim: usize, depth: u32) -> Result<Self> {
        let len = 1usize << (depth as usize * dim);
        Self::new(dim, depth, vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn from_real(dim: usize, depth: u32, values: &[f64]) -> Result<Self> {
        Self::new(dim, depth, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_step_function(f: &StepFunction) -> Result<Self> {
        let g = f.grid();
        if g.params() != 1 {
            return Err(DyadicError::InvalidArgument("periodic functions are one-parameter".into()));
        }
        Self::from_real(g.dims[0], g.depths[0], &f.to_f64())
    }

    /// Random real values in `{-8..8}/8`.
    pub fn random_real(dim: usize, depth: u32, seed: u64) -> Result<Self> {
        let mut r = rng(seed);
        let len = 1usize << (depth as usize * dim);
        let v: Vec<f64> = (0..len).map(|_| r.random_range(-8i32..=8) as f64 / 8.0).collect();
        Self::from_real(dim, depth, &v)
    }

    pub fn side(&self) -> usize {
        1 << self.depth
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Unnormalized forward transform `f̂(ξ) = Σ_x f(x) e^{-2πi ξ·x/n}`.
    pub fn fft(&self) -> Vec<Complex64> {
        let mut v = self.values.clone();
        transform(&mut v, self.dim, self.side(), FftDirection::Forward);
        v
    }

    /// Inverse of [`fft`](Self::fft), including the `1/n^d` factor.
    pub fn ifft(dim: usize, depth: u32, spectrum: &[Complex64]) -> Result<Self> {
        let mut v = spectrum.to_vec();
        transform(&mut v, dim, 1 << depth, FftDirection::Inverse);
        let scale = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|z| *z *= scale);
        Self::new(dim, depth, v)
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.len() as f64
    }

    /// `⟨f, g⟩ = Σ f ḡ / n^d`, the L² pairing on the unit torus.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum::<Complex64>() / self.len() as f64
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        PeriodicGridFunction { values, ..*self }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

fn transform(v: &mut [Complex64], dim: usize, n: usize, dir: FftDirection) {
    let fft = FftPlanner::new().plan_fft(n, dir);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim {
        let stride = n.pow(axis as u32);
        for start in 0..v.len() {
            // visit each line once, from its first point
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for (k, z) in line.iter_mut().enumerate() {
                *z = v[start + k * stride];
            }
            fft.process(&mut line);
            for (k, z) in line.iter().enumerate() {
                v[start + k * stride] = *z;
            }
        }
    }
}

/// Signed frequency of FFT bin `k` on `n` points; the Nyquist bin is `+n/2`.
pub fn frequency(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// The multiplier `-i ξ_j / |ξ|` (zero at `ξ = 0`); `j = 0` is the identity.
pub fn riesz_multiplier(j: usize, xi: &[i64]) -> Complex64 {
    if j == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let r = xi.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, -(xi[j - 1] as f64) / r)
    }
}

/// `R_j f`; in one dimension `R_1` is the discrete Hilbert transform.
pub fn discrete_riesz(j: usize, f: &PeriodicGridFunction) -> Result<PeriodicGridFunction> {
    if j > f.dim {
        return Err(DyadicError::InvalidArgument(format!("Riesz index {j} > dimension {}", f.dim)));
    }
    if j == 0 {
        return Ok(f.clone());
    }
    let n = f.side();
    let mut spec = f.fft();
    let mut xi = vec![0i64; f.dim];
    for (idx, z) in spec.iter_mut().enumerate() {
        let mut rest = idx;
        for x in xi.iter_mut() {
            *x = frequency(rest % n, n);
            rest /= n;
        }
        *z *= riesz_multiplier(j, &xi);
    }
    PeriodicGridFunction::ifft(f.dim, f.depth, &spec)
}

/// Dense row-major matrix of `R_j` acting on lattice values.
pub fn riesz_matrix(j: usize, dim: usize, depth: u32) -> Result<Vec<Complex64>> {
    let e0 = PeriodicGridFunction::zeros(dim, depth)?;
    let len = e0.len();
    let cols: Vec<Vec<Complex64>> = (0..len)
        .into_par_iter()
        .map(|c| {
            let mut e = e0.clone();
            e.values[c] = Complex64::new(1.0, 0.0);
            discrete_riesz(j, &e).map(|f| f.values)
        })
        .collect::<Result<_>>()?;
    let mut m = vec![Complex64::new(0.0, 0.0); len * len];
    for (c, col) in cols.iter().enumerate() {
        for (r, z) in col.iter().enumerate() {
            m[r * len + c] = *z;
        }
    }
    Ok(m)
}

/// A shift on the grid `D^{t,y}`: canonical cubes dilated by `t = 2^-scale`
/// and translated by `y`, periodized on the unit torus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomGridSample {
    pub scale: u32,
    /// One lattice offset per coordinate, in units of `2^-depth`.
    pub y: Vec<u32>,
    pub map: ShiftMap,
    pub seed: u64,
}

impl RandomGridSample {
    /// The canonical grid (`t = 1`, `y = 0`).
    pub fn canonical(map: ShiftMap) -> Self {
        let dim = map.dim;
        RandomGridSample { scale: 0, y: vec![0; dim], map, seed: 0 }
    }

    /// Draws `scale ∈ {0, 1}`, a lattice offset, a cube preset and a
    /// signature preset, all from `seed`.
    pub fn draw(dim: usize, depth: u32, seed: u64) -> Result<Self> {
        let mut r = rng(seed);
        let scale = if depth >= 2 { r.random_range(0..=1) } else { 0 };
        let y = (0..dim).map(|_| r.random_range(0..1u32 << depth)).collect();
        let cube = if r.random_bool(0.5) { CubeMap::FirstChild } else { CubeMap::Rotating };
        let sig = if r.random_bool(0.5) { SigMap::Identity } else { SigMap::Cyclic };
        Ok(RandomGridSample { scale, y, map: ShiftMap::new(dim, cube, sig)?, seed })
    }

    pub fn t(&self) -> Rational {
        Rational::pow2(-(self.scale as i32))
    }
}

fn translate(f: &StepFunction, units: &[i64]) -> Result<StepFunction> {
    let n = 1i64 << f.grid().depths[0];
    let y: Vec<Rational> = units.iter().map(|&u| Rational::new(u.rem_euclid(n), n)).collect();
    translate_dilate(f, &y, 0, 2.0)
}

/// The sampled shift applied to `f`: every top cube of side `t` carries its
/// own copy of the canonical tree, moved by `y`.
pub fn apply_sample(s: &RandomGridSample, f: &StepFunction) -> Result<StepFunction> {
    let g = f.grid();
    if g.params() != 1 || g.dims[0] != s.map.dim || s.y.len() != s.map.dim {
        return Err(DyadicError::GridMismatch(format!("{g:?} for a shift of dimension {}", s.map.dim)));
    }
    let (d, depth) = (g.dims[0], g.depths[0]);
    if s.scale >= depth {
        return Err(DyadicError::InvalidArgument(format!("scale {} needs depth > {}", s.scale, s.scale)));
    }
    let y: Vec<i64> = s.y.iter().map(|&u| u as i64).collect();
    let back: Vec<i64> = y.iter().map(|u| -u).collect();
    let moved = translate(f, &back)?;

    let local_depth = depth - s.scale;
    let local_grid = GridSpec::one(d, local_depth)?;
    let q = ShiftOperator::new(s.map.clone(), local_depth);
    let local_len = local_grid.total_cells();
    let mut out = vec![Scalar::zero(); g.total_cells()];
    for top in 0..1usize << (s.scale as usize * d) {
        let top_cube = DyadicCube::from_linear(d, s.scale, top);
        let global = |local: usize| {
            let c = DyadicCube::from_linear(d, local_depth, local);
            let pos: Vec<u32> = c.pos().iter().zip(top_cube.pos()).map(|(&p, &t)| (t << local_depth) + p).collect();
            DyadicCube::new(depth, &pos).expect("inside the unit cube").linear()
        };
        let index: Vec<usize> = (0..local_len).map(global).collect();
        let local =
            StepFunction::from_values(local_grid.clone(), index.iter().map(|&i| moved.values()[i].clone()).collect())?;
        let shifted = apply_shift(&q, &local)?;
        for (v, &i) in shifted.into_values().into_iter().zip(&index) {
            out[i] = v;
        }
    }
    translate(&StepFunction::from_values(g.clone(), out)?, &y)
}

/// Exact matrix of the sampled shift on lattice values (columns are images
/// of cell indicators), row-major.
pub fn sample_shift_matrix_exact(s: &RandomGridSample, depth: u32) -> Result<Vec<Scalar>> {
    let g = GridSpec::one(s.map.dim, depth)?;
    let len = g.total_cells();
    let cols: Vec<Vec<Scalar>> = (0..len)
        .into_par_iter()
        .map(|c| {
            let mut v = vec![Scalar::zero(); len];
            v[c] = Scalar::one();
            apply_sample(s, &StepFunction::from_values(g.clone(), v)?).map(StepFunction::into_values)
        })
        .collect::<Result<_>>()?;
    let mut m = vec![Scalar::zero(); len * len];
    for (c, col) in cols.into_iter().enumerate() {
        for (r, z) in col.into_iter().enumerate() {
            m[r * len + c] = z;
        }
    }
    Ok(m)
}

/// [`sample_shift_matrix_exact`] in floating point.
pub fn sample_shift_matrix(s: &RandomGridSample, depth: u32) -> Result<Vec<f64>> {
    Ok(sample_shift_matrix_exact(s, depth)?.iter().map(Scalar::to_f64).collect())
}

/// Relative Frobenius distance from `target` to the complex span of the
/// real `samples`, after each prefix of samples. Entry `m` is the residual
/// with `m` samples, so entry 0 is `1`. Samples whose remainder after
/// projection falls below [`RANK_CUTOFF`] times their norm are dropped.
pub fn span_residual(samples: &[Vec<f64>], target: &[Complex64]) -> Result<Vec<f64>> {
    let total: f64 = target.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return Err(DyadicError::InvalidArgument("zero target".into()));
    }
    let mut re: Vec<f64> = target.iter().map(|z| z.re).collect();
    let mut im: Vec<f64> = target.iter().map(|z| z.im).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut out = vec![1.0];
    for a in samples {
        if a.len() != target.len() {
            return Err(DyadicError::DimensionMismatch { expected: target.len(), got: a.len() });
        }
        let norm0 = dot(a, a).sqrt();
        let mut v = a.clone();
        // modified Gram-Schmidt, two passes
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&v, q);
                axpy(&mut v, -c, q);
            }
        }
        let nv = dot(&v, &v).sqrt();
        if norm0 > 0.0 && nv > RANK_CUTOFF * norm0 {
            v.iter_mut().for_each(|x| *x /= nv);
            let (cr, ci) = (dot(&re, &v), dot(&im, &v));
            axpy(&mut re, -cr, &v);
            axpy(&mut im, -ci, &v);
            basis.push(v);
        }
        let left = dot(&re, &re) + dot(&im, &im);
        let prev = *out.last().expect("nonempty");
        // projection can only shrink the remainder; guard rounding
        out.push((left / total).sqrt().min(prev));
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(a, b)| *a += c * b);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanRow {
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub residual: f64,
}

/// Per seed `s`, draws `m_max` samples (sample `i` from seed
/// `s * 1_000_003 + i`) and reports the residual sequence against `R_j`.
/// Rows are ordered by seed position, then `M = 0..=m_max`.
pub fn span_residual_experiment(j: usize, dim: usize, depth: u32, m_max: usize, seeds: &[u64]) -> Result<Vec<SpanRow>> {
    let target = riesz_matrix(j, dim, depth)?;
    let per_seed: Vec<Vec<SpanRow>> = seeds
        .par_iter()
        .map(|&seed| {
            let samples = (0..m_max as u64)
                .map(|i| {
                    let s = RandomGridSample::draw(dim, depth, seed.wrapping_mul(1_000_003).wrapping_add(i))?;
                    sample_shift_matrix(&s, depth)
                })
                .collect::<Result<Vec<_>>>()?;
            let res = span_residual(&samples, &target)?;
            Ok(res.into_iter().enumerate().map(|(m, residual)| SpanRow { seed, m, residual }).collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}
