//! Index tables and tree transforms for the Haar basis of one parameter, and
//! the separable extension to product grids.
//!
//! Standard layout for a parameter of dimension `d` and depth `N` (size
//! `2^(N d)`): index 0 is the mean, then for each level `k < N`, each cube in
//! linear order, each strict signature in bit order.
//!
//! Extended layout (used by paraproducts): every level `k <= N`, every cube,
//! every signature including all-ones, `2^d` slots per cube. Strict slots at
//! the finest level are always zero.

use crate::dyadic::{DyadicCube, GridSpec, Signature};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    Mean,
    Haar { cube: DyadicCube, sig: Signature },
}

#[derive(Clone, Debug)]
pub struct ParamBasis {
    pub dim: usize,
    pub depth: u32,
    pub n_cells: usize,
    /// `2^d`
    pub n_sig: usize,
    level_offset: Vec<usize>,
    /// per level `k < N`: `[p * 2^d + c]` is the linear index of child `c` of cube `p`
    children: Vec<Vec<usize>>,
    /// `[e * 2^d + c]`: sign of `h^e` on child `c`
    chi: Vec<i8>,
    /// `|Q|^(-1/2)` per level
    inv_sqrt: Vec<Scalar>,
    cell_volume: Rational,
}

impl ParamBasis {
    pub fn new(dim: usize, depth: u32) -> Self {
        let n_sig = 1usize << dim;
        let mut level_offset = Vec::with_capacity(depth as usize + 2);
        let mut acc = 0usize;
        for k in 0..=depth as usize + 1 {
            level_offset.push(acc);
            acc += 1usize << (k * dim);
        }
        let children = (0..depth)
            .map(|k| {
                let count = 1usize << (k as usize * dim);
                let mut t = Vec::with_capacity(count * n_sig);
                for p in 0..count {
                    let q = DyadicCube::from_linear(dim, k, p);
                    for c in 0..n_sig {
                        t.push(q.child(c).linear());
                    }
                }
                t
            })
            .collect();
        let mut chi = vec![0i8; n_sig * n_sig];
        for e in 0..n_sig {
            let sig = Signature::new(dim, e as u8).expect("dimension checked by grid");
            for c in 0..n_sig {
                chi[e * n_sig + c] = sig.child_sign(c) as i8;
            }
        }
        let inv_sqrt = (0..=depth).map(|k| Scalar::pow_sqrt2((k as usize * dim) as i64)).collect();
        ParamBasis {
            dim,
            depth,
            n_cells: 1usize << (depth as usize * dim),
            n_sig,
            level_offset,
            children,
            chi,
            inv_sqrt,
            cell_volume: Rational::pow2(-((depth as usize * dim) as i32)),
        }
    }

    pub fn size(&self) -> usize {
        self.n_cells
    }

    pub fn ext_size(&self) -> usize {
        self.n_sig * self.level_offset[self.depth as usize + 1]
    }

    pub fn cubes_at(&self, level: u32) -> usize {
        1usize << (level as usize * self.dim)
    }

    pub fn std_index(&self, level: u32, pos: usize, sig: u8) -> usize {
        debug_assert!(level < self.depth && (sig as usize) < self.n_sig - 1);
        1 + (self.n_sig - 1) * (self.level_offset[level as usize] + pos) + sig as usize
    }

    pub fn std_index_of(&self, cube: &DyadicCube, sig: Signature) -> Option<usize> {
        if !sig.is_strict() {
            return (cube.level() == 0).then_some(0);
        }
        (cube.level() < self.depth).then(|| self.std_index(cube.level(), cube.linear(), sig.bits()))
    }

    pub fn ext_index(&self, level: u32, pos: usize, sig: u8) -> usize {
        self.n_sig * (self.level_offset[level as usize] + pos) + sig as usize
    }

    pub fn slot(&self, index: usize) -> Slot {
        if index == 0 {
            return Slot::Mean;
        }
        let r = index - 1;
        let per = self.n_sig - 1;
        let (block, sig) = (r / per, (r % per) as u8);
        let level = (0..self.depth).rev().find(|&k| self.level_offset[k as usize] <= block).expect("index in range");
        let pos = block - self.level_offset[level as usize];
        Slot::Haar {
            cube: DyadicCube::from_linear(self.dim, level, pos),
            sig: Signature::new(self.dim, sig).expect("valid signature"),
        }
    }

    /// Level of a standard index; the mean reports `None`.
    pub fn level_of(&self, index: usize) -> Option<u32> {
        if index == 0 {
            return None;
        }
        let block = (index - 1) / (self.n_sig - 1);
        (0..self.depth).rev().find(|&k| self.level_offset[k as usize] <= block)
    }

    pub fn chi(&self, sig: u8, child: usize) -> i8 {
        self.chi[sig as usize * self.n_sig + child]
    }

    pub fn inv_sqrt(&self, level: u32) -> &Scalar {
        &self.inv_sqrt[level as usize]
    }

    fn child_of(&self, level: u32, pos: usize, c: usize) -> usize {
        self.children[level as usize][pos * self.n_sig + c]
    }

    /// Integrals over every cube at every level, finest first reversed:
    /// `ints[k][p] = ∫_Q f`.
    fn integrals(&self, values: &[Scalar]) -> Vec<Vec<Scalar>> {
        let n = self.depth as usize;
        let mut ints: Vec<Vec<Scalar>> = vec![Vec::new(); n + 1];
        ints[n] = values.iter().map(|v| v.scale(&self.cell_volume)).collect();
        for k in (0..n).rev() {
            let count = self.cubes_at(k as u32);
            let mut level = Vec::with_capacity(count);
            for p in 0..count {
                let mut s = Scalar::zero();
                for c in 0..self.n_sig {
                    s += &ints[k + 1][self.child_of(k as u32, p, c)];
                }
                level.push(s);
            }
            ints[k] = level;
        }
        ints
    }

    fn haar_coeff(&self, ints: &[Vec<Scalar>], k: u32, p: usize, e: u8) -> Scalar {
        let mut s = Scalar::zero();
        for c in 0..self.n_sig {
            let v = &ints[k as usize + 1][self.child_of(k, p, c)];
            if v.is_zero() {
                continue;
            }
            if self.chi(e, c) > 0 {
                s += v;
            } else {
                s -= v;
            }
        }
        if s.is_zero() {
            s
        } else {
            &s * self.inv_sqrt(k)
        }
    }

    /// Cell values to standard coefficients.
    pub fn analyze(&self, values: &[Scalar]) -> Vec<Scalar> {
        let ints = self.integrals(values);
        let mut out = vec![Scalar::zero(); self.n_cells];
        out[0] = ints[0][0].clone();
        for k in 0..self.depth {
            for p in 0..self.cubes_at(k) {
                for e in 0..(self.n_sig - 1) as u8 {
                    out[self.std_index(k, p, e)] = self.haar_coeff(&ints, k, p, e);
                }
            }
        }
        out
    }

    /// Standard coefficients to cell values.
    pub fn synthesize(&self, coeffs: &[Scalar]) -> Vec<Scalar> {
        let mut avg = vec![coeffs[0].clone()];
        for k in 0..self.depth {
            let mut next = vec![Scalar::zero(); self.cubes_at(k + 1)];
            for (p, a) in avg.iter().enumerate() {
                for c in 0..self.n_sig {
                    let mut v = a.clone();
                    let mut d = Scalar::zero();
                    for e in 0..(self.n_sig - 1) as u8 {
                        let x = &coeffs[self.std_index(k, p, e)];
                        if x.is_zero() {
                            continue;
                        }
                        if self.chi(e, c) > 0 {
                            d += x;
                        } else {
                            d -= x;
                        }
                    }
                    if !d.is_zero() {
                        v += &(&d * self.inv_sqrt(k));
                    }
                    next[self.child_of(k, p, c)] = v;
                }
            }
            avg = next;
        }
        avg
    }

    /// Cell values to extended coefficients `<f, h^e_Q>` for all levels and signatures.
    pub fn ext_analyze(&self, values: &[Scalar]) -> Vec<Scalar> {
        let ints = self.integrals(values);
        let ones = (self.n_sig - 1) as u8;
        let mut out = vec![Scalar::zero(); self.ext_size()];
        for k in 0..=self.depth {
            for p in 0..self.cubes_at(k) {
                let i = &ints[k as usize][p];
                if !i.is_zero() {
                    out[self.ext_index(k, p, ones)] = i * self.inv_sqrt(k);
                }
                if k < self.depth {
                    for e in 0..ones {
                        out[self.ext_index(k, p, e)] = self.haar_coeff(&ints, k, p, e);
                    }
                }
            }
        }
        out
    }

    /// `sum a[k,p,e] h^e_Q` evaluated on cells. Strict slots at the finest
    /// level must be zero.
    pub fn ext_synthesize(&self, ext: &[Scalar]) -> Vec<Scalar> {
        let ones = (self.n_sig - 1) as u8;
        let mut acc = vec![&ext[self.ext_index(0, 0, ones)] * self.inv_sqrt(0)];
        for k in 0..self.depth {
            let mut next = vec![Scalar::zero(); self.cubes_at(k + 1)];
            for (p, a) in acc.iter().enumerate() {
                let mut by_child: Vec<Scalar> = vec![Scalar::zero(); self.n_sig];
                for e in 0..ones {
                    let x = &ext[self.ext_index(k, p, e)];
                    if x.is_zero() {
                        continue;
                    }
                    for (c, slot) in by_child.iter_mut().enumerate() {
                        if self.chi(e, c) > 0 {
                            *slot += x;
                        } else {
                            *slot -= x;
                        }
                    }
                }
                for (c, d) in by_child.into_iter().enumerate() {
                    let child = self.child_of(k, p, c);
                    let mut v = a.clone();
                    if !d.is_zero() {
                        v += &(&d * self.inv_sqrt(k));
                    }
                    let ind = &ext[self.ext_index(k + 1, child, ones)];
                    if !ind.is_zero() {
                        v += &(ind * self.inv_sqrt(k + 1));
                    }
                    next[child] = v;
                }
            }
            acc = next;
        }
        acc
    }
}

/// Per-parameter bases for a product grid.
#[derive(Clone, Debug)]
pub struct TensorBasis {
    pub params: Vec<ParamBasis>,
}

impl TensorBasis {
    pub fn new(grid: &GridSpec) -> Self {
        TensorBasis { params: grid.dims.iter().zip(&grid.depths).map(|(&d, &n)| ParamBasis::new(d, n)).collect() }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.params.iter().map(|p| p.size()).collect()
    }

    pub fn ext_shape(&self) -> Vec<usize> {
        self.params.iter().map(|p| p.ext_size()).collect()
    }

    pub fn split(&self, mut index: usize, sizes: &[usize]) -> Vec<usize> {
        let mut out = vec![0; sizes.len()];
        for s in (0..sizes.len()).rev() {
            out[s] = index % sizes[s];
            index /= sizes[s];
        }
        out
    }

    pub fn join(parts: &[usize], sizes: &[usize]) -> usize {
        parts.iter().zip(sizes).fold(0, |acc, (&p, &n)| acc * n + p)
    }

    pub fn analyze(&self, values: &[Scalar]) -> Vec<Scalar> {
        let ops: Vec<_> = self.params.iter().map(|p| move |x: &[Scalar]| p.analyze(x)).collect();
        map_axes(values.to_vec(), &self.shape(), &ops)
    }

    pub fn synthesize(&self, coeffs: &[Scalar]) -> Vec<Scalar> {
        let ops: Vec<_> = self.params.iter().map(|p| move |x: &[Scalar]| p.synthesize(x)).collect();
        map_axes(coeffs.to_vec(), &self.shape(), &ops)
    }

    pub fn ext_analyze(&self, values: &[Scalar]) -> Vec<Scalar> {
        let ops: Vec<_> = self.params.iter().map(|p| move |x: &[Scalar]| p.ext_analyze(x)).collect();
        map_axes(values.to_vec(), &self.shape(), &ops)
    }

    pub fn ext_synthesize(&self, ext: &[Scalar]) -> Vec<Scalar> {
        let ops: Vec<_> = self.params.iter().map(|p| move |x: &[Scalar]| p.ext_synthesize(x)).collect();
        map_axes(ext.to_vec(), &self.ext_shape(), &ops)
    }
}

/// Apply a 1D transform along every axis in turn. `ops[s]` maps a fiber of
/// length `shape[s]` to a fiber of some (fixed) new length.
pub fn map_axes<F>(mut data: Vec<Scalar>, shape: &[usize], ops: &[F]) -> Vec<Scalar>
where
    F: Fn(&[Scalar]) -> Vec<Scalar>,
{
    let mut shape = shape.to_vec();
    for (axis, op) in ops.iter().enumerate() {
        let n = shape[axis];
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        if inner == 1 {
            let mut out = Vec::new();
            let mut m = 0;
            for o in 0..outer {
                let r = op(&data[o * n..(o + 1) * n]);
                m = r.len();
                out.extend(r);
            }
            data = out;
            shape[axis] = m;
            continue;
        }
        let mut out: Vec<Scalar> = Vec::new();
        let mut m = 0;
        let mut fiber = Vec::with_capacity(n);
        for o in 0..outer {
            let mut block: Vec<Vec<Scalar>> = Vec::with_capacity(inner);
            for i in 0..inner {
                fiber.clear();
                fiber.extend((0..n).map(|x| data[(o * n + x) * inner + i].clone()));
                let r = op(&fiber);
                m = r.len();
                block.push(r);
            }
            for x in 0..m {
                for b in block.iter_mut() {
                    out.push(std::mem::take(&mut b[x]));
                }
            }
        }
        data = out;
        shape[axis] = m;
    }
    data
}
