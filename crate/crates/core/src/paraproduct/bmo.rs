//! Product BMO as a Carleson supremum over unions of finest cells:
//! `‖b‖² = sup_U |U|^-1 Σ_{R ⊆ U} Σ_e |<b, h_R^e>|²` with strict `e`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{enumerate_rectangles, DyadicCube, DyadicRectangle, GridSpec};
use crate::error::{DyadicError, Result};
use crate::haar::{analyze, StepFunction};
use crate::scalar::{Rational, Scalar};

/// Exact mode enumerates `2^cells − 1` subsets.
pub const EXACT_CELL_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BmoMode {
    #[serde(rename = "exact-bruteforce")]
    Exact,
    RectangleSup,
    #[serde(rename = "greedy-union")]
    Greedy,
}

impl BmoMode {
    pub fn name(self) -> &'static str {
        match self {
            BmoMode::Exact => "exact-bruteforce",
            BmoMode::RectangleSup => "rectangle-sup",
            BmoMode::Greedy => "greedy-union",
        }
    }
}

impl std::str::FromStr for BmoMode {
    type Err = DyadicError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-bruteforce" | "exact" => Ok(BmoMode::Exact),
            "rectangle-sup" => Ok(BmoMode::RectangleSup),
            "greedy-union" | "greedy" => Ok(BmoMode::Greedy),
            _ => Err(DyadicError::InvalidArgument(format!("unknown BMO mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmoEstimate {
    pub mode: BmoMode,
    /// `sqrt(value_sq)` in floating point.
    pub value: f64,
    /// The maximized Carleson ratio, exact.
    pub value_sq: Scalar,
    /// Finest cells of the maximizing set, sorted; empty when `b` has no
    /// strict coefficients.
    pub witness: Vec<usize>,
}

/// `Σ_e |<b, h_R^e>|²` over strict `e`, for every rectangle where it is nonzero.
pub fn carleson_weights(b: &StepFunction) -> Vec<(DyadicRectangle, Scalar)> {
    let mut by_rect: Vec<(DyadicRectangle, Scalar)> = Vec::new();
    for ((r, _), c) in analyze(b).strict() {
        let w = c.square();
        match by_rect.last_mut() {
            Some((last, acc)) if last == r => *acc += &w,
            _ => by_rect.push((r.clone(), w)),
        }
    }
    by_rect.retain(|(_, w)| !w.is_zero());
    by_rect
}

/// Nonnegative masses added and compared exactly.
trait Mass: Clone + Ord + Send + Sync + Debug {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn times(&self, n: u64) -> Self;
}

impl Mass for i128 {
    fn zero() -> Self {
        0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, n: u64) -> Self {
        self * n as i128
    }
}

impl Mass for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, n: u64) -> Self {
        self.scale(&Rational::from_int(n as i64))
    }
}

/// `a / na` vs `b / nb` for positive counts.
fn cmp_ratio<M: Mass>(a: &M, na: u64, b: &M, nb: u64) -> Ordering {
    a.times(nb).cmp(&b.times(na))
}

/// Integer masses sharing one denominator when every weight is rational and
/// small enough that sums times cell counts fit in `i128`.
fn integer_masses(weights: &[Scalar]) -> Option<Vec<i128>> {
    if !weights.iter().all(Scalar::is_rational) {
        return None;
    }
    let mut den = BigInt::one();
    for w in weights {
        den = den.lcm(&w.rational_part().denom());
    }
    let mut out = Vec::with_capacity(weights.len());
    let mut total = BigInt::zero();
    for w in weights {
        let r = w.rational_part();
        let n = r.numer() * (&den / r.denom());
        total += &n;
        out.push(n.to_i128()?);
    }
    (total.bits() < 100).then_some(out)
}

struct Problem {
    grid: GridSpec,
    rects: Vec<DyadicRectangle>,
    weights: Vec<Scalar>,
}

impl Problem {
    fn value_sq(&self, witness: &[usize]) -> Scalar {
        let mut sorted = witness.to_vec();
        sorted.sort_unstable();
        let mut s = Scalar::zero();
        for (r, w) in self.rects.iter().zip(&self.weights) {
            if self.grid.cells_of(r).iter().all(|c| sorted.binary_search(c).is_ok()) {
                s += w;
            }
        }
        // |U| = n · cell volume
        let vol = &self.grid.cell_volume() * &Rational::from_int(witness.len() as i64);
        s.scale(&vol.recip().expect("nonempty witness"))
    }

    fn estimate(&self, mode: BmoMode, witness: Vec<usize>) -> BmoEstimate {
        let value_sq = self.value_sq(&witness);
        BmoEstimate { mode, value: value_sq.to_f64().max(0.0).sqrt(), value_sq, witness }
    }
}

pub fn bmo_norm(b: &StepFunction, mode: BmoMode) -> Result<BmoEstimate> {
    let grid = b.grid().clone();
    let n_cells = grid.total_cells();
    if mode == BmoMode::Exact && n_cells > EXACT_CELL_CAP {
        return Err(DyadicError::CapExceeded { what: "cells for exact BMO", size: n_cells, cap: EXACT_CELL_CAP });
    }
    let (rects, weights): (Vec<_>, Vec<_>) = carleson_weights(b).into_iter().unzip();
    let problem = Problem { grid, rects, weights };
    if problem.rects.is_empty() {
        return Ok(BmoEstimate { mode, value: 0.0, value_sq: Scalar::zero(), witness: Vec::new() });
    }
    let witness = match integer_masses(&problem.weights) {
        Some(w) => solve(&problem, &w, mode),
        None => solve(&problem, &problem.weights, mode),
    };
    Ok(problem.estimate(mode, witness))
}

fn solve<M: Mass>(p: &Problem, w: &[M], mode: BmoMode) -> Vec<usize> {
    match mode {
        BmoMode::Exact => exact(p, w),
        BmoMode::RectangleSup => p.grid.cells_of(&rectangle_sup(p, w)),
        BmoMode::Greedy => greedy(p, w),
    }
}

fn exact<M: Mass>(p: &Problem, w: &[M]) -> Vec<usize> {
    let n = p.grid.total_cells();
    let masks: Vec<u32> = p.rects.iter().map(|r| p.grid.cells_of(r).iter().fold(0u32, |m, &c| m | 1 << c)).collect();
    let best = (1u32..(1u32 << n))
        .into_par_iter()
        .map(|u| {
            let mut s = M::zero();
            for (m, wi) in masks.iter().zip(w) {
                if m & !u == 0 {
                    s = s.add(wi);
                }
            }
            (s, u)
        })
        .reduce_with(|a, b| match cmp_ratio(&a.0, a.1.count_ones() as u64, &b.0, b.1.count_ones() as u64) {
            Ordering::Greater => a,
            Ordering::Less => b,
            Ordering::Equal => {
                if a.1 <= b.1 {
                    a
                } else {
                    b
                }
            }
        })
        .expect("at least one subset");
    (0..n).filter(|&c| best.1 >> c & 1 == 1).collect()
}

fn ancestors(r: &DyadicRectangle) -> Vec<DyadicRectangle> {
    let mut out = vec![Vec::<DyadicCube>::new()];
    for q in r.factors() {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=q.level()).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(q.ancestor(k));
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(DyadicRectangle::new).collect()
}

/// Best single rectangle; ties go to the first in enumeration order.
fn rectangle_sup<M: Mass>(p: &Problem, w: &[M]) -> DyadicRectangle {
    let mut mass: HashMap<DyadicRectangle, M> = HashMap::new();
    for (r, wi) in p.rects.iter().zip(w) {
        for a in ancestors(r) {
            let e = mass.entry(a).or_insert_with(M::zero);
            *e = e.add(wi);
        }
    }
    let cells = |r: &DyadicRectangle| p.grid.cells_of(r).len() as u64;
    let mut best: Option<(DyadicRectangle, M, u64)> = None;
    for r in enumerate_rectangles(&p.grid) {
        let Some(m) = mass.get(&r) else { continue };
        let n = cells(&r);
        let better = match &best {
            None => true,
            Some((_, bm, bn)) => cmp_ratio(m, n, bm, *bn) == Ordering::Greater,
        };
        if better {
            best = Some((r, m.clone(), n));
        }
    }
    best.expect("some weighted rectangle").0
}

/// Start from the best rectangle and keep adding the whole rectangle that
/// most increases the ratio, until no addition strictly increases it.
fn greedy<M: Mass>(p: &Problem, w: &[M]) -> Vec<usize> {
    let n_cells = p.grid.total_cells();
    let rect_cells: Vec<Vec<usize>> = p.rects.iter().map(|r| p.grid.cells_of(r)).collect();
    let mut containing: Vec<Vec<u32>> = vec![Vec::new(); n_cells];
    for (i, cells) in rect_cells.iter().enumerate() {
        for &c in cells {
            containing[c].push(i as u32);
        }
    }
    let mut in_u = vec![false; n_cells];
    let mut missing: Vec<usize> = rect_cells.iter().map(Vec::len).collect();
    let mut mass = M::zero();
    let mut size = 0u64;

    let add_cells = |cells: &[usize], in_u: &mut Vec<bool>, missing: &mut Vec<usize>, mass: &mut M, size: &mut u64| {
        for &c in cells {
            if in_u[c] {
                continue;
            }
            in_u[c] = true;
            *size += 1;
            for &i in &containing[c] {
                missing[i as usize] -= 1;
                if missing[i as usize] == 0 {
                    *mass = mass.add(&w[i as usize]);
                }
            }
        }
    };
    let start = p.grid.cells_of(&rectangle_sup(p, w));
    add_cells(&start, &mut in_u, &mut missing, &mut mass, &mut size);

    let candidates: Vec<Vec<usize>> = enumerate_rectangles(&p.grid).iter().map(|r| p.grid.cells_of(r)).collect();
    let mut hits: Vec<usize> = vec![0; p.rects.len()];
    let mut touched: Vec<u32> = Vec::new();
    loop {
        let mut best: Option<(usize, M, u64)> = None;
        for (ci, cand) in candidates.iter().enumerate() {
            let mut added = 0u64;
            let mut gain = M::zero();
            for &c in cand {
                if in_u[c] {
                    continue;
                }
                added += 1;
                for &i in &containing[c] {
                    if hits[i as usize] == 0 {
                        touched.push(i);
                    }
                    hits[i as usize] += 1;
                    if hits[i as usize] == missing[i as usize] {
                        gain = gain.add(&w[i as usize]);
                    }
                }
            }
            for &i in &touched {
                hits[i as usize] = 0;
            }
            touched.clear();
            if added == 0 {
                continue;
            }
            let (m, n) = (mass.add(&gain), size + added);
            let improves = cmp_ratio(&m, n, &mass, size) == Ordering::Greater;
            let beats = match &best {
                None => true,
                Some((_, bm, bn)) => cmp_ratio(&m, n, bm, *bn) == Ordering::Greater,
            };
            if improves && beats {
                best = Some((ci, m, n));
            }
        }
        match best {
            Some((ci, _, _)) => add_cells(&candidates[ci], &mut in_u, &mut missing, &mut mass, &mut size),
            None => break,
        }
    }
    (0..n_cells).filter(|&c| in_u[c]).collect()
}
