//! Oracles and fixture types shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use dyadic_core::dyadic::GridSpec;
use dyadic_core::paraproduct::{bmo_norm, BmoMode};
use dyadic_core::random::{random_haar_function, CoeffSupport};
use dyadic_core::riesz::{sample_shift_matrix, RandomGridSample};
use dyadic_core::shift::ShiftMap;
use dyadic_core::StepFunction;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const SEEDS: u64 = 50;
/// Allowed growth of the random-family maximum from depth 5 to depth 6.
pub const GROWTH_ENVELOPE: f64 = 1.10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleHaarRow {
    pub preset: String,
    pub cube: String,
    pub depth: u32,
    pub op_norm: f64,
    pub bmo: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedMax {
    pub depth: u32,
    pub seed: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpanFixture {
    pub n: usize,
    pub m: usize,
    pub seeds: Vec<u64>,
    pub mean_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormFixtures {
    pub single_haar: Vec<SingleHaarRow>,
    pub random_max: Vec<SeedMax>,
    pub growth_envelope: f64,
    pub riesz_span: SpanFixture,
}

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/norm_ratios.json")
}

pub fn load_fixtures() -> NormFixtures {
    let s = std::fs::read_to_string(fixture_path()).expect("fixture file");
    serde_json::from_str(&s).expect("fixture json")
}

pub fn preset(name: &str) -> ShiftMap {
    match name {
        "first-child" => ShiftMap::first_child(1),
        "rotating" => ShiftMap::rotating(1),
        _ => panic!("unknown preset {name}"),
    }
}

/// Largest singular value of `M_b Q − Q M_b` on cell values, by dense SVD.
/// The cell matrix of `Q` comes from the sampled-grid path at `t = 1, y = 0`.
pub fn svd_commutator_norm(b: &StepFunction, map: &ShiftMap) -> f64 {
    let g = b.grid();
    let depth = g.depths[0];
    let n = g.total_cells();
    let q =
        DMatrix::from_row_slice(n, n, &sample_shift_matrix(&RandomGridSample::canonical(map.clone()), depth).unwrap());
    let mb = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(b.to_f64()));
    let c = &mb * &q - &q * &mb;
    c.singular_values().max()
}

pub fn random_b(depth: u32, seed: u64) -> StepFunction {
    let g = GridSpec::one(1, depth).unwrap();
    random_haar_function(&g, &CoeffSupport::full(&g), seed)
}

pub fn greedy_bmo(b: &StepFunction) -> f64 {
    bmo_norm(b, BmoMode::Greedy).unwrap().value
}
