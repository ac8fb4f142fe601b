//! Plan resolution and execution for each subcommand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dyadic_core::commutator::{
    decompose, norm_ratio_experiment, operator_norm, single_haar_family, verify_case_table, verify_decomposition,
    CaseLabel, NormOptions,
};
use dyadic_core::paraproduct::{
    bmo_norm, depth_label, empirical_paraproduct_bound, BmoMode, ParaproductSpec, EXACT_CELL_CAP,
};
use dyadic_core::random::{random_haar_function, CoeffSupport};
use dyadic_core::riesz::span_residual_experiment;
use dyadic_core::shift::{ShiftMap, TensorShift, DEFAULT_MATRIX_CAP};
use dyadic_core::{GridSpec, Signature, StepFunction, VectorSignature};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Family, FunctionSpec, GridConfig, RieszConfig, RunConfig, SeedSpec, ShiftSpec};
use crate::output::{fmt_f64, Table};
use crate::{CliError, Command, Env};

/// Smallest allowed `horizon_margin` for verify-decomposition.
pub const MIN_HORIZON_MARGIN: u32 = 2;
/// Largest lattice (points) accepted by the riesz command.
pub const RIESZ_POINT_CAP: usize = 1024;

pub struct Report {
    pub table: Table,
    pub summary: Value,
    pub passed: bool,
    pub messages: Vec<String>,
    pub warnings: Vec<String>,
}

impl Report {
    fn new(table: Table) -> Self {
        Report { table, summary: json!({}), passed: true, messages: Vec::new(), warnings: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NamedShift {
    pub label: String,
    pub map: ShiftMap,
}

/// A fully resolved run, printed by `--dry-run`.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Plan {
    VerifyCases { dim: usize, depths: Vec<u32>, shifts: Vec<NamedShift> },
    VerifyDecomposition { grid: GridSpec, shifts: Vec<NamedShift>, seeds: Vec<u64>, horizon_margin: u32, terms: usize },
    Bmo { grid: GridSpec, function: FunctionSpec, seeds: Vec<u64>, modes: Vec<BmoMode> },
    Opnorm { grid: GridSpec, shifts: Vec<NamedShift>, function: FunctionSpec, seeds: Vec<u64> },
    Ratio { family: Family, shifts: Vec<NamedShift>, depths: Vec<u32>, seeds: Vec<u64>, fixtures: Option<PathBuf> },
    Riesz { riesz: RieszConfig, seeds: Vec<u64> },
    ParaBound { grid: GridSpec, paraproduct: ParaproductSpec, seeds: Vec<u64> },
}

fn core_err(e: dyadic_core::DyadicError) -> CliError {
    use dyadic_core::DyadicError as E;
    match e {
        E::CapExceeded { .. } => CliError::Cap(e.to_string()),
        E::NoConvergence { .. } => CliError::Compute(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn named(specs: &[ShiftSpec], dims: &[usize], base: &Path) -> Result<Vec<NamedShift>, CliError> {
    specs.iter().zip(dims).map(|(s, &d)| Ok(NamedShift { label: s.label(), map: s.resolve(d, base)? })).collect()
}

fn seeds_or(cfg: &RunConfig, default: SeedSpec) -> Vec<u64> {
    cfg.seeds.clone().unwrap_or(default).resolve()
}

fn default_shifts() -> Vec<ShiftSpec> {
    vec![ShiftSpec::preset("first-child"), ShiftSpec::preset("rotating")]
}

fn one_per_param(cfg: &RunConfig, grid: &GridSpec, base: &Path) -> Result<Vec<NamedShift>, CliError> {
    let specs = cfg.shifts.clone().unwrap_or_else(|| vec![ShiftSpec::preset("first-child"); grid.params()]);
    if specs.len() != grid.params() {
        return Err(CliError::Config(format!("{} shifts given for {} parameters", specs.len(), grid.params())));
    }
    named(&specs, &grid.dims, base)
}

fn check_cells(grid: &GridSpec) -> Result<(), CliError> {
    let n = grid.total_cells();
    if n > DEFAULT_MATRIX_CAP {
        return Err(CliError::Cap(format!("grid has {n} cells, cap {DEFAULT_MATRIX_CAP}")));
    }
    Ok(())
}

pub fn resolve(cmd: Command, cfg: &RunConfig, base: &Path) -> Result<Plan, CliError> {
    match cmd {
        Command::VerifyCases => {
            let g = cfg.grid.clone().unwrap_or_else(|| GridConfig::one(1, 4));
            if g.dims.len() != 1 || g.depths.len() != 1 {
                return Err(CliError::Config("verify-cases needs a one-parameter grid".into()));
            }
            let (dim, depth) = (g.dims[0], g.depths[0]);
            if !(1..=3).contains(&dim) {
                return Err(CliError::Config(format!("dimension {dim} not in 1..=3")));
            }
            let cap = match dim {
                1 => 4,
                2 => 2,
                _ => 1,
            };
            if depth > cap {
                return Err(CliError::Cap(format!(
                    "verify-cases at dimension {dim} allows depth <= {cap}, got {depth}"
                )));
            }
            let specs = cfg.shifts.clone().unwrap_or_else(default_shifts);
            let shifts = named(&specs, &vec![dim; specs.len()], base)?;
            Ok(Plan::VerifyCases { dim, depths: (1..=depth).collect(), shifts })
        }
        Command::VerifyDecomposition => {
            let grid = cfg.grid.clone().unwrap_or_else(|| GridConfig::one(1, 5)).resolve()?;
            check_cells(&grid)?;
            let margin = cfg.horizon_margin.unwrap_or(MIN_HORIZON_MARGIN);
            if margin < MIN_HORIZON_MARGIN {
                return Err(CliError::Config(format!(
                    "horizon_margin = {margin} violates the truncation horizon: inputs must leave at least \
                     {MIN_HORIZON_MARGIN} finest levels free so that Q f and Q(b f) never reach the depth \
                     where the shift is cut off"
                )));
            }
            let shifts = one_per_param(cfg, &grid, base)?;
            let terms = decompose(&shifts.iter().map(|s| s.map.clone()).collect::<Vec<_>>()).terms.len();
            Ok(Plan::VerifyDecomposition {
                seeds: seeds_or(cfg, SeedSpec::range(0, 100)),
                grid,
                shifts,
                horizon_margin: margin,
                terms,
            })
        }
        Command::Bmo => {
            let grid = cfg.grid.clone().unwrap_or(GridConfig { dims: vec![1, 1], depths: vec![2, 2] }).resolve()?;
            let function = cfg.function.clone().unwrap_or(FunctionSpec::Random {});
            let modes = match &cfg.bmo_modes {
                Some(m) => m.clone(),
                None if grid.total_cells() <= EXACT_CELL_CAP => {
                    vec![BmoMode::Exact, BmoMode::RectangleSup, BmoMode::Greedy]
                }
                None => vec![BmoMode::RectangleSup, BmoMode::Greedy],
            };
            if modes.contains(&BmoMode::Exact) && grid.total_cells() > EXACT_CELL_CAP {
                return Err(CliError::Cap(format!(
                    "exact BMO enumerates subsets of {} cells; cap {EXACT_CELL_CAP}",
                    grid.total_cells()
                )));
            }
            let seeds = if function.is_seeded() { seeds_or(cfg, SeedSpec::range(0, 10)) } else { vec![0] };
            Ok(Plan::Bmo { grid, function, seeds, modes })
        }
        Command::Opnorm => {
            let grid = cfg.grid.clone().unwrap_or_else(|| GridConfig::one(1, 4)).resolve()?;
            check_cells(&grid)?;
            let shifts = one_per_param(cfg, &grid, base)?;
            let function = cfg.function.clone().unwrap_or(FunctionSpec::Random {});
            let seeds = if function.is_seeded() { seeds_or(cfg, SeedSpec::range(0, 10)) } else { vec![0] };
            Ok(Plan::Opnorm { grid, shifts, function, seeds })
        }
        Command::Ratio => {
            let family = cfg.family.unwrap_or(Family::SingleHaar);
            let dim = cfg.grid.as_ref().map_or(1, |g| g.dims[0]);
            if family == Family::SingleHaar && dim != 1 {
                return Err(CliError::Config("the single-Haar family is one-dimensional".into()));
            }
            let specs = cfg.shifts.clone().unwrap_or_else(|| match family {
                Family::SingleHaar => default_shifts(),
                Family::Random => vec![ShiftSpec::preset("first-child")],
            });
            let shifts = named(&specs, &vec![dim; specs.len()], base)?;
            let depths = cfg.depths.clone().unwrap_or_else(|| match family {
                Family::SingleHaar => vec![3, 4, 5, 6],
                Family::Random => vec![5, 6],
            });
            for &d in &depths {
                let cells = 1usize.checked_shl(d * dim as u32).filter(|&c| c <= DEFAULT_MATRIX_CAP);
                if d == 0 || cells.is_none() {
                    return Err(CliError::Cap(format!("depth {d} at dimension {dim} exceeds the matrix cap")));
                }
            }
            let seeds = match family {
                Family::SingleHaar => Vec::new(),
                Family::Random => seeds_or(cfg, SeedSpec::range(0, 50)),
            };
            Ok(Plan::Ratio { family, shifts, depths, seeds, fixtures: cfg.fixtures.as_ref().map(|p| base.join(p)) })
        }
        Command::Riesz => {
            let riesz = cfg.riesz.clone().unwrap_or(RieszConfig { j: 1, dim: 1, depth: 4, m_max: 64 });
            if riesz.j > riesz.dim || riesz.dim == 0 || riesz.depth == 0 {
                return Err(CliError::Config(format!("riesz needs 0 <= j <= dim, dim >= 1, depth >= 1: {riesz:?}")));
            }
            let points = 1usize.checked_shl(riesz.depth * riesz.dim as u32).unwrap_or(usize::MAX);
            if riesz.depth * riesz.dim as u32 >= 32 || points > RIESZ_POINT_CAP {
                return Err(CliError::Cap(format!("{points} lattice points, cap {RIESZ_POINT_CAP}")));
            }
            Ok(Plan::Riesz { seeds: seeds_or(cfg, SeedSpec::range(0, 5)), riesz })
        }
        Command::ParaBound => {
            let grid = cfg.grid.clone().unwrap_or_else(|| GridConfig::one(1, 5)).resolve()?;
            check_cells(&grid)?;
            let paraproduct = match &cfg.paraproduct {
                Some(p) => p.clone(),
                None => {
                    let vs = |b: u8| {
                        VectorSignature::new(grid.dims.iter().map(|&d| Signature::new(d, b & ((1 << d) - 1)).unwrap()))
                    };
                    ParaproductSpec::with_ones(vs(0), vs(0xff), vs(0)).map_err(core_err)?
                }
            };
            if paraproduct.params() != grid.params() {
                return Err(CliError::Config("paraproduct arity does not match the grid".into()));
            }
            if !paraproduct.is_bmo_admissible() {
                return Err(CliError::Config(
                    "paraproduct is not BMO-admissible (b must enter through a strict slot)".into(),
                ));
            }
            Ok(Plan::ParaBound { grid, paraproduct, seeds: seeds_or(cfg, SeedSpec::range(0, 50)) })
        }
    }
}

pub fn execute(plan: &Plan, env: &Env) -> Result<Report, CliError> {
    match plan {
        Plan::VerifyCases { dim, depths, shifts } => verify_cases(*dim, depths, shifts, env),
        Plan::VerifyDecomposition { grid, shifts, seeds, horizon_margin, .. } => {
            verify_decomp(grid, shifts, seeds, *horizon_margin)
        }
        Plan::Bmo { grid, function, seeds, modes } => bmo(grid, function, seeds, modes),
        Plan::Opnorm { grid, shifts, function, seeds } => opnorm(grid, shifts, function, seeds),
        Plan::Ratio { family, shifts, depths, seeds, fixtures } => {
            ratio(*family, shifts, depths, seeds, fixtures.as_deref())
        }
        Plan::Riesz { riesz, seeds } => riesz_cmd(riesz, seeds),
        Plan::ParaBound { grid, paraproduct, seeds } => para_bound(grid, paraproduct, seeds),
    }
}

fn verify_cases(dim: usize, depths: &[u32], shifts: &[NamedShift], env: &Env) -> Result<Report, CliError> {
    let mut rep = Report::new(Table::new(&["shift", "depth", "label", "pairs", "mismatches"]));
    if depths.is_empty() || shifts.is_empty() {
        rep.warnings.push("empty grid: no interval pairs to check".into());
    }
    let mut total = 0;
    let mut mismatches = Vec::new();
    for s in shifts {
        for &depth in depths {
            let g = GridSpec::one(dim, depth).map_err(core_err)?;
            let r = verify_case_table(&g, &s.map, env.case_terms).map_err(core_err)?;
            total += r.pairs;
            let mut bad: BTreeMap<CaseLabel, usize> = BTreeMap::new();
            for m in &r.mismatches {
                *bad.entry(m.label).or_default() += 1;
            }
            for (label, n) in &r.per_label {
                let nb = bad.get(label).copied().unwrap_or(0);
                rep.table.push(vec![
                    s.label.clone(),
                    depth.to_string(),
                    format!("{label:?}"),
                    n.to_string(),
                    nb.to_string(),
                ]);
            }
            for m in r.mismatches {
                rep.messages.push(format!(
                    "mismatch [{}, depth {depth}] {:?}: I = {} eps = {}, I' = {} eps' = {}\n  terms: {}\n  closed form: {}\n  direct: {}",
                    s.label,
                    m.label,
                    m.i,
                    m.eps,
                    m.i_prime,
                    m.eps_prime,
                    m.terms.join("; "),
                    m.closed_form.join(" "),
                    m.direct.join(" ")
                ));
                mismatches.push(json!({ "shift": s.label, "depth": depth, "mismatch": m }));
            }
        }
    }
    rep.passed = mismatches.is_empty();
    rep.messages.insert(0, format!("verify-cases: {total} pairs, {} mismatches", mismatches.len()));
    rep.summary = json!({ "pairs": total, "mismatches": mismatches });
    Ok(rep)
}

fn verify_decomp(grid: &GridSpec, shifts: &[NamedShift], seeds: &[u64], margin: u32) -> Result<Report, CliError> {
    let d = decompose(&shifts.iter().map(|s| s.map.clone()).collect::<Vec<_>>());
    let support = CoeffSupport::with_margin(grid, margin);
    let mut rep = Report::new(Table::new(&["seed", "depth", "terms", "residual_norm_sq"]));
    if grid.depths.iter().any(|&n| n <= margin) {
        rep.warnings.push(format!("horizon_margin {margin} leaves no coefficients at depth {}", depth_label(grid)));
    }
    let rows = seeds
        .par_iter()
        .map(|&s| -> Result<_, CliError> {
            let b = random_haar_function(grid, &support, 2 * s);
            let f = random_haar_function(grid, &support, 2 * s + 1);
            Ok(verify_decomposition(&d, &b, &f).map_err(core_err)?.l2_norm_sq())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut failures = 0;
    for (s, r) in seeds.iter().zip(rows) {
        failures += usize::from(!r.is_zero());
        rep.table.push(vec![s.to_string(), depth_label(grid), d.terms.len().to_string(), r.to_string()]);
    }
    rep.passed = failures == 0;
    rep.messages.push(format!(
        "verify-decomposition: {} seeds, {} terms, {failures} nonzero residuals",
        seeds.len(),
        d.terms.len()
    ));
    rep.summary = json!({ "seeds": seeds.len(), "terms": d.terms.len(), "failures": failures });
    Ok(rep)
}

fn bmo(grid: &GridSpec, function: &FunctionSpec, seeds: &[u64], modes: &[BmoMode]) -> Result<Report, CliError> {
    let mut rep = Report::new(Table::new(&["seed", "depth", "bmo_mode", "value", "value_sq"]));
    for &s in seeds {
        let b = function.build(grid, s)?;
        for &m in modes {
            let e = bmo_norm(&b, m).map_err(core_err)?;
            rep.table.push(vec![
                s.to_string(),
                depth_label(grid),
                m.name().into(),
                fmt_f64(Some(e.value)),
                e.value_sq.to_string(),
            ]);
        }
    }
    rep.messages.push(format!("bmo: {} rows", rep.table.rows.len()));
    Ok(rep)
}

fn tensor(shifts: &[NamedShift]) -> TensorShift {
    TensorShift::new(shifts.iter().map(|s| Some(s.map.clone())).collect())
}

fn opnorm(grid: &GridSpec, shifts: &[NamedShift], function: &FunctionSpec, seeds: &[u64]) -> Result<Report, CliError> {
    let q = tensor(shifts);
    let mut rep = Report::new(Table::new(&["seed", "depth", "op_norm"]));
    let funcs = seeds.iter().map(|&s| function.build(grid, s)).collect::<Result<Vec<StepFunction>, _>>()?;
    let norms = funcs
        .par_iter()
        .map(|b| operator_norm(b, &q, NormOptions::default()).map_err(core_err))
        .collect::<Result<Vec<_>, _>>()?;
    for (s, n) in seeds.iter().zip(norms) {
        rep.table.push(vec![s.to_string(), depth_label(grid), fmt_f64(Some(n))]);
    }
    rep.messages.push(format!("opnorm: {} rows", rep.table.rows.len()));
    Ok(rep)
}

/// The subset of the fixture file this command reads.
#[derive(Debug, Deserialize)]
struct RatioFixtures {
    single_haar: Vec<FixtureRow>,
}

#[derive(Debug, Deserialize)]
struct FixtureRow {
    preset: String,
    cube: String,
    depth: u32,
    ratio: f64,
}

pub const FIXTURE_TOL: f64 = 1e-8;

fn ratio(
    family: Family,
    shifts: &[NamedShift],
    depths: &[u32],
    seeds: &[u64],
    fixtures: Option<&Path>,
) -> Result<Report, CliError> {
    let mut rep = Report::new(Table::new(&["shift", "depth", "member", "op_norm", "bmo", "ratio", "bmo_mode"]));
    let opts = NormOptions::default();
    let fx = match fixtures {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("fixtures {}: {e}", p.display())))?;
            let f: RatioFixtures =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("fixtures {}: {e}", p.display())))?;
            Some(f)
        }
        None => None,
    };
    let mut compared = 0;
    let mut failures = Vec::new();
    for s in shifts {
        match family {
            Family::SingleHaar => {
                let q = TensorShift::new(vec![Some(s.map.clone())]);
                for &depth in depths {
                    for (cube, b) in single_haar_family(depth).map_err(core_err)? {
                        let bmo = bmo_norm(&b, BmoMode::Greedy).map_err(core_err)?.value;
                        let op = operator_norm(&b, &q, opts).map_err(core_err)?;
                        let r = op / bmo;
                        if let Some(fx) = &fx {
                            match fx
                                .single_haar
                                .iter()
                                .find(|f| f.preset == s.label && f.cube == cube && f.depth == depth)
                            {
                                Some(f) => {
                                    compared += 1;
                                    if (f.ratio - r).abs() > FIXTURE_TOL {
                                        failures.push(format!(
                                            "{} {cube} depth {depth}: {r} vs fixture {}",
                                            s.label, f.ratio
                                        ));
                                    }
                                }
                                None => rep.warnings.push(format!("no fixture for {} {cube} depth {depth}", s.label)),
                            }
                        }
                        rep.table.push(vec![
                            s.label.clone(),
                            depth.to_string(),
                            cube,
                            fmt_f64(Some(op)),
                            fmt_f64(Some(bmo)),
                            fmt_f64(Some(r)),
                            BmoMode::Greedy.name().into(),
                        ]);
                    }
                }
            }
            Family::Random => {
                for row in norm_ratio_experiment(&s.map, seeds, depths, opts).map_err(core_err)? {
                    rep.table.push(vec![
                        s.label.clone(),
                        row.depth.to_string(),
                        format!("seed {}", row.seed),
                        fmt_f64(row.ratio.map(|_| row.op_norm)),
                        fmt_f64(Some(row.bmo)),
                        fmt_f64(row.ratio),
                        row.bmo_mode.name().into(),
                    ]);
                }
            }
        }
    }
    if fx.is_some() && family == Family::Random {
        rep.warnings.push("fixtures are compared for the single-haar family only".into());
    }
    rep.passed = failures.is_empty();
    rep.messages.push(format!(
        "ratio: {} rows, {compared} compared with fixtures, {} outside {FIXTURE_TOL:e}",
        rep.table.rows.len(),
        failures.len()
    ));
    rep.messages.extend(failures.iter().map(|f| format!("fixture mismatch: {f}")));
    rep.summary = json!({ "compared": compared, "failures": failures });
    Ok(rep)
}

fn riesz_cmd(riesz: &RieszConfig, seeds: &[u64]) -> Result<Report, CliError> {
    let rows = span_residual_experiment(riesz.j, riesz.dim, riesz.depth, riesz.m_max, seeds).map_err(core_err)?;
    let mut rep = Report::new(Table::new(&["seed", "M", "residual"]));
    let mut finals = Vec::new();
    for r in &rows {
        rep.table.push(vec![r.seed.to_string(), r.m.to_string(), fmt_f64(Some(r.residual))]);
        if r.m == riesz.m_max {
            finals.push(r.residual);
        }
    }
    let mean = (!finals.is_empty()).then(|| finals.iter().sum::<f64>() / finals.len() as f64);
    rep.messages.push(format!("riesz: {} seeds, mean residual at M = {}: {}", seeds.len(), riesz.m_max, fmt_f64(mean)));
    rep.summary = json!({ "mean_final_residual": mean });
    Ok(rep)
}

fn para_bound(grid: &GridSpec, spec: &ParaproductSpec, seeds: &[u64]) -> Result<Report, CliError> {
    let r = empirical_paraproduct_bound(spec, grid, seeds).map_err(core_err)?;
    let mut rep = Report::new(Table::new(&["seed", "depth", "ratio", "bmo_mode"]));
    for row in &r.rows {
        rep.table.push(vec![row.seed.to_string(), row.depth.clone(), fmt_f64(row.ratio), row.bmo_mode.name().into()]);
    }
    rep.messages.push(format!(
        "para-bound: {} seeds, {} skipped, max ratio {}",
        seeds.len(),
        r.skipped,
        r.max.map(|(s, x)| format!("{x:?} (seed {s})")).unwrap_or_else(|| "n/a".into())
    ));
    rep.summary = json!({ "max": r.max, "skipped": r.skipped });
    Ok(rep)
}
