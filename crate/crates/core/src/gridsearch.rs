//! Exhaustive grid exclusion with rigorous error bounds.
//!
//! Every phase `α` is confined to one of `R` intervals of width `2π/R` and
//! replaced by the interval midpoint `2πj/R`, so the true phase differs from
//! its grid value by at most `π/R`. With `|e^{iδ} - 1| ≤ |δ|` and the triangle
//! inequality, the gridded inner product `s̃` of two vectors differs from the
//! true one by at most `B = (1/d) Σ_k δ_k`, where `δ_k` adds `π/R` for each
//! gridded phase in component `k`. A cell survives when every condition holds
//! up to its bound; if no cell survives, no constellation exists.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{ConstellationSpec, Role, VectorSlot};
use crate::{Error, Result};

/// Default upper limit on the number of enumerated cells.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// Default number of surviving cells kept as witnesses.
pub const DEFAULT_WITNESSES: usize = 16;

/// Grid value of index `j` at resolution `r`: `2πj/r`.
pub fn grid_value(j: u32, r: u32) -> f64 {
    2.0 * PI * f64::from(j) / f64::from(r)
}

/// Index of the grid cell whose interval contains `alpha`.
pub fn cell_of(alpha: f64, r: u32) -> u32 {
    let t = alpha.rem_euclid(2.0 * PI) / (2.0 * PI) * f64::from(r);
    (t.round() as u32) % r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    spec: ConstellationSpec,
    resolutions: Vec<u32>,
}

impl GridSpec {
    pub fn uniform(spec: ConstellationSpec, r: u32) -> Result<Self> {
        let n = spec.num_phases();
        Self::per_variable(spec, vec![r; n])
    }

    pub fn per_variable(spec: ConstellationSpec, resolutions: Vec<u32>) -> Result<Self> {
        if resolutions.len() != spec.num_phases() {
            return Err(Error::LengthMismatch {
                expected: spec.num_phases(),
                got: resolutions.len(),
            });
        }
        if let Some(&r) = resolutions.iter().find(|&&r| r < 2) {
            return Err(Error::InvalidSpec(format!("grid resolution {r} is below 2")));
        }
        Ok(Self { spec, resolutions })
    }

    pub fn spec(&self) -> &ConstellationSpec {
        &self.spec
    }

    pub fn resolutions(&self) -> &[u32] {
        &self.resolutions
    }

    /// Number of cells, saturating at `u128::MAX`.
    pub fn total_cells(&self) -> u128 {
        self.resolutions
            .iter()
            .try_fold(1u128, |acc, &r| acc.checked_mul(u128::from(r)))
            .unwrap_or(u128::MAX)
    }

    fn phase_error(&self, slot: &VectorSlot, k: usize) -> f64 {
        match slot.phase(self.spec.d(), k) {
            Some(p) => PI / f64::from(self.resolutions[p]),
            None => 0.0,
        }
    }
}

/// Error bound for the inner product of the vectors in slots `a` and `b`.
pub fn condition_bound(a: &VectorSlot, b: &VectorSlot, grid: &GridSpec) -> f64 {
    let d = grid.spec.d();
    let sum: f64 = (1..d).map(|k| grid.phase_error(a, k) + grid.phase_error(b, k)).sum();
    sum / d as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionBound {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub role: Role,
    pub bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ExcludedEverywhere,
    SurvivorsExist,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Grid index per phase; the phase value is `2π·index/R`.
    pub indices: Vec<u32>,
    pub phases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub spec: String,
    pub resolutions: Vec<u32>,
    pub total_cells: u128,
    pub surviving: u64,
    pub witnesses: Vec<Witness>,
    pub bounds: Vec<ConditionBound>,
    pub verdict: Verdict,
    pub wall_time_s: f64,
}

impl ExclusionReport {
    pub fn is_excluded(&self) -> bool {
        self.verdict == Verdict::ExcludedEverywhere
    }
}

fn verdict(surviving: u64) -> Verdict {
    if surviving == 0 {
        Verdict::ExcludedEverywhere
    } else {
        Verdict::SurvivorsExist
    }
}

/// The `{1,1,1,1}_2` exclusion written out directly:
/// a cell `(α_j, β_j')` survives iff
/// `||cos(α/2)| - 1/√2| ≤ π/(2R)`, the same for `β`, and
/// `||cos((α-β)/2)| - 1/√2| ≤ π/R`. All survivors are listed.
pub fn exclusion_check_qubit(r: u32) -> Result<ExclusionReport> {
    if r < 2 {
        return Err(Error::InvalidSpec(format!("grid resolution {r} is below 2")));
    }
    let start = Instant::now();
    let rf = f64::from(r);
    let single = PI / (2.0 * rf);
    let diff = PI / rf;
    let target = 0.5f64.sqrt();
    let ok = |x: f64, b: f64| ((x / 2.0).cos().abs() - target).abs() <= b;

    let mut witnesses = Vec::new();
    for j in 0..r {
        let alpha = grid_value(j, r);
        if !ok(alpha, single) {
            continue;
        }
        for jp in 0..r {
            let beta = grid_value(jp, r);
            if ok(beta, single) && ok(alpha - beta, diff) {
                witnesses.push(Witness {
                    indices: vec![j, jp],
                    phases: vec![alpha, beta],
                });
            }
        }
    }
    let surviving = witnesses.len() as u64;
    let bound = |a, b, bound| ConditionBound {
        a,
        b,
        role: Role::Unbiasedness,
        bound,
    };
    Ok(ExclusionReport {
        spec: "{1,1,1,1}_2".into(),
        resolutions: vec![r, r],
        total_cells: u128::from(r) * u128::from(r),
        surviving,
        witnesses,
        bounds: vec![
            bound((1, 0), (2, 0), single),
            bound((1, 0), (3, 0), single),
            bound((2, 0), (3, 0), diff),
        ],
        verdict: verdict(surviving),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Smallest `R` in `2..=max_r` at which the qubit grid excludes every cell.
pub fn minimal_qubit_resolution(max_r: u32) -> Option<u32> {
    (2..=max_r).find(|&r| exclusion_check_qubit(r).map(|rep| rep.is_excluded()).unwrap_or(false))
}

struct Condition {
    /// First phase index of each vector (components follow contiguously).
    a: Option<usize>,
    b: Option<usize>,
    orthogonal: bool,
    bound: f64,
}

/// Enumerates every cell of `grid` and tests all pair conditions.
///
/// Refuses with [`Error::BudgetExceeded`] when the grid has more than
/// `budget` cells. At most `max_witnesses` surviving cells are reported,
/// the ones with the smallest cell indices.
pub fn exclusion_search(grid: &GridSpec, budget: u128, max_witnesses: usize) -> Result<ExclusionReport> {
    let total = grid.total_cells();
    if total > budget {
        return Err(Error::BudgetExceeded { required: total, budget });
    }
    let total = u64::try_from(total).map_err(|_| Error::BudgetExceeded { required: total, budget })?;
    let start = Instant::now();
    let spec = grid.spec();
    let d = spec.d();
    let layout = spec.layout();

    let mut bounds = Vec::new();
    let mut conditions = Vec::new();
    for (i, a) in layout.iter().enumerate() {
        for b in &layout[i + 1..] {
            let role = if a.set == b.set { Role::Orthogonality } else { Role::Unbiasedness };
            let bound = condition_bound(a, b, grid);
            bounds.push(ConditionBound {
                a: (a.set, a.index),
                b: (b.set, b.index),
                role,
                bound,
            });
            conditions.push(Condition {
                a: a.free.map(|v| v * (d - 1)),
                b: b.free.map(|v| v * (d - 1)),
                orthogonal: role == Role::Orthogonality,
                bound,
            });
        }
    }

    let tables: Vec<Vec<Complex64>> = grid
        .resolutions()
        .iter()
        .map(|&r| (0..r).map(|j| Complex64::from_polar(1.0, grid_value(j, r))).collect())
        .collect();

    let threads = rayon::current_num_threads() as u64;
    let chunk = (total / (threads * 16)).clamp(1, 1 << 20);
    let nchunks = total.div_ceil(chunk);
    let ctx = Ctx {
        d,
        radices: grid.resolutions(),
        tables: &tables,
        conditions: &conditions,
        target: 1.0 / (d as f64).sqrt(),
    };

    let parts: Vec<(u64, Vec<u64>)> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            ctx.scan(lo, hi, max_witnesses)
        })
        .collect();

    let mut surviving = 0u64;
    let mut cells = Vec::new();
    for (count, w) in parts {
        surviving += count;
        for cell in w {
            if cells.len() < max_witnesses {
                cells.push(cell);
            }
        }
    }
    let witnesses = cells
        .into_iter()
        .map(|cell| {
            let indices = decode(cell, grid.resolutions());
            let phases = indices.iter().zip(grid.resolutions()).map(|(&j, &r)| grid_value(j, r)).collect();
            Witness { indices, phases }
        })
        .collect();

    Ok(ExclusionReport {
        spec: spec.to_string(),
        resolutions: grid.resolutions().to_vec(),
        total_cells: u128::from(total),
        surviving,
        witnesses,
        bounds,
        verdict: verdict(surviving),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Mixed-radix digits of `cell`, last phase varying fastest.
fn decode(mut cell: u64, radices: &[u32]) -> Vec<u32> {
    let mut out = vec![0; radices.len()];
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = (cell % u64::from(r)) as u32;
        cell /= u64::from(r);
    }
    out
}

struct Ctx<'a> {
    d: usize,
    radices: &'a [u32],
    tables: &'a [Vec<Complex64>],
    conditions: &'a [Condition],
    target: f64,
}

impl Ctx<'_> {
    fn scan(&self, lo: u64, hi: u64, keep: usize) -> (u64, Vec<u64>) {
        let mut digits = decode(lo, self.radices);
        let mut z: Vec<Complex64> = digits.iter().zip(self.tables).map(|(&j, t)| t[j as usize]).collect();
        let mut count = 0u64;
        let mut found = Vec::new();
        for cell in lo..hi {
            if self.survives(&z) {
                count += 1;
                if found.len() < keep {
                    found.push(cell);
                }
            }
            // odometer step
            for p in (0..digits.len()).rev() {
                digits[p] += 1;
                if digits[p] == self.radices[p] {
                    digits[p] = 0;
                    z[p] = self.tables[p][0];
                } else {
                    z[p] = self.tables[p][digits[p] as usize];
                    break;
                }
            }
        }
        (count, found)
    }

    fn survives(&self, z: &[Complex64]) -> bool {
        let one = Complex64::new(1.0, 0.0);
        let dinv = 1.0 / self.d as f64;
        self.conditions.iter().all(|c| {
            let mut s = one;
            for k in 0..self.d - 1 {
                let u = c.a.map_or(one, |p| z[p + k]);
                let v = c.b.map_or(one, |p| z[p + k]);
                s += u.conj() * v;
            }
            let m = s.norm() * dinv;
            if c.orthogonal {
                m <= c.bound
            } else {
                (m - self.target).abs() <= c.bound
            }
        })
    }
}
