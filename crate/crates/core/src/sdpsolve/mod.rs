//! Primal-dual interior-point solver for semidefinite programs in mixed form
//!
//! ```text
//! minimize    c·y + offset
//! subject to  A y = b
//!             M0_k + Σ_i y_i M_ik ⪰ 0    for every block k
//! ```
//!
//! with dual
//!
//! ```text
//! maximize    b·λ - Σ_k ⟨M0_k, X_k⟩ + offset
//! subject to  Σ_k ⟨M_ik, X_k⟩ + (Aᵀλ)_i = c_i,   X_k ⪰ 0.
//! ```
//!
//! The method is an infeasible-start path-following scheme with the HKM
//! search direction and Mehrotra predictor-corrector steps. Equalities stay in
//! the Newton system; linearly dependent rows of `A` are removed first.

pub mod sdpa;

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sparse symmetric matrix stored by its upper triangle (`i <= j`), 0-based.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v` at `(i, j)` and its mirror.
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((i, j, v));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        self.add_to(&mut m, 1.0);
        m
    }

    /// `m += s · self`.
    pub fn add_to(&self, m: &mut DMatrix<f64>, s: f64) {
        for &(i, j, v) in &self.entries {
            m[(i, j)] += s * v;
            if i != j {
                m[(j, i)] += s * v;
            }
        }
    }

    /// Frobenius inner product `⟨self, x⟩` for symmetric `x`.
    pub fn dot(&self, x: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * x[(i, j)] } else { v * (x[(i, j)] + x[(j, i)]) })
            .sum()
    }
}

/// One PSD constraint `M0 + Σ y_i M_i ⪰ 0` of side `dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub constant: SparseSym,
    /// One matrix per decision variable; empty where a variable is absent.
    pub coeffs: Vec<SparseSym>,
}

impl Block {
    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.to_dense(self.dim);
        for (mi, &yi) in self.coeffs.iter().zip(y) {
            if yi != 0.0 {
                mi.add_to(&mut m, yi);
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpInstance {
    pub n: usize,
    pub c: Vec<f64>,
    /// Constant added to the objective.
    pub offset: f64,
    /// Sparse rows of `A` as `(column, value)` pairs.
    pub a: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub blocks: Vec<Block>,
}

impl SdpInstance {
    pub fn validate(&self) -> Result<()> {
        if self.c.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: self.c.len(),
            });
        }
        if self.a.len() != self.b.len() {
            return Err(Error::LengthMismatch {
                expected: self.a.len(),
                got: self.b.len(),
            });
        }
        for row in &self.a {
            if let Some(&(j, _)) = row.iter().find(|(j, _)| *j >= self.n) {
                return Err(Error::IndexOutOfRange { index: j, len: self.n });
            }
        }
        for blk in &self.blocks {
            if blk.coeffs.len() != self.n {
                return Err(Error::LengthMismatch {
                    expected: self.n,
                    got: blk.coeffs.len(),
                });
            }
            for m in std::iter::once(&blk.constant).chain(&blk.coeffs) {
                if let Some(&(_, j, _)) = m.entries.iter().find(|e| e.1 >= blk.dim || e.0 > e.1) {
                    return Err(Error::IndexOutOfRange { index: j, len: blk.dim });
                }
            }
        }
        Ok(())
    }

    pub fn objective(&self, y: &[f64]) -> f64 {
        dot(&self.c, y) + self.offset
    }

    /// Largest `|A y - b|` over all rows.
    pub fn equality_residual(&self, y: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, &bi)| (row.iter().map(|&(j, v)| v * y[j]).sum::<f64>() - bi).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    PrimalInfeasibleCertificate,
    MaxIterations,
    NumericalTrouble,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Starting iterate is `X = Z = initial_scale · I`.
    pub initial_scale: f64,
    /// Fraction of the distance to the PSD boundary taken per step.
    pub step_fraction: f64,
    /// Relative residual norm below which an equality row counts as dependent.
    pub dependency_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            initial_scale: 1e2,
            step_fraction: 0.95,
            dependency_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateLog {
    pub iter: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub mu: f64,
    /// Largest violation of `A y = b` and of `Z = M(y)`.
    pub primal_infeasibility: f64,
    /// Largest violation of the dual equalities.
    pub dual_infeasibility: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

impl IterateLog {
    pub fn feasible(&self, tol: f64) -> bool {
        self.primal_infeasibility <= tol && self.dual_infeasibility <= tol
    }
}

/// Symmetric matrix serialized row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseBlock {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl DenseBlock {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            dim: m.nrows(),
            data: m.transpose().as_slice().to_vec(),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: Status,
    pub y: Vec<f64>,
    /// Dual matrices, one per block.
    pub x: Vec<DenseBlock>,
    /// Equality multipliers, one per original row (zero for removed rows).
    pub lambda: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub relative_gap: f64,
    pub equality_residual: f64,
    pub dual_residual: f64,
    /// Smallest eigenvalue of `M0 + Σ y_i M_i` per block.
    pub min_eigenvalues: Vec<f64>,
    pub min_eigenvalues_x: Vec<f64>,
    pub removed_rows: Vec<usize>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub log: Vec<IterateLog>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
}

impl SdpSolution {
    /// Lower bound on the optimum carried by the dual iterate.
    pub fn lower_bound(&self) -> f64 {
        self.dual_objective
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Orthonormal basis of the row space of `A`, with the matching right-hand side.
struct Equalities {
    /// Orthonormal rows `Q = C A`.
    q: Vec<Vec<f64>>,
    beta: Vec<f64>,
    /// Combination coefficients over the original rows (dense, kept × rows).
    comb: Vec<Vec<f64>>,
    removed: Vec<usize>,
}

enum Reduced {
    Ok(Equalities),
    Inconsistent { row: usize, residual: f64 },
}

/// Gram-Schmidt with reorthogonalization over the rows of `A`.
fn reduce_equalities(inst: &SdpInstance, tol: f64) -> Reduced {
    let n = inst.n;
    let rows = inst.a.len();
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut beta = Vec::new();
    let mut comb: Vec<Vec<f64>> = Vec::new();
    let mut removed = Vec::new();
    for (r, row) in inst.a.iter().enumerate() {
        let mut v = vec![0.0; n];
        for &(j, a) in row {
            v[j] += a;
        }
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut rhs = inst.b[r];
        let mut cvec = vec![0.0; rows];
        cvec[r] = 1.0;
        if norm0 == 0.0 {
            if rhs.abs() > tol.max(1e-12) {
                return Reduced::Inconsistent { row: r, residual: rhs };
            }
            removed.push(r);
            continue;
        }
        for _ in 0..2 {
            let coefs: Vec<f64> = q.par_iter().map(|qk| dot(qk, &v)).collect();
            for (k, &t) in coefs.iter().enumerate() {
                if t != 0.0 {
                    for (vi, qi) in v.iter_mut().zip(&q[k]) {
                        *vi -= t * qi;
                    }
                    rhs -= t * beta[k];
                    for (ci, ck) in cvec.iter_mut().zip(&comb[k]) {
                        *ci -= t * ck;
                    }
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= tol * norm0 {
            let scale = 1.0 + inst.b[r].abs();
            if rhs.abs() > 1e3 * tol * scale.max(norm0) {
                return Reduced::Inconsistent { row: r, residual: rhs };
            }
            removed.push(r);
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        cvec.iter_mut().for_each(|x| *x /= norm);
        q.push(v);
        beta.push(rhs / norm);
        comb.push(cvec);
    }
    Reduced::Ok(Equalities { q, beta, comb, removed })
}

/// Per-block coefficient lists for the Schur complement.
struct BlockData<'a> {
    dim: usize,
    coeffs: &'a [SparseSym],
}

/// `H_ij = Σ_k tr(M_ik X_k M_jk W_k)`, `W = Z⁻¹`.
fn schur(blocks: &[BlockData<'_>], x: &[DMatrix<f64>], w: &[DMatrix<f64>], n: usize) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for (k, blk) in blocks.iter().enumerate() {
                let mi = &blk.coeffs[i];
                if mi.is_empty() {
                    continue;
                }
                // P = W M_i X
                let mut p = DMatrix::<f64>::zeros(blk.dim, blk.dim);
                let (wk, xk) = (&w[k], &x[k]);
                let mut rank1 = |a: usize, b: usize, v: f64| {
                    for c in 0..blk.dim {
                        let s = v * xk[(b, c)];
                        if s != 0.0 {
                            p.column_mut(c).axpy(s, &wk.column(a), 1.0);
                        }
                    }
                };
                for &(a, b, v) in &mi.entries {
                    rank1(a, b, v);
                    if a != b {
                        rank1(b, a, v);
                    }
                }
                for (j, mj) in blk.coeffs.iter().enumerate().skip(i) {
                    if !mj.is_empty() {
                        row[j] += mj.dot(&p.transpose());
                    }
                }
            }
            row
        })
        .collect();
    let mut h = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for j in i..n {
            h[(i, j)] = row[j];
            h[(j, i)] = row[j];
        }
    }
    h
}

fn cholesky_regularized(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut shift = 1e-14 * scale;
    for _ in 0..8 {
        let mut r = m.clone();
        for i in 0..r.nrows() {
            r[(i, i)] += shift;
        }
        if let Some(c) = Cholesky::new(r) {
            return Some(c);
        }
        shift *= 100.0;
    }
    None
}

/// Largest `α ≤ 1/fraction` keeping `S + α dS ⪰ 0`, given `S = L Lᵀ`.
fn max_step(l: &DMatrix<f64>, ds: &DMatrix<f64>) -> f64 {
    let Some(t) = l.solve_lower_triangular(ds) else {
        return 0.0;
    };
    let Some(u) = l.solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    let lam = min_eigenvalue(&sym(u));
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}

#[derive(Clone)]
struct Iterate {
    y: Vec<f64>,
    lambda: Vec<f64>,
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
}

struct Newton {
    dy: DVector<f64>,
    dlambda: DVector<f64>,
    dx: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
}

pub fn solve(inst: &SdpInstance, opts: &SolverOptions) -> Result<SdpSolution> {
    inst.validate()?;
    let start = Instant::now();
    let n = inst.n;
    let eq = match reduce_equalities(inst, opts.dependency_tol) {
        Reduced::Ok(eq) => eq,
        Reduced::Inconsistent { row, residual } => {
            return Ok(SdpSolution {
                status: Status::PrimalInfeasibleCertificate,
                y: vec![0.0; n],
                x: Vec::new(),
                lambda: vec![0.0; inst.a.len()],
                primal_objective: f64::NAN,
                dual_objective: f64::NAN,
                gap: f64::NAN,
                relative_gap: f64::NAN,
                equality_residual: f64::NAN,
                dual_residual: f64::NAN,
                min_eigenvalues: Vec::new(),
                min_eigenvalues_x: Vec::new(),
                removed_rows: Vec::new(),
                iterations: 0,
                wall_time_s: start.elapsed().as_secs_f64(),
                log: Vec::new(),
                message: Some(format!(
                    "equality row {row} is a combination of earlier rows with inconsistent right-hand side (residual {residual:e})"
                )),
            })
        }
    };
    let m = eq.q.len();
    let qmat = DMatrix::from_fn(m, n, |i, j| eq.q[i][j]);
    let beta = DVector::from_column_slice(&eq.beta);
    let blocks: Vec<BlockData<'_>> = inst
        .blocks
        .iter()
        .map(|b| BlockData {
            dim: b.dim,
            coeffs: &b.coeffs,
        })
        .collect();
    let nx: usize = inst.blocks.iter().map(|b| b.dim).sum::<usize>().max(1);

    let mut it = Iterate {
        y: vec![0.0; n],
        lambda: vec![0.0; m],
        x: inst
            .blocks
            .iter()
            .map(|b| DMatrix::identity(b.dim, b.dim) * opts.initial_scale)
            .collect(),
        z: inst
            .blocks
            .iter()
            .map(|b| DMatrix::identity(b.dim, b.dim) * opts.initial_scale)
            .collect(),
    };

    let mut log = Vec::new();
    let mut status = Status::MaxIterations;
    let mut message = None;
    let mut stalled = 0;
    let mut iterations = 0;
    let mut best: Option<(f64, usize, Iterate)> = None;

    loop {
        // residuals
        let rz: Vec<DMatrix<f64>> = inst.blocks.iter().zip(&it.z).map(|(b, z)| b.evaluate(&it.y) - z).collect();
        let qt_lambda = qmat.tr_mul(&DVector::from_column_slice(&it.lambda));
        let rp: Vec<f64> = (0..n)
            .map(|i| {
                let mx: f64 = inst.blocks.iter().zip(&it.x).map(|(b, x)| b.coeffs[i].dot(x)).sum();
                inst.c[i] - mx - qt_lambda[i]
            })
            .collect();
        let ydv = DVector::from_column_slice(&it.y);
        let re = &beta - &qmat * &ydv;
        let xz: f64 = it.x.iter().zip(&it.z).map(|(x, z)| frob(x, z)).sum();
        let mu = xz / nx as f64;
        let pobj = inst.objective(&it.y);
        let m0x: f64 = inst.blocks.iter().zip(&it.x).map(|(b, x)| b.constant.dot(x)).sum();
        let dobj = dot(&eq.beta, &it.lambda) - m0x + inst.offset;
        let pinf = rz.iter().map(max_abs).fold(inst.equality_residual(&it.y), f64::max);
        let dinf = rp.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let (sp, sd) = log.last().map_or((0.0, 0.0), |l: &IterateLog| (l.step_primal, l.step_dual));
        log.push(IterateLog {
            iter: iterations,
            primal_objective: pobj,
            dual_objective: dobj,
            mu,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
            step_primal: sp,
            step_dual: sd,
        });

        if !(pobj.is_finite() && dobj.is_finite() && mu.is_finite()) {
            status = Status::NumericalTrouble;
            message = Some("non-finite iterate".into());
            break;
        }
        if pinf <= opts.tol && dinf <= opts.tol && (pobj - dobj).abs() <= opts.tol {
            status = Status::Optimal;
            break;
        }
        let merit = pinf.max(dinf).max((pobj - dobj).abs());
        match &best {
            Some((b, _, _)) if *b <= merit => {}
            _ => best = Some((merit, iterations, it.clone())),
        }
        if let Some((_, at, _)) = &best {
            if iterations >= at + 10 {
                status = Status::NumericalTrouble;
                message = Some("no progress in the last 10 iterations".into());
                break;
            }
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut w = Vec::with_capacity(it.z.len());
        let mut lz = Vec::with_capacity(it.z.len());
        let mut lx = Vec::with_capacity(it.x.len());
        let mut ok = true;
        for (x, z) in it.x.iter().zip(&it.z) {
            match (Cholesky::new(z.clone()), Cholesky::new(x.clone())) {
                (Some(cz), Some(cx)) => {
                    w.push(sym(cz.inverse()));
                    lz.push(cz.unpack());
                    lx.push(cx.unpack());
                }
                _ => ok = false,
            }
        }
        if !ok {
            status = Status::NumericalTrouble;
            message = Some("iterate left the PSD cone".into());
            break;
        }

        let mut h = schur(&blocks, &it.x, &w, n);
        // H + ρQᵀQ has the same KKT solution (Q dy = Re) and stays definite
        // for variables that only occur in equalities.
        let rho = if m > 0 {
            let rho = h.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            h += qmat.tr_mul(&qmat) * rho;
            rho
        } else {
            0.0
        };
        let qt_re = qmat.tr_mul(&re) * rho;
        let Some(hchol) = cholesky_regularized(&h) else {
            status = Status::NumericalTrouble;
            message = Some("Schur complement is not positive definite".into());
            break;
        };
        // H⁻¹ Qᵀ and the equality Schur complement Q H⁻¹ Qᵀ
        let (hq, sc) = if m > 0 {
            let hq = hchol.solve(&qmat.transpose());
            let sc = &qmat * &hq;
            match cholesky_regularized(&sym(sc)) {
                Some(c) => (hq, Some(c)),
                None => {
                    status = Status::NumericalTrouble;
                    message = Some("equality Schur complement is singular".into());
                    break;
                }
            }
        } else {
            (DMatrix::zeros(n, 0), None)
        };

        let direction = |sigma_mu: f64, corr: Option<&Newton>| -> Newton {
            // T = σμW - X - X Rz W [- dXa dZa W]
            let t: Vec<DMatrix<f64>> = (0..it.x.len())
                .map(|k| {
                    let mut t = &w[k] * sigma_mu - &it.x[k] - &it.x[k] * &rz[k] * &w[k];
                    if let Some(c) = corr {
                        t -= &c.dx[k] * &c.dz[k] * &w[k];
                    }
                    sym(t)
                })
                .collect();
            let g = DVector::from_fn(n, |i, _| {
                let s: f64 = inst.blocks.iter().zip(&t).map(|(b, tk)| b.coeffs[i].dot(tk)).sum();
                s - rp[i] + qt_re[i]
            });
            let hg = hchol.solve(&g);
            let (dy, dlambda) = match &sc {
                Some(sc) => {
                    let rhs = &re - &qmat * &hg;
                    let dl = sc.solve(&rhs);
                    (&hg + &hq * &dl, dl)
                }
                None => (hg, DVector::zeros(0)),
            };
            let dz: Vec<DMatrix<f64>> = inst
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let mut d = rz[k].clone();
                    for (mi, &v) in b.coeffs.iter().zip(dy.iter()) {
                        if v != 0.0 {
                            mi.add_to(&mut d, v);
                        }
                    }
                    d
                })
                .collect();
            let dx: Vec<DMatrix<f64>> = (0..it.x.len())
                .map(|k| {
                    let mut d = &w[k] * sigma_mu - &it.x[k] - &it.x[k] * &dz[k] * &w[k];
                    if let Some(c) = corr {
                        d -= &c.dx[k] * &c.dz[k] * &w[k];
                    }
                    sym(d)
                })
                .collect();
            Newton { dy, dlambda, dx, dz }
        };
        let steps = |d: &Newton| -> (f64, f64) {
            let ap = lx.iter().zip(&d.dx).map(|(l, dx)| max_step(l, dx)).fold(f64::INFINITY, f64::min);
            let ad = lz.iter().zip(&d.dz).map(|(l, dz)| max_step(l, dz)).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        let pred = direction(0.0, None);
        let (ap, ad) = steps(&pred);
        let (ap1, ad1) = (ap.min(1.0), ad.min(1.0));
        let mu_aff: f64 = (0..it.x.len())
            .map(|k| frob(&(&it.x[k] + &pred.dx[k] * ap1), &(&it.z[k] + &pred.dz[k] * ad1)))
            .sum::<f64>()
            / nx as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };
        let corr = direction(sigma * mu, Some(&pred));
        let (ap, ad) = steps(&corr);
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);

        for k in 0..it.x.len() {
            it.x[k] += &corr.dx[k] * ap;
            it.z[k] += &corr.dz[k] * ad;
        }
        for (l, d) in it.lambda.iter_mut().zip(corr.dlambda.iter()) {
            *l += ap * d;
        }
        for (y, d) in it.y.iter_mut().zip(corr.dy.iter()) {
            *y += ad * d;
        }
        if let Some(last) = log.last_mut() {
            last.step_primal = ap;
            last.step_dual = ad;
        }
        if ap < 1e-8 && ad < 1e-8 {
            stalled += 1;
            if stalled >= 5 {
                status = Status::NumericalTrouble;
                message = Some("step lengths collapsed".into());
                break;
            }
        } else {
            stalled = 0;
        }
    }

    if status != Status::Optimal {
        if let Some((_, _, b)) = best {
            it = b;
        }
    }

    // multipliers on the original rows: Aᵀλ = Qᵀλ_Q with Q = C A
    let mut lambda = vec![0.0; inst.a.len()];
    for (ck, &lk) in eq.comb.iter().zip(&it.lambda) {
        for (l, c) in lambda.iter_mut().zip(ck) {
            *l += c * lk;
        }
    }
    let mut sol = SdpSolution {
        status,
        y: it.y,
        x: it.x.iter().map(DenseBlock::from_matrix).collect(),
        lambda,
        primal_objective: 0.0,
        dual_objective: 0.0,
        gap: 0.0,
        relative_gap: 0.0,
        equality_residual: 0.0,
        dual_residual: 0.0,
        min_eigenvalues: Vec::new(),
        min_eigenvalues_x: Vec::new(),
        removed_rows: eq.removed,
        iterations,
        wall_time_s: 0.0,
        log,
        message,
    };
    let report = check_solution(inst, &sol, opts.tol);
    sol.primal_objective = report.primal_objective;
    sol.dual_objective = report.dual_objective;
    sol.gap = report.gap;
    sol.relative_gap = report.gap / (1.0 + report.primal_objective.abs() + report.dual_objective.abs());
    sol.equality_residual = report.equality_residual;
    sol.dual_residual = report.dual_residual;
    sol.min_eigenvalues = report.min_eigenvalues;
    sol.min_eigenvalues_x = report.min_eigenvalues_x;
    if sol.status == Status::Optimal && !report.clean {
        sol.status = Status::NumericalTrouble;
        sol.message = Some(format!("final point failed verification: {}", report.violations.join("; ")));
    }
    sol.wall_time_s = start.elapsed().as_secs_f64();
    Ok(sol)
}

/// Independent re-verification of a solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub equality_residual: f64,
    pub dual_residual: f64,
    pub min_eigenvalues: Vec<f64>,
    pub min_eigenvalues_x: Vec<f64>,
    pub violations: Vec<String>,
    pub clean: bool,
}

/// Recomputes objectives, residuals and block eigenvalues from `y`, `X` and `λ`.
// Negated comparisons so that NaN counts as a violation.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn check_solution(inst: &SdpInstance, sol: &SdpSolution, tol: f64) -> CheckReport {
    let mut violations = Vec::new();
    if sol.y.len() != inst.n || sol.x.len() != inst.blocks.len() || sol.lambda.len() != inst.a.len() {
        return CheckReport {
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            gap: f64::NAN,
            equality_residual: f64::NAN,
            dual_residual: f64::NAN,
            min_eigenvalues: Vec::new(),
            min_eigenvalues_x: Vec::new(),
            violations: vec!["solution shape does not match the instance".into()],
            clean: false,
        };
    }
    let xs: Vec<DMatrix<f64>> = sol.x.iter().map(DenseBlock::to_matrix).collect();
    let pobj = inst.objective(&sol.y);
    let m0x: f64 = inst.blocks.iter().zip(&xs).map(|(b, x)| b.constant.dot(x)).sum();
    let dobj = dot(&inst.b, &sol.lambda) - m0x + inst.offset;
    let gap = pobj - dobj;
    let eq_res = inst.equality_residual(&sol.y);
    let mut atl = vec![0.0; inst.n];
    for (row, &l) in inst.a.iter().zip(&sol.lambda) {
        for &(j, v) in row {
            atl[j] += v * l;
        }
    }
    let dual_res = (0..inst.n)
        .map(|i| {
            let mx: f64 = inst.blocks.iter().zip(&xs).map(|(b, x)| b.coeffs[i].dot(x)).sum();
            (inst.c[i] - mx - atl[i]).abs()
        })
        .fold(0.0, f64::max);
    let min_z: Vec<f64> = inst.blocks.iter().map(|b| min_eigenvalue(&b.evaluate(&sol.y))).collect();
    let min_x: Vec<f64> = xs.iter().map(min_eigenvalue).collect();

    if !(gap.abs() <= tol) {
        violations.push(format!("duality gap {gap:e} exceeds {tol:e}"));
    }
    if !(eq_res <= tol) {
        violations.push(format!("equality residual {eq_res:e} exceeds {tol:e}"));
    }
    if !(dual_res <= tol) {
        violations.push(format!("dual residual {dual_res:e} exceeds {tol:e}"));
    }
    for (k, &e) in min_z.iter().enumerate() {
        if !(e >= -tol) {
            violations.push(format!("block {k}: moment matrix eigenvalue {e:e} below -{tol:e}"));
        }
    }
    for (k, &e) in min_x.iter().enumerate() {
        if !(e >= -tol) {
            violations.push(format!("block {k}: dual matrix eigenvalue {e:e} below -{tol:e}"));
        }
    }
    CheckReport {
        primal_objective: pobj,
        dual_objective: dobj,
        gap,
        equality_residual: eq_res,
        dual_residual: dual_res,
        min_eigenvalues: min_z,
        min_eigenvalues_x: min_x,
        clean: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_by_one() -> SdpInstance {
        let mut m = SparseSym::new();
        m.push(0, 0, 1.0);
        SdpInstance {
            n: 1,
            c: vec![1.0],
            offset: 0.0,
            a: Vec::new(),
            b: Vec::new(),
            blocks: vec![Block {
                dim: 1,
                constant: SparseSym::new(),
                coeffs: vec![m],
            }],
        }
    }

    pub(crate) fn two_by_two(scale: f64) -> SdpInstance {
        let mut m0 = SparseSym::new();
        m0.push(0, 1, 1.0);
        let mut m1 = SparseSym::new();
        m1.push(0, 0, 1.0);
        let mut m2 = SparseSym::new();
        m2.push(1, 1, 1.0);
        SdpInstance {
            n: 2,
            c: vec![scale, scale],
            offset: 0.0,
            a: Vec::new(),
            b: Vec::new(),
            blocks: vec![Block {
                dim: 2,
                constant: m0,
                coeffs: vec![m1, m2],
            }],
        }
    }

    #[test]
    fn trivial_scalar() {
        let sol = solve(&one_by_one(), &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!(sol.primal_objective.abs() < 1e-8);
    }

    #[test]
    fn two_by_two_optimum() {
        let sol = solve(&two_by_two(1.0), &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal, "{sol:?}");
        assert!((sol.primal_objective - 2.0).abs() < 1e-6);
        assert!(sol.gap.abs() <= 1e-8);
        assert!((sol.y[0] - 1.0).abs() < 1e-4 && (sol.y[1] - 1.0).abs() < 1e-4);
        assert!(check_solution(&two_by_two(1.0), &sol, 1e-8).clean);
    }

    #[test]
    fn corrupted_solution_is_flagged() {
        let inst = two_by_two(1.0);
        let mut sol = solve(&inst, &SolverOptions::default()).unwrap();
        sol.y.iter_mut().for_each(|v| *v += 1e-2);
        let rep = check_solution(&inst, &sol, 1e-8);
        assert!(!rep.clean);
        assert!(!rep.violations.is_empty());
    }

    #[test]
    fn scaling_objective() {
        let a = solve(&two_by_two(1.0), &SolverOptions::default()).unwrap();
        let b = solve(&two_by_two(10.0), &SolverOptions::default()).unwrap();
        assert_eq!(b.status, Status::Optimal);
        for (u, v) in a.y.iter().zip(&b.y) {
            assert!((u - v).abs() < 1e-6, "{u} vs {v}");
        }
        assert!((b.primal_objective - 10.0 * a.primal_objective).abs() < 1e-6);
    }

    #[test]
    fn weak_duality_on_feasible_iterates() {
        let sol = solve(&two_by_two(1.0), &SolverOptions::default()).unwrap();
        for l in sol.log.iter().filter(|l| l.feasible(1e-9)) {
            assert!(l.dual_objective <= l.primal_objective + 1e-9, "{l:?}");
        }
    }

    #[test]
    fn equalities_and_dependent_rows() {
        // minimize y1 + y2 with [[y1,1],[1,y2]] ⪰ 0, y1 = 2 (stated twice)
        let mut inst = two_by_two(1.0);
        inst.a = vec![vec![(0, 1.0)], vec![(0, 2.0)]];
        inst.b = vec![2.0, 4.0];
        let sol = solve(&inst, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal, "{:?}", sol.message);
        assert_eq!(sol.removed_rows, vec![1]);
        assert!((sol.primal_objective - 2.5).abs() < 1e-6);
        assert!(check_solution(&inst, &sol, 1e-8).clean);
    }

    #[test]
    fn inconsistent_equalities() {
        let mut inst = two_by_two(1.0);
        inst.a = vec![vec![(0, 1.0)], vec![(0, 2.0)]];
        inst.b = vec![2.0, 5.0];
        let sol = solve(&inst, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::PrimalInfeasibleCertificate);
    }

    #[test]
    fn reproducible() {
        let a = solve(&two_by_two(1.0), &SolverOptions::default()).unwrap();
        let b = solve(&two_by_two(1.0), &SolverOptions::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert!((a.primal_objective - b.primal_objective).abs() <= 1e-10);
    }

    #[test]
    fn rejects_malformed() {
        let mut inst = two_by_two(1.0);
        inst.c.pop();
        assert!(solve(&inst, &SolverOptions::default()).is_err());
    }
}
