//! Lasserre moment relaxations of `min p_obj²  s.t.  p_j = 0 (j ≠ obj)`.
//!
//! Pseudo-moments `y_α` are indexed by the monomials of degree `≤ 2r` in
//! graded-lex order; the constant moment is fixed to 1 and the remaining
//! `C(n+2r, 2r) - 1` moments are the decision variables. The moment matrix is
//! indexed by the `C(n+r, r)` monomials of degree `≤ r`, and each constraint
//! contributes the linear equalities `L(m·p_j) = 0` for every monomial `m`
//! with `deg m + deg p_j ≤ 2r`.

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::constellation::PolynomialSystem;
use crate::poly::{Monomial, Polynomial};
use crate::sdpsolve::{self, Block, SdpInstance, SdpSolution, SolverOptions, SparseSym, Status};
use crate::{Error, Result};

/// Exponent vectors of total degree `≤ max_deg` in graded-lex order.
pub fn graded_monomials(n: usize, max_deg: u32) -> Vec<Vec<u32>> {
    fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            cur[pos] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[pos] = e;
            fill(out, cur, pos + 1, left - e);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut cur = vec![0; n];
    for deg in 0..=max_deg {
        fill(&mut out, &mut cur, 0, deg);
    }
    out
}

/// `C(n, k)` in `u128`.
pub fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// Smallest admissible order for the given objective and system.
pub fn minimal_order(sys: &PolynomialSystem, objective_index: usize) -> Result<u32> {
    let polys = &sys.polys;
    let obj = polys.get(objective_index).ok_or(Error::IndexOutOfRange {
        index: objective_index,
        len: polys.len(),
    })?;
    let mut r = obj.poly.degree(); // ⌈2·deg / 2⌉
    for p in polys {
        r = r.max(p.poly.degree().div_ceil(2));
    }
    Ok(r.max(1))
}

/// One moment equality `Σ coeffs·y = rhs`, generated as `L(m·p_j) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct EqualityRow {
    pub poly: usize,
    pub multiplier: Monomial,
    /// `(decision slot, coefficient)` pairs.
    pub coeffs: Vec<(usize, BigRational)>,
    pub rhs: BigRational,
}

#[derive(Clone, Debug)]
pub struct MomentRelaxation {
    n: usize,
    r: u32,
    objective_index: usize,
    /// All monomials of degree `≤ 2r`; slot `k` is `monomials[k + 1]`.
    monomials: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    basis_len: usize,
    objective: Vec<(usize, BigRational)>,
    objective_offset: BigRational,
    equalities: Vec<EqualityRow>,
    /// Coefficient vectors of `m·p_j` with `deg ≤ r`, over the basis monomials.
    kernel: Vec<Vec<(usize, BigRational)>>,
}

pub fn build_relaxation(sys: &PolynomialSystem, objective_index: usize, r: u32) -> Result<MomentRelaxation> {
    let minimal = minimal_order(sys, objective_index)?;
    if r < minimal {
        return Err(Error::OrderTooSmall { given: r, minimal });
    }
    let n = sys.nvars();
    let monomials = graded_monomials(n, 2 * r);
    let index: HashMap<Vec<u32>, usize> = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    let basis_len = monomials.iter().take_while(|m| m.iter().sum::<u32>() <= r).count();

    let obj = &sys.polys[objective_index].poly;
    let square = obj * obj;
    let mut objective = Vec::new();
    let mut objective_offset = BigRational::zero();
    for (mono, c) in square.terms() {
        let i = index[mono.exps()];
        if i == 0 {
            objective_offset = c.clone();
        } else {
            objective.push((i - 1, c.clone()));
        }
    }
    objective.sort_by_key(|&(i, _)| i);

    let mut equalities = Vec::new();
    let mut kernel = Vec::new();
    for (j, sp) in sys.polys.iter().enumerate() {
        if j == objective_index {
            continue;
        }
        let p = &sp.poly;
        if p.degree() <= r {
            for m in monomials.iter().take_while(|m| m.iter().sum::<u32>() <= r - p.degree()) {
                let mut v: Vec<(usize, BigRational)> = p
                    .terms()
                    .iter()
                    .map(|(mono, c)| {
                        let e: Vec<u32> = mono.exps().iter().zip(m).map(|(a, b)| a + b).collect();
                        (index[&e], c.clone())
                    })
                    .collect();
                v.sort_by_key(|&(i, _)| i);
                kernel.push(v);
            }
        }
        let budget = 2 * r - p.degree();
        for m in monomials.iter().take_while(|m| m.iter().sum::<u32>() <= budget) {
            let mut coeffs = Vec::with_capacity(p.len());
            let mut rhs = BigRational::zero();
            for (mono, c) in p.terms() {
                let e: Vec<u32> = mono.exps().iter().zip(m).map(|(a, b)| a + b).collect();
                let i = index[&e];
                if i == 0 {
                    rhs = -c.clone();
                } else {
                    coeffs.push((i - 1, c.clone()));
                }
            }
            coeffs.sort_by_key(|&(i, _)| i);
            equalities.push(EqualityRow {
                poly: j,
                multiplier: Monomial::new(m.clone()),
                coeffs,
                rhs,
            });
        }
    }

    Ok(MomentRelaxation {
        n,
        r,
        objective_index,
        monomials,
        index,
        basis_len,
        objective,
        objective_offset,
        equalities,
        kernel,
    })
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

impl MomentRelaxation {
    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.r
    }

    pub fn objective_index(&self) -> usize {
        self.objective_index
    }

    /// Number of decision variables `N_d`.
    pub fn num_decisions(&self) -> usize {
        self.monomials.len() - 1
    }

    /// Side `F` of the moment matrix.
    pub fn matrix_size(&self) -> usize {
        self.basis_len
    }

    pub fn equalities(&self) -> &[EqualityRow] {
        &self.equalities
    }

    pub fn objective(&self) -> (&[(usize, BigRational)], &BigRational) {
        (&self.objective, &self.objective_offset)
    }

    /// Exponent vector of decision slot `k`.
    pub fn slot_monomial(&self, k: usize) -> &[u32] {
        &self.monomials[k + 1]
    }

    /// Decision slot of a non-constant monomial.
    pub fn slot_of(&self, exps: &[u32]) -> Option<usize> {
        self.index.get(exps).and_then(|&i| i.checked_sub(1))
    }

    /// Moment-matrix entry `(u, v)` as a decision slot; `None` is the constant 1.
    pub fn matrix_entry(&self, u: usize, v: usize) -> Option<usize> {
        let e: Vec<u32> = self.monomials[u].iter().zip(&self.monomials[v]).map(|(a, b)| a + b).collect();
        self.slot_of(&e)
    }

    /// Moments `y_α = x^α` of the point mass at `point`.
    pub fn moment_vector(&self, point: &[f64]) -> Vec<f64> {
        self.monomials[1..]
            .iter()
            .map(|e| e.iter().zip(point).map(|(&k, &x)| x.powi(k as i32)).product())
            .collect()
    }

    /// Values of the degree-one moments, i.e. a candidate point.
    pub fn first_moments(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| y[i]).collect()
    }

    /// Basis monomials that can be dropped from the moment matrix.
    ///
    /// Every feasible `y` satisfies `M(y)·vec(m·p_j) = 0` whenever
    /// `deg(m·p_j) ≤ r`, because each entry of that product is one of the
    /// equalities. With `K` spanning these vectors and pivot rows chosen so
    /// that `K` restricted to them is invertible, `M(y) ⪰ 0` is equivalent to
    /// the principal submatrix on the remaining monomials being PSD.
    pub fn kernel_pivots(&self) -> Vec<usize> {
        let f = self.basis_len;
        let mut rows: Vec<Vec<BigRational>> = self
            .kernel
            .iter()
            .map(|v| {
                let mut d = vec![BigRational::zero(); f];
                for (i, c) in v {
                    d[*i] = c.clone();
                }
                d
            })
            .collect();
        let mut pivots = Vec::new();
        let mut done = 0;
        // prefer high-degree monomials as pivots so the constant survives
        for col in (0..f).rev() {
            let Some(p) = (done..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
                continue;
            };
            rows.swap(done, p);
            let piv = rows[done][col].clone();
            let lead: Vec<BigRational> = rows[done].iter().map(|x| x / &piv).collect();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != done && !row[col].is_zero() {
                    let t = row[col].clone();
                    for (x, l) in row.iter_mut().zip(&lead) {
                        if !l.is_zero() {
                            *x -= &t * l;
                        }
                    }
                }
            }
            rows[done] = lead;
            pivots.push(col);
            done += 1;
            if done == rows.len() {
                break;
            }
        }
        pivots.sort_unstable();
        pivots
    }

    /// Mixed-form instance with the full moment matrix.
    pub fn to_sdp(&self) -> SdpInstance {
        self.instance(&(0..self.basis_len).collect::<Vec<_>>())
    }

    /// Same optimum, with the kernel monomials of [`kernel_pivots`]
    /// removed from the moment matrix.
    ///
    /// [`kernel_pivots`]: MomentRelaxation::kernel_pivots
    pub fn to_sdp_reduced(&self) -> SdpInstance {
        let pivots = self.kernel_pivots();
        let kept: Vec<usize> = (0..self.basis_len).filter(|i| pivots.binary_search(i).is_err()).collect();
        self.instance(&kept)
    }

    fn instance(&self, kept: &[usize]) -> SdpInstance {
        let nd = self.num_decisions();
        let mut c = vec![0.0; nd];
        for (i, q) in &self.objective {
            c[*i] = to_f64(q);
        }
        let a = self
            .equalities
            .iter()
            .map(|row| row.coeffs.iter().map(|(i, q)| (*i, to_f64(q))).collect())
            .collect();
        let b = self.equalities.iter().map(|row| to_f64(&row.rhs)).collect();
        let mut constant = SparseSym::new();
        let mut coeffs = vec![SparseSym::new(); nd];
        for (iu, &u) in kept.iter().enumerate() {
            for (iv, &v) in kept.iter().enumerate().skip(iu) {
                match self.matrix_entry(u, v) {
                    Some(k) => coeffs[k].push(iu, iv, 1.0),
                    None => constant.push(iu, iv, 1.0),
                }
            }
        }
        SdpInstance {
            n: nd,
            c,
            offset: to_f64(&self.objective_offset),
            a,
            b,
            blocks: vec![Block {
                dim: kept.len(),
                constant,
                coeffs,
            }],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyOptions {
    pub r_min: u32,
    pub r_max: u32,
    /// Lower floor of the positivity threshold `max(floor, 10·|gap|)`.
    pub threshold: f64,
    /// Largest residual accepted for an extracted point.
    pub extraction_tol: f64,
    /// Stop at the first level that settles the question.
    pub stop_at_verdict: bool,
    pub solver: SolverOptions,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self {
            r_min: 2,
            r_max: 4,
            threshold: 1e-6,
            extraction_tol: 1e-6,
            stop_at_verdict: true,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub r: u32,
    pub num_decisions: usize,
    pub matrix_size: usize,
    pub num_equalities: usize,
    pub independent_equalities: usize,
    /// `B_L(r)`: the dual objective of the solved relaxation.
    pub bound: f64,
    pub primal_objective: f64,
    pub status: Status,
    pub gap: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extraction: Option<Extraction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub point: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// `first_moments`, or `perturbed_polished` when the symmetric solution
    /// had to be broken and refined.
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum HierarchyVerdict {
    Nonexistent { r: u32, bound: f64 },
    Found { r: u32, point: Vec<f64>, residuals: Vec<f64> },
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyResult {
    pub objective_index: usize,
    pub levels: Vec<LevelRecord>,
    pub verdict: HierarchyVerdict,
    pub threshold_floor: f64,
}

/// Solves levels `r_min..=r_max` and decides existence.
pub fn run_hierarchy(sys: &PolynomialSystem, objective_index: usize, opts: &HierarchyOptions) -> Result<HierarchyResult> {
    let minimal = minimal_order(sys, objective_index)?;
    if opts.r_min < minimal {
        return Err(Error::OrderTooSmall {
            given: opts.r_min,
            minimal,
        });
    }
    let mut levels = Vec::new();
    let mut verdict = HierarchyVerdict::Inconclusive;
    for r in opts.r_min..=opts.r_max {
        let start = Instant::now();
        let rel = build_relaxation(sys, objective_index, r)?;
        let inst = rel.to_sdp_reduced();
        let sol = sdpsolve::solve(&inst, &opts.solver)?;
        let threshold = opts.threshold.max(10.0 * sol.gap.abs());
        let bound = sol.lower_bound();
        let mut record = LevelRecord {
            r,
            num_decisions: rel.num_decisions(),
            matrix_size: rel.matrix_size(),
            num_equalities: rel.equalities().len(),
            independent_equalities: rel.equalities().len() - sol.removed_rows.len(),
            bound,
            primal_objective: sol.primal_objective,
            status: sol.status,
            gap: sol.gap,
            iterations: sol.iterations,
            wall_time_s: 0.0,
            threshold,
            extraction: None,
        };
        let settled = if sol.status == Status::Optimal && bound > threshold {
            if matches!(verdict, HierarchyVerdict::Inconclusive) {
                verdict = HierarchyVerdict::Nonexistent { r, bound };
            }
            true
        } else if sol.status == Status::PrimalInfeasibleCertificate {
            false
        } else {
            let ext = extract(sys, &rel, &inst, &sol, opts)?;
            let ok = ext.max_residual <= opts.extraction_tol;
            if ok && matches!(verdict, HierarchyVerdict::Inconclusive) {
                verdict = HierarchyVerdict::Found {
                    r,
                    point: ext.point.clone(),
                    residuals: ext.residuals.clone(),
                };
            }
            record.extraction = Some(ext);
            ok
        };
        record.wall_time_s = start.elapsed().as_secs_f64();
        levels.push(record);
        if settled && opts.stop_at_verdict {
            break;
        }
    }
    Ok(HierarchyResult {
        objective_index,
        levels,
        verdict,
        threshold_floor: opts.threshold,
    })
}

fn residuals(sys: &PolynomialSystem, point: &[f64]) -> Result<(Vec<f64>, f64)> {
    let res = sys.evaluate_f64(point)?;
    let max = res.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok((res, if max.is_nan() { f64::INFINITY } else { max }))
}

fn extract(
    sys: &PolynomialSystem,
    rel: &MomentRelaxation,
    inst: &SdpInstance,
    sol: &SdpSolution,
    opts: &HierarchyOptions,
) -> Result<Extraction> {
    let point = rel.first_moments(&sol.y);
    let (res, max) = residuals(sys, &point)?;
    if max <= opts.extraction_tol {
        return Ok(Extraction {
            point,
            residuals: res,
            max_residual: max,
            method: "first_moments".into(),
        });
    }
    // A symmetric solution set averages its points away. Tilt the objective
    // by a small generic linear form so one minimizer is preferred, then
    // refine by Gauss-Newton on the full system.
    let mut tilted = inst.clone();
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    for i in 0..rel.nvars() {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
        tilted.c[i] += 1e-3 * (2.0 * u - 1.0);
    }
    let tsol = sdpsolve::solve(&tilted, &opts.solver)?;
    let start = rel.first_moments(&tsol.y);
    let polished = gauss_newton(sys, start, 100)?;
    let (res2, max2) = residuals(sys, &polished)?;
    if max2 < max {
        Ok(Extraction {
            point: polished,
            residuals: res2,
            max_residual: max2,
            method: "perturbed_polished".into(),
        })
    } else {
        Ok(Extraction {
            point,
            residuals: res,
            max_residual: max,
            method: "first_moments".into(),
        })
    }
}

/// Damped Gauss-Newton on `p_j(x) = 0` for all polynomials of the system.
pub fn gauss_newton(sys: &PolynomialSystem, mut x: Vec<f64>, max_iter: usize) -> Result<Vec<f64>> {
    let n = sys.nvars();
    let polys: Vec<&Polynomial> = sys.polys.iter().map(|p| &p.poly).collect();
    let grads: Vec<Vec<Polynomial>> = polys.iter().map(|p| (0..n).map(|i| p.derivative(i)).collect()).collect();
    let norm = |x: &[f64]| -> Result<f64> {
        let mut s = 0.0;
        for p in &polys {
            s += p.evaluate_f64(x)?.powi(2);
        }
        Ok(s)
    };
    let mut damping = 1e-6;
    let mut f = norm(&x)?;
    for _ in 0..max_iter {
        if f < 1e-30 {
            break;
        }
        let r = DVector::from_iterator(polys.len(), polys.iter().map(|p| p.evaluate_f64(&x).unwrap_or(f64::NAN)));
        let mut jac = DMatrix::zeros(polys.len(), n);
        for (j, g) in grads.iter().enumerate() {
            for (i, gi) in g.iter().enumerate() {
                jac[(j, i)] = gi.evaluate_f64(&x)?;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let jtr = &jt * &r;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += damping * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                damping *= 10.0;
                continue;
            };
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
            let fc = norm(&cand)?;
            if fc < f {
                x = cand;
                f = fc;
                damping = (damping / 10.0).max(1e-15);
                improved = true;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_system, spectral_pair_system, ConstellationSpec};

    fn qubit() -> PolynomialSystem {
        build_system(&ConstellationSpec::new(2, vec![1, 1, 1, 1]).unwrap())
    }

    #[test]
    fn graded_order() {
        let m = graded_monomials(2, 2);
        assert_eq!(m, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(graded_monomials(4, 4).len() as u128, binomial(8, 4));
    }

    #[test]
    fn table_sizes() {
        let sys = qubit();
        for (r, nd, f) in [(2, 69, 15), (3, 209, 35), (4, 494, 70)] {
            let rel = build_relaxation(&sys, 0, r).unwrap();
            assert_eq!((rel.num_decisions(), rel.matrix_size()), (nd, f));
            assert_eq!(rel.num_decisions() as u128, binomial(4 + 2 * r as u64, 2 * r as u64) - 1);
            assert_eq!(rel.matrix_size() as u128, binomial(4 + r as u64, r as u64));
        }
    }

    #[test]
    fn spectral_pair_sizes() {
        let sys = spectral_pair_system(false);
        let rel = build_relaxation(&sys, 0, 2).unwrap();
        assert_eq!(rel.num_decisions(), 10625);
        assert_eq!(rel.matrix_size(), 231);
    }

    #[test]
    fn order_too_small() {
        match build_relaxation(&qubit(), 0, 1) {
            Err(Error::OrderTooSmall { given: 1, minimal: 2 }) => {}
            other => panic!("{other:?}"),
        }
        // squaring a quartic needs r = 4
        assert_eq!(minimal_order(&qubit(), 4).unwrap(), 4);
    }

    #[test]
    fn instance_structure() {
        let rel = build_relaxation(&qubit(), 0, 2).unwrap();
        let inst = rel.to_sdp();
        // objective only touches monomials of p1²
        for (k, &c) in inst.c.iter().enumerate() {
            if c != 0.0 {
                let e = rel.slot_monomial(k);
                assert!(e.iter().sum::<u32>() <= 4 && e[2] == 0 && e[3] == 0);
            }
        }
        assert_eq!(inst.offset, 1.0);
        // constant 1 appears once, at (0,0)
        assert_eq!(inst.blocks[0].constant.entries, vec![(0, 0, 1.0)]);
        // every moment-matrix entry belongs to exactly one slot
        let total: usize = inst.blocks[0].coeffs.iter().map(|m| m.entries.len()).sum();
        assert_eq!(total + 1, 15 * 16 / 2);
    }

    #[test]
    fn point_moments_are_feasible() {
        // a feasible point of p2..p5 with p1 ≠ 0
        let a = (3f64.sqrt() - 1.0) / 2.0;
        let pt = [a, a, 0.0, 1.0];
        let rel = build_relaxation(&qubit(), 0, 2).unwrap();
        let inst = rel.to_sdp();
        let y = rel.moment_vector(&pt);
        assert!(inst.equality_residual(&y) < 1e-12);
        let val = inst.objective(&y);
        assert!((val - (1.0 - 3f64.sqrt()).powi(2)).abs() < 1e-12);
    }
}
