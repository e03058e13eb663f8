//! Buchberger's algorithm over the rationals, ideal triviality and
//! Nullstellensatz certificates `Σ r_j p_j = 1`.
//!
//! Pairs are selected with the normal strategy (smallest lcm first) and
//! skipped by the coprime-leading-monomial and chain criteria. Every new
//! basis element is made primitive (content removed) before it is stored.
//! When cofactor tracking is on, each element carries its representation in
//! terms of the input generators, which yields the certificate as soon as a
//! nonzero constant appears.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::poly::{normal_form, Monomial, MonomialOrder, Polynomial};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Maximum number of S-pairs taken from the queue.
    pub max_pairs: Option<usize>,
    /// Maximum total degree of any S-pair lcm or new basis element.
    pub max_degree: Option<u32>,
    /// Approximate cap on the bytes held by the basis (and cofactors).
    pub max_memory: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroebnerOptions {
    pub order: MonomialOrder,
    pub limits: Limits,
    pub track_cofactors: bool,
}

impl Default for GroebnerOptions {
    fn default() -> Self {
        Self {
            order: MonomialOrder::GRevLex,
            limits: Limits::default(),
            track_cofactors: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub s_pairs: usize,
    pub reductions: usize,
    pub zero_reductions: usize,
    pub coprime_skips: usize,
    pub chain_skips: usize,
    pub max_degree: u32,
    pub peak_bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroebnerBasis {
    pub generators: Vec<Polynomial>,
    pub order: MonomialOrder,
    pub stats: Stats,
}

impl GroebnerBasis {
    /// True iff the reduced basis is `{1}`, i.e. the complex variety is empty.
    pub fn is_trivial(&self) -> bool {
        is_trivial(self)
    }

    /// Normal form of `p` modulo the basis.
    pub fn reduce(&self, p: &Polynomial) -> Polynomial {
        if self.generators.is_empty() {
            return p.clone().with_order(self.order);
        }
        normal_form(p, &self.generators, self.order)
            .map(|(r, _)| r)
            .expect("basis elements are nonzero")
    }

    pub fn contains(&self, p: &Polynomial) -> bool {
        self.reduce(p).is_zero()
    }
}

pub fn is_trivial(basis: &GroebnerBasis) -> bool {
    basis.generators.len() == 1 && basis.generators[0].is_one()
}

/// Cofactors `r_j` aligned with the input polynomials `p_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub cofactors: Vec<Polynomial>,
}

/// Everything a completed run knows, including cofactor data when tracked.
#[derive(Clone, Debug)]
pub struct Trace {
    pub basis: GroebnerBasis,
    pub inputs: Vec<Polynomial>,
    unit_cofactors: Option<Vec<Polynomial>>,
    tracked: bool,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Done(Trace),
    ResourceExceeded { stats: Stats, reason: String },
}

impl Outcome {
    pub fn basis(&self) -> Option<&GroebnerBasis> {
        match self {
            Outcome::Done(t) => Some(&t.basis),
            Outcome::ResourceExceeded { .. } => None,
        }
    }

    pub fn stats(&self) -> &Stats {
        match self {
            Outcome::Done(t) => &t.basis.stats,
            Outcome::ResourceExceeded { stats, .. } => stats,
        }
    }
}

struct Elem {
    poly: Polynomial,
    lm: Monomial,
    cof: Option<Vec<Polynomial>>,
}

fn bytes_of(e: &Elem) -> usize {
    e.poly.approx_bytes() + e.cof.iter().flatten().map(Polynomial::approx_bytes).sum::<usize>()
}

/// `p - c·m·g` applied to a cofactor vector.
fn cof_sub(cof: &mut [Polynomial], c: &BigRational, m: &Monomial, g: &[Polynomial]) {
    for (a, b) in cof.iter_mut().zip(g) {
        *a = a.sub_mul_term(c, m, b);
    }
}

fn cof_scale(cof: &mut [Polynomial], c: &BigRational) {
    for a in cof.iter_mut() {
        *a = a.scale(c);
    }
}

/// Full reduction of `p` by `basis`, mirroring every step on `cof`.
fn reduce_tracked(
    mut p: Polynomial,
    mut cof: Option<Vec<Polynomial>>,
    basis: &[Elem],
    order: MonomialOrder,
) -> (Polynomial, Option<Vec<Polynomial>>) {
    let mut rem = Vec::new();
    while let Some((lm, lc)) = p.leading_term().cloned() {
        let hit = basis.iter().find_map(|g| {
            g.lm.quotient_of(&lm)
                .map(|q| (g, q, &lc / g.poly.leading_coeff().expect("nonzero")))
        });
        match hit {
            Some((g, q, c)) => {
                p = p.sub_mul_term(&c, &q, &g.poly);
                if let (Some(cof), Some(gc)) = (cof.as_mut(), g.cof.as_ref()) {
                    cof_sub(cof, &c, &q, gc);
                }
            }
            None => {
                rem.push((lm, lc));
                p.pop_leading();
            }
        }
    }
    (Polynomial::from_terms(p.nvars(), order, rem), cof)
}

fn validate(gens: &[Polynomial]) -> Result<usize> {
    let first = gens.first().ok_or(Error::Empty("generator list"))?;
    let n = first.nvars();
    for g in gens {
        if g.nvars() != n {
            return Err(Error::VariableCountMismatch { left: n, right: g.nvars() });
        }
        if g.is_zero() {
            return Err(Error::ZeroPolynomial("generator"));
        }
    }
    Ok(n)
}

/// Computes the reduced Gröbner basis of `⟨gens⟩`.
///
/// Exhausting a limit is reported as [`Outcome::ResourceExceeded`], not as an
/// error.
pub fn buchberger(gens: &[Polynomial], opts: &GroebnerOptions) -> Result<Outcome> {
    let n = validate(gens)?;
    let order = opts.order;
    let limits = opts.limits;
    let inputs: Vec<Polynomial> = gens.iter().map(|g| g.clone().with_order(order)).collect();
    let m = inputs.len();
    let mut stats = Stats::default();

    let mut basis: Vec<Elem> = Vec::with_capacity(m);
    for (j, g) in inputs.iter().enumerate() {
        let (content, prim) = g.primitive_part();
        let cof = opts.track_cofactors.then(|| {
            let mut v = vec![Polynomial::zero(n).with_order(order); m];
            v[j] = Polynomial::constant(n, content.recip()).with_order(order);
            v
        });
        stats.max_degree = stats.max_degree.max(prim.degree());
        let lm = prim.leading_monomial().expect("nonzero").clone();
        basis.push(Elem { poly: prim, lm, cof });
    }

    let finish_unit = |cof: Option<Vec<Polynomial>>, stats: Stats| {
        Outcome::Done(Trace {
            basis: GroebnerBasis {
                generators: vec![Polynomial::one(n).with_order(order)],
                order,
                stats,
            },
            inputs: inputs.clone(),
            unit_cofactors: cof,
            tracked: opts.track_cofactors,
        })
    };

    if let Some(e) = basis.iter().find(|e| e.poly.is_constant()) {
        return Ok(finish_unit(e.cof.clone(), stats));
    }

    let mut pending: BTreeSet<(usize, usize)> = BTreeSet::new();
    for j in 0..basis.len() {
        for i in 0..j {
            pending.insert((i, j));
        }
    }
    stats.peak_bytes = basis.iter().map(bytes_of).sum();

    while !pending.is_empty() {
        // normal selection: smallest lcm, ties broken by index
        let &(i, j) = pending
            .iter()
            .min_by(|a, b| {
                let la = basis[a.0].lm.lcm(&basis[a.1].lm);
                let lb = basis[b.0].lm.lcm(&basis[b.1].lm);
                order.cmp(&la, &lb).then_with(|| (a.1, a.0).cmp(&(b.1, b.0)))
            })
            .expect("nonempty");
        pending.remove(&(i, j));

        if let Some(maxp) = limits.max_pairs {
            if stats.s_pairs >= maxp {
                return Ok(Outcome::ResourceExceeded {
                    stats,
                    reason: format!("S-pair limit {maxp} reached"),
                });
            }
        }
        stats.s_pairs += 1;

        let (fi, fj) = (&basis[i], &basis[j]);
        if fi.lm.is_coprime(&fj.lm) {
            stats.coprime_skips += 1;
            continue;
        }
        let lcm = fi.lm.lcm(&fj.lm);
        let chain = (0..basis.len()).any(|k| {
            k != i
                && k != j
                && basis[k].lm.divides(&lcm)
                && !pending.contains(&(i.min(k), i.max(k)))
                && !pending.contains(&(j.min(k), j.max(k)))
        });
        if chain {
            stats.chain_skips += 1;
            continue;
        }
        if let Some(maxd) = limits.max_degree {
            if lcm.degree() > maxd {
                return Ok(Outcome::ResourceExceeded {
                    stats,
                    reason: format!("S-pair degree {} exceeds limit {maxd}", lcm.degree()),
                });
            }
        }
        stats.max_degree = stats.max_degree.max(lcm.degree());

        let mi = fi.lm.quotient_of(&lcm).expect("lcm");
        let mj = fj.lm.quotient_of(&lcm).expect("lcm");
        let ci = fj.poly.leading_coeff().expect("nonzero").clone();
        let cj = fi.poly.leading_coeff().expect("nonzero").clone();
        let s = fi.poly.mul_term(&mi, &ci).sub_mul_term(&cj, &mj, &fj.poly);
        let s_cof = match (&fi.cof, &fj.cof) {
            (Some(a), Some(b)) => Some(
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.mul_term(&mi, &ci).sub_mul_term(&cj, &mj, y))
                    .collect::<Vec<_>>(),
            ),
            _ => None,
        };

        let (r, r_cof) = reduce_tracked(s, s_cof, &basis, order);
        stats.reductions += 1;
        if r.is_zero() {
            stats.zero_reductions += 1;
            continue;
        }
        let (content, prim) = r.primitive_part();
        let mut r_cof = r_cof;
        if let Some(c) = r_cof.as_mut() {
            cof_scale(c, &content.recip());
        }
        if prim.is_constant() {
            return Ok(finish_unit(r_cof, stats));
        }
        if let Some(maxd) = limits.max_degree {
            if prim.degree() > maxd {
                return Ok(Outcome::ResourceExceeded {
                    stats,
                    reason: format!("basis element degree {} exceeds limit {maxd}", prim.degree()),
                });
            }
        }
        stats.max_degree = stats.max_degree.max(prim.degree());
        let lm = prim.leading_monomial().expect("nonzero").clone();
        let new = basis.len();
        basis.push(Elem {
            poly: prim,
            lm,
            cof: r_cof,
        });
        for k in 0..new {
            pending.insert((k, new));
        }
        let bytes: usize = basis.iter().map(bytes_of).sum();
        stats.peak_bytes = stats.peak_bytes.max(bytes);
        if let Some(maxm) = limits.max_memory {
            if bytes > maxm {
                return Ok(Outcome::ResourceExceeded {
                    stats,
                    reason: format!("basis holds ~{bytes} bytes, limit {maxm}"),
                });
            }
        }
    }

    let generators = interreduce(basis.into_iter().map(|e| e.poly).collect(), order);
    Ok(Outcome::Done(Trace {
        basis: GroebnerBasis { generators, order, stats },
        inputs,
        unit_cofactors: None,
        tracked: opts.track_cofactors,
    }))
}

/// Minimal, inter-reduced, monic basis sorted by decreasing leading monomial.
fn interreduce(polys: Vec<Polynomial>, order: MonomialOrder) -> Vec<Polynomial> {
    let mut keep: Vec<Polynomial> = Vec::new();
    for (i, p) in polys.iter().enumerate() {
        let lm = p.leading_monomial().expect("nonzero");
        let redundant = polys.iter().enumerate().any(|(k, q)| {
            let lq = q.leading_monomial().expect("nonzero");
            k != i && lq.divides(lm) && (lq != lm || k < i)
        });
        if !redundant {
            keep.push(p.clone());
        }
    }
    let mut out = Vec::with_capacity(keep.len());
    for i in 0..keep.len() {
        let others: Vec<Polynomial> = keep.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, q)| q.clone()).collect();
        let r = if others.is_empty() {
            keep[i].clone()
        } else {
            normal_form(&keep[i], &others, order).expect("nonzero").0
        };
        out.push(r.monic());
    }
    out.sort_by(|a, b| order.cmp(b.leading_monomial().expect("nonzero"), a.leading_monomial().expect("nonzero")));
    out
}

/// Expands `Σ r_j p_j` exactly and compares it with the constant 1.
pub fn verify_certificate(polys: &[Polynomial], cert: &Certificate) -> Result<bool> {
    if polys.len() != cert.cofactors.len() {
        return Err(Error::LengthMismatch {
            expected: polys.len(),
            got: cert.cofactors.len(),
        });
    }
    let Some(first) = polys.first() else {
        return Ok(false);
    };
    let mut sum = Polynomial::zero(first.nvars());
    for (p, r) in polys.iter().zip(&cert.cofactors) {
        sum = sum.try_add(&r.try_mul(p)?)?;
    }
    Ok(sum.is_one())
}

/// Extracts the cofactors of 1 recorded by a traced run.
pub fn extract_certificate(trace: &Trace) -> Result<Certificate> {
    if !is_trivial(&trace.basis) {
        return Err(Error::NotTrivial);
    }
    if !trace.tracked {
        return Err(Error::NoCofactors);
    }
    let cofactors = trace.unit_cofactors.clone().ok_or(Error::NoCofactors)?;
    let cert = Certificate { cofactors };
    debug_assert!(verify_certificate(&trace.inputs, &cert).unwrap_or(false));
    Ok(cert)
}

impl Certificate {
    /// Scales every cofactor so that `Σ r_j p_j = c` becomes `= 1`.
    pub fn normalized(mut self, c: &BigRational) -> Self {
        if !c.is_zero() && !c.is_one() {
            let inv = c.recip();
            for r in &mut self.cofactors {
                *r = r.scale(&inv);
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_system, ConstellationSpec};

    fn parse(s: &str, names: &[&str]) -> Polynomial {
        Polynomial::parse(s, names).unwrap()
    }

    fn run(gens: &[Polynomial], track: bool) -> Trace {
        let opts = GroebnerOptions {
            track_cofactors: track,
            ..Default::default()
        };
        match buchberger(gens, &opts).unwrap() {
            Outcome::Done(t) => t,
            Outcome::ResourceExceeded { reason, .. } => panic!("{reason}"),
        }
    }

    #[test]
    fn x_squared_plus_one_is_its_own_basis() {
        let f = parse("x^2 + 1", &["x"]);
        let t = run(std::slice::from_ref(&f), true);
        assert_eq!(t.basis.generators, vec![f]);
        assert!(!t.basis.is_trivial());
        assert!(matches!(extract_certificate(&t), Err(Error::NotTrivial)));
    }

    #[test]
    fn inconsistent_linear_pair() {
        let gens = [parse("x - 1", &["x"]), parse("x - 2", &["x"])];
        let t = run(&gens, true);
        assert!(t.basis.is_trivial());
        let cert = extract_certificate(&t).unwrap();
        assert!(verify_certificate(&gens, &cert).unwrap());
        // the only degree-0 answer is (1, -1)
        assert_eq!(cert.cofactors[0], Polynomial::one(1));
        assert_eq!(cert.cofactors[1], -&Polynomial::one(1));
    }

    #[test]
    fn zero_and_empty_generators_rejected() {
        let opts = GroebnerOptions::default();
        assert!(buchberger(&[], &opts).is_err());
        assert!(matches!(buchberger(&[Polynomial::zero(1)], &opts), Err(Error::ZeroPolynomial(_))));
        assert!(buchberger(&[Polynomial::var(1, 0), Polynomial::var(2, 0)], &opts).is_err());
    }

    #[test]
    fn qubit_four_bases_trivial_with_certificate() {
        let sys = build_system(&ConstellationSpec::new(2, vec![1, 1, 1, 1]).unwrap());
        let gens = sys.polynomials();
        let t = run(&gens, true);
        assert!(t.basis.is_trivial());
        let cert = extract_certificate(&t).unwrap();
        assert!(verify_certificate(&gens, &cert).unwrap());
    }

    #[test]
    fn qubit_three_bases_is_not_trivial() {
        let sys = build_system(&ConstellationSpec::new(2, vec![1, 1, 1]).unwrap());
        let gens = sys.polynomials();
        let t = run(&gens, false);
        assert!(!t.basis.is_trivial());
        for g in &gens {
            assert!(t.basis.contains(g));
        }
        assert!(matches!(extract_certificate(&t), Err(Error::NotTrivial)));
    }

    #[test]
    fn untracked_trivial_run_has_no_certificate() {
        let gens = [parse("x - 1", &["x"]), parse("x - 2", &["x"])];
        let t = run(&gens, false);
        assert!(matches!(extract_certificate(&t), Err(Error::NoCofactors)));
    }

    #[test]
    fn basis_is_reduced_and_closed() {
        let names = ["x", "y", "z"];
        let gens = [
            parse("x^2 + y*z - 2", &names),
            parse("x*y - z^2 + 1", &names),
            parse("y^2 - x*z", &names),
        ];
        for order in [MonomialOrder::Lex, MonomialOrder::GrLex, MonomialOrder::GRevLex] {
            let opts = GroebnerOptions {
                order,
                ..Default::default()
            };
            let basis = buchberger(&gens, &opts).unwrap().basis().unwrap().clone();
            let g = &basis.generators;
            for a in g {
                assert!(a.leading_coeff().unwrap().is_one());
            }
            for (i, a) in g.iter().enumerate() {
                for (k, b) in g.iter().enumerate() {
                    if i != k {
                        let la = a.leading_monomial().unwrap();
                        assert!(!b.terms().iter().any(|(m, _)| la.divides(m)));
                    }
                }
            }
            // every S-polynomial reduces to zero
            for i in 0..g.len() {
                for k in i + 1..g.len() {
                    let (li, lk) = (g[i].leading_monomial().unwrap(), g[k].leading_monomial().unwrap());
                    let l = li.lcm(lk);
                    let s = g[i].mul_term(&li.quotient_of(&l).unwrap(), &BigRational::one()).sub_mul_term(
                        &BigRational::one(),
                        &lk.quotient_of(&l).unwrap(),
                        &g[k],
                    );
                    assert!(basis.reduce(&s).is_zero(), "{order:?}");
                }
            }
            for p in &gens {
                assert!(basis.contains(p));
            }
            // idempotence
            let again = buchberger(g, &opts).unwrap().basis().unwrap().clone();
            assert_eq!(&again.generators, g);
        }
    }

    #[test]
    fn limits_become_outcomes() {
        let sys = build_system(&ConstellationSpec::new(2, vec![1, 1, 1, 1]).unwrap());
        let opts = GroebnerOptions {
            limits: Limits {
                max_pairs: Some(1),
                ..Default::default()
            },
            ..Default::default()
        };
        let out = buchberger(&sys.polynomials(), &opts).unwrap();
        assert!(matches!(out, Outcome::ResourceExceeded { .. }));
        assert_eq!(out.stats().s_pairs, 1);

        let opts = GroebnerOptions {
            limits: Limits {
                max_memory: Some(10),
                ..Default::default()
            },
            ..Default::default()
        };
        let out = buchberger(&sys.polynomials(), &opts).unwrap();
        assert!(matches!(out, Outcome::ResourceExceeded { .. }));
    }

    #[test]
    fn deterministic_stats() {
        let sys = build_system(&ConstellationSpec::new(2, vec![1, 1, 1, 1]).unwrap());
        let opts = GroebnerOptions::default();
        let a = buchberger(&sys.polynomials(), &opts).unwrap();
        let b = buchberger(&sys.polynomials(), &opts).unwrap();
        assert_eq!(a.stats(), b.stats());
        assert_eq!(a.basis(), b.basis());
    }

    #[test]
    fn misaligned_certificate_is_an_error() {
        let gens = [parse("x - 1", &["x"])];
        let cert = Certificate { cofactors: vec![] };
        assert!(verify_certificate(&gens, &cert).is_err());
        let zero = Certificate {
            cofactors: vec![Polynomial::zero(1)],
        };
        assert!(!verify_certificate(&gens, &zero).unwrap());
    }
}
