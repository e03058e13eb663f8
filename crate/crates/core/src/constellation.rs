//! MU constellations `{d-1, λ, μ, ν, ...}_d` and their defining polynomial systems.
//!
//! Parameterization: set 0 is the first `d-1` standard basis vectors and
//! carries no variables. The first vector of set 1 is fixed to
//! `(1, ..., 1)/√d`. Every other vector is free, `(1, z_1, ..., z_{d-1})/√d`
//! with `z_k = x_k + i y_k`, and each phase contributes a modulus constraint
//! `x² + y² - 1 = 0`. Inner-product conditions are scaled by `d` so that all
//! coefficients are integers:
//!
//! * vectors in different sets: `|d⟨u|v⟩|² - d = 0`;
//! * vectors in the same set: `Re d⟨u|v⟩ = 0` and `Im d⟨u|v⟩ = 0`.
//!
//! Unbiasedness to set 0 follows from the modulus constraints.

use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::poly::{rat, Polynomial};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstellationSpec {
    d: usize,
    sizes: Vec<usize>,
}

impl ConstellationSpec {
    pub fn new(d: usize, sizes: Vec<usize>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if sizes.len() < 2 {
            return Err(Error::InvalidSpec("need at least two sets".into()));
        }
        if sizes[0] != d - 1 {
            return Err(Error::InvalidSpec(format!(
                "first set must have d-1 = {} vectors, got {}",
                d - 1,
                sizes[0]
            )));
        }
        if let Some(&bad) = sizes[1..].iter().find(|&&k| k == 0 || k > d - 1) {
            return Err(Error::InvalidSpec(format!("set size {bad} outside 1..={}", d - 1)));
        }
        Ok(Self { d, sizes })
    }

    /// Parses a comma-separated size list such as `5,3,3,3`.
    pub fn parse(d: usize, sizes: &str) -> Result<Self> {
        let sizes = sizes
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidSpec(format!("bad set size `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, sizes)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of free vectors `s = Σ sizes[1..] - 1`.
    pub fn free_vectors(&self) -> usize {
        self.sizes[1..].iter().sum::<usize>() - 1
    }

    pub fn num_phases(&self) -> usize {
        self.free_vectors() * (self.d - 1)
    }

    /// The non-identity vectors in `(set, index)` order.
    pub fn layout(&self) -> Vec<VectorSlot> {
        let mut out = Vec::new();
        let mut free = 0;
        for (set, &k) in self.sizes.iter().enumerate().skip(1) {
            for index in 0..k {
                let slot = if set == 1 && index == 0 {
                    None
                } else {
                    free += 1;
                    Some(free - 1)
                };
                out.push(VectorSlot { set, index, free: slot });
            }
        }
        out
    }
}

impl fmt::Display for ConstellationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}_{}", parts.join(","), self.d)
    }
}

/// One non-identity vector of the parameterization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorSlot {
    pub set: usize,
    pub index: usize,
    /// Free-vector index, `None` for the fixed all-ones vector.
    pub free: Option<usize>,
}

impl VectorSlot {
    /// Index of the phase of component `k` (1-based component), if free.
    pub fn phase(&self, d: usize, k: usize) -> Option<usize> {
        self.free.map(|v| v * (d - 1) + (k - 1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstellationCounts {
    pub s: usize,
    pub num_phases: usize,
    pub num_real_vars: usize,
    pub n_eq: usize,
    /// Equations other than the modulus constraints.
    pub n_quartic: usize,
    pub n_modulus: usize,
}

pub fn describe(spec: &ConstellationSpec) -> ConstellationCounts {
    let s = spec.free_vectors();
    let d = spec.d();
    let sum_sq: usize = spec.sizes()[1..].iter().map(|k| k * k).sum();
    let n_modulus = s * (d - 1);
    // ½(s+1)(s-1) + ½Σ size²; the sum is always even.
    let n_quartic = ((s + 1) * (s - 1) + sum_sq) / 2;
    ConstellationCounts {
        s,
        num_phases: n_modulus,
        num_real_vars: 2 * n_modulus,
        n_eq: n_quartic + n_modulus,
        n_quartic,
        n_modulus,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Re,
    Im,
    /// Coefficient of 1 in `z = a + bω`, `ω = exp(2πi/6)`.
    EisensteinA,
    /// Coefficient of ω in `z = a + bω`.
    EisensteinB,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub vector: usize,
    pub component: usize,
    pub part: Part,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Modulus,
    Orthogonality,
    Unbiasedness,
}

/// What a generated polynomial constrains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Descriptor {
    Phase {
        phase: usize,
    },
    Pair {
        a: (usize, usize),
        b: (usize, usize),
        #[serde(skip_serializing_if = "Option::is_none", default)]
        part: Option<Part>,
    },
    Column {
        vector: usize,
        column: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemPolynomial {
    pub poly: Polynomial,
    pub role: Role,
    pub pair: Descriptor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSystem {
    pub label: String,
    pub variables: Vec<Variable>,
    pub polys: Vec<SystemPolynomial>,
}

impl PolynomialSystem {
    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn polynomials(&self) -> Vec<Polynomial> {
        self.polys.iter().map(|p| p.poly.clone()).collect()
    }

    pub fn count(&self, role: Role) -> usize {
        self.polys.iter().filter(|p| p.role == role).count()
    }

    pub fn evaluate_exact(&self, point: &[BigRational]) -> Result<Vec<BigRational>> {
        self.check_len(point.len())?;
        self.polys.iter().map(|p| p.poly.evaluate(point)).collect()
    }

    pub fn evaluate_f64(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_len(point.len())?;
        self.polys.iter().map(|p| p.poly.evaluate_f64(point)).collect()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.nvars() {
            return Err(Error::LengthMismatch {
                expected: self.nvars(),
                got,
            });
        }
        Ok(())
    }
}

/// A complex-valued polynomial `re + i·im` over the real variables.
#[derive(Clone)]
struct Cplx {
    re: Polynomial,
    im: Polynomial,
}

impl Cplx {
    fn conj_mul(&self, other: &Cplx) -> Cplx {
        // conj(a)·b = (ar·br + ai·bi) + i (ar·bi - ai·br)
        Cplx {
            re: &(&self.re * &other.re) + &(&self.im * &other.im),
            im: &(&self.re * &other.im) - &(&self.im * &other.re),
        }
    }

    fn add(&self, other: &Cplx) -> Cplx {
        Cplx {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    fn norm_sqr(&self) -> Polynomial {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }
}

pub fn build_system(spec: &ConstellationSpec) -> PolynomialSystem {
    let d = spec.d();
    let counts = describe(spec);
    let n = counts.num_real_vars;
    let layout = spec.layout();

    let mut variables = Vec::with_capacity(n);
    for v in 0..counts.s {
        for k in 1..d {
            let phase = v * (d - 1) + k;
            for (part, letter) in [(Part::Re, 'x'), (Part::Im, 'y')] {
                variables.push(Variable {
                    name: format!("{letter}{phase}"),
                    vector: v,
                    component: k,
                    part,
                });
            }
        }
    }

    let mut polys = Vec::with_capacity(counts.n_eq);
    for phase in 0..counts.num_phases {
        let x = Polynomial::var(n, 2 * phase);
        let y = Polynomial::var(n, 2 * phase + 1);
        let p = &(&(&x * &x) + &(&y * &y)) - &Polynomial::one(n);
        polys.push(SystemPolynomial {
            poly: p,
            role: Role::Modulus,
            pair: Descriptor::Phase { phase: phase + 1 },
        });
    }

    // Components of d^{1/2}·v, i.e. (1, z_1, ..., z_{d-1}).
    let component = |slot: &VectorSlot, k: usize| -> Cplx {
        match slot.free.filter(|_| k > 0).and_then(|_| slot.phase(d, k)) {
            Some(ph) => Cplx {
                re: Polynomial::var(n, 2 * ph),
                im: Polynomial::var(n, 2 * ph + 1),
            },
            _ => Cplx {
                re: Polynomial::one(n),
                im: Polynomial::zero(n),
            },
        }
    };

    let dd = Polynomial::constant(n, rat(d as i64));
    for (i, u) in layout.iter().enumerate() {
        for v in &layout[i + 1..] {
            let mut ip = Cplx {
                re: Polynomial::zero(n),
                im: Polynomial::zero(n),
            };
            for k in 0..d {
                ip = ip.add(&component(u, k).conj_mul(&component(v, k)));
            }
            let a = (u.set, u.index);
            let b = (v.set, v.index);
            if u.set == v.set {
                for (part, poly) in [(Part::Re, ip.re), (Part::Im, ip.im)] {
                    polys.push(SystemPolynomial {
                        poly,
                        role: Role::Orthogonality,
                        pair: Descriptor::Pair { a, b, part: Some(part) },
                    });
                }
            } else {
                polys.push(SystemPolynomial {
                    poly: &ip.norm_sqr() - &dd,
                    role: Role::Unbiasedness,
                    pair: Descriptor::Pair { a, b, part: None },
                });
            }
        }
    }

    PolynomialSystem {
        label: spec.to_string(),
        variables,
        polys,
    }
}

/// Elements `P + Qω` of `Z[ω]`, `ω = exp(2πi/6)`, `ω² = ω - 1`, `ω̄ = 1 - ω`.
#[derive(Clone)]
struct Eis {
    p: Polynomial,
    q: Polynomial,
}

impl Eis {
    fn zero(n: usize) -> Self {
        Eis {
            p: Polynomial::zero(n),
            q: Polynomial::zero(n),
        }
    }

    fn add(&self, o: &Eis) -> Eis {
        Eis {
            p: &self.p + &o.p,
            q: &self.q + &o.q,
        }
    }

    /// Multiplication by ω: `ω(P + Qω) = -Q + (P + Q)ω`.
    fn times_omega(&self) -> Eis {
        Eis {
            p: -&self.q,
            q: &self.p + &self.q,
        }
    }

    fn times_omega_pow(&self, k: usize) -> Eis {
        (0..k % 6).fold(self.clone(), |acc, _| acc.times_omega())
    }

    /// `conj(self)·o`.
    fn conj_mul(&self, o: &Eis) -> Eis {
        // (a + bω̄)(a' + b'ω) = (aa' + bb' + ba') + (ab' - ba')ω
        let (a, b, a2, b2) = (&self.p, &self.q, &o.p, &o.q);
        Eis {
            p: &(&(a * a2) + &(b * b2)) + &(b * a2),
            q: &(a * b2) - &(b * a2),
        }
    }

    /// `|P + Qω|² = P² + PQ + Q²`.
    fn norm_sqr(&self) -> Polynomial {
        &(&(&self.p * &self.p) + &(&self.p * &self.q)) + &(&self.q * &self.q)
    }
}

/// Exponents of the cube root of unity in the spectral matrix
/// (see [`crate::linalg::spectral_matrix`]).
pub(crate) const SPECTRAL_POWERS: [[usize; 6]; 6] = [
    [0, 0, 0, 0, 0, 0],
    [0, 0, 1, 1, 2, 2],
    [0, 1, 0, 2, 2, 1],
    [0, 1, 2, 0, 1, 2],
    [0, 2, 2, 1, 0, 1],
    [0, 2, 1, 2, 1, 0],
];

/// Two orthogonal vectors `u, v ∈ C^6` unbiased to both the standard basis
/// and the columns of the spectral matrix.
///
/// Each vector is dephased, `(1, z_1, ..., z_5)/√6`, and each phase is written
/// in Eisenstein coordinates `z = a + bω` so that every coefficient is
/// rational. This gives 20 real variables and 23 constraints: 10 modulus
/// (`a² + ab + b² - 1`), 12 unbiasedness to the columns of S, and one
/// orthogonality condition `|6⟨u|v⟩|² = 0`. With `reduced` the
/// unbiasedness condition to the last column of S is dropped for each
/// vector (it follows from the other five plus the modulus constraints),
/// leaving 21.
pub fn spectral_pair_system(reduced: bool) -> PolynomialSystem {
    const D: usize = 6;
    let n = 2 * 2 * (D - 1);
    let mut variables = Vec::with_capacity(n);
    for v in 0..2 {
        for k in 1..D {
            let phase = v * (D - 1) + k;
            for (part, letter) in [(Part::EisensteinA, 'a'), (Part::EisensteinB, 'b')] {
                variables.push(Variable {
                    name: format!("{letter}{phase}"),
                    vector: v,
                    component: k,
                    part,
                });
            }
        }
    }

    let comp = |v: usize, k: usize| -> Eis {
        if k == 0 {
            Eis {
                p: Polynomial::one(n),
                q: Polynomial::zero(n),
            }
        } else {
            let ph = v * (D - 1) + (k - 1);
            Eis {
                p: Polynomial::var(n, 2 * ph),
                q: Polynomial::var(n, 2 * ph + 1),
            }
        }
    };

    let mut polys = Vec::new();
    for phase in 0..2 * (D - 1) {
        let z = Eis {
            p: Polynomial::var(n, 2 * phase),
            q: Polynomial::var(n, 2 * phase + 1),
        };
        polys.push(SystemPolynomial {
            poly: &z.norm_sqr() - &Polynomial::one(n),
            role: Role::Modulus,
            pair: Descriptor::Phase { phase: phase + 1 },
        });
    }

    let six = Polynomial::constant(n, rat(D as i64));
    let columns = if reduced { D - 1 } else { D };
    for v in 0..2 {
        for col in 0..columns {
            // 6⟨s_col|u⟩ = Σ_j conj(ω₃^p) z_j with ω₃ = ω², so conj(ω₃^p) = ω^{6-2p}
            let mut acc = Eis::zero(n);
            for (j, row) in SPECTRAL_POWERS.iter().enumerate() {
                acc = acc.add(&comp(v, j).times_omega_pow(6 - 2 * row[col]));
            }
            polys.push(SystemPolynomial {
                poly: &acc.norm_sqr() - &six,
                role: Role::Unbiasedness,
                pair: Descriptor::Column { vector: v, column: col },
            });
        }
    }

    let mut ip = Eis::zero(n);
    for k in 0..D {
        ip = ip.add(&comp(0, k).conj_mul(&comp(1, k)));
    }
    polys.push(SystemPolynomial {
        poly: ip.norm_sqr(),
        role: Role::Orthogonality,
        pair: Descriptor::Pair {
            a: (2, 0),
            b: (2, 1),
            part: None,
        },
    });

    PolynomialSystem {
        label: if reduced { "spectral-pair-reduced" } else { "spectral-pair" }.into(),
        variables,
        polys,
    }
}

/// JSON document emitted by the `polysys` command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemReport {
    pub spec: ConstellationSpec,
    pub counts: ConstellationCounts,
    pub variables: Vec<Variable>,
    pub polys: Vec<SystemPolynomial>,
}

impl SystemReport {
    pub fn new(spec: &ConstellationSpec) -> Self {
        let sys = build_system(spec);
        SystemReport {
            spec: spec.clone(),
            counts: describe(spec),
            variables: sys.variables,
            polys: sys.polys,
        }
    }
}
