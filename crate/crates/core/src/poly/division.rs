use num_traits::Zero;

use super::{MonomialOrder, Polynomial, Term};
use crate::{Error, Result};

/// Multivariate division of `p` by `divisors` under `order`.
///
/// Returns `(remainder, quotients)` with `p = Σ quotients[i] * divisors[i] + remainder`
/// and no term of the remainder divisible by any divisor's leading monomial.
/// Divisors are tried in list order.
pub fn normal_form(p: &Polynomial, divisors: &[Polynomial], order: MonomialOrder) -> Result<(Polynomial, Vec<Polynomial>)> {
    if divisors.is_empty() {
        return Err(Error::Empty("divisor list"));
    }
    let n = p.nvars();
    let mut divs = Vec::with_capacity(divisors.len());
    for d in divisors {
        if d.nvars() != n {
            return Err(Error::VariableCountMismatch { left: n, right: d.nvars() });
        }
        if d.is_zero() {
            return Err(Error::ZeroPolynomial("divisor"));
        }
        divs.push(d.clone().with_order(order));
    }

    let mut cur = p.clone().with_order(order);
    let mut rem: Vec<Term> = Vec::new();
    let mut quot: Vec<Vec<Term>> = vec![Vec::new(); divs.len()];

    while let Some((lm, lc)) = cur.leading_term().cloned() {
        let hit = divs.iter().enumerate().find_map(|(i, d)| {
            let (dm, dc) = d.leading_term().expect("nonzero divisor");
            dm.quotient_of(&lm).map(|q| (i, q, &lc / dc))
        });
        match hit {
            Some((i, qm, qc)) => {
                cur = cur.sub_mul_term(&qc, &qm, &divs[i]);
                quot[i].push((qm, qc));
            }
            None => {
                rem.push((lm, lc));
                cur.pop_leading();
            }
        }
    }

    let remainder = Polynomial {
        nvars: n,
        order,
        terms: rem,
    };
    let quotients = quot
        .into_iter()
        .map(|terms| Polynomial {
            nvars: n,
            order,
            terms: terms.into_iter().filter(|(_, c)| !c.is_zero()).collect::<Vec<_>>(),
        })
        .collect();
    Ok((remainder, quotients))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s, &["x", "y"]).unwrap()
    }

    #[test]
    fn single_variable_quotient() {
        let (r, q) = normal_form(&p("x^2"), &[p("x")], MonomialOrder::GRevLex).unwrap();
        assert!(r.is_zero());
        assert_eq!(q[0], p("x"));
    }

    #[test]
    fn self_division_leaves_nothing() {
        let f = p("x^2 + 1");
        let (r, q) = normal_form(&f, std::slice::from_ref(&f), MonomialOrder::GRevLex).unwrap();
        assert!(r.is_zero());
        assert_eq!(q[0], Polynomial::one(2));
    }

    #[test]
    fn two_divisor_lex_example() {
        // x^2*y + 1 = x*(x*y - 1) + (x + 1), and x + 1 is irreducible by x*y, y^2.
        let f = p("x^2*y + 1");
        let divs = [p("x*y - 1"), p("y^2 - 1")];
        let (r, q) = normal_form(&f, &divs, MonomialOrder::Lex).unwrap();
        assert_eq!(r, p("x + 1"));
        assert_eq!(q[0], p("x"));
        assert!(q[1].is_zero());
        let rebuilt = &(&(&q[0] * &divs[0]) + &(&q[1] * &divs[1])) + &r;
        assert_eq!(rebuilt, f);
    }

    #[test]
    fn rejects_zero_and_empty_divisors() {
        assert!(matches!(
            normal_form(&p("x"), &[Polynomial::zero(2)], MonomialOrder::Lex),
            Err(Error::ZeroPolynomial(_))
        ));
        assert!(normal_form(&p("x"), &[], MonomialOrder::Lex).is_err());
    }

    #[test]
    fn remainder_has_no_divisible_terms() {
        let f = p("x^3*y^2 - 2*x*y + 5*y^3 + 7");
        let divs = [p("x^2 - y"), p("x*y^2 + 1")];
        let (r, q) = normal_form(&f, &divs, MonomialOrder::GRevLex).unwrap();
        for (m, _) in r.terms() {
            for d in &divs {
                let d = d.clone().with_order(MonomialOrder::GRevLex);
                assert!(!d.leading_monomial().unwrap().divides(m));
            }
        }
        let mut rebuilt = r.clone();
        for (qi, di) in q.iter().zip(&divs) {
            rebuilt = &rebuilt + &(qi * di);
        }
        assert_eq!(rebuilt, f);
        assert_eq!(rebuilt.evaluate(&[rat(2), rat(3)]).unwrap(), f.evaluate(&[rat(2), rat(3)]).unwrap());
    }
}
