use mucert::poly::{normal_form, ratio, Monomial, MonomialOrder, Polynomial};
use num_rational::BigRational;
use proptest::prelude::*;

const N: usize = 3;

fn order() -> impl Strategy<Value = MonomialOrder> {
    prop_oneof![Just(MonomialOrder::Lex), Just(MonomialOrder::GrLex), Just(MonomialOrder::GRevLex)]
}

fn poly(max_terms: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..3, N), -9i64..=9, 1i64..=4), 0..=max_terms).prop_map(|terms| {
        Polynomial::from_terms(
            N,
            MonomialOrder::default(),
            terms.into_iter().map(|(e, n, d)| (Monomial::new(e), ratio(n, d))),
        )
    })
}

fn point() -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec((-5i64..=5, 1i64..=3).prop_map(|(n, d)| ratio(n, d)), N)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(p in poly(4), q in poly(4), r in poly(3)) {
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert_eq!(&p * &q, &q * &p);
        prop_assert!((&p - &p).is_zero());
    }

    #[test]
    fn evaluation_is_additive(p in poly(5), q in poly(5), x in point()) {
        let lhs = (&p + &q).evaluate(&x).unwrap();
        prop_assert_eq!(lhs, p.evaluate(&x).unwrap() + q.evaluate(&x).unwrap());
        let prod = (&p * &q).evaluate(&x).unwrap();
        prop_assert_eq!(prod, p.evaluate(&x).unwrap() * q.evaluate(&x).unwrap());
    }

    #[test]
    fn division_reconstructs(p in poly(6), divs in prop::collection::vec(poly(3), 1..4), ord in order()) {
        let divs: Vec<Polynomial> = divs.into_iter().filter(|d| !d.is_zero()).collect();
        prop_assume!(!divs.is_empty());
        let p = p.with_order(ord);
        let divs: Vec<Polynomial> = divs.into_iter().map(|d| d.with_order(ord)).collect();
        let (rem, quots) = normal_form(&p, &divs, ord).unwrap();
        let mut sum = rem.clone();
        for (q, d) in quots.iter().zip(&divs) {
            sum = &sum + &(q * d);
        }
        prop_assert_eq!(sum, p);
        for (m, _) in rem.terms() {
            for d in &divs {
                prop_assert!(!d.leading_monomial().unwrap().divides(m));
            }
        }
    }

    #[test]
    fn json_round_trip(p in poly(6)) {
        let text = serde_json::to_string(&p).unwrap();
        let back: Polynomial = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }
}
