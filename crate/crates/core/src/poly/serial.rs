//! JSON form: `{"n": 4, "terms": [{"exp": [2,0,0,0], "num": "1", "den": "1"}, ...]}`
//! with big integers as decimal strings.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Monomial, MonomialOrder, Polynomial};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub exp: Vec<u32>,
    pub num: String,
    pub den: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolyJson {
    pub n: usize,
    pub terms: Vec<TermJson>,
}

impl From<&Polynomial> for PolyJson {
    fn from(p: &Polynomial) -> Self {
        PolyJson {
            n: p.nvars(),
            terms: p
                .terms()
                .iter()
                .map(|(m, c)| TermJson {
                    exp: m.exps().to_vec(),
                    num: c.numer().to_string(),
                    den: c.denom().to_string(),
                })
                .collect(),
        }
    }
}

impl TryFrom<PolyJson> for Polynomial {
    type Error = crate::Error;

    fn try_from(j: PolyJson) -> crate::Result<Polynomial> {
        let mut terms = Vec::with_capacity(j.terms.len());
        for t in j.terms {
            if t.exp.len() != j.n {
                return Err(crate::Error::LengthMismatch {
                    expected: j.n,
                    got: t.exp.len(),
                });
            }
            let num: BigInt = t
                .num
                .parse()
                .map_err(|_| crate::Error::Parse(format!("bad numerator `{}`", t.num)))?;
            let den: BigInt = t
                .den
                .parse()
                .map_err(|_| crate::Error::Parse(format!("bad denominator `{}`", t.den)))?;
            if den.is_zero() {
                return Err(crate::Error::Parse("zero denominator".into()));
            }
            terms.push((Monomial::new(t.exp), BigRational::new(num, den)));
        }
        Ok(Polynomial::from_terms(j.n, MonomialOrder::default(), terms))
    }
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = PolyJson::deserialize(d)?;
        Polynomial::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let p = Polynomial::parse("x^2 - 3/4*y", &["x", "y"]).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["terms"][0]["exp"], serde_json::json!([2, 0]));
        assert_eq!(v["terms"][1]["num"], "-3");
        assert_eq!(v["terms"][1]["den"], "4");
        let back: Polynomial = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_bad_terms() {
        let bad = r#"{"n":2,"terms":[{"exp":[1],"num":"1","den":"1"}]}"#;
        assert!(serde_json::from_str::<Polynomial>(bad).is_err());
        let bad = r#"{"n":1,"terms":[{"exp":[1],"num":"1","den":"0"}]}"#;
        assert!(serde_json::from_str::<Polynomial>(bad).is_err());
    }
}
