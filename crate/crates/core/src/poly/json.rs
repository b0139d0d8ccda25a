use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::monomial::Monomial;
use super::polynomial::Polynomial;
use crate::error::{Error, Result};

/// One entry of the JSON term list `{"coeff": r, "powers": {"x1": e1, ..}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    #[serde(default)]
    pub powers: BTreeMap<String, u32>,
}

pub fn monomial_from_powers(powers: &BTreeMap<String, u32>, names: &[String]) -> Result<Monomial> {
    let mut pairs = Vec::with_capacity(powers.len());
    for (name, &e) in powers {
        let i = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.clone()))?;
        pairs.push((i, e));
    }
    Ok(Monomial::from_pairs(pairs))
}

pub fn monomial_to_powers(m: &Monomial, names: &[String]) -> BTreeMap<String, u32> {
    m.powers().iter().map(|&(v, e)| (names[v].clone(), e)).collect()
}

pub fn poly_from_terms(terms: &[Term], names: &[String]) -> Result<Polynomial> {
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        if !t.coeff.is_finite() {
            return Err(Error::Invalid(format!("non-finite coefficient {}", t.coeff)));
        }
        out.push((monomial_from_powers(&t.powers, names)?, t.coeff));
    }
    Ok(Polynomial::from_terms(names.len(), out))
}

pub fn poly_to_terms(p: &Polynomial, names: &[String]) -> Vec<Term> {
    p.terms()
        .map(|(m, c)| Term { coeff: c, powers: monomial_to_powers(m, names) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let names: Vec<String> = vec!["x".into(), "y".into()];
        let src = r#"[{"coeff": 2.5, "powers": {"x": 2, "y": 1}}, {"coeff": -1, "powers": {}}, {"coeff": 1, "powers": {"x": 2, "y": 1}}]"#;
        let terms: Vec<Term> = serde_json::from_str(src).unwrap();
        let p = poly_from_terms(&terms, &names).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.eval(&[1.0, 2.0]).unwrap(), 3.5 * 2.0 - 1.0);
        let back = poly_from_terms(&poly_to_terms(&p, &names), &names).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let names: Vec<String> = vec!["x".into()];
        let terms = vec![Term { coeff: 1.0, powers: [("q".to_string(), 1)].into() }];
        assert!(matches!(poly_from_terms(&terms, &names), Err(Error::UnknownVariable(_))));
    }
}
