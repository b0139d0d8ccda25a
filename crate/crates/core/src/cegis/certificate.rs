use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::confirm::ConfirmationReport;
use crate::error::{Error, Result};
use crate::phi::{BoundCertificate, DwellBound, PhiFunction};
use crate::plant::{StabilitySpec, SwitchedPlant};
use crate::poly::{monomial_from_powers, poly_from_terms, BoxDomain, Monomial, Polynomial, Term};

/// A synthesized non-zeno CLF with everything the switching law needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<u32>,
    /// SHA-256 of the model document, filled in by the front end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_hash: Option<String>,
    pub variables: Vec<String>,
    pub modes: Vec<String>,
    pub template: Vec<BTreeMap<String, u32>>,
    #[serde(rename = "V")]
    pub v: Vec<Term>,
    pub c: Vec<f64>,
    pub phi: BTreeMap<String, Vec<Term>>,
    pub eps: BTreeMap<String, f64>,
    pub lambda1: BTreeMap<String, Option<f64>>,
    pub lambda2: BTreeMap<String, Option<f64>>,
    pub beta_lb: f64,
    /// Minimum dwell time; absent when some mode has no certified bound.
    pub dwell_lb: Option<f64>,
    pub lambda: f64,
    pub alpha_scale: f64,
    pub domain: BoxDomain,
    pub spec: StabilitySpec,
    pub iterations: usize,
    pub witness_count: usize,
    pub confirmation: ConfirmationReport,
}

/// Certificate data in polynomial form, indexed like the plant's modes.
#[derive(Clone, Debug)]
pub struct ResolvedCertificate {
    pub v: Polynomial,
    pub phi: Vec<Polynomial>,
    pub eps: Vec<f64>,
    pub decrease: Vec<Polynomial>,
    pub alpha: Polynomial,
    pub beta_lb: f64,
    pub dwell_lb: Option<f64>,
    pub lambda: f64,
}

pub(crate) struct CertificateParts<'a> {
    pub plant: &'a SwitchedPlant,
    pub template: &'a [Monomial],
    pub c: &'a [f64],
    pub v: &'a Polynomial,
    pub phis: &'a [PhiFunction],
    pub eps: &'a [f64],
    pub bounds: &'a [Option<BoundCertificate>],
    pub dwell: Option<&'a DwellBound>,
    pub lambda: f64,
    pub alpha_scale: f64,
    pub beta_lb: f64,
    pub iterations: usize,
    pub witness_count: usize,
    pub confirmation: ConfirmationReport,
}

impl Certificate {
    pub(crate) fn assemble(p: CertificateParts) -> Self {
        let names = &p.plant.variables;
        let per_mode = |f: &dyn Fn(usize) -> Option<f64>| -> BTreeMap<String, Option<f64>> {
            p.plant.modes.iter().enumerate().map(|(q, m)| (m.id.clone(), f(q))).collect()
        };
        Certificate {
            model: p.plant.name.clone(),
            model_id: None,
            model_hash: None,
            variables: names.clone(),
            modes: p.plant.modes.iter().map(|m| m.id.clone()).collect(),
            template: p.template.iter().map(|m| crate::poly::monomial_to_powers(m, names)).collect(),
            v: crate::poly::poly_to_terms(p.v, names),
            c: p.c.to_vec(),
            phi: p
                .plant
                .modes
                .iter()
                .zip(p.phis)
                .map(|(m, phi)| (m.id.clone(), crate::poly::poly_to_terms(&phi.polynomial().with_nvars(names.len()), names)))
                .collect(),
            eps: p.plant.modes.iter().zip(p.eps).map(|(m, &e)| (m.id.clone(), e)).collect(),
            lambda1: per_mode(&|q| p.bounds[q].map(|b| b.lambda1)),
            lambda2: per_mode(&|q| p.bounds[q].map(|b| b.lambda2)),
            beta_lb: p.beta_lb,
            dwell_lb: p.dwell.map(|d| d.delta_lb).filter(|d| d.is_finite()),
            lambda: p.lambda,
            alpha_scale: p.alpha_scale,
            domain: p.plant.domain.clone(),
            spec: p.plant.spec.clone(),
            iterations: p.iterations,
            witness_count: p.witness_count,
            confirmation: p.confirmation,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Converts back to polynomials, checking that the plant's variables and
    /// modes match the ones the certificate was issued for.
    pub fn resolve(&self, plant: &SwitchedPlant) -> Result<ResolvedCertificate> {
        if self.variables != plant.variables {
            return Err(Error::Invalid("certificate variables do not match the model".into()));
        }
        let ids: Vec<String> = plant.modes.iter().map(|m| m.id.clone()).collect();
        if self.modes != ids {
            return Err(Error::Invalid("certificate modes do not match the model".into()));
        }
        let names = &self.variables;
        let n = names.len();
        let v = poly_from_terms(&self.v, names)?;
        for t in &self.template {
            monomial_from_powers(t, names)?;
        }
        let mut phi = Vec::with_capacity(ids.len());
        let mut eps = Vec::with_capacity(ids.len());
        for id in &ids {
            let terms = self.phi.get(id).ok_or_else(|| Error::Invalid(format!("no phi for mode {id}")))?;
            phi.push(poly_from_terms(terms, names)?);
            eps.push(*self.eps.get(id).ok_or_else(|| Error::Invalid(format!("no eps for mode {id}")))?);
        }
        let decrease = phi.iter().zip(&eps).map(|(p, &e)| p.scale(e)).collect();
        let alpha = Polynomial::from_terms(n, (0..n).map(|i| (Monomial::var_pow(i, 2), self.alpha_scale)));
        Ok(ResolvedCertificate {
            v,
            phi,
            eps,
            decrease,
            alpha,
            beta_lb: self.beta_lb,
            dwell_lb: self.dwell_lb,
            lambda: self.lambda,
        })
    }
}

impl ResolvedCertificate {
    /// Membership in `P* = {x in P : V(x) < beta}`.
    pub fn in_sublevel(&self, domain: &BoxDomain, x: &[f64]) -> bool {
        domain.contains(x) && self.v.eval_unchecked(x) < self.beta_lb
    }
}
