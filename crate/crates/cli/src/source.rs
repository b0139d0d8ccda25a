use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use clfsynth_core::cegis::{Certificate, ResolvedCertificate};
use clfsynth_core::plant::{catalog_source, load_model, model_to_json, Model, SwitchedPlant};
use clfsynth_core::poly::monomial_from_powers;
use clfsynth_core::Monomial;
use sha2::{Digest, Sha256};

use crate::exit::{CliResult, Failure};
use crate::ModelSource;

/// A model together with the hash certificates are bound to.
pub struct LoadedModel {
    pub model: Model,
    pub hash: String,
}

impl LoadedModel {
    pub fn switched(&self) -> CliResult<SwitchedPlant> {
        self.model.plant.to_switched().map_err(|e| Failure::data(e.to_string()))
    }
}

/// SHA-256 of the canonical serialization, so formatting does not matter.
pub fn model_hash(model: &Model) -> String {
    hex::encode(Sha256::digest(model_to_json(model).as_bytes()))
}

pub fn load(src: &ModelSource) -> CliResult<LoadedModel> {
    let text = match (&src.model, src.bench) {
        (Some(path), _) => read(path)?,
        (None, Some(id)) => catalog_source(id).map_err(|e| Failure::usage(e.to_string()))?.to_string(),
        (None, None) => return Err(Failure::usage("either --model or --bench is required")),
    };
    let model = load_model(&text).map_err(|e| Failure::data(e.to_string()))?;
    let hash = model_hash(&model);
    Ok(LoadedModel { model, hash })
}

pub fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

pub fn write(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

/// Loads a certificate and checks that it was issued for `model`.
pub fn load_certificate(path: &Path, model: &LoadedModel, plant: &SwitchedPlant) -> CliResult<(Certificate, ResolvedCertificate)> {
    let cert = Certificate::from_json(&read(path)?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    match &cert.model_hash {
        Some(h) if *h == model.hash => {}
        Some(h) => return Err(Failure::data(format!("certificate was issued for model {h}, this model hashes to {}", model.hash))),
        None => return Err(Failure::data("certificate carries no model hash")),
    }
    let resolved = cert.resolve(plant).map_err(|e| Failure::data(e.to_string()))?;
    Ok((cert, resolved))
}

/// `quad` or a comma list of monomials such as `x^2,x*y,y^4`.
pub fn parse_template(spec: &str, names: &[String]) -> CliResult<Option<Vec<Monomial>>> {
    if spec.trim() == "quad" {
        return Ok(None);
    }
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let mut powers = BTreeMap::new();
        for factor in item.split('*').map(str::trim) {
            let (name, exp) = match factor.split_once('^') {
                Some((n, e)) => (n.trim(), e.trim().parse::<u32>().map_err(|_| Failure::usage(format!("bad exponent in `{item}`")))?),
                None => (factor, 1),
            };
            *powers.entry(name.to_string()).or_insert(0) += exp;
        }
        out.push(monomial_from_powers(&powers, names).map_err(|e| Failure::usage(e.to_string()))?);
    }
    if out.is_empty() {
        return Err(Failure::usage("empty template"));
    }
    Ok(Some(out))
}

/// One value for every mode, or one value per mode.
pub fn parse_list(spec: &str, count: usize, what: &str) -> CliResult<Vec<f64>> {
    let vals = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::usage(format!("bad {what} value `{s}`"))))
        .collect::<CliResult<Vec<_>>>()?;
    match vals.len() {
        1 => Ok(vec![vals[0]; count]),
        k if k == count => Ok(vals),
        k => Err(Failure::usage(format!("{what} needs 1 or {count} values, got {k}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_parsing() {
        let names = vec!["x".to_string(), "y".to_string()];
        assert!(parse_template("quad", &names).unwrap().is_none());
        let t = parse_template("x^2, x*y ,y^4", &names).unwrap().unwrap();
        assert_eq!(t, vec![Monomial::var_pow(0, 2), Monomial::from_pairs(vec![(0, 1), (1, 1)]), Monomial::var_pow(1, 4)]);
        assert!(parse_template("z^2", &names).is_err());
        assert!(parse_template("x^a", &names).is_err());
    }

    #[test]
    fn list_broadcast() {
        assert_eq!(parse_list("0.5", 3, "eps").unwrap(), vec![0.5; 3]);
        assert_eq!(parse_list("1,2", 2, "eps").unwrap(), vec![1.0, 2.0]);
        assert!(parse_list("1,2", 3, "eps").is_err());
    }
}
