use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{ControlAffinePlant, Mode, StabilitySpec, SwitchedPlant};
use crate::error::{Error, Result};
use crate::poly::{monomial_from_powers, monomial_to_powers, poly_from_terms, poly_to_terms, BoxDomain, Monomial, Term};

/// Template choice: the full quadratic form or an explicit monomial list.
#[derive(Clone, Debug, PartialEq)]
pub enum TemplateSpec {
    Quadratic,
    Monomials(Vec<Monomial>),
}

/// How the decrease function `phi_q` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiPolicy {
    /// Largest exponents admitted by the phi-boundedness criterion.
    Auto,
    /// `sum x_i^2` for every mode.
    Quad,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelDefaults {
    pub eps: f64,
    pub alpha_scale: f64,
    pub template: TemplateSpec,
    pub phi: PhiPolicy,
    pub max_iters: Option<usize>,
    pub lambda: Option<f64>,
}

impl Default for ModelDefaults {
    fn default() -> Self {
        Self { eps: 0.01, alpha_scale: 0.01, template: TemplateSpec::Quadratic, phi: PhiPolicy::Auto, max_iters: None, lambda: None }
    }
}

/// Reference outcome of a catalog entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub iterations: Option<u32>,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_q: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Plant {
    Switched(SwitchedPlant),
    Affine(ControlAffinePlant),
}

impl Plant {
    pub fn variables(&self) -> &[String] {
        match self {
            Plant::Switched(p) => &p.variables,
            Plant::Affine(p) => &p.variables,
        }
    }

    pub fn domain(&self) -> &BoxDomain {
        match self {
            Plant::Switched(p) => &p.domain,
            Plant::Affine(p) => &p.domain,
        }
    }

    pub fn spec(&self) -> &StabilitySpec {
        match self {
            Plant::Switched(p) => &p.spec,
            Plant::Affine(p) => &p.spec,
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Plant::Affine(_))
    }

    /// The switched plant, reducing control-affine plants to vertex modes.
    pub fn to_switched(&self) -> Result<SwitchedPlant> {
        match self {
            Plant::Switched(p) => Ok(p.clone()),
            Plant::Affine(p) => super::model::affine_to_switched(p),
        }
    }
}

/// A loaded model document.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub id: Option<u32>,
    pub name: String,
    pub plant: Plant,
    pub defaults: ModelDefaults,
    pub reference: Option<ReferenceRow>,
    pub notes: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct ModeDoc {
    id: String,
    field: Vec<Vec<Term>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TemplateDoc {
    Named(String),
    List(Vec<BTreeMap<String, u32>>),
}

#[derive(Serialize, Deserialize)]
struct DefaultsDoc {
    #[serde(default)]
    eps: Option<f64>,
    #[serde(default)]
    alpha_scale: Option<f64>,
    #[serde(default)]
    template: Option<TemplateDoc>,
    #[serde(default)]
    phi: Option<PhiPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<u32>,
    name: String,
    variables: Vec<String>,
    domain: BoxDomain,
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    modes: Vec<ModeDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    drift: Vec<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    g: Vec<Vec<Vec<Term>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    vertices: Vec<Vec<f64>>,
    spec: StabilitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    defaults: Option<DefaultsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<ReferenceRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    notes: Option<serde_json::Value>,
}

/// Parses and validates a model document.
pub fn load_model(source: &str) -> Result<Model> {
    let doc: ModelDoc = serde_json::from_str(source).map_err(|e| Error::Model(format!("schema: {e}")))?;
    let names = &doc.variables;
    let mut seen = names.clone();
    seen.sort();
    seen.dedup();
    if seen.len() != names.len() {
        return Err(Error::Model("duplicate variable names".into()));
    }
    let domain = BoxDomain::new(doc.domain.lower.clone(), doc.domain.upper.clone())?;
    let polys = |v: &[Vec<Term>]| -> Result<Vec<_>> {
        v.iter().map(|t| poly_from_terms(t, names).map(|p| p.with_nvars(names.len()))).collect()
    };
    let plant = match doc.kind.as_str() {
        "switched" => {
            let modes = doc
                .modes
                .iter()
                .map(|m| Ok(Mode { id: m.id.clone(), field: polys(&m.field)? }))
                .collect::<Result<Vec<_>>>()?;
            Plant::Switched(SwitchedPlant::new(doc.name.clone(), names.clone(), modes, domain, doc.spec.clone())?)
        }
        "affine" => {
            let p = ControlAffinePlant {
                name: doc.name.clone(),
                variables: names.clone(),
                drift: polys(&doc.drift)?,
                input_matrix: doc.g.iter().map(|row| polys(row)).collect::<Result<_>>()?,
                vertices: doc.vertices.clone(),
                domain,
                spec: doc.spec.clone(),
            };
            p.validate()?;
            Plant::Affine(p)
        }
        other => return Err(Error::Model(format!("unknown kind `{other}`"))),
    };
    let mut defaults = ModelDefaults::default();
    if plant.is_affine() {
        defaults.phi = PhiPolicy::Quad;
    }
    if let Some(d) = &doc.defaults {
        if let Some(e) = d.eps {
            defaults.eps = e;
        }
        if let Some(a) = d.alpha_scale {
            defaults.alpha_scale = a;
        }
        if let Some(p) = d.phi {
            defaults.phi = p;
        }
        defaults.max_iters = d.max_iters;
        defaults.lambda = d.lambda;
        defaults.template = match &d.template {
            None => TemplateSpec::Quadratic,
            Some(TemplateDoc::Named(s)) if s == "quad" => TemplateSpec::Quadratic,
            Some(TemplateDoc::Named(s)) => return Err(Error::Model(format!("unknown template `{s}`"))),
            Some(TemplateDoc::List(l)) => TemplateSpec::Monomials(
                l.iter().map(|m| monomial_from_powers(m, names)).collect::<Result<_>>()?,
            ),
        };
    }
    if defaults.eps < 0.0 || !(defaults.alpha_scale > 0.0) {
        return Err(Error::Model("defaults need eps >= 0 and alpha_scale > 0".into()));
    }
    Ok(Model { id: doc.id, name: doc.name, plant, defaults, reference: doc.reference, notes: doc.notes })
}

/// Serializes a model back into the document schema.
pub fn model_to_json(model: &Model) -> String {
    let names = model.plant.variables().to_vec();
    let terms = |v: &[crate::poly::Polynomial]| v.iter().map(|p| poly_to_terms(p, &names)).collect::<Vec<_>>();
    let d = &model.defaults;
    let defaults = DefaultsDoc {
        eps: Some(d.eps),
        alpha_scale: Some(d.alpha_scale),
        template: Some(match &d.template {
            TemplateSpec::Quadratic => TemplateDoc::Named("quad".into()),
            TemplateSpec::Monomials(ms) => TemplateDoc::List(ms.iter().map(|m| monomial_to_powers(m, &names)).collect()),
        }),
        phi: Some(d.phi),
        max_iters: d.max_iters,
        lambda: d.lambda,
    };
    let mut doc = ModelDoc {
        id: model.id,
        name: model.name.clone(),
        variables: names.clone(),
        domain: model.plant.domain().clone(),
        kind: String::new(),
        modes: Vec::new(),
        drift: Vec::new(),
        g: Vec::new(),
        vertices: Vec::new(),
        spec: model.plant.spec().clone(),
        defaults: Some(defaults),
        reference: model.reference.clone(),
        notes: model.notes.clone(),
    };
    match &model.plant {
        Plant::Switched(p) => {
            doc.kind = "switched".into();
            doc.modes = p.modes.iter().map(|m| ModeDoc { id: m.id.clone(), field: terms(&m.field) }).collect();
        }
        Plant::Affine(p) => {
            doc.kind = "affine".into();
            doc.drift = terms(&p.drift);
            doc.g = p.input_matrix.iter().map(|r| terms(r)).collect();
            doc.vertices = p.vertices.clone();
        }
    }
    serde_json::to_string_pretty(&doc).expect("model serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "name": "toy", "variables": ["x"], "domain": {"lower": [-1], "upper": [1]},
        "kind": "switched",
        "modes": [{"id": "q", "field": [[{"coeff": -1, "powers": {"x": 1}}]]}],
        "spec": {"kind": "AS", "target_radius": 0}
    }"#;

    #[test]
    fn loads_minimal_document_with_defaults() {
        let m = load_model(SMALL).unwrap();
        assert_eq!(m.defaults.template, TemplateSpec::Quadratic);
        assert_eq!(m.defaults.phi, PhiPolicy::Auto);
        let again = load_model(&model_to_json(&m)).unwrap();
        assert_eq!(again.plant, m.plant);
    }

    #[test]
    fn load_errors() {
        assert!(load_model(&SMALL.replace(r#""modes": [{"id": "q", "field": [[{"coeff": -1, "powers": {"x": 1}}]]}]"#, r#""modes": []"#)).is_err());
        assert!(load_model(&SMALL.replace(r#""x": 1"#, r#""y": 1"#)).is_err());
        assert!(load_model(&SMALL.replace("switched", "hybrid")).is_err());
        assert!(load_model("{").is_err());
        assert!(load_model(&SMALL.replace(r#""kind": "AS", "target_radius": 0"#, r#""kind": "AS", "target_radius": 1"#)).is_err());
    }
}
