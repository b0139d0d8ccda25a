use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{BoxDomain, Monomial, Polynomial};

/// Asymptotic stability of the origin, or region stability around a target ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecKind {
    AS,
    RS,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySpec {
    pub kind: SpecKind,
    #[serde(default)]
    pub target_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_radius: Option<f64>,
}

impl StabilitySpec {
    pub fn asymptotic() -> Self {
        Self { kind: SpecKind::AS, target_radius: 0.0, init_radius: None }
    }

    pub fn region(r: f64) -> Self {
        Self { kind: SpecKind::RS, target_radius: r, init_radius: None }
    }

    /// Radius of the ball excluded from the CLF conditions (0 for AS).
    pub fn excluded_radius(&self) -> f64 {
        match self.kind {
            SpecKind::AS => 0.0,
            SpecKind::RS => self.target_radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SpecKind::AS if self.target_radius != 0.0 => {
                Err(Error::Model("AS spec must have target_radius = 0".into()))
            }
            SpecKind::RS if !(self.target_radius > 0.0) => {
                Err(Error::Model("RS spec needs a positive target_radius".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub id: String,
    pub field: Vec<Polynomial>,
}

impl Mode {
    /// True when every component has a negligible constant term.
    pub fn vanishes_at_origin(&self) -> bool {
        self.field.iter().all(|p| p.coeff(&Monomial::one()).abs() <= 1e-9)
    }
}

/// A switched polynomial plant: modes with polynomial vector fields on a box.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchedPlant {
    pub name: String,
    pub variables: Vec<String>,
    pub modes: Vec<Mode>,
    pub domain: BoxDomain,
    pub spec: StabilitySpec,
}

impl SwitchedPlant {
    pub fn new(
        name: impl Into<String>,
        variables: Vec<String>,
        modes: Vec<Mode>,
        domain: BoxDomain,
        spec: StabilitySpec,
    ) -> Result<Self> {
        let plant = Self { name: name.into(), variables, modes, domain, spec };
        plant.validate()?;
        Ok(plant)
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        if self.spec.kind == SpecKind::AS && !self.modes.iter().any(Mode::vanishes_at_origin) {
            return Err(Error::Model("AS spec but no mode has an equilibrium at the origin".into()));
        }
        Ok(())
    }

    fn validate_structure(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::Model("no state variables".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Model("empty modes list".into()));
        }
        if self.domain.dim() != n {
            return Err(Error::Model(format!("domain has dimension {}, plant has {n} variables", self.domain.dim())));
        }
        for m in &self.modes {
            if m.field.len() != n {
                return Err(Error::Model(format!("mode `{}` has {} components, expected {n}", m.id, m.field.len())));
            }
            if m.field.iter().any(|p| p.nvars() > n) {
                return Err(Error::Model(format!("mode `{}` uses undeclared variables", m.id)));
            }
        }
        self.spec.validate()
    }
}

/// `x' = f(x) + g(x) u` with `u` ranging over the convex hull of `vertices`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlAffinePlant {
    pub name: String,
    pub variables: Vec<String>,
    pub drift: Vec<Polynomial>,
    /// `n x p` input matrix.
    pub input_matrix: Vec<Vec<Polynomial>>,
    pub vertices: Vec<Vec<f64>>,
    pub domain: BoxDomain,
    pub spec: StabilitySpec,
}

impl ControlAffinePlant {
    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn inputs(&self) -> usize {
        self.input_matrix.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.drift.len() != n || self.input_matrix.len() != n {
            return Err(Error::Model("drift/input matrix row count differs from variable count".into()));
        }
        if self.domain.dim() != n {
            return Err(Error::Model("domain dimension mismatch".into()));
        }
        let p = self.inputs();
        if p == 0 || self.input_matrix.iter().any(|r| r.len() != p) {
            return Err(Error::Model("input matrix must be rectangular with at least one column".into()));
        }
        if self.vertices.is_empty() || self.vertices.iter().any(|v| v.len() != p) {
            return Err(Error::Model(format!("vertex list must be nonempty with {p}-vectors")));
        }
        if !origin_in_hull(&self.vertices) {
            return Err(Error::Model("input polytope must contain u = 0".into()));
        }
        self.spec.validate()?;
        let drift_mode = Mode { id: "drift".into(), field: self.drift.clone() };
        if self.spec.kind == SpecKind::AS && !drift_mode.vanishes_at_origin() {
            return Err(Error::Model("AS spec requires f(0) = 0".into()));
        }
        Ok(())
    }
}

fn origin_in_hull(vertices: &[Vec<f64>]) -> bool {
    crate::lp::in_convex_hull(&vec![0.0; vertices[0].len()], vertices)
}

/// Replaces the input polytope by its vertices: one mode `f + g u` per vertex.
pub fn affine_to_switched(plant: &ControlAffinePlant) -> Result<SwitchedPlant> {
    let n = plant.n();
    let modes = plant
        .vertices
        .iter()
        .map(|u| {
            let field = (0..n)
                .map(|i| {
                    let mut fi = plant.drift[i].clone().with_nvars(n);
                    for (j, &uj) in u.iter().enumerate() {
                        fi = fi.add(&plant.input_matrix[i][j].scale(uj));
                    }
                    fi
                })
                .collect();
            Mode { id: vertex_label(u), field }
        })
        .collect();
    // the equilibrium lives at u = 0, inside the hull rather than at a vertex
    let out = SwitchedPlant {
        name: plant.name.clone(),
        variables: plant.variables.clone(),
        modes,
        domain: plant.domain.clone(),
        spec: plant.spec.clone(),
    };
    out.validate_structure()?;
    Ok(out)
}

fn vertex_label(u: &[f64]) -> String {
    let parts: Vec<String> = u.iter().map(|v| format!("{v:+}")).collect();
    if parts.len() == 1 {
        format!("u{}", parts[0])
    } else {
        format!("u({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator() -> ControlAffinePlant {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        ControlAffinePlant {
            name: "osc".into(),
            variables: vec!["x".into(), "y".into()],
            drift: vec![y.clone(), x.scale(-1.0)],
            input_matrix: vec![vec![Polynomial::zero(2)], vec![Polynomial::constant(2, 1.0)]],
            vertices: vec![vec![-1.0], vec![1.0]],
            domain: BoxDomain::symmetric(2, 5.0),
            spec: StabilitySpec::asymptotic(),
        }
    }

    #[test]
    fn oscillator_reduction() {
        let p = oscillator();
        p.validate().unwrap();
        let s = affine_to_switched(&p).unwrap();
        assert_eq!(s.modes.len(), 2);
        assert_eq!(s.modes[0].id, "u-1");
        let pt = [0.3, -0.7];
        let f0: Vec<f64> = s.modes[0].field.iter().map(|f| f.eval(&pt).unwrap()).collect();
        let f1: Vec<f64> = s.modes[1].field.iter().map(|f| f.eval(&pt).unwrap()).collect();
        assert_eq!(f0, vec![-0.7, -0.3 - 1.0]);
        assert_eq!(f1, vec![-0.7, -0.3 + 1.0]);
    }

    #[test]
    fn zero_input_matrix_copies_drift() {
        let mut p = oscillator();
        p.input_matrix = vec![vec![Polynomial::zero(2)], vec![Polynomial::zero(2)]];
        let s = affine_to_switched(&p).unwrap();
        assert!(s.modes.iter().all(|m| m.field == p.drift));
    }

    #[test]
    fn box_input_gives_power_of_two_modes() {
        let mut p = oscillator();
        p.input_matrix = vec![
            vec![Polynomial::constant(2, 1.0), Polynomial::zero(2)],
            vec![Polynomial::zero(2), Polynomial::constant(2, 1.0)],
        ];
        p.vertices = vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]];
        p.validate().unwrap();
        assert_eq!(affine_to_switched(&p).unwrap().modes.len(), 4);
    }

    #[test]
    fn rejects_bad_plants() {
        let mut p = oscillator();
        p.vertices = vec![vec![1.0], vec![2.0]];
        assert!(p.validate().is_err());
        let s = SwitchedPlant::new("e", vec!["x".into()], vec![], BoxDomain::symmetric(1, 1.0), StabilitySpec::asymptotic());
        assert!(s.is_err());
        let shifted = Mode { id: "q".into(), field: vec![Polynomial::constant(1, 1.0)] };
        let s = SwitchedPlant::new("e", vec!["x".into()], vec![shifted], BoxDomain::symmetric(1, 1.0), StabilitySpec::asymptotic());
        assert!(s.is_err());
    }
}
