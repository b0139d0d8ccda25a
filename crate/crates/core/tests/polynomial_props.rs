use clfsynth_core::plant::{benchmark_catalog, Plant, SpecKind};
use clfsynth_core::poly::eval_field;
use clfsynth_core::{BoxDomain, Monomial, Polynomial};
use proptest::prelude::*;

const N: usize = 3;

fn poly(max_exp: u32, max_terms: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0..=max_exp, N), -3.0..3.0f64), 0..=max_terms)
        .prop_map(|terms| Polynomial::from_terms(N, terms.into_iter().map(|(e, c)| (Monomial::from_dense(&e), c))))
}

fn point(r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, N)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

fn rk4(field: &[Polynomial], x: &[f64], h: f64) -> Vec<f64> {
    let shift = |k: &[f64], s: f64| x.iter().zip(k).map(|(a, b)| a + s * b).collect::<Vec<_>>();
    let k1 = eval_field(field, x);
    let k2 = eval_field(field, &shift(&k1, h / 2.0));
    let k3 = eval_field(field, &shift(&k2, h / 2.0));
    let k4 = eval_field(field, &shift(&k3, h));
    (0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

proptest! {
    #[test]
    fn ring_operations_commute_with_evaluation(p in poly(3, 5), q in poly(3, 5), x in point(2.0)) {
        let (pv, qv) = (p.eval(&x).unwrap(), q.eval(&x).unwrap());
        prop_assert!(close(p.add(&q).eval(&x).unwrap(), pv + qv, 1e-12));
        prop_assert!(close(p.mul(&q).eval(&x).unwrap(), pv * qv, 1e-12));
        prop_assert!(close(p.sub(&q).eval(&x).unwrap(), pv - qv, 1e-12));
    }

    #[test]
    fn lie_derivative_matches_flow(p in poly(3, 4), f in prop::collection::vec(poly(2, 3), N), x in point(1.0)) {
        let h = 1e-4;
        let lie = p.lie_derivative(&f).unwrap().eval(&x).unwrap();
        let fwd = p.eval(&rk4(&f, &x, h)).unwrap();
        let bwd = p.eval(&rk4(&f, &x, -h)).unwrap();
        let fd = (fwd - bwd) / (2.0 * h);
        // central difference of a smooth flow: O(h^2) with moderate constants
        prop_assert!((lie - fd).abs() <= 1e-5 * (1.0 + lie.abs()), "lie {lie} fd {fd}");
    }

    #[test]
    fn partials_match_central_differences(p in poly(4, 5), x in point(1.5), i in 0..N) {
        let h = 1e-4;
        let mut up = x.clone();
        let mut down = x.clone();
        up[i] += h;
        down[i] -= h;
        let fd = (p.eval(&up).unwrap() - p.eval(&down).unwrap()) / (2.0 * h);
        let exact = p.partial(i).eval(&x).unwrap();
        let scale = p.abs_coeff_sum() * 2.0f64.powi(p.degree() as i32);
        prop_assert!((exact - fd).abs() <= 1e-6 * (1.0 + scale), "exact {exact} fd {fd}");
    }

    #[test]
    fn interval_evaluation_encloses_samples(
        p in poly(4, 5),
        bounds in prop::collection::vec((-2.0..2.0f64, 0.0..2.0f64), N),
        t in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, N), 1000),
    ) {
        let lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let upper: Vec<f64> = bounds.iter().map(|b| b.0 + b.1).collect();
        let domain = BoxDomain::new(lower.clone(), upper.clone()).unwrap();
        let iv = p.interval_eval(&domain);
        for s in &t {
            let x: Vec<f64> = (0..N).map(|i| lower[i] + s[i] * (upper[i] - lower[i])).collect();
            let v = p.eval(&x).unwrap();
            let tol = 1e-12 * (1.0 + v.abs());
            prop_assert!(iv.lo - tol <= v && v <= iv.hi + tol, "{v} outside [{}, {}]", iv.lo, iv.hi);
        }
    }

    #[test]
    fn affine_reduction_is_linear_in_the_input(weights in prop::collection::vec(0.01..1.0f64, 16), s in prop::collection::vec(0.0..=1.0f64, 4), pick in 0usize..7) {
        let affine: Vec<_> = benchmark_catalog().into_iter().filter_map(|m| match m.plant {
            Plant::Affine(a) => Some(a),
            Plant::Switched(_) => None,
        }).collect();
        let a = &affine[pick % affine.len()];
        let switched = Plant::Affine(a.clone()).to_switched().unwrap();
        let k = a.vertices.len();
        let total: f64 = weights[..k].iter().sum();
        let lam: Vec<f64> = weights[..k].iter().map(|w| w / total).collect();
        let x: Vec<f64> = (0..a.n()).map(|i| a.domain.lower[i] + s[i % 4] * (a.domain.upper[i] - a.domain.lower[i])).collect();
        let u: Vec<f64> = (0..a.vertices[0].len()).map(|j| (0..k).map(|v| lam[v] * a.vertices[v][j]).sum()).collect();
        for i in 0..a.n() {
            let mixed: f64 = (0..k).map(|v| lam[v] * switched.modes[v].field[i].eval_unchecked(&x)).sum();
            let direct = a.drift[i].eval_unchecked(&x) + a.input_matrix[i].iter().zip(&u).map(|(g, uj)| g.eval_unchecked(&x) * uj).sum::<f64>();
            prop_assert!((mixed - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
    }
}

#[test]
fn catalog_plants_satisfy_load_invariants() {
    for model in benchmark_catalog() {
        let plant = model.plant.to_switched().unwrap();
        assert!(plant.domain.lower.iter().zip(&plant.domain.upper).all(|(l, u)| l <= u));
        if plant.spec.kind == SpecKind::AS && !model.plant.is_affine() {
            assert!(plant.modes.iter().any(|m| m.vanishes_at_origin()), "{}", model.name);
        }
    }
}

#[test]
fn trigonometric_systems_record_their_substitution() {
    for id in [19, 20, 21] {
        let model = clfsynth_core::plant::catalog_entry(id).unwrap();
        let notes = model.notes.expect("trigonometric systems carry notes");
        let bound = notes["remainder_bound"].as_f64().unwrap();
        assert!(bound.is_finite() && bound > 0.0, "system {id}");
        assert!(notes["polynomialization"].as_str().unwrap().contains("^3/6"));
    }
}
