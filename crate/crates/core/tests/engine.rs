use clfsynth_core::candidate::{find_candidate, validate_witness, witness_rows, CandidateConstraintSystem, ConstraintRow, FindResult, WitnessRows};
use clfsynth_core::cegis::{relaxation, synthesize_model, ResolvedCertificate, Synthesis, SynthesisConfig, SynthesisOutcome};
use clfsynth_core::plant::{catalog_entry, SpecKind, SwitchedPlant};
use clfsynth_core::sdp::{check_candidate, CheckOutcome, Violation};
use clfsynth_core::sim::{audit_trace, default_step, simulate, SwitchingLaw};
use proptest::prelude::*;

fn row(v: &[f64]) -> ConstraintRow {
    ConstraintRow { a: v[..v.len() - 1].to_vec(), b: v[v.len() - 1] }
}

fn system(m: usize) -> impl Strategy<Value = CandidateConstraintSystem> {
    let r = move || prop::collection::vec(-1.0..1.0f64, m + 1);
    prop::collection::vec((r(), r(), r()), 1..6).prop_map(move |ws| CandidateConstraintSystem {
        rows: ws.iter().map(|(p, a, b)| WitnessRows { positivity: row(p), modes: vec![row(a), row(b)] }).collect(),
        lower: vec![-1.0; m],
        upper: vec![1.0; m],
        tau: 1e-3,
    })
}

/// Smallest requirement slack of `c`: positivity rows, and the best mode per witness.
fn required_slack(sys: &CandidateConstraintSystem, c: &[f64]) -> f64 {
    sys.rows
        .iter()
        .map(|w| w.positivity.slack(c).min(w.modes.iter().map(|r| r.slack(c)).fold(f64::NEG_INFINITY, f64::max)))
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn find_step_agrees_with_grid_oracle(sys in system(2)) {
        let k = 81;
        let mut best = f64::NEG_INFINITY;
        for i in 0..k {
            for j in 0..k {
                let c = [-1.0 + 2.0 * i as f64 / (k - 1) as f64, -1.0 + 2.0 * j as f64 / (k - 1) as f64];
                best = best.max(required_slack(&sys, &c));
            }
        }
        match find_candidate(&sys).unwrap() {
            FindResult::Candidate { c, .. } => {
                prop_assert!(c.iter().all(|v| v.abs() <= 1.0 + 1e-9));
                prop_assert!(required_slack(&sys, &c) >= sys.tau - 1e-9);
            }
            FindResult::Unsat => prop_assert!(best < sys.tau, "grid found slack {best}"),
            FindResult::Exhausted => prop_assert!(false, "budget exhausted on a tiny system"),
        }
    }

    #[test]
    fn wider_lifted_box_never_lowers_gamma(c in prop::collection::vec(-1.0..1.0f64, 3), widen in 0.05..0.5f64) {
        let model = catalog_entry(1).unwrap();
        let plant = model.plant.to_switched().unwrap();
        let cfg = SynthesisConfig::for_model(&model).unwrap();
        let rp = relaxation(&plant, &cfg).unwrap();
        let mut wide = rp.clone();
        for b in wide.lifted_box.bounds.iter_mut().skip(1) {
            let w = (b.hi - b.lo).max(1e-3) * widen;
            b.lo -= w;
            b.hi += w;
        }
        let narrow = check_candidate(&rp, &c, &cfg.tol).unwrap();
        let widened = check_candidate(&wide, &c, &cfg.tol).unwrap();
        for (a, b) in [(&narrow.positivity, &widened.positivity), (&narrow.decrease, &widened.decrease)] {
            if a.gamma.is_finite() {
                prop_assert!(b.gamma >= a.gamma - 1e-5, "gamma {} -> {}", a.gamma, b.gamma);
            }
        }
    }
}

fn synthesize_success(id: u32) -> (SwitchedPlant, Synthesis) {
    let model = catalog_entry(id).unwrap();
    let cfg = SynthesisConfig::for_model(&model).unwrap();
    match synthesize_model(&model, &cfg).unwrap() {
        SynthesisOutcome::Success(s) => (model.plant.to_switched().unwrap(), *s),
        SynthesisOutcome::Failure(f) => panic!("system {id}: {:?} {}", f.reason, f.message),
    }
}

#[test]
fn loop_makes_progress_and_never_repeats() {
    let model = catalog_entry(8).unwrap();
    let plant = model.plant.to_switched().unwrap();
    let cfg = SynthesisConfig::for_model(&model).unwrap();
    let rp = relaxation(&plant, &cfg).unwrap();
    let (_, s) = synthesize_success(8);
    assert!(s.history.len() > 1);
    for (i, a) in s.history.iter().enumerate() {
        for b in &s.history[i + 1..] {
            assert!(a.candidate.iter().zip(&b.candidate).any(|(x, y)| (x - y).abs() > 1e-12), "candidate repeated");
        }
    }
    for w in s.witnesses.witnesses() {
        validate_witness(&rp, &w.matrix()).unwrap();
    }
    // the counterexample to each rejected candidate rules that candidate out
    for rec in s.history.iter().filter(|r| r.violation.is_some()) {
        let rep = check_candidate(&rp, &rec.candidate, &cfg.tol).unwrap();
        let CheckOutcome::Counterexample { witness, violation, .. } = rep.outcome else {
            panic!("iteration {} no longer rejected", rec.iteration);
        };
        let rows = witness_rows(&rp, &witness);
        let excluded = match violation {
            Violation::Positivity => rows.positivity.slack(&rec.candidate) < cfg.tau,
            Violation::Decrease => rows.modes.iter().all(|r| r.slack(&rec.candidate) < cfg.tau),
        };
        assert!(excluded, "iteration {}", rec.iteration);
    }
}

#[test]
fn synthesis_is_deterministic() {
    for id in [3, 10] {
        let (_, a) = synthesize_success(id);
        let (_, b) = synthesize_success(id);
        assert_eq!(a.certificate.to_json(), b.certificate.to_json());
        assert_eq!(a.history.len(), b.history.len());
        assert_eq!(a.witnesses, b.witnesses);
    }
}

fn certificate(id: u32) -> (SwitchedPlant, ResolvedCertificate) {
    let (plant, s) = synthesize_success(id);
    let cert = s.certificate.resolve(&plant).unwrap();
    (plant, cert)
}

#[test]
fn healthy_traces_pass_the_audit() {
    for id in [1, 3] {
        let (plant, cert) = certificate(id);
        let law = SwitchingLaw::new(&plant, &cert);
        let step = default_step(cert.dwell_lb);
        let mut x0: Vec<f64> = plant.domain.upper.iter().map(|u| 0.3 * u).collect();
        while !cert.in_sublevel(&plant.domain, &x0) {
            x0.iter_mut().for_each(|v| *v *= 0.5);
        }
        let trace = simulate(&law, &x0, 20.0, step).unwrap();
        let radius = (plant.spec.kind == SpecKind::RS).then(|| plant.spec.excluded_radius());
        let audit = audit_trace(&trace, &cert, &plant.domain, radius);
        assert!(audit.passed, "system {id}: {audit:?}");
        if let (Some(gap), Some(d)) = (audit.min_switch_gap, cert.dwell_lb) {
            assert!(gap >= d - step);
        }
    }
}

#[test]
fn corrupted_switching_factor_is_flagged() {
    let (plant, cert) = certificate(6);
    let mut x0: Vec<f64> = plant.domain.upper.iter().map(|u| 0.7 * u).collect();
    while !cert.in_sublevel(&plant.domain, &x0) {
        x0.iter_mut().for_each(|v| *v *= 0.7);
    }
    let step = default_step(cert.dwell_lb);
    let run = |lambda: f64| {
        let law = SwitchingLaw::with_lambda(&plant, &cert, lambda);
        audit_trace(&simulate(&law, &x0, 2.0, step).unwrap(), &cert, &plant.domain, None)
    };
    assert!(run(cert.lambda).passed);
    // lambda < 1 leaves a mode only once V' exceeds -eps phi / lambda < -eps phi,
    // so freshly selected modes can be left at once: chattering
    let corrupted = run(0.5);
    assert!(!corrupted.passed);
    assert!(corrupted.dwell_violations > 0);
}
