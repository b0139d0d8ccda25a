//! Debug dumps of the relaxation and of the check programs.

use clfsynth_core::relax::RelaxedProblem;
use clfsynth_core::sdp::{check_program, to_sdpa, Violation};
use clfsynth_core::{DMatrix, Result};
use serde_json::{json, Value};

fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| json!((0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>())).collect())
}

fn unit(k: usize, m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m];
    c[k] = 1.0;
    c
}

/// Basis, lifted box and the matrices `G`, `G_q`, `F_j`, `F_q,j`.
pub fn relaxation_json(rp: &RelaxedProblem, names: &[String]) -> String {
    let m = rp.template.len();
    let basis: Vec<String> = rp.basis.monomials().iter().map(|b| b.display_with(names)).collect();
    let lifted: Vec<Value> = rp
        .basis
        .moments()
        .iter()
        .zip(&rp.lifted_box.bounds)
        .map(|(mo, b)| json!({ "moment": mo.display_with(names), "lo": b.lo, "hi": b.hi }))
        .collect();
    // gram() only fails for monomials outside the basis, which assemble() rules out
    let gram = |r: Result<DMatrix<f64>>| matrix(&r.expect("relaxation polynomials fit the basis"));
    let f: Vec<Value> = (0..m).map(|k| gram(rp.f_matrix(&unit(k, m)))).collect();
    let modes: Vec<Value> = (0..rp.modes())
        .map(|q| {
            json!({
                "G_q": gram(rp.gq_matrix(q)),
                "F_q": (0..m).map(|k| gram(rp.fq_matrix(q, &unit(k, m)))).collect::<Vec<_>>(),
            })
        })
        .collect();
    let doc = json!({
        "variables": names,
        "template": rp.template.iter().map(|t| t.display_with(names)).collect::<Vec<_>>(),
        "basis": basis,
        "lifted_box": lifted,
        "exclusion": rp.exclusion,
        "G": gram(rp.g_matrix()),
        "F": f,
        "modes": modes,
    });
    serde_json::to_string_pretty(&doc).expect("dump serializes") + "\n"
}

/// File suffix and SDPA text of both check programs at candidate `c`.
pub fn check_programs_sdpa(rp: &RelaxedProblem, c: &[f64]) -> Result<Vec<(&'static str, String)>> {
    Ok(vec![
        (".positivity.dat-s", to_sdpa(&check_program(rp, c, Violation::Positivity)?)),
        (".decrease.dat-s", to_sdpa(&check_program(rp, c, Violation::Decrease)?)),
    ])
}
