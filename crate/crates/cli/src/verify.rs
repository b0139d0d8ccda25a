use std::path::PathBuf;

use clap::Args;
use clfsynth_core::cegis::{confirm_by_sampling, sublevel_threshold, ConfirmationReport, PointwiseConditions, DEFAULT_SAMPLES};
use clfsynth_core::Polynomial;
use serde::Serialize;

use crate::exit::{CliResult, VIOLATIONS};
use crate::source;
use crate::ModelSource;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Certificate JSON produced by `synth`.
    #[arg(long)]
    pub cert: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Serialize)]
struct VerifyReport {
    model: String,
    confirmation: ConfirmationReport,
    beta_lb: f64,
    beta_recomputed: Option<f64>,
    passed: bool,
}

pub fn run(args: &VerifyArgs) -> CliResult<u8> {
    let model = source::load(&args.source)?;
    let plant = model.switched()?;
    let (cert, resolved) = source::load_certificate(&args.cert, &model, &plant)?;
    let fields: Vec<&[Polynomial]> = plant.modes.iter().map(|m| m.field.as_slice()).collect();
    let cond = PointwiseConditions::new(&resolved.v, &resolved.alpha, fields, &resolved.decrease);
    let confirmation = confirm_by_sampling(&cond, &plant.domain, plant.spec.excluded_radius(), args.samples, args.seed);
    let beta = sublevel_threshold(&resolved.v, &plant.domain).ok();
    // the stored threshold must not exceed what an independent bound certifies
    let beta_ok = beta.is_some_and(|b| cert.beta_lb <= b * (1.0 + 1e-9) + 1e-12 && cert.beta_lb > 0.0);
    let report = VerifyReport {
        model: model.model.name.clone(),
        passed: confirmation.passed && beta_ok,
        confirmation,
        beta_lb: cert.beta_lb,
        beta_recomputed: beta,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(if report.passed { 0 } else { VIOLATIONS })
}
