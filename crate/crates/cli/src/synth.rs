use std::path::PathBuf;

use clap::Args;
use clfsynth_core::cegis::{synthesize_model, relaxation, FailureReason, SynthesisConfig, SynthesisOutcome};
use serde::Serialize;

use crate::dump;
use crate::exit::{CliResult, Failure};
use crate::source::{self, LoadedModel};
use crate::ModelSource;

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// `quad` or a comma list of monomials, e.g. `x^2,x*y,y^2`.
    #[arg(long)]
    pub template: Option<String>,
    /// Decrease rate: one value for all modes or one per mode.
    #[arg(long)]
    pub eps: Option<String>,
    /// Switching-law factor (> 1).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Half-width of the coefficient box.
    #[arg(long)]
    pub c0: Option<f64>,
    /// CEGIS iteration cap (default from the model)
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Seed of the confirmation sampler.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Confirmation sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Certificate output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write basis, lifted box and constraint matrices as JSON.
    #[arg(long)]
    pub dump_relaxation: Option<PathBuf>,
    /// Write the two check programs for the final candidate in SDPA format
    /// (`<path>.positivity.dat-s`, `<path>.decrease.dat-s`).
    #[arg(long)]
    pub dump_sdp: Option<PathBuf>,
}

pub fn configure(model: &LoadedModel, args: &SynthArgs) -> CliResult<SynthesisConfig> {
    let mut cfg = SynthesisConfig::for_model(&model.model).map_err(|e| Failure::data(e.to_string()))?;
    let modes = cfg.eps.len();
    if let Some(t) = &args.template {
        if let Some(ms) = source::parse_template(t, model.model.plant.variables())? {
            cfg.template = ms;
        } else {
            cfg.template = clfsynth_core::relax::quadratic_template(model.model.plant.variables().len());
        }
    }
    if let Some(e) = &args.eps {
        cfg.eps = source::parse_list(e, modes, "eps")?;
    }
    if let Some(l) = args.lambda {
        cfg.lambda = l;
    }
    if let Some(c) = args.c0 {
        cfg.c0 = c;
    }
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }
    if let Some(s) = args.samples {
        cfg.confirm_samples = s;
    }
    cfg.seed = args.seed;
    Ok(cfg)
}

#[derive(Serialize)]
struct FailureReport<'a> {
    model: &'a str,
    reason: FailureReason,
    message: &'a str,
    iterations: usize,
    witnesses: usize,
    last_candidate: Option<&'a [f64]>,
}

pub fn run(args: &SynthArgs) -> CliResult<u8> {
    let model = source::load(&args.source)?;
    let cfg = configure(&model, args)?;
    let plant = model.switched()?;
    if let Some(path) = &args.dump_relaxation {
        let rp = relaxation(&plant, &cfg).map_err(|e| Failure::usage(e.to_string()))?;
        source::write(path, &dump::relaxation_json(&rp, &plant.variables))?;
    }
    let outcome = synthesize_model(&model.model, &cfg).map_err(|e| Failure::usage(e.to_string()))?;
    let last = match &outcome {
        SynthesisOutcome::Success(s) => Some(s.certificate.c.clone()),
        SynthesisOutcome::Failure(f) => f.last_candidate.clone().or_else(|| f.history.last().map(|h| h.candidate.clone())),
    };
    if let Some(prefix) = &args.dump_sdp {
        match &last {
            Some(c) => {
                let rp = relaxation(&plant, &cfg).map_err(|e| Failure::usage(e.to_string()))?;
                for (suffix, text) in dump::check_programs_sdpa(&rp, c).map_err(|e| Failure::data(e.to_string()))? {
                    let mut p = prefix.clone().into_os_string();
                    p.push(suffix);
                    source::write(&PathBuf::from(p), &text)?;
                }
            }
            None => log::warn!("no candidate was produced, nothing to dump"),
        }
    }
    match outcome {
        SynthesisOutcome::Success(s) => {
            let mut cert = s.certificate;
            cert.model_hash = Some(model.hash.clone());
            let json = cert.to_json();
            match &args.out {
                Some(path) => source::write(path, &(json + "\n"))?,
                None => println!("{json}"),
            }
            eprintln!(
                "{}: certificate found after {} iterations ({} witnesses), beta_lb {:.6e}, dwell_lb {}",
                model.model.name,
                cert.iterations,
                cert.witness_count,
                cert.beta_lb,
                cert.dwell_lb.map_or("none".to_string(), |d| format!("{d:.6e}"))
            );
            Ok(0)
        }
        SynthesisOutcome::Failure(f) => {
            let report = FailureReport {
                model: &model.model.name,
                reason: f.reason,
                message: &f.message,
                iterations: f.iterations,
                witnesses: f.witnesses.len(),
                last_candidate: last.as_deref(),
            };
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            eprintln!("{}: synthesis failed ({:?}): {}", model.model.name, f.reason, f.message);
            Ok(f.reason.exit_code() as u8)
        }
    }
}
