use std::path::PathBuf;

use clap::Args;
use clfsynth_core::plant::SpecKind;
use clfsynth_core::sim::{audit_trace, default_step, simulate, AuditReport, SimError, SwitchEvent, SwitchingLaw, Termination};
use serde::Serialize;

use crate::exit::{CliResult, Failure, OUTSIDE, VIOLATIONS};
use crate::source;
use crate::ModelSource;

#[derive(Args, Debug)]
pub struct SimArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Certificate JSON produced by `synth`.
    #[arg(long)]
    pub cert: PathBuf,
    /// Initial state, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long, default_value_t = 50.0)]
    pub horizon: f64,
    /// Integration step (default: dwell bound / 20, clamped).
    #[arg(long)]
    pub step: Option<f64>,
    /// Override the certificate's switching factor.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Directory for trace.csv, trace.json and audit.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Sidecar of the CSV trace: switch events and run metadata.
#[derive(Serialize)]
struct TraceMeta<'a> {
    model: &'a str,
    variables: &'a [String],
    modes: Vec<String>,
    x0: &'a [f64],
    step: f64,
    horizon: f64,
    lambda: f64,
    termination: Option<Termination>,
    switches: Vec<NamedSwitch<'a>>,
}

#[derive(Serialize)]
struct NamedSwitch<'a> {
    t: f64,
    from: &'a str,
    to: &'a str,
}

pub fn run(args: &SimArgs) -> CliResult<u8> {
    let model = source::load(&args.source)?;
    let plant = model.switched()?;
    let (_, resolved) = source::load_certificate(&args.cert, &model, &plant)?;
    let x0 = args
        .x0
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::usage(format!("bad x0 component `{s}`"))))
        .collect::<CliResult<Vec<_>>>()?;
    if x0.len() != plant.n() {
        return Err(Failure::usage(format!("x0 needs {} components, got {}", plant.n(), x0.len())));
    }
    if !(args.horizon > 0.0 && args.horizon.is_finite()) {
        return Err(Failure::usage("horizon must be positive"));
    }
    let step = args.step.unwrap_or_else(|| default_step(resolved.dwell_lb));
    let lambda = args.lambda.unwrap_or(resolved.lambda);
    let law = SwitchingLaw::with_lambda(&plant, &resolved, lambda);
    let trace = match simulate(&law, &x0, args.horizon, step) {
        Ok(t) => t,
        Err(e @ (SimError::OutsideSublevel | SimError::OutsideDomain(_))) => {
            return Err(Failure { code: OUTSIDE, message: format!("refusing to simulate: {e}") });
        }
        Err(SimError::Invalid(m)) => return Err(Failure::usage(m)),
        Err(e @ SimError::NoEligibleMode { .. }) => {
            return Err(Failure { code: VIOLATIONS, message: format!("certificate violation: {e}") });
        }
    };
    let radius = (plant.spec.kind == SpecKind::RS).then(|| plant.spec.excluded_radius());
    let audit: AuditReport = audit_trace(&trace, &resolved, &plant.domain, radius);
    let ids: Vec<String> = plant.modes.iter().map(|m| m.id.clone()).collect();
    let named = |s: &SwitchEvent| NamedSwitch { t: s.t, from: &plant.modes[s.from].id, to: &plant.modes[s.to].id };
    let meta = TraceMeta {
        model: &model.model.name,
        variables: &plant.variables,
        modes: ids.clone(),
        x0: &x0,
        step,
        horizon: args.horizon,
        lambda,
        termination: trace.termination,
        switches: trace.switches.iter().map(named).collect(),
    };
    source::write(&args.out_dir.join("trace.csv"), &trace.to_csv(&plant.variables, &ids))?;
    source::write(&args.out_dir.join("trace.json"), &(serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n"))?;
    source::write(&args.out_dir.join("audit.json"), &(serde_json::to_string_pretty(&audit).expect("audit serializes") + "\n"))?;
    eprintln!(
        "{} samples, {} switches, min gap {}, dwell bound {}, audit {}",
        audit.samples,
        audit.switches,
        audit.min_switch_gap.map_or("-".into(), |g| format!("{g:.3e}")),
        audit.dwell_lb.map_or("-".into(), |d| format!("{d:.3e}")),
        if audit.passed { "passed" } else { "FAILED" }
    );
    Ok(if audit.passed { 0 } else { VIOLATIONS })
}
