use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, ValueEnum};
use clfsynth_core::cegis::{synthesize_model, SynthesisConfig, SynthesisOutcome};
use clfsynth_core::plant::{catalog_entry, suite_ids, CATALOG_SIZE};
use serde::{Deserialize, Serialize};

use crate::exit::{CliResult, Failure, VIOLATIONS};
use crate::source;

const DEFAULT_PATTERN: &str = include_str!("../expected/pattern.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Switched,
    Affine,
    All,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Comma separated catalog ids; overrides --suite.
    #[arg(long)]
    pub only: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Benchmarks run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "bench-out")]
    pub out_dir: PathBuf,
    /// Expected-pattern file (defaults to the shipped one).
    #[arg(long)]
    pub expected: Option<PathBuf>,
    /// Confirmation sample count per benchmark.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct PatternFile {
    pub rows: Vec<PatternRow>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct PatternRow {
    pub id: u32,
    pub expect: Expect,
    #[serde(default)]
    pub min_iterations: Option<usize>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    Success,
    AllowedFail,
    Unlisted,
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub id: u32,
    pub name: String,
    pub status: String,
    pub reason: Option<String>,
    pub exit_code: i32,
    pub iterations: usize,
    pub witnesses: usize,
    pub reference_iterations: Option<u32>,
    pub expect: Expect,
    pub band: Option<(usize, usize)>,
    pub matches: bool,
    pub beta_lb: Option<f64>,
    pub dwell_lb: Option<f64>,
    pub certificate: Option<String>,
}

#[derive(Serialize)]
pub struct RunReport {
    pub suite: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub pattern_matched: bool,
}

#[derive(Serialize)]
struct TimingRow {
    id: u32,
    find_s: f64,
    check_s: f64,
    total_s: f64,
}

struct Outcome {
    row: Row,
    timing: TimingRow,
    certificate: Option<String>,
}

fn selected_ids(args: &BenchArgs) -> CliResult<Vec<u32>> {
    if let Some(list) = &args.only {
        let ids = list
            .split(',')
            .map(|s| s.trim().parse::<u32>().map_err(|_| Failure::usage(format!("bad id `{s}`"))))
            .collect::<CliResult<Vec<_>>>()?;
        if let Some(bad) = ids.iter().find(|&&i| i == 0 || i as usize > CATALOG_SIZE) {
            return Err(Failure::usage(format!("no catalog entry {bad}")));
        }
        return Ok(ids);
    }
    Ok(match args.suite {
        Suite::Switched => suite_ids(false),
        Suite::Affine => suite_ids(true),
        Suite::All => (1..=CATALOG_SIZE as u32).collect(),
    })
}

fn run_one(id: u32, pattern: &PatternFile, args: &BenchArgs) -> Outcome {
    let expected = pattern.rows.iter().find(|r| r.id == id);
    let expect = expected.map_or(Expect::Unlisted, |r| r.expect);
    let band = expected.and_then(|r| r.max_iterations.map(|hi| (r.min_iterations.unwrap_or(1), hi)));
    let model = catalog_entry(id).expect("selected ids are in the catalog");
    let reference_iterations = model.reference.as_ref().and_then(|p| p.iterations);
    let mut row = Row {
        id,
        name: model.name.clone(),
        status: "error".into(),
        reason: None,
        exit_code: 0,
        iterations: 0,
        witnesses: 0,
        reference_iterations,
        expect,
        band,
        matches: false,
        beta_lb: None,
        dwell_lb: None,
        certificate: None,
    };
    let mut timing = TimingRow { id, find_s: 0.0, check_s: 0.0, total_s: 0.0 };
    let mut certificate = None;
    let result = SynthesisConfig::for_model(&model).and_then(|mut cfg| {
        cfg.seed = args.seed;
        if let Some(s) = args.samples {
            cfg.confirm_samples = s;
        }
        synthesize_model(&model, &cfg)
    });
    match result {
        Err(e) => {
            row.reason = Some(e.to_string());
            row.exit_code = crate::exit::DATA as i32;
        }
        Ok(out) => {
            let t = out.timings();
            timing = TimingRow { id, find_s: t.find.as_secs_f64(), check_s: t.check.as_secs_f64(), total_s: t.total.as_secs_f64() };
            row.iterations = out.iterations();
            row.witnesses = out.witness_count();
            row.exit_code = out.exit_code();
            match out {
                SynthesisOutcome::Success(s) => {
                    let mut cert = s.certificate;
                    cert.model_hash = Some(source::model_hash(&model));
                    row.status = "ok".into();
                    row.beta_lb = Some(cert.beta_lb);
                    row.dwell_lb = cert.dwell_lb;
                    row.certificate = Some(format!("certificates/system{id:02}.json"));
                    certificate = Some(cert.to_json() + "\n");
                }
                SynthesisOutcome::Failure(f) => {
                    row.status = "fail".into();
                    row.reason = Some(serde_json::to_value(f.reason).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
                }
            }
        }
    }
    row.matches = match expect {
        Expect::AllowedFail | Expect::Unlisted if row.status != "ok" => expect == Expect::AllowedFail,
        _ if row.status != "ok" => false,
        _ => band.is_none_or(|(lo, hi)| (lo..=hi).contains(&row.iterations)),
    };
    log::info!("system {id}: {} after {} iterations", row.status, row.iterations);
    Outcome { row, timing, certificate }
}

fn table(report: &RunReport) -> String {
    let header = ["id", "name", "status", "reason", "itr", "ref", "band", "witn", "beta_lb", "dwell_lb", "match"];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in &report.rows {
        cells.push(vec![
            r.id.to_string(),
            r.name.clone(),
            r.status.clone(),
            r.reason.clone().unwrap_or_else(|| "-".into()),
            r.iterations.to_string(),
            r.reference_iterations.map_or("-".into(), |p| p.to_string()),
            match (r.expect, r.band) {
                (Expect::AllowedFail, _) => "may fail".into(),
                (_, Some((lo, hi))) => format!("{lo}..{hi}"),
                _ => "-".into(),
            },
            r.witnesses.to_string(),
            r.beta_lb.map_or("-".into(), |b| format!("{b:.4e}")),
            r.dwell_lb.map_or("-".into(), |d| format!("{d:.4e}")),
            if r.matches { "yes" } else { "NO" }.into(),
        ]);
    }
    let widths: Vec<usize> = (0..header.len()).map(|j| cells.iter().map(|row| row[j].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    let _ = writeln!(out, "pattern {}", if report.pattern_matched { "matched" } else { "NOT matched" });
    out
}

pub fn run(args: &BenchArgs) -> CliResult<u8> {
    let pattern_text = match &args.expected {
        Some(p) => source::read(p)?,
        None => DEFAULT_PATTERN.to_string(),
    };
    let pattern: PatternFile = serde_json::from_str(&pattern_text).map_err(|e| Failure::data(format!("pattern file: {e}")))?;
    let ids = selected_ids(args)?;
    let jobs = args.jobs.max(1).min(ids.len().max(1));
    let slots: Vec<Mutex<Option<Outcome>>> = ids.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= ids.len() {
                    break;
                }
                let out = run_one(ids[k], &pattern, args);
                *slots[k].lock().expect("slot lock") = Some(out);
            });
        }
    });
    let outcomes: Vec<Outcome> = slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect();
    let suite = match (&args.only, args.suite) {
        (Some(list), _) => format!("only {list}"),
        (None, s) => format!("{s:?}").to_lowercase(),
    };
    for o in &outcomes {
        if let (Some(rel), Some(text)) = (&o.row.certificate, &o.certificate) {
            source::write(&args.out_dir.join(rel), text)?;
        }
    }
    let timings: Vec<&TimingRow> = outcomes.iter().map(|o| &o.timing).collect();
    let rows: Vec<Row> = outcomes.iter().map(|o| o.row.clone()).collect();
    let pattern_matched = rows.iter().all(|r| r.matches);
    let report = RunReport { suite, seed: args.seed, rows, pattern_matched };
    let text = table(&report);
    source::write(&args.out_dir.join("report.json"), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    source::write(&args.out_dir.join("report.txt"), &text)?;
    source::write(&args.out_dir.join("timings.json"), &(serde_json::to_string_pretty(&timings).expect("timings serialize") + "\n"))?;
    print!("{text}");
    Ok(if pattern_matched { 0 } else { VIOLATIONS })
}
