//! Standard verdict suites and the pinned figure bundles.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    benign_verdict, check_passively_bluffing, check_submartingale, check_transition_gap, limit_verdict, settle_index,
    AnalysisError, PropertyVerdict, SubmartingaleMode, DEFAULT_CONFIRMATION_WINDOW, EXACT_TOL,
};
use crate::cli_io::{save_config, write_json, write_trace_csv, write_trace_json, IoError, RunManifest};
use crate::engine::{run_episode, EngineError, SimulationConfig, Trace};
use crate::equilibrium::GameKind;
use crate::model::ReceiverType;
use crate::presets;

pub const FIG7_SEED: u64 = 1;
pub const FIG8_SEED: u64 = 8;
pub const FIG9_SEED: u64 = 9;
pub const FIG7_STEPS: usize = 300;
pub const FIG89_STEPS: usize = 500;

#[derive(Debug, Error)]
pub enum ReproduceError {
    #[error("unknown figure `{0}` (expected fig7, fig8 or fig9)")]
    UnknownFigure(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Verdicts that apply to a single trace of `trace.config.game`.
pub fn standard_verdicts(trace: &Trace, window: usize) -> Result<Vec<PropertyVerdict>, AnalysisError> {
    let c = &trace.config;
    let m = &c.model;
    let truth = c.true_sender;
    let mut out = vec![check_submartingale(m, &trace.records, truth, SubmartingaleMode::Plain, EXACT_TOL)?];
    if trace.records.first().is_some_and(|r| r.belief_aware > 0.0 && r.belief_aware < 1.0) {
        out.push(check_submartingale(m, &trace.records, truth, SubmartingaleMode::Log, EXACT_TOL)?);
    }
    out.push(benign_verdict(&trace.records, window)?);
    out.push(check_transition_gap(m, &trace.records, settle_index(&trace.records))?);
    match c.game {
        GameKind::G1 => out.push(limit_verdict(&trace.beliefs(), window.min(trace.records.len()))?),
        GameKind::G2 => out.push(check_passively_bluffing(m, &trace.records)?),
    }
    Ok(out)
}

/// A verdict together with the outcome the figure is meant to show.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureCheck {
    pub verdict: PropertyVerdict,
    pub expected: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureOutcome {
    pub figure: String,
    pub checks: Vec<FigureCheck>,
    pub manifest: RunManifest,
    /// Set when the plot step was skipped or failed.
    pub plot_note: Option<String>,
}

impl FigureOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// A figure's configuration and the verdicts it is expected to show.
pub type FigureSpec = (SimulationConfig, Vec<(&'static str, bool)>);

pub fn figure_config(figure: &str) -> Result<FigureSpec, ReproduceError> {
    let (config, expected) = match figure {
        "fig7" => {
            let m = presets::g1_known_vuln();
            let u = presets::utilities(&m);
            let c = SimulationConfig::g1(m, u, presets::G1_PRIOR, FIG7_STEPS)?.with_seed(FIG7_SEED);
            let e = vec![
                ("submartingale", true),
                ("log-submartingale", true),
                ("asymptotically-benign", true),
                ("transition-gap", true),
                ("limit-belief", true),
            ];
            (c, e)
        }
        "fig8" | "fig9" => {
            let bluffing = figure == "fig9";
            let m = if bluffing { presets::g2_bluffing() } else { presets::g2_nonbluffing() };
            let u = presets::utilities(&m);
            let seed = if bluffing { FIG9_SEED } else { FIG8_SEED };
            let c = SimulationConfig::g2(m, u, presets::G2_ALPHA, presets::G2_BETA, ReceiverType::Unaware, FIG89_STEPS)?
                .with_seed(seed);
            let e = vec![
                ("submartingale", true),
                ("asymptotically-benign", bluffing),
                ("passively-bluffing", bluffing),
            ];
            (c, e)
        }
        other => return Err(ReproduceError::UnknownFigure(other.to_string())),
    };
    Ok((config, expected))
}

/// Runs a figure's pinned episode, writes its artifacts under `out` and
/// checks the verdicts against the intended regime. A `plot` executable on
/// the `PATH` is invoked on the CSV trace when available.
pub fn reproduce(figure: &str, out: &Path) -> Result<FigureOutcome, ReproduceError> {
    let (config, expected) = figure_config(figure)?;
    let started = Instant::now();
    let trace = run_episode(&config, 0)?;
    let verdicts = standard_verdicts(&trace, DEFAULT_CONFIRMATION_WINDOW)?;
    let checks: Vec<FigureCheck> = expected
        .iter()
        .filter_map(|(name, want)| {
            verdicts.iter().find(|v| v.property == *name).map(|v| FigureCheck {
                verdict: v.clone(),
                expected: *want,
                pass: v.holds == *want,
            })
        })
        .collect();

    let dir = out.join(figure);
    let csv = dir.join("trace.csv");
    let mut outputs: Vec<PathBuf> = vec![dir.join("config.json"), csv.clone(), dir.join("trace.json"), dir.join("verdicts.json")];
    save_config(&config, &outputs[0])?;
    write_trace_csv(&trace, &csv)?;
    write_trace_json(&trace, &outputs[2])?;
    write_json(&checks, &outputs[3])?;

    let image = dir.join(format!("{figure}.png"));
    let plot_note = match Command::new("plot").arg("--trace").arg(&csv).arg("--out").arg(&image).status() {
        Ok(s) if s.success() => {
            outputs.push(image);
            None
        }
        Ok(s) => Some(format!("plot exited with {s}")),
        Err(e) => Some(format!("plot skipped: {e}")),
    };

    let names = outputs.iter().map(|p| p.display().to_string()).collect();
    let manifest = RunManifest::new(&config, names, started.elapsed().as_secs_f64())?;
    write_json(&manifest, &dir.join("manifest.json"))?;
    Ok(FigureOutcome {
        figure: figure.to_string(),
        checks,
        manifest,
        plot_note,
    })
}
