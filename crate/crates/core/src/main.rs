use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use bayes_defense::analysis::{
    benign_verdict, check_passively_bluffing, check_submartingale, check_transition_gap, limit_verdict, settle_index,
    PropertyVerdict, SubmartingaleMode, DEFAULT_CONFIRMATION_WINDOW, EXACT_TOL,
};
use bayes_defense::cli_io::{
    load_config, read_trace_csv, read_trace_json, save_config, write_json, write_trace_csv, write_trace_json,
    RunManifest,
};
use bayes_defense::engine::{monte_carlo, TraceRecord};
use bayes_defense::model::{MdpModel, SenderType};
use bayes_defense::presets;
use bayes_defense::reproduce::{reproduce, standard_verdicts};

#[derive(Parser)]
#[command(name = "bayes-defense", version, about = "Bayesian defense against deceptive attackers on finite MDPs")]
struct Cli {
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of runs.
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate episodes from a configuration file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a property on a recorded trace.
    Check {
        #[arg(long, value_enum)]
        property: Property,
        /// Trace file, `.csv` or `.json`.
        #[arg(long)]
        trace: PathBuf,
        /// Model of a CSV trace (ignored for JSON traces).
        #[arg(long, default_value = "g1_known_vuln")]
        preset: String,
        #[arg(long, default_value_t = DEFAULT_CONFIRMATION_WINDOW)]
        window: usize,
    },
    /// Regenerate a figure's trace and verdicts with its pinned seed.
    Reproduce {
        #[arg(long, value_parser = ["fig7", "fig8", "fig9"])]
        figure: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Property {
    Submartingale,
    Benign,
    Bluffing,
    Gap,
    Limit,
}

type Failure = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Simulate { ref config, ref out } => simulate(&cli, config, out),
        Cmd::Check { property, ref trace, ref preset, window } => check(property, trace, preset, window),
        Cmd::Reproduce { ref figure, ref out } => reproduce_figure(figure, out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn print_verdict(prefix: &str, v: &PropertyVerdict) {
    let status = if v.holds { "holds" } else { "VIOLATED" };
    let note = v.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default();
    println!("{prefix}{:<22} {status:<9} margin {:+.3e}{note}", v.property, v.worst_margin);
}

fn simulate(cli: &Cli, config_path: &Path, out: &Path) -> Result<bool, Failure> {
    let mut config = load_config(config_path)?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(runs) = cli.runs {
        config.runs = runs;
    }
    let started = Instant::now();
    let result = monte_carlo(&config)?;
    let mut outputs = vec![out.join("config.json")];
    save_config(&config, &outputs[0])?;
    let mut all_hold = true;
    let mut verdicts = Vec::new();
    for trace in &result.traces {
        let csv = out.join(format!("trace_{:04}.csv", trace.run_index));
        let json = out.join(format!("trace_{:04}.json", trace.run_index));
        write_trace_csv(trace, &csv)?;
        write_trace_json(trace, &json)?;
        outputs.extend([csv, json]);
        let vs = standard_verdicts(trace, DEFAULT_CONFIRMATION_WINDOW.min(config.steps))?;
        for v in &vs {
            print_verdict(&format!("run {:>4}  ", trace.run_index), v);
        }
        all_hold &= vs.iter().all(|v| v.holds);
        verdicts.push(vs);
    }
    for (name, value) in [
        ("summary.json", serde_json::to_value(&result.summary)?),
        ("verdicts.json", serde_json::to_value(&verdicts)?),
    ] {
        let path = out.join(name);
        write_json(&value, &path)?;
        outputs.push(path);
    }
    let names = outputs.iter().map(|p| p.display().to_string()).collect();
    let manifest = RunManifest::new(&config, names, started.elapsed().as_secs_f64())?;
    write_json(&manifest, &out.join("manifest.json"))?;
    println!("wrote {} runs to {}", result.traces.len(), out.display());
    Ok(all_hold)
}

fn load_records(trace: &Path, preset: &str) -> Result<(MdpModel, Vec<TraceRecord>, Option<SenderType>), Failure> {
    if trace.extension().is_some_and(|e| e == "json") {
        let t = read_trace_json(trace)?;
        return Ok((t.config.model, t.records, Some(t.config.true_sender)));
    }
    let model = presets::by_name(preset)
        .ok_or_else(|| format!("unknown preset `{preset}`; known: {:?}", presets::PRESET_NAMES))?;
    let records = read_trace_csv(trace, &model)?;
    Ok((model, records, None))
}

fn check(property: Property, trace: &Path, preset: &str, window: usize) -> Result<bool, Failure> {
    let (model, records, truth) = load_records(trace, preset)?;
    let truth = truth.unwrap_or(SenderType::Malicious);
    let verdicts = match property {
        Property::Submartingale => {
            let mut v = vec![check_submartingale(&model, &records, truth, SubmartingaleMode::Plain, EXACT_TOL)?];
            if records.first().is_some_and(|r| r.belief_aware > 0.0 && r.belief_aware < 1.0) {
                v.push(check_submartingale(&model, &records, truth, SubmartingaleMode::Log, EXACT_TOL)?);
                v.push(check_submartingale(&model, &records, truth, SubmartingaleMode::Jensen, EXACT_TOL)?);
            }
            v
        }
        Property::Benign => vec![benign_verdict(&records, window)?],
        Property::Bluffing => vec![check_passively_bluffing(&model, &records)?],
        Property::Gap => vec![check_transition_gap(&model, &records, settle_index(&records))?],
        Property::Limit => {
            let beliefs: Vec<f64> = records.iter().map(|r| r.belief_aware).collect();
            vec![limit_verdict(&beliefs, window)?]
        }
    };
    for v in &verdicts {
        print_verdict("", v);
    }
    println!("{}", serde_json::to_string(&verdicts)?);
    Ok(verdicts.iter().all(|v| v.holds))
}

fn reproduce_figure(figure: &str, out: &Path) -> Result<bool, Failure> {
    let outcome = reproduce(figure, out)?;
    for c in &outcome.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("{status} {figure} {} (expected holds={})", c.verdict.property, c.expected);
    }
    if let Some(note) = &outcome.plot_note {
        println!("{note}");
    }
    println!("artifacts in {}", out.join(figure).display());
    Ok(outcome.passed())
}
