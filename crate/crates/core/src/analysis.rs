//! Executable verdicts for the convergence, asymptotic-security and bluffing
//! properties, evaluated on simulated traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{
    bayes_step, expected_belief_on_truth, expected_next_log_belief, jensen_witness, log_belief, BeliefError,
    LikelihoodProfile,
};
use crate::engine::{run_episode_with, EngineError, SimulationConfig, Trace, TraceRecord};
use crate::equilibrium::GameKind;
use crate::model::{reaction_invariant_set, MdpModel, ReceiverType, SenderType, TypeStructure};

/// Tolerance of the exact submartingale checks.
pub const EXACT_TOL: f64 = 1e-12;
/// Suffix length that confirms an asymptotically benign trace.
pub const DEFAULT_CONFIRMATION_WINDOW: usize = 50;
/// Range below which a belief window counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("trace lacks the `{0}` column")]
    MissingColumn(&'static str),
    #[error("window {window} exceeds trace length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("window must be positive")]
    EmptyWindow,
    #[error("log check needs a positive belief on the true type, got {0}")]
    NonPositivePrior(f64),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactEnumeration,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyVerdict {
    pub property: String,
    pub holds: bool,
    /// Smallest slack observed; negative beyond the tolerance means violation.
    pub worst_margin: f64,
    /// Step indices (or run indices) where the property fails.
    pub violations: Vec<usize>,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl PropertyVerdict {
    pub fn new(property: &str, method: Method, worst_margin: f64, violations: Vec<usize>) -> Self {
        PropertyVerdict {
            property: property.to_string(),
            holds: violations.is_empty(),
            worst_margin,
            violations,
            method,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubmartingaleMode {
    /// The belief on the true type itself.
    Plain,
    /// Its natural logarithm.
    Log,
    /// The Jensen quantity `G >= 1` behind the plain inequality.
    Jensen,
}

/// Reaction seen by the aware (or only) receiver hypothesis.
fn aware_reaction(record: &TraceRecord) -> Option<usize> {
    record.reaction_aware.or(record.reaction)
}

/// The two type-conditional rows `(benign, malicious)` that drive the aware
/// receiver's update at `record`.
fn sender_rows<'m>(model: &'m MdpModel, record: &TraceRecord) -> Result<(&'m [f64], &'m [f64]), AnalysisError> {
    let r = aware_reaction(record).ok_or(AnalysisError::MissingColumn("r"))?;
    let benign = record.benign_action.ok_or(AnalysisError::MissingColumn("a_benign"))?;
    let malicious = record
        .malicious_action
        .or(record.action)
        .ok_or(AnalysisError::MissingColumn("a"))?;
    Ok((
        model.checked_row(record.state, benign, r).map_err(BeliefError::from)?,
        model.checked_row(record.state, malicious, r).map_err(BeliefError::from)?,
    ))
}

/// Exact one-step check that the aware receiver's belief on the true sender
/// type is a (log-)submartingale along `records`, plus a Bayes-consistency
/// pass: every recorded belief must follow from its predecessor.
pub fn check_submartingale(
    model: &MdpModel,
    records: &[TraceRecord],
    truth: SenderType,
    mode: SubmartingaleMode,
    tol: f64,
) -> Result<PropertyVerdict, AnalysisError> {
    let name = match mode {
        SubmartingaleMode::Plain => "submartingale",
        SubmartingaleMode::Log => "log-submartingale",
        SubmartingaleMode::Jensen => "jensen-witness",
    };
    let on_truth = |b: f64| if truth == SenderType::Malicious { b } else { 1.0 - b };
    let mut worst = f64::INFINITY;
    let mut violations = Vec::new();
    for (i, record) in records.iter().enumerate() {
        if !record.has_decisions() {
            continue;
        }
        let (benign, malicious) = sender_rows(model, record)?;
        let (truth_row, other_row) = match truth {
            SenderType::Malicious => (malicious, benign),
            SenderType::Benign => (benign, malicious),
        };
        let current = on_truth(record.belief_aware);
        let margin = match mode {
            SubmartingaleMode::Plain => expected_belief_on_truth(current, truth_row, other_row) - current,
            SubmartingaleMode::Log => {
                if current <= 0.0 {
                    return Err(AnalysisError::NonPositivePrior(current));
                }
                expected_next_log_belief(current, truth_row, other_row)? - log_belief(current)?
            }
            SubmartingaleMode::Jensen => jensen_witness(current, truth_row, other_row) - 1.0,
        };
        worst = worst.min(margin);
        if margin < -tol {
            violations.push(record.k);
        }

        if let Some(next) = records.get(i + 1) {
            let step = bayes_step(
                record.belief_aware,
                &LikelihoodProfile::from_sender_rows(benign, malicious)?,
                next.state,
            )?;
            let drift = (step.posterior - next.belief_aware).abs();
            if drift > tol {
                worst = worst.min(-drift);
                violations.push(next.k);
            }
        }
    }
    violations.sort_unstable();
    violations.dedup();
    if worst == f64::INFINITY {
        worst = 0.0;
    }
    Ok(PropertyVerdict::new(name, Method::ExactEnumeration, worst, violations))
}

/// Monte Carlo check that the cross-run mean belief on the malicious sender
/// does not decrease by more than three standard errors between steps.
pub fn check_submartingale_monte_carlo(traces: &[Trace]) -> PropertyVerdict {
    let len = traces.iter().map(|t| t.records.len()).min().unwrap_or(0);
    let n = traces.len() as f64;
    let mut worst = f64::INFINITY;
    let mut violations = Vec::new();
    for k in 0..len.saturating_sub(1) {
        let diffs: Vec<f64> = traces
            .iter()
            .map(|t| t.records[k + 1].belief_aware - t.records[k].belief_aware)
            .collect();
        let mean = diffs.iter().sum::<f64>() / n;
        let var = if traces.len() > 1 {
            diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let slack = mean + 3.0 * (var / n).sqrt();
        worst = worst.min(slack);
        if slack < -EXACT_TOL {
            violations.push(k + 1);
        }
    }
    if worst == f64::INFINITY {
        worst = 0.0;
    }
    PropertyVerdict::new("submartingale-mean", Method::MonteCarlo, worst, violations)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub limit: f64,
    pub converged: bool,
    pub positive: bool,
    pub range: f64,
}

/// Estimates the limit belief from the final `window` values.
pub fn estimate_limit_belief(beliefs: &[f64], window: usize) -> Result<LimitEstimate, AnalysisError> {
    if window == 0 {
        return Err(AnalysisError::EmptyWindow);
    }
    if window > beliefs.len() {
        return Err(AnalysisError::WindowTooLarge { window, len: beliefs.len() });
    }
    let tail = &beliefs[beliefs.len() - window..];
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let limit = tail.iter().sum::<f64>() / window as f64;
    Ok(LimitEstimate {
        limit,
        converged: max - min < CONVERGENCE_TOL,
        positive: limit > 0.0,
        range: max - min,
    })
}

/// Smallest `K` such that the realized action equals the benign counterfactual
/// at every decision step `k >= K`. `None` when the last decision differs or
/// there are no decisions.
pub fn settle_index(records: &[TraceRecord]) -> Option<usize> {
    let decisions: Vec<&TraceRecord> = records.iter().filter(|r| r.has_decisions()).collect();
    let mut settle = None;
    for record in decisions.iter().rev() {
        match (record.action, record.benign_action) {
            (Some(a), Some(b)) if a == b => settle = Some(record.k),
            _ => break,
        }
    }
    settle
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenignDetection {
    pub benign: bool,
    pub settle_index: Option<usize>,
    /// Number of decision steps at or after the settle index.
    pub confirmed_steps: usize,
}

/// Certifies "asymptotically benign" on a finite trace: a settle index exists
/// and at least `window` decisions follow it.
pub fn detect_asymptotically_benign(records: &[TraceRecord], window: usize) -> Result<BenignDetection, AnalysisError> {
    if records.iter().any(|r| r.has_decisions() && r.benign_action.is_none()) {
        return Err(AnalysisError::MissingColumn("a_benign"));
    }
    let settle = settle_index(records);
    let confirmed = settle
        .map(|k| records.iter().filter(|r| r.has_decisions() && r.k >= k).count())
        .unwrap_or(0);
    Ok(BenignDetection {
        benign: settle.is_some() && confirmed >= window,
        settle_index: settle,
        confirmed_steps: confirmed,
    })
}

/// [`estimate_limit_belief`] as a verdict: the tail must be flat and positive.
pub fn limit_verdict(beliefs: &[f64], window: usize) -> Result<PropertyVerdict, AnalysisError> {
    let e = estimate_limit_belief(beliefs, window)?;
    let holds = e.converged && e.positive;
    let violations = if holds { Vec::new() } else { vec![beliefs.len() - 1] };
    Ok(PropertyVerdict::new("limit-belief", Method::ExactEnumeration, CONVERGENCE_TOL - e.range, violations)
        .with_note(format!("limit {:.6e}, tail range {:.3e}", e.limit, e.range)))
}

/// [`detect_asymptotically_benign`] as a verdict.
pub fn benign_verdict(records: &[TraceRecord], window: usize) -> Result<PropertyVerdict, AnalysisError> {
    let d = detect_asymptotically_benign(records, window)?;
    let last = records.last().map(|r| r.k).unwrap_or(0);
    let violations = if d.benign { Vec::new() } else { vec![last] };
    let note = match d.settle_index {
        Some(k) => format!("settle index {k}, {} confirming decisions", d.confirmed_steps),
        None => "no settle index".to_string(),
    };
    Ok(PropertyVerdict::new(
        "asymptotically-benign",
        Method::ExactEnumeration,
        d.confirmed_steps as f64 - window as f64,
        violations,
    )
    .with_note(note))
}

/// Sup-norm distance between the malicious and benign rows along the realized
/// path, one entry per decision step.
pub fn transition_gaps(model: &MdpModel, records: &[TraceRecord]) -> Result<Vec<(usize, f64)>, AnalysisError> {
    records
        .iter()
        .filter(|r| r.has_decisions())
        .map(|record| {
            let r = record.reaction.ok_or(AnalysisError::MissingColumn("r"))?;
            let benign = record.benign_action.ok_or(AnalysisError::MissingColumn("a_benign"))?;
            let malicious = record
                .malicious_action
                .or(record.action)
                .ok_or(AnalysisError::MissingColumn("a"))?;
            let p = model.checked_row(record.state, malicious, r).map_err(BeliefError::from)?;
            let q = model.checked_row(record.state, benign, r).map_err(BeliefError::from)?;
            let gap = p.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok((record.k, gap))
        })
        .collect()
}

/// The type-conditional rows must coincide at every decision step from
/// `from` on. Pass the settle index; `None` means no suffix exists and the
/// check fails.
pub fn check_transition_gap(
    model: &MdpModel,
    records: &[TraceRecord],
    from: Option<usize>,
) -> Result<PropertyVerdict, AnalysisError> {
    let gaps = transition_gaps(model, records)?;
    let Some(from) = from else {
        let worst = gaps.last().map(|g| -g.1).unwrap_or(0.0);
        return Ok(PropertyVerdict {
            property: "transition-gap".into(),
            holds: false,
            worst_margin: worst,
            violations: Vec::new(),
            method: Method::ExactEnumeration,
            note: Some("no settle index: the trace never stays benign".into()),
        });
    };
    let mut worst: f64 = 0.0;
    let mut violations = Vec::new();
    for &(k, gap) in gaps.iter().filter(|(k, _)| *k >= from) {
        worst = worst.min(-gap);
        if gap > 0.0 {
            violations.push(k);
        }
    }
    Ok(PropertyVerdict::new("transition-gap", Method::ExactEnumeration, worst, violations))
}

/// Passive bluffing: every reaction taken by any receiver type lies in the
/// reaction-invariant set, and the sender's belief never moves.
pub fn check_passively_bluffing(model: &MdpModel, records: &[TraceRecord]) -> Result<PropertyVerdict, AnalysisError> {
    let invariant = reaction_invariant_set(model);
    let first = records
        .first()
        .and_then(|r| r.prob_aware)
        .ok_or(AnalysisError::MissingColumn("prob_aware"))?;
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    let mut outside = false;
    for record in records {
        let prob = record.prob_aware.ok_or(AnalysisError::MissingColumn("prob_aware"))?;
        let used = [record.reaction, record.reaction_aware, record.reaction_unaware];
        let bad_reaction = used.iter().flatten().any(|r| !invariant.contains(r));
        let drift = prob.to_bits() != first.to_bits();
        if bad_reaction || drift {
            violations.push(record.k);
        }
        outside |= bad_reaction;
        worst = worst.min(-(prob - first).abs());
    }
    let mut verdict = PropertyVerdict::new("passively-bluffing", Method::ExactEnumeration, worst, violations);
    if outside {
        verdict = verdict.with_note("reactions outside the reaction-invariant set were used");
    }
    Ok(verdict)
}

/// Running average `S_k = (1/k) sum_{i<=k} ln p_alt(x_i) / p_true(x_i)` along the
/// path; `None` from the first step whose likelihood vanishes.
pub fn kl_diagnostic(model: &MdpModel, records: &[TraceRecord], truth: SenderType) -> Result<Vec<Option<f64>>, AnalysisError> {
    let mut out = Vec::new();
    let mut sum = 0.0;
    let mut defined = true;
    for pair in records.windows(2) {
        let (record, next) = (&pair[0], &pair[1]);
        if !record.has_decisions() {
            break;
        }
        let (benign, malicious) = sender_rows(model, record)?;
        let (t, alt) = match truth {
            SenderType::Malicious => (malicious[next.state], benign[next.state]),
            SenderType::Benign => (benign[next.state], malicious[next.state]),
        };
        if t <= 0.0 || alt <= 0.0 {
            defined = false;
        }
        if defined {
            sum += (alt / t).ln();
            out.push(Some(sum / next.k as f64));
        } else {
            out.push(None);
        }
    }
    Ok(out)
}

/// Sender policy compared against the equilibrium in [`utility_gap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SenderDeviation {
    Equilibrium,
    Always(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub gap: f64,
    pub std_err: f64,
    pub runs: usize,
    pub horizon: usize,
}

fn average_sender_utility(trace: &Trace) -> f64 {
    let c = &trace.config;
    let (sum, n) = trace.decisions().fold((0.0, 0usize), |(s, n), r| {
        let (a, rr) = (r.action.unwrap_or(0), r.reaction.unwrap_or(0));
        (s + c.utilities.sender(c.true_sender, r.state, a, rr), n + 1)
    });
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Monte Carlo estimate of the malicious sender's long-run utility gain from
/// switching to `deviation` while the receiver of type `receiver` keeps its
/// equilibrium behaviour. Episodes of length `horizon` are paired by run
/// index, so both policies see the same random stream.
pub fn utility_gap(
    config: &SimulationConfig,
    deviation: SenderDeviation,
    receiver: ReceiverType,
    horizon: usize,
    runs: usize,
) -> Result<GapEstimate, AnalysisError> {
    let mut base = config.clone();
    base.true_sender = SenderType::Malicious;
    base.true_receiver = receiver;
    base.steps = horizon;
    let forced = match deviation {
        SenderDeviation::Equilibrium => None,
        SenderDeviation::Always(a) => Some(a),
    };
    let diffs = (0..runs)
        .map(|run| {
            let eq = run_episode_with(&base, run, None)?;
            let dev = match forced {
                None => eq.clone(),
                Some(_) => run_episode_with(&base, run, forced)?,
            };
            Ok(average_sender_utility(&dev) - average_sender_utility(&eq))
        })
        .collect::<Result<Vec<f64>, AnalysisError>>()?;
    let n = runs.max(1) as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = if runs > 1 {
        diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(GapEstimate {
        gap: mean,
        std_err: (var / n).sqrt(),
        runs,
        horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedGap {
    pub prob_aware: f64,
    pub unaware: GapEstimate,
    pub aware: GapEstimate,
    /// `(1 - w) * D_unaware + w * D_aware` with `w = prob_aware`.
    pub weighted: f64,
}

/// Sweeps the malicious sender's initial belief on the aware receiver and
/// reports the belief-weighted utility gap of `deviation` at each point.
/// Finite-horizon evidence only: the infimum over all strategies that
/// underpins the asymptotic result cannot be enumerated.
pub fn utility_gap_sweep(
    config: &SimulationConfig,
    deviation: SenderDeviation,
    grid: &[f64],
    horizon: usize,
    runs: usize,
) -> Result<Vec<WeightedGap>, AnalysisError> {
    if config.game != GameKind::G2 {
        return Err(AnalysisError::Engine(EngineError::Config("the sweep needs a g2 configuration".into())));
    }
    grid.iter()
        .map(|&w| {
            let mut c = config.clone();
            c.types = TypeStructure::from_alpha_beta(config.types.alpha(), 1.0 - w).map_err(EngineError::from)?;
            let unaware = utility_gap(&c, deviation, ReceiverType::Unaware, horizon, runs)?;
            let aware = utility_gap(&c, deviation, ReceiverType::Aware, horizon, runs)?;
            Ok(WeightedGap {
                prob_aware: w,
                weighted: (1.0 - w) * unaware.gap + w * aware.gap,
                unaware,
                aware,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_episode;
    use crate::presets::{self, A_B, A_M};

    fn g1_trace(seed: u64, steps: usize) -> Trace {
        let m = presets::g1_known_vuln();
        let u = presets::utilities(&m);
        let c = SimulationConfig::g1(m, u, presets::G1_PRIOR, steps).unwrap().with_seed(seed);
        run_episode(&c, 0).unwrap()
    }

    fn g2_trace(model: crate::model::MdpModel, seed: u64, steps: usize) -> Trace {
        let u = presets::utilities(&model);
        let c = SimulationConfig::g2(model, u, presets::G2_ALPHA, presets::G2_BETA, ReceiverType::Unaware, steps)
            .unwrap()
            .with_seed(seed);
        run_episode(&c, 0).unwrap()
    }

    #[test]
    fn exact_submartingale_on_g1() {
        let t = g1_trace(5, 300);
        let m = &t.config.model;
        for mode in [SubmartingaleMode::Plain, SubmartingaleMode::Log, SubmartingaleMode::Jensen] {
            let v = check_submartingale(m, &t.records, SenderType::Malicious, mode, EXACT_TOL).unwrap();
            assert!(v.holds, "{mode:?}: {v:?}");
            assert!(v.worst_margin >= -EXACT_TOL);
        }
    }

    #[test]
    fn identical_rows_give_zero_margin() {
        let model = crate::model::MdpModel::from_rows(&["u", "v"], &["a", "b"], &["r"], "u", |_, _, _| vec![0.6, 0.4])
            .unwrap();
        let records: Vec<TraceRecord> = (0..4)
            .map(|k| TraceRecord {
                k,
                state: k % 2,
                action: Some(1),
                reaction: Some(0),
                benign_action: Some(0),
                malicious_action: Some(1),
                belief_aware: 0.25,
                belief_unaware: None,
                prob_aware: None,
                reaction_aware: None,
                reaction_unaware: None,
                bayes_coefficient: None,
                impossible: false,
                exact_equilibrium: None,
                epsilon: None,
            })
            .collect();
        let v = check_submartingale(&model, &records, SenderType::Malicious, SubmartingaleMode::Plain, EXACT_TOL).unwrap();
        assert!(v.holds);
        assert_eq!(v.worst_margin, 0.0);
    }

    #[test]
    fn corrupted_belief_is_located() {
        let mut t = g1_trace(5, 120);
        t.records[40].belief_aware -= 1e-3;
        let v = check_submartingale(&t.config.model, &t.records, SenderType::Malicious, SubmartingaleMode::Plain, EXACT_TOL)
            .unwrap();
        assert!(!v.holds);
        assert_eq!(v.violations.first(), Some(&40));
    }

    #[test]
    fn limit_estimates() {
        let flat = vec![0.42; 80];
        let e = estimate_limit_belief(&flat, 50).unwrap();
        assert!(e.converged && e.positive);
        assert!((e.limit - 0.42).abs() < 1e-15);

        let wobble: Vec<f64> = (0..80).map(|k| 0.5 + if k % 2 == 0 { 0.05 } else { -0.05 }).collect();
        assert!(!estimate_limit_belief(&wobble, 50).unwrap().converged);
        assert!(matches!(estimate_limit_belief(&flat, 81), Err(AnalysisError::WindowTooLarge { .. })));

        let t = g1_trace(5, 300);
        let e = estimate_limit_belief(&t.beliefs(), 50).unwrap();
        assert!(e.converged && e.positive && e.limit < 1.0, "{e:?}");
    }

    #[test]
    fn benign_detection() {
        let t = g1_trace(5, 300);
        let d = detect_asymptotically_benign(&t.records, DEFAULT_CONFIRMATION_WINDOW).unwrap();
        assert!(d.benign, "{d:?}");
        assert!(d.settle_index.unwrap() <= 250);

        let mut all_benign = t.records.clone();
        for r in all_benign.iter_mut().filter(|r| r.has_decisions()) {
            r.action = Some(A_B);
            r.benign_action = Some(A_B);
        }
        assert_eq!(settle_index(&all_benign), Some(0));

        let mut missing = t.records.clone();
        missing[3].benign_action = None;
        assert!(matches!(
            detect_asymptotically_benign(&missing, 50),
            Err(AnalysisError::MissingColumn("a_benign"))
        ));
    }

    #[test]
    fn nonbluffing_g2_is_not_benign() {
        let t = g2_trace(presets::g2_nonbluffing(), 5, 500);
        let d = detect_asymptotically_benign(&t.records, DEFAULT_CONFIRMATION_WINDOW).unwrap();
        assert!(!d.benign, "{d:?}");
    }

    #[test]
    fn transition_gap_examples() {
        let t = g1_trace(5, 300);
        let m = &t.config.model;
        let k = settle_index(&t.records);
        assert!(check_transition_gap(m, &t.records, k).unwrap().holds);

        let gaps = transition_gaps(m, &t.records).unwrap();
        let first = t.records[0].clone();
        assert_eq!(first.action, Some(A_M));
        assert!((gaps[0].1 - 0.1).abs() < 1e-12);

        let mut corrupted = t.records.clone();
        let j = k.unwrap() + 10;
        corrupted[j].malicious_action = Some(A_M);
        corrupted[j].action = Some(A_M);
        let v = check_transition_gap(m, &corrupted, k).unwrap();
        assert_eq!(v.violations.first(), Some(&j));
    }

    #[test]
    fn bluffing_checks() {
        let t = g2_trace(presets::g2_bluffing(), 9, 300);
        let v = check_passively_bluffing(&t.config.model, &t.records).unwrap();
        assert!(v.holds, "{v:?}");
        assert!(t.records.iter().all(|r| r.prob_aware == Some(0.8)));

        let t = g2_trace(presets::g2_nonbluffing(), 9, 300);
        assert!(!check_passively_bluffing(&t.config.model, &t.records).unwrap().holds);

        let g1 = g1_trace(1, 10);
        assert!(matches!(
            check_passively_bluffing(&g1.config.model, &g1.records),
            Err(AnalysisError::MissingColumn("prob_aware"))
        ));
    }

    #[test]
    fn single_reaction_bluffs_vacuously() {
        let model = crate::model::MdpModel::from_rows(&["u", "v"], &["a", "b"], &["r"], "u", |_, a, _| {
            if a == 0 {
                vec![0.6, 0.4]
            } else {
                vec![0.5, 0.5]
            }
        })
        .unwrap();
        let u = crate::model::UtilityTables::from_fns(&model, |_, x, _, _| x as f64, |_, _, _, _| 0.0);
        let c = SimulationConfig::g2(model, u, 0.5, 0.5, ReceiverType::Unaware, 30).unwrap();
        let t = run_episode(&c, 0).unwrap();
        assert!(check_passively_bluffing(&t.config.model, &t.records).unwrap().holds);
    }

    #[test]
    fn kl_diagnostic_examples() {
        let t = g1_trace(5, 300);
        let s = kl_diagnostic(&t.config.model, &t.records, SenderType::Malicious).unwrap();
        assert_eq!(s.len(), 300);
        assert!(s.iter().all(|v| v.is_some()));

        let mut same = t.records.clone();
        for r in same.iter_mut() {
            if r.has_decisions() {
                r.benign_action = r.action;
                r.malicious_action = r.action;
            }
        }
        let s = kl_diagnostic(&t.config.model, &same, SenderType::Malicious).unwrap();
        assert!(s.iter().all(|v| *v == Some(0.0)));

        let model = crate::model::MdpModel::from_rows(&["u", "v"], &["a", "b"], &["r"], "u", |_, a, _| {
            if a == 0 {
                vec![1.0, 0.0]
            } else {
                vec![0.5, 0.5]
            }
        })
        .unwrap();
        let mut recs = t.records[..3].to_vec();
        for r in recs.iter_mut() {
            r.state = 1;
            r.benign_action = Some(0);
            r.malicious_action = Some(1);
            r.action = Some(1);
            r.reaction = Some(0);
        }
        recs[2].action = None;
        let s = kl_diagnostic(&model, &recs, SenderType::Malicious).unwrap();
        assert_eq!(s, vec![None, None]);
    }

    #[test]
    fn null_deviation_has_zero_gap() {
        let model = presets::g2_bluffing();
        let u = presets::utilities(&model);
        let c = SimulationConfig::g2(model, u, presets::G2_ALPHA, presets::G2_BETA, ReceiverType::Aware, 50).unwrap();
        let g = utility_gap(&c, SenderDeviation::Equilibrium, ReceiverType::Aware, 50, 4).unwrap();
        assert_eq!(g.gap, 0.0);
        assert_eq!(g.std_err, 0.0);
    }
}
