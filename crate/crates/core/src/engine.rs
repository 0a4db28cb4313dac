//! Step-by-step simulation of the signaling games: re-solve the horizon game,
//! play the stage-0 choices of the true types, sample the next state and
//! update every belief.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis;
use crate::belief::{bayes_step, BeliefError, LikelihoodProfile};
use crate::equilibrium::{
    EquilibriumError, EquilibriumResult, GameKind, HorizonBeliefs, HorizonGame, DEFAULT_PROFILE_CAP,
};
use crate::model::{validate_model, MdpModel, ModelError, ReceiverType, SenderType, TypeStructure, UtilityTables};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

fn default_cap() -> u64 {
    DEFAULT_PROFILE_CAP as u64
}

/// Everything needed to reproduce a batch of episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub game: GameKind,
    pub model: MdpModel,
    pub utilities: UtilityTables,
    pub types: TypeStructure,
    pub true_sender: SenderType,
    /// Ignored by `g1`, whose single receiver knows the vulnerability.
    pub true_receiver: ReceiverType,
    pub steps: usize,
    pub horizon: usize,
    pub master_seed: u64,
    pub runs: usize,
    #[serde(default = "default_cap")]
    pub profile_cap: u64,
}

impl SimulationConfig {
    /// A `g1` configuration with a common prior on the malicious sender.
    pub fn g1(model: MdpModel, utilities: UtilityTables, prior: f64, steps: usize) -> Result<Self, EngineError> {
        Ok(SimulationConfig {
            game: GameKind::G1,
            model,
            utilities,
            types: TypeStructure::common_prior(prior)?,
            true_sender: SenderType::Malicious,
            true_receiver: ReceiverType::Aware,
            steps,
            horizon: 2,
            master_seed: 0,
            runs: 1,
            profile_cap: default_cap(),
        })
    }

    /// A `g2` configuration from `alpha` and `beta`.
    pub fn g2(
        model: MdpModel,
        utilities: UtilityTables,
        alpha: f64,
        beta: f64,
        true_receiver: ReceiverType,
        steps: usize,
    ) -> Result<Self, EngineError> {
        Ok(SimulationConfig {
            game: GameKind::G2,
            model,
            utilities,
            types: TypeStructure::from_alpha_beta(alpha, beta)?,
            true_sender: SenderType::Malicious,
            true_receiver,
            steps,
            horizon: 2,
            master_seed: 0,
            runs: 1,
            profile_cap: default_cap(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let violations = validate_model(&self.model);
        if !violations.is_empty() {
            return Err(EngineError::Config(format!("model violates invariants: {violations:?}")));
        }
        self.utilities.check_against(&self.model)?;
        self.types.validate()?;
        if self.runs == 0 {
            return Err(EngineError::Config("runs must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(EngineError::Config("horizon must be at least 1".into()));
        }
        Ok(())
    }

    /// Receiver hypotheses in solver order.
    pub fn receiver_types(&self) -> &'static [ReceiverType] {
        self.game.receiver_types()
    }

    fn true_hypothesis(&self) -> usize {
        match self.game {
            GameKind::G1 => 0,
            GameKind::G2 => self.true_receiver.index(),
        }
    }
}

/// State, decisions and beliefs at one step.
///
/// The decisions are those taken at step `k` from `state`; the beliefs are the
/// ones held when deciding. The terminal record carries no decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub state: usize,
    pub action: Option<usize>,
    pub reaction: Option<usize>,
    /// Stage-0 action of the benign sender type at this history.
    pub benign_action: Option<usize>,
    /// Stage-0 action of the malicious sender type at this history.
    pub malicious_action: Option<usize>,
    /// Belief on the malicious sender held by the aware receiver (the only
    /// receiver in `g1`).
    pub belief_aware: f64,
    /// Belief on the malicious sender held by the unaware receiver (`g2`).
    pub belief_unaware: Option<f64>,
    /// Malicious sender's belief that the receiver is aware (`g2`).
    pub prob_aware: Option<f64>,
    /// Reaction of the aware receiver type (`g2`).
    pub reaction_aware: Option<usize>,
    /// Reaction of the unaware receiver type (`g2`).
    pub reaction_unaware: Option<usize>,
    /// Bayes coefficient that produced `belief_aware` from the previous step.
    pub bayes_coefficient: Option<f64>,
    /// Some update into this step had zero evidence and kept its prior.
    pub impossible: bool,
    pub exact_equilibrium: Option<bool>,
    pub epsilon: Option<f64>,
}

impl TraceRecord {
    pub fn has_decisions(&self) -> bool {
        self.action.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub final_belief_aware: f64,
    pub final_belief_unaware: Option<f64>,
    pub final_prob_aware: Option<f64>,
    /// First step from which the realized action always equals the benign one.
    pub settle_index: Option<usize>,
    pub impossible_events: usize,
    pub inexact_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: SimulationConfig,
    pub run_index: usize,
    pub records: Vec<TraceRecord>,
    pub summary: TraceSummary,
}

impl Trace {
    pub fn beliefs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.belief_aware).collect()
    }

    pub fn decisions(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.has_decisions())
    }
}

/// Run-local generator: ChaCha8 seeded by the master seed, one stream per run.
pub fn run_rng(master_seed: u64, run_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index as u64);
    rng
}

/// Inverse-CDF draw from a probability row.
pub fn sample_next<R: Rng>(rng: &mut R, row: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (x, &p) in row.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return x;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// Current beliefs of every player, evolving along an episode.
#[derive(Debug, Clone, PartialEq)]
struct BeliefState {
    /// Per receiver hypothesis: probability of the malicious sender.
    receiver: Vec<f64>,
    /// Per sender type: probability that the receiver is aware.
    sender_aware: [f64; 2],
}

impl BeliefState {
    fn initial(config: &SimulationConfig) -> Self {
        BeliefState {
            receiver: config
                .receiver_types()
                .iter()
                .map(|&t| config.types.receiver_prior_malicious(t))
                .collect(),
            sender_aware: [
                config.types.sender_prior_aware(SenderType::Benign),
                config.types.sender_prior_aware(SenderType::Malicious),
            ],
        }
    }

    fn horizon_beliefs(&self, game: GameKind) -> HorizonBeliefs {
        match game {
            GameKind::G1 => HorizonBeliefs::g1(self.receiver[0]),
            GameKind::G2 => HorizonBeliefs::g2([self.receiver[0], self.receiver[1]], self.sender_aware),
        }
    }

    fn key(&self, state: usize) -> (usize, Vec<u64>) {
        let mut bits: Vec<u64> = self.receiver.iter().map(|b| b.to_bits()).collect();
        bits.extend(self.sender_aware.iter().map(|b| b.to_bits()));
        (state, bits)
    }
}

/// Memoizes horizon solutions within an episode; the solver is a pure
/// function of (state, beliefs).
struct SolveCache<'a> {
    config: &'a SimulationConfig,
    entries: HashMap<(usize, Vec<u64>), EquilibriumResult>,
}

impl<'a> SolveCache<'a> {
    fn new(config: &'a SimulationConfig) -> Self {
        SolveCache { config, entries: HashMap::new() }
    }

    fn solve(&mut self, state: usize, beliefs: &BeliefState) -> Result<EquilibriumResult, EngineError> {
        let key = beliefs.key(state);
        if let Some(hit) = self.entries.get(&key) {
            return Ok(hit.clone());
        }
        let c = self.config;
        let game = HorizonGame::new(
            &c.model,
            &c.utilities,
            c.game,
            c.horizon,
            state,
            beliefs.horizon_beliefs(c.game),
            c.profile_cap as u128,
        )?;
        let result = game.solve();
        self.entries.insert(key, result.clone());
        Ok(result)
    }
}

/// Simulates one episode of `config.steps` steps.
pub fn run_episode(config: &SimulationConfig, run_index: usize) -> Result<Trace, EngineError> {
    run_episode_with(config, run_index, None)
}

/// Like [`run_episode`], but the true sender plays `forced_action` at every
/// step instead of its equilibrium action. Everyone else still follows the
/// solved equilibrium and updates beliefs as if the sender did too.
pub fn run_episode_with(
    config: &SimulationConfig,
    run_index: usize,
    forced_action: Option<usize>,
) -> Result<Trace, EngineError> {
    config.validate()?;
    if let Some(a) = forced_action {
        if a >= config.model.num_actions() {
            return Err(EngineError::Config(format!("forced action {a} out of range")));
        }
    }
    let model = &config.model;
    let mut rng = run_rng(config.master_seed, run_index);
    let mut cache = SolveCache::new(config);
    let mut beliefs = BeliefState::initial(config);
    let mut state = model.initial_index();
    let mut coefficient = None;
    let mut impossible = false;
    let mut records = Vec::with_capacity(config.steps + 1);
    let truth = config.true_hypothesis();
    let g2 = config.game == GameKind::G2;

    for k in 0..=config.steps {
        let mut record = TraceRecord {
            k,
            state,
            action: None,
            reaction: None,
            benign_action: None,
            malicious_action: None,
            belief_aware: *beliefs.receiver.last().expect("at least one receiver hypothesis"),
            belief_unaware: g2.then(|| beliefs.receiver[0]),
            prob_aware: g2.then(|| beliefs.sender_aware[SenderType::Malicious.index()]),
            reaction_aware: None,
            reaction_unaware: None,
            bayes_coefficient: coefficient,
            impossible,
            exact_equilibrium: None,
            epsilon: None,
        };
        if k == config.steps {
            records.push(record);
            break;
        }

        let solved = cache.solve(state, &beliefs)?;
        let actions = solved.sender_actions;
        let reactions = &solved.receiver_reactions;
        let action = forced_action.unwrap_or(actions[config.true_sender.index()]);
        let reaction = reactions[truth];
        record.action = Some(action);
        record.reaction = Some(reaction);
        record.benign_action = Some(actions[SenderType::Benign.index()]);
        record.malicious_action = Some(actions[SenderType::Malicious.index()]);
        if g2 {
            record.reaction_unaware = Some(reactions[ReceiverType::Unaware.index()]);
            record.reaction_aware = Some(reactions[ReceiverType::Aware.index()]);
        }
        record.exact_equilibrium = Some(solved.is_exact);
        record.epsilon = Some(solved.epsilon);
        records.push(record);

        let next = sample_next(&mut rng, model.row(state, action, reaction));

        impossible = false;
        coefficient = None;
        let last = beliefs.receiver.len() - 1;
        for (h, &r) in reactions.iter().enumerate() {
            let benign = model.row(state, actions[SenderType::Benign.index()], r);
            let malicious = model.row(state, actions[SenderType::Malicious.index()], r);
            let step = bayes_step(beliefs.receiver[h], &LikelihoodProfile::from_sender_rows(benign, malicious)?, next)?;
            beliefs.receiver[h] = step.posterior;
            impossible |= step.impossible;
            if h == last {
                coefficient = step.coefficient;
            }
        }
        if g2 {
            for theta in SenderType::ALL {
                let a = actions[theta.index()];
                let unaware = model.row(state, a, reactions[ReceiverType::Unaware.index()]);
                let aware = model.row(state, a, reactions[ReceiverType::Aware.index()]);
                let step = bayes_step(beliefs.sender_aware[theta.index()], &LikelihoodProfile::new(aware, unaware)?, next)?;
                beliefs.sender_aware[theta.index()] = step.posterior;
                impossible |= step.impossible;
            }
        }
        state = next;
    }

    let last = records.last().expect("trace holds the initial record");
    let summary = TraceSummary {
        final_belief_aware: last.belief_aware,
        final_belief_unaware: last.belief_unaware,
        final_prob_aware: last.prob_aware,
        settle_index: analysis::settle_index(&records),
        impossible_events: records.iter().filter(|r| r.impossible).count(),
        inexact_steps: records.iter().filter(|r| r.exact_equilibrium == Some(false)).count(),
    };
    Ok(Trace {
        config: config.clone(),
        run_index,
        records,
        summary,
    })
}

/// Cross-run statistics of the aware-receiver belief at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAggregate {
    pub k: usize,
    pub mean: f64,
    pub std_err: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub per_step: Vec<StepAggregate>,
    /// Settle index of each run, in run order.
    pub settle_indices: Vec<Option<usize>>,
    /// `(settle index, number of runs)` sorted by index; unsettled runs are omitted.
    pub settle_histogram: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub traces: Vec<Trace>,
    pub summary: MonteCarloSummary,
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn aggregate(traces: &[Trace]) -> MonteCarloSummary {
    let len = traces.iter().map(|t| t.records.len()).min().unwrap_or(0);
    let n = traces.len() as f64;
    let per_step = (0..len)
        .map(|k| {
            let mut values: Vec<f64> = traces.iter().map(|t| t.records[k].belief_aware).collect();
            let mean = values.iter().sum::<f64>() / n;
            let var = if traces.len() > 1 {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            values.sort_by(f64::total_cmp);
            StepAggregate {
                k,
                mean,
                std_err: (var / n).sqrt(),
                q05: quantile(&values, 0.05),
                median: quantile(&values, 0.5),
                q95: quantile(&values, 0.95),
            }
        })
        .collect();
    let settle_indices: Vec<Option<usize>> = traces.iter().map(|t| t.summary.settle_index).collect();
    let mut counts = std::collections::BTreeMap::new();
    for k in settle_indices.iter().flatten() {
        *counts.entry(*k).or_insert(0) += 1;
    }
    MonteCarloSummary {
        per_step,
        settle_indices,
        settle_histogram: counts.into_iter().collect(),
    }
}

/// Runs `config.runs` independent episodes in parallel; results are ordered by
/// run index and independent of the worker count.
pub fn monte_carlo(config: &SimulationConfig) -> Result<MonteCarloResult, EngineError> {
    config.validate()?;
    let traces = (0..config.runs)
        .into_par_iter()
        .map(|run| run_episode(config, run))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = aggregate(&traces);
    Ok(MonteCarloResult { traces, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{self, A_B, R_M};

    fn g1(steps: usize) -> SimulationConfig {
        let m = presets::g1_known_vuln();
        let u = presets::utilities(&m);
        SimulationConfig::g1(m, u, presets::G1_PRIOR, steps).unwrap()
    }

    #[test]
    fn empty_run_holds_initial_record() {
        let t = run_episode(&g1(0), 0).unwrap();
        assert_eq!(t.records.len(), 1);
        let r = &t.records[0];
        assert_eq!(r.state, 0);
        assert_eq!(r.belief_aware, 0.01);
        assert!(r.action.is_none() && r.bayes_coefficient.is_none());
    }

    #[test]
    fn same_seed_same_trace() {
        let c = g1(120).with_seed(7);
        assert_eq!(run_episode(&c, 3).unwrap(), run_episode(&c, 3).unwrap());
        assert_ne!(run_episode(&c, 3).unwrap().records, run_episode(&c, 4).unwrap().records);
    }

    #[test]
    fn settles_to_benign_and_mitigation() {
        let t = run_episode(&g1(300).with_seed(11), 0).unwrap();
        let last = &t.records[t.records.len() - 2];
        assert_eq!(last.action, Some(A_B));
        assert_eq!(last.reaction, Some(R_M));
        assert!(t.summary.settle_index.is_some());
        assert!(t.summary.final_belief_aware < 1.0 && t.summary.final_belief_aware > 0.0);
    }

    #[test]
    fn sampling_follows_row() {
        let mut rng = run_rng(1, 0);
        assert_eq!(sample_next(&mut rng, &[0.0, 1.0]), 1);
        assert_eq!(sample_next(&mut rng, &[1.0, 0.0]), 0);
        let hits = (0..20_000).filter(|_| sample_next(&mut rng, &[0.7, 0.3]) == 1).count();
        assert!((hits as f64 / 20_000.0 - 0.3).abs() < 0.02);
    }

    #[test]
    fn single_run_aggregate_matches_trace() {
        let c = g1(50).with_seed(3);
        let mc = monte_carlo(&c).unwrap();
        assert_eq!(mc.traces.len(), 1);
        for (agg, rec) in mc.summary.per_step.iter().zip(&mc.traces[0].records) {
            assert_eq!(agg.mean, rec.belief_aware);
            assert_eq!(agg.median, rec.belief_aware);
            assert_eq!(agg.std_err, 0.0);
        }
    }
}
