//! Receding-horizon pure-strategy Bayesian-Nash equilibria.
//!
//! A horizon of `T` covers the decision stages `0..T` counted from the current
//! step. A plan assigns a choice to every intra-horizon state path
//! `(x_1, ..., x_i)`, `i < T`, that can follow the current state; own past
//! choices are a function of the plan and the path, so they add no nodes.
//! Nodes are numbered breadth first and plan ids are base-`|choices|`
//! numbers whose most significant digit is node 0, so numeric order is the
//! lexicographic order over choice vectors.
//!
//! Utilities are averages over the `T` stages. For every sender type the
//! receiver-type weights follow the sender's belief, updated inside the
//! horizon by Bayes' rule under the candidate receiver plans; for every
//! receiver type the sender-type weights follow that receiver's belief,
//! updated under the candidate sender plans.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MdpModel, ReceiverType, SenderType, UtilityTables};

/// Unilateral improvements up to this size are treated as ties.
pub const BNE_TOL: f64 = 1e-12;

/// Default refusal threshold for the number of pure profiles.
pub const DEFAULT_PROFILE_CAP: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("{count} pure strategy profiles exceed the cap of {cap}")]
    Explosion { count: u128, cap: u128 },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("invalid game: {0}")]
    InvalidGame(String),
}

/// Node layout of plans for one role over a given horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanSpace {
    pub num_states: usize,
    pub num_choices: usize,
    pub horizon: usize,
}

impl PlanSpace {
    pub fn new(num_states: usize, num_choices: usize, horizon: usize) -> Self {
        PlanSpace { num_states, num_choices, horizon }
    }

    /// Number of decision nodes: `sum_{i < T} |X|^i`.
    pub fn num_nodes(&self) -> Option<u128> {
        let mut total: u128 = 0;
        let mut layer: u128 = 1;
        for _ in 0..self.horizon {
            total = total.checked_add(layer)?;
            layer = layer.checked_mul(self.num_states as u128)?;
        }
        Some(total)
    }

    /// Number of pure plans, `|choices|^nodes`, or `None` on overflow.
    pub fn num_plans(&self) -> Option<u128> {
        let nodes = u32::try_from(self.num_nodes()?).ok()?;
        (self.num_choices as u128).checked_pow(nodes)
    }

    /// First node index of stage `depth`.
    pub fn layer_offset(&self, depth: usize) -> usize {
        (0..depth).map(|i| self.num_states.pow(i as u32)).sum()
    }

    /// Node of the child reached by moving to `next` from `node` at `depth`.
    pub fn child(&self, node: usize, depth: usize, next: usize) -> usize {
        let within = node - self.layer_offset(depth);
        self.layer_offset(depth + 1) + within * self.num_states + next
    }

    /// Choice vector of plan `id`.
    pub fn decode(&self, id: usize) -> Vec<usize> {
        let nodes = self.num_nodes().expect("plan space fits") as usize;
        let mut out = vec![0; nodes];
        let mut rest = id;
        for slot in out.iter_mut().rev() {
            *slot = rest % self.num_choices;
            rest /= self.num_choices;
        }
        out
    }

    pub fn encode(&self, choices: &[usize]) -> usize {
        choices.iter().fold(0, |acc, &c| acc * self.num_choices + c)
    }
}

/// Which hypotheses the horizon game carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    /// Symmetric recognition: one receiver with a common prior.
    G1,
    /// Asymmetric recognition: unaware and aware receiver types.
    G2,
}

impl GameKind {
    pub fn receiver_types(self) -> &'static [ReceiverType] {
        match self {
            GameKind::G1 => &[ReceiverType::Aware],
            GameKind::G2 => &ReceiverType::ALL,
        }
    }
}

/// Beliefs at the current step that parameterize the horizon game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonBeliefs {
    /// Receiver's probability of the malicious sender, per receiver hypothesis.
    pub receiver_malicious: Vec<f64>,
    /// Sender's weights over the receiver hypotheses, per sender type.
    pub sender_weights: [Vec<f64>; 2],
}

impl HorizonBeliefs {
    pub fn g1(prior_malicious: f64) -> Self {
        HorizonBeliefs {
            receiver_malicious: vec![prior_malicious],
            sender_weights: [vec![1.0], vec![1.0]],
        }
    }

    /// `receiver_malicious = [unaware, aware]`; `aware` holds each sender
    /// type's probability that the receiver is aware.
    pub fn g2(receiver_malicious: [f64; 2], aware: [f64; 2]) -> Self {
        HorizonBeliefs {
            receiver_malicious: receiver_malicious.to_vec(),
            sender_weights: [
                vec![1.0 - aware[0], aware[0]],
                vec![1.0 - aware[1], aware[1]],
            ],
        }
    }
}

/// Pure intra-horizon plans for both sender types and every receiver type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HorizonStrategyProfile {
    pub horizon: usize,
    /// Plan ids indexed by [`SenderType::index`].
    pub sender: [usize; 2],
    /// Plan ids per receiver hypothesis, in [`GameKind::receiver_types`] order.
    pub receiver: Vec<usize>,
}

/// A solved horizon game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub profile: HorizonStrategyProfile,
    pub is_exact: bool,
    pub epsilon: f64,
    pub sender_utility: [f64; 2],
    pub receiver_utility: Vec<f64>,
    /// Stage-0 action of each sender type.
    pub sender_actions: [usize; 2],
    /// Stage-0 reaction of each receiver hypothesis.
    pub receiver_reactions: Vec<usize>,
}

/// Bayes' rule over an arbitrary number of hypotheses; a zero evidence keeps
/// the prior.
fn bayes_in_place(weights: &mut [f64], likelihood: &[f64]) {
    let mut evidence = 0.0;
    for (w, l) in weights.iter().zip(likelihood) {
        evidence += w * l;
    }
    if evidence == 0.0 {
        return;
    }
    for (w, l) in weights.iter_mut().zip(likelihood) {
        *w = *w * l / evidence;
    }
}

/// The truncated game at one step: static data, current state and beliefs.
#[derive(Debug, Clone)]
pub struct HorizonGame<'a> {
    model: &'a MdpModel,
    utilities: &'a UtilityTables,
    kind: GameKind,
    start: usize,
    beliefs: HorizonBeliefs,
    sender_space: PlanSpace,
    receiver_space: PlanSpace,
    sender_plans: Vec<Vec<usize>>,
    receiver_plans: Vec<Vec<usize>>,
}

impl<'a> HorizonGame<'a> {
    pub fn new(
        model: &'a MdpModel,
        utilities: &'a UtilityTables,
        kind: GameKind,
        horizon: usize,
        start: usize,
        beliefs: HorizonBeliefs,
        cap: u128,
    ) -> Result<Self, EquilibriumError> {
        if horizon == 0 {
            return Err(EquilibriumError::ZeroHorizon);
        }
        let hyps = kind.receiver_types().len();
        if beliefs.receiver_malicious.len() != hyps
            || beliefs.sender_weights.iter().any(|w| w.len() != hyps)
        {
            return Err(EquilibriumError::InvalidGame(format!(
                "beliefs do not match the {hyps} receiver hypotheses"
            )));
        }
        if start >= model.num_states() {
            return Err(EquilibriumError::InvalidGame(format!("start state {start} out of range")));
        }
        let count = profile_count(model, kind, horizon)?;
        if count > cap {
            return Err(EquilibriumError::Explosion { count, cap });
        }
        let sender_space = PlanSpace::new(model.num_states(), model.num_actions(), horizon);
        let receiver_space = PlanSpace::new(model.num_states(), model.num_reactions(), horizon);
        let decode_all = |space: &PlanSpace| -> Vec<Vec<usize>> {
            let n = space.num_plans().expect("checked against cap") as usize;
            (0..n).map(|id| space.decode(id)).collect()
        };
        Ok(HorizonGame {
            model,
            utilities,
            kind,
            start,
            beliefs,
            sender_plans: decode_all(&sender_space),
            receiver_plans: decode_all(&receiver_space),
            sender_space,
            receiver_space,
        })
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    pub fn horizon(&self) -> usize {
        self.sender_space.horizon
    }

    pub fn num_sender_plans(&self) -> usize {
        self.sender_plans.len()
    }

    pub fn num_receiver_plans(&self) -> usize {
        self.receiver_plans.len()
    }

    pub fn num_hypotheses(&self) -> usize {
        self.kind.receiver_types().len()
    }

    pub fn sender_space(&self) -> PlanSpace {
        self.sender_space
    }

    pub fn receiver_space(&self) -> PlanSpace {
        self.receiver_space
    }

    /// Expected average utility of sender type `theta` playing `plan`
    /// against the receiver plans `receiver` (one per hypothesis).
    pub fn sender_value(&self, theta: SenderType, plan: usize, receiver: &[usize]) -> f64 {
        let hyps = receiver.len();
        let mut probs = vec![1.0; hyps];
        let mut weights = self.beliefs.sender_weights[theta.index()].clone();
        let plan = &self.sender_plans[plan];
        let rplans: Vec<&[usize]> = receiver.iter().map(|&p| self.receiver_plans[p].as_slice()).collect();
        let total = self.sender_walk(theta, plan, &rplans, 0, 0, self.start, &mut probs, &mut weights);
        total / self.horizon() as f64
    }

    #[allow(clippy::too_many_arguments)]
    fn sender_walk(
        &self,
        theta: SenderType,
        plan: &[usize],
        rplans: &[&[usize]],
        depth: usize,
        node: usize,
        x: usize,
        probs: &mut [f64],
        weights: &mut [f64],
    ) -> f64 {
        let a = plan[node];
        let mut acc = 0.0;
        for h in 0..rplans.len() {
            let r = rplans[h][node];
            acc += probs[h] * self.utilities.sender(theta, x, a, r) * weights[h];
        }
        if depth + 1 == self.horizon() {
            return acc;
        }
        let mut likelihood = vec![0.0; rplans.len()];
        for next in 0..self.model.num_states() {
            let mut next_probs = probs.to_vec();
            for h in 0..rplans.len() {
                likelihood[h] = self.model.prob(next, x, a, rplans[h][node]);
                next_probs[h] *= likelihood[h];
            }
            let mut next_weights = weights.to_vec();
            bayes_in_place(&mut next_weights, &likelihood);
            let child = self.sender_space.child(node, depth, next);
            acc += self.sender_walk(theta, plan, rplans, depth + 1, child, next, &mut next_probs, &mut next_weights);
        }
        acc
    }

    /// Expected average utility of receiver hypothesis `hyp` playing `plan`
    /// against the sender plans `sender` (indexed by sender type).
    pub fn receiver_value(&self, hyp: usize, plan: usize, sender: [usize; 2]) -> f64 {
        let pm = self.beliefs.receiver_malicious[hyp];
        let mut weights = [1.0 - pm, pm];
        let mut probs = [1.0, 1.0];
        let splans = [self.sender_plans[sender[0]].as_slice(), self.sender_plans[sender[1]].as_slice()];
        let total = self.receiver_walk(&self.receiver_plans[plan], &splans, 0, 0, self.start, &mut probs, &mut weights);
        total / self.horizon() as f64
    }

    #[allow(clippy::too_many_arguments)]
    fn receiver_walk(
        &self,
        plan: &[usize],
        splans: &[&[usize]; 2],
        depth: usize,
        node: usize,
        x: usize,
        probs: &mut [f64; 2],
        weights: &mut [f64; 2],
    ) -> f64 {
        let r = plan[node];
        let mut acc = 0.0;
        for theta in SenderType::ALL {
            let t = theta.index();
            let a = splans[t][node];
            acc += probs[t] * self.utilities.receiver(theta, x, a, r) * weights[t];
        }
        if depth + 1 == self.horizon() {
            return acc;
        }
        for next in 0..self.model.num_states() {
            let likelihood = [
                self.model.prob(next, x, splans[0][node], r),
                self.model.prob(next, x, splans[1][node], r),
            ];
            let mut next_probs = [probs[0] * likelihood[0], probs[1] * likelihood[1]];
            let mut next_weights = *weights;
            bayes_in_place(&mut next_weights, &likelihood);
            let child = self.receiver_space.child(node, depth, next);
            acc += self.receiver_walk(plan, splans, depth + 1, child, next, &mut next_probs, &mut next_weights);
        }
        acc
    }

    fn combo_count(&self) -> usize {
        self.num_receiver_plans().pow(self.num_hypotheses() as u32)
    }

    /// Receiver plans (one per hypothesis) of mixed-radix combination `combo`.
    fn combo_plans(&self, combo: usize) -> Vec<usize> {
        let base = self.num_receiver_plans();
        let mut out = vec![0; self.num_hypotheses()];
        let mut rest = combo;
        for slot in out.iter_mut().rev() {
            *slot = rest % base;
            rest /= base;
        }
        out
    }

    /// Canonical profile at lexicographic position `index`.
    pub fn profile_at(&self, index: usize) -> HorizonStrategyProfile {
        let combos = self.combo_count();
        let ns = self.num_sender_plans();
        let combo = index % combos;
        let senders = index / combos;
        HorizonStrategyProfile {
            horizon: self.horizon(),
            sender: [senders / ns, senders % ns],
            receiver: self.combo_plans(combo),
        }
    }

    pub fn num_profiles(&self) -> usize {
        self.num_sender_plans().pow(2) * self.combo_count()
    }

    /// Every pure profile in canonical order.
    pub fn profiles(&self) -> impl Iterator<Item = HorizonStrategyProfile> + '_ {
        (0..self.num_profiles()).map(move |i| self.profile_at(i))
    }

    /// Largest unilateral improvement available in `profile`, recomputed
    /// directly from the value functions.
    pub fn max_unilateral_gain(&self, profile: &HorizonStrategyProfile) -> f64 {
        let mut worst: f64 = 0.0;
        for theta in SenderType::ALL {
            let current = self.sender_value(theta, profile.sender[theta.index()], &profile.receiver);
            for alt in 0..self.num_sender_plans() {
                worst = worst.max(self.sender_value(theta, alt, &profile.receiver) - current);
            }
        }
        for (h, &plan) in profile.receiver.iter().enumerate() {
            let current = self.receiver_value(h, plan, profile.sender);
            for alt in 0..self.num_receiver_plans() {
                worst = worst.max(self.receiver_value(h, alt, profile.sender) - current);
            }
        }
        worst
    }

    /// Enumerates all profiles and returns the lexicographically first exact
    /// BNE, or the first profile with the smallest unilateral gain.
    pub fn solve(&self) -> EquilibriumResult {
        let ns = self.num_sender_plans();
        let nr = self.num_receiver_plans();
        let combos = self.combo_count();
        let hyps = self.num_hypotheses();

        // sender[theta][plan * combos + combo]
        let mut sender_table = [vec![0.0; ns * combos], vec![0.0; ns * combos]];
        for theta in SenderType::ALL {
            let table = &mut sender_table[theta.index()];
            for combo in 0..combos {
                let rplans = self.combo_plans(combo);
                for plan in 0..ns {
                    table[plan * combos + combo] = self.sender_value(theta, plan, &rplans);
                }
            }
        }
        let mut sender_best = [vec![f64::NEG_INFINITY; combos], vec![f64::NEG_INFINITY; combos]];
        for t in 0..2 {
            for plan in 0..ns {
                for combo in 0..combos {
                    let v = sender_table[t][plan * combos + combo];
                    if v > sender_best[t][combo] {
                        sender_best[t][combo] = v;
                    }
                }
            }
        }

        // receiver[h][(pb * ns + pm) * nr + plan]
        let mut receiver_table = vec![vec![0.0; ns * ns * nr]; hyps];
        let mut receiver_best = vec![vec![f64::NEG_INFINITY; ns * ns]; hyps];
        for h in 0..hyps {
            for pb in 0..ns {
                for pm in 0..ns {
                    let pair = pb * ns + pm;
                    for plan in 0..nr {
                        let v = self.receiver_value(h, plan, [pb, pm]);
                        receiver_table[h][pair * nr + plan] = v;
                        if v > receiver_best[h][pair] {
                            receiver_best[h][pair] = v;
                        }
                    }
                }
            }
        }

        let gain_of = |index: usize| -> f64 {
            let p = self.profile_at(index);
            let combo = index % combos;
            let pair = p.sender[0] * ns + p.sender[1];
            let mut gain: f64 = 0.0;
            for t in 0..2 {
                gain = gain.max(sender_best[t][combo] - sender_table[t][p.sender[t] * combos + combo]);
            }
            for (h, &plan) in p.receiver.iter().enumerate() {
                gain = gain.max(receiver_best[h][pair] - receiver_table[h][pair * nr + plan]);
            }
            gain
        };

        let mut chosen = 0;
        let mut chosen_gain = f64::INFINITY;
        for index in 0..self.num_profiles() {
            let gain = gain_of(index);
            if gain < chosen_gain {
                chosen = index;
                chosen_gain = gain;
                if gain <= BNE_TOL {
                    break;
                }
            }
        }

        let profile = self.profile_at(chosen);
        let combo = chosen % combos;
        let pair = profile.sender[0] * ns + profile.sender[1];
        let sender_utility = [
            sender_table[0][profile.sender[0] * combos + combo],
            sender_table[1][profile.sender[1] * combos + combo],
        ];
        let receiver_utility = profile
            .receiver
            .iter()
            .enumerate()
            .map(|(h, &plan)| receiver_table[h][pair * nr + plan])
            .collect();
        let sender_actions = [
            self.sender_plans[profile.sender[0]][0],
            self.sender_plans[profile.sender[1]][0],
        ];
        let receiver_reactions = profile.receiver.iter().map(|&p| self.receiver_plans[p][0]).collect();
        EquilibriumResult {
            is_exact: chosen_gain <= BNE_TOL,
            epsilon: chosen_gain.max(0.0),
            profile,
            sender_utility,
            receiver_utility,
            sender_actions,
            receiver_reactions,
        }
    }

    /// The choice vector of a sender plan id.
    pub fn sender_plan(&self, id: usize) -> &[usize] {
        &self.sender_plans[id]
    }

    pub fn receiver_plan(&self, id: usize) -> &[usize] {
        &self.receiver_plans[id]
    }
}

/// Number of pure profiles for a game of the given kind.
pub fn profile_count(model: &MdpModel, kind: GameKind, horizon: usize) -> Result<u128, EquilibriumError> {
    let overflow = || EquilibriumError::Explosion { count: u128::MAX, cap: DEFAULT_PROFILE_CAP };
    let ns = PlanSpace::new(model.num_states(), model.num_actions(), horizon)
        .num_plans()
        .ok_or_else(overflow)?;
    let nr = PlanSpace::new(model.num_states(), model.num_reactions(), horizon)
        .num_plans()
        .ok_or_else(overflow)?;
    let hyps = kind.receiver_types().len() as u32;
    ns.checked_mul(ns)
        .and_then(|s| nr.checked_pow(hyps).and_then(|r| s.checked_mul(r)))
        .ok_or_else(overflow)
}

/// Every pure profile of the horizon game in canonical order, refusing when
/// the count exceeds `cap`.
pub fn enumerate_profiles(
    model: &MdpModel,
    kind: GameKind,
    horizon: usize,
    cap: u128,
) -> Result<impl Iterator<Item = HorizonStrategyProfile>, EquilibriumError> {
    if horizon == 0 {
        return Err(EquilibriumError::ZeroHorizon);
    }
    let count = profile_count(model, kind, horizon)?;
    if count > cap {
        return Err(EquilibriumError::Explosion { count, cap });
    }
    let ns = PlanSpace::new(model.num_states(), model.num_actions(), horizon)
        .num_plans()
        .expect("bounded by cap") as usize;
    let nr = PlanSpace::new(model.num_states(), model.num_reactions(), horizon)
        .num_plans()
        .expect("bounded by cap") as usize;
    let hyps = kind.receiver_types().len();
    let combos = nr.pow(hyps as u32);
    Ok((0..count as usize).map(move |index| {
        let combo = index % combos;
        let senders = index / combos;
        let mut receiver = vec![0; hyps];
        let mut rest = combo;
        for slot in receiver.iter_mut().rev() {
            *slot = rest % nr;
            rest /= nr;
        }
        HorizonStrategyProfile {
            horizon,
            sender: [senders / ns, senders % ns],
            receiver,
        }
    }))
}

/// Solves the horizon game at `start` with the given beliefs.
pub fn solve_receding_horizon_bne(
    model: &MdpModel,
    utilities: &UtilityTables,
    kind: GameKind,
    beliefs: HorizonBeliefs,
    start: usize,
    horizon: usize,
    cap: u128,
) -> Result<EquilibriumResult, EquilibriumError> {
    Ok(HorizonGame::new(model, utilities, kind, horizon, start, beliefs, cap)?.solve())
}

/// Expected average horizon utility of a sender type under `profile`.
pub fn expected_horizon_utility_sender(
    model: &MdpModel,
    utilities: &UtilityTables,
    kind: GameKind,
    profile: &HorizonStrategyProfile,
    sender_type: SenderType,
    beliefs: HorizonBeliefs,
    start: usize,
) -> Result<f64, EquilibriumError> {
    let game = HorizonGame::new(model, utilities, kind, profile.horizon, start, beliefs, u128::MAX)?;
    Ok(game.sender_value(sender_type, profile.sender[sender_type.index()], &profile.receiver))
}

/// Expected average horizon utility of a receiver hypothesis under `profile`.
pub fn expected_horizon_utility_receiver(
    model: &MdpModel,
    utilities: &UtilityTables,
    kind: GameKind,
    profile: &HorizonStrategyProfile,
    receiver_type: ReceiverType,
    beliefs: HorizonBeliefs,
    start: usize,
) -> Result<f64, EquilibriumError> {
    let hyp = kind
        .receiver_types()
        .iter()
        .position(|&t| t == receiver_type)
        .ok_or_else(|| EquilibriumError::InvalidGame(format!("{receiver_type:?} is not a hypothesis of {kind:?}")))?;
    let game = HorizonGame::new(model, utilities, kind, profile.horizon, start, beliefs, u128::MAX)?;
    Ok(game.receiver_value(hyp, profile.receiver[hyp], profile.sender))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{self, A_B, A_M, R_B, R_M, X_N};

    fn g1_game(model: &MdpModel, u: &UtilityTables, prior: f64, horizon: usize) -> HorizonGame<'static> {
        let model: &'static MdpModel = Box::leak(Box::new(model.clone()));
        let u: &'static UtilityTables = Box::leak(Box::new(u.clone()));
        HorizonGame::new(model, u, GameKind::G1, horizon, X_N, HorizonBeliefs::g1(prior), DEFAULT_PROFILE_CAP).unwrap()
    }

    #[test]
    fn plan_space_counts() {
        let s = PlanSpace::new(2, 2, 2);
        assert_eq!(s.num_nodes(), Some(3));
        assert_eq!(s.num_plans(), Some(8));
        assert_eq!(PlanSpace::new(2, 2, 1).num_plans(), Some(2));
        assert_eq!(s.child(0, 0, 1), 2);
        assert_eq!(PlanSpace::new(2, 2, 3).child(2, 1, 1), 6);
        for id in 0..8 {
            assert_eq!(s.encode(&s.decode(id)), id);
        }
        assert_eq!(s.decode(4), vec![1, 0, 0]);
    }

    #[test]
    fn profile_enumeration_counts() {
        let m = presets::g1_known_vuln();
        assert_eq!(enumerate_profiles(&m, GameKind::G1, 2, DEFAULT_PROFILE_CAP).unwrap().count(), 512);
        assert_eq!(enumerate_profiles(&m, GameKind::G1, 1, DEFAULT_PROFILE_CAP).unwrap().count(), 8);
        assert_eq!(enumerate_profiles(&m, GameKind::G2, 2, DEFAULT_PROFILE_CAP).unwrap().count(), 4096);
        match enumerate_profiles(&m, GameKind::G1, 2, 10) {
            Err(EquilibriumError::Explosion { count, cap }) => assert_eq!((count, cap), (512, 10)),
            _ => panic!("expected refusal"),
        }
    }

    #[test]
    fn profiles_are_distinct_and_ordered() {
        let m = presets::g1_known_vuln();
        let all: Vec<_> = enumerate_profiles(&m, GameKind::G1, 2, DEFAULT_PROFILE_CAP).unwrap().collect();
        let keys: Vec<_> = all.iter().map(|p| (p.sender, p.receiver.clone())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn single_stage_utility() {
        let m = presets::g1_known_vuln();
        let u = presets::utilities(&m);
        let game = g1_game(&m, &u, 0.5, 1);
        // plan ids coincide with the stage-0 choice at T = 1
        assert_eq!(game.sender_value(SenderType::Malicious, A_M, &[R_B]), 1.0);
        assert_eq!(game.sender_value(SenderType::Malicious, A_M, &[R_M]), -3.0);
        assert_eq!(game.sender_value(SenderType::Malicious, A_B, &[R_M]), 0.0);
    }

    #[test]
    fn always_attack_against_always_mitigate() {
        let m = presets::g1_known_vuln();
        let u = presets::utilities(&m);
        let game = g1_game(&m, &u, 0.01, 2);
        let space = game.sender_space();
        let all_am = space.encode(&[A_M, A_M, A_M]);
        let all_rm = game.receiver_space().encode(&[R_M, R_M, R_M]);
        assert!((game.sender_value(SenderType::Malicious, all_am, &[all_rm]) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn receiver_value_examples() {
        let m = presets::g1_known_vuln();
        let u = presets::utilities(&m);
        let all_rm = PlanSpace::new(2, 2, 2).encode(&[R_M, R_M, R_M]);
        let all_rb = 0;
        // certain attacker, constant mitigation, both stages from x_n earn 5 at x_n
        let game = g1_game(&m, &u, 1.0, 1);
        assert_eq!(game.receiver_value(0, R_M, [0, 0]), 5.0);
        let game = g1_game(&m, &u, 0.0, 1);
        assert_eq!(game.receiver_value(0, R_B, [0, 0]), 5.0);
        // T = 2, benign sender certain: 5 at x_n (0.8) and 1 at x_a (0.2) at stage 1
        let game = g1_game(&m, &u, 0.0, 2);
        let v = game.receiver_value(0, all_rb, [0, 0]);
        assert!((v - (5.0 + 0.8 * 5.0 + 0.2 * 1.0) / 2.0).abs() < 1e-12);
        let game = g1_game(&m, &u, 1.0, 2);
        let v = game.receiver_value(0, all_rm, [0, 0]);
        assert!((v - (5.0 + 0.8 * 5.0 + 0.2 * 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_types_average() {
        let m = presets::g2_bluffing();
        let u = presets::utilities(&m);
        let game = g1_game(&m, &u, 0.5, 2);
        // both sender types always play a_b: identical rows keep belief 0.5
        let plan = 3;
        let v = game.receiver_value(0, plan, [0, 0]);
        let only_b = g1_game(&m, &u, 0.0, 2).receiver_value(0, plan, [0, 0]);
        let only_m = g1_game(&m, &u, 1.0, 2).receiver_value(0, plan, [0, 0]);
        // each stage weighs the type-conditional utility by 0.5
        assert!((v - 0.5 * (only_b + only_m)).abs() < 1e-12);
    }

    #[test]
    fn solver_regimes() {
        let m = presets::g1_known_vuln();
        let u = presets::utilities(&m);
        let sure = g1_game(&m, &u, 1.0, 2).solve();
        assert!(sure.is_exact);
        assert_eq!(sure.receiver_reactions, vec![R_M]);
        assert_eq!(sure.sender_actions[SenderType::Malicious.index()], A_B);

        let none = g1_game(&m, &u, 0.0, 2).solve();
        assert!(none.is_exact);
        assert_eq!(none.receiver_reactions, vec![R_B]);
        assert_eq!(none.sender_actions[SenderType::Benign.index()], A_B);

        let low = g1_game(&m, &u, 0.01, 2).solve();
        assert!(low.is_exact);
        assert_eq!(low.receiver_reactions, vec![R_B]);
        assert_eq!(low.sender_actions[SenderType::Malicious.index()], A_M);
    }

    #[test]
    fn solved_profile_is_closed_under_deviation() {
        let m = presets::g1_known_vuln();
        let u = presets::utilities(&m);
        for prior in [0.0, 0.01, 0.2, 0.45, 0.5, 0.55, 0.9, 1.0] {
            let game = g1_game(&m, &u, prior, 2);
            let res = game.solve();
            assert!(res.is_exact, "prior {prior}");
            assert!(game.max_unilateral_gain(&res.profile) <= BNE_TOL);
        }
    }

    #[test]
    fn zero_horizon_rejected() {
        let m = presets::g1_known_vuln();
        let u = presets::utilities(&m);
        let err = HorizonGame::new(&m, &u, GameKind::G1, 0, X_N, HorizonBeliefs::g1(0.1), DEFAULT_PROFILE_CAP);
        assert!(matches!(err, Err(EquilibriumError::ZeroHorizon)));
    }
}
