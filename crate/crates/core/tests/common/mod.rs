//! Brute-force path-enumeration oracle for the horizon game.
//!
//! Values are recomputed by listing every state path prefix and weighting
//! each stage by the prefix probability under each opponent type and the
//! batch posterior of the whole prefix, independently of the solver's
//! recursive walk with sequential updates.

use bayes_defense::equilibrium::{HorizonBeliefs, HorizonGame, HorizonStrategyProfile};
use bayes_defense::model::{MdpModel, SenderType, UtilityTables};

/// All paths `(x_0 = start, ..., x_{len-1})`.
fn paths(num_states: usize, start: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![start]];
    for _ in 1..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..num_states).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Breadth-first node of the prefix `path[..=depth]`.
fn node(num_states: usize, path: &[usize], depth: usize) -> usize {
    let offset: usize = (0..depth).map(|j| num_states.pow(j as u32)).sum();
    let within = path[1..=depth].iter().fold(0, |acc, &x| acc * num_states + x);
    offset + within
}

/// Probability of `path[..=depth]` when the sender plays `splan` and the
/// receiver `rplan`.
fn prefix_prob(m: &MdpModel, path: &[usize], depth: usize, splan: &[usize], rplan: &[usize]) -> f64 {
    (0..depth)
        .map(|i| {
            let n = node(m.num_states(), path, i);
            m.prob(path[i + 1], path[i], splan[n], rplan[n])
        })
        .product()
}

/// Posterior from `prior` given per-hypothesis prefix likelihoods; zero
/// evidence keeps the prior.
fn batch_posterior(prior: &[f64], likelihood: &[f64]) -> Vec<f64> {
    let evidence: f64 = prior.iter().zip(likelihood).map(|(p, l)| p * l).sum();
    if evidence == 0.0 {
        return prior.to_vec();
    }
    prior.iter().zip(likelihood).map(|(p, l)| p * l / evidence).collect()
}

pub struct Oracle<'a> {
    pub model: &'a MdpModel,
    pub u: &'a UtilityTables,
    pub start: usize,
    pub horizon: usize,
    pub beliefs: HorizonBeliefs,
}

impl Oracle<'_> {
    pub fn sender(&self, game: &HorizonGame<'_>, theta: SenderType, plan: usize, receiver: &[usize]) -> f64 {
        let m = self.model;
        let splan = game.sender_plan(plan);
        let rplans: Vec<&[usize]> = receiver.iter().map(|&p| game.receiver_plan(p)).collect();
        let prior = &self.beliefs.sender_weights[theta.index()];
        let mut total = 0.0;
        for depth in 0..self.horizon {
            for path in paths(m.num_states(), self.start, depth + 1) {
                let n = node(m.num_states(), &path, depth);
                let lik: Vec<f64> = rplans.iter().map(|rp| prefix_prob(m, &path, depth, splan, rp)).collect();
                let post = batch_posterior(prior, &lik);
                for (h, rp) in rplans.iter().enumerate() {
                    total += lik[h] * post[h] * self.u.sender(theta, path[depth], splan[n], rp[n]);
                }
            }
        }
        total / self.horizon as f64
    }

    pub fn receiver(&self, game: &HorizonGame<'_>, hyp: usize, plan: usize, sender: [usize; 2]) -> f64 {
        let m = self.model;
        let rplan = game.receiver_plan(plan);
        let splans = [game.sender_plan(sender[0]), game.sender_plan(sender[1])];
        let pm = self.beliefs.receiver_malicious[hyp];
        let prior = [1.0 - pm, pm];
        let mut total = 0.0;
        for depth in 0..self.horizon {
            for path in paths(m.num_states(), self.start, depth + 1) {
                let n = node(m.num_states(), &path, depth);
                let lik: Vec<f64> = splans.iter().map(|sp| prefix_prob(m, &path, depth, sp, rplan)).collect();
                let post = batch_posterior(&prior, &lik);
                for theta in SenderType::ALL {
                    let t = theta.index();
                    total += lik[t] * post[t] * self.u.receiver(theta, path[depth], splans[t][n], rplan[n]);
                }
            }
        }
        total / self.horizon as f64
    }
}

/// Largest unilateral gain of `profile` under oracle values.
pub fn oracle_gain(game: &HorizonGame<'_>, oracle: &Oracle<'_>, profile: &HorizonStrategyProfile) -> f64 {
    let mut gain: f64 = 0.0;
    for theta in SenderType::ALL {
        let cur = oracle.sender(game, theta, profile.sender[theta.index()], &profile.receiver);
        for alt in 0..game.num_sender_plans() {
            gain = gain.max(oracle.sender(game, theta, alt, &profile.receiver) - cur);
        }
    }
    for (h, &plan) in profile.receiver.iter().enumerate() {
        let cur = oracle.receiver(game, h, plan, profile.sender);
        for alt in 0..game.num_receiver_plans() {
            gain = gain.max(oracle.receiver(game, h, alt, profile.sender) - cur);
        }
    }
    gain
}
