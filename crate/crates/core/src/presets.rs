//! The two-state water-network example: models, utilities and priors.
//!
//! States are ordered `[x_n, x_a]`, actions `[a_b, a_m]`, reactions `[r_b, r_m]`.

use crate::model::{MdpModel, SenderType, UtilityTables};

pub const STATES: [&str; 2] = ["x_n", "x_a"];
pub const ACTIONS: [&str; 2] = ["a_b", "a_m"];
pub const REACTIONS: [&str; 2] = ["r_b", "r_m"];

pub const X_N: usize = 0;
pub const X_A: usize = 1;
pub const A_B: usize = 0;
pub const A_M: usize = 1;
pub const R_B: usize = 0;
pub const R_M: usize = 1;

/// Prior on the malicious sender in the known-vulnerability scenario.
pub const G1_PRIOR: f64 = 0.01;
/// `alpha`: the aware receiver's prior on the benign sender (0.3 on malicious).
pub const G2_ALPHA: f64 = 0.7;
/// `beta`: the malicious sender's prior on the unaware receiver (0.8 on aware).
pub const G2_BETA: f64 = 0.2;
/// Receding horizon used in the reference simulations.
pub const HORIZON: usize = 2;

/// `P(x_a | x_n, a, r)`, independent of the reaction.
fn from_normal(a: usize) -> [f64; 2] {
    match a {
        A_B => [0.8, 0.2],
        _ => [0.7, 0.3],
    }
}

fn build(abnormal: [[[f64; 2]; 2]; 2]) -> MdpModel {
    MdpModel::from_rows(&STATES, &ACTIONS, &REACTIONS, "x_n", |x, a, r| match x {
        X_N => from_normal(a).to_vec(),
        _ => abnormal[a][r].to_vec(),
    })
    .expect("preset shape is fixed")
}

/// Known vulnerability: staying abnormal is more likely under `a_m` and less
/// likely under `r_m`.
pub fn g1_known_vuln() -> MdpModel {
    build([
        // a_b: r_b, r_m
        [[0.5, 0.5], [0.7, 0.3]],
        // a_m: r_b, r_m
        [[0.4, 0.6], [0.6, 0.4]],
    ])
}

/// Asymmetric recognition with reaction-dependent dynamics (same kernel as
/// [`g1_known_vuln`]).
pub fn g2_nonbluffing() -> MdpModel {
    g1_known_vuln()
}

/// Asymmetric recognition where the reaction has no effect on the dynamics.
pub fn g2_bluffing() -> MdpModel {
    build([
        [[0.5, 0.5], [0.5, 0.5]],
        [[0.4, 0.6], [0.4, 0.6]],
    ])
}

/// Reference utilities for the three presets.
pub fn utilities(model: &MdpModel) -> UtilityTables {
    UtilityTables::from_fns(model, sender_utility, receiver_utility)
}

fn sender_utility(theta: SenderType, x: usize, a: usize, r: usize) -> f64 {
    match theta {
        SenderType::Benign => {
            if x == X_N {
                1.0
            } else {
                0.0
            }
        }
        SenderType::Malicious => match (a, r, x) {
            (A_B, _, _) => 0.0,
            (_, R_M, _) => -3.0,
            (_, _, X_N) => 1.0,
            _ => 2.0,
        },
    }
}

fn receiver_utility(theta: SenderType, x: usize, _a: usize, r: usize) -> f64 {
    let appropriate = match theta {
        SenderType::Benign => R_B,
        SenderType::Malicious => R_M,
    };
    match (r == appropriate, x) {
        (false, _) => 0.0,
        (true, X_N) => 5.0,
        (true, _) => 1.0,
    }
}

/// Looks a preset up by name.
pub fn by_name(name: &str) -> Option<MdpModel> {
    match name {
        "g1_known_vuln" => Some(g1_known_vuln()),
        "g2_nonbluffing" => Some(g2_nonbluffing()),
        "g2_bluffing" => Some(g2_bluffing()),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 3] = ["g1_known_vuln", "g2_nonbluffing", "g2_bluffing"];
