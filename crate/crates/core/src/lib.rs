//! Bayesian defense mechanisms against deceptive attackers on finite MDPs:
//! stochastic signaling games, receding-horizon equilibria, simulation and
//! executable checks of the asymptotic-security properties.

pub mod belief;
pub mod equilibrium;
pub mod model;
pub mod presets;
pub mod analysis;
pub mod engine;
pub mod cli_io;
pub mod reproduce;
