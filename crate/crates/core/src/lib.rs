//! ε-fractional core stability for hedonic games.
//!
//! A partition of the agents is ε-fractional core stable when at most an ε
//! fraction of coalitions (or ε probability mass under a coalition
//! distribution) block it. This crate provides the game models, coalition
//! distributions, learners that recover valuations from sampled coalitions,
//! constructive stabilizers for simple fractional and anonymous games, and
//! exact or Monte Carlo verification.
//!
//! Agents are 0-based in the API and 1-based in every file format.

pub mod coalition;
pub mod distributions;
pub mod error;
pub mod game;
pub mod instances;
pub mod io;
pub mod learning;
pub mod limits;
pub mod linsolve;
pub mod partition;
pub mod seeds;
pub mod stabilizers;
pub mod verification;

pub use coalition::{AgentId, Coalition};
pub use distributions::{CoalitionDistribution, DistSpec, SizeInterval};
pub use error::{Error, Result};
pub use game::{AnonymousHg, Game, HedonicGame, SimpleFhg, SinglePeakedCertificate, SizeValuations};
pub use partition::Partition;
